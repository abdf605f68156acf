//! Online model reduction by subspace iteration.
//!
//! A full-order model `x' = f(t, x)` is approximated by repeatedly building a POD
//! (or Gram–Schmidt) subspace from snapshots and tangents of the current
//! approximate trajectory, solving the Galerkin reduced model in that subspace, and
//! lifting the result back, until successive trajectories agree. The local variant
//! runs the same loop on consecutive subintervals of the time span.
//!
//! All numerics are generic over [`Real`] (`f32` or `f64`); the `*64` / `*32`
//! aliases below fix the scalar.

pub mod dynsys;
pub mod error;
pub mod linalg;
pub mod local;
pub mod metrics;
pub mod real;
pub mod rom;
pub mod sirm;
pub mod timestep;

pub use dynsys::{
    cubic_spline_ic, fourier_filter, interpolate_to_fine, make_advection_diffusion, make_burgers, make_cavity,
    make_coarse_model, thom_boundary, CavityModel, CavitySpec, FullModel, GridSpec1D, LinearModel, ModelFamily,
    PeriodicModel, WallClosure,
};
pub use error::{Result, SirmError};
pub use local::{
    local_inner_iteration, local_sirm_solve, local_sirm_solve_with_reference, time_history_trial, LocalRunReport,
    PartitionConfig, SubintervalRecord, TrialStrategy,
};
pub use metrics::{compare_against_reference, pearson, ErrorMetrics};
pub use real::Real;
pub use rom::{
    assemble_information_matrix, build_reduced_model, gram_schmidt_basis, pod_basis, truncation_error_estimate, Basis,
    EnergyCriterion, InformationMatrix, ReducedField, ReducedModel,
};
pub use sirm::{
    dirm_effective_dimension, dirm_solve, posterior_error, sirm_solve, sirm_solve_with_reference, BasisMethod,
    CoarseTrial, ConvergenceReport, EnsembleKind, IterationRecord, IterationSettings, SirmConfig, TrialSpec,
};
pub use timestep::{
    integrate_full, integrate_full_from, integrate_reduced, integrate_reduced_model, solve_cyclic_tridiagonal,
    IntegratorConfig, LinearSolveStats, Preconditioner, Trajectory,
};

pub type Trajectory64 = Trajectory<f64>;
pub type Trajectory32 = Trajectory<f32>;
pub type Basis64 = Basis<f64>;
pub type Basis32 = Basis<f32>;
pub type IntegratorConfig64 = IntegratorConfig<f64>;
pub type IntegratorConfig32 = IntegratorConfig<f32>;
pub type SirmConfig64 = SirmConfig<f64>;
pub type SirmConfig32 = SirmConfig<f32>;
pub type CavitySpec64 = CavitySpec<f64>;
pub type GridSpec1D64 = GridSpec1D<f64>;
pub type GridSpec1D32 = GridSpec1D<f32>;
