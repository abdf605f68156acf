//! Trial solutions `x̂⁰(t)` that seed the iteration.

use ndarray::ArrayView1;

use crate::dynsys::{interpolate_to_fine, restrict_to_coarse, FullModel};
use crate::error::{Result, SirmError};
use crate::real::Real;
use crate::sirm::constant_trajectory;
use crate::timestep::{integrate_full_from, IntegratorConfig, Trajectory};

/// Coarse-grid companion run used as a trial.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CoarseTrial {
    /// Grid coarsening factor.
    pub factor: usize,
    /// Explicit periodic coarse grid size, overriding `factor`; need not divide the fine size.
    pub points: Option<usize>,
    /// Coarse step as a multiple of the fine step; defaults to the grid ratio.
    pub dt_factor: Option<usize>,
    /// Low-pass applied before interpolating periodic trials to the fine grid.
    pub fourier_modes: Option<usize>,
}

impl CoarseTrial {
    pub fn new(factor: usize) -> Self {
        Self { factor, points: None, dt_factor: None, fourier_modes: None }
    }

    /// Periodic coarse grid with exactly `points` nodes.
    pub fn with_points(points: usize) -> Self {
        Self { factor: 1, points: Some(points), dt_factor: None, fourier_modes: None }
    }

    pub fn with_fourier_modes(mut self, modes: usize) -> Self {
        self.fourier_modes = Some(modes);
        self
    }

    pub fn with_dt_factor(mut self, dt_factor: usize) -> Self {
        self.dt_factor = Some(dt_factor);
        self
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum TrialSpec<T> {
    /// `x̂⁰(t) = x₀`
    ConstantIc,
    CoarseModel(CoarseTrial),
    Supplied(Trajectory<T>),
}

/// Trial sampled at `times`.
pub fn build_trial<T: Real>(
    model: &dyn FullModel<T>,
    x0: ArrayView1<'_, T>,
    spec: &TrialSpec<T>,
    integ: &IntegratorConfig<T>,
    times: &[T],
) -> Result<Trajectory<T>> {
    match spec {
        TrialSpec::ConstantIc => constant_trajectory(x0, times),
        TrialSpec::CoarseModel(c) => coarse_trial(model, x0, integ, times, c),
        TrialSpec::Supplied(traj) => {
            if traj.dim() != model.dim() {
                return Err(SirmError::ShapeMismatch("supplied trial does not match the model".into()));
            }
            traj.resample(times)
        }
    }
}

/// Runs the coarse companion from the restricted start state, samples it by linear
/// interpolation in time and transfers every sample to the fine grid.
pub fn coarse_trial<T: Real>(
    model: &dyn FullModel<T>,
    x0: ArrayView1<'_, T>,
    integ: &IntegratorConfig<T>,
    times: &[T],
    spec: &CoarseTrial,
) -> Result<Trajectory<T>> {
    let fine = model
        .family()
        .ok_or_else(|| SirmError::InvalidParameter("model has no coarse companion".into()))?;
    let (coarse, ratio) = match spec.points {
        Some(p) => {
            let c = fine.resized(p)?;
            let ratio = (fine.dim() as f64 / p as f64).round().max(1.0) as usize;
            (c, ratio)
        }
        None => (fine.coarsen(spec.factor)?, spec.factor),
    };
    let coarse_model = coarse.build()?;
    let mut xc = restrict_to_coarse(x0, &fine, &coarse)?;
    coarse_model.enforce_constraints(&mut xc)?;

    let span = integ.t_end - integ.t_start;
    let dt = integ.dt * T::from_count(spec.dt_factor.unwrap_or(ratio).max(1));
    let steps = (span / dt).round().max(T::one());
    let ccfg = IntegratorConfig::new(span / steps, integ.t_start, integ.t_end);
    let ctraj = integrate_full_from(coarse_model.as_ref(), xc, &ccfg)?;

    let cols = times
        .iter()
        .map(|&t| {
            let uc = ctraj.at(t)?;
            let mut x = interpolate_to_fine(uc.view(), &coarse, &fine, spec.fourier_modes)?;
            model.enforce_constraints(&mut x)?;
            Ok(x)
        })
        .collect::<Result<Vec<_>>>()?;
    Trajectory::from_columns(times.to_vec(), &cols)
}
