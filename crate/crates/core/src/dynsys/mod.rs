//! Full-order dynamical systems `x' = f(t, x)` and the benchmark discretizations.

pub mod cavity;
pub mod family;
pub mod fourier;
pub mod linear;
pub mod periodic;

use std::ops::Range;

use ndarray::{Array1, ArrayView1, ArrayView2};

use crate::error::Result;
use crate::real::Real;
use crate::rom::ReducedField;
use crate::timestep::LinearOperator;

pub use cavity::{make_cavity, thom_boundary, CavityModel, CavitySpec, WallClosure, WallVorticity};
pub use family::{interpolate_to_fine, make_coarse_model, restrict_to_coarse, ModelFamily};
pub use fourier::{fourier_filter, trigonometric_interpolation};
pub use linear::LinearModel;
pub use periodic::{cubic_spline_ic, cubic_spline_profile, make_advection_diffusion, make_burgers, GridSpec1D, PeriodicModel};

/// A dimension-`n` ODE split as `f(t, x) = g(t, x) + L x` for IMEX integration.
pub trait FullModel<T: Real>: Send + Sync {
    fn dim(&self) -> usize;

    fn initial_state(&self) -> Array1<T>;

    /// `g(t, x)`, the explicitly integrated part.
    fn explicit_part(&self, t: T, x: ArrayView1<'_, T>) -> Result<Array1<T>>;

    /// `L`, the implicitly integrated linear part.
    fn stiff_operator(&self) -> Option<&dyn LinearOperator<T>>;

    fn eval_field(&self, t: T, x: ArrayView1<'_, T>) -> Result<Array1<T>> {
        let mut f = self.explicit_part(t, x)?;
        if let Some(l) = self.stiff_operator() {
            f += &l.apply(x);
        }
        Ok(f)
    }

    /// Row ranges of physically distinct fields. Ensembles are split along these
    /// ranges before basis extraction.
    fn field_blocks(&self) -> Vec<Range<usize>> {
        vec![0..self.dim()]
    }

    /// Projects a state back onto the algebraic constraints of the model.
    fn enforce_constraints(&self, _x: &mut Array1<T>) -> Result<()> {
        Ok(())
    }

    /// Advective Courant number of `x` for step `dt`.
    fn cfl_number(&self, _x: ArrayView1<'_, T>, _dt: T) -> Option<T> {
        None
    }

    /// Specialised evaluation of `Φᵀ f(t, Φz)` for the columns of `phi`, when the
    /// model has one cheaper than lifting.
    fn galerkin(&self, _phi: ArrayView2<'_, T>) -> Result<Option<Box<dyn ReducedField<T>>>> {
        Ok(None)
    }

    /// Family tag and parameters, used to build coarse companions.
    fn family(&self) -> Option<ModelFamily<T>> {
        None
    }
}
