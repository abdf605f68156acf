//! Periodic 1D benchmarks on `[0, L)`: linear advection–diffusion and viscous Burgers,
//! first-order upwind advection and central-difference diffusion.

use ndarray::{Array1, ArrayView1};

use crate::dynsys::{FullModel, ModelFamily};
use crate::error::{Result, SirmError};
use crate::real::Real;
use crate::timestep::{CirculantTridiagonal, LinearOperator};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec1D<T> {
    pub n_points: usize,
    pub domain_length: T,
    pub spacing: T,
}

impl<T: Real> GridSpec1D<T> {
    pub fn new(n_points: usize, domain_length: T) -> Result<Self> {
        if n_points < 4 {
            return Err(SirmError::InvalidParameter(format!("periodic grid needs at least 4 points, got {n_points}")));
        }
        if !(domain_length > T::zero()) {
            return Err(SirmError::InvalidParameter("domain length must be positive".into()));
        }
        Ok(Self { n_points, domain_length, spacing: domain_length / T::from_count(n_points) })
    }

    pub fn unit(n_points: usize) -> Result<Self> {
        Self::new(n_points, T::one())
    }

    pub fn node(&self, j: usize) -> T {
        self.spacing * T::from_count(j)
    }

    pub fn nodes(&self) -> Array1<T> {
        (0..self.n_points).map(|j| self.node(j)).collect()
    }
}

/// Cubic spline bump as a function of `s ≥ 0`.
pub fn cubic_spline_profile<T: Real>(s: T) -> T {
    let one = T::one();
    let two = T::lit(2.0);
    if s <= one {
        one - T::lit(1.5) * s * s + T::lit(0.75) * s * s * s
    } else if s <= two {
        let d = two - s;
        T::lit(0.25) * d * d * d
    } else {
        T::zero()
    }
}

/// The benchmark initial profile with `s = 10·|x − 1/3|`.
pub fn cubic_spline_ic<T: Real>(grid: &GridSpec1D<T>) -> Array1<T> {
    let center = T::one() / T::lit(3.0);
    grid.nodes().mapv(|x| cubic_spline_profile(T::lit(10.0) * (x - center).abs()))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Advection<T> {
    /// `−c u_x` with constant `c ≥ 0`.
    Linear { c: T },
    /// `−u u_x`, upwinded by the local sign of `u`.
    Burgers,
}

#[derive(Debug, Clone)]
pub struct PeriodicModel<T: Real> {
    grid: GridSpec1D<T>,
    advection: Advection<T>,
    nu: T,
    diffusion: Option<CirculantTridiagonal<T>>,
    initial: Array1<T>,
}

impl<T: Real> PeriodicModel<T> {
    pub fn new(grid: GridSpec1D<T>, advection: Advection<T>, nu: T) -> Result<Self> {
        if nu < T::zero() || !nu.is_finite() {
            return Err(SirmError::InvalidParameter(format!("viscosity must be non-negative, got {nu}")));
        }
        if let Advection::Linear { c } = advection {
            if c < T::zero() || !c.is_finite() {
                return Err(SirmError::InvalidParameter(format!("advection speed must be non-negative, got {c}")));
            }
        }
        let h = grid.spacing;
        let diffusion = (nu > T::zero()).then(|| CirculantTridiagonal::second_difference(grid.n_points, nu / (h * h)));
        let initial = cubic_spline_ic(&grid);
        Ok(Self { grid, advection, nu, diffusion, initial })
    }

    pub fn with_initial_state(mut self, x0: Array1<T>) -> Result<Self> {
        if x0.len() != self.grid.n_points {
            return Err(SirmError::ShapeMismatch("initial state does not match grid".into()));
        }
        self.initial = x0;
        Ok(self)
    }

    pub fn grid(&self) -> &GridSpec1D<T> {
        &self.grid
    }

    pub fn advection(&self) -> Advection<T> {
        self.advection
    }

    pub fn viscosity(&self) -> T {
        self.nu
    }
}

pub fn make_advection_diffusion<T: Real>(grid: GridSpec1D<T>, c: T, nu: T) -> Result<PeriodicModel<T>> {
    PeriodicModel::new(grid, Advection::Linear { c }, nu)
}

pub fn make_burgers<T: Real>(grid: GridSpec1D<T>, nu: T) -> Result<PeriodicModel<T>> {
    PeriodicModel::new(grid, Advection::Burgers, nu)
}

impl<T: Real> FullModel<T> for PeriodicModel<T> {
    fn dim(&self) -> usize {
        self.grid.n_points
    }

    fn initial_state(&self) -> Array1<T> {
        self.initial.clone()
    }

    fn explicit_part(&self, _t: T, x: ArrayView1<'_, T>) -> Result<Array1<T>> {
        let n = self.grid.n_points;
        if x.len() != n {
            return Err(SirmError::ShapeMismatch(format!("state has length {}, expected {n}", x.len())));
        }
        let inv_h = T::one() / self.grid.spacing;
        let mut g = Array1::zeros(n);
        match self.advection {
            Advection::Linear { c } => {
                let s = -c * inv_h;
                for j in 0..n {
                    g[j] = s * (x[j] - x[(j + n - 1) % n]);
                }
            }
            Advection::Burgers => {
                for j in 0..n {
                    let u = x[j];
                    let du = if u > T::zero() { u - x[(j + n - 1) % n] } else { x[(j + 1) % n] - u };
                    g[j] = -u * du * inv_h;
                }
            }
        }
        Ok(g)
    }

    fn stiff_operator(&self) -> Option<&dyn LinearOperator<T>> {
        self.diffusion.as_ref().map(|d| d as &dyn LinearOperator<T>)
    }

    fn cfl_number(&self, x: ArrayView1<'_, T>, dt: T) -> Option<T> {
        let speed = match self.advection {
            Advection::Linear { c } => c,
            Advection::Burgers => x.iter().fold(T::zero(), |m, v| m.max(v.abs())),
        };
        Some(speed * dt / self.grid.spacing)
    }

    fn family(&self) -> Option<ModelFamily<T>> {
        Some(match self.advection {
            Advection::Linear { c } => ModelFamily::AdvectionDiffusion { grid: self.grid, c, nu: self.nu },
            Advection::Burgers => ModelFamily::Burgers { grid: self.grid, nu: self.nu },
        })
    }
}
