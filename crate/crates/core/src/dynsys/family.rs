//! Model families and transfers between a fine model and its coarse companion.

use ndarray::{Array1, ArrayView1};

use crate::dynsys::cavity::{bilinear_refine, inject, make_cavity, CavitySpec};
use crate::dynsys::fourier::{fourier_filter, trigonometric_interpolation};
use crate::dynsys::periodic::{make_advection_diffusion, make_burgers, GridSpec1D};
use crate::dynsys::FullModel;
use crate::error::{Result, SirmError};
use crate::real::Real;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ModelFamily<T> {
    AdvectionDiffusion { grid: GridSpec1D<T>, c: T, nu: T },
    Burgers { grid: GridSpec1D<T>, nu: T },
    Cavity(CavitySpec<T>),
}

impl<T: Real> ModelFamily<T> {
    pub fn build(&self) -> Result<Box<dyn FullModel<T>>> {
        Ok(match *self {
            ModelFamily::AdvectionDiffusion { grid, c, nu } => Box::new(make_advection_diffusion(grid, c, nu)?),
            ModelFamily::Burgers { grid, nu } => Box::new(make_burgers(grid, nu)?),
            ModelFamily::Cavity(spec) => Box::new(make_cavity(spec)?),
        })
    }

    pub fn name(&self) -> &'static str {
        match self {
            ModelFamily::AdvectionDiffusion { .. } => "adv_diff",
            ModelFamily::Burgers { .. } => "burgers",
            ModelFamily::Cavity(_) => "cavity",
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            ModelFamily::AdvectionDiffusion { grid, .. } | ModelFamily::Burgers { grid, .. } => grid.n_points,
            ModelFamily::Cavity(spec) => spec.dim(),
        }
    }

    /// Same family on a grid coarser by `factor`.
    pub fn coarsen(&self, factor: usize) -> Result<Self> {
        if factor == 0 {
            return Err(SirmError::InvalidParameter("coarsening factor must be positive".into()));
        }
        let coarse_grid = |g: &GridSpec1D<T>| -> Result<GridSpec1D<T>> {
            if g.n_points % factor != 0 {
                return Err(SirmError::InvalidParameter(format!(
                    "{} grid points are not divisible by coarsening factor {factor}",
                    g.n_points
                )));
            }
            GridSpec1D::new(g.n_points / factor, g.domain_length)
        };
        Ok(match *self {
            ModelFamily::AdvectionDiffusion { grid, c, nu } => {
                ModelFamily::AdvectionDiffusion { grid: coarse_grid(&grid)?, c, nu }
            }
            ModelFamily::Burgers { grid, nu } => ModelFamily::Burgers { grid: coarse_grid(&grid)?, nu },
            ModelFamily::Cavity(spec) => {
                let cells = spec.n_side - 1;
                if cells % factor != 0 {
                    return Err(SirmError::InvalidParameter(format!(
                        "{cells} cavity cells per side are not divisible by coarsening factor {factor}"
                    )));
                }
                let coarse = CavitySpec::new(cells / factor + 1, spec.reynolds)?;
                ModelFamily::Cavity(CavitySpec {
                    lid_speed: spec.lid_speed,
                    closure: spec.closure,
                    preconditioner: spec.preconditioner,
                    poisson_tol: spec.poisson_tol,
                    ..coarse
                })
            }
        })
    }
}

impl<T: Real> ModelFamily<T> {
    /// Same periodic family on a grid of `points` nodes over the same domain.
    pub fn resized(&self, points: usize) -> Result<Self> {
        Ok(match *self {
            ModelFamily::AdvectionDiffusion { grid, c, nu } => {
                ModelFamily::AdvectionDiffusion { grid: GridSpec1D::new(points, grid.domain_length)?, c, nu }
            }
            ModelFamily::Burgers { grid, nu } => ModelFamily::Burgers { grid: GridSpec1D::new(points, grid.domain_length)?, nu },
            ModelFamily::Cavity(_) => {
                return Err(SirmError::InvalidParameter("cavity grids are coarsened by a factor, not a point count".into()))
            }
        })
    }
}

pub fn make_coarse_model<T: Real>(fine: &ModelFamily<T>, factor: usize) -> Result<Box<dyn FullModel<T>>> {
    fine.coarsen(factor)?.build()
}

fn check_pair<T: Real>(coarse: &ModelFamily<T>, fine: &ModelFamily<T>) -> Result<()> {
    if std::mem::discriminant(coarse) != std::mem::discriminant(fine) {
        return Err(SirmError::InvalidParameter(format!(
            "cannot transfer between {} and {} models",
            coarse.name(),
            fine.name()
        )));
    }
    Ok(())
}

/// Restricts a fine state onto the coarse grid by nodal injection.
pub fn restrict_to_coarse<T: Real>(
    x_fine: ArrayView1<'_, T>,
    fine: &ModelFamily<T>,
    coarse: &ModelFamily<T>,
) -> Result<Array1<T>> {
    check_pair(coarse, fine)?;
    if x_fine.len() != fine.dim() {
        return Err(SirmError::ShapeMismatch("state does not match the fine model".into()));
    }
    match (fine, coarse) {
        (ModelFamily::Cavity(f), ModelFamily::Cavity(c)) => {
            let nn = f.nodes();
            let psi = inject(x_fine.slice(ndarray::s![..nn]), f.n_side, c.n_side)?;
            let omega = inject(x_fine.slice(ndarray::s![nn..]), f.n_side, c.n_side)?;
            Ok(ndarray::concatenate![ndarray::Axis(0), psi, omega])
        }
        _ => {
            let (nf, nc) = (fine.dim(), coarse.dim());
            if nc > nf {
                return Err(SirmError::InvalidParameter(format!("cannot restrict {nf} points onto {nc}")));
            }
            if nf % nc == 0 {
                return Ok(x_fine.iter().step_by(nf / nc).copied().collect());
            }
            // periodic linear interpolation at the coarse nodes
            Ok((0..nc)
                .map(|j| {
                    let pos = T::from_count(j * nf) / T::from_count(nc);
                    let left = pos.floor();
                    let w = pos - left;
                    let i = left.to_usize().unwrap_or(0) % nf;
                    x_fine[i] * (T::one() - w) + x_fine[(i + 1) % nf] * w
                })
                .collect())
        }
    }
}

/// Transfers a coarse state to the fine grid: Fourier filter then trigonometric
/// interpolation for periodic grids, bilinear interpolation for the cavity.
pub fn interpolate_to_fine<T: Real>(
    u_coarse: ArrayView1<'_, T>,
    coarse: &ModelFamily<T>,
    fine: &ModelFamily<T>,
    fourier_modes: Option<usize>,
) -> Result<Array1<T>> {
    check_pair(coarse, fine)?;
    if u_coarse.len() != coarse.dim() {
        return Err(SirmError::ShapeMismatch("state does not match the coarse model".into()));
    }
    match (coarse, fine) {
        (ModelFamily::Cavity(c), ModelFamily::Cavity(f)) => {
            let nn = c.nodes();
            let psi = bilinear_refine(u_coarse.slice(ndarray::s![..nn]), c.n_side, f.n_side)?;
            let omega = bilinear_refine(u_coarse.slice(ndarray::s![nn..]), c.n_side, f.n_side)?;
            Ok(ndarray::concatenate![ndarray::Axis(0), psi, omega])
        }
        _ => {
            let (nc, nf) = (coarse.dim(), fine.dim());
            if nf < nc {
                return Err(SirmError::InvalidParameter(format!("cannot interpolate {nc} points onto {nf}")));
            }
            let smooth = match fourier_modes {
                Some(modes) => fourier_filter(u_coarse, modes)?,
                None => u_coarse.to_owned(),
            };
            trigonometric_interpolation(smooth.view(), nf)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn adv(n: usize) -> ModelFamily<f64> {
        ModelFamily::AdvectionDiffusion { grid: GridSpec1D::unit(n).unwrap(), c: 0.5, nu: 1e-3 }
    }

    #[test]
    fn coarse_sizes() {
        let c = adv(500).coarsen(25).unwrap();
        assert_eq!(c.dim(), 20);
        assert_eq!(adv(500).coarsen(1).unwrap(), adv(500));
        assert!(adv(500).coarsen(3).is_err());
        let cav = ModelFamily::Cavity(CavitySpec::new(129, 1000.0).unwrap());
        match cav.coarsen(4).unwrap() {
            ModelFamily::Cavity(s) => assert_eq!(s.n_side, 33),
            _ => unreachable!(),
        }
        assert!(cav.coarsen(3).is_err());
    }

    #[test]
    fn transfer_rejects_mismatched_families() {
        let b = ModelFamily::Burgers { grid: GridSpec1D::unit(20).unwrap(), nu: 1e-3 };
        let u = Array1::zeros(20);
        assert!(interpolate_to_fine(u.view(), &b, &adv(500), None).is_err());
        assert!(interpolate_to_fine(Array1::zeros(600).view(), &adv(600), &adv(500), None).is_err());
        assert!(restrict_to_coarse(Array1::zeros(20).view(), &adv(20), &adv(30)).is_err());
    }

    #[test]
    fn incommensurate_periodic_transfer() {
        let fine = adv(500);
        let coarse = fine.resized(30).unwrap();
        assert_eq!(coarse.dim(), 30);
        let x: Array1<f64> = (0..500).map(|j| (2.0 * std::f64::consts::PI * j as f64 / 500.0).cos()).collect();
        let xc = restrict_to_coarse(x.view(), &fine, &coarse).unwrap();
        for (j, v) in xc.iter().enumerate() {
            let exact = (2.0 * std::f64::consts::PI * j as f64 / 30.0).cos();
            assert!((v - exact).abs() < 1e-4);
        }
        let up = interpolate_to_fine(xc.view(), &coarse, &fine, Some(5)).unwrap();
        assert!(up.iter().zip(&x).all(|(a, b)| (a - b).abs() < 1e-3));
        let cav = ModelFamily::Cavity(CavitySpec::<f64>::new(17, 100.0).unwrap());
        assert!(cav.resized(9).is_err());
    }

    #[test]
    fn constant_and_identity_transfers() {
        let ones = Array1::from_elem(20, 1.0);
        let up = interpolate_to_fine(ones.view(), &adv(20), &adv(500), Some(10)).unwrap();
        assert!(up.iter().all(|v| (v - 1.0).abs() < 1e-13));
        let x: Array1<f64> = (0..20).map(|i| (i as f64).cos()).collect();
        let same = interpolate_to_fine(x.view(), &adv(20), &adv(20), None).unwrap();
        assert!(same.iter().zip(&x).all(|(a, b)| (a - b).abs() < 1e-14));
    }
}
