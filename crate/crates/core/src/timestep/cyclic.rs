//! Periodic (cyclic) tridiagonal systems via the Thomas algorithm with a
//! Sherman–Morrison correction for the two corner entries.

use crate::error::{Result, SirmError};
use crate::real::Real;
use crate::timestep::operator::LinearSolveStats;

/// Solves the cyclic tridiagonal system
///
/// `sub[j]·x[j−1] + diag[j]·x[j] + sup[j]·x[j+1] = rhs[j]` with indices taken modulo `n`,
///
/// so `sub[0]` is the top-right corner and `sup[n−1]` the bottom-left corner.
pub fn solve_cyclic_tridiagonal<T: Real>(
    sub: &[T],
    diag: &[T],
    sup: &[T],
    rhs: &[T],
) -> Result<(Vec<T>, LinearSolveStats)> {
    let n = diag.len();
    if sub.len() != n || sup.len() != n || rhs.len() != n {
        return Err(SirmError::ShapeMismatch("cyclic tridiagonal bands".into()));
    }
    if n < 3 {
        return Err(SirmError::InvalidParameter(format!(
            "cyclic tridiagonal solve needs n >= 3, got {n}"
        )));
    }
    let alpha = sub[0];
    let beta = sup[n - 1];
    let gamma = -diag[0];
    if gamma == T::zero() {
        return Err(SirmError::ZeroPivot("cyclic tridiagonal (leading diagonal)"));
    }

    let mut bb = diag.to_vec();
    bb[0] = diag[0] - gamma;
    bb[n - 1] = diag[n - 1] - alpha * beta / gamma;

    let lower = &sub[1..];
    let upper = &sup[..n - 1];
    let x = thomas(lower, &bb, upper, rhs)?;

    let mut u = vec![T::zero(); n];
    u[0] = gamma;
    u[n - 1] = beta;
    let z = thomas(lower, &bb, upper, &u)?;

    let denom = T::one() + z[0] + alpha * z[n - 1] / gamma;
    if denom == T::zero() {
        return Err(SirmError::ZeroPivot("cyclic tridiagonal (Sherman–Morrison)"));
    }
    let fact = (x[0] + alpha * x[n - 1] / gamma) / denom;
    let sol: Vec<T> = x.iter().zip(z.iter()).map(|(&xi, &zi)| xi - fact * zi).collect();

    let residual = cyclic_residual(sub, diag, sup, &sol, rhs);
    Ok((sol, LinearSolveStats { iterations: 1, residual_norm: residual }))
}

/// Plain Thomas algorithm; `lower` and `upper` have length `n − 1`.
fn thomas<T: Real>(lower: &[T], diag: &[T], upper: &[T], rhs: &[T]) -> Result<Vec<T>> {
    let n = diag.len();
    let mut gam = vec![T::zero(); n];
    let mut x = vec![T::zero(); n];
    let mut bet = diag[0];
    if bet == T::zero() {
        return Err(SirmError::ZeroPivot("Thomas forward sweep"));
    }
    x[0] = rhs[0] / bet;
    for j in 1..n {
        gam[j] = upper[j - 1] / bet;
        bet = diag[j] - lower[j - 1] * gam[j];
        if bet == T::zero() {
            return Err(SirmError::ZeroPivot("Thomas forward sweep"));
        }
        x[j] = (rhs[j] - lower[j - 1] * x[j - 1]) / bet;
    }
    for j in (0..n - 1).rev() {
        let next = x[j + 1];
        x[j] -= gam[j + 1] * next;
    }
    Ok(x)
}

fn cyclic_residual<T: Real>(sub: &[T], diag: &[T], sup: &[T], x: &[T], b: &[T]) -> f64 {
    let n = x.len();
    let mut rn = T::zero();
    let mut bn = T::zero();
    for j in 0..n {
        let ax = sub[j] * x[(j + n - 1) % n] + diag[j] * x[j] + sup[j] * x[(j + 1) % n];
        let r = b[j] - ax;
        rn += r * r;
        bn += b[j] * b[j];
    }
    if bn > T::zero() {
        (rn / bn).sqrt().to_f64_lossy()
    } else {
        rn.sqrt().to_f64_lossy()
    }
}
