use ndarray::{Array1, Array2, ArrayView1, ArrayViewMut1};

use crate::error::{Result, SirmError};
use crate::real::Real;
use crate::timestep::cyclic::solve_cyclic_tridiagonal;
use crate::timestep::dense::LuFactor;

/// Outcome of a linear solve.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct LinearSolveStats {
    pub iterations: usize,
    /// Relative residual `‖b − Ax‖ / ‖b‖` (absolute when `b = 0`).
    pub residual_norm: f64,
}

/// Linear operator treated implicitly by the Crank–Nicolson half of the IMEX scheme.
pub trait LinearOperator<T: Real>: Send + Sync {
    fn dim(&self) -> usize;

    /// `y ← L x`
    fn apply_into(&self, x: ArrayView1<'_, T>, y: ArrayViewMut1<'_, T>);

    fn apply(&self, x: ArrayView1<'_, T>) -> Array1<T> {
        let mut y = Array1::zeros(self.dim());
        self.apply_into(x, y.view_mut());
        y
    }

    /// Solves `(I − αL) y = rhs`.
    fn solve_shifted(&self, alpha: T, rhs: ArrayView1<'_, T>) -> Result<(Array1<T>, LinearSolveStats)>;
}

/// Constant-coefficient periodic tridiagonal operator
/// `(L x)_j = lower·x_{j−1} + center·x_j + upper·x_{j+1}` with wraparound.
#[derive(Debug, Clone)]
pub struct CirculantTridiagonal<T> {
    pub n: usize,
    pub lower: T,
    pub center: T,
    pub upper: T,
}

impl<T: Real> CirculantTridiagonal<T> {
    /// Periodic second difference `scale·(x_{j−1} − 2x_j + x_{j+1})`.
    pub fn second_difference(n: usize, scale: T) -> Self {
        Self {
            n,
            lower: scale,
            center: -(scale + scale),
            upper: scale,
        }
    }

    pub fn to_dense(&self) -> Array2<T> {
        let n = self.n;
        let mut a = Array2::zeros((n, n));
        for j in 0..n {
            a[[j, (j + n - 1) % n]] += self.lower;
            a[[j, j]] += self.center;
            a[[j, (j + 1) % n]] += self.upper;
        }
        a
    }
}

impl<T: Real> LinearOperator<T> for CirculantTridiagonal<T> {
    fn dim(&self) -> usize {
        self.n
    }

    fn apply_into(&self, x: ArrayView1<'_, T>, mut y: ArrayViewMut1<'_, T>) {
        let n = self.n;
        for j in 0..n {
            let left = x[(j + n - 1) % n];
            let right = x[(j + 1) % n];
            y[j] = self.lower * left + self.center * x[j] + self.upper * right;
        }
    }

    fn solve_shifted(&self, alpha: T, rhs: ArrayView1<'_, T>) -> Result<(Array1<T>, LinearSolveStats)> {
        let n = self.n;
        let sub = vec![-alpha * self.lower; n];
        let diag = vec![T::one() - alpha * self.center; n];
        let sup = vec![-alpha * self.upper; n];
        let rhs: Vec<T> = rhs.iter().copied().collect();
        let (x, stats) = solve_cyclic_tridiagonal(&sub, &diag, &sup, &rhs)?;
        Ok((Array1::from(x), stats))
    }
}

/// Diagonal operator, used by the scalar and decoupled test systems.
#[derive(Debug, Clone)]
pub struct DiagonalOperator<T>(pub Array1<T>);

impl<T: Real> LinearOperator<T> for DiagonalOperator<T> {
    fn dim(&self) -> usize {
        self.0.len()
    }

    fn apply_into(&self, x: ArrayView1<'_, T>, mut y: ArrayViewMut1<'_, T>) {
        for ((yi, &xi), &di) in y.iter_mut().zip(x.iter()).zip(self.0.iter()) {
            *yi = di * xi;
        }
    }

    fn solve_shifted(&self, alpha: T, rhs: ArrayView1<'_, T>) -> Result<(Array1<T>, LinearSolveStats)> {
        let mut y = Array1::zeros(self.0.len());
        for ((yi, &bi), &di) in y.iter_mut().zip(rhs.iter()).zip(self.0.iter()) {
            let pivot = T::one() - alpha * di;
            if pivot == T::zero() {
                return Err(SirmError::ZeroPivot("diagonal solve"));
            }
            *yi = bi / pivot;
        }
        Ok((y, LinearSolveStats { iterations: 1, residual_norm: 0.0 }))
    }
}

/// Dense operator; solves go through a partially pivoted LU factorization.
#[derive(Debug, Clone)]
pub struct DenseOperator<T>(pub Array2<T>);

impl<T: Real> LinearOperator<T> for DenseOperator<T> {
    fn dim(&self) -> usize {
        self.0.nrows()
    }

    fn apply_into(&self, x: ArrayView1<'_, T>, mut y: ArrayViewMut1<'_, T>) {
        y.assign(&self.0.dot(&x));
    }

    fn solve_shifted(&self, alpha: T, rhs: ArrayView1<'_, T>) -> Result<(Array1<T>, LinearSolveStats)> {
        let n = self.0.nrows();
        let mut m = self.0.mapv(|v| -alpha * v);
        for i in 0..n {
            m[[i, i]] += T::one();
        }
        let lu = LuFactor::new(m.clone())?;
        let y = lu.solve(rhs);
        let residual = relative_residual(&m, y.view(), rhs);
        Ok((y, LinearSolveStats { iterations: 1, residual_norm: residual }))
    }
}

pub(crate) fn relative_residual<T: Real>(a: &Array2<T>, x: ArrayView1<'_, T>, b: ArrayView1<'_, T>) -> f64 {
    let r = &b - &a.dot(&x);
    let rn = crate::linalg::norm2(r.view());
    let bn = crate::linalg::norm2(b);
    if bn > T::zero() {
        (rn / bn).to_f64_lossy()
    } else {
        rn.to_f64_lossy()
    }
}
