//! Subspace machinery: information matrices, POD and Gram–Schmidt bases,
//! projection, and Galerkin reduced models.

pub mod svd;

use std::ops::Range;

use ndarray::{Array1, Array2, ArrayView1, ArrayView2};

use crate::dynsys::FullModel;
use crate::error::{Result, SirmError};
use crate::linalg::norm2;
use crate::real::Real;
use crate::timestep::Trajectory;

pub use svd::{thin_svd, Svd};

pub const DEFAULT_DROP_TOL: f64 = 1e-10;

/// Extended data ensemble `[X, γF]`, optionally with extra columns appended.
#[derive(Debug, Clone, PartialEq)]
pub struct InformationMatrix<T> {
    pub columns: Array2<T>,
    pub gamma: T,
    /// Number of snapshot times behind the ensemble.
    pub m: usize,
}

impl<T: Real> InformationMatrix<T> {
    pub fn nrows(&self) -> usize {
        self.columns.nrows()
    }

    pub fn ncols(&self) -> usize {
        self.columns.ncols()
    }

    /// Appends a column (e.g. the initial state).
    pub fn with_column(mut self, col: ArrayView1<'_, T>) -> Result<Self> {
        if col.len() != self.nrows() {
            return Err(SirmError::ShapeMismatch("appended column does not match ensemble rows".into()));
        }
        self.columns.push_column(col).map_err(|e| SirmError::ShapeMismatch(e.to_string()))?;
        Ok(self)
    }

    /// Splits every column into one column per row block, zero outside its block.
    /// Blocks are emitted in order, each holding all original columns.
    pub fn split_blocks(&self, blocks: &[Range<usize>]) -> Self {
        if blocks.len() <= 1 {
            return self.clone();
        }
        let c = self.ncols();
        let mut out = Array2::zeros((self.nrows(), c * blocks.len()));
        for (b, r) in blocks.iter().enumerate() {
            for j in 0..c {
                out.slice_mut(ndarray::s![r.clone(), b * c + j])
                    .assign(&self.columns.slice(ndarray::s![r.clone(), j]));
            }
        }
        Self { columns: out, gamma: self.gamma, m: self.m }
    }
}

/// `[X, γF]` with `F` the vector field at every trajectory sample.
pub fn assemble_information_matrix<T: Real>(
    traj: &Trajectory<T>,
    model: &dyn FullModel<T>,
    gamma: T,
) -> Result<InformationMatrix<T>> {
    if !(gamma > T::zero()) {
        return Err(SirmError::InvalidParameter(format!("gamma must be positive, got {gamma}")));
    }
    if traj.dim() != model.dim() {
        return Err(SirmError::ShapeMismatch("trajectory does not match the model dimension".into()));
    }
    let m = traj.len();
    let mut columns = Array2::zeros((traj.dim(), 2 * m));
    for (i, &t) in traj.times().iter().enumerate() {
        let x = traj.state(i);
        columns.column_mut(i).assign(&x);
        let f = model.eval_field(t, x)?;
        columns.column_mut(m + i).assign(&f.mapv(|v| v * gamma));
    }
    Ok(InformationMatrix { columns, gamma, m })
}

/// Smallest `k` whose discarded energy fraction is below `η`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyCriterion<T> {
    pub eta: T,
    pub k_min: usize,
    pub k_max: Option<usize>,
}

impl<T: Real> EnergyCriterion<T> {
    pub fn new(eta: T) -> Result<Self> {
        if !(eta > T::zero() && eta < T::one()) {
            return Err(SirmError::InvalidParameter(format!("eta must lie in (0, 1), got {eta}")));
        }
        Ok(Self { eta, k_min: 1, k_max: None })
    }

    pub fn with_bounds(mut self, k_min: usize, k_max: Option<usize>) -> Self {
        self.k_min = k_min.max(1);
        self.k_max = k_max;
        self
    }

    /// Retained rank for singular values `s` (sorted non-increasing).
    pub fn select(&self, s: &[T]) -> usize {
        let r = s.len();
        let total: T = s.iter().map(|&v| v * v).sum();
        let mut k = r;
        // tail[k] = Σ_{α ≥ k} λ², accumulated from the small end
        let mut tail = T::zero();
        let mut tails = vec![T::zero(); r + 1];
        for a in (0..r).rev() {
            tail += s[a] * s[a];
            tails[a] = tail;
        }
        for (kk, &t) in tails.iter().enumerate().skip(1) {
            if t < self.eta * total {
                k = kk;
                break;
            }
        }
        let k_max = self.k_max.unwrap_or(r).min(r);
        k.max(self.k_min).min(k_max).max(1)
    }
}

/// Column-orthonormal `n×k` basis.
#[derive(Debug, Clone, PartialEq)]
pub struct Basis<T> {
    phi: Array2<T>,
    singular_values: Vec<T>,
    energy_fraction: T,
}

impl<T: Real> Basis<T> {
    /// Wraps a matrix assumed to have orthonormal columns.
    pub fn from_orthonormal(phi: Array2<T>) -> Self {
        Self { phi, singular_values: Vec::new(), energy_fraction: T::one() }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_orthonormal(Array2::eye(n))
    }

    pub fn phi(&self) -> ArrayView2<'_, T> {
        self.phi.view()
    }

    pub fn into_phi(self) -> Array2<T> {
        self.phi
    }

    pub fn singular_values(&self) -> &[T] {
        &self.singular_values
    }

    pub fn energy_fraction(&self) -> T {
        self.energy_fraction
    }

    pub fn k(&self) -> usize {
        self.phi.ncols()
    }

    pub fn n(&self) -> usize {
        self.phi.nrows()
    }

    /// `Φᵀx`
    pub fn project(&self, x: ArrayView1<'_, T>) -> Result<Array1<T>> {
        if x.len() != self.n() {
            return Err(SirmError::ShapeMismatch(format!("vector of length {} projected onto {}-row basis", x.len(), self.n())));
        }
        Ok(self.phi.t().dot(&x))
    }

    /// `Φz`
    pub fn lift(&self, z: ArrayView1<'_, T>) -> Result<Array1<T>> {
        if z.len() != self.k() {
            return Err(SirmError::ShapeMismatch(format!("coefficients of length {} lifted by {}-column basis", z.len(), self.k())));
        }
        Ok(self.phi.dot(&z))
    }

    /// `ΦΦᵀx`
    pub fn projector(&self, x: ArrayView1<'_, T>) -> Result<Array1<T>> {
        self.lift(self.project(x)?.view())
    }

    /// Largest entry of `|ΦᵀΦ − I|`.
    pub fn orthonormality_defect(&self) -> T {
        let g = self.phi.t().dot(&self.phi);
        let mut worst = T::zero();
        for ((i, j), &v) in g.indexed_iter() {
            let e = if i == j { T::one() } else { T::zero() };
            worst = worst.max((v - e).abs());
        }
        worst
    }
}

/// POD basis from the truncated SVD of the ensemble.
pub fn pod_basis<T: Real>(y: &InformationMatrix<T>, crit: &EnergyCriterion<T>) -> Result<Basis<T>> {
    if y.ncols() == 0 || y.columns.iter().all(|&v| v == T::zero()) {
        return Err(SirmError::DegenerateEnsemble("all ensemble columns are zero".into()));
    }
    let svd = thin_svd(y.columns.view());
    let s = svd.singular_values.to_vec();
    let total: T = s.iter().map(|&v| v * v).sum();
    let floor = s[0] * T::epsilon() * T::from_count(y.nrows().max(y.ncols()));
    let rank = s.iter().take_while(|&&v| v > floor).count().max(1);
    let k = crit.select(&s).min(rank);
    let kept: T = s[..k].iter().map(|&v| v * v).sum();
    let phi = svd.u.slice(ndarray::s![.., ..k]).to_owned();
    Ok(Basis { phi, singular_values: s, energy_fraction: kept / total })
}

/// Modified Gram–Schmidt with one reorthogonalisation pass; columns whose residual
/// falls below `drop_tol` times their norm are discarded.
pub fn gram_schmidt_basis<T: Real>(y: &InformationMatrix<T>, drop_tol: T) -> Result<Basis<T>> {
    let n = y.nrows();
    let mut q: Vec<Array1<T>> = Vec::new();
    for col in y.columns.columns() {
        let norm = norm2(col);
        if norm == T::zero() {
            continue;
        }
        let mut v = col.to_owned();
        for _ in 0..2 {
            for b in &q {
                let d = b.dot(&v);
                v.scaled_add(-d, b);
            }
        }
        let r = norm2(v.view());
        if r <= drop_tol * norm {
            continue;
        }
        v.mapv_inplace(|x| x / r);
        q.push(v);
    }
    if q.is_empty() {
        return Err(SirmError::DegenerateEnsemble("every ensemble column was dropped".into()));
    }
    let mut phi = Array2::zeros((n, q.len()));
    for (mut dst, src) in phi.columns_mut().into_iter().zip(&q) {
        dst.assign(src);
    }
    Ok(Basis::from_orthonormal(phi))
}

/// `Σ_{α > k} λ_α²`
pub fn truncation_error_estimate<T: Real>(singular_values: &[T], k: usize) -> T {
    singular_values.iter().skip(k).map(|&v| v * v).sum()
}

/// Galerkin vector field `z ↦ Φᵀ f(t, Φz)` supplied by a model.
pub trait ReducedField<T: Real>: Send + Sync {
    fn dim(&self) -> usize;
    fn eval(&self, t: T, z: ArrayView1<'_, T>) -> Result<Array1<T>>;
}

/// Reduced model `ż = Φᵀ f(t, Φz)` split as `Φᵀ g(t, Φz) + (ΦᵀLΦ) z`.
pub struct ReducedModel<'m, T: Real> {
    phi: Array2<T>,
    stiff: Option<Array2<T>>,
    model: &'m dyn FullModel<T>,
    special: Option<Box<dyn ReducedField<T>>>,
}

impl<T: Real> std::fmt::Debug for ReducedModel<'_, T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ReducedModel")
            .field("n", &self.phi.nrows())
            .field("k", &self.phi.ncols())
            .field("specialised", &self.special.is_some())
            .finish()
    }
}

impl<'m, T: Real> ReducedModel<'m, T> {
    pub fn dim(&self) -> usize {
        self.phi.ncols()
    }

    pub fn phi(&self) -> ArrayView2<'_, T> {
        self.phi.view()
    }

    /// `ΦᵀLΦ`
    pub fn stiff_matrix(&self) -> Option<&Array2<T>> {
        self.stiff.as_ref()
    }

    pub fn is_specialised(&self) -> bool {
        self.special.is_some()
    }

    pub fn explicit_part(&self, t: T, z: ArrayView1<'_, T>) -> Result<Array1<T>> {
        match &self.special {
            Some(field) => {
                let mut g = field.eval(t, z)?;
                if let Some(a) = &self.stiff {
                    g -= &a.dot(&z);
                }
                Ok(g)
            }
            None => {
                let x = self.phi.dot(&z);
                let g = self.model.explicit_part(t, x.view())?;
                Ok(self.phi.t().dot(&g))
            }
        }
    }

    pub fn eval_field(&self, t: T, z: ArrayView1<'_, T>) -> Result<Array1<T>> {
        match &self.special {
            Some(field) => field.eval(t, z),
            None => {
                let mut g = self.explicit_part(t, z)?;
                if let Some(a) = &self.stiff {
                    g += &a.dot(&z);
                }
                Ok(g)
            }
        }
    }
}

fn reduced_stiff<T: Real>(phi: ArrayView2<'_, T>, model: &dyn FullModel<T>) -> Option<Array2<T>> {
    model.stiff_operator().map(|l| {
        let (n, k) = phi.dim();
        let mut lphi = Array2::zeros((n, k));
        for j in 0..k {
            l.apply_into(phi.column(j), lphi.column_mut(j));
        }
        phi.t().dot(&lphi)
    })
}

/// Packages `Φ`, `ΦᵀLΦ` and the reduced explicit field; uses the model's specialised
/// Galerkin form when it has one.
pub fn build_reduced_model<'m, T: Real>(basis: &Basis<T>, model: &'m dyn FullModel<T>) -> Result<ReducedModel<'m, T>> {
    let mut rom = build_reduced_model_lifted(basis, model)?;
    rom.special = model.galerkin(basis.phi())?;
    Ok(rom)
}

/// As [`build_reduced_model`], always evaluating `Φᵀ g(t, Φz)` on the full grid.
pub fn build_reduced_model_lifted<'m, T: Real>(basis: &Basis<T>, model: &'m dyn FullModel<T>) -> Result<ReducedModel<'m, T>> {
    if basis.n() != model.dim() {
        return Err(SirmError::ShapeMismatch(format!(
            "basis has {} rows, model dimension is {}",
            basis.n(),
            model.dim()
        )));
    }
    Ok(ReducedModel {
        phi: basis.phi.clone(),
        stiff: reduced_stiff(basis.phi(), model),
        model,
        special: None,
    })
}
