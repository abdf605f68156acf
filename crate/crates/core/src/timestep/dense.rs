//! Small dense LU factorization for the reduced-model Crank–Nicolson step.

use ndarray::{Array1, Array2, ArrayView1};

use crate::error::{Result, SirmError};
use crate::real::Real;

#[derive(Debug, Clone)]
pub struct LuFactor<T> {
    lu: Array2<T>,
    perm: Vec<usize>,
}

impl<T: Real> LuFactor<T> {
    pub fn new(mut a: Array2<T>) -> Result<Self> {
        let n = a.nrows();
        if a.ncols() != n {
            return Err(SirmError::ShapeMismatch(format!(
                "LU needs a square matrix, got {}x{}",
                n,
                a.ncols()
            )));
        }
        let mut perm: Vec<usize> = (0..n).collect();
        for k in 0..n {
            let mut p = k;
            let mut best = a[[k, k]].abs();
            for i in (k + 1)..n {
                let v = a[[i, k]].abs();
                if v > best {
                    best = v;
                    p = i;
                }
            }
            if best == T::zero() || !best.is_finite() {
                return Err(SirmError::ZeroPivot("dense LU"));
            }
            if p != k {
                for j in 0..n {
                    a.swap([k, j], [p, j]);
                }
                perm.swap(k, p);
            }
            let pivot = a[[k, k]];
            for i in (k + 1)..n {
                let l = a[[i, k]] / pivot;
                a[[i, k]] = l;
                if l != T::zero() {
                    for j in (k + 1)..n {
                        let u = a[[k, j]];
                        a[[i, j]] -= l * u;
                    }
                }
            }
        }
        Ok(Self { lu: a, perm })
    }

    pub fn dim(&self) -> usize {
        self.perm.len()
    }

    pub fn solve(&self, b: ArrayView1<'_, T>) -> Array1<T> {
        let n = self.dim();
        let mut x: Array1<T> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            let mut s = x[i];
            for j in 0..i {
                s -= self.lu[[i, j]] * x[j];
            }
            x[i] = s;
        }
        for i in (0..n).rev() {
            let mut s = x[i];
            for j in (i + 1)..n {
                s -= self.lu[[i, j]] * x[j];
            }
            x[i] = s / self.lu[[i, i]];
        }
        x
    }
}
