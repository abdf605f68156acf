//! Linear test systems `x' = E x + L x` with `E` explicit and `L` implicit.

use ndarray::{Array1, Array2, ArrayView1};

use crate::dynsys::FullModel;
use crate::error::{Result, SirmError};
use crate::real::Real;
use crate::timestep::{DenseOperator, DiagonalOperator, LinearOperator};

pub struct LinearModel<T: Real> {
    explicit: Option<Array2<T>>,
    stiff: Option<Box<dyn LinearOperator<T>>>,
    x0: Array1<T>,
}

impl<T: Real> std::fmt::Debug for LinearModel<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("LinearModel")
            .field("dim", &self.x0.len())
            .field("explicit", &self.explicit.is_some())
            .field("stiff", &self.stiff.is_some())
            .finish()
    }
}

impl<T: Real> LinearModel<T> {
    pub fn new(
        explicit: Option<Array2<T>>,
        stiff: Option<Box<dyn LinearOperator<T>>>,
        x0: Array1<T>,
    ) -> Result<Self> {
        let n = x0.len();
        if n == 0 {
            return Err(SirmError::InvalidParameter("linear model needs a non-empty state".into()));
        }
        if let Some(e) = &explicit {
            if e.dim() != (n, n) {
                return Err(SirmError::ShapeMismatch("explicit matrix does not match the state".into()));
            }
        }
        if let Some(l) = &stiff {
            if l.dim() != n {
                return Err(SirmError::ShapeMismatch("stiff operator does not match the state".into()));
            }
        }
        Ok(Self { explicit, stiff, x0 })
    }

    /// `x' = A x`, entirely explicit.
    pub fn explicit(a: Array2<T>, x0: Array1<T>) -> Result<Self> {
        Self::new(Some(a), None, x0)
    }

    /// `x' = A x`, entirely implicit.
    pub fn implicit(a: Array2<T>, x0: Array1<T>) -> Result<Self> {
        Self::new(None, Some(Box::new(DenseOperator(a))), x0)
    }

    /// `x' = diag(λ) x`, implicit.
    pub fn diagonal(lambda: Array1<T>, x0: Array1<T>) -> Result<Self> {
        Self::new(None, Some(Box::new(DiagonalOperator(lambda))), x0)
    }

    /// Dense matrix of the full right-hand side `E + L`.
    pub fn matrix(&self) -> Array2<T> {
        let n = self.x0.len();
        let mut a = self.explicit.clone().unwrap_or_else(|| Array2::zeros((n, n)));
        if let Some(l) = &self.stiff {
            for j in 0..n {
                let mut e = Array1::zeros(n);
                e[j] = T::one();
                let col = l.apply(e.view());
                let mut dst = a.column_mut(j);
                dst += &col;
            }
        }
        a
    }
}

impl<T: Real> FullModel<T> for LinearModel<T> {
    fn dim(&self) -> usize {
        self.x0.len()
    }

    fn initial_state(&self) -> Array1<T> {
        self.x0.clone()
    }

    fn explicit_part(&self, _t: T, x: ArrayView1<'_, T>) -> Result<Array1<T>> {
        if x.len() != self.dim() {
            return Err(SirmError::ShapeMismatch(format!("state has length {}, expected {}", x.len(), self.dim())));
        }
        Ok(match &self.explicit {
            Some(e) => e.dot(&x),
            None => Array1::zeros(self.dim()),
        })
    }

    fn stiff_operator(&self) -> Option<&dyn LinearOperator<T>> {
        self.stiff.as_deref()
    }
}
