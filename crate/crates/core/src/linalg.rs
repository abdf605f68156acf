//! Vector helpers shared across modules.

use ndarray::{Array1, ArrayView1};

use crate::real::Real;

#[inline]
pub fn dot<T: Real>(a: ArrayView1<'_, T>, b: ArrayView1<'_, T>) -> T {
    a.dot(&b)
}

/// Unweighted Euclidean norm.
#[inline]
pub fn norm2<T: Real>(a: ArrayView1<'_, T>) -> T {
    a.dot(&a).sqrt()
}

pub fn distance<T: Real>(a: ArrayView1<'_, T>, b: ArrayView1<'_, T>) -> T {
    a.iter()
        .zip(b.iter())
        .map(|(&x, &y)| (x - y) * (x - y))
        .sum::<T>()
        .sqrt()
}

pub fn all_finite<T: Real>(a: ArrayView1<'_, T>) -> bool {
    a.iter().all(|v| v.is_finite())
}

pub fn lerp<T: Real>(a: ArrayView1<'_, T>, b: ArrayView1<'_, T>, w: T) -> Array1<T> {
    let one = T::one();
    a.iter().zip(b.iter()).map(|(&x, &y)| (one - w) * x + w * y).collect()
}
