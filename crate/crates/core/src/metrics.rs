//! Error norms between trajectories: unweighted L2 over state entries at each
//! sample time, sup over the samples.

use crate::error::{Result, SirmError};
use crate::linalg::distance;
use crate::real::Real;
use crate::timestep::Trajectory;

#[derive(Debug, Clone, PartialEq)]
pub struct ErrorMetrics<T> {
    pub times: Vec<T>,
    pub series: Vec<T>,
    pub sup: T,
    pub final_error: T,
}

/// Compares `result` against `reference` at the result's sample times that fall
/// inside the reference's time range, interpolating the reference linearly.
pub fn compare_against_reference<T: Real>(result: &Trajectory<T>, reference: &Trajectory<T>) -> Result<ErrorMetrics<T>> {
    if result.dim() != reference.dim() {
        return Err(SirmError::ShapeMismatch("trajectories have different state dimensions".into()));
    }
    let mut times = Vec::new();
    let mut series = Vec::new();
    for (i, &t) in result.times().iter().enumerate() {
        let Ok(r) = reference.at(t) else { continue };
        times.push(t);
        series.push(distance(result.state(i), r.view()));
    }
    if times.is_empty() {
        return Err(SirmError::DisjointTimes);
    }
    let sup = series.iter().fold(T::zero(), |m, &v| m.max(v));
    let final_error = *series.last().expect("non-empty series");
    Ok(ErrorMetrics { times, series, sup, final_error })
}

/// Pearson correlation coefficient; `None` when either series is constant or the
/// lengths differ.
pub fn pearson<T: Real>(a: &[T], b: &[T]) -> Option<T> {
    if a.len() != b.len() || a.len() < 2 {
        return None;
    }
    let n = T::from_count(a.len());
    let ma = a.iter().copied().sum::<T>() / n;
    let mb = b.iter().copied().sum::<T>() / n;
    let (mut sab, mut saa, mut sbb) = (T::zero(), T::zero(), T::zero());
    for (&x, &y) in a.iter().zip(b) {
        let (dx, dy) = (x - ma, y - mb);
        sab += dx * dy;
        saa += dx * dx;
        sbb += dy * dy;
    }
    if saa == T::zero() || sbb == T::zero() {
        return None;
    }
    Some(sab / (saa * sbb).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::Array1;

    fn traj(times: Vec<f64>, f: impl Fn(f64) -> Vec<f64>) -> Trajectory<f64> {
        let cols: Vec<Array1<f64>> = times.iter().map(|&t| Array1::from(f(t))).collect();
        Trajectory::from_columns(times, &cols).unwrap()
    }

    #[test]
    fn identical_and_offset() {
        let a = traj(vec![0.0, 0.5, 1.0], |t| vec![t, 2.0 * t]);
        assert_eq!(compare_against_reference(&a, &a).unwrap().sup, 0.0);
        let b = traj(vec![0.0, 0.5, 1.0], |t| vec![t + 3.0, 2.0 * t + 4.0]);
        let m = compare_against_reference(&b, &a).unwrap();
        assert!(m.series.iter().all(|&v| (v - 5.0).abs() < 1e-14));
        assert!((m.final_error - 5.0).abs() < 1e-14);
    }

    #[test]
    fn resamples_and_rejects_disjoint() {
        let coarse = traj(vec![0.0, 1.0], |t| vec![t]);
        let fine = traj(vec![0.0, 0.25, 0.5], |t| vec![t]);
        assert!(compare_against_reference(&fine, &coarse).unwrap().sup < 1e-15);
        let late = traj(vec![2.0, 3.0], |t| vec![t]);
        assert!(matches!(compare_against_reference(&late, &coarse), Err(SirmError::DisjointTimes)));
    }

    #[test]
    fn pearson_basics() {
        assert!((pearson::<f64>(&[1.0, 2.0, 3.0], &[2.0, 4.0, 6.0]).unwrap() - 1.0).abs() < 1e-15);
        assert!((pearson::<f64>(&[1.0, 2.0, 3.0], &[3.0, 2.0, 1.0]).unwrap() + 1.0).abs() < 1e-15);
        assert!(pearson::<f64>(&[1.0, 1.0], &[1.0, 2.0]).is_none());
    }
}
