//! Log-log regression of wall time against problem size.

use std::io::Write;

use thiserror::Error;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum FitError {
    #[error("need at least 3 distinct sizes with positive timings, got {0}")]
    TooFewPoints(usize),
}

/// Least-squares slope of `log t` against `log n`.
pub fn fit_exponent(points: &[(f64, f64)]) -> Result<f64, FitError> {
    let usable: Vec<(f64, f64)> =
        points.iter().filter(|(n, t)| *n > 0.0 && *t > 0.0).map(|&(n, t)| (n.ln(), t.ln())).collect();
    let mut sizes: Vec<f64> = usable.iter().map(|p| p.0).collect();
    sizes.sort_by(f64::total_cmp);
    sizes.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
    if sizes.len() < 3 {
        return Err(FitError::TooFewPoints(sizes.len()));
    }
    let k = usable.len() as f64;
    let mx = usable.iter().map(|p| p.0).sum::<f64>() / k;
    let my = usable.iter().map(|p| p.1).sum::<f64>() / k;
    let sxy: f64 = usable.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = usable.iter().map(|p| (p.0 - mx).powi(2)).sum();
    Ok(sxy / sxx)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScalingFit {
    pub method: String,
    pub points: Vec<(f64, f64)>,
    pub exponent: Result<f64, FitError>,
}

/// Times `run(method, size)` at every size and fits one exponent per method. Failed
/// runs are logged and left out of the fit.
pub fn scaling_study<E: std::fmt::Display>(
    methods: &[&str],
    sizes: &[usize],
    mut run: impl FnMut(&str, usize) -> Result<(f64, f64), E>,
) -> Vec<ScalingFit> {
    methods
        .iter()
        .map(|&method| {
            let mut points = Vec::new();
            for &s in sizes {
                match run(method, s) {
                    Ok(p) => points.push(p),
                    Err(e) => log::warn!("{method} at size {s} excluded from the fit: {e}"),
                }
            }
            let exponent = fit_exponent(&points);
            ScalingFit { method: method.to_string(), points, exponent }
        })
        .collect()
}

pub fn write_scaling<W: Write>(mut w: W, fits: &[ScalingFit]) -> std::io::Result<()> {
    writeln!(w, "method,exponent,points")?;
    for f in fits {
        let e = f.exponent.as_ref().map(|e| format!("{e:.4}")).unwrap_or_default();
        writeln!(w, "{},{e},{}", f.method, f.points.len())?;
    }
    Ok(())
}

pub fn write_scaling_points<W: Write>(mut w: W, fits: &[ScalingFit]) -> std::io::Result<()> {
    writeln!(w, "method,dim,wall_time_s")?;
    for f in fits {
        for (n, t) in &f.points {
            writeln!(w, "{},{n},{t:.6}", f.method)?;
        }
    }
    Ok(())
}
