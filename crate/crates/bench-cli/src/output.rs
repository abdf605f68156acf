//! CSV rows, field dumps and plot recipes.

use std::io::{self, Read, Write};
use std::path::Path;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::config::{BasisKind, Closure, ExperimentKind, Family, Method, RunSpec, TrialKind};

pub const NORM_NOTE: &str =
    "# errors: sup over sample times of the unweighted L2 norm over grid nodes (no h-weighting)";

/// One line of `results.csv`. The parameter columns reproduce the run exactly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub run_id: String,
    pub status: String,
    pub experiment: ExperimentKind,
    pub method: Method,
    pub family: Family,
    pub n: usize,
    pub dim: usize,
    pub c: f64,
    pub nu: f64,
    pub reynolds: f64,
    pub closure: Closure,
    pub t_end: f64,
    pub dt: f64,
    pub record_every: usize,
    pub eta: f64,
    pub m: usize,
    pub epsilon: f64,
    pub max_iterations: usize,
    pub trial: TrialKind,
    pub coarse_points: usize,
    pub coarse_factor: usize,
    pub fourier_modes: usize,
    pub basis: BasisKind,
    pub gamma: f64,
    pub fixed_k: Option<usize>,
    pub subintervals: usize,
    pub m_prime: usize,
    pub dirm_blocks: usize,
    pub dirm_modes: usize,
    pub seed: u64,
    pub iterations: Option<usize>,
    pub converged: Option<bool>,
    /// Per-iteration (global) or per-subinterval (local) mode counts, `;`-separated.
    pub mode_counts: String,
    pub final_k: Option<usize>,
    pub sup_error: Option<f64>,
    pub final_error: Option<f64>,
    pub first_iteration_error: Option<f64>,
    pub avg_inner_iterations: Option<f64>,
    pub max_k_prime: Option<usize>,
    pub convergence_file: String,
    pub wall_time_s: f64,
    pub message: String,
}

/// Measured quantities of a run, merged with its spec into a row.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Measurements {
    pub iterations: Option<usize>,
    pub converged: Option<bool>,
    pub mode_counts: Vec<usize>,
    pub final_k: Option<usize>,
    pub sup_error: Option<f64>,
    pub final_error: Option<f64>,
    pub first_iteration_error: Option<f64>,
    pub avg_inner_iterations: Option<f64>,
    pub max_k_prime: Option<usize>,
    pub convergence_file: String,
    pub wall_time_s: f64,
}

impl ResultRow {
    pub fn new(run_id: String, spec: &RunSpec, status: Result<Measurements, String>) -> Self {
        let (status, meas, message) = match status {
            Ok(m) => ("ok".to_string(), m, String::new()),
            Err(e) => ("error".to_string(), Measurements::default(), e),
        };
        Self {
            run_id,
            status,
            experiment: spec.experiment,
            method: spec.method,
            family: spec.family,
            n: spec.n,
            dim: spec.dim(),
            c: spec.c,
            nu: spec.nu,
            reynolds: spec.reynolds,
            closure: spec.closure,
            t_end: spec.t_end,
            dt: spec.dt,
            record_every: spec.record_every,
            eta: spec.eta,
            m: spec.m,
            epsilon: spec.epsilon,
            max_iterations: spec.max_iterations,
            trial: spec.trial,
            coarse_points: spec.coarse_points,
            coarse_factor: spec.coarse_factor,
            fourier_modes: spec.fourier_modes,
            basis: spec.basis,
            gamma: spec.gamma,
            fixed_k: spec.fixed_k,
            subintervals: spec.subintervals,
            m_prime: spec.m_prime,
            dirm_blocks: spec.dirm_blocks,
            dirm_modes: spec.dirm_modes,
            seed: spec.seed,
            iterations: meas.iterations,
            converged: meas.converged,
            mode_counts: meas.mode_counts.iter().map(|k| k.to_string()).collect::<Vec<_>>().join(";"),
            final_k: meas.final_k,
            sup_error: meas.sup_error,
            final_error: meas.final_error,
            first_iteration_error: meas.first_iteration_error,
            avg_inner_iterations: meas.avg_inner_iterations,
            max_k_prime: meas.max_k_prime,
            convergence_file: meas.convergence_file,
            wall_time_s: meas.wall_time_s,
            message,
        }
    }

    /// The run parameters recorded in this row.
    pub fn spec(&self) -> RunSpec {
        RunSpec {
            experiment: self.experiment,
            method: self.method,
            family: self.family,
            n: self.n,
            c: self.c,
            nu: self.nu,
            reynolds: self.reynolds,
            closure: self.closure,
            t_end: self.t_end,
            dt: self.dt,
            record_every: self.record_every,
            eta: self.eta,
            m: self.m,
            epsilon: self.epsilon,
            max_iterations: self.max_iterations,
            trial: self.trial,
            coarse_points: self.coarse_points,
            coarse_factor: self.coarse_factor,
            fourier_modes: self.fourier_modes,
            basis: self.basis,
            gamma: self.gamma,
            fixed_k: self.fixed_k,
            subintervals: self.subintervals,
            m_prime: self.m_prime,
            dirm_blocks: self.dirm_blocks,
            dirm_modes: self.dirm_modes,
            seed: self.seed,
        }
    }

    pub fn mode_count_list(&self) -> Vec<usize> {
        self.mode_counts.split(';').filter(|s| !s.is_empty()).filter_map(|s| s.parse().ok()).collect()
    }

    pub fn is_ok(&self) -> bool {
        self.status == "ok"
    }
}

pub fn write_results<W: Write>(mut w: W, rows: &[ResultRow]) -> Result<(), csv::Error> {
    writeln!(w, "{NORM_NOTE}")?;
    let mut out = csv::Writer::from_writer(w);
    for r in rows {
        out.serialize(r)?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_results<R: Read>(r: R) -> Result<Vec<ResultRow>, csv::Error> {
    let mut rd = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(r);
    rd.deserialize().collect()
}

/// Plain-text matrix with a two-line header: dimensions, then grid spacing.
pub fn write_field<W: Write>(mut w: W, field: &Array2<f64>, spacing: (f64, f64)) -> io::Result<()> {
    writeln!(w, "# dims {} {}", field.nrows(), field.ncols())?;
    writeln!(w, "# spacing {:e} {:e}", spacing.0, spacing.1)?;
    for row in field.rows() {
        let line: Vec<String> = row.iter().map(|v| format!("{v:.10e}")).collect();
        writeln!(w, "{}", line.join(" "))?;
    }
    Ok(())
}

pub fn read_field<R: Read>(mut r: R) -> io::Result<(Array2<f64>, (f64, f64))> {
    let bad = |m: &str| io::Error::new(io::ErrorKind::InvalidData, m.to_string());
    let mut text = String::new();
    r.read_to_string(&mut text)?;
    let mut lines = text.lines();
    let dims: Vec<usize> = lines
        .next()
        .and_then(|l| l.strip_prefix("# dims "))
        .ok_or_else(|| bad("missing dims header"))?
        .split_whitespace()
        .map(|s| s.parse().map_err(|_| bad("bad dims")))
        .collect::<io::Result<_>>()?;
    let sp: Vec<f64> = lines
        .next()
        .and_then(|l| l.strip_prefix("# spacing "))
        .ok_or_else(|| bad("missing spacing header"))?
        .split_whitespace()
        .map(|s| s.parse().map_err(|_| bad("bad spacing")))
        .collect::<io::Result<_>>()?;
    if dims.len() != 2 || sp.len() != 2 {
        return Err(bad("headers need two values each"));
    }
    let values: Vec<f64> = lines
        .flat_map(|l| l.split_whitespace())
        .map(|s| s.parse().map_err(|_| bad("bad value")))
        .collect::<io::Result<_>>()?;
    let field = Array2::from_shape_vec((dims[0], dims[1]), values).map_err(|_| bad("value count does not match dims"))?;
    Ok((field, (sp[0], sp[1])))
}

/// `coordinate,<label>[,<label>_full]` profile CSV.
pub fn write_profile<W: Write>(
    mut w: W,
    coord: &str,
    label: &str,
    profile: &[(f64, f64)],
    reference: Option<&[(f64, f64)]>,
) -> io::Result<()> {
    match reference {
        Some(_) => writeln!(w, "{coord},{label},{label}_full")?,
        None => writeln!(w, "{coord},{label}")?,
    }
    for (i, &(x, v)) in profile.iter().enumerate() {
        match reference {
            Some(r) => writeln!(w, "{x:e},{v:e},{:e}", r[i].1)?,
            None => writeln!(w, "{x:e},{v:e}")?,
        }
    }
    Ok(())
}

const CONVERGENCE_RECIPE: &str = r#"# gnuplot -e "run='adv_diff_000'" plot_convergence.gp
set datafile separator ','
set logscale y
set xlabel 'iteration'
set ylabel 'sup L2 error'
set key top right
plot 'convergence_'.run.'.csv' using 1:5 with linespoints title 'true error', \
     '' using 1:4 with linespoints title 'successive difference'
"#;

const CENTERLINE_RECIPE: &str = r#"# gnuplot -e "run='cavity_000'" plot_centerline.gp
set datafile separator ','
set multiplot layout 1,2
set xlabel 'u(0.5, y)'
set ylabel 'y'
plot run.'/centerline_u.csv' using 2:1 with lines title 'reduced', '' using 3:1 with points title 'full'
set xlabel 'x'
set ylabel 'v(x, 0.5)'
plot run.'/centerline_v.csv' using 1:2 with lines title 'reduced', '' using 1:3 with points title 'full'
unset multiplot
"#;

const STREAM_RECIPE: &str = r#"# gnuplot -e "run='cavity_000'" plot_streamfunction.gp
set view map
set contour base
set cntrparam levels 30
unset surface
set size square
splot run.'/streamfunction.txt' matrix with lines notitle
"#;

const SCALING_RECIPE: &str = r#"# gnuplot plot_scaling.gp
set datafile separator ','
set logscale xy
set xlabel 'state dimension'
set ylabel 'wall time [s]'
plot 'scaling_points.csv' using 2:(strcol(1) eq 'full' ? $3 : 1/0) with linespoints title 'full', \
     '' using 2:(strcol(1) eq 'local_sirm' ? $3 : 1/0) with linespoints title 'local SIRM'
"#;

pub fn write_recipes(dir: &Path) -> io::Result<()> {
    std::fs::write(dir.join("plot_convergence.gp"), CONVERGENCE_RECIPE)?;
    std::fs::write(dir.join("plot_centerline.gp"), CENTERLINE_RECIPE)?;
    std::fs::write(dir.join("plot_streamfunction.gp"), STREAM_RECIPE)?;
    std::fs::write(dir.join("plot_scaling.gp"), SCALING_RECIPE)?;
    Ok(())
}
