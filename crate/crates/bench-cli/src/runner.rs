//! Executes resolved run points and writes their outputs.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use ndarray::{Array1, Array2};
use rand::rngs::StdRng;
use rand::{RngExt, SeedableRng};
use rayon::prelude::*;
use thiserror::Error;

use sirm::{
    compare_against_reference, dirm_solve, integrate_full, local_sirm_solve_with_reference, make_advection_diffusion,
    make_burgers, make_cavity, sirm_solve_with_reference, BasisMethod, CavityModel, CavitySpec, CoarseTrial,
    ConvergenceReport, FullModel, GridSpec1D, IntegratorConfig, LinearModel, LocalRunReport, PartitionConfig,
    SirmConfig, SirmError, Trajectory, TrialSpec, TrialStrategy, WallClosure,
};

use crate::config::{resolve, BasisKind, Closure, ConfigError, ExperimentConfig, ExperimentKind, Family, Method, Overrides, RunSpec, TrialKind};
use crate::output::{write_field, write_profile, write_recipes, write_results, Measurements, ResultRow};
use crate::scaling::{fit_exponent, write_scaling, write_scaling_points, FitError, ScalingFit};

#[derive(Debug, Error)]
pub enum BenchError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("output: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("all {0} run points failed")]
    AllFailed(usize),
}

impl BenchError {
    /// Process exit status for this error.
    pub fn exit_code(&self) -> i32 {
        match self {
            BenchError::Config(_) => 1,
            _ => 2,
        }
    }
}

pub fn cavity_spec(spec: &RunSpec) -> Result<CavitySpec<f64>, SirmError> {
    let closure = match spec.closure {
        Closure::Thom => WallClosure::Thom,
        Closure::HalfLid => WallClosure::HalfLid,
    };
    Ok(CavitySpec::new(spec.n, spec.reynolds)?.with_closure(closure))
}

fn random_linear(n: usize, seed: u64) -> Result<LinearModel<f64>, SirmError> {
    let mut rng = StdRng::seed_from_u64(seed);
    let g = Array2::from_shape_fn((n, n), |_| rng.random_range(-1.0..1.0));
    let h = Array2::from_shape_fn((n, n), |_| rng.random_range(-1.0..1.0));
    // skew part plus a negative definite part keeps the system stable
    let mut a = (&g - &g.t()) * 0.5 - h.t().dot(&h) / n as f64;
    for i in 0..n {
        a[[i, i]] -= 1.0;
    }
    let x0 = Array1::from_shape_fn(n, |_| rng.random_range(-1.0..1.0));
    LinearModel::implicit(a, x0)
}

pub fn build_model(spec: &RunSpec) -> Result<Box<dyn FullModel<f64>>, SirmError> {
    Ok(match spec.family {
        Family::AdvDiff => Box::new(make_advection_diffusion(GridSpec1D::unit(spec.n)?, spec.c, spec.nu)?),
        Family::Burgers => Box::new(make_burgers(GridSpec1D::unit(spec.n)?, spec.nu)?),
        Family::Cavity => Box::new(make_cavity(cavity_spec(spec)?)?),
        Family::RandomLinear => Box::new(random_linear(spec.n, spec.seed)?),
    })
}

pub fn integrator(spec: &RunSpec) -> IntegratorConfig<f64> {
    IntegratorConfig::new(spec.dt, 0.0, spec.t_end).with_record_every(spec.record_every)
}

pub fn coarse_trial(spec: &RunSpec) -> CoarseTrial {
    match spec.family {
        Family::Cavity => CoarseTrial::new(spec.coarse_factor),
        _ => CoarseTrial::with_points(spec.coarse_points).with_fourier_modes(spec.fourier_modes),
    }
}

pub fn sirm_config(spec: &RunSpec) -> Result<SirmConfig<f64>, SirmError> {
    let mut cfg = SirmConfig::new(spec.eta, spec.m, spec.epsilon, spec.max_iterations)?;
    cfg.settings.gamma = spec.gamma;
    cfg.settings.basis_method = match spec.basis {
        BasisKind::Pod => BasisMethod::Pod,
        BasisKind::GramSchmidt => BasisMethod::gram_schmidt(),
    };
    if let Some(k) = spec.fixed_k {
        cfg.settings.criterion = cfg.settings.criterion.with_bounds(k, Some(k));
    }
    cfg.trial = match spec.trial {
        TrialKind::Constant => TrialSpec::ConstantIc,
        TrialKind::Coarse => TrialSpec::CoarseModel(coarse_trial(spec)),
        TrialKind::TimeHistory => {
            return Err(SirmError::InvalidParameter("the time-history trial needs a partitioned run".into()))
        }
    };
    Ok(cfg)
}

pub fn partition_config(spec: &RunSpec) -> Result<PartitionConfig<f64>, SirmError> {
    let trial = match spec.trial {
        TrialKind::Constant => TrialStrategy::Constant,
        TrialKind::Coarse => TrialStrategy::Coarse(coarse_trial(spec)),
        TrialKind::TimeHistory => TrialStrategy::TimeHistory { first: Some(coarse_trial(spec)) },
    };
    let mut part = PartitionConfig::new(spec.subintervals, spec.m_prime, spec.epsilon)?.with_trial(trial);
    part.inner.max_iterations = spec.max_iterations;
    part.inner.settings.gamma = spec.gamma;
    Ok(part)
}

/// Equal contiguous blocks, the first `n % blocks` one element longer.
pub fn equal_blocks(n: usize, blocks: usize) -> Vec<usize> {
    let blocks = blocks.min(n).max(1);
    (0..blocks).map(|b| n / blocks + usize::from(b < n % blocks)).collect()
}

#[derive(Debug, Clone)]
pub enum MethodReport {
    None,
    Global(ConvergenceReport<f64>),
    Local(LocalRunReport<f64>),
}

#[derive(Debug, Clone)]
pub struct RunResult {
    pub trajectory: Trajectory<f64>,
    pub report: MethodReport,
    pub wall_time: Duration,
}

/// Full-model run used as the reference of every other method.
#[derive(Debug, Clone)]
pub struct Reference {
    pub trajectory: Trajectory<f64>,
    pub wall_time: Duration,
}

pub fn compute_reference(spec: &RunSpec) -> Result<Reference, SirmError> {
    let model = build_model(spec)?;
    let start = Instant::now();
    let trajectory = integrate_full(model.as_ref(), &integrator(spec))?;
    Ok(Reference { trajectory, wall_time: start.elapsed() })
}

/// Runs `spec.method`. For `Method::Full` the reference is returned as the result.
pub fn execute(spec: &RunSpec, reference: Option<&Reference>) -> Result<RunResult, SirmError> {
    let model = build_model(spec)?;
    let integ = integrator(spec);
    let rtraj = reference.map(|r| &r.trajectory);
    let start = Instant::now();
    let (trajectory, report) = match spec.method {
        Method::Full => match reference {
            Some(r) => {
                return Ok(RunResult { trajectory: r.trajectory.clone(), report: MethodReport::None, wall_time: r.wall_time })
            }
            None => (integrate_full(model.as_ref(), &integ)?, MethodReport::None),
        },
        Method::Sirm => {
            let (t, r) = sirm_solve_with_reference(model.as_ref(), &sirm_config(spec)?, &integ, rtraj)?;
            (t, MethodReport::Global(r))
        }
        Method::LocalSirm => {
            let (t, r) = local_sirm_solve_with_reference(model.as_ref(), &partition_config(spec)?, &integ, rtraj)?;
            (t, MethodReport::Local(r))
        }
        Method::Dirm => {
            let cfg = sirm_config(spec)?;
            let blocks = equal_blocks(model.dim(), spec.dirm_blocks);
            let (t, r) = dirm_solve(model.as_ref(), &blocks, spec.dirm_modes, &cfg, &integ, rtraj)?;
            (t, MethodReport::Global(r))
        }
        Method::Coarse => {
            let x0 = model.initial_state();
            let steps = integ.n_steps()?;
            let times: Vec<f64> =
                (0..=steps).filter(|k| k % spec.record_every == 0 || *k == steps).map(|k| integ.time_at(k)).collect();
            let spec_trial = TrialSpec::CoarseModel(coarse_trial(spec));
            (sirm::sirm::build_trial(model.as_ref(), x0.view(), &spec_trial, &integ, &times)?, MethodReport::None)
        }
    };
    Ok(RunResult { trajectory, report, wall_time: start.elapsed() })
}

pub fn measure(result: &RunResult, reference: Option<&Reference>, convergence_file: String) -> Result<Measurements, SirmError> {
    let mut m = Measurements { wall_time_s: result.wall_time.as_secs_f64(), convergence_file, ..Default::default() };
    if let Some(r) = reference {
        let e = compare_against_reference(&result.trajectory, &r.trajectory)?;
        m.sup_error = Some(e.sup);
        m.final_error = Some(e.final_error);
    }
    match &result.report {
        MethodReport::None => {}
        MethodReport::Global(rep) => {
            m.iterations = Some(rep.iterations());
            m.converged = Some(rep.converged);
            m.mode_counts = rep.mode_counts();
            m.final_k = rep.last().map(|r| r.k);
            m.first_iteration_error = rep.records.first().and_then(|r| r.true_error);
        }
        MethodReport::Local(rep) => {
            m.iterations = Some(rep.subintervals.iter().map(|s| s.iterations).sum());
            m.converged = Some(rep.subintervals.iter().all(|s| s.converged));
            m.mode_counts = rep.subintervals.iter().map(|s| s.k_prime).collect();
            m.final_k = rep.subintervals.last().map(|s| s.k_prime);
            m.avg_inner_iterations = Some(rep.average_iterations());
            m.max_k_prime = Some(rep.max_k_prime());
        }
    }
    Ok(m)
}

fn reference_key(spec: &RunSpec) -> String {
    format!(
        "{:?}|{}|{:e}|{:e}|{:e}|{:?}|{:e}|{:e}|{}|{}",
        spec.family, spec.n, spec.c, spec.nu, spec.reynolds, spec.closure, spec.t_end, spec.dt, spec.record_every, spec.seed
    )
}

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub out_dir: Option<PathBuf>,
    pub single_thread: bool,
    pub overrides: Overrides,
}

#[derive(Debug, Clone)]
pub struct ExperimentSummary {
    pub out_dir: PathBuf,
    pub rows: Vec<ResultRow>,
    pub scaling: Vec<ScalingFit>,
}

fn write_cavity_outputs(dir: &Path, spec: &RunSpec, result: &RunResult, reference: Option<&Reference>) -> Result<(), BenchError> {
    let cspec = cavity_spec(spec).map_err(|e| ConfigError::Invalid(e.to_string()))?;
    let model: CavityModel<f64> = make_cavity(cspec).map_err(|e| ConfigError::Invalid(e.to_string()))?;
    std::fs::create_dir_all(dir)?;
    let x = result.trajectory.final_state();
    let xr = reference.map(|r| r.trajectory.final_state());
    let u = model.centerline_u(x);
    let ur = xr.map(|v| model.centerline_u(v));
    write_profile(BufWriter::new(File::create(dir.join("centerline_u.csv"))?), "y", "u", &u, ur.as_deref())?;
    let v = model.centerline_v(x);
    let vr = xr.map(|v| model.centerline_v(v));
    write_profile(BufWriter::new(File::create(dir.join("centerline_v.csv"))?), "x", "v", &v, vr.as_deref())?;
    let h = cspec.h;
    write_field(BufWriter::new(File::create(dir.join("streamfunction.txt"))?), &model.stream_matrix(x), (h, h))?;
    if let Some(xr) = xr {
        write_field(BufWriter::new(File::create(dir.join("streamfunction_full.txt"))?), &model.stream_matrix(xr), (h, h))?;
    }
    Ok(())
}

fn write_convergence(path: &Path, report: &MethodReport) -> std::io::Result<bool> {
    match report {
        MethodReport::None => Ok(false),
        MethodReport::Global(r) => r.write_csv(BufWriter::new(File::create(path)?)).map(|_| true),
        MethodReport::Local(r) => r.write_csv(BufWriter::new(File::create(path)?)).map(|_| true),
    }
}

/// Resolves `cfg`, executes every run point and writes all outputs.
pub fn run_experiment(cfg: &ExperimentConfig, opts: &RunOptions) -> Result<ExperimentSummary, BenchError> {
    let specs = resolve(cfg, opts.overrides)?;
    let out_dir = opts.out_dir.clone().or_else(|| cfg.output.dir.clone()).unwrap_or_else(|| PathBuf::from("results"));
    std::fs::create_dir_all(&out_dir)?;
    let name = cfg.name();
    let scaling = cfg.kind() == ExperimentKind::Scaling;
    // timings of a scaling study are only meaningful without contention
    let threads = if opts.single_thread || scaling { 1 } else { 0 };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| std::io::Error::other(e.to_string()))?;

    let mut keys: BTreeMap<String, RunSpec> = BTreeMap::new();
    for s in &specs {
        if s.family != Family::RandomLinear || s.method != Method::Full {
            keys.entry(reference_key(s)).or_insert_with(|| s.clone());
        }
    }
    log::info!("{} run points, {} reference runs", specs.len(), keys.len());
    let refs: BTreeMap<String, Result<Reference, String>> = pool.install(|| {
        keys.par_iter().map(|(k, s)| (k.clone(), compute_reference(s).map_err(|e| e.to_string()))).collect()
    });

    let results: Vec<(ResultRow, Option<RunResult>)> = pool.install(|| {
        specs
            .par_iter()
            .enumerate()
            .map(|(i, spec)| {
                let run_id = format!("{name}_{i:03}");
                let reference = match refs.get(&reference_key(spec)) {
                    Some(Ok(r)) => Some(r),
                    Some(Err(e)) => {
                        return (ResultRow::new(run_id, spec, Err(format!("reference run failed: {e}"))), None);
                    }
                    None => None,
                };
                log::info!("{run_id}: {:?} n = {}", spec.method, spec.n);
                let outcome = execute(spec, reference).and_then(|res| {
                    let conv = format!("convergence_{run_id}.csv");
                    let wrote = write_convergence(&out_dir.join(&conv), &res.report).unwrap_or(false);
                    let m = measure(&res, reference.filter(|_| spec.method != Method::Full), if wrote { conv } else { String::new() })?;
                    Ok((m, res))
                });
                match outcome {
                    Ok((m, res)) => (ResultRow::new(run_id, spec, Ok(m)), Some(res)),
                    Err(e) => {
                        log::warn!("{run_id} failed: {e}");
                        (ResultRow::new(run_id, spec, Err(e.to_string())), None)
                    }
                }
            })
            .collect()
    });

    for ((row, res), spec) in results.iter().zip(&specs) {
        if let (Some(res), Family::Cavity) = (res, spec.family) {
            let reference = refs.get(&reference_key(spec)).and_then(|r| r.as_ref().ok());
            write_cavity_outputs(&out_dir.join(&row.run_id), spec, res, reference)?;
        }
    }
    let rows: Vec<ResultRow> = results.into_iter().map(|(r, _)| r).collect();
    write_results(BufWriter::new(File::create(out_dir.join("results.csv"))?), &rows)?;
    write_recipes(&out_dir)?;

    let mut fits = Vec::new();
    if scaling {
        for method in [Method::Full, Method::LocalSirm] {
            let points: Vec<(f64, f64)> =
                rows.iter().filter(|r| r.method == method && r.is_ok()).map(|r| (r.dim as f64, r.wall_time_s)).collect();
            let exponent = fit_exponent(&points);
            if let Err(FitError::TooFewPoints(k)) = &exponent {
                log::warn!("{method:?}: only {k} usable sizes, fit skipped");
            }
            let label = match method {
                Method::Full => "full",
                _ => "local_sirm",
            };
            fits.push(ScalingFit { method: label.into(), points, exponent });
        }
        write_scaling(BufWriter::new(File::create(out_dir.join("scaling.csv"))?), &fits)?;
        write_scaling_points(BufWriter::new(File::create(out_dir.join("scaling_points.csv"))?), &fits)?;
    }

    if !rows.is_empty() && rows.iter().all(|r| !r.is_ok()) {
        return Err(BenchError::AllFailed(rows.len()));
    }
    Ok(ExperimentSummary { out_dir, rows, scaling: fits })
}
