//! Subspace iteration using reduced models: the global fixed-point loop, its
//! convergence report, the posterior error estimator and the DIRM baseline.

pub mod dirm;
pub mod trial;

use std::io::Write;
use std::time::{Duration, Instant};

use ndarray::{Array1, Array2, ArrayView1};

use crate::dynsys::FullModel;
use crate::error::{Result, SirmError};
use crate::linalg::distance;
use crate::metrics::{compare_against_reference, ErrorMetrics};
use crate::real::Real;
use crate::rom::{
    assemble_information_matrix, build_reduced_model, gram_schmidt_basis, pod_basis, truncation_error_estimate, Basis,
    EnergyCriterion, InformationMatrix, DEFAULT_DROP_TOL,
};
use crate::timestep::{integrate_reduced_model, IntegratorConfig, Trajectory};

pub use dirm::{dirm_effective_dimension, dirm_solve};
pub use trial::{build_trial, coarse_trial, CoarseTrial, TrialSpec};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BasisMethod<T> {
    Pod,
    GramSchmidt { drop_tol: T },
}

impl<T: Real> BasisMethod<T> {
    pub fn gram_schmidt() -> Self {
        BasisMethod::GramSchmidt { drop_tol: T::lit(DEFAULT_DROP_TOL) }
    }
}

/// Which columns form the ensemble before the initial state is appended.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum EnsembleKind {
    /// `[X, γF]`
    #[default]
    StatesAndTangents,
    /// `[x₀, γF]`
    InitialAndTangents,
}

/// Per-iteration choices shared by global and local SIRM.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IterationSettings<T> {
    pub gamma: T,
    pub criterion: EnergyCriterion<T>,
    pub basis_method: BasisMethod<T>,
    pub ensemble: EnsembleKind,
    /// Append `x₀` as an extra column so the subspace always contains it.
    pub append_initial: bool,
    /// Split ensemble columns along the model's field blocks.
    pub split_fields: bool,
    /// Reduced-model step; `None` uses the full model's step.
    pub reduced_dt: Option<T>,
}

impl<T: Real> IterationSettings<T> {
    pub fn new(criterion: EnergyCriterion<T>) -> Self {
        Self {
            gamma: T::one(),
            criterion,
            basis_method: BasisMethod::Pod,
            ensemble: EnsembleKind::default(),
            append_initial: true,
            split_fields: true,
            reduced_dt: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SirmConfig<T> {
    pub settings: IterationSettings<T>,
    /// Snapshot count, equispaced over the span including both ends.
    pub m: usize,
    /// Tolerance on the sup-over-samples L2 distance between successive iterates.
    pub epsilon: T,
    pub max_iterations: usize,
    pub trial: TrialSpec<T>,
    /// Abort when the successive distance grows 100× over three rising iterations.
    pub divergence_guard: bool,
    /// Keep every sampled iterate (including the trial) in the report.
    pub keep_iterates: bool,
}

impl<T: Real> SirmConfig<T> {
    pub fn new(eta: T, m: usize, epsilon: T, max_iterations: usize) -> Result<Self> {
        Ok(Self {
            settings: IterationSettings::new(EnergyCriterion::new(eta)?),
            m,
            epsilon,
            max_iterations,
            trial: TrialSpec::ConstantIc,
            divergence_guard: true,
            keep_iterates: false,
        })
    }

    pub fn with_trial(mut self, trial: TrialSpec<T>) -> Self {
        self.trial = trial;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.m < 2 {
            return Err(SirmError::InvalidParameter(format!("need at least 2 snapshots, got {}", self.m)));
        }
        if !(self.epsilon > T::zero()) {
            return Err(SirmError::InvalidParameter("epsilon must be positive".into()));
        }
        if self.max_iterations == 0 {
            return Err(SirmError::InvalidParameter("max_iterations must be at least 1".into()));
        }
        if !(self.settings.gamma > T::zero()) {
            return Err(SirmError::InvalidParameter("gamma must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IterationRecord<T> {
    pub iteration: usize,
    pub k: usize,
    pub truncation_estimate: T,
    pub successive_diff: T,
    pub true_error: Option<T>,
    pub wall_time: Duration,
    /// Spectrum of the ensemble (empty for Gram–Schmidt bases).
    pub singular_values: Vec<T>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceReport<T> {
    pub records: Vec<IterationRecord<T>>,
    pub converged: bool,
    pub sample_times: Vec<T>,
    /// Sampled iterates `x̂⁰, x̂¹, …` when requested.
    pub iterates: Vec<Trajectory<T>>,
}

impl<T: Real> ConvergenceReport<T> {
    pub fn iterations(&self) -> usize {
        self.records.len()
    }

    pub fn last(&self) -> Option<&IterationRecord<T>> {
        self.records.last()
    }

    pub fn mode_counts(&self) -> Vec<usize> {
        self.records.iter().map(|r| r.k).collect()
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "# successive_diff and true_error: sup over sample times of the unweighted L2 norm")?;
        writeln!(w, "iteration,k,truncation_estimate,successive_diff,true_error,wall_time_s")?;
        for r in &self.records {
            let te = r.true_error.map(|e| format!("{e:e}")).unwrap_or_default();
            writeln!(
                w,
                "{},{},{:e},{:e},{},{:.6}",
                r.iteration,
                r.k,
                r.truncation_estimate,
                r.successive_diff,
                te,
                r.wall_time.as_secs_f64()
            )?;
        }
        Ok(())
    }
}

/// Step indices of `m` equispaced samples over `n_steps` steps, both ends included.
pub fn sample_steps(n_steps: usize, m: usize) -> Result<Vec<usize>> {
    if m < 2 || m - 1 > n_steps {
        return Err(SirmError::InvalidParameter(format!(
            "cannot place {m} samples on {n_steps} integrator steps"
        )));
    }
    Ok((0..m).map(|j| ((j * n_steps) as f64 / (m - 1) as f64).round() as usize).collect())
}

pub(crate) fn sample_times<T: Real>(integ: &IntegratorConfig<T>, m: usize) -> Result<Vec<T>> {
    let steps = integ.n_steps()?;
    Ok(sample_steps(steps, m)?.into_iter().map(|k| integ.time_at(k)).collect())
}

/// Result of one subspace iteration.
#[derive(Debug, Clone)]
pub struct IterationOutcome<T> {
    pub basis: Basis<T>,
    /// Reduced coordinates at every reduced step.
    pub reduced: Trajectory<T>,
    /// Lifted, constraint-projected states at the sample times.
    pub samples: Trajectory<T>,
}

pub(crate) fn basis_from_ensemble<T: Real>(
    y: InformationMatrix<T>,
    model: &dyn FullModel<T>,
    x0: ArrayView1<'_, T>,
    settings: &IterationSettings<T>,
) -> Result<Basis<T>> {
    let y = if settings.append_initial { y.with_column(x0)? } else { y };
    let y = if settings.split_fields { y.split_blocks(&model.field_blocks()) } else { y };
    match settings.basis_method {
        BasisMethod::Pod => pod_basis(&y, &settings.criterion),
        BasisMethod::GramSchmidt { drop_tol } => gram_schmidt_basis(&y, drop_tol),
    }
}

pub(crate) fn lift_samples<T: Real>(
    basis: &Basis<T>,
    reduced: &Trajectory<T>,
    times: &[T],
    model: &dyn FullModel<T>,
) -> Result<Trajectory<T>> {
    let cols = times
        .iter()
        .map(|&t| {
            let mut x = basis.lift(reduced.at(t)?.view())?;
            model.enforce_constraints(&mut x)?;
            Ok(x)
        })
        .collect::<Result<Vec<_>>>()?;
    Trajectory::from_columns(times.to_vec(), &cols)
}

/// One pass of the loop: ensemble from `current`, basis, reduced solve from `x0`, lift.
pub fn subspace_iteration<T: Real>(
    model: &dyn FullModel<T>,
    x0: ArrayView1<'_, T>,
    current: &Trajectory<T>,
    settings: &IterationSettings<T>,
    integ: &IntegratorConfig<T>,
) -> Result<IterationOutcome<T>> {
    let mut y = assemble_information_matrix(current, model, settings.gamma)?;
    if settings.ensemble == EnsembleKind::InitialAndTangents {
        let m = current.len();
        let mut cols = Array2::zeros((y.nrows(), m + 1));
        cols.column_mut(0).assign(&x0);
        cols.slice_mut(ndarray::s![.., 1..]).assign(&y.columns.slice(ndarray::s![.., m..]));
        y.columns = cols;
    }
    let basis = basis_from_ensemble(y, model, x0, settings)?;
    let rom = build_reduced_model(&basis, model)?;
    let z0 = basis.project(x0)?;
    let mut rcfg = integ.with_record_every(1);
    if let Some(dt) = settings.reduced_dt {
        rcfg.dt = dt;
    }
    let reduced = integrate_reduced_model(&rom, z0.view(), &rcfg)?;
    let samples = lift_samples(&basis, &reduced, current.times(), model)?;
    Ok(IterationOutcome { basis, reduced, samples })
}

fn sup_distance<T: Real>(a: &Trajectory<T>, b: &Trajectory<T>) -> T {
    (0..a.len()).fold(T::zero(), |m, i| m.max(distance(a.state(i), b.state(i))))
}

pub(crate) struct LoopOutput<T> {
    pub last: IterationOutcome<T>,
    pub report: ConvergenceReport<T>,
}

/// Iterates from the sampled trial until successive iterates agree to `epsilon`.
pub(crate) fn iterate<T: Real>(
    model: &dyn FullModel<T>,
    x0: ArrayView1<'_, T>,
    trial: Trajectory<T>,
    cfg: &SirmConfig<T>,
    integ: &IntegratorConfig<T>,
    reference: Option<&Trajectory<T>>,
) -> Result<LoopOutput<T>> {
    let sample_times = trial.times().to_vec();
    let mut report = ConvergenceReport { records: Vec::new(), converged: false, sample_times, iterates: Vec::new() };
    if cfg.keep_iterates {
        report.iterates.push(trial.clone());
    }
    let mut current = trial;
    let mut last = None;
    let mut diffs: Vec<T> = Vec::new();
    for j in 1..=cfg.max_iterations {
        let start = Instant::now();
        let outcome = subspace_iteration(model, x0, &current, &cfg.settings, integ).map_err(|e| match e {
            SirmError::NonFinite { time, .. } => SirmError::NonFinite { iteration: j, time },
            other => other,
        })?;
        let diff = sup_distance(&outcome.samples, &current);
        if !diff.is_finite() {
            return Err(SirmError::NonFinite { iteration: j, time: f64::NAN });
        }
        let true_error = match reference {
            Some(r) => Some(compare_against_reference(&outcome.samples, r)?.sup),
            None => None,
        };
        let sv = outcome.basis.singular_values().to_vec();
        let k = outcome.basis.k();
        let truncation_estimate = if sv.is_empty() { T::zero() } else { truncation_error_estimate(&sv, k) };
        report.records.push(IterationRecord {
            iteration: j,
            k,
            truncation_estimate,
            successive_diff: diff,
            true_error,
            wall_time: start.elapsed(),
            singular_values: sv,
        });
        log::debug!("iteration {j}: k = {k}, successive diff = {diff:e}");
        if cfg.keep_iterates {
            report.iterates.push(outcome.samples.clone());
        }
        current = outcome.samples.clone();
        last = Some(outcome);
        diffs.push(diff);
        if diff < cfg.epsilon {
            report.converged = true;
            break;
        }
        if cfg.divergence_guard && diffs.len() >= 4 {
            let w = &diffs[diffs.len() - 4..];
            let rising = w.windows(2).all(|p| p[1] > p[0]);
            if rising && w[3] > T::lit(100.0) * w[0] {
                return Err(SirmError::Diverged(format!(
                    "successive difference grew from {:e} to {:e} over iterations {}..{j}",
                    w[0],
                    w[3],
                    j - 3
                )));
            }
        }
    }
    Ok(LoopOutput { last: last.expect("at least one iteration"), report })
}

/// Lifts the reduced solution at the integrator's recording stride.
pub(crate) fn lift_recorded<T: Real>(
    model: &dyn FullModel<T>,
    outcome: &IterationOutcome<T>,
    integ: &IntegratorConfig<T>,
    mut keep: impl FnMut(usize) -> bool,
) -> Result<Trajectory<T>> {
    let steps = integ.n_steps()?;
    let times: Vec<T> = (0..=steps).filter(|&k| k == 0 || k == steps || keep(k)).map(|k| integ.time_at(k)).collect();
    lift_samples(&outcome.basis, &outcome.reduced, &times, model)
}

/// Global SIRM. Returns the last iterate at the integrator's recording stride.
pub fn sirm_solve<T: Real>(
    model: &dyn FullModel<T>,
    cfg: &SirmConfig<T>,
    integ: &IntegratorConfig<T>,
) -> Result<(Trajectory<T>, ConvergenceReport<T>)> {
    sirm_solve_with_reference(model, cfg, integ, None)
}

/// Global SIRM recording the true error against `reference` at every iteration.
pub fn sirm_solve_with_reference<T: Real>(
    model: &dyn FullModel<T>,
    cfg: &SirmConfig<T>,
    integ: &IntegratorConfig<T>,
    reference: Option<&Trajectory<T>>,
) -> Result<(Trajectory<T>, ConvergenceReport<T>)> {
    cfg.validate()?;
    let x0 = model.initial_state();
    let times = sample_times(integ, cfg.m)?;
    let trial = build_trial(model, x0.view(), &cfg.trial, integ, &times)?;
    let out = iterate(model, x0.view(), trial, cfg, integ, reference)?;
    let stride = integ.record_every;
    let traj = lift_recorded(model, &out.last, integ, |k| k % stride == 0)?;
    Ok((traj, out.report))
}

/// `Δ(t) = ‖x̂ʲ⁺¹(t) − x̂ʲ(t)‖` with its supremum.
pub fn posterior_error<T: Real>(trial: &Trajectory<T>, refined: &Trajectory<T>) -> Result<ErrorMetrics<T>> {
    compare_against_reference(refined, trial)
}

pub(crate) fn constant_trajectory<T: Real>(x: ArrayView1<'_, T>, times: &[T]) -> Result<Trajectory<T>> {
    let cols: Vec<Array1<T>> = times.iter().map(|_| x.to_owned()).collect();
    Trajectory::from_columns(times.to_vec(), &cols)
}
