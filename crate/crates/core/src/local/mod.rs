//! Local SIRM: the time span is cut into equal subintervals, each solved by the
//! subspace iteration from the previous subinterval's accepted end state.

use std::io::Write;
use std::time::{Duration, Instant};

use ndarray::ArrayView1;

use crate::dynsys::FullModel;
use crate::error::{Result, SirmError};
use crate::linalg::norm2;
use crate::real::Real;
use crate::rom::{assemble_information_matrix, build_reduced_model};
use crate::sirm::{
    basis_from_ensemble, coarse_trial, constant_trajectory, iterate, lift_recorded, lift_samples, sample_steps,
    subspace_iteration, BasisMethod, CoarseTrial, IterationOutcome, IterationSettings, SirmConfig,
};
use crate::timestep::{integrate_reduced_model, IntegratorConfig, Trajectory};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TrialStrategy {
    Constant,
    Coarse(CoarseTrial),
    /// Extrapolate from the previous subinterval's ensemble; the first subinterval
    /// uses the coarse trial when one is given, the constant trial otherwise.
    TimeHistory { first: Option<CoarseTrial> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct PartitionConfig<T> {
    pub n_subintervals: usize,
    /// Samples per subinterval, both ends included.
    pub m_prime: usize,
    pub trial: TrialStrategy,
    /// Per-subinterval loop settings; its `m` and `trial` are ignored.
    pub inner: SirmConfig<T>,
}

impl<T: Real> PartitionConfig<T> {
    /// Gram–Schmidt bases and at most 10 inner iterations.
    pub fn new(n_subintervals: usize, m_prime: usize, epsilon: T) -> Result<Self> {
        let mut inner = SirmConfig::new(T::lit(1e-10), m_prime, epsilon, 10)?;
        inner.settings.basis_method = BasisMethod::gram_schmidt();
        Ok(Self { n_subintervals, m_prime, trial: TrialStrategy::Constant, inner })
    }

    pub fn with_trial(mut self, trial: TrialStrategy) -> Self {
        self.trial = trial;
        self
    }

    pub fn global_samples(&self) -> usize {
        (self.m_prime - 1) * self.n_subintervals + 1
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_subintervals == 0 {
            return Err(SirmError::InvalidParameter("need at least one subinterval".into()));
        }
        if self.m_prime < 2 {
            return Err(SirmError::InvalidParameter("need at least 2 samples per subinterval".into()));
        }
        let mut inner = self.inner.clone();
        inner.m = self.m_prime;
        inner.validate()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SubintervalRecord<T> {
    /// 1-based
    pub index: usize,
    pub iterations: usize,
    pub k_prime: usize,
    pub endpoint_norm: T,
    pub successive_diff: T,
    pub converged: bool,
    pub wall_time: Duration,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LocalRunReport<T> {
    pub subintervals: Vec<SubintervalRecord<T>>,
    pub wall_time: Duration,
}

impl<T: Real> LocalRunReport<T> {
    pub fn average_iterations(&self) -> f64 {
        if self.subintervals.is_empty() {
            return 0.0;
        }
        self.subintervals.iter().map(|s| s.iterations as f64).sum::<f64>() / self.subintervals.len() as f64
    }

    pub fn max_k_prime(&self) -> usize {
        self.subintervals.iter().map(|s| s.k_prime).max().unwrap_or(0)
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "subinterval,iterations,k_prime,successive_diff,wall_time_s")?;
        for s in &self.subintervals {
            writeln!(
                w,
                "{},{},{},{:e},{:.6}",
                s.index,
                s.iterations,
                s.k_prime,
                s.successive_diff,
                s.wall_time.as_secs_f64()
            )?;
        }
        Ok(())
    }
}

/// Trial on a subinterval built from the previous subinterval's samples: the ensemble
/// `[x̂(t₀..), γ f(t₀..)]` spans a subspace, and the projected model is integrated
/// from the previous end state `prev.final_state()`. A rank-deficient ensemble falls
/// back to the constant trial.
pub fn time_history_trial<T: Real>(
    prev: &Trajectory<T>,
    model: &dyn FullModel<T>,
    settings: &IterationSettings<T>,
    integ: &IntegratorConfig<T>,
    times: &[T],
) -> Result<Trajectory<T>> {
    let x_start = prev.final_state().to_owned();
    let attempt = || -> Result<Trajectory<T>> {
        let y = assemble_information_matrix(prev, model, settings.gamma)?;
        let basis = basis_from_ensemble(y, model, x_start.view(), settings)?;
        let rom = build_reduced_model(&basis, model)?;
        let z0 = basis.project(x_start.view())?;
        let mut rcfg = integ.with_record_every(1);
        if let Some(dt) = settings.reduced_dt {
            rcfg.dt = dt;
        }
        let reduced = integrate_reduced_model(&rom, z0.view(), &rcfg)?;
        lift_samples(&basis, &reduced, times, model)
    };
    match attempt() {
        Ok(t) => Ok(t),
        Err(SirmError::DegenerateEnsemble(why)) => {
            log::warn!("time-history trial fell back to the constant trial: {why}");
            constant_trajectory(x_start.view(), times)
        }
        Err(e) => Err(e),
    }
}

/// One inner iteration on a subinterval: ensemble from all `m′` states and tangents of
/// `current`, basis, reduced solve from `state_start`.
pub fn local_inner_iteration<T: Real>(
    state_start: ArrayView1<'_, T>,
    current: &Trajectory<T>,
    model: &dyn FullModel<T>,
    settings: &IterationSettings<T>,
    integ: &IntegratorConfig<T>,
) -> Result<IterationOutcome<T>> {
    subspace_iteration(model, state_start, current, settings, integ)
}

/// Runs local SIRM over `integ`'s span. The returned trajectory is recorded at the
/// integrator's stride and always contains every subinterval boundary.
pub fn local_sirm_solve<T: Real>(
    model: &dyn FullModel<T>,
    part: &PartitionConfig<T>,
    integ: &IntegratorConfig<T>,
) -> Result<(Trajectory<T>, LocalRunReport<T>)> {
    local_sirm_solve_with_reference(model, part, integ, None)
}

pub fn local_sirm_solve_with_reference<T: Real>(
    model: &dyn FullModel<T>,
    part: &PartitionConfig<T>,
    integ: &IntegratorConfig<T>,
    reference: Option<&Trajectory<T>>,
) -> Result<(Trajectory<T>, LocalRunReport<T>)> {
    part.validate()?;
    let steps = integ.n_steps()?;
    let big_m = part.n_subintervals;
    if steps % big_m != 0 {
        return Err(SirmError::InvalidParameter(format!(
            "{steps} steps cannot be split into {big_m} equal subintervals"
        )));
    }
    let per = steps / big_m;
    let offsets = sample_steps(per, part.m_prime)?;
    let mut inner = part.inner.clone();
    inner.m = part.m_prime;

    let start = Instant::now();
    let mut x_start = model.initial_state();
    let mut whole: Option<Trajectory<T>> = None;
    let mut prev_samples: Option<Trajectory<T>> = None;
    let mut records = Vec::with_capacity(big_m);
    let stride = integ.record_every;

    for i in 0..big_m {
        let t0 = Instant::now();
        let base = i * per;
        let sub = integ.restricted(integ.time_at(base), integ.time_at(base + per));
        let times: Vec<T> = offsets.iter().map(|&k| integ.time_at(base + k)).collect();
        let wrap = |e: SirmError| SirmError::Subinterval { index: i + 1, source: Box::new(e) };

        let trial = match (part.trial, &prev_samples) {
            (TrialStrategy::TimeHistory { .. }, Some(prev)) => {
                time_history_trial(prev, model, &inner.settings, &sub, &times)
            }
            (TrialStrategy::Coarse(c), _) | (TrialStrategy::TimeHistory { first: Some(c) }, None) => {
                coarse_trial(model, x_start.view(), &sub, &times, &c)
            }
            _ => constant_trajectory(x_start.view(), &times),
        }
        .map_err(wrap)?;

        let out = iterate(model, x_start.view(), trial, &inner, &sub, reference).map_err(wrap)?;
        let local = lift_recorded(model, &out.last, &sub, |k| (base + k) % stride == 0).map_err(wrap)?;
        x_start = local.final_state().to_owned();
        let last = out.report.last().expect("at least one iteration");
        records.push(SubintervalRecord {
            index: i + 1,
            iterations: out.report.iterations(),
            k_prime: last.k,
            endpoint_norm: norm2(x_start.view()),
            successive_diff: last.successive_diff,
            converged: out.report.converged,
            wall_time: t0.elapsed(),
        });
        prev_samples = Some(out.last.samples);
        match whole.as_mut() {
            Some(w) => w.extend(&local)?,
            None => whole = Some(local),
        }
    }
    let report = LocalRunReport { subintervals: records, wall_time: start.elapsed() };
    Ok((whole.expect("at least one subinterval"), report))
}
