//! IMEX Adams–Bashforth-2 / Crank–Nicolson time integration for full and reduced
//! models, and the linear solvers those steps need.

pub mod cyclic;
pub mod dense;
pub mod operator;
pub mod poisson;

use ndarray::{Array1, Array2, ArrayView1, Axis};

use crate::dynsys::FullModel;
use crate::error::{Result, SirmError};
use crate::linalg::{all_finite, lerp};
use crate::real::Real;
use crate::rom::{build_reduced_model, Basis, ReducedModel};
use crate::timestep::dense::LuFactor;

pub use cyclic::solve_cyclic_tridiagonal;
pub use dense::LuFactor as DenseLu;
pub use operator::{CirculantTridiagonal, DenseOperator, DiagonalOperator, LinearOperator, LinearSolveStats};
pub use poisson::{DirichletLaplacian, Preconditioner, DEFAULT_POISSON_TOL};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Scheme {
    #[default]
    ImexAb2Cn,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegratorConfig<T> {
    pub dt: T,
    pub t_start: T,
    pub t_end: T,
    pub scheme: Scheme,
    /// Snapshot stride in steps; the final state is always recorded as well.
    pub record_every: usize,
}

impl<T: Real> IntegratorConfig<T> {
    pub fn new(dt: T, t_start: T, t_end: T) -> Self {
        Self { dt, t_start, t_end, scheme: Scheme::ImexAb2Cn, record_every: 1 }
    }

    pub fn with_record_every(mut self, stride: usize) -> Self {
        self.record_every = stride;
        self
    }

    /// Number of steps, validating that the span is an integer multiple of `dt`.
    pub fn n_steps(&self) -> Result<usize> {
        if !(self.dt > T::zero()) || !self.dt.is_finite() {
            return Err(SirmError::InvalidParameter(format!("time step must be positive, got {}", self.dt)));
        }
        if !(self.t_end > self.t_start) {
            return Err(SirmError::InvalidParameter(format!(
                "t_end ({}) must exceed t_start ({})",
                self.t_end, self.t_start
            )));
        }
        if self.record_every == 0 {
            return Err(SirmError::InvalidParameter("record_every must be positive".into()));
        }
        let ratio = ((self.t_end - self.t_start) / self.dt).to_f64_lossy();
        let steps = ratio.round();
        if steps < 1.0 || (ratio - steps).abs() > 1e-6 * steps.max(1.0) {
            return Err(SirmError::InvalidParameter(format!(
                "span {} is not an integer multiple of dt = {}",
                self.t_end - self.t_start,
                self.dt
            )));
        }
        Ok(steps as usize)
    }

    /// Time of step `k`, computed from the index rather than accumulated.
    pub fn time_at(&self, k: usize) -> T {
        self.t_start + self.dt * T::from_count(k)
    }

    /// Same step and stride over `[t_start, t_end]`.
    pub fn restricted(&self, t_start: T, t_end: T) -> Self {
        Self { t_start, t_end, ..*self }
    }
}

/// Time-stamped sequence of states, one column per recorded time.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory<T> {
    times: Vec<T>,
    states: Array2<T>,
}

impl<T: Real> Trajectory<T> {
    pub fn new(times: Vec<T>, states: Array2<T>) -> Result<Self> {
        if times.is_empty() {
            return Err(SirmError::InvalidParameter("trajectory needs at least one sample".into()));
        }
        if states.ncols() != times.len() {
            return Err(SirmError::ShapeMismatch(format!(
                "{} state columns for {} times",
                states.ncols(),
                times.len()
            )));
        }
        if times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(SirmError::InvalidParameter("trajectory times must be strictly increasing".into()));
        }
        Ok(Self { times, states })
    }

    pub fn from_columns(times: Vec<T>, columns: &[Array1<T>]) -> Result<Self> {
        let n = columns.first().map_or(0, |c| c.len());
        if columns.iter().any(|c| c.len() != n) {
            return Err(SirmError::ShapeMismatch("trajectory columns differ in length".into()));
        }
        let mut states = Array2::zeros((n, columns.len()));
        for (mut col, c) in states.columns_mut().into_iter().zip(columns) {
            col.assign(c);
        }
        Self::new(times, states)
    }

    pub fn times(&self) -> &[T] {
        &self.times
    }

    pub fn states(&self) -> &Array2<T> {
        &self.states
    }

    pub fn into_parts(self) -> (Vec<T>, Array2<T>) {
        (self.times, self.states)
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.states.nrows()
    }

    pub fn state(&self, i: usize) -> ArrayView1<'_, T> {
        self.states.column(i)
    }

    pub fn initial_state(&self) -> ArrayView1<'_, T> {
        self.states.column(0)
    }

    pub fn final_state(&self) -> ArrayView1<'_, T> {
        self.states.column(self.len() - 1)
    }

    pub fn t_start(&self) -> T {
        self.times[0]
    }

    pub fn t_end(&self) -> T {
        self.times[self.len() - 1]
    }

    fn time_slack(&self) -> T {
        let span = (self.t_end() - self.t_start()).abs().max(T::one());
        span * T::lit(1e-9).max(T::lit(16.0) * T::epsilon())
    }

    /// State at time `t` by linear interpolation between neighbouring samples.
    pub fn at(&self, t: T) -> Result<Array1<T>> {
        let slack = self.time_slack();
        if t < self.t_start() - slack || t > self.t_end() + slack {
            return Err(SirmError::DisjointTimes);
        }
        let j = self.times.partition_point(|&s| s <= t);
        if j == 0 {
            return Ok(self.state(0).to_owned());
        }
        if j >= self.len() {
            return Ok(self.final_state().to_owned());
        }
        let (t0, t1) = (self.times[j - 1], self.times[j]);
        if (t - t0).abs() <= slack {
            return Ok(self.state(j - 1).to_owned());
        }
        let w = (t - t0) / (t1 - t0);
        Ok(lerp(self.state(j - 1), self.state(j), w))
    }

    pub fn resample(&self, times: &[T]) -> Result<Self> {
        let cols = times.iter().map(|&t| self.at(t)).collect::<Result<Vec<_>>>()?;
        Self::from_columns(times.to_vec(), &cols)
    }

    pub fn select(&self, indices: &[usize]) -> Result<Self> {
        let times = indices.iter().map(|&i| self.times[i]).collect();
        Self::new(times, self.states.select(Axis(1), indices))
    }

    /// Applies `f` to every state column.
    pub fn map_states(&self, mut f: impl FnMut(ArrayView1<'_, T>) -> Result<Array1<T>>) -> Result<Self> {
        let cols = self
            .states
            .columns()
            .into_iter()
            .map(&mut f)
            .collect::<Result<Vec<_>>>()?;
        Self::from_columns(self.times.clone(), &cols)
    }

    /// Appends `next`, dropping its first sample when it repeats this trajectory's last time.
    pub fn extend(&mut self, next: &Trajectory<T>) -> Result<()> {
        if next.dim() != self.dim() {
            return Err(SirmError::ShapeMismatch("cannot join trajectories of different dimension".into()));
        }
        let skip = usize::from((next.t_start() - self.t_end()).abs() <= self.time_slack());
        let tail = next.states.slice(ndarray::s![.., skip..]);
        if skip == 0 && !(next.t_start() > self.t_end()) {
            return Err(SirmError::InvalidParameter("appended trajectory overlaps in time".into()));
        }
        self.states = ndarray::concatenate(Axis(1), &[self.states.view(), tail])
            .map_err(|e| SirmError::ShapeMismatch(e.to_string()))?;
        self.times.extend_from_slice(&next.times[skip..]);
        Ok(())
    }
}

/// One IMEX system: an explicit part, an optional implicitly treated linear part, and a
/// post-step projection.
pub(crate) trait ImexSystem<T: Real> {
    fn explicit(&self, t: T, x: ArrayView1<'_, T>) -> Result<Array1<T>>;
    fn stiff_apply(&self, x: ArrayView1<'_, T>) -> Option<Array1<T>>;
    /// Solves `(I − α L) y = rhs` with `α = dt/2`.
    fn stiff_solve(&self, rhs: Array1<T>) -> Result<Array1<T>>;
    fn post_step(&self, _x: &mut Array1<T>) -> Result<()> {
        Ok(())
    }
    fn cfl(&self, _x: ArrayView1<'_, T>) -> Option<T> {
        None
    }
}

/// Marches `x0` over `cfg`, keeping the states whose step index satisfies `record`
/// (the initial and final states are always kept).
pub(crate) fn march<T: Real, S: ImexSystem<T>>(
    sys: &S,
    x0: Array1<T>,
    cfg: &IntegratorConfig<T>,
    mut record: impl FnMut(usize) -> bool,
) -> Result<Trajectory<T>> {
    let steps = cfg.n_steps()?;
    let dt = cfg.dt;
    let half = T::lit(0.5);
    let (c_new, c_old) = (T::lit(1.5), T::lit(-0.5));

    let mut times = vec![cfg.t_start];
    let mut cols = vec![x0.clone()];
    let mut x = x0;
    let mut g_prev: Option<Array1<T>> = None;
    let mut warned = false;

    for k in 0..steps {
        let t = cfg.time_at(k);
        if !warned {
            if let Some(c) = sys.cfl(x.view()) {
                if c > T::one() {
                    log::warn!("CFL number {c:.3} exceeds 1 at t = {t}");
                    warned = true;
                }
            }
        }
        let g = sys.explicit(t, x.view())?;
        let mut rhs = x.clone();
        match &g_prev {
            Some(gp) => {
                rhs.scaled_add(dt * c_new, &g);
                rhs.scaled_add(dt * c_old, gp);
            }
            None => rhs.scaled_add(dt, &g),
        }
        if let Some(lx) = sys.stiff_apply(x.view()) {
            rhs.scaled_add(dt * half, &lx);
        }
        let mut next = sys.stiff_solve(rhs)?;
        sys.post_step(&mut next)?;
        let t_next = cfg.time_at(k + 1);
        if !all_finite(next.view()) {
            return Err(SirmError::NonFinite { iteration: 0, time: t_next.to_f64_lossy() });
        }
        x = next;
        g_prev = Some(g);
        if k + 1 == steps || record(k + 1) {
            times.push(t_next);
            cols.push(x.clone());
        }
    }
    Trajectory::from_columns(times, &cols)
}

struct FullSystem<'a, T: Real> {
    model: &'a dyn FullModel<T>,
    alpha: T,
    dt: T,
}

impl<T: Real> ImexSystem<T> for FullSystem<'_, T> {
    fn explicit(&self, t: T, x: ArrayView1<'_, T>) -> Result<Array1<T>> {
        self.model.explicit_part(t, x)
    }

    fn stiff_apply(&self, x: ArrayView1<'_, T>) -> Option<Array1<T>> {
        self.model.stiff_operator().map(|l| l.apply(x))
    }

    fn stiff_solve(&self, rhs: Array1<T>) -> Result<Array1<T>> {
        match self.model.stiff_operator() {
            Some(l) => l.solve_shifted(self.alpha, rhs.view()).map(|(y, _)| y),
            None => Ok(rhs),
        }
    }

    fn post_step(&self, x: &mut Array1<T>) -> Result<()> {
        self.model.enforce_constraints(x)
    }

    fn cfl(&self, x: ArrayView1<'_, T>) -> Option<T> {
        self.model.cfl_number(x, self.dt)
    }
}

/// Integrates the full model from its initial state.
pub fn integrate_full<T: Real>(model: &dyn FullModel<T>, cfg: &IntegratorConfig<T>) -> Result<Trajectory<T>> {
    integrate_full_from(model, model.initial_state(), cfg)
}

/// Integrates the full model from an arbitrary starting state.
pub fn integrate_full_from<T: Real>(
    model: &dyn FullModel<T>,
    x0: Array1<T>,
    cfg: &IntegratorConfig<T>,
) -> Result<Trajectory<T>> {
    if x0.len() != model.dim() {
        return Err(SirmError::ShapeMismatch(format!(
            "initial state has length {}, model dimension is {}",
            x0.len(),
            model.dim()
        )));
    }
    let sys = FullSystem { model, alpha: cfg.dt * T::lit(0.5), dt: cfg.dt };
    let stride = cfg.record_every;
    march(&sys, x0, cfg, |k| k % stride == 0)
}

struct ReducedSystem<'a, 'm, T: Real> {
    rom: &'a ReducedModel<'m, T>,
    lu: Option<LuFactor<T>>,
}

impl<'a, 'm, T: Real> ReducedSystem<'a, 'm, T> {
    fn new(rom: &'a ReducedModel<'m, T>, dt: T) -> Result<Self> {
        let lu = match rom.stiff_matrix() {
            Some(a) => {
                let k = a.nrows();
                let mut m = a.mapv(|v| -dt * T::lit(0.5) * v);
                for i in 0..k {
                    m[[i, i]] += T::one();
                }
                Some(LuFactor::new(m)?)
            }
            None => None,
        };
        Ok(Self { rom, lu })
    }
}

impl<T: Real> ImexSystem<T> for ReducedSystem<'_, '_, T> {
    fn explicit(&self, t: T, z: ArrayView1<'_, T>) -> Result<Array1<T>> {
        self.rom.explicit_part(t, z)
    }

    fn stiff_apply(&self, z: ArrayView1<'_, T>) -> Option<Array1<T>> {
        self.rom.stiff_matrix().map(|a| a.dot(&z))
    }

    fn stiff_solve(&self, rhs: Array1<T>) -> Result<Array1<T>> {
        Ok(match &self.lu {
            Some(lu) => lu.solve(rhs.view()),
            None => rhs,
        })
    }
}

/// Integrates the Galerkin reduced model `ż = Φᵀ f(t, Φz)` with the full model's scheme.
/// The returned trajectory lives in reduced coordinates.
pub fn integrate_reduced<T: Real>(
    basis: &Basis<T>,
    model: &dyn FullModel<T>,
    z0: ArrayView1<'_, T>,
    cfg: &IntegratorConfig<T>,
) -> Result<Trajectory<T>> {
    let rom = build_reduced_model(basis, model)?;
    integrate_reduced_model(&rom, z0, cfg)
}

pub fn integrate_reduced_model<T: Real>(
    rom: &ReducedModel<'_, T>,
    z0: ArrayView1<'_, T>,
    cfg: &IntegratorConfig<T>,
) -> Result<Trajectory<T>> {
    if z0.len() != rom.dim() {
        return Err(SirmError::ShapeMismatch(format!(
            "reduced initial state has length {}, basis has {} columns",
            z0.len(),
            rom.dim()
        )));
    }
    let sys = ReducedSystem::new(rom, cfg.dt)?;
    let stride = cfg.record_every;
    march(&sys, z0.to_owned(), cfg, |k| k % stride == 0)
}
