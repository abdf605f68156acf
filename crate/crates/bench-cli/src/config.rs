//! Experiment configuration: a TOML file with one section per concern, resolved
//! against the benchmark defaults of the chosen experiment into concrete run points.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{0}")]
    Parse(#[from] toml::de::Error),
    #[error("invalid configuration: {0}")]
    Invalid(String),
}

fn invalid<T>(msg: impl Into<String>) -> Result<T, ConfigError> {
    Err(ConfigError::Invalid(msg.into()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    AdvDiff,
    Burgers,
    Cavity,
    Scaling,
    Custom,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Full,
    Sirm,
    LocalSirm,
    Dirm,
    Coarse,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    AdvDiff,
    Burgers,
    Cavity,
    /// Random stable linear system drawn from the run seed.
    RandomLinear,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrialKind {
    Constant,
    Coarse,
    TimeHistory,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BasisKind {
    Pod,
    GramSchmidt,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Closure {
    Thom,
    HalfLid,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSection {
    pub kind: Option<ExperimentKind>,
    pub method: Option<Method>,
    pub name: Option<String>,
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSection {
    pub family: Option<Family>,
    pub n: Option<usize>,
    pub c: Option<f64>,
    pub nu: Option<f64>,
    pub n_side: Option<usize>,
    pub reynolds: Option<f64>,
    pub closure: Option<Closure>,
    pub t_end: Option<f64>,
    pub dt: Option<f64>,
    pub record_every: Option<usize>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SirmSection {
    pub eta: Option<f64>,
    pub m: Option<usize>,
    pub epsilon: Option<f64>,
    pub max_iterations: Option<usize>,
    pub trial: Option<TrialKind>,
    pub coarse_points: Option<usize>,
    pub coarse_factor: Option<usize>,
    pub fourier_modes: Option<usize>,
    pub basis: Option<BasisKind>,
    pub gamma: Option<f64>,
    pub fixed_k: Option<usize>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LocalSection {
    pub subintervals: Option<usize>,
    pub m_prime: Option<usize>,
    pub epsilon: Option<f64>,
    pub max_iterations: Option<usize>,
    pub trial: Option<TrialKind>,
    pub coarse_factor: Option<usize>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DirmSection {
    pub blocks: Option<usize>,
    pub modes_per_block: Option<usize>,
}

/// Sweep lists; every nonempty list multiplies the run count.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    #[serde(default)]
    pub eta: Vec<f64>,
    /// Coarse-trial grid sizes.
    #[serde(default)]
    pub k0: Vec<usize>,
    #[serde(default)]
    pub nu: Vec<f64>,
    #[serde(default)]
    pub fixed_k: Vec<usize>,
    #[serde(default)]
    pub m: Vec<usize>,
    #[serde(default)]
    pub m_prime: Vec<usize>,
    /// `"m=<total samples>"` or `"M=<subintervals>"`, for local runs.
    #[serde(default)]
    pub partition: Vec<String>,
    #[serde(default)]
    pub grid_sizes: Vec<usize>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    pub dir: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub experiment: ExperimentSection,
    #[serde(default)]
    pub model: ModelSection,
    #[serde(default)]
    pub sirm: SirmSection,
    #[serde(default)]
    pub local: LocalSection,
    #[serde(default)]
    pub dirm: DirmSection,
    #[serde(default)]
    pub sweep: SweepSection,
    #[serde(default)]
    pub output: OutputSection,
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        Ok(toml::from_str(text)?)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io { path: path.to_owned(), source })?;
        Self::parse(&text)
    }

    pub fn kind(&self) -> ExperimentKind {
        self.experiment.kind.unwrap_or(ExperimentKind::AdvDiff)
    }

    pub fn name(&self) -> String {
        self.experiment.name.clone().unwrap_or_else(|| match self.kind() {
            ExperimentKind::AdvDiff => "adv_diff".into(),
            ExperimentKind::Burgers => "burgers".into(),
            ExperimentKind::Cavity => "cavity".into(),
            ExperimentKind::Scaling => "scaling".into(),
            ExperimentKind::Custom => "custom".into(),
        })
    }
}

/// Command-line overrides applied while resolving.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Overrides {
    pub paper_scale: bool,
    pub seed: Option<u64>,
}

/// Fully resolved parameters of one run. Every field is written to `results.csv`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSpec {
    pub experiment: ExperimentKind,
    pub method: Method,
    pub family: Family,
    /// Grid points (1D) or points per side (cavity).
    pub n: usize,
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
    /// Periodic coarse grid size; cavity trials use `coarse_factor`.
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
}

impl RunSpec {
    /// State dimension of the full model.
    pub fn dim(&self) -> usize {
        match self.family {
            Family::Cavity => 2 * self.n * self.n,
            _ => self.n,
        }
    }

    pub fn n_steps(&self) -> usize {
        (self.t_end / self.dt).round() as usize
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if !(self.dt > 0.0 && self.t_end > 0.0) {
            return invalid(format!("dt = {} and t_end = {} must be positive", self.dt, self.t_end));
        }
        let steps = self.t_end / self.dt;
        if (steps - steps.round()).abs() > 1e-6 * steps.max(1.0) {
            return invalid(format!("t_end = {} is not a whole number of steps dt = {}", self.t_end, self.dt));
        }
        if self.record_every == 0 {
            return invalid("record_every must be at least 1");
        }
        if !(self.eta > 0.0 && self.eta < 1.0) {
            return invalid(format!("eta = {} must lie in (0, 1)", self.eta));
        }
        if self.m < 2 || self.m_prime < 2 {
            return invalid("m and m_prime must be at least 2");
        }
        if !(self.epsilon > 0.0) {
            return invalid("epsilon must be positive");
        }
        if self.max_iterations == 0 {
            return invalid("max_iterations must be at least 1");
        }
        if self.subintervals == 0 || self.dirm_blocks == 0 || self.dirm_modes == 0 {
            return invalid("subintervals, dirm blocks and dirm modes must be positive");
        }
        if self.trial == TrialKind::TimeHistory && self.method != Method::LocalSirm {
            return invalid("the time_history trial needs method = local_sirm");
        }
        match self.family {
            Family::Cavity => {
                if self.n < 5 {
                    return invalid("cavity needs n_side ≥ 5");
                }
            }
            Family::RandomLinear => {
                if self.n < 2 {
                    return invalid("linear system needs at least 2 states");
                }
            }
            Family::AdvDiff | Family::Burgers => {
                if self.n < 4 {
                    return invalid("grid needs at least 4 points");
                }
                if self.coarse_points == 0 || self.coarse_points > self.n {
                    return invalid(format!("coarse_points = {} must lie in 1..={}", self.coarse_points, self.n));
                }
            }
        }
        Ok(())
    }
}

fn default_dt_cavity(n_side: usize) -> f64 {
    // CFL-consistent: 1e-2 at 65 points per side, halving with h
    0.64 / (n_side - 1) as f64
}

fn coarse_factor_for(n_side: usize) -> usize {
    ((n_side - 1) / 32).max(1)
}

/// Divisor of `n` closest to `target`, so subintervals hold whole steps.
fn nearest_divisor(n: usize, target: f64) -> usize {
    (1..=n.max(1))
        .filter(|d| n % d == 0)
        .min_by(|a, b| (*a as f64 - target).abs().total_cmp(&(*b as f64 - target).abs()))
        .unwrap_or(1)
}

fn parse_partition(entry: &str) -> Result<PartitionChoice, ConfigError> {
    let (key, value) = entry
        .split_once('=')
        .ok_or_else(|| ConfigError::Invalid(format!("partition entry {entry:?} must look like m=<int> or M=<int>")))?;
    let v: usize = value
        .trim()
        .parse()
        .map_err(|_| ConfigError::Invalid(format!("partition entry {entry:?} has a non-integer value")))?;
    match key.trim() {
        "m" => Ok(PartitionChoice::TotalSamples(v)),
        "M" => Ok(PartitionChoice::Subintervals(v)),
        other => invalid(format!("partition key {other:?} must be m or M")),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum PartitionChoice {
    TotalSamples(usize),
    Subintervals(usize),
}

/// One combination of sweep values; `None` falls back to the section defaults.
#[derive(Debug, Clone, Copy, Default)]
struct SweepPoint {
    size: Option<usize>,
    method: Option<Method>,
    eta: Option<f64>,
    k0: Option<usize>,
    nu: Option<f64>,
    fixed_k: Option<usize>,
    m: Option<usize>,
    m_prime: Option<usize>,
    partition: Option<PartitionChoice>,
}

fn expand<T: Copy>(points: Vec<SweepPoint>, values: &[T], set: impl Fn(&mut SweepPoint, T)) -> Vec<SweepPoint> {
    if values.is_empty() {
        return points;
    }
    points
        .into_iter()
        .flat_map(|p| {
            values.iter().map(|&v| {
                let mut q = p;
                set(&mut q, v);
                q
            }).collect::<Vec<_>>()
        })
        .collect()
}

/// Resolves defaults and expands the sweep into run points, in a fixed order.
pub fn resolve(cfg: &ExperimentConfig, ov: Overrides) -> Result<Vec<RunSpec>, ConfigError> {
    let kind = cfg.kind();
    let family = match kind {
        ExperimentKind::AdvDiff => Family::AdvDiff,
        ExperimentKind::Burgers => Family::Burgers,
        ExperimentKind::Cavity | ExperimentKind::Scaling => Family::Cavity,
        ExperimentKind::Custom => match cfg.model.family {
            Some(f) => f,
            None => return invalid("custom experiments need model.family"),
        },
    };
    if let Some(f) = cfg.model.family {
        if kind != ExperimentKind::Custom && f != family {
            return invalid(format!("model.family {f:?} conflicts with experiment kind {kind:?}"));
        }
    }
    let sw = &cfg.sweep;
    let mut sizes = sw.grid_sizes.clone();
    let mut methods = Vec::new();
    if kind == ExperimentKind::Scaling {
        if sizes.is_empty() {
            sizes = if ov.paper_scale { vec![65, 97, 129, 193, 257] } else { vec![65, 97, 129] };
        }
        methods = vec![Method::Full, Method::LocalSirm];
    }
    let partitions = sw.partition.iter().map(|p| parse_partition(p)).collect::<Result<Vec<_>, _>>()?;

    let mut points = vec![SweepPoint::default()];
    points = expand(points, &sizes, |p, v| p.size = Some(v));
    points = expand(points, &methods, |p, v| p.method = Some(v));
    points = expand(points, &sw.eta, |p, v| p.eta = Some(v));
    points = expand(points, &sw.k0, |p, v| p.k0 = Some(v));
    points = expand(points, &sw.nu, |p, v| p.nu = Some(v));
    points = expand(points, &sw.fixed_k, |p, v| p.fixed_k = Some(v));
    points = expand(points, &sw.m, |p, v| p.m = Some(v));
    points = expand(points, &sw.m_prime, |p, v| p.m_prime = Some(v));
    points = expand(points, &partitions, |p, v| p.partition = Some(v));

    points
        .into_iter()
        .map(|p| {
            let spec = build_spec(cfg, ov, kind, family, &p);
            spec.validate()?;
            Ok(spec)
        })
        .collect()
}

fn build_spec(cfg: &ExperimentConfig, ov: Overrides, kind: ExperimentKind, family: Family, p: &SweepPoint) -> RunSpec {
    let md = &cfg.model;
    let sd = &cfg.sirm;
    let ld = &cfg.local;
    let large = ov.paper_scale;
    let method = p.method.or(cfg.experiment.method).unwrap_or(match kind {
        ExperimentKind::Cavity | ExperimentKind::Scaling => Method::LocalSirm,
        _ => Method::Sirm,
    });
    let (n_default, t_default) = match (kind, family) {
        (ExperimentKind::Scaling, _) => (65, 5.0),
        (_, Family::AdvDiff) => (500, 0.5),
        (_, Family::Burgers) => (2000, 1.0),
        (_, Family::Cavity) if large => (129, 50.0),
        (_, Family::Cavity) => (65, 10.0),
        (_, Family::RandomLinear) => (40, 1.0),
    };
    let n = p.size.unwrap_or(match family {
        Family::Cavity => md.n_side.or(md.n).unwrap_or(n_default),
        _ => md.n.unwrap_or(n_default),
    });
    let t_end = md.t_end.unwrap_or(t_default);
    let dt = md.dt.unwrap_or(match family {
        Family::AdvDiff => 1e-3,
        Family::Burgers => 2e-4,
        Family::Cavity => default_dt_cavity(n),
        Family::RandomLinear => 1e-2,
    });
    let m_prime = p.m_prime.or(ld.m_prime).unwrap_or(3);
    let mut subintervals = ld.subintervals.unwrap_or(match kind {
        ExperimentKind::Scaling => 25,
        _ if large && family == Family::Cavity => 250,
        _ => 50,
    });
    match p.partition {
        Some(PartitionChoice::Subintervals(big_m)) => subintervals = big_m,
        Some(PartitionChoice::TotalSamples(total)) => {
            let target = total as f64 / (m_prime.max(2) - 1) as f64;
            subintervals = nearest_divisor((t_end / dt).round() as usize, target);
        }
        None => {}
    }
    let local = method == Method::LocalSirm;
    let steps = (t_end / dt).round() as usize;
    let periodic = matches!(family, Family::AdvDiff | Family::Burgers);
    let coarse_points = p.k0.or(sd.coarse_points).unwrap_or(match family {
        Family::AdvDiff => 20,
        Family::Burgers => 100,
        _ => 0,
    });
    RunSpec {
        experiment: kind,
        method,
        family,
        n,
        c: md.c.unwrap_or(0.5),
        nu: p.nu.or(md.nu).unwrap_or(1e-3),
        reynolds: md.reynolds.unwrap_or(1000.0),
        closure: md.closure.unwrap_or(Closure::Thom),
        t_end,
        dt,
        record_every: md.record_every.unwrap_or(if local { (steps / subintervals.max(1)).max(1) } else { 1 }),
        eta: p.eta.or(sd.eta).unwrap_or(if family == Family::Burgers { 1e-10 } else { 1e-8 }),
        m: p.m.or(sd.m).unwrap_or(if family == Family::Burgers { 101 } else { 51 }),
        epsilon: if local { ld.epsilon.unwrap_or(1.0) } else { sd.epsilon.unwrap_or(1e-6) },
        max_iterations: if local { ld.max_iterations } else { sd.max_iterations }.unwrap_or(10),
        trial: if local { ld.trial } else { sd.trial }.unwrap_or(if family == Family::RandomLinear {
            TrialKind::Constant
        } else {
            TrialKind::Coarse
        }),
        coarse_points: if periodic { coarse_points.min(n) } else { coarse_points },
        coarse_factor: if local { ld.coarse_factor } else { sd.coarse_factor }.unwrap_or(match family {
            Family::Cavity => coarse_factor_for(n),
            _ => 1,
        }),
        fourier_modes: sd.fourier_modes.unwrap_or(10),
        basis: if local { BasisKind::GramSchmidt } else { sd.basis.unwrap_or(BasisKind::Pod) },
        gamma: sd.gamma.unwrap_or(1.0),
        fixed_k: p.fixed_k.or(sd.fixed_k),
        subintervals,
        m_prime,
        dirm_blocks: cfg.dirm.blocks.unwrap_or(25),
        dirm_modes: cfg.dirm.modes_per_block.unwrap_or(4),
        seed: ov.seed.or(cfg.experiment.seed).unwrap_or(0),
    }
}
