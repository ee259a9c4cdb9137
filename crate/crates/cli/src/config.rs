//! Run configuration: the TOML schema, per-problem profiles and the
//! resolved plan a pipeline executes.
//!
//! A config file names a problem and overrides any subset of its profile.
//! Nested `[optimizer]` and `[reference]` tables are merged key by key over
//! the profile's tables, so `[optimizer] max_iterations = 200` keeps every
//! other optimizer setting of the profile.

use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use pinn_core::optimizer::LbfgsConfig;
use pinn_refsolve::SpectralConfig;

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum ProblemKind {
    BurgersCt,
    NlsCt,
    BurgersDt,
    AllenCahnDt,
}

impl ProblemKind {
    pub fn id(self) -> &'static str {
        match self {
            ProblemKind::BurgersCt => "burgers-ct",
            ProblemKind::NlsCt => "nls-ct",
            ProblemKind::BurgersDt => "burgers-dt",
            ProblemKind::AllenCahnDt => "allen-cahn-dt",
        }
    }

    pub fn is_discrete(self) -> bool {
        matches!(self, ProblemKind::BurgersDt | ProblemKind::AllenCahnDt)
    }

    /// Name of the physical problem, shared by the two Burgers models.
    pub fn equation(self) -> &'static str {
        match self {
            ProblemKind::BurgersCt | ProblemKind::BurgersDt => "burgers",
            ProblemKind::NlsCt => "nls",
            ProblemKind::AllenCahnDt => "allen-cahn",
        }
    }
}

impl fmt::Display for ProblemKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

/// The file schema. Every field except `problem` is optional and falls
/// back to the problem's profile.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub problem: ProblemKind,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub out_dir: Option<PathBuf>,
    /// Full-size sample counts, architectures and iteration budgets
    /// instead of the desk-scale profile.
    #[serde(default)]
    pub paper_scale: Option<bool>,
    #[serde(default)]
    pub n_u: Option<usize>,
    #[serde(default)]
    pub n_f: Option<usize>,
    #[serde(default)]
    pub n_0: Option<usize>,
    #[serde(default)]
    pub n_b: Option<usize>,
    #[serde(default)]
    pub n_n: Option<usize>,
    #[serde(default)]
    pub q: Option<usize>,
    #[serde(default)]
    pub dt: Option<f64>,
    /// Snapshot time of a discrete-time step.
    #[serde(default)]
    pub t_start: Option<f64>,
    /// Discrete-time steps chained from the snapshot; default 1.
    #[serde(default)]
    pub steps: Option<usize>,
    /// Hidden layers.
    #[serde(default)]
    pub layers: Option<usize>,
    /// Neurons per hidden layer.
    #[serde(default)]
    pub neurons: Option<usize>,
    /// Standard deviation of Gaussian noise added to the training data.
    #[serde(default)]
    pub noise_std: Option<f64>,
    #[serde(default)]
    pub workers: Option<usize>,
    /// Working precision for tableau generation; default depends on `q`.
    #[serde(default)]
    pub precision_bits: Option<u32>,
    /// Reference and tableau cache; default `<out_dir>/cache`.
    #[serde(default)]
    pub cache_dir: Option<PathBuf>,
    #[serde(default)]
    pub optimizer: Option<toml::Table>,
    /// Spectral solver settings (Schrödinger and Allen–Cahn only).
    #[serde(default)]
    pub reference: Option<toml::Table>,
}

impl RunConfig {
    pub fn new(problem: ProblemKind) -> Self {
        Self {
            problem,
            seed: None,
            out_dir: None,
            paper_scale: None,
            n_u: None,
            n_f: None,
            n_0: None,
            n_b: None,
            n_n: None,
            q: None,
            dt: None,
            t_start: None,
            steps: None,
            layers: None,
            neurons: None,
            noise_std: None,
            workers: None,
            precision_bits: None,
            cache_dir: None,
            optimizer: None,
            reference: None,
        }
    }

    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn from_file(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }

    /// Apply the profile and validate.
    pub fn resolve(&self) -> Result<RunPlan, CliError> {
        let paper = self.paper_scale.unwrap_or(false);
        let p = Profile::of(self.problem, paper);
        let out_dir = self
            .out_dir
            .clone()
            .unwrap_or_else(|| PathBuf::from("runs").join(self.problem.id()));
        let cache_dir = self.cache_dir.clone().unwrap_or_else(|| out_dir.join("cache"));
        let q = self.q.unwrap_or(p.q);
        let precision_bits = self.precision_bits.unwrap_or_else(|| {
            if q > 0 {
                pinn_tableau::default_precision_bits(q)
            } else {
                0
            }
        });
        let plan = RunPlan {
            problem: self.problem,
            seed: self.seed.unwrap_or(1),
            paper_scale: paper,
            out_dir,
            cache_dir,
            n_u: self.n_u.unwrap_or(p.n_u),
            n_f: self.n_f.unwrap_or(p.n_f),
            n_0: self.n_0.unwrap_or(p.n_0),
            n_b: self.n_b.unwrap_or(p.n_b),
            n_n: self.n_n.unwrap_or(p.n_n),
            q,
            dt: self.dt.unwrap_or(p.dt),
            t_start: self.t_start.unwrap_or(p.t_start),
            steps: self.steps.unwrap_or(1),
            layers: self.layers.unwrap_or(p.layers),
            neurons: self.neurons.unwrap_or(p.neurons),
            noise_std: self.noise_std.unwrap_or(0.0),
            workers: self.workers.unwrap_or(1),
            precision_bits,
            optimizer: merge("optimizer", &p.optimizer, self.optimizer.as_ref())?,
            reference: match (&p.reference, &self.reference) {
                (Some(base), over) => Some(merge("reference", base, over.as_ref())?),
                (None, Some(_)) => {
                    return Err(CliError::Config(format!(
                        "problem {} takes no [reference] table; its reference solution is exact",
                        self.problem
                    )))
                }
                (None, None) => None,
            },
        };
        plan.validate()?;
        Ok(plan)
    }
}

/// Overlay the keys of `over` on the serialized `base` and deserialize the
/// result, so unknown keys are still rejected.
fn merge<C>(name: &str, base: &C, over: Option<&toml::Table>) -> Result<C, CliError>
where
    C: Clone + Serialize + for<'de> Deserialize<'de>,
{
    let Some(over) = over else {
        return Ok(base.clone());
    };
    let mut table = match toml::Value::try_from(base) {
        Ok(toml::Value::Table(t)) => t,
        Ok(_) => unreachable!("config sections serialize to tables"),
        Err(e) => return Err(CliError::Config(format!("[{name}]: {e}"))),
    };
    for (k, v) in over {
        table.insert(k.clone(), v.clone());
    }
    toml::Value::Table(table)
        .try_into()
        .map_err(|e| CliError::Config(format!("[{name}]: {e}")))
}

/// Everything a run needs, with defaults applied.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunPlan {
    pub problem: ProblemKind,
    pub seed: u64,
    pub paper_scale: bool,
    pub out_dir: PathBuf,
    pub cache_dir: PathBuf,
    pub n_u: usize,
    pub n_f: usize,
    pub n_0: usize,
    pub n_b: usize,
    pub n_n: usize,
    pub q: usize,
    pub dt: f64,
    pub t_start: f64,
    pub steps: usize,
    pub layers: usize,
    pub neurons: usize,
    pub noise_std: f64,
    pub workers: usize,
    pub precision_bits: u32,
    pub optimizer: LbfgsConfig,
    pub reference: Option<SpectralConfig>,
}

impl RunPlan {
    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |m: String| Err(CliError::Config(m));
        if self.layers == 0 || self.neurons == 0 {
            return bad("layers and neurons must be positive".into());
        }
        if self.workers == 0 {
            return bad("workers must be at least 1".into());
        }
        if !(self.noise_std >= 0.0 && self.noise_std.is_finite()) {
            return bad(format!(
                "noise_std must be finite and non-negative, got {}",
                self.noise_std
            ));
        }
        self.optimizer
            .validate()
            .map_err(|e| CliError::Config(format!("[optimizer]: {e}")))?;
        if let Some(r) = &self.reference {
            r.validate()
                .map_err(|e| CliError::Config(format!("[reference]: {e}")))?;
        }
        match self.problem {
            ProblemKind::BurgersCt => {
                if self.n_u == 0 {
                    return bad("burgers-ct needs n_u > 0".into());
                }
            }
            ProblemKind::NlsCt => {
                if self.n_0 == 0 {
                    return bad("nls-ct needs n_0 > 0".into());
                }
            }
            ProblemKind::BurgersDt | ProblemKind::AllenCahnDt => {
                if self.q == 0 {
                    return bad("q must be at least 1 for a discrete-time model".into());
                }
                if self.steps == 0 {
                    return bad("steps must be at least 1".into());
                }
                if self.n_n == 0 {
                    return bad("n_n must be positive".into());
                }
                if !(self.dt > 0.0 && self.dt.is_finite()) {
                    return bad(format!("dt must be positive, got {}", self.dt));
                }
                if !(self.t_start >= 0.0 && self.t_start.is_finite()) {
                    return bad(format!("t_start must be non-negative, got {}", self.t_start));
                }
                if self.precision_bits < 64 {
                    return bad(format!(
                        "precision_bits must be at least 64, got {}",
                        self.precision_bits
                    ));
                }
            }
        }
        Ok(())
    }

    /// Network shape string as recorded in summaries.
    pub fn architecture(&self) -> String {
        let (inputs, outputs) = match self.problem {
            ProblemKind::BurgersCt => (2, 1),
            ProblemKind::NlsCt => (2, 2),
            ProblemKind::BurgersDt | ProblemKind::AllenCahnDt => (1, self.q + 1),
        };
        format!("{inputs}-{}x{}-{outputs}", self.layers, self.neurons)
    }

    pub fn t_end(&self) -> f64 {
        self.t_start + self.steps as f64 * self.dt
    }

    /// Base name of the files a run writes.
    pub fn run_name(&self) -> String {
        format!("{}-seed{}", self.problem, self.seed)
    }
}

/// Per-problem defaults.
#[derive(Debug, Clone)]
pub struct Profile {
    pub n_u: usize,
    pub n_f: usize,
    pub n_0: usize,
    pub n_b: usize,
    pub n_n: usize,
    pub q: usize,
    pub dt: f64,
    pub t_start: f64,
    pub layers: usize,
    pub neurons: usize,
    pub optimizer: LbfgsConfig,
    pub reference: Option<SpectralConfig>,
}

/// L-BFGS iteration caps of the desk profiles.
pub const DESK_ITERATIONS_BURGERS_CT: usize = 8000;
pub const DESK_ITERATIONS_NLS_CT: usize = 4000;
pub const DESK_ITERATIONS_BURGERS_DT: usize = 10_000;
pub const DESK_ITERATIONS_ALLEN_CAHN_DT: usize = 10_000;

impl Profile {
    pub fn of(problem: ProblemKind, paper_scale: bool) -> Self {
        let lbfgs = |desk: usize| LbfgsConfig {
            max_iterations: if paper_scale { 50_000 } else { desk },
            ..LbfgsConfig::default()
        };
        let zero = Profile {
            n_u: 0,
            n_f: 0,
            n_0: 0,
            n_b: 0,
            n_n: 0,
            q: 0,
            dt: 0.0,
            t_start: 0.0,
            layers: 0,
            neurons: 0,
            optimizer: LbfgsConfig::default(),
            reference: None,
        };
        match problem {
            ProblemKind::BurgersCt => Profile {
                n_u: 100,
                n_f: 10_000,
                layers: 8,
                neurons: 20,
                optimizer: lbfgs(DESK_ITERATIONS_BURGERS_CT),
                ..zero
            },
            ProblemKind::NlsCt => Profile {
                n_0: 50,
                n_b: 50,
                n_f: if paper_scale { 20_000 } else { 5_000 },
                layers: 4,
                neurons: 100,
                optimizer: lbfgs(DESK_ITERATIONS_NLS_CT),
                reference: Some(if paper_scale {
                    SpectralConfig::nls_paper()
                } else {
                    SpectralConfig::nls_desk()
                }),
                ..zero
            },
            ProblemKind::BurgersDt => Profile {
                n_n: 250,
                q: if paper_scale { 500 } else { 100 },
                dt: 0.8,
                t_start: 0.1,
                layers: if paper_scale { 4 } else { 3 },
                neurons: 50,
                optimizer: lbfgs(DESK_ITERATIONS_BURGERS_DT),
                ..zero
            },
            ProblemKind::AllenCahnDt => Profile {
                n_n: 200,
                q: 100,
                dt: 0.8,
                t_start: 0.1,
                layers: 4,
                neurons: 200,
                optimizer: lbfgs(DESK_ITERATIONS_ALLEN_CAHN_DT),
                reference: Some(SpectralConfig::allen_cahn_desk()),
                ..zero
            },
        }
    }
}
