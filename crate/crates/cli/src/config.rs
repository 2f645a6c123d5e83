//! Scenario configuration files.
//!
//! A config is a TOML document. Unknown keys anywhere are rejected.
//!
//! ```toml
//! schema_version = 1
//! task = "survival"
//! output_path = "out/friedrichs"
//!
//! [model.friedrichs]
//! n_modes = 200
//! band = [-2.0, 2.0]
//! excited_energy = 0.0
//! coupling_strength = 0.05
//! profile = "flat"
//! ```

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

pub const SCHEMA_VERSION: u32 = 1;
pub const MAX_DIM: usize = 200;
pub const MAX_MODES: usize = 2000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub schema_version: u32,
    pub task: Task,
    /// Single evaluation time.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t: Option<f64>,
    /// Time grid; exclusive with `t`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_grid: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_schedule: Option<Vec<u64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
    /// Seed for auxiliary randomness (probe pairs) when the model has none.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    /// Number of seeded model replicas, `sweep` only.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub replicas: Option<usize>,
    pub output_path: PathBuf,
    pub model: ModelConfig,
    /// Explicit law for `classify`; without it the state's own spectral measure is used.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub distribution: Option<DistributionConfig>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Task {
    Converge,
    Survival,
    Classify,
    Gibbs,
    Sweep,
}

impl Task {
    pub fn name(self) -> &'static str {
        match self {
            Task::Converge => "converge",
            Task::Survival => "survival",
            Task::Classify => "classify",
            Task::Gibbs => "gibbs",
            Task::Sweep => "sweep",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum ModelConfig {
    Rabi {},
    Random {
        dim: usize,
        #[serde(rename = "rank_E")]
        rank_e: usize,
        seed: u64,
    },
    Friedrichs {
        n_modes: usize,
        band: (f64, f64),
        excited_energy: f64,
        coupling_strength: f64,
        profile: CouplingProfile,
    },
    Perturbed {
        dim: usize,
        seed: u64,
        perturbation_norm: f64,
    },
}

impl ModelConfig {
    pub fn seed(&self) -> Option<u64> {
        match self {
            ModelConfig::Random { seed, .. } | ModelConfig::Perturbed { seed, .. } => Some(*seed),
            _ => None,
        }
    }

    /// Same model with its seed replaced; seedless models are unchanged.
    pub fn with_seed(&self, new_seed: u64) -> Self {
        let mut out = self.clone();
        if let ModelConfig::Random { seed, .. } | ModelConfig::Perturbed { seed, .. } = &mut out {
            *seed = new_seed;
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CouplingProfile {
    Flat,
    /// Gaussian centred on the band with standard deviation a quarter of its width.
    Gaussian,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum DistributionConfig {
    PointMass { at: f64 },
    Gaussian { mean: f64, std_dev: f64 },
    Cauchy { location: f64, scale: f64 },
    Pareto { alpha: f64, scale: f64 },
    /// A named entry of the built-in family registry.
    Registry { name: String },
}

fn field(name: &str, message: impl Into<String>) -> CliError {
    CliError::Config { field: name.to_string(), message: message.into() }
}

impl ScenarioConfig {
    pub fn from_toml(text: &str) -> CliResult<Self> {
        let config: Self = toml::from_str(text).map_err(|e| CliError::Parse(e.message().to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config is serializable")
    }

    /// Seed used for auxiliary randomness: the model seed, else `seed`, else 0.
    pub fn effective_seed(&self) -> u64 {
        self.model.seed().or(self.seed).unwrap_or(0)
    }

    /// Replaces every seed in the config.
    pub fn override_seed(&mut self, seed: u64) {
        self.model = self.model.with_seed(seed);
        self.seed = Some(seed);
    }

    pub fn validate(&self) -> CliResult<()> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(field("schema_version", format!("expected {SCHEMA_VERSION}, found {}", self.schema_version)));
        }
        self.validate_model()?;
        if self.t.is_some() && self.t_grid.is_some() {
            return Err(field("t_grid", "give either t or t_grid, not both"));
        }
        let uses_grid = matches!(self.task, Task::Survival | Task::Gibbs);
        if uses_grid && self.t.is_some() {
            return Err(field("t", format!("the {} task takes t_grid", self.task.name())));
        }
        if !uses_grid && self.t_grid.is_some() {
            return Err(field("t_grid", format!("the {} task takes t", self.task.name())));
        }
        if uses_grid && self.n_schedule.is_some() {
            return Err(field("n_schedule", format!("not used by the {} task", self.task.name())));
        }
        if let Some(t) = self.t {
            if !t.is_finite() {
                return Err(field("t", "must be finite"));
            }
        }
        if let Some(grid) = &self.t_grid {
            if grid.is_empty() || grid.iter().any(|t| !t.is_finite()) {
                return Err(field("t_grid", "must be a nonempty list of finite times"));
            }
            if grid.windows(2).any(|w| w[0] >= w[1]) {
                return Err(field("t_grid", "must be strictly increasing"));
            }
        }
        if let Some(ns) = &self.n_schedule {
            if ns.is_empty() || ns.contains(&0) {
                return Err(field("n_schedule", "must be a nonempty list of positive integers"));
            }
            if ns.windows(2).any(|w| w[0] >= w[1]) {
                return Err(field("n_schedule", "must be strictly increasing"));
            }
        }
        match (self.task, self.beta) {
            (Task::Gibbs, None) => return Err(field("beta", "required for the gibbs task")),
            (Task::Gibbs, Some(b)) if !(b.is_finite() && b >= 0.0) => {
                return Err(field("beta", "must be finite and nonnegative"))
            }
            (task, Some(_)) if task != Task::Gibbs => return Err(field("beta", "only used by the gibbs task")),
            _ => {}
        }
        match (self.task, self.replicas) {
            (Task::Sweep, None) => return Err(field("replicas", "required for the sweep task")),
            (Task::Sweep, Some(0)) => return Err(field("replicas", "must be positive")),
            (task, Some(_)) if task != Task::Sweep => return Err(field("replicas", "only used by the sweep task")),
            _ => {}
        }
        if self.task == Task::Sweep && self.model.seed().is_none() {
            return Err(field("model", "sweep needs a seeded model (random or perturbed)"));
        }
        if let Some(d) = &self.distribution {
            if self.task != Task::Classify {
                return Err(field("distribution", "only used by the classify task"));
            }
            crate::scenario::build_distribution(d)?;
        }
        if self.task == Task::Survival {
            if let Some(grid) = &self.t_grid {
                if grid[0] <= 0.0 {
                    return Err(field("t_grid", "survival times must be positive"));
                }
            }
        }
        Ok(())
    }

    fn validate_model(&self) -> CliResult<()> {
        match &self.model {
            ModelConfig::Rabi {} => {}
            ModelConfig::Random { dim, rank_e, .. } => {
                if !(2..=MAX_DIM).contains(dim) {
                    return Err(field("model.random.dim", format!("must lie in [2, {MAX_DIM}]")));
                }
                if !(1..*dim).contains(rank_e) {
                    return Err(field("model.random.rank_E", "must lie in [1, dim - 1]"));
                }
            }
            ModelConfig::Friedrichs { n_modes, band, excited_energy, coupling_strength, .. } => {
                if !(1..=MAX_MODES).contains(n_modes) {
                    return Err(field("model.friedrichs.n_modes", format!("must lie in [1, {MAX_MODES}]")));
                }
                let (lo, hi) = *band;
                if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                    return Err(field("model.friedrichs.band", "must be a finite interval [lo, hi] with lo < hi"));
                }
                if !(*excited_energy > lo && *excited_energy < hi) {
                    return Err(field("model.friedrichs.excited_energy", "must lie inside the band"));
                }
                if !(coupling_strength.is_finite() && *coupling_strength > 0.0) {
                    return Err(field("model.friedrichs.coupling_strength", "must be positive and finite"));
                }
            }
            ModelConfig::Perturbed { dim, perturbation_norm, .. } => {
                if !(2..=MAX_DIM).contains(dim) {
                    return Err(field("model.perturbed.dim", format!("must lie in [2, {MAX_DIM}]")));
                }
                if !(perturbation_norm.is_finite() && *perturbation_norm >= 0.0) {
                    return Err(field("model.perturbed.perturbation_norm", "must be finite and nonnegative"));
                }
            }
        }
        Ok(())
    }
}
