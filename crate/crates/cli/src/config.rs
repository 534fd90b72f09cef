//! Experiment configuration files.
//!
//! Every key is optional except the seed, which may come from `--seed`
//! instead. See `README.md` for the full key reference.

use std::path::{Path, PathBuf};

use lyalab::cocycle_file::{load_cocycle, AnyCocycle, CocycleDef, MatrixEntries, WindowDef};
use lyalab::experiments::PerturbationSpec;
use lyalab::holder::{diagonal_base, kifer_family};
use lyalab::{Budgets, Format};
use serde::Deserialize;

use crate::CliError;

pub const CONFIG_SCHEMA: u32 = 1;

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema: Option<u32>,
    pub seed: Option<u64>,
    pub output: Option<PathBuf>,
    pub format: Option<String>,
    #[serde(default)]
    pub cocycle: CocycleSection,
    #[serde(default)]
    pub budgets: BudgetSection,
    #[serde(default)]
    pub tolerances: ToleranceSection,
    #[serde(default)]
    pub perturbation: PerturbationSection,
    #[serde(default)]
    pub sweep: SweepSection,
    #[serde(default)]
    pub jitter: JitterSection,
    #[serde(default)]
    pub oseledets: OseledetsSection,
    #[serde(default)]
    pub holder: HolderSection,
    #[serde(default)]
    pub kifer: KiferSection,
    #[serde(skip)]
    pub base_dir: PathBuf,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Preset {
    Diagonal,
    Kifer,
}

/// Exactly one of `preset`, `file`, or an inline definition
/// (`matrices` / `[cocycle.window]` with `weights`).
#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CocycleSection {
    pub preset: Option<Preset>,
    pub sigma: Option<f64>,
    pub weights: Option<Vec<f64>>,
    pub file: Option<PathBuf>,
    pub matrices: Option<Vec<MatrixEntries>>,
    pub window: Option<WindowDef>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BudgetSection {
    pub n_steps: usize,
    pub n_trials: usize,
    pub particle_budget: usize,
    pub max_iters: usize,
    pub depth: usize,
}

impl Default for BudgetSection {
    fn default() -> Self {
        BudgetSection {
            n_steps: 100_000,
            n_trials: 64,
            particle_budget: 10_000,
            max_iters: 256,
            depth: 200,
        }
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ToleranceSection {
    pub stationary: f64,
}

impl Default for ToleranceSection {
    fn default() -> Self {
        ToleranceSection { stationary: 1e-4 }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DirectionKind {
    #[default]
    Default,
    Rotation,
    Custom,
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PerturbationSection {
    #[serde(default)]
    pub kind: DirectionKind,
    pub directions: Option<Vec<MatrixEntries>>,
    pub weight_direction: Option<Vec<f64>>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepSection {
    pub gammas: Vec<f64>,
}

impl Default for SweepSection {
    fn default() -> Self {
        SweepSection {
            gammas: vec![0.2, 0.1, 0.05, 0.02, 0.01],
        }
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct JitterSection {
    pub deltas: Vec<f64>,
    pub split: Vec<f64>,
}

impl Default for JitterSection {
    fn default() -> Self {
        let third = 1.0 / 3.0;
        JitterSection {
            deltas: vec![0.1, 0.05, 0.01],
            split: vec![third; 3],
        }
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OseledetsSection {
    pub gammas: Vec<f64>,
    pub eps: f64,
    pub n_points: usize,
}

impl Default for OseledetsSection {
    fn default() -> Self {
        OseledetsSection {
            gammas: vec![0.1, 0.05, 0.01],
            eps: 0.2,
            n_points: 2000,
        }
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct HolderSection {
    pub sigma: f64,
    pub weights: [f64; 2],
    pub ks: Vec<usize>,
    pub r: f64,
    /// Also estimate `λ₊(B_n)` at the configured budgets.
    pub estimate: bool,
}

impl Default for HolderSection {
    fn default() -> Self {
        HolderSection {
            sigma: 4.0,
            weights: [0.7, 0.3],
            ks: vec![1, 2, 3, 4],
            r: 0.5,
            estimate: false,
        }
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct KiferSection {
    pub sigma: f64,
    pub p1: Vec<f64>,
    pub lengths: Vec<usize>,
}

impl Default for KiferSection {
    fn default() -> Self {
        KiferSection {
            sigma: 2.0,
            p1: vec![1.0, 0.99, 0.5],
            lengths: vec![1_000, 100_000, 1_000_000],
        }
    }
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        let mut config = Self::parse(&text)?;
        config.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok(config)
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        let config: ExperimentConfig =
            toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        match config.schema {
            None | Some(CONFIG_SCHEMA) => Ok(config),
            Some(v) => Err(CliError::Config(format!(
                "unsupported config schema {v} (expected {CONFIG_SCHEMA})"
            ))),
        }
    }

    pub fn seed(&self, flag: Option<u64>) -> Result<u64, CliError> {
        flag.or(self.seed)
            .ok_or_else(|| CliError::Config("a seed is required (config `seed` or --seed)".into()))
    }

    pub fn format(&self, flag: Option<Format>) -> Result<Format, CliError> {
        match (flag, &self.format) {
            (Some(f), _) => Ok(f),
            (None, Some(s)) => s
                .parse()
                .map_err(|e: lyalab::Error| CliError::Config(e.to_string())),
            (None, None) => Ok(Format::Csv),
        }
    }

    pub fn budgets(&self) -> Result<Budgets, CliError> {
        let b = &self.budgets;
        if b.particle_budget == 0 || b.max_iters == 0 || b.depth == 0 {
            return Err(CliError::Config("all budgets must be positive".into()));
        }
        let budgets = Budgets {
            n_steps: b.n_steps,
            n_trials: b.n_trials,
        };
        budgets
            .validate()
            .map_err(|e| CliError::Config(e.to_string()))?;
        Ok(budgets)
    }

    pub fn cocycle(&self) -> Result<AnyCocycle, CliError> {
        let c = &self.cocycle;
        let inline = c.matrices.is_some() || c.window.is_some();
        let sources = [c.preset.is_some(), c.file.is_some(), inline];
        if sources.iter().filter(|s| **s).count() > 1 {
            return Err(CliError::Config(
                "[cocycle] takes only one of `preset`, `file`, or inline matrices".into(),
            ));
        }
        if c.sigma.is_some() && c.preset.is_none() {
            return Err(CliError::Config("`sigma` applies only to presets".into()));
        }
        let config_err = |e: lyalab::Error| CliError::Config(e.to_string());
        if let Some(file) = &c.file {
            if c.weights.is_some() {
                return Err(CliError::Config(
                    "weights come from the cocycle file".into(),
                ));
            }
            return load_cocycle(&self.base_dir.join(file)).map_err(config_err);
        }
        if inline {
            let def = CocycleDef {
                schema: lyalab::cocycle_file::SCHEMA_VERSION,
                alphabet_size: None,
                weights: c
                    .weights
                    .clone()
                    .ok_or_else(|| CliError::Config("inline cocycles need `weights`".into()))?,
                matrices: c.matrices.clone(),
                window: c.window.clone(),
            };
            return def.build().map_err(config_err);
        }
        let sigma = c.sigma.unwrap_or(2.0);
        let cocycle = match c.preset.unwrap_or(Preset::Diagonal) {
            Preset::Diagonal => {
                let w = two_weights(c.weights.as_deref().unwrap_or(&[0.7, 0.3]))?;
                diagonal_base(sigma, w)
            }
            Preset::Kifer => {
                let w = two_weights(c.weights.as_deref().unwrap_or(&[0.5, 0.5]))?;
                kifer_family(sigma, w[0]).and_then(|k| k.with_weights(w.to_vec()))
            }
        };
        cocycle.map(AnyCocycle::Finite).map_err(config_err)
    }

    pub fn perturbation(&self, alphabet: usize) -> Result<PerturbationSpec, CliError> {
        let p = &self.perturbation;
        match p.kind {
            DirectionKind::Default | DirectionKind::Rotation if p.directions.is_some() => Err(
                CliError::Config("`directions` requires perturbation kind = \"custom\"".into()),
            ),
            DirectionKind::Default | DirectionKind::Rotation => {
                let mut spec = if p.kind == DirectionKind::Default {
                    PerturbationSpec::default_matrix(alphabet)
                } else {
                    PerturbationSpec::rotation(alphabet)
                };
                if let Some(u) = &p.weight_direction {
                    spec = PerturbationSpec::custom(spec.directions, Some(u.clone()))
                        .map_err(|e| CliError::Config(e.to_string()))?;
                }
                Ok(spec)
            }
            DirectionKind::Custom => {
                let dirs = p.directions.as_ref().map(|ds| {
                    ds.iter()
                        .map(lyalab::cocycle_file::matrix_from_entries)
                        .collect()
                });
                PerturbationSpec::custom(dirs, p.weight_direction.clone())
                    .map_err(|e| CliError::Config(e.to_string()))
            }
        }
    }
}

fn two_weights(w: &[f64]) -> Result<[f64; 2], CliError> {
    <[f64; 2]>::try_from(w)
        .map_err(|_| CliError::Config(format!("preset cocycles take 2 weights, got {}", w.len())))
}
