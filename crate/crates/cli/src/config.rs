use std::path::{Path, PathBuf};

use medflow::effects::MsmConfig;
use medflow::oracle::TwoWaveParams;
use medflow::sensitivity::SensitivityConfig;
use medflow::synthdata::DgpConfig;
use medflow::weights::WeightModelSpec;
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub output_dir: PathBuf,
    /// Where the mediator used by the weights and models comes from.
    pub mediator_source: MediatorSource,
    pub stages: StageToggles,
    pub files: FilePaths,
    pub dgp: DgpConfig,
    pub simulate: SimulateOptions,
    pub geo: GeoConfig,
    pub weights: WeightModelSpec,
    pub effects: EffectsConfig,
    pub sensitivity: SensitivityConfig,
    pub oracle: OracleConfig,
    /// Effects computed directly from published coefficients; when present
    /// the `effects` stage uses these instead of fitted models.
    pub calculator: Vec<CalculatorEntry>,
    pub manifest: ManifestOptions,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            output_dir: PathBuf::from("medflow-out"),
            mediator_source: MediatorSource::Panel,
            stages: StageToggles::default(),
            files: FilePaths::default(),
            dgp: DgpConfig::default(),
            simulate: SimulateOptions::default(),
            geo: GeoConfig::default(),
            weights: WeightModelSpec::default(),
            effects: EffectsConfig::default(),
            sensitivity: SensitivityConfig::default(),
            oracle: OracleConfig::default(),
            calculator: Vec::new(),
            manifest: ManifestOptions::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MediatorSource {
    /// The `mediator` column of panel.csv.
    Panel,
    /// The disadvantage score in neighborhoods.csv.
    Neighborhoods,
}

/// Stages run by `all`, in pipeline order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StageToggles {
    pub simulate: bool,
    pub neighborhoods: bool,
    pub weights: bool,
    pub fit: bool,
    pub effects: bool,
    pub sensitivity: bool,
    pub oracle: bool,
    pub report: bool,
}

impl Default for StageToggles {
    fn default() -> Self {
        Self {
            simulate: true,
            neighborhoods: true,
            weights: true,
            fit: true,
            effects: true,
            sensitivity: false,
            oracle: false,
            report: true,
        }
    }
}

/// Input locations. Relative paths resolve against the output directory, so
/// the defaults pick up files written by earlier stages.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FilePaths {
    pub panel: PathBuf,
    pub baseline: PathBuf,
    pub outcome: PathBuf,
    pub residences: PathBuf,
    pub neighborhoods: PathBuf,
}

impl Default for FilePaths {
    fn default() -> Self {
        Self {
            panel: "panel.csv".into(),
            baseline: "baseline.csv".into(),
            outcome: "outcome.csv".into(),
            residences: "residences.csv".into(),
            neighborhoods: "neighborhoods.csv".into(),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulateOptions {
    /// Monte Carlo replicates for the ground-truth effects; 0 skips truth.json.
    pub truth_replicates: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GeoConfig {
    /// Nearest adults per neighborhood.
    pub k: u64,
    /// Overrides `dgp.residence.grid_side` when set.
    pub grid_side: Option<usize>,
}

impl Default for GeoConfig {
    fn default() -> Self {
        Self { k: 50, grid_side: None }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EffectsConfig {
    /// `T`; must equal the panel's intervened waves when set.
    pub horizon: Option<usize>,
    pub baseline_adjust: bool,
    /// Bootstrap replicates; 0 disables intervals.
    pub bootstrap: usize,
    pub seed: u64,
}

impl Default for EffectsConfig {
    fn default() -> Self {
        Self { horizon: None, baseline_adjust: true, bootstrap: 500, seed: 13 }
    }
}

impl EffectsConfig {
    pub fn msm(&self) -> MsmConfig {
        MsmConfig { horizon: self.horizon, baseline_adjust: self.baseline_adjust }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OracleConfig {
    pub n_persons: usize,
    /// Bootstrap replicates for the pipeline comparison; 0 reports exact
    /// effects only.
    pub bootstrap: usize,
    pub seed: u64,
    pub variants: Vec<OracleVariant>,
}

impl Default for OracleConfig {
    fn default() -> Self {
        Self {
            n_persons: 50_000,
            bootstrap: 200,
            seed: 17,
            variants: vec![OracleVariant { label: "default".into(), params: TwoWaveParams::default() }],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OracleVariant {
    pub label: String,
    #[serde(default)]
    pub params: TwoWaveParams,
}

/// Either MSM coefficients (`theta1`, `theta2`, `beta1`) or log-scale effects
/// (`ide_log`, `iie_log`), with the horizon `T`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CalculatorEntry {
    pub label: String,
    pub horizon: usize,
    pub theta1: Option<f64>,
    pub theta2: Option<f64>,
    pub beta1: Option<f64>,
    pub ide_log: Option<f64>,
    pub iie_log: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ManifestOptions {
    /// Record wall-clock start and end times. Off by default so reruns are
    /// byte-identical.
    pub timestamps: bool,
}

impl PipelineConfig {
    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        let cfg: PipelineConfig = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::from_toml(&text).map_err(|e| match e {
            CliError::Config(m) => CliError::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    /// Apply `--seed` to every random stage.
    pub fn override_seed(&mut self, seed: u64) {
        self.dgp.seed = seed;
        self.effects.seed = seed;
        self.sensitivity.seed = seed;
        self.oracle.seed = seed;
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |m: String| Err(CliError::Config(m));
        self.dgp.validate().map_err(|e| CliError::Config(format!("dgp: {e}")))?;
        self.weights.validate().map_err(|e| CliError::Config(format!("weights: {e}")))?;
        if self.geo.k == 0 {
            return bad("geo.k must be at least 1".into());
        }
        if self.geo.grid_side == Some(0) {
            return bad("geo.grid_side must be at least 1".into());
        }
        if self.effects.horizon == Some(0) {
            return bad("effects.horizon must be at least 1".into());
        }
        if self.effects.bootstrap == 1 {
            return bad("effects.bootstrap must be 0 or at least 2".into());
        }
        if self.sensitivity.grid.is_empty() || self.sensitivity.n_sims == 0 {
            return bad("sensitivity needs a nonempty grid and n_sims >= 1".into());
        }
        if !(self.sensitivity.noise_sd > 0.0) {
            return bad("sensitivity.noise_sd must be positive".into());
        }
        if self.oracle.variants.is_empty() {
            return bad("oracle.variants must not be empty".into());
        }
        if self.oracle.bootstrap == 1 {
            return bad("oracle.bootstrap must be 0 or at least 2".into());
        }
        for c in &self.calculator {
            c.validate()?;
        }
        Ok(())
    }

    /// Effective DGP block, with the geo grid override applied.
    pub fn dgp_config(&self) -> DgpConfig {
        let mut d = self.dgp.clone();
        if let Some(side) = self.geo.grid_side {
            d.residence.grid_side = Some(side);
        }
        d
    }

    pub fn input(&self, relative: &Path) -> PathBuf {
        if relative.is_absolute() {
            relative.to_path_buf()
        } else {
            self.output_dir.join(relative)
        }
    }

    pub fn output(&self, name: &str) -> PathBuf {
        self.output_dir.join(name)
    }
}

impl CalculatorEntry {
    pub fn validate(&self) -> Result<(), CliError> {
        let coefs = [self.theta1, self.theta2, self.beta1];
        let logs = [self.ide_log, self.iie_log];
        let full = |v: &[Option<f64>]| v.iter().all(|x| x.is_some_and(f64::is_finite));
        let none = |v: &[Option<f64>]| v.iter().all(Option::is_none);
        let ok = (full(&coefs) && none(&logs)) || (none(&coefs) && full(&logs));
        if !ok {
            return Err(CliError::Config(format!(
                "calculator '{}': give either theta1, theta2, beta1 or ide_log, iie_log",
                self.label
            )));
        }
        if self.horizon == 0 {
            return Err(CliError::Config(format!("calculator '{}': horizon must be at least 1", self.label)));
        }
        Ok(())
    }
}
