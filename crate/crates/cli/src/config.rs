use std::path::{Path, PathBuf};

use fedforest::federation::{EncoderSelection, PipelineConfig};
use fedforest::gbdt::{num_leaves_for_depth, HyperGrid, HyperParams};
use fedforest::synthetic::SyntheticSpec;
use fedforest::tabular::{PartitionMode, PreprocessMode};
use serde::{Deserialize, Serialize};

/// A configuration problem, reported with exit code 2.
#[derive(Debug)]
pub struct ConfigError(pub String);

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ConfigError {}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    pub data: DataConfig,
    pub partition: PartitionConfig,
    #[serde(default)]
    pub privacy: PrivacyConfig,
    #[serde(default)]
    pub budget: BudgetConfig,
    #[serde(default)]
    pub encoder: HyperConfig,
    #[serde(default)]
    pub server: HyperConfig,
    #[serde(default)]
    pub selection: SelectionConfig,
    /// Hyperparameter search for the centralized baseline.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<GridConfig>,
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("fedforest-out")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataConfig {
    /// CSV file; relative paths resolve against the config file.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub synthetic: Option<SyntheticSpec>,
    #[serde(default = "default_label_column")]
    pub label_column: String,
    #[serde(default = "default_benign")]
    pub benign_class: String,
    #[serde(default = "default_test_fraction")]
    pub test_fraction: f64,
    #[serde(default)]
    pub preprocess: Preprocess,
}

fn default_label_column() -> String {
    "label".into()
}

fn default_benign() -> String {
    "benign".into()
}

fn default_test_fraction() -> f64 {
    0.25
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Preprocess {
    #[default]
    None,
    Log,
    Standardize,
}

impl Preprocess {
    pub fn mode(self) -> Option<PreprocessMode> {
        match self {
            Preprocess::None => None,
            Preprocess::Log => Some(PreprocessMode::Log),
            Preprocess::Standardize => Some(PreprocessMode::Standardize),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PartitionKind {
    Homogeneous,
    Heterogeneous,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PartitionConfig {
    pub n_clients: usize,
    pub mode: PartitionKind,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PrivacyConfig {
    /// Feature-mask probability.
    pub p: f64,
    /// Label-noise fraction.
    pub q: f64,
    /// Laplace budget; absent means no noise on encodings.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
}

impl Default for PrivacyConfig {
    fn default() -> Self {
        Self { p: 0.1, q: 0.2, epsilon: None }
    }
}

/// Training budget as a share of the training rows or an absolute count.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BudgetConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ratio: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub absolute: Option<u64>,
}

impl Default for BudgetConfig {
    fn default() -> Self {
        Self { ratio: Some(1.0), absolute: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HyperConfig {
    #[serde(default = "default_estimators")]
    pub n_estimators: usize,
    #[serde(default = "default_depth")]
    pub max_depth: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub num_leaves: Option<usize>,
    #[serde(default = "default_lr")]
    pub learning_rate: f64,
    #[serde(default = "default_lambda")]
    pub lambda: f64,
    #[serde(default = "default_msl")]
    pub min_samples_leaf: usize,
}

fn default_estimators() -> usize {
    50
}

fn default_depth() -> usize {
    4
}

fn default_lr() -> f64 {
    0.1
}

fn default_lambda() -> f64 {
    1.0
}

fn default_msl() -> usize {
    1
}

impl Default for HyperConfig {
    fn default() -> Self {
        Self {
            n_estimators: default_estimators(),
            max_depth: default_depth(),
            num_leaves: None,
            learning_rate: default_lr(),
            lambda: default_lambda(),
            min_samples_leaf: default_msl(),
        }
    }
}

impl HyperConfig {
    pub fn params(&self) -> HyperParams {
        HyperParams {
            n_estimators: self.n_estimators,
            max_depth: self.max_depth,
            num_leaves: self.num_leaves.unwrap_or_else(|| num_leaves_for_depth(self.max_depth)),
            learning_rate: self.learning_rate,
            lambda: self.lambda,
            min_samples_leaf: self.min_samples_leaf,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SelectionConfig {
    #[serde(default = "default_selection")]
    pub encoders: EncoderSelection,
    #[serde(default)]
    pub must_include: Vec<usize>,
}

fn default_selection() -> EncoderSelection {
    EncoderSelection::Greedy
}

impl Default for SelectionConfig {
    fn default() -> Self {
        Self { encoders: default_selection(), must_include: Vec::new() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub n_estimators: Vec<usize>,
    pub max_depth: Vec<usize>,
    /// Pinned leaf counts; absent derives them from depth.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub num_leaves: Option<Vec<usize>>,
    #[serde(default = "default_lr")]
    pub learning_rate: f64,
    #[serde(default = "default_lambda")]
    pub lambda: f64,
    #[serde(default = "default_msl")]
    pub min_samples_leaf: usize,
    /// Share of the training rows held out to score grid points.
    #[serde(default = "default_validation")]
    pub validation_fraction: f64,
}

impl GridConfig {
    pub fn grid(&self) -> HyperGrid {
        HyperGrid {
            n_estimators: self.n_estimators.clone(),
            max_depth: self.max_depth.clone(),
            num_leaves: self.num_leaves.clone(),
            learning_rate: self.learning_rate,
            lambda: self.lambda,
            min_samples_leaf: self.min_samples_leaf,
        }
    }
}

fn default_validation() -> f64 {
    0.2
}

impl RunConfig {
    /// Parses, applies overrides, resolves relative paths and validates.
    pub fn load(path: &Path, seed: Option<u64>, out: Option<PathBuf>) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError(format!("cannot read {}: {e}", path.display())))?;
        let mut cfg: RunConfig =
            toml::from_str(&text).map_err(|e| ConfigError(format!("{}: {e}", path.display())))?;
        if let Some(s) = seed {
            cfg.seed = s;
        }
        if let Some(o) = out {
            cfg.output_dir = o;
        }
        let base = path.parent().unwrap_or(Path::new("."));
        if let Some(p) = &cfg.data.path {
            if p.is_relative() {
                cfg.data.path = Some(base.join(p));
            }
        }
        cfg.resolve_defaults();
        cfg.validate()?;
        Ok(cfg)
    }

    /// Fills derived values so the echoed config is complete.
    fn resolve_defaults(&mut self) {
        for h in [&mut self.encoder, &mut self.server] {
            h.num_leaves.get_or_insert_with(|| num_leaves_for_depth(h.max_depth));
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let err = |m: String| Err(ConfigError(m));
        match (&self.data.path, &self.data.synthetic) {
            (Some(p), None) if !p.is_file() => return err(format!("data.path: {} does not exist", p.display())),
            (Some(_), None) | (None, Some(_)) => {}
            _ => return err("data: set exactly one of `path` or `synthetic`".into()),
        }
        if !(self.data.test_fraction > 0.0 && self.data.test_fraction < 1.0) {
            return err(format!("data.test_fraction must lie in (0, 1), got {}", self.data.test_fraction));
        }
        if self.partition.n_clients == 0 {
            return err("partition.n_clients must be at least 1".into());
        }
        match (self.budget.ratio, self.budget.absolute) {
            (Some(r), None) if !(r > 0.0 && r <= 1.0) => {
                return err(format!("budget.ratio must lie in (0, 1], got {r}"))
            }
            (Some(_), None) | (None, Some(_)) => {}
            _ => return err("budget: set exactly one of `ratio` or `absolute`".into()),
        }
        for (name, h) in [("encoder", &self.encoder), ("server", &self.server)] {
            if let Err(e) = h.params().validate() {
                return err(format!("{name}: {e}"));
            }
        }
        if let Some(g) = &self.grid {
            if !(g.validation_fraction > 0.0 && g.validation_fraction < 1.0) {
                return err(format!("grid.validation_fraction must lie in (0, 1), got {}", g.validation_fraction));
            }
            if g.grid().points().is_empty() {
                return err("grid: no valid hyperparameter points".into());
            }
        }
        let privacy = fedforest::privacy::MaskingParams { p: self.privacy.p, q: self.privacy.q, seed: 0 };
        if let Err(e) = privacy.validate() {
            return err(format!("privacy: {e}"));
        }
        if let Some(eps) = self.privacy.epsilon {
            if eps.is_nan() || eps <= 0.0 {
                return err(format!("privacy.epsilon must be positive, got {eps}"));
            }
        }
        Ok(())
    }

    pub fn partition_mode(&self) -> PartitionMode {
        match self.partition.mode {
            PartitionKind::Homogeneous => PartitionMode::Homogeneous,
            PartitionKind::Heterogeneous => PartitionMode::Heterogeneous { benign_class: self.data.benign_class.clone() },
        }
    }

    pub fn budget_for(&self, n_train: usize) -> u64 {
        match (self.budget.ratio, self.budget.absolute) {
            (_, Some(b)) => b,
            (Some(r), None) => (r * n_train as f64).floor() as u64,
            (None, None) => u64::MAX,
        }
    }

    pub fn pipeline(&self, n_train: usize) -> PipelineConfig {
        PipelineConfig {
            budget: Some(self.budget_for(n_train)),
            mask_probability: self.privacy.p,
            label_noise: self.privacy.q,
            epsilon: self.privacy.epsilon,
            encoder_hyper: self.encoder.params(),
            server_hyper: self.server.params(),
            encoder_selection: self.selection.encoders,
            must_include: self.selection.must_include.clone(),
            master_seed: self.seed,
            suppressed_uploads: Vec::new(),
        }
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serialises")
    }
}
