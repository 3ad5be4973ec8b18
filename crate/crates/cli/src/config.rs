//! Resolved run settings and their TOML persistence.

use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

/// Largest seed that survives a TOML round trip (TOML integers are `i64`).
pub const MAX_SEED: u64 = i64::MAX as u64;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AugmentConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub input: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
    pub label_column: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub components: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kernels: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub per_kernel: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub select: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub neighbors: Option<usize>,
    pub scale: bool,
    pub provenance: bool,
    pub volume_uniform: bool,
    pub knn_over_kernels: bool,
    pub diagonal: bool,
    pub em_max_iter: usize,
    pub em_tol: f64,
}

impl Default for AugmentConfig {
    fn default() -> Self {
        AugmentConfig {
            input: None,
            output: None,
            label_column: "last".into(),
            seed: None,
            components: None,
            kernels: None,
            per_kernel: None,
            select: None,
            neighbors: None,
            scale: false,
            provenance: false,
            volume_uniform: false,
            knn_over_kernels: false,
            diagonal: false,
            em_max_iter: 200,
            em_tol: 1e-6,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TuneConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub input: Option<PathBuf>,
    /// Directory receiving `best_params.json`, `tune_log.jsonl` and the
    /// resolved `tune.config.toml`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub test: Option<PathBuf>,
    pub fitness_on_test: bool,
    pub validation_fraction: f64,
    pub label_column: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub generations: usize,
    pub population: usize,
    pub mutation_factor: f64,
    pub crossover_prob: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lower: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub upper: Option<Vec<f64>>,
    pub neighbors: usize,
    pub elm_hidden: usize,
    pub elm_ridge: f64,
    pub volume_uniform: bool,
    pub knn_over_kernels: bool,
    pub diagonal: bool,
    pub em_max_iter: usize,
    pub em_tol: f64,
    /// Add per-generation wall time to the log. Makes the log differ run to run.
    pub record_timing: bool,
}

impl Default for TuneConfig {
    fn default() -> Self {
        TuneConfig {
            input: None,
            output: None,
            test: None,
            fitness_on_test: false,
            validation_fraction: 0.25,
            label_column: "last".into(),
            seed: None,
            generations: 20,
            population: 20,
            mutation_factor: 0.8,
            crossover_prob: 0.9,
            lower: None,
            upper: None,
            neighbors: 5,
            elm_hidden: 64,
            elm_ridge: 1e-3,
            volume_uniform: false,
            knn_over_kernels: false,
            diagonal: false,
            em_max_iter: 200,
            em_tol: 1e-6,
            record_timing: false,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum ClassifierKind {
    #[default]
    Elm,
    Gnb,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvaluateConfig {
    /// Metrics JSON path.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
    /// External `truth,predicted` CSV.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub predictions: Option<PathBuf>,
    /// Second predictions CSV for a side-by-side comparison.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub compare_predictions: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub train: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub test: Option<PathBuf>,
    /// Augmented training CSV, scored against `train` on the same test set.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub augmented: Option<PathBuf>,
    pub classifier: ClassifierKind,
    pub label_column: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub positive: Option<String>,
    pub beta: f64,
    pub percent: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub elm_hidden: usize,
    pub elm_ridge: f64,
}

impl Default for EvaluateConfig {
    fn default() -> Self {
        EvaluateConfig {
            output: None,
            predictions: None,
            compare_predictions: None,
            train: None,
            test: None,
            augmented: None,
            classifier: ClassifierKind::Elm,
            label_column: "last".into(),
            positive: None,
            beta: 1.0,
            percent: false,
            seed: None,
            elm_hidden: 64,
            elm_ridge: 1e-3,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum InputFormat {
    /// `.csv` means `text,label`; anything else is one document per line.
    #[default]
    Auto,
    Text,
    Csv,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VectorizeConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub input: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
    pub format: InputFormat,
    /// Stop-word file, one term per line. Unset means the built-in list.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stopwords: Option<PathBuf>,
    pub no_stopwords: bool,
    pub prune_singletons: bool,
    pub label_name: String,
    /// Label written for plain-text input, which carries none.
    pub default_label: String,
}

impl Default for VectorizeConfig {
    fn default() -> Self {
        VectorizeConfig {
            input: None,
            output: None,
            format: InputFormat::Auto,
            stopwords: None,
            no_stopwords: false,
            prune_singletons: false,
            label_name: "label".into(),
            default_label: "unlabeled".into(),
        }
    }
}

pub(crate) fn load<T: DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
    toml::from_str(&text)
        .map_err(|e| CliError::Usage(format!("bad config {}: {e}", path.display())))
}

pub(crate) fn load_or_default<T: DeserializeOwned + Default>(
    path: Option<&Path>,
) -> Result<T, CliError> {
    path.map_or_else(|| Ok(T::default()), load)
}

pub(crate) fn save<T: Serialize>(value: &T, path: &Path) -> Result<(), CliError> {
    let text = toml::to_string(value)
        .map_err(|e| CliError::Usage(format!("cannot serialize config: {e}")))?;
    write_file(path, text.as_bytes())
}

pub(crate) fn write_file(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    std::fs::write(path, bytes).map_err(|source| CliError::Write {
        path: path.to_path_buf(),
        source,
    })
}

/// `<path><suffix>`, e.g. `out.csv` + `.config.toml` -> `out.csv.config.toml`.
pub(crate) fn sidecar(path: &Path, suffix: &str) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

/// The given seed, or a fresh one drawn from system entropy.
pub(crate) fn resolve_seed(seed: Option<u64>) -> Result<u64, CliError> {
    match seed {
        Some(s) if s > MAX_SEED => Err(CliError::Usage(format!(
            "seed {s} is larger than {MAX_SEED}"
        ))),
        Some(s) => Ok(s),
        None => {
            let s = rand::random::<u64>() >> 1;
            log::info!("no seed given, using {s}");
            Ok(s)
        }
    }
}

pub(crate) fn required<'a>(v: &'a Option<PathBuf>, flag: &str) -> Result<&'a Path, CliError> {
    v.as_deref()
        .ok_or_else(|| CliError::Usage(format!("missing required `{flag}`")))
}

pub(crate) fn to_json<T: Serialize>(value: &T) -> Vec<u8> {
    let mut out = serde_json::to_vec_pretty(value).expect("plain data serializes");
    out.push(b'\n');
    out
}
