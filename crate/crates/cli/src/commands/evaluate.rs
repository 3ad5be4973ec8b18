use std::path::{Path, PathBuf};

use clap::Args;
use gsmote::classify::{elm_train, gnb_train, Classifier, ElmConfig, MetricsReport};
use gsmote::dataset::{merged_label_names, Dataset};
use gsmote::rng::substream;
use gsmote::Error;
use serde::Serialize;

use super::load_dataset;
use crate::config::{self, load_or_default, required, resolve_seed, sidecar, ClassifierKind, EvaluateConfig};
use crate::error::{At, CliError};

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    /// TOML settings; flags given here override it.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Metrics JSON to write.
    #[arg(short, long)]
    pub output: Option<PathBuf>,
    /// CSV of external predictions with `truth` and `predicted` columns.
    #[arg(long)]
    pub predictions: Option<PathBuf>,
    /// A second predictions CSV reported side by side with the first.
    #[arg(long)]
    pub compare_predictions: Option<PathBuf>,
    /// Training CSV for an in-house classifier.
    #[arg(long)]
    pub train: Option<PathBuf>,
    /// Test CSV for an in-house classifier.
    #[arg(long)]
    pub test: Option<PathBuf>,
    /// Augmented training CSV, reported side by side with `--train`.
    #[arg(long)]
    pub augmented: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub classifier: Option<ClassifierKind>,
    #[arg(long)]
    pub label_column: Option<String>,
    /// Positive class label. Defaults to the smaller class.
    #[arg(long)]
    pub positive: Option<String>,
    /// Beta of the F-measure.
    #[arg(long)]
    pub beta: Option<f64>,
    /// Report ratios on a 0-100 scale.
    #[arg(long)]
    pub percent: bool,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub elm_hidden: Option<usize>,
    #[arg(long)]
    pub elm_ridge: Option<f64>,
}

impl EvaluateArgs {
    pub fn resolve(self) -> Result<EvaluateConfig, CliError> {
        let mut c: EvaluateConfig = load_or_default(self.config.as_deref())?;
        c.output = self.output.or(c.output);
        c.predictions = self.predictions.or(c.predictions);
        c.compare_predictions = self.compare_predictions.or(c.compare_predictions);
        c.train = self.train.or(c.train);
        c.test = self.test.or(c.test);
        c.augmented = self.augmented.or(c.augmented);
        c.positive = self.positive.or(c.positive);
        c.seed = self.seed.or(c.seed);
        c.percent |= self.percent;
        if let Some(v) = self.classifier {
            c.classifier = v;
        }
        if let Some(v) = self.label_column {
            c.label_column = v;
        }
        if let Some(v) = self.beta {
            c.beta = v;
        }
        if let Some(v) = self.elm_hidden {
            c.elm_hidden = v;
        }
        if let Some(v) = self.elm_ridge {
            c.elm_ridge = v;
        }
        Ok(c)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct NamedReport {
    pub dataset: String,
    pub metrics: MetricsReport,
}

/// One cell of a measure-by-dataset table.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TableRow {
    pub measure: String,
    pub dataset: String,
    pub value: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct Evaluation {
    pub positive_class: String,
    pub beta: f64,
    pub percent: bool,
    pub reports: Vec<NamedReport>,
    pub table: Vec<TableRow>,
}

pub fn run(args: EvaluateArgs) -> Result<(), CliError> {
    execute(args.resolve()?).map(|_| ())
}

const ELM_TAG: u64 = 0xe1;

pub fn execute(mut cfg: EvaluateConfig) -> Result<Evaluation, CliError> {
    let output = required(&cfg.output, "output")?.to_path_buf();
    if !(cfg.beta.is_finite() && cfg.beta > 0.0) {
        return Err(CliError::Usage(format!("beta must be positive, got {}", cfg.beta)));
    }
    // (name, predictions, truth) per compared system, over shared label names.
    let (names, runs, default_positive) = match (&cfg.predictions, &cfg.train) {
        (Some(_), Some(_)) => {
            return Err(CliError::Usage(
                "give either --predictions or --train/--test, not both".into(),
            ))
        }
        (Some(p), None) => from_predictions(p, cfg.compare_predictions.as_deref())?,
        (None, Some(_)) => {
            let seed = resolve_seed(cfg.seed)?;
            cfg.seed = Some(seed);
            from_classifier(&cfg, seed)?
        }
        (None, None) => {
            return Err(CliError::Usage(
                "nothing to evaluate: give --predictions or --train and --test".into(),
            ))
        }
    };
    let positive = match &cfg.positive {
        Some(p) => names.iter().position(|n| n == p).ok_or_else(|| {
            CliError::Usage(format!("positive class `{p}` not among labels {names:?}"))
        })?,
        None => default_positive,
    };

    let mut reports = Vec::new();
    for (dataset, pred, truth) in runs {
        let mut metrics = MetricsReport::compute(&pred, &truth, positive, &names, cfg.beta).at("metrics")?;
        if cfg.percent {
            metrics = metrics.as_percent();
        }
        reports.push(NamedReport { dataset, metrics });
    }
    let table = table(&reports);
    let eval = Evaluation {
        positive_class: names[positive].clone(),
        beta: cfg.beta,
        percent: cfg.percent,
        reports,
        table,
    };
    config::write_file(&output, &config::to_json(&eval))?;
    config::save(&cfg, &sidecar(&output, ".config.toml"))?;
    Ok(eval)
}

/// Rows grouped by measure, one per compared dataset.
fn table(reports: &[NamedReport]) -> Vec<TableRow> {
    let mut measures: Vec<String> = vec!["accuracy".into(), "precision".into(), "recall".into()];
    for r in reports {
        for class in r.metrics.f_measure.keys() {
            let m = format!("f_measure:{class}");
            if !measures.contains(&m) {
                measures.push(m);
            }
        }
    }
    measures.push("weighted_f".into());
    let value = |m: &MetricsReport, measure: &str| -> f64 {
        match measure {
            "accuracy" => m.accuracy,
            "precision" => m.precision,
            "recall" => m.recall,
            "weighted_f" => m.weighted_f,
            other => {
                let class = other.trim_start_matches("f_measure:");
                m.f_measure.get(class).copied().unwrap_or(0.0)
            }
        }
    };
    let mut rows = Vec::new();
    for measure in &measures {
        for r in reports {
            rows.push(TableRow {
                measure: measure.clone(),
                dataset: r.dataset.clone(),
                value: value(&r.metrics, measure),
            });
        }
    }
    rows
}

type Runs = (Vec<String>, Vec<(String, Vec<usize>, Vec<usize>)>, usize);

/// The label of the smaller class in `truth`; ties go to the earlier label.
fn minority_of(truth: &[usize], n_labels: usize) -> usize {
    let mut counts = vec![0usize; n_labels];
    for &t in truth {
        counts[t] += 1;
    }
    let present: Vec<usize> = (0..n_labels).filter(|&l| counts[l] > 0).collect();
    present
        .iter()
        .copied()
        .min_by_key(|&l| (counts[l], l))
        .unwrap_or(0)
}

fn read_predictions(path: &Path) -> Result<(Vec<String>, Vec<String>), CliError> {
    let load = |e: Error| CliError::Core { stage: "load", source: e };
    let file = std::fs::File::open(path)
        .map_err(|e| load(Error::Format(format!("{}: {e}", path.display()))))?;
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(file);
    let header: Vec<String> = rdr
        .headers()
        .map_err(|e| load(e.into()))?
        .iter()
        .map(|h| h.to_ascii_lowercase())
        .collect();
    let find = |name: &str, fallback: usize| header.iter().position(|h| h == name).unwrap_or(fallback);
    let (ti, pi) = (find("truth", 0), find("predicted", 1));
    if header.len() < 2 {
        return Err(load(Error::Format(format!(
            "{}: need `truth` and `predicted` columns",
            path.display()
        ))));
    }
    let mut truth = Vec::new();
    let mut pred = Vec::new();
    for (row, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| load(e.into()))?;
        let cell = |i: usize, col: &str| -> Result<String, CliError> {
            match rec.get(i) {
                Some(v) if !v.is_empty() => Ok(v.to_string()),
                _ => Err(load(Error::MissingValue {
                    row: row + 1,
                    column: col.into(),
                })),
            }
        };
        truth.push(cell(ti, "truth")?);
        pred.push(cell(pi, "predicted")?);
    }
    if truth.is_empty() {
        return Err(load(Error::EmptyDataset));
    }
    Ok((truth, pred))
}

fn from_predictions(primary: &Path, compare: Option<&Path>) -> Result<Runs, CliError> {
    let mut files = vec![("original".to_string(), read_predictions(primary)?)];
    if let Some(c) = compare {
        files.push(("augmented".to_string(), read_predictions(c)?));
    }
    let mut names: Vec<String> = Vec::new();
    for (_, (t, p)) in &files {
        for l in t.iter().chain(p) {
            if !names.contains(l) {
                names.push(l.clone());
            }
        }
    }
    let id = |l: &String| names.iter().position(|n| n == l).expect("collected above");
    let runs: Vec<(String, Vec<usize>, Vec<usize>)> = files
        .iter()
        .map(|(name, (t, p))| (name.clone(), p.iter().map(id).collect(), t.iter().map(id).collect()))
        .collect();
    let positive = minority_of(&runs[0].2, names.len());
    Ok((names, runs, positive))
}

fn from_classifier(cfg: &EvaluateConfig, seed: u64) -> Result<Runs, CliError> {
    let train = load_dataset(required(&cfg.train, "train")?, &cfg.label_column)?;
    let test = load_dataset(required(&cfg.test, "test")?, &cfg.label_column)?;
    let augmented = match &cfg.augmented {
        Some(p) => Some(load_dataset(p, &cfg.label_column)?),
        None => None,
    };
    let mut all: Vec<&Dataset> = vec![&train, &test];
    all.extend(augmented.as_ref());
    let names = merged_label_names(&all);
    let train = train.relabel(&names).at("load")?;
    let test = test.relabel(&names).at("load")?;
    let truth = test.labels();

    let mut sets = vec![("original".to_string(), train)];
    if let Some(a) = augmented {
        sets.push(("augmented".to_string(), a.relabel(&names).at("load")?));
    }
    let elm = ElmConfig {
        hidden: cfg.elm_hidden,
        ridge: cfg.elm_ridge,
    };
    let mut runs = Vec::new();
    for (name, set) in &sets {
        if set.n_features() != test.n_features() {
            return Err(CliError::Core {
                stage: "train",
                source: Error::DimensionMismatch {
                    expected: test.n_features(),
                    found: set.n_features(),
                },
            });
        }
        let pred = match cfg.classifier {
            ClassifierKind::Elm => {
                elm_train(set, &elm, &mut substream(seed, &[ELM_TAG])).at("train")?.predict_all(&test)
            }
            ClassifierKind::Gnb => gnb_train(set).at("train")?.predict_all(&test),
        };
        runs.push((name.clone(), pred, truth.clone()));
    }
    let positive = minority_of(&sets[0].1.labels(), names.len());
    Ok((names, runs, positive))
}
