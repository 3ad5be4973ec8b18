use std::collections::BTreeMap;
use std::path::PathBuf;

use clap::Args;
use gsmote::dataset::{imbalance_degree, round3, split_by_class, write_csv, Dataset, Instance, MinMaxScaler};
use gsmote::gmm::CovarianceType;
use gsmote::oversample::{augment_detailed, GsmoteOptions, GsmoteParams, KnnScope};
use gsmote::rng::seeded;
use gsmote::sampling::RadialMode;
use serde::Serialize;

use super::{ensure_distinct, load_dataset};
use crate::config::{self, load_or_default, required, resolve_seed, sidecar, AugmentConfig};
use crate::error::{At, CliError};

#[derive(Debug, Args)]
pub struct AugmentArgs {
    /// TOML settings; flags given here override it.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Input CSV with a header row.
    #[arg(short, long)]
    pub input: Option<PathBuf>,
    /// Output CSV. Sidecars `.summary.json` and `.config.toml` go next to it.
    #[arg(short, long)]
    pub output: Option<PathBuf>,
    /// Label column: `last`, a 0-based index, or a header name.
    #[arg(long)]
    pub label_column: Option<String>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Mixture components (m).
    #[arg(short = 'm', long)]
    pub components: Option<usize>,
    /// Sampling kernels (Num).
    #[arg(long)]
    pub kernels: Option<usize>,
    /// Candidates per kernel (M).
    #[arg(long)]
    pub per_kernel: Option<usize>,
    /// Synthetics kept (K). Defaults to the class gap; 0 disables augmentation.
    #[arg(short = 'k', long)]
    pub select: Option<usize>,
    /// Neighbors bounding each sampling ball.
    #[arg(long)]
    pub neighbors: Option<usize>,
    /// Min-max scale features before sampling and map synthetics back.
    #[arg(long)]
    pub scale: bool,
    /// Write `<output>.provenance.csv` with kernel and neighbor of each synthetic.
    #[arg(long)]
    pub provenance: bool,
    /// Draw points uniformly over the ball's volume.
    #[arg(long)]
    pub volume_uniform: bool,
    /// Search neighbors among the chosen kernels only.
    #[arg(long)]
    pub knn_over_kernels: bool,
    /// Diagonal covariances in the mixture.
    #[arg(long)]
    pub diagonal: bool,
    #[arg(long)]
    pub em_max_iter: Option<usize>,
    #[arg(long)]
    pub em_tol: Option<f64>,
}

impl AugmentArgs {
    pub fn resolve(self) -> Result<AugmentConfig, CliError> {
        let mut c: AugmentConfig = load_or_default(self.config.as_deref())?;
        c.input = self.input.or(c.input);
        c.output = self.output.or(c.output);
        if let Some(v) = self.label_column {
            c.label_column = v;
        }
        c.seed = self.seed.or(c.seed);
        c.components = self.components.or(c.components);
        c.kernels = self.kernels.or(c.kernels);
        c.per_kernel = self.per_kernel.or(c.per_kernel);
        c.select = self.select.or(c.select);
        c.neighbors = self.neighbors.or(c.neighbors);
        c.scale |= self.scale;
        c.provenance |= self.provenance;
        c.volume_uniform |= self.volume_uniform;
        c.knn_over_kernels |= self.knn_over_kernels;
        c.diagonal |= self.diagonal;
        if let Some(v) = self.em_max_iter {
            c.em_max_iter = v;
        }
        if let Some(v) = self.em_tol {
            c.em_tol = v;
        }
        Ok(c)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct AugmentSummary {
    pub input: String,
    pub output: String,
    pub seed: u64,
    pub params: GsmoteParams,
    pub options: GsmoteOptions,
    pub scaled: bool,
    pub input_size: usize,
    pub output_size: usize,
    pub synthetic: usize,
    pub degenerate: usize,
    pub candidates: usize,
    pub minority_label: String,
    pub majority_label: String,
    pub class_counts_before: BTreeMap<String, usize>,
    pub class_counts_after: BTreeMap<String, usize>,
    pub imbalance_degree_before: f64,
    pub imbalance_degree_after: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub em_iterations: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub em_converged: Option<bool>,
}

pub fn run(args: AugmentArgs) -> Result<(), CliError> {
    execute(args.resolve()?).map(|_| ())
}

pub(crate) fn options(volume: bool, over_kernels: bool, diagonal: bool, max_iter: usize, tol: f64) -> GsmoteOptions {
    GsmoteOptions {
        radial: if volume { RadialMode::Volume } else { RadialMode::Uniform },
        knn_scope: if over_kernels { KnnScope::Kernels } else { KnnScope::Minority },
        covariance: if diagonal { CovarianceType::Diagonal } else { CovarianceType::Full },
        em_max_iter: max_iter,
        em_tol: tol,
    }
}

fn named_counts(d: &Dataset) -> BTreeMap<String, usize> {
    d.class_counts()
        .into_iter()
        .map(|(l, n)| (d.label_text(l).to_string(), n))
        .collect()
}

/// Runs a fully specified augmentation and writes every output file.
pub fn execute(mut cfg: AugmentConfig) -> Result<AugmentSummary, CliError> {
    let input = required(&cfg.input, "input")?.to_path_buf();
    let output = required(&cfg.output, "output")?.to_path_buf();
    ensure_distinct(&input, &output)?;
    let seed = resolve_seed(cfg.seed)?;
    cfg.seed = Some(seed);

    let data = load_dataset(&input, &cfg.label_column)?;
    let split = split_by_class(&data).at("split")?;
    let defaults = GsmoteParams::balancing(split.minority.len(), split.majority.len());
    let params = GsmoteParams {
        components: *cfg.components.get_or_insert(defaults.components),
        kernels: *cfg.kernels.get_or_insert(defaults.kernels),
        per_kernel: *cfg.per_kernel.get_or_insert(defaults.per_kernel),
        select: *cfg.select.get_or_insert(defaults.select),
        neighbors: *cfg.neighbors.get_or_insert(defaults.neighbors),
    };
    let opts = options(
        cfg.volume_uniform,
        cfg.knn_over_kernels,
        cfg.diagonal,
        cfg.em_max_iter,
        cfg.em_tol,
    );

    let scaler = cfg.scale.then(|| MinMaxScaler::fit(&data));
    let work = match &scaler {
        Some(s) => s.transform(&data).at("scale")?,
        None => data.clone(),
    };
    let aug = augment_detailed(&work, &params, &opts, &mut seeded(seed)).at("augment")?;
    let result = match &scaler {
        Some(s) => {
            let mut inst = data.instances().to_vec();
            inst.extend(aug.run.batch.samples.iter().map(|syn| Instance {
                features: s.inverse_point(&syn.point),
                label: aug.minority_label,
                synthetic: true,
            }));
            data.with_instances(inst).at("scale")?
        }
        None => aug.dataset.clone(),
    };

    write_csv(&result, &output, true).at("write")?;
    if cfg.provenance {
        write_provenance(&data, &aug, &sidecar(&output, ".provenance.csv"))?;
    }
    let summary = AugmentSummary {
        input: input.display().to_string(),
        output: output.display().to_string(),
        seed,
        params: aug.run.effective,
        options: opts,
        scaled: cfg.scale,
        input_size: data.len(),
        output_size: result.len(),
        synthetic: aug.run.batch.len(),
        degenerate: aug.run.batch.degenerate_count(),
        candidates: aug.run.candidates,
        minority_label: data.label_text(aug.minority_label).to_string(),
        majority_label: data.label_text(aug.majority_label).to_string(),
        class_counts_before: named_counts(&data),
        class_counts_after: named_counts(&result),
        imbalance_degree_before: round3(imbalance_degree(&data).at("summary")?),
        imbalance_degree_after: round3(imbalance_degree(&result).at("summary")?),
        em_iterations: aug.run.em_report.as_ref().map(|r| r.iterations),
        em_converged: aug.run.em_report.as_ref().map(|r| r.converged),
    };
    config::write_file(&sidecar(&output, ".summary.json"), &config::to_json(&summary))?;
    config::save(&cfg, &sidecar(&output, ".config.toml"))?;
    log::info!(
        "wrote {} rows ({} synthetic) to {}",
        result.len(),
        summary.synthetic,
        output.display()
    );
    Ok(summary)
}

/// One row per synthetic: its output row, and the input rows of its kernel
/// and bounding neighbor.
fn write_provenance(
    data: &Dataset,
    aug: &gsmote::oversample::Augmented,
    path: &std::path::Path,
) -> Result<(), CliError> {
    let minority_rows: Vec<usize> = data
        .instances()
        .iter()
        .enumerate()
        .filter(|(_, i)| i.label == aug.minority_label)
        .map(|(r, _)| r)
        .collect();
    let mut w = csv::Writer::from_writer(Vec::new());
    let header = ["row", "kernel_row", "neighbor_row", "bound", "degenerate", "log_prob"];
    let csv_err = |e: csv::Error| CliError::Core {
        stage: "provenance",
        source: e.into(),
    };
    w.write_record(header).map_err(csv_err)?;
    for (j, s) in aug.run.batch.samples.iter().enumerate() {
        w.write_record([
            (data.len() + j).to_string(),
            minority_rows[s.kernel].to_string(),
            minority_rows[s.neighbor].to_string(),
            gsmote::dataset::format_f64(s.bound),
            s.degenerate.to_string(),
            s.log_prob.map(gsmote::dataset::format_f64).unwrap_or_default(),
        ])
        .map_err(csv_err)?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::Usage(e.to_string()))?;
    config::write_file(path, &bytes)
}
