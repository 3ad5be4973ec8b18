use std::io::Write;
use std::path::PathBuf;
use std::time::Instant;

use clap::Args;
use gsmote::classify::ElmConfig;
use gsmote::dataset::{merged_label_names, split_by_class, stratified_split};
use gsmote::optimize::{default_bounds, encode_params, tune_gsmote, DeConfig, GsmoteFitness, TuneRecord};
use gsmote::oversample::GsmoteParams;
use gsmote::rng::substream;
use serde::Serialize;

use super::augment::options;
use super::load_dataset;
use crate::config::{self, load_or_default, required, resolve_seed, TuneConfig};
use crate::error::{At, CliError};

#[derive(Debug, Args)]
pub struct TuneArgs {
    /// TOML settings; flags given here override it.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Training CSV.
    #[arg(short, long)]
    pub input: Option<PathBuf>,
    /// Output directory.
    #[arg(short, long)]
    pub output: Option<PathBuf>,
    /// Held-out test CSV, used for fitness only with `--fitness-on-test`.
    #[arg(long)]
    pub test: Option<PathBuf>,
    /// Score candidates on `--test` instead of an inner validation split.
    #[arg(long)]
    pub fitness_on_test: bool,
    /// Share of the training data held out for fitness.
    #[arg(long)]
    pub validation_fraction: Option<f64>,
    #[arg(long)]
    pub label_column: Option<String>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Generations (G).
    #[arg(short = 'g', long)]
    pub generations: Option<usize>,
    /// Population size (N).
    #[arg(short = 'n', long)]
    pub population: Option<usize>,
    /// Mutation factor (F).
    #[arg(long)]
    pub mutation_factor: Option<f64>,
    /// Crossover probability (C_r).
    #[arg(long)]
    pub crossover_prob: Option<f64>,
    /// Lower gene bounds `m,Num,M,K`.
    #[arg(long, value_delimiter = ',', num_args = 4)]
    pub lower: Option<Vec<f64>>,
    /// Upper gene bounds `m,Num,M,K`.
    #[arg(long, value_delimiter = ',', num_args = 4)]
    pub upper: Option<Vec<f64>>,
    #[arg(long)]
    pub neighbors: Option<usize>,
    #[arg(long)]
    pub elm_hidden: Option<usize>,
    #[arg(long)]
    pub elm_ridge: Option<f64>,
    #[arg(long)]
    pub volume_uniform: bool,
    #[arg(long)]
    pub knn_over_kernels: bool,
    #[arg(long)]
    pub diagonal: bool,
    #[arg(long)]
    pub em_max_iter: Option<usize>,
    #[arg(long)]
    pub em_tol: Option<f64>,
    /// Include wall time in the log lines.
    #[arg(long)]
    pub record_timing: bool,
}

impl TuneArgs {
    pub fn resolve(self) -> Result<TuneConfig, CliError> {
        let mut c: TuneConfig = load_or_default(self.config.as_deref())?;
        c.input = self.input.or(c.input);
        c.output = self.output.or(c.output);
        c.test = self.test.or(c.test);
        c.fitness_on_test |= self.fitness_on_test;
        macro_rules! take {
            ($($f:ident),*) => { $( if let Some(v) = self.$f { c.$f = v; } )* };
        }
        take!(
            validation_fraction,
            label_column,
            generations,
            population,
            mutation_factor,
            crossover_prob,
            neighbors,
            elm_hidden,
            elm_ridge,
            em_max_iter,
            em_tol
        );
        c.seed = self.seed.or(c.seed);
        c.lower = self.lower.or(c.lower);
        c.upper = self.upper.or(c.upper);
        c.volume_uniform |= self.volume_uniform;
        c.knn_over_kernels |= self.knn_over_kernels;
        c.diagonal |= self.diagonal;
        c.record_timing |= self.record_timing;
        Ok(c)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct LogLine {
    pub generation: usize,
    pub best: GsmoteParams,
    pub fitness: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub wall_ms: Option<u128>,
}

#[derive(Debug, Clone, Serialize)]
pub struct BestParams {
    pub best: GsmoteParams,
    pub fitness: f64,
    pub default_params: GsmoteParams,
    pub default_fitness: f64,
    pub baseline_fitness: f64,
    pub fitness_data: &'static str,
    pub seed: u64,
    pub generations: usize,
    pub population: usize,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

pub fn run(args: TuneArgs) -> Result<(), CliError> {
    execute(args.resolve()?).map(|_| ())
}

const SPLIT_TAG: u64 = 0x5b;
const DE_TAG: u64 = 0xde;
const FITNESS_TAG: u64 = 0xf1;

pub fn execute(mut cfg: TuneConfig) -> Result<BestParams, CliError> {
    let input = required(&cfg.input, "input")?.to_path_buf();
    let out_dir = required(&cfg.output, "output")?.to_path_buf();
    let seed = resolve_seed(cfg.seed)?;
    cfg.seed = Some(seed);

    let data = load_dataset(&input, &cfg.label_column)?;
    let (train, eval, fitness_data) = if cfg.fitness_on_test {
        let test_path = required(&cfg.test, "test")
            .map_err(|_| CliError::Usage("--fitness-on-test needs --test".into()))?;
        let test = load_dataset(test_path, &cfg.label_column)?;
        let names = merged_label_names(&[&data, &test]);
        (
            data.relabel(&names).at("load")?,
            test.relabel(&names).at("load")?,
            "test",
        )
    } else {
        let (t, v) = stratified_split(
            &data,
            cfg.validation_fraction,
            &mut substream(seed, &[SPLIT_TAG]),
        )
        .at("split")?;
        (t, v, "validation")
    };

    let split = split_by_class(&train).at("split")?;
    let (lo, hi) = default_bounds(split.minority.len(), split.majority.len());
    let lower = cfg.lower.get_or_insert(lo).clone();
    let upper = cfg.upper.get_or_insert(hi).clone();
    let de = DeConfig {
        generations: cfg.generations,
        population: cfg.population,
        mutation_factor: cfg.mutation_factor,
        crossover_prob: cfg.crossover_prob,
        lower: lower.clone(),
        upper: upper.clone(),
    };
    de.validate().at("config")?;
    if de.dims() != 4 {
        return Err(CliError::Usage(format!(
            "bounds need 4 entries (m,Num,M,K), got {}",
            de.dims()
        )));
    }

    let opts = options(
        cfg.volume_uniform,
        cfg.knn_over_kernels,
        cfg.diagonal,
        cfg.em_max_iter,
        cfg.em_tol,
    );
    let elm = ElmConfig {
        hidden: cfg.elm_hidden,
        ridge: cfg.elm_ridge,
    };
    let fitness_seed: u64 = rand::Rng::random(&mut substream(seed, &[FITNESS_TAG]));
    let fitness = GsmoteFitness::new(train, eval, elm, opts, cfg.neighbors, fitness_seed).at("fitness")?;
    let default_params = fitness.decode(&encode_params(&GsmoteParams::balancing(
        split.minority.len(),
        split.majority.len(),
    )));

    std::fs::create_dir_all(&out_dir).map_err(|source| CliError::Write {
        path: out_dir.clone(),
        source,
    })?;
    let log_path = out_dir.join("tune_log.jsonl");
    let mut log_bytes = Vec::new();
    let started = Instant::now();
    let record_timing = cfg.record_timing;
    let result = tune_gsmote(
        &fitness,
        &de,
        &[default_params],
        &mut substream(seed, &[DE_TAG]),
        |rec: &TuneRecord| {
            let ms = started.elapsed().as_millis();
            log::info!(
                "generation {} best {:?} fitness {:.6} ({ms} ms)",
                rec.generation,
                rec.params,
                rec.fitness
            );
            let line = LogLine {
                generation: rec.generation,
                best: rec.params,
                fitness: rec.fitness,
                wall_ms: record_timing.then_some(ms),
            };
            serde_json::to_writer(&mut log_bytes, &line).expect("plain data serializes");
            log_bytes.write_all(b"\n").expect("in-memory write");
        },
    )
    .at("tune")?;
    config::write_file(&log_path, &log_bytes)?;

    let best = BestParams {
        best: result.best,
        fitness: result.best_fitness,
        default_params,
        default_fitness: fitness.evaluate_params(&default_params),
        baseline_fitness: fitness.baseline(),
        fitness_data,
        seed,
        generations: cfg.generations,
        population: cfg.population,
        lower,
        upper,
    };
    config::write_file(&out_dir.join("best_params.json"), &config::to_json(&best))?;
    config::save(&cfg, &out_dir.join("tune.config.toml"))?;
    Ok(best)
}
