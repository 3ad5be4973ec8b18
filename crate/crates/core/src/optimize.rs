//! Differential evolution (DE/rand/1/bin, maximizing) and the
//! ELM-accuracy fitness used to tune GSMOTE parameters.

use std::collections::HashMap;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::sync::Mutex;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::classify::{elm_train, Classifier, ElmConfig};
use crate::dataset::{split_by_class, Dataset};
use crate::error::{Error, Result};
use crate::oversample::{augment, GsmoteOptions, GsmoteParams, KnnScope};
use crate::rng::substream;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeConfig {
    pub generations: usize,
    pub population: usize,
    pub mutation_factor: f64,
    pub crossover_prob: f64,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl DeConfig {
    pub fn dims(&self) -> usize {
        self.lower.len()
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidParameter(m));
        if self.population < 4 {
            return bad(format!("population {} < 4", self.population));
        }
        if self.generations == 0 {
            return bad("at least one generation is required".into());
        }
        if !(self.mutation_factor.is_finite() && self.mutation_factor >= 0.0) {
            return bad(format!("mutation factor {}", self.mutation_factor));
        }
        if !(0.0..=1.0).contains(&self.crossover_prob) {
            return bad(format!("crossover probability {}", self.crossover_prob));
        }
        if self.lower.is_empty() || self.lower.len() != self.upper.len() {
            return bad("bounds must be non-empty and of equal length".into());
        }
        for (j, (lo, hi)) in self.lower.iter().zip(&self.upper).enumerate() {
            if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
                return bad(format!("bounds [{lo}, {hi}] for dimension {j}"));
            }
        }
        Ok(())
    }

    fn clamp(&self, genes: &mut [f64]) {
        for (j, g) in genes.iter_mut().enumerate() {
            *g = g.clamp(self.lower[j], self.upper[j]);
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub genes: Vec<f64>,
    pub fitness: Option<f64>,
}

/// Uniform initial population: `c_min + u * (c_max - c_min)` per gene.
pub fn de_initialize<R: Rng + ?Sized>(config: &DeConfig, rng: &mut R) -> Result<Vec<Candidate>> {
    config.validate()?;
    Ok((0..config.population)
        .map(|_| Candidate {
            genes: config
                .lower
                .iter()
                .zip(&config.upper)
                .map(|(lo, hi)| lo + rng.random::<f64>() * (hi - lo))
                .collect(),
            fitness: None,
        })
        .collect())
}

/// Donor `r1 + f * (r2 - r3)`, clamped to the configured box.
pub fn de_mutate(r1: &[f64], r2: &[f64], r3: &[f64], f: f64, config: &DeConfig) -> Vec<f64> {
    let mut donor: Vec<f64> = r1
        .iter()
        .zip(r2.iter().zip(r3))
        .map(|(a, (b, c))| a + f * (b - c))
        .collect();
    config.clamp(&mut donor);
    donor
}

/// Binomial crossover. One index `j_rand` is drawn first and always takes
/// the donor gene; then one uniform `rand_j` is drawn per gene in order and
/// the donor gene is taken when `rand_j <= cr`.
pub fn de_crossover<R: Rng + ?Sized>(target: &[f64], donor: &[f64], cr: f64, rng: &mut R) -> Vec<f64> {
    let j_rand = rng.random_range(0..target.len());
    target
        .iter()
        .zip(donor)
        .enumerate()
        .map(|(j, (&t, &d))| {
            let u: f64 = rng.random();
            if j == j_rand || u <= cr {
                d
            } else {
                t
            }
        })
        .collect()
}

/// Greedy selection: the trial replaces the incumbent only if strictly better.
pub fn de_select(trial_fitness: f64, incumbent_fitness: f64) -> bool {
    trial_fitness > incumbent_fitness
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationRecord {
    pub generation: usize,
    pub best_genes: Vec<f64>,
    pub best_fitness: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeResult {
    pub best: Vec<f64>,
    pub best_fitness: f64,
    pub initial_best_fitness: f64,
    /// One record per generation, `1..=G`.
    pub history: Vec<GenerationRecord>,
}

/// Evaluates `fitness`, mapping panics and non-finite values to 0.
fn guarded<F: Fn(&[f64]) -> f64>(fitness: &F, genes: &[f64]) -> f64 {
    match catch_unwind(AssertUnwindSafe(|| fitness(genes))) {
        Ok(v) if v.is_finite() => v,
        Ok(v) => {
            log::warn!("fitness returned {v} for {genes:?}; using 0");
            0.0
        }
        Err(_) => {
            log::warn!("fitness panicked for {genes:?}; using 0");
            0.0
        }
    }
}

fn argmax(pop: &[Candidate]) -> usize {
    let mut best = 0;
    for (i, c) in pop.iter().enumerate() {
        if c.fitness > pop[best].fitness {
            best = i;
        }
    }
    best
}

const INIT_TAG: u64 = u64::MAX;

pub fn de_optimize<F, R>(fitness: F, config: &DeConfig, rng: &mut R) -> Result<DeResult>
where
    F: Fn(&[f64]) -> f64 + Sync,
    R: Rng + ?Sized,
{
    de_optimize_with(fitness, config, &[], rng, |_| {})
}

/// Maximizes `fitness` over the box in `config`.
///
/// `seeds` replace the first members of the random initial population
/// (clamped into the box). `on_generation` sees each generation's record as
/// it completes. Randomness is pre-assigned per `(generation, index)` from a
/// master seed drawn from `rng`, and fitness evaluations within a generation
/// run in parallel, so the trace depends only on the seed.
pub fn de_optimize_with<F, R, C>(
    fitness: F,
    config: &DeConfig,
    seeds: &[Vec<f64>],
    rng: &mut R,
    mut on_generation: C,
) -> Result<DeResult>
where
    F: Fn(&[f64]) -> f64 + Sync,
    R: Rng + ?Sized,
    C: FnMut(&GenerationRecord),
{
    config.validate()?;
    let master: u64 = rng.random();
    let mut pop = de_initialize(config, &mut substream(master, &[INIT_TAG]))?;
    for (slot, seed) in pop.iter_mut().zip(seeds) {
        if seed.len() != config.dims() {
            return Err(Error::DimensionMismatch {
                expected: config.dims(),
                found: seed.len(),
            });
        }
        slot.genes = seed.clone();
        config.clamp(&mut slot.genes);
    }
    let scores: Vec<f64> = pop.par_iter().map(|c| guarded(&fitness, &c.genes)).collect();
    for (c, s) in pop.iter_mut().zip(scores) {
        c.fitness = Some(s);
    }
    let initial_best_fitness = pop[argmax(&pop)].fitness.unwrap();

    let n = config.population;
    let mut history = Vec::with_capacity(config.generations);
    for g in 1..=config.generations {
        let trials: Vec<Vec<f64>> = (0..n)
            .map(|i| {
                let mut r = substream(master, &[g as u64, i as u64]);
                let picks: Vec<usize> = rand::seq::index::sample(&mut r, n - 1, 3)
                    .into_iter()
                    .map(|p| if p >= i { p + 1 } else { p })
                    .collect();
                let donor = de_mutate(
                    &pop[picks[0]].genes,
                    &pop[picks[1]].genes,
                    &pop[picks[2]].genes,
                    config.mutation_factor,
                    config,
                );
                de_crossover(&pop[i].genes, &donor, config.crossover_prob, &mut r)
            })
            .collect();
        let scores: Vec<f64> = trials.par_iter().map(|t| guarded(&fitness, t)).collect();
        for ((c, trial), score) in pop.iter_mut().zip(trials).zip(scores) {
            if de_select(score, c.fitness.unwrap()) {
                c.genes = trial;
                c.fitness = Some(score);
            }
        }
        let b = argmax(&pop);
        let record = GenerationRecord {
            generation: g,
            best_genes: pop[b].genes.clone(),
            best_fitness: pop[b].fitness.unwrap(),
        };
        on_generation(&record);
        history.push(record);
    }
    let b = argmax(&pop);
    Ok(DeResult {
        best: pop[b].genes.clone(),
        best_fitness: pop[b].fitness.unwrap(),
        initial_best_fitness,
        history,
    })
}

fn round_half_up(x: f64) -> i64 {
    (x + 0.5).floor() as i64
}

/// Rounds genes `(m, Num, M, K)` half-up and clamps them to
/// `m in [1, |S_min|]`, `Num in [1, |S_min|]`, `M >= 1`, `K in [0, Num * M]`.
pub fn decode_genes(genes: &[f64], minority: usize, neighbors: usize) -> GsmoteParams {
    let at = |i: usize| genes.get(i).copied().map_or(1, round_half_up);
    let cap = minority.max(1) as i64;
    let components = at(0).clamp(1, cap) as usize;
    let kernels = at(1).clamp(1, cap) as usize;
    let per_kernel = at(2).max(1) as usize;
    let select = at(3).clamp(0, (kernels * per_kernel) as i64) as usize;
    GsmoteParams {
        components,
        kernels,
        per_kernel,
        select,
        neighbors,
    }
}

pub fn encode_params(p: &GsmoteParams) -> Vec<f64> {
    vec![
        p.components as f64,
        p.kernels as f64,
        p.per_kernel as f64,
        p.select as f64,
    ]
}

/// Gene box `m in [1, 5]`, `Num in [1, |S_min|]`, `M in [1, 10]`,
/// `K in [1, |S_maj| - |S_min|]`, shrunk to what the minority size allows.
pub fn default_bounds(minority: usize, majority: usize) -> (Vec<f64>, Vec<f64>) {
    let gap = majority.saturating_sub(minority).max(1) as f64;
    (
        vec![1.0, 1.0, 1.0, 1.0],
        vec![5.min(minority).max(1) as f64, minority.max(1) as f64, 10.0, gap],
    )
}

const ELM_TAG: u64 = 0xe1;
const GSMOTE_TAG: u64 = 0x95;

/// Accuracy on `eval` of an ELM trained on `train` augmented by GSMOTE with
/// the decoded parameters.
///
/// The ELM stream depends only on the seed, and the GSMOTE stream on the
/// seed and decoded tuple, so equal tuples score identically and `K = 0`
/// reproduces the un-augmented baseline exactly. Scores are cached per tuple.
pub struct GsmoteFitness {
    train: Dataset,
    eval: Dataset,
    minority: usize,
    majority: usize,
    neighbors: usize,
    elm: ElmConfig,
    options: GsmoteOptions,
    seed: u64,
    cache: Mutex<HashMap<GsmoteParams, f64>>,
}

impl GsmoteFitness {
    pub fn new(
        train: Dataset,
        eval: Dataset,
        elm: ElmConfig,
        options: GsmoteOptions,
        neighbors: usize,
        seed: u64,
    ) -> Result<Self> {
        let split = split_by_class(&train)?;
        if eval.n_features() != train.n_features() {
            return Err(Error::DimensionMismatch {
                expected: train.n_features(),
                found: eval.n_features(),
            });
        }
        Ok(GsmoteFitness {
            minority: split.minority.len(),
            majority: split.majority.len(),
            train,
            eval,
            neighbors,
            elm,
            options,
            seed,
            cache: Mutex::new(HashMap::new()),
        })
    }

    pub fn minority_size(&self) -> usize {
        self.minority
    }

    pub fn majority_size(&self) -> usize {
        self.majority
    }

    pub fn decode(&self, genes: &[f64]) -> GsmoteParams {
        let pool = match self.options.knn_scope {
            KnnScope::Minority => self.minority,
            KnnScope::Kernels => round_half_up(genes.get(1).copied().unwrap_or(1.0))
                .clamp(1, self.minority.max(1) as i64) as usize,
        };
        let neighbors = self.neighbors.min(pool.saturating_sub(1));
        decode_genes(genes, self.minority, neighbors)
    }

    pub fn evaluate(&self, genes: &[f64]) -> f64 {
        self.evaluate_params(&self.decode(genes))
    }

    pub fn evaluate_params(&self, params: &GsmoteParams) -> f64 {
        if let Some(&v) = self.cache.lock().unwrap().get(params) {
            return v;
        }
        let score = match self.score(params) {
            Ok(v) => v,
            Err(e) => {
                log::warn!("fitness of {params:?} failed: {e}; using 0");
                0.0
            }
        };
        self.cache.lock().unwrap().insert(*params, score);
        score
    }

    /// Accuracy with no augmentation.
    pub fn baseline(&self) -> f64 {
        self.evaluate_params(&GsmoteParams {
            select: 0,
            ..self.decode(&[1.0, 1.0, 1.0, 0.0])
        })
    }

    fn score(&self, p: &GsmoteParams) -> Result<f64> {
        let tags = [
            GSMOTE_TAG,
            p.components as u64,
            p.kernels as u64,
            p.per_kernel as u64,
            p.select as u64,
            p.neighbors as u64,
        ];
        let augmented = augment(&self.train, p, &self.options, &mut substream(self.seed, &tags))?;
        let model = elm_train(&augmented, &self.elm, &mut substream(self.seed, &[ELM_TAG]))?;
        let pred = model.predict_all(&self.eval);
        let hits = pred
            .iter()
            .zip(self.eval.instances())
            .filter(|(p, inst)| **p == inst.label)
            .count();
        Ok(hits as f64 / pred.len() as f64)
    }
}

/// One-shot fitness without caching.
pub fn gsmote_fitness(
    genes: &[f64],
    train: &Dataset,
    test: &Dataset,
    elm: &ElmConfig,
    options: &GsmoteOptions,
    neighbors: usize,
    seed: u64,
) -> f64 {
    match GsmoteFitness::new(
        train.clone(),
        test.clone(),
        *elm,
        options.clone(),
        neighbors,
        seed,
    ) {
        Ok(f) => f.evaluate(genes),
        Err(e) => {
            log::warn!("fitness setup failed: {e}; using 0");
            0.0
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TuneRecord {
    pub generation: usize,
    pub params: GsmoteParams,
    pub fitness: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TuneResult {
    pub best: GsmoteParams,
    pub best_fitness: f64,
    pub history: Vec<TuneRecord>,
}

/// Runs DE over the four GSMOTE genes.
pub fn tune_gsmote<R: Rng + ?Sized>(
    fitness: &GsmoteFitness,
    config: &DeConfig,
    seeds: &[GsmoteParams],
    rng: &mut R,
    mut on_generation: impl FnMut(&TuneRecord),
) -> Result<TuneResult> {
    if config.dims() != 4 {
        return Err(Error::InvalidParameter(format!(
            "GSMOTE tuning needs 4 genes, got {}",
            config.dims()
        )));
    }
    let seeds: Vec<Vec<f64>> = seeds.iter().map(encode_params).collect();
    let mut history = Vec::new();
    let result = de_optimize_with(
        |g: &[f64]| fitness.evaluate(g),
        config,
        &seeds,
        rng,
        |rec| {
            let r = TuneRecord {
                generation: rec.generation,
                params: fitness.decode(&rec.best_genes),
                fitness: rec.best_fitness,
            };
            on_generation(&r);
            history.push(r);
        },
    )?;
    Ok(TuneResult {
        best: fitness.decode(&result.best),
        best_fitness: result.best_fitness,
        history,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded;

    fn box1(lo: f64, hi: f64) -> DeConfig {
        DeConfig {
            generations: 5,
            population: 6,
            mutation_factor: 0.5,
            crossover_prob: 0.9,
            lower: vec![lo],
            upper: vec![hi],
        }
    }

    #[test]
    fn validation() {
        let mut c = box1(0.0, 1.0);
        assert!(c.validate().is_ok());
        c.population = 3;
        assert!(c.validate().is_err());
        let mut c = box1(2.0, 1.0);
        assert!(c.validate().is_err());
        c = box1(0.0, 1.0);
        c.crossover_prob = 1.5;
        assert!(c.validate().is_err());
    }

    #[test]
    fn degenerate_bounds_fix_every_gene() {
        let pop = de_initialize(&box1(3.0, 3.0), &mut seeded(0)).unwrap();
        assert!(pop.iter().all(|c| c.genes == vec![3.0]));
    }

    #[test]
    fn mutation_examples() {
        let c = box1(-10.0, 10.0);
        assert_eq!(de_mutate(&[1.0], &[2.0], &[2.0], 0.8, &c), vec![1.0]);
        assert_eq!(de_mutate(&[1.0], &[5.0], &[2.0], 0.0, &c), vec![1.0]);
        assert_eq!(de_mutate(&[0.0], &[4.0], &[2.0], 0.5, &c), vec![1.0]);
        assert_eq!(de_mutate(&[9.0], &[9.0], &[0.0], 1.0, &c), vec![10.0]);
    }

    #[test]
    fn crossover_extremes() {
        let t = [0.0; 6];
        let d = [1.0; 6];
        assert_eq!(de_crossover(&t, &d, 1.0, &mut seeded(1)), d.to_vec());
        let trial = de_crossover(&t, &d, 0.0, &mut seeded(1));
        assert_eq!(trial.iter().filter(|&&v| v == 1.0).count(), 1);
    }

    #[test]
    fn selection_is_strict() {
        assert!(!de_select(0.5, 0.5));
        assert!(de_select(0.6, 0.5));
        assert!(!de_select(0.4, 0.5));
    }

    #[test]
    fn constant_fitness_keeps_initial_population() {
        let c = box1(0.0, 1.0);
        let r = de_optimize(|_| 1.0, &c, &mut seeded(3)).unwrap();
        assert!(r.history.iter().all(|h| h.best_fitness == 1.0));
        let master: u64 = rand::Rng::random(&mut seeded(3));
        let init = de_initialize(&c, &mut substream(master, &[INIT_TAG])).unwrap();
        assert_eq!(r.best, init[0].genes);
    }

    #[test]
    fn panicking_fitness_scores_zero() {
        let c = box1(-1.0, 1.0);
        let r = de_optimize(
            |x| {
                if x[0] > 0.0 {
                    panic!("boom")
                } else {
                    -1.0 + x[0]
                }
            },
            &c,
            &mut seeded(0),
        )
        .unwrap();
        assert_eq!(r.best_fitness, 0.0);
    }

    #[test]
    fn seeds_enter_the_population() {
        let c = box1(0.0, 10.0);
        let r = de_optimize_with(
            |x| -(x[0] - 7.0).abs(),
            &DeConfig { generations: 1, ..c },
            &[vec![7.0]],
            &mut seeded(0),
            |_| {},
        )
        .unwrap();
        assert_eq!(r.initial_best_fitness, 0.0);
    }

    #[test]
    fn decode_examples() {
        let p = decode_genes(&[2.5, 3.49, 0.2, 100.0], 10, 5);
        assert_eq!(
            p,
            GsmoteParams {
                components: 3,
                kernels: 3,
                per_kernel: 1,
                select: 3,
                neighbors: 5
            }
        );
        let p = decode_genes(&[99.0, 99.0, 4.0, -3.0], 10, 5);
        assert_eq!((p.components, p.kernels, p.select), (10, 10, 0));
    }
}
