//! The GSMOTE pipeline: fit a mixture on the minority class, draw sampling
//! kernels by density, generate candidates in each kernel's hypersphere and
//! keep the most probable ones.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::{split_by_class, Dataset, Instance};
use crate::error::{Error, Result, StageExt};
use crate::gmm::{fit_em, sample_kernels, top_k_by_logprob, CovarianceType, EmOptions, EmReport};
use crate::gmm::GaussianMixture;
use crate::rng::substream;
use crate::sampling::{knn_points, sphere_synthetic, Neighborhood, RadialMode, SyntheticBatch};

/// `(m, Num, M, K)` plus the neighborhood size used for radius bounds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct GsmoteParams {
    /// Mixture components `m`.
    pub components: usize,
    /// Sampling kernels `Num`.
    pub kernels: usize,
    /// Candidates generated per kernel `M`.
    pub per_kernel: usize,
    /// Synthetics kept after filtering `K`. Zero disables augmentation.
    pub select: usize,
    pub neighbors: usize,
}

impl GsmoteParams {
    pub fn candidate_count(&self) -> usize {
        self.kernels * self.per_kernel
    }

    /// Defaults that bring a split to balance: every minority instance is a
    /// kernel and twice as many candidates as needed are generated.
    pub fn balancing(minority: usize, majority: usize) -> Self {
        let select = majority.saturating_sub(minority);
        let kernels = minority.max(1);
        GsmoteParams {
            components: 2.min(minority).max(1),
            kernels,
            per_kernel: (2 * select).div_ceil(kernels).max(1),
            select,
            neighbors: 5.min(minority.saturating_sub(1)).max(1),
        }
    }

    /// Checks feasibility against a minority class of `minority` instances.
    pub fn check(&self, minority: usize, scope: KnnScope) -> Result<()> {
        if self.select == 0 {
            return Ok(());
        }
        let bad = |msg: String| Err(Error::Infeasible(msg));
        if self.components == 0 || self.kernels == 0 || self.per_kernel == 0 || self.neighbors == 0
        {
            return bad(format!("all parameters must be positive: {self:?}"));
        }
        if self.kernels > minority {
            return bad(format!(
                "{} kernels exceed the {minority} minority instances",
                self.kernels
            ));
        }
        if self.select > self.candidate_count() {
            return bad(format!(
                "cannot keep {} of {} x {} candidates",
                self.select, self.kernels, self.per_kernel
            ));
        }
        let pool = match scope {
            KnnScope::Minority => minority,
            KnnScope::Kernels => self.kernels,
        };
        if self.neighbors >= pool {
            return bad(format!(
                "{} neighbors need more than {pool} points in the search set",
                self.neighbors
            ));
        }
        Ok(())
    }
}

/// Where each kernel's neighbors are searched.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum KnnScope {
    /// The whole minority class.
    #[default]
    Minority,
    /// Only the selected kernels.
    Kernels,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GsmoteOptions {
    pub radial: RadialMode,
    pub knn_scope: KnnScope,
    pub covariance: CovarianceType,
    pub em_max_iter: usize,
    pub em_tol: f64,
}

impl Default for GsmoteOptions {
    fn default() -> Self {
        let em = EmOptions::default();
        GsmoteOptions {
            radial: RadialMode::default(),
            knn_scope: KnnScope::default(),
            covariance: CovarianceType::default(),
            em_max_iter: em.max_iter,
            em_tol: em.tol,
        }
    }
}

#[derive(Debug, Clone)]
pub struct GsmoteRun {
    pub batch: SyntheticBatch,
    /// Parameters after component clamping.
    pub effective: GsmoteParams,
    /// Unset when `select == 0` short-circuits the pipeline.
    pub model: Option<GaussianMixture>,
    pub em_report: Option<EmReport>,
    pub kernel_indices: Vec<usize>,
    pub candidates: usize,
}

const STAGE_EM: u64 = 0;
const STAGE_KERNELS: u64 = 1;
const STAGE_CANDIDATES: u64 = 2;

pub fn gsmote<R: Rng + ?Sized>(
    s_min: &Dataset,
    params: &GsmoteParams,
    options: &GsmoteOptions,
    rng: &mut R,
) -> Result<SyntheticBatch> {
    Ok(gsmote_run(s_min, params, options, rng)?.batch)
}

/// Runs the full pipeline and keeps the intermediate artifacts.
///
/// One master seed is drawn from `rng`; EM, kernel selection and each
/// kernel's candidate draws use their own substreams of it, so the output is
/// identical however the per-kernel work is scheduled.
pub fn gsmote_run<R: Rng + ?Sized>(
    s_min: &Dataset,
    params: &GsmoteParams,
    options: &GsmoteOptions,
    rng: &mut R,
) -> Result<GsmoteRun> {
    let points = s_min.points();
    params.check(points.len(), options.knn_scope)?;
    let mut effective = *params;
    if params.select == 0 {
        return Ok(GsmoteRun {
            batch: SyntheticBatch::default(),
            effective,
            model: None,
            em_report: None,
            kernel_indices: Vec::new(),
            candidates: 0,
        });
    }
    if effective.components > points.len() {
        log::warn!(
            "clamping mixture components from {} to the {} minority instances",
            effective.components,
            points.len()
        );
        effective.components = points.len();
    }
    let master: u64 = rng.random();

    let em = EmOptions {
        components: effective.components,
        max_iter: options.em_max_iter,
        tol: options.em_tol,
        covariance: options.covariance,
    };
    let (model, report) =
        fit_em(&points, &em, &mut substream(master, &[STAGE_EM])).stage("fit_em")?;

    let kernels = sample_kernels(
        &model,
        &points,
        effective.kernels,
        &mut substream(master, &[STAGE_KERNELS]),
    )
    .stage("sample_kernels")?;

    let hoods: Vec<Neighborhood> = match options.knn_scope {
        KnnScope::Minority => kernels
            .iter()
            .map(|&i| knn_points(&points, i, effective.neighbors))
            .collect::<Result<_>>(),
        KnnScope::Kernels => {
            let chosen: Vec<&[f64]> = kernels.iter().map(|&i| points[i]).collect();
            (0..chosen.len())
                .map(|r| {
                    let mut h = knn_points(&chosen, r, effective.neighbors)?;
                    h.center_index = kernels[r];
                    h.neighbor_indices.iter_mut().for_each(|n| *n = kernels[*n]);
                    Ok(h)
                })
                .collect::<Result<_>>()
        }
    }
    .stage("knn")?;

    let per_kernel: Vec<SyntheticBatch> = hoods
        .par_iter()
        .enumerate()
        .map(|(rank, h)| {
            let mut rng = substream(master, &[STAGE_CANDIDATES, rank as u64]);
            let k = h.neighbor_indices.len();
            let samples = (0..effective.per_kernel)
                .map(|_| {
                    let slot = rng.random_range(0..k);
                    sphere_synthetic(
                        points[h.center_index],
                        h.center_index,
                        h.neighbor_indices[slot],
                        h.radii[slot],
                        options.radial,
                        &mut rng,
                    )
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(SyntheticBatch { samples })
        })
        .collect::<Result<_>>()
        .stage("candidates")?;
    let candidates = SyntheticBatch {
        samples: per_kernel.into_iter().flat_map(|b| b.samples).collect(),
    };
    debug_assert_eq!(candidates.len(), effective.candidate_count());

    let batch = top_k_by_logprob(&model, &candidates, effective.select).stage("filter")?;
    Ok(GsmoteRun {
        batch,
        effective,
        model: Some(model),
        em_report: Some(report),
        kernel_indices: kernels,
        candidates: candidates.len(),
    })
}

#[derive(Debug, Clone)]
pub struct Augmented {
    pub dataset: Dataset,
    pub run: GsmoteRun,
    pub minority_label: usize,
    pub majority_label: usize,
}

/// `S ∪ S_syn`: the original rows, untouched and in order, followed by the
/// synthetics labeled as the minority class and flagged synthetic.
pub fn augment<R: Rng + ?Sized>(
    s: &Dataset,
    params: &GsmoteParams,
    options: &GsmoteOptions,
    rng: &mut R,
) -> Result<Dataset> {
    Ok(augment_detailed(s, params, options, rng)?.dataset)
}

pub fn augment_detailed<R: Rng + ?Sized>(
    s: &Dataset,
    params: &GsmoteParams,
    options: &GsmoteOptions,
    rng: &mut R,
) -> Result<Augmented> {
    let split = split_by_class(s).stage("split")?;
    let run = gsmote_run(&split.minority, params, options, rng)?;
    let mut instances = s.instances().to_vec();
    instances.extend(run.batch.samples.iter().map(|syn| Instance {
        features: syn.point.clone(),
        label: split.minority_label,
        synthetic: true,
    }));
    Ok(Augmented {
        dataset: s.with_instances(instances)?,
        run,
        minority_label: split.minority_label,
        majority_label: split.majority_label,
    })
}
