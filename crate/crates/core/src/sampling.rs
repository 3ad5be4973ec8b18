//! Exact k-NN, segment (SMOTE) and hypersphere (RSMOTE) synthesis, and the
//! random over/under-sampling baselines.
//!
//! All samplers are pure functions of their input and random source.

use rand::Rng;
use rand_distr::{Distribution, Open01, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{Error, Result};

/// The `k` nearest other instances of one query, closest first.
#[derive(Debug, Clone, PartialEq)]
pub struct Neighborhood {
    pub center_index: usize,
    pub neighbor_indices: Vec<usize>,
    pub radii: Vec<f64>,
}

/// One generated point and where it came from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Synthetic {
    pub point: Vec<f64>,
    /// Index of the kernel instance in the source set.
    pub kernel: usize,
    /// Neighbor that bounded the draw (equal to `kernel` for ROS).
    pub neighbor: usize,
    /// Kernel-to-neighbor distance used as the sampling bound.
    pub bound: f64,
    /// Set when the bound was zero and the kernel itself was emitted.
    pub degenerate: bool,
    /// Mixture log-density, filled in by GMM filtering.
    pub log_prob: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SyntheticBatch {
    pub samples: Vec<Synthetic>,
}

impl SyntheticBatch {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn points(&self) -> impl Iterator<Item = &[f64]> {
        self.samples.iter().map(|s| s.point.as_slice())
    }

    pub fn degenerate_count(&self) -> usize {
        self.samples.iter().filter(|s| s.degenerate).count()
    }
}

/// How the radial coordinate inside the sampling ball is drawn.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RadialMode {
    /// Distance uniform on `(0, r)`.
    #[default]
    Uniform,
    /// Point uniform over the ball's volume: distance `r * u^(1/n)`.
    Volume,
}

pub fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// k nearest neighbors of `dataset[query_index]` among the other instances.
pub fn knn(dataset: &Dataset, query_index: usize, k: usize) -> Result<Neighborhood> {
    knn_points(&dataset.points(), query_index, k)
}

/// Brute-force Euclidean k-NN over `points`, excluding the query itself.
/// Distance ties go to the lower index.
pub fn knn_points<P: AsRef<[f64]>>(
    points: &[P],
    query_index: usize,
    k: usize,
) -> Result<Neighborhood> {
    if query_index >= points.len() {
        return Err(Error::InvalidParameter(format!(
            "query index {query_index} out of range for {} points",
            points.len()
        )));
    }
    if k == 0 || k >= points.len() {
        return Err(Error::InvalidParameter(format!(
            "k = {k} must lie in [1, {})",
            points.len()
        )));
    }
    let q = points[query_index].as_ref();
    let mut cand: Vec<(f64, usize)> = points
        .iter()
        .enumerate()
        .filter(|&(i, _)| i != query_index)
        .map(|(i, p)| (euclidean(q, p.as_ref()), i))
        .collect();
    let by_dist = |a: &(f64, usize), b: &(f64, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
    if k < cand.len() {
        cand.select_nth_unstable_by(k - 1, by_dist);
        cand.truncate(k);
    }
    cand.sort_unstable_by(by_dist);
    Ok(Neighborhood {
        center_index: query_index,
        neighbor_indices: cand.iter().map(|c| c.1).collect(),
        radii: cand.iter().map(|c| c.0).collect(),
    })
}

/// `x_i + (x_k - x_i) * e`, exact at both endpoints.
pub fn smote_interpolate(x_i: &[f64], x_k: &[f64], e: f64) -> Result<Vec<f64>> {
    if x_i.len() != x_k.len() {
        return Err(Error::DimensionMismatch {
            expected: x_i.len(),
            found: x_k.len(),
        });
    }
    if !(0.0..=1.0).contains(&e) {
        return Err(Error::InvalidParameter(format!(
            "interpolation weight {e} outside [0, 1]"
        )));
    }
    // Evaluate from the nearer endpoint so e = 0 and e = 1 are bit-exact.
    Ok(x_i
        .iter()
        .zip(x_k)
        .map(|(&a, &b)| {
            if e <= 0.5 {
                a + (b - a) * e
            } else {
                b - (b - a) * (1.0 - e)
            }
        })
        .collect())
}

fn check_min_size(n: usize, k: usize) -> Result<()> {
    if k == 0 {
        return Err(Error::InvalidParameter("k must be positive".into()));
    }
    if n <= k {
        return Err(Error::ClassTooSmall {
            class: "minority".into(),
            size: n,
            needed: k + 1,
        });
    }
    Ok(())
}

fn all_neighborhoods(points: &[&[f64]], k: usize) -> Result<Vec<Neighborhood>> {
    (0..points.len()).map(|i| knn_points(points, i, k)).collect()
}

/// Classic SMOTE: each synthetic lies on the segment between a uniformly
/// chosen minority kernel and one of its `k` minority neighbors.
pub fn smote<R: Rng + ?Sized>(
    s_min: &Dataset,
    amount: usize,
    k: usize,
    rng: &mut R,
) -> Result<SyntheticBatch> {
    let points = s_min.points();
    check_min_size(points.len(), k)?;
    if amount == 0 {
        return Ok(SyntheticBatch::default());
    }
    let hoods = all_neighborhoods(&points, k)?;
    let mut samples = Vec::with_capacity(amount);
    for _ in 0..amount {
        let i = rng.random_range(0..points.len());
        let slot = rng.random_range(0..k);
        let nn = hoods[i].neighbor_indices[slot];
        let e: f64 = rng.random();
        samples.push(Synthetic {
            point: smote_interpolate(points[i], points[nn], e)?,
            kernel: i,
            neighbor: nn,
            bound: hoods[i].radii[slot],
            degenerate: hoods[i].radii[slot] == 0.0,
            log_prob: None,
        });
    }
    Ok(SyntheticBatch { samples })
}

const MAX_SPHERE_ATTEMPTS: usize = 64;

/// Draws `p` with `0 < |p - center| < r`: isotropic direction (normalized
/// standard normal) and radial distance per `mode`. Draws that round onto
/// the boundary are rejected and redrawn.
pub fn sample_hypersphere<R: Rng + ?Sized>(
    center: &[f64],
    r: f64,
    mode: RadialMode,
    rng: &mut R,
) -> Result<Vec<f64>> {
    if !(r.is_finite() && r > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "sampling radius must be positive and finite, got {r}"
        )));
    }
    let n = center.len();
    if n == 0 {
        return Err(Error::DimensionMismatch {
            expected: 1,
            found: 0,
        });
    }
    let mut dir = vec![0.0; n];
    for _ in 0..MAX_SPHERE_ATTEMPTS {
        let mut norm2: f64 = 0.0;
        for d in dir.iter_mut() {
            *d = StandardNormal.sample(rng);
            norm2 += *d * *d;
        }
        if norm2 == 0.0 {
            continue;
        }
        let u: f64 = Open01.sample(rng);
        let dist = match mode {
            RadialMode::Uniform => u * r,
            RadialMode::Volume => r * u.powf(1.0 / n as f64),
        };
        let scale = dist / norm2.sqrt();
        let p: Vec<f64> = center.iter().zip(&dir).map(|(c, d)| c + d * scale).collect();
        let actual = euclidean(&p, center);
        if actual > 0.0 && actual < r {
            return Ok(p);
        }
    }
    Err(Error::InvalidParameter(format!(
        "radius {r} is too small to resolve around the kernel"
    )))
}

/// One hypersphere draw around `kernel` bounded by the distance to
/// `neighbor`; a zero bound yields the kernel itself, flagged degenerate.
pub(crate) fn sphere_synthetic<R: Rng + ?Sized>(
    kernel_point: &[f64],
    kernel: usize,
    neighbor: usize,
    bound: f64,
    mode: RadialMode,
    rng: &mut R,
) -> Result<Synthetic> {
    let (point, degenerate) = if bound > 0.0 {
        match sample_hypersphere(kernel_point, bound, mode, rng) {
            Ok(p) => (p, false),
            Err(_) => (kernel_point.to_vec(), true),
        }
    } else {
        (kernel_point.to_vec(), true)
    };
    Ok(Synthetic {
        point,
        kernel,
        neighbor,
        bound,
        degenerate,
        log_prob: None,
    })
}

/// RSMOTE: kernel and neighbor chosen as in [`smote`], then a point drawn
/// in the open ball of radius `|x_k - x_i|` around the kernel.
pub fn rsmote<R: Rng + ?Sized>(
    s_min: &Dataset,
    amount: usize,
    k: usize,
    mode: RadialMode,
    rng: &mut R,
) -> Result<SyntheticBatch> {
    let points = s_min.points();
    check_min_size(points.len(), k)?;
    if amount == 0 {
        return Ok(SyntheticBatch::default());
    }
    let hoods = all_neighborhoods(&points, k)?;
    let mut samples = Vec::with_capacity(amount);
    for _ in 0..amount {
        let i = rng.random_range(0..points.len());
        let slot = rng.random_range(0..k);
        let h = &hoods[i];
        samples.push(sphere_synthetic(
            points[i],
            i,
            h.neighbor_indices[slot],
            h.radii[slot],
            mode,
            rng,
        )?);
    }
    Ok(SyntheticBatch { samples })
}

/// ROS: copies of uniformly chosen minority instances, with replacement.
pub fn random_oversample<R: Rng + ?Sized>(
    s_min: &Dataset,
    amount: usize,
    rng: &mut R,
) -> Result<SyntheticBatch> {
    let inst = s_min.instances();
    let samples = (0..amount)
        .map(|_| {
            let i = rng.random_range(0..inst.len());
            Synthetic {
                point: inst[i].features.clone(),
                kernel: i,
                neighbor: i,
                bound: 0.0,
                degenerate: false,
                log_prob: None,
            }
        })
        .collect();
    Ok(SyntheticBatch { samples })
}

/// RUS: a uniform subset of `target_size` instances, in source order.
pub fn random_undersample<R: Rng + ?Sized>(
    s_maj: &Dataset,
    target_size: usize,
    rng: &mut R,
) -> Result<Dataset> {
    if target_size == 0 || target_size > s_maj.len() {
        return Err(Error::InvalidParameter(format!(
            "undersampling target {target_size} must lie in [1, {}]",
            s_maj.len()
        )));
    }
    let mut keep = rand::seq::index::sample(rng, s_maj.len(), target_size).into_vec();
    keep.sort_unstable();
    s_maj.subset(&keep)
}
