//! Gaussian mixture models trained by expectation-maximization.
//!
//! The density is the standard multivariate normal mixture
//!
//! ```text
//! f(x) = sum_k c_k (2 pi)^(-n/2) |S_k|^(-1/2) exp(-1/2 (x - mu_k)^T S_k^-1 (x - mu_k))
//! ```
//!
//! Every covariance is floored by `eps * I` with `eps = 1e-6 * mean feature
//! variance`. The floor is exactly the M-step of the likelihood in which each
//! component density carries the factor `exp(-eps/2 * tr(S_k^-1))` (the
//! expected log-density of a point jittered by `N(0, eps I)`), so EM run on
//! that objective is monotone. [`EmReport::log_likelihood_trace`] records it.
//! Scoring through [`GaussianMixture::log_prob`] uses the plain mixture
//! density, which integrates to one.

use std::f64::consts::PI;
use std::path::Path;

use nalgebra::{Cholesky, DMatrix};
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sampling::SyntheticBatch;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CovarianceType {
    #[default]
    Full,
    /// Per-feature variances only; for high-dimensional sparse features.
    Diagonal,
}

#[derive(Debug, Clone)]
pub struct GaussianMixture {
    weights: Vec<f64>,
    means: Vec<Vec<f64>>,
    covariances: Vec<DMatrix<f64>>,
    covariance_type: CovarianceType,
    chol: Vec<DMatrix<f64>>,
    log_norm: Vec<f64>,
}

impl PartialEq for GaussianMixture {
    fn eq(&self, other: &Self) -> bool {
        self.weights == other.weights
            && self.means == other.means
            && self.covariances == other.covariances
            && self.covariance_type == other.covariance_type
    }
}

impl GaussianMixture {
    pub fn new(
        weights: Vec<f64>,
        means: Vec<Vec<f64>>,
        covariances: Vec<DMatrix<f64>>,
        covariance_type: CovarianceType,
    ) -> Result<Self> {
        let m = weights.len();
        if m == 0 {
            return Err(Error::InvalidParameter("mixture needs a component".into()));
        }
        if means.len() != m || covariances.len() != m {
            return Err(Error::DimensionMismatch {
                expected: m,
                found: means.len().min(covariances.len()),
            });
        }
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::InvalidParameter("weights must be nonnegative".into()));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidParameter(format!(
                "weights sum to {total}, not 1"
            )));
        }
        let n = means[0].len();
        let mut chol = Vec::with_capacity(m);
        let mut log_norm = Vec::with_capacity(m);
        for (k, (mu, cov)) in means.iter().zip(&covariances).enumerate() {
            if mu.len() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    found: mu.len(),
                });
            }
            if cov.nrows() != n || cov.ncols() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    found: cov.nrows(),
                });
            }
            let l = Cholesky::new(cov.clone())
                .ok_or(Error::NotPositiveDefinite(k))?
                .unpack();
            let log_det: f64 = 2.0 * (0..n).map(|i| l[(i, i)].ln()).sum::<f64>();
            if !log_det.is_finite() {
                return Err(Error::NotPositiveDefinite(k));
            }
            log_norm.push(-0.5 * (n as f64 * (2.0 * PI).ln() + log_det));
            chol.push(l);
        }
        Ok(GaussianMixture {
            weights,
            means,
            covariances,
            covariance_type,
            chol,
            log_norm,
        })
    }

    pub fn n_components(&self) -> usize {
        self.weights.len()
    }

    pub fn n_features(&self) -> usize {
        self.means[0].len()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn means(&self) -> &[Vec<f64>] {
        &self.means
    }

    pub fn covariances(&self) -> &[DMatrix<f64>] {
        &self.covariances
    }

    pub fn covariance_type(&self) -> CovarianceType {
        self.covariance_type
    }

    /// `log N(x; mu_k, S_k)` for one component.
    pub fn component_log_density(&self, k: usize, x: &[f64]) -> f64 {
        let mut z: Vec<f64> = x.iter().zip(&self.means[k]).map(|(a, b)| a - b).collect();
        forward_substitute(&self.chol[k], &mut z);
        self.log_norm[k] - 0.5 * z.iter().map(|v| v * v).sum::<f64>()
    }

    /// Log mixture density, computed with log-sum-exp.
    pub fn log_prob(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.n_features() {
            return Err(Error::DimensionMismatch {
                expected: self.n_features(),
                found: x.len(),
            });
        }
        Ok(self.log_prob_unchecked(x))
    }

    fn log_prob_unchecked(&self, x: &[f64]) -> f64 {
        let terms: Vec<f64> = (0..self.n_components())
            .filter(|&k| self.weights[k] > 0.0)
            .map(|k| self.weights[k].ln() + self.component_log_density(k, x))
            .collect();
        log_sum_exp(&terms)
    }

    pub fn log_prob_many<P: AsRef<[f64]> + Sync>(&self, points: &[P]) -> Result<Vec<f64>> {
        for p in points {
            if p.as_ref().len() != self.n_features() {
                return Err(Error::DimensionMismatch {
                    expected: self.n_features(),
                    found: p.as_ref().len(),
                });
            }
        }
        Ok(points
            .par_iter()
            .map(|p| self.log_prob_unchecked(p.as_ref()))
            .collect())
    }

    pub fn to_json(&self) -> String {
        let file = ModelFile {
            format: MODEL_FORMAT.into(),
            version: MODEL_VERSION,
            covariance_type: self.covariance_type,
            n_features: self.n_features(),
            weights: self.weights.clone(),
            means: self.means.clone(),
            covariances: self
                .covariances
                .iter()
                .map(|c| c.transpose().as_slice().to_vec())
                .collect(),
        };
        serde_json::to_string_pretty(&file).expect("mixture serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: ModelFile =
            serde_json::from_str(text).map_err(|e| Error::Format(e.to_string()))?;
        if file.format != MODEL_FORMAT || file.version != MODEL_VERSION {
            return Err(Error::Format(format!(
                "unsupported model {} v{}",
                file.format, file.version
            )));
        }
        let n = file.n_features;
        let covariances = file
            .covariances
            .into_iter()
            .map(|flat| {
                if flat.len() != n * n {
                    return Err(Error::DimensionMismatch {
                        expected: n * n,
                        found: flat.len(),
                    });
                }
                Ok(DMatrix::from_row_slice(n, n, &flat))
            })
            .collect::<Result<Vec<_>>>()?;
        GaussianMixture::new(file.weights, file.means, covariances, file.covariance_type)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_json() + "\n").map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        GaussianMixture::from_json(&text)
    }
}

const MODEL_FORMAT: &str = "gsmote-gmm";
const MODEL_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct ModelFile {
    format: String,
    version: u32,
    covariance_type: CovarianceType,
    n_features: usize,
    weights: Vec<f64>,
    means: Vec<Vec<f64>>,
    /// Row-major `n x n` per component.
    covariances: Vec<Vec<f64>>,
}

fn forward_substitute(l: &DMatrix<f64>, b: &mut [f64]) {
    for i in 0..b.len() {
        let mut s = b[i];
        for j in 0..i {
            s -= l[(i, j)] * b[j];
        }
        b[i] = s / l[(i, i)];
    }
}

pub fn log_sum_exp(terms: &[f64]) -> f64 {
    let max = terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return max;
    }
    max + terms.iter().map(|t| (t - max).exp()).sum::<f64>().ln()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmOptions {
    pub components: usize,
    pub max_iter: usize,
    /// Stop once the objective improves by less than this.
    pub tol: f64,
    pub covariance: CovarianceType,
}

impl Default for EmOptions {
    fn default() -> Self {
        EmOptions {
            components: 1,
            max_iter: 200,
            tol: 1e-6,
            covariance: CovarianceType::Full,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmReport {
    /// Objective after each iteration (see module docs).
    pub log_likelihood_trace: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    /// The covariance floor `eps`.
    pub regularization: f64,
}

/// Fits an `m`-component mixture by EM. Means are seeded k-means++ style,
/// covariances start at the global covariance and weights start uniform.
pub fn fit_em<P: AsRef<[f64]>, R: Rng + ?Sized>(
    data: &[P],
    options: &EmOptions,
    rng: &mut R,
) -> Result<(GaussianMixture, EmReport)> {
    let m = options.components;
    let n_pts = data.len();
    if m == 0 {
        return Err(Error::InvalidParameter("component count must be positive".into()));
    }
    if m > n_pts {
        return Err(Error::Infeasible(format!(
            "{m} components for {n_pts} points"
        )));
    }
    let n = data[0].as_ref().len();
    if n == 0 {
        return Err(Error::DimensionMismatch {
            expected: 1,
            found: 0,
        });
    }
    for p in data {
        let p = p.as_ref();
        if p.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: p.len(),
            });
        }
        if p.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("training data"));
        }
    }
    let x = DMatrix::from_fn(n_pts, n, |i, j| data[i].as_ref()[j]);

    let uniform = vec![1.0 / n_pts as f64; n_pts];
    let (_, global_scatter) = weighted_moments(&x, &uniform, 1.0);
    let mean_var = global_scatter.diagonal().mean();
    let eps = if mean_var > 0.0 { 1e-6 * mean_var } else { 1e-6 };

    let floor = |s: DMatrix<f64>| -> DMatrix<f64> {
        let mut c = match options.covariance {
            CovarianceType::Full => s,
            CovarianceType::Diagonal => DMatrix::from_diagonal(&s.diagonal()),
        };
        for i in 0..n {
            c[(i, i)] += eps;
        }
        // Symmetrize away accumulation noise.
        (&c + c.transpose()) * 0.5
    };

    let init_cov = floor(global_scatter);
    let mut model = GaussianMixture::new(
        vec![1.0 / m as f64; m],
        kmeans_pp_seeds(&x, m, rng),
        vec![init_cov; m],
        options.covariance,
    )?;

    let (mut resp, mut objective) = e_step(&model, &x, eps);
    let mut trace = Vec::new();
    let mut converged = false;
    for _ in 0..options.max_iter {
        let mut weights = Vec::with_capacity(m);
        let mut means = Vec::with_capacity(m);
        let mut covs = Vec::with_capacity(m);
        for k in 0..m {
            let r = resp.column(k);
            let nk: f64 = r.sum();
            weights.push(nk / n_pts as f64);
            if nk <= 10.0 * f64::EPSILON * n_pts as f64 {
                // Starved component: its share of the objective is ~0, so
                // keeping the old shape does not break monotonicity.
                means.push(model.means[k].clone());
                covs.push(model.covariances[k].clone());
                continue;
            }
            let w: Vec<f64> = r.iter().copied().collect();
            let (mu, scatter) = weighted_moments(&x, &w, nk);
            means.push(mu);
            covs.push(floor(scatter));
        }
        let total: f64 = weights.iter().sum();
        weights.iter_mut().for_each(|w| *w /= total);
        model = GaussianMixture::new(weights, means, covs, options.covariance)?;
        let (r, obj) = e_step(&model, &x, eps);
        trace.push(obj);
        let gain = obj - objective;
        resp = r;
        objective = obj;
        if gain < options.tol {
            converged = true;
            break;
        }
    }
    let report = EmReport {
        iterations: trace.len(),
        log_likelihood_trace: trace,
        converged,
        regularization: eps,
    };
    Ok((model, report))
}

/// Weighted mean and scatter `sum_i w_i (x_i - mu)(x_i - mu)^T / total`.
fn weighted_moments(x: &DMatrix<f64>, w: &[f64], total: f64) -> (Vec<f64>, DMatrix<f64>) {
    let (n_pts, n) = x.shape();
    let mut mu = vec![0.0; n];
    for i in 0..n_pts {
        for j in 0..n {
            mu[j] += w[i] * x[(i, j)];
        }
    }
    mu.iter_mut().for_each(|v| *v /= total);
    let mut s = DMatrix::zeros(n, n);
    let mut d = vec![0.0; n];
    for i in 0..n_pts {
        if w[i] == 0.0 {
            continue;
        }
        for j in 0..n {
            d[j] = x[(i, j)] - mu[j];
        }
        for a in 0..n {
            let wa = w[i] * d[a];
            for b in 0..=a {
                s[(a, b)] += wa * d[b];
            }
        }
    }
    for a in 0..n {
        for b in 0..=a {
            let v = s[(a, b)] / total;
            s[(a, b)] = v;
            s[(b, a)] = v;
        }
    }
    (mu, s)
}

/// Responsibilities and objective under the floored-likelihood densities.
fn e_step(model: &GaussianMixture, x: &DMatrix<f64>, eps: f64) -> (DMatrix<f64>, f64) {
    let (n_pts, n) = x.shape();
    let m = model.n_components();
    let tilt: Vec<f64> = (0..m)
        .map(|k| -0.5 * eps * inverse_trace(&model.chol[k]))
        .collect();
    let rows: Vec<(Vec<f64>, f64)> = (0..n_pts)
        .into_par_iter()
        .map(|i| {
            let xi: Vec<f64> = (0..n).map(|j| x[(i, j)]).collect();
            let logs: Vec<f64> = (0..m)
                .map(|k| {
                    if model.weights[k] > 0.0 {
                        model.weights[k].ln() + model.component_log_density(k, &xi) + tilt[k]
                    } else {
                        f64::NEG_INFINITY
                    }
                })
                .collect();
            let lse = log_sum_exp(&logs);
            (logs.iter().map(|l| (l - lse).exp()).collect(), lse)
        })
        .collect();
    let mut resp = DMatrix::zeros(n_pts, m);
    let mut total = 0.0;
    for (i, (r, lse)) in rows.into_iter().enumerate() {
        for k in 0..m {
            resp[(i, k)] = r[k];
        }
        total += lse;
    }
    (resp, total)
}

/// `tr(S^-1)` from the Cholesky factor: the squared Frobenius norm of `L^-1`.
fn inverse_trace(l: &DMatrix<f64>) -> f64 {
    let n = l.nrows();
    let mut total = 0.0;
    let mut e = vec![0.0; n];
    for c in 0..n {
        e.iter_mut().for_each(|v| *v = 0.0);
        e[c] = 1.0;
        forward_substitute(l, &mut e);
        total += e.iter().map(|v| v * v).sum::<f64>();
    }
    total
}

fn kmeans_pp_seeds<R: Rng + ?Sized>(x: &DMatrix<f64>, m: usize, rng: &mut R) -> Vec<Vec<f64>> {
    let (n_pts, n) = x.shape();
    let row = |i: usize| -> Vec<f64> { (0..n).map(|j| x[(i, j)]).collect() };
    let mut chosen = vec![rng.random_range(0..n_pts)];
    let mut d2: Vec<f64> = (0..n_pts)
        .map(|i| sq_dist(&row(i), &row(chosen[0])))
        .collect();
    while chosen.len() < m {
        let total: f64 = d2.iter().sum();
        let next = if total > 0.0 {
            let mut u = rng.random::<f64>() * total;
            let mut pick = n_pts - 1;
            for (i, &d) in d2.iter().enumerate() {
                if d > 0.0 && u < d {
                    pick = i;
                    break;
                }
                u -= d;
            }
            pick
        } else {
            rng.random_range(0..n_pts)
        };
        chosen.push(next);
        let c = row(next);
        for (i, d) in d2.iter_mut().enumerate() {
            *d = d.min(sq_dist(&row(i), &c));
        }
    }
    chosen.into_iter().map(row).collect()
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Draws `num` distinct indices of `points`, each step choosing among the
/// remaining points with probability proportional to mixture density.
pub fn sample_kernels<P: AsRef<[f64]> + Sync, R: Rng + ?Sized>(
    gmm: &GaussianMixture,
    points: &[P],
    num: usize,
    rng: &mut R,
) -> Result<Vec<usize>> {
    if num > points.len() {
        return Err(Error::Infeasible(format!(
            "{num} kernels requested from {} minority instances",
            points.len()
        )));
    }
    let lp = gmm.log_prob_many(points)?;
    if lp.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("kernel densities"));
    }
    let max = lp.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let weights: Vec<f64> = lp.iter().map(|v| (v - max).exp()).collect();

    let mut remaining: Vec<usize> = (0..points.len()).collect();
    let mut picked = Vec::with_capacity(num);
    for _ in 0..num {
        let total: f64 = remaining.iter().map(|&i| weights[i]).sum();
        let slot = if total > 0.0 {
            let mut u = rng.random::<f64>() * total;
            let mut slot = None;
            for (s, &i) in remaining.iter().enumerate() {
                if weights[i] > 0.0 {
                    slot = Some(s);
                    if u < weights[i] {
                        break;
                    }
                    u -= weights[i];
                }
            }
            slot.expect("positive total implies a positive weight")
        } else {
            rng.random_range(0..remaining.len())
        };
        picked.push(remaining.remove(slot));
    }
    Ok(picked)
}

/// Keeps the `k` candidates with the highest log-density, highest first;
/// equal scores keep the lower candidate index. Selected samples carry
/// their score in `log_prob`.
pub fn top_k_by_logprob(
    gmm: &GaussianMixture,
    candidates: &SyntheticBatch,
    k: usize,
) -> Result<SyntheticBatch> {
    if k > candidates.len() {
        return Err(Error::Infeasible(format!(
            "cannot keep {k} of {} candidates",
            candidates.len()
        )));
    }
    let points: Vec<&[f64]> = candidates.points().collect();
    let lp = gmm.log_prob_many(&points)?;
    let mut order: Vec<usize> = (0..candidates.len()).collect();
    order.sort_by(|&a, &b| lp[b].total_cmp(&lp[a]).then(a.cmp(&b)));
    let samples = order[..k]
        .iter()
        .map(|&i| {
            let mut s = candidates.samples[i].clone();
            s.log_prob = Some(lp[i]);
            s
        })
        .collect();
    Ok(SyntheticBatch { samples })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded;
    use crate::sampling::Synthetic;

    fn standard_1d() -> GaussianMixture {
        GaussianMixture::new(
            vec![1.0],
            vec![vec![0.0]],
            vec![DMatrix::from_element(1, 1, 1.0)],
            CovarianceType::Full,
        )
        .unwrap()
    }

    #[test]
    fn standard_normal_peak() {
        let g = standard_1d();
        let expected = -0.5 * (2.0 * PI).ln();
        assert!((g.log_prob(&[0.0]).unwrap() - expected).abs() < 1e-12);
        assert!((expected - -0.918939).abs() < 1e-6);
        assert!(g.log_prob(&[0.0, 1.0]).is_err());
    }

    #[test]
    fn symmetric_mixture_midpoint() {
        let g = GaussianMixture::new(
            vec![0.5, 0.5],
            vec![vec![-2.0, 0.0], vec![2.0, 0.0]],
            vec![DMatrix::identity(2, 2), DMatrix::identity(2, 2)],
            CovarianceType::Full,
        )
        .unwrap();
        let a = g.component_log_density(0, &[0.0, 0.0]);
        let b = g.component_log_density(1, &[0.0, 0.0]);
        assert_eq!(a, b);
    }

    #[test]
    fn rejects_bad_models() {
        assert!(GaussianMixture::new(
            vec![0.7, 0.7],
            vec![vec![0.0], vec![1.0]],
            vec![DMatrix::identity(1, 1); 2],
            CovarianceType::Full
        )
        .is_err());
        assert!(matches!(
            GaussianMixture::new(
                vec![1.0],
                vec![vec![0.0, 0.0]],
                vec![DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0])],
                CovarianceType::Full
            ),
            Err(Error::NotPositiveDefinite(0))
        ));
    }

    #[test]
    fn fit_rejects_bad_component_counts() {
        let data = vec![vec![0.0], vec![1.0]];
        let opts = |m| EmOptions {
            components: m,
            ..EmOptions::default()
        };
        assert!(fit_em(&data, &opts(0), &mut seeded(0)).is_err());
        assert!(matches!(
            fit_em(&data, &opts(3), &mut seeded(0)),
            Err(Error::Infeasible(_))
        ));
        assert!(fit_em(&[vec![f64::NAN], vec![1.0]], &opts(1), &mut seeded(0)).is_err());
    }

    #[test]
    fn identical_points_fit_with_floor() {
        let data = vec![vec![2.0, 2.0]; 5];
        let (g, report) = fit_em(
            &data,
            &EmOptions {
                components: 2,
                ..EmOptions::default()
            },
            &mut seeded(1),
        )
        .unwrap();
        assert_eq!(report.regularization, 1e-6);
        assert!(g.log_prob(&[2.0, 2.0]).unwrap().is_finite());
    }

    #[test]
    fn persistence_round_trip_is_exact() {
        let data: Vec<Vec<f64>> = (0..40)
            .map(|i| vec![(i as f64 * 0.37).sin(), (i as f64 * 1.3).cos() * 3.0])
            .collect();
        let (g, _) = fit_em(
            &data,
            &EmOptions {
                components: 2,
                ..EmOptions::default()
            },
            &mut seeded(4),
        )
        .unwrap();
        let back = GaussianMixture::from_json(&g.to_json()).unwrap();
        assert_eq!(back, g);
        assert!(GaussianMixture::from_json("{\"format\":\"x\"}").is_err());
    }

    #[test]
    fn exhaustive_kernel_sampling() {
        let g = standard_1d();
        let pts: Vec<Vec<f64>> = (0..6).map(|i| vec![i as f64]).collect();
        let mut idx = sample_kernels(&g, &pts, 6, &mut seeded(0)).unwrap();
        idx.sort_unstable();
        assert_eq!(idx, (0..6).collect::<Vec<_>>());
        assert!(sample_kernels(&g, &pts, 7, &mut seeded(0)).is_err());
        let a = sample_kernels(&g, &pts, 3, &mut seeded(8)).unwrap();
        let b = sample_kernels(&g, &pts, 3, &mut seeded(8)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn kernel_sampling_handles_underflowed_weights() {
        let g = standard_1d();
        // exp(log_prob - max) underflows to zero for the far points.
        let pts = vec![vec![0.0], vec![60.0], vec![-60.0]];
        let mut idx = sample_kernels(&g, &pts, 3, &mut seeded(2)).unwrap();
        assert_eq!(idx[0], 0);
        idx.sort_unstable();
        assert_eq!(idx, vec![0, 1, 2]);
    }

    fn batch(xs: &[f64]) -> SyntheticBatch {
        SyntheticBatch {
            samples: xs
                .iter()
                .map(|&x| Synthetic {
                    point: vec![x],
                    kernel: 0,
                    neighbor: 0,
                    bound: 1.0,
                    degenerate: false,
                    log_prob: None,
                })
                .collect(),
        }
    }

    #[test]
    fn top_k_selection() {
        let g = standard_1d();
        let b = batch(&[3.0, -0.5, 0.5, 0.1, -2.0]);
        let top1 = top_k_by_logprob(&g, &b, 1).unwrap();
        assert_eq!(top1.samples[0].point, vec![0.1]);
        let top3 = top_k_by_logprob(&g, &b, 3).unwrap();
        // -0.5 and 0.5 tie; the lower candidate index comes first.
        let xs: Vec<f64> = top3.points().map(|p| p[0]).collect();
        assert_eq!(xs, vec![0.1, -0.5, 0.5]);
        assert_eq!(top_k_by_logprob(&g, &b, 5).unwrap().len(), 5);
        assert!(top_k_by_logprob(&g, &b, 6).is_err());
    }
}
