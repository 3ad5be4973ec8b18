//! Binary classification metrics and the two in-house classifiers.
//!
//! Metrics whose denominator is zero evaluate to 0 instead of failing; the
//! report lists such cases in `warnings` so degenerate classifiers can still
//! be scored inside a tuning loop.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub tp: usize,
    pub tn: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
}

impl ConfusionMatrix {
    pub fn total(&self) -> usize {
        self.tp + self.tn + self.fp + self.fn_
    }

    /// The same counts seen from the other class.
    pub fn flipped(&self) -> Self {
        ConfusionMatrix {
            tp: self.tn,
            tn: self.tp,
            fp: self.fn_,
            fn_: self.fp,
        }
    }
}

/// Tallies predictions against truth with `positive` as the positive class.
/// At most two distinct labels may appear across both lists.
pub fn confusion(predictions: &[usize], truth: &[usize], positive: usize) -> Result<ConfusionMatrix> {
    if predictions.len() != truth.len() {
        return Err(Error::DimensionMismatch {
            expected: truth.len(),
            found: predictions.len(),
        });
    }
    if truth.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let mut seen: Vec<usize> = predictions.iter().chain(truth).copied().collect();
    seen.sort_unstable();
    seen.dedup();
    if seen.len() > 2 || (seen.len() == 2 && !seen.contains(&positive)) {
        return Err(Error::Format(format!(
            "labels {seen:?} do not form a binary set with positive class {positive}"
        )));
    }
    let mut cm = ConfusionMatrix::default();
    for (&p, &t) in predictions.iter().zip(truth) {
        match (p == positive, t == positive) {
            (true, true) => cm.tp += 1,
            (false, false) => cm.tn += 1,
            (true, false) => cm.fp += 1,
            (false, true) => cm.fn_ += 1,
        }
    }
    Ok(cm)
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// `(TP + TN) / (TP + TN + FP + FN)`.
pub fn accuracy(cm: &ConfusionMatrix) -> f64 {
    ratio(cm.tp + cm.tn, cm.total())
}

/// `TP / (TP + FP)`; 0 when nothing was predicted positive.
pub fn precision(cm: &ConfusionMatrix) -> f64 {
    ratio(cm.tp, cm.tp + cm.fp)
}

/// `TP / (TP + FN)`; 0 when no positives exist.
pub fn recall(cm: &ConfusionMatrix) -> f64 {
    ratio(cm.tp, cm.tp + cm.fn_)
}

/// `F_beta = (1 + b^2) P R / (b^2 P + R)`; 0 when `P = R = 0`.
pub fn f_beta(p: f64, r: f64, beta: f64) -> f64 {
    let b2 = beta * beta;
    let den = b2 * p + r;
    if den == 0.0 {
        0.0
    } else {
        (1.0 + b2) * p * r / den
    }
}

pub fn f_measure(cm: &ConfusionMatrix, beta: f64) -> f64 {
    f_beta(precision(cm), recall(cm), beta)
}

/// Class-size weighted average of two per-class F scores.
pub fn weighted_f(f1: f64, f2: f64, n1: usize, n2: usize) -> Result<f64> {
    let total = n1 + n2;
    if total == 0 {
        return Err(Error::InvalidParameter(
            "weighted F needs at least one instance".into(),
        ));
    }
    Ok(n1 as f64 / total as f64 * f1 + n2 as f64 / total as f64 * f2)
}

/// Everything reported for one set of binary predictions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    /// Per-class F_beta keyed by class name, each class taken as positive.
    pub f_measure: BTreeMap<String, f64>,
    pub weighted_f: f64,
    pub confusion: ConfusionMatrix,
    pub positive_class: String,
    pub beta: f64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

impl MetricsReport {
    /// Scores predictions. Labels index into `names`; class counts for the
    /// weighted F come from `truth`.
    pub fn compute(
        predictions: &[usize],
        truth: &[usize],
        positive: usize,
        names: &[String],
        beta: f64,
    ) -> Result<Self> {
        let cm = confusion(predictions, truth, positive)?;
        let negative = predictions
            .iter()
            .chain(truth)
            .copied()
            .find(|&l| l != positive)
            .unwrap_or(if positive == 0 { 1 } else { 0 });
        let name = |l: usize| names.get(l).cloned().unwrap_or_else(|| l.to_string());
        let neg_cm = cm.flipped();

        let mut warnings = Vec::new();
        for (label, c) in [(positive, &cm), (negative, &neg_cm)] {
            if c.tp + c.fp == 0 {
                warnings.push(format!("precision of `{}` undefined, reported as 0", name(label)));
            }
            if c.tp + c.fn_ == 0 {
                warnings.push(format!("recall of `{}` undefined, reported as 0", name(label)));
            }
        }
        for w in &warnings {
            log::warn!("{w}");
        }
        let f_pos = f_measure(&cm, beta);
        let f_neg = f_measure(&neg_cm, beta);
        let n_pos = cm.tp + cm.fn_;
        let n_neg = cm.tn + cm.fp;
        Ok(MetricsReport {
            accuracy: accuracy(&cm),
            precision: precision(&cm),
            recall: recall(&cm),
            f_measure: BTreeMap::from([(name(positive), f_pos), (name(negative), f_neg)]),
            weighted_f: weighted_f(f_pos, f_neg, n_pos, n_neg)?,
            confusion: cm,
            positive_class: name(positive),
            beta,
            warnings,
        })
    }

    /// The same report with every ratio scaled to 0-100.
    pub fn as_percent(&self) -> Self {
        let mut r = self.clone();
        r.accuracy *= 100.0;
        r.precision *= 100.0;
        r.recall *= 100.0;
        r.weighted_f *= 100.0;
        r.f_measure.values_mut().for_each(|v| *v *= 100.0);
        r
    }
}

/// Anything that maps a feature vector to a class id.
pub trait Classifier {
    fn predict(&self, x: &[f64]) -> usize;

    fn predict_all(&self, d: &Dataset) -> Vec<usize> {
        d.instances().iter().map(|i| self.predict(&i.features)).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ElmConfig {
    pub hidden: usize,
    pub ridge: f64,
}

impl Default for ElmConfig {
    fn default() -> Self {
        ElmConfig {
            hidden: 64,
            ridge: 1e-3,
        }
    }
}

/// Single-hidden-layer network with random frozen input weights and sigmoid
/// units; only the output layer is fitted, by ridge least squares.
#[derive(Debug, Clone, PartialEq)]
pub struct ElmModel {
    /// `hidden x n`.
    pub input_weights: DMatrix<f64>,
    pub biases: DVector<f64>,
    /// `hidden x classes`.
    pub output_weights: DMatrix<f64>,
    /// Class id for each output column, ascending.
    pub classes: Vec<usize>,
}

fn sigmoid(v: f64) -> f64 {
    1.0 / (1.0 + (-v).exp())
}

impl ElmModel {
    fn hidden_layer(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        let mut h = x * self.input_weights.transpose();
        for mut row in h.row_iter_mut() {
            for (v, b) in row.iter_mut().zip(self.biases.iter()) {
                *v = sigmoid(*v + b);
            }
        }
        h
    }

    pub fn scores(&self, x: &[f64]) -> Vec<f64> {
        let h = self.hidden_layer(&DMatrix::from_row_slice(1, x.len(), x));
        (h * &self.output_weights).iter().copied().collect()
    }
}

impl Classifier for ElmModel {
    fn predict(&self, x: &[f64]) -> usize {
        argmax(&self.scores(x)).map_or(self.classes[0], |i| self.classes[i])
    }
}

fn argmax(v: &[f64]) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (i, &s) in v.iter().enumerate() {
        if best.is_none_or(|b| s > v[b]) {
            best = Some(i);
        }
    }
    best
}

/// Trains an ELM: input weights and biases uniform on (-1, 1), then
/// `(H^T H + ridge I) beta = H^T Y` against one-hot targets.
pub fn elm_train<R: Rng + ?Sized>(train: &Dataset, config: &ElmConfig, rng: &mut R) -> Result<ElmModel> {
    if config.hidden == 0 {
        return Err(Error::InvalidParameter("ELM needs at least one hidden unit".into()));
    }
    if !(config.ridge > 0.0 && config.ridge.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "ridge must be positive, got {}",
            config.ridge
        )));
    }
    let n = train.n_features();
    let classes: Vec<usize> = train.class_ids().into_iter().collect();
    let input_weights = DMatrix::from_fn(config.hidden, n, |_, _| rng.random_range(-1.0..1.0));
    let biases = DVector::from_fn(config.hidden, |_, _| rng.random_range(-1.0..1.0));
    let mut model = ElmModel {
        input_weights,
        biases,
        output_weights: DMatrix::zeros(config.hidden, classes.len()),
        classes,
    };

    let inst = train.instances();
    let x = DMatrix::from_fn(inst.len(), n, |i, j| inst[i].features[j]);
    let h = model.hidden_layer(&x);
    let y = DMatrix::from_fn(inst.len(), model.classes.len(), |i, c| {
        f64::from(u8::from(inst[i].label == model.classes[c]))
    });
    let ht = h.transpose();
    let mut gram = &ht * &h;
    for i in 0..config.hidden {
        gram[(i, i)] += config.ridge;
    }
    let rhs = &ht * y;
    let chol = gram
        .cholesky()
        .ok_or_else(|| Error::InvalidParameter("ELM normal equations are singular".into()))?;
    model.output_weights = chol.solve(&rhs);
    if model.output_weights.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("ELM output weights"));
    }
    Ok(model)
}

pub fn elm_predict(model: &ElmModel, x: &[f64]) -> usize {
    model.predict(x)
}

/// Gaussian naive Bayes with a variance floor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaussianNb {
    pub classes: Vec<usize>,
    pub log_priors: Vec<f64>,
    pub means: Vec<Vec<f64>>,
    pub variances: Vec<Vec<f64>>,
}

pub const GNB_VARIANCE_FLOOR: f64 = 1e-9;

impl GaussianNb {
    /// Unnormalized log posterior per class, in `classes` order.
    pub fn log_posteriors(&self, x: &[f64]) -> Vec<f64> {
        (0..self.classes.len())
            .map(|c| {
                self.log_priors[c]
                    + x.iter()
                        .zip(&self.means[c])
                        .zip(&self.variances[c])
                        .map(|((v, m), s2)| {
                            -0.5 * ((2.0 * std::f64::consts::PI * s2).ln() + (v - m).powi(2) / s2)
                        })
                        .sum::<f64>()
            })
            .collect()
    }
}

impl Classifier for GaussianNb {
    fn predict(&self, x: &[f64]) -> usize {
        argmax(&self.log_posteriors(x)).map_or(self.classes[0], |i| self.classes[i])
    }
}

pub fn gnb_train(train: &Dataset) -> Result<GaussianNb> {
    let n = train.n_features();
    let counts = train.class_counts();
    let total = train.len() as f64;
    let mut model = GaussianNb {
        classes: counts.keys().copied().collect(),
        log_priors: counts.values().map(|&c| (c as f64 / total).ln()).collect(),
        means: vec![vec![0.0; n]; counts.len()],
        variances: vec![vec![0.0; n]; counts.len()],
    };
    let slot = |label: usize| model.classes.binary_search(&label).unwrap();
    for inst in train.instances() {
        let c = slot(inst.label);
        for (m, v) in model.means[c].iter_mut().zip(&inst.features) {
            *m += v;
        }
    }
    for (c, &cnt) in counts.values().enumerate() {
        model.means[c].iter_mut().for_each(|m| *m /= cnt as f64);
    }
    for inst in train.instances() {
        let c = slot(inst.label);
        for j in 0..n {
            model.variances[c][j] += (inst.features[j] - model.means[c][j]).powi(2);
        }
    }
    for (c, &cnt) in counts.values().enumerate() {
        model.variances[c]
            .iter_mut()
            .for_each(|s| *s = (*s / cnt as f64).max(GNB_VARIANCE_FLOOR));
    }
    Ok(model)
}

pub fn gnb_predict(model: &GaussianNb, x: &[f64]) -> usize {
    model.predict(x)
}
