//! Statistical and replay oracles that need more data than a unit test.

use std::collections::BTreeSet;

use gsmote::classify::{elm_train, f_beta, gnb_train, Classifier, ElmConfig};
use gsmote::dataset::{imbalance_degree, split_by_class, stratified_split, Dataset};
use gsmote::gmm::{fit_em, sample_kernels, EmOptions};
use gsmote::optimize::{
    de_crossover, default_bounds, tune_gsmote, DeConfig, GsmoteFitness,
};
use gsmote::oversample::{augment, GsmoteOptions, GsmoteParams};
use gsmote::rng::seeded;
use gsmote::sampling::{euclidean, random_undersample, sample_hypersphere, smote, RadialMode};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

fn gaussian(rng: &mut impl Rng, mean: &[f64], sd: f64) -> Vec<f64> {
    mean.iter()
        .map(|m| {
            let z: f64 = StandardNormal.sample(rng);
            m + sd * z
        })
        .collect()
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

#[test]
fn em_recovers_two_separated_blobs() {
    let mut mean_err = Vec::new();
    let mut weight_err = Vec::new();
    for seed in 0..20 {
        let mut rng = seeded(seed);
        let mut data = Vec::new();
        for _ in 0..500 {
            data.push(gaussian(&mut rng, &[0.0, 0.0], 1.0));
            data.push(gaussian(&mut rng, &[10.0, 10.0], 1.0));
        }
        let opts = EmOptions { components: 2, ..EmOptions::default() };
        let (gmm, _) = fit_em(&data, &opts, &mut rng).unwrap();
        let (lo, hi) = if gmm.means()[0][0] < gmm.means()[1][0] { (0, 1) } else { (1, 0) };
        let e = euclidean(&gmm.means()[lo], &[0.0, 0.0]).max(euclidean(&gmm.means()[hi], &[10.0, 10.0]));
        mean_err.push(e);
        weight_err.push((gmm.weights()[0] - 0.5).abs());
    }
    assert!(median(mean_err) < 0.3);
    assert!(median(weight_err) < 0.05);
}

#[test]
fn hypersphere_directions_are_isotropic() {
    let mut rng = seeded(11);
    let center = [1.0, -2.0, 0.5];
    let mut sum = [0.0; 3];
    let n = 100_000;
    for _ in 0..n {
        let p = sample_hypersphere(&center, 1.0, RadialMode::Uniform, &mut rng).unwrap();
        let d = euclidean(&p, &center);
        assert!(d > 0.0 && d < 1.0);
        for j in 0..3 {
            sum[j] += (p[j] - center[j]) / d;
        }
    }
    let norm = sum.iter().map(|s| (s / n as f64).powi(2)).sum::<f64>().sqrt();
    assert!(norm < 0.02, "mean direction norm {norm}");
}

#[test]
fn far_outlier_is_rarely_a_kernel() {
    let mut points = vec![vec![0.0, 0.0]; 99];
    points.push(vec![50.0, 50.0]);
    let opts = EmOptions { components: 1, ..EmOptions::default() };
    let mut hits = 0;
    for seed in 0..200 {
        let mut rng = seeded(seed);
        let (gmm, _) = fit_em(&points, &opts, &mut rng).unwrap();
        let picked = sample_kernels(&gmm, &points, 50, &mut rng).unwrap();
        assert_eq!(picked.iter().collect::<BTreeSet<_>>().len(), 50);
        if picked.contains(&99) {
            hits += 1;
        }
    }
    assert!(hits < 20, "outlier picked in {hits}/200 runs");
}

#[test]
fn smote_points_stay_on_their_segment() {
    let mut rng = seeded(3);
    let pts: Vec<Vec<f64>> = (0..30).map(|_| gaussian(&mut rng, &[0.0; 4], 2.0)).collect();
    let d = Dataset::from_points(pts, vec![0; 30]).unwrap();
    let batch = smote(&d, 2000, 5, &mut rng).unwrap();
    let points = d.points();
    for s in &batch.samples {
        let to_kernel = euclidean(&s.point, points[s.kernel]);
        assert!(to_kernel <= s.bound * (1.0 + 1e-12));
        let via = to_kernel + euclidean(&s.point, points[s.neighbor]);
        assert!((via - s.bound).abs() <= 1e-9 * s.bound.max(1.0));
    }
}

#[test]
fn undersampling_never_repeats() {
    let mut rng = seeded(5);
    let pts: Vec<Vec<f64>> = (0..80).map(|i| vec![i as f64]).collect();
    let d = Dataset::from_points(pts, vec![0; 80]).unwrap();
    for target in [1, 17, 40, 80] {
        let out = random_undersample(&d, target, &mut rng).unwrap();
        let seen: BTreeSet<u64> = out.points().iter().map(|p| p[0] as u64).collect();
        assert_eq!(seen.len(), target);
    }
}

fn two_blobs(seed: u64, n: usize, sd: f64) -> Dataset {
    let mut rng = seeded(seed);
    let mut pts = Vec::new();
    let mut labels = Vec::new();
    for i in 0..n {
        let label = i % 2;
        let c = if label == 0 { [-5.0, -5.0] } else { [5.0, 5.0] };
        pts.push(gaussian(&mut rng, &c, sd));
        labels.push(label);
    }
    Dataset::from_points(pts, labels).unwrap()
}

#[test]
fn elm_fits_separable_blobs() {
    for seed in 0..10 {
        let d = two_blobs(seed, 200, 0.5);
        let cfg = ElmConfig { hidden: 50, ..ElmConfig::default() };
        let model = elm_train(&d, &cfg, &mut seeded(seed + 100)).unwrap();
        let pred = model.predict_all(&d);
        let hits = pred.iter().zip(d.labels()).filter(|(p, t)| **p == *t).count();
        assert!(hits as f64 / d.len() as f64 >= 0.99, "seed {seed}");
    }
}

#[test]
fn gnb_matches_brute_force_posterior() {
    let train = two_blobs(7, 60, 3.0);
    let model = gnb_train(&train).unwrap();
    let probe = two_blobs(8, 200, 4.0);
    for inst in probe.instances() {
        let x = &inst.features;
        let mut best = (f64::NEG_INFINITY, usize::MAX);
        for (c, class) in model.classes.iter().enumerate() {
            let mut lp = model.log_priors[c];
            for (j, xj) in x.iter().enumerate() {
                let v = model.variances[c][j];
                let d = xj - model.means[c][j];
                lp += -0.5 * (2.0 * std::f64::consts::PI * v).ln() - d * d / (2.0 * v);
            }
            if lp > best.0 {
                best = (lp, *class);
            }
        }
        assert_eq!(model.predict(x), best.1);
    }
}

#[test]
fn crossover_replays_its_random_draws() {
    let mut rng = seeded(21);
    for _ in 0..200 {
        let dims = rng.random_range(1..8);
        let cr: f64 = rng.random();
        let target: Vec<f64> = (0..dims).map(|j| j as f64).collect();
        let donor: Vec<f64> = (0..dims).map(|j| -(j as f64) - 1.0).collect();
        let mut replay = rng.clone();
        let trial = de_crossover(&target, &donor, cr, &mut rng);
        let j_rand = replay.random_range(0..dims);
        for j in 0..dims {
            let u: f64 = replay.random();
            let expected = if j == j_rand || u <= cr { donor[j] } else { target[j] };
            assert_eq!(trial[j], expected);
        }
    }
}

#[test]
fn stratified_split_of_97_13() {
    let pts: Vec<Vec<f64>> = (0..110).map(|i| vec![i as f64]).collect();
    let labels: Vec<usize> = (0..110).map(|i| usize::from(i >= 97)).collect();
    let d = Dataset::from_points(pts, labels).unwrap();
    for seed in 0..20 {
        let (train, test) = stratified_split(&d, 0.25, &mut seeded(seed)).unwrap();
        let counts = test.class_counts();
        assert!((counts[&0] as f64 - 24.25).abs() <= 1.0);
        assert!((counts[&1] as f64 - 3.25).abs() <= 1.0);
        assert_eq!(train.len() + test.len(), 110);
    }
}

#[test]
fn f_beta_tends_to_recall() {
    for (p, r) in [(0.9, 0.3), (0.2, 0.7), (0.5, 0.5), (1.0, 0.01)] {
        assert!((f_beta(p, r, 100.0) - r).abs() < 1e-3);
    }
}

#[test]
fn blood_like_counts_balance_exactly() {
    let mut rng = seeded(9);
    let mut pts = Vec::new();
    let mut labels = Vec::new();
    for i in 0..748 {
        let label = usize::from(i >= 570);
        pts.push(gaussian(&mut rng, &[label as f64, 0.0, 0.0, 0.0], 1.0));
        labels.push(label);
    }
    let d = Dataset::from_points(pts, labels).unwrap();
    assert!((imbalance_degree(&d).unwrap() - 3.202).abs() < 1e-3);
    let params = GsmoteParams { components: 2, kernels: 178, per_kernel: 4, select: 392, neighbors: 5 };
    let out = augment(&d, &params, &GsmoteOptions::default(), &mut rng).unwrap();
    assert_eq!(out.len(), 748 + 392);
    assert_eq!(imbalance_degree(&out).unwrap(), 1.0);
}

fn overlapping(seed: u64) -> Dataset {
    let mut rng = seeded(seed);
    let mut pts = Vec::new();
    let mut labels = Vec::new();
    for i in 0..330 {
        let label = usize::from(i >= 300);
        let c = if label == 1 { [1.2, 1.2] } else { [0.0, 0.0] };
        pts.push(gaussian(&mut rng, &c, 1.0));
        labels.push(label);
    }
    Dataset::from_points(pts, labels).unwrap()
}

#[test]
fn zero_selection_scores_the_baseline() {
    let d = overlapping(1);
    let (train, eval) = stratified_split(&d, 0.3, &mut seeded(2)).unwrap();
    let fit = GsmoteFitness::new(train, eval, ElmConfig::default(), GsmoteOptions::default(), 5, 3).unwrap();
    let k0 = fit.evaluate(&[2.0, 10.0, 3.0, 0.0]);
    assert_eq!(k0, fit.baseline());
    for genes in [[1.0, 5.0, 2.0, 10.0], [9.0, 99.0, 40.0, 1e6], [-3.0, -3.0, -3.0, -3.0]] {
        let v = fit.evaluate(&genes);
        assert!((0.0..=1.0).contains(&v));
    }
}

#[test]
fn tuning_never_loses_to_the_default() {
    let d = overlapping(4);
    let (train, eval) = stratified_split(&d, 0.3, &mut seeded(5)).unwrap();
    let split = split_by_class(&train).unwrap();
    let (lower, upper) = default_bounds(split.minority.len(), split.majority.len());
    let default = GsmoteParams::balancing(split.minority.len(), split.majority.len());
    let fit = GsmoteFitness::new(train, eval, ElmConfig::default(), GsmoteOptions::default(), default.neighbors, 6).unwrap();
    let config = DeConfig {
        generations: 4,
        population: 6,
        mutation_factor: 0.8,
        crossover_prob: 0.9,
        lower,
        upper,
    };
    let default = fit.decode(&gsmote::optimize::encode_params(&default));
    let result = tune_gsmote(&fit, &config, &[default], &mut seeded(7), |_| {}).unwrap();
    assert!(result.best_fitness >= fit.evaluate_params(&default));
    assert_eq!(result.history.len(), 4);
}
