use std::path::{Path, PathBuf};
use std::process::Command;

use gsmote::classify::{elm_train, Classifier, ElmConfig, MetricsReport};
use gsmote::dataset::{load_csv, LabelColumn};
use gsmote::rng::{seeded, substream};
use gsmote_cli::{augment, evaluate, tune, vectorize, AugmentConfig, EvaluateConfig, TuneConfig, VectorizeConfig};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use tempfile::TempDir;

fn bin(args: &[&str]) -> (i32, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_gsmote"))
        .args(args)
        .output()
        .expect("binary runs");
    (
        out.status.code().expect("exit code"),
        String::from_utf8_lossy(&out.stderr).into_owned(),
    )
}

fn s(p: &Path) -> &str {
    p.to_str().expect("utf-8 path")
}

/// Two Gaussian classes in 2-D, `maj` rows of `a` then `min` rows of `b`.
fn write_blobs(dir: &Path, name: &str, maj: usize, min: usize, seed: u64) -> PathBuf {
    let mut rng = seeded(seed);
    let mut text = String::from("f1,f2,class\n");
    for i in 0..maj + min {
        let (c, label) = if i < maj { (0.0, "a") } else { (2.5, "b") };
        let z: [f64; 2] = [StandardNormal.sample(&mut rng), StandardNormal.sample(&mut rng)];
        text.push_str(&format!("{},{},{label}\n", c + z[0], c + z[1]));
    }
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path
}

fn json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn exit_codes() {
    let dir = TempDir::new().unwrap();
    let input = write_blobs(dir.path(), "in.csv", 60, 20, 1);
    let out = dir.path().join("out.csv");

    assert_eq!(bin(&["--help"]).0, 0);
    assert_eq!(bin(&["augment", "-i", s(&input), "-o", s(&out), "--seed", "1"]).0, 0);
    assert_eq!(bin(&["augment", "--bogus"]).0, 1);
    assert_eq!(bin(&["augment", "-i", s(&input)]).0, 1);
    let missing = dir.path().join("missing.csv");
    assert_eq!(bin(&["augment", "-i", s(&missing), "-o", s(&out)]).0, 2);
    let (code, err) = bin(&["augment", "-i", s(&input), "-o", s(&out), "--kernels", "21"]);
    assert_eq!(code, 3, "{err}");
    assert_eq!(bin(&["augment", "-i", s(&input), "-o", s(&out), "-k", "1000", "--kernels", "2", "--per-kernel", "2"]).0, 3);
}

#[test]
fn blood_like_data_balances() {
    let dir = TempDir::new().unwrap();
    let input = write_blobs(dir.path(), "blood.csv", 570, 178, 2);
    let out = dir.path().join("out.csv");
    let summary = augment::execute(AugmentConfig {
        input: Some(input),
        output: Some(out.clone()),
        seed: Some(7),
        ..AugmentConfig::default()
    })
    .unwrap();
    assert_eq!(summary.imbalance_degree_before, 3.202);
    assert_eq!(summary.params.select, 392);
    assert_eq!(summary.imbalance_degree_after, 1.0);
    assert_eq!(summary.class_counts_after["b"], 570);
    let written = load_csv(&out, &LabelColumn::Last).unwrap();
    assert_eq!(written.len(), 570 + 178 + 392);
    let j = json(&PathBuf::from(format!("{}.summary.json", out.display())));
    assert_eq!(j["imbalance_degree_after"], 1.0);
}

#[test]
fn zero_select_copies_input() {
    let dir = TempDir::new().unwrap();
    let input = write_blobs(dir.path(), "in.csv", 50, 10, 3);
    let out = dir.path().join("out.csv");
    let summary = augment::execute(AugmentConfig {
        input: Some(input.clone()),
        output: Some(out.clone()),
        seed: Some(1),
        select: Some(0),
        ..AugmentConfig::default()
    })
    .unwrap();
    assert_eq!(summary.synthetic, 0);
    let a = load_csv(&input, &LabelColumn::Last).unwrap();
    let b = load_csv(&out, &LabelColumn::Last).unwrap();
    assert_eq!(a.points(), b.points());
    assert_eq!(a.labels(), b.labels());
}

#[test]
fn scaled_augment_keeps_originals_and_provenance() {
    let dir = TempDir::new().unwrap();
    let input = write_blobs(dir.path(), "in.csv", 40, 12, 4);
    let out = dir.path().join("out.csv");
    let summary = augment::execute(AugmentConfig {
        input: Some(input.clone()),
        output: Some(out.clone()),
        seed: Some(3),
        scale: true,
        provenance: true,
        ..AugmentConfig::default()
    })
    .unwrap();
    let a = load_csv(&input, &LabelColumn::Last).unwrap();
    let b = load_csv(&out, &LabelColumn::Last).unwrap();
    assert_eq!(&b.points()[..a.len()], &a.points()[..]);
    let prov = std::fs::read_to_string(format!("{}.provenance.csv", out.display())).unwrap();
    assert_eq!(prov.lines().count(), 1 + summary.synthetic);
    let minority_rows = 40..52;
    for line in prov.lines().skip(1) {
        let f: Vec<&str> = line.split(',').collect();
        assert!(minority_rows.contains(&f[1].parse::<usize>().unwrap()));
        assert!(minority_rows.contains(&f[2].parse::<usize>().unwrap()));
    }
}

#[test]
fn perfect_predictions_score_one() {
    let dir = TempDir::new().unwrap();
    let preds = dir.path().join("p.csv");
    std::fs::write(&preds, "truth,predicted\nx,x\ny,y\nx,x\nx,x\n").unwrap();
    let out = dir.path().join("m.json");
    let eval = evaluate::execute(EvaluateConfig {
        predictions: Some(preds.clone()),
        output: Some(out.clone()),
        ..EvaluateConfig::default()
    })
    .unwrap();
    assert_eq!(eval.positive_class, "y");
    assert_eq!(eval.reports[0].metrics.accuracy, 1.0);
    assert_eq!(eval.reports[0].metrics.weighted_f, 1.0);

    let (code, _) = bin(&["evaluate", "--predictions", s(&preds), "--percent", "-o", s(&out)]);
    assert_eq!(code, 0);
    assert_eq!(json(&out)["reports"][0]["metrics"]["accuracy"], 100.0);
}

#[test]
fn comparison_table_has_two_rows_per_measure() {
    let dir = TempDir::new().unwrap();
    let p1 = dir.path().join("p1.csv");
    let p2 = dir.path().join("p2.csv");
    std::fs::write(&p1, "truth,predicted\nx,x\ny,x\nx,x\ny,y\n").unwrap();
    std::fs::write(&p2, "truth,predicted\nx,x\ny,y\nx,y\ny,y\n").unwrap();
    let eval = evaluate::execute(EvaluateConfig {
        predictions: Some(p1),
        compare_predictions: Some(p2),
        output: Some(dir.path().join("m.json")),
        ..EvaluateConfig::default()
    })
    .unwrap();
    let measures: std::collections::BTreeSet<&str> = eval.table.iter().map(|r| r.measure.as_str()).collect();
    assert_eq!(eval.table.len(), 2 * measures.len());
    for m in &measures {
        let rows: Vec<_> = eval.table.iter().filter(|r| r.measure == *m).collect();
        assert_eq!(rows.iter().map(|r| r.dataset.as_str()).collect::<Vec<_>>(), ["original", "augmented"]);
    }
    assert!(measures.contains("f_measure:x") && measures.contains("f_measure:y"));
}

#[test]
fn classifier_mode_matches_library() {
    let dir = TempDir::new().unwrap();
    let train = write_blobs(dir.path(), "train.csv", 90, 20, 5);
    let test = write_blobs(dir.path(), "test.csv", 45, 10, 6);
    let eval = evaluate::execute(EvaluateConfig {
        train: Some(train.clone()),
        test: Some(test.clone()),
        output: Some(dir.path().join("m.json")),
        seed: Some(11),
        ..EvaluateConfig::default()
    })
    .unwrap();
    let tr = load_csv(&train, &LabelColumn::Last).unwrap();
    let te = load_csv(&test, &LabelColumn::Last).unwrap();
    let model = elm_train(&tr, &ElmConfig::default(), &mut substream(11, &[0xe1])).unwrap();
    let names = tr.label_names().to_vec();
    let direct = MetricsReport::compute(&model.predict_all(&te), &te.labels(), 1, &names, 1.0).unwrap();
    assert_eq!(eval.positive_class, "b");
    assert_eq!(eval.reports[0].metrics, direct);
}

#[test]
fn vectorize_golden_corpus() {
    let dir = TempDir::new().unwrap();
    let docs = dir.path().join("docs.txt");
    std::fs::write(&docs, "a b\na c\na\n").unwrap();
    let out = dir.path().join("f.csv");
    let vocab = vectorize::execute(VectorizeConfig {
        input: Some(docs),
        output: Some(out.clone()),
        no_stopwords: true,
        ..VectorizeConfig::default()
    })
    .unwrap();
    assert_eq!(vocab, ["a", "b", "c"]);
    let d = load_csv(&out, &LabelColumn::Last).unwrap();
    let v = 0.5 * 3f64.ln();
    assert_eq!(d.points(), vec![&[0.0, v, 0.0][..], &[0.0, 0.0, v][..], &[0.0, 0.0, 0.0][..]]);
    assert_eq!(d.label_names(), ["unlabeled"]);
}

#[test]
fn vectorize_labeled_csv_feeds_augment() {
    let dir = TempDir::new().unwrap();
    let docs = dir.path().join("bugs.csv");
    let mut rng = seeded(8);
    let words = ["crash", "parser", "save", "freeze", "window", "font", "render", "leak", "memory", "login"];
    let mut text = String::from("text,label\n");
    for i in 0..40 {
        let doc: Vec<&str> = (0..6).map(|_| words[rng.random_range(0..words.len())]).collect();
        text.push_str(&format!("{},{}\n", doc.join(" "), if i < 32 { "normal" } else { "severe" }));
    }
    std::fs::write(&docs, text).unwrap();
    let features = dir.path().join("features.csv");
    let (code, err) = bin(&["vectorize", "-i", s(&docs), "-o", s(&features)]);
    assert_eq!(code, 0, "{err}");
    let out = dir.path().join("aug.csv");
    let (code, err) = bin(&["augment", "-i", s(&features), "-o", s(&out), "--seed", "2"]);
    assert_eq!(code, 0, "{err}");
    let aug = load_csv(&out, &LabelColumn::Last).unwrap();
    assert_eq!(aug.len(), 64);
}

#[test]
fn vectorize_empty_corpus_fails() {
    let dir = TempDir::new().unwrap();
    let docs = dir.path().join("docs.txt");
    std::fs::write(&docs, "the and\nof a\n").unwrap();
    let (code, err) = bin(&["vectorize", "-i", s(&docs), "-o", s(&dir.path().join("f.csv"))]);
    assert_eq!(code, 2);
    assert!(err.contains("vectorize"), "{err}");
}

#[test]
fn vocabulary_order_is_stable() {
    let dir = TempDir::new().unwrap();
    let docs = dir.path().join("docs.txt");
    std::fs::write(&docs, "zeta alpha\nmiddle zeta\nalpha beta\n").unwrap();
    let run = |name: &str| {
        vectorize::execute(VectorizeConfig {
            input: Some(docs.clone()),
            output: Some(dir.path().join(name)),
            ..VectorizeConfig::default()
        })
        .unwrap()
    };
    let v = run("one.csv");
    assert_eq!(v, ["alpha", "beta", "middl", "zeta"]);
    assert_eq!(v, run("two.csv"));
}

#[test]
fn tune_smoke_run() {
    let dir = TempDir::new().unwrap();
    let input = write_blobs(dir.path(), "in.csv", 80, 20, 9);
    let out = dir.path().join("tune");
    let best = tune::execute(TuneConfig {
        input: Some(input),
        output: Some(out.clone()),
        seed: Some(4),
        generations: 1,
        population: 4,
        elm_hidden: 16,
        ..TuneConfig::default()
    })
    .unwrap();
    let log = std::fs::read_to_string(out.join("tune_log.jsonl")).unwrap();
    assert_eq!(log.lines().count(), 1);
    assert!(best.fitness >= best.default_fitness);
    assert!((0.0..=1.0).contains(&best.fitness));
    assert_eq!(json(&out.join("best_params.json"))["seed"], 4);
    assert!(out.join("tune.config.toml").exists());
}

#[test]
fn fitness_on_test_needs_test_file() {
    let dir = TempDir::new().unwrap();
    let input = write_blobs(dir.path(), "in.csv", 40, 10, 10);
    let out = dir.path().join("tune");
    let (code, _) = bin(&["tune", "-i", s(&input), "-o", s(&out), "--fitness-on-test"]);
    assert_eq!(code, 1);
}

#[test]
fn config_file_is_overridden_by_flags() {
    let dir = TempDir::new().unwrap();
    let input = write_blobs(dir.path(), "in.csv", 50, 10, 12);
    let out = dir.path().join("out.csv");
    let cfg = dir.path().join("cfg.toml");
    std::fs::write(
        &cfg,
        format!("input = {:?}\noutput = {:?}\nseed = 5\nselect = 10\n", s(&input), s(&out)),
    )
    .unwrap();
    assert_eq!(bin(&["augment", "--config", s(&cfg), "-k", "20"]).0, 0);
    let summary = json(&PathBuf::from(format!("{}.summary.json", out.display())));
    assert_eq!(summary["synthetic"], 20);
    assert_eq!(summary["seed"], 5);

    std::fs::write(&cfg, "unknown_key = 1\n").unwrap();
    assert_eq!(bin(&["augment", "--config", s(&cfg)]).0, 1);
}
