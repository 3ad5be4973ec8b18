//! Labeled instances, CSV ingestion and class bookkeeping.
//!
//! Labels are remapped to dense ids `0..C` in order of first occurrence; the
//! raw label text is kept in [`Dataset::label_names`] for reporting and for
//! writing the data back out.

use std::collections::{BTreeMap, BTreeSet};
use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Name of the optional boolean column marking synthetic rows.
pub const SYNTHETIC_COLUMN: &str = "synthetic";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Instance {
    pub features: Vec<f64>,
    pub label: usize,
    #[serde(default)]
    pub synthetic: bool,
}

impl Instance {
    pub fn new(features: Vec<f64>, label: usize) -> Self {
        Instance {
            features,
            label,
            synthetic: false,
        }
    }
}

/// A non-empty, immutable table of labeled instances sharing one schema.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    instances: Vec<Instance>,
    feature_names: Vec<String>,
    label_name: String,
    label_names: Vec<String>,
}

impl Dataset {
    pub fn new(
        feature_names: Vec<String>,
        label_name: impl Into<String>,
        label_names: Vec<String>,
        instances: Vec<Instance>,
    ) -> Result<Self> {
        if instances.is_empty() {
            return Err(Error::EmptyDataset);
        }
        if feature_names.is_empty() {
            return Err(Error::Format(
                "a dataset needs at least one feature".into(),
            ));
        }
        let n = feature_names.len();
        for inst in &instances {
            if inst.features.len() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    found: inst.features.len(),
                });
            }
            if inst.features.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite("instance features"));
            }
            if inst.label >= label_names.len() {
                return Err(Error::Format(format!(
                    "label id {} has no name (known: {})",
                    inst.label,
                    label_names.len()
                )));
            }
        }
        Ok(Dataset {
            instances,
            feature_names,
            label_name: label_name.into(),
            label_names,
        })
    }

    /// Builds a dataset with generated column names `x0, x1, ...` and label
    /// names equal to the decimal label ids.
    pub fn from_points(points: Vec<Vec<f64>>, labels: Vec<usize>) -> Result<Self> {
        if points.len() != labels.len() {
            return Err(Error::DimensionMismatch {
                expected: points.len(),
                found: labels.len(),
            });
        }
        let n = points.first().map(|p| p.len()).unwrap_or(0);
        let n_labels = labels.iter().max().map_or(0, |&m| m + 1);
        let instances = points
            .into_iter()
            .zip(labels)
            .map(|(f, l)| Instance::new(f, l))
            .collect();
        Dataset::new(
            (0..n).map(|i| format!("x{i}")).collect(),
            "label",
            (0..n_labels).map(|i| i.to_string()).collect(),
            instances,
        )
    }

    /// A dataset with the same schema holding `instances`.
    pub fn with_instances(&self, instances: Vec<Instance>) -> Result<Self> {
        Dataset::new(
            self.feature_names.clone(),
            self.label_name.clone(),
            self.label_names.clone(),
            instances,
        )
    }

    pub fn subset(&self, indices: &[usize]) -> Result<Self> {
        self.with_instances(
            indices
                .iter()
                .map(|&i| self.instances[i].clone())
                .collect(),
        )
    }

    pub fn len(&self) -> usize {
        self.instances.len()
    }

    /// Always false; kept for API symmetry with collections.
    pub fn is_empty(&self) -> bool {
        self.instances.is_empty()
    }

    pub fn n_features(&self) -> usize {
        self.feature_names.len()
    }

    pub fn instances(&self) -> &[Instance] {
        &self.instances
    }

    pub fn into_instances(self) -> Vec<Instance> {
        self.instances
    }

    pub fn points(&self) -> Vec<&[f64]> {
        self.instances.iter().map(|i| i.features.as_slice()).collect()
    }

    pub fn labels(&self) -> Vec<usize> {
        self.instances.iter().map(|i| i.label).collect()
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn label_name(&self) -> &str {
        &self.label_name
    }

    pub fn label_names(&self) -> &[String] {
        &self.label_names
    }

    pub fn label_text(&self, id: usize) -> &str {
        &self.label_names[id]
    }

    pub fn label_id(&self, text: &str) -> Option<usize> {
        self.label_names.iter().position(|l| l == text)
    }

    /// Distinct labels actually present.
    pub fn class_ids(&self) -> BTreeSet<usize> {
        self.instances.iter().map(|i| i.label).collect()
    }

    pub fn class_counts(&self) -> BTreeMap<usize, usize> {
        let mut counts = BTreeMap::new();
        for inst in &self.instances {
            *counts.entry(inst.label).or_insert(0) += 1;
        }
        counts
    }

    pub fn synthetic_count(&self) -> usize {
        self.instances.iter().filter(|i| i.synthetic).count()
    }

    /// Re-indexes labels against `names`, which must contain every label
    /// name of this dataset. Used to line up files loaded separately.
    pub fn relabel(&self, names: &[String]) -> Result<Dataset> {
        let map = self
            .label_names
            .iter()
            .map(|n| {
                names.iter().position(|m| m == n).ok_or_else(|| {
                    Error::Format(format!("label `{n}` is not among {names:?}"))
                })
            })
            .collect::<Result<Vec<usize>>>()?;
        let instances = self
            .instances
            .iter()
            .map(|i| Instance {
                label: map[i.label],
                ..i.clone()
            })
            .collect();
        Dataset::new(
            self.feature_names.clone(),
            self.label_name.clone(),
            names.to_vec(),
            instances,
        )
    }
}

/// Label names of all `sets` in order of first appearance.
pub fn merged_label_names(sets: &[&Dataset]) -> Vec<String> {
    let mut out: Vec<String> = Vec::new();
    for d in sets {
        for n in &d.label_names {
            if !out.contains(n) {
                out.push(n.clone());
            }
        }
    }
    out
}

/// Which CSV column holds the label.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum LabelColumn {
    /// The last column, ignoring a trailing `synthetic` column.
    #[default]
    Last,
    Index(usize),
    Name(String),
}

impl FromStr for LabelColumn {
    type Err = std::convert::Infallible;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        Ok(match s {
            "" | "last" => LabelColumn::Last,
            _ => match s.parse::<usize>() {
                Ok(i) => LabelColumn::Index(i),
                Err(_) => LabelColumn::Name(s.to_string()),
            },
        })
    }
}

pub fn load_csv(path: impl AsRef<Path>, label_column: &LabelColumn) -> Result<Dataset> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_csv(file, label_column)
}

/// Parses a headed CSV table. Row numbers in errors count data rows from 1.
pub fn read_csv<R: Read>(reader: R, label_column: &LabelColumn) -> Result<Dataset> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let header: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    let synthetic_col = header.iter().position(|h| h == SYNTHETIC_COLUMN);

    let label_idx = match label_column {
        LabelColumn::Last => (0..header.len())
            .rev()
            .find(|&i| Some(i) != synthetic_col)
            .ok_or_else(|| Error::UnknownColumn("last".into()))?,
        LabelColumn::Index(i) if *i < header.len() => *i,
        LabelColumn::Index(i) => return Err(Error::UnknownColumn(i.to_string())),
        LabelColumn::Name(name) => header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::UnknownColumn(name.clone()))?,
    };
    let synthetic_col = synthetic_col.filter(|&s| s != label_idx);
    let feature_cols: Vec<usize> = (0..header.len())
        .filter(|&i| i != label_idx && Some(i) != synthetic_col)
        .collect();

    let mut label_names: Vec<String> = Vec::new();
    let mut instances = Vec::new();
    for (r, record) in rdr.records().enumerate() {
        let row = r + 1;
        let record = record?;
        if record.len() != header.len() {
            return Err(Error::RaggedRow {
                row,
                expected: header.len(),
                found: record.len(),
            });
        }
        let mut features = Vec::with_capacity(feature_cols.len());
        for &c in &feature_cols {
            let cell = &record[c];
            if cell.is_empty() {
                return Err(Error::MissingValue {
                    row,
                    column: header[c].clone(),
                });
            }
            match cell.parse::<f64>() {
                Ok(v) if v.is_finite() => features.push(v),
                _ => {
                    return Err(Error::NonNumeric {
                        row,
                        column: header[c].clone(),
                        value: cell.to_string(),
                    })
                }
            }
        }
        let raw_label = &record[label_idx];
        if raw_label.is_empty() {
            return Err(Error::MissingValue {
                row,
                column: header[label_idx].clone(),
            });
        }
        let label = match label_names.iter().position(|l| l == raw_label) {
            Some(id) => id,
            None => {
                label_names.push(raw_label.to_string());
                label_names.len() - 1
            }
        };
        let synthetic = match synthetic_col {
            Some(c) => parse_bool(&record[c]).ok_or_else(|| Error::NonNumeric {
                row,
                column: SYNTHETIC_COLUMN.into(),
                value: record[c].to_string(),
            })?,
            None => false,
        };
        instances.push(Instance {
            features,
            label,
            synthetic,
        });
    }
    if instances.len() < 2 {
        return Err(Error::TooFewRows {
            needed: 2,
            found: instances.len(),
        });
    }
    Dataset::new(
        feature_cols.iter().map(|&c| header[c].clone()).collect(),
        header[label_idx].clone(),
        label_names,
        instances,
    )
}

fn parse_bool(s: &str) -> Option<bool> {
    match s {
        "true" | "1" => Some(true),
        "false" | "0" => Some(false),
        _ => None,
    }
}

/// Shortest text that parses back to exactly `v`.
pub fn format_f64(v: f64) -> String {
    let a = v.abs();
    if a != 0.0 && !(1e-5..1e16).contains(&a) {
        format!("{v:e}")
    } else {
        format!("{v}")
    }
}

pub fn write_csv(d: &Dataset, path: impl AsRef<Path>, synthetic_column: bool) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    write_csv_to(d, file, synthetic_column)
}

/// Writes features, then the label column, then (optionally) `synthetic`.
pub fn write_csv_to<W: Write>(d: &Dataset, writer: W, synthetic_column: bool) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let mut header: Vec<&str> = d.feature_names.iter().map(String::as_str).collect();
    header.push(&d.label_name);
    if synthetic_column {
        header.push(SYNTHETIC_COLUMN);
    }
    w.write_record(&header)?;
    for inst in &d.instances {
        let mut row: Vec<String> = inst.features.iter().map(|&v| format_f64(v)).collect();
        row.push(d.label_names[inst.label].clone());
        if synthetic_column {
            row.push(inst.synthetic.to_string());
        }
        w.write_record(&row)?;
    }
    w.flush().map_err(|e| Error::io("<csv writer>", e))?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClassSplit {
    pub minority: Dataset,
    pub majority: Dataset,
    pub minority_label: usize,
    pub majority_label: usize,
}

fn binary_counts(d: &Dataset) -> Result<[(usize, usize); 2]> {
    let counts = d.class_counts();
    if counts.len() != 2 {
        return Err(Error::NotBinary(counts.len()));
    }
    let mut it = counts.into_iter();
    Ok([it.next().unwrap(), it.next().unwrap()])
}

/// Minority is the class with strictly fewer instances; on a tie the smaller
/// label id is the minority.
pub fn split_by_class(d: &Dataset) -> Result<ClassSplit> {
    let [(a, na), (b, nb)] = binary_counts(d)?;
    let (min_label, maj_label) = if nb < na { (b, a) } else { (a, b) };
    let (min_idx, maj_idx): (Vec<usize>, Vec<usize>) =
        (0..d.len()).partition(|&i| d.instances[i].label == min_label);
    Ok(ClassSplit {
        minority: d.subset(&min_idx)?,
        majority: d.subset(&maj_idx)?,
        minority_label: min_label,
        majority_label: maj_label,
    })
}

/// `|majority| / |minority|` of a binary dataset.
pub fn imbalance_degree(d: &Dataset) -> Result<f64> {
    let [(_, na), (_, nb)] = binary_counts(d)?;
    imbalance_degree_counts(na, nb)
}

pub fn imbalance_degree_counts(a: usize, b: usize) -> Result<f64> {
    let (lo, hi) = (a.min(b), a.max(b));
    if lo == 0 {
        return Err(Error::EmptyDataset);
    }
    Ok(hi as f64 / lo as f64)
}

/// Rounds to three decimals for reporting.
pub fn round3(x: f64) -> f64 {
    (x * 1000.0).round() / 1000.0
}

/// Per-class shuffled split. Each class contributes `round(n_c * fraction)`
/// test instances, clamped so both sides keep at least one instance. Both
/// halves preserve the source row order.
pub fn stratified_split<R: Rng + ?Sized>(
    d: &Dataset,
    test_fraction: f64,
    rng: &mut R,
) -> Result<(Dataset, Dataset)> {
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "test fraction must lie in (0, 1), got {test_fraction}"
        )));
    }
    let mut by_class: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (i, inst) in d.instances.iter().enumerate() {
        by_class.entry(inst.label).or_default().push(i);
    }
    let mut in_test = vec![false; d.len()];
    for (label, members) in &by_class {
        let n = members.len();
        if n < 2 {
            return Err(Error::ClassTooSmall {
                class: d.label_names[*label].clone(),
                size: n,
                needed: 2,
            });
        }
        let n_test = ((n as f64 * test_fraction).round() as usize).clamp(1, n - 1);
        for pick in rand::seq::index::sample(rng, n, n_test) {
            in_test[members[pick]] = true;
        }
    }
    let (test_idx, train_idx): (Vec<usize>, Vec<usize>) = (0..d.len()).partition(|&i| in_test[i]);
    Ok((d.subset(&train_idx)?, d.subset(&test_idx)?))
}

/// Opt-in min-max scaling to `[0, 1]` per feature. Constant features map to 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MinMaxScaler {
    pub min: Vec<f64>,
    pub max: Vec<f64>,
}

impl MinMaxScaler {
    pub fn fit(d: &Dataset) -> Self {
        let n = d.n_features();
        let mut min = vec![f64::INFINITY; n];
        let mut max = vec![f64::NEG_INFINITY; n];
        for inst in d.instances() {
            for (j, &v) in inst.features.iter().enumerate() {
                min[j] = min[j].min(v);
                max[j] = max[j].max(v);
            }
        }
        MinMaxScaler { min, max }
    }

    pub fn transform_point(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .enumerate()
            .map(|(j, &v)| {
                let span = self.max[j] - self.min[j];
                if span > 0.0 {
                    (v - self.min[j]) / span
                } else {
                    0.0
                }
            })
            .collect()
    }

    pub fn inverse_point(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .enumerate()
            .map(|(j, &v)| self.min[j] + v * (self.max[j] - self.min[j]))
            .collect()
    }

    pub fn transform(&self, d: &Dataset) -> Result<Dataset> {
        self.map(d, |x| self.transform_point(x))
    }

    pub fn inverse(&self, d: &Dataset) -> Result<Dataset> {
        self.map(d, |x| self.inverse_point(x))
    }

    fn map(&self, d: &Dataset, f: impl Fn(&[f64]) -> Vec<f64>) -> Result<Dataset> {
        d.with_instances(
            d.instances()
                .iter()
                .map(|inst| Instance {
                    features: f(&inst.features),
                    ..inst.clone()
                })
                .collect(),
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded;

    fn parse(text: &str) -> Result<Dataset> {
        read_csv(text.as_bytes(), &LabelColumn::Last)
    }

    fn labeled(counts: &[(usize, usize)]) -> Dataset {
        let mut pts = Vec::new();
        let mut labels = Vec::new();
        for &(label, n) in counts {
            for i in 0..n {
                pts.push(vec![i as f64, label as f64]);
                labels.push(label);
            }
        }
        Dataset::from_points(pts, labels).unwrap()
    }

    #[test]
    fn parses_small_table() {
        let d = parse("a,b,label\n0,0,0\n1,1,1\n2,2,1\n").unwrap();
        assert_eq!(d.n_features(), 2);
        assert_eq!(d.len(), 3);
        let counts = d.class_counts();
        assert_eq!(counts[&0], 1);
        assert_eq!(counts[&1], 2);
        assert_eq!(d.feature_names(), ["a", "b"]);
        assert_eq!(d.label_name(), "label");
    }

    #[test]
    fn labels_are_dense_by_first_occurrence() {
        let d = parse("x,y\n1,pos\n2,neg\n3,pos\n").unwrap();
        assert_eq!(d.labels(), vec![0, 1, 0]);
        assert_eq!(d.label_names(), ["pos", "neg"]);
    }

    #[test]
    fn label_column_by_name_and_index() {
        let text = "cls,a,b\nx,1,2\ny,3,4\n";
        let by_name = read_csv(text.as_bytes(), &LabelColumn::Name("cls".into())).unwrap();
        let by_index = read_csv(text.as_bytes(), &LabelColumn::Index(0)).unwrap();
        assert_eq!(by_name, by_index);
        assert_eq!(by_name.instances()[1].features, vec![3.0, 4.0]);
        assert!(matches!(
            read_csv(text.as_bytes(), &LabelColumn::Name("nope".into())),
            Err(Error::UnknownColumn(_))
        ));
    }

    #[test]
    fn non_numeric_cell_names_row_and_column() {
        let err = parse("a,b,label\n0,0,0\n1,x,0\n").unwrap_err();
        match err {
            Error::NonNumeric { row, column, value } => {
                assert_eq!(row, 2);
                assert_eq!(column, "b");
                assert_eq!(value, "x");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn distinct_errors_for_bad_input() {
        assert!(matches!(
            parse("a,b,label\n0,0,0\n1,1\n"),
            Err(Error::RaggedRow { row: 2, .. })
        ));
        assert!(matches!(
            parse("a,b,label\n0,,0\n1,1,1\n"),
            Err(Error::MissingValue { row: 1, .. })
        ));
        assert!(matches!(
            parse("a,b,label\n0,0,0\n"),
            Err(Error::TooFewRows { found: 1, .. })
        ));
        assert!(matches!(
            parse("a,b,label\n0,inf,0\n1,1,1\n"),
            Err(Error::NonNumeric { .. })
        ));
        assert!(matches!(
            load_csv("/definitely/not/here.csv", &LabelColumn::Last),
            Err(Error::Io { .. })
        ));
    }

    #[test]
    fn synthetic_column_is_not_a_feature() {
        let d = parse("a,label,synthetic\n1,0,false\n2,1,true\n").unwrap();
        assert_eq!(d.n_features(), 1);
        assert_eq!(d.synthetic_count(), 1);
        let mut buf = Vec::new();
        write_csv_to(&d, &mut buf, true).unwrap();
        assert_eq!(parse(std::str::from_utf8(&buf).unwrap()).unwrap(), d);
    }

    #[test]
    fn float_text_round_trip_is_exact() {
        for v in [0.1, 1.0 / 3.0, -2.5e-300, 6.02e23, 1e-5, 123456.789, 0.0] {
            assert_eq!(format_f64(v).parse::<f64>().unwrap(), v);
        }
    }

    #[test]
    fn minority_has_fewer_instances() {
        let d = labeled(&[(0, 10), (1, 3)]);
        let s = split_by_class(&d).unwrap();
        assert_eq!(s.minority_label, 1);
        assert_eq!(s.minority.len(), 3);
        assert_eq!(s.majority.len(), 10);
    }

    #[test]
    fn tie_goes_to_smaller_label() {
        let d = labeled(&[(1, 5), (0, 5)]);
        let s = split_by_class(&d).unwrap();
        assert_eq!(s.minority_label, 0);
        assert_eq!(s.minority.len(), 5);
    }

    #[test]
    fn split_requires_two_labels() {
        assert!(matches!(
            split_by_class(&labeled(&[(0, 4)])),
            Err(Error::NotBinary(1))
        ));
        assert!(matches!(
            split_by_class(&labeled(&[(0, 4), (1, 2), (2, 2)])),
            Err(Error::NotBinary(3))
        ));
    }

    #[test]
    fn imbalance_degrees_from_bug_report_counts() {
        assert_eq!(round3(imbalance_degree_counts(1071, 384).unwrap()), 2.789);
        assert_eq!(round3(imbalance_degree_counts(702, 99).unwrap()), 7.091);
        assert_eq!(imbalance_degree(&labeled(&[(0, 7), (1, 7)])).unwrap(), 1.0);
        assert!(imbalance_degree_counts(0, 3).is_err());
    }

    #[test]
    fn stratified_split_exact_proportion() {
        let d = labeled(&[(0, 100), (1, 100)]);
        let (train, test) = stratified_split(&d, 0.2, &mut seeded(1)).unwrap();
        assert_eq!(test.class_counts()[&0], 20);
        assert_eq!(test.class_counts()[&1], 20);
        assert_eq!(train.len(), 160);
    }

    #[test]
    fn stratified_split_rounding_and_determinism() {
        let d = labeled(&[(0, 97), (1, 13)]);
        let (tr1, te1) = stratified_split(&d, 0.25, &mut seeded(9)).unwrap();
        let (tr2, te2) = stratified_split(&d, 0.25, &mut seeded(9)).unwrap();
        assert_eq!((&tr1, &te1), (&tr2, &te2));
        let c = te1.class_counts();
        assert!((c[&0] as f64 - 24.25).abs() <= 1.0);
        assert!((c[&1] as f64 - 3.25).abs() <= 1.0);
    }

    #[test]
    fn stratified_split_rejects_tiny_class() {
        let d = labeled(&[(0, 10), (1, 1)]);
        assert!(matches!(
            stratified_split(&d, 0.3, &mut seeded(0)),
            Err(Error::ClassTooSmall { size: 1, .. })
        ));
    }

    #[test]
    fn scaler_round_trips() {
        let d = Dataset::from_points(
            vec![vec![1.0, 5.0], vec![3.0, 5.0], vec![2.0, 5.0]],
            vec![0, 1, 0],
        )
        .unwrap();
        let s = MinMaxScaler::fit(&d);
        let t = s.transform(&d).unwrap();
        assert_eq!(t.instances()[0].features, vec![0.0, 0.0]);
        assert_eq!(t.instances()[1].features, vec![1.0, 0.0]);
        assert_eq!(s.inverse(&t).unwrap(), d);
    }
}
