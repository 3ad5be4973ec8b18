//! Text preprocessing and TF-IDF vectorization.
//!
//! The pipeline is fixed: [`tokenize`], [`remove_stopwords`], [`stem`], then
//! counting. The vocabulary is built from stems, so inflected forms that stem
//! alike share one column. Columns are ordered alphabetically by term.
//!
//! Weights are `tf(t, d) * idf(t)` with `tf = count / |d|` and
//! `idf = ln(m / df)`. A term present in every document therefore gets a
//! zero column.

mod porter;

use std::collections::{BTreeMap, BTreeSet};
use std::io::{BufRead, BufReader, Read};
use std::path::Path;

use rayon::prelude::*;

use crate::dataset::{Dataset, Instance, SYNTHETIC_COLUMN};
use crate::error::{Error, Result};

pub use porter::porter_stem;

const DEFAULT_STOPWORDS: &str = include_str!("stopwords_en.txt");

/// An ordered list of lower-case `[a-z0-9]+` terms.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Document {
    pub tokens: Vec<String>,
}

impl Document {
    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }
}

/// Splits on every character outside `[A-Za-z0-9]` and lowercases.
///
/// Non-ASCII letters act as separators.
pub fn tokenize(text: &str) -> Document {
    let tokens = text
        .split(|c: char| !c.is_ascii_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(|t| t.to_ascii_lowercase())
        .collect();
    Document { tokens }
}

/// A set of lower-case terms dropped before stemming.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Stoplist {
    terms: BTreeSet<String>,
}

impl Stoplist {
    pub fn empty() -> Self {
        Stoplist::default()
    }

    /// The embedded English list.
    pub fn english() -> Self {
        Stoplist::from_lines(DEFAULT_STOPWORDS)
    }

    /// One term per line. Blank lines and lines starting with `#` are
    /// ignored; terms are lowercased.
    pub fn from_lines(text: &str) -> Self {
        let terms = text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
            .map(str::to_lowercase)
            .collect();
        Stoplist { terms }
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(Stoplist::from_lines(&text))
    }

    pub fn contains(&self, term: &str) -> bool {
        self.terms.contains(term)
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }
}

impl<S: Into<String>> FromIterator<S> for Stoplist {
    fn from_iter<I: IntoIterator<Item = S>>(iter: I) -> Self {
        Stoplist {
            terms: iter.into_iter().map(Into::into).collect(),
        }
    }
}

pub fn remove_stopwords(doc: &Document, stoplist: &Stoplist) -> Document {
    Document {
        tokens: doc
            .tokens
            .iter()
            .filter(|t| !stoplist.contains(t))
            .cloned()
            .collect(),
    }
}

/// Porter stemming iterated to a fixed point, so `stem(stem(t)) == stem(t)`.
///
/// A single Porter pass agrees with this on most English words; see
/// [`porter_stem`] for the one-pass version.
pub fn stem(token: &str) -> String {
    let mut cur = porter_stem(token);
    loop {
        let next = porter_stem(&cur);
        if next == cur {
            return cur;
        }
        cur = next;
    }
}

/// Runs tokenization, stop-word removal and stemming on one text.
pub fn preprocess(text: &str, stoplist: &Stoplist) -> Document {
    let doc = remove_stopwords(&tokenize(text), stoplist);
    Document {
        tokens: doc.tokens.iter().map(|t| stem(t)).collect(),
    }
}

pub fn term_frequency(raw_count: usize, doc_total: usize) -> Result<f64> {
    if doc_total == 0 {
        return Err(Error::InvalidParameter(
            "term frequency of an empty document".into(),
        ));
    }
    if raw_count > doc_total {
        return Err(Error::InvalidParameter(format!(
            "raw count {raw_count} exceeds document length {doc_total}"
        )));
    }
    Ok(raw_count as f64 / doc_total as f64)
}

pub fn inverse_document_frequency(df: usize, m_docs: usize) -> Result<f64> {
    if df == 0 {
        return Err(Error::InvalidParameter(
            "document frequency 0: term not in corpus".into(),
        ));
    }
    if df > m_docs {
        return Err(Error::InvalidParameter(format!(
            "document frequency {df} exceeds corpus size {m_docs}"
        )));
    }
    Ok((m_docs as f64 / df as f64).ln())
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct CorpusOptions {
    /// Drop terms that occur in exactly one document.
    pub prune_singletons: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Corpus {
    documents: Vec<Document>,
    vocabulary: BTreeMap<String, usize>,
    doc_freq: Vec<usize>,
}

impl Corpus {
    /// Builds a corpus from raw texts through the full preprocessing pipeline.
    pub fn from_texts<S: AsRef<str>>(
        texts: &[S],
        stoplist: &Stoplist,
        options: CorpusOptions,
    ) -> Self {
        let docs = texts
            .iter()
            .map(|t| preprocess(t.as_ref(), stoplist))
            .collect();
        Corpus::from_documents(docs, options)
    }

    /// Builds a corpus from already processed documents.
    pub fn from_documents(documents: Vec<Document>, options: CorpusOptions) -> Self {
        let mut df: BTreeMap<String, usize> = BTreeMap::new();
        for doc in &documents {
            let unique: BTreeSet<&String> = doc.tokens.iter().collect();
            for t in unique {
                *df.entry(t.clone()).or_insert(0) += 1;
            }
        }
        if options.prune_singletons {
            df.retain(|_, c| *c > 1);
        }
        let mut vocabulary = BTreeMap::new();
        let mut doc_freq = Vec::with_capacity(df.len());
        for (i, (t, c)) in df.into_iter().enumerate() {
            vocabulary.insert(t, i);
            doc_freq.push(c);
        }
        Corpus {
            documents,
            vocabulary,
            doc_freq,
        }
    }

    pub fn documents(&self) -> &[Document] {
        &self.documents
    }

    pub fn len(&self) -> usize {
        self.documents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.documents.is_empty()
    }

    /// Term to column index, in column order.
    pub fn vocabulary(&self) -> &BTreeMap<String, usize> {
        &self.vocabulary
    }

    pub fn doc_freq(&self, term: &str) -> Option<usize> {
        self.vocabulary.get(term).map(|&i| self.doc_freq[i])
    }

    pub fn idf(&self) -> Vec<f64> {
        let m = self.documents.len();
        self.doc_freq
            .iter()
            .map(|&df| (m as f64 / df as f64).ln())
            .collect()
    }
}

/// A dense document-by-term matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl FeatureMatrix {
    pub fn shape(&self) -> (usize, usize) {
        (self.rows.len(), self.columns.len())
    }

    /// Attaches one label per row. Label ids follow first occurrence.
    ///
    /// A column whose name would clash with the label column or the
    /// synthetic marker gets a trailing underscore.
    pub fn into_dataset<S: AsRef<str>>(self, labels: &[S], label_name: &str) -> Result<Dataset> {
        if labels.len() != self.rows.len() {
            return Err(Error::DimensionMismatch {
                expected: self.rows.len(),
                found: labels.len(),
            });
        }
        let mut taken: BTreeSet<String> = BTreeSet::new();
        taken.insert(label_name.to_string());
        taken.insert(SYNTHETIC_COLUMN.to_string());
        let mut names = Vec::with_capacity(self.columns.len());
        for c in self.columns {
            let mut name = c;
            while taken.contains(&name) {
                name.push('_');
            }
            taken.insert(name.clone());
            names.push(name);
        }
        let mut label_names: Vec<String> = Vec::new();
        let mut instances = Vec::with_capacity(self.rows.len());
        for (row, label) in self.rows.into_iter().zip(labels) {
            let label = label.as_ref();
            let id = match label_names.iter().position(|l| l == label) {
                Some(id) => id,
                None => {
                    label_names.push(label.to_string());
                    label_names.len() - 1
                }
            };
            instances.push(Instance::new(row, id));
        }
        Dataset::new(names, label_name, label_names, instances)
    }
}

/// TF-IDF weights for every document, columns in vocabulary order.
pub fn vectorize(corpus: &Corpus) -> Result<FeatureMatrix> {
    if corpus.documents.iter().all(Document::is_empty) || corpus.vocabulary.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    let idf = corpus.idf();
    let rows = corpus
        .documents
        .par_iter()
        .map(|doc| {
            let mut row = vec![0.0; idf.len()];
            if doc.is_empty() {
                return row;
            }
            let mut counts: BTreeMap<usize, usize> = BTreeMap::new();
            for t in &doc.tokens {
                if let Some(&j) = corpus.vocabulary.get(t) {
                    *counts.entry(j).or_insert(0) += 1;
                }
            }
            let total = doc.len();
            for (j, c) in counts {
                row[j] = c as f64 / total as f64 * idf[j];
            }
            row
        })
        .collect();
    Ok(FeatureMatrix {
        columns: corpus.vocabulary.keys().cloned().collect(),
        rows,
    })
}

/// Reads one document per non-empty line.
pub fn read_lines<R: Read>(reader: R) -> Result<Vec<String>> {
    let mut out = Vec::new();
    for line in BufReader::new(reader).lines() {
        let line = line.map_err(|e| Error::Format(e.to_string()))?;
        if !line.trim().is_empty() {
            out.push(line);
        }
    }
    Ok(out)
}

/// Reads a `text,label` CSV with a header row.
pub fn read_labeled_csv<R: Read>(reader: R) -> Result<(Vec<String>, Vec<String>)> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::Fields)
        .from_reader(reader);
    let mut texts = Vec::new();
    let mut labels = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        if rec.len() != 2 {
            return Err(Error::RaggedRow {
                row: i + 1,
                expected: 2,
                found: rec.len(),
            });
        }
        if rec[1].is_empty() {
            return Err(Error::MissingValue {
                row: i + 1,
                column: "label".into(),
            });
        }
        texts.push(rec[0].to_string());
        labels.push(rec[1].to_string());
    }
    Ok((texts, labels))
}
