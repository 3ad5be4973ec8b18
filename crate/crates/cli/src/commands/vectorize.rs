use std::path::PathBuf;

use clap::Args;
use gsmote::dataset::write_csv;
use gsmote::textvec::{read_labeled_csv, read_lines, vectorize, Corpus, CorpusOptions, Stoplist};
use gsmote::Error;

use super::ensure_distinct;
use crate::config::{self, load_or_default, required, sidecar, InputFormat, VectorizeConfig};
use crate::error::{At, CliError};

#[derive(Debug, Args)]
pub struct VectorizeArgs {
    /// TOML settings; flags given here override it.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// One document per line, or a `text,label` CSV.
    #[arg(short, long)]
    pub input: Option<PathBuf>,
    /// Feature CSV to write.
    #[arg(short, long)]
    pub output: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<InputFormat>,
    /// Stop-word file, one term per line, replacing the built-in list.
    #[arg(long)]
    pub stopwords: Option<PathBuf>,
    /// Keep every token.
    #[arg(long, conflicts_with = "stopwords")]
    pub no_stopwords: bool,
    /// Drop terms that occur in only one document.
    #[arg(long)]
    pub prune_singletons: bool,
    /// Header of the label column.
    #[arg(long)]
    pub label_name: Option<String>,
    /// Label for plain-text input.
    #[arg(long)]
    pub default_label: Option<String>,
}

impl VectorizeArgs {
    pub fn resolve(self) -> Result<VectorizeConfig, CliError> {
        let mut c: VectorizeConfig = load_or_default(self.config.as_deref())?;
        c.input = self.input.or(c.input);
        c.output = self.output.or(c.output);
        c.stopwords = self.stopwords.or(c.stopwords);
        c.no_stopwords |= self.no_stopwords;
        c.prune_singletons |= self.prune_singletons;
        if let Some(v) = self.format {
            c.format = v;
        }
        if let Some(v) = self.label_name {
            c.label_name = v;
        }
        if let Some(v) = self.default_label {
            c.default_label = v;
        }
        Ok(c)
    }
}

pub fn run(args: VectorizeArgs) -> Result<(), CliError> {
    execute(args.resolve()?).map(|_| ())
}

/// Returns the vocabulary, in column order.
pub fn execute(cfg: VectorizeConfig) -> Result<Vec<String>, CliError> {
    let input = required(&cfg.input, "input")?.to_path_buf();
    let output = required(&cfg.output, "output")?.to_path_buf();
    ensure_distinct(&input, &output)?;
    if cfg.no_stopwords && cfg.stopwords.is_some() {
        return Err(CliError::Usage("--no-stopwords conflicts with --stopwords".into()));
    }
    let csv_input = match cfg.format {
        InputFormat::Csv => true,
        InputFormat::Text => false,
        InputFormat::Auto => input
            .extension()
            .is_some_and(|e| e.eq_ignore_ascii_case("csv")),
    };
    let file = std::fs::File::open(&input).map_err(|e| CliError::Core {
        stage: "load",
        source: Error::Format(format!("{}: {e}", input.display())),
    })?;
    let (texts, labels) = if csv_input {
        read_labeled_csv(file).at("load")?
    } else {
        let texts = read_lines(file).at("load")?;
        let labels = vec![cfg.default_label.clone(); texts.len()];
        (texts, labels)
    };
    let stoplist = if cfg.no_stopwords {
        Stoplist::empty()
    } else if let Some(p) = &cfg.stopwords {
        Stoplist::load(p).at("stopwords")?
    } else {
        Stoplist::english()
    };
    let corpus = Corpus::from_texts(
        &texts,
        &stoplist,
        CorpusOptions {
            prune_singletons: cfg.prune_singletons,
        },
    );
    let matrix = vectorize(&corpus).at("vectorize")?;
    let vocabulary = matrix.columns.clone();
    let data = matrix.into_dataset(&labels, &cfg.label_name).at("vectorize")?;
    write_csv(&data, &output, false).at("write")?;
    config::save(&cfg, &sidecar(&output, ".config.toml"))?;
    log::info!(
        "{} documents x {} terms written to {}",
        data.len(),
        vocabulary.len(),
        output.display()
    );
    Ok(vocabulary)
}
