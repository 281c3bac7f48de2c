use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use clap::Args;
use serde::{Deserialize, Serialize};
use wordrep::corpus::{build_vocabulary, read_corpus, save_conll, write_corpus};

use crate::config::{required, usage, CommandConfig};
use crate::data::{ensure_exists, load_dataset, DataOptions};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PreprocessConfig {
    pub input: Option<PathBuf>,
    pub output: Option<PathBuf>,
    /// Vocabulary file; defaults to `<output>.vocab`.
    pub vocab: Option<PathBuf>,
    /// `text` (one sentence per line) or `conll`.
    pub format: String,
    pub normalize_digits: bool,
    pub min_count: u64,
    /// Column layout for `conll` input.
    pub columns: DataOptions,
}

impl Default for PreprocessConfig {
    fn default() -> Self {
        PreprocessConfig {
            input: None,
            output: None,
            vocab: None,
            format: "text".into(),
            normalize_digits: true,
            min_count: 1,
            columns: DataOptions::default(),
        }
    }
}

impl CommandConfig for PreprocessConfig {
    const SECTION: &'static str = "preprocess";
    const PATH_FIELDS: &'static [&'static str] = &["input", "output", "vocab"];

    fn primary_output(&self) -> Option<&Path> {
        self.output.as_deref()
    }
}

#[derive(Debug, Default, Args, Serialize)]
pub struct PreprocessArgs {
    /// Raw corpus or CoNLL file.
    #[arg(long)]
    pub input: Option<PathBuf>,
    #[arg(long)]
    pub output: Option<PathBuf>,
    #[arg(long)]
    pub vocab: Option<PathBuf>,
    /// `text` or `conll`.
    #[arg(long)]
    pub format: Option<String>,
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub normalize_digits: Option<bool>,
    #[arg(long)]
    pub min_count: Option<u64>,
    #[command(flatten)]
    pub columns: ColumnArgs,
}

#[derive(Debug, Default, Args, Serialize)]
pub struct ColumnArgs {
    #[arg(long)]
    pub token_column: Option<usize>,
    #[arg(long)]
    pub label_column: Option<usize>,
    /// `token-classification` or `span-iob`.
    #[arg(long)]
    pub task: Option<String>,
}

pub fn run(cfg: &PreprocessConfig) -> Result<()> {
    let section = PreprocessConfig::SECTION;
    let input = required(&cfg.input, "input", section)?;
    let output = required(&cfg.output, "output", section)?;
    ensure_exists(input, "input corpus")?;

    let sentences = match cfg.format.as_str() {
        "text" => {
            let sentences = read_corpus(input, cfg.normalize_digits)
                .with_context(|| format!("reading corpus {}", input.display()))?;
            let mut out = BufWriter::new(
                fs::File::create(output).with_context(|| format!("cannot create {}", output.display()))?,
            );
            write_corpus(&mut out, &sentences)?;
            out.flush()?;
            sentences
        }
        "conll" => {
            let mut opts = cfg.columns.conll();
            opts.normalize_digits = cfg.normalize_digits;
            let data = load_dataset(input, &opts, "input corpus")?;
            save_conll(&data, output).with_context(|| format!("cannot write {}", output.display()))?;
            data.sentences
        }
        other => return Err(usage(format!("invalid format {other:?}: expected text or conll"))),
    };

    let vocab = build_vocabulary(sentences.iter().flatten(), cfg.min_count)?;
    let vocab_path = cfg.vocab.clone().unwrap_or_else(|| {
        let mut p = output.as_os_str().to_owned();
        p.push(".vocab");
        PathBuf::from(p)
    });
    vocab
        .save(&vocab_path)
        .with_context(|| format!("cannot write {}", vocab_path.display()))?;
    log::info!(
        "{} sentences, {} tokens, {} types",
        sentences.len(),
        sentences.iter().map(Vec::len).sum::<usize>(),
        vocab.len()
    );
    Ok(())
}
