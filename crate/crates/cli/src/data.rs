//! Dataset and representation loading shared by the tagger commands.

use std::collections::HashSet;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::Args;
use serde::{Deserialize, Serialize};
use wordrep::brown::{ClusterFeatures, DEFAULT_PREFIX_LENGTHS};
use wordrep::corpus::{load_conll, ConllOptions, LabelledDataset, TaskKind};
use wordrep::repr::{EmbeddingMatrix, WordRepresentation};
use wordrep::tagger::{TaggerConfig, TemplateSet};

use crate::config::usage;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DataOptions {
    pub token_column: usize,
    pub label_column: usize,
    pub task: TaskKind,
    pub normalize_digits: bool,
}

impl Default for DataOptions {
    fn default() -> Self {
        let c = ConllOptions::default();
        DataOptions {
            token_column: c.token_column,
            label_column: c.label_column,
            task: c.task_kind,
            normalize_digits: c.normalize_digits,
        }
    }
}

impl DataOptions {
    pub fn conll(&self) -> ConllOptions {
        ConllOptions {
            token_column: self.token_column,
            label_column: self.label_column,
            normalize_digits: self.normalize_digits,
            task_kind: self.task,
        }
    }
}

#[derive(Debug, Default, Args, Serialize)]
pub struct DataArgs {
    /// Zero-based column holding tokens.
    #[arg(long)]
    pub token_column: Option<usize>,
    /// Zero-based column holding labels.
    #[arg(long)]
    pub label_column: Option<usize>,
    /// `token-classification` or `span-iob`.
    #[arg(long)]
    pub task: Option<String>,
    /// Replace digit runs while reading.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub normalize_digits: Option<bool>,
}

#[derive(Debug, Default, Args, Serialize)]
pub struct TaggerArgs {
    /// Update embedding rows during training.
    #[arg(long, alias = "update-reps", num_args = 0..=1, default_missing_value = "true")]
    pub update_representations: Option<bool>,
    #[arg(long)]
    pub epochs: Option<usize>,
    /// AdaGrad step size for model weights.
    #[arg(long)]
    pub eta: Option<f64>,
    #[arg(long)]
    pub epsilon: Option<f64>,
    /// AdaGrad step size for embedding rows.
    #[arg(long)]
    pub eta_rep: Option<f64>,
    #[arg(long)]
    pub epsilon_rep: Option<f64>,
    #[arg(long)]
    pub l2: Option<f64>,
    /// Tagger shuffling seed.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    /// Restrict decoding to valid IOB sequences.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub constrained_decoding: Option<bool>,
}

/// Settings every tagger-training command shares.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelOptions {
    /// Comma-separated template names, `all` or `none`.
    pub templates: String,
    /// Bit-string prefix lengths for cluster features.
    pub prefix_lengths: Vec<usize>,
}

impl Default for ModelOptions {
    fn default() -> Self {
        ModelOptions {
            templates: "all".into(),
            prefix_lengths: DEFAULT_PREFIX_LENGTHS.to_vec(),
        }
    }
}

impl ModelOptions {
    pub fn templates(&self) -> Result<TemplateSet> {
        TemplateSet::from_mask(&self.templates).map_err(|e| usage(e.to_string()))
    }
}

#[derive(Debug, Default, Args, Serialize)]
pub struct ModelArgs {
    /// Hand-crafted templates: comma-separated names, `all` or `none`.
    #[arg(long)]
    pub templates: Option<String>,
    #[arg(long, value_delimiter = ',')]
    pub prefix_lengths: Option<Vec<usize>>,
}

pub fn ensure_exists(path: &Path, what: &str) -> Result<()> {
    if !path.exists() {
        bail!("{what} not found: {}", path.display());
    }
    Ok(())
}

pub fn load_dataset(path: &Path, opts: &ConllOptions, what: &str) -> Result<LabelledDataset> {
    ensure_exists(path, what)?;
    load_conll(path, opts).with_context(|| format!("loading {what} {}", path.display()))
}

pub fn load_embeddings(path: &Path, what: &str) -> Result<EmbeddingMatrix> {
    ensure_exists(path, what)?;
    EmbeddingMatrix::load(path).with_context(|| format!("loading {what} {}", path.display()))
}

/// Parsed `[name=]onehot | brown:<path> | embedding:<path>`.
#[derive(Debug, Clone, PartialEq)]
pub struct RepSpec {
    pub name: String,
    pub source: RepSource,
}

#[derive(Debug, Clone, PartialEq)]
pub enum RepSource {
    OneHot,
    Brown(PathBuf),
    Embedding(PathBuf),
}

impl RepSpec {
    pub fn parse(spec: &str) -> Result<Self> {
        let (name, body) = match spec.split_once('=') {
            Some((n, b)) if !n.contains(':') => (Some(n.to_string()), b),
            _ => (None, spec),
        };
        let source = match body.split_once(':') {
            None if body == "onehot" || body == "one-hot" => RepSource::OneHot,
            Some(("brown", p)) if !p.is_empty() => RepSource::Brown(p.into()),
            Some(("embedding", p)) if !p.is_empty() => RepSource::Embedding(p.into()),
            _ => {
                return Err(usage(format!(
                    "invalid representation {spec:?}: expected onehot, brown:<path> or embedding:<path>"
                )))
            }
        };
        let name = name.unwrap_or_else(|| match &source {
            RepSource::OneHot => "onehot".into(),
            RepSource::Brown(p) | RepSource::Embedding(p) => {
                let kind = if matches!(source, RepSource::Brown(_)) { "brown" } else { "embedding" };
                let stem = p.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
                format!("{kind}:{stem}")
            }
        });
        Ok(RepSpec { name, source })
    }

    pub fn is_embedding(&self) -> bool {
        matches!(self.source, RepSource::Embedding(_))
    }

    pub fn load(&self, prefix_lengths: &[usize]) -> Result<WordRepresentation> {
        Ok(match &self.source {
            RepSource::OneHot => WordRepresentation::OneHot,
            RepSource::Brown(p) => {
                ensure_exists(p, "cluster file")?;
                let c = ClusterFeatures::load(p, prefix_lengths.to_vec())
                    .with_context(|| format!("loading cluster file {}", p.display()))?;
                WordRepresentation::Clusters(c)
            }
            RepSource::Embedding(p) => WordRepresentation::Embedding(load_embeddings(p, "embedding file")?),
        })
    }
}

pub fn known_words(data: &LabelledDataset) -> HashSet<String> {
    data.sentences.iter().flatten().cloned().collect()
}

/// Fails unless a representation that can be updated is configured.
pub fn check_updating(cfg: &TaggerConfig, spec: &RepSpec) -> Result<()> {
    if cfg.update_representations && !spec.is_embedding() {
        return Err(usage(format!(
            "update_representations needs an embedding representation, got {:?}",
            spec.name
        )));
    }
    Ok(())
}
