use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::{Context, Result};
use clap::Args;
use serde::{Deserialize, Serialize};
use wordrep::brown::{brown_cluster, BigramStatistics, Strategy};
use wordrep::corpus::{build_vocabulary, read_corpus, Vocabulary};
use wordrep::cw::{train_cw, CwConfig};
use wordrep::glove::{count_cooccurrences, train_glove, CountOptions, GloveConfig};
use wordrep::repr::{EmbeddingMatrix, Method, Normalization, RepresentationConfig, TrainReport};
use wordrep::w2v::{train_w2v, W2vConfig, W2vMode};

use crate::config::{required, usage, CommandConfig};
use crate::data::ensure_exists;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainReprConfig {
    /// One of cbow, skipgram, glove, cw, brown.
    pub method: Option<String>,
    pub corpus: Option<PathBuf>,
    pub output: Option<PathBuf>,
    pub normalize_digits: bool,
    pub min_count: u64,
    pub dim: usize,
    /// Context words on each side.
    pub window: usize,
    /// Method default when unset.
    pub epochs: Option<usize>,
    /// Method default when unset.
    pub eta: Option<f64>,
    pub seed: u64,
    /// Noise samples per prediction; 0 uses the full softmax.
    pub negatives: usize,
    pub subsample: Option<f64>,
    pub hidden: usize,
    pub x_max: f64,
    pub alpha: f64,
    pub normalize: Normalization,
    pub clusters: usize,
    /// `auto`, `exact` or `windowed`.
    pub strategy: String,
    /// Active-cluster window for the windowed strategy.
    pub cluster_window: Option<usize>,
}

impl Default for TrainReprConfig {
    fn default() -> Self {
        let w2v = W2vConfig::new(W2vMode::Skipgram);
        let glove = GloveConfig::default();
        TrainReprConfig {
            method: None,
            corpus: None,
            output: None,
            normalize_digits: false,
            min_count: 1,
            dim: w2v.dim,
            window: w2v.window,
            epochs: None,
            eta: None,
            seed: 1,
            negatives: w2v.negatives,
            subsample: None,
            hidden: CwConfig::default().hidden,
            x_max: glove.x_max,
            alpha: glove.alpha,
            normalize: Normalization::None,
            clusters: 250,
            strategy: "auto".into(),
            cluster_window: None,
        }
    }
}

impl CommandConfig for TrainReprConfig {
    const SECTION: &'static str = "train-repr";
    const PATH_FIELDS: &'static [&'static str] = &["corpus", "output"];

    fn primary_output(&self) -> Option<&Path> {
        self.output.as_deref()
    }
}

#[derive(Debug, Default, Args, Serialize)]
pub struct TrainReprArgs {
    /// cbow, skipgram, glove, cw or brown.
    #[arg(long)]
    pub method: Option<String>,
    /// Whitespace-tokenised corpus, one sentence per line.
    #[arg(long)]
    pub corpus: Option<PathBuf>,
    #[arg(long)]
    pub output: Option<PathBuf>,
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub normalize_digits: Option<bool>,
    #[arg(long)]
    pub min_count: Option<u64>,
    #[arg(long)]
    pub dim: Option<usize>,
    #[arg(long)]
    pub window: Option<usize>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub eta: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub negatives: Option<usize>,
    #[arg(long)]
    pub subsample: Option<f64>,
    #[arg(long)]
    pub hidden: Option<usize>,
    #[arg(long)]
    pub x_max: Option<f64>,
    #[arg(long)]
    pub alpha: Option<f64>,
    /// `none` or `unit-l2`.
    #[arg(long)]
    pub normalize: Option<String>,
    #[arg(long)]
    pub clusters: Option<usize>,
    #[arg(long)]
    pub strategy: Option<String>,
    #[arg(long)]
    pub cluster_window: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClusterConfig {
    pub corpus: Option<PathBuf>,
    pub output: Option<PathBuf>,
    pub normalize_digits: bool,
    pub min_count: u64,
    pub clusters: usize,
    pub strategy: String,
    pub cluster_window: Option<usize>,
}

impl Default for ClusterConfig {
    fn default() -> Self {
        let r = TrainReprConfig::default();
        ClusterConfig {
            corpus: None,
            output: None,
            normalize_digits: r.normalize_digits,
            min_count: r.min_count,
            clusters: r.clusters,
            strategy: r.strategy,
            cluster_window: None,
        }
    }
}

impl CommandConfig for ClusterConfig {
    const SECTION: &'static str = "cluster";
    const PATH_FIELDS: &'static [&'static str] = &["corpus", "output"];

    fn primary_output(&self) -> Option<&Path> {
        self.output.as_deref()
    }
}

#[derive(Debug, Default, Args, Serialize)]
pub struct ClusterArgs {
    #[arg(long)]
    pub corpus: Option<PathBuf>,
    #[arg(long)]
    pub output: Option<PathBuf>,
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub normalize_digits: Option<bool>,
    #[arg(long)]
    pub min_count: Option<u64>,
    /// Number of clusters at the cut.
    #[arg(long)]
    pub clusters: Option<usize>,
    /// `auto`, `exact` or `windowed`.
    #[arg(long)]
    pub strategy: Option<String>,
    #[arg(long)]
    pub cluster_window: Option<usize>,
}

fn strategy(name: &str, window: Option<usize>, clusters: usize) -> Result<Strategy> {
    match name {
        "auto" => Ok(Strategy::Auto),
        "exact" => Ok(Strategy::Exact),
        "windowed" => Ok(Strategy::Windowed(window.unwrap_or(clusters))),
        other => Err(usage(format!(
            "invalid strategy {other:?}: expected auto, exact or windowed"
        ))),
    }
}

fn load_corpus(path: &Path, normalize: bool, min_count: u64) -> Result<(Arc<Vocabulary>, Vec<Vec<usize>>)> {
    ensure_exists(path, "corpus")?;
    let sentences = read_corpus(path, normalize).with_context(|| format!("reading corpus {}", path.display()))?;
    let vocab = Arc::new(build_vocabulary(sentences.iter().flatten(), min_count)?);
    let ids = vocab.encode_all(&sentences);
    log::info!("corpus: {} sentences, {} types", ids.len(), vocab.len());
    Ok((vocab, ids))
}

fn cluster_to(
    corpus: &Path,
    output: &Path,
    normalize: bool,
    min_count: u64,
    clusters: usize,
    strategy: Strategy,
) -> Result<()> {
    let (vocab, ids) = load_corpus(corpus, normalize, min_count)?;
    let stats = BigramStatistics::from_sentences(&ids, vocab.len());
    let hierarchy = brown_cluster(&stats, clusters, strategy)?;
    hierarchy
        .save(output, &vocab, &stats)
        .with_context(|| format!("cannot write {}", output.display()))?;
    log::info!("wrote {} clusters to {}", hierarchy.cluster_count(), output.display());
    Ok(())
}

pub fn run_cluster(cfg: &ClusterConfig) -> Result<()> {
    let section = ClusterConfig::SECTION;
    let corpus = required(&cfg.corpus, "corpus", section)?;
    let output = required(&cfg.output, "output", section)?;
    let s = strategy(&cfg.strategy, cfg.cluster_window, cfg.clusters)?;
    cluster_to(corpus, output, cfg.normalize_digits, cfg.min_count, cfg.clusters, s)
}

pub fn run_train_repr(cfg: &TrainReprConfig) -> Result<()> {
    let section = TrainReprConfig::SECTION;
    let name = cfg
        .method
        .as_deref()
        .ok_or_else(|| usage("missing required setting `method`: pass --method or set it under [train-repr]"))?;
    let method: Method = match name.parse() {
        Ok(Method::Onehot) | Err(_) => {
            return Err(usage(format!(
                "invalid method {name:?}: expected cbow, skipgram, glove, cw or brown"
            )))
        }
        Ok(m) => m,
    };
    let corpus = required(&cfg.corpus, "corpus", section)?;
    let output = required(&cfg.output, "output", section)?;

    let grid = RepresentationConfig {
        method,
        dim: cfg.dim,
        window: cfg.window,
        context_mode: method.context_mode(),
        clusters: cfg.clusters,
        normalize: cfg.normalize,
    };
    for v in grid.grid_violations() {
        log::warn!("off the published grid: {v}");
    }

    if method == Method::Brown {
        let s = strategy(&cfg.strategy, cfg.cluster_window, cfg.clusters)?;
        return cluster_to(corpus, output, cfg.normalize_digits, cfg.min_count, cfg.clusters, s);
    }

    let (vocab, ids) = load_corpus(corpus, cfg.normalize_digits, cfg.min_count)?;
    let (mut matrix, _): (EmbeddingMatrix, TrainReport) = match method {
        Method::Cbow | Method::Skipgram => {
            let mode = if method == Method::Cbow { W2vMode::Cbow } else { W2vMode::Skipgram };
            let mut w = W2vConfig::new(mode);
            w.dim = cfg.dim;
            w.window = cfg.window;
            w.negatives = cfg.negatives;
            w.epochs = cfg.epochs.unwrap_or(w.epochs);
            w.eta0 = cfg.eta.unwrap_or(w.eta0);
            w.seed = cfg.seed;
            w.subsample = cfg.subsample;
            let (model, report) = train_w2v(&ids, vocab, &w)?;
            (model.into_embeddings(), report)
        }
        Method::Glove => {
            let table = count_cooccurrences(&ids, &vocab, &CountOptions::new(cfg.window))?;
            let mut g = GloveConfig::default();
            g.dim = cfg.dim;
            g.epochs = cfg.epochs.unwrap_or(g.epochs);
            g.eta = cfg.eta.unwrap_or(g.eta);
            g.x_max = cfg.x_max;
            g.alpha = cfg.alpha;
            g.seed = cfg.seed;
            let (model, report) = train_glove(&table, vocab, &g)?;
            (model.embeddings(), report)
        }
        Method::Cw => {
            let mut c = CwConfig::default();
            c.dim = cfg.dim;
            c.window = cfg.window;
            c.hidden = cfg.hidden;
            c.epochs = cfg.epochs.unwrap_or(c.epochs);
            c.eta = cfg.eta.unwrap_or(c.eta);
            c.seed = cfg.seed;
            let (net, report) = train_cw(&ids, vocab, &c)?;
            (net.embeddings, report)
        }
        Method::Brown | Method::Onehot => unreachable!("handled above"),
    };
    matrix.apply(cfg.normalize);
    matrix
        .save(output)
        .with_context(|| format!("cannot write {}", output.display()))?;
    log::info!("wrote {}x{} embeddings to {}", matrix.rows(), matrix.dim(), output.display());
    Ok(())
}
