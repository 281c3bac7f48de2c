//! Co-occurrence counting and GloVe weighted least-squares training.

use std::collections::BTreeMap;
use std::fs;
use std::io::{BufRead, BufWriter, Write};
use std::path::Path;
use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::adagrad::AdaGrad;
use crate::corpus::Vocabulary;
use crate::error::{Error, Result};
use crate::repr::{dot, init_embeddings, EmbeddingMatrix, TrainReport};
use crate::rng::seeded;

pub const DEFAULT_X_MAX: f64 = 100.0;
pub const DEFAULT_ALPHA: f64 = 0.75;

/// How a co-occurrence at distance `k` is credited.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PairWeighting {
    #[default]
    Uniform,
    InverseDistance,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CountOptions {
    pub window: usize,
    pub weighting: PairWeighting,
    /// Count both left and right neighbours; otherwise left only.
    pub symmetric: bool,
}

impl CountOptions {
    pub fn new(window: usize) -> Self {
        CountOptions {
            window,
            weighting: PairWeighting::Uniform,
            symmetric: true,
        }
    }
}

/// Sparse word-pair counts `X_ij`. Only positive entries are stored.
#[derive(Debug, Clone, PartialEq)]
pub struct CooccurrenceTable {
    entries: BTreeMap<(usize, usize), f64>,
    window: usize,
    symmetric: bool,
}

impl CooccurrenceTable {
    pub fn from_entries<I>(entries: I, window: usize, symmetric: bool) -> Result<Self>
    where
        I: IntoIterator<Item = ((usize, usize), f64)>,
    {
        let mut map = BTreeMap::new();
        for (key, x) in entries {
            if !(x > 0.0 && x.is_finite()) {
                return Err(Error::Domain(format!("co-occurrence count {x} for {key:?} must be positive")));
            }
            *map.entry(key).or_insert(0.0) += x;
        }
        Ok(CooccurrenceTable {
            entries: map,
            window,
            symmetric,
        })
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries.get(&(i, j)).copied().unwrap_or(0.0)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn window(&self) -> usize {
        self.window
    }

    pub fn is_symmetric(&self) -> bool {
        self.symmetric
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        self.entries.iter().map(|(&(i, j), &x)| (i, j, x))
    }

    /// Largest word id referenced, plus one.
    pub fn id_bound(&self) -> usize {
        self.entries.keys().map(|&(i, j)| i.max(j) + 1).max().unwrap_or(0)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut out = BufWriter::new(fs::File::create(path)?);
        self.write_to(&mut out)?;
        out.flush()?;
        Ok(())
    }

    /// `i j count` lines sorted by `(i, j)`.
    pub fn write_to<W: Write>(&self, out: &mut W) -> Result<()> {
        for (i, j, x) in self.iter() {
            writeln!(out, "{i} {j} {x}")?;
        }
        Ok(())
    }

    pub fn read_from<R: BufRead>(reader: R, window: usize, symmetric: bool) -> Result<Self> {
        let mut entries = Vec::new();
        for (n, line) in reader.lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let bad = || Error::Format {
                line: n + 1,
                message: format!("expected `i j count`, got {line:?}"),
            };
            let f: Vec<&str> = line.split_whitespace().collect();
            if f.len() != 3 {
                return Err(bad());
            }
            let i = f[0].parse().map_err(|_| bad())?;
            let j = f[1].parse().map_err(|_| bad())?;
            let x: f64 = f[2].parse().map_err(|_| bad())?;
            entries.push(((i, j), x));
        }
        Self::from_entries(entries, window, symmetric)
    }
}

fn count_shard(sentences: &[Vec<usize>], opts: &CountOptions, unk: usize) -> BTreeMap<(usize, usize), f64> {
    let mut map = BTreeMap::new();
    for s in sentences {
        for (t, &wt) in s.iter().enumerate() {
            if wt == unk {
                continue;
            }
            let lo = t.saturating_sub(opts.window);
            for (s_pos, &ws) in s.iter().enumerate().take(t).skip(lo) {
                if ws == unk {
                    continue;
                }
                let k = t - s_pos;
                let credit = match opts.weighting {
                    PairWeighting::Uniform => 1.0,
                    PairWeighting::InverseDistance => 1.0 / k as f64,
                };
                *map.entry((wt, ws)).or_insert(0.0) += credit;
                if opts.symmetric {
                    *map.entry((ws, wt)).or_insert(0.0) += credit;
                }
            }
        }
    }
    map
}

const SHARD_SENTENCES: usize = 512;

/// Counts every ordered pair of tokens within `window` positions of each
/// other. Pairs touching the unknown type are skipped. Shards are counted in
/// parallel and merged in shard order, so the result does not depend on the
/// thread count.
pub fn count_cooccurrences(sentences: &[Vec<usize>], vocab: &Vocabulary, opts: &CountOptions) -> Result<CooccurrenceTable> {
    if opts.window == 0 {
        return Err(Error::Domain("window must be positive".into()));
    }
    let unk = vocab.unk_id();
    let partials: Vec<BTreeMap<(usize, usize), f64>> = sentences
        .par_chunks(SHARD_SENTENCES)
        .map(|chunk| count_shard(chunk, opts, unk))
        .collect();
    let mut merged = BTreeMap::new();
    for part in partials {
        for (k, v) in part {
            *merged.entry(k).or_insert(0.0) += v;
        }
    }
    Ok(CooccurrenceTable {
        entries: merged,
        window: opts.window,
        symmetric: opts.symmetric,
    })
}

/// Saturating weight `(x / x_max)^alpha`, capped at 1.
pub fn glove_weight(x: f64, x_max: f64, alpha: f64) -> Result<f64> {
    if !(x > 0.0) {
        return Err(Error::Domain(format!("co-occurrence count must be positive, got {x}")));
    }
    Ok(if x < x_max { (x / x_max).powf(alpha) } else { 1.0 })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GloveConfig {
    pub dim: usize,
    pub epochs: usize,
    pub eta: f64,
    pub x_max: f64,
    pub alpha: f64,
    pub seed: u64,
}

impl Default for GloveConfig {
    fn default() -> Self {
        GloveConfig {
            dim: 50,
            epochs: 25,
            eta: 0.05,
            x_max: DEFAULT_X_MAX,
            alpha: DEFAULT_ALPHA,
            seed: 1,
        }
    }
}

/// Gradient of one local factor.
#[derive(Debug, Clone, PartialEq)]
pub struct FactorGrad {
    pub main: Vec<f64>,
    pub context: Vec<f64>,
    pub main_bias: f64,
    pub context_bias: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GloveModel {
    pub main: EmbeddingMatrix,
    pub context: EmbeddingMatrix,
    pub main_bias: Vec<f64>,
    pub context_bias: Vec<f64>,
    pub x_max: f64,
    pub alpha: f64,
}

impl GloveModel {
    pub fn zeros(vocab: Arc<Vocabulary>, dim: usize) -> Self {
        let n = vocab.len();
        GloveModel {
            main: EmbeddingMatrix::zeros(vocab.clone(), dim),
            context: EmbeddingMatrix::zeros(vocab, dim),
            main_bias: vec![0.0; n],
            context_bias: vec![0.0; n],
            x_max: DEFAULT_X_MAX,
            alpha: DEFAULT_ALPHA,
        }
    }

    fn residual(&self, i: usize, j: usize, x: f64) -> f64 {
        dot(self.main.row(i), self.context.row(j)) + self.main_bias[i] + self.context_bias[j] - x.ln()
    }

    /// `g(X_ij) (v_i . v~_j + b_i + b~_j - ln X_ij)^2`.
    pub fn local_factor(&self, i: usize, j: usize, x: f64) -> Result<f64> {
        let g = glove_weight(x, self.x_max, self.alpha)?;
        let r = self.residual(i, j, x);
        Ok(g * r * r)
    }

    pub fn factor_grad(&self, i: usize, j: usize, x: f64) -> Result<(f64, FactorGrad)> {
        let g = glove_weight(x, self.x_max, self.alpha)?;
        let r = self.residual(i, j, x);
        let coef = 2.0 * g * r;
        Ok((
            g * r * r,
            FactorGrad {
                main: self.context.row(j).iter().map(|u| coef * u).collect(),
                context: self.main.row(i).iter().map(|v| coef * v).collect(),
                main_bias: coef,
                context_bias: coef,
            },
        ))
    }

    /// Mean local factor over every stored entry.
    pub fn mean_factor(&self, table: &CooccurrenceTable) -> Result<f64> {
        let mut sum = 0.0;
        for (i, j, x) in table.iter() {
            sum += self.local_factor(i, j, x)?;
        }
        Ok(sum / table.len().max(1) as f64)
    }

    /// Exported vectors: main plus context.
    pub fn embeddings(&self) -> EmbeddingMatrix {
        let data = self
            .main
            .as_slice()
            .iter()
            .zip(self.context.as_slice())
            .map(|(a, b)| a + b)
            .collect();
        EmbeddingMatrix::from_data(self.main.vocab().clone(), self.main.dim(), data)
            .expect("main and context share shape")
    }
}

/// AdaGrad over shuffled table entries. Deterministic for a fixed seed.
pub fn train_glove(
    table: &CooccurrenceTable,
    vocab: Arc<Vocabulary>,
    cfg: &GloveConfig,
) -> Result<(GloveModel, TrainReport)> {
    if table.is_empty() {
        return Err(Error::EmptyInput("co-occurrence table is empty".into()));
    }
    if table.id_bound() > vocab.len() {
        return Err(Error::Domain("co-occurrence table references ids outside the vocabulary".into()));
    }
    if cfg.dim == 0 {
        return Err(Error::Domain("dimension must be positive".into()));
    }
    let mut rng = seeded(cfg.seed);
    let n = vocab.len();
    let d = cfg.dim;
    let mut model = GloveModel {
        main: init_embeddings(vocab.clone(), d, rng.gen()),
        context: init_embeddings(vocab, d, rng.gen()),
        main_bias: vec![0.0; n],
        context_bias: vec![0.0; n],
        x_max: cfg.x_max,
        alpha: cfg.alpha,
    };
    let eps = 1e-8;
    let mut opt_main = AdaGrad::new(n * d, cfg.eta, eps);
    let mut opt_ctx = AdaGrad::new(n * d, cfg.eta, eps);
    let mut opt_mb = AdaGrad::new(n, cfg.eta, eps);
    let mut opt_cb = AdaGrad::new(n, cfg.eta, eps);

    let mut entries: Vec<(usize, usize, f64)> = table.iter().collect();
    let mut report = TrainReport::default();
    for epoch in 0..cfg.epochs {
        entries.shuffle(&mut rng);
        let mut total = 0.0;
        for &(i, j, x) in &entries {
            let (loss, grad) = model.factor_grad(i, j, x)?;
            total += loss;
            if grad.main_bias == 0.0 {
                continue;
            }
            let main = model.main.as_mut_slice();
            for (k, gk) in grad.main.iter().enumerate() {
                opt_main.update(&mut main[i * d + k], i * d + k, *gk);
            }
            let ctx = model.context.as_mut_slice();
            for (k, gk) in grad.context.iter().enumerate() {
                opt_ctx.update(&mut ctx[j * d + k], j * d + k, *gk);
            }
            opt_mb.update(&mut model.main_bias[i], i, grad.main_bias);
            opt_cb.update(&mut model.context_bias[j], j, grad.context_bias);
        }
        let mean = total / entries.len() as f64;
        if !mean.is_finite() {
            return Err(Error::Numerical {
                sentence: 0,
                message: format!("GloVe objective diverged at epoch {}", epoch + 1),
            });
        }
        log::info!("glove epoch {}: mean factor {mean:.6}", epoch + 1);
        report.epoch_losses.push(mean);
    }
    Ok((model, report))
}
