//! CBOW and Skip-gram with negative sampling, plus the exact softmax factor
//! for small vocabularies.
//!
//! Predicted words are scored with the output matrix; contexts (CBOW) and
//! centre words (Skip-gram) are read from the input matrix. With `K = 0`
//! training uses the exact softmax over the whole vocabulary.

use std::collections::BTreeMap;
use std::sync::Arc;

use rand::distributions::{Distribution, WeightedIndex};
use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::Vocabulary;
use crate::error::{Error, Result};
use crate::repr::{dot, extract_context, init_embeddings, ContextMode, EmbeddingMatrix, TrainReport};
use crate::rng::{seeded, SeededRng};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum W2vMode {
    Cbow,
    Skipgram,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct W2vConfig {
    pub mode: W2vMode,
    pub dim: usize,
    pub window: usize,
    /// Noise samples per prediction; 0 selects the exact softmax.
    pub negatives: usize,
    pub epochs: usize,
    /// Initial learning rate, decayed linearly to `eta0 / 100`.
    pub eta0: f64,
    pub seed: u64,
    /// Exponent applied to unigram counts for the noise distribution.
    pub noise_power: f64,
    /// Frequent-word subsampling threshold; off when `None`.
    pub subsample: Option<f64>,
}

impl W2vConfig {
    pub fn new(mode: W2vMode) -> Self {
        W2vConfig {
            mode,
            dim: 50,
            window: 5,
            negatives: 5,
            epochs: 5,
            eta0: 0.025,
            seed: 1,
            noise_power: 0.75,
            subsample: None,
        }
    }
}

/// Sparse per-row gradients for the input and output matrices.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RowGrads {
    pub input: BTreeMap<usize, Vec<f64>>,
    pub output: BTreeMap<usize, Vec<f64>>,
}

fn accumulate(map: &mut BTreeMap<usize, Vec<f64>>, row: usize, scale: f64, v: &[f64]) {
    let entry = map.entry(row).or_insert_with(|| vec![0.0; v.len()]);
    for (e, x) in entry.iter_mut().zip(v) {
        *e += scale * x;
    }
}

/// `-ln sigma(x)`, evaluated without overflow.
pub fn neg_log_sigmoid(x: f64) -> f64 {
    if x > 0.0 {
        (-x).exp().ln_1p()
    } else {
        -x + x.exp().ln_1p()
    }
}

pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

fn log_sum_exp(xs: &[f64]) -> f64 {
    let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    max + xs.iter().map(|x| (x - max).exp()).sum::<f64>().ln()
}

#[derive(Debug, Clone)]
struct NoiseTable {
    dist: Option<WeightedIndex<f64>>,
}

impl NoiseTable {
    fn new(vocab: &Vocabulary, power: f64) -> Self {
        let weights: Vec<f64> = (0..vocab.len())
            .map(|id| {
                if id == vocab.unk_id() {
                    0.0
                } else {
                    (vocab.count(id) as f64).powf(power)
                }
            })
            .collect();
        NoiseTable {
            dist: WeightedIndex::new(&weights).ok(),
        }
    }

    fn sample(&self, rng: &mut SeededRng, vocab_len: usize) -> usize {
        match &self.dist {
            Some(d) => d.sample(rng),
            None => rng.gen_range(0..vocab_len),
        }
    }
}

#[derive(Debug, Clone)]
pub struct W2vModel {
    input: EmbeddingMatrix,
    output: EmbeddingMatrix,
    mode: W2vMode,
    negatives: usize,
    noise: NoiseTable,
}

impl W2vModel {
    pub fn new(input: EmbeddingMatrix, output: EmbeddingMatrix, mode: W2vMode, negatives: usize) -> Result<Self> {
        if input.dim() != output.dim() || input.vocab() != output.vocab() {
            return Err(Error::Domain("input and output matrices must share vocabulary and dimension".into()));
        }
        let noise = NoiseTable::new(input.vocab(), 0.75);
        Ok(W2vModel {
            input,
            output,
            mode,
            negatives,
            noise,
        })
    }

    pub fn mode(&self) -> W2vMode {
        self.mode
    }

    pub fn negatives(&self) -> usize {
        self.negatives
    }

    pub fn input(&self) -> &EmbeddingMatrix {
        &self.input
    }

    pub fn output(&self) -> &EmbeddingMatrix {
        &self.output
    }

    pub fn input_mut(&mut self) -> &mut EmbeddingMatrix {
        &mut self.input
    }

    pub fn output_mut(&mut self) -> &mut EmbeddingMatrix {
        &mut self.output
    }

    /// The exported word vectors (input side).
    pub fn embeddings(&self) -> &EmbeddingMatrix {
        &self.input
    }

    pub fn into_embeddings(self) -> EmbeddingMatrix {
        self.input
    }

    fn context_mean(&self, ctx: &[usize]) -> Vec<f64> {
        let mut h = vec![0.0; self.input.dim()];
        for &c in ctx {
            for (a, x) in h.iter_mut().zip(self.input.row(c)) {
                *a += x;
            }
        }
        let n = ctx.len() as f64;
        h.iter_mut().for_each(|a| *a /= n);
        h
    }

    fn scores(&self, h: &[f64]) -> Vec<f64> {
        (0..self.output.rows()).map(|j| dot(self.output.row(j), h)).collect()
    }

    /// Softmax over the vocabulary for the prediction made at this
    /// occurrence: `p(. | ctx)` for CBOW, `p(. | w)` for Skip-gram.
    pub fn predictive_distribution(&self, w: usize, ctx: &[usize]) -> Result<Vec<f64>> {
        let h = match self.mode {
            W2vMode::Cbow => {
                if ctx.is_empty() {
                    return Err(Error::UndefinedContext);
                }
                self.context_mean(ctx)
            }
            W2vMode::Skipgram => self.input.row(w).to_vec(),
        };
        let s = self.scores(&h);
        let z = log_sum_exp(&s);
        Ok(s.iter().map(|x| (x - z).exp()).collect())
    }

    /// Exact softmax local factor. For Skip-gram this is the sum of the
    /// per-context-word factors.
    pub fn softmax_local_factor(&self, w: usize, ctx: &[usize]) -> Result<f64> {
        self.softmax_factor_impl(w, ctx, None)
    }

    pub fn softmax_loss_grad(&self, w: usize, ctx: &[usize], grads: &mut RowGrads) -> Result<f64> {
        self.softmax_factor_impl(w, ctx, Some(grads))
    }

    fn softmax_factor_impl(&self, w: usize, ctx: &[usize], mut grads: Option<&mut RowGrads>) -> Result<f64> {
        if ctx.is_empty() {
            return Err(Error::UndefinedContext);
        }
        // (hidden vector, rows feeding it with their weight, predicted word)
        let mut predictions: Vec<(Vec<f64>, Vec<(usize, f64)>, usize)> = Vec::new();
        match self.mode {
            W2vMode::Cbow => {
                let share = 1.0 / ctx.len() as f64;
                predictions.push((self.context_mean(ctx), ctx.iter().map(|&c| (c, share)).collect(), w));
            }
            W2vMode::Skipgram => {
                for &c in ctx {
                    predictions.push((self.input.row(w).to_vec(), vec![(w, 1.0)], c));
                }
            }
        }
        let mut loss = 0.0;
        for (h, sources, target) in predictions {
            let s = self.scores(&h);
            let z = log_sum_exp(&s);
            loss += z - s[target];
            if let Some(g) = grads.as_deref_mut() {
                let mut dh = vec![0.0; h.len()];
                for (j, sj) in s.iter().enumerate() {
                    let coef = (sj - z).exp() - if j == target { 1.0 } else { 0.0 };
                    accumulate(&mut g.output, j, coef, &h);
                    for (a, u) in dh.iter_mut().zip(self.output.row(j)) {
                        *a += coef * u;
                    }
                }
                for (row, weight) in sources {
                    accumulate(&mut g.input, row, weight, &dh);
                }
            }
        }
        Ok(loss)
    }

    /// Negative-sampling loss `-ln s(u_w.h) - sum_k ln s(-u_nk.h)`.
    ///
    /// CBOW uses all of `noise` against the averaged context. Skip-gram
    /// splits `noise` into `|ctx|` equal chunks, one per context word.
    pub fn negative_sampling_loss(&self, w: usize, ctx: &[usize], noise: &[usize]) -> Result<f64> {
        self.ns_impl(w, ctx, noise, None)
    }

    pub fn ns_loss_grad(&self, w: usize, ctx: &[usize], noise: &[usize], grads: &mut RowGrads) -> Result<f64> {
        self.ns_impl(w, ctx, noise, Some(grads))
    }

    fn ns_impl(&self, w: usize, ctx: &[usize], noise: &[usize], mut grads: Option<&mut RowGrads>) -> Result<f64> {
        if ctx.is_empty() {
            return Err(Error::UndefinedContext);
        }
        if noise.is_empty() {
            return Err(Error::Domain("negative sampling needs at least one noise draw".into()));
        }
        let mut pairs: Vec<(Vec<f64>, Vec<(usize, f64)>, usize, &[usize])> = Vec::new();
        match self.mode {
            W2vMode::Cbow => {
                let share = 1.0 / ctx.len() as f64;
                pairs.push((self.context_mean(ctx), ctx.iter().map(|&c| (c, share)).collect(), w, noise));
            }
            W2vMode::Skipgram => {
                if noise.len() % ctx.len() != 0 {
                    return Err(Error::Domain(format!(
                        "{} noise draws cannot be split across {} context words",
                        noise.len(),
                        ctx.len()
                    )));
                }
                let k = noise.len() / ctx.len();
                for (i, &c) in ctx.iter().enumerate() {
                    pairs.push((self.input.row(w).to_vec(), vec![(w, 1.0)], c, &noise[i * k..(i + 1) * k]));
                }
            }
        }
        let mut loss = 0.0;
        for (h, sources, target, draws) in pairs {
            let s = dot(self.output.row(target), &h);
            loss += neg_log_sigmoid(s);
            let mut dh = vec![0.0; h.len()];
            let mut terms = vec![(target, sigmoid(s) - 1.0)];
            for &n in draws {
                let sn = dot(self.output.row(n), &h);
                loss += neg_log_sigmoid(-sn);
                terms.push((n, sigmoid(sn)));
            }
            if let Some(g) = grads.as_deref_mut() {
                for (row, coef) in terms {
                    accumulate(&mut g.output, row, coef, &h);
                    for (a, u) in dh.iter_mut().zip(self.output.row(row)) {
                        *a += coef * u;
                    }
                }
                for (row, weight) in sources {
                    accumulate(&mut g.input, row, weight, &dh);
                }
            }
        }
        Ok(loss)
    }

    fn apply(&mut self, grads: &RowGrads, lr: f64) {
        for (&row, g) in &grads.input {
            for (p, x) in self.input.row_mut(row).iter_mut().zip(g) {
                *p -= lr * x;
            }
        }
        for (&row, g) in &grads.output {
            for (p, x) in self.output.row_mut(row).iter_mut().zip(g) {
                *p -= lr * x;
            }
        }
    }

    fn draw_noise(&self, rng: &mut SeededRng, avoid: usize, k: usize, out: &mut Vec<usize>) {
        let n = self.input.rows();
        for _ in 0..k {
            let mut draw = self.noise.sample(rng, n);
            for _ in 0..8 {
                if draw != avoid {
                    break;
                }
                draw = self.noise.sample(rng, n);
            }
            out.push(draw);
        }
    }
}

/// Trains CBOW or Skip-gram over sentences of word ids. Unknown-word tokens
/// are dropped before training. Single-threaded and deterministic for a
/// fixed seed.
pub fn train_w2v(
    sentences: &[Vec<usize>],
    vocab: Arc<Vocabulary>,
    cfg: &W2vConfig,
) -> Result<(W2vModel, TrainReport)> {
    if cfg.dim == 0 || cfg.window == 0 {
        return Err(Error::Domain("dimension and window must be positive".into()));
    }
    if sentences.iter().all(Vec::is_empty) {
        return Err(Error::EmptyInput("training corpus has no tokens".into()));
    }
    let mut rng = seeded(cfg.seed);
    let input = init_embeddings(vocab.clone(), cfg.dim, rng.gen());
    let output = EmbeddingMatrix::zeros(vocab.clone(), cfg.dim);
    let mut model = W2vModel::new(input, output, cfg.mode, cfg.negatives)?;
    model.noise = NoiseTable::new(&vocab, cfg.noise_power);

    let unk = vocab.unk_id();
    let corpus: Vec<Vec<usize>> = sentences
        .iter()
        .map(|s| s.iter().copied().filter(|&w| w != unk).collect::<Vec<_>>())
        .filter(|s| !s.is_empty())
        .collect();
    let mut report = TrainReport::default();
    let tokens: usize = corpus.iter().map(Vec::len).sum();
    if tokens == 0 {
        report.warn("every token is unknown; training is degenerate".into());
        return Ok((model, report));
    }

    let total_known: u64 = vocab.known_ids().map(|id| vocab.count(id)).sum();
    let keep_prob: Option<Vec<f64>> = cfg.subsample.map(|t| {
        (0..vocab.len())
            .map(|id| {
                let f = vocab.count(id) as f64 / total_known.max(1) as f64;
                if f <= 0.0 {
                    1.0
                } else {
                    ((f / t).sqrt() + 1.0) * t / f
                }
            })
            .collect()
    });

    let total_steps = (cfg.epochs * tokens).max(1) as f64;
    let mut step = 0usize;
    let mut order: Vec<usize> = (0..corpus.len()).collect();
    let mut noise = Vec::new();
    for _epoch in 0..cfg.epochs {
        order.shuffle(&mut rng);
        let mut loss_sum = 0.0;
        let mut n_factors = 0usize;
        for &si in &order {
            let kept: Vec<usize>;
            let sentence: &[usize] = match &keep_prob {
                Some(p) => {
                    kept = corpus[si].iter().copied().filter(|&w| rng.gen::<f64>() < p[w]).collect();
                    &kept
                }
                None => &corpus[si],
            };
            for pos in 0..sentence.len() {
                let lr = cfg.eta0 * (1.0 - 0.99 * step as f64 / total_steps);
                step += 1;
                let w = sentence[pos];
                let ctx = extract_context(sentence, pos, cfg.window, ContextMode::Surrounding)?;
                if ctx.is_empty() {
                    continue;
                }
                let mut grads = RowGrads::default();
                let loss = if cfg.negatives == 0 {
                    model.softmax_loss_grad(w, &ctx, &mut grads)?
                } else {
                    noise.clear();
                    match cfg.mode {
                        W2vMode::Cbow => model.draw_noise(&mut rng, w, cfg.negatives, &mut noise),
                        W2vMode::Skipgram => {
                            for &c in &ctx {
                                model.draw_noise(&mut rng, c, cfg.negatives, &mut noise);
                            }
                        }
                    }
                    model.ns_loss_grad(w, &ctx, &noise, &mut grads)?
                };
                model.apply(&grads, lr);
                loss_sum += loss;
                n_factors += 1;
            }
        }
        let mean = if n_factors > 0 { loss_sum / n_factors as f64 } else { 0.0 };
        log::info!("w2v epoch {}: mean loss {mean:.6}", report.epoch_losses.len() + 1);
        report.epoch_losses.push(mean);
    }
    if !model.input.is_finite() || !model.output.is_finite() {
        return Err(Error::Numerical {
            sentence: 0,
            message: "word2vec parameters diverged; lower eta0".into(),
        });
    }
    Ok((model, report))
}
