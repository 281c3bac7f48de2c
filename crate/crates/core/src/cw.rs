//! Window-scoring language model trained with a ranking hinge against
//! corrupted centre words.

use std::collections::BTreeMap;
use std::fs;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;
use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::Vocabulary;
use crate::error::{Error, Result};
use crate::repr::{init_embeddings, EmbeddingMatrix, TrainReport};
use crate::rng::seeded;

/// Token used to fill window slots beyond a sentence edge.
pub const PAD: &str = "<pad>";

const CHECKPOINT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CwConfig {
    pub dim: usize,
    /// Words on each side of the centre.
    pub window: usize,
    pub hidden: usize,
    pub epochs: usize,
    pub eta: f64,
    pub seed: u64,
}

impl Default for CwConfig {
    fn default() -> Self {
        CwConfig {
            dim: 50,
            window: 2,
            hidden: 50,
            epochs: 5,
            eta: 0.01,
            seed: 1,
        }
    }
}

#[inline]
fn hard_tanh(x: f64) -> f64 {
    x.clamp(-1.0, 1.0)
}

/// Derivative of hard-tanh; zero on and outside the kinks at +-1.
#[inline]
fn hard_tanh_grad(x: f64) -> f64 {
    if x > -1.0 && x < 1.0 {
        1.0
    } else {
        0.0
    }
}

/// Gradient of a loss with respect to every network parameter.
#[derive(Debug, Clone, PartialEq)]
pub struct CwGrad {
    pub embeddings: BTreeMap<usize, Vec<f64>>,
    pub hidden_w: Vec<f64>,
    pub hidden_b: Vec<f64>,
    pub out_w: Vec<f64>,
    pub out_b: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CwNetwork {
    pub embeddings: EmbeddingMatrix,
    /// `hidden x (2m+1)d`, row-major.
    pub hidden_w: Vec<f64>,
    pub hidden_b: Vec<f64>,
    pub out_w: Vec<f64>,
    pub out_b: f64,
    window: usize,
    hidden: usize,
}

struct Forward {
    x: Vec<f64>,
    pre: Vec<f64>,
    act: Vec<f64>,
    score: f64,
}

impl CwNetwork {
    pub fn zeros(vocab: Arc<Vocabulary>, dim: usize, window: usize, hidden: usize) -> Self {
        let width = (2 * window + 1) * dim;
        CwNetwork {
            embeddings: EmbeddingMatrix::zeros(vocab, dim),
            hidden_w: vec![0.0; hidden * width],
            hidden_b: vec![0.0; hidden],
            out_w: vec![0.0; hidden],
            out_b: 0.0,
            window,
            hidden,
        }
    }

    pub fn window(&self) -> usize {
        self.window
    }

    pub fn hidden(&self) -> usize {
        self.hidden
    }

    /// Width of the concatenated input layer, `(2m + 1) d`.
    pub fn input_width(&self) -> usize {
        (2 * self.window + 1) * self.embeddings.dim()
    }

    fn check_arity(&self, window: &[usize]) -> Result<()> {
        let expected = 2 * self.window + 1;
        if window.len() != expected {
            return Err(Error::Arity {
                expected,
                got: window.len(),
            });
        }
        Ok(())
    }

    fn forward(&self, window: &[usize]) -> Forward {
        let width = self.input_width();
        let mut x = Vec::with_capacity(width);
        for &id in window {
            x.extend_from_slice(self.embeddings.row(id));
        }
        let pre: Vec<f64> = (0..self.hidden)
            .map(|h| {
                let row = &self.hidden_w[h * width..(h + 1) * width];
                self.hidden_b[h] + row.iter().zip(&x).map(|(w, v)| w * v).sum::<f64>()
            })
            .collect();
        let act: Vec<f64> = pre.iter().map(|&a| hard_tanh(a)).collect();
        let score = self.out_b + self.out_w.iter().zip(&act).map(|(w, z)| w * z).sum::<f64>();
        Forward { x, pre, act, score }
    }

    /// Scalar score of a full window (left context, centre, right context).
    pub fn score(&self, window: &[usize]) -> Result<f64> {
        self.check_arity(window)?;
        Ok(self.forward(window).score)
    }

    /// Hidden-layer activations for a window.
    pub fn activations(&self, window: &[usize]) -> Result<Vec<f64>> {
        self.check_arity(window)?;
        Ok(self.forward(window).act)
    }

    fn corrupted(&self, window: &[usize], corrupt: usize) -> Result<Vec<usize>> {
        self.check_arity(window)?;
        let centre = window[self.window];
        if corrupt == centre {
            return Err(Error::CorruptEqualsCentre(corrupt));
        }
        let mut out = window.to_vec();
        out[self.window] = corrupt;
        Ok(out)
    }

    /// `max(0, 1 - f(w) + f(w'))` where `w'` replaces the centre word.
    pub fn hinge_loss(&self, window: &[usize], corrupt: usize) -> Result<f64> {
        let bad = self.corrupted(window, corrupt)?;
        Ok((1.0 - self.forward(window).score + self.forward(&bad).score).max(0.0))
    }

    /// Loss and gradient. The active branch is taken only when
    /// `1 - f(w) + f(w') > 0` strictly; at the kink the gradient is zero.
    pub fn hinge_grad(&self, window: &[usize], corrupt: usize) -> Result<(f64, CwGrad)> {
        let bad = self.corrupted(window, corrupt)?;
        let good_fw = self.forward(window);
        let bad_fw = self.forward(&bad);
        let margin = 1.0 - good_fw.score + bad_fw.score;
        let mut grad = CwGrad {
            embeddings: BTreeMap::new(),
            hidden_w: vec![0.0; self.hidden_w.len()],
            hidden_b: vec![0.0; self.hidden],
            out_w: vec![0.0; self.hidden],
            out_b: 0.0,
        };
        if margin <= 0.0 {
            return Ok((0.0, grad));
        }
        self.backprop(window, &good_fw, -1.0, &mut grad);
        self.backprop(&bad, &bad_fw, 1.0, &mut grad);
        Ok((margin, grad))
    }

    fn backprop(&self, window: &[usize], fw: &Forward, scale: f64, grad: &mut CwGrad) {
        let width = self.input_width();
        let d = self.embeddings.dim();
        grad.out_b += scale;
        let mut dx = vec![0.0; width];
        for h in 0..self.hidden {
            grad.out_w[h] += scale * fw.act[h];
            let da = scale * self.out_w[h] * hard_tanh_grad(fw.pre[h]);
            if da == 0.0 {
                continue;
            }
            grad.hidden_b[h] += da;
            let row = &self.hidden_w[h * width..(h + 1) * width];
            let grow = &mut grad.hidden_w[h * width..(h + 1) * width];
            for k in 0..width {
                grow[k] += da * fw.x[k];
                dx[k] += da * row[k];
            }
        }
        for (slot, &id) in window.iter().enumerate() {
            let entry = grad.embeddings.entry(id).or_insert_with(|| vec![0.0; d]);
            for (e, g) in entry.iter_mut().zip(&dx[slot * d..(slot + 1) * d]) {
                *e += g;
            }
        }
    }

    fn apply(&mut self, grad: &CwGrad, lr: f64) {
        for (&id, g) in &grad.embeddings {
            for (p, x) in self.embeddings.row_mut(id).iter_mut().zip(g) {
                *p -= lr * x;
            }
        }
        for (p, g) in self.hidden_w.iter_mut().zip(&grad.hidden_w) {
            *p -= lr * g;
        }
        for (p, g) in self.hidden_b.iter_mut().zip(&grad.hidden_b) {
            *p -= lr * g;
        }
        for (p, g) in self.out_w.iter_mut().zip(&grad.out_w) {
            *p -= lr * g;
        }
        self.out_b -= lr * grad.out_b;
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let ckpt = CwCheckpoint {
            format: "cw-network".into(),
            version: CHECKPOINT_VERSION,
            window: self.window,
            hidden: self.hidden,
            dim: self.embeddings.dim(),
            vocab: (**self.embeddings.vocab()).clone(),
            embeddings: self.embeddings.as_slice().to_vec(),
            hidden_w: self.hidden_w.clone(),
            hidden_b: self.hidden_b.clone(),
            out_w: self.out_w.clone(),
            out_b: self.out_b,
        };
        let mut out = BufWriter::new(fs::File::create(path)?);
        serde_json::to_writer_pretty(&mut out, &ckpt)?;
        out.flush()?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let ckpt: CwCheckpoint = serde_json::from_reader(BufReader::new(fs::File::open(path)?))?;
        if ckpt.format != "cw-network" || ckpt.version != CHECKPOINT_VERSION {
            return Err(Error::Format {
                line: 1,
                message: format!("unsupported checkpoint {} v{}", ckpt.format, ckpt.version),
            });
        }
        let embeddings = EmbeddingMatrix::from_data(Arc::new(ckpt.vocab), ckpt.dim, ckpt.embeddings)?;
        let net = CwNetwork {
            embeddings,
            hidden_w: ckpt.hidden_w,
            hidden_b: ckpt.hidden_b,
            out_w: ckpt.out_w,
            out_b: ckpt.out_b,
            window: ckpt.window,
            hidden: ckpt.hidden,
        };
        if net.hidden_w.len() != net.hidden * net.input_width() || net.hidden_b.len() != net.hidden || net.out_w.len() != net.hidden {
            return Err(Error::Format {
                line: 1,
                message: "checkpoint layer shapes are inconsistent".into(),
            });
        }
        Ok(net)
    }
}

#[derive(Serialize, Deserialize)]
struct CwCheckpoint {
    format: String,
    version: u32,
    window: usize,
    hidden: usize,
    dim: usize,
    vocab: Vocabulary,
    embeddings: Vec<f64>,
    hidden_w: Vec<f64>,
    hidden_b: Vec<f64>,
    out_w: Vec<f64>,
    out_b: f64,
}

/// Every window of every sentence, edges filled with `pad`.
pub fn windows(sentence: &[usize], m: usize, pad: usize) -> Vec<Vec<usize>> {
    (0..sentence.len())
        .map(|t| {
            (0..2 * m + 1)
                .map(|k| {
                    let pos = t as isize + k as isize - m as isize;
                    if pos < 0 || pos as usize >= sentence.len() {
                        pad
                    } else {
                        sentence[pos as usize]
                    }
                })
                .collect()
        })
        .collect()
}

/// Trains the network with uniformly sampled corruptions. The vocabulary is
/// extended with [`PAD`]; the returned network's embedding matrix carries
/// the extended vocabulary.
pub fn train_cw(sentences: &[Vec<usize>], vocab: Arc<Vocabulary>, cfg: &CwConfig) -> Result<(CwNetwork, TrainReport)> {
    if cfg.dim == 0 || cfg.hidden == 0 {
        return Err(Error::Domain("dimension and hidden size must be positive".into()));
    }
    let tokens: usize = sentences.iter().map(Vec::len).sum();
    if tokens < 2 * cfg.window + 1 {
        return Err(Error::Degenerate(format!(
            "corpus has {tokens} tokens, fewer than one window of {}",
            2 * cfg.window + 1
        )));
    }
    let ext = Arc::new(vocab.with_token(PAD));
    let pad = ext.get(PAD).expect("pad was just added");
    let candidates: Vec<usize> = ext.known_ids().filter(|&id| id != pad).collect();
    if candidates.len() < 2 {
        return Err(Error::Degenerate("need at least two word types to corrupt windows".into()));
    }

    let mut rng = seeded(cfg.seed);
    let mut net = CwNetwork::zeros(ext.clone(), cfg.dim, cfg.window, cfg.hidden);
    net.embeddings = init_embeddings(ext, cfg.dim, rng.gen());
    let fan_in = 1.0 / (net.input_width() as f64).sqrt();
    net.hidden_w.iter_mut().for_each(|w| *w = rng.gen_range(-fan_in..fan_in));
    net.hidden_b.iter_mut().for_each(|b| *b = rng.gen_range(-1.0..1.0));
    let fan_h = 1.0 / (cfg.hidden as f64).sqrt();
    net.out_w.iter_mut().for_each(|w| *w = rng.gen_range(-fan_h..fan_h));

    let mut all: Vec<Vec<usize>> = sentences.iter().flat_map(|s| windows(s, cfg.window, pad)).collect();
    let mut report = TrainReport::default();
    for _ in 0..cfg.epochs {
        all.shuffle(&mut rng);
        let mut total = 0.0;
        for win in &all {
            let centre = win[cfg.window];
            let corrupt = loop {
                let c = candidates[rng.gen_range(0..candidates.len())];
                if c != centre {
                    break c;
                }
            };
            let (loss, grad) = net.hinge_grad(win, corrupt)?;
            total += loss;
            if loss > 0.0 {
                net.apply(&grad, cfg.eta);
            }
        }
        let mean = total / all.len() as f64;
        if !mean.is_finite() {
            return Err(Error::Numerical {
                sentence: 0,
                message: "C&W training diverged".into(),
            });
        }
        log::info!("cw epoch {}: mean hinge {mean:.6}", report.epoch_losses.len() + 1);
        report.epoch_losses.push(mean);
    }
    Ok((net, report))
}
