//! Linear-chain inference over precomputed potentials.

use crate::error::{Error, Result};

pub(crate) fn log_sum_exp(xs: impl Iterator<Item = f64> + Clone) -> f64 {
    let max = xs.clone().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    max + xs.map(|x| (x - max).exp()).sum::<f64>().ln()
}

/// Log-potentials of one sentence: emissions `n x |Y|`, transitions
/// `|Y| x |Y|` (row = previous label) and start/stop vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct Potentials {
    pub len: usize,
    pub labels: usize,
    pub emissions: Vec<f64>,
    pub transitions: Vec<f64>,
    pub start: Vec<f64>,
    pub stop: Vec<f64>,
}

/// Node and edge marginals plus `log Z`.
#[derive(Debug, Clone, PartialEq)]
pub struct Marginals {
    pub log_z: f64,
    /// `n x |Y|`.
    pub nodes: Vec<f64>,
    /// `(n - 1) x |Y| x |Y|`; entry `t` couples positions `t` and `t + 1`.
    pub edges: Vec<f64>,
}

impl Potentials {
    #[inline]
    pub fn emission(&self, t: usize, y: usize) -> f64 {
        self.emissions[t * self.labels + y]
    }

    #[inline]
    pub fn transition(&self, from: usize, to: usize) -> f64 {
        self.transitions[from * self.labels + to]
    }

    pub fn score(&self, labels: &[usize]) -> Result<f64> {
        if labels.len() != self.len {
            return Err(Error::Domain(format!(
                "{} labels for a sentence of length {}",
                labels.len(),
                self.len
            )));
        }
        if let Some(&bad) = labels.iter().find(|&&y| y >= self.labels) {
            return Err(Error::Domain(format!("label id {bad} out of range")));
        }
        if self.len == 0 {
            return Ok(0.0);
        }
        let mut s = self.start[labels[0]] + self.stop[labels[self.len - 1]];
        for (t, &y) in labels.iter().enumerate() {
            s += self.emission(t, y);
            if t > 0 {
                s += self.transition(labels[t - 1], y);
            }
        }
        Ok(s)
    }

    fn forward(&self) -> Vec<f64> {
        let k = self.labels;
        let mut alpha = vec![0.0; self.len * k];
        for y in 0..k {
            alpha[y] = self.start[y] + self.emission(0, y);
        }
        for t in 1..self.len {
            for y in 0..k {
                let prev = &alpha[(t - 1) * k..t * k];
                alpha[t * k + y] = log_sum_exp((0..k).map(|p| prev[p] + self.transition(p, y))) + self.emission(t, y);
            }
        }
        alpha
    }

    fn backward(&self) -> Vec<f64> {
        let k = self.labels;
        let n = self.len;
        let mut beta = vec![0.0; n * k];
        beta[(n - 1) * k..].copy_from_slice(&self.stop);
        for t in (0..n - 1).rev() {
            for y in 0..k {
                let next = &beta[(t + 1) * k..(t + 2) * k];
                beta[t * k + y] =
                    log_sum_exp((0..k).map(|q| self.transition(y, q) + self.emission(t + 1, q) + next[q]));
            }
        }
        beta
    }

    /// `log` of the sum of `exp(score)` over all labellings.
    pub fn log_partition(&self) -> Result<f64> {
        if self.len == 0 {
            return Err(Error::EmptyInput("cannot normalize an empty sentence".into()));
        }
        let alpha = self.forward();
        let k = self.labels;
        let last = &alpha[(self.len - 1) * k..];
        Ok(log_sum_exp((0..k).map(|y| last[y] + self.stop[y])))
    }

    pub fn marginals(&self) -> Result<Marginals> {
        let log_z = self.log_partition()?;
        let alpha = self.forward();
        let beta = self.backward();
        let k = self.labels;
        let nodes = alpha.iter().zip(&beta).map(|(a, b)| (a + b - log_z).exp()).collect();
        let mut edges = vec![0.0; self.len.saturating_sub(1) * k * k];
        for t in 1..self.len {
            for i in 0..k {
                for j in 0..k {
                    edges[(t - 1) * k * k + i * k + j] = (alpha[(t - 1) * k + i]
                        + self.transition(i, j)
                        + self.emission(t, j)
                        + beta[t * k + j]
                        - log_z)
                        .exp();
                }
            }
        }
        Ok(Marginals { log_z, nodes, edges })
    }

    /// Highest-scoring labelling. Ties go to the lowest label id, both at
    /// each backpointer and at the final position.
    pub fn viterbi(&self) -> Result<Vec<usize>> {
        self.viterbi_masked(None)
    }

    /// Viterbi with an optional `allowed(prev, next)` transition mask; `prev`
    /// is `None` at the sentence start.
    pub fn viterbi_masked(&self, allowed: Option<&dyn Fn(Option<usize>, usize) -> bool>) -> Result<Vec<usize>> {
        if self.len == 0 {
            return Err(Error::EmptyInput("cannot decode an empty sentence".into()));
        }
        let k = self.labels;
        let ok = |p: Option<usize>, y: usize| allowed.map_or(true, |f| f(p, y));
        let mut delta = vec![f64::NEG_INFINITY; self.len * k];
        let mut back = vec![0usize; self.len * k];
        for y in 0..k {
            if ok(None, y) {
                delta[y] = self.start[y] + self.emission(0, y);
            }
        }
        for t in 1..self.len {
            for y in 0..k {
                let mut best = f64::NEG_INFINITY;
                let mut arg = 0;
                for p in 0..k {
                    if !ok(Some(p), y) {
                        continue;
                    }
                    let v = delta[(t - 1) * k + p] + self.transition(p, y);
                    if v > best {
                        best = v;
                        arg = p;
                    }
                }
                delta[t * k + y] = best + self.emission(t, y);
                back[t * k + y] = arg;
            }
        }
        let mut best = f64::NEG_INFINITY;
        let mut arg = 0;
        for y in 0..k {
            let v = delta[(self.len - 1) * k + y] + self.stop[y];
            if v > best {
                best = v;
                arg = y;
            }
        }
        let mut path = vec![0; self.len];
        path[self.len - 1] = arg;
        for t in (1..self.len).rev() {
            path[t - 1] = back[t * k + path[t]];
        }
        Ok(path)
    }
}
