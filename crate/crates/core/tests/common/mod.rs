//! Brute-force oracles shared by the integration tests.
#![allow(dead_code)]

pub mod criteria;

use std::collections::HashMap;
use std::sync::Arc;

use rand::Rng;
use wordrep::brown::BigramStatistics;
use wordrep::corpus::{build_vocabulary, TaskKind};
use wordrep::repr::{EmbeddingMatrix, WordRepresentation};
use wordrep::rng::SeededRng;
use wordrep::tagger::{EncodedSentence, TaggerModel, TemplateSet};

pub const WORDS: [&str; 6] = ["Alpha", "beta", "gamma-1", "delta", "Eps", "zeta"];

pub fn all_labellings(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = vec![Vec::new()];
    for _ in 0..n {
        out = out
            .into_iter()
            .flat_map(|p| {
                (0..k).map(move |y| {
                    let mut q = p.clone();
                    q.push(y);
                    q
                })
            })
            .collect();
    }
    out
}

pub fn random_sentence(rng: &mut SeededRng, n: usize) -> Vec<String> {
    (0..n).map(|_| WORDS[rng.gen_range(0..WORDS.len())].to_string()).collect()
}

/// Random tagger over `labels` labels. With `dim`, the representation is a
/// random embedding over [`WORDS`]; otherwise one-hot.
pub fn random_tagger(rng: &mut SeededRng, labels: usize, dim: Option<usize>, templates: TemplateSet) -> TaggerModel {
    let representation = match dim {
        Some(d) => {
            let vocab = Arc::new(build_vocabulary(WORDS, 1).unwrap());
            let data = (0..vocab.len() * d).map(|_| rng.gen_range(-1.0..1.0)).collect();
            WordRepresentation::Embedding(EmbeddingMatrix::from_data(vocab, d, data).unwrap())
        }
        None => WordRepresentation::OneHot,
    };
    let mut feats = std::collections::BTreeSet::new();
    for len in 1..=3 {
        let s: Vec<&str> = WORDS.iter().copied().take(len + 2).collect();
        for t in 0..s.len() {
            feats.extend(wordrep::tagger::assemble_features(&s, t, &templates, &representation).unwrap().indicators);
        }
    }
    let names: Vec<String> = (0..labels).map(|y| format!("Y{y}")).collect();
    let mut model = TaggerModel::new(
        names,
        feats.into_iter().collect(),
        templates,
        representation,
        TaskKind::TokenClassification,
    )
    .unwrap();
    for w in model.weights_mut() {
        *w = rng.gen_range(-1.0..1.0);
    }
    model
}

/// Score computed straight from the weight vector.
pub fn oracle_score(model: &TaggerModel, enc: &EncodedSentence, labels: &[usize]) -> f64 {
    let lay = model.layout();
    let w = model.weights();
    let n = labels.len();
    let mut s = w[lay.start(labels[0])] + w[lay.stop(labels[n - 1])];
    for t in 0..n {
        let y = labels[t];
        if t > 0 {
            s += w[lay.transition(labels[t - 1], y)];
        }
        for &f in &enc.features[t] {
            s += w[lay.feature(f, y)];
        }
        if let Some(m) = model.representation().embedding() {
            let d = m.dim();
            for (slot, row) in enc.rows[t].iter().enumerate() {
                if let Some(r) = row {
                    for j in 0..d {
                        s += w[lay.dense(y, slot * d + j)] * m.row(*r)[j];
                    }
                }
            }
        }
    }
    s
}

pub fn log_sum_exp(xs: &[f64]) -> f64 {
    let m = xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    m + xs.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

pub fn brute_log_partition(model: &TaggerModel, enc: &EncodedSentence) -> f64 {
    let k = model.labels().len();
    let scores: Vec<f64> = all_labellings(enc.len(), k)
        .iter()
        .map(|l| oracle_score(model, enc, l))
        .collect();
    log_sum_exp(&scores)
}

/// First labelling (in lexicographic enumeration order) with the maximal
/// score, together with the best score.
pub fn brute_argmax(model: &TaggerModel, enc: &EncodedSentence) -> (Vec<usize>, f64) {
    let k = model.labels().len();
    let mut best = (Vec::new(), f64::NEG_INFINITY);
    for l in all_labellings(enc.len(), k) {
        let s = oracle_score(model, enc, &l);
        if s > best.1 {
            best = (l, s);
        }
    }
    best
}

/// `|a - b| / max(|a|, |b|)` over whole vectors.
pub fn relative_error(a: &[f64], b: &[f64]) -> f64 {
    let diff: f64 = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
    let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    let scale = na.max(nb);
    if scale == 0.0 {
        diff
    } else {
        diff / scale
    }
}

/// Central differences of `f` around `x` for every coordinate.
pub fn numeric_gradient(x: &mut [f64], h: f64, mut f: impl FnMut(&[f64]) -> f64) -> Vec<f64> {
    (0..x.len())
        .map(|i| {
            let orig = x[i];
            x[i] = orig + h;
            let up = f(x);
            x[i] = orig - h;
            let down = f(x);
            x[i] = orig;
            (up - down) / (2.0 * h)
        })
        .collect()
}

/// AMI from the class-bigram joint with class marginals summed from it.
pub fn oracle_ami(stats: &BigramStatistics, assignment: &[usize]) -> f64 {
    let mut joint: HashMap<(usize, usize), f64> = HashMap::new();
    let mut left: HashMap<usize, f64> = HashMap::new();
    let mut right: HashMap<usize, f64> = HashMap::new();
    let mut total = 0.0;
    for (a, b, x) in stats.bigrams() {
        *joint.entry((assignment[a], assignment[b])).or_default() += x;
        *left.entry(assignment[a]).or_default() += x;
        *right.entry(assignment[b]).or_default() += x;
        total += x;
    }
    joint
        .iter()
        .map(|(&(a, b), &x)| {
            let p = x / total;
            p * (p / ((left[&a] / total) * (right[&b] / total))).ln()
        })
        .sum()
}

/// Feature-count vector `phi` with `score = w . phi`.
pub fn oracle_phi(model: &TaggerModel, enc: &EncodedSentence, labels: &[usize]) -> Vec<f64> {
    let lay = model.layout();
    let mut phi = vec![0.0; model.weights().len()];
    let n = labels.len();
    phi[lay.start(labels[0])] += 1.0;
    phi[lay.stop(labels[n - 1])] += 1.0;
    for t in 0..n {
        let y = labels[t];
        if t > 0 {
            phi[lay.transition(labels[t - 1], y)] += 1.0;
        }
        for &f in &enc.features[t] {
            phi[lay.feature(f, y)] += 1.0;
        }
        if let Some(m) = model.representation().embedding() {
            let d = m.dim();
            for (slot, row) in enc.rows[t].iter().enumerate() {
                if let Some(r) = row {
                    for j in 0..d {
                        phi[lay.dense(y, slot * d + j)] += m.row(*r)[j];
                    }
                }
            }
        }
    }
    phi
}

/// NLL gradient by enumerating every labelling.
pub fn brute_gradient(model: &TaggerModel, enc: &EncodedSentence, gold: &[usize]) -> Vec<f64> {
    let log_z = brute_log_partition(model, enc);
    let mut grad: Vec<f64> = oracle_phi(model, enc, gold).iter().map(|x| -x).collect();
    for l in all_labellings(enc.len(), model.labels().len()) {
        let p = (oracle_score(model, enc, &l) - log_z).exp();
        for (g, x) in grad.iter_mut().zip(oracle_phi(model, enc, &l)) {
            *g += p * x;
        }
    }
    grad
}
