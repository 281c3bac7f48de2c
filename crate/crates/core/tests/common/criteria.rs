//! One check per acceptance criterion. Each returns a short summary on
//! success and the first violation otherwise.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;

use rand::Rng;
use wordrep::brown::{brown_cluster, class_bigram_likelihood, BigramStatistics, Strategy};
use wordrep::corpus::{build_vocabulary, repair_iob, LabelledDataset, Vocabulary};
use wordrep::cw::CwNetwork;
use wordrep::eval::{
    oov_accuracy, partition_learning_curve, random_search, span_f1, token_accuracy, two_stage_updating_search,
    updating_grid, CurveRun, Dimension, Params, SearchSpace,
};
use wordrep::glove::{train_glove, CooccurrenceTable, GloveConfig, GloveModel};
use wordrep::repr::{init_embeddings, EmbeddingMatrix, WordRepresentation};
use wordrep::rng::{seeded, SeededRng};
use wordrep::synth::{planted_two_class_corpus, LatentClassTask};
use wordrep::tagger::{train_tagger, TaggerConfig, TemplateSet};
use wordrep::w2v::{train_w2v, RowGrads, W2vConfig, W2vMode, W2vModel};

use super::*;

pub type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn close(a: f64, b: f64, rel: f64) -> bool {
    (a - b).abs() <= rel * b.abs().max(1.0)
}

pub fn small_templates() -> TemplateSet {
    let mut t = TemplateSet::from_mask("lowercase,shape").unwrap();
    t.offsets = vec![-1, 0, 1];
    t.rep_offsets = vec![-1, 0, 1];
    t
}

pub fn crf_correctness() -> Outcome {
    let mut rng = seeded(12);
    let mut worst = 0.0f64;
    for case in 0..200 {
        let k = rng.gen_range(1..=4);
        let n = rng.gen_range(1..=4);
        let dim = if case % 2 == 0 { Some(2) } else { None };
        let model = random_tagger(&mut rng, k, dim, small_templates());
        let s = random_sentence(&mut rng, n);
        let enc = model.encode(&s).unwrap();
        let pot = model.potentials(&enc);
        let log_z = pot.log_partition().map_err(|e| e.to_string())?;
        let brute = brute_log_partition(&model, &enc);
        worst = worst.max((log_z - brute).abs() / brute.abs().max(1.0));
        ensure(close(log_z, brute, 1e-8), || format!("case {case}: log Z {log_z} vs enumeration {brute}"))?;
        let (best, _) = brute_argmax(&model, &enc);
        let decoded = pot.viterbi().map_err(|e| e.to_string())?;
        ensure(decoded == best, || format!("case {case}: Viterbi {decoded:?} vs argmax {best:?}"))?;
    }
    Ok(format!("200 models, max relative log Z error {worst:.1e}, every Viterbi path exact"))
}

/// Weight and embedding-row gradients of the CRF in updating mode.
pub fn crf_gradient_check(points: usize) -> Result<f64, String> {
    let mut rng = seeded(16);
    let mut worst = 0.0f64;
    for point in 0..points {
        let mut model = random_tagger(&mut rng, 3, Some(3), small_templates());
        model.update_representations = true;
        let s = random_sentence(&mut rng, 3);
        let gold: Vec<String> = (0..3).map(|_| format!("Y{}", rng.gen_range(0..3))).collect();
        let ex = model.example(0, &s, &gold).unwrap();
        let g = model.crf_gradient(&[ex]).unwrap();

        let mut weights = model.weights().to_vec();
        let numeric = numeric_gradient(&mut weights, 1e-5, |w| {
            let mut m = model.clone();
            m.weights_mut().copy_from_slice(w);
            m.nll(&s, &gold).unwrap()
        });
        let err = relative_error(g.as_dense(), &numeric);
        ensure(err < 1e-4, || format!("point {point}: weight error {err}"))?;
        worst = worst.max(err);

        let emb = model.representation().embedding().unwrap().clone();
        let d = emb.dim();
        let mut data = emb.as_slice().to_vec();
        let numeric_rows = numeric_gradient(&mut data, 1e-5, |x| {
            let mut m = model.clone();
            m.representation_mut().embedding_mut().unwrap().as_mut_slice().copy_from_slice(x);
            m.nll(&s, &gold).unwrap()
        });
        let mut analytic_rows = vec![0.0; data.len()];
        for (&r, v) in &g.rows {
            analytic_rows[r * d..(r + 1) * d].copy_from_slice(v);
        }
        let err = relative_error(&analytic_rows, &numeric_rows);
        ensure(err < 1e-4, || format!("point {point}: row error {err}"))?;
        worst = worst.max(err);
        for r in 0..emb.rows() {
            if !g.rows.contains_key(&r) {
                ensure(numeric_rows[r * d..(r + 1) * d].iter().all(|x| x.abs() < 1e-9), || {
                    format!("point {point}: row {r} has a numeric gradient but no analytic entry")
                })?;
            }
        }
    }
    Ok(worst)
}

pub fn numbered_vocab(n: usize) -> Arc<Vocabulary> {
    let words: Vec<String> = (0..n).map(|i| format!("w{i}")).collect();
    Arc::new(build_vocabulary(words.iter().map(String::as_str), 1).unwrap())
}

fn random_matrix(rng: &mut SeededRng, v: &Arc<Vocabulary>, d: usize) -> EmbeddingMatrix {
    let data = (0..v.len() * d).map(|_| rng.gen_range(-0.8..0.8)).collect();
    EmbeddingMatrix::from_data(v.clone(), d, data).unwrap()
}

fn scatter(grads: &BTreeMap<usize, Vec<f64>>, rows: usize, d: usize) -> Vec<f64> {
    let mut out = vec![0.0; rows * d];
    for (&r, g) in grads {
        out[r * d..(r + 1) * d].copy_from_slice(g);
    }
    out
}

/// Negative sampling, or the full softmax when `negative_sampling` is off.
pub fn w2v_gradient_check(mode: W2vMode, negative_sampling: bool) -> Result<f64, String> {
    let mut rng = seeded(21);
    let v = numbered_vocab(7);
    let d = 4;
    let mut worst = 0.0f64;
    for point in 0..10 {
        let input = random_matrix(&mut rng, &v, d);
        let output = random_matrix(&mut rng, &v, d);
        let model = W2vModel::new(input, output, mode, if negative_sampling { 2 } else { 0 }).unwrap();
        let w = rng.gen_range(1..v.len());
        let ctx: Vec<usize> = (0..3).map(|_| rng.gen_range(1..v.len())).collect();
        let noise_len = match mode {
            W2vMode::Cbow => 2,
            W2vMode::Skipgram => 2 * ctx.len(),
        };
        let noise: Vec<usize> = (0..noise_len).map(|_| rng.gen_range(1..v.len())).collect();
        let loss_of = |m: &W2vModel| {
            if negative_sampling {
                m.negative_sampling_loss(w, &ctx, &noise).unwrap()
            } else {
                m.softmax_local_factor(w, &ctx).unwrap()
            }
        };
        let mut grads = RowGrads::default();
        let loss = if negative_sampling {
            model.ns_loss_grad(w, &ctx, &noise, &mut grads).unwrap()
        } else {
            model.softmax_loss_grad(w, &ctx, &mut grads).unwrap()
        };
        ensure((loss - loss_of(&model)).abs() < 1e-12, || format!("point {point}: loss mismatch"))?;

        let n = v.len() * d;
        let mut params: Vec<f64> = model.input().as_slice().iter().chain(model.output().as_slice()).copied().collect();
        let numeric = numeric_gradient(&mut params, 1e-6, |p| {
            let mut m = model.clone();
            m.input_mut().as_mut_slice().copy_from_slice(&p[..n]);
            m.output_mut().as_mut_slice().copy_from_slice(&p[n..]);
            loss_of(&m)
        });
        let mut analytic = scatter(&grads.input, v.len(), d);
        analytic.extend(scatter(&grads.output, v.len(), d));
        let err = relative_error(&analytic, &numeric);
        ensure(err < 1e-4, || format!("{mode:?} point {point}: {err}"))?;
        worst = worst.max(err);
    }
    Ok(worst)
}

pub fn glove_gradient_check() -> Result<f64, String> {
    let mut rng = seeded(22);
    let v = numbered_vocab(5);
    let d = 3;
    let mut worst = 0.0f64;
    for point in 0..10 {
        let mut m = GloveModel::zeros(v.clone(), d);
        m.main = random_matrix(&mut rng, &v, d);
        m.context = random_matrix(&mut rng, &v, d);
        m.main_bias = (0..v.len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        m.context_bias = (0..v.len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let i = rng.gen_range(0..v.len());
        let j = (i + rng.gen_range(1..v.len())) % v.len();
        let x = rng.gen_range(0.5..200.0);
        let (loss, g) = m.factor_grad(i, j, x).unwrap();
        ensure((loss - m.local_factor(i, j, x).unwrap()).abs() < 1e-12, || format!("point {point}: loss mismatch"))?;

        let mut p: Vec<f64> = m.main.row(i).iter().chain(m.context.row(j)).copied().collect();
        p.push(m.main_bias[i]);
        p.push(m.context_bias[j]);
        let numeric = numeric_gradient(&mut p, 1e-6, |p| {
            let mut q = m.clone();
            q.main.row_mut(i).copy_from_slice(&p[..d]);
            q.context.row_mut(j).copy_from_slice(&p[d..2 * d]);
            q.main_bias[i] = p[2 * d];
            q.context_bias[j] = p[2 * d + 1];
            q.local_factor(i, j, x).unwrap()
        });
        let mut analytic: Vec<f64> = g.main.iter().chain(&g.context).copied().collect();
        analytic.push(g.main_bias);
        analytic.push(g.context_bias);
        let err = relative_error(&analytic, &numeric);
        ensure(err < 1e-4, || format!("point {point}: {err}"))?;
        worst = worst.max(err);
    }
    Ok(worst)
}

fn cw_params(net: &CwNetwork) -> Vec<f64> {
    let mut p = net.embeddings.as_slice().to_vec();
    p.extend(&net.hidden_w);
    p.extend(&net.hidden_b);
    p.extend(&net.out_w);
    p.push(net.out_b);
    p
}

fn set_cw_params(net: &mut CwNetwork, p: &[f64]) {
    let mut at = 0;
    let mut take = |dst: &mut [f64]| {
        dst.copy_from_slice(&p[at..at + dst.len()]);
        at += dst.len();
    };
    take(net.embeddings.as_mut_slice());
    take(&mut net.hidden_w);
    take(&mut net.hidden_b);
    take(&mut net.out_w);
    net.out_b = p[at];
}

fn pre_activations(net: &CwNetwork, window: &[usize]) -> Vec<f64> {
    let x: Vec<f64> = window.iter().flat_map(|&w| net.embeddings.row(w).to_vec()).collect();
    let width = x.len();
    (0..net.hidden())
        .map(|k| net.hidden_b[k] + net.hidden_w[k * width..(k + 1) * width].iter().zip(&x).map(|(a, b)| a * b).sum::<f64>())
        .collect()
}

/// Points near the hinge or hard-tanh kinks are redrawn.
pub fn cw_gradient_check() -> Result<f64, String> {
    let mut rng = seeded(23);
    let v = numbered_vocab(6);
    let (d, m, h) = (3, 1, 4);
    let mut checked = 0;
    let mut worst = 0.0f64;
    while checked < 10 {
        let mut net = CwNetwork::zeros(v.clone(), d, m, h);
        let mut p = cw_params(&net);
        for x in p.iter_mut() {
            *x = rng.gen_range(-0.6..0.6);
        }
        set_cw_params(&mut net, &p);
        let window: Vec<usize> = (0..2 * m + 1).map(|_| rng.gen_range(0..v.len())).collect();
        let corrupt = rng.gen_range(0..v.len());
        if corrupt == window[m] {
            continue;
        }
        let mut bad = window.clone();
        bad[m] = corrupt;
        let loss = net.hinge_loss(&window, corrupt).unwrap();
        let near_kink = |w: &[usize]| pre_activations(&net, w).iter().any(|a| (a.abs() - 1.0).abs() < 1e-3);
        if loss < 1e-3 || near_kink(&window) || near_kink(&bad) {
            continue;
        }
        let (l2, g) = net.hinge_grad(&window, corrupt).unwrap();
        ensure((loss - l2).abs() < 1e-12, || format!("point {checked}: loss mismatch"))?;
        let numeric = numeric_gradient(&mut p, 1e-6, |q| {
            let mut n2 = net.clone();
            set_cw_params(&mut n2, q);
            n2.hinge_loss(&window, corrupt).unwrap()
        });
        let mut analytic = scatter(&g.embeddings, v.len(), d);
        analytic.extend(&g.hidden_w);
        analytic.extend(&g.hidden_b);
        analytic.extend(&g.out_w);
        analytic.push(g.out_b);
        let err = relative_error(&analytic, &numeric);
        ensure(err < 1e-4, || format!("point {checked}: {err}"))?;
        worst = worst.max(err);
        checked += 1;
    }
    Ok(worst)
}

pub fn gradient_suite() -> Outcome {
    let crf = crf_gradient_check(10)?;
    let cbow = w2v_gradient_check(W2vMode::Cbow, true)?;
    let sg = w2v_gradient_check(W2vMode::Skipgram, true)?;
    let glove = glove_gradient_check()?;
    let cw = cw_gradient_check()?;
    Ok(format!(
        "max relative error: crf {crf:.1e}, ns-cbow {cbow:.1e}, ns-skipgram {sg:.1e}, glove {glove:.1e}, cw {cw:.1e}"
    ))
}

pub fn glove_planted_recovery() -> Outcome {
    let mut rng = seeded(42);
    let words: Vec<String> = (0..20).map(|i| format!("t{i:02}")).collect();
    let vocab = Arc::new(build_vocabulary(words.iter().map(String::as_str), 1).unwrap());
    let d = 5;
    let u: Vec<Vec<f64>> = (0..vocab.len()).map(|_| (0..d).map(|_| rng.gen_range(-0.5..0.5)).collect()).collect();
    let c: Vec<f64> = (0..vocab.len()).map(|_| rng.gen_range(0.0..1.5)).collect();
    let mut entries = Vec::new();
    for i in vocab.known_ids() {
        for j in vocab.known_ids() {
            let x = (u[i].iter().zip(&u[j]).map(|(a, b)| a * b).sum::<f64>() + c[i] + c[j]).exp();
            entries.push(((i, j), x));
        }
    }
    let table = CooccurrenceTable::from_entries(entries, 1, true).unwrap();
    let cfg = GloveConfig {
        dim: d,
        epochs: 500,
        ..GloveConfig::default()
    };
    let (model, _) = train_glove(&table, vocab, &cfg).map_err(|e| e.to_string())?;
    let factor = model.mean_factor(&table).unwrap();
    ensure(factor < 1e-3, || format!("mean weighted factor {factor:.3e} after 500 epochs"))?;
    Ok(format!("mean weighted factor {factor:.2e} after 500 epochs"))
}

pub fn random_corpus(rng: &mut SeededRng, v: usize, sentences: usize) -> Vec<Vec<usize>> {
    (0..sentences)
        .map(|_| {
            let len = rng.gen_range(1..12);
            (0..len).map(|_| rng.gen_range(0..v)).collect()
        })
        .collect()
}

fn assignment_of(nodes: &HashMap<usize, Vec<usize>>, vocab_len: usize) -> Vec<usize> {
    let mut a = vec![0; vocab_len];
    let mut keys: Vec<&usize> = nodes.keys().collect();
    keys.sort();
    for (c, k) in keys.into_iter().enumerate() {
        for &w in &nodes[k] {
            a[w] = c;
        }
    }
    a
}

/// Every greedy merge against the brute-force minimum AMI loss.
pub fn brown_merges_exact(corpora: usize) -> Result<usize, String> {
    let mut rng = seeded(31);
    let mut merges = 0;
    for corpus_no in 0..corpora {
        let v = rng.gen_range(3..=12);
        let sentences = random_corpus(&mut rng, v, 30);
        let stats = BigramStatistics::from_sentences(&sentences, v);
        let h = brown_cluster(&stats, 1, Strategy::Exact).map_err(|e| e.to_string())?;
        let mut nodes: HashMap<usize, Vec<usize>> =
            h.leaves().iter().enumerate().map(|(i, &w)| (i, vec![w])).collect();
        for (step, m) in h.merges().iter().enumerate() {
            let current = oracle_ami(&stats, &assignment_of(&nodes, v));
            let mut ids: Vec<usize> = nodes.keys().copied().collect();
            ids.sort();
            let mut losses = Vec::new();
            for (x, &a) in ids.iter().enumerate() {
                for &b in &ids[x + 1..] {
                    let mut trial = nodes.clone();
                    let moved = trial.remove(&b).unwrap();
                    trial.get_mut(&a).unwrap().extend(moved);
                    losses.push(((a, b), current - oracle_ami(&stats, &assignment_of(&trial, v))));
                }
            }
            let min = losses.iter().map(|l| l.1).fold(f64::INFINITY, f64::min);
            let chosen = losses
                .iter()
                .find(|l| l.0 == (m.left, m.right))
                .ok_or_else(|| format!("corpus {corpus_no} step {step}: merged pair is not active"))?
                .1;
            ensure((chosen - min).abs() < 1e-9, || {
                format!("corpus {corpus_no} step {step}: chose loss {chosen}, minimum {min}")
            })?;
            ensure((m.loss - chosen).abs() < 1e-9, || format!("corpus {corpus_no} step {step}: recorded loss"))?;
            let mut merged = nodes.remove(&m.left).unwrap();
            merged.extend(nodes.remove(&m.right).unwrap());
            nodes.insert(m.node, merged);
            merges += 1;
        }
    }
    Ok(merges)
}

/// The b = 2 cut against the likelihood of all 7 bipartitions of the
/// planted corpus's four words.
pub fn brown_planted_partition() -> Result<(), String> {
    let sentences = planted_two_class_corpus(300, 12, 0.1, 5);
    let vocab = build_vocabulary(sentences.iter().flatten().map(String::as_str), 1).unwrap();
    let ids = vocab.encode_all(&sentences);
    let stats = BigramStatistics::from_sentences(&ids, vocab.len());
    let h = brown_cluster(&stats, 2, Strategy::Exact).map_err(|e| e.to_string())?;
    let found: BTreeSet<BTreeSet<&str>> =
        h.members().iter().map(|c| c.iter().map(|&w| vocab.word(w)).collect()).collect();
    let planted: BTreeSet<BTreeSet<&str>> =
        [["a", "b"], ["c", "d"]].iter().map(|c| c.iter().copied().collect()).collect();
    ensure(found == planted, || format!("cut {found:?} differs from planted {planted:?}"))?;

    let words: Vec<usize> = ["a", "b", "c", "d"].iter().map(|w| vocab.get(w).unwrap()).collect();
    let mut best = (f64::NEG_INFINITY, 0u32);
    // the first word stays in class 0, so masks 1..8 are the 7 bipartitions
    for mask in 1u32..8 {
        let mut a = vec![0; vocab.len()];
        for (bit, &w) in words[1..].iter().enumerate() {
            a[w] = ((mask >> bit) & 1) as usize;
        }
        let ll = class_bigram_likelihood(&stats, &a).unwrap();
        if ll > best.0 {
            best = (ll, mask);
        }
    }
    ensure(best.1 == 0b110, || format!("most likely bipartition is mask {:03b}", best.1))
}

pub fn brown_exactness() -> Outcome {
    let merges = brown_merges_exact(50)?;
    brown_planted_partition()?;
    Ok(format!("{merges} merges over 50 corpora match brute force; planted cut is the best of 7 bipartitions"))
}

fn word_bigram_ll(sentences: &[Vec<usize>], v: usize) -> f64 {
    let mut big: HashMap<(usize, usize), f64> = HashMap::new();
    let mut row = vec![0.0; v];
    let mut start = vec![0.0; v];
    for s in sentences.iter().filter(|s| !s.is_empty()) {
        start[s[0]] += 1.0;
        for p in s.windows(2) {
            *big.entry((p[0], p[1])).or_default() += 1.0;
            row[p[0]] += 1.0;
        }
    }
    let n_start: f64 = start.iter().sum();
    let mut ll = 0.0;
    for s in sentences.iter().filter(|s| !s.is_empty()) {
        ll += (start[s[0]] / n_start).ln();
        for p in s.windows(2) {
            ll += (big[&(p[0], p[1])] / row[p[0]]).ln();
        }
    }
    ll
}

fn unigram_ll(sentences: &[Vec<usize>], v: usize) -> f64 {
    let mut c = vec![0.0; v];
    for &w in sentences.iter().flatten() {
        c[w] += 1.0;
    }
    let n: f64 = c.iter().sum();
    sentences.iter().flatten().map(|&w| (c[w] / n).ln()).sum()
}

pub fn degenerate_likelihoods() -> Outcome {
    let mut rng = seeded(32);
    let mut worst = 0.0f64;
    for case in 0..20 {
        let v = rng.gen_range(2..30);
        let sentences = random_corpus(&mut rng, v, 80);
        let tokens: usize = sentences.iter().map(Vec::len).sum();
        ensure(tokens <= 1000, || format!("case {case}: corpus has {tokens} tokens"))?;
        let stats = BigramStatistics::from_sentences(&sentences, v);
        let identity: Vec<usize> = (0..v).collect();
        for (assignment, oracle, what) in [
            (identity, word_bigram_ll(&sentences, v), "per-word classes"),
            (vec![0; v], unigram_ll(&sentences, v), "one class"),
        ] {
            let got = class_bigram_likelihood(&stats, &assignment).unwrap();
            worst = worst.max((got - oracle).abs() / oracle.abs().max(1.0));
            ensure(close(got, oracle, 1e-10), || format!("case {case}, {what}: {got} vs {oracle}"))?;
        }
    }
    Ok(format!("20 corpora, max relative difference {worst:.1e}"))
}

const TAGS: [&str; 5] = ["O", "B-NP", "I-NP", "B-VP", "I-VP"];

fn random_iob(rng: &mut SeededRng, n: usize) -> Vec<String> {
    let raw: Vec<&str> = (0..n).map(|_| TAGS[rng.gen_range(0..TAGS.len())]).collect();
    repair_iob(&raw).unwrap()
}

pub fn random_tag_case(rng: &mut SeededRng) -> (Vec<Vec<String>>, Vec<Vec<String>>) {
    let sentences = rng.gen_range(1..5);
    let mut gold = Vec::new();
    let mut pred = Vec::new();
    for _ in 0..sentences {
        let n = rng.gen_range(1..10);
        gold.push(random_iob(rng, n));
        pred.push(random_iob(rng, n));
    }
    (gold, pred)
}

/// Spans collected by scanning for each `B-` and walking its `I-` tail.
fn oracle_spans(tags: &[String]) -> HashSet<(usize, usize, String)> {
    let mut out = HashSet::new();
    for (i, t) in tags.iter().enumerate() {
        if let Some(kind) = t.strip_prefix("B-") {
            let mut end = i;
            while end + 1 < tags.len() && tags[end + 1] == format!("I-{kind}") {
                end += 1;
            }
            out.insert((i, end, kind.to_string()));
        }
    }
    out
}

pub fn oracle_prf(gold: &[Vec<String>], pred: &[Vec<String>]) -> (f64, f64, f64) {
    let (mut g, mut p, mut c) = (0.0, 0.0, 0.0);
    for (gs, ps) in gold.iter().zip(pred) {
        let a = oracle_spans(gs);
        let b = oracle_spans(ps);
        g += a.len() as f64;
        p += b.len() as f64;
        c += a.intersection(&b).count() as f64;
    }
    let prec = if p > 0.0 { c / p } else { 0.0 };
    let rec = if g > 0.0 { c / g } else { 0.0 };
    let f = if prec + rec > 0.0 { 2.0 * prec * rec / (prec + rec) } else { 0.0 };
    (prec, rec, f)
}

pub fn token_accuracy_oracle(cases: usize) -> Result<(), String> {
    let mut rng = seeded(51);
    for case in 0..cases {
        let (gold, pred) = random_tag_case(&mut rng);
        let (mut hits, mut total) = (0usize, 0usize);
        for (g, p) in gold.iter().zip(&pred) {
            for i in 0..g.len() {
                total += 1;
                hits += usize::from(g[i] == p[i]);
            }
        }
        let got = token_accuracy(&gold, &pred).unwrap();
        ensure(got == hits as f64 / total as f64, || format!("case {case}: accuracy {got}"))?;
    }
    Ok(())
}

pub fn span_f1_oracle(cases: usize) -> Result<(), String> {
    let mut rng = seeded(52);
    for case in 0..cases {
        let (gold, pred) = random_tag_case(&mut rng);
        let s = span_f1(&gold, &pred).unwrap();
        let (p, r, f) = oracle_prf(&gold, &pred);
        ensure(
            (s.precision - p).abs() < 1e-12 && (s.recall - r).abs() < 1e-12 && (s.f1 - f).abs() < 1e-12,
            || format!("case {case}: ({}, {}, {}) vs oracle ({p}, {r}, {f})", s.precision, s.recall, s.f1),
        )?;
    }
    Ok(())
}

pub fn oov_accuracy_oracle(cases: usize) -> Result<(), String> {
    let mut rng = seeded(53);
    let words = ["w0", "w1", "w2", "w3", "w4", "w5"];
    for case in 0..cases {
        let (gold, pred) = random_tag_case(&mut rng);
        let sentences: Vec<Vec<String>> = gold
            .iter()
            .map(|s| s.iter().map(|_| words[rng.gen_range(0..words.len())].to_string()).collect())
            .collect();
        let known: HashSet<String> = words.iter().filter(|_| rng.gen_bool(0.5)).map(|w| w.to_string()).collect();
        let (mut hits, mut total) = (0usize, 0usize);
        for ((s, g), p) in sentences.iter().zip(&gold).zip(&pred) {
            for i in 0..s.len() {
                if !known.contains(&s[i]) {
                    total += 1;
                    hits += usize::from(g[i] == p[i]);
                }
            }
        }
        let expect = (total > 0).then(|| hits as f64 / total as f64);
        let got = oov_accuracy(&sentences, &gold, &pred, &known).unwrap();
        ensure(got == (expect, total), || format!("case {case}: {got:?} vs ({expect:?}, {total})"))?;
    }
    Ok(())
}

pub fn metric_oracles() -> Outcome {
    token_accuracy_oracle(500)?;
    span_f1_oracle(500)?;
    oov_accuracy_oracle(500)?;
    Ok("500 cases each for token accuracy, span F1 and OOV accuracy".into())
}

pub fn search_space(seed: u64, draws: usize) -> SearchSpace {
    let mut dimensions = BTreeMap::new();
    dimensions.insert("eta".into(), Dimension::LogUniform { low: 1e-3, high: 1.0 });
    dimensions.insert("l2".into(), Dimension::Uniform { low: 0.0, high: 1.0 });
    dimensions.insert("epochs".into(), Dimension::IntRange { low: 1, high: 20 });
    SearchSpace { dimensions, seed, draws }
}

pub fn planted_objective(p: &Params) -> f64 {
    -(p["eta"].ln() - 0.1f64.ln()).powi(2) - (p["l2"] - 0.3).powi(2) + p["epochs"] / 100.0
}

pub fn protocol_fidelity() -> Outcome {
    let c = partition_learning_curve(1023, 10, 0).map_err(|e| e.to_string())?;
    let sizes: Vec<usize> = (0..10).map(|i| 1 << i).collect();
    let cumulative: Vec<usize> = (1..=10).map(|i| (1 << i) - 1).collect();
    ensure(c.partition_sizes == sizes, || format!("partition sizes {:?}", c.partition_sizes))?;
    ensure(c.cumulative == cumulative, || format!("cumulative sizes {:?}", c.cumulative))?;

    let leaderboard = || {
        let r = random_search(&search_space(10, 30), |p| Ok(planted_objective(p))).unwrap();
        let mut buf = Vec::new();
        r.write_csv(&mut buf).unwrap();
        (r, buf)
    };
    let (first, bytes) = leaderboard();
    ensure(bytes == leaderboard().1, || "leaderboards differ between runs".into())?;

    let calls = AtomicUsize::new(0);
    let objective = |p: &Params| {
        calls.fetch_add(1, Ordering::SeqCst);
        Ok(-(p["eta_rep"] - 0.02).abs() - p["epsilon_rep"])
    };
    let r = two_stage_updating_search(Some(&first.best().params), &updating_grid(), objective)
        .map_err(|e| e.to_string())?;
    let evaluated = calls.load(Ordering::SeqCst);
    ensure(evaluated == 32 && r.leaderboard.len() == 32, || {
        format!("second stage evaluated {evaluated} configurations")
    })?;
    Ok("curve [1,2,..,512] / [1,3,..,1023]; identical leaderboards; 32 second-stage runs".into())
}

pub struct EchoRow {
    pub size: usize,
    pub embedding: f64,
    pub onehot: f64,
}

/// Accuracy of embedding-feature and one-hot taggers at the three smallest
/// learning-curve sizes of the latent-class task.
pub fn behavioural_echo_rows() -> Result<Vec<EchoRow>, String> {
    let task = LatentClassTask::default();
    let corpus = task.corpus(100_000, 1);
    let vocab = Arc::new(build_vocabulary(corpus.iter().flatten().map(String::as_str), 1).unwrap());
    let ids = vocab.encode_all(&corpus);
    let w2v = W2vConfig {
        dim: 50,
        window: 2,
        epochs: 5,
        ..W2vConfig::new(W2vMode::Skipgram)
    };
    let (model, _) = train_w2v(&ids, vocab, &w2v).map_err(|e| e.to_string())?;
    let embedding = WordRepresentation::Embedding(model.into_embeddings());

    let train = task.dataset(2000, 2);
    let test = task.dataset(500, 3);
    let curve = partition_learning_curve(train.len(), 10, 4).map_err(|e| e.to_string())?;
    let sizes = &curve.cumulative[..3];
    let templates = TemplateSet::none();
    let config = TaggerConfig::default();
    let accuracy = |rep: &WordRepresentation, name: &str| -> Result<Vec<f64>, String> {
        let run = CurveRun {
            train: &train,
            dev: None,
            test: &test,
            out_of_domain: None,
            templates: &templates,
            representation: rep,
            representation_name: name,
            config: &config,
        };
        let (rows, _) = run.run(&curve.order, sizes).map_err(|e| e.to_string())?;
        Ok(rows.iter().map(|r| r.value.unwrap()).collect())
    };
    let emb = accuracy(&embedding, "skipgram")?;
    let one = accuracy(&WordRepresentation::OneHot, "onehot")?;
    Ok(sizes
        .iter()
        .zip(emb.iter().zip(&one))
        .map(|(&size, (&embedding, &onehot))| EchoRow { size, embedding, onehot })
        .collect())
}

pub fn behavioural_echo() -> Outcome {
    let rows = behavioural_echo_rows()?;
    let summary: Vec<String> = rows
        .iter()
        .map(|r| format!("n={}: {:.3} vs {:.3}", r.size, r.embedding, r.onehot))
        .collect();
    for r in &rows {
        ensure(r.embedding - r.onehot >= 0.05, || {
            format!("margin below 5 points at n={}: {}", r.size, summary.join("; "))
        })?;
    }
    Ok(format!("embedding vs one-hot accuracy, {}", summary.join("; ")))
}

/// Embeddings with the latent class planted in one coordinate.
pub fn class_embeddings(task: &LatentClassTask, data: &LabelledDataset) -> EmbeddingMatrix {
    let vocab = Arc::new(build_vocabulary(data.sentences.iter().flatten().map(String::as_str), 1).unwrap());
    let mut m = init_embeddings(vocab.clone(), task.classes, 3);
    for id in vocab.known_ids() {
        let w = vocab.word(id);
        let class: usize = w[1..w.find('w').unwrap()].parse().unwrap();
        m.row_mut(id)[class] += 1.0;
    }
    m
}

pub fn updating_contract() -> Outcome {
    let task = LatentClassTask::default();
    let data = task.dataset(30, 63);
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let path = dir.path().join("vectors.txt");
    class_embeddings(&task, &data).save(&path).map_err(|e| e.to_string())?;
    let on_disk = std::fs::read(&path).unwrap();
    let source = WordRepresentation::Embedding(EmbeddingMatrix::load(&path).map_err(|e| e.to_string())?);
    let source_values = source.embedding().unwrap().as_slice().to_vec();

    for update in [false, true] {
        let cfg = TaggerConfig {
            epochs: 3,
            update_representations: update,
            ..TaggerConfig::default()
        };
        let (model, _) = train_tagger(&data, None, &TemplateSet::none(), &source, &cfg).map_err(|e| e.to_string())?;
        let trained = model.representation().embedding().unwrap().as_slice();
        let identical = trained.iter().zip(&source_values).all(|(a, b)| a.to_bits() == b.to_bits());
        ensure(identical != update, || {
            format!("update_representations = {update}: trained matrix identical = {identical}")
        })?;
        ensure(std::fs::read(&path).unwrap() == on_disk, || format!("artifact changed with update = {update}"))?;
        ensure(source.embedding().unwrap().as_slice() == source_values.as_slice(), || {
            format!("source matrix changed with update = {update}")
        })?;
    }
    Ok("artifact byte-identical in both settings; matrix changes only when updating".into())
}
