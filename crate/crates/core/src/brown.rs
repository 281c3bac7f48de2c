//! Class-based bigram model and greedy agglomerative (Brown) clustering.
//!
//! All logarithms are natural. Mutual information is computed from the
//! bigram joint distribution and its two marginals, so it is never negative.

use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus::Vocabulary;
use crate::error::{Error, Result};

/// Cut-off on observed types above which [`Strategy::Auto`] switches to the
/// windowed search.
pub const EXACT_LIMIT: usize = 2000;

/// Default bit-string prefix lengths for tagger features.
pub const DEFAULT_PREFIX_LENGTHS: [usize; 4] = [4, 6, 10, 20];

/// Unigram, bigram and sentence-start counts. Bigrams never cross a
/// sentence boundary.
#[derive(Debug, Clone, PartialEq)]
pub struct BigramStatistics {
    unigram: Vec<f64>,
    bigram: BTreeMap<(usize, usize), f64>,
    start: Vec<f64>,
    left: Vec<f64>,
    right: Vec<f64>,
    total_tokens: f64,
    total_bigrams: f64,
    sentences: usize,
}

impl BigramStatistics {
    pub fn from_sentences(sentences: &[Vec<usize>], vocab_len: usize) -> Self {
        let mut unigram = vec![0.0; vocab_len];
        let mut start = vec![0.0; vocab_len];
        let mut bigram = BTreeMap::new();
        let mut n_sent = 0;
        for s in sentences {
            if s.is_empty() {
                continue;
            }
            n_sent += 1;
            start[s[0]] += 1.0;
            for &w in s {
                unigram[w] += 1.0;
            }
            for pair in s.windows(2) {
                *bigram.entry((pair[0], pair[1])).or_insert(0.0) += 1.0;
            }
        }
        let mut stats = Self::assemble(unigram, bigram, start, vocab_len);
        stats.sentences = n_sent;
        stats
    }

    /// Statistics from raw bigram counts alone; unigram counts are taken as
    /// the left marginals and no sentence starts are recorded.
    pub fn from_bigram_counts<I>(counts: I, vocab_len: usize) -> Self
    where
        I: IntoIterator<Item = ((usize, usize), f64)>,
    {
        let mut bigram = BTreeMap::new();
        for (k, x) in counts {
            if x > 0.0 {
                *bigram.entry(k).or_insert(0.0) += x;
            }
        }
        let mut unigram = vec![0.0; vocab_len];
        for (&(a, _), &x) in &bigram {
            unigram[a] += x;
        }
        Self::assemble(unigram, bigram, vec![0.0; vocab_len], vocab_len)
    }

    fn assemble(unigram: Vec<f64>, bigram: BTreeMap<(usize, usize), f64>, start: Vec<f64>, n: usize) -> Self {
        let mut left = vec![0.0; n];
        let mut right = vec![0.0; n];
        for (&(a, b), &x) in &bigram {
            left[a] += x;
            right[b] += x;
        }
        BigramStatistics {
            total_tokens: unigram.iter().sum(),
            total_bigrams: bigram.values().sum(),
            unigram,
            bigram,
            start,
            left,
            right,
            sentences: 0,
        }
    }

    pub fn vocab_len(&self) -> usize {
        self.unigram.len()
    }

    pub fn unigram(&self, w: usize) -> f64 {
        self.unigram[w]
    }

    pub fn bigram(&self, a: usize, b: usize) -> f64 {
        self.bigram.get(&(a, b)).copied().unwrap_or(0.0)
    }

    pub fn start(&self, w: usize) -> f64 {
        self.start[w]
    }

    pub fn bigrams(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        self.bigram.iter().map(|(&(a, b), &x)| (a, b, x))
    }

    pub fn total_tokens(&self) -> f64 {
        self.total_tokens
    }

    pub fn total_bigrams(&self) -> f64 {
        self.total_bigrams
    }

    pub fn sentences(&self) -> usize {
        self.sentences
    }

    /// Word ids with a non-zero count, by descending frequency then id.
    pub fn observed_by_frequency(&self) -> Vec<usize> {
        let mut ids: Vec<usize> = (0..self.unigram.len())
            .filter(|&w| self.unigram[w] > 0.0 || self.left[w] > 0.0 || self.right[w] > 0.0)
            .collect();
        ids.sort_by(|&a, &b| {
            self.unigram[b]
                .partial_cmp(&self.unigram[a])
                .expect("counts are finite")
                .then(a.cmp(&b))
        });
        ids
    }
}

fn check_assignment(stats: &BigramStatistics, assignment: &[usize]) -> Result<usize> {
    if assignment.len() < stats.vocab_len() {
        return Err(Error::Domain(format!(
            "assignment covers {} words, statistics have {}",
            assignment.len(),
            stats.vocab_len()
        )));
    }
    Ok(assignment.iter().copied().max().map_or(0, |m| m + 1))
}

/// Log-likelihood of the corpus under the class bigram model with
/// maximum-likelihood estimates:
/// `sum_k ln p(w_k | c_k) + sum_bigrams ln p(c_k | c_{k-1}) + sum_starts ln p_start(c)`.
pub fn class_bigram_likelihood(stats: &BigramStatistics, assignment: &[usize]) -> Result<f64> {
    let k = check_assignment(stats, assignment)?;
    let mut class_count = vec![0.0; k];
    let mut class_start = vec![0.0; k];
    for w in 0..stats.vocab_len() {
        class_count[assignment[w]] += stats.unigram[w];
        class_start[assignment[w]] += stats.start[w];
    }
    let mut trans: HashMap<(usize, usize), f64> = HashMap::new();
    let mut trans_row = vec![0.0; k];
    for (a, b, x) in stats.bigrams() {
        *trans.entry((assignment[a], assignment[b])).or_insert(0.0) += x;
        trans_row[assignment[a]] += x;
    }
    let mut ll = 0.0;
    for w in 0..stats.vocab_len() {
        let n = stats.unigram[w];
        if n > 0.0 {
            ll += n * (n / class_count[assignment[w]]).ln();
        }
    }
    let mut trans_sorted: Vec<_> = trans.into_iter().collect();
    trans_sorted.sort_by(|a, b| a.0.cmp(&b.0));
    for ((c, _), x) in trans_sorted {
        ll += x * (x / trans_row[c]).ln();
    }
    let starts: f64 = class_start.iter().sum();
    for &s in &class_start {
        if s > 0.0 {
            ll += s * (s / starts).ln();
        }
    }
    Ok(ll)
}

/// Average mutual information between the classes of adjacent tokens.
pub fn ami_of_assignment(stats: &BigramStatistics, assignment: &[usize]) -> Result<f64> {
    let k = check_assignment(stats, assignment)?;
    let total = stats.total_bigrams;
    if total == 0.0 {
        return Ok(0.0);
    }
    let mut joint: BTreeMap<(usize, usize), f64> = BTreeMap::new();
    let mut left = vec![0.0; k];
    let mut right = vec![0.0; k];
    for (a, b, x) in stats.bigrams() {
        let (ca, cb) = (assignment[a], assignment[b]);
        *joint.entry((ca, cb)).or_insert(0.0) += x;
        left[ca] += x;
        right[cb] += x;
    }
    Ok(joint
        .into_iter()
        .map(|((a, b), x)| x / total * (x * total / (left[a] * right[b])).ln())
        .sum())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Strategy {
    /// Every observed word starts as its own cluster.
    Exact,
    /// At most `w` active clusters; the next most frequent word is added
    /// before each merge.
    Windowed(usize),
    /// Exact up to [`EXACT_LIMIT`] observed types, otherwise windowed with
    /// a window equal to the target cluster count.
    Auto,
}

/// One agglomerative step. Node ids below the number of leaves denote the
/// singleton cluster of `leaves[id]`; larger ids are earlier merges.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MergeStep {
    pub left: usize,
    pub right: usize,
    pub node: usize,
    /// Decrease in average mutual information caused by this merge.
    pub loss: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClusterHierarchy {
    clusters: usize,
    /// Leaf node id -> word id.
    leaves: Vec<usize>,
    merges: Vec<MergeStep>,
    /// Word id -> cluster index at the cut, for observed words.
    assignment: BTreeMap<usize, usize>,
    /// Cluster index -> bit string from the root.
    cluster_paths: Vec<String>,
}

impl ClusterHierarchy {
    pub fn cluster_count(&self) -> usize {
        self.clusters
    }

    pub fn leaves(&self) -> &[usize] {
        &self.leaves
    }

    pub fn merges(&self) -> &[MergeStep] {
        &self.merges
    }

    pub fn cluster_of(&self, word: usize) -> Option<usize> {
        self.assignment.get(&word).copied()
    }

    pub fn path_of(&self, word: usize) -> Option<&str> {
        self.cluster_of(word).map(|c| self.cluster_paths[c].as_str())
    }

    pub fn cluster_paths(&self) -> &[String] {
        &self.cluster_paths
    }

    /// Dense word -> cluster vector; unobserved words go to `fallback`.
    pub fn assignment_vec(&self, vocab_len: usize, fallback: usize) -> Vec<usize> {
        (0..vocab_len).map(|w| self.cluster_of(w).unwrap_or(fallback)).collect()
    }

    /// Members of each cut cluster.
    pub fn members(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.clusters];
        for (&w, &c) in &self.assignment {
            out[c].push(w);
        }
        out
    }

    /// Writes `bitstring<TAB>word<TAB>frequency` lines, grouped by bit string
    /// with words in descending frequency.
    pub fn write_to<W: Write>(&self, out: &mut W, vocab: &Vocabulary, stats: &BigramStatistics) -> Result<()> {
        let mut rows: Vec<(&str, u64, &str)> = self
            .assignment
            .iter()
            .map(|(&w, &c)| (self.cluster_paths[c].as_str(), stats.unigram(w) as u64, vocab.word(w)))
            .collect();
        rows.sort_by(|a, b| a.0.cmp(b.0).then(b.1.cmp(&a.1)).then(a.2.cmp(b.2)));
        for (path, freq, word) in rows {
            writeln!(out, "{path}\t{word}\t{freq}")?;
        }
        Ok(())
    }

    pub fn save(&self, path: impl AsRef<Path>, vocab: &Vocabulary, stats: &BigramStatistics) -> Result<()> {
        let mut out = BufWriter::new(fs::File::create(path)?);
        self.write_to(&mut out, vocab, stats)?;
        out.flush()?;
        Ok(())
    }
}

/// Incremental state of the greedy search over active cluster slots.
struct MergeState {
    cap: usize,
    total: f64,
    active: Vec<bool>,
    node: Vec<usize>,
    counts: Vec<f64>,
    left: Vec<f64>,
    right: Vec<f64>,
    /// Row plus column mutual-information terms of each slot.
    side: Vec<f64>,
    /// AMI loss of merging slots `i < j`, stored at `i * cap + j`.
    loss: Vec<f64>,
}

impl MergeState {
    fn new(cap: usize, total: f64) -> Self {
        MergeState {
            cap,
            total,
            active: vec![false; cap],
            node: vec![usize::MAX; cap],
            counts: vec![0.0; cap * cap],
            left: vec![0.0; cap],
            right: vec![0.0; cap],
            side: vec![0.0; cap],
            loss: vec![0.0; cap * cap],
        }
    }

    #[inline]
    fn n(&self, a: usize, b: usize) -> f64 {
        self.counts[a * self.cap + b]
    }

    #[inline]
    fn term(&self, n: f64, l: f64, r: f64) -> f64 {
        if n > 0.0 {
            n / self.total * (n * self.total / (l * r)).ln()
        } else {
            0.0
        }
    }

    fn slots(&self) -> Vec<usize> {
        (0..self.cap).filter(|&s| self.active[s]).collect()
    }

    /// Terms the hypothetical merge of `i` and `j` would have with `c`.
    fn pair_terms_with(&self, i: usize, j: usize, c: usize) -> f64 {
        let lij = self.left[i] + self.left[j];
        let rij = self.right[i] + self.right[j];
        self.term(self.n(i, c) + self.n(j, c), lij, self.right[c])
            + self.term(self.n(c, i) + self.n(c, j), self.left[c], rij)
    }

    fn fresh_side(&self, a: usize, slots: &[usize]) -> f64 {
        let mut s = 0.0;
        for &c in slots {
            s += self.term(self.n(a, c), self.left[a], self.right[c]);
            if c != a {
                s += self.term(self.n(c, a), self.left[c], self.right[a]);
            }
        }
        s
    }

    fn fresh_loss(&self, i: usize, j: usize, slots: &[usize]) -> f64 {
        let removed = self.side[i] + self.side[j]
            - self.term(self.n(i, j), self.left[i], self.right[j])
            - self.term(self.n(j, i), self.left[j], self.right[i]);
        let lij = self.left[i] + self.left[j];
        let rij = self.right[i] + self.right[j];
        let mut added = self.term(self.n(i, i) + self.n(i, j) + self.n(j, i) + self.n(j, j), lij, rij);
        for &c in slots {
            if c != i && c != j {
                added += self.pair_terms_with(i, j, c);
            }
        }
        removed - added
    }

    fn free_slot(&self) -> usize {
        (0..self.cap).find(|&s| !self.active[s]).expect("capacity exceeded")
    }

    /// Activates a slot holding `node`, with counts against active slots.
    fn add(&mut self, node: usize, row: &[(usize, f64)], col: &[(usize, f64)], diag: f64, left: f64, right: f64) {
        let x = self.free_slot();
        let cap = self.cap;
        for c in 0..cap {
            self.counts[x * cap + c] = 0.0;
            self.counts[c * cap + x] = 0.0;
        }
        for &(c, v) in row {
            self.counts[x * cap + c] += v;
        }
        for &(c, v) in col {
            self.counts[c * cap + x] += v;
        }
        self.counts[x * cap + x] = diag;
        self.left[x] = left;
        self.right[x] = right;

        let old = self.slots();
        let delta: Vec<f64> = (0..cap)
            .map(|c| {
                if self.active[c] {
                    self.term(self.n(c, x), self.left[c], self.right[x]) + self.term(self.n(x, c), self.left[x], self.right[c])
                } else {
                    0.0
                }
            })
            .collect();
        for (a_idx, &i) in old.iter().enumerate() {
            for &j in &old[a_idx + 1..] {
                let gained = self.pair_terms_with(i, j, x);
                self.loss[i * cap + j] += delta[i] + delta[j] - gained;
            }
        }
        for &c in &old {
            self.side[c] += delta[c];
        }
        self.active[x] = true;
        self.node[x] = node;
        let slots = self.slots();
        self.side[x] = self.fresh_side(x, &slots);
        for &c in &old {
            let (i, j) = if c < x { (c, x) } else { (x, c) };
            self.loss[i * cap + j] = self.fresh_loss(i, j, &slots);
        }
    }

    /// Best pair by (loss, node-id pair), with a relative tolerance so that
    /// rounding noise does not override the tie-break.
    fn best_pair(&self) -> Option<(usize, usize)> {
        let slots = self.slots();
        let mut best: Option<(f64, (usize, usize), (usize, usize))> = None;
        for (ai, &i) in slots.iter().enumerate() {
            for &j in &slots[ai + 1..] {
                let l = self.loss[i * self.cap + j];
                let key = (self.node[i].min(self.node[j]), self.node[i].max(self.node[j]));
                let better = match best {
                    None => true,
                    Some((bl, bkey, _)) => {
                        let tol = 1e-12 * (1.0 + bl.abs());
                        l < bl - tol || (l <= bl + tol && key < bkey)
                    }
                };
                if better {
                    best = Some((l, key, (i, j)));
                }
            }
        }
        best.map(|(_, _, p)| p)
    }

    /// Merges slot `b` into slot `a`; returns the AMI loss.
    fn merge(&mut self, a: usize, b: usize, node: usize) -> f64 {
        let cap = self.cap;
        let (lo, hi) = (a.min(b), a.max(b));
        let merge_loss = self.loss[lo * cap + hi];
        let others: Vec<usize> = self.slots().into_iter().filter(|&c| c != a && c != b).collect();

        // contributions that disappear, measured before the counts change
        let old_side_part: Vec<f64> = (0..cap)
            .map(|c| {
                if !self.active[c] || c == a || c == b {
                    return 0.0;
                }
                self.term(self.n(c, a), self.left[c], self.right[a])
                    + self.term(self.n(a, c), self.left[a], self.right[c])
                    + self.term(self.n(c, b), self.left[c], self.right[b])
                    + self.term(self.n(b, c), self.left[b], self.right[c])
            })
            .collect();
        let mut pair_old = vec![0.0; cap * cap];
        for (oi, &i) in others.iter().enumerate() {
            for &j in &others[oi + 1..] {
                pair_old[i * cap + j] = self.pair_terms_with(i, j, a) + self.pair_terms_with(i, j, b);
            }
        }

        let diag = self.n(a, a) + self.n(a, b) + self.n(b, a) + self.n(b, b);
        for &c in &others {
            self.counts[a * cap + c] += self.counts[b * cap + c];
            self.counts[c * cap + a] += self.counts[c * cap + b];
        }
        for c in 0..cap {
            self.counts[b * cap + c] = 0.0;
            self.counts[c * cap + b] = 0.0;
        }
        self.counts[a * cap + a] = diag;
        self.left[a] += self.left[b];
        self.right[a] += self.right[b];
        self.left[b] = 0.0;
        self.right[b] = 0.0;
        self.active[b] = false;
        self.node[b] = usize::MAX;
        self.node[a] = node;

        let new_side_part: Vec<f64> = (0..cap)
            .map(|c| {
                if !self.active[c] || c == a {
                    return 0.0;
                }
                self.term(self.n(c, a), self.left[c], self.right[a]) + self.term(self.n(a, c), self.left[a], self.right[c])
            })
            .collect();
        for (oi, &i) in others.iter().enumerate() {
            for &j in &others[oi + 1..] {
                let d_i = new_side_part[i] - old_side_part[i];
                let d_j = new_side_part[j] - old_side_part[j];
                let new_terms = self.pair_terms_with(i, j, a);
                self.loss[i * cap + j] += d_i + d_j + pair_old[i * cap + j] - new_terms;
            }
        }
        for &c in &others {
            self.side[c] += new_side_part[c] - old_side_part[c];
        }
        let slots = self.slots();
        self.side[a] = self.fresh_side(a, &slots);
        self.side[b] = 0.0;
        for &c in &others {
            let (i, j) = if c < a { (c, a) } else { (a, c) };
            self.loss[i * cap + j] = self.fresh_loss(i, j, &slots);
        }
        merge_loss
    }
}

/// Greedy agglomerative clustering. Merging continues past the `b`-cluster
/// cut up to a single root so that every cut cluster receives a bit string.
pub fn brown_cluster(stats: &BigramStatistics, b: usize, strategy: Strategy) -> Result<ClusterHierarchy> {
    if b < 1 {
        return Err(Error::Domain("cluster count must be at least 1".into()));
    }
    let words = stats.observed_by_frequency();
    if b > words.len() {
        return Err(Error::Domain(format!(
            "requested {b} clusters but only {} word types are observed",
            words.len()
        )));
    }
    let window = match strategy {
        Strategy::Exact => words.len(),
        Strategy::Windowed(w) => {
            if w < b {
                return Err(Error::Domain(format!("window {w} is smaller than the cluster count {b}")));
            }
            w.min(words.len())
        }
        Strategy::Auto => {
            if words.len() <= EXACT_LIMIT {
                words.len()
            } else {
                b
            }
        }
    };

    // per-word adjacency for slot counts
    let mut out_adj: HashMap<usize, Vec<(usize, f64)>> = HashMap::new();
    let mut in_adj: HashMap<usize, Vec<(usize, f64)>> = HashMap::new();
    for (x, y, c) in stats.bigrams() {
        out_adj.entry(x).or_default().push((y, c));
        in_adj.entry(y).or_default().push((x, c));
    }

    let mut state = MergeState::new(window + 1, stats.total_bigrams.max(f64::MIN_POSITIVE));
    let mut slot_of_word: HashMap<usize, usize> = HashMap::new();
    let mut members: HashMap<usize, Vec<usize>> = HashMap::new();
    let mut next_node = words.len();
    let mut merges = Vec::new();
    let mut cut: Option<Vec<usize>> = None;

    let add_word = |state: &mut MergeState, slot_of_word: &mut HashMap<usize, usize>, leaf: usize| {
        let w = words[leaf];
        let mut row = Vec::new();
        let mut col = Vec::new();
        let mut diag = 0.0;
        for &(y, c) in out_adj.get(&w).map(Vec::as_slice).unwrap_or(&[]) {
            if y == w {
                diag += c;
            } else if let Some(&s) = slot_of_word.get(&y) {
                row.push((s, c));
            }
        }
        for &(x, c) in in_adj.get(&w).map(Vec::as_slice).unwrap_or(&[]) {
            if x != w {
                if let Some(&s) = slot_of_word.get(&x) {
                    col.push((s, c));
                }
            }
        }
        let slot = state.free_slot();
        state.add(leaf, &row, &col, diag, stats.left[w], stats.right[w]);
        slot_of_word.insert(w, slot);
    };

    let do_merge = |state: &mut MergeState, slot_of_word: &mut HashMap<usize, usize>, members: &mut HashMap<usize, Vec<usize>>, next_node: &mut usize| -> MergeStep {
        let (i, j) = state.best_pair().expect("at least two active clusters");
        let (ni, nj) = (state.node[i], state.node[j]);
        let (left, right) = (ni.min(nj), ni.max(nj));
        let node = *next_node;
        *next_node += 1;
        let loss = state.merge(i, j, node);
        let moved = members.remove(&nj).unwrap_or_else(|| vec![nj]);
        let mut kept = members.remove(&ni).unwrap_or_else(|| vec![ni]);
        for &leaf in &moved {
            slot_of_word.insert(words[leaf], i);
        }
        kept.extend(moved);
        members.insert(node, kept);
        MergeStep { left, right, node, loss }
    };

    let mut added = 0;
    while added < window {
        add_word(&mut state, &mut slot_of_word, added);
        added += 1;
    }
    loop {
        let active = state.slots();
        if added == words.len() && active.len() == b && cut.is_none() {
            cut = Some(active.iter().map(|&s| state.node[s]).collect());
        }
        if added < words.len() {
            add_word(&mut state, &mut slot_of_word, added);
            added += 1;
        } else if active.len() <= 1 {
            break;
        }
        merges.push(do_merge(&mut state, &mut slot_of_word, &mut members, &mut next_node));
    }

    let mut cut_nodes = cut.expect("cut reached before the root");
    cut_nodes.sort_unstable();
    let root = merges.last().map_or(cut_nodes[0], |m| m.node);
    let children: HashMap<usize, (usize, usize)> = merges.iter().map(|m| (m.node, (m.left, m.right))).collect();

    let mut cluster_paths = Vec::with_capacity(b);
    let mut assignment = BTreeMap::new();
    let mut stack = vec![(root, String::new())];
    let cut_index: HashMap<usize, usize> = cut_nodes.iter().enumerate().map(|(i, &n)| (n, i)).collect();
    let mut paths = vec![String::new(); b];
    while let Some((node, path)) = stack.pop() {
        if let Some(&ci) = cut_index.get(&node) {
            paths[ci] = path;
            continue;
        }
        let (l, r) = children[&node];
        stack.push((r, format!("{path}1")));
        stack.push((l, format!("{path}0")));
    }
    for (ci, &node) in cut_nodes.iter().enumerate() {
        let leaves = node_leaves(node, &children, words.len());
        for leaf in leaves {
            assignment.insert(words[leaf], ci);
        }
        cluster_paths.push(std::mem::take(&mut paths[ci]));
    }

    Ok(ClusterHierarchy {
        clusters: b,
        leaves: words,
        merges,
        assignment,
        cluster_paths,
    })
}

fn node_leaves(node: usize, children: &HashMap<usize, (usize, usize)>, n_leaves: usize) -> Vec<usize> {
    let mut out = Vec::new();
    let mut stack = vec![node];
    while let Some(n) = stack.pop() {
        if n < n_leaves {
            out.push(n);
        } else {
            let (l, r) = children[&n];
            stack.push(l);
            stack.push(r);
        }
    }
    out
}

/// `p<L>=<prefix>` for every requested length; shorter paths are used whole.
pub fn cluster_prefix_features(path: &str, prefix_lengths: &[usize]) -> Vec<String> {
    prefix_lengths
        .iter()
        .map(|&len| {
            let end = len.min(path.len());
            format!("p{len}={}", &path[..end])
        })
        .collect()
}

/// Feature name emitted for words without a cluster.
pub const UNKNOWN_CLUSTER_FEATURE: &str = "p=UNKNOWN";

/// Word -> bit string table with the prefix lengths used for features.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterFeatures {
    pub paths: BTreeMap<String, String>,
    pub prefix_lengths: Vec<usize>,
}

impl ClusterFeatures {
    pub fn new(paths: BTreeMap<String, String>, prefix_lengths: Vec<usize>) -> Self {
        ClusterFeatures { paths, prefix_lengths }
    }

    pub fn from_hierarchy(h: &ClusterHierarchy, vocab: &Vocabulary, prefix_lengths: Vec<usize>) -> Self {
        let paths = h
            .assignment
            .iter()
            .map(|(&w, &c)| (vocab.word(w).to_string(), h.cluster_paths[c].clone()))
            .collect();
        ClusterFeatures { paths, prefix_lengths }
    }

    pub fn features(&self, word: &str) -> Vec<String> {
        match self.paths.get(word) {
            Some(p) => cluster_prefix_features(p, &self.prefix_lengths),
            None => vec![UNKNOWN_CLUSTER_FEATURE.to_string()],
        }
    }

    /// Reads a `bitstring<TAB>word<TAB>frequency` file.
    pub fn load(path: impl AsRef<Path>, prefix_lengths: Vec<usize>) -> Result<Self> {
        let path = path.as_ref();
        let reader = BufReader::new(fs::File::open(path)?);
        let mut paths = BTreeMap::new();
        for (n, line) in reader.lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let cols: Vec<&str> = line.split('\t').collect();
            if cols.len() < 2 || !cols[0].chars().all(|c| c == '0' || c == '1') {
                return Err(Error::Parse {
                    path: path.to_path_buf(),
                    line: n + 1,
                    message: "expected bitstring<TAB>word<TAB>frequency".into(),
                });
            }
            paths.insert(cols[1].to_string(), cols[0].to_string());
        }
        if paths.is_empty() {
            return Err(Error::EmptyInput(path.display().to_string()));
        }
        Ok(ClusterFeatures { paths, prefix_lengths })
    }
}
