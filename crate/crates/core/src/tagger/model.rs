//! Linear-chain CRF over indicator features and dense representation blocks.

use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::crf::Potentials;
use super::features::{assemble_features, TemplateSet};
use crate::brown::ClusterFeatures;
use crate::corpus::{parse_tag, repair_iob, TaskKind, Tag, Vocabulary};
use crate::error::{Error, Result};
use crate::repr::{EmbeddingMatrix, WordRepresentation};

pub const CHECKPOINT_FORMAT: &str = "wordrep-tagger";
pub const CHECKPOINT_VERSION: u32 = 1;

/// Offsets of each parameter block inside the flat weight vector:
/// transitions, start, stop, indicator weights (feature-major), dense weights
/// (label-major).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Layout {
    pub labels: usize,
    pub features: usize,
    pub dense: usize,
}

impl Layout {
    pub fn transition(&self, from: usize, to: usize) -> usize {
        from * self.labels + to
    }
    pub fn start(&self, y: usize) -> usize {
        self.labels * self.labels + y
    }
    pub fn stop(&self, y: usize) -> usize {
        self.labels * (self.labels + 1) + y
    }
    pub fn feature(&self, f: usize, y: usize) -> usize {
        self.labels * (self.labels + 2) + f * self.labels + y
    }
    pub fn dense(&self, y: usize, k: usize) -> usize {
        self.labels * (self.labels + 2 + self.features) + y * self.dense + k
    }
    pub fn len(&self) -> usize {
        self.labels * (self.labels + 2 + self.features + self.dense)
    }
    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// A sentence mapped onto feature ids and embedding rows.
#[derive(Debug, Clone, PartialEq)]
pub struct EncodedSentence {
    /// Known indicator ids per position; unseen indicators are dropped.
    pub features: Vec<Vec<usize>>,
    /// Embedding row per representation slot and position.
    pub rows: Vec<Vec<Option<usize>>>,
}

impl EncodedSentence {
    pub fn len(&self) -> usize {
        self.features.len()
    }
    pub fn is_empty(&self) -> bool {
        self.features.is_empty()
    }
}

/// Encoded sentence with gold label ids; `index` identifies it in error
/// reports.
#[derive(Debug, Clone, PartialEq)]
pub struct Example {
    pub index: usize,
    pub sentence: EncodedSentence,
    pub labels: Vec<usize>,
}

/// Sparse gradient of the summed negative log-likelihood.
#[derive(Debug, Clone, PartialEq)]
pub struct CrfGradient {
    pub nll: f64,
    values: Vec<f64>,
    seen: Vec<bool>,
    touched: Vec<usize>,
    /// Gradient per embedding row; only rows reached by the batch appear.
    pub rows: BTreeMap<usize, Vec<f64>>,
}

impl CrfGradient {
    pub fn new(len: usize) -> Self {
        CrfGradient {
            nll: 0.0,
            values: vec![0.0; len],
            seen: vec![false; len],
            touched: Vec::new(),
            rows: BTreeMap::new(),
        }
    }

    pub fn clear(&mut self) {
        for &i in &self.touched {
            self.values[i] = 0.0;
            self.seen[i] = false;
        }
        self.touched.clear();
        self.rows.clear();
        self.nll = 0.0;
    }

    #[inline]
    fn add(&mut self, i: usize, v: f64) {
        if !self.seen[i] {
            self.seen[i] = true;
            self.touched.push(i);
        }
        self.values[i] += v;
    }

    pub fn get(&self, i: usize) -> f64 {
        self.values[i]
    }

    /// Touched coordinates with their accumulated values, in first-touch order.
    pub fn iter(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.touched.iter().map(|&i| (i, self.values[i]))
    }

    pub fn as_dense(&self) -> &[f64] {
        &self.values
    }

    fn merge(&mut self, part: SentenceGradient) {
        self.nll += part.nll;
        for (i, v) in part.entries {
            self.add(i, v);
        }
        for (r, g) in part.rows {
            match self.rows.get_mut(&r) {
                Some(acc) => acc.iter_mut().zip(&g).for_each(|(a, b)| *a += b),
                None => {
                    self.rows.insert(r, g);
                }
            }
        }
    }
}

struct SentenceGradient {
    nll: f64,
    entries: Vec<(usize, f64)>,
    rows: BTreeMap<usize, Vec<f64>>,
}

#[derive(Debug, Clone)]
pub struct TaggerModel {
    labels: Vec<String>,
    label_index: HashMap<String, usize>,
    features: Vec<String>,
    feature_index: HashMap<String, usize>,
    templates: TemplateSet,
    representation: WordRepresentation,
    task_kind: TaskKind,
    weights: Vec<f64>,
    pub update_representations: bool,
    pub constrained_decoding: bool,
}

impl TaggerModel {
    /// Zero-weight model over the given label and indicator inventories.
    pub fn new(
        labels: Vec<String>,
        features: Vec<String>,
        templates: TemplateSet,
        representation: WordRepresentation,
        task_kind: TaskKind,
    ) -> Result<Self> {
        if labels.is_empty() {
            return Err(Error::EmptyInput("label set is empty".into()));
        }
        let label_index = index_of(&labels, "label")?;
        let feature_index = index_of(&features, "feature")?;
        let mut model = TaggerModel {
            labels,
            label_index,
            features,
            feature_index,
            templates,
            representation,
            task_kind,
            weights: Vec::new(),
            update_representations: false,
            constrained_decoding: false,
        };
        model.weights = vec![0.0; model.layout().len()];
        Ok(model)
    }

    pub fn layout(&self) -> Layout {
        Layout {
            labels: self.labels.len(),
            features: self.features.len(),
            dense: self.templates.rep_offsets.len() * self.representation.dense_dim(),
        }
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn label_id(&self, label: &str) -> Option<usize> {
        self.label_index.get(label).copied()
    }

    pub fn features(&self) -> &[String] {
        &self.features
    }

    pub fn templates(&self) -> &TemplateSet {
        &self.templates
    }

    pub fn task_kind(&self) -> TaskKind {
        self.task_kind
    }

    pub fn representation(&self) -> &WordRepresentation {
        &self.representation
    }

    pub fn representation_mut(&mut self) -> &mut WordRepresentation {
        &mut self.representation
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn weights_mut(&mut self) -> &mut [f64] {
        &mut self.weights
    }

    pub fn encode<S: AsRef<str>>(&self, sentence: &[S]) -> Result<EncodedSentence> {
        let mut features = Vec::with_capacity(sentence.len());
        let mut rows = Vec::with_capacity(sentence.len());
        for t in 0..sentence.len() {
            let pf = assemble_features(sentence, t, &self.templates, &self.representation)?;
            features.push(
                pf.indicators
                    .iter()
                    .filter_map(|f| self.feature_index.get(f).copied())
                    .collect(),
            );
            rows.push(pf.rows);
        }
        Ok(EncodedSentence { features, rows })
    }

    pub fn encode_labels<S: AsRef<str>>(&self, labels: &[S]) -> Result<Vec<usize>> {
        labels
            .iter()
            .map(|l| {
                self.label_id(l.as_ref())
                    .ok_or_else(|| Error::Domain(format!("unknown label {:?}", l.as_ref())))
            })
            .collect()
    }

    pub fn example<S: AsRef<str>, L: AsRef<str>>(&self, index: usize, sentence: &[S], labels: &[L]) -> Result<Example> {
        if sentence.len() != labels.len() {
            return Err(Error::Domain(format!(
                "sentence has {} tokens but {} labels",
                sentence.len(),
                labels.len()
            )));
        }
        Ok(Example {
            index,
            sentence: self.encode(sentence)?,
            labels: self.encode_labels(labels)?,
        })
    }

    pub fn potentials(&self, sentence: &EncodedSentence) -> Potentials {
        let lay = self.layout();
        let k = lay.labels;
        let w = &self.weights;
        let mut emissions = vec![0.0; sentence.len() * k];
        let emb = self.representation.embedding();
        for t in 0..sentence.len() {
            for y in 0..k {
                let mut e: f64 = sentence.features[t].iter().map(|&f| w[lay.feature(f, y)]).sum();
                if let Some(m) = emb {
                    let d = m.dim();
                    for (slot, row) in sentence.rows[t].iter().enumerate() {
                        if let Some(r) = row {
                            let base = lay.dense(y, slot * d);
                            e += m.row(*r).iter().zip(&w[base..base + d]).map(|(a, b)| a * b).sum::<f64>();
                        }
                    }
                }
                emissions[t * k + y] = e;
            }
        }
        Potentials {
            len: sentence.len(),
            labels: k,
            emissions,
            transitions: w[..k * k].to_vec(),
            start: w[lay.start(0)..lay.start(0) + k].to_vec(),
            stop: w[lay.stop(0)..lay.stop(0) + k].to_vec(),
        }
    }

    pub fn sequence_score<S: AsRef<str>, L: AsRef<str>>(&self, sentence: &[S], labels: &[L]) -> Result<f64> {
        let ids = self.encode_labels(labels)?;
        self.potentials(&self.encode(sentence)?).score(&ids)
    }

    pub fn log_partition<S: AsRef<str>>(&self, sentence: &[S]) -> Result<f64> {
        self.potentials(&self.encode(sentence)?).log_partition()
    }

    /// Negative log-likelihood of one labelled sentence.
    pub fn nll<S: AsRef<str>, L: AsRef<str>>(&self, sentence: &[S], labels: &[L]) -> Result<f64> {
        let ex = self.example(0, sentence, labels)?;
        let pot = self.potentials(&ex.sentence);
        Ok(pot.log_partition()? - pot.score(&ex.labels)?)
    }

    fn decode_ids(&self, sentence: &EncodedSentence) -> Result<Vec<usize>> {
        if sentence.is_empty() {
            return Ok(Vec::new());
        }
        let pot = self.potentials(sentence);
        if self.constrained_decoding && self.task_kind == TaskKind::SpanIob {
            let tags: Vec<Option<Tag>> = self.labels.iter().map(|l| parse_tag(l).ok()).collect();
            let allowed = |prev: Option<usize>, y: usize| match tags[y] {
                Some(Tag::Inside(ty)) => matches!(
                    prev.and_then(|p| tags[p]),
                    Some(Tag::Begin(pt)) | Some(Tag::Inside(pt)) if pt == ty
                ),
                _ => true,
            };
            pot.viterbi_masked(Some(&allowed))
        } else {
            pot.viterbi()
        }
    }

    /// Viterbi labelling of a raw sentence.
    pub fn predict<S: AsRef<str>>(&self, sentence: &[S]) -> Result<Vec<String>> {
        let ids = self.decode_ids(&self.encode(sentence)?)?;
        Ok(ids.into_iter().map(|y| self.labels[y].clone()).collect())
    }

    /// Predictions for many sentences, decoded in parallel. Span-task
    /// outputs are repaired into valid IOB.
    pub fn predict_all<S: AsRef<str> + Sync>(&self, sentences: &[Vec<S>]) -> Result<Vec<Vec<String>>> {
        sentences
            .par_iter()
            .map(|s| {
                let p = self.predict(s)?;
                if self.task_kind == TaskKind::SpanIob {
                    repair_iob(&p)
                } else {
                    Ok(p)
                }
            })
            .collect()
    }

    fn sentence_gradient(&self, ex: &Example) -> Result<SentenceGradient> {
        let lay = self.layout();
        let k = lay.labels;
        let n = ex.sentence.len();
        let fail = |message: &str| Error::Numerical {
            sentence: ex.index,
            message: message.to_string(),
        };
        if n == 0 {
            return Ok(SentenceGradient {
                nll: 0.0,
                entries: Vec::new(),
                rows: BTreeMap::new(),
            });
        }
        let pot = self.potentials(&ex.sentence);
        if !pot.emissions.iter().all(|e| e.is_finite()) {
            return Err(fail("non-finite emission score"));
        }
        let marg = pot.marginals()?;
        let nll = marg.log_z - pot.score(&ex.labels)?;
        if !nll.is_finite() || !marg.nodes.iter().chain(&marg.edges).all(|p| p.is_finite()) {
            return Err(fail("non-finite log-partition or marginal"));
        }
        let gold = &ex.labels;
        let ind = |c: bool| if c { 1.0 } else { 0.0 };
        let mut entries = Vec::new();
        let mut rows: BTreeMap<usize, Vec<f64>> = BTreeMap::new();
        let emb = self.representation.embedding();
        for y in 0..k {
            entries.push((lay.start(y), marg.nodes[y] - ind(gold[0] == y)));
            entries.push((lay.stop(y), marg.nodes[(n - 1) * k + y] - ind(gold[n - 1] == y)));
        }
        for t in 1..n {
            for i in 0..k {
                for j in 0..k {
                    let c = marg.edges[(t - 1) * k * k + i * k + j] - ind(gold[t - 1] == i && gold[t] == j);
                    entries.push((lay.transition(i, j), c));
                }
            }
        }
        for t in 0..n {
            for y in 0..k {
                let c = marg.nodes[t * k + y] - ind(gold[t] == y);
                if c == 0.0 {
                    continue;
                }
                for &f in &ex.sentence.features[t] {
                    entries.push((lay.feature(f, y), c));
                }
                let Some(m) = emb else { continue };
                let d = m.dim();
                for (slot, row) in ex.sentence.rows[t].iter().enumerate() {
                    let Some(r) = *row else { continue };
                    let base = lay.dense(y, slot * d);
                    for (j, x) in m.row(r).iter().enumerate() {
                        entries.push((base + j, c * x));
                    }
                    if self.update_representations {
                        let g = rows.entry(r).or_insert_with(|| vec![0.0; d]);
                        for (gj, wj) in g.iter_mut().zip(&self.weights[base..base + d]) {
                            *gj += c * wj;
                        }
                    }
                }
            }
        }
        Ok(SentenceGradient { nll, entries, rows })
    }

    /// Gradient of the summed NLL over `batch`, accumulated into `out` after
    /// clearing it. Sentences are processed in parallel and summed in batch
    /// order.
    pub fn crf_gradient_into(&self, batch: &[Example], out: &mut CrfGradient) -> Result<()> {
        if batch.is_empty() {
            return Err(Error::EmptyInput("gradient batch is empty".into()));
        }
        out.clear();
        if batch.len() == 1 {
            out.merge(self.sentence_gradient(&batch[0])?);
            return Ok(());
        }
        let parts: Vec<SentenceGradient> = batch
            .par_iter()
            .map(|ex| self.sentence_gradient(ex))
            .collect::<Result<_>>()?;
        for p in parts {
            out.merge(p);
        }
        Ok(())
    }

    pub fn crf_gradient(&self, batch: &[Example]) -> Result<CrfGradient> {
        let mut out = CrfGradient::new(self.weights.len());
        self.crf_gradient_into(batch, &mut out)?;
        Ok(out)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut out = BufWriter::new(fs::File::create(path)?);
        self.write_to(&mut out)?;
        out.flush()?;
        Ok(())
    }

    pub fn write_to<W: Write>(&self, out: &mut W) -> Result<()> {
        let representation = match &self.representation {
            WordRepresentation::OneHot => RepresentationRecord::OneHot,
            WordRepresentation::Clusters(c) => RepresentationRecord::Brown {
                paths: c.paths.clone(),
                prefix_lengths: c.prefix_lengths.clone(),
            },
            WordRepresentation::Embedding(m) => RepresentationRecord::Embedding {
                vocabulary: (**m.vocab()).clone(),
                dim: m.dim(),
                data: m.as_slice().to_vec(),
            },
        };
        let record = Checkpoint {
            format: CHECKPOINT_FORMAT.into(),
            version: CHECKPOINT_VERSION,
            task_kind: self.task_kind,
            labels: self.labels.clone(),
            templates: self.templates.clone(),
            features: self.features.clone(),
            update_representations: self.update_representations,
            constrained_decoding: self.constrained_decoding,
            weights: self.weights.clone(),
            representation,
        };
        serde_json::to_writer(&mut *out, &record)?;
        out.write_all(b"\n")?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let record: Checkpoint = serde_json::from_reader(BufReader::new(fs::File::open(path)?))?;
        if record.format != CHECKPOINT_FORMAT || record.version != CHECKPOINT_VERSION {
            return Err(Error::Format {
                line: 1,
                message: format!(
                    "expected {CHECKPOINT_FORMAT} v{CHECKPOINT_VERSION}, found {} v{}",
                    record.format, record.version
                ),
            });
        }
        let representation = match record.representation {
            RepresentationRecord::OneHot => WordRepresentation::OneHot,
            RepresentationRecord::Brown { paths, prefix_lengths } => {
                WordRepresentation::Clusters(ClusterFeatures::new(paths, prefix_lengths))
            }
            RepresentationRecord::Embedding { vocabulary, dim, data } => {
                WordRepresentation::Embedding(EmbeddingMatrix::from_data(Arc::new(vocabulary), dim, data)?)
            }
        };
        let mut model = TaggerModel::new(
            record.labels,
            record.features,
            record.templates,
            representation,
            record.task_kind,
        )?;
        if record.weights.len() != model.weights.len() {
            return Err(Error::Format {
                line: 1,
                message: format!(
                    "checkpoint has {} weights, layout needs {}",
                    record.weights.len(),
                    model.weights.len()
                ),
            });
        }
        model.weights = record.weights;
        model.update_representations = record.update_representations;
        model.constrained_decoding = record.constrained_decoding;
        Ok(model)
    }
}

fn index_of(items: &[String], what: &str) -> Result<HashMap<String, usize>> {
    let mut index = HashMap::with_capacity(items.len());
    for (i, s) in items.iter().enumerate() {
        if index.insert(s.clone(), i).is_some() {
            return Err(Error::Domain(format!("duplicate {what} {s:?}")));
        }
    }
    Ok(index)
}

#[derive(Serialize, Deserialize)]
struct Checkpoint {
    format: String,
    version: u32,
    task_kind: TaskKind,
    labels: Vec<String>,
    templates: TemplateSet,
    features: Vec<String>,
    update_representations: bool,
    constrained_decoding: bool,
    weights: Vec<f64>,
    representation: RepresentationRecord,
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
enum RepresentationRecord {
    OneHot,
    Brown {
        paths: BTreeMap<String, String>,
        prefix_lengths: Vec<usize>,
    },
    Embedding {
        vocabulary: Vocabulary,
        dim: usize,
        data: Vec<f64>,
    },
}
