//! Shared representation types: embedding matrices, context windows and the
//! per-word feature abstraction consumed by the tagger.

use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;
use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::brown::ClusterFeatures;
use crate::corpus::Vocabulary;
use crate::error::{Error, Result};
use crate::rng::seeded;

pub const GRID_DIMS: [usize; 4] = [25, 50, 100, 200];
pub const GRID_WINDOWS: [usize; 3] = [1, 5, 10];
pub const GRID_CLUSTER_COUNTS: [usize; 5] = [250, 500, 1000, 2000, 4000];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ContextMode {
    /// Up to `m` preceding words.
    Previous,
    /// Up to `m` words on each side.
    Surrounding,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Cbow,
    Skipgram,
    Glove,
    Cw,
    Brown,
    Onehot,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Cbow => "cbow",
            Method::Skipgram => "skipgram",
            Method::Glove => "glove",
            Method::Cw => "cw",
            Method::Brown => "brown",
            Method::Onehot => "onehot",
        }
    }

    /// Context convention used when training this method.
    pub fn context_mode(self) -> ContextMode {
        match self {
            Method::Brown => ContextMode::Previous,
            _ => ContextMode::Surrounding,
        }
    }
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "cbow" => Method::Cbow,
            "skipgram" | "skip-gram" => Method::Skipgram,
            "glove" => Method::Glove,
            "cw" => Method::Cw,
            "brown" => Method::Brown,
            "onehot" | "one-hot" => Method::Onehot,
            other => return Err(Error::Domain(format!("unknown method {other:?}"))),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Normalization {
    #[default]
    None,
    UnitL2,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RepresentationConfig {
    pub method: Method,
    pub dim: usize,
    pub window: usize,
    pub context_mode: ContextMode,
    pub clusters: usize,
    pub normalize: Normalization,
}

impl RepresentationConfig {
    pub fn new(method: Method) -> Self {
        RepresentationConfig {
            method,
            dim: 50,
            window: 5,
            context_mode: method.context_mode(),
            clusters: 250,
            normalize: Normalization::None,
        }
    }

    /// Reasons this configuration falls outside the published grid; empty
    /// when it lies on it.
    pub fn grid_violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        match self.method {
            Method::Brown => {
                if !GRID_CLUSTER_COUNTS.contains(&self.clusters) {
                    out.push(format!("cluster count {} not in {GRID_CLUSTER_COUNTS:?}", self.clusters));
                }
            }
            Method::Onehot => {}
            _ => {
                if !GRID_DIMS.contains(&self.dim) {
                    out.push(format!("dimension {} not in {GRID_DIMS:?}", self.dim));
                }
                if !GRID_WINDOWS.contains(&self.window) {
                    out.push(format!("window {} not in {GRID_WINDOWS:?}", self.window));
                }
            }
        }
        out
    }
}

/// Context ids of `sentence[position]` under the given window convention.
/// Surrounding mode returns left neighbours then right neighbours, both in
/// sentence order.
pub fn extract_context(
    sentence: &[usize],
    position: usize,
    m: usize,
    mode: ContextMode,
) -> Result<Vec<usize>> {
    if position >= sentence.len() {
        return Err(Error::IndexOutOfRange {
            index: position,
            len: sentence.len(),
        });
    }
    let start = position.saturating_sub(m);
    let mut out: Vec<usize> = sentence[start..position].to_vec();
    if mode == ContextMode::Surrounding {
        let end = (position + 1 + m).min(sentence.len());
        out.extend_from_slice(&sentence[position + 1..end]);
    }
    Ok(out)
}

/// Dense `|V| x d` matrix of word vectors, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingMatrix {
    vocab: Arc<Vocabulary>,
    dim: usize,
    data: Vec<f64>,
}

impl EmbeddingMatrix {
    pub fn zeros(vocab: Arc<Vocabulary>, dim: usize) -> Self {
        let data = vec![0.0; vocab.len() * dim];
        EmbeddingMatrix { vocab, dim, data }
    }

    pub fn from_data(vocab: Arc<Vocabulary>, dim: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != vocab.len() * dim {
            return Err(Error::Domain(format!(
                "matrix data has {} entries, expected {} x {}",
                data.len(),
                vocab.len(),
                dim
            )));
        }
        Ok(EmbeddingMatrix { vocab, dim, data })
    }

    pub fn vocab(&self) -> &Arc<Vocabulary> {
        &self.vocab
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn rows(&self) -> usize {
        self.vocab.len()
    }

    pub fn row(&self, id: usize) -> &[f64] {
        &self.data[id * self.dim..(id + 1) * self.dim]
    }

    pub fn row_mut(&mut self, id: usize) -> &mut [f64] {
        &mut self.data[id * self.dim..(id + 1) * self.dim]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    /// Row for `word`, or the unknown-word row.
    pub fn lookup(&self, word: &str) -> &[f64] {
        self.row(self.vocab.id_or_unk(word))
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }

    /// Scales every non-zero row to unit Euclidean length.
    pub fn normalize_rows(&mut self) {
        for id in 0..self.rows() {
            let row = self.row_mut(id);
            let norm = row.iter().map(|x| x * x).sum::<f64>().sqrt();
            if norm > 0.0 {
                row.iter_mut().for_each(|x| *x /= norm);
            }
        }
    }

    pub fn apply(&mut self, normalization: Normalization) {
        if normalization == Normalization::UnitL2 {
            self.normalize_rows();
        }
    }

    pub fn cosine(&self, a: usize, b: usize) -> f64 {
        cosine(self.row(a), self.row(b))
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut out = BufWriter::new(fs::File::create(path)?);
        self.write_to(&mut out)?;
        out.flush()?;
        Ok(())
    }

    /// Text format: a `rows dim` header, then `word v1 .. vd` per row. Values
    /// use the shortest representation that parses back to the same `f64`.
    pub fn write_to<W: Write>(&self, out: &mut W) -> Result<()> {
        writeln!(out, "{} {}", self.rows(), self.dim)?;
        for id in 0..self.rows() {
            write!(out, "{}", self.vocab.word(id))?;
            for x in self.row(id) {
                write!(out, " {x}")?;
            }
            writeln!(out)?;
        }
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let reader = BufReader::new(fs::File::open(path)?);
        Self::read_from(reader)
    }

    pub fn read_from<R: BufRead>(reader: R) -> Result<Self> {
        let mut lines = reader.lines();
        let header = match lines.next() {
            Some(line) => line?,
            None => return Err(Error::EmptyInput("embedding file has no header".into())),
        };
        let fields: Vec<&str> = header.split_whitespace().collect();
        let parse_header = |s: &str| {
            s.parse::<usize>().map_err(|_| Error::Format {
                line: 1,
                message: format!("expected `rows dim` header, got {header:?}"),
            })
        };
        if fields.len() != 2 {
            return Err(Error::Format {
                line: 1,
                message: format!("expected `rows dim` header, got {header:?}"),
            });
        }
        let rows = parse_header(fields[0])?;
        let dim = parse_header(fields[1])?;

        let mut entries = Vec::with_capacity(rows);
        let mut data = Vec::with_capacity(rows * dim);
        for (i, line) in lines.enumerate() {
            let line = line?;
            let lineno = i + 2;
            if line.trim().is_empty() {
                continue;
            }
            let mut parts = line.split_whitespace();
            let word = parts.next().unwrap_or_default().to_string();
            let before = data.len();
            for value in parts {
                let x: f64 = value.parse().map_err(|_| Error::Format {
                    line: lineno,
                    message: format!("cannot parse {value:?} as a number"),
                })?;
                if !x.is_finite() {
                    return Err(Error::Format {
                        line: lineno,
                        message: "non-finite value".into(),
                    });
                }
                data.push(x);
            }
            let got = data.len() - before;
            if got != dim {
                return Err(Error::Format {
                    line: lineno,
                    message: format!("row for {word:?} has {got} values, header says {dim}"),
                });
            }
            entries.push((word, 0u64));
        }
        if entries.len() != rows {
            return Err(Error::Format {
                line: entries.len() + 1,
                message: format!("header declares {rows} rows, found {}", entries.len()),
            });
        }
        let vocab = Vocabulary::from_entries(entries)?;
        // a missing unknown row is appended as zeros
        data.resize(vocab.len() * dim, 0.0);
        EmbeddingMatrix::from_data(Arc::new(vocab), dim, data)
    }
}

/// Per-epoch progress reported by the representation trainers.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrainReport {
    /// Mean local-factor loss per epoch.
    pub epoch_losses: Vec<f64>,
    pub warnings: Vec<String>,
}

impl TrainReport {
    pub(crate) fn warn(&mut self, message: String) {
        log::warn!("{message}");
        self.warnings.push(message);
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let na = dot(a, a).sqrt();
    let nb = dot(b, b).sqrt();
    if na == 0.0 || nb == 0.0 {
        0.0
    } else {
        dot(a, b) / (na * nb)
    }
}

/// Uniform initialization in `[-0.5/d, 0.5/d]`.
pub fn init_embeddings(vocab: Arc<Vocabulary>, dim: usize, seed: u64) -> EmbeddingMatrix {
    let mut rng = seeded(seed);
    let bound = 0.5 / dim as f64;
    let data = (0..vocab.len() * dim)
        .map(|_| rng.gen_range(-bound..=bound))
        .collect();
    EmbeddingMatrix { vocab, dim, data }
}

/// Per-word features supplied to the tagger's representation layer.
#[derive(Debug, Clone)]
pub enum WordRepresentation {
    /// Word identity indicators only.
    OneHot,
    /// Bit-string prefix indicators from a cluster hierarchy.
    Clusters(ClusterFeatures),
    /// Dense vectors, looked up by word type.
    Embedding(EmbeddingMatrix),
}

impl WordRepresentation {
    pub fn kind(&self) -> &'static str {
        match self {
            WordRepresentation::OneHot => "onehot",
            WordRepresentation::Clusters(_) => "brown",
            WordRepresentation::Embedding(_) => "embedding",
        }
    }

    /// Width of the dense block contributed per window slot.
    pub fn dense_dim(&self) -> usize {
        match self {
            WordRepresentation::Embedding(m) => m.dim(),
            _ => 0,
        }
    }

    /// Indicator strings for `word`; embeddings contribute none.
    pub fn indicators(&self, word: &str) -> Vec<String> {
        match self {
            WordRepresentation::OneHot => vec![format!("w={word}")],
            WordRepresentation::Clusters(c) => c.features(word),
            WordRepresentation::Embedding(_) => Vec::new(),
        }
    }

    pub fn embedding(&self) -> Option<&EmbeddingMatrix> {
        match self {
            WordRepresentation::Embedding(m) => Some(m),
            _ => None,
        }
    }

    pub fn embedding_mut(&mut self) -> Option<&mut EmbeddingMatrix> {
        match self {
            WordRepresentation::Embedding(m) => Some(m),
            _ => None,
        }
    }
}
