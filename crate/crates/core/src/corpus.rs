//! Corpus ingestion: digit normalization, vocabularies, and CoNLL column files.

use std::collections::HashMap;
use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Surface form of the reserved unknown-word type.
pub const UNK: &str = "<unk>";

/// Replaces every maximal run of ASCII digits with `NUM<len>`.
///
/// `"10.20"` becomes `"NUM2.NUM2"`. The rendered run length is itself made of
/// digits, so the transformation is not idempotent: only digit-free tokens
/// are fixed points.
pub fn normalize_digits(token: &str) -> String {
    let mut out = String::with_capacity(token.len() + 4);
    let mut run = 0usize;
    for ch in token.chars() {
        if ch.is_ascii_digit() {
            run += 1;
            continue;
        }
        if run > 0 {
            out.push_str("NUM");
            out.push_str(&run.to_string());
            run = 0;
        }
        out.push(ch);
    }
    if run > 0 {
        out.push_str("NUM");
        out.push_str(&run.to_string());
    }
    out
}

/// Word-type inventory with dense ids and frequencies.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(from = "VocabularyRepr")]
pub struct Vocabulary {
    words: Vec<String>,
    counts: Vec<u64>,
    #[serde(skip)]
    index: HashMap<String, usize>,
    unk_id: usize,
}

impl Vocabulary {
    /// Builds a vocabulary from explicit `(word, count)` entries in the given
    /// order. The unknown type is taken from an existing `<unk>` entry or
    /// appended with count zero.
    pub fn from_entries<I, S>(entries: I) -> Result<Self>
    where
        I: IntoIterator<Item = (S, u64)>,
        S: Into<String>,
    {
        let mut words = Vec::new();
        let mut counts = Vec::new();
        let mut index = HashMap::new();
        for (word, count) in entries {
            let word = word.into();
            if index.contains_key(&word) {
                return Err(Error::Domain(format!("duplicate vocabulary entry {word:?}")));
            }
            index.insert(word.clone(), words.len());
            words.push(word);
            counts.push(count);
        }
        let unk_id = match index.get(UNK) {
            Some(&id) => id,
            None => {
                index.insert(UNK.to_string(), words.len());
                words.push(UNK.to_string());
                counts.push(0);
                words.len() - 1
            }
        };
        Ok(Vocabulary {
            words,
            counts,
            index,
            unk_id,
        })
    }

    /// Returns a copy with `token` appended (count zero) unless already present.
    pub fn with_token(&self, token: &str) -> Self {
        let mut out = self.clone();
        if !out.index.contains_key(token) {
            out.index.insert(token.to_string(), out.words.len());
            out.words.push(token.to_string());
            out.counts.push(0);
        }
        out
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn unk_id(&self) -> usize {
        self.unk_id
    }

    pub fn words(&self) -> &[String] {
        &self.words
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn word(&self, id: usize) -> &str {
        &self.words[id]
    }

    pub fn count(&self, id: usize) -> u64 {
        self.counts[id]
    }

    pub fn get(&self, word: &str) -> Option<usize> {
        self.index.get(word).copied()
    }

    /// Id of `word`, falling back to the unknown type.
    pub fn id_or_unk(&self, word: &str) -> usize {
        self.get(word).unwrap_or(self.unk_id)
    }

    /// Known (non-reserved) word ids in vocabulary order.
    pub fn known_ids(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.words.len()).filter(move |&id| id != self.unk_id)
    }

    pub fn encode<S: AsRef<str>>(&self, sentence: &[S]) -> Vec<usize> {
        sentence.iter().map(|w| self.id_or_unk(w.as_ref())).collect()
    }

    pub fn encode_all<S: AsRef<str>>(&self, sentences: &[Vec<S>]) -> Vec<Vec<usize>> {
        sentences.iter().map(|s| self.encode(s)).collect()
    }

    /// Writes `word<TAB>count` lines in id order.
    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut out = BufWriter::new(fs::File::create(path)?);
        self.write_to(&mut out)?;
        out.flush()?;
        Ok(())
    }

    pub fn write_to<W: Write>(&self, out: &mut W) -> Result<()> {
        for (word, count) in self.words.iter().zip(&self.counts) {
            writeln!(out, "{word}\t{count}")?;
        }
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let reader = BufReader::new(fs::File::open(path)?);
        let mut entries = Vec::new();
        for (lineno, line) in reader.lines().enumerate() {
            let line = line?;
            if line.is_empty() {
                continue;
            }
            let parse_err = |message: &str| Error::Parse {
                path: path.to_path_buf(),
                line: lineno + 1,
                message: message.to_string(),
            };
            let (word, count) = line
                .split_once('\t')
                .ok_or_else(|| parse_err("expected word<TAB>count"))?;
            let count = count
                .trim()
                .parse::<u64>()
                .map_err(|_| parse_err("count is not a non-negative integer"))?;
            entries.push((word.to_string(), count));
        }
        if entries.is_empty() {
            return Err(Error::EmptyInput(path.display().to_string()));
        }
        Self::from_entries(entries)
    }

}

#[derive(Deserialize)]
struct VocabularyRepr {
    words: Vec<String>,
    counts: Vec<u64>,
    unk_id: usize,
}

impl From<VocabularyRepr> for Vocabulary {
    fn from(r: VocabularyRepr) -> Self {
        let index = r
            .words
            .iter()
            .enumerate()
            .map(|(i, w)| (w.clone(), i))
            .collect();
        Vocabulary {
            words: r.words,
            counts: r.counts,
            index,
            unk_id: r.unk_id,
        }
    }
}

/// Counts token types and keeps those with `count >= min_count`.
///
/// Retained types are ordered by descending count with lexicographic
/// tie-break. The unknown type takes id 0 and absorbs the count of every
/// filtered token.
pub fn build_vocabulary<I, S>(tokens: I, min_count: u64) -> Result<Vocabulary>
where
    I: IntoIterator<Item = S>,
    S: AsRef<str>,
{
    if min_count == 0 {
        return Err(Error::Domain("min_count must be positive".into()));
    }
    let mut freq: HashMap<String, u64> = HashMap::new();
    let mut total = 0u64;
    for tok in tokens {
        *freq.entry(tok.as_ref().to_string()).or_insert(0) += 1;
        total += 1;
    }
    if total == 0 {
        return Err(Error::EmptyInput("corpus contains no tokens".into()));
    }
    let mut unk_count = freq.remove(UNK).unwrap_or(0);
    let mut kept: Vec<(String, u64)> = Vec::with_capacity(freq.len());
    for (word, count) in freq {
        if count >= min_count {
            kept.push((word, count));
        } else {
            unk_count += count;
        }
    }
    kept.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    let entries = std::iter::once((UNK.to_string(), unk_count)).chain(kept);
    Vocabulary::from_entries(entries)
}

/// Reads a whitespace-tokenised corpus, one sentence per line. Blank lines
/// are skipped.
pub fn read_corpus(path: impl AsRef<Path>, normalize: bool) -> Result<Vec<Vec<String>>> {
    let path = path.as_ref();
    let reader = BufReader::new(fs::File::open(path)?);
    let mut sentences = Vec::new();
    for line in reader.lines() {
        let line = line?;
        let sentence: Vec<String> = line
            .split_whitespace()
            .map(|t| if normalize { normalize_digits(t) } else { t.to_string() })
            .collect();
        if !sentence.is_empty() {
            sentences.push(sentence);
        }
    }
    if sentences.is_empty() {
        return Err(Error::EmptyInput(path.display().to_string()));
    }
    Ok(sentences)
}

pub fn write_corpus<W: Write>(out: &mut W, sentences: &[Vec<String>]) -> Result<()> {
    for sentence in sentences {
        writeln!(out, "{}", sentence.join(" "))?;
    }
    Ok(())
}

/// Whether labels are plain per-token classes or IOB-coded spans.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum TaskKind {
    #[default]
    TokenClassification,
    SpanIob,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct LabelledDataset {
    pub sentences: Vec<Vec<String>>,
    pub labels: Vec<Vec<String>>,
    pub task_kind: TaskKind,
}

impl LabelledDataset {
    pub fn new(
        sentences: Vec<Vec<String>>,
        labels: Vec<Vec<String>>,
        task_kind: TaskKind,
    ) -> Result<Self> {
        if sentences.len() != labels.len() {
            return Err(Error::Domain(format!(
                "{} sentences but {} label sequences",
                sentences.len(),
                labels.len()
            )));
        }
        for (i, (s, l)) in sentences.iter().zip(&labels).enumerate() {
            if s.len() != l.len() {
                return Err(Error::Domain(format!(
                    "sentence {i} has {} tokens but {} labels",
                    s.len(),
                    l.len()
                )));
            }
        }
        Ok(LabelledDataset {
            sentences,
            labels,
            task_kind,
        })
    }

    pub fn len(&self) -> usize {
        self.sentences.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sentences.is_empty()
    }

    pub fn token_count(&self) -> usize {
        self.sentences.iter().map(Vec::len).sum()
    }

    /// Sub-dataset made of the sentences at `indices`, in that order.
    pub fn subset(&self, indices: &[usize]) -> Self {
        LabelledDataset {
            sentences: indices.iter().map(|&i| self.sentences[i].clone()).collect(),
            labels: indices.iter().map(|&i| self.labels[i].clone()).collect(),
            task_kind: self.task_kind,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ConllOptions {
    pub token_column: usize,
    pub label_column: usize,
    pub normalize_digits: bool,
    pub task_kind: TaskKind,
}

impl Default for ConllOptions {
    fn default() -> Self {
        ConllOptions {
            token_column: 0,
            label_column: 1,
            normalize_digits: false,
            task_kind: TaskKind::TokenClassification,
        }
    }
}

/// Loads a whitespace/tab separated column file with blank lines between
/// sentences. `-DOCSTART-` lines act as separators. Span tasks have their
/// labels passed through [`repair_iob`].
pub fn load_conll(path: impl AsRef<Path>, opts: &ConllOptions) -> Result<LabelledDataset> {
    let path = path.as_ref();
    let reader = BufReader::new(fs::File::open(path)?);
    let needed = opts.token_column.max(opts.label_column) + 1;

    let mut sentences = Vec::new();
    let mut labels = Vec::new();
    let mut cur_tokens = Vec::new();
    let mut cur_labels = Vec::new();
    let mut flush = |toks: &mut Vec<String>, labs: &mut Vec<String>| -> Result<()> {
        if toks.is_empty() {
            return Ok(());
        }
        let mut labs_out = std::mem::take(labs);
        if opts.task_kind == TaskKind::SpanIob {
            labs_out = repair_iob(&labs_out)?;
        }
        sentences.push(std::mem::take(toks));
        labels.push(labs_out);
        Ok(())
    };

    for (lineno, line) in reader.lines().enumerate() {
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with("-DOCSTART-") {
            flush(&mut cur_tokens, &mut cur_labels)?;
            continue;
        }
        let cols: Vec<&str> = trimmed.split_whitespace().collect();
        if cols.len() < needed {
            return Err(Error::Parse {
                path: path.to_path_buf(),
                line: lineno + 1,
                message: format!("expected at least {needed} columns, found {}", cols.len()),
            });
        }
        let token = cols[opts.token_column];
        cur_tokens.push(if opts.normalize_digits {
            normalize_digits(token)
        } else {
            token.to_string()
        });
        let label = cols[opts.label_column];
        if opts.task_kind == TaskKind::SpanIob {
            parse_tag(label).map_err(|_| Error::Parse {
                path: path.to_path_buf(),
                line: lineno + 1,
                message: format!("invalid IOB tag {label:?}"),
            })?;
        }
        cur_labels.push(label.to_string());
    }
    flush(&mut cur_tokens, &mut cur_labels)?;
    drop(flush);

    if sentences.is_empty() {
        return Err(Error::EmptyInput(path.display().to_string()));
    }
    LabelledDataset::new(sentences, labels, opts.task_kind)
}

/// Writes `token<TAB>label` rows with a blank line after each sentence.
pub fn save_conll(dataset: &LabelledDataset, path: impl AsRef<Path>) -> Result<()> {
    let mut out = BufWriter::new(fs::File::create(path)?);
    for (sentence, labels) in dataset.sentences.iter().zip(&dataset.labels) {
        for (tok, lab) in sentence.iter().zip(labels) {
            writeln!(out, "{tok}\t{lab}")?;
        }
        writeln!(out)?;
    }
    out.flush()?;
    Ok(())
}

/// Parsed IOB tag.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Tag<'a> {
    Outside,
    Begin(&'a str),
    Inside(&'a str),
}

pub fn parse_tag(tag: &str) -> Result<Tag<'_>> {
    if tag == "O" {
        return Ok(Tag::Outside);
    }
    match tag.split_once('-') {
        Some(("B", ty)) if !ty.is_empty() => Ok(Tag::Begin(ty)),
        Some(("I", ty)) if !ty.is_empty() => Ok(Tag::Inside(ty)),
        _ => Err(Error::InvalidTag(tag.to_string())),
    }
}

/// True when every tag parses and every `I-X` continues a `B-X`/`I-X`.
pub fn is_valid_iob<S: AsRef<str>>(tags: &[S]) -> bool {
    let mut prev: Option<&str> = None;
    for tag in tags {
        match parse_tag(tag.as_ref()) {
            Err(_) => return false,
            Ok(Tag::Outside) => prev = None,
            Ok(Tag::Begin(ty)) => prev = Some(ty),
            Ok(Tag::Inside(ty)) => {
                if prev != Some(ty) {
                    return false;
                }
            }
        }
    }
    true
}

/// Rewrites every `I-X` that does not continue an `X` span into `B-X`.
pub fn repair_iob<S: AsRef<str>>(tags: &[S]) -> Result<Vec<String>> {
    let mut out = Vec::with_capacity(tags.len());
    let mut prev: Option<String> = None;
    for tag in tags {
        let tag = tag.as_ref();
        match parse_tag(tag)? {
            Tag::Outside => {
                prev = None;
                out.push(tag.to_string());
            }
            Tag::Begin(ty) => {
                prev = Some(ty.to_string());
                out.push(tag.to_string());
            }
            Tag::Inside(ty) => {
                if prev.as_deref() == Some(ty) {
                    out.push(tag.to_string());
                } else {
                    out.push(format!("B-{ty}"));
                    prev = Some(ty.to_string());
                }
            }
        }
    }
    Ok(out)
}
