//! Token accuracy, span F1 and out-of-vocabulary accuracy over sentence lists.

use std::collections::HashSet;

use crate::corpus::{is_valid_iob, parse_tag, Tag};
use crate::error::{Error, Result};

fn check_shapes<A: AsRef<str>, B: AsRef<str>>(gold: &[Vec<A>], pred: &[Vec<B>]) -> Result<()> {
    if gold.len() != pred.len() {
        return Err(Error::Domain(format!(
            "{} gold sentences but {} predicted",
            gold.len(),
            pred.len()
        )));
    }
    for (i, (g, p)) in gold.iter().zip(pred).enumerate() {
        if g.len() != p.len() {
            return Err(Error::Domain(format!(
                "sentence {i}: {} gold labels but {} predicted",
                g.len(),
                p.len()
            )));
        }
    }
    Ok(())
}

/// Fraction of positions whose labels agree.
pub fn token_accuracy<A: AsRef<str>, B: AsRef<str>>(gold: &[Vec<A>], pred: &[Vec<B>]) -> Result<f64> {
    check_shapes(gold, pred)?;
    let mut total = 0usize;
    let mut hits = 0usize;
    for (g, p) in gold.iter().zip(pred) {
        for (a, b) in g.iter().zip(p) {
            total += 1;
            hits += usize::from(a.as_ref() == b.as_ref());
        }
    }
    if total == 0 {
        return Err(Error::EmptyInput("no tokens to score".into()));
    }
    Ok(hits as f64 / total as f64)
}

/// Labelled span with inclusive token bounds.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Span {
    pub start: usize,
    pub end: usize,
    pub kind: String,
}

/// Spans of a valid IOB sequence.
pub fn extract_spans<S: AsRef<str>>(tags: &[S]) -> Result<Vec<Span>> {
    if !is_valid_iob(tags) {
        let shown: Vec<&str> = tags.iter().map(AsRef::as_ref).collect();
        return Err(Error::Domain(format!("invalid IOB sequence {shown:?}")));
    }
    let mut spans = Vec::new();
    let mut open: Option<Span> = None;
    for (t, tag) in tags.iter().enumerate() {
        match parse_tag(tag.as_ref())? {
            Tag::Inside(_) => {
                if let Some(s) = open.as_mut() {
                    s.end = t;
                }
            }
            other => {
                spans.extend(open.take());
                if let Tag::Begin(kind) = other {
                    open = Some(Span {
                        start: t,
                        end: t,
                        kind: kind.to_string(),
                    });
                }
            }
        }
    }
    spans.extend(open);
    Ok(spans)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpanScores {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub gold_spans: usize,
    pub predicted_spans: usize,
    pub correct: usize,
}

/// Exact-match span precision, recall and F1. Undefined ratios count as 0.
pub fn span_f1<A: AsRef<str>, B: AsRef<str>>(gold: &[Vec<A>], pred: &[Vec<B>]) -> Result<SpanScores> {
    check_shapes(gold, pred)?;
    let (mut n_gold, mut n_pred, mut correct) = (0, 0, 0);
    for (g, p) in gold.iter().zip(pred) {
        let gs: HashSet<Span> = extract_spans(g)?.into_iter().collect();
        let ps = extract_spans(p)?;
        n_gold += gs.len();
        n_pred += ps.len();
        correct += ps.iter().filter(|s| gs.contains(s)).count();
    }
    let ratio = |a: usize, b: usize| if b == 0 { 0.0 } else { a as f64 / b as f64 };
    let precision = ratio(correct, n_pred);
    let recall = ratio(correct, n_gold);
    let f1 = if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    };
    Ok(SpanScores {
        precision,
        recall,
        f1,
        gold_spans: n_gold,
        predicted_spans: n_pred,
        correct,
    })
}

/// Accuracy restricted to tokens absent from `known`; `None` when there are
/// no such tokens. The count is always returned.
pub fn oov_accuracy<W, A, B>(
    sentences: &[Vec<W>],
    gold: &[Vec<A>],
    pred: &[Vec<B>],
    known: &HashSet<String>,
) -> Result<(Option<f64>, usize)>
where
    W: AsRef<str>,
    A: AsRef<str>,
    B: AsRef<str>,
{
    check_shapes(gold, pred)?;
    check_shapes(sentences, gold)?;
    let mut total = 0usize;
    let mut hits = 0usize;
    for ((s, g), p) in sentences.iter().zip(gold).zip(pred) {
        for ((w, a), b) in s.iter().zip(g).zip(p) {
            if !known.contains(w.as_ref()) {
                total += 1;
                hits += usize::from(a.as_ref() == b.as_ref());
            }
        }
    }
    let value = (total > 0).then(|| hits as f64 / total as f64);
    Ok((value, total))
}
