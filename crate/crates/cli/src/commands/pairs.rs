use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use clap::Args;
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};
use wordrep::corpus::Vocabulary;
use wordrep::repr::EmbeddingMatrix;
use wordrep::rng::seeded;

use crate::config::{required, sibling, usage, CommandConfig};
use crate::data::{ensure_exists, load_embeddings};

/// Days of the week and country names.
pub const DEFAULT_WORDS: [&str; 30] = [
    "monday", "tuesday", "wednesday", "thursday", "friday", "saturday", "sunday", "france", "germany", "italy",
    "spain", "china", "japan", "india", "russia", "brazil", "canada", "mexico", "egypt", "kenya", "nigeria",
    "australia", "argentina", "chile", "peru", "sweden", "norway", "poland", "greece", "turkey",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PairsConfig {
    /// Embeddings before updating.
    pub before: Option<PathBuf>,
    /// Embeddings after updating.
    pub after: Option<PathBuf>,
    /// Pair CSV; words missing from the vocabulary go to `<stem>.skipped.txt`.
    pub output: Option<PathBuf>,
    /// `list`, `top-k`, `random-k`, or `mixed` (the list, then random words
    /// up to `k`).
    pub mode: String,
    pub words: Vec<String>,
    pub k: usize,
    pub seed: u64,
    /// Vocabulary file with counts, used to rank `top-k`; file order otherwise.
    pub vocab: Option<PathBuf>,
}

impl Default for PairsConfig {
    fn default() -> Self {
        PairsConfig {
            before: None,
            after: None,
            output: None,
            mode: "list".into(),
            words: DEFAULT_WORDS.iter().map(|w| w.to_string()).collect(),
            k: 60,
            seed: 1,
            vocab: None,
        }
    }
}

impl CommandConfig for PairsConfig {
    const SECTION: &'static str = "export-pairs";
    const PATH_FIELDS: &'static [&'static str] = &["before", "after", "output", "vocab"];

    fn primary_output(&self) -> Option<&Path> {
        self.output.as_deref()
    }
}

#[derive(Debug, Default, Args, Serialize)]
pub struct PairsArgs {
    #[arg(long)]
    pub before: Option<PathBuf>,
    #[arg(long)]
    pub after: Option<PathBuf>,
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// list, top-k, random-k or mixed.
    #[arg(long)]
    pub mode: Option<String>,
    /// Comma-separated words for the list and mixed modes.
    #[arg(long, value_delimiter = ',')]
    pub words: Option<Vec<String>>,
    #[arg(short, long)]
    pub k: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub vocab: Option<PathBuf>,
}

/// Picks row ids and the requested words absent from `vocab`.
pub fn select(cfg: &PairsConfig, vocab: &Vocabulary, counts: Option<&Vocabulary>) -> Result<(Vec<usize>, Vec<String>)> {
    let candidates: Vec<usize> = vocab.known_ids().filter(|&id| id != vocab.unk_id()).collect();
    let mut chosen = Vec::new();
    let mut skipped = Vec::new();
    let take_list = |chosen: &mut Vec<usize>, skipped: &mut Vec<String>| {
        for w in &cfg.words {
            match vocab.get(w) {
                Some(id) if id != vocab.unk_id() && !chosen.contains(&id) => chosen.push(id),
                Some(_) => {}
                None => skipped.push(w.clone()),
            }
        }
    };
    let fill_random = |chosen: &mut Vec<usize>| {
        let mut rest: Vec<usize> = candidates.iter().copied().filter(|id| !chosen.contains(id)).collect();
        rest.shuffle(&mut seeded(cfg.seed));
        let need = cfg.k.saturating_sub(chosen.len());
        chosen.extend(rest.into_iter().take(need));
    };
    match cfg.mode.as_str() {
        "list" => take_list(&mut chosen, &mut skipped),
        "top-k" => {
            let mut ranked = candidates.clone();
            if let Some(c) = counts {
                let count = |id: usize| c.get(vocab.word(id)).map_or(0, |j| c.count(j));
                ranked.sort_by_key(|&id| std::cmp::Reverse(count(id)));
            }
            chosen.extend(ranked.into_iter().take(cfg.k));
        }
        "random-k" => fill_random(&mut chosen),
        "mixed" => {
            take_list(&mut chosen, &mut skipped);
            chosen.truncate(cfg.k);
            fill_random(&mut chosen);
        }
        other => {
            return Err(usage(format!(
                "invalid mode {other:?}: expected list, top-k, random-k or mixed"
            )))
        }
    }
    if cfg.mode != "list" && chosen.len() < cfg.k {
        log::warn!("only {} words available, fewer than k = {}", chosen.len(), cfg.k);
    }
    Ok((chosen, skipped))
}

pub fn displacement(before: &[f64], after: &[f64]) -> f64 {
    before.iter().zip(after).map(|(b, a)| (a - b) * (a - b)).sum::<f64>().sqrt()
}

pub fn run(cfg: &PairsConfig) -> Result<()> {
    let section = PairsConfig::SECTION;
    let before_path = required(&cfg.before, "before", section)?;
    let after_path = required(&cfg.after, "after", section)?;
    let output = required(&cfg.output, "output", section)?;
    let before = load_embeddings(before_path, "embedding file")?;
    let after = load_embeddings(after_path, "embedding file")?;
    if before.dim() != after.dim() || before.vocab().words() != after.vocab().words() {
        return Err(usage(format!(
            "{} and {} must share vocabulary and dimension",
            before_path.display(),
            after_path.display()
        )));
    }
    let counts = match &cfg.vocab {
        Some(p) => {
            ensure_exists(p, "vocabulary file")?;
            Some(Vocabulary::load(p).with_context(|| format!("loading vocabulary file {}", p.display()))?)
        }
        None => None,
    };
    let (ids, skipped) = select(cfg, before.vocab(), counts.as_ref())?;
    write_pairs(output, &before, &after, &ids)?;
    let skipped_path = sibling(output, "skipped.txt");
    let text: String = skipped.iter().map(|w| format!("{w}\n")).collect();
    fs::write(&skipped_path, text).with_context(|| format!("cannot write {}", skipped_path.display()))?;
    if !skipped.is_empty() {
        log::warn!("{} words not in vocabulary, listed in {}", skipped.len(), skipped_path.display());
    }
    Ok(())
}

fn write_pairs(path: &Path, before: &EmbeddingMatrix, after: &EmbeddingMatrix, ids: &[usize]) -> Result<()> {
    let d = before.dim();
    let mut w = csv::Writer::from_path(path).with_context(|| format!("cannot write {}", path.display()))?;
    let header = ["word".to_string(), "displacement".to_string()]
        .into_iter()
        .chain((0..d).map(|k| format!("b{k}")))
        .chain((0..d).map(|k| format!("a{k}")));
    w.write_record(header)?;
    for &id in ids {
        let (b, a) = (before.row(id), after.row(id));
        let record = [before.vocab().word(id).to_string(), displacement(b, a).to_string()]
            .into_iter()
            .chain(b.iter().map(f64::to_string))
            .chain(a.iter().map(f64::to_string));
        w.write_record(record)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use wordrep::corpus::build_vocabulary;

    fn vocab(n: usize) -> Vocabulary {
        let tokens: Vec<String> = (0..n).flat_map(|i| vec![format!("w{i}"); n - i]).collect();
        build_vocabulary(tokens.iter(), 1).unwrap()
    }

    fn cfg(mode: &str, k: usize) -> PairsConfig {
        PairsConfig {
            mode: mode.into(),
            k,
            ..PairsConfig::default()
        }
    }

    #[test]
    fn random_selection_is_seeded_and_distinct() {
        let v = vocab(100);
        let (a, _) = select(&cfg("random-k", 60), &v, None).unwrap();
        let (b, _) = select(&cfg("random-k", 60), &v, None).unwrap();
        assert_eq!(a.len(), 60);
        assert_eq!(a, b);
        let mut sorted = a.clone();
        sorted.sort();
        sorted.dedup();
        assert_eq!(sorted.len(), 60);
        assert!(!a.contains(&v.unk_id()));
    }

    #[test]
    fn mixed_keeps_list_words_first() {
        let v = vocab(100);
        let mut c = cfg("mixed", 60);
        c.words = vec!["w5".into(), "absent".into(), "w7".into()];
        let (ids, skipped) = select(&c, &v, None).unwrap();
        assert_eq!(ids.len(), 60);
        assert_eq!(&ids[..2], &[v.get("w5").unwrap(), v.get("w7").unwrap()]);
        assert_eq!(skipped, vec!["absent".to_string()]);
    }

    #[test]
    fn top_k_follows_counts() {
        let v = vocab(10);
        let (ids, _) = select(&cfg("top-k", 3), &v, Some(&v)).unwrap();
        let words: Vec<&str> = ids.iter().map(|&i| v.word(i)).collect();
        assert_eq!(words, ["w0", "w1", "w2"]);
    }

    #[test]
    fn displacement_is_euclidean() {
        assert_eq!(displacement(&[0.0, 0.0], &[3.0, 4.0]), 5.0);
        assert_eq!(displacement(&[1.5, -2.0], &[1.5, -2.0]), 0.0);
    }
}
