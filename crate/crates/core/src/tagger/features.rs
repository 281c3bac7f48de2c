//! Indicator templates and dense representation slots for one token position.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::repr::WordRepresentation;

/// Hand-crafted indicator templates plus the window used for
/// representation features.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TemplateSet {
    pub identity: bool,
    pub lowercase: bool,
    /// Prefixes and suffixes of length 1 to 3.
    pub affixes: bool,
    pub shape: bool,
    pub digit: bool,
    pub hyphen: bool,
    /// Offsets at which hand-crafted templates fire.
    pub offsets: Vec<i32>,
    /// Offsets whose word representations feed the model.
    pub rep_offsets: Vec<i32>,
}

const TEMPLATE_NAMES: [&str; 6] = ["identity", "lowercase", "affixes", "shape", "digit", "hyphen"];

impl TemplateSet {
    /// No hand-crafted templates; representation features over `-2..=2`.
    pub fn none() -> Self {
        TemplateSet {
            identity: false,
            lowercase: false,
            affixes: false,
            shape: false,
            digit: false,
            hyphen: false,
            offsets: vec![-2, -1, 0, 1, 2],
            rep_offsets: vec![-2, -1, 0, 1, 2],
        }
    }

    /// Every hand-crafted template.
    pub fn generic() -> Self {
        TemplateSet {
            identity: true,
            lowercase: true,
            affixes: true,
            shape: true,
            digit: true,
            hyphen: true,
            ..Self::none()
        }
    }

    /// Parses a comma-separated mask such as `lowercase,shape`, or `all` /
    /// `none`.
    pub fn from_mask(mask: &str) -> Result<Self> {
        let mask = mask.trim();
        if mask == "all" {
            return Ok(Self::generic());
        }
        let mut set = Self::none();
        if mask == "none" || mask.is_empty() {
            return Ok(set);
        }
        for name in mask.split(',').map(str::trim) {
            match name {
                "identity" => set.identity = true,
                "lowercase" => set.lowercase = true,
                "affixes" => set.affixes = true,
                "shape" => set.shape = true,
                "digit" => set.digit = true,
                "hyphen" => set.hyphen = true,
                other => {
                    return Err(Error::Domain(format!(
                        "unknown template {other:?}; expected one of {TEMPLATE_NAMES:?}, `all` or `none`"
                    )))
                }
            }
        }
        Ok(set)
    }

    pub fn mask(&self) -> String {
        let flags = [self.identity, self.lowercase, self.affixes, self.shape, self.digit, self.hyphen];
        let on: Vec<&str> = TEMPLATE_NAMES
            .iter()
            .zip(flags)
            .filter(|(_, f)| *f)
            .map(|(n, _)| *n)
            .collect();
        if on.is_empty() {
            "none".into()
        } else {
            on.join(",")
        }
    }

    fn any_handcrafted(&self) -> bool {
        self.identity || self.lowercase || self.affixes || self.shape || self.digit || self.hyphen
    }
}

impl Default for TemplateSet {
    fn default() -> Self {
        Self::generic()
    }
}

/// Collapsed character-class shape: `Xxxx-dd` becomes `Xx-d`.
pub fn word_shape(word: &str) -> String {
    let mut out = String::new();
    let mut last = None;
    for ch in word.chars() {
        let class = if ch.is_uppercase() {
            'X'
        } else if ch.is_lowercase() {
            'x'
        } else if ch.is_ascii_digit() {
            'd'
        } else {
            ch
        };
        if last != Some(class) {
            out.push(class);
            last = Some(class);
        }
    }
    out
}

fn handcrafted(word: &str, off: i32, t: &TemplateSet, out: &mut Vec<String>) {
    if t.identity {
        out.push(format!("w[{off}]={word}"));
    }
    if t.lowercase {
        out.push(format!("lc[{off}]={}", word.to_lowercase()));
    }
    if t.affixes {
        let chars: Vec<char> = word.chars().collect();
        for k in 1..=3.min(chars.len()) {
            let pre: String = chars[..k].iter().collect();
            let suf: String = chars[chars.len() - k..].iter().collect();
            out.push(format!("pre{k}[{off}]={pre}"));
            out.push(format!("suf{k}[{off}]={suf}"));
        }
    }
    if t.shape {
        out.push(format!("shape[{off}]={}", word_shape(word)));
    }
    if t.digit && word.chars().any(|c| c.is_ascii_digit()) {
        out.push(format!("digit[{off}]"));
    }
    if t.hyphen && word.contains('-') {
        out.push(format!("hyphen[{off}]"));
    }
}

fn boundary(off: i32) -> String {
    if off < 0 {
        format!("<S>[{off}]")
    } else {
        format!("</S>[{off}]")
    }
}

/// Features of one token position.
#[derive(Debug, Clone, PartialEq)]
pub struct PositionFeatures {
    /// Active indicator names, sorted and de-duplicated; always contains
    /// `bias`.
    pub indicators: Vec<String>,
    /// Embedding row per representation slot; `None` beyond the sentence.
    pub rows: Vec<Option<usize>>,
}

impl PositionFeatures {
    /// Concatenated dense block, zero-filled at boundary slots.
    pub fn dense(&self, representation: &WordRepresentation) -> Vec<f64> {
        match representation.embedding() {
            Some(m) => {
                let d = m.dim();
                let mut out = vec![0.0; self.rows.len() * d];
                for (slot, row) in self.rows.iter().enumerate() {
                    if let Some(id) = row {
                        out[slot * d..(slot + 1) * d].copy_from_slice(m.row(*id));
                    }
                }
                out
            }
            None => Vec::new(),
        }
    }
}

/// Deterministic features for `sentence[position]`.
pub fn assemble_features<S: AsRef<str>>(
    sentence: &[S],
    position: usize,
    templates: &TemplateSet,
    representation: &WordRepresentation,
) -> Result<PositionFeatures> {
    if position >= sentence.len() {
        return Err(Error::IndexOutOfRange {
            index: position,
            len: sentence.len(),
        });
    }
    let at = |off: i32| -> Option<&str> {
        let p = position as i64 + off as i64;
        if p < 0 || p >= sentence.len() as i64 {
            None
        } else {
            Some(sentence[p as usize].as_ref())
        }
    };
    let mut indicators = vec!["bias".to_string()];
    if templates.any_handcrafted() {
        for &off in &templates.offsets {
            match at(off) {
                Some(w) => handcrafted(w, off, templates, &mut indicators),
                None => indicators.push(boundary(off)),
            }
        }
    }
    let mut rows = Vec::new();
    for &off in &templates.rep_offsets {
        match at(off) {
            Some(w) => match representation {
                WordRepresentation::Embedding(m) => rows.push(Some(m.vocab().id_or_unk(w))),
                other => {
                    for f in other.indicators(w) {
                        let f = if f.starts_with("w=") {
                            format!("w[{off}]={}", &f[2..])
                        } else {
                            format!("r[{off}]|{f}")
                        };
                        indicators.push(f);
                    }
                }
            },
            None => {
                if matches!(representation, WordRepresentation::Embedding(_)) {
                    rows.push(None);
                } else {
                    indicators.push(boundary(off));
                }
            }
        }
    }
    indicators.sort_unstable();
    indicators.dedup();
    Ok(PositionFeatures { indicators, rows })
}
