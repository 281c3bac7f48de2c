//! Base-2 learning-curve partitions and the per-size training loop.

use std::collections::HashSet;

use rand::seq::SliceRandom;

use super::report::{Domain, ReportRow};
use crate::corpus::LabelledDataset;
use crate::error::{Error, Result};
use crate::eval::metrics::oov_accuracy;
use crate::repr::WordRepresentation;
use crate::rng::seeded;
use crate::tagger::{evaluate, metric_name, train_tagger, TaggerConfig, TemplateSet};

pub const DEFAULT_PARTS: usize = 10;

/// Nested training subsets: `order` is a seeded permutation and subset `i` is
/// its first `cumulative[i]` entries.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LearningCurve {
    pub partition_sizes: Vec<usize>,
    pub cumulative: Vec<usize>,
    pub order: Vec<usize>,
    pub warnings: Vec<String>,
}

impl LearningCurve {
    pub fn subset(&self, i: usize) -> &[usize] {
        &self.order[..self.cumulative[i]]
    }
}

/// Partition sizes `round(n * 2^i / (2^parts - 1))`, the last one absorbing
/// the rounding remainder. Fails when any partition would be empty.
pub fn partition_sizes(n: usize, parts: usize) -> Result<Vec<usize>> {
    if parts == 0 || parts >= 63 {
        return Err(Error::Domain(format!("cannot split into {parts} partitions")));
    }
    let denom = ((1u64 << parts) - 1) as f64;
    let mut sizes: Vec<usize> = (0..parts - 1)
        .map(|i| (n as f64 * (1u64 << i) as f64 / denom).round() as usize)
        .collect();
    let used: usize = sizes.iter().sum();
    if used >= n {
        return Err(Error::Degenerate(format!("{n} items leave the last of {parts} partitions empty")));
    }
    sizes.push(n - used);
    if let Some(i) = sizes.iter().position(|&s| s == 0) {
        return Err(Error::Degenerate(format!("partition {i} of {parts} is empty for {n} items")));
    }
    Ok(sizes)
}

pub fn partition_learning_curve(n: usize, parts: usize, seed: u64) -> Result<LearningCurve> {
    if n < parts {
        return Err(Error::Degenerate(format!("{n} items cannot fill {parts} partitions")));
    }
    let mut warnings = Vec::new();
    let mut p = parts;
    let sizes = loop {
        match partition_sizes(n, p) {
            Ok(s) => break s,
            Err(Error::Degenerate(_)) if p > 1 => p -= 1,
            Err(e) => return Err(e),
        }
    };
    if p < parts {
        let msg = format!("{n} items support only {p} of the requested {parts} partitions");
        log::warn!("{msg}");
        warnings.push(msg);
    }
    let cumulative = sizes
        .iter()
        .scan(0, |acc, s| {
            *acc += s;
            Some(*acc)
        })
        .collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut seeded(seed));
    Ok(LearningCurve {
        partition_sizes: sizes,
        cumulative,
        order,
        warnings,
    })
}

/// One tagger configuration trained at every size in `sizes` (prefixes of
/// `curve.order`), scored on the in-domain and optional out-of-domain test
/// sets. Returns main-metric rows and OOV rows.
pub struct CurveRun<'a> {
    pub train: &'a LabelledDataset,
    pub dev: Option<&'a LabelledDataset>,
    pub test: &'a LabelledDataset,
    pub out_of_domain: Option<&'a LabelledDataset>,
    pub templates: &'a TemplateSet,
    pub representation: &'a WordRepresentation,
    pub representation_name: &'a str,
    pub config: &'a TaggerConfig,
}

impl CurveRun<'_> {
    pub fn method(&self) -> &'static str {
        if self.config.update_representations {
            "updating"
        } else {
            "fixed"
        }
    }

    pub fn run(&self, order: &[usize], sizes: &[usize]) -> Result<(Vec<ReportRow>, Vec<ReportRow>)> {
        let mut rows = Vec::new();
        let mut oov_rows = Vec::new();
        for &size in sizes {
            if size == 0 || size > order.len() {
                return Err(Error::Domain(format!(
                    "training size {size} outside 1..={}",
                    order.len()
                )));
            }
            let subset = self.train.subset(&order[..size]);
            let (model, _) = train_tagger(&subset, self.dev, self.templates, self.representation, self.config)?;
            let known: HashSet<String> = subset.sentences.iter().flatten().cloned().collect();
            let metric = metric_name(self.train.task_kind);
            let sets = [(Domain::InDomain, Some(self.test)), (Domain::OutOfDomain, self.out_of_domain)];
            for (domain, set) in sets {
                let Some(set) = set else { continue };
                let value = evaluate(&model, set)?;
                let pred = model.predict_all(&set.sentences)?;
                let (oov, count) = oov_accuracy(&set.sentences, &set.labels, &pred, &known)?;
                let row = |metric: &str, value: Option<f64>| ReportRow {
                    method: self.method().into(),
                    representation: self.representation_name.into(),
                    training_size: size,
                    metric: metric.into(),
                    value,
                    domain,
                    oov_count: count,
                };
                rows.push(row(metric, Some(value)));
                oov_rows.push(row("oov-accuracy", oov));
            }
        }
        Ok((rows, oov_rows))
    }
}
