//! Stochastic AdaGrad training of the tagger.

use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::features::{assemble_features, TemplateSet};
use super::model::{CrfGradient, Example, TaggerModel};
use crate::adagrad::AdaGrad;
use crate::corpus::{LabelledDataset, TaskKind};
use crate::error::{Error, Result};
use crate::eval::metrics::{span_f1, token_accuracy};
use crate::repr::WordRepresentation;
use crate::rng::seeded;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TaggerConfig {
    pub update_representations: bool,
    pub epochs: usize,
    pub eta: f64,
    pub epsilon: f64,
    pub eta_rep: f64,
    pub epsilon_rep: f64,
    /// Coefficient of the L2 penalty, applied lazily to the coordinates
    /// touched by each update.
    pub l2: f64,
    pub seed: u64,
    pub batch_size: usize,
    pub constrained_decoding: bool,
}

impl Default for TaggerConfig {
    fn default() -> Self {
        TaggerConfig {
            update_representations: false,
            epochs: 10,
            eta: 0.1,
            epsilon: 1e-6,
            eta_rep: 0.05,
            epsilon_rep: 1e-6,
            l2: 1e-4,
            seed: 1,
            batch_size: 1,
            constrained_decoding: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EpochRecord {
    pub epoch: usize,
    /// Mean per-sentence NLL accumulated during the epoch.
    pub train_nll: f64,
    pub dev_metric: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrainLog {
    pub metric: &'static str,
    pub epochs: Vec<EpochRecord>,
    pub warnings: Vec<String>,
}

/// Name of the selection metric for a task kind.
pub fn metric_name(kind: TaskKind) -> &'static str {
    match kind {
        TaskKind::TokenClassification => "accuracy",
        TaskKind::SpanIob => "f1",
    }
}

/// Task metric of `model` on `data`: token accuracy or span F1 over
/// repaired predictions.
pub fn evaluate(model: &TaggerModel, data: &LabelledDataset) -> Result<f64> {
    let pred = model.predict_all(&data.sentences)?;
    match data.task_kind {
        TaskKind::TokenClassification => token_accuracy(&data.labels, &pred),
        TaskKind::SpanIob => Ok(span_f1(&data.labels, &pred)?.f1),
    }
}

pub fn train_tagger(
    train: &LabelledDataset,
    dev: Option<&LabelledDataset>,
    templates: &TemplateSet,
    representation: &WordRepresentation,
    cfg: &TaggerConfig,
) -> Result<(TaggerModel, TrainLog)> {
    if train.is_empty() || train.token_count() == 0 {
        return Err(Error::EmptyInput("training set has no tokens".into()));
    }
    if cfg.batch_size == 0 {
        return Err(Error::Domain("batch size must be positive".into()));
    }
    let mut log = TrainLog {
        metric: metric_name(train.task_kind),
        ..TrainLog::default()
    };
    let mut labels: Vec<String> = train
        .labels
        .iter()
        .flatten()
        .cloned()
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    if let Some(dev) = dev {
        let unseen: BTreeSet<&String> = dev.labels.iter().flatten().filter(|l| !labels.contains(l)).collect();
        for l in unseen {
            let msg = format!("label {l:?} appears in dev data but not in training; added with zero weights");
            log::warn!("{msg}");
            log.warnings.push(msg);
            labels.push(l.clone());
        }
    }
    let mut features = BTreeSet::new();
    for s in &train.sentences {
        for t in 0..s.len() {
            features.extend(assemble_features(s, t, templates, representation)?.indicators);
        }
    }
    let mut model = TaggerModel::new(
        labels,
        features.into_iter().collect(),
        templates.clone(),
        representation.clone(),
        train.task_kind,
    )?;
    model.update_representations = cfg.update_representations;
    model.constrained_decoding = cfg.constrained_decoding;

    let examples: Vec<Example> = train
        .sentences
        .iter()
        .zip(&train.labels)
        .enumerate()
        .filter(|(_, (s, _))| !s.is_empty())
        .map(|(i, (s, l))| model.example(i, s, l))
        .collect::<Result<_>>()?;

    let mut opt = AdaGrad::new(model.weights().len(), cfg.eta, cfg.epsilon);
    let rep_len = model.representation().embedding().map_or(0, |m| m.as_slice().len());
    let mut rep_opt = AdaGrad::new(rep_len, cfg.eta_rep, cfg.epsilon_rep);
    let mut grad = CrfGradient::new(model.weights().len());
    let mut rng = seeded(cfg.seed);
    let mut order: Vec<usize> = (0..examples.len()).collect();
    let mut batch: Vec<Example> = Vec::with_capacity(cfg.batch_size);

    for epoch in 1..=cfg.epochs {
        order.shuffle(&mut rng);
        let mut total_nll = 0.0;
        for chunk in order.chunks(cfg.batch_size) {
            batch.clear();
            batch.extend(chunk.iter().map(|&i| examples[i].clone()));
            model.crf_gradient_into(&batch, &mut grad)?;
            total_nll += grad.nll;
            let weights = model.weights_mut();
            for (i, g) in grad.iter() {
                let g = g + cfg.l2 * weights[i];
                opt.update(&mut weights[i], i, g);
            }
            if cfg.update_representations {
                if let Some(m) = model.representation_mut().embedding_mut() {
                    let d = m.dim();
                    let data = m.as_mut_slice();
                    for (&r, g) in &grad.rows {
                        for (j, &gj) in g.iter().enumerate() {
                            let idx = r * d + j;
                            rep_opt.update(&mut data[idx], idx, gj);
                        }
                    }
                }
            }
        }
        let train_nll = total_nll / examples.len().max(1) as f64;
        if !train_nll.is_finite() {
            return Err(Error::Numerical {
                sentence: 0,
                message: format!("epoch {epoch} produced non-finite NLL"),
            });
        }
        let dev_metric = match dev {
            Some(d) if !d.is_empty() => Some(evaluate(&model, d)?),
            _ => None,
        };
        match dev_metric {
            Some(v) => log::info!("epoch {epoch}: train nll {train_nll:.6}, dev {} {v:.4}", log.metric),
            None => log::info!("epoch {epoch}: train nll {train_nll:.6}"),
        }
        log.epochs.push(EpochRecord {
            epoch,
            train_nll,
            dev_metric,
        });
    }
    Ok((model, log))
}
