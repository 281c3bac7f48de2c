use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use clap::Args;
use serde::{Deserialize, Serialize};
use wordrep::eval::metrics::oov_accuracy;
use wordrep::eval::{Domain, EvalReport, ReportRow};
use wordrep::tagger::{evaluate, metric_name, train_tagger, TaggerConfig, TaggerModel};

use crate::config::{required, usage, CommandConfig};
use crate::data::{
    check_updating, ensure_exists, known_words, load_dataset, DataArgs, DataOptions, ModelArgs, ModelOptions,
    RepSpec, TaggerArgs,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainTaggerConfig {
    pub train: Option<PathBuf>,
    pub dev: Option<PathBuf>,
    /// Model checkpoint.
    pub output: Option<PathBuf>,
    /// Where to write the (possibly updated) embedding matrix.
    pub export_embeddings: Option<PathBuf>,
    /// `onehot`, `brown:<path>` or `embedding:<path>`.
    pub representation: String,
    pub model: ModelOptions,
    pub data: DataOptions,
    pub tagger: TaggerConfig,
}

impl Default for TrainTaggerConfig {
    fn default() -> Self {
        TrainTaggerConfig {
            train: None,
            dev: None,
            output: None,
            export_embeddings: None,
            representation: "onehot".into(),
            model: ModelOptions::default(),
            data: DataOptions::default(),
            tagger: TaggerConfig::default(),
        }
    }
}

impl CommandConfig for TrainTaggerConfig {
    const SECTION: &'static str = "train-tagger";
    const PATH_FIELDS: &'static [&'static str] = &["train", "dev", "output", "export_embeddings"];

    fn primary_output(&self) -> Option<&Path> {
        self.output.as_deref()
    }
}

#[derive(Debug, Default, Args, Serialize)]
pub struct TrainTaggerArgs {
    /// Training set in CoNLL column format.
    #[arg(long)]
    pub train: Option<PathBuf>,
    #[arg(long)]
    pub dev: Option<PathBuf>,
    #[arg(long)]
    pub output: Option<PathBuf>,
    #[arg(long)]
    pub export_embeddings: Option<PathBuf>,
    /// onehot, brown:<path> or embedding:<path>.
    #[arg(long)]
    pub representation: Option<String>,
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub tagger: TaggerArgs,
}

pub fn run_train(cfg: &TrainTaggerConfig) -> Result<()> {
    let section = TrainTaggerConfig::SECTION;
    let train_path = required(&cfg.train, "train", section)?;
    let output = required(&cfg.output, "output", section)?;
    let spec = RepSpec::parse(&cfg.representation)?;
    check_updating(&cfg.tagger, &spec)?;
    if cfg.export_embeddings.is_some() && !spec.is_embedding() {
        return Err(usage("export_embeddings needs an embedding representation"));
    }
    let templates = cfg.model.templates()?;
    let opts = cfg.data.conll();
    let train = load_dataset(train_path, &opts, "training set")?;
    let dev = match &cfg.dev {
        Some(p) => Some(load_dataset(p, &opts, "dev set")?),
        None => None,
    };
    let representation = spec.load(&cfg.model.prefix_lengths)?;

    let (model, log) = train_tagger(&train, dev.as_ref(), &templates, &representation, &cfg.tagger)?;
    for e in &log.epochs {
        match e.dev_metric {
            Some(m) => log::info!("epoch {}: train nll {:.6}, dev {} {m:.4}", e.epoch, e.train_nll, log.metric),
            None => log::info!("epoch {}: train nll {:.6}", e.epoch, e.train_nll),
        }
    }
    model
        .save(output)
        .with_context(|| format!("cannot write {}", output.display()))?;
    if let Some(path) = &cfg.export_embeddings {
        let matrix = model.representation().embedding().expect("checked above");
        matrix
            .save(path)
            .with_context(|| format!("cannot write {}", path.display()))?;
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvaluateConfig {
    /// Model checkpoint.
    pub model: Option<PathBuf>,
    pub test: Option<PathBuf>,
    pub out_of_domain: Option<PathBuf>,
    /// Training set the model saw; enables OOV rows.
    pub train: Option<PathBuf>,
    /// Report CSV; OOV rows go to the sibling `.oov.csv`.
    pub output: Option<PathBuf>,
    /// Representation column of the report; the checkpoint's kind by default.
    pub representation_name: Option<String>,
    pub data: DataOptions,
}

impl Default for EvaluateConfig {
    fn default() -> Self {
        EvaluateConfig {
            model: None,
            test: None,
            out_of_domain: None,
            train: None,
            output: None,
            representation_name: None,
            data: DataOptions::default(),
        }
    }
}

impl CommandConfig for EvaluateConfig {
    const SECTION: &'static str = "evaluate";
    const PATH_FIELDS: &'static [&'static str] = &["model", "test", "out_of_domain", "train", "output"];

    fn primary_output(&self) -> Option<&Path> {
        self.output.as_deref()
    }
}

#[derive(Debug, Default, Args, Serialize)]
pub struct EvaluateArgs {
    #[arg(long)]
    pub model: Option<PathBuf>,
    #[arg(long)]
    pub test: Option<PathBuf>,
    #[arg(long)]
    pub out_of_domain: Option<PathBuf>,
    #[arg(long)]
    pub train: Option<PathBuf>,
    #[arg(long)]
    pub output: Option<PathBuf>,
    #[arg(long)]
    pub representation_name: Option<String>,
    #[command(flatten)]
    pub data: DataArgs,
}

pub fn run_evaluate(cfg: &EvaluateConfig) -> Result<()> {
    let section = EvaluateConfig::SECTION;
    let model_path = required(&cfg.model, "model", section)?;
    let test_path = required(&cfg.test, "test", section)?;
    let output = required(&cfg.output, "output", section)?;
    ensure_exists(model_path, "model checkpoint")?;
    let model =
        TaggerModel::load(model_path).with_context(|| format!("loading model checkpoint {}", model_path.display()))?;

    let mut opts = cfg.data.conll();
    opts.task_kind = model.task_kind();
    let test = load_dataset(test_path, &opts, "test set")?;
    let ood = match &cfg.out_of_domain {
        Some(p) => Some(load_dataset(p, &opts, "out-of-domain test set")?),
        None => None,
    };
    let train = match &cfg.train {
        Some(p) => Some(load_dataset(p, &opts, "training set")?),
        None => None,
    };
    if train.is_none() {
        log::warn!("no training set configured; OOV rows are omitted");
    }
    let known = train.as_ref().map(known_words);

    let method = if model.update_representations { "updating" } else { "fixed" };
    let representation = cfg
        .representation_name
        .clone()
        .unwrap_or_else(|| model.representation().kind().to_string());
    let size = train.as_ref().map_or(0, |t| t.len());
    let metric = metric_name(model.task_kind());

    let mut report = EvalReport::default();
    for (domain, set) in [(Domain::InDomain, Some(&test)), (Domain::OutOfDomain, ood.as_ref())] {
        let Some(set) = set else { continue };
        let value = evaluate(&model, set)?;
        log::info!("{domain:?} {metric}: {value:.4}");
        let mut oov_rows = Vec::new();
        let mut oov_count = 0;
        if let Some(known) = &known {
            let pred = model.predict_all(&set.sentences)?;
            let (oov, count) = oov_accuracy(&set.sentences, &set.labels, &pred, known)?;
            oov_count = count;
            oov_rows.push(ReportRow {
                method: method.into(),
                representation: representation.clone(),
                training_size: size,
                metric: "oov-accuracy".into(),
                value: oov,
                domain,
                oov_count: count,
            });
        }
        let row = ReportRow {
            method: method.into(),
            representation: representation.clone(),
            training_size: size,
            metric: metric.into(),
            value: Some(value),
            domain,
            oov_count,
        };
        report.extend(vec![row], oov_rows);
    }
    report
        .save(output)
        .with_context(|| format!("cannot write {}", output.display()))?;
    Ok(())
}
