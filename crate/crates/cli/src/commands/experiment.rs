use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use clap::Args;
use serde::{Deserialize, Serialize};
use wordrep::eval::search::{apply_params, random_search, two_stage_updating_search, updating_grid, Dimension, Params, SearchSpace};
use wordrep::eval::{partition_learning_curve, CurveRun, EvalReport, DEFAULT_PARTS};
use wordrep::tagger::{evaluate, train_tagger, TaggerConfig};

use crate::config::{required, sibling, usage, CommandConfig};
use crate::data::{
    check_updating, ensure_exists, load_dataset, DataArgs, DataOptions, ModelArgs, ModelOptions, RepSpec, TaggerArgs,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CurveConfig {
    pub train: Option<PathBuf>,
    pub dev: Option<PathBuf>,
    pub test: Option<PathBuf>,
    pub out_of_domain: Option<PathBuf>,
    /// Report CSV; OOV rows go to the sibling `.oov.csv`.
    pub output: Option<PathBuf>,
    /// Representation specs, optionally named as `name=spec`.
    pub representations: Vec<String>,
    /// Updating flags to run for each embedding representation.
    pub updating: Vec<bool>,
    /// Cumulative training sizes; the base-2 partition when unset.
    pub sizes: Option<Vec<usize>>,
    pub parts: usize,
    /// Seed of the training-set shuffle.
    pub curve_seed: u64,
    pub model: ModelOptions,
    pub data: DataOptions,
    pub tagger: TaggerConfig,
}

impl Default for CurveConfig {
    fn default() -> Self {
        CurveConfig {
            train: None,
            dev: None,
            test: None,
            out_of_domain: None,
            output: None,
            representations: vec!["onehot".into()],
            updating: vec![false],
            sizes: None,
            parts: DEFAULT_PARTS,
            curve_seed: 1,
            model: ModelOptions::default(),
            data: DataOptions::default(),
            tagger: TaggerConfig::default(),
        }
    }
}

impl CommandConfig for CurveConfig {
    const SECTION: &'static str = "learning-curve";
    const PATH_FIELDS: &'static [&'static str] = &["train", "dev", "test", "out_of_domain", "output"];

    fn primary_output(&self) -> Option<&Path> {
        self.output.as_deref()
    }
}

#[derive(Debug, Default, Args, Serialize)]
pub struct CurveArgs {
    #[arg(long)]
    pub train: Option<PathBuf>,
    #[arg(long)]
    pub dev: Option<PathBuf>,
    #[arg(long)]
    pub test: Option<PathBuf>,
    #[arg(long)]
    pub out_of_domain: Option<PathBuf>,
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// Comma-separated representation specs.
    #[arg(long, value_delimiter = ',')]
    pub representations: Option<Vec<String>>,
    /// Comma-separated updating flags, e.g. `false,true`.
    #[arg(long, value_delimiter = ',')]
    pub updating: Option<Vec<bool>>,
    /// Comma-separated cumulative training sizes.
    #[arg(long, value_delimiter = ',')]
    pub sizes: Option<Vec<usize>>,
    #[arg(long)]
    pub parts: Option<usize>,
    #[arg(long)]
    pub curve_seed: Option<u64>,
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub tagger: TaggerArgs,
}

pub fn run_curve(cfg: &CurveConfig) -> Result<()> {
    let section = CurveConfig::SECTION;
    let train_path = required(&cfg.train, "train", section)?;
    let test_path = required(&cfg.test, "test", section)?;
    let output = required(&cfg.output, "output", section)?;
    if cfg.representations.is_empty() || cfg.updating.is_empty() {
        return Err(usage("representations and updating must be non-empty"));
    }
    let specs = cfg.representations.iter().map(|s| RepSpec::parse(s)).collect::<Result<Vec<_>>>()?;
    let templates = cfg.model.templates()?;
    let opts = cfg.data.conll();
    let train = load_dataset(train_path, &opts, "training set")?;
    let test = load_dataset(test_path, &opts, "test set")?;
    let dev = match &cfg.dev {
        Some(p) => Some(load_dataset(p, &opts, "dev set")?),
        None => None,
    };
    let ood = match &cfg.out_of_domain {
        Some(p) => Some(load_dataset(p, &opts, "out-of-domain test set")?),
        None => None,
    };

    let (order, sizes) = match &cfg.sizes {
        Some(sizes) => (partition_learning_curve(train.len(), 1, cfg.curve_seed)?.order, sizes.clone()),
        None => {
            let curve = partition_learning_curve(train.len(), cfg.parts, cfg.curve_seed)?;
            for w in &curve.warnings {
                log::warn!("{w}");
            }
            (curve.order, curve.cumulative)
        }
    };

    let mut report = EvalReport::default();
    for spec in &specs {
        let representation = spec.load(&cfg.model.prefix_lengths)?;
        for &updating in &cfg.updating {
            if updating && !spec.is_embedding() {
                log::warn!("skipping updating run for {}: not an embedding", spec.name);
                continue;
            }
            let config = TaggerConfig {
                update_representations: updating,
                ..cfg.tagger.clone()
            };
            let run = CurveRun {
                train: &train,
                dev: dev.as_ref(),
                test: &test,
                out_of_domain: ood.as_ref(),
                templates: &templates,
                representation: &representation,
                representation_name: &spec.name,
                config: &config,
            };
            log::info!("{} ({}) over sizes {sizes:?}", spec.name, run.method());
            let (rows, oov_rows) = run.run(&order, &sizes)?;
            report.extend(rows, oov_rows);
        }
    }
    report
        .save(output)
        .with_context(|| format!("cannot write {}", output.display()))?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SearchConfig {
    pub train: Option<PathBuf>,
    /// Held-out set scored by every draw.
    pub dev: Option<PathBuf>,
    /// Leaderboard CSV.
    pub output: Option<PathBuf>,
    /// Best parameters; defaults to `<output stem>.best.toml`.
    pub best_output: Option<PathBuf>,
    /// `fixed` or `updating` random search, or `updating-grid` around a
    /// finished fixed search.
    pub mode: String,
    /// Best-parameter file of the fixed search, for `updating-grid`.
    pub stage_one: Option<PathBuf>,
    pub representation: String,
    /// Draw count; the mode default when unset.
    pub draws: Option<usize>,
    pub search_seed: u64,
    /// Replaces the default dimensions when non-empty.
    pub space: BTreeMap<String, Dimension>,
    pub model: ModelOptions,
    pub data: DataOptions,
    /// Settings not being searched.
    pub tagger: TaggerConfig,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig {
            train: None,
            dev: None,
            output: None,
            best_output: None,
            mode: "fixed".into(),
            stage_one: None,
            representation: "onehot".into(),
            draws: None,
            search_seed: 1,
            space: BTreeMap::new(),
            model: ModelOptions::default(),
            data: DataOptions::default(),
            tagger: TaggerConfig::default(),
        }
    }
}

impl CommandConfig for SearchConfig {
    const SECTION: &'static str = "search";
    const PATH_FIELDS: &'static [&'static str] = &["train", "dev", "output", "best_output", "stage_one"];

    fn primary_output(&self) -> Option<&Path> {
        self.output.as_deref()
    }
}

#[derive(Debug, Default, Args, Serialize)]
pub struct SearchArgs {
    #[arg(long)]
    pub train: Option<PathBuf>,
    #[arg(long)]
    pub dev: Option<PathBuf>,
    #[arg(long)]
    pub output: Option<PathBuf>,
    #[arg(long)]
    pub best_output: Option<PathBuf>,
    /// fixed, updating or updating-grid.
    #[arg(long)]
    pub mode: Option<String>,
    #[arg(long)]
    pub stage_one: Option<PathBuf>,
    #[arg(long)]
    pub representation: Option<String>,
    #[arg(long)]
    pub draws: Option<usize>,
    #[arg(long)]
    pub search_seed: Option<u64>,
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub tagger: TaggerArgs,
}

/// Contents of a best-parameter file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BestParams {
    pub score: f64,
    pub params: Params,
}

pub fn run_search(cfg: &SearchConfig) -> Result<()> {
    let section = SearchConfig::SECTION;
    let train_path = required(&cfg.train, "train", section)?;
    let dev_path = required(&cfg.dev, "dev", section)?;
    let output = required(&cfg.output, "output", section)?;
    let spec = RepSpec::parse(&cfg.representation)?;
    let updating = match cfg.mode.as_str() {
        "fixed" => false,
        "updating" | "updating-grid" => true,
        other => {
            return Err(usage(format!(
                "invalid mode {other:?}: expected fixed, updating or updating-grid"
            )))
        }
    };
    let base = TaggerConfig {
        update_representations: updating,
        ..cfg.tagger.clone()
    };
    check_updating(&base, &spec)?;
    let templates = cfg.model.templates()?;
    let opts = cfg.data.conll();
    let train = load_dataset(train_path, &opts, "training set")?;
    let dev = load_dataset(dev_path, &opts, "dev set")?;
    let representation = spec.load(&cfg.model.prefix_lengths)?;

    let objective = |p: &Params| -> wordrep::Result<f64> {
        let c = apply_params(&base, p)?;
        let (model, _) = train_tagger(&train, None, &templates, &representation, &c)?;
        evaluate(&model, &dev)
    };

    let result = if cfg.mode == "updating-grid" {
        let stage_one = match &cfg.stage_one {
            Some(p) => {
                ensure_exists(p, "stage-one result")?;
                let text = fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
                let best: BestParams =
                    toml::from_str(&text).with_context(|| format!("parsing stage-one result {}", p.display()))?;
                Some(best.params)
            }
            None => None,
        };
        two_stage_updating_search(stage_one.as_ref(), &updating_grid(), objective)?
    } else {
        let mut space = SearchSpace::tagger_default(updating, cfg.search_seed);
        if !cfg.space.is_empty() {
            space.dimensions = cfg.space.clone();
        }
        if let Some(d) = cfg.draws {
            space.draws = d;
        }
        random_search(&space, objective)?
    };

    result
        .save_csv(output)
        .with_context(|| format!("cannot write {}", output.display()))?;
    let best = result.best();
    log::info!("best draw {} scored {:.4}", best.draw, best.score);
    let best_path = cfg.best_output.clone().unwrap_or_else(|| sibling(output, "best.toml"));
    let text = toml::to_string(&BestParams {
        score: best.score,
        params: best.params.clone(),
    })?;
    fs::write(&best_path, text).with_context(|| format!("cannot write {}", best_path.display()))?;
    Ok(())
}
