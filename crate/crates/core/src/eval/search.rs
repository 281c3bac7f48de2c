//! Seeded random hyperparameter search and the two-stage updating protocol.

use std::collections::{BTreeMap, HashSet};
use std::io::Write;
use std::path::Path;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::seeded;
use crate::tagger::TaggerConfig;

pub const FIXED_DRAWS: usize = 50;
pub const UPDATING_DRAWS: usize = 100;
pub const MAX_RESAMPLE: usize = 1000;

/// Representation-layer learning rates and stabilizers searched in the
/// second stage; their product is 32 points and includes the defaults.
pub const UPDATING_ETA_REP: [f64; 8] = [0.001, 0.002, 0.005, 0.01, 0.02, 0.05, 0.1, 0.2];
pub const UPDATING_EPSILON_REP: [f64; 4] = [1e-8, 1e-6, 1e-4, 1e-2];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Dimension {
    Choice { values: Vec<f64> },
    Uniform { low: f64, high: f64 },
    LogUniform { low: f64, high: f64 },
    IntRange { low: i64, high: i64 },
}

impl Dimension {
    fn validate(&self, name: &str) -> Result<()> {
        let bad = match self {
            Dimension::Choice { values } => values.is_empty(),
            Dimension::Uniform { low, high } => !(low <= high),
            Dimension::LogUniform { low, high } => !(*low > 0.0 && low <= high),
            Dimension::IntRange { low, high } => low > high,
        };
        if bad {
            return Err(Error::Domain(format!("search dimension {name:?} is empty or malformed")));
        }
        Ok(())
    }

    fn sample<R: Rng>(&self, rng: &mut R) -> f64 {
        match self {
            Dimension::Choice { values } => values[rng.gen_range(0..values.len())],
            Dimension::Uniform { low, high } => {
                if low == high {
                    *low
                } else {
                    rng.gen_range(*low..*high)
                }
            }
            Dimension::LogUniform { low, high } => {
                if low == high {
                    *low
                } else {
                    rng.gen_range(low.ln()..high.ln()).exp()
                }
            }
            Dimension::IntRange { low, high } => rng.gen_range(*low..=*high) as f64,
        }
    }
}

/// Named hyperparameter values of one draw.
pub type Params = BTreeMap<String, f64>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchSpace {
    pub dimensions: BTreeMap<String, Dimension>,
    pub seed: u64,
    pub draws: usize,
}

impl SearchSpace {
    /// Defaults for the tagger: AdaGrad rate and stabilizer plus L2, with the
    /// representation-layer pair added for updating models.
    pub fn tagger_default(updating: bool, seed: u64) -> Self {
        let mut dimensions = BTreeMap::new();
        dimensions.insert("eta".into(), Dimension::LogUniform { low: 1e-3, high: 1.0 });
        dimensions.insert("epsilon".into(), Dimension::LogUniform { low: 1e-8, high: 1e-2 });
        dimensions.insert("l2".into(), Dimension::LogUniform { low: 1e-6, high: 1e-1 });
        if updating {
            dimensions.insert("eta_rep".into(), Dimension::LogUniform { low: 1e-3, high: 0.5 });
            dimensions.insert("epsilon_rep".into(), Dimension::LogUniform { low: 1e-8, high: 1e-2 });
        }
        SearchSpace {
            dimensions,
            seed,
            draws: if updating { UPDATING_DRAWS } else { FIXED_DRAWS },
        }
    }

    /// `draws` distinct points, reproducible from the seed.
    pub fn sample(&self) -> Result<Vec<Params>> {
        if self.draws == 0 {
            return Err(Error::Domain("draw count must be at least 1".into()));
        }
        for (name, d) in &self.dimensions {
            d.validate(name)?;
        }
        let mut rng = seeded(self.seed);
        let mut seen = HashSet::new();
        let mut out = Vec::with_capacity(self.draws);
        while out.len() < self.draws {
            let mut found = None;
            for _ in 0..MAX_RESAMPLE {
                let p: Params = self.dimensions.iter().map(|(n, d)| (n.clone(), d.sample(&mut rng))).collect();
                let key: Vec<u64> = p.values().map(|v| v.to_bits()).collect();
                if seen.insert(key) {
                    found = Some(p);
                    break;
                }
            }
            match found {
                Some(p) => out.push(p),
                None => {
                    return Err(Error::SearchSpaceTooSmall {
                        requested: self.draws,
                        found: out.len(),
                    })
                }
            }
        }
        Ok(out)
    }
}

/// Overrides `base` with every recognized key of `params`.
pub fn apply_params(base: &TaggerConfig, params: &Params) -> Result<TaggerConfig> {
    let mut cfg = base.clone();
    for (k, &v) in params {
        match k.as_str() {
            "eta" => cfg.eta = v,
            "epsilon" => cfg.epsilon = v,
            "eta_rep" => cfg.eta_rep = v,
            "epsilon_rep" => cfg.epsilon_rep = v,
            "l2" => cfg.l2 = v,
            "epochs" => cfg.epochs = v as usize,
            "batch_size" => cfg.batch_size = v as usize,
            "update_representations" => cfg.update_representations = v != 0.0,
            other => return Err(Error::Domain(format!("unknown hyperparameter {other:?}"))),
        }
    }
    Ok(cfg)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LeaderboardRow {
    pub draw: usize,
    pub params: Params,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SearchResult {
    /// One row per draw, in draw order.
    pub leaderboard: Vec<LeaderboardRow>,
    /// Index of the best row; ties go to the earliest draw.
    pub best: usize,
}

impl SearchResult {
    pub fn best(&self) -> &LeaderboardRow {
        &self.leaderboard[self.best]
    }

    /// Draw indices ordered by descending score, ties by draw order.
    pub fn ranking(&self) -> Vec<usize> {
        let mut idx: Vec<usize> = (0..self.leaderboard.len()).collect();
        idx.sort_by(|&a, &b| {
            let (sa, sb) = (self.leaderboard[a].score, self.leaderboard[b].score);
            sb.total_cmp(&sa).then(a.cmp(&b))
        });
        idx
    }

    /// CSV with columns `draw,rank,<params...>,score`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let names: Vec<&String> = self
            .leaderboard
            .first()
            .map(|r| r.params.keys().collect())
            .unwrap_or_default();
        let mut header = vec!["draw".to_string(), "rank".to_string()];
        header.extend(names.iter().map(|n| n.to_string()));
        header.push("score".into());
        w.write_record(&header)?;
        let mut rank = vec![0; self.leaderboard.len()];
        for (r, i) in self.ranking().into_iter().enumerate() {
            rank[i] = r + 1;
        }
        for (i, row) in self.leaderboard.iter().enumerate() {
            let mut rec = vec![row.draw.to_string(), rank[i].to_string()];
            rec.extend(names.iter().map(|n| row.params.get(*n).map_or(String::new(), |v| v.to_string())));
            rec.push(row.score.to_string());
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn save_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        self.write_csv(std::fs::File::create(path)?)
    }
}

fn evaluate_points<F>(points: Vec<Params>, objective: F) -> Result<SearchResult>
where
    F: Fn(&Params) -> Result<f64> + Sync,
{
    let scores: Vec<f64> = points.par_iter().map(&objective).collect::<Result<_>>()?;
    let leaderboard: Vec<LeaderboardRow> = points
        .into_iter()
        .zip(scores)
        .enumerate()
        .map(|(draw, (params, score))| LeaderboardRow { draw, params, score })
        .collect();
    let mut best = 0;
    for (i, row) in leaderboard.iter().enumerate() {
        let b = leaderboard[best].score;
        if row.score > b || (b.is_nan() && !row.score.is_nan()) {
            best = i;
        }
    }
    Ok(SearchResult { leaderboard, best })
}

/// Scores every draw of `space` with `objective` (higher is better). Draws
/// run in parallel; the leaderboard keeps draw order.
pub fn random_search<F>(space: &SearchSpace, objective: F) -> Result<SearchResult>
where
    F: Fn(&Params) -> Result<f64> + Sync,
{
    evaluate_points(space.sample()?, objective)
}

/// The 32 `(eta_rep, epsilon_rep)` pairs of the second stage.
pub fn updating_grid() -> Vec<(f64, f64)> {
    UPDATING_ETA_REP
        .iter()
        .flat_map(|&e| UPDATING_EPSILON_REP.iter().map(move |&s| (e, s)))
        .collect()
}

/// Holds the stage-one parameters fixed, switches updating on and scores each
/// `(eta_rep, epsilon_rep)` pair of `grid`.
pub fn two_stage_updating_search<F>(stage_one: Option<&Params>, grid: &[(f64, f64)], objective: F) -> Result<SearchResult>
where
    F: Fn(&Params) -> Result<f64> + Sync,
{
    let base = stage_one.ok_or_else(|| {
        Error::Protocol("the updating search needs the best configuration of a completed fixed search".into())
    })?;
    if grid.is_empty() {
        return Err(Error::Domain("updating grid is empty".into()));
    }
    let points = grid
        .iter()
        .map(|&(eta_rep, epsilon_rep)| {
            let mut p = base.clone();
            p.insert("update_representations".into(), 1.0);
            p.insert("eta_rep".into(), eta_rep);
            p.insert("epsilon_rep".into(), epsilon_rep);
            p
        })
        .collect();
    evaluate_points(points, objective)
}
