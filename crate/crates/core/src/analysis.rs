//! Statistical checks and dataset-level studies.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::game::{self, NashSolution, PayoffTable};
use crate::ingest::{Dataset, Outcome, ShotEvent};
use crate::metrics::{Engine, MetricsError, Scene, SceneEvaluation};
use crate::special::chi_square_sf;
use crate::theory::filter_defenders;

#[derive(Debug, Error)]
pub enum AnalysisError {
    #[error("contingency table has an empty row or column")]
    ZeroMarginal,
    #[error("contingency table rows have different lengths")]
    Ragged,
    #[error("need at least two paired values, got {0}")]
    TooShort(usize),
    #[error("series lengths differ: {0} vs {1}")]
    Length(usize, usize),
    #[error("zero variance")]
    ZeroVariance,
    #[error("failed to read {path}: {message}")]
    Csv { path: String, message: String },
    #[error(transparent)]
    Metrics(#[from] MetricsError),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ContingencyTable {
    pub counts: Vec<Vec<u64>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChiSquare {
    pub statistic: f64,
    pub df: usize,
    pub p_value: f64,
}

/// Pearson chi-square test of independence.
pub fn chi_square_independence(t: &ContingencyTable) -> Result<ChiSquare, AnalysisError> {
    let rows = t.counts.len();
    let cols = t.counts.first().map_or(0, |r| r.len());
    if t.counts.iter().any(|r| r.len() != cols) {
        return Err(AnalysisError::Ragged);
    }
    let row_sum: Vec<f64> = t
        .counts
        .iter()
        .map(|r| r.iter().sum::<u64>() as f64)
        .collect();
    let col_sum: Vec<f64> = (0..cols)
        .map(|c| t.counts.iter().map(|r| r[c]).sum::<u64>() as f64)
        .collect();
    if rows < 2 || cols < 2 || row_sum.iter().chain(&col_sum).any(|&s| s == 0.0) {
        return Err(AnalysisError::ZeroMarginal);
    }
    let total: f64 = row_sum.iter().sum();
    let mut statistic = 0.0;
    for (r, row) in t.counts.iter().enumerate() {
        for (c, &obs) in row.iter().enumerate() {
            let expected = row_sum[r] * col_sum[c] / total;
            statistic += (obs as f64 - expected).powi(2) / expected;
        }
    }
    let df = (rows - 1) * (cols - 1);
    Ok(ChiSquare {
        statistic,
        df,
        p_value: chi_square_sf(statistic, df as f64),
    })
}

/// Previous-shot vs next-shot outcome counts, rows and columns in
/// [`Outcome::ALL`] order. Events are ordered by (match, index); with
/// `cross_match` the sequence also pairs the last shot of one match with the
/// first of the next.
pub fn shot_sequence_table(events: &[ShotEvent], cross_match: bool) -> ContingencyTable {
    let mut ordered: Vec<&ShotEvent> = events.iter().collect();
    ordered.sort_by(|a, b| (a.match_id, a.index).cmp(&(b.match_id, b.index)));
    let pos = |o: Outcome| Outcome::ALL.iter().position(|&x| x == o).unwrap();
    let mut counts = vec![vec![0u64; 3]; 3];
    for w in ordered.windows(2) {
        if cross_match || w[0].match_id == w[1].match_id {
            counts[pos(w[0].outcome)][pos(w[1].outcome)] += 1;
        }
    }
    ContingencyTable { counts }
}

/// Sample Pearson correlation.
pub fn pearson(xs: &[f64], ys: &[f64]) -> Result<f64, AnalysisError> {
    if xs.len() != ys.len() {
        return Err(AnalysisError::Length(xs.len(), ys.len()));
    }
    if xs.len() < 2 {
        return Err(AnalysisError::TooShort(xs.len()));
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in xs.iter().zip(ys) {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx).powi(2);
        syy += (y - my).powi(2);
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(AnalysisError::ZeroVariance);
    }
    Ok((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

/// Rows are the actual label (0, 1), columns the prediction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Confusion {
    pub counts: [[u64; 2]; 2],
    /// Row-normalized percentages; an empty row is all zeros.
    pub percent: [[f64; 2]; 2],
    pub threshold: f64,
}

/// A probability at or above `threshold` predicts 1.
pub fn confusion_matrix(probs: &[f64], labels: &[bool], threshold: f64) -> Confusion {
    let mut counts = [[0u64; 2]; 2];
    for (&p, &y) in probs.iter().zip(labels) {
        counts[y as usize][(p >= threshold) as usize] += 1;
    }
    let mut percent = [[0.0; 2]; 2];
    for r in 0..2 {
        let total = (counts[r][0] + counts[r][1]) as f64;
        if total > 0.0 {
            for c in 0..2 {
                percent[r][c] = 100.0 * counts[r][c] as f64 / total;
            }
        }
    }
    Confusion {
        counts,
        percent,
        threshold,
    }
}

/// Externally sourced team figures.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TeamRecord {
    pub team: String,
    pub placement: String,
    pub avg_goal: f64,
    pub xg: f64,
}

pub fn read_team_records(path: &Path) -> Result<Vec<TeamRecord>, AnalysisError> {
    let err = |e: csv::Error| AnalysisError::Csv {
        path: path.display().to_string(),
        message: e.to_string(),
    };
    let mut rdr = csv::Reader::from_path(path).map_err(err)?;
    rdr.deserialize()
        .collect::<Result<Vec<TeamRecord>, _>>()
        .map_err(err)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TeamAggregate {
    pub team: String,
    pub matches: usize,
    pub shots: usize,
    /// Per-match sums averaged over matches.
    pub xsot: f64,
    pub xosot: f64,
    pub max_prob: f64,
    pub avg_goal: Option<f64>,
    pub xg: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Correlation {
    pub a: String,
    pub b: String,
    /// `None` when a series has zero variance or too few teams.
    pub r: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TeamStudy {
    pub teams: Vec<TeamAggregate>,
    pub missing_external: Vec<String>,
    pub correlations: Vec<Correlation>,
}

impl TeamStudy {
    pub fn corr(&self, a: &str, b: &str) -> Option<f64> {
        self.correlations
            .iter()
            .find(|c| (c.a == a && c.b == b) || (c.a == b && c.b == a))
            .and_then(|c| c.r)
    }
}

/// Per-shot (xSOT, xOSOT) with the defender present, aligned with `events`.
pub fn score_shots(
    engine: &Engine,
    data: &Dataset,
    events: &[ShotEvent],
) -> Result<Vec<(f64, f64)>, AnalysisError> {
    events
        .par_iter()
        .map(|e| {
            let scene = Scene::from_event(e, data.frame(e));
            let shot = engine.xsot(&scene, false)?;
            let pass = engine.xosot(&scene, false)?;
            Ok((shot.xsot, pass.value))
        })
        .collect()
}

pub const STUDY_SERIES: [&str; 5] = ["avg_goal", "xg", "xsot", "xosot", "max_prob"];

/// Aggregate per-shot scores by team and correlate with the external figures.
pub fn team_study(
    events: &[ShotEvent],
    scores: &[(f64, f64)],
    records: &[TeamRecord],
) -> TeamStudy {
    #[derive(Default)]
    struct Acc {
        matches: BTreeSet<u64>,
        shots: usize,
        xsot: f64,
        xosot: f64,
        max_prob: f64,
    }
    let mut by_team: BTreeMap<String, Acc> = BTreeMap::new();
    for (e, &(xsot, xosot)) in events.iter().zip(scores) {
        let acc = by_team.entry(e.team_name.clone()).or_default();
        acc.matches.insert(e.match_id);
        acc.shots += 1;
        acc.xsot += xsot;
        acc.xosot += xosot;
        acc.max_prob += xsot.max(xosot);
    }
    let lookup: BTreeMap<&str, &TeamRecord> =
        records.iter().map(|r| (r.team.as_str(), r)).collect();
    let mut missing_external = Vec::new();
    let teams: Vec<TeamAggregate> = by_team
        .into_iter()
        .map(|(team, acc)| {
            let m = acc.matches.len() as f64;
            let ext = lookup.get(team.as_str());
            if ext.is_none() {
                missing_external.push(team.clone());
            }
            TeamAggregate {
                matches: acc.matches.len(),
                shots: acc.shots,
                xsot: acc.xsot / m,
                xosot: acc.xosot / m,
                max_prob: acc.max_prob / m,
                avg_goal: ext.map(|r| r.avg_goal),
                xg: ext.map(|r| r.xg),
                team,
            }
        })
        .collect();
    let paired: Vec<&TeamAggregate> = teams.iter().filter(|t| t.xg.is_some()).collect();
    let series = |name: &str| -> Vec<f64> {
        paired
            .iter()
            .map(|t| match name {
                "avg_goal" => t.avg_goal.unwrap_or(f64::NAN),
                "xg" => t.xg.unwrap_or(f64::NAN),
                "xsot" => t.xsot,
                "xosot" => t.xosot,
                _ => t.max_prob,
            })
            .collect()
    };
    let mut correlations = Vec::new();
    for (i, a) in STUDY_SERIES.iter().enumerate() {
        for b in &STUDY_SERIES[i + 1..] {
            correlations.push(Correlation {
                a: a.to_string(),
                b: b.to_string(),
                r: pearson(&series(a), &series(b)).ok(),
            });
        }
    }
    TeamStudy {
        teams,
        missing_external,
        correlations,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PayoffStudy {
    /// Shots kept: covered by a frame and with at least one defender in the
    /// feasible zone.
    pub scenarios: usize,
    pub table: Option<PayoffTable>,
    pub nash: Option<NashSolution>,
}

/// Average the per-scene payoff tables over scenes where a defender could
/// block, then solve the averaged game.
pub fn payoff_study(
    engine: &Engine,
    data: &Dataset,
    events: &[ShotEvent],
) -> Result<PayoffStudy, AnalysisError> {
    let kept: Vec<&ShotEvent> = events
        .iter()
        .filter(|e| {
            data.frame(e).is_some_and(|f| {
                e.location.x < crate::geometry::PITCH_LENGTH
                    && !filter_defenders(e.location, &f.players).is_empty()
            })
        })
        .collect();
    let evals: Vec<SceneEvaluation> = kept
        .par_iter()
        .map(|e| engine.evaluate(&Scene::from_event(e, data.frame(e))))
        .collect::<Result<_, _>>()?;
    let tables: Vec<PayoffTable> = evals.iter().map(|e| e.payoff).collect();
    let table = PayoffTable::mean(&tables);
    Ok(PayoffStudy {
        scenarios: kept.len(),
        nash: table.as_ref().map(game::solve),
        table,
    })
}

/// Reference shot-sequence counts (rows: previous outcome Off/On/Block).
pub fn reference_sequence_table() -> ContingencyTable {
    ContingencyTable {
        counts: vec![
            vec![427, 341, 275],
            vec![343, 286, 220],
            vec![273, 222, 187],
        ],
    }
}
