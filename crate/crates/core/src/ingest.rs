//! Loading StatsBomb open-data shot events and 360 freeze frames, outcome
//! grouping, and stratified train/test/fold splitting.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fs;
use std::path::{Path, PathBuf};

use log::warn;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{PitchPoint, PITCH_LENGTH, PITCH_WIDTH};

pub const DATASET_VERSION: u32 = 1;
pub const DEFAULT_SPLIT_SEED: u64 = 42;
pub const TEST_FRACTION: f64 = 0.2;
pub const NUM_FOLDS: usize = 5;
/// StatsBomb period id of a penalty shoot-out.
const SHOOTOUT_PERIOD: u32 = 5;

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("failed to read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed JSON in {path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
    #[error("unknown shot outcome {raw:?}")]
    UnknownOutcome { raw: String },
    #[error("shot {event_id} in {path} has no {field}")]
    MissingField {
        path: PathBuf,
        event_id: String,
        field: &'static str,
    },
    #[error("file name {0} does not start with a numeric match id")]
    BadMatchFile(PathBuf),
    #[error("cannot split an empty event list")]
    Empty,
    #[error("outcome class {class:?} has {count} training members; need at least {needed} to stratify folds")]
    StratumTooSmall {
        class: Outcome,
        count: usize,
        needed: usize,
    },
    #[error("unsupported dataset version {0}")]
    Version(u32),
}

/// Three-class shot outcome.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Outcome {
    On,
    Off,
    Block,
}

impl Outcome {
    pub const ALL: [Outcome; 3] = [Outcome::Off, Outcome::On, Outcome::Block];
}

/// Result of grouping a raw StatsBomb outcome name.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GroupedOutcome {
    On,
    Off,
    Block,
    Removed,
}

impl GroupedOutcome {
    pub fn retained(self) -> Option<Outcome> {
        match self {
            GroupedOutcome::On => Some(Outcome::On),
            GroupedOutcome::Off => Some(Outcome::Off),
            GroupedOutcome::Block => Some(Outcome::Block),
            GroupedOutcome::Removed => None,
        }
    }
}

/// Map a StatsBomb shot outcome name onto the three-class space.
pub fn group_outcome(raw: &str) -> Result<GroupedOutcome, IngestError> {
    match raw {
        "Goal" | "Saved" => Ok(GroupedOutcome::On),
        "Off T" | "Wayward" | "Post" | "Saved Off Target" => Ok(GroupedOutcome::Off),
        "Blocked" => Ok(GroupedOutcome::Block),
        "Saved to Post" => Ok(GroupedOutcome::Removed),
        other => Err(IngestError::UnknownOutcome {
            raw: other.to_string(),
        }),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShotEvent {
    pub event_id: String,
    pub match_id: u64,
    /// Position of the event within its match file.
    pub index: u64,
    pub period: u32,
    pub team_id: u64,
    pub team_name: String,
    pub shooter_role: String,
    pub location: PitchPoint,
    pub raw_outcome: String,
    pub outcome: Outcome,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlayerSnapshot {
    pub location: PitchPoint,
    pub teammate: bool,
    pub actor: bool,
    pub keeper: bool,
}

impl PlayerSnapshot {
    pub fn opponent(&self) -> bool {
        !self.teammate
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FreezeFrame {
    pub event_id: String,
    pub players: Vec<PlayerSnapshot>,
}

impl FreezeFrame {
    pub fn actor(&self) -> Option<&PlayerSnapshot> {
        self.players.iter().find(|p| p.actor)
    }
}

/// Normalized corpus written by `ingest` and read by the downstream stages.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub version: u32,
    pub events: Vec<ShotEvent>,
    pub frames: BTreeMap<String, FreezeFrame>,
}

impl Dataset {
    pub fn new(events: Vec<ShotEvent>, frames: BTreeMap<String, FreezeFrame>) -> Self {
        Self {
            version: DATASET_VERSION,
            events,
            frames,
        }
    }

    pub fn frame(&self, event: &ShotEvent) -> Option<&FreezeFrame> {
        self.frames.get(&event.event_id)
    }

    pub fn save(&self, path: &Path) -> Result<(), IngestError> {
        let text = serde_json::to_string_pretty(self).map_err(|source| IngestError::Json {
            path: path.to_path_buf(),
            source,
        })?;
        fs::write(path, text).map_err(|source| IngestError::Io {
            path: path.to_path_buf(),
            source,
        })
    }

    pub fn load(path: &Path) -> Result<Self, IngestError> {
        let ds: Dataset = read_json(path)?;
        if ds.version != DATASET_VERSION {
            return Err(IngestError::Version(ds.version));
        }
        Ok(ds)
    }

    pub fn count(&self, outcome: Outcome) -> usize {
        self.events.iter().filter(|e| e.outcome == outcome).count()
    }
}

#[derive(Deserialize)]
struct Named {
    name: String,
}

#[derive(Deserialize)]
struct NamedId {
    id: u64,
    name: String,
}

#[derive(Deserialize)]
struct RawShot {
    outcome: Option<Named>,
}

#[derive(Deserialize)]
struct RawEvent {
    id: String,
    #[serde(default)]
    index: u64,
    #[serde(default)]
    period: u32,
    #[serde(rename = "type")]
    kind: Named,
    team: Option<NamedId>,
    position: Option<Named>,
    location: Option<Vec<f64>>,
    shot: Option<RawShot>,
}

#[derive(Deserialize)]
struct RawSnapshot {
    location: Vec<f64>,
    #[serde(default)]
    teammate: bool,
    #[serde(default)]
    actor: bool,
    #[serde(default)]
    keeper: bool,
}

#[derive(Deserialize)]
struct RawFrame {
    event_uuid: String,
    #[serde(default)]
    freeze_frame: Vec<RawSnapshot>,
}

#[derive(Deserialize)]
struct RawMatch {
    match_id: u64,
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, IngestError> {
    let text = fs::read_to_string(path).map_err(|source| IngestError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    serde_json::from_str(&text).map_err(|source| IngestError::Json {
        path: path.to_path_buf(),
        source,
    })
}

/// `(match_id, path)` for every `<match_id>.json` in `dir`, ordered by match id.
fn match_files(dir: &Path) -> Result<Vec<(u64, PathBuf)>, IngestError> {
    let mut out = Vec::new();
    let entries = match fs::read_dir(dir) {
        Ok(e) => e,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(out),
        Err(source) => {
            return Err(IngestError::Io {
                path: dir.to_path_buf(),
                source,
            })
        }
    };
    for entry in entries {
        let entry = entry.map_err(|source| IngestError::Io {
            path: dir.to_path_buf(),
            source,
        })?;
        let path = entry.path();
        if path.extension().and_then(|e| e.to_str()) != Some("json") {
            continue;
        }
        let id = path
            .file_stem()
            .and_then(|s| s.to_str())
            .and_then(|s| s.parse::<u64>().ok())
            .ok_or_else(|| IngestError::BadMatchFile(path.clone()))?;
        out.push((id, path));
    }
    out.sort();
    Ok(out)
}

fn clamp_point(p: &[f64]) -> Option<PitchPoint> {
    if p.len() < 2 || !p[0].is_finite() || !p[1].is_finite() {
        return None;
    }
    Some(PitchPoint::new(
        p[0].clamp(0.0, PITCH_LENGTH),
        p[1].clamp(0.0, PITCH_WIDTH),
    ))
}

/// Load every shot from `events_dir/<match_id>.json`, excluding shoot-outs and
/// shots whose grouped outcome is `Removed`.
pub fn load_events(events_dir: &Path) -> Result<Vec<ShotEvent>, IngestError> {
    load_events_filtered(events_dir, None)
}

pub fn load_events_filtered(
    events_dir: &Path,
    matches: Option<&BTreeSet<u64>>,
) -> Result<Vec<ShotEvent>, IngestError> {
    let mut shots = Vec::new();
    for (match_id, path) in match_files(events_dir)? {
        if matches.is_some_and(|m| !m.contains(&match_id)) {
            continue;
        }
        let events: Vec<RawEvent> = read_json(&path)?;
        for ev in events {
            if ev.kind.name != "Shot" || ev.period == SHOOTOUT_PERIOD {
                continue;
            }
            let missing = |field| IngestError::MissingField {
                path: path.clone(),
                event_id: ev.id.clone(),
                field,
            };
            let raw_outcome = ev
                .shot
                .as_ref()
                .and_then(|s| s.outcome.as_ref())
                .map(|o| o.name.clone())
                .ok_or_else(|| missing("shot.outcome"))?;
            let Some(outcome) = group_outcome(&raw_outcome)?.retained() else {
                continue;
            };
            let location = ev
                .location
                .as_deref()
                .and_then(clamp_point)
                .ok_or_else(|| missing("location"))?;
            let team = ev.team.as_ref().ok_or_else(|| missing("team"))?;
            shots.push(ShotEvent {
                event_id: ev.id.clone(),
                match_id,
                index: ev.index,
                period: ev.period,
                team_id: team.id,
                team_name: team.name.clone(),
                shooter_role: ev
                    .position
                    .as_ref()
                    .map(|p| p.name.clone())
                    .unwrap_or_default(),
                location,
                raw_outcome,
                outcome,
            });
        }
    }
    shots.sort_by(|a, b| (a.match_id, a.index).cmp(&(b.match_id, b.index)));
    Ok(shots)
}

/// Load 360 freeze frames from `frames_dir/<match_id>.json`. When `wanted` is
/// given only those event ids are kept.
pub fn load_freeze_frames(
    frames_dir: &Path,
    wanted: Option<&HashSet<String>>,
) -> Result<BTreeMap<String, FreezeFrame>, IngestError> {
    let mut out = BTreeMap::new();
    for (_, path) in match_files(frames_dir)? {
        let frames: Vec<RawFrame> = read_json(&path)?;
        for f in frames {
            if wanted.is_some_and(|w| !w.contains(&f.event_uuid)) {
                continue;
            }
            let players: Vec<PlayerSnapshot> = f
                .freeze_frame
                .iter()
                .filter_map(|s| {
                    clamp_point(&s.location).map(|location| PlayerSnapshot {
                        location,
                        teammate: s.teammate || s.actor,
                        actor: s.actor,
                        keeper: s.keeper,
                    })
                })
                .collect();
            let actors = players.iter().filter(|p| p.actor).count();
            if actors != 1 {
                warn!(
                    "skipping freeze frame {} in {}: {} actors",
                    f.event_uuid,
                    path.display(),
                    actors
                );
                continue;
            }
            out.insert(
                f.event_uuid.clone(),
                FreezeFrame {
                    event_id: f.event_uuid,
                    players,
                },
            );
        }
    }
    Ok(out)
}

/// Match ids listed in a StatsBomb `matches/<competition>/<season>.json` file.
pub fn load_match_ids(matches_file: &Path) -> Result<BTreeSet<u64>, IngestError> {
    let matches: Vec<RawMatch> = read_json(matches_file)?;
    Ok(matches.into_iter().map(|m| m.match_id).collect())
}

/// Load a StatsBomb open-data style directory holding `events/` and
/// `three-sixty/`.
pub fn load_corpus(
    data_dir: &Path,
    matches: Option<&BTreeSet<u64>>,
) -> Result<Dataset, IngestError> {
    let events = load_events_filtered(&data_dir.join("events"), matches)?;
    let wanted: HashSet<String> = events.iter().map(|e| e.event_id.clone()).collect();
    let frames = load_freeze_frames(&data_dir.join("three-sixty"), Some(&wanted))?;
    Ok(Dataset::new(events, frames))
}

/// Competition/season pairs with 360 data used for the study: Euro 2020 and
/// World Cup 2022.
pub const STUDY_COMPETITIONS: [(u32, u32); 2] = [(55, 43), (43, 106)];

/// Match filter for a data directory. A flat `matches.json` wins; otherwise
/// the open-data layout `matches/<competition>/<season>.json` is read for the
/// study competitions. `None` when neither exists (no filtering).
pub fn corpus_match_filter(data_dir: &Path) -> Result<Option<BTreeSet<u64>>, IngestError> {
    let flat = data_dir.join("matches.json");
    if flat.is_file() {
        return load_match_ids(&flat).map(Some);
    }
    let mut ids = BTreeSet::new();
    let mut found = false;
    for (comp, season) in STUDY_COMPETITIONS {
        let f = data_dir
            .join("matches")
            .join(comp.to_string())
            .join(format!("{season}.json"));
        if f.is_file() {
            found = true;
            ids.extend(load_match_ids(&f)?);
        }
    }
    Ok(found.then_some(ids))
}

/// Load either a normalized dataset file or a StatsBomb directory.
pub fn load_any(path: &Path) -> Result<Dataset, IngestError> {
    if path.is_file() {
        Dataset::load(path)
    } else {
        let filter = corpus_match_filter(path)?;
        load_corpus(path, filter.as_ref())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Fold {
    pub train: Vec<usize>,
    pub valid: Vec<usize>,
}

/// Indices into the event slice handed to [`split_dataset`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetSplit {
    pub seed: u64,
    pub train: Vec<usize>,
    pub test: Vec<usize>,
    /// Stratified folds over `train`; indices are still event indices.
    pub folds: Vec<Fold>,
}

impl DatasetSplit {
    /// Folds re-indexed to positions within `train`, for code that works on
    /// the training subset alone.
    pub fn local_folds(&self) -> Vec<Fold> {
        let pos: HashMap<usize, usize> = self
            .train
            .iter()
            .enumerate()
            .map(|(k, &i)| (i, k))
            .collect();
        let map = |idx: &[usize]| idx.iter().map(|i| pos[i]).collect();
        self.folds
            .iter()
            .map(|f| Fold {
                train: map(&f.train),
                valid: map(&f.valid),
            })
            .collect()
    }
}

pub fn split_dataset(events: &[ShotEvent], seed: u64) -> Result<DatasetSplit, IngestError> {
    split_dataset_with(events, seed, TEST_FRACTION, NUM_FOLDS)
}

pub fn split_dataset_with(
    events: &[ShotEvent],
    seed: u64,
    test_fraction: f64,
    num_folds: usize,
) -> Result<DatasetSplit, IngestError> {
    let labels: Vec<Outcome> = events.iter().map(|e| e.outcome).collect();
    let mut order: Vec<usize> = (0..events.len()).collect();
    order.sort_by(|&a, &b| {
        let (ea, eb) = (&events[a], &events[b]);
        (ea.match_id, ea.index, &ea.event_id).cmp(&(eb.match_id, eb.index, &eb.event_id))
    });
    stratified_split(&labels, &order, seed, test_fraction, num_folds)
}

/// Stratified split over `labels`, visiting indices in `order` before shuffling.
pub fn stratified_split(
    labels: &[Outcome],
    order: &[usize],
    seed: u64,
    test_fraction: f64,
    num_folds: usize,
) -> Result<DatasetSplit, IngestError> {
    let total = labels.len();
    if total == 0 {
        return Err(IngestError::Empty);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let mut strata: BTreeMap<Outcome, Vec<usize>> = BTreeMap::new();
    for &i in order {
        strata.entry(labels[i]).or_default().push(i);
    }
    for members in strata.values_mut() {
        members.shuffle(&mut rng);
    }

    // Largest-remainder allocation of the test quota across strata.
    let n_test = (test_fraction * total as f64).ceil() as usize;
    let mut quota: Vec<(Outcome, usize, f64)> = strata
        .iter()
        .map(|(&k, m)| {
            let exact = m.len() as f64 * n_test as f64 / total as f64;
            (k, exact.floor() as usize, exact - exact.floor())
        })
        .collect();
    let assigned: usize = quota.iter().map(|q| q.1).sum();
    let mut by_remainder: Vec<usize> = (0..quota.len()).collect();
    by_remainder.sort_by(|&a, &b| quota[b].2.total_cmp(&quota[a].2).then(a.cmp(&b)));
    for &q in by_remainder.iter().take(n_test.saturating_sub(assigned)) {
        quota[q].1 += 1;
    }

    let mut train = Vec::new();
    let mut test = Vec::new();
    let mut fold_valid: Vec<Vec<usize>> = vec![Vec::new(); num_folds];
    let mut cursor = 0usize;
    for (key, take, _) in &quota {
        let members = &strata[key];
        let (te, tr) = members.split_at((*take).min(members.len()));
        if tr.len() < num_folds {
            return Err(IngestError::StratumTooSmall {
                class: *key,
                count: tr.len(),
                needed: num_folds,
            });
        }
        test.extend_from_slice(te);
        train.extend_from_slice(tr);
        for &i in tr {
            fold_valid[cursor % num_folds].push(i);
            cursor += 1;
        }
    }
    train.sort_unstable();
    test.sort_unstable();
    let folds = fold_valid
        .into_iter()
        .map(|mut valid| {
            valid.sort_unstable();
            let held: HashSet<usize> = valid.iter().copied().collect();
            let train = train
                .iter()
                .copied()
                .filter(|i| !held.contains(i))
                .collect();
            Fold { train, valid }
        })
        .collect();
    Ok(DatasetSplit {
        seed,
        train,
        test,
        folds,
    })
}
