//! Writes the bundled fixture corpus: StatsBomb-format events and 360 frames
//! for a handful of synthetic matches.
//!
//! Shots are simulated physically. The shooter aims uniformly inside the
//! posts; every opponent standing in the block zone gets a chance to stop the
//! ball that falls off with angular offset and grows as the defender closes
//! in, nearest first; unblocked shots miss with a probability rising with
//! distance and falling with the goal angle. Freeze frames drop a few players
//! at random, as real 360 frames do, so some blocks come from defenders the
//! frame does not show.
//!
//!     cargo run -p shotgame-core --example synth_corpus -- data/fixtures/corpus

use std::fs;
use std::path::PathBuf;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde_json::{json, Value};
use shotgame_core::geometry::{
    ang2goal, defender_angle_distance, dist2goal, feasible_angle_span, feasible_zone_contains,
    PitchPoint, BOX_LEFT, BOX_RIGHT,
};

const SEED: u64 = 20_240_607;
const SHOTS_PER_MATCH: usize = 20;

const MATCHES: [(u64, (u64, &str), (u64, &str)); 10] = [
    (3_900_001, (779, "Argentina"), (771, "France")),
    (3_900_002, (785, "Croatia"), (788, "Morocco")),
    (3_900_003, (773, "Spain"), (770, "Germany")),
    (3_900_004, (768, "England"), (771, "France")),
    (3_900_005, (781, "Brazil"), (785, "Croatia")),
    (3_900_006, (780, "Portugal"), (788, "Morocco")),
    (3_900_007, (941, "Netherlands"), (779, "Argentina")),
    (3_900_008, (782, "Japan"), (773, "Spain")),
    (3_900_009, (769, "United States"), (768, "England")),
    (3_900_010, (786, "Senegal"), (941, "Netherlands")),
];

const ROLES: [(&str, u32); 10] = [
    ("Center Forward", 30),
    ("Left Wing", 10),
    ("Right Wing", 10),
    ("Center Attacking Midfield", 10),
    ("Left Center Midfield", 7),
    ("Right Center Midfield", 7),
    ("Left Center Back", 6),
    ("Right Center Back", 6),
    ("Left Back", 5),
    ("Right Back", 5),
];

fn uuid(rng: &mut ChaCha8Rng) -> String {
    let b: [u8; 16] = rng.random();
    let h: String = b.iter().map(|x| format!("{x:02x}")).collect();
    format!(
        "{}-{}-4{}-a{}-{}",
        &h[0..8],
        &h[8..12],
        &h[13..16],
        &h[17..20],
        &h[20..32]
    )
}

fn role(rng: &mut ChaCha8Rng) -> &'static str {
    let total: u32 = ROLES.iter().map(|r| r.1).sum();
    let mut pick = rng.random_range(0..total);
    for (name, w) in ROLES {
        if pick < w {
            return name;
        }
        pick -= w;
    }
    ROLES[0].0
}

fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

struct Player {
    at: PitchPoint,
    teammate: bool,
    keeper: bool,
}

struct Shot {
    shooter: PitchPoint,
    others: Vec<Player>,
    outcome: &'static str,
}

fn round1(v: f64) -> f64 {
    (v * 10.0).round() / 10.0
}

fn point(rng: &mut ChaCha8Rng, x: (f64, f64), y: (f64, f64)) -> PitchPoint {
    PitchPoint::new(
        round1(rng.random_range(x.0..x.1)),
        round1(rng.random_range(y.0..y.1)),
    )
}

/// A point inside the triangle shooter / box corners, biased toward the
/// shooter-to-goal lane.
fn zone_point(rng: &mut ChaCha8Rng, shooter: PitchPoint) -> PitchPoint {
    let lane = Normal::new(0.5f64, 0.18).unwrap();
    loop {
        let depth: f64 = rng.random_range(0.06..0.8);
        let lateral: f64 = lane.sample(rng).clamp(0.02, 0.98);
        let gx = BOX_LEFT.x;
        let gy = BOX_LEFT.y + lateral * (BOX_RIGHT.y - BOX_LEFT.y);
        let p = PitchPoint::new(
            round1(shooter.x + depth * (gx - shooter.x)),
            round1(shooter.y + depth * (gy - shooter.y)),
        );
        if feasible_zone_contains(shooter, p) && shooter.metric_distance(p) > 0.8 {
            return p;
        }
    }
}

fn simulate(rng: &mut ChaCha8Rng) -> Shot {
    let depth = Normal::new(0.0f64, 1.0).unwrap();
    let shooter = loop {
        let x = 120.0 - (5.0 + 24.0 * rng.random::<f64>().powf(1.3));
        let y = 40.0 + 8.5 * depth.sample(rng);
        let p = PitchPoint::new(round1(x), round1(y));
        if (14.0..=66.0).contains(&p.y) {
            break p;
        }
    };
    let mut others = Vec::new();
    // keeper a couple of yards off the line toward the ball
    let d = dist2goal(shooter).max(1.0);
    let k = 2.0 * 120.0 / 105.0 / d;
    others.push(Player {
        at: PitchPoint::new(
            round1(120.0 + (shooter.x - 120.0) * k),
            round1(40.0 + (shooter.y - 40.0) * k * 0.6),
        ),
        teammate: false,
        keeper: true,
    });
    let in_zone = match rng.random_range(0..100) {
        0..=29 => 0,
        30..=61 => 1,
        62..=83 => 2,
        84..=94 => 3,
        _ => 4,
    };
    for _ in 0..in_zone {
        others.push(Player {
            at: zone_point(rng, shooter),
            teammate: false,
            keeper: false,
        });
    }
    for _ in 0..rng.random_range(2..7) {
        let at = loop {
            let p = point(rng, (88.0, 119.0), (8.0, 72.0));
            if !feasible_zone_contains(shooter, p) {
                break p;
            }
        };
        others.push(Player {
            at,
            teammate: false,
            keeper: false,
        });
    }
    for _ in 0..rng.random_range(2..7) {
        others.push(Player {
            at: point(rng, (86.0, 117.0), (12.0, 68.0)),
            teammate: true,
            keeper: false,
        });
    }

    let span = feasible_angle_span(shooter).unwrap().n;
    let aim = rng.random_range(0.0..span);
    let mut blockers: Vec<(f64, f64)> = others
        .iter()
        .filter(|p| !p.teammate && !p.keeper && feasible_zone_contains(shooter, p.at))
        .filter_map(|p| defender_angle_distance(shooter, p.at).ok())
        .collect();
    blockers.sort_by(|a, b| a.1.total_cmp(&b.1));
    let mut blocked = rng.random_bool(0.03);
    for (theta_d, l) in blockers {
        if blocked {
            break;
        }
        let reach = (0.8 / l).atan().to_degrees() + 1.5;
        let offset = aim - theta_d;
        let p = 0.7 * (-offset * offset / (2.0 * reach * reach)).exp();
        blocked = rng.random_bool(p);
    }
    let outcome = if blocked {
        "Blocked"
    } else {
        let dist_m = dist2goal(shooter) * 105.0 / 120.0;
        let p_off = sigmoid(0.05 + 0.14 * (dist_m - 16.0) - 2.5 * (ang2goal(shooter) - 0.55));
        if rng.random_bool(p_off) {
            ["Off T", "Off T", "Off T", "Wayward", "Post"][rng.random_range(0..5)]
        } else if rng.random_bool(0.3) {
            "Goal"
        } else {
            "Saved"
        }
    };
    Shot {
        shooter,
        others,
        outcome,
    }
}

fn main() {
    let out = PathBuf::from(
        std::env::args()
            .nth(1)
            .unwrap_or_else(|| "data/fixtures/corpus".into()),
    );
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    fs::create_dir_all(out.join("events")).unwrap();
    fs::create_dir_all(out.join("three-sixty")).unwrap();
    let mut matches = Vec::new();
    for (m, &(match_id, home, away)) in MATCHES.iter().enumerate() {
        let mut events: Vec<Value> = Vec::new();
        let mut frames: Vec<Value> = Vec::new();
        let mut index = 1u64;
        let team_json = |t: (u64, &str)| json!({"id": t.0, "name": t.1});
        let push_pass = |events: &mut Vec<Value>,
                         frames: &mut Vec<Value>,
                         rng: &mut ChaCha8Rng,
                         index: &mut u64| {
            let id = uuid(rng);
            events.push(json!({
                "id": id, "index": *index, "period": 1,
                "type": {"id": 30, "name": "Pass"},
                "team": team_json(if *index % 2 == 0 { home } else { away }),
                "location": [round1(rng.random_range(20.0..100.0)), round1(rng.random_range(5.0..75.0))],
            }));
            frames.push(
                json!({"event_uuid": id, "visible_area": [], "freeze_frame": [
                    {"teammate": true, "actor": true, "keeper": false, "location": [50.0, 40.0]}
                ]}),
            );
            *index += 1;
        };
        for s in 0..SHOTS_PER_MATCH {
            for _ in 0..rng.random_range(1..4) {
                push_pass(&mut events, &mut frames, &mut rng, &mut index);
            }
            let team = if rng.random_bool(0.5) { home } else { away };
            let shot = simulate(&mut rng);
            let id = uuid(&mut rng);
            let period = if s < SHOTS_PER_MATCH / 2 { 1 } else { 2 };
            events.push(json!({
                "id": id, "index": index, "period": period,
                "type": {"id": 16, "name": "Shot"},
                "team": team_json(team),
                "position": {"name": role(&mut rng)},
                "location": [shot.shooter.x, shot.shooter.y],
                "shot": {"outcome": {"name": shot.outcome}, "type": {"name": "Open Play"}},
            }));
            index += 1;
            // one shot per match goes without 360 coverage
            if s == 7 {
                continue;
            }
            let mut ff = vec![json!({"teammate": true, "actor": true, "keeper": false,
                                     "location": [shot.shooter.x, shot.shooter.y]})];
            for p in &shot.others {
                if !p.keeper && rng.random_bool(0.12) {
                    continue;
                }
                ff.push(
                    json!({"teammate": p.teammate, "actor": false, "keeper": p.keeper,
                               "location": [p.at.x, p.at.y]}),
                );
            }
            frames.push(json!({"event_uuid": id, "visible_area": [], "freeze_frame": ff}));
        }
        if m == 0 {
            // dropped from the outcome space
            events.push(json!({
                "id": uuid(&mut rng), "index": index, "period": 2,
                "type": {"id": 16, "name": "Shot"}, "team": team_json(home),
                "position": {"name": "Center Forward"}, "location": [108.0, 38.0],
                "shot": {"outcome": {"name": "Saved to Post"}},
            }));
            index += 1;
        }
        if m == 1 {
            // penalty shoot-out
            events.push(json!({
                "id": uuid(&mut rng), "index": index, "period": 5,
                "type": {"id": 16, "name": "Shot"}, "team": team_json(away),
                "position": {"name": "Center Forward"}, "location": [108.0, 40.0],
                "shot": {"outcome": {"name": "Goal"}},
            }));
        }
        fs::write(
            out.join("events").join(format!("{match_id}.json")),
            serde_json::to_string_pretty(&events).unwrap(),
        )
        .unwrap();
        fs::write(
            out.join("three-sixty").join(format!("{match_id}.json")),
            serde_json::to_string_pretty(&frames).unwrap(),
        )
        .unwrap();
        matches.push(json!({"match_id": match_id,
                            "home_team": {"home_team_name": home.1},
                            "away_team": {"away_team_name": away.1}}));
    }
    fs::write(
        out.join("matches.json"),
        serde_json::to_string_pretty(&matches).unwrap(),
    )
    .unwrap();
    println!("wrote {} matches to {}", MATCHES.len(), out.display());
}
