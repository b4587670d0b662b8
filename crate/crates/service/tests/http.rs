use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

use axum::body::Body;
use axum::http::{Request, StatusCode};
use http_body_util::BodyExt;
use serde_json::{json, Value};
use tower::ServiceExt;

use shotgame_core::game::{
    profile_gain, DefenderStrategy, PayoffTable, Profile, ShooterStrategy, TIE_TOL,
};
use shotgame_service::{router, AppState};

fn root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn state() -> Arc<AppState> {
    Arc::new(AppState::load(&root().join("models"), &root().join("data/scenarios")).unwrap())
}

async fn call(
    state: &Arc<AppState>,
    method: &str,
    uri: &str,
    body: Option<Value>,
) -> (StatusCode, Value, Vec<u8>) {
    let req = Request::builder()
        .method(method)
        .uri(uri)
        .header("content-type", "application/json");
    let req = match body {
        Some(b) => req.body(Body::from(b.to_string())).unwrap(),
        None => req.body(Body::empty()).unwrap(),
    };
    let resp = router(state.clone()).oneshot(req).await.unwrap();
    let status = resp.status();
    let bytes = resp
        .into_body()
        .collect()
        .await
        .unwrap()
        .to_bytes()
        .to_vec();
    let v = serde_json::from_slice(&bytes).unwrap();
    (status, v, bytes)
}

async fn fixture_request(state: &Arc<AppState>, id: &str) -> Value {
    let (_, f, _) = call(state, "GET", &format!("/fixtures/{id}"), None).await;
    let f = &f["fixture"];
    json!({"shooter": f["shooter"], "players": f["players"]})
}

#[tokio::test]
async fn health_and_fixture_listing() {
    let s = state();
    let (st, v, _) = call(&s, "GET", "/health", None).await;
    assert_eq!(st, StatusCode::OK);
    assert_eq!(v["schema_version"], 1);
    assert_eq!(v["status"], "ok");

    let (st, v, _) = call(&s, "GET", "/fixtures", None).await;
    assert_eq!(st, StatusCode::OK);
    assert_eq!(v["schema_version"], 1);
    let list = v["fixtures"].as_array().unwrap();
    assert!(list.len() >= 2);
    assert_eq!(v["geometry"]["left_post"], json!([120.0, 36.0]));

    let (st, v, _) = call(&s, "GET", "/fixtures/italy-wales", None).await;
    assert_eq!(st, StatusCode::OK);
    for p in v["fixture"]["players"].as_array().unwrap() {
        let (x, y) = (p["x"].as_f64().unwrap(), p["y"].as_f64().unwrap());
        assert!((0.0..=120.0).contains(&x) && (0.0..=80.0).contains(&y));
    }

    let (st, v, _) = call(&s, "GET", "/fixtures/nowhere", None).await;
    assert_eq!(st, StatusCode::NOT_FOUND);
    assert_eq!(v["error"]["code"], "not_found");
    assert_eq!(v["schema_version"], 1);
}

#[tokio::test]
async fn evaluation_is_consistent_and_deterministic() {
    let s = state();
    let req = fixture_request(&s, "italy-wales").await;
    let t0 = Instant::now();
    let (st, v, bytes) = call(&s, "POST", "/scenario/evaluate", Some(req.clone())).await;
    let elapsed = t0.elapsed();
    assert_eq!(st, StatusCode::OK, "{v}");
    assert_eq!(v["schema_version"], 1);
    assert_eq!(v["payoff_table"]["shoot"]["blocking"], v["xsot"]);
    assert_eq!(v["payoff_table"]["pass"]["blocking"], v["xosot"]);
    let attackers = v["attackers"].as_array().unwrap();
    assert_eq!(attackers.len(), 6);
    let p_on: Vec<f64> = attackers
        .iter()
        .map(|a| a["p_on"].as_f64().unwrap())
        .collect();
    assert!(p_on.windows(2).all(|w| w[0] >= w[1]));
    assert_eq!(v["xosot"].as_f64().unwrap(), p_on[0]);
    for a in attackers {
        let f = |k: &str| a[k].as_f64().unwrap();
        let want = (1.0 - (f("p_off") + f("p_block")).min(1.0)) * f("p_control");
        assert!((f("p_on") - want).abs() < 2e-6);
    }
    let curve = v["theory_block_curve"].as_array().unwrap();
    assert_eq!(curve[0][0], 0.0);

    // equilibrium passes the deviation check
    let t = &v["payoff_table"];
    let g = |r: &str, c: &str| t[r][c].as_f64().unwrap();
    let table = PayoffTable::new(
        g("shoot", "blocking"),
        g("shoot", "not_blocking"),
        g("pass", "blocking"),
        g("pass", "not_blocking"),
    );
    for p in v["nash"]["pure"].as_array().unwrap() {
        let profile = Profile {
            shooter: if p["shooter"] == "shoot" {
                ShooterStrategy::Shoot
            } else {
                ShooterStrategy::Pass
            },
            defender: if p["defender"] == "blocking" {
                DefenderStrategy::Blocking
            } else {
                DefenderStrategy::NotBlocking
            },
        };
        assert!(profile_gain(&table, profile) <= TIE_TOL);
    }
    assert!(v["nash"]["max_deviation_gain"].as_f64().unwrap() <= 1e-6);

    let (_, _, again) = call(&s, "POST", "/scenario/evaluate", Some(req)).await;
    assert_eq!(bytes, again);
    assert!(elapsed.as_millis() < 1000, "{elapsed:?}");
}

#[tokio::test]
async fn out_of_bounds_names_the_field() {
    let s = state();
    let mut req = fixture_request(&s, "italy-wales").await;
    req["players"][3]["y"] = json!(81.0);
    let (st, v, _) = call(&s, "POST", "/scenario/evaluate", Some(req)).await;
    assert_eq!(st, StatusCode::BAD_REQUEST);
    assert_eq!(v["error"]["path"], "players/3/y");

    let bad = json!({"shooter": {"x": 100.0, "y": 40.0}, "players": [{"x": 110.0, "y": 40.0, "teammate": "yes"}]});
    let (st, v, _) = call(&s, "POST", "/scenario/evaluate", Some(bad)).await;
    assert_eq!(st, StatusCode::BAD_REQUEST);
    assert_eq!(v["error"]["path"], "players/0/teammate");

    let bad = json!({"shooter": {"x": 100.0, "y": 40.0}, "options": {"theory_params_override": {"c1": 30.0, "c2": 10.0, "c3": 1.5, "c4": 0.2, "a": -2.0}}});
    let (st, v, _) = call(&s, "POST", "/scenario/evaluate", Some(bad)).await;
    assert_eq!(st, StatusCode::BAD_REQUEST);
    assert_eq!(v["error"]["path"], "options/theory_params_override/c3");
}

#[tokio::test]
async fn no_teammates_is_flagged_not_an_error() {
    let s = state();
    let req = json!({"shooter": {"x": 104.0, "y": 40.0}, "players": [{"x": 110.0, "y": 40.0, "teammate": false}]});
    let (st, v, _) = call(&s, "POST", "/scenario/evaluate", Some(req)).await;
    assert_eq!(st, StatusCode::OK);
    assert_eq!(v["xosot"], 0.0);
    assert_eq!(v["no_teammates"], true);
    assert!(v["best_pass_target"].is_null());
}

#[tokio::test]
async fn defender_outside_zone_zeroes_theory_feature() {
    let s = state();
    let inside = json!({"shooter": {"x": 104.0, "y": 40.0}, "players": [{"x": 110.0, "y": 40.5, "teammate": false}, {"x": 100.0, "y": 60.0, "teammate": true}]});
    let (_, v, _) = call(&s, "POST", "/scenario/evaluate", Some(inside.clone())).await;
    assert!(v["shooter"]["theory_block"].as_f64().unwrap() > 0.0);
    let mut moved = inside;
    moved["players"][0]["x"] = json!(95.0);
    moved["players"][0]["y"] = json!(20.0);
    let (_, v, _) = call(&s, "POST", "/scenario/evaluate", Some(moved)).await;
    assert_eq!(v["shooter"]["theory_block"], 0.0);
}

#[tokio::test]
async fn remove_closest_switches_the_view() {
    let s = state();
    let mut req = fixture_request(&s, "spain-italy").await;
    let (_, with, _) = call(&s, "POST", "/scenario/evaluate", Some(req.clone())).await;
    req["options"] = json!({"remove_closest": true});
    let (_, without, _) = call(&s, "POST", "/scenario/evaluate", Some(req)).await;
    assert_eq!(with["view"], "blocking");
    assert_eq!(without["view"], "not_blocking");
    assert_eq!(
        without["shooter"]["p_on"],
        with["payoff_table"]["shoot"]["not_blocking"]
    );
    assert_eq!(without["payoff_table"], with["payoff_table"]);
    assert!(
        without["shooter"]["theory_block"].as_f64() <= with["shooter"]["theory_block"].as_f64()
    );
}

#[tokio::test]
async fn concurrent_identical_requests_agree() {
    let s = state();
    let req = fixture_request(&s, "spain-italy").await;
    let handles: Vec<_> = (0..4)
        .map(|_| {
            let s = s.clone();
            let req = req.clone();
            tokio::spawn(async move { call(&s, "POST", "/scenario/evaluate", Some(req)).await.2 })
        })
        .collect();
    let mut bodies = Vec::new();
    for h in handles {
        bodies.push(h.await.unwrap());
    }
    assert!(bodies.windows(2).all(|w| w[0] == w[1]));
}

#[tokio::test]
async fn full_frame_latency() {
    let s = state();
    let mut players = Vec::new();
    for i in 0..21 {
        let x = 85.0 + (i % 7) as f64 * 4.5;
        let y = 12.0 + (i / 7) as f64 * 20.0 + (i % 3) as f64 * 3.0;
        players.push(json!({"x": x, "y": y, "teammate": i % 2 == 0, "keeper": i == 1}));
    }
    let req =
        json!({"shooter": {"role": "Center Forward", "x": 102.0, "y": 38.0}, "players": players});
    let _ = call(&s, "POST", "/scenario/evaluate", Some(req.clone())).await;
    let t0 = Instant::now();
    let (st, _, _) = call(&s, "POST", "/scenario/evaluate", Some(req)).await;
    let ms = t0.elapsed().as_secs_f64() * 1e3;
    assert_eq!(st, StatusCode::OK);
    assert!(ms < 100.0, "{ms:.1} ms");
}
