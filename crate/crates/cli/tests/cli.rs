use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn shotgame(out: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_shotgame"))
        .current_dir(root())
        .args(args)
        .arg("--out")
        .arg(out)
        .env_remove("SHOTGAME_DATA")
        .env("RUST_LOG", "warn")
        .output()
        .unwrap()
}

fn ok(o: &Output) -> String {
    assert!(
        o.status.success(),
        "exit {:?}\nstdout:\n{}\nstderr:\n{}",
        o.status.code(),
        String::from_utf8_lossy(&o.stdout),
        String::from_utf8_lossy(&o.stderr)
    );
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn read_json(p: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(p).unwrap()).unwrap()
}

#[test]
fn usage_errors_exit_1() {
    let tmp = tempfile::tempdir().unwrap();
    assert_eq!(shotgame(tmp.path(), &["bogus"]).status.code(), Some(1));
    assert_eq!(shotgame(tmp.path(), &["evaluate"]).status.code(), Some(1));
    assert_eq!(
        shotgame(
            tmp.path(),
            &["evaluate", "--fixture", "italy-wales", "--event", "x"]
        )
        .status
        .code(),
        Some(1)
    );
    assert_eq!(shotgame(tmp.path(), &["--help"]).status.code(), Some(0));
}

#[test]
fn bad_config_exits_1() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("c.json");
    fs::write(&cfg, r#"{"seed": 1, "sede": 2}"#).unwrap();
    let o = shotgame(
        tmp.path(),
        &["analyze", "chi-square", "--config", cfg.to_str().unwrap()],
    );
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("sede"));

    fs::write(&cfg, r#"{"dt": -1}"#).unwrap();
    let o = shotgame(
        tmp.path(),
        &["analyze", "chi-square", "--config", cfg.to_str().unwrap()],
    );
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn data_errors_exit_2() {
    let tmp = tempfile::tempdir().unwrap();
    let o = shotgame(tmp.path(), &["ingest", "--data-dir", "/nonexistent/shots"]);
    assert_eq!(o.status.code(), Some(2));
    let o = shotgame(tmp.path(), &["evaluate", "--fixture", "no-such-fixture"]);
    assert_eq!(o.status.code(), Some(2));
    let o = shotgame(
        tmp.path(),
        &[
            "evaluate",
            "--fixture",
            "italy-wales",
            "--models-dir",
            "/nonexistent",
        ],
    );
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn chi_square_on_bundled_table() {
    let tmp = tempfile::tempdir().unwrap();
    let stdout = ok(&shotgame(tmp.path(), &["analyze", "chi-square"]));
    assert!(
        stdout.contains("statistic 0.6163, df 4, p-value 0.9612"),
        "{stdout}"
    );
    assert!(tmp.path().join("chi_square.json").exists());
    assert!(tmp.path().join("analyze-chi-square.manifest.json").exists());
}

#[test]
fn ingest_is_deterministic() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    ok(&shotgame(a.path(), &["ingest"]));
    ok(&shotgame(b.path(), &["ingest"]));
    for f in ["dataset.json", "split.json", "ingest_summary.json"] {
        assert_eq!(
            fs::read(a.path().join(f)).unwrap(),
            fs::read(b.path().join(f)).unwrap(),
            "{f}"
        );
    }
    let split = read_json(&a.path().join("split.json"));
    assert_eq!(split["test"].as_array().unwrap().len(), 40);
    assert_eq!(split["folds"].as_array().unwrap().len(), 5);
}

#[test]
fn evaluate_fixture_and_event() {
    let tmp = tempfile::tempdir().unwrap();
    ok(&shotgame(
        tmp.path(),
        &["evaluate", "--fixture", "italy-wales"],
    ));
    let first = fs::read(tmp.path().join("evaluation_italy-wales.json")).unwrap();
    ok(&shotgame(
        tmp.path(),
        &["evaluate", "--fixture", "italy-wales"],
    ));
    assert_eq!(
        first,
        fs::read(tmp.path().join("evaluation_italy-wales.json")).unwrap()
    );

    let v: Value = serde_json::from_slice(&first).unwrap();
    let resp = &v["response"];
    assert_eq!(resp["schema_version"], 1);
    assert_eq!(v["reference"].as_array().unwrap().len(), 7);
    let xsot = resp["xsot"].as_f64().unwrap();
    assert!((0.0..=1.0).contains(&xsot));

    // a fixture given by path works too
    let path = root().join("data/scenarios/spain-italy.json");
    ok(&shotgame(
        tmp.path(),
        &[
            "evaluate",
            "--fixture",
            path.to_str().unwrap(),
            "--remove-closest",
        ],
    ));
    let v = read_json(&tmp.path().join("evaluation_spain-italy.json"));
    assert_eq!(v["response"]["view"], "not_blocking");

    ok(&shotgame(tmp.path(), &["ingest"]));
    let ds = read_json(&tmp.path().join("dataset.json"));
    let id = ds["events"][0]["event_id"].as_str().unwrap().to_string();
    ok(&shotgame(tmp.path(), &["evaluate", "--event", &id]));
    let v = read_json(&tmp.path().join(format!("evaluation_{id}.json")));
    assert!(v["response"]["xsot"].as_f64().is_some());
    let o = shotgame(tmp.path(), &["evaluate", "--event", "not-an-event"]);
    assert_eq!(o.status.code(), Some(2));
}

/// Circle centres in SVG units, keyed by data-index.
fn circles(svg: &str) -> Vec<(Option<usize>, String, f64, f64)> {
    svg.lines()
        .filter(|l| l.trim_start().starts_with("<circle"))
        .map(|l| {
            let attr = |name: &str| {
                let key = format!(" {name}=\"");
                let start = l.find(&key).map(|i| i + key.len())?;
                let end = l[start..].find('"')? + start;
                Some(l[start..end].to_string())
            };
            (
                attr("data-index").map(|v| v.parse().unwrap()),
                attr("class").unwrap(),
                attr("cx").unwrap().parse().unwrap(),
                attr("cy").unwrap().parse().unwrap(),
            )
        })
        .collect()
}

#[test]
fn plot_markers_follow_fixture_coordinates() {
    let tmp = tempfile::tempdir().unwrap();
    ok(&shotgame(tmp.path(), &["plot", "--fixture", "spain-italy"]));
    let svg = fs::read_to_string(tmp.path().join("spain-italy.svg")).unwrap();
    assert!(svg.starts_with("<svg"));
    for id in ["zone", "span", "curve", "players"] {
        assert!(svg.contains(&format!("id=\"{id}\"")), "{id}");
    }
    let fx = read_json(&root().join("data/scenarios/spain-italy.json"));
    let players = fx["players"].as_array().unwrap();
    let marks = circles(&svg);
    assert_eq!(marks.len(), players.len() + 1);
    // 10 px per yard from x = 60, 20 px padding
    let to_px = |x: f64, y: f64| (20.0 + (x - 60.0) * 10.0, 20.0 + y * 10.0);
    for (i, p) in players.iter().enumerate() {
        let (cx, cy) = to_px(p["x"].as_f64().unwrap(), p["y"].as_f64().unwrap());
        let m = marks.iter().find(|m| m.0 == Some(i)).unwrap();
        assert!(
            (m.2 - cx).abs() < 0.01 && (m.3 - cy).abs() < 0.01,
            "player {i}"
        );
        let want = if p["keeper"].as_bool().unwrap_or(false) {
            "keeper"
        } else if p["teammate"].as_bool().unwrap() {
            "teammate"
        } else {
            "defender"
        };
        assert_eq!(m.1, want);
    }
    let shooter = marks.iter().find(|m| m.1 == "shooter").unwrap();
    assert_eq!((shooter.2, shooter.3), to_px(103.5, 49.0));
}

#[test]
fn plot_empty_frame_and_unwritable_path() {
    let tmp = tempfile::tempdir().unwrap();
    let scenario = tmp.path().join("alone.json");
    fs::write(
        &scenario,
        r#"{"id": "alone", "description": "nobody else", "shooter": {"x": 105.0, "y": 38.0}, "players": []}"#,
    )
    .unwrap();
    let file = tmp.path().join("alone.svg");
    ok(&shotgame(
        tmp.path(),
        &[
            "plot",
            "--fixture",
            scenario.to_str().unwrap(),
            "--file",
            file.to_str().unwrap(),
        ],
    ));
    let marks = circles(&fs::read_to_string(&file).unwrap());
    assert_eq!(marks.len(), 1);
    assert_eq!(marks[0].1, "shooter");

    let o = shotgame(
        tmp.path(),
        &[
            "plot",
            "--fixture",
            "spain-italy",
            "--file",
            "/nonexistent/dir/x.svg",
        ],
    );
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn fit_theory_and_train_smoke() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("c.json");
    fs::write(&cfg, r#"{"max_iter": 5}"#).unwrap();
    let c = cfg.to_str().unwrap();
    let stdout = ok(&shotgame(
        tmp.path(),
        &["fit-theory", "--config", c, "--method", "nelder-mead"],
    ));
    assert!(stdout.contains("cv CEL"), "{stdout}");
    let report = read_json(&tmp.path().join("theory_report.json"));
    assert_eq!(report["folds"].as_array().unwrap().len(), 5);
    let theory = tmp.path().join("theory_params.json");
    assert!(theory.exists());

    ok(&shotgame(
        tmp.path(),
        &[
            "train",
            "--model",
            "block",
            "--epochs",
            "3",
            "--no-baselines",
            "--theory",
            theory.to_str().unwrap(),
        ],
    ));
    let model = read_json(&tmp.path().join("dnn_block.json"));
    assert_eq!(model["version"], 1);
    assert!(tmp.path().join("train_block_report.json").exists());
    assert!(tmp.path().join("train-block.manifest.json").exists());

    ok(&shotgame(
        tmp.path(),
        &["train", "--model", "off", "--epochs", "2", "--no-baselines"],
    ));
    assert!(tmp.path().join("dnn_off.json").exists());

    let o = shotgame(tmp.path(), &["train", "--model", "off", "--epochs", "0"]);
    assert_eq!(o.status.code(), Some(1));
}
