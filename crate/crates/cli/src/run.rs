use std::fs;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::{anyhow, bail, Context, Result};
use serde::Serialize;
use serde_json::{json, Value};

use shotgame_core::analysis::{
    chi_square_independence, confusion_matrix, payoff_study, read_team_records, score_shots,
    shot_sequence_table, team_study, ContingencyTable,
};
use shotgame_core::game::{DefenderStrategy, PayoffTable, ShooterStrategy};
use shotgame_core::ingest::{load_any, split_dataset, Dataset, Outcome};
use shotgame_core::metrics::{Engine, Scene};
use shotgame_core::nnet::cv::{
    cross_validate_historical, elastic_net_search, fit_final, full_grid, grid_search_cv,
};
use shotgame_core::nnet::features::build_row;
use shotgame_core::nnet::{ClassifierModel, FeatureKind, FeatureRow, TrainConfig};
use shotgame_core::pitch_control::ControlParams;
use shotgame_core::scenario::{load_fixture, load_fixtures, ScenarioFixture};
use shotgame_core::stats::bce;
use shotgame_core::theory::{
    block_cel, fit_theory_params, BlockExample, FitSettings, PreparedShot, TheoryParams,
};
use shotgame_service::{evaluate_scene, load_engine, AppState, ScenarioResponse, THEORY_FILE};

use crate::config::{GridChoice, Manifest, RunConfig, Versions};
use crate::{plot, AnalyzeCommand, Command, FeatureArg, ModelArg, Target};

pub fn dispatch(cfg: &RunConfig, cmd: &Command) -> Result<()> {
    match cmd {
        Command::Ingest => ingest(cfg),
        Command::FitTheory { .. } => fit_theory(cfg),
        Command::Train {
            model,
            features,
            theory,
            no_baselines,
            ..
        } => train(cfg, *model, *features, theory.as_deref(), !no_baselines),
        Command::Evaluate {
            target,
            remove_closest,
        } => evaluate(cfg, target, *remove_closest),
        Command::PayoffStudy => payoff(cfg),
        Command::Analyze { what } => match what {
            AnalyzeCommand::ChiSquare { from_data, .. } => chi_square(cfg, *from_data),
            AnalyzeCommand::Correlation { .. } => correlation(cfg),
            AnalyzeCommand::Confusion { model, .. } => confusion(cfg, *model),
        },
        Command::Plot { target, file } => plot_cmd(cfg, target, file.as_deref()),
        Command::Serve { .. } => serve(cfg),
    }
}

fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    fs::write(path, text + "\n").with_context(|| format!("writing {}", path.display()))
}

fn out_dir(cfg: &RunConfig) -> Result<&Path> {
    fs::create_dir_all(&cfg.out).with_context(|| format!("creating {}", cfg.out.display()))?;
    Ok(&cfg.out)
}

fn manifest(cfg: &RunConfig, command: &str, outputs: &[&str]) -> Result<()> {
    let m = Manifest {
        tool: "shotgame",
        version: env!("CARGO_PKG_VERSION"),
        command: command.to_string(),
        config: cfg,
        versions: Versions::current(),
        outputs: outputs.iter().map(|s| s.to_string()).collect(),
    };
    write_json(&out_dir(cfg)?.join(format!("{command}.manifest.json")), &m)
}

fn load_data(cfg: &RunConfig) -> Result<Dataset> {
    load_any(&cfg.data_dir).with_context(|| format!("loading data from {}", cfg.data_dir.display()))
}

fn control(cfg: &RunConfig) -> ControlParams {
    ControlParams {
        dt: cfg.dt,
        ..ControlParams::default()
    }
}

fn engine(cfg: &RunConfig) -> Result<Engine> {
    load_engine(&cfg.models_dir, control(cfg))
        .with_context(|| format!("loading models from {}", cfg.models_dir.display()))
}

fn pick<T: Clone>(items: &[T], idx: &[usize]) -> Vec<T> {
    idx.iter().map(|&i| items[i].clone()).collect()
}

fn outcome_counts(ds: &Dataset, idx: Option<&[usize]>) -> Value {
    let count = |o: Outcome| match idx {
        Some(idx) => idx.iter().filter(|&&i| ds.events[i].outcome == o).count(),
        None => ds.count(o),
    };
    json!({"off": count(Outcome::Off), "on": count(Outcome::On), "block": count(Outcome::Block)})
}

fn ingest(cfg: &RunConfig) -> Result<()> {
    let ds = load_data(cfg)?;
    let split = split_dataset(&ds.events, cfg.split_seed)?;
    let out = out_dir(cfg)?;
    ds.save(&out.join("dataset.json"))?;
    write_json(&out.join("split.json"), &split)?;
    let matches: std::collections::BTreeSet<u64> = ds.events.iter().map(|e| e.match_id).collect();
    let summary = json!({
        "events": ds.events.len(),
        "frames": ds.frames.len(),
        "matches": matches.len(),
        "outcomes": outcome_counts(&ds, None),
        "train": split.train.len(),
        "test": split.test.len(),
        "test_outcomes": outcome_counts(&ds, Some(&split.test)),
    });
    write_json(&out.join("ingest_summary.json"), &summary)?;
    println!(
        "{} shots from {} matches ({} with 360 frames); off {} on {} block {}; train {} test {}",
        ds.events.len(),
        matches.len(),
        ds.frames.len(),
        ds.count(Outcome::Off),
        ds.count(Outcome::On),
        ds.count(Outcome::Block),
        split.train.len(),
        split.test.len()
    );
    manifest(
        cfg,
        "ingest",
        &["dataset.json", "split.json", "ingest_summary.json"],
    )
}

pub fn block_examples(ds: &Dataset) -> Vec<BlockExample> {
    ds.events
        .iter()
        .map(|e| BlockExample {
            shot: PreparedShot::or_empty(e.location, ds.frame(e).map(|f| f.players.as_slice())),
            blocked: e.outcome == Outcome::Block,
        })
        .collect()
}

fn fit_theory(cfg: &RunConfig) -> Result<()> {
    let ds = load_data(cfg)?;
    let split = split_dataset(&ds.events, cfg.split_seed)?;
    let examples = block_examples(&ds);
    let train = pick(&examples, &split.train);
    let test = pick(&examples, &split.test);
    let settings = FitSettings {
        method: cfg.method,
        tol: cfg.tol,
        max_iter: cfg.max_iter,
        ..FitSettings::default()
    };
    let fit = fit_theory_params(&train, &split.local_folds(), &settings)?;
    let test_cel = block_cel(&test, &fit.params)?;
    let reference = TheoryParams::default();
    let out = out_dir(cfg)?;
    fit.params.save(&out.join(THEORY_FILE))?;
    let report = json!({
        "method": cfg.method,
        "folds": fit.folds,
        "cv_mean": fit.cv_mean,
        "cv_std": fit.cv_std,
        "train_cel": fit.train_cel,
        "test_cel": test_cel,
        "reference_params": {
            "params": reference,
            "train_cel": block_cel(&train, &reference)?,
            "test_cel": block_cel(&test, &reference)?,
        },
    });
    write_json(&out.join("theory_report.json"), &report)?;
    for (k, f) in fit.folds.iter().enumerate() {
        println!(
            "fold {k}: train {:.4} valid {:.4}",
            f.train_cel, f.valid_cel
        );
    }
    println!(
        "{}: cv CEL {:.4} ± {:.4}, test CEL {:.4}",
        cfg.method, fit.cv_mean, fit.cv_std, test_cel
    );
    let p = fit.params;
    println!(
        "c1 {:.4} c2 {:.4} c3 {:.4} c4 {:.4} a {:.4}",
        p.c1, p.c2, p.c3, p.c4, p.a
    );
    manifest(cfg, "fit-theory", &[THEORY_FILE, "theory_report.json"])
}

fn kind_name(kind: FeatureKind) -> String {
    serde_json::to_value(kind)
        .ok()
        .and_then(|v| v.as_str().map(str::to_string))
        .unwrap_or_else(|| format!("{kind:?}"))
}

pub fn model_kind(model: ModelArg, features: Option<FeatureArg>) -> FeatureKind {
    match (model, features) {
        (ModelArg::Off, _) => FeatureKind::Off,
        (ModelArg::Block, None | Some(FeatureArg::Block)) => FeatureKind::Block,
        (ModelArg::Block, Some(FeatureArg::BlockBasic)) => FeatureKind::BlockBasic,
        (ModelArg::Block, Some(FeatureArg::BlockUnprocessed)) => FeatureKind::BlockUnprocessed,
    }
}

fn feature_rows(ds: &Dataset, kind: FeatureKind, theory: &TheoryParams) -> Result<Vec<FeatureRow>> {
    ds.events
        .iter()
        .map(|e| {
            build_row(kind, e, ds.frame(e), theory)
                .map_err(|err| anyhow!("shot {}: {err}", e.event_id))
        })
        .collect()
}

fn train(
    cfg: &RunConfig,
    model: ModelArg,
    features: Option<FeatureArg>,
    theory_path: Option<&Path>,
    baselines: bool,
) -> Result<()> {
    if matches!(model, ModelArg::Off) && features.is_some() {
        bail!("--features applies to the block model only");
    }
    let kind = model_kind(model, features);
    let theory = if kind.needs_theory() {
        let path = theory_path.map_or_else(|| cfg.models_dir.join(THEORY_FILE), Path::to_path_buf);
        TheoryParams::load(&path)?
    } else {
        TheoryParams::default()
    };
    let ds = load_data(cfg)?;
    let split = split_dataset(&ds.events, cfg.split_seed)?;
    let rows = feature_rows(&ds, kind, &theory)?;
    let mut base = TrainConfig {
        seed: cfg.seed,
        ..TrainConfig::reference_for(kind)
    };
    if let Some(e) = cfg.epochs {
        base.epochs = e;
    }
    let grid = match cfg.grid {
        GridChoice::Reference => vec![base.clone()],
        GridChoice::Full => full_grid(&base),
    };
    log::info!(
        "cross-validating {} configuration(s) for {}",
        grid.len(),
        kind_name(kind)
    );
    let result = grid_search_cv(kind, &rows, &split.folds, &grid)?;
    let report = result
        .table
        .iter()
        .find(|(c, _)| *c == result.best)
        .map(|(_, r)| r.clone())
        .ok_or_else(|| anyhow!("grid search returned no report for its best configuration"))?;
    let train_rows = pick(&rows, &split.train);
    let test_rows = pick(&rows, &split.test);
    let model = fit_final(kind, &train_rows, &result.best, Some(&report))?;
    let probs: Vec<f64> = test_rows.iter().map(|r| model.predict_row(r)).collect();
    let labels: Vec<bool> = test_rows.iter().map(|r| r.label).collect();
    let test_cel = bce(&probs, &labels);

    let baseline_json = if baselines {
        let hist = cross_validate_historical(&rows, &split.folds)?;
        let (l1, strength, table) = elastic_net_search(&rows, &split.folds)?;
        let en = table
            .iter()
            .map(|r| r.mean_cel)
            .fold(f64::INFINITY, f64::min);
        println!(
            "historical cv CEL {:.4}; elastic net cv CEL {:.4} (l1 {l1}, strength {strength})",
            hist.mean_cel, en
        );
        json!({
            "historical": hist,
            "elastic_net": {"l1_ratio": l1, "strength": strength, "table": table},
        })
    } else {
        Value::Null
    };

    let name = kind_name(kind);
    let model_file = format!("dnn_{name}.json");
    let report_file = format!("train_{name}_report.json");
    let out = out_dir(cfg)?;
    model.save(&out.join(&model_file))?;
    let grid_table: Vec<Value> = result
        .table
        .iter()
        .map(|(c, r)| json!({"config": c.label(), "mean_weighted_cel": r.mean_weighted, "mean_cel": r.mean_cel, "std_cel": r.std_cel}))
        .collect();
    write_json(
        &out.join(&report_file),
        &json!({
            "kind": kind,
            "best": result.best,
            "cv": report,
            "grid": grid_table,
            "test_cel": test_cel,
            "baselines": baseline_json,
        }),
    )?;
    println!(
        "{name}: {} cv CEL {:.4} ± {:.4} (weighted {:.4}); test CEL {:.4}",
        result.best.label(),
        report.mean_cel,
        report.std_cel,
        report.mean_weighted,
        test_cel
    );
    manifest(cfg, &format!("train-{name}"), &[&model_file, &report_file])
}

fn find_fixture(cfg: &RunConfig, key: &str) -> Result<ScenarioFixture> {
    let as_path = PathBuf::from(key);
    if as_path.is_file() {
        return Ok(load_fixture(&as_path)?);
    }
    load_fixtures(&cfg.fixtures_dir)?
        .into_iter()
        .find(|f| f.id == key)
        .ok_or_else(|| anyhow!("no fixture {key:?} in {}", cfg.fixtures_dir.display()))
}

struct Resolved {
    id: String,
    scene: Scene,
    fixture: Option<ScenarioFixture>,
}

fn resolve_target(cfg: &RunConfig, target: &Target) -> Result<Resolved> {
    if let Some(key) = &target.fixture {
        let f = find_fixture(cfg, key)?;
        return Ok(Resolved {
            id: f.id.clone(),
            scene: f.scene(),
            fixture: Some(f),
        });
    }
    let id = target
        .event
        .as_deref()
        .ok_or_else(|| anyhow!("no target"))?;
    let ds = load_data(cfg)?;
    let event = ds
        .events
        .iter()
        .find(|e| e.event_id == id)
        .ok_or_else(|| anyhow!("no shot event {id:?} in {}", cfg.data_dir.display()))?;
    Ok(Resolved {
        id: id.to_string(),
        scene: Scene::from_event(event, ds.frame(event)),
        fixture: None,
    })
}

fn print_breakdown(resp: &ScenarioResponse, scene: &Scene) {
    println!(
        "{:<10} {:>10} {:>11} {:>13} {:>10}",
        "player", "P(on)", "P(off)", "P(block)", "P(control)"
    );
    let mut rows: Vec<(f64, String)> = resp
        .attackers
        .iter()
        .map(|a| {
            let name = a.label.clone().unwrap_or_else(|| format!("#{}", a.player));
            (
                a.p_on,
                format!(
                    "{:<10} {:>10.4} {:>11.4} {:>13.4} {:>10.4}",
                    name, a.p_on, a.p_off, a.p_block, a.p_control
                ),
            )
        })
        .collect();
    let s = &resp.shooter;
    rows.push((
        s.p_on,
        format!(
            "{:<10} {:>10.4} {:>11.4} {:>13.4} {:>10}",
            "shooter", s.p_on, s.p_off, s.p_block, "-"
        ),
    ));
    // stable: equal p_on keeps attackers ahead of the shooter
    rows.sort_by(|a, b| b.0.total_cmp(&a.0));
    for (_, line) in rows {
        println!("{line}");
    }
    let t = &resp.payoff_table;
    println!("payoff (shooter)   blocking   not blocking");
    println!(
        "shoot              {:.4}     {:.4}",
        t.shoot.blocking, t.shoot.not_blocking
    );
    println!(
        "pass               {:.4}     {:.4}",
        t.pass.blocking, t.pass.not_blocking
    );
    for p in &resp.nash.pure {
        println!("pure equilibrium: {} / {}", p.shooter, p.defender);
    }
    if let Some(m) = &resp.nash.mixed {
        println!(
            "mixed equilibrium: shoot with {:.4}, block with {:.4}, value {:.4}",
            m.p_shoot, m.q_block, m.value
        );
    }
    if resp.no_teammates {
        println!("no off-ball teammates: xOSOT is 0");
    }
    log::debug!("{} players in scene", scene.players.len());
}

fn evaluate(cfg: &RunConfig, target: &Target, remove_closest: bool) -> Result<()> {
    let engine = engine(cfg)?;
    let r = resolve_target(cfg, target)?;
    let resp = evaluate_scene(&engine, &r.scene, remove_closest).map_err(|e| anyhow!("{e:?}"))?;
    let file = format!("evaluation_{}.json", r.id);
    let body = json!({
        "id": r.id,
        "response": resp,
        "reference": r.fixture.as_ref().map(|f| &f.reference),
    });
    write_json(&out_dir(cfg)?.join(&file), &body)?;
    print_breakdown(&resp, &r.scene);
    manifest(cfg, "evaluate", &[&file])
}

fn payoff_json(t: &PayoffTable) -> Value {
    let g = |s, d| t.get(s, d);
    json!({
        "shoot": {"blocking": g(ShooterStrategy::Shoot, DefenderStrategy::Blocking), "not_blocking": g(ShooterStrategy::Shoot, DefenderStrategy::NotBlocking)},
        "pass": {"blocking": g(ShooterStrategy::Pass, DefenderStrategy::Blocking), "not_blocking": g(ShooterStrategy::Pass, DefenderStrategy::NotBlocking)},
    })
}

fn payoff(cfg: &RunConfig) -> Result<()> {
    let engine = engine(cfg)?;
    let ds = load_data(cfg)?;
    let study = payoff_study(&engine, &ds, &ds.events)?;
    write_json(
        &out_dir(cfg)?.join("payoff_study.json"),
        &json!({
            "scenarios": study.scenarios,
            "payoff": study.table.as_ref().map(payoff_json),
            "nash": study.nash,
        }),
    )?;
    println!(
        "{} situations with a defender in the block zone",
        study.scenarios
    );
    if let (Some(t), Some(n)) = (&study.table, &study.nash) {
        println!("               blocking            not blocking");
        for (name, row) in [("shoot", 0), ("pass", 1)] {
            println!(
                "{name:<6} {:>9.4},{:>8.4}   {:>9.4},{:>8.4}",
                t.shooter[row][0], -t.shooter[row][0], t.shooter[row][1], -t.shooter[row][1]
            );
        }
        for p in &n.pure {
            println!("pure equilibrium: {:?} / {:?}", p.shooter, p.defender);
        }
        if let Some(m) = &n.mixed {
            println!(
                "mixed equilibrium: p_shoot {:.4} q_block {:.4} value {:.4}",
                m.p_shoot, m.q_block, m.value
            );
        }
    }
    manifest(cfg, "payoff-study", &["payoff_study.json"])
}

fn chi_square(cfg: &RunConfig, from_data: bool) -> Result<()> {
    let mut results = Vec::new();
    if from_data {
        let ds = load_data(cfg)?;
        for cross in [false, true] {
            let t = shot_sequence_table(&ds.events, cross);
            let r = chi_square_independence(&t)?;
            results.push(json!({"source": if cross { "corpus, pairs across matches" } else { "corpus, within matches" }, "counts": t.counts, "result": r}));
            println!(
                "{}: statistic {:.4}, df {}, p-value {:.4}",
                if cross {
                    "across matches"
                } else {
                    "within matches"
                },
                r.statistic,
                r.df,
                r.p_value
            );
        }
    } else {
        let text = fs::read_to_string(&cfg.contingency)
            .with_context(|| format!("reading {}", cfg.contingency.display()))?;
        let t: ContingencyTable = serde_json::from_str(&text)
            .with_context(|| format!("parsing {}", cfg.contingency.display()))?;
        let r = chi_square_independence(&t)?;
        println!(
            "statistic {:.4}, df {}, p-value {:.4}",
            r.statistic, r.df, r.p_value
        );
        results.push(json!({"source": cfg.contingency, "counts": t.counts, "result": r}));
    }
    write_json(&out_dir(cfg)?.join("chi_square.json"), &results)?;
    manifest(cfg, "analyze-chi-square", &["chi_square.json"])
}

fn correlation(cfg: &RunConfig) -> Result<()> {
    let engine = engine(cfg)?;
    let ds = load_data(cfg)?;
    let records = read_team_records(&cfg.teams_csv)?;
    let scores = score_shots(&engine, &ds, &ds.events)?;
    let study = team_study(&ds.events, &scores, &records);
    write_json(&out_dir(cfg)?.join("team_study.json"), &study)?;
    for c in &study.correlations {
        match c.r {
            Some(r) => println!("{:<9} {:<9} {r:.4}", c.a, c.b),
            None => println!("{:<9} {:<9} n/a", c.a, c.b),
        }
    }
    if !study.missing_external.is_empty() {
        println!(
            "no external figures for: {}",
            study.missing_external.join(", ")
        );
    }
    manifest(cfg, "analyze-correlation", &["team_study.json"])
}

fn confusion(cfg: &RunConfig, which: ModelArg) -> Result<()> {
    let file = match which {
        ModelArg::Off => shotgame_service::OFF_FILE,
        ModelArg::Block => shotgame_service::BLOCK_FILE,
    };
    let model = ClassifierModel::load(&cfg.models_dir.join(file))?;
    let theory = if model.kind.needs_theory() {
        TheoryParams::load(&cfg.models_dir.join(THEORY_FILE))?
    } else {
        TheoryParams::default()
    };
    let ds = load_data(cfg)?;
    let split = split_dataset(&ds.events, cfg.split_seed)?;
    let rows = pick(&feature_rows(&ds, model.kind, &theory)?, &split.test);
    let probs: Vec<f64> = rows.iter().map(|r| model.predict_row(r)).collect();
    let labels: Vec<bool> = rows.iter().map(|r| r.label).collect();
    let c = confusion_matrix(&probs, &labels, cfg.threshold);
    let name = kind_name(model.kind);
    let out_file = format!("confusion_{name}.json");
    write_json(&out_dir(cfg)?.join(&out_file), &c)?;
    println!("{:<10} {:>20} {:>20}", "", "predicted 0", "predicted 1");
    for (y, row) in c.counts.iter().enumerate() {
        println!(
            "actual {y:<3} {:>12.2}% ({:>4}) {:>12.2}% ({:>4})",
            c.percent[y][0], row[0], c.percent[y][1], row[1]
        );
    }
    manifest(cfg, &format!("analyze-confusion-{name}"), &[&out_file])
}

fn plot_cmd(cfg: &RunConfig, target: &Target, file: Option<&Path>) -> Result<()> {
    let engine = engine(cfg)?;
    let r = resolve_target(cfg, target)?;
    let resp = evaluate_scene(&engine, &r.scene, false).map_err(|e| anyhow!("{e:?}"))?;
    let title = r
        .fixture
        .as_ref()
        .map_or_else(|| r.id.clone(), |f| f.description.clone());
    let svg = plot::render(&r.scene, &resp, &title);
    let path = match file {
        Some(p) => p.to_path_buf(),
        None => out_dir(cfg)?.join(format!("{}.svg", r.id)),
    };
    fs::write(&path, svg).with_context(|| format!("writing {}", path.display()))?;
    println!("wrote {}", path.display());
    manifest(cfg, "plot", &[&path.display().to_string()])
}

fn serve(cfg: &RunConfig) -> Result<()> {
    let state = AppState {
        engine: engine(cfg)?,
        fixtures: load_fixtures(&cfg.fixtures_dir)?,
    };
    manifest(cfg, "serve", &[])?;
    let addr = SocketAddr::from(([127, 0, 0, 1], cfg.port));
    let rt = tokio::runtime::Builder::new_multi_thread()
        .enable_all()
        .build()?;
    rt.block_on(shotgame_service::serve(Arc::new(state), addr))?;
    Ok(())
}
