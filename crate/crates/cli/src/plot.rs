//! Static SVG rendering of an evaluated scene: attacking half of the pitch,
//! players, the feasible block zone and the per-angle block curve.

use std::fmt::Write;

use shotgame_core::geometry::{BOX_LEFT, BOX_RIGHT, LEFT_POST, PITCH_WIDTH, RIGHT_POST};
use shotgame_core::metrics::Scene;
use shotgame_service::ScenarioResponse;

const SCALE: f64 = 10.0;
/// Only the attacking half is drawn.
const X0: f64 = 60.0;
const PAD: f64 = 20.0;
const CURVE_H: f64 = 160.0;

fn px(x: f64) -> f64 {
    PAD + (x - X0) * SCALE
}

fn py(y: f64) -> f64 {
    PAD + y * SCALE
}

pub fn render(scene: &Scene, resp: &ScenarioResponse, title: &str) -> String {
    let w = 2.0 * PAD + 60.0 * SCALE;
    let pitch_h = 2.0 * PAD + PITCH_WIDTH * SCALE;
    let h = pitch_h + CURVE_H + PAD;
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w:.0}" height="{h:.0}" viewBox="0 0 {w:.0} {h:.0}" font-family="sans-serif" font-size="11">"#
    );
    let _ = writeln!(s, r#"<title>{}</title>"#, escape(title));
    let _ = writeln!(
        s,
        r##"<rect x="0" y="0" width="{w:.0}" height="{h:.0}" fill="#ffffff"/>"##
    );
    // pitch
    let _ = writeln!(
        s,
        r##"<g id="pitch" stroke="#4a7f4a" fill="none" stroke-width="1.5"><rect x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="#eaf4ea"/><rect x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}"/><rect x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}"/></g>"##,
        px(X0),
        py(0.0),
        60.0 * SCALE,
        PITCH_WIDTH * SCALE,
        px(102.0),
        py(18.0),
        18.0 * SCALE,
        44.0 * SCALE,
        px(114.0),
        py(30.0),
        6.0 * SCALE,
        20.0 * SCALE,
    );
    let _ = writeln!(
        s,
        r##"<line id="goal" x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="#222222" stroke-width="4"/>"##,
        px(LEFT_POST.x),
        py(LEFT_POST.y),
        px(RIGHT_POST.x),
        py(RIGHT_POST.y)
    );

    let shooter = scene.shooter.location;
    // feasible block zone and shot-angle span
    let _ = writeln!(
        s,
        r##"<polygon id="zone" points="{:.2},{:.2} {:.2},{:.2} {:.2},{:.2}" fill="#3b6fd8" fill-opacity="0.08" stroke="#3b6fd8" stroke-dasharray="4 3"/>"##,
        px(shooter.x),
        py(shooter.y),
        px(BOX_LEFT.x),
        py(BOX_LEFT.y),
        px(BOX_RIGHT.x),
        py(BOX_RIGHT.y)
    );
    let _ = writeln!(
        s,
        r##"<polygon id="span" points="{:.2},{:.2} {:.2},{:.2} {:.2},{:.2}" fill="#d83b3b" fill-opacity="0.15" stroke="none"/>"##,
        px(shooter.x),
        py(shooter.y),
        px(LEFT_POST.x),
        py(LEFT_POST.y),
        px(RIGHT_POST.x),
        py(RIGHT_POST.y)
    );

    // players
    let p_on_of = |i: usize| {
        resp.attackers
            .iter()
            .find(|a| a.player == i)
            .map(|a| a.p_on)
    };
    let _ = writeln!(s, r#"<g id="players">"#);
    for (i, p) in scene.players.iter().enumerate() {
        let (class, fill) = match (p.teammate, p.keeper) {
            (_, true) => ("keeper", "#f2c230"),
            (true, false) => ("teammate", "#2f5fd0"),
            (false, false) => ("defender", "#d03030"),
        };
        let _ = writeln!(
            s,
            r##"<circle class="{class}" data-index="{i}" cx="{:.2}" cy="{:.2}" r="6" fill="{fill}" stroke="#111111"/>"##,
            px(p.location.x),
            py(p.location.y)
        );
        let mut label = p.label.clone().unwrap_or_default();
        if let Some(v) = p_on_of(i) {
            if !label.is_empty() {
                label.push(' ');
            }
            let _ = write!(label, "{v:.2}");
        }
        if !label.is_empty() {
            let _ = writeln!(
                s,
                r#"<text x="{:.2}" y="{:.2}">{}</text>"#,
                px(p.location.x) + 8.0,
                py(p.location.y) - 8.0,
                escape(&label)
            );
        }
    }
    let _ = writeln!(
        s,
        r##"<circle class="shooter" cx="{:.2}" cy="{:.2}" r="8" fill="#2f5fd0" stroke="#000000" stroke-width="2.5"/>"##,
        px(shooter.x),
        py(shooter.y)
    );
    let _ = writeln!(
        s,
        r#"<text x="{:.2}" y="{:.2}" font-weight="bold">shooter {:.2}</text>"#,
        px(shooter.x) + 10.0,
        py(shooter.y) + 16.0,
        resp.shooter.p_on
    );
    let _ = writeln!(s, "</g>");

    // block probability over the feasible span
    let top = pitch_h;
    let left = PAD + 40.0;
    let width = 60.0 * SCALE - 40.0;
    let height = CURVE_H - 30.0;
    let _ = writeln!(
        s,
        r##"<g id="curve"><rect x="{left:.2}" y="{top:.2}" width="{width:.2}" height="{height:.2}" fill="none" stroke="#888888"/>"##
    );
    let _ = writeln!(
        s,
        r#"<text x="{:.2}" y="{:.2}">P(block | angle)</text>"#,
        PAD,
        top - 4.0
    );
    if let Some(&[n, _]) = resp.theory_block_curve.last() {
        if n > 0.0 {
            let pts: Vec<String> = resp
                .theory_block_curve
                .iter()
                .map(|&[t, p]| {
                    format!(
                        "{:.2},{:.2}",
                        left + t / n * width,
                        top + height * (1.0 - p)
                    )
                })
                .collect();
            let _ = writeln!(
                s,
                r##"<polyline points="{}" fill="none" stroke="#d83b3b" stroke-width="2"/>"##,
                pts.join(" ")
            );
            let _ = writeln!(
                s,
                r#"<text x="{left:.2}" y="{:.2}">0</text><text x="{:.2}" y="{:.2}" text-anchor="end">{n:.2} deg</text>"#,
                top + height + 14.0,
                left + width,
                top + height + 14.0
            );
        }
    }
    let _ = writeln!(s, "</g>");
    s.push_str("</svg>\n");
    s
}

fn escape(t: &str) -> String {
    t.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}
