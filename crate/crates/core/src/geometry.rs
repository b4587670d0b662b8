//! Pitch geometry in StatsBomb coordinates (120 x 80 units) and the metric
//! quantities derived from it (105 m x 68 m).
//!
//! Every angle the block model consumes is in degrees and every distance in
//! meters. Trigonometry is done after scaling to meters.

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const PITCH_LENGTH: f64 = 120.0;
pub const PITCH_WIDTH: f64 = 80.0;
pub const METERS_LENGTH: f64 = 105.0;
pub const METERS_WIDTH: f64 = 68.0;

pub const GOAL_CENTER: PitchPoint = PitchPoint { x: 120.0, y: 40.0 };
pub const LEFT_POST: PitchPoint = PitchPoint { x: 120.0, y: 36.0 };
pub const RIGHT_POST: PitchPoint = PitchPoint { x: 120.0, y: 44.0 };
/// Goal-line intersections of the penalty-area side lines.
pub const BOX_LEFT: PitchPoint = PitchPoint { x: 120.0, y: 18.0 };
pub const BOX_RIGHT: PitchPoint = PitchPoint { x: 120.0, y: 62.0 };

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("shooter at ({x}, {y}) lies on the goal mouth; shot angle span is undefined")]
    OnGoalMouth { x: f64, y: f64 },
    #[error("player coincides with the shooter at ({x}, {y})")]
    ZeroDistance { x: f64, y: f64 },
}

/// A location in StatsBomb pitch units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PitchPoint {
    pub x: f64,
    pub y: f64,
}

/// A location in meters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricPoint {
    pub mx: f64,
    pub my: f64,
}

impl PitchPoint {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn to_metric(self) -> MetricPoint {
        MetricPoint {
            mx: self.x * METERS_LENGTH / PITCH_LENGTH,
            my: self.y * METERS_WIDTH / PITCH_WIDTH,
        }
    }

    pub fn in_bounds(self) -> bool {
        (0.0..=PITCH_LENGTH).contains(&self.x) && (0.0..=PITCH_WIDTH).contains(&self.y)
    }

    /// Distance in meters.
    pub fn metric_distance(self, other: PitchPoint) -> f64 {
        let a = self.to_metric();
        let b = other.to_metric();
        (a.mx - b.mx).hypot(a.my - b.my)
    }
}

/// Feasible shot-angle span for a shooter.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AngleSpan {
    /// Degrees between the rays to the two posts.
    pub n: f64,
}

/// Distance in meters from `p` to the middle of the goal line.
pub fn dist2goal(p: PitchPoint) -> f64 {
    let dx = (p.x - GOAL_CENTER.x) * METERS_LENGTH / PITCH_LENGTH;
    let dy = (p.y - GOAL_CENTER.y) * METERS_WIDTH / PITCH_WIDTH;
    (dx * dx + dy * dy).sqrt()
}

/// Absolute angle (radians) between the length axis and the line to the goal
/// center. Returns `pi/2` on the goal line.
pub fn ang2goal(p: PitchPoint) -> f64 {
    let dx = (GOAL_CENTER.x - p.x) * METERS_LENGTH / PITCH_LENGTH;
    let dy = (GOAL_CENTER.y - p.y) * METERS_WIDTH / PITCH_WIDTH;
    if dx == 0.0 {
        return std::f64::consts::FRAC_PI_2;
    }
    (dy / dx).atan().abs()
}

fn cross(o: MetricPoint, a: MetricPoint, b: MetricPoint) -> f64 {
    (a.mx - o.mx) * (b.my - o.my) - (a.my - o.my) * (b.mx - o.mx)
}

/// Whether `q` lies in the closed triangle spanned by the shooter and the two
/// goal-line corners of the penalty area.
pub fn feasible_zone_contains(shooter: PitchPoint, q: PitchPoint) -> bool {
    if shooter.x >= PITCH_LENGTH {
        return false;
    }
    let s = shooter.to_metric();
    let l = BOX_LEFT.to_metric();
    let r = BOX_RIGHT.to_metric();
    let p = q.to_metric();
    let area = cross(s, l, r);
    if area.abs() < 1e-12 {
        return false;
    }
    let eps = 1e-9 * area.abs();
    let d1 = cross(s, l, p) * area.signum();
    let d2 = cross(l, r, p) * area.signum();
    let d3 = cross(r, s, p) * area.signum();
    d1 >= -eps && d2 >= -eps && d3 >= -eps
}

/// Interior angle at the shooter (degrees) between the rays to both posts.
pub fn feasible_angle_span(shooter: PitchPoint) -> Result<AngleSpan, GeometryError> {
    if shooter.x >= PITCH_LENGTH && (LEFT_POST.y..=RIGHT_POST.y).contains(&shooter.y) {
        return Err(GeometryError::OnGoalMouth {
            x: shooter.x,
            y: shooter.y,
        });
    }
    let d1 = shooter.metric_distance(LEFT_POST);
    let d2 = shooter.metric_distance(RIGHT_POST);
    let w = LEFT_POST.metric_distance(RIGHT_POST);
    // law of cosines
    let cos = ((d1 * d1 + d2 * d2 - w * w) / (2.0 * d1 * d2)).clamp(-1.0, 1.0);
    Ok(AngleSpan {
        n: cos.acos().to_degrees(),
    })
}

/// Signed angle (degrees) from the shooter→left-post ray to the shooter→`d`
/// ray, oriented so the right post sits at `+n`, plus the metric distance.
pub fn defender_angle_distance(
    shooter: PitchPoint,
    d: PitchPoint,
) -> Result<(f64, f64), GeometryError> {
    let s = shooter.to_metric();
    let p = d.to_metric();
    let dist = (p.mx - s.mx).hypot(p.my - s.my);
    if dist == 0.0 {
        return Err(GeometryError::ZeroDistance {
            x: shooter.x,
            y: shooter.y,
        });
    }
    let l = LEFT_POST.to_metric();
    let r = RIGHT_POST.to_metric();
    let (lx, ly) = (l.mx - s.mx, l.my - s.my);
    let (rx, ry) = (r.mx - s.mx, r.my - s.my);
    let (px, py) = (p.mx - s.mx, p.my - s.my);
    let orient = (lx * ry - ly * rx).signum();
    let orient = if orient == 0.0 { 1.0 } else { orient };
    let theta = (orient * (lx * py - ly * px)).atan2(lx * px + ly * py);
    Ok((theta.to_degrees(), dist))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    #[test]
    fn dist2goal_examples() {
        assert_eq!(dist2goal(PitchPoint::new(120.0, 40.0)), 0.0);
        assert_abs_diff_eq!(
            dist2goal(PitchPoint::new(0.0, 40.0)),
            105.0,
            epsilon = 1e-12
        );
        assert_abs_diff_eq!(
            dist2goal(PitchPoint::new(90.0, 20.0)),
            31.273_990_791_071_1,
            epsilon = 1e-9
        );
    }

    #[test]
    fn ang2goal_examples() {
        assert_eq!(ang2goal(PitchPoint::new(60.0, 40.0)), 0.0);
        assert_eq!(
            ang2goal(PitchPoint::new(120.0, 0.0)),
            std::f64::consts::FRAC_PI_2
        );
        assert_abs_diff_eq!(
            ang2goal(PitchPoint::new(90.0, 20.0)),
            0.574_699_618_942_19,
            epsilon = 1e-9
        );
    }

    #[test]
    fn zone_examples() {
        let s = PitchPoint::new(100.0, 40.0);
        assert!(feasible_zone_contains(s, PitchPoint::new(110.0, 40.0)));
        assert!(!feasible_zone_contains(s, PitchPoint::new(90.0, 40.0)));
        // The zone edge from (108, 40) to (120, 18) passes x = 119 at y = 19.83,
        // so (119, 19) is just outside and (119, 20) just inside.
        assert!(!feasible_zone_contains(
            PitchPoint::new(108.0, 40.0),
            PitchPoint::new(119.0, 19.0)
        ));
        assert!(feasible_zone_contains(
            PitchPoint::new(108.0, 40.0),
            PitchPoint::new(119.0, 20.0)
        ));
        // degenerate: shooter on the goal line
        assert!(!feasible_zone_contains(
            PitchPoint::new(120.0, 30.0),
            PitchPoint::new(119.0, 30.0)
        ));
    }

    #[test]
    fn span_examples() {
        let n = feasible_angle_span(PitchPoint::new(108.0, 40.0)).unwrap().n;
        assert_abs_diff_eq!(n, 35.884_894_178_317, epsilon = 1e-8);
        let n = feasible_angle_span(PitchPoint::new(60.0, 40.0)).unwrap().n;
        assert_abs_diff_eq!(
            n,
            2.0 * (3.4_f64 / 52.5).atan().to_degrees(),
            epsilon = 1e-10
        );
        assert!(feasible_angle_span(PitchPoint::new(120.0, 40.0)).is_err());
        assert!(feasible_angle_span(PitchPoint::new(120.0, 36.0)).is_err());
    }

    #[test]
    fn defender_angle_examples() {
        let s = PitchPoint::new(108.0, 40.0);
        let n = feasible_angle_span(s).unwrap().n;
        let (t, l) = defender_angle_distance(s, PitchPoint::new(114.0, 40.0)).unwrap();
        assert_abs_diff_eq!(t, n / 2.0, epsilon = 1e-10);
        assert_abs_diff_eq!(l, 5.25, epsilon = 1e-12);
        // on the ray to the left post
        let (t, _) = defender_angle_distance(s, PitchPoint::new(114.0, 38.0)).unwrap();
        assert_abs_diff_eq!(t, 0.0, epsilon = 1e-10);
        let (t, _) = defender_angle_distance(s, PitchPoint::new(114.0, 42.0)).unwrap();
        assert_abs_diff_eq!(t, n, epsilon = 1e-10);
        // off to the left: negative angle
        let (t, _) = defender_angle_distance(s, PitchPoint::new(114.0, 30.0)).unwrap();
        assert!(t < 0.0);
        assert!(defender_angle_distance(s, s).is_err());
    }

    fn barycentric_inside(s: (f64, f64), a: (f64, f64), b: (f64, f64), p: (f64, f64)) -> bool {
        let det = (a.1 - b.1) * (s.0 - b.0) + (b.0 - a.0) * (s.1 - b.1);
        let l1 = ((a.1 - b.1) * (p.0 - b.0) + (b.0 - a.0) * (p.1 - b.1)) / det;
        let l2 = ((b.1 - s.1) * (p.0 - b.0) + (s.0 - b.0) * (p.1 - b.1)) / det;
        let l3 = 1.0 - l1 - l2;
        l1 >= 0.0 && l2 >= 0.0 && l3 >= 0.0
    }

    #[test]
    fn zone_matches_barycentric_oracle() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let mut checked = 0;
        for _ in 0..10_000 {
            let s = PitchPoint::new(rng.random_range(60.0..119.5), rng.random_range(0.0..80.0));
            let q = PitchPoint::new(rng.random_range(60.0..120.0), rng.random_range(0.0..80.0));
            // raw pitch units: the triangle maps affinely, so membership is unit-agnostic
            let want = barycentric_inside((s.x, s.y), (120.0, 18.0), (120.0, 62.0), (q.x, q.y));
            assert_eq!(feasible_zone_contains(s, q), want, "shooter {s:?} q {q:?}");
            checked += 1;
        }
        assert_eq!(checked, 10_000);
    }

    #[test]
    fn dist2goal_matches_meter_space() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let mut worst: f64 = 0.0;
        for _ in 0..1000 {
            let p = PitchPoint::new(rng.random_range(0.0..120.0), rng.random_range(0.0..80.0));
            let m = p.to_metric();
            let want = (105.0 - m.mx).hypot(34.0 - m.my);
            worst = worst.max((dist2goal(p) - want).abs());
        }
        assert!(worst < 1e-9, "max diff {worst}");
    }

    proptest! {
        #[test]
        fn ang2goal_mirror(x in 0.0f64..119.9, dy in 0.0f64..40.0) {
            let a = ang2goal(PitchPoint::new(x, 40.0 + dy));
            let b = ang2goal(PitchPoint::new(x, 40.0 - dy));
            prop_assert!((a - b).abs() < 1e-12);
        }

        #[test]
        fn span_mirror(x in 0.0f64..119.9, dy in 0.0f64..40.0) {
            let a = feasible_angle_span(PitchPoint::new(x, 40.0 + dy)).unwrap().n;
            let b = feasible_angle_span(PitchPoint::new(x, 40.0 - dy)).unwrap().n;
            prop_assert!((a - b).abs() < 1e-9);
            prop_assert!(a > 0.0 && a < 180.0);
        }

        #[test]
        fn span_decreasing_along_axis(x in 1.0f64..119.0, step in 0.01f64..1.0) {
            let near = feasible_angle_span(PitchPoint::new(x, 40.0)).unwrap().n;
            let far = feasible_angle_span(PitchPoint::new(x - step.min(x), 40.0)).unwrap().n;
            prop_assert!(far < near);
        }
    }
}
