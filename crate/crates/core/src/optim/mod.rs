//! Minimizers for small, noisy-free objectives: Powell's conjugate directions,
//! Nelder-Mead, and nonlinear conjugate gradient on finite-difference
//! gradients.
//!
//! Bounds are enforced by rejection: points outside the box evaluate to
//! `+inf`, so every method stays bound-agnostic.

mod cg;
mod line_search;
mod nelder_mead;
mod powell;

use std::cell::Cell;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use cg::{central_gradient, minimize_fd_cg, DEFAULT_FD_STEP};
pub use nelder_mead::minimize_nelder_mead;
pub use powell::minimize_powell;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OptimError {
    #[error("objective returned NaN at {point:?}")]
    NaN { point: Vec<f64> },
    #[error("finite-difference gradient is not finite at {point:?}")]
    NaNGradient { point: Vec<f64> },
    #[error("starting point has dimension {got}, objective expects {expected}")]
    Dimension { expected: usize, got: usize },
    #[error("starting point {0:?} is not finite")]
    NonFiniteStart(Vec<f64>),
}

/// An objective over `R^dimension` with optional box bounds.
pub struct ObjectiveSpec<'a> {
    pub dimension: usize,
    pub eval: Box<dyn Fn(&[f64]) -> f64 + Sync + 'a>,
    pub bounds: Option<Vec<(f64, f64)>>,
}

impl<'a> ObjectiveSpec<'a> {
    pub fn new(dimension: usize, eval: impl Fn(&[f64]) -> f64 + Sync + 'a) -> Self {
        Self {
            dimension,
            eval: Box::new(eval),
            bounds: None,
        }
    }

    pub fn with_bounds(mut self, bounds: Vec<(f64, f64)>) -> Self {
        assert_eq!(
            bounds.len(),
            self.dimension,
            "one (lo, hi) pair per coordinate"
        );
        self.bounds = Some(bounds);
        self
    }

    /// Objective value with the bound sentinel applied.
    pub fn value(&self, x: &[f64]) -> f64 {
        if let Some(bounds) = &self.bounds {
            if x.iter()
                .zip(bounds)
                .any(|(v, &(lo, hi))| *v < lo || *v > hi)
            {
                return f64::INFINITY;
            }
        }
        (self.eval)(x)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TracePoint {
    pub iteration: usize,
    pub best: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimResult {
    pub x_star: Vec<f64>,
    pub f_star: f64,
    pub n_evals: usize,
    pub iterations: usize,
    pub converged: bool,
    pub trace: Vec<TracePoint>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Powell,
    NelderMead,
    FdCg,
}

impl Method {
    pub const ALL: [Method; 3] = [Method::Powell, Method::NelderMead, Method::FdCg];

    pub fn minimize(
        self,
        obj: &ObjectiveSpec<'_>,
        x0: &[f64],
        tol: f64,
        max_iter: usize,
    ) -> Result<OptimResult, OptimError> {
        match self {
            Method::Powell => minimize_powell(obj, x0, tol, max_iter),
            Method::NelderMead => minimize_nelder_mead(obj, x0, tol, max_iter),
            Method::FdCg => minimize_fd_cg(obj, x0, tol, max_iter, DEFAULT_FD_STEP),
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Powell => "powell",
            Method::NelderMead => "nelder-mead",
            Method::FdCg => "fd-cg",
        })
    }
}

impl FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "powell" => Ok(Method::Powell),
            "nelder-mead" | "nelder_mead" => Ok(Method::NelderMead),
            "fd-cg" | "fd_cg" | "cg" => Ok(Method::FdCg),
            other => Err(format!(
                "unknown method {other:?} (expected powell, nelder-mead or fd-cg)"
            )),
        }
    }
}

/// Counts evaluations and turns NaN into an error.
pub(crate) struct Counted<'o, 'a> {
    obj: &'o ObjectiveSpec<'a>,
    evals: Cell<usize>,
}

impl<'o, 'a> Counted<'o, 'a> {
    pub(crate) fn new(obj: &'o ObjectiveSpec<'a>) -> Self {
        Self {
            obj,
            evals: Cell::new(0),
        }
    }

    pub(crate) fn eval(&self, x: &[f64]) -> Result<f64, OptimError> {
        self.evals.set(self.evals.get() + 1);
        let v = self.obj.value(x);
        if v.is_nan() {
            return Err(OptimError::NaN { point: x.to_vec() });
        }
        Ok(v)
    }

    pub(crate) fn evals(&self) -> usize {
        self.evals.get()
    }
}

pub(crate) fn check_start(obj: &ObjectiveSpec<'_>, x0: &[f64]) -> Result<(), OptimError> {
    if x0.len() != obj.dimension {
        return Err(OptimError::Dimension {
            expected: obj.dimension,
            got: x0.len(),
        });
    }
    if x0.iter().any(|v| !v.is_finite()) {
        return Err(OptimError::NonFiniteStart(x0.to_vec()));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn bowl() -> ObjectiveSpec<'static> {
        ObjectiveSpec::new(2, |x| (x[0] - 3.0).powi(2) + (x[1] + 1.0).powi(2))
    }

    fn rosenbrock() -> ObjectiveSpec<'static> {
        ObjectiveSpec::new(2, |x| {
            100.0 * (x[1] - x[0] * x[0]).powi(2) + (1.0 - x[0]).powi(2)
        })
    }

    fn assert_monotone(r: &OptimResult) {
        for w in r.trace.windows(2) {
            assert!(w[1].best <= w[0].best, "trace increased: {:?}", w);
        }
    }

    #[test]
    fn powell_examples() {
        let r = minimize_powell(&bowl(), &[0.0, 0.0], 1e-12, 1000).unwrap();
        assert!(
            (r.x_star[0] - 3.0).abs() < 1e-6 && (r.x_star[1] + 1.0).abs() < 1e-6,
            "{r:?}"
        );
        assert!(r.converged);
        assert_monotone(&r);

        let r = minimize_powell(&rosenbrock(), &[-1.2, 1.0], 1e-12, 10_000).unwrap();
        assert!(
            (r.x_star[0] - 1.0).abs() < 1e-3 && (r.x_star[1] - 1.0).abs() < 1e-3,
            "{r:?}"
        );
        assert_monotone(&r);

        let flat = ObjectiveSpec::new(3, |_| 4.0);
        let r = minimize_powell(&flat, &[1.0, -2.0, 0.5], 1e-10, 100).unwrap();
        assert!(r.converged);
        assert_eq!(r.iterations, 1);
        assert_eq!(r.x_star, vec![1.0, -2.0, 0.5]);
    }

    #[test]
    fn nelder_mead_examples() {
        let r = minimize_nelder_mead(&bowl(), &[0.0, 0.0], 1e-10, 10_000).unwrap();
        assert!(
            (r.x_star[0] - 3.0).abs() < 1e-5 && (r.x_star[1] + 1.0).abs() < 1e-5,
            "{r:?}"
        );
        assert_monotone(&r);

        let r = minimize_nelder_mead(&rosenbrock(), &[-1.2, 1.0], 1e-10, 10_000).unwrap();
        assert!(
            (r.x_star[0] - 1.0).abs() < 1e-3 && (r.x_star[1] - 1.0).abs() < 1e-3,
            "{r:?}"
        );
        assert_monotone(&r);

        let abs = ObjectiveSpec::new(1, |x| x[0].abs());
        let r = minimize_nelder_mead(&abs, &[5.0], 1e-10, 10_000).unwrap();
        assert!(r.x_star[0].abs() < 1e-4, "{r:?}");
    }

    #[test]
    fn nelder_mead_first_iterations_on_abs() {
        // Simplex {5, 5.25}: reflect 5.25 through 5 -> 4.75 (f = 4.75 < 5),
        // expand -> 4.5 (accepted). Next: simplex {4.5, 5}, reflect -> 4.0,
        // expand -> 3.5. Next: {3.5, 4.5} -> reflect 2.5, expand 1.5.
        let abs = ObjectiveSpec::new(1, |x| x[0].abs());
        let best: Vec<f64> = (1..=3)
            .map(|it| minimize_nelder_mead(&abs, &[5.0], 0.0, it).unwrap().f_star)
            .collect();
        assert_eq!(best, vec![4.5, 3.5, 1.5]);
    }

    #[test]
    fn fd_cg_examples() {
        let r = minimize_fd_cg(&bowl(), &[0.0, 0.0], 1e-9, 1000, DEFAULT_FD_STEP).unwrap();
        assert!(
            (r.x_star[0] - 3.0).abs() < 1e-6 && (r.x_star[1] + 1.0).abs() < 1e-6,
            "{r:?}"
        );
        // one trace entry per line search after the initial point
        assert!(
            r.trace.len() - 1 <= 3,
            "{} line searches",
            r.trace.len() - 1
        );
        assert_monotone(&r);

        let r = minimize_fd_cg(&rosenbrock(), &[-1.2, 1.0], 1e-8, 20_000, DEFAULT_FD_STEP).unwrap();
        assert!(
            (r.x_star[0] - 1.0).abs() < 1e-2 && (r.x_star[1] - 1.0).abs() < 1e-2,
            "{r:?}"
        );
        assert_monotone(&r);
    }

    #[test]
    fn fd_gradient_matches_analytic_on_quadratic() {
        let f = |x: &[f64]| 3.0 * x[0] * x[0] + 2.0 * x[0] * x[1] + 0.5 * x[1] * x[1] - x[2] + 7.0;
        let obj = ObjectiveSpec::new(3, f);
        for p in [[1.0, 2.0, -3.0], [-0.3, 10.0, 4.0], [100.0, -50.0, 0.0]] {
            let g = central_gradient(&obj, &p, DEFAULT_FD_STEP).unwrap();
            let want = [6.0 * p[0] + 2.0 * p[1], 2.0 * p[0] + p[1], -1.0];
            for (a, b) in g.iter().zip(want) {
                assert!((a - b).abs() / b.abs().max(1.0) < 1e-6, "{a} vs {b}");
            }
        }
    }

    #[test]
    fn nan_objective_is_an_error() {
        let obj = ObjectiveSpec::new(1, |x| {
            if x[0] > 0.5 {
                f64::NAN
            } else {
                (x[0] - 1.0).powi(2)
            }
        });
        for m in Method::ALL {
            match m.minimize(&obj, &[0.0], 1e-10, 100) {
                Err(OptimError::NaN { .. }) | Err(OptimError::NaNGradient { .. }) => {}
                other => panic!("{m}: {other:?}"),
            }
        }
    }

    #[test]
    fn bounds_are_respected() {
        let obj = ObjectiveSpec::new(2, |x| (x[0] - 3.0).powi(2) + (x[1] + 1.0).powi(2))
            .with_bounds(vec![(0.0, 2.0), (-5.0, 5.0)]);
        for m in Method::ALL {
            let r = m.minimize(&obj, &[1.0, 0.0], 1e-10, 2000).unwrap();
            assert!(r.x_star[0] <= 2.0 && r.x_star[0] > 1.9, "{m}: {r:?}");
            assert!(r.f_star.is_finite());
        }
    }

    #[test]
    fn deterministic() {
        for m in Method::ALL {
            let a = m.minimize(&rosenbrock(), &[-1.2, 1.0], 1e-10, 500).unwrap();
            let b = m.minimize(&rosenbrock(), &[-1.2, 1.0], 1e-10, 500).unwrap();
            assert_eq!(a, b);
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]
        #[test]
        fn translation_equivariance(c0 in -20.0f64..20.0, c1 in -20.0f64..20.0) {
            let shifted = ObjectiveSpec::new(2, move |x| {
                let (a, b) = (x[0] - c0, x[1] - c1);
                (a - 3.0).powi(2) + 2.0 * (b + 1.0).powi(2) + 0.5 * (a - 3.0) * (b + 1.0)
            });
            for m in Method::ALL {
                let r = m.minimize(&shifted, &[c0, c1], 1e-12, 5000).unwrap();
                prop_assert!((r.x_star[0] - (3.0 + c0)).abs() < 1e-4, "{} {:?}", m, r.x_star);
                prop_assert!((r.x_star[1] - (-1.0 + c1)).abs() < 1e-4, "{} {:?}", m, r.x_star);
            }
        }
    }
}
