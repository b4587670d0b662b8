use super::{check_start, Counted, ObjectiveSpec, OptimError, OptimResult, TracePoint};

/// Relative central-difference step.
pub const DEFAULT_FD_STEP: f64 = 1e-6;

const ARMIJO: f64 = 1e-4;
const MAX_BACKTRACK: usize = 60;

/// Central-difference gradient with per-coordinate step
/// `rel_step * max(|x_i|, 1)`. Falls back to a one-sided difference when one
/// neighbour is rejected by the bounds.
pub fn central_gradient(
    obj: &ObjectiveSpec<'_>,
    x: &[f64],
    rel_step: f64,
) -> Result<Vec<f64>, OptimError> {
    let f = Counted::new(obj);
    let fx = f.eval(x)?;
    gradient(&f, x, fx, rel_step)
}

fn gradient(
    f: &Counted<'_, '_>,
    x: &[f64],
    fx: f64,
    rel_step: f64,
) -> Result<Vec<f64>, OptimError> {
    let mut g = vec![0.0; x.len()];
    let mut probe = x.to_vec();
    for i in 0..x.len() {
        let h = rel_step * x[i].abs().max(1.0);
        probe[i] = x[i] + h;
        let fp = f.eval(&probe)?;
        probe[i] = x[i] - h;
        let fm = f.eval(&probe)?;
        probe[i] = x[i];
        g[i] = match (fp.is_finite(), fm.is_finite()) {
            (true, true) => (fp - fm) / (2.0 * h),
            (true, false) => (fp - fx) / h,
            (false, true) => (fx - fm) / h,
            (false, false) => f64::NAN,
        };
        if !g[i].is_finite() {
            return Err(OptimError::NaNGradient { point: x.to_vec() });
        }
    }
    Ok(g)
}

/// Zero the components of `d` that would immediately leave the box from a
/// coordinate sitting on (or within `rel_step` of) one of its bounds.
fn project(obj: &ObjectiveSpec<'_>, x: &[f64], d: &mut [f64], rel_step: f64) {
    let Some(bounds) = &obj.bounds else { return };
    for ((di, &xi), &(lo, hi)) in d.iter_mut().zip(x).zip(bounds) {
        let slack = rel_step * xi.abs().max(1.0);
        if (*di > 0.0 && xi >= hi - slack) || (*di < 0.0 && xi <= lo + slack) {
            *di = 0.0;
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn step(x: &[f64], d: &[f64], t: f64) -> Vec<f64> {
    x.iter().zip(d).map(|(a, b)| a + t * b).collect()
}

/// Polak-Ribiere (PR+) nonlinear conjugate gradient on central-difference
/// gradients. Each line search tries a quadratic-interpolated step (exact on
/// quadratics) and backtracks under the Armijo condition otherwise.
pub fn minimize_fd_cg(
    obj: &ObjectiveSpec<'_>,
    x0: &[f64],
    tol: f64,
    max_iter: usize,
    fd_step: f64,
) -> Result<OptimResult, OptimError> {
    check_start(obj, x0)?;
    let f = Counted::new(obj);
    let mut x = x0.to_vec();
    let mut fx = f.eval(&x)?;
    let mut g = gradient(&f, &x, fx, fd_step)?;
    let mut d: Vec<f64> = g.iter().map(|v| -v).collect();
    project(obj, &x, &mut d, fd_step);
    let mut trace = vec![TracePoint {
        iteration: 0,
        best: fx,
    }];
    let mut converged = false;
    let mut iterations = 0;
    let mut alpha_prev = 1.0 / g.iter().map(|v| v.abs()).fold(0.0, f64::max).max(1e-12);
    let mut slope_prev = f64::NAN;

    while iterations < max_iter {
        let mut steepest: Vec<f64> = g.iter().map(|v| -v).collect();
        project(obj, &x, &mut steepest, fd_step);
        if steepest.iter().all(|v| v.abs() <= tol) {
            converged = true;
            break;
        }
        iterations += 1;
        project(obj, &x, &mut d, fd_step);
        let mut slope = dot(&g, &d);
        if slope >= 0.0 {
            slope = -dot(&steepest, &steepest);
            d = steepest;
        }
        let alpha0 = if slope_prev.is_finite() {
            (alpha_prev * slope_prev / slope).clamp(1e-12, 1e12)
        } else {
            alpha_prev
        };

        let Some((alpha, x_new, f_new)) = line_search(&f, &x, fx, &d, slope, alpha0)? else {
            // no decrease along a descent direction: stationary within FD noise
            let mut pg: Vec<f64> = g.iter().map(|v| -v).collect();
            project(obj, &x, &mut pg, fd_step);
            converged = pg.iter().all(|v| v.abs() <= tol.sqrt());
            break;
        };
        let g_new = gradient(&f, &x_new, f_new, fd_step)?;
        let gg = dot(&g, &g);
        let beta = if gg > 0.0 {
            (dot(&g_new, &g_new) - dot(&g_new, &g)) / gg
        } else {
            0.0
        }
        .max(0.0);
        d = g_new
            .iter()
            .zip(&d)
            .map(|(gn, di)| -gn + beta * di)
            .collect();

        let improvement = fx - f_new;
        x = x_new;
        fx = f_new;
        g = g_new;
        alpha_prev = alpha;
        slope_prev = slope;
        trace.push(TracePoint {
            iteration: iterations,
            best: fx,
        });
        let mut pg: Vec<f64> = g.iter().map(|v| -v).collect();
        project(obj, &x, &mut pg, fd_step);
        if improvement <= f64::EPSILON * fx.abs() && pg.iter().all(|v| v.abs() <= tol.sqrt()) {
            converged = true;
            break;
        }
    }

    Ok(OptimResult {
        x_star: x,
        f_star: fx,
        n_evals: f.evals(),
        iterations,
        converged,
        trace,
    })
}

fn line_search(
    f: &Counted<'_, '_>,
    x: &[f64],
    fx: f64,
    d: &[f64],
    slope: f64,
    alpha0: f64,
) -> Result<Option<(f64, Vec<f64>, f64)>, OptimError> {
    let armijo = |t: f64, ft: f64| ft.is_finite() && ft <= fx + ARMIJO * t * slope;
    let x0 = step(x, d, alpha0);
    let f0 = f.eval(&x0)?;
    let mut best: Option<(f64, Vec<f64>, f64)> = None;
    if armijo(alpha0, f0) {
        best = Some((alpha0, x0, f0));
    }
    if f0.is_finite() {
        let curvature = f0 - fx - slope * alpha0;
        if curvature > 0.0 {
            let t = -slope * alpha0 * alpha0 / (2.0 * curvature);
            if t.is_finite() && t > 0.0 {
                let xt = step(x, d, t);
                let ft = f.eval(&xt)?;
                if armijo(t, ft) && best.as_ref().is_none_or(|b| ft <= b.2) {
                    best = Some((t, xt, ft));
                }
            }
        }
    }
    if best.is_some() {
        return Ok(best);
    }
    let mut t = alpha0;
    let mut ft = f0;
    for _ in 0..MAX_BACKTRACK {
        t = if ft.is_finite() {
            let curvature = ft - fx - slope * t;
            let q = -slope * t * t / (2.0 * curvature);
            if curvature > 0.0 && q.is_finite() {
                q.clamp(0.1 * t, 0.5 * t)
            } else {
                0.5 * t
            }
        } else {
            0.5 * t
        };
        let xt = step(x, d, t);
        ft = f.eval(&xt)?;
        if armijo(t, ft) {
            return Ok(Some((t, xt, ft)));
        }
    }
    Ok(None)
}
