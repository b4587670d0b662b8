use super::line_search::line_minimize;
use super::{check_start, Counted, ObjectiveSpec, OptimError, OptimResult, TracePoint};

const LINE_TOL: f64 = 1e-8;

/// Powell's conjugate-direction method. Each sweep line-minimizes along every
/// stored direction, then replaces the direction of largest decrease with the
/// sweep's net displacement when the extrapolation test allows it. Stops when
/// a sweep's relative improvement falls below `tol`.
pub fn minimize_powell(
    obj: &ObjectiveSpec<'_>,
    x0: &[f64],
    tol: f64,
    max_iter: usize,
) -> Result<OptimResult, OptimError> {
    check_start(obj, x0)?;
    let f = Counted::new(obj);
    let n = x0.len();
    let mut dirs: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            let mut d = vec![0.0; n];
            d[i] = 1.0;
            d
        })
        .collect();
    let mut x = x0.to_vec();
    let mut fx = f.eval(&x)?;
    let mut trace = vec![TracePoint {
        iteration: 0,
        best: fx,
    }];
    let mut converged = false;
    let mut iterations = 0;

    while iterations < max_iter {
        iterations += 1;
        let x_start = x.clone();
        let f_start = fx;
        let mut biggest = 0.0;
        let mut ibig = 0;
        for (i, dir) in dirs.iter().enumerate() {
            let before = fx;
            let step = line_minimize(&f, &x, fx, dir, LINE_TOL)?;
            x = step.x;
            fx = step.f;
            if before - fx > biggest {
                biggest = before - fx;
                ibig = i;
            }
        }
        trace.push(TracePoint {
            iteration: iterations,
            best: fx,
        });
        if 2.0 * (f_start - fx) <= tol * (f_start.abs() + fx.abs()) + 1e-300 {
            converged = true;
            break;
        }
        let new_dir: Vec<f64> = x.iter().zip(&x_start).map(|(a, b)| a - b).collect();
        let extrapolated: Vec<f64> = x.iter().zip(&new_dir).map(|(a, d)| a + d).collect();
        let fe = f.eval(&extrapolated)?;
        if fe < f_start {
            let t = 2.0 * (f_start - 2.0 * fx + fe) * (f_start - fx - biggest).powi(2)
                - biggest * (f_start - fe).powi(2);
            if t < 0.0 {
                let step = line_minimize(&f, &x, fx, &new_dir, LINE_TOL)?;
                x = step.x;
                fx = step.f;
                if let Some(last) = trace.last_mut() {
                    last.best = fx;
                }
                dirs[ibig] = dirs[n - 1].clone();
                dirs[n - 1] = new_dir;
            }
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
