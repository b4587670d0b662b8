use super::{check_start, Counted, ObjectiveSpec, OptimError, OptimResult, TracePoint};

const REFLECT: f64 = 1.0;
const EXPAND: f64 = 2.0;
const CONTRACT: f64 = 0.5;
const SHRINK: f64 = 0.5;

/// Nelder-Mead simplex search. The initial simplex perturbs each coordinate of
/// `x0` by `max(0.05 |x0_i|, 0.00025)`. Converges when both the simplex
/// diameter and the spread of objective values are within `tol`.
pub fn minimize_nelder_mead(
    obj: &ObjectiveSpec<'_>,
    x0: &[f64],
    tol: f64,
    max_iter: usize,
) -> Result<OptimResult, OptimError> {
    check_start(obj, x0)?;
    let f = Counted::new(obj);
    let n = x0.len();
    let mut sim: Vec<Vec<f64>> = vec![x0.to_vec()];
    for i in 0..n {
        let mut y = x0.to_vec();
        y[i] += (0.05 * x0[i].abs()).max(0.00025);
        sim.push(y);
    }
    let mut fs: Vec<f64> = sim.iter().map(|p| f.eval(p)).collect::<Result<_, _>>()?;
    sort_simplex(&mut sim, &mut fs);
    let mut trace = vec![TracePoint {
        iteration: 0,
        best: fs[0],
    }];
    let mut converged = false;
    let mut iterations = 0;

    while iterations < max_iter {
        let diameter = sim[1..]
            .iter()
            .flat_map(|p| p.iter().zip(&sim[0]).map(|(a, b)| (a - b).abs()))
            .fold(0.0, f64::max);
        let spread = fs[1..]
            .iter()
            .map(|v| (v - fs[0]).abs())
            .fold(0.0, f64::max);
        if diameter <= tol && spread <= tol {
            converged = true;
            break;
        }
        iterations += 1;

        let mut centroid = vec![0.0; n];
        for p in &sim[..n] {
            for (c, v) in centroid.iter_mut().zip(p) {
                *c += v / n as f64;
            }
        }
        let worst = sim[n].clone();
        let point = |coef: f64| -> Vec<f64> {
            centroid
                .iter()
                .zip(&worst)
                .map(|(c, w)| c + coef * (c - w))
                .collect()
        };

        let xr = point(REFLECT);
        let fr = f.eval(&xr)?;
        let mut shrink = false;
        if fr < fs[0] {
            let xe = point(REFLECT * EXPAND);
            let fe = f.eval(&xe)?;
            if fe < fr {
                sim[n] = xe;
                fs[n] = fe;
            } else {
                sim[n] = xr;
                fs[n] = fr;
            }
        } else if fr < fs[n - 1] {
            sim[n] = xr;
            fs[n] = fr;
        } else if fr < fs[n] {
            let xc = point(CONTRACT * REFLECT);
            let fc = f.eval(&xc)?;
            if fc <= fr {
                sim[n] = xc;
                fs[n] = fc;
            } else {
                shrink = true;
            }
        } else {
            let xcc = point(-CONTRACT);
            let fcc = f.eval(&xcc)?;
            if fcc < fs[n] {
                sim[n] = xcc;
                fs[n] = fcc;
            } else {
                shrink = true;
            }
        }
        if shrink {
            let best = sim[0].clone();
            for j in 1..=n {
                sim[j] = sim[j]
                    .iter()
                    .zip(&best)
                    .map(|(v, b)| b + SHRINK * (v - b))
                    .collect();
                fs[j] = f.eval(&sim[j])?;
            }
        }
        sort_simplex(&mut sim, &mut fs);
        trace.push(TracePoint {
            iteration: iterations,
            best: fs[0],
        });
    }

    Ok(OptimResult {
        x_star: sim[0].clone(),
        f_star: fs[0],
        n_evals: f.evals(),
        iterations,
        converged,
        trace,
    })
}

fn sort_simplex(sim: &mut Vec<Vec<f64>>, fs: &mut Vec<f64>) {
    let mut idx: Vec<usize> = (0..fs.len()).collect();
    idx.sort_by(|&a, &b| fs[a].total_cmp(&fs[b]).then(a.cmp(&b)));
    *sim = idx.iter().map(|&i| sim[i].clone()).collect();
    *fs = idx.iter().map(|&i| fs[i]).collect();
}
