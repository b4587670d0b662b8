//! One-dimensional bracketing and Brent minimization along a direction.
//! Infinite values (bound rejections) fall back to golden-section steps.

use super::{Counted, OptimError};

const GOLD: f64 = 1.618_033_988_749_895;
const CGOLD: f64 = 0.381_966_011_250_105;
const GLIMIT: f64 = 100.0;
const TINY: f64 = 1e-21;
const MAX_BRACKET: usize = 200;
const BRENT_ITERS: usize = 200;
const ZEPS: f64 = 1e-14;

pub(crate) struct LineMin {
    pub x: Vec<f64>,
    pub f: f64,
}

fn along(x: &[f64], dir: &[f64], t: f64) -> Vec<f64> {
    x.iter().zip(dir).map(|(a, d)| a + t * d).collect()
}

/// Minimize `f(x + t * dir)` over `t`. The returned point is only moved when
/// the objective strictly decreases.
pub(crate) fn line_minimize(
    f: &Counted<'_, '_>,
    x: &[f64],
    fx: f64,
    dir: &[f64],
    xtol: f64,
) -> Result<LineMin, OptimError> {
    if dir.iter().all(|d| *d == 0.0) {
        return Ok(LineMin {
            x: x.to_vec(),
            f: fx,
        });
    }
    let phi = |t: f64| f.eval(&along(x, dir, t));

    // Bracket a minimum starting from t = 0 and t = 1.
    let (mut a, mut fa) = (0.0, fx);
    let (mut b, mut fb) = (1.0, phi(1.0)?);
    if fb > fa {
        std::mem::swap(&mut a, &mut b);
        std::mem::swap(&mut fa, &mut fb);
    }
    let mut c = b + GOLD * (b - a);
    let mut fc = phi(c)?;
    let mut n = 0;
    while fb > fc && n < MAX_BRACKET {
        n += 1;
        let mut u;
        let mut fu;
        if fa.is_finite() && fb.is_finite() && fc.is_finite() {
            let r = (b - a) * (fb - fc);
            let q = (b - c) * (fb - fa);
            let denom = 2.0 * (q - r).abs().max(TINY).copysign(q - r);
            u = b - ((b - c) * q - (b - a) * r) / denom;
            let ulim = b + GLIMIT * (c - b);
            if (b - u) * (u - c) > 0.0 {
                fu = phi(u)?;
                if fu < fc {
                    a = b;
                    b = u;
                    fb = fu;
                    break;
                } else if fu > fb {
                    c = u;
                    break;
                }
                u = c + GOLD * (c - b);
                fu = phi(u)?;
            } else if (c - u) * (u - ulim) > 0.0 {
                fu = phi(u)?;
                if fu < fc {
                    b = c;
                    c = u;
                    u = c + GOLD * (c - b);
                    fb = fc;
                    fc = fu;
                    fu = phi(u)?;
                }
            } else if (u - ulim) * (ulim - c) >= 0.0 {
                u = ulim;
                fu = phi(u)?;
            } else {
                u = c + GOLD * (c - b);
                fu = phi(u)?;
            }
        } else {
            u = c + GOLD * (c - b);
            fu = phi(u)?;
        }
        a = b;
        b = c;
        c = u;
        fa = fb;
        fb = fc;
        fc = fu;
    }

    let (t, ft) = brent(&phi, a, b, c, fb, xtol)?;
    if ft < fx {
        Ok(LineMin {
            x: along(x, dir, t),
            f: ft,
        })
    } else {
        Ok(LineMin {
            x: x.to_vec(),
            f: fx,
        })
    }
}

fn brent(
    phi: &dyn Fn(f64) -> Result<f64, OptimError>,
    ax: f64,
    bx: f64,
    cx: f64,
    fbx: f64,
    tol: f64,
) -> Result<(f64, f64), OptimError> {
    let mut a = ax.min(cx);
    let mut b = ax.max(cx);
    let (mut x, mut w, mut v) = (bx, bx, bx);
    let (mut fx, mut fw, mut fv) = (fbx, fbx, fbx);
    let mut d: f64 = 0.0;
    let mut e: f64 = 0.0;
    for _ in 0..BRENT_ITERS {
        let xm = 0.5 * (a + b);
        let tol1 = tol * x.abs() + ZEPS;
        let tol2 = 2.0 * tol1;
        if (x - xm).abs() <= tol2 - 0.5 * (b - a) {
            break;
        }
        let mut golden = true;
        if e.abs() > tol1 && fx.is_finite() && fw.is_finite() && fv.is_finite() {
            let r = (x - w) * (fx - fv);
            let mut q = (x - v) * (fx - fw);
            let mut p = (x - v) * q - (x - w) * r;
            q = 2.0 * (q - r);
            if q > 0.0 {
                p = -p;
            }
            q = q.abs();
            let etemp = e;
            if !(p.abs() >= (0.5 * q * etemp).abs() || p <= q * (a - x) || p >= q * (b - x)) {
                e = d;
                d = p / q;
                let u = x + d;
                if u - a < tol2 || b - u < tol2 {
                    d = tol1.copysign(xm - x);
                }
                golden = false;
            }
        }
        if golden {
            e = if x >= xm { a - x } else { b - x };
            d = CGOLD * e;
        }
        let u = if d.abs() >= tol1 {
            x + d
        } else {
            x + tol1.copysign(d)
        };
        let fu = phi(u)?;
        if fu <= fx {
            if u >= x {
                a = x;
            } else {
                b = x;
            }
            v = w;
            w = x;
            x = u;
            fv = fw;
            fw = fx;
            fx = fu;
        } else {
            if u < x {
                a = u;
            } else {
                b = u;
            }
            if fu <= fw || w == x {
                v = w;
                w = u;
                fv = fw;
                fw = fu;
            } else if fu <= fv || v == x || v == w {
                v = u;
                fv = fu;
            }
        }
    }
    Ok((x, fx))
}
