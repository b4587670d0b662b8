//! Small numeric helpers shared by the fitting and training code.

/// Probability clamp used inside every cross-entropy.
pub const PROB_EPS: f64 = 1e-7;

/// Compensated sum; the result does not depend on how the slice was produced
/// in parallel, only on its order, and is far less order-sensitive than `sum`.
pub fn neumaier_sum(xs: &[f64]) -> f64 {
    let mut sum = 0.0;
    let mut comp = 0.0;
    for &x in xs {
        let t = sum + x;
        if sum.abs() >= x.abs() {
            comp += (sum - t) + x;
        } else {
            comp += (x - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

/// Mean and population standard deviation.
pub fn mean_std(xs: &[f64]) -> (f64, f64) {
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = xs.len() as f64;
    let mean = neumaier_sum(xs) / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

pub fn clamp_prob(p: f64) -> f64 {
    p.clamp(PROB_EPS, 1.0 - PROB_EPS)
}

/// Unweighted mean binary cross-entropy with clamped probabilities.
pub fn bce(probs: &[f64], labels: &[bool]) -> f64 {
    assert_eq!(probs.len(), labels.len());
    let terms: Vec<f64> = probs
        .iter()
        .zip(labels)
        .map(|(&p, &y)| {
            let p = clamp_prob(p);
            if y {
                -p.ln()
            } else {
                -(1.0 - p).ln()
            }
        })
        .collect();
    neumaier_sum(&terms) / probs.len().max(1) as f64
}
