//! Independent oracles shared by the integration tests.

#![allow(dead_code)]

/// Reflection of `x0 + m` at zero on the nodes:
/// `x(t) = x0 + m(t) + max(0, max_{s <= t} -(x0 + m(s)))`.
pub fn halfline_map(x0: f64, m: &[f64]) -> Vec<f64> {
    let mut low: f64 = 0.0;
    m.iter()
        .map(|&v| {
            low = low.max(-(x0 + v));
            x0 + v + low
        })
        .collect()
}

/// `E|N(0, t)| = sqrt(2 t / pi)`, the law of reflected Brownian motion from 0.
pub fn folded_normal_mean(t: f64) -> f64 {
    (2.0 * t / std::f64::consts::PI).sqrt()
}

/// Sample mean and standard error.
pub fn mean_and_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}
