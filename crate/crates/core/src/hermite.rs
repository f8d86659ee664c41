//! Orthonormal Hermite functions `h_n(t) = (2ⁿ n! √π)^{-1/2} H_n(t) e^{-t²/2}`.
//!
//! Values come from the normalized three-term recurrence
//! `h_{k+1} = √(2/(k+1)) t h_k − √(k/(k+1)) h_{k−1}` started at
//! `h_0 = π^{-1/4} e^{-t²/2}`. The Gaussian factor is carried as a separate
//! logarithm and the running values are rescaled whenever they grow past
//! `1e150`, so neither overflow nor premature underflow occurs for large `n`
//! or `|t|`.

const RESCALE: f64 = 1e150;

/// `h_0(t), …, h_n(t)`.
pub fn hermite_all(n: usize, t: f64) -> Vec<f64> {
    let mut out = vec![0.0; n + 1];
    hermite_fill(t, &mut out);
    out
}

/// Fills `out[k] = h_k(t)` for `k < out.len()`.
pub fn hermite_fill(t: f64, out: &mut [f64]) {
    if out.is_empty() {
        return;
    }
    let ln_rescale = RESCALE.ln();
    let mut log_scale = -0.5 * t * t;
    let mut prev = 0.0_f64;
    let mut cur = std::f64::consts::PI.powf(-0.25);
    out[0] = cur * log_scale.exp();
    for k in 0..out.len() - 1 {
        let kf = k as f64;
        let next = (2.0 / (kf + 1.0)).sqrt() * t * cur - (kf / (kf + 1.0)).sqrt() * prev;
        prev = cur;
        cur = next;
        if cur.abs() > RESCALE {
            cur /= RESCALE;
            prev /= RESCALE;
            log_scale += ln_rescale;
        }
        out[k + 1] = if log_scale < -745.0 { 0.0 } else { cur * log_scale.exp() };
    }
}

/// Single value `h_n(t)`.
pub fn hermite_eval(n: usize, t: f64) -> f64 {
    hermite_all(n, t)[n]
}

/// Rescaled functions `h_{k,λ}(ξ) = |λ|^{1/4} h_k(√|λ| ξ)`, `k ≤ n`; each has unit `L²` norm.
pub fn hermite_scaled_all(n: usize, lambda: f64, xi: f64) -> Vec<f64> {
    let a = lambda.abs();
    let mut v = hermite_all(n, a.sqrt() * xi);
    let c = a.powf(0.25);
    v.iter_mut().for_each(|x| *x *= c);
    v
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::GaussHermite;

    #[test]
    fn known_values() {
        assert!((hermite_eval(0, 0.0) - 0.751_125_544_464_942_5).abs() < 1e-15);
        assert_eq!(hermite_eval(1, 0.0), 0.0);
        // h_2(t) = (2t² − 1) e^{−t²/2} / (√2 π^{1/4} ... ) via explicit H_2 = 4t² − 2
        let t: f64 = 0.7;
        let explicit = (4.0 * t * t - 2.0) * (-t * t / 2.0).exp()
            / (4.0 * 2.0 * std::f64::consts::PI.sqrt()).sqrt();
        assert!((hermite_eval(2, t) - explicit).abs() < 1e-15);
    }

    #[test]
    fn orthonormal_under_gauss_hermite() {
        let gh = GaussHermite::new(48);
        let vals: Vec<Vec<f64>> = gh.nodes.iter().map(|&t| hermite_all(20, t)).collect();
        for m in 0..=20 {
            for n in 0..=20 {
                let s: f64 = vals
                    .iter()
                    .zip(&gh.scaled_weights)
                    .map(|(v, w)| w * v[m] * v[n])
                    .sum();
                let expect = if m == n { 1.0 } else { 0.0 };
                assert!((s - expect).abs() < 1e-12, "({m},{n}) -> {s}");
            }
        }
    }

    #[test]
    fn large_degree_and_argument_stay_finite() {
        let v = hermite_all(400, 25.0);
        assert!(v.iter().all(|x| x.is_finite()));
        assert!(v[400].abs() > 0.0);
        let far = hermite_all(10, 60.0);
        assert!(far.iter().all(|x| *x == 0.0 || x.abs() < 1e-300));
    }
}
