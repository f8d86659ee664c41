//! One-dimensional quadrature rules.
//!
//! * composite Simpson weights on uniform grids (with a 3/8 tail for an even
//!   point count), used for Haar integrals on boxes;
//! * Gauss-Hermite nodes with *scaled* weights `ŵ_i = w_i e^{t_i²}`, so that
//!   `∫ g(t) dt ≈ Σ ŵ_i g(t_i)` for `g = poly · e^{-t²}`;
//! * Gauss-Legendre panels for smooth integrands on bounded intervals.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use nalgebra::{DMatrix, SymmetricEigen};

use crate::hermite::hermite_all;

/// Composite Simpson weights for `n` equispaced points with spacing `h`.
///
/// Odd `n` uses plain Simpson. Even `n ≥ 6` uses Simpson on the first `n-3`
/// points and Simpson 3/8 on the last four; `n = 4` is pure 3/8 and `n = 2`
/// is the trapezoid rule.
pub fn simpson_weights(n: usize, h: f64) -> Vec<f64> {
    let mut w = vec![0.0; n];
    match n {
        0 => return w,
        1 => {
            w[0] = h;
            return w;
        }
        2 => {
            w[0] = 0.5 * h;
            w[1] = 0.5 * h;
            return w;
        }
        4 => {
            let c = 3.0 * h / 8.0;
            w[0] = c;
            w[1] = 3.0 * c;
            w[2] = 3.0 * c;
            w[3] = c;
            return w;
        }
        _ => {}
    }
    let simpson_end = if n % 2 == 1 { n } else { n - 3 };
    for i in 0..simpson_end {
        let c = if i == 0 || i == simpson_end - 1 {
            1.0
        } else if i % 2 == 1 {
            4.0
        } else {
            2.0
        };
        w[i] += c * h / 3.0;
    }
    if n % 2 == 0 {
        let c = 3.0 * h / 8.0;
        let s = n - 4;
        w[s] += c;
        w[s + 1] += 3.0 * c;
        w[s + 2] += 3.0 * c;
        w[s + 3] += c;
    }
    w
}

/// Gauss-Hermite rule with `n` nodes.
#[derive(Debug, Clone)]
pub struct GaussHermite {
    /// Nodes in increasing order (roots of `H_n`).
    pub nodes: Vec<f64>,
    /// Scaled weights `w_i e^{t_i²} = 1 / Σ_{k<n} h_k(t_i)²`.
    pub scaled_weights: Vec<f64>,
}

impl GaussHermite {
    /// Builds the rule from the Jacobi matrix eigenvalues, refined by Newton
    /// iterations on the orthonormal Hermite function `h_n`.
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "Gauss-Hermite rule needs at least one node");
        let mut jac = DMatrix::<f64>::zeros(n, n);
        for k in 1..n {
            let b = (k as f64 / 2.0).sqrt();
            jac[(k, k - 1)] = b;
            jac[(k - 1, k)] = b;
        }
        let mut nodes: Vec<f64> = SymmetricEigen::new(jac).eigenvalues.iter().copied().collect();
        nodes.sort_by(|a, b| a.partial_cmp(b).unwrap());
        for t in nodes.iter_mut() {
            for _ in 0..3 {
                let h = hermite_all(n, *t);
                // h_n' = sqrt(2n) h_{n-1} - t h_n
                let d = (2.0 * n as f64).sqrt() * h[n - 1] - *t * h[n];
                if d == 0.0 {
                    break;
                }
                let step = h[n] / d;
                *t -= step;
                if step.abs() < 1e-15 * (1.0 + t.abs()) {
                    break;
                }
            }
        }
        let scaled_weights = nodes
            .iter()
            .map(|&t| {
                let h = hermite_all(n - 1, t);
                1.0 / h.iter().map(|v| v * v).sum::<f64>()
            })
            .collect();
        Self { nodes, scaled_weights }
    }

    /// Number of nodes.
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    /// Always false: a rule has at least one node.
    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }
}

/// Shared Gauss-Hermite rule with `n` nodes, built once per process.
pub fn gauss_hermite(n: usize) -> Arc<GaussHermite> {
    static CACHE: OnceLock<Mutex<HashMap<usize, Arc<GaussHermite>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    if let Some(r) = cache.lock().expect("quadrature cache poisoned").get(&n) {
        return r.clone();
    }
    let rule = Arc::new(GaussHermite::new(n));
    cache.lock().expect("quadrature cache poisoned").insert(n, rule.clone());
    rule
}

/// Gauss-Legendre rule on `[-1, 1]` via the Golub-Welsch construction.
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    /// Nodes in increasing order.
    pub nodes: Vec<f64>,
    /// Weights summing to 2.
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    /// Builds an `n`-point rule.
    pub fn new(n: usize) -> Self {
        assert!(n >= 1);
        let mut jac = DMatrix::<f64>::zeros(n, n);
        for k in 1..n {
            let kf = k as f64;
            let b = kf / (4.0 * kf * kf - 1.0).sqrt();
            jac[(k, k - 1)] = b;
            jac[(k - 1, k)] = b;
        }
        let eig = SymmetricEigen::new(jac);
        let mut pairs: Vec<(f64, f64)> = (0..n)
            .map(|i| {
                let v0 = eig.eigenvectors[(0, i)];
                (eig.eigenvalues[i], 2.0 * v0 * v0)
            })
            .collect();
        pairs.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        Self {
            nodes: pairs.iter().map(|p| p.0).collect(),
            weights: pairs.iter().map(|p| p.1).collect(),
        }
    }

    /// Composite rule: `panels` equal panels on `[a, b]`, returning `(nodes, weights)`.
    pub fn composite(&self, a: f64, b: f64, panels: usize) -> (Vec<f64>, Vec<f64>) {
        let mut xs = Vec::with_capacity(panels * self.nodes.len());
        let mut ws = Vec::with_capacity(panels * self.nodes.len());
        let width = (b - a) / panels as f64;
        for p in 0..panels {
            let lo = a + p as f64 * width;
            for (t, w) in self.nodes.iter().zip(&self.weights) {
                xs.push(lo + 0.5 * width * (t + 1.0));
                ws.push(0.5 * width * w);
            }
        }
        (xs, ws)
    }
}

/// Weights of the composite trapezoid rule on `n` equispaced points.
pub fn trapezoid_weights(n: usize, h: f64) -> Vec<f64> {
    let mut w = vec![h; n];
    if n >= 1 {
        w[0] *= 0.5;
        w[n - 1] *= 0.5;
    }
    w
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn simpson_integrates_cubics_exactly_for_all_counts() {
        for n in [3usize, 4, 5, 6, 7, 8, 9, 10, 64] {
            let h = 2.0 / (n - 1) as f64;
            let w = simpson_weights(n, h);
            let s: f64 = (0..n)
                .map(|i| {
                    let x = -1.0 + i as f64 * h;
                    w[i] * (x * x * x + 2.0 * x * x + 1.0)
                })
                .sum();
            assert!((s - (4.0 / 3.0 + 2.0)).abs() < 1e-13, "n={n}: {s}");
        }
    }

    #[test]
    fn gauss_hermite_integrates_gaussian_moments() {
        let gh = GaussHermite::new(40);
        // ∫ t^4 e^{-t²} dt = 3√π/4
        let s: f64 = gh
            .nodes
            .iter()
            .zip(&gh.scaled_weights)
            .map(|(t, w)| w * t.powi(4) * (-t * t).exp())
            .sum();
        assert!((s - 0.75 * std::f64::consts::PI.sqrt()).abs() < 1e-13);
    }

    #[test]
    fn gauss_legendre_is_exact_to_degree_2n_minus_1() {
        let gl = GaussLegendre::new(8);
        let s: f64 = gl.nodes.iter().zip(&gl.weights).map(|(x, w)| w * x.powi(14)).sum();
        assert!((s - 2.0 / 15.0).abs() < 1e-14);
    }
}
