//! Generalized Laguerre polynomials and the closed-form displacement matrix
//! elements used as an independent oracle for the representation matrices.

use num_complex::Complex64;

/// `L_m^{(p)}(t)` by the three-term recurrence.
pub fn laguerre_eval(m: usize, p: f64, t: f64) -> f64 {
    laguerre_all(m, p, t)[m]
}

/// `L_0^{(p)}(t), …, L_m^{(p)}(t)`.
pub fn laguerre_all(m: usize, p: f64, t: f64) -> Vec<f64> {
    let mut out = vec![0.0; m + 1];
    out[0] = 1.0;
    if m >= 1 {
        out[1] = 1.0 + p - t;
    }
    for k in 1..m {
        let kf = k as f64;
        out[k + 1] = ((2.0 * kf + 1.0 + p - t) * out[k] - (kf + p) * out[k - 1]) / (kf + 1.0);
    }
    out
}

/// Laguerre functions `e^{-x} L_n(2x)` for `n ≤ m`, scaled to stay bounded by one.
pub fn laguerre_functions(m: usize, x: f64) -> Vec<f64> {
    let e = (-x).exp();
    laguerre_all(m, 0.0, 2.0 * x).into_iter().map(|v| v * e).collect()
}

/// Binomial coefficient as a float.
pub fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    let mut acc = 1.0;
    for i in 0..k {
        acc = acc * (n - i) as f64 / (i + 1) as f64;
    }
    acc
}

/// `⟨m| D(β) |n⟩` for the displacement operator `D(β) = exp(β a† − β̄ a)` in the
/// number basis, from the Laguerre closed form.
pub fn displacement_element(m: usize, n: usize, beta: Complex64) -> Complex64 {
    let x = beta.norm_sqr();
    let gauss = (-0.5 * x).exp();
    if m >= n {
        let k = m - n;
        let mut ratio = 1.0;
        for j in (n + 1)..=m {
            ratio /= j as f64;
        }
        beta.powu(k as u32) * (ratio.sqrt() * gauss * laguerre_eval(n, k as f64, x))
    } else {
        let k = n - m;
        let mut ratio = 1.0;
        for j in (m + 1)..=n {
            ratio /= j as f64;
        }
        (-beta.conj()).powu(k as u32) * (ratio.sqrt() * gauss * laguerre_eval(m, k as f64, x))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn low_order_forms() {
        assert_eq!(laguerre_eval(0, 0.0, 3.3), 1.0);
        assert!((laguerre_eval(1, 0.0, 0.4) - 0.6).abs() < 1e-15);
        let t: f64 = 1.3;
        assert!((laguerre_eval(2, 1.0, t) - (t * t / 2.0 - 3.0 * t + 3.0)).abs() < 1e-14);
    }

    #[test]
    fn displacement_is_identity_at_zero() {
        for m in 0..5 {
            for n in 0..5 {
                let v = displacement_element(m, n, Complex64::new(0.0, 0.0));
                let e = if m == n { 1.0 } else { 0.0 };
                assert!((v.re - e).abs() < 1e-15 && v.im.abs() < 1e-15);
            }
        }
    }

    #[test]
    fn binomials() {
        assert_eq!(binomial(5, 2), 10.0);
        assert_eq!(binomial(33, 1), 33.0);
        assert_eq!(binomial(3, 4), 0.0);
    }
}
