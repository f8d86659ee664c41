//! Smooth transition functions shared by cutoffs and partitions of unity.

/// `e^{-1/t}` for `t > 0`, zero otherwise.
fn flat(t: f64) -> f64 {
    if t <= 0.0 {
        0.0
    } else {
        (-1.0 / t).exp()
    }
}

/// Smooth step: `0` for `t ≤ 0`, `1` for `t ≥ 1`, `C^∞` and monotone in between.
///
/// Built as the ratio `f(t) / (f(t) + f(1−t))` with `f(t) = e^{-1/t}`, so the
/// identity `step(t) + step(1−t) = 1` holds to rounding.
pub fn smooth_step(t: f64) -> f64 {
    if t <= 0.0 {
        return 0.0;
    }
    if t >= 1.0 {
        return 1.0;
    }
    let a = flat(t);
    let b = flat(1.0 - t);
    a / (a + b)
}

/// Smooth cutoff equal to `1` on `[0, a]`, `0` on `[b, ∞)`, even in its argument.
pub fn plateau(x: f64, a: f64, b: f64) -> f64 {
    let t = x.abs();
    1.0 - smooth_step((t - a) / (b - a))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn step_is_exact_outside_the_transition_and_symmetric() {
        assert_eq!(smooth_step(-0.1), 0.0);
        assert_eq!(smooth_step(1.0), 1.0);
        for i in 0..=100 {
            let t = i as f64 / 100.0;
            assert!((smooth_step(t) + smooth_step(1.0 - t) - 1.0).abs() < 1e-15);
        }
        assert!((plateau(1.5, 1.0, 2.0) - 0.5).abs() < 1e-15);
    }
}
