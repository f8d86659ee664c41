use hphase::group::{apply_vector_field, convolve, haar_integral, kohn_laplacian, Grid, GridFunction, HeisenbergPoint, VectorField};
use num_complex::Complex64;
use proptest::prelude::*;

type C64 = Complex64;

fn point(d: usize) -> impl Strategy<Value = HeisenbergPoint> {
    (prop::collection::vec(-4.0f64..4.0, 2 * d), -4.0f64..4.0)
        .prop_map(move |(v, s)| HeisenbergPoint::new(v[..d].to_vec(), v[d..].to_vec(), s).unwrap())
}

fn close(a: &HeisenbergPoint, b: &HeisenbergPoint, tol: f64) -> bool {
    a.x.iter().zip(&b.x).chain(a.y.iter().zip(&b.y)).all(|(u, v)| (u - v).abs() <= tol) && (a.s - b.s).abs() <= tol
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn product_is_associative_with_inverses(a in point(2), b in point(2), c in point(2)) {
        prop_assert!(close(&a.mul(&b).mul(&c), &a.mul(&b.mul(&c)), 1e-12));
        let e = HeisenbergPoint::origin(2);
        prop_assert!(close(&a.mul(&a.inv()), &e, 1e-12));
        prop_assert!(close(&a.inv().mul(&a), &e, 1e-12));
        prop_assert!(close(&a.mul(&b).inv(), &b.inv().mul(&a.inv()), 1e-12));
    }

    #[test]
    fn dilations_are_automorphisms(a in point(1), b in point(1), t in 0.1f64..5.0) {
        let lhs = a.mul(&b).dilate(t).unwrap();
        let rhs = a.dilate(t).unwrap().mul(&b.dilate(t).unwrap());
        prop_assert!(close(&lhs, &rhs, 1e-10));
        prop_assert!((a.dilate(t).unwrap().norm() - t * a.norm()).abs() <= 1e-12 * (1.0 + t * a.norm()));
        prop_assert!((a.inv().norm() - a.norm()).abs() <= 1e-12);
    }

    #[test]
    fn distance_is_left_invariant_and_symmetric(a in point(1), b in point(1), h in point(1)) {
        let d = a.distance(&b);
        prop_assert!((h.mul(&a).distance(&h.mul(&b)) - d).abs() <= 1e-10 * (1.0 + d));
        prop_assert!((b.distance(&a) - d).abs() <= 1e-10 * (1.0 + d));
        prop_assert!(a.distance(&a) <= 1e-12);
    }
}

fn gauss(w: &HeisenbergPoint) -> C64 {
    C64::new((-w.z_norm_sqr() - w.s * w.s / 4.0).exp(), 0.0)
}

/// `X f` for `f = e^{−|z|² − s²/4}`.
fn x_gauss(w: &HeisenbergPoint) -> C64 {
    let (x, y, s) = (w.x[0], w.y[0], w.s);
    gauss(w) * (-2.0 * x + 2.0 * y * (-s / 2.0))
}

#[test]
fn x_is_left_invariant() {
    let grid = Grid::cube(1, 3.0, 81).unwrap();
    let h = HeisenbergPoint::new1(0.4, -0.3, 0.2);
    let translated = GridFunction::from_fn(&grid, |w| gauss(&h.mul(w)));
    let xt = apply_vector_field(VectorField::X(0), &translated).unwrap();
    let exact = GridFunction::from_fn(&grid, |w| x_gauss(&h.mul(w)));
    let err = xt.sub(&exact).unwrap().l2_norm() / exact.l2_norm();
    assert!(err < 1e-3, "{err}");
}

#[test]
fn complex_fields_recombine_and_give_the_laplacian() {
    let grid = Grid::cube(1, 4.0, 49).unwrap();
    let f = GridFunction::from_fn(&grid, gauss);
    let x = apply_vector_field(VectorField::X(0), &f).unwrap();
    let z = apply_vector_field(VectorField::Z(0), &f).unwrap();
    let zb = apply_vector_field(VectorField::Zbar(0), &f).unwrap();
    assert!(z.add(&zb).unwrap().sub(&x).unwrap().sup_norm() < 1e-13);
    // Δ = 2(Z Z̄ + Z̄ Z)
    let zzb = apply_vector_field(VectorField::Z(0), &zb).unwrap();
    let zbz = apply_vector_field(VectorField::Zbar(0), &z).unwrap();
    let lap = kohn_laplacian(&f).unwrap();
    let err = zzb.add(&zbz).unwrap().scale(C64::new(2.0, 0.0)).sub(&lap).unwrap().sup_norm() / lap.sup_norm();
    assert!(err < 1e-12, "{err}");
}

#[test]
fn convolution_integrates_to_the_product_of_integrals() {
    let grid = Grid::cube(1, 5.0, 21).unwrap();
    let small = Grid::cube(1, 2.0, 9).unwrap();
    let f = GridFunction::from_fn(&grid, gauss);
    let g = GridFunction::from_fn(&small, |w| C64::new((-2.0 * w.z_norm_sqr() - w.s * w.s).exp(), 0.0));
    let fg = convolve(&f, &g).unwrap();
    let want = haar_integral(&f) * haar_integral(&g);
    let err = (haar_integral(&fg) - want).norm() / want.norm();
    assert!(err < 5e-2, "{err}");
}
