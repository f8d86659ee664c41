use hphase::weyl::{
    apply_weyl, hermite_matrix, make_m_mu, make_m_tilde_mu, mehler_symbol, momentum_matrix, moyal,
    moyal_poly, oscillator_functional, poisson_poly, poly_matrix, position_matrix, symbol_from_kernel,
    symbol_seminorm, weyl_quantize, wigner_matrix, MoyalBackend, OscillatorInput, PhaseSymbol, Poly2,
    SpectralProfileR, WeylGrid, WeylKernel,
};
use hphase::CMatrix;
use num_complex::Complex64;
use proptest::prelude::*;
use std::f64::consts::PI;
use std::time::Instant;
use std::sync::Arc;

fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

fn max_abs(m: &CMatrix) -> f64 {
    m.iter().map(|v| v.norm()).fold(0.0, f64::max)
}

fn gaussian_samples(g: &WeylGrid, shift: f64) -> Vec<Complex64> {
    (0..g.n).map(|i| c((-(g.x(i) - shift).powi(2)).exp())).collect()
}

#[test]
fn multiplication_symbols_quantize_to_multiplication() {
    let g = WeylGrid::centered(161, 8.0, 512).unwrap();
    let a = PhaseSymbol::general(|x, _| Complex64::new(x.sin(), 0.5 * x));
    let u = gaussian_samples(&g, 0.3);
    let out = apply_weyl(&a, &u, &g).unwrap();
    let worst = (0..g.n).map(|i| (out[i] - Complex64::new(g.x(i).sin(), 0.5 * g.x(i)) * u[i]).norm()).fold(0.0, f64::max);
    assert!(worst < 1e-10, "{worst}");
    let one = apply_weyl(&PhaseSymbol::constant(c(1.0)), &u, &g).unwrap();
    assert!(one.iter().zip(&u).all(|(p, q)| (p - q).norm() < 1e-12));
}

#[test]
fn momentum_symbol_quantizes_to_the_derivative() {
    let g = WeylGrid::centered(161, 8.0, 512).unwrap();
    let u = gaussian_samples(&g, 0.3);
    let out = apply_weyl(&PhaseSymbol::Poly(Poly2::eta()), &u, &g).unwrap();
    let worst = (0..g.n)
        .map(|i| {
            let x = g.x(i) - 0.3;
            // (1/i) d/dx e^{-x²} = 2i x e^{-x²}
            (out[i] - Complex64::new(0.0, 2.0 * x * (-x * x).exp())).norm()
        })
        .fold(0.0, f64::max);
    assert!(worst < 1e-8, "{worst}");
}

#[test]
fn symbol_kernel_round_trip() {
    let g = WeylGrid::centered(121, 6.0, 256).unwrap();
    let a = PhaseSymbol::general(|x, y| Complex64::new((-x * x - y * y).exp(), 0.1 * x * (-y * y).exp()));
    let k = weyl_quantize(&a, &g).unwrap();
    let back = symbol_from_kernel(&k).unwrap();
    assert!(back.max_deviation(&a, 1e9, 1e9) < 1e-8);

    let zero = WeylKernel { samples: vec![c(0.0); k.samples.len()], ..k.clone() };
    assert!(symbol_from_kernel(&zero).unwrap().values.iter().all(|v| v.norm() == 0.0));

    // multiplication kernels live on the zero offset and give back ã(ξ)
    let mult = PhaseSymbol::general(|x, _| c((x / 3.0).cos()));
    let km = weyl_quantize(&mult, &g).unwrap();
    for cc in 0..g.n_mid() {
        for k in 1..g.m {
            assert!(km.samples[cc * g.m + k].norm() < 1e-12);
        }
    }
    assert!(symbol_from_kernel(&km).unwrap().max_deviation(&mult, 1e9, 1e9) < 1e-12);
    // read off the operator matrix only the physical pairs survive, which folds
    // η onto period π/h: a(η) + a(η + π/h), so an η-independent symbol doubles
    let o = CMatrix::from_fn(g.n, g.n, |i, j| if i == j { c((g.x(i) / 3.0).cos()) } else { c(0.0) });
    let s = symbol_from_kernel(&WeylKernel::from_operator(&g, &o).unwrap()).unwrap();
    for cc in 0..g.n_mid() {
        let expect = if cc % 2 == 0 { 2.0 * (g.mid(cc) / 3.0).cos() } else { 0.0 };
        for l in 0..g.m {
            assert!((s.at(cc, l) - c(expect)).norm() < 1e-12);
        }
    }
}

#[test]
fn conjugate_symbol_gives_the_adjoint_kernel() {
    let g = WeylGrid::centered(81, 5.0, 256).unwrap();
    let a = PhaseSymbol::general(|x, y| Complex64::new((-x * x - y * y).exp() * (1.0 + x), y * (-y * y - x * x).exp()));
    let ka = weyl_quantize(&a, &g).unwrap();
    let kb = weyl_quantize(&a.conj(), &g).unwrap();
    let adj = ka.adjoint();
    let worst = kb.samples.iter().zip(&adj.samples).map(|(p, q)| (p - q).norm()).fold(0.0, f64::max);
    assert!(worst < 1e-13);
    let o = ka.operator_matrix();
    assert!(max_abs(&(o.adjoint() - kb.operator_matrix())) < 1e-13);
}

#[test]
fn mehler_identity_via_kernel_quadrature() {
    let g = WeylGrid::centered(241, 12.0, 512).unwrap();
    for t in [0.05_f64, 0.1, 0.5] {
        let th = t.tanh();
        let a = PhaseSymbol::general(move |x, y| c((-(x * x + y * y) * th).exp()));
        let m = weyl_quantize(&a, &g).unwrap().hermite_matrix(10);
        let worst = (0..=10)
            .map(|n| (m[(n, n)] / t.cosh() - c((-t * (2.0 * n as f64 + 1.0)).exp())).norm())
            .fold(0.0, f64::max);
        assert!(worst < 1e-8, "t={t}: {worst}");
    }
}

#[test]
fn moyal_exactness_against_operator_composition() {
    let pad = 30;
    let n = 20;
    let xi = position_matrix(pad);
    let eta = momentum_matrix(pad);
    let xe = moyal_poly(&Poly2::xi(), &Poly2::eta());
    let expect = Poly2::monomial(1, 1, c(1.0)).add(&Poly2::constant(Complex64::new(0.0, 0.5)));
    assert!(xe.max_coeff_diff(&expect) < 1e-15);
    let oracle = (&xi * &eta).view((0, 0), (n + 1, n + 1)).into_owned();
    assert!(max_abs(&(poly_matrix(&xe, n) - oracle)) < 1e-10);

    let h = Poly2::harmonic();
    let hh = moyal_poly(&h, &h);
    assert!(hh.max_coeff_diff(&h.mul(&h).sub(&Poly2::constant(c(1.0)))) < 1e-15);
    let hm = &xi * &xi + &eta * &eta;
    let oracle = (&hm * &hm).view((0, 0), (n + 1, n + 1)).into_owned();
    assert!(max_abs(&(poly_matrix(&hh, n) - oracle)) < 1e-10);
    for k in 0..=n {
        assert!((poly_matrix(&hh, n)[(k, k)] - c((2.0 * k as f64 + 1.0).powi(2))).norm() < 1e-10);
    }
}

#[test]
fn moyal_backends_agree_on_overlap() {
    let g = WeylGrid::centered(241, 12.0, 512).unwrap();
    let a = PhaseSymbol::general(|x, y| Complex64::new((-(x * x + y * y) / 2.0).exp(), 0.3 * x * (-(x * x + y * y)).exp()));
    let b = PhaseSymbol::Poly(Poly2::xi().mul(&Poly2::xi()).add(&Poly2::eta()));
    let finite = moyal(&a, &b, MoyalBackend::Finite).unwrap();
    let fft = moyal(&a, &b, MoyalBackend::Fft(g)).unwrap();
    let PhaseSymbol::Sampled(s) = &fft else { panic!("fft backend returns samples") };
    let on_lattice = s.max_deviation(&finite, 3.0, 3.0);
    assert!(on_lattice < 1e-8, "{on_lattice}");
    let mut worst: f64 = 0.0;
    for i in 0..9 {
        for j in 0..9 {
            let (x, y) = (-2.0 + 0.5 * i as f64 + 0.013, -2.0 + 0.5 * j as f64 - 0.007);
            worst = worst.max((finite.eval(x, y) - fft.eval(x, y)).norm());
        }
    }
    assert!(worst < 1e-6, "{worst}");
    assert!(moyal(&a, &b, MoyalBackend::Polynomial).is_err());
    // a # 1 = a
    let one = PhaseSymbol::constant(c(1.0));
    let p = moyal(&a, &one, MoyalBackend::Finite).unwrap();
    assert!((p.eval(0.3, 0.2) - a.eval(0.3, 0.2)).norm() < 1e-14);
}

#[test]
fn commutator_with_linear_symbol_is_the_poisson_bracket() {
    // [op(a), op(b)] = (1/i) op({a, b}) for b of degree one
    let a = PhaseSymbol::general(|x, y| Complex64::new((-(x * x + y * y) / 3.0).exp() * (1.0 + 0.2 * x), 0.1 * y));
    let b = Poly2::xi().add(&Poly2::eta().scale(c(2.0)));
    let n = 16;
    let pad = n + 30;
    let ma = hermite_matrix(&a, pad).unwrap();
    let mb = poly_matrix(&b, pad);
    let comm = (&ma * &mb - &mb * &ma).view((0, 0), (n + 1, n + 1)).into_owned();
    let aa = a.clone();
    let bracket = PhaseSymbol::general(move |x, y| aa.deriv(0, 1, x, y) * 1.0 - aa.deriv(1, 0, x, y) * 2.0);
    let mc = hermite_matrix(&bracket, n).unwrap() * Complex64::new(0.0, -1.0);
    assert!(max_abs(&(comm - mc)) < 1e-6);
    assert_eq!(poisson_poly(&Poly2::xi(), &Poly2::eta()), Poly2::constant(c(-1.0)));
}

fn mehler_closed_form(t: f64, x: f64) -> f64 {
    (-x * t.tanh()).exp() / t.cosh()
}

#[test]
fn mehler_series_reproduces_the_heat_symbol() {
    let r = SpectralProfileR::heat(0.1).unwrap();
    let xs = [0.05, 0.4, 1.0, 3.0, 9.0];
    let t0 = Instant::now();
    let v = mehler_symbol(&r, 1, &xs).unwrap();
    eprintln!("five Mehler evaluations: {:?}", t0.elapsed());
    for (x, val) in xs.iter().zip(&v) {
        let e = mehler_closed_form(0.1, *x);
        assert!((val - c(e)).norm() < 1e-9, "x={x}: {val} vs {e}");
    }
    assert!(mehler_symbol(&r, 1, &[0.0]).is_err());
    assert!(mehler_symbol(&r, 2, &[1.0]).is_err());
}

#[test]
fn mehler_series_from_sampled_transform_matches_laguerre_expansion() {
    // compactly supported smooth R: the Laguerre expansion is a finite sum
    let bump = |y: f64| {
        let t = (y - 5.0) / 4.0;
        if t.abs() >= 1.0 {
            0.0
        } else {
            (-1.0 / (1.0 - t * t)).exp()
        }
    };
    let r = SpectralProfileR::new(Arc::new(move |y| c(bump(y))), (0.0, 10.0), f64::NEG_INFINITY).unwrap();
    let xs = [0.2, 1.0, 2.5, 6.0];
    let v = mehler_symbol(&r, 1, &xs).unwrap();
    for (x, val) in xs.iter().zip(&v) {
        let lag: f64 = (0..5)
            .map(|n| {
                let l = hphase::laguerre::laguerre_eval(n, 0.0, 2.0 * x);
                bump(2.0 * n as f64 + 1.0) * 2.0 * (-1f64).powi(n as i32) * (-x).exp() * l
            })
            .sum();
        assert!((val - c(lag)).norm() < 1e-8, "x={x}: {val} vs {lag}");
    }
    let zero = SpectralProfileR::new(Arc::new(|_| c(0.0)), (0.0, 1.0), 0.0).unwrap();
    assert!(mehler_symbol(&zero, 1, &[0.5]).unwrap()[0].norm() == 0.0);
}

#[test]
fn oscillator_functional_examples() {
    let r = SpectralProfileR::heat(0.1).unwrap();
    let v = oscillator_functional(&OscillatorInput::Spectral(&r), 0, 1).unwrap();
    assert!((v.re - 0.904837418).abs() < 1e-9);
    let one = |_x: f64| c(1.0);
    for n in 0..6 {
        let e = oscillator_functional(&OscillatorInput::Profile { r: &one, r_hat: None }, n, 1).unwrap();
        assert!((e - c(1.0)).norm() < 1e-10, "n={n}: {e}");
    }
    // r(x) = e^{-x²} with r̂(τ) = √π e^{-τ²/4}; τ-form, x-form and kernel quadrature agree
    let prof = |x: f64| c((-x * x).exp());
    let hat = |t: f64| c(PI.sqrt() * (-t * t / 4.0).exp());
    let g = WeylGrid::new(241, -12.0 + 0.025, 0.1, 512).unwrap();
    let sym = PhaseSymbol::radial(move |x| c((-x * x).exp()));
    let km = weyl_quantize(&sym, &g).unwrap().hermite_matrix(8);
    for n in 0..=8 {
        let t = oscillator_functional(&OscillatorInput::Profile { r: &prof, r_hat: Some(&hat) }, n, 1).unwrap();
        let x = oscillator_functional(&OscillatorInput::Profile { r: &prof, r_hat: None }, n, 1).unwrap();
        assert!((t - x).norm() < 1e-10, "n={n}: {t} vs {x}");
        assert!((t - km[(n, n)]).norm() < 1e-6, "n={n}: {t} vs kernel {}", km[(n, n)]);
    }
}

#[test]
fn compactly_supported_profile_diagonal_matches_the_functional() {
    let bump = |y: f64| {
        let t = (y - 4.0) / 3.0;
        if t.abs() >= 1.0 {
            0.0
        } else {
            (-1.0 / (1.0 - t * t)).exp()
        }
    };
    let r = SpectralProfileR::new(Arc::new(move |y| c(bump(y))), (0.0, 8.0), f64::NEG_INFINITY).unwrap();
    // sample the series on Chebyshev nodes of [0, 40] and quadrature the
    // barycentric interpolant; beyond 40 the profile is below e^{-40}
    let (nc, top) = (48usize, 40.0);
    let theta: Vec<f64> = (0..nc).map(|j| PI * (j as f64 + 0.5) / nc as f64).collect();
    let xs: Vec<f64> = theta.iter().map(|t| 0.5 * top * (1.0 - t.cos())).collect();
    let prof = mehler_symbol(&r, 1, &xs).unwrap();
    let wts: Vec<f64> = theta.iter().enumerate().map(|(j, t)| if j % 2 == 0 { t.sin() } else { -t.sin() }).collect();
    let interp = move |x: f64| -> Complex64 {
        if x >= top {
            return c(0.0);
        }
        let (mut num, mut den) = (c(0.0), 0.0);
        for j in 0..nc {
            let d = x - xs[j];
            if d == 0.0 {
                return prof[j];
            }
            num += prof[j] * (wts[j] / d);
            den += wts[j] / d;
        }
        num / den
    };
    let m = wigner_matrix(&|x, y| interp(x * x + y * y), 6, 64).unwrap();
    for n in 0..=6 {
        let e = oscillator_functional(&OscillatorInput::Spectral(&r), n, 1).unwrap();
        assert!((m[(n, n)] - e).norm() < 1e-6, "n={n}: {} vs {e}", m[(n, n)]);
    }
}

#[test]
fn oscillator_powers() {
    assert_eq!(make_m_mu(0.0).unwrap().eval(3.0, 1.0), c(1.0));
    let m2 = make_m_mu(2.0).unwrap();
    let mat = hermite_matrix(&m2, 10).unwrap();
    for n in 0..=10 {
        assert!((mat[(n, n)] - c(4.0 * (1.0 + (2.0 * n as f64 + 1.0)))).norm() < 1e-12);
    }
    let a = make_m_mu(0.7).unwrap();
    let b = make_m_mu(-1.9).unwrap();
    let ab = hermite_matrix(&PhaseSymbol::moyal(a, b), 10).unwrap();
    let direct = hermite_matrix(&make_m_mu(-1.2).unwrap(), 10).unwrap();
    assert!(max_abs(&(ab - direct)) < 1e-12);
    assert!(make_m_tilde_mu(-1.0).is_err());
    let t = hermite_matrix(&make_m_tilde_mu(1.0).unwrap(), 4).unwrap();
    assert!((t[(2, 2)] - c(2.0 * 5f64.sqrt())).norm() < 1e-12);
    // the profile of a non-polynomial power reproduces its eigenvalues
    let p = make_m_mu(-2.0).unwrap();
    if let PhaseSymbol::Radial(r) = &p {
        for n in 0..4 {
            let e = hphase::weyl::radial_eigenvalue(&*r.profile, n, 1);
            let exact = 0.25 / (2.0 * n as f64 + 2.0);
            assert!((e - c(exact)).norm() < 1e-6, "n={n}: {e} vs {exact}");
        }
    } else {
        panic!("expected a radial symbol");
    }
}

#[test]
fn seminorm_trends() {
    let root = PhaseSymbol::general(|x, y| c((1.0 + x * x + y * y).sqrt()));
    let s1 = symbol_seminorm(&root, 2, 1.0, 20.0, 41).unwrap().value;
    let s2 = symbol_seminorm(&root, 2, 1.0, 80.0, 81).unwrap().value;
    assert!(s1 < 1.01 && s2 < 1.01);
    let d1 = symbol_seminorm(&root, 0, 0.0, 20.0, 41).unwrap().value;
    let d2 = symbol_seminorm(&root, 0, 0.0, 80.0, 81).unwrap().value;
    assert!(d2 > 3.0 * d1);
}

fn small_poly() -> impl Strategy<Value = Poly2> {
    proptest::collection::vec(((0u32..3, 0u32..3), (-2.0f64..2.0, -2.0f64..2.0)), 1..5).prop_map(|t| {
        t.into_iter().fold(Poly2::zero(), |acc, ((i, j), (re, im))| acc.add(&Poly2::monomial(i, j, Complex64::new(re, im))))
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn moyal_is_associative_on_polynomials(a in small_poly(), b in small_poly(), c3 in small_poly()) {
        let l = moyal_poly(&moyal_poly(&a, &b), &c3);
        let r = moyal_poly(&a, &moyal_poly(&b, &c3));
        prop_assert!(l.max_coeff_diff(&r) < 1e-11);
    }

    #[test]
    fn moyal_matrix_is_the_operator_product(a in small_poly(), b in small_poly()) {
        let n = 8;
        let pad = n + 8;
        let lhs = poly_matrix(&moyal_poly(&a, &b), n);
        let rhs = (poly_matrix(&a, pad) * poly_matrix(&b, pad)).view((0, 0), (n + 1, n + 1)).into_owned();
        prop_assert!(max_abs(&(lhs - rhs)) < 1e-9);
    }
}
