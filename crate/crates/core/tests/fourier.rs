use hphase::fourier::{
    gft, gft_fast, gft_generic, gft_radial, inverse_gft, inverse_gft_radial, radial_weight_relation,
    spectral_derivative, LambdaGrid, SpectralOp,
};
use hphase::group::{apply_vector_field, kohn_laplacian, Grid, GridFunction, VectorField};
use num_complex::Complex64;
use std::f64::consts::PI;

fn gaussian(grid: &Grid) -> GridFunction {
    GridFunction::from_fn(grid, |w| Complex64::new((-w.z_norm_sqr() - w.s * w.s).exp(), 0.0))
}

/// Closed form of `R_m(λ)` for `e^{−|z|²−s²}` in `d = 1`.
fn gaussian_radial(m: usize, lambda: f64) -> f64 {
    let l = lambda.abs();
    PI.sqrt() * (-lambda * lambda / 4.0).exp() * PI * (1.0 - l).powi(m as i32) / (1.0 + l).powi(m as i32 + 1)
}

#[test]
fn radial_path_matches_closed_form_and_matrix_diagonal() {
    let grid = Grid::cube(1, 6.0, 64).unwrap();
    let f = gaussian(&grid);
    let lg = LambdaGrid::custom(1, vec![-2.0, -0.5, 0.3, 1.0, 3.0], vec![1.0; 5]).unwrap();
    let r = gft_radial(&f, &lg, 12).unwrap();
    let full = gft(&f, &lg, 12).unwrap();
    for (k, &lambda) in lg.nodes.iter().enumerate() {
        for m in 0..=12 {
            let exact = gaussian_radial(m, lambda);
            assert!((r.table[k][m].re - exact).abs() < 1e-6, "λ={lambda} m={m}");
            assert!((full.matrices[k][(m, m)] - r.table[k][m]).norm() < 1e-6, "diag λ={lambda} m={m}");
        }
        let mut off: f64 = 0.0;
        for a in 0..13 {
            for b in 0..13 {
                if a != b {
                    off = off.max(full.matrices[k][(a, b)].norm());
                }
            }
        }
        assert!(off < 1e-8, "off-diagonal {off} at λ={lambda}");
    }
}

#[test]
fn generic_and_fast_transforms_agree() {
    let grid = Grid::new(1, [4.5, 4.5, 4.5], [49, 49, 37]).unwrap();
    let f = GridFunction::from_fn(&grid, |w| {
        Complex64::new(1.0 + w.x[0] - 0.5 * w.y[0] * w.s, 0.2 * w.s) * (-w.z_norm_sqr() - w.s * w.s).exp()
    });
    let lg = LambdaGrid::custom(1, vec![-1.0, 0.4, 1.5], vec![1.0; 3]).unwrap();
    let a = gft_fast(&f, &lg, 6).unwrap();
    let b = gft_generic(&f, &lg, 6).unwrap();
    for k in 0..3 {
        let diff = (&a.matrices[k] - &b.matrices[k]).norm();
        println!("fast vs generic k={k}: {diff:.3e}");
        assert!(diff < 1e-4 * b.matrices[k].norm(), "k={k} diff={diff}");
    }
}

#[test]
fn plancherel_and_inversion_on_gaussian() {
    let grid = Grid::cube(1, 6.0, 64).unwrap();
    let f = gaussian(&grid);
    let lg = LambdaGrid::standard(1);
    let spec = gft(&f, &lg, 32).unwrap();
    let exact = (PI / 2.0).powf(1.5);
    let defect = (spec.norm_sqr() - exact).abs() / exact;
    println!("plancherel defect {defect:.3e}");
    assert!(defect < 2e-2);
    let back = inverse_gft(&spec, &grid).unwrap();
    let sup = back.sub(&f).unwrap().sup_norm() / f.sup_norm();
    println!("round trip sup rel {sup:.3e}");
    assert!(sup < 5e-2);
    let radial = gft_radial(&f, &lg, 32).unwrap();
    let rb = inverse_gft_radial(&radial, &grid).unwrap();
    let dual = rb.sub(&back).unwrap().sup_norm() / f.sup_norm();
    println!("radial vs trace inverse {dual:.3e}");
    assert!(dual < 1e-4);
}

#[test]
fn zero_in_zero_out() {
    let grid = Grid::cube(1, 2.0, 9).unwrap();
    let lg = LambdaGrid::geometric(1, 8, 0.1, 2.0).unwrap();
    let z = GridFunction::zeros(&grid);
    let spec = gft(&z, &lg, 4).unwrap();
    assert!(spec.matrices.iter().all(|m| m.norm() == 0.0));
    assert!(inverse_gft(&spec, &grid).unwrap().sup_norm() == 0.0);
}

#[test]
fn spectral_derivatives_match_finite_differences() {
    let grid = Grid::cube(1, 5.0, 48).unwrap();
    let f = GridFunction::from_fn(&grid, |w| {
        Complex64::new((-w.z_norm_sqr() - w.s * w.s).exp() * (1.0 + 0.5 * w.x[0]), 0.0)
    });
    let lg = LambdaGrid::geometric(1, 48, 1e-2, 6.0).unwrap();
    let spec = gft(&f, &lg, 24).unwrap();
    let cases = [
        (SpectralOp::S, apply_vector_field(VectorField::S, &f).unwrap()),
        (SpectralOp::Z(0), apply_vector_field(VectorField::Z(0), &f).unwrap()),
        (SpectralOp::Zbar(0), apply_vector_field(VectorField::Zbar(0), &f).unwrap()),
        (SpectralOp::MinusLaplacian, kohn_laplacian(&f).unwrap().scale(Complex64::new(-1.0, 0.0))),
    ];
    for (op, fd) in cases {
        let lhs = gft(&fd, &lg, 24).unwrap();
        let rhs = spectral_derivative(&spec, op).unwrap();
        let err = lhs.sub(&rhs).unwrap().norm_sqr().sqrt() / lhs.norm_sqr().sqrt();
        println!("{op:?}: {err:.3e}");
        assert!(err < 5e-2, "{op:?}: {err}");
    }
    let id = spectral_derivative(&spec, SpectralOp::HomogeneousPower(0.0)).unwrap();
    assert_eq!(id, spec);
}

#[test]
fn weight_relation_matches_direct_transform_for_both_signs() {
    let grid = Grid::cube(1, 6.0, 64).unwrap();
    let f = gaussian(&grid);
    let g = GridFunction::from_fn(&grid, |w| {
        Complex64::new(-w.z_norm_sqr(), w.s) * (-w.z_norm_sqr() - w.s * w.s).exp()
    });
    let lg = LambdaGrid::geometric(1, 96, 0.05, 3.0).unwrap();
    let rel_out = radial_weight_relation(&gft_radial(&f, &lg, 10).unwrap()).unwrap();
    let direct = gft_radial(&g, &lg, 10).unwrap();
    let mut worst: f64 = 0.0;
    for k in 1..lg.len() - 1 {
        if lg.nodes[k].signum() != lg.nodes[k - 1].signum() || lg.nodes[k].signum() != lg.nodes[k + 1].signum() {
            continue;
        }
        for m in 0..10 {
            let a = rel_out.table[k][m];
            let b = direct.table[k][m];
            worst = worst.max((a - b).norm() / direct.table[k].iter().map(|v| v.norm()).fold(0.0, f64::max));
        }
    }
    println!("weight relation worst {worst:.3e}");
    assert!(worst < 5e-2);
}

