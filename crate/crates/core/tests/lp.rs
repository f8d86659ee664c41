use std::f64::consts::PI;
use std::sync::Arc;

use hphase::fock::CMatrix;
use hphase::fourier::{spectral_derivative, LambdaGrid, SpectralFunction, SpectralOp};
use hphase::group::{Grid, GridFunction};
use hphase::hpdo::{multiplier_spectral, HeisenbergSymbol, PhaseFactor, SymbolTerm};
use hphase::lp::*;
use hphase::weyl::PhaseSymbol;
use hphase::Error;
use num_complex::Complex64 as C64;

/// Closed-form transform of `e^{−|z|²−s²}` in `d = 1`: diagonal `R_m(λ)`.
fn gaussian_spectral(grid: &LambdaGrid, n_max: usize) -> SpectralFunction {
    let mats = grid
        .nodes
        .iter()
        .map(|&l| {
            let a = l.abs();
            CMatrix::from_fn(n_max + 1, n_max + 1, |i, j| {
                if i != j {
                    return C64::new(0.0, 0.0);
                }
                let r = PI.sqrt() * (-l * l / 4.0).exp() * PI * (1.0 - a).powi(i as i32) / (1.0 + a).powi(i as i32 + 1);
                C64::new(r, 0.0)
            })
        })
        .collect();
    SpectralFunction::new(grid.clone(), n_max, mats).unwrap()
}

/// Dense seeded spectral data with every block populated.
fn dense_spectral(grid: &LambdaGrid, n_max: usize) -> SpectralFunction {
    let mats = grid
        .nodes
        .iter()
        .enumerate()
        .map(|(k, &l)| {
            CMatrix::from_fn(n_max + 1, n_max + 1, |i, j| {
                let t = (k * 31 + i * 7 + j * 13) as f64;
                C64::new(t.sin(), (0.5 * t).cos()) * (-l.abs() / 4.0).exp() / (1.0 + (i + j) as f64)
            })
        })
        .collect();
    SpectralFunction::new(grid.clone(), n_max, mats).unwrap()
}

fn max_entry(f: &SpectralFunction) -> f64 {
    f.matrices.iter().flat_map(|m| m.iter().map(|v| v.norm())).fold(0.0, f64::max)
}

#[test]
fn partition_sums_to_one_with_disjoint_rings() {
    let part = build_partition();
    println!("unity defect {:.3e}, square sums [{:.4}, {:.4}], N0 {}", part.unity_defect, part.square_sum_min, part.square_sum_max, part.n0);
    assert!(part.unity_defect <= 1e-12);
    assert!(part.square_sum_min > 0.0 && part.square_sum_max <= 1.0 + 1e-12);
    assert_eq!(part.n0, 2);
    let sum = |t: f64| part.low(t) + (0..40).map(|p| part.block(p, t)).sum::<f64>();
    assert_eq!(sum(0.0), 1.0);
    assert!((sum(1e6) - 1.0).abs() <= 1e-12);
    for p in 0..8 {
        assert!(part.disjoint(p, p + 2));
        assert!(!part.disjoint(p, p + 1));
        assert_eq!(part.ring_support(p + 2).0, part.ring_support(p).1 * 2.0);
        for i in 0..20_000 {
            let t = 4f64.powi(p) * 40.0 * i as f64 / 20_000.0;
            assert_eq!(part.block(p, t) * part.block(p + 2, t), 0.0, "p={p} τ={t}");
        }
    }
    assert_eq!(part.low(2.0) * part.block(1, 2.0), 0.0);
    assert_eq!(part.psi(0.3), part.low(0.3));
    assert_eq!(part.phi(3.0), part.ring(3.0));
}

#[test]
fn blocks_act_as_diagonals_and_are_almost_orthogonal() {
    let part = build_partition();
    let grid = LambdaGrid::geometric(1, 24, 0.05, 8.0).unwrap();
    let f = dense_spectral(&grid, 12);
    // α = 0 column at λ = 1 is scaled by R*(4^{−p}·4)
    let one = LambdaGrid::custom(1, vec![1.0], vec![1.0]).unwrap();
    let g = dense_spectral(&one, 4);
    for p in -1..3 {
        let b = lp_project(&part, &g, p);
        for i in 0..5 {
            assert_eq!(b.matrices[0][(i, 0)], g.matrices[0][(i, 0)] * part.block(p, 4.0));
        }
    }
    let top = top_block(&f);
    let mut acc = SpectralFunction::zeros(&grid, 12);
    for p in -1..=top + 1 {
        acc = acc.add(&lp_project(&part, &f, p)).unwrap();
        for q in -1..=top + 1 {
            if (p - q).abs() >= 2 {
                let pq = lp_project(&part, &lp_project(&part, &f, q), p);
                assert_eq!(max_entry(&pq), 0.0, "Δ_{p}Δ_{q}");
            }
        }
        let s = low_freq(&part, &f, p + 1);
        let direct = (-1..=p).fold(SpectralFunction::zeros(&grid, 12), |a, q| a.add(&lp_project(&part, &f, q)).unwrap());
        assert!(max_entry(&s.sub(&direct).unwrap()) < 1e-13, "S_{}", p + 1);
    }
    assert!(max_entry(&acc.sub(&f).unwrap()) < 1e-13);
}

#[test]
fn blocks_commute_with_the_laplacian() {
    let part = build_partition();
    let grid = LambdaGrid::geometric(1, 16, 0.05, 8.0).unwrap();
    let f = dense_spectral(&grid, 10);
    for p in -1..4 {
        let a = spectral_derivative(&lp_project(&part, &f, p), SpectralOp::MinusLaplacian).unwrap();
        let b = lp_project(&part, &spectral_derivative(&f, SpectralOp::MinusLaplacian).unwrap(), p);
        assert!(max_entry(&a.sub(&b).unwrap()) <= 1e-12 * max_entry(&a).max(1.0), "p={p}");
        let a = spectral_derivative(&low_freq(&part, &f, p), SpectralOp::MinusLaplacian).unwrap();
        let b = low_freq(&part, &spectral_derivative(&f, SpectralOp::MinusLaplacian).unwrap(), p);
        assert!(max_entry(&a.sub(&b).unwrap()) <= 1e-12 * max_entry(&a).max(1.0), "S p={p}");
    }
}

#[test]
fn lambda_blocks_are_quasi_orthogonal_with_equivalent_norms() {
    let part = build_partition();
    let grid = LambdaGrid::geometric(1, 64, 1e-3, 64.0).unwrap();
    let f = gaussian_spectral(&grid, 16);
    let r_max = 4;
    let blocks: Vec<_> = (-1..=r_max).map(|r| lambda_project(&part, &f, r)).collect();
    for (i, a) in blocks.iter().enumerate() {
        for (j, b) in blocks.iter().enumerate() {
            if (i as i32 - j as i32).unsigned_abs() as usize >= part.n0 {
                let ab = lambda_project(&part, a, j as i32 - 1);
                assert_eq!(max_entry(&ab), 0.0, "Λ_{}Λ_{}", i as i32 - 1, j as i32 - 1);
                assert_eq!(a.inner(b).unwrap(), C64::new(0.0, 0.0));
            }
        }
    }
    let sum = blocks.iter().fold(SpectralFunction::zeros(&grid, 16), |a, b| a.add(b).unwrap());
    assert!(max_entry(&sum.sub(&f).unwrap()) < 1e-14);
    let total = f.norm_sqr();
    let squares: f64 = blocks.iter().map(|b| b.norm_sqr()).sum();
    let c = total / squares;
    println!("‖f‖² / Σ‖Λ_r f‖² = {c:.4}");
    assert!((0.25..=4.0).contains(&c));
    // Λ_r commutes with multipliers in (λ, ξ, η)
    let a = HeisenbergSymbol::multiplier("osc", 0.0, |l: f64| C64::new(1.0 / (1.0 + l * l), 0.0), PhaseSymbol::radial(|r| C64::new((-r).exp(), 0.0)));
    for r in -1..3 {
        let x = multiplier_spectral(&a, &lambda_project(&part, &f, r)).unwrap();
        let y = lambda_project(&part, &multiplier_spectral(&a, &f).unwrap(), r);
        assert!(max_entry(&x.sub(&y).unwrap()) < 1e-14, "r={r}");
    }
}

#[test]
fn besov_norms_on_spectral_data() {
    let part = build_partition();
    let grid = LambdaGrid::standard(1);
    let f = gaussian_spectral(&grid, 32);
    let idx = BesovIndex { s: 0.0, q: 2.0, r: 2.0 };
    let b = besov_norm(&part, &f, idx, top_block(&f), None, 1e-6).unwrap();
    let l2 = f.norm_sqr().sqrt();
    let ratio = b.norm / l2;
    println!("B0_22 / L2 = {ratio:.4}, tail {:.2e}", b.tail);
    assert!(ratio >= part.square_sum_min.sqrt() - 1e-12 && ratio <= 1.0 + 1e-12);
    // zero data
    let z = SpectralFunction::zeros(&grid, 32);
    assert_eq!(besov_norm(&part, &z, idx, 3, None, 1e-6).unwrap().norm, 0.0);
    // single block
    let p0 = 2;
    let single = lp_project(&part, &f, p0);
    let bs = besov_norm(&part, &single, BesovIndex { s: 1.0, q: 2.0, r: f64::INFINITY }, p0 + 3, None, 1e-6).unwrap();
    let max = bs.blocks.iter().cloned().fold(0.0, f64::max);
    assert_eq!(bs.blocks[(p0 + 1) as usize], max);
    for (i, v) in bs.blocks.iter().enumerate() {
        if (i as i32 - 1 - p0).abs() >= 2 {
            assert_eq!(*v, 0.0);
        }
    }
    // too small a p_max leaves a tail
    assert!(matches!(besov_norm(&part, &f, idx, 0, None, 1e-6), Err(Error::UnderResolved(_))));
    assert!(matches!(besov_norm(&part, &f, BesovIndex { s: 0.0, q: 4.0, r: 2.0 }, top_block(&f), None, 1e-6), Err(Error::InvalidInput(_))));
}

#[test]
fn bessel_potential_shifts_besov_regularity() {
    let part = build_partition();
    let grid = LambdaGrid::standard(1);
    let f = dense_spectral(&grid, 24);
    let p_max = top_block(&f);
    let rows: Vec<(f64, f64)> = [0.5, 1.0, -0.5]
        .iter()
        .map(|&rho| {
            let s = 1.0;
            let lhs = besov_norm(&part, &spectral_derivative(&f, SpectralOp::BesselPower(rho)).unwrap(), BesovIndex { s: s - 2.0 * rho, q: 2.0, r: 2.0 }, p_max, None, 1e-8).unwrap().norm;
            let rhs = besov_norm(&part, &f, BesovIndex { s, q: 2.0, r: 2.0 }, p_max, None, 1e-8).unwrap().norm;
            (rho, lhs / rhs)
        })
        .collect();
    println!("(Id−Δ)^ρ Besov ratios {rows:?}");
    for (rho, r) in rows {
        let c = 8f64.powf(2.0 * rho.abs()) * 2.0;
        assert!(r > 1.0 / c && r < c, "ρ={rho} ratio={r}");
    }
}

#[test]
fn block_energy_csv_has_documented_columns() {
    let part = build_partition();
    let grid = LambdaGrid::geometric(1, 16, 0.01, 8.0).unwrap();
    let f = gaussian_spectral(&grid, 12);
    let rows = block_energies(&part, &f, 3);
    let mut buf = Vec::new();
    write_block_energies(&rows, &mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    assert!(text.starts_with("p,l2_norm\n-1,"));
    assert_eq!(text.lines().count(), 6);
    let mut buf = Vec::new();
    write_decay_csv(&[(4, 4, 1.0), (4, 3, 0.5)], &mut buf).unwrap();
    assert!(String::from_utf8(buf).unwrap().starts_with("p,q,norm\n4,4,"));
}

fn small_setup() -> (DyadicPartition, Grid, SpectralFunction, SpectralFunction) {
    let part = build_partition();
    let grid = LambdaGrid::geometric(1, 12, 0.05, 4.0).unwrap();
    let target = Grid::cube(1, 3.0, 10).unwrap();
    let u = dense_spectral(&grid, 6);
    let v = gaussian_spectral(&grid, 6).add(&dense_spectral(&grid, 6).scale_lambda(|l| C64::new(0.0, l))).unwrap();
    (part, target, u, v)
}

#[test]
fn bony_decomposition_reconstructs_the_product() {
    let (part, target, u, v) = small_setup();
    let p_max = top_block(&u);
    let bu = BandLimited::new(&part, &u, p_max, &target).unwrap();
    let bv = BandLimited::new(&part, &v, p_max, &target).unwrap();
    let bony = bony_decompose(&bu, &bv).unwrap();
    let defect = bony.defect().unwrap();
    println!("Bony defect {defect:.3e}");
    assert!(defect <= 1e-12);
    // zero factors
    let z = BandLimited::new(&part, &SpectralFunction::zeros(&u.grid, 6), p_max, &target).unwrap();
    assert_eq!(paraproduct(&z, &bv).unwrap().l2_norm(), 0.0);
    assert_eq!(remainder(&z, &bv).unwrap().l2_norm(), 0.0);
    // band limit is enforced
    assert!(matches!(BandLimited::new(&part, &u, 0, &target), Err(Error::InvalidInput(_))));
    let cut = BandLimited::project(&part, &u, 1, &target).unwrap();
    let b2 = bony_decompose(&cut, &BandLimited::project(&part, &v, 1, &target).unwrap()).unwrap();
    assert!(b2.defect().unwrap() <= 1e-12);
    let other = Grid::cube(1, 2.0, 8).unwrap();
    let bw = BandLimited::new(&part, &v, p_max, &other).unwrap();
    assert!(matches!(paraproduct(&bu, &bw), Err(Error::Incompatible(_))));
}

#[test]
fn bernstein_ratios_grow_with_the_block_scale() {
    let part = build_partition();
    let grid = LambdaGrid::geometric(1, 96, 1e-3, 4096.0).unwrap();
    let seed = flat_seed(&grid, 32);
    let r = bernstein_ratio(&part, &seed, 3, &[], 2.0, 2.0).unwrap();
    assert!((r - 1.0).abs() < 1e-14);
    let (rows, slope) = bernstein_fit(&part, &seed, 1..=5, &[SpectralOp::Z(0)], 2.0, 2.0).unwrap();
    println!("Z ratios {rows:?}, exponent {slope:.4}");
    assert!((slope - 1.0).abs() <= 0.15);
    let (rows, slope) = bernstein_fit(&part, &seed, 1..=5, &[], 2.0, f64::INFINITY).unwrap();
    println!("L∞ ratios {rows:?}, exponent {slope:.4}");
    assert!((slope - 2.0).abs() <= 0.4);
    let narrow = flat_seed(&LambdaGrid::standard(1), 32);
    assert!(matches!(bernstein_ratio(&part, &narrow, 8, &[], 2.0, 2.0), Err(Error::UnderResolved(_))));
}

#[test]
fn lp_phi_is_even_and_tends_to_the_ring() {
    for &rho in &[1.5, 3.0, 5.0] {
        for &mu in &[0.05, 0.2] {
            assert_eq!(lp_phi(mu, rho).unwrap(), lp_phi(-mu, rho).unwrap());
        }
        let errs: Vec<f64> = [0.02, 0.005, 0.00125].iter().map(|&mu| (lp_phi(mu, rho).unwrap().re - ring(rho)).abs()).collect();
        println!("ρ={rho}: |φ(μ,ρ) − R*(ρ)| = {errs:?}");
        assert!(errs[2] < errs[0] && errs[2] < 1e-2);
    }
    assert_eq!(lp_phi(0.0, 3.0).unwrap().re, ring(3.0));
}

#[test]
fn lp_phi_mehler_matches_the_laguerre_sum() {
    for &mu in &[0.05, 0.1] {
        for &rho in &[0.5, 1.5, 3.0, 6.0] {
            let a = lp_phi(mu, rho).unwrap();
            let b = lp_phi_mehler(mu, rho).unwrap();
            println!("μ={mu} ρ={rho}: Laguerre {a:.6} Mehler {b:.6}");
            assert!((a - b).norm() < 1e-6, "μ={mu} ρ={rho}");
        }
    }
}

#[test]
fn lp_symbol_quantizes_to_the_block() {
    let part = build_partition();
    let grid = LambdaGrid::geometric(1, 32, 0.02, 8.0).unwrap();
    let n_max = 16;
    let f = gaussian_spectral(&grid, n_max);
    for p in 0..3 {
        let exact = lp_project(&part, &f, p);
        let via = multiplier_spectral(&lp_symbol(&part, p), &f).unwrap();
        assert!(max_entry(&via.sub(&exact).unwrap()) < 1e-14);
        // quantize the symbol from its phase-space profile alone
        let phase = PhaseFactor::PerLambda(Arc::new(move |l: f64| {
            let mu = 4f64.powi(-p) * l.abs();
            PhaseSymbol::radial(move |x| lp_phi(mu, 4.0 * mu * x).unwrap())
        }));
        let quant = HeisenbergSymbol::separable("profile", 0.0, vec![SymbolTerm::new(None, Arc::new(|_| C64::new(1.0, 0.0)), phase)]);
        let op = multiplier_spectral(&quant, &f).unwrap();
        let rel = op.sub(&exact).unwrap().norm_sqr().sqrt() / exact.norm_sqr().sqrt();
        println!("p={p}: ‖Op(Φ_p)f − Δ_p f‖ / ‖Δ_p f‖ = {rel:.3e}");
        assert!(rel <= 5e-2);
    }
}

#[test]
fn truncation_norms_decay_off_the_diagonal() {
    let part = build_partition();
    let phi = RingProfile::standard();
    let grid = LambdaGrid::standard(1);
    let p = 4;
    let norms: Vec<f64> = (0..=4).map(|k| truncation_decay(&part, &phi, p, p - k, &grid, 32).unwrap()).collect();
    println!("‖Δ_q Op(a_4)‖, q = 4..0: {norms:?}");
    assert!(norms[0] > 0.1, "diagonal block is O(1)");
    for w in norms.windows(2) {
        assert!(w[1] < w[0]);
    }
}

#[test]
fn ip_comparison_error_shrinks_with_p() {
    let phi = RingProfile::standard();
    let x0 = 0.3;
    let errs: Vec<f64> = (0..4)
        .map(|p| {
            let alpha = 4usize.pow(p as u32 + 1);
            let lambda = x0 * 4f64.powi(p) / (2 * alpha + 1) as f64;
            let (ip, v) = ip_compare(&phi, p, alpha, lambda).unwrap();
            assert!((v - phi.eval(x0)).abs() < 1e-12);
            (ip - v).abs()
        })
        .collect();
    println!("|I_p − Φ| = {errs:?}");
    for w in errs.windows(2) {
        assert!(w[0] / w[1] >= 3.0, "ratio {}", w[0] / w[1]);
    }
}

#[test]
fn ring_eigenvalues_match_the_generic_functional() {
    let phi = RingProfile::standard();
    let h = 0.05;
    let eig = ring_eigenvalues(&phi, h, 12);
    for (n, e) in eig.iter().enumerate() {
        let g = hphase::weyl::radial_eigenvalue(&|x: f64| C64::new(phi.eval(h * x), 0.0), n, 1);
        assert!((g.re - e).abs() < 1e-8, "n={n}: {e} vs {}", g.re);
    }
}

#[test]
fn product_estimate_constant_is_stable_under_refinement() {
    // ‖fg‖_{H^s} / (‖f‖_∞ ‖g‖_{H^s}) on a fixed Gaussian family, grid refined
    let part = build_partition();
    let lg = LambdaGrid::geometric(1, 16, 0.05, 6.0).unwrap();
    let consts: Vec<f64> = [16usize, 24, 32]
        .iter()
        .map(|&n| {
            let grid = Grid::cube(1, 4.0, n).unwrap();
            let f = GridFunction::from_fn(&grid, |w| C64::new((-0.5 * w.z_norm_sqr() - 0.3 * w.s * w.s).exp(), 0.0));
            let g = GridFunction::from_fn(&grid, |w| C64::new((1.0 + w.x[0]) * (-w.z_norm_sqr() - w.s * w.s).exp(), 0.0));
            let hs = |h: &GridFunction| {
                let s = hphase::fourier::gft(h, &lg, 10).unwrap();
                besov_norm(&part, &low_freq(&part, &s, 5), BesovIndex { s: 1.0, q: 2.0, r: 2.0 }, 4, None, 1e-8).unwrap().norm
            };
            hs(&f.mul(&g).unwrap()) / (f.lq_norm(f64::INFINITY) * hs(&g))
        })
        .collect();
    println!("product constants {consts:?}");
    assert!((consts[1] / consts[2] - 1.0).abs() < 0.1);
}
