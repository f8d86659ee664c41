//! The acceptance checks, one per criterion, and the suite runner.

use std::f64::consts::PI;
use std::sync::{Arc, OnceLock};
use std::time::Instant;

use anyhow::{bail, Result};
use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use hphase::fock::{dlambda_matrix, ladder_matrices, op_norm, rep_matrix, CMatrix, TruncatedBasis};
use hphase::fourier::{gft, gft_radial, inverse_gft, inverse_gft_radial, spectral_derivative, LambdaGrid, SpectralFunction, SpectralOp};
use hphase::group::{apply_vector_field, kohn_laplacian, Grid, GridFunction, HeisenbergPoint, VectorField};
use hphase::hpdo::{
    asymptotic_compose, builtin_by_name, commutator_symbols, counterexample_demo, discrete_op_norm, fm_adjoint, fm_compose,
    multiplier_spectral, op_apply, reduce_symbol, HeisenbergSymbol, PhaseFactor, PointFn, SymbolTerm,
};
use hphase::lp::{
    bernstein_fit, bony_decompose, build_partition, flat_seed, ip_compare, lambda_project, lp_project, top_block,
    truncation_decay, BandLimited, RingProfile,
};
use hphase::weyl::{momentum_matrix, moyal_poly, poly_matrix, position_matrix, weyl_quantize, PhaseSymbol, Poly2, WeylGrid};

use crate::config::RunConfig;
use crate::report::{CheckReport, Metric, Relation, Table};

/// Shared inputs, built lazily once per run.
pub struct Context {
    /// Configuration of the run.
    pub cfg: RunConfig,
    fixture: OnceLock<std::result::Result<Fixture, String>>,
}

/// Gaussian `e^{−|z|²−s²}` sampled on the configured grid with its transform.
pub struct Fixture {
    /// Sample grid.
    pub grid: Grid,
    /// λ-grid.
    pub lambda: LambdaGrid,
    /// Samples.
    pub f: GridFunction,
    /// Transform at `N_max`.
    pub spec: SpectralFunction,
}

impl Context {
    /// Context for `cfg`; nothing is computed until a check needs it.
    pub fn new(cfg: RunConfig) -> Self {
        Self { cfg, fixture: OnceLock::new() }
    }

    fn lambda_grid(&self) -> Result<LambdaGrid> {
        Ok(LambdaGrid::geometric(self.cfg.d, self.cfg.lambda_nodes, self.cfg.lambda_min, self.cfg.lambda_max)?)
    }

    /// The Gaussian fixture.
    pub fn fixture(&self) -> Result<&Fixture> {
        let r = self.fixture.get_or_init(|| {
            let build = || -> Result<Fixture> {
                let c = &self.cfg;
                let grid = Grid::cube(c.d, c.half_width, c.points)?;
                let f = GridFunction::from_fn(&grid, |w| C64::new((-w.z_norm_sqr() - w.s * w.s).exp(), 0.0));
                let lambda = self.lambda_grid()?;
                let spec = gft(&f, &lambda, c.n_max)?;
                Ok(Fixture { grid, lambda, f, spec })
            };
            build().map_err(|e| format!("{e:#}"))
        });
        r.as_ref().map_err(|e| anyhow::anyhow!("fixture: {e}"))
    }

    fn rng(&self, salt: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.cfg.seed ^ salt.wrapping_mul(0x9E37_79B9_7F4A_7C15))
    }
}

/// Metrics and table collected by a check body.
pub struct Outcome {
    check: &'static str,
    metrics: Vec<Metric>,
    table: Table,
}

impl Outcome {
    fn new(check: &'static str, columns: &[&str]) -> Self {
        Self { check, metrics: Vec::new(), table: Table::new(columns) }
    }

    fn at_most(&mut self, ctx: &Context, name: &str, value: f64, default: f64) {
        let tol = ctx.cfg.tol(self.check, name, default);
        self.metrics.push(Metric { name: name.into(), value, tolerance: Some(tol), relation: Relation::AtMost, passed: value <= tol });
    }

    fn at_least(&mut self, ctx: &Context, name: &str, value: f64, default: f64) {
        let tol = ctx.cfg.tol(self.check, name, default);
        self.metrics.push(Metric { name: name.into(), value, tolerance: Some(tol), relation: Relation::AtLeast, passed: value >= tol });
    }

    fn holds(&mut self, name: &str, ok: bool) {
        self.metrics.push(Metric {
            name: name.into(),
            value: if ok { 1.0 } else { 0.0 },
            tolerance: None,
            relation: Relation::Holds,
            passed: ok,
        });
    }

    fn info(&mut self, name: &str, value: f64) {
        self.metrics.push(Metric { name: name.into(), value, tolerance: None, relation: Relation::Info, passed: true });
    }

    fn row(&mut self, row: Vec<f64>) {
        self.table.push(row);
    }
}

type Body = fn(&Context) -> Result<Outcome>;

/// A registered check.
pub struct Check {
    /// Name used on the command line.
    pub name: &'static str,
    /// Acceptance criterion number.
    pub criterion: u8,
    /// What is verified.
    pub summary: &'static str,
    /// Columns of the check's CSV.
    pub columns: &'static [&'static str],
    run: Body,
}

/// All checks in criterion order.
pub fn registry() -> &'static [Check] {
    static REG: [Check; 19] = [
        Check { name: "group-axioms", criterion: 1, summary: "associativity, identity and inverse on seeded triples", columns: &["property", "max_error"], run: group_axioms },
        Check { name: "representation", criterion: 2, summary: "M(w)M(w') = M(w·w') at N_max = 16", columns: &["lambda", "pair", "op_norm_error"], run: representation },
        Check { name: "ladder", criterion: 3, summary: "ladder adjoints and the spectral law of D_λ", columns: &["lambda", "adjoint_error", "spectral_error", "literal_sign_residual"], run: ladder },
        Check { name: "plancherel", criterion: 4, summary: "Plancherel defect on a Gaussian and its refinement order", columns: &["n_max", "lambda_min", "defect"], run: plancherel },
        Check { name: "inversion", criterion: 5, summary: "inverse transform round trip and the radial fast path", columns: &["quantity", "value"], run: inversion },
        Check { name: "mehler", criterion: 6, summary: "Mehler heat symbol diagonals", columns: &["t", "n", "error"], run: mehler },
        Check { name: "moyal", criterion: 7, summary: "exact Moyal products against operator composition", columns: &["case", "error"], run: moyal },
        Check { name: "hpdo-symbols", criterion: 8, summary: "Op of the Z, S and −Δ symbols on a Gaussian", columns: &["field", "relative_error"], run: hpdo_symbols },
        Check { name: "hpdo-adjoint", criterion: 9, summary: "multiplier adjoint duality and Op(iλ)² = Op(−λ²)", columns: &["trial", "adjoint_defect"], run: hpdo_adjoint },
        Check { name: "hpdo-commutator", criterion: 10, summary: "[Z_1, Op(a)] against Op(b_1)", columns: &["quantity", "relative_error"], run: hpdo_commutator },
        Check { name: "hpdo-leibniz", criterion: 11, summary: "asymptotic composition of (1/i)Z_1 with b(w)", columns: &["sample", "error"], run: hpdo_leibniz },
        Check { name: "lp-partition", criterion: 12, summary: "dyadic partition of unity, ring disjointness, square sums", columns: &["p", "overlap_with_p_plus_2"], run: lp_partition },
        Check { name: "lp-orthogonality", criterion: 13, summary: "Δ_pΔ_q = 0, Λ quasi-orthogonality, norm equivalence", columns: &["family", "norm_ratio"], run: lp_orthogonality },
        Check { name: "lp-bernstein", criterion: 14, summary: "Bernstein exponent for one Z-derivative", columns: &["p", "z_ratio", "sup_ratio"], run: lp_bernstein },
        Check { name: "lp-decay", criterion: 15, summary: "off-diagonal decay of Δ_q Op(a_p) and the I_p comparison", columns: &["kind", "index", "value"], run: lp_decay },
        Check { name: "lp-bony", criterion: 16, summary: "Bony reconstruction of band-limited products", columns: &["case", "defect"], run: lp_bony },
        Check { name: "reduced-symbols", criterion: 17, summary: "reduced-symbol coefficient decay and reconstruction", columns: &["k", "envelope"], run: reduced_symbols },
        Check { name: "hpdo-norm-stability", criterion: 18, summary: "order-0 operator norms as N_max doubles", columns: &["symbol", "norm_16", "norm_32"], run: hpdo_norm_stability },
        Check { name: "counterexample", criterion: 19, summary: "growth of s^N Op(a)f for a non-smooth symbol", columns: &["s_window", "sup"], run: counterexample },
    ];
    &REG
}

/// Check by name.
pub fn find(name: &str) -> Option<&'static Check> {
    registry().iter().find(|c| c.name == name)
}

/// Shell-style match supporting `*`.
pub fn matches(pattern: &str, name: &str) -> bool {
    let parts: Vec<&str> = pattern.split('*').collect();
    if parts.len() == 1 {
        return pattern == name;
    }
    let mut rest = name;
    for (i, part) in parts.iter().enumerate() {
        if i == 0 {
            match rest.strip_prefix(part) {
                Some(r) => rest = r,
                None => return false,
            }
        } else if i == parts.len() - 1 {
            return rest.ends_with(part);
        } else {
            match rest.find(part) {
                Some(at) => rest = &rest[at + part.len()..],
                None => return false,
            }
        }
    }
    true
}

/// Runs one check; errors inside the body become a failing report.
pub fn run_check(check: &Check, ctx: &Context) -> CheckReport {
    let t0 = Instant::now();
    let (metrics, table, error) = match (check.run)(ctx) {
        Ok(o) => (o.metrics, o.table, None),
        Err(e) => (Vec::new(), Table::new(check.columns), Some(format!("{e:#}"))),
    };
    let passed = error.is_none() && !metrics.is_empty() && metrics.iter().all(|m| m.passed);
    CheckReport {
        name: check.name.into(),
        criterion: check.criterion,
        passed,
        metrics,
        error,
        runtime_s: t0.elapsed().as_secs_f64(),
        config_hash: ctx.cfg.hash(),
        seed: ctx.cfg.seed,
        table,
    }
}

/// Runs every check matching `filter` in a work pool; reports in criterion order.
pub fn run_suite(filter: &str, ctx: &Context) -> Vec<CheckReport> {
    let selected: Vec<&Check> = registry().iter().filter(|c| matches(filter, c.name)).collect();
    let mut out: Vec<CheckReport> = selected.par_iter().map(|c| run_check(c, ctx)).collect();
    out.sort_by_key(|r| r.criterion);
    out
}

// ---------------------------------------------------------------------------
// helpers
// ---------------------------------------------------------------------------

fn rel_l2(a: &GridFunction, b: &GridFunction) -> Result<f64> {
    Ok(a.sub(b)?.l2_norm() / b.l2_norm())
}

fn max_abs(m: &CMatrix) -> f64 {
    m.iter().map(|v| v.norm()).fold(0.0, f64::max)
}

fn random_point(rng: &mut ChaCha8Rng, r: f64) -> HeisenbergPoint {
    HeisenbergPoint::new1(rng.gen_range(-r..r), rng.gen_range(-r..r), rng.gen_range(-r..r))
}

fn point_diff(a: &HeisenbergPoint, b: &HeisenbergPoint) -> f64 {
    let xy = a.x.iter().zip(&b.x).chain(a.y.iter().zip(&b.y)).map(|(u, v)| (u - v).abs()).fold(0.0, f64::max);
    xy.max((a.s - b.s).abs())
}

fn gaussian_phase() -> PhaseSymbol {
    PhaseSymbol::general_with_order(|x, y| C64::new(1.0 + 0.5 * x, 0.3 * y) * (-(x * x + y * y)).exp(), f64::NEG_INFINITY)
}

fn bump_w() -> PointFn {
    Arc::new(|w: &HeisenbergPoint| C64::new(1.0 + 0.4 * w.x[0], -0.3 * w.y[0]) * (-(w.z_norm_sqr()) / 3.0 - w.s * w.s / 6.0).exp())
}

fn random_spectral(rng: &mut ChaCha8Rng, grid: &LambdaGrid, n_max: usize) -> Result<SpectralFunction> {
    let n = n_max + 1;
    let mats = grid
        .nodes
        .iter()
        .map(|_| {
            CMatrix::from_fn(n, n, |r, c| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)) * (-0.2 * (r + c) as f64).exp())
        })
        .collect();
    Ok(SpectralFunction::new(grid.clone(), n_max, mats)?)
}

fn max_entry(f: &SpectralFunction) -> f64 {
    f.matrices.iter().map(max_abs).fold(0.0, f64::max)
}

// ---------------------------------------------------------------------------
// criteria
// ---------------------------------------------------------------------------

fn group_axioms(ctx: &Context) -> Result<Outcome> {
    let t0 = Instant::now();
    let mut o = Outcome::new("group-axioms", &["property", "max_error"]);
    let mut rng = ctx.rng(1);
    let e = HeisenbergPoint::origin(1);
    let (mut assoc, mut ident, mut inv) = (0.0f64, 0.0f64, 0.0f64);
    for _ in 0..1000 {
        let (a, b, c) = (random_point(&mut rng, 5.0), random_point(&mut rng, 5.0), random_point(&mut rng, 5.0));
        assoc = assoc.max(point_diff(&a.mul(&b).mul(&c), &a.mul(&b.mul(&c))));
        ident = ident.max(point_diff(&a.mul(&e), &a)).max(point_diff(&e.mul(&a), &a));
        inv = inv.max(point_diff(&a.mul(&a.inv()), &e)).max(point_diff(&a.inv().mul(&a), &e));
    }
    let secs = t0.elapsed().as_secs_f64();
    o.at_most(ctx, "associativity", assoc, 1e-12);
    o.at_most(ctx, "identity", ident, 1e-12);
    o.at_most(ctx, "inverse", inv, 1e-12);
    o.at_most(ctx, "seconds", secs, 1.0);
    for (i, v) in [assoc, ident, inv].into_iter().enumerate() {
        o.row(vec![i as f64, v]);
    }
    Ok(o)
}

fn representation(ctx: &Context) -> Result<Outcome> {
    let mut o = Outcome::new("representation", &["lambda", "pair", "op_norm_error"]);
    let n = 16;
    let pad = n + 48;
    let mut rng = ctx.rng(2);
    let pairs: Vec<(HeisenbergPoint, HeisenbergPoint)> = (0..50)
        .map(|_| {
            let mut draw = || loop {
                let w = random_point(&mut rng, 1.0);
                if w.norm() <= 1.0 {
                    return w;
                }
            };
            (draw(), draw())
        })
        .collect();
    let mut worst: f64 = 0.0;
    for lambda in [-2.0, -1.0, -0.5, 0.5, 1.0, 2.0] {
        let small = TruncatedBasis::new(1, n, lambda)?;
        let big = TruncatedBasis::new(1, pad, lambda)?;
        let errs = pairs
            .par_iter()
            .map(|(w, w2)| {
                let prod = rep_matrix(w, &big)?.compose(&rep_matrix(w2, &big)?);
                let direct = rep_matrix(&w.mul(w2), &small)?;
                Ok(op_norm(&(prod.block(n + 1) - direct.entries)))
            })
            .collect::<Result<Vec<f64>>>()?;
        for (i, e) in errs.iter().enumerate() {
            o.row(vec![lambda, i as f64, *e]);
            worst = worst.max(*e);
        }
    }
    o.at_most(ctx, "max_op_norm_error", worst, 1e-6);
    Ok(o)
}

fn ladder(ctx: &Context) -> Result<Outcome> {
    let mut o = Outcome::new("ladder", &["lambda", "adjoint_error", "spectral_error", "literal_sign_residual"]);
    let (mut adj, mut spec, mut literal) = (0.0f64, 0.0f64, 0.0f64);
    let i = C64::new(0.0, 1.0);
    for lambda in [-2.0, -1.0, -0.5, 0.5, 1.0, 2.0] {
        let b = TruncatedBasis::new(ctx.cfg.d, ctx.cfg.n_max, lambda)?;
        let k = b.interior_len(2);
        let mut sum = CMatrix::zeros(b.dim(), b.dim());
        let mut a_err: f64 = 0.0;
        for (q, qb) in ladder_matrices(&b) {
            let lhs = (&q.entries / i).adjoint();
            a_err = a_err.max(max_abs(&(lhs - &qb.entries / i)));
            sum += (&q.entries * &qb.entries + &qb.entries * &q.entries) * C64::new(2.0, 0.0);
        }
        let d = dlambda_matrix(&b).entries;
        let s_err = max_abs(&(-&sum - &d).view((0, 0), (k, k)).into_owned());
        let lit = max_abs(&(&sum - &d).view((0, 0), (k, k)).into_owned());
        o.row(vec![lambda, a_err, s_err, lit]);
        adj = adj.max(a_err);
        spec = spec.max(s_err);
        literal = literal.max(lit);
    }
    o.at_most(ctx, "adjoint", adj, 1e-12);
    o.at_most(ctx, "spectral_law", spec, 1e-12);
    o.info("literal_sign_residual", literal);
    Ok(o)
}

fn plancherel(ctx: &Context) -> Result<Outcome> {
    let mut o = Outcome::new("plancherel", &["n_max", "lambda_min", "defect"]);
    let fx = ctx.fixture()?;
    let exact = (PI / 2.0).powf(1.5) * (PI / 2.0).powf(ctx.cfg.d as f64 - 1.0);
    let d1 = (fx.spec.norm_sqr() - exact).abs() / exact;
    o.row(vec![ctx.cfg.n_max as f64, ctx.cfg.lambda_min, d1]);
    // refinement: twice the Fock truncation and half the λ floor
    let fine = LambdaGrid::geometric(ctx.cfg.d, ctx.cfg.lambda_nodes, ctx.cfg.lambda_min / 2.0, ctx.cfg.lambda_max)?;
    let spec2 = gft(&fx.f, &fine, 2 * ctx.cfg.n_max)?;
    let d2 = (spec2.norm_sqr() - exact).abs() / exact;
    o.row(vec![(2 * ctx.cfg.n_max) as f64, ctx.cfg.lambda_min / 2.0, d2]);
    o.at_most(ctx, "defect", d1, 2e-2);
    o.info("refined_defect", d2);
    o.at_least(ctx, "refinement_order", (d1 / d2).log2(), 0.9);
    Ok(o)
}

fn inversion(ctx: &Context) -> Result<Outcome> {
    let mut o = Outcome::new("inversion", &["quantity", "value"]);
    let fx = ctx.fixture()?;
    let back = inverse_gft(&fx.spec, &fx.grid)?;
    let sup = back.sub(&fx.f)?.sup_norm() / fx.f.sup_norm();
    let radial = gft_radial(&fx.f, &fx.lambda, ctx.cfg.n_max)?;
    let rb = inverse_gft_radial(&radial, &fx.grid)?;
    let dual = rb.sub(&back)?.sup_norm() / fx.f.sup_norm();
    o.row(vec![0.0, sup]);
    o.row(vec![1.0, dual]);
    o.at_most(ctx, "round_trip_sup", sup, 5e-2);
    o.at_most(ctx, "radial_vs_trace", dual, 1e-4);
    Ok(o)
}

fn mehler(ctx: &Context) -> Result<Outcome> {
    let mut o = Outcome::new("mehler", &["t", "n", "error"]);
    let g = WeylGrid::centered(241, 12.0, 512)?;
    let mut worst: f64 = 0.0;
    for t in [0.05_f64, 0.1, 0.5] {
        let th = t.tanh();
        let a = PhaseSymbol::general(move |x, y| C64::new((-(x * x + y * y) * th).exp(), 0.0));
        let m = weyl_quantize(&a, &g)?.hermite_matrix(10);
        for n in 0..=10 {
            let e = (m[(n, n)] / t.cosh() - C64::new((-t * (2.0 * n as f64 + 1.0)).exp(), 0.0)).norm();
            o.row(vec![t, n as f64, e]);
            worst = worst.max(e);
        }
    }
    o.at_most(ctx, "max_diagonal_error", worst, 1e-8);
    Ok(o)
}

fn moyal(ctx: &Context) -> Result<Outcome> {
    let mut o = Outcome::new("moyal", &["case", "error"]);
    let (pad, n) = (30, 20);
    let c = |re: f64| C64::new(re, 0.0);
    let xi = position_matrix(pad);
    let eta = momentum_matrix(pad);
    let xe = moyal_poly(&Poly2::xi(), &Poly2::eta());
    let expect = Poly2::monomial(1, 1, c(1.0)).add(&Poly2::constant(C64::new(0.0, 0.5)));
    let sym1 = xe.max_coeff_diff(&expect);
    let op1 = max_abs(&(poly_matrix(&xe, n) - (&xi * &eta).view((0, 0), (n + 1, n + 1)).into_owned()));
    let h = Poly2::harmonic();
    let hh = moyal_poly(&h, &h);
    let sym2 = hh.max_coeff_diff(&h.mul(&h).sub(&Poly2::constant(c(1.0))));
    let hm = &xi * &xi + &eta * &eta;
    let op2 = max_abs(&(poly_matrix(&hh, n) - (&hm * &hm).view((0, 0), (n + 1, n + 1)).into_owned()));
    // associativity on seeded integer polynomials of degree ≤ 3
    let mut rng = ctx.rng(7);
    let poly = |rng: &mut ChaCha8Rng| {
        let mut p = Poly2::zero();
        for i in 0..=3u32 {
            for j in 0..=(3 - i) {
                p = p.add(&Poly2::monomial(i, j, C64::new(rng.gen_range(-3..=3) as f64, rng.gen_range(-3..=3) as f64)));
            }
        }
        p
    };
    let mut assoc: f64 = 0.0;
    for _ in 0..50 {
        let (a, b, cc) = (poly(&mut rng), poly(&mut rng), poly(&mut rng));
        assoc = assoc.max(moyal_poly(&moyal_poly(&a, &b), &cc).max_coeff_diff(&moyal_poly(&a, &moyal_poly(&b, &cc))));
    }
    for (i, v) in [sym1, op1, sym2, op2, assoc].into_iter().enumerate() {
        o.row(vec![i as f64, v]);
    }
    o.at_most(ctx, "xi_eta_symbol", sym1, 1e-10);
    o.at_most(ctx, "xi_eta_operator", op1, 1e-10);
    o.at_most(ctx, "h_h_symbol", sym2, 1e-10);
    o.at_most(ctx, "h_h_operator", op2, 1e-10);
    o.at_most(ctx, "associativity", assoc, 1e-12);
    Ok(o)
}

fn hpdo_symbols(ctx: &Context) -> Result<Outcome> {
    let mut o = Outcome::new("hpdo-symbols", &["field", "relative_error"]);
    let fx = ctx.fixture()?;
    let minus_i = C64::new(0.0, -1.0);
    let cases = [
        ("Z1", apply_vector_field(VectorField::Z(0), &fx.f)?.scale(minus_i)),
        ("S", apply_vector_field(VectorField::S, &fx.f)?),
        ("minusLaplacian", kohn_laplacian(&fx.f)?.scale(C64::new(-1.0, 0.0))),
    ];
    for (i, (name, exact)) in cases.iter().enumerate() {
        let got = op_apply(&builtin_by_name(name)?, &fx.spec, &fx.grid)?;
        let err = rel_l2(&got, exact)?;
        o.row(vec![i as f64, err]);
        o.at_most(ctx, name, err, 5e-2);
    }
    Ok(o)
}

fn hpdo_adjoint(ctx: &Context) -> Result<Outcome> {
    let mut o = Outcome::new("hpdo-adjoint", &["trial", "adjoint_defect"]);
    let mut rng = ctx.rng(9);
    let grid = LambdaGrid::geometric(1, 24, 0.05, 6.0)?;
    let n_max = 20;
    let a = HeisenbergSymbol::separable(
        "mult",
        0.0,
        vec![
            SymbolTerm::multiplier(|l: f64| C64::new((-l * l / 8.0).exp(), 0.3 * l), gaussian_phase()),
            SymbolTerm::multiplier(|l: f64| C64::new(0.0, l.abs().sqrt()), PhaseSymbol::Poly(Poly2::xi())),
        ],
    );
    let abar = fm_adjoint(&a)?;
    let mut worst: f64 = 0.0;
    for t in 0..5 {
        let f = random_spectral(&mut rng, &grid, n_max)?;
        let g = random_spectral(&mut rng, &grid, n_max)?;
        let lhs = multiplier_spectral(&a, &f)?.inner(&g)?;
        let rhs = f.inner(&multiplier_spectral(&abar, &g)?)?;
        let d = (lhs - rhs).norm() / (f.norm_sqr().sqrt() * g.norm_sqr().sqrt());
        o.row(vec![t as f64, d]);
        worst = worst.max(d);
    }
    let il = HeisenbergSymbol::lambda_only("iλ", 2.0, |l| C64::new(0.0, l));
    let sq = fm_compose(&il, &il)?;
    let minus = HeisenbergSymbol::lambda_only("-λ²", 4.0, |l| C64::new(-l * l, 0.0));
    let f = random_spectral(&mut rng, &grid, n_max)?;
    let diff = multiplier_spectral(&sq, &f)?.sub(&multiplier_spectral(&minus, &f)?)?;
    let comp = diff.norm_sqr().sqrt() / f.norm_sqr().sqrt();
    o.at_most(ctx, "adjoint_duality", worst, 1e-6);
    o.at_most(ctx, "composition", comp, 1e-10);
    Ok(o)
}

fn hpdo_commutator(ctx: &Context) -> Result<Outcome> {
    let mut o = Outcome::new("hpdo-commutator", &["quantity", "relative_error"]);
    let fx = ctx.fixture()?;
    let a = HeisenbergSymbol::separable(
        "b·χ·g",
        0.0,
        vec![SymbolTerm::new(Some(bump_w()), Arc::new(|l: f64| C64::new((-l * l / 8.0).exp(), 0.0)), PhaseFactor::Fixed(gaussian_phase()))],
    );
    let cs = commutator_symbols(0, &a)?;
    let opf = op_apply(&a, &fx.spec, &fx.grid)?;
    let z_opf = apply_vector_field(VectorField::Z(0), &opf)?;
    let zf = spectral_derivative(&fx.spec, SpectralOp::Z(0))?;
    let lhs = z_opf.sub(&op_apply(&a, &zf, &fx.grid)?)?;
    let rhs = op_apply(&cs.b1, &fx.spec, &fx.grid)?;
    let err = rel_l2(&rhs, &lhs)?;
    o.row(vec![0.0, err]);
    o.at_most(ctx, "z_commutator", err, 5e-2);
    Ok(o)
}

fn hpdo_leibniz(ctx: &Context) -> Result<Outcome> {
    let mut o = Outcome::new("hpdo-leibniz", &["sample", "error"]);
    let az = builtin_by_name("Z1")?;
    let b = bump_w();
    let total = asymptotic_compose(&az, &HeisenbergSymbol::multiplication("b", b.clone()), 2)?.total();
    // Z = ½(∂x − i∂y) + (y + ix)∂s applied to b = (1 + 0.4x − 0.3iy) e^{−|z|²/3 − s²/6}
    let zb = |w: &HeisenbergPoint| {
        let (x, y, s) = (w.x[0], w.y[0], w.s);
        let e = (-(x * x + y * y) / 3.0 - s * s / 6.0).exp();
        let p = C64::new(1.0 + 0.4 * x, -0.3 * y);
        let bx = (C64::new(0.4, 0.0) + p * (-2.0 * x / 3.0)) * e;
        let by = (C64::new(0.0, -0.3) + p * (-2.0 * y / 3.0)) * e;
        (bx - C64::new(0.0, 1.0) * by) * 0.5 + C64::new(y, x) * (p * (-s / 3.0) * e)
    };
    let mut rng = ctx.rng(11);
    let mut worst: f64 = 0.0;
    for i in 0..100 {
        let w = random_point(&mut rng, 2.0);
        let l: f64 = rng.gen_range(0.1..4.0) * if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
        let (x, y) = (rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0));
        let exact = b(&w) * az.eval(&w, l, x, y) + zb(&w) * C64::new(0.0, -1.0);
        let e = (total.eval(&w, l, x, y) - exact).norm();
        o.row(vec![i as f64, e]);
        worst = worst.max(e);
    }
    o.at_most(ctx, "max_error", worst, 1e-6);
    Ok(o)
}

fn lp_partition(ctx: &Context) -> Result<Outcome> {
    let mut o = Outcome::new("lp-partition", &["p", "overlap_with_p_plus_2"]);
    let part = build_partition();
    let mut disjoint = true;
    for p in 0..8 {
        let overlap = (0..=40_000)
            .map(|i| 4f64.powi(p) * 40.0 * i as f64 / 40_000.0)
            .map(|t| (part.block(p, t) * part.block(p + 2, t)).abs())
            .fold(0.0, f64::max);
        o.row(vec![p as f64, overlap]);
        disjoint &= overlap == 0.0 && part.disjoint(p, p + 2);
    }
    o.at_most(ctx, "unity_defect", part.unity_defect, 1e-12);
    o.holds("disjoint_at_distance_2", disjoint);
    o.info("square_sum_lower", part.square_sum_min);
    o.info("square_sum_upper", part.square_sum_max);
    Ok(o)
}

fn lp_orthogonality(ctx: &Context) -> Result<Outcome> {
    let mut o = Outcome::new("lp-orthogonality", &["family", "norm_ratio"]);
    let part = build_partition();
    let mut rng = ctx.rng(13);
    let grid = LambdaGrid::geometric(1, 32, 0.05, 8.0)?;
    let f = random_spectral(&mut rng, &grid, 12)?;
    let top = top_block(&f);
    let mut delta_zero = true;
    for p in -1..=top {
        for q in -1..=top {
            if (p - q).abs() >= 2 {
                delta_zero &= max_entry(&lp_project(&part, &lp_project(&part, &f, q), p)) == 0.0;
            }
        }
    }
    let mut lambda_zero = true;
    let r_max: i32 = 4;
    for p in -1..=r_max {
        for q in -1..=r_max {
            if (p - q).unsigned_abs() as usize >= part.n0 {
                lambda_zero &= max_entry(&lambda_project(&part, &lambda_project(&part, &f, q), p)) == 0.0;
            }
        }
    }
    // ‖f‖² / Σ_r ‖Λ_r f‖² over families with mass at different λ-scales
    let wide = LambdaGrid::geometric(1, 64, 1e-3, 64.0)?;
    let (mut c_lo, mut c_hi) = (f64::INFINITY, 0.0f64);
    for (i, scale) in [0.05, 0.5, 2.0, 8.0, 20.0].iter().enumerate() {
        let g = random_spectral(&mut rng, &wide, 8)?.scale_lambda(|l| C64::new((-(l.abs() / scale - 1.0).powi(2)).exp(), 0.0));
        let total = g.norm_sqr();
        let squares: f64 = (-1..=6).map(|r| lambda_project(&part, &g, r).norm_sqr()).sum();
        let ratio = total / squares;
        o.row(vec![i as f64, ratio]);
        c_lo = c_lo.min(ratio);
        c_hi = c_hi.max(ratio);
    }
    o.holds("delta_disjoint", delta_zero);
    o.holds("lambda_disjoint", lambda_zero);
    o.info("n0", part.n0 as f64);
    o.at_least(ctx, "c1", c_lo, 0.25);
    o.at_most(ctx, "c2", c_hi, 4.0);
    Ok(o)
}

fn lp_bernstein(ctx: &Context) -> Result<Outcome> {
    let mut o = Outcome::new("lp-bernstein", &["p", "z_ratio", "sup_ratio"]);
    let part = build_partition();
    let grid = LambdaGrid::geometric(1, 96, 1e-3, 4096.0)?;
    let seed = flat_seed(&grid, 32);
    let (z_rows, z_slope) = bernstein_fit(&part, &seed, 1..=5, &[SpectralOp::Z(0)], 2.0, 2.0)?;
    let (s_rows, s_slope) = bernstein_fit(&part, &seed, 1..=5, &[], 2.0, f64::INFINITY)?;
    for ((p, z), (_, s)) in z_rows.iter().zip(&s_rows) {
        o.row(vec![*p as f64, *z, *s]);
    }
    o.at_most(ctx, "z_exponent_error", (z_slope - 1.0).abs(), 0.15);
    o.info("z_exponent", z_slope);
    o.info("sup_exponent", s_slope);
    Ok(o)
}

fn lp_decay(ctx: &Context) -> Result<Outcome> {
    let mut o = Outcome::new("lp-decay", &["kind", "index", "value"]);
    let part = build_partition();
    let phi = RingProfile::standard();
    let grid = LambdaGrid::standard(1);
    let p = 4;
    let norms = (0..=4).map(|k| truncation_decay(&part, &phi, p, p - k, &grid, ctx.cfg.n_max)).collect::<hphase::Result<Vec<f64>>>()?;
    for (k, v) in norms.iter().enumerate() {
        o.row(vec![0.0, k as f64, *v]);
    }
    let decreasing = norms.windows(2).all(|w| w[1] < w[0]);
    let x0 = 0.3;
    let errs = (0..4)
        .map(|p| {
            let alpha = 4usize.pow(p as u32 + 1);
            let lambda = x0 * 4f64.powi(p) / (2 * alpha + 1) as f64;
            ip_compare(&phi, p, alpha, lambda).map(|(ip, v)| (ip - v).abs())
        })
        .collect::<hphase::Result<Vec<f64>>>()?;
    let min_ratio = errs.windows(2).map(|w| w[0] / w[1]).fold(f64::INFINITY, f64::min);
    for (p, e) in errs.iter().enumerate() {
        o.row(vec![1.0, p as f64, *e]);
    }
    o.holds("log_norm_strictly_decreasing", decreasing);
    o.at_least(ctx, "ip_error_ratio", min_ratio, 3.0);
    Ok(o)
}

fn lp_bony(ctx: &Context) -> Result<Outcome> {
    let mut o = Outcome::new("lp-bony", &["case", "defect"]);
    let part = build_partition();
    let mut rng = ctx.rng(17);
    let lg = LambdaGrid::geometric(1, 16, 0.05, 4.0)?;
    let target = Grid::cube(1, 3.0, 16)?;
    let mut worst: f64 = 0.0;
    for case in 0..3 {
        let u = random_spectral(&mut rng, &lg, 8)?;
        let v = random_spectral(&mut rng, &lg, 8)?;
        let p_max = top_block(&u) - case;
        let bu = BandLimited::project(&part, &u, p_max, &target)?;
        let bv = BandLimited::project(&part, &v, p_max, &target)?;
        let defect = bony_decompose(&bu, &bv)?.defect()?;
        o.row(vec![case as f64, defect]);
        worst = worst.max(defect);
    }
    o.at_most(ctx, "reconstruction", worst, 1e-12);
    Ok(o)
}

fn reduced_symbols(ctx: &Context) -> Result<Outcome> {
    let mut o = Outcome::new("reduced-symbols", &["k", "envelope"]);
    let w = HeisenbergPoint::origin(1);
    let a = HeisenbergSymbol::general("order0", 0.0, true, |_, l, x, y| {
        let (z1, z2) = (x * l.abs().sqrt(), y * l.abs().sqrt());
        let r = 1.0 + z1 * z1 + z2 * z2;
        C64::new(z1 * z1 / r, z2 / r.sqrt())
    });
    let red = reduce_symbol(&a, &w, 0.7, 8, 4)?;
    for (k, v) in red.envelope().iter().enumerate() {
        o.row(vec![k as f64, *v]);
    }
    let mut rng = ctx.rng(19);
    let pts: Vec<(f64, f64)> = (0..64).map(|_| (rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0))).collect();
    o.at_least(ctx, "decay_exponent", red.tail_decay_exponent(), 4.0);
    o.at_most(ctx, "reconstruction_k8", red.reconstruction_error(&a, &pts), 1e-6);
    Ok(o)
}

fn hpdo_norm_stability(ctx: &Context) -> Result<Outcome> {
    let mut o = Outcome::new("hpdo-norm-stability", &["symbol", "norm_16", "norm_32"]);
    let lg = ctx.lambda_grid()?;
    let z = builtin_by_name("Z1")?;
    let inv = builtin_by_name("besselPower(-1)")?;
    let candidates = [
        builtin_by_name("besselPower(0)")?,
        fm_compose(&inv, &z)?.with_order(0.0),
        HeisenbergSymbol::multiplication("b", bump_w()),
    ];
    let pts: Vec<_> = (0..5).map(|i| HeisenbergPoint::new1(0.3 * i as f64 - 0.6, 0.1 * i as f64, 0.2)).collect();
    let mut worst: f64 = 0.0;
    for (i, a) in candidates.iter().enumerate() {
        let n16 = discrete_op_norm(a, &lg, 16, &pts)?;
        let n32 = discrete_op_norm(a, &lg, 32, &pts)?;
        o.row(vec![i as f64, n16, n32]);
        worst = worst.max((n32 - n16).abs() / n16);
    }
    o.at_most(ctx, "relative_change", worst, 0.1);
    Ok(o)
}

/// Windows `S` of the counterexample demo.
pub const COUNTEREXAMPLE_WINDOWS: [f64; 4] = [5.0, 10.0, 20.0, 40.0];

fn counterexample(_ctx: &Context) -> Result<Outcome> {
    let mut o = Outcome::new("counterexample", &["s_window", "sup"]);
    let k = 1;
    let rows = counterexample_demo(k, 2 * k + 4, &COUNTEREXAMPLE_WINDOWS);
    if rows.len() != COUNTEREXAMPLE_WINDOWS.len() {
        bail!("demo returned {} rows", rows.len());
    }
    for r in &rows {
        o.row(vec![r.s_window, r.sup]);
    }
    let growth = rows.windows(2).map(|w| w[1].sup / w[0].sup).fold(f64::INFINITY, f64::min);
    o.holds("strictly_increasing", rows.windows(2).all(|w| w[1].sup > w[0].sup));
    o.info("min_growth_factor", growth);
    Ok(o)
}
