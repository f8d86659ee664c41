//! Weyl quantization on `ℝ`, Moyal calculus and the functional calculus of the
//! harmonic oscillator `H = ξ² − ∂_ξ²`.
//!
//! Conventions:
//! * `op^w(a)u(x) = (2π)^{-1} ∫∫ e^{i(x−y)η} a((x+y)/2, η) u(y) dy dη`;
//! * Hermite matrices are `⟨h_m, op^w(a) h_n⟩` in the orthonormal Hermite basis,
//!   on which `op^w(ξ² + η²)` acts as `2n + 1`;
//! * `a # b` is the symbol of `op^w(a) ∘ op^w(b)`.
//!
//! All numerics are for one phase-space pair (`d = 1`); the oscillator formulas
//! that hold for any `d` take `d` as a parameter.

use std::collections::{BTreeMap, HashMap};
use std::f64::consts::PI;
use std::fmt;
use std::io::Write;
use std::sync::{Arc, OnceLock};

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::FftPlanner;

use crate::error::{Error, Result};
use crate::fock::CMatrix;
use crate::hermite::hermite_fill;
use crate::laguerre::{binomial, laguerre_all};
use crate::quadrature::{gauss_hermite, GaussLegendre};

type C64 = Complex64;

/// Boxed real-to-complex profile.
pub type Profile = Arc<dyn Fn(f64) -> C64 + Send + Sync>;
/// Boxed phase-space evaluator.
pub type Evaluator = Arc<dyn Fn(f64, f64) -> C64 + Send + Sync>;
/// Boxed eigenvalue table indexed by the oscillator level.
pub type Eigen = Arc<dyn Fn(usize) -> C64 + Send + Sync>;

const I: C64 = C64 { re: 0.0, im: 1.0 };

// ---------------------------------------------------------------------------
// Polynomials in (ξ, η)
// ---------------------------------------------------------------------------

/// Polynomial `Σ c_{ij} ξ^i η^j` with complex coefficients.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Poly2 {
    terms: BTreeMap<(u32, u32), C64>,
}

impl Poly2 {
    /// The zero polynomial.
    pub fn zero() -> Self {
        Self::default()
    }

    /// Constant `c`.
    pub fn constant(c: C64) -> Self {
        Self::monomial(0, 0, c)
    }

    /// `c ξ^i η^j`.
    pub fn monomial(i: u32, j: u32, c: C64) -> Self {
        let mut p = Self::zero();
        p.push((i, j), c);
        p
    }

    /// `ξ`.
    pub fn xi() -> Self {
        Self::monomial(1, 0, C64::new(1.0, 0.0))
    }

    /// `η`.
    pub fn eta() -> Self {
        Self::monomial(0, 1, C64::new(1.0, 0.0))
    }

    /// The oscillator symbol `ξ² + η²`.
    pub fn harmonic() -> Self {
        Self::monomial(2, 0, C64::new(1.0, 0.0)).add(&Self::monomial(0, 2, C64::new(1.0, 0.0)))
    }

    fn push(&mut self, key: (u32, u32), c: C64) {
        if c == C64::new(0.0, 0.0) {
            return;
        }
        let e = self.terms.entry(key).or_insert(C64::new(0.0, 0.0));
        *e += c;
        if *e == C64::new(0.0, 0.0) {
            self.terms.remove(&key);
        }
    }

    /// Coefficient of `ξ^i η^j`.
    pub fn coeff(&self, i: u32, j: u32) -> C64 {
        self.terms.get(&(i, j)).copied().unwrap_or_default()
    }

    /// Nonzero terms `((i, j), c)`.
    pub fn terms(&self) -> impl Iterator<Item = ((u32, u32), C64)> + '_ {
        self.terms.iter().map(|(k, v)| (*k, *v))
    }

    /// Total degree; zero for constants and for the zero polynomial.
    pub fn degree(&self) -> u32 {
        self.terms.keys().map(|(i, j)| i + j).max().unwrap_or(0)
    }

    /// True when no term is left.
    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Sum.
    pub fn add(&self, o: &Self) -> Self {
        let mut r = self.clone();
        for (k, c) in o.terms() {
            r.push(k, c);
        }
        r
    }

    /// Difference.
    pub fn sub(&self, o: &Self) -> Self {
        self.add(&o.scale(C64::new(-1.0, 0.0)))
    }

    /// Scalar multiple.
    pub fn scale(&self, s: C64) -> Self {
        let mut r = Self::zero();
        for (k, c) in self.terms() {
            r.push(k, c * s);
        }
        r
    }

    /// Pointwise product.
    pub fn mul(&self, o: &Self) -> Self {
        let mut r = Self::zero();
        for ((i, j), c) in self.terms() {
            for ((k, l), d) in o.terms() {
                r.push((i + k, j + l), c * d);
            }
        }
        r
    }

    /// Complex conjugate coefficients (the symbol of the adjoint).
    pub fn conj(&self) -> Self {
        let mut r = Self::zero();
        for (k, c) in self.terms() {
            r.push(k, c.conj());
        }
        r
    }

    /// `∂_ξ^kx ∂_η^ky`.
    pub fn deriv(&self, kx: u32, ky: u32) -> Self {
        let mut r = Self::zero();
        for ((i, j), c) in self.terms() {
            if i < kx || j < ky {
                continue;
            }
            let fx: f64 = (0..kx).map(|t| (i - t) as f64).product();
            let fy: f64 = (0..ky).map(|t| (j - t) as f64).product();
            r.push((i - kx, j - ky), c * fx * fy);
        }
        r
    }

    /// Value at `(ξ, η)`.
    pub fn eval(&self, xi: f64, eta: f64) -> C64 {
        self.terms().map(|((i, j), c)| c * xi.powi(i as i32) * eta.powi(j as i32)).sum()
    }

    /// Largest coefficient modulus of `self − o`.
    pub fn max_coeff_diff(&self, o: &Self) -> f64 {
        self.sub(o).terms().map(|(_, c)| c.norm()).fold(0.0, f64::max)
    }
}

/// Poisson bracket `{a, b} = ∂_η a ∂_ξ b − ∂_ξ a ∂_η b`.
pub fn poisson_poly(a: &Poly2, b: &Poly2) -> Poly2 {
    a.deriv(0, 1).mul(&b.deriv(1, 0)).sub(&a.deriv(1, 0).mul(&b.deriv(0, 1)))
}

/// Coefficient `(i/2)^n / n!` of the order-`n` Moyal term.
fn moyal_weight(n: u32) -> C64 {
    let fact: f64 = (1..=n).map(|k| k as f64).product();
    (I * 0.5).powu(n) / fact
}

/// Exact Moyal product of polynomials: the bidifferential series terminates.
pub fn moyal_poly(a: &Poly2, b: &Poly2) -> Poly2 {
    let top = a.degree().min(b.degree());
    let mut r = Poly2::zero();
    for n in 0..=top {
        let w = moyal_weight(n);
        for k in 0..=n {
            let sign = if (n - k) % 2 == 0 { 1.0 } else { -1.0 };
            let c = w * binomial(n as usize, k as usize) * sign;
            let t = a.deriv(k, n - k).mul(&b.deriv(n - k, k));
            r = r.add(&t.scale(c));
        }
    }
    r
}

/// `a # a # … # a` (`k` factors); `k = 0` gives `1`.
pub fn moyal_power(a: &Poly2, k: u32) -> Poly2 {
    let mut r = Poly2::constant(C64::new(1.0, 0.0));
    for _ in 0..k {
        r = moyal_poly(&r, a);
    }
    r
}

// ---------------------------------------------------------------------------
// Hermite-basis matrices of polynomial symbols
// ---------------------------------------------------------------------------

/// Matrix of multiplication by `ξ` on `h_0, …, h_{p−1}`.
pub fn position_matrix(p: usize) -> CMatrix {
    let mut m = CMatrix::zeros(p, p);
    for n in 0..p.saturating_sub(1) {
        let v = C64::new(((n + 1) as f64 / 2.0).sqrt(), 0.0);
        m[(n + 1, n)] = v;
        m[(n, n + 1)] = v;
    }
    m
}

/// Matrix of `(1/i)∂_ξ` on `h_0, …, h_{p−1}`.
pub fn momentum_matrix(p: usize) -> CMatrix {
    let mut m = CMatrix::zeros(p, p);
    for n in 0..p.saturating_sub(1) {
        let v = ((n + 1) as f64 / 2.0).sqrt();
        // ∂h_n = √(n/2) h_{n−1} − √((n+1)/2) h_{n+1}
        m[(n + 1, n)] = C64::new(0.0, v);
        m[(n, n + 1)] = C64::new(0.0, -v);
    }
    m
}

/// Exact Hermite matrix of `op^w(p)` on levels `0..=n_max`.
///
/// Uses `op^w(ξ m) = Ξ op^w(m) − (i/2) op^w(∂_η m)` in a basis padded by the
/// degree, so every truncation artifact stays outside the returned block.
pub fn poly_matrix(p: &Poly2, n_max: usize) -> CMatrix {
    let size = n_max + 2 + p.degree() as usize;
    let xi = position_matrix(size);
    let eta = momentum_matrix(size);
    let mut memo: HashMap<(u32, u32), CMatrix> = HashMap::new();
    fn op(i: u32, j: u32, xi: &CMatrix, eta: &CMatrix, memo: &mut HashMap<(u32, u32), CMatrix>) -> CMatrix {
        if let Some(m) = memo.get(&(i, j)) {
            return m.clone();
        }
        let m = if i == 0 {
            if j == 0 {
                CMatrix::identity(xi.nrows(), xi.nrows())
            } else {
                eta * op(0, j - 1, xi, eta, memo)
            }
        } else {
            let mut m = xi * op(i - 1, j, xi, eta, memo);
            if j > 0 {
                m -= op(i - 1, j - 1, xi, eta, memo) * (I * 0.5 * j as f64);
            }
            m
        };
        memo.insert((i, j), m.clone());
        m
    }
    let mut acc = CMatrix::zeros(size, size);
    for ((i, j), c) in p.terms() {
        acc += op(i, j, &xi, &eta, &mut memo) * c;
    }
    acc.view((0, 0), (n_max + 1, n_max + 1)).into_owned()
}

// ---------------------------------------------------------------------------
// Phase-space symbols
// ---------------------------------------------------------------------------

/// Radial symbol `r(ξ² + η²)`, optionally with its exact oscillator eigenvalues.
#[derive(Clone)]
pub struct RadialSymbol {
    /// Profile `r(x)`, `x > 0`.
    pub profile: Profile,
    /// Eigenvalue on level `n`, when known in closed form.
    pub eigen: Option<Eigen>,
    /// Declared order for the metric `(1 + ξ² + η²)`.
    pub order: Option<f64>,
}

/// Symbol sampled on a Weyl lattice, evaluated by tensor cubic interpolation.
#[derive(Clone, Debug)]
pub struct SampledSymbol {
    /// Lattice geometry.
    pub grid: WeylGrid,
    /// Values at `(x_c, η_l)`, index `c · m + l`.
    pub values: Vec<C64>,
}

/// Lazy Moyal product whose sampled form is built on first pointwise use.
pub struct LazyMoyal {
    a: PhaseSymbol,
    b: PhaseSymbol,
    sampled: OnceLock<std::result::Result<SampledSymbol, Error>>,
}

/// Complex symbol on the phase space `ℝ²`.
#[derive(Clone)]
pub enum PhaseSymbol {
    /// Polynomial symbol, handled exactly.
    Poly(Poly2),
    /// Radial symbol.
    Radial(RadialSymbol),
    /// Arbitrary evaluator with an optional declared order.
    General { f: Evaluator, order: Option<f64> },
    /// Samples on a Weyl lattice.
    Sampled(Arc<SampledSymbol>),
    /// Linear combination.
    Sum(Vec<(C64, PhaseSymbol)>),
    /// `a # b` kept unevaluated.
    Moyal(Arc<LazyMoyal>),
}

impl fmt::Debug for PhaseSymbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PhaseSymbol::Poly(p) => write!(f, "Poly({p:?})"),
            PhaseSymbol::Radial(r) => write!(f, "Radial(order={:?}, eigen={})", r.order, r.eigen.is_some()),
            PhaseSymbol::General { order, .. } => write!(f, "General(order={order:?})"),
            PhaseSymbol::Sampled(s) => write!(f, "Sampled({:?})", s.grid),
            PhaseSymbol::Sum(t) => write!(f, "Sum({t:?})"),
            PhaseSymbol::Moyal(m) => write!(f, "Moyal({:?}, {:?})", m.a, m.b),
        }
    }
}

impl PhaseSymbol {
    /// Constant symbol.
    pub fn constant(c: C64) -> Self {
        PhaseSymbol::Poly(Poly2::constant(c))
    }

    /// Wraps a closure.
    pub fn general<F>(f: F) -> Self
    where
        F: Fn(f64, f64) -> C64 + Send + Sync + 'static,
    {
        PhaseSymbol::General { f: Arc::new(f), order: None }
    }

    /// Wraps a closure with a declared order.
    pub fn general_with_order<F>(f: F, order: f64) -> Self
    where
        F: Fn(f64, f64) -> C64 + Send + Sync + 'static,
    {
        PhaseSymbol::General { f: Arc::new(f), order: Some(order) }
    }

    /// Radial symbol from its profile.
    pub fn radial<F>(profile: F) -> Self
    where
        F: Fn(f64) -> C64 + Send + Sync + 'static,
    {
        PhaseSymbol::Radial(RadialSymbol { profile: Arc::new(profile), eigen: None, order: None })
    }

    /// Radial symbol with exact oscillator eigenvalues.
    pub fn radial_with_eigen(profile: Profile, eigen: Eigen, order: Option<f64>) -> Self {
        PhaseSymbol::Radial(RadialSymbol { profile, eigen: Some(eigen), order })
    }

    /// Lazy `a # b`; polynomial pairs are multiplied out at once.
    pub fn moyal(a: PhaseSymbol, b: PhaseSymbol) -> Self {
        if let (PhaseSymbol::Poly(p), PhaseSymbol::Poly(q)) = (&a, &b) {
            return PhaseSymbol::Poly(moyal_poly(p, q));
        }
        PhaseSymbol::Moyal(Arc::new(LazyMoyal { a, b, sampled: OnceLock::new() }))
    }

    /// `Σ c_i a_i`; all-polynomial sums collapse to one polynomial.
    pub fn sum(terms: Vec<(C64, PhaseSymbol)>) -> Self {
        if terms.iter().all(|(_, s)| s.as_poly().is_some()) {
            let p = terms.iter().fold(Poly2::zero(), |acc, (c, s)| acc.add(&s.as_poly().expect("checked").scale(*c)));
            return PhaseSymbol::Poly(p);
        }
        PhaseSymbol::Sum(terms)
    }

    /// `c · a`.
    pub fn scaled(self, c: C64) -> Self {
        match self {
            PhaseSymbol::Poly(p) => PhaseSymbol::Poly(p.scale(c)),
            other => PhaseSymbol::Sum(vec![(c, other)]),
        }
    }

    /// The polynomial, when the symbol is one.
    pub fn as_poly(&self) -> Option<&Poly2> {
        match self {
            PhaseSymbol::Poly(p) => Some(p),
            _ => None,
        }
    }

    /// Declared or structural order.
    pub fn order(&self) -> Option<f64> {
        match self {
            PhaseSymbol::Poly(p) => Some(if p.is_zero() { f64::NEG_INFINITY } else { p.degree() as f64 }),
            PhaseSymbol::Radial(r) => r.order,
            PhaseSymbol::General { order, .. } => *order,
            PhaseSymbol::Sampled(_) => None,
            PhaseSymbol::Sum(t) => t.iter().map(|(_, s)| s.order()).try_fold(f64::NEG_INFINITY, |m, o| o.map(|o| m.max(o))),
            PhaseSymbol::Moyal(m) => Some(m.a.order()? + m.b.order()?),
        }
    }

    /// Value at `(ξ, η)`.
    pub fn eval(&self, xi: f64, eta: f64) -> C64 {
        match self {
            PhaseSymbol::Poly(p) => p.eval(xi, eta),
            PhaseSymbol::Radial(r) => (r.profile)(xi * xi + eta * eta),
            PhaseSymbol::General { f, .. } => f(xi, eta),
            PhaseSymbol::Sampled(s) => s.eval(xi, eta),
            PhaseSymbol::Sum(t) => t.iter().map(|(c, s)| c * s.eval(xi, eta)).sum(),
            PhaseSymbol::Moyal(m) => m.eval(xi, eta),
        }
    }

    /// `∂_ξ^kx ∂_η^ky a` at `(ξ, η)`: exact for polynomials, finite differences otherwise.
    pub fn deriv(&self, kx: u32, ky: u32, xi: f64, eta: f64) -> C64 {
        if kx == 0 && ky == 0 {
            return self.eval(xi, eta);
        }
        match self {
            PhaseSymbol::Poly(p) => p.deriv(kx, ky).eval(xi, eta),
            PhaseSymbol::Sum(t) => t.iter().map(|(c, s)| c * s.deriv(kx, ky, xi, eta)).sum(),
            _ => fd_partial(&|x, y| self.eval(x, y), kx, ky, xi, eta),
        }
    }

    /// The symbol `∂_ξ^kx ∂_η^ky a` as a new symbol.
    pub fn derivative(&self, kx: u32, ky: u32) -> PhaseSymbol {
        match self {
            PhaseSymbol::Poly(p) => PhaseSymbol::Poly(p.deriv(kx, ky)),
            PhaseSymbol::Sum(t) => PhaseSymbol::Sum(t.iter().map(|(c, s)| (*c, s.derivative(kx, ky))).collect()),
            other => {
                let a = other.clone();
                let ord = other.order().map(|o| o - (kx + ky) as f64);
                PhaseSymbol::General { f: Arc::new(move |x, y| a.deriv(kx, ky, x, y)), order: ord }
            }
        }
    }

    /// Complex conjugate symbol `ā`.
    pub fn conj(&self) -> PhaseSymbol {
        match self {
            PhaseSymbol::Poly(p) => PhaseSymbol::Poly(p.conj()),
            PhaseSymbol::Sum(t) => PhaseSymbol::Sum(t.iter().map(|(c, s)| (c.conj(), s.conj())).collect()),
            PhaseSymbol::Radial(r) => {
                let p = r.profile.clone();
                let e = r.eigen.clone();
                PhaseSymbol::Radial(RadialSymbol {
                    profile: Arc::new(move |x| p(x).conj()),
                    eigen: e.map(|e| Arc::new(move |n| e(n).conj()) as Eigen),
                    order: r.order,
                })
            }
            other => {
                let a = other.clone();
                PhaseSymbol::General { f: Arc::new(move |x, y| a.eval(x, y).conj()), order: other.order() }
            }
        }
    }
}

impl LazyMoyal {
    fn eval(&self, xi: f64, eta: f64) -> C64 {
        if let Some(p) = self.b.as_poly() {
            return moyal_series_eval(&self.a, p, xi, eta, false);
        }
        if let Some(p) = self.a.as_poly() {
            return moyal_series_eval(&self.b, p, xi, eta, true);
        }
        let s = self.sampled.get_or_init(|| {
            let grid = WeylGrid::default_for_moyal();
            moyal_fft_sampled(&self.a, &self.b, &grid)
        });
        match s {
            Ok(s) => s.eval(xi, eta),
            Err(_) => C64::new(f64::NAN, f64::NAN),
        }
    }
}

/// Finite Moyal expansion of `g # p` (or `p # g` when `poly_left`) at one point.
fn moyal_series_eval(g: &PhaseSymbol, p: &Poly2, xi: f64, eta: f64, poly_left: bool) -> C64 {
    let mut acc = C64::new(0.0, 0.0);
    for n in 0..=p.degree() {
        let w = moyal_weight(n);
        for k in 0..=n {
            let sign = if (n - k) % 2 == 0 { 1.0 } else { -1.0 };
            let c = w * binomial(n as usize, k as usize) * sign;
            // a # b term: (∂ξ^k ∂η^{n−k} a)(∂η^k ∂ξ^{n−k} b)
            let t = if poly_left {
                let pa = p.deriv(k, n - k).eval(xi, eta);
                if pa == C64::new(0.0, 0.0) {
                    continue;
                }
                pa * g.deriv(n - k, k, xi, eta)
            } else {
                let pb = p.deriv(n - k, k).eval(xi, eta);
                if pb == C64::new(0.0, 0.0) {
                    continue;
                }
                g.deriv(k, n - k, xi, eta) * pb
            };
            acc += c * t;
        }
    }
    acc
}

/// Step for an order-`k` central difference at coordinate scale `s`.
fn fd_step(k: u32, s: f64) -> f64 {
    let base = f64::EPSILON.powf(1.0 / (k as f64 + 4.0)).max(1e-3);
    base * s.abs().max(1.0)
}

/// One-variable 4th-order central derivative of order `k` by nesting first and
/// second difference stencils.
fn fd_1d(f: &dyn Fn(f64) -> C64, k: u32, x: f64, h: f64) -> C64 {
    match k {
        0 => f(x),
        1 => (f(x - 2.0 * h) - f(x - h) * 8.0 + f(x + h) * 8.0 - f(x + 2.0 * h)) / (12.0 * h),
        2 => {
            (-f(x - 2.0 * h) + f(x - h) * 16.0 - f(x) * 30.0 + f(x + h) * 16.0 - f(x + 2.0 * h)) / (12.0 * h * h)
        }
        _ => {
            let g = |y: f64| fd_1d(f, k - 2, y, h);
            (-g(x - 2.0 * h) + g(x - h) * 16.0 - g(x) * 30.0 + g(x + h) * 16.0 - g(x + 2.0 * h)) / (12.0 * h * h)
        }
    }
}

/// Mixed partial `∂_x^kx ∂_y^ky f` by 4th-order central differences.
pub fn fd_partial(f: &dyn Fn(f64, f64) -> C64, kx: u32, ky: u32, x: f64, y: f64) -> C64 {
    let k = kx + ky;
    let hx = fd_step(k, x);
    let hy = fd_step(k, y);
    let inner = |xx: f64| fd_1d(&|yy| f(xx, yy), ky, y, hy);
    fd_1d(&inner, kx, x, hx)
}

// ---------------------------------------------------------------------------
// Hermite matrices of general symbols
// ---------------------------------------------------------------------------

/// Cross-Wigner densities `V_{mn}(ξ,η)` at one point, without the `e^{-ρ}` factor,
/// for `m ≥ n`, stored by offset `k = m − n` then `n`.
///
/// `V_{n+k,n} = ((−1)^n/π) √(n!/(n+k)!) (√2(ξ+iη))^k e^{-ρ} L_n^{(k)}(2ρ)`,
/// `ρ = ξ² + η²`, so that `⟨h_m, op^w(a) h_n⟩ = ∫∫ a V_{mn}`.
fn wigner_row(n_max: usize, xi: f64, eta: f64, out: &mut Vec<C64>) {
    out.clear();
    let rho = xi * xi + eta * eta;
    let z = C64::new(xi, eta) * std::f64::consts::SQRT_2;
    let mut zk = C64::new(1.0, 0.0);
    let mut inv_sqrt_kfact = 1.0;
    for k in 0..=n_max {
        if k > 0 {
            zk *= z;
            inv_sqrt_kfact /= (k as f64).sqrt();
        }
        let lag = laguerre_all(n_max - k, k as f64, 2.0 * rho);
        let mut ratio = inv_sqrt_kfact;
        for (n, l) in lag.iter().enumerate() {
            if n > 0 {
                ratio *= (n as f64 / (n + k) as f64).sqrt();
            }
            let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
            out.push(zk * (sign * ratio * l / PI));
        }
    }
}

/// Gauss-Hermite node count used for phase-space quadrature at truncation `n_max`.
pub fn phase_space_nodes(n_max: usize) -> usize {
    let n = n_max + 40;
    n + n % 2
}

/// Hermite matrix `⟨h_m, op^w(a) h_n⟩` by tensor Gauss-Hermite quadrature of
/// `a` against the cross-Wigner densities; exact for polynomial `a` of degree
/// below `2 nq − 2 n_max`.
pub fn wigner_matrix(f: &(dyn Fn(f64, f64) -> C64 + Sync), n_max: usize, nq: usize) -> Result<CMatrix> {
    let gh = gauss_hermite(nq);
    let w: Vec<f64> = gh.nodes.iter().zip(&gh.scaled_weights).map(|(t, s)| s * (-t * t).exp()).collect();
    let npairs = (n_max + 1) * (n_max + 2) / 2;
    let zero = || (vec![C64::new(0.0, 0.0); npairs], vec![C64::new(0.0, 0.0); npairs]);
    // Lower triangle: ∫ a V_{mn}. Upper triangle: ∫ a conj(V_{mn}), since
    // V_{nm} = conj V_{mn}.
    let (lo, up) = (0..nq)
        .into_par_iter()
        .map(|a| {
            let (mut lo, mut up) = zero();
            let mut row = Vec::with_capacity(npairs);
            for b in 0..nq {
                let (xi, eta) = (gh.nodes[a], gh.nodes[b]);
                let val = f(xi, eta) * (w[a] * w[b]);
                if val == C64::new(0.0, 0.0) {
                    continue;
                }
                wigner_row(n_max, xi, eta, &mut row);
                for ((l, u), v) in lo.iter_mut().zip(up.iter_mut()).zip(&row) {
                    *l += val * v;
                    *u += val * v.conj();
                }
            }
            (lo, up)
        })
        .reduce(zero, |mut x, y| {
            x.0.iter_mut().zip(&y.0).for_each(|(p, q)| *p += q);
            x.1.iter_mut().zip(&y.1).for_each(|(p, q)| *p += q);
            x
        });
    if lo.iter().chain(&up).any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("symbol evaluation in phase-space quadrature".into()));
    }
    let mut m = CMatrix::zeros(n_max + 1, n_max + 1);
    let mut idx = 0;
    for k in 0..=n_max {
        for n in 0..=(n_max - k) {
            m[(n + k, n)] = lo[idx];
            m[(n, n + k)] = up[idx];
            idx += 1;
        }
    }
    Ok(m)
}

/// Oscillator eigenvalue of a radial symbol from its profile, by the `x`-space
/// form `(−1)^n n!/(n+d−1)! ∫_0^∞ r(x) e^{-x} L_n^{(d−1)}(2x) x^{d−1} dx`.
pub fn radial_eigenvalue(profile: &(dyn Fn(f64) -> C64 + Sync), n: usize, d: usize) -> C64 {
    let top = 2.0 * n as f64 + d as f64 + 12.0 * ((2 * n + d) as f64).sqrt() + 60.0;
    let panels = (top / 0.5).ceil() as usize;
    let gl = GaussLegendre::new(12);
    let (xs, ws) = gl.composite(0.0, top, panels);
    let alpha = (d - 1) as f64;
    let mut norm = 1.0;
    for j in 1..d {
        norm /= (n + j) as f64;
    }
    let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
    let s: C64 = xs
        .par_iter()
        .zip(ws.par_iter())
        .map(|(&x, &w)| {
            let l = laguerre_all(n, alpha, 2.0 * x)[n];
            profile(x) * (w * l * (-x).exp() * x.powi(d as i32 - 1))
        })
        .sum();
    s * (sign * norm)
}

/// Extra levels carried when multiplying truncated matrices of non-polynomial factors.
pub const MOYAL_PAD: usize = 24;

/// Hermite matrix `⟨h_m, op^w(a) h_n⟩`, `m, n ≤ n_max`.
///
/// Polynomials use the exact ladder recursion, radial symbols their oscillator
/// eigenvalues, lazy products the product of padded factor matrices, and
/// everything else phase-space quadrature against the cross-Wigner densities.
pub fn hermite_matrix(a: &PhaseSymbol, n_max: usize) -> Result<CMatrix> {
    let m = match a {
        PhaseSymbol::Poly(p) => poly_matrix(p, n_max),
        PhaseSymbol::Radial(r) => {
            let mut m = CMatrix::zeros(n_max + 1, n_max + 1);
            for n in 0..=n_max {
                m[(n, n)] = match &r.eigen {
                    Some(e) => e(n),
                    None => radial_eigenvalue(&*r.profile, n, 1),
                };
            }
            m
        }
        PhaseSymbol::Sum(t) => {
            let mut m = CMatrix::zeros(n_max + 1, n_max + 1);
            for (c, s) in t {
                m += hermite_matrix(s, n_max)? * *c;
            }
            m
        }
        PhaseSymbol::Moyal(l) => {
            let pad = n_max + MOYAL_PAD;
            let p = hermite_matrix(&l.a, pad)? * hermite_matrix(&l.b, pad)?;
            p.view((0, 0), (n_max + 1, n_max + 1)).into_owned()
        }
        PhaseSymbol::General { f, .. } => wigner_matrix(&**f, n_max, phase_space_nodes(n_max))?,
        PhaseSymbol::Sampled(s) => {
            let s = s.clone();
            wigner_matrix(&move |x, y| s.eval(x, y), n_max, phase_space_nodes(n_max))?
        }
    };
    if m.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("Hermite matrix of a phase-space symbol".into()));
    }
    Ok(m)
}

// ---------------------------------------------------------------------------
// Weyl kernels on a lattice
// ---------------------------------------------------------------------------

/// Position grid `x_i = x0 + i h`, `i < n`, with `m` momentum samples
/// `η_l = (l − m/2) Δη`, `Δη = 2π/(m h)`.
///
/// Kernel samples live on the interleaved lattice of midpoints
/// `x_c = x0 + c h/2` (`c < 2n − 1`) and offsets `v_k = k h` (`k` mod `m`).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WeylGrid {
    /// Number of position points.
    pub n: usize,
    /// First position.
    pub x0: f64,
    /// Position spacing.
    pub h: f64,
    /// Number of momentum samples (even, at least `2n`).
    pub m: usize,
}

impl WeylGrid {
    /// Validated grid.
    pub fn new(n: usize, x0: f64, h: f64, m: usize) -> Result<Self> {
        if n < 2 || !(h > 0.0) || !x0.is_finite() {
            return Err(Error::InvalidInput(format!("Weyl grid n={n}, h={h}, x0={x0}")));
        }
        if m % 2 != 0 || m < 2 * n {
            return Err(Error::InvalidInput(format!("momentum samples m={m} must be even and ≥ 2n = {}", 2 * n)));
        }
        Ok(Self { n, x0, h, m })
    }

    /// Symmetric grid on `[-l, l]` with `n` points.
    pub fn centered(n: usize, l: f64, m: usize) -> Result<Self> {
        Self::new(n, -l, 2.0 * l / (n as f64 - 1.0), m)
    }

    /// Grid used when a lazy product of two non-polynomial symbols is evaluated pointwise.
    pub fn default_for_moyal() -> Self {
        Self::centered(241, 12.0, 512).expect("static grid")
    }

    /// Position `x_i`.
    pub fn x(&self, i: usize) -> f64 {
        self.x0 + i as f64 * self.h
    }

    /// Midpoint `x_c`.
    pub fn mid(&self, c: usize) -> f64 {
        self.x0 + 0.5 * c as f64 * self.h
    }

    /// Momentum spacing.
    pub fn d_eta(&self) -> f64 {
        2.0 * PI / (self.m as f64 * self.h)
    }

    /// Momentum `η_l`.
    pub fn eta(&self, l: usize) -> f64 {
        (l as f64 - 0.5 * self.m as f64) * self.d_eta()
    }

    /// Number of midpoints.
    pub fn n_mid(&self) -> usize {
        2 * self.n - 1
    }
}

/// Sampled Weyl kernel `K(c, k) ≈ k(x_c + v_k/2, x_c − v_k/2)`.
#[derive(Clone, Debug)]
pub struct WeylKernel {
    /// Lattice.
    pub grid: WeylGrid,
    /// Samples, index `c · m + (k mod m)`.
    pub samples: Vec<C64>,
    /// True when only the physical pairs (`c + k` even) are populated, as for
    /// kernels read off an operator matrix.
    pub parity_only: bool,
    /// Largest `|a|` on the outermost momentum rows relative to `max |a|`.
    pub tail: f64,
}

fn fft_inplace(buf: &mut [C64], inverse: bool) {
    let mut planner = FftPlanner::<f64>::new();
    let plan = if inverse { planner.plan_fft_inverse(buf.len()) } else { planner.plan_fft_forward(buf.len()) };
    plan.process(buf);
}

/// Kernel of `op^w(a)` on the lattice: `K(c,k) = (Δη/2π) Σ_l a(x_c, η_l) e^{i k h η_l}`.
///
/// The momentum sum is an exact DFT, so [`symbol_from_kernel`] recovers the
/// lattice samples of `a`.
pub fn weyl_quantize(a: &PhaseSymbol, grid: &WeylGrid) -> Result<WeylKernel> {
    let m = grid.m;
    let scale = grid.d_eta() / (2.0 * PI);
    let rows: Vec<(Vec<C64>, f64, f64)> = (0..grid.n_mid())
        .into_par_iter()
        .map(|c| {
            let x = grid.mid(c);
            let mut buf: Vec<C64> = (0..m).map(|l| a.eval(x, grid.eta(l))).collect();
            let edge = buf[0].norm().max(buf[1].norm()).max(buf[m - 1].norm());
            let top = buf.iter().map(|v| v.norm()).fold(0.0, f64::max);
            fft_inplace(&mut buf, true);
            for (k, v) in buf.iter_mut().enumerate() {
                let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
                *v *= sign * scale;
            }
            (buf, edge, top)
        })
        .collect();
    let mut samples = Vec::with_capacity(grid.n_mid() * m);
    let (mut edge, mut top) = (0.0_f64, 0.0_f64);
    for (r, e, t) in rows {
        samples.extend(r);
        edge = edge.max(e);
        top = top.max(t);
    }
    if samples.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("Weyl kernel samples".into()));
    }
    let tail = if top > 0.0 { edge / top } else { 0.0 };
    Ok(WeylKernel { grid: *grid, samples, parity_only: false, tail })
}

impl WeylKernel {
    /// `k(x_i, x_j)`.
    pub fn value(&self, i: usize, j: usize) -> C64 {
        let m = self.grid.m as isize;
        let k = (i as isize - j as isize).rem_euclid(m) as usize;
        self.samples[(i + j) * self.grid.m + k]
    }

    /// Operator matrix `O_{ij} = h k(x_i, x_j)` acting on grid samples.
    pub fn operator_matrix(&self) -> CMatrix {
        let n = self.grid.n;
        CMatrix::from_fn(n, n, |i, j| self.value(i, j) * self.grid.h)
    }

    /// Kernel whose physical pairs reproduce an operator matrix `O` (`O_{ij} = h k_{ij}`).
    pub fn from_operator(grid: &WeylGrid, o: &CMatrix) -> Result<Self> {
        if o.nrows() != grid.n || o.ncols() != grid.n {
            return Err(Error::Incompatible(format!("operator {}×{} vs grid n={}", o.nrows(), o.ncols(), grid.n)));
        }
        let m = grid.m;
        let mut samples = vec![C64::new(0.0, 0.0); grid.n_mid() * m];
        for i in 0..grid.n {
            for j in 0..grid.n {
                let k = (i as isize - j as isize).rem_euclid(m as isize) as usize;
                samples[(i + j) * m + k] = o[(i, j)] / grid.h;
            }
        }
        Ok(Self { grid: *grid, samples, parity_only: true, tail: 0.0 })
    }

    /// `(op u)(x_i) = h Σ_j k(x_i, x_j) u(x_j)`.
    pub fn apply(&self, u: &[C64]) -> Result<Vec<C64>> {
        let n = self.grid.n;
        if u.len() != n {
            return Err(Error::Incompatible(format!("{} samples on a {n}-point grid", u.len())));
        }
        Ok((0..n)
            .into_par_iter()
            .map(|i| (0..n).map(|j| self.value(i, j) * u[j]).sum::<C64>() * self.grid.h)
            .collect())
    }

    /// Kernel of the adjoint: `k*(x, x') = conj k(x', x)`.
    pub fn adjoint(&self) -> Self {
        let m = self.grid.m;
        let mut samples = self.samples.clone();
        for c in 0..self.grid.n_mid() {
            for k in 0..m {
                samples[c * m + k] = self.samples[c * m + (m - k) % m].conj();
            }
        }
        Self { grid: self.grid, samples, parity_only: self.parity_only, tail: self.tail }
    }

    /// `⟨h_m, op h_n⟩ ≈ h² Σ_{ij} h_m(x_i) k(x_i, x_j) h_n(x_j)`.
    pub fn hermite_matrix(&self, n_max: usize) -> CMatrix {
        let n = self.grid.n;
        let mut hm = DMatrix::<f64>::zeros(n, n_max + 1);
        let mut row = vec![0.0; n_max + 1];
        for i in 0..n {
            hermite_fill(self.grid.x(i), &mut row);
            for (j, v) in row.iter().enumerate() {
                hm[(i, j)] = *v;
            }
        }
        let hc = hm.map(|v| C64::new(v, 0.0));
        let o = self.operator_matrix();
        hc.transpose() * o * hc * C64::new(self.grid.h, 0.0)
    }
}

/// Inverse of [`weyl_quantize`]: `a(x_c, η_l) = h Σ_k K(c,k) e^{-i k h η_l}`.
///
/// For kernels read off an operator only the physical offsets are known and
/// the sum runs over `k ≡ c (mod 2)` with weight `2h`; such samples are valid for
/// `|η| < π/(2h)`. In general the result is the fold `a(η) + a(η + π/h)`.
pub fn symbol_from_kernel(k: &WeylKernel) -> Result<SampledSymbol> {
    let g = k.grid;
    let m = g.m;
    let rows: Vec<Vec<C64>> = (0..g.n_mid())
        .into_par_iter()
        .map(|c| {
            let mut buf: Vec<C64> = (0..m)
                .map(|kk| {
                    let v = k.samples[c * m + kk];
                    let kk_signed = if kk < m / 2 { kk as isize } else { kk as isize - m as isize };
                    if k.parity_only && (c as isize + kk_signed).rem_euclid(2) != 0 {
                        return C64::new(0.0, 0.0);
                    }
                    let sign = if kk % 2 == 0 { 1.0 } else { -1.0 };
                    v * sign
                })
                .collect();
            fft_inplace(&mut buf, false);
            let w = if k.parity_only { 2.0 * g.h } else { g.h };
            buf.iter().map(|v| v * w).collect()
        })
        .collect();
    let values: Vec<C64> = rows.into_iter().flatten().collect();
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("symbol samples from kernel".into()));
    }
    Ok(SampledSymbol { grid: g, values })
}

/// Applies `op^w(a)` to samples of `u` on the grid.
pub fn apply_weyl(a: &PhaseSymbol, u: &[C64], grid: &WeylGrid) -> Result<Vec<C64>> {
    weyl_quantize(a, grid)?.apply(u)
}

/// Lagrange weights for nodes `−2, …, 3` at `t ∈ [0, 1)`.
fn lagrange6(t: f64) -> [f64; 6] {
    let mut w = [1.0; 6];
    for (a, wa) in w.iter_mut().enumerate() {
        for b in 0..6 {
            if a != b {
                *wa *= (t - (b as f64 - 2.0)) / (a as f64 - b as f64);
            }
        }
    }
    w
}

impl SampledSymbol {
    /// Sample at lattice indices.
    pub fn at(&self, c: usize, l: usize) -> C64 {
        self.values[c * self.grid.m + l]
    }

    /// Tensor 6-point Lagrange interpolation; zero outside the lattice.
    pub fn eval(&self, xi: f64, eta: f64) -> C64 {
        let g = &self.grid;
        let fc = (xi - g.x0) / (0.5 * g.h);
        let fl = eta / g.d_eta() + 0.5 * g.m as f64;
        let (c0, l0) = (fc.floor(), fl.floor());
        if c0 < 2.0 || l0 < 2.0 || c0 + 3.0 > (g.n_mid() - 1) as f64 || l0 + 3.0 > (g.m - 1) as f64 {
            return C64::new(0.0, 0.0);
        }
        let (wc, wl) = (lagrange6(fc - c0), lagrange6(fl - l0));
        let (c0, l0) = (c0 as usize - 2, l0 as usize - 2);
        let mut acc = C64::new(0.0, 0.0);
        for (a, wa) in wc.iter().enumerate() {
            for (b, wb) in wl.iter().enumerate() {
                acc += self.at(c0 + a, l0 + b) * (wa * wb);
            }
        }
        acc
    }

    /// Largest deviation from `a` over lattice points with `|x_c| ≤ x_lim`, `|η_l| ≤ eta_lim`.
    pub fn max_deviation(&self, a: &PhaseSymbol, x_lim: f64, eta_lim: f64) -> f64 {
        let g = &self.grid;
        let mut worst: f64 = 0.0;
        for c in 0..g.n_mid() {
            let x = g.mid(c);
            if x.abs() > x_lim {
                continue;
            }
            for l in 0..g.m {
                let e = g.eta(l);
                if e.abs() > eta_lim {
                    continue;
                }
                worst = worst.max((self.at(c, l) - a.eval(x, e)).norm());
            }
        }
        worst
    }
}

fn moyal_fft_sampled(a: &PhaseSymbol, b: &PhaseSymbol, grid: &WeylGrid) -> Result<SampledSymbol> {
    let oa = weyl_quantize(a, grid)?.operator_matrix();
    let ob = weyl_quantize(b, grid)?.operator_matrix();
    let k = WeylKernel::from_operator(grid, &(oa * ob))?;
    symbol_from_kernel(&k)
}

/// Moyal backend.
#[derive(Clone, Copy, Debug)]
pub enum MoyalBackend {
    /// Terminating bidifferential series; both factors polynomial.
    Polynomial,
    /// Terminating series with one polynomial factor, derivatives of the other
    /// taken exactly or by finite differences.
    Finite,
    /// Composition of lattice kernels; both factors must decay on the grid.
    Fft(WeylGrid),
}

/// Moyal product `a # b` with an explicit backend.
pub fn moyal(a: &PhaseSymbol, b: &PhaseSymbol, backend: MoyalBackend) -> Result<PhaseSymbol> {
    match backend {
        MoyalBackend::Polynomial => match (a.as_poly(), b.as_poly()) {
            (Some(p), Some(q)) => Ok(PhaseSymbol::Poly(moyal_poly(p, q))),
            _ => Err(Error::InvalidInput("polynomial Moyal backend needs two polynomial symbols".into())),
        },
        MoyalBackend::Finite => {
            if a.as_poly().is_none() && b.as_poly().is_none() {
                return Err(Error::InvalidInput("finite Moyal backend needs a polynomial factor".into()));
            }
            Ok(PhaseSymbol::moyal(a.clone(), b.clone()))
        }
        MoyalBackend::Fft(grid) => {
            let s = moyal_fft_sampled(a, b, &grid)?;
            Ok(PhaseSymbol::Sampled(Arc::new(s)))
        }
    }
}

/// Gain factor `Λ_Θ = 1 + ξ² + η²` of the oscillator metric.
pub fn oscillator_gain(xi: f64, eta: f64) -> f64 {
    1.0 + xi * xi + eta * eta
}

// ---------------------------------------------------------------------------
// Functional calculus of the oscillator
// ---------------------------------------------------------------------------

/// Spectral profile `R(y)` with its support hint and symbol order.
#[derive(Clone)]
pub struct SpectralProfileR {
    /// `R(y)`.
    pub f: Profile,
    /// Interval outside which `R` is negligible.
    pub support: (f64, f64),
    /// Symbol order `μ`: `|∂^n R(y)| ≲ (1+|y|)^{μ/2−n}`.
    pub order: f64,
    /// Closed-form `R̂(τ) = ∫ e^{-iτy} R(y) dy`, when available.
    pub hat: Option<Profile>,
}

impl SpectralProfileR {
    /// Profile sampled on `support` for the transform.
    pub fn new(f: Profile, support: (f64, f64), order: f64) -> Result<Self> {
        if !(support.0 < support.1) {
            return Err(Error::InvalidInput(format!("empty support {support:?}")));
        }
        Ok(Self { f, support, order, hat: None })
    }

    /// Attaches a closed-form transform.
    pub fn with_hat(mut self, hat: Profile) -> Self {
        self.hat = Some(hat);
        self
    }

    /// Heat profile `e^{-ty}` with a Gaussian-smoothed step at `y = 0`, so that it
    /// vanishes on the negative odd integers to double precision.
    ///
    /// With `χ(y) = ½ erfc(−y/σ)` one has `R̂(τ) = e^{σ²(t+iτ)²/4}/(t+iτ)`.
    pub fn heat(t: f64) -> Result<Self> {
        if !(t > 0.0) {
            return Err(Error::InvalidInput(format!("heat time t={t} must be positive")));
        }
        let sigma = HEAT_STEP_WIDTH;
        let f: Profile = Arc::new(move |y: f64| C64::new((-t * y).exp() * 0.5 * libm::erfc(-y / sigma), 0.0));
        let hat: Profile = Arc::new(move |tau: f64| {
            let z = C64::new(t, tau);
            (z * z * (sigma * sigma / 4.0)).exp() / z
        });
        Ok(Self { f, support: (-3.0, 45.0 / t), order: f64::NEG_INFINITY, hat: Some(hat) })
    }

    /// `R(y)`.
    pub fn eval(&self, y: f64) -> C64 {
        (self.f)(y)
    }
}

/// Width of the Gaussian-smoothed step used by [`SpectralProfileR::heat`].
pub const HEAT_STEP_WIDTH: f64 = 0.2;

/// Sampled transform `R̂` on a uniform `τ` lattice, interpolated with 8 points.
struct HatTable {
    d_tau: f64,
    center: f64,
    values: Vec<C64>,
    tau_max: f64,
}

impl HatTable {
    fn build(r: &SpectralProfileR, tau_need: f64) -> Result<Self> {
        let (a, b) = r.support;
        let h = (PI / (1.25 * tau_need)).min((b - a) / 64.0);
        let n = ((b - a) / h).ceil() as usize + 1;
        let m = (32 * n).next_power_of_two();
        let center = 0.5 * (a + b);
        let mut buf: Vec<C64> = (0..m)
            .map(|j| if j < n { r.eval(a + j as f64 * h) } else { C64::new(0.0, 0.0) })
            .collect();
        if buf.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("spectral profile samples".into()));
        }
        fft_inplace(&mut buf, false);
        let d_tau = 2.0 * PI / (m as f64 * h);
        for (l, v) in buf.iter_mut().enumerate() {
            let tau = if l < m / 2 { l as f64 } else { l as f64 - m as f64 } * d_tau;
            *v *= C64::from_polar(h, -tau * (a - center));
        }
        Ok(Self { d_tau, center, values: buf, tau_max: PI / h * 0.8 })
    }

    fn eval(&self, tau: f64) -> Result<C64> {
        if tau.abs() > self.tau_max {
            return Err(Error::UnderResolved(format!("R̂ needed at τ={tau:.3}, table reaches {:.3}", self.tau_max)));
        }
        let m = self.values.len() as isize;
        let f = tau / self.d_tau;
        let i0 = f.floor() as isize;
        let t = f - i0 as f64;
        let mut acc = C64::new(0.0, 0.0);
        // nodes i0-3 .. i0+4
        for a in -3..=4isize {
            let mut w = 1.0;
            for b in -3..=4isize {
                if b != a {
                    w *= (t - b as f64) / (a - b) as f64;
                }
            }
            acc += self.values[(i0 + a).rem_euclid(m) as usize] * w;
        }
        Ok(acc * C64::from_polar(1.0, -tau * self.center))
    }
}

/// Outcome of a Mehler-series evaluation.
#[derive(Clone, Copy, Debug)]
pub struct MehlerValue {
    /// `r(x)`.
    pub value: C64,
    /// Largest `|k|` included.
    pub shells: usize,
    /// Modulus of the last shell pair, a tail estimate.
    pub tail: f64,
}

/// Radial symbol `r` with `op^w(r(ξ² + η²)) = R(ξ² − ∂²)`, from the series of
/// oscillatory integrals `r = Σ_k r_k`,
/// `r_k(x) = (1/2π)(−1)^{kd} ∫ e^{ixu} R̂(kπ + arctan u)(1+u²)^{d/2−1} du` (`d = 1`).
///
/// With `u = sinh v` the integrand becomes `e^{ix sinh v} R̂(kπ + gd v)`; the
/// tails `|u| > W` are closed by three integrations by parts.
pub struct MehlerSeries {
    hat: HatSource,
    abs_tol: f64,
    /// Minimum number of shells.
    pub k_min: usize,
    /// Relative size of the last shell pair at which the series stops.
    pub rel_tol: f64,
    /// Hard cap on the shell count.
    pub k_cap: usize,
}

enum HatSource {
    Analytic(Profile),
    Table(HatTable),
}

impl HatSource {
    fn eval(&self, tau: f64) -> Result<C64> {
        match self {
            HatSource::Analytic(h) => Ok(h(tau)),
            HatSource::Table(t) => t.eval(tau),
        }
    }
}

/// `R̂` sampled by FFT on `|τ| ≤ tau_need` and interpolated; zero beyond the table,
/// so `tau_need` must reach the range where `R̂` is negligible.
pub fn sampled_hat(r: &SpectralProfileR, tau_need: f64) -> Result<Profile> {
    let table = HatTable::build(r, tau_need)?;
    Ok(Arc::new(move |tau: f64| table.eval(tau).unwrap_or(C64::new(0.0, 0.0))))
}

/// Default number of shells of the Mehler series.
pub const MEHLER_K_DEFAULT: usize = 8;

impl MehlerSeries {
    /// Prepares `R̂` (closed form, or FFT of `R` on its support).
    pub fn new(r: &SpectralProfileR, d: usize) -> Result<Self> {
        if d != 1 {
            return Err(Error::Unsupported(format!("Mehler series implemented for d = 1, got d = {d}")));
        }
        let k_cap = 48;
        let hat = match &r.hat {
            Some(h) => HatSource::Analytic(h.clone()),
            None => HatSource::Table(HatTable::build(r, (k_cap as f64 + 1.0) * PI)?),
        };
        let peak = hat.eval(0.0)?.norm().max(1.0);
        Ok(Self { hat, abs_tol: 1e-14 * peak, k_min: MEHLER_K_DEFAULT, rel_tol: 1e-12, k_cap })
    }

    fn shell(&self, k: i64, x: f64) -> Result<C64> {
        let shift = k as f64 * PI;
        let w_cut = (400.0 / x).max(20.0);
        let v_cut = w_cut.asinh();
        let gl = GaussLegendre::new(10);
        let g = |v: f64| -> Result<C64> {
            let gd = v.sinh().atan();
            Ok(self.hat.eval(shift + gd)? * C64::from_polar(1.0, x * v.sinh()))
        };
        let mut acc = C64::new(0.0, 0.0);
        let mut err: Option<Error> = None;
        for side in [-1.0, 1.0] {
            let mut a = 0.0;
            while a < v_cut {
                let width = (0.15_f64).min(1.0 / (x * a.cosh())).min(v_cut - a);
                let b = a + width;
                match adaptive_gl(&|v| g(side * v), a, b, &gl, self.abs_tol, 8) {
                    Ok(v) => acc += v,
                    Err(e) => {
                        err = Some(e);
                        break;
                    }
                }
                a = b;
            }
        }
        if let Some(e) = err {
            return Err(e);
        }
        // Tails in u: G(u) = R̂(kπ + arctan u)(1+u²)^{-1/2}.
        let big_g = |u: f64| -> Result<C64> { Ok(self.hat.eval(shift + u.atan())? / (1.0 + u * u).sqrt()) };
        let ix = I * x;
        for side in [1.0, -1.0] {
            let u0 = side * w_cut;
            let du = 1e-2 * w_cut;
            let g0 = big_g(u0)?;
            let gp = (big_g(u0 + du)? - big_g(u0 - du)?) / (2.0 * du);
            let gpp = (big_g(u0 + du)? - g0 * 2.0 + big_g(u0 - du)?) / (du * du);
            let e = C64::from_polar(1.0, x * u0);
            let series = -g0 / ix + gp / (ix * ix) - gpp / (ix * ix * ix);
            // ∫_W^∞ = e^{ixW}·series; ∫_{−∞}^{−W} = −e^{−ixW}·series(−W)
            acc += e * series * side;
        }
        let sign = if k.rem_euclid(2) == 0 { 1.0 } else { -1.0 };
        Ok(acc * (sign / (2.0 * PI)))
    }

    /// `r(x)` for `x > 0`.
    pub fn eval(&self, x: f64) -> Result<MehlerValue> {
        if !(x > 0.0) || !x.is_finite() {
            return Err(Error::InvalidInput(format!("the Mehler profile is only defined for x > 0, got {x}")));
        }
        let mut sum = self.shell(0, x)?;
        let mut tail;
        let mut k = 0usize;
        loop {
            k += 1;
            let pair = self.shell(k as i64, x)? + self.shell(-(k as i64), x)?;
            sum += pair;
            tail = pair.norm();
            if k >= self.k_min && (tail <= self.rel_tol * sum.norm() || tail <= 1e-3 * self.abs_tol) {
                break;
            }
            if k >= self.k_cap {
                if tail > 1e-8 * sum.norm() && tail > self.abs_tol {
                    return Err(Error::UnderResolved(format!(
                        "Mehler series at x={x}: shell {k} still {tail:.2e} of the sum"
                    )));
                }
                break;
            }
        }
        Ok(MehlerValue { value: sum, shells: k, tail })
    }
}

fn gl_panel(f: &dyn Fn(f64) -> Result<C64>, a: f64, b: f64, gl: &GaussLegendre) -> Result<C64> {
    let (c, r) = (0.5 * (a + b), 0.5 * (b - a));
    let mut s = C64::new(0.0, 0.0);
    for (t, w) in gl.nodes.iter().zip(&gl.weights) {
        s += f(c + r * t)? * (w * r);
    }
    Ok(s)
}

/// Adaptive bisection with Gauss-Legendre panels.
fn adaptive_gl(f: &dyn Fn(f64) -> Result<C64>, a: f64, b: f64, gl: &GaussLegendre, tol: f64, depth: u32) -> Result<C64> {
    let whole = gl_panel(f, a, b, gl)?;
    let mid = 0.5 * (a + b);
    let halves = gl_panel(f, a, mid, gl)? + gl_panel(f, mid, b, gl)?;
    if (whole - halves).norm() <= tol || depth == 0 {
        return Ok(halves);
    }
    Ok(adaptive_gl(f, a, mid, gl, tol, depth - 1)? + adaptive_gl(f, mid, b, gl, tol, depth - 1)?)
}

/// `r(x)` at the sample points via the Mehler series.
pub fn mehler_symbol(r: &SpectralProfileR, d: usize, xs: &[f64]) -> Result<Vec<C64>> {
    let s = MehlerSeries::new(r, d)?;
    xs.par_iter().map(|&x| s.eval(x).map(|v| v.value)).collect()
}

/// Radial Weyl symbol of `R(ξ² − ∂²)`: profile from the Mehler series, exact
/// eigenvalues `R(2n + 1)`.
pub fn mehler_phase_symbol(r: &SpectralProfileR) -> Result<PhaseSymbol> {
    let series = Arc::new(MehlerSeries::new(r, 1)?);
    let f = r.f.clone();
    let profile: Profile = Arc::new(move |x| series.eval(x).map(|v| v.value).unwrap_or(C64::new(f64::NAN, f64::NAN)));
    let eigen: Eigen = Arc::new(move |n| f(2.0 * n as f64 + 1.0));
    Ok(PhaseSymbol::radial_with_eigen(profile, eigen, Some(r.order)))
}

/// Input of [`oscillator_functional`].
pub enum OscillatorInput<'a> {
    /// Spectral profile: the eigenvalue is `R(2n + d)`.
    Spectral(&'a SpectralProfileR),
    /// Radial symbol profile `r`, with `r̂` when known.
    Profile {
        /// `r(x)`, `x ≥ 0`.
        r: &'a (dyn Fn(f64) -> C64 + Sync),
        /// `r̂(τ) = ∫ e^{-iτx} r(x) dx` of any smooth extension of `r`.
        r_hat: Option<&'a (dyn Fn(f64) -> C64 + Sync)>,
    },
}

/// Eigenvalue of `op^w(r(|Θ|²))` on the level-`n` eigenspace of `|ξ|² − Δ`:
/// `(1/2π) ∫ r̂(τ) e^{i(2n+d) arctan τ} (1+τ²)^{-d/2} dτ`.
///
/// With `τ = sinh v` the measure becomes `cosh^{1−d} v dv`. Without `r̂` the
/// equivalent `x`-space Laguerre integral is used.
pub fn oscillator_functional(input: &OscillatorInput<'_>, n: usize, d: usize) -> Result<C64> {
    if d == 0 {
        return Err(Error::InvalidInput("d must be positive".into()));
    }
    match input {
        OscillatorInput::Spectral(r) => Ok(r.eval((2 * n + d) as f64)),
        OscillatorInput::Profile { r, r_hat: None } => Ok(radial_eigenvalue(*r, n, d)),
        OscillatorInput::Profile { r_hat: Some(h), .. } => {
            let nu = (2 * n + d) as f64;
            let gl = GaussLegendre::new(16);
            let f = |v: f64| -> Result<C64> {
                let tau = v.sinh();
                Ok(h(tau) * C64::from_polar(v.cosh().powi(1 - d as i32), nu * tau.atan()))
            };
            // extend the v-range until r̂ is negligible on both ends
            let scale = h(0.0).norm().max(1e-300);
            let mut v_cut: f64 = 2.0;
            while v_cut < 40.0 && (h(v_cut.sinh()).norm() > 1e-17 * scale || h(-v_cut.sinh()).norm() > 1e-17 * scale) {
                v_cut += 1.0;
            }
            if v_cut >= 40.0 {
                return Err(Error::UnderResolved("r̂ does not decay within the τ-range".into()));
            }
            let panels = (2.0 * v_cut / 0.1).ceil() as usize;
            let width = 2.0 * v_cut / panels as f64;
            let mut s = C64::new(0.0, 0.0);
            for p in 0..panels {
                let a = -v_cut + p as f64 * width;
                s += adaptive_gl(&f, a, a + width, &gl, 1e-15 * scale, 8)?;
            }
            Ok(s / (2.0 * PI))
        }
    }
}

/// Laguerre-series profile `Σ_n R(2n+1) ψ(n/N) 2(−1)^n e^{-x} L_n(2x)` with a smooth
/// cutoff `ψ`; exact for `R` supported on the first `N/2` levels.
pub fn laguerre_profile(eig: &(dyn Fn(usize) -> C64 + Sync), x: f64, levels: usize) -> C64 {
    // L_n(2x) by forward recurrence, carrying e^{-x} as a separate log scale
    let t = 2.0 * x;
    let (mut prev, mut cur) = (0.0, 1.0);
    let mut log_scale = -x;
    let mut s = C64::new(0.0, 0.0);
    for n in 0..=levels {
        if n > 0 {
            let next = ((2.0 * n as f64 - 1.0 - t) * cur - (n as f64 - 1.0) * prev) / n as f64;
            prev = cur;
            cur = next;
            if cur.abs() > 1e150 {
                prev *= 1e-150;
                cur *= 1e-150;
                log_scale += 150.0 * std::f64::consts::LN_10;
            }
        }
        let psi = crate::bump::plateau(n as f64 / levels as f64, 0.5, 1.0);
        if psi == 0.0 {
            break;
        }
        let sign = if n % 2 == 0 { 2.0 } else { -2.0 };
        s += eig(n) * (psi * sign * cur * log_scale.exp());
    }
    s
}

/// Levels used by [`laguerre_profile`] for the oscillator powers.
pub const POWER_PROFILE_LEVELS: usize = 400;

/// Symbol `m_μ` with `op^w(m_μ) = 2^μ (1 + ξ² − ∂²)^{μ/2}`.
///
/// Even nonnegative integers give the exact polynomial `(4(1+ξ²+η²))^{#μ/2}`;
/// other orders are radial symbols with exact eigenvalues `2^μ (2n+2)^{μ/2}` and
/// a smoothly truncated Laguerre-series profile.
pub fn make_m_mu(mu: f64) -> Result<PhaseSymbol> {
    if !mu.is_finite() {
        return Err(Error::InvalidInput(format!("order μ={mu}")));
    }
    let base = Poly2::harmonic().add(&Poly2::constant(C64::new(1.0, 0.0))).scale(C64::new(4.0, 0.0));
    oscillator_power(mu, base, move |n| 2f64.powf(mu) * (2.0 * n as f64 + 2.0).powf(mu / 2.0))
}

/// Symbol `m̃_μ` with `op^w(m̃_μ) = 2^μ (ξ² − ∂²)^{μ/2}`, `μ ≥ 0`.
pub fn make_m_tilde_mu(mu: f64) -> Result<PhaseSymbol> {
    if !(mu >= 0.0) || !mu.is_finite() {
        return Err(Error::InvalidInput(format!("the homogeneous oscillator power needs μ ≥ 0, got {mu}")));
    }
    let base = Poly2::harmonic().scale(C64::new(4.0, 0.0));
    oscillator_power(mu, base, move |n| 2f64.powf(mu) * (2.0 * n as f64 + 1.0).powf(mu / 2.0))
}

fn oscillator_power<F>(mu: f64, base: Poly2, eig: F) -> Result<PhaseSymbol>
where
    F: Fn(usize) -> f64 + Send + Sync + 'static,
{
    if mu == 0.0 {
        return Ok(PhaseSymbol::constant(C64::new(1.0, 0.0)));
    }
    if mu > 0.0 && (mu / 2.0).fract() == 0.0 && mu <= 40.0 {
        return Ok(PhaseSymbol::Poly(moyal_power(&base, (mu / 2.0) as u32)));
    }
    let eig = Arc::new(eig);
    let e2 = eig.clone();
    let eigen: Eigen = Arc::new(move |n| C64::new(e2(n), 0.0));
    let profile: Profile = Arc::new(move |x| {
        laguerre_profile(&|n| C64::new(eig(n), 0.0), x, POWER_PROFILE_LEVELS)
    });
    Ok(PhaseSymbol::radial_with_eigen(profile, eigen, Some(mu)))
}

/// Outcome of [`symbol_seminorm`].
#[derive(Clone, Copy, Debug)]
pub struct SeminormReport {
    /// Weighted supremum.
    pub value: f64,
    /// Lattice point where it is attained.
    pub argmax: (f64, f64),
    /// Derivative `(kx, ky)` attaining it.
    pub derivative: (u32, u32),
    /// True when the supremum sits on the outer ring of the box, so a larger box
    /// may increase it.
    pub at_boundary: bool,
}

/// `sup (1+ξ²+η²)^{(|β|−μ)/2} |∂^β a|` over `|β| ≤ n` on a `points × points`
/// lattice of `[-half_width, half_width]²`.
pub fn symbol_seminorm(a: &PhaseSymbol, n: u32, mu: f64, half_width: f64, points: usize) -> Result<SeminormReport> {
    if points < 3 || !(half_width > 0.0) {
        return Err(Error::InvalidInput(format!("seminorm box {points} points, half width {half_width}")));
    }
    let step = 2.0 * half_width / (points - 1) as f64;
    let betas: Vec<(u32, u32)> = (0..=n).flat_map(|k| (0..=k).map(move |j| (k - j, j))).collect();
    let best = (0..points)
        .into_par_iter()
        .map(|i| {
            let mut best = (0.0_f64, (0.0, 0.0), (0, 0), false);
            for j in 0..points {
                let (x, y) = (-half_width + i as f64 * step, -half_width + j as f64 * step);
                let w = oscillator_gain(x, y);
                for &(kx, ky) in &betas {
                    let v = a.deriv(kx, ky, x, y).norm() * w.powf(((kx + ky) as f64 - mu) / 2.0);
                    if v > best.0 || !v.is_finite() {
                        let edge = i == 0 || j == 0 || i == points - 1 || j == points - 1;
                        best = (v, (x, y), (kx, ky), edge);
                    }
                }
            }
            best
        })
        .reduce(|| (0.0, (0.0, 0.0), (0, 0), false), |p, q| if q.0 > p.0 || !q.0.is_finite() { q } else { p });
    if !best.0.is_finite() {
        return Err(Error::NonFinite("symbol derivative in seminorm".into()));
    }
    Ok(SeminormReport { value: best.0, argmax: best.1, derivative: best.2, at_boundary: best.3 })
}

/// Writes `x, re, im` rows of a radial profile.
pub fn write_profile_csv<W: Write>(mut w: W, xs: &[f64], values: &[C64]) -> Result<()> {
    if xs.len() != values.len() {
        return Err(Error::Incompatible(format!("{} abscissae, {} values", xs.len(), values.len())));
    }
    writeln!(w, "x,re,im")?;
    for (x, v) in xs.iter().zip(values) {
        writeln!(w, "{x:.17e},{:.17e},{:.17e}", v.re, v.im)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    fn max_abs(m: &CMatrix) -> f64 {
        m.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    #[test]
    fn moyal_of_coordinates_and_constants() {
        let r = moyal_poly(&Poly2::xi(), &Poly2::eta());
        assert_eq!(r.coeff(1, 1), c(1.0));
        assert_eq!(r.coeff(0, 0), C64::new(0.0, 0.5));
        let h = Poly2::harmonic();
        let sq = moyal_poly(&h, &h);
        let expect = h.mul(&h).sub(&Poly2::constant(c(1.0)));
        assert!(sq.max_coeff_diff(&expect) < 1e-15);
        let a = Poly2::monomial(2, 1, C64::new(0.3, -1.0));
        assert_eq!(moyal_poly(&a, &Poly2::constant(c(1.0))), a);
    }

    #[test]
    fn poly_matrix_matches_mccoy_ordering() {
        // op^w(ξ^i η^j) = 2^{-i} Σ_k C(i,k) Ξ^k H^j Ξ^{i−k}
        let (n, pad) = (8, 20);
        let xi = position_matrix(pad);
        let eta = momentum_matrix(pad);
        for (i, j) in [(1u32, 1u32), (2, 1), (2, 2), (3, 1)] {
            let mut acc = CMatrix::zeros(pad, pad);
            for k in 0..=i {
                let mut t = CMatrix::identity(pad, pad);
                for _ in 0..k {
                    t = &t * &xi;
                }
                for _ in 0..j {
                    t = &t * &eta;
                }
                for _ in 0..(i - k) {
                    t = &t * &xi;
                }
                acc += t * c(binomial(i as usize, k as usize) / 2f64.powi(i as i32));
            }
            let m = poly_matrix(&Poly2::monomial(i, j, c(1.0)), n);
            let diff = max_abs(&(m - acc.view((0, 0), (n + 1, n + 1))));
            assert!(diff < 1e-12, "ξ^{i} η^{j}: {diff}");
        }
    }

    #[test]
    fn harmonic_symbol_is_diagonal_with_odd_eigenvalues() {
        let m = poly_matrix(&Poly2::harmonic(), 10);
        for a in 0..=10 {
            for b in 0..=10 {
                let e = if a == b { 2.0 * a as f64 + 1.0 } else { 0.0 };
                assert!((m[(a, b)] - c(e)).norm() < 1e-13);
            }
        }
    }

    #[test]
    fn wigner_quadrature_agrees_with_exact_polynomial_matrices() {
        let p = Poly2::monomial(1, 2, C64::new(0.5, 0.2)).add(&Poly2::monomial(0, 1, c(-1.0))).add(&Poly2::xi());
        let exact = poly_matrix(&p, 12);
        let pp = p.clone();
        let quad = wigner_matrix(&move |x, y| pp.eval(x, y), 12, phase_space_nodes(12)).unwrap();
        assert!(max_abs(&(exact - quad)) < 1e-10);
    }

    #[test]
    fn wigner_of_constant_is_identity() {
        let m = wigner_matrix(&|_, _| c(1.0), 6, 48).unwrap();
        assert!(max_abs(&(m - CMatrix::identity(7, 7))) < 1e-12);
    }

    #[test]
    fn fd_partials_of_a_smooth_function() {
        let f = |x: f64, y: f64| C64::new((x * y).sin(), x * x);
        let v = fd_partial(&f, 1, 1, 0.3, 0.7);
        let exact = (0.21f64).cos() - 0.21 * (0.21f64).sin();
        assert!((v.re - exact).abs() < 1e-8, "{}", v.re - exact);
        let v2 = fd_partial(&f, 2, 0, 0.3, 0.7);
        assert!((v2.im - 2.0).abs() < 1e-7);
    }

    #[test]
    fn seminorm_examples() {
        let one = PhaseSymbol::constant(c(1.0));
        assert!((symbol_seminorm(&one, 2, 0.0, 5.0, 11).unwrap().value - 1.0).abs() < 1e-12);
        let eta = PhaseSymbol::Poly(Poly2::eta());
        let r = symbol_seminorm(&eta, 0, 1.0, 50.0, 101).unwrap();
        assert!(r.value < 1.0 && r.value > 0.99);
        assert!(r.at_boundary);
    }

    #[test]
    fn lazy_moyal_with_polynomial_factor_uses_the_finite_series() {
        let g = PhaseSymbol::general(|x, y| C64::new((-(x * x + y * y)).exp(), 0.0));
        let prod = PhaseSymbol::moyal(g.clone(), PhaseSymbol::Poly(Poly2::xi()));
        // g # ξ = g ξ + (i/2)(−∂_η g)
        let (x, y): (f64, f64) = (0.4, -0.3);
        let e = (-(x * x + y * y)).exp();
        let expect = C64::new(e * x, 0.0) + C64::new(0.0, 0.5) * (2.0 * y * e);
        assert!((prod.eval(x, y) - expect).norm() < 1e-9);
    }
}
