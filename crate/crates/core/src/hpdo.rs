//! Symbols on `H^d × ℝ* × ℝ^{2d}` and their operators
//! `Op(a)f(w) = c_d Σ_k w_k tr(u_{w⁻¹} F(f)(λ_k) A_{λ_k}(w))`.
//!
//! Symbols are written in the variables already rescaled by `λ`: the matrix
//! `A_λ(w)` is the plain Hermite matrix of `op^w(a(w, λ, ·, ·))`. With this
//! normalization `(1/i)Z` has symbol `√|λ|(η + i sgn(λ) ξ)`, and
//! `σ(a)(w, λ, ξ, η) = a(w, λ, sgn(λ)ξ/√|λ|, η/√|λ|)`.
//!
//! Phase-space work (`(ξ, η)` matrices, kernels, reductions) is implemented for
//! `d = 1`.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::fmt;
use std::sync::{Arc, RwLock};

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::FftPlanner;

use crate::bump::plateau;
use crate::error::{Error, Result};
use crate::fock::{op_norm, rep_matrix, CMatrix, TruncatedBasis};
use crate::fourier::{inverse_gft, LambdaGrid, SpectralFunction};
use crate::group::{Grid, GridFunction, HeisenbergPoint, VectorField};
use crate::quadrature::GaussLegendre;
use crate::weyl::{hermite_matrix, laguerre_profile, Eigen, PhaseSymbol, Poly2, Profile, MOYAL_PAD, POWER_PROFILE_LEVELS};

type C64 = Complex64;

const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);
const I: C64 = C64::new(0.0, 1.0);

/// Function of `w ∈ H^d`.
pub type PointFn = Arc<dyn Fn(&HeisenbergPoint) -> C64 + Send + Sync>;
/// Function of `λ ≠ 0`.
pub type LambdaFn = Arc<dyn Fn(f64) -> C64 + Send + Sync>;
/// Full evaluator `a(w, λ, ξ, η)`.
pub type FullFn = Arc<dyn Fn(&HeisenbergPoint, f64, f64, f64) -> C64 + Send + Sync>;
/// λ-indexed family of phase-space symbols.
pub type PhaseFamily = Arc<dyn Fn(f64) -> PhaseSymbol + Send + Sync>;

// ---------------------------------------------------------------------------
// Finite differences
// ---------------------------------------------------------------------------

/// Relative step of every finite difference in this module.
pub const FD_STEP: f64 = 1e-3;

fn fd4(f: &dyn Fn(f64) -> C64, x: f64, h: f64) -> C64 {
    (f(x - 2.0 * h) - f(x - h) * 8.0 + f(x + h) * 8.0 - f(x + 2.0 * h)) / (12.0 * h)
}

/// Step in `λ`: relative to `|λ|` since symbols may be singular at `λ = 0`.
fn lambda_step(lambda: f64) -> f64 {
    FD_STEP * lambda.abs()
}

/// Coordinate partial of `f` at `w`; `axis < d` is `x_j`, `d ≤ axis < 2d` is `y_j`, `2d` is `s`.
fn point_partial(f: &dyn Fn(&HeisenbergPoint) -> C64, w: &HeisenbergPoint, axis: usize) -> C64 {
    let d = w.dim();
    let coord = if axis < d {
        w.x[axis]
    } else if axis < 2 * d {
        w.y[axis - d]
    } else {
        w.s
    };
    let h = FD_STEP * coord.abs().max(1.0);
    let g = |t: f64| {
        let mut p = w.clone();
        if axis < d {
            p.x[axis] = t;
        } else if axis < 2 * d {
            p.y[axis - d] = t;
        } else {
            p.s = t;
        }
        f(&p)
    };
    fd4(&g, coord, h)
}

/// Left-invariant field applied to a function of `w`, by 4th-order differences.
pub fn field_at(field: VectorField, f: &dyn Fn(&HeisenbergPoint) -> C64, w: &HeisenbergPoint) -> C64 {
    let d = w.dim();
    let xf = |j: usize| point_partial(f, w, j) + point_partial(f, w, 2 * d) * (2.0 * w.y[j]);
    let yf = |j: usize| point_partial(f, w, d + j) - point_partial(f, w, 2 * d) * (2.0 * w.x[j]);
    match field {
        VectorField::X(j) => xf(j),
        VectorField::Y(j) => yf(j),
        VectorField::Z(j) => (xf(j) - I * yf(j)) * 0.5,
        VectorField::Zbar(j) => (xf(j) + I * yf(j)) * 0.5,
        VectorField::S => point_partial(f, w, 2 * d),
    }
}

// ---------------------------------------------------------------------------
// Symbol representation
// ---------------------------------------------------------------------------

/// Phase-space factor of a separable term.
#[derive(Clone)]
pub enum PhaseFactor {
    /// The same symbol for every `λ`.
    Fixed(PhaseSymbol),
    /// A symbol that depends on `λ`.
    PerLambda(PhaseFamily),
}

impl PhaseFactor {
    /// The phase-space symbol at `λ`.
    pub fn at(&self, lambda: f64) -> PhaseSymbol {
        match self {
            PhaseFactor::Fixed(p) => p.clone(),
            PhaseFactor::PerLambda(f) => f(lambda),
        }
    }

    fn map<F>(&self, f: F) -> PhaseFactor
    where
        F: Fn(&PhaseSymbol) -> PhaseSymbol + Send + Sync + 'static,
    {
        match self {
            PhaseFactor::Fixed(p) => PhaseFactor::Fixed(f(p)),
            PhaseFactor::PerLambda(g) => {
                let g = g.clone();
                PhaseFactor::PerLambda(Arc::new(move |l| f(&g(l))))
            }
        }
    }

    fn is_fixed(&self) -> bool {
        matches!(self, PhaseFactor::Fixed(_))
    }
}

/// One term `b(w) β(λ) p_λ(ξ, η)`; `w = None` means `b ≡ 1`.
#[derive(Clone)]
pub struct SymbolTerm {
    /// Factor in `w`.
    pub w: Option<PointFn>,
    /// Factor in `λ`.
    pub lambda: LambdaFn,
    /// Factor in `(ξ, η)`.
    pub phase: PhaseFactor,
}

impl SymbolTerm {
    /// Builds a term.
    pub fn new(w: Option<PointFn>, lambda: LambdaFn, phase: PhaseFactor) -> Self {
        Self { w, lambda, phase }
    }

    /// `β(λ) p(ξ, η)` with a fixed phase factor.
    pub fn multiplier<F>(lambda: F, phase: PhaseSymbol) -> Self
    where
        F: Fn(f64) -> C64 + Send + Sync + 'static,
    {
        Self { w: None, lambda: Arc::new(lambda), phase: PhaseFactor::Fixed(phase) }
    }

    fn w_value(&self, w: &HeisenbergPoint) -> C64 {
        self.w.as_ref().map_or(ONE, |b| b(w))
    }

    /// Value at `(w, λ, ξ, η)`.
    pub fn eval(&self, w: &HeisenbergPoint, lambda: f64, xi: f64, eta: f64) -> C64 {
        self.w_value(w) * (self.lambda)(lambda) * self.phase.at(lambda).eval(xi, eta)
    }

    fn with_phase(&self, phase: PhaseFactor) -> Self {
        Self { w: self.w.clone(), lambda: self.lambda.clone(), phase }
    }

    fn with_lambda(&self, lambda: LambdaFn) -> Self {
        Self { w: self.w.clone(), lambda, phase: self.phase.clone() }
    }
}

/// Structural form of a [`HeisenbergSymbol`].
#[derive(Clone)]
pub enum SymbolForm {
    /// `Σ b_t(w) β_t(λ) p_t(ξ, η)`.
    Separable(Vec<SymbolTerm>),
    /// Arbitrary evaluator.
    General {
        /// `a(w, λ, ξ, η)`.
        f: FullFn,
        /// Whether `a` ignores `w`.
        w_independent: bool,
    },
    /// Pointwise Moyal product `a # b` in `(ξ, η)`, frozen `(w, λ)`.
    Product(Arc<HeisenbergSymbol>, Arc<HeisenbergSymbol>),
    /// `Σ c_i a_i`.
    Combination(Vec<(C64, HeisenbergSymbol)>),
}

#[derive(Hash, PartialEq, Eq)]
struct CacheKey {
    term: usize,
    lambda: u64,
    w: Vec<u64>,
    n_max: usize,
}

/// Entries kept per symbol before further matrices are recomputed instead of stored.
const CACHE_CAPACITY: usize = 8192;

/// Per-symbol `(w, λ)` matrix cache: shared reads, exclusive inserts. Symbols
/// are immutable and derived symbols get a fresh cache, so entries never go stale.
#[derive(Default)]
struct MatrixCache {
    map: RwLock<HashMap<CacheKey, Arc<CMatrix>>>,
}

impl MatrixCache {
    fn get_or_try<F>(&self, key: CacheKey, make: F) -> Result<Arc<CMatrix>>
    where
        F: FnOnce() -> Result<CMatrix>,
    {
        if let Some(m) = self.map.read().expect("matrix cache poisoned").get(&key) {
            return Ok(m.clone());
        }
        let m = Arc::new(make()?);
        let mut map = self.map.write().expect("matrix cache poisoned");
        if map.len() < CACHE_CAPACITY {
            map.insert(key, m.clone());
        }
        Ok(m)
    }
}

/// A symbol `a(w, λ, ξ, η)` of declared order `μ`.
#[derive(Clone)]
pub struct HeisenbergSymbol {
    name: String,
    order: f64,
    form: SymbolForm,
    cache: Arc<MatrixCache>,
}

impl fmt::Debug for HeisenbergSymbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "HeisenbergSymbol({}, order {})", self.name, self.order)
    }
}

fn lambda_key(lambda: f64) -> u64 {
    lambda.to_bits()
}

fn point_key(w: &HeisenbergPoint) -> Vec<u64> {
    w.x.iter().chain(&w.y).chain(std::iter::once(&w.s)).map(|v| v.to_bits()).collect()
}

fn sgn(lambda: f64) -> f64 {
    if lambda > 0.0 {
        1.0
    } else {
        -1.0
    }
}

impl HeisenbergSymbol {
    fn from_form(name: impl Into<String>, order: f64, form: SymbolForm) -> Self {
        Self { name: name.into(), order, form, cache: Arc::default() }
    }

    /// Separable symbol from its terms.
    pub fn separable(name: impl Into<String>, order: f64, terms: Vec<SymbolTerm>) -> Self {
        Self::from_form(name, order, SymbolForm::Separable(terms))
    }

    /// Symbol from a full evaluator.
    pub fn general<F>(name: impl Into<String>, order: f64, w_independent: bool, f: F) -> Self
    where
        F: Fn(&HeisenbergPoint, f64, f64, f64) -> C64 + Send + Sync + 'static,
    {
        Self::from_form(name, order, SymbolForm::General { f: Arc::new(f), w_independent })
    }

    /// Fourier multiplier `β(λ) p(ξ, η)`.
    pub fn multiplier<F>(name: impl Into<String>, order: f64, lambda: F, phase: PhaseSymbol) -> Self
    where
        F: Fn(f64) -> C64 + Send + Sync + 'static,
    {
        Self::separable(name, order, vec![SymbolTerm::multiplier(lambda, phase)])
    }

    /// Symbol depending on `λ` only.
    pub fn lambda_only<F>(name: impl Into<String>, order: f64, lambda: F) -> Self
    where
        F: Fn(f64) -> C64 + Send + Sync + 'static,
    {
        Self::multiplier(name, order, lambda, PhaseSymbol::constant(ONE))
    }

    /// Multiplication by `b(w)`, order 0.
    pub fn multiplication(name: impl Into<String>, b: PointFn) -> Self {
        Self::separable(
            name,
            0.0,
            vec![SymbolTerm::new(Some(b), Arc::new(|_| ONE), PhaseFactor::Fixed(PhaseSymbol::constant(ONE)))],
        )
    }

    /// The constant symbol `c`.
    pub fn constant(c: C64) -> Self {
        Self::lambda_only(format!("{c}"), 0.0, move |_| c)
    }

    /// Display name.
    pub fn name(&self) -> &str {
        &self.name
    }

    /// Declared order `μ`.
    pub fn order(&self) -> f64 {
        self.order
    }

    /// Structural form.
    pub fn form(&self) -> &SymbolForm {
        &self.form
    }

    /// Same symbol under another name.
    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    /// Same symbol with another declared order.
    pub fn with_order(mut self, order: f64) -> Self {
        self.order = order;
        self
    }

    /// Whether `a` does not depend on `w` (a Fourier multiplier).
    pub fn is_w_independent(&self) -> bool {
        match &self.form {
            SymbolForm::Separable(t) => t.iter().all(|t| t.w.is_none()),
            SymbolForm::General { w_independent, .. } => *w_independent,
            SymbolForm::Product(a, b) => a.is_w_independent() && b.is_w_independent(),
            SymbolForm::Combination(t) => t.iter().all(|(_, s)| s.is_w_independent()),
        }
    }

    /// Whether `a` is a polynomial in `(ξ, η)` for every `(w, λ)`.
    pub fn is_polynomial(&self) -> bool {
        match &self.form {
            SymbolForm::Separable(t) => {
                t.iter().all(|t| matches!(&t.phase, PhaseFactor::Fixed(p) if p.as_poly().is_some()))
            }
            SymbolForm::General { .. } => false,
            SymbolForm::Product(a, b) => a.is_polynomial() && b.is_polynomial(),
            SymbolForm::Combination(t) => t.iter().all(|(_, s)| s.is_polynomial()),
        }
    }

    /// `a(w, λ, ξ, η)`.
    pub fn eval(&self, w: &HeisenbergPoint, lambda: f64, xi: f64, eta: f64) -> C64 {
        match &self.form {
            SymbolForm::Separable(t) => t.iter().map(|t| t.eval(w, lambda, xi, eta)).sum(),
            SymbolForm::General { f, .. } => f(w, lambda, xi, eta),
            SymbolForm::Product(..) => self.phase_at(w, lambda).eval(xi, eta),
            SymbolForm::Combination(t) => t.iter().map(|(c, s)| c * s.eval(w, lambda, xi, eta)).sum(),
        }
    }

    /// `σ(a)(w, λ, ξ, η) = a(w, λ, sgn(λ)ξ/√|λ|, η/√|λ|)`.
    pub fn sigma(&self, w: &HeisenbergPoint, lambda: f64, xi: f64, eta: f64) -> C64 {
        let r = lambda.abs().sqrt();
        self.eval(w, lambda, sgn(lambda) * xi / r, eta / r)
    }

    /// The phase-space symbol `a(w, λ, ·, ·)`.
    pub fn phase_at(&self, w: &HeisenbergPoint, lambda: f64) -> PhaseSymbol {
        match &self.form {
            SymbolForm::Separable(t) => {
                PhaseSymbol::sum(t.iter().map(|t| (t.w_value(w) * (t.lambda)(lambda), t.phase.at(lambda))).collect())
            }
            SymbolForm::General { f, .. } => {
                let f = f.clone();
                let w = w.clone();
                PhaseSymbol::general_with_order(move |x, y| f(&w, lambda, x, y), self.order)
            }
            SymbolForm::Product(a, b) => PhaseSymbol::moyal(a.phase_at(w, lambda), b.phase_at(w, lambda)),
            SymbolForm::Combination(t) => {
                PhaseSymbol::sum(t.iter().map(|(c, s)| (*c, s.phase_at(w, lambda))).collect())
            }
        }
    }

    /// `A_λ(w)`: Hermite matrix of `op^w(a(w, λ, ·, ·))`, `|α| ≤ n_max` (`d = 1`).
    pub fn matrix(&self, w: &HeisenbergPoint, lambda: f64, n_max: usize) -> Result<CMatrix> {
        if lambda == 0.0 || !lambda.is_finite() {
            return Err(Error::InvalidInput(format!("symbol matrices need λ ≠ 0, got {lambda}")));
        }
        match &self.form {
            SymbolForm::Separable(t) => {
                let mut m = CMatrix::zeros(n_max + 1, n_max + 1);
                for (i, term) in t.iter().enumerate() {
                    let c = term.w_value(w) * (term.lambda)(lambda);
                    if c == ZERO {
                        continue;
                    }
                    m += &*self.term_matrix(i, term, lambda, n_max)? * c;
                }
                Ok(m)
            }
            SymbolForm::General { w_independent, .. } => {
                let key = CacheKey {
                    term: usize::MAX,
                    lambda: lambda_key(lambda),
                    w: if *w_independent { Vec::new() } else { point_key(w) },
                    n_max,
                };
                let m = self.cache.get_or_try(key, || hermite_matrix(&self.phase_at(w, lambda), n_max))?;
                Ok((*m).clone())
            }
            SymbolForm::Product(a, b) => {
                let pad = n_max + MOYAL_PAD;
                let p = a.matrix(w, lambda, pad)? * b.matrix(w, lambda, pad)?;
                Ok(p.view((0, 0), (n_max + 1, n_max + 1)).into_owned())
            }
            SymbolForm::Combination(t) => {
                let mut m = CMatrix::zeros(n_max + 1, n_max + 1);
                for (c, s) in t {
                    m += s.matrix(w, lambda, n_max)? * *c;
                }
                Ok(m)
            }
        }
    }

    fn term_matrix(&self, i: usize, term: &SymbolTerm, lambda: f64, n_max: usize) -> Result<Arc<CMatrix>> {
        let lk = if term.phase.is_fixed() { 0 } else { lambda_key(lambda) };
        let key = CacheKey { term: i, lambda: lk, w: Vec::new(), n_max };
        self.cache.get_or_try(key, || hermite_matrix(&term.phase.at(lambda), n_max))
    }

    // -- algebra ------------------------------------------------------------

    /// `Σ c_i a_i`; separable inputs stay separable.
    pub fn linear(name: impl Into<String>, parts: Vec<(C64, HeisenbergSymbol)>) -> Self {
        let order = parts.iter().map(|(_, s)| s.order).fold(f64::NEG_INFINITY, f64::max);
        if parts.iter().all(|(_, s)| matches!(s.form, SymbolForm::Separable(_))) {
            let mut terms = Vec::new();
            for (c, s) in &parts {
                if let SymbolForm::Separable(t) = &s.form {
                    for term in t {
                        let c = *c;
                        let l = term.lambda.clone();
                        terms.push(term.with_lambda(Arc::new(move |x| c * l(x))));
                    }
                }
            }
            return Self::separable(name, order, terms);
        }
        Self::from_form(name, order, SymbolForm::Combination(parts))
    }

    /// `a + b`.
    pub fn add(&self, other: &Self) -> Self {
        Self::linear(format!("({} + {})", self.name, other.name), vec![(ONE, self.clone()), (ONE, other.clone())])
    }

    /// `a − b`.
    pub fn sub(&self, other: &Self) -> Self {
        Self::linear(format!("({} - {})", self.name, other.name), vec![(ONE, self.clone()), (-ONE, other.clone())])
    }

    /// `c · a`.
    pub fn scale(&self, c: C64) -> Self {
        Self::linear(format!("{c}·{}", self.name), vec![(c, self.clone())])
    }

    /// `β(λ) · a`.
    pub fn mul_lambda(&self, beta: LambdaFn) -> Self {
        let name = format!("β·{}", self.name);
        match &self.form {
            SymbolForm::Separable(t) => Self::separable(
                name,
                self.order,
                t.iter()
                    .map(|term| {
                        let l = term.lambda.clone();
                        let b = beta.clone();
                        term.with_lambda(Arc::new(move |x| l(x) * b(x)))
                    })
                    .collect(),
            ),
            SymbolForm::Combination(t) => Self::from_form(
                name,
                self.order,
                SymbolForm::Combination(t.iter().map(|(c, s)| (*c, s.mul_lambda(beta.clone()))).collect()),
            ),
            SymbolForm::Product(a, b) => {
                Self::from_form(name, self.order, SymbolForm::Product(Arc::new(a.mul_lambda(beta)), b.clone()))
            }
            SymbolForm::General { f, w_independent } => {
                let f = f.clone();
                Self::general(name, self.order, *w_independent, move |w, l, x, y| beta(l) * f(w, l, x, y))
            }
        }
    }

    /// `b(w) · a`.
    pub fn mul_point(&self, b: PointFn) -> Self {
        let name = format!("b·{}", self.name);
        match &self.form {
            SymbolForm::Separable(t) => Self::separable(
                name,
                self.order,
                t.iter()
                    .map(|term| SymbolTerm {
                        w: Some(match &term.w {
                            None => b.clone(),
                            Some(old) => {
                                let (old, b) = (old.clone(), b.clone());
                                Arc::new(move |w: &HeisenbergPoint| old(w) * b(w))
                            }
                        }),
                        lambda: term.lambda.clone(),
                        phase: term.phase.clone(),
                    })
                    .collect(),
            ),
            SymbolForm::Combination(t) => Self::from_form(
                name,
                self.order,
                SymbolForm::Combination(t.iter().map(|(c, s)| (*c, s.mul_point(b.clone()))).collect()),
            ),
            SymbolForm::Product(a, c) => {
                Self::from_form(name, self.order, SymbolForm::Product(Arc::new(a.mul_point(b)), c.clone()))
            }
            SymbolForm::General { f, .. } => {
                let f = f.clone();
                Self::general(name, self.order, false, move |w, l, x, y| b(w) * f(w, l, x, y))
            }
        }
    }

    /// Complex conjugate `ā`.
    pub fn conj(&self) -> Self {
        let name = format!("conj({})", self.name);
        match &self.form {
            SymbolForm::Separable(t) => Self::separable(
                name,
                self.order,
                t.iter()
                    .map(|term| {
                        let l = term.lambda.clone();
                        SymbolTerm {
                            w: term.w.clone().map(|b| Arc::new(move |w: &HeisenbergPoint| b(w).conj()) as PointFn),
                            lambda: Arc::new(move |x| l(x).conj()),
                            phase: term.phase.map(|p| p.conj()),
                        }
                    })
                    .collect(),
            ),
            SymbolForm::General { f, w_independent } => {
                let f = f.clone();
                Self::general(name, self.order, *w_independent, move |w, l, x, y| f(w, l, x, y).conj())
            }
            SymbolForm::Product(a, b) => {
                Self::from_form(name, self.order, SymbolForm::Product(Arc::new(b.conj()), Arc::new(a.conj())))
            }
            SymbolForm::Combination(t) => Self::from_form(
                name,
                self.order,
                SymbolForm::Combination(t.iter().map(|(c, s)| (c.conj(), s.conj())).collect()),
            ),
        }
    }

    /// `∂_ξ^kx ∂_η^ky a`, order lowered by `kx + ky`.
    pub fn phase_derivative(&self, kx: u32, ky: u32) -> Self {
        let name = format!("∂^({kx},{ky}){}", self.name);
        let order = self.order - (kx + ky) as f64;
        if kx == 0 && ky == 0 {
            return self.clone();
        }
        match &self.form {
            SymbolForm::Separable(t) => Self::separable(
                name,
                order,
                t.iter().map(|term| term.with_phase(term.phase.map(move |p| p.derivative(kx, ky)))).collect(),
            ),
            SymbolForm::Combination(t) => Self::from_form(
                name,
                order,
                SymbolForm::Combination(t.iter().map(|(c, s)| (*c, s.phase_derivative(kx, ky))).collect()),
            ),
            SymbolForm::Product(a, b) if kx + ky == 1 => {
                // Leibniz: the Moyal product has constant coefficients.
                let left = a.phase_derivative(kx, ky).moyal_pointwise(b);
                let right = a.moyal_pointwise(&b.phase_derivative(kx, ky));
                Self::linear(name, vec![(ONE, left), (ONE, right)]).with_order(order)
            }
            SymbolForm::Product(..) => {
                let first = if kx > 0 { self.phase_derivative(1, 0) } else { self.phase_derivative(0, 1) };
                let (rx, ry) = if kx > 0 { (kx - 1, ky) } else { (kx, ky - 1) };
                first.phase_derivative(rx, ry).with_name(name)
            }
            SymbolForm::General { w_independent, .. } => {
                let a = self.clone();
                Self::general(name, order, *w_independent, move |w, l, x, y| {
                    a.phase_at(w, l).deriv(kx, ky, x, y)
                })
            }
        }
    }

    /// Euler operator `(ξ∂_ξ + η∂_η) a`.
    pub fn euler(&self) -> Self {
        let name = format!("E{}", self.name);
        match &self.form {
            SymbolForm::Separable(t) => Self::separable(
                name,
                self.order,
                t.iter().map(|term| term.with_phase(term.phase.map(euler_phase))).collect(),
            ),
            SymbolForm::Combination(t) => Self::from_form(
                name,
                self.order,
                SymbolForm::Combination(t.iter().map(|(c, s)| (*c, s.euler())).collect()),
            ),
            _ => {
                let a = self.clone();
                Self::general(name, self.order, self.is_w_independent(), move |w, l, x, y| {
                    let p = a.phase_at(w, l);
                    p.deriv(1, 0, x, y) * x + p.deriv(0, 1, x, y) * y
                })
            }
        }
    }

    /// `∂_λ a` by 4th-order differences with step relative to `|λ|`.
    pub fn lambda_derivative(&self) -> Self {
        let name = format!("∂λ{}", self.name);
        match &self.form {
            SymbolForm::Separable(t) if t.iter().all(|t| t.phase.is_fixed()) => Self::separable(
                name,
                self.order,
                t.iter()
                    .map(|term| {
                        let l = term.lambda.clone();
                        term.with_lambda(Arc::new(move |x| fd4(&|y| l(y), x, lambda_step(x))))
                    })
                    .collect(),
            ),
            SymbolForm::Combination(t) => Self::from_form(
                name,
                self.order,
                SymbolForm::Combination(t.iter().map(|(c, s)| (*c, s.lambda_derivative())).collect()),
            ),
            _ => {
                let a = self.clone();
                Self::general(name, self.order, self.is_w_independent(), move |w, l, x, y| {
                    fd4(&|m| a.eval(w, m, x, y), l, lambda_step(l))
                })
            }
        }
    }

    /// `V a` for a left-invariant field `V` acting on `w`.
    pub fn field(&self, field: VectorField) -> Self {
        let name = format!("{field:?}{}", self.name);
        match &self.form {
            SymbolForm::Separable(t) => Self::separable(
                name,
                self.order,
                t.iter()
                    .filter_map(|term| {
                        let b = term.w.clone()?;
                        Some(SymbolTerm {
                            w: Some(Arc::new(move |w: &HeisenbergPoint| field_at(field, &*b, w))),
                            lambda: term.lambda.clone(),
                            phase: term.phase.clone(),
                        })
                    })
                    .collect(),
            ),
            SymbolForm::Combination(t) => Self::from_form(
                name,
                self.order,
                SymbolForm::Combination(t.iter().map(|(c, s)| (*c, s.field(field))).collect()),
            ),
            SymbolForm::Product(a, b) => {
                let left = a.field(field).moyal_pointwise(b);
                let right = a.moyal_pointwise(&b.field(field));
                Self::linear(name, vec![(ONE, left), (ONE, right)]).with_order(self.order)
            }
            SymbolForm::General { w_independent: true, .. } => Self::separable(name, self.order, Vec::new()),
            SymbolForm::General { f, .. } => {
                let f = f.clone();
                Self::general(name, self.order, false, move |w, l, x, y| field_at(field, &|p| f(p, l, x, y), w))
            }
        }
    }

    /// Pointwise Moyal product `a # b` in `(ξ, η)` at frozen `(w, λ)`.
    pub fn moyal_pointwise(&self, other: &Self) -> Self {
        let name = format!("({} # {})", self.name, other.name);
        let order = self.order + other.order;
        if let (SymbolForm::Separable(ta), SymbolForm::Separable(tb)) = (&self.form, &other.form) {
            let mut terms = Vec::with_capacity(ta.len() * tb.len());
            for a in ta {
                for b in tb {
                    let w = match (&a.w, &b.w) {
                        (None, None) => None,
                        (Some(f), None) | (None, Some(f)) => Some(f.clone()),
                        (Some(f), Some(g)) => {
                            let (f, g) = (f.clone(), g.clone());
                            Some(Arc::new(move |p: &HeisenbergPoint| f(p) * g(p)) as PointFn)
                        }
                    };
                    let (la, lb) = (a.lambda.clone(), b.lambda.clone());
                    let lambda: LambdaFn = Arc::new(move |x| la(x) * lb(x));
                    let phase = match (&a.phase, &b.phase) {
                        (PhaseFactor::Fixed(p), PhaseFactor::Fixed(q)) => {
                            PhaseFactor::Fixed(PhaseSymbol::moyal(p.clone(), q.clone()))
                        }
                        (pa, pb) => {
                            let (pa, pb) = (pa.clone(), pb.clone());
                            PhaseFactor::PerLambda(Arc::new(move |l| PhaseSymbol::moyal(pa.at(l), pb.at(l))))
                        }
                    };
                    terms.push(SymbolTerm { w, lambda, phase });
                }
            }
            return Self::separable(name, order, terms);
        }
        Self::from_form(name, order, SymbolForm::Product(Arc::new(self.clone()), Arc::new(other.clone())))
    }
}

fn euler_phase(p: &PhaseSymbol) -> PhaseSymbol {
    match p.as_poly() {
        Some(q) => {
            let mut out = Poly2::zero();
            for ((i, j), c) in q.terms() {
                out = out.add(&Poly2::monomial(i, j, c * (i + j) as f64));
            }
            PhaseSymbol::Poly(out)
        }
        None => {
            let p = p.clone();
            let order = p.order();
            let f = move |x: f64, y: f64| p.deriv(1, 0, x, y) * x + p.deriv(0, 1, x, y) * y;
            match order {
                Some(o) => PhaseSymbol::general_with_order(f, o),
                None => PhaseSymbol::general(f),
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Built-in symbols
// ---------------------------------------------------------------------------

/// Named built-in symbols.
#[derive(Clone)]
pub enum Builtin {
    /// `(1/i) Z_j`: `√|λ|(η + i sgn(λ) ξ)`.
    Z(usize),
    /// `(1/i) Z̄_j`: `√|λ|(η − i sgn(λ) ξ)`.
    Zbar(usize),
    /// `X_j = Z_j + Z̄_j`: `2i√|λ| η`.
    X(usize),
    /// `Y_j = i(Z_j − Z̄_j)`: `−2i sgn(λ)√|λ| ξ`.
    Y(usize),
    /// `∂_s`: `−iλ`, since `F(∂_s f)(λ) = −iλ F(f)(λ)` for `u_w` carrying `e^{iλs}`.
    S,
    /// `−Δ`: `4|λ|(ξ² + η²)`.
    MinusLaplacian,
    /// `(Id − Δ)^{μ/2}`.
    BesselPower(f64),
    /// `(−Δ)^{ν/2}`, `ν ≥ 0`.
    HomPower(f64),
    /// Multiplication by `b(w)`.
    Multiplication(PointFn),
}

impl fmt::Debug for Builtin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Builtin::Z(j) => write!(f, "Z{}", j + 1),
            Builtin::Zbar(j) => write!(f, "Zbar{}", j + 1),
            Builtin::X(j) => write!(f, "X{}", j + 1),
            Builtin::Y(j) => write!(f, "Y{}", j + 1),
            Builtin::S => write!(f, "S"),
            Builtin::MinusLaplacian => write!(f, "minusLaplacian"),
            Builtin::BesselPower(m) => write!(f, "besselPower({m})"),
            Builtin::HomPower(n) => write!(f, "homPower({n})"),
            Builtin::Multiplication(_) => write!(f, "multiplication"),
        }
    }
}

fn xi() -> PhaseSymbol {
    PhaseSymbol::Poly(Poly2::xi())
}

fn eta() -> PhaseSymbol {
    PhaseSymbol::Poly(Poly2::eta())
}

/// Radial per-λ symbol with exact eigenvalues `g(4|λ|(2n+1))` and a truncated
/// Laguerre profile.
fn spectral_radial(g: Arc<dyn Fn(f64) -> f64 + Send + Sync>, order: f64) -> PhaseFactor {
    PhaseFactor::PerLambda(Arc::new(move |lambda| {
        let g1 = g.clone();
        let eigen: Eigen = Arc::new(move |n| C64::new(g1(4.0 * lambda.abs() * (2 * n + 1) as f64), 0.0));
        let e2 = eigen.clone();
        let profile: Profile = Arc::new(move |x| laguerre_profile(&*e2, x, POWER_PROFILE_LEVELS));
        PhaseSymbol::radial_with_eigen(profile, eigen, Some(order))
    }))
}

/// Polynomial `4|λ| H` and `1 + 4|λ| H` as separable terms (`H = ξ² + η²`).
fn laplacian_terms(with_identity: bool) -> Vec<SymbolTerm> {
    let mut t = vec![SymbolTerm::multiplier(|l: f64| C64::new(4.0 * l.abs(), 0.0), PhaseSymbol::Poly(Poly2::harmonic()))];
    if with_identity {
        t.push(SymbolTerm::multiplier(|_| ONE, PhaseSymbol::constant(ONE)));
    }
    t
}

fn check_index(j: usize) -> Result<()> {
    if j != 0 {
        return Err(Error::Unsupported(format!("symbols are implemented for d = 1; field index {} requested", j + 1)));
    }
    Ok(())
}

/// The symbol of a built-in operator.
pub fn builtin_symbol(b: Builtin) -> Result<HeisenbergSymbol> {
    let name = format!("{b:?}");
    let root = |l: f64| l.abs().sqrt();
    Ok(match b {
        Builtin::Z(j) | Builtin::Zbar(j) => {
            check_index(j)?;
            let s = if matches!(b, Builtin::Z(_)) { 1.0 } else { -1.0 };
            HeisenbergSymbol::separable(
                name,
                1.0,
                vec![
                    SymbolTerm::multiplier(move |l| C64::new(root(l), 0.0), eta()),
                    SymbolTerm::multiplier(move |l| C64::new(0.0, s * sgn(l) * root(l)), xi()),
                ],
            )
        }
        Builtin::X(j) => {
            check_index(j)?;
            HeisenbergSymbol::multiplier(name, 1.0, move |l| C64::new(0.0, 2.0 * root(l)), eta())
        }
        Builtin::Y(j) => {
            check_index(j)?;
            HeisenbergSymbol::multiplier(name, 1.0, move |l| C64::new(0.0, -2.0 * sgn(l) * root(l)), xi())
        }
        Builtin::S => HeisenbergSymbol::lambda_only(name, 2.0, |l| C64::new(0.0, -l)),
        Builtin::MinusLaplacian => HeisenbergSymbol::separable(name, 2.0, laplacian_terms(false)),
        Builtin::BesselPower(mu) => {
            if !mu.is_finite() {
                return Err(Error::InvalidInput(format!("order μ={mu}")));
            }
            oscillator_power_symbol(name, mu, true)
        }
        Builtin::HomPower(nu) => {
            if !(nu >= 0.0) || !nu.is_finite() {
                return Err(Error::InvalidInput(format!("homPower needs ν ≥ 0, got {nu}")));
            }
            oscillator_power_symbol(name, nu, false)
        }
        Builtin::Multiplication(f) => HeisenbergSymbol::multiplication(name, f),
    })
}

/// `(Id − Δ)^{μ/2}` or `(−Δ)^{μ/2}`: exact Moyal powers for even nonnegative
/// integers, exact-eigenvalue radial symbols otherwise.
fn oscillator_power_symbol(name: String, mu: f64, with_identity: bool) -> HeisenbergSymbol {
    let half = mu / 2.0;
    if half >= 0.0 && half.fract() == 0.0 {
        let base = HeisenbergSymbol::separable("base", 2.0, laplacian_terms(with_identity));
        let mut acc = HeisenbergSymbol::constant(ONE);
        for _ in 0..half as u32 {
            acc = acc.moyal_pointwise(&base);
        }
        return acc.with_name(name).with_order(mu);
    }
    let shift = if with_identity { 1.0 } else { 0.0 };
    let g: Arc<dyn Fn(f64) -> f64 + Send + Sync> = Arc::new(move |e| (shift + e).powf(half));
    HeisenbergSymbol::separable(name, mu, vec![SymbolTerm::new(None, Arc::new(|_| ONE), spectral_radial(g, mu))])
}

/// Built-in by name: `Z1`, `Zbar1`, `X1`, `Y1`, `S`, `minusLaplacian`,
/// `besselPower(μ)`, `homPower(ν)`.
pub fn builtin_by_name(name: &str) -> Result<HeisenbergSymbol> {
    let arg = |prefix: &str| -> Option<Result<f64>> {
        let rest = name.strip_prefix(prefix)?.strip_prefix('(')?.strip_suffix(')')?;
        Some(rest.trim().parse::<f64>().map_err(|e| Error::InvalidInput(format!("{name}: {e}"))))
    };
    let index = |prefix: &str| -> Option<Result<usize>> {
        let rest = name.strip_prefix(prefix)?;
        let j: usize = rest.parse().ok()?;
        Some(if j == 0 { Err(Error::InvalidInput(format!("{name}: indices start at 1"))) } else { Ok(j - 1) })
    };
    let b = if let Some(j) = index("Zbar") {
        Builtin::Zbar(j?)
    } else if let Some(j) = index("Z") {
        Builtin::Z(j?)
    } else if let Some(j) = index("X") {
        Builtin::X(j?)
    } else if let Some(j) = index("Y") {
        Builtin::Y(j?)
    } else if name == "S" {
        Builtin::S
    } else if name == "minusLaplacian" {
        Builtin::MinusLaplacian
    } else if let Some(m) = arg("besselPower") {
        Builtin::BesselPower(m?)
    } else if let Some(m) = arg("homPower") {
        Builtin::HomPower(m?)
    } else {
        return Err(Error::InvalidInput(format!("unknown built-in symbol {name:?}")));
    };
    builtin_symbol(b)
}

// ---------------------------------------------------------------------------
// Operators
// ---------------------------------------------------------------------------

/// Spectral data `F_k A_k` of a Fourier multiplier.
pub fn multiplier_spectral(a: &HeisenbergSymbol, spec: &SpectralFunction) -> Result<SpectralFunction> {
    if !a.is_w_independent() {
        return Err(Error::InvalidInput(format!("{} depends on w", a.name())));
    }
    check_d1(spec)?;
    let origin = HeisenbergPoint::origin(1);
    let mats = (0..spec.grid.len())
        .into_par_iter()
        .map(|k| Ok(&spec.matrices[k] * a.matrix(&origin, spec.grid.nodes[k], spec.n_max)?))
        .collect::<Result<Vec<_>>>()?;
    SpectralFunction::new(spec.grid.clone(), spec.n_max, mats)
}

fn check_d1(spec: &SpectralFunction) -> Result<()> {
    if spec.grid.d != 1 {
        return Err(Error::Unsupported("pseudodifferential operators are implemented for d = 1".into()));
    }
    Ok(())
}

/// Budget `points × λ-nodes` for the pointwise fallback of [`op_apply`].
pub const POINTWISE_BUDGET: usize = 2_000_000;

/// `Op(a) f` on `target`, from the spectral data of `f`.
///
/// Fourier multipliers cost one inverse transform; separable symbols one per
/// `w`-dependent term. Other `w`-dependent symbols fall back to a pointwise
/// trace against `u_{w⁻¹}`, limited by [`POINTWISE_BUDGET`].
pub fn op_apply(a: &HeisenbergSymbol, spec: &SpectralFunction, target: &Grid) -> Result<GridFunction> {
    check_d1(spec)?;
    if a.is_w_independent() {
        return inverse_gft(&multiplier_spectral(a, spec)?, target);
    }
    match a.form() {
        SymbolForm::Separable(terms) => {
            let (free, bound): (Vec<_>, Vec<_>) = terms.iter().cloned().partition(|t| t.w.is_none());
            let mut out = GridFunction::zeros(target);
            if !free.is_empty() {
                let s = HeisenbergSymbol::separable("free", a.order(), free);
                out = out.add(&op_apply(&s, spec, target)?)?;
            }
            for term in bound {
                let b = term.w.clone().expect("partitioned on w");
                let s = HeisenbergSymbol::separable("term", a.order(), vec![SymbolTerm { w: None, ..term }]);
                let g = op_apply(&s, spec, target)?;
                let bw = GridFunction::from_fn(target, |p| b(p));
                out = out.add(&g.mul(&bw)?)?;
            }
            Ok(out)
        }
        SymbolForm::Combination(t) => {
            let mut out = GridFunction::zeros(target);
            for (c, s) in t {
                out = out.add(&op_apply(s, spec, target)?.scale(*c))?;
            }
            Ok(out)
        }
        _ => {
            if target.len() * spec.grid.len() > POINTWISE_BUDGET {
                return Err(Error::Unsupported(format!(
                    "pointwise Op(a) on {} points × {} nodes exceeds the budget",
                    target.len(),
                    spec.grid.len()
                )));
            }
            let points: Vec<HeisenbergPoint> = (0..target.len()).map(|i| target.point(i)).collect();
            GridFunction::new(target.clone(), op_apply_points(a, spec, &points)?)
        }
    }
}

/// `Op(a) f(w)` at individual points by the trace formula.
pub fn op_apply_points(a: &HeisenbergSymbol, spec: &SpectralFunction, points: &[HeisenbergPoint]) -> Result<Vec<C64>> {
    check_d1(spec)?;
    let c = spec.grid.plancherel_constant();
    points
        .par_iter()
        .map(|w| {
            let winv = w.inv();
            let mut acc = ZERO;
            for k in 0..spec.grid.len() {
                let lambda = spec.grid.nodes[k];
                let basis = spec.basis(k);
                let u = rep_matrix(&winv, &basis)?;
                let am = a.matrix(w, lambda, spec.n_max)?;
                acc += (u.entries * &spec.matrices[k] * am).trace() * spec.grid.weights[k];
            }
            Ok(acc * c)
        })
        .collect()
}

// ---------------------------------------------------------------------------
// Kernels
// ---------------------------------------------------------------------------

/// Kernel of `Op(a)` frozen at `w`, stored through the relative variable:
/// `relative(v) = k(w, w v⁻¹) = c_d Σ_k w_k tr(u_{v⁻¹} A_{λ_k}(w))`.
#[derive(Debug, Clone)]
pub struct HKernel {
    /// Base point `w`.
    pub w: HeisenbergPoint,
    /// Samples of `v ↦ k(w, w v⁻¹)`.
    pub relative: GridFunction,
}

/// Kernel of `Op(a)` at `w` on a `v`-grid; `a` must decay in `λ` and `(ξ, η)`
/// for the samples to be meaningful (band-limited, smoothing symbols).
pub fn kernel_of(a: &HeisenbergSymbol, w: &HeisenbergPoint, lambda: &LambdaGrid, n_max: usize, grid: &Grid) -> Result<HKernel> {
    if lambda.d != 1 || grid.d != 1 {
        return Err(Error::Unsupported("kernels are implemented for d = 1".into()));
    }
    let mats = lambda.nodes.par_iter().map(|&l| a.matrix(w, l, n_max)).collect::<Result<Vec<_>>>()?;
    let spec = SpectralFunction::new(lambda.clone(), n_max, mats)?;
    let tail = spec.trace_tail_estimate();
    let total = spec.norm_sqr().sqrt();
    if total > 0.0 && tail > 1e-3 * total {
        return Err(Error::UnderResolved(format!(
            "symbol matrices do not decay within the truncation (tail {tail:.2e} of {total:.2e}); use op_apply"
        )));
    }
    Ok(HKernel { w: w.clone(), relative: inverse_gft(&spec, grid)? })
}

impl HKernel {
    /// `k(w, w')` by interpolation of the relative samples at `w'⁻¹ w`.
    pub fn eval(&self, w_prime: &HeisenbergPoint) -> C64 {
        self.relative.interpolate(&w_prime.inv().mul(&self.w))
    }

    /// `∫ k(w, w') f(w') dw' = ∫ k(w, w v⁻¹) f(w v⁻¹) dv`.
    pub fn apply(&self, f: &GridFunction) -> C64 {
        let g = &self.relative.grid;
        let weights = g.all_weights();
        (0..g.len())
            .into_par_iter()
            .map(|i| {
                let v = g.point(i);
                weights[i] * self.relative.samples[i] * f.interpolate(&self.w.mul(&v.inv()))
            })
            .sum()
    }
}

/// `σ(a)(w, λ, ξ, η) = ∫ e^{2i(y·ξ − x·η)} e^{iλs} k(w, w v⁻¹) dv`, `v = (x, y, s)`.
pub fn symbol_from_kernel_h(k: &HKernel, lambda: f64, xi: f64, eta: f64) -> C64 {
    let g = &k.relative.grid;
    let weights = g.all_weights();
    (0..g.len())
        .map(|i| {
            let v = g.point(i);
            let phase = 2.0 * (v.y[0] * xi - v.x[0] * eta) + lambda * v.s;
            weights[i] * k.relative.samples[i] * C64::from_polar(1.0, phase)
        })
        .sum()
}

// ---------------------------------------------------------------------------
// Fourier-multiplier calculus
// ---------------------------------------------------------------------------

fn require_multiplier(a: &HeisenbergSymbol) -> Result<()> {
    if a.is_w_independent() {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!("{} depends on w; the exact calculus needs Fourier multipliers", a.name())))
    }
}

/// Symbol of `Op(a) ∘ Op(b)` for Fourier multipliers: `b # a`.
pub fn fm_compose(a: &HeisenbergSymbol, b: &HeisenbergSymbol) -> Result<HeisenbergSymbol> {
    require_multiplier(a)?;
    require_multiplier(b)?;
    Ok(b.moyal_pointwise(a).with_name(format!("{} ∘ {}", a.name(), b.name())))
}

/// Symbol of `Op(a)*` for a Fourier multiplier: `ā`.
pub fn fm_adjoint(a: &HeisenbergSymbol) -> Result<HeisenbergSymbol> {
    require_multiplier(a)?;
    Ok(a.conj())
}

// ---------------------------------------------------------------------------
// Commutators and compositions with fields
// ---------------------------------------------------------------------------

/// Symbols of `[Z, Op(a)]`, `[Z̄, Op(a)]`, `[z, Op(a)]`, `[z̄, Op(a)]`, `[is, Op(a)]`.
#[derive(Debug, Clone)]
pub struct CommutatorSymbols {
    /// `Za + √|λ|(i sgn(λ)∂_η a − ∂_ξ a)`, order `μ + 1`.
    pub b1: HeisenbergSymbol,
    /// `Z̄a + √|λ|(−i sgn(λ)∂_η a − ∂_ξ a)`, order `μ + 1`.
    pub b2: HeisenbergSymbol,
    /// `(i∂_η a + sgn(λ)∂_ξ a)/(2√|λ|)`, order `μ − 1`.
    pub c1: HeisenbergSymbol,
    /// `(i∂_η a − sgn(λ)∂_ξ a)/(2√|λ|)`, order `μ − 1`.
    pub c2: HeisenbergSymbol,
    /// `−g + iy(c1 + c2) − x(c1 − c2)` with `g` from [`s_mult_symbol`], order `μ`.
    pub p: HeisenbergSymbol,
}

fn lam(f: impl Fn(f64) -> C64 + Send + Sync + 'static) -> LambdaFn {
    Arc::new(f)
}

fn point(f: impl Fn(&HeisenbergPoint) -> C64 + Send + Sync + 'static) -> PointFn {
    Arc::new(f)
}

/// The five commutator symbols for the field index `j` (`d = 1`: `j = 0`).
pub fn commutator_symbols(j: usize, a: &HeisenbergSymbol) -> Result<CommutatorSymbols> {
    check_index(j)?;
    let mu = a.order();
    let dx = a.phase_derivative(1, 0);
    let de = a.phase_derivative(0, 1);
    let bracket = |s_eta: f64| {
        // √|λ| (i s_eta sgn(λ) ∂_η a − ∂_ξ a)
        let e = de.mul_lambda(lam(move |l| C64::new(0.0, s_eta * sgn(l) * l.abs().sqrt())));
        let x = dx.mul_lambda(lam(|l| C64::new(-l.abs().sqrt(), 0.0)));
        e.add(&x)
    };
    let b1 = a.field(VectorField::Z(j)).add(&bracket(1.0)).with_name(format!("b1[{}]", a.name())).with_order(mu + 1.0);
    let b2 =
        a.field(VectorField::Zbar(j)).add(&bracket(-1.0)).with_name(format!("b2[{}]", a.name())).with_order(mu + 1.0);
    let c = |s_xi: f64| {
        let e = de.mul_lambda(lam(|l| C64::new(0.0, 0.5 / l.abs().sqrt())));
        let x = dx.mul_lambda(lam(move |l| C64::new(s_xi * sgn(l) * 0.5 / l.abs().sqrt(), 0.0)));
        e.add(&x)
    };
    let c1 = c(1.0).with_name(format!("c1[{}]", a.name())).with_order(mu - 1.0);
    let c2 = c(-1.0).with_name(format!("c2[{}]", a.name())).with_order(mu - 1.0);
    let g = s_mult_symbol(a);
    let iy = point(|w| C64::new(0.0, w.y[0]));
    let mx = point(|w| C64::new(-w.x[0], 0.0));
    let p = HeisenbergSymbol::linear(
        format!("p[{}]", a.name()),
        vec![(-ONE, g), (ONE, c1.add(&c2).mul_point(iy)), (ONE, c1.sub(&c2).mul_point(mx))],
    )
    .with_order(mu);
    Ok(CommutatorSymbols { b1, b2, c1, c2, p })
}

/// `g = −∂_λ a + (1/(2λ))(η∂_η + ξ∂_ξ) a`, the symbol with `σ(g) = −∂_λ σ(a)`.
pub fn s_mult_symbol(a: &HeisenbergSymbol) -> HeisenbergSymbol {
    let dl = a.lambda_derivative();
    let e = a.euler().mul_lambda(lam(|l| C64::new(0.5 / l, 0.0)));
    HeisenbergSymbol::linear(format!("g[{}]", a.name()), vec![(-ONE, dl), (ONE, e)]).with_order(a.order())
}

/// Side of a composition with a field.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    /// `V ∘ Op(a)`.
    Left,
    /// `Op(a) ∘ V`.
    Right,
}

/// Fields that compose exactly with `Op(a)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Field {
    /// `Z_j`.
    Z,
    /// `Z̄_j`.
    Zbar,
}

/// Symbol `q` with `Op(q)` equal to the field itself:
/// `q_Z = √|λ|(−sgn(λ)ξ + iη)`, `q_Z̄ = √|λ|(sgn(λ)ξ + iη)`.
pub fn field_symbol(field: Field) -> HeisenbergSymbol {
    let s = if field == Field::Z { -1.0 } else { 1.0 };
    HeisenbergSymbol::separable(
        format!("{field:?}"),
        1.0,
        vec![
            SymbolTerm::multiplier(move |l| C64::new(s * sgn(l) * l.abs().sqrt(), 0.0), xi()),
            SymbolTerm::multiplier(|l| C64::new(0.0, l.abs().sqrt()), eta()),
        ],
    )
}

/// `V ∘ Op(a) = Op(Va + a # q_V)` and `Op(a) ∘ V = Op(q_V # a)`.
pub fn left_compose_field(j: usize, a: &HeisenbergSymbol, side: Side, field: Field) -> Result<HeisenbergSymbol> {
    check_index(j)?;
    let q = field_symbol(field);
    let name = match side {
        Side::Left => format!("{field:?}∘{}", a.name()),
        Side::Right => format!("{}∘{field:?}", a.name()),
    };
    let out = match side {
        Side::Left => {
            let vf = if field == Field::Z { VectorField::Z(j) } else { VectorField::Zbar(j) };
            a.field(vf).add(&a.moyal_pointwise(&q))
        }
        Side::Right => q.moyal_pointwise(a),
    };
    Ok(out.with_name(name).with_order(a.order() + 1.0))
}

/// `(Id − Δ)^k ∘ Op(a)` or `Op(a) ∘ (Id − Δ)^k`, with `−Δ = −2(Z Z̄ + Z̄ Z)`.
pub fn bessel_compose(a: &HeisenbergSymbol, k: u32, side: Side) -> Result<HeisenbergSymbol> {
    let mut acc = a.clone();
    for _ in 0..k {
        acc = match side {
            Side::Right => {
                let m = HeisenbergSymbol::separable("Id-Δ", 2.0, laplacian_terms(true));
                m.moyal_pointwise(&acc)
            }
            Side::Left => {
                let zzb = left_compose_field(0, &left_compose_field(0, &acc, Side::Left, Field::Zbar)?, Side::Left, Field::Z)?;
                let zbz = left_compose_field(0, &left_compose_field(0, &acc, Side::Left, Field::Z)?, Side::Left, Field::Zbar)?;
                HeisenbergSymbol::linear("", vec![(ONE, acc.clone()), (C64::new(-2.0, 0.0), zzb), (C64::new(-2.0, 0.0), zbz)])
            }
        };
    }
    let name = match side {
        Side::Left => format!("(Id-Δ)^{k}∘{}", a.name()),
        Side::Right => format!("{}∘(Id-Δ)^{k}", a.name()),
    };
    Ok(acc.with_name(name).with_order(a.order() + 2.0 * k as f64))
}

// ---------------------------------------------------------------------------
// Asymptotic expansions
// ---------------------------------------------------------------------------

/// `T a = (1/i)∂_η a − sgn(λ)∂_ξ a`.
pub fn t_op(a: &HeisenbergSymbol) -> HeisenbergSymbol {
    a.phase_derivative(0, 1).scale(-I).add(&a.phase_derivative(1, 0).mul_lambda(lam(|l| C64::new(-sgn(l), 0.0))))
}

/// `T* a = (1/i)∂_η a + sgn(λ)∂_ξ a`.
pub fn t_star_op(a: &HeisenbergSymbol) -> HeisenbergSymbol {
    a.phase_derivative(0, 1).scale(-I).add(&a.phase_derivative(1, 0).mul_lambda(lam(|l| C64::new(sgn(l), 0.0))))
}

/// `−λ∂_λ a + ½(η∂_η + ξ∂_ξ) a`.
fn dilation(a: &HeisenbergSymbol) -> HeisenbergSymbol {
    let dl = a.lambda_derivative().mul_lambda(lam(|l| C64::new(-l, 0.0)));
    dl.add(&a.euler().scale(C64::new(0.5, 0.0)))
}

/// Expansion terms of orders 0, 1 and 2; the remainder is not computed.
#[derive(Debug, Clone)]
pub struct Expansion {
    /// `terms[k]` is the order-`k` term.
    pub terms: Vec<HeisenbergSymbol>,
}

impl Expansion {
    /// Sum of the computed terms.
    pub fn total(&self) -> HeisenbergSymbol {
        HeisenbergSymbol::linear("expansion", self.terms.iter().map(|t| (ONE, t.clone())).collect())
    }

    /// `max |term_k|` over the sample points `(w, λ, ξ, η)`.
    pub fn magnitudes(&self, samples: &[(HeisenbergPoint, f64, f64, f64)]) -> Vec<f64> {
        self.terms
            .iter()
            .map(|t| samples.iter().map(|(w, l, x, y)| t.eval(w, *l, *x, *y).norm()).fold(0.0, f64::max))
            .collect()
    }
}

fn check_order(order: usize) -> Result<()> {
    if order > 2 {
        return Err(Error::InvalidInput(format!("expansions stop at order 2, got {order}")));
    }
    Ok(())
}

/// Terms of the symbol of `Op(a) ∘ Op(b)` up to `order ≤ 2`:
/// `b#a`, `(Zb # Ta + Z̄b # T*a)/(2√|λ|)`, and
/// `[ZZb # TTa + Z̄Z̄b # T*T*a + ZZ̄b # TT*a + Z̄Zb # T*Ta]/(8|λ|) + (1/(iλ)) Sb # (−λ∂_λ + ½E)a`.
pub fn asymptotic_compose(a: &HeisenbergSymbol, b: &HeisenbergSymbol, order: usize) -> Result<Expansion> {
    check_order(order)?;
    let mut terms = vec![b.moyal_pointwise(a).with_order(a.order() + b.order())];
    let (z, zb) = (VectorField::Z(0), VectorField::Zbar(0));
    if order >= 1 {
        let ta = t_op(a);
        let tsa = t_star_op(a);
        let t1 = b.field(z).moyal_pointwise(&ta).add(&b.field(zb).moyal_pointwise(&tsa));
        terms.push(
            t1.mul_lambda(lam(|l| C64::new(0.5 / l.abs().sqrt(), 0.0)))
                .with_name("order 1")
                .with_order(a.order() + b.order() - 1.0),
        );
        if order >= 2 {
            let pairs = [
                (b.field(z).field(z), t_op(&ta)),
                (b.field(zb).field(zb), t_star_op(&tsa)),
                (b.field(zb).field(z), t_op(&tsa)),
                (b.field(z).field(zb), t_star_op(&ta)),
            ];
            let mut t2 = HeisenbergSymbol::linear(
                "",
                pairs.iter().map(|(bb, aa)| (ONE, bb.moyal_pointwise(aa))).collect(),
            )
            .mul_lambda(lam(|l| C64::new(0.125 / l.abs(), 0.0)));
            let s_term = b
                .field(VectorField::S)
                .moyal_pointwise(&dilation(a))
                .mul_lambda(lam(|l| C64::new(0.0, -1.0 / l)));
            t2 = t2.add(&s_term);
            terms.push(t2.with_name("order 2").with_order(a.order() + b.order() - 2.0));
        }
    }
    Ok(Expansion { terms })
}

/// Terms of the symbol of `Op(a)*` up to `order ≤ 2`:
/// `ā`, `(ZT + Z̄T*)ā/(2√|λ|)`, `(ZT + Z̄T*)²ā/(8|λ|) + (1/(iλ))(−λ∂_λ + ½E)Sā`.
pub fn asymptotic_adjoint(a: &HeisenbergSymbol, order: usize) -> Result<Expansion> {
    check_order(order)?;
    let abar = a.conj();
    let mut terms = vec![abar.clone()];
    let l1 = |s: &HeisenbergSymbol| t_op(s).field(VectorField::Z(0)).add(&t_star_op(s).field(VectorField::Zbar(0)));
    if order >= 1 {
        let first = l1(&abar);
        terms.push(
            first
                .mul_lambda(lam(|l| C64::new(0.5 / l.abs().sqrt(), 0.0)))
                .with_name("order 1")
                .with_order(a.order() - 1.0),
        );
        if order >= 2 {
            let second = l1(&first).mul_lambda(lam(|l| C64::new(0.125 / l.abs(), 0.0)));
            let s_term = dilation(&abar.field(VectorField::S)).mul_lambda(lam(|l| C64::new(0.0, -1.0 / l)));
            terms.push(second.add(&s_term).with_name("order 2").with_order(a.order() - 2.0));
        }
    }
    Ok(Expansion { terms })
}

// ---------------------------------------------------------------------------
// Reduced symbols
// ---------------------------------------------------------------------------

/// `θ`: `1` on `|τ| ≤ 1`, `0` on `|τ| ≥ 2`.
fn theta(t: f64) -> f64 {
    plateau(t, 1.0, 2.0)
}

/// Samples per side of the `[−π, π]²` periodization box.
pub const REDUCE_SAMPLES: usize = 256;

/// Fit window for the coefficient decay: the resolved tail, past the pre-asymptotic
/// range of the cutoff transition and above the rounding floor.
pub const DECAY_WINDOW: (usize, usize) = (16, 96);

/// Fourier coefficients of the dyadic pieces of `ã` at one `(w, λ)`.
#[derive(Debug, Clone)]
pub struct ReducedSymbol {
    /// Sampling point `w`.
    pub w: HeisenbergPoint,
    /// Sampling point `λ`.
    pub lambda: f64,
    /// Highest ring index `p`.
    pub p_max: i32,
    /// Coefficients kept: `|k|_∞ ≤ k_max`.
    pub k_max: usize,
    /// `coeffs[p + 1][(k1 + k_max)(2k_max + 1) + (k2 + k_max)] = b_p^k`, `p = −1..=p_max`.
    pub coeffs: Vec<Vec<C64>>,
    /// Full FFT coefficient tables (`M × M`), used for the decay fit.
    pub full: Vec<Vec<C64>>,
}

/// `ã(w, λ, ζ) = a(w, λ, ζ₁/√|λ|, ζ₂/√|λ|)`.
fn reduced_eval(a: &HeisenbergSymbol, w: &HeisenbergPoint, lambda: f64, z1: f64, z2: f64) -> C64 {
    let r = lambda.abs().sqrt();
    a.eval(w, lambda, z1 / r, z2 / r)
}

/// Dyadic piece `b_p(ζ)`: `ã θ(|ζ|²)` for `p = −1`, `ã(2^p ζ) R*(|ζ|²)` otherwise.
fn dyadic_piece(a: &HeisenbergSymbol, w: &HeisenbergPoint, lambda: f64, p: i32, z1: f64, z2: f64) -> C64 {
    let rho = z1 * z1 + z2 * z2;
    if p < 0 {
        let c = theta(rho);
        if c == 0.0 {
            return ZERO;
        }
        reduced_eval(a, w, lambda, z1, z2) * c
    } else {
        let c = theta(rho / 4.0) - theta(rho);
        if c == 0.0 {
            return ZERO;
        }
        let s = 2f64.powi(p);
        reduced_eval(a, w, lambda, s * z1, s * z2) * c
    }
}

/// Fourier coefficients `b_p^k = (2π)^{−2} ∫_{[−π,π]²} e^{−ik·ζ} b_p(ζ) dζ` of the
/// dyadic pieces of an order-0 symbol at `(w, λ)`, by a 2D FFT.
pub fn reduce_symbol(
    a: &HeisenbergSymbol,
    w: &HeisenbergPoint,
    lambda: f64,
    k_max: usize,
    p_max: i32,
) -> Result<ReducedSymbol> {
    if a.order() > 0.0 {
        return Err(Error::InvalidInput(format!("reduction needs an order-0 symbol, got order {}", a.order())));
    }
    let m = REDUCE_SAMPLES;
    if 2 * k_max + 1 > m {
        return Err(Error::InvalidInput(format!("k_max = {k_max} exceeds the sampling ({m} per side)")));
    }
    let mut planner = FftPlanner::<f64>::new();
    let fft = planner.plan_fft_forward(m);
    let h = 2.0 * PI / m as f64;
    let mut coeffs = Vec::new();
    let mut full = Vec::new();
    for p in -1..=p_max {
        // samples at ζ = −π + j h; coefficient c_k = (1/M²) Σ e^{−ik·ζ_j} b(ζ_j)
        let mut grid: Vec<C64> = (0..m * m)
            .map(|idx| {
                let (i, j) = (idx / m, idx % m);
                dyadic_piece(a, w, lambda, p, -PI + i as f64 * h, -PI + j as f64 * h)
            })
            .collect();
        for row in grid.chunks_mut(m) {
            fft.process(row);
        }
        let mut col = vec![ZERO; m];
        for j in 0..m {
            for i in 0..m {
                col[i] = grid[i * m + j];
            }
            fft.process(&mut col);
            for i in 0..m {
                grid[i * m + j] = col[i];
            }
        }
        // shift by e^{ikπ} for the −π origin and normalize
        let table: Vec<C64> = (0..m * m)
            .map(|idx| {
                let (i, j) = (idx / m, idx % m);
                let sign = if (i + j) % 2 == 0 { 1.0 } else { -1.0 };
                grid[idx] * (sign / (m * m) as f64)
            })
            .collect();
        let kk = 2 * k_max + 1;
        let mut kept = vec![ZERO; kk * kk];
        for a1 in 0..kk {
            for a2 in 0..kk {
                let (k1, k2) = (a1 as i64 - k_max as i64, a2 as i64 - k_max as i64);
                kept[a1 * kk + a2] = table[wrap(k1, m) * m + wrap(k2, m)];
            }
        }
        coeffs.push(kept);
        full.push(table);
    }
    Ok(ReducedSymbol { w: w.clone(), lambda, p_max, k_max, coeffs, full })
}

fn wrap(k: i64, m: usize) -> usize {
    k.rem_euclid(m as i64) as usize
}

impl ReducedSymbol {
    /// `b_p(ζ) ≈ Σ_{|k|_∞ ≤ k_max} b_p^k e^{ik·ζ}`.
    pub fn piece(&self, p: i32, z1: f64, z2: f64) -> C64 {
        let kk = 2 * self.k_max + 1;
        let c = &self.coeffs[(p + 1) as usize];
        let mut s = ZERO;
        for a1 in 0..kk {
            for a2 in 0..kk {
                let (k1, k2) = (a1 as f64 - self.k_max as f64, a2 as f64 - self.k_max as f64);
                s += c[a1 * kk + a2] * C64::from_polar(1.0, k1 * z1 + k2 * z2);
            }
        }
        s
    }

    /// Reconstruction `ã(ζ) = Σ_p b_p(2^{−p} ζ)` (valid for `|ζ|² < 8·4^{p_max}`).
    pub fn reconstruct(&self, z1: f64, z2: f64) -> C64 {
        (-1..=self.p_max)
            .map(|p| {
                let s = 2f64.powi(-p.max(0));
                self.piece(p, s * z1, s * z2)
            })
            .sum()
    }

    /// Max of `|ã − reconstruction|` at the given reduced points `ζ`.
    pub fn reconstruction_error(&self, a: &HeisenbergSymbol, points: &[(f64, f64)]) -> f64 {
        points
            .iter()
            .map(|&(z1, z2)| (reduced_eval(a, &self.w, self.lambda, z1, z2) - self.reconstruct(z1, z2)).norm())
            .fold(0.0, f64::max)
    }

    /// Envelope `m(K) = max_p max_{|k|_∞ = K} |b_p^k|`, `K = 0..M/2−1`.
    pub fn envelope(&self) -> Vec<f64> {
        let m = REDUCE_SAMPLES;
        let mut env = vec![0.0f64; m / 2];
        for table in &self.full {
            for k1 in -(m as i64 / 2 - 1)..(m as i64 / 2) {
                for k2 in -(m as i64 / 2 - 1)..(m as i64 / 2) {
                    let kk = k1.unsigned_abs().max(k2.unsigned_abs()) as usize;
                    env[kk] = env[kk].max(table[wrap(k1, m) * m + wrap(k2, m)].norm());
                }
            }
        }
        env
    }

    /// Least-squares exponent `N` in `m(K) ≈ C (1 + K)^{−N}` over `K ∈ [k_lo, k_hi]`,
    /// ignoring envelope values at the rounding floor.
    pub fn decay_exponent(&self, k_lo: usize, k_hi: usize) -> f64 {
        let env = self.envelope();
        let top = env.iter().copied().fold(0.0, f64::max);
        let pts: Vec<(f64, f64)> = (k_lo..=k_hi.min(env.len() - 1))
            .filter(|&k| env[k] > 1e-14 * top)
            .map(|k| ((1.0 + k as f64).ln(), env[k].ln()))
            .collect();
        -slope(&pts)
    }

    /// Decay exponent over [`DECAY_WINDOW`].
    pub fn tail_decay_exponent(&self) -> f64 {
        self.decay_exponent(DECAY_WINDOW.0, DECAY_WINDOW.1)
    }
}

fn slope(pts: &[(f64, f64)]) -> f64 {
    let n = pts.len() as f64;
    if pts.len() < 2 {
        return f64::NAN;
    }
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    sxy / sxx
}

/// λ-refinement of one coefficient: `b_{p,r}^{k,j}(w)`, the Fourier coefficients in
/// `μ ∈ [−π, π]` of `μ ↦ b_p^k(w, 4^r μ) φ(μ)` with `φ = θ(·/4) − θ`, `j ∈ [−j_max, j_max]`.
///
/// The λ-ring support `1 ≤ |μ| ≤ 2√2` lies inside the box.
pub fn refine_lambda(
    a: &HeisenbergSymbol,
    w: &HeisenbergPoint,
    p: i32,
    k: (i64, i64),
    r: i32,
    j_max: usize,
) -> Result<Vec<C64>> {
    let m = 128;
    let h = 2.0 * PI / m as f64;
    let mut samples = vec![ZERO; m];
    for (i, s) in samples.iter_mut().enumerate() {
        let mu = -PI + i as f64 * h;
        let phi = theta(mu * mu / 4.0) - theta(mu * mu);
        if phi == 0.0 {
            continue;
        }
        let red = reduce_symbol(a, w, 4f64.powi(r) * mu, k.0.unsigned_abs().max(k.1.unsigned_abs()) as usize, p)?;
        let kk = 2 * red.k_max + 1;
        let (a1, a2) = ((k.0 + red.k_max as i64) as usize, (k.1 + red.k_max as i64) as usize);
        *s = red.coeffs[(p + 1) as usize][a1 * kk + a2] * phi;
    }
    Ok((-(j_max as i64)..=j_max as i64)
        .map(|j| {
            samples
                .iter()
                .enumerate()
                .map(|(i, v)| v * C64::from_polar(1.0 / m as f64, -(j as f64) * (-PI + i as f64 * h)))
                .sum()
        })
        .collect())
}

// ---------------------------------------------------------------------------
// Non-continuity demonstration
// ---------------------------------------------------------------------------

/// One row of the growth table.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GrowthRow {
    /// Window half-width `S`.
    pub s_window: f64,
    /// `sup_{|s| ≤ S} |s^N Op(a) f(0, 0, s)|`.
    pub sup: f64,
}

/// Value of `Op(a) f(0, 0, s)` for `a = |λ|^{k+1/2}` and `F(f)(λ) = φ(λ) P_0`
/// (`P_0` the projection on `F_{0,λ}`), `d = 1`:
/// `c_1 ∫ e^{−iλs} φ(λ) |λ|^{k+3/2} dλ = 2c_1 ∫_0^1 cos(λs) φ(λ) λ^{k+3/2} dλ`,
/// evaluated with `λ = t²` so the integrand is smooth.
pub fn counterexample_value(k: u32, s: f64) -> f64 {
    let c = crate::fourier::plancherel_constant(1);
    let gl = GaussLegendre::new(16);
    let panels = 64 + (s.abs() * 2.0) as usize;
    let (t, wt) = gl.composite(0.0, 1.0, panels);
    let e = 2 * k as i32 + 4; // λ^{k+3/2} dλ = 2 t^{2k+4} dt
    let integral: f64 = t
        .iter()
        .zip(&wt)
        .map(|(t, w)| {
            let l = t * t;
            w * 2.0 * t.powi(e) * (l * s).cos() * plateau(l, 0.25, 1.0)
        })
        .sum();
    2.0 * c * integral
}

/// Growth table of `sup_{|s| ≤ S} |s^N Op(a) f(0, 0, s)|` over the windows `S`.
pub fn counterexample_demo(k: u32, n: u32, windows: &[f64]) -> Vec<GrowthRow> {
    let s_max = windows.iter().copied().fold(0.0, f64::max);
    let steps = (s_max * 40.0).ceil() as usize;
    let vals: Vec<(f64, f64)> = (0..=steps)
        .into_par_iter()
        .map(|i| {
            let s = s_max * i as f64 / steps as f64;
            (s, (s.powi(n as i32) * counterexample_value(k, s)).abs())
        })
        .collect();
    windows
        .iter()
        .map(|&sw| GrowthRow {
            s_window: sw,
            sup: vals.iter().filter(|(s, _)| *s <= sw + 1e-12).map(|v| v.1).fold(0.0, f64::max),
        })
        .collect()
}

/// The non-smooth symbol `|λ|^{k+1/2}`.
pub fn counterexample_symbol(k: u32) -> HeisenbergSymbol {
    let e = k as f64 + 0.5;
    HeisenbergSymbol::lambda_only(format!("|λ|^{e}"), 0.0, move |l| C64::new(l.abs().powf(e), 0.0))
}

/// Growth of the `m`-th λ-derivative of `σ(a)` as `λ → 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct RegularityReport {
    /// Probed `λ` values (decreasing).
    pub lambdas: Vec<f64>,
    /// `|∂_λ^m σ(a)|` at each probe.
    pub derivatives: Vec<f64>,
    /// Whether the derivative blows up (ratio over the probe range above 10).
    pub violates: bool,
}

/// Probes smoothness of `σ(a)` at `λ = 0`: the `m`-th λ-derivative is estimated at
/// `λ = 10^{−1}, …, 10^{−4}` by a centered stencil of width `λ/4`.
pub fn sigma_regularity(a: &HeisenbergSymbol, w: &HeisenbergPoint, xi: f64, eta: f64, m: u32) -> RegularityReport {
    let lambdas: Vec<f64> = (1..=4).map(|e| 10f64.powi(-e)).collect();
    let derivatives: Vec<f64> = lambdas
        .iter()
        .map(|&l| {
            let h = l / 4.0;
            let f = |x: f64| a.sigma(w, x, xi, eta);
            // m-th central difference
            let mut s = ZERO;
            for i in 0..=m {
                let c = crate::laguerre::binomial(m as usize, i as usize) * if i % 2 == 0 { 1.0 } else { -1.0 };
                s += f(l + (m as f64 / 2.0 - i as f64) * h) * c;
            }
            s.norm() / h.powi(m as i32)
        })
        .collect();
    let first = derivatives[0].max(1e-300);
    let violates = derivatives.last().copied().unwrap_or(0.0) / first > 10.0;
    RegularityReport { lambdas, derivatives, violates }
}

// ---------------------------------------------------------------------------
// Norm surrogates
// ---------------------------------------------------------------------------

/// `max_{λ_k, w} ‖A_λ(w)‖_op`, the `L²` operator norm of `Op(a)` on the
/// truncated space when `a` is a Fourier multiplier or a multiplication.
pub fn discrete_op_norm(a: &HeisenbergSymbol, lambda: &LambdaGrid, n_max: usize, points: &[HeisenbergPoint]) -> Result<f64> {
    let origin = [HeisenbergPoint::origin(1)];
    let points = if a.is_w_independent() || points.is_empty() { &origin[..] } else { points };
    let norms = lambda
        .nodes
        .par_iter()
        .map(|&l| {
            points.iter().try_fold(0.0f64, |m, w| Ok::<f64, Error>(m.max(op_norm(&a.matrix(w, l, n_max)?))))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(norms.into_iter().fold(0.0, f64::max))
}

/// `max ‖(Id + D_λ)^{−μ/2} A_λ(w)‖_op` over sampled `(w, λ)`.
pub fn weighted_norm(a: &HeisenbergSymbol, lambdas: &[f64], n_max: usize, points: &[HeisenbergPoint]) -> Result<f64> {
    let mu = a.order();
    let mut best = 0.0f64;
    for &l in lambdas {
        let basis = TruncatedBasis::new(1, n_max, l)?;
        for w in points {
            let mut m = a.matrix(w, l, n_max)?;
            for r in 0..m.nrows() {
                let s = (1.0 + basis.eigenvalue(r)).powf(-mu / 2.0);
                for c in 0..m.ncols() {
                    m[(r, c)] *= s;
                }
            }
            best = best.max(op_norm(&m));
        }
    }
    Ok(best)
}

/// Sampled symbol bound: `max |∂_λ^k ∂_ξ^β1 ∂_η^β2 σ(a)| / (1 + |λ| + ξ² + η²)^{(μ − |β|)/2} (1+|λ|)^{k}`
/// over `k ≤ 1`, `|β| ≤ 2` and the given lattice.
pub fn symbol_bound(a: &HeisenbergSymbol, w: &HeisenbergPoint, lambdas: &[f64], phase: &[(f64, f64)]) -> f64 {
    let mu = a.order();
    let mut best = 0.0f64;
    for &l in lambdas {
        for &(x, y) in phase {
            let f = |lam: f64, a1: f64, a2: f64| a.sigma(w, lam, a1, a2);
            for k in 0..=1u32 {
                for bx in 0..=2u32 {
                    for by in 0..=(2 - bx) {
                        let g = |lam: f64| crate::weyl::fd_partial(&|a1, a2| f(lam, a1, a2), bx, by, x, y);
                        let v = if k == 0 { g(l) } else { fd4(&g, l, lambda_step(l)) };
                        let weight = (1.0 + l.abs() + x * x + y * y).powf((mu - (bx + by) as f64) / 2.0)
                            * (1.0 + l.abs()).powi(-(k as i32));
                        best = best.max(v.norm() / weight);
                    }
                }
            }
        }
    }
    best
}
