//! Littlewood-Paley theory on `H^d`: the dyadic partition, the blocks `Δ_p`, `S_p`
//! and `Λ_r`, Besov norms, Bony's decomposition, Bernstein ratios, the symbols of
//! `Δ_p`, and the off-diagonal decay of `Δ_q ∘ Op(a_p)`.
//!
//! Spectral blocks act on the right by diagonals in the Hermite basis:
//! `F(Δ_p f)(λ) = F(f)(λ) R*(4^{−p} D_λ)` with `D_λ` the diagonal `4|λ|(2|α|+d)`.

use std::f64::consts::PI;
use std::io::Write;
use std::sync::{Arc, OnceLock};

use num_complex::Complex64 as C64;
use rayon::prelude::*;

use crate::bump::plateau;
use crate::error::{Error, Result};
use crate::fourier::{inverse_gft, spectral_derivative, LambdaGrid, SpectralFunction, SpectralOp};
use crate::group::{Grid, GridFunction};
use crate::hpdo::{HeisenbergSymbol, PhaseFactor, SymbolTerm};
use crate::laguerre::laguerre_all;
use crate::quadrature::GaussLegendre;
use crate::weyl::{laguerre_profile, sampled_hat, Eigen, MehlerSeries, PhaseSymbol, Profile, SpectralProfileR};

// ---------------------------------------------------------------------------
// Partition
// ---------------------------------------------------------------------------

/// `θ`: `1` on `|τ| ≤ 1`, `0` on `|τ| ≥ 2`, smooth and even.
pub fn theta(t: f64) -> f64 {
    plateau(t, 1.0, 2.0)
}

/// Ring function `R*(τ) = θ(τ/4) − θ(τ)`, supported in `1 ≤ |τ| ≤ 8`.
pub fn ring(t: f64) -> f64 {
    theta(t / 4.0) - theta(t)
}

/// Highest level checked by [`build_partition`]: `τ ≤ 4^P`.
pub const PARTITION_CHECK_LEVEL: i32 = 8;

/// The dyadic partition `R̃* = θ`, `R* = θ(·/4) − θ` and its λ-companion `(ψ, φ)`
/// built the same way, with the measured constants.
#[derive(Debug, Clone)]
pub struct DyadicPartition {
    /// `sup |R̃*(τ) + Σ_p R*(4^{−p}τ) − 1|` over the dense check sample.
    pub unity_defect: f64,
    /// Lower square-sum constant `c`: `c ≤ R̃*² + Σ R*(4^{−p}·)²`.
    pub square_sum_min: f64,
    /// Upper square-sum constant (at most one).
    pub square_sum_max: f64,
    /// Ring supports `R*(4^{−p}·)`, `R*(4^{−p'}·)` are disjoint once `|p − p'| ≥ n0`.
    pub n0: usize,
}

/// Inner and outer radius of `supp R*`.
pub const RING_SUPPORT: (f64, f64) = (1.0, 8.0);

impl DyadicPartition {
    /// `R̃*(τ)`.
    pub fn low(&self, t: f64) -> f64 {
        theta(t)
    }

    /// `R*(τ)`.
    pub fn ring(&self, t: f64) -> f64 {
        ring(t)
    }

    /// Block function of `Δ_p`: `R̃*(τ)` for `p = −1`, `R*(4^{−p}τ)` otherwise.
    pub fn block(&self, p: i32, t: f64) -> f64 {
        if p < 0 {
            theta(t)
        } else {
            ring(t * 4f64.powi(-p))
        }
    }

    /// Function of `S_p = Σ_{q ≤ p−1} Δ_q`: `R̃*(4^{−p}τ)`.
    pub fn low_pass(&self, p: i32, t: f64) -> f64 {
        theta(t * 4f64.powi(-p))
    }

    /// `ψ(λ)`.
    pub fn psi(&self, lambda: f64) -> f64 {
        theta(lambda)
    }

    /// `φ(λ)`.
    pub fn phi(&self, lambda: f64) -> f64 {
        ring(lambda)
    }

    /// Block function of `Λ_r`: `ψ(λ)` for `r = −1`, `φ(4^{−r}λ)` otherwise.
    pub fn lambda_block(&self, r: i32, lambda: f64) -> f64 {
        self.block(r, lambda)
    }

    /// Support `[4^p, 8·4^p]` of `R*(4^{−p}·)`; `[0, 2]` for `p = −1`.
    pub fn ring_support(&self, p: i32) -> (f64, f64) {
        if p < 0 {
            (0.0, 2.0)
        } else {
            let s = 4f64.powi(p);
            (RING_SUPPORT.0 * s, RING_SUPPORT.1 * s)
        }
    }

    /// Whether the supports of blocks `p` and `p'` are disjoint.
    pub fn disjoint(&self, p: i32, q: i32) -> bool {
        let (a, b) = (self.ring_support(p.min(q)), self.ring_support(p.max(q)));
        a.1 <= b.0
    }
}

/// Builds the partition and measures its constants on a dense sample of
/// `τ ∈ [0, 4^P]`, `P = 8`.
pub fn build_partition() -> DyadicPartition {
    let part = DyadicPartition { unity_defect: 0.0, square_sum_min: 1.0, square_sum_max: 0.0, n0: 0 };
    let top = 4f64.powi(PARTITION_CHECK_LEVEL);
    let samples: Vec<f64> = (0..=20_000).map(|i| i as f64 / 2_000.0).chain((0..=40_000).map(|i| top.powf(i as f64 / 40_000.0))).collect();
    let levels = PARTITION_CHECK_LEVEL + 2;
    let (defect, lo, hi) = samples
        .par_iter()
        .map(|&t| {
            let mut sum = part.low(t);
            let mut sq = sum * sum;
            for p in 0..=levels {
                let v = part.block(p, t);
                sum += v;
                sq += v * v;
            }
            ((sum - 1.0).abs(), sq, sq)
        })
        .reduce(|| (0.0, f64::INFINITY, 0.0), |a, b| (a.0.max(b.0), a.1.min(b.1), a.2.max(b.2)));
    // smallest n with 8·4^p ≤ 4^{p+n}
    let mut n0 = 1;
    while RING_SUPPORT.1 * RING_SUPPORT.0.recip() > 4f64.powi(n0 as i32) {
        n0 += 1;
    }
    DyadicPartition { unity_defect: defect, square_sum_min: lo, square_sum_max: hi, n0 }
}

// ---------------------------------------------------------------------------
// Blocks
// ---------------------------------------------------------------------------

/// `Δ_p F = F · R*(4^{−p} D_λ)` (`p = −1`: `R̃*(D_λ)`).
pub fn lp_project(part: &DyadicPartition, f: &SpectralFunction, p: i32) -> SpectralFunction {
    f.right_diag(|_, e| C64::new(part.block(p, e), 0.0))
}

/// `S_p F = F · R̃*(4^{−p} D_λ) = Σ_{q ≤ p−1} Δ_q F`.
pub fn low_freq(part: &DyadicPartition, f: &SpectralFunction, p: i32) -> SpectralFunction {
    f.right_diag(|_, e| C64::new(part.low_pass(p, e), 0.0))
}

/// `Λ_r F`: node `λ` scaled by `φ(4^{−r}λ)` (`ψ(λ)` for `r = −1`).
pub fn lambda_project(part: &DyadicPartition, f: &SpectralFunction, r: i32) -> SpectralFunction {
    f.scale_lambda(|l| C64::new(part.lambda_block(r, l.abs()), 0.0))
}

/// Largest block index with a nonzero diagonal on the truncated spectral space.
pub fn top_block(f: &SpectralFunction) -> i32 {
    let e_max = f.grid.nodes.iter().map(|l| 4.0 * l.abs() * (2 * f.n_max + f.grid.d) as f64).fold(0.0, f64::max);
    let mut p = -1;
    while 4f64.powi(p + 1) < e_max {
        p += 1;
    }
    p
}

/// `L²` norms of `Δ_p F`, `p = −1..=p_max`, by Plancherel.
pub fn block_energies(part: &DyadicPartition, f: &SpectralFunction, p_max: i32) -> Vec<(i32, f64)> {
    (-1..=p_max).map(|p| (p, lp_project(part, f, p).norm_sqr().sqrt())).collect()
}

/// CSV `p,l2_norm` of the block energies.
pub fn write_block_energies<W: Write>(rows: &[(i32, f64)], mut w: W) -> Result<()> {
    writeln!(w, "p,l2_norm")?;
    for (p, v) in rows {
        writeln!(w, "{p},{v:.17e}")?;
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Besov norms
// ---------------------------------------------------------------------------

/// Indices of `B^s_{q,r}`; `q`, `r` in `[1, ∞]`.
#[derive(Debug, Clone, Copy)]
pub struct BesovIndex {
    /// Regularity `s`.
    pub s: f64,
    /// Integrability of the blocks.
    pub q: f64,
    /// Summability over the blocks.
    pub r: f64,
}

/// Truncated Besov norm with its per-block terms.
#[derive(Debug, Clone)]
pub struct BesovNorm {
    /// `‖(2^{ps} ‖Δ_p u‖_{L^q})_{p ≤ p_max}‖_{ℓ^r}`.
    pub norm: f64,
    /// `2^{ps} ‖Δ_p u‖_{L^q}`, `p = −1..=p_max`.
    pub blocks: Vec<f64>,
    /// `‖u − S_{p_max+1} u‖_{L²} / ‖u‖_{L²}`: the energy beyond the last block.
    pub tail: f64,
}

/// Truncated `B^s_{q,r}` norm. `q = 2` stays spectral; other `q` need `target`
/// for the inverse transform of each block.
pub fn besov_norm(
    part: &DyadicPartition,
    u: &SpectralFunction,
    idx: BesovIndex,
    p_max: i32,
    target: Option<&Grid>,
    tail_tol: f64,
) -> Result<BesovNorm> {
    if !(idx.q >= 1.0) || !(idx.r >= 1.0) {
        return Err(Error::InvalidInput(format!("Besov indices need q, r ≥ 1, got q={}, r={}", idx.q, idx.r)));
    }
    let total = u.norm_sqr().sqrt();
    let tail = if total == 0.0 { 0.0 } else { u.sub(&low_freq(part, u, p_max + 1))?.norm_sqr().sqrt() / total };
    if tail > tail_tol {
        return Err(Error::UnderResolved(format!("energy beyond block {p_max} is {tail:.3e} of the total")));
    }
    let mut blocks = Vec::new();
    for p in -1..=p_max {
        let b = lp_project(part, u, p);
        let n = if idx.q == 2.0 {
            b.norm_sqr().sqrt()
        } else {
            let g = target.ok_or_else(|| Error::InvalidInput("L^q block norms with q ≠ 2 need a target grid".into()))?;
            inverse_gft(&b, g)?.lq_norm(idx.q)
        };
        blocks.push(2f64.powf(p as f64 * idx.s) * n);
    }
    let norm = if idx.r.is_infinite() {
        blocks.iter().copied().fold(0.0, f64::max)
    } else {
        blocks.iter().map(|v| v.powf(idx.r)).sum::<f64>().powf(1.0 / idx.r)
    };
    Ok(BesovNorm { norm, blocks, tail })
}

// ---------------------------------------------------------------------------
// Bony decomposition
// ---------------------------------------------------------------------------

/// Relative energy beyond the last block tolerated by [`BandLimited::new`].
pub const BAND_LIMIT_TOL: f64 = 1e-10;

/// Grid samples of the blocks `Δ_p u`, `p = −1..=p_max`, of band-limited data;
/// `u` itself is their sum.
#[derive(Debug, Clone)]
pub struct BandLimited {
    /// Highest block.
    pub p_max: i32,
    /// `blocks[p + 1] = Δ_p u` on the common grid.
    pub blocks: Vec<GridFunction>,
}

impl BandLimited {
    /// Blocks of `u` on `target`; fails when `u` carries energy beyond `Δ_{p_max}`.
    pub fn new(part: &DyadicPartition, u: &SpectralFunction, p_max: i32, target: &Grid) -> Result<Self> {
        let total = u.norm_sqr().sqrt();
        if total > 0.0 {
            let beyond = u.sub(&low_freq(part, u, p_max + 1))?.norm_sqr().sqrt() / total;
            if beyond > BAND_LIMIT_TOL {
                return Err(Error::InvalidInput(format!(
                    "band limit exceeded: {beyond:.3e} of the energy lies beyond block {p_max}"
                )));
            }
        }
        let blocks = (-1..=p_max).map(|p| inverse_gft(&lp_project(part, u, p), target)).collect::<Result<Vec<_>>>()?;
        Ok(Self { p_max, blocks })
    }

    /// Pre-projection `S_{p_max} u`, on whose support `S_{p_max+1} = 1`, followed
    /// by [`BandLimited::new`].
    pub fn project(part: &DyadicPartition, u: &SpectralFunction, p_max: i32, target: &Grid) -> Result<Self> {
        Self::new(part, &low_freq(part, u, p_max), p_max, target)
    }

    /// `Δ_p u` (zero outside `−1..=p_max`).
    pub fn block(&self, p: i32) -> GridFunction {
        if p < -1 || p > self.p_max {
            return GridFunction::zeros(&self.blocks[0].grid);
        }
        self.blocks[(p + 1) as usize].clone()
    }

    /// `S_q u = Σ_{p ≤ q−1} Δ_p u`.
    pub fn low(&self, q: i32) -> Result<GridFunction> {
        let mut acc = GridFunction::zeros(&self.blocks[0].grid);
        for p in -1..q.min(self.p_max + 1) {
            acc = acc.add(&self.blocks[(p + 1) as usize])?;
        }
        Ok(acc)
    }

    /// `u = Σ_p Δ_p u`.
    pub fn sum(&self) -> Result<GridFunction> {
        self.low(self.p_max + 1)
    }

    fn check(&self, other: &Self) -> Result<()> {
        if self.blocks[0].grid != other.blocks[0].grid {
            return Err(Error::Incompatible("band-limited inputs live on different grids".into()));
        }
        Ok(())
    }
}

/// Paraproduct `T_u v = Σ_q S_{q−1} u Δ_q v`.
pub fn paraproduct(u: &BandLimited, v: &BandLimited) -> Result<GridFunction> {
    u.check(v)?;
    let mut acc = GridFunction::zeros(&u.blocks[0].grid);
    for q in -1..=v.p_max {
        acc = acc.add(&u.low(q - 1)?.mul(&v.block(q))?)?;
    }
    Ok(acc)
}

/// Remainder `R(u, v) = Σ_{|p−q| ≤ 1} Δ_p u Δ_q v`.
pub fn remainder(u: &BandLimited, v: &BandLimited) -> Result<GridFunction> {
    u.check(v)?;
    let mut acc = GridFunction::zeros(&u.blocks[0].grid);
    for p in -1..=u.p_max {
        for q in (p - 1)..=(p + 1) {
            if q >= -1 && q <= v.p_max {
                acc = acc.add(&u.block(p).mul(&v.block(q))?)?;
            }
        }
    }
    Ok(acc)
}

/// The three pieces of `uv = T_u v + T_v u + R(u, v)` and the product itself.
#[derive(Debug, Clone)]
pub struct Bony {
    /// `u v`.
    pub product: GridFunction,
    /// `T_u v`.
    pub t_uv: GridFunction,
    /// `T_v u`.
    pub t_vu: GridFunction,
    /// `R(u, v)`.
    pub remainder: GridFunction,
}

impl Bony {
    /// `‖uv − (T_u v + T_v u + R)‖_{L²} / ‖uv‖_{L²}`.
    pub fn defect(&self) -> Result<f64> {
        let sum = self.t_uv.add(&self.t_vu)?.add(&self.remainder)?;
        let n = self.product.l2_norm();
        Ok(if n == 0.0 { sum.l2_norm() } else { self.product.sub(&sum)?.l2_norm() / n })
    }
}

/// Bony decomposition of the product of two band-limited functions.
pub fn bony_decompose(u: &BandLimited, v: &BandLimited) -> Result<Bony> {
    Ok(Bony {
        product: u.sum()?.mul(&v.sum()?)?,
        t_uv: paraproduct(u, v)?,
        t_vu: paraproduct(v, u)?,
        remainder: remainder(u, v)?,
    })
}

// ---------------------------------------------------------------------------
// Bernstein
// ---------------------------------------------------------------------------

/// Flat seed `F(λ) = Id` on every node: its blocks carry all of each ring.
pub fn flat_seed(grid: &LambdaGrid, n_max: usize) -> SpectralFunction {
    let z = SpectralFunction::zeros(grid, n_max);
    z.map_nodes(|_, _, m| {
        let mut out = m.clone();
        out.fill_with_identity();
        out
    })
}

/// Points per axis of the scaled grid used for non-`L²` norms.
pub const BERNSTEIN_POINTS: usize = 17;

/// Ratio `‖X^β u_p‖_{L^b} / ‖u_p‖_{L^a}` for `u_p = Δ_p(seed)`.
///
/// `L²` norms are spectral; other norms use a grid of half widths
/// `(3·2^{−p}, 3·2^{−p}, 3·4^{−p})` around the origin, the natural scale of `u_p`.
pub fn bernstein_ratio(
    part: &DyadicPartition,
    seed: &SpectralFunction,
    p: i32,
    beta: &[SpectralOp],
    a: f64,
    b: f64,
) -> Result<f64> {
    if p > top_block(seed) - 1 {
        return Err(Error::UnderResolved(format!(
            "block {p} is cut by the truncation (top block {}): extend the λ-range or N_max",
            top_block(seed)
        )));
    }
    let up = lp_project(part, seed, p);
    let mut xu = up.clone();
    for op in beta {
        xu = spectral_derivative(&xu, *op)?;
    }
    let scale = 2f64.powi(-p.max(0));
    let grid = Grid::new(
        seed.grid.d,
        [3.0 * scale, 3.0 * scale, 3.0 * scale * scale],
        [BERNSTEIN_POINTS; 3],
    )?;
    let norm = |f: &SpectralFunction, q: f64| -> Result<f64> {
        if q == 2.0 {
            Ok(f.norm_sqr().sqrt())
        } else {
            Ok(inverse_gft(f, &grid)?.lq_norm(q))
        }
    };
    let den = norm(&up, a)?;
    if den == 0.0 {
        return Err(Error::UnderResolved(format!("block {p} of the seed is empty")));
    }
    Ok(norm(&xu, b)? / den)
}

/// Ratios over `p_range` and the least-squares slope of `log₂(ratio)` in `p`.
pub fn bernstein_fit(
    part: &DyadicPartition,
    seed: &SpectralFunction,
    p_range: std::ops::RangeInclusive<i32>,
    beta: &[SpectralOp],
    a: f64,
    b: f64,
) -> Result<(Vec<(i32, f64)>, f64)> {
    let rows = p_range.map(|p| bernstein_ratio(part, seed, p, beta, a, b).map(|r| (p, r))).collect::<Result<Vec<_>>>()?;
    let pts: Vec<(f64, f64)> = rows.iter().map(|(p, r)| (*p as f64, r.log2())).collect();
    Ok((rows, fit_slope(&pts)))
}

fn fit_slope(pts: &[(f64, f64)]) -> f64 {
    if pts.len() < 2 {
        return f64::NAN;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}

// ---------------------------------------------------------------------------
// LP symbols
// ---------------------------------------------------------------------------

/// Levels above which [`lp_phi`] switches from the finite Laguerre sum to the
/// Mehler series.
pub const LP_LAGUERRE_CAP: usize = 8192;

/// `φ(μ, ρ)`: the Weyl symbol of `R*(4μ H)`, `H = ξ² − ∂²`, at `ξ² + η² = ρ/(4μ)`,
/// so that `φ(μ, ρ) → R*(ρ)` as `μ → 0`.
///
/// `R*(4μ(2n+1))` vanishes for `n ≥ 1/μ`, so the Laguerre sum over the first
/// `2(⌈1/μ⌉ + 2)` levels is exact; below `μ ≈ 2/LP_LAGUERRE_CAP` the Mehler
/// series is used instead.
pub fn lp_phi(mu: f64, rho: f64) -> Result<C64> {
    let mu = mu.abs();
    if mu == 0.0 {
        return Ok(C64::new(ring(rho), 0.0));
    }
    let x = rho / (4.0 * mu);
    let levels = 2 * ((1.0 / mu).ceil() as usize + 2);
    if levels <= LP_LAGUERRE_CAP {
        let eig = move |n: usize| C64::new(ring(4.0 * mu * (2 * n + 1) as f64), 0.0);
        return Ok(laguerre_profile(&eig, x, levels));
    }
    lp_phi_mehler(mu, rho)
}

/// `φ(μ, ρ)` from the Mehler series of `R(y) = R*(4μy)`.
pub fn lp_phi_mehler(mu: f64, rho: f64) -> Result<C64> {
    let mu = mu.abs();
    let f: Profile = Arc::new(move |y: f64| C64::new(ring(4.0 * mu * y), 0.0));
    let r = SpectralProfileR::new(f, (RING_SUPPORT.0 / (4.0 * mu), RING_SUPPORT.1 / (4.0 * mu)), f64::NEG_INFINITY)?;
    Ok(MehlerSeries::new(&r, 1)?.eval(rho / (4.0 * mu))?.value)
}

/// Symbol `Φ_p(λ, ξ, η) = φ(4^{−p}|λ|, 4^{1−p}|λ|(ξ² + η²))` of `Δ_p`, order 0.
///
/// Its Hermite matrices are the exact diagonals `R*(4^{−p}·4|λ|(2n+1))`, so
/// `Op(Φ_p) = Δ_p` on the truncated space.
pub fn lp_symbol(part: &DyadicPartition, p: i32) -> HeisenbergSymbol {
    let part = part.clone();
    let phase = PhaseFactor::PerLambda(Arc::new(move |lambda: f64| {
        let (pa, pb) = (part.clone(), part.clone());
        let eigen: Eigen = Arc::new(move |n| C64::new(pa.block(p, 4.0 * lambda.abs() * (2 * n + 1) as f64), 0.0));
        let mu = 4f64.powi(-p.max(0)) * lambda.abs();
        let profile: Profile = Arc::new(move |x: f64| {
            if p < 0 {
                // R̃*(4|λ|H): the ball symbol is 1 − Σ_p rings, summed the same way
                let eig = |n: usize| C64::new(pb.low(4.0 * lambda.abs() * (2 * n + 1) as f64), 0.0);
                let levels = 2 * ((0.5 / lambda.abs().max(1e-12)).ceil() as usize + 2);
                laguerre_profile(&eig, x, levels.min(LP_LAGUERRE_CAP))
            } else {
                lp_phi(mu, 4.0 * mu * x).unwrap_or(C64::new(f64::NAN, f64::NAN))
            }
        });
        PhaseSymbol::radial_with_eigen(profile, eigen, Some(0.0))
    }));
    HeisenbergSymbol::separable(
        format!("Phi_{p}"),
        0.0,
        vec![SymbolTerm::new(None, Arc::new(|_| C64::new(1.0, 0.0)), phase)],
    )
}

// ---------------------------------------------------------------------------
// Off-diagonal decay of Δ_q ∘ Op(a_p)
// ---------------------------------------------------------------------------

/// Smooth profile `Φ` compactly supported in `(0, ∞)`, with its transform.
#[derive(Clone)]
pub struct RingProfile {
    /// `Φ(r)`.
    pub f: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    /// `supp Φ ⊂ [a, b]`, `a > 0`.
    pub support: (f64, f64),
    /// `|τ|` beyond which `Φ̂` is negligible.
    pub tau_max: f64,
    hat: Arc<OnceLock<Result<Profile>>>,
}

impl std::fmt::Debug for RingProfile {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "RingProfile(support={:?})", self.support)
    }
}

impl RingProfile {
    /// Validated constructor.
    pub fn new(f: Arc<dyn Fn(f64) -> f64 + Send + Sync>, support: (f64, f64), tau_max: f64) -> Result<Self> {
        if !(support.0 > 0.0 && support.1 > support.0) || !(tau_max > 0.0) {
            return Err(Error::InvalidInput(format!("ring profile needs 0 < a < b and τ_max > 0, got {support:?}")));
        }
        Ok(Self { f, support, tau_max, hat: Arc::new(OnceLock::new()) })
    }

    /// `Φ(r) = R*(4r)`, the classical symbol of `Δ_p` at `p = 0`; support `[1/4, 2]`.
    pub fn standard() -> Self {
        Self::new(Arc::new(|r| ring(4.0 * r)), (0.25, 2.0), 4000.0).expect("valid standard profile")
    }

    /// `Φ(r)`.
    pub fn eval(&self, r: f64) -> f64 {
        (self.f)(r)
    }

    /// `Φ̂(τ) = ∫ e^{−iτr} Φ(r) dr`, tabulated on first use.
    pub fn hat(&self) -> Result<Profile> {
        self.hat
            .get_or_init(|| {
                let f = self.f.clone();
                let r = SpectralProfileR::new(Arc::new(move |y| C64::new(f(y), 0.0)), self.support, f64::NEG_INFINITY)?;
                sampled_hat(&r, self.tau_max)
            })
            .clone()
    }
}

/// Eigenvalues of `op^w(Φ(h(ξ² + η²)))` on levels `n ≤ n_max` (`d = 1`):
/// `(−1)^n ∫ Φ(hx) e^{−x} L_n(2x) dx`.
pub fn ring_eigenvalues(phi: &RingProfile, h: f64, n_max: usize) -> Vec<f64> {
    let nu = (2 * n_max + 1) as f64;
    let top = nu + 12.0 * nu.sqrt() + 60.0;
    let (lo, hi) = (phi.support.0 / h, (phi.support.1 / h).min(top));
    let mut out = vec![0.0; n_max + 1];
    if lo >= hi {
        return out;
    }
    let width = 0.25f64.min((phi.support.1 - phi.support.0) / (64.0 * h));
    let panels = ((hi - lo) / width).ceil() as usize;
    let (xs, ws) = GaussLegendre::new(16).composite(lo, hi, panels);
    for (x, w) in xs.iter().zip(&ws) {
        let f = phi.eval(h * x) * (-x).exp() * w;
        if f == 0.0 {
            continue;
        }
        for (n, l) in laguerre_all(n_max, 0.0, 2.0 * x).iter().enumerate() {
            out[n] += f * l;
        }
    }
    for (n, v) in out.iter_mut().enumerate() {
        if n % 2 == 1 {
            *v = -*v;
        }
    }
    out
}

/// `‖Δ_q Op(a_p)‖` on the truncated space, `a_p = Φ(4^{−p}|λ|(ξ² + η²))`:
/// `max_{λ_k, n ≤ N} |R*(4^{−q} 4|λ_k|(2n+1)) I_p(n, λ_k)|`.
pub fn truncation_decay(
    part: &DyadicPartition,
    phi: &RingProfile,
    p: i32,
    q: i32,
    grid: &LambdaGrid,
    n_max: usize,
) -> Result<f64> {
    if grid.d != 1 {
        return Err(Error::Unsupported("truncation decay is implemented for d = 1".into()));
    }
    let h_of = |l: f64| 4f64.powi(-p) * l.abs();
    Ok(grid
        .nodes
        .par_iter()
        .map(|&l| {
            let e = |n: usize| 4.0 * l.abs() * (2 * n + 1) as f64;
            if (0..=n_max).all(|n| part.block(q, e(n)) == 0.0) {
                return 0.0;
            }
            let eig = ring_eigenvalues(phi, h_of(l), n_max);
            (0..=n_max).map(|n| (part.block(q, e(n)) * eig[n]).abs()).fold(0.0, f64::max)
        })
        .reduce(|| 0.0, f64::max))
}

/// CSV `p,q,norm` of decay rows.
pub fn write_decay_csv<W: Write>(rows: &[(i32, i32, f64)], mut w: W) -> Result<()> {
    writeln!(w, "p,q,norm")?;
    for (p, q, v) in rows {
        writeln!(w, "{p},{q},{v:.17e}")?;
    }
    Ok(())
}

/// `(I_p(α, λ), Φ(λ 4^{−p}(2α+1)))` with
/// `I_p = (1/2π) ∫ Φ̂(τ) e^{i(2α+1) arctan(4^{−p}λτ)} (1 + (4^{−p}λτ)²)^{−1/2} dτ`.
pub fn ip_compare(phi: &RingProfile, p: i32, alpha: usize, lambda: f64) -> Result<(f64, f64)> {
    let hat = phi.hat()?;
    let h = 4f64.powi(-p) * lambda;
    let nu = (2 * alpha + 1) as f64;
    let t = phi.tau_max;
    let panels = (2.0 * t / 0.25).ceil() as usize;
    let (ts, ws) = GaussLegendre::new(16).composite(-t, t, panels);
    let s: C64 = ts
        .par_iter()
        .zip(ws.par_iter())
        .map(|(&tau, &w)| {
            let ht = h * tau;
            hat(tau) * C64::from_polar(w / (1.0 + ht * ht).sqrt(), nu * ht.atan())
        })
        .sum();
    Ok((s.re / (2.0 * PI), phi.eval(h * nu)))
}
