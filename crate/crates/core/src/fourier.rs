//! The group Fourier transform `F(f)(λ) = ∫ f(w) u^λ_w dw` in truncated Fock
//! coordinates, its inverse, the radial Laguerre path and spectral images of
//! the left-invariant differential operators.
//!
//! Conventions: `u^λ_w` carries the phase `e^{iλs}`, so `F(∂_s f) = −iλ F(f)`,
//! `F(Z_j f) = F(f) Q_j`, `F(Z̄_j f) = F(f) Q̄_j` and `F(−Δ f) = F(f) D_λ`.
//! Plancherel reads `‖f‖² = c_d ∫ ‖F(f)(λ)‖²_HS |λ|^d dλ` with
//! `c_d = 2^{d−1} / π^{d+1}`.
//!
//! The fast transforms (`d = 1`) factor the representation matrix through the
//! Schrödinger picture and cost `O(n_λ (n_x n_y n_s + n_x n_q N))`; the generic
//! transforms (any `d`) sum [`rep_matrix`] over the grid and are meant for
//! small grids and cross-checks.

use std::collections::HashMap;
use std::io::Write;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::FftPlanner;

use crate::error::{Error, Result};
use crate::fock::{dlambda_matrix, ladder_matrices, rep_matrix_with_defect, CMatrix, TruncatedBasis};
use crate::group::{Grid, GridFunction, HeisenbergPoint};
use crate::hermite::hermite_fill;
use crate::laguerre::{binomial, laguerre_all};

/// Plancherel constant `c_d = 2^{d−1} / π^{d+1}`.
pub fn plancherel_constant(d: usize) -> f64 {
    2f64.powi(d as i32 - 1) / std::f64::consts::PI.powi(d as i32 + 1)
}

/// Quadrature nodes in `λ` (never zero) with weights for `∫ g(λ) |λ|^d dλ`.
#[derive(Debug, Clone, PartialEq)]
pub struct LambdaGrid {
    /// Dimension `d`.
    pub d: usize,
    /// Nodes, negative ones first, both halves increasing.
    pub nodes: Vec<f64>,
    /// Positive weights that already include `|λ|^d`.
    pub weights: Vec<f64>,
}

impl LambdaGrid {
    /// `n` geometric nodes per sign on `[λ_min, λ_max]`, trapezoid in `ln|λ|`,
    /// so each weight is `|λ|^{d+1} Δ(ln|λ|)` up to end corrections.
    pub fn geometric(d: usize, n: usize, lambda_min: f64, lambda_max: f64) -> Result<Self> {
        if d == 0 || n < 2 || !(lambda_min > 0.0) || !(lambda_max > lambda_min) {
            return Err(Error::InvalidInput(format!(
                "invalid λ-grid: d={d}, n={n}, range=[{lambda_min}, {lambda_max}]"
            )));
        }
        let h = (lambda_max / lambda_min).ln() / (n - 1) as f64;
        let mut pos = Vec::with_capacity(n);
        let mut pw = Vec::with_capacity(n);
        for k in 0..n {
            let l = lambda_min * (k as f64 * h).exp();
            let trap = if k == 0 || k == n - 1 { 0.5 * h } else { h };
            pos.push(l);
            pw.push(l.powi(d as i32 + 1) * trap);
        }
        let mut nodes: Vec<f64> = pos.iter().rev().map(|l| -l).collect();
        nodes.extend(&pos);
        let mut weights: Vec<f64> = pw.iter().rev().copied().collect();
        weights.extend(&pw);
        Ok(Self { d, nodes, weights })
    }

    /// Default grid: 128 nodes per sign, geometric on `[10⁻³, 8]`.
    pub fn standard(d: usize) -> Self {
        Self::geometric(d, 128, 1e-3, 8.0).expect("standard λ-grid parameters are valid")
    }

    /// Explicit nodes and weights.
    pub fn custom(d: usize, nodes: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        if nodes.len() != weights.len() || nodes.is_empty() {
            return Err(Error::InvalidInput("nodes and weights must be nonempty and equally long".into()));
        }
        if nodes.iter().any(|l| *l == 0.0 || !l.is_finite()) || weights.iter().any(|w| !(*w > 0.0)) {
            return Err(Error::InvalidInput("λ-nodes must be nonzero and weights positive".into()));
        }
        Ok(Self { d, nodes, weights })
    }

    /// Number of nodes.
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    /// True when there are no nodes.
    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// `c_d`.
    pub fn plancherel_constant(&self) -> f64 {
        plancherel_constant(self.d)
    }
}

/// `F(f)` sampled on a [`LambdaGrid`], one matrix per node in a shared
/// truncation `|α| ≤ N_max`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralFunction {
    /// The λ-quadrature.
    pub grid: LambdaGrid,
    /// Truncation degree.
    pub n_max: usize,
    /// One matrix per node.
    pub matrices: Vec<CMatrix>,
}

impl SpectralFunction {
    /// Zero spectral data.
    pub fn zeros(grid: &LambdaGrid, n_max: usize) -> Self {
        let n = binomial(n_max + grid.d, grid.d).round() as usize;
        Self { grid: grid.clone(), n_max, matrices: vec![CMatrix::zeros(n, n); grid.len()] }
    }

    /// Builds from per-node matrices, checking sizes.
    pub fn new(grid: LambdaGrid, n_max: usize, matrices: Vec<CMatrix>) -> Result<Self> {
        let n = binomial(n_max + grid.d, grid.d).round() as usize;
        if matrices.len() != grid.len() || matrices.iter().any(|m| m.nrows() != n || m.ncols() != n) {
            return Err(Error::Incompatible("matrix family does not match the grid and truncation".into()));
        }
        Ok(Self { grid, n_max, matrices })
    }

    /// Basis at node `k`.
    pub fn basis(&self, k: usize) -> TruncatedBasis {
        TruncatedBasis::new(self.grid.d, self.n_max, self.grid.nodes[k]).expect("grid nodes are nonzero")
    }

    /// Matrix size.
    pub fn dim(&self) -> usize {
        self.matrices.first().map(|m| m.nrows()).unwrap_or(0)
    }

    /// Applies `f(k, λ_k, M_k)` at every node.
    pub fn map_nodes<F>(&self, f: F) -> Self
    where
        F: Fn(usize, f64, &CMatrix) -> CMatrix + Sync,
    {
        let matrices = (0..self.grid.len())
            .into_par_iter()
            .map(|k| f(k, self.grid.nodes[k], &self.matrices[k]))
            .collect();
        Self { grid: self.grid.clone(), n_max: self.n_max, matrices }
    }

    /// Right multiplication by the diagonal `χ(λ, 4|λ|(2|α|+d))`.
    pub fn right_diag<F>(&self, chi: F) -> Self
    where
        F: Fn(f64, f64) -> Complex64 + Sync,
    {
        self.map_nodes(|k, lambda, m| {
            let b = self.basis(k);
            let mut out = m.clone();
            for c in 0..out.ncols() {
                let v = chi(lambda, b.eigenvalue(c));
                for r in 0..out.nrows() {
                    out[(r, c)] *= v;
                }
            }
            out
        })
    }

    /// Multiplies node `k` by `χ(λ_k)`.
    pub fn scale_lambda<F>(&self, chi: F) -> Self
    where
        F: Fn(f64) -> Complex64 + Sync,
    {
        self.map_nodes(|_, lambda, m| m * chi(lambda))
    }

    /// Pointwise sum.
    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_compatible(other)?;
        Ok(self.map_nodes(|k, _, m| m + &other.matrices[k]))
    }

    /// Pointwise difference.
    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.check_compatible(other)?;
        Ok(self.map_nodes(|k, _, m| m - &other.matrices[k]))
    }

    /// Node-wise product `self(λ) · other(λ)`.
    pub fn compose(&self, other: &Self) -> Result<Self> {
        self.check_compatible(other)?;
        Ok(self.map_nodes(|k, _, m| m * &other.matrices[k]))
    }

    fn check_compatible(&self, other: &Self) -> Result<()> {
        if self.grid != other.grid || self.n_max != other.n_max {
            return Err(Error::Incompatible("spectral grids or truncations differ".into()));
        }
        Ok(())
    }

    /// `c_d Σ_k w_k ‖F_k‖²_HS`, the Plancherel side of `‖f‖²`.
    pub fn norm_sqr(&self) -> f64 {
        let c = self.grid.plancherel_constant();
        c * self
            .matrices
            .iter()
            .zip(&self.grid.weights)
            .map(|(m, w)| w * m.iter().map(|v| v.norm_sqr()).sum::<f64>())
            .sum::<f64>()
    }

    /// `c_d Σ_k w_k tr(G_k† F_k)`, the Plancherel side of `⟨f, g⟩`.
    pub fn inner(&self, other: &Self) -> Result<Complex64> {
        self.check_compatible(other)?;
        let c = self.grid.plancherel_constant();
        Ok(self
            .matrices
            .iter()
            .zip(&other.matrices)
            .zip(&self.grid.weights)
            .map(|((f, g), w)| f.iter().zip(g.iter()).map(|(a, b)| a * b.conj()).sum::<Complex64>() * *w)
            .sum::<Complex64>()
            * c)
    }

    /// Share of the Plancherel mass carried by the top degree shell (rows or
    /// columns with `|α| = N_max`): a tail estimate for the trace truncation.
    pub fn trace_tail_estimate(&self) -> f64 {
        let total = self.norm_sqr();
        if total == 0.0 {
            return 0.0;
        }
        let k = binomial(self.n_max - 1 + self.grid.d, self.grid.d).round() as usize;
        let c = self.grid.plancherel_constant();
        let shell: f64 = self
            .matrices
            .iter()
            .zip(&self.grid.weights)
            .map(|(m, w)| {
                let inner: f64 = m.view((0, 0), (k, k)).iter().map(|v| v.norm_sqr()).sum();
                w * (m.iter().map(|v| v.norm_sqr()).sum::<f64>() - inner)
            })
            .sum();
        c * shell / total
    }

    /// CSV dump with columns `lambda,weight,row,col,re,im`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "lambda,weight,row,col,re,im")?;
        for (k, m) in self.matrices.iter().enumerate() {
            for r in 0..m.nrows() {
                for c in 0..m.ncols() {
                    let v = m[(r, c)];
                    writeln!(
                        w,
                        "{:.17e},{:.17e},{r},{c},{:.17e},{:.17e}",
                        self.grid.nodes[k], self.grid.weights[k], v.re, v.im
                    )?;
                }
            }
        }
        Ok(())
    }
}

/// Uniform trapezoid rule in `t = √|λ| ξ` for the fast transforms.
///
/// The integrands are products of Hermite functions of degree `≤ N`, shifted
/// arbitrarily, times phases `e^{iωt}` with `|ω| ≤ 2√|λ| y_max`. Their Fourier
/// support is `|k| ≲ 2√(2N+1) + |ω|`, and `h_α(t)` confines `t` to
/// `|t| ≲ √(2N+1)`, so the rule covers `|t| ≤ √(2N+1) + 8` with step
/// `2π / (2√(2N+1) + ω_max + 12)`; the aliasing error is then below `e^{−30}`.
pub fn t_rule(n_max: usize, lambda: f64, y_max: f64) -> (Vec<f64>, Vec<f64>) {
    let r = ((2 * n_max + 1) as f64).sqrt();
    let reach = r + 8.0;
    let band = 2.0 * r + 2.0 * lambda.abs().sqrt() * y_max + 12.0;
    let h = 2.0 * std::f64::consts::PI / band;
    let n = (reach / h).ceil() as usize;
    let t: Vec<f64> = (0..=2 * n).map(|q| (q as f64 - n as f64) * h).collect();
    let w = vec![h; t.len()];
    (t, w)
}

/// Rescaled Hermite table `H[q][α] = |λ|^{1/4} h_α(t_q)` at the rule's nodes.
fn hermite_table(t: &[f64], n_max: usize, lambda: f64) -> DMatrix<f64> {
    let scale = lambda.abs().powf(0.25);
    let mut h = vec![0.0; n_max + 1];
    let mut out = DMatrix::zeros(t.len(), n_max + 1);
    for (q, tq) in t.iter().enumerate() {
        hermite_fill(*tq, &mut h);
        for a in 0..=n_max {
            out[(q, a)] = scale * h[a];
        }
    }
    out
}

/// Group Fourier transform. Uses the fast factorized path for `d = 1` and the
/// generic quadrature path otherwise.
pub fn gft(f: &GridFunction, grid: &LambdaGrid, n_max: usize) -> Result<SpectralFunction> {
    if f.grid.d == 1 {
        gft_fast(f, grid, n_max)
    } else {
        gft_generic(f, grid, n_max)
    }
}

/// Bandwidth (in rad per unit of `x` or `y`) of the representation matrix
/// elements `w ↦ M_{αβ}(w)`, `|α|, |β| ≤ N`, at `λ`.
pub fn matrix_bandwidth(n_max: usize, lambda: f64) -> f64 {
    2.0 * lambda.abs().sqrt() * (((2 * n_max + 1) as f64).sqrt() + 3.0)
}

/// Oversampling factor so that a grid of spacing `h`, refined `r` times,
/// integrates a band-limited sample set against matrix elements of
/// bandwidth `band` without aliasing into the sample band.
pub fn oversampling(h: f64, band: f64) -> usize {
    let nyq = std::f64::consts::PI / h;
    (((band + nyq) / (2.0 * nyq)).ceil() as usize).max(1)
}

/// Band-limited (periodic sinc) refinement of a sample sequence by `r`,
/// through FFT zero padding. Output has `r n` samples at spacing `h / r`
/// starting at the first input sample.
fn refine_1d(input: &[Complex64], r: usize, planner: &mut FftPlanner<f64>) -> Vec<Complex64> {
    let n = input.len();
    if r == 1 {
        return input.to_vec();
    }
    let m = r * n;
    let mut spec = input.to_vec();
    planner.plan_fft_forward(n).process(&mut spec);
    let mut out = vec![Complex64::new(0.0, 0.0); m];
    let half = n / 2;
    for k in 0..n {
        if n % 2 == 0 && k == half {
            out[half] += spec[k] * 0.5;
            out[m - half] += spec[k] * 0.5;
        } else if k < n.div_ceil(2) {
            out[k] = spec[k];
        } else {
            out[k + m - n] = spec[k];
        }
    }
    planner.plan_fft_inverse(m).process(&mut out);
    let scale = 1.0 / n as f64;
    out.iter_mut().for_each(|v| *v *= scale);
    out
}

/// Refines an `n_x × n_y` sample plane by `(r_x, r_y)`.
fn refine_plane(a: &CMatrix, rx: usize, ry: usize) -> CMatrix {
    let (nx, ny) = a.shape();
    let mut planner = FftPlanner::new();
    let mut rows = CMatrix::zeros(nx, ny * ry);
    for i in 0..nx {
        let row: Vec<Complex64> = (0..ny).map(|j| a[(i, j)]).collect();
        for (j, v) in refine_1d(&row, ry, &mut planner).into_iter().enumerate() {
            rows[(i, j)] = v;
        }
    }
    let mut out = CMatrix::zeros(nx * rx, ny * ry);
    for j in 0..ny * ry {
        let col: Vec<Complex64> = (0..nx).map(|i| rows[(i, j)]).collect();
        for (i, v) in refine_1d(&col, rx, &mut planner).into_iter().enumerate() {
            out[(i, j)] = v;
        }
    }
    out
}

/// `f̂(x, y; λ) = h_s Σ_s f(x, y, s) e^{iλs}` on the horizontal plane of a
/// `d = 1` grid, refined for the matrix bandwidth at `λ`. Returns the plane
/// with its coordinate lists and cell area.
fn horizontal_plane(f: &GridFunction, lambda: f64, n_max: usize) -> (CMatrix, Vec<f64>, Vec<f64>, f64) {
    let g = &f.grid;
    let (xs, ys, ss) = (g.coords(0), g.coords(1), g.coords(2));
    let (nx, ny, ns) = (xs.len(), ys.len(), ss.len());
    let (hx, hy, hs) = (g.spacing(0), g.spacing(1), g.spacing(2));
    let phase_s: Vec<Complex64> = ss.iter().map(|s| Complex64::from_polar(hs, lambda * s)).collect();
    let mut fh = CMatrix::zeros(nx, ny);
    for i in 0..nx {
        for j in 0..ny {
            let base = (i * ny + j) * ns;
            fh[(i, j)] = f.samples[base..base + ns].iter().zip(&phase_s).map(|(v, p)| v * p).sum();
        }
    }
    let band = matrix_bandwidth(n_max, lambda);
    let (rx, ry) = (oversampling(hx, band), oversampling(hy, band));
    let fine = refine_plane(&fh, rx, ry);
    let xf = (0..nx * rx).map(|i| xs[0] + i as f64 * hx / rx as f64).collect();
    let yf = (0..ny * ry).map(|j| ys[0] + j as f64 * hy / ry as f64).collect();
    (fine, xf, yf, hx * hy / (rx * ry) as f64)
}

/// Fast `d = 1` transform.
///
/// The samples are read as a band-limited function: per node `λ` the vertical
/// transform `f̂(x, y) = ∫ f e^{iλs} ds` is refined by sinc interpolation until
/// the grid resolves the matrix elements, and every integral is a periodic
/// trapezoid sum (spectrally accurate for smooth decaying data). Then with
/// `ξ_q = t_q / √|λ|`:
/// `G(x, ξ) = ∫ f̂ e^{2iλy(ξ − x)} dy`, `A(ξ, β) = ∫ G h_{β,λ}(ξ − 2x) dx` and
/// `F_{αβ} = ∫ h_{α,λ}(ξ) A(ξ, β) dξ`.
pub fn gft_fast(f: &GridFunction, grid: &LambdaGrid, n_max: usize) -> Result<SpectralFunction> {
    let g = &f.grid;
    if g.d != 1 || grid.d != 1 {
        return Err(Error::Unsupported("the fast transform is implemented for d = 1".into()));
    }
    let matrices: Vec<CMatrix> = grid
        .nodes
        .par_iter()
        .map(|&lambda| {
            let (fh, xs, ys, area) = horizontal_plane(f, lambda, n_max);
            let (nx, ny) = fh.shape();
            let y_max = ys.iter().fold(0.0f64, |a, y| a.max(y.abs()));
            let sq = lambda.abs().sqrt();
            let (t, tw) = t_rule(n_max, lambda, y_max);
            let xi: Vec<f64> = t.iter().map(|t| t / sq).collect();
            let om: Vec<f64> = tw.iter().map(|w| w / sq).collect();
            let nq = xi.len();
            // x-dependent part of the y phase folded into the samples
            let fh = CMatrix::from_fn(nx, ny, |i, j| {
                fh[(i, j)] * Complex64::from_polar(area, -2.0 * lambda * ys[j] * xs[i])
            });
            let e1 = CMatrix::from_fn(ny, nq, |j, q| Complex64::from_polar(1.0, 2.0 * lambda * ys[j] * xi[q]));
            let gmat = fh * e1;
            let mut a = CMatrix::zeros(nq, n_max + 1);
            let scale = lambda.abs().powf(0.25);
            let mut h = vec![0.0; n_max + 1];
            for q in 0..nq {
                for i in 0..nx {
                    let v = gmat[(i, q)] * scale;
                    if v == Complex64::new(0.0, 0.0) {
                        continue;
                    }
                    hermite_fill(sq * (xi[q] - 2.0 * xs[i]), &mut h);
                    for b in 0..=n_max {
                        a[(q, b)] += v * h[b];
                    }
                }
            }
            let ht = hermite_table(&t, n_max, lambda);
            let weighted = CMatrix::from_fn(n_max + 1, nq, |al, q| Complex64::new(ht[(q, al)] * om[q], 0.0));
            weighted * a
        })
        .collect();
    SpectralFunction::new(grid.clone(), n_max, matrices)
}

/// Generic transform `Σ_w W(w) f(w) M(w)` with [`rep_matrix_with_defect`] at
/// every grid point. Fails when the defect-weighted quadrature error bound
/// exceeds `10⁻⁶` of `∫|f|`.
pub fn gft_generic(f: &GridFunction, grid: &LambdaGrid, n_max: usize) -> Result<SpectralFunction> {
    if f.grid.d != grid.d {
        return Err(Error::Incompatible("grid function and λ-grid have different d".into()));
    }
    let weights = f.grid.all_weights();
    let mass: f64 = f.samples.iter().zip(&weights).map(|(v, w)| v.norm() * w).sum();
    let results: Vec<Result<CMatrix>> = grid
        .nodes
        .par_iter()
        .map(|&lambda| {
            let basis = TruncatedBasis::new(grid.d, n_max, lambda)?;
            let mut acc = CMatrix::zeros(basis.dim(), basis.dim());
            let mut err = 0.0;
            for (i, v) in f.samples.iter().enumerate() {
                if *v == Complex64::new(0.0, 0.0) {
                    continue;
                }
                let (m, defect) = rep_matrix_with_defect(&f.grid.point(i), &basis)?;
                acc += m.entries * (v * weights[i]);
                err += defect.min(1.0) * v.norm() * weights[i];
            }
            if err > 1e-6 * mass.max(f64::MIN_POSITIVE) {
                return Err(Error::UnderResolved(format!(
                    "representation quadrature error bound {err:.3e} at λ = {lambda}"
                )));
            }
            Ok(acc)
        })
        .collect();
    let matrices = results.into_iter().collect::<Result<Vec<_>>>()?;
    SpectralFunction::new(grid.clone(), n_max, matrices)
}

/// Inverse transform onto a grid: `f(w) = c_d Σ_k w_k tr(u_{w⁻¹} F_k)`.
pub fn inverse_gft(spec: &SpectralFunction, target: &Grid) -> Result<GridFunction> {
    if spec.grid.d != target.d {
        return Err(Error::Incompatible("spectral data and target grid have different d".into()));
    }
    let samples = if target.d == 1 {
        inverse_gft_tensor(spec, &target.coords(0), &target.coords(1), &target.coords(2))?
    } else {
        (0..target.len())
            .into_par_iter()
            .map(|i| inverse_gft_point(spec, &target.point(i)))
            .collect::<Result<Vec<_>>>()?
    };
    if samples.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
        return Err(Error::NonFinite("inverse transform produced non-finite samples".into()));
    }
    GridFunction::new(target.clone(), samples)
}

/// Inverse transform at a single point (any `d`).
pub fn inverse_gft_point(spec: &SpectralFunction, w: &HeisenbergPoint) -> Result<Complex64> {
    let c = spec.grid.plancherel_constant();
    let winv = w.inv();
    let mut acc = Complex64::new(0.0, 0.0);
    for (k, m) in spec.matrices.iter().enumerate() {
        let basis = spec.basis(k);
        let (u, _) = rep_matrix_with_defect(&winv, &basis)?;
        acc += (u.entries * m).trace() * spec.grid.weights[k];
    }
    Ok(acc * c)
}

/// Fast `d = 1` inverse on the tensor product of coordinate lists; output in
/// row-major order over `(x, y, s)`.
///
/// Per node: `u(ξ, β) = Σ_α F_{βα} h_{α,λ}(ξ)`, `B(x, ξ) = Σ_β u h_{β,λ}(ξ + 2x)`,
/// `g(x, y) = e^{−2iλxy} ∫ e^{−2iλyξ} B dξ`, then `f += c_1 w_k e^{−iλs} g`.
pub fn inverse_gft_tensor(spec: &SpectralFunction, xs: &[f64], ys: &[f64], ss: &[f64]) -> Result<Vec<Complex64>> {
    if spec.grid.d != 1 {
        return Err(Error::Unsupported("the fast inverse is implemented for d = 1".into()));
    }
    let n_max = spec.n_max;
    let y_max = ys.iter().fold(0.0f64, |a, y| a.max(y.abs()));
    let c = spec.grid.plancherel_constant();
    let (nx, ny, ns) = (xs.len(), ys.len(), ss.len());
    let total = nx * ny * ns;
    let out = (0..spec.grid.len())
        .into_par_iter()
        .fold(
            || vec![Complex64::new(0.0, 0.0); total],
            |mut acc, k| {
                let lambda = spec.grid.nodes[k];
                let m = &spec.matrices[k];
                if m.iter().all(|v| *v == Complex64::new(0.0, 0.0)) {
                    return acc;
                }
                let sq = lambda.abs().sqrt();
                let (t, tw) = t_rule(n_max, lambda, y_max);
                let xi: Vec<f64> = t.iter().map(|t| t / sq).collect();
                let om: Vec<f64> = tw.iter().map(|w| w / sq).collect();
                let nq = xi.len();
                let ht = hermite_table(&t, n_max, lambda).map(|v| Complex64::new(v, 0.0));
                let u = &ht * m.transpose();
                let scale = lambda.abs().powf(0.25);
                let mut b = CMatrix::zeros(nx, nq);
                let mut h = vec![0.0; n_max + 1];
                for i in 0..nx {
                    for q in 0..nq {
                        hermite_fill(sq * (xi[q] + 2.0 * xs[i]), &mut h);
                        let mut s = Complex64::new(0.0, 0.0);
                        for be in 0..=n_max {
                            s += u[(q, be)] * h[be];
                        }
                        b[(i, q)] = s * (scale * om[q]);
                    }
                }
                let e = CMatrix::from_fn(nq, ny, |q, j| Complex64::from_polar(1.0, -2.0 * lambda * ys[j] * xi[q]));
                let g = b * e;
                let wk = c * spec.grid.weights[k];
                let phase_s: Vec<Complex64> = ss.iter().map(|s| Complex64::from_polar(wk, -lambda * s)).collect();
                for i in 0..nx {
                    for j in 0..ny {
                        let gij = g[(i, j)] * Complex64::from_polar(1.0, -2.0 * lambda * xs[i] * ys[j]);
                        let base = (i * ny + j) * ns;
                        for (kk, p) in phase_s.iter().enumerate() {
                            acc[base + kk] += gij * p;
                        }
                    }
                }
                acc
            },
        )
        .reduce(
            || vec![Complex64::new(0.0, 0.0); total],
            |mut a, b| {
                for (x, y) in a.iter_mut().zip(b) {
                    *x += y;
                }
                a
            },
        );
    Ok(out)
}

/// Radial transform table `R_m(λ_k)`, `0 ≤ m ≤ N_max`: for radial `f`,
/// `F(f)(λ) F_{α,λ} = R_{|α|}(λ) F_{α,λ}`.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialSpectral {
    /// The λ-quadrature.
    pub grid: LambdaGrid,
    /// Truncation degree.
    pub n_max: usize,
    /// `table[k][m] = R_m(λ_k)`.
    pub table: Vec<Vec<Complex64>>,
}

impl RadialSpectral {
    /// Expands to diagonal matrices in the full Fock basis.
    pub fn to_spectral(&self) -> SpectralFunction {
        let d = self.grid.d;
        let matrices = self
            .table
            .iter()
            .enumerate()
            .map(|(k, row)| {
                let b = TruncatedBasis::new(d, self.n_max, self.grid.nodes[k]).expect("nonzero node");
                let diag = nalgebra::DVector::from_iterator(b.dim(), (0..b.dim()).map(|i| row[b.degree(i)]));
                CMatrix::from_diagonal(&diag)
            })
            .collect();
        SpectralFunction { grid: self.grid.clone(), n_max: self.n_max, matrices }
    }
}

/// Checks radial symmetry: samples sharing the same `(|z|², s)` must agree
/// to `tol · sup|f|`. Returns the largest relative deviation.
pub fn radial_deviation(f: &GridFunction) -> f64 {
    let g = &f.grid;
    let sup = f.sup_norm();
    if sup == 0.0 {
        return 0.0;
    }
    let mut seen: HashMap<(i64, i64), Complex64> = HashMap::new();
    let mut dev: f64 = 0.0;
    for i in 0..g.len() {
        let p = g.point(i);
        let key = ((p.z_norm_sqr() * 1e8).round() as i64, (p.s * 1e8).round() as i64);
        let v = f.samples[i];
        match seen.get(&key) {
            Some(u) => dev = dev.max((u - v).norm() / sup),
            None => {
                seen.insert(key, v);
            }
        }
    }
    dev
}

/// Radial tolerance used by [`gft_radial`].
pub const RADIAL_TOL: f64 = 1e-8;

/// Laguerre-path transform of a radial function:
/// `R_m(λ) = C(m+d−1, m)^{−1} ∫ e^{iλs} f L_m^{(d−1)}(2|λ||z|²) e^{−|λ||z|²} dz ds`.
pub fn gft_radial(f: &GridFunction, grid: &LambdaGrid, n_max: usize) -> Result<RadialSpectral> {
    let g = &f.grid;
    if g.d != grid.d {
        return Err(Error::Incompatible("grid function and λ-grid have different d".into()));
    }
    let dev = radial_deviation(f);
    if dev > RADIAL_TOL {
        return Err(Error::InvalidInput(format!("input is not radial (deviation {dev:.3e})")));
    }
    let d = g.d;
    let binoms: Vec<f64> = (0..=n_max).map(|m| binomial(m + d - 1, m)).collect();
    if d == 1 {
        let table = grid
            .nodes
            .par_iter()
            .map(|&lambda| {
                let la = lambda.abs();
                let (fh, xs, ys, area) = horizontal_plane(f, lambda, n_max);
                let mut row = vec![Complex64::new(0.0, 0.0); n_max + 1];
                for (i, x) in xs.iter().enumerate() {
                    for (j, y) in ys.iter().enumerate() {
                        let r2 = x * x + y * y;
                        let e = (-la * r2).exp();
                        if e == 0.0 {
                            continue;
                        }
                        let v = fh[(i, j)] * (area * e);
                        for (m, l) in laguerre_all(n_max, 0.0, 2.0 * la * r2).into_iter().enumerate() {
                            row[m] += v * l;
                        }
                    }
                }
                row
            })
            .collect();
        return Ok(RadialSpectral { grid: grid.clone(), n_max, table });
    }
    let ns = g.points[2];
    let ss = g.coords(2);
    let ws = g.weights(2);
    let nh = g.len() / ns;
    // horizontal points: weight and |z|²
    let hw: Vec<(f64, f64)> = (0..nh)
        .map(|h| {
            let flat = h * ns;
            let p = g.point(flat);
            let w = g.weight(flat) / ws[0];
            (w, p.z_norm_sqr())
        })
        .collect();
    let table = grid
        .nodes
        .par_iter()
        .map(|&lambda| {
            let la = lambda.abs();
            let phase: Vec<Complex64> = ss.iter().zip(&ws).map(|(s, w)| Complex64::from_polar(*w, lambda * s)).collect();
            let mut row = vec![Complex64::new(0.0, 0.0); n_max + 1];
            for (h, (w, r2)) in hw.iter().enumerate() {
                let mut fh = Complex64::new(0.0, 0.0);
                for k in 0..ns {
                    fh += f.samples[h * ns + k] * phase[k];
                }
                if fh == Complex64::new(0.0, 0.0) {
                    continue;
                }
                let e = (-la * r2).exp();
                if e == 0.0 {
                    continue;
                }
                let lag = laguerre_all(n_max, (d - 1) as f64, 2.0 * la * r2);
                for m in 0..=n_max {
                    row[m] += fh * (w * e * lag[m]);
                }
            }
            for m in 0..=n_max {
                row[m] /= binoms[m];
            }
            row
        })
        .collect();
    Ok(RadialSpectral { grid: grid.clone(), n_max, table })
}

/// Radial inverse:
/// `f(z, s) = c_d Σ_k w_k e^{−iλ_k s} Σ_m R_m(λ_k) L_m^{(d−1)}(2|λ||z|²) e^{−|λ||z|²}`.
pub fn inverse_gft_radial(r: &RadialSpectral, target: &Grid) -> Result<GridFunction> {
    if r.grid.d != target.d {
        return Err(Error::Incompatible("radial data and target grid have different d".into()));
    }
    let d = target.d;
    let c = r.grid.plancherel_constant();
    let samples = (0..target.len())
        .into_par_iter()
        .map(|i| {
            let p = target.point(i);
            let r2 = p.z_norm_sqr();
            let mut acc = Complex64::new(0.0, 0.0);
            for (k, &lambda) in r.grid.nodes.iter().enumerate() {
                let la = lambda.abs();
                let e = (-la * r2).exp();
                if e == 0.0 {
                    continue;
                }
                let lag = laguerre_all(r.n_max, (d - 1) as f64, 2.0 * la * r2);
                let s: Complex64 = r.table[k].iter().zip(&lag).map(|(v, l)| v * l).sum();
                acc += s * Complex64::from_polar(r.grid.weights[k] * e, -lambda * p.s);
            }
            acc * c
        })
        .collect();
    GridFunction::new(target.clone(), samples)
}

/// Spectral images of differential operators (right multipliers).
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SpectralOp {
    /// `Z_j ↦ · Q_j`
    Z(usize),
    /// `Z̄_j ↦ · Q̄_j`
    Zbar(usize),
    /// `∂_s ↦ −iλ`
    S,
    /// `−Δ ↦ · D_λ`
    MinusLaplacian,
    /// `(Id − Δ)^ρ ↦ · (Id + D_λ)^ρ`
    BesselPower(f64),
    /// `(−Δ)^ρ ↦ · D_λ^ρ`
    HomogeneousPower(f64),
}

/// Right-multiplies every node by the spectral image of `op`.
pub fn spectral_derivative(spec: &SpectralFunction, op: SpectralOp) -> Result<SpectralFunction> {
    let d = spec.grid.d;
    match op {
        SpectralOp::Z(j) | SpectralOp::Zbar(j) => {
            if j >= d {
                return Err(Error::InvalidInput(format!("field index {j} out of range for d = {d}")));
            }
            let bar = matches!(op, SpectralOp::Zbar(_));
            Ok(spec.map_nodes(|k, _, m| {
                let (q, qb) = &ladder_matrices(&spec.basis(k))[j];
                m * if bar { &qb.entries } else { &q.entries }
            }))
        }
        SpectralOp::S => Ok(spec.scale_lambda(|l| Complex64::new(0.0, -l))),
        SpectralOp::MinusLaplacian => Ok(spec.map_nodes(|k, _, m| m * dlambda_matrix(&spec.basis(k)).entries)),
        SpectralOp::BesselPower(rho) => Ok(spec.right_diag(|_, e| Complex64::new((1.0 + e).powf(rho), 0.0))),
        SpectralOp::HomogeneousPower(rho) => {
            let min = spec.grid.nodes.iter().map(|l| 4.0 * l.abs() * d as f64).fold(f64::INFINITY, f64::min);
            if rho < 0.0 && min < 1e-12 {
                return Err(Error::InvalidInput("negative power of a near-zero spectral value".into()));
            }
            Ok(spec.right_diag(|_, e| Complex64::new(e.powf(rho), 0.0)))
        }
    }
}

/// `F((is − |z|²) f)` from the radial table of `f` by differences in `m` and
/// central differences in `λ`:
/// `λ > 0`: `∂_λ R_m − (m/λ)(R_m − R_{m−1})`;
/// `λ < 0`: `∂_λ R_m − ((m+d)/|λ|)(R_m − R_{m+1})`.
/// The output keeps `m ≤ N_max − 1` (the `λ < 0` branch needs `R_{m+1}`).
pub fn radial_weight_relation(r: &RadialSpectral) -> Result<RadialSpectral> {
    let nodes = &r.grid.nodes;
    let n = nodes.len();
    if r.n_max == 0 {
        return Err(Error::InvalidInput("need N_max ≥ 1".into()));
    }
    for k in 1..n {
        let (a, b) = (nodes[k - 1], nodes[k]);
        if a.signum() == b.signum() && (b - a).abs() > 0.5 * a.abs().min(b.abs()) {
            return Err(Error::UnderResolved(format!("λ-grid too coarse between {a} and {b}")));
        }
    }
    let d = r.grid.d as f64;
    let mut table = Vec::with_capacity(n);
    for k in 0..n {
        let lambda = nodes[k];
        // neighbours on the same side of 0
        let prev = (k > 0 && nodes[k - 1].signum() == lambda.signum()).then(|| k - 1);
        let next = (k + 1 < n && nodes[k + 1].signum() == lambda.signum()).then(|| k + 1);
        let deriv = |m: usize| -> Complex64 {
            let f0 = r.table[k][m];
            match (prev, next) {
                (Some(p), Some(q)) => {
                    let (h1, h2) = (lambda - nodes[p], nodes[q] - lambda);
                    let fm = r.table[p][m];
                    let fp = r.table[q][m];
                    (fp * (h1 / (h2 * (h1 + h2))) - fm * (h2 / (h1 * (h1 + h2)))) + f0 * ((h2 - h1) / (h1 * h2))
                }
                (Some(p), None) => (f0 - r.table[p][m]) / (lambda - nodes[p]),
                (None, Some(q)) => (r.table[q][m] - f0) / (nodes[q] - lambda),
                (None, None) => Complex64::new(0.0, 0.0),
            }
        };
        let row: Vec<Complex64> = (0..r.n_max)
            .map(|m| {
                let rm = r.table[k][m];
                let mf = m as f64;
                if lambda > 0.0 {
                    let prev_m = if m == 0 { Complex64::new(0.0, 0.0) } else { r.table[k][m - 1] };
                    deriv(m) - (rm - prev_m) * (mf / lambda)
                } else {
                    deriv(m) - (rm - r.table[k][m + 1]) * ((mf + d) / lambda.abs())
                }
            })
            .collect();
        table.push(row);
    }
    Ok(RadialSpectral { grid: r.grid.clone(), n_max: r.n_max - 1, table })
}
