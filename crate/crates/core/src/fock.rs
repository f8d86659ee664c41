//! Truncated Fock/Hermite bases and operator matrices at a fixed `λ ≠ 0`.
//!
//! Every matrix here is written in the coordinates of the Fock basis
//! `F_{α,λ}`, which the Hermite-Weber intertwiner maps onto the rescaled
//! Hermite functions `h_{α,λ}(ξ) = |λ|^{d/4} Π h_{α_j}(√|λ| ξ_j)`. Indices are
//! enumerated in graded order, so the "interior" indices `|α| ≤ N_max − margin`
//! always form a leading principal block.

use std::collections::HashMap;
use std::io::Write;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::group::HeisenbergPoint;
use crate::hermite::hermite_fill;
use crate::laguerre::{binomial, laguerre_eval};
use crate::quadrature::gauss_hermite;

/// Complex dense matrix type used throughout.
pub type CMatrix = DMatrix<Complex64>;

/// Multi-index `α ∈ N^d`.
pub type FockIndex = Vec<usize>;

/// Default bound on the quadrature resolution defect of [`rep_matrix`].
pub const DEFAULT_RESOLUTION_TOL: f64 = 1e-8;

/// Fock basis `{F_{α,λ} : |α| ≤ N_max}` at one `λ`.
#[derive(Debug, Clone)]
pub struct TruncatedBasis {
    d: usize,
    n_max: usize,
    lambda: f64,
    quad_nodes: usize,
    adaptive: bool,
    resolution_tol: f64,
    indices: Vec<FockIndex>,
    lookup: HashMap<FockIndex, usize>,
}

/// All `α ∈ N^d` with `|α| = k`, in lexicographically decreasing order.
fn indices_of_degree(d: usize, k: usize) -> Vec<FockIndex> {
    if d == 1 {
        return vec![vec![k]];
    }
    let mut out = Vec::new();
    for first in (0..=k).rev() {
        for mut rest in indices_of_degree(d - 1, k - first) {
            let mut a = vec![first];
            a.append(&mut rest);
            out.push(a);
        }
    }
    out
}

impl TruncatedBasis {
    /// Basis with the default quadrature of `2 N_max + 16` Gauss-Hermite nodes.
    pub fn new(d: usize, n_max: usize, lambda: f64) -> Result<Self> {
        if d == 0 {
            return Err(Error::InvalidInput("d must be at least 1".into()));
        }
        if lambda == 0.0 || !lambda.is_finite() {
            return Err(Error::InvalidInput(format!("λ must be finite and nonzero, got {lambda}")));
        }
        let indices: Vec<FockIndex> = (0..=n_max).flat_map(|k| indices_of_degree(d, k)).collect();
        let lookup = indices.iter().enumerate().map(|(i, a)| (a.clone(), i)).collect();
        Ok(Self {
            d,
            n_max,
            lambda,
            quad_nodes: 2 * n_max + 16,
            adaptive: true,
            resolution_tol: DEFAULT_RESOLUTION_TOL,
            indices,
            lookup,
        })
    }

    /// Fixes the Gauss-Hermite node count (at least `2 N_max + 16`) and turns
    /// off the displacement-dependent enlargement.
    pub fn with_quadrature(mut self, nodes: usize) -> Result<Self> {
        if nodes < 2 * self.n_max + 16 {
            return Err(Error::InvalidInput(format!(
                "need at least {} quadrature nodes, got {nodes}",
                2 * self.n_max + 16
            )));
        }
        self.quad_nodes = nodes;
        self.adaptive = false;
        Ok(self)
    }

    /// Overrides the resolution-defect threshold used by [`rep_matrix`].
    pub fn with_resolution_tol(mut self, tol: f64) -> Self {
        self.resolution_tol = tol;
        self
    }

    /// Same index set at another `λ`.
    pub fn at_lambda(&self, lambda: f64) -> Result<Self> {
        if lambda == 0.0 || !lambda.is_finite() {
            return Err(Error::InvalidInput(format!("λ must be finite and nonzero, got {lambda}")));
        }
        let mut b = self.clone();
        b.lambda = lambda;
        Ok(b)
    }

    /// Dimension `d` of `H^d`.
    pub fn d(&self) -> usize {
        self.d
    }

    /// Truncation degree.
    pub fn n_max(&self) -> usize {
        self.n_max
    }

    /// The representation parameter.
    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    /// Base Gauss-Hermite node count per axis.
    pub fn quad_nodes(&self) -> usize {
        self.quad_nodes
    }

    /// Node count used for an axis with shift `c = 2√|λ|x` and frequency
    /// `ω = 2√|λ|y`: the rule must reach `|c|/2` beyond the Hermite turning
    /// point and resolve the phase, so it grows like `(max(|c|,|ω|)/2)²/2`.
    pub fn nodes_for(&self, c: f64, omega: f64) -> usize {
        if !self.adaptive {
            return self.quad_nodes;
        }
        let reach = 0.5 * c.abs().max(omega.abs()) + ((2 * self.n_max + 1) as f64).sqrt() + 6.0;
        let need = (0.5 * reach * reach).ceil() as usize;
        self.quad_nodes.max(need.div_ceil(16) * 16)
    }

    /// Basis size `C(N_max + d, d)`.
    pub fn dim(&self) -> usize {
        self.indices.len()
    }

    /// Multi-index at a position.
    pub fn index(&self, i: usize) -> &[usize] {
        &self.indices[i]
    }

    /// Position of a multi-index, if inside the truncation.
    pub fn position(&self, alpha: &[usize]) -> Option<usize> {
        self.lookup.get(alpha).copied()
    }

    /// `|α|` at a position.
    pub fn degree(&self, i: usize) -> usize {
        self.indices[i].iter().sum()
    }

    /// Eigenvalue `4|λ|(2|α| + d)` of `D_λ` at a position.
    pub fn eigenvalue(&self, i: usize) -> f64 {
        4.0 * self.lambda.abs() * (2 * self.degree(i) + self.d) as f64
    }

    /// Size of the leading block `|α| ≤ N_max − margin`.
    pub fn interior_len(&self, margin: usize) -> usize {
        if margin > self.n_max {
            return 0;
        }
        binomial(self.n_max - margin + self.d, self.d).round() as usize
    }
}

/// A square matrix in Fock coordinates at one `λ`.
#[derive(Debug, Clone, PartialEq)]
pub struct OperatorMatrix {
    /// The representation parameter.
    pub lambda: f64,
    /// Entries `⟨F_α, A F_β⟩` at `(α, β)`.
    pub entries: CMatrix,
}

impl OperatorMatrix {
    /// Wraps a matrix.
    pub fn new(lambda: f64, entries: CMatrix) -> Self {
        Self { lambda, entries }
    }

    /// Zero matrix of size `n`.
    pub fn zeros(lambda: f64, n: usize) -> Self {
        Self { lambda, entries: CMatrix::zeros(n, n) }
    }

    /// Identity of size `n`.
    pub fn identity(lambda: f64, n: usize) -> Self {
        Self { lambda, entries: CMatrix::identity(n, n) }
    }

    /// Dimension.
    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    /// Hermitian adjoint.
    pub fn adjoint(&self) -> Self {
        Self { lambda: self.lambda, entries: self.entries.adjoint() }
    }

    /// Matrix product `self · other`.
    pub fn compose(&self, other: &Self) -> Self {
        Self { lambda: self.lambda, entries: &self.entries * &other.entries }
    }

    /// Hilbert-Schmidt (Frobenius) norm.
    pub fn hs_norm(&self) -> f64 {
        self.entries.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Operator (spectral) norm.
    pub fn op_norm(&self) -> f64 {
        op_norm(&self.entries)
    }

    /// Trace.
    pub fn trace(&self) -> Complex64 {
        self.entries.trace()
    }

    /// Leading `k × k` block.
    pub fn block(&self, k: usize) -> CMatrix {
        self.entries.view((0, 0), (k, k)).into_owned()
    }

    /// CSV dump with columns `row,col,re,im`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "row,col,re,im")?;
        for r in 0..self.entries.nrows() {
            for c in 0..self.entries.ncols() {
                let v = self.entries[(r, c)];
                writeln!(w, "{r},{c},{:.17e},{:.17e}", v.re, v.im)?;
            }
        }
        Ok(())
    }
}

/// Largest singular value.
pub fn op_norm(m: &CMatrix) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    m.clone().singular_values().iter().copied().fold(0.0, f64::max)
}

/// Ladder matrices `(Q_j, Q̄_j)` for `j = 1..d`.
///
/// For `λ > 0`: `Q_j F_α = −√(2|λ|)√(α_j+1) F_{α+1_j}` and
/// `Q̄_j F_α = √(2|λ|)√α_j F_{α−1_j}`. For `λ < 0` the roles swap:
/// `Q_j` lowers with `+` and `Q̄_j` raises with `−`. Images leaving the
/// truncation are dropped.
pub fn ladder_matrices(basis: &TruncatedBasis) -> Vec<(OperatorMatrix, OperatorMatrix)> {
    let n = basis.dim();
    let c = (2.0 * basis.lambda.abs()).sqrt();
    let mut out = Vec::with_capacity(basis.d);
    for j in 0..basis.d {
        let mut raise = CMatrix::zeros(n, n);
        let mut lower = CMatrix::zeros(n, n);
        for col in 0..n {
            let alpha = basis.index(col);
            let mut up = alpha.to_vec();
            up[j] += 1;
            if let Some(row) = basis.position(&up) {
                raise[(row, col)] = Complex64::new(-c * ((alpha[j] + 1) as f64).sqrt(), 0.0);
            }
            if alpha[j] > 0 {
                let mut down = alpha.to_vec();
                down[j] -= 1;
                let row = basis.position(&down).expect("lower index is inside the truncation");
                lower[(row, col)] = Complex64::new(c * (alpha[j] as f64).sqrt(), 0.0);
            }
        }
        let (q, qbar) = if basis.lambda > 0.0 { (raise, lower) } else { (lower, raise) };
        out.push((OperatorMatrix::new(basis.lambda, q), OperatorMatrix::new(basis.lambda, qbar)));
    }
    out
}

/// Diagonal matrix of `D_λ` with entries `4|λ|(2|α| + d)`.
pub fn dlambda_matrix(basis: &TruncatedBasis) -> OperatorMatrix {
    let n = basis.dim();
    let diag = nalgebra::DVector::from_iterator(n, (0..n).map(|i| Complex64::new(basis.eigenvalue(i), 0.0)));
    OperatorMatrix::new(basis.lambda, CMatrix::from_diagonal(&diag))
}

/// Diagonal matrix `χ(D_λ)` with entries `χ(4|λ|(2|α| + d))`.
pub fn functional_calculus<F>(chi: F, basis: &TruncatedBasis) -> Result<OperatorMatrix>
where
    F: Fn(f64) -> Complex64,
{
    let n = basis.dim();
    let mut m = CMatrix::zeros(n, n);
    for i in 0..n {
        let e = basis.eigenvalue(i);
        let v = chi(e);
        if !v.re.is_finite() || !v.im.is_finite() {
            return Err(Error::NonFinite(format!("χ is undefined at spectral value {e}")));
        }
        m[(i, i)] = v;
    }
    Ok(OperatorMatrix::new(basis.lambda, m))
}

/// One-axis factor of the representation matrix, without the `e^{iλs}` phase:
/// `m(a, b) = ∫ h_a(t) e^{−2iλxy} e^{2i sgn(λ)√|λ| y t} h_b(t − 2√|λ| x) dt`.
///
/// The integral runs in the centred variable `u = t − c/2`, `c = 2√|λ|x`,
/// so both Hermite factors are evaluated symmetrically about the rule's
/// centre. Returns the matrix and a resolution defect built from two
/// closed-form integrals at the top degree.
pub fn axis_matrix(n_max: usize, lambda: f64, x: f64, y: f64, nodes: usize) -> (CMatrix, f64) {
    assert!(nodes > 0, "quadrature needs nodes");
    let gh = gauss_hermite(nodes);
    let sq = lambda.abs().sqrt();
    let c = 2.0 * sq * x;
    let omega = 2.0 * lambda.signum() * sq * y;
    let q = gh.len();
    let n = n_max + 1;
    let mut left = CMatrix::zeros(n, q);
    let mut right = CMatrix::zeros(q, n);
    let mut hp = vec![0.0; n];
    let mut hm = vec![0.0; n];
    let global = Complex64::from_polar(1.0, -2.0 * lambda * x * y + 0.5 * omega * c);
    let mut norm_check = 0.0;
    let mut osc_check = Complex64::new(0.0, 0.0);
    for k in 0..q {
        let u = gh.nodes[k];
        let w = gh.scaled_weights[k];
        hermite_fill(u + 0.5 * c, &mut hp);
        hermite_fill(u - 0.5 * c, &mut hm);
        let phase = Complex64::from_polar(w, omega * u);
        for a in 0..n {
            left[(a, k)] = phase * hp[a];
            right[(k, a)] = Complex64::new(hm[a], 0.0);
        }
        norm_check += w * hp[n_max] * hp[n_max];
        let h0 = crate::hermite::hermite_eval(n_max, u);
        osc_check += phase * h0 * h0;
    }
    let exact_osc = (-0.25 * omega * omega).exp() * laguerre_eval(n_max, 0.0, 0.5 * omega * omega);
    let defect = (norm_check - 1.0).abs().max((osc_check - exact_osc).norm());
    ((left * right) * global, defect)
}

/// Representation matrix `M_{αβ} = ⟨h_{α,λ}, v^λ_w h_{β,λ}⟩` together with its
/// quadrature resolution defect.
pub fn rep_matrix_with_defect(w: &HeisenbergPoint, basis: &TruncatedBasis) -> Result<(OperatorMatrix, f64)> {
    if w.dim() != basis.d {
        return Err(Error::Incompatible(format!(
            "point has d = {} but basis has d = {}",
            w.dim(),
            basis.d
        )));
    }
    let lambda = basis.lambda;
    let mut axes = Vec::with_capacity(basis.d);
    let mut defect: f64 = 0.0;
    for j in 0..basis.d {
        let sq = lambda.abs().sqrt();
        let nodes = basis.nodes_for(2.0 * sq * w.x[j], 2.0 * sq * w.y[j]);
        let (m, e) = axis_matrix(basis.n_max, lambda, w.x[j], w.y[j], nodes);
        defect = defect.max(e);
        axes.push(m);
    }
    let phase = Complex64::from_polar(1.0, lambda * w.s);
    let n = basis.dim();
    let entries = if basis.d == 1 {
        axes.pop().expect("one axis") * phase
    } else {
        CMatrix::from_fn(n, n, |r, c| {
            let a = basis.index(r);
            let b = basis.index(c);
            (0..basis.d).fold(phase, |acc, j| acc * axes[j][(a[j], b[j])])
        })
    };
    Ok((OperatorMatrix::new(lambda, entries), defect))
}

/// Representation matrix of `u^λ_w` in Fock coordinates (computed in the
/// Schrödinger picture). Fails when the quadrature defect exceeds the basis
/// tolerance.
pub fn rep_matrix(w: &HeisenbergPoint, basis: &TruncatedBasis) -> Result<OperatorMatrix> {
    let (m, defect) = rep_matrix_with_defect(w, basis)?;
    if !(defect <= basis.resolution_tol) {
        return Err(Error::UnderResolved(format!(
            "representation quadrature defect {defect:.3e} exceeds {:.1e}; raise the node count",
            basis.resolution_tol
        )));
    }
    Ok(m)
}

/// Residuals of the two ladder identities at a point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LadderResidual {
    /// `max_j ‖Z_j u_{w⁻¹} − Q_j u_{w⁻¹}‖` with `Z_j` applied by finite differences.
    pub field_identity: f64,
    /// `max_j ‖(1/2λ)[Q_j, u_w] + z̄_j u_w‖`.
    pub commutator_identity: f64,
}

impl LadderResidual {
    /// Larger of the two residuals.
    pub fn max(&self) -> f64 {
        self.field_identity.max(self.commutator_identity)
    }
}

/// Checks `Z_j u^λ_{w⁻¹} = Q_j u^λ_{w⁻¹}` and `(1/2λ)[Q_j, u^λ_w] = −z̄_j u^λ_w`
/// on the block `|α| ≤ N_max − 2`, in operator norm. `Z_j` acts on the
/// matrix-valued map `w ↦ u_{w⁻¹}` through sixth-order central differences
/// with step `h`.
pub fn check_ladder_commutation(w: &HeisenbergPoint, basis: &TruncatedBasis, h: f64) -> Result<LadderResidual> {
    let d = basis.d;
    let k = basis.interior_len(2);
    let ladders = ladder_matrices(basis);
    let at_inv = |p: &HeisenbergPoint| rep_matrix(&p.inv(), basis).map(|m| m.entries);
    let fd = |shift: &dyn Fn(f64) -> HeisenbergPoint| -> Result<CMatrix> {
        const C: [f64; 3] = [45.0, -9.0, 1.0];
        let mut acc = CMatrix::zeros(basis.dim(), basis.dim());
        for (k, c) in C.iter().enumerate() {
            let t = (k + 1) as f64 * h;
            acc += (at_inv(&shift(t))? - at_inv(&shift(-t))?) * Complex64::new(*c, 0.0);
        }
        Ok(acc / Complex64::new(60.0 * h, 0.0))
    };
    let m_inv = at_inv(w)?;
    let m_w = rep_matrix(w, basis)?;
    let i = Complex64::new(0.0, 1.0);
    let mut field_res: f64 = 0.0;
    let mut comm_res: f64 = 0.0;
    for j in 0..d {
        let dx = fd(&|t| {
            let mut p = w.clone();
            p.x[j] += t;
            p
        })?;
        let dy = fd(&|t| {
            let mut p = w.clone();
            p.y[j] += t;
            p
        })?;
        let ds = fd(&|t| {
            let mut p = w.clone();
            p.s += t;
            p
        })?;
        let zbar = Complex64::new(w.x[j], -w.y[j]);
        let z_applied = (dx - dy * i) * Complex64::new(0.5, 0.0) + ds * (i * zbar);
        let (q, _) = &ladders[j];
        let rhs = &q.entries * &m_inv;
        let diff = (z_applied - rhs).view((0, 0), (k, k)).into_owned();
        field_res = field_res.max(op_norm(&diff));

        let comm = &q.entries * &m_w.entries - &m_w.entries * &q.entries;
        let lhs = comm / Complex64::new(2.0 * basis.lambda, 0.0) + &m_w.entries * zbar;
        comm_res = comm_res.max(op_norm(&lhs.view((0, 0), (k, k)).into_owned()));
    }
    Ok(LadderResidual { field_identity: field_res, commutator_identity: comm_res })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::laguerre::displacement_element;

    #[test]
    fn basis_dimension_is_binomial() {
        for d in 1..=3 {
            for n in 0..6 {
                let b = TruncatedBasis::new(d, n, 1.0).unwrap();
                assert_eq!(b.dim() as f64, binomial(n + d, d));
                assert_eq!(b.interior_len(0), b.dim());
                for i in 1..b.dim() {
                    assert!(b.degree(i - 1) <= b.degree(i));
                }
            }
        }
        assert!(TruncatedBasis::new(1, 4, 0.0).is_err());
        assert!(TruncatedBasis::new(1, 4, 1.0).unwrap().with_quadrature(10).is_err());
    }

    #[test]
    fn ladder_examples() {
        let b = TruncatedBasis::new(1, 6, 0.5).unwrap();
        let (q, qbar) = &ladder_matrices(&b)[0];
        assert_eq!(q.entries[(1, 0)], Complex64::new(-1.0, 0.0));
        assert_eq!(qbar.entries[(0, 1)], Complex64::new(1.0, 0.0));
        let i = Complex64::new(0.0, 1.0);
        let lhs = (&q.entries / i).adjoint();
        let rhs = &qbar.entries / i;
        assert_eq!(lhs, rhs);
    }

    #[test]
    fn dlambda_examples() {
        let b = TruncatedBasis::new(1, 5, 1.0).unwrap();
        let dl = dlambda_matrix(&b);
        assert_eq!(dl.entries[(0, 0)].re, 4.0);
        assert_eq!(dl.entries[(3, 3)].re, 28.0);
        let sq = functional_calculus(|x| Complex64::new(x.sqrt(), 0.0), &b).unwrap();
        let back = sq.compose(&sq);
        assert!((back.entries - dl.entries).norm() < 1e-12);
        let one = functional_calculus(|_| Complex64::new(1.0, 0.0), &b).unwrap();
        assert_eq!(one.entries, CMatrix::identity(b.dim(), b.dim()));
        assert!(functional_calculus(|x| Complex64::new(1.0 / (x - 4.0), 0.0), &b).is_err());
    }

    #[test]
    fn ladder_sum_is_minus_dlambda_on_interior() {
        for d in 1..=2 {
            for lambda in [0.7, -1.3] {
                let b = TruncatedBasis::new(d, 8, lambda).unwrap();
                let k = b.interior_len(1);
                let mut acc = CMatrix::zeros(b.dim(), b.dim());
                for (q, qb) in ladder_matrices(&b) {
                    acc += (&q.entries * &qb.entries + &qb.entries * &q.entries) * Complex64::new(2.0, 0.0);
                }
                let dl = dlambda_matrix(&b);
                let diff = (acc + dl.entries).view((0, 0), (k, k)).norm();
                assert!(diff < 1e-12, "d={d} λ={lambda} diff={diff}");
            }
        }
    }

    #[test]
    fn rep_matrix_matches_displacement_closed_form() {
        for lambda in [0.5, -1.0, 2.0] {
            let b = TruncatedBasis::new(1, 12, lambda).unwrap();
            let w = HeisenbergPoint::new1(0.3, -0.4, 0.7);
            let m = rep_matrix(&w, &b).unwrap();
            let sq = (2.0 * lambda.abs()).sqrt();
            let beta = Complex64::new(sq * 0.3, lambda.signum() * sq * -0.4);
            let phase = Complex64::from_polar(1.0, lambda * 0.7);
            for r in 0..=12 {
                for c in 0..=12 {
                    let exact = phase * displacement_element(r, c, beta);
                    assert!((m.entries[(r, c)] - exact).norm() < 1e-10, "λ={lambda} ({r},{c})");
                }
            }
        }
    }

    #[test]
    fn rep_matrix_special_points() {
        let b = TruncatedBasis::new(1, 10, 1.5).unwrap();
        let id = rep_matrix(&HeisenbergPoint::origin(1), &b).unwrap();
        assert!((id.entries.clone() - CMatrix::identity(11, 11)).norm() < 1e-12);
        let m = rep_matrix(&HeisenbergPoint::new1(0.0, 0.0, 0.4), &b).unwrap();
        let exact = CMatrix::identity(11, 11) * Complex64::from_polar(1.0, 1.5 * 0.4);
        assert!((m.entries - exact).norm() < 1e-12);
        let far = HeisenbergPoint::new1(6.0, 6.0, 0.0);
        let fixed = b.clone().with_quadrature(36).unwrap();
        assert!(matches!(rep_matrix(&far, &fixed), Err(Error::UnderResolved(_))));
        let m = rep_matrix(&far, &b).unwrap();
        let sq = 3f64.sqrt();
        let exact = displacement_element(3, 5, Complex64::new(sq * 6.0, sq * 6.0));
        assert!((m.entries[(3, 5)] - exact).norm() < 1e-10);
    }

    #[test]
    fn rep_matrix_factorizes_in_two_dimensions() {
        let b = TruncatedBasis::new(2, 4, 0.8).unwrap();
        let w = HeisenbergPoint::new(vec![0.2, -0.1], vec![0.05, 0.3], 0.2).unwrap();
        let w2 = HeisenbergPoint::new(vec![-0.1, 0.15], vec![0.1, -0.2], -0.4).unwrap();
        let big = TruncatedBasis::new(2, 40, 0.8).unwrap();
        let prod = rep_matrix(&w, &big).unwrap().compose(&rep_matrix(&w2, &big).unwrap());
        let direct = rep_matrix(&w.mul(&w2), &big).unwrap();
        let k = b.dim();
        assert!((prod.block(k) - direct.block(k)).norm() < 1e-8);
    }

    #[test]
    fn ladder_identities_hold_for_both_signs() {
        for lambda in [1.0, -1.0] {
            let b = TruncatedBasis::new(1, 12, lambda).unwrap();
            let e = check_ladder_commutation(&HeisenbergPoint::origin(1), &b, 1e-2).unwrap();
            assert!(e.max() < 1e-6, "λ={lambda} {e:?}");
            let w = HeisenbergPoint::new1(0.2, -0.3, 0.5);
            let e = check_ladder_commutation(&w, &b, 1e-2).unwrap();
            assert!(e.max() < 1e-5, "λ={lambda} {e:?}");
        }
    }
}
