//! Heisenberg group arithmetic and sampled functions on `H^d`.
//!
//! Points are `w = (x, y, s)` with `x, y ∈ R^d`, `s ∈ R`; the complex view
//! `z = x + i y` is derived on demand. The product law is
//! `(x, y, s)·(x', y', s') = (x+x', y+y', s+s' − 2x·y' + 2y·x')`, the inverse is
//! coordinate negation, and Haar measure is Lebesgue measure.
//!
//! Sampled functions live on a uniform tensor box grid with axes ordered
//! `x_1..x_d, y_1..y_d, s` (row-major, `s` fastest).

use std::io::{Read, Write};

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::quadrature::simpson_weights;

/// A point `(x, y, s)` of `H^d`.
#[derive(Debug, Clone, PartialEq)]
pub struct HeisenbergPoint {
    /// Horizontal real part, length `d`.
    pub x: Vec<f64>,
    /// Horizontal imaginary part, length `d`.
    pub y: Vec<f64>,
    /// Vertical coordinate.
    pub s: f64,
}

impl HeisenbergPoint {
    /// Validated constructor: equal lengths, `d ≥ 1`, finite coordinates.
    pub fn new(x: Vec<f64>, y: Vec<f64>, s: f64) -> Result<Self> {
        if x.is_empty() || x.len() != y.len() {
            return Err(Error::InvalidInput(format!(
                "x and y must have equal positive length, got {} and {}",
                x.len(),
                y.len()
            )));
        }
        if !s.is_finite() || x.iter().chain(&y).any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("point coordinates".into()));
        }
        Ok(Self { x, y, s })
    }

    /// Convenience constructor for `d = 1`.
    pub fn new1(x: f64, y: f64, s: f64) -> Self {
        Self { x: vec![x], y: vec![y], s }
    }

    /// The identity element of `H^d`.
    pub fn origin(d: usize) -> Self {
        Self { x: vec![0.0; d], y: vec![0.0; d], s: 0.0 }
    }

    /// Dimension `d`.
    pub fn dim(&self) -> usize {
        self.x.len()
    }

    /// Complex coordinates `z_j = x_j + i y_j`.
    pub fn z(&self) -> Vec<Complex64> {
        self.x.iter().zip(&self.y).map(|(a, b)| Complex64::new(*a, *b)).collect()
    }

    /// `|z|²`.
    pub fn z_norm_sqr(&self) -> f64 {
        self.x.iter().chain(&self.y).map(|v| v * v).sum()
    }

    /// Group product `self · other`.
    pub fn mul(&self, other: &Self) -> Self {
        assert_eq!(self.dim(), other.dim(), "dimension mismatch in group product");
        let mut s = self.s + other.s;
        for j in 0..self.dim() {
            s += -2.0 * self.x[j] * other.y[j] + 2.0 * self.y[j] * other.x[j];
        }
        Self {
            x: self.x.iter().zip(&other.x).map(|(a, b)| a + b).collect(),
            y: self.y.iter().zip(&other.y).map(|(a, b)| a + b).collect(),
            s,
        }
    }

    /// Group inverse (coordinate negation).
    pub fn inv(&self) -> Self {
        Self {
            x: self.x.iter().map(|v| -v).collect(),
            y: self.y.iter().map(|v| -v).collect(),
            s: -self.s,
        }
    }

    /// Dilation `δ_a(z, s) = (a z, a² s)`.
    pub fn dilate(&self, a: f64) -> Result<Self> {
        if !(a > 0.0) || !a.is_finite() {
            return Err(Error::InvalidInput(format!("dilation factor must be positive, got {a}")));
        }
        Ok(Self {
            x: self.x.iter().map(|v| a * v).collect(),
            y: self.y.iter().map(|v| a * v).collect(),
            s: a * a * self.s,
        })
    }

    /// Homogeneous norm `ρ(w) = (|z|⁴ + s²)^{1/4}`.
    pub fn norm(&self) -> f64 {
        let r2 = self.z_norm_sqr();
        (r2 * r2 + self.s * self.s).powf(0.25)
    }

    /// Left-invariant distance `d(w, w') = ρ(w⁻¹ · w')`.
    pub fn distance(&self, other: &Self) -> f64 {
        self.inv().mul(other).norm()
    }
}

/// Free-function form of the product law.
pub fn group_mul(w: &HeisenbergPoint, w2: &HeisenbergPoint) -> HeisenbergPoint {
    w.mul(w2)
}

/// Free-function form of the inverse.
pub fn group_inv(w: &HeisenbergPoint) -> HeisenbergPoint {
    w.inv()
}

/// Free-function form of the dilation.
pub fn dilate(a: f64, w: &HeisenbergPoint) -> Result<HeisenbergPoint> {
    w.dilate(a)
}

/// Free-function form of the homogeneous norm.
pub fn homogeneous_norm(w: &HeisenbergPoint) -> f64 {
    w.norm()
}

/// Free-function form of the distance.
pub fn heisenberg_distance(w: &HeisenbergPoint, w2: &HeisenbergPoint) -> f64 {
    w.distance(w2)
}

/// A uniform box grid on `[-L_x, L_x]^d × [-L_y, L_y]^d × [-L_s, L_s]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    /// Dimension `d` of `H^d`.
    pub d: usize,
    /// Half widths `(L_x, L_y, L_s)`.
    pub half_widths: [f64; 3],
    /// Points per axis `(n_x, n_y, n_s)`; every `x_j` axis uses `n_x`, every `y_j` axis `n_y`.
    pub points: [usize; 3],
}

impl Grid {
    /// Validated constructor.
    pub fn new(d: usize, half_widths: [f64; 3], points: [usize; 3]) -> Result<Self> {
        if d == 0 {
            return Err(Error::InvalidInput("d must be at least 1".into()));
        }
        if half_widths.iter().any(|l| !(*l > 0.0) || !l.is_finite()) {
            return Err(Error::InvalidInput("half widths must be positive".into()));
        }
        if points.iter().any(|n| *n < 2) {
            return Err(Error::InvalidInput("each axis needs at least two points".into()));
        }
        Ok(Self { d, half_widths, points })
    }

    /// Cubic grid with `n` points on `[-l, l]` along every axis.
    pub fn cube(d: usize, l: f64, n: usize) -> Result<Self> {
        Self::new(d, [l, l, l], [n, n, n])
    }

    /// Number of axes `2d + 1`.
    pub fn n_axes(&self) -> usize {
        2 * self.d + 1
    }

    /// Kind of axis `a`: 0 for `x`, 1 for `y`, 2 for `s`.
    pub fn axis_kind(&self, a: usize) -> usize {
        if a < self.d {
            0
        } else if a < 2 * self.d {
            1
        } else {
            2
        }
    }

    /// Shape of the sample array.
    pub fn shape(&self) -> Vec<usize> {
        (0..self.n_axes()).map(|a| self.points[self.axis_kind(a)]).collect()
    }

    /// Row-major strides.
    pub fn strides(&self) -> Vec<usize> {
        let shape = self.shape();
        let mut st = vec![1; shape.len()];
        for a in (0..shape.len() - 1).rev() {
            st[a] = st[a + 1] * shape[a + 1];
        }
        st
    }

    /// Total number of samples.
    pub fn len(&self) -> usize {
        self.shape().iter().product()
    }

    /// Always false for a validated grid.
    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Spacing along an axis kind (0, 1, 2).
    pub fn spacing(&self, kind: usize) -> f64 {
        2.0 * self.half_widths[kind] / (self.points[kind] - 1) as f64
    }

    /// Coordinates along an axis kind.
    pub fn coords(&self, kind: usize) -> Vec<f64> {
        let h = self.spacing(kind);
        let l = self.half_widths[kind];
        (0..self.points[kind]).map(|i| -l + i as f64 * h).collect()
    }

    /// Simpson weights along an axis kind.
    pub fn weights(&self, kind: usize) -> Vec<f64> {
        simpson_weights(self.points[kind], self.spacing(kind))
    }

    /// Multi-index of a flat index.
    pub fn unravel(&self, mut flat: usize) -> Vec<usize> {
        let shape = self.shape();
        let mut idx = vec![0; shape.len()];
        for a in (0..shape.len()).rev() {
            idx[a] = flat % shape[a];
            flat /= shape[a];
        }
        idx
    }

    /// Point at a flat index.
    pub fn point(&self, flat: usize) -> HeisenbergPoint {
        let idx = self.unravel(flat);
        let hx = self.spacing(0);
        let hy = self.spacing(1);
        let hs = self.spacing(2);
        let d = self.d;
        HeisenbergPoint {
            x: (0..d).map(|j| -self.half_widths[0] + idx[j] as f64 * hx).collect(),
            y: (0..d).map(|j| -self.half_widths[1] + idx[d + j] as f64 * hy).collect(),
            s: -self.half_widths[2] + idx[2 * d] as f64 * hs,
        }
    }

    /// Quadrature weight of a flat index (product of per-axis Simpson weights).
    pub fn weight(&self, flat: usize) -> f64 {
        let idx = self.unravel(flat);
        let w = [self.weights(0), self.weights(1), self.weights(2)];
        idx.iter().enumerate().map(|(a, i)| w[self.axis_kind(a)][*i]).product()
    }

    /// All quadrature weights in flat order.
    pub fn all_weights(&self) -> Vec<f64> {
        let w = [self.weights(0), self.weights(1), self.weights(2)];
        (0..self.len())
            .map(|f| {
                let idx = self.unravel(f);
                idx.iter().enumerate().map(|(a, i)| w[self.axis_kind(a)][*i]).product()
            })
            .collect()
    }
}

/// Left-invariant vector fields of `H^d` (indices are 0-based).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VectorField {
    /// `X_j = ∂_{x_j} + 2 y_j ∂_s`
    X(usize),
    /// `Y_j = ∂_{y_j} − 2 x_j ∂_s`
    Y(usize),
    /// `Z_j = ½(X_j − i Y_j)`
    Z(usize),
    /// `Z̄_j = ½(X_j + i Y_j)`
    Zbar(usize),
    /// `S = ∂_s`
    S,
}

/// Complex samples on a [`Grid`] plus a trust mask.
///
/// `mask[i]` is false where a finite-difference stencil touched a one-sided
/// boundary closure; such cells carry lower-order truncation error.
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    /// The sampling grid.
    pub grid: Grid,
    /// Samples in flat row-major order.
    pub samples: Vec<Complex64>,
    /// Boundary-contamination mask (true = interior accuracy).
    pub mask: Vec<bool>,
}

impl GridFunction {
    /// Wraps samples, checking the shape.
    pub fn new(grid: Grid, samples: Vec<Complex64>) -> Result<Self> {
        if samples.len() != grid.len() {
            return Err(Error::Incompatible(format!(
                "sample count {} does not match grid size {}",
                samples.len(),
                grid.len()
            )));
        }
        let n = samples.len();
        Ok(Self { grid, samples, mask: vec![true; n] })
    }

    /// Zero function.
    pub fn zeros(grid: &Grid) -> Self {
        let n = grid.len();
        Self { grid: grid.clone(), samples: vec![Complex64::new(0.0, 0.0); n], mask: vec![true; n] }
    }

    /// Samples `f` at every grid point.
    pub fn from_fn<F>(grid: &Grid, f: F) -> Self
    where
        F: Fn(&HeisenbergPoint) -> Complex64 + Sync,
    {
        let samples = (0..grid.len()).into_par_iter().map(|i| f(&grid.point(i))).collect::<Vec<_>>();
        let n = samples.len();
        Self { grid: grid.clone(), samples, mask: vec![true; n] }
    }

    /// Pointwise map.
    pub fn map<F: Fn(Complex64) -> Complex64>(&self, f: F) -> Self {
        Self {
            grid: self.grid.clone(),
            samples: self.samples.iter().map(|v| f(*v)).collect(),
            mask: self.mask.clone(),
        }
    }

    /// Pointwise combination with another function on the same grid.
    pub fn zip_with<F: Fn(Complex64, Complex64) -> Complex64>(&self, other: &Self, f: F) -> Result<Self> {
        if self.grid != other.grid {
            return Err(Error::Incompatible("grids differ".into()));
        }
        Ok(Self {
            grid: self.grid.clone(),
            samples: self.samples.iter().zip(&other.samples).map(|(a, b)| f(*a, *b)).collect(),
            mask: self.mask.iter().zip(&other.mask).map(|(a, b)| *a && *b).collect(),
        })
    }

    /// `self + other`.
    pub fn add(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a + b)
    }

    /// `self − other`.
    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a - b)
    }

    /// Pointwise product.
    pub fn mul(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a * b)
    }

    /// Scalar multiple.
    pub fn scale(&self, c: Complex64) -> Self {
        self.map(|v| v * c)
    }

    /// Haar integral by composite Simpson quadrature.
    pub fn integral(&self) -> Complex64 {
        let w = self.grid.all_weights();
        self.samples.iter().zip(&w).map(|(v, w)| v * w).sum()
    }

    /// `L²` inner product `∫ f ḡ`.
    pub fn inner(&self, other: &Self) -> Result<Complex64> {
        if self.grid != other.grid {
            return Err(Error::Incompatible("grids differ".into()));
        }
        let w = self.grid.all_weights();
        Ok(self.samples.iter().zip(&other.samples).zip(&w).map(|((a, b), w)| a * b.conj() * w).sum())
    }

    /// `L^q` norm by quadrature (`q = ∞` is the grid maximum).
    pub fn lq_norm(&self, q: f64) -> f64 {
        if q.is_infinite() {
            return self.sup_norm();
        }
        let w = self.grid.all_weights();
        let s: f64 = self.samples.iter().zip(&w).map(|(v, w)| w * v.norm().powf(q)).sum();
        s.max(0.0).powf(1.0 / q)
    }

    /// `L²` norm.
    pub fn l2_norm(&self) -> f64 {
        self.lq_norm(2.0)
    }

    /// Grid maximum of `|f|`.
    pub fn sup_norm(&self) -> f64 {
        self.samples.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// Multilinear interpolation at an arbitrary point; zero outside the box.
    pub fn interpolate(&self, w: &HeisenbergPoint) -> Complex64 {
        let g = &self.grid;
        let n_axes = g.n_axes();
        let strides = g.strides();
        let mut base = 0usize;
        let mut fracs = Vec::with_capacity(n_axes);
        let mut steps = Vec::with_capacity(n_axes);
        for a in 0..n_axes {
            let kind = g.axis_kind(a);
            let coord = match kind {
                0 => w.x[a],
                1 => w.y[a - g.d],
                _ => w.s,
            };
            let l = g.half_widths[kind];
            let h = g.spacing(kind);
            let n = g.points[kind];
            let u = (coord + l) / h;
            if !(u >= -1e-12) || u > (n - 1) as f64 + 1e-12 {
                return Complex64::new(0.0, 0.0);
            }
            let mut i = u.floor() as isize;
            i = i.clamp(0, n as isize - 2);
            let t = (u - i as f64).clamp(0.0, 1.0);
            base += i as usize * strides[a];
            fracs.push(t);
            steps.push(strides[a]);
        }
        let mut acc = Complex64::new(0.0, 0.0);
        for corner in 0..(1usize << n_axes) {
            let mut wgt = 1.0;
            let mut off = 0;
            for a in 0..n_axes {
                if corner >> a & 1 == 1 {
                    wgt *= fracs[a];
                    off += steps[a];
                } else {
                    wgt *= 1.0 - fracs[a];
                }
            }
            if wgt != 0.0 {
                acc += self.samples[base + off] * wgt;
            }
        }
        acc
    }

    /// Left translate `w ↦ f(h · w)` resampled on the same grid by interpolation.
    pub fn left_translate(&self, h: &HeisenbergPoint) -> Self {
        let g = self.grid.clone();
        GridFunction::from_fn(&g, |w| self.interpolate(&h.mul(w)))
    }

    /// Fourth-order derivative along one axis with boundary closures.
    fn axis_derivative(&self, axis: usize) -> Result<Self> {
        let g = &self.grid;
        let kind = g.axis_kind(axis);
        let n = g.points[kind];
        if n < 5 {
            return Err(Error::UnderResolved(format!("axis {axis} has {n} < 5 points")));
        }
        let h = g.spacing(kind);
        let stride = g.strides()[axis];
        let f = &self.samples;
        let c = 1.0 / (12.0 * h);
        let mut out = vec![Complex64::new(0.0, 0.0); f.len()];
        let mut mask = self.mask.clone();
        for flat in 0..f.len() {
            let i = (flat / stride) % n;
            let at = |k: isize| f[(flat as isize + k * stride as isize) as usize];
            let v = if i >= 2 && i + 2 < n {
                at(-2) - at(-1) * 8.0 + at(1) * 8.0 - at(2)
            } else if i == 0 {
                at(0) * -25.0 + at(1) * 48.0 - at(2) * 36.0 + at(3) * 16.0 - at(4) * 3.0
            } else if i == 1 {
                at(-1) * -3.0 - at(0) * 10.0 + at(1) * 18.0 - at(2) * 6.0 + at(3)
            } else if i == n - 2 {
                -(at(1) * -3.0 - at(0) * 10.0 + at(-1) * 18.0 - at(-2) * 6.0 + at(-3))
            } else {
                -(at(0) * -25.0 + at(-1) * 48.0 - at(-2) * 36.0 + at(-3) * 16.0 - at(-4) * 3.0)
            };
            out[flat] = v * c;
            if i < 2 || i + 2 >= n {
                mask[flat] = false;
            }
        }
        Ok(Self { grid: g.clone(), samples: out, mask })
    }

    /// Coordinate function samples for an axis.
    fn coordinate(&self, axis: usize) -> Vec<f64> {
        let g = &self.grid;
        let kind = g.axis_kind(axis);
        let coords = g.coords(kind);
        let stride = g.strides()[axis];
        let n = g.points[kind];
        (0..g.len()).map(|f| coords[(f / stride) % n]).collect()
    }
}

/// Haar integral of a sampled function.
pub fn haar_integral(f: &GridFunction) -> Complex64 {
    f.integral()
}

/// Group convolution `f ⋆ g(w) = ∫ f(w · v⁻¹) g(v) dv`.
///
/// The output lives on the grid of `f`; `v` runs over the grid of `g`, and `f`
/// is evaluated off-grid by multilinear interpolation (zero outside its box).
pub fn convolve(f: &GridFunction, g: &GridFunction) -> Result<GridFunction> {
    if f.grid.d != g.grid.d {
        return Err(Error::Incompatible("convolution factors live on different H^d".into()));
    }
    let gw = g.grid.all_weights();
    let inner: Vec<(HeisenbergPoint, Complex64)> = (0..g.grid.len())
        .filter(|&i| g.samples[i] != Complex64::new(0.0, 0.0))
        .map(|i| (g.grid.point(i).inv(), g.samples[i] * gw[i]))
        .collect();
    let out = (0..f.grid.len())
        .into_par_iter()
        .map(|o| {
            let w = f.grid.point(o);
            inner.iter().map(|(vinv, gv)| f.interpolate(&w.mul(vinv)) * gv).sum()
        })
        .collect();
    GridFunction::new(f.grid.clone(), out)
}

/// Applies a left-invariant vector field with fourth-order finite differences.
pub fn apply_vector_field(field: VectorField, f: &GridFunction) -> Result<GridFunction> {
    let d = f.grid.d;
    let check = |j: usize| {
        if j >= d {
            Err(Error::InvalidInput(format!("field index {j} out of range for d = {d}")))
        } else {
            Ok(())
        }
    };
    let i = Complex64::new(0.0, 1.0);
    match field {
        VectorField::S => f.axis_derivative(2 * d),
        VectorField::X(j) => {
            check(j)?;
            let dx = f.axis_derivative(j)?;
            let ds = f.axis_derivative(2 * d)?;
            let y = f.coordinate(d + j);
            let mut out = dx.zip_with(&ds, |a, _| a)?;
            for k in 0..out.samples.len() {
                out.samples[k] = dx.samples[k] + ds.samples[k] * (2.0 * y[k]);
            }
            Ok(out)
        }
        VectorField::Y(j) => {
            check(j)?;
            let dy = f.axis_derivative(d + j)?;
            let ds = f.axis_derivative(2 * d)?;
            let x = f.coordinate(j);
            let mut out = dy.zip_with(&ds, |a, _| a)?;
            for k in 0..out.samples.len() {
                out.samples[k] = dy.samples[k] - ds.samples[k] * (2.0 * x[k]);
            }
            Ok(out)
        }
        VectorField::Z(j) => {
            let xf = apply_vector_field(VectorField::X(j), f)?;
            let yf = apply_vector_field(VectorField::Y(j), f)?;
            xf.zip_with(&yf, |a, b| (a - i * b) * 0.5)
        }
        VectorField::Zbar(j) => {
            let xf = apply_vector_field(VectorField::X(j), f)?;
            let yf = apply_vector_field(VectorField::Y(j), f)?;
            xf.zip_with(&yf, |a, b| (a + i * b) * 0.5)
        }
    }
}

/// Laplacian-Kohn operator `Δ_{H^d} f = Σ_j (X_j² + Y_j²) f`.
pub fn kohn_laplacian(f: &GridFunction) -> Result<GridFunction> {
    let mut acc = GridFunction::zeros(&f.grid);
    for j in 0..f.grid.d {
        let xx = apply_vector_field(VectorField::X(j), &apply_vector_field(VectorField::X(j), f)?)?;
        let yy = apply_vector_field(VectorField::Y(j), &apply_vector_field(VectorField::Y(j), f)?)?;
        acc = acc.add(&xx)?.add(&yy)?;
    }
    Ok(acc)
}

/// Integer Sobolev norm `(Σ_{|α| ≤ k} ‖X^α u‖²_{L²})^{1/2}` where `X^α` runs over
/// all words of length `≤ k` in the fields `X_1..X_d, Y_1..Y_d`.
pub fn sobolev_norm_int(f: &GridFunction, k: usize) -> Result<f64> {
    let min_pts = f.grid.points.iter().copied().min().unwrap_or(0);
    if k > 0 && (k > 6 || min_pts < 4 * k + 1) {
        return Err(Error::UnderResolved(format!(
            "order {k} needs at least {} points per axis (have {min_pts}) and k ≤ 6",
            4 * k + 1
        )));
    }
    let d = f.grid.d;
    let fields: Vec<VectorField> = (0..d).map(VectorField::X).chain((0..d).map(VectorField::Y)).collect();
    let mut level = vec![f.clone()];
    let mut total = f.l2_norm().powi(2);
    for _ in 0..k {
        let mut next = Vec::with_capacity(level.len() * fields.len());
        for g in &level {
            for fld in &fields {
                next.push(apply_vector_field(*fld, g)?);
            }
        }
        total += next.iter().map(|g| g.l2_norm().powi(2)).sum::<f64>();
        level = next;
    }
    Ok(total.sqrt())
}

const MAGIC: &[u8; 4] = b"HGF1";

impl GridFunction {
    /// Binary layout (all little-endian): magic `HGF1`, `u32 d`,
    /// `3 × f64` half widths, `3 × u64` points per axis kind, then
    /// `(re, im)` pairs of `f64` in row-major order over `(x, y, s)`.
    pub fn write_binary<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(MAGIC)?;
        w.write_all(&(self.grid.d as u32).to_le_bytes())?;
        for l in self.grid.half_widths {
            w.write_all(&l.to_le_bytes())?;
        }
        for n in self.grid.points {
            w.write_all(&(n as u64).to_le_bytes())?;
        }
        for v in &self.samples {
            w.write_all(&v.re.to_le_bytes())?;
            w.write_all(&v.im.to_le_bytes())?;
        }
        Ok(())
    }

    /// Inverse of [`GridFunction::write_binary`].
    pub fn read_binary<R: Read>(mut r: R) -> Result<Self> {
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic)?;
        if &magic != MAGIC {
            return Err(Error::Serialization("bad magic".into()));
        }
        let mut b4 = [0u8; 4];
        let mut b8 = [0u8; 8];
        r.read_exact(&mut b4)?;
        let d = u32::from_le_bytes(b4) as usize;
        let mut half_widths = [0.0; 3];
        for l in half_widths.iter_mut() {
            r.read_exact(&mut b8)?;
            *l = f64::from_le_bytes(b8);
        }
        let mut points = [0usize; 3];
        for n in points.iter_mut() {
            r.read_exact(&mut b8)?;
            *n = u64::from_le_bytes(b8) as usize;
        }
        let grid = Grid::new(d, half_widths, points)?;
        let mut samples = Vec::with_capacity(grid.len());
        for _ in 0..grid.len() {
            r.read_exact(&mut b8)?;
            let re = f64::from_le_bytes(b8);
            r.read_exact(&mut b8)?;
            let im = f64::from_le_bytes(b8);
            samples.push(Complex64::new(re, im));
        }
        GridFunction::new(grid, samples)
    }

    /// CSV layout: three `#` header lines (`d`, half widths, points), a column
    /// header, then one row per sample `x_1..x_d, y_1..y_d, s, re, im`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        let g = &self.grid;
        writeln!(w, "# d={}", g.d)?;
        writeln!(w, "# half_widths={},{},{}", g.half_widths[0], g.half_widths[1], g.half_widths[2])?;
        writeln!(w, "# points={},{},{}", g.points[0], g.points[1], g.points[2])?;
        let mut cols: Vec<String> = (1..=g.d).map(|j| format!("x{j}")).collect();
        cols.extend((1..=g.d).map(|j| format!("y{j}")));
        cols.extend(["s".to_string(), "re".to_string(), "im".to_string()]);
        writeln!(w, "{}", cols.join(","))?;
        for (i, v) in self.samples.iter().enumerate() {
            let p = g.point(i);
            let mut row: Vec<String> = p.x.iter().chain(&p.y).map(|c| format!("{c:.17e}")).collect();
            row.push(format!("{:.17e}", p.s));
            row.push(format!("{:.17e}", v.re));
            row.push(format!("{:.17e}", v.im));
            writeln!(w, "{}", row.join(","))?;
        }
        Ok(())
    }
}
