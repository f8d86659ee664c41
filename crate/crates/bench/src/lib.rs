//! Benchmark fixtures shared by the criterion targets.

use hphase::fourier::{gft, LambdaGrid};
use hphase::group::{Grid, GridFunction};
use num_complex::Complex64;
use hphase::SpectralFunction;

/// Gaussian `e^{−|z|²−s²}` on `[−6, 6]³` with `n` points per axis.
pub fn gaussian(n: usize) -> GridFunction {
    let grid = Grid::cube(1, 6.0, n).expect("valid grid");
    GridFunction::from_fn(&grid, |w| Complex64::new((-w.z_norm_sqr() - w.s * w.s).exp(), 0.0))
}

/// Transform of [`gaussian`] on a geometric λ-grid with `nodes` per sign.
pub fn gaussian_spectral(n: usize, nodes: usize, n_max: usize) -> SpectralFunction {
    let lg = LambdaGrid::geometric(1, nodes, 1e-3, 8.0).expect("valid λ-grid");
    gft(&gaussian(n), &lg, n_max).expect("transform")
}
