//! Phase-space analysis on the Heisenberg group `H^d`.

pub mod bump;
pub mod error;
pub mod fock;
pub mod fourier;
pub mod group;
pub mod hermite;
pub mod hpdo;
pub mod laguerre;
pub mod lp;
pub mod quadrature;
pub mod weyl;

pub use error::{Error, Result};
pub use fock::{CMatrix, OperatorMatrix, TruncatedBasis};
pub use fourier::{LambdaGrid, RadialSpectral, SpectralFunction, SpectralOp};
pub use hpdo::{Builtin, HKernel, HeisenbergSymbol};
pub use lp::{BandLimited, BesovIndex, BesovNorm, DyadicPartition, RingProfile};
pub use group::{Grid, GridFunction, HeisenbergPoint, VectorField};
pub use weyl::{PhaseSymbol, Poly2, SpectralProfileR, WeylGrid, WeylKernel};
