//! Numerics for the elastic Neumann–Poincaré operator on smooth closed surfaces.
//!
//! * [`lame`]: Kelvin matrix, conormal kernel and its split `k0·K1 − K2`.
//! * [`geometry`]: surfaces, charts, metric tensors, cutoffs.
//! * [`nystrom`]: quadrature grids and dense assembly of `K`, `T`, `S`.
//! * [`riesz`]: Fourier-multiplier Riesz transforms and the half-space operator.
//! * [`psido`]: surface Riesz transforms, principal symbols and their quantization.
//! * [`spectral`]: spectra, clustering and compactness probes.
//! * [`verify`]: check suites shared by the command-line tool and the acceptance runner.

pub mod geometry;
pub mod lame;
pub mod linalg;
pub mod nystrom;
pub mod psido;
pub mod riesz;
pub mod spectral;
pub mod verify;

pub use lame::{LameParameters, SurfacePoint};
