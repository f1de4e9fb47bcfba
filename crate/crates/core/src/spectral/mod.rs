//! Periodic grids, FFTs, Fourier-multiplier operators and norms on `[0, 2π)³`.

pub mod fft;
pub mod field;
pub mod grid;
pub mod norms;
pub mod ops;
pub mod snapshot;

pub use field::{Direction, Representation, ScalarField, VectorField};
pub use grid::GridSpec;
pub use norms::{
    dissipation, interp_ratio, lp_norm, vector_dissipation, vector_lp_norm, NormMode,
};
pub use ops::{dealias, dealias_vector, divergence, gradient, laplacian, leray_project, mean_zero};
pub use snapshot::{read_snapshot, write_snapshot};
