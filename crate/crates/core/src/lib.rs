//! Numerics for time-frequency localization of orthonormal sequences in
//! L²(ℝᵈ), d ∈ {1, 2}: uniform grids with a unitary Fourier transform, the
//! classical moment functionals, Hermite systems, time- and band-limiting
//! operators, and explicit orthonormal-basis constructions.

pub mod error;
pub mod grid;
pub mod numeric;

pub use error::{Error, Result};
pub use grid::{
    fourier_transform, gram_deviation, gram_matrix, inner_product, inverse_fourier_transform,
    modulate, affine_scale, affine_scale_analytic, Analytic, Axis, Domain, GridSpec, Mask,
    Normalization, OrthonormalSystem, SampledFunction, GRAM_TOLERANCE,
};
pub use num_complex::Complex64;

pub mod basis;
pub mod functionals;
pub mod hermite;
pub mod localization;
pub mod report;

pub use report::{AuditReport, Comparison, Scalar, Table};
