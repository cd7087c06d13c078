//! Orthonormal-basis constructions built from a smooth bump Ψ.

mod bump;
mod completion;
mod families;

pub use bump::{
    autocorrelation, block_size, build_bump, enumeration, half_integer_frequencies, psi_block, AtomKind, Bump,
    BumpSpec, PsiAtom, AUTOCORRELATION_TOLERANCE,
};
pub use completion::{
    block_coefficients, bourgain_step, build_even_family, complete_basis_case_i, complete_basis_case_ii,
    completeness_audit, mirror_asymmetry, AdaptiveStep, Admission, Certificate, CompletionConfig, CompletionState,
    MemberRecord, StepRecord, CERTIFICATE_FLOOR, CERTIFICATE_SLACK, ZERO_RESIDUAL,
};
pub use families::{
    bump_power_integral, covariance_laws_check, derivative_bound_audit, derivative_bound_check, derivative_constant,
    derivative_ratio, dyadic_example, dyadic_moments, homogeneous_family, psi_family, spectral_derivative,
    standard_bump, AnnulusBump, Probe, ProbeFamily, ProductBump,
};
