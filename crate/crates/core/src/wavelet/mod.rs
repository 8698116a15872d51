//! Biorthogonal spline wavelets and the divergence-free wavelet transform.

pub mod divfree;
pub mod filters;
pub mod fwt;

pub use divfree::{analytic_curl, dfw_analyze, dfw_synthesize, Branch, DfwCoeffs, DivFreeBasis};
pub use filters::{derive_differentiated_family, FamilyChain, FilterBank, Laurent};
