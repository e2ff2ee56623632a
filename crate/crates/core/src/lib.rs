//! Fundamental tensors, spacetime conditions and Killing-vector checks for
//! `(α, β)`-metrics `L = A·Ψ(B²/A)` on pseudo-Riemannian manifolds.
//!
//! The numerical core is generic over [`scalar::Real`]; the aliases below fix it to `f64`.

// `!(x > tol)` is used on purpose so that NaN fails the test.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod config;
pub mod dual;
pub mod error;
pub mod expr;
pub mod fixtures;
pub mod geometry;
pub mod isometry;
pub mod linalg;
pub mod psi;
pub mod run;
pub mod scalar;
pub mod selftest;
pub mod tensor;
pub mod verifier;

pub use config::{parse_config, RunConfig};
pub use error::{Error, Result};
pub use expr::Expr;
pub use geometry::{b_norm, eval_scalars, raise_index, s_lower_bound, MetricField, OneFormField};
pub use isometry::{build_symmetry_psi, is_trivial_symmetry, killing_residual, nontrivial_condition_check};
pub use psi::{psi_eval, sigma_eval, spacetime_s_domain, SDomain};
pub use scalar::Real;
pub use tensor::{
    det_g_closed, fundamental_tensor_closed, fundamental_tensor_numeric, inverse_g_closed, rank_one_update_det, rank_one_update_inv,
    rank_two_update_det, rank_two_update_inv, signature,
};
pub use verifier::{check_conditions_at, classify_spec, cone_membership, verify_by_sampling, ConeSampleConfig, VerificationReport};

pub type Matrix = linalg::Matrix<f64>;
pub type HyperDual = dual::HyperDual<f64>;
pub type PsiSpec = psi::PsiSpec<f64>;
pub type PsiEval = psi::PsiEval<f64>;
pub type LocalFrame = geometry::LocalFrame<f64>;
pub type SpacetimePoint = geometry::SpacetimePoint<f64>;
pub type TangentVector = geometry::TangentVector<f64>;
pub type AlphaBetaScalars = geometry::AlphaBetaScalars<f64>;
pub type FundamentalTensor = tensor::FundamentalTensor<f64>;
pub type SignatureResult = tensor::SignatureResult<f64>;
pub type VectorField = isometry::VectorField<f64>;
