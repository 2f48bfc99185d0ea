//! Interventional mediation analysis for longitudinal panels: synthetic
//! cohorts, neighborhood disadvantage scores, stabilized inverse probability
//! weights, marginal structural models, exact discrete oracles and simulated
//! unmeasured confounding.
//!
//! The numerical kernels (`linalg`, `glm`, the PCA in `geo` and the effect
//! calculus) are generic over [`scalar::Real`]; the aliases below fix them to
//! `f64` or `f32`.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
// Matrix kernels index several arrays with one row counter.
#![allow(clippy::needless_range_loop)]

pub mod effects;
pub mod geo;
pub mod glm;
pub mod linalg;
pub mod oracle;
pub mod panel;
pub mod scalar;
pub mod sensitivity;
pub mod synthdata;
pub mod weights;

pub use scalar::Real;

pub type Matrix64 = linalg::Matrix<f64>;
pub type Matrix32 = linalg::Matrix<f32>;
pub type DesignMatrix64 = glm::DesignMatrix<f64>;
pub type DesignMatrix32 = glm::DesignMatrix<f32>;
pub type GlmFit64 = glm::GlmFit<f64>;
pub type GlmFit32 = glm::GlmFit<f32>;
pub type InterventionalEffects64 = effects::InterventionalEffects<f64>;
pub type InterventionalEffects32 = effects::InterventionalEffects<f32>;
pub type DisadvantageScores64 = geo::DisadvantageScores<f64>;
pub type DisadvantageScores32 = geo::DisadvantageScores<f32>;
