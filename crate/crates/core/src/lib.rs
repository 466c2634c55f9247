//! Passage times of Lévy processes across power-law boundaries `r·t^b`.
//!
//! * [`model`]: triplets `(γ, σ², Π)` and the functionals `A`, `ν`, `U`, `V`, `Ψ`.
//! * [`stability`]: relative-stability classification, norming functions `B`, `C`.
//! * [`pathsim`]: exact event-driven path sampling and first-passage detection.
//! * [`estimators`]: Monte-Carlo experiments over grids of boundary levels.
//! * [`oracles`]: closed-form and enumerated reference values.

// NaN-rejecting checks are written as negated comparisons.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod estimators;
pub mod model;
pub mod oracles;
pub mod pathsim;
pub mod quad;
pub mod rng;
pub mod roots;
pub mod stability;

pub use error::{Error, Result};
pub use model::{parse_model_spec, JumpMeasure, LevyModel, ModelSpec, Side, TailTable};
