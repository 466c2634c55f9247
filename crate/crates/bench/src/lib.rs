//! Fixtures shared by the criterion benches.

use levy_passage::{JumpMeasure, LevyModel};

/// `X_t = t − N_t`.
pub fn poisson_drift() -> LevyModel {
    LevyModel::poisson_drift(1.0).expect("valid model")
}

/// Unit drift plus rate-one exponential upward jumps.
pub fn exponential_jumps() -> LevyModel {
    LevyModel::with_drift(1.0, JumpMeasure::exponential_plus(1.0, 1.0)).expect("valid model")
}

/// Infinite-activity example; needs a positive cutoff to simulate.
pub fn log_squared() -> LevyModel {
    LevyModel::new(1.0, 0.0, JumpMeasure::LogSquared).expect("valid model")
}
