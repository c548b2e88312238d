//! Shared fixtures for unit tests.

use crate::model::ModelParams;

/// Calibrated ACC "minimum following setting" parameters.
pub(crate) fn min_setting() -> ModelParams {
    ModelParams::new(0.0782, 0.4445, 0.5162, 8.3365).unwrap()
}

/// Calibrated ACC "maximum following setting" parameters.
pub(crate) fn max_setting() -> ModelParams {
    ModelParams::new(0.0131, 0.2692, 1.6881, 7.5699).unwrap()
}
