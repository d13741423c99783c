//! Contrastive losses over dense feature maps with analytic gradients.
//!
//! All three losses share one InfoNCE kernel: each anchor is scored against
//! its positive and against the negatives of every other row in the batch,
//! with the positive kept in the denominator. Loss values are means over
//! rows. Gradients are with respect to the (already normalised) inputs.

mod features;
mod losses;
mod nce;

pub use features::{aggregate, normalize, Aggregator, FeatureMap, PointFeatures, SetKey, NORM_EPSILON};
pub use losses::{pixel_infonce, pixel_infonce_multi, pixel_point_infonce, set_infonce, LossOutput, ViewLossOutput};

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Softmax temperature, strictly positive.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct Temperature(f64);

impl Temperature {
    pub fn new(tau: f64) -> Result<Self> {
        if tau > 0.0 && tau.is_finite() {
            Ok(Temperature(tau))
        } else {
            Err(Error::invalid(format!("temperature must be positive, got {tau}")))
        }
    }

    pub fn get(self) -> f64 {
        self.0
    }
}

impl Default for Temperature {
    fn default() -> Self {
        Temperature(0.07)
    }
}

impl TryFrom<f64> for Temperature {
    type Error = Error;

    fn try_from(tau: f64) -> Result<Self> {
        Temperature::new(tau)
    }
}

impl From<Temperature> for f64 {
    fn from(t: Temperature) -> f64 {
        t.0
    }
}
