use serde::{Deserialize, Serialize};

/// Thresholds shared by the criterion, the root oracle and the parameter scans.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TolerancePolicy {
    /// Determinant sign threshold relative to `max(1, scale)`.
    pub det_rel: f64,
    /// Half-width of the band around `alpha*pi/2` treated as the critical line.
    pub arg: f64,
    /// Roots with smaller modulus are reported as zero roots.
    pub zero: f64,
    /// Gradient threshold relative to the Hadamard bound of the full matrix.
    pub gradient_rel: f64,
    /// Eigenvalue threshold relative to the Hessian norm.
    pub hessian_rel: f64,
}

impl Default for TolerancePolicy {
    fn default() -> Self {
        Self {
            det_rel: 1e-9,
            arg: 1e-7,
            zero: 1e-10,
            gradient_rel: 1e-6,
            hessian_rel: 1e-5,
        }
    }
}

impl TolerancePolicy {
    /// Mixed absolute/relative threshold for a determinant with the given scale.
    pub fn det_threshold(&self, scale: f64) -> f64 {
        self.det_rel * scale.max(1.0)
    }
}
