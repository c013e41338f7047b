use serde::{Deserialize, Serialize};

/// Identifiers used in scenario files and JSON reports.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum TheoremId {
    #[serde(rename = "dual_first_order")]
    DualFirstOrder,
    #[serde(rename = "thm_2_1")]
    DualTransform,
    #[serde(rename = "thm_2_2")]
    HessianForm,
    #[serde(rename = "prop_2_3")]
    AlphaMinusOne,
    #[serde(rename = "prop_2_4")]
    QuadraticDuality,
    #[serde(rename = "prop_2_5")]
    VanishingPotential,
    #[serde(rename = "j_function")]
    TotalLegendre,
    #[serde(rename = "toda_dual")]
    TodaDual,
    #[serde(rename = "tau")]
    Tau,
    #[serde(rename = "lc_3_1")]
    CircuitDualTransform,
    #[serde(rename = "lc_3_2")]
    CircuitHessianForm,
}

impl TheoremId {
    pub fn as_str(self) -> &'static str {
        match self {
            TheoremId::DualFirstOrder => "dual_first_order",
            TheoremId::DualTransform => "thm_2_1",
            TheoremId::HessianForm => "thm_2_2",
            TheoremId::AlphaMinusOne => "prop_2_3",
            TheoremId::QuadraticDuality => "prop_2_4",
            TheoremId::VanishingPotential => "prop_2_5",
            TheoremId::TotalLegendre => "j_function",
            TheoremId::TodaDual => "toda_dual",
            TheoremId::Tau => "tau",
            TheoremId::CircuitDualTransform => "lc_3_1",
            TheoremId::CircuitHessianForm => "lc_3_2",
        }
    }
}

impl std::fmt::Display for TheoremId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Multiplier `c` in the default tolerance `c * dt^2 * scale`.
pub const DEFAULT_TOLERANCE_FACTOR: f64 = 50.0;

/// `50 dt^2 scale`, with `scale` the largest magnitude of the checked
/// equation's left side.
pub fn default_tolerance(dt: f64, scale: f64) -> f64 {
    DEFAULT_TOLERANCE_FACTOR * dt * dt * scale.max(f64::MIN_POSITIVE)
}

/// Residual statistics of one identity along a trajectory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub theorem_id: TheoremId,
    pub max_residual: f64,
    pub mean_residual: f64,
    pub tolerance: f64,
    pub passed: bool,
    pub notes: String,
}

impl VerificationReport {
    pub fn from_residuals(
        theorem_id: TheoremId,
        residuals: &[f64],
        tolerance: f64,
        notes: impl Into<String>,
    ) -> Self {
        let max_residual = residuals.iter().fold(0.0_f64, |m, r| m.max(r.abs()));
        let mean_residual = if residuals.is_empty() {
            0.0
        } else {
            residuals.iter().map(|r| r.abs()).sum::<f64>() / residuals.len() as f64
        };
        VerificationReport {
            theorem_id,
            max_residual,
            mean_residual,
            tolerance,
            passed: max_residual <= tolerance,
            notes: notes.into(),
        }
    }

    pub fn with_tolerance(mut self, tolerance: f64) -> Self {
        self.tolerance = tolerance;
        self.passed = self.max_residual <= tolerance;
        self
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pass_iff_within_tolerance() {
        let r = VerificationReport::from_residuals(TheoremId::Tau, &[1e-3, -2e-3], 2e-3, "");
        assert!(r.passed);
        assert_eq!(r.mean_residual, 1.5e-3);
        assert!(!r.with_tolerance(1e-3).passed);
    }

    #[test]
    fn ids_serialize_to_interface_names() {
        let s = serde_json::to_string(&TheoremId::DualTransform).unwrap();
        assert_eq!(s, "\"thm_2_1\"");
        let id: TheoremId = serde_json::from_str("\"lc_3_2\"").unwrap();
        assert_eq!(id, TheoremId::CircuitHessianForm);
        assert_eq!(id.as_str(), "lc_3_2");
    }
}
