//! Numerical tolerances. Every threshold used by a check in this crate lives here.

/// State normalization, unitarity, hermiticity, basis completeness.
pub const NORM: f64 = 1e-12;
/// Smallest admissible eigenvalue of a density matrix is `-PSD`.
pub const PSD: f64 = 1e-10;
/// Outcome probabilities must sum to one within this.
pub const PROBABILITY_SUM: f64 = 1e-10;
/// Payoff operator spectrum vs payoff entries.
pub const SPECTRUM: f64 = 1e-9;
/// Closed-form payoff expressions vs the trace oracle.
pub const CLOSED_FORM: f64 = 1e-9;
/// Payoff identities that hold by exact algebra (symmetry map, phase invariance).
pub const EXACT: f64 = 1e-10;
/// Projective comparison of payoff ratio triples.
pub const RATIO: f64 = 1e-9;
/// Matching a measured payoff triple against the matrix.
pub const IDENTIFY: f64 = 1e-6;
/// Raw denominators below this make a recovery singular.
pub const SINGULAR: f64 = 1e-9;
/// Default margin that scenario generators keep denominators above.
pub const SAFETY_MARGIN: f64 = 1e-3;
/// Clamp slack for recovered strategies and round-trip agreement.
pub const RECOVERY: f64 = 1e-6;
/// Slack on angle range checks, so that `FRAC_PI_2` etc. are accepted.
pub const ANGLE: f64 = 1e-12;
/// Equality of payoff entries when classifying symmetry cases.
pub const MATRIX_EQUALITY: f64 = 1e-12;
/// Certificate that a payoff does not depend on the tap probability.
pub const P_INDEPENDENCE: f64 = 1e-10;
/// Exact-mode tap detection threshold on payoff deviations.
pub const DETECTION_EXACT: f64 = 1e-9;
/// Default number of standard errors for sampled-mode detection.
pub const DETECTION_SIGMAS: f64 = 4.0;
