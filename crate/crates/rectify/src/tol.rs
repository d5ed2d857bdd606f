//! Numerical tolerances used by checks throughout the crate.
//!
//! Every threshold a check compares against lives here so tests and the CLI
//! agree on what "exact" means.

/// Determinants, boundary identity and other algebraically exact quantities.
pub const EXACT: f64 = 1e-12;

/// Pushforward identities after composing several stages and clipping.
pub const PUSHFORWARD: f64 = 1e-9;

/// Round trip `eval_inv(eval(x)) = x`.
pub const ROUND_TRIP: f64 = 1e-9;

/// Sampled midpoint-concavity test for moduli.
pub const CONCAVITY: f64 = 1e-9;

/// Slack on Delone constants checked by scans.
pub const DELONE: f64 = 1e-9;

/// Input check that split ratios sum to one.
pub const RATIO_SUM: f64 = 1e-12;

/// Smallest abscissa used by quadrature and sampled domain checks.
pub const T_FLOOR: f64 = 9.094947017729282e-13; // 2^-40
