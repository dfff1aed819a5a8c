//! Optimal liquidation thresholds for a firm whose value follows
//! V = v·e^X with X a Lévy process, and a Monte Carlo oracle that checks
//! them.
//!
//! The problem is sup_τ E[∫_0^τ e^{−rs}(αV_s − c) ds]. Its solution is a
//! threshold rule: liquidate the first time V falls to B_c.
//!
//! ```
//! use levystop_core::{threshold, LevyModel, ProblemSpec};
//!
//! let spec = ProblemSpec::new(LevyModel::BrownianDrift { m: 0.0, sigma: 1.0 }, 1.0, 1.0, 1.0, 1.0)?;
//! let th = threshold(&spec)?;
//! assert!((th.b_c - 0.5 * 2f64.sqrt() / (2f64.sqrt() + 1.0)).abs() < 1e-14);
//! # Ok::<(), levystop_core::Error>(())
//! ```

pub mod error;
pub mod model;
pub mod roots;
pub mod scale;
pub mod sim;
pub mod threshold;
pub mod transforms;

pub use error::{Error, Result};
pub use model::{check_assumptions, phi, psi, psi1, AssumptionReport, Family, LevyModel, ProblemInput, ProblemSpec};
pub use roots::{class_d_closed_form, drifted_up_roots, emery_root, kou_roots, EmeryRoot, KouRoots};
pub use scale::{ScaleConfig, ScaleFunction};
pub use sim::{
    class_d_diagnostic, epsilon_stop_paths, policy_value, sample_increments, simulate_hit, simulate_hit_levels,
    sweep, EpsilonRun, McEstimate, PolicyValue, SimConfig, SweepResult,
};
pub use threshold::{
    convexity_report, epsilon_region, threshold, threshold_with, value_function, ConvexityPolicy,
    ConvexityReport, EpsilonBoundary, Regime, ThresholdOptions, ThresholdResult, ValueFunction,
};
pub use transforms::{g_dv, g_value, HittingTransforms};
