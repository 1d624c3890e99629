//! Super-robust transformation estimation.
//!
//! This crate fits a transformation (translation, uniform or per-axis
//! scaling, planar rotation) to input/output observation pairs by minimizing
//! a sum of *sub-linear* residual penalties `|O - T(I)|^p` with `p < 1`.
//! Unlike least squares, these objectives reward exact fits so strongly that
//! the true transform remains the global minimizer with up to half the data
//! arbitrarily corrupted, and, for small `p`, with far more than half under
//! random noise. The crate provides:
//!
//! * the penalty families ([`objective`]): sub-linear power, consistency
//!   counting, and the piecewise super-robust family;
//! * candidate-enumeration estimators with consensus and exponent-annealing
//!   drivers ([`estimator`]);
//! * the closed-form robustness-bound calculus: concentration exponents,
//!   near/far-group bounds, and sufficient inlier ratios ([`bounds`]);
//! * a deterministic Monte Carlo harness reproducing the analytic bound
//!   tables empirically ([`sim`]).

pub mod bounds;
pub mod error;
pub mod estimator;
pub mod objective;
pub mod sim;
pub mod transform;

pub use bounds::{
    breakdown_ratio, min_confidence_exponent, min_confidence_exponent_exact,
    order_stat_confidence, tfg_bound_general, tfg_bound_uniform, tsg_bound_general,
    tsg_bound_uniform, tsg_max_uniform, tsg_maximizer_uniform, BoundParams,
};
pub use error::{Error, Result};
pub use estimator::{
    anneal_p, candidate_transforms, estimate, estimate_l0, pos, AnnealResult, AnnealSchedule,
    EstimateConfig, EstimationResult, RefineConfig, RefinePolicy,
};
pub use objective::{objective_value, PenaltyFamily};
pub use sim::{
    breakdown_profile, generate_experiment, order_stat_check, run_trial, split_seed, NoiseModel,
    ProfileCell, RobustnessProfile, ScenarioConfig, TrialRecord,
};
pub use transform::{
    Experiment, ObservationPair, Point, Transform, TransformGroup, Truth, CONSISTENCY_TOL,
};
