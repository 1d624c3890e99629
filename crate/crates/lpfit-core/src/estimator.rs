//! Objective minimization over a transformation group.
//!
//! The primary optimizer enumerates data-induced candidate transforms (each
//! observation pair pins down one group element) and takes the objective
//! argmin over them. For sub-linear penalties the objective is concave
//! between candidates in the one-parameter groups, so the minimizer sits at
//! a candidate; an optional shrinking-grid refinement covers the joint
//! parameter case (non-uniform scaling in dim >= 2) where per-pair
//! candidates may miss the joint minimizer.
//!
//! On top of the plain argmin sit the consensus estimator (maximize the
//! number of consistent pairs) and the annealing driver that walks a
//! decreasing exponent schedule.

use crate::error::{Error, Result};
use crate::objective::{objective_value, PenaltyFamily};
use crate::transform::{Experiment, Transform, TransformGroup, CONSISTENCY_TOL};

/// Candidate parameter vectors closer than this (sup-norm) are merged.
const CANDIDATE_MERGE_TOL: f64 = 1e-12;

/// Outcome of a single estimation run.
#[derive(Debug, Clone, PartialEq)]
pub struct EstimationResult {
    pub best: Transform,
    /// Objective value at `best` under the family used for the run.
    pub objective: f64,
    /// Pairs with residual within the consistency tolerance under `best`.
    pub pos_size: usize,
    pub candidates_evaluated: usize,
    pub refinement_steps: usize,
}

/// Shrinking-grid refinement settings.
#[derive(Debug, Clone)]
pub struct RefineConfig {
    pub initial_radius: f64,
    pub shrink: f64,
    pub iterations: usize,
}

impl Default for RefineConfig {
    fn default() -> Self {
        Self { initial_radius: 0.5, shrink: 0.5, iterations: 24 }
    }
}

/// When to run grid refinement around the best candidate.
#[derive(Debug, Clone, Default)]
pub enum RefinePolicy {
    /// Refine only where candidates may miss the joint minimizer:
    /// non-uniform scaling in dim >= 2.
    #[default]
    Auto,
    Never,
    Always(RefineConfig),
}

/// Shared estimator settings.
#[derive(Debug, Clone)]
pub struct EstimateConfig {
    pub refine: RefinePolicy,
    /// Absolute residual threshold for consensus counting.
    pub consistency_tol: f64,
    /// Relative parameter-distance threshold for "two estimates agree"
    /// (annealing stability and the consensus-match diagnostic).
    pub agreement_tol: f64,
}

impl Default for EstimateConfig {
    fn default() -> Self {
        Self { refine: RefinePolicy::Auto, consistency_tol: CONSISTENCY_TOL, agreement_tol: 1e-9 }
    }
}

/// Decreasing exponent schedule for [`anneal_p`].
#[derive(Debug, Clone)]
pub struct AnnealSchedule {
    p_values: Vec<f64>,
    stop_stable: usize,
}

impl AnnealSchedule {
    pub fn new(p_values: Vec<f64>, stop_stable: usize) -> Result<Self> {
        if p_values.is_empty() {
            return Err(Error::InvalidArgument("schedule must contain at least one p".into()));
        }
        if p_values.iter().any(|&p| !(p > 0.0 && p < 1.0)) {
            return Err(Error::InvalidArgument("schedule exponents must lie in (0, 1)".into()));
        }
        if p_values.windows(2).any(|w| w[1] >= w[0]) {
            return Err(Error::InvalidArgument("schedule must be strictly decreasing".into()));
        }
        if stop_stable == 0 {
            return Err(Error::InvalidArgument("stop_stable must be >= 1".into()));
        }
        Ok(Self { p_values, stop_stable })
    }

    pub fn p_values(&self) -> &[f64] {
        &self.p_values
    }

    pub fn stop_stable(&self) -> usize {
        self.stop_stable
    }
}

impl Default for AnnealSchedule {
    fn default() -> Self {
        Self { p_values: vec![0.9, 0.7, 0.5, 0.3, 0.2, 0.1, 0.05, 0.02], stop_stable: 2 }
    }
}

/// Result of an annealing run: the final estimate plus diagnostics.
#[derive(Debug, Clone)]
pub struct AnnealResult {
    pub estimate: EstimationResult,
    /// Exponent at which the run stopped.
    pub p_final: f64,
    /// Number of schedule entries evaluated.
    pub steps: usize,
    /// Whether the final estimate agrees with the consensus (counting)
    /// estimate for the same experiment.
    pub matches_l0: bool,
}

fn check_estimable(exp: &Experiment, group: TransformGroup) -> Result<()> {
    if exp.dim_in() != exp.dim_out() {
        return Err(Error::DimensionMismatch { expected: exp.dim_in(), actual: exp.dim_out() });
    }
    if group == TransformGroup::Rotation2D && exp.dim_in() != 2 {
        return Err(Error::DimensionMismatch { expected: 2, actual: exp.dim_in() });
    }
    Ok(())
}

/// Data-induced candidate transforms, one per usable pair, in pair order,
/// with near-duplicates merged. Pairs whose inputs cannot pin down a group
/// element (zero norms, zero components, sign-flipping ratios) are skipped;
/// run [`Experiment::sanitize`] first to drop them explicitly.
pub fn candidate_transforms(exp: &Experiment, group: TransformGroup) -> Result<Vec<Transform>> {
    check_estimable(exp, group)?;
    let mut out: Vec<Transform> = Vec::with_capacity(exp.len());
    for pair in exp.pairs() {
        let i = pair.input.coords();
        let o = pair.output.coords();
        let params: Option<Vec<f64>> = match group {
            TransformGroup::Translation => {
                Some(i.iter().zip(o).map(|(ic, oc)| oc - ic).collect())
            }
            TransformGroup::UniformScaling => {
                let (ni, no) = (pair.input.norm(), pair.output.norm());
                (ni > 0.0 && no > 0.0).then(|| vec![no / ni])
            }
            TransformGroup::NonUniformScaling => i
                .iter()
                .zip(o)
                .map(|(ic, oc)| {
                    let r = oc / ic;
                    (r.is_finite() && r > 0.0).then_some(r)
                })
                .collect(),
            TransformGroup::Rotation2D => {
                if pair.input.norm() > 0.0 {
                    let angle = o[1].atan2(o[0]) - i[1].atan2(i[0]);
                    Some(vec![angle.rem_euclid(std::f64::consts::TAU)])
                } else {
                    None
                }
            }
        };
        let Some(params) = params else { continue };
        if !params.iter().all(|v| v.is_finite()) {
            continue;
        }
        let duplicate = out.iter().any(|t| {
            t.params().iter().zip(&params).all(|(a, b)| (a - b).abs() <= CANDIDATE_MERGE_TOL)
        });
        if !duplicate {
            out.push(Transform::new(group, params)?);
        }
    }
    if out.is_empty() {
        return Err(Error::DegenerateExperiment(format!(
            "no candidate transforms can be formed for {group}"
        )));
    }
    Ok(out)
}

/// Indices of pairs consistent with `t` under an absolute residual
/// tolerance.
pub fn pos(exp: &Experiment, t: &Transform, tol: f64) -> Result<Vec<usize>> {
    let mut idx = Vec::new();
    for (i, pair) in exp.pairs().iter().enumerate() {
        if pair.residual(t)? <= tol {
            idx.push(i);
        }
    }
    Ok(idx)
}

/// Strictly-better-or-tie-broken comparison: lower objective wins, then the
/// smaller parameter norm, then the earlier candidate (by not replacing).
fn improves(obj: f64, norm: f64, best_obj: f64, best_norm: f64) -> bool {
    obj < best_obj || (obj == best_obj && norm < best_norm)
}

/// Minimizes the objective over the group: candidate enumeration followed by
/// optional shrinking-grid refinement around the best candidate.
pub fn estimate(
    exp: &Experiment,
    group: TransformGroup,
    family: &PenaltyFamily,
    config: &EstimateConfig,
) -> Result<EstimationResult> {
    let candidates = candidate_transforms(exp, group)?;
    // Reduction runs in candidate index order so ties resolve
    // deterministically no matter how evaluations are scheduled.
    let mut best_idx = 0usize;
    let mut best_obj = objective_value(exp, &candidates[0], family)?;
    let mut best_norm = candidates[0].param_norm();
    for (idx, cand) in candidates.iter().enumerate().skip(1) {
        let obj = objective_value(exp, cand, family)?;
        if improves(obj, cand.param_norm(), best_obj, best_norm) {
            best_idx = idx;
            best_obj = obj;
            best_norm = cand.param_norm();
        }
    }
    let mut best = candidates[best_idx].clone();
    let mut refinement_steps = 0;
    let refine_cfg = match &config.refine {
        RefinePolicy::Always(rc) => Some(rc.clone()),
        RefinePolicy::Never => None,
        RefinePolicy::Auto => (group == TransformGroup::NonUniformScaling && exp.dim_in() >= 2)
            .then(RefineConfig::default),
    };
    if let Some(rc) = refine_cfg {
        (best, best_obj, refinement_steps) = refine(exp, family, best, best_obj, &rc)?;
    }
    let pos_size = pos(exp, &best, config.consistency_tol)?.len();
    Ok(EstimationResult {
        best,
        objective: best_obj,
        pos_size,
        candidates_evaluated: candidates.len(),
        refinement_steps,
    })
}

/// Local grid descent: a 5-point cross-product stencil per axis, recentered
/// on the incumbent and shrunk each iteration. Deterministic; only accepts
/// strict improvements.
fn refine(
    exp: &Experiment,
    family: &PenaltyFamily,
    start: Transform,
    start_obj: f64,
    rc: &RefineConfig,
) -> Result<(Transform, f64, usize)> {
    let group = start.group();
    let dim = start.params().len();
    let mut center = start.params().to_vec();
    let mut best = start;
    let mut best_obj = start_obj;
    let mut radius = rc.initial_radius;
    let mut steps = 0;
    let mut probe = vec![0.0; dim];
    let mut odometer = vec![0usize; dim];
    for _ in 0..rc.iterations {
        steps += 1;
        let offsets = [-radius, -radius / 2.0, 0.0, radius / 2.0, radius];
        odometer.fill(0);
        loop {
            for (axis, &o) in odometer.iter().enumerate() {
                probe[axis] = center[axis] + offsets[o];
            }
            // out-of-group probes (nonpositive scales) are skipped
            if let Ok(t) = Transform::new(group, probe.clone()) {
                let obj = objective_value(exp, &t, family)?;
                if obj < best_obj {
                    best_obj = obj;
                    best = t;
                }
            }
            let mut axis = 0;
            loop {
                if axis == dim {
                    break;
                }
                odometer[axis] += 1;
                if odometer[axis] < offsets.len() {
                    break;
                }
                odometer[axis] = 0;
                axis += 1;
            }
            if axis == dim {
                break;
            }
        }
        center.copy_from_slice(best.params());
        radius *= rc.shrink;
    }
    Ok((best, best_obj, steps))
}

/// Consensus estimation: the candidate maximizing the number of pairs with
/// residual within `tol`. Ties resolve to the smaller parameter norm, then
/// the earlier candidate. The objective reported is the count of
/// inconsistent pairs, i.e. the counting-penalty objective at the winner.
pub fn estimate_l0(exp: &Experiment, group: TransformGroup, tol: f64) -> Result<EstimationResult> {
    if !(tol > 0.0 && tol.is_finite()) {
        return Err(Error::InvalidArgument(format!("consensus tolerance must be positive, got {tol}")));
    }
    let candidates = candidate_transforms(exp, group)?;
    let mut best_idx = 0usize;
    let mut best_count = pos(exp, &candidates[0], tol)?.len();
    let mut best_norm = candidates[0].param_norm();
    for (idx, cand) in candidates.iter().enumerate().skip(1) {
        let count = pos(exp, cand, tol)?.len();
        let norm = cand.param_norm();
        if count > best_count || (count == best_count && norm < best_norm) {
            best_idx = idx;
            best_count = count;
            best_norm = norm;
        }
    }
    Ok(EstimationResult {
        best: candidates[best_idx].clone(),
        objective: (exp.len() - best_count) as f64,
        pos_size: best_count,
        candidates_evaluated: candidates.len(),
        refinement_steps: 0,
    })
}

fn agrees(a: &Transform, b: &Transform, tol: f64) -> bool {
    match a.param_distance(b) {
        Ok(d) => d <= tol * (1.0 + a.param_norm()),
        Err(_) => false,
    }
}

/// Runs [`estimate`] along the decreasing exponent schedule, stopping once
/// `stop_stable` consecutive estimates agree (within the config's agreement
/// tolerance) *and* the stable estimate matches the consensus estimate;
/// otherwise the schedule runs to exhaustion and the last estimate wins.
///
/// Gating the early stop on consensus agreement keeps a pair of
/// coincidentally-agreeing large-p estimates from ending the run before the
/// small-p regime is reached; when a true consensus exists the consensus
/// estimate is the ideal transform, so the gate only ever defers stopping.
pub fn anneal_p(
    exp: &Experiment,
    group: TransformGroup,
    schedule: &AnnealSchedule,
    config: &EstimateConfig,
) -> Result<AnnealResult> {
    let consensus = estimate_l0(exp, group, config.consistency_tol)?;
    let mut stable_run = 0usize;
    let mut last: Option<EstimationResult> = None;
    let mut p_final = schedule.p_values()[0];
    let mut steps = 0usize;
    for &p in schedule.p_values() {
        let res = estimate(exp, group, &PenaltyFamily::lp(p)?, config)?;
        steps += 1;
        p_final = p;
        stable_run = match &last {
            Some(prev) if agrees(&prev.best, &res.best, config.agreement_tol) => stable_run + 1,
            _ => 1,
        };
        let stable = stable_run >= schedule.stop_stable();
        let at_consensus = agrees(&res.best, &consensus.best, config.agreement_tol);
        last = Some(res);
        if stable && at_consensus {
            break;
        }
    }
    let estimate = last.expect("schedule is nonempty");
    let matches_l0 = agrees(&estimate.best, &consensus.best, config.agreement_tol);
    Ok(AnnealResult { estimate, p_final, steps, matches_l0 })
}
