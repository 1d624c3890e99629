//! Closed-form robustness-bound calculus for the sub-linear location
//! estimator under majority noise.
//!
//! The derivation splits the sorted noise distances at the candidate offset
//! `d_T` (index units): the near group contributes at most `2 M^a` and the
//! far group at most `(M+1-M^a)^p d_T^{1-p} - d_T/(1+p) + M^a`, where `a` is
//! the concentration exponent making every sorted uniform order statistic
//! stay within `M^(a-1)` of its mean with the target confidence. Combining
//! the two maxima yields a sufficient inlier-to-noise ratio `n/M`
//! guaranteeing that the true transform beats every rival.

use crate::error::{Error, Result};

/// Parameter bundle for the far-group bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundParams {
    /// Noise-observation count.
    pub m: u64,
    /// Concentration exponent, in (0.5, 1).
    pub a: f64,
    /// Penalty exponent, in (0, 1).
    pub p: f64,
    /// Candidate distance in sorted-index units, positive.
    pub d_t: f64,
}

impl BoundParams {
    pub fn new(m: u64, a: f64, p: f64, d_t: f64) -> Result<Self> {
        if m == 0 {
            return Err(Error::InvalidArgument("m must be >= 1".into()));
        }
        if !(a > 0.5 && a < 1.0) {
            return Err(Error::InvalidArgument(format!("exponent a must lie in (0.5, 1), got {a}")));
        }
        if !(p > 0.0 && p < 1.0) {
            return Err(Error::InvalidArgument(format!("exponent p must lie in (0, 1), got {p}")));
        }
        if !(d_t > 0.0 && d_t.is_finite()) {
            return Err(Error::InvalidArgument(format!("d_t must be positive, got {d_t}")));
        }
        Ok(Self { m, a, p, d_t })
    }
}

/// Lower bound on the probability that every sorted uniform order statistic
/// deviates from its mean by less than `M^(a-1)`:
/// `(1 - 2 exp(-2 M^(2a-1)))^M`, clamped to 0 when the inner term reaches 1.
pub fn order_stat_confidence(m: u64, a: f64) -> f64 {
    let mf = m as f64;
    let tail = 2.0 * (-2.0 * mf.powf(2.0 * a - 1.0)).exp();
    if tail >= 1.0 {
        return 0.0;
    }
    // (1 - tail)^M via ln1p for precision near 1
    (mf * (-tail).ln_1p()).exp()
}

/// Smallest concentration exponent (unrounded) whose confidence bound meets
/// `target`, found by bisection on (0.5, 1).
pub fn min_confidence_exponent_exact(m: u64, target: f64) -> Result<f64> {
    if m < 2 {
        return Err(Error::InvalidArgument(format!("m must be >= 2, got {m}")));
    }
    if !(target > 0.0 && target < 1.0) {
        return Err(Error::InvalidArgument(format!("target must lie in (0, 1), got {target}")));
    }
    let mut lo = 0.5;
    let mut hi = 1.0;
    if order_stat_confidence(m, hi) < target {
        return Err(Error::Infeasible(format!(
            "no exponent a < 1 reaches confidence {target} at m = {m}"
        )));
    }
    // 60 halvings take the bracket width to ~1e-18, far below the rounding
    // resolution of the 3-decimal table.
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if order_stat_confidence(m, mid) >= target {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

/// Smallest concentration exponent meeting `target`, rounded to 3 decimals
/// (the customary table formatting).
pub fn min_confidence_exponent(m: u64, target: f64) -> Result<f64> {
    let exact = min_confidence_exponent_exact(m, target)?;
    Ok((exact * 1000.0).round() / 1000.0)
}

/// Near-group upper bound: `2 M^a`.
pub fn tfg_bound_uniform(m: u64, a: f64) -> f64 {
    2.0 * (m as f64).powf(a)
}

/// Far-group upper bound at a specific candidate distance:
/// `(M+1-M^a)^p d_T^(1-p) - d_T/(1+p) + M^a`.
pub fn tsg_bound_uniform(params: &BoundParams) -> f64 {
    let mf = params.m as f64;
    let b = mf + 1.0 - mf.powf(params.a);
    b.powf(params.p) * params.d_t.powf(1.0 - params.p) - params.d_t / (1.0 + params.p)
        + mf.powf(params.a)
}

/// Maximum of the far-group bound over `d_T`:
/// `p (1-p^2)^((1-p)/p) (M+1-M^a) + M^a`.
pub fn tsg_max_uniform(m: u64, a: f64, p: f64) -> f64 {
    let mf = m as f64;
    let b = mf + 1.0 - mf.powf(a);
    p * (1.0 - p * p).powf((1.0 - p) / p) * b + mf.powf(a)
}

/// The `d_T` at which [`tsg_bound_uniform`] attains [`tsg_max_uniform`]:
/// `(1-p^2)^(1/p) (M+1-M^a)`. (Setting the derivative of
/// `B^p d^(1-p) - d/(1+p)` to zero gives `d = (1-p^2)^(1/p) B` exactly; the
/// often-quoted `(1-p^2)^(1/p) M` replaces `B` by `M` and is only a
/// large-`M` approximation of the stationary point.)
pub fn tsg_maximizer_uniform(m: u64, a: f64, p: f64) -> f64 {
    let mf = m as f64;
    (1.0 - p * p).powf(1.0 / p) * (mf + 1.0 - mf.powf(a))
}

/// Sufficient inlier-to-noise ratio `n/M`: the combined near- and far-group
/// maxima divided by `M`.
pub fn breakdown_ratio(p: f64, m: u64, a: f64) -> f64 {
    (tfg_bound_uniform(m, a) + tsg_max_uniform(m, a, p)) / m as f64
}

/// Near-group upper bound for a general noise distance CDF `F`:
/// `(F(d_T) - F(3d_T/4)) M - F(d_T/4) M / 2^p + (F(3d_T/4) - F(d_T/2)) M / 2^p`.
pub fn tfg_bound_general<F: Fn(f64) -> f64>(f: F, d_t: f64, p: f64, m: u64) -> f64 {
    let mf = m as f64;
    let half_pow = 2f64.powf(p);
    (f(d_t) - f(0.75 * d_t)) * mf - f(0.25 * d_t) * mf / half_pow
        + (f(0.75 * d_t) - f(0.5 * d_t)) * mf / half_pow
}

/// Far-group upper bound for a general CDF `F`, split on how much
/// probability mass sits below `d_T`:
///
/// * `F(d_T) > 0.5` -> `M (1 - F(d_T))`;
/// * `F(d_T) in [0.25, 0.5]` -> `((3/2)^p - (1/2)^p)(1 - F(3d_T/2)) M +
///   (F(3d_T/2) - F(d_T)) M`;
/// * `F(d_T) < 0.25` -> layered sum over `i = 1 .. floor(1/d_T) - 1` of
///   `((i+1)^p - i^p)(F((i+1)d_T) - F(i d_T)) M`, plus
///   `(1 - F(floor(1/d_T) d_T)) M + (F(2d_T) - F(d_T)) M`.
pub fn tsg_bound_general<F: Fn(f64) -> f64>(f: F, d_t: f64, p: f64, m: u64) -> f64 {
    let mf = m as f64;
    let fd = f(d_t);
    if fd > 0.5 {
        return mf * (1.0 - fd);
    }
    if fd >= 0.25 {
        let f32x = f(1.5 * d_t);
        return (1.5f64.powf(p) - 0.5f64.powf(p)) * (1.0 - f32x) * mf + (f32x - fd) * mf;
    }
    let layers = (1.0 / d_t).floor() as u64;
    let mut sum = 0.0;
    for i in 1..layers {
        let (lo, hi) = (i as f64, (i + 1) as f64);
        sum += (hi.powf(p) - lo.powf(p)) * (f(hi * d_t) - f(lo * d_t));
    }
    (sum + (1.0 - f(layers as f64 * d_t)) + (f(2.0 * d_t) - fd)) * mf
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn tabulated_exponent_rows() {
        for (m, expected) in [(100, 0.696), (500, 0.655), (1000, 0.643)] {
            let a = min_confidence_exponent(m, 0.999).unwrap();
            assert_relative_eq!(a, expected, epsilon = 1e-12);
        }
    }

    #[test]
    fn exponent_is_minimal_before_rounding() {
        for m in [100u64, 500, 1000] {
            let a = min_confidence_exponent_exact(m, 0.999).unwrap();
            assert!(order_stat_confidence(m, a) >= 0.999);
            assert!(order_stat_confidence(m, a - 0.001) < 0.999);
        }
    }

    #[test]
    fn exponent_infeasible_for_tiny_m() {
        assert!(matches!(min_confidence_exponent(2, 0.999), Err(Error::Infeasible(_))));
        assert!(min_confidence_exponent(1, 0.5).is_err());
        assert!(min_confidence_exponent(100, 1.0).is_err());
    }

    #[test]
    fn near_group_bound_values() {
        assert_relative_eq!(tfg_bound_uniform(1000, 0.643), 169.83609500726277, max_relative = 1e-12);
        assert!((tfg_bound_uniform(1000, 0.643) - 169.86).abs() < 0.05);
        // direct exponentiation: 2 * 100^0.696
        assert_relative_eq!(tfg_bound_uniform(100, 0.696), 49.32078674468677, max_relative = 1e-12);
        assert_eq!(tfg_bound_uniform(1, 0.7), 2.0);
    }

    #[test]
    fn far_group_bound_hand_value() {
        // (2-1)^0.5 * 1 - 1/1.5 + 1 with m=1, a near 1
        let params = BoundParams::new(1, 0.999, 0.5, 1.0).unwrap();
        let got = tsg_bound_uniform(&params);
        assert_relative_eq!(got, 4.0 / 3.0, max_relative = 1e-9);
    }

    #[test]
    fn far_group_peak_at_maximizer() {
        for (m, a, p) in [(1000u64, 0.643, 0.5), (1000, 0.643, 0.05), (200, 0.676, 0.3)] {
            let d_star = tsg_maximizer_uniform(m, a, p);
            let at_peak = tsg_bound_uniform(&BoundParams::new(m, a, p, d_star).unwrap());
            let peak = tsg_max_uniform(m, a, p);
            assert_relative_eq!(at_peak, peak, max_relative = 1e-9);
            // moving off the stationary point can only go down
            for factor in [0.5, 0.9, 1.1, 2.0] {
                let off = tsg_bound_uniform(&BoundParams::new(m, a, p, d_star * factor).unwrap());
                assert!(off < peak);
            }
        }
    }

    #[test]
    fn far_group_peak_values() {
        let got = tsg_max_uniform(1000, 0.643, 0.5);
        assert_relative_eq!(got, 428.4487796897696, max_relative = 1e-12);
        assert!((got - 428.5).abs() < 0.5);
        assert!((tsg_max_uniform(1000, 0.643, 0.05) - 128.6).abs() < 0.5);
    }

    #[test]
    fn far_group_peak_grows_toward_m_plus_one_as_p_grows() {
        // p (1-p^2)^((1-p)/p) increases toward 1 as p -> 1, so the peak
        // climbs toward (M+1-M^a) + M^a = M+1 rather than collapsing to M^a.
        let (m, a) = (1000u64, 0.643);
        let factor = |p: f64| p * (1.0 - p * p).powf((1.0 - p) / p);
        assert!(factor(0.9) < factor(0.99));
        assert!(factor(0.99) < factor(0.999));
        assert!((factor(0.999) - 1.0).abs() < 1e-2);
        let near_limit = tsg_max_uniform(m, a, 0.9999);
        assert!((near_limit - (m as f64 + 1.0)).abs() < 1.0);
    }

    #[test]
    fn breakdown_ratio_tabulated_rows() {
        let rows = [
            (0.50, 0.60),
            (0.45, 0.57),
            (0.40, 0.54),
            (0.35, 0.51),
            (0.30, 0.48),
            (0.25, 0.44),
            (0.20, 0.41),
            (0.15, 0.38),
            (0.10, 0.34),
            (0.05, 0.30),
        ];
        for (p, expected) in rows {
            let got = breakdown_ratio(p, 1000, 0.643);
            assert!((got - expected).abs() <= 0.005, "p={p}: got {got}, expected {expected}");
        }
    }

    #[test]
    fn general_near_group_examples() {
        let uniform = |x: f64| x.clamp(0.0, 1.0);
        assert_relative_eq!(tfg_bound_general(uniform, 1.0, 0.5, 1000), 250.0, max_relative = 1e-12);
        let quadratic = |x: f64| (x * x).clamp(0.0, 1.0);
        let got = tfg_bound_general(quadratic, 1.0, 0.5, 1000);
        assert_relative_eq!(got, 614.2766952966368, max_relative = 1e-12);
        assert!((got - 614.3).abs() < 0.05);
        // d_T -> 0: all increments vanish for continuous F with F(0)=0
        assert!(tfg_bound_general(uniform, 1e-12, 0.5, 1000).abs() < 1e-9);
    }

    #[test]
    fn general_far_group_branches() {
        let uniform = |x: f64| x.clamp(0.0, 1.0);
        // mass above 1/2: plain tail bound
        assert_relative_eq!(tsg_bound_general(uniform, 0.6, 0.5, 1000), 400.0, max_relative = 1e-12);
        // middle branch: hand evaluation gives 434.70094961...
        let mid = tsg_bound_general(uniform, 0.3, 0.5, 1000);
        assert_relative_eq!(mid, 434.7009496127728, max_relative = 1e-10);
        assert_relative_eq!(
            mid,
            (1.5f64.sqrt() - 0.5f64.sqrt()) * 0.55 * 1000.0 + 150.0,
            max_relative = 1e-12
        );
        // layered branch stays finite and positive
        let low = tsg_bound_general(uniform, 0.1, 0.5, 1000);
        assert!(low > 0.0 && low.is_finite());
    }

    #[test]
    fn bound_params_validation() {
        assert!(BoundParams::new(0, 0.7, 0.5, 1.0).is_err());
        assert!(BoundParams::new(10, 0.5, 0.5, 1.0).is_err());
        assert!(BoundParams::new(10, 0.7, 1.0, 1.0).is_err());
        assert!(BoundParams::new(10, 0.7, 0.5, 0.0).is_err());
        assert!(BoundParams::new(10, 0.7, 0.5, 1.0).is_ok());
    }
}
