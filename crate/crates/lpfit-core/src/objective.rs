//! Residual-penalty families and the total objective.
//!
//! Three families are provided: the sub-linear power penalty `x^p` with
//! `p <= 1`, the tolerance-based counting penalty (0 below the tolerance,
//! 1 above), and the piecewise super-robust family which follows `x^p` above
//! the knee `k*p` and a polynomial `C * x^q` below it, with `C` chosen so the
//! branches agree at the knee.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::transform::{Experiment, Transform};

/// A residual-penalty function selector.
#[derive(Debug, Clone, PartialEq)]
pub enum PenaltyFamily {
    /// `x^p`, `0 < p <= 1`, with `0^p = 0`.
    Lp { p: f64 },
    /// 0 when `x <= tol`, 1 otherwise. The objective then counts
    /// inconsistent pairs.
    L0 { tol: f64 },
    /// `x^p` for `x >= k*p`, `C(p) * x^q` for `x < k*p`, with
    /// `C(p) = (k*p)^(p-q)` making the branches agree at the knee.
    SrPiecewise { p: f64, q: f64, k: f64 },
}

impl PenaltyFamily {
    pub fn lp(p: f64) -> Result<Self> {
        if !(p > 0.0 && p <= 1.0) {
            return Err(Error::InvalidArgument(format!("lp exponent must be in (0, 1], got {p}")));
        }
        Ok(Self::Lp { p })
    }

    pub fn l0(tol: f64) -> Result<Self> {
        if !(tol > 0.0 && tol.is_finite()) {
            return Err(Error::InvalidArgument(format!("l0 tolerance must be positive, got {tol}")));
        }
        Ok(Self::L0 { tol })
    }

    pub fn sr_piecewise(p: f64, q: f64, k: f64) -> Result<Self> {
        if !(p > 0.0 && p < 1.0) {
            return Err(Error::InvalidArgument(format!("sr exponent p must be in (0, 1), got {p}")));
        }
        if !(q >= 1.0 && q.is_finite()) {
            return Err(Error::InvalidArgument(format!("sr exponent q must be >= 1, got {q}")));
        }
        if !(k > 0.0 && k.is_finite()) {
            return Err(Error::InvalidArgument(format!("sr knee scale k must be positive, got {k}")));
        }
        Ok(Self::SrPiecewise { p, q, k })
    }

    /// Penalty value at a nonnegative residual.
    pub fn penalty(&self, x: f64) -> Result<f64> {
        if x.is_nan() || x < 0.0 {
            return Err(Error::InvalidArgument(format!("penalty argument must be >= 0, got {x}")));
        }
        Ok(self.penalty_nonneg(x))
    }

    /// Same as [`penalty`](Self::penalty) but assumes `x >= 0` (always true
    /// for residuals); keeps estimator loops free of per-term checks.
    pub(crate) fn penalty_nonneg(&self, x: f64) -> f64 {
        debug_assert!(x >= 0.0);
        match *self {
            Self::Lp { p } => {
                if x == 0.0 {
                    0.0
                } else {
                    x.powf(p)
                }
            }
            Self::L0 { tol } => {
                if x <= tol {
                    0.0
                } else {
                    1.0
                }
            }
            Self::SrPiecewise { p, q, k } => {
                let knee = k * p;
                if x >= knee {
                    x.powf(p)
                } else if x == 0.0 {
                    0.0
                } else {
                    // C(p) * x^q with C(p) = knee^(p-q), in log space so tiny
                    // knees cannot overflow the intermediate constant.
                    ((p - q) * knee.ln() + q * x.ln()).exp()
                }
            }
        }
    }
}

impl fmt::Display for PenaltyFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Lp { p } => write!(f, "lp:{p}"),
            Self::L0 { tol } => write!(f, "l0:{tol}"),
            Self::SrPiecewise { p, q, k } => write!(f, "sr:{p},{q},{k}"),
        }
    }
}

impl FromStr for PenaltyFamily {
    type Err = Error;

    /// Parses the flat family spec: `lp:<p>`, `l0:<tol>`, or `sr:<p>,<q>,<k>`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = |msg: &str| Error::InvalidArgument(format!("family spec '{s}': {msg}"));
        let (kind, rest) =
            s.split_once(':').ok_or_else(|| bad("expected lp:<p>, l0:<tol>, or sr:<p>,<q>,<k>"))?;
        let num = |v: &str| v.trim().parse::<f64>().map_err(|_| bad("malformed number"));
        match kind {
            "lp" => Self::lp(num(rest)?),
            "l0" => Self::l0(num(rest)?),
            "sr" => {
                let parts: Vec<&str> = rest.split(',').collect();
                if parts.len() != 3 {
                    return Err(bad("sr takes exactly three values p,q,k"));
                }
                Self::sr_piecewise(num(parts[0])?, num(parts[1])?, num(parts[2])?)
            }
            other => Err(bad(&format!("unknown family '{other}'"))),
        }
    }
}

/// Total objective: the sum of penalized residuals over all pairs.
pub fn objective_value(exp: &Experiment, t: &Transform, family: &PenaltyFamily) -> Result<f64> {
    let mut total = 0.0;
    for pair in exp.pairs() {
        total += family.penalty_nonneg(pair.residual(t)?);
    }
    Ok(total)
}
