//! Points, observation pairs, experiments, and the four supported
//! transformation groups.
//!
//! An [`Experiment`] is an ordered batch of input/output observation pairs
//! with declared dimensions. A [`Transform`] is a group tag plus its
//! parameter vector. Everything here is an immutable value after
//! construction; all operations are pure.

use std::f64::consts::TAU;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize};

use crate::error::{Error, Result};

/// Absolute residual tolerance treated as "exactly consistent" by default.
pub const CONSISTENCY_TOL: f64 = 1e-9;

/// A point in `R^d`, `d >= 1`. Components are finite.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct Point {
    coords: Vec<f64>,
}

impl Point {
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if coords.is_empty() {
            return Err(Error::InvalidArgument("point must have dimension >= 1".into()));
        }
        if coords.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidArgument("point components must be finite".into()));
        }
        Ok(Self { coords })
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    /// Euclidean norm.
    pub fn norm(&self) -> f64 {
        self.coords.iter().map(|c| c * c).sum::<f64>().sqrt()
    }

    pub(crate) fn from_raw(coords: Vec<f64>) -> Self {
        Self { coords }
    }
}

impl<'de> Deserialize<'de> for Point {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let coords = Vec::<f64>::deserialize(deserializer)?;
        Point::new(coords).map_err(serde::de::Error::custom)
    }
}

/// One observed correspondence `(I, O)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObservationPair {
    pub input: Point,
    pub output: Point,
}

impl ObservationPair {
    pub fn new(input: Point, output: Point) -> Self {
        Self { input, output }
    }

    /// Euclidean distance between the observed output and the transformed
    /// input, `|O - T(I)|`.
    pub fn residual(&self, t: &Transform) -> Result<f64> {
        t.residual_sq(&self.input, &self.output).map(f64::sqrt)
    }

    /// Whether the pair is consistent with `t` up to the scaled tolerance
    /// `tol * (1 + |O|)`. This is the float-safe stand-in for "perfect
    /// observation".
    pub fn is_consistent(&self, t: &Transform, tol: f64) -> Result<bool> {
        let r = self.residual(t)?;
        Ok(r <= tol * (1.0 + self.output.norm()))
    }
}

/// The supported transformation groups.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TransformGroup {
    #[serde(rename = "translation")]
    Translation,
    #[serde(rename = "uniform_scaling")]
    UniformScaling,
    #[serde(rename = "non_uniform_scaling")]
    NonUniformScaling,
    #[serde(rename = "rotation2d")]
    Rotation2D,
}

impl TransformGroup {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Translation => "translation",
            Self::UniformScaling => "uniform_scaling",
            Self::NonUniformScaling => "non_uniform_scaling",
            Self::Rotation2D => "rotation2d",
        }
    }
}

impl fmt::Display for TransformGroup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for TransformGroup {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        // Accept both snake_case and kebab-case spellings.
        match s.replace('-', "_").as_str() {
            "translation" => Ok(Self::Translation),
            "uniform_scaling" => Ok(Self::UniformScaling),
            "non_uniform_scaling" => Ok(Self::NonUniformScaling),
            "rotation2d" => Ok(Self::Rotation2D),
            other => Err(Error::InvalidArgument(format!("unknown transform group '{other}'"))),
        }
    }
}

#[derive(Deserialize)]
struct RawTransform {
    group: TransformGroup,
    params: Vec<f64>,
}

impl TryFrom<RawTransform> for Transform {
    type Error = Error;

    fn try_from(raw: RawTransform) -> Result<Self> {
        Transform::new(raw.group, raw.params)
    }
}

/// A group element: the group tag plus its parameter vector.
///
/// Parameters by group: translation offset (length = dim), a single strictly
/// positive uniform scale, strictly positive per-axis scales (length = dim),
/// or a planar rotation angle stored normalized to `[0, 2*pi)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawTransform")]
pub struct Transform {
    group: TransformGroup,
    params: Vec<f64>,
}

impl Transform {
    /// Checked constructor; validates parameter count, finiteness, and
    /// positivity constraints, and normalizes rotation angles.
    pub fn new(group: TransformGroup, params: Vec<f64>) -> Result<Self> {
        if params.is_empty() {
            return Err(Error::InvalidArgument("transform parameters must be nonempty".into()));
        }
        if params.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("transform parameters must be finite".into()));
        }
        let params = match group {
            TransformGroup::Translation => params,
            TransformGroup::UniformScaling => {
                if params.len() != 1 {
                    return Err(Error::InvalidArgument(
                        "uniform scaling takes exactly one parameter".into(),
                    ));
                }
                if params[0] <= 0.0 {
                    return Err(Error::InvalidArgument("scale factor must be positive".into()));
                }
                params
            }
            TransformGroup::NonUniformScaling => {
                if params.iter().any(|&s| s <= 0.0) {
                    return Err(Error::InvalidArgument("scale factors must be positive".into()));
                }
                params
            }
            TransformGroup::Rotation2D => {
                if params.len() != 1 {
                    return Err(Error::InvalidArgument(
                        "planar rotation takes exactly one angle".into(),
                    ));
                }
                vec![params[0].rem_euclid(TAU)]
            }
        };
        Ok(Self { group, params })
    }

    pub fn translation(offset: Vec<f64>) -> Result<Self> {
        Self::new(TransformGroup::Translation, offset)
    }

    pub fn uniform_scaling(scale: f64) -> Result<Self> {
        Self::new(TransformGroup::UniformScaling, vec![scale])
    }

    pub fn non_uniform_scaling(scales: Vec<f64>) -> Result<Self> {
        Self::new(TransformGroup::NonUniformScaling, scales)
    }

    pub fn rotation2d(angle: f64) -> Result<Self> {
        Self::new(TransformGroup::Rotation2D, vec![angle])
    }

    /// The identity element of `group` acting on `R^dim`.
    pub fn identity(group: TransformGroup, dim: usize) -> Self {
        let params = match group {
            TransformGroup::Translation => vec![0.0; dim],
            TransformGroup::UniformScaling => vec![1.0],
            TransformGroup::NonUniformScaling => vec![1.0; dim],
            TransformGroup::Rotation2D => vec![0.0],
        };
        Self { group, params }
    }

    pub fn group(&self) -> TransformGroup {
        self.group
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    /// 2-norm of the parameter vector (used by deterministic tie-breaking).
    pub fn param_norm(&self) -> f64 {
        self.params.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// Point dimension this transform acts on, or `None` when any dimension
    /// is acceptable (uniform scaling).
    pub fn expected_dim(&self) -> Option<usize> {
        match self.group {
            TransformGroup::Translation | TransformGroup::NonUniformScaling => {
                Some(self.params.len())
            }
            TransformGroup::UniformScaling => None,
            TransformGroup::Rotation2D => Some(2),
        }
    }

    fn check_dim(&self, dim: usize) -> Result<()> {
        match self.expected_dim() {
            Some(expected) if expected != dim => {
                Err(Error::DimensionMismatch { expected, actual: dim })
            }
            _ => Ok(()),
        }
    }

    /// Applies the transform: `T(x)`.
    pub fn apply(&self, x: &Point) -> Result<Point> {
        self.check_dim(x.dim())?;
        let coords = match self.group {
            TransformGroup::Translation => {
                x.coords().iter().zip(&self.params).map(|(c, a)| c + a).collect()
            }
            TransformGroup::UniformScaling => {
                let s = self.params[0];
                x.coords().iter().map(|c| s * c).collect()
            }
            TransformGroup::NonUniformScaling => {
                x.coords().iter().zip(&self.params).map(|(c, s)| s * c).collect()
            }
            TransformGroup::Rotation2D => {
                let (sin, cos) = self.params[0].sin_cos();
                let (px, py) = (x.coords()[0], x.coords()[1]);
                vec![cos * px - sin * py, sin * px + cos * py]
            }
        };
        Ok(Point::from_raw(coords))
    }

    /// Squared residual `|output - T(input)|^2` without allocating the
    /// intermediate point. This is the hot path of every estimator loop.
    pub fn residual_sq(&self, input: &Point, output: &Point) -> Result<f64> {
        self.check_dim(input.dim())?;
        if input.dim() != output.dim() {
            return Err(Error::DimensionMismatch { expected: input.dim(), actual: output.dim() });
        }
        let i = input.coords();
        let o = output.coords();
        let sq = match self.group {
            TransformGroup::Translation => i
                .iter()
                .zip(o)
                .zip(&self.params)
                .map(|((ic, oc), a)| {
                    let d = oc - ic - a;
                    d * d
                })
                .sum(),
            TransformGroup::UniformScaling => {
                let s = self.params[0];
                i.iter()
                    .zip(o)
                    .map(|(ic, oc)| {
                        let d = oc - s * ic;
                        d * d
                    })
                    .sum()
            }
            TransformGroup::NonUniformScaling => i
                .iter()
                .zip(o)
                .zip(&self.params)
                .map(|((ic, oc), s)| {
                    let d = oc - s * ic;
                    d * d
                })
                .sum(),
            TransformGroup::Rotation2D => {
                let (sin, cos) = self.params[0].sin_cos();
                let dx = o[0] - (cos * i[0] - sin * i[1]);
                let dy = o[1] - (sin * i[0] + cos * i[1]);
                dx * dx + dy * dy
            }
        };
        Ok(sq)
    }

    /// Parameter-space distance to another element of the same group:
    /// Euclidean on parameter vectors, with rotation angles compared on the
    /// circle (shortest arc).
    pub fn param_distance(&self, other: &Transform) -> Result<f64> {
        if self.group != other.group {
            return Err(Error::InvalidArgument(format!(
                "cannot compare parameters across groups ({} vs {})",
                self.group, other.group
            )));
        }
        if self.params.len() != other.params.len() {
            return Err(Error::DimensionMismatch {
                expected: self.params.len(),
                actual: other.params.len(),
            });
        }
        if self.group == TransformGroup::Rotation2D {
            let mut d = (self.params[0] - other.params[0]).rem_euclid(TAU);
            if d > TAU / 2.0 {
                d = TAU - d;
            }
            return Ok(d);
        }
        Ok(self
            .params
            .iter()
            .zip(&other.params)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt())
    }
}

/// Ground-truth metadata attached to synthetic experiments.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Truth {
    #[serde(flatten)]
    pub transform: Transform,
    pub n_ideal: usize,
}

#[derive(Deserialize)]
struct RawExperiment {
    dim_in: usize,
    dim_out: usize,
    pairs: Vec<ObservationPair>,
    #[serde(default)]
    truth: Option<Truth>,
}

impl TryFrom<RawExperiment> for Experiment {
    type Error = Error;

    fn try_from(raw: RawExperiment) -> Result<Self> {
        let mut exp = Experiment::new(raw.dim_in, raw.dim_out, raw.pairs)?;
        if let Some(truth) = raw.truth {
            exp = exp.with_truth(truth);
        }
        Ok(exp)
    }
}

/// An ordered batch of observation pairs with declared dimensions.
///
/// Serialized as `{"dim_in": .., "dim_out": .., "pairs": [{"input": [..],
/// "output": [..]}, ..]}` with an optional `"truth"` object carrying
/// `group`, `params`, and `n_ideal` for harness use.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawExperiment")]
pub struct Experiment {
    dim_in: usize,
    dim_out: usize,
    pairs: Vec<ObservationPair>,
    #[serde(skip_serializing_if = "Option::is_none")]
    truth: Option<Truth>,
}

impl Experiment {
    pub fn new(dim_in: usize, dim_out: usize, pairs: Vec<ObservationPair>) -> Result<Self> {
        if dim_in == 0 || dim_out == 0 {
            return Err(Error::InvalidArgument("dimensions must be >= 1".into()));
        }
        if pairs.is_empty() {
            return Err(Error::EmptyExperiment);
        }
        for pair in &pairs {
            if pair.input.dim() != dim_in {
                return Err(Error::DimensionMismatch { expected: dim_in, actual: pair.input.dim() });
            }
            if pair.output.dim() != dim_out {
                return Err(Error::DimensionMismatch {
                    expected: dim_out,
                    actual: pair.output.dim(),
                });
            }
        }
        Ok(Self { dim_in, dim_out, pairs, truth: None })
    }

    pub fn with_truth(mut self, truth: Truth) -> Self {
        self.truth = Some(truth);
        self
    }

    pub fn dim_in(&self) -> usize {
        self.dim_in
    }

    pub fn dim_out(&self) -> usize {
        self.dim_out
    }

    pub fn pairs(&self) -> &[ObservationPair] {
        &self.pairs
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn truth(&self) -> Option<&Truth> {
        self.truth.as_ref()
    }

    /// Removes pairs whose inputs make the group's candidate parameters
    /// ill-defined: any zero component for non-uniform scaling, an all-zero
    /// input for uniform scaling and rotation. Translation passes through
    /// unchanged. Order of survivors is preserved.
    pub fn sanitize(&self, group: TransformGroup) -> Result<Experiment> {
        let keep = |pair: &ObservationPair| match group {
            TransformGroup::Translation => true,
            TransformGroup::NonUniformScaling => pair.input.coords().iter().all(|&c| c != 0.0),
            TransformGroup::UniformScaling | TransformGroup::Rotation2D => {
                pair.input.coords().iter().any(|&c| c != 0.0)
            }
        };
        let pairs: Vec<ObservationPair> = self.pairs.iter().filter(|p| keep(p)).cloned().collect();
        if pairs.is_empty() {
            return Err(Error::DegenerateExperiment(format!(
                "no usable pairs remain after sanitizing for {group}"
            )));
        }
        Ok(Experiment {
            dim_in: self.dim_in,
            dim_out: self.dim_out,
            pairs,
            truth: self.truth.clone(),
        })
    }
}
