//! Synthetic experiment generation and Monte Carlo trials.
//!
//! Experiments are built from a [`ScenarioConfig`]: `n_ideal` perfect pairs
//! plus `m_noise` pairs whose outputs are displaced radially from the true
//! output by a distance drawn from a [`NoiseModel`]. Everything is
//! deterministic in the master seed; per-trial seeds are derived by a fixed
//! integer mix so trials stay independent and parallelizable.

use std::fmt;
use std::io::{self, Write};
use std::sync::Arc;

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::bounds::{breakdown_ratio, min_confidence_exponent};
use crate::error::{Error, Result};
use crate::estimator::{estimate, estimate_l0, EstimateConfig, EstimationResult};
use crate::objective::PenaltyFamily;
use crate::transform::{Experiment, ObservationPair, Point, Transform, TransformGroup, Truth};

/// Relative parameter-error tolerance for "exact recovery":
/// `param_error <= RECOVERY_TOL * (1 + |truth params|)`.
pub const RECOVERY_TOL: f64 = 1e-6;

/// Distribution of the radial displacement of a noise pair.
#[derive(Clone)]
pub enum NoiseModel {
    /// Radius uniform on `(0, max]`.
    UniformRadius { max: f64 },
    /// Density proportional to `(k+1) x^k` on `[0, 1]`, i.e. CDF `x^(k+1)`;
    /// radius in `(0, 1]`.
    PowerLaw { k: f64 },
    /// Radius given by a user inverse CDF evaluated at a uniform variate in
    /// `[0, 1)`; must return nonnegative values.
    Custom { inverse_cdf: Arc<dyn Fn(f64) -> f64 + Send + Sync> },
}

impl fmt::Debug for NoiseModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::UniformRadius { max } => write!(f, "UniformRadius({max})"),
            Self::PowerLaw { k } => write!(f, "PowerLaw({k})"),
            Self::Custom { .. } => f.write_str("Custom(inverse_cdf)"),
        }
    }
}

impl NoiseModel {
    pub fn validate(&self) -> Result<()> {
        match self {
            Self::UniformRadius { max } if !(*max > 0.0 && max.is_finite()) => Err(
                Error::InvalidArgument(format!("uniform noise radius must be positive, got {max}")),
            ),
            Self::PowerLaw { k } if !(*k >= 0.0 && k.is_finite()) => Err(Error::InvalidArgument(
                format!("power-law exponent must be >= 0, got {k}"),
            )),
            _ => Ok(()),
        }
    }

    /// Draws one radius. Consumes exactly one uniform variate.
    pub fn sample_radius<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let v: f64 = rng.gen(); // [0, 1)
        match self {
            // 1-v keeps the radius strictly positive, so a noise pair is
            // never accidentally perfect.
            Self::UniformRadius { max } => max * (1.0 - v),
            Self::PowerLaw { k } => (1.0 - v).powf(1.0 / (k + 1.0)),
            Self::Custom { inverse_cdf } => inverse_cdf(v),
        }
    }
}

/// Full description of one synthetic scenario.
#[derive(Debug, Clone)]
pub struct ScenarioConfig {
    pub group: TransformGroup,
    pub dim: usize,
    pub n_ideal: usize,
    pub m_noise: usize,
    pub truth: Transform,
    pub noise: NoiseModel,
    pub family: PenaltyFamily,
    pub master_seed: u64,
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<()> {
        if self.dim == 0 {
            return Err(Error::InvalidArgument("dimension must be >= 1".into()));
        }
        if self.n_ideal + self.m_noise == 0 {
            return Err(Error::InvalidArgument("need at least one observation pair".into()));
        }
        if self.truth.group() != self.group {
            return Err(Error::InvalidArgument(format!(
                "truth transform is {} but the scenario group is {}",
                self.truth.group(),
                self.group
            )));
        }
        if let Some(expected) = self.truth.expected_dim() {
            if expected != self.dim {
                return Err(Error::DimensionMismatch { expected, actual: self.dim });
            }
        }
        self.noise.validate()
    }
}

/// One estimation trial compared against the scenario truth.
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct TrialRecord {
    pub seed: u64,
    pub estimated: Transform,
    pub param_error: f64,
    pub exact_recovery: bool,
    pub objective: f64,
    pub pos_size: usize,
}

/// One (p, inlier ratio) grid cell of a profile sweep.
#[derive(Debug, Clone)]
pub struct ProfileCell {
    pub p: f64,
    pub inlier_ratio: f64,
    pub trials: usize,
    pub recoveries: usize,
    pub rate: f64,
    /// Analytic sufficient ratio for this p (NaN when no concentration
    /// exponent reaches the confidence target at this noise count).
    pub analytic_bound: f64,
    pub records: Vec<TrialRecord>,
}

/// Empirical recovery-rate grid with the analytic overlay.
#[derive(Debug, Clone)]
pub struct RobustnessProfile {
    pub cells: Vec<ProfileCell>,
}

impl RobustnessProfile {
    /// CSV with columns `p,inlier_ratio,trials,recoveries,rate,analytic_bound`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "p,inlier_ratio,trials,recoveries,rate,analytic_bound")?;
        for c in &self.cells {
            writeln!(
                w,
                "{},{},{},{},{},{}",
                c.p, c.inlier_ratio, c.trials, c.recoveries, c.rate, c.analytic_bound
            )?;
        }
        Ok(())
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Fixed seed-splitting rule:
/// `splitmix64(splitmix64(splitmix64(master) ^ cell) ^ trial)`.
pub fn split_seed(master: u64, cell: u64, trial: u64) -> u64 {
    splitmix64(splitmix64(splitmix64(master) ^ cell) ^ trial)
}

fn unit_vector<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Vec<f64> {
    if dim == 1 {
        return vec![if rng.gen::<bool>() { 1.0 } else { -1.0 }];
    }
    loop {
        let v: Vec<f64> = (0..dim).map(|_| rng.sample(StandardNormal)).collect();
        let norm = v.iter().map(|c| c * c).sum::<f64>().sqrt();
        if norm > 1e-12 {
            return v.into_iter().map(|c| c / norm).collect();
        }
    }
}

/// Builds a synthetic experiment: `n_ideal` exact pairs, then `m_noise`
/// noisy pairs (output displaced by `r * u`, `r` from the noise model, `u`
/// uniform on the unit sphere), then a deterministic shuffle. Inputs are
/// uniform on `[-1, 1]^dim`. The truth transform and ideal count are
/// recorded in the experiment metadata.
pub fn generate_experiment(cfg: &ScenarioConfig) -> Result<Experiment> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.master_seed);
    let draw_input = |rng: &mut ChaCha8Rng| {
        Point::new((0..cfg.dim).map(|_| rng.gen_range(-1.0..=1.0)).collect())
            .expect("generated coordinates are finite")
    };
    let mut pairs = Vec::with_capacity(cfg.n_ideal + cfg.m_noise);
    for _ in 0..cfg.n_ideal {
        let input = draw_input(&mut rng);
        let output = cfg.truth.apply(&input)?;
        pairs.push(ObservationPair::new(input, output));
    }
    for _ in 0..cfg.m_noise {
        let input = draw_input(&mut rng);
        let ideal = cfg.truth.apply(&input)?;
        let r = cfg.noise.sample_radius(&mut rng);
        let u = unit_vector(cfg.dim, &mut rng);
        let coords: Vec<f64> =
            ideal.coords().iter().zip(&u).map(|(c, d)| c + r * d).collect();
        pairs.push(ObservationPair::new(input, Point::new(coords)?));
    }
    pairs.shuffle(&mut rng);
    let exp = Experiment::new(cfg.dim, cfg.dim, pairs)?
        .with_truth(Truth { transform: cfg.truth.clone(), n_ideal: cfg.n_ideal });
    Ok(exp)
}

/// Generates, sanitizes, estimates under the configured family, and scores
/// the result against the truth.
pub fn run_trial(cfg: &ScenarioConfig) -> Result<TrialRecord> {
    let exp = generate_experiment(cfg)?;
    let sane = exp.sanitize(cfg.group)?;
    let est: EstimationResult = match &cfg.family {
        PenaltyFamily::L0 { tol } => estimate_l0(&sane, cfg.group, *tol)?,
        family => estimate(&sane, cfg.group, family, &EstimateConfig::default())?,
    };
    let param_error = cfg.truth.param_distance(&est.best)?;
    let exact_recovery = param_error <= RECOVERY_TOL * (1.0 + cfg.truth.param_norm());
    Ok(TrialRecord {
        seed: cfg.master_seed,
        estimated: est.best,
        param_error,
        exact_recovery,
        objective: est.objective,
        pos_size: est.pos_size,
    })
}

/// Sweeps the (p, inlier ratio) grid: each cell runs `trials` independent
/// seeded trials with `n_ideal = round(ratio * m_noise)` and the sub-linear
/// family at that cell's p. The analytic sufficient ratio at the 99.9%
/// confidence exponent is overlaid per cell. Deterministic in
/// `base.master_seed`; trials run in parallel but are aggregated by index.
pub fn breakdown_profile(
    base: &ScenarioConfig,
    p_list: &[f64],
    ratio_list: &[f64],
    trials: usize,
) -> Result<RobustnessProfile> {
    if trials == 0 {
        return Err(Error::InvalidArgument("trials must be >= 1".into()));
    }
    if p_list.is_empty() || ratio_list.is_empty() {
        return Err(Error::InvalidArgument("profile grid must be nonempty".into()));
    }
    if p_list.iter().any(|&p| !(p > 0.0 && p <= 1.0)) {
        return Err(Error::InvalidArgument("profile exponents must lie in (0, 1]".into()));
    }
    if ratio_list.iter().any(|&r| !(r >= 0.0 && r.is_finite())) {
        return Err(Error::InvalidArgument("inlier ratios must be >= 0".into()));
    }
    let m = base.m_noise;
    let exponent = min_confidence_exponent(m as u64, 0.999).ok();
    let mut cells = Vec::with_capacity(p_list.len() * ratio_list.len());
    for (pi, &p) in p_list.iter().enumerate() {
        let analytic = match exponent {
            Some(a) if p < 1.0 => breakdown_ratio(p, m as u64, a),
            _ => f64::NAN,
        };
        for (ri, &ratio) in ratio_list.iter().enumerate() {
            let cell_index = (pi * ratio_list.len() + ri) as u64;
            let family = PenaltyFamily::lp(p)?;
            let n_ideal = (ratio * m as f64).round() as usize;
            let records = (0..trials)
                .into_par_iter()
                .map(|trial| {
                    let cfg = ScenarioConfig {
                        n_ideal,
                        family: family.clone(),
                        master_seed: split_seed(base.master_seed, cell_index, trial as u64),
                        ..base.clone()
                    };
                    run_trial(&cfg)
                })
                .collect::<Result<Vec<TrialRecord>>>()?;
            let recoveries = records.iter().filter(|r| r.exact_recovery).count();
            cells.push(ProfileCell {
                p,
                inlier_ratio: ratio,
                trials,
                recoveries,
                rate: recoveries as f64 / trials as f64,
                analytic_bound: analytic,
                records,
            });
        }
    }
    Ok(RobustnessProfile { cells })
}

/// Samples `m` uniforms per trial, sorts them, and checks that every order
/// statistic stays within `m^(a-1)` of its mean `i/m`; returns the fraction
/// of trials where all indices pass.
pub fn order_stat_check(m: usize, a: f64, trials: usize, master_seed: u64) -> f64 {
    if m == 0 || trials == 0 {
        return 0.0;
    }
    let threshold = (m as f64).powf(a - 1.0);
    let passes = (0..trials)
        .into_par_iter()
        .filter(|&trial| {
            let mut rng = ChaCha8Rng::seed_from_u64(split_seed(master_seed, 0, trial as u64));
            let mut draws: Vec<f64> = (0..m).map(|_| rng.gen()).collect();
            draws.sort_unstable_by(f64::total_cmp);
            draws
                .iter()
                .enumerate()
                .all(|(i, &d)| (d - (i as f64 + 1.0) / m as f64).abs() < threshold)
        })
        .count();
    passes as f64 / trials as f64
}
