//! `lpfit`: synthetic experiment generation, robust transform estimation,
//! analytic bound tables, and Monte Carlo recovery profiles.
//!
//! Exit codes: 0 success, 1 usage or I/O error, 2 degenerate data (nothing
//! usable left for the requested group).

use std::fs::File;
use std::io::{self, BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use lpfit_core::{
    anneal_p, breakdown_profile, breakdown_ratio, estimate, estimate_l0, generate_experiment,
    min_confidence_exponent, split_seed, AnnealSchedule, EstimateConfig, EstimationResult,
    Experiment, NoiseModel, PenaltyFamily, ScenarioConfig, Transform, TransformGroup,
};

#[derive(Parser)]
#[command(name = "lpfit", version, about = "Super-robust transformation estimation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic experiment file.
    Generate(GenerateArgs),
    /// Estimate a transform from an experiment file.
    Estimate(EstimateArgs),
    /// Emit the analytic bound tables as CSV.
    Bounds(BoundsArgs),
    /// Sweep a (p, inlier ratio) recovery-rate grid.
    Profile(ProfileArgs),
}

#[derive(Args)]
struct GenerateArgs {
    #[arg(long, value_parser = parse_group)]
    group: TransformGroup,
    #[arg(long)]
    dim: usize,
    /// Ideal (perfect) pair count.
    #[arg(long)]
    n: usize,
    /// Noise pair count.
    #[arg(long)]
    m: usize,
    /// Noise model: uniform:<max> or powerlaw:<k>.
    #[arg(long, value_parser = parse_noise)]
    noise: NoiseModel,
    #[arg(long)]
    seed: u64,
    /// Truth parameters (comma-separated); drawn from the seed when omitted.
    #[arg(long, value_delimiter = ',', num_args = 1..)]
    truth: Option<Vec<f64>>,
    /// Output path (stdout when omitted).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct EstimateArgs {
    /// Experiment JSON file.
    input: PathBuf,
    #[arg(long, value_parser = parse_group)]
    group: TransformGroup,
    /// Penalty family: lp:<p>, l0:<tol>, or sr:<p>,<q>,<k>.
    #[arg(long, value_parser = parse_family)]
    family: PenaltyFamily,
    /// Run the decreasing-exponent schedule instead of a single family fit.
    #[arg(long)]
    anneal: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum TableKind {
    /// Concentration exponents per noise count.
    A,
    /// Sufficient inlier ratios per exponent p.
    Breakdown,
}

#[derive(Args)]
struct BoundsArgs {
    #[arg(long, value_enum)]
    table: TableKind,
    /// Confidence target for the concentration exponent.
    #[arg(long, default_value_t = 0.999)]
    target: f64,
    #[arg(long, default_value_t = 100)]
    m_start: u64,
    #[arg(long, default_value_t = 1000)]
    m_end: u64,
    #[arg(long, default_value_t = 100)]
    m_step: u64,
    /// Noise count for the breakdown table.
    #[arg(long, default_value_t = 1000)]
    m: u64,
    #[arg(long, default_value_t = 0.05)]
    p_start: f64,
    #[arg(long, default_value_t = 0.50)]
    p_end: f64,
    #[arg(long, default_value_t = 0.05)]
    p_step: f64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ProfileArgs {
    #[arg(long, value_parser = parse_group)]
    group: TransformGroup,
    #[arg(long)]
    dim: usize,
    /// Noise pair count per trial.
    #[arg(long)]
    m: usize,
    #[arg(long, value_delimiter = ',', num_args = 1..)]
    p_list: Vec<f64>,
    #[arg(long, value_delimiter = ',', num_args = 1..)]
    ratio_list: Vec<f64>,
    #[arg(long)]
    trials: usize,
    #[arg(long, value_parser = parse_noise)]
    noise: NoiseModel,
    #[arg(long)]
    seed: u64,
    /// Truth parameters (comma-separated); drawn from the seed when omitted.
    #[arg(long, value_delimiter = ',', num_args = 1..)]
    truth: Option<Vec<f64>>,
    /// Profile CSV path (stdout when omitted).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Optional JSONL dump of every trial record.
    #[arg(long)]
    records: Option<PathBuf>,
}

fn parse_group(s: &str) -> Result<TransformGroup, String> {
    s.parse().map_err(|e| format!("{e}"))
}

fn parse_family(s: &str) -> Result<PenaltyFamily, String> {
    s.parse().map_err(|e| format!("{e}"))
}

fn parse_noise(s: &str) -> Result<NoiseModel, String> {
    let (kind, value) = s
        .split_once(':')
        .ok_or_else(|| format!("noise spec '{s}': expected uniform:<max> or powerlaw:<k>"))?;
    let value: f64 = value.parse().map_err(|_| format!("noise spec '{s}': malformed number"))?;
    let model = match kind {
        "uniform" => NoiseModel::UniformRadius { max: value },
        "powerlaw" => NoiseModel::PowerLaw { k: value },
        other => return Err(format!("noise spec '{s}': unknown model '{other}'")),
    };
    model.validate().map_err(|e| format!("{e}"))?;
    Ok(model)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let is_usage_error = e.use_stderr();
            let _ = e.print();
            return if is_usage_error { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) if is_broken_pipe(&err) => ExitCode::SUCCESS, // e.g. `lpfit bounds | head`
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code_for(&err))
        }
    }
}

fn is_broken_pipe(err: &anyhow::Error) -> bool {
    err.chain().any(|cause| {
        if let Some(io_err) = cause.downcast_ref::<io::Error>() {
            return io_err.kind() == io::ErrorKind::BrokenPipe;
        }
        if let Some(json_err) = cause.downcast_ref::<serde_json::Error>() {
            return json_err.io_error_kind() == Some(io::ErrorKind::BrokenPipe);
        }
        false
    })
}

fn exit_code_for(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if let Some(core) = cause.downcast_ref::<lpfit_core::Error>() {
            if matches!(
                core,
                lpfit_core::Error::DegenerateExperiment(_) | lpfit_core::Error::EmptyExperiment
            ) {
                return 2;
            }
        }
    }
    1
}

fn run(command: Command) -> anyhow::Result<()> {
    match command {
        Command::Generate(args) => cmd_generate(args),
        Command::Estimate(args) => cmd_estimate(args),
        Command::Bounds(args) => cmd_bounds(args),
        Command::Profile(args) => cmd_profile(args),
    }
}

/// Namespace for deriving truth parameters from the master seed, kept
/// disjoint from the cell/trial seed space.
const TRUTH_SEED_CELL: u64 = 0x0074_5255_5448;

fn derive_truth(
    group: TransformGroup,
    dim: usize,
    seed: u64,
    params: Option<Vec<f64>>,
) -> anyhow::Result<Transform> {
    if let Some(params) = params {
        return Ok(Transform::new(group, params)?);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(split_seed(seed, TRUTH_SEED_CELL, 0));
    let params = match group {
        TransformGroup::Translation => (0..dim).map(|_| rng.gen_range(-5.0..5.0)).collect(),
        TransformGroup::UniformScaling => vec![rng.gen_range(0.5..3.0)],
        TransformGroup::NonUniformScaling => (0..dim).map(|_| rng.gen_range(0.5..3.0)).collect(),
        TransformGroup::Rotation2D => vec![rng.gen_range(0.0..std::f64::consts::TAU)],
    };
    Ok(Transform::new(group, params)?)
}

fn open_output(path: Option<&Path>) -> anyhow::Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).with_context(|| format!("cannot create {}", p.display()))?,
        )),
        None => Box::new(io::stdout().lock()),
    })
}

fn cmd_generate(args: GenerateArgs) -> anyhow::Result<()> {
    let truth = derive_truth(args.group, args.dim, args.seed, args.truth)?;
    let cfg = ScenarioConfig {
        group: args.group,
        dim: args.dim,
        n_ideal: args.n,
        m_noise: args.m,
        truth,
        noise: args.noise,
        family: PenaltyFamily::Lp { p: 0.5 }, // unused by generation
        master_seed: args.seed,
    };
    let exp = generate_experiment(&cfg)?;
    let mut out = open_output(args.out.as_deref())?;
    serde_json::to_writer_pretty(&mut out, &exp)?;
    writeln!(out)?;
    out.flush()?;
    Ok(())
}

#[derive(Serialize)]
struct EstimateReport {
    group: String,
    params: Vec<f64>,
    objective: f64,
    pos_size: usize,
    candidates_evaluated: usize,
    refinement_steps: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    p_final: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    anneal_steps: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    matches_l0: Option<bool>,
}

impl EstimateReport {
    fn from_result(res: &EstimationResult) -> Self {
        Self {
            group: res.best.group().to_string(),
            params: res.best.params().to_vec(),
            objective: res.objective,
            pos_size: res.pos_size,
            candidates_evaluated: res.candidates_evaluated,
            refinement_steps: res.refinement_steps,
            p_final: None,
            anneal_steps: None,
            matches_l0: None,
        }
    }
}

fn cmd_estimate(args: EstimateArgs) -> anyhow::Result<()> {
    let file = File::open(&args.input)
        .with_context(|| format!("cannot open {}", args.input.display()))?;
    let mut text = String::new();
    BufReader::new(file).read_to_string(&mut text)?;
    let exp: Experiment = serde_json::from_str(&text)
        .with_context(|| format!("{} is not a valid experiment", args.input.display()))?;
    let sane = exp.sanitize(args.group)?;
    let config = EstimateConfig::default();
    let report = if args.anneal {
        let res = anneal_p(&sane, args.group, &AnnealSchedule::default(), &config)?;
        let mut report = EstimateReport::from_result(&res.estimate);
        report.p_final = Some(res.p_final);
        report.anneal_steps = Some(res.steps);
        report.matches_l0 = Some(res.matches_l0);
        report
    } else {
        let res = match &args.family {
            PenaltyFamily::L0 { tol } => estimate_l0(&sane, args.group, *tol)?,
            family => estimate(&sane, args.group, family, &config)?,
        };
        EstimateReport::from_result(&res)
    };
    let mut out = open_output(args.out.as_deref())?;
    serde_json::to_writer_pretty(&mut out, &report)?;
    writeln!(out)?;
    out.flush()?;
    Ok(())
}

fn cmd_bounds(args: BoundsArgs) -> anyhow::Result<()> {
    let mut out = open_output(args.out.as_deref())?;
    match args.table {
        TableKind::A => {
            if args.m_step == 0 || args.m_end < args.m_start {
                return Err(anyhow!("empty noise-count range"));
            }
            writeln!(out, "M,a")?;
            let mut m = args.m_start;
            while m <= args.m_end {
                let a = min_confidence_exponent(m, args.target)?;
                writeln!(out, "{m},{a:.3}")?;
                m += args.m_step;
            }
        }
        TableKind::Breakdown => {
            if args.p_step.is_nan() || args.p_step <= 0.0 || args.p_end < args.p_start {
                return Err(anyhow!("empty exponent range"));
            }
            let a = min_confidence_exponent(args.m, args.target)?;
            writeln!(out, "p,n_over_M")?;
            let steps = ((args.p_end - args.p_start) / args.p_step + 1e-9).floor() as usize;
            for i in 0..=steps {
                let p = args.p_start + i as f64 * args.p_step;
                writeln!(out, "{:.2},{:.2}", p, breakdown_ratio(p, args.m, a))?;
            }
        }
    }
    out.flush()?;
    Ok(())
}

fn cmd_profile(args: ProfileArgs) -> anyhow::Result<()> {
    let truth = derive_truth(args.group, args.dim, args.seed, args.truth)?;
    let base = ScenarioConfig {
        group: args.group,
        dim: args.dim,
        n_ideal: 0, // set per cell by the sweep
        m_noise: args.m,
        truth,
        noise: args.noise,
        family: PenaltyFamily::Lp { p: 0.5 }, // set per cell by the sweep
        master_seed: args.seed,
    };
    let profile = breakdown_profile(&base, &args.p_list, &args.ratio_list, args.trials)?;
    let mut out = open_output(args.out.as_deref())?;
    profile.write_csv(&mut out)?;
    out.flush()?;
    if let Some(path) = &args.records {
        let mut w = BufWriter::new(
            File::create(path).with_context(|| format!("cannot create {}", path.display()))?,
        );
        for cell in &profile.cells {
            for record in &cell.records {
                serde_json::to_writer(&mut w, record)?;
                writeln!(w)?;
            }
        }
        w.flush()?;
    }
    Ok(())
}
