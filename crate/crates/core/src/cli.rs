//! Command-line orchestration: forward symbol runs, recovery, round trips and
//! the invariant checks.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dump::{write_atomic, SymbolDump};
use crate::error::{Error, Result};
use crate::geometry::Geometry;
use crate::jets::JetMatrix;
use crate::recovery::{
    boundary_derivative, boundary_domain, forward_symbols, run_recovery, sample_directions, Check,
    RecoveryInput, RecoveryReport, ReportTolerances,
};
use crate::scenario::{generate_fields, generate_metric, load_config, JetOrder, ScenarioConfig};
use crate::stokes::{assemble, verify_transformation, Mutation};
use crate::symbols::{full_symbol_residual, normalize_direction, run_recursion};

pub const VERIFY_SCHEMA: &str = "stokes-dtn/verify/v1";

/// Misfit, asymmetry and imaginary-part threshold for recovered tensors.
pub const FIT_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Parser)]
#[command(name = "stokes-dtn", version, about = "Boundary symbols of the Stokes DtN map and metric recovery")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Compute the symbol sequence and write `symbols.json`.
    Forward(RunArgs),
    /// Recover the boundary metric jets from a symbol dump and write `report.json`.
    Recover(RunArgs),
    /// Forward and recover in one process, compared with the generating metric.
    Roundtrip(RunArgs),
    /// Transformation identity, homogeneity and full-symbol residual checks.
    Verify(RunArgs),
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// Scenario config (JSON).
    #[arg(long)]
    pub config: PathBuf,
    /// Output directory (overrides the config).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Scenario seed (overrides the config).
    #[arg(long)]
    pub seed: Option<u64>,
    /// Recovery depth (overrides the config).
    #[arg(long)]
    pub depth: Option<usize>,
    /// Worker threads.
    #[arg(long)]
    pub jobs: Option<usize>,
    /// Perturb one assembled entry, e.g. `C0:1,2` or `B:0,0@1e-3` (verify only).
    #[arg(long)]
    pub mutate: Option<String>,
}

/// Whether every check passed.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Outcome {
    Pass,
    Breach,
}

impl Outcome {
    fn from_checks(checks: &[Check]) -> Outcome {
        if checks.iter().all(|c| c.passed) {
            Outcome::Pass
        } else {
            Outcome::Breach
        }
    }

    pub fn exit_code(self) -> ExitCode {
        match self {
            Outcome::Pass => ExitCode::SUCCESS,
            Outcome::Breach => ExitCode::from(1),
        }
    }
}

/// Loads the config and applies command-line overrides.
pub fn scenario(args: &RunArgs) -> Result<ScenarioConfig> {
    let mut cfg = load_config(&args.config)?;
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if let Some(depth) = args.depth {
        cfg.depth = depth;
    }
    if let Some(out) = &args.out {
        cfg.output.dir = Some(out.clone());
    }
    cfg.validate()?;
    Ok(cfg)
}

pub fn output_dir(cfg: &ScenarioConfig) -> PathBuf {
    cfg.output.dir.clone().unwrap_or_else(|| PathBuf::from("out"))
}

fn symbols_path(cfg: &ScenarioConfig) -> PathBuf {
    cfg.output
        .symbols
        .clone()
        .unwrap_or_else(|| output_dir(cfg).join("symbols.json"))
}

/// Symbols of the scenario metric along the configured directions.
pub fn forward(cfg: &ScenarioConfig) -> Result<SymbolDump> {
    let metric = generate_metric(cfg)?;
    let dirs = sample_directions(cfg.directions, cfg.n - 1, cfg.seed);
    let seqs = forward_symbols(&metric, &dirs, cfg.depth)?;
    Ok(SymbolDump::new(cfg.n, cfg.depth, cfg.jet_order(), metric.mu(), &seqs))
}

/// `d_n^r g^{ab}` on the boundary of the scenario metric, `r = 0..=depth`.
pub fn ground_truth(cfg: &ScenarioConfig, depth: usize) -> Result<Vec<JetMatrix>> {
    let metric = generate_metric(cfg)?;
    let boundary = boundary_domain(cfg.n, cfg.jet_order());
    (0..=depth)
        .map(|r| boundary_derivative(&metric, r, &boundary))
        .collect()
}

/// Recovers from a dump; errors are measured against the scenario metric when
/// the dump matches the scenario's dimension and jet order.
pub fn recover(cfg: &ScenarioConfig, dump: &SymbolDump) -> Result<RecoveryReport> {
    let seqs = dump.sequences()?;
    let input = RecoveryInput {
        n: dump.n,
        depth: dump.depth,
        x_domain: dump.x_domain(),
        mu: dump.mu()?,
        sequences: &seqs,
    };
    let result = run_recovery(&input)?;
    let truth = if dump.n == cfg.n && dump.jet_order == cfg.jet_order() {
        Some(ground_truth(cfg, dump.depth)?)
    } else {
        None
    };
    Ok(RecoveryReport::new(
        &result,
        seqs.len(),
        truth.as_deref(),
        ReportTolerances {
            recovery: cfg.tolerances.recovery,
            homogeneity: cfg.tolerances.homogeneity,
            fit: FIT_TOLERANCE,
        },
    ))
}

/// Results of the invariant suites.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub schema: String,
    pub n: usize,
    pub depth: usize,
    pub jet_order: usize,
    pub mutation: Option<String>,
    pub checks: Vec<Check>,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

/// Transformation identity (at jet order at least 4), Euler homogeneity of
/// every `q_j` and the full-symbol residual for degrees `2 .. 1 - depth`
/// (symbols are computed one order deeper so every such degree is determined).
pub fn verify(cfg: &ScenarioConfig, mutation: Option<&Mutation>) -> Result<VerifyReport> {
    let tol = cfg.tolerances;
    let mut checks = Vec::new();

    let mut wide = cfg.clone();
    wide.jet_order = JetOrder::Fixed(cfg.jet_order().max(4));
    let metric = generate_metric(&wide)?;
    let geo = Geometry::new(&metric)?;
    let mut mats = assemble(&geo)?;
    if let Some(m) = mutation {
        m.apply(&mut mats, &wide.domain())?;
    }
    let (w, f) = generate_fields(&wide, &wide.domain());
    let res = verify_transformation(&geo, &mats, &w, &f)?;
    checks.push(Check::at_most("transformation identity", res.relative, tol.transformation));

    let metric = generate_metric(cfg)?;
    let mut mats = assemble(&Geometry::new(&metric)?)?;
    if let Some(m) = mutation {
        m.apply(&mut mats, &cfg.domain())?;
    }
    let dirs = sample_directions(cfg.directions, cfg.n - 1, cfg.seed);
    let per_direction = dirs
        .par_iter()
        .map(|raw| {
            let dir = normalize_direction(&metric, raw)?;
            let run = run_recursion(&metric, &mats, &dir, cfg.depth + 1)?;
            let mut out = Vec::new();
            for q in &run.sequence.symbols {
                out.push(Check::at_most(
                    format!("homogeneity q_{} at {dir:?}", q.degree),
                    q.homogeneity_defect(&run.space),
                    tol.homogeneity,
                ));
            }
            for d in full_symbol_residual(&run.sequence, &run.operator, &run.space) {
                out.push(Check::at_most(
                    format!("residual degree {} at {dir:?}", d.degree),
                    d.relative,
                    tol.residual,
                ));
            }
            Ok(out)
        })
        .collect::<Result<Vec<_>>>()?;
    checks.extend(per_direction.into_iter().flatten());

    Ok(VerifyReport {
        schema: VERIFY_SCHEMA.to_string(),
        n: cfg.n,
        depth: cfg.depth,
        jet_order: cfg.jet_order(),
        mutation: mutation.map(|m| m.to_string()),
        checks,
    })
}

fn print_checks(checks: &[Check]) {
    for c in checks {
        println!(
            "{} {}: {:.3e} (tolerance {:.1e})",
            if c.passed { "PASS" } else { "FAIL" },
            c.name,
            c.value,
            c.tolerance
        );
    }
}

fn write_report(dir: &Path, report: &RecoveryReport) -> Result<()> {
    write_atomic(&dir.join("report.json"), &report.to_json()?)?;
    write_atomic(&dir.join("report.txt"), &report.table())
}

pub fn cmd_forward(cfg: &ScenarioConfig) -> Result<Outcome> {
    let dump = forward(cfg)?;
    let path = symbols_path(cfg);
    dump.write(&path)?;
    println!(
        "wrote {} directions, q_1 .. q_{} at jet order {} to {}",
        dump.directions.len(),
        1 - dump.depth as i32,
        dump.jet_order,
        path.display()
    );
    Ok(Outcome::Pass)
}

pub fn cmd_recover(cfg: &ScenarioConfig) -> Result<Outcome> {
    let dump = SymbolDump::read(&symbols_path(cfg))?;
    let report = recover(cfg, &dump)?;
    write_report(&output_dir(cfg), &report)?;
    print!("{}", report.table());
    Ok(Outcome::from_checks(&report.checks))
}

pub fn cmd_roundtrip(cfg: &ScenarioConfig) -> Result<Outcome> {
    let dump = forward(cfg)?;
    dump.write(&symbols_path(cfg))?;
    let report = recover(cfg, &dump)?;
    write_report(&output_dir(cfg), &report)?;
    print!("{}", report.table());
    Ok(Outcome::from_checks(&report.checks))
}

pub fn cmd_verify(cfg: &ScenarioConfig, mutation: Option<&Mutation>) -> Result<Outcome> {
    let report = verify(cfg, mutation)?;
    write_atomic(
        &output_dir(cfg).join("verify.json"),
        &serde_json::to_string_pretty(&report)?,
    )?;
    print_checks(&report.checks);
    Ok(Outcome::from_checks(&report.checks))
}

/// Runs a parsed command line.
pub fn run(cli: &Cli) -> Result<Outcome> {
    let (args, verify) = match &cli.command {
        Command::Forward(a) | Command::Recover(a) | Command::Roundtrip(a) => (a, false),
        Command::Verify(a) => (a, true),
    };
    if let Some(jobs) = args.jobs {
        // A second call in the same process keeps the existing pool.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(jobs).build_global();
    }
    let mutation = match &args.mutate {
        Some(_) if !verify => {
            return Err(Error::Config {
                field: "--mutate".into(),
                message: "only supported by `verify`".into(),
            })
        }
        Some(s) => Some(s.parse::<Mutation>()?),
        None => None,
    };
    let cfg = scenario(args)?;
    let context = |e: Error| Error::Config {
        field: format!("scenario n = {}, depth = {}, seed = {}", cfg.n, cfg.depth, cfg.seed),
        message: e.to_string(),
    };
    let outcome = match &cli.command {
        Command::Forward(_) => cmd_forward(&cfg),
        Command::Recover(_) => cmd_recover(&cfg),
        Command::Roundtrip(_) => cmd_roundtrip(&cfg),
        Command::Verify(_) => cmd_verify(&cfg, mutation.as_ref()),
    };
    outcome.map_err(context)
}

/// Process entry point: exit 0 when every check passes, 1 on a tolerance
/// breach, 2 on usage or configuration errors.
pub fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(outcome) => outcome.exit_code(),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
