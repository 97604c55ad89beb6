use std::fmt::Write as _;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{ArgAction, Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use fran_core::bounds::{cutset_constraints, pipelined_lower_bound_detail, serial_lower_bound};
use fran_core::delivery::{latency_from_report, run_delivery};
use fran_core::formulas::{best_scheme, ndt_breakdown};
use fran_core::placement::{empirical_fragment_stats, partition_files, place_caches};
use fran_core::{DemandVector, NdtBreakdown, Scheme, Stage, SystemConfig, Transmission};

use crate::analysis::{self, AnalysisError, OptimalityGrid, PropertyCheck};
use crate::config::FileConfig;
use crate::output::{emit_table, fmt_g12, Format, OutputError, TableRow};

pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_CLAIM_VIOLATED: i32 = 3;
pub const EXIT_DECODE_FAILURE: i32 = 4;

#[derive(Debug, Parser)]
#[command(
    name = "fran",
    version,
    about = "NDT of decentralized coded caching in fog radio access networks"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub shared: Shared,
}

#[derive(Debug, Clone, Default, Args)]
pub struct Shared {
    /// Number of edge nodes
    #[arg(long, global = true)]
    pub kt: Option<usize>,
    /// Number of users
    #[arg(long, global = true)]
    pub kr: Option<usize>,
    /// Library size (defaults to kr)
    #[arg(long, global = true)]
    pub files: Option<usize>,
    /// Normalized EN cache size
    #[arg(long = "mu-t", global = true, allow_negative_numbers = true)]
    pub mu_t: Option<f64>,
    /// Normalized user cache size
    #[arg(long = "mu-r", global = true, allow_negative_numbers = true)]
    pub mu_r: Option<f64>,
    /// Fronthaul multiplexing gain
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub r: Option<f64>,
    /// Bits per file (simulate)
    #[arg(long, global = true)]
    pub bits: Option<usize>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Grid step on the cache-size axes
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub step: Option<f64>,
    #[arg(long, value_enum, global = true)]
    pub format: Option<Format>,
    #[arg(short, long, global = true)]
    pub output: Option<PathBuf>,
    /// JSON file with any of: kt, kr, files, mu_t, mu_r, r, bits, seed, step
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(short, long, action = ArgAction::Count, global = true)]
    pub verbose: u8,
}

#[derive(Debug, Clone, Subcommand)]
pub enum Command {
    /// Per-stage and aggregate achievable NDT
    Eval,
    /// Cut-set lower bounds (any kt)
    Bound,
    /// Gap between achievable NDT and lower bounds over (mu_t, mu_r)
    Sweep,
    /// Full EN caches against the single-antenna baseline, over mu_r
    Compare,
    /// Check the optimality claims at mu_r = 0
    Optimality,
    /// Bit-level placement and delivery
    Simulate(SimulateArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Stage5 {
    A,
    B,
}

#[derive(Debug, Clone, Args)]
pub struct SimulateArgs {
    /// Stage-5 variant
    #[arg(long, value_enum, default_value = "a")]
    pub stage5: Stage5,
    /// Comma-separated 1-based file per user (default: user k requests file k)
    #[arg(long, value_delimiter = ',')]
    pub demands: Option<Vec<usize>>,
    /// Also write per-fragment placement statistics as CSV
    #[arg(long)]
    pub placement_stats: Option<PathBuf>,
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Invalid(String),
    #[error("{0}")]
    ClaimViolated(String),
    #[error("{0}")]
    Decode(String),
    #[error(transparent)]
    Other(#[from] anyhow::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Invalid(_) => EXIT_USAGE,
            CliError::ClaimViolated(_) => EXIT_CLAIM_VIOLATED,
            CliError::Decode(_) => EXIT_DECODE_FAILURE,
            CliError::Other(_) => EXIT_FAILURE,
        }
    }
}

impl From<fran_core::Error> for CliError {
    fn from(e: fran_core::Error) -> Self {
        use fran_core::Error as E;
        match e {
            E::DecodeFailure { .. }
            | E::Unrecoverable { .. }
            | E::DuplicateDelivery { .. }
            | E::SenderMissingData { .. } => CliError::Decode(e.to_string()),
            E::Infeasible => CliError::Other(anyhow::Error::new(e)),
            _ => CliError::Invalid(e.to_string()),
        }
    }
}

impl From<AnalysisError> for CliError {
    fn from(e: AnalysisError) -> Self {
        match e {
            AnalysisError::Model(e) => e.into(),
            other => CliError::Invalid(other.to_string()),
        }
    }
}

impl From<OutputError> for CliError {
    fn from(e: OutputError) -> Self {
        match e {
            OutputError::EmptyPath => CliError::Invalid(e.to_string()),
            other => CliError::Other(other.into()),
        }
    }
}

/// Flags merged over the optional config file, with defaults filled in.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Settings {
    pub cfg: SystemConfig,
    pub step: f64,
}

impl Shared {
    fn as_file_config(&self) -> FileConfig {
        FileConfig {
            kt: self.kt,
            kr: self.kr,
            files: self.files,
            mu_t: self.mu_t,
            mu_r: self.mu_r,
            r: self.r,
            bits: self.bits,
            seed: self.seed,
            step: self.step,
        }
    }

    pub fn settings(&self) -> Result<Settings, CliError> {
        let base = match &self.config {
            Some(path) => FileConfig::load(path).map_err(|e| CliError::Invalid(format!("{e:#}")))?,
            None => FileConfig::default(),
        };
        let m = self.as_file_config().overlay(base);
        let kr = m.kr.unwrap_or(2);
        let cfg = SystemConfig {
            kt: m.kt.unwrap_or(2),
            kr,
            n_files: m.files.unwrap_or(kr),
            mu_t: m.mu_t.unwrap_or(0.0),
            mu_r: m.mu_r.unwrap_or(0.0),
            r: m.r.unwrap_or(1.0),
            file_bits: m.bits.unwrap_or(10_000),
            seed: m.seed.unwrap_or(0),
        }
        .validate()?;
        Ok(Settings {
            cfg,
            step: m.step.unwrap_or(0.01),
        })
    }
}

fn write_doc(dest: Option<&Path>, text: &str) -> Result<(), CliError> {
    match dest {
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes()).map_err(anyhow::Error::from)?;
        }
        Some(path) if path.as_os_str().is_empty() => return Err(OutputError::EmptyPath.into()),
        Some(path) => std::fs::write(path, text).map_err(|source| OutputError::Io {
            path: path.to_path_buf(),
            source,
        })?,
    }
    Ok(())
}

fn json<T: Serialize>(value: &T) -> Result<String, CliError> {
    let mut s = serde_json::to_string_pretty(value).map_err(anyhow::Error::from)?;
    s.push('\n');
    Ok(s)
}

fn scheme_name(s: Scheme) -> &'static str {
    match s {
        Scheme::A => "a",
        Scheme::B => "b",
    }
}

#[derive(Serialize)]
struct StageRow {
    stage: Stage,
    fronthaul: f64,
    edge: f64,
}

impl TableRow for StageRow {
    fn header() -> &'static [&'static str] {
        &["stage", "fronthaul", "edge"]
    }

    fn cells(&self) -> Vec<String> {
        vec![self.stage.as_str().into(), fmt_g12(self.fronthaul), fmt_g12(self.edge)]
    }
}

#[derive(Serialize)]
struct EvalOutput<'a> {
    config: &'a SystemConfig,
    #[serde(flatten)]
    ndt: &'a NdtBreakdown,
    best_serial: Scheme,
    best_pipelined: Scheme,
}

fn cmd_eval(shared: &Shared, s: &Settings) -> Result<(), CliError> {
    let ndt = ndt_breakdown(&s.cfg)?;
    let best_serial = best_scheme(&s.cfg, Transmission::Serial)?;
    let best_pipelined = best_scheme(&s.cfg, Transmission::Pipelined)?;
    let dest = shared.output.as_deref();
    match shared.format {
        Some(Format::Json) => write_doc(
            dest,
            &json(&EvalOutput {
                config: &s.cfg,
                ndt: &ndt,
                best_serial,
                best_pipelined,
            })?,
        ),
        Some(Format::Csv) => {
            let rows: Vec<StageRow> = ndt
                .per_stage
                .iter()
                .map(|st| StageRow {
                    stage: st.stage,
                    fronthaul: st.fronthaul,
                    edge: st.edge,
                })
                .collect();
            Ok(emit_table(&rows, Format::Csv, dest)?)
        }
        None => {
            let mut t = String::new();
            writeln!(t, "{:<6} {:>16} {:>16}", "stage", "fronthaul", "edge").unwrap();
            for st in &ndt.per_stage {
                writeln!(
                    t,
                    "{:<6} {:>16} {:>16}",
                    st.stage.as_str(),
                    fmt_g12(st.fronthaul),
                    fmt_g12(st.edge)
                )
                .unwrap();
            }
            for (name, pair) in [("a", ndt.scheme_a), ("b", ndt.scheme_b)] {
                writeln!(
                    t,
                    "scheme {name}: fronthaul {} edge {}",
                    fmt_g12(pair.fronthaul),
                    fmt_g12(pair.edge)
                )
                .unwrap();
            }
            writeln!(
                t,
                "serial {} (scheme {})",
                fmt_g12(ndt.serial),
                scheme_name(best_serial)
            )
            .unwrap();
            writeln!(
                t,
                "pipelined {} (scheme {})",
                fmt_g12(ndt.pipelined),
                scheme_name(best_pipelined)
            )
            .unwrap();
            write_doc(dest, &t)
        }
    }
}

#[derive(Serialize)]
struct ConstraintRow {
    s: usize,
    edge_coeff: f64,
    fronthaul_coeff: f64,
    rhs: f64,
    active: bool,
}

impl TableRow for ConstraintRow {
    fn header() -> &'static [&'static str] {
        &["s", "edge_coeff", "fronthaul_coeff", "rhs", "active"]
    }

    fn cells(&self) -> Vec<String> {
        vec![
            self.s.to_string(),
            fmt_g12(self.edge_coeff),
            fmt_g12(self.fronthaul_coeff),
            fmt_g12(self.rhs),
            self.active.to_string(),
        ]
    }
}

fn cmd_bound(shared: &Shared, s: &Settings) -> Result<(), CliError> {
    let serial = serial_lower_bound(&s.cfg)?;
    let pipelined = pipelined_lower_bound_detail(&s.cfg)?;
    let constraints: Vec<ConstraintRow> = cutset_constraints(&s.cfg)
        .into_iter()
        .map(|c| ConstraintRow {
            s: c.s,
            edge_coeff: c.edge_coeff,
            fronthaul_coeff: c.fronthaul_coeff,
            rhs: c.rhs,
            active: serial.active_constraints.contains(&c.s),
        })
        .collect();
    let dest = shared.output.as_deref();
    match shared.format {
        Some(Format::Json) => {
            #[derive(Serialize)]
            struct Out<'a> {
                config: &'a SystemConfig,
                serial: &'a fran_core::LowerBoundResult,
                pipelined: &'a fran_core::PipelinedBound,
                constraints: &'a [ConstraintRow],
            }
            write_doc(
                dest,
                &json(&Out {
                    config: &s.cfg,
                    serial: &serial,
                    pipelined: &pipelined,
                    constraints: &constraints,
                })?,
            )
        }
        Some(Format::Csv) => Ok(emit_table(&constraints, Format::Csv, dest)?),
        None => {
            let mut t = String::new();
            writeln!(
                t,
                "serial lower bound {} at fronthaul {} edge {}",
                fmt_g12(serial.delta_lb),
                fmt_g12(serial.delta_f),
                fmt_g12(serial.delta_e)
            )
            .unwrap();
            writeln!(t, "active cut-set constraints s = {:?}", serial.active_constraints).unwrap();
            writeln!(t, "edge floor active: {}", serial.edge_floor_active).unwrap();
            let arg = pipelined.argmax_s.map_or("floor".to_string(), |s| format!("s = {s}"));
            writeln!(t, "pipelined lower bound {} ({arg})", fmt_g12(pipelined.value)).unwrap();
            write_doc(dest, &t)
        }
    }
}

fn cmd_sweep(shared: &Shared, s: &Settings) -> Result<(), CliError> {
    let sweep = analysis::gap_sweep(s.cfg.kr, s.cfg.r, s.step)?;
    let format = shared.format.unwrap_or(Format::Csv);
    emit_table(&sweep.rows, format, shared.output.as_deref())?;
    eprintln!(
        "max gap_s {} at mu_t={} mu_r={}",
        fmt_g12(sweep.max_gap_s.gap),
        fmt_g12(sweep.max_gap_s.mu_t),
        fmt_g12(sweep.max_gap_s.mu_r)
    );
    eprintln!(
        "max gap_p {} at mu_t={} mu_r={}",
        fmt_g12(sweep.max_gap_p.gap),
        fmt_g12(sweep.max_gap_p.mu_t),
        fmt_g12(sweep.max_gap_p.mu_r)
    );
    Ok(())
}

fn cmd_compare(shared: &Shared, s: &Settings) -> Result<(), CliError> {
    let rows = analysis::compare_baseline(s.cfg.kr, s.step)?;
    Ok(emit_table(
        &rows,
        shared.format.unwrap_or(Format::Csv),
        shared.output.as_deref(),
    )?)
}

fn describe(check: &PropertyCheck) -> String {
    if check.passed() {
        return format!(
            "{} pass ({} points, max ratio {})",
            check.name,
            check.checked,
            fmt_g12(check.max_ratio)
        );
    }
    let worst = check
        .violations
        .iter()
        .max_by(|a, b| a.ratio.total_cmp(&b.ratio))
        .expect("violations present");
    format!(
        "{} FAIL ({} of {} points, worst ratio {} at mu_t={} r={})",
        check.name,
        check.violations.len(),
        check.checked,
        fmt_g12(worst.ratio),
        fmt_g12(worst.mu_t),
        fmt_g12(worst.r)
    )
}

fn cmd_optimality(shared: &Shared, s: &Settings) -> Result<(), CliError> {
    let report = analysis::optimality_check(s.cfg.kr, OptimalityGrid::default())?;
    let dest = shared.output.as_deref();
    match shared.format {
        Some(Format::Json) => write_doc(dest, &json(&report)?)?,
        Some(Format::Csv) => return Err(CliError::Invalid("optimality supports --format json only".into())),
        None => {
            let text = format!(
                "P1 {}\nP2 {}\nunverified region: {} points\n",
                describe(&report.p1),
                describe(&report.p2),
                report.unverified
            );
            write_doc(dest, &text)?;
        }
    }
    if report.passed() {
        Ok(())
    } else {
        Err(CliError::ClaimViolated(format!(
            "optimality claims violated at {} grid points",
            report.p1.violations.len() + report.p2.violations.len()
        )))
    }
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct StageDelta {
    pub stage: Stage,
    pub fronthaul: f64,
    pub edge: f64,
}

#[derive(Serialize)]
struct SimulationOutput<'a> {
    config: &'a SystemConfig,
    #[serde(flatten)]
    report: &'a fran_core::DeliveryReport,
    decode_ok: bool,
    ndt: &'a NdtBreakdown,
    analytic: &'a NdtBreakdown,
    deltas: Vec<StageDelta>,
}

#[derive(Serialize)]
struct TrafficRow {
    stage: Stage,
    fronthaul_bits: u64,
    edge_bits: u64,
    messages: usize,
    fronthaul_ndt: f64,
    edge_ndt: f64,
    analytic_fronthaul: f64,
    analytic_edge: f64,
}

impl TableRow for TrafficRow {
    fn header() -> &'static [&'static str] {
        &[
            "stage",
            "fronthaul_bits",
            "edge_bits",
            "messages",
            "fronthaul_ndt",
            "edge_ndt",
            "analytic_fronthaul",
            "analytic_edge",
        ]
    }

    fn cells(&self) -> Vec<String> {
        vec![
            self.stage.as_str().into(),
            self.fronthaul_bits.to_string(),
            self.edge_bits.to_string(),
            self.messages.to_string(),
            fmt_g12(self.fronthaul_ndt),
            fmt_g12(self.edge_ndt),
            fmt_g12(self.analytic_fronthaul),
            fmt_g12(self.analytic_edge),
        ]
    }
}

fn cmd_simulate(shared: &Shared, s: &Settings, args: &SimulateArgs) -> Result<(), CliError> {
    let cfg = s.cfg;
    cfg.require_two_ens()?;
    let demands = match &args.demands {
        Some(d) => DemandVector::new(d.clone(), cfg.kr, cfg.n_files)?,
        None => DemandVector::worst_case(cfg.kr, cfg.n_files)?,
    };
    let scheme = match args.stage5 {
        Stage5::A => Scheme::A,
        Stage5::B => Scheme::B,
    };
    let t0 = Instant::now();
    let state = place_caches(&cfg)?;
    let partition = partition_files(&state);
    if let Some(path) = &args.placement_stats {
        let stats = empirical_fragment_stats(&partition, &cfg)?;
        emit_table(&stats, Format::Csv, Some(path))?;
    }
    let report = run_delivery(&state, &partition, &demands, scheme)?;
    if shared.verbose > 0 {
        eprintln!("simulated in {:.3} s", t0.elapsed().as_secs_f64());
    }
    let ndt = latency_from_report(&report, &cfg)?;
    let analytic = ndt_breakdown(&cfg)?;
    let dest = shared.output.as_deref();
    match shared.format {
        Some(Format::Csv) => {
            let rows: Vec<TrafficRow> = report
                .stages
                .iter()
                .map(|t| {
                    let emp = ndt.stage(t.stage).expect("all stages present");
                    let ana = analytic.stage(t.stage).expect("all stages present");
                    TrafficRow {
                        stage: t.stage,
                        fronthaul_bits: t.fronthaul_bits,
                        edge_bits: t.edge_bits,
                        messages: t.messages,
                        fronthaul_ndt: emp.fronthaul,
                        edge_ndt: emp.edge,
                        analytic_fronthaul: ana.fronthaul,
                        analytic_edge: ana.edge,
                    }
                })
                .collect();
            emit_table(&rows, Format::Csv, dest)?;
        }
        _ => {
            let deltas = ndt
                .per_stage
                .iter()
                .zip(&analytic.per_stage)
                .map(|(e, a)| StageDelta {
                    stage: e.stage,
                    fronthaul: e.fronthaul - a.fronthaul,
                    edge: e.edge - a.edge,
                })
                .collect();
            write_doc(
                dest,
                &json(&SimulationOutput {
                    config: &cfg,
                    report: &report,
                    decode_ok: report.all_decoded(),
                    ndt: &ndt,
                    analytic: &analytic,
                    deltas,
                })?,
            )?;
        }
    }
    report.verify()?;
    Ok(())
}

pub fn run(cli: &Cli) -> Result<(), CliError> {
    let t0 = Instant::now();
    let settings = cli.shared.settings()?;
    let shared = &cli.shared;
    let result = match &cli.command {
        Command::Eval => cmd_eval(shared, &settings),
        Command::Bound => cmd_bound(shared, &settings),
        Command::Sweep => cmd_sweep(shared, &settings),
        Command::Compare => cmd_compare(shared, &settings),
        Command::Optimality => cmd_optimality(shared, &settings),
        Command::Simulate(args) => cmd_simulate(shared, &settings, args),
    };
    if shared.verbose > 0 {
        eprintln!("done in {:.3} s", t0.elapsed().as_secs_f64());
    }
    result
}
