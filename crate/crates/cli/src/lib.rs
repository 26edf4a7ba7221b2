//! Command-line front end for `osc-transport`.
//!
//! Exit codes: 0 ok, 1 usage/parse/I/O, 2 infeasible or unsupported input,
//! 3 verification failure. All quantities are SI; scaled values appear only
//! under `diagnostics`.

pub mod output;

use std::ffi::OsString;
use std::fmt::Display;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use osc_transport::fixed::{sweep_distance, sweep_omega, t_abs};
use osc_transport::oracle::{search_fixed, search_variable, OracleResult, SearchSpec};
use osc_transport::pmp::{certify_fixed, certify_variable, VerificationReport};
use osc_transport::variable::sweep_surface;
use osc_transport::{
    boundary_residual, simulate, solve_fixed, solve_variable, Band, BoundaryReport, Error, FixedSolution, PhaseState,
    Protocol, RegionClass, Scaling, SequenceKind, TransportParams, VariableSolution,
};
use serde::{Deserialize, Serialize};

use output::{emit, to_json, Cell, Csv};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Parser)]
#[command(name = "osc-transport", version, about = "Time-optimal transport of a wagon carrying a harmonic oscillator", allow_negative_numbers = true)]
pub struct Cli {
    /// Worker threads for sweeps and oracle searches.
    #[arg(long, global = true, env = "OSC_TRANSPORT_JOBS")]
    pub jobs: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Optimal protocol for a fixed frequency or a frequency band.
    #[command(allow_negative_numbers = true)]
    Solve {
        #[command(flatten)]
        problem: ProblemArgs,
        #[arg(long, short)]
        output: Option<PathBuf>,
    },
    /// Simulates a protocol (or a solution document) and checks the end state.
    #[command(allow_negative_numbers = true)]
    Simulate {
        /// Protocol file or solution document.
        #[arg(long)]
        protocol: PathBuf,
        /// Target distance; defaults to `params.d` of a solution document.
        #[arg(long)]
        d: Option<f64>,
        /// Sample step; defaults to 1/1000 of the duration.
        #[arg(long)]
        step: Option<f64>,
        /// Boundary tolerance, relative to max(1, d).
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
        /// Trajectory CSV (t, x_h, v_h, x_w, v_w).
        #[arg(long, short)]
        output: Option<PathBuf>,
        /// Boundary report; stdout when omitted.
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Checks the maximum-principle conditions for a solution document.
    Verify {
        #[arg(long)]
        solution: PathBuf,
        #[arg(long, short)]
        output: Option<PathBuf>,
    },
    /// Brute-force search for a faster protocol.
    #[command(allow_negative_numbers = true)]
    Oracle {
        #[command(flatten)]
        problem: ProblemArgs,
        #[arg(long)]
        max_switches: Option<usize>,
        /// Grid step in scaled time.
        #[arg(long, default_value_t = 1e-2)]
        grid: f64,
        #[arg(long, default_value_t = 60)]
        refine: usize,
        #[arg(long)]
        no_asymmetric: bool,
        /// Drop the oscillator (fixed frequency only).
        #[arg(long)]
        ignore_oscillator: bool,
        /// Frequency patterns, comma separated (variable runs).
        #[arg(long, value_delimiter = ',')]
        patterns: Option<Vec<String>>,
        /// Accepted relative margin below the analytic time.
        #[arg(long, default_value_t = 1e-3)]
        tolerance: f64,
        #[arg(long, short)]
        output: Option<PathBuf>,
    },
    /// Figure data as CSV.
    #[command(allow_negative_numbers = true)]
    Sweep {
        #[arg(long, value_parser = ["3", "4", "9", "10", "11"])]
        fig: String,
        #[arg(long, default_value_t = 1.0)]
        d: f64,
        #[arg(long, default_value_t = 1.0)]
        a_max: f64,
        /// Frequency for the distance sweep (figure 3).
        #[arg(long, default_value_t = 1.0)]
        omega: f64,
        /// Grid step of the abscissa (in d/d_Ω or Ω/Ω_res).
        #[arg(long)]
        step: Option<f64>,
        #[arg(long, short)]
        output: Option<PathBuf>,
    },
}

#[derive(Debug, Args)]
pub struct ProblemArgs {
    #[arg(long)]
    pub d: f64,
    #[arg(long)]
    pub a_max: f64,
    #[arg(long, conflicts_with_all = ["omega_minus", "omega_plus"], required_unless_present_all = ["omega_minus", "omega_plus"])]
    pub omega: Option<f64>,
    #[arg(long, requires = "omega_plus")]
    pub omega_minus: Option<f64>,
    #[arg(long, requires = "omega_minus")]
    pub omega_plus: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParamsDoc {
    pub d: f64,
    pub a_max: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub omega: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub omega_minus: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub omega_plus: Option<f64>,
}

impl From<&ProblemArgs> for ParamsDoc {
    fn from(p: &ProblemArgs) -> Self {
        ParamsDoc {
            d: p.d,
            a_max: p.a_max,
            omega: p.omega,
            omega_minus: p.omega_minus,
            omega_plus: p.omega_plus,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BandDoc {
    pub omega_minus: f64,
    pub omega_plus: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultDoc {
    pub t_f: f64,
    pub t1: f64,
    /// `Fixed` or `Resonant` for a single frequency; otherwise the band
    /// region label.
    pub region: String,
    pub sequence: Option<String>,
    pub resonant: bool,
    pub sub_band: Option<BandDoc>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScaledDoc {
    pub tau_f: f64,
    pub tau1: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub omega: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub band: Option<BandDoc>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub residuals: BoundaryReport,
    pub pmp: VerificationReport,
    pub scaled: ScaledDoc,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolutionDoc {
    pub schema_version: u32,
    pub params: ParamsDoc,
    pub result: ResultDoc,
    pub protocol: Protocol,
    pub diagnostics: Diagnostics,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FamilyDoc {
    pub family: String,
    pub best_t_f: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleDoc {
    pub schema_version: u32,
    pub params: ParamsDoc,
    pub best_t_f: f64,
    pub analytic_t_f: f64,
    pub margin: f64,
    pub relative_margin: f64,
    pub best_family: String,
    pub reversed_wins: bool,
    pub families: Vec<FamilyDoc>,
    pub passed: bool,
    pub best_protocol: Protocol,
}

/// A failed command: message and exit code.
#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl Failure {
    fn usage(msg: impl Display) -> Self {
        Failure { code: 1, message: msg.to_string() }
    }
    fn verification(msg: impl Display) -> Self {
        Failure { code: 3, message: msg.to_string() }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::InvalidInput(_) => 1,
            Error::InconsistentAdjoint(_) => 3,
            _ => 2,
        };
        Failure { code, message: e.to_string() }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::usage(e)
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::usage(format!("{}: {e}", path.display())))
}

fn parse_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T, Failure> {
    serde_json::from_str(&read(path)?).map_err(|e| Failure::usage(format!("{}: {e}", path.display())))
}

fn band_doc(b: &Band, sc: &Scaling) -> BandDoc {
    BandDoc {
        omega_minus: sc.freq_from_scaled(b.omega_minus),
        omega_plus: sc.freq_from_scaled(b.omega_plus),
    }
}

fn scaled_band(b: &BandDoc, sc: &Scaling) -> Band {
    Band::new(sc.freq_to_scaled(b.omega_minus), sc.freq_to_scaled(b.omega_plus))
}

fn residuals(protocol: &Protocol, d: f64) -> Result<BoundaryReport, Failure> {
    let f = simulate(protocol, &PhaseState::ORIGIN, protocol.total_duration().max(1e-300))?.final_state;
    Ok(boundary_residual(&f, d, 1e-9))
}

fn sequence_from_name(name: &str) -> Option<SequenceKind> {
    SequenceKind::ALL.into_iter().find(|k| k.name() == name)
}

fn fixed_doc(params: ParamsDoc, s: &FixedSolution) -> Result<SolutionDoc, Failure> {
    let pmp = certify_fixed(s)?;
    Ok(SolutionDoc {
        schema_version: SCHEMA_VERSION,
        params,
        result: ResultDoc {
            t_f: s.t_f,
            t1: s.t1,
            region: if s.resonant { "Resonant" } else { "Fixed" }.into(),
            sequence: None,
            resonant: s.resonant,
            sub_band: None,
        },
        protocol: s.protocol.clone(),
        diagnostics: Diagnostics {
            residuals: residuals(&s.protocol, s.params.d)?,
            pmp,
            scaled: ScaledDoc {
                tau_f: s.tau_f(),
                tau1: s.tau1(),
                omega: Some(s.omega_scaled()),
                band: None,
            },
        },
    })
}

fn variable_doc(params: ParamsDoc, sc: &Scaling, s: &VariableSolution) -> Result<SolutionDoc, Failure> {
    let pmp = certify_variable(s)?;
    let protocol = sc.protocol_from_scaled(&s.protocol);
    Ok(SolutionDoc {
        schema_version: SCHEMA_VERSION,
        params,
        result: ResultDoc {
            t_f: sc.time_from_scaled(s.tau_f),
            t1: sc.time_from_scaled(s.tau1),
            region: s.region.label().into(),
            sequence: Some(s.sequence.name().into()),
            resonant: s.region == RegionClass::Resonant,
            sub_band: Some(band_doc(&s.sub_band, sc)),
        },
        diagnostics: Diagnostics {
            residuals: residuals(&protocol, params.d)?,
            pmp,
            scaled: ScaledDoc {
                tau_f: s.tau_f,
                tau1: s.tau1,
                omega: None,
                band: Some(band_doc(&s.band, &Scaling { d0: 1.0, omega0: 1.0 })),
            },
        },
        protocol,
    })
}

enum Problem {
    Fixed(TransportParams),
    Variable(Scaling, Band),
}

fn problem(p: &ParamsDoc) -> Result<Problem, Failure> {
    match (p.omega, p.omega_minus, p.omega_plus) {
        (Some(w), None, None) => {
            let params = TransportParams::new(p.d, p.a_max, w);
            params.validate()?;
            Ok(Problem::Fixed(params))
        }
        (None, Some(m), Some(q)) => {
            let sc = Scaling::new(p.d, p.a_max)?;
            let band = Band::new(sc.freq_to_scaled(m), sc.freq_to_scaled(q));
            band.validate()?;
            Ok(Problem::Variable(sc, band))
        }
        _ => Err(Failure::usage("give either --omega or both --omega-minus and --omega-plus")),
    }
}

fn solve_doc(params: ParamsDoc) -> Result<SolutionDoc, Failure> {
    match problem(&params)? {
        Problem::Fixed(p) => fixed_doc(params, &solve_fixed(&p)?),
        Problem::Variable(sc, band) => variable_doc(params, &sc, &solve_variable(&band)?),
    }
}

/// Rebuilds the solution a document describes and runs the checks on it.
pub fn verify_doc(doc: &SolutionDoc) -> Result<VerificationReport, Failure> {
    let p = &doc.params;
    match problem(p)? {
        Problem::Fixed(params) => {
            let sc = Scaling::new(p.d, p.a_max)?;
            let s = FixedSolution {
                params,
                t_f: doc.result.t_f,
                t1: doc.result.t1,
                resonant: doc.result.resonant,
                protocol: doc.protocol.clone(),
                t_abs: t_abs(p.d, p.a_max)?,
                omega_res: sc.freq_from_scaled(2.0 * std::f64::consts::PI),
            };
            Ok(certify_fixed(&s)?)
        }
        Problem::Variable(sc, band) => {
            let r = &doc.result;
            let sequence = r
                .sequence
                .as_deref()
                .and_then(sequence_from_name)
                .ok_or_else(|| Failure::usage("result.sequence is missing or unknown"))?;
            let region = match r.region.as_str() {
                "Resonant" => RegionClass::Resonant,
                "SinglePlus" => RegionClass::SinglePlus,
                "Interior" => RegionClass::Interior(sequence),
                "TAbsRegion" => RegionClass::TAbsRegion,
                other => return Err(Failure::usage(format!("unknown region {other}"))),
            };
            let sub_band = r.sub_band.as_ref().map_or(band, |b| scaled_band(b, &sc));
            let s = VariableSolution {
                band,
                tau_f: sc.time_to_scaled(r.t_f),
                tau1: sc.time_to_scaled(r.t1),
                region,
                sequence,
                sub_band,
                protocol: sc.protocol_to_scaled(&doc.protocol),
            };
            Ok(certify_variable(&s)?)
        }
    }
}

fn load_protocol(path: &Path) -> Result<(Protocol, Option<f64>), Failure> {
    let v: serde_json::Value = parse_json(path)?;
    let bad = |e: serde_json::Error| Failure::usage(format!("{}: {e}", path.display()));
    let (protocol, d) = if let Some(p) = v.get("protocol") {
        let d = v.get("params").and_then(|p| p.get("d")).and_then(|d| d.as_f64());
        (serde_json::from_value::<Protocol>(p.clone()).map_err(bad)?, d)
    } else {
        (serde_json::from_value::<Protocol>(v).map_err(bad)?, None)
    };
    protocol.validate().map_err(Failure::usage)?;
    Ok((protocol, d))
}

fn cmd_simulate(
    path: &Path,
    d: Option<f64>,
    step: Option<f64>,
    tol: f64,
    output: Option<&Path>,
    report: Option<&Path>,
) -> Result<(), Failure> {
    let (protocol, doc_d) = load_protocol(path)?;
    let d = d.or(doc_d).ok_or_else(|| Failure::usage("no target distance: pass --d"))?;
    if !(d.is_finite() && d >= 0.0) {
        return Err(Failure::usage(format!("d must be >= 0, got {d}")));
    }
    let total = protocol.total_duration();
    let step = step.unwrap_or(if total > 0.0 { total / 1000.0 } else { 1.0 });
    let tr = simulate(&protocol, &PhaseState::ORIGIN, step)?;
    let rep = boundary_residual(&tr.final_state, d, tol);
    if let Some(out) = output {
        let mut csv = Csv::new(&["t", "x_h", "v_h", "x_w", "v_w"]);
        for s in &tr.samples {
            csv.row(&[Cell::F(s.t), Cell::F(s.x_h), Cell::F(s.v_h), Cell::F(s.x_w), Cell::F(s.v_w)]);
        }
        emit(Some(out), &csv.finish())?;
    }
    #[derive(Serialize)]
    struct SimDoc<'a> {
        schema_version: u32,
        d: f64,
        #[serde(rename = "final")]
        final_state: &'a PhaseState,
        boundary: &'a BoundaryReport,
    }
    let text = to_json(&SimDoc {
        schema_version: SCHEMA_VERSION,
        d,
        final_state: &tr.final_state,
        boundary: &rep,
    })?;
    emit(report, &text)?;
    if rep.passed {
        Ok(())
    } else {
        Err(Failure::verification(format!("boundary residual {:e} above tolerance", rep.max_abs())))
    }
}

fn oracle_doc(params: ParamsDoc, r: &OracleResult, sc: Option<&Scaling>, tolerance: f64) -> OracleDoc {
    // variable searches report scaled times
    let t = |v: f64| sc.map_or(v, |s| s.time_from_scaled(v));
    OracleDoc {
        schema_version: SCHEMA_VERSION,
        params,
        best_t_f: t(r.best_t_f),
        analytic_t_f: t(r.analytic_t_f),
        margin: t(r.margin),
        relative_margin: r.relative_margin(),
        best_family: r.best_family.clone(),
        reversed_wins: r.reversed_wins,
        families: r
            .families
            .iter()
            .map(|f| FamilyDoc { family: f.family.clone(), best_t_f: f.best_t_f.map(t) })
            .collect(),
        passed: r.relative_margin() >= -tolerance,
        best_protocol: sc.map_or_else(|| r.best_protocol.clone(), |s| s.protocol_from_scaled(&r.best_protocol)),
    }
}

fn ratio_grid(lo: f64, hi: f64, per_unit: u32) -> Vec<f64> {
    let n = f64::from(per_unit);
    let (k0, k1) = ((lo * n).round() as i64, (hi * n).round() as i64);
    (k0..=k1).map(|k| k as f64 / n).collect()
}

fn per_unit(step: Option<f64>, default: u32) -> Result<u32, Failure> {
    match step {
        None => Ok(default),
        Some(s) if s > 0.0 && (1.0 / s).round() >= 1.0 && ((1.0 / s).round() * s - 1.0).abs() < 1e-9 => {
            Ok((1.0 / s).round() as u32)
        }
        Some(s) => Err(Failure::usage(format!("--step must be 1/n for a positive integer n, got {s}"))),
    }
}

fn cmd_sweep(fig: &str, d: f64, a_max: f64, omega: f64, step: Option<f64>) -> Result<String, Failure> {
    match fig {
        "3" => {
            let n = per_unit(step, 20)?;
            let d_omega = 4.0 * std::f64::consts::PI.powi(2) * a_max / (omega * omega);
            let ratios: Vec<f64> = ratio_grid(0.0, 10.0, n).into_iter().filter(|&r| r > 0.0).collect();
            let ds: Vec<f64> = ratios.iter().map(|r| r * d_omega).collect();
            let rows = sweep_distance(omega, a_max, &ds)?;
            let mut csv = Csv::new(&["d", "d_over_d_omega", "t_f", "T_abs", "t1", "region"]);
            for (r, q) in rows.iter().zip(&ratios) {
                let region = if r.resonant { "Resonant" } else { "Fixed" };
                csv.row(&[Cell::F(r.abscissa), Cell::F(*q), Cell::F(r.t_f), Cell::F(r.t_abs), Cell::F(r.t1), Cell::S(region)]);
            }
            Ok(csv.finish())
        }
        "4" => {
            let n = per_unit(step, 100)?;
            let sc = Scaling::new(d, a_max)?;
            let wr = sc.freq_from_scaled(2.0 * std::f64::consts::PI);
            let ratios: Vec<f64> = ratio_grid(0.0, 3.0, n).into_iter().filter(|&r| r >= 0.05).collect();
            let ws: Vec<f64> = ratios.iter().map(|r| r * wr).collect();
            let rows = sweep_omega(d, a_max, &ws)?;
            let mut csv = Csv::new(&["omega", "omega_over_omega_res", "t_f", "T_abs", "t1", "region"]);
            for (r, q) in rows.iter().zip(&ratios) {
                let region = if r.resonant { "Resonant" } else { "Fixed" };
                csv.row(&[Cell::F(r.abscissa), Cell::F(*q), Cell::F(r.t_f), Cell::F(r.t_abs), Cell::F(r.t1), Cell::S(region)]);
            }
            Ok(csv.finish())
        }
        _ => {
            let sc = Scaling::new(d, a_max)?;
            let two_pi = 2.0 * std::f64::consts::PI;
            let (minus, plus) = match fig {
                "9" => {
                    let n = per_unit(step, 200)?;
                    let plus: Vec<f64> = ratio_grid(0.0, 1.0, n).into_iter().filter(|&r| r > 0.0).collect();
                    (vec![0.0], plus)
                }
                "10" => {
                    let n = per_unit(step, 40)?;
                    let g = ratio_grid(0.0, 1.0, n);
                    (g.clone(), g.into_iter().filter(|&r| r > 0.0).collect())
                }
                _ => {
                    let n = per_unit(step, 40)?;
                    let g = ratio_grid(1.0, 2.0, n);
                    (g.clone(), g)
                }
            };
            let scale = |v: &Vec<f64>| v.iter().map(|r| r * two_pi).collect::<Vec<f64>>();
            let rows = sweep_surface(&scale(&minus), &scale(&plus))?;
            let tabs = t_abs(d, a_max)?;
            let mut csv = Csv::new(&[
                "omega_minus",
                "omega_plus",
                "omega_minus_over_omega_res",
                "omega_plus_over_omega_res",
                "t_f",
                "T_abs",
                "t1",
                "region",
                "sequence",
            ]);
            for r in &rows {
                let region = r.region.to_string();
                csv.row(&[
                    Cell::F(sc.freq_from_scaled(r.omega_minus)),
                    Cell::F(sc.freq_from_scaled(r.omega_plus)),
                    Cell::F(r.omega_minus / two_pi),
                    Cell::F(r.omega_plus / two_pi),
                    Cell::F(sc.time_from_scaled(r.tau_f)),
                    Cell::F(tabs),
                    Cell::F(sc.time_from_scaled(r.tau1)),
                    Cell::S(&region),
                    Cell::S(r.sequence.name()),
                ]);
            }
            Ok(csv.finish())
        }
    }
}

fn execute(cli: Cli) -> Result<(), Failure> {
    if let Some(n) = cli.jobs {
        if n == 0 {
            return Err(Failure::usage("--jobs must be at least 1"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(Failure::usage)?;
    }
    match cli.command {
        Command::Solve { problem, output } => {
            let doc = solve_doc(ParamsDoc::from(&problem))?;
            emit(output.as_deref(), &to_json(&doc)?)?;
            Ok(())
        }
        Command::Simulate { protocol, d, step, tol, output, report } => {
            cmd_simulate(&protocol, d, step, tol, output.as_deref(), report.as_deref())
        }
        Command::Verify { solution, output } => {
            let doc: SolutionDoc = parse_json(&solution)?;
            let rep = verify_doc(&doc)?;
            emit(output.as_deref(), &to_json(&rep)?)?;
            if rep.passed {
                Ok(())
            } else {
                Err(Failure::verification("maximum-principle checks failed"))
            }
        }
        Command::Oracle {
            problem: args,
            max_switches,
            grid,
            refine,
            no_asymmetric,
            ignore_oscillator,
            patterns,
            tolerance,
            output,
        } => {
            let params = ParamsDoc::from(&args);
            let base = match problem(&params)? {
                Problem::Fixed(_) => SearchSpec::default(),
                Problem::Variable(..) => SearchSpec::variable_default(),
            };
            let omega_patterns = match patterns {
                None => base.omega_patterns.clone(),
                Some(names) => names
                    .iter()
                    .map(|n| sequence_from_name(n.trim()).ok_or_else(|| Failure::usage(format!("unknown pattern {n}"))))
                    .collect::<Result<_, _>>()?,
            };
            let spec = SearchSpec {
                max_switches: max_switches.unwrap_or(base.max_switches),
                grid_resolution: grid,
                refine_iterations: refine,
                allow_asymmetric: !no_asymmetric,
                omega_patterns,
                ignore_oscillator,
            };
            let doc = match problem(&params)? {
                Problem::Fixed(p) => oracle_doc(params, &search_fixed(&p, &spec)?, None, tolerance),
                Problem::Variable(sc, band) => {
                    if ignore_oscillator {
                        return Err(Failure::usage("--ignore-oscillator applies to fixed-frequency runs"));
                    }
                    oracle_doc(params, &search_variable(&band, &spec)?, Some(&sc), tolerance)
                }
            };
            emit(output.as_deref(), &to_json(&doc)?)?;
            if doc.passed {
                Ok(())
            } else {
                Err(Failure::verification(format!(
                    "oracle beat the analytic time by {:e} relative",
                    -doc.relative_margin
                )))
            }
        }
        Command::Sweep { fig, d, a_max, omega, step, output } => {
            let text = cmd_sweep(&fig, d, a_max, omega, step)?;
            emit(output.as_deref(), &text)?;
            Ok(())
        }
    }
}

/// Parses the arguments, runs the command and returns the exit code.
pub fn run<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
