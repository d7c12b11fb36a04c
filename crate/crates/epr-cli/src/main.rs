//! Command-line surface of the EPR experiment simulator.
//!
//! Machine-readable output (records, CSV rows, JSON reports) goes to
//! standard output or `--out`; summaries and logs go to standard error.
//! Exit codes: 0 success, 1 usage or validation failure, 2 I/O error.

use clap::{Parser, Subcommand, ValueEnum};
use epr_core::*;
use serde::Serialize;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "epr", version, about = "EPR polarization-entanglement experiment simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario and write one record per trial
    Run {
        /// Scenario file (.epr)
        scenario: PathBuf,
        /// Write records to this file instead of standard output
        #[arg(long)]
        out: Option<PathBuf>,
        /// Record format
        #[arg(long, value_enum, default_value_t = Format::Json)]
        format: Format,
        /// Override the scenario's run.seed
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Sweep the relative polarizer angle and tabulate an observable
    Sweep {
        /// Scenario file (.epr)
        scenario: PathBuf,
        /// Comma-separated relative angles (radians, or `45deg`)
        #[arg(long, value_delimiter = ',')]
        angles: Option<Vec<String>>,
        /// Evenly spaced angles covering [0, pi/2]
        #[arg(long)]
        grid: Option<usize>,
        /// p: coincidence probability p(t,t); E: correlation
        #[arg(long, value_enum, default_value_t = Observable::P, ignore_case = true)]
        observable: Observable,
    },
    /// Report boosted-frame event orderings and the collapse locus
    Frames {
        /// Scenario file (.epr)
        scenario: PathBuf,
        /// Comma-separated boost velocities in units of c, |beta| < 1
        #[arg(long, value_delimiter = ',')]
        beta: Option<Vec<f64>>,
        /// Evaluate at the critical velocity and 0.1 on either side
        #[arg(long)]
        auto_critical: bool,
    },
    /// Compute a CHSH value, analytically or from simulated batches
    Chsh {
        /// Use the closed form instead of sampling
        #[arg(long)]
        analytic: bool,
        /// Trials per setting pair for the empirical estimate
        #[arg(long)]
        trials: Option<u64>,
        /// The four settings a a' b b' (radians, or `45deg`)
        #[arg(long, num_args = 4)]
        angles: Option<Vec<String>>,
        /// Base seed for the empirical batches
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Check a scenario file and print its diagnostics
    Validate {
        /// Scenario file (.epr)
        scenario: PathBuf,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    /// JSON Lines, one object per trial
    Json,
    /// Comma-separated values with a header row
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Observable {
    /// Coincidence probability of both photons transmitting
    P,
    /// Polarization correlation E
    E,
}

enum CliError {
    /// Bad flags or bad input values; exit 1.
    Usage(String),
    /// Scenario or engine rejected the input; exit 1.
    Validation(String),
    /// Filesystem failure; exit 2.
    Io(String),
}

impl From<EngineError> for CliError {
    fn from(e: EngineError) -> CliError {
        CliError::Validation(e.to_string())
    }
}

impl From<ScenarioError> for CliError {
    fn from(e: ScenarioError) -> CliError {
        CliError::Validation(e.to_string())
    }
}

impl From<StatsError> for CliError {
    fn from(e: StatsError) -> CliError {
        CliError::Validation(e.to_string())
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return ExitCode::SUCCESS;
            }
            eprint!("{e}");
            return ExitCode::from(1);
        }
    };
    match dispatch(cli.command) {
        Ok(code) => code,
        Err(CliError::Usage(message)) | Err(CliError::Validation(message)) => {
            eprintln!("error: {message}");
            ExitCode::from(1)
        }
        Err(CliError::Io(message)) => {
            eprintln!("error: {message}");
            ExitCode::from(2)
        }
    }
}

fn dispatch(command: Command) -> Result<ExitCode, CliError> {
    match command {
        Command::Run {
            scenario,
            out,
            format,
            seed,
        } => cmd_run(&scenario, out.as_deref(), format, seed),
        Command::Sweep {
            scenario,
            angles,
            grid,
            observable,
        } => cmd_sweep(&scenario, angles, grid, observable),
        Command::Frames {
            scenario,
            beta,
            auto_critical,
        } => cmd_frames(&scenario, beta, auto_critical),
        Command::Chsh {
            analytic,
            trials,
            angles,
            seed,
        } => cmd_chsh(analytic, trials, angles, seed),
        Command::Validate { scenario } => cmd_validate(&scenario),
    }
}

fn load_scenario(path: &Path) -> Result<Scenario, CliError> {
    let bytes =
        fs::read(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    parse_scenario_bytes(&bytes)
        .map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))
}

/// Writes machine output to standard output. A broken pipe means the
/// downstream consumer has seen all it wants; exit quietly.
fn emit(content: &str) -> Result<(), CliError> {
    use std::io::Write;
    let mut stdout = std::io::stdout().lock();
    let result = stdout
        .write_all(content.as_bytes())
        .and_then(|_| stdout.flush());
    if let Err(e) = result {
        if e.kind() == std::io::ErrorKind::BrokenPipe {
            std::process::exit(0);
        }
        return Err(CliError::Io(format!("stdout: {e}")));
    }
    Ok(())
}

fn write_output(out: Option<&Path>, content: &str) -> Result<(), CliError> {
    match out {
        Some(path) => fs::write(path, content)
            .map_err(|e| CliError::Io(format!("{}: {e}", path.display()))),
        None => emit(content),
    }
}

fn cmd_run(
    path: &Path,
    out: Option<&Path>,
    format: Format,
    seed: Option<u64>,
) -> Result<ExitCode, CliError> {
    let mut scenario = load_scenario(path)?;
    if let Some(seed) = seed {
        scenario.run.seed = seed;
    }
    let records = run_batch(&scenario)?;
    let content = match format {
        Format::Json => records_to_jsonl(&records),
        Format::Csv => records_to_csv(&records),
    };
    write_output(out, &content)?;

    let table = tabulate(&records)?;
    let counts = table.counts();
    let probabilities = table.probabilities();
    eprintln!("trials: {}", records.len());
    eprintln!(
        "coincidences: tt={} tr={} rt={} rr={}",
        counts[0], counts[1], counts[2], counts[3]
    );
    eprintln!(
        "probabilities: tt={:.4} tr={:.4} rt={:.4} rr={:.4}",
        probabilities[0], probabilities[1], probabilities[2], probabilities[3]
    );
    let transmitted = records
        .iter()
        .filter(|r| r.outcome2 == Channel::Transmitted)
        .count() as f64
        / records.len() as f64;
    eprintln!("photon 2 transmission rate: {transmitted:.4}");
    if scenario.feedforward.enabled {
        let applied = records.iter().filter(|r| r.hwp_applied()).count() as f64
            / records.len() as f64;
        eprintln!("feed-forward applied: {applied:.4}");
    }
    Ok(ExitCode::SUCCESS)
}

fn parse_angle_args(values: &[String]) -> Result<Vec<Angle>, CliError> {
    values
        .iter()
        .map(|v| parse_angle_literal(v).map_err(CliError::Usage))
        .collect()
}

fn cmd_sweep(
    path: &Path,
    angles: Option<Vec<String>>,
    grid: Option<usize>,
    observable: Observable,
) -> Result<ExitCode, CliError> {
    let scenario = load_scenario(path)?;
    let deltas: Vec<f64> = match (angles, grid) {
        (Some(_), Some(_)) => {
            return Err(CliError::Usage(
                "--angles and --grid are mutually exclusive".to_string(),
            ))
        }
        (Some(values), None) => parse_angle_args(&values)?
            .into_iter()
            .map(|a| a.rad())
            .collect(),
        (None, Some(0)) => {
            return Err(CliError::Usage("--grid must be at least 1".to_string()))
        }
        (None, Some(1)) => vec![0.0],
        (None, Some(n)) => (0..n)
            .map(|k| std::f64::consts::FRAC_PI_2 * k as f64 / (n - 1) as f64)
            .collect(),
        (None, None) => {
            return Err(CliError::Usage(
                "choose one of --angles or --grid".to_string(),
            ))
        }
    };

    let bell = bell_state();
    let mut rows = String::from("relative_angle_rad,analytic,empirical,stderr\n");
    for (k, delta) in deltas.into_iter().enumerate() {
        let mut variant = scenario.clone();
        variant.orientation_b = Angle::radians(scenario.orientation_a.rad() + delta);
        variant.run.seed = scenario.run.seed.wrapping_add(k as u64);
        let table = tabulate(&run_batch(&variant)?)?;
        let ideal = joint_probabilities(&bell, Angle::ZERO, Angle::radians(delta))
            .map_err(|e| CliError::Validation(e.to_string()))?;
        let (analytic, empirical, stderr) = match observable {
            Observable::P => (
                ideal.tt,
                table.probabilities()[0],
                table.standard_errors()[0],
            ),
            Observable::E => (
                correlation(ideal.as_array()),
                table.correlation(),
                table.correlation_standard_error(),
            ),
        };
        rows.push_str(&format!("{delta},{analytic},{empirical},{stderr}\n"));
    }
    emit(&rows)?;
    Ok(ExitCode::SUCCESS)
}

#[derive(Serialize)]
struct FramesOutput {
    critical_velocity: f64,
    frames: Vec<FrameReport>,
}

fn cmd_frames(
    path: &Path,
    beta: Option<Vec<f64>>,
    auto_critical: bool,
) -> Result<ExitCode, CliError> {
    let scenario = load_scenario(path)?;
    let choice = match scenario.deviation_mode {
        DeviationMode::None => PathChoice::Short,
        _ => PathChoice::Long,
    };
    let timeline = build_timeline(&scenario, choice)?;

    // Distance to the first deflection, or to polarizer II on a straight
    // route: the boost that reverses its order against photon 1's detection.
    let x2 = scenario
        .photon2_path
        .first()
        .map_or(scenario.photon2_direct_distance, |p| p.x);
    let critical = critical_velocity(scenario.photon1_distance, x2)
        .map_err(|e| CliError::Validation(e.to_string()))?;

    let betas: Vec<f64> = match (beta, auto_critical) {
        (Some(_), true) => {
            return Err(CliError::Usage(
                "--beta and --auto-critical are mutually exclusive".to_string(),
            ))
        }
        (Some(betas), false) => {
            if betas.is_empty() {
                return Err(CliError::Usage("--beta needs at least one value".to_string()));
            }
            for b in &betas {
                if !b.is_finite() || b.abs() >= 1.0 {
                    return Err(CliError::Usage(format!(
                        "boost velocity {b} is not inside (-1, 1)"
                    )));
                }
            }
            betas
        }
        (None, true) => [critical - 0.1, critical, critical + 0.1]
            .into_iter()
            .filter(|b| b.abs() < 1.0)
            .collect(),
        (None, false) => {
            return Err(CliError::Usage(
                "choose one of --beta or --auto-critical".to_string(),
            ))
        }
    };

    let mut frames = Vec::with_capacity(betas.len());
    for b in betas {
        frames.push(frame_report(&timeline, b).map_err(|e| CliError::Validation(e.to_string()))?);
    }
    let output = FramesOutput {
        critical_velocity: critical,
        frames,
    };
    let mut json = serde_json::to_string_pretty(&output).expect("report serializes");
    json.push('\n');
    emit(&json)?;
    Ok(ExitCode::SUCCESS)
}

fn cmd_chsh(
    analytic: bool,
    trials: Option<u64>,
    angles: Option<Vec<String>>,
    seed: u64,
) -> Result<ExitCode, CliError> {
    let angles = match angles {
        Some(values) => {
            let parsed = parse_angle_args(&values)?;
            ChshAngles::new(parsed[0], parsed[1], parsed[2], parsed[3])
        }
        None => ChshAngles::maximal(),
    };

    let result = match (analytic, trials) {
        (true, Some(_)) => {
            return Err(CliError::Usage(
                "--analytic and --trials are mutually exclusive".to_string(),
            ))
        }
        (true, None) => chsh_analytic(&bell_state(), &angles)
            .map_err(|e| CliError::Validation(e.to_string()))?,
        (false, Some(0)) => {
            return Err(CliError::Usage("--trials must be at least 1".to_string()))
        }
        (false, Some(n)) => {
            let mut tables = Vec::with_capacity(4);
            for (i, (a, b)) in angles.setting_pairs().into_iter().enumerate() {
                let mut scenario = Scenario::direct(1.0, 1.0);
                scenario.orientation_a = a;
                scenario.orientation_b = b;
                scenario.run.trials = n;
                scenario.run.seed = seed.wrapping_add(i as u64);
                tables.push(tabulate(&run_batch(&scenario)?)?);
            }
            chsh_empirical(&angles, &tables)?
        }
        (false, None) => {
            return Err(CliError::Usage(
                "choose one of --analytic or --trials".to_string(),
            ))
        }
    };

    let mut json = serde_json::to_string_pretty(&result).expect("result serializes");
    json.push('\n');
    emit(&json)?;
    let verdict = if result.violation {
        "violates the classical bound 2"
    } else {
        "no violation of the classical bound 2"
    };
    match result.standard_error {
        Some(sigma) => eprintln!("S = {:.6} +/- {sigma:.6} ({verdict})", result.s),
        None => eprintln!("S = {:.6} ({verdict})", result.s),
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_validate(path: &Path) -> Result<ExitCode, CliError> {
    let bytes =
        fs::read(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    let scenario = parse_scenario_bytes(&bytes)
        .map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))?;
    let diagnostics = validate(&scenario);
    let mut listing = String::new();
    for d in &diagnostics {
        listing.push_str(&format!("{d}\n"));
    }
    emit(&listing)?;
    let has_errors = diagnostics.iter().any(|d| d.severity == Severity::Error);
    if has_errors {
        Ok(ExitCode::from(1))
    } else {
        Ok(ExitCode::SUCCESS)
    }
}
