//! `excursion`: classify a series as diffusive or not, simulate benchmark
//! systems, and run accuracy sweeps.

mod report;

use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use excursion_core::harness::{self, ExportFormat, SweepPlan};
use excursion_core::series::{self, Column};
use excursion_core::systems::{simulate, Noise, SystemKind, SystemSpec};
use excursion_core::{classify, ClassifierConfig, Error, GridChoice};

use report::{AnalysisReport, InputInfo};

/// Stable exit statuses.
mod exit {
    pub const INPUT: u8 = 2;
    pub const DEGENERATE: u8 = 3;
    pub const INTERNAL: u8 = 4;
}

#[derive(Parser)]
#[command(name = "excursion", version, about = "Excursion-count scaling test for diffusions")]
struct Cli {
    /// Seed for simulate, or base seed override for sweep.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Machine-readable JSON on standard output.
    #[arg(long, global = true)]
    json: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Classify a series read from CSV.
    Analyze(AnalyzeArgs),
    /// Generate a benchmark trajectory as time,value CSV.
    Simulate(SimulateArgs),
    /// Run an accuracy sweep described by a key=value plan file.
    Sweep(SweepArgs),
}

#[derive(Args)]
struct AnalyzeArgs {
    path: PathBuf,
    /// Column name or zero-based index [default: "value", else the last column]
    #[arg(long)]
    column: Option<Column>,
    /// Sample spacing [default: from a time column, else 1]
    #[arg(long)]
    dt: Option<f64>,
    /// Treat the column as prices and analyze simple returns.
    #[arg(long)]
    returns: bool,
    #[arg(long)]
    eps_min: Option<f64>,
    #[arg(long)]
    eps_max: Option<f64>,
    #[arg(long, default_value_t = 24)]
    eps_points: usize,
}

#[derive(Args)]
struct SimulateArgs {
    /// System kind, e.g. brownian, ou, shm, logistic
    kind: Option<SystemKind>,
    /// Read the whole spec from a key=value file instead of flags.
    #[arg(long, conflicts_with = "kind")]
    spec: Option<PathBuf>,
    /// Parameter override, repeatable.
    #[arg(long = "param", value_name = "NAME=VALUE", value_parser = parse_param)]
    params: Vec<(String, f64)>,
    /// Output spacing [default: 1 for maps, 1e-3 otherwise]
    #[arg(long)]
    dt: Option<f64>,
    /// Total duration.
    #[arg(long = "T", default_value_t = 100.0)]
    t_total: f64,
    /// Additive noise SNR in dB (deterministic kinds).
    #[arg(long, conflicts_with = "r")]
    snr_db: Option<f64>,
    /// Noise intensity, sigma = 1/R (stochastic kinds).
    #[arg(long = "R")]
    r: Option<f64>,
    /// Initial state, comma separated.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    x0: Option<Vec<f64>>,
    /// Output file [default: standard output]
    #[arg(long, short)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SweepArgs {
    plan: PathBuf,
    /// Output file [default: standard output]
    #[arg(long, short)]
    out: Option<PathBuf>,
    /// csv or json [default: from --out extension, else csv]
    #[arg(long)]
    format: Option<ExportFormat>,
    /// Worker threads [default: all cores]. Results do not depend on it.
    #[arg(long)]
    threads: Option<usize>,
}

fn parse_param(s: &str) -> Result<(String, f64), String> {
    let (k, v) = s
        .split_once('=')
        .ok_or_else(|| format!("expected NAME=VALUE, got '{s}'"))?;
    let v = v
        .trim()
        .parse::<f64>()
        .map_err(|_| format!("'{v}' is not a number"))?;
    Ok((k.trim().to_string(), v))
}

/// Error carrying its exit status.
struct Failure {
    code: u8,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::InvalidInput(_) | Error::Parse { .. } | Error::Io { .. } | Error::Json(_) => exit::INPUT,
            Error::DegenerateSignal(_) => exit::DEGENERATE,
            Error::RangeRejected(_) | Error::SimulationDiverged { .. } => exit::INTERNAL,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

impl Failure {
    fn io(path: &Path, e: std::io::Error) -> Self {
        Failure {
            code: exit::INPUT,
            message: format!("{}: {e}", path.display()),
        }
    }
}

type CmdResult = Result<u8, Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Analyze(a) => analyze(&cli, a),
        Command::Simulate(a) => simulate_cmd(&cli, a),
        Command::Sweep(a) => sweep(&cli, a),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn analyze(cli: &Cli, a: &AnalyzeArgs) -> CmdResult {
    let column = a.column.clone().unwrap_or_default();
    let mut data = series::read_series(&a.path, &column)?;
    if a.returns {
        data = data.to_returns()?;
    }
    let dt = a.dt.or(data.time_step).unwrap_or(1.0);
    let info = InputInfo {
        path: a.path.display().to_string(),
        column: data.column.clone(),
        n: data.len(),
        dt,
        returns: a.returns,
    };
    let traj = data.into_trajectory(dt)?;

    let grid = if a.eps_min.is_none() && a.eps_max.is_none() {
        GridChoice::Auto { points: a.eps_points }
    } else {
        GridChoice::Bounds {
            min: a.eps_min,
            max: a.eps_max,
            points: a.eps_points,
        }
    };
    let config = ClassifierConfig {
        grid,
        ..ClassifierConfig::default()
    };
    let verdict = classify(&traj, &config)?;
    let report = AnalysisReport::new(info, &verdict);
    if cli.json {
        println!("{}", to_json(&report)?);
    } else {
        print!("{}", report.to_text());
    }
    Ok(if verdict.reason == excursion_core::Reason::DegenerateSignal {
        exit::DEGENERATE
    } else {
        0
    })
}

fn simulate_cmd(cli: &Cli, a: &SimulateArgs) -> CmdResult {
    let mut spec = match (&a.spec, a.kind) {
        (Some(path), _) => {
            let text = std::fs::read_to_string(path).map_err(|e| Failure::io(path, e))?;
            SystemSpec::from_config(&text).map_err(|e| e.in_source(path.display().to_string()))?
        }
        (None, Some(kind)) => {
            let dt = a.dt.unwrap_or(if kind.is_map() { 1.0 } else { 1e-3 });
            SystemSpec::new(kind, dt, a.t_total, 0)
        }
        (None, None) => {
            return Err(Failure {
                code: exit::INPUT,
                message: format!(
                    "give a system kind or --spec; kinds: {}",
                    SystemKind::ALL.map(SystemKind::name).join(", ")
                ),
            })
        }
    };
    if a.spec.is_some() {
        if let Some(dt) = a.dt {
            spec.dt = dt;
        }
    }
    for (k, v) in &a.params {
        spec.params.insert(k.clone(), *v);
    }
    if let Some(seed) = cli.seed {
        spec.seed = seed;
    }
    if let Some(db) = a.snr_db {
        spec.noise = Noise::SnrDb(db);
    }
    if let Some(r) = a.r {
        spec.noise = Noise::R(r);
    }
    if let Some(x0) = &a.x0 {
        spec.initial_state = Some(x0.clone());
    }

    let generated = simulate(&spec)?;
    let traj = &generated.trajectory;
    let echo = if cli.json {
        to_json(&serde_json::json!({
            "spec": &spec,
            "ground_truth": generated.ground_truth,
            "n": traj.len(),
        }))?
    } else {
        format!(
            "# ground truth: {}\n# n = {}\n{}",
            generated.ground_truth,
            traj.len(),
            spec.to_config_string()
        )
    };

    match &a.out {
        Some(path) => {
            series::save_trajectory(traj, path)?;
            println!("{}", echo.trim_end());
        }
        None => {
            let stdout = std::io::stdout().lock();
            series::write_trajectory(traj, std::io::BufWriter::new(stdout))
                .map_err(|e| Failure::io(Path::new("<stdout>"), e))?;
            eprintln!("{}", echo.trim_end());
        }
    }
    Ok(0)
}

fn sweep(cli: &Cli, a: &SweepArgs) -> CmdResult {
    let text = std::fs::read_to_string(&a.plan).map_err(|e| Failure::io(&a.plan, e))?;
    let mut plan =
        SweepPlan::from_config(&text).map_err(|e| e.in_source(a.plan.display().to_string()))?;
    if let Some(seed) = cli.seed {
        plan.base_seed = seed;
    }
    let format = a.format.unwrap_or_else(|| {
        let ext = a.out.as_ref().and_then(|p| p.extension()).and_then(|e| e.to_str());
        if cli.json || ext == Some("json") {
            ExportFormat::Json
        } else {
            ExportFormat::Csv
        }
    });

    let run = |plan: &SweepPlan| {
        harness::run_sweep_with_progress(plan, |done, total, cell| {
            eprintln!(
                "[{done}/{total}] dt={} T={} {} accuracy={:.3}{}",
                cell.dt,
                cell.t_total,
                noise_label(cell.noise),
                cell.accuracy,
                if cell.n_failed > 0 {
                    format!(" ({} failed)", cell.n_failed)
                } else {
                    String::new()
                }
            );
        })
    };
    let result = match a.threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Failure {
                code: exit::INTERNAL,
                message: format!("thread pool: {e}"),
            })?
            .install(|| run(&plan)),
        None => run(&plan),
    }?;

    let body = match format {
        ExportFormat::Csv => harness::results_to_csv(&result),
        ExportFormat::Json => harness::results_to_json(&result)?,
    };
    match &a.out {
        Some(path) => harness::export_results(&result, path, format)?,
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(body.as_bytes())
                .and_then(|_| out.flush())
                .map_err(|e| Failure::io(Path::new("<stdout>"), e))?;
        }
    }
    if result.any_failures() {
        let failed: usize = result.cells.iter().map(|c| c.n_failed).sum();
        eprintln!("error: {failed} realization(s) failed to simulate");
        return Ok(exit::INTERNAL);
    }
    Ok(0)
}

fn noise_label(n: Noise) -> String {
    match n {
        Noise::None => "noiseless".into(),
        Noise::SnrDb(v) => format!("snr_db={v}"),
        Noise::R(v) => format!("R={v}"),
    }
}

fn to_json<T: serde::Serialize>(value: &T) -> Result<String, Failure> {
    serde_json::to_string_pretty(value).map_err(|e| Failure::from(Error::from(e)))
}
