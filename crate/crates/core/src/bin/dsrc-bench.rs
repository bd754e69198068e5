use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};
use serde_json::json;

use dsrc_mac::analytic::{solve_fixed_point, solve_spcdc_fixed_point, SolverOptions};
use dsrc_mac::bench::{self, results, CaseSpec, ResultRow, RowSink, Source, SweepSpec, Thresholds};
use dsrc_mac::mac::PolicyKind;
use dsrc_mac::sim::{self, SimConfig};
use dsrc_mac::{Error, ScenarioParams};

const EXIT_USAGE: u8 = 1;
const EXIT_MODEL: u8 = 2;
const EXIT_CHECK: u8 = 3;

#[derive(Parser)]
#[command(
    version,
    about = "Analytic models and simulation of 802.11p and SpCDC broadcast"
)]
struct Cli {
    /// Scenario or sweep file (`key = value` text or JSON)
    #[arg(long, global = true)]
    scenario: Option<PathBuf>,
    /// Output directory
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Simulation replications
    #[arg(long, global = true)]
    reps: Option<usize>,
    /// Comma-separated policies: dot11p, dot11p:<cw>, spcdc, spcdc-oracle
    #[arg(long, global = true, value_delimiter = ',')]
    policy: Vec<String>,
    /// Fixed-point tolerance
    #[arg(long, global = true)]
    tol: Option<f64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the analytic models at one operating point
    Analyze,
    /// Simulate one operating point
    Simulate {
        /// Simulated seconds per replication
        #[arg(long)]
        duration: Option<f64>,
        #[arg(long)]
        warmup: Option<f64>,
        /// Write the packet trace of replication 0 (needs --out)
        #[arg(long)]
        trace: bool,
    },
    /// Evaluate a grid of cases and vehicle counts
    Sweep {
        /// Override the vehicle counts, comma-separated
        #[arg(long, value_delimiter = ',')]
        n: Vec<usize>,
        #[arg(long)]
        duration: Option<f64>,
        #[arg(long, conflicts_with = "sim_only")]
        analytic_only: bool,
        #[arg(long)]
        sim_only: bool,
    },
    /// Render SVG plots of a result table
    Plot {
        /// Result table; defaults to <out>/results.csv
        #[arg(long)]
        results: Option<PathBuf>,
    },
    /// Compare policies and check the thresholds
    Report {
        #[arg(long)]
        results: Option<PathBuf>,
        /// Threshold overrides (`key = value` text)
        #[arg(long)]
        thresholds: Option<PathBuf>,
    },
}

enum Failure {
    Usage(String),
    Model(String),
    Check,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::NoConvergence { .. }
            | Error::Infeasible { .. }
            | Error::Saturated { .. }
            | Error::UndefinedAtOne => Failure::Model(e.to_string()),
            _ => Failure::Usage(e.to_string()),
        }
    }
}

type Outcome = Result<(), Failure>;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(EXIT_USAGE)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let result = match &cli.command {
        Command::Analyze => analyze(&cli),
        Command::Simulate {
            duration,
            warmup,
            trace,
        } => simulate(&cli, *duration, *warmup, *trace),
        Command::Sweep {
            n,
            duration,
            analytic_only,
            sim_only,
        } => sweep(&cli, n, *duration, *analytic_only, *sim_only),
        Command::Plot { results } => plot(&cli, results.as_deref()),
        Command::Report { results, thresholds } => report(&cli, results.as_deref(), thresholds.as_deref()),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_USAGE)
        }
        Err(Failure::Model(msg)) => {
            eprintln!("model error: {msg}");
            ExitCode::from(EXIT_MODEL)
        }
        Err(Failure::Check) => ExitCode::from(EXIT_CHECK),
    }
}

fn scenario(cli: &Cli) -> Result<ScenarioParams, Failure> {
    let params = match &cli.scenario {
        Some(path) => ScenarioParams::load(path)?,
        None => ScenarioParams::default(),
    };
    params.validate()?;
    Ok(params)
}

fn policies(cli: &Cli, default: &[&str]) -> Result<Vec<PolicyKind>, Failure> {
    let ids: Vec<String> = if cli.policy.is_empty() {
        default.iter().map(|s| s.to_string()).collect()
    } else {
        cli.policy.clone()
    };
    Ok(ids.iter().map(|p| p.parse()).collect::<Result<_, Error>>()?)
}

fn solver(cli: &Cli) -> SolverOptions {
    cli.tol
        .map_or_else(SolverOptions::default, SolverOptions::with_tol)
}

fn out_dir(cli: &Cli) -> Result<&Path, Failure> {
    cli.out
        .as_deref()
        .ok_or_else(|| Failure::Usage("--out DIR is required".into()))
}

fn write_json(path: &Path, value: &serde_json::Value) -> Result<(), Failure> {
    let text = serde_json::to_string_pretty(value).map_err(Error::from)?;
    std::fs::write(path, text + "\n").map_err(Error::from)?;
    Ok(())
}

fn analyze(cli: &Cli) -> Outcome {
    let params = scenario(cli)?;
    let opts = solver(cli);
    let mut out = serde_json::Map::new();
    for policy in policies(cli, &["dot11p", "spcdc"])? {
        let p = policy.apply(&params);
        let value = match policy {
            PolicyKind::Dot11p { .. } => serde_json::to_value(solve_fixed_point(&p, &opts)?),
            PolicyKind::Spcdc { .. } => serde_json::to_value(solve_spcdc_fixed_point(&p, &opts)?),
        }
        .map_err(Error::from)?;
        out.insert(policy.label(&p), value);
    }
    let doc = json!({ "scenario": params, "analysis": out });
    println!("{}", serde_json::to_string_pretty(&doc).map_err(Error::from)?);
    if let Some(dir) = &cli.out {
        std::fs::create_dir_all(dir).map_err(Error::from)?;
        write_json(&dir.join("analysis.json"), &doc)?;
    }
    Ok(())
}

fn simulate(cli: &Cli, duration: Option<f64>, warmup: Option<f64>, trace: bool) -> Outcome {
    let params = scenario(cli)?;
    let defaults = SimConfig::default();
    let cfg = SimConfig {
        duration: duration.unwrap_or(defaults.duration),
        warmup: warmup.unwrap_or(defaults.warmup),
        seed: cli.seed.unwrap_or(defaults.seed),
        replications: cli.reps.unwrap_or(defaults.replications),
        trace,
        phases: None,
    };
    let dir = if trace {
        Some(out_dir(cli)?)
    } else {
        cli.out.as_deref()
    };
    let case_id = CaseSpec::new(params.data_rate, params.lambda, params.payload_bytes).id();
    let mut rows = Vec::new();
    for policy in policies(cli, &["dot11p", "spcdc"])? {
        let start = Instant::now();
        let out = sim::run(&params, policy, &cfg)?;
        let mut row = bench::sweep::metrics_row(&case_id, &params, policy, &cfg, &out.metrics);
        row.runtime_s = start.elapsed().as_secs_f64();
        let label = policy.label(&params);
        let m = &out.metrics;
        println!(
            "{label}: pdr {:.4} ± {:.4}, delay {:.1} us, reception delay {:.3} ms, density {:.2}, drops {}",
            m.pdr,
            m.pdr_ci.unwrap_or(0.0),
            m.mean_service * 1e6,
            m.mean_reception * 1e3,
            m.mean_density,
            m.overload_drops
        );
        if let (Some(dir), Some(t)) = (dir, &out.trace) {
            std::fs::create_dir_all(dir).map_err(Error::from)?;
            let file = std::fs::File::create(dir.join(format!("trace_{}.csv", label.replace(':', "_"))))
                .map_err(Error::from)?;
            t.write_csv(file)?;
        }
        rows.push(row);
    }
    if let Some(dir) = dir {
        results::save(&rows, dir)?;
    }
    Ok(())
}

fn sweep(cli: &Cli, n: &[usize], duration: Option<f64>, analytic_only: bool, sim_only: bool) -> Outcome {
    let mut spec = match &cli.scenario {
        Some(path) => SweepSpec::load(path)?,
        None => SweepSpec::default(),
    };
    if !cli.policy.is_empty() {
        spec.policies = cli.policy.clone();
    }
    if !n.is_empty() {
        spec.n_values = n.to_vec();
    }
    if let Some(r) = cli.reps {
        spec.replications = r;
    }
    if let Some(s) = cli.seed {
        spec.seed = s;
    }
    if let Some(t) = cli.tol {
        spec.tol = t;
    }
    if let Some(d) = duration {
        spec.duration = d;
    }
    if analytic_only {
        spec.sources = vec![Source::Analytic];
    }
    if sim_only {
        spec.sources = vec![Source::Simulation];
    }
    let dir = out_dir(cli)?;
    std::fs::create_dir_all(dir).map_err(Error::from)?;
    let mut sink = RowSink::create(dir.join("results.csv"))?;
    let rows = bench::run_sweep(&spec, Some(&mut sink))?;
    drop(sink);
    results::save(&rows, dir)?;
    println!("{} rows written to {}", rows.len(), dir.display());
    let failed: Vec<&ResultRow> = rows.iter().filter(|r| r.failed()).collect();
    for r in &failed {
        eprintln!(
            "{} N={} {} {}: {}",
            r.case_id, r.n_vehicles, r.policy, r.source, r.errors
        );
    }
    if failed.is_empty() {
        Ok(())
    } else {
        Err(Failure::Model(format!("{} points failed", failed.len())))
    }
}

fn load_results(cli: &Cli, results: Option<&Path>) -> Result<Vec<ResultRow>, Failure> {
    let path = match results {
        Some(p) => p.to_path_buf(),
        None => out_dir(cli)?.join("results.csv"),
    };
    Ok(results::load(path)?)
}

fn plot(cli: &Cli, results: Option<&Path>) -> Outcome {
    let rows = load_results(cli, results)?;
    let dir = out_dir(cli)?.join("plots");
    for path in bench::render_plots(&rows, &dir)? {
        println!("{}", path.display());
    }
    Ok(())
}

fn report(cli: &Cli, results: Option<&Path>, thresholds: Option<&Path>) -> Outcome {
    let rows = load_results(cli, results)?;
    let th = match thresholds {
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(Error::from)?;
            toml::from_str(&text).map_err(|e| Failure::Usage(format!("thresholds: {e}")))?
        }
        None => Thresholds::default(),
    };
    let rep = bench::compare_report(&rows, &th)?;
    print!("{}", rep.text);
    if let Some(dir) = &cli.out {
        std::fs::create_dir_all(dir).map_err(Error::from)?;
        std::fs::write(dir.join("report.txt"), &rep.text).map_err(Error::from)?;
    }
    if rep.passed() {
        Ok(())
    } else {
        Err(Failure::Check)
    }
}
