//! `ikf`: run Iterative Kings' Forests on a CSV, simulate benchmark data,
//! run benchmark replications, or re-render a saved report.

mod config;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use ikf_core::bench::{self, ExperimentConfig, Scenario};
use ikf_core::data::{load_csv, save_csv, ColumnRef};
use ikf_core::ikf::run_ikf;
use ikf_core::report::ReportDocument;
use ikf_core::{diagnostics, SeedContext};

use config::{Config, ConfigError};

#[derive(Parser)]
#[command(name = "ikf", version, about = "Iterative Kings' Forests: variable ranking and interaction discovery")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the full procedure on a CSV dataset.
    Run {
        /// CSV file with a header row.
        data: PathBuf,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Write a simulated dataset as CSV with response column `y`.
    Simulate {
        #[command(flatten)]
        common: CommonArgs,
        /// Output CSV path.
        #[arg(long, short)]
        out: PathBuf,
    },
    /// Run benchmark replications of one method on one scenario.
    Bench {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Re-render the CSV tables from a saved JSON report.
    Report {
        /// A `report.json` written by `run`.
        report: PathBuf,
        /// Directory for the CSVs; defaults to the report's directory.
        #[arg(long)]
        output_dir: Option<PathBuf>,
    },
    /// Print the effective configuration with every key documented.
    Config {
        #[command(flatten)]
        common: CommonArgs,
    },
}

#[derive(Args, Clone, Default)]
struct CommonArgs {
    /// Flat `key = value` configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override one key, e.g. `--set n_trees=50`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// Start from the high-dimensional preset (N=200, D=5, 6 iterations,
    /// alpha=0.2, pool=p/2, 30 paths).
    #[arg(long)]
    bio_profile: bool,
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads; 0 uses every core.
    #[arg(long)]
    threads: Option<usize>,
    #[arg(long, env = "IKF_OUTPUT_DIR")]
    output_dir: Option<PathBuf>,
    #[arg(long)]
    response: Option<String>,
    #[arg(long)]
    task: Option<String>,
    #[arg(long)]
    n_trees: Option<String>,
    #[arg(long)]
    max_depth: Option<String>,
    #[arg(long)]
    n_iter: Option<String>,
    #[arg(long)]
    n_top: Option<String>,
    #[arg(long)]
    alpha: Option<String>,
    #[arg(long)]
    max_kings: Option<String>,
    #[arg(long)]
    first_king: Option<String>,
    #[arg(long)]
    scenario: Option<String>,
    #[arg(long)]
    n: Option<String>,
    #[arg(long)]
    p: Option<String>,
    #[arg(long)]
    scale: Option<String>,
    #[arg(long)]
    replications: Option<String>,
    #[arg(long)]
    method: Option<String>,
}

impl CommonArgs {
    fn resolve(&self) -> Result<Config, ConfigError> {
        let mut c = Config::default();
        if self.bio_profile {
            c.apply_bio_profile();
        }
        if let Some(path) = &self.config {
            c.apply_file(path)?;
        }
        for pair in &self.overrides {
            c.set_pair(pair)?;
        }
        if let Some(s) = self.seed {
            c.seed = s;
        }
        if let Some(t) = self.threads {
            c.threads = t;
        }
        if let Some(d) = &self.output_dir {
            c.output_dir = d.clone();
        }
        let flags = [
            ("response", &self.response),
            ("task", &self.task),
            ("n_trees", &self.n_trees),
            ("max_depth", &self.max_depth),
            ("n_iter", &self.n_iter),
            ("n_top", &self.n_top),
            ("alpha", &self.alpha),
            ("max_kings", &self.max_kings),
            ("first_king", &self.first_king),
            ("scenario", &self.scenario),
            ("n", &self.n),
            ("p", &self.p),
            ("scale", &self.scale),
            ("replications", &self.replications),
            ("method", &self.method),
        ];
        for (key, value) in flags {
            if let Some(v) = value {
                c.set(key, v)?;
            }
        }
        Ok(c)
    }
}

enum Failure {
    Config(ConfigError),
    Runtime(anyhow::Error),
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::Config(e)
    }
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Runtime(e)
    }
}

impl From<ikf_core::IkfError> for Failure {
    fn from(e: ikf_core::IkfError) -> Self {
        match e {
            ikf_core::IkfError::InvalidParam(m) => Failure::Config(ConfigError(m)),
            other => Failure::Runtime(other.into()),
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(e)) => {
            eprintln!("ikf: configuration error: {e}");
            ExitCode::from(2)
        }
        Err(Failure::Runtime(e)) => {
            eprintln!("ikf: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn dispatch(command: Command) -> Result<(), Failure> {
    match command {
        Command::Run { data, common } => {
            let c = common.resolve()?;
            init_threads(c.threads)?;
            cmd_run(&c, &data)
        }
        Command::Simulate { common, out } => {
            let c = common.resolve()?;
            init_threads(c.threads)?;
            cmd_simulate(&c, &out)
        }
        Command::Bench { common } => {
            let c = common.resolve()?;
            init_threads(c.threads)?;
            cmd_bench(&c)
        }
        Command::Report { report, output_dir } => cmd_report(&report, output_dir.as_deref()),
        Command::Config { common } => {
            let c = common.resolve()?;
            c.ikf_params(c.scenario.default_max_depth()).validate()?;
            print!("{}", c.render(&[]));
            Ok(())
        }
    }
}

#[cfg(feature = "parallel")]
fn init_threads(threads: usize) -> Result<(), Failure> {
    use anyhow::Context;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .context("cannot start the worker pool")?;
    Ok(())
}

#[cfg(not(feature = "parallel"))]
fn init_threads(_threads: usize) -> Result<(), Failure> {
    Ok(())
}

fn cmd_run(c: &Config, data_path: &Path) -> Result<(), Failure> {
    let response = match c.response.parse::<usize>() {
        Ok(i) => ColumnRef::Index(i),
        Err(_) => ColumnRef::Name(c.response.clone()),
    };
    let data = load_csv(data_path, &response, c.task)?;
    let params = c.ikf_params(4);
    let report = run_ikf(&data, &params, &SeedContext::new(c.seed))?;
    let doc = ReportDocument::from_report(&report, data.names());
    doc.write_all(&c.output_dir)?;
    let cfg_path = c.output_dir.join("config.txt");
    ikf_core::report::write_atomic(&cfg_path, c.render(&["threads", "output_dir"]).as_bytes())?;

    let kings: Vec<&str> = doc.kings.iter().map(|k| k.king.as_str()).collect();
    println!("kings ({}): {}", kings.len(), kings.join(" "));
    println!("top 10:");
    for (i, r) in doc.ranking.iter().take(10).enumerate() {
        println!("  {:>2}. {:<12} {:.4}", i + 1, r.variable, r.weight);
    }
    println!("interactions:");
    for t in &doc.typed_interactions {
        let dominant = if t.dominant.is_empty() {
            String::new()
        } else {
            format!(" (dominant: {})", t.dominant.join(" "))
        };
        let flag = if t.low_confidence { " [low confidence]" } else { "" };
        println!("  {:<24} {}{dominant}{flag}", t.vars.join(" x "), t.kind.as_str());
    }
    println!("report written to {}", c.output_dir.display());
    Ok(())
}

fn cmd_simulate(c: &Config, out: &Path) -> Result<(), Failure> {
    let scenario = Scenario {
        id: c.scenario,
        n: c.n,
        p: c.p,
        scale: c.scale,
    };
    let data = bench::generate(&scenario, &SeedContext::new(c.seed))?;
    save_csv(&data, out, "y")?;
    println!("wrote {} rows x {} columns to {}", data.n(), data.p() + 1, out.display());
    Ok(())
}

fn cmd_bench(c: &Config) -> Result<(), Failure> {
    let config = ExperimentConfig {
        scenario: Scenario {
            id: c.scenario,
            n: c.n,
            p: c.p,
            scale: c.scale,
        },
        method: c.method,
        params: c.ikf_params(c.scenario.default_max_depth()),
        replications: c.replications,
        master_seed: c.seed,
    };
    let result = bench::run_experiment(&config)?;
    result.write_outputs(&c.output_dir)?;
    let q = result.summary.mrs_quantiles;
    println!("scenario {} method {} replications {}", c.scenario, c.method, c.replications);
    println!("mrs q05 q25 q50 q75 q95: {} {} {} {} {}", q[0], q[1], q[2], q[3], q[4]);
    match result.summary.orr {
        Some(orr) => println!("orr: {orr}"),
        None => println!("orr: n/a"),
    }
    println!("trees built: {}", diagnostics::snapshot().trees_built);
    println!("outputs written to {}", c.output_dir.display());
    Ok(())
}

fn cmd_report(report: &Path, output_dir: Option<&Path>) -> Result<(), Failure> {
    let doc = ReportDocument::load(report)?;
    let dir = match output_dir {
        Some(d) => d.to_path_buf(),
        None => report
            .parent()
            .filter(|p| !p.as_os_str().is_empty())
            .unwrap_or(Path::new("."))
            .to_path_buf(),
    };
    let written = doc.write_csvs(&dir)?;
    println!("wrote {} tables to {}", written.len(), dir.display());
    Ok(())
}
