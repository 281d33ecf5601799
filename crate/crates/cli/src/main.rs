#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::fs::File;
use std::io::{self, BufWriter};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};
use pinch_noma::oracle::MAX_ORACLE_USERS;
use pinch_noma::verify_standard_properties;
use pinch_noma_cli::config::ScenarioConfig;
use pinch_noma_cli::solve::{render_summary, run_solve, write_user_csv, Status};
use pinch_noma_cli::summary::{render, summarize, SummaryOptions};
use pinch_noma_cli::sweep::{read_csv, run_sweep, write_csv, SweepParam, SweepSpec};
use pinch_noma_cli::units::{parse_quantity, Dimension};
use pinch_noma_cli::verify::{oracle_check, uniqueness_gap, VerifyOutcome};

const INFEASIBLE: u8 = 2;
const UNIQUENESS_TOLERANCE: f64 = 1e-8;

/// Minimum-power NOMA allocation over pinching-antenna waveguides.
#[derive(Debug, Parser)]
#[command(name = "pinch-noma", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Scenario {
    /// TOML scenario file; every key is optional.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override one setting, e.g. `--set rate=15Mbps`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// Relative stopping tolerance of the fixed-point iteration.
    #[arg(long)]
    tolerance: Option<f64>,
    #[arg(long = "max-iters")]
    max_iters: Option<usize>,
}

impl Scenario {
    fn load(&self) -> anyhow::Result<ScenarioConfig> {
        let mut overrides = self.set.clone();
        if let Some(t) = self.tolerance {
            overrides.push(format!("solver.tolerance={t:e}"));
        }
        if let Some(t) = self.max_iters {
            overrides.push(format!("solver.max_iterations={t}"));
        }
        Ok(ScenarioConfig::load(self.config.as_deref(), &overrides)?)
    }
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Solve one scenario and print the allocation.
    Solve {
        #[command(flatten)]
        scenario: Scenario,
        /// Per-user CSV (power, coefficient, achieved rate).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Sweep one parameter and write total power per method as CSV.
    Sweep {
        #[command(flatten)]
        scenario: Scenario,
        /// PARAM, PARAM=start:stop:step, PARAM=v1,v2,... or interval_D=zoom.
        #[arg(long)]
        sweep: String,
        /// Comma-separated subset of proposed, equal, asymptote.
        #[arg(long, default_value = "proposed")]
        methods: String,
        /// Output CSV; standard output when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Grid-search oracle (N*M <= 4), standard-function checks and uniqueness.
    Verify {
        #[command(flatten)]
        scenario: Scenario,
        #[arg(long, default_value_t = 1000)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Top of the oracle grid, e.g. `1e-3` or `0dBm`.
        #[arg(long)]
        oracle_upper: Option<String>,
        #[arg(long, default_value_t = 40)]
        grid_points: usize,
    },
    /// Derived statistics from a sweep CSV.
    Summarize {
        csv: PathBuf,
        /// Parameter the CSV was swept over.
        #[arg(long)]
        param: String,
        /// Second sweep of the same parameter to compare totals against.
        #[arg(long)]
        reference: Option<PathBuf>,
        #[arg(long, default_value_t = 1e-10)]
        tolerance: f64,
        /// Range for the local-maxima envelope, `lo:hi`.
        #[arg(long, default_value = "5:40")]
        window: String,
        #[arg(long, default_value_t = 5)]
        windows: usize,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn create(path: &Path) -> anyhow::Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path).with_context(|| format!("cannot write {}", path.display()))?))
}

fn open(path: &Path) -> anyhow::Result<File> {
    File::open(path).with_context(|| format!("cannot read {}", path.display()))
}

fn run(cli: Cli) -> anyhow::Result<u8> {
    match cli.command {
        Command::Solve { scenario, out } => {
            let config = scenario.load()?;
            let outcome = run_solve(&config)?;
            print!("{}", render_summary(&config, &outcome));
            if let Some(path) = out {
                write_user_csv(&outcome, create(&path)?)?;
            }
            match outcome.status {
                Status::Feasible => Ok(0),
                Status::Infeasible(why) => {
                    eprintln!("infeasible: {why}");
                    Ok(INFEASIBLE)
                }
            }
        }
        Command::Sweep { scenario, sweep, methods, out } => {
            let config = scenario.load()?;
            let spec = SweepSpec::parse(&sweep, &methods)?;
            eprintln!("sweeping {} over {} values", spec.param.name(), spec.values.len());
            let rows = run_sweep(&config, &spec)?;
            match out {
                Some(path) => write_csv(&rows, spec.param, create(&path)?)?,
                None => write_csv(&rows, spec.param, io::stdout().lock())?,
            }
            Ok(0)
        }
        Command::Verify { scenario, samples, seed, oracle_upper, grid_points } => {
            let config = scenario.load()?;
            let table = config.channel_table()?;
            let requirements = config.requirements()?;
            let options = config.solver_options();
            let upper = oracle_upper.map(|t| parse_quantity(&t, Dimension::Power)).transpose()?;

            let users = config.num_waveguides * config.users_per_waveguide;
            let oracle = if users <= MAX_ORACLE_USERS {
                Some(oracle_check(&table, &requirements, &options, upper, grid_points)?)
            } else {
                eprintln!("skipping grid search: N*M = {users} > {MAX_ORACLE_USERS}");
                None
            };
            let properties = verify_standard_properties(&table, &requirements, samples, seed)?;
            let gap = uniqueness_gap(&table, &requirements, &options, (1e-9, 1e-2))?;

            if let Some(o) = &oracle {
                println!("fixed-point total: {:.9e} W", o.fixed_point_total);
                match &o.best {
                    Some(b) => println!(
                        "oracle total: {:.9e} W (slack {:.3e} W, {} points) {}",
                        b.best_total_power,
                        o.slack,
                        o.evaluations,
                        if o.passed() { "ok" } else { "MISMATCH" }
                    ),
                    None => println!("oracle: no feasible grid point in {} evaluations", o.evaluations),
                }
            }
            println!(
                "standard properties, seed {}, {} samples: positivity {} / monotonicity {} / scalability {} violations",
                properties.seed,
                properties.samples,
                properties.positivity_violations,
                properties.monotonicity_violations,
                properties.scalability_violations
            );
            if let Some(c) = &properties.counterexample {
                println!("  first counterexample: {c:?}");
            }
            println!("uniqueness gap (1e-9 W vs 1e-2 W start): {gap:.3e}");
            let outcome = VerifyOutcome { oracle, properties, uniqueness_gap: gap };
            Ok(if outcome.passed(UNIQUENESS_TOLERANCE) { 0 } else { INFEASIBLE })
        }
        Command::Summarize { csv, param, reference, tolerance, window, windows } => {
            let param: SweepParam = param.parse()?;
            let Some((lo, hi)) = window.split_once(':') else {
                bail!("--window expects lo:hi");
            };
            let range = (
                parse_quantity(lo, Dimension::Plain).context("--window")?,
                parse_quantity(hi, Dimension::Plain).context("--window")?,
            );
            if !(range.1 > range.0) || windows == 0 {
                bail!("--window needs lo < hi and --windows >= 1");
            }
            let rows = read_csv(open(&csv)?).with_context(|| csv.display().to_string())?;
            let reference = match reference {
                Some(p) => Some(read_csv(open(&p)?).with_context(|| p.display().to_string())?),
                None => None,
            };
            let options = SummaryOptions { param, tolerance, envelope_range: range, envelope_windows: windows };
            print!("{}", render(&summarize(&rows, reference.as_deref(), &options)));
            Ok(0)
        }
    }
}
