//! Command-line driver for the experiment suite.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use ltcoop::coop::{self, SessionConfig};
use ltcoop::exec::Exec;
use ltcoop::harness::{self, Experiment, ExperimentSpec};

#[derive(Parser)]
#[command(name = "ltcoop", version, about = "LT-coded cooperative download experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Mean decoding overhead over the (n, N) grid.
    OverheadMatrix(ExpArgs),
    /// Wall-clock decode throughput over the (n, N) grid.
    DecodeThroughput(ExpArgs),
    /// Goodput against assistant count on equal lossless paths.
    GoodputVsAus(ExpArgs),
    /// Assistants leaving and joining mid-session.
    Churn(ExpArgs),
    /// LT and ARQ goodput across loss rates.
    LossSweep(ExpArgs),
    /// LT against ARQ for each assistant count.
    ArqCompare(ExpArgs),
    /// Monte-Carlo incentive tables.
    IncentiveTables(ExpArgs),
    /// Segment, encode, decode and reassemble messages.
    Roundtrip(ExpArgs),
    /// Run one session described by a session TOML file.
    Session {
        config: PathBuf,
        /// Write the report's per-window goodput timeline here as CSV.
        #[arg(long)]
        timeline: Option<PathBuf>,
    },
}

#[derive(Args, Clone)]
struct ExpArgs {
    /// Experiment spec TOML; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// CSV destination [default: results/<experiment>.csv].
    #[arg(long, short)]
    output: Option<PathBuf>,
    /// Run trials on one thread.
    #[arg(long)]
    sequential: bool,
    #[arg(long, value_delimiter = ',')]
    n: Option<Vec<usize>>,
    #[arg(long, value_delimiter = ',')]
    symbol_size: Option<Vec<usize>>,
    #[arg(long, value_delimiter = ',')]
    aus: Option<Vec<usize>>,
    #[arg(long, value_delimiter = ',')]
    loss: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    eps_max: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    au_counts: Option<Vec<usize>>,
    #[arg(long, value_delimiter = ',')]
    k_sizes: Option<Vec<usize>>,
    #[arg(long)]
    users: Option<usize>,
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long)]
    mu0: Option<f64>,
    #[arg(long)]
    c: Option<f64>,
    #[arg(long)]
    delta: Option<f64>,
    #[arg(long)]
    file_size: Option<usize>,
    /// Link rate in bytes per second.
    #[arg(long)]
    rate: Option<f64>,
    #[arg(long)]
    latency_ms: Option<f64>,
    #[arg(long)]
    message_len: Option<usize>,
}

impl ExpArgs {
    fn spec(&self, name: Experiment) -> Result<ExperimentSpec> {
        let mut spec = match &self.config {
            Some(p) => {
                let s = ExperimentSpec::load(p).with_context(|| format!("loading {}", p.display()))?;
                anyhow::ensure!(s.name == name, "{} describes {}, not {}", p.display(), s.name.name(), name.name());
                s
            }
            None => ExperimentSpec::new(name),
        };
        macro_rules! over {
            ($($f:ident),*) => { $( if self.$f.is_some() { spec.grid.$f = self.$f.clone(); } )* };
        }
        over!(n, symbol_size, aus, loss, eps_max, au_counts, k_sizes, users, gamma, mu0, c, delta, file_size, rate, latency_ms, message_len);
        spec.trials = self.trials.or(spec.trials);
        if let Some(s) = self.seed {
            spec.seed = s;
        }
        if self.output.is_some() {
            spec.output = self.output.clone();
        }
        Ok(spec)
    }

    fn exec(&self) -> Exec {
        if self.sequential {
            Exec::Sequential
        } else {
            Exec::default()
        }
    }
}

fn experiment(name: Experiment, args: &ExpArgs) -> Result<bool> {
    let spec = args.spec(name)?;
    let report = harness::run(&spec, args.exec())?;
    let out = spec.output.clone().unwrap_or_else(|| PathBuf::from(format!("results/{}.csv", name.name())));
    report.write_csv(&out).with_context(|| format!("writing {}", out.display()))?;
    println!("{} ({} rows -> {})", name.name(), report.rows, out.display());
    for line in &report.summary {
        println!("  {line}");
    }
    for c in &report.checks {
        println!("  [{}] {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
    }
    Ok(report.passed())
}

fn session(config: &Path, timeline: Option<&PathBuf>) -> Result<bool> {
    let cfg = SessionConfig::load(config)?;
    let r = coop::run(&cfg)?;
    println!(
        "mode {:?}: {} bytes in {:.3} s after {:.3} s setup, goodput {:.1} kB/s, overhead {:.3}, exact {}",
        r.mode,
        r.file_len,
        r.completion_time,
        r.setup_time,
        r.goodput / 1e3,
        r.total_overhead,
        r.exact
    );
    for p in &r.per_path {
        println!("  {}: sent {} forwarded {} delivered {}", p.path, p.sent, p.forwarded, p.delivered);
    }
    if let Some(path) = timeline {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["window_start", "goodput"])?;
        for (i, g) in r.timeline.iter().enumerate() {
            w.write_record([(i as f64 * r.monitor_window).to_string(), g.to_string()])?;
        }
        w.flush()?;
    }
    Ok(r.exact)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::OverheadMatrix(a) => experiment(Experiment::OverheadMatrix, a),
        Command::DecodeThroughput(a) => experiment(Experiment::DecodeThroughput, a),
        Command::GoodputVsAus(a) => experiment(Experiment::GoodputVsAus, a),
        Command::Churn(a) => experiment(Experiment::Churn, a),
        Command::LossSweep(a) => experiment(Experiment::LossSweep, a),
        Command::ArqCompare(a) => experiment(Experiment::ArqCompare, a),
        Command::IncentiveTables(a) => experiment(Experiment::IncentiveTables, a),
        Command::Roundtrip(a) => experiment(Experiment::Roundtrip, a),
        Command::Session { config, timeline } => session(config, timeline.as_ref()),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
