use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use agentkernel::budget::write_cost_csv;
use agentkernel::harness::{
    compare_runs, replay_trace, run_scenario, scenario_profile, ConfirmMode, HistoryMode, Metrics, RunOptions,
    Scenario, TrimMode,
};
use agentkernel::safety::{AgentProfile, AutoDeny, AutoGrant, ConfirmationProvider, Interactive};
use anyhow::{Context, Result};
use clap::{Parser, Subcommand, ValueEnum};

/// Scenario runner for the browser-agent kernel.
#[derive(Parser)]
#[command(name = "agentkernel", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario and write its metrics report.
    Run(RunArgs),
    /// Print deltas between two metrics reports of the same scenario.
    Compare { a: PathBuf, b: PathBuf },
    /// Re-run a recorded trace and check it reproduces byte for byte.
    Replay { trace: PathBuf },
}

#[derive(Parser)]
struct RunArgs {
    #[arg(long)]
    scenario: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Defaults to the scenario's own setting.
    #[arg(long)]
    history: Option<HistoryArg>,
    #[arg(long)]
    trim: Option<TrimArg>,
    /// Overrides the profile named in the scenario.
    #[arg(long)]
    profile: Option<PathBuf>,
    #[arg(long)]
    report: PathBuf,
    #[arg(long)]
    csv: Option<PathBuf>,
    /// Trace output; defaults to the report path with a `.trace.jsonl` suffix.
    #[arg(long)]
    trace: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = ConfirmArg::AutoGrant)]
    confirm: ConfirmArg,
}

#[derive(Clone, Copy, ValueEnum)]
enum HistoryArg {
    Full,
    Compressed,
}

#[derive(Clone, Copy, ValueEnum)]
enum TrimArg {
    Off,
    Heuristic,
}

#[derive(Clone, Copy, ValueEnum)]
enum ConfirmArg {
    AutoGrant,
    AutoDeny,
    Interactive,
}

const EXIT_SCENARIO_ERROR: u8 = 3;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(args) => run(args),
        Command::Compare { a, b } => compare(&a, &b),
        Command::Replay { trace } => replay(&trace),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_SCENARIO_ERROR)
        }
    }
}

fn trace_path(args: &RunArgs) -> PathBuf {
    args.trace.clone().unwrap_or_else(|| {
        let mut p = args.report.clone().into_os_string();
        p.push(".trace.jsonl");
        p.into()
    })
}

fn run(args: RunArgs) -> Result<u8> {
    let scenario = Scenario::load(&args.scenario)?;
    let profile = match &args.profile {
        Some(path) => {
            let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            AgentProfile::from_json(&text)?
        }
        None => scenario_profile(&scenario, &args.scenario)?,
    };
    let mut options = RunOptions::for_scenario(&scenario, args.seed);
    if let Some(h) = args.history {
        options.history = match h {
            HistoryArg::Full => HistoryMode::Full,
            HistoryArg::Compressed => HistoryMode::Compressed,
        };
    }
    if let Some(t) = args.trim {
        options.trim = match t {
            TrimArg::Off => TrimMode::Off,
            TrimArg::Heuristic => TrimMode::Heuristic,
        };
    }
    let stdin = io::stdin();
    let mut interactive;
    let (mut grant, mut deny) = (AutoGrant, AutoDeny);
    let confirm: &mut dyn ConfirmationProvider = match args.confirm {
        ConfirmArg::AutoGrant => {
            options.confirm = ConfirmMode::AutoGrant;
            &mut grant
        }
        ConfirmArg::AutoDeny => {
            options.confirm = ConfirmMode::AutoDeny;
            &mut deny
        }
        ConfirmArg::Interactive => {
            options.confirm = ConfirmMode::Interactive;
            interactive = Interactive::new(stdin.lock(), io::stderr());
            &mut interactive
        }
    };

    let out = run_scenario(&scenario, &profile, options, confirm)?;
    let m = &out.metrics;
    write_json(&args.report, m)?;
    std::fs::write(trace_path(&args), out.trace_jsonl()).context("writing trace")?;
    if let Some(csv) = &args.csv {
        let file = File::create(csv).with_context(|| format!("creating {}", csv.display()))?;
        write_cost_csv(&m.ledger, &m.cost, BufWriter::new(file))?;
    }
    println!(
        "{}: {:?} | tool calls {} | actions {} | steps {} | ticks {} | input tokens {} | cost ${:.4}",
        m.scenario,
        m.outcome,
        m.tool_calls,
        m.individual_actions,
        m.steps,
        m.elapsed_ticks,
        m.cost.totals.input_tokens,
        m.cost.cost.total
    );
    Ok(m.outcome.exit_code() as u8)
}

fn write_json(path: &Path, m: &Metrics) -> Result<()> {
    let mut w = BufWriter::new(File::create(path).with_context(|| format!("creating {}", path.display()))?);
    serde_json::to_writer_pretty(&mut w, m)?;
    writeln!(w)?;
    Ok(())
}

fn read_metrics(path: &Path) -> Result<Metrics> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

fn compare(a: &Path, b: &Path) -> Result<u8> {
    let c = compare_runs(&read_metrics(a)?, &read_metrics(b)?)?;
    println!("scenario {}\n  a: {}\n  b: {}", c.scenario, c.a, c.b);
    println!("{:<22} {:>14} {:>14} {:>14} {:>9}", "metric", "a", "b", "delta", "change");
    for d in &c.deltas {
        let pct = d.percent.map_or("-".to_string(), |p| format!("{p:+.1}%"));
        println!("{:<22} {:>14.4} {:>14.4} {:>+14.4} {:>9}", d.metric, d.a, d.b, d.delta, pct);
    }
    Ok(0)
}

fn replay(path: &Path) -> Result<u8> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let report = replay_trace(&text)?;
    match report.mismatch {
        None => {
            println!("replay identical: {} events", report.events);
            Ok(0)
        }
        Some((line, recorded, replayed)) => {
            println!("replay diverged at line {line}\n  recorded: {recorded}\n  replayed: {replayed}");
            Ok(EXIT_SCENARIO_ERROR)
        }
    }
}
