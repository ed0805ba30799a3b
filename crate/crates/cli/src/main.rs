//! `geokv`: optimize, simulate, check and sweep single-key configurations.
//!
//! Exit codes: 0 on success, 1 on unreadable or malformed input, 2 when
//! `optimize` finds nothing feasible. `check` exits 0 for a linearizable
//! history, 1 for a violation and 2 when the history cannot be read.

use std::fs::File;
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use geokv_checker::check;
use geokv_core::{presets, History, Model, ModelFile, Workload};
use geokv_optimizer::search::Policy;
use geokv_optimizer::sweep::{slo_range, write_csv};
use geokv_optimizer::{optimize_with, sweep, SearchOptions};
use geokv_sim::{run, Scenario};
use geokv_workload::read_trace;

#[derive(Parser)]
#[command(name = "geokv", version, about = "Cost-optimized linearizable key-value store toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Cheapest configuration meeting the latency targets, as JSON.
    Optimize(OptimizeArgs),
    /// Runs a scenario file through the simulator.
    Simulate(SimulateArgs),
    /// Checks a history file for linearizability.
    Check(CheckArgs),
    /// Optimizer decisions over a range of latency targets, as CSV.
    Sweep(SweepArgs),
    /// Prints a built-in cluster model as JSON.
    Preset {
        /// Only `nine-regions` is available.
        name: String,
    },
}

#[derive(Args)]
struct Inputs {
    /// Cluster model JSON file, or `nine-regions` for the built-in model.
    model: String,
    /// Workload JSON file.
    workload: PathBuf,
    /// Overrides the model's VM-seconds per request.
    #[arg(long)]
    theta_v: Option<f64>,
    /// Candidate DCs kept per origin during the search.
    #[arg(long, default_value_t = SearchOptions::default().top_m)]
    top_m: usize,
}

#[derive(Args)]
struct OptimizeArgs {
    #[command(flatten)]
    inputs: Inputs,
    #[arg(long)]
    slo_get: Option<f64>,
    #[arg(long)]
    slo_put: Option<f64>,
    /// Failures to tolerate.
    #[arg(long)]
    f: Option<usize>,
    /// full, abd-only, cas-only, nearest, nearest-<protocol> or fixed-<protocol>-<n>-<k>.
    #[arg(long, default_value = "full")]
    policy: String,
}

#[derive(Args)]
struct SimulateArgs {
    scenario: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    /// Seconds of arrivals.
    #[arg(long)]
    duration: Option<f64>,
    /// Request trace CSV replayed alongside the scenario's workload.
    #[arg(long)]
    trace: Option<PathBuf>,
    #[arg(long)]
    history_out: Option<PathBuf>,
    #[arg(long)]
    stats_out: Option<PathBuf>,
}

#[derive(Args)]
struct CheckArgs {
    history: PathBuf,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    inputs: Inputs,
    /// `START:END` in milliseconds, inclusive.
    #[arg(long)]
    slo_range: String,
    #[arg(long, default_value_t = 50.0)]
    step: f64,
    /// Comma-separated policies.
    #[arg(long, default_value = "full")]
    policies: String,
    /// Output file; standard output when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).with_context(|| format!("{}: cannot read", path.display()))
}

fn load_model(name: &str, theta_v: Option<f64>) -> Result<Model> {
    let mut file = if name == "nine-regions" && !Path::new(name).exists() {
        presets::nine_regions()
    } else {
        ModelFile::from_json(&read(Path::new(name))?, name)?
    };
    if let Some(t) = theta_v {
        file.theta_v = t;
    }
    let model: Model = file.into_model().with_context(|| format!("{name}: invalid model"))?;
    model.validate().with_context(|| format!("{name}: invalid model"))?;
    Ok(model)
}

fn load_workload(path: &Path, d: usize) -> Result<Workload> {
    let text = read(path)?;
    let spec: Workload =
        serde_json::from_str(&text).with_context(|| format!("{}: malformed workload", path.display()))?;
    spec.validate(d).with_context(|| format!("{}: invalid workload", path.display()))?;
    Ok(spec)
}

fn policy(s: &str) -> Result<Policy> {
    s.parse().map_err(|e: String| anyhow!("--policy: {e}"))
}

fn options(inputs: &Inputs) -> SearchOptions {
    SearchOptions { top_m: inputs.top_m, ..SearchOptions::default() }
}

fn optimize(args: OptimizeArgs) -> Result<ExitCode> {
    let model = load_model(&args.inputs.model, args.inputs.theta_v)?;
    let mut spec = load_workload(&args.inputs.workload, model.d())?;
    if let Some(v) = args.slo_get {
        spec.slo_get = v;
    }
    if let Some(v) = args.slo_put {
        spec.slo_put = v;
    }
    if let Some(f) = args.f {
        spec.f = f;
    }
    spec.validate(model.d()).context("flags")?;
    let decision = optimize_with(&spec, &model, &policy(&args.policy)?, &options(&args.inputs))?;
    println!("{}", serde_json::to_string_pretty(&decision)?);
    if decision.feasible {
        Ok(ExitCode::SUCCESS)
    } else {
        eprintln!("infeasible: no configuration meets the latency targets under policy {}", decision.policy);
        Ok(ExitCode::from(2))
    }
}

fn simulate(args: SimulateArgs) -> Result<ExitCode> {
    let name = args.scenario.display().to_string();
    let mut scenario = Scenario::from_json(&read(&args.scenario)?, &name)?;
    if let Some(seed) = args.seed {
        scenario.seed = seed;
    }
    if let Some(d) = args.duration {
        scenario.duration_s = Some(d);
    }
    if let Some(path) = &args.trace {
        let file = File::open(path).with_context(|| format!("{}: cannot read", path.display()))?;
        scenario.trace.extend(read_trace(BufReader::new(file), &path.display().to_string())?);
    }
    let result = run(&scenario)?;
    if let Some(path) = &args.history_out {
        let f = File::create(path).with_context(|| format!("{}: cannot write", path.display()))?;
        let mut w = BufWriter::new(f);
        result.history.write_jsonl(&mut w)?;
        w.flush()?;
    }
    if let Some(path) = &args.stats_out {
        let text = serde_json::to_string_pretty(&result.stats)?;
        std::fs::write(path, text + "\n").with_context(|| format!("{}: cannot write", path.display()))?;
    }
    let s = &result.stats;
    let names = &scenario.model.dcs;
    println!(
        "ops {} completed {} incomplete {} skipped {}",
        s.ops_invoked, s.ops_completed, s.ops_incomplete, s.ops_skipped
    );
    for o in &s.per_origin {
        println!(
            "  {:<12} GET n={} p99={:.1} ms  PUT n={} p99={:.1} ms  one-phase GETs {:.3}",
            names.get(o.origin.0).map_or("?", String::as_str),
            o.get.count,
            o.get.p99_ms,
            o.put.count,
            o.put.p99_ms,
            o.one_phase_fraction
        );
    }
    println!(
        "cost $/s network {:.6e} vm {:.6e} storage {:.6e}",
        s.network_dollars_per_s, s.vm_dollars_per_s, s.storage_dollars_per_s
    );
    println!("one-phase GET fraction {:.3}", s.one_phase_fraction);
    for r in &s.reconfigurations {
        println!(
            "reconfiguration {} -> {} ({} to {}) at {:.1} ms took {:.1} ms",
            r.from_epoch,
            r.to_epoch,
            r.from_protocol,
            r.to_protocol,
            geokv_sim::ms(r.started),
            r.duration_ms()
        );
    }
    Ok(ExitCode::SUCCESS)
}

fn check_cmd(args: CheckArgs) -> ExitCode {
    let name = args.history.display().to_string();
    let history = File::open(&args.history)
        .with_context(|| format!("{name}: cannot read"))
        .and_then(|f| History::read_jsonl(BufReader::new(f), &name).map_err(Into::into));
    let verdict = history.and_then(|h| check(&h).with_context(|| format!("{name}: malformed history")));
    match verdict {
        Ok(v) if v.linearizable => {
            println!("linearizable");
            ExitCode::SUCCESS
        }
        Ok(v) => {
            let key = v.key.as_ref().map_or("?", |k| k.as_str());
            println!("not linearizable: key `{key}`, ops {:?}, reason {:?}", v.violation, v.reason);
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn parse_range(s: &str) -> Result<(f64, f64)> {
    let (a, b) = s.split_once(':').or_else(|| s.split_once("..")).ok_or_else(|| anyhow!("--slo-range: expected START:END"))?;
    let num = |x: &str| x.trim().parse::<f64>().map_err(|_| anyhow!("--slo-range: `{x}` is not a number"));
    Ok((num(a)?, num(b)?))
}

fn sweep_cmd(args: SweepArgs) -> Result<ExitCode> {
    let model = load_model(&args.inputs.model, args.inputs.theta_v)?;
    let spec = load_workload(&args.inputs.workload, model.d())?;
    let (start, end) = parse_range(&args.slo_range)?;
    if args.step.is_nan() || args.step <= 0.0 {
        bail!("--step must be positive");
    }
    let policies = args.policies.split(',').filter(|p| !p.trim().is_empty()).map(policy).collect::<Result<Vec<_>>>()?;
    let rows = sweep(&spec, &model, &slo_range(start, end, args.step), &policies, &options(&args.inputs))?;
    match &args.out {
        Some(path) => write_csv(&rows, File::create(path).with_context(|| format!("{}: cannot write", path.display()))?)?,
        None => write_csv(&rows, io::stdout().lock())?,
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Optimize(a) => optimize(a),
        Command::Simulate(a) => simulate(a),
        Command::Check(a) => return check_cmd(a),
        Command::Sweep(a) => sweep_cmd(a),
        Command::Preset { name } => match name.as_str() {
            "nine-regions" => serde_json::to_string_pretty(&presets::nine_regions())
                .map(|t| {
                    println!("{t}");
                    ExitCode::SUCCESS
                })
                .map_err(Into::into),
            other => Err(anyhow!("unknown preset `{other}`")),
        },
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
