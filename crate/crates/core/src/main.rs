use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use log::info;

use lisec::cli::{run_experiment, seed_base_from_env, write_outputs, Scenario};

/// Run RPL routing-table falsification experiments across arms and seeds.
#[derive(Debug, Parser)]
#[command(name = "lisec", version)]
struct Args {
    /// Scenario file of key=value lines.
    #[arg(long)]
    scenario: Option<PathBuf>,
    /// Comma-separated arms: baseline, attack, defense, defense_encrypted.
    #[arg(long)]
    arms: Option<String>,
    /// Seed count (`10` runs seeds 1..=10) or a comma-separated list.
    #[arg(long)]
    seeds: Option<String>,
    #[arg(long)]
    attackers: Option<String>,
    /// on|off
    #[arg(long)]
    mobility: Option<String>,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// on|off; writes trace-<arm>-<seed>.log per run.
    #[arg(long)]
    trace: Option<String>,
    /// on|off; runs the defense arm with the encrypted license.
    #[arg(long)]
    encrypted: Option<String>,
    /// Any scenario key, e.g. `--set rt_cap=8`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

fn load(args: &Args) -> Result<Scenario, Box<dyn std::error::Error>> {
    let mut s = Scenario::default();
    if let Some(path) = &args.scenario {
        let text = std::fs::read_to_string(path).map_err(|e| format!("cannot read {}: {e}", path.display()))?;
        s.apply_text(&text)?;
    }
    let flags = [
        ("arms", &args.arms),
        ("seeds", &args.seeds),
        ("attackers", &args.attackers),
        ("mobility", &args.mobility),
        ("trace", &args.trace),
        ("encrypted", &args.encrypted),
    ];
    for (key, value) in flags {
        if let Some(v) = value {
            s.set(key, v)?;
        }
    }
    for kv in &args.overrides {
        let (k, v) = kv.split_once('=').ok_or_else(|| format!("--set expects KEY=VALUE, got `{kv}`"))?;
        s.set(k.trim(), v.trim())?;
    }
    s.validate()?;
    Ok(s)
}

fn run(args: &Args) -> Result<(), Box<dyn std::error::Error>> {
    let scenario = load(args)?;
    let base = seed_base_from_env()?;
    info!("running {} arm(s) x {} seed(s), seed base {base}", scenario.effective_arms().len(), scenario.seeds.0.len());
    let report = run_experiment(&scenario, base)?;
    write_outputs(&report, &args.out)?;
    for s in &report.summary {
        let show = |e: Option<lisec::cli::Estimate>| match e {
            Some(e) => match e.ci95 {
                Some(h) => format!("{:.4} ± {:.4}", e.mean, h),
                None => format!("{:.4}", e.mean),
            },
            None => "NA".to_string(),
        };
        println!(
            "{:<18} runs={:<3} pdr={}  ae2ed_s={}  apc_mw={}",
            s.arm.as_str(),
            s.runs,
            show(s.pdr),
            show(s.ae2ed_s),
            show(s.apc_mw)
        );
    }
    println!("wrote {}", args.out.display());
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let args = Args::parse();
    match run(&args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
