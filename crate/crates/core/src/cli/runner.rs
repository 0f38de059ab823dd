use std::io::Write;
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::scenario::{Arm, Scenario};
use crate::metrics::{aggregate_ci, MetricsError, RunCounters, RunMetrics};
use crate::sim_engine::{SimError, Topology, World};
use crate::time::SimTime;

pub const SEED_BASE_ENV: &str = "LISEC_SEED_BASE";

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error("arm {arm}, seed {seed}: {source}")]
    Sim { arm: Arm, seed: u64, source: SimError },
    #[error("arm {arm}, seed {seed}: {source}")]
    Metrics { arm: Arm, seed: u64, source: MetricsError },
    #[error("{SEED_BASE_ENV} must be an unsigned integer, got `{0}`")]
    SeedBase(String),
    #[error("writing {path}: {source}")]
    Io { path: String, source: std::io::Error },
}

#[derive(Debug, Clone)]
pub struct RunResult {
    pub arm: Arm,
    pub seed: u64,
    pub attackers: usize,
    pub mobility: bool,
    pub metrics: RunMetrics,
    pub counters: RunCounters,
    pub trace: Option<String>,
    /// Final world state, kept alongside the trace.
    pub snapshot: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub mean: f64,
    /// Absent with fewer than two samples.
    pub ci95: Option<f64>,
}

impl Estimate {
    fn of(values: &[f64]) -> Option<Self> {
        match values.len() {
            0 => None,
            1 => Some(Estimate { mean: values[0], ci95: None }),
            _ => aggregate_ci(values).ok().map(|(mean, h)| Estimate { mean, ci95: Some(h) }),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ArmSummary {
    pub arm: Arm,
    pub runs: usize,
    pub pdr: Option<Estimate>,
    pub ae2ed_s: Option<Estimate>,
    pub apc_mw: Option<Estimate>,
    pub n_blacklist: Option<Estimate>,
    pub rt_peak: Option<Estimate>,
}

#[derive(Debug, Clone)]
pub struct Report {
    pub attackers: usize,
    pub mobility: bool,
    pub runs: Vec<RunResult>,
    pub summary: Vec<ArmSummary>,
}

/// Offset from `LISEC_SEED_BASE`, zero when unset.
pub fn seed_base_from_env() -> Result<u64, RunError> {
    match std::env::var(SEED_BASE_ENV) {
        Ok(v) => v.trim().parse().map_err(|_| RunError::SeedBase(v)),
        Err(_) => Ok(0),
    }
}

/// Placement for one seed; shared by every arm so arms differ only in
/// behaviour.
pub fn build_topology(s: &Scenario, seed: u64) -> Result<Topology, SimError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(Topology::random(&s.topology_params(), &mut rng)?)
}

pub fn run_one(s: &Scenario, arm: Arm, seed: u64) -> Result<RunResult, RunError> {
    let sim_err = |source| RunError::Sim { arm, seed, source };
    let mut topo = build_topology(s, seed).map_err(sim_err)?;
    if !arm.has_attackers() {
        topo = topo.without_attackers();
    }
    let mut world = World::new(s.world_config(arm), &topo, seed).map_err(sim_err)?;
    world.run_until(SimTime::from_secs_f64(s.duration_s)).map_err(sim_err)?;
    let counters = world.counters();
    let metrics = RunMetrics::from_counters(&counters, world.now().as_secs_f64())
        .map_err(|source| RunError::Metrics { arm, seed, source })?;
    Ok(RunResult {
        arm,
        seed,
        attackers: if arm.has_attackers() { s.attackers } else { 0 },
        mobility: s.mobility,
        metrics,
        counters,
        trace: s.trace.then(|| world.trace().as_str().to_string()),
        snapshot: s.trace.then(|| world.snapshot()),
    })
}

/// Runs every (arm, seed) pair in parallel; results come back in arm-major,
/// seed-minor order regardless of scheduling.
pub fn run_experiment(s: &Scenario, seed_base: u64) -> Result<Report, RunError> {
    let arms = s.effective_arms();
    let jobs: Vec<(Arm, u64)> =
        arms.iter().flat_map(|&a| s.seeds.0.iter().map(move |&seed| (a, seed.wrapping_add(seed_base)))).collect();
    let runs = jobs.par_iter().map(|&(arm, seed)| run_one(s, arm, seed)).collect::<Result<Vec<_>, _>>()?;
    let summary = arms.iter().map(|&a| summarize(a, &runs)).collect();
    Ok(Report { attackers: s.attackers, mobility: s.mobility, runs, summary })
}

pub fn summarize(arm: Arm, runs: &[RunResult]) -> ArmSummary {
    let rows: Vec<&RunResult> = runs.iter().filter(|r| r.arm == arm).collect();
    let col = |f: &dyn Fn(&RunResult) -> Option<f64>| -> Option<Estimate> {
        Estimate::of(&rows.iter().filter_map(|r| f(r)).collect::<Vec<_>>())
    };
    ArmSummary {
        arm,
        runs: rows.len(),
        pdr: col(&|r| Some(r.metrics.pdr)),
        ae2ed_s: col(&|r| r.metrics.ae2ed_s),
        apc_mw: col(&|r| Some(r.metrics.apc_mw)),
        n_blacklist: col(&|r| Some(r.metrics.n_blacklist as f64)),
        rt_peak: col(&|r| Some(r.metrics.rt_peak as f64)),
    }
}

pub const RUNS_HEADER: &str = "arm,seed,attackers,mobility,pdr,ae2ed_s,apc_mw,n_blacklist,rt_peak";
pub const SUMMARY_HEADER: &str = "arm,attackers,mobility,runs,pdr_mean,pdr_ci95,ae2ed_s_mean,ae2ed_s_ci95,apc_mw_mean,apc_mw_ci95,n_blacklist_mean,n_blacklist_ci95,rt_peak_mean,rt_peak_ci95";

fn on_off(b: bool) -> &'static str {
    if b {
        "on"
    } else {
        "off"
    }
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(|| "NA".to_string(), |x| format!("{x:.6}"))
}

pub fn write_runs_csv<W: Write>(mut out: W, runs: &[RunResult]) -> std::io::Result<()> {
    writeln!(out, "{RUNS_HEADER}")?;
    for r in runs {
        let m = &r.metrics;
        writeln!(
            out,
            "{},{},{},{},{:.6},{},{:.6},{},{}",
            r.arm,
            r.seed,
            r.attackers,
            on_off(r.mobility),
            m.pdr,
            opt(m.ae2ed_s),
            m.apc_mw,
            m.n_blacklist,
            m.rt_peak
        )?;
    }
    Ok(())
}

pub fn write_summary_csv<W: Write>(mut out: W, report: &Report) -> std::io::Result<()> {
    writeln!(out, "{SUMMARY_HEADER}")?;
    for s in &report.summary {
        let attackers = if s.arm.has_attackers() { report.attackers } else { 0 };
        let mut line = format!("{},{},{},{}", s.arm, attackers, on_off(report.mobility), s.runs);
        for e in [s.pdr, s.ae2ed_s, s.apc_mw, s.n_blacklist, s.rt_peak] {
            line.push_str(&format!(",{},{}", opt(e.map(|e| e.mean)), opt(e.and_then(|e| e.ci95))));
        }
        writeln!(out, "{line}")?;
    }
    Ok(())
}

/// Writes `runs.csv`, `summary.csv`, and a trace plus final snapshot per
/// traced run.
pub fn write_outputs(report: &Report, dir: &Path) -> Result<(), RunError> {
    let io = |path: &Path| {
        let path = path.display().to_string();
        move |source| RunError::Io { path, source }
    };
    std::fs::create_dir_all(dir).map_err(io(dir))?;
    let runs = dir.join("runs.csv");
    let mut buf = Vec::new();
    write_runs_csv(&mut buf, &report.runs).map_err(io(&runs))?;
    std::fs::write(&runs, buf).map_err(io(&runs))?;
    let summary = dir.join("summary.csv");
    let mut buf = Vec::new();
    write_summary_csv(&mut buf, report).map_err(io(&summary))?;
    std::fs::write(&summary, buf).map_err(io(&summary))?;
    for r in &report.runs {
        if let Some(trace) = &r.trace {
            let path = dir.join(format!("trace-{}-{}.log", r.arm, r.seed));
            std::fs::write(&path, trace).map_err(io(&path))?;
        }
        if let Some(snap) = &r.snapshot {
            let path = dir.join(format!("snapshot-{}-{}.txt", r.arm, r.seed));
            std::fs::write(&path, snap).map_err(io(&path))?;
        }
    }
    Ok(())
}
