//! Per-run counters, the derived delivery/delay/power metrics, and
//! cross-seed aggregation.

use std::collections::BTreeMap;

use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::messages::NodeId;
use crate::sim_engine::energy::{power_of, EnergyLedger};
use crate::time::SimTime;

#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
pub enum MetricsError {
    #[error("no data packets were sent")]
    NothingSent,
    #[error("no data packets were delivered")]
    NothingDelivered,
    #[error("simulation time must be positive")]
    NonPositiveDuration,
    #[error("no client ledgers")]
    NoClients,
    #[error("need at least two samples, got {0}")]
    TooFewSamples(usize),
}

/// Root-side verdicts split by whether the claimed identity was a real node.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct DecisionCounts {
    pub genuine_acked: u64,
    pub genuine_nacked: u64,
    pub forged_acked: u64,
    pub forged_nacked: u64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunCounters {
    pub sent_per_node: BTreeMap<NodeId, u64>,
    pub received_at_root: u64,
    /// End-to-end delay of each delivered packet, seconds.
    pub delays: Vec<f64>,
    /// Energy ledgers of the legitimate clients.
    pub ledgers: BTreeMap<NodeId, EnergyLedger>,
    pub n_blacklisted: u64,
    pub rt_occupancy_timeline: Vec<(SimTime, usize)>,
    pub rt_peak: usize,
    pub decisions: DecisionCounts,
    pub forged_emitted: u64,
    pub data_dropped: BTreeMap<&'static str, u64>,
    pub control_dropped: BTreeMap<&'static str, u64>,
    /// Frames put on air carrying DAOs or DAO-ACKs, retries included.
    pub dao_path_tx: u64,
    pub control_tx: u64,
}

impl RunCounters {
    pub fn total_sent(&self) -> u64 {
        self.sent_per_node.values().sum()
    }
}

pub fn pdr(c: &RunCounters) -> Result<f64, MetricsError> {
    let sent = c.total_sent();
    if sent == 0 {
        return Err(MetricsError::NothingSent);
    }
    Ok(c.received_at_root as f64 / sent as f64)
}

/// Mean per-packet delay over delivered packets.
pub fn ae2ed(c: &RunCounters) -> Result<f64, MetricsError> {
    if c.delays.is_empty() {
        return Err(MetricsError::NothingDelivered);
    }
    Ok(c.delays.iter().sum::<f64>() / c.delays.len() as f64)
}

/// Mean power over the client ledgers.
pub fn apc(c: &RunCounters, duration_s: f64) -> Result<f64, MetricsError> {
    if duration_s <= 0.0 {
        return Err(MetricsError::NonPositiveDuration);
    }
    if c.ledgers.is_empty() {
        return Err(MetricsError::NoClients);
    }
    let total: f64 = c
        .ledgers
        .values()
        .map(|l| power_of(l, duration_s).map_err(|_| MetricsError::NonPositiveDuration))
        .sum::<Result<f64, _>>()?;
    Ok(total / c.ledgers.len() as f64)
}

/// Sample mean and the half-width of its two-sided 95% Student-t interval.
pub fn aggregate_ci(values: &[f64]) -> Result<(f64, f64), MetricsError> {
    let n = values.len();
    if n < 2 {
        return Err(MetricsError::TooFewSamples(n));
    }
    if values.iter().all(|v| *v == values[0]) {
        return Ok((values[0], 0.0));
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    let t = StudentsT::new(0.0, 1.0, (n - 1) as f64).expect("degrees of freedom are positive").inverse_cdf(0.975);
    Ok((mean, t * var.sqrt() / (n as f64).sqrt()))
}

/// One row of per-run results.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunMetrics {
    pub pdr: f64,
    pub ae2ed_s: Option<f64>,
    pub apc_mw: f64,
    pub n_blacklist: u64,
    pub rt_peak: usize,
}

impl RunMetrics {
    /// Runs where nothing was sent report a PDR of zero.
    pub fn from_counters(c: &RunCounters, duration_s: f64) -> Result<Self, MetricsError> {
        Ok(RunMetrics {
            pdr: pdr(c).unwrap_or(0.0),
            ae2ed_s: ae2ed(c).ok(),
            apc_mw: apc(c, duration_s)?,
            n_blacklist: c.n_blacklisted,
            rt_peak: c.rt_peak,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim_engine::energy::PowerProfile;

    fn counters(sent: u64, received: u64) -> RunCounters {
        let mut c = RunCounters::default();
        c.sent_per_node.insert(NodeId(2), sent);
        c.received_at_root = received;
        c
    }

    #[test]
    fn pdr_examples() {
        assert_eq!(pdr(&counters(1740, 1740)).unwrap(), 1.0);
        assert_eq!(pdr(&counters(1740, 0)).unwrap(), 0.0);
        assert!((pdr(&counters(1740, 957)).unwrap() - 0.55).abs() < 1e-12);
        assert_eq!(pdr(&counters(0, 0)), Err(MetricsError::NothingSent));
    }

    #[test]
    fn ae2ed_is_mean_delay() {
        let mut c = counters(3, 3);
        c.delays = vec![0.01, 0.02, 0.03];
        assert!((ae2ed(&c).unwrap() - 0.02).abs() < 1e-12);
        assert_eq!(ae2ed(&counters(1, 0)), Err(MetricsError::NothingDelivered));
    }

    #[test]
    fn apc_idle_clients_draw_lpm() {
        let mut c = RunCounters::default();
        for i in 2..5 {
            let mut l = EnergyLedger::new(PowerProfile::default());
            l.set_elapsed(SimTime::from_secs(100));
            c.ledgers.insert(NodeId(i), l);
        }
        assert!((apc(&c, 100.0).unwrap() - 0.0545).abs() < 1e-12);
        assert_eq!(apc(&c, 0.0), Err(MetricsError::NonPositiveDuration));
    }

    #[test]
    fn ci_two_points() {
        let (m, h) = aggregate_ci(&[0.0, 1.0]).unwrap();
        assert_eq!(m, 0.5);
        assert!((h - 6.353_102).abs() < 1e-4, "half width {h}");
        assert_eq!(aggregate_ci(&[1.0]), Err(MetricsError::TooFewSamples(1)));
    }

    #[test]
    fn ci_constant_values() {
        let (m, h) = aggregate_ci(&[1.0; 10]).unwrap();
        assert_eq!((m, h), (1.0, 0.0));
    }
}
