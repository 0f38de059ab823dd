use crate::time::SimTime;

/// Per-state power draw in milliwatts.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerProfile {
    pub p_tx: f64,
    pub p_rx: f64,
    pub p_cpu: f64,
    pub p_lpm: f64,
}

impl Default for PowerProfile {
    fn default() -> Self {
        PowerProfile { p_tx: 52.2, p_rx: 56.4, p_cpu: 1.8, p_lpm: 0.0545 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
#[error("simulation time must be positive")]
pub struct NonPositiveDuration;

/// Time spent per radio/CPU state; low-power mode is whatever remains.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyLedger {
    pub profile: PowerProfile,
    tx: SimTime,
    rx: SimTime,
    cpu: SimTime,
    elapsed: SimTime,
}

impl EnergyLedger {
    pub fn new(profile: PowerProfile) -> Self {
        EnergyLedger { profile, tx: SimTime::ZERO, rx: SimTime::ZERO, cpu: SimTime::ZERO, elapsed: SimTime::ZERO }
    }

    /// Ledger with explicit state durations in seconds.
    pub fn from_seconds(profile: PowerProfile, tx: f64, rx: f64, cpu: f64, lpm: f64) -> Self {
        let tx = SimTime::from_secs_f64(tx);
        let rx = SimTime::from_secs_f64(rx);
        let cpu = SimTime::from_secs_f64(cpu);
        let elapsed = tx + rx + cpu + SimTime::from_secs_f64(lpm);
        EnergyLedger { profile, tx, rx, cpu, elapsed }
    }

    pub fn add_tx(&mut self, d: SimTime) {
        self.tx = self.tx + d;
    }

    pub fn add_rx(&mut self, d: SimTime) {
        self.rx = self.rx + d;
    }

    pub fn add_cpu(&mut self, d: SimTime) {
        self.cpu = self.cpu + d;
    }

    pub fn set_elapsed(&mut self, t: SimTime) {
        self.elapsed = t;
    }

    fn busy(&self) -> SimTime {
        self.tx + self.rx + self.cpu
    }

    pub fn tx_s(&self) -> f64 {
        self.tx.as_secs_f64()
    }

    pub fn rx_s(&self) -> f64 {
        self.rx.as_secs_f64()
    }

    pub fn cpu_s(&self) -> f64 {
        self.cpu.as_secs_f64()
    }

    pub fn lpm_s(&self) -> f64 {
        self.elapsed.saturating_sub(self.busy()).as_secs_f64()
    }

    /// Elapsed time the ledger covers; never less than the busy time.
    pub fn elapsed_s(&self) -> f64 {
        self.elapsed.max(self.busy()).as_secs_f64()
    }
}

pub fn energy_of(ledger: &EnergyLedger) -> f64 {
    let p = &ledger.profile;
    ledger.tx_s() * p.p_tx + ledger.rx_s() * p.p_rx + ledger.cpu_s() * p.p_cpu + ledger.lpm_s() * p.p_lpm
}

pub fn power_of(ledger: &EnergyLedger, duration_s: f64) -> Result<f64, NonPositiveDuration> {
    if duration_s > 0.0 {
        Ok(energy_of(ledger) / duration_s)
    } else {
        Err(NonPositiveDuration)
    }
}
