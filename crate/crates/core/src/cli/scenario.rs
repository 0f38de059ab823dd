use std::fmt;
use std::path::Path;
use std::str::FromStr;

use log::warn;

use crate::puf_auth::Width;
use crate::rpl_node::{DefenseMode, FullPolicy, ProtocolConfig, TrickleParams};
use crate::sim_engine::{Area, LinkModel, MobilityParams, PowerProfile, RootPlacement, TopologyParams, WorldConfig};
use crate::time::SimTime;

#[derive(Debug, thiserror::Error)]
pub enum ScenarioError {
    #[error("cannot read {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("line {line}: expected key=value")]
    Syntax { line: usize },
    #[error("unknown key `{0}`")]
    UnknownKey(String),
    #[error("invalid value for `{key}`: {reason}")]
    Invalid { key: String, reason: String },
}

fn invalid(key: &str, reason: impl Into<String>) -> ScenarioError {
    ScenarioError::Invalid { key: key.to_string(), reason: reason.into() }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Arm {
    Baseline,
    Attack,
    Defense,
    DefenseEncrypted,
}

impl Arm {
    pub const ALL: [Arm; 4] = [Arm::Baseline, Arm::Attack, Arm::Defense, Arm::DefenseEncrypted];

    pub fn as_str(self) -> &'static str {
        match self {
            Arm::Baseline => "baseline",
            Arm::Attack => "attack",
            Arm::Defense => "defense",
            Arm::DefenseEncrypted => "defense_encrypted",
        }
    }

    pub fn has_attackers(self) -> bool {
        self != Arm::Baseline
    }

    pub fn defense(self) -> DefenseMode {
        match self {
            Arm::Baseline | Arm::Attack => DefenseMode::Off,
            Arm::Defense => DefenseMode::Plain,
            Arm::DefenseEncrypted => DefenseMode::Encrypted,
        }
    }
}

impl fmt::Display for Arm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Arm {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Arm::ALL
            .into_iter()
            .find(|a| a.as_str() == s.trim())
            .ok_or_else(|| format!("unknown arm `{s}` (expected baseline, attack, defense or defense_encrypted)"))
    }
}

/// Seeds given either as a count (`10` means 1..=10) or an explicit list.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SeedSpec(pub Vec<u64>);

impl FromStr for SeedSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        if s.contains(',') {
            let seeds = s
                .split(',')
                .map(|p| p.trim().parse::<u64>().map_err(|e| format!("`{p}`: {e}")))
                .collect::<Result<Vec<_>, _>>()?;
            return Ok(SeedSpec(seeds));
        }
        let n: u64 = s.parse().map_err(|e| format!("`{s}`: {e}"))?;
        if n == 0 {
            return Err("need at least one seed".into());
        }
        Ok(SeedSpec((1..=n).collect()))
    }
}

fn parse_switch(s: &str) -> Result<bool, String> {
    match s.trim() {
        "on" | "true" | "1" | "yes" => Ok(true),
        "off" | "false" | "0" | "no" => Ok(false),
        other => Err(format!("expected on/off, got `{other}`")),
    }
}

fn parse_arms(s: &str) -> Result<Vec<Arm>, String> {
    let arms = s.split(',').map(str::parse).collect::<Result<Vec<Arm>, _>>()?;
    if arms.is_empty() {
        return Err("no arms given".into());
    }
    Ok(arms)
}

/// Everything one experiment needs. Durations are seconds.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub grid_m: f64,
    pub n_clients: usize,
    pub attackers: usize,
    pub mobility: bool,
    pub root_position: RootPlacement,
    pub duration_s: f64,
    pub seeds: SeedSpec,
    pub arms: Vec<Arm>,
    pub encrypted: bool,
    pub trace: bool,
    pub boot_window_s: f64,
    /// `None` boots attackers inside the window like everyone else.
    pub attacker_boot_s: Option<f64>,

    pub rt_cap: usize,
    pub rt_full_policy: FullPolicy,
    pub root_rt_cap: usize,
    pub rank_increase: u16,
    pub hysteresis: u16,
    pub route_lifetime_s: f64,
    pub dao_period_s: f64,
    pub dao_ack_timeout_s: f64,
    pub dao_max_retries: u32,
    pub ineligible_hold_s: f64,
    pub link_fail_hold_s: f64,
    pub link_fail_threshold: u8,
    pub neighbor_timeout_s: f64,
    pub dis_interval_s: f64,
    pub data_period_s: f64,
    pub data_payload_bytes: usize,
    pub attack_period_s: f64,
    pub forged_per_period: u32,
    pub license_width: u32,
    pub trickle_imin_s: f64,
    pub trickle_doublings: u32,
    pub trickle_k: u32,

    pub tx_range_m: f64,
    pub loss_prob: f64,
    pub d_hop_ms: f64,
    pub mac_retries: u32,
    pub bitrate_bps: u64,
    pub p_tx_mw: f64,
    pub p_rx_mw: f64,
    pub p_cpu_mw: f64,
    pub p_lpm_mw: f64,
    pub cpu_per_packet_ms: f64,
    pub speed_min: f64,
    pub speed_max: f64,
    pub pause_s: f64,
    pub mobility_tick_s: f64,
}

impl Default for Scenario {
    fn default() -> Self {
        let proto = ProtocolConfig::default();
        let link = LinkModel::default();
        let power = PowerProfile::default();
        let mob = MobilityParams::default();
        Scenario {
            grid_m: 200.0,
            n_clients: 29,
            attackers: 1,
            mobility: false,
            root_position: RootPlacement::Centre,
            duration_s: 1800.0,
            seeds: SeedSpec((1..=10).collect()),
            arms: vec![Arm::Baseline, Arm::Attack, Arm::Defense],
            encrypted: false,
            trace: false,
            boot_window_s: 0.0,
            attacker_boot_s: None,
            rt_cap: proto.rt_capacity,
            rt_full_policy: proto.rt_full_policy,
            root_rt_cap: proto.root_rt_capacity,
            rank_increase: proto.min_hop_rank_increase,
            hysteresis: proto.parent_switch_threshold,
            route_lifetime_s: proto.route_lifetime.as_secs_f64(),
            dao_period_s: proto.dao_period.as_secs_f64(),
            dao_ack_timeout_s: proto.dao_ack_timeout.as_secs_f64(),
            dao_max_retries: proto.dao_max_retries,
            ineligible_hold_s: proto.ineligible_hold.as_secs_f64(),
            link_fail_hold_s: proto.link_fail_hold.as_secs_f64(),
            link_fail_threshold: proto.link_fail_threshold,
            neighbor_timeout_s: proto.neighbor_timeout.as_secs_f64(),
            dis_interval_s: proto.dis_interval.as_secs_f64(),
            data_period_s: proto.data_period.as_secs_f64(),
            data_payload_bytes: proto.data_payload,
            attack_period_s: proto.attack_period.as_secs_f64(),
            forged_per_period: proto.forged_per_period,
            license_width: u32::from(proto.license_width.bits()),
            trickle_imin_s: proto.trickle.i_min.as_secs_f64(),
            trickle_doublings: proto.trickle.i_max_doublings,
            trickle_k: proto.trickle.k,
            tx_range_m: link.tx_range,
            loss_prob: link.loss_prob,
            d_hop_ms: link.hop_delay.as_secs_f64() * 1e3,
            mac_retries: link.mac_retries,
            bitrate_bps: link.bitrate_bps,
            p_tx_mw: power.p_tx,
            p_rx_mw: power.p_rx,
            p_cpu_mw: power.p_cpu,
            p_lpm_mw: power.p_lpm,
            cpu_per_packet_ms: 1.0,
            speed_min: mob.speed_min,
            speed_max: mob.speed_max,
            pause_s: mob.pause_s,
            mobility_tick_s: 1.0,
        }
    }
}

fn num<T: FromStr>(key: &str, v: &str) -> Result<T, ScenarioError>
where
    T::Err: fmt::Display,
{
    v.trim().parse::<T>().map_err(|e| invalid(key, format!("`{}`: {e}", v.trim())))
}

impl Scenario {
    pub fn load(path: &Path) -> Result<Self, ScenarioError> {
        let text = std::fs::read_to_string(path)
            .map_err(|source| ScenarioError::Io { path: path.display().to_string(), source })?;
        let mut s = Scenario::default();
        s.apply_text(&text)?;
        s.validate()?;
        Ok(s)
    }

    pub fn parse(text: &str) -> Result<Self, ScenarioError> {
        let mut s = Scenario::default();
        s.apply_text(text)?;
        s.validate()?;
        Ok(s)
    }

    /// Applies `key=value` lines on top of the current values.
    pub fn apply_text(&mut self, text: &str) -> Result<(), ScenarioError> {
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or(ScenarioError::Syntax { line: i + 1 })?;
            self.set(k.trim(), v.trim())?;
        }
        Ok(())
    }

    pub fn set(&mut self, key: &str, v: &str) -> Result<(), ScenarioError> {
        match key {
            "grid_m" => self.grid_m = num(key, v)?,
            "n_clients" => self.n_clients = num(key, v)?,
            "attackers" => self.attackers = num(key, v)?,
            "mobility" => self.mobility = parse_switch(v).map_err(|e| invalid(key, e))?,
            "root_position" => self.root_position = v.parse().map_err(|e| invalid(key, e))?,
            "duration_s" => self.duration_s = num(key, v)?,
            "seeds" => self.seeds = num(key, v)?,
            "arms" => self.arms = parse_arms(v).map_err(|e| invalid(key, e))?,
            "encrypted" => self.encrypted = parse_switch(v).map_err(|e| invalid(key, e))?,
            "trace" => self.trace = parse_switch(v).map_err(|e| invalid(key, e))?,
            "boot_window_s" => self.boot_window_s = num(key, v)?,
            "attacker_boot_s" => self.attacker_boot_s = if v.trim() == "window" { None } else { Some(num(key, v)?) },
            "rt_cap" => self.rt_cap = num(key, v)?,
            "rt_full_policy" => self.rt_full_policy = v.parse().map_err(|e| invalid(key, e))?,
            "root_rt_cap" => self.root_rt_cap = num(key, v)?,
            "rank_increase" => self.rank_increase = num(key, v)?,
            "hysteresis" => self.hysteresis = num(key, v)?,
            "route_lifetime_s" => self.route_lifetime_s = num(key, v)?,
            "dao_period_s" => self.dao_period_s = num(key, v)?,
            "dao_ack_timeout_s" => self.dao_ack_timeout_s = num(key, v)?,
            "dao_max_retries" => self.dao_max_retries = num(key, v)?,
            "ineligible_hold_s" => self.ineligible_hold_s = num(key, v)?,
            "link_fail_hold_s" => self.link_fail_hold_s = num(key, v)?,
            "link_fail_threshold" => self.link_fail_threshold = num(key, v)?,
            "neighbor_timeout_s" => self.neighbor_timeout_s = num(key, v)?,
            "dis_interval_s" => self.dis_interval_s = num(key, v)?,
            "data_period_s" => self.data_period_s = num(key, v)?,
            "data_payload_bytes" => self.data_payload_bytes = num(key, v)?,
            "attack_period_s" => self.attack_period_s = num(key, v)?,
            "forged_per_period" => self.forged_per_period = num(key, v)?,
            "license_width" => self.license_width = num(key, v)?,
            "trickle_imin_s" => self.trickle_imin_s = num(key, v)?,
            "trickle_doublings" => self.trickle_doublings = num(key, v)?,
            "trickle_k" => self.trickle_k = num(key, v)?,
            "tx_range_m" => self.tx_range_m = num(key, v)?,
            "loss_prob" => self.loss_prob = num(key, v)?,
            "d_hop_ms" => self.d_hop_ms = num(key, v)?,
            "mac_retries" => self.mac_retries = num(key, v)?,
            "bitrate_bps" => self.bitrate_bps = num(key, v)?,
            "p_tx_mw" => self.p_tx_mw = num(key, v)?,
            "p_rx_mw" => self.p_rx_mw = num(key, v)?,
            "p_cpu_mw" => self.p_cpu_mw = num(key, v)?,
            "p_lpm_mw" => self.p_lpm_mw = num(key, v)?,
            "cpu_per_packet_ms" => self.cpu_per_packet_ms = num(key, v)?,
            "speed_min" => self.speed_min = num(key, v)?,
            "speed_max" => self.speed_max = num(key, v)?,
            "pause_s" => self.pause_s = num(key, v)?,
            "mobility_tick_s" => self.mobility_tick_s = num(key, v)?,
            _ => return Err(ScenarioError::UnknownKey(key.to_string())),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<(), ScenarioError> {
        let positive = [
            ("grid_m", self.grid_m),
            ("duration_s", self.duration_s),
            ("route_lifetime_s", self.route_lifetime_s),
            ("dao_period_s", self.dao_period_s),
            ("dao_ack_timeout_s", self.dao_ack_timeout_s),
            ("dis_interval_s", self.dis_interval_s),
            ("data_period_s", self.data_period_s),
            ("attack_period_s", self.attack_period_s),
            ("trickle_imin_s", self.trickle_imin_s),
            ("tx_range_m", self.tx_range_m),
            ("mobility_tick_s", self.mobility_tick_s),
        ];
        for (key, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(invalid(key, format!("must be positive, got {v}")));
            }
        }
        let non_negative = [
            ("boot_window_s", self.boot_window_s),
            ("attacker_boot_s", self.attacker_boot_s.unwrap_or(0.0)),
            ("ineligible_hold_s", self.ineligible_hold_s),
            ("link_fail_hold_s", self.link_fail_hold_s),
            ("neighbor_timeout_s", self.neighbor_timeout_s),
            ("d_hop_ms", self.d_hop_ms),
            ("p_tx_mw", self.p_tx_mw),
            ("p_rx_mw", self.p_rx_mw),
            ("p_cpu_mw", self.p_cpu_mw),
            ("p_lpm_mw", self.p_lpm_mw),
            ("cpu_per_packet_ms", self.cpu_per_packet_ms),
            ("pause_s", self.pause_s),
        ];
        for (key, v) in non_negative {
            if !(v.is_finite() && v >= 0.0) {
                return Err(invalid(key, format!("must be non-negative, got {v}")));
            }
        }
        if self.link_fail_threshold == 0 {
            return Err(invalid("link_fail_threshold", "must be at least 1"));
        }
        if !(0.0..=1.0).contains(&self.loss_prob) {
            return Err(invalid("loss_prob", "must lie in [0, 1]"));
        }
        if self.speed_min <= 0.0 || self.speed_max < self.speed_min {
            return Err(invalid("speed_max", "need 0 < speed_min <= speed_max"));
        }
        if self.n_clients == 0 || self.n_clients > usize::from(u16::MAX) - 2 {
            return Err(invalid("n_clients", "must be between 1 and 65533"));
        }
        if self.bitrate_bps == 0 {
            return Err(invalid("bitrate_bps", "must be positive"));
        }
        if self.trickle_doublings > 32 {
            return Err(invalid("trickle_doublings", "at most 32"));
        }
        let width = Width::new(self.license_width).map_err(|e| invalid("license_width", e.to_string()))?;
        let needs_plain = self.arms.contains(&Arm::Defense) && !self.encrypted;
        if needs_plain && width != Width::W8 {
            return Err(invalid("license_width", "the plain license travels in one octet; use 8 or enable encryption"));
        }
        if self.attackers >= self.n_clients {
            return Err(invalid("attackers", "must be fewer than n_clients"));
        }
        if self.attackers == 0 && self.arms.iter().any(|a| a.has_attackers()) {
            return Err(invalid("attackers", "attack and defense arms need at least one attacker"));
        }
        if self.attackers > 3 {
            warn!("attackers={} is outside the usual 0..=3 range", self.attackers);
        }
        Ok(())
    }

    /// Arms actually run: with encryption on, `defense` means the encrypted
    /// variant.
    pub fn effective_arms(&self) -> Vec<Arm> {
        let mut out = Vec::new();
        for &a in &self.arms {
            let a = if self.encrypted && a == Arm::Defense { Arm::DefenseEncrypted } else { a };
            if !out.contains(&a) {
                out.push(a);
            }
        }
        out
    }

    fn secs(v: f64) -> SimTime {
        SimTime::from_secs_f64(v)
    }

    pub fn world_config(&self, arm: Arm) -> WorldConfig {
        let protocol = ProtocolConfig {
            min_hop_rank_increase: self.rank_increase,
            root_rank: self.rank_increase,
            parent_switch_threshold: self.hysteresis,
            trickle: TrickleParams {
                i_min: Self::secs(self.trickle_imin_s),
                i_max_doublings: self.trickle_doublings,
                k: self.trickle_k,
            },
            rt_capacity: self.rt_cap,
            rt_full_policy: self.rt_full_policy,
            root_rt_capacity: self.root_rt_cap,
            route_lifetime: Self::secs(self.route_lifetime_s),
            dao_period: Self::secs(self.dao_period_s),
            dao_ack_timeout: Self::secs(self.dao_ack_timeout_s),
            dao_max_retries: self.dao_max_retries,
            ineligible_hold: Self::secs(self.ineligible_hold_s),
            link_fail_hold: Self::secs(self.link_fail_hold_s),
            link_fail_threshold: self.link_fail_threshold,
            neighbor_timeout: Self::secs(self.neighbor_timeout_s),
            dis_interval: Self::secs(self.dis_interval_s),
            detach_holddown: ProtocolConfig::default().detach_holddown,
            data_period: Self::secs(self.data_period_s),
            data_payload: self.data_payload_bytes,
            hop_limit: ProtocolConfig::default().hop_limit,
            attack_period: Self::secs(self.attack_period_s),
            forged_per_period: self.forged_per_period,
            defense: arm.defense(),
            license_width: Width::new(self.license_width).unwrap_or(Width::W8),
        };
        WorldConfig {
            protocol,
            link: LinkModel {
                tx_range: self.tx_range_m,
                loss_prob: self.loss_prob,
                hop_delay: Self::secs(self.d_hop_ms / 1e3),
                mac_retries: self.mac_retries,
                bitrate_bps: self.bitrate_bps,
            },
            power: PowerProfile { p_tx: self.p_tx_mw, p_rx: self.p_rx_mw, p_cpu: self.p_cpu_mw, p_lpm: self.p_lpm_mw },
            cpu_per_packet: Self::secs(self.cpu_per_packet_ms / 1e3),
            area: Area { width: self.grid_m, height: self.grid_m },
            mobility: MobilityParams { speed_min: self.speed_min, speed_max: self.speed_max, pause_s: self.pause_s },
            mobility_tick: Self::secs(self.mobility_tick_s),
            rt_sample_period: SimTime::from_secs(10),
            trace: self.trace,
        }
    }

    pub fn topology_params(&self) -> TopologyParams {
        TopologyParams {
            area: Area { width: self.grid_m, height: self.grid_m },
            n_clients: self.n_clients,
            n_attackers: self.attackers,
            tx_range: self.tx_range_m,
            root: self.root_position,
            boot_window: Self::secs(self.boot_window_s),
            attacker_boot: self.attacker_boot_s.map(Self::secs),
            mobile: self.mobility,
            max_route_load: Some(self.rt_cap),
            ..TopologyParams::default()
        }
    }
}
