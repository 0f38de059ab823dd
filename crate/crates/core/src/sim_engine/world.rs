use std::collections::BTreeMap;
use std::fmt::Write as _;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

use super::energy::{EnergyLedger, PowerProfile};
use super::mobility::{Area, MobilityParams, RwpState};
use super::queue::EventQueue;
use super::radio::{LinkModel, Point};
use super::topology::Topology;
use super::SimError;
use crate::messages::{Address, NodeId};
use crate::metrics::{MetricsError, RunCounters, RunMetrics};
use crate::puf_auth::{CrDatabase, PufDevice, SharedKey};
use crate::rpl_node::{
    Action, Credentials, Ctx, Destination, DropReason, NodeRole, NodeState, Packet, ProtocolConfig, RootAuthority,
    Stat, TimerKind,
};
use crate::time::SimTime;
use crate::trace::TraceLog;

#[derive(Debug, Clone, PartialEq)]
pub struct WorldConfig {
    pub protocol: ProtocolConfig,
    pub link: LinkModel,
    pub power: PowerProfile,
    /// CPU time charged per frame sent or received.
    pub cpu_per_packet: SimTime,
    pub area: Area,
    pub mobility: MobilityParams,
    pub mobility_tick: SimTime,
    pub rt_sample_period: SimTime,
    pub trace: bool,
}

impl Default for WorldConfig {
    fn default() -> Self {
        WorldConfig {
            protocol: ProtocolConfig::default(),
            link: LinkModel::default(),
            power: PowerProfile::default(),
            cpu_per_packet: SimTime::from_millis(1),
            area: Area::default(),
            mobility: MobilityParams::default(),
            mobility_tick: SimTime::from_secs(1),
            rt_sample_period: SimTime::from_secs(10),
            trace: false,
        }
    }
}

#[derive(Debug, Clone)]
enum Event {
    Boot(usize),
    Timer { node: usize, kind: TimerKind, generation: u32 },
    Deliver { to: usize, from: Address, packet: Packet },
    MobilityTick,
    RtSample,
}

#[derive(Debug, Clone)]
struct Slot {
    state: NodeState,
    position: Point,
    rwp: Option<RwpState>,
    ledger: EnergyLedger,
    booted: bool,
    /// The radio sends one frame at a time; later frames start after this.
    tx_free_at: SimTime,
}

/// One simulated network: nodes, radio, clock and counters. Fully owned, so
/// whole worlds can move between threads.
#[derive(Debug, Clone)]
pub struct World {
    cfg: WorldConfig,
    queue: EventQueue<Event>,
    slots: Vec<Slot>,
    index: BTreeMap<Address, usize>,
    rng: ChaCha8Rng,
    motion: ChaCha8Rng,
    counters: RunCounters,
    trace: TraceLog,
}

const PROVISION_STREAM: u64 = 1;
const SIM_STREAM: u64 = 2;
const MOBILITY_STREAM: u64 = 3;

impl World {
    /// Provisions every client with a PUF-derived license and key, registers
    /// them at the root, and schedules the boots.
    pub fn new(cfg: WorldConfig, topology: &Topology, seed: u64) -> Result<Self, SimError> {
        let topology = Topology::new(topology.nodes.clone())?;
        let mut prov = ChaCha8Rng::seed_from_u64(seed);
        prov.set_stream(PROVISION_STREAM);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(SIM_STREAM);
        let mut motion = ChaCha8Rng::seed_from_u64(seed);
        motion.set_stream(MOBILITY_STREAM);

        let width = cfg.protocol.license_width;
        let mut db = CrDatabase::new(topology.nodes.len(), width);
        let mut keys = BTreeMap::new();
        let mut slots = Vec::with_capacity(topology.nodes.len());
        for spec in &topology.nodes {
            let cap = spec.rt_capacity.unwrap_or(cfg.protocol.rt_capacity);
            let mut state = NodeState::new(spec.id, spec.role, cap);
            if spec.role != NodeRole::Root {
                let mut secret = [0u8; 16];
                prov.fill_bytes(&mut secret);
                let device = PufDevice::keyed(spec.id, width, secret);
                let (_, license) = db.register_node(spec.id, &device, &mut prov)?;
                let mut key = [0u8; 16];
                prov.fill_bytes(&mut key);
                let key = SharedKey::new(key);
                keys.insert(spec.id, key.clone());
                state.credentials = Some(Credentials { license, key: Some(key) });
            }
            let rwp = (spec.mobile && spec.role != NodeRole::Root)
                .then(|| RwpState::new(&cfg.area, &cfg.mobility, &mut motion));
            slots.push(Slot {
                state,
                position: spec.position,
                rwp,
                ledger: EnergyLedger::new(cfg.power),
                booted: false,
                tx_free_at: SimTime::ZERO,
            });
        }
        if let Some(root) = slots.iter_mut().find(|s| s.state.is_root()) {
            root.state.authority = Some(Box::new(RootAuthority { db, keys }));
        }

        let index = slots.iter().enumerate().map(|(i, s)| (s.state.address, i)).collect();
        let mut world = World {
            cfg,
            queue: EventQueue::new(),
            slots,
            index,
            rng,
            motion,
            counters: RunCounters::default(),
            trace: TraceLog::new(),
        };
        for (i, spec) in topology.nodes.iter().enumerate() {
            world.queue.schedule(spec.boot_at, Event::Boot(i))?;
        }
        if world.slots.iter().any(|s| s.rwp.is_some()) {
            world.queue.schedule(world.cfg.mobility_tick, Event::MobilityTick)?;
        }
        if world.cfg.rt_sample_period > SimTime::ZERO {
            world.queue.schedule(world.cfg.rt_sample_period, Event::RtSample)?;
        }
        Ok(world)
    }

    pub fn config(&self) -> &WorldConfig {
        &self.cfg
    }

    pub fn now(&self) -> SimTime {
        self.queue.now()
    }

    pub fn pending_events(&self) -> usize {
        self.queue.len()
    }

    /// Processes every event due by `t_end`, then sets the clock to `t_end`.
    pub fn run_until(&mut self, t_end: SimTime) -> Result<(), SimError> {
        if t_end < self.now() {
            return Err(SimError::ClockRewind { now: self.now(), requested: t_end });
        }
        while let Some((_, ev)) = self.queue.pop_until(t_end) {
            self.process(ev)?;
        }
        self.queue.advance_to(t_end);
        Ok(())
    }

    fn process(&mut self, ev: Event) -> Result<(), SimError> {
        match ev {
            Event::Boot(i) => {
                self.slots[i].booted = true;
                self.with_node(i, |n, ctx| n.boot(ctx))
            }
            Event::Timer { node, kind, generation } => {
                if !self.slots[node].booted {
                    return Ok(());
                }
                self.with_node(node, |n, ctx| n.on_timer(kind, generation, ctx))
            }
            Event::Deliver { to, from, packet } => {
                if !self.slots[to].booted {
                    return Ok(());
                }
                self.with_node(to, |n, ctx| match &packet {
                    Packet::Dis(_) => {
                        n.handle_dis(from, ctx);
                    }
                    Packet::Dio(dio) => n.handle_dio(from, dio, ctx),
                    Packet::Dao(env) => n.on_receiver(from, env, ctx),
                    Packet::DaoStatus(env) => n.handle_status(from, env, ctx),
                    Packet::Data(d) => n.handle_data(from, *d, ctx),
                })
            }
            Event::MobilityTick => {
                self.move_nodes(self.cfg.mobility_tick);
                let next = self.now() + self.cfg.mobility_tick;
                self.queue.schedule(next, Event::MobilityTick)?;
                Ok(())
            }
            Event::RtSample => {
                let occupancy = self.max_client_rt();
                self.counters.rt_occupancy_timeline.push((self.now(), occupancy));
                let next = self.now() + self.cfg.rt_sample_period;
                self.queue.schedule(next, Event::RtSample)?;
                Ok(())
            }
        }
    }

    fn max_client_rt(&self) -> usize {
        self.slots.iter().filter(|s| !s.state.is_root()).map(|s| s.state.routing_table.len()).max().unwrap_or(0)
    }

    /// Advances every mobile node by `dt`.
    pub fn move_nodes(&mut self, dt: SimTime) {
        let dt = dt.as_secs_f64();
        for slot in &mut self.slots {
            if let Some(rwp) = slot.rwp.as_mut() {
                slot.position = rwp.advance(slot.position, dt, &self.cfg.area, &self.cfg.mobility, &mut self.motion);
            }
        }
    }

    fn with_node<F>(&mut self, i: usize, f: F) -> Result<(), SimError>
    where
        F: FnOnce(&mut NodeState, &mut Ctx),
    {
        let now = self.now();
        let actions = {
            let slot = &mut self.slots[i];
            let mut ctx = Ctx::new(now, &self.cfg.protocol, &mut self.rng).with_tracing(self.cfg.trace);
            f(&mut slot.state, &mut ctx);
            ctx.actions
        };
        let state = &self.slots[i].state;
        if !state.is_root() {
            self.counters.rt_peak = self.counters.rt_peak.max(state.routing_table.len());
        }
        self.apply(i, actions)
    }

    fn apply(&mut self, i: usize, actions: Vec<Action>) -> Result<(), SimError> {
        let now = self.now();
        for action in actions {
            match action {
                Action::Send { to: Destination::Broadcast, packet } => self.broadcast(i, packet)?,
                Action::Send { to: Destination::Unicast(dst), packet } => {
                    if self.unicast(i, dst, &packet)? {
                        self.slots[i].state.on_unicast_delivered(dst);
                    } else {
                        self.with_node(i, |n, ctx| n.on_unicast_failed(dst, &packet, ctx))?;
                    }
                }
                Action::SetTimer { kind, at, generation } => {
                    self.queue.schedule(at, Event::Timer { node: i, kind, generation })?;
                }
                Action::Trace { event, detail } => {
                    self.trace.record(now, self.slots[i].state.id, event, &detail);
                }
                Action::Stat(s) => self.record_stat(s),
            }
        }
        Ok(())
    }

    fn record_stat(&mut self, s: Stat) {
        let c = &mut self.counters;
        match s {
            Stat::DataSent { origin } => {
                if let Some(id) = origin.node_id() {
                    *c.sent_per_node.entry(id).or_default() += 1;
                }
            }
            Stat::DataDelivered { created_at, .. } => {
                c.received_at_root += 1;
                c.delays.push(self.queue.now().saturating_sub(created_at).as_secs_f64());
            }
            Stat::DataDropped(r) => *c.data_dropped.entry(reason_name(r)).or_default() += 1,
            Stat::ControlDropped(r) => *c.control_dropped.entry(reason_name(r)).or_default() += 1,
            Stat::RootDecision { src, accepted } => {
                let d = &mut c.decisions;
                match (src.node_id().is_some(), accepted) {
                    (true, true) => d.genuine_acked += 1,
                    (true, false) => d.genuine_nacked += 1,
                    (false, true) => d.forged_acked += 1,
                    (false, false) => d.forged_nacked += 1,
                }
            }
            Stat::ForgedEmitted => c.forged_emitted += 1,
        }
    }

    fn count_tx(&mut self, packet: &Packet, frames: u64) {
        match packet {
            Packet::Data(_) => {}
            Packet::Dao(_) | Packet::DaoStatus(_) => {
                self.counters.dao_path_tx += frames;
                self.counters.control_tx += frames;
            }
            _ => self.counters.control_tx += frames,
        }
    }

    /// Reserves the sender's radio for `on_air`; returns when the frame ends.
    fn occupy_radio(&mut self, from: usize, on_air: SimTime) -> SimTime {
        let slot = &mut self.slots[from];
        let start = slot.tx_free_at.max(self.queue.now());
        slot.tx_free_at = start + on_air;
        slot.tx_free_at
    }

    fn broadcast(&mut self, from: usize, packet: Packet) -> Result<(), SimError> {
        let air = self.cfg.link.airtime(packet.frame_len(self.cfg.protocol.data_payload));
        let cpu = self.cfg.cpu_per_packet;
        self.slots[from].ledger.add_tx(air);
        self.slots[from].ledger.add_cpu(cpu);
        self.count_tx(&packet, 1);
        let origin = self.slots[from].position;
        let sender = self.slots[from].state.address;
        let at = self.occupy_radio(from, air) + self.cfg.link.hop_delay;
        for j in 0..self.slots.len() {
            if j == from || !self.slots[j].booted || !self.cfg.link.in_range(&origin, &self.slots[j].position) {
                continue;
            }
            if !self.cfg.link.frame_survives(&mut self.rng) {
                continue;
            }
            self.slots[j].ledger.add_rx(air);
            self.slots[j].ledger.add_cpu(cpu);
            self.queue.schedule(at, Event::Deliver { to: j, from: sender, packet: packet.clone() })?;
        }
        Ok(())
    }

    /// Link-layer unicast with retries. Returns whether the frame got through.
    fn unicast(&mut self, from: usize, dst: Address, packet: &Packet) -> Result<bool, SimError> {
        let link = self.cfg.link;
        let air = link.airtime(packet.frame_len(self.cfg.protocol.data_payload));
        let origin = self.slots[from].position;
        let target = self
            .index
            .get(&dst)
            .copied()
            .filter(|&j| j != from && self.slots[j].booted && link.in_range(&origin, &self.slots[j].position));
        let mut attempts = 0u64;
        let mut delivered = false;
        while attempts <= u64::from(link.mac_retries) {
            attempts += 1;
            if link.frame_survives(&mut self.rng) && target.is_some() {
                delivered = true;
                break;
            }
        }
        let on_air = SimTime::from_micros(air.as_micros() * attempts);
        let done = self.occupy_radio(from, on_air);
        self.slots[from].ledger.add_tx(on_air);
        self.slots[from].ledger.add_cpu(self.cfg.cpu_per_packet);
        self.count_tx(packet, attempts);
        match target {
            Some(j) if delivered => {
                self.slots[j].ledger.add_rx(air);
                self.slots[j].ledger.add_cpu(self.cfg.cpu_per_packet);
                let at = done + link.hop_delay;
                let sender = self.slots[from].state.address;
                self.queue.schedule(at, Event::Deliver { to: j, from: sender, packet: packet.clone() })?;
                Ok(true)
            }
            _ => Ok(false),
        }
    }

    fn slot(&self, id: NodeId) -> Option<&Slot> {
        self.index.get(&Address::of_node(id)).map(|&i| &self.slots[i])
    }

    pub fn node(&self, id: NodeId) -> Option<&NodeState> {
        self.slot(id).map(|s| &s.state)
    }

    pub fn nodes(&self) -> impl Iterator<Item = &NodeState> {
        self.slots.iter().map(|s| &s.state)
    }

    pub fn position(&self, id: NodeId) -> Option<Point> {
        self.slot(id).map(|s| s.position)
    }

    /// Ledger with its elapsed time brought up to the current clock.
    pub fn ledger(&self, id: NodeId) -> Option<EnergyLedger> {
        self.slot(id).map(|s| {
            let mut l = s.ledger;
            l.set_elapsed(self.now());
            l
        })
    }

    pub fn trace(&self) -> &TraceLog {
        &self.trace
    }

    /// Counters so far, with ledgers for the legitimate clients.
    pub fn counters(&self) -> RunCounters {
        let mut c = self.counters.clone();
        c.n_blacklisted = self.slots.iter().map(|s| u64::from(s.state.n_blacklisted)).sum();
        c.ledgers = self
            .slots
            .iter()
            .filter(|s| s.state.role == NodeRole::Client)
            .map(|s| {
                let mut l = s.ledger;
                l.set_elapsed(self.now());
                (s.state.id, l)
            })
            .collect();
        c
    }

    pub fn metrics(&self) -> Result<RunMetrics, MetricsError> {
        RunMetrics::from_counters(&self.counters(), self.now().as_secs_f64())
    }

    /// Human-readable dump of node state and counters.
    pub fn snapshot(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "time={}", self.now());
        for s in &self.slots {
            let n = &s.state;
            let _ = writeln!(
                out,
                "node={} role={} pos={:.3},{:.3} booted={} rank={} parent={} registered={} rt={}/{} blacklist={} tx={:.6} rx={:.6} cpu={:.6}",
                n.id,
                n.role.as_str(),
                s.position.x,
                s.position.y,
                s.booted,
                n.rank.map_or("-".to_string(), |r| r.to_string()),
                n.parent.map_or("-".to_string(), |p| p.to_string()),
                n.registered,
                n.routing_table.len(),
                n.routing_table.capacity(),
                n.n_blacklisted,
                s.ledger.tx_s(),
                s.ledger.rx_s(),
                s.ledger.cpu_s(),
            );
        }
        let c = self.counters();
        let _ = writeln!(
            out,
            "sent={} received={} forged={} dao_path_tx={} control_tx={} rt_peak={} decisions={:?} data_dropped={:?} control_dropped={:?}",
            c.total_sent(),
            c.received_at_root,
            c.forged_emitted,
            c.dao_path_tx,
            c.control_tx,
            c.rt_peak,
            c.decisions,
            c.data_dropped,
            c.control_dropped
        );
        out
    }

    /// SHA-256 over the snapshot and the trace, hex encoded.
    pub fn digest(&self) -> String {
        let hash = Sha256::new()
            .chain_update(self.snapshot().as_bytes())
            .chain_update(self.trace.as_str().as_bytes())
            .finalize();
        hash.iter().map(|b| format!("{b:02x}")).collect()
    }
}

fn reason_name(r: DropReason) -> &'static str {
    match r {
        DropReason::NoParent => "no_parent",
        DropReason::NoRoute => "no_route",
        DropReason::NotAdmitted => "not_admitted",
        DropReason::HopLimit => "hop_limit",
        DropReason::Loop => "loop",
        DropReason::Blacklisted => "blacklisted",
        DropReason::LinkFailure => "link_failure",
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim_engine::topology::NodeSpec;

    fn chain() -> Topology {
        Topology::new(vec![
            NodeSpec::new(1, NodeRole::Root, 0.0, 0.0),
            NodeSpec::new(2, NodeRole::Client, 40.0, 0.0),
            NodeSpec::new(3, NodeRole::Client, 80.0, 0.0),
        ])
        .unwrap()
    }

    #[test]
    fn empty_queue_jumps_clock() {
        let topo = Topology::new(vec![NodeSpec::new(1, NodeRole::Root, 0.0, 0.0)]).unwrap();
        let cfg = WorldConfig { rt_sample_period: SimTime::ZERO, ..WorldConfig::default() };
        let mut w = World::new(cfg, &topo, 1).unwrap();
        w.run_until(SimTime::from_secs(1)).unwrap();
        w.run_until(SimTime::from_secs(50)).unwrap();
        assert_eq!(w.now(), SimTime::from_secs(50));
        assert!(w.run_until(SimTime::from_secs(10)).is_err());
    }

    #[test]
    fn two_hop_chain_delivers_everything() {
        let mut w = World::new(WorldConfig::default(), &chain(), 3).unwrap();
        w.run_until(SimTime::from_secs(600)).unwrap();
        let c = w.counters();
        assert!(c.total_sent() > 30);
        assert!(c.received_at_root + 1 >= c.total_sent(), "{} of {}", c.received_at_root, c.total_sent());
        let far = w.node(NodeId(3)).unwrap();
        assert_eq!(far.parent, Some(Address::of_node(NodeId(2))));
        assert!(far.registered);
    }

    #[test]
    fn ledgers_cover_elapsed_time() {
        let mut w = World::new(WorldConfig::default(), &chain(), 4).unwrap();
        w.run_until(SimTime::from_secs(300)).unwrap();
        let l = w.ledger(NodeId(2)).unwrap();
        assert!(l.tx_s() > 0.0 && l.rx_s() > 0.0);
        assert!((l.tx_s() + l.rx_s() + l.cpu_s() + l.lpm_s() - 300.0).abs() < 1e-6);
    }

    #[test]
    fn same_seed_same_digest() {
        let run = |seed| {
            let cfg = WorldConfig { trace: true, ..WorldConfig::default() };
            let mut w = World::new(cfg, &chain(), seed).unwrap();
            w.run_until(SimTime::from_secs(200)).unwrap();
            w.digest()
        };
        assert_eq!(run(7), run(7));
        assert_ne!(run(7), run(8));
    }
}
