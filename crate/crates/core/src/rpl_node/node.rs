use std::collections::{BTreeMap, BTreeSet};

use rand::{Rng, RngCore};

use super::{
    compute_rank, Action, DaoEnvelope, DataPacket, DefenseMode, Destination, DropReason, NodeRole, Packet,
    ProtocolConfig, RouteAdd, RoutingTable, Stat, StatusEnvelope, TimerKind, TraceEvent, TrickleState, INFINITE_RANK,
};
use crate::messages::{encode_dao, Address, DaoModified, DaoStatus, DioMessage, DisMessage, NodeId, OF_MRHOF};
use crate::puf_auth::{decrypt_license, encrypt_license, CrDatabase, EncryptedLicense, License, Nonce, SharedKey};
use crate::time::SimTime;

/// Handler context: the clock, protocol constants, randomness, and the
/// action buffer the engine drains afterwards.
pub struct Ctx<'a> {
    pub now: SimTime,
    pub cfg: &'a ProtocolConfig,
    pub rng: &'a mut dyn RngCore,
    pub tracing: bool,
    pub actions: Vec<Action>,
}

impl<'a> Ctx<'a> {
    pub fn new(now: SimTime, cfg: &'a ProtocolConfig, rng: &'a mut dyn RngCore) -> Self {
        Ctx { now, cfg, rng, tracing: false, actions: Vec::new() }
    }

    pub fn with_tracing(mut self, on: bool) -> Self {
        self.tracing = on;
        self
    }

    fn send(&mut self, to: Destination, packet: Packet) {
        self.actions.push(Action::Send { to, packet });
    }

    fn stat(&mut self, s: Stat) {
        self.actions.push(Action::Stat(s));
    }

    fn trace(&mut self, event: TraceEvent, detail: impl FnOnce() -> String) {
        if self.tracing {
            self.actions.push(Action::Trace { event, detail: detail() });
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Neighbor {
    /// Last advertised rank; [`INFINITE_RANK`] when only heard as a child.
    pub rank: u16,
    pub last_heard: SimTime,
    pub ineligible_until: SimTime,
    /// Unicasts to this neighbor that failed in a row.
    pub failures: u8,
}

/// What a client carries from provisioning.
#[derive(Debug, Clone)]
pub struct Credentials {
    pub license: License,
    pub key: Option<SharedKey>,
}

/// Root-side verification state.
#[derive(Debug, Clone)]
pub struct RootAuthority {
    pub db: CrDatabase,
    pub keys: BTreeMap<NodeId, SharedKey>,
}

impl RootAuthority {
    pub fn authenticate(&self, dao: &DaoModified, mode: DefenseMode) -> bool {
        let Some(id) = dao.src.node_id() else {
            return mode == DefenseMode::Off;
        };
        match mode {
            DefenseMode::Off => true,
            DefenseMode::Plain => self.db.verify_license(id, dao.reserved).is_accept(),
            DefenseMode::Encrypted => {
                let Some(key) = self.keys.get(&id) else {
                    return false;
                };
                let ct = EncryptedLicense::from_bytes(dao.options.clone());
                match decrypt_license(key, &ct, self.db.width()) {
                    Ok(l) => self.db.verify_license(id, l).is_accept(),
                    Err(_) => false,
                }
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct PendingDao {
    sequence: u8,
    attempts: u32,
}

#[derive(Debug, Clone)]
pub struct NodeState {
    pub id: NodeId,
    pub address: Address,
    pub role: NodeRole,
    pub rank: Option<u16>,
    pub parent: Option<Address>,
    pub dodag_id: Option<Address>,
    pub neighbors: BTreeMap<Address, Neighbor>,
    pub routing_table: RoutingTable,
    pub blacklist: BTreeSet<Address>,
    /// Number of distinct addresses this node has blacklisted.
    pub n_blacklisted: u32,
    pub trickle: Option<TrickleState>,
    pub credentials: Option<Credentials>,
    pub authority: Option<Box<RootAuthority>>,
    /// Set once the root has acknowledged our current DAO.
    pub registered: bool,
    dao_seq: u8,
    pending: Option<PendingDao>,
    attack_started: bool,
    /// Data ticks that fell before the first join, sent once joined.
    held_data: u32,
    app_started: bool,
    data_seq: u32,
    holddown_until: SimTime,
    timers: [u32; TimerKind::COUNT],
}

impl NodeState {
    pub fn new(id: NodeId, role: NodeRole, rt_capacity: usize) -> Self {
        NodeState {
            id,
            address: Address::of_node(id),
            role,
            rank: None,
            parent: None,
            dodag_id: None,
            neighbors: BTreeMap::new(),
            routing_table: RoutingTable::new(rt_capacity),
            blacklist: BTreeSet::new(),
            n_blacklisted: 0,
            trickle: None,
            credentials: None,
            authority: None,
            registered: false,
            dao_seq: 0,
            pending: None,
            attack_started: false,
            held_data: 0,
            app_started: false,
            data_seq: 0,
            holddown_until: SimTime::ZERO,
            timers: [0; TimerKind::COUNT],
        }
    }

    pub fn is_root(&self) -> bool {
        self.role == NodeRole::Root
    }

    pub fn is_joined(&self) -> bool {
        self.rank.is_some()
    }

    pub fn is_blacklisted(&self, addr: &Address) -> bool {
        self.blacklist.contains(addr)
    }

    fn arm(&mut self, kind: TimerKind, at: SimTime, ctx: &mut Ctx) {
        let slot = &mut self.timers[kind.index()];
        *slot = slot.wrapping_add(1);
        ctx.actions.push(Action::SetTimer { kind, at, generation: *slot });
    }

    fn cancel(&mut self, kind: TimerKind) {
        let slot = &mut self.timers[kind.index()];
        *slot = slot.wrapping_add(1);
    }

    fn make_dio(&self) -> Option<DioMessage> {
        Some(DioMessage {
            sender: self.address,
            dodag_id: self.dodag_id?,
            version: 0,
            rank: self.rank?,
            of_id: OF_MRHOF,
        })
    }

    fn restart_trickle(&mut self, ctx: &mut Ctx) {
        let tr = match &self.trickle {
            Some(t) => t.reset(ctx.now, ctx.rng),
            None => TrickleState::start(ctx.cfg.trickle, ctx.now, ctx.rng),
        };
        let at = tr.t;
        self.trickle = Some(tr);
        self.arm(TimerKind::Trickle, at, ctx);
    }

    pub fn boot(&mut self, ctx: &mut Ctx) {
        self.routing_table.set_policy(ctx.cfg.rt_full_policy);
        if self.is_root() {
            self.rank = Some(ctx.cfg.root_rank);
            self.dodag_id = Some(self.address);
            self.routing_table.set_capacity(ctx.cfg.root_rt_capacity);
            self.restart_trickle(ctx);
        } else {
            ctx.send(Destination::Broadcast, Packet::Dis(DisMessage { sender: self.address }));
            self.arm(TimerKind::DisRetry, ctx.now + ctx.cfg.dis_interval, ctx);
            if self.role == NodeRole::Client {
                let period = ctx.cfg.data_period.as_micros().max(1);
                let phase = SimTime::from_micros(ctx.rng.random_range(0..period));
                self.arm(TimerKind::DataGen, ctx.now + phase, ctx);
            }
        }
    }

    /// Dispatches a timer; stale generations are ignored.
    pub fn on_timer(&mut self, kind: TimerKind, generation: u32, ctx: &mut Ctx) {
        if self.timers[kind.index()] != generation {
            return;
        }
        match kind {
            TimerKind::Trickle => self.trickle_fire(ctx),
            TimerKind::DaoRefresh => {
                if self.parent.is_some() {
                    self.send_new_dao(ctx);
                }
            }
            TimerKind::DaoAckTimeout => self.dao_timeout(ctx),
            TimerKind::DataGen => {
                if self.role == NodeRole::Client {
                    if self.app_started {
                        self.generate_data(ctx);
                    } else {
                        self.held_data += 1;
                    }
                    self.arm(TimerKind::DataGen, ctx.now + ctx.cfg.data_period, ctx);
                }
            }
            TimerKind::Attack => {
                if self.role == NodeRole::Malicious {
                    if self.parent.is_some() {
                        self.malicious_emit(ctx);
                    }
                    self.arm(TimerKind::Attack, ctx.now + ctx.cfg.attack_period, ctx);
                }
            }
            TimerKind::DisRetry => {
                if !self.is_joined() {
                    ctx.send(Destination::Broadcast, Packet::Dis(DisMessage { sender: self.address }));
                    self.arm(TimerKind::DisRetry, ctx.now + ctx.cfg.dis_interval, ctx);
                }
            }
        }
    }

    fn trickle_fire(&mut self, ctx: &mut Ctx) {
        let Some(tr) = self.trickle else { return };
        let (fire, next) = tr.step(ctx.now, ctx.rng);
        if fire {
            if let Some(dio) = self.make_dio() {
                ctx.trace(TraceEvent::DioTx, || format!("rank={}", dio.rank));
                ctx.send(Destination::Broadcast, Packet::Dio(dio));
            }
        }
        self.trickle = Some(next);
        self.arm(TimerKind::Trickle, next.t, ctx);
    }

    /// A joined node answers a solicitation with a unicast DIO.
    pub fn handle_dis(&mut self, from: Address, ctx: &mut Ctx) -> Option<DioMessage> {
        if self.is_blacklisted(&from) {
            return None;
        }
        let dio = self.make_dio()?;
        ctx.trace(TraceEvent::DioTx, || format!("rank={} to={from}", dio.rank));
        ctx.send(Destination::Unicast(from), Packet::Dio(dio));
        Some(dio)
    }

    fn eligible(&self, addr: &Address, n: &Neighbor, now: SimTime, below: Option<u16>, timeout: SimTime) -> bool {
        n.rank != INFINITE_RANK
            && n.ineligible_until <= now
            && now.saturating_sub(n.last_heard) <= timeout
            && !self.is_blacklisted(addr)
            && below.is_none_or(|r| n.rank < r)
    }

    /// Lowest-ranked eligible neighbor; ties are broken at random so equal
    /// candidates share the load.
    fn best_candidate(&self, ctx: &mut Ctx, below: Option<u16>) -> Option<(Address, u16)> {
        let now = ctx.now;
        let timeout = ctx.cfg.neighbor_timeout;
        let best = self
            .neighbors
            .iter()
            .filter(|(a, n)| self.eligible(a, n, now, below, timeout))
            .map(|(_, n)| n.rank)
            .min()?;
        let tied: Vec<Address> = self
            .neighbors
            .iter()
            .filter(|(a, n)| n.rank == best && self.eligible(a, n, now, below, timeout))
            .map(|(a, _)| *a)
            .collect();
        let pick = tied[ctx.rng.random_range(0..tied.len())];
        Some((pick, best))
    }

    pub fn handle_dio(&mut self, from: Address, dio: &DioMessage, ctx: &mut Ctx) {
        if self.is_blacklisted(&from) || from == self.address {
            return;
        }
        if self.is_root() {
            if dio.rank != INFINITE_RANK {
                if let Some(t) = self.trickle.as_mut() {
                    t.hear_consistent();
                }
            }
            return;
        }
        if dio.rank == INFINITE_RANK {
            self.neighbors.remove(&from);
            if self.parent == Some(from) {
                self.lose_parent(ctx);
            }
            return;
        }
        let n = self.neighbors.entry(from).or_insert(Neighbor {
            rank: dio.rank,
            last_heard: ctx.now,
            ineligible_until: SimTime::ZERO,
            failures: 0,
        });
        n.rank = dio.rank;
        n.last_heard = ctx.now;
        if ctx.now < self.holddown_until {
            return;
        }

        let inc = ctx.cfg.min_hop_rank_increase;
        match (self.parent, self.rank) {
            (Some(p), Some(rank)) if p == from => {
                let new_rank = compute_rank(dio.rank, inc);
                if new_rank > rank {
                    self.lose_parent(ctx);
                } else if new_rank < rank {
                    self.rank = Some(new_rank);
                    self.restart_trickle(ctx);
                } else if let Some(t) = self.trickle.as_mut() {
                    t.hear_consistent();
                }
            }
            (Some(_), Some(rank)) => {
                let n = self.neighbors[&from];
                let cand = compute_rank(dio.rank, inc);
                let better = u32::from(cand) + u32::from(ctx.cfg.parent_switch_threshold) < u32::from(rank);
                if better && self.eligible(&from, &n, ctx.now, Some(rank), ctx.cfg.neighbor_timeout) {
                    self.adopt_parent(from, dio.rank, ctx);
                } else if let Some(t) = self.trickle.as_mut() {
                    t.hear_consistent();
                }
            }
            _ => {
                if let Some((best, best_rank)) = self.best_candidate(ctx, None) {
                    self.dodag_id = Some(dio.dodag_id);
                    self.adopt_parent(best, best_rank, ctx);
                }
            }
        }
    }

    fn adopt_parent(&mut self, parent: Address, parent_rank: u16, ctx: &mut Ctx) {
        let first_join = !self.is_joined();
        self.parent = Some(parent);
        self.rank = Some(compute_rank(parent_rank, ctx.cfg.min_hop_rank_increase));
        ctx.trace(TraceEvent::Parent, || format!("parent={parent} rank={parent_rank}"));
        self.registered = false;
        self.cancel(TimerKind::DisRetry);
        self.restart_trickle(ctx);
        self.send_new_dao(ctx);
        if !self.app_started {
            self.app_started = true;
            for _ in 0..std::mem::take(&mut self.held_data) {
                self.generate_data(ctx);
            }
        }
        if first_join && !self.attack_started && self.role == NodeRole::Malicious {
            self.attack_started = true;
            self.arm(TimerKind::Attack, ctx.now + ctx.cfg.attack_period, ctx);
        }
    }

    /// Switches to the best remaining candidate ranked below us, or detaches.
    fn lose_parent(&mut self, ctx: &mut Ctx) {
        let old_rank = self.rank;
        self.parent = None;
        self.registered = false;
        self.pending = None;
        self.cancel(TimerKind::DaoAckTimeout);
        self.cancel(TimerKind::DaoRefresh);
        if let Some((p, r)) = self.best_candidate(ctx, old_rank) {
            self.adopt_parent(p, r, ctx);
            return;
        }
        self.rank = None;
        ctx.trace(TraceEvent::Detach, String::new);
        self.cancel(TimerKind::Trickle);
        self.trickle = None;
        if let Some(dodag_id) = self.dodag_id {
            let poison =
                DioMessage { sender: self.address, dodag_id, version: 0, rank: INFINITE_RANK, of_id: OF_MRHOF };
            ctx.send(Destination::Broadcast, Packet::Dio(poison));
        }
        self.holddown_until = ctx.now + ctx.cfg.detach_holddown;
        self.arm(TimerKind::DisRetry, self.holddown_until, ctx);
    }

    fn build_dao(&self, sequence: u8, ctx: &mut Ctx) -> DaoModified {
        let me = self.address;
        match (ctx.cfg.defense, &self.credentials) {
            (DefenseMode::Off, _) | (_, None) => DaoModified::plain(me, me, sequence, License::from_u8(0)),
            (DefenseMode::Plain, Some(c)) => DaoModified::plain(me, me, sequence, c.license),
            (DefenseMode::Encrypted, Some(c)) => match &c.key {
                Some(key) => {
                    let nonce = Nonce::from(ctx.rng.next_u64());
                    let ct = encrypt_license(key, c.license, nonce);
                    DaoModified::encrypted(me, me, sequence, ct.into_bytes())
                }
                None => DaoModified::plain(me, me, sequence, License::from_u8(0)),
            },
        }
    }

    fn transmit_dao(&mut self, sequence: u8, ctx: &mut Ctx) -> Option<DaoModified> {
        let parent = self.parent?;
        let dao = self.build_dao(sequence, ctx);
        ctx.trace(TraceEvent::DaoTx, || format!("to={parent} seq={sequence} frame={}", frame_hex(&dao)));
        ctx.send(
            Destination::Unicast(parent),
            Packet::Dao(DaoEnvelope { net_src: self.address, hops_left: ctx.cfg.hop_limit, dao: dao.clone() }),
        );
        self.arm(TimerKind::DaoAckTimeout, ctx.now + ctx.cfg.dao_ack_timeout, ctx);
        Some(dao)
    }

    /// Sends a fresh DAO for our own address to the current parent.
    pub fn on_sender_dao(&mut self, ctx: &mut Ctx) -> Option<DaoModified> {
        self.send_new_dao(ctx)
    }

    fn send_new_dao(&mut self, ctx: &mut Ctx) -> Option<DaoModified> {
        self.parent?;
        let sequence = self.dao_seq;
        self.dao_seq = self.dao_seq.wrapping_add(1);
        self.pending = Some(PendingDao { sequence, attempts: 1 });
        self.cancel(TimerKind::DaoRefresh);
        self.transmit_dao(sequence, ctx)
    }

    fn dao_timeout(&mut self, ctx: &mut Ctx) {
        let Some(p) = self.pending else { return };
        if p.attempts <= ctx.cfg.dao_max_retries {
            self.pending = Some(PendingDao { attempts: p.attempts + 1, ..p });
            self.transmit_dao(p.sequence, ctx);
            return;
        }
        self.pending = None;
        if let Some(parent) = self.parent {
            if let Some(n) = self.neighbors.get_mut(&parent) {
                n.ineligible_until = ctx.now + ctx.cfg.ineligible_hold;
            }
            self.lose_parent(ctx);
        }
    }

    fn blacklist_neighbor(&mut self, addr: Address, ctx: &mut Ctx) {
        if !self.blacklist.insert(addr) {
            return;
        }
        self.n_blacklisted += 1;
        self.routing_table.remove_via(&addr);
        self.neighbors.remove(&addr);
        ctx.trace(TraceEvent::Blacklist, || format!("addr={addr}"));
        if self.parent == Some(addr) {
            self.lose_parent(ctx);
        }
    }

    /// DAO received by a non-root router: install the route and pass it up.
    pub fn on_receiver(&mut self, from: Address, env: &DaoEnvelope, ctx: &mut Ctx) {
        if self.is_root() {
            self.on_root_dao(from, env, ctx);
            return;
        }
        if self.is_blacklisted(&from) || self.is_blacklisted(&env.dao.src) || self.is_blacklisted(&env.net_src) {
            ctx.stat(Stat::ControlDropped(DropReason::Blacklisted));
            return;
        }
        if self.parent == Some(from) || env.dao.target == self.address {
            ctx.stat(Stat::ControlDropped(DropReason::Loop));
            return;
        }
        self.note_child(from, ctx.now);
        let target = env.dao.target;
        match self.routing_table.add(target, from, env.net_src, ctx.now, ctx.cfg.route_lifetime) {
            RouteAdd::Installed => ctx.trace(TraceEvent::RouteAdd, || format!("target={target} via={from}")),
            RouteAdd::Refreshed => {}
            RouteAdd::Full => ctx.trace(TraceEvent::RouteFull, || format!("target={target} via={from}")),
            RouteAdd::Evicted(old) => {
                ctx.trace(TraceEvent::RouteAdd, || format!("target={target} via={from} evicted={old}"))
            }
        }
        if env.hops_left <= 1 {
            ctx.stat(Stat::ControlDropped(DropReason::HopLimit));
            return;
        }
        match self.parent {
            Some(parent) => {
                ctx.trace(TraceEvent::DaoFwd, || format!("target={target} to={parent}"));
                let env = DaoEnvelope { hops_left: env.hops_left - 1, ..env.clone() };
                ctx.send(Destination::Unicast(parent), Packet::Dao(env));
            }
            None => ctx.stat(Stat::ControlDropped(DropReason::NoParent)),
        }
    }

    fn note_child(&mut self, from: Address, now: SimTime) {
        self.neighbors.entry(from).and_modify(|n| n.last_heard = now).or_insert(Neighbor {
            rank: INFINITE_RANK,
            last_heard: now,
            ineligible_until: SimTime::ZERO,
            failures: 0,
        });
    }

    /// Root: verify, install on success, answer toward the DAO's source.
    pub fn on_root_dao(&mut self, from: Address, env: &DaoEnvelope, ctx: &mut Ctx) -> DaoStatus {
        let dao = &env.dao;
        let accepted = match &self.authority {
            Some(auth) => auth.authenticate(dao, ctx.cfg.defense),
            None => ctx.cfg.defense == DefenseMode::Off,
        };
        ctx.stat(Stat::RootDecision { src: dao.src, accepted });
        let status = if accepted {
            self.note_child(from, ctx.now);
            self.routing_table.add(dao.target, from, env.net_src, ctx.now, ctx.cfg.route_lifetime);
            ctx.trace(TraceEvent::Ack, || format!("src={} seq={}", dao.src, dao.sequence));
            DaoStatus::ack(dao.src, dao.sequence)
        } else {
            ctx.trace(TraceEvent::Nack, || format!("src={} seq={}", dao.src, dao.sequence));
            DaoStatus::nack(dao.src, dao.sequence)
        };
        ctx.send(
            Destination::Unicast(from),
            Packet::DaoStatus(StatusEnvelope { net_dst: env.net_src, hops_left: ctx.cfg.hop_limit, status }),
        );
        status
    }

    pub fn handle_status(&mut self, from: Address, env: &StatusEnvelope, ctx: &mut Ctx) {
        let st = env.status;
        if env.net_dst == self.address {
            let matches = self.pending.is_some_and(|p| p.sequence == st.sequence)
                && st.originator == self.address
                && self.parent == Some(from);
            if !matches {
                return;
            }
            self.pending = None;
            self.cancel(TimerKind::DaoAckTimeout);
            if st.is_ack() {
                self.registered = true;
                self.arm(TimerKind::DaoRefresh, ctx.now + ctx.cfg.dao_period, ctx);
            } else {
                self.registered = false;
            }
            return;
        }
        let next = self
            .routing_table
            .lookup(&env.net_dst, ctx.now)
            .or_else(|| self.routing_table.lookup(&st.originator, ctx.now))
            .map(|e| e.next_hop);
        let Some(next_hop) = next else {
            ctx.stat(Stat::ControlDropped(DropReason::NoRoute));
            return;
        };
        if next_hop == from || self.parent == Some(next_hop) {
            self.routing_table.remove(&env.net_dst);
            ctx.stat(Stat::ControlDropped(DropReason::Loop));
            return;
        }
        if env.hops_left <= 1 {
            ctx.stat(Stat::ControlDropped(DropReason::HopLimit));
            return;
        }
        let fwd = StatusEnvelope { hops_left: env.hops_left - 1, ..env.clone() };
        ctx.send(Destination::Unicast(next_hop), Packet::DaoStatus(fwd));
        if st.is_nack() {
            ctx.trace(TraceEvent::Nack, || format!("src={} to={next_hop}", st.originator));
            self.routing_table.remove(&st.originator);
            if next_hop == env.net_dst {
                self.blacklist_neighbor(env.net_dst, ctx);
            }
        } else {
            ctx.trace(TraceEvent::Ack, || format!("src={} to={next_hop}", st.originator));
        }
    }

    fn generate_data(&mut self, ctx: &mut Ctx) {
        let pkt =
            DataPacket { origin: self.address, seq: self.data_seq, created_at: ctx.now, hops_left: ctx.cfg.hop_limit };
        self.data_seq += 1;
        ctx.stat(Stat::DataSent { origin: self.address });
        ctx.trace(TraceEvent::DataTx, || format!("seq={}", pkt.seq));
        self.forward_data(pkt, ctx);
    }

    /// Upward data. A router only relays packets whose origin it holds a
    /// downward route for, through the neighbor that delivered them.
    pub fn handle_data(&mut self, from: Address, pkt: DataPacket, ctx: &mut Ctx) {
        if self.is_blacklisted(&from) {
            ctx.stat(Stat::DataDropped(DropReason::Blacklisted));
            return;
        }
        if self.parent == Some(from) {
            ctx.stat(Stat::DataDropped(DropReason::Loop));
            return;
        }
        if self.routing_table.lookup(&pkt.origin, ctx.now).is_none_or(|e| e.next_hop != from) {
            ctx.stat(Stat::DataDropped(DropReason::NotAdmitted));
            return;
        }
        if self.is_root() {
            ctx.trace(TraceEvent::DataRx, || format!("origin={} seq={}", pkt.origin, pkt.seq));
            ctx.stat(Stat::DataDelivered { origin: pkt.origin, created_at: pkt.created_at });
            return;
        }
        if pkt.hops_left <= 1 {
            ctx.stat(Stat::DataDropped(DropReason::HopLimit));
            return;
        }
        self.forward_data(DataPacket { hops_left: pkt.hops_left - 1, ..pkt }, ctx);
    }

    pub fn forward_data(&mut self, pkt: DataPacket, ctx: &mut Ctx) {
        match self.parent {
            Some(parent) => ctx.send(Destination::Unicast(parent), Packet::Data(pkt)),
            None => ctx.stat(Stat::DataDropped(DropReason::NoParent)),
        }
    }

    /// Every MAC attempt of a unicast failed.
    pub fn on_unicast_failed(&mut self, to: Address, packet: &Packet, ctx: &mut Ctx) {
        let reason = DropReason::LinkFailure;
        match packet {
            Packet::Data(_) => ctx.stat(Stat::DataDropped(reason)),
            _ => ctx.stat(Stat::ControlDropped(reason)),
        }
        let Some(n) = self.neighbors.get_mut(&to) else { return };
        n.failures = n.failures.saturating_add(1);
        if n.failures < ctx.cfg.link_fail_threshold {
            return;
        }
        n.failures = 0;
        let held = n.ineligible_until;
        n.ineligible_until = ctx.now + ctx.cfg.link_fail_hold;
        if self.parent != Some(to) {
            return;
        }
        if self.best_candidate(ctx, self.rank).is_some() {
            self.lose_parent(ctx);
        } else if let Some(n) = self.neighbors.get_mut(&to) {
            // Nowhere better to go: keep the parent we have.
            n.ineligible_until = held;
        }
    }

    pub fn on_unicast_delivered(&mut self, to: Address) {
        if let Some(n) = self.neighbors.get_mut(&to) {
            n.failures = 0;
        }
    }

    /// Forged DAOs for fresh, nonexistent targets, sent to our parent under
    /// our own network address.
    pub fn malicious_emit(&mut self, ctx: &mut Ctx) -> Vec<DaoModified> {
        let Some(parent) = self.parent else { return Vec::new() };
        let width = ctx.cfg.license_width;
        let mut out = Vec::with_capacity(ctx.cfg.forged_per_period as usize);
        for _ in 0..ctx.cfg.forged_per_period {
            let fake = Address::forged(ctx.rng.next_u32());
            let seq = (ctx.rng.next_u32() & 0xff) as u8;
            let dao = match ctx.cfg.defense {
                DefenseMode::Encrypted => {
                    let mut opts = vec![0u8; EncryptedLicense::encoded_len(width)];
                    ctx.rng.fill_bytes(&mut opts);
                    DaoModified::encrypted(fake, fake, seq, opts)
                }
                _ => DaoModified::plain(fake, fake, seq, License::from_u8((ctx.rng.next_u32() & 0xff) as u8)),
            };
            ctx.trace(TraceEvent::DaoTx, || format!("to={parent} seq={seq} forged=1 frame={}", frame_hex(&dao)));
            ctx.stat(Stat::ForgedEmitted);
            ctx.send(
                Destination::Unicast(parent),
                Packet::Dao(DaoEnvelope { net_src: self.address, hops_left: ctx.cfg.hop_limit, dao: dao.clone() }),
            );
            out.push(dao);
        }
        out
    }
}

fn frame_hex(dao: &DaoModified) -> String {
    encode_dao(dao).map(|b| crate::messages::codec::to_hex(&b)).unwrap_or_default()
}
