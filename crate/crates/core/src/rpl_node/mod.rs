//! RPL storing-mode node: rank, parent selection, Trickle-driven DIOs, DAO
//! registration, bounded downward routing, and the License check at the root.
//!
//! Handlers are plain methods on [`NodeState`]; they never touch the radio
//! directly but push [`Action`]s that the simulation engine carries out.

mod node;
pub mod routing;
pub mod trickle;

pub use node::{Credentials, Ctx, Neighbor, NodeState, RootAuthority};
pub use routing::{FullPolicy, RouteAdd, RoutingEntry, RoutingTable};
pub use trickle::{TrickleParams, TrickleState};

use crate::messages::{Address, DaoModified, DaoStatus, DioMessage, DisMessage};
use crate::puf_auth::Width;
use crate::time::SimTime;

pub const INFINITE_RANK: u16 = u16::MAX;

/// `parent_rank + increase`, saturating at [`INFINITE_RANK`].
pub fn compute_rank(parent_rank: u16, increase: u16) -> u16 {
    parent_rank.saturating_add(increase)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum NodeRole {
    Root,
    Client,
    /// Registered insider that also injects forged DAOs.
    Malicious,
}

impl NodeRole {
    pub fn as_str(self) -> &'static str {
        match self {
            NodeRole::Root => "root",
            NodeRole::Client => "client",
            NodeRole::Malicious => "malicious",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DefenseMode {
    /// Plain RPL: the root accepts every DAO.
    Off,
    /// License carried in the DAO's reserved octet.
    Plain,
    /// Encrypted license carried in the DAO options.
    Encrypted,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProtocolConfig {
    pub min_hop_rank_increase: u16,
    pub root_rank: u16,
    /// A new parent must beat the current rank by more than this.
    pub parent_switch_threshold: u16,
    pub trickle: TrickleParams,
    pub rt_capacity: usize,
    pub rt_full_policy: FullPolicy,
    pub root_rt_capacity: usize,
    pub route_lifetime: SimTime,
    pub dao_period: SimTime,
    pub dao_ack_timeout: SimTime,
    pub dao_max_retries: u32,
    /// How long a parent that failed to register us is avoided.
    pub ineligible_hold: SimTime,
    pub link_fail_hold: SimTime,
    /// Consecutive failed unicasts before the parent is given up.
    pub link_fail_threshold: u8,
    /// Neighbors not heard from for this long are not considered as parents.
    pub neighbor_timeout: SimTime,
    pub dis_interval: SimTime,
    pub detach_holddown: SimTime,
    pub data_period: SimTime,
    pub data_payload: usize,
    pub hop_limit: u8,
    pub attack_period: SimTime,
    pub forged_per_period: u32,
    pub defense: DefenseMode,
    pub license_width: Width,
}

impl Default for ProtocolConfig {
    fn default() -> Self {
        ProtocolConfig {
            min_hop_rank_increase: 256,
            root_rank: 256,
            parent_switch_threshold: 128,
            trickle: TrickleParams::default(),
            rt_capacity: 16,
            rt_full_policy: FullPolicy::Block,
            root_rt_capacity: 1024,
            route_lifetime: SimTime::from_secs(180),
            dao_period: SimTime::from_secs(60),
            dao_ack_timeout: SimTime::from_secs(2),
            dao_max_retries: 3,
            ineligible_hold: SimTime::from_secs(300),
            link_fail_hold: SimTime::from_secs(30),
            link_fail_threshold: 3,
            neighbor_timeout: SimTime::from_secs(120),
            dis_interval: SimTime::from_secs(10),
            detach_holddown: SimTime::from_secs(1),
            data_period: SimTime::from_secs(30),
            data_payload: 30,
            hop_limit: 64,
            attack_period: SimTime::from_secs(30),
            forged_per_period: 4,
            defense: DefenseMode::Off,
            license_width: Width::W8,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DaoEnvelope {
    /// Network-layer source of the DAO, preserved hop by hop.
    pub net_src: Address,
    pub hops_left: u8,
    pub dao: DaoModified,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StatusEnvelope {
    /// Where the status is headed: the network source of the DAO it answers.
    pub net_dst: Address,
    pub status: DaoStatus,
    pub hops_left: u8,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DataPacket {
    pub origin: Address,
    pub seq: u32,
    pub created_at: SimTime,
    pub hops_left: u8,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Packet {
    Dis(DisMessage),
    Dio(DioMessage),
    Dao(DaoEnvelope),
    DaoStatus(StatusEnvelope),
    Data(DataPacket),
}

pub const DIS_FRAME_LEN: usize = 4;
pub const DIO_FRAME_LEN: usize = 24;

impl Packet {
    /// Bytes on air, used for airtime accounting.
    pub fn frame_len(&self, data_payload: usize) -> usize {
        match self {
            Packet::Dis(_) => DIS_FRAME_LEN,
            Packet::Dio(_) => DIO_FRAME_LEN,
            Packet::Dao(env) => {
                let opts = env.dao.options.len();
                crate::messages::codec::DAO_FIXED_LEN + if opts == 0 { 0 } else { 1 + opts }
            }
            Packet::DaoStatus(_) => crate::messages::codec::STATUS_LEN,
            Packet::Data(_) => data_payload,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Packet::Dis(_) => "DIS",
            Packet::Dio(_) => "DIO",
            Packet::Dao(_) => "DAO",
            Packet::DaoStatus(_) => "DAO-ACK",
            Packet::Data(_) => "DATA",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum TimerKind {
    Trickle,
    DaoRefresh,
    DaoAckTimeout,
    DataGen,
    Attack,
    DisRetry,
}

impl TimerKind {
    pub const COUNT: usize = 6;

    pub fn index(self) -> usize {
        self as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum TraceEvent {
    DioTx,
    DaoTx,
    DaoFwd,
    RouteAdd,
    RouteFull,
    Ack,
    Nack,
    Blacklist,
    DataTx,
    DataRx,
    Parent,
    Detach,
}

impl TraceEvent {
    pub fn as_str(self) -> &'static str {
        match self {
            TraceEvent::DioTx => "DIO_TX",
            TraceEvent::DaoTx => "DAO_TX",
            TraceEvent::DaoFwd => "DAO_FWD",
            TraceEvent::RouteAdd => "ROUTE_ADD",
            TraceEvent::RouteFull => "ROUTE_FULL",
            TraceEvent::Ack => "ACK",
            TraceEvent::Nack => "NACK",
            TraceEvent::Blacklist => "BLACKLIST",
            TraceEvent::DataTx => "DATA_TX",
            TraceEvent::DataRx => "DATA_RX",
            TraceEvent::Parent => "PARENT",
            TraceEvent::Detach => "DETACH",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DropReason {
    NoParent,
    NoRoute,
    NotAdmitted,
    HopLimit,
    Loop,
    Blacklisted,
    LinkFailure,
}

/// Counter updates reported to the engine.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stat {
    DataSent { origin: Address },
    DataDelivered { origin: Address, created_at: SimTime },
    DataDropped(DropReason),
    RootDecision { src: Address, accepted: bool },
    ForgedEmitted,
    ControlDropped(DropReason),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Destination {
    Unicast(Address),
    Broadcast,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Action {
    Send { to: Destination, packet: Packet },
    SetTimer { kind: TimerKind, at: SimTime, generation: u32 },
    Trace { event: TraceEvent, detail: String },
    Stat(Stat),
}
