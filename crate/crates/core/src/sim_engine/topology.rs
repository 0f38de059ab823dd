use std::collections::{BTreeMap, BTreeSet, VecDeque};

use rand::seq::SliceRandom;
use rand::Rng;

use super::mobility::Area;
use super::radio::Point;
use crate::messages::NodeId;
use crate::rpl_node::NodeRole;
use crate::time::SimTime;

pub const ROOT_ID: NodeId = NodeId(1);

#[derive(Debug, Clone, PartialEq)]
pub struct NodeSpec {
    pub id: NodeId,
    pub role: NodeRole,
    pub position: Point,
    pub boot_at: SimTime,
    /// Overrides the configured routing-table capacity for this node.
    pub rt_capacity: Option<usize>,
    pub mobile: bool,
}

impl NodeSpec {
    pub fn new(id: u16, role: NodeRole, x: f64, y: f64) -> Self {
        NodeSpec {
            id: NodeId(id),
            role,
            position: Point::new(x, y),
            boot_at: SimTime::ZERO,
            rt_capacity: None,
            mobile: false,
        }
    }

    pub fn boot_at(mut self, t: SimTime) -> Self {
        self.boot_at = t;
        self
    }

    pub fn rt_capacity(mut self, cap: usize) -> Self {
        self.rt_capacity = Some(cap);
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RootPlacement {
    #[default]
    Centre,
    /// Drawn uniformly like every client.
    Random,
}

impl RootPlacement {
    pub fn as_str(self) -> &'static str {
        match self {
            RootPlacement::Centre => "centre",
            RootPlacement::Random => "random",
        }
    }
}

impl std::str::FromStr for RootPlacement {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "centre" | "center" => Ok(RootPlacement::Centre),
            "random" => Ok(RootPlacement::Random),
            other => Err(format!("expected centre or random, got {other:?}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TopologyParams {
    pub area: Area,
    pub n_clients: usize,
    pub n_attackers: usize,
    pub tx_range: f64,
    pub root: RootPlacement,
    pub boot_window: SimTime,
    /// Boot time of the attackers; `None` draws it like any other client.
    pub attacker_boot: Option<SimTime>,
    pub mobile: bool,
    /// Rejects placements where some client could end up relaying for more
    /// than this many other clients, so a loss-free baseline never overflows.
    pub max_route_load: Option<usize>,
    pub max_attempts: u32,
}

impl Default for TopologyParams {
    fn default() -> Self {
        TopologyParams {
            area: Area::default(),
            n_clients: 29,
            n_attackers: 0,
            tx_range: 50.0,
            root: RootPlacement::Centre,
            boot_window: SimTime::ZERO,
            attacker_boot: None,
            mobile: false,
            max_route_load: None,
            max_attempts: 10_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum TopologyError {
    #[error("no connected placement found after {0} attempts")]
    Disconnected(u32),
    #[error("only {eligible} clients are two or more hops from the root, {wanted} attackers requested")]
    NotEnoughAttackerSites { eligible: usize, wanted: usize },
    #[error("attackers ({attackers}) must be fewer than clients ({clients})")]
    TooManyAttackers { attackers: usize, clients: usize },
    #[error("topology needs exactly one root, found {0}")]
    RootCount(usize),
    #[error("duplicate node id {0}")]
    DuplicateId(NodeId),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Topology {
    pub nodes: Vec<NodeSpec>,
}

impl Topology {
    pub fn new(nodes: Vec<NodeSpec>) -> Result<Self, TopologyError> {
        let roots = nodes.iter().filter(|n| n.role == NodeRole::Root).count();
        if roots != 1 {
            return Err(TopologyError::RootCount(roots));
        }
        let mut seen = BTreeSet::new();
        for n in &nodes {
            if !seen.insert(n.id) {
                return Err(TopologyError::DuplicateId(n.id));
            }
        }
        Ok(Topology { nodes })
    }

    /// Root at the centre, clients uniform over the area, redrawn until the
    /// unit-disk graph is connected. Attackers are clients at least two hops
    /// from the root.
    pub fn random<R: Rng + ?Sized>(p: &TopologyParams, rng: &mut R) -> Result<Self, TopologyError> {
        if p.n_attackers >= p.n_clients.max(1) {
            return Err(TopologyError::TooManyAttackers { attackers: p.n_attackers, clients: p.n_clients });
        }
        for _ in 0..p.max_attempts {
            let at = match p.root {
                RootPlacement::Centre => p.area.center(),
                RootPlacement::Random => p.area.random_point(rng),
            };
            let mut nodes = vec![NodeSpec::new(ROOT_ID.0, NodeRole::Root, at.x, at.y)];
            for i in 0..p.n_clients {
                let pos = p.area.random_point(rng);
                let boot = if p.boot_window > SimTime::ZERO {
                    SimTime::from_micros(rng.random_range(0..=p.boot_window.as_micros()))
                } else {
                    SimTime::ZERO
                };
                let mut spec = NodeSpec::new(ROOT_ID.0 + 1 + i as u16, NodeRole::Client, pos.x, pos.y).boot_at(boot);
                spec.mobile = p.mobile;
                nodes.push(spec);
            }
            let topo = Topology { nodes };
            let hops = topo.hop_distances(p.tx_range);
            if hops.len() != topo.nodes.len() {
                continue;
            }
            if let Some(limit) = p.max_route_load {
                if topo.potential_route_load(p.tx_range).values().any(|&l| l > limit) {
                    continue;
                }
            }
            let mut eligible: Vec<NodeId> = hops.iter().filter(|(_, &h)| h >= 2).map(|(&id, _)| id).collect();
            eligible.shuffle(rng);
            // Expelling an attacker must not cut honest clients off the root.
            let mut chosen: Vec<NodeId> = Vec::with_capacity(p.n_attackers);
            for id in eligible {
                if chosen.len() == p.n_attackers {
                    break;
                }
                chosen.push(id);
                if !topo.connected_without(&chosen, p.tx_range) {
                    chosen.pop();
                }
            }
            if chosen.len() < p.n_attackers {
                continue;
            }
            let mut topo = topo;
            for n in topo.nodes.iter_mut().filter(|n| chosen.contains(&n.id)) {
                n.role = NodeRole::Malicious;
                if let Some(t) = p.attacker_boot {
                    n.boot_at = t;
                }
            }
            return Ok(topo);
        }
        Err(TopologyError::Disconnected(p.max_attempts))
    }

    pub fn root(&self) -> &NodeSpec {
        self.nodes.iter().find(|n| n.role == NodeRole::Root).expect("validated topology has a root")
    }

    /// Hop counts from the root over the unit-disk graph; unreachable nodes
    /// are absent.
    pub fn hop_distances(&self, range: f64) -> BTreeMap<NodeId, u32> {
        let mut dist = BTreeMap::new();
        let Some(root) = self.nodes.iter().position(|n| n.role == NodeRole::Root) else {
            return dist;
        };
        let mut queue = VecDeque::from([root]);
        dist.insert(self.nodes[root].id, 0);
        while let Some(i) = queue.pop_front() {
            let d = dist[&self.nodes[i].id];
            for (j, n) in self.nodes.iter().enumerate() {
                if !dist.contains_key(&n.id) && self.nodes[i].position.distance(&n.position) <= range {
                    dist.insert(n.id, d + 1);
                    queue.push_back(j);
                }
            }
        }
        dist
    }

    /// For each client, how many other clients have it on at least one
    /// shortest path to the root: the most routes it can be asked to hold
    /// when parents are picked among equal-rank candidates.
    pub fn potential_route_load(&self, range: f64) -> BTreeMap<NodeId, usize> {
        let hops = self.hop_distances(range);
        let mut order: Vec<&NodeSpec> = self.nodes.iter().filter(|n| hops.contains_key(&n.id)).collect();
        order.sort_by_key(|n| (hops[&n.id], n.id));
        let mut ancestors: BTreeMap<NodeId, BTreeSet<NodeId>> = BTreeMap::new();
        for n in &order {
            let d = hops[&n.id];
            let mut set = BTreeSet::new();
            for p in &order {
                if d > 0 && hops[&p.id] == d - 1 && n.position.distance(&p.position) <= range {
                    set.insert(p.id);
                    set.extend(ancestors[&p.id].iter().copied());
                }
            }
            ancestors.insert(n.id, set);
        }
        let root = self.root().id;
        let mut load: BTreeMap<NodeId, usize> = order.iter().filter(|n| n.id != root).map(|n| (n.id, 0)).collect();
        for set in ancestors.values() {
            for a in set.iter().filter(|a| **a != root) {
                *load.entry(*a).or_default() += 1;
            }
        }
        load
    }

    pub fn is_connected(&self, range: f64) -> bool {
        self.hop_distances(range).len() == self.nodes.len()
    }

    /// Whether every remaining node still reaches the root once `removed`
    /// are taken out of the graph.
    pub fn connected_without(&self, removed: &[NodeId], range: f64) -> bool {
        let rest = Topology { nodes: self.nodes.iter().filter(|n| !removed.contains(&n.id)).cloned().collect() };
        rest.is_connected(range)
    }

    /// Same placement with every attacker behaving as an ordinary client.
    pub fn without_attackers(&self) -> Self {
        let mut t = self.clone();
        for n in &mut t.nodes {
            if n.role == NodeRole::Malicious {
                n.role = NodeRole::Client;
            }
        }
        t
    }

    pub fn attackers(&self) -> impl Iterator<Item = &NodeSpec> {
        self.nodes.iter().filter(|n| n.role == NodeRole::Malicious)
    }
}
