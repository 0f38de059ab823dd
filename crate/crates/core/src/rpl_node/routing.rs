use crate::messages::Address;
use crate::time::SimTime;

/// Downward route learned from a DAO.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RoutingEntry {
    pub target: Address,
    pub next_hop: Address,
    /// Network-layer source of the DAO that installed the entry.
    pub origin: Address,
    pub installed_at: SimTime,
    pub expires_at: SimTime,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RouteAdd {
    Installed,
    Refreshed,
    Full,
    /// Installed after dropping the route to this target.
    Evicted(Address),
}

/// What a full table does with a new target.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum FullPolicy {
    /// Refuse it.
    #[default]
    Block,
    /// Drop the least recently refreshed entry to make room.
    EvictOldest,
}

impl FullPolicy {
    pub fn as_str(self) -> &'static str {
        match self {
            FullPolicy::Block => "block",
            FullPolicy::EvictOldest => "evict",
        }
    }
}

impl std::str::FromStr for FullPolicy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "block" => Ok(FullPolicy::Block),
            "evict" => Ok(FullPolicy::EvictOldest),
            other => Err(format!("unknown table policy `{other}` (expected block or evict)")),
        }
    }
}

/// Bounded storing-mode routing table; at most one entry per target.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RoutingTable {
    capacity: usize,
    policy: FullPolicy,
    entries: Vec<RoutingEntry>,
}

impl RoutingTable {
    pub fn new(capacity: usize) -> Self {
        RoutingTable { capacity, policy: FullPolicy::Block, entries: Vec::new() }
    }

    pub fn policy(&self) -> FullPolicy {
        self.policy
    }

    pub fn set_policy(&mut self, policy: FullPolicy) {
        self.policy = policy;
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn set_capacity(&mut self, capacity: usize) {
        self.capacity = capacity;
        self.entries.truncate(capacity);
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[RoutingEntry] {
        &self.entries
    }

    pub fn purge_expired(&mut self, now: SimTime) {
        self.entries.retain(|e| e.expires_at > now);
    }

    pub fn lookup(&mut self, target: &Address, now: SimTime) -> Option<RoutingEntry> {
        self.purge_expired(now);
        self.entries.iter().find(|e| e.target == *target).copied()
    }

    pub fn contains(&self, target: &Address) -> bool {
        self.entries.iter().any(|e| e.target == *target)
    }

    /// Installs or refreshes the route to `target`. Existing targets are
    /// always refreshed; new ones meet the table's [`FullPolicy`] when full.
    pub fn add(
        &mut self,
        target: Address,
        next_hop: Address,
        origin: Address,
        now: SimTime,
        lifetime: SimTime,
    ) -> RouteAdd {
        self.purge_expired(now);
        let expires_at = now + lifetime;
        if let Some(e) = self.entries.iter_mut().find(|e| e.target == target) {
            e.next_hop = next_hop;
            e.origin = origin;
            e.expires_at = expires_at;
            return RouteAdd::Refreshed;
        }
        let mut evicted = None;
        if self.entries.len() >= self.capacity {
            let oldest = self.entries.iter().enumerate().min_by_key(|(_, e)| e.expires_at).map(|(i, _)| i);
            match (self.policy, oldest) {
                (FullPolicy::EvictOldest, Some(i)) => evicted = Some(self.entries.remove(i).target),
                _ => return RouteAdd::Full,
            }
        }
        self.entries.push(RoutingEntry { target, next_hop, origin, installed_at: now, expires_at });
        evicted.map_or(RouteAdd::Installed, RouteAdd::Evicted)
    }

    pub fn remove(&mut self, target: &Address) -> bool {
        let before = self.entries.len();
        self.entries.retain(|e| e.target != *target);
        before != self.entries.len()
    }

    /// Drops every route through `next_hop`, and the route to it.
    pub fn remove_via(&mut self, next_hop: &Address) -> usize {
        let before = self.entries.len();
        self.entries.retain(|e| e.next_hop != *next_hop && e.target != *next_hop);
        before - self.entries.len()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::messages::NodeId;
    use proptest::prelude::*;

    fn a(n: u16) -> Address {
        Address::of_node(NodeId(n))
    }

    const LIFE: SimTime = SimTime::from_secs(180);

    #[test]
    fn refuses_new_targets_when_full() {
        let mut rt = RoutingTable::new(2);
        let now = SimTime::ZERO;
        assert_eq!(rt.add(a(1), a(9), a(1), now, LIFE), RouteAdd::Installed);
        assert_eq!(rt.add(a(2), a(9), a(2), now, LIFE), RouteAdd::Installed);
        assert_eq!(rt.add(a(3), a(9), a(3), now, LIFE), RouteAdd::Full);
        assert_eq!(rt.add(a(1), a(8), a(1), now, LIFE), RouteAdd::Refreshed);
        assert_eq!(rt.lookup(&a(1), now).unwrap().next_hop, a(8));
        assert_eq!(rt.len(), 2);
    }

    #[test]
    fn evicting_table_drops_least_recently_refreshed() {
        let mut rt = RoutingTable::new(2);
        rt.set_policy(FullPolicy::EvictOldest);
        rt.add(a(1), a(9), a(1), SimTime::ZERO, LIFE);
        rt.add(a(2), a(9), a(2), SimTime::from_secs(1), LIFE);
        rt.add(a(1), a(9), a(1), SimTime::from_secs(2), LIFE);
        assert_eq!(rt.add(a(3), a(9), a(3), SimTime::from_secs(3), LIFE), RouteAdd::Evicted(a(2)));
        assert!(rt.contains(&a(1)) && rt.contains(&a(3)));
        assert_eq!(rt.len(), 2);
    }

    #[test]
    fn zero_capacity_refuses_even_when_evicting() {
        let mut rt = RoutingTable::new(0);
        rt.set_policy(FullPolicy::EvictOldest);
        assert_eq!(rt.add(a(1), a(9), a(1), SimTime::ZERO, LIFE), RouteAdd::Full);
    }

    #[test]
    fn entries_expire() {
        let mut rt = RoutingTable::new(2);
        rt.add(a(1), a(9), a(1), SimTime::ZERO, LIFE);
        assert!(rt.lookup(&a(1), SimTime::from_secs(179)).is_some());
        assert!(rt.lookup(&a(1), SimTime::from_secs(180)).is_none());
        assert_eq!(rt.add(a(2), a(9), a(2), SimTime::from_secs(181), LIFE), RouteAdd::Installed);
    }

    #[test]
    fn remove_via_drops_routes_through_neighbor() {
        let mut rt = RoutingTable::new(8);
        let now = SimTime::ZERO;
        rt.add(a(4), a(4), a(4), now, LIFE);
        rt.add(Address::forged(1), a(4), a(4), now, LIFE);
        rt.add(a(5), a(5), a(5), now, LIFE);
        assert_eq!(rt.remove_via(&a(4)), 2);
        assert_eq!(rt.len(), 1);
    }

    proptest! {
        #[test]
        fn capacity_never_exceeded(cap in 0usize..20, evict in any::<bool>(), ops in proptest::collection::vec((0u16..40, any::<bool>(), 0u64..400), 0..200)) {
            let mut rt = RoutingTable::new(cap);
            if evict {
                rt.set_policy(FullPolicy::EvictOldest);
            }
            let mut now = SimTime::ZERO;
            for (t, remove, dt) in ops {
                now = now + SimTime::from_secs(dt / 40);
                if remove {
                    rt.remove(&a(t));
                } else {
                    rt.add(a(t), a(t % 3), a(t), now, LIFE);
                }
                prop_assert!(rt.len() <= cap);
                let mut targets: Vec<_> = rt.entries().iter().map(|e| e.target).collect();
                targets.sort();
                targets.dedup();
                prop_assert_eq!(targets.len(), rt.len());
            }
        }
    }
}
