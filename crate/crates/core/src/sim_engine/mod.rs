//! Discrete-event kernel: event queue, unit-disk radio, random-waypoint
//! mobility, energy ledgers and the [`World`] tying them together.

pub mod energy;
pub mod mobility;
pub mod queue;
pub mod radio;
pub mod topology;
mod world;

pub use energy::{energy_of, power_of, EnergyLedger, PowerProfile};
pub use mobility::{Area, MobilityParams, RwpState};
pub use queue::{EventQueue, PastEvent};
pub use radio::{LinkModel, Point};
pub use topology::{NodeSpec, RootPlacement, Topology, TopologyError, TopologyParams, ROOT_ID};
pub use world::{World, WorldConfig};

use crate::puf_auth::PufError;
use crate::time::SimTime;

#[derive(Debug, thiserror::Error)]
pub enum SimError {
    #[error(transparent)]
    PastEvent(#[from] PastEvent),
    #[error("cannot run back to {requested}; clock is at {now}")]
    ClockRewind { now: SimTime, requested: SimTime },
    #[error("provisioning failed: {0}")]
    Provision(#[from] PufError),
    #[error(transparent)]
    Topology(#[from] TopologyError),
}
