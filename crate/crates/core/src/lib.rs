//! Deterministic RPL storing-mode simulator with a routing-table falsification
//! (RTF) attacker and PUF-license DAO authentication at the border router.
//!
//! Module map:
//!
//! * [`puf_auth`] - PUF emulation, license generation/verification, the
//!   border router's challenge-response database and the encrypted variant.
//! * [`messages`] - RPL control messages and the bit-exact DAO codec.
//! * [`rpl_node`] - per-node protocol state machine, trickle timer, routing
//!   table and the attacker behavior.
//! * [`sim_engine`] - discrete-event kernel, unit-disk radio, random-waypoint
//!   mobility and energy ledgers.
//! * [`metrics`] - PDR, average end-to-end delay, average power and
//!   cross-seed confidence intervals.
//! * [`cli`] - scenario files and experiment orchestration.

pub mod cli;
pub mod messages;
pub mod metrics;
pub mod puf_auth;
pub mod rpl_node;
pub mod sim_engine;
pub mod time;
pub mod trace;

pub use messages::{Address, NodeId};
pub use time::SimTime;
