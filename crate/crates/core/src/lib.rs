//! Two-timescale energy-efficiency optimizer for a downlink ISAC system whose
//! base station beamforms through a stacked intelligent metasurface (SIM).

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::excessive_precision)]

pub mod allocation;
pub mod aoi;
pub mod channel;
pub mod error;
pub mod harness;
pub mod rates;
pub mod scenario;
pub mod sim_physics;
pub mod scheduler;
pub mod solvers;
pub mod trace;

pub use error::{ConstraintKind, Error, Infeasible, Result};
