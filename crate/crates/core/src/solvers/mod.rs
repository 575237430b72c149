//! Optimization subproblems used by the scheduler.

pub mod dinkelbach;
pub mod phases;
pub mod power;
pub mod rb;
