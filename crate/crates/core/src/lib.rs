//! Symmetric phase-urgency traffic signal control evolved with genetic
//! programming, plus the queue-based microsimulator used to score it.

pub mod network;
pub mod sim;
pub mod features;
pub mod gp;
pub mod policy;
pub mod metrics;
pub mod cli;
