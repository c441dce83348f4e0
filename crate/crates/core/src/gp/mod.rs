//! Genetic programming over urgency expression trees.

pub mod evolve;
pub mod tree;

pub use evolve::{evolve, evolve_with, GpConfig, Individual, EvolutionLog};
pub use tree::ExprTree;
