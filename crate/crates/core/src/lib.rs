//! Runtime verification of HyperLTL hyperproperties over finite traces.

pub mod analysis;
pub mod bdd;
pub mod engine;
pub mod formula;
pub mod gen;
pub mod ltl_engine;
pub mod monitor;
pub mod monitorability;
pub mod semantics;
pub mod trace;
pub mod triestore;
