//! Browser-agent execution kernel.

pub mod budget;
pub mod context;
pub mod exec;
pub mod harness;
pub mod safety;
pub mod snapshot;
pub mod web;
