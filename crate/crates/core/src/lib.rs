//! Cutting-stock solver built on column generation, with ensemble strategies
//! (multi-column pricing, multi-path restarts), column selection, early
//! stopping and Farley's lower bound, for deterministic and chance-constrained
//! capacity constraints. Includes exact integer solves, brute-force oracles
//! for tiny instances, and a benchmark harness.

pub mod bench;
pub mod engine;
pub mod error;
pub mod integer;
pub mod model;
pub mod pricing;
pub mod selection;
pub mod simplex;

pub use error::{CspError, Result};
pub use model::{CgConfig, CgReport, ColumnPool, DualVector, Instance, InstanceKind, Pattern};
