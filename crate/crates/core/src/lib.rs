//! Static analysis of service architectures described by per-output
//! input/output dependencies.
//!
//! An architecture is refined in steps: elementary decomposition (L0 -> L1),
//! condensation of strongly connected services (L1 -> L2) and grouping for
//! deployment (L2 -> L3). Dependency queries, property slicing, impact and
//! WCET analyses work at any level.

pub mod cli;
pub mod deps;
pub mod dot;
pub mod elementary;
pub mod error;
pub mod fixtures;
pub mod impact;
pub mod io;
pub mod model;
pub mod partition;
pub mod pipeline;
pub mod scc;
pub mod slicing;

pub use error::{Error, Result};
pub use model::{Architecture, ChannelId, DepRef, LocalVarId, Measures, Service, ServiceId, Thresholds};
