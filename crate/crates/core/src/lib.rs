//! Branching random walks on Cayley graphs and the analysis of their traces.

pub mod brw;
pub mod electrical;
pub mod error;
pub mod experiments;
pub mod group;
pub mod network;
pub mod percolation;
pub mod stats;
pub mod trace;
pub mod trace_net;
pub mod tree;

pub use brw::{classify_recurrence, run_brw, BrwRun, LabelledTree, PositionMap, RecurrenceConfig, RecurrenceReport};
pub use error::{Error, Result};
pub use group::{GroupElement, GroupSpec};
pub use network::Network;
pub use trace::{build_trace, TraceNetwork};
pub use tree::{OffspringDist, RootedTree, TreeKind};
