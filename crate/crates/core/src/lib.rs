//! Fully dynamic correlation clustering on complete signed graphs.
//!
//! A graph is stored by its positive edges only; every other pair is negative.
//! The offline algorithm marks agreeing edges, drops light vertices' edges and
//! returns connected components. The [`Engine`] keeps that clustering up to
//! date under sign flips and isolated vertex edits, re-verifying only a small
//! neighbourhood of each flip.
//!
//! ```
//! use dyncc::{Engine, EngineConfig, Epsilon, Operation, SignedGraph};
//!
//! let edges = [(1, 3), (1, 4), (2, 3), (2, 4), (3, 4)];
//! let g = SignedGraph::from_positive_edges([1, 2, 3, 4], edges).unwrap();
//! let mut engine = Engine::new(g, EngineConfig::new(Epsilon::new(7, 10).unwrap()));
//! assert_eq!(engine.clustering().len(), 4);
//! engine.apply(Operation::FlipSign { u: 1, v: 2 });
//! assert_eq!(engine.clustering().partition(), vec![vec![1, 2, 3, 4]]);
//! ```

pub mod baseline;
pub mod clustering;
pub mod dsu;
pub mod engine;
pub mod error;
pub mod graph;
pub mod harness;
pub mod maintenance;
pub mod state;

pub use baseline::{
    clustering_cost, compute_agreement_state, correlation_clustering, correlation_clustering_in,
    CostBreakdown,
};
pub use clustering::{ClusterId, Clustering, Partition};
pub use engine::{Engine, EngineConfig, EngineTotals, Operation, StepReport, StepStatus};
pub use error::{Error, Result};
pub use graph::{EdgeKey, Epsilon, Neighborhood, Sign, SignedGraph, VertexId};
pub use maintenance::Maintenance;
pub use state::{AgreementState, Pruning, Work};
