//! The online driver: owns the graph, the agreement state and the clustering
//! and applies one operation at a time.

use std::fmt;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::baseline::{clustering_cost, clustering_from_state};
use crate::clustering::Clustering;
use crate::error::Result;
use crate::graph::{Epsilon, Neighborhood, SignedGraph, VertexId};
use crate::maintenance::{maintain_after_flip, Maintenance, MaintenanceScratch};
use crate::state::{
    collect_changes, update_after_flip, AgreementState, ChangeSet, FlipSnapshot, Pruning, Work,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Operation {
    #[serde(rename = "flip")]
    FlipSign { u: VertexId, v: VertexId },
    #[serde(rename = "add")]
    AddVertex { v: VertexId },
    #[serde(rename = "del")]
    DeleteVertex { v: VertexId },
}

impl fmt::Display for Operation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Operation::FlipSign { u, v } => write!(f, "flip {u} {v}"),
            Operation::AddVertex { v } => write!(f, "add {v}"),
            Operation::DeleteVertex { v } => write!(f, "del {v}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EngineConfig {
    pub eps: Epsilon,
    pub pruning: Pruning,
    pub maintenance: Maintenance,
    pub neighborhood: Neighborhood,
    /// Compute the disagreement cost after every step (linear in `|E⁺|`).
    pub track_cost: bool,
}

impl EngineConfig {
    pub fn new(eps: Epsilon) -> Self {
        EngineConfig {
            eps,
            pruning: Pruning::Corrected,
            maintenance: Maintenance::Frontier,
            neighborhood: Neighborhood::Open,
            track_cost: true,
        }
    }

    pub fn with_pruning(mut self, pruning: Pruning) -> Self {
        self.pruning = pruning;
        self.normalized()
    }

    pub fn with_maintenance(mut self, maintenance: Maintenance) -> Self {
        self.maintenance = maintenance;
        self
    }

    pub fn with_neighborhood(mut self, neighborhood: Neighborhood) -> Self {
        self.neighborhood = neighborhood;
        self.normalized()
    }

    pub fn with_track_cost(mut self, track_cost: bool) -> Self {
        self.track_cost = track_cost;
        self
    }

    /// Closed neighborhoods void the skip rules, so they force the safe path.
    pub fn normalized(mut self) -> Self {
        if self.neighborhood == Neighborhood::Closed {
            self.pruning = Pruning::Safe;
        }
        self
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "lowercase")]
pub enum StepStatus {
    Applied,
    Rejected { reason: String },
}

impl StepStatus {
    pub fn is_applied(&self) -> bool {
        matches!(self, StepStatus::Applied)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StepReport {
    pub t: u64,
    pub op: Operation,
    #[serde(flatten)]
    pub status: StepStatus,
    pub na_evaluations: u64,
    pub verify_calls: u64,
    pub s_size: usize,
    pub f_size: usize,
    /// Writes to graph, state and clustering structures outside the flip
    /// machinery (vertex additions and deletions).
    pub structure_touches: u64,
    pub cluster_count: usize,
    pub cost_total: Option<u64>,
    pub baseline_match: Option<bool>,
    pub elapsed_ns: u64,
}

/// Cumulative counters over an engine's lifetime.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct EngineTotals {
    pub steps: u64,
    pub applied: u64,
    pub rejected: u64,
    pub na_evaluations: u64,
    pub verify_calls: u64,
    pub structure_touches: u64,
}

/// Intermediate data of one applied flip, for inspection.
#[derive(Debug, Clone)]
pub struct FlipTrace {
    pub snapshot: FlipSnapshot,
    pub changes: ChangeSet,
    pub scratch: MaintenanceScratch,
    pub work: Work,
}

#[derive(Debug, Clone)]
pub struct Engine {
    config: EngineConfig,
    graph: SignedGraph,
    state: AgreementState,
    clustering: Clustering,
    totals: EngineTotals,
}

impl Engine {
    /// Clusters `g0` offline and takes ownership of it.
    pub fn new(g0: SignedGraph, config: EngineConfig) -> Self {
        let config = config.normalized();
        let state = AgreementState::init_in(&g0, config.eps, config.neighborhood);
        let clustering = clustering_from_state(&g0, &state, 0);
        Engine {
            config,
            graph: g0,
            state,
            clustering,
            totals: EngineTotals::default(),
        }
    }

    pub fn config(&self) -> &EngineConfig {
        &self.config
    }

    pub fn graph(&self) -> &SignedGraph {
        &self.graph
    }

    pub fn state(&self) -> &AgreementState {
        &self.state
    }

    pub fn clustering(&self) -> &Clustering {
        &self.clustering
    }

    pub fn counters(&self) -> EngineTotals {
        self.totals
    }

    pub fn cost(&self) -> u64 {
        clustering_cost(&self.graph, &self.clustering)
            .expect("engine clustering is a partition")
            .total
    }

    pub fn apply(&mut self, op: Operation) -> StepReport {
        self.apply_traced(op).0
    }

    /// Applies `op`; invalid operations are rejected and leave the engine
    /// untouched apart from the step counters.
    pub fn apply_traced(&mut self, op: Operation) -> (StepReport, Option<FlipTrace>) {
        self.totals.steps += 1;
        let mut report = StepReport {
            t: self.totals.steps,
            op,
            status: StepStatus::Applied,
            na_evaluations: 0,
            verify_calls: 0,
            s_size: 0,
            f_size: 0,
            structure_touches: 0,
            cluster_count: 0,
            cost_total: None,
            baseline_match: None,
            elapsed_ns: 0,
        };
        let started = Instant::now();
        let outcome = match op {
            Operation::FlipSign { u, v } => self.flip(u, v).map(|trace| {
                report.na_evaluations = trace.work.na_evaluations;
                report.verify_calls = trace.work.verify_calls;
                report.s_size = trace.scratch.s.len();
                report.f_size = trace.scratch.f.len();
                Some(trace)
            }),
            Operation::AddVertex { v } => self.add_vertex(v).map(|touches| {
                report.structure_touches = touches;
                None
            }),
            Operation::DeleteVertex { v } => self.delete_vertex(v).map(|touches| {
                report.structure_touches = touches;
                None
            }),
        };
        report.elapsed_ns = started.elapsed().as_nanos() as u64;
        report.cluster_count = self.clustering.len();
        let trace = match outcome {
            Ok(trace) => {
                self.totals.applied += 1;
                self.totals.na_evaluations += report.na_evaluations;
                self.totals.verify_calls += report.verify_calls;
                self.totals.structure_touches += report.structure_touches;
                trace
            }
            Err(e) => {
                self.totals.rejected += 1;
                report.status = StepStatus::Rejected {
                    reason: e.to_string(),
                };
                None
            }
        };
        if self.config.track_cost {
            report.cost_total = Some(self.cost());
        }
        (report, trace)
    }

    fn flip(&mut self, u: VertexId, v: VertexId) -> Result<FlipTrace> {
        // validates the pair before anything is mutated
        self.graph.flip_edge_structural(u, v)?;
        let mut work = Work::default();
        let snapshot = update_after_flip(
            &self.graph,
            &mut self.state,
            u,
            v,
            self.config.pruning,
            &mut work,
        )
        .expect("state update after a valid structural flip");
        let changes = collect_changes(&self.graph, &snapshot, &self.state);
        let scratch = maintain_after_flip(
            &self.graph,
            &self.state,
            &mut self.clustering,
            &changes,
            self.config.maintenance,
        )
        .expect("cluster maintenance after a valid flip");
        Ok(FlipTrace {
            snapshot,
            changes,
            scratch,
            work,
        })
    }

    fn add_vertex(&mut self, v: VertexId) -> Result<u64> {
        self.graph.add_vertex(v)?;
        let mut touches = 1;
        touches += self.state.add_isolated_vertex(v);
        touches += self.clustering.add_singleton(v)?.1;
        Ok(touches as u64)
    }

    fn delete_vertex(&mut self, v: VertexId) -> Result<u64> {
        self.graph.delete_vertex(v)?;
        let mut touches = 1;
        touches += self.state.remove_isolated_vertex(v);
        touches += self.clustering.remove_singleton(v)?.1;
        Ok(touches as u64)
    }
}
