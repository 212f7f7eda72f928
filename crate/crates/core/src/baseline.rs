//! Offline clustering: agreement, lightness, sparsification and connected
//! components, recomputed from scratch. Also the disagreement cost.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use serde::{Deserialize, Serialize};

use crate::clustering::Clustering;
use crate::error::{Error, Result};
use crate::graph::{Epsilon, Neighborhood, SignedGraph, VertexId};
use crate::state::{is_light_for, AgreementState};

/// Disagreement cost of a clustering on a complete signed graph.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CostBreakdown {
    pub positive_cut: u64,
    pub negative_internal: u64,
    pub total: u64,
}

impl CostBreakdown {
    pub fn new(positive_cut: u64, negative_internal: u64) -> Self {
        CostBreakdown {
            positive_cut,
            negative_internal,
            total: positive_cut + negative_internal,
        }
    }
}

pub fn compute_agreement_state(g: &SignedGraph, eps: Epsilon) -> AgreementState {
    compute_agreement_state_in(g, eps, Neighborhood::Open)
}

pub fn compute_agreement_state_in(
    g: &SignedGraph,
    eps: Epsilon,
    mode: Neighborhood,
) -> AgreementState {
    compute_agreement_state_counted(g, eps, mode).0
}

/// Same as [`compute_agreement_state_in`], also returning the number of
/// non-agreement evaluations performed (one per positive edge).
pub fn compute_agreement_state_counted(
    g: &SignedGraph,
    eps: Epsilon,
    mode: Neighborhood,
) -> (AgreementState, u64) {
    let mut agree = BTreeMap::new();
    let mut agree_cnt: BTreeMap<VertexId, usize> = g.vertices().map(|v| (v, 0)).collect();
    let mut evaluations = 0u64;
    for e in g.positive_edges() {
        let (numer, denom) = g
            .non_agreement_parts(e.lo, e.hi, mode)
            .expect("edge endpoints are present");
        evaluations += 1;
        let ok = eps.exceeds(numer, denom);
        if ok {
            *agree_cnt.get_mut(&e.lo).unwrap() += 1;
            *agree_cnt.get_mut(&e.hi).unwrap() += 1;
        }
        agree.insert(e, ok);
    }
    let is_light = agree_cnt
        .iter()
        .map(|(&v, &cnt)| {
            let size = g.neighborhood_size(v, mode).unwrap();
            (v, is_light_for(eps, cnt, size))
        })
        .collect();
    (
        AgreementState::from_parts(eps, mode, agree, agree_cnt, is_light),
        evaluations,
    )
}

/// Whether the positive edge `{u, v}` survives sparsification: its endpoints
/// agree and at least one of them is heavy.
pub fn sparsified_edge_present(
    g: &SignedGraph,
    state: &AgreementState,
    u: VertexId,
    v: VertexId,
) -> Result<bool> {
    if !g.is_positive(u, v) {
        return Err(Error::NotPositiveAdjacent(u, v));
    }
    state.edge_present(u, v)
}

/// Connected components of the positive edges accepted by `present`.
///
/// Cluster ids are handed out from `first_id` in ascending order of each
/// component's minimum vertex.
pub fn connected_components<F>(g: &SignedGraph, mut present: F, first_id: u64) -> Clustering
where
    F: FnMut(VertexId, VertexId) -> bool,
{
    let mut clustering = Clustering::starting_at(first_id);
    let mut seen = BTreeSet::new();
    let mut queue = VecDeque::new();
    for start in g.vertices() {
        if !seen.insert(start) {
            continue;
        }
        let mut members = BTreeSet::from([start]);
        queue.push_back(start);
        while let Some(x) = queue.pop_front() {
            for &y in g.positive_neighbors(x).unwrap() {
                if !seen.contains(&y) && present(x, y) {
                    seen.insert(y);
                    members.insert(y);
                    queue.push_back(y);
                }
            }
        }
        clustering.insert_fresh(members);
    }
    clustering
}

pub fn correlation_clustering(g: &SignedGraph, eps: Epsilon) -> Clustering {
    correlation_clustering_in(g, eps, Neighborhood::Open, 0)
}

pub fn correlation_clustering_in(
    g: &SignedGraph,
    eps: Epsilon,
    mode: Neighborhood,
    first_id: u64,
) -> Clustering {
    let state = compute_agreement_state_in(g, eps, mode);
    clustering_from_state(g, &state, first_id)
}

/// Components of the sparsified graph described by an already computed state.
pub fn clustering_from_state(g: &SignedGraph, state: &AgreementState, first_id: u64) -> Clustering {
    connected_components(
        g,
        |x, y| state.edge_present(x, y).unwrap_or(false),
        first_id,
    )
}

/// Disagreement cost via the complement identity: negatives inside a cluster
/// are `C(|C|, 2)` minus the positive edges inside it.
pub fn clustering_cost(g: &SignedGraph, c: &Clustering) -> Result<CostBreakdown> {
    c.check_partition_of(g)?;
    let mut positive_cut = 0u64;
    let mut internal_positive: BTreeMap<_, u64> = BTreeMap::new();
    for e in g.positive_edges() {
        let a = c.cluster_of(e.lo).unwrap();
        let b = c.cluster_of(e.hi).unwrap();
        if a == b {
            *internal_positive.entry(a).or_default() += 1;
        } else {
            positive_cut += 1;
        }
    }
    let negative_internal = c
        .iter()
        .map(|(id, members)| {
            let k = members.len() as u64;
            k * (k.saturating_sub(1)) / 2 - internal_positive.get(&id).copied().unwrap_or(0)
        })
        .sum();
    Ok(CostBreakdown::new(positive_cut, negative_internal))
}
