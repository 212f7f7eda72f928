//! Clustering maintenance after a sign flip and for isolated vertex edits.
//!
//! Only clusters meeting the frontier `F` can change. Those clusters are cut
//! into fragments along edges with both endpoints in `F`, and the fragments
//! are glued back together through the components of the sparsified graph
//! induced on `F`. Everything else is copied with its id.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::clustering::{ClusterId, Clustering};
use crate::dsu::DisjointSets;
use crate::error::{Error, Result};
use crate::graph::{SignedGraph, VertexId};
use crate::state::{AgreementState, ChangeSet};

/// Region the maintenance procedure examines.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Maintenance {
    /// `S` plus the outside endpoints of boundary edges whose presence
    /// changed with a lightness transition.
    #[default]
    Frontier,
    /// `S` only. Misses boundary edges and can diverge from the offline result.
    PaperStrict,
}

impl FromStr for Maintenance {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "frontier" => Ok(Maintenance::Frontier),
            "paper-strict" => Ok(Maintenance::PaperStrict),
            other => Err(format!(
                "unknown maintenance mode '{other}' (expected frontier|paper-strict)"
            )),
        }
    }
}

impl fmt::Display for Maintenance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Maintenance::Frontier => "frontier",
            Maintenance::PaperStrict => "paper-strict",
        })
    }
}

/// Cluster status, totally ordered; a mark only ever moves up.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Mark {
    Unprocessed,
    CopyCandidate,
    MergeCandidate,
    SplitCandidate,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClusterMark {
    pub mark: Mark,
    /// Representative of the cluster group (a union-find class of clusters).
    pub group: Option<ClusterId>,
    /// Vertex pairs that caused a merge mark.
    pub pairs: Vec<(VertexId, VertexId)>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Marking {
    pub marks: BTreeMap<ClusterId, ClusterMark>,
    /// Every applied mark change as `(cluster, from, to)`.
    pub transitions: Vec<(ClusterId, Mark, Mark)>,
}

impl Marking {
    fn mark(&mut self, id: ClusterId, to: Mark) {
        let entry = self.marks.get_mut(&id).expect("cluster registered");
        if to > entry.mark {
            self.transitions.push((id, entry.mark, to));
            entry.mark = to;
        }
    }

    pub fn get(&self, id: ClusterId) -> Option<Mark> {
        self.marks.get(&id).map(|m| m.mark)
    }
}

/// Transient working data of one maintenance step.
#[derive(Debug, Clone, Default)]
pub struct MaintenanceScratch {
    pub s: BTreeSet<VertexId>,
    pub f: BTreeSet<VertexId>,
    pub d_comp: BTreeMap<VertexId, usize>,
    pub marking: Marking,
    pub fragments: BTreeMap<ClusterId, Vec<BTreeSet<VertexId>>>,
    /// Ids of the clusters created in this step, ascending.
    pub fresh_ids: Vec<ClusterId>,
}

/// `S` extended by the outside endpoints of changed edges hanging off a
/// vertex whose lightness changed. Every edge with a changed sparsified
/// presence then has both endpoints in the result.
pub fn frontier(changes: &ChangeSet, mode: Maintenance) -> BTreeSet<VertexId> {
    let mut f = changes.s.clone();
    if mode == Maintenance::PaperStrict {
        return f;
    }
    for e in &changes.changed_edges {
        for (x, w) in [(e.lo, e.hi), (e.hi, e.lo)] {
            if !changes.s.contains(&w) && changes.lambda.contains(&x) {
                f.insert(w);
            }
        }
        debug_assert!(
            f.contains(&e.lo) && f.contains(&e.hi),
            "changed edge {e} escapes F"
        );
    }
    f
}

/// Connected components of the current sparsified graph induced on `f`.
/// Component ids follow the ascending order of their minimum vertex.
pub fn components_within(
    g: &SignedGraph,
    state: &AgreementState,
    f: &BTreeSet<VertexId>,
) -> BTreeMap<VertexId, usize> {
    let mut comp = BTreeMap::new();
    let mut next = 0;
    let mut queue = VecDeque::new();
    for &start in f {
        if comp.contains_key(&start) {
            continue;
        }
        comp.insert(start, next);
        queue.push_back(start);
        while let Some(x) = queue.pop_front() {
            for &y in g.positive_neighbors(x).unwrap() {
                if f.contains(&y) && !comp.contains_key(&y) && state.edge_present(x, y).unwrap() {
                    comp.insert(y, next);
                    queue.push_back(y);
                }
            }
        }
        next += 1;
    }
    comp
}

/// Marks every cluster of `c_prev` as copy, merge or split candidate.
pub fn mark_clusters(
    c_prev: &Clustering,
    f: &BTreeSet<VertexId>,
    d_comp: &BTreeMap<VertexId, usize>,
) -> Marking {
    let mut marking = Marking {
        marks: c_prev
            .ids()
            .map(|id| {
                (
                    id,
                    ClusterMark {
                        mark: Mark::Unprocessed,
                        group: None,
                        pairs: Vec::new(),
                    },
                )
            })
            .collect(),
        transitions: Vec::new(),
    };

    let touched: BTreeSet<ClusterId> = f.iter().filter_map(|&w| c_prev.cluster_of(w)).collect();
    for id in c_prev.ids() {
        if !touched.contains(&id) {
            marking.mark(id, Mark::CopyCandidate);
        }
    }

    let index: BTreeMap<ClusterId, usize> =
        touched.iter().enumerate().map(|(i, &id)| (id, i)).collect();
    let mut groups = DisjointSets::new(touched.len());
    let fv: Vec<VertexId> = f.iter().copied().collect();
    for (i, &w) in fv.iter().enumerate() {
        let cw = c_prev.cluster_of(w).expect("frontier vertex is clustered");
        for &w2 in &fv[i..] {
            let cw2 = c_prev.cluster_of(w2).expect("frontier vertex is clustered");
            let same_d = d_comp[&w] == d_comp[&w2];
            match (same_d, cw == cw2) {
                (true, false) => {
                    marking.mark(cw, Mark::MergeCandidate);
                    marking.mark(cw2, Mark::MergeCandidate);
                    marking.marks.get_mut(&cw).unwrap().pairs.push((w, w2));
                    marking.marks.get_mut(&cw2).unwrap().pairs.push((w, w2));
                    groups.union(index[&cw], index[&cw2]);
                }
                (true, true) => marking.mark(cw, Mark::CopyCandidate),
                (false, true) => marking.mark(cw, Mark::SplitCandidate),
                (false, false) => {}
            }
        }
    }

    let ids: Vec<ClusterId> = touched.iter().copied().collect();
    let mut rep: BTreeMap<usize, ClusterId> = BTreeMap::new();
    for (i, &id) in ids.iter().enumerate() {
        let root = groups.find(i);
        // group named after its smallest cluster id
        let name = *rep.entry(root).or_insert(id);
        marking.marks.get_mut(&id).unwrap().group = Some(name);
    }
    marking
}

/// Components of `cluster` under the current sparsified graph with every
/// edge between two frontier vertices removed.
pub fn split_fragments(
    g: &SignedGraph,
    state: &AgreementState,
    cluster: &BTreeSet<VertexId>,
    f: &BTreeSet<VertexId>,
) -> Vec<BTreeSet<VertexId>> {
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    let mut queue = VecDeque::new();
    for &start in cluster {
        if !seen.insert(start) {
            continue;
        }
        let mut frag = BTreeSet::from([start]);
        queue.push_back(start);
        while let Some(x) = queue.pop_front() {
            for &y in g.positive_neighbors(x).unwrap() {
                if !cluster.contains(&y) || seen.contains(&y) {
                    continue;
                }
                if f.contains(&x) && f.contains(&y) {
                    continue;
                }
                if state.edge_present(x, y).unwrap() {
                    seen.insert(y);
                    frag.insert(y);
                    queue.push_back(y);
                }
            }
        }
        out.push(frag);
    }
    out
}

/// Replaces every cluster meeting `f` by the glued fragment/D-component
/// classes. Copy candidates whose class is unchanged keep their id; every
/// other class gets a fresh id in ascending order of its minimum vertex.
pub fn rebuild_clustering(
    clustering: &mut Clustering,
    marking: &Marking,
    d_comp: &BTreeMap<VertexId, usize>,
    fragments: &BTreeMap<ClusterId, Vec<BTreeSet<VertexId>>>,
    f: &BTreeSet<VertexId>,
) -> Result<Vec<ClusterId>> {
    if let Some((&id, _)) = marking
        .marks
        .iter()
        .find(|(_, m)| m.mark == Mark::Unprocessed)
    {
        return Err(Error::UnprocessedCluster(id));
    }
    let touched: BTreeSet<ClusterId> = f.iter().filter_map(|&w| clustering.cluster_of(w)).collect();

    let mut frags: Vec<BTreeSet<VertexId>> = Vec::new();
    for &id in &touched {
        match fragments.get(&id) {
            Some(parts) if marking.get(id) == Some(Mark::SplitCandidate) => {
                frags.extend(parts.iter().cloned())
            }
            _ => frags.push(clustering.members(id).unwrap().clone()),
        }
    }
    let mut frag_of: BTreeMap<VertexId, usize> = BTreeMap::new();
    for (i, frag) in frags.iter().enumerate() {
        for &w in frag.intersection(f) {
            frag_of.insert(w, i);
        }
    }
    let d_count = d_comp.values().copied().max().map_or(0, |m| m + 1);
    let mut glue = DisjointSets::new(frags.len() + d_count);
    for &w in f {
        glue.union(frag_of[&w], frags.len() + d_comp[&w]);
    }

    let mut classes: BTreeMap<usize, BTreeSet<VertexId>> = BTreeMap::new();
    for (i, frag) in frags.iter().enumerate() {
        classes
            .entry(glue.find(i))
            .or_default()
            .extend(frag.iter().copied());
    }

    let mut kept = Vec::new();
    let mut fresh = Vec::new();
    for members in classes.into_values() {
        let old = clustering.cluster_of(*members.first().unwrap()).unwrap();
        let unchanged = marking.get(old) == Some(Mark::CopyCandidate)
            && clustering.members(old) == Some(&members);
        if unchanged {
            kept.push(old);
        } else {
            fresh.push(members);
        }
    }
    for id in touched {
        if !kept.contains(&id) {
            clustering.remove_cluster(id);
        }
    }
    fresh.sort_by_key(|m| *m.first().unwrap());
    Ok(fresh
        .into_iter()
        .map(|m| clustering.insert_fresh(m))
        .collect())
}

/// Brings `clustering` from time `t - 1` to time `t` after the flip
/// described by `changes`. `state` must already be at time `t`.
pub fn maintain_after_flip(
    g: &SignedGraph,
    state: &AgreementState,
    clustering: &mut Clustering,
    changes: &ChangeSet,
    mode: Maintenance,
) -> Result<MaintenanceScratch> {
    let f = frontier(changes, mode);
    let d_comp = components_within(g, state, &f);
    let marking = mark_clusters(clustering, &f, &d_comp);
    let mut fragments = BTreeMap::new();
    for (&id, m) in &marking.marks {
        if m.mark == Mark::SplitCandidate {
            let members = clustering.members(id).unwrap();
            fragments.insert(id, split_fragments(g, state, members, &f));
        }
    }
    let fresh_ids = rebuild_clustering(clustering, &marking, &d_comp, &fragments, &f)?;
    Ok(MaintenanceScratch {
        s: changes.s.clone(),
        f,
        d_comp,
        marking,
        fragments,
        fresh_ids,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::baseline::correlation_clustering;
    use crate::graph::fixtures::*;
    use crate::graph::Epsilon;
    use crate::state::{collect_changes, update_after_flip, Pruning, Work};

    fn eps() -> Epsilon {
        Epsilon::new(7, 10).unwrap()
    }

    struct Flipped {
        g: SignedGraph,
        state: AgreementState,
        before: Clustering,
        changes: ChangeSet,
    }

    fn flip(g0: SignedGraph, u: VertexId, v: VertexId) -> Flipped {
        let mut g = g0;
        let before = correlation_clustering(&g, eps());
        let mut state = AgreementState::init(&g, eps());
        g.flip_edge_structural(u, v).unwrap();
        let snap = update_after_flip(
            &g,
            &mut state,
            u,
            v,
            Pruning::Corrected,
            &mut Work::default(),
        )
        .unwrap();
        let changes = collect_changes(&g, &snap, &state);
        Flipped {
            g,
            state,
            before,
            changes,
        }
    }

    #[test]
    fn merge_scenario() {
        let fl = flip(k4_minus(), 1, 2);
        let f = frontier(&fl.changes, Maintenance::Frontier);
        assert_eq!(f, fl.changes.s);
        let d = components_within(&fl.g, &fl.state, &f);
        assert!(d.values().all(|&c| c == 0));
        let marking = mark_clusters(&fl.before, &f, &d);
        assert!(marking
            .marks
            .values()
            .all(|m| m.mark == Mark::MergeCandidate));
        let groups: BTreeSet<_> = marking.marks.values().map(|m| m.group).collect();
        assert_eq!(groups.len(), 1);

        let mut c = fl.before.clone();
        let scratch =
            maintain_after_flip(&fl.g, &fl.state, &mut c, &fl.changes, Maintenance::Frontier)
                .unwrap();
        assert_eq!(c.partition(), vec![vec![1, 2, 3, 4]]);
        assert_eq!(scratch.fresh_ids, vec![ClusterId(4)]);
    }

    #[test]
    fn split_scenario() {
        let fl = flip(k4(), 1, 2);
        let f = frontier(&fl.changes, Maintenance::Frontier);
        let d = components_within(&fl.g, &fl.state, &f);
        assert_eq!(d.values().collect::<BTreeSet<_>>().len(), 4);
        let marking = mark_clusters(&fl.before, &f, &d);
        assert_eq!(marking.get(ClusterId(0)), Some(Mark::SplitCandidate));
        let frags = split_fragments(
            &fl.g,
            &fl.state,
            fl.before.members(ClusterId(0)).unwrap(),
            &f,
        );
        assert_eq!(frags.len(), 4);

        let mut c = fl.before.clone();
        maintain_after_flip(&fl.g, &fl.state, &mut c, &fl.changes, Maintenance::Frontier).unwrap();
        assert_eq!(c.partition(), vec![vec![1], vec![2], vec![3], vec![4]]);
        assert!(c.ids().all(|id| id.0 >= 1));
    }

    #[test]
    fn far_cluster_is_copied_with_its_id() {
        // two positive K4s and an isolated pair; flipping the pair touches neither K4
        let mut edges = Vec::new();
        for base in [0, 4] {
            for a in 1..=4 {
                for b in (a + 1)..=4 {
                    edges.push((base + a, base + b));
                }
            }
        }
        let mut g = SignedGraph::from_positive_edges(1..=10, edges).unwrap();
        let mut state = AgreementState::init(&g, eps());
        let mut c = correlation_clustering(&g, eps());
        let k4_ids = [c.cluster_of(1).unwrap(), c.cluster_of(5).unwrap()];
        g.flip_edge_structural(9, 10).unwrap();
        let snap = update_after_flip(
            &g,
            &mut state,
            9,
            10,
            Pruning::Corrected,
            &mut Work::default(),
        )
        .unwrap();
        let changes = collect_changes(&g, &snap, &state);
        let scratch =
            maintain_after_flip(&g, &state, &mut c, &changes, Maintenance::Frontier).unwrap();
        for id in k4_ids {
            assert_eq!(scratch.marking.get(id), Some(Mark::CopyCandidate));
            assert_eq!(c.members(id).unwrap().len(), 4);
        }
        assert_eq!(c.partition(), correlation_clustering(&g, eps()).partition());
    }

    #[test]
    fn fragments_of_cluster_outside_frontier() {
        let g = k4();
        let state = AgreementState::init(&g, eps());
        let members = BTreeSet::from([1, 2, 3, 4]);
        let frags = split_fragments(&g, &state, &members, &BTreeSet::new());
        assert_eq!(frags, vec![members]);
    }

    #[test]
    fn empty_frontier_has_no_components() {
        let g = k4();
        let state = AgreementState::init(&g, eps());
        assert!(components_within(&g, &state, &BTreeSet::new()).is_empty());
    }

    #[test]
    fn unprocessed_mark_is_reported() {
        let mut c = Clustering::starting_at(0);
        c.insert_fresh(BTreeSet::from([1]));
        let mut marking = Marking::default();
        marking.marks.insert(
            ClusterId(0),
            ClusterMark {
                mark: Mark::Unprocessed,
                group: None,
                pairs: vec![],
            },
        );
        let res = rebuild_clustering(
            &mut c,
            &marking,
            &BTreeMap::new(),
            &BTreeMap::new(),
            &BTreeSet::new(),
        );
        assert_eq!(res, Err(Error::UnprocessedCluster(ClusterId(0))));
    }

    #[test]
    fn marks_only_move_up() {
        let fl = flip(k4(), 1, 2);
        let f = frontier(&fl.changes, Maintenance::Frontier);
        let d = components_within(&fl.g, &fl.state, &f);
        let marking = mark_clusters(&fl.before, &f, &d);
        assert!(marking.transitions.iter().all(|(_, from, to)| from < to));
    }
}
