//! Incrementally maintained agreement flags, agreement counts and lightness.
//!
//! After a structural sign flip of `{u, v}` only edges incident to `u` or `v`
//! can change their non-agreement, and only vertices of
//! `S = {u, v} ∪ N(u) ∪ N(v)` (pre-flip neighborhoods) can change their
//! count or lightness. The pruned updates additionally skip edges whose
//! agreement status provably cannot change, deciding this from pre-flip
//! degrees and the pre-flip symmetric difference.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::baseline;
use crate::error::{Error, Result};
use crate::graph::{EdgeKey, Epsilon, Neighborhood, SignedGraph, VertexId};

/// How agreement flags are refreshed after a flip.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Pruning {
    /// Guarded re-verification, including the non-agreeing
    /// neighbor case of the `+ → -` direction with `deg(x) <= deg(w)`.
    #[default]
    Corrected,
    /// The guards without that case. Misses edges that cross
    /// into agreement after a `+ → -` flip.
    PaperStrict,
    /// Re-verify every edge incident to the flipped pair.
    Safe,
}

impl FromStr for Pruning {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "corrected" => Ok(Pruning::Corrected),
            "paper-strict" => Ok(Pruning::PaperStrict),
            "safe" => Ok(Pruning::Safe),
            other => Err(format!(
                "unknown pruning mode '{other}' (expected corrected|paper-strict|safe)"
            )),
        }
    }
}

impl fmt::Display for Pruning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Pruning::Corrected => "corrected",
            Pruning::PaperStrict => "paper-strict",
            Pruning::Safe => "safe",
        })
    }
}

/// Work counters accumulated by the update routines.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Work {
    /// Symmetric-difference evaluations (each one is a non-agreement evaluation).
    pub na_evaluations: u64,
    pub verify_calls: u64,
}

impl std::ops::AddAssign for Work {
    fn add_assign(&mut self, rhs: Work) {
        self.na_evaluations += rhs.na_evaluations;
        self.verify_calls += rhs.verify_calls;
    }
}

pub(crate) fn is_light_for(eps: Epsilon, agree_cnt: usize, neighborhood_size: usize) -> bool {
    neighborhood_size == 0 || eps.exceeds(agree_cnt as u64, neighborhood_size as u64)
}

/// Per-edge agreement flags and per-vertex agreement counts and lightness,
/// tied to one threshold and neighborhood convention.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AgreementState {
    eps: Epsilon,
    neighborhood: Neighborhood,
    agree: BTreeMap<EdgeKey, bool>,
    agree_cnt: BTreeMap<VertexId, usize>,
    is_light: BTreeMap<VertexId, bool>,
}

impl AgreementState {
    pub(crate) fn from_parts(
        eps: Epsilon,
        neighborhood: Neighborhood,
        agree: BTreeMap<EdgeKey, bool>,
        agree_cnt: BTreeMap<VertexId, usize>,
        is_light: BTreeMap<VertexId, bool>,
    ) -> Self {
        AgreementState {
            eps,
            neighborhood,
            agree,
            agree_cnt,
            is_light,
        }
    }

    /// From-scratch state for `g`; identical to the offline computation.
    pub fn init(g: &SignedGraph, eps: Epsilon) -> Self {
        baseline::compute_agreement_state(g, eps)
    }

    pub fn init_in(g: &SignedGraph, eps: Epsilon, neighborhood: Neighborhood) -> Self {
        baseline::compute_agreement_state_in(g, eps, neighborhood)
    }

    pub fn eps(&self) -> Epsilon {
        self.eps
    }

    pub fn neighborhood(&self) -> Neighborhood {
        self.neighborhood
    }

    /// Agreement flag of a positive edge; `None` for pairs that are not positive.
    pub fn agree(&self, u: VertexId, v: VertexId) -> Option<bool> {
        self.agree.get(&EdgeKey::new(u, v)).copied()
    }

    pub fn agree_cnt(&self, v: VertexId) -> Option<usize> {
        self.agree_cnt.get(&v).copied()
    }

    pub fn is_light(&self, v: VertexId) -> Option<bool> {
        self.is_light.get(&v).copied()
    }

    pub fn agree_flags(&self) -> impl Iterator<Item = (EdgeKey, bool)> + '_ {
        self.agree.iter().map(|(&e, &a)| (e, a))
    }

    /// Presence of a positive edge in the sparsified graph.
    pub fn edge_present(&self, u: VertexId, v: VertexId) -> Result<bool> {
        let agree = self.agree(u, v).ok_or(Error::NotPositiveAdjacent(u, v))?;
        Ok(agree && !(self.is_light[&u] && self.is_light[&v]))
    }

    /// Registers an isolated vertex. Returns the number of structures written.
    pub fn add_isolated_vertex(&mut self, v: VertexId) -> usize {
        self.agree_cnt.insert(v, 0);
        self.is_light.insert(v, true);
        2
    }

    /// Forgets an isolated vertex. Returns the number of structures written.
    pub fn remove_isolated_vertex(&mut self, v: VertexId) -> usize {
        debug_assert_eq!(self.agree_cnt.get(&v), Some(&0));
        self.agree_cnt.remove(&v);
        self.is_light.remove(&v);
        2
    }

    /// Re-evaluates agreement of the positive edge `{x, y}` on `g` and adjusts
    /// both counts when the flag changes. Returns whether it changed.
    pub fn verify_edge(
        &mut self,
        g: &SignedGraph,
        x: VertexId,
        y: VertexId,
        work: &mut Work,
    ) -> Result<bool> {
        if !g.is_positive(x, y) {
            return Err(Error::NotPositiveAdjacent(x, y));
        }
        let (numer, denom) = g.non_agreement_parts(x, y, self.neighborhood)?;
        work.na_evaluations += 1;
        Ok(self.apply_verdict(x, y, numer, denom, work))
    }

    /// Verification with an already known numerator and denominator.
    fn apply_verdict(
        &mut self,
        x: VertexId,
        y: VertexId,
        numer: u64,
        denom: u64,
        work: &mut Work,
    ) -> bool {
        work.verify_calls += 1;
        let agrees = self.eps.exceeds(numer, denom);
        let flag = self
            .agree
            .get_mut(&EdgeKey::new(x, y))
            .expect("verified edge carries a flag");
        if *flag == agrees {
            return false;
        }
        *flag = agrees;
        for z in [x, y] {
            let cnt = self.agree_cnt.get_mut(&z).unwrap();
            if agrees {
                *cnt += 1;
            } else {
                *cnt -= 1;
            }
        }
        true
    }

    fn drop_flag(&mut self, e: EdgeKey) {
        if self.agree.remove(&e) == Some(true) {
            *self.agree_cnt.get_mut(&e.lo).unwrap() -= 1;
            *self.agree_cnt.get_mut(&e.hi).unwrap() -= 1;
        }
    }

    fn refresh_lightness(&mut self, g: &SignedGraph, vertices: &BTreeSet<VertexId>) {
        for &w in vertices {
            let size = g.neighborhood_size(w, self.neighborhood).unwrap();
            let light = is_light_for(self.eps, self.agree_cnt[&w], size);
            self.is_light.insert(w, light);
        }
    }

    /// Full-scan comparison against a from-scratch recomputation.
    pub fn check_against(&self, g: &SignedGraph) -> std::result::Result<(), String> {
        let fresh = baseline::compute_agreement_state_in(g, self.eps, self.neighborhood);
        if fresh.agree != self.agree {
            let diff: Vec<_> = fresh
                .agree
                .keys()
                .chain(self.agree.keys())
                .filter(|e| fresh.agree.get(e) != self.agree.get(e))
                .collect();
            return Err(format!("agreement flags differ on {diff:?}"));
        }
        if fresh.agree_cnt != self.agree_cnt {
            return Err("agreement counts differ".into());
        }
        if fresh.is_light != self.is_light {
            return Err("lightness differs".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FlipDirection {
    NegativeToPositive,
    PositiveToNegative,
}

/// Pre-flip view of the neighborhood of a flipped edge.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FlipSnapshot {
    pub u: VertexId,
    pub v: VertexId,
    pub direction: FlipDirection,
    pub pre_n_u: BTreeSet<VertexId>,
    pub pre_n_v: BTreeSet<VertexId>,
    pub pre_deg_u: usize,
    pub pre_deg_v: usize,
    /// `{u, v} ∪ N(u) ∪ N(v)`; the same set before and after the flip.
    pub s: BTreeSet<VertexId>,
    pub lightness_before: BTreeMap<VertexId, bool>,
    /// Pre-flip flags of every positive edge incident to `u` or `v`.
    pub agree_before: BTreeMap<EdgeKey, bool>,
}

impl FlipSnapshot {
    /// Reconstructs the pre-flip view from the already flipped graph and the
    /// not yet updated state.
    pub fn capture(
        g: &SignedGraph,
        state: &AgreementState,
        u: VertexId,
        v: VertexId,
    ) -> Result<Self> {
        let direction = if g.is_positive(u, v) {
            FlipDirection::NegativeToPositive
        } else {
            FlipDirection::PositiveToNegative
        };
        let mut pre_n_u = g.positive_neighbors(u)?.clone();
        let mut pre_n_v = g.positive_neighbors(v)?.clone();
        match direction {
            FlipDirection::NegativeToPositive => {
                pre_n_u.remove(&v);
                pre_n_v.remove(&u);
            }
            FlipDirection::PositiveToNegative => {
                pre_n_u.insert(v);
                pre_n_v.insert(u);
            }
        }
        let mut s: BTreeSet<VertexId> = pre_n_u.union(&pre_n_v).copied().collect();
        s.insert(u);
        s.insert(v);
        let lightness_before = s
            .iter()
            .map(|&w| (w, state.is_light(w).unwrap_or(true)))
            .collect();
        let agree_before = pre_n_u
            .iter()
            .map(|&w| EdgeKey::new(u, w))
            .chain(pre_n_v.iter().map(|&w| EdgeKey::new(v, w)))
            .filter_map(|e| state.agree.get(&e).map(|&a| (e, a)))
            .collect();
        Ok(FlipSnapshot {
            u,
            v,
            direction,
            pre_deg_u: pre_n_u.len(),
            pre_deg_v: pre_n_v.len(),
            pre_n_u,
            pre_n_v,
            s,
            lightness_before,
            agree_before,
        })
    }

    pub fn flipped_edge(&self) -> EdgeKey {
        EdgeKey::new(self.u, self.v)
    }

    /// `N(u) ∩ N(v)` before the flip.
    pub fn common(&self) -> BTreeSet<VertexId> {
        self.pre_n_u.intersection(&self.pre_n_v).copied().collect()
    }

    /// Pre-flip neighbors of `x` (one of the endpoints) that are not
    /// neighbors of the other endpoint, excluding the other endpoint.
    pub fn exclusive(&self, x: VertexId) -> BTreeSet<VertexId> {
        let (nx, ny, y) = if x == self.u {
            (&self.pre_n_u, &self.pre_n_v, self.v)
        } else {
            (&self.pre_n_v, &self.pre_n_u, self.u)
        };
        nx.difference(ny).copied().filter(|&w| w != y).collect()
    }

    fn pre_neighbors(&self, x: VertexId) -> &BTreeSet<VertexId> {
        if x == self.u {
            &self.pre_n_u
        } else {
            &self.pre_n_v
        }
    }
}

/// Pre-flip quantities the skip rules are decided on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PredicateInputs {
    pub deg_pre_x: usize,
    pub deg_pre_w: usize,
    /// `|N(x) Δ N(w)|` before the flip.
    pub threshold: usize,
}

/// Whether the edge `{x, w}`, `w` adjacent to exactly one endpoint `x`, must
/// be re-verified after a `- → +` flip.
pub fn must_verify_negative_to_positive(agree: bool, p: PredicateInputs) -> bool {
    if agree {
        // non-agreement strictly grows
        p.deg_pre_x < p.deg_pre_w || p.threshold < p.deg_pre_x
    } else {
        // non-agreement strictly shrinks
        p.deg_pre_x >= p.deg_pre_w && p.threshold > p.deg_pre_x
    }
}

/// Same as [`must_verify_negative_to_positive`] for a `+ → -` flip.
pub fn must_verify_positive_to_negative(agree: bool, p: PredicateInputs, pruning: Pruning) -> bool {
    if agree {
        p.deg_pre_x <= p.deg_pre_w || p.threshold > p.deg_pre_x
    } else {
        let shrinks_by_degree = p.deg_pre_x <= p.deg_pre_w;
        let shrinks_by_threshold = p.deg_pre_x > p.deg_pre_w && p.threshold < p.deg_pre_x;
        match pruning {
            Pruning::PaperStrict => shrinks_by_threshold,
            _ => shrinks_by_degree || shrinks_by_threshold,
        }
    }
}

/// Guarded pass over the exclusive neighbors of `x`.
///
/// Each candidate costs one symmetric-difference evaluation on pre-flip
/// neighborhoods; the post-flip value differs from it only by the membership
/// of the other endpoint `y`, so the same pass feeds the verification.
fn exclusive_pass(
    g: &SignedGraph,
    state: &mut AgreementState,
    snap: &FlipSnapshot,
    x: VertexId,
    pruning: Pruning,
    work: &mut Work,
) {
    let y = if x == snap.u { snap.v } else { snap.u };
    let pre_nx = snap.pre_neighbors(x);
    let post_deg_x = g.positive_degree(x).unwrap();
    for w in snap.exclusive(x) {
        let nw = g.positive_neighbors(w).unwrap();
        let common = crate::graph::intersection_size(pre_nx, nw);
        let threshold = pre_nx.len() + nw.len() - 2 * common;
        work.na_evaluations += 1;
        let inputs = PredicateInputs {
            deg_pre_x: pre_nx.len(),
            deg_pre_w: nw.len(),
            threshold,
        };
        let agree = state
            .agree(x, w)
            .expect("exclusive neighbor edge is positive");
        let verify = match snap.direction {
            FlipDirection::NegativeToPositive => must_verify_negative_to_positive(agree, inputs),
            FlipDirection::PositiveToNegative => {
                must_verify_positive_to_negative(agree, inputs, pruning)
            }
        };
        if verify {
            let y_in_pre_delta = pre_nx.contains(&y) != nw.contains(&y);
            let post_delta = if y_in_pre_delta {
                threshold - 1
            } else {
                threshold + 1
            };
            let denom = post_deg_x.max(nw.len());
            state.apply_verdict(x, w, post_delta as u64, denom as u64, work);
        }
    }
}

/// Refreshes the state after `{u, v}` was structurally flipped from `-` to `+`.
pub fn update_negative_to_positive(
    g: &SignedGraph,
    state: &mut AgreementState,
    u: VertexId,
    v: VertexId,
    pruning: Pruning,
    work: &mut Work,
) -> Result<FlipSnapshot> {
    if !g.is_positive(u, v) {
        return Err(Error::EdgeNotPositive(u, v));
    }
    if pruning == Pruning::Safe || state.neighborhood != Neighborhood::Open {
        return safe_recompute_around(g, state, u, v, work);
    }
    let snap = FlipSnapshot::capture(g, state, u, v)?;
    // u, v are now common neighbors of every w in A: non-agreement cannot grow.
    for w in snap.common() {
        for x in [u, v] {
            if state.agree(x, w) == Some(false) {
                state.verify_edge(g, x, w, work)?;
            }
        }
    }
    for x in [u, v] {
        exclusive_pass(g, state, &snap, x, pruning, work);
    }
    let (numer, denom) = g.non_agreement_parts(u, v, state.neighborhood)?;
    work.na_evaluations += 1;
    let agrees = state.eps.exceeds(numer, denom);
    state.agree.insert(snap.flipped_edge(), agrees);
    if agrees {
        *state.agree_cnt.get_mut(&u).unwrap() += 1;
        *state.agree_cnt.get_mut(&v).unwrap() += 1;
    }
    state.refresh_lightness(g, &snap.s);
    Ok(snap)
}

/// Refreshes the state after `{u, v}` was structurally flipped from `+` to `-`.
pub fn update_positive_to_negative(
    g: &SignedGraph,
    state: &mut AgreementState,
    u: VertexId,
    v: VertexId,
    pruning: Pruning,
    work: &mut Work,
) -> Result<FlipSnapshot> {
    if g.sign(u, v)? != crate::graph::Sign::Negative || state.agree(u, v).is_none() {
        return Err(Error::EdgeNotNegative(u, v));
    }
    if pruning == Pruning::Safe || state.neighborhood != Neighborhood::Open {
        return safe_recompute_around(g, state, u, v, work);
    }
    let snap = FlipSnapshot::capture(g, state, u, v)?;
    state.drop_flag(snap.flipped_edge());
    // losing the common neighbor can only raise non-agreement
    for w in snap.common() {
        for x in [u, v] {
            if state.agree(x, w) == Some(true) {
                state.verify_edge(g, x, w, work)?;
            }
        }
    }
    for x in [u, v] {
        exclusive_pass(g, state, &snap, x, pruning, work);
    }
    state.refresh_lightness(g, &snap.s);
    Ok(snap)
}

/// Reference update: re-verifies every positive edge incident to `u` or `v`
/// and recomputes lightness over `S`. Works for either flip direction and
/// either neighborhood convention.
pub fn safe_recompute_around(
    g: &SignedGraph,
    state: &mut AgreementState,
    u: VertexId,
    v: VertexId,
    work: &mut Work,
) -> Result<FlipSnapshot> {
    let snap = FlipSnapshot::capture(g, state, u, v)?;
    let e = snap.flipped_edge();
    match snap.direction {
        FlipDirection::NegativeToPositive => {
            state.agree.insert(e, false);
        }
        FlipDirection::PositiveToNegative => state.drop_flag(e),
    }
    let mut edges = BTreeSet::new();
    for x in [u, v] {
        for &w in g.positive_neighbors(x)? {
            edges.insert(EdgeKey::new(x, w));
        }
    }
    for f in edges {
        state.verify_edge(g, f.lo, f.hi, work)?;
    }
    state.refresh_lightness(g, &snap.s);
    Ok(snap)
}

/// Runs the update matching the direction of the (already applied) flip.
pub fn update_after_flip(
    g: &SignedGraph,
    state: &mut AgreementState,
    u: VertexId,
    v: VertexId,
    pruning: Pruning,
    work: &mut Work,
) -> Result<FlipSnapshot> {
    if g.is_positive(u, v) {
        update_negative_to_positive(g, state, u, v, pruning, work)
    } else {
        update_positive_to_negative(g, state, u, v, pruning, work)
    }
}

/// What changed in the sparsified graph around a flip.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChangeSet {
    pub s: BTreeSet<VertexId>,
    /// Vertices of `S` whose lightness changed.
    pub lambda: BTreeSet<VertexId>,
    /// Edges incident to `S` whose sparsified presence changed, plus the
    /// flipped edge itself.
    pub changed_edges: BTreeSet<EdgeKey>,
}

/// Compares pre-flip and post-flip sparsified presence of every positive
/// edge touching `S`. Must run right after the matching update.
pub fn collect_changes(g: &SignedGraph, snap: &FlipSnapshot, state: &AgreementState) -> ChangeSet {
    let lambda: BTreeSet<VertexId> = snap
        .lightness_before
        .iter()
        .filter(|&(&w, &before)| state.is_light(w) != Some(before))
        .map(|(&w, _)| w)
        .collect();
    let flipped = snap.flipped_edge();
    let light_before = |w: VertexId| {
        snap.lightness_before
            .get(&w)
            .copied()
            .unwrap_or_else(|| state.is_light(w).unwrap())
    };
    let present_before = |e: EdgeKey| -> bool {
        if e == flipped && snap.direction == FlipDirection::NegativeToPositive {
            return false;
        }
        let agree = snap
            .agree_before
            .get(&e)
            .copied()
            .or_else(|| state.agree(e.lo, e.hi))
            .unwrap_or(false);
        agree && !(light_before(e.lo) && light_before(e.hi))
    };
    let mut changed_edges = BTreeSet::from([flipped]);
    for &x in &snap.s {
        for &w in g.positive_neighbors(x).unwrap() {
            let e = EdgeKey::new(x, w);
            if e == flipped || changed_edges.contains(&e) {
                continue;
            }
            if present_before(e) != state.edge_present(x, w).unwrap() {
                changed_edges.insert(e);
            }
        }
    }
    ChangeSet {
        s: snap.s.clone(),
        lambda,
        changed_edges,
    }
}
