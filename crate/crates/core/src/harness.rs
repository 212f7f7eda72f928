//! Verification and experiment rig: workload generation, per-step comparison
//! against the offline algorithm, exhaustive optima, flip-delta oracles and
//! the ε-criticality classifier.
//!
//! All randomness comes from ChaCha8 seeded through `seed_from_u64`, so a seed
//! fully determines a workload on every platform.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use num_rational::Ratio;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::baseline::{correlation_clustering_in, CostBreakdown};
use crate::clustering::{canonical_partition, Clustering, Partition};
use crate::engine::{Engine, EngineConfig, Operation, StepReport};
use crate::error::{Error, Result};
use crate::graph::{EdgeKey, Epsilon, Neighborhood, SignedGraph, VertexId};

pub const REPORT_SCHEMA: &str = "dyncc-report/1";
pub const BRUTE_FORCE_LIMIT: usize = 11;

/// The ε values used by the standard corpus.
pub const CORPUS_EPSILONS: [(u64, u64); 6] = [(1, 5), (2, 5), (3, 5), (7, 10), (1, 1), (6, 5)];

/// An exact probability `num/den` in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct Probability {
    num: u64,
    den: u64,
}

impl Probability {
    pub fn new(num: u64, den: u64) -> Result<Self> {
        if den == 0 || num > den {
            return Err(Error::InvalidRatio(format!("{num}/{den}")));
        }
        Ok(Probability { num, den })
    }

    pub fn zero() -> Self {
        Probability { num: 0, den: 1 }
    }

    pub fn one() -> Self {
        Probability { num: 1, den: 1 }
    }

    pub fn as_ratio(&self) -> Ratio<u64> {
        Ratio::new(self.num, self.den)
    }

    /// One Bernoulli draw; exact for every rational value.
    pub fn sample<R: Rng>(&self, rng: &mut R) -> bool {
        rng.random_range(0..self.den) < self.num
    }
}

impl fmt::Display for Probability {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.num, self.den)
    }
}

impl FromStr for Probability {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidRatio(s.to_string());
        let (n, d) = match s.trim().split_once('/') {
            Some((n, d)) => (n.trim(), d.trim()),
            None => (s.trim(), "1"),
        };
        let num = n.parse().map_err(|_| bad())?;
        let den = d.parse().map_err(|_| bad())?;
        Probability::new(num, den).map_err(|_| bad())
    }
}

impl TryFrom<String> for Probability {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<Probability> for String {
    fn from(p: Probability) -> String {
        p.to_string()
    }
}

/// Relative weights of the three operation kinds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct OpMix {
    pub flip: u32,
    pub add: u32,
    pub delete: u32,
}

impl Default for OpMix {
    fn default() -> Self {
        OpMix {
            flip: 8,
            add: 1,
            delete: 1,
        }
    }
}

impl OpMix {
    pub fn flips_only() -> Self {
        OpMix {
            flip: 1,
            add: 0,
            delete: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GeneratorParams {
    pub n: usize,
    pub k: usize,
    pub p: Probability,
    pub q: Probability,
    pub op_count: usize,
    pub op_mix: OpMix,
    pub seed: u64,
}

impl GeneratorParams {
    pub fn validate(&self) -> Result<()> {
        if self.q.as_ratio() > self.p.as_ratio() {
            return Err(Error::InvalidRatio(format!(
                "q = {} exceeds p = {}",
                self.q, self.p
            )));
        }
        let m = self.op_mix;
        if m.flip == 0 && m.add == 0 && m.delete == 0 && self.op_count > 0 {
            return Err(Error::InvalidRatio("operation mix is all zero".into()));
        }
        Ok(())
    }

    /// Planted group of vertex `i` (1-based): contiguous blocks of near-equal size.
    fn group_of(&self, i: usize) -> usize {
        let k = self.k.max(1);
        (i - 1) * k / self.n.max(1)
    }
}

fn graph_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn ops_rng(seed: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(1);
    rng
}

/// Planted-partition graph on vertices `1..=n`: pairs inside a block are
/// positive with probability `p`, pairs across blocks with probability `q`.
pub fn gen_planted(params: &GeneratorParams) -> SignedGraph {
    let mut rng = graph_rng(params.seed);
    let n = params.n as VertexId;
    let mut g = SignedGraph::with_vertices(1..=n);
    for a in 1..=params.n {
        for b in a + 1..=params.n {
            let prob = if params.group_of(a) == params.group_of(b) {
                params.p
            } else {
                params.q
            };
            if prob.sample(&mut rng) {
                g.set_positive(a as VertexId, b as VertexId).unwrap();
            }
        }
    }
    g
}

fn pick<R: Rng, T: Copy>(rng: &mut R, items: impl ExactSizeIterator<Item = T>) -> Option<T> {
    let len = items.len();
    if len == 0 {
        return None;
    }
    let mut items = items;
    items.nth(rng.random_range(0..len))
}

fn pick_vertex<R: Rng>(rng: &mut R, g: &SignedGraph) -> Option<VertexId> {
    let len = g.vertex_count();
    if len == 0 {
        return None;
    }
    g.vertices().nth(rng.random_range(0..len))
}

/// A partner for a flip at `u`: an existing neighbour (to cut), a vertex two
/// hops away (to close a triangle) or a uniform vertex.
fn pick_partner<R: Rng>(rng: &mut R, g: &SignedGraph, u: VertexId) -> Option<VertexId> {
    let nu = g.positive_neighbors(u).unwrap();
    let choice = rng.random_range(0..3u8);
    if choice == 0 && !nu.is_empty() {
        return pick(rng, nu.iter().copied());
    }
    if choice == 1 && !nu.is_empty() {
        let mid = pick(rng, nu.iter().copied()).unwrap();
        let two_hop: Vec<_> = g
            .positive_neighbors(mid)
            .unwrap()
            .iter()
            .copied()
            .filter(|&w| w != u && !nu.contains(&w))
            .collect();
        if let Some(w) = pick(rng, two_hop.into_iter()) {
            return Some(w);
        }
    }
    let others: Vec<_> = g.vertices().filter(|&w| w != u).collect();
    pick(rng, others.into_iter())
}

/// An operation stream of exactly `op_count` operations, each valid when
/// applied in order to `g`.
///
/// A deletion is preceded by flips that remove the victim's positive edges;
/// an addition uses a fresh id and is followed by flips that attach it.
pub fn gen_ops(params: &GeneratorParams, g: &SignedGraph) -> Vec<Operation> {
    let mut rng = ops_rng(params.seed);
    let mut sim = g.clone();
    let mut next_fresh = g.max_vertex().map_or(1, |m| m + 1);
    let mut ops = Vec::with_capacity(params.op_count);
    let mix = params.op_mix;
    let total_weight = (mix.flip + mix.add + mix.delete) as u64;
    if total_weight == 0 {
        return ops;
    }

    let push = |ops: &mut Vec<Operation>, sim: &mut SignedGraph, op: Operation| -> bool {
        if ops.len() >= params.op_count {
            return false;
        }
        match op {
            Operation::FlipSign { u, v } => {
                sim.flip_edge_structural(u, v).unwrap();
            }
            Operation::AddVertex { v } => sim.add_vertex(v).unwrap(),
            Operation::DeleteVertex { v } => sim.delete_vertex(v).unwrap(),
        }
        ops.push(op);
        true
    };

    while ops.len() < params.op_count {
        let r = rng.random_range(0..total_weight);
        let mut kind = if r < mix.flip as u64 {
            0
        } else if r < (mix.flip + mix.add) as u64 {
            1
        } else {
            2
        };
        if kind == 0 && sim.vertex_count() < 2 {
            kind = if mix.add > 0 || sim.is_empty() { 1 } else { 2 };
        }
        if kind == 2 && sim.is_empty() {
            kind = 1;
        }
        match kind {
            0 => {
                let u = pick_vertex(&mut rng, &sim).unwrap();
                let v = pick_partner(&mut rng, &sim, u).unwrap();
                push(&mut ops, &mut sim, Operation::FlipSign { u, v });
            }
            1 => {
                let v = next_fresh;
                next_fresh += 1;
                let anchor = pick_vertex(&mut rng, &sim);
                push(&mut ops, &mut sim, Operation::AddVertex { v });
                if let Some(a) = anchor {
                    let mut targets = vec![a];
                    let na: Vec<_> = sim.positive_neighbors(a).unwrap().iter().copied().collect();
                    let extra = rng.random_range(0..=2usize);
                    for _ in 0..extra {
                        if let Some(w) = pick(&mut rng, na.iter().copied()) {
                            if !targets.contains(&w) {
                                targets.push(w);
                            }
                        }
                    }
                    for w in targets {
                        if !push(&mut ops, &mut sim, Operation::FlipSign { u: v, v: w }) {
                            break;
                        }
                    }
                }
            }
            _ => {
                let x = pick_vertex(&mut rng, &sim).unwrap();
                let nbrs: Vec<_> = sim.positive_neighbors(x).unwrap().iter().copied().collect();
                let mut complete = true;
                for w in nbrs {
                    if !push(&mut ops, &mut sim, Operation::FlipSign { u: x, v: w }) {
                        complete = false;
                        break;
                    }
                }
                if complete {
                    push(&mut ops, &mut sim, Operation::DeleteVertex { v: x });
                }
            }
        }
    }
    ops
}

/// Parameters of corpus workload `seed`: `n ∈ [4, 40]`, ε from
/// [`CORPUS_EPSILONS`], 100 mixed operations.
pub fn standard_workload(seed: u64) -> (GeneratorParams, Epsilon) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(2);
    let n = rng.random_range(4..=40usize);
    let k = rng.random_range(1..=(n / 3).max(1));
    let ps = [(1, 2), (7, 10), (9, 10), (1, 1)];
    let qs = [(0, 1), (1, 20), (1, 10)];
    let (pn, pd) = ps[rng.random_range(0..ps.len())];
    let (qn, qd) = qs[rng.random_range(0..qs.len())];
    let (en, ed) = CORPUS_EPSILONS[rng.random_range(0..CORPUS_EPSILONS.len())];
    let params = GeneratorParams {
        n,
        k,
        p: Probability::new(pn, pd).unwrap(),
        q: Probability::new(qn, qd).unwrap(),
        op_count: 100,
        op_mix: OpMix::default(),
        seed,
    };
    (params, Epsilon::new(en, ed).unwrap())
}

/// How two partitions differ.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PartitionDiff {
    pub online: Partition,
    pub baseline: Partition,
    /// Smallest pair `(a, b)`, `a ≤ b`, on which the partitions disagree.
    /// `a == b` means `a` is covered by only one of them.
    pub first_pair: (VertexId, VertexId),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum StepCheck {
    Match,
    Diff(PartitionDiff),
}

impl StepCheck {
    pub fn is_match(&self) -> bool {
        matches!(self, StepCheck::Match)
    }
}

/// Compares two partitions as sets of sets.
pub fn compare_partitions(online: &Partition, baseline: &Partition) -> StepCheck {
    let online = canonical_partition(online.iter().cloned());
    let baseline = canonical_partition(baseline.iter().cloned());
    if online == baseline {
        return StepCheck::Match;
    }
    let index = |p: &Partition| -> BTreeMap<VertexId, usize> {
        p.iter()
            .enumerate()
            .flat_map(|(i, c)| c.iter().map(move |&v| (v, i)))
            .collect()
    };
    let (io, ib) = (index(&online), index(&baseline));
    let all: BTreeSet<VertexId> = io.keys().chain(ib.keys()).copied().collect();
    let first_pair = all
        .iter()
        .find(|v| io.contains_key(v) != ib.contains_key(v))
        .map(|&v| (v, v))
        .or_else(|| {
            all.iter().find_map(|&a| {
                all.range(a + 1..)
                    .find(|&&b| (io[&a] == io[&b]) != (ib[&a] == ib[&b]))
                    .map(|&b| (a, b))
            })
        })
        .expect("distinct canonical partitions differ somewhere");
    StepCheck::Diff(PartitionDiff {
        online,
        baseline,
        first_pair,
    })
}

/// Compares an online clustering with the offline algorithm on `g`.
pub fn check_step(
    g: &SignedGraph,
    eps: Epsilon,
    mode: Neighborhood,
    online: &Clustering,
) -> StepCheck {
    let baseline = correlation_clustering_in(g, eps, mode, 0);
    compare_partitions(&online.partition(), &baseline.partition())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DivergenceWitness {
    pub t: u64,
    pub op: Operation,
    pub online: Partition,
    pub baseline: Partition,
    pub first_pair: (VertexId, VertexId),
    pub config: EngineConfig,
    /// Workload that reproduces the witness, when it came from the generator.
    pub generator: Option<GeneratorParams>,
}

/// Cost over all vertex pairs, straight from the definition.
pub fn naive_cost(g: &SignedGraph, partition: &Partition) -> CostBreakdown {
    let cluster: BTreeMap<VertexId, usize> = partition
        .iter()
        .enumerate()
        .flat_map(|(i, c)| c.iter().map(move |&v| (v, i)))
        .collect();
    let vs: Vec<_> = g.vertices().collect();
    let (mut cut, mut internal) = (0, 0);
    for (i, &a) in vs.iter().enumerate() {
        for &b in &vs[i + 1..] {
            let same = cluster.get(&a) == cluster.get(&b);
            match (g.is_positive(a, b), same) {
                (true, false) => cut += 1,
                (false, true) => internal += 1,
                _ => {}
            }
        }
    }
    CostBreakdown::new(cut, internal)
}

/// Exhaustive optimum over all set partitions (restricted growth strings).
/// Ties go to the lexicographically smallest canonical partition.
pub fn brute_force_opt(g: &SignedGraph) -> Result<(CostBreakdown, Partition)> {
    let vs: Vec<_> = g.vertices().collect();
    let n = vs.len();
    if n > BRUTE_FORCE_LIMIT {
        return Err(Error::TooLarge(n));
    }
    if n == 0 {
        return Ok((CostBreakdown::default(), Vec::new()));
    }
    let pos: Vec<Vec<bool>> = vs
        .iter()
        .map(|&a| vs.iter().map(|&b| g.is_positive(a, b)).collect())
        .collect();
    let to_partition = |labels: &[usize]| -> Partition {
        let mut blocks: BTreeMap<usize, Vec<VertexId>> = BTreeMap::new();
        for (i, &l) in labels.iter().enumerate() {
            blocks.entry(l).or_default().push(vs[i]);
        }
        canonical_partition(blocks.into_values())
    };
    let cost_of = |labels: &[usize]| -> CostBreakdown {
        let (mut cut, mut internal) = (0, 0);
        for i in 0..n {
            for j in i + 1..n {
                match (pos[i][j], labels[i] == labels[j]) {
                    (true, false) => cut += 1,
                    (false, true) => internal += 1,
                    _ => {}
                }
            }
        }
        CostBreakdown::new(cut, internal)
    };

    let mut labels = vec![0usize; n];
    let mut best = (cost_of(&labels), to_partition(&labels));
    // maxes[i] = max(labels[..i]), used to enumerate restricted growth strings
    let mut maxes = vec![0usize; n];
    loop {
        let mut i = n - 1;
        loop {
            if i == 0 {
                return Ok(best);
            }
            if labels[i] <= maxes[i] {
                labels[i] += 1;
                break;
            }
            labels[i] = 0;
            i -= 1;
        }
        for j in i + 1..n {
            labels[j] = 0;
            maxes[j] = maxes[j - 1].max(labels[j - 1]);
        }
        let c = cost_of(&labels);
        if c.total < best.0.total {
            best = (c, to_partition(&labels));
        } else if c.total == best.0.total {
            let p = to_partition(&labels);
            if p < best.1 {
                best = (c, p);
            }
        }
    }
}

/// Where a vertex sits relative to the flipped edge `{u, v}` before the flip.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DeltaCategory {
    /// `w ∈ N(u) ∩ N(v)`
    A,
    /// `w ∈ N(u) \ N(v)`, `w ≠ v`
    B,
    /// `w ∈ N(v) \ N(u)`, `w ≠ u`
    C,
    Outside,
    Endpoint,
}

/// Direction in which a pair's non-agreement moves.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Trend {
    Decrease,
    Equal,
    Increase,
    /// Non-agreement is undefined before or after (empty neighbourhoods or
    /// the pair is not positive afterwards).
    Undefined,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairPrediction {
    pub pair: EdgeKey,
    /// Predicted change of `|N(a) Δ N(b)|`.
    pub delta: i64,
    pub trend: Trend,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DeltaPrediction {
    pub category: DeltaCategory,
    pub negative_to_positive: bool,
    /// Every positive pair at `w` before or after the flip.
    pub pairs: Vec<PairPrediction>,
}

/// Predicted changes for the pairs at `w` when `{u, v}` is flipped in
/// `g_pre` (open neighbourhoods).
pub fn delta_category(
    g_pre: &SignedGraph,
    u: VertexId,
    v: VertexId,
    w: VertexId,
) -> Result<DeltaPrediction> {
    if u == v {
        return Err(Error::SelfLoop(u));
    }
    let nu = g_pre.positive_neighbors(u)?;
    let nv = g_pre.positive_neighbors(v)?;
    let nw = g_pre.positive_neighbors(w)?;
    let to_pos = !nu.contains(&v);
    let category = if w == u || w == v {
        DeltaCategory::Endpoint
    } else {
        match (nu.contains(&w), nv.contains(&w)) {
            (true, true) => DeltaCategory::A,
            (true, false) => DeltaCategory::B,
            (false, true) => DeltaCategory::C,
            (false, false) => DeltaCategory::Outside,
        }
    };
    let mut partners: BTreeSet<VertexId> = nw.clone();
    if w == u {
        partners.insert(v);
    } else if w == v {
        partners.insert(u);
    }
    let pairs = partners
        .into_iter()
        .map(|y| predict_pair(g_pre, u, v, to_pos, w, y))
        .collect();
    Ok(DeltaPrediction {
        category,
        negative_to_positive: to_pos,
        pairs,
    })
}

/// Compares `n1/d1` with `n0/d0` for positive denominators.
fn ratio_trend(n0: u64, d0: u64, n1: u64, d1: u64) -> Trend {
    match ((n1 as u128) * (d0 as u128)).cmp(&((n0 as u128) * (d1 as u128))) {
        std::cmp::Ordering::Less => Trend::Decrease,
        std::cmp::Ordering::Equal => Trend::Equal,
        std::cmp::Ordering::Greater => Trend::Increase,
    }
}

fn predict_pair(
    g: &SignedGraph,
    u: VertexId,
    v: VertexId,
    to_pos: bool,
    a: VertexId,
    b: VertexId,
) -> PairPrediction {
    let pair = EdgeKey::new(a, b);
    let deg = |x| g.positive_degree(x).unwrap();
    let sd = g.sym_diff_size(a, b).unwrap() as u64;
    if pair == EdgeKey::new(u, v) {
        let m = deg(u).max(deg(v)) as u64;
        if !to_pos {
            return PairPrediction {
                pair,
                delta: -2,
                trend: Trend::Undefined,
            };
        }
        // numerator +2, denominator +1: compare Δ with 2·max
        let trend = if m == 0 {
            Trend::Undefined
        } else {
            match sd.cmp(&(2 * m)) {
                std::cmp::Ordering::Less => Trend::Increase,
                std::cmp::Ordering::Equal => Trend::Equal,
                std::cmp::Ordering::Greater => Trend::Decrease,
            }
        };
        return PairPrediction {
            pair,
            delta: 2,
            trend,
        };
    }
    let (x, w) = if a == u || a == v {
        (a, b)
    } else if b == u || b == v {
        (b, a)
    } else {
        return PairPrediction {
            pair,
            delta: 0,
            trend: Trend::Equal,
        };
    };
    let xbar = if x == u { v } else { u };
    let shared = g.is_positive(xbar, w);
    let (dx, dw) = (deg(x) as u64, deg(w) as u64);
    let (delta, trend) = if to_pos {
        if shared {
            // w ∈ A: numerator −1, denominator never shrinks
            (-1, Trend::Decrease)
        } else if dx < dw {
            (1, Trend::Increase)
        } else {
            // both parts grow by one: compare Δ with deg(x)
            (1, ratio_trend(sd, dx, sd + 1, dx + 1))
        }
    } else if shared {
        (1, Trend::Increase)
    } else if dx <= dw {
        (-1, Trend::Decrease)
    } else {
        (-1, ratio_trend(sd, dx, sd - 1, dx - 1))
    };
    PairPrediction { pair, delta, trend }
}

/// The agreement status a pair must keep, when its trend forces one: a
/// non-increasing value keeps an agreeing pair agreeing and a non-decreasing
/// value keeps a non-agreeing pair non-agreeing. `None` for the open rows.
pub fn table_row_prediction(agree_before: bool, trend: Trend) -> Option<bool> {
    match (agree_before, trend) {
        (true, Trend::Decrease | Trend::Equal) => Some(true),
        (false, Trend::Increase | Trend::Equal) => Some(false),
        _ => None,
    }
}

/// An edge or vertex whose removal is being classified.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Element {
    Edge(VertexId, VertexId),
    Vertex(VertexId),
}

/// True iff removing `element` changes the partition of the sparsified graph.
///
/// Removing an edge turns it negative; removing a vertex first turns all its
/// edges negative and then deletes it, and the vertex is ignored in the
/// comparison.
pub fn is_epsilon_critical(g: &SignedGraph, eps: Epsilon, element: Element) -> Result<bool> {
    let before = correlation_clustering_in(g, eps, Neighborhood::Open, 0).partition();
    let mut h = g.clone();
    match element {
        Element::Edge(u, v) => {
            h.sign(u, v)?;
            if !h.is_positive(u, v) {
                return Ok(false);
            }
            h.flip_edge_structural(u, v)?;
            let after = correlation_clustering_in(&h, eps, Neighborhood::Open, 0).partition();
            Ok(before != after)
        }
        Element::Vertex(x) => {
            let nbrs: Vec<_> = h.positive_neighbors(x)?.iter().copied().collect();
            for w in nbrs {
                h.flip_edge_structural(x, w)?;
            }
            h.delete_vertex(x)?;
            let after = correlation_clustering_in(&h, eps, Neighborhood::Open, 0).partition();
            let before = canonical_partition(
                before
                    .into_iter()
                    .map(|c| c.into_iter().filter(|&y| y != x).collect::<Vec<_>>())
                    .filter(|c| !c.is_empty()),
            );
            Ok(before != after)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub engine: EngineConfig,
    pub generator: Option<GeneratorParams>,
    pub check: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct InitialStats {
    pub vertices: usize,
    pub positive_edges: usize,
    pub clusters: usize,
    /// Non-agreement evaluations of the initial offline run (one per edge).
    pub na_evaluations: u64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReportTotals {
    pub steps: u64,
    pub applied: u64,
    pub rejected: u64,
    pub na_evaluations: u64,
    pub verify_calls: u64,
    pub structure_touches: u64,
    pub checked: u64,
    pub divergences: u64,
    pub elapsed_ns: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub schema: String,
    pub config: ExperimentConfig,
    pub initial: InitialStats,
    pub steps: Vec<StepReport>,
    pub totals: ReportTotals,
    pub witnesses: Vec<DivergenceWitness>,
}

/// Runs `ops` on an engine over `g0`, optionally checking every step.
pub fn run_workload(
    config: ExperimentConfig,
    g0: SignedGraph,
    ops: &[Operation],
) -> ExperimentReport {
    let initial = InitialStats {
        vertices: g0.vertex_count(),
        positive_edges: g0.positive_edge_count(),
        clusters: 0,
        na_evaluations: g0.positive_edge_count() as u64,
    };
    let mut engine = Engine::new(g0, config.engine);
    let initial = InitialStats {
        clusters: engine.clustering().len(),
        ..initial
    };
    let engine_cfg = *engine.config();
    let mut steps = Vec::with_capacity(ops.len());
    let mut witnesses = Vec::new();
    let mut totals = ReportTotals::default();
    for &op in ops {
        let mut report = engine.apply(op);
        if config.check {
            totals.checked += 1;
            let check = check_step(
                engine.graph(),
                engine_cfg.eps,
                engine_cfg.neighborhood,
                engine.clustering(),
            );
            report.baseline_match = Some(check.is_match());
            if let StepCheck::Diff(d) = check {
                totals.divergences += 1;
                witnesses.push(DivergenceWitness {
                    t: report.t,
                    op,
                    online: d.online,
                    baseline: d.baseline,
                    first_pair: d.first_pair,
                    config: engine_cfg,
                    generator: config.generator,
                });
            }
        }
        totals.elapsed_ns += report.elapsed_ns;
        steps.push(report);
    }
    let c = engine.counters();
    totals.steps = c.steps;
    totals.applied = c.applied;
    totals.rejected = c.rejected;
    totals.na_evaluations = c.na_evaluations;
    totals.verify_calls = c.verify_calls;
    totals.structure_touches = c.structure_touches;
    ExperimentReport {
        schema: REPORT_SCHEMA.to_string(),
        config: ExperimentConfig {
            engine: engine_cfg,
            ..config
        },
        initial,
        steps,
        totals,
        witnesses,
    }
}

/// Generates the workload described by `config.generator` and runs it.
pub fn run_experiment(config: ExperimentConfig) -> Result<ExperimentReport> {
    let params = config
        .generator
        .ok_or_else(|| Error::InvalidRatio("experiment needs generator parameters".into()))?;
    params.validate()?;
    let g0 = gen_planted(&params);
    let ops = gen_ops(&params, &g0);
    Ok(run_workload(config, g0, &ops))
}

/// Re-runs the workload behind `witness` and returns the divergence found at
/// the same step, if any.
pub fn replay(witness: &DivergenceWitness) -> Option<DivergenceWitness> {
    let config = ExperimentConfig {
        engine: witness.config,
        generator: witness.generator,
        check: true,
    };
    run_experiment(config)
        .ok()?
        .witnesses
        .into_iter()
        .find(|w| w.t == witness.t)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::fixtures::*;

    fn params(n: usize, k: usize, p: &str, q: &str, ops: usize, seed: u64) -> GeneratorParams {
        GeneratorParams {
            n,
            k,
            p: p.parse().unwrap(),
            q: q.parse().unwrap(),
            op_count: ops,
            op_mix: OpMix::default(),
            seed,
        }
    }

    fn eps(n: u64, d: u64) -> Epsilon {
        Epsilon::new(n, d).unwrap()
    }

    #[test]
    fn probability_parsing() {
        assert_eq!(
            "3/10".parse::<Probability>().unwrap(),
            Probability::new(3, 10).unwrap()
        );
        assert_eq!("1".parse::<Probability>().unwrap(), Probability::one());
        assert!("3/2".parse::<Probability>().is_err());
        assert!("1/0".parse::<Probability>().is_err());
        assert!("x".parse::<Probability>().is_err());
    }

    #[test]
    fn planted_degenerate_probabilities() {
        assert_eq!(
            gen_planted(&params(6, 2, "1/1", "0/1", 0, 1)),
            two_triangles()
        );
        let g = gen_planted(&params(6, 2, "0/1", "0/1", 0, 1));
        assert_eq!(g.positive_edge_count(), 0);
        let c = correlation_clustering_in(&g, eps(7, 10), Neighborhood::Open, 0);
        assert_eq!(c.len(), 6);
    }

    #[test]
    fn generation_is_deterministic() {
        let p = params(20, 3, "7/10", "1/10", 80, 42);
        let g1 = gen_planted(&p);
        let g2 = gen_planted(&p);
        assert_eq!(g1, g2);
        assert_eq!(gen_ops(&p, &g1), gen_ops(&p, &g2));
        let other = params(20, 3, "7/10", "1/10", 80, 43);
        assert_ne!(gen_ops(&p, &g1), gen_ops(&other, &gen_planted(&other)));
    }

    #[test]
    fn generated_ops_are_valid_and_exact_in_count() {
        for seed in 0..30 {
            let p = params(10, 2, "9/10", "1/10", 60, seed);
            let mut g = gen_planted(&p);
            let ops = gen_ops(&p, &g);
            assert_eq!(ops.len(), 60);
            let mut seen: BTreeSet<VertexId> = g.vertices().collect();
            for op in ops {
                match op {
                    Operation::FlipSign { u, v } => {
                        g.flip_edge_structural(u, v).unwrap();
                    }
                    Operation::AddVertex { v } => {
                        assert!(seen.insert(v), "fresh ids only");
                        g.add_vertex(v).unwrap();
                    }
                    Operation::DeleteVertex { v } => g.delete_vertex(v).unwrap(),
                }
            }
        }
    }

    #[test]
    fn check_step_cases() {
        let mut e = Engine::new(k4_minus(), EngineConfig::new(eps(7, 10)));
        e.apply(Operation::FlipSign { u: 1, v: 2 });
        assert_eq!(
            check_step(e.graph(), eps(7, 10), Neighborhood::Open, e.clustering()),
            StepCheck::Match
        );

        let relabelled = crate::baseline::connected_components(&k4(), |_, _| true, 99);
        assert!(check_step(&k4(), eps(7, 10), Neighborhood::Open, &relabelled).is_match());

        let mut missing = Clustering::starting_at(0);
        missing.insert_fresh(BTreeSet::from([1, 2, 3]));
        match check_step(&k4(), eps(7, 10), Neighborhood::Open, &missing) {
            StepCheck::Diff(d) => assert_eq!(d.first_pair, (4, 4)),
            StepCheck::Match => panic!("expected a diff"),
        }
    }

    #[test]
    fn compare_is_symmetric() {
        let a = vec![vec![1, 2], vec![3]];
        let b = vec![vec![1], vec![2, 3]];
        let (StepCheck::Diff(x), StepCheck::Diff(y)) =
            (compare_partitions(&a, &b), compare_partitions(&b, &a))
        else {
            panic!("expected diffs");
        };
        assert_eq!(x.first_pair, (1, 2));
        assert_eq!(x.first_pair, y.first_pair);
        assert!(compare_partitions(&a, &a).is_match());
    }

    #[test]
    fn brute_force_fixtures() {
        let (c, p) = brute_force_opt(&p3()).unwrap();
        assert_eq!(c.total, 1);
        // three partitions cost 1; the canonical order puts [[1], [2, 3]] first
        assert_eq!(p, vec![vec![1], vec![2, 3]]);
        let (c, p) = brute_force_opt(&k4()).unwrap();
        assert_eq!(c.total, 0);
        assert_eq!(p, vec![vec![1, 2, 3, 4]]);
        let (c, p) = brute_force_opt(&two_triangles()).unwrap();
        assert_eq!(c.total, 0);
        assert_eq!(p, vec![vec![1, 2, 3], vec![4, 5, 6]]);
        assert_eq!(
            brute_force_opt(&SignedGraph::with_vertices(0..12)),
            Err(Error::TooLarge(12))
        );
    }

    #[test]
    fn brute_force_enumerates_bell_many() {
        // an all-negative graph: every singleton split costs 0, the first in
        // canonical order is all singletons
        let g = SignedGraph::with_vertices(1..=5);
        let (c, p) = brute_force_opt(&g).unwrap();
        assert_eq!(c.total, 0);
        assert_eq!(p.len(), 5);
    }

    #[test]
    fn naive_cost_matches_fixture() {
        assert_eq!(
            naive_cost(&p3(), &vec![vec![1, 2], vec![3]]),
            CostBreakdown::new(1, 0)
        );
        assert_eq!(
            naive_cost(&k4_minus(), &vec![vec![1, 2, 3, 4]]),
            CostBreakdown::new(0, 1)
        );
    }

    #[test]
    fn delta_predictions_on_k4_minus() {
        let g = k4_minus();
        let d = delta_category(&g, 1, 2, 3).unwrap();
        assert_eq!(d.category, DeltaCategory::A);
        assert!(d.negative_to_positive);
        let p13 = d
            .pairs
            .iter()
            .find(|p| p.pair == EdgeKey::new(1, 3))
            .unwrap();
        assert_eq!(p13.delta, -1);
        assert_eq!(g.sym_diff_size(1, 3).unwrap(), 3);
        let d = delta_category(&g, 1, 2, 1).unwrap();
        assert_eq!(d.category, DeltaCategory::Endpoint);
        let p12 = d
            .pairs
            .iter()
            .find(|p| p.pair == EdgeKey::new(1, 2))
            .unwrap();
        assert_eq!(p12.delta, 2);
        assert_eq!(g.sym_diff_size(1, 2).unwrap(), 0);
    }

    #[test]
    fn outside_vertex_is_unaffected() {
        let g = SignedGraph::from_positive_edges(1..=5, [(1, 3), (4, 5)]).unwrap();
        let d = delta_category(&g, 1, 2, 4).unwrap();
        assert_eq!(d.category, DeltaCategory::Outside);
        assert!(d
            .pairs
            .iter()
            .all(|p| p.delta == 0 && p.trend == Trend::Equal));
    }

    #[test]
    fn table_rows() {
        assert_eq!(table_row_prediction(true, Trend::Decrease), Some(true));
        assert_eq!(table_row_prediction(false, Trend::Increase), Some(false));
        assert_eq!(table_row_prediction(true, Trend::Increase), None);
        assert_eq!(table_row_prediction(false, Trend::Decrease), None);
    }

    #[test]
    fn critical_elements() {
        assert_eq!(
            is_epsilon_critical(&k4(), eps(7, 10), Element::Edge(1, 2)),
            Ok(true)
        );
        assert_eq!(
            is_epsilon_critical(&p3(), eps(7, 10), Element::Edge(1, 2)),
            Ok(false)
        );
        let g = SignedGraph::from_positive_edges(1..=5, [(1, 2)]).unwrap();
        assert_eq!(
            is_epsilon_critical(&g, eps(7, 10), Element::Vertex(5)),
            Ok(false)
        );
        assert!(is_epsilon_critical(&g, eps(7, 10), Element::Vertex(9)).is_err());
    }

    #[test]
    fn zero_op_experiment_reports_initial_stats_only() {
        let cfg = ExperimentConfig {
            engine: EngineConfig::new(eps(7, 10)),
            generator: Some(params(8, 2, "1/1", "0/1", 0, 3)),
            check: true,
        };
        let r = run_experiment(cfg).unwrap();
        assert!(r.steps.is_empty());
        assert_eq!(r.initial.clusters, 2);
        assert_eq!(r.initial.positive_edges, 12);
        assert_eq!(r.totals, ReportTotals::default());
    }

    #[test]
    fn small_corpus_has_no_witnesses() {
        for seed in 0..20 {
            let (p, e) = standard_workload(seed);
            let cfg = ExperimentConfig {
                engine: EngineConfig::new(e),
                generator: Some(p),
                check: true,
            };
            let r = run_experiment(cfg).unwrap();
            assert!(
                r.witnesses.is_empty(),
                "seed {seed}: {:?}",
                r.witnesses.first()
            );
            assert_eq!(r.steps.len(), 100);
        }
    }
}
