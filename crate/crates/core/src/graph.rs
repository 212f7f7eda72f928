//! Complete signed graphs stored through their positive part.
//!
//! Only positive adjacency is materialized. Any two distinct present vertices
//! that are not positively adjacent are joined by a negative edge.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use num_rational::Ratio;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type VertexId = u64;

/// Unordered vertex pair, stored with `lo < hi`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct EdgeKey {
    pub lo: VertexId,
    pub hi: VertexId,
}

impl EdgeKey {
    pub fn new(a: VertexId, b: VertexId) -> Self {
        if a <= b {
            EdgeKey { lo: a, hi: b }
        } else {
            EdgeKey { lo: b, hi: a }
        }
    }

    pub fn contains(&self, v: VertexId) -> bool {
        self.lo == v || self.hi == v
    }

    pub fn other(&self, v: VertexId) -> VertexId {
        if self.lo == v {
            self.hi
        } else {
            self.lo
        }
    }
}

impl fmt::Display for EdgeKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{{}, {}}}", self.lo, self.hi)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Sign {
    Positive,
    Negative,
}

impl fmt::Display for Sign {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Sign::Positive => f.write_str("+"),
            Sign::Negative => f.write_str("-"),
        }
    }
}

/// Whether a vertex counts as a member of its own neighborhood.
///
/// Every locality argument used by the incremental update assumes open
/// neighborhoods; the closed variant is only served by full recomputation.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Neighborhood {
    #[default]
    Open,
    Closed,
}

impl FromStr for Neighborhood {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "open" => Ok(Neighborhood::Open),
            "closed" => Ok(Neighborhood::Closed),
            other => Err(format!(
                "unknown neighborhood mode '{other}' (expected open|closed)"
            )),
        }
    }
}

impl fmt::Display for Neighborhood {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Neighborhood::Open => f.write_str("open"),
            Neighborhood::Closed => f.write_str("closed"),
        }
    }
}

/// The agreement threshold, kept as an exact rational `num/den`.
///
/// All threshold tests cross-multiply in `u128`, so no comparison ever
/// rounds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct Epsilon {
    num: u64,
    den: u64,
}

impl Epsilon {
    pub fn new(num: u64, den: u64) -> Result<Self> {
        if num == 0 || den == 0 {
            return Err(Error::InvalidEpsilon(format!(
                "{num}/{den} must have positive numerator and denominator"
            )));
        }
        Ok(Epsilon { num, den })
    }

    pub fn num(&self) -> u64 {
        self.num
    }

    pub fn den(&self) -> u64 {
        self.den
    }

    /// `numer / denom < eps`. `denom` must be non-zero.
    pub fn exceeds(&self, numer: u64, denom: u64) -> bool {
        debug_assert!(denom > 0);
        (numer as u128) * (self.den as u128) < (self.num as u128) * (denom as u128)
    }

    pub fn exceeds_ratio(&self, r: Ratio<u64>) -> bool {
        self.exceeds(*r.numer(), *r.denom())
    }

    pub fn as_ratio(&self) -> Ratio<u64> {
        Ratio::new(self.num, self.den)
    }
}

impl FromStr for Epsilon {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let (n, d) = match s.split_once('/') {
            Some((n, d)) => (n.trim(), d.trim()),
            None => (s, "1"),
        };
        let num = n
            .parse::<u64>()
            .map_err(|_| Error::InvalidEpsilon(format!("'{s}' is not of the form P/Q")))?;
        let den = d
            .parse::<u64>()
            .map_err(|_| Error::InvalidEpsilon(format!("'{s}' is not of the form P/Q")))?;
        Epsilon::new(num, den)
    }
}

impl TryFrom<String> for Epsilon {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<Epsilon> for String {
    fn from(e: Epsilon) -> String {
        e.to_string()
    }
}

impl fmt::Display for Epsilon {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.num, self.den)
    }
}

/// Complete signed graph. Vertices are the keys of the positive adjacency map.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SignedGraph {
    adj: BTreeMap<VertexId, BTreeSet<VertexId>>,
}

impl SignedGraph {
    pub fn new() -> Self {
        Self::default()
    }

    /// Graph on `vertices` with every edge negative.
    pub fn with_vertices(vertices: impl IntoIterator<Item = VertexId>) -> Self {
        SignedGraph {
            adj: vertices.into_iter().map(|v| (v, BTreeSet::new())).collect(),
        }
    }

    /// Builds a graph from a vertex list and a list of positive edges.
    pub fn from_positive_edges(
        vertices: impl IntoIterator<Item = VertexId>,
        edges: impl IntoIterator<Item = (VertexId, VertexId)>,
    ) -> Result<Self> {
        let mut g = Self::with_vertices(vertices);
        for (u, v) in edges {
            g.set_positive(u, v)?;
        }
        Ok(g)
    }

    pub fn contains_vertex(&self, v: VertexId) -> bool {
        self.adj.contains_key(&v)
    }

    pub fn vertex_count(&self) -> usize {
        self.adj.len()
    }

    pub fn is_empty(&self) -> bool {
        self.adj.is_empty()
    }

    /// Vertices in ascending id order.
    pub fn vertices(&self) -> impl Iterator<Item = VertexId> + '_ {
        self.adj.keys().copied()
    }

    pub fn max_vertex(&self) -> Option<VertexId> {
        self.adj.keys().next_back().copied()
    }

    pub fn positive_edge_count(&self) -> usize {
        self.adj.values().map(BTreeSet::len).sum::<usize>() / 2
    }

    /// Positive edges as `(lo, hi)` in lexicographic order.
    pub fn positive_edges(&self) -> impl Iterator<Item = EdgeKey> + '_ {
        self.adj.iter().flat_map(|(&u, nbrs)| {
            nbrs.range((u + 1)..)
                .map(move |&v| EdgeKey { lo: u, hi: v })
        })
    }

    pub fn add_vertex(&mut self, v: VertexId) -> Result<()> {
        if self.adj.contains_key(&v) {
            return Err(Error::DuplicateVertex(v));
        }
        self.adj.insert(v, BTreeSet::new());
        Ok(())
    }

    pub fn delete_vertex(&mut self, v: VertexId) -> Result<()> {
        let nbrs = self.adj.get(&v).ok_or(Error::VertexNotFound(v))?;
        if !nbrs.is_empty() {
            return Err(Error::HasPositiveEdges(v));
        }
        self.adj.remove(&v);
        Ok(())
    }

    fn check_pair(&self, u: VertexId, v: VertexId) -> Result<()> {
        if u == v {
            return Err(Error::SelfLoop(u));
        }
        for x in [u, v] {
            if !self.adj.contains_key(&x) {
                return Err(Error::VertexNotFound(x));
            }
        }
        Ok(())
    }

    pub fn sign(&self, u: VertexId, v: VertexId) -> Result<Sign> {
        self.check_pair(u, v)?;
        Ok(if self.adj[&u].contains(&v) {
            Sign::Positive
        } else {
            Sign::Negative
        })
    }

    /// True when `u` and `v` are both present and joined by a positive edge.
    pub fn is_positive(&self, u: VertexId, v: VertexId) -> bool {
        self.adj.get(&u).is_some_and(|n| n.contains(&v))
    }

    /// Makes `{u, v}` positive. Returns whether it was negative before.
    pub fn set_positive(&mut self, u: VertexId, v: VertexId) -> Result<bool> {
        self.check_pair(u, v)?;
        let fresh = self.adj.get_mut(&u).unwrap().insert(v);
        self.adj.get_mut(&v).unwrap().insert(u);
        Ok(fresh)
    }

    /// Toggles the sign of `{u, v}` and returns the sign it had before.
    pub fn flip_edge_structural(&mut self, u: VertexId, v: VertexId) -> Result<Sign> {
        self.check_pair(u, v)?;
        let nu = self.adj.get_mut(&u).unwrap();
        if nu.remove(&v) {
            self.adj.get_mut(&v).unwrap().remove(&u);
            Ok(Sign::Positive)
        } else {
            nu.insert(v);
            self.adj.get_mut(&v).unwrap().insert(u);
            Ok(Sign::Negative)
        }
    }

    pub fn positive_neighbors(&self, v: VertexId) -> Result<&BTreeSet<VertexId>> {
        self.adj.get(&v).ok_or(Error::VertexNotFound(v))
    }

    pub fn positive_degree(&self, v: VertexId) -> Result<usize> {
        self.positive_neighbors(v).map(BTreeSet::len)
    }

    /// `|N(u) ∩ N(v)|` over open positive neighborhoods.
    pub fn common_neighbors(&self, u: VertexId, v: VertexId) -> Result<usize> {
        let nu = self.positive_neighbors(u)?;
        let nv = self.positive_neighbors(v)?;
        Ok(intersection_size(nu, nv))
    }

    /// `|N(u) Δ N(v)|` over open positive neighborhoods.
    pub fn sym_diff_size(&self, u: VertexId, v: VertexId) -> Result<usize> {
        self.sym_diff_size_in(u, v, Neighborhood::Open)
    }

    pub fn sym_diff_size_in(&self, u: VertexId, v: VertexId, mode: Neighborhood) -> Result<usize> {
        let nu = self.positive_neighbors(u)?;
        let nv = self.positive_neighbors(v)?;
        if u == v {
            return Ok(0);
        }
        let common = intersection_size(nu, nv);
        Ok(match mode {
            Neighborhood::Open => nu.len() + nv.len() - 2 * common,
            Neighborhood::Closed => {
                // N[x] = N(x) ∪ {x}; u ∈ N[v] and v ∈ N[u] exactly when adjacent.
                let adjacent = usize::from(nu.contains(&v));
                let common_closed = common + 2 * adjacent;
                (nu.len() + 1) + (nv.len() + 1) - 2 * common_closed
            }
        })
    }

    /// Size of the neighborhood of `v` under `mode`.
    pub fn neighborhood_size(&self, v: VertexId, mode: Neighborhood) -> Result<usize> {
        let d = self.positive_degree(v)?;
        Ok(match mode {
            Neighborhood::Open => d,
            Neighborhood::Closed => d + 1,
        })
    }

    /// `|N(u) Δ N(v)| / max(|N(u)|, |N(v)|)`, defined for positive edges only.
    pub fn non_agreement(&self, u: VertexId, v: VertexId) -> Result<Ratio<u64>> {
        self.non_agreement_in(u, v, Neighborhood::Open)
    }

    pub fn non_agreement_in(
        &self,
        u: VertexId,
        v: VertexId,
        mode: Neighborhood,
    ) -> Result<Ratio<u64>> {
        if !self.is_positive(u, v) {
            return Err(Error::NotPositiveAdjacent(u, v));
        }
        let (numer, denom) = self.non_agreement_parts(u, v, mode)?;
        Ok(Ratio::new(numer, denom))
    }

    /// Unreduced numerator and denominator of the non-agreement of `{u, v}`.
    pub(crate) fn non_agreement_parts(
        &self,
        u: VertexId,
        v: VertexId,
        mode: Neighborhood,
    ) -> Result<(u64, u64)> {
        let numer = self.sym_diff_size_in(u, v, mode)? as u64;
        let denom = self
            .neighborhood_size(u, mode)?
            .max(self.neighborhood_size(v, mode)?) as u64;
        Ok((numer, denom))
    }

    /// Full-scan check of symmetry, irreflexivity and closure.
    pub fn check_invariants(&self) -> std::result::Result<(), String> {
        for (&u, nbrs) in &self.adj {
            for &v in nbrs {
                if v == u {
                    return Err(format!("vertex {u} is adjacent to itself"));
                }
                match self.adj.get(&v) {
                    None => return Err(format!("neighbor {v} of {u} is not a vertex")),
                    Some(back) if !back.contains(&u) => {
                        return Err(format!("edge {{{u}, {v}}} is not symmetric"))
                    }
                    _ => {}
                }
            }
        }
        Ok(())
    }
}

pub(crate) fn intersection_size(a: &BTreeSet<VertexId>, b: &BTreeSet<VertexId>) -> usize {
    let (small, large) = if a.len() <= b.len() { (a, b) } else { (b, a) };
    small.iter().filter(|x| large.contains(x)).count()
}

/// Small graphs shared by unit and integration tests.
pub mod fixtures {
    use super::SignedGraph;

    /// Path 1 - 2 - 3.
    pub fn p3() -> SignedGraph {
        SignedGraph::from_positive_edges([1, 2, 3], [(1, 2), (2, 3)]).unwrap()
    }

    /// All-positive K4 on 1..=4.
    pub fn k4() -> SignedGraph {
        SignedGraph::from_positive_edges(
            [1, 2, 3, 4],
            [(1, 2), (1, 3), (1, 4), (2, 3), (2, 4), (3, 4)],
        )
        .unwrap()
    }

    /// K4 with `{1, 2}` negative.
    pub fn k4_minus() -> SignedGraph {
        SignedGraph::from_positive_edges([1, 2, 3, 4], [(1, 3), (1, 4), (2, 3), (2, 4), (3, 4)])
            .unwrap()
    }

    pub fn empty() -> SignedGraph {
        SignedGraph::new()
    }

    /// Two disjoint positive triangles {1,2,3} and {4,5,6}.
    pub fn two_triangles() -> SignedGraph {
        SignedGraph::from_positive_edges(1..=6, [(1, 2), (1, 3), (2, 3), (4, 5), (4, 6), (5, 6)])
            .unwrap()
    }
}

#[cfg(test)]
mod tests {
    use super::fixtures::*;
    use super::*;

    fn set(xs: &[VertexId]) -> BTreeSet<VertexId> {
        xs.iter().copied().collect()
    }

    #[test]
    fn add_vertex_cases() {
        let mut g = empty();
        g.add_vertex(1).unwrap();
        assert_eq!(g.vertices().collect::<Vec<_>>(), vec![1]);
        assert!(g.positive_neighbors(1).unwrap().is_empty());

        let mut g = p3();
        g.add_vertex(4).unwrap();
        assert!(g.positive_neighbors(4).unwrap().is_empty());
        assert_eq!(g.positive_neighbors(2).unwrap(), &set(&[1, 3]));

        let mut g = p3();
        assert_eq!(g.add_vertex(2), Err(Error::DuplicateVertex(2)));
    }

    #[test]
    fn delete_vertex_cases() {
        let mut g = p3();
        g.add_vertex(4).unwrap();
        g.delete_vertex(4).unwrap();
        assert_eq!(g, p3());

        let mut g = p3();
        assert_eq!(g.delete_vertex(3), Err(Error::HasPositiveEdges(3)));
        assert_eq!(g.delete_vertex(9), Err(Error::VertexNotFound(9)));
        assert_eq!(g, p3());
    }

    #[test]
    fn structural_flip_cases() {
        let mut g = p3();
        assert_eq!(g.flip_edge_structural(1, 3), Ok(Sign::Negative));
        assert_eq!(g.positive_neighbors(1).unwrap(), &set(&[2, 3]));

        let mut g = p3();
        assert_eq!(g.flip_edge_structural(1, 2), Ok(Sign::Positive));
        assert!(g.positive_neighbors(1).unwrap().is_empty());

        let mut g = p3();
        assert_eq!(g.flip_edge_structural(1, 1), Err(Error::SelfLoop(1)));
        assert_eq!(g.flip_edge_structural(1, 7), Err(Error::VertexNotFound(7)));
    }

    #[test]
    fn neighbors_and_degrees() {
        let g = p3();
        assert_eq!(g.positive_neighbors(2).unwrap(), &set(&[1, 3]));
        assert_eq!(g.positive_degree(2), Ok(2));
        let k4 = k4();
        for v in 1..=4 {
            assert_eq!(k4.positive_degree(v), Ok(3));
        }
        assert_eq!(k4_minus().positive_neighbors(1).unwrap(), &set(&[3, 4]));
        assert_eq!(g.positive_degree(5), Err(Error::VertexNotFound(5)));
    }

    #[test]
    fn sym_diff_sizes() {
        assert_eq!(k4().sym_diff_size(1, 2), Ok(2));
        assert_eq!(k4_minus().sym_diff_size(1, 3), Ok(3));
        assert_eq!(k4_minus().sym_diff_size(1, 2), Ok(0));
    }

    #[test]
    fn closed_sym_diff_matches_set_definition() {
        let g = k4_minus();
        for u in 1..=4 {
            for v in 1..=4 {
                let mut nu = g.positive_neighbors(u).unwrap().clone();
                nu.insert(u);
                let mut nv = g.positive_neighbors(v).unwrap().clone();
                nv.insert(v);
                let expect = nu.symmetric_difference(&nv).count();
                assert_eq!(g.sym_diff_size_in(u, v, Neighborhood::Closed), Ok(expect));
            }
        }
    }

    #[test]
    fn non_agreement_values() {
        assert_eq!(p3().non_agreement(1, 2), Ok(Ratio::new(3, 2)));
        assert_eq!(k4().non_agreement(1, 3), Ok(Ratio::new(2, 3)));
        assert_eq!(k4_minus().non_agreement(3, 4), Ok(Ratio::new(2, 3)));
        assert_eq!(k4_minus().non_agreement(1, 3), Ok(Ratio::from_integer(1)));
        assert_eq!(
            k4_minus().non_agreement(1, 2),
            Err(Error::NotPositiveAdjacent(1, 2))
        );
    }

    #[test]
    fn epsilon_comparison_is_strict() {
        let eps = Epsilon::new(2, 3).unwrap();
        assert!(!eps.exceeds(2, 3));
        assert!(!eps.exceeds(4, 6));
        assert!(eps.exceeds(1, 2));
        assert!(Epsilon::new(7, 10).unwrap().exceeds(2, 3));
        assert!(Epsilon::new(0, 3).is_err());
        assert!(Epsilon::new(3, 0).is_err());
        assert_eq!(
            "7/10".parse::<Epsilon>().unwrap(),
            Epsilon::new(7, 10).unwrap()
        );
        assert_eq!("2".parse::<Epsilon>().unwrap(), Epsilon::new(2, 1).unwrap());
        assert!("x/2".parse::<Epsilon>().is_err());
        assert!("-1/2".parse::<Epsilon>().is_err());
    }

    #[test]
    fn positive_edges_listed_once() {
        let edges: Vec<_> = p3().positive_edges().map(|e| (e.lo, e.hi)).collect();
        assert_eq!(edges, vec![(1, 2), (2, 3)]);
        assert_eq!(k4().positive_edge_count(), 6);
    }
}
