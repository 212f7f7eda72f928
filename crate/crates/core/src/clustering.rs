use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{SignedGraph, VertexId};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ClusterId(pub u64);

impl fmt::Display for ClusterId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}", self.0)
    }
}

/// A partition into clusters with stable, never reused numeric ids.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Clustering {
    clusters: BTreeMap<ClusterId, BTreeSet<VertexId>>,
    assignment: BTreeMap<VertexId, ClusterId>,
    next_id: u64,
}

/// Clusters as sorted member lists, ordered by minimum member. Ids dropped.
pub type Partition = Vec<Vec<VertexId>>;

impl Clustering {
    pub fn starting_at(first_id: u64) -> Self {
        Clustering {
            next_id: first_id,
            ..Default::default()
        }
    }

    pub fn next_id(&self) -> u64 {
        self.next_id
    }

    pub fn len(&self) -> usize {
        self.clusters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.clusters.is_empty()
    }

    pub fn vertex_count(&self) -> usize {
        self.assignment.len()
    }

    pub fn cluster_of(&self, v: VertexId) -> Option<ClusterId> {
        self.assignment.get(&v).copied()
    }

    pub fn members(&self, id: ClusterId) -> Option<&BTreeSet<VertexId>> {
        self.clusters.get(&id)
    }

    pub fn iter(&self) -> impl Iterator<Item = (ClusterId, &BTreeSet<VertexId>)> {
        self.clusters.iter().map(|(&id, m)| (id, m))
    }

    pub fn ids(&self) -> impl Iterator<Item = ClusterId> + '_ {
        self.clusters.keys().copied()
    }

    /// Inserts `members` under a freshly allocated id.
    ///
    /// Panics if a member is already assigned; callers remove the old
    /// clusters first.
    pub fn insert_fresh(&mut self, members: BTreeSet<VertexId>) -> ClusterId {
        let id = ClusterId(self.next_id);
        self.next_id += 1;
        self.insert_with_id(id, members);
        id
    }

    pub(crate) fn insert_with_id(&mut self, id: ClusterId, members: BTreeSet<VertexId>) {
        debug_assert!(id.0 < self.next_id);
        for &v in &members {
            let prev = self.assignment.insert(v, id);
            assert!(prev.is_none(), "vertex {v} assigned twice");
        }
        let prev = self.clusters.insert(id, members);
        assert!(prev.is_none(), "cluster id {id} reused");
    }

    pub fn remove_cluster(&mut self, id: ClusterId) -> Option<BTreeSet<VertexId>> {
        let members = self.clusters.remove(&id)?;
        for v in &members {
            self.assignment.remove(v);
        }
        Some(members)
    }

    /// Adds `{v}` as a new cluster. Returns the number of structures written.
    pub fn add_singleton(&mut self, v: VertexId) -> Result<(ClusterId, usize)> {
        if self.assignment.contains_key(&v) {
            return Err(Error::DuplicateVertex(v));
        }
        let id = ClusterId(self.next_id);
        self.next_id += 1;
        self.clusters.insert(id, BTreeSet::from([v]));
        self.assignment.insert(v, id);
        Ok((id, 3))
    }

    /// Removes the singleton cluster `{v}`. Returns the number of structures written.
    pub fn remove_singleton(&mut self, v: VertexId) -> Result<(ClusterId, usize)> {
        let id = *self.assignment.get(&v).ok_or(Error::VertexNotFound(v))?;
        if self.clusters[&id].len() != 1 {
            return Err(Error::NotASingleton(v));
        }
        self.clusters.remove(&id);
        self.assignment.remove(&v);
        Ok((id, 2))
    }

    /// Canonical partition: members sorted, clusters ordered by minimum member.
    pub fn partition(&self) -> Partition {
        canonical_partition(self.clusters.values().map(|c| c.iter().copied().collect()))
    }

    /// Full-scan check that this is a partition of `g`'s vertex set with a
    /// consistent assignment map.
    pub fn check_partition_of(&self, g: &SignedGraph) -> Result<()> {
        let mut seen = BTreeSet::new();
        for (&id, members) in &self.clusters {
            if members.is_empty() {
                return Err(Error::NotAPartition(format!("cluster {id} is empty")));
            }
            if id.0 >= self.next_id {
                return Err(Error::NotAPartition(format!(
                    "cluster {id} is not below next id {}",
                    self.next_id
                )));
            }
            for &v in members {
                if !seen.insert(v) {
                    return Err(Error::NotAPartition(format!("vertex {v} in two clusters")));
                }
                if self.assignment.get(&v) != Some(&id) {
                    return Err(Error::NotAPartition(format!(
                        "assignment of {v} disagrees with cluster {id}"
                    )));
                }
                if !g.contains_vertex(v) {
                    return Err(Error::NotAPartition(format!(
                        "vertex {v} is not in the graph"
                    )));
                }
            }
        }
        if seen.len() != g.vertex_count() || self.assignment.len() != seen.len() {
            let missing: Vec<_> = g.vertices().filter(|v| !seen.contains(v)).collect();
            return Err(Error::NotAPartition(format!(
                "unassigned vertices {missing:?}"
            )));
        }
        Ok(())
    }
}

pub fn canonical_partition(clusters: impl IntoIterator<Item = Vec<VertexId>>) -> Partition {
    let mut out: Partition = clusters
        .into_iter()
        .map(|mut c| {
            c.sort_unstable();
            c
        })
        .filter(|c| !c.is_empty())
        .collect();
    out.sort();
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::fixtures;

    #[test]
    fn singleton_add_and_remove_round_trip() {
        let mut c = Clustering::starting_at(0);
        c.insert_fresh(BTreeSet::from([1, 2]));
        c.insert_fresh(BTreeSet::from([3]));
        let before = c.clone();
        let (id, _) = c.add_singleton(5).unwrap();
        assert_eq!(id, ClusterId(2));
        assert_eq!(c.partition(), vec![vec![1, 2], vec![3], vec![5]]);
        c.remove_singleton(5).unwrap();
        assert_eq!(c.partition(), before.partition());
        assert_eq!(c.remove_singleton(1), Err(Error::NotASingleton(1)));
        assert_eq!(c.remove_singleton(9), Err(Error::VertexNotFound(9)));
        // ids are never reused
        let (id, _) = c.add_singleton(5).unwrap();
        assert_eq!(id, ClusterId(3));
    }

    #[test]
    fn partition_check_detects_gaps() {
        let g = fixtures::p3();
        let mut c = Clustering::starting_at(0);
        c.insert_fresh(BTreeSet::from([1, 2]));
        assert!(c.check_partition_of(&g).is_err());
        c.insert_fresh(BTreeSet::from([3]));
        assert!(c.check_partition_of(&g).is_ok());
    }
}
