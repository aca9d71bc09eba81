//! Shared clustering machinery: the canonical [`Clustering`] partition type,
//! connected components over similarity edges, and the greedy max-similarity
//! merge loop with its replayable [`MergeTrace`].

use std::collections::BTreeMap;
use std::io;

use thiserror::Error;

mod merge;
mod union_find;

pub use merge::{greedy_max_merge, ClusterScorer, MemberScorer, MergeStep, MergeTrace};
pub use union_find::UnionFind;

#[derive(Debug, Error)]
pub enum ClusterError {
    #[error("edge references mention {0:?} outside the block")]
    ForeignMention(String),
    #[error("clustering csv: {0}")]
    Csv(String),
}

/// A partition of one block's mentions into predicted oeuvres, in canonical
/// form: mention ids sorted ascending, cluster ids dense from 0 and assigned
/// in order of each cluster's smallest mention id. Equal partitions compare
/// and serialize identically.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Clustering {
    mention_ids: Vec<String>,
    assignment: Vec<u32>,
    n_clusters: usize,
}

impl Clustering {
    /// Builds the canonical form from arbitrary labels parallel to
    /// `mention_ids` (which need not be sorted).
    pub fn from_labels<L: Eq + std::hash::Hash + Copy>(
        mention_ids: Vec<String>,
        labels: &[L],
    ) -> Clustering {
        assert_eq!(mention_ids.len(), labels.len());
        let mut order: Vec<usize> = (0..mention_ids.len()).collect();
        order.sort_by(|&a, &b| mention_ids[a].cmp(&mention_ids[b]));
        let mut assignment = Vec::with_capacity(order.len());
        let mut dense: std::collections::HashMap<L, u32> = std::collections::HashMap::new();
        for &idx in &order {
            let next = dense.len() as u32;
            assignment.push(*dense.entry(labels[idx]).or_insert(next));
        }
        let mut sorted = mention_ids;
        sorted.sort();
        Clustering {
            mention_ids: sorted,
            assignment,
            n_clusters: dense.len(),
        }
    }

    pub fn singletons(mention_ids: Vec<String>) -> Clustering {
        let labels: Vec<usize> = (0..mention_ids.len()).collect();
        Clustering::from_labels(mention_ids, &labels)
    }

    pub fn single_cluster(mention_ids: Vec<String>) -> Clustering {
        let labels = vec![0usize; mention_ids.len()];
        Clustering::from_labels(mention_ids, &labels)
    }

    pub fn len(&self) -> usize {
        self.mention_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mention_ids.is_empty()
    }

    pub fn n_clusters(&self) -> usize {
        self.n_clusters
    }

    /// Sorted mention ids; parallel to [`Clustering::assignment`].
    pub fn mention_ids(&self) -> &[String] {
        &self.mention_ids
    }

    pub fn assignment(&self) -> &[u32] {
        &self.assignment
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, u32)> {
        self.mention_ids.iter().map(String::as_str).zip(self.assignment.iter().copied())
    }

    /// Member indices per cluster, clusters in canonical id order.
    pub fn clusters(&self) -> Vec<Vec<usize>> {
        let mut clusters = vec![Vec::new(); self.n_clusters];
        for (idx, &c) in self.assignment.iter().enumerate() {
            clusters[c as usize].push(idx);
        }
        clusters
    }

    /// The sub-clustering over `keep`, re-canonicalized.
    pub fn restrict<F: Fn(&str) -> bool>(&self, keep: F) -> Clustering {
        let mut ids = Vec::new();
        let mut labels = Vec::new();
        for (id, cluster) in self.iter() {
            if keep(id) {
                ids.push(id.to_string());
                labels.push(cluster);
            }
        }
        Clustering::from_labels(ids, &labels)
    }

    /// True if every cluster of `self` is contained in one cluster of
    /// `coarser`. Both must cover the same mentions.
    pub fn is_refinement_of(&self, coarser: &Clustering) -> bool {
        if self.mention_ids != coarser.mention_ids {
            return false;
        }
        let mut seen: BTreeMap<u32, u32> = BTreeMap::new();
        for (idx, &fine) in self.assignment.iter().enumerate() {
            let coarse = coarser.assignment[idx];
            match seen.entry(fine) {
                std::collections::btree_map::Entry::Vacant(e) => {
                    e.insert(coarse);
                }
                std::collections::btree_map::Entry::Occupied(e) => {
                    if *e.get() != coarse {
                        return false;
                    }
                }
            }
        }
        true
    }

    /// `mention_id,cluster_id` rows.
    pub fn write_csv<W: io::Write>(&self, writer: W) -> Result<(), ClusterError> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["mention_id", "cluster_id"])
            .map_err(|e| ClusterError::Csv(e.to_string()))?;
        for (id, cluster) in self.iter() {
            w.write_record([id, &cluster.to_string()])
                .map_err(|e| ClusterError::Csv(e.to_string()))?;
        }
        w.flush().map_err(|e| ClusterError::Csv(e.to_string()))
    }

    pub fn read_csv<R: io::Read>(reader: R) -> Result<Clustering, ClusterError> {
        let mut r = csv::Reader::from_reader(reader);
        let mut ids = Vec::new();
        let mut labels = Vec::new();
        for record in r.records() {
            let record = record.map_err(|e| ClusterError::Csv(e.to_string()))?;
            let id = record
                .get(0)
                .ok_or_else(|| ClusterError::Csv("missing mention_id".into()))?;
            let label: u32 = record
                .get(1)
                .ok_or_else(|| ClusterError::Csv("missing cluster_id".into()))?
                .parse()
                .map_err(|e| ClusterError::Csv(format!("bad cluster_id: {e}")))?;
            ids.push(id.to_string());
            labels.push(label);
        }
        Ok(Clustering::from_labels(ids, &labels))
    }
}

/// Connected components of the edge list over the given mentions, via
/// union-find, in canonical form. Edge order never affects the result.
pub fn connected_components(
    mention_ids: &[String],
    edges: &[(String, String)],
) -> Result<Clustering, ClusterError> {
    let index: BTreeMap<&str, usize> =
        mention_ids.iter().enumerate().map(|(i, id)| (id.as_str(), i)).collect();
    let mut uf = UnionFind::new(mention_ids.len());
    for (a, b) in edges {
        let ia = *index
            .get(a.as_str())
            .ok_or_else(|| ClusterError::ForeignMention(a.clone()))?;
        let ib = *index
            .get(b.as_str())
            .ok_or_else(|| ClusterError::ForeignMention(b.clone()))?;
        uf.union(ia, ib);
    }
    Ok(Clustering::from_labels(mention_ids.to_vec(), &uf.labels()))
}
