//! Pairwise and best-match precision/recall/F1.
//!
//! Pairwise metrics compare mention pairs: of the pairs placed in one
//! cluster, how many share a real author (precision), and of the pairs
//! sharing a real author, how many were placed in one cluster (recall).
//! Best metrics attribute each cluster to its most represented author
//! (precision side) and each author to the cluster holding most of their
//! mentions (recall side), counting the covered mentions.
//!
//! Everything is computed from raw counts ([`PairCounts`]) so that block
//! results can be pooled exactly: overall numbers are ratios of summed
//! counts, never averages of per-block ratios.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::clustering::Clustering;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("mention {0:?} has no gold author id in evaluation scope")]
    MissingGold(String),
    #[error("cannot evaluate an empty mention set")]
    EmptyScope,
}

/// Raw counts underlying all six metrics; additive across blocks.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct PairCounts {
    /// |pairs_author ∩ pairs_cluster|
    pub pairs_both: u64,
    pub pairs_cluster: u64,
    pub pairs_author: u64,
    /// Σ over clusters of the majority author's mention count.
    pub best_precision_hits: u64,
    /// Σ over authors of their largest cluster's mention count.
    pub best_recall_hits: u64,
    pub n_mentions: u64,
    pub n_authors: u64,
    pub n_clusters: u64,
}

fn choose2(n: u64) -> u64 {
    n * n.saturating_sub(1) / 2
}

impl PairCounts {
    /// Counts from parallel dense cluster and author labels.
    pub fn from_assignment(clusters: &[u32], authors: &[u32]) -> PairCounts {
        assert_eq!(clusters.len(), authors.len());
        let mut cluster_sizes: BTreeMap<u32, u64> = BTreeMap::new();
        let mut author_sizes: BTreeMap<u32, u64> = BTreeMap::new();
        let mut cell_sizes: BTreeMap<(u32, u32), u64> = BTreeMap::new();
        for (&c, &a) in clusters.iter().zip(authors) {
            *cluster_sizes.entry(c).or_insert(0) += 1;
            *author_sizes.entry(a).or_insert(0) += 1;
            *cell_sizes.entry((c, a)).or_insert(0) += 1;
        }
        let pairs_both = cell_sizes.values().map(|&n| choose2(n)).sum();
        let pairs_cluster = cluster_sizes.values().map(|&n| choose2(n)).sum();
        let pairs_author = author_sizes.values().map(|&n| choose2(n)).sum();

        let mut cluster_majority: BTreeMap<u32, u64> = BTreeMap::new();
        let mut author_largest: BTreeMap<u32, u64> = BTreeMap::new();
        for (&(c, a), &n) in &cell_sizes {
            let m = cluster_majority.entry(c).or_insert(0);
            *m = (*m).max(n);
            let m = author_largest.entry(a).or_insert(0);
            *m = (*m).max(n);
        }
        PairCounts {
            pairs_both,
            pairs_cluster,
            pairs_author,
            best_precision_hits: cluster_majority.values().sum(),
            best_recall_hits: author_largest.values().sum(),
            n_mentions: clusters.len() as u64,
            n_authors: author_sizes.len() as u64,
            n_clusters: cluster_sizes.len() as u64,
        }
    }

    /// Counts for a clustering against the gold mention-to-author map.
    /// Every mention in the clustering must have a gold id.
    pub fn from_clustering(
        clustering: &Clustering,
        gold: &BTreeMap<String, String>,
    ) -> Result<PairCounts, EvalError> {
        let mut author_ids: BTreeMap<&str, u32> = BTreeMap::new();
        let mut authors = Vec::with_capacity(clustering.len());
        for id in clustering.mention_ids() {
            let author = gold
                .get(id)
                .ok_or_else(|| EvalError::MissingGold(id.clone()))?;
            let next = author_ids.len() as u32;
            authors.push(*author_ids.entry(author).or_insert(next));
        }
        Ok(PairCounts::from_assignment(clustering.assignment(), &authors))
    }

    pub fn add(&mut self, other: &PairCounts) {
        self.pairs_both += other.pairs_both;
        self.pairs_cluster += other.pairs_cluster;
        self.pairs_author += other.pairs_author;
        self.best_precision_hits += other.best_precision_hits;
        self.best_recall_hits += other.best_recall_hits;
        self.n_mentions += other.n_mentions;
        self.n_authors += other.n_authors;
        self.n_clusters += other.n_clusters;
    }

    /// Inverse of [`PairCounts::add`]; `other` must have been added before.
    pub fn subtract(&mut self, other: &PairCounts) {
        self.pairs_both -= other.pairs_both;
        self.pairs_cluster -= other.pairs_cluster;
        self.pairs_author -= other.pairs_author;
        self.best_precision_hits -= other.best_precision_hits;
        self.best_recall_hits -= other.best_recall_hits;
        self.n_mentions -= other.n_mentions;
        self.n_authors -= other.n_authors;
        self.n_clusters -= other.n_clusters;
    }

    /// Turns counts into a report. Empty-denominator conventions: with no
    /// within-cluster pairs precision is vacuously 1, with no within-author
    /// pairs recall is vacuously 1; F1 of a zero component is 0.
    pub fn report(&self, scope: impl Into<String>) -> Result<EvalReport, EvalError> {
        if self.n_mentions == 0 {
            return Err(EvalError::EmptyScope);
        }
        let ratio = |num: u64, den: u64| {
            if den == 0 {
                1.0
            } else {
                num as f64 / den as f64
            }
        };
        let p_pair = ratio(self.pairs_both, self.pairs_cluster);
        let r_pair = ratio(self.pairs_both, self.pairs_author);
        let p_best = self.best_precision_hits as f64 / self.n_mentions as f64;
        let r_best = self.best_recall_hits as f64 / self.n_mentions as f64;
        Ok(EvalReport {
            scope: scope.into(),
            p_pair,
            r_pair,
            f1_pair: harmonic(p_pair, r_pair),
            p_best,
            r_best,
            f1_best: harmonic(p_best, r_best),
            n_mentions: self.n_mentions as usize,
            n_gold_authors: self.n_authors as usize,
            n_clusters: self.n_clusters as usize,
        })
    }
}

fn harmonic(p: f64, r: f64) -> f64 {
    if p == 0.0 || r == 0.0 {
        0.0
    } else {
        2.0 * p * r / (p + r)
    }
}

/// Six metrics plus counts for one scope (a block, or "overall").
#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub scope: String,
    pub p_pair: f64,
    pub r_pair: f64,
    pub f1_pair: f64,
    pub p_best: f64,
    pub r_best: f64,
    pub f1_best: f64,
    pub n_mentions: usize,
    pub n_gold_authors: usize,
    pub n_clusters: usize,
}

/// Pairwise precision, recall, F1.
pub fn pairwise_metrics(
    clustering: &Clustering,
    gold: &BTreeMap<String, String>,
) -> Result<(f64, f64, f64), EvalError> {
    let report = PairCounts::from_clustering(clustering, gold)?.report("")?;
    Ok((report.p_pair, report.r_pair, report.f1_pair))
}

/// Best precision, recall, F1.
pub fn best_metrics(
    clustering: &Clustering,
    gold: &BTreeMap<String, String>,
) -> Result<(f64, f64, f64), EvalError> {
    let report = PairCounts::from_clustering(clustering, gold)?.report("")?;
    Ok((report.p_best, report.r_best, report.f1_best))
}

/// Per-block report.
pub fn block_report(
    scope: impl Into<String>,
    clustering: &Clustering,
    gold: &BTreeMap<String, String>,
) -> Result<EvalReport, EvalError> {
    PairCounts::from_clustering(clustering, gold)?.report(scope)
}

/// Pools per-block counts into one overall report.
pub fn aggregate<'a, I: IntoIterator<Item = &'a PairCounts>>(
    counts: I,
    scope: impl Into<String>,
) -> Result<EvalReport, EvalError> {
    let mut total = PairCounts::default();
    for c in counts {
        total.add(c);
    }
    total.report(scope)
}

/// One row of the block-size quality curve.
#[derive(Debug, Clone, PartialEq)]
pub struct SizeCurveRow {
    pub block_size: usize,
    pub mean_f1_pair: f64,
    pub mean_f1_best: f64,
    pub n_blocks: usize,
}

/// Groups per-block reports by exact block size and emits per-size means,
/// ascending in size.
pub fn quality_by_size(reports: &[EvalReport]) -> Vec<SizeCurveRow> {
    let mut by_size: BTreeMap<usize, Vec<&EvalReport>> = BTreeMap::new();
    for report in reports {
        by_size.entry(report.n_mentions).or_default().push(report);
    }
    by_size
        .into_iter()
        .map(|(size, group)| SizeCurveRow {
            block_size: size,
            mean_f1_pair: group.iter().map(|r| r.f1_pair).sum::<f64>() / group.len() as f64,
            mean_f1_best: group.iter().map(|r| r.f1_best).sum::<f64>() / group.len() as f64,
            n_blocks: group.len(),
        })
        .collect()
}
