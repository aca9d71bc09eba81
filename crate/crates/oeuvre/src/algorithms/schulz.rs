//! Citation-graph method of Schulz et al. (2014).
//!
//! The mention-pair similarity combines four signals: co-author overlap
//! (min-normalized), mutual citation between the two papers, shared
//! references, and shared citing papers (min-normalized), each with its own
//! weight. Step 1 links pairs above β₁ and takes components; step 2 links
//! whole clusters whose gated mean pair similarity exceeds β₃ (pairs only
//! count when above β₂); step 3 attaches remaining singletons to the cluster
//! with the highest single pair similarity when it exceeds β₄.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{AlgoError, BlockContext};
use crate::blocking::Block;
use crate::clustering::{Clustering, UnionFind};
use crate::corpus::{AuthorMention, Corpus};
use crate::features::{overlap_min_normalized, overlap_min_sorted, sorted_intersection_count};
use crate::par;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SchulzParams {
    /// Weight of the min-normalized co-author overlap.
    pub alpha_coauthor: f64,
    /// Weight of mutual citation (each direction counts one).
    pub alpha_self_citation: f64,
    /// Weight of the shared-reference count.
    pub alpha_references: f64,
    /// Weight of the min-normalized shared-citer overlap.
    pub alpha_citers: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub beta3: f64,
    pub beta4: f64,
}

impl Default for SchulzParams {
    fn default() -> Self {
        // alphas follow the convention of weighting the normalized terms
        // fully and the unbounded count terms lightly; betas are starting
        // points meant to be fitted
        SchulzParams {
            alpha_coauthor: 1.0,
            alpha_self_citation: 1.0,
            alpha_references: 0.2,
            alpha_citers: 0.2,
            beta1: 0.8,
            beta2: 0.5,
            beta3: 0.1,
            beta4: 1.5,
        }
    }
}

impl SchulzParams {
    pub fn validate(&self) -> Result<(), AlgoError> {
        let alphas = [
            self.alpha_coauthor,
            self.alpha_self_citation,
            self.alpha_references,
            self.alpha_citers,
        ];
        if alphas.iter().any(|a| !a.is_finite() || *a < 0.0) {
            return Err(AlgoError::InvalidParams(
                "alpha weights must be finite and non-negative".into(),
            ));
        }
        if !alphas.iter().any(|a| *a > 0.0) {
            return Err(AlgoError::InvalidParams(
                "at least one alpha weight must be positive".into(),
            ));
        }
        if [self.beta1, self.beta2, self.beta3, self.beta4].iter().any(|b| b.is_nan()) {
            return Err(AlgoError::InvalidParams("beta thresholds must not be NaN".into()));
        }
        Ok(())
    }
}

/// Pair similarity over corpus mentions (the reference path; the block
/// runner uses the interned equivalent).
pub fn mention_similarity_schulz(
    m1: &AuthorMention,
    m2: &AuthorMention,
    corpus: &Corpus,
    params: &SchulzParams,
) -> f64 {
    let coauthor = overlap_min_normalized(
        corpus.coauthor_keys(&m1.mention_id),
        corpus.coauthor_keys(&m2.mention_id),
    );
    let (p1, p2) = (corpus.paper(&m1.paper_id), corpus.paper(&m2.paper_id));
    let (mutual, shared_refs, citer_overlap) = match (p1, p2) {
        (Some(p1), Some(p2)) => {
            let mutual = p1.references.contains(&p2.paper_id) as u32
                + p2.references.contains(&p1.paper_id) as u32;
            let shared = p1.references.intersection(&p2.references).count();
            let citers = overlap_min_normalized(
                corpus.citers_of(&p1.paper_id),
                corpus.citers_of(&p2.paper_id),
            );
            (mutual, shared, citers)
        }
        _ => (0, 0, 0.0),
    };
    params.alpha_coauthor * coauthor
        + params.alpha_self_citation * mutual as f64
        + params.alpha_references * shared_refs as f64
        + params.alpha_citers * citer_overlap
}

fn pair_similarity_ctx(ctx: &BlockContext, i: usize, j: usize, params: &SchulzParams) -> f64 {
    let coauthor = overlap_min_sorted(&ctx.coauthors[i], &ctx.coauthors[j]);
    let mutual = ctx.references[j].binary_search(&ctx.own_paper[i]).is_ok() as u32
        + ctx.references[i].binary_search(&ctx.own_paper[j]).is_ok() as u32;
    let shared_refs = sorted_intersection_count(&ctx.references[i], &ctx.references[j]);
    let citer_overlap = overlap_min_sorted(&ctx.citers[i], &ctx.citers[j]);
    params.alpha_coauthor * coauthor
        + params.alpha_self_citation * mutual as f64
        + params.alpha_references * shared_refs as f64
        + params.alpha_citers * citer_overlap
}

/// Gated mean cluster similarity: pair similarities above `beta2` summed
/// and divided by |γ|·|κ|.
pub fn cluster_similarity_schulz<F: Fn(usize, usize) -> f64>(
    cluster_a: &[usize],
    cluster_b: &[usize],
    pair_sim: F,
    beta2: f64,
) -> f64 {
    if cluster_a.is_empty() || cluster_b.is_empty() {
        return 0.0;
    }
    let mut sum = 0.0;
    for &i in cluster_a {
        for &j in cluster_b {
            let s = pair_sim(i, j);
            if s > beta2 {
                sum += s;
            }
        }
    }
    sum / (cluster_a.len() as f64 * cluster_b.len() as f64)
}

/// Sparse positive pair similarities of a block, rows in deterministic
/// order. Reused across threshold candidates during fitting.
pub(crate) fn positive_pairs(ctx: &BlockContext, params: &SchulzParams) -> Vec<(u32, u32, f64)> {
    let n = ctx.len();
    let rows = par::map_range(n, |i| {
        let mut row = Vec::new();
        for j in (i + 1)..n {
            let s = pair_similarity_ctx(ctx, i, j, params);
            if s > 0.0 {
                row.push((i as u32, j as u32, s));
            }
        }
        row
    });
    rows.into_iter().flatten().collect()
}

/// The three linking steps given precomputed positive pair similarities.
/// Similarities are never negative, so pairs absent from the sparse list
/// have similarity exactly 0; negative thresholds are handled as the
/// degenerate everything-qualifies cases they are.
pub(crate) fn run_from_pairs(
    block: &Block,
    pairs: &[(u32, u32, f64)],
    params: &SchulzParams,
) -> Clustering {
    let n = block.mention_ids.len();
    if params.beta1 < 0.0 {
        // every pair has s >= 0 > beta1
        return Clustering::single_cluster(block.mention_ids.to_vec());
    }

    // step 1: components over pairs with s > beta1
    let mut uf = UnionFind::new(n);
    for &(i, j, s) in pairs {
        if s > params.beta1 {
            uf.union(i as usize, j as usize);
        }
    }
    let step1_labels = uf.labels();
    let step1 = Clustering::from_labels(block.mention_ids.to_vec(), &step1_labels);

    // step 2: gated mean similarity between clusters, link when > beta3
    let clusters = step1.clusters();
    let k = clusters.len();
    let cluster_of: Vec<u32> = step1.assignment().to_vec();
    let mut cluster_uf = UnionFind::new(k);
    if params.beta3 < 0.0 {
        // gated sums are >= 0, so every cluster pair links
        for c in 1..k {
            cluster_uf.union(0, c);
        }
    } else {
        let mut gated: BTreeMap<(u32, u32), f64> = BTreeMap::new();
        for &(i, j, s) in pairs {
            if s <= params.beta2 {
                continue;
            }
            let (ci, cj) = (cluster_of[i as usize], cluster_of[j as usize]);
            if ci == cj {
                continue;
            }
            let key = (ci.min(cj), ci.max(cj));
            *gated.entry(key).or_insert(0.0) += s;
        }
        for (&(a, b), &sum) in &gated {
            let s = sum / (clusters[a as usize].len() as f64 * clusters[b as usize].len() as f64);
            if s > params.beta3 {
                cluster_uf.union(a as usize, b as usize);
            }
        }
    }
    let step2_cluster_labels = cluster_uf.labels();
    let step2_labels: Vec<usize> =
        (0..n).map(|m| step2_cluster_labels[cluster_of[m] as usize]).collect();
    let step2 = Clustering::from_labels(block.mention_ids.to_vec(), &step2_labels);

    // step 3: attach remaining singletons to the cluster with the highest
    // single pair similarity above beta4; evaluated against the step-2
    // clustering and applied simultaneously, so two multi-mention clusters
    // can never merge through this step
    let step2_clusters = step2.clusters();
    let step2_of: Vec<u32> = step2.assignment().to_vec();
    let cluster_size: Vec<usize> = step2_clusters.iter().map(Vec::len).collect();
    // best (similarity, target cluster) per singleton mention
    let mut best: BTreeMap<usize, (f64, u32)> = BTreeMap::new();
    if params.beta4 < 0.0 {
        // zero-similarity targets qualify; seed every singleton with the
        // smallest multi-mention cluster and let positive pairs improve it
        if let Some(smallest_multi) =
            (0..cluster_size.len()).find(|&c| cluster_size[c] > 1).map(|c| c as u32)
        {
            for (m, &cluster) in step2_of.iter().enumerate() {
                if cluster_size[cluster as usize] == 1 {
                    best.insert(m, (0.0, smallest_multi));
                }
            }
        }
    }
    for &(i, j, s) in pairs {
        if s <= params.beta4 {
            continue;
        }
        let (i, j) = (i as usize, j as usize);
        for (single, other) in [(i, j), (j, i)] {
            if cluster_size[step2_of[single] as usize] != 1 {
                continue;
            }
            let target = step2_of[other];
            if cluster_size[target as usize] < 2 {
                continue;
            }
            let entry = best.entry(single).or_insert((f64::NEG_INFINITY, u32::MAX));
            if s > entry.0 || (s == entry.0 && target < entry.1) {
                *entry = (s, target);
            }
        }
    }
    if best.is_empty() {
        return step2;
    }
    let mut labels: Vec<u32> = step2_of;
    for (mention, (_, target)) in best {
        labels[mention] = target;
    }
    Clustering::from_labels(block.mention_ids.to_vec(), &labels)
}

pub fn run_schulz(
    block: &Block,
    corpus: &Corpus,
    params: &SchulzParams,
) -> Result<Clustering, AlgoError> {
    params.validate()?;
    let ctx = BlockContext::build(block, corpus, &Default::default());
    let pairs = positive_pairs(&ctx, params);
    Ok(run_from_pairs(block, &pairs, params))
}
