//! Two-step method of Cota, Gonçalves and Laender (2007).
//!
//! Step 1 links every pair of mentions sharing a co-author name and takes
//! connected components. Step 2 iteratively merges the most similar pair of
//! clusters whose publication-title or journal-title TF-IDF cosine exceeds
//! its threshold, recomputing cluster documents after each merge. The IDF
//! base is fixed once from the step-2 starting clusters; candidate ranking
//! uses the larger of the two cosines, ties broken by smallest cluster id
//! pair.

use serde::{Deserialize, Serialize};

use super::{AlgoError, BlockContext};
use crate::blocking::Block;
use crate::clustering::{greedy_max_merge, ClusterScorer, Clustering, UnionFind};
use crate::corpus::Corpus;
use crate::features::{token_counts, tfidf_cosine, IdfTable, TokenCounts};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CotaParams {
    pub title_threshold: f64,
    pub journal_threshold: f64,
}

impl Default for CotaParams {
    fn default() -> Self {
        CotaParams {
            title_threshold: 0.3,
            journal_threshold: 0.6,
        }
    }
}

impl CotaParams {
    /// Thresholds must be finite and non-negative. Values above 1 are
    /// legal and disable the corresponding test (cosines never exceed 1).
    pub fn validate(&self) -> Result<(), AlgoError> {
        for (name, v) in [
            ("title_threshold", self.title_threshold),
            ("journal_threshold", self.journal_threshold),
        ] {
            if !v.is_finite() || v < 0.0 {
                return Err(AlgoError::InvalidParams(format!(
                    "{name} must be finite and >= 0, got {v}"
                )));
            }
        }
        Ok(())
    }
}

pub(crate) struct ClusterDocs {
    title: TokenCounts<u32>,
    journal: TokenCounts<u32>,
}

/// Step-1 components plus the frozen step-2 documents and IDF tables;
/// threshold sweeps rerun only the merge loop.
pub(crate) struct CotaCache {
    step1: Clustering,
    docs: Vec<ClusterDocs>,
    title_idf: IdfTable<u32>,
    journal_idf: IdfTable<u32>,
}

pub(crate) fn build_cache(ctx: &BlockContext) -> CotaCache {
    let step1 = coauthor_components(ctx);
    let clusters = step1.clusters();
    let docs: Vec<ClusterDocs> = clusters
        .iter()
        .map(|members| ClusterDocs {
            title: token_counts(members.iter().flat_map(|&m| ctx.title_seq[m].iter().copied())),
            journal: token_counts(members.iter().flat_map(|&m| ctx.journal_seq[m].iter().copied())),
        })
        .collect();
    let title_idf = IdfTable::from_docs(docs.iter().map(|d| &d.title));
    let journal_idf = IdfTable::from_docs(docs.iter().map(|d| &d.journal));
    CotaCache {
        step1,
        docs,
        title_idf,
        journal_idf,
    }
}

pub(crate) fn run_from_cache(cache: &CotaCache, params: &CotaParams) -> Clustering {
    let mut scorer = CotaScorer {
        docs: cache
            .docs
            .iter()
            .map(|d| ClusterDocs {
                title: d.title.clone(),
                journal: d.journal.clone(),
            })
            .collect(),
        title_idf: cache.title_idf.clone(),
        journal_idf: cache.journal_idf.clone(),
        title_threshold: params.title_threshold,
        journal_threshold: params.journal_threshold,
    };
    // non-qualifying pairs score -inf, so any stop below 0 halts exactly
    // when no pair passes either threshold test
    let (clustering, _) = greedy_max_merge(&cache.step1, &mut scorer, -1.0);
    clustering
}

struct CotaScorer {
    docs: Vec<ClusterDocs>,
    title_idf: IdfTable<u32>,
    journal_idf: IdfTable<u32>,
    title_threshold: f64,
    journal_threshold: f64,
}

impl ClusterScorer for CotaScorer {
    fn similarity(&self, a: u32, b: u32) -> f64 {
        let (da, db) = (&self.docs[a as usize], &self.docs[b as usize]);
        let title = tfidf_cosine(&da.title, &db.title, &self.title_idf);
        let journal = tfidf_cosine(&da.journal, &db.journal, &self.journal_idf);
        if title > self.title_threshold || journal > self.journal_threshold {
            title.max(journal)
        } else {
            f64::NEG_INFINITY
        }
    }

    fn merged(&mut self, a: u32, b: u32, merged: u32) {
        debug_assert_eq!(merged as usize, self.docs.len());
        let mut title = self.docs[a as usize].title.clone();
        for (&t, &c) in &self.docs[b as usize].title {
            *title.entry(t).or_insert(0) += c;
        }
        let mut journal = self.docs[a as usize].journal.clone();
        for (&t, &c) in &self.docs[b as usize].journal {
            *journal.entry(t).or_insert(0) += c;
        }
        self.docs.push(ClusterDocs { title, journal });
    }
}

/// Step-1 components: pairs sharing at least one co-author name.
fn coauthor_components(ctx: &BlockContext) -> Clustering {
    let n = ctx.len();
    let mut uf = UnionFind::new(n);
    for i in 0..n {
        if ctx.coauthors[i].is_empty() {
            continue;
        }
        for j in (i + 1)..n {
            if crate::features::sorted_intersection_count(&ctx.coauthors[i], &ctx.coauthors[j]) > 0
            {
                uf.union(i, j);
            }
        }
    }
    Clustering::from_labels(ctx.block.mention_ids.clone(), &uf.labels())
}

pub fn run_cota(block: &Block, corpus: &Corpus, params: &CotaParams) -> Result<Clustering, AlgoError> {
    params.validate()?;
    let ctx = BlockContext::build(block, corpus, &Default::default());
    Ok(run_from_cache(&build_cache(&ctx), params))
}
