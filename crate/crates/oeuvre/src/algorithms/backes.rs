//! Specificity-driven agglomerative clustering after Backes (2018), run as
//! a greedy max-similarity merge.
//!
//! Eight metadata fields (titles, abstracts, author-linked affiliations,
//! subject categories, keywords, co-author names, cited-author names,
//! emails) each contribute a score in [0, 1] that weights shared tokens by
//! their rarity within the block; the cluster similarity is the equal-weight
//! mean over the fields present. Clusters start as singletons and the most
//! similar pair merges until the maximum similarity falls to the quality
//! limit `l = λ · block size`. The run always records the full merge trace,
//! so any other limit can be answered by cutting the trace instead of
//! re-clustering.

use serde::{Deserialize, Serialize};

use super::{AlgoError, BlockContext};
use crate::blocking::Block;
use crate::clustering::{greedy_max_merge, ClusterScorer, Clustering, MergeTrace};
use crate::corpus::Corpus;
use crate::features::{
    specificity_score_with_totals, FieldBundles, FieldWeighting, MetadataField, N_FIELDS,
};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BackesParams {
    /// Quality-limit slope: the merge loop stops once the best similarity
    /// is at most `lambda * |block|`.
    pub lambda: f64,
    /// Absolute quality limit overriding the linear rule when set; fitted
    /// per-block thresholds are expressed this way.
    pub limit: Option<f64>,
}

impl Default for BackesParams {
    fn default() -> Self {
        BackesParams {
            lambda: 2e-4,
            limit: None,
        }
    }
}

impl BackesParams {
    pub fn validate(&self) -> Result<(), AlgoError> {
        if !self.lambda.is_finite() || self.lambda < 0.0 {
            return Err(AlgoError::InvalidParams(format!(
                "lambda must be finite and >= 0, got {}",
                self.lambda
            )));
        }
        if let Some(limit) = self.limit {
            if limit.is_nan() {
                return Err(AlgoError::InvalidParams("limit must not be NaN".into()));
            }
        }
        Ok(())
    }

    pub fn limit_for(&self, block_size: usize) -> f64 {
        self.limit.unwrap_or(self.lambda * block_size as f64)
    }
}

/// Per-mention field token sets in the order of [`MetadataField::ALL`].
fn mention_fields<'b>(ctx: &'b BlockContext, i: usize) -> [&'b [u32]; N_FIELDS] {
    let mut fields: [&[u32]; N_FIELDS] = [&[]; N_FIELDS];
    fields[MetadataField::Title.index()] = &ctx.title_set[i];
    fields[MetadataField::Abstract.index()] = &ctx.abstract_set[i];
    fields[MetadataField::Affiliation.index()] = &ctx.author_addrs[i];
    fields[MetadataField::SubjectCategory.index()] = &ctx.categories[i];
    fields[MetadataField::Keyword.index()] = &ctx.keyword_set[i];
    fields[MetadataField::Coauthor.index()] = &ctx.coauthors[i];
    fields[MetadataField::CitedAuthor.index()] = &ctx.cited_authors[i];
    fields[MetadataField::Email.index()] = &ctx.email_field[i];
    fields
}

/// Block-level weightings, one per field.
pub(crate) fn block_weightings(ctx: &BlockContext) -> [FieldWeighting; N_FIELDS] {
    let n = ctx.len();
    let vocab = [
        ctx.title_interner.len(),
        ctx.abstract_interner.len(),
        ctx.author_addr_interner.len(),
        ctx.category_interner.len(),
        ctx.keyword_interner.len(),
        ctx.coauthor_interner.len(),
        ctx.cited_author_interner.len(),
        ctx.email_interner.len(),
    ];
    std::array::from_fn(|f| {
        let sets: Vec<Vec<u32>> = (0..n).map(|i| mention_fields(ctx, i)[f].to_vec()).collect();
        FieldWeighting::from_token_sets(&sets, vocab[f])
    })
}

struct BackesScorer {
    bundles: Vec<FieldBundles>,
    totals: Vec<[f64; N_FIELDS]>,
    weightings: [FieldWeighting; N_FIELDS],
}

impl ClusterScorer for BackesScorer {
    fn similarity(&self, a: u32, b: u32) -> f64 {
        specificity_score_with_totals(
            &self.bundles[a as usize],
            &self.totals[a as usize],
            &self.bundles[b as usize],
            &self.totals[b as usize],
            &self.weightings,
        )
    }

    fn merged(&mut self, a: u32, b: u32, merged: u32) {
        debug_assert_eq!(merged as usize, self.bundles.len());
        let union = self.bundles[a as usize].union(&self.bundles[b as usize]);
        let totals = union.totals(&self.weightings);
        self.bundles.push(union);
        self.totals.push(totals);
    }
}

/// One full dendrogram for the block: every merge down to a single
/// cluster, whatever the quality limit will be.
pub(crate) fn full_trace(ctx: &BlockContext) -> MergeTrace {
    let weightings = block_weightings(ctx);
    let singletons = ctx.singletons();
    let n = ctx.len();
    // singleton bundles in canonical cluster order (== block order, since
    // mention ids are already sorted)
    let bundles: Vec<FieldBundles> = (0..n)
        .map(|i| {
            let fields = mention_fields(ctx, i);
            FieldBundles {
                fields: std::array::from_fn(|f| fields[f].to_vec()),
            }
        })
        .collect();
    let totals: Vec<[f64; N_FIELDS]> = bundles.iter().map(|b| b.totals(&weightings)).collect();
    let mut scorer = BackesScorer {
        bundles,
        totals,
        weightings,
    };
    let (_, trace) = greedy_max_merge(&singletons, &mut scorer, f64::NEG_INFINITY);
    trace
}

/// Every field token of a block with its specificity weight, in field
/// order then token id order; the inspection surface behind `dump-weights`.
pub fn field_weights(block: &Block, corpus: &Corpus) -> Vec<(&'static str, String, f64)> {
    let ctx = BlockContext::build(block, corpus, &Default::default());
    let weightings = block_weightings(&ctx);
    let interners = [
        &ctx.title_interner,
        &ctx.abstract_interner,
        &ctx.author_addr_interner,
        &ctx.category_interner,
        &ctx.keyword_interner,
        &ctx.coauthor_interner,
        &ctx.cited_author_interner,
        &ctx.email_interner,
    ];
    let mut out = Vec::new();
    for field in MetadataField::ALL {
        let f = field.index();
        for id in 0..interners[f].len() as u32 {
            out.push((field.name(), interners[f].name(id).to_string(), weightings[f].weight(id)));
        }
    }
    out
}

pub fn run_backes(
    block: &Block,
    corpus: &Corpus,
    params: &BackesParams,
) -> Result<(Clustering, MergeTrace), AlgoError> {
    params.validate()?;
    let ctx = BlockContext::build(block, corpus, &Default::default());
    let trace = full_trace(&ctx);
    let clustering = trace.cut(params.limit_for(ctx.len()));
    Ok((clustering, trace))
}
