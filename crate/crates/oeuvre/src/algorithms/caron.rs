//! Rule-based scoring method of Caron and van Eck (2014).
//!
//! Every mention pair in a block is scored by the rule table; pairs whose
//! score reaches the block's threshold are linked and the connected
//! components become the predicted oeuvres. The threshold comes from the
//! block-size class: larger blocks carry more false-link risk, so they get
//! higher thresholds. Integer scores meet integer thresholds, so the link
//! test is `score >= threshold`.

use serde::{Deserialize, Serialize};

use super::{AlgoError, BlockContext};
use crate::blocking::Block;
use crate::clustering::{Clustering, UnionFind};
use crate::corpus::Corpus;
use crate::features::{sorted_intersection_count, GeneralNameList, RuleScoreTable};
use crate::par;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CaronParams {
    /// Ascending upper bounds of the block-size classes; sizes above the
    /// last bound fall into one more class.
    pub class_bounds: Vec<usize>,
    /// One threshold per class; length must be `class_bounds.len() + 1`.
    pub class_thresholds: Vec<i32>,
}

impl Default for CaronParams {
    fn default() -> Self {
        CaronParams {
            class_bounds: vec![500, 1000, 2000, 3000, 4500],
            class_thresholds: vec![21, 22, 25, 27, 29, 29],
        }
    }
}

impl CaronParams {
    /// Structural validation. Returns warnings for suspicious but legal
    /// configurations (thresholds not non-decreasing in block size).
    pub fn validate(&self) -> Result<Vec<String>, AlgoError> {
        if self.class_thresholds.len() != self.class_bounds.len() + 1 {
            return Err(AlgoError::InvalidParams(format!(
                "need {} class thresholds for {} bounds, got {}",
                self.class_bounds.len() + 1,
                self.class_bounds.len(),
                self.class_thresholds.len()
            )));
        }
        if self.class_bounds.windows(2).any(|w| w[0] >= w[1]) {
            return Err(AlgoError::InvalidParams(
                "class bounds must be strictly ascending".into(),
            ));
        }
        let mut warnings = Vec::new();
        if self.class_thresholds.windows(2).any(|w| w[0] > w[1]) {
            warnings.push(
                "class thresholds decrease with block size; larger blocks usually need higher thresholds"
                    .to_string(),
            );
        }
        Ok(warnings)
    }

    /// Class index for a block of `size` mentions.
    pub fn class_of(&self, size: usize) -> usize {
        self.class_bounds.partition_point(|&bound| bound < size)
    }

    pub fn threshold_for(&self, size: usize) -> i32 {
        self.class_thresholds[self.class_of(size)]
    }
}

/// Rule score over the interned block context; mirrors
/// [`crate::features::rule_score`] exactly.
pub(crate) fn rule_score_ctx(ctx: &BlockContext, i: usize, j: usize, table: &RuleScoreTable) -> i32 {
    let mut score = 0;

    if let (Some(a), Some(b)) = (ctx.emails[i], ctx.emails[j]) {
        if a == b {
            score += table.email_exact;
        }
    }

    let (ia, ib) = (ctx.initials[i], ctx.initials[j]);
    if ia.len() > 1 || ib.len() > 1 {
        let shared = ia.len().min(ib.len());
        if ia[..shared] != ib[..shared] {
            score += table.initials_conflict;
        } else if shared == 2 {
            score += table.initials_two;
        } else if shared > 2 {
            score += table.initials_more;
        }
    }

    if let (Some(a), Some(b)) = (ctx.first_names[i], ctx.first_names[j]) {
        if a == b {
            score += if ctx.first_is_general[i] {
                table.first_name_general
            } else {
                table.first_name_nongeneral
            };
        }
    }

    if sorted_intersection_count(&ctx.author_addrs[i], &ctx.author_addrs[j]) > 0 {
        score += table.author_address;
    }

    score += match sorted_intersection_count(&ctx.coauthors[i], &ctx.coauthors[j]) {
        0 => 0,
        1 => table.coauthor_1,
        2 => table.coauthor_2,
        _ => table.coauthor_gt2,
    };

    if sorted_intersection_count(&ctx.grants[i], &ctx.grants[j]) > 0 {
        score += table.grant;
    }
    if sorted_intersection_count(&ctx.pub_addrs[i], &ctx.pub_addrs[j]) > 0 {
        score += table.pub_address;
    }
    if sorted_intersection_count(&ctx.categories[i], &ctx.categories[j]) > 0 {
        score += table.subject_category;
    }
    if let (Some(a), Some(b)) = (ctx.journals[i], ctx.journals[j]) {
        if a == b {
            score += table.journal;
        }
    }
    if ctx.references[j].binary_search(&ctx.own_paper[i]).is_ok()
        || ctx.references[i].binary_search(&ctx.own_paper[j]).is_ok()
    {
        score += table.self_citation;
    }

    let coupling = sorted_intersection_count(&ctx.references[i], &ctx.references[j]);
    score += match coupling {
        0 => 0,
        1..=4 => table.coupling[coupling - 1],
        _ => table.coupling_gt4,
    };
    let cocitation = sorted_intersection_count(&ctx.citers[i], &ctx.citers[j]);
    score += match cocitation {
        0 => 0,
        1..=4 => table.cocitation[cocitation - 1],
        _ => table.cocitation_gt4,
    };

    score
}

/// All pairs scoring at least `floor`, rows in deterministic order. The
/// threshold sweep caches these once per block.
pub fn scored_edges(
    ctx: &BlockContext,
    table: &RuleScoreTable,
    floor: i32,
) -> Vec<(u32, u32, i32)> {
    let n = ctx.len();
    let rows = par::map_range(n, |i| {
        let mut row = Vec::new();
        for j in (i + 1)..n {
            let score = rule_score_ctx(ctx, i, j, table);
            if score >= floor {
                row.push((i as u32, j as u32, score));
            }
        }
        row
    });
    rows.into_iter().flatten().collect()
}

pub(crate) fn components_at_threshold(
    block: &Block,
    edges: &[(u32, u32, i32)],
    threshold: i32,
) -> Clustering {
    let mut uf = UnionFind::new(block.mention_ids.len());
    for &(i, j, score) in edges {
        if score >= threshold {
            uf.union(i as usize, j as usize);
        }
    }
    Clustering::from_labels(block.mention_ids.clone(), &uf.labels())
}

/// Runs with an explicit threshold instead of the block-size classes; used
/// for per-block fitted thresholds.
pub fn run_caron_with_threshold(
    block: &Block,
    corpus: &Corpus,
    threshold: i32,
    table: &RuleScoreTable,
    names: &GeneralNameList,
) -> Clustering {
    let ctx = BlockContext::build(block, corpus, names);
    let edges = scored_edges(&ctx, table, threshold);
    components_at_threshold(block, &edges, threshold)
}

pub fn run_caron(
    block: &Block,
    corpus: &Corpus,
    params: &CaronParams,
    table: &RuleScoreTable,
    names: &GeneralNameList,
) -> Result<Clustering, AlgoError> {
    params.validate()?;
    Ok(run_caron_with_threshold(
        block,
        corpus,
        params.threshold_for(block.mention_ids.len()),
        table,
        names,
    ))
}
