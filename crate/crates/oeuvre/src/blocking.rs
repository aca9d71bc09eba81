//! Name blocking: partition mentions by canonical name key and apply the
//! block-selection filters.
//!
//! Disambiguation never links across blocks, so every block can be processed
//! independently of the others.

use std::collections::{BTreeMap, BTreeSet};

use crate::corpus::{CanonicalName, Corpus, CorpusError};

/// All mentions sharing one canonical name key; the unit of disambiguation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Block {
    pub key: CanonicalName,
    /// Sorted ascending by mention id.
    pub mention_ids: Vec<String>,
}

impl Block {
    pub fn size(&self) -> usize {
        self.mention_ids.len()
    }

    /// Blocks keyed by a surname with no usable first initial are kept but
    /// flagged; downstream consumers may want to warn about them.
    pub fn has_empty_initial(&self) -> bool {
        self.key.initial().is_none()
    }
}

/// Partitions the corpus's mentions into blocks, sorted by key.
pub fn build_blocks(corpus: &Corpus) -> Result<Vec<Block>, CorpusError> {
    let mut groups: BTreeMap<CanonicalName, Vec<String>> = BTreeMap::new();
    // mentions iterate in id order, so each group's ids come out sorted
    for mention in corpus.mentions() {
        let key = mention.canonical_name()?;
        groups.entry(key).or_default().push(mention.mention_id.clone());
    }
    Ok(groups
        .into_iter()
        .map(|(key, mention_ids)| Block { key, mention_ids })
        .collect())
}

/// Outcome of [`filter_blocks`]: kept blocks plus statistics on what was
/// dropped and why.
#[derive(Debug, Clone, Default)]
pub struct FilterStats {
    pub kept: usize,
    /// Blocks with at least one gold id but fewer distinct ids than required.
    pub dropped_insufficient: Vec<(CanonicalName, usize)>,
    /// Blocks containing no gold-annotated mention at all.
    pub dropped_no_gold: Vec<CanonicalName>,
}

/// Keeps blocks with at least `min_gold_authors` distinct gold author ids.
/// Blocks without any gold id are excluded and reported, not an error.
pub fn filter_blocks(
    blocks: Vec<Block>,
    corpus: &Corpus,
    min_gold_authors: usize,
) -> (Vec<Block>, FilterStats) {
    let mut stats = FilterStats::default();
    let mut kept = Vec::new();
    for block in blocks {
        let distinct: BTreeSet<&str> = block
            .mention_ids
            .iter()
            .filter_map(|id| corpus.mention(id).and_then(|m| m.gold_author_id.as_deref()))
            .collect();
        if distinct.is_empty() {
            stats.dropped_no_gold.push(block.key);
        } else if distinct.len() < min_gold_authors {
            stats.dropped_insufficient.push((block.key, distinct.len()));
        } else {
            kept.push(block);
        }
    }
    stats.kept = kept.len();
    (kept, stats)
}
