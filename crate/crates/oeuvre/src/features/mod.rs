//! Pairwise similarity primitives shared by the disambiguation algorithms:
//! set overlaps, TF-IDF cosine, rule-based scoring, and specificity
//! weighting. Everything here is a pure function over immutable data and is
//! safe to call from any number of threads.

use std::collections::BTreeMap;

mod rules;
mod weighting;

pub use rules::{build_general_names, rule_score, ConfigError, FeatureConfig, GeneralNameList, RuleScoreTable};
pub use weighting::{
    specificity_field_score, specificity_score, specificity_score_with_totals, FieldBundles,
    FieldWeighting, MetadataField, N_FIELDS,
};

/// `|a ∩ b| / min(|a|, |b|)`; 0 when either set is empty.
pub fn overlap_min_normalized<T: Ord>(
    a: &std::collections::BTreeSet<T>,
    b: &std::collections::BTreeSet<T>,
) -> f64 {
    if a.is_empty() || b.is_empty() {
        return 0.0;
    }
    let (small, large) = if a.len() <= b.len() { (a, b) } else { (b, a) };
    let shared = small.iter().filter(|x| large.contains(x)).count();
    shared as f64 / small.len() as f64
}

/// Intersection size of two sorted, deduplicated slices.
pub(crate) fn sorted_intersection_count(a: &[u32], b: &[u32]) -> usize {
    let mut count = 0;
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                count += 1;
                i += 1;
                j += 1;
            }
        }
    }
    count
}

/// `|a ∩ b| / min(|a|, |b|)` over sorted id slices.
pub(crate) fn overlap_min_sorted(a: &[u32], b: &[u32]) -> f64 {
    if a.is_empty() || b.is_empty() {
        return 0.0;
    }
    sorted_intersection_count(a, b) as f64 / a.len().min(b.len()) as f64
}

/// A document as a token multiset.
pub type TokenCounts<T> = BTreeMap<T, usize>;

pub fn token_counts<T: Ord, I: IntoIterator<Item = T>>(tokens: I) -> TokenCounts<T> {
    let mut counts = TokenCounts::new();
    for token in tokens {
        *counts.entry(token).or_insert(0) += 1;
    }
    counts
}

/// Inverse document frequency over a fixed document collection, smoothed
/// so every token keeps positive weight: `idf(t) = ln(N / df(t)) + 1`.
/// Tokens outside the collection fall back to the maximum rarity
/// `ln(N) + 1`.
#[derive(Debug, Clone)]
pub struct IdfTable<T: Ord> {
    n_docs: usize,
    idf: BTreeMap<T, f64>,
}

impl<T: Ord + Clone> IdfTable<T> {
    pub fn from_docs<'a, I>(docs: I) -> Self
    where
        T: 'a,
        I: IntoIterator<Item = &'a TokenCounts<T>>,
    {
        let mut df: BTreeMap<T, usize> = BTreeMap::new();
        let mut n_docs = 0;
        for doc in docs {
            n_docs += 1;
            for token in doc.keys() {
                *df.entry(token.clone()).or_insert(0) += 1;
            }
        }
        let idf = df
            .into_iter()
            .map(|(token, df)| (token, (n_docs as f64 / df as f64).ln() + 1.0))
            .collect();
        IdfTable { n_docs, idf }
    }

    pub fn idf(&self, token: &T) -> f64 {
        self.idf
            .get(token)
            .copied()
            .unwrap_or_else(|| (self.n_docs.max(1) as f64).ln() + 1.0)
    }
}

/// Cosine similarity of the two documents' TF-IDF vectors (raw term counts
/// times `idf`). 0 when either document is empty or has no weight.
pub fn tfidf_cosine<T: Ord + Clone>(
    doc_a: &TokenCounts<T>,
    doc_b: &TokenCounts<T>,
    idf: &IdfTable<T>,
) -> f64 {
    if doc_a.is_empty() || doc_b.is_empty() {
        return 0.0;
    }
    let norm = |doc: &TokenCounts<T>| {
        doc.iter()
            .map(|(t, &c)| {
                let w = c as f64 * idf.idf(t);
                w * w
            })
            .sum::<f64>()
            .sqrt()
    };
    let dot: f64 = doc_a
        .iter()
        .filter_map(|(t, &ca)| doc_b.get(t).map(|&cb| ca as f64 * cb as f64 * idf.idf(t).powi(2)))
        .sum();
    let (na, nb) = (norm(doc_a), norm(doc_b));
    if na == 0.0 || nb == 0.0 {
        0.0
    } else {
        (dot / (na * nb)).clamp(0.0, 1.0)
    }
}
