//! Specificity weighting: rare shared metadata counts for more than common
//! shared metadata.
//!
//! Token weights are inverse document frequencies over one name block:
//! `weight(t) = ln(carriers / df(t))`, where `carriers` is the number of
//! mentions in the block that have the field at all. A token present on
//! every carrier weighs 0. Two field bundles score
//! `Σ weight(shared) / min(Σ weight(a), Σ weight(b))`, so a bundle fully
//! contained in another scores 1, and the final similarity is the mean over
//! the fields present on at least one side.

/// The metadata fields compared by the specificity-based clusterer.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MetadataField {
    Title,
    Abstract,
    Affiliation,
    SubjectCategory,
    Keyword,
    Coauthor,
    CitedAuthor,
    Email,
}

pub const N_FIELDS: usize = 8;

impl MetadataField {
    pub const ALL: [MetadataField; N_FIELDS] = [
        MetadataField::Title,
        MetadataField::Abstract,
        MetadataField::Affiliation,
        MetadataField::SubjectCategory,
        MetadataField::Keyword,
        MetadataField::Coauthor,
        MetadataField::CitedAuthor,
        MetadataField::Email,
    ];

    pub fn index(self) -> usize {
        match self {
            MetadataField::Title => 0,
            MetadataField::Abstract => 1,
            MetadataField::Affiliation => 2,
            MetadataField::SubjectCategory => 3,
            MetadataField::Keyword => 4,
            MetadataField::Coauthor => 5,
            MetadataField::CitedAuthor => 6,
            MetadataField::Email => 7,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            MetadataField::Title => "title",
            MetadataField::Abstract => "abstract",
            MetadataField::Affiliation => "affiliation",
            MetadataField::SubjectCategory => "subject_category",
            MetadataField::Keyword => "keyword",
            MetadataField::Coauthor => "coauthor",
            MetadataField::CitedAuthor => "cited_author",
            MetadataField::Email => "email",
        }
    }
}

/// Per-field token weights over one block. Tokens are interned ids scoped
/// to the field.
#[derive(Debug, Clone)]
pub struct FieldWeighting {
    n_carriers: usize,
    weights: Vec<f64>,
}

impl FieldWeighting {
    /// Builds weights from one token set per mention (sorted, deduplicated).
    /// Mentions with an empty set do not carry the field.
    pub fn from_token_sets(sets: &[Vec<u32>], vocab_size: usize) -> Self {
        let mut df = vec![0usize; vocab_size];
        let mut n_carriers = 0;
        for set in sets {
            if set.is_empty() {
                continue;
            }
            n_carriers += 1;
            for &token in set {
                df[token as usize] += 1;
            }
        }
        let weights = df
            .into_iter()
            .map(|df| if df == 0 { 0.0 } else { (n_carriers as f64 / df as f64).ln() })
            .collect();
        FieldWeighting { n_carriers, weights }
    }

    pub fn n_carriers(&self) -> usize {
        self.n_carriers
    }

    pub fn weight(&self, token: u32) -> f64 {
        self.weights.get(token as usize).copied().unwrap_or(0.0)
    }

    pub fn total(&self, tokens: &[u32]) -> f64 {
        tokens.iter().map(|&t| self.weight(t)).sum()
    }
}

/// Union-of-member-tokens bundles for one cluster, one sorted id list per
/// field.
#[derive(Debug, Clone, Default)]
pub struct FieldBundles {
    pub fields: [Vec<u32>; N_FIELDS],
}

impl FieldBundles {
    pub fn totals(&self, weightings: &[FieldWeighting; N_FIELDS]) -> [f64; N_FIELDS] {
        std::array::from_fn(|f| weightings[f].total(&self.fields[f]))
    }

    /// Sorted-set union per field.
    pub fn union(&self, other: &FieldBundles) -> FieldBundles {
        let fields = std::array::from_fn(|f| {
            let (a, b) = (&self.fields[f], &other.fields[f]);
            let mut out = Vec::with_capacity(a.len() + b.len());
            let (mut i, mut j) = (0, 0);
            while i < a.len() && j < b.len() {
                match a[i].cmp(&b[j]) {
                    std::cmp::Ordering::Less => {
                        out.push(a[i]);
                        i += 1;
                    }
                    std::cmp::Ordering::Greater => {
                        out.push(b[j]);
                        j += 1;
                    }
                    std::cmp::Ordering::Equal => {
                        out.push(a[i]);
                        i += 1;
                        j += 1;
                    }
                }
            }
            out.extend_from_slice(&a[i..]);
            out.extend_from_slice(&b[j..]);
            out
        });
        FieldBundles { fields }
    }
}

/// Weight of the shared tokens over the lighter bundle's total weight,
/// clamped to `[0, 1]`. `None` when the field is absent on both sides
/// (excluded from the field mean); 0 when only one side carries it or no
/// positive weight is shared.
pub fn specificity_field_score(
    a: &[u32],
    a_total: f64,
    b: &[u32],
    b_total: f64,
    weighting: &FieldWeighting,
) -> Option<f64> {
    if a.is_empty() && b.is_empty() {
        return None;
    }
    let min_total = a_total.min(b_total);
    if min_total <= 0.0 {
        return Some(0.0);
    }
    let mut shared = 0.0;
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                shared += weighting.weight(a[i]);
                i += 1;
                j += 1;
            }
        }
    }
    Some((shared / min_total).clamp(0.0, 1.0))
}

/// Mean of the per-field scores over the fields present on at least one
/// side; 0 when no field is present at all.
pub fn specificity_score(
    a: &FieldBundles,
    b: &FieldBundles,
    weightings: &[FieldWeighting; N_FIELDS],
) -> f64 {
    let a_totals = a.totals(weightings);
    let b_totals = b.totals(weightings);
    specificity_score_with_totals(a, &a_totals, b, &b_totals, weightings)
}

/// As [`specificity_score`] but with the bundle totals precomputed; the
/// merge loop caches them per cluster.
pub fn specificity_score_with_totals(
    a: &FieldBundles,
    a_totals: &[f64; N_FIELDS],
    b: &FieldBundles,
    b_totals: &[f64; N_FIELDS],
    weightings: &[FieldWeighting; N_FIELDS],
) -> f64 {
    let mut sum = 0.0;
    let mut present = 0;
    for f in 0..N_FIELDS {
        if let Some(score) = specificity_field_score(
            &a.fields[f],
            a_totals[f],
            &b.fields[f],
            b_totals[f],
            &weightings[f],
        ) {
            sum += score;
            present += 1;
        }
    }
    if present == 0 {
        0.0
    } else {
        sum / present as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::{BTreeMap, BTreeSet};

    fn weighting(sets: &[&[u32]], vocab: usize) -> FieldWeighting {
        let sets: Vec<Vec<u32>> = sets.iter().map(|s| s.to_vec()).collect();
        FieldWeighting::from_token_sets(&sets, vocab)
    }

    #[test]
    fn weight_is_zero_for_universal_tokens_and_decreasing_in_df() {
        // token 0 on all three carriers, token 1 on two, token 2 on one
        let w = weighting(&[&[0, 1, 2], &[0, 1], &[0]], 3);
        assert_eq!(w.weight(0), 0.0);
        assert!(w.weight(1) > 0.0);
        assert!(w.weight(2) > w.weight(1));
        assert_eq!(w.n_carriers(), 3);
    }

    #[test]
    fn empty_sets_are_not_carriers() {
        let w = weighting(&[&[0], &[], &[0, 1]], 2);
        assert_eq!(w.n_carriers(), 2);
        assert_eq!(w.weight(0), 0.0); // on both carriers
        assert!((w.weight(1) - (2.0f64).ln()).abs() < 1e-12);
    }

    #[test]
    fn identical_bundles_score_one_on_every_present_field() {
        let w = weighting(&[&[0, 1], &[1], &[2]], 3);
        let score = specificity_field_score(&[0, 1], w.total(&[0, 1]), &[0, 1], w.total(&[0, 1]), &w);
        assert_eq!(score, Some(1.0));

        let mut a = FieldBundles::default();
        a.fields[MetadataField::Title.index()] = vec![0, 1];
        a.fields[MetadataField::Email.index()] = vec![2];
        let weightings: [FieldWeighting; N_FIELDS] = std::array::from_fn(|f| {
            if f == MetadataField::Title.index() {
                weighting(&[&[0, 1], &[1], &[2]], 3)
            } else if f == MetadataField::Email.index() {
                weighting(&[&[2], &[0]], 3)
            } else {
                weighting(&[], 0)
            }
        });
        assert_eq!(specificity_score(&a, &a, &weightings), 1.0);
    }

    #[test]
    fn zero_weight_share_scores_zero() {
        // token 0 is on every carrier (weight 0); bundles share only it
        let w = weighting(&[&[0, 1], &[0, 2], &[0]], 3);
        let a = [0, 1];
        let b = [0, 2];
        let score = specificity_field_score(&a, w.total(&a), &b, w.total(&b), &w);
        assert_eq!(score, Some(0.0));
    }

    #[test]
    fn absent_on_both_sides_is_excluded() {
        let w = weighting(&[&[0]], 1);
        assert_eq!(specificity_field_score(&[], 0.0, &[], 0.0, &w), None);
        // absent on one side only: included as zero
        assert_eq!(specificity_field_score(&[0], w.total(&[0]), &[], 0.0, &w), Some(0.0));
    }

    /// Independent reimplementation over string tokens with set/map
    /// arithmetic, used as a second route for the same definition.
    fn specificity_oracle(
        mention_fields: &[BTreeMap<&str, BTreeSet<&str>>],
        cluster_a: &[usize],
        cluster_b: &[usize],
        field_names: &[&str],
    ) -> f64 {
        let mut scores = Vec::new();
        for field in field_names {
            let carriers: Vec<&BTreeSet<&str>> = mention_fields
                .iter()
                .filter_map(|m| m.get(field))
                .filter(|s| !s.is_empty())
                .collect();
            let n_carriers = carriers.len() as f64;
            let weight = |token: &str| {
                let df = carriers.iter().filter(|s| s.contains(token)).count() as f64;
                if df == 0.0 {
                    0.0
                } else {
                    (n_carriers / df).ln()
                }
            };
            let bundle = |members: &[usize]| -> BTreeSet<&str> {
                members
                    .iter()
                    .filter_map(|&m| mention_fields[m].get(field))
                    .flatten()
                    .copied()
                    .collect()
            };
            let (ba, bb) = (bundle(cluster_a), bundle(cluster_b));
            if ba.is_empty() && bb.is_empty() {
                continue;
            }
            let total_a: f64 = ba.iter().map(|t| weight(t)).sum();
            let total_b: f64 = bb.iter().map(|t| weight(t)).sum();
            let min_total = total_a.min(total_b);
            if min_total <= 0.0 {
                scores.push(0.0);
                continue;
            }
            let shared: f64 = ba.intersection(&bb).map(|t| weight(t)).sum();
            scores.push((shared / min_total).clamp(0.0, 1.0));
        }
        if scores.is_empty() {
            0.0
        } else {
            scores.iter().sum::<f64>() / scores.len() as f64
        }
    }

    #[test]
    fn five_mention_toy_matches_independent_reimplementation() {
        // five mentions, three fields in use; clusters {0,1} vs {2,3,4}
        let m = |pairs: &[(&'static str, &[&'static str])]| -> BTreeMap<&str, BTreeSet<&str>> {
            pairs.iter().map(|(f, ts)| (*f, ts.iter().copied().collect())).collect()
        };
        let mentions = vec![
            m(&[("title", &["social", "capital"]), ("keyword", &["networks"]), ("email", &["a@x"])]),
            m(&[("title", &["social", "theory"]), ("keyword", &["networks", "capital"])]),
            m(&[("title", &["matthew", "effect"]), ("keyword", &["science"]), ("email", &["b@y"])]),
            m(&[("title", &["effect", "social"]), ("keyword", &["science", "networks"])]),
            m(&[("title", &["pension", "plans"])]),
        ];
        let field_names = ["title", "keyword", "email"];

        // interned route
        let mut interner: BTreeMap<(usize, &str), u32> = BTreeMap::new();
        let mut vocab = [0u32; N_FIELDS];
        let mut sets: Vec<[Vec<u32>; N_FIELDS]> = vec![Default::default(); 5];
        for (mi, fields) in mentions.iter().enumerate() {
            for (fi, fname) in field_names.iter().enumerate() {
                if let Some(tokens) = fields.get(fname) {
                    for t in tokens {
                        let id = *interner.entry((fi, t)).or_insert_with(|| {
                            let id = vocab[fi];
                            vocab[fi] += 1;
                            id
                        });
                        sets[mi][fi].push(id);
                    }
                    sets[mi][fi].sort_unstable();
                    sets[mi][fi].dedup();
                }
            }
        }
        let weightings: [FieldWeighting; N_FIELDS] = std::array::from_fn(|f| {
            let per_mention: Vec<Vec<u32>> = sets.iter().map(|s| s[f].clone()).collect();
            FieldWeighting::from_token_sets(&per_mention, vocab[f] as usize)
        });
        let bundle = |members: &[usize]| {
            let mut b = FieldBundles::default();
            for &mi in members {
                for f in 0..N_FIELDS {
                    b.fields[f].extend_from_slice(&sets[mi][f]);
                }
            }
            for f in 0..N_FIELDS {
                b.fields[f].sort_unstable();
                b.fields[f].dedup();
            }
            b
        };
        let got = specificity_score(&bundle(&[0, 1]), &bundle(&[2, 3, 4]), &weightings);
        let expected = specificity_oracle(&mentions, &[0, 1], &[2, 3, 4], &field_names);
        assert!((got - expected).abs() < 1e-12, "got {got}, oracle {expected}");
        assert!(got > 0.0 && got < 1.0);
    }
}
