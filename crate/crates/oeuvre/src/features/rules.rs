//! Rule-based pair scoring after Caron and van Eck (2014): one integer score
//! per matching rule, added up over all fields. Tiered fields (initials,
//! co-authors, bibliographic coupling, co-citation) contribute exactly one
//! tier per pair.

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use crate::corpus::{normalize, AuthorMention, Corpus};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("config line {line}: expected `key = integer`, got {text:?}")]
    BadLine { line: usize, text: String },
    #[error("config line {line}: unknown key {key:?}")]
    UnknownKey { line: usize, key: String },
}

/// Scores for the rule-based similarity, one entry per rule row.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RuleScoreTable {
    pub email_exact: i32,
    pub initials_two: i32,
    pub initials_more: i32,
    pub initials_conflict: i32,
    pub first_name_general: i32,
    pub first_name_nongeneral: i32,
    pub author_address: i32,
    pub coauthor_1: i32,
    pub coauthor_2: i32,
    pub coauthor_gt2: i32,
    pub grant: i32,
    pub pub_address: i32,
    pub subject_category: i32,
    pub journal: i32,
    pub self_citation: i32,
    /// Scores for exactly 1..=4 shared cited references.
    pub coupling: [i32; 4],
    pub coupling_gt4: i32,
    /// Scores for exactly 1..=4 shared citing papers.
    pub cocitation: [i32; 4],
    pub cocitation_gt4: i32,
}

impl Default for RuleScoreTable {
    fn default() -> Self {
        RuleScoreTable {
            email_exact: 100,
            initials_two: 5,
            initials_more: 10,
            initials_conflict: -10,
            first_name_general: 3,
            first_name_nongeneral: 6,
            author_address: 4,
            coauthor_1: 4,
            coauthor_2: 7,
            coauthor_gt2: 10,
            grant: 10,
            pub_address: 2,
            subject_category: 3,
            journal: 6,
            self_citation: 10,
            coupling: [2, 4, 6, 8],
            coupling_gt4: 10,
            cocitation: [2, 3, 4, 5],
            cocitation_gt4: 6,
        }
    }
}

impl RuleScoreTable {
    fn set(&mut self, key: &str, value: i32) -> bool {
        match key {
            "email_exact" => self.email_exact = value,
            "initials_two" => self.initials_two = value,
            "initials_more" => self.initials_more = value,
            "initials_conflict" => self.initials_conflict = value,
            "first_name_general" => self.first_name_general = value,
            "first_name_nongeneral" => self.first_name_nongeneral = value,
            "author_address" => self.author_address = value,
            "coauthor_1" => self.coauthor_1 = value,
            "coauthor_2" => self.coauthor_2 = value,
            "coauthor_gt2" => self.coauthor_gt2 = value,
            "grant" => self.grant = value,
            "pub_address" => self.pub_address = value,
            "subject_category" => self.subject_category = value,
            "journal" => self.journal = value,
            "self_citation" => self.self_citation = value,
            "coupling_1" => self.coupling[0] = value,
            "coupling_2" => self.coupling[1] = value,
            "coupling_3" => self.coupling[2] = value,
            "coupling_4" => self.coupling[3] = value,
            "coupling_gt4" => self.coupling_gt4 = value,
            "cocitation_1" => self.cocitation[0] = value,
            "cocitation_2" => self.cocitation[1] = value,
            "cocitation_3" => self.cocitation[2] = value,
            "cocitation_4" => self.cocitation[3] = value,
            "cocitation_gt4" => self.cocitation_gt4 = value,
            _ => return false,
        }
        true
    }

    fn tier(count: usize, exact: &[i32; 4], beyond: i32) -> i32 {
        match count {
            0 => 0,
            1..=4 => exact[count - 1],
            _ => beyond,
        }
    }
}

/// Rule table plus the general-name threshold, loaded from a flat
/// `key = integer` config file. `#` starts a comment.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FeatureConfig {
    pub table: RuleScoreTable,
    /// A first name is "general" when it occurs with at least this many
    /// distinct surnames corpus-wide.
    pub general_name_min_surnames: usize,
}

impl Default for FeatureConfig {
    fn default() -> Self {
        FeatureConfig {
            table: RuleScoreTable::default(),
            general_name_min_surnames: 20,
        }
    }
}

impl FeatureConfig {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut config = FeatureConfig::default();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let trimmed = raw.split('#').next().unwrap_or("").trim();
            if trimmed.is_empty() {
                continue;
            }
            let bad = || ConfigError::BadLine {
                line,
                text: raw.to_string(),
            };
            let (key, value) = trimmed.split_once('=').ok_or_else(bad)?;
            let key = key.trim();
            let value: i64 = value.trim().parse().map_err(|_| bad())?;
            if key == "general_name_min_surnames" {
                config.general_name_min_surnames = usize::try_from(value).map_err(|_| bad())?;
            } else if !config.table.set(key, value as i32) {
                return Err(ConfigError::UnknownKey {
                    line,
                    key: key.to_string(),
                });
            }
        }
        Ok(config)
    }
}

/// Normalized first names considered too common to be a useful signal.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct GeneralNameList {
    names: BTreeSet<String>,
}

impl GeneralNameList {
    pub fn from_names<I: IntoIterator<Item = String>>(names: I) -> Self {
        GeneralNameList {
            names: names.into_iter().collect(),
        }
    }

    /// Expects an already normalized name.
    pub fn contains(&self, normalized_name: &str) -> bool {
        self.names.contains(normalized_name)
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &str> {
        self.names.iter().map(String::as_str)
    }
}

/// Derives the general-name list from the corpus: a first name is general
/// iff it occurs with at least `min_surnames` distinct surnames.
pub fn build_general_names(corpus: &Corpus, min_surnames: usize) -> GeneralNameList {
    let mut surnames_per_name: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();
    for mention in corpus.mentions() {
        let first = normalize(&mention.first_name);
        if first.is_empty() {
            continue;
        }
        surnames_per_name
            .entry(first)
            .or_default()
            .insert(normalize(&mention.surname));
    }
    GeneralNameList {
        names: surnames_per_name
            .into_iter()
            .filter(|(_, surnames)| surnames.len() >= min_surnames)
            .map(|(name, _)| name)
            .collect(),
    }
}

fn initials_score(a: &[char], b: &[char], table: &RuleScoreTable) -> i32 {
    // the tier only applies when a side has more than one initial
    if a.len() <= 1 && b.len() <= 1 {
        return 0;
    }
    let shared = a.len().min(b.len());
    if a[..shared] != b[..shared] {
        return table.initials_conflict;
    }
    match shared {
        2 => table.initials_two,
        n if n > 2 => table.initials_more,
        _ => 0,
    }
}

/// Sum of the scores of all matching rules for a pair of mentions from the
/// same block. Missing fields contribute nothing; conflicting initials
/// contribute a negative score.
pub fn rule_score(
    m1: &AuthorMention,
    m2: &AuthorMention,
    corpus: &Corpus,
    table: &RuleScoreTable,
    names: &GeneralNameList,
) -> i32 {
    let mut score = 0;

    if let (Some(e1), Some(e2)) = (&m1.email, &m2.email) {
        if e1 == e2 {
            score += table.email_exact;
        }
    }

    score += initials_score(&m1.initials, &m2.initials, table);

    let f1 = normalize(&m1.first_name);
    let f2 = normalize(&m2.first_name);
    if !f1.is_empty() && f1 == f2 {
        score += if names.contains(&f1) {
            table.first_name_general
        } else {
            table.first_name_nongeneral
        };
    }

    if m1.author_addresses.intersection(&m2.author_addresses).next().is_some() {
        score += table.author_address;
    }

    let shared_coauthors = corpus
        .coauthor_keys(&m1.mention_id)
        .intersection(corpus.coauthor_keys(&m2.mention_id))
        .count();
    score += match shared_coauthors {
        0 => 0,
        1 => table.coauthor_1,
        2 => table.coauthor_2,
        _ => table.coauthor_gt2,
    };

    let (p1, p2) = match (corpus.paper(&m1.paper_id), corpus.paper(&m2.paper_id)) {
        (Some(p1), Some(p2)) => (p1, p2),
        _ => return score,
    };

    if p1.grant_numbers.intersection(&p2.grant_numbers).next().is_some() {
        score += table.grant;
    }
    if p1.pub_addresses.intersection(&p2.pub_addresses).next().is_some() {
        score += table.pub_address;
    }
    if p1
        .subject_categories
        .intersection(&p2.subject_categories)
        .next()
        .is_some()
    {
        score += table.subject_category;
    }
    if !p1.journal.is_empty() && p1.journal == p2.journal {
        score += table.journal;
    }
    if p1.references.contains(&p2.paper_id) || p2.references.contains(&p1.paper_id) {
        score += table.self_citation;
    }

    let coupling = p1.references.intersection(&p2.references).count();
    score += RuleScoreTable::tier(coupling, &table.coupling, table.coupling_gt4);

    let cocitation = corpus
        .citers_of(&p1.paper_id)
        .intersection(corpus.citers_of(&p2.paper_id))
        .count();
    score += RuleScoreTable::tier(cocitation, &table.cocitation, table.cocitation_gt4);

    score
}
