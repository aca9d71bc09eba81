//! Domain types, corpus ingestion, and the cross-reference indexes the
//! similarity primitives are built on.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

mod io;
mod text;

pub use io::{ingest_corpus, write_corpus, IngestOutcome};
pub use text::{canonicalize as canonicalize_parts, first_initial, normalize, tokenize};

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: malformed record: {message}")]
    MalformedLine {
        path: String,
        line: usize,
        message: String,
    },
    #[error("{path}:{line}: duplicate paper_id {id:?}")]
    DuplicatePaper {
        path: String,
        line: usize,
        id: String,
    },
    #[error("{path}:{line}: duplicate mention_id {id:?}")]
    DuplicateMention {
        path: String,
        line: usize,
        id: String,
    },
    #[error("mentions reference unknown papers: {}", offenders.join(", "))]
    DanglingPaperRefs { offenders: Vec<String> },
    #[error("empty surname (input {input:?})")]
    EmptySurname { input: String },
    #[error("invalid mention {mention_id}: {reason}")]
    InvalidMention { mention_id: String, reason: String },
}

/// A `(country, city)` pair, normalized at ingestion.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Address {
    pub country: String,
    pub city: String,
}

impl Address {
    pub fn new(country: &str, city: &str) -> Self {
        Address {
            country: text::normalize(country),
            city: text::normalize(city),
        }
    }
}

/// One publication's metadata.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PaperRecord {
    pub paper_id: String,
    pub title_tokens: Vec<String>,
    pub abstract_tokens: Vec<String>,
    pub journal: String,
    pub year: i32,
    pub subject_categories: BTreeSet<String>,
    pub keywords: BTreeSet<String>,
    /// Cited works: in-corpus paper ids or opaque external keys.
    /// Never contains this paper's own id.
    pub references: BTreeSet<String>,
    pub grant_numbers: BTreeSet<String>,
    /// Addresses on the publication not linked to a specific author.
    pub pub_addresses: BTreeSet<Address>,
}

/// One (author, paper) occurrence.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AuthorMention {
    pub mention_id: String,
    pub paper_id: String,
    pub surname: String,
    /// May be empty (initial-only records).
    pub first_name: String,
    /// All initials, first included, as normalized single letters.
    pub initials: Vec<char>,
    pub email: Option<String>,
    pub author_addresses: BTreeSet<Address>,
    /// Ground-truth author identity; mentions without one are kept but
    /// excluded from evaluation.
    pub gold_author_id: Option<String>,
}

impl AuthorMention {
    /// The canonical name key this mention blocks under. Falls back to the
    /// first entry of `initials` when the first name is empty.
    pub fn canonical_name(&self) -> Result<CanonicalName, CorpusError> {
        let key = if text::first_initial(&self.first_name).is_some() {
            text::canonicalize(&self.surname, &self.first_name)?
        } else {
            let initial = self.initials.first().map(|c| c.to_string()).unwrap_or_default();
            text::canonicalize(&self.surname, &initial)?
        };
        Ok(CanonicalName(key))
    }
}

/// Lowercase, diacritic-stripped `"surname, first-initial"` key.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct CanonicalName(String);

impl CanonicalName {
    pub fn canonicalize(surname: &str, first_name: &str) -> Result<Self, CorpusError> {
        text::canonicalize(surname, first_name).map(CanonicalName)
    }

    pub fn key(&self) -> &str {
        &self.0
    }

    /// The initial component; `None` for flagged empty-initial keys.
    pub fn initial(&self) -> Option<char> {
        self.0.rsplit(", ").next().and_then(|s| s.chars().next())
    }
}

impl std::fmt::Display for CanonicalName {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

/// Inverse of the reference lists: paper id to the set of in-corpus papers
/// citing it. `q ∈ citers[p]` iff `p ∈ references(q)`.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CitationIndex {
    citers: BTreeMap<String, BTreeSet<String>>,
}

impl CitationIndex {
    fn build(papers: &BTreeMap<String, PaperRecord>) -> Self {
        let mut citers: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();
        for (id, paper) in papers {
            for reference in &paper.references {
                if papers.contains_key(reference) {
                    citers.entry(reference.clone()).or_default().insert(id.clone());
                }
            }
        }
        CitationIndex { citers }
    }

    pub fn citers_of(&self, paper_id: &str) -> Option<&BTreeSet<String>> {
        self.citers.get(paper_id)
    }
}

/// Per-mention set of canonical name keys of the *other* mentions on the
/// same paper. A mention's own key never appears in its set.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CoauthorView {
    coauthors: BTreeMap<String, BTreeSet<CanonicalName>>,
}

impl CoauthorView {
    fn build(
        mentions: &BTreeMap<String, AuthorMention>,
        paper_mentions: &BTreeMap<String, Vec<String>>,
    ) -> Result<Self, CorpusError> {
        let mut keys: BTreeMap<&str, CanonicalName> = BTreeMap::new();
        for (id, mention) in mentions {
            keys.insert(id, mention.canonical_name()?);
        }
        let mut coauthors: BTreeMap<String, BTreeSet<CanonicalName>> = BTreeMap::new();
        for ids in paper_mentions.values() {
            for id in ids {
                let own = &keys[id.as_str()];
                let set: BTreeSet<CanonicalName> = ids
                    .iter()
                    .filter(|other| *other != id)
                    .map(|other| keys[other.as_str()].clone())
                    .filter(|key| key != own)
                    .collect();
                coauthors.insert(id.clone(), set);
            }
        }
        Ok(CoauthorView { coauthors })
    }

    pub fn coauthors_of(&self, mention_id: &str) -> Option<&BTreeSet<CanonicalName>> {
        self.coauthors.get(mention_id)
    }
}

/// An ingested corpus. Immutable after construction; all lookups are
/// read-only, so any number of workers may share it.
#[derive(Debug, Clone, PartialEq)]
pub struct Corpus {
    papers: BTreeMap<String, PaperRecord>,
    mentions: BTreeMap<String, AuthorMention>,
    paper_mentions: BTreeMap<String, Vec<String>>,
    citations: CitationIndex,
    coauthor_view: CoauthorView,
}

impl Corpus {
    /// Builds a corpus from validated parts, constructing all indexes.
    /// Self-references are stripped to uphold the reference-list invariant;
    /// fails if a mention references a missing paper.
    pub fn from_parts(
        papers: Vec<PaperRecord>,
        mentions: Vec<AuthorMention>,
    ) -> Result<Self, CorpusError> {
        let papers: BTreeMap<String, PaperRecord> = papers
            .into_iter()
            .map(|mut p| {
                p.references.remove(&p.paper_id);
                (p.paper_id.clone(), p)
            })
            .collect();
        let mut mention_map: BTreeMap<String, AuthorMention> = BTreeMap::new();
        let mut dangling = Vec::new();
        for mention in mentions {
            if !papers.contains_key(&mention.paper_id) {
                dangling.push(mention.mention_id.clone());
            }
            mention_map.insert(mention.mention_id.clone(), mention);
        }
        if !dangling.is_empty() {
            dangling.sort();
            return Err(CorpusError::DanglingPaperRefs { offenders: dangling });
        }
        let mut paper_mentions: BTreeMap<String, Vec<String>> = BTreeMap::new();
        for (id, mention) in &mention_map {
            paper_mentions.entry(mention.paper_id.clone()).or_default().push(id.clone());
        }
        let citations = CitationIndex::build(&papers);
        let coauthor_view = CoauthorView::build(&mention_map, &paper_mentions)?;
        Ok(Corpus {
            papers,
            mentions: mention_map,
            paper_mentions,
            citations,
            coauthor_view,
        })
    }

    pub fn papers(&self) -> impl Iterator<Item = &PaperRecord> {
        self.papers.values()
    }

    pub fn mentions(&self) -> impl Iterator<Item = &AuthorMention> {
        self.mentions.values()
    }

    pub fn n_papers(&self) -> usize {
        self.papers.len()
    }

    pub fn n_mentions(&self) -> usize {
        self.mentions.len()
    }

    pub fn paper(&self, paper_id: &str) -> Option<&PaperRecord> {
        self.papers.get(paper_id)
    }

    pub fn mention(&self, mention_id: &str) -> Option<&AuthorMention> {
        self.mentions.get(mention_id)
    }

    pub fn contains_paper(&self, paper_id: &str) -> bool {
        self.papers.contains_key(paper_id)
    }

    /// In-corpus papers citing `paper_id` (the C_i of the citation-based
    /// similarity), empty if none.
    pub fn citers_of(&self, paper_id: &str) -> &BTreeSet<String> {
        static EMPTY: BTreeSet<String> = BTreeSet::new();
        self.citations.citers_of(paper_id).unwrap_or(&EMPTY)
    }

    /// Canonical name keys of the other mentions on this mention's paper.
    pub fn coauthor_keys(&self, mention_id: &str) -> &BTreeSet<CanonicalName> {
        static EMPTY: BTreeSet<CanonicalName> = BTreeSet::new();
        self.coauthor_view.coauthors_of(mention_id).unwrap_or(&EMPTY)
    }

    pub fn mentions_of_paper(&self, paper_id: &str) -> &[String] {
        self.paper_mentions.get(paper_id).map(Vec::as_slice).unwrap_or(&[])
    }
}
