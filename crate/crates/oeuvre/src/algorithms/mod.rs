//! The disambiguation strategies: each maps one name block to a clustering
//! of its mentions.
//!
//! All strategies work off a [`BlockContext`], a compact per-block view of
//! the corpus with every string field interned to dense ids and every set
//! stored as a sorted id list. Building it costs one pass over the block;
//! afterwards pair scoring is integer comparisons and sorted-slice
//! intersections, which is what makes all-pairs scoring feasible for blocks
//! with thousands of mentions.

use std::collections::HashMap;

use thiserror::Error;

use crate::blocking::Block;
use crate::clustering::{ClusterError, Clustering, MergeTrace};
use crate::corpus::{normalize, tokenize, AuthorMention, Corpus, CorpusError};
use crate::features::GeneralNameList;

pub(crate) mod backes;
pub(crate) mod baseline;
pub(crate) mod caron;
pub(crate) mod cota;
mod params;
pub(crate) mod schulz;

pub use backes::{field_weights, run_backes, BackesParams};
pub use baseline::run_baseline;
pub use caron::{run_caron, run_caron_with_threshold, scored_edges, CaronParams};
pub use cota::{run_cota, CotaParams};
pub use params::{AlgorithmConfig, AlgorithmKind, BackesOverride, CaronOverride, ParamsError};
pub use schulz::{
    cluster_similarity_schulz, mention_similarity_schulz, run_schulz, SchulzParams,
};

#[derive(Debug, Error)]
pub enum AlgoError {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error(transparent)]
    Cluster(#[from] ClusterError),
}

/// String-to-dense-id interner, one per token namespace.
#[derive(Debug, Default)]
pub struct Interner {
    map: HashMap<String, u32>,
    names: Vec<String>,
}

impl Interner {
    pub fn intern(&mut self, token: &str) -> u32 {
        if let Some(&id) = self.map.get(token) {
            return id;
        }
        let id = self.names.len() as u32;
        self.map.insert(token.to_string(), id);
        self.names.push(token.to_string());
        id
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn name(&self, id: u32) -> &str {
        &self.names[id as usize]
    }
}

fn sorted_set(mut ids: Vec<u32>) -> Vec<u32> {
    ids.sort_unstable();
    ids.dedup();
    ids
}

/// Per-mention interned fields for one block, indexed in block order
/// (mention ids ascending).
pub struct BlockContext<'a> {
    pub corpus: &'a Corpus,
    pub block: &'a Block,
    pub mentions: Vec<&'a AuthorMention>,

    pub emails: Vec<Option<u32>>,
    /// The email as a zero-or-one-token set, for the specificity fields.
    pub email_field: Vec<Vec<u32>>,
    pub initials: Vec<&'a [char]>,
    pub first_names: Vec<Option<u32>>,
    pub first_is_general: Vec<bool>,
    pub author_addrs: Vec<Vec<u32>>,
    pub grants: Vec<Vec<u32>>,
    pub pub_addrs: Vec<Vec<u32>>,
    pub categories: Vec<Vec<u32>>,
    pub journals: Vec<Option<u32>>,

    /// Own paper, references, and citing papers share one key namespace.
    pub own_paper: Vec<u32>,
    pub references: Vec<Vec<u32>>,
    pub citers: Vec<Vec<u32>>,
    pub coauthors: Vec<Vec<u32>>,

    /// Title and journal-name tokens in document order (with repeats), for
    /// TF-IDF documents.
    pub title_seq: Vec<Vec<u32>>,
    pub journal_seq: Vec<Vec<u32>>,
    /// Sorted-set views for the specificity fields.
    pub title_set: Vec<Vec<u32>>,
    pub abstract_set: Vec<Vec<u32>>,
    pub keyword_set: Vec<Vec<u32>>,
    pub cited_authors: Vec<Vec<u32>>,

    pub title_interner: Interner,
    pub abstract_interner: Interner,
    pub keyword_interner: Interner,
    pub author_addr_interner: Interner,
    pub category_interner: Interner,
    pub coauthor_interner: Interner,
    pub cited_author_interner: Interner,
    pub email_interner: Interner,
}

impl<'a> BlockContext<'a> {
    pub fn build(block: &'a Block, corpus: &'a Corpus, names: &GeneralNameList) -> Self {
        let n = block.mention_ids.len();
        let mut emails_in = Interner::default();
        let mut names_in = Interner::default();
        let mut author_addr_in = Interner::default();
        let mut pub_addr_in = Interner::default();
        let mut grants_in = Interner::default();
        let mut categories_in = Interner::default();
        let mut journals_in = Interner::default();
        let mut papers_in = Interner::default();
        let mut coauthors_in = Interner::default();
        let mut titles_in = Interner::default();
        let mut abstracts_in = Interner::default();
        let mut keywords_in = Interner::default();
        let mut journal_tokens_in = Interner::default();
        let mut cited_in = Interner::default();

        let mut ctx = BlockContext {
            corpus,
            block,
            mentions: Vec::with_capacity(n),
            emails: Vec::with_capacity(n),
            email_field: Vec::with_capacity(n),
            initials: Vec::with_capacity(n),
            first_names: Vec::with_capacity(n),
            first_is_general: Vec::with_capacity(n),
            author_addrs: Vec::with_capacity(n),
            grants: Vec::with_capacity(n),
            pub_addrs: Vec::with_capacity(n),
            categories: Vec::with_capacity(n),
            journals: Vec::with_capacity(n),
            own_paper: Vec::with_capacity(n),
            references: Vec::with_capacity(n),
            citers: Vec::with_capacity(n),
            coauthors: Vec::with_capacity(n),
            title_seq: Vec::with_capacity(n),
            journal_seq: Vec::with_capacity(n),
            title_set: Vec::with_capacity(n),
            abstract_set: Vec::with_capacity(n),
            keyword_set: Vec::with_capacity(n),
            cited_authors: Vec::with_capacity(n),
            title_interner: Interner::default(),
            abstract_interner: Interner::default(),
            keyword_interner: Interner::default(),
            author_addr_interner: Interner::default(),
            category_interner: Interner::default(),
            coauthor_interner: Interner::default(),
            cited_author_interner: Interner::default(),
            email_interner: Interner::default(),
        };

        for mention_id in &block.mention_ids {
            let mention = corpus
                .mention(mention_id)
                .expect("block mention must exist in the corpus");
            let paper = corpus
                .paper(&mention.paper_id)
                .expect("mention paper must exist in the corpus");

            ctx.mentions.push(mention);
            let email_id = mention.email.as_deref().map(|e| emails_in.intern(e));
            ctx.emails.push(email_id);
            ctx.email_field.push(email_id.into_iter().collect());
            ctx.initials.push(&mention.initials);
            let first = normalize(&mention.first_name);
            ctx.first_is_general.push(!first.is_empty() && names.contains(&first));
            ctx.first_names
                .push(if first.is_empty() { None } else { Some(names_in.intern(&first)) });
            ctx.author_addrs.push(sorted_set(
                mention
                    .author_addresses
                    .iter()
                    .map(|a| author_addr_in.intern(&format!("{}|{}", a.country, a.city)))
                    .collect(),
            ));
            ctx.grants
                .push(sorted_set(paper.grant_numbers.iter().map(|g| grants_in.intern(g)).collect()));
            ctx.pub_addrs.push(sorted_set(
                paper
                    .pub_addresses
                    .iter()
                    .map(|a| pub_addr_in.intern(&format!("{}|{}", a.country, a.city)))
                    .collect(),
            ));
            ctx.categories.push(sorted_set(
                paper.subject_categories.iter().map(|c| categories_in.intern(c)).collect(),
            ));
            ctx.journals.push(if paper.journal.is_empty() {
                None
            } else {
                Some(journals_in.intern(&paper.journal))
            });

            ctx.own_paper.push(papers_in.intern(&paper.paper_id));
            ctx.references
                .push(sorted_set(paper.references.iter().map(|r| papers_in.intern(r)).collect()));
            ctx.citers.push(sorted_set(
                corpus
                    .citers_of(&paper.paper_id)
                    .iter()
                    .map(|c| papers_in.intern(c))
                    .collect(),
            ));
            ctx.coauthors.push(sorted_set(
                corpus
                    .coauthor_keys(mention_id)
                    .iter()
                    .map(|k| coauthors_in.intern(k.key()))
                    .collect(),
            ));

            let title_seq: Vec<u32> =
                paper.title_tokens.iter().map(|t| titles_in.intern(t)).collect();
            ctx.title_set.push(sorted_set(title_seq.clone()));
            ctx.title_seq.push(title_seq);
            ctx.journal_seq
                .push(tokenize(&paper.journal).iter().map(|t| journal_tokens_in.intern(t)).collect());
            ctx.abstract_set.push(sorted_set(
                paper.abstract_tokens.iter().map(|t| abstracts_in.intern(t)).collect(),
            ));
            ctx.keyword_set
                .push(sorted_set(paper.keywords.iter().map(|k| keywords_in.intern(k)).collect()));

            // canonical names of authors on in-corpus papers this paper cites
            let mut cited = Vec::new();
            for reference in &paper.references {
                if !corpus.contains_paper(reference) {
                    continue;
                }
                for other in corpus.mentions_of_paper(reference) {
                    if let Some(m) = corpus.mention(other) {
                        if let Ok(key) = m.canonical_name() {
                            cited.push(cited_in.intern(key.key()));
                        }
                    }
                }
            }
            ctx.cited_authors.push(sorted_set(cited));
        }

        ctx.title_interner = titles_in;
        ctx.abstract_interner = abstracts_in;
        ctx.keyword_interner = keywords_in;
        ctx.author_addr_interner = author_addr_in;
        ctx.category_interner = categories_in;
        ctx.coauthor_interner = coauthors_in;
        ctx.cited_author_interner = cited_in;
        ctx.email_interner = emails_in;
        ctx
    }

    pub fn len(&self) -> usize {
        self.mentions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mentions.is_empty()
    }

    /// All unordered index pairs (i, j) with i < j.
    pub fn pairs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        let n = self.len();
        (0..n).flat_map(move |i| ((i + 1)..n).map(move |j| (i, j)))
    }

    pub fn singletons(&self) -> Clustering {
        Clustering::singletons(self.block.mention_ids.clone())
    }
}

/// Outcome of running one algorithm on one block.
pub struct BlockRun {
    pub clustering: Clustering,
    /// Present for the trace-producing strategy only.
    pub trace: Option<MergeTrace>,
}

#[cfg(test)]
pub(crate) mod testutil {
    use std::collections::BTreeSet;

    use crate::corpus::{Address, AuthorMention, Corpus, PaperRecord};

    /// Builder for small per-block test corpora: every mention blocks under
    /// "wang, y" unless the surname is overridden.
    pub struct ToyBlock {
        pub papers: Vec<PaperRecord>,
        pub mentions: Vec<AuthorMention>,
    }

    impl ToyBlock {
        pub fn new() -> Self {
            ToyBlock {
                papers: Vec::new(),
                mentions: Vec::new(),
            }
        }

        pub fn paper(&mut self, id: &str) -> &mut PaperRecord {
            self.papers.push(PaperRecord {
                paper_id: id.to_string(),
                title_tokens: vec![],
                abstract_tokens: vec![],
                journal: String::new(),
                year: 2000,
                subject_categories: BTreeSet::new(),
                keywords: BTreeSet::new(),
                references: BTreeSet::new(),
                grant_numbers: BTreeSet::new(),
                pub_addresses: BTreeSet::new(),
            });
            self.papers.last_mut().unwrap()
        }

        /// Adds a block mention `id` on paper `paper` (creating the paper
        /// if needed) and returns its index for further edits.
        pub fn mention(&mut self, id: &str, paper: &str) -> &mut AuthorMention {
            if !self.papers.iter().any(|p| p.paper_id == paper) {
                self.paper(paper);
            }
            self.mentions.push(AuthorMention {
                mention_id: id.to_string(),
                paper_id: paper.to_string(),
                surname: "Wang".to_string(),
                first_name: "Yong".to_string(),
                initials: vec!['y'],
                email: None,
                author_addresses: BTreeSet::new(),
                gold_author_id: None,
            });
            self.mentions.last_mut().unwrap()
        }

        /// Adds a co-author mention (different block) on the paper.
        pub fn coauthor(&mut self, id: &str, paper: &str, surname: &str, first: &str) {
            if !self.papers.iter().any(|p| p.paper_id == paper) {
                self.paper(paper);
            }
            self.mentions.push(AuthorMention {
                mention_id: id.to_string(),
                paper_id: paper.to_string(),
                surname: surname.to_string(),
                first_name: first.to_string(),
                initials: vec![first.to_lowercase().chars().next().unwrap_or('x')],
                email: None,
                author_addresses: BTreeSet::new(),
                gold_author_id: None,
            });
        }

        pub fn address(country: &str, city: &str) -> Address {
            Address::new(country, city)
        }

        pub fn build(self) -> (Corpus, crate::blocking::Block) {
            let corpus = Corpus::from_parts(self.papers, self.mentions).unwrap();
            let blocks = crate::blocking::build_blocks(&corpus).unwrap();
            let block = blocks
                .into_iter()
                .find(|b| b.key.key() == "wang, y")
                .expect("toy block must contain wang, y mentions");
            (corpus, block)
        }
    }
}
