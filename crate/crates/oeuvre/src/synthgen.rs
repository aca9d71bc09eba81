//! Seeded synthetic corpus generator with ground-truth author ids.
//!
//! Each block gets a unique canonical name key and a set of authors (all
//! homonyms of each other by construction). Every author has private
//! signal pools — co-authors, staple references, topic vocabulary,
//! journals, categories, addresses, an email — and papers draw from them,
//! so the author's mentions hang together. The noise rates control how
//! often a draw comes from a block-shared pool instead, which is what makes
//! authors within a block confusable. With every rate at zero the blocks
//! are fully separable: no cross-author pair shares any field value.
//!
//! Generation is deterministic in the seed; each block and concern has its
//! own PRNG stream so that editing one spec field does not reshuffle
//! unrelated draws.

use std::collections::BTreeSet;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{write_corpus, Address, AuthorMention, Corpus, PaperRecord};

#[derive(Debug, Error)]
pub enum GenError {
    #[error("infeasible spec: {0}")]
    Infeasible(String),
    #[error("generated corpus failed validation: {0}")]
    Invalid(#[from] crate::corpus::CorpusError),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
}

/// Inclusive integer range.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Span {
    pub min: usize,
    pub max: usize,
}

impl Span {
    pub fn new(min: usize, max: usize) -> Self {
        Span { min, max }
    }

    fn sample(&self, rng: &mut ChaCha8Rng) -> usize {
        rng.random_range(self.min..=self.max)
    }

    fn check(&self, what: &str) -> Result<(), GenError> {
        if self.min > self.max {
            return Err(GenError::Infeasible(format!(
                "{what}: min {} exceeds max {}",
                self.min, self.max
            )));
        }
        Ok(())
    }
}

/// A few oversized blocks so block-size effects are observable.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct TailSpec {
    pub n_blocks: usize,
    pub authors_per_block: Span,
    pub papers_per_author: Span,
}

impl Default for TailSpec {
    fn default() -> Self {
        TailSpec {
            n_blocks: 3,
            authors_per_block: Span::new(25, 45),
            papers_per_author: Span::new(10, 30),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NoiseSpec {
    /// Per-mention probability that the email field is absent.
    pub missing_email_prob: f64,
    /// Size of each author's private co-author pool.
    pub coauthor_pool: usize,
    pub coauthors_per_paper: Span,
    /// Per-slot probability that a co-author comes from the block-shared
    /// pool instead of the author's own.
    pub coauthor_cross_prob: f64,
    /// Per-token probability that title/abstract/keyword text comes from
    /// the block-shared topic.
    pub topic_overlap: f64,
    /// Per-draw probability that journal/category/address values come from
    /// block-shared pools.
    pub metadata_overlap: f64,
    /// Per-slot probability of citing block-shared staples or another
    /// author's earlier paper.
    pub citation_noise: f64,
    /// Probability of citing each of the author's recent earlier papers.
    pub self_citation_prob: f64,
    /// Per-paper probability of a "stray" paper outside the author's usual
    /// circle: one-off co-authors, one-off references, a one-off journal.
    pub stray_paper_prob: f64,
    /// Per-mention probability of the initial-only name form.
    pub synonym_rate: f64,
    /// Per-author probability of reusing another block author's first name.
    pub homonym_rate: f64,
    /// Author staple reference pool size and per-paper draw count.
    pub staple_pool: usize,
    pub staple_refs_per_paper: Span,
    /// One-off external references per paper.
    pub extra_refs_per_paper: Span,
}

impl Default for NoiseSpec {
    fn default() -> Self {
        NoiseSpec {
            missing_email_prob: 0.55,
            coauthor_pool: 4,
            coauthors_per_paper: Span::new(1, 3),
            coauthor_cross_prob: 0.15,
            topic_overlap: 0.25,
            metadata_overlap: 0.3,
            citation_noise: 0.12,
            self_citation_prob: 0.45,
            stray_paper_prob: 0.25,
            synonym_rate: 0.3,
            homonym_rate: 0.15,
            staple_pool: 6,
            staple_refs_per_paper: Span::new(2, 4),
            extra_refs_per_paper: Span::new(1, 3),
        }
    }
}

impl NoiseSpec {
    /// Fully separable configuration: no cross-author sharing at all, and
    /// pool sizes chosen so any two papers of one author overlap in
    /// co-authors and staple references.
    pub fn zero() -> Self {
        NoiseSpec {
            missing_email_prob: 0.0,
            coauthor_pool: 3,
            coauthors_per_paper: Span::new(2, 3),
            coauthor_cross_prob: 0.0,
            topic_overlap: 0.0,
            metadata_overlap: 0.0,
            citation_noise: 0.0,
            self_citation_prob: 0.5,
            stray_paper_prob: 0.0,
            synonym_rate: 0.0,
            homonym_rate: 0.0,
            staple_pool: 6,
            staple_refs_per_paper: Span::new(4, 5),
            extra_refs_per_paper: Span::new(0, 2),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GenSpec {
    pub seed: u64,
    pub n_blocks: usize,
    pub authors_per_block: Span,
    pub papers_per_author: Span,
    pub tail: TailSpec,
    pub noise: NoiseSpec,
}

impl Default for GenSpec {
    fn default() -> Self {
        GenSpec {
            seed: 42,
            n_blocks: 24,
            authors_per_block: Span::new(5, 10),
            papers_per_author: Span::new(3, 12),
            tail: TailSpec::default(),
            noise: NoiseSpec::default(),
        }
    }
}

impl GenSpec {
    pub fn validate(&self) -> Result<(), GenError> {
        self.authors_per_block.check("authors_per_block")?;
        self.papers_per_author.check("papers_per_author")?;
        self.tail.authors_per_block.check("tail.authors_per_block")?;
        self.tail.papers_per_author.check("tail.papers_per_author")?;
        self.noise.coauthors_per_paper.check("noise.coauthors_per_paper")?;
        self.noise.staple_refs_per_paper.check("noise.staple_refs_per_paper")?;
        self.noise.extra_refs_per_paper.check("noise.extra_refs_per_paper")?;
        if self.n_blocks + self.tail.n_blocks == 0 {
            return Err(GenError::Infeasible("no blocks requested".into()));
        }
        if self.authors_per_block.min == 0 || self.papers_per_author.min == 0 {
            return Err(GenError::Infeasible("authors and papers per author must be >= 1".into()));
        }
        if self.noise.coauthor_pool == 0 && self.noise.coauthors_per_paper.max > 0 {
            return Err(GenError::Infeasible("co-author pool is empty but papers want co-authors".into()));
        }
        for (name, p) in [
            ("missing_email_prob", self.noise.missing_email_prob),
            ("coauthor_cross_prob", self.noise.coauthor_cross_prob),
            ("topic_overlap", self.noise.topic_overlap),
            ("metadata_overlap", self.noise.metadata_overlap),
            ("citation_noise", self.noise.citation_noise),
            ("self_citation_prob", self.noise.self_citation_prob),
            ("stray_paper_prob", self.noise.stray_paper_prob),
            ("synonym_rate", self.noise.synonym_rate),
            ("homonym_rate", self.noise.homonym_rate),
        ] {
            if !(0.0..=1.0).contains(&p) {
                return Err(GenError::Infeasible(format!("{name} must be in [0, 1], got {p}")));
            }
        }
        Ok(())
    }

    pub fn from_toml(text: &str) -> Result<Self, GenError> {
        toml::from_str(text).map_err(|e| GenError::Infeasible(format!("bad spec file: {e}")))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("spec serialize")
    }
}

pub struct Generated {
    pub corpus: Corpus,
    pub n_blocks: usize,
    pub n_authors: usize,
}

const SYLLABLES: [&str; 24] = [
    "an", "bar", "chen", "dor", "el", "fan", "gar", "hol", "iv", "jor", "kal", "lem", "mor",
    "nov", "ol", "per", "qui", "ros", "san", "tor", "ul", "ver", "wei", "yam",
];

const COUNTRIES: [&str; 10] = [
    "germany", "china", "usa", "brazil", "japan", "india", "france", "canada", "spain", "kenya",
];

fn word(rng: &mut ChaCha8Rng, syllables: usize) -> String {
    (0..syllables).map(|_| SYLLABLES[rng.random_range(0..SYLLABLES.len())]).collect()
}

fn fresh_name(counter: &mut u64, rng: &mut ChaCha8Rng, prefix: &str) -> String {
    *counter += 1;
    format!("{prefix}{}{:05}", word(rng, 1), *counter)
}

fn capitalize(s: &str) -> String {
    let mut chars = s.chars();
    match chars.next() {
        Some(first) => first.to_uppercase().chain(chars).collect(),
        None => String::new(),
    }
}

struct AuthorProfile {
    gold_id: String,
    first_name: String,
    middle: Option<char>,
    email: String,
    addresses: Vec<Address>,
    topic: Vec<String>,
    keywords: Vec<String>,
    journals: Vec<String>,
    categories: Vec<String>,
    grants: Vec<String>,
    coauthors: Vec<(String, String)>,
    staples: Vec<String>,
}

struct BlockPools {
    topic: Vec<String>,
    journals: Vec<String>,
    categories: Vec<String>,
    cities: Vec<(String, String)>,
    coauthors: Vec<(String, String)>,
    staples: Vec<String>,
}

/// Generates the corpus described by `spec`. Identical specs produce
/// identical corpora, and [`write_corpus`] output for them is byte-stable.
pub fn generate(spec: &GenSpec) -> Result<Generated, GenError> {
    spec.validate()?;
    let noise = &spec.noise;

    let total_blocks = spec.n_blocks + spec.tail.n_blocks;
    let mut papers: Vec<PaperRecord> = Vec::new();
    let mut mentions: Vec<AuthorMention> = Vec::new();
    let mut used_keys: BTreeSet<(String, char)> = BTreeSet::new();
    let mut unique_counter: u64 = 0;
    let mut paper_seq: u64 = 0;
    let mut mention_seq: u64 = 0;
    let mut n_authors = 0;

    let stream_rng = |seed: u64, block: usize, purpose: u64| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream((block as u64 + 1) * 8 + purpose);
        rng
    };

    for block_idx in 0..total_blocks {
        let is_tail = block_idx >= spec.n_blocks;
        let mut names_rng = stream_rng(spec.seed, block_idx, 0);
        let mut meta_rng = stream_rng(spec.seed, block_idx, 1);
        let mut paper_rng = stream_rng(spec.seed, block_idx, 2);

        // unique block key
        let (surname, letter) = loop {
            let syllables = 2 + names_rng.random_range(0..2);
            let surname = capitalize(&word(&mut names_rng, syllables));
            let letter = (b'a' + names_rng.random_range(0..26u8)) as char;
            let key = (surname.to_lowercase(), letter);
            if used_keys.insert(key) {
                break (surname, letter);
            }
        };

        let pools = BlockPools {
            topic: (0..12).map(|_| word(&mut meta_rng, 2)).collect(),
            journals: (0..4)
                .map(|_| format!("journal of {} {}", word(&mut meta_rng, 2), word(&mut meta_rng, 1)))
                .collect(),
            categories: (0..3).map(|_| format!("{} studies", word(&mut meta_rng, 2))).collect(),
            cities: (0..4)
                .map(|_| {
                    (
                        COUNTRIES[meta_rng.random_range(0..COUNTRIES.len())].to_string(),
                        word(&mut meta_rng, 2),
                    )
                })
                .collect(),
            coauthors: (0..6)
                .map(|_| {
                    (capitalize(&word(&mut meta_rng, 2)), capitalize(&word(&mut meta_rng, 1)))
                })
                .collect(),
            staples: (0..8).map(|_| format!("ext:{}:{}", block_idx, word(&mut meta_rng, 2))).collect(),
        };

        let (authors_span, papers_span) = if is_tail {
            (spec.tail.authors_per_block, spec.tail.papers_per_author)
        } else {
            (spec.authors_per_block, spec.papers_per_author)
        };
        let n_block_authors = authors_span.sample(&mut names_rng);

        // author profiles
        let mut first_names: Vec<String> = Vec::new();
        let mut profiles: Vec<AuthorProfile> = Vec::new();
        for author_idx in 0..n_block_authors {
            let first_name = if !first_names.is_empty()
                && names_rng.random_bool(noise.homonym_rate)
            {
                first_names[names_rng.random_range(0..first_names.len())].clone()
            } else {
                loop {
                    let syllables = 1 + names_rng.random_range(0..2);
                    let candidate =
                        capitalize(&format!("{}{}", letter, word(&mut names_rng, syllables)));
                    if !first_names.contains(&candidate) {
                        break candidate;
                    }
                }
            };
            first_names.push(first_name.clone());
            let middle = if names_rng.random_bool(0.6) {
                Some((b'a' + names_rng.random_range(0..26u8)) as char)
            } else {
                None
            };

            let journals = (0..2)
                .map(|_| {
                    if meta_rng.random_bool(noise.metadata_overlap) {
                        pools.journals[meta_rng.random_range(0..pools.journals.len())].clone()
                    } else {
                        unique_counter += 1;
                        format!("journal of {} {unique_counter:05}", word(&mut meta_rng, 2))
                    }
                })
                .collect();
            let categories = (0..2)
                .map(|_| {
                    if meta_rng.random_bool(noise.metadata_overlap) {
                        pools.categories[meta_rng.random_range(0..pools.categories.len())].clone()
                    } else {
                        unique_counter += 1;
                        format!("{} studies {unique_counter:05}", word(&mut meta_rng, 2))
                    }
                })
                .collect();
            let addresses = (0..meta_rng.random_range(1..=2))
                .map(|_| {
                    if meta_rng.random_bool(noise.metadata_overlap) {
                        let (country, city) =
                            pools.cities[meta_rng.random_range(0..pools.cities.len())].clone();
                        Address::new(&country, &city)
                    } else {
                        unique_counter += 1;
                        Address::new(
                            COUNTRIES[meta_rng.random_range(0..COUNTRIES.len())],
                            &format!("{}{unique_counter:05}", word(&mut meta_rng, 2)),
                        )
                    }
                })
                .collect();

            let topic: Vec<String> =
                (0..12).map(|_| fresh_name(&mut unique_counter, &mut meta_rng, "")).collect();
            let keywords = (0..4).map(|i| topic[i].clone()).collect();
            let grants = (0..meta_rng.random_range(0..=2))
                .map(|_| fresh_name(&mut unique_counter, &mut meta_rng, "grant "))
                .collect();
            let coauthors = (0..noise.coauthor_pool)
                .map(|_| {
                    loop {
                        let surname = capitalize(&word(&mut meta_rng, 2));
                        let first = capitalize(&word(&mut meta_rng, 1));
                        let initial = first.to_lowercase().chars().next().unwrap();
                        if !used_keys.contains(&(surname.to_lowercase(), initial)) {
                            break (surname, first);
                        }
                    }
                })
                .collect();
            let staples = (0..noise.staple_pool)
                .map(|_| fresh_name(&mut unique_counter, &mut meta_rng, "ext:"))
                .collect();

            let gold_id = format!("g{block_idx:03}-{author_idx:03}");
            profiles.push(AuthorProfile {
                email: format!(
                    "{}.{}{}@example.edu",
                    first_name.to_lowercase(),
                    surname.to_lowercase(),
                    author_idx
                ),
                gold_id,
                first_name,
                middle,
                addresses,
                topic,
                keywords,
                journals,
                categories,
                grants,
                coauthors,
                staples,
            });
            n_authors += 1;
        }

        // papers: earlier authors publish earlier so cross-author citation
        // noise can point backwards in time
        let mut block_papers: Vec<(String, i32)> = Vec::new(); // (paper_id, year)
        for profile in &profiles {
            let n_papers = papers_span.sample(&mut paper_rng);
            let start_year = 1970 + paper_rng.random_range(0..30i32);
            let mut own_papers: Vec<(String, i32)> = Vec::new();
            for k in 0..n_papers {
                let year = start_year + k as i32;
                paper_seq += 1;
                let paper_id = format!("p{paper_seq:07}");
                let stray = paper_rng.random_bool(noise.stray_paper_prob);

                let pick_token = |rng: &mut ChaCha8Rng| {
                    if rng.random_bool(noise.topic_overlap) {
                        pools.topic[rng.random_range(0..pools.topic.len())].clone()
                    } else {
                        profile.topic[rng.random_range(0..profile.topic.len())].clone()
                    }
                };
                let title_tokens: Vec<String> =
                    (0..paper_rng.random_range(5..=8)).map(|_| pick_token(&mut paper_rng)).collect();
                let abstract_tokens: Vec<String> = if paper_rng.random_bool(0.25) {
                    Vec::new()
                } else {
                    (0..paper_rng.random_range(10..=18)).map(|_| pick_token(&mut paper_rng)).collect()
                };

                let mut references: BTreeSet<String> = BTreeSet::new();
                for _ in 0..noise.staple_refs_per_paper.sample(&mut paper_rng) {
                    let staple = if stray {
                        unique_counter += 1;
                        format!("ext:stray:{unique_counter:06}")
                    } else if paper_rng.random_bool(noise.citation_noise) {
                        pools.staples[paper_rng.random_range(0..pools.staples.len())].clone()
                    } else {
                        profile.staples[paper_rng.random_range(0..profile.staples.len())].clone()
                    };
                    references.insert(staple);
                }
                for _ in 0..noise.extra_refs_per_paper.sample(&mut paper_rng) {
                    unique_counter += 1;
                    references.insert(format!("ext:once:{unique_counter:06}"));
                }
                if !stray {
                    for earlier in own_papers.iter().rev().take(3) {
                        if paper_rng.random_bool(noise.self_citation_prob) {
                            references.insert(earlier.0.clone());
                        }
                    }
                }
                if !block_papers.is_empty() && paper_rng.random_bool(noise.citation_noise) {
                    let candidate = &block_papers[paper_rng.random_range(0..block_papers.len())];
                    if candidate.1 < year {
                        references.insert(candidate.0.clone());
                    }
                }

                let journal = if stray {
                    unique_counter += 1;
                    format!("journal of {} {unique_counter:05}", word(&mut paper_rng, 2))
                } else {
                    profile.journals[paper_rng.random_range(0..profile.journals.len())].clone()
                };
                let n_cats = paper_rng.random_range(1..=profile.categories.len());
                let subject_categories: BTreeSet<String> = (0..n_cats)
                    .map(|_| {
                        profile.categories[paper_rng.random_range(0..profile.categories.len())].clone()
                    })
                    .collect();
                let keywords: BTreeSet<String> = (0..paper_rng.random_range(2..=3))
                    .map(|_| profile.keywords[paper_rng.random_range(0..profile.keywords.len())].clone())
                    .collect();
                let grant_numbers: BTreeSet<String> = profile
                    .grants
                    .iter()
                    .filter(|_| paper_rng.random_bool(0.5))
                    .cloned()
                    .collect();
                let pub_addresses: BTreeSet<Address> = if paper_rng.random_bool(0.5) {
                    profile.addresses.iter().take(1).cloned().collect()
                } else {
                    BTreeSet::new()
                };

                papers.push(PaperRecord {
                    paper_id: paper_id.clone(),
                    title_tokens,
                    abstract_tokens,
                    journal,
                    year,
                    subject_categories,
                    keywords,
                    references,
                    grant_numbers,
                    pub_addresses,
                });

                // the gold mention
                mention_seq += 1;
                let synonym = paper_rng.random_bool(noise.synonym_rate);
                let mut initials = vec![profile.first_name.to_lowercase().chars().next().unwrap()];
                if let Some(middle) = profile.middle {
                    initials.push(middle);
                }
                mentions.push(AuthorMention {
                    mention_id: format!("m{mention_seq:08}"),
                    paper_id: paper_id.clone(),
                    surname: surname.clone(),
                    first_name: if synonym { String::new() } else { profile.first_name.clone() },
                    initials,
                    email: if paper_rng.random_bool(noise.missing_email_prob) {
                        None
                    } else {
                        Some(profile.email.clone())
                    },
                    author_addresses: profile.addresses.iter().cloned().collect(),
                    gold_author_id: Some(profile.gold_id.clone()),
                });

                // co-author mentions
                let max_co = noise.coauthors_per_paper.max.min(profile.coauthors.len());
                let min_co = noise.coauthors_per_paper.min.min(max_co);
                let n_co = paper_rng.random_range(min_co..=max_co);
                let mut chosen: Vec<usize> = Vec::new();
                while chosen.len() < n_co {
                    let pick = paper_rng.random_range(0..profile.coauthors.len());
                    if !chosen.contains(&pick) {
                        chosen.push(pick);
                    }
                }
                for pick in chosen {
                    let (co_surname, co_first) = if stray {
                        (
                            capitalize(&word(&mut paper_rng, 2)),
                            capitalize(&word(&mut paper_rng, 1)),
                        )
                    } else if paper_rng.random_bool(noise.coauthor_cross_prob) {
                        pools.coauthors[paper_rng.random_range(0..pools.coauthors.len())].clone()
                    } else {
                        profile.coauthors[pick].clone()
                    };
                    mention_seq += 1;
                    mentions.push(AuthorMention {
                        mention_id: format!("m{mention_seq:08}"),
                        paper_id: paper_id.clone(),
                        surname: co_surname.clone(),
                        first_name: co_first.clone(),
                        initials: vec![co_first.to_lowercase().chars().next().unwrap()],
                        email: None,
                        author_addresses: BTreeSet::new(),
                        gold_author_id: None,
                    });
                }

                own_papers.push((paper_id.clone(), year));
                block_papers.push((paper_id, year));
            }
        }
    }

    let corpus = Corpus::from_parts(papers, mentions)?;
    Ok(Generated {
        corpus,
        n_blocks: total_blocks,
        n_authors,
    })
}

/// Generates and writes `papers.jsonl` and `mentions.jsonl`.
pub fn generate_files(
    spec: &GenSpec,
    papers_path: impl AsRef<Path>,
    mentions_path: impl AsRef<Path>,
) -> Result<Generated, GenError> {
    let generated = generate(spec)?;
    write_corpus(&generated.corpus, papers_path, mentions_path)?;
    Ok(generated)
}
