//! Author name disambiguation for bibliographic corpora.
//!
//! The crate takes a corpus of papers and author mentions, groups the
//! mentions into name blocks (same surname + first initial), and splits each
//! block into clusters that are meant to correspond to real-world authors.
//! Five strategies are provided:
//!
//! * a naive baseline that leaves every block as a single cluster,
//! * the two-step co-author / TF-IDF method of Cota, Gonçalves and
//!   Laender (2007),
//! * the citation-graph similarity method of Schulz et al. (2014),
//! * the rule-based scoring method of Caron and van Eck (2014) with
//!   block-size dependent thresholds,
//! * an agglomerative method after Backes (2018) driven by the specificity
//!   of shared metadata, run as a greedy max-similarity merge so that one
//!   trace supports any stopping threshold.
//!
//! Results are scored with pairwise and best-match precision/recall/F1, and
//! the `tuning` module fits decision thresholds by exhaustive candidate
//! evaluation (global, per block-size class, or per block). The `synthgen`
//! module generates seeded synthetic corpora with ground-truth author ids so
//! the whole pipeline can be exercised without proprietary data.
//!
//! Per-block work is embarrassingly parallel; with the default `parallel`
//! feature it runs on a rayon pool, without it everything degrades to
//! sequential loops with identical output.

pub mod algorithms;
pub mod blocking;
pub mod clustering;
pub mod corpus;
pub mod evaluation;
pub mod features;
pub mod par;
pub mod synthgen;
pub mod tuning;

pub use blocking::{build_blocks, filter_blocks, Block};
pub use clustering::{Clustering, MergeTrace};
pub use corpus::{AuthorMention, CanonicalName, Corpus, PaperRecord};
pub use evaluation::EvalReport;
