//! Line-delimited JSON ingestion and serialization.
//!
//! `papers.jsonl` and `mentions.jsonl` carry one object per line. Ingestion
//! is order-independent: any permutation of lines yields the same corpus.

use std::collections::{BTreeMap, BTreeSet};
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::text;
use super::{Address, AuthorMention, Corpus, CorpusError, PaperRecord};

#[derive(Debug)]
pub struct IngestOutcome {
    pub corpus: Corpus,
    /// Non-fatal findings: unknown keys, dropped self-references.
    pub warnings: Vec<String>,
}

#[derive(Deserialize, Serialize)]
struct RawAddress {
    #[serde(default)]
    country: String,
    #[serde(default)]
    city: String,
}

#[derive(Deserialize)]
struct RawPaper {
    paper_id: String,
    #[serde(default)]
    title: String,
    #[serde(default, rename = "abstract")]
    abstract_text: String,
    #[serde(default)]
    journal: String,
    #[serde(default)]
    year: i32,
    #[serde(default)]
    subject_categories: Vec<String>,
    #[serde(default)]
    keywords: Vec<String>,
    #[serde(default)]
    references: Vec<String>,
    #[serde(default)]
    grant_numbers: Vec<String>,
    #[serde(default)]
    pub_addresses: Vec<RawAddress>,
}

#[derive(Deserialize)]
struct RawMention {
    mention_id: String,
    paper_id: String,
    surname: String,
    #[serde(default)]
    first_name: String,
    #[serde(default)]
    initials: Vec<String>,
    #[serde(default)]
    email: Option<String>,
    #[serde(default)]
    author_addresses: Vec<RawAddress>,
    #[serde(default)]
    gold_author_id: Option<String>,
}

const PAPER_KEYS: &[&str] = &[
    "paper_id",
    "title",
    "abstract",
    "journal",
    "year",
    "subject_categories",
    "keywords",
    "references",
    "grant_numbers",
    "pub_addresses",
];

const MENTION_KEYS: &[&str] = &[
    "mention_id",
    "paper_id",
    "surname",
    "first_name",
    "initials",
    "email",
    "author_addresses",
    "gold_author_id",
];

fn io_err(path: &Path, source: std::io::Error) -> CorpusError {
    CorpusError::Io {
        path: path.display().to_string(),
        source,
    }
}

/// Parses one jsonl line, warning about keys outside `known`.
fn parse_line<T: serde::de::DeserializeOwned>(
    path: &Path,
    line_no: usize,
    line: &str,
    known: &[&str],
    warnings: &mut Vec<String>,
) -> Result<T, CorpusError> {
    let malformed = |message: String| CorpusError::MalformedLine {
        path: path.display().to_string(),
        line: line_no,
        message,
    };
    let value: Value = serde_json::from_str(line).map_err(|e| malformed(e.to_string()))?;
    if let Value::Object(map) = &value {
        for key in map.keys() {
            if !known.contains(&key.as_str()) {
                warnings.push(format!(
                    "{}:{}: ignoring unknown key {:?}",
                    path.display(),
                    line_no,
                    key
                ));
            }
        }
    } else {
        return Err(malformed("expected a JSON object".to_string()));
    }
    serde_json::from_value(value).map_err(|e| malformed(e.to_string()))
}

fn normalize_paper(raw: RawPaper, warnings: &mut Vec<String>) -> PaperRecord {
    let mut references: BTreeSet<String> =
        raw.references.iter().map(|r| r.trim().to_string()).filter(|r| !r.is_empty()).collect();
    if references.remove(&raw.paper_id) {
        warnings.push(format!("paper {}: dropped self-reference", raw.paper_id));
    }
    PaperRecord {
        title_tokens: text::tokenize(&raw.title),
        abstract_tokens: text::tokenize(&raw.abstract_text),
        journal: text::normalize(&raw.journal),
        year: raw.year,
        subject_categories: raw.subject_categories.iter().map(|s| text::normalize(s)).collect(),
        keywords: raw.keywords.iter().map(|s| text::normalize(s)).collect(),
        references,
        grant_numbers: raw.grant_numbers.iter().map(|s| text::normalize(s)).collect(),
        pub_addresses: raw
            .pub_addresses
            .iter()
            .map(|a| Address::new(&a.country, &a.city))
            .collect(),
        paper_id: raw.paper_id,
    }
}

fn normalize_mention(raw: RawMention) -> Result<AuthorMention, CorpusError> {
    let invalid = |mention_id: &str, reason: String| CorpusError::InvalidMention {
        mention_id: mention_id.to_string(),
        reason,
    };
    if text::normalize(&raw.surname).is_empty() {
        return Err(invalid(&raw.mention_id, "empty surname".to_string()));
    }
    let mut initials = Vec::with_capacity(raw.initials.len());
    for entry in &raw.initials {
        match text::first_initial(entry) {
            Some(c) => initials.push(c),
            None => {
                return Err(invalid(
                    &raw.mention_id,
                    format!("initials entry {entry:?} has no letter"),
                ))
            }
        }
    }
    if let Some(first) = text::first_initial(&raw.first_name) {
        match initials.first() {
            None => {
                return Err(invalid(
                    &raw.mention_id,
                    "first_name present but initials empty".to_string(),
                ))
            }
            Some(&i) if i != first => {
                return Err(invalid(
                    &raw.mention_id,
                    format!("first initial {i:?} does not match first_name {:?}", raw.first_name),
                ))
            }
            _ => {}
        }
    }
    let email = raw
        .email
        .map(|e| text::normalize(&e))
        .filter(|e| !e.is_empty());
    Ok(AuthorMention {
        mention_id: raw.mention_id,
        paper_id: raw.paper_id.trim().to_string(),
        surname: raw.surname,
        first_name: raw.first_name,
        initials,
        email,
        author_addresses: raw
            .author_addresses
            .iter()
            .map(|a| Address::new(&a.country, &a.city))
            .collect(),
        gold_author_id: raw.gold_author_id,
    })
}

/// Reads and validates a corpus from the two jsonl files, building all
/// indexes. Duplicate ids, malformed lines, inconsistent name parts, and
/// mentions whose paper is missing are errors; unknown keys and dropped
/// self-references are returned as warnings.
pub fn ingest_corpus(
    papers_path: impl AsRef<Path>,
    mentions_path: impl AsRef<Path>,
) -> Result<IngestOutcome, CorpusError> {
    let papers_path = papers_path.as_ref();
    let mentions_path = mentions_path.as_ref();
    let mut warnings = Vec::new();

    let mut papers: BTreeMap<String, PaperRecord> = BTreeMap::new();
    let reader = BufReader::new(File::open(papers_path).map_err(|e| io_err(papers_path, e))?);
    for (idx, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| io_err(papers_path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let line_no = idx + 1;
        let raw: RawPaper = parse_line(papers_path, line_no, &line, PAPER_KEYS, &mut warnings)?;
        let record = normalize_paper(raw, &mut warnings);
        if papers.contains_key(&record.paper_id) {
            return Err(CorpusError::DuplicatePaper {
                path: papers_path.display().to_string(),
                line: line_no,
                id: record.paper_id,
            });
        }
        papers.insert(record.paper_id.clone(), record);
    }

    let mut mentions: BTreeMap<String, AuthorMention> = BTreeMap::new();
    let reader = BufReader::new(File::open(mentions_path).map_err(|e| io_err(mentions_path, e))?);
    for (idx, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| io_err(mentions_path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let line_no = idx + 1;
        let raw: RawMention =
            parse_line(mentions_path, line_no, &line, MENTION_KEYS, &mut warnings)?;
        let mention = normalize_mention(raw)?;
        if mentions.contains_key(&mention.mention_id) {
            return Err(CorpusError::DuplicateMention {
                path: mentions_path.display().to_string(),
                line: line_no,
                id: mention.mention_id,
            });
        }
        mentions.insert(mention.mention_id.clone(), mention);
    }

    let corpus = Corpus::from_parts(papers.into_values().collect(), mentions.into_values().collect())?;
    Ok(IngestOutcome { corpus, warnings })
}

#[derive(Serialize)]
struct PaperOut<'a> {
    paper_id: &'a str,
    title: String,
    #[serde(rename = "abstract")]
    abstract_text: String,
    journal: &'a str,
    year: i32,
    subject_categories: Vec<&'a str>,
    keywords: Vec<&'a str>,
    references: Vec<&'a str>,
    grant_numbers: Vec<&'a str>,
    pub_addresses: Vec<RawAddress>,
}

#[derive(Serialize)]
struct MentionOut<'a> {
    mention_id: &'a str,
    paper_id: &'a str,
    surname: &'a str,
    first_name: &'a str,
    initials: Vec<String>,
    email: Option<&'a str>,
    author_addresses: Vec<RawAddress>,
    gold_author_id: Option<&'a str>,
}

fn out_addresses(addresses: &BTreeSet<Address>) -> Vec<RawAddress> {
    addresses
        .iter()
        .map(|a| RawAddress {
            country: a.country.clone(),
            city: a.city.clone(),
        })
        .collect()
}

/// Writes the corpus back out in the ingestion format, one record per line,
/// sorted by id. Re-ingesting the output reproduces the corpus exactly:
/// every stored field is already normalized, and normalization is
/// idempotent.
pub fn write_corpus(
    corpus: &Corpus,
    papers_path: impl AsRef<Path>,
    mentions_path: impl AsRef<Path>,
) -> Result<(), CorpusError> {
    let papers_path = papers_path.as_ref();
    let mentions_path = mentions_path.as_ref();

    let mut out = BufWriter::new(File::create(papers_path).map_err(|e| io_err(papers_path, e))?);
    for paper in corpus.papers() {
        let record = PaperOut {
            paper_id: &paper.paper_id,
            title: paper.title_tokens.join(" "),
            abstract_text: paper.abstract_tokens.join(" "),
            journal: &paper.journal,
            year: paper.year,
            subject_categories: paper.subject_categories.iter().map(String::as_str).collect(),
            keywords: paper.keywords.iter().map(String::as_str).collect(),
            references: paper.references.iter().map(String::as_str).collect(),
            grant_numbers: paper.grant_numbers.iter().map(String::as_str).collect(),
            pub_addresses: out_addresses(&paper.pub_addresses),
        };
        serde_json::to_writer(&mut out, &record)
            .map_err(|e| io_err(papers_path, std::io::Error::other(e)))?;
        out.write_all(b"\n").map_err(|e| io_err(papers_path, e))?;
    }
    out.flush().map_err(|e| io_err(papers_path, e))?;

    let mut out =
        BufWriter::new(File::create(mentions_path).map_err(|e| io_err(mentions_path, e))?);
    for mention in corpus.mentions() {
        let record = MentionOut {
            mention_id: &mention.mention_id,
            paper_id: &mention.paper_id,
            surname: &mention.surname,
            first_name: &mention.first_name,
            initials: mention.initials.iter().map(|c| c.to_string()).collect(),
            email: mention.email.as_deref(),
            author_addresses: out_addresses(&mention.author_addresses),
            gold_author_id: mention.gold_author_id.as_deref(),
        };
        serde_json::to_writer(&mut out, &record)
            .map_err(|e| io_err(mentions_path, std::io::Error::other(e)))?;
        out.write_all(b"\n").map_err(|e| io_err(mentions_path, e))?;
    }
    out.flush().map_err(|e| io_err(mentions_path, e))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write_file(dir: &tempfile::TempDir, name: &str, contents: &str) -> std::path::PathBuf {
        let path = dir.path().join(name);
        let mut f = File::create(&path).unwrap();
        f.write_all(contents.as_bytes()).unwrap();
        path
    }

    const PAPERS: &str = r#"{"paper_id":"p1","title":"Social theory and social structure","abstract":"","journal":"Am J Sociol","year":1968,"subject_categories":["Sociology"],"keywords":[],"references":["p2","ext:123"],"grant_numbers":[],"pub_addresses":[]}
{"paper_id":"p2","title":"The Matthew effect in science","abstract":"","journal":"Science","year":1968,"subject_categories":["Multidisciplinary"],"keywords":[],"references":[],"grant_numbers":[],"pub_addresses":[{"country":"USA","city":"New York"}]}
"#;

    const MENTIONS: &str = r#"{"mention_id":"m1","paper_id":"p1","surname":"Merton","first_name":"Robert","initials":["R","K"],"email":"rkm@example.edu","author_addresses":[],"gold_author_id":"a1"}
{"mention_id":"m2","paper_id":"p2","surname":"Merton","first_name":"R.","initials":["R"],"email":null,"author_addresses":[{"country":"USA","city":"New York"}],"gold_author_id":"a1"}
"#;

    #[test]
    fn ingest_small_fixture() {
        let dir = tempfile::tempdir().unwrap();
        let papers = write_file(&dir, "papers.jsonl", PAPERS);
        let mentions = write_file(&dir, "mentions.jsonl", MENTIONS);
        let outcome = ingest_corpus(&papers, &mentions).unwrap();
        assert!(outcome.warnings.is_empty());
        let corpus = outcome.corpus;
        assert_eq!(corpus.n_papers(), 2);
        assert_eq!(corpus.n_mentions(), 2);
        assert_eq!(corpus.mention("m1").unwrap().initials, vec!['r', 'k']);
        assert_eq!(corpus.mention("m1").unwrap().email.as_deref(), Some("rkm@example.edu"));
        assert!(corpus.citers_of("p2").contains("p1"));
        assert!(corpus.paper("p1").unwrap().references.contains("ext:123"));
    }

    #[test]
    fn ingest_is_order_independent() {
        let dir = tempfile::tempdir().unwrap();
        let papers = write_file(&dir, "papers.jsonl", PAPERS);
        let mentions = write_file(&dir, "mentions.jsonl", MENTIONS);
        let forward = ingest_corpus(&papers, &mentions).unwrap().corpus;

        let flip = |s: &str| {
            let mut lines: Vec<&str> = s.lines().collect();
            lines.reverse();
            lines.join("\n") + "\n"
        };
        let papers_rev = write_file(&dir, "papers_rev.jsonl", &flip(PAPERS));
        let mentions_rev = write_file(&dir, "mentions_rev.jsonl", &flip(MENTIONS));
        let reversed = ingest_corpus(&papers_rev, &mentions_rev).unwrap().corpus;
        assert_eq!(forward, reversed);
    }

    #[test]
    fn round_trip_preserves_corpus() {
        let dir = tempfile::tempdir().unwrap();
        let papers = write_file(&dir, "papers.jsonl", PAPERS);
        let mentions = write_file(&dir, "mentions.jsonl", MENTIONS);
        let corpus = ingest_corpus(&papers, &mentions).unwrap().corpus;

        let papers2 = dir.path().join("papers2.jsonl");
        let mentions2 = dir.path().join("mentions2.jsonl");
        write_corpus(&corpus, &papers2, &mentions2).unwrap();
        let round = ingest_corpus(&papers2, &mentions2).unwrap().corpus;
        assert_eq!(corpus, round);
    }

    #[test]
    fn malformed_line_reports_line_number() {
        let dir = tempfile::tempdir().unwrap();
        let papers = write_file(&dir, "papers.jsonl", "{\"paper_id\":\"p1\"}\nnot json\n");
        let mentions = write_file(&dir, "mentions.jsonl", "");
        let err = ingest_corpus(&papers, &mentions).unwrap_err();
        match err {
            CorpusError::MalformedLine { line, .. } => assert_eq!(line, 2),
            other => panic!("unexpected error: {other}"),
        }
    }

    #[test]
    fn duplicate_paper_id_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let papers = write_file(
            &dir,
            "papers.jsonl",
            "{\"paper_id\":\"p1\"}\n{\"paper_id\":\"p1\"}\n",
        );
        let mentions = write_file(&dir, "mentions.jsonl", "");
        let err = ingest_corpus(&papers, &mentions).unwrap_err();
        assert!(matches!(err, CorpusError::DuplicatePaper { line: 2, .. }));
    }

    #[test]
    fn dangling_mention_is_rejected_by_id() {
        let dir = tempfile::tempdir().unwrap();
        let papers = write_file(&dir, "papers.jsonl", "{\"paper_id\":\"p1\"}\n");
        let mentions = write_file(
            &dir,
            "mentions.jsonl",
            r#"{"mention_id":"m1","paper_id":"p1","surname":"Merton","first_name":"R","initials":["R"]}
{"mention_id":"m2","paper_id":"missing","surname":"Smith","first_name":"J","initials":["J"]}
"#,
        );
        let err = ingest_corpus(&papers, &mentions).unwrap_err();
        match err {
            CorpusError::DanglingPaperRefs { offenders } => {
                assert_eq!(offenders, vec!["m2".to_string()])
            }
            other => panic!("unexpected error: {other}"),
        }
    }

    #[test]
    fn unknown_keys_warn_and_self_reference_dropped() {
        let dir = tempfile::tempdir().unwrap();
        let papers = write_file(
            &dir,
            "papers.jsonl",
            "{\"paper_id\":\"p1\",\"references\":[\"p1\",\"p2\"],\"wos_uid\":\"x\"}\n{\"paper_id\":\"p2\"}\n",
        );
        let mentions = write_file(&dir, "mentions.jsonl", "");
        let outcome = ingest_corpus(&papers, &mentions).unwrap();
        assert_eq!(outcome.warnings.len(), 2);
        assert!(outcome.warnings[0].contains("wos_uid"));
        assert!(!outcome.corpus.paper("p1").unwrap().references.contains("p1"));
    }

    #[test]
    fn inconsistent_initials_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let papers = write_file(&dir, "papers.jsonl", "{\"paper_id\":\"p1\"}\n");
        let mentions = write_file(
            &dir,
            "mentions.jsonl",
            r#"{"mention_id":"m1","paper_id":"p1","surname":"Merton","first_name":"Robert","initials":["K"]}
"#,
        );
        let err = ingest_corpus(&papers, &mentions).unwrap_err();
        assert!(matches!(err, CorpusError::InvalidMention { .. }));
    }
}
