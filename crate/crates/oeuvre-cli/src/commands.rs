//! Subcommand implementations.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use oeuvre::algorithms::{AlgorithmConfig, AlgorithmKind};
use oeuvre::blocking::{build_blocks, filter_blocks, Block};
use oeuvre::clustering::Clustering;
use oeuvre::corpus::{ingest_corpus, Corpus};
use oeuvre::evaluation::{self, EvalReport, PairCounts};
use oeuvre::features::{build_general_names, FeatureConfig, GeneralNameList};
use oeuvre::par;
use oeuvre::synthgen::{generate, GenSpec};
use oeuvre::tuning::{self, FitMode, GridSpec, Objective};

use crate::manifest::RunManifest;
use crate::{Cli, CliError, CliResult, Command, CorpusArgs};

pub fn run(cli: Cli) -> CliResult<()> {
    let out = cli.out.clone();
    let config = load_feature_config(cli.config.as_deref())?;
    match cli.command {
        Command::Generate { ref spec } => cmd_generate(spec.as_deref(), cli.seed, &require_out(&out)?),
        Command::Ingest { ref corpus } => cmd_ingest(corpus),
        Command::Block {
            ref corpus,
            min_authors,
        } => cmd_block(corpus, min_authors, &require_out(&out)?),
        Command::Disambiguate {
            ref corpus,
            ref algorithm,
            ref params,
            traces,
        } => cmd_disambiguate(
            corpus,
            algorithm,
            params.as_deref(),
            traces,
            &config,
            &require_out(&out)?,
        ),
        Command::Evaluate {
            ref corpus,
            ref clusters,
            ref label,
            min_authors,
        } => cmd_evaluate(
            corpus,
            clusters,
            label.as_deref(),
            min_authors,
            &require_out(&out)?,
        ),
        Command::Fit {
            ref corpus,
            ref algorithm,
            ref grid,
            ref objective,
            ref mode,
            min_authors,
        } => cmd_fit(
            corpus,
            algorithm,
            grid.as_deref(),
            objective,
            mode,
            min_authors,
            &config,
            &require_out(&out)?,
        ),
        Command::Report { ref evals } => cmd_report(evals, &require_out(&out)?),
        Command::DumpWeights {
            ref corpus,
            ref block,
        } => cmd_dump_weights(corpus, block, &require_out(&out)?),
    }
}

fn require_out(out: &Option<PathBuf>) -> CliResult<PathBuf> {
    let out = out
        .clone()
        .ok_or_else(|| CliError::Validation("--out is required for this subcommand".into()))?;
    std::fs::create_dir_all(&out)
        .map_err(|e| CliError::Validation(format!("creating {}: {e}", out.display())))?;
    Ok(out)
}

fn load_feature_config(path: Option<&Path>) -> CliResult<FeatureConfig> {
    match path {
        None => Ok(FeatureConfig::default()),
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::Validation(format!("reading {}: {e}", path.display())))?;
            FeatureConfig::parse(&text).map_err(CliError::validation)
        }
    }
}

fn load_corpus(args: &CorpusArgs) -> CliResult<Corpus> {
    let outcome = ingest_corpus(&args.papers, &args.mentions).map_err(CliError::validation)?;
    for warning in &outcome.warnings {
        eprintln!("warn: {warning}");
    }
    Ok(outcome.corpus)
}

fn write_file(path: &Path, contents: &str) -> CliResult<()> {
    std::fs::write(path, contents)
        .map_err(|e| CliError::Validation(format!("writing {}: {e}", path.display())))
}

fn sanitize(key: &str) -> String {
    key.chars().map(|c| if c.is_alphanumeric() { c } else { '_' }).collect()
}

fn general_names(corpus: &Corpus, config: &FeatureConfig) -> GeneralNameList {
    build_general_names(corpus, config.general_name_min_surnames)
}

// ---------------------------------------------------------------------------

fn cmd_generate(spec_path: Option<&Path>, seed: Option<u64>, out: &Path) -> CliResult<()> {
    let mut spec = match spec_path {
        None => GenSpec::default(),
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::Validation(format!("reading {}: {e}", path.display())))?;
            GenSpec::from_toml(&text).map_err(CliError::validation)?
        }
    };
    if let Some(seed) = seed {
        spec.seed = seed;
    }

    let generated = generate(&spec).map_err(CliError::validation)?;
    let papers_path = out.join("papers.jsonl");
    let mentions_path = out.join("mentions.jsonl");
    oeuvre::corpus::write_corpus(&generated.corpus, &papers_path, &mentions_path)
        .map_err(CliError::validation)?;
    write_file(&out.join("spec.toml"), &spec.to_toml())?;

    RunManifest::new("generate")
        .with_corpus(&papers_path, &mentions_path)?
        .with_params(spec.to_toml())
        .write(out)?;
    eprintln!(
        "info: generated {} papers, {} mentions, {} gold blocks, {} authors",
        generated.corpus.n_papers(),
        generated.corpus.n_mentions(),
        generated.n_blocks,
        generated.n_authors
    );
    Ok(())
}

fn cmd_ingest(args: &CorpusArgs) -> CliResult<()> {
    let corpus = load_corpus(args)?;
    let gold: usize =
        corpus.mentions().filter(|m| m.gold_author_id.is_some()).count();
    let authors: std::collections::BTreeSet<&str> =
        corpus.mentions().filter_map(|m| m.gold_author_id.as_deref()).collect();
    eprintln!(
        "info: corpus valid: {} papers, {} mentions ({} gold-annotated), {} distinct authors",
        corpus.n_papers(),
        corpus.n_mentions(),
        gold,
        authors.len()
    );
    Ok(())
}

fn cmd_block(args: &CorpusArgs, min_authors: usize, out: &Path) -> CliResult<()> {
    let corpus = load_corpus(args)?;
    let mut blocks = build_blocks(&corpus).map_err(CliError::validation)?;
    if min_authors > 0 {
        let (kept, stats) = filter_blocks(blocks, &corpus, min_authors);
        eprintln!(
            "info: kept {} blocks; dropped {} with too few gold authors, {} without gold ids",
            stats.kept,
            stats.dropped_insufficient.len(),
            stats.dropped_no_gold.len()
        );
        blocks = kept;
    }

    for block in &blocks {
        if block.has_empty_initial() {
            eprintln!("warn: block {:?} has no usable first initial", block.key.key());
        }
    }

    let mut lines = String::new();
    for block in &blocks {
        let record = serde_json::json!({
            "key": block.key.key(),
            "size": block.size(),
            "mention_ids": block.mention_ids,
        });
        lines.push_str(&record.to_string());
        lines.push('\n');
    }
    write_file(&out.join("blocks.jsonl"), &lines)?;

    let mut histogram: BTreeMap<usize, usize> = BTreeMap::new();
    for block in &blocks {
        *histogram.entry(block.size()).or_insert(0) += 1;
    }
    let mut csv = String::from("block_size,n_blocks\n");
    for (size, count) in histogram {
        csv.push_str(&format!("{size},{count}\n"));
    }
    write_file(&out.join("size_histogram.csv"), &csv)?;

    RunManifest::new("block")
        .with_corpus(&args.papers, &args.mentions)?
        .write(out)?;
    eprintln!("info: wrote {} blocks", blocks.len());
    Ok(())
}

fn parse_algorithm(name: &str) -> CliResult<AlgorithmKind> {
    name.parse().map_err(CliError::validation)
}

fn load_algorithm_config(
    kind: AlgorithmKind,
    params_path: Option<&Path>,
) -> CliResult<AlgorithmConfig> {
    match params_path {
        None => Ok(AlgorithmConfig::default_for(kind)),
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::Validation(format!("reading {}: {e}", path.display())))?;
            AlgorithmConfig::from_toml(&text, Some(kind)).map_err(CliError::validation)
        }
    }
}

/// The partition invariant every algorithm must uphold.
fn check_partition(block: &Block, clustering: &Clustering) -> CliResult<()> {
    if clustering.mention_ids() != block.mention_ids.as_slice() {
        return Err(CliError::Invariant(format!(
            "clustering must partition block {:?} (mention sets differ)",
            block.key.key()
        )));
    }
    Ok(())
}

fn cmd_disambiguate(
    args: &CorpusArgs,
    algorithm: &str,
    params_path: Option<&Path>,
    traces: bool,
    config: &FeatureConfig,
    out: &Path,
) -> CliResult<()> {
    let kind = parse_algorithm(algorithm)?;
    let algo_config = load_algorithm_config(kind, params_path)?;
    let corpus = load_corpus(args)?;
    let names = general_names(&corpus, config);
    let blocks = build_blocks(&corpus).map_err(CliError::validation)?;

    let results: Vec<Result<oeuvre::algorithms::BlockRun, String>> =
        par::map_collect(&blocks, |block| {
            algo_config
                .run_block(block, &corpus, &config.table, &names)
                .map_err(|e| format!("block {:?}: {e}", block.key.key()))
        });

    let clusters_dir = out.join("clusters");
    std::fs::create_dir_all(&clusters_dir)
        .map_err(|e| CliError::Validation(format!("creating {}: {e}", clusters_dir.display())))?;
    let traces_dir = out.join("traces");
    if traces {
        std::fs::create_dir_all(&traces_dir)
            .map_err(|e| CliError::Validation(format!("creating {}: {e}", traces_dir.display())))?;
    }

    let mut index = csv::Writer::from_writer(Vec::new());
    index
        .write_record(["file", "key", "size"])
        .map_err(CliError::validation)?;
    for (i, (block, result)) in blocks.iter().zip(results).enumerate() {
        let run = result.map_err(CliError::Validation)?;
        check_partition(block, &run.clustering)?;
        let file = format!("block_{i:05}_{}.csv", sanitize(block.key.key()));
        let mut buf = Vec::new();
        run.clustering.write_csv(&mut buf).map_err(CliError::validation)?;
        std::fs::write(clusters_dir.join(&file), buf)
            .map_err(|e| CliError::Validation(format!("writing {file}: {e}")))?;
        index
            .write_record([file.as_str(), block.key.key(), &block.size().to_string()])
            .map_err(CliError::validation)?;

        if traces {
            if let Some(trace) = &run.trace {
                let trace_file = format!("block_{i:05}_{}.csv", sanitize(block.key.key()));
                let mut buf = Vec::new();
                trace.write_csv(&mut buf).map_err(CliError::validation)?;
                std::fs::write(traces_dir.join(&trace_file), buf)
                    .map_err(|e| CliError::Validation(format!("writing {trace_file}: {e}")))?;
            }
        }
    }
    let index_bytes = index.into_inner().map_err(CliError::validation)?;
    std::fs::write(clusters_dir.join("index.csv"), index_bytes)
        .map_err(|e| CliError::Validation(format!("writing index.csv: {e}")))?;

    RunManifest::new("disambiguate")
        .with_corpus(&args.papers, &args.mentions)?
        .with_algorithm(kind.as_str())
        .with_params(algo_config.to_toml())
        .write(out)?;
    eprintln!("info: clustered {} blocks with {}", blocks.len(), kind);
    Ok(())
}

/// Resolves --clusters given either the run directory or its clusters/
/// subdirectory; returns (clusters dir, run dir).
fn resolve_clusters_dir(arg: &Path) -> CliResult<(PathBuf, PathBuf)> {
    if arg.join("index.csv").is_file() {
        let parent = arg.parent().unwrap_or(arg).to_path_buf();
        return Ok((arg.to_path_buf(), parent));
    }
    let nested = arg.join("clusters");
    if nested.join("index.csv").is_file() {
        return Ok((nested, arg.to_path_buf()));
    }
    Err(CliError::Validation(format!(
        "{} does not contain clustering output (no index.csv)",
        arg.display()
    )))
}

fn read_clusterings(clusters_dir: &Path) -> CliResult<Vec<(String, Clustering)>> {
    let index_path = clusters_dir.join("index.csv");
    let mut reader = csv::Reader::from_path(&index_path)
        .map_err(|e| CliError::Validation(format!("reading {}: {e}", index_path.display())))?;
    let mut out = Vec::new();
    for record in reader.records() {
        let record = record.map_err(CliError::validation)?;
        let file = record
            .get(0)
            .ok_or_else(|| CliError::Validation("index.csv: missing file column".into()))?;
        let key = record
            .get(1)
            .ok_or_else(|| CliError::Validation("index.csv: missing key column".into()))?;
        let path = clusters_dir.join(file);
        let data = std::fs::read(&path)
            .map_err(|e| CliError::Validation(format!("reading {}: {e}", path.display())))?;
        let clustering = Clustering::read_csv(data.as_slice()).map_err(CliError::validation)?;
        out.push((key.to_string(), clustering));
    }
    Ok(out)
}

fn report_csv_row(label: &str, r: &EvalReport, n_blocks: usize) -> String {
    format!(
        "{label},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6},{},{},{},{n_blocks}\n",
        r.p_pair,
        r.r_pair,
        r.f1_pair,
        r.p_best,
        r.r_best,
        r.f1_best,
        r.n_mentions,
        r.n_gold_authors,
        r.n_clusters
    )
}

const REPORT_HEADER: &str =
    "approach,p_pair,r_pair,f1_pair,p_best,r_best,f1_best,n_mentions,n_gold_authors,n_clusters,n_blocks\n";

fn cmd_evaluate(
    args: &CorpusArgs,
    clusters: &Path,
    label: Option<&str>,
    min_authors: usize,
    out: &Path,
) -> CliResult<()> {
    let (clusters_dir, run_dir) = resolve_clusters_dir(clusters)?;
    let corpus = load_corpus(args)?;
    let clusterings = read_clusterings(&clusters_dir)?;
    let label = match label {
        Some(label) => label.to_string(),
        None => RunManifest::read(&run_dir)
            .ok()
            .and_then(|m| m.algorithm)
            .unwrap_or_else(|| "run".to_string()),
    };

    // gold map and block integrity check
    let blocks = build_blocks(&corpus).map_err(CliError::validation)?;
    let by_key: BTreeMap<&str, &Block> =
        blocks.iter().map(|b| (b.key.key(), b)).collect();
    let mut gold: BTreeMap<String, String> = BTreeMap::new();
    for mention in corpus.mentions() {
        if let Some(author) = &mention.gold_author_id {
            gold.insert(mention.mention_id.clone(), author.clone());
        }
    }

    let mut per_block_reports: Vec<EvalReport> = Vec::new();
    let mut pooled = PairCounts::default();
    let mut skipped_no_gold = 0usize;
    for (key, clustering) in &clusterings {
        let block = by_key.get(key.as_str()).ok_or_else(|| {
            CliError::Validation(format!(
                "clusters refer to block {key:?} which does not exist in this corpus"
            ))
        })?;
        if clustering.mention_ids() != block.mention_ids.as_slice() {
            return Err(CliError::Validation(format!(
                "clustering for block {key:?} does not match the corpus block (stale output?)"
            )));
        }
        let restricted = clustering.restrict(|id| gold.contains_key(id));
        if restricted.is_empty() {
            skipped_no_gold += 1;
            continue;
        }
        let distinct: std::collections::BTreeSet<&str> = restricted
            .mention_ids()
            .iter()
            .map(|id| gold[id].as_str())
            .collect();
        if distinct.len() < min_authors {
            continue;
        }
        let counts =
            PairCounts::from_clustering(&restricted, &gold).map_err(CliError::validation)?;
        pooled.add(&counts);
        per_block_reports.push(counts.report(key.clone()).map_err(CliError::validation)?);
    }
    if skipped_no_gold > 0 {
        eprintln!("info: skipped {skipped_no_gold} blocks without gold-annotated mentions");
    }

    let overall = pooled.report("overall").map_err(|_| {
        CliError::Validation("no evaluable blocks: every block lacks gold annotations".into())
    })?;

    let mut report = String::from(REPORT_HEADER);
    report.push_str(&report_csv_row(&label, &overall, per_block_reports.len()));
    write_file(&out.join("report.csv"), &report)?;

    let mut per_block_csv = csv::Writer::from_writer(Vec::new());
    per_block_csv
        .write_record([
            "block",
            "n_mentions",
            "n_gold_authors",
            "n_clusters",
            "p_pair",
            "r_pair",
            "f1_pair",
            "p_best",
            "r_best",
            "f1_best",
        ])
        .map_err(CliError::validation)?;
    for r in &per_block_reports {
        per_block_csv
            .write_record([
                r.scope.as_str(),
                &r.n_mentions.to_string(),
                &r.n_gold_authors.to_string(),
                &r.n_clusters.to_string(),
                &format!("{:.6}", r.p_pair),
                &format!("{:.6}", r.r_pair),
                &format!("{:.6}", r.f1_pair),
                &format!("{:.6}", r.p_best),
                &format!("{:.6}", r.r_best),
                &format!("{:.6}", r.f1_best),
            ])
            .map_err(CliError::validation)?;
    }
    std::fs::write(
        out.join("per_block.csv"),
        per_block_csv.into_inner().map_err(CliError::validation)?,
    )
    .map_err(|e| CliError::Validation(format!("writing per_block.csv: {e}")))?;

    let curve = evaluation::quality_by_size(&per_block_reports);
    let mut curve_csv = String::from("block_size,mean_f1_pair,mean_f1_best,n_blocks\n");
    for row in curve {
        curve_csv.push_str(&format!(
            "{},{:.6},{:.6},{}\n",
            row.block_size, row.mean_f1_pair, row.mean_f1_best, row.n_blocks
        ));
    }
    write_file(&out.join("size_curve.csv"), &curve_csv)?;

    RunManifest::new("evaluate")
        .with_corpus(&args.papers, &args.mentions)?
        .with_algorithm(&label)
        .write(out)?;
    eprintln!(
        "info: {} blocks evaluated; overall f1_pair {:.4}, f1_best {:.4}",
        per_block_reports.len(),
        overall.f1_pair,
        overall.f1_best
    );
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn cmd_fit(
    args: &CorpusArgs,
    algorithm: &str,
    grid_path: Option<&Path>,
    objective: &str,
    mode: &str,
    min_authors: usize,
    config: &FeatureConfig,
    out: &Path,
) -> CliResult<()> {
    let kind = parse_algorithm(algorithm)?;
    let objective: Objective = objective.parse().map_err(CliError::Validation)?;
    let mode: FitMode = mode.parse().map_err(CliError::Validation)?;
    let grid = match grid_path {
        None => GridSpec::default(),
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::Validation(format!("reading {}: {e}", path.display())))?;
            GridSpec::from_toml(&text).map_err(CliError::validation)?
        }
    };

    let corpus = load_corpus(args)?;
    let names = general_names(&corpus, config);
    let blocks = build_blocks(&corpus).map_err(CliError::validation)?;
    let (blocks, stats) = filter_blocks(blocks, &corpus, min_authors.max(1));
    eprintln!(
        "info: fitting on {} blocks ({} dropped below {} gold authors, {} without gold)",
        blocks.len(),
        stats.dropped_insufficient.len(),
        min_authors,
        stats.dropped_no_gold.len()
    );

    let result = tuning::fit(
        &corpus,
        &blocks,
        &config.table,
        &names,
        kind,
        &grid,
        objective,
        mode,
    )
    .map_err(CliError::validation)?;

    for warning in &result.warnings {
        eprintln!("warn: {warning}");
    }
    write_file(&out.join("params.toml"), &result.config.to_toml())?;

    let mut table = csv::Writer::from_writer(Vec::new());
    table
        .write_record(["candidate", result.objective.as_str()])
        .map_err(CliError::validation)?;
    for row in &result.score_table {
        table
            .write_record([row.label.as_str(), &format!("{:.6}", row.value)])
            .map_err(CliError::validation)?;
    }
    std::fs::write(
        out.join("score_table.csv"),
        table.into_inner().map_err(CliError::validation)?,
    )
    .map_err(|e| CliError::Validation(format!("writing score_table.csv: {e}")))?;

    RunManifest::new("fit")
        .with_corpus(&args.papers, &args.mentions)?
        .with_algorithm(kind.as_str())
        .with_params(result.config.to_toml())
        .write(out)?;
    eprintln!(
        "info: fitted {} ({} mode): {} = {:.4} after {} evaluations",
        kind,
        result.mode.as_str(),
        result.objective.as_str(),
        result.objective_value,
        result.n_evaluations
    );
    Ok(())
}

fn cmd_report(evals: &[PathBuf], out: &Path) -> CliResult<()> {
    let mut overall = String::from(REPORT_HEADER);
    let mut curves = String::from("approach,block_size,mean_f1_pair,mean_f1_best,n_blocks\n");
    for dir in evals {
        let report_path = dir.join("report.csv");
        let text = std::fs::read_to_string(&report_path)
            .map_err(|e| CliError::Validation(format!("reading {}: {e}", report_path.display())))?;
        for line in text.lines().skip(1) {
            overall.push_str(line);
            overall.push('\n');
        }
        let label = text
            .lines()
            .nth(1)
            .and_then(|l| l.split(',').next())
            .unwrap_or("run")
            .to_string();
        let curve_path = dir.join("size_curve.csv");
        let curve_text = std::fs::read_to_string(&curve_path)
            .map_err(|e| CliError::Validation(format!("reading {}: {e}", curve_path.display())))?;
        for line in curve_text.lines().skip(1) {
            curves.push_str(&label);
            curves.push(',');
            curves.push_str(line);
            curves.push('\n');
        }
    }
    write_file(&out.join("overall.csv"), &overall)?;
    write_file(&out.join("size_curves.csv"), &curves)?;
    eprintln!("info: joined {} evaluation runs", evals.len());
    Ok(())
}

fn cmd_dump_weights(args: &CorpusArgs, block_key: &str, out: &Path) -> CliResult<()> {
    let corpus = load_corpus(args)?;
    let blocks = build_blocks(&corpus).map_err(CliError::validation)?;
    let block = blocks
        .iter()
        .find(|b| b.key.key() == block_key)
        .ok_or_else(|| CliError::Validation(format!("no block with key {block_key:?}")))?;
    let weights = oeuvre::algorithms::field_weights(block, &corpus);
    let mut writer = csv::Writer::from_writer(Vec::new());
    writer
        .write_record(["field", "token", "weight"])
        .map_err(CliError::validation)?;
    for (field, token, weight) in &weights {
        writer
            .write_record([*field, token.as_str(), &format!("{weight:.6}")])
            .map_err(CliError::validation)?;
    }
    std::fs::write(
        out.join("weights.csv"),
        writer.into_inner().map_err(CliError::validation)?,
    )
    .map_err(|e| CliError::Validation(format!("writing weights.csv: {e}")))?;
    eprintln!("info: wrote {} token weights for block {:?}", weights.len(), block_key);
    Ok(())
}
