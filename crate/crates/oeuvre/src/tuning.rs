//! Threshold fitting by exhaustive candidate evaluation.
//!
//! Three search spaces, each containing the previous one's optimum:
//! a single global parameter vector, one threshold per block-size class
//! (rule-based strategy), and per-block "flexible" optima, which bound the
//! quality attainable by any threshold rule of the same family.
//!
//! The expensive work — pair scoring, merge traces — is computed once per
//! block and reused across every candidate, so a sweep costs little more
//! than a single run. Objectives are pooled over raw counts, exactly
//! matching what the evaluation report shows.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::algorithms::{
    backes, caron, cota, schulz, AlgoError, AlgorithmConfig, AlgorithmKind, BackesParams,
    BlockContext, CaronParams, CotaParams, SchulzParams,
};
use crate::algorithms::{BackesOverride, CaronOverride};
use crate::blocking::Block;
use crate::clustering::{Clustering, MergeTrace};
use crate::corpus::Corpus;
use crate::evaluation::{EvalError, EvalReport, PairCounts};
use crate::features::{GeneralNameList, RuleScoreTable};
use crate::par;

use serde::{Deserialize, Serialize};

#[derive(Debug, Error)]
pub enum TuneError {
    #[error("empty candidate grid for {0}")]
    EmptyGrid(&'static str),
    #[error("no block with gold-annotated mentions to fit on")]
    NoGoldBlocks,
    #[error("the baseline has no parameters to fit")]
    NotTunable,
    #[error("mode {mode:?} does not apply to algorithm {algorithm}")]
    UnsupportedMode { algorithm: &'static str, mode: FitMode },
    #[error(transparent)]
    Algo(#[from] AlgoError),
    #[error(transparent)]
    Eval(#[from] EvalError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Objective {
    F1Pair,
    F1Best,
}

impl Objective {
    pub fn as_str(&self) -> &'static str {
        match self {
            Objective::F1Pair => "f1_pair",
            Objective::F1Best => "f1_best",
        }
    }

    pub fn of(&self, report: &EvalReport) -> f64 {
        match self {
            Objective::F1Pair => report.f1_pair,
            Objective::F1Best => report.f1_best,
        }
    }

    fn of_counts(&self, counts: &PairCounts) -> f64 {
        match counts.report("") {
            Ok(report) => self.of(&report),
            Err(_) => 0.0,
        }
    }
}

impl std::str::FromStr for Objective {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "f1_pair" => Ok(Objective::F1Pair),
            "f1_best" => Ok(Objective::F1Best),
            other => Err(format!("unknown objective {other:?} (expected f1_pair or f1_best)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FitMode {
    Global,
    Classes,
    Flexible,
}

impl FitMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            FitMode::Global => "global",
            FitMode::Classes => "classes",
            FitMode::Flexible => "flexible",
        }
    }
}

impl std::str::FromStr for FitMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "global" => Ok(FitMode::Global),
            "classes" => Ok(FitMode::Classes),
            "flexible" => Ok(FitMode::Flexible),
            other => Err(format!(
                "unknown mode {other:?} (expected global, classes, or flexible)"
            )),
        }
    }
}

/// Candidate values per algorithm, loadable from a TOML file. Candidate
/// lists are sorted and deduplicated so that ties resolve to the smallest
/// parameter vector.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GridSpec {
    pub cota: CotaGrid,
    pub schulz: SchulzGrid,
    pub caron: CaronGrid,
    pub backes: BackesGrid,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CotaGrid {
    pub title_threshold: Vec<f64>,
    pub journal_threshold: Vec<f64>,
}

impl Default for CotaGrid {
    fn default() -> Self {
        CotaGrid {
            title_threshold: vec![0.1, 0.3, 0.5, 0.7, 0.9],
            journal_threshold: vec![0.1, 0.3, 0.5, 0.7, 0.9],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SchulzGrid {
    pub alpha_coauthor: f64,
    pub alpha_self_citation: f64,
    pub alpha_references: f64,
    pub alpha_citers: f64,
    pub beta1: Vec<f64>,
    pub beta2: Vec<f64>,
    pub beta3: Vec<f64>,
    pub beta4: Vec<f64>,
}

impl Default for SchulzGrid {
    fn default() -> Self {
        let defaults = SchulzParams::default();
        SchulzGrid {
            alpha_coauthor: defaults.alpha_coauthor,
            alpha_self_citation: defaults.alpha_self_citation,
            alpha_references: defaults.alpha_references,
            alpha_citers: defaults.alpha_citers,
            beta1: vec![0.3, 0.6, 0.9, 1.2],
            beta2: vec![0.2, 0.5, 0.8],
            beta3: vec![0.05, 0.15, 0.3],
            beta4: vec![0.5, 1.0, 1.5, 2.0],
        }
    }
}

impl SchulzGrid {
    fn params(&self, betas: (f64, f64, f64, f64)) -> SchulzParams {
        SchulzParams {
            alpha_coauthor: self.alpha_coauthor,
            alpha_self_citation: self.alpha_self_citation,
            alpha_references: self.alpha_references,
            alpha_citers: self.alpha_citers,
            beta1: betas.0,
            beta2: betas.1,
            beta3: betas.2,
            beta4: betas.3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CaronGrid {
    pub thresholds: Vec<i32>,
    pub class_bounds: Vec<usize>,
}

impl Default for CaronGrid {
    fn default() -> Self {
        CaronGrid {
            thresholds: vec![17, 19, 21, 23, 25, 27, 29, 31],
            class_bounds: CaronParams::default().class_bounds,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BackesGrid {
    pub lambda: Vec<f64>,
}

impl Default for BackesGrid {
    fn default() -> Self {
        BackesGrid {
            lambda: vec![0.0, 5e-5, 1e-4, 2e-4, 5e-4, 1e-3, 2e-3, 5e-3],
        }
    }
}

impl GridSpec {
    pub fn from_toml(text: &str) -> Result<Self, TuneError> {
        let mut grid: GridSpec =
            toml::from_str(text).map_err(|_| TuneError::EmptyGrid("unparseable grid file"))?;
        grid.normalize();
        Ok(grid)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("grid serialize")
    }

    fn normalize(&mut self) {
        let sort_f64 = |v: &mut Vec<f64>| {
            v.sort_by(|a, b| a.partial_cmp(b).expect("grid values must not be NaN"));
            v.dedup();
        };
        sort_f64(&mut self.cota.title_threshold);
        sort_f64(&mut self.cota.journal_threshold);
        sort_f64(&mut self.schulz.beta1);
        sort_f64(&mut self.schulz.beta2);
        sort_f64(&mut self.schulz.beta3);
        sort_f64(&mut self.schulz.beta4);
        sort_f64(&mut self.backes.lambda);
        self.caron.thresholds.sort_unstable();
        self.caron.thresholds.dedup();
    }
}

/// One row of the candidate score table.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreRow {
    pub label: String,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    pub algorithm: AlgorithmKind,
    pub mode: FitMode,
    pub objective: Objective,
    /// Ready to feed back into a disambiguation run.
    pub config: AlgorithmConfig,
    /// Pooled objective of the chosen configuration over all fitted blocks.
    pub objective_value: f64,
    pub score_table: Vec<ScoreRow>,
    pub n_evaluations: usize,
    pub warnings: Vec<String>,
}

struct Prepared<'a> {
    block: &'a Block,
    ctx: BlockContext<'a>,
    /// (block-order index, dense author id) for gold-annotated mentions.
    gold: Vec<(usize, u32)>,
}

impl Prepared<'_> {
    fn counts_for(&self, labels: &[u32]) -> PairCounts {
        let clusters: Vec<u32> = self.gold.iter().map(|&(i, _)| labels[i]).collect();
        let authors: Vec<u32> = self.gold.iter().map(|&(_, a)| a).collect();
        PairCounts::from_assignment(&clusters, &authors)
    }

    fn counts_for_clustering(&self, clustering: &Clustering) -> PairCounts {
        self.counts_for(clustering.assignment())
    }
}

fn prepare<'a>(
    corpus: &'a Corpus,
    blocks: &'a [Block],
    names: &GeneralNameList,
) -> Result<Vec<Prepared<'a>>, TuneError> {
    let prepared: Vec<Prepared> = blocks
        .iter()
        .filter_map(|block| {
            let mut gold = Vec::new();
            let mut authors: BTreeMap<&str, u32> = BTreeMap::new();
            for (idx, id) in block.mention_ids.iter().enumerate() {
                if let Some(author) =
                    corpus.mention(id).and_then(|m| m.gold_author_id.as_deref())
                {
                    let next = authors.len() as u32;
                    gold.push((idx, *authors.entry(author).or_insert(next)));
                }
            }
            if gold.is_empty() {
                None
            } else {
                Some(Prepared {
                    block,
                    ctx: BlockContext::build(block, corpus, names),
                    gold,
                })
            }
        })
        .collect();
    if prepared.is_empty() {
        return Err(TuneError::NoGoldBlocks);
    }
    Ok(prepared)
}

/// Argmax keeper with first-wins ties. Candidates must be offered in
/// lexicographic parameter order.
struct Best<T> {
    value: f64,
    choice: Option<T>,
}

impl<T> Best<T> {
    fn new() -> Self {
        Best {
            value: f64::NEG_INFINITY,
            choice: None,
        }
    }

    fn offer(&mut self, value: f64, choice: T) {
        if self.choice.is_none() || value > self.value {
            self.value = value;
            self.choice = Some(choice);
        }
    }

    fn take(self) -> (f64, T) {
        (self.value, self.choice.expect("at least one candidate was offered"))
    }
}

fn pool<'a, I: IntoIterator<Item = &'a PairCounts>>(counts: I) -> PairCounts {
    let mut total = PairCounts::default();
    for c in counts {
        total.add(c);
    }
    total
}

// ---------------------------------------------------------------------------
// per-algorithm caches

struct CaronCaches {
    /// Scored edges at or above the smallest candidate threshold.
    edges: Vec<Vec<(u32, u32, i32)>>,
}

fn caron_caches(prepared: &[Prepared], table: &RuleScoreTable, floor: i32) -> CaronCaches {
    CaronCaches {
        edges: par::map_collect(prepared, |p| caron::scored_edges(&p.ctx, table, floor)),
    }
}

fn caron_counts(prepared: &Prepared, edges: &[(u32, u32, i32)], threshold: i32) -> PairCounts {
    let clustering = caron::components_at_threshold(prepared.block, edges, threshold);
    prepared.counts_for_clustering(&clustering)
}

struct SchulzCaches {
    pairs: Vec<Vec<(u32, u32, f64)>>,
}

fn schulz_caches(prepared: &[Prepared], grid: &SchulzGrid) -> SchulzCaches {
    let probe = grid.params((0.0, 0.0, 0.0, 0.0));
    SchulzCaches {
        pairs: par::map_collect(prepared, |p| schulz::positive_pairs(&p.ctx, &probe)),
    }
}

struct BackesCache {
    sims: Vec<f64>,
    /// Gold-restricted counts for every trace prefix (index = merges done).
    prefix_counts: Vec<PairCounts>,
}

fn backes_caches(prepared: &[Prepared]) -> Vec<BackesCache> {
    par::map_collect(prepared, |p| {
        let trace = backes::full_trace(&p.ctx);
        let prefix_counts = trace_prefix_counts(&trace, &p.gold);
        BackesCache {
            sims: trace.steps().iter().map(|s| s.similarity).collect(),
            prefix_counts,
        }
    })
}

/// Gold-restricted [`PairCounts`] for every prefix of a merge trace,
/// maintained incrementally (small-to-large map merging), so a full sweep
/// costs O(n log n) instead of O(n²).
fn trace_prefix_counts(trace: &MergeTrace, gold: &[(usize, u32)]) -> Vec<PairCounts> {
    let choose2 = |n: u64| n * n.saturating_sub(1) / 2;
    let initial = trace.initial();
    let n_ids = initial.n_clusters() + trace.steps().len();

    let author_of: BTreeMap<usize, u32> = gold.iter().copied().collect();
    let mut cluster_authors: Vec<BTreeMap<u32, u64>> = vec![BTreeMap::new(); n_ids];
    for (idx, &cluster) in initial.assignment().iter().enumerate() {
        if let Some(&author) = author_of.get(&idx) {
            *cluster_authors[cluster as usize].entry(author).or_insert(0) += 1;
        }
    }

    let mut author_totals: BTreeMap<u32, u64> = BTreeMap::new();
    for &(_, author) in gold {
        *author_totals.entry(author).or_insert(0) += 1;
    }
    let pairs_author: u64 = author_totals.values().map(|&n| choose2(n)).sum();
    let n_authors = author_totals.len() as u64;
    let n_mentions = gold.len() as u64;

    let cluster_gold_size = |map: &BTreeMap<u32, u64>| map.values().sum::<u64>();
    let cluster_pairs_both = |map: &BTreeMap<u32, u64>| map.values().map(|&n| choose2(n)).sum::<u64>();
    let cluster_majority = |map: &BTreeMap<u32, u64>| map.values().copied().max().unwrap_or(0);

    let mut pairs_cluster: u64 = 0;
    let mut pairs_both: u64 = 0;
    let mut best_p: u64 = 0;
    let mut author_max: BTreeMap<u32, u64> = BTreeMap::new();
    let mut n_gold_clusters: u64 = 0;
    for map in cluster_authors.iter().take(initial.n_clusters()) {
        if map.is_empty() {
            continue;
        }
        n_gold_clusters += 1;
        pairs_cluster += choose2(cluster_gold_size(map));
        pairs_both += cluster_pairs_both(map);
        best_p += cluster_majority(map);
        for (&author, &count) in map {
            let m = author_max.entry(author).or_insert(0);
            *m = (*m).max(count);
        }
    }
    let mut best_r: u64 = author_max.values().sum();

    let snapshot = |pairs_cluster: u64, pairs_both: u64, best_p: u64, best_r: u64, n_gold_clusters: u64| PairCounts {
        pairs_both,
        pairs_cluster,
        pairs_author,
        best_precision_hits: best_p,
        best_recall_hits: best_r,
        n_mentions,
        n_authors,
        n_clusters: n_gold_clusters,
    };

    let mut out = Vec::with_capacity(trace.steps().len() + 1);
    out.push(snapshot(pairs_cluster, pairs_both, best_p, best_r, n_gold_clusters));

    for step in trace.steps() {
        let mut a = std::mem::take(&mut cluster_authors[step.cluster_a as usize]);
        let mut b = std::mem::take(&mut cluster_authors[step.cluster_b as usize]);
        let (empty_a, empty_b) = (a.is_empty(), b.is_empty());

        pairs_cluster -= choose2(cluster_gold_size(&a)) + choose2(cluster_gold_size(&b));
        pairs_both -= cluster_pairs_both(&a) + cluster_pairs_both(&b);
        best_p -= cluster_majority(&a) + cluster_majority(&b);

        if a.len() < b.len() {
            std::mem::swap(&mut a, &mut b);
        }
        for (author, count) in b {
            *a.entry(author).or_insert(0) += count;
        }
        if !a.is_empty() {
            pairs_cluster += choose2(cluster_gold_size(&a));
            pairs_both += cluster_pairs_both(&a);
            best_p += cluster_majority(&a);
            for (&author, &count) in &a {
                let m = author_max.entry(author).or_insert(0);
                if count > *m {
                    best_r += count - *m;
                    *m = count;
                }
            }
        }
        n_gold_clusters -= (!empty_a as u64) + (!empty_b as u64);
        if !a.is_empty() {
            n_gold_clusters += 1;
        }
        cluster_authors[step.merged as usize] = a;
        out.push(snapshot(pairs_cluster, pairs_both, best_p, best_r, n_gold_clusters));
    }
    out
}

/// Trace prefixes reachable by a non-negative quality limit, as
/// (prefix length, limit) pairs: the prefix of length k is produced by
/// `l = max(next similarity, 0)` whenever every kept step is strictly
/// above that.
fn reachable_cuts(sims: &[f64]) -> Vec<(usize, f64)> {
    let mut cuts = Vec::new();
    let mut running_min = f64::INFINITY;
    for k in 0..=sims.len() {
        let limit = if k == sims.len() { 0.0 } else { sims[k].max(0.0) };
        if running_min > limit {
            cuts.push((k, limit));
        }
        if k < sims.len() {
            running_min = running_min.min(sims[k]);
        }
    }
    cuts
}

// ---------------------------------------------------------------------------
// global fitting

/// Exhaustive evaluation of every grid point with one global parameter
/// vector; returns the argmax (ties to the lexicographically smallest
/// candidate).
pub fn fit_global(
    corpus: &Corpus,
    blocks: &[Block],
    table: &RuleScoreTable,
    names: &GeneralNameList,
    kind: AlgorithmKind,
    grid: &GridSpec,
    objective: Objective,
) -> Result<FitResult, TuneError> {
    let prepared = prepare(corpus, blocks, names)?;
    match kind {
        AlgorithmKind::Baseline => Err(TuneError::NotTunable),
        AlgorithmKind::Cota => fit_cota_global(&prepared, grid, objective),
        AlgorithmKind::Schulz => fit_schulz_full_grid(&prepared, grid, objective),
        AlgorithmKind::Caron => fit_caron_constant(&prepared, table, grid, objective),
        AlgorithmKind::Backes => fit_backes_global(&prepared, grid, objective),
    }
}

fn fit_cota_global(
    prepared: &[Prepared],
    grid: &GridSpec,
    objective: Objective,
) -> Result<FitResult, TuneError> {
    if grid.cota.title_threshold.is_empty() || grid.cota.journal_threshold.is_empty() {
        return Err(TuneError::EmptyGrid("cota thresholds"));
    }
    let caches: Vec<cota::CotaCache> = par::map_collect(prepared, |p| cota::build_cache(&p.ctx));
    let mut best = Best::new();
    let mut table_rows = Vec::new();
    let mut n_evaluations = 0;
    for &title in &grid.cota.title_threshold {
        for &journal in &grid.cota.journal_threshold {
            let params = CotaParams {
                title_threshold: title,
                journal_threshold: journal,
            };
            let counts = par::map_collect(&index_vec(prepared.len()), |&i| {
                prepared[i].counts_for_clustering(&cota::run_from_cache(&caches[i], &params))
            });
            let value = objective.of_counts(&pool(&counts));
            n_evaluations += 1;
            table_rows.push(ScoreRow {
                label: format!("title_threshold={title},journal_threshold={journal}"),
                value,
            });
            best.offer(value, params);
        }
    }
    let (value, params) = best.take();
    Ok(FitResult {
        algorithm: AlgorithmKind::Cota,
        mode: FitMode::Global,
        objective,
        config: AlgorithmConfig::Cota {
            global: params,
            per_block: BTreeMap::new(),
        },
        objective_value: value,
        score_table: table_rows,
        n_evaluations,
        warnings: Vec::new(),
    })
}

fn schulz_counts(
    prepared: &[Prepared],
    caches: &SchulzCaches,
    params: &SchulzParams,
) -> PairCounts {
    let counts = par::map_collect(&index_vec(prepared.len()), |&i| {
        let clustering = schulz::run_from_pairs(prepared[i].block, &caches.pairs[i], params);
        prepared[i].counts_for_clustering(&clustering)
    });
    pool(&counts)
}

/// Full 4-dimensional exhaustive search; the oracle the staged procedure is
/// checked against, and impractically large for real grids.
pub fn fit_schulz_full_grid_public(
    corpus: &Corpus,
    blocks: &[Block],
    names: &GeneralNameList,
    grid: &GridSpec,
    objective: Objective,
) -> Result<FitResult, TuneError> {
    let prepared = prepare(corpus, blocks, names)?;
    fit_schulz_full_grid(&prepared, grid, objective)
}

fn fit_schulz_full_grid(
    prepared: &[Prepared],
    grid: &GridSpec,
    objective: Objective,
) -> Result<FitResult, TuneError> {
    let g = &grid.schulz;
    if g.beta1.is_empty() || g.beta2.is_empty() || g.beta3.is_empty() || g.beta4.is_empty() {
        return Err(TuneError::EmptyGrid("schulz betas"));
    }
    let caches = schulz_caches(prepared, g);
    let mut best = Best::new();
    let mut table_rows = Vec::new();
    let mut n_evaluations = 0;
    for &b1 in &g.beta1 {
        for &b2 in &g.beta2 {
            for &b3 in &g.beta3 {
                for &b4 in &g.beta4 {
                    let params = g.params((b1, b2, b3, b4));
                    let value = objective.of_counts(&schulz_counts(prepared, &caches, &params));
                    n_evaluations += 1;
                    table_rows.push(ScoreRow {
                        label: format!("beta1={b1},beta2={b2},beta3={b3},beta4={b4}"),
                        value,
                    });
                    best.offer(value, params);
                }
            }
        }
    }
    let (value, params) = best.take();
    Ok(FitResult {
        algorithm: AlgorithmKind::Schulz,
        mode: FitMode::Global,
        objective,
        config: AlgorithmConfig::Schulz {
            global: params,
            per_block: BTreeMap::new(),
        },
        objective_value: value,
        score_table: table_rows,
        n_evaluations,
        warnings: Vec::new(),
    })
}

/// The staged search: β₁–β₃ fitted with the attachment step disabled, then
/// β₄ alone on the winning combination.
pub fn fit_schulz_staged(
    corpus: &Corpus,
    blocks: &[Block],
    names: &GeneralNameList,
    grid: &GridSpec,
    objective: Objective,
) -> Result<FitResult, TuneError> {
    let prepared = prepare(corpus, blocks, names)?;
    fit_schulz_staged_prepared(&prepared, grid, objective)
}

fn fit_schulz_staged_prepared(
    prepared: &[Prepared],
    grid: &GridSpec,
    objective: Objective,
) -> Result<FitResult, TuneError> {
    let g = &grid.schulz;
    if g.beta1.is_empty() || g.beta2.is_empty() || g.beta3.is_empty() || g.beta4.is_empty() {
        return Err(TuneError::EmptyGrid("schulz betas"));
    }
    let caches = schulz_caches(prepared, g);
    let mut table_rows = Vec::new();
    let mut n_evaluations = 0;

    // stage 1: beta4 = +inf disables singleton attachment
    let mut stage1 = Best::new();
    for &b1 in &g.beta1 {
        for &b2 in &g.beta2 {
            for &b3 in &g.beta3 {
                let params = g.params((b1, b2, b3, f64::INFINITY));
                let value = objective.of_counts(&schulz_counts(prepared, &caches, &params));
                n_evaluations += 1;
                table_rows.push(ScoreRow {
                    label: format!("stage=1,beta1={b1},beta2={b2},beta3={b3}"),
                    value,
                });
                stage1.offer(value, (b1, b2, b3));
            }
        }
    }
    let (_, (b1, b2, b3)) = stage1.take();

    // stage 2: beta4 alone on the winners
    let mut stage2 = Best::new();
    for &b4 in &g.beta4 {
        let params = g.params((b1, b2, b3, b4));
        let value = objective.of_counts(&schulz_counts(prepared, &caches, &params));
        n_evaluations += 1;
        table_rows.push(ScoreRow {
            label: format!("stage=2,beta4={b4}"),
            value,
        });
        stage2.offer(value, b4);
    }
    let (value, b4) = stage2.take();

    Ok(FitResult {
        algorithm: AlgorithmKind::Schulz,
        mode: FitMode::Global,
        objective,
        config: AlgorithmConfig::Schulz {
            global: g.params((b1, b2, b3, b4)),
            per_block: BTreeMap::new(),
        },
        objective_value: value,
        score_table: table_rows,
        n_evaluations,
        warnings: Vec::new(),
    })
}

fn fit_caron_constant(
    prepared: &[Prepared],
    table: &RuleScoreTable,
    grid: &GridSpec,
    objective: Objective,
) -> Result<FitResult, TuneError> {
    if grid.caron.thresholds.is_empty() {
        return Err(TuneError::EmptyGrid("caron thresholds"));
    }
    let floor = *grid.caron.thresholds.first().unwrap();
    let caches = caron_caches(prepared, table, floor);
    let mut best = Best::new();
    let mut table_rows = Vec::new();
    for &threshold in &grid.caron.thresholds {
        let counts = par::map_collect(&index_vec(prepared.len()), |&i| {
            caron_counts(&prepared[i], &caches.edges[i], threshold)
        });
        let value = objective.of_counts(&pool(&counts));
        table_rows.push(ScoreRow {
            label: format!("threshold={threshold}"),
            value,
        });
        best.offer(value, threshold);
    }
    let n_evaluations = table_rows.len();
    let (value, threshold) = best.take();
    Ok(FitResult {
        algorithm: AlgorithmKind::Caron,
        mode: FitMode::Global,
        objective,
        config: AlgorithmConfig::Caron {
            global: CaronParams {
                class_bounds: Vec::new(),
                class_thresholds: vec![threshold],
            },
            per_block: BTreeMap::new(),
        },
        objective_value: value,
        score_table: table_rows,
        n_evaluations,
        warnings: Vec::new(),
    })
}

fn fit_backes_global(
    prepared: &[Prepared],
    grid: &GridSpec,
    objective: Objective,
) -> Result<FitResult, TuneError> {
    if grid.backes.lambda.is_empty() {
        return Err(TuneError::EmptyGrid("backes lambda"));
    }
    let caches = backes_caches(prepared);
    let mut best = Best::new();
    let mut table_rows = Vec::new();
    for &lambda in &grid.backes.lambda {
        let mut total = PairCounts::default();
        for (p, cache) in prepared.iter().zip(&caches) {
            let limit = lambda * p.block.mention_ids.len() as f64;
            let k = cache.sims.iter().position(|&s| s <= limit).unwrap_or(cache.sims.len());
            total.add(&cache.prefix_counts[k]);
        }
        let value = objective.of_counts(&total);
        table_rows.push(ScoreRow {
            label: format!("lambda={lambda}"),
            value,
        });
        best.offer(value, lambda);
    }
    let n_evaluations = table_rows.len();
    let (value, lambda) = best.take();
    Ok(FitResult {
        algorithm: AlgorithmKind::Backes,
        mode: FitMode::Global,
        objective,
        config: AlgorithmConfig::Backes {
            global: BackesParams {
                lambda,
                limit: None,
            },
            per_block: BTreeMap::new(),
        },
        objective_value: value,
        score_table: table_rows,
        n_evaluations,
        warnings: Vec::new(),
    })
}

// ---------------------------------------------------------------------------
// pooled coordinate ascent shared by the classes and flexible modes
//
// Each unit (a block, or a block-size class) has a finite candidate list
// with precomputed counts. Starting from a seed assignment, units are
// revisited in order and re-chosen to maximize the POOLED objective given
// the others; only strict improvements are accepted, so the result never
// falls below the seed and the loop terminates. Seeding with the coarser
// search space's optimum makes the containment ordering
// flexible >= classes >= global exact under pooled aggregation.

fn coordinate_ascent<P>(
    candidates: &[Vec<(P, PairCounts)>],
    mut choice: Vec<usize>,
    objective: Objective,
) -> (Vec<usize>, f64) {
    let mut total = PairCounts::default();
    for (unit, &c) in candidates.iter().zip(&choice) {
        total.add(&unit[c].1);
    }
    let mut value = objective.of_counts(&total);
    loop {
        let mut improved = false;
        for (u, unit) in candidates.iter().enumerate() {
            let current = choice[u];
            let mut base = total;
            base.subtract(&unit[current].1);
            let mut best_idx = current;
            let mut best_value = value;
            for (k, (_, counts)) in unit.iter().enumerate() {
                if k == current {
                    continue;
                }
                let mut with_k = base;
                with_k.add(counts);
                let v = objective.of_counts(&with_k);
                if v > best_value {
                    best_value = v;
                    best_idx = k;
                }
            }
            if best_idx != current {
                base.add(&unit[best_idx].1);
                total = base;
                value = best_value;
                choice[u] = best_idx;
                improved = true;
            }
        }
        if !improved {
            break;
        }
    }
    (choice, value)
}

/// Pooled argmax over a rectangular candidate table (same candidates for
/// every unit): the global-mode winner, reused as the ascent seed.
fn pooled_argmax<P>(candidates: &[Vec<(P, PairCounts)>], n_candidates: usize, objective: Objective) -> (usize, f64) {
    let mut best = (0usize, f64::NEG_INFINITY);
    for k in 0..n_candidates {
        let total = pool(candidates.iter().map(|unit| &unit[k].1));
        let v = objective.of_counts(&total);
        if best.1 == f64::NEG_INFINITY || v > best.1 {
            best = (k, v);
        }
    }
    best
}

// ---------------------------------------------------------------------------
// block-size classes (rule-based strategy)

/// Fits one threshold per block-size class. Seeded with the best constant
/// threshold, then each class's threshold is improved against the pooled
/// objective until nothing changes, so the result never scores below the
/// constant fit.
pub fn fit_caron_classes(
    corpus: &Corpus,
    blocks: &[Block],
    table: &RuleScoreTable,
    names: &GeneralNameList,
    grid: &GridSpec,
    objective: Objective,
) -> Result<FitResult, TuneError> {
    let prepared = prepare(corpus, blocks, names)?;
    if grid.caron.thresholds.is_empty() {
        return Err(TuneError::EmptyGrid("caron thresholds"));
    }
    let bounds = grid.caron.class_bounds.clone();
    let shape = CaronParams {
        class_bounds: bounds.clone(),
        class_thresholds: vec![0; bounds.len() + 1],
    };
    shape.validate()?;

    let floor = *grid.caron.thresholds.first().unwrap();
    let caches = caron_caches(&prepared, table, floor);
    let block_counts = caron_block_counts(&prepared, &caches, &grid.caron.thresholds);

    let n_classes = bounds.len() + 1;
    let mut members: Vec<Vec<usize>> = vec![Vec::new(); n_classes];
    for (i, p) in prepared.iter().enumerate() {
        members[shape.class_of(p.block.mention_ids.len())].push(i);
    }

    // candidate table per nonempty class: pooled counts of its blocks
    let occupied: Vec<usize> = (0..n_classes).filter(|c| !members[*c].is_empty()).collect();
    let class_candidates: Vec<Vec<(i32, PairCounts)>> = occupied
        .iter()
        .map(|&class| {
            grid.caron
                .thresholds
                .iter()
                .enumerate()
                .map(|(k, &t)| (t, pool(members[class].iter().map(|&i| &block_counts[i][k]))))
                .collect()
        })
        .collect();
    let n_evaluations = class_candidates.len() * grid.caron.thresholds.len();

    let mut table_rows = Vec::new();
    for (ci, &class) in occupied.iter().enumerate() {
        for (t, counts) in &class_candidates[ci] {
            table_rows.push(ScoreRow {
                label: format!("class={class},threshold={t}"),
                value: objective.of_counts(counts),
            });
        }
    }

    let (seed_idx, _) = pooled_argmax(&class_candidates, grid.caron.thresholds.len(), objective);
    let (choice, objective_value) = coordinate_ascent(
        &class_candidates,
        vec![seed_idx; class_candidates.len()],
        objective,
    );

    // assemble thresholds; classes without blocks inherit from the nearest
    // fitted class below, or above for a leading run of empties
    let mut chosen: Vec<Option<i32>> = vec![None; n_classes];
    for (ci, &class) in occupied.iter().enumerate() {
        chosen[class] = Some(class_candidates[ci][choice[ci]].0);
    }
    let mut warnings = Vec::new();
    let mut thresholds = Vec::with_capacity(n_classes);
    for class in 0..n_classes {
        match chosen[class] {
            Some(t) => thresholds.push(t),
            None => {
                let inherited = chosen[..class]
                    .iter()
                    .rev()
                    .flatten()
                    .next()
                    .or_else(|| chosen[class + 1..].iter().flatten().next())
                    .copied()
                    .expect("at least one class has blocks");
                warnings.push(format!(
                    "block-size class {class} has no blocks; inheriting threshold {inherited}"
                ));
                thresholds.push(inherited);
            }
        }
    }

    Ok(FitResult {
        algorithm: AlgorithmKind::Caron,
        mode: FitMode::Classes,
        objective,
        config: AlgorithmConfig::Caron {
            global: CaronParams {
                class_bounds: bounds,
                class_thresholds: thresholds,
            },
            per_block: BTreeMap::new(),
        },
        objective_value,
        score_table: table_rows,
        n_evaluations,
        warnings,
    })
}

/// Per-block counts for every threshold candidate, computed once.
fn caron_block_counts(
    prepared: &[Prepared],
    caches: &CaronCaches,
    thresholds: &[i32],
) -> Vec<Vec<PairCounts>> {
    par::map_collect(&index_vec(prepared.len()), |&i| {
        thresholds
            .iter()
            .map(|&t| caron_counts(&prepared[i], &caches.edges[i], t))
            .collect()
    })
}

// ---------------------------------------------------------------------------
// flexible (per-block) fitting

/// Per-block optima: every block gets its own parameter choice. Seeded
/// with the global winner (for the rule-based strategy, the better of the
/// global and classes fits) and improved by pooled coordinate ascent, the
/// result bounds from above what the coarser threshold rules can achieve.
pub fn fit_flexible(
    corpus: &Corpus,
    blocks: &[Block],
    table: &RuleScoreTable,
    names: &GeneralNameList,
    kind: AlgorithmKind,
    grid: &GridSpec,
    objective: Objective,
) -> Result<FitResult, TuneError> {
    let prepared = prepare(corpus, blocks, names)?;
    match kind {
        AlgorithmKind::Baseline => Err(TuneError::NotTunable),
        AlgorithmKind::Cota => fit_cota_flexible(&prepared, grid, objective),
        AlgorithmKind::Schulz => fit_schulz_flexible(&prepared, grid, objective),
        AlgorithmKind::Caron => fit_caron_flexible(&prepared, table, grid, objective),
        AlgorithmKind::Backes => fit_backes_flexible(&prepared, grid, objective),
    }
}

fn flexible_rows<P, F: Fn(&P) -> String>(
    prepared: &[Prepared],
    candidates: &[Vec<(P, PairCounts)>],
    choice: &[usize],
    objective: Objective,
    describe: F,
) -> Vec<ScoreRow> {
    prepared
        .iter()
        .zip(candidates.iter().zip(choice))
        .map(|(p, (unit, &c))| ScoreRow {
            label: format!("block={},{}", p.block.key, describe(&unit[c].0)),
            value: objective.of_counts(&unit[c].1),
        })
        .collect()
}

fn fit_cota_flexible(
    prepared: &[Prepared],
    grid: &GridSpec,
    objective: Objective,
) -> Result<FitResult, TuneError> {
    if grid.cota.title_threshold.is_empty() || grid.cota.journal_threshold.is_empty() {
        return Err(TuneError::EmptyGrid("cota thresholds"));
    }
    let mut params = Vec::new();
    for &title in &grid.cota.title_threshold {
        for &journal in &grid.cota.journal_threshold {
            params.push(CotaParams {
                title_threshold: title,
                journal_threshold: journal,
            });
        }
    }
    let candidates: Vec<Vec<(CotaParams, PairCounts)>> =
        par::map_collect(&index_vec(prepared.len()), |&i| {
            let cache = cota::build_cache(&prepared[i].ctx);
            params
                .iter()
                .map(|p| {
                    (*p, prepared[i].counts_for_clustering(&cota::run_from_cache(&cache, p)))
                })
                .collect()
        });
    let n_evaluations = prepared.len() * params.len();

    let (seed, _) = pooled_argmax(&candidates, params.len(), objective);
    let (choice, objective_value) =
        coordinate_ascent(&candidates, vec![seed; prepared.len()], objective);

    let rows = flexible_rows(prepared, &candidates, &choice, objective, |p| {
        format!("title_threshold={},journal_threshold={}", p.title_threshold, p.journal_threshold)
    });
    let per_block: BTreeMap<String, CotaParams> = prepared
        .iter()
        .zip(candidates.iter().zip(&choice))
        .map(|(p, (unit, &c))| (p.block.key.key().to_string(), unit[c].0))
        .collect();
    Ok(FitResult {
        algorithm: AlgorithmKind::Cota,
        mode: FitMode::Flexible,
        objective,
        config: AlgorithmConfig::Cota {
            global: params[seed],
            per_block,
        },
        objective_value,
        score_table: rows,
        n_evaluations,
        warnings: Vec::new(),
    })
}

fn fit_schulz_flexible(
    prepared: &[Prepared],
    grid: &GridSpec,
    objective: Objective,
) -> Result<FitResult, TuneError> {
    let g = &grid.schulz;
    if g.beta1.is_empty() || g.beta2.is_empty() || g.beta3.is_empty() || g.beta4.is_empty() {
        return Err(TuneError::EmptyGrid("schulz betas"));
    }
    let caches = schulz_caches(prepared, g);
    let mut params = Vec::new();
    for &b1 in &g.beta1 {
        for &b2 in &g.beta2 {
            for &b3 in &g.beta3 {
                for &b4 in &g.beta4 {
                    params.push(g.params((b1, b2, b3, b4)));
                }
            }
        }
    }
    let candidates: Vec<Vec<(SchulzParams, PairCounts)>> =
        par::map_collect(&index_vec(prepared.len()), |&i| {
            params
                .iter()
                .map(|p| {
                    let clustering =
                        schulz::run_from_pairs(prepared[i].block, &caches.pairs[i], p);
                    (*p, prepared[i].counts_for_clustering(&clustering))
                })
                .collect()
        });
    let n_evaluations = prepared.len() * params.len();

    // the full-grid pooled winner is at least as good as the staged one
    // and lies in every block's candidate list
    let (seed, _) = pooled_argmax(&candidates, params.len(), objective);
    let (choice, objective_value) =
        coordinate_ascent(&candidates, vec![seed; prepared.len()], objective);

    let rows = flexible_rows(prepared, &candidates, &choice, objective, |p| {
        format!("beta1={},beta2={},beta3={},beta4={}", p.beta1, p.beta2, p.beta3, p.beta4)
    });
    let per_block: BTreeMap<String, SchulzParams> = prepared
        .iter()
        .zip(candidates.iter().zip(&choice))
        .map(|(p, (unit, &c))| (p.block.key.key().to_string(), unit[c].0))
        .collect();
    Ok(FitResult {
        algorithm: AlgorithmKind::Schulz,
        mode: FitMode::Flexible,
        objective,
        config: AlgorithmConfig::Schulz {
            global: params[seed],
            per_block,
        },
        objective_value,
        score_table: rows,
        n_evaluations,
        warnings: Vec::new(),
    })
}

fn fit_caron_flexible(
    prepared: &[Prepared],
    table: &RuleScoreTable,
    grid: &GridSpec,
    objective: Objective,
) -> Result<FitResult, TuneError> {
    if grid.caron.thresholds.is_empty() {
        return Err(TuneError::EmptyGrid("caron thresholds"));
    }
    let thresholds = &grid.caron.thresholds;
    let floor = *thresholds.first().unwrap();
    let caches = caron_caches(prepared, table, floor);
    let block_counts = caron_block_counts(prepared, &caches, thresholds);
    let candidates: Vec<Vec<(i32, PairCounts)>> = block_counts
        .iter()
        .map(|counts| thresholds.iter().copied().zip(counts.iter().copied()).collect())
        .collect();
    let n_evaluations = prepared.len() * thresholds.len();

    // seed 1: best constant threshold
    let (constant_seed, _) = pooled_argmax(&candidates, thresholds.len(), objective);
    let ascent_constant = coordinate_ascent(
        &candidates,
        vec![constant_seed; prepared.len()],
        objective,
    );

    // seed 2: the block-size-classes assignment, so the flexible result
    // also dominates the classes fit
    let shape = CaronParams {
        class_bounds: grid.caron.class_bounds.clone(),
        class_thresholds: vec![0; grid.caron.class_bounds.len() + 1],
    };
    let classes_seed: Option<Vec<usize>> = {
        let n_classes = grid.caron.class_bounds.len() + 1;
        let mut members: Vec<Vec<usize>> = vec![Vec::new(); n_classes];
        for (i, p) in prepared.iter().enumerate() {
            members[shape.class_of(p.block.mention_ids.len())].push(i);
        }
        let occupied: Vec<usize> = (0..n_classes).filter(|c| !members[*c].is_empty()).collect();
        let class_candidates: Vec<Vec<(i32, PairCounts)>> = occupied
            .iter()
            .map(|&class| {
                thresholds
                    .iter()
                    .enumerate()
                    .map(|(k, &t)| (t, pool(members[class].iter().map(|&i| &block_counts[i][k]))))
                    .collect()
            })
            .collect();
        if class_candidates.is_empty() {
            None
        } else {
            let (class_seed, _) = pooled_argmax(&class_candidates, thresholds.len(), objective);
            let (class_choice, _) = coordinate_ascent(
                &class_candidates,
                vec![class_seed; class_candidates.len()],
                objective,
            );
            let mut threshold_idx_of_class = vec![constant_seed; n_classes];
            for (ci, &class) in occupied.iter().enumerate() {
                threshold_idx_of_class[class] = class_choice[ci];
            }
            Some(
                prepared
                    .iter()
                    .map(|p| threshold_idx_of_class[shape.class_of(p.block.mention_ids.len())])
                    .collect(),
            )
        }
    };
    let best_ascent = match classes_seed {
        Some(seed) => {
            let ascent_classes = coordinate_ascent(&candidates, seed, objective);
            if ascent_classes.1 > ascent_constant.1 {
                ascent_classes
            } else {
                ascent_constant
            }
        }
        None => ascent_constant,
    };
    let (choice, objective_value) = best_ascent;

    let rows = flexible_rows(prepared, &candidates, &choice, objective, |t| {
        format!("threshold={t}")
    });
    let per_block: BTreeMap<String, CaronOverride> = prepared
        .iter()
        .zip(candidates.iter().zip(&choice))
        .map(|(p, (unit, &c))| {
            (p.block.key.key().to_string(), CaronOverride { threshold: unit[c].0 })
        })
        .collect();
    Ok(FitResult {
        algorithm: AlgorithmKind::Caron,
        mode: FitMode::Flexible,
        objective,
        config: AlgorithmConfig::Caron {
            global: CaronParams::default(),
            per_block,
        },
        objective_value,
        score_table: rows,
        n_evaluations,
        warnings: Vec::new(),
    })
}

fn fit_backes_flexible(
    prepared: &[Prepared],
    grid: &GridSpec,
    objective: Objective,
) -> Result<FitResult, TuneError> {
    if grid.backes.lambda.is_empty() {
        return Err(TuneError::EmptyGrid("backes lambda"));
    }
    let caches = backes_caches(prepared);

    // per-block candidates: every trace cut reachable by some limit
    let candidates: Vec<Vec<(f64, PairCounts)>> = caches
        .iter()
        .map(|cache| {
            reachable_cuts(&cache.sims)
                .into_iter()
                .map(|(k, limit)| (limit, cache.prefix_counts[k]))
                .collect()
        })
        .collect();
    let n_evaluations: usize = candidates.iter().map(Vec::len).sum();

    // prefix length -> candidate index, per block
    let cut_index: Vec<BTreeMap<usize, usize>> = caches
        .iter()
        .map(|cache| {
            reachable_cuts(&cache.sims)
                .into_iter()
                .enumerate()
                .map(|(idx, (k, _))| (k, idx))
                .collect()
        })
        .collect();

    // seed: the best global lambda, mapped to each block's matching cut
    // (any non-negative limit's prefix is itself a reachable cut)
    let mut seed_best: Option<(f64, Vec<usize>)> = None;
    for &lambda in &grid.backes.lambda {
        let mut choice = Vec::with_capacity(prepared.len());
        let mut total = PairCounts::default();
        for ((p, cache), index) in prepared.iter().zip(&caches).zip(&cut_index) {
            let limit = lambda * p.block.mention_ids.len() as f64;
            let k = cache.sims.iter().position(|&s| s <= limit).unwrap_or(cache.sims.len());
            total.add(&cache.prefix_counts[k]);
            choice.push(index[&k]);
        }
        let value = objective.of_counts(&total);
        if seed_best.as_ref().is_none_or(|(v, _)| value > *v) {
            seed_best = Some((value, choice));
        }
    }
    let (_, seed) = seed_best.expect("lambda grid is nonempty");
    let (choice, objective_value) = coordinate_ascent(&candidates, seed, objective);

    let rows = flexible_rows(prepared, &candidates, &choice, objective, |limit| {
        format!("limit={limit}")
    });
    let per_block: BTreeMap<String, BackesOverride> = prepared
        .iter()
        .zip(candidates.iter().zip(&choice))
        .map(|(p, (unit, &c))| {
            (p.block.key.key().to_string(), BackesOverride { limit: unit[c].0 })
        })
        .collect();
    Ok(FitResult {
        algorithm: AlgorithmKind::Backes,
        mode: FitMode::Flexible,
        objective,
        config: AlgorithmConfig::Backes {
            global: BackesParams::default(),
            per_block,
        },
        objective_value,
        score_table: rows,
        n_evaluations,
        warnings: Vec::new(),
    })
}

fn index_vec(n: usize) -> Vec<usize> {
    (0..n).collect()
}

/// Umbrella entry point matching the CLI surface. For the Schulz strategy
/// the global mode runs the staged procedure; `fit_global` stays available
/// as the exhaustive reference.
pub fn fit(
    corpus: &Corpus,
    blocks: &[Block],
    table: &RuleScoreTable,
    names: &GeneralNameList,
    kind: AlgorithmKind,
    grid: &GridSpec,
    objective: Objective,
    mode: FitMode,
) -> Result<FitResult, TuneError> {
    match (kind, mode) {
        (AlgorithmKind::Baseline, _) => Err(TuneError::NotTunable),
        (AlgorithmKind::Schulz, FitMode::Global) => {
            fit_schulz_staged(corpus, blocks, names, grid, objective)
        }
        (_, FitMode::Global) => fit_global(corpus, blocks, table, names, kind, grid, objective),
        (AlgorithmKind::Caron, FitMode::Classes) => {
            fit_caron_classes(corpus, blocks, table, names, grid, objective)
        }
        (kind, FitMode::Classes) => Err(TuneError::UnsupportedMode {
            algorithm: kind.as_str(),
            mode,
        }),
        (_, FitMode::Flexible) => {
            fit_flexible(corpus, blocks, table, names, kind, grid, objective)
        }
    }
}
