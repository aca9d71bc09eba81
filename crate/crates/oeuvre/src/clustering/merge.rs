//! Greedy max-similarity agglomerative merging.
//!
//! Each iteration merges the single most similar pair of clusters, ties
//! broken by the smallest (cluster id, cluster id) pair, and records the
//! similarity in a trace. Run with `stop = -inf` the trace is a full
//! dendrogram; [`MergeTrace::cut`] then replays the leading merges above any
//! quality limit, which reproduces exactly what a direct run with that stop
//! value would have produced. That lets threshold sweeps reuse one
//! clustering run per block.
//!
//! Cluster ids: the initial clusters keep their canonical ids `0..k`; the
//! merge at step `s` creates cluster `k + s`.
//!
//! The loop keeps a condensed pairwise similarity matrix with a best-partner
//! cache per row, so a full run costs O(n²) similarity evaluations plus
//! cheap cache maintenance rather than O(n³) rescans.

use super::{Clustering, UnionFind};
use crate::par;

/// Cluster-pair similarity oracle driving the merge loop. Implementations
/// must be deterministic and symmetric, and must never return NaN.
pub trait ClusterScorer: Sync {
    /// Similarity between the live clusters `a` and `b`.
    fn similarity(&self, a: u32, b: u32) -> f64;
    /// Notification that `a` and `b` merged into the new cluster `merged`.
    fn merged(&mut self, a: u32, b: u32, merged: u32);
}

/// Adapts a plain function over member index slices into a
/// [`ClusterScorer`], tracking membership internally.
pub struct MemberScorer<F> {
    members: Vec<Vec<usize>>,
    f: F,
}

impl<F: Fn(&[usize], &[usize]) -> f64 + Sync> MemberScorer<F> {
    pub fn new(initial: &Clustering, f: F) -> Self {
        MemberScorer {
            members: initial.clusters(),
            f,
        }
    }
}

impl<F: Fn(&[usize], &[usize]) -> f64 + Sync> ClusterScorer for MemberScorer<F> {
    fn similarity(&self, a: u32, b: u32) -> f64 {
        (self.f)(&self.members[a as usize], &self.members[b as usize])
    }

    fn merged(&mut self, a: u32, b: u32, merged: u32) {
        debug_assert_eq!(merged as usize, self.members.len());
        let mut union = self.members[a as usize].clone();
        union.extend_from_slice(&self.members[b as usize]);
        union.sort_unstable();
        self.members.push(union);
    }
}

/// One recorded merge: the two cluster ids, the id of the cluster they
/// formed, and the similarity at which it happened.
#[derive(Debug, Clone, PartialEq)]
pub struct MergeStep {
    pub cluster_a: u32,
    pub cluster_b: u32,
    pub merged: u32,
    pub similarity: f64,
}

/// The ordered record of a merge run, replayable to the clustering at any
/// quality limit.
#[derive(Debug, Clone, PartialEq)]
pub struct MergeTrace {
    initial: Clustering,
    steps: Vec<MergeStep>,
}

impl MergeTrace {
    pub fn initial(&self) -> &Clustering {
        &self.initial
    }

    pub fn steps(&self) -> &[MergeStep] {
        &self.steps
    }

    /// Number of leading merges with similarity strictly above `limit`.
    pub fn prefix_len(&self, limit: f64) -> usize {
        self.steps
            .iter()
            .position(|s| s.similarity <= limit)
            .unwrap_or(self.steps.len())
    }

    /// Replays the first `k` merges.
    pub fn cut_prefix(&self, k: usize) -> Clustering {
        let n = self.initial.len();
        let n_initial = self.initial.n_clusters();
        let mut uf = UnionFind::new(n);
        // one representative mention per cluster id
        let mut rep = vec![usize::MAX; n_initial + k];
        for (idx, &cluster) in self.initial.assignment().iter().enumerate() {
            if rep[cluster as usize] == usize::MAX {
                rep[cluster as usize] = idx;
            } else {
                uf.union(rep[cluster as usize], idx);
            }
        }
        for step in &self.steps[..k] {
            let (a, b) = (rep[step.cluster_a as usize], rep[step.cluster_b as usize]);
            uf.union(a, b);
            rep[step.merged as usize] = a;
        }
        Clustering::from_labels(self.initial.mention_ids().to_vec(), &uf.labels())
    }

    /// The clustering a direct greedy run with `stop = limit` would return:
    /// replays merges while their similarity exceeds `limit`.
    pub fn cut(&self, limit: f64) -> Clustering {
        self.cut_prefix(self.prefix_len(limit))
    }

    /// `step,similarity` rows.
    pub fn write_csv<W: std::io::Write>(&self, mut writer: W) -> std::io::Result<()> {
        writeln!(writer, "step,similarity")?;
        for (idx, step) in self.steps.iter().enumerate() {
            writeln!(writer, "{},{}", idx + 1, step.similarity)?;
        }
        Ok(())
    }
}

#[derive(Clone, Copy)]
struct RowBest {
    sim: f64,
    /// Column slot of the row's best pair; `usize::MAX` when the row has no
    /// columns.
    partner: usize,
}

const NO_PARTNER: usize = usize::MAX;

struct MergeState {
    /// Live cluster id per slot.
    ids: Vec<u32>,
    /// Mention indices per slot.
    members: Vec<Vec<usize>>,
    /// Condensed matrix: `sims[i][j]` for `j < i` between slots i and j.
    sims: Vec<Vec<f64>>,
    row_best: Vec<RowBest>,
}

impl MergeState {
    fn pair_ids(&self, i: usize, j: usize) -> (u32, u32) {
        let (a, b) = (self.ids[i], self.ids[j]);
        if a < b {
            (a, b)
        } else {
            (b, a)
        }
    }

    /// Strictly better under (similarity desc, id pair asc).
    fn better(sim_a: f64, pair_a: (u32, u32), sim_b: f64, pair_b: (u32, u32)) -> bool {
        match sim_a.partial_cmp(&sim_b).expect("similarity must not be NaN") {
            std::cmp::Ordering::Greater => true,
            std::cmp::Ordering::Less => false,
            std::cmp::Ordering::Equal => pair_a < pair_b,
        }
    }

    fn rescan_row(&mut self, i: usize) {
        let mut best = RowBest {
            sim: f64::NEG_INFINITY,
            partner: NO_PARTNER,
        };
        let mut best_pair = (u32::MAX, u32::MAX);
        for j in 0..i {
            let sim = self.sims[i][j];
            let pair = self.pair_ids(i, j);
            if best.partner == NO_PARTNER || Self::better(sim, pair, best.sim, best_pair) {
                best = RowBest { sim, partner: j };
                best_pair = pair;
            }
        }
        self.row_best[i] = best;
    }

    /// Compares the current (x, col) entry into row x's cached best.
    fn consider_entry(&mut self, x: usize, col: usize) {
        if x <= col {
            return;
        }
        let sim = self.sims[x][col];
        let pair = self.pair_ids(x, col);
        let cur = self.row_best[x];
        if cur.partner == NO_PARTNER {
            self.row_best[x] = RowBest { sim, partner: col };
            return;
        }
        let cur_pair = self.pair_ids(x, cur.partner);
        if Self::better(sim, pair, cur.sim, cur_pair) {
            self.row_best[x] = RowBest { sim, partner: col };
        }
    }

    /// Global argmax pair as (row, partner).
    fn global_best(&self) -> Option<(usize, usize)> {
        let mut best: Option<(f64, (u32, u32), usize)> = None;
        for (i, rb) in self.row_best.iter().enumerate() {
            if rb.partner == NO_PARTNER {
                continue;
            }
            let pair = self.pair_ids(i, rb.partner);
            let replace = match &best {
                None => true,
                Some((bsim, bpair, _)) => Self::better(rb.sim, pair, *bsim, *bpair),
            };
            if replace {
                best = Some((rb.sim, pair, i));
            }
        }
        best.map(|(_, _, i)| (i, self.row_best[i].partner))
    }

    /// Removes slot `r` by swapping it with the last slot and popping the
    /// last matrix row. Returns the slot that now holds the former last
    /// slot, or None when `r` itself was last.
    fn remove_slot(&mut self, r: usize) -> Option<usize> {
        let last = self.ids.len() - 1;
        if r != last {
            for x in 0..last {
                if x == r {
                    continue;
                }
                // entry(x, r) <-> entry(x, last); entry(x, last) lives in
                // row `last` since x < last
                let v_last = self.sims[last][x];
                let v_r = if x < r {
                    std::mem::replace(&mut self.sims[r][x], v_last)
                } else {
                    std::mem::replace(&mut self.sims[x][r], v_last)
                };
                self.sims[last][x] = v_r;
            }
            self.ids.swap(r, last);
            self.members.swap(r, last);
            self.row_best.swap(r, last);
        }
        self.ids.pop();
        self.members.pop();
        self.sims.pop();
        self.row_best.pop();
        if r < self.ids.len() {
            Some(r)
        } else {
            None
        }
    }
}

/// Repeatedly merges the most similar cluster pair while that similarity
/// strictly exceeds `stop`. Returns the resulting clustering and the trace
/// of every merge performed.
pub fn greedy_max_merge<S: ClusterScorer>(
    initial: &Clustering,
    scorer: &mut S,
    stop: f64,
) -> (Clustering, MergeTrace) {
    let n_initial = initial.n_clusters();
    let mut state = MergeState {
        ids: (0..n_initial as u32).collect(),
        members: initial.clusters(),
        sims: Vec::new(),
        row_best: vec![
            RowBest {
                sim: f64::NEG_INFINITY,
                partner: NO_PARTNER
            };
            n_initial
        ],
    };

    state.sims = {
        let ids = &state.ids;
        let scorer_ref: &S = scorer;
        par::map_range(n_initial, |i| {
            (0..i).map(|j| scorer_ref.similarity(ids[i], ids[j])).collect()
        })
    };
    for i in 0..n_initial {
        state.rescan_row(i);
    }

    let mut steps = Vec::new();
    let mut next_id = n_initial as u32;

    while state.ids.len() > 1 {
        let (row, partner) = match state.global_best() {
            Some(pair) => pair,
            None => break,
        };
        let sim = state.sims[row][partner];
        if sim <= stop {
            break;
        }
        let (j, r) = (partner, row); // j < r
        let (id_lo, id_hi) = state.pair_ids(j, r);
        let merged_id = next_id;
        next_id += 1;
        steps.push(MergeStep {
            cluster_a: id_lo,
            cluster_b: id_hi,
            merged: merged_id,
            similarity: sim,
        });
        scorer.merged(id_lo, id_hi, merged_id);

        // the merged cluster takes over slot j
        let mut union = std::mem::take(&mut state.members[j]);
        union.extend_from_slice(&state.members[r]);
        union.sort_unstable();
        state.members[j] = union;
        state.ids[j] = merged_id;

        let relocated = state.remove_slot(r);
        let m = state.ids.len();

        // fresh similarities against the merged cluster
        let new_sims: Vec<f64> = {
            let ids = &state.ids;
            let scorer_ref: &S = scorer;
            par::map_range(m, |x| {
                if x == j {
                    f64::NEG_INFINITY
                } else {
                    scorer_ref.similarity(ids[x], merged_id)
                }
            })
        };
        for (x, &sim) in new_sims.iter().enumerate() {
            if x == j {
                continue;
            }
            if x < j {
                state.sims[j][x] = sim;
            } else {
                state.sims[x][j] = sim;
            }
        }

        // restore the row-best caches invalidated by the merge and the swap
        state.rescan_row(j);
        if let Some(rel) = relocated {
            state.rescan_row(rel);
        }
        for x in 0..m {
            if x == j || Some(x) == relocated {
                continue;
            }
            let rb = state.row_best[x];
            if rb.partner != NO_PARTNER
                && (rb.partner == j || Some(rb.partner) == relocated || rb.partner >= m)
            {
                // the cached best pointed at a slot whose pair value changed
                state.rescan_row(x);
                continue;
            }
            state.consider_entry(x, j);
            if let Some(rel) = relocated {
                state.consider_entry(x, rel);
            }
        }
    }

    // final labels: slot index per mention
    let mut labels = vec![0usize; initial.len()];
    for (slot, members) in state.members.iter().enumerate() {
        for &m in members {
            labels[m] = slot;
        }
    }
    let clustering = Clustering::from_labels(initial.mention_ids().to_vec(), &labels);
    let trace = MergeTrace {
        initial: initial.clone(),
        steps,
    };
    (clustering, trace)
}
