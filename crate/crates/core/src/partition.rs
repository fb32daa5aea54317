// SPDX-License-Identifier: Apache-2.0

//! Min-cut clustering of cores.
//!
//! Edge weights blend normalized demand with relative proximity, so cores
//! that talk a lot *and* sit close together end up sharing a switch. The
//! partitioner is a direct k-way Fiduccia–Mattheyses refinement with
//! best-prefix rollback, restarted from a few seeded random balanced
//! assignments.

use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::model::{balance_bounds, CoreCommGraph, Partition, Point};

/// Undirected weighted graph fed to the partitioner.
#[derive(Debug, Clone, PartialEq)]
pub struct ReweightedGraph {
    n: usize,
    /// `(a, b, weight)` with `a < b`, one entry per unordered pair.
    edges: Vec<(usize, usize, f64)>,
    adjacency: Vec<Vec<(usize, f64)>>,
}

impl ReweightedGraph {
    /// Builds the graph from unordered pairs; entries for the same pair are summed.
    pub fn from_pairs(n: usize, pairs: impl IntoIterator<Item = (usize, usize, f64)>) -> Self {
        let mut edges: Vec<(usize, usize, f64)> = pairs
            .into_iter()
            .map(|(a, b, w)| if a < b { (a, b, w) } else { (b, a, w) })
            .collect();
        edges.sort_by_key(|x| (x.0, x.1));
        edges.dedup_by(|next, prev| {
            if next.0 == prev.0 && next.1 == prev.1 {
                prev.2 += next.2;
                true
            } else {
                false
            }
        });
        let mut adjacency = vec![Vec::new(); n];
        for &(a, b, w) in &edges {
            adjacency[a].push((b, w));
            adjacency[b].push((a, w));
        }
        ReweightedGraph { n, edges, adjacency }
    }

    pub fn node_count(&self) -> usize {
        self.n
    }

    pub fn edges(&self) -> &[(usize, usize, f64)] {
        &self.edges
    }

    pub fn weight(&self, a: usize, b: usize) -> f64 {
        let (a, b) = if a < b { (a, b) } else { (b, a) };
        self.edges.iter().find(|e| e.0 == a && e.1 == b).map_or(0.0, |e| e.2)
    }

    /// Total weight of edges whose endpoints lie in different clusters.
    pub fn cut_weight(&self, assignment: &[usize]) -> f64 {
        self.edges
            .iter()
            .filter(|(a, b, _)| assignment[*a] != assignment[*b])
            .map(|e| e.2)
            .sum()
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self::from_pairs(self.n, self.edges.iter().map(|&(a, b, w)| (a, b, w * factor)))
    }
}

/// Blended edge weights:
/// `alpha_w * (w_ab + w_ba) / max_w + alpha_d * mean_dis / dis_ab`
/// for every pair that communicates in either direction.
///
/// `dis_ab` is the Manhattan distance between core centers and `mean_dis`
/// its mean over the communicating pairs. Coincident centers fail with
/// `ZeroDistance` unless `min_distance` is given, in which case the distance
/// is clamped to it. When `alpha_d` is zero the centers are never read.
pub fn reweight(
    g: &CoreCommGraph,
    centers: &[Point],
    alpha_w: f64,
    alpha_d: f64,
    min_distance: Option<f64>,
) -> Result<ReweightedGraph> {
    if alpha_d == 0.0 {
        return Ok(reweight_by_demand(g, alpha_w));
    }
    let pairs = g.symmetric_pairs();
    let max_w = g.max_weight();
    let mut dis = Vec::with_capacity(pairs.len());
    for &(a, b, _) in &pairs {
        dis.push(centers[a].manhattan(centers[b]));
    }
    let mean_dis = if dis.is_empty() { 0.0 } else { dis.iter().sum::<f64>() / dis.len() as f64 };
    let mut weighted = Vec::with_capacity(pairs.len());
    for (&(a, b, w), &d) in pairs.iter().zip(&dis) {
        let d = if d > 0.0 {
            d
        } else {
            min_distance.ok_or(Error::ZeroDistance { a, b })?
        };
        weighted.push((a, b, alpha_w * w / max_w + alpha_d * mean_dis / d));
    }
    Ok(ReweightedGraph::from_pairs(g.core_count(), weighted))
}

/// Demand-only weights, `alpha_w * (w_ab + w_ba) / max_w`. Used when the
/// partition has to be fixed before any placement exists.
pub fn reweight_by_demand(g: &CoreCommGraph, alpha_w: f64) -> ReweightedGraph {
    let max_w = g.max_weight();
    let pairs = g.symmetric_pairs().into_iter().map(|(a, b, w)| (a, b, alpha_w * w / max_w));
    ReweightedGraph::from_pairs(g.core_count(), pairs)
}

/// Number of random restarts used by [`min_cut_partition`].
pub const DEFAULT_STARTS: usize = 8;

const MAX_PASSES: usize = 64;

/// Balanced min-cut partition into `clusters` parts with the default number of restarts.
pub fn min_cut_partition(g: &ReweightedGraph, clusters: usize, slack: usize, seed: u64) -> Result<Partition> {
    min_cut_partition_with(g, clusters, slack, seed, DEFAULT_STARTS)
}

/// Balanced min-cut partition: every cluster size stays within `slack` of
/// `ceil(n / clusters)`. Each of `starts` seeded random balanced assignments
/// is refined by k-way FM; the lowest cut wins (earliest start on ties).
/// Cluster labels are renumbered by first appearance.
pub fn min_cut_partition_with(
    g: &ReweightedGraph,
    clusters: usize,
    slack: usize,
    seed: u64,
    starts: usize,
) -> Result<Partition> {
    let n = g.n;
    if clusters == 0 || n < clusters {
        return Err(Error::InfeasibleBalance { cores: n, clusters });
    }
    let (lo, hi) = balance_bounds(n, clusters, slack);
    if lo * clusters > n || hi * clusters < n {
        return Err(Error::InfeasibleBalance { cores: n, clusters });
    }
    if clusters == 1 {
        return Partition::new(1, vec![0; n]);
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best: Option<(f64, Vec<usize>)> = None;
    for _ in 0..starts.max(1) {
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(&mut rng);
        let mut assignment = vec![0; n];
        for (pos, &v) in order.iter().enumerate() {
            assignment[v] = pos % clusters;
        }
        let mut state = FmState::new(g, clusters, assignment);
        for _ in 0..MAX_PASSES {
            let moved = state.pass(lo, hi);
            let swapped = state.swap_pass();
            if !moved && !swapped {
                break;
            }
        }
        let assignment = canonical_labels(&state.assignment, clusters);
        let cut = g.cut_weight(&assignment);
        if best.as_ref().is_none_or(|(c, _)| cut < *c) {
            best = Some((cut, assignment));
        }
    }
    let (_, assignment) = best.expect("at least one start");
    Partition::new(clusters, assignment)
}

fn canonical_labels(assignment: &[usize], clusters: usize) -> Vec<usize> {
    let mut relabel = vec![usize::MAX; clusters];
    let mut next = 0;
    assignment
        .iter()
        .map(|&k| {
            if relabel[k] == usize::MAX {
                relabel[k] = next;
                next += 1;
            }
            relabel[k]
        })
        .collect()
}

struct FmState<'a> {
    g: &'a ReweightedGraph,
    clusters: usize,
    assignment: Vec<usize>,
    sizes: Vec<usize>,
    /// `conn[v * clusters + c]`: weight from `v` into cluster `c`.
    conn: Vec<f64>,
    /// Smallest gain counted as an improvement; guards against rounding cycles.
    eps: f64,
}

impl<'a> FmState<'a> {
    fn new(g: &'a ReweightedGraph, clusters: usize, assignment: Vec<usize>) -> Self {
        let mut sizes = vec![0; clusters];
        for &k in &assignment {
            sizes[k] += 1;
        }
        let mut conn = vec![0.0; g.n * clusters];
        for v in 0..g.n {
            for &(u, w) in &g.adjacency[v] {
                conn[v * clusters + assignment[u]] += w;
            }
        }
        let total: f64 = g.edges.iter().map(|e| e.2).sum();
        FmState { g, clusters, assignment, sizes, conn, eps: 1e-12 * total }
    }

    fn gain(&self, v: usize, to: usize) -> f64 {
        let row = v * self.clusters;
        self.conn[row + to] - self.conn[row + self.assignment[v]]
    }

    fn apply(&mut self, v: usize, to: usize) {
        let from = self.assignment[v];
        self.assignment[v] = to;
        self.sizes[from] -= 1;
        self.sizes[to] += 1;
        for &(u, w) in &self.g.adjacency[v] {
            self.conn[u * self.clusters + from] -= w;
            self.conn[u * self.clusters + to] += w;
        }
    }

    /// Greedy pair exchanges between clusters, best first, until none
    /// improves the cut. Sizes never change, so balance-locked local optima
    /// of the single-move pass can still be left. Returns whether anything moved.
    fn swap_pass(&mut self) -> bool {
        let n = self.g.n;
        let mut improved = false;
        let mut row = vec![0.0; n];
        loop {
            let mut pick: Option<(f64, usize, usize)> = None;
            for u in 0..n {
                for &(v, w) in &self.g.adjacency[u] {
                    row[v] = w;
                }
                for v in u + 1..n {
                    let (cu, cv) = (self.assignment[u], self.assignment[v]);
                    if cu == cv {
                        continue;
                    }
                    let gain = self.gain(u, cv) + self.gain(v, cu) - 2.0 * row[v];
                    if gain > self.eps && pick.is_none_or(|(g, _, _)| gain > g) {
                        pick = Some((gain, u, v));
                    }
                }
                for &(v, _) in &self.g.adjacency[u] {
                    row[v] = 0.0;
                }
            }
            let Some((_, u, v)) = pick else { return improved };
            let (cu, cv) = (self.assignment[u], self.assignment[v]);
            self.apply(u, cv);
            self.apply(v, cu);
            improved = true;
        }
    }

    /// One FM pass. Returns whether the cut improved.
    fn pass(&mut self, lo: usize, hi: usize) -> bool {
        let n = self.g.n;
        let mut locked = vec![false; n];
        let mut moves: Vec<(usize, usize)> = Vec::with_capacity(n);
        let mut total = 0.0;
        let mut best_total = 0.0;
        let mut best_len = 0;
        loop {
            let mut pick: Option<(f64, usize, usize)> = None;
            for v in 0..n {
                if locked[v] || self.sizes[self.assignment[v]] <= lo {
                    continue;
                }
                for to in 0..self.clusters {
                    if to == self.assignment[v] || self.sizes[to] >= hi {
                        continue;
                    }
                    let gain = self.gain(v, to);
                    if pick.is_none_or(|(g, _, _)| gain > g) {
                        pick = Some((gain, v, to));
                    }
                }
            }
            let Some((gain, v, to)) = pick else { break };
            let from = self.assignment[v];
            self.apply(v, to);
            locked[v] = true;
            moves.push((v, from));
            total += gain;
            if total > best_total + self.eps {
                best_total = total;
                best_len = moves.len();
            }
        }
        for &(v, from) in moves[best_len..].iter().rev() {
            self.apply(v, from);
        }
        best_len > 0
    }
}
