// SPDX-License-Identifier: Apache-2.0

//! Incremental table maintenance against a Dijkstra re-solve.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::time::{Duration, Instant};

use nocsynth_core::pathalloc::{init_solve, PathTable, SwitchCommGraph, UNREACHABLE};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Largest integer edge cost. Integer costs keep both methods exact.
pub const MAX_COST: u32 = 100;

#[derive(Debug, Clone, PartialEq)]
pub struct BenchSpec {
    pub nodes: usize,
    pub flows: usize,
    pub updates: usize,
    pub seed: u64,
    /// Timed repetitions; the fastest of each method is kept.
    pub repeats: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchResult {
    pub nodes: usize,
    pub edges: usize,
    pub flows: usize,
    pub destinations: usize,
    pub updates: usize,
    pub incremental: Duration,
    pub resolve: Duration,
    /// Edges examined by each method over all updates.
    pub incremental_work: usize,
    pub resolve_work: usize,
    /// Whether every incremental table matched a fresh solve and the
    /// Dijkstra distances after every update.
    pub equal: bool,
}

impl BenchResult {
    /// Percent time saved by incremental maintenance; `None` without updates.
    pub fn reduction_pct(&self) -> Option<f64> {
        if self.updates == 0 || self.resolve.is_zero() {
            return None;
        }
        Some(100.0 * (1.0 - self.incremental.as_secs_f64() / self.resolve.as_secs_f64()))
    }
}

#[derive(Debug, thiserror::Error, PartialEq)]
#[error("benchmark needs at least 2 nodes, got {0}")]
pub struct TooSmall(pub usize);

/// A random index DAG: a chain `i -> i+1` so every flow is routable, plus
/// extra ascending edges for an average out-degree of about four.
pub fn random_dag(nodes: usize, rng: &mut impl Rng) -> SwitchCommGraph {
    let p = if nodes > 1 { (8.0 / (nodes - 1) as f64).min(1.0) } else { 0.0 };
    let mut edges = Vec::new();
    for i in 0..nodes {
        for j in i + 1..nodes {
            if j == i + 1 || rng.gen_bool(p) {
                edges.push((i, j, rng.gen_range(1..=MAX_COST) as f64));
            }
        }
    }
    SwitchCommGraph::from_costs(nodes, edges).expect("ascending edges")
}

/// Distinct random `(src, dst)` pairs with `src < dst`.
pub fn random_flows(nodes: usize, flows: usize, rng: &mut impl Rng) -> Vec<(usize, usize)> {
    let mut all: Vec<(usize, usize)> = (0..nodes).flat_map(|i| (i + 1..nodes).map(move |j| (i, j))).collect();
    all.shuffle(rng);
    all.truncate(flows);
    all.sort_unstable();
    all
}

#[derive(Clone, Copy, PartialEq)]
struct Item(f64, usize);

impl Eq for Item {}

impl Ord for Item {
    fn cmp(&self, other: &Self) -> Ordering {
        other.0.total_cmp(&self.0).then(other.1.cmp(&self.1))
    }
}

impl PartialOrd for Item {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Distances of every node to `dest` by Dijkstra on reversed edges.
/// Returns the distances and the number of edges relaxed.
pub fn dijkstra_to(scg: &SwitchCommGraph, dest: usize) -> (Vec<f64>, usize) {
    let mut dist = vec![UNREACHABLE; scg.switches()];
    let mut heap = BinaryHeap::new();
    let mut work = 0;
    dist[dest] = 0.0;
    heap.push(Item(0.0, dest));
    while let Some(Item(d, u)) = heap.pop() {
        if d > dist[u] {
            continue;
        }
        for &e in scg.pre(u) {
            work += 1;
            let edge = scg.edge(e);
            let nd = d + edge.cost;
            if nd < dist[edge.from] {
                dist[edge.from] = nd;
                heap.push(Item(nd, edge.from));
            }
        }
    }
    (dist, work)
}

struct Trial {
    incremental: Duration,
    resolve: Duration,
    incremental_work: usize,
    resolve_work: usize,
    equal: bool,
}

fn trial(base: &SwitchCommGraph, dests: &[usize], changes: &[(usize, f64)], check: bool) -> Trial {
    let mut inc_graph = base.clone();
    let mut dsp_graph = base.clone();
    let mut tables: Vec<PathTable> = dests.iter().map(|&d| init_solve(base, d)).collect();
    let mut t = Trial {
        incremental: Duration::ZERO,
        resolve: Duration::ZERO,
        incremental_work: 0,
        resolve_work: 0,
        equal: true,
    };
    for &(e, cost) in changes {
        let old = inc_graph.edge(e).cost;
        let start = Instant::now();
        inc_graph.set_cost(e, cost).expect("non-negative cost");
        for table in &mut tables {
            t.incremental_work +=
                if cost < old { table.after_decrease(&inc_graph, e) } else { table.after_increase(&inc_graph, e) };
        }
        t.incremental += start.elapsed();

        let start = Instant::now();
        dsp_graph.set_cost(e, cost).expect("non-negative cost");
        let mut solved = Vec::with_capacity(dests.len());
        for &d in dests {
            let (dist, work) = dijkstra_to(&dsp_graph, d);
            t.resolve_work += work;
            solved.push(dist);
        }
        t.resolve += start.elapsed();

        if check {
            for (table, dist) in tables.iter().zip(&solved) {
                t.equal &= *table == init_solve(&inc_graph, table.dest()) && table.node_dists() == &dist[..];
            }
        }
    }
    t
}

/// Applies `updates` random single-edge cost changes and times incremental
/// table maintenance against re-solving every flow destination by Dijkstra.
pub fn bench_updates(spec: &BenchSpec) -> Result<BenchResult, TooSmall> {
    if spec.nodes < 2 {
        return Err(TooSmall(spec.nodes));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let scg = random_dag(spec.nodes, &mut rng);
    let flows = random_flows(spec.nodes, spec.flows, &mut rng);
    let mut dests: Vec<usize> = flows.iter().map(|&(_, d)| d).collect();
    dests.sort_unstable();
    dests.dedup();

    let mut changes = Vec::with_capacity(spec.updates);
    for _ in 0..spec.updates {
        let e = rng.gen_range(0..scg.edges().len());
        let cost = loop {
            let c = rng.gen_range(1..=MAX_COST) as f64;
            if c != scg.edge(e).cost || MAX_COST == 1 {
                break c;
            }
        };
        changes.push((e, cost));
    }

    let first = trial(&scg, &dests, &changes, true);
    let mut result = BenchResult {
        nodes: spec.nodes,
        edges: scg.edges().len(),
        flows: flows.len(),
        destinations: dests.len(),
        updates: spec.updates,
        incremental: first.incremental,
        resolve: first.resolve,
        incremental_work: first.incremental_work,
        resolve_work: first.resolve_work,
        equal: first.equal,
    };
    for _ in 1..spec.repeats.max(1) {
        let t = trial(&scg, &dests, &changes, false);
        result.incremental = result.incremental.min(t.incremental);
        result.resolve = result.resolve.min(t.resolve);
    }
    Ok(result)
}
