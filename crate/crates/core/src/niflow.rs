// SPDX-License-Identifier: Apache-2.0

//! Network-interface placement.
//!
//! Every core gets one interface in a free grid near it: the grids touching
//! the core's rectangle grown by a margin. Interfaces are matched to grids by
//! min-cost max-flow, where the cost of a grid is its distance to the switch
//! the core talks to. If not every interface fits, the margin is doubled.

use alloc::collections::BinaryHeap;
use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Ordering;

use crate::error::{Error, Result};
use crate::model::{Point, Rect};
use crate::placement::{Grid, Occupant};

/// Free grids whose rectangle shares area with `core` grown by `margin`.
pub fn candidate_grids(core: &Rect, grids: &[Grid], margin: f64) -> Vec<usize> {
    let area = core.inflate(margin);
    grids.iter().filter(|g| g.is_free() && g.rect.overlaps(&area)).map(|g| g.id).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct NiPlacement {
    /// Grid id of each core's interface.
    pub grid: Vec<usize>,
    /// Distance from each interface to its switch.
    pub cost: Vec<f64>,
    pub total_cost: f64,
    /// Margin at which all interfaces fitted.
    pub margin: f64,
    pub candidates: Vec<Vec<usize>>,
}

/// Places one interface per core.
///
/// `switch_site[k]` is where core `k`'s switch sits. Starting from `margin`,
/// the margin is doubled up to `doublings` times until every core has a
/// distinct candidate grid; the assignment returned has minimum total
/// distance for that margin.
pub fn assign_nis(
    cores: &[Rect],
    switch_site: &[Point],
    grids: &[Grid],
    margin: f64,
    doublings: u32,
) -> Result<NiPlacement> {
    let n = cores.len();
    let mut placed = 0;
    let mut l = margin;
    for _ in 0..=doublings {
        let candidates: Vec<Vec<usize>> = cores.iter().map(|c| candidate_grids(c, grids, l)).collect();
        let arcs: Vec<Vec<(usize, f64)>> = candidates
            .iter()
            .enumerate()
            .map(|(k, cs)| cs.iter().map(|&j| (j, grids[j].center.manhattan(switch_site[k]))).collect())
            .collect();
        let (matching, total_cost) = min_cost_assignment(&arcs, grids.len());
        let count = matching.iter().flatten().count();
        if count == n {
            let grid: Vec<usize> = matching.into_iter().map(|m| m.expect("complete matching")).collect();
            let cost = grid.iter().enumerate().map(|(k, &j)| grids[j].center.manhattan(switch_site[k])).collect();
            return Ok(NiPlacement { grid, cost, total_cost, margin: l, candidates });
        }
        placed = placed.max(count);
        l *= 2.0;
    }
    Err(Error::NiInfeasible { placed, required: n })
}

/// Marks the grids chosen by `placement` as occupied by their interfaces.
pub fn mark_nis(grids: &mut [Grid], placement: &NiPlacement) {
    for (core, &j) in placement.grid.iter().enumerate() {
        grids[j].occupant = Occupant::Ni(core);
    }
}

/// Min-cost maximum matching of left nodes to right nodes `0..right`.
///
/// `arcs[k]` lists `(right node, cost)` pairs for left node `k`; costs must be
/// non-negative. Solved as unit-capacity min-cost max-flow
/// `source -> left -> right -> sink`.
pub fn min_cost_assignment(arcs: &[Vec<(usize, f64)>], right: usize) -> (Vec<Option<usize>>, f64) {
    let left = arcs.len();
    let source = left + right;
    let sink = source + 1;
    let mut net = MinCostFlow::new(sink + 1);
    for k in 0..left {
        net.add_arc(source, k, 1, 0.0);
    }
    let mut pair_arcs = Vec::new();
    for (k, list) in arcs.iter().enumerate() {
        for &(j, cost) in list {
            pair_arcs.push((k, j, net.add_arc(k, left + j, 1, cost)));
        }
    }
    for j in 0..right {
        net.add_arc(left + j, sink, 1, 0.0);
    }
    let (_, cost) = net.run(source, sink, left as i64);

    let mut matching = vec![None; left];
    for (k, j, arc) in pair_arcs {
        if net.flow(arc) == 1 {
            debug_assert!(matching[k].is_none(), "integral flow saturates one arc per interface");
            matching[k] = Some(j);
        }
    }
    (matching, cost)
}

/// Successive shortest paths with Johnson potentials.
#[derive(Debug, Clone)]
pub struct MinCostFlow {
    adjacency: Vec<Vec<usize>>,
    to: Vec<usize>,
    residual: Vec<i64>,
    cost: Vec<f64>,
}

#[derive(PartialEq)]
struct Entry(f64, usize);

impl Eq for Entry {}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Entry {
    // min-heap on distance, then node id
    fn cmp(&self, other: &Self) -> Ordering {
        other.0.total_cmp(&self.0).then_with(|| other.1.cmp(&self.1))
    }
}

impl MinCostFlow {
    pub fn new(nodes: usize) -> Self {
        MinCostFlow { adjacency: vec![Vec::new(); nodes], to: Vec::new(), residual: Vec::new(), cost: Vec::new() }
    }

    /// Adds `u -> v` and its residual twin; returns the forward arc id.
    pub fn add_arc(&mut self, u: usize, v: usize, capacity: i64, cost: f64) -> usize {
        let id = self.to.len();
        self.adjacency[u].push(id);
        self.to.push(v);
        self.residual.push(capacity);
        self.cost.push(cost);
        self.adjacency[v].push(id + 1);
        self.to.push(u);
        self.residual.push(0);
        self.cost.push(-cost);
        id
    }

    /// Flow currently on forward arc `arc`.
    pub fn flow(&self, arc: usize) -> i64 {
        self.residual[arc ^ 1]
    }

    /// Sends up to `limit` units from `s` to `t` at minimum cost. Arc costs
    /// must be non-negative. Returns `(flow, cost)`.
    pub fn run(&mut self, s: usize, t: usize, limit: i64) -> (i64, f64) {
        let nodes = self.adjacency.len();
        let mut potential = vec![0.0f64; nodes];
        let mut flow = 0;
        let mut total = 0.0;
        let mut dist = vec![f64::INFINITY; nodes];
        let mut via = vec![usize::MAX; nodes];
        while flow < limit {
            dist.fill(f64::INFINITY);
            via.fill(usize::MAX);
            dist[s] = 0.0;
            let mut heap = BinaryHeap::new();
            heap.push(Entry(0.0, s));
            while let Some(Entry(d, u)) = heap.pop() {
                if d > dist[u] {
                    continue;
                }
                for &arc in &self.adjacency[u] {
                    if self.residual[arc] <= 0 {
                        continue;
                    }
                    let v = self.to[arc];
                    // reduced costs are non-negative up to rounding
                    let reduced = (self.cost[arc] + potential[u] - potential[v]).max(0.0);
                    let nd = d + reduced;
                    if nd < dist[v] {
                        dist[v] = nd;
                        via[v] = arc;
                        heap.push(Entry(nd, v));
                    }
                }
            }
            if dist[t].is_infinite() {
                break;
            }
            let reach = dist[t];
            for (p, d) in potential.iter_mut().zip(&dist) {
                *p += d.min(reach);
            }
            let mut push = limit - flow;
            let mut v = t;
            while v != s {
                let arc = via[v];
                push = push.min(self.residual[arc]);
                v = self.to[arc ^ 1];
            }
            let mut v = t;
            while v != s {
                let arc = via[v];
                self.residual[arc] -= push;
                self.residual[arc ^ 1] += push;
                total += self.cost[arc] * push as f64;
                v = self.to[arc ^ 1];
            }
            flow += push;
        }
        (flow, total)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn grids(rects: &[Rect]) -> Vec<Grid> {
        rects.iter().enumerate().map(|(i, &r)| Grid::new(i, r)).collect()
    }

    #[test]
    fn huge_margin_sees_every_free_grid() {
        let mut gs = grids(&[
            Rect::new(5.0, 0.0, 1.0, 1.0),
            Rect::new(0.0, 8.0, 1.0, 1.0),
            Rect::new(9.0, 9.0, 1.0, 1.0),
        ]);
        gs[1].occupant = Occupant::Switch(0);
        let core = Rect::new(0.0, 0.0, 2.0, 2.0);
        assert_eq!(candidate_grids(&core, &gs, 100.0), vec![0, 2]);
    }

    #[test]
    fn tiny_margin_isolated_core() {
        let gs = grids(&[Rect::new(5.0, 0.0, 1.0, 1.0)]);
        let core = Rect::new(0.0, 0.0, 2.0, 2.0);
        assert!(candidate_grids(&core, &gs, 1e-9).is_empty());
        // an abutting grid is seen at any positive margin
        let gs = grids(&[Rect::new(2.0, 0.0, 1.0, 1.0)]);
        assert_eq!(candidate_grids(&core, &gs, 1e-9), vec![0]);
    }

    /// Core in the middle of a ring of unit grids: at a margin of one grid
    /// width only the grids sharing an edge or corner with the core count.
    #[test]
    fn one_grid_margin_sees_abutting_grids() {
        let core = Rect::new(1.0, 1.0, 2.0, 1.0);
        let gs = grids(&[
            Rect::new(0.0, 0.0, 1.0, 1.0), // corner below-left
            Rect::new(1.0, 0.0, 2.0, 1.0), // below
            Rect::new(3.0, 0.0, 1.0, 1.0), // corner below-right
            Rect::new(0.0, 1.0, 1.0, 1.0), // left
            Rect::new(3.0, 1.0, 1.0, 1.0), // right
            Rect::new(5.0, 1.0, 1.0, 1.0), // two grid widths away
            Rect::new(1.0, 3.5, 2.0, 1.0), // above, beyond the margin
        ]);
        assert_eq!(candidate_grids(&core, &gs, 1.0), vec![0, 1, 2, 3, 4]);
    }

    #[test]
    fn single_core_single_grid() {
        let gs = grids(&[Rect::new(2.0, 0.0, 1.0, 1.0)]);
        let core = [Rect::new(0.0, 0.0, 2.0, 2.0)];
        let sw = [Point::new(4.5, 0.5)];
        let p = assign_nis(&core, &sw, &gs, 0.5, 0).unwrap();
        assert_eq!(p.grid, vec![0]);
        assert_eq!(p.total_cost, 2.0);
    }

    #[test]
    fn pigeonhole() {
        let gs = grids(&[Rect::new(2.0, 0.0, 1.0, 1.0)]);
        let cores = [Rect::new(0.0, 0.0, 2.0, 2.0), Rect::new(3.0, 0.0, 2.0, 2.0)];
        let sw = [Point::new(0.0, 0.0); 2];
        assert_eq!(
            assign_nis(&cores, &sw, &gs, 0.5, 0).unwrap_err(),
            Error::NiInfeasible { placed: 1, required: 2 }
        );
    }

    #[test]
    fn margin_doubles_until_feasible() {
        let gs = grids(&[Rect::new(2.0, 0.0, 1.0, 1.0), Rect::new(7.0, 0.0, 1.0, 1.0)]);
        let cores = [Rect::new(0.0, 0.0, 2.0, 2.0), Rect::new(3.0, 0.0, 2.0, 2.0)];
        let sw = [Point::new(0.0, 0.0); 2];
        let p = assign_nis(&cores, &sw, &gs, 0.25, 6).unwrap();
        // the far grid needs a margin strictly above 2
        assert_eq!(p.margin, 4.0);
        assert_eq!(p.grid, vec![0, 1]);
    }

    fn brute_force(arcs: &[Vec<(usize, f64)>], used: &mut Vec<bool>, k: usize) -> Option<f64> {
        if k == arcs.len() {
            return Some(0.0);
        }
        let mut best: Option<f64> = None;
        for &(j, c) in &arcs[k] {
            if used[j] {
                continue;
            }
            used[j] = true;
            if let Some(rest) = brute_force(arcs, used, k + 1) {
                let total = c + rest;
                best = Some(best.map_or(total, |b: f64| b.min(total)));
            }
            used[j] = false;
        }
        best
    }

    #[test]
    fn matches_enumeration() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let mut feasible = 0;
        for _ in 0..200 {
            let left = rng.gen_range(1..=6);
            let right = rng.gen_range(left..=9);
            let mut arcs: Vec<Vec<(usize, f64)>> = vec![Vec::new(); left];
            for list in arcs.iter_mut() {
                for j in 0..right {
                    if rng.gen_bool(0.5) {
                        list.push((j, rng.gen_range(0..20) as f64));
                    }
                }
            }
            let (matching, cost) = min_cost_assignment(&arcs, right);
            let expected = brute_force(&arcs, &mut vec![false; right], 0);
            let complete = matching.iter().all(Option::is_some);
            assert_eq!(complete, expected.is_some());
            if let Some(e) = expected {
                feasible += 1;
                assert_eq!(cost, e);
                let mut seen = vec![false; right];
                for (k, m) in matching.iter().enumerate() {
                    let j = m.unwrap();
                    assert!(!seen[j]);
                    seen[j] = true;
                    assert!(arcs[k].iter().any(|a| a.0 == j));
                }
            }
        }
        assert!(feasible > 50);
    }
}
