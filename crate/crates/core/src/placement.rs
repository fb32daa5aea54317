// SPDX-License-Identifier: Apache-2.0

//! Whitespace grids and switch insertion.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::floorplan::Floorplan;
use crate::model::{cluster_box, CoreCommGraph, Partition, Point, Rect};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Occupant {
    #[default]
    Free,
    /// Switch of the given cluster.
    Switch(usize),
    /// Network interface of the given core.
    Ni(usize),
}

/// A whitespace cell that can host one network component.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    pub id: usize,
    pub rect: Rect,
    pub center: Point,
    pub occupant: Occupant,
}

impl Grid {
    pub fn new(id: usize, rect: Rect) -> Self {
        Grid { id, rect, center: rect.center(), occupant: Occupant::Free }
    }

    pub fn is_free(&self) -> bool {
        self.occupant == Occupant::Free
    }
}

/// Decomposes the chip's whitespace into rectangles.
///
/// The chip is cut into vertical slabs at every core x-boundary; inside a
/// slab the free y-intervals become cells, and cells of neighbouring slabs
/// with the same y-span are merged. The cells tile the whitespace exactly.
pub fn extract_grids(fp: &Floorplan) -> Result<Vec<Grid>> {
    let chip = fp.chip;
    let scale = chip.w.max(chip.h).max(1.0);
    let tol = 1e-12 * scale;
    if fp.whitespace_area() <= tol * scale {
        return Err(Error::NoWhitespace);
    }

    let mut xs: Vec<f64> = vec![chip.x, chip.x_max()];
    for r in &fp.placements {
        xs.push(r.x.clamp(chip.x, chip.x_max()));
        xs.push(r.x_max().clamp(chip.x, chip.x_max()));
    }
    xs.sort_by(f64::total_cmp);
    xs.dedup_by(|b, a| *b - *a <= tol);

    let mut cells: Vec<Rect> = Vec::new();
    // cells that touch the right edge of the previous slab
    let mut open: Vec<usize> = Vec::new();
    for slab in xs.windows(2) {
        let (x0, x1) = (slab[0], slab[1]);
        let mut blocked: Vec<(f64, f64)> = fp
            .placements
            .iter()
            .filter(|r| r.x < x1 - tol && r.x_max() > x0 + tol)
            .map(|r| (r.y, r.y_max()))
            .collect();
        blocked.sort_by(|a, b| a.0.total_cmp(&b.0));

        let mut free = Vec::new();
        let mut cursor = chip.y;
        for (y0, y1) in blocked {
            if y0 - cursor > tol {
                free.push((cursor, y0));
            }
            cursor = cursor.max(y1);
        }
        if chip.y_max() - cursor > tol {
            free.push((cursor, chip.y_max()));
        }

        let mut next_open = Vec::with_capacity(free.len());
        for (y0, y1) in free {
            let merge = open.iter().copied().find(|&i| {
                let c = &cells[i];
                (c.y - y0).abs() <= tol && (c.y_max() - y1).abs() <= tol
            });
            match merge {
                Some(i) => {
                    cells[i].w = x1 - cells[i].x;
                    next_open.push(i);
                }
                None => {
                    cells.push(Rect::new(x0, y0, x1 - x0, y1 - y0));
                    next_open.push(cells.len() - 1);
                }
            }
        }
        open = next_open;
    }
    Ok(cells.into_iter().enumerate().map(|(id, r)| Grid::new(id, r)).collect())
}

/// Splits the largest cells in half along their longer side until at
/// least `min_count` cells exist. Ids are renumbered in order.
pub fn refine_grids(grids: &[Grid], min_count: usize) -> Vec<Grid> {
    let mut rects: Vec<Rect> = grids.iter().map(|g| g.rect).collect();
    while rects.len() < min_count && !rects.is_empty() {
        let (i, _) = rects
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.area().total_cmp(&b.1.area()).then(b.0.cmp(&a.0)))
            .expect("non-empty");
        let r = rects[i];
        let (a, b) = if r.w >= r.h {
            let half = r.w / 2.0;
            (Rect::new(r.x, r.y, half, r.h), Rect::new(r.x + half, r.y, r.w - half, r.h))
        } else {
            let half = r.h / 2.0;
            (Rect::new(r.x, r.y, r.w, half), Rect::new(r.x, r.y + half, r.w, r.h - half))
        };
        rects[i] = a;
        rects.insert(i + 1, b);
    }
    rects.into_iter().enumerate().map(|(id, r)| Grid::new(id, r)).collect()
}

/// Total demand on directed edges with exactly one endpoint in `cluster`,
/// counting traffic in both directions.
pub fn switch_flow(g: &CoreCommGraph, part: &Partition, cluster: usize) -> f64 {
    g.edges()
        .iter()
        .filter(|e| (part.cluster_of(e.src) == cluster) != (part.cluster_of(e.dst) == cluster))
        .map(|e| e.weight)
        .sum()
}

/// Demand-weighted distance from `site` to both endpoints of every edge
/// crossing the boundary of `cluster`.
pub fn insertion_cost(g: &CoreCommGraph, part: &Partition, cluster: usize, centers: &[Point], site: Point) -> f64 {
    g.edges()
        .iter()
        .filter(|e| (part.cluster_of(e.src) == cluster) != (part.cluster_of(e.dst) == cluster))
        .map(|e| e.weight * (site.manhattan(centers[e.src]) + site.manhattan(centers[e.dst])))
        .sum()
}

#[derive(Debug, Clone, PartialEq)]
pub struct SwitchPlacement {
    /// Grid id of each cluster's switch.
    pub grid: Vec<usize>,
    pub flow: Vec<f64>,
    /// Insertion cost of the chosen grid.
    pub cost: Vec<f64>,
    /// Clusters in insertion order.
    pub order: Vec<usize>,
    /// Candidate grids considered for each cluster.
    pub candidates: Vec<Vec<usize>>,
    /// Whether the candidates had to be widened to all free grids.
    pub fallback: Vec<bool>,
    /// Center of each cluster's bounding box, the switch's starting point.
    pub initial: Vec<Point>,
}

/// Places one switch per cluster, heaviest cross-cluster flow first.
///
/// Each switch takes the cheapest free grid whose center lies in its
/// cluster's bounding box (any free grid when there is none); ties go to the
/// lower grid id. Chosen grids are marked occupied.
pub fn insert_switches(
    fp: &Floorplan,
    grids: &mut [Grid],
    g: &CoreCommGraph,
    part: &Partition,
) -> Result<SwitchPlacement> {
    let m = part.clusters();
    let centers = fp.centers();
    let flow: Vec<f64> = (0..m).map(|k| switch_flow(g, part, k)).collect();
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| flow[b].total_cmp(&flow[a]).then(a.cmp(&b)));

    let mut placement = SwitchPlacement {
        grid: vec![usize::MAX; m],
        flow,
        cost: vec![0.0; m],
        order: order.clone(),
        candidates: vec![Vec::new(); m],
        fallback: vec![false; m],
        initial: vec![Point::default(); m],
    };
    for &k in &order {
        let bbox = cluster_box(&fp.placements, part, k)?;
        placement.initial[k] = bbox.center();
        let mut candidates: Vec<usize> =
            grids.iter().filter(|gr| gr.is_free() && bbox.contains_point(gr.center)).map(|gr| gr.id).collect();
        if candidates.is_empty() {
            candidates = grids.iter().filter(|gr| gr.is_free()).map(|gr| gr.id).collect();
            placement.fallback[k] = true;
        }
        let mut best: Option<(f64, usize)> = None;
        for &id in &candidates {
            let cost = insertion_cost(g, part, k, &centers, grids[id].center);
            if best.is_none_or(|(c, _)| cost < c) {
                best = Some((cost, id));
            }
        }
        let (cost, id) = best.ok_or(Error::NoWhitespace)?;
        grids[id].occupant = Occupant::Switch(k);
        placement.grid[k] = id;
        placement.cost[k] = cost;
        placement.candidates[k] = candidates;
    }
    Ok(placement)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::floorplan::{pack, SequencePair};
    use crate::model::{Core, Edge};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn one_core_half_chip() {
        let fp = Floorplan { placements: vec![Rect::new(0.0, 0.0, 2.0, 2.0)], chip: Rect::new(0.0, 0.0, 4.0, 2.0) };
        let grids = extract_grids(&fp).unwrap();
        assert_eq!(grids.len(), 1);
        assert_eq!(grids[0].rect, Rect::new(2.0, 0.0, 2.0, 2.0));
    }

    #[test]
    fn covered_chip_has_no_whitespace() {
        let fp = Floorplan { placements: vec![Rect::new(0.0, 0.0, 2.0, 2.0)], chip: Rect::new(0.0, 0.0, 2.0, 2.0) };
        assert_eq!(extract_grids(&fp).unwrap_err(), Error::NoWhitespace);
    }

    #[test]
    fn equal_spans_merge_across_slabs() {
        // two 1x1 cores side by side at the bottom of a 2x2 chip
        let fp = Floorplan {
            placements: vec![Rect::new(0.0, 0.0, 1.0, 1.0), Rect::new(1.0, 0.0, 1.0, 1.0)],
            chip: Rect::new(0.0, 0.0, 2.0, 2.0),
        };
        let grids = extract_grids(&fp).unwrap();
        assert_eq!(grids.len(), 1);
        assert_eq!(grids[0].rect, Rect::new(0.0, 1.0, 2.0, 1.0));
    }

    fn random_cores(rng: &mut ChaCha8Rng, n: usize) -> Vec<Core> {
        (0..n).map(|i| Core::new(i, rng.gen_range(0.5..4.0), rng.gen_range(0.5..4.0))).collect()
    }

    #[test]
    fn grids_tile_whitespace() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..300 {
            let n = rng.gen_range(2..12);
            let cores = random_cores(&mut rng, n);
            let fp = pack(&SequencePair::random(n, &mut rng), &cores);
            let Ok(grids) = extract_grids(&fp) else { continue };
            let total: f64 = grids.iter().map(|g| g.rect.area()).sum();
            let expected = fp.area() - fp.core_area();
            assert!((total - expected).abs() <= 1e-9 * fp.area());
            for (i, a) in grids.iter().enumerate() {
                assert!(fp.chip.inflate(1e-12).contains_rect(&a.rect));
                // boundaries agree up to rounding of the packing sums
                let inner = a.rect.inflate(-1e-12);
                assert!(fp.placements.iter().all(|c| !c.overlaps(&inner)));
                assert!(grids[i + 1..].iter().all(|b| !b.rect.overlaps(&inner)));
            }
            let refined = refine_grids(&grids, n + 4);
            assert!(refined.len() >= n + 4);
            let refined_total: f64 = refined.iter().map(|g| g.rect.area()).sum();
            assert!((refined_total - expected).abs() <= 1e-9 * fp.area());
        }
    }

    fn graph(n: usize, edges: &[(usize, usize, f64)]) -> CoreCommGraph {
        let cores = (0..n).map(|i| Core::new(i, 1.0, 1.0)).collect();
        CoreCommGraph::new(cores, edges.iter().map(|&(a, b, w)| Edge::new(a, b, w)).collect()).unwrap()
    }

    #[test]
    fn single_cluster_flow_is_zero() {
        let g = graph(3, &[(0, 1, 5.0), (1, 2, 7.0)]);
        let part = Partition::new(1, vec![0, 0, 0]).unwrap();
        assert_eq!(switch_flow(&g, &part, 0), 0.0);
    }

    #[test]
    fn flow_is_cut_weight_per_cluster() {
        // six cores, three clusters {0,3} {1,4} {2,5}
        let g = graph(6, &[(0, 3, 90.0), (1, 4, 80.0), (2, 5, 70.0), (0, 1, 10.0), (4, 2, 6.0), (5, 3, 3.0)]);
        let part = Partition::new(3, vec![0, 1, 2, 0, 1, 2]).unwrap();
        assert_eq!(switch_flow(&g, &part, 0), 13.0);
        assert_eq!(switch_flow(&g, &part, 1), 16.0);
        assert_eq!(switch_flow(&g, &part, 2), 9.0);
    }

    #[test]
    fn flow_matches_edge_scan() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..100 {
            let n = 8;
            let mut edges = Vec::new();
            for a in 0..n {
                for b in 0..n {
                    if a != b && rng.gen_bool(0.3) {
                        edges.push((a, b, rng.gen_range(1.0..100.0)));
                    }
                }
            }
            let g = graph(n, &edges);
            let assign: Vec<usize> = (0..n).map(|i| i % 3).collect();
            let part = Partition::new(3, assign.clone()).unwrap();
            for k in 0..3 {
                let mut expected = 0.0;
                for &(a, b, w) in &edges {
                    if (assign[a] == k && assign[b] != k) || (assign[a] != k && assign[b] == k) {
                        expected += w;
                    }
                }
                assert!((switch_flow(&g, &part, k) - expected).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn lone_grid_is_taken() {
        let fp = Floorplan { placements: vec![Rect::new(0.0, 0.0, 2.0, 2.0)], chip: Rect::new(0.0, 0.0, 3.0, 2.0) };
        let g = graph(1, &[]);
        let part = Partition::new(1, vec![0]).unwrap();
        let mut grids = extract_grids(&fp).unwrap();
        let sp = insert_switches(&fp, &mut grids, &g, &part).unwrap();
        assert_eq!(sp.grid, vec![0]);
        assert_eq!(grids[0].occupant, Occupant::Switch(0));
    }

    /// Four cores around a cross-shaped channel; clusters {c1, c3} and {c2, c4}.
    #[test]
    fn two_cluster_insertion_is_cost_minimal() {
        let placements = vec![
            Rect::new(0.0, 0.0, 3.0, 2.0),
            Rect::new(4.0, 0.0, 2.0, 3.0),
            Rect::new(0.0, 3.0, 2.0, 3.0),
            Rect::new(3.0, 4.0, 3.0, 2.0),
        ];
        let fp = Floorplan { placements, chip: Rect::new(0.0, 0.0, 6.0, 6.0) };
        let g = graph(4, &[(0, 2, 50.0), (1, 3, 40.0), (0, 1, 20.0), (2, 3, 15.0), (3, 0, 5.0)]);
        let part = Partition::new(2, vec![0, 1, 0, 1]).unwrap();
        let mut grids = extract_grids(&fp).unwrap();
        let snapshot = grids.clone();
        let sp = insert_switches(&fp, &mut grids, &g, &part).unwrap();
        let centers = fp.centers();
        let mut taken: Vec<usize> = Vec::new();
        for &k in &sp.order {
            let bbox = cluster_box(&fp.placements, &part, k).unwrap();
            let chosen = sp.grid[k];
            assert!(!sp.fallback[k]);
            assert!(bbox.contains_point(snapshot[chosen].center));
            for gr in &snapshot {
                if taken.contains(&gr.id) || !bbox.contains_point(gr.center) {
                    continue;
                }
                assert!(sp.cost[k] <= insertion_cost(&g, &part, k, &centers, gr.center));
            }
            taken.push(chosen);
        }
        assert_ne!(sp.grid[0], sp.grid[1]);
    }

    #[test]
    fn random_insertions_are_minimal_among_candidates() {
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        for _ in 0..100 {
            let n = 9;
            let cores = random_cores(&mut rng, n);
            let mut edges = Vec::new();
            for a in 0..n {
                for b in 0..n {
                    if a != b && rng.gen_bool(0.25) {
                        edges.push(Edge::new(a, b, rng.gen_range(1.0..200.0)));
                    }
                }
            }
            let g = CoreCommGraph::new(cores.clone(), edges).unwrap();
            let fp = pack(&SequencePair::random(n, &mut rng), &cores);
            let Ok(grids) = extract_grids(&fp) else { continue };
            let mut grids = refine_grids(&grids, n + 3);
            let snapshot = grids.clone();
            let part = Partition::new(3, (0..n).map(|i| i % 3).collect()).unwrap();
            let sp = insert_switches(&fp, &mut grids, &g, &part).unwrap();
            let centers = fp.centers();
            let mut occupied = vec![false; snapshot.len()];
            for &k in &sp.order {
                let chosen = sp.grid[k];
                let expected = insertion_cost(&g, &part, k, &centers, snapshot[chosen].center);
                assert_eq!(sp.cost[k], expected);
                for &c in &sp.candidates[k] {
                    assert!(!occupied[c]);
                    assert!(sp.cost[k] <= insertion_cost(&g, &part, k, &centers, snapshot[c].center));
                }
                occupied[chosen] = true;
            }
            // flows are visited heaviest first
            assert!(sp.order.windows(2).all(|w| sp.flow[w[0]] >= sp.flow[w[1]]));
        }
    }
}
