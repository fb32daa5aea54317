// SPDX-License-Identifier: Apache-2.0

//! Domain types shared by every stage of the synthesis flow.
//!
//! Units are fixed throughout: lengths in mm, demands in Mbit/s, bit energies
//! in pJ/bit. Multiplying the last two gives µW.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, GraphDefect, Result};

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }

    pub fn manhattan(self, other: Point) -> f64 {
        (self.x - other.x).abs() + (self.y - other.y).abs()
    }
}

/// Axis-aligned rectangle given by its lower-left corner and extents.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Rect {
    pub x: f64,
    pub y: f64,
    pub w: f64,
    pub h: f64,
}

impl Rect {
    pub const fn new(x: f64, y: f64, w: f64, h: f64) -> Self {
        Rect { x, y, w, h }
    }

    pub fn x_max(&self) -> f64 {
        self.x + self.w
    }

    pub fn y_max(&self) -> f64 {
        self.y + self.h
    }

    pub fn area(&self) -> f64 {
        self.w * self.h
    }

    pub fn center(&self) -> Point {
        Point::new(self.x + self.w / 2.0, self.y + self.h / 2.0)
    }

    /// True when the interiors share positive area.
    pub fn overlaps(&self, other: &Rect) -> bool {
        self.x < other.x_max() && other.x < self.x_max() && self.y < other.y_max() && other.y < self.y_max()
    }

    /// Closed containment test.
    pub fn contains_point(&self, p: Point) -> bool {
        p.x >= self.x && p.x <= self.x_max() && p.y >= self.y && p.y <= self.y_max()
    }

    pub fn contains_rect(&self, other: &Rect) -> bool {
        other.x >= self.x && other.y >= self.y && other.x_max() <= self.x_max() && other.y_max() <= self.y_max()
    }

    /// Same center, grown by `margin` on all four sides.
    pub fn inflate(&self, margin: f64) -> Rect {
        Rect::new(self.x - margin, self.y - margin, self.w + 2.0 * margin, self.h + 2.0 * margin)
    }

    pub fn translate(&self, dx: f64, dy: f64) -> Rect {
        Rect::new(self.x + dx, self.y + dy, self.w, self.h)
    }

    /// Half perimeter.
    pub fn half_perimeter(&self) -> f64 {
        self.w + self.h
    }

    /// Smallest rectangle enclosing every rectangle of the iterator.
    pub fn bounding<'a>(rects: impl IntoIterator<Item = &'a Rect>) -> Option<Rect> {
        let mut it = rects.into_iter();
        let first = it.next()?;
        let (mut x0, mut y0, mut x1, mut y1) = (first.x, first.y, first.x_max(), first.y_max());
        for r in it {
            x0 = x0.min(r.x);
            y0 = y0.min(r.y);
            x1 = x1.max(r.x_max());
            y1 = y1.max(r.y_max());
        }
        Some(Rect::new(x0, y0, x1 - x0, y1 - y0))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Core {
    pub id: usize,
    pub width: f64,
    pub height: f64,
}

impl Core {
    pub const fn new(id: usize, width: f64, height: f64) -> Self {
        Core { id, width, height }
    }

    pub fn area(&self) -> f64 {
        self.width * self.height
    }
}

/// A directed communication demand `src -> dst` in Mbit/s.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge {
    pub src: usize,
    pub dst: usize,
    pub weight: f64,
}

impl Edge {
    pub const fn new(src: usize, dst: usize, weight: f64) -> Self {
        Edge { src, dst, weight }
    }
}

/// Directed, weighted core communication graph.
///
/// Construction goes through [`validate_ccg`], so a value of this type always
/// has dense core ids, positive dimensions, no self-loops, no duplicate
/// ordered pairs and strictly positive demands.
#[derive(Debug, Clone, PartialEq)]
pub struct CoreCommGraph {
    cores: Vec<Core>,
    edges: Vec<Edge>,
}

/// Checks every graph invariant and returns the graph, or the first defect found.
pub fn validate_ccg(cores: Vec<Core>, edges: Vec<Edge>) -> Result<CoreCommGraph> {
    for (index, core) in cores.iter().enumerate() {
        if core.id != index {
            return Err(Error::MalformedGraph(GraphDefect::CoreId { index, id: core.id }));
        }
        let ok = |v: f64| v.is_finite() && v > 0.0;
        if !ok(core.width) || !ok(core.height) {
            return Err(Error::MalformedGraph(GraphDefect::CoreSize { id: core.id }));
        }
    }
    let n = cores.len();
    let mut seen = alloc::collections::BTreeSet::new();
    for e in &edges {
        if e.src >= n || e.dst >= n {
            return Err(Error::MalformedGraph(GraphDefect::UnknownCore { src: e.src, dst: e.dst }));
        }
        if e.src == e.dst {
            return Err(Error::MalformedGraph(GraphDefect::SelfLoop { core: e.src }));
        }
        if !(e.weight.is_finite() && e.weight > 0.0) {
            return Err(Error::MalformedGraph(GraphDefect::Weight { src: e.src, dst: e.dst }));
        }
        if !seen.insert((e.src, e.dst)) {
            return Err(Error::MalformedGraph(GraphDefect::Duplicate { src: e.src, dst: e.dst }));
        }
    }
    Ok(CoreCommGraph { cores, edges })
}

impl CoreCommGraph {
    pub fn new(cores: Vec<Core>, edges: Vec<Edge>) -> Result<Self> {
        validate_ccg(cores, edges)
    }

    pub fn cores(&self) -> &[Core] {
        &self.cores
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn core_count(&self) -> usize {
        self.cores.len()
    }

    /// Demand `src -> dst`, zero when no edge is stored.
    pub fn weight(&self, src: usize, dst: usize) -> f64 {
        self.edges
            .iter()
            .find(|e| e.src == src && e.dst == dst)
            .map_or(0.0, |e| e.weight)
    }

    /// Largest single-edge demand (`0.0` for an edgeless graph).
    pub fn max_weight(&self) -> f64 {
        self.edges.iter().fold(0.0, |acc, e| acc.max(e.weight))
    }

    /// Unordered communicating pairs `(a, b)` with `a < b` and their summed
    /// demand in both directions, sorted by pair.
    pub fn symmetric_pairs(&self) -> Vec<(usize, usize, f64)> {
        let mut pairs: Vec<(usize, usize, f64)> = Vec::with_capacity(self.edges.len());
        for e in &self.edges {
            let (a, b) = if e.src < e.dst { (e.src, e.dst) } else { (e.dst, e.src) };
            pairs.push((a, b, e.weight));
        }
        pairs.sort_by_key(|x| (x.0, x.1));
        let mut merged: Vec<(usize, usize, f64)> = Vec::with_capacity(pairs.len());
        for (a, b, w) in pairs {
            match merged.last_mut() {
                Some(last) if last.0 == a && last.1 == b => last.2 += w,
                _ => merged.push((a, b, w)),
            }
        }
        merged
    }

    /// Same graph with every demand multiplied by `factor` (> 0).
    pub fn scaled(&self, factor: f64) -> Self {
        let edges = self.edges.iter().map(|e| Edge::new(e.src, e.dst, e.weight * factor)).collect();
        CoreCommGraph { cores: self.cores.clone(), edges }
    }
}

/// Assignment of every core to one of `clusters` clusters.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Partition {
    clusters: usize,
    assignment: Vec<usize>,
}

impl Partition {
    /// Fails with `InvalidPartition` for an out-of-range index and with
    /// `EmptyCluster` when some cluster receives no core.
    pub fn new(clusters: usize, assignment: Vec<usize>) -> Result<Self> {
        if clusters == 0 {
            return Err(Error::InvalidPartition);
        }
        let mut used = vec![false; clusters];
        for &k in &assignment {
            if k >= clusters {
                return Err(Error::InvalidPartition);
            }
            used[k] = true;
        }
        if let Some(cluster) = used.iter().position(|u| !u) {
            return Err(Error::EmptyCluster { cluster });
        }
        Ok(Partition { clusters, assignment })
    }

    pub fn clusters(&self) -> usize {
        self.clusters
    }

    pub fn assignment(&self) -> &[usize] {
        &self.assignment
    }

    pub fn cluster_of(&self, core: usize) -> usize {
        self.assignment[core]
    }

    pub fn members(&self, cluster: usize) -> impl Iterator<Item = usize> + '_ {
        self.assignment.iter().enumerate().filter(move |(_, &k)| k == cluster).map(|(i, _)| i)
    }

    pub fn sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.clusters];
        for &k in &self.assignment {
            sizes[k] += 1;
        }
        sizes
    }

    pub fn is_balanced(&self, slack: usize) -> bool {
        let (lo, hi) = balance_bounds(self.assignment.len(), self.clusters, slack);
        self.sizes().iter().all(|&s| s >= lo && s <= hi)
    }
}

/// Inclusive cluster-size range allowed for `n` cores in `m` clusters:
/// within `slack` of `ceil(n / m)`, and never empty.
pub fn balance_bounds(n: usize, m: usize, slack: usize) -> (usize, usize) {
    let ceil = n.div_ceil(m);
    (ceil.saturating_sub(slack).max(1), ceil + slack)
}

/// Half perimeter of the smallest box enclosing all cores of `cluster`.
pub fn cluster_bounding_resource(placements: &[Rect], part: &Partition, cluster: usize) -> Result<f64> {
    cluster_box(placements, part, cluster).map(|r| r.half_perimeter())
}

/// The smallest box enclosing all cores of `cluster`.
pub fn cluster_box(placements: &[Rect], part: &Partition, cluster: usize) -> Result<Rect> {
    Rect::bounding(part.members(cluster).map(|i| &placements[i])).ok_or(Error::EmptyCluster { cluster })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Mode {
    /// Partition inside the annealing loop on every new packing.
    #[default]
    Pdf,
    /// Partition once from demands alone, then floorplan around it.
    Pbf,
}

/// Annealing schedule. `None` fields are derived from the instance.
#[derive(Debug, Clone, PartialEq)]
pub struct AnnealSchedule {
    /// `None`: chosen so that about 90% of probed uphill moves are accepted.
    pub initial_temperature: Option<f64>,
    pub cooling_ratio: f64,
    /// `None`: 30 moves per core.
    pub moves_per_temperature: Option<usize>,
    /// `None`: initial temperature times 1e-4.
    pub stop_temperature: Option<f64>,
    /// Random moves used to estimate the initial temperature.
    pub probe_moves: usize,
}

impl Default for AnnealSchedule {
    fn default() -> Self {
        AnnealSchedule {
            initial_temperature: None,
            cooling_ratio: 0.95,
            moves_per_temperature: None,
            stop_temperature: None,
            probe_moves: 100,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthesisConfig {
    /// Number of switches, one per cluster.
    pub switches: usize,
    /// Weight of the demand term in partition edge weights.
    pub alpha_w: f64,
    /// Weight of the proximity term in partition edge weights.
    pub alpha_d: f64,
    /// Annealing cost weights for area, cut flow and cluster bounding resource.
    /// `None` normalizes by the value of the initial packing.
    pub lambda_area: Option<f64>,
    pub lambda_flow: Option<f64>,
    pub lambda_resource: Option<f64>,
    /// Margin of the network-interface bounding box in mm. `None` uses the
    /// shorter side of the smallest core.
    pub ni_margin: Option<f64>,
    /// How many times the margin may be doubled when interfaces do not fit.
    pub ni_margin_doublings: u32,
    pub balance_slack: usize,
    /// Random restarts of the min-cut refinement.
    pub partition_starts: usize,
    pub seed: u64,
    pub schedule: AnnealSchedule,
    pub mode: Mode,
}

impl Default for SynthesisConfig {
    fn default() -> Self {
        SynthesisConfig {
            switches: 3,
            alpha_w: 0.5,
            alpha_d: 0.5,
            lambda_area: None,
            lambda_flow: None,
            lambda_resource: None,
            ni_margin: None,
            ni_margin_doublings: 6,
            balance_slack: 1,
            partition_starts: crate::partition::DEFAULT_STARTS,
            seed: 1,
            schedule: AnnealSchedule::default(),
            mode: Mode::Pdf,
        }
    }
}

impl SynthesisConfig {
    pub fn validate(&self) -> Result<()> {
        let non_negative = |v: Option<f64>| v.is_none_or(|x| x.is_finite() && x >= 0.0);
        if self.switches < 2 {
            return Err(Error::InvalidConfig("switch count must be at least 2"));
        }
        if !(non_negative(self.lambda_area) && non_negative(self.lambda_flow) && non_negative(self.lambda_resource)) {
            return Err(Error::InvalidConfig("cost weights must be non-negative"));
        }
        if !(self.alpha_w.is_finite() && self.alpha_w >= 0.0 && self.alpha_d.is_finite() && self.alpha_d >= 0.0) {
            return Err(Error::InvalidConfig("partition weights must be non-negative"));
        }
        if self.ni_margin.is_some_and(|l| !(l.is_finite() && l > 0.0)) {
            return Err(Error::InvalidConfig("interface margin must be positive"));
        }
        if self.partition_starts == 0 {
            return Err(Error::InvalidConfig("at least one partition start is required"));
        }
        let s = &self.schedule;
        if !(s.cooling_ratio > 0.0 && s.cooling_ratio < 1.0) {
            return Err(Error::InvalidConfig("cooling ratio must lie in (0, 1)"));
        }
        if s.initial_temperature.is_some_and(|t| !(t.is_finite() && t > 0.0))
            || s.stop_temperature.is_some_and(|t| !(t.is_finite() && t > 0.0))
        {
            return Err(Error::InvalidConfig("temperatures must be positive"));
        }
        if s.moves_per_temperature == Some(0) {
            return Err(Error::InvalidConfig("moves per temperature must be positive"));
        }
        Ok(())
    }

    /// Interface margin for `g`: the configured one, or the shorter side of
    /// the smallest core.
    pub fn ni_margin_for(&self, g: &CoreCommGraph) -> f64 {
        self.ni_margin.unwrap_or_else(|| smallest_core_side(g))
    }
}

/// Shorter side of the smallest-area core (1.0 for an empty graph).
pub fn smallest_core_side(g: &CoreCommGraph) -> f64 {
    g.cores()
        .iter()
        .min_by(|a, b| a.area().total_cmp(&b.area()))
        .map_or(1.0, |c| c.width.min(c.height))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn two_cores() -> Vec<Core> {
        vec![Core::new(0, 1.0, 1.0), Core::new(1, 2.0, 1.0)]
    }

    #[test]
    fn minimal_graph_is_valid() {
        let g = validate_ccg(two_cores(), vec![Edge::new(0, 1, 10.0)]).unwrap();
        assert_eq!(g.max_weight(), 10.0);
        assert_eq!(g.weight(1, 0), 0.0);
    }

    #[test]
    fn self_loop_rejected() {
        let err = validate_ccg(two_cores(), vec![Edge::new(0, 0, 5.0)]).unwrap_err();
        assert_eq!(err, Error::MalformedGraph(GraphDefect::SelfLoop { core: 0 }));
    }

    #[test]
    fn duplicate_rejected() {
        let edges = vec![Edge::new(0, 1, 5.0), Edge::new(0, 1, 7.0)];
        let err = validate_ccg(two_cores(), edges).unwrap_err();
        assert_eq!(err, Error::MalformedGraph(GraphDefect::Duplicate { src: 0, dst: 1 }));
    }

    #[test]
    fn reverse_edge_is_not_duplicate() {
        let edges = vec![Edge::new(0, 1, 5.0), Edge::new(1, 0, 7.0)];
        let g = validate_ccg(two_cores(), edges).unwrap();
        assert_eq!(g.symmetric_pairs(), vec![(0, 1, 12.0)]);
    }

    #[test]
    fn bad_weights_and_ids_rejected() {
        assert!(validate_ccg(two_cores(), vec![Edge::new(0, 1, 0.0)]).is_err());
        assert!(validate_ccg(two_cores(), vec![Edge::new(0, 2, 1.0)]).is_err());
        assert!(validate_ccg(vec![Core::new(1, 1.0, 1.0)], vec![]).is_err());
        assert!(validate_ccg(vec![Core::new(0, 0.0, 1.0)], vec![]).is_err());
    }

    #[test]
    fn bounding_resource_single_core() {
        let placements = [Rect::new(3.0, 4.0, 2.0, 3.0)];
        let part = Partition::new(1, vec![0]).unwrap();
        assert_eq!(cluster_bounding_resource(&placements, &part, 0).unwrap(), 5.0);
    }

    #[test]
    fn bounding_resource_two_cores() {
        let placements = [Rect::new(0.0, 0.0, 1.0, 1.0), Rect::new(4.0, 0.0, 1.0, 1.0)];
        let part = Partition::new(1, vec![0, 0]).unwrap();
        assert_eq!(cluster_bounding_resource(&placements, &part, 0).unwrap(), 6.0);
    }

    #[test]
    fn empty_cluster_rejected() {
        assert_eq!(Partition::new(2, vec![0, 0]).unwrap_err(), Error::EmptyCluster { cluster: 1 });
        assert_eq!(Partition::new(2, vec![0, 2]).unwrap_err(), Error::InvalidPartition);
    }

    #[test]
    fn balance_bounds_follow_ceiling() {
        assert_eq!(balance_bounds(12, 3, 1), (3, 5));
        assert_eq!(balance_bounds(13, 4, 0), (4, 4));
        assert_eq!(balance_bounds(2, 2, 1), (1, 2));
    }

    #[test]
    fn default_config_is_valid() {
        SynthesisConfig::default().validate().unwrap();
        let bad = SynthesisConfig { switches: 1, ..Default::default() };
        assert!(bad.validate().is_err());
    }

    fn rect_strategy() -> impl Strategy<Value = Rect> {
        (-50.0..50.0f64, -50.0..50.0f64, 0.1..10.0f64, 0.1..10.0f64).prop_map(|(x, y, w, h)| Rect::new(x, y, w, h))
    }

    proptest! {
        #[test]
        fn bounding_resource_matches_corner_scan(rects in proptest::collection::vec(rect_strategy(), 5)) {
            let part = Partition::new(1, vec![0; 5]).unwrap();
            let mut xs = Vec::new();
            let mut ys = Vec::new();
            for r in &rects {
                xs.extend([r.x, r.x + r.w]);
                ys.extend([r.y, r.y + r.h]);
            }
            let span = |v: &[f64]| v.iter().cloned().fold(f64::MIN, f64::max) - v.iter().cloned().fold(f64::MAX, f64::min);
            let expected = span(&xs) + span(&ys);
            let got = cluster_bounding_resource(&rects, &part, 0).unwrap();
            prop_assert!((got - expected).abs() <= 1e-9 * expected.max(1.0));
        }

        #[test]
        fn bounding_resource_translation_invariant(
            rects in proptest::collection::vec(rect_strategy(), 1..6),
            dx in -20.0..20.0f64,
            dy in -20.0..20.0f64,
        ) {
            let part = Partition::new(1, vec![0; rects.len()]).unwrap();
            let moved: Vec<Rect> = rects.iter().map(|r| r.translate(dx, dy)).collect();
            let a = cluster_bounding_resource(&rects, &part, 0).unwrap();
            let b = cluster_bounding_resource(&moved, &part, 0).unwrap();
            prop_assert!((a - b).abs() <= 1e-9 * a.max(1.0));
        }

        #[test]
        fn bounding_resource_monotone(rects in proptest::collection::vec(rect_strategy(), 2..7)) {
            let n = rects.len();
            let mut assign = vec![0; n];
            assign[n - 1] = 1;
            let without = Partition::new(2, assign).unwrap();
            let with = Partition::new(1, vec![0; n]).unwrap();
            let a = cluster_bounding_resource(&rects, &without, 0).unwrap();
            let b = cluster_bounding_resource(&rects, &with, 0).unwrap();
            prop_assert!(b >= a);
        }
    }
}
