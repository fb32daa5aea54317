// SPDX-License-Identifier: Apache-2.0

//! Phase I: simulated-annealing floorplanning.
//!
//! Packings are encoded as sequence pairs with a per-core rotation flag. In
//! partition-driven mode ([`Mode::Pdf`]) every candidate packing is
//! re-clustered from its own core centers before it is scored; in the
//! baseline mode ([`Mode::Pbf`]) the clustering is computed once from the
//! demands and held fixed.

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::model::{
    cluster_bounding_resource, smallest_core_side, Core, CoreCommGraph, Mode, Partition, Point, Rect,
    SynthesisConfig,
};
use crate::partition::{min_cut_partition_with, reweight, reweight_by_demand};

/// Placed cores and the chip outline.
#[derive(Debug, Clone, PartialEq)]
pub struct Floorplan {
    pub placements: Vec<Rect>,
    pub chip: Rect,
}

impl Floorplan {
    pub fn area(&self) -> f64 {
        self.chip.area()
    }

    pub fn centers(&self) -> Vec<Point> {
        self.placements.iter().map(Rect::center).collect()
    }

    pub fn core_area(&self) -> f64 {
        self.placements.iter().map(Rect::area).sum()
    }

    pub fn whitespace_area(&self) -> f64 {
        self.area() - self.core_area()
    }

    /// Whitespace as a percentage of chip area.
    pub fn whitespace_pct(&self) -> f64 {
        if self.area() > 0.0 {
            100.0 * (1.0 - self.core_area() / self.area())
        } else {
            0.0
        }
    }

    /// Pairs of cores whose interiors overlap.
    pub fn overlaps(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for i in 0..self.placements.len() {
            for j in i + 1..self.placements.len() {
                if self.placements[i].overlaps(&self.placements[j]) {
                    out.push((i, j));
                }
            }
        }
        out
    }

    pub fn is_legal(&self) -> bool {
        self.overlaps().is_empty() && self.placements.iter().all(|r| self.chip.contains_rect(r))
    }

    /// The same placement inside a chip grown by `factor` in both dimensions.
    pub fn inflated(&self, factor: f64) -> Floorplan {
        let chip = Rect::new(self.chip.x, self.chip.y, self.chip.w * factor, self.chip.h * factor);
        Floorplan { placements: self.placements.clone(), chip }
    }
}

/// Sequence pair with rotation flags.
///
/// Core `a` is left of `b` when it precedes `b` in both sequences, and below
/// `b` when it follows `b` in `positive` but precedes it in `negative`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SequencePair {
    pub positive: Vec<usize>,
    pub negative: Vec<usize>,
    pub rotated: Vec<bool>,
}

/// One perturbation of a [`SequencePair`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Move {
    /// Exchange two cores in both sequences (changes positions, not topology).
    SwapCores(usize, usize),
    /// Exchange two entries of the positive sequence only.
    SwapPositive(usize, usize),
    /// Exchange two entries of the negative sequence only.
    SwapNegative(usize, usize),
    Rotate(usize),
}

impl SequencePair {
    /// Both sequences `0..n`: all cores in one row.
    pub fn identity(n: usize) -> Self {
        SequencePair { positive: (0..n).collect(), negative: (0..n).collect(), rotated: vec![false; n] }
    }

    pub fn random<R: Rng>(n: usize, rng: &mut R) -> Self {
        let mut sp = Self::identity(n);
        sp.positive.shuffle(rng);
        sp.negative.shuffle(rng);
        sp
    }

    pub fn len(&self) -> usize {
        self.positive.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positive.is_empty()
    }

    pub fn random_move<R: Rng>(&self, rng: &mut R) -> Option<Move> {
        let n = self.len();
        if n == 0 {
            return None;
        }
        if n == 1 {
            return Some(Move::Rotate(0));
        }
        let kind = rng.gen_range(0..4);
        if kind == 3 {
            return Some(Move::Rotate(rng.gen_range(0..n)));
        }
        let a = rng.gen_range(0..n);
        let mut b = rng.gen_range(0..n - 1);
        if b >= a {
            b += 1;
        }
        Some(match kind {
            0 => Move::SwapCores(a, b),
            1 => Move::SwapPositive(a, b),
            _ => Move::SwapNegative(a, b),
        })
    }

    pub fn apply(&mut self, mv: Move) {
        match mv {
            Move::SwapCores(a, b) => {
                for seq in [&mut self.positive, &mut self.negative] {
                    let ia = seq.iter().position(|&c| c == a).expect("core in sequence");
                    let ib = seq.iter().position(|&c| c == b).expect("core in sequence");
                    seq.swap(ia, ib);
                }
            }
            Move::SwapPositive(i, j) => self.positive.swap(i, j),
            Move::SwapNegative(i, j) => self.negative.swap(i, j),
            Move::Rotate(c) => self.rotated[c] = !self.rotated[c],
        }
    }
}

/// Decodes a sequence pair into the tightest packing it admits, with the
/// chip's lower-left corner at the origin.
pub fn pack(sp: &SequencePair, cores: &[Core]) -> Floorplan {
    let n = sp.len();
    let dims: Vec<(f64, f64)> = (0..n)
        .map(|c| {
            let core = &cores[c];
            if sp.rotated[c] {
                (core.height, core.width)
            } else {
                (core.width, core.height)
            }
        })
        .collect();
    let mut pos_index = vec![0; n];
    let mut neg_index = vec![0; n];
    for (i, &c) in sp.positive.iter().enumerate() {
        pos_index[c] = i;
    }
    for (i, &c) in sp.negative.iter().enumerate() {
        neg_index[c] = i;
    }

    let mut x = vec![0.0f64; n];
    for (i, &b) in sp.positive.iter().enumerate() {
        let mut left = 0.0f64;
        for &a in &sp.positive[..i] {
            if neg_index[a] < neg_index[b] {
                left = left.max(x[a] + dims[a].0);
            }
        }
        x[b] = left;
    }
    let mut y = vec![0.0f64; n];
    for (i, &b) in sp.negative.iter().enumerate() {
        let mut bottom = 0.0f64;
        for &a in &sp.negative[..i] {
            if pos_index[a] > pos_index[b] {
                bottom = bottom.max(y[a] + dims[a].1);
            }
        }
        y[b] = bottom;
    }

    let placements: Vec<Rect> = (0..n).map(|c| Rect::new(x[c], y[c], dims[c].0, dims[c].1)).collect();
    let chip = match Rect::bounding(&placements) {
        Some(b) => Rect::new(0.0, 0.0, b.x_max(), b.y_max()),
        None => Rect::default(),
    };
    Floorplan { placements, chip }
}

/// Weights of the annealing cost.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CostWeights {
    pub area: f64,
    pub flow: f64,
    pub resource: f64,
}

impl CostWeights {
    /// Configured weights, with unset ones normalizing by the given initial
    /// component (1.0 when that component is zero).
    pub fn resolve(cfg: &SynthesisConfig, initial: &FloorplanCost) -> Self {
        let normalize = |v: f64| if v > 0.0 { 1.0 / v } else { 1.0 };
        CostWeights {
            area: cfg.lambda_area.unwrap_or_else(|| normalize(initial.area)),
            flow: cfg.lambda_flow.unwrap_or_else(|| normalize(initial.flow)),
            resource: cfg.lambda_resource.unwrap_or_else(|| normalize(initial.resource)),
        }
    }

    pub fn unit() -> Self {
        CostWeights { area: 1.0, flow: 1.0, resource: 1.0 }
    }
}

/// Annealing cost and its components.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FloorplanCost {
    /// Chip area, mm².
    pub area: f64,
    /// Demand on directed edges crossing clusters, Mbit/s.
    pub flow: f64,
    /// Sum of cluster half-perimeters, mm.
    pub resource: f64,
    pub phi: f64,
}

impl FloorplanCost {
    pub fn new(area: f64, flow: f64, resource: f64, weights: &CostWeights) -> Self {
        let phi = weights.area * area + weights.flow * flow + weights.resource * resource;
        FloorplanCost { area, flow, resource, phi }
    }
}

/// Demand on directed edges whose endpoints sit in different clusters.
pub fn cut_flow(g: &CoreCommGraph, part: &Partition) -> f64 {
    g.edges()
        .iter()
        .filter(|e| part.cluster_of(e.src) != part.cluster_of(e.dst))
        .map(|e| e.weight)
        .sum()
}

/// Scores `fp` against a given clustering.
pub fn evaluate_with_partition(
    fp: &Floorplan,
    g: &CoreCommGraph,
    part: &Partition,
    weights: &CostWeights,
) -> Result<FloorplanCost> {
    let mut resource = 0.0;
    for k in 0..part.clusters() {
        resource += cluster_bounding_resource(&fp.placements, part, k)?;
    }
    Ok(FloorplanCost::new(fp.area(), cut_flow(g, part), resource, weights))
}

/// Clusters `fp` from its own core centers, then scores it.
pub fn evaluate(
    fp: &Floorplan,
    g: &CoreCommGraph,
    cfg: &SynthesisConfig,
    weights: &CostWeights,
) -> Result<(Partition, FloorplanCost)> {
    let part = partition_placement(fp, g, cfg)?;
    let cost = evaluate_with_partition(fp, g, &part, weights)?;
    Ok((part, cost))
}

/// Position-aware clustering of a placement.
pub fn partition_placement(fp: &Floorplan, g: &CoreCommGraph, cfg: &SynthesisConfig) -> Result<Partition> {
    let rw = reweight(g, &fp.centers(), cfg.alpha_w, cfg.alpha_d, Some(smallest_core_side(g)))?;
    min_cut_partition_with(&rw, cfg.switches, cfg.balance_slack, cfg.seed, cfg.partition_starts)
}

/// Demand-only clustering used by the baseline mode.
pub fn partition_before_floorplan(g: &CoreCommGraph, cfg: &SynthesisConfig) -> Result<Partition> {
    let rw = reweight_by_demand(g, cfg.alpha_w);
    min_cut_partition_with(&rw, cfg.switches, cfg.balance_slack, cfg.seed, cfg.partition_starts)
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct AnnealStats {
    pub initial_temperature: f64,
    pub temperatures: usize,
    pub evaluations: usize,
    pub accepted: usize,
    pub cache_hits: usize,
    /// Clusterings computed from core positions.
    pub positional_partitions: usize,
    /// Best cost after each temperature step.
    pub best_trace: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnnealOutcome {
    pub floorplan: Floorplan,
    pub partition: Partition,
    pub cost: FloorplanCost,
    pub weights: CostWeights,
    pub state: SequencePair,
    pub stats: AnnealStats,
}

const CACHE_LIMIT: usize = 1 << 14;

struct Scorer<'a> {
    g: &'a CoreCommGraph,
    cfg: &'a SynthesisConfig,
    weights: CostWeights,
    fixed: Option<Partition>,
    cache: BTreeMap<Vec<u64>, Partition>,
    stats: AnnealStats,
}

impl Scorer<'_> {
    fn score(&mut self, fp: &Floorplan) -> Result<(Partition, FloorplanCost)> {
        self.stats.evaluations += 1;
        let part = match &self.fixed {
            Some(p) => p.clone(),
            None => {
                let key: Vec<u64> = fp.placements.iter().flat_map(|r| {
                    let c = r.center();
                    [c.x.to_bits(), c.y.to_bits()]
                }).collect();
                if let Some(p) = self.cache.get(&key) {
                    self.stats.cache_hits += 1;
                    p.clone()
                } else {
                    self.stats.positional_partitions += 1;
                    let p = partition_placement(fp, self.g, self.cfg)?;
                    if self.cache.len() >= CACHE_LIMIT {
                        self.cache.clear();
                    }
                    self.cache.insert(key, p.clone());
                    p
                }
            }
        };
        let cost = evaluate_with_partition(fp, self.g, &part, &self.weights)?;
        Ok((part, cost))
    }
}

struct Candidate {
    state: SequencePair,
    floorplan: Floorplan,
    partition: Partition,
    cost: FloorplanCost,
}

/// Anneals a floorplan for `g`.
///
/// Moves are accepted with probability `min(1, exp(-delta / T))`; the best
/// state ever visited is returned. The run is a deterministic function of
/// `g` and `cfg` (including `cfg.seed`).
pub fn anneal(g: &CoreCommGraph, cfg: &SynthesisConfig) -> Result<AnnealOutcome> {
    let n = g.core_count();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let fixed = match cfg.mode {
        Mode::Pbf => Some(partition_before_floorplan(g, cfg)?),
        Mode::Pdf => None,
    };
    let mut scorer = Scorer {
        g,
        cfg,
        weights: CostWeights::unit(),
        fixed,
        cache: BTreeMap::new(),
        stats: AnnealStats::default(),
    };

    let state = SequencePair::random(n, &mut rng);
    let floorplan = pack(&state, g.cores());
    let (partition, raw) = scorer.score(&floorplan)?;
    scorer.weights = CostWeights::resolve(cfg, &raw);
    let cost = FloorplanCost::new(raw.area, raw.flow, raw.resource, &scorer.weights);
    let mut current = Candidate { state, floorplan, partition, cost };

    let schedule = &cfg.schedule;
    let t0 = match schedule.initial_temperature {
        Some(t) => t,
        None => probe_temperature(&current, &mut scorer, &mut rng, schedule.probe_moves)?,
    };
    let stop = schedule.stop_temperature.unwrap_or(t0 * 1e-4);
    let moves = schedule.moves_per_temperature.unwrap_or(30 * n.max(1));
    scorer.stats.initial_temperature = t0;

    let mut best = Candidate {
        state: current.state.clone(),
        floorplan: current.floorplan.clone(),
        partition: current.partition.clone(),
        cost: current.cost,
    };
    let mut temperature = t0;
    while temperature > stop && n > 0 {
        for _ in 0..moves {
            let Some(mv) = current.state.random_move(&mut rng) else { break };
            let mut state = current.state.clone();
            state.apply(mv);
            let floorplan = pack(&state, g.cores());
            let (partition, cost) = scorer.score(&floorplan)?;
            let delta = cost.phi - current.cost.phi;
            let accept = delta <= 0.0 || rng.gen::<f64>() < libm::exp(-delta / temperature);
            if accept {
                scorer.stats.accepted += 1;
                current = Candidate { state, floorplan, partition, cost };
                if current.cost.phi < best.cost.phi {
                    best = Candidate {
                        state: current.state.clone(),
                        floorplan: current.floorplan.clone(),
                        partition: current.partition.clone(),
                        cost: current.cost,
                    };
                }
            }
        }
        scorer.stats.temperatures += 1;
        scorer.stats.best_trace.push(best.cost.phi);
        temperature *= schedule.cooling_ratio;
    }

    Ok(AnnealOutcome {
        floorplan: best.floorplan,
        partition: best.partition,
        cost: best.cost,
        weights: scorer.weights,
        state: best.state,
        stats: scorer.stats,
    })
}

/// Temperature at which the mean uphill move of a random probe is accepted
/// with probability 0.9.
fn probe_temperature(
    start: &Candidate,
    scorer: &mut Scorer<'_>,
    rng: &mut ChaCha8Rng,
    probes: usize,
) -> Result<f64> {
    let mut uphill = 0.0;
    let mut count = 0usize;
    for _ in 0..probes {
        let Some(mv) = start.state.random_move(rng) else { break };
        let mut state = start.state.clone();
        state.apply(mv);
        let (_, cost) = scorer.score(&pack(&state, scorer.g.cores()))?;
        let delta = cost.phi - start.cost.phi;
        if delta > 0.0 {
            uphill += delta;
            count += 1;
        }
    }
    let t = if count > 0 { -(uphill / count as f64) / libm::log(0.9) } else { 0.0 };
    Ok(if t > 0.0 { t } else { 1e-3 * start.cost.phi.abs().max(1e-9) })
}
