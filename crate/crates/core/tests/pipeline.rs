// SPDX-License-Identifier: Apache-2.0

use nocsynth_core::placement::Occupant;
use nocsynth_core::power::PowerModel;
use nocsynth_core::synth::synthesize;
use nocsynth_core::{validate_ccg, Core, CoreCommGraph, Edge, Mode, SynthesisConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_graph(seed: u64, n: usize) -> CoreCommGraph {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cores = (0..n).map(|i| Core::new(i, rng.gen_range(1..=6) as f64 * 0.5, rng.gen_range(1..=6) as f64 * 0.5)).collect();
    let mut edges = Vec::new();
    for a in 0..n {
        for b in 0..n {
            if a != b && rng.gen_bool(0.2) {
                edges.push(Edge::new(a, b, rng.gen_range(1..=500) as f64));
            }
        }
    }
    if edges.is_empty() {
        edges.push(Edge::new(0, 1, 10.0));
    }
    validate_ccg(cores, edges).unwrap()
}

fn quick(mode: Mode, switches: usize, seed: u64) -> SynthesisConfig {
    let mut cfg = SynthesisConfig { mode, switches, seed, ..SynthesisConfig::default() };
    cfg.schedule.cooling_ratio = 0.8;
    cfg
}

#[test]
fn every_stage_output_is_consistent() {
    let pm = PowerModel::default();
    for seed in 0..6 {
        let g = random_graph(seed, 9);
        for mode in [Mode::Pdf, Mode::Pbf] {
            let s = synthesize(&g, &quick(mode, 3, seed), &pm).unwrap();
            assert!(s.floorplan.is_legal());
            assert!(s.partition.is_balanced(s.config.balance_slack));
            let mut used: Vec<usize> = s.switches.grid.iter().chain(&s.interfaces.grid).copied().collect();
            used.sort_unstable();
            used.dedup();
            assert_eq!(used.len(), 3 + 9, "one component per grid");
            for (core, &j) in s.interfaces.grid.iter().enumerate() {
                assert_eq!(s.grids[j].occupant, Occupant::Ni(core));
            }
            assert_eq!(s.routes.flow_routes(&g, &s.partition).unwrap().len(), g.edges().len());
            assert!(s.report.avg_hops >= 1.0);
            assert!(s.report.power_mw > 0.0);
        }
    }
}

#[test]
fn baseline_partition_ignores_positions() {
    let g = random_graph(3, 10);
    let s = synthesize(&g, &quick(Mode::Pbf, 3, 1), &PowerModel::default()).unwrap();
    assert_eq!(s.anneal.stats.positional_partitions, 0);
    let s = synthesize(&g, &quick(Mode::Pdf, 3, 1), &PowerModel::default()).unwrap();
    assert!(s.anneal.stats.positional_partitions > 0);
}

#[test]
fn doubling_demands_doubles_power() {
    let pm = PowerModel::default();
    for seed in 0..4 {
        let g = random_graph(10 + seed, 8);
        for mode in [Mode::Pdf, Mode::Pbf] {
            let cfg = quick(mode, 3, seed);
            let a = synthesize(&g, &cfg, &pm).unwrap();
            let b = synthesize(&g.scaled(2.0), &cfg, &pm).unwrap();
            assert_eq!(a.partition, b.partition);
            assert_eq!(b.report.power_mw, 2.0 * a.report.power_mw);
        }
    }
}

#[test]
fn more_switches_than_cores_is_capped() {
    let g = random_graph(5, 4);
    let s = synthesize(&g, &quick(Mode::Pdf, 9, 2), &PowerModel::default()).unwrap();
    assert_eq!(s.report.switches, 4);
    assert_eq!(s.partition.sizes(), vec![1; 4]);
}
