// SPDX-License-Identifier: Apache-2.0

//! The two-phase synthesis pipeline.
//!
//! Phase one anneals a floorplan (clustering inside or before the loop,
//! depending on [`Mode`]). Phase two extracts whitespace grids, inserts
//! switches and interfaces, builds the switch graph, routes demands and
//! evaluates power. Each stage's output is checked before the next runs.

use alloc::vec::Vec;
use core::fmt;

use crate::error::{Error, Result};
use crate::floorplan::{anneal, AnnealOutcome, Floorplan};
use crate::model::{CoreCommGraph, Mode, Partition, Point, SynthesisConfig};
use crate::niflow::{assign_nis, mark_nis, NiPlacement};
use crate::pathalloc::{allocate_paths, build_scg, RouteSet, SwitchCommGraph};
use crate::placement::{extract_grids, insert_switches, refine_grids, Grid, Occupant, SwitchPlacement};
use crate::power::{evaluate, PowerModel, PowerReport};

/// Chip growth applied when the annealed packing has no whitespace.
pub const WHITESPACE_GROWTH: f64 = 1.05;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Config,
    Floorplan,
    Grids,
    Switches,
    Interfaces,
    Routing,
    Power,
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Stage::Config => "config",
            Stage::Floorplan => "floorplan",
            Stage::Grids => "grids",
            Stage::Switches => "switches",
            Stage::Interfaces => "interfaces",
            Stage::Routing => "routing",
            Stage::Power => "power",
        })
    }
}

/// A pipeline error tagged with the stage that raised it.
#[derive(Debug, Clone, PartialEq)]
pub struct StageError {
    pub stage: Stage,
    pub error: Error,
}

impl fmt::Display for StageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} stage: {}", self.stage, self.error)
    }
}

impl core::error::Error for StageError {
    fn source(&self) -> Option<&(dyn core::error::Error + 'static)> {
        Some(&self.error)
    }
}

trait AtStage<T> {
    fn at(self, stage: Stage) -> core::result::Result<T, StageError>;
}

impl<T> AtStage<T> for Result<T> {
    fn at(self, stage: Stage) -> core::result::Result<T, StageError> {
        self.map_err(|error| StageError { stage, error })
    }
}

/// Summary figures of one run. Everything here is deterministic in the
/// input and configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthesisReport {
    pub seed: u64,
    pub mode: Mode,
    pub cores: usize,
    pub flows: usize,
    pub switches: usize,
    pub links: usize,
    pub power_mw: f64,
    pub avg_hops: f64,
    pub whitespace_pct: f64,
    pub chip_width: f64,
    pub chip_height: f64,
    /// Annealing cost of the chosen packing.
    pub phi: f64,
    pub cut_flow: f64,
    pub ni_margin: f64,
}

/// Everything a run produced.
#[derive(Debug, Clone, PartialEq)]
pub struct Synthesis {
    pub config: SynthesisConfig,
    pub anneal: AnnealOutcome,
    /// Final floorplan; larger than the annealed one if it had to grow.
    pub floorplan: Floorplan,
    pub partition: Partition,
    /// Grids as they were before any switch was placed.
    pub free_grids: Vec<Grid>,
    /// Grids with their final occupants.
    pub grids: Vec<Grid>,
    pub switches: SwitchPlacement,
    pub interfaces: NiPlacement,
    pub scg: SwitchCommGraph,
    pub routes: RouteSet,
    pub power: PowerReport,
    pub report: SynthesisReport,
}

impl Synthesis {
    pub fn switch_sites(&self) -> Vec<Point> {
        self.switches.grid.iter().map(|&j| self.grids[j].center).collect()
    }

    pub fn interface_sites(&self) -> Vec<Point> {
        self.interfaces.grid.iter().map(|&j| self.grids[j].center).collect()
    }
}

/// The configuration actually run: switches are capped by the core count.
pub fn effective_config(g: &CoreCommGraph, cfg: &SynthesisConfig) -> SynthesisConfig {
    let mut eff = cfg.clone();
    eff.switches = cfg.switches.min(g.core_count()).max(1);
    eff
}

/// Runs the whole pipeline for one seed.
pub fn synthesize(
    g: &CoreCommGraph,
    cfg: &SynthesisConfig,
    pm: &PowerModel,
) -> core::result::Result<Synthesis, StageError> {
    cfg.validate().at(Stage::Config)?;
    let cfg = effective_config(g, cfg);

    let annealed = anneal(g, &cfg).at(Stage::Floorplan)?;
    check(annealed.floorplan.is_legal(), "annealed floorplan overlaps").at(Stage::Floorplan)?;
    check(annealed.partition.clusters() == cfg.switches, "cluster count").at(Stage::Floorplan)?;
    let part = annealed.partition.clone();

    let mut floorplan = annealed.floorplan.clone();
    let raw = match extract_grids(&floorplan) {
        Err(Error::NoWhitespace) => {
            floorplan = floorplan.inflated(WHITESPACE_GROWTH);
            extract_grids(&floorplan)
        }
        other => other,
    }
    .at(Stage::Grids)?;
    let free_grids = refine_grids(&raw, g.core_count() + cfg.switches);
    check_grids(&floorplan, &free_grids).at(Stage::Grids)?;

    let mut grids = free_grids.clone();
    let switches = insert_switches(&floorplan, &mut grids, g, &part).at(Stage::Switches)?;
    check_switches(&grids, &switches).at(Stage::Switches)?;

    let switch_sites: Vec<Point> = switches.grid.iter().map(|&j| grids[j].center).collect();
    let per_core_site: Vec<Point> = part.assignment().iter().map(|&k| switch_sites[k]).collect();
    let margin = cfg.ni_margin_for(g);
    let interfaces = assign_nis(&floorplan.placements, &per_core_site, &grids, margin, cfg.ni_margin_doublings)
        .at(Stage::Interfaces)?;
    mark_nis(&mut grids, &interfaces);
    check_interfaces(&grids, &interfaces).at(Stage::Interfaces)?;
    let ni_sites: Vec<Point> = interfaces.grid.iter().map(|&j| grids[j].center).collect();

    let mut scg = build_scg(g, &part);
    let routes = allocate_paths(&mut scg, &switch_sites, &part.sizes(), pm).at(Stage::Routing)?;
    check_routes(&scg, &routes).at(Stage::Routing)?;

    let power = evaluate(&routes, g, &part, &ni_sites, &switch_sites, floorplan.whitespace_pct(), pm)
        .at(Stage::Power)?;

    let report = SynthesisReport {
        seed: cfg.seed,
        mode: cfg.mode,
        cores: g.core_count(),
        flows: g.edges().len(),
        switches: cfg.switches,
        links: routes.links().len(),
        power_mw: power.power_mw,
        avg_hops: power.avg_hops,
        whitespace_pct: power.whitespace_pct,
        chip_width: floorplan.chip.w,
        chip_height: floorplan.chip.h,
        phi: annealed.cost.phi,
        cut_flow: annealed.cost.flow,
        ni_margin: interfaces.margin,
    };
    Ok(Synthesis {
        config: cfg,
        anneal: annealed,
        floorplan,
        partition: part,
        free_grids,
        grids,
        switches,
        interfaces,
        scg,
        routes,
        power,
        report,
    })
}

fn check(ok: bool, what: &'static str) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(Error::Invariant(what))
    }
}

/// Grids lie in the chip, avoid every core and together cover the whitespace.
fn check_grids(fp: &Floorplan, grids: &[Grid]) -> Result<()> {
    let scale = fp.chip.w.max(fp.chip.h).max(1.0);
    let tol = 1e-9 * scale;
    let chip = fp.chip.inflate(tol);
    for gr in grids {
        check(chip.contains_rect(&gr.rect), "grid outside chip")?;
        let shrunk = gr.rect.inflate(-tol);
        check(fp.placements.iter().all(|c| !c.overlaps(&shrunk)), "grid overlaps a core")?;
    }
    let area: f64 = grids.iter().map(|g| g.rect.area()).sum();
    check((area - fp.whitespace_area()).abs() <= tol * scale, "grids do not cover the whitespace")
}

fn check_switches(grids: &[Grid], sp: &SwitchPlacement) -> Result<()> {
    for (k, &j) in sp.grid.iter().enumerate() {
        check(grids[j].occupant == Occupant::Switch(k), "switch grid not marked")?;
    }
    Ok(())
}

fn check_interfaces(grids: &[Grid], ni: &NiPlacement) -> Result<()> {
    for (c, &j) in ni.grid.iter().enumerate() {
        check(grids[j].occupant == Occupant::Ni(c), "interface grid shared")?;
    }
    Ok(())
}

fn check_routes(scg: &SwitchCommGraph, routes: &RouteSet) -> Result<()> {
    check(scg.edges().iter().all(|e| e.from < e.to && e.cost >= 0.0), "switch graph edge")?;
    for r in routes.demand_routes() {
        check(r.switches.first() == Some(&r.from) && r.switches.last() == Some(&r.to), "route endpoints")?;
        check(r.switches.windows(2).all(|p| p[0] < p[1] && scg.edge_id(p[0], p[1]).is_some()), "route hop")?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Core, Edge};

    fn graph(sizes: &[(f64, f64)], edges: &[(usize, usize, f64)]) -> CoreCommGraph {
        let cores = sizes.iter().enumerate().map(|(id, &(width, height))| Core { id, width, height }).collect();
        let edges = edges.iter().map(|&(src, dst, weight)| Edge { src, dst, weight }).collect();
        CoreCommGraph::new(cores, edges).unwrap()
    }

    fn six_cores() -> CoreCommGraph {
        graph(
            &[(2.0, 1.0), (1.0, 1.0), (1.5, 2.0), (1.0, 3.0), (2.0, 2.0), (1.0, 1.0)],
            &[(0, 1, 100.0), (1, 2, 40.0), (2, 3, 70.0), (3, 4, 20.0), (4, 5, 90.0), (5, 0, 10.0), (0, 3, 5.0)],
        )
    }

    #[test]
    fn single_core_is_degenerate() {
        let g = graph(&[(2.0, 3.0)], &[]);
        let s = synthesize(&g, &SynthesisConfig::default(), &PowerModel::default()).unwrap();
        assert_eq!(s.report.switches, 1);
        assert_eq!(s.report.power_mw, 0.0);
        assert_eq!(s.report.avg_hops, 0.0);
        assert!(s.floorplan.chip.w > 2.0);
    }

    #[test]
    fn six_core_run() {
        let g = six_cores();
        for mode in [Mode::Pdf, Mode::Pbf] {
            let cfg = SynthesisConfig { mode, ..SynthesisConfig::default() };
            let s = synthesize(&g, &cfg, &PowerModel::default()).unwrap();
            let r = &s.report;
            assert_eq!(r.switches, 3);
            assert!(r.power_mw > 0.0);
            assert!(r.avg_hops >= 1.0);
            assert!(r.whitespace_pct > 0.0 && r.whitespace_pct < 100.0);
            let mut used: Vec<usize> = s.switches.grid.iter().chain(&s.interfaces.grid).copied().collect();
            used.sort_unstable();
            used.dedup();
            assert_eq!(used.len(), 3 + 6);
            if mode == Mode::Pbf {
                assert_eq!(s.anneal.stats.positional_partitions, 0);
            }
        }
    }

    #[test]
    fn deterministic() {
        let g = six_cores();
        let cfg = SynthesisConfig { seed: 42, ..SynthesisConfig::default() };
        let a = synthesize(&g, &cfg, &PowerModel::default()).unwrap();
        let b = synthesize(&g, &cfg, &PowerModel::default()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn errors_name_their_stage() {
        let g = six_cores();
        let cfg = SynthesisConfig { switches: 0, ..SynthesisConfig::default() };
        let err = synthesize(&g, &cfg, &PowerModel::default()).unwrap_err();
        assert_eq!(err.stage, Stage::Config);
        assert!(alloc::format!("{err}").starts_with("config stage"));
    }
}
