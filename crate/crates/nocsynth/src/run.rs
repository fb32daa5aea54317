// SPDX-License-Identifier: Apache-2.0

//! Multi-seed runs and their output files.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use nocsynth_core::power::PowerModel;
use nocsynth_core::synth::{synthesize, StageError, Synthesis};
use nocsynth_core::{CoreCommGraph, Mode, SynthesisConfig};
use rayon::prelude::*;

use crate::report::{render_report, render_routes, render_svg};

#[derive(Debug, Clone, PartialEq)]
pub struct RunSpec {
    pub ccg: PathBuf,
    pub config: Option<PathBuf>,
    pub mode: Mode,
    pub seeds: Vec<u64>,
    pub out: Option<PathBuf>,
    /// Overrides the configured switch count.
    pub partitions: Option<usize>,
}

#[derive(Debug, Clone)]
pub struct SeedRun {
    pub seed: u64,
    pub synthesis: Synthesis,
    pub runtime_s: f64,
}

/// Runs one synthesis per seed, in parallel. Results keep seed order; the
/// first failing seed's error is returned.
pub fn run_seeds(g: &CoreCommGraph, cfg: &SynthesisConfig, seeds: &[u64]) -> Result<Vec<SeedRun>, StageError> {
    let pm = PowerModel::default();
    seeds
        .par_iter()
        .map(|&seed| {
            let cfg = SynthesisConfig { seed, ..cfg.clone() };
            let start = Instant::now();
            let synthesis = synthesize(g, &cfg, &pm)?;
            Ok(SeedRun { seed, synthesis, runtime_s: start.elapsed().as_secs_f64() })
        })
        .collect::<Vec<_>>()
        .into_iter()
        .collect()
}

/// Index of the run with the lowest power, then lowest annealing cost,
/// then lowest seed.
pub fn best_of(runs: &[SeedRun]) -> Option<usize> {
    (0..runs.len()).min_by(|&a, &b| {
        let (ra, rb) = (&runs[a].synthesis.report, &runs[b].synthesis.report);
        ra.power_mw.total_cmp(&rb.power_mw).then(ra.phi.total_cmp(&rb.phi)).then(runs[a].seed.cmp(&runs[b].seed))
    })
}

/// Writes `seed-<s>/{report.txt,routes.txt,floorplan.svg}` per run,
/// `best.txt` with the selected run's report and `timing.txt` with wall
/// times. Timing lives in its own file so reports stay reproducible.
pub fn write_outputs(dir: &Path, g: &CoreCommGraph, runs: &[SeedRun]) -> std::io::Result<()> {
    fs::create_dir_all(dir)?;
    let mut timing = String::from("seed runtime_s\n");
    for run in runs {
        let sub = dir.join(format!("seed-{}", run.seed));
        fs::create_dir_all(&sub)?;
        fs::write(sub.join("report.txt"), render_report(&run.synthesis.report))?;
        fs::write(sub.join("routes.txt"), route_dump(g, &run.synthesis))?;
        fs::write(sub.join("floorplan.svg"), render_svg(&run.synthesis))?;
        timing.push_str(&format!("{} {:.3}\n", run.seed, run.runtime_s));
    }
    if let Some(best) = best_of(runs) {
        let mut text = format!("best seed {}\n", runs[best].seed);
        text.push_str(&render_report(&runs[best].synthesis.report));
        fs::write(dir.join("best.txt"), text)?;
    }
    fs::write(dir.join("timing.txt"), timing)
}

pub fn route_dump(g: &CoreCommGraph, s: &Synthesis) -> String {
    let routes = s.routes.flow_routes(g, &s.partition).expect("every flow is routed after synthesis");
    render_routes(&routes)
}
