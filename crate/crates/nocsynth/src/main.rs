// SPDX-License-Identifier: Apache-2.0

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use nocsynth::bench::{bench_updates, BenchSpec};
use nocsynth::format::{parse_ccg, parse_config};
use nocsynth::report::{render_report, render_svg};
use nocsynth::run::{best_of, run_seeds, write_outputs, RunSpec};
use nocsynth::{benchmarks, CliError};
use nocsynth_core::power::PowerModel;
use nocsynth_core::synth::synthesize;
use nocsynth_core::{CoreCommGraph, Mode, SynthesisConfig};

#[derive(Parser)]
#[command(name = "nocsynth", version, about = "Network-on-chip topology synthesis")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    /// Cluster inside the annealing loop
    Pdf,
    /// Cluster once before floorplanning
    Pbf,
}

impl From<ModeArg> for Mode {
    fn from(m: ModeArg) -> Mode {
        match m {
            ModeArg::Pdf => Mode::Pdf,
            ModeArg::Pbf => Mode::Pbf,
        }
    }
}

#[derive(clap::Args)]
struct Input {
    /// Communication graph file, or `bundled:<name>` for a shipped benchmark
    #[arg(long)]
    ccg: String,
    /// `key = value` configuration file
    #[arg(long)]
    config: Option<PathBuf>,
    /// Overrides the mode in the configuration
    #[arg(long, value_enum)]
    mode: Option<ModeArg>,
    /// Number of switches, overriding the configuration
    #[arg(long)]
    partitions: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Synthesize a topology for each seed and keep the best
    Synth {
        #[command(flatten)]
        input: Input,
        /// Comma-separated seeds
        #[arg(long, value_delimiter = ',', default_value = "1")]
        seeds: Vec<u64>,
        /// Output directory for reports, route dumps and drawings
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Time incremental route-table updates against a Dijkstra re-solve
    BenchUpdates {
        #[arg(long)]
        nodes: usize,
        #[arg(long)]
        flows: usize,
        #[arg(long)]
        updates: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value_t = 5)]
        repeats: usize,
    },
    /// Synthesize one seed and write the floorplan drawing
    DumpSvg {
        #[command(flatten)]
        input: Input,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// SVG file to write
        #[arg(long)]
        out: PathBuf,
    },
}

fn read(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|source| CliError::Read { path: path.display().to_string(), source })
}

fn load_graph(spec: &str) -> Result<CoreCommGraph, CliError> {
    if let Some(name) = spec.strip_prefix("bundled:") {
        return benchmarks::load(name).ok_or_else(|| CliError::Usage(format!("no bundled benchmark `{name}`")));
    }
    let text = read(Path::new(spec))?;
    parse_ccg(&text).map_err(|source| CliError::Parse { path: spec.to_string(), source })
}

fn load_input(input: &Input) -> Result<(CoreCommGraph, SynthesisConfig), CliError> {
    let g = load_graph(&input.ccg)?;
    let mut cfg = match &input.config {
        Some(path) => parse_config(&read(path)?, SynthesisConfig::default())
            .map_err(|source| CliError::Parse { path: path.display().to_string(), source })?,
        None => SynthesisConfig::default(),
    };
    if let Some(m) = input.mode {
        cfg.mode = m.into();
    }
    if let Some(p) = input.partitions {
        cfg.switches = p;
    }
    Ok((g, cfg))
}

fn synth(input: &Input, seeds: Vec<u64>, out: Option<PathBuf>) -> Result<(), CliError> {
    if seeds.is_empty() {
        return Err(CliError::Usage("at least one seed is required".into()));
    }
    let (g, cfg) = load_input(input)?;
    let spec = RunSpec {
        ccg: PathBuf::from(&input.ccg),
        config: input.config.clone(),
        mode: cfg.mode,
        seeds,
        out,
        partitions: input.partitions,
    };
    let runs = run_seeds(&g, &cfg, &spec.seeds)?;
    for run in &runs {
        let r = &run.synthesis.report;
        println!(
            "seed {:>6}  power {:>9.4} mW  hops {:.3}  whitespace {:>6.2} %  {:.2} s",
            run.seed, r.power_mw, r.avg_hops, r.whitespace_pct, run.runtime_s
        );
    }
    let best = best_of(&runs).expect("at least one run");
    println!("best seed {}", runs[best].seed);
    print!("{}", render_report(&runs[best].synthesis.report));
    println!("runtime_s={:.3}", runs[best].runtime_s);
    if let Some(dir) = &spec.out {
        write_outputs(dir, &g, &runs).map_err(|source| CliError::Write { path: dir.display().to_string(), source })?;
    }
    Ok(())
}

fn bench(spec: BenchSpec) -> Result<(), CliError> {
    let r = bench_updates(&spec).map_err(|e| CliError::Usage(e.to_string()))?;
    println!("nodes={}", r.nodes);
    println!("edges={}", r.edges);
    println!("flows={}", r.flows);
    println!("updates={}", r.updates);
    println!("resolve_s={:.6}", r.resolve.as_secs_f64());
    println!("incremental_s={:.6}", r.incremental.as_secs_f64());
    match r.reduction_pct() {
        Some(p) => println!("reduction_pct={p:.1}"),
        None => println!("reduction_pct=n/a"),
    }
    println!("resolve_edges={}", r.resolve_work);
    println!("incremental_edges={}", r.incremental_work);
    println!("equal={}", r.equal);
    if r.equal {
        Ok(())
    } else {
        Err(CliError::Mismatch)
    }
}

fn dump_svg(input: &Input, seed: u64, out: &Path) -> Result<(), CliError> {
    let (g, cfg) = load_input(input)?;
    let s = synthesize(&g, &SynthesisConfig { seed, ..cfg }, &PowerModel::default())?;
    std::fs::write(out, render_svg(&s)).map_err(|source| CliError::Write { path: out.display().to_string(), source })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Synth { input, seeds, out } => synth(&input, seeds, out),
        Command::BenchUpdates { nodes, flows, updates, seed, repeats } => {
            bench(BenchSpec { nodes, flows, updates, seed, repeats })
        }
        Command::DumpSvg { input, seed, out } => dump_svg(&input, seed, &out),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("nocsynth: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
