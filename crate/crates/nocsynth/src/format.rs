// SPDX-License-Identifier: Apache-2.0

//! Text formats for communication graphs and configuration files.
//!
//! A graph file lists cores then edges, one record per line:
//!
//! ```text
//! # comment
//! cores 2
//! core 0 1.5 2.0
//! core 1 1.0 1.0
//! edges 1
//! edge 0 1 70
//! ```
//!
//! A config file holds `key = value` lines named after the fields of
//! [`SynthesisConfig`].

use std::fmt::Write as _;
use std::str::FromStr;

use nocsynth_core::{validate_ccg, Core, CoreCommGraph, Edge, Mode, SynthesisConfig};

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum FormatError {
    #[error("line {line}: {msg}")]
    Syntax { line: usize, msg: String },
    #[error("{0}")]
    Graph(nocsynth_core::Error),
}

fn syntax(line: usize, msg: impl Into<String>) -> FormatError {
    FormatError::Syntax { line, msg: msg.into() }
}

/// Non-empty lines with comments removed, paired with 1-based line numbers.
fn records(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines().enumerate().filter_map(|(i, l)| {
        let l = l.split('#').next().unwrap_or("").trim();
        (!l.is_empty()).then_some((i + 1, l))
    })
}

fn field<T: FromStr>(line: usize, what: &str, tok: Option<&str>) -> Result<T, FormatError> {
    let tok = tok.ok_or_else(|| syntax(line, format!("missing {what}")))?;
    tok.parse().map_err(|_| syntax(line, format!("bad {what} `{tok}`")))
}

fn expect_end(line: usize, mut toks: std::str::SplitWhitespace<'_>) -> Result<(), FormatError> {
    match toks.next() {
        Some(t) => Err(syntax(line, format!("unexpected `{t}`"))),
        None => Ok(()),
    }
}

/// Reads a `<key> <count>` line.
fn header<'a>(lines: &mut impl Iterator<Item = (usize, &'a str)>, key: &str, last: &mut usize) -> Result<usize, FormatError> {
    let (no, l) = lines.next().ok_or_else(|| syntax(*last + 1, format!("expected `{key} <count>`")))?;
    *last = no;
    let mut toks = l.split_whitespace();
    if toks.next() != Some(key) {
        return Err(syntax(no, format!("expected `{key} <count>`")));
    }
    let count: usize = field(no, "count", toks.next())?;
    expect_end(no, toks)?;
    Ok(count)
}

pub fn parse_ccg(text: &str) -> Result<CoreCommGraph, FormatError> {
    let mut lines = records(text);
    let mut last = 0;
    let n = header(&mut lines, "cores", &mut last)?;
    let mut cores = Vec::with_capacity(n);
    for _ in 0..n {
        let (no, l) = lines.next().ok_or_else(|| syntax(last + 1, "missing core record"))?;
        last = no;
        let mut toks = l.split_whitespace();
        if toks.next() != Some("core") {
            return Err(syntax(no, "expected `core <id> <width> <height>`"));
        }
        let id = field(no, "core id", toks.next())?;
        let width = field(no, "width", toks.next())?;
        let height = field(no, "height", toks.next())?;
        expect_end(no, toks)?;
        cores.push(Core { id, width, height });
    }

    let e = header(&mut lines, "edges", &mut last)?;
    let mut edges = Vec::with_capacity(e);
    for _ in 0..e {
        let (no, l) = lines.next().ok_or_else(|| syntax(last + 1, "missing edge record"))?;
        last = no;
        let mut toks = l.split_whitespace();
        if toks.next() != Some("edge") {
            return Err(syntax(no, "expected `edge <src> <dst> <mbps>`"));
        }
        let src = field(no, "source", toks.next())?;
        let dst = field(no, "destination", toks.next())?;
        let weight = field(no, "demand", toks.next())?;
        expect_end(no, toks)?;
        edges.push(Edge { src, dst, weight });
    }
    if let Some((no, _)) = lines.next() {
        return Err(syntax(no, "trailing records"));
    }
    validate_ccg(cores, edges).map_err(FormatError::Graph)
}

pub fn write_ccg(g: &CoreCommGraph) -> String {
    let mut out = String::new();
    writeln!(out, "cores {}", g.core_count()).unwrap();
    for c in g.cores() {
        writeln!(out, "core {} {} {}", c.id, c.width, c.height).unwrap();
    }
    writeln!(out, "edges {}", g.edges().len()).unwrap();
    for e in g.edges() {
        writeln!(out, "edge {} {} {}", e.src, e.dst, e.weight).unwrap();
    }
    out
}

pub fn parse_mode(s: &str) -> Option<Mode> {
    match s.to_ascii_lowercase().as_str() {
        "pdf" => Some(Mode::Pdf),
        "pbf" => Some(Mode::Pbf),
        _ => None,
    }
}

pub fn mode_name(mode: Mode) -> &'static str {
    match mode {
        Mode::Pdf => "pdf",
        Mode::Pbf => "pbf",
    }
}

/// Applies `key = value` lines on top of `base`.
///
/// Optional fields accept `auto` to restore the derived default. Short
/// aliases `m`, `l`, `lambda_A`, `lambda_F` and `lambda_R` are accepted.
pub fn parse_config(text: &str, base: SynthesisConfig) -> Result<SynthesisConfig, FormatError> {
    let mut cfg = base;
    for (no, l) in records(text) {
        let (key, value) = l.split_once('=').ok_or_else(|| syntax(no, "expected `key = value`"))?;
        let (key, value) = (key.trim(), value.trim());
        let opt = |v: &str| -> Result<Option<f64>, FormatError> {
            if v == "auto" {
                Ok(None)
            } else {
                field(no, key, Some(v)).map(Some)
            }
        };
        match key {
            "switches" | "m" => cfg.switches = field(no, key, Some(value))?,
            "alpha_w" => cfg.alpha_w = field(no, key, Some(value))?,
            "alpha_d" => cfg.alpha_d = field(no, key, Some(value))?,
            "lambda_area" | "lambda_A" => cfg.lambda_area = opt(value)?,
            "lambda_flow" | "lambda_F" => cfg.lambda_flow = opt(value)?,
            "lambda_resource" | "lambda_R" => cfg.lambda_resource = opt(value)?,
            "ni_margin" | "l" => cfg.ni_margin = opt(value)?,
            "ni_margin_doublings" => cfg.ni_margin_doublings = field(no, key, Some(value))?,
            "balance_slack" => cfg.balance_slack = field(no, key, Some(value))?,
            "partition_starts" => cfg.partition_starts = field(no, key, Some(value))?,
            "seed" => cfg.seed = field(no, key, Some(value))?,
            "initial_temperature" => cfg.schedule.initial_temperature = opt(value)?,
            "cooling_ratio" => cfg.schedule.cooling_ratio = field(no, key, Some(value))?,
            "moves_per_temperature" => {
                cfg.schedule.moves_per_temperature =
                    if value == "auto" { None } else { Some(field(no, key, Some(value))?) }
            }
            "stop_temperature" => cfg.schedule.stop_temperature = opt(value)?,
            "probe_moves" => cfg.schedule.probe_moves = field(no, key, Some(value))?,
            "mode" => cfg.mode = parse_mode(value).ok_or_else(|| syntax(no, format!("unknown mode `{value}`")))?,
            _ => return Err(syntax(no, format!("unknown key `{key}`"))),
        }
    }
    cfg.validate().map_err(FormatError::Graph)?;
    Ok(cfg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use nocsynth_core::GraphDefect;

    const SMALL: &str = "\
# two cores
cores 2
core 0 1.5 2   # first
core 1 1 1
edges 1
edge 0 1 70
";

    #[test]
    fn parses_small_graph() {
        let g = parse_ccg(SMALL).unwrap();
        assert_eq!(g.core_count(), 2);
        assert_eq!(g.cores()[0].width, 1.5);
        assert_eq!(g.weight(0, 1), 70.0);
    }

    #[test]
    fn round_trip() {
        let g = parse_ccg(SMALL).unwrap();
        assert_eq!(parse_ccg(&write_ccg(&g)).unwrap(), g);
    }

    #[test]
    fn reports_line_numbers() {
        let bad = SMALL.replace("edge 0 1 70", "edge 0 x 70");
        assert_eq!(parse_ccg(&bad), Err(syntax(6, "bad destination `x`")));
        let short = "cores 2\ncore 0 1 1\n";
        assert!(matches!(parse_ccg(short), Err(FormatError::Syntax { line: 3, .. })));
    }

    #[test]
    fn graph_invariants_checked() {
        let bad = SMALL.replace("edge 0 1 70", "edge 1 1 70");
        assert_eq!(
            parse_ccg(&bad),
            Err(FormatError::Graph(nocsynth_core::Error::MalformedGraph(GraphDefect::SelfLoop { core: 1 })))
        );
    }

    #[test]
    fn config_keys_and_aliases() {
        let cfg = parse_config(
            "m = 4\nlambda_A = 2.5\nlambda_R = auto\nl = 0.5\nmode = pbf\nseed = 9\nmoves_per_temperature = 50\n",
            SynthesisConfig::default(),
        )
        .unwrap();
        assert_eq!(cfg.switches, 4);
        assert_eq!(cfg.lambda_area, Some(2.5));
        assert_eq!(cfg.lambda_resource, None);
        assert_eq!(cfg.ni_margin, Some(0.5));
        assert_eq!(cfg.mode, Mode::Pbf);
        assert_eq!(cfg.seed, 9);
        assert_eq!(cfg.schedule.moves_per_temperature, Some(50));
    }

    #[test]
    fn config_errors() {
        assert!(matches!(parse_config("bogus = 1", SynthesisConfig::default()), Err(FormatError::Syntax { line: 1, .. })));
        assert!(matches!(parse_config("switches = 1", SynthesisConfig::default()), Err(FormatError::Graph(_))));
        assert!(matches!(parse_config("\n\nswitches 3", SynthesisConfig::default()), Err(FormatError::Syntax { line: 3, .. })));
    }
}
