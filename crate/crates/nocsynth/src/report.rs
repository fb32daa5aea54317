// SPDX-License-Identifier: Apache-2.0

//! Report, route dump and SVG rendering.

use std::fmt::Write as _;

use nocsynth_core::pathalloc::FlowRoute;
use nocsynth_core::placement::Occupant;
use nocsynth_core::synth::{Synthesis, SynthesisReport};

use crate::format::mode_name;

/// Human-readable summary followed by a `key=value` block.
///
/// Floats use Rust's shortest round-trip formatting, so the text is a pure
/// function of the report.
pub fn render_report(r: &SynthesisReport) -> String {
    let mut out = String::new();
    writeln!(out, "nocsynth report").unwrap();
    writeln!(out, "cores {}  flows {}  switches {}  links {}", r.cores, r.flows, r.switches, r.links).unwrap();
    writeln!(out, "chip {:.3} x {:.3} mm  whitespace {:.2} %", r.chip_width, r.chip_height, r.whitespace_pct).unwrap();
    writeln!(out, "power {:.4} mW  average hops {:.3}", r.power_mw, r.avg_hops).unwrap();
    writeln!(out).unwrap();
    out.push_str(&render_values(r));
    out
}

pub fn render_values(r: &SynthesisReport) -> String {
    let mut out = String::new();
    let mut kv = |k: &str, v: &dyn std::fmt::Display| writeln!(out, "{k}={v}").unwrap();
    kv("seed", &r.seed);
    kv("mode", &mode_name(r.mode));
    kv("power_mw", &r.power_mw);
    kv("avg_hops", &r.avg_hops);
    kv("whitespace_pct", &r.whitespace_pct);
    kv("cores", &r.cores);
    kv("flows", &r.flows);
    kv("switches", &r.switches);
    kv("links", &r.links);
    kv("chip_width", &r.chip_width);
    kv("chip_height", &r.chip_height);
    kv("phi", &r.phi);
    kv("cut_flow", &r.cut_flow);
    kv("ni_margin", &r.ni_margin);
    out
}

/// Parses a `key=value` block back into pairs, ignoring other lines.
pub fn parse_values(text: &str) -> Vec<(String, String)> {
    text.lines()
        .filter_map(|l| l.split_once('='))
        .filter(|(k, _)| !k.contains(' '))
        .map(|(k, v)| (k.to_string(), v.to_string()))
        .collect()
}

/// One line per flow: `flow <src> <dst> : sw<i> -> sw<j> ...`.
pub fn render_routes(routes: &[FlowRoute]) -> String {
    let mut out = String::new();
    for r in routes {
        write!(out, "flow {} {} :", r.src, r.dst).unwrap();
        for (i, s) in r.switches.iter().enumerate() {
            if i > 0 {
                out.push_str(" ->");
            }
            write!(out, " sw{s}").unwrap();
        }
        out.push('\n');
    }
    out
}

const PALETTE: [&str; 8] = ["#8dd3c7", "#ffffb3", "#bebada", "#fb8072", "#80b1d3", "#fdb462", "#b3de69", "#fccde5"];

/// Floorplan picture: cores coloured by cluster, whitespace grids, switches,
/// interfaces and opened links.
pub fn render_svg(s: &Synthesis) -> String {
    let chip = s.floorplan.chip;
    let scale = 600.0 / chip.w.max(chip.h).max(1e-9);
    let pad = 10.0;
    let (w, h) = (chip.w * scale + 2.0 * pad, chip.h * scale + 2.0 * pad);
    // SVG's y axis points down
    let x = |v: f64| pad + (v - chip.x) * scale;
    let y = |v: f64| pad + (chip.y + chip.h - v) * scale;

    let mut out = String::new();
    writeln!(out, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w:.1}" height="{h:.1}" viewBox="0 0 {w:.1} {h:.1}">"#)
        .unwrap();
    writeln!(
        out,
        r#"<rect x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="white" stroke="black"/>"#,
        x(chip.x),
        y(chip.y_max()),
        chip.w * scale,
        chip.h * scale
    )
    .unwrap();
    for g in &s.grids {
        let r = g.rect;
        writeln!(
            out,
            r##"<rect x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="#f4f4f4" stroke="#cccccc" stroke-width="0.5"/>"##,
            x(r.x),
            y(r.y_max()),
            r.w * scale,
            r.h * scale
        )
        .unwrap();
    }
    for (c, r) in s.floorplan.placements.iter().enumerate() {
        let k = s.partition.cluster_of(c);
        writeln!(
            out,
            r#"<rect x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="{}" stroke="black"/>"#,
            x(r.x),
            y(r.y_max()),
            r.w * scale,
            r.h * scale,
            PALETTE[k % PALETTE.len()]
        )
        .unwrap();
        let p = r.center();
        writeln!(out, r#"<text x="{:.2}" y="{:.2}" font-size="12" text-anchor="middle">c{c}</text>"#, x(p.x), y(p.y))
            .unwrap();
    }
    let sites = s.switch_sites();
    for l in s.routes.links() {
        let (a, b) = (sites[l.from], sites[l.to]);
        writeln!(
            out,
            r#"<line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="red" stroke-width="2"/>"#,
            x(a.x),
            y(a.y),
            x(b.x),
            y(b.y)
        )
        .unwrap();
    }
    for g in &s.grids {
        match g.occupant {
            Occupant::Switch(k) => {
                writeln!(
                    out,
                    r#"<rect x="{:.2}" y="{:.2}" width="10" height="10" fill="red"><title>sw{k}</title></rect>"#,
                    x(g.center.x) - 5.0,
                    y(g.center.y) - 5.0
                )
                .unwrap();
            }
            Occupant::Ni(c) => {
                writeln!(
                    out,
                    r#"<circle cx="{:.2}" cy="{:.2}" r="4" fill="blue"><title>ni{c}</title></circle>"#,
                    x(g.center.x),
                    y(g.center.y)
                )
                .unwrap();
            }
            Occupant::Free => {}
        }
    }
    out.push_str("</svg>\n");
    out
}
