// SPDX-License-Identifier: Apache-2.0

//! Bit-energy power model.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::model::{CoreCommGraph, Partition, Point};
use crate::pathalloc::RouteSet;

/// Switch and link bit energies in pJ/bit, for a 0.18 µm process.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerModel {
    /// Energy of a switch with `2 + i` ports.
    pub switch_table: [f64; 7],
    /// Per-port increment used above the largest tabulated switch.
    pub switch_slope: f64,
    /// Link energy per mm.
    pub link_slope: f64,
}

impl Default for PowerModel {
    fn default() -> Self {
        PowerModel {
            switch_table: [0.22, 0.33, 0.44, 0.55, 0.66, 0.78, 0.90],
            switch_slope: 0.12,
            link_slope: 0.6,
        }
    }
}

impl PowerModel {
    pub const MIN_PORTS: usize = 2;

    pub fn switch_bit_energy(&self, ports: usize) -> Result<f64> {
        if ports < Self::MIN_PORTS {
            return Err(Error::BadPorts { ports });
        }
        let i = ports - Self::MIN_PORTS;
        let last = self.switch_table.len() - 1;
        if i <= last {
            Ok(self.switch_table[i])
        } else {
            Ok(self.switch_table[last] + self.switch_slope * (i - last) as f64)
        }
    }

    /// Like [`switch_bit_energy`](Self::switch_bit_energy) but treats fewer
    /// than two ports as two.
    pub fn switch_bit_energy_clamped(&self, ports: usize) -> f64 {
        self.switch_bit_energy(ports.max(Self::MIN_PORTS)).unwrap_or(0.0)
    }

    pub fn link_bit_energy(&self, length: f64) -> f64 {
        // Scaling through tenths keeps whole-mm lengths exact (0.6 * 12 is not 7.2).
        length * (self.link_slope * 10.0) / 10.0
    }
}

/// Power, hop and whitespace figures for one routed topology.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PowerReport {
    pub power_mw: f64,
    pub avg_hops: f64,
    pub whitespace_pct: f64,
    /// Energy per bit of each CCG flow, in edge order.
    pub flow_energy: Vec<f64>,
    /// Final port count of each switch.
    pub ports: Vec<usize>,
}

/// Evaluates a routed topology.
///
/// `ni_sites[c]` is core `c`'s interface position and `switch_sites[k]` the
/// position of cluster `k`'s switch. Each flow pays both interface links,
/// every inter-switch link on its route and every switch it traverses.
pub fn evaluate(
    routes: &RouteSet,
    g: &CoreCommGraph,
    part: &Partition,
    ni_sites: &[Point],
    switch_sites: &[Point],
    whitespace_pct: f64,
    pm: &PowerModel,
) -> Result<PowerReport> {
    let ports = switch_ports(routes, part);
    let mut switch_energy = Vec::with_capacity(ports.len());
    for &p in &ports {
        // A switch no flow crosses may have a single port; it is never charged.
        switch_energy.push(pm.switch_bit_energy(p).ok());
    }

    let mut report = PowerReport { whitespace_pct, ports, ..PowerReport::default() };
    let mut total_mw = 0.0;
    let mut hops = 0usize;
    for e in g.edges() {
        let route = routes.route(part.cluster_of(e.src), part.cluster_of(e.dst));
        let route = route.ok_or(Error::UnroutedFlow { src: e.src, dst: e.dst })?;
        let mut energy = pm.link_bit_energy(ni_sites[e.src].manhattan(switch_sites[route[0]]));
        for pair in route.windows(2) {
            energy += pm.link_bit_energy(switch_sites[pair[0]].manhattan(switch_sites[pair[1]]));
        }
        for &s in &route {
            energy += switch_energy[s].ok_or(Error::BadPorts { ports: report.ports[s] })?;
        }
        energy += pm.link_bit_energy(ni_sites[e.dst].manhattan(switch_sites[route[route.len() - 1]]));
        hops += route.len();
        total_mw += e.weight * energy * 1e-3;
        report.flow_energy.push(energy);
    }
    report.power_mw = total_mw;
    if !g.edges().is_empty() {
        report.avg_hops = hops as f64 / g.edges().len() as f64;
    }
    Ok(report)
}

/// Interfaces attached to each switch plus its opened inter-switch links.
pub fn switch_ports(routes: &RouteSet, part: &Partition) -> Vec<usize> {
    let mut ports = part.sizes();
    if ports.len() < routes.switches() {
        ports.resize(routes.switches(), 0);
    }
    let mut extra = vec![0usize; ports.len()];
    for link in routes.links() {
        extra[link.from] += 1;
        extra[link.to] += 1;
    }
    for (p, e) in ports.iter_mut().zip(extra) {
        *p += e;
    }
    ports
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Core, Edge};
    use crate::pathalloc::{allocate_paths, build_scg};
    use proptest::prelude::*;

    #[test]
    fn switch_table() {
        let pm = PowerModel::default();
        let expect: [(usize, f64); 7] = [(2, 0.22), (3, 0.33), (4, 0.44), (5, 0.55), (6, 0.66), (7, 0.78), (8, 0.90)];
        for (ports, e) in expect {
            assert_eq!(pm.switch_bit_energy(ports).unwrap().to_bits(), e.to_bits());
        }
        assert!((pm.switch_bit_energy(9).unwrap() - 1.02).abs() < 1e-12);
        assert_eq!(pm.switch_bit_energy(1), Err(Error::BadPorts { ports: 1 }));
        assert_eq!(pm.switch_bit_energy(0), Err(Error::BadPorts { ports: 0 }));
    }

    #[test]
    fn link_table() {
        let pm = PowerModel::default();
        for (len, e) in [(1.0, 0.6f64), (4.0, 2.4), (8.0, 4.8), (12.0, 7.2), (16.0, 9.6), (0.0, 0.0)] {
            assert_eq!(pm.link_bit_energy(len).to_bits(), e.to_bits(), "{len} mm");
        }
    }

    fn graph(n: usize, edges: &[(usize, usize, f64)]) -> CoreCommGraph {
        let cores = (0..n).map(|id| Core { id, width: 1.0, height: 1.0 }).collect();
        let edges = edges.iter().map(|&(src, dst, weight)| Edge { src, dst, weight }).collect();
        CoreCommGraph::new(cores, edges).unwrap()
    }

    fn routed(g: &CoreCommGraph, part: &Partition, sites: &[Point]) -> RouteSet {
        let mut scg = build_scg(g, part);
        allocate_paths(&mut scg, sites, &part.sizes(), &PowerModel::default()).unwrap()
    }

    #[test]
    fn one_flow_through_three_port_switch() {
        let g = graph(3, &[(0, 1, 100.0)]);
        let part = Partition::new(1, vec![0, 0, 0]).unwrap();
        let sw = [Point::new(0.0, 0.0)];
        let nis = [Point::new(1.0, 0.0), Point::new(0.0, 1.0), Point::new(5.0, 5.0)];
        let routes = routed(&g, &part, &sw);
        let r = evaluate(&routes, &g, &part, &nis, &sw, 25.0, &PowerModel::default()).unwrap();
        assert!((r.power_mw - 0.153).abs() < 1e-12, "{}", r.power_mw);
        assert_eq!(r.avg_hops, 1.0);
        assert_eq!(r.ports, vec![3]);
        assert_eq!(r.whitespace_pct, 25.0);
    }

    #[test]
    fn no_flows() {
        let g = graph(2, &[]);
        let part = Partition::new(2, vec![0, 1]).unwrap();
        let sw = [Point::new(0.0, 0.0), Point::new(3.0, 0.0)];
        let routes = routed(&g, &part, &sw);
        let r = evaluate(&routes, &g, &part, &sw, &sw, 0.0, &PowerModel::default()).unwrap();
        assert_eq!(r.power_mw, 0.0);
        assert_eq!(r.avg_hops, 0.0);
    }

    #[test]
    fn two_switches() {
        let g = graph(4, &[(0, 2, 10.0), (1, 0, 20.0)]);
        let part = Partition::new(2, vec![0, 0, 1, 1]).unwrap();
        let sw = [Point::new(0.0, 0.0), Point::new(4.0, 0.0)];
        let nis = [Point::new(0.0, 1.0), Point::new(1.0, 0.0), Point::new(4.0, 2.0), Point::new(5.0, 0.0)];
        let routes = routed(&g, &part, &sw);
        let r = evaluate(&routes, &g, &part, &nis, &sw, 0.0, &PowerModel::default()).unwrap();
        // each switch: two interfaces plus the link
        assert_eq!(r.ports, vec![3, 3]);
        let cross = 0.6 + 0.33 + 2.4 + 0.33 + 1.2;
        let local = 0.6 + 0.33 + 0.6;
        assert!((r.flow_energy[0] - cross).abs() < 1e-12);
        assert!((r.flow_energy[1] - local).abs() < 1e-12);
        assert!((r.power_mw - (10.0 * cross + 20.0 * local) * 1e-3).abs() < 1e-12);
        assert_eq!(r.avg_hops, 1.5);
    }

    #[test]
    fn missing_route() {
        let g = graph(2, &[(0, 1, 1.0)]);
        let part = Partition::new(2, vec![0, 1]).unwrap();
        let sw = [Point::new(0.0, 0.0); 2];
        let routes = RouteSet::default();
        let r = evaluate(&routes, &g, &part, &sw, &sw, 0.0, &PowerModel::default());
        assert_eq!(r, Err(Error::UnroutedFlow { src: 0, dst: 1 }));
    }

    proptest! {
        #[test]
        fn power_scales_with_demand(
            weights in proptest::collection::vec(1u32..1000, 6),
            exp in 1i32..6,
        ) {
            let edges: Vec<(usize, usize, f64)> = [(0, 1), (1, 2), (2, 3), (3, 4), (4, 5), (5, 0)]
                .iter()
                .zip(&weights)
                .map(|(&(a, b), &w)| (a, b, w as f64))
                .collect();
            let g = graph(6, &edges);
            let part = Partition::new(3, vec![0, 0, 1, 1, 2, 2]).unwrap();
            let sw = [Point::new(0.0, 0.0), Point::new(3.0, 1.0), Point::new(1.0, 4.0)];
            let nis: Vec<Point> = (0..6).map(|c| Point::new(c as f64 * 0.5, 0.0)).collect();
            let pm = PowerModel::default();
            let routes = routed(&g, &part, &sw);
            let base = evaluate(&routes, &g, &part, &nis, &sw, 0.0, &pm).unwrap();
            let c = f64::powi(2.0, exp);
            let scaled = evaluate(&routes, &g.scaled(c), &part, &nis, &sw, 0.0, &pm).unwrap();
            prop_assert_eq!(scaled.power_mw, c * base.power_mw);
            prop_assert!(base.avg_hops >= 1.0);
            let again = evaluate(&routes, &g, &part, &nis, &sw, 0.0, &pm).unwrap();
            prop_assert_eq!(again, base);
        }
    }
}
