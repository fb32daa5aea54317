// SPDX-License-Identifier: Apache-2.0

//! Switch communication graph and energy-aware route allocation.
//!
//! Switches are numbered `0..m` and edges only run from a lower to a higher
//! index, so every graph is a DAG and one edge stands for traffic in both
//! directions. A [`PathTable`] holds, for one destination, the distance
//! through every edge, the distance of every node and a successor pointer.
//! Tables are solved once and then patched as edge costs move.

use alloc::collections::VecDeque;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::model::{CoreCommGraph, Partition, Point};
use crate::power::PowerModel;

/// Distance of a node that cannot reach the destination.
pub const UNREACHABLE: f64 = f64::INFINITY;

const NO_EDGE: usize = usize::MAX;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScgEdge {
    pub from: usize,
    pub to: usize,
    /// Traffic between the two clusters, both directions, in Mbit/s.
    pub demand: f64,
    /// Energy to use the edge, pJ/bit.
    pub cost: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SwitchCommGraph {
    switches: usize,
    edges: Vec<ScgEdge>,
    index: Vec<usize>,
    pre: Vec<Vec<usize>>,
    post: Vec<Vec<usize>>,
}

impl SwitchCommGraph {
    pub fn new(switches: usize) -> Self {
        SwitchCommGraph {
            switches,
            edges: Vec::new(),
            index: vec![NO_EDGE; switches * switches],
            pre: vec![Vec::new(); switches],
            post: vec![Vec::new(); switches],
        }
    }

    /// Builds a graph from `(from, to, cost)` triples with zero demand.
    pub fn from_costs(switches: usize, edges: impl IntoIterator<Item = (usize, usize, f64)>) -> Result<Self> {
        let mut scg = SwitchCommGraph::new(switches);
        for (from, to, cost) in edges {
            scg.push_edge(from, to, 0.0, cost)?;
        }
        scg.sort_adjacency();
        Ok(scg)
    }

    /// Adds or replaces edge `from -> to` and returns its id.
    pub fn add_edge(&mut self, from: usize, to: usize, demand: f64, cost: f64) -> Result<usize> {
        let id = self.push_edge(from, to, demand, cost)?;
        self.sort_adjacency();
        Ok(id)
    }

    fn push_edge(&mut self, from: usize, to: usize, demand: f64, cost: f64) -> Result<usize> {
        if from >= to || to >= self.switches {
            return Err(Error::BadEdge { from, to });
        }
        if !(cost >= 0.0) {
            return Err(Error::NegativeCost { from, to });
        }
        let slot = from * self.switches + to;
        if self.index[slot] != NO_EDGE {
            let id = self.index[slot];
            self.edges[id].demand = demand;
            self.edges[id].cost = cost;
            return Ok(id);
        }
        let id = self.edges.len();
        self.edges.push(ScgEdge { from, to, demand, cost });
        self.index[slot] = id;
        self.pre[to].push(id);
        self.post[from].push(id);
        Ok(id)
    }

    fn sort_adjacency(&mut self) {
        let edges = &self.edges;
        for list in &mut self.pre {
            list.sort_unstable_by_key(|&e| edges[e].from);
        }
        for list in &mut self.post {
            list.sort_unstable_by_key(|&e| edges[e].to);
        }
    }

    pub fn switches(&self) -> usize {
        self.switches
    }

    pub fn edges(&self) -> &[ScgEdge] {
        &self.edges
    }

    pub fn edge(&self, id: usize) -> &ScgEdge {
        &self.edges[id]
    }

    pub fn edge_id(&self, from: usize, to: usize) -> Option<usize> {
        if from >= self.switches || to >= self.switches {
            return None;
        }
        let id = self.index[from * self.switches + to];
        (id != NO_EDGE).then_some(id)
    }

    /// Incoming edge ids of `node`, by ascending source.
    pub fn pre(&self, node: usize) -> &[usize] {
        &self.pre[node]
    }

    /// Outgoing edge ids of `node`, by ascending target.
    pub fn post(&self, node: usize) -> &[usize] {
        &self.post[node]
    }

    pub fn cost(&self, from: usize, to: usize) -> Option<f64> {
        self.edge_id(from, to).map(|e| self.edges[e].cost)
    }

    /// Sets an edge cost without touching any table.
    pub fn set_cost(&mut self, edge: usize, cost: f64) -> Result<()> {
        let e = &mut self.edges[edge];
        if !(cost >= 0.0) {
            return Err(Error::NegativeCost { from: e.from, to: e.to });
        }
        e.cost = cost;
        Ok(())
    }

    /// Edges with positive demand, heaviest first, ties by `(from, to)`.
    pub fn demands(&self) -> Vec<usize> {
        let mut ids: Vec<usize> = (0..self.edges.len()).filter(|&e| self.edges[e].demand > 0.0).collect();
        ids.sort_by(|&a, &b| {
            let (ea, eb) = (&self.edges[a], &self.edges[b]);
            eb.demand.total_cmp(&ea.demand).then((ea.from, ea.to).cmp(&(eb.from, eb.to)))
        });
        ids
    }
}

/// Builds the complete switch DAG for a partition.
///
/// Every pair `i < j` gets an edge so routes may take detours; the demand
/// of a pair is the traffic between its clusters in both directions.
pub fn build_scg(g: &CoreCommGraph, part: &Partition) -> SwitchCommGraph {
    let m = part.clusters();
    let mut demand = vec![0.0; m * m];
    for e in g.edges() {
        let (a, b) = (part.cluster_of(e.src), part.cluster_of(e.dst));
        if a != b {
            demand[a.min(b) * m + a.max(b)] += e.weight;
        }
    }
    let mut scg = SwitchCommGraph::new(m);
    for i in 0..m {
        for j in i + 1..m {
            scg.push_edge(i, j, demand[i * m + j], 0.0).expect("ascending pair");
        }
    }
    scg.sort_adjacency();
    scg
}

/// Shortest distances to one destination.
#[derive(Debug, Clone, PartialEq)]
pub struct PathTable {
    dest: usize,
    /// Distance to the destination when leaving through each edge.
    edge_dist: Vec<f64>,
    node_dist: Vec<f64>,
    next: Vec<Option<usize>>,
}

impl PathTable {
    pub fn dest(&self) -> usize {
        self.dest
    }

    pub fn edge_dist(&self, edge: usize) -> f64 {
        self.edge_dist[edge]
    }

    pub fn node_dist(&self, node: usize) -> f64 {
        self.node_dist[node]
    }

    pub fn node_dists(&self) -> &[f64] {
        &self.node_dist
    }

    /// Successor of `node` on its shortest route, if it has one.
    pub fn next(&self, node: usize) -> Option<usize> {
        self.next[node]
    }

    /// Switch sequence from `from` to the destination.
    pub fn trace(&self, from: usize) -> Option<Vec<usize>> {
        let mut route = vec![from];
        let mut at = from;
        while at != self.dest {
            let nx = self.next[at]?;
            debug_assert!(nx > at);
            route.push(nx);
            at = nx;
        }
        Some(route)
    }

    /// Recomputes `node`'s distance and successor from its out-edges.
    /// Ties go to the lowest successor.
    fn minimize(&self, scg: &SwitchCommGraph, node: usize) -> (f64, Option<usize>) {
        let mut best = UNREACHABLE;
        let mut arg = None;
        for &e in scg.post(node) {
            let edge = scg.edge(e);
            if edge.to > self.dest {
                break;
            }
            let d = edge.cost + self.node_dist[edge.to];
            if d < best {
                best = d;
                arg = Some(edge.to);
            }
        }
        (best, arg)
    }

    /// Patches the table after the cost of `edge` went down. Returns the
    /// number of edges examined.
    pub fn after_decrease(&mut self, scg: &SwitchCommGraph, edge: usize) -> usize {
        let mut queue = VecDeque::from([edge]);
        let mut work = 0;
        while let Some(e) = queue.pop_front() {
            work += 1;
            let ScgEdge { from: a, to: b, cost, .. } = *scg.edge(e);
            let d = cost + self.node_dist[b];
            self.edge_dist[e] = d;
            if d < self.node_dist[a] {
                self.node_dist[a] = d;
                self.next[a] = Some(b);
                queue.extend(scg.pre(a));
            } else if d == self.node_dist[a] && d < UNREACHABLE && self.next[a].is_some_and(|n| b < n) {
                self.next[a] = Some(b);
            }
        }
        work
    }

    /// Patches the table after the cost of `edge` went up. Returns the
    /// number of edges examined.
    pub fn after_increase(&mut self, scg: &SwitchCommGraph, edge: usize) -> usize {
        let mut queue = VecDeque::from([edge]);
        let mut work = 0;
        while let Some(e) = queue.pop_front() {
            work += 1;
            let ScgEdge { from: a, to: b, cost, .. } = *scg.edge(e);
            self.edge_dist[e] = cost + self.node_dist[b];
            if self.next[a] == Some(b) {
                let before = self.node_dist[a];
                let (d, nx) = self.minimize(scg, a);
                work += scg.post(a).len();
                self.node_dist[a] = d;
                self.next[a] = nx;
                if d != before {
                    queue.extend(scg.pre(a));
                }
            }
        }
        work
    }
}

/// Solves the table for destination `dest` by one sweep over lower indices.
pub fn init_solve(scg: &SwitchCommGraph, dest: usize) -> PathTable {
    init_solve_counted(scg, dest).0
}

/// [`init_solve`] that also reports the number of edges examined.
pub fn init_solve_counted(scg: &SwitchCommGraph, dest: usize) -> (PathTable, usize) {
    let m = scg.switches();
    assert!(dest < m, "destination {dest} out of range");
    let mut table = PathTable {
        dest,
        edge_dist: vec![UNREACHABLE; scg.edges().len()],
        node_dist: vec![UNREACHABLE; m],
        next: vec![None; m],
    };
    table.node_dist[dest] = 0.0;
    let mut work = 0;
    for i in (0..dest).rev() {
        let mut best = UNREACHABLE;
        let mut arg = None;
        for &e in scg.post(i) {
            let edge = scg.edge(e);
            if edge.to > dest {
                break;
            }
            work += 1;
            let d = edge.cost + table.node_dist[edge.to];
            table.edge_dist[e] = d;
            if d < best {
                best = d;
                arg = Some(edge.to);
            }
        }
        table.node_dist[i] = best;
        table.next[i] = arg;
    }
    (table, work)
}

/// Lowers `from -> to` by `delta` and patches `table`. Returns edges examined.
pub fn decrease_update(
    table: &mut PathTable,
    scg: &mut SwitchCommGraph,
    from: usize,
    to: usize,
    delta: f64,
) -> Result<usize> {
    let e = scg.edge_id(from, to).ok_or(Error::BadEdge { from, to })?;
    if !(delta >= 0.0) {
        return Err(Error::InvalidConfig("cost decrease must be non-negative"));
    }
    let cost = scg.edge(e).cost - delta;
    if cost < 0.0 {
        return Err(Error::NegativeCost { from, to });
    }
    scg.set_cost(e, cost)?;
    Ok(table.after_decrease(scg, e))
}

/// Raises `from -> to` by `delta` and patches `table`. Returns edges examined.
pub fn increase_update(
    table: &mut PathTable,
    scg: &mut SwitchCommGraph,
    from: usize,
    to: usize,
    delta: f64,
) -> Result<usize> {
    let e = scg.edge_id(from, to).ok_or(Error::BadEdge { from, to })?;
    if !(delta >= 0.0) {
        return Err(Error::InvalidConfig("cost increase must be non-negative"));
    }
    let cost = scg.edge(e).cost + delta;
    scg.set_cost(e, cost)?;
    Ok(table.after_increase(scg, e))
}

/// One table per destination, kept in step with the graph's costs.
#[derive(Debug, Clone, PartialEq)]
pub struct PathTables {
    tables: Vec<PathTable>,
}

impl PathTables {
    pub fn solve(scg: &SwitchCommGraph) -> Self {
        PathTables { tables: (0..scg.switches()).map(|d| init_solve(scg, d)).collect() }
    }

    pub fn table(&self, dest: usize) -> &PathTable {
        &self.tables[dest]
    }

    pub fn tables(&self) -> &[PathTable] {
        &self.tables
    }

    /// Changes the cost of `edge` and patches every table. Returns edges examined.
    pub fn set_cost(&mut self, scg: &mut SwitchCommGraph, edge: usize, cost: f64) -> Result<usize> {
        let old = scg.edge(edge).cost;
        if cost == old {
            return Ok(0);
        }
        scg.set_cost(edge, cost)?;
        let lower = cost < old;
        let mut work = 0;
        // Tables for destinations at or below the edge's tail never use it.
        let tail = scg.edge(edge).from;
        for table in &mut self.tables[tail + 1..] {
            work += if lower { table.after_decrease(scg, edge) } else { table.after_increase(scg, edge) };
        }
        Ok(work)
    }
}

/// An opened inter-switch link.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Link {
    pub from: usize,
    pub to: usize,
    /// Manhattan length between the two switches, mm.
    pub length: f64,
    /// Traffic carried, Mbit/s.
    pub load: f64,
}

/// Route of one switch-pair demand, from the lower to the higher switch.
#[derive(Debug, Clone, PartialEq)]
pub struct DemandRoute {
    pub from: usize,
    pub to: usize,
    pub demand: f64,
    pub switches: Vec<usize>,
}

/// Route of one core-to-core flow, from the source's switch to the destination's.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowRoute {
    pub src: usize,
    pub dst: usize,
    pub switches: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct RouteSet {
    switches: usize,
    routes: Vec<DemandRoute>,
    links: Vec<Link>,
    /// Cost changes applied while allocating.
    pub updates: usize,
    /// Table edges examined by those changes.
    pub work: usize,
}

impl RouteSet {
    pub fn switches(&self) -> usize {
        self.switches
    }

    pub fn demand_routes(&self) -> &[DemandRoute] {
        &self.routes
    }

    /// Opened links, ordered by `(from, to)`.
    pub fn links(&self) -> &[Link] {
        &self.links
    }

    /// Switches crossed going from cluster `a`'s switch to cluster `b`'s.
    pub fn route(&self, a: usize, b: usize) -> Option<Vec<usize>> {
        if a >= self.switches || b >= self.switches {
            return None;
        }
        if a == b {
            return Some(vec![a]);
        }
        let (lo, hi) = (a.min(b), a.max(b));
        let r = self.routes.iter().find(|r| r.from == lo && r.to == hi)?;
        let mut s = r.switches.clone();
        if a > b {
            s.reverse();
        }
        Some(s)
    }

    /// Route of every CCG edge, in edge order.
    pub fn flow_routes(&self, g: &CoreCommGraph, part: &Partition) -> Result<Vec<FlowRoute>> {
        g.edges()
            .iter()
            .map(|e| {
                let switches = self
                    .route(part.cluster_of(e.src), part.cluster_of(e.dst))
                    .ok_or(Error::UnroutedFlow { src: e.src, dst: e.dst })?;
                Ok(FlowRoute { src: e.src, dst: e.dst, switches })
            })
            .collect()
    }

    /// Demand-weighted route cost under the graph's current edge costs.
    pub fn energy(&self, scg: &SwitchCommGraph) -> f64 {
        self.routes
            .iter()
            .map(|r| {
                let cost: f64 = r.switches.windows(2).map(|p| scg.cost(p[0], p[1]).unwrap_or(UNREACHABLE)).sum();
                r.demand * cost
            })
            .sum()
    }
}

/// Rounds of rerouting after the greedy pass.
const SETTLE_ROUNDS: usize = 8;

struct CostState<'a> {
    lengths: Vec<f64>,
    degree: Vec<usize>,
    open: Vec<bool>,
    pm: &'a PowerModel,
}

impl CostState<'_> {
    /// Per-bit energy of crossing an edge. Unopened edges also pay for the
    /// extra port they add at each end.
    fn cost(&self, scg: &SwitchCommGraph, e: usize) -> f64 {
        let ScgEdge { from, to, .. } = *scg.edge(e);
        let sb = |p: usize| self.pm.switch_bit_energy_clamped(p);
        let (df, dt) = (self.degree[from], self.degree[to]);
        let link = self.pm.link_bit_energy(self.lengths[e]);
        if self.open[e] {
            link + 0.5 * (sb(df) + sb(dt))
        } else {
            let grown = 0.5 * (sb(df + 1) + sb(dt + 1));
            let marginal = (sb(df + 1) - sb(df)) + (sb(dt + 1) - sb(dt));
            link + grown + marginal
        }
    }
}

/// Routes every switch-pair demand.
///
/// `sites[k]` is switch `k`'s position and `interfaces[k]` the number of
/// interfaces attached to it. Edge costs are the per-bit energy of a hop
/// given the links opened so far; demands are routed heaviest first along
/// their destination table and each newly opened link reprices the edges
/// around its endpoints. Afterwards all demands are rerouted against the
/// settled costs, so every final route is a cheapest route under the costs
/// left in `scg`.
pub fn allocate_paths(
    scg: &mut SwitchCommGraph,
    sites: &[Point],
    interfaces: &[usize],
    pm: &PowerModel,
) -> Result<RouteSet> {
    let m = scg.switches();
    let mut set = RouteSet { switches: m, ..RouteSet::default() };
    if m < 2 {
        return Ok(set);
    }
    let mut state = CostState {
        lengths: scg.edges().iter().map(|e| sites[e.from].manhattan(sites[e.to])).collect(),
        degree: interfaces.to_vec(),
        open: vec![false; scg.edges().len()],
        pm,
    };
    for e in 0..scg.edges().len() {
        let c = state.cost(scg, e);
        scg.set_cost(e, c)?;
    }
    let mut tables = PathTables::solve(scg);
    let demands = scg.demands();

    let mut routes: Vec<Vec<usize>> = Vec::with_capacity(demands.len());
    for &d in &demands {
        let ScgEdge { from, to, .. } = *scg.edge(d);
        let route = tables.table(to).trace(from).ok_or(Error::Unreachable { from, to })?;
        let mut touched = Vec::new();
        for hop in route.windows(2) {
            let e = scg.edge_id(hop[0], hop[1]).expect("route follows edges");
            if !state.open[e] {
                state.open[e] = true;
                state.degree[hop[0]] += 1;
                state.degree[hop[1]] += 1;
                touched.extend_from_slice(hop);
            }
        }
        reprice(scg, &mut tables, &state, &touched, &mut set)?;
        routes.push(route);
    }

    for _ in 0..SETTLE_ROUNDS {
        let mut open = vec![false; scg.edges().len()];
        let mut degree = interfaces.to_vec();
        for route in &routes {
            for hop in route.windows(2) {
                let e = scg.edge_id(hop[0], hop[1]).expect("route follows edges");
                if !open[e] {
                    open[e] = true;
                    degree[hop[0]] += 1;
                    degree[hop[1]] += 1;
                }
            }
        }
        let changed: Vec<usize> = (0..m).filter(|&k| degree[k] != state.degree[k]).collect();
        let reopened: Vec<usize> = (0..open.len()).filter(|&e| open[e] != state.open[e]).collect();
        state.open = open;
        state.degree = degree;
        let mut touched = changed;
        for e in reopened {
            touched.push(scg.edge(e).from);
            touched.push(scg.edge(e).to);
        }
        reprice(scg, &mut tables, &state, &touched, &mut set)?;

        let mut rerouted = Vec::with_capacity(demands.len());
        for &d in &demands {
            let ScgEdge { from, to, .. } = *scg.edge(d);
            rerouted.push(tables.table(to).trace(from).ok_or(Error::Unreachable { from, to })?);
        }
        if rerouted == routes {
            break;
        }
        routes = rerouted;
    }
    // Costs may have moved in the last round; the reported routes must be
    // cheapest under the costs left behind.
    let mut final_routes = Vec::with_capacity(demands.len());
    for &d in &demands {
        let ScgEdge { from, to, .. } = *scg.edge(d);
        final_routes.push(tables.table(to).trace(from).ok_or(Error::Unreachable { from, to })?);
    }

    let mut load = vec![0.0; scg.edges().len()];
    let mut used = vec![false; scg.edges().len()];
    for (&d, route) in demands.iter().zip(final_routes) {
        let edge = *scg.edge(d);
        for hop in route.windows(2) {
            let e = scg.edge_id(hop[0], hop[1]).expect("route follows edges");
            used[e] = true;
            load[e] += edge.demand;
        }
        set.routes.push(DemandRoute { from: edge.from, to: edge.to, demand: edge.demand, switches: route });
    }
    let mut links: Vec<Link> = (0..used.len())
        .filter(|&e| used[e])
        .map(|e| Link { from: scg.edge(e).from, to: scg.edge(e).to, length: state.lengths[e], load: load[e] })
        .collect();
    links.sort_by_key(|l| (l.from, l.to));
    set.links = links;
    Ok(set)
}

fn reprice(
    scg: &mut SwitchCommGraph,
    tables: &mut PathTables,
    state: &CostState<'_>,
    touched: &[usize],
    set: &mut RouteSet,
) -> Result<()> {
    let mut nodes = touched.to_vec();
    nodes.sort_unstable();
    nodes.dedup();
    let mut edges = Vec::new();
    for &k in &nodes {
        edges.extend_from_slice(scg.pre(k));
        edges.extend_from_slice(scg.post(k));
    }
    edges.sort_unstable();
    edges.dedup();
    for e in edges {
        let c = state.cost(scg, e);
        if c != scg.edge(e).cost {
            set.updates += 1;
            set.work += tables.set_cost(scg, e, c)?;
        }
    }
    Ok(())
}
