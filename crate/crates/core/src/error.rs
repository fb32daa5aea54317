// SPDX-License-Identifier: Apache-2.0

use core::fmt;

/// Which [`CoreCommGraph`](crate::model::CoreCommGraph) invariant was violated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GraphDefect {
    /// Core ids are not dense `0..n` in order.
    CoreId { index: usize, id: usize },
    /// A core has a non-positive (or non-finite) width or height.
    CoreSize { id: usize },
    /// An edge references a core that does not exist.
    UnknownCore { src: usize, dst: usize },
    SelfLoop { core: usize },
    Duplicate { src: usize, dst: usize },
    /// Edge demand is not strictly positive and finite.
    Weight { src: usize, dst: usize },
}

impl fmt::Display for GraphDefect {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            GraphDefect::CoreId { index, id } => {
                write!(f, "core at position {index} has id {id}, ids must be dense and ordered")
            }
            GraphDefect::CoreSize { id } => write!(f, "core {id} has a non-positive dimension"),
            GraphDefect::UnknownCore { src, dst } => {
                write!(f, "edge {src}->{dst} references an unknown core")
            }
            GraphDefect::SelfLoop { core } => write!(f, "self-loop on core {core}"),
            GraphDefect::Duplicate { src, dst } => write!(f, "duplicate edge {src}->{dst}"),
            GraphDefect::Weight { src, dst } => {
                write!(f, "edge {src}->{dst} has a non-positive demand")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    MalformedGraph(GraphDefect),
    EmptyCluster { cluster: usize },
    /// Assignment is not a valid partition (bad cluster index or length).
    InvalidPartition,
    ZeroDistance { a: usize, b: usize },
    InfeasibleBalance { cores: usize, clusters: usize },
    NoWhitespace,
    NiInfeasible { placed: usize, required: usize },
    NegativeCost { from: usize, to: usize },
    /// Switch graph edge that is not `from < to < switches`.
    BadEdge { from: usize, to: usize },
    Unreachable { from: usize, to: usize },
    BadPorts { ports: usize },
    UnroutedFlow { src: usize, dst: usize },
    InvalidConfig(&'static str),
    /// A stage produced output violating its own contract.
    Invariant(&'static str),
}

impl Error {
    /// Errors that mean "the instance has no solution" rather than "the input is wrong".
    pub fn is_infeasible(&self) -> bool {
        matches!(
            self,
            Error::NiInfeasible { .. }
                | Error::InfeasibleBalance { .. }
                | Error::NoWhitespace
                | Error::Unreachable { .. }
        )
    }
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::MalformedGraph(d) => write!(f, "malformed graph: {d}"),
            Error::EmptyCluster { cluster } => write!(f, "cluster {cluster} has no cores"),
            Error::InvalidPartition => f.write_str("invalid partition assignment"),
            Error::ZeroDistance { a, b } => write!(f, "cores {a} and {b} have coincident centers"),
            Error::InfeasibleBalance { cores, clusters } => {
                write!(f, "cannot split {cores} cores into {clusters} balanced clusters")
            }
            Error::NoWhitespace => f.write_str("floorplan has no whitespace"),
            Error::NiInfeasible { placed, required } => {
                write!(f, "only {placed} of {required} network interfaces could be placed")
            }
            Error::NegativeCost { from, to } => {
                write!(f, "cost of edge {from}->{to} would become negative")
            }
            Error::BadEdge { from, to } => write!(f, "switch edge {from}->{to} is not ascending or out of range"),
            Error::Unreachable { from, to } => write!(f, "switch {to} unreachable from {from}"),
            Error::BadPorts { ports } => write!(f, "switch with {ports} ports (need at least 2)"),
            Error::UnroutedFlow { src, dst } => write!(f, "flow {src}->{dst} has no route"),
            Error::InvalidConfig(what) => write!(f, "invalid configuration: {what}"),
            Error::Invariant(what) => write!(f, "internal check failed: {what}"),
        }
    }
}

impl core::error::Error for Error {}

pub type Result<T> = core::result::Result<T, Error>;
