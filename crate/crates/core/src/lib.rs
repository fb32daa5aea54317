// SPDX-License-Identifier: Apache-2.0

//! Topology synthesis for application-specific networks-on-chip.
//!
//! The crate is `no_std` (with `alloc`) and contains only the algorithms:
//!
//! * [`model`]: cores, communication graphs, partitions, geometry and configuration.
//! * [`partition`]: physically reweighted min-cut clustering (Fiduccia–Mattheyses).
//! * [`floorplan`]: sequence-pair packing and the partition-driven annealer.
//! * [`placement`]: whitespace grid extraction and switch insertion.
//! * [`niflow`]: network-interface placement by min-cost max-flow.
//! * [`pathalloc`]: switch communication graph, destination tables with
//!   incremental maintenance, and energy-aware route allocation.
//! * [`power`]: bit-energy power model and report evaluation.
//! * [`synth`]: the two-phase pipeline tying the stages together.
//!
//! File formats, the command line and timing live in the `nocsynth` crate.

#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod error;
pub mod floorplan;
pub mod model;
pub mod niflow;
pub mod partition;
pub mod pathalloc;
pub mod placement;
pub mod power;
pub mod synth;

pub use error::{Error, GraphDefect, Result};
pub use model::{
    cluster_bounding_resource, validate_ccg, AnnealSchedule, Core, CoreCommGraph, Edge, Mode,
    Partition, Point, Rect, SynthesisConfig,
};
