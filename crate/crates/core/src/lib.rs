//! Shaping the hoverable force set of a payload platform carried by several
//! quadrotors on passive hinge joints.
//!
//! The crate is organized bottom-up:
//!
//! - [`geom`]: rotations, skew matrices, adjoints, numerical rank.
//! - [`platform`]: parameters and the rotor-thrust maps `M_f`, `M_τ`, `M_γ`.
//! - [`lp`]: a small dense simplex solver and the two LP rewrites used here.
//! - [`forceset`]: membership in the hoverable force set, vertex counting,
//!   support points.
//! - [`tiltopt`]: tilt-angle optimization by particle swarm and the offline
//!   tilt table.
//! - [`control`]: the cascaded controller and min-range thrust allocation.
//! - [`sim`]: rigid-body simulation of the closed loop.

pub mod control;
pub mod forceset;
pub mod geom;
pub mod lp;
pub mod platform;
pub mod sim;
pub mod tiltopt;

/// The guide under `book/` is compiled and run as doctests.
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    struct Introduction;
    #[doc = include_str!("../../../book/src/platform.md")]
    struct Platform;
    #[doc = include_str!("../../../book/src/linear-programs.md")]
    struct LinearPrograms;
    #[doc = include_str!("../../../book/src/force-set.md")]
    struct ForceSet;
    #[doc = include_str!("../../../book/src/tilt-tables.md")]
    struct TiltTables;
    #[doc = include_str!("../../../book/src/controller.md")]
    struct Controller;
    #[doc = include_str!("../../../book/src/simulation.md")]
    struct Simulation;
    #[doc = include_str!("../../../book/src/command-line.md")]
    struct CommandLine;
}
