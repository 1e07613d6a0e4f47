//! Gap-based local navigation for a planar nonholonomic robot.
//!
//! The stack models the locally known free space around the robot as a
//! "keyhole" (a robot-centered disc joined with a convex polygon through a
//! detected gap), synthesizes a smooth Bézier path through that region,
//! certifies the region with an LP-trained piecewise-linear barrier
//! function, and tracks the path with an NMPC whose safety is backed by a
//! barrier-constrained velocity filter.  A deterministic headless simulator
//! and a benchmark harness close the loop.
//!
//! Modules are layered bottom-up:
//!
//! * [`geometry`]: shared planar primitives and the egocircle range scan.
//! * [`gaps`]: gap detection and keyhole construction/inflation.
//! * [`bezier`]: joined cubic+quadratic path synthesis, scoring, selection.
//! * [`simplex`]: dense LP solver used by barrier training.
//! * [`zbf`]: keyhole barrier synthesis (features, sampling, LP training).
//! * [`nmpc`]: reference generation and barrier-constrained tracking.
//! * [`cbf`]: pointwise barrier-based velocity filter.
//! * [`sim`]: worlds, sensing, robot models, episode execution.
//! * [`bench`]: Monte-Carlo campaigns, CSV/JSON reporting, SVG rendering.

#![forbid(unsafe_code)]

pub mod bench;
pub mod bezier;
pub mod cbf;
pub mod gaps;
pub mod geometry;
pub mod nmpc;
pub mod sim;
pub mod simplex;
pub mod zbf;
