//! Interval arithmetic and axis-aligned boxes.
//!
//! Every set the analyses manipulate (initial, goal, avoid, perturbation and
//! reachable sets) is a [`Hyperrect`]. Intervals are closed, so two boxes that
//! touch along a face are *not* disjoint.

mod hyperrect;
mod interval;

pub use hyperrect::Hyperrect;
pub use interval::{Interval, UnaryFn};

/// Outward slack applied to enclosures computed in round-to-nearest.
pub const DEFAULT_EPS_ROUND: f64 = 1e-9;
