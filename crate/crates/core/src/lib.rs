//! Reach-avoid verification for discrete-time neural feedback systems.
//!
//! A system evolves as `x'_i = x_i + (f_i(x) + u(x)_i + eps_i) * delta` where
//! `u` is a ReLU network and `eps` ranges over a perturbation box. The crate
//! computes
//!
//! - forward over-approximations of reachable sets ([`forward`]),
//! - backward over-approximations of one-step preimages ([`backward_over`]),
//! - certified backward under-approximations ([`backward_under`]),
//!
//! and combines them by splitting the horizon into forward and backward
//! segments ([`verifier`]). All sets are axis-aligned boxes.

pub mod backward_over;
pub mod backward_under;
pub mod error;
pub mod fixtures;
pub mod forward;
pub mod geometry;
pub mod io;
pub mod sampling;
pub mod system;
pub mod verifier;

pub use error::{Error, Result};
pub use geometry::{Hyperrect, Interval, UnaryFn, DEFAULT_EPS_ROUND};
pub use system::{
    Activation, DynamicsExpr, Layer, NonlinearTerm, ReluNetwork, SystemParts, SystemSpec,
};
