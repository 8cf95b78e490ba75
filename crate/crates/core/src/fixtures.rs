//! Reference systems used throughout the tests and shipped as JSON under
//! `fixtures/` at the repository root.

use crate::geometry::Hyperrect;
use crate::system::{Activation, DynamicsExpr, Layer, ReluNetwork, SystemParts, SystemSpec};

fn interval_box(lo: &[f64], hi: &[f64]) -> Hyperrect {
    Hyperrect::from_bounds(lo, hi).expect("fixture bounds are ordered")
}

/// `x' = x + eps`, `eps in [-e, e]`, on domain `[-2, 2]`.
pub fn identity_1d(e: f64) -> SystemSpec {
    SystemSpec::new(SystemParts {
        n: 1,
        init: interval_box(&[-0.5], &[0.5]),
        dynamics: vec![DynamicsExpr::zero(1)],
        perturbation: interval_box(&[-e], &[e]),
        controller: ReluNetwork::zero(1),
        delta: 1.0,
        steps: 2,
        goal: interval_box(&[-1.0], &[1.0]),
        avoid: vec![],
        domain: interval_box(&[-2.0], &[2.0]),
    })
    .expect("valid fixture")
}

/// `x' = x + (-0.5 x + eps)`, `eps in [-0.01, 0.01]`, `I = [-1, 1]`,
/// `G = [-0.3, 0.3]`, two steps.
pub fn contraction_1d() -> SystemSpec {
    SystemSpec::new(SystemParts {
        n: 1,
        init: interval_box(&[-1.0], &[1.0]),
        dynamics: vec![DynamicsExpr::linear(vec![-0.5])],
        perturbation: interval_box(&[-0.01], &[0.01]),
        controller: ReluNetwork::zero(1),
        delta: 1.0,
        steps: 2,
        goal: interval_box(&[-0.3], &[0.3]),
        avoid: vec![],
        domain: interval_box(&[-2.0], &[2.0]),
    })
    .expect("valid fixture")
}

pub fn contraction_with_avoid(avoid: Hyperrect) -> SystemSpec {
    let mut parts = contraction_1d().into_parts();
    parts.avoid = vec![avoid];
    SystemSpec::new(parts).expect("valid fixture")
}

/// Two-layer ReLU controller for the double integrator: four hidden units
/// splitting each state into positive and negative parts, and a linear
/// readout acting on the velocity row only.
pub fn double_integrator_controller() -> ReluNetwork {
    ReluNetwork::new(vec![
        Layer {
            weights: vec![
                vec![1.0, 0.0],
                vec![-1.0, 0.0],
                vec![0.0, 1.0],
                vec![0.0, -1.0],
            ],
            bias: vec![0.0, 0.0, 0.0, 0.0],
            activation: Activation::Relu,
        },
        Layer {
            weights: vec![vec![0.0, 0.0, 0.0, 0.0], vec![-1.0, 1.0, -2.0, 2.0]],
            bias: vec![0.0, 0.0],
            activation: Activation::Linear,
        },
    ])
    .expect("valid controller")
}

/// Position/velocity double integrator with `delta = 0.1` over five steps.
pub fn double_integrator() -> SystemSpec {
    SystemSpec::new(SystemParts {
        n: 2,
        init: interval_box(&[0.9, -0.1], &[1.1, 0.1]),
        dynamics: vec![DynamicsExpr::linear(vec![0.0, 1.0]), DynamicsExpr::zero(2)],
        perturbation: interval_box(&[-0.01, -0.01], &[0.01, 0.01]),
        controller: double_integrator_controller(),
        delta: 0.1,
        steps: 5,
        goal: interval_box(&[0.5, -1.0], &[1.5, 0.5]),
        avoid: vec![
            interval_box(&[2.0, -3.0], &[2.5, 3.0]),
            interval_box(&[-3.0, -3.0], &[-2.0, 3.0]),
        ],
        domain: interval_box(&[-3.0, -3.0], &[3.0, 3.0]),
    })
    .expect("valid fixture")
}
