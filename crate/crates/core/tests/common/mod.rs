#![allow(dead_code)]

use std::path::PathBuf;

use fabre_core::sampling::{stream, uniform_in};
use fabre_core::{
    Activation, DynamicsExpr, Hyperrect, Layer, NonlinearTerm, ReluNetwork, SystemParts,
    SystemSpec, UnaryFn,
};
use rand::Rng;

pub fn fixtures_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

pub fn bx(lo: &[f64], hi: &[f64]) -> Hyperrect {
    Hyperrect::from_bounds(lo, hi).unwrap()
}

pub fn random_network<R: Rng>(rng: &mut R, n: usize, hidden: usize, scale: f64) -> ReluNetwork {
    let mut mat = |rows: usize, cols: usize| -> Vec<Vec<f64>> {
        (0..rows)
            .map(|_| (0..cols).map(|_| rng.gen_range(-scale..scale)).collect())
            .collect()
    };
    let w1 = mat(hidden, n);
    let w2 = mat(n, hidden);
    let b1 = (0..hidden).map(|_| rng.gen_range(-scale..scale)).collect();
    ReluNetwork::new(vec![
        Layer {
            weights: w1,
            bias: b1,
            activation: Activation::Relu,
        },
        Layer {
            weights: w2,
            bias: vec![0.0; n],
            activation: Activation::Linear,
        },
    ])
    .unwrap()
}

/// Small random system on `[-2, 2]^n` with a sin term, a ReLU controller and
/// a goal box placed somewhere inside the domain.
pub fn random_system(seed: u64, n: usize) -> SystemSpec {
    let mut rng = stream(seed, 7);
    let dynamics = (0..n)
        .map(|i| DynamicsExpr {
            affine: (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect(),
            offset: rng.gen_range(-0.2..0.2),
            nonlinear: vec![NonlinearTerm {
                coef: rng.gen_range(-0.5..0.5),
                func: if i % 2 == 0 {
                    UnaryFn::Sin
                } else {
                    UnaryFn::Square
                },
                arg: rng.gen_range(0..n),
            }],
        })
        .collect();
    let domain = Hyperrect::cube(n, 2.0);
    let center = uniform_in(&mut rng, &Hyperrect::cube(n, 0.8));
    let half: Vec<f64> = (0..n).map(|_| rng.gen_range(0.3..0.9)).collect();
    let lo: Vec<f64> = center.iter().zip(&half).map(|(c, h)| c - h).collect();
    let hi: Vec<f64> = center.iter().zip(&half).map(|(c, h)| c + h).collect();
    let e = rng.gen_range(0.0..0.05);
    SystemSpec::new(SystemParts {
        n,
        init: Hyperrect::cube(n, 0.1),
        dynamics,
        perturbation: Hyperrect::cube(n, e),
        controller: random_network(&mut rng, n, 3, 0.5),
        delta: 0.1,
        steps: 2,
        goal: bx(&lo, &hi),
        avoid: vec![],
        domain,
    })
    .unwrap()
}
