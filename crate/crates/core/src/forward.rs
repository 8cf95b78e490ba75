//! Forward over-approximation by interval bound propagation, plus the exact
//! point simulator used for labeling, falsification and testing.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::geometry::{Hyperrect, Interval, DEFAULT_EPS_ROUND};
use crate::sampling::{random_corner, stream, uniform_in};
use crate::system::{Activation, ReluNetwork, SystemSpec};

/// Layerwise interval enclosure of `{net(x) | x in input}`.
pub fn ibp_network(net: &ReluNetwork, input: &Hyperrect) -> Result<Hyperrect> {
    check_dim(net.input_dim(), input.dim())?;
    let mut h: Vec<Interval> = input.require_intervals()?.to_vec();
    for layer in net.layers() {
        h = layer
            .weights
            .iter()
            .zip(&layer.bias)
            .map(|(row, &b)| {
                let z = row
                    .iter()
                    .zip(&h)
                    .fold(Interval::point(b), |acc, (&w, x)| acc + x.scale(w));
                match layer.activation {
                    Activation::Relu => z.relu(),
                    Activation::Linear => z,
                }
            })
            .collect();
    }
    Ok(Hyperrect::new(h))
}

/// [`next_box_with`] using [`DEFAULT_EPS_ROUND`].
pub fn next_box(sys: &SystemSpec, b: &Hyperrect) -> Result<Hyperrect> {
    next_box_with(sys, b, DEFAULT_EPS_ROUND)
}

/// Encloses `{next_point(x, eps) | x in b, eps in E}`.
///
/// The affine part of `x_i + delta * f_i(x)` is folded into a single
/// coefficient vector before evaluation so that `x_i` is not counted twice.
/// Each component is widened by `eps_round`. An empty `b` maps to empty.
pub fn next_box_with(sys: &SystemSpec, b: &Hyperrect, eps_round: f64) -> Result<Hyperrect> {
    check_dim(sys.n(), b.dim())?;
    let Some(xs) = b.intervals() else {
        return Ok(b.clone());
    };
    let delta = sys.delta();
    let control = ibp_network(sys.controller(), b)?;
    let control = control
        .intervals()
        .expect("non-empty input gives non-empty image");
    let eps = sys
        .perturbation()
        .intervals()
        .expect("validated perturbation");

    let out = sys
        .dynamics()
        .iter()
        .enumerate()
        .map(|(i, f)| {
            let mut acc = Interval::point(delta * f.offset);
            for (j, (&a, x)) in f.affine.iter().zip(xs).enumerate() {
                let coef = if i == j { 1.0 + delta * a } else { delta * a };
                acc = acc + x.scale(coef);
            }
            for term in &f.nonlinear {
                let v = xs[term.arg].unary_sound(term.func, eps_round);
                acc = acc + v.scale(delta * term.coef);
            }
            acc = acc + control[i].scale(delta) + eps[i].scale(delta);
            acc.widen(eps_round)
        })
        .collect();
    Ok(Hyperrect::new(out))
}

/// Over-approximations of the reachable sets at times `0..=steps`.
#[derive(Clone, Debug, PartialEq)]
pub struct ForwardTrajectory {
    pub sets: Vec<Hyperrect>,
}

pub fn forward_trajectory(
    sys: &SystemSpec,
    start: &Hyperrect,
    steps: usize,
) -> Result<ForwardTrajectory> {
    forward_trajectory_with(sys, start, steps, DEFAULT_EPS_ROUND)
}

pub fn forward_trajectory_with(
    sys: &SystemSpec,
    start: &Hyperrect,
    steps: usize,
    eps_round: f64,
) -> Result<ForwardTrajectory> {
    let mut sets = Vec::with_capacity(steps + 1);
    sets.push(start.clone());
    for t in 0..steps {
        let next = next_box_with(sys, &sets[t], eps_round)?;
        sets.push(next);
    }
    Ok(ForwardTrajectory { sets })
}

/// Exact trajectory `[x0, x1, ...]` for the given perturbation sequence.
pub fn simulate(sys: &SystemSpec, x0: &[f64], eps_sequence: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
    check_dim(sys.n(), x0.len())?;
    if eps_sequence.len() > sys.steps() {
        return Err(Error::InvalidConfig(format!(
            "perturbation sequence has {} entries but the horizon is {} steps",
            eps_sequence.len(),
            sys.steps()
        )));
    }
    let mut states = Vec::with_capacity(eps_sequence.len() + 1);
    states.push(x0.to_vec());
    for eps in eps_sequence {
        let next = sys.next_point(states.last().expect("non-empty"), eps)?;
        states.push(next);
    }
    Ok(states)
}

/// Concrete trajectory that enters an avoid box.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Counterexample {
    pub sample_index: u64,
    /// Time step at which the avoid set is entered.
    pub step: usize,
    pub avoid_index: usize,
    /// States at times `0..=step`.
    pub states: Vec<Vec<f64>>,
    /// Perturbations applied at times `0..step`.
    pub perturbations: Vec<Vec<f64>>,
}

impl Counterexample {
    /// Re-runs the trajectory and checks it reproduces bit for bit and ends in the avoid box.
    pub fn replays(&self, sys: &SystemSpec) -> bool {
        let Some(x0) = self.states.first() else {
            return false;
        };
        let Ok(states) = simulate(sys, x0, &self.perturbations) else {
            return false;
        };
        let Some(avoid) = sys.avoid().get(self.avoid_index) else {
            return false;
        };
        states == self.states && states.last().is_some_and(|x| avoid.contains_point(x))
    }
}

/// Perturbation for one simulated step: a random corner of E or a uniform
/// interior draw, with equal probability.
pub fn draw_perturbation<R: Rng>(rng: &mut R, perturbation: &Hyperrect) -> Vec<f64> {
    if rng.gen_bool(0.5) {
        random_corner(rng, perturbation)
    } else {
        uniform_in(rng, perturbation)
    }
}

/// Draws `(x0, eps_0..eps_{T-1})` for sample `index`.
pub fn draw_trajectory_inputs(
    sys: &SystemSpec,
    seed: u64,
    index: u64,
) -> (Vec<f64>, Vec<Vec<f64>>) {
    let mut rng = stream(seed, index);
    let x0 = uniform_in(&mut rng, sys.init());
    let eps = (0..sys.steps())
        .map(|_| draw_perturbation(&mut rng, sys.perturbation()))
        .collect();
    (x0, eps)
}

/// Seeded random search for a trajectory entering an avoid box within the horizon.
///
/// Samples are independent, so the search runs in parallel; the reported
/// counterexample is always the one with the smallest sample index.
pub fn falsify(sys: &SystemSpec, samples: u64, seed: u64) -> Option<Counterexample> {
    if sys.avoid().is_empty() {
        return None;
    }
    (0..samples)
        .into_par_iter()
        .find_map_first(|index| try_sample(sys, seed, index))
}

fn try_sample(sys: &SystemSpec, seed: u64, index: u64) -> Option<Counterexample> {
    let (x0, eps) = draw_trajectory_inputs(sys, seed, index);
    let mut states = vec![x0];
    for t in 0..=sys.steps() {
        let x = &states[t];
        if let Some(avoid_index) = sys.avoid().iter().position(|a| a.contains_point(x)) {
            return Some(Counterexample {
                sample_index: index,
                step: t,
                avoid_index,
                perturbations: eps[..t].to_vec(),
                states,
            });
        }
        if t < sys.steps() {
            let next = sys
                .next_point(x, &eps[t])
                .expect("drawn perturbation lies in E");
            states.push(next);
        }
    }
    None
}
