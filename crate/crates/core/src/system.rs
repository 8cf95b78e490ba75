//! The closed-loop system: state-update functions, ReLU controller,
//! perturbation set, horizon and property sets.

use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::geometry::{Hyperrect, UnaryFn};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Relu,
    Linear,
}

/// Dense layer `act(W x + b)` with `W` stored row-major as `[out][in]`.
#[derive(Clone, Debug, PartialEq)]
pub struct Layer {
    pub weights: Vec<Vec<f64>>,
    pub bias: Vec<f64>,
    pub activation: Activation,
}

impl Layer {
    pub fn input_dim(&self) -> usize {
        self.weights.first().map_or(0, Vec::len)
    }

    pub fn output_dim(&self) -> usize {
        self.weights.len()
    }

    fn apply(&self, x: &[f64]) -> Vec<f64> {
        self.weights
            .iter()
            .zip(&self.bias)
            .map(|(row, b)| {
                let z = row.iter().zip(x).map(|(w, xi)| w * xi).sum::<f64>() + b;
                match self.activation {
                    Activation::Relu => z.max(0.0),
                    Activation::Linear => z,
                }
            })
            .collect()
    }
}

/// Fully-connected feed-forward controller: ReLU hidden layers, linear output.
#[derive(Clone, Debug, PartialEq)]
pub struct ReluNetwork {
    layers: Vec<Layer>,
}

impl ReluNetwork {
    pub fn new(layers: Vec<Layer>) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::InvalidSystem(
                "controller must have at least one layer".into(),
            ));
        }
        for (k, layer) in layers.iter().enumerate() {
            if layer.weights.is_empty() {
                return Err(Error::InvalidSystem(format!(
                    "layer {k} has no output units"
                )));
            }
            let width = layer.input_dim();
            if width == 0 {
                return Err(Error::InvalidSystem(format!("layer {k} has no inputs")));
            }
            if let Some((r, row)) = layer
                .weights
                .iter()
                .enumerate()
                .find(|(_, row)| row.len() != width)
            {
                return Err(Error::InvalidSystem(format!(
                    "layer {k}: weight row {r} has {} entries, expected {width}",
                    row.len()
                )));
            }
            if layer.bias.len() != layer.output_dim() {
                return Err(Error::InvalidSystem(format!(
                    "layer {k}: bias has {} entries but the layer has {} outputs",
                    layer.bias.len(),
                    layer.output_dim()
                )));
            }
            if layer
                .weights
                .iter()
                .flatten()
                .chain(&layer.bias)
                .any(|v| !v.is_finite())
            {
                return Err(Error::InvalidSystem(format!(
                    "layer {k}: non-finite parameter"
                )));
            }
            if k > 0 {
                let prev = layers[k - 1].output_dim();
                if prev != width {
                    return Err(Error::InvalidSystem(format!(
                        "shape mismatch: layer {} produces {prev} outputs but layer {k} expects {width} inputs",
                        k - 1
                    )));
                }
            }
            let last = k + 1 == layers.len();
            match (last, layer.activation) {
                (true, Activation::Relu) => {
                    return Err(Error::InvalidSystem(format!(
                        "layer {k}: output layer must be linear"
                    )))
                }
                (false, Activation::Linear) => {
                    return Err(Error::InvalidSystem(format!(
                        "layer {k}: hidden layers must use relu"
                    )))
                }
                _ => {}
            }
        }
        Ok(Self { layers })
    }

    /// Single linear layer of zeros: `u(x) = 0`.
    pub fn zero(n: usize) -> Self {
        Self {
            layers: vec![Layer {
                weights: vec![vec![0.0; n]; n],
                bias: vec![0.0; n],
                activation: Activation::Linear,
            }],
        }
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].input_dim()
    }

    pub fn output_dim(&self) -> usize {
        self.layers[self.layers.len() - 1].output_dim()
    }

    pub fn eval(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_dim(self.input_dim(), x.len())?;
        let mut h = x.to_vec();
        for layer in &self.layers {
            h = layer.apply(&h);
        }
        Ok(h)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NonlinearTerm {
    pub coef: f64,
    pub func: UnaryFn,
    pub arg: usize,
}

/// `f_i(x) = a . x + b + sum_j coef_j * func_j(x[arg_j])`.
#[derive(Clone, Debug, PartialEq)]
pub struct DynamicsExpr {
    pub affine: Vec<f64>,
    pub offset: f64,
    pub nonlinear: Vec<NonlinearTerm>,
}

impl DynamicsExpr {
    pub fn linear(affine: Vec<f64>) -> Self {
        Self {
            affine,
            offset: 0.0,
            nonlinear: Vec::new(),
        }
    }

    pub fn zero(n: usize) -> Self {
        Self::linear(vec![0.0; n])
    }

    pub fn eval(&self, x: &[f64]) -> Result<f64> {
        check_dim(self.affine.len(), x.len())?;
        let mut acc = self.offset;
        for (a, xi) in self.affine.iter().zip(x) {
            acc += a * xi;
        }
        for term in &self.nonlinear {
            let v = *x.get(term.arg).ok_or(Error::DimensionMismatch {
                expected: x.len(),
                found: term.arg + 1,
            })?;
            acc += term.coef * term.func.eval(v);
        }
        Ok(acc)
    }

    fn validate(&self, i: usize, n: usize) -> Result<()> {
        if self.affine.len() != n {
            return Err(Error::InvalidSystem(format!(
                "dynamics[{i}]: affine has {} coefficients, expected {n}",
                self.affine.len()
            )));
        }
        if !self.offset.is_finite() || self.affine.iter().any(|a| !a.is_finite()) {
            return Err(Error::InvalidSystem(format!(
                "dynamics[{i}]: non-finite coefficient"
            )));
        }
        for (j, term) in self.nonlinear.iter().enumerate() {
            if term.arg >= n {
                return Err(Error::InvalidSystem(format!(
                    "dynamics[{i}].nonlinear[{j}]: arg {} out of range for dimension {n}",
                    term.arg
                )));
            }
            if !term.coef.is_finite() {
                return Err(Error::InvalidSystem(format!(
                    "dynamics[{i}].nonlinear[{j}]: non-finite coefficient"
                )));
            }
        }
        Ok(())
    }
}

/// Unvalidated components of a [`SystemSpec`].
#[derive(Clone, Debug, PartialEq)]
pub struct SystemParts {
    pub n: usize,
    pub init: Hyperrect,
    pub dynamics: Vec<DynamicsExpr>,
    pub perturbation: Hyperrect,
    pub controller: ReluNetwork,
    pub delta: f64,
    pub steps: usize,
    pub goal: Hyperrect,
    pub avoid: Vec<Hyperrect>,
    /// Bounded region every backward query is answered relative to.
    pub domain: Hyperrect,
}

/// Validated discrete-time neural feedback system.
///
/// Successor states follow
/// `x'_i = x_i + (f_i(x) + u(x)_i + eps_i) * delta` with `eps` ranging over
/// the perturbation box.
#[derive(Clone, Debug, PartialEq)]
pub struct SystemSpec {
    parts: SystemParts,
}

impl TryFrom<SystemParts> for SystemSpec {
    type Error = Error;

    fn try_from(parts: SystemParts) -> Result<Self> {
        SystemSpec::new(parts)
    }
}

impl SystemSpec {
    pub fn new(parts: SystemParts) -> Result<Self> {
        let n = parts.n;
        let invalid = |msg: String| Err(Error::InvalidSystem(msg));
        if n == 0 {
            return invalid("dimension n must be at least 1".into());
        }
        if !(parts.delta > 0.0 && parts.delta.is_finite()) {
            return invalid("delta must be positive".into());
        }
        if parts.steps == 0 {
            return invalid("steps must be at least 1".into());
        }
        if parts.dynamics.len() != n {
            return invalid(format!(
                "expected {n} dynamics rows, found {}",
                parts.dynamics.len()
            ));
        }
        for (i, d) in parts.dynamics.iter().enumerate() {
            d.validate(i, n)?;
        }
        let named_boxes = [
            ("init", &parts.init),
            ("goal", &parts.goal),
            ("perturbation", &parts.perturbation),
            ("domain", &parts.domain),
        ];
        for (name, b) in named_boxes
            .into_iter()
            .chain(parts.avoid.iter().map(|a| ("avoid", a)))
        {
            if b.dim() != n {
                return invalid(format!("{name} has dimension {}, expected {n}", b.dim()));
            }
        }
        if parts.perturbation.is_empty() || !parts.perturbation.is_finite() {
            return invalid("perturbation must be a non-empty bounded box".into());
        }
        if parts.init.is_empty() {
            return invalid("init must be non-empty".into());
        }
        if parts.domain.is_empty() || !parts.domain.is_finite() {
            return invalid("domain must be a non-empty bounded box".into());
        }
        if !parts.domain.contains(&parts.init)? {
            return invalid("init must lie inside domain".into());
        }
        if parts.controller.input_dim() != n || parts.controller.output_dim() != n {
            return invalid(format!(
                "controller maps R^{} to R^{}, expected R^{n} to R^{n}",
                parts.controller.input_dim(),
                parts.controller.output_dim()
            ));
        }
        Ok(Self { parts })
    }

    pub fn parts(&self) -> &SystemParts {
        &self.parts
    }

    pub fn into_parts(self) -> SystemParts {
        self.parts
    }

    pub fn n(&self) -> usize {
        self.parts.n
    }

    pub fn init(&self) -> &Hyperrect {
        &self.parts.init
    }

    pub fn dynamics(&self) -> &[DynamicsExpr] {
        &self.parts.dynamics
    }

    pub fn perturbation(&self) -> &Hyperrect {
        &self.parts.perturbation
    }

    pub fn controller(&self) -> &ReluNetwork {
        &self.parts.controller
    }

    pub fn delta(&self) -> f64 {
        self.parts.delta
    }

    pub fn steps(&self) -> usize {
        self.parts.steps
    }

    pub fn goal(&self) -> &Hyperrect {
        &self.parts.goal
    }

    pub fn avoid(&self) -> &[Hyperrect] {
        &self.parts.avoid
    }

    pub fn domain(&self) -> &Hyperrect {
        &self.parts.domain
    }

    /// One exact step for a fixed perturbation `eps`.
    pub fn next_point(&self, x: &[f64], eps: &[f64]) -> Result<Vec<f64>> {
        check_dim(self.n(), x.len())?;
        check_dim(self.n(), eps.len())?;
        if !self.parts.perturbation.contains_point(eps) {
            return Err(Error::PerturbationOutside(eps.to_vec()));
        }
        let u = self.parts.controller.eval(x)?;
        let delta = self.parts.delta;
        self.parts
            .dynamics
            .iter()
            .enumerate()
            .map(|(i, f)| Ok(x[i] + (f.eval(x)? + u[i] + eps[i]) * delta))
            .collect()
    }

    /// `next_point` with every corner of the perturbation box plus its center.
    pub fn next_point_all_extreme(&self, x: &[f64]) -> Result<Vec<Vec<f64>>> {
        let mut eps_set = self.parts.perturbation.corners();
        eps_set.push(
            self.parts
                .perturbation
                .center()
                .expect("perturbation is non-empty"),
        );
        eps_set.iter().map(|e| self.next_point(x, e)).collect()
    }
}

#[cfg(test)]
mod tests {
    use std::f64::consts::FRAC_PI_2;

    use super::*;

    fn single(w: f64, b: f64, act: Activation) -> Layer {
        Layer {
            weights: vec![vec![w]],
            bias: vec![b],
            activation: act,
        }
    }

    fn one_d(affine: f64, controller: ReluNetwork, e: f64, delta: f64) -> SystemSpec {
        SystemSpec::new(SystemParts {
            n: 1,
            init: Hyperrect::cube(1, 1.0),
            dynamics: vec![DynamicsExpr::linear(vec![affine])],
            perturbation: Hyperrect::cube(1, e),
            controller,
            delta,
            steps: 2,
            goal: Hyperrect::cube(1, 0.3),
            avoid: vec![],
            domain: Hyperrect::cube(1, 2.0),
        })
        .unwrap()
    }

    #[test]
    fn network_examples() {
        let zero = ReluNetwork::zero(3);
        assert_eq!(zero.eval(&[1.0, -2.0, 5.0]).unwrap(), vec![0.0; 3]);

        let lin = ReluNetwork::new(vec![single(2.0, 1.0, Activation::Linear)]).unwrap();
        assert_eq!(lin.eval(&[3.0]).unwrap(), vec![7.0]);

        let clamp = ReluNetwork::new(vec![
            single(1.0, 0.0, Activation::Relu),
            single(1.0, 0.0, Activation::Linear),
        ])
        .unwrap();
        assert_eq!(clamp.eval(&[-5.0]).unwrap(), vec![0.0]);
        assert!(clamp.eval(&[1.0, 2.0]).is_err());
    }

    #[test]
    fn network_shape_errors_name_both_layers() {
        let err = ReluNetwork::new(vec![
            Layer {
                weights: vec![vec![1.0; 2]; 3],
                bias: vec![0.0; 3],
                activation: Activation::Relu,
            },
            Layer {
                weights: vec![vec![1.0; 4]; 2],
                bias: vec![0.0; 2],
                activation: Activation::Linear,
            },
        ])
        .unwrap_err()
        .to_string();
        assert!(err.contains("layer 0") && err.contains("layer 1"), "{err}");
    }

    #[test]
    fn network_activation_rules() {
        assert!(ReluNetwork::new(vec![single(1.0, 0.0, Activation::Relu)]).is_err());
        assert!(ReluNetwork::new(vec![
            single(1.0, 0.0, Activation::Linear),
            single(1.0, 0.0, Activation::Linear)
        ])
        .is_err());
        assert!(ReluNetwork::new(vec![]).is_err());
    }

    #[test]
    fn dynamics_examples() {
        assert_eq!(
            DynamicsExpr::linear(vec![0.0, 1.0])
                .eval(&[3.0, 4.0])
                .unwrap(),
            4.0
        );
        let s = DynamicsExpr {
            affine: vec![0.0, 0.0],
            offset: 0.0,
            nonlinear: vec![NonlinearTerm {
                coef: 1.0,
                func: UnaryFn::Sin,
                arg: 0,
            }],
        };
        assert_eq!(s.eval(&[FRAC_PI_2, 0.0]).unwrap(), 1.0);
        assert_eq!(DynamicsExpr::linear(vec![-0.5]).eval(&[2.0]).unwrap(), -1.0);
    }

    #[test]
    fn next_point_examples() {
        let ident = one_d(0.0, ReluNetwork::zero(1), 0.0, 1.0);
        assert_eq!(ident.next_point(&[0.7], &[0.0]).unwrap(), vec![0.7]);

        let drift = one_d(0.0, ReluNetwork::zero(1), 0.1, 1.0);
        assert_eq!(drift.next_point(&[0.5], &[0.1]).unwrap(), vec![0.6]);

        let contraction = one_d(-0.5, ReluNetwork::zero(1), 0.01, 1.0);
        let x = contraction.next_point(&[1.0], &[0.01]).unwrap();
        assert!((x[0] - 0.51).abs() < 1e-15);

        assert!(matches!(
            contraction.next_point(&[1.0], &[0.02]),
            Err(Error::PerturbationOutside(_))
        ));
    }

    #[test]
    fn validation_rejects_malformed_specs() {
        let base = one_d(0.0, ReluNetwork::zero(1), 0.1, 1.0).into_parts();

        let mut p = base.clone();
        p.delta = 0.0;
        let msg = SystemSpec::new(p).unwrap_err().to_string();
        assert!(msg.contains("delta must be positive"), "{msg}");

        let mut p = base.clone();
        p.steps = 0;
        assert!(SystemSpec::new(p).is_err());

        let mut p = base.clone();
        p.dynamics.push(DynamicsExpr::zero(1));
        assert!(SystemSpec::new(p).is_err());

        let mut p = base.clone();
        p.goal = Hyperrect::cube(2, 1.0);
        assert!(SystemSpec::new(p).is_err());

        let mut p = base.clone();
        p.init = Hyperrect::cube(1, 3.0);
        assert!(SystemSpec::new(p)
            .unwrap_err()
            .to_string()
            .contains("domain"));

        let mut p = base.clone();
        p.controller = ReluNetwork::zero(2);
        assert!(SystemSpec::new(p).is_err());

        let mut p = base;
        p.dynamics[0].nonlinear.push(NonlinearTerm {
            coef: 1.0,
            func: UnaryFn::Cos,
            arg: 1,
        });
        assert!(SystemSpec::new(p)
            .unwrap_err()
            .to_string()
            .contains("arg 1"));
    }
}
