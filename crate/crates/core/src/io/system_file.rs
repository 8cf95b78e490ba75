use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::BoxRepr;
use crate::error::{Error, Result};
use crate::system::{
    Activation, DynamicsExpr, Layer, NonlinearTerm, ReluNetwork, SystemParts, SystemSpec,
};

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SystemFile {
    n: usize,
    delta: f64,
    steps: usize,
    domain: BoxRepr,
    init: BoxRepr,
    goal: BoxRepr,
    #[serde(default)]
    avoid: Vec<BoxRepr>,
    perturbation: BoxRepr,
    dynamics: Vec<DynamicsRepr>,
    controller: ControllerRepr,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct DynamicsRepr {
    affine: Vec<f64>,
    #[serde(default)]
    offset: f64,
    #[serde(default)]
    nonlinear: Vec<NonlinearTerm>,
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ControllerRepr {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    layers: Option<Vec<LayerRepr>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    path: Option<PathBuf>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ControllerFile {
    layers: Vec<LayerRepr>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct LayerRepr {
    weights: Vec<Vec<f64>>,
    bias: Vec<f64>,
    activation: Activation,
}

fn parse_error(path: &Path, e: impl ToString) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        message: e.to_string(),
    }
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn network_from(layers: Vec<LayerRepr>) -> Result<ReluNetwork> {
    ReluNetwork::new(
        layers
            .into_iter()
            .map(|l| Layer {
                weights: l.weights,
                bias: l.bias,
                activation: l.activation,
            })
            .collect(),
    )
}

/// Reads and validates a system description. A controller given by `path`
/// is resolved relative to the system file's directory.
pub fn load_system(path: impl AsRef<Path>) -> Result<SystemSpec> {
    let path = path.as_ref();
    let text = read(path)?;
    let base = path.parent().unwrap_or_else(|| Path::new("."));
    parse_system(&text, base).map_err(|e| match e {
        Error::Parse { message, .. } => parse_error(path, message),
        other => other,
    })
}

/// Parses a system description held in memory; `base_dir` anchors relative
/// controller paths.
pub fn parse_system(text: &str, base_dir: &Path) -> Result<SystemSpec> {
    let file: SystemFile =
        serde_json::from_str(text).map_err(|e| parse_error(Path::new("<system>"), e))?;

    let net = match (file.controller.layers, file.controller.path) {
        (Some(layers), None) => network_from(layers)?,
        (None, Some(rel)) => {
            let ctrl_path = base_dir.join(rel);
            let text = read(&ctrl_path)?;
            let ctrl: ControllerFile =
                serde_json::from_str(&text).map_err(|e| parse_error(&ctrl_path, e))?;
            network_from(ctrl.layers)?
        }
        _ => {
            return Err(Error::InvalidSystem(
                "controller needs exactly one of \"layers\" or \"path\"".into(),
            ))
        }
    };

    let field = |name: &str, b: BoxRepr| {
        b.into_box(file.n)
            .map_err(|e| Error::InvalidSystem(format!("{name}: {e}")))
    };
    let avoid = file
        .avoid
        .into_iter()
        .enumerate()
        .map(|(i, b)| field(&format!("avoid[{i}]"), b))
        .collect::<Result<Vec<_>>>()?;

    SystemSpec::new(SystemParts {
        n: file.n,
        init: field("init", file.init)?,
        dynamics: file
            .dynamics
            .into_iter()
            .map(|d| DynamicsExpr {
                affine: d.affine,
                offset: d.offset,
                nonlinear: d.nonlinear,
            })
            .collect(),
        perturbation: field("perturbation", file.perturbation)?,
        controller: net,
        delta: file.delta,
        steps: file.steps,
        goal: field("goal", file.goal)?,
        avoid,
        domain: field("domain", file.domain)?,
    })
}

/// Serializes a system with its controller inline.
pub fn system_to_json(sys: &SystemSpec) -> String {
    let p = sys.parts();
    let file = SystemFile {
        n: p.n,
        delta: p.delta,
        steps: p.steps,
        domain: BoxRepr::from(&p.domain),
        init: BoxRepr::from(&p.init),
        goal: BoxRepr::from(&p.goal),
        avoid: p.avoid.iter().map(BoxRepr::from).collect(),
        perturbation: BoxRepr::from(&p.perturbation),
        dynamics: p
            .dynamics
            .iter()
            .map(|d| DynamicsRepr {
                affine: d.affine.clone(),
                offset: d.offset,
                nonlinear: d.nonlinear.clone(),
            })
            .collect(),
        controller: ControllerRepr {
            layers: Some(
                p.controller
                    .layers()
                    .iter()
                    .map(|l| LayerRepr {
                        weights: l.weights.clone(),
                        bias: l.bias.clone(),
                        activation: l.activation,
                    })
                    .collect(),
            ),
            path: None,
        },
    };
    serde_json::to_string_pretty(&file).expect("system serializes")
}

pub fn write_system(sys: &SystemSpec, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, system_to_json(sys) + "\n").map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}
