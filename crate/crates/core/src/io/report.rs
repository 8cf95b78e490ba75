use std::fs;
use std::path::Path;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::SetRepr;
use crate::backward_under::UnderMethod;
use crate::error::{Error, Result};
use crate::forward::Counterexample;
use crate::verifier::{FabreConfig, PhaseTimings, Property, Verdict, VerificationReport};

pub const TOOL_NAME: &str = "fabre";

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimingsMs {
    pub forward: f64,
    pub backward_over: f64,
    pub backward_under: f64,
    pub falsify: f64,
}

fn ms(d: Duration) -> f64 {
    d.as_secs_f64() * 1e3
}

impl From<&PhaseTimings> for TimingsMs {
    fn from(t: &PhaseTimings) -> Self {
        TimingsMs {
            forward: ms(t.forward),
            backward_over: ms(t.backward_over),
            backward_under: ms(t.backward_under),
            falsify: ms(t.falsify),
        }
    }
}

/// Serialized form of a [`VerificationReport`] together with the
/// configuration that produced it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReportFile {
    pub tool: String,
    pub version: String,
    pub verdict: Verdict,
    pub property: Property,
    pub seed: u64,
    pub config: FabreConfig,
    pub certified: bool,
    pub reach_step: Option<usize>,
    pub forward_sets: Vec<SetRepr>,
    pub backward_sets: Vec<SetRepr>,
    pub under_sets: Vec<SetRepr>,
    pub under_methods: Vec<Option<UnderMethod>>,
    pub avoid_backward_sets: Vec<Vec<SetRepr>>,
    pub counterexample: Option<Counterexample>,
    pub notes: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timings_ms: Option<TimingsMs>,
}

impl ReportFile {
    /// With `with_timings = false` the output depends only on the inputs.
    pub fn new(report: &VerificationReport, cfg: &FabreConfig, with_timings: bool) -> Self {
        let sets = |v: &[crate::Hyperrect]| v.iter().map(SetRepr::from).collect::<Vec<_>>();
        ReportFile {
            tool: TOOL_NAME.to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            verdict: report.verdict,
            property: report.property,
            seed: cfg.under.seed,
            config: *cfg,
            certified: report.certified,
            reach_step: report.reach_step,
            forward_sets: sets(&report.forward_sets),
            backward_sets: sets(&report.backward_sets),
            under_sets: sets(&report.under_sets),
            under_methods: report.under_methods.clone(),
            avoid_backward_sets: report.avoid_backward_sets.iter().map(|c| sets(c)).collect(),
            counterexample: report.counterexample.clone(),
            notes: report.notes.clone(),
            timings_ms: with_timings.then(|| TimingsMs::from(&report.timings)),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes") + "\n"
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Parse {
            path: "<report>".into(),
            message: e.to_string(),
        })
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_json()).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })
    }
}
