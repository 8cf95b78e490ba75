//! File formats: system descriptions, verification reports, and SVG plots.

mod plot;
mod report;
mod system_file;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Hyperrect;

pub use plot::{plot_projection, render_projection, PlotAxis};
pub use report::{ReportFile, TimingsMs, TOOL_NAME};
pub use system_file::{load_system, parse_system, system_to_json, write_system};

/// Non-empty box as written in system files.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoxRepr {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl BoxRepr {
    pub fn into_box(self, n: usize) -> Result<Hyperrect> {
        if self.lower.len() != n || self.upper.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: if self.lower.len() != n {
                    self.lower.len()
                } else {
                    self.upper.len()
                },
            });
        }
        Hyperrect::from_bounds(&self.lower, &self.upper)
    }
}

impl From<&Hyperrect> for BoxRepr {
    /// Panics on an empty box; system files never hold one.
    fn from(b: &Hyperrect) -> Self {
        BoxRepr {
            lower: b.lower().expect("non-empty box"),
            upper: b.upper().expect("non-empty box"),
        }
    }
}

/// Possibly empty box as written in reports.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SetRepr {
    Bounds { lower: Vec<f64>, upper: Vec<f64> },
    Empty { empty: bool, dim: usize },
}

impl From<&Hyperrect> for SetRepr {
    fn from(b: &Hyperrect) -> Self {
        match (b.lower(), b.upper()) {
            (Some(lower), Some(upper)) => SetRepr::Bounds { lower, upper },
            _ => SetRepr::Empty {
                empty: true,
                dim: b.dim(),
            },
        }
    }
}

impl TryFrom<&SetRepr> for Hyperrect {
    type Error = Error;

    fn try_from(s: &SetRepr) -> Result<Hyperrect> {
        match s {
            SetRepr::Bounds { lower, upper } => Hyperrect::from_bounds(lower, upper),
            SetRepr::Empty { dim, .. } => Ok(Hyperrect::empty(*dim)),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn set_repr_round_trip() {
        for b in [Hyperrect::cube(2, 0.5), Hyperrect::empty(3)] {
            let text = serde_json::to_string(&SetRepr::from(&b)).unwrap();
            let back: SetRepr = serde_json::from_str(&text).unwrap();
            assert_eq!(Hyperrect::try_from(&back).unwrap(), b);
        }
        assert_eq!(
            serde_json::to_string(&SetRepr::from(&Hyperrect::empty(2))).unwrap(),
            r#"{"empty":true,"dim":2}"#
        );
    }

    proptest::proptest! {
        #[test]
        fn floats_round_trip_exactly(a in -1e6f64..1e6, w in 0.0f64..1e3) {
            let b = Hyperrect::from_bounds(&[a], &[a + w]).unwrap();
            let text = serde_json::to_string(&SetRepr::from(&b)).unwrap();
            let back: SetRepr = serde_json::from_str(&text).unwrap();
            proptest::prop_assert_eq!(Hyperrect::try_from(&back).unwrap(), b);
        }
    }

    #[test]
    fn box_repr_checks_dimension() {
        let r = BoxRepr {
            lower: vec![0.0],
            upper: vec![1.0, 2.0],
        };
        assert!(r.into_box(2).is_err());
    }
}
