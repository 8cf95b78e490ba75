use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::geometry::Hyperrect;
use crate::system::SystemSpec;
use crate::verifier::VerificationReport;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 480.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 170.0;
const TOP: f64 = 20.0;
const BOTTOM: f64 = 50.0;
/// Half-thickness of a time slice when one axis is time.
const SLICE: f64 = 0.4;

/// Vertical axis of a projection.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PlotAxis {
    Dim(usize),
    Time,
}

struct Layer {
    class: &'static str,
    label: &'static str,
    fill: &'static str,
    stroke: &'static str,
    /// (start time, end time, box); times are ignored for state-space projections.
    sets: Vec<(f64, f64, Hyperrect)>,
}

#[derive(Clone, Copy)]
struct Rect {
    x0: f64,
    x1: f64,
    y0: f64,
    y1: f64,
}

fn layers(sys: &SystemSpec, report: &VerificationReport) -> Vec<Layer> {
    let t = sys.steps() as f64;
    let at = |time: f64, b: &Hyperrect| (time - SLICE, time + SLICE, b.clone());
    let tail = |k: usize| t - k as f64;
    vec![
        Layer {
            class: "avoid",
            label: "avoid",
            fill: "#e57373",
            stroke: "#b71c1c",
            sets: sys
                .avoid()
                .iter()
                .map(|a| (-SLICE, t + SLICE, a.clone()))
                .collect(),
        },
        Layer {
            class: "avoid-backward",
            label: "avoid backward",
            fill: "none",
            stroke: "#d32f2f",
            sets: report
                .avoid_backward_sets
                .iter()
                .flat_map(|chain| {
                    chain
                        .iter()
                        .enumerate()
                        .skip(1)
                        .map(move |(k, b)| at(tail(k), b))
                })
                .collect(),
        },
        Layer {
            class: "goal",
            label: "goal",
            fill: "#a5d6a7",
            stroke: "#1b5e20",
            sets: vec![at(t, sys.goal())],
        },
        Layer {
            class: "init",
            label: "init",
            fill: "#90caf9",
            stroke: "#0d47a1",
            sets: vec![at(0.0, sys.init())],
        },
        Layer {
            class: "backward",
            label: "backward over",
            fill: "none",
            stroke: "#ef6c00",
            sets: report
                .backward_sets
                .iter()
                .enumerate()
                .skip(1)
                .map(|(k, b)| at(tail(k), b))
                .collect(),
        },
        Layer {
            class: "under",
            label: "backward under",
            fill: "#ce93d8",
            stroke: "#4a148c",
            sets: report
                .under_sets
                .iter()
                .enumerate()
                .skip(1)
                .map(|(k, b)| at(tail(k), b))
                .collect(),
        },
        Layer {
            class: "forward",
            label: "forward",
            fill: "none",
            stroke: "#1565c0",
            sets: report
                .forward_sets
                .iter()
                .enumerate()
                .map(|(k, b)| at(k as f64, b))
                .collect(),
        },
    ]
}

fn project(x: usize, y: PlotAxis, t0: f64, t1: f64, b: &Hyperrect) -> Option<Rect> {
    let iv = b.intervals()?;
    let (y0, y1) = match y {
        PlotAxis::Dim(j) => (iv[j].lo(), iv[j].hi()),
        PlotAxis::Time => (t0, t1),
    };
    Some(Rect {
        x0: iv[x].lo(),
        x1: iv[x].hi(),
        y0,
        y1,
    })
}

fn padded(lo: f64, hi: f64) -> (f64, f64) {
    let pad = if hi > lo { 0.05 * (hi - lo) } else { 1.0 };
    (lo - pad, hi + pad)
}

fn axis_name(y: PlotAxis) -> String {
    match y {
        PlotAxis::Dim(j) => format!("x{j}"),
        PlotAxis::Time => "t".to_string(),
    }
}

/// Renders the sets of `report` projected onto state dimension `x`
/// (horizontal) and `y` (vertical). Infinite avoid boxes are clipped to
/// the analysis domain.
pub fn render_projection(
    sys: &SystemSpec,
    report: &VerificationReport,
    x: usize,
    y: PlotAxis,
) -> Result<String> {
    let n = sys.n();
    let bad = match y {
        PlotAxis::Dim(j) => x >= n || j >= n || j == x,
        PlotAxis::Time => x >= n,
    };
    if bad {
        return Err(Error::InvalidConfig(format!(
            "invalid plot dimensions ({x}, {}) for a {n}-dimensional system",
            axis_name(y)
        )));
    }

    let mut layers = layers(sys, report);
    for layer in &mut layers {
        for (_, _, b) in &mut layer.sets {
            if !b.is_finite() {
                *b = b.intersect(sys.domain())?;
            }
        }
    }
    let rects: Vec<Vec<Rect>> = layers
        .iter()
        .map(|l| {
            l.sets
                .iter()
                .filter_map(|(t0, t1, b)| project(x, y, *t0, *t1, b))
                .collect()
        })
        .collect();

    let all = rects.iter().flatten();
    let (mut xl, mut xh, mut yl, mut yh) = (
        f64::INFINITY,
        f64::NEG_INFINITY,
        f64::INFINITY,
        f64::NEG_INFINITY,
    );
    for r in all {
        xl = xl.min(r.x0);
        xh = xh.max(r.x1);
        yl = yl.min(r.y0);
        yh = yh.max(r.y1);
    }
    if !xl.is_finite() {
        (xl, xh, yl, yh) = (0.0, 0.0, 0.0, 0.0);
    }
    let (xl, xh) = padded(xl, xh);
    let (yl, yh) = padded(yl, yh);
    let sx = (WIDTH - LEFT - RIGHT) / (xh - xl);
    let sy = (HEIGHT - TOP - BOTTOM) / (yh - yl);
    let tx = LEFT - sx * xl;
    let ty = HEIGHT - BOTTOM + sy * yl;

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
    );
    let _ = writeln!(
        svg,
        r#"<rect class="background" x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#
    );
    let _ = writeln!(
        svg,
        r#"<g class="data" transform="matrix({sx} 0 0 {} {tx} {ty})">"#,
        -sy
    );
    for (layer, rs) in layers.iter().zip(&rects) {
        if rs.is_empty() {
            continue;
        }
        let _ = writeln!(
            svg,
            r#"<g class="layer {}" fill="{}" fill-opacity="0.35" stroke="{}">"#,
            layer.class, layer.fill, layer.stroke
        );
        for (i, r) in rs.iter().enumerate() {
            let _ = writeln!(
                svg,
                r#"<rect class="{}" data-index="{i}" data-lo="{} {}" data-hi="{} {}" x="{}" y="{}" width="{}" height="{}" vector-effect="non-scaling-stroke"/>"#,
                layer.class,
                r.x0,
                r.y0,
                r.x1,
                r.y1,
                r.x0,
                r.y0,
                r.x1 - r.x0,
                r.y1 - r.y0
            );
        }
        svg.push_str("</g>\n");
    }
    svg.push_str("</g>\n");

    let (px0, px1) = (LEFT, WIDTH - RIGHT);
    let (py0, py1) = (HEIGHT - BOTTOM, TOP);
    let _ = writeln!(
        svg,
        r#"<rect class="frame" x="{px0}" y="{py1}" width="{}" height="{}" fill="none" stroke="black"/>"#,
        px1 - px0,
        py0 - py1
    );
    let _ = writeln!(
        svg,
        r#"<text class="tick" x="{px0}" y="{}" font-size="11">{xl}</text>"#,
        py0 + 14.0
    );
    let _ = writeln!(
        svg,
        r#"<text class="tick" x="{px1}" y="{}" font-size="11" text-anchor="end">{xh}</text>"#,
        py0 + 14.0
    );
    let _ = writeln!(
        svg,
        r#"<text class="tick" x="{}" y="{py0}" font-size="11" text-anchor="end">{yl}</text>"#,
        px0 - 4.0
    );
    let _ = writeln!(
        svg,
        r#"<text class="tick" x="{}" y="{}" font-size="11" text-anchor="end">{yh}</text>"#,
        px0 - 4.0,
        py1 + 10.0
    );
    let _ = writeln!(
        svg,
        r#"<text class="axis-label" x="{}" y="{}" font-size="13" text-anchor="middle">x{x}</text>"#,
        0.5 * (px0 + px1),
        HEIGHT - 12.0
    );
    let _ = writeln!(
        svg,
        r#"<text class="axis-label" x="14" y="{}" font-size="13" text-anchor="middle">{}</text>"#,
        0.5 * (py0 + py1),
        axis_name(y)
    );

    svg.push_str("<g class=\"legend\" font-size=\"12\">\n");
    for (i, (layer, rs)) in layers.iter().zip(&rects).enumerate() {
        let ly = TOP + 10.0 + 20.0 * i as f64;
        let lx = WIDTH - RIGHT + 12.0;
        let label = if rs.is_empty() {
            format!("{} (empty)", layer.label)
        } else {
            layer.label.to_string()
        };
        let _ = writeln!(
            svg,
            r#"<rect class="legend-{}" x="{lx}" y="{ly}" width="12" height="12" fill="{}" fill-opacity="0.35" stroke="{}"/>"#,
            layer.class, layer.fill, layer.stroke
        );
        let _ = writeln!(
            svg,
            r#"<text x="{}" y="{}">{label}</text>"#,
            lx + 18.0,
            ly + 10.0
        );
    }
    svg.push_str("</g>\n</svg>\n");
    Ok(svg)
}

pub fn plot_projection(
    sys: &SystemSpec,
    report: &VerificationReport,
    dims: (usize, PlotAxis),
    path: impl AsRef<Path>,
) -> Result<()> {
    let svg = render_projection(sys, report, dims.0, dims.1)?;
    let path = path.as_ref();
    fs::write(path, svg).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}
