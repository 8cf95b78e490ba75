//! Certified inner boxes of the one-step backward reachable set.
//!
//! Every method produces a candidate box inside the supplied outer box and
//! certifies it with [`check_containment`]: the interval forward image of
//! the candidate, taken over the whole perturbation set, must lie inside the
//! target. A certified box therefore only holds states that reach the target
//! under *every* perturbation.
//!
//! - [`under_gss`] shrinks the outer box about its center by a scalar factor.
//! - [`under_ich`] samples, labels points by exact simulation, and certifies
//!   the bounding box of the positives, shrinking until it passes.
//! - [`under_leb`] finds the largest box that excludes all negative samples
//!   and certifies it the same way.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::forward::next_box_with;
use crate::geometry::{Hyperrect, Interval, DEFAULT_EPS_ROUND};
use crate::sampling::{derive_seed, stream, uniform_in};
use crate::system::SystemSpec;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct UnderConfig {
    /// Resolution of the shrink factor search.
    pub rho_tol: f64,
    /// Samples drawn per sampling round.
    pub sample_count: usize,
    pub max_refine_iters: usize,
    /// Distance a candidate face must keep from an excluded negative sample.
    pub margin: f64,
    pub seed: u64,
    /// Cap on negatives handed to the exact box search.
    pub max_negatives: usize,
    /// Outward slack on the forward images used for certification.
    pub eps_round: f64,
}

impl Default for UnderConfig {
    fn default() -> Self {
        Self {
            rho_tol: 1e-3,
            sample_count: 1000,
            max_refine_iters: 10,
            margin: 1e-9,
            seed: 0,
            max_negatives: 64,
            eps_round: DEFAULT_EPS_ROUND,
        }
    }
}

impl UnderConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.rho_tol > 0.0 && self.rho_tol < 0.5) {
            return Err(Error::InvalidConfig("rho_tol must lie in (0, 0.5)".into()));
        }
        if self.sample_count < 10 {
            return Err(Error::InvalidConfig(
                "sample_count must be at least 10".into(),
            ));
        }
        if self.max_refine_iters == 0 {
            return Err(Error::InvalidConfig(
                "max_refine_iters must be at least 1".into(),
            ));
        }
        if !(self.margin > 0.0 && self.margin.is_finite()) {
            return Err(Error::InvalidConfig("margin must be positive".into()));
        }
        if self.max_negatives == 0 {
            return Err(Error::InvalidConfig(
                "max_negatives must be at least 1".into(),
            ));
        }
        if !(self.eps_round >= 0.0 && self.eps_round.is_finite()) {
            return Err(Error::InvalidConfig(
                "eps_round must be non-negative".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum UnderMethod {
    Gss,
    Ich,
    Leb,
}

/// Method selection, where `Best` runs all three and keeps the largest
/// certified box by normalized perimeter.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum UnderChoice {
    Gss,
    Ich,
    Leb,
    #[default]
    Best,
}

impl fmt::Display for UnderMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            UnderMethod::Gss => "gss",
            UnderMethod::Ich => "ich",
            UnderMethod::Leb => "leb",
        })
    }
}

impl fmt::Display for UnderChoice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            UnderChoice::Gss => "gss",
            UnderChoice::Ich => "ich",
            UnderChoice::Leb => "leb",
            UnderChoice::Best => "best",
        })
    }
}

impl FromStr for UnderChoice {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gss" => Ok(UnderChoice::Gss),
            "ich" => Ok(UnderChoice::Ich),
            "leb" => Ok(UnderChoice::Leb),
            "best" => Ok(UnderChoice::Best),
            other => Err(Error::InvalidConfig(format!(
                "unknown method {other:?}, expected gss|ich|leb|best"
            ))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct UnderResult {
    pub set: Hyperrect,
    pub method: UnderMethod,
    /// The set passed [`check_containment`]; always false for an empty set.
    pub validated: bool,
    /// Number of interval forward-image queries spent.
    pub queries: usize,
}

impl UnderResult {
    fn failed(dim: usize, method: UnderMethod, queries: usize) -> Self {
        Self {
            set: Hyperrect::empty(dim),
            method,
            validated: false,
            queries,
        }
    }
}

/// `next_box(candidate) ⊆ target`.
pub fn check_containment(
    sys: &SystemSpec,
    candidate: &Hyperrect,
    target: &Hyperrect,
) -> Result<bool> {
    check_containment_with(sys, candidate, target, DEFAULT_EPS_ROUND)
}

pub fn check_containment_with(
    sys: &SystemSpec,
    candidate: &Hyperrect,
    target: &Hyperrect,
    eps_round: f64,
) -> Result<bool> {
    check_dim(sys.n(), candidate.dim())?;
    check_dim(sys.n(), target.dim())?;
    if candidate.is_empty() || target.is_empty() {
        return Err(Error::EmptyBox);
    }
    target.contains(&next_box_with(sys, candidate, eps_round)?)
}

/// Whether `x` lands in `target` for every corner of the perturbation box
/// and its center.
pub fn label_point(sys: &SystemSpec, x: &[f64], target: &Hyperrect) -> Result<bool> {
    Ok(sys
        .next_point_all_extreme(x)?
        .iter()
        .all(|y| target.contains_point(y)))
}

fn scaled_about_center(over: &[Interval], rho: f64) -> Hyperrect {
    Hyperrect::new(
        over.iter()
            .map(|iv| {
                let (c, r) = (iv.mid(), iv.radius());
                Interval::spanning((c - rho * r).max(iv.lo()), (c + rho * r).min(iv.hi()))
            })
            .collect(),
    )
}

/// Largest certified box of the form `c ± rho * r` inside `over`.
///
/// The containment predicate is monotone in `rho`, so the boundary is
/// located by bisection to `rho_tol`.
pub fn under_gss(
    sys: &SystemSpec,
    over: &Hyperrect,
    target: &Hyperrect,
    cfg: &UnderConfig,
) -> Result<UnderResult> {
    cfg.validate()?;
    check_dim(sys.n(), over.dim())?;
    check_dim(sys.n(), target.dim())?;
    let (Some(base), false) = (over.intervals(), target.is_empty()) else {
        return Ok(UnderResult::failed(sys.n(), UnderMethod::Gss, 0));
    };
    let mut queries = 0;
    let mut passes = |rho: f64| -> Result<bool> {
        queries += 1;
        check_containment_with(sys, &scaled_about_center(base, rho), target, cfg.eps_round)
    };

    if passes(1.0)? {
        return Ok(UnderResult {
            set: scaled_about_center(base, 1.0),
            method: UnderMethod::Gss,
            validated: true,
            queries,
        });
    }
    if !passes(cfg.rho_tol)? {
        return Ok(UnderResult::failed(sys.n(), UnderMethod::Gss, queries));
    }
    let (mut lo, mut hi) = (cfg.rho_tol, 1.0);
    while hi - lo > cfg.rho_tol {
        let mid = 0.5 * (lo + hi);
        if passes(mid)? {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(UnderResult {
        set: scaled_about_center(base, lo),
        method: UnderMethod::Gss,
        validated: true,
        queries,
    })
}

struct Labeled {
    positives: Vec<Vec<f64>>,
    negatives: Vec<Vec<f64>>,
}

fn sample_and_label(
    sys: &SystemSpec,
    region: &Hyperrect,
    target: &Hyperrect,
    count: usize,
    seed: u64,
) -> Result<Labeled> {
    let labeled = (0..count as u64)
        .into_par_iter()
        .map(|i| {
            let x = uniform_in(&mut stream(seed, i), region);
            label_point(sys, &x, target).map(|ok| (x, ok))
        })
        .collect::<Result<Vec<_>>>()?;
    let (pos, neg): (Vec<_>, Vec<_>) = labeled.into_iter().partition(|(_, ok)| *ok);
    Ok(Labeled {
        positives: pos.into_iter().map(|(x, _)| x).collect(),
        negatives: neg.into_iter().map(|(x, _)| x).collect(),
    })
}

fn bounding_box(points: &[Vec<f64>]) -> Option<Hyperrect> {
    let first = points.first()?;
    let mut lo = first.clone();
    let mut hi = first.clone();
    for p in &points[1..] {
        for (i, &v) in p.iter().enumerate() {
            lo[i] = lo[i].min(v);
            hi[i] = hi[i].max(v);
        }
    }
    Some(Hyperrect::from_bounds(&lo, &hi).expect("ordered bounds"))
}

const ICH_TAG: u64 = 0x1c4;
const LEB_TAG: u64 = 0x1eb;

/// Sampling-based inner box. Returns the result together with every
/// negative sample seen, for reuse by [`under_leb`].
pub fn under_ich(
    sys: &SystemSpec,
    over: &Hyperrect,
    target: &Hyperrect,
    cfg: &UnderConfig,
) -> Result<(UnderResult, Vec<Vec<f64>>)> {
    cfg.validate()?;
    check_dim(sys.n(), over.dim())?;
    check_dim(sys.n(), target.dim())?;
    let mut negatives = Vec::new();
    if over.is_empty() || target.is_empty() {
        return Ok((UnderResult::failed(sys.n(), UnderMethod::Ich, 0), negatives));
    }
    let mut current = over.clone();
    let mut queries = 0;
    for iter in 0..cfg.max_refine_iters {
        let seed = derive_seed(derive_seed(cfg.seed, ICH_TAG), iter as u64);
        let labeled = sample_and_label(sys, &current, target, cfg.sample_count, seed)?;
        negatives.extend(labeled.negatives);
        let Some(candidate) = bounding_box(&labeled.positives) else {
            break;
        };
        queries += 1;
        if check_containment_with(sys, &candidate, target, cfg.eps_round)? {
            let result = UnderResult {
                set: candidate,
                method: UnderMethod::Ich,
                validated: true,
                queries,
            };
            return Ok((result, negatives));
        }
        current = candidate;
    }
    Ok((
        UnderResult::failed(sys.n(), UnderMethod::Ich, queries),
        negatives,
    ))
}

/// Negatives inside `region`, capped at `cap` by distance to its center.
fn select_negatives(region: &Hyperrect, points: &[Vec<f64>], cap: usize) -> Vec<Vec<f64>> {
    let center = region.center().unwrap_or_default();
    let mut inside: Vec<(f64, &Vec<f64>)> = points
        .iter()
        .filter(|p| region.contains_point(p))
        .map(|p| {
            let d2 = p
                .iter()
                .zip(&center)
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>();
            (d2, p)
        })
        .collect();
    inside.sort_by(|a, b| a.0.total_cmp(&b.0));
    inside.truncate(cap);
    inside.into_iter().map(|(_, p)| p.clone()).collect()
}

/// Inner box that excludes the negative samples, certified and refined like
/// [`under_ich`].
pub fn under_leb(
    sys: &SystemSpec,
    over: &Hyperrect,
    target: &Hyperrect,
    negatives: &[Vec<f64>],
    cfg: &UnderConfig,
) -> Result<UnderResult> {
    cfg.validate()?;
    check_dim(sys.n(), over.dim())?;
    check_dim(sys.n(), target.dim())?;
    if over.is_empty() || target.is_empty() {
        return Ok(UnderResult::failed(sys.n(), UnderMethod::Leb, 0));
    }
    let mut current = over.clone();
    let mut pool: Vec<Vec<f64>> = negatives
        .iter()
        .filter(|p| p.len() == sys.n())
        .cloned()
        .collect();
    let mut queries = 0;
    for iter in 0..cfg.max_refine_iters {
        let active = select_negatives(&current, &pool, cfg.max_negatives);
        let Some(candidate) = largest_empty_box(&current, &active, cfg.margin)? else {
            break;
        };
        queries += 1;
        if check_containment_with(sys, &candidate, target, cfg.eps_round)? {
            return Ok(UnderResult {
                set: candidate,
                method: UnderMethod::Leb,
                validated: true,
                queries,
            });
        }
        // shrink to the positives seen inside the failed candidate, then
        // search again among the negatives that remain inside
        let seed = derive_seed(derive_seed(cfg.seed, LEB_TAG), iter as u64);
        let labeled = sample_and_label(sys, &candidate, target, cfg.sample_count, seed)?;
        pool.extend(labeled.negatives);
        let Some(shrunk) = bounding_box(&labeled.positives) else {
            break;
        };
        current = shrunk;
    }
    Ok(UnderResult::failed(sys.n(), UnderMethod::Leb, queries))
}

/// Runs the chosen method. For [`UnderChoice::Best`], all three run (LEB on
/// ICH's negatives) and the largest certified box by normalized perimeter
/// relative to `over` wins; ties keep the earlier of gss, ich, leb.
pub fn under_approximate(
    sys: &SystemSpec,
    over: &Hyperrect,
    target: &Hyperrect,
    choice: UnderChoice,
    cfg: &UnderConfig,
) -> Result<UnderResult> {
    match choice {
        UnderChoice::Gss => under_gss(sys, over, target, cfg),
        UnderChoice::Ich => under_ich(sys, over, target, cfg).map(|(r, _)| r),
        UnderChoice::Leb => {
            let (_, negatives) = under_ich(sys, over, target, cfg)?;
            under_leb(sys, over, target, &negatives, cfg)
        }
        UnderChoice::Best => {
            let gss = under_gss(sys, over, target, cfg)?;
            let (ich, negatives) = under_ich(sys, over, target, cfg)?;
            let leb = under_leb(sys, over, target, &negatives, cfg)?;
            let mut best: Option<UnderResult> = None;
            for r in [gss, ich, leb].into_iter().filter(|r| r.validated) {
                let better = match &best {
                    None => true,
                    Some(b) => r.set.normalized_perimeter(over) > b.set.normalized_perimeter(over),
                };
                if better {
                    best = Some(r);
                }
            }
            Ok(best.unwrap_or_else(|| UnderResult::failed(sys.n(), UnderMethod::Gss, 0)))
        }
    }
}

/// `sum_i (hi_i - lo_i) / width_i(over)` over non-degenerate sides of `over`.
pub fn leb_objective(candidate: &Hyperrect, over: &Hyperrect) -> f64 {
    candidate.normalized_perimeter(over)
}

struct Node {
    bound: f64,
    seq: u64,
    lo: Vec<f64>,
    hi: Vec<f64>,
    next: usize,
}

impl PartialEq for Node {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Node {}

impl PartialOrd for Node {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Node {
    fn cmp(&self, other: &Self) -> Ordering {
        self.bound
            .total_cmp(&other.bound)
            .then_with(|| other.seq.cmp(&self.seq))
    }
}

fn excludes(lo: &[f64], hi: &[f64], p: &[f64], margin: f64) -> bool {
    (0..lo.len()).any(|i| hi[i] <= p[i] - margin || lo[i] >= p[i] + margin)
}

/// Exact largest-empty-box search.
///
/// Maximizes [`leb_objective`] over boxes `lo <= hi` inside `over` such that
/// every point `p` is excluded along some axis `i`, either `hi_i <= p_i - margin`
/// or `lo_i >= p_i + margin`. Each point is branched on its `2n` possible
/// exclusions; a partial assignment is just `over` clipped by the chosen
/// faces, and its objective bounds every completion, so best-first order
/// returns an optimum as soon as a complete assignment is popped.
/// Returns `None` when no box satisfies all exclusions.
pub fn largest_empty_box(
    over: &Hyperrect,
    points: &[Vec<f64>],
    margin: f64,
) -> Result<Option<Hyperrect>> {
    let base = over.require_intervals()?;
    for p in points {
        check_dim(base.len(), p.len())?;
    }
    let widths: Vec<f64> = base.iter().map(Interval::width).collect();
    let objective = |lo: &[f64], hi: &[f64]| -> f64 {
        (0..lo.len())
            .filter(|&i| widths[i] > 0.0)
            .map(|i| (hi[i] - lo[i]) / widths[i])
            .sum()
    };

    let lo: Vec<f64> = base.iter().map(Interval::lo).collect();
    let hi: Vec<f64> = base.iter().map(Interval::hi).collect();
    let mut heap = BinaryHeap::new();
    let mut seq = 0u64;
    heap.push(Node {
        bound: objective(&lo, &hi),
        seq,
        lo,
        hi,
        next: 0,
    });

    while let Some(mut node) = heap.pop() {
        while node.next < points.len() && excludes(&node.lo, &node.hi, &points[node.next], margin) {
            node.next += 1;
        }
        if node.next == points.len() {
            return Hyperrect::from_bounds(&node.lo, &node.hi).map(Some);
        }
        let p = &points[node.next];
        for i in 0..p.len() {
            for upper_face in [true, false] {
                let (mut lo, mut hi) = (node.lo.clone(), node.hi.clone());
                if upper_face {
                    hi[i] = hi[i].min(p[i] - margin);
                } else {
                    lo[i] = lo[i].max(p[i] + margin);
                }
                if lo[i] > hi[i] {
                    continue;
                }
                seq += 1;
                heap.push(Node {
                    bound: objective(&lo, &hi),
                    seq,
                    lo,
                    hi,
                    next: node.next + 1,
                });
            }
        }
    }
    Ok(None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    fn bx(lo: f64, hi: f64) -> Hyperrect {
        Hyperrect::from_bounds(&[lo], &[hi]).unwrap()
    }

    fn ends(b: &Hyperrect) -> (f64, f64) {
        let v = b.intervals().unwrap();
        (v[0].lo(), v[0].hi())
    }

    #[test]
    fn containment_examples() {
        let drift = fixtures::identity_1d(0.1);
        assert!(check_containment(&drift, &bx(-0.5, 0.5), &bx(-1.0, 1.0)).unwrap());
        assert!(!check_containment(&drift, &bx(-1.0, 1.0), &bx(-1.0, 1.0)).unwrap());

        // the image is exactly [-0.3, 0.3]; the default rounding slack pushes
        // it just outside
        let c = fixtures::contraction_1d();
        let g = bx(-0.3, 0.3);
        assert!(check_containment_with(&c, &bx(-0.58, 0.58), &g, 0.0).unwrap());
        assert!(!check_containment(&c, &bx(-0.58, 0.58), &g).unwrap());
        assert!(check_containment(&c, &bx(-0.58 + 1e-8, 0.58 - 1e-8), &g).unwrap());
    }

    #[test]
    fn gss_matches_must_preimage() {
        let sys = fixtures::identity_1d(0.1);
        let cfg = UnderConfig::default();
        let r = under_gss(&sys, &bx(-1.1, 1.1), &bx(-1.0, 1.0), &cfg).unwrap();
        assert!(r.validated);
        let (lo, hi) = ends(&r.set);
        let tol = cfg.rho_tol * 1.1 + 1e-6;
        assert!(
            (lo + 0.9).abs() <= tol && (hi - 0.9).abs() <= tol,
            "{}",
            r.set
        );
    }

    #[test]
    fn gss_whole_box_and_failure() {
        let sys = fixtures::identity_1d(0.1);
        let cfg = UnderConfig::default();
        let r = under_gss(&sys, &bx(-1.1, 1.1), &bx(-5.0, 5.0), &cfg).unwrap();
        assert!(r.validated);
        assert_eq!(r.set, bx(-1.1, 1.1));

        let r = under_gss(&sys, &bx(-1.1, 1.1), &bx(0.5, 1.0), &cfg).unwrap();
        assert!(!r.validated && r.set.is_empty());
    }

    #[test]
    fn ich_examples() {
        let sys = fixtures::identity_1d(0.1);
        let cfg = UnderConfig::default();
        let (r, negatives) = under_ich(&sys, &bx(-1.1, 1.1), &bx(-1.0, 1.0), &cfg).unwrap();
        assert!(r.validated);
        assert!(bx(-0.9, 0.9).contains(&r.set).unwrap());
        let (lo, hi) = ends(&r.set);
        assert!(lo < -0.85 && hi > 0.85);
        assert!(!negatives.is_empty());
        assert!(negatives.iter().all(|p| p[0].abs() > 0.9 - 1e-12));

        let (r, _) = under_ich(&sys, &bx(-1.1, 1.1), &bx(3.0, 4.0), &cfg).unwrap();
        assert!(!r.validated && r.set.is_empty());

        let ident = fixtures::identity_1d(0.0);
        let (r, negatives) = under_ich(&ident, &bx(-0.5, 0.5), &bx(-1.0, 1.0), &cfg).unwrap();
        assert!(r.validated && negatives.is_empty());
        assert_eq!(r.queries, 1);
    }

    #[test]
    fn leb_worked_instance() {
        let over = Hyperrect::from_bounds(&[0.0, 0.0], &[1.0, 1.0]).unwrap();
        let b = largest_empty_box(&over, &[vec![0.5, 0.9]], 0.0)
            .unwrap()
            .unwrap();
        assert_eq!(b, Hyperrect::from_bounds(&[0.0, 0.0], &[1.0, 0.9]).unwrap());
        assert_eq!(leb_objective(&b, &over), 1.9);
    }

    #[test]
    fn leb_degenerate_cases() {
        let over = Hyperrect::from_bounds(&[0.0, 0.0], &[1.0, 1.0]).unwrap();
        assert_eq!(largest_empty_box(&over, &[], 1e-9).unwrap().unwrap(), over);
        assert!(largest_empty_box(&over, &[vec![0.5, 0.5]], 1.0)
            .unwrap()
            .is_none());

        let sys = fixtures::identity_1d(0.1);
        let r = under_leb(
            &sys,
            &bx(-1.1, 1.1),
            &bx(-1.0, 1.0),
            &[vec![0.0]],
            &UnderConfig {
                margin: 2.0,
                ..UnderConfig::default()
            },
        )
        .unwrap();
        assert!(!r.validated && r.set.is_empty());
    }

    #[test]
    fn leb_refines_to_certified_box() {
        let sys = fixtures::identity_1d(0.1);
        let cfg = UnderConfig::default();
        let (_, negatives) = under_ich(&sys, &bx(-1.1, 1.1), &bx(-1.0, 1.0), &cfg).unwrap();
        let r = under_leb(&sys, &bx(-1.1, 1.1), &bx(-1.0, 1.0), &negatives, &cfg).unwrap();
        assert!(r.validated);
        assert!(bx(-0.9, 0.9).contains(&r.set).unwrap());
    }

    #[test]
    fn best_keeps_largest() {
        let sys = fixtures::identity_1d(0.1);
        let cfg = UnderConfig::default();
        let over = bx(-1.1, 1.1);
        let target = bx(-1.0, 1.0);
        let best = under_approximate(&sys, &over, &target, UnderChoice::Best, &cfg).unwrap();
        assert!(best.validated);
        for choice in [UnderChoice::Gss, UnderChoice::Ich, UnderChoice::Leb] {
            let r = under_approximate(&sys, &over, &target, choice, &cfg).unwrap();
            assert!(r.set.normalized_perimeter(&over) <= best.set.normalized_perimeter(&over));
        }
    }

    #[test]
    fn config_validation() {
        let bad = UnderConfig {
            rho_tol: 0.5,
            ..UnderConfig::default()
        };
        assert!(bad.validate().is_err());
        let bad = UnderConfig {
            sample_count: 5,
            ..UnderConfig::default()
        };
        assert!(bad.validate().is_err());
        assert_eq!("leb".parse::<UnderChoice>().unwrap(), UnderChoice::Leb);
        assert!("foo".parse::<UnderChoice>().is_err());
    }
}
