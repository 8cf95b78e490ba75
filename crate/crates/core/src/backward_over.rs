//! Bounding box of the one-step backward reachable set.
//!
//! The box bounds the per-coordinate minimum and maximum of `x` over all
//! states whose successor lands in the target for *some* admissible
//! perturbation. The optimization is solved by spatial branch-and-bound over
//! the analysis domain: a box is discarded as soon as its interval forward
//! image misses the target, accepted whole when its image lies inside the
//! target, and otherwise bisected until it reaches `width_tol`. The answer is
//! the hull of everything accepted.
//!
//! Boxes already inside the running hull are dropped unexplored. This never
//! changes the final hull, which makes the result independent of processing
//! order and lets the frontier be evaluated in parallel batches.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::forward::next_box_with;
use crate::geometry::{Hyperrect, DEFAULT_EPS_ROUND};
use crate::system::SystemSpec;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BnbConfig {
    /// Boxes whose widest side is at most this are accepted as leaves.
    pub width_tol: f64,
    /// Forward-image evaluations allowed before the frontier is hulled in.
    pub max_boxes: usize,
    pub eps_round: f64,
}

impl BnbConfig {
    pub const DEFAULT_MAX_BOXES: usize = 1_000_000;

    /// `width_tol = 1e-3 * (smallest side of the domain)`.
    pub fn for_domain(domain: &Hyperrect) -> Self {
        let base = domain.min_width();
        Self {
            width_tol: if base > 0.0 { 1e-3 * base } else { 1e-3 },
            max_boxes: Self::DEFAULT_MAX_BOXES,
            eps_round: DEFAULT_EPS_ROUND,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.width_tol > 0.0 && self.width_tol.is_finite()) {
            return Err(Error::InvalidConfig("width_tol must be positive".into()));
        }
        if self.max_boxes == 0 {
            return Err(Error::InvalidConfig("max_boxes must be at least 1".into()));
        }
        if !(self.eps_round >= 0.0 && self.eps_round.is_finite()) {
            return Err(Error::InvalidConfig(
                "eps_round must be non-negative".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BackwardOverResult {
    pub set: Hyperrect,
    /// False when the evaluation budget ran out; the set is then still an
    /// over-approximation, only looser.
    pub certified: bool,
    pub visited: usize,
}

struct Entry {
    width: f64,
    seq: u64,
    cell: Hyperrect,
}

impl PartialEq for Entry {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Entry {}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Entry {
    // widest first, then oldest
    fn cmp(&self, other: &Self) -> Ordering {
        self.width
            .total_cmp(&other.width)
            .then_with(|| other.seq.cmp(&self.seq))
    }
}

enum Verdict {
    Prune,
    Accept,
    Split,
}

struct Search<'a> {
    sys: &'a SystemSpec,
    target: &'a Hyperrect,
    cfg: &'a BnbConfig,
    frontier: BinaryHeap<Entry>,
    seq: u64,
    hull: Hyperrect,
    visited: usize,
    exhausted: bool,
}

impl<'a> Search<'a> {
    fn new(sys: &'a SystemSpec, target: &'a Hyperrect, cfg: &'a BnbConfig) -> Self {
        let mut search = Self {
            sys,
            target,
            cfg,
            frontier: BinaryHeap::new(),
            seq: 0,
            hull: Hyperrect::empty(sys.n()),
            visited: 0,
            exhausted: false,
        };
        search.push(sys.domain().clone());
        search
    }

    fn push(&mut self, cell: Hyperrect) {
        self.frontier.push(Entry {
            width: cell.max_width(),
            seq: self.seq,
            cell,
        });
        self.seq += 1;
    }

    /// Next cell worth evaluating. Once the budget is spent, remaining cells
    /// are absorbed into the hull unconditionally.
    fn next_cell(&mut self) -> Option<Hyperrect> {
        while let Some(Entry { cell, .. }) = self.frontier.pop() {
            if self.hull.contains(&cell).expect("same dimension") {
                continue;
            }
            if self.visited >= self.cfg.max_boxes {
                self.exhausted = true;
                self.absorb(&cell);
                continue;
            }
            self.visited += 1;
            return Some(cell);
        }
        None
    }

    fn classify(&self, cell: &Hyperrect) -> Result<Verdict> {
        let image = next_box_with(self.sys, cell, self.cfg.eps_round)?;
        Ok(if image.disjoint(self.target)? {
            Verdict::Prune
        } else if self.target.contains(&image)? || cell.max_width() <= self.cfg.width_tol {
            Verdict::Accept
        } else {
            Verdict::Split
        })
    }

    fn apply(&mut self, cell: Hyperrect, verdict: Verdict) {
        match verdict {
            Verdict::Prune => {}
            Verdict::Accept => self.absorb(&cell),
            Verdict::Split => {
                let (l, r) = cell.bisect().expect("frontier cells are non-empty");
                self.push(l);
                self.push(r);
            }
        }
    }

    fn absorb(&mut self, cell: &Hyperrect) {
        self.hull = self.hull.hull(cell).expect("same dimension");
    }

    fn finish(self) -> BackwardOverResult {
        BackwardOverResult {
            set: self.hull,
            certified: !self.exhausted,
            visited: self.visited,
        }
    }
}

fn check_inputs(sys: &SystemSpec, target: &Hyperrect, cfg: &BnbConfig) -> Result<()> {
    cfg.validate()?;
    check_dim(sys.n(), target.dim())?;
    let domain = sys.domain();
    if domain.is_empty() || !domain.is_finite() {
        return Err(Error::UnboundedDomain);
    }
    Ok(())
}

/// Over-approximates `{x in domain | exists eps in E: next(x, eps) in target}`
/// by a box.
pub fn backward_over_step(
    sys: &SystemSpec,
    target: &Hyperrect,
    cfg: &BnbConfig,
) -> Result<BackwardOverResult> {
    check_inputs(sys, target, cfg)?;
    if target.is_empty() {
        return Ok(BackwardOverResult {
            set: Hyperrect::empty(sys.n()),
            certified: true,
            visited: 0,
        });
    }
    let mut search = Search::new(sys, target, cfg);
    while let Some(cell) = search.next_cell() {
        let verdict = search.classify(&cell)?;
        search.apply(cell, verdict);
    }
    Ok(search.finish())
}

/// Same result as [`backward_over_step`], with forward images of each
/// frontier batch evaluated on the rayon pool.
pub fn backward_over_step_parallel(
    sys: &SystemSpec,
    target: &Hyperrect,
    cfg: &BnbConfig,
) -> Result<BackwardOverResult> {
    const BATCH: usize = 512;

    check_inputs(sys, target, cfg)?;
    if target.is_empty() {
        return Ok(BackwardOverResult {
            set: Hyperrect::empty(sys.n()),
            certified: true,
            visited: 0,
        });
    }
    let mut search = Search::new(sys, target, cfg);
    loop {
        let batch: Vec<Hyperrect> = std::iter::from_fn(|| search.next_cell())
            .take(BATCH)
            .collect();
        if batch.is_empty() {
            break;
        }
        let verdicts = batch
            .par_iter()
            .map(|cell| search.classify(cell))
            .collect::<Result<Vec<_>>>()?;
        for (cell, verdict) in batch.into_iter().zip(verdicts) {
            search.apply(cell, verdict);
        }
    }
    Ok(search.finish())
}

/// Backward chain from `target`: element 0 is the target itself and element
/// `k + 1` over-approximates the preimage of element `k`. Once a step comes
/// back empty, the remaining entries are empty as well.
pub fn backward_over_trajectory(
    sys: &SystemSpec,
    target: &Hyperrect,
    steps: usize,
    cfg: &BnbConfig,
) -> Result<Vec<BackwardOverResult>> {
    check_inputs(sys, target, cfg)?;
    let mut out = Vec::with_capacity(steps + 1);
    out.push(BackwardOverResult {
        set: target.clone(),
        certified: true,
        visited: 0,
    });
    for k in 0..steps {
        let prev = &out[k].set;
        let next = if prev.is_empty() {
            BackwardOverResult {
                set: Hyperrect::empty(sys.n()),
                certified: true,
                visited: 0,
            }
        } else {
            backward_over_step(sys, prev, cfg)?
        };
        out.push(next);
    }
    Ok(out)
}
