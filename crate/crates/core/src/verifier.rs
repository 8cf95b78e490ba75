//! Reach and avoid checks that split the horizon `T = F + B` into `F`
//! forward steps from the initial set and `B` backward steps from the goal
//! or avoid sets.
//!
//! Reach is certified when the forward set at time `F` lies inside a
//! certified inner box of the `k`-step backward set of the goal, for some
//! `k <= B`. Since box containment witnesses one time for the whole initial
//! set, a reach verdict certifies the uniform-time property.
//!
//! Avoid is certified when every forward set `Φ_t` (`t <= F`) is disjoint
//! from every outer backward set `Ψ_k` (`k <= B`) of each avoid box. Any
//! time `s <= T` splits as `s = t + k` with `t = min(s, F)`, so this covers
//! the whole horizon. Outer backward sets are computed inside the analysis
//! domain, so the avoid verdict additionally requires every forward set to
//! lie inside the domain and holds for trajectories that stay there.

use std::fmt;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::backward_over::{backward_over_step, backward_over_trajectory, BnbConfig};
use crate::backward_under::{under_approximate, UnderChoice, UnderConfig, UnderMethod};
use crate::error::{Error, Result};
use crate::forward::{falsify, forward_trajectory_with, Counterexample};
use crate::geometry::Hyperrect;
use crate::sampling::derive_seed;
use crate::system::SystemSpec;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FabreConfig {
    pub forward_steps: usize,
    pub backward_steps: usize,
    pub bnb: BnbConfig,
    pub under: UnderConfig,
    pub under_method: UnderChoice,
    /// Random trajectories tried when an avoid proof does not go through.
    pub falsify_samples: u64,
}

impl FabreConfig {
    pub const DEFAULT_FALSIFY_SAMPLES: u64 = 10_000;

    /// Defaults for `sys` with `F = T - floor(T / 2)` and `B = floor(T / 2)`.
    pub fn for_system(sys: &SystemSpec) -> Self {
        let b = sys.steps() / 2;
        Self::with_split(sys, sys.steps() - b, b)
    }

    pub fn with_split(sys: &SystemSpec, forward_steps: usize, backward_steps: usize) -> Self {
        Self {
            forward_steps,
            backward_steps,
            bnb: BnbConfig::for_domain(sys.domain()),
            under: UnderConfig::default(),
            under_method: UnderChoice::Best,
            falsify_samples: Self::DEFAULT_FALSIFY_SAMPLES,
        }
    }

    pub fn validate(&self, sys: &SystemSpec) -> Result<()> {
        if self.forward_steps + self.backward_steps != sys.steps() {
            return Err(Error::InvalidConfig(format!(
                "forward and backward steps must partition the horizon, T = F + B \
                 (got F = {}, B = {}, T = {})",
                self.forward_steps,
                self.backward_steps,
                sys.steps()
            )));
        }
        self.bnb.validate()?;
        self.under.validate()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Verified,
    Unknown,
    Falsified,
}

impl Verdict {
    /// Falsified dominates, then unknown.
    pub fn combine(self, other: Verdict) -> Verdict {
        use Verdict::*;
        match (self, other) {
            (Falsified, _) | (_, Falsified) => Falsified,
            (Verified, Verified) => Verified,
            _ => Unknown,
        }
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Verified => "verified",
            Verdict::Unknown => "unknown",
            Verdict::Falsified => "falsified",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Property {
    Reach,
    Avoid,
    ReachAvoid,
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct PhaseTimings {
    pub forward: Duration,
    pub backward_over: Duration,
    pub backward_under: Duration,
    pub falsify: Duration,
}

impl PhaseTimings {
    fn merge(self, other: PhaseTimings) -> PhaseTimings {
        PhaseTimings {
            forward: self.forward + other.forward,
            backward_over: self.backward_over + other.backward_over,
            backward_under: self.backward_under + other.backward_under,
            falsify: self.falsify + other.falsify,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct VerificationReport {
    pub verdict: Verdict,
    pub property: Property,
    /// Forward over-approximations at times `0..=F`.
    pub forward_sets: Vec<Hyperrect>,
    /// Outer backward boxes of the goal; entry `k` bounds the preimage of
    /// `under_sets[k - 1]`, and entry 0 is the goal itself.
    pub backward_sets: Vec<Hyperrect>,
    /// Certified inner backward boxes of the goal; entry 0 is the goal.
    pub under_sets: Vec<Hyperrect>,
    /// Method that produced each `under_sets[k]` for `k >= 1`.
    pub under_methods: Vec<Option<UnderMethod>>,
    /// Outer backward chains `Ψ_0..Ψ_B`, one per avoid box.
    pub avoid_backward_sets: Vec<Vec<Hyperrect>>,
    /// Time `F + k` at which reach was certified.
    pub reach_step: Option<usize>,
    pub counterexample: Option<Counterexample>,
    /// Every backward search finished within its budget and every inner
    /// box on the reach chain was validated.
    pub certified: bool,
    pub timings: PhaseTimings,
    pub notes: Vec<String>,
}

fn timed<T>(slot: &mut Duration, f: impl FnOnce() -> T) -> T {
    let start = Instant::now();
    let out = f();
    *slot += start.elapsed();
    out
}

const FALSIFY_TAG: u64 = 0xfa15;

pub fn verify_reach(sys: &SystemSpec, cfg: &FabreConfig) -> Result<VerificationReport> {
    cfg.validate(sys)?;
    let mut timings = PhaseTimings::default();
    let forward = timed(&mut timings.forward, || {
        forward_trajectory_with(sys, sys.init(), cfg.forward_steps, cfg.bnb.eps_round)
    })?;
    let reached = &forward.sets[cfg.forward_steps];

    let mut backward_sets = vec![sys.goal().clone()];
    let mut under_sets = vec![sys.goal().clone()];
    let mut under_methods = vec![None];
    let mut chain_ok = vec![true];
    for k in 0..cfg.backward_steps {
        let target = under_sets[k].clone();
        if target.is_empty() {
            backward_sets.push(Hyperrect::empty(sys.n()));
            under_sets.push(Hyperrect::empty(sys.n()));
            under_methods.push(None);
            chain_ok.push(false);
            continue;
        }
        let over = timed(&mut timings.backward_over, || {
            backward_over_step(sys, &target, &cfg.bnb)
        })?;
        let under_cfg = UnderConfig {
            seed: derive_seed(cfg.under.seed, k as u64),
            ..cfg.under
        };
        let under = timed(&mut timings.backward_under, || {
            under_approximate(sys, &over.set, &target, cfg.under_method, &under_cfg)
        })?;
        chain_ok.push(chain_ok[k] && over.certified && under.validated);
        backward_sets.push(over.set);
        under_methods.push(under.validated.then_some(under.method));
        under_sets.push(under.set);
    }

    let mut reach_step = None;
    for (k, under) in under_sets.iter().enumerate() {
        if chain_ok[k] && !under.is_empty() && under.contains(reached)? {
            reach_step = Some(cfg.forward_steps + k);
            break;
        }
    }

    let mut notes = Vec::new();
    if let Some(t) = reach_step {
        notes.push(format!("reach certified at uniform step t = {t}"));
    }
    let certified = chain_ok.iter().all(|&ok| ok);
    Ok(VerificationReport {
        verdict: if reach_step.is_some() {
            Verdict::Verified
        } else {
            Verdict::Unknown
        },
        property: Property::Reach,
        forward_sets: forward.sets,
        backward_sets,
        under_sets,
        under_methods,
        avoid_backward_sets: Vec::new(),
        reach_step,
        counterexample: None,
        certified,
        timings,
        notes,
    })
}

pub fn verify_avoid(sys: &SystemSpec, cfg: &FabreConfig) -> Result<VerificationReport> {
    cfg.validate(sys)?;
    let mut timings = PhaseTimings::default();
    let forward = timed(&mut timings.forward, || {
        forward_trajectory_with(sys, sys.init(), cfg.forward_steps, cfg.bnb.eps_round)
    })?;

    let mut certified = true;
    let mut avoid_backward_sets = Vec::with_capacity(sys.avoid().len());
    for a in sys.avoid() {
        let chain = timed(&mut timings.backward_over, || {
            backward_over_trajectory(sys, a, cfg.backward_steps, &cfg.bnb)
        })?;
        certified &= chain.iter().all(|r| r.certified);
        avoid_backward_sets.push(chain.into_iter().map(|r| r.set).collect::<Vec<_>>());
    }

    let mut notes = Vec::new();
    let mut separated = true;
    'pairs: for chain in &avoid_backward_sets {
        for (t, phi) in forward.sets.iter().enumerate() {
            for (k, psi) in chain.iter().enumerate() {
                if t + k <= sys.steps() && !phi.disjoint(psi)? {
                    separated = false;
                    break 'pairs;
                }
            }
        }
    }
    let needs_domain = cfg.backward_steps > 0 && !sys.avoid().is_empty();
    if needs_domain {
        let mut inside = true;
        for phi in &forward.sets {
            inside &= sys.domain().contains(phi)?;
        }
        if inside {
            notes.push("avoid verdict relative to the analysis domain".to_string());
        } else {
            notes.push(
                "forward set leaves the analysis domain; backward avoid sets do not apply"
                    .to_string(),
            );
            separated = false;
        }
    }

    let (verdict, counterexample) = if separated && certified {
        (Verdict::Verified, None)
    } else {
        let seed = derive_seed(cfg.under.seed, FALSIFY_TAG);
        match timed(&mut timings.falsify, || {
            falsify(sys, cfg.falsify_samples, seed)
        }) {
            Some(cex) => (Verdict::Falsified, Some(cex)),
            None => (Verdict::Unknown, None),
        }
    };

    Ok(VerificationReport {
        verdict,
        property: Property::Avoid,
        forward_sets: forward.sets,
        backward_sets: Vec::new(),
        under_sets: Vec::new(),
        under_methods: Vec::new(),
        avoid_backward_sets,
        reach_step: None,
        counterexample,
        certified,
        timings,
        notes,
    })
}

/// Joint reach-avoid check: verified iff both parts are, falsified if the
/// avoid part found a counterexample.
pub fn verify(sys: &SystemSpec, cfg: &FabreConfig) -> Result<VerificationReport> {
    cfg.validate(sys)?;
    let (avoid, reach) = rayon::join(|| verify_avoid(sys, cfg), || verify_reach(sys, cfg));
    Ok(merge(reach?, avoid?))
}

fn merge(reach: VerificationReport, avoid: VerificationReport) -> VerificationReport {
    let mut notes = reach.notes;
    notes.extend(avoid.notes);
    VerificationReport {
        verdict: reach.verdict.combine(avoid.verdict),
        property: Property::ReachAvoid,
        forward_sets: reach.forward_sets,
        backward_sets: reach.backward_sets,
        under_sets: reach.under_sets,
        under_methods: reach.under_methods,
        avoid_backward_sets: avoid.avoid_backward_sets,
        reach_step: reach.reach_step,
        counterexample: avoid.counterexample,
        certified: reach.certified && avoid.certified,
        timings: reach.timings.merge(avoid.timings),
        notes,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    fn bx(lo: f64, hi: f64) -> Hyperrect {
        Hyperrect::from_bounds(&[lo], &[hi]).unwrap()
    }

    fn with(sys: SystemSpec, edit: impl FnOnce(&mut crate::system::SystemParts)) -> SystemSpec {
        let mut p = sys.into_parts();
        edit(&mut p);
        SystemSpec::new(p).unwrap()
    }

    #[test]
    fn verdict_lattice() {
        use Verdict::*;
        assert_eq!(Verified.combine(Verified), Verified);
        assert_eq!(Unknown.combine(Falsified), Falsified);
        assert_eq!(Verified.combine(Falsified), Falsified);
        assert_eq!(Unknown.combine(Verified), Unknown);
    }

    #[test]
    fn direct_containment_without_any_steps() {
        let sys = with(fixtures::identity_1d(0.1), |p| p.steps = 1);
        let cfg = FabreConfig::with_split(&sys, 0, 1);
        let r = verify_reach(&sys, &cfg).unwrap();
        assert_eq!(r.verdict, Verdict::Verified);
        assert_eq!(r.reach_step, Some(0));
    }

    #[test]
    fn contraction_reach_one_one() {
        let sys = fixtures::contraction_1d();
        let cfg = FabreConfig::with_split(&sys, 1, 1);
        let r = verify_reach(&sys, &cfg).unwrap();
        assert_eq!(r.verdict, Verdict::Verified);
        assert_eq!(r.reach_step, Some(2));
        let phi = r.forward_sets[1].intervals().unwrap()[0];
        assert!((phi.hi() - 0.51).abs() < 1e-8);
        let over = r.backward_sets[1].intervals().unwrap()[0];
        assert!((over.hi() - 0.62).abs() < 0.01);
        let under = r.under_sets[1].intervals().unwrap()[0];
        assert!(under.hi() <= 0.58 && under.hi() > 0.57);
    }

    #[test]
    fn contraction_reach_small_goal_unknown() {
        let sys = with(fixtures::contraction_1d(), |p| p.goal = bx(-0.05, 0.05));
        let cfg = FabreConfig::with_split(&sys, 1, 1);
        let r = verify_reach(&sys, &cfg).unwrap();
        assert_eq!(r.verdict, Verdict::Unknown);
        let under = r.under_sets[1].intervals().unwrap()[0];
        assert!(under.hi() <= 0.08 && under.hi() > 0.079);
    }

    #[test]
    fn every_split_verifies_contraction() {
        let sys = fixtures::contraction_1d();
        for (f, b) in [(2, 0), (1, 1), (0, 2)] {
            let r = verify_reach(&sys, &FabreConfig::with_split(&sys, f, b)).unwrap();
            assert_eq!(r.verdict, Verdict::Verified, "split ({f}, {b})");
        }
    }

    #[test]
    fn avoid_examples() {
        let far = with(fixtures::identity_1d(0.1), |p| p.avoid = vec![bx(5.0, 6.0)]);
        for (f, b) in [(2, 0), (1, 1), (0, 2)] {
            let r = verify_avoid(&far, &FabreConfig::with_split(&far, f, b)).unwrap();
            assert_eq!(r.verdict, Verdict::Verified);
        }

        let overlap = with(fixtures::identity_1d(0.0), |p| p.avoid = vec![bx(0.0, 0.1)]);
        let r = verify_avoid(&overlap, &FabreConfig::for_system(&overlap)).unwrap();
        assert_eq!(r.verdict, Verdict::Falsified);
        let cex = r.counterexample.unwrap();
        assert_eq!(cex.step, 0);
        assert!(cex.replays(&overlap));

        let planted = fixtures::contraction_with_avoid(bx(0.4, 0.6));
        let r = verify_avoid(&planted, &FabreConfig::with_split(&planted, 1, 1)).unwrap();
        assert_eq!(r.verdict, Verdict::Falsified);
        assert!(r.counterexample.unwrap().replays(&planted));
    }

    #[test]
    fn joint_verdicts() {
        let both = with(fixtures::contraction_1d(), |p| p.avoid = vec![bx(5.0, 6.0)]);
        let r = verify(&both, &FabreConfig::with_split(&both, 1, 1)).unwrap();
        assert_eq!(r.verdict, Verdict::Verified);
        assert_eq!(r.property, Property::ReachAvoid);

        let bad = fixtures::contraction_with_avoid(bx(0.4, 0.6));
        let r = verify(&bad, &FabreConfig::with_split(&bad, 1, 1)).unwrap();
        assert_eq!(r.verdict, Verdict::Falsified);

        let small_goal = with(both, |p| p.goal = bx(-0.05, 0.05));
        let r = verify(&small_goal, &FabreConfig::with_split(&small_goal, 1, 1)).unwrap();
        assert_eq!(r.verdict, Verdict::Unknown);
    }

    #[test]
    fn rejects_bad_split() {
        let sys = fixtures::contraction_1d();
        let err = verify(&sys, &FabreConfig::with_split(&sys, 1, 2)).unwrap_err();
        assert!(err.to_string().contains("T = F + B"));
    }
}
