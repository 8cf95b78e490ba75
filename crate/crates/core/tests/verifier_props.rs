mod common;

use common::bx;
use fabre_core::forward::{draw_trajectory_inputs, simulate};
use fabre_core::verifier::{verify, verify_avoid, verify_reach, FabreConfig, Verdict};
use fabre_core::{fixtures, SystemSpec};

fn simulations(sys: &SystemSpec, samples: u64) -> impl Iterator<Item = Vec<Vec<f64>>> + '_ {
    (0..samples).map(move |i| {
        let (x0, eps) = draw_trajectory_inputs(sys, 99, i);
        simulate(sys, &x0, &eps).unwrap()
    })
}

#[test]
fn verified_reach_holds_at_reported_step() {
    for sys in [fixtures::contraction_1d(), fixtures::double_integrator()] {
        let report = verify_reach(&sys, &FabreConfig::for_system(&sys)).unwrap();
        assert_eq!(report.verdict, Verdict::Verified);
        let t = report.reach_step.unwrap();
        assert!(report
            .notes
            .iter()
            .any(|n| n.contains(&format!("uniform step t = {t}"))));
        for states in simulations(&sys, 20_000) {
            assert!(sys.goal().contains_point(&states[t]), "{:?}", states[t]);
        }
    }
}

#[test]
fn verified_avoid_is_never_entered() {
    let safe = fixtures::contraction_with_avoid(bx(&[1.2], &[1.5]));
    for sys in [fixtures::double_integrator(), safe] {
        let report = verify_avoid(&sys, &FabreConfig::for_system(&sys)).unwrap();
        assert_eq!(report.verdict, Verdict::Verified);
        for states in simulations(&sys, 20_000) {
            assert!(states
                .iter()
                .all(|x| sys.avoid().iter().all(|a| !a.contains_point(x))));
        }
    }
}

#[test]
fn larger_budgets_keep_verified() {
    let sys = fixtures::double_integrator();
    let base = FabreConfig::for_system(&sys);
    assert_eq!(verify(&sys, &base).unwrap().verdict, Verdict::Verified);
    let mut bigger = base;
    bigger.bnb.max_boxes *= 2;
    bigger.under.sample_count *= 2;
    assert_eq!(verify(&sys, &bigger).unwrap().verdict, Verdict::Verified);
}

#[test]
fn counterexamples_replay() {
    let sys = fixtures::contraction_with_avoid(bx(&[0.4], &[0.6]));
    let report = verify_avoid(&sys, &FabreConfig::for_system(&sys)).unwrap();
    assert_eq!(report.verdict, Verdict::Falsified);
    assert!(report.counterexample.unwrap().replays(&sys));
}
