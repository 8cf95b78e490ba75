mod common;

use std::fs;

use common::fixtures_dir;
use fabre_core::fixtures;
use fabre_core::io::{load_system, write_system};

#[test]
fn shipped_files_match_builders() {
    let dir = fixtures_dir();
    assert_eq!(
        load_system(dir.join("identity.json")).unwrap(),
        fixtures::identity_1d(0.1)
    );
    assert_eq!(
        load_system(dir.join("contraction.json")).unwrap(),
        fixtures::contraction_1d()
    );
    let di = load_system(dir.join("double_integrator.json")).unwrap();
    assert_eq!(di, fixtures::double_integrator());
    assert_eq!(di.n(), 2);
    assert_eq!(di.dynamics()[0].affine, vec![0.0, 1.0]);
}

#[test]
fn write_then_load_round_trips() {
    let tmp = tempfile::tempdir().unwrap();
    for (name, sys) in [
        ("identity", fixtures::identity_1d(0.1)),
        ("contraction", fixtures::contraction_1d()),
        ("di", fixtures::double_integrator()),
    ] {
        let path = tmp.path().join(format!("{name}.json"));
        write_system(&sys, &path).unwrap();
        assert_eq!(load_system(&path).unwrap(), sys);
    }
}

fn load_edited(edits: &[(&str, &str)]) -> String {
    let tmp = tempfile::tempdir().unwrap();
    let dir = fixtures_dir();
    for f in [
        "double_integrator.json",
        "double_integrator_controller.json",
    ] {
        let text = edits
            .iter()
            .fold(fs::read_to_string(dir.join(f)).unwrap(), |t, (from, to)| {
                t.replace(from, to)
            });
        fs::write(tmp.path().join(f), text).unwrap();
    }
    load_system(tmp.path().join("double_integrator.json"))
        .unwrap_err()
        .to_string()
}

#[test]
fn load_errors_name_the_problem() {
    let msg = load_edited(&[("\"delta\": 0.1", "\"delta\": 0")]);
    assert!(msg.contains("delta must be positive"), "{msg}");

    // hidden layer becomes 3 x 2 while the readout still expects 4 inputs
    let msg = load_edited(&[
        (
            "[[1.0, 0.0], [-1.0, 0.0], [0.0, 1.0], [0.0, -1.0]]",
            "[[1.0, 0.0], [-1.0, 0.0], [0.0, 1.0]]",
        ),
        (
            "\"bias\": [0.0, 0.0, 0.0, 0.0]",
            "\"bias\": [0.0, 0.0, 0.0]",
        ),
    ]);
    assert!(msg.contains("layer 0") && msg.contains("layer 1"), "{msg}");

    let msg = load_edited(&[("\"steps\": 5", "\"steps\": 5, \"horizon\": 5")]);
    assert!(msg.contains("horizon") && msg.contains("line"), "{msg}");
}
