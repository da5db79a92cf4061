mod common;

use std::collections::BTreeMap;
use std::fs;

use fractackle::harness::{generate, random_dataset_specs, random_spec, roster, worked_example_spec};
use fractackle::types::PlayKey;
use fractackle::valuation::CaseTag;

#[test]
fn pipeline_matches_oracle_on_random_plays() {
    let dir = tempfile::tempdir().unwrap();
    let run = common::run_specs(&random_dataset_specs(2024, 1000, 1.5), dir.path());
    let windows = common::compare(&run, 1e-9).unwrap();
    assert!(windows > 500, "{windows}");

    // Every valuation case is exercised.
    let mut cases: BTreeMap<&str, usize> = BTreeMap::new();
    for v in run.output.plays.iter().flat_map(|p| &p.values) {
        *cases.entry(v.case.as_str()).or_default() += 1;
    }
    for c in [
        CaseTag::Plain,
        CaseTag::PeakInside,
        CaseTag::FullRecovery,
        CaseTag::PartialRecovery,
        CaseTag::DegeneratePeak,
    ] {
        assert!(cases.contains_key(c.as_str()), "{cases:?}");
    }
}

#[test]
fn seed_42_matches_sidecar() {
    let a = roster("AAA", 1000);
    let b = roster("BBB", 2000);
    let spec = random_spec(42, PlayKey::new(1, 1), 1, &a, &b, 1.5);
    let dir = tempfile::tempdir().unwrap();
    let run = common::run_specs(&[spec], dir.path());
    common::compare(&run, 1e-9).unwrap();
}

#[test]
fn worked_example_through_files() {
    let dir = tempfile::tempdir().unwrap();
    let run = common::run_specs(&[worked_example_spec()], dir.path());
    common::compare(&run, 1e-9).unwrap();
    let play = &run.output.plays[0];
    assert_eq!(play.track.len(), 59);
    assert_eq!(play.windows.len(), 3);
    let w: Vec<f64> = play.values.iter().map(|v| v.w).collect();
    assert_eq!(w[0], 0.0);
    assert!((w[1] - 0.056).abs() < 0.0005);
    assert!((w[2] - 0.724).abs() < 0.0005);
}

#[test]
fn generation_is_deterministic() {
    let specs = random_dataset_specs(9, 60, 1.5);
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    generate(&specs, a.path()).unwrap();
    generate(&random_dataset_specs(9, 60, 1.5), b.path()).unwrap();
    let mut names: Vec<_> = fs::read_dir(a.path())
        .unwrap()
        .map(|e| e.unwrap().file_name())
        .collect();
    names.sort();
    assert_eq!(names.len(), 15);
    for n in names {
        assert_eq!(
            fs::read(a.path().join(&n)).unwrap(),
            fs::read(b.path().join(&n)).unwrap(),
            "{n:?}"
        );
    }
}

#[test]
fn no_contact_means_empty_sidecar() {
    let mut spec = worked_example_spec();
    for d in &mut spec.defender_scripts {
        for o in &mut d.offsets {
            o.dx = -5.0;
        }
    }
    spec.planned_windows.clear();
    spec.planned_landmarks.clear();
    let dir = tempfile::tempdir().unwrap();
    let truth = generate(&[spec], dir.path()).unwrap();
    assert!(truth.plays[0].outcome.windows.is_empty());
    let run = common::run_specs(&[], tempfile::tempdir().unwrap().path());
    assert!(run.output.plays.is_empty());
}
