use std::collections::BTreeSet;
use std::fs;
use std::path::Path;

use fractackle::harness::{generate, random_spec, roster, worked_example_spec, SyntheticPlaySpec, SyntheticPlayer};
use fractackle::ingest::{filter_rb_runs, load_dataset, mirror_frame, standardize_frame, IngestConfig, TrackingFrame};
use fractackle::kinematics::build_track;
use fractackle::types::{PlayDirection, PlayKey, Position, TeamCode};
use fractackle::Error;
use proptest::prelude::*;

fn weeks(ws: &[u8]) -> BTreeSet<u8> {
    ws.iter().copied().collect()
}

fn three_plays() -> Vec<SyntheticPlaySpec> {
    let a = roster("AAA", 1000);
    let b = roster("BBB", 2000);
    (1..=3)
        .map(|i| random_spec(i, PlayKey::new(77, i as u32), 1, &a, &b, 1.5))
        .collect()
}

fn edit(path: &Path, f: impl FnOnce(String) -> String) {
    let text = fs::read_to_string(path).unwrap();
    fs::write(path, f(text)).unwrap();
}

fn check_counts(ds: &fractackle::ingest::Dataset, dir: &Path) {
    for r in &ds.report.files {
        let raw = fs::read_to_string(dir.join(&r.file)).unwrap().lines().count() as u64 - 1;
        assert_eq!(r.rows, raw, "{}", r.file);
        assert_eq!(r.accepted + r.rejected, r.rows, "{}", r.file);
    }
}

#[test]
fn malformed_x_rejects_one_row_and_its_play() {
    let dir = tempfile::tempdir().unwrap();
    generate(&three_plays(), dir.path()).unwrap();
    let tracking = dir.path().join("tracking_week_1.csv");
    edit(&tracking, |t| {
        let mut lines: Vec<String> = t.lines().map(String::from).collect();
        // A player row of play 77-2 at its third frame.
        let idx = lines.iter().position(|l| l.starts_with("77,2,1002,")).unwrap() + 2 * 23;
        let mut cells: Vec<String> = lines[idx].split(',').map(String::from).collect();
        cells[7] = "12..5".into();
        lines[idx] = cells.join(",");
        lines.join("\n") + "\n"
    });
    let ds = load_dataset(dir.path(), &weeks(&[1]), &IngestConfig::default()).unwrap();
    check_counts(&ds, dir.path());
    let rejected: Vec<_> = ds.report.rejects.iter().filter(|r| r.line.is_some()).collect();
    assert_eq!(rejected.len(), 1);
    assert_eq!(rejected[0].file, "tracking_week_1.csv");
    assert!(rejected[0].line.unwrap() > 1);

    let filtered = filter_rb_runs(&ds, &IngestConfig::default());
    let kept: Vec<PlayKey> = filtered.plays.iter().map(|p| p.key()).collect();
    assert_eq!(kept, vec![PlayKey::new(77, 1), PlayKey::new(77, 3)]);
    assert_eq!(filtered.rejects.len(), 1);
    assert_eq!(filtered.rejects[0].play_key.as_deref(), Some("77-2"));
    assert!(filtered.rejects[0].reason.starts_with("player_count"));
}

#[test]
fn header_only_tracking_gives_empty_dataset() {
    let dir = tempfile::tempdir().unwrap();
    generate(&three_plays(), dir.path()).unwrap();
    edit(&dir.path().join("tracking_week_1.csv"), |t| {
        t.lines().next().unwrap().to_string() + "\n"
    });
    let ds = load_dataset(dir.path(), &weeks(&[1]), &IngestConfig::default()).unwrap();
    assert_eq!(ds.frame_count(), 0);
    assert!(ds.report.rejects.is_empty());
    assert!(filter_rb_runs(&ds, &IngestConfig::default()).plays.is_empty());
}

#[test]
fn missing_file_and_column_are_fatal() {
    let dir = tempfile::tempdir().unwrap();
    generate(&three_plays(), dir.path()).unwrap();
    fs::remove_file(dir.path().join("tracking_week_2.csv")).unwrap();
    assert!(matches!(
        load_dataset(dir.path(), &weeks(&[1, 2]), &IngestConfig::default()),
        Err(Error::MissingFile(_))
    ));
    edit(&dir.path().join("plays.csv"), |t| {
        t.replacen("ballCarrierId", "carrier", 1)
    });
    assert!(matches!(
        load_dataset(dir.path(), &weeks(&[1]), &IngestConfig::default()),
        Err(Error::MissingColumn { .. })
    ));
}

#[test]
fn duplicate_rows_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    generate(&three_plays(), dir.path()).unwrap();
    edit(&dir.path().join("tracking_week_1.csv"), |t| {
        let dup = t.lines().nth(5).unwrap().to_string();
        format!("{t}{dup}\n")
    });
    edit(&dir.path().join("players.csv"), |t| {
        let dup = t.lines().nth(1).unwrap().to_string();
        format!("{t}{dup}\n")
    });
    let ds = load_dataset(dir.path(), &weeks(&[1]), &IngestConfig::default()).unwrap();
    check_counts(&ds, dir.path());
    assert_eq!(ds.report.rejects.len(), 2);
    assert!(ds.report.rejects.iter().all(|r| r.reason.starts_with("duplicate_key")));
    assert_eq!(filter_rb_runs(&ds, &IngestConfig::default()).plays.len(), 3);
}

#[test]
fn filter_keeps_only_running_back_rushes() {
    let a = roster("AAA", 1000);
    let b = roster("BBB", 2000);
    let mut specs: Vec<SyntheticPlaySpec> = (1..=4)
        .map(|i| random_spec(10 + i, PlayKey::new(5, i as u32), 2, &a, &b, 1.5))
        .collect();
    specs[2].carrier = SyntheticPlayer::new(1999, "AAA Scrambler", Position::QB);
    let dir = tempfile::tempdir().unwrap();
    generate(&specs, dir.path()).unwrap();
    // Play 4 becomes a pass: the running back is targeted, no handoff.
    edit(&dir.path().join("tracking_week_2.csv"), |t| {
        t.lines()
            .map(|l| {
                if l.starts_with("5,4,") {
                    l.replace(",handoff", ",pass_forward")
                } else {
                    l.to_string()
                }
            })
            .collect::<Vec<_>>()
            .join("\n")
            + "\n"
    });
    let ds = load_dataset(dir.path(), &weeks(&[2]), &IngestConfig::default()).unwrap();
    assert!(ds.plays.values().filter(|p| p.is_rush).count() == 3);
    let kept: Vec<PlayKey> = filter_rb_runs(&ds, &IngestConfig::default())
        .plays
        .iter()
        .map(|p| p.key())
        .collect();
    assert_eq!(kept, vec![PlayKey::new(5, 1), PlayKey::new(5, 2)]);
}

#[test]
fn explicit_rush_column_wins() {
    let dir = tempfile::tempdir().unwrap();
    generate(&three_plays(), dir.path()).unwrap();
    edit(&dir.path().join("plays.csv"), |t| {
        t.lines()
            .enumerate()
            .map(|(i, l)| match i {
                0 => format!("{l},isRush"),
                1 => format!("{l},FALSE"),
                _ => format!("{l},TRUE"),
            })
            .collect::<Vec<_>>()
            .join("\n")
            + "\n"
    });
    let ds = load_dataset(dir.path(), &weeks(&[1]), &IngestConfig::default()).unwrap();
    let kept: Vec<PlayKey> = filter_rb_runs(&ds, &IngestConfig::default())
        .plays
        .iter()
        .map(|p| p.key())
        .collect();
    assert_eq!(kept, vec![PlayKey::new(77, 2), PlayKey::new(77, 3)]);
}

#[test]
fn zero_rush_plays_gives_empty_list() {
    let dir = tempfile::tempdir().unwrap();
    generate(&three_plays(), dir.path()).unwrap();
    edit(&dir.path().join("tracking_week_1.csv"), |t| {
        t.replace(",handoff", ",NA")
    });
    let ds = load_dataset(dir.path(), &weeks(&[1]), &IngestConfig::default()).unwrap();
    assert!(filter_rb_runs(&ds, &IngestConfig::default()).plays.is_empty());
}

#[test]
fn accepted_plays_cover_snap_to_end() {
    let dir = tempfile::tempdir().unwrap();
    let specs = fractackle::harness::random_dataset_specs(3, 40, 1.5);
    generate(&specs, dir.path()).unwrap();
    let ds = load_dataset(dir.path(), &(1..=9).collect(), &IngestConfig::default()).unwrap();
    check_counts(&ds, dir.path());
    let filtered = filter_rb_runs(&ds, &IngestConfig::default());
    assert_eq!(filtered.plays.len(), 40);
    for (p, spec) in filtered.plays.iter().zip({
        let mut s = specs.clone();
        s.sort_by_key(|s| s.key);
        s
    }) {
        assert_eq!((p.snap_frame, p.end_frame), (spec.snap_frame, spec.end_frame));
        for f in p.snap_frame..=p.end_frame {
            assert!(p.carrier_at(f).is_some());
        }
        assert!(p
            .frames
            .values()
            .flatten()
            .all(|r| r.play_direction == PlayDirection::Right));
        assert_eq!(build_track(p).unwrap().len(), spec.frames());
    }
}

#[test]
fn left_play_monotonicity_flips() {
    let spec = worked_example_spec();
    let realized = fractackle::harness::realize(&spec).unwrap();
    let carrier: Vec<&TrackingFrame> = realized
        .rows
        .iter()
        .filter(|r| r.nfl_id == Some(spec.carrier.id))
        .collect();
    let raw_nonincreasing = carrier.windows(2).all(|w| w[1].x <= w[0].x);
    let std: Vec<TrackingFrame> = carrier.iter().map(|r| standardize_frame(r)).collect();
    let std_nondecreasing = std.windows(2).all(|w| w[1].x >= w[0].x);
    assert!(raw_nonincreasing);
    assert_eq!(raw_nonincreasing, std_nondecreasing);
}

#[test]
fn constant_velocity_track() {
    let mut spec = worked_example_spec();
    spec.direction = PlayDirection::Right;
    spec.snap_frame = 1;
    spec.end_frame = 20;
    spec.carrier_path = vec![fractackle::harness::VelocityKnot {
        frame: 1,
        vx: 4.0,
        vy: 0.0,
    }];
    for d in &mut spec.defender_scripts {
        d.offsets.retain(|o| o.frame <= 20);
        for o in &mut d.offsets {
            o.dx = -4.0 - o.dx.abs();
        }
    }
    spec.planned_windows.clear();
    spec.planned_landmarks.clear();
    spec.end_event = "out_of_bounds".into();
    let dir = tempfile::tempdir().unwrap();
    generate(&[spec], dir.path()).unwrap();
    let ds = load_dataset(dir.path(), &weeks(&[1]), &IngestConfig::default()).unwrap();
    let plays = filter_rb_runs(&ds, &IngestConfig::default()).plays;
    let track = build_track(&plays[0]).unwrap();
    assert_eq!(track.len(), 20);
    for v in track.velocities() {
        assert!((v - 4.0).abs() < 1e-12);
    }
}

#[test]
fn snap_that_ends_the_play_gives_one_frame() {
    let mut spec = worked_example_spec();
    spec.snap_frame = 64;
    spec.planned_windows = vec![fractackle::harness::PlannedWindow {
        start_frame: 64,
        end_frame: 64,
        defenders: vec![vec![30, 41]],
    }];
    spec.planned_landmarks.clear();
    let dir = tempfile::tempdir().unwrap();
    generate(&[spec], dir.path()).unwrap();
    // The ball row carries the snap on the tackle frame.
    edit(&dir.path().join("tracking_week_1.csv"), |t| {
        t.lines()
            .map(|l| {
                if l.contains(",NA,football,64,") {
                    l.replace(",tackle", ",ball_snap")
                } else {
                    l.to_string()
                }
            })
            .collect::<Vec<_>>()
            .join("\n")
            + "\n"
    });
    edit(&dir.path().join("plays.csv"), |t| {
        let mut lines = t.lines();
        format!("{},isRush\n{},1\n", lines.next().unwrap(), lines.next().unwrap())
    });
    let ds = load_dataset(dir.path(), &weeks(&[1]), &IngestConfig::default()).unwrap();
    let filtered = filter_rb_runs(&ds, &IngestConfig::default());
    let plays = filtered.plays;
    assert_eq!(plays.len(), 1, "{:?}", filtered.rejects);
    assert_eq!((plays[0].snap_frame, plays[0].end_frame), (64, 64));
    assert_eq!(build_track(&plays[0]).unwrap().len(), 1);
}

fn any_frame() -> impl Strategy<Value = TrackingFrame> {
    (
        0.0f64..120.0,
        0.0f64..53.3,
        0.0f64..360.0,
        0.0f64..360.0,
        0.0f64..12.0,
        any::<bool>(),
    )
        .prop_map(|(x, y, o, dir, s, left)| TrackingFrame {
            game_id: 1,
            play_id: 1,
            nfl_id: Some(1),
            frame_id: 1,
            club: TeamCode::new("AAA").unwrap(),
            play_direction: if left {
                PlayDirection::Left
            } else {
                PlayDirection::Right
            },
            x,
            y,
            s,
            a: 0.0,
            dis: 0.0,
            o,
            dir,
            event: None,
        })
}

fn angle_close(a: f64, b: f64) -> bool {
    let d = (a - b).rem_euclid(360.0);
    d < 1e-9 || 360.0 - d < 1e-9
}

proptest! {
    #[test]
    fn mirror_is_an_involution(f in any_frame()) {
        let g = mirror_frame(&mirror_frame(&f));
        prop_assert!((g.x - f.x).abs() < 1e-9 && (g.y - f.y).abs() < 1e-9);
        prop_assert!(angle_close(g.o, f.o) && angle_close(g.dir, f.dir));
        prop_assert_eq!(g.play_direction, f.play_direction);
        prop_assert_eq!(g.s, f.s);
    }

    #[test]
    fn standardizing_preserves_distances(a in any_frame(), b in any_frame(), left in any::<bool>()) {
        let dir = if left { PlayDirection::Left } else { PlayDirection::Right };
        let (mut a, mut b) = (a, b);
        a.play_direction = dir;
        b.play_direction = dir;
        let (sa, sb) = (standardize_frame(&a), standardize_frame(&b));
        let before = (a.x - b.x).hypot(a.y - b.y);
        let after = (sa.x - sb.x).hypot(sa.y - sb.y);
        prop_assert!((before - after).abs() < 1e-9);
        prop_assert_eq!(sa.play_direction, PlayDirection::Right);
    }
}
