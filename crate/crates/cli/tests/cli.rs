use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use fractackle::config::fmt_sig;
use fractackle::harness::GroundTruth;

fn fractackle(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fractackle"))
        .args(args)
        .env_remove("FRACTACKLE_THREADS")
        .output()
        .expect("run binary")
}

fn ok(args: &[&str]) -> Output {
    let out = fractackle(args);
    assert!(
        out.status.success(),
        "{args:?}: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn synth(dir: &Path, plays: &str) -> String {
    let data = dir.join("data");
    let d = data.to_str().unwrap().to_string();
    ok(&[
        "synth",
        "--seed",
        "42",
        "--plays",
        plays,
        "--out-dir",
        &d,
        "--out",
        dir.join("synth-run").to_str().unwrap(),
    ]);
    d
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn credits_match_sidecar() {
    let tmp = tempfile::tempdir().unwrap();
    let data = synth(tmp.path(), "150");
    let out = tmp.path().join("out");
    ok(&["credit", "--data", &data, "--out", s(&out)]);

    let truth: GroundTruth =
        serde_json::from_str(&fs::read_to_string(Path::new(&data).join("ground_truth.json")).unwrap()).unwrap();
    let mut expected = vec!["playKey,windowIndex,defenderId,wPlayer,framesInvolved".to_string()];
    for p in &truth.plays {
        for c in &p.outcome.credits {
            expected.push(format!(
                "{},{},{},{},{}",
                p.play_key,
                c.index,
                c.defender_id,
                fmt_sig(c.w_player),
                c.frames_involved
            ));
        }
    }
    let csv = fs::read_to_string(out.join("credits.csv")).unwrap();
    let got: Vec<&str> = csv.lines().collect();
    assert!(expected.len() > 100);
    assert_eq!(got, expected);
}

#[test]
fn windows_match_sidecar() {
    let tmp = tempfile::tempdir().unwrap();
    let data = synth(tmp.path(), "60");
    let out = tmp.path().join("out");
    ok(&["windows", "--data", &data, "--out", s(&out), "--format", "json"]);
    let truth: GroundTruth =
        serde_json::from_str(&fs::read_to_string(Path::new(&data).join("ground_truth.json")).unwrap()).unwrap();
    let got: Vec<serde_json::Value> =
        serde_json::from_str(&fs::read_to_string(out.join("windows.json")).unwrap()).unwrap();
    let want: Vec<(String, usize, f64)> = truth
        .plays
        .iter()
        .flat_map(|p| {
            p.outcome
                .windows
                .iter()
                .map(move |w| (p.play_key.clone(), w.index, w.w))
        })
        .collect();
    assert_eq!(got.len(), want.len());
    for (g, (key, j, w)) in got.iter().zip(&want) {
        assert_eq!(g["playKey"], *key);
        assert_eq!(g["j"], *j);
        assert_eq!(fmt_sig(g["w"].as_f64().unwrap()), fmt_sig(*w));
    }
}

#[test]
fn top_zero_is_an_empty_table() {
    let tmp = tempfile::tempdir().unwrap();
    let data = synth(tmp.path(), "20");
    let out = tmp.path().join("out");
    ok(&["leaderboard", "--top", "0", "--data", &data, "--out", s(&out)]);
    let csv = fs::read_to_string(out.join("leaderboard.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1);
    assert!(csv.starts_with("rank,nflId,displayName"));
}

#[test]
fn leaderboard_respects_top_sort_and_min_plays() {
    let tmp = tempfile::tempdir().unwrap();
    let data = synth(tmp.path(), "80");
    let out = tmp.path().join("out");
    ok(&[
        "leaderboard",
        "--top",
        "5",
        "--sort",
        "average",
        "--min-plays",
        "10",
        "--data",
        &data,
        "--out",
        s(&out),
        "--format",
        "json",
    ]);
    let rows: Vec<serde_json::Value> =
        serde_json::from_str(&fs::read_to_string(out.join("leaderboard.json")).unwrap()).unwrap();
    assert_eq!(rows.len(), 5);
    for pair in rows.windows(2) {
        assert!(pair[0]["avgFT"].as_f64().unwrap() >= pair[1]["avgFT"].as_f64().unwrap());
    }
    assert!(rows.iter().all(|r| r["plays"].as_u64().unwrap() >= 10));
}

#[test]
fn usage_errors_exit_2() {
    let tmp = tempfile::tempdir().unwrap();
    let data = synth(tmp.path(), "5");
    let out = tmp.path().join("out");
    for args in [
        vec!["frobnicate"],
        vec!["leaderboard", "--bogus"],
        vec!["credit", "--out", s(&out)],
        vec!["credit", "--data", &data, "--percentile", "1.5", "--out", s(&out)],
        vec!["credit", "--data", &data, "--threshold", "-1", "--out", s(&out)],
        vec!["credit", "--data", &data, "--weeks", "0-12", "--out", s(&out)],
        vec!["credit", "--data", s(&tmp.path().join("nowhere")), "--out", s(&out)],
    ] {
        assert_eq!(fractackle(&args).status.code(), Some(2), "{args:?}");
    }
    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    assert!(manifest["status"]["usageError"].is_string());
}

#[test]
fn data_errors_exit_1() {
    let tmp = tempfile::tempdir().unwrap();
    let data = synth(tmp.path(), "5");
    fs::remove_file(Path::new(&data).join("tackles.csv")).unwrap();
    let out = tmp.path().join("out");
    let res = fractackle(&["credit", "--data", &data, "--out", s(&out)]);
    assert_eq!(res.status.code(), Some(1));
    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    assert!(manifest["status"]["dataError"]
        .as_str()
        .unwrap()
        .contains("tackles.csv"));

    let data = synth(&tmp.path().join("again"), "5");
    let res = fractackle(&["export-play", "--play", "1-1", "--data", &data, "--out", s(&out)]);
    assert_eq!(res.status.code(), Some(1));
}

#[test]
fn reruns_are_byte_identical() {
    let tmp = tempfile::tempdir().unwrap();
    let data = synth(tmp.path(), "40");
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    for out in [&a, &b] {
        for cmd in ["windows", "credit", "leaderboard", "validate", "calibrate"] {
            ok(&[cmd, "--data", &data, "--out", s(out)]);
        }
    }
    let files = |dir: &Path| -> BTreeMap<String, Vec<u8>> {
        fs::read_dir(dir)
            .unwrap()
            .map(|e| e.unwrap())
            .filter(|e| e.file_name() != "manifest.json")
            .map(|e| {
                (
                    e.file_name().to_string_lossy().into_owned(),
                    fs::read(e.path()).unwrap(),
                )
            })
            .collect()
    };
    let (fa, fb) = (files(&a), files(&b));
    assert!(fa.len() >= 9, "{:?}", fa.keys());
    assert_eq!(fa, fb);

    let threaded = tmp.path().join("threaded");
    let res = Command::new(env!("CARGO_BIN_EXE_fractackle"))
        .args(["credit", "--data", &data, "--out", s(&threaded)])
        .env("FRACTACKLE_THREADS", "1")
        .output()
        .unwrap();
    assert!(res.status.success());
    assert_eq!(fs::read(threaded.join("credits.csv")).unwrap(), fa["credits.csv"]);
}

#[test]
fn bad_thread_count_is_a_usage_error() {
    let res = Command::new(env!("CARGO_BIN_EXE_fractackle"))
        .args(["synth", "--plays", "1", "--out-dir", "unused"])
        .env("FRACTACKLE_THREADS", "zero")
        .current_dir(tempfile::tempdir().unwrap().path())
        .output()
        .unwrap();
    assert_eq!(res.status.code(), Some(2));
}

#[test]
fn flags_override_config_file() {
    let tmp = tempfile::tempdir().unwrap();
    let data = synth(tmp.path(), "10");
    let out = tmp.path().join("out");
    let manifest = |args: &[&str]| -> serde_json::Value {
        ok(args);
        serde_json::from_str(&fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap()
    };
    let from_file = manifest(&["credit", "--data", &data, "--out", s(&out)]);
    assert_eq!(from_file["config"]["threshold"], 1.5);
    let from_flag = manifest(&["credit", "--data", &data, "--out", s(&out), "--threshold", "2"]);
    assert_eq!(from_flag["config"]["threshold"], 2.0);
    assert_ne!(from_file["configHash"], from_flag["configHash"]);
    let conf = tmp.path().join("other.conf");
    fs::write(&conf, "percentile=0.9\nmin_plays=3\n").unwrap();
    let other = manifest(&["credit", "--data", &data, "--out", s(&out), "--config", s(&conf)]);
    assert_eq!(other["config"]["percentile"], 0.9);
    assert_eq!(other["config"]["threshold"], serde_json::Value::Null);
    assert_eq!(other["counts"]["plays"], 10);
}

#[test]
fn export_play_writes_the_track() {
    let tmp = tempfile::tempdir().unwrap();
    let data = synth(tmp.path(), "3");
    let out = tmp.path().join("out");
    let truth: GroundTruth =
        serde_json::from_str(&fs::read_to_string(Path::new(&data).join("ground_truth.json")).unwrap()).unwrap();
    let key = &truth.plays[0].play_key;
    ok(&["export-play", "--play", key, "--data", &data, "--out", s(&out)]);
    let csv = fs::read_to_string(out.join(format!("play_{key}.csv"))).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("frameId,x,y,vToward"));
    let frames: Vec<u32> = lines.map(|l| l.split(',').next().unwrap().parse().unwrap()).collect();
    assert!(!frames.is_empty());
    assert!(frames.windows(2).all(|w| w[1] == w[0] + 1));
}
