//! Browser bindings: simulate a run play, value hand-entered landmarks, and
//! replay the worked example at any contact distance.

use std::collections::BTreeMap;

use fractackle::harness::{random_spec, realize, roster, worked_example_spec, SyntheticPlaySpec};
use fractackle::ingest::{standardize, IngestConfig};
use fractackle::types::PlayKey;
use fractackle::valuation::{value_landmarks, Landmarks, DEFAULT_PEAK_EPSILON};
use fractackle::windows::{defender_positions, nearest_distance};
use fractackle::{process_play, PipelineConfig};
use serde::Serialize;
use wasm_bindgen::prelude::*;

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
struct WindowView {
    index: usize,
    start_frame: u32,
    end_frame: u32,
    v_start: f64,
    v_end: f64,
    v_pre: f64,
    v_post: Option<f64>,
    w: f64,
    case: &'static str,
}

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
struct CreditView {
    window: usize,
    defender_id: u32,
    name: String,
    position: String,
    w_player: f64,
    frames: usize,
}

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
struct PlayView {
    play_key: String,
    threshold: f64,
    frames: Vec<u32>,
    x: Vec<f64>,
    y: Vec<f64>,
    v_toward: Vec<f64>,
    nearest: Vec<Option<f64>>,
    windows: Vec<WindowView>,
    credits: Vec<CreditView>,
    total: f64,
}

fn finite(v: f64) -> Option<f64> {
    v.is_finite().then_some(v)
}

/// Realizes `spec` at its own scripted distance, then evaluates the play at
/// `threshold`.
fn evaluate(spec: &SyntheticPlaySpec, threshold: f64) -> Result<PlayView, String> {
    if !(threshold.is_finite() && threshold > 0.0) {
        return Err(format!("threshold must be positive, got {threshold}"));
    }
    let realized = realize(spec).map_err(|e| e.to_string())?;
    let play = standardize(&realized.meta, &realized.rows, &IngestConfig::default()).map_err(|e| e.to_string())?;
    let (result, rejects) = process_play(&play, &PipelineConfig::new(threshold));
    let result = result.ok_or_else(|| format!("{rejects:?}"))?;

    let names: BTreeMap<u32, (String, String)> = realized
        .players
        .iter()
        .map(|p| (p.nfl_id, (p.display_name.clone(), p.position.to_string())))
        .collect();
    let positions = defender_positions(&play, &result.track);
    let track = &result.track.points;

    Ok(PlayView {
        play_key: result.key.to_string(),
        threshold,
        frames: track.iter().map(|p| p.frame_id).collect(),
        x: track.iter().map(|p| p.x).collect(),
        y: track.iter().map(|p| p.y).collect(),
        v_toward: track.iter().map(|p| p.v_toward).collect(),
        nearest: track
            .iter()
            .zip(&positions)
            .map(|(p, d)| finite(nearest_distance(p.x, p.y, d)))
            .collect(),
        windows: result
            .windows
            .iter()
            .zip(&result.values)
            .map(|(w, v)| WindowView {
                index: w.index,
                start_frame: w.start_frame,
                end_frame: w.end_frame,
                v_start: w.v_start,
                v_end: w.v_end,
                v_pre: w.v_pre,
                v_post: finite(w.v_post),
                w: v.w,
                case: v.case.as_str(),
            })
            .collect(),
        credits: result
            .credits
            .iter()
            .map(|c| {
                let (name, position) = names.get(&c.defender_id).cloned().unwrap_or_default();
                CreditView {
                    window: c.index,
                    defender_id: c.defender_id,
                    name,
                    position,
                    w_player: c.w_player,
                    frames: c.frames_involved,
                }
            })
            .collect(),
        total: result.total_value(),
    })
}

fn to_json<T: Serialize>(v: &T) -> String {
    serde_json::to_string(v).unwrap_or_else(|e| format!("{{\"error\":\"{e}\"}}"))
}

fn respond(r: Result<PlayView, String>) -> Result<String, JsValue> {
    r.map(|v| to_json(&v)).map_err(|e| JsValue::from_str(&e))
}

/// Random run play from `seed`, evaluated at contact distance `threshold`.
/// Returns JSON.
#[wasm_bindgen]
pub fn simulate_play(seed: u32, threshold: f64) -> Result<String, JsValue> {
    let spec = random_spec(
        seed as u64,
        PlayKey::new(1, seed),
        1,
        &roster("OFF", 100),
        &roster("DEF", 200),
        1.5,
    );
    respond(evaluate(&spec, threshold))
}

/// The three-window worked example evaluated at `threshold`. Returns JSON.
#[wasm_bindgen]
pub fn worked_example(threshold: f64) -> Result<String, JsValue> {
    respond(evaluate(&worked_example_spec(), threshold))
}

/// Values a single window from its landmarks. `v_post` may be `-Infinity`
/// when the window ends the play. Returns `{"w": .., "case": ..}`.
#[wasm_bindgen]
pub fn value_window(v_start: f64, v_end: f64, v_pre: f64, v_post: f64, peak_inside: bool) -> String {
    let (w, case) = value_landmarks(
        &Landmarks {
            v_start,
            v_end,
            v_pre,
            v_post,
            pre_peak_inside: peak_inside,
        },
        DEFAULT_PEAK_EPSILON,
    );
    to_json(&serde_json::json!({ "w": w, "case": case.as_str() }))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn worked_example_view() {
        let v = evaluate(&worked_example_spec(), 1.5).unwrap();
        assert_eq!(v.frames.len(), 59);
        assert_eq!(v.windows.len(), 3);
        let simmons: f64 = v
            .credits
            .iter()
            .filter(|c| c.name == "Jeffery Simmons")
            .map(|c| c.w_player)
            .sum();
        assert!((simmons - 0.130).abs() < 0.001);
        assert!(v.windows[2].v_post.is_none());
    }

    #[test]
    fn wider_threshold_merges_contact() {
        let narrow = evaluate(&worked_example_spec(), 1.5).unwrap();
        let wide = evaluate(&worked_example_spec(), 3.5).unwrap();
        let covered = |v: &PlayView| v.windows.iter().map(|w| w.end_frame - w.start_frame + 1).sum::<u32>();
        assert!(covered(&wide) >= covered(&narrow));
    }

    #[test]
    fn landmark_values() {
        let v: serde_json::Value = serde_json::from_str(&value_window(5.01, 4.72, 5.16, 4.60, false)).unwrap();
        assert!((v["w"].as_f64().unwrap() - 0.0562).abs() < 1e-4);
        assert_eq!(v["case"], "plain");
        let v: serde_json::Value = serde_json::from_str(&value_window(3.0, 2.0, 4.0, 4.5, false)).unwrap();
        assert_eq!(v["case"], "fullRecovery");
    }

    #[test]
    fn bad_threshold_is_an_error() {
        assert!(evaluate(&worked_example_spec(), 0.0).is_err());
    }

    #[test]
    fn random_plays_evaluate() {
        for seed in 0..20 {
            let spec = random_spec(
                seed,
                PlayKey::new(1, seed as u32),
                1,
                &roster("OFF", 100),
                &roster("DEF", 200),
                1.5,
            );
            let v = evaluate(&spec, 2.0).unwrap();
            assert_eq!(v.frames.len(), v.nearest.len());
        }
    }
}
