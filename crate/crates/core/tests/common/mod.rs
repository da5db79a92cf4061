#![allow(dead_code)]

use std::path::Path;

use fractackle::harness::{generate, GroundTruth, SyntheticPlaySpec};
use fractackle::ingest::{filter_rb_runs, load_dataset, Dataset, IngestConfig};
use fractackle::{run_pipeline, PipelineConfig, PipelineOutput};

pub struct Run {
    pub truth: GroundTruth,
    pub dataset: Dataset,
    pub output: PipelineOutput,
}

/// Writes `specs` to `dir`, loads them back and runs the pipeline at the
/// specs' threshold.
pub fn run_specs(specs: &[SyntheticPlaySpec], dir: &Path) -> Run {
    let truth = generate(specs, dir).expect("generate");
    let dataset = load_dataset(dir, &(1..=9).collect(), &IngestConfig::default()).expect("load");
    let filtered = filter_rb_runs(&dataset, &IngestConfig::default());
    assert!(filtered.rejects.is_empty(), "{:?}", filtered.rejects);
    let output = run_pipeline(&filtered.plays, &PipelineConfig::new(truth.threshold));
    assert!(output.rejects.is_empty(), "{:?}", output.rejects);
    Run { truth, dataset, output }
}

/// Elementwise comparison of pipeline output with the sidecar; returns the
/// first mismatch.
pub fn compare(run: &Run, tol: f64) -> Result<usize, String> {
    let close = |a: f64, b: f64| a == b || (a - b).abs() <= tol;
    if run.truth.plays.len() != run.output.plays.len() {
        return Err(format!(
            "play count {} vs {}",
            run.output.plays.len(),
            run.truth.plays.len()
        ));
    }
    let mut checked = 0;
    for (t, p) in run.truth.plays.iter().zip(&run.output.plays) {
        if t.play_key != p.key.to_string() {
            return Err(format!("play order {} vs {}", p.key, t.play_key));
        }
        if t.outcome.windows.len() != p.windows.len() {
            return Err(format!(
                "{}: {} windows vs {}",
                p.key,
                p.windows.len(),
                t.outcome.windows.len()
            ));
        }
        for ((tw, w), v) in t.outcome.windows.iter().zip(&p.windows).zip(&p.values) {
            let same = tw.index == w.index
                && tw.start_frame == w.start_frame
                && tw.end_frame == w.end_frame
                && close(tw.v_start, w.v_start)
                && close(tw.v_end, w.v_end)
                && close(tw.v_pre, w.v_pre)
                && close(tw.v_post, w.v_post)
                && close(tw.w, v.w);
            if !same {
                return Err(format!("{} window {}: {:?} vs {:?} w={}", p.key, w.index, tw, w, v.w));
            }
            checked += 1;
        }
        if t.outcome.credits.len() != p.credits.len() {
            return Err(format!(
                "{}: credit count {} vs {}",
                p.key,
                p.credits.len(),
                t.outcome.credits.len()
            ));
        }
        for (tc, c) in t.outcome.credits.iter().zip(&p.credits) {
            if tc.index != c.index
                || tc.defender_id != c.defender_id
                || tc.frames_involved != c.frames_involved
                || !close(tc.w_player, c.w_player)
            {
                return Err(format!("{} credit {:?} vs {:?}", p.key, tc, c));
            }
        }
    }
    Ok(checked)
}
