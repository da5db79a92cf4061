//! Per-play composition of track building, window detection, valuation and
//! attribution.

use serde::{Deserialize, Serialize};

use crate::attribution::{attribute, PlayerWindowCredit};
use crate::ingest::{Reject, StandardizedPlay};
use crate::kinematics::{build_track, BallCarrierTrack};
use crate::types::{NflId, PlayKey, TeamCode};
use crate::valuation::{value_window, WindowValue, DEFAULT_PEAK_EPSILON};
use crate::windows::{defender_positions, detect_windows, ContactWindow};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub threshold: f64,
    pub peak_epsilon: f64,
}

impl PipelineConfig {
    pub fn new(threshold: f64) -> Self {
        Self {
            threshold,
            peak_epsilon: DEFAULT_PEAK_EPSILON,
        }
    }
}

/// Everything computed for one play.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlayResult {
    pub key: PlayKey,
    pub week: u8,
    pub defensive_team: TeamCode,
    /// Every defender on the field for the play, ascending.
    pub defenders: Vec<NflId>,
    pub track: BallCarrierTrack,
    pub windows: Vec<ContactWindow>,
    /// Parallel to `windows`.
    pub values: Vec<WindowValue>,
    pub credits: Vec<PlayerWindowCredit>,
}

impl PlayResult {
    pub fn total_value(&self) -> f64 {
        self.values.iter().map(|v| v.w).sum()
    }
}

#[derive(Debug, Clone, Default)]
pub struct PipelineOutput {
    pub plays: Vec<PlayResult>,
    pub rejects: Vec<Reject>,
}

impl PipelineOutput {
    pub fn windows(&self) -> impl Iterator<Item = &ContactWindow> {
        self.plays.iter().flat_map(|p| p.windows.iter())
    }

    pub fn credits(&self) -> impl Iterator<Item = &PlayerWindowCredit> {
        self.plays.iter().flat_map(|p| p.credits.iter())
    }
}

/// Runs one play through the pipeline. Windows with non-finite landmarks
/// are dropped and reported.
pub fn process_play(play: &StandardizedPlay, config: &PipelineConfig) -> (Option<PlayResult>, Vec<Reject>) {
    let file = format!("tracking_week_{}.csv", play.meta.week);
    let track = match build_track(play) {
        Ok(t) => t,
        Err(reason) => return (None, vec![Reject::play(&file, play.key(), &reason)]),
    };
    let positions = defender_positions(play, &track);
    let detected = detect_windows(&track, &positions, config.threshold);

    let mut rejects = Vec::new();
    let mut windows = Vec::with_capacity(detected.len());
    let mut values = Vec::with_capacity(detected.len());
    let mut credits = Vec::new();
    for w in detected {
        match value_window(&w, config.peak_epsilon) {
            Ok(v) => {
                credits.extend(attribute(&w, &v).players);
                windows.push(w);
                values.push(v);
            }
            Err(e) => rejects.push(Reject {
                file: file.clone(),
                line: None,
                play_key: Some(play.key().to_string()),
                reason: format!("non_finite_landmark: {e}"),
            }),
        }
    }
    let result = PlayResult {
        key: play.key(),
        week: play.meta.week,
        defensive_team: play.meta.defensive_team,
        defenders: play.defender_ids().into_iter().collect(),
        track,
        windows,
        values,
        credits,
    };
    (Some(result), rejects)
}

/// Processes plays in parallel; output order follows input order.
pub fn run_pipeline(plays: &[StandardizedPlay], config: &PipelineConfig) -> PipelineOutput {
    #[cfg(feature = "parallel")]
    let results: Vec<_> = {
        use rayon::prelude::*;
        plays.par_iter().map(|p| process_play(p, config)).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let results: Vec<_> = plays.iter().map(|p| process_play(p, config)).collect();

    let mut out = PipelineOutput::default();
    for (play, rejects) in results {
        out.plays.extend(play);
        out.rejects.extend(rejects);
    }
    out
}
