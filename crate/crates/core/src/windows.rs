//! Contact-threshold calibration and contact-window detection.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::StandardizedPlay;
use crate::kinematics::BallCarrierTrack;
use crate::types::{FrameId, NflId, PlayKey};

pub const FIRST_CONTACT_EVENT: &str = "first_contact";
pub const TACKLE_EVENT: &str = "tackle";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CalibrationConfig {
    pub percentile: f64,
    pub override_d: Option<f64>,
}

impl Default for CalibrationConfig {
    fn default() -> Self {
        Self {
            percentile: 0.95,
            override_d: None,
        }
    }
}

impl CalibrationConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.percentile > 0.0 && self.percentile < 1.0) {
            return Err(Error::Config(format!(
                "percentile must lie strictly between 0 and 1, got {}",
                self.percentile
            )));
        }
        if let Some(d) = self.override_d {
            if !(d.is_finite() && d > 0.0) {
                return Err(Error::Config(format!("threshold must be positive, got {d}")));
            }
        }
        Ok(())
    }
}

/// Ball-carrier to nearest-defender distances at labeled event frames.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct EventSamples {
    pub first_contact: Vec<f64>,
    pub tackle: Vec<f64>,
}

impl EventSamples {
    pub fn merge(mut self, other: EventSamples) -> Self {
        self.first_contact.extend(other.first_contact);
        self.tackle.extend(other.tackle);
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Calibration {
    pub d: f64,
    pub percentile: f64,
    pub overridden: bool,
    /// Sorted ascending.
    pub samples: EventSamples,
}

impl Calibration {
    /// 10th..90th percentiles of each distribution (nearest-rank).
    pub fn deciles(&self) -> (Vec<f64>, Vec<f64>) {
        let d = |xs: &[f64]| -> Vec<f64> {
            if xs.is_empty() {
                return vec![];
            }
            (1..10).map(|k| nearest_rank(xs, k as f64 / 10.0)).collect()
        };
        (d(&self.samples.first_contact), d(&self.samples.tackle))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DefenderPosition {
    pub id: NflId,
    pub x: f64,
    pub y: f64,
}

/// A maximal run of frames with at least one defender within the threshold.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContactWindow {
    pub key: PlayKey,
    /// 1-based, in frame order.
    pub index: usize,
    pub start_frame: FrameId,
    pub end_frame: FrameId,
    /// Defender ids within the threshold, one ascending list per frame.
    pub defenders: Vec<Vec<NflId>>,
    pub v_start: f64,
    pub v_end: f64,
    pub v_pre: f64,
    /// `-inf` when the window ends the play.
    pub v_post: f64,
    pub pre_peak_inside: bool,
}

impl ContactWindow {
    /// Frame count `T`.
    pub fn len(&self) -> usize {
        self.defenders.len()
    }

    pub fn is_empty(&self) -> bool {
        self.defenders.is_empty()
    }

    pub fn duration_seconds(&self) -> f64 {
        self.len() as f64 / crate::types::FRAMES_PER_SECOND
    }

    /// Distinct defenders involved anywhere in the window.
    pub fn defender_count(&self) -> usize {
        let mut ids: Vec<NflId> = self.defenders.iter().flatten().copied().collect();
        ids.sort_unstable();
        ids.dedup();
        ids.len()
    }
}

fn distance(ax: f64, ay: f64, bx: f64, by: f64) -> f64 {
    (ax - bx).hypot(ay - by)
}

/// Distance to the closest defender, `+inf` when there is none.
pub fn nearest_distance(x: f64, y: f64, defenders: &[DefenderPosition]) -> f64 {
    defenders
        .iter()
        .map(|d| distance(x, y, d.x, d.y))
        .fold(f64::INFINITY, f64::min)
}

fn positions_at(play: &StandardizedPlay, frame: FrameId) -> Vec<DefenderPosition> {
    play.defenders_at(frame)
        .filter_map(|f| {
            Some(DefenderPosition {
                id: f.nfl_id?,
                x: f.x,
                y: f.y,
            })
        })
        .collect()
}

/// Defender positions aligned with the frames of `track`.
pub fn defender_positions(play: &StandardizedPlay, track: &BallCarrierTrack) -> Vec<Vec<DefenderPosition>> {
    track.points.iter().map(|p| positions_at(play, p.frame_id)).collect()
}

/// Nearest-defender distances at every `first_contact` and `tackle` frame.
pub fn event_samples(play: &StandardizedPlay) -> EventSamples {
    let mut out = EventSamples::default();
    for (frame, recs) in &play.frames {
        let Some(ev) = recs.iter().find_map(|r| r.event()) else {
            continue;
        };
        let bucket = match ev {
            FIRST_CONTACT_EVENT => &mut out.first_contact,
            TACKLE_EVENT => &mut out.tackle,
            _ => continue,
        };
        let Some(carrier) = play.carrier_at(*frame) else {
            continue;
        };
        let d = nearest_distance(carrier.x, carrier.y, &positions_at(play, *frame));
        if d.is_finite() {
            bucket.push(d);
        }
    }
    out
}

/// Smallest sample `v` with at least `p` of the samples `<= v`.
/// `sorted` must be ascending and nonempty.
fn nearest_rank(sorted: &[f64], p: f64) -> f64 {
    let n = sorted.len();
    let rank = ((p * n as f64) - 1e-9).ceil().max(1.0) as usize;
    sorted[rank.min(n) - 1]
}

/// Smallest distance covering at least `p` of both distributions, rounded
/// up to the nearest 0.1 yard.
pub fn joint_percentile_threshold(first_contact: &[f64], tackle: &[f64], p: f64) -> Option<f64> {
    let covering = |xs: &[f64]| -> Option<f64> {
        if xs.is_empty() {
            return None;
        }
        let mut v = xs.to_vec();
        v.sort_by(f64::total_cmp);
        Some(nearest_rank(&v, p))
    };
    let raw = match (covering(first_contact), covering(tackle)) {
        (Some(a), Some(b)) => a.max(b),
        (Some(a), None) | (None, Some(a)) => a,
        (None, None) => return None,
    };
    Some(((raw * 10.0) - 1e-9).ceil() / 10.0)
}

/// Chooses the contact threshold `D` from event-frame distances.
pub fn calibrate_threshold(plays: &[StandardizedPlay], config: &CalibrationConfig) -> Result<Calibration> {
    config.validate()?;

    #[cfg(feature = "parallel")]
    let per_play: Vec<EventSamples> = {
        use rayon::prelude::*;
        plays.par_iter().map(event_samples).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let per_play: Vec<EventSamples> = plays.iter().map(event_samples).collect();

    let mut samples = per_play.into_iter().fold(EventSamples::default(), EventSamples::merge);
    samples.first_contact.sort_by(f64::total_cmp);
    samples.tackle.sort_by(f64::total_cmp);

    let d = match config.override_d {
        Some(d) => d,
        None => joint_percentile_threshold(&samples.first_contact, &samples.tackle, config.percentile)
            .ok_or(Error::NoCalibrationSamples)?,
    };
    Ok(Calibration {
        d,
        percentile: config.percentile,
        overridden: config.override_d.is_some(),
        samples,
    })
}

/// Maximal runs `[start, end]` (inclusive indices) with `distances[i] <= d`.
pub fn contact_runs(distances: &[f64], d: f64) -> Vec<(usize, usize)> {
    let mut runs = Vec::new();
    let mut open: Option<usize> = None;
    for (i, &dist) in distances.iter().enumerate() {
        match (dist <= d, open) {
            (true, None) => open = Some(i),
            (false, Some(s)) => {
                runs.push((s, i - 1));
                open = None;
            }
            _ => {}
        }
    }
    if let Some(s) = open {
        runs.push((s, distances.len() - 1));
    }
    runs
}

/// Finds contact windows along a track and fills their velocity landmarks.
///
/// `defenders[i]` holds the defender positions at `track.points[i]`.
pub fn detect_windows(track: &BallCarrierTrack, defenders: &[Vec<DefenderPosition>], d: f64) -> Vec<ContactWindow> {
    assert_eq!(
        track.len(),
        defenders.len(),
        "defender positions must cover every track frame"
    );
    let pts = &track.points;
    let distances: Vec<f64> = pts
        .iter()
        .zip(defenders)
        .map(|(p, defs)| nearest_distance(p.x, p.y, defs))
        .collect();
    let v: Vec<f64> = track.velocities().collect();

    // prefix_max[i] = max v[..i]; suffix_max[i] = max v[i..]
    let mut prefix_max = vec![f64::NEG_INFINITY; v.len() + 1];
    for i in 0..v.len() {
        prefix_max[i + 1] = prefix_max[i].max(v[i]);
    }
    let mut suffix_max = vec![f64::NEG_INFINITY; v.len() + 1];
    for i in (0..v.len()).rev() {
        suffix_max[i] = suffix_max[i + 1].max(v[i]);
    }

    contact_runs(&distances, d)
        .into_iter()
        .enumerate()
        .map(|(j, (start, end))| {
            let sets = (start..=end)
                .map(|i| {
                    let mut ids: Vec<NflId> = defenders[i]
                        .iter()
                        .filter(|def| distance(pts[i].x, pts[i].y, def.x, def.y) <= d)
                        .map(|def| def.id)
                        .collect();
                    ids.sort_unstable();
                    ids.dedup();
                    ids
                })
                .collect();
            let before = prefix_max[start];
            let inside = v[start..=end].iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let pre_peak_inside = inside > before;
            ContactWindow {
                key: track.key,
                index: j + 1,
                start_frame: pts[start].frame_id,
                end_frame: pts[end].frame_id,
                defenders: sets,
                v_start: v[start],
                v_end: v[end],
                v_pre: if pre_peak_inside { inside } else { prefix_max[start + 1] },
                v_post: suffix_max[end + 1],
                pre_peak_inside,
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kinematics::TrackPoint;

    fn track_from(v: &[f64]) -> BallCarrierTrack {
        BallCarrierTrack {
            key: PlayKey::new(1, 1),
            points: v
                .iter()
                .enumerate()
                .map(|(i, &vt)| TrackPoint {
                    frame_id: i as u32 + 1,
                    x: 50.0,
                    y: 20.0,
                    v_toward: vt,
                })
                .collect(),
        }
    }

    /// One defender per frame placed at the given distance straight up field.
    fn defenders_at(dists: &[f64]) -> Vec<Vec<DefenderPosition>> {
        dists
            .iter()
            .map(|&d| {
                vec![DefenderPosition {
                    id: 9,
                    x: 50.0,
                    y: 20.0 + d,
                }]
            })
            .collect()
    }

    #[test]
    fn maximal_runs_from_distance_series() {
        let runs = contact_runs(&[2.0, 1.4, 1.2, 1.6, 1.3, 2.0], 1.5);
        // frames {2,3} and {5} in 1-based numbering
        assert_eq!(runs, vec![(1, 2), (4, 4)]);
        assert!(contact_runs(&[], 1.5).is_empty());
        assert_eq!(contact_runs(&[1.0, 1.0], 1.5), vec![(0, 1)]);
    }

    #[test]
    fn window_frames_and_sets() {
        let track = track_from(&[1.0, 2.0, 3.0, 2.5, 2.0, 4.0]);
        let w = detect_windows(&track, &defenders_at(&[2.0, 1.4, 1.2, 1.6, 1.3, 2.0]), 1.5);
        assert_eq!(w.len(), 2);
        assert_eq!((w[0].start_frame, w[0].end_frame), (2, 3));
        assert_eq!((w[1].start_frame, w[1].end_frame), (5, 5));
        assert_eq!(w[0].defenders, vec![vec![9], vec![9]]);
        assert_eq!(w[0].index, 1);
        assert_eq!(w[1].index, 2);

        // window 1: peak 3.0 inside, post max 4.0
        assert!(w[0].pre_peak_inside);
        assert_eq!(
            (w[0].v_start, w[0].v_end, w[0].v_pre, w[0].v_post),
            (2.0, 3.0, 3.0, 4.0)
        );
        // window 2: peak 3.0 before it
        assert!(!w[1].pre_peak_inside);
        assert_eq!(
            (w[1].v_start, w[1].v_end, w[1].v_pre, w[1].v_post),
            (2.0, 2.0, 3.0, 4.0)
        );
    }

    #[test]
    fn window_ending_the_play_has_no_recovery() {
        let track = track_from(&[3.0, 2.0, 1.0]);
        let w = detect_windows(&track, &defenders_at(&[2.0, 1.0, 1.0]), 1.5);
        assert_eq!(w.len(), 1);
        assert_eq!(w[0].v_post, f64::NEG_INFINITY);
        assert_eq!(w[0].v_pre, 3.0);
    }

    #[test]
    fn no_contact_no_windows() {
        let track = track_from(&[3.0, 2.0]);
        assert!(detect_windows(&track, &defenders_at(&[5.0, 6.0]), 1.5).is_empty());
        assert!(detect_windows(&track, &[vec![], vec![]], 1.5).is_empty());
    }

    #[test]
    fn threshold_single_point() {
        assert_eq!(joint_percentile_threshold(&[1.2], &[1.2], 0.95), Some(1.2));
        assert_eq!(joint_percentile_threshold(&[], &[], 0.95), None);
    }

    #[test]
    fn threshold_evenly_spaced() {
        // Oracle: sort, take the ceil(0.95 * 100) = 95th smallest value.
        let xs: Vec<f64> = (1..=100).map(|i| 0.02 * i as f64).collect();
        let mut sorted = xs.clone();
        sorted.sort_by(f64::total_cmp);
        let oracle = sorted[94];
        assert!((oracle - 1.9).abs() < 1e-12);
        assert_eq!(joint_percentile_threshold(&xs, &xs, 0.95), Some(1.9));
    }

    #[test]
    fn threshold_takes_the_wider_distribution() {
        let a = [0.5, 0.6, 0.7, 0.8];
        let b = [1.0, 1.1, 1.2, 1.33];
        assert_eq!(joint_percentile_threshold(&a, &b, 0.75), Some(1.2));
        assert_eq!(joint_percentile_threshold(&a, &b, 0.9), Some(1.4));
    }

    #[test]
    fn override_bypasses_samples() {
        let cfg = CalibrationConfig {
            percentile: 0.95,
            override_d: Some(2.0),
        };
        let cal = calibrate_threshold(&[], &cfg).unwrap();
        assert_eq!(cal.d, 2.0);
        assert!(cal.overridden);
        assert!(matches!(
            calibrate_threshold(&[], &CalibrationConfig::default()),
            Err(Error::NoCalibrationSamples)
        ));
        assert!(CalibrationConfig {
            percentile: 1.0,
            override_d: None
        }
        .validate()
        .is_err());
    }
}
