//! Ball-carrier velocity toward the target end zone.
//!
//! `dir` is measured in degrees clockwise from the +y axis, so after
//! standardization the +x (end zone) component of velocity is
//! `s * sin(dir)`.

use serde::{Deserialize, Serialize};

use crate::ingest::{RejectReason, StandardizedPlay};
use crate::types::{FrameId, PlayKey, FRAMES_PER_SECOND};

/// Signed speed component along +x. Positive values move toward the end zone.
pub fn velocity_toward_endzone(s: f64, dir_degrees: f64) -> f64 {
    s * dir_degrees.to_radians().sin()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrackPoint {
    pub frame_id: FrameId,
    pub x: f64,
    pub y: f64,
    pub v_toward: f64,
}

/// Ball-carrier series from snap to end of play, one point per frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BallCarrierTrack {
    pub key: PlayKey,
    pub points: Vec<TrackPoint>,
}

impl BallCarrierTrack {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn velocities(&self) -> impl Iterator<Item = f64> + '_ {
        self.points.iter().map(|p| p.v_toward)
    }
}

/// Builds the ball-carrier track over `[snap_frame, end_frame]`.
pub fn build_track(play: &StandardizedPlay) -> Result<BallCarrierTrack, RejectReason> {
    let points = (play.snap_frame..=play.end_frame)
        .map(|frame_id| {
            let rec = play
                .carrier_at(frame_id)
                .ok_or(RejectReason::CarrierMissing(frame_id))?;
            Ok(TrackPoint {
                frame_id,
                x: rec.x,
                y: rec.y,
                v_toward: velocity_toward_endzone(rec.s, rec.dir),
            })
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(BallCarrierTrack {
        key: play.key(),
        points,
    })
}

/// Finite-difference estimate of the +x velocity from positions alone.
///
/// Central differences inside the track, one-sided at the ends. A track of
/// one frame yields `[0.0]`.
pub fn positional_velocity(track: &BallCarrierTrack) -> Vec<f64> {
    let p = &track.points;
    let dt = 1.0 / FRAMES_PER_SECOND;
    match p.len() {
        0 => vec![],
        1 => vec![0.0],
        n => (0..n)
            .map(|i| {
                let (lo, hi) = (i.saturating_sub(1), (i + 1).min(n - 1));
                (p[hi].x - p[lo].x) / (dt * (hi - lo) as f64)
            })
            .collect(),
    }
}

/// Mean and max absolute gap between provided-speed velocity and the
/// positional estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VelocityGap {
    pub mean_abs: f64,
    pub max_abs: f64,
}

pub fn velocity_gap(track: &BallCarrierTrack) -> VelocityGap {
    let fd = positional_velocity(track);
    let gaps: Vec<f64> = track.velocities().zip(fd).map(|(v, f)| (v - f).abs()).collect();
    if gaps.is_empty() {
        return VelocityGap {
            mean_abs: 0.0,
            max_abs: 0.0,
        };
    }
    VelocityGap {
        mean_abs: gaps.iter().sum::<f64>() / gaps.len() as f64,
        max_abs: gaps.iter().cloned().fold(0.0, f64::max),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn cardinal_directions() {
        assert!((velocity_toward_endzone(5.0, 90.0) - 5.0).abs() < 1e-12);
        assert!(velocity_toward_endzone(5.0, 0.0).abs() < 1e-12);
        assert!((velocity_toward_endzone(5.0, 270.0) + 5.0).abs() < 1e-12);
    }

    #[test]
    fn handoff_row_is_nearly_lateral() {
        // 5.29 * sin(180.15 deg), evaluated independently: -0.0138491718
        let v = velocity_toward_endzone(5.29, 180.15);
        assert!((v - (-0.013_849_171_8)).abs() < 1e-9, "{v}");
    }

    #[test]
    fn positional_velocity_of_uniform_motion() {
        let track = BallCarrierTrack {
            key: PlayKey::new(1, 1),
            points: (0..5)
                .map(|i| TrackPoint {
                    frame_id: i + 1,
                    x: 10.0 + 0.4 * i as f64,
                    y: 20.0,
                    v_toward: 4.0,
                })
                .collect(),
        };
        for v in positional_velocity(&track) {
            assert!((v - 4.0).abs() < 1e-9);
        }
        assert!(velocity_gap(&track).max_abs < 1e-9);
    }

    proptest! {
        #[test]
        fn bounded_by_speed(s in 0.0f64..15.0, dir in 0.0f64..360.0) {
            prop_assert!(velocity_toward_endzone(s, dir).abs() <= s + 1e-9);
        }

        #[test]
        fn opposite_heading_negates(s in 0.0f64..15.0, dir in 0.0f64..360.0) {
            let flipped = (dir + 180.0).rem_euclid(360.0);
            prop_assert!((velocity_toward_endzone(s, dir) + velocity_toward_endzone(s, flipped)).abs() < 1e-9);
        }
    }
}
