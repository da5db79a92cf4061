//! Splits a window's value equally over its frames, then equally over the
//! defenders present at each frame.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::types::{FrameId, NflId, PlayKey};
use crate::valuation::WindowValue;
use crate::windows::ContactWindow;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameCredit {
    pub key: PlayKey,
    pub index: usize,
    pub frame_id: FrameId,
    pub w_frame: f64,
    /// Ascending by defender id.
    pub shares: Vec<(NflId, f64)>,
}

/// A defender's fractional tackles within one window.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlayerWindowCredit {
    pub key: PlayKey,
    pub index: usize,
    pub defender_id: NflId,
    pub w_player: f64,
    pub frames_involved: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Attribution {
    pub frames: Vec<FrameCredit>,
    /// Ascending by defender id.
    pub players: Vec<PlayerWindowCredit>,
}

/// Divides `value.w` over the frames and defenders of `window`.
///
/// # Panics
///
/// If `value` belongs to another window or a frame has no defender; window
/// detection never produces either.
pub fn attribute(window: &ContactWindow, value: &WindowValue) -> Attribution {
    assert!(
        value.key == window.key && value.index == window.index,
        "value {}#{} does not belong to window {}#{}",
        value.key,
        value.index,
        window.key,
        window.index
    );
    let t = window.len();
    if t == 0 {
        return Attribution::default();
    }
    let w_frame = value.w / t as f64;

    let mut frames = Vec::with_capacity(t);
    // Per-player totals accumulate in frame order.
    let mut totals: BTreeMap<NflId, (f64, usize)> = BTreeMap::new();
    for (offset, set) in window.defenders.iter().enumerate() {
        assert!(
            !set.is_empty(),
            "frame {} of window {}#{} has no defender",
            offset,
            window.key,
            window.index
        );
        let share = w_frame / set.len() as f64;
        for id in set {
            let e = totals.entry(*id).or_insert((0.0, 0));
            e.0 += share;
            e.1 += 1;
        }
        frames.push(FrameCredit {
            key: window.key,
            index: window.index,
            frame_id: window.start_frame + offset as FrameId,
            w_frame,
            shares: set.iter().map(|id| (*id, share)).collect(),
        });
    }
    let players = totals
        .into_iter()
        .map(|(defender_id, (w_player, frames_involved))| PlayerWindowCredit {
            key: window.key,
            index: window.index,
            defender_id,
            w_player,
            frames_involved,
        })
        .collect();
    Attribution { frames, players }
}
