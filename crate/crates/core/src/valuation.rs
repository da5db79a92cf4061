//! Window value: the share of the ball-carrier's peak forward velocity that
//! a contact window removed and the carrier never won back.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::types::PlayKey;
use crate::windows::ContactWindow;

/// Peaks at or below this speed (yards/second) give a zero value.
pub const DEFAULT_PEAK_EPSILON: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum CaseTag {
    Plain,
    PeakInside,
    FullRecovery,
    PartialRecovery,
    DegeneratePeak,
}

impl CaseTag {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Plain => "plain",
            Self::PeakInside => "peakInside",
            Self::FullRecovery => "fullRecovery",
            Self::PartialRecovery => "partialRecovery",
            Self::DegeneratePeak => "degeneratePeak",
        }
    }
}

impl fmt::Display for CaseTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// The four velocity landmarks of a window.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Landmarks {
    pub v_start: f64,
    pub v_end: f64,
    pub v_pre: f64,
    pub v_post: f64,
    pub pre_peak_inside: bool,
}

impl From<&ContactWindow> for Landmarks {
    fn from(w: &ContactWindow) -> Self {
        Self {
            v_start: w.v_start,
            v_end: w.v_end,
            v_pre: w.v_pre,
            v_post: w.v_post,
            pre_peak_inside: w.pre_peak_inside,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WindowValue {
    pub key: PlayKey,
    pub index: usize,
    pub w: f64,
    pub case: CaseTag,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("window {key}#{index}: non-finite landmark {name} = {value}")]
pub struct ValuationError {
    pub key: PlayKey,
    pub index: usize,
    pub name: &'static str,
    pub value: f64,
}

/// Evaluates the window rule on bare landmarks.
///
/// Forward velocities below zero count as zero in the ratio. Rules apply
/// in order: degenerate peak, full recovery, partial recovery (effective
/// end replaced by the recovery velocity), then the clamped ratio with the
/// effective start lifted to the peak when the peak lies inside the window.
pub fn value_landmarks(l: &Landmarks, epsilon: f64) -> (f64, CaseTag) {
    let clamp0 = |v: f64| v.max(0.0);
    if l.v_pre <= epsilon {
        return (0.0, CaseTag::DegeneratePeak);
    }
    let start = if l.pre_peak_inside {
        clamp0(l.v_pre)
    } else {
        clamp0(l.v_start)
    };
    let end = clamp0(l.v_end);
    let post = clamp0(l.v_post);
    if post >= l.v_pre {
        return (0.0, CaseTag::FullRecovery);
    }
    let (end, case) = if end <= post {
        (post, CaseTag::PartialRecovery)
    } else if l.pre_peak_inside {
        (end, CaseTag::PeakInside)
    } else {
        (end, CaseTag::Plain)
    };
    (((start - end) / l.v_pre).clamp(0.0, 1.0), case)
}

/// Values one detected window.
pub fn value_window(window: &ContactWindow, epsilon: f64) -> Result<WindowValue, ValuationError> {
    let err = |name, value| ValuationError {
        key: window.key,
        index: window.index,
        name,
        value,
    };
    for (name, v) in [
        ("v_start", window.v_start),
        ("v_end", window.v_end),
        ("v_pre", window.v_pre),
    ] {
        if !v.is_finite() {
            return Err(err(name, v));
        }
    }
    if window.v_post.is_nan() || window.v_post == f64::INFINITY {
        return Err(err("v_post", window.v_post));
    }
    let (w, case) = value_landmarks(&Landmarks::from(window), epsilon);
    Ok(WindowValue {
        key: window.key,
        index: window.index,
        w,
        case,
    })
}
