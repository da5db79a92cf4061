//! Synthetic plays with known ground truth, and a brute-force reference
//! evaluator for cross-checking the pipeline without licensed data.
//!
//! A [`SyntheticPlaySpec`] scripts the ball-carrier through velocity knots
//! and each defender through offsets relative to the carrier. [`realize`]
//! turns a spec into tracking rows in the ingest format and checks that the
//! planned contact windows actually occur. [`generate`] writes a complete
//! data directory plus a `ground_truth.json` sidecar produced by
//! [`oracle_credits`], which shares no code with the windows, valuation or
//! attribution modules.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::{BoxScore, PlayMeta, PlayerMeta, TrackingFrame};
use crate::types::{
    FrameId, NflId, PlayDirection, PlayKey, Position, TeamCode, FIELD_LENGTH, FIELD_WIDTH, FRAMES_PER_SECOND,
};

/// Speed cap for scripted players, yards/second.
pub const MAX_SPEED: f64 = 12.0;
/// Scripted distances closer than this to the threshold are refused.
pub const THRESHOLD_MARGIN: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VelocityKnot {
    pub frame: FrameId,
    pub vx: f64,
    pub vy: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OffsetKnot {
    pub frame: FrameId,
    pub dx: f64,
    pub dy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticPlayer {
    pub id: NflId,
    pub name: String,
    pub position: Position,
}

impl SyntheticPlayer {
    pub fn new(id: NflId, name: impl Into<String>, position: Position) -> Self {
        Self {
            id,
            name: name.into(),
            position,
        }
    }

    fn meta(&self) -> PlayerMeta {
        PlayerMeta {
            nfl_id: self.id,
            display_name: self.name.clone(),
            position: self.position.clone(),
        }
    }
}

/// A defender's path as offsets from the ball-carrier.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DefenderScript {
    pub player: SyntheticPlayer,
    pub offsets: Vec<OffsetKnot>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlannedWindow {
    pub start_frame: FrameId,
    pub end_frame: FrameId,
    /// Expected defenders within the threshold, one ascending list per frame.
    pub defenders: Vec<Vec<NflId>>,
}

/// Expected velocity landmarks of a planned window.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlannedLandmarks {
    pub v_start: f64,
    pub v_end: f64,
    pub v_pre: f64,
    pub v_post: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticPlaySpec {
    pub seed: u64,
    pub key: PlayKey,
    pub week: u8,
    pub direction: PlayDirection,
    pub offense: TeamCode,
    pub defense: TeamCode,
    pub carrier: SyntheticPlayer,
    /// Ten offensive teammates; they only fill out the frame.
    pub offense_extras: Vec<SyntheticPlayer>,
    pub first_frame: FrameId,
    pub snap_frame: FrameId,
    pub end_frame: FrameId,
    pub end_event: String,
    /// Carrier position at `first_frame`, standardized coordinates.
    pub start: (f64, f64),
    /// Carrier velocity, linearly interpolated between knots and held
    /// constant outside them.
    pub carrier_path: Vec<VelocityKnot>,
    pub defender_scripts: Vec<DefenderScript>,
    pub threshold: f64,
    pub planned_windows: Vec<PlannedWindow>,
    /// Checked when present, aligned with `planned_windows`.
    pub planned_landmarks: Vec<Option<PlannedLandmarks>>,
}

impl SyntheticPlaySpec {
    /// Track length `T`.
    pub fn frames(&self) -> usize {
        (self.end_frame - self.snap_frame + 1) as usize
    }
}

/// Tracking rows and tables for one realized play.
#[derive(Debug, Clone, PartialEq)]
pub struct RealizedPlay {
    pub meta: PlayMeta,
    /// In the play's own direction, sorted by `(frameId, nflId)`.
    pub rows: Vec<TrackingFrame>,
    pub players: Vec<PlayerMeta>,
    pub box_scores: Vec<BoxScore>,
}

fn interpolate(knots: &[(FrameId, f64, f64)], frame: FrameId) -> (f64, f64) {
    let (first, last) = (knots[0], knots[knots.len() - 1]);
    if frame <= first.0 {
        return (first.1, first.2);
    }
    if frame >= last.0 {
        return (last.1, last.2);
    }
    let i = knots.partition_point(|k| k.0 <= frame);
    let (lo, hi) = (knots[i - 1], knots[i]);
    if lo.0 == frame {
        return (lo.1, lo.2);
    }
    let t = (frame - lo.0) as f64 / (hi.0 - lo.0) as f64;
    (lo.1 + t * (hi.1 - lo.1), lo.2 + t * (hi.2 - lo.2))
}

fn heading_degrees(vx: f64, vy: f64) -> f64 {
    vx.atan2(vy).to_degrees().rem_euclid(360.0)
}

fn in_field(x: f64, y: f64) -> bool {
    (0.0..=FIELD_LENGTH).contains(&x) && (0.0..=FIELD_WIDTH).contains(&y)
}

fn gen_err(spec: &SyntheticPlaySpec, msg: impl std::fmt::Display) -> Error {
    Error::Generation(format!("play {}: {msg}", spec.key))
}

fn sorted_knots<T>(knots: &[T], f: impl Fn(&T) -> (FrameId, f64, f64)) -> Vec<(FrameId, f64, f64)> {
    let mut v: Vec<_> = knots.iter().map(f).collect();
    v.sort_by_key(|k| k.0);
    v
}

/// Per-frame kinematics for a position series, from forward differences.
fn motion(positions: &[(f64, f64)]) -> Vec<(f64, f64, f64, f64)> {
    let n = positions.len();
    let vel: Vec<(f64, f64)> = (0..n)
        .map(|i| {
            if n < 2 {
                return (0.0, 0.0);
            }
            let (a, b) = if i + 1 < n { (i, i + 1) } else { (i - 1, i) };
            (
                (positions[b].0 - positions[a].0) * FRAMES_PER_SECOND,
                (positions[b].1 - positions[a].1) * FRAMES_PER_SECOND,
            )
        })
        .collect();
    (0..n)
        .map(|i| {
            let (vx, vy) = vel[i];
            let s = vx.hypot(vy);
            let dis = if i == 0 {
                0.0
            } else {
                (positions[i].0 - positions[i - 1].0).hypot(positions[i].1 - positions[i - 1].1)
            };
            let a = if i == 0 {
                0.0
            } else {
                (s - vel[i - 1].0.hypot(vel[i - 1].1)).abs() * FRAMES_PER_SECOND
            };
            (s, a, dis, heading_degrees(vx, vy))
        })
        .collect()
}

/// Builds tracking rows for a spec and verifies that its planned windows
/// are realized under its threshold.
pub fn realize(spec: &SyntheticPlaySpec) -> Result<RealizedPlay> {
    if !(spec.first_frame >= 1 && spec.first_frame <= spec.snap_frame && spec.snap_frame <= spec.end_frame) {
        return Err(gen_err(spec, "frames must satisfy 1 <= first <= snap <= end"));
    }
    if spec.defender_scripts.len() != 11 || spec.offense_extras.len() != 10 {
        return Err(gen_err(spec, "need 11 defenders and 10 offensive teammates"));
    }
    if spec.carrier_path.is_empty() || spec.defender_scripts.iter().any(|d| d.offsets.is_empty()) {
        return Err(gen_err(spec, "every path needs at least one knot"));
    }
    if !(spec.threshold > 0.0) {
        return Err(gen_err(spec, "threshold must be positive"));
    }
    let mut ids = BTreeSet::new();
    let everyone = std::iter::once(&spec.carrier)
        .chain(&spec.offense_extras)
        .chain(spec.defender_scripts.iter().map(|d| &d.player));
    for p in everyone {
        if !ids.insert(p.id) {
            return Err(gen_err(spec, format!("duplicate player id {}", p.id)));
        }
    }

    let frames: Vec<FrameId> = (spec.first_frame..=spec.end_frame).collect();
    let path = sorted_knots(&spec.carrier_path, |k| (k.frame, k.vx, k.vy));
    let vel: Vec<(f64, f64)> = frames.iter().map(|f| interpolate(&path, *f)).collect();
    let mut carrier_pos = Vec::with_capacity(frames.len());
    let mut pos = spec.start;
    for (vx, vy) in &vel {
        if vx.hypot(*vy) > MAX_SPEED {
            return Err(gen_err(spec, "carrier speed exceeds the cap"));
        }
        carrier_pos.push(pos);
        pos = (pos.0 + vx / FRAMES_PER_SECOND, pos.1 + vy / FRAMES_PER_SECOND);
    }

    let mut defender_pos: Vec<Vec<(f64, f64)>> = Vec::new();
    for script in &spec.defender_scripts {
        let knots = sorted_knots(&script.offsets, |k| (k.frame, k.dx, k.dy));
        defender_pos.push(
            frames
                .iter()
                .zip(&carrier_pos)
                .map(|(f, c)| {
                    let (dx, dy) = interpolate(&knots, *f);
                    (c.0 + dx, c.1 + dy)
                })
                .collect(),
        );
    }
    let extras_pos: Vec<Vec<(f64, f64)>> = (0..spec.offense_extras.len())
        .map(|k| {
            let (dx, dy) = (-7.0 - (k / 5) as f64 * 3.0, ((k % 5) as f64 - 2.0) * 3.0);
            carrier_pos.iter().map(|c| (c.0 + dx, c.1 + dy)).collect()
        })
        .collect();

    for series in std::iter::once(&carrier_pos).chain(&defender_pos).chain(&extras_pos) {
        if series.iter().any(|p| !in_field(p.0, p.1)) {
            return Err(gen_err(spec, "scripted position leaves the field"));
        }
    }

    // Realization check over the track.
    let snap_idx = (spec.snap_frame - spec.first_frame) as usize;
    let mut observed: Vec<(FrameId, Vec<NflId>)> = Vec::new();
    for i in snap_idx..frames.len() {
        let c = carrier_pos[i];
        let mut within = Vec::new();
        for (script, series) in spec.defender_scripts.iter().zip(&defender_pos) {
            let d = (series[i].0 - c.0).hypot(series[i].1 - c.1);
            if (d - spec.threshold).abs() <= THRESHOLD_MARGIN {
                return Err(gen_err(
                    spec,
                    format!(
                        "defender {} sits on the threshold at frame {}",
                        script.player.id, frames[i]
                    ),
                ));
            }
            if d <= spec.threshold {
                within.push(script.player.id);
            }
        }
        within.sort_unstable();
        observed.push((frames[i], within));
    }
    let mut realized_windows: Vec<PlannedWindow> = Vec::new();
    for (frame, set) in &observed {
        if set.is_empty() {
            continue;
        }
        match realized_windows.last_mut() {
            Some(w) if w.end_frame + 1 == *frame => {
                w.end_frame = *frame;
                w.defenders.push(set.clone());
            }
            _ => realized_windows.push(PlannedWindow {
                start_frame: *frame,
                end_frame: *frame,
                defenders: vec![set.clone()],
            }),
        }
    }
    if realized_windows != spec.planned_windows {
        return Err(gen_err(
            spec,
            format!(
                "planned windows not realized: planned {:?}, realized {:?}",
                spec.planned_windows, realized_windows
            ),
        ));
    }

    let carrier_motion: Vec<(f64, f64, f64, f64)> = vel
        .iter()
        .enumerate()
        .map(|(i, (vx, vy))| {
            let s = vx.hypot(*vy);
            let dis = if i == 0 {
                0.0
            } else {
                (carrier_pos[i].0 - carrier_pos[i - 1].0).hypot(carrier_pos[i].1 - carrier_pos[i - 1].1)
            };
            let a = if i == 0 {
                0.0
            } else {
                (s - vel[i - 1].0.hypot(vel[i - 1].1)).abs() * FRAMES_PER_SECOND
            };
            (s, a, dis, heading_degrees(*vx, *vy))
        })
        .collect();

    // Events: one per frame.
    let mut events: BTreeMap<FrameId, String> = BTreeMap::new();
    events.insert(spec.end_frame, spec.end_event.clone());
    events.entry(spec.snap_frame).or_insert_with(|| "ball_snap".into());
    if spec.snap_frame < spec.end_frame {
        events.entry(spec.snap_frame + 1).or_insert_with(|| "handoff".into());
    }
    if let Some(w) = realized_windows.first() {
        events.entry(w.start_frame).or_insert_with(|| "first_contact".into());
    }

    let meta = PlayMeta {
        key: spec.key,
        week: spec.week,
        ball_carrier_id: spec.carrier.id,
        possession_team: spec.offense,
        defensive_team: spec.defense,
        rush_designator: None,
        is_rush: true,
        description: format!("synthetic run, seed {}", spec.seed),
    };

    let football = TeamCode::new("football").expect("static code");
    let mut rows = Vec::with_capacity(frames.len() * 23);
    let mut push = |i: usize, id: Option<NflId>, club: TeamCode, p: (f64, f64), m: (f64, f64, f64, f64)| {
        let (s, a, dis, dir) = m;
        let mut row = TrackingFrame {
            game_id: spec.key.game_id,
            play_id: spec.key.play_id,
            nfl_id: id,
            frame_id: frames[i],
            club,
            play_direction: PlayDirection::Right,
            x: p.0,
            y: p.1,
            s,
            a,
            dis,
            o: dir,
            dir,
            event: events.get(&frames[i]).map(|e| e.as_str().into()),
        };
        if spec.direction == PlayDirection::Left {
            row = crate::ingest::mirror_frame(&row);
        }
        rows.push(row);
    };
    let defender_motion: Vec<_> = defender_pos.iter().map(|p| motion(p)).collect();
    let extras_motion: Vec<_> = extras_pos.iter().map(|p| motion(p)).collect();
    for i in 0..frames.len() {
        push(
            i,
            Some(spec.carrier.id),
            spec.offense,
            carrier_pos[i],
            carrier_motion[i],
        );
        for (k, p) in spec.offense_extras.iter().enumerate() {
            push(i, Some(p.id), spec.offense, extras_pos[k][i], extras_motion[k][i]);
        }
        for (k, d) in spec.defender_scripts.iter().enumerate() {
            push(
                i,
                Some(d.player.id),
                spec.defense,
                defender_pos[k][i],
                defender_motion[k][i],
            );
        }
        push(i, None, football, carrier_pos[i], carrier_motion[i]);
    }
    rows.sort_by_key(|r| (r.frame_id, r.nfl_id));

    // Tackle credit for defenders touching the carrier on the final frame.
    let mut box_scores = Vec::new();
    if let Some((_, last)) = observed.last() {
        for id in last {
            box_scores.push(BoxScore {
                key: spec.key,
                nfl_id: *id,
                tackle: (last.len() == 1) as u8,
                assist: (last.len() > 1) as u8,
                forced_fumble: 0,
                missed_tackle: 0,
            });
        }
    }

    let players = std::iter::once(&spec.carrier)
        .chain(&spec.offense_extras)
        .chain(spec.defender_scripts.iter().map(|d| &d.player))
        .map(SyntheticPlayer::meta)
        .collect();

    let realized = RealizedPlay {
        meta,
        rows,
        players,
        box_scores,
    };

    if !spec.planned_landmarks.is_empty() {
        if spec.planned_landmarks.len() != spec.planned_windows.len() {
            return Err(gen_err(spec, "planned landmarks must align with planned windows"));
        }
        let oracle = oracle_credits(&realized.meta, &realized.rows, spec.threshold);
        for (w, planned) in oracle.windows.iter().zip(&spec.planned_landmarks) {
            let Some(p) = planned else { continue };
            let close = |a: f64, b: f64| a == b || (a - b).abs() < 1e-9;
            if !(close(w.v_start, p.v_start)
                && close(w.v_end, p.v_end)
                && close(w.v_pre, p.v_pre)
                && close(w.v_post, p.v_post))
            {
                return Err(gen_err(
                    spec,
                    format!("window {} landmarks {:?} differ from plan {:?}", w.index, w, p),
                ));
            }
        }
    }
    Ok(realized)
}

// ---------------------------------------------------------------------------
// Reference evaluator
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct OracleWindow {
    pub index: usize,
    pub start_frame: FrameId,
    pub end_frame: FrameId,
    pub v_start: f64,
    pub v_end: f64,
    pub v_pre: f64,
    #[serde(with = "neg_inf_as_null")]
    pub v_post: f64,
    pub w: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct OracleCredit {
    pub index: usize,
    pub defender_id: NflId,
    pub w_player: f64,
    pub frames_involved: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct OracleOutcome {
    pub windows: Vec<OracleWindow>,
    pub credits: Vec<OracleCredit>,
}

mod neg_inf_as_null {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_f64(*v)
        } else {
            s.serialize_none()
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::NEG_INFINITY))
    }
}

const ORACLE_END_EVENTS: [&str; 6] = ["tackle", "out_of_bounds", "touchdown", "fumble", "qb_slide", "safety"];
const ORACLE_PEAK_EPSILON: f64 = 1e-6;

/// Direct enumeration of windows, values and per-player credits for one
/// play, from raw (unstandardized) rows.
///
/// Distances use raw coordinates; a left-moving play's forward velocity is
/// the negated x-component. Intended for small plays (a few hundred frames).
pub fn oracle_credits(meta: &PlayMeta, rows: &[TrackingFrame], threshold: f64) -> OracleOutcome {
    let mut frame_ids: Vec<FrameId> = rows.iter().map(|r| r.frame_id).collect();
    frame_ids.sort_unstable();
    frame_ids.dedup();
    let has_event = |f: FrameId, names: &[&str]| {
        rows.iter()
            .any(|r| r.frame_id == f && r.event.as_deref().is_some_and(|e| names.contains(&e)))
    };
    let Some(snap) = frame_ids
        .iter()
        .copied()
        .find(|f| has_event(*f, &["ball_snap"]))
        .or_else(|| {
            frame_ids
                .iter()
                .copied()
                .find(|f| has_event(*f, &["autoevent_ballsnap"]))
        })
    else {
        return OracleOutcome::default();
    };
    let Some(end) = frame_ids
        .iter()
        .copied()
        .find(|f| *f >= snap && has_event(*f, &ORACLE_END_EVENTS))
    else {
        return OracleOutcome::default();
    };

    // Per-frame forward velocity and defenders in range.
    let mut v: Vec<f64> = Vec::new();
    let mut near: Vec<Vec<NflId>> = Vec::new();
    let mut fids: Vec<FrameId> = Vec::new();
    for f in snap..=end {
        let Some(c) = rows
            .iter()
            .find(|r| r.frame_id == f && r.nfl_id == Some(meta.ball_carrier_id))
        else {
            return OracleOutcome::default();
        };
        let vx = c.s * (c.dir * std::f64::consts::PI / 180.0).sin();
        v.push(if c.play_direction == PlayDirection::Left {
            -vx
        } else {
            vx
        });
        let mut ids: Vec<NflId> = rows
            .iter()
            .filter(|r| r.frame_id == f && r.club == meta.defensive_team)
            .filter(|r| ((r.x - c.x).powi(2) + (r.y - c.y).powi(2)).sqrt() <= threshold)
            .filter_map(|r| r.nfl_id)
            .collect();
        ids.sort_unstable();
        ids.dedup();
        near.push(ids);
        fids.push(f);
    }

    let mut out = OracleOutcome::default();
    let n = v.len();
    let mut t = 0;
    while t < n {
        if near[t].is_empty() {
            t += 1;
            continue;
        }
        let start = t;
        while t + 1 < n && !near[t + 1].is_empty() {
            t += 1;
        }
        let end_i = t;
        t += 1;

        let mut before = f64::NEG_INFINITY;
        for &x in &v[..start] {
            if x > before {
                before = x;
            }
        }
        let mut inside = f64::NEG_INFINITY;
        for &x in &v[start..=end_i] {
            if x > inside {
                inside = x;
            }
        }
        let peak_inside = inside > before;
        let v_pre = if peak_inside {
            inside
        } else if v[start] > before {
            v[start]
        } else {
            before
        };
        let mut v_post = f64::NEG_INFINITY;
        for &x in &v[end_i + 1..] {
            if x > v_post {
                v_post = x;
            }
        }
        let (v_start, v_end) = (v[start], v[end_i]);

        let w = if v_pre <= ORACLE_PEAK_EPSILON {
            0.0
        } else {
            let pos = |x: f64| if x < 0.0 { 0.0 } else { x };
            let numerator_start = if peak_inside { pos(v_pre) } else { pos(v_start) };
            if pos(v_post) >= v_pre {
                0.0
            } else {
                let numerator_end = if pos(v_end) <= pos(v_post) {
                    pos(v_post)
                } else {
                    pos(v_end)
                };
                let raw = (numerator_start - numerator_end) / v_pre;
                if raw < 0.0 {
                    0.0
                } else if raw > 1.0 {
                    1.0
                } else {
                    raw
                }
            }
        };

        let index = out.windows.len() + 1;
        out.windows.push(OracleWindow {
            index,
            start_frame: fids[start],
            end_frame: fids[end_i],
            v_start,
            v_end,
            v_pre,
            v_post,
            w,
        });

        let frames_in_window = (end_i - start + 1) as f64;
        let mut per_player: BTreeMap<NflId, (f64, usize)> = BTreeMap::new();
        for set in &near[start..=end_i] {
            for id in set {
                let e = per_player.entry(*id).or_insert((0.0, 0));
                e.0 += w / frames_in_window / set.len() as f64;
                e.1 += 1;
            }
        }
        for (defender_id, (w_player, frames_involved)) in per_player {
            out.credits.push(OracleCredit {
                index,
                defender_id,
                w_player,
                frames_involved,
            });
        }
    }
    out
}

// ---------------------------------------------------------------------------
// Ground truth and file output
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct PlayTruth {
    pub play_key: String,
    pub seed: u64,
    #[serde(flatten)]
    pub outcome: OracleOutcome,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub threshold: f64,
    pub plays: Vec<PlayTruth>,
}

const TRACKING_HEADER: &str = "gameId,playId,nflId,displayName,frameId,club,playDirection,x,y,s,a,dis,o,dir,event\n";

fn write_file(path: &Path, contents: &str) -> Result<()> {
    std::fs::write(path, contents).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Writes a data directory in the ingest layout plus `ground_truth.json`,
/// and a `fractackle.conf` pinning the threshold the truth was built with.
pub fn generate(specs: &[SyntheticPlaySpec], out_dir: &Path) -> Result<GroundTruth> {
    let threshold = specs.first().map_or(1.5, |s| s.threshold);
    if specs.iter().any(|s| s.threshold != threshold) {
        return Err(Error::Generation(
            "all specs in one dataset must share a threshold".into(),
        ));
    }
    std::fs::create_dir_all(out_dir).map_err(|source| Error::Io {
        path: out_dir.to_path_buf(),
        source,
    })?;

    let mut games: BTreeMap<u64, u8> = BTreeMap::new();
    let mut players: BTreeMap<NflId, PlayerMeta> = BTreeMap::new();
    let mut plays = String::from("gameId,playId,ballCarrierId,possessionTeam,defensiveTeam,playDescription\n");
    let mut tackles = String::from("gameId,playId,nflId,tackle,assist,forcedFumble,missedTackle\n");
    let mut tracking: BTreeMap<u8, String> = BTreeMap::new();
    let mut truth = GroundTruth {
        threshold,
        plays: Vec::new(),
    };

    let mut ordered: Vec<&SyntheticPlaySpec> = specs.iter().collect();
    ordered.sort_by_key(|s| s.key);
    for spec in ordered {
        let realized = realize(spec)?;
        if let Some(prev) = games.insert(spec.key.game_id, spec.week) {
            if prev != spec.week {
                return Err(gen_err(spec, "game appears in two weeks"));
            }
        }
        for p in &realized.players {
            if let Some(existing) = players.get(&p.nfl_id) {
                if existing != p {
                    return Err(gen_err(spec, format!("player {} defined twice", p.nfl_id)));
                }
            }
            players.insert(p.nfl_id, p.clone());
        }
        let m = &realized.meta;
        let _ = writeln!(
            plays,
            "{},{},{},{},{},\"{}\"",
            m.key.game_id, m.key.play_id, m.ball_carrier_id, m.possession_team, m.defensive_team, m.description
        );
        for b in &realized.box_scores {
            let _ = writeln!(
                tackles,
                "{},{},{},{},{},{},{}",
                b.key.game_id, b.key.play_id, b.nfl_id, b.tackle, b.assist, b.forced_fumble, b.missed_tackle
            );
        }
        let buf = tracking.entry(spec.week).or_insert_with(|| TRACKING_HEADER.to_string());
        for r in &realized.rows {
            let (id, name) = match r.nfl_id {
                Some(id) => (id.to_string(), players[&id].display_name.clone()),
                None => ("NA".to_string(), "football".to_string()),
            };
            let _ = writeln!(
                buf,
                "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
                r.game_id,
                r.play_id,
                id,
                name,
                r.frame_id,
                r.club,
                r.play_direction,
                r.x,
                r.y,
                r.s,
                r.a,
                r.dis,
                r.o,
                r.dir,
                r.event.as_deref().unwrap_or("NA")
            );
        }
        truth.plays.push(PlayTruth {
            play_key: spec.key.to_string(),
            seed: spec.seed,
            outcome: oracle_credits(&realized.meta, &realized.rows, spec.threshold),
        });
    }

    let mut games_csv = String::from("gameId,season,week\n");
    for (g, w) in &games {
        let _ = writeln!(games_csv, "{g},2022,{w}");
    }
    let mut players_csv = String::from("nflId,displayName,position\n");
    for p in players.values() {
        let _ = writeln!(players_csv, "{},{},{}", p.nfl_id, p.display_name, p.position);
    }

    write_file(&out_dir.join("games.csv"), &games_csv)?;
    write_file(&out_dir.join("plays.csv"), &plays)?;
    write_file(&out_dir.join("players.csv"), &players_csv)?;
    write_file(&out_dir.join("tackles.csv"), &tackles)?;
    for w in 1..=9u8 {
        let contents = tracking.get(&w).map_or(TRACKING_HEADER, String::as_str);
        write_file(&out_dir.join(format!("tracking_week_{w}.csv")), contents)?;
    }
    let json = serde_json::to_string_pretty(&truth).map_err(|e| Error::Generation(e.to_string()))?;
    write_file(&out_dir.join("ground_truth.json"), &(json + "\n"))?;
    write_file(
        &out_dir.join("fractackle.conf"),
        &format!("# written by the synthetic generator\nthreshold={threshold}\n"),
    )?;
    Ok(truth)
}

// ---------------------------------------------------------------------------
// Spec builders
// ---------------------------------------------------------------------------

/// Offense and defense personnel for one synthetic team.
#[derive(Debug, Clone, PartialEq)]
pub struct Roster {
    pub team: TeamCode,
    pub carrier: SyntheticPlayer,
    pub offense_extras: Vec<SyntheticPlayer>,
    pub defenders: Vec<SyntheticPlayer>,
}

const DEFENSIVE_POSITIONS: [Position; 11] = [
    Position::DE,
    Position::DT,
    Position::NT,
    Position::DE,
    Position::OLB,
    Position::ILB,
    Position::ILB,
    Position::OLB,
    Position::CB,
    Position::FS,
    Position::SS,
];

/// Deterministic roster; ids are `base + 1..=22`.
pub fn roster(team: &str, base: NflId) -> Roster {
    let team_code = TeamCode::new(team).expect("team code");
    let offense_positions = [
        Position::QB,
        Position::FB,
        Position::WR,
        Position::WR,
        Position::TE,
        Position::T,
        Position::T,
        Position::G,
        Position::G,
        Position::C,
    ];
    Roster {
        team: team_code,
        carrier: SyntheticPlayer::new(base + 1, format!("{team} Runner"), Position::RB),
        offense_extras: offense_positions
            .iter()
            .enumerate()
            .map(|(i, p)| SyntheticPlayer::new(base + 2 + i as NflId, format!("{team} Offense {}", i + 1), p.clone()))
            .collect(),
        defenders: DEFENSIVE_POSITIONS
            .iter()
            .enumerate()
            .map(|(i, p)| SyntheticPlayer::new(base + 12 + i as NflId, format!("{team} Defender {}", i + 1), p.clone()))
            .collect(),
    }
}

fn far_offset(rng: &mut ChaCha8Rng, threshold: f64) -> (f64, f64) {
    let r = rng.gen_range(threshold + 0.3..threshold + 6.0);
    let theta = rng.gen_range(0.0..std::f64::consts::TAU);
    (r * theta.cos(), r * theta.sin())
}

fn near_offset(rng: &mut ChaCha8Rng, threshold: f64) -> (f64, f64) {
    let r = rng.gen_range(0.1..threshold - 0.1);
    let theta = rng.gen_range(0.0..std::f64::consts::TAU);
    (r * theta.cos(), r * theta.sin())
}

/// Random small play between `offense` and `defense`.
///
/// Velocities follow a reflected random walk that drops while defenders
/// are close, so every valuation case shows up across seeds.
pub fn random_spec(
    seed: u64,
    key: PlayKey,
    week: u8,
    offense: &Roster,
    defense: &Roster,
    threshold: f64,
) -> SyntheticPlaySpec {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pre_snap: FrameId = rng.gen_range(0..4);
    let track_len: FrameId = rng.gen_range(5..=60);
    let first_frame = 1;
    let snap_frame = first_frame + pre_snap;
    let end_frame = snap_frame + track_len - 1;
    let frames: Vec<FrameId> = (first_frame..=end_frame).collect();

    // Contact mask over the track from a two-state Markov chain.
    let mut contact = vec![false; frames.len()];
    let mut state = false;
    for (i, f) in frames.iter().enumerate() {
        if *f < snap_frame {
            continue;
        }
        state = if state { rng.gen_bool(0.75) } else { rng.gen_bool(0.15) };
        contact[i] = state;
    }

    // Per-frame sets with some continuity.
    let ids: Vec<NflId> = defense.defenders.iter().map(|d| d.id).collect();
    let mut sets: Vec<Vec<NflId>> = vec![Vec::new(); frames.len()];
    let mut prev: Vec<NflId> = Vec::new();
    for i in 0..frames.len() {
        if !contact[i] {
            prev.clear();
            continue;
        }
        let set = if !prev.is_empty() && rng.gen_bool(0.6) {
            prev.clone()
        } else {
            let k = rng.gen_range(1..=3);
            let mut s = BTreeSet::new();
            while s.len() < k {
                s.insert(ids[rng.gen_range(0..ids.len())]);
            }
            s.into_iter().collect()
        };
        sets[i] = set.clone();
        prev = set;
    }

    // Carrier velocity knots, one per frame.
    let degenerate = rng.gen_bool(0.05);
    let mut vx: f64 = if degenerate {
        rng.gen_range(-2.0..0.0)
    } else {
        rng.gen_range(0.0..6.0)
    };
    let mut carrier_path = Vec::with_capacity(frames.len());
    for (i, f) in frames.iter().enumerate() {
        let vy = rng.gen_range(-1.0..1.0);
        carrier_path.push(VelocityKnot { frame: *f, vx, vy });
        let drift = if contact[i] { -0.7 } else { 0.35 };
        vx += drift + rng.gen_range(-1.0..1.0);
        if degenerate {
            vx = -vx.abs().min(2.0);
        } else {
            if vx > 10.0 {
                vx = 20.0 - vx;
            }
            if vx < -2.0 {
                vx = -4.0 - vx;
            }
        }
    }

    let defender_scripts = defense
        .defenders
        .iter()
        .map(|d| DefenderScript {
            player: d.clone(),
            offsets: frames
                .iter()
                .enumerate()
                .map(|(i, f)| {
                    let (dx, dy) = if sets[i].contains(&d.id) {
                        near_offset(&mut rng, threshold)
                    } else {
                        far_offset(&mut rng, threshold)
                    };
                    OffsetKnot { frame: *f, dx, dy }
                })
                .collect(),
        })
        .collect();

    let mut planned_windows: Vec<PlannedWindow> = Vec::new();
    for (i, f) in frames.iter().enumerate() {
        if sets[i].is_empty() {
            continue;
        }
        match planned_windows.last_mut() {
            Some(w) if w.end_frame + 1 == *f => {
                w.end_frame = *f;
                w.defenders.push(sets[i].clone());
            }
            _ => planned_windows.push(PlannedWindow {
                start_frame: *f,
                end_frame: *f,
                defenders: vec![sets[i].clone()],
            }),
        }
    }

    // Place the start so the whole path, with a margin for the other
    // players, stays on the field.
    let (mut lo, mut hi, mut x) = (0.0f64, 0.0f64, 0.0f64);
    for k in &carrier_path {
        lo = lo.min(x);
        hi = hi.max(x);
        x += k.vx / FRAMES_PER_SECOND;
    }
    let (min_x, max_x) = (16.0 - lo, FIELD_LENGTH - 10.0 - hi);
    let start = (
        if min_x < max_x {
            rng.gen_range(min_x..max_x)
        } else {
            (min_x + max_x) / 2.0
        },
        rng.gen_range(18.0..35.0),
    );

    let end_event = if contact[frames.len() - 1] {
        "tackle"
    } else {
        "out_of_bounds"
    };
    SyntheticPlaySpec {
        seed,
        key,
        week,
        direction: if rng.gen_bool(0.5) {
            PlayDirection::Left
        } else {
            PlayDirection::Right
        },
        offense: offense.team,
        defense: defense.team,
        carrier: offense.carrier.clone(),
        offense_extras: offense.offense_extras.clone(),
        first_frame,
        snap_frame,
        end_frame,
        end_event: end_event.into(),
        start,
        carrier_path,
        defender_scripts,
        threshold,
        planned_windows,
        planned_landmarks: Vec::new(),
    }
}

/// A league of random plays spread over weeks 1-9.
pub fn random_dataset_specs(seed: u64, plays: usize, threshold: f64) -> Vec<SyntheticPlaySpec> {
    let teams: Vec<Roster> = ["AAA", "BBB", "CCC", "DDD"]
        .iter()
        .enumerate()
        .map(|(i, t)| roster(t, 1000 * (i as NflId + 1)))
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..plays)
        .map(|i| {
            let game = (i / 8) as u64;
            let week = (game % 9) as u8 + 1;
            let off = rng.gen_range(0..teams.len());
            let def = (off + rng.gen_range(1..teams.len())) % teams.len();
            let play_seed: u64 = rng.gen();
            let key = PlayKey::new(2_022_000_000 + game, (i % 8) as u32 + 1);
            random_spec(play_seed, key, week, &teams[off], &teams[def], threshold)
        })
        .collect()
}

/// A three-window run with seven credited defenders: a fully recovered
/// early window, a two-defender window after the peak, and a long final
/// window ending in the tackle.
pub fn worked_example_spec() -> SyntheticPlaySpec {
    let offense = roster("NYG", 5000);
    let titans = |id, name: &str, pos| SyntheticPlayer::new(id, name, pos);
    let dupree = titans(48, "Bud Dupree", Position::OLB);
    let hooker = titans(37, "Amani Hooker", Position::FS);
    let long = titans(51, "David Long", Position::ILB);
    let autry = titans(96, "Denico Autry", Position::DE);
    let simmons = titans(98, "Jeffery Simmons", Position::DT);
    let amadi = titans(30, "Ugochukwu Amadi", Position::FS);
    let cunningham = titans(41, "Zach Cunningham", Position::ILB);
    let others = [
        titans(20, "Titans CB 1", Position::CB),
        titans(21, "Titans CB 2", Position::CB),
        titans(22, "Titans SS", Position::SS),
        titans(23, "Titans NT", Position::NT),
    ];

    // Forward velocity by frame id; the track runs from the snap at frame 6
    // to the tackle at frame 64.
    let speed = |f: FrameId| -> f64 {
        let lerp = |f0: FrameId, v0: f64, f1: FrameId, v1: f64| v0 + (v1 - v0) * (f - f0) as f64 / (f1 - f0) as f64;
        match f {
            ..=10 => 0.0,
            11..=22 => lerp(10, 0.0, 22, 3.0),
            23 => 3.05,
            24 => 3.2,
            25 => 3.3,
            26 => 3.1,
            27 => 3.0,
            28..=44 => lerp(28, 3.2, 45, 5.16),
            45 => 5.16,
            46 => 5.10,
            47 => 5.01,
            48 => 4.90,
            49 => 4.80,
            50 => 4.72,
            51 => 4.60,
            _ => lerp(52, 4.447, 64, 0.711),
        }
    };
    let frames: Vec<FrameId> = (1..=64).collect();
    let carrier_path = frames
        .iter()
        .map(|&f| VelocityKnot {
            frame: f,
            vx: speed(f),
            vy: 0.0,
        })
        .collect();

    let w3_sets = |f: FrameId| -> Vec<NflId> {
        match f {
            52 => vec![autry.id],
            53 | 54 => vec![simmons.id],
            55 => vec![simmons.id, amadi.id, cunningham.id],
            _ => vec![amadi.id, cunningham.id],
        }
    };
    let present = |id: NflId, f: FrameId| -> bool {
        match f {
            24..=27 => id == dupree.id,
            47 => id == hooker.id,
            48 | 49 => id == hooker.id || id == long.id,
            50 => id == long.id,
            52..=64 => w3_sets(f).contains(&id),
            _ => false,
        }
    };

    let everyone: Vec<SyntheticPlayer> = [&dupree, &hooker, &long, &autry, &simmons, &amadi, &cunningham]
        .into_iter()
        .cloned()
        .chain(others.iter().cloned())
        .collect();
    let defender_scripts = everyone
        .iter()
        .enumerate()
        .map(|(k, p)| {
            let angle = k as f64 * std::f64::consts::TAU / 11.0;
            DefenderScript {
                player: p.clone(),
                offsets: frames
                    .iter()
                    .map(|&f| {
                        let r = if present(p.id, f) { 1.0 } else { 3.0 + 0.2 * k as f64 };
                        OffsetKnot {
                            frame: f,
                            dx: r * angle.cos(),
                            dy: r * angle.sin(),
                        }
                    })
                    .collect(),
            }
        })
        .collect();

    let window = |start: FrameId, end: FrameId| PlannedWindow {
        start_frame: start,
        end_frame: end,
        defenders: (start..=end)
            .map(|f| {
                let mut ids: Vec<NflId> = everyone.iter().map(|p| p.id).filter(|id| present(*id, f)).collect();
                ids.sort_unstable();
                ids
            })
            .collect(),
    };

    SyntheticPlaySpec {
        seed: 0,
        key: PlayKey::new(2022091100, 86),
        week: 1,
        direction: PlayDirection::Left,
        offense: offense.team,
        defense: TeamCode::new("TEN").expect("team code"),
        carrier: SyntheticPlayer::new(5001, "Saquon Barkley", Position::RB),
        offense_extras: offense.offense_extras,
        first_frame: 1,
        snap_frame: 6,
        end_frame: 64,
        end_event: "tackle".into(),
        start: (25.0, 23.5),
        carrier_path,
        defender_scripts,
        threshold: 1.5,
        planned_windows: vec![window(24, 27), window(47, 50), window(52, 64)],
        planned_landmarks: vec![
            None,
            Some(PlannedLandmarks {
                v_start: 5.01,
                v_end: 4.72,
                v_pre: 5.16,
                v_post: 4.60,
            }),
            None,
        ],
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn interpolation_holds_ends_and_blends() {
        let k = [(2, 0.0, 10.0), (6, 4.0, 2.0)];
        assert_eq!(interpolate(&k, 1), (0.0, 10.0));
        assert_eq!(interpolate(&k, 4), (2.0, 6.0));
        assert_eq!(interpolate(&k, 6), (4.0, 2.0));
        assert_eq!(interpolate(&k, 9), (4.0, 2.0));
    }

    #[test]
    fn worked_example_realizes() {
        let spec = worked_example_spec();
        let play = realize(&spec).unwrap();
        assert_eq!(play.rows.len(), 64 * 23);
        assert!(play.rows.iter().all(|r| r.play_direction == PlayDirection::Left));
        let out = oracle_credits(&play.meta, &play.rows, 1.5);
        assert_eq!(out.windows.len(), 3);
        assert!((out.windows[1].w - 0.29 / 5.16).abs() < 1e-9);
    }

    #[test]
    fn unrealized_plan_is_an_error() {
        let mut spec = worked_example_spec();
        spec.planned_windows.pop();
        assert!(matches!(realize(&spec), Err(Error::Generation(_))));
        let mut spec = worked_example_spec();
        spec.planned_landmarks[1] = Some(PlannedLandmarks {
            v_start: 5.0,
            v_end: 4.72,
            v_pre: 5.16,
            v_post: 4.6,
        });
        assert!(realize(&spec).is_err());
    }

    #[test]
    fn random_specs_realize() {
        for spec in random_dataset_specs(7, 50, 1.5) {
            realize(&spec).unwrap_or_else(|e| panic!("{e}"));
        }
    }

    #[test]
    fn no_contact_no_truth() {
        let mut spec = worked_example_spec();
        for d in &mut spec.defender_scripts {
            for o in &mut d.offsets {
                o.dx = 4.0 * o.dx.signum().max(0.5);
                o.dy = 4.0;
            }
        }
        spec.planned_windows.clear();
        spec.planned_landmarks.clear();
        let play = realize(&spec).unwrap();
        let out = oracle_credits(&play.meta, &play.rows, 1.5);
        assert!(out.windows.is_empty() && out.credits.is_empty());
    }

    #[test]
    fn oracle_on_empty_play() {
        let spec = worked_example_spec();
        let play = realize(&spec).unwrap();
        assert_eq!(oracle_credits(&play.meta, &[], 1.5), OracleOutcome::default());
    }
}
