//! Loading, validation and standardization of tracking inputs.
//!
//! A data directory holds `games.csv`, `plays.csv`, `players.csv`,
//! `tackles.csv` and one `tracking_week_{w}.csv` per requested week. Rows
//! that cannot be parsed are collected in a [`Reject`] list instead of being
//! dropped, so every input line is accounted for in the [`LoadReport`].

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fs::File;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::types::{
    FrameId, GameId, NflId, PlayDirection, PlayId, PlayKey, Position, TeamCode, FIELD_LENGTH, FIELD_WIDTH,
};

/// One player (or ball) observation at one frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrackingFrame {
    pub game_id: GameId,
    pub play_id: PlayId,
    /// `None` for the ball.
    pub nfl_id: Option<NflId>,
    pub frame_id: FrameId,
    pub club: TeamCode,
    pub play_direction: PlayDirection,
    pub x: f64,
    pub y: f64,
    pub s: f64,
    pub a: f64,
    pub dis: f64,
    pub o: f64,
    pub dir: f64,
    pub event: Option<Box<str>>,
}

impl TrackingFrame {
    pub fn play_key(&self) -> PlayKey {
        PlayKey::new(self.game_id, self.play_id)
    }

    pub fn is_ball(&self) -> bool {
        self.nfl_id.is_none()
    }

    pub fn event(&self) -> Option<&str> {
        self.event.as_deref()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Game {
    pub game_id: GameId,
    pub week: u8,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlayMeta {
    pub key: PlayKey,
    pub week: u8,
    pub ball_carrier_id: NflId,
    pub possession_team: TeamCode,
    pub defensive_team: TeamCode,
    /// Explicit run/pass flag from the play table, when that column exists.
    pub rush_designator: Option<bool>,
    /// Resolved at load time from the designator or the tracking events.
    pub is_rush: bool,
    pub description: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlayerMeta {
    pub nfl_id: NflId,
    pub display_name: String,
    pub position: Position,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BoxScore {
    pub key: PlayKey,
    pub nfl_id: NflId,
    pub tackle: u8,
    pub assist: u8,
    pub forced_fumble: u8,
    pub missed_tackle: u8,
}

/// A play rotated so the offense moves toward +x, grouped by frame.
#[derive(Debug, Clone, PartialEq)]
pub struct StandardizedPlay {
    pub meta: PlayMeta,
    pub frames: BTreeMap<FrameId, Vec<TrackingFrame>>,
    pub snap_frame: FrameId,
    pub end_frame: FrameId,
}

impl StandardizedPlay {
    pub fn key(&self) -> PlayKey {
        self.meta.key
    }

    /// Ball-carrier record at `frame`, if present.
    pub fn carrier_at(&self, frame: FrameId) -> Option<&TrackingFrame> {
        self.frames
            .get(&frame)?
            .iter()
            .find(|f| f.nfl_id == Some(self.meta.ball_carrier_id))
    }

    /// Defensive player records at `frame`. The ball never counts.
    pub fn defenders_at(&self, frame: FrameId) -> impl Iterator<Item = &TrackingFrame> {
        let team = self.meta.defensive_team;
        self.frames
            .get(&frame)
            .into_iter()
            .flatten()
            .filter(move |f| !f.is_ball() && f.club == team)
    }

    /// Distinct defender ids that appear anywhere in the play.
    pub fn defender_ids(&self) -> BTreeSet<NflId> {
        let team = self.meta.defensive_team;
        self.frames
            .values()
            .flatten()
            .filter(|f| f.club == team)
            .filter_map(|f| f.nfl_id)
            .collect()
    }
}

/// One rejected input row or play.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Reject {
    pub file: String,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub line: Option<u64>,
    #[serde(rename = "playKey", skip_serializing_if = "Option::is_none", default)]
    pub play_key: Option<String>,
    pub reason: String,
}

impl Reject {
    fn row(file: &str, line: u64, reason: impl Into<String>) -> Self {
        Self {
            file: file.to_string(),
            line: Some(line),
            play_key: None,
            reason: reason.into(),
        }
    }

    pub fn play(file: &str, key: PlayKey, reason: &RejectReason) -> Self {
        Self {
            file: file.to_string(),
            line: None,
            play_key: Some(key.to_string()),
            reason: reason.to_string(),
        }
    }
}

/// Writes rejects as JSON lines.
pub fn write_rejects<W: std::io::Write>(mut out: W, rejects: &[Reject]) -> std::io::Result<()> {
    for r in rejects {
        serde_json::to_writer(&mut out, r)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

/// Play-level rejection reasons.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum RejectReason {
    #[error("mixed_direction: playDirection differs across frames")]
    MixedDirection,
    #[error("player_count: frame {frame} has {found} player records, expected {expected}")]
    PlayerCount {
        frame: FrameId,
        found: usize,
        expected: usize,
    },
    #[error("missing_snap: no ball_snap event")]
    MissingSnap,
    #[error("missing_end_event: no end-of-play event at or after the snap")]
    MissingEndEvent,
    #[error("carrier_missing: ball-carrier absent at frame {0}")]
    CarrierMissing(FrameId),
    #[error("carrier_not_offense: ball-carrier {0} is not on the possession team")]
    CarrierNotOffense(NflId),
    #[error("no_tracking: play has no tracking rows")]
    NoTracking,
    #[error("unknown_play: tracking rows for a play missing from plays.csv")]
    UnknownPlay,
    #[error("unknown_carrier: ball-carrier {0} missing from players.csv")]
    UnknownCarrier(NflId),
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileReport {
    pub file: String,
    pub rows: u64,
    pub accepted: u64,
    pub rejected: u64,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct LoadReport {
    pub files: Vec<FileReport>,
    pub rejects: Vec<Reject>,
}

/// Parsed, schema-validated inputs. Immutable after loading.
#[derive(Debug, Clone, Default)]
pub struct Dataset {
    pub weeks: BTreeSet<u8>,
    pub games: BTreeMap<GameId, Game>,
    pub plays: BTreeMap<PlayKey, PlayMeta>,
    pub players: BTreeMap<NflId, PlayerMeta>,
    pub box_scores: BTreeMap<(PlayKey, NflId), BoxScore>,
    /// Tracking rows per play, sorted by `(frameId, nflId)`.
    pub tracking: BTreeMap<PlayKey, Vec<TrackingFrame>>,
    pub report: LoadReport,
}

impl Dataset {
    pub fn frame_count(&self) -> usize {
        self.tracking.values().map(Vec::len).sum()
    }
}

/// Knobs for play selection and play-level validation.
#[derive(Debug, Clone, PartialEq)]
pub struct IngestConfig {
    pub snap_events: Vec<String>,
    pub end_events: BTreeSet<String>,
    pub handoff_events: BTreeSet<String>,
    /// Events whose name starts with this prefix count as a pass.
    pub pass_event_prefix: String,
    pub carrier_positions: BTreeSet<Position>,
    /// Required player records per frame (ball excluded). `None` skips the check.
    pub players_per_frame: Option<usize>,
}

impl Default for IngestConfig {
    fn default() -> Self {
        Self {
            snap_events: vec!["ball_snap".into(), "autoevent_ballsnap".into()],
            end_events: ["tackle", "out_of_bounds", "touchdown", "fumble", "qb_slide", "safety"]
                .into_iter()
                .map(String::from)
                .collect(),
            handoff_events: ["handoff"].into_iter().map(String::from).collect(),
            pass_event_prefix: "pass_".into(),
            carrier_positions: [Position::RB].into_iter().collect(),
            players_per_frame: Some(22),
        }
    }
}

/// CSV helper mapping header names to column indices.
struct Columns {
    file: String,
    index: HashMap<String, usize>,
}

impl Columns {
    fn new(file: &str, headers: &csv::StringRecord) -> Self {
        let index = headers
            .iter()
            .enumerate()
            .map(|(i, h)| (h.trim().trim_start_matches('\u{feff}').to_string(), i))
            .collect();
        Self {
            file: file.to_string(),
            index,
        }
    }

    fn require(&self, name: &str) -> Result<usize> {
        self.index.get(name).copied().ok_or_else(|| Error::MissingColumn {
            file: self.file.clone(),
            column: name.to_string(),
        })
    }

    fn optional(&self, names: &[&str]) -> Option<usize> {
        names.iter().find_map(|n| self.index.get(*n).copied())
    }
}

fn is_na(s: &str) -> bool {
    s.is_empty() || s == "NA"
}

fn field<'r>(rec: &'r csv::StringRecord, idx: usize, name: &str) -> Result<&'r str, String> {
    rec.get(idx)
        .map(str::trim)
        .ok_or_else(|| format!("missing_field: column {name}"))
}

fn parse_int<T: std::str::FromStr>(rec: &csv::StringRecord, idx: usize, name: &str) -> Result<T, String> {
    let raw = field(rec, idx, name)?;
    raw.parse()
        .map_err(|_| format!("malformed_numeric: column {name} value `{raw}`"))
}

fn parse_f64(rec: &csv::StringRecord, idx: usize, name: &str) -> Result<f64, String> {
    let raw = field(rec, idx, name)?;
    match raw.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        _ => Err(format!("malformed_numeric: column {name} value `{raw}`")),
    }
}

fn parse_nonneg(rec: &csv::StringRecord, idx: usize, name: &str) -> Result<f64, String> {
    let v = parse_f64(rec, idx, name)?;
    if v < 0.0 {
        return Err(format!("out_of_range: column {name} value {v} is negative"));
    }
    Ok(v)
}

fn parse_flag(rec: &csv::StringRecord, idx: usize, name: &str) -> Result<u8, String> {
    match field(rec, idx, name)? {
        "0" | "0.0" => Ok(0),
        "1" | "1.0" => Ok(1),
        other => Err(format!("not_binary: column {name} value `{other}`")),
    }
}

fn parse_bool(raw: &str) -> Option<bool> {
    match raw.trim().to_ascii_lowercase().as_str() {
        "1" | "true" | "t" | "yes" | "run" | "rush" => Some(true),
        "0" | "false" | "f" | "no" | "pass" => Some(false),
        _ => None,
    }
}

fn parse_team(rec: &csv::StringRecord, idx: usize, name: &str) -> Result<TeamCode, String> {
    let raw = field(rec, idx, name)?;
    TeamCode::new(raw).ok_or_else(|| format!("malformed_code: column {name} value `{raw}`"))
}

fn open_csv(dir: &Path, name: &str) -> Result<csv::Reader<File>> {
    let path = dir.join(name);
    if !path.is_file() {
        return Err(Error::MissingFile(path));
    }
    let file = File::open(&path).map_err(|source| Error::Io { path, source })?;
    Ok(csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(file))
}

/// Runs `parse` over every data row of `name`, collecting rejects.
fn read_table<T>(
    dir: &Path,
    name: &str,
    mut parse: impl FnMut(&Columns, &csv::StringRecord) -> Result<T, String>,
    required: &[&str],
) -> Result<(Vec<(u64, T)>, FileReport, Vec<Reject>)> {
    let mut reader = open_csv(dir, name)?;
    let headers = reader.headers().map_err(|source| Error::Csv {
        file: name.to_string(),
        source,
    })?;
    let cols = Columns::new(name, headers);
    for r in required {
        cols.require(r)?;
    }
    let mut out = Vec::new();
    let mut rejects = Vec::new();
    let mut report = FileReport {
        file: name.to_string(),
        ..Default::default()
    };
    let mut rec = csv::StringRecord::new();
    loop {
        match reader.read_record(&mut rec) {
            Ok(false) => break,
            Ok(true) => {
                report.rows += 1;
                let line = rec.position().map(|p| p.line()).unwrap_or(report.rows + 1);
                match parse(&cols, &rec) {
                    Ok(v) => {
                        report.accepted += 1;
                        out.push((line, v));
                    }
                    Err(reason) => {
                        report.rejected += 1;
                        rejects.push(Reject::row(name, line, reason));
                    }
                }
            }
            Err(e) => {
                // Undecodable rows (bad UTF-8 etc.) are rejects, not fatal.
                report.rows += 1;
                report.rejected += 1;
                let line = e.position().map(|p| p.line()).unwrap_or(report.rows + 1);
                rejects.push(Reject::row(name, line, format!("unparseable: {e}")));
            }
        }
    }
    Ok((out, report, rejects))
}

fn load_games(dir: &Path) -> Result<(BTreeMap<GameId, Game>, FileReport, Vec<Reject>)> {
    let required = ["gameId", "week"];
    let (rows, mut report, mut rejects) = read_table(
        dir,
        "games.csv",
        |c, r| {
            let game_id = parse_int(r, c.require("gameId").unwrap(), "gameId")?;
            let week: u8 = parse_int(r, c.require("week").unwrap(), "week")?;
            if !(1..=9).contains(&week) {
                return Err(format!("out_of_range: week {week}"));
            }
            Ok(Game { game_id, week })
        },
        &required,
    )?;
    let mut games = BTreeMap::new();
    for (line, g) in rows {
        if games.contains_key(&g.game_id) {
            demote(
                &mut report,
                &mut rejects,
                "games.csv",
                line,
                format!("duplicate_key: gameId {}", g.game_id),
            );
        } else {
            games.insert(g.game_id, g);
        }
    }
    Ok((games, report, rejects))
}

fn demote(report: &mut FileReport, rejects: &mut Vec<Reject>, file: &str, line: u64, reason: String) {
    report.accepted -= 1;
    report.rejected += 1;
    rejects.push(Reject::row(file, line, reason));
}

struct RawPlay {
    key: PlayKey,
    ball_carrier_id: NflId,
    possession_team: TeamCode,
    defensive_team: TeamCode,
    rush_designator: Option<bool>,
    description: String,
}

fn load_plays(dir: &Path) -> Result<(Vec<(u64, RawPlay)>, FileReport, Vec<Reject>)> {
    let required = ["gameId", "playId", "ballCarrierId", "possessionTeam", "defensiveTeam"];
    read_table(
        dir,
        "plays.csv",
        |c, r| {
            let game_id = parse_int(r, c.require("gameId").unwrap(), "gameId")?;
            let play_id = parse_int(r, c.require("playId").unwrap(), "playId")?;
            let ball_carrier_id = parse_int(r, c.require("ballCarrierId").unwrap(), "ballCarrierId")?;
            let possession_team = parse_team(r, c.require("possessionTeam").unwrap(), "possessionTeam")?;
            let defensive_team = parse_team(r, c.require("defensiveTeam").unwrap(), "defensiveTeam")?;
            if possession_team == defensive_team {
                return Err(format!(
                    "invalid_teams: possessionTeam equals defensiveTeam ({possession_team})"
                ));
            }
            let rush_designator = match c.optional(&["isRush"]) {
                Some(idx) => {
                    let raw = field(r, idx, "isRush")?;
                    if is_na(raw) {
                        None
                    } else {
                        Some(parse_bool(raw).ok_or_else(|| format!("not_boolean: column isRush value `{raw}`"))?)
                    }
                }
                None => None,
            };
            let description = c
                .optional(&["playDescription", "description"])
                .and_then(|i| r.get(i))
                .unwrap_or("")
                .to_string();
            Ok(RawPlay {
                key: PlayKey::new(game_id, play_id),
                ball_carrier_id,
                possession_team,
                defensive_team,
                rush_designator,
                description,
            })
        },
        &required,
    )
}

fn load_players(dir: &Path) -> Result<(BTreeMap<NflId, PlayerMeta>, FileReport, Vec<Reject>)> {
    let required = ["nflId", "displayName", "position"];
    let (rows, mut report, mut rejects) = read_table(
        dir,
        "players.csv",
        |c, r| {
            let nfl_id = parse_int(r, c.require("nflId").unwrap(), "nflId")?;
            let display_name = field(r, c.require("displayName").unwrap(), "displayName")?.to_string();
            let position = field(r, c.require("position").unwrap(), "position")?
                .parse::<Position>()
                .unwrap_or_else(|never| match never {});
            Ok(PlayerMeta {
                nfl_id,
                display_name,
                position,
            })
        },
        &required,
    )?;
    let mut players = BTreeMap::new();
    for (line, p) in rows {
        if players.contains_key(&p.nfl_id) {
            demote(
                &mut report,
                &mut rejects,
                "players.csv",
                line,
                format!("duplicate_key: nflId {}", p.nfl_id),
            );
        } else {
            players.insert(p.nfl_id, p);
        }
    }
    Ok((players, report, rejects))
}

type BoxScores = BTreeMap<(PlayKey, NflId), BoxScore>;

fn load_tackles(dir: &Path) -> Result<(BoxScores, FileReport, Vec<Reject>)> {
    let required = ["gameId", "playId", "nflId", "tackle", "assist"];
    let (rows, mut report, mut rejects) = read_table(
        dir,
        "tackles.csv",
        |c, r| {
            let game_id = parse_int(r, c.require("gameId").unwrap(), "gameId")?;
            let play_id = parse_int(r, c.require("playId").unwrap(), "playId")?;
            let nfl_id = parse_int(r, c.require("nflId").unwrap(), "nflId")?;
            let tackle = parse_flag(r, c.require("tackle").unwrap(), "tackle")?;
            let assist = parse_flag(r, c.require("assist").unwrap(), "assist")?;
            let forced_fumble = match c.optional(&["forcedFumble"]) {
                Some(i) => parse_flag(r, i, "forcedFumble")?,
                None => 0,
            };
            let missed_tackle = match c.optional(&["missedTackle"]) {
                Some(i) => parse_flag(r, i, "missedTackle")?,
                None => 0,
            };
            Ok(BoxScore {
                key: PlayKey::new(game_id, play_id),
                nfl_id,
                tackle,
                assist,
                forced_fumble,
                missed_tackle,
            })
        },
        &required,
    )?;
    let mut out = BTreeMap::new();
    for (line, b) in rows {
        let k = (b.key, b.nfl_id);
        if out.contains_key(&k) {
            demote(
                &mut report,
                &mut rejects,
                "tackles.csv",
                line,
                format!("duplicate_key: {} nflId {}", b.key, b.nfl_id),
            );
        } else {
            out.insert(k, b);
        }
    }
    Ok((out, report, rejects))
}

const TRACKING_COLUMNS: [&str; 14] = [
    "gameId",
    "playId",
    "nflId",
    "frameId",
    "club",
    "playDirection",
    "x",
    "y",
    "s",
    "a",
    "dis",
    "o",
    "dir",
    "event",
];

fn parse_tracking_row(idx: &[usize; 14], r: &csv::StringRecord) -> Result<TrackingFrame, String> {
    let game_id = parse_int(r, idx[0], "gameId")?;
    let play_id = parse_int(r, idx[1], "playId")?;
    let nfl_raw = field(r, idx[2], "nflId")?;
    let nfl_id = if is_na(nfl_raw) {
        None
    } else {
        // Some exports write ids as floats ("47857.0").
        let id = nfl_raw
            .parse::<NflId>()
            .ok()
            .or_else(|| {
                nfl_raw
                    .parse::<f64>()
                    .ok()
                    .filter(|v| v.fract() == 0.0 && *v >= 0.0 && *v <= NflId::MAX as f64)
                    .map(|v| v as NflId)
            })
            .ok_or_else(|| format!("malformed_numeric: column nflId value `{nfl_raw}`"))?;
        Some(id)
    };
    let frame_id: FrameId = parse_int(r, idx[3], "frameId")?;
    if frame_id == 0 {
        return Err("out_of_range: frameId must be positive".into());
    }
    let club = parse_team(r, idx[4], "club")?;
    let play_direction = field(r, idx[5], "playDirection")?.parse::<PlayDirection>()?;
    let x = parse_f64(r, idx[6], "x")?;
    let y = parse_f64(r, idx[7], "y")?;
    let s = parse_nonneg(r, idx[8], "s")?;
    let a = parse_nonneg(r, idx[9], "a")?;
    let dis = parse_nonneg(r, idx[10], "dis")?;
    let angle = |i: usize, name: &str| -> Result<f64, String> {
        let raw = field(r, i, name)?;
        if nfl_id.is_none() && is_na(raw) {
            return Ok(0.0);
        }
        Ok(parse_f64(r, i, name)?.rem_euclid(360.0))
    };
    let o = angle(idx[11], "o")?;
    let dir = angle(idx[12], "dir")?;
    let event_raw = field(r, idx[13], "event").unwrap_or("");
    let event = (!is_na(event_raw)).then(|| event_raw.into());
    Ok(TrackingFrame {
        game_id,
        play_id,
        nfl_id,
        frame_id,
        club,
        play_direction,
        x,
        y,
        s,
        a,
        dis,
        o,
        dir,
        event,
    })
}

struct TrackingFile {
    rows: Vec<(u64, TrackingFrame)>,
    report: FileReport,
    rejects: Vec<Reject>,
}

fn load_tracking_week(dir: &Path, week: u8) -> Result<TrackingFile> {
    let name = format!("tracking_week_{week}.csv");
    let mut reader = open_csv(dir, &name)?;
    let headers = reader.headers().map_err(|source| Error::Csv {
        file: name.clone(),
        source,
    })?;
    let cols = Columns::new(&name, headers);
    let mut idx = [0usize; 14];
    for (slot, col) in idx.iter_mut().zip(TRACKING_COLUMNS) {
        *slot = cols.require(col)?;
    }
    drop(reader);
    let (rows, report, rejects) = read_table(dir, &name, |_, r| parse_tracking_row(&idx, r), &[])?;
    Ok(TrackingFile { rows, report, rejects })
}

#[cfg(feature = "parallel")]
fn load_weeks(dir: &Path, weeks: &[u8]) -> Vec<Result<TrackingFile>> {
    use rayon::prelude::*;
    weeks.par_iter().map(|w| load_tracking_week(dir, *w)).collect()
}

#[cfg(not(feature = "parallel"))]
fn load_weeks(dir: &Path, weeks: &[u8]) -> Vec<Result<TrackingFile>> {
    weeks.iter().map(|w| load_tracking_week(dir, *w)).collect()
}

/// Loads and validates a data directory for the requested weeks.
///
/// Missing files and missing required columns are fatal. Malformed cells and
/// duplicate keys reject the offending row, which is recorded in
/// `report.rejects` with its line number.
pub fn load_dataset(root: &Path, weeks: &BTreeSet<u8>, config: &IngestConfig) -> Result<Dataset> {
    if weeks.is_empty() || weeks.iter().any(|w| !(1..=9).contains(w)) {
        return Err(Error::Config(format!(
            "weeks must be a nonempty subset of 1-9, got {weeks:?}"
        )));
    }
    let mut report = LoadReport::default();

    let (games, r, rj) = load_games(root)?;
    report.files.push(r);
    report.rejects.extend(rj);

    let (raw_plays, mut plays_report, mut plays_rejects) = load_plays(root)?;
    let (players, r_players, rj_players) = load_players(root)?;
    let (box_scores, r_tackles, rj_tackles) = load_tackles(root)?;

    let week_list: Vec<u8> = weeks.iter().copied().collect();
    let files = load_weeks(root, &week_list);

    let mut plays = BTreeMap::new();
    for (line, p) in raw_plays {
        let Some(game) = games.get(&p.key.game_id) else {
            demote(
                &mut plays_report,
                &mut plays_rejects,
                "plays.csv",
                line,
                format!("unknown_game: gameId {}", p.key.game_id),
            );
            continue;
        };
        if plays.contains_key(&p.key) {
            demote(
                &mut plays_report,
                &mut plays_rejects,
                "plays.csv",
                line,
                format!("duplicate_key: {}", p.key),
            );
            continue;
        }
        plays.insert(
            p.key,
            PlayMeta {
                key: p.key,
                week: game.week,
                ball_carrier_id: p.ball_carrier_id,
                possession_team: p.possession_team,
                defensive_team: p.defensive_team,
                rush_designator: p.rush_designator,
                is_rush: p.rush_designator.unwrap_or(false),
                description: p.description,
            },
        );
    }
    report.files.push(plays_report);
    report.rejects.extend(plays_rejects);
    report.files.push(r_players);
    report.rejects.extend(rj_players);
    report.files.push(r_tackles);
    report.rejects.extend(rj_tackles);

    // Group rows by play, remembering file and line for duplicate detection.
    let mut grouped: BTreeMap<PlayKey, Vec<(usize, u64, TrackingFrame)>> = BTreeMap::new();
    let mut tracking_reports = Vec::new();
    for (file_idx, file) in files.into_iter().enumerate() {
        let file = file?;
        report.rejects.extend(file.rejects);
        tracking_reports.push(file.report);
        for (line, row) in file.rows {
            grouped.entry(row.play_key()).or_default().push((file_idx, line, row));
        }
    }

    let mut tracking = BTreeMap::new();
    for (key, mut rows) in grouped {
        rows.sort_by_key(|(f, line, r)| (r.nfl_id, r.frame_id, *f, *line));
        let first_file = rows[0].0;
        let mut kept: Vec<TrackingFrame> = Vec::with_capacity(rows.len());
        let mut last: Option<(Option<NflId>, FrameId)> = None;
        for (file_idx, line, row) in rows {
            let id = (row.nfl_id, row.frame_id);
            if last == Some(id) {
                let rep = &mut tracking_reports[file_idx];
                let name = rep.file.clone();
                demote(
                    rep,
                    &mut report.rejects,
                    &name,
                    line,
                    format!(
                        "duplicate_key: {key} nflId {} frameId {}",
                        row.nfl_id.map_or("NA".to_string(), |i| i.to_string()),
                        row.frame_id
                    ),
                );
                continue;
            }
            last = Some(id);
            kept.push(row);
        }
        if !plays.contains_key(&key) {
            let file = &tracking_reports[first_file].file;
            report.rejects.push(Reject::play(file, key, &RejectReason::UnknownPlay));
            continue;
        }
        kept.sort_by_key(|r| (r.frame_id, r.nfl_id));
        tracking.insert(key, kept);
    }
    report.files.extend(tracking_reports);

    let config = config.clone();
    for (key, meta) in plays.iter_mut() {
        if meta.rush_designator.is_none() {
            meta.is_rush = tracking.get(key).is_some_and(|rows| handoff_before_pass(rows, &config));
        }
    }

    Ok(Dataset {
        weeks: weeks.clone(),
        games,
        plays,
        players,
        box_scores,
        tracking,
        report,
    })
}

/// True when a handoff event occurs before any pass event.
pub fn handoff_before_pass(rows: &[TrackingFrame], config: &IngestConfig) -> bool {
    let mut handoff = None::<FrameId>;
    let mut pass = None::<FrameId>;
    for r in rows {
        let Some(ev) = r.event() else { continue };
        if config.handoff_events.contains(ev) {
            handoff = Some(handoff.map_or(r.frame_id, |h| h.min(r.frame_id)));
        } else if ev.starts_with(&config.pass_event_prefix) {
            pass = Some(pass.map_or(r.frame_id, |p| p.min(r.frame_id)));
        }
    }
    match (handoff, pass) {
        (Some(h), Some(p)) => h < p,
        (Some(_), None) => true,
        _ => false,
    }
}

/// Mirrors a frame so the offense moves toward +x. Right-moving frames are
/// returned unchanged.
pub fn standardize_frame(frame: &TrackingFrame) -> TrackingFrame {
    match frame.play_direction {
        PlayDirection::Right => frame.clone(),
        PlayDirection::Left => mirror_frame(frame),
    }
}

/// Applies the left-to-right mirror unconditionally. Applying it twice
/// returns the original coordinates and angles.
pub fn mirror_frame(frame: &TrackingFrame) -> TrackingFrame {
    let mut out = frame.clone();
    out.x = FIELD_LENGTH - frame.x;
    out.y = FIELD_WIDTH - frame.y;
    out.o = (frame.o + 180.0).rem_euclid(360.0);
    out.dir = (frame.dir + 180.0).rem_euclid(360.0);
    out.play_direction = match frame.play_direction {
        PlayDirection::Left => PlayDirection::Right,
        PlayDirection::Right => PlayDirection::Left,
    };
    out
}

/// Standardizes one play's raw rows and resolves its snap and end frames.
pub fn standardize(
    meta: &PlayMeta,
    rows: &[TrackingFrame],
    config: &IngestConfig,
) -> std::result::Result<StandardizedPlay, RejectReason> {
    let first = rows.first().ok_or(RejectReason::NoTracking)?;
    if rows.iter().any(|r| r.play_direction != first.play_direction) {
        return Err(RejectReason::MixedDirection);
    }

    let mut frames: BTreeMap<FrameId, Vec<TrackingFrame>> = BTreeMap::new();
    for r in rows {
        frames.entry(r.frame_id).or_default().push(standardize_frame(r));
    }

    if let Some(expected) = config.players_per_frame {
        for (frame, recs) in &frames {
            let found = recs.iter().filter(|r| !r.is_ball()).count();
            if found != expected {
                return Err(RejectReason::PlayerCount {
                    frame: *frame,
                    found,
                    expected,
                });
            }
        }
    }

    let carrier = meta.ball_carrier_id;
    let carrier_rows = rows.iter().filter(|r| r.nfl_id == Some(carrier));
    if carrier_rows.clone().next().is_none() || carrier_rows.clone().any(|r| r.club != meta.possession_team) {
        return Err(RejectReason::CarrierNotOffense(carrier));
    }

    let event_at = |f: &Vec<TrackingFrame>| f.iter().find_map(|r| r.event().map(str::to_owned));
    let snap_frame = config
        .snap_events
        .iter()
        .find_map(|snap| {
            frames
                .iter()
                .find(|(_, recs)| event_at(recs).as_deref() == Some(snap.as_str()))
                .map(|(id, _)| *id)
        })
        .ok_or(RejectReason::MissingSnap)?;
    let end_frame = frames
        .range(snap_frame..)
        .find(|(_, recs)| {
            recs.iter()
                .filter_map(TrackingFrame::event)
                .any(|ev| config.end_events.contains(ev))
        })
        .map(|(id, _)| *id)
        .ok_or(RejectReason::MissingEndEvent)?;

    for frame in snap_frame..=end_frame {
        let present = frames
            .get(&frame)
            .is_some_and(|recs| recs.iter().any(|r| r.nfl_id == Some(carrier)));
        if !present {
            return Err(RejectReason::CarrierMissing(frame));
        }
    }

    Ok(StandardizedPlay {
        meta: meta.clone(),
        frames,
        snap_frame,
        end_frame,
    })
}

/// Selected plays plus the plays that failed play-level validation.
#[derive(Debug, Clone, Default)]
pub struct FilteredPlays {
    pub plays: Vec<StandardizedPlay>,
    pub rejects: Vec<Reject>,
}

/// Keeps rushing plays whose ball-carrier plays one of the configured
/// positions (running back by default), standardized and with resolved
/// snap and end frames.
pub fn filter_rb_runs(dataset: &Dataset, config: &IngestConfig) -> FilteredPlays {
    let candidates: Vec<&PlayMeta> = dataset
        .plays
        .values()
        .filter(|m| dataset.weeks.contains(&m.week) && m.is_rush)
        .filter(|m| {
            dataset
                .players
                .get(&m.ball_carrier_id)
                .is_none_or(|p| config.carrier_positions.contains(&p.position))
        })
        .collect();

    let prepare = |meta: &PlayMeta| -> std::result::Result<StandardizedPlay, Reject> {
        let file = format!("tracking_week_{}.csv", meta.week);
        if !dataset.players.contains_key(&meta.ball_carrier_id) {
            return Err(Reject::play(
                "players.csv",
                meta.key,
                &RejectReason::UnknownCarrier(meta.ball_carrier_id),
            ));
        }
        let rows = dataset
            .tracking
            .get(&meta.key)
            .ok_or_else(|| Reject::play(&file, meta.key, &RejectReason::NoTracking))?;
        standardize(meta, rows, config).map_err(|reason| Reject::play(&file, meta.key, &reason))
    };

    #[cfg(feature = "parallel")]
    let results: Vec<_> = {
        use rayon::prelude::*;
        candidates.par_iter().map(|m| prepare(m)).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let results: Vec<_> = candidates.iter().map(|m| prepare(m)).collect();

    let mut out = FilteredPlays::default();
    for r in results {
        match r {
            Ok(p) => out.plays.push(p),
            Err(rej) => out.rejects.push(rej),
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn frame(dir: PlayDirection, x: f64, y: f64, o: f64, d: f64) -> TrackingFrame {
        TrackingFrame {
            game_id: 1,
            play_id: 1,
            nfl_id: Some(7),
            frame_id: 1,
            club: TeamCode::new("NYG").unwrap(),
            play_direction: dir,
            x,
            y,
            s: 5.0,
            a: 1.0,
            dis: 0.5,
            o,
            dir: d,
            event: None,
        }
    }

    #[test]
    fn left_flip_matches_table_row() {
        let f = frame(PlayDirection::Left, 93.30, 29.84, 265.57, 287.75);
        let g = standardize_frame(&f);
        assert_eq!(g.play_direction, PlayDirection::Right);
        assert!((g.x - 26.70).abs() < 1e-9);
        assert!((g.y - (160.0 / 3.0 - 29.84)).abs() < 1e-9);
        assert!((g.dir - 107.75).abs() < 1e-9);
        assert!((g.o - 85.57).abs() < 1e-9);
        assert_eq!(g.s, f.s);
        assert_eq!(g.dis, f.dis);
    }

    #[test]
    fn right_frames_are_untouched() {
        let f = frame(PlayDirection::Right, 10.0, 20.0, 5.0, 359.0);
        assert_eq!(standardize_frame(&f), f);
    }

    #[test]
    fn handoff_rule() {
        let cfg = IngestConfig::default();
        let mut rows = vec![frame(PlayDirection::Right, 0.0, 0.0, 0.0, 0.0); 3];
        for (i, r) in rows.iter_mut().enumerate() {
            r.frame_id = i as u32 + 1;
        }
        assert!(!handoff_before_pass(&rows, &cfg));
        rows[1].event = Some("handoff".into());
        assert!(handoff_before_pass(&rows, &cfg));
        rows[0].event = Some("pass_forward".into());
        assert!(!handoff_before_pass(&rows, &cfg));
    }

    #[test]
    fn mixed_direction_rejected() {
        let meta = PlayMeta {
            key: PlayKey::new(1, 1),
            week: 1,
            ball_carrier_id: 7,
            possession_team: TeamCode::new("NYG").unwrap(),
            defensive_team: TeamCode::new("TEN").unwrap(),
            rush_designator: None,
            is_rush: true,
            description: String::new(),
        };
        let a = frame(PlayDirection::Left, 1.0, 1.0, 0.0, 0.0);
        let mut b = frame(PlayDirection::Right, 1.0, 1.0, 0.0, 0.0);
        b.frame_id = 2;
        let cfg = IngestConfig {
            players_per_frame: None,
            ..Default::default()
        };
        assert_eq!(standardize(&meta, &[a, b], &cfg), Err(RejectReason::MixedDirection));
        assert_eq!(standardize(&meta, &[], &cfg), Err(RejectReason::NoTracking));
    }
}
