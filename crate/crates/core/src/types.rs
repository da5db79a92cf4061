//! Identifiers and small domain enums shared across the pipeline.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

/// Field length in yards, including both end zones.
pub const FIELD_LENGTH: f64 = 120.0;
/// Field width in yards.
pub const FIELD_WIDTH: f64 = 160.0 / 3.0;
/// Tracking sample rate.
pub const FRAMES_PER_SECOND: f64 = 10.0;

pub type GameId = u64;
pub type PlayId = u32;
pub type NflId = u32;
pub type FrameId = u32;

/// Unique identifier of a play: `(gameId, playId)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct PlayKey {
    pub game_id: GameId,
    pub play_id: PlayId,
}

impl PlayKey {
    pub fn new(game_id: GameId, play_id: PlayId) -> Self {
        Self { game_id, play_id }
    }
}

impl fmt::Display for PlayKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}-{}", self.game_id, self.play_id)
    }
}

impl FromStr for PlayKey {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (g, p) = s
            .split_once('-')
            .ok_or_else(|| format!("play key `{s}` is not of the form <gameId>-<playId>"))?;
        let game_id = g.trim().parse().map_err(|_| format!("bad gameId in `{s}`"))?;
        let play_id = p.trim().parse().map_err(|_| format!("bad playId in `{s}`"))?;
        Ok(Self { game_id, play_id })
    }
}

/// Team abbreviation stored inline (up to 8 bytes, enough for `football`).
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct TeamCode {
    len: u8,
    bytes: [u8; 8],
}

impl TeamCode {
    pub fn new(code: &str) -> Option<Self> {
        let code = code.trim();
        if code.is_empty() || code.len() > 8 || !code.is_ascii() {
            return None;
        }
        let mut bytes = [0u8; 8];
        bytes[..code.len()].copy_from_slice(code.as_bytes());
        Some(Self {
            len: code.len() as u8,
            bytes,
        })
    }

    pub fn as_str(&self) -> &str {
        // Constructed only from ASCII input.
        std::str::from_utf8(&self.bytes[..self.len as usize]).unwrap_or("")
    }
}

impl fmt::Debug for TeamCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "TeamCode({})", self.as_str())
    }
}

impl fmt::Display for TeamCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl Serialize for TeamCode {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(self.as_str())
    }
}

impl<'de> Deserialize<'de> for TeamCode {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        TeamCode::new(&s).ok_or_else(|| serde::de::Error::custom(format!("invalid team code `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PlayDirection {
    Left,
    Right,
}

impl FromStr for PlayDirection {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "left" => Ok(Self::Left),
            "right" => Ok(Self::Right),
            other => Err(format!("unknown playDirection `{other}`")),
        }
    }
}

impl fmt::Display for PlayDirection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Left => "left",
            Self::Right => "right",
        })
    }
}

/// Roster position as listed in the player table.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Position {
    QB,
    RB,
    FB,
    WR,
    TE,
    T,
    G,
    C,
    DT,
    DE,
    NT,
    ILB,
    OLB,
    MLB,
    LB,
    CB,
    FS,
    SS,
    DB,
    K,
    P,
    LS,
    Other(String),
}

impl Position {
    pub fn group(&self) -> Option<PositionGroup> {
        use Position::*;
        match self {
            CB | FS | SS | DB => Some(PositionGroup::DefensiveBacks),
            DT | DE | NT => Some(PositionGroup::DefensiveLine),
            ILB | OLB | MLB | LB => Some(PositionGroup::Linebackers),
            _ => None,
        }
    }

    pub fn as_str(&self) -> &str {
        use Position::*;
        match self {
            QB => "QB",
            RB => "RB",
            FB => "FB",
            WR => "WR",
            TE => "TE",
            T => "T",
            G => "G",
            C => "C",
            DT => "DT",
            DE => "DE",
            NT => "NT",
            ILB => "ILB",
            OLB => "OLB",
            MLB => "MLB",
            LB => "LB",
            CB => "CB",
            FS => "FS",
            SS => "SS",
            DB => "DB",
            K => "K",
            P => "P",
            LS => "LS",
            Other(s) => s,
        }
    }
}

impl FromStr for Position {
    type Err = std::convert::Infallible;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        use Position::*;
        Ok(match s.trim() {
            "QB" => QB,
            "RB" | "HB" => RB,
            "FB" => FB,
            "WR" => WR,
            "TE" => TE,
            "T" => T,
            "G" => G,
            "C" => C,
            "DT" => DT,
            "DE" => DE,
            "NT" => NT,
            "ILB" => ILB,
            "OLB" => OLB,
            "MLB" => MLB,
            "LB" => LB,
            "CB" => CB,
            "FS" => FS,
            "SS" => SS,
            "DB" => DB,
            "K" => K,
            "P" => P,
            "LS" => LS,
            other => Other(other.to_string()),
        })
    }
}

impl fmt::Display for Position {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Coarse defensive position groups used for within-position comparisons.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum PositionGroup {
    DefensiveBacks,
    DefensiveLine,
    Linebackers,
}

impl PositionGroup {
    pub const ALL: [PositionGroup; 3] = [
        PositionGroup::DefensiveBacks,
        PositionGroup::DefensiveLine,
        PositionGroup::Linebackers,
    ];

    pub fn label(self) -> &'static str {
        match self {
            Self::DefensiveBacks => "defensiveBacks",
            Self::DefensiveLine => "defensiveLine",
            Self::Linebackers => "linebackers",
        }
    }
}
