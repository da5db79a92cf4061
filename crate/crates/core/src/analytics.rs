//! Player aggregation, leaderboards, window summaries and the correlation
//! statistics used to validate the metric.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::{BoxScore, PlayerMeta};
use crate::pipeline::PlayResult;
use crate::types::{NflId, PlayKey, Position, PositionGroup, FRAMES_PER_SECOND};
use crate::windows::ContactWindow;

/// Per-defender totals over a set of plays.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct PlayerAggregate {
    pub defender_id: NflId,
    pub display_name: String,
    pub position: Position,
    pub plays: u32,
    pub windows: u32,
    #[serde(rename = "totalFT")]
    pub total_ft: f64,
    #[serde(rename = "avgFT")]
    pub avg_ft: f64,
    pub tackles: u32,
    pub assists: u32,
    pub forced_fumbles: u32,
    pub missed_tackles: u32,
    pub combined_tackles: f64,
}

#[derive(Default)]
struct Accumulator {
    plays: u32,
    windows: u32,
    total: f64,
    tackles: u32,
    assists: u32,
    forced_fumbles: u32,
    missed_tackles: u32,
}

/// What one play contributes to each defender on the field.
struct Contribution {
    id: NflId,
    ft: f64,
    windows: u32,
    box_score: Option<BoxScore>,
}

fn contributions(play: &PlayResult, box_scores: &BTreeMap<(PlayKey, NflId), BoxScore>) -> Vec<Contribution> {
    play.defenders
        .iter()
        .map(|&id| {
            let mine = play.credits.iter().filter(|c| c.defender_id == id);
            Contribution {
                id,
                ft: mine.clone().map(|c| c.w_player).sum(),
                windows: mine.filter(|c| c.frames_involved > 0).count() as u32,
                box_score: box_scores.get(&(play.key, id)).copied(),
            }
        })
        .collect()
}

/// Totals fractional tackles and box-score counts per defender over the
/// plays accepted by `filter`.
///
/// Every credited defender must have a player record.
pub fn aggregate(
    plays: &[PlayResult],
    box_scores: &BTreeMap<(PlayKey, NflId), BoxScore>,
    players: &BTreeMap<NflId, PlayerMeta>,
    filter: impl Fn(&PlayResult) -> bool + Sync,
) -> Result<Vec<PlayerAggregate>> {
    for play in plays.iter().filter(|p| filter(p)) {
        if let Some(c) = play.credits.iter().find(|c| !players.contains_key(&c.defender_id)) {
            return Err(Error::UnknownDefender(c.defender_id));
        }
    }

    let per_play = |p: &PlayResult| {
        if filter(p) {
            contributions(p, box_scores)
        } else {
            Vec::new()
        }
    };
    #[cfg(feature = "parallel")]
    let mapped: Vec<Vec<Contribution>> = {
        use rayon::prelude::*;
        plays.par_iter().map(per_play).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let mapped: Vec<Vec<Contribution>> = plays.iter().map(per_play).collect();

    // Merge in play order so sums are reproducible.
    let mut acc: BTreeMap<NflId, Accumulator> = BTreeMap::new();
    for c in mapped.into_iter().flatten() {
        let a = acc.entry(c.id).or_default();
        a.plays += 1;
        a.windows += c.windows;
        a.total += c.ft;
        if let Some(b) = c.box_score {
            a.tackles += b.tackle as u32;
            a.assists += b.assist as u32;
            a.forced_fumbles += b.forced_fumble as u32;
            a.missed_tackles += b.missed_tackle as u32;
        }
    }

    Ok(acc
        .into_iter()
        .map(|(id, a)| {
            let (display_name, position) = players
                .get(&id)
                .map(|p| (p.display_name.clone(), p.position.clone()))
                .unwrap_or_else(|| (String::new(), Position::Other("NA".into())));
            PlayerAggregate {
                defender_id: id,
                display_name,
                position,
                plays: a.plays,
                windows: a.windows,
                total_ft: a.total,
                avg_ft: a.total / a.plays as f64,
                tackles: a.tackles,
                assists: a.assists,
                forced_fumbles: a.forced_fumbles,
                missed_tackles: a.missed_tackles,
                combined_tackles: a.tackles as f64 + a.assists as f64 / 2.0,
            }
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SortKey {
    #[default]
    Total,
    Average,
}

/// Sorted, filtered view of the aggregates. Ties break on defender id.
pub fn leaderboard(
    aggregates: &[PlayerAggregate],
    sort: SortKey,
    min_plays: u32,
    top: Option<usize>,
) -> Vec<PlayerAggregate> {
    let mut rows: Vec<PlayerAggregate> = aggregates.iter().filter(|a| a.plays >= min_plays).cloned().collect();
    let metric = |a: &PlayerAggregate| match sort {
        SortKey::Total => a.total_ft,
        SortKey::Average => a.avg_ft,
    };
    rows.sort_by(|a, b| metric(b).total_cmp(&metric(a)).then(a.defender_id.cmp(&b.defender_id)));
    if let Some(n) = top {
        rows.truncate(n);
    }
    rows
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct WindowSummary {
    pub window_count: usize,
    pub play_count: usize,
    pub mean_duration_seconds: Option<f64>,
    /// Window length in frames -> count.
    pub duration_frames: BTreeMap<usize, usize>,
    /// Windows per play (plays with at least one window) -> play count.
    pub windows_per_play: BTreeMap<usize, usize>,
    /// Distinct defenders per window -> window count.
    pub defenders_per_window: BTreeMap<usize, usize>,
}

pub fn window_summaries<'a>(windows: impl IntoIterator<Item = &'a ContactWindow>) -> WindowSummary {
    let mut duration_frames = BTreeMap::new();
    let mut defenders_per_window = BTreeMap::new();
    let mut per_play: BTreeMap<PlayKey, usize> = BTreeMap::new();
    let mut total_frames = 0usize;
    let mut count = 0usize;
    for w in windows {
        count += 1;
        total_frames += w.len();
        *duration_frames.entry(w.len()).or_insert(0) += 1;
        *defenders_per_window.entry(w.defender_count()).or_insert(0) += 1;
        *per_play.entry(w.key).or_insert(0) += 1;
    }
    let mut windows_per_play = BTreeMap::new();
    for n in per_play.values() {
        *windows_per_play.entry(*n).or_insert(0) += 1;
    }
    WindowSummary {
        window_count: count,
        play_count: per_play.len(),
        mean_duration_seconds: (count > 0).then(|| total_frames as f64 / count as f64 / FRAMES_PER_SECOND),
        duration_frames,
        windows_per_play,
        defenders_per_window,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum Grouping {
    Overall,
    DefensiveBacks,
    DefensiveLine,
    Linebackers,
}

impl From<PositionGroup> for Grouping {
    fn from(g: PositionGroup) -> Self {
        match g {
            PositionGroup::DefensiveBacks => Self::DefensiveBacks,
            PositionGroup::DefensiveLine => Self::DefensiveLine,
            PositionGroup::Linebackers => Self::Linebackers,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationReport {
    pub label: String,
    pub grouping: Grouping,
    pub n: usize,
    pub r: f64,
    pub ci95: (f64, f64),
}

/// Pearson's r computed from centered sums.
pub fn pearson(xs: &[f64], ys: &[f64]) -> Result<f64> {
    if xs.len() != ys.len() {
        return Err(Error::Correlation(format!(
            "length mismatch {} vs {}",
            xs.len(),
            ys.len()
        )));
    }
    let n = xs.len() as f64;
    if xs.is_empty() {
        return Err(Error::Correlation("no pairs".into()));
    }
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in xs.iter().zip(ys) {
        let (dx, dy) = (x - mx, y - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::Correlation("zero variance".into()));
    }
    Ok((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

/// 95% interval from the Fisher z transform.
pub fn fisher_ci95(r: f64, n: usize) -> (f64, f64) {
    let z = r.atanh();
    let half = 1.96 / ((n as f64) - 3.0).sqrt();
    let lo = (z - half).tanh();
    let hi = (z + half).tanh();
    // r = +-1 gives an infinite z; the interval collapses onto r.
    (lo.min(r), hi.max(r))
}

pub fn correlate(label: impl Into<String>, grouping: Grouping, xs: &[f64], ys: &[f64]) -> Result<CorrelationReport> {
    if xs.len() < 4 {
        return Err(Error::Correlation(format!("need at least 4 pairs, got {}", xs.len())));
    }
    let r = pearson(xs, ys)?;
    Ok(CorrelationReport {
        label: label.into(),
        grouping,
        n: xs.len(),
        r,
        ci95: fisher_ci95(r, xs.len()),
    })
}

/// One player's values in both periods.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct StabilityRow {
    pub defender_id: NflId,
    pub display_name: String,
    pub position: Position,
    pub group: Option<PositionGroup>,
    pub plays_a: u32,
    pub plays_b: u32,
    pub ft_a: f64,
    pub ft_b: f64,
    pub ct_a: f64,
    pub ct_b: f64,
}

pub const FT_LABEL: &str = "fractionalTackles";
pub const CT_LABEL: &str = "combinedTackles";

/// Joins two periods by defender id. Players missing from a period count
/// as zero there. `min_plays` applies to the combined play count.
pub fn stability_rows(period_a: &[PlayerAggregate], period_b: &[PlayerAggregate], min_plays: u32) -> Vec<StabilityRow> {
    let a: BTreeMap<NflId, &PlayerAggregate> = period_a.iter().map(|p| (p.defender_id, p)).collect();
    let b: BTreeMap<NflId, &PlayerAggregate> = period_b.iter().map(|p| (p.defender_id, p)).collect();
    let ids: BTreeSet<NflId> = a.keys().chain(b.keys()).copied().collect();
    ids.into_iter()
        .filter_map(|id| {
            let pa = a.get(&id);
            let pb = b.get(&id);
            let meta = pa.or(pb)?;
            let row = StabilityRow {
                defender_id: id,
                display_name: meta.display_name.clone(),
                position: meta.position.clone(),
                group: meta.position.group(),
                plays_a: pa.map_or(0, |p| p.plays),
                plays_b: pb.map_or(0, |p| p.plays),
                ft_a: pa.map_or(0.0, |p| p.total_ft),
                ft_b: pb.map_or(0.0, |p| p.total_ft),
                ct_a: pa.map_or(0.0, |p| p.combined_tackles),
                ct_b: pb.map_or(0.0, |p| p.combined_tackles),
            };
            (row.plays_a + row.plays_b >= min_plays).then_some(row)
        })
        .collect()
}

/// Subtracts each position group's mean within one period.
fn residualize(values: &[f64], groups: &[Option<PositionGroup>]) -> Vec<f64> {
    let mut sums: BTreeMap<PositionGroup, (f64, usize)> = BTreeMap::new();
    for (v, g) in values.iter().zip(groups) {
        if let Some(g) = g {
            let e = sums.entry(*g).or_insert((0.0, 0));
            e.0 += v;
            e.1 += 1;
        }
    }
    values
        .iter()
        .zip(groups)
        .map(|(v, g)| match g {
            Some(g) => {
                let (s, n) = sums[g];
                v - s / n as f64
            }
            None => *v,
        })
        .collect()
}

/// Split-half correlations for both metrics: overall on raw totals, and per
/// position group on within-period residuals.
///
/// Groups with too few players or no variance are left out of the result.
pub fn stability(rows: &[StabilityRow]) -> Result<Vec<CorrelationReport>> {
    let groups: Vec<Option<PositionGroup>> = rows.iter().map(|r| r.group).collect();
    let metrics: [(&str, fn(&StabilityRow) -> (f64, f64)); 2] =
        [(FT_LABEL, |r| (r.ft_a, r.ft_b)), (CT_LABEL, |r| (r.ct_a, r.ct_b))];
    let mut out = Vec::new();
    for (label, pick) in metrics {
        let (xa, xb): (Vec<f64>, Vec<f64>) = rows.iter().map(pick).unzip();
        out.push(correlate(label, Grouping::Overall, &xa, &xb)?);
        let ra = residualize(&xa, &groups);
        let rb = residualize(&xb, &groups);
        for g in PositionGroup::ALL {
            let (ga, gb): (Vec<f64>, Vec<f64>) = groups
                .iter()
                .zip(ra.iter().zip(&rb))
                .filter(|(pg, _)| **pg == Some(g))
                .map(|(_, (a, b))| (*a, *b))
                .unzip();
            if let Ok(rep) = correlate(label, g.into(), &ga, &gb) {
                out.push(rep);
            }
        }
    }
    Ok(out)
}
