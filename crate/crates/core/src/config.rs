//! Run configuration: defaults, a flat `key=value` file format, and
//! validation.

use std::collections::BTreeSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::valuation::DEFAULT_PEAK_EPSILON;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct RunConfig {
    pub weeks: BTreeSet<u8>,
    pub percentile: f64,
    /// Fixed threshold; skips calibration when set.
    pub threshold: Option<f64>,
    pub epsilon: f64,
    pub min_plays: u32,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            weeks: (1..=9).collect(),
            percentile: 0.95,
            threshold: None,
            epsilon: DEFAULT_PEAK_EPSILON,
            min_plays: 0,
        }
    }
}

/// Optional overrides, one per setting; later layers win.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ConfigLayer {
    pub weeks: Option<BTreeSet<u8>>,
    pub percentile: Option<f64>,
    pub threshold: Option<f64>,
    pub epsilon: Option<f64>,
    pub min_plays: Option<u32>,
}

impl RunConfig {
    pub fn apply(&mut self, layer: &ConfigLayer) {
        if let Some(w) = &layer.weeks {
            self.weeks = w.clone();
        }
        if let Some(p) = layer.percentile {
            self.percentile = p;
        }
        if let Some(d) = layer.threshold {
            self.threshold = Some(d);
        }
        if let Some(e) = layer.epsilon {
            self.epsilon = e;
        }
        if let Some(m) = layer.min_plays {
            self.min_plays = m;
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.weeks.is_empty() || self.weeks.iter().any(|w| !(1..=9).contains(w)) {
            return Err(Error::Config("weeks must be a non-empty subset of 1-9".into()));
        }
        if !(self.percentile > 0.0 && self.percentile < 1.0) {
            return Err(Error::Config(format!(
                "percentile must lie in (0, 1), got {}",
                self.percentile
            )));
        }
        if let Some(d) = self.threshold {
            if !(d.is_finite() && d > 0.0) {
                return Err(Error::Config(format!("threshold must be positive, got {d}")));
            }
        }
        if !(self.epsilon.is_finite() && self.epsilon >= 0.0) {
            return Err(Error::Config(format!(
                "epsilon must be non-negative, got {}",
                self.epsilon
            )));
        }
        Ok(())
    }
}

/// Parses `1-9`, `3`, `1,2,5` or `1-3,7`.
pub fn parse_weeks(s: &str) -> Result<BTreeSet<u8>> {
    let bad = || Error::Config(format!("invalid week list '{s}'"));
    let mut out = BTreeSet::new();
    for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        match part.split_once('-') {
            Some((a, b)) => {
                let a: u8 = a.trim().parse().map_err(|_| bad())?;
                let b: u8 = b.trim().parse().map_err(|_| bad())?;
                if a > b {
                    return Err(bad());
                }
                out.extend(a..=b);
            }
            None => {
                out.insert(part.parse().map_err(|_| bad())?);
            }
        }
    }
    if out.is_empty() || out.iter().any(|w| !(1..=9).contains(w)) {
        return Err(bad());
    }
    Ok(out)
}

/// Parses a `key=value` file. Blank lines and `#` comments are ignored.
pub fn parse_config(text: &str) -> Result<ConfigLayer> {
    let mut layer = ConfigLayer::default();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(Error::Config(format!("line {}: expected key=value", n + 1)));
        };
        let (key, value) = (key.trim(), value.trim());
        let num = |v: &str| -> Result<f64> {
            v.parse()
                .map_err(|_| Error::Config(format!("line {}: {key} is not a number", n + 1)))
        };
        match key {
            "weeks" => layer.weeks = Some(parse_weeks(value)?),
            "percentile" => layer.percentile = Some(num(value)?),
            "threshold" => layer.threshold = Some(num(value)?),
            "epsilon" => layer.epsilon = Some(num(value)?),
            "min_plays" | "minPlays" => {
                layer.min_plays = Some(
                    value
                        .parse()
                        .map_err(|_| Error::Config(format!("line {}: min_plays is not an integer", n + 1)))?,
                )
            }
            other => return Err(Error::Config(format!("line {}: unknown key '{other}'", n + 1))),
        }
    }
    Ok(layer)
}

pub fn read_config(path: &Path) -> Result<ConfigLayer> {
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_config(&text)
}

/// Formats a float with six significant digits, dropping trailing zeros.
/// Infinities print as `inf`/`-inf`.
pub fn fmt_sig(v: f64) -> String {
    if v.is_nan() {
        return "nan".into();
    }
    if v.is_infinite() {
        return if v > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if v == 0.0 {
        return "0".into();
    }
    let exp = v.abs().log10().floor() as i32;
    let s = if (-5..6).contains(&exp) {
        let decimals = (5 - exp).max(0) as usize;
        let s = format!("{v:.decimals$}");
        // Rounding can carry into a seventh digit (999999.5 -> 1000000).
        if s.trim_start_matches('-').replace('.', "").trim_start_matches('0').len() > 6 && !s.contains('.') {
            format!("{v:.5e}")
        } else {
            s
        }
    } else {
        format!("{v:.5e}")
    };
    trim_zeros(&s)
}

fn trim_zeros(s: &str) -> String {
    if let Some((mantissa, exp)) = s.split_once('e') {
        return format!("{}e{}", trim_zeros(mantissa), exp);
    }
    if s.contains('.') {
        let t = s.trim_end_matches('0').trim_end_matches('.');
        if t == "-0" {
            "0".into()
        } else {
            t.into()
        }
    } else {
        s.into()
    }
}
