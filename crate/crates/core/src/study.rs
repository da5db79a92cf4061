//! End-to-end run over a data directory: load, filter, calibrate, value,
//! attribute and aggregate.

use std::collections::BTreeSet;
use std::path::Path;

use crate::analytics::{aggregate, PlayerAggregate};
use crate::config::RunConfig;
use crate::error::Result;
use crate::ingest::{filter_rb_runs, load_dataset, Dataset, IngestConfig, Reject, StandardizedPlay};
use crate::pipeline::{run_pipeline, PipelineConfig, PipelineOutput};
use crate::windows::{calibrate_threshold, Calibration, CalibrationConfig};

/// Weeks of the first stability period; the rest form the second.
pub const FIRST_PERIOD_WEEKS: std::ops::RangeInclusive<u8> = 1..=4;

pub struct Study {
    pub dataset: Dataset,
    pub plays: Vec<StandardizedPlay>,
    pub calibration: Calibration,
    pub output: PipelineOutput,
    /// Ingest, filter and pipeline rejects, in that order.
    pub rejects: Vec<Reject>,
}

impl Study {
    pub fn run(root: &Path, config: &RunConfig) -> Result<Self> {
        config.validate()?;
        let ingest = IngestConfig::default();
        let dataset = load_dataset(root, &config.weeks, &ingest)?;
        let filtered = filter_rb_runs(&dataset, &ingest);
        let calibration = calibrate_threshold(
            &filtered.plays,
            &CalibrationConfig {
                percentile: config.percentile,
                override_d: config.threshold,
            },
        )?;
        let output = run_pipeline(
            &filtered.plays,
            &PipelineConfig {
                threshold: calibration.d,
                peak_epsilon: config.epsilon,
            },
        );
        let mut rejects = dataset.report.rejects.clone();
        rejects.extend(filtered.rejects);
        rejects.extend(output.rejects.iter().cloned());
        Ok(Self {
            dataset,
            plays: filtered.plays,
            calibration,
            output,
            rejects,
        })
    }

    /// Aggregates over plays in `weeks`.
    pub fn aggregates(&self, weeks: &BTreeSet<u8>) -> Result<Vec<PlayerAggregate>> {
        aggregate(
            &self.output.plays,
            &self.dataset.box_scores,
            &self.dataset.players,
            |p| weeks.contains(&p.week),
        )
    }

    pub fn all_aggregates(&self) -> Result<Vec<PlayerAggregate>> {
        self.aggregates(&self.dataset.weeks)
    }

    /// First-period and second-period aggregates.
    pub fn period_aggregates(&self) -> Result<(Vec<PlayerAggregate>, Vec<PlayerAggregate>)> {
        let (a, b): (BTreeSet<u8>, BTreeSet<u8>) =
            self.dataset.weeks.iter().partition(|w| FIRST_PERIOD_WEEKS.contains(w));
        Ok((self.aggregates(&a)?, self.aggregates(&b)?))
    }
}
