use std::path::PathBuf;

use thiserror::Error;

use crate::types::NflId;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("missing input file {}", .0.display())]
    MissingFile(PathBuf),

    #[error("{file}: missing required column `{column}`")]
    MissingColumn { file: String, column: String },

    #[error("failed to read {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{file}: {source}")]
    Csv {
        file: String,
        #[source]
        source: csv::Error,
    },

    #[error("no first_contact or tackle frames available for threshold calibration")]
    NoCalibrationSamples,

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("correlation undefined: {0}")]
    Correlation(String),

    #[error("credit references defender {0} with no player record")]
    UnknownDefender(NflId),

    #[error("synthetic play generation failed: {0}")]
    Generation(String),
}
