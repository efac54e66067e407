pub mod evaluate;
pub mod generate;
pub mod ingest;
pub mod predict;
pub mod report_cmd;
pub mod robustness;
pub mod tag;
pub mod train;

use std::path::Path;

use adshield_core::corpus::{Dataset, Split};

use crate::AppError;

/// Split filter for prediction-style commands.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SplitFilter {
    All,
    One(Split),
}

impl std::str::FromStr for SplitFilter {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "all" => Ok(SplitFilter::All),
            "train" => Ok(SplitFilter::One(Split::Train)),
            "validation" => Ok(SplitFilter::One(Split::Validation)),
            "test" => Ok(SplitFilter::One(Split::Test)),
            other => Err(format!(
                "unknown split {other:?} (train|validation|test|all)"
            )),
        }
    }
}

impl std::fmt::Display for SplitFilter {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            SplitFilter::All => f.write_str("all"),
            SplitFilter::One(s) => write!(f, "{s}"),
        }
    }
}

/// A dataset restricted to the filtered split (records cloned in order).
pub fn filtered_dataset(dataset: &Dataset, filter: SplitFilter) -> Result<Dataset, AppError> {
    let records = match filter {
        SplitFilter::All => dataset.records().to_vec(),
        SplitFilter::One(split) => dataset
            .records()
            .iter()
            .filter(|r| r.split == split)
            .cloned()
            .collect(),
    };
    Dataset::new(dataset.name.clone(), records).map_err(AppError::from)
}

pub fn file_stem(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string())
}
