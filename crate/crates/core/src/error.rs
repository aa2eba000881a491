//! Error type shared across the pipeline.

use thiserror::Error;

/// Convenience alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;

/// All failure modes surfaced by the library.
///
/// Variants carry enough context to point at the offending input (line
/// numbers, lengths, names) without holding references into it.
#[derive(Debug, Error)]
pub enum Error {
    /// A CSV row failed to parse as `timestamp, value [, value ...]`.
    #[error("malformed row at line {line}: {reason}")]
    MalformedRow { line: usize, reason: String },

    /// Timestamps are not a uniform grid (gap, duplicate, or disorder).
    #[error("non-uniform timestamp grid at line {line}: {reason}")]
    NonUniformGrid { line: usize, reason: String },

    /// The file contained a header but no data rows.
    #[error("no data rows in input")]
    EmptyFile,

    /// Resampling to a finer granularity than the source grid.
    #[error("cannot resample from {source_minutes} min to finer {target_minutes} min grid")]
    Upsample {
        source_minutes: u32,
        target_minutes: u32,
    },

    /// Resampling ratio is not a whole number of source steps.
    #[error("target granularity {target_minutes} min is not an integral multiple of source {source_minutes} min")]
    NonIntegralRatio {
        source_minutes: u32,
        target_minutes: u32,
    },

    /// Two series that must share a grid do not.
    #[error("grid mismatch: {reason}")]
    GridMismatch { reason: String },

    /// Series too short for the requested operation.
    #[error("series of length {n} too short: need at least {need} for {what}")]
    TooShort {
        n: usize,
        need: usize,
        what: &'static str,
    },

    /// Zero-variance series; moment ratios are undefined.
    #[error("degenerate series: zero variance")]
    DegenerateSeries,

    /// Autocorrelation lag outside `[1, N-1]`.
    #[error("lag {lag} out of range for series of length {n}")]
    LagOutOfRange { lag: usize, n: usize },

    /// Model cannot run on this task (screened before fitting).
    #[error("model {model} infeasible: {reason}")]
    Infeasible { model: &'static str, reason: String },

    /// Optimizer failed to produce finite parameters.
    #[error("{model} training did not converge: {reason}")]
    NonConvergence { model: &'static str, reason: String },

    /// Paired slices of unequal length.
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    /// Every candidate model was infeasible for the task.
    #[error("no feasible candidate model for task {task}")]
    AllInfeasible { task: String },

    /// Classifier training set contains a single class.
    #[error("training labels contain a single class")]
    SingleClass,

    /// Not enough samples for the requested estimator.
    #[error("{got} samples too few for {what}: need at least {need}")]
    TooFewSamples {
        got: usize,
        need: usize,
        what: &'static str,
    },

    /// Corpus specification expands to zero tasks.
    #[error("corpus specification is empty")]
    EmptySpec,

    /// Persisted store carries an unsupported format version.
    #[error("store format version {found} unsupported (expected {expected})")]
    VersionMismatch { found: u32, expected: u32 },

    /// Invalid configuration value.
    #[error("config: {key}: {reason}")]
    Config { key: String, reason: String },

    /// Store or corpus serialization failure.
    #[error("serialization: {0}")]
    Serde(#[from] serde_json::Error),

    /// Underlying I/O failure.
    #[error(transparent)]
    Io(#[from] std::io::Error),

    /// I/O failure tied to a named file the caller pointed at.
    #[error("{path}: {source}")]
    File {
        path: String,
        source: std::io::Error,
    },
}

impl Error {
    /// Attaches a path to a bare I/O failure so the diagnostic names the
    /// file; other variants already carry their own context.
    pub fn at_path(self, path: &std::path::Path) -> Error {
        match self {
            Error::Io(source) => Error::File {
                path: path.display().to_string(),
                source,
            },
            other => other,
        }
    }

    /// Process exit code bucket for the CLI: 2 for data problems, 3 for
    /// internal failures. Usage errors (exit 1) never originate here.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::MalformedRow { .. }
            | Error::NonUniformGrid { .. }
            | Error::EmptyFile
            | Error::Upsample { .. }
            | Error::NonIntegralRatio { .. }
            | Error::GridMismatch { .. }
            | Error::TooShort { .. }
            | Error::DegenerateSeries
            | Error::LagOutOfRange { .. }
            | Error::Infeasible { .. }
            | Error::LengthMismatch { .. }
            | Error::AllInfeasible { .. }
            | Error::SingleClass
            | Error::TooFewSamples { .. }
            | Error::EmptySpec
            | Error::VersionMismatch { .. }
            | Error::Config { .. }
            | Error::Io(_)
            | Error::File { .. } => 2,
            Error::NonConvergence { .. } | Error::Serde(_) => 3,
        }
    }
}

#[cfg(test)]

mod tests {
    use super::*;

    #[test]
    fn messages_carry_context() {
        let e = Error::MalformedRow {
            line: 17,
            reason: "expected number".into(),
        };
        assert!(e.to_string().contains("line 17"));

        let e = Error::TooShort {
            n: 5,
            need: 12,
            what: "random_split",
        };
        assert!(e.to_string().contains('5'));
        assert!(e.to_string().contains("12"));
    }

    #[test]
    fn exit_codes_partition_data_vs_internal() {
        assert_eq!(Error::EmptyFile.exit_code(), 2);
        assert_eq!(
            Error::NonConvergence {
                model: "sarima",
                reason: "x".into()
            }
            .exit_code(),
            3
        );
    }
}
