use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("missing key `{0}`")]
    MissingKey(String),

    #[error("key `{0}` is not numeric")]
    NotNumeric(String),

    #[error("invariant violated: {0}")]
    InvariantViolation(String),

    #[error("matrix is not a rotation (orthonormality residual {residual:.3e}, det {det:.6})")]
    NotARotation { residual: f64, det: f64 },

    #[error("input vector is not unit length (norm {norm})")]
    NonUnitInput { norm: f64 },

    #[error("degenerate geometry: target bottom {gap_px:.3} px from the vanishing line")]
    DegenerateGeometry { gap_px: f64 },

    #[error("frame {got} arrived after frame {last}")]
    OutOfOrderFrame { last: u64, got: u64 },

    #[error("detection for frame {detection} passed with pose of frame {pose}")]
    FrameMismatch { pose: u64, detection: u64 },

    #[error("detection references frame {0} which has no pose sample")]
    MissingPose(u64),

    #[error("station {station} m outside profile range [{min}, {max}]")]
    OutOfRange { station: f64, min: f64, max: f64 },

    #[error("target is behind the camera at frame {0}")]
    TargetBehindCamera(u64),

    #[error("invalid scenario: {0}")]
    InvalidScenario(String),

    #[error("empty input")]
    EmptyInput,

    #[error("only {matched} of {total} truth frames have an estimate")]
    JoinMismatch { matched: usize, total: usize },

    #[error("{path}: bad header, expected `{expected}`")]
    BadHeader { path: String, expected: String },

    #[error("{context}: {message}")]
    Parse { context: String, message: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn parse(context: impl Into<String>, message: impl ToString) -> Self {
        Self::Parse { context: context.into(), message: message.to_string() }
    }

    pub(crate) fn invariant(msg: impl Into<String>) -> Self {
        Self::InvariantViolation(msg.into())
    }

    pub fn is_io(&self) -> bool {
        matches!(self, Self::Io { .. })
    }

    /// Process exit code used by the CLI: 2 for I/O failures, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        if self.is_io() {
            2
        } else {
            1
        }
    }
}
