use std::io;

use apt_align_core::corpus::{CorpusError, RecordError};
use apt_align_core::evalstats::EvalError;
use apt_align_core::prefloss::PrefLossError;
use apt_align_core::ptd::PtdError;
use apt_align_core::tinylm::TinyLmError;

/// Command failure, mapped onto the process exit code.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("schema error: {0}")]
    Schema(String),
    #[error("missing data: {0}")]
    MissingData(String),
    #[error("numeric degeneracy: {0}")]
    Degenerate(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Io(_) => 1,
            CliError::Schema(_) => 2,
            CliError::MissingData(_) => 3,
            CliError::Degenerate(_) => 4,
        }
    }

    pub(crate) fn io(path: &std::path::Path, e: io::Error) -> Self {
        if e.kind() == io::ErrorKind::NotFound {
            CliError::MissingData(format!("{}: {e}", path.display()))
        } else {
            CliError::Io(format!("{}: {e}", path.display()))
        }
    }

    /// The first rejected line of an input file, as a schema error.
    pub(crate) fn rejects(path: &std::path::Path, errors: &[RecordError]) -> Self {
        let first = &errors[0];
        CliError::Schema(format!("{}: {} rejected line(s), first: {first}", path.display(), errors.len()))
    }
}

impl From<CorpusError> for CliError {
    fn from(e: CorpusError) -> Self {
        match e {
            CorpusError::Io { ref source, .. } if source.kind() == io::ErrorKind::NotFound => {
                CliError::MissingData(e.to_string())
            }
            CorpusError::Io { .. } => CliError::Io(e.to_string()),
            CorpusError::EmptyInput | CorpusError::MissingText { .. } => CliError::MissingData(e.to_string()),
            CorpusError::InvalidRatio(_) => CliError::Schema(e.to_string()),
        }
    }
}

impl From<EvalError> for CliError {
    fn from(e: EvalError) -> Self {
        match e {
            EvalError::LengthMismatch(..) | EvalError::InvalidParameter(_) => CliError::Schema(e.to_string()),
            EvalError::InsufficientData(_) => CliError::MissingData(e.to_string()),
            _ => CliError::Degenerate(e.to_string()),
        }
    }
}

impl From<PtdError> for CliError {
    fn from(e: PtdError) -> Self {
        match e {
            PtdError::Eval(inner) => inner.into(),
            PtdError::AllZero => CliError::Degenerate(e.to_string()),
            _ => CliError::Schema(e.to_string()),
        }
    }
}

impl From<PrefLossError> for CliError {
    fn from(e: PrefLossError) -> Self {
        match e {
            PrefLossError::Io(_) => CliError::Io(e.to_string()),
            PrefLossError::EmptyInput => CliError::MissingData(e.to_string()),
            PrefLossError::Schema { .. } | PrefLossError::Unpaired(_) | PrefLossError::NonPositiveBeta(_) => {
                CliError::Schema(e.to_string())
            }
            PrefLossError::InvalidSequence(_) => CliError::Degenerate(e.to_string()),
        }
    }
}

impl From<TinyLmError> for CliError {
    fn from(e: TinyLmError) -> Self {
        match e {
            TinyLmError::EmptyCorpus | TinyLmError::EmptyPairs => CliError::MissingData(e.to_string()),
            TinyLmError::Io(ref io) if io.kind() == io::ErrorKind::NotFound => CliError::MissingData(e.to_string()),
            TinyLmError::Io(_) => CliError::Io(e.to_string()),
            TinyLmError::Corpus(inner) => inner.into(),
            TinyLmError::PrefLoss(inner) => inner.into(),
            TinyLmError::VocabTooSmall(_) | TinyLmError::InvalidConfig(_) | TinyLmError::Checkpoint(_) => {
                CliError::Schema(e.to_string())
            }
        }
    }
}
