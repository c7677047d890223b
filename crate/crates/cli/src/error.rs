use std::fmt;
use std::path::Path;

use phonoscope_core::analogy::AnalogyError;
use phonoscope_core::boundary::BoundaryError;
use phonoscope_core::corpus::CorpusError;
use phonoscope_core::phonology::PhonologyError;
use phonoscope_core::phonovec::PhonovecError;
use phonoscope_core::synth::SynthError;
use phonoscope_core::whitening::WhiteningError;

/// `Input` exits with 2, `Internal` with 1.
#[derive(Debug)]
pub enum CliError {
    Input(String),
    Internal(String),
}

impl CliError {
    pub fn input(msg: impl fmt::Display) -> Self {
        CliError::Input(msg.to_string())
    }

    pub fn write(path: &Path, err: impl fmt::Display) -> Self {
        CliError::Internal(format!("cannot write {}: {err}", path.display()))
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Input(_) => 2,
            CliError::Internal(_) => 1,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Input(m) => write!(f, "input error: {m}"),
            CliError::Internal(m) => write!(f, "internal error: {m}"),
        }
    }
}

impl From<CorpusError> for CliError {
    fn from(e: CorpusError) -> Self {
        match e {
            CorpusError::Write { .. } => CliError::Internal(e.to_string()),
            other => CliError::input(other),
        }
    }
}

macro_rules! input_errors {
    ($($t:ty),*) => {$(
        impl From<$t> for CliError {
            fn from(e: $t) -> Self {
                CliError::input(e)
            }
        }
    )*};
}

input_errors!(AnalogyError, BoundaryError, PhonologyError, PhonovecError, WhiteningError);

impl From<SynthError> for CliError {
    fn from(e: SynthError) -> Self {
        match e {
            SynthError::Corpus(c) => c.into(),
            SynthError::Io { .. } => CliError::Internal(e.to_string()),
            other => CliError::input(other),
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;
