use std::fmt;
use std::process::ExitCode;

use itskit::analyzer::AnalyzerError;
use itskit::dataset_io::DatasetError;
use itskit::gateway::GatewayError;
use itskit::recorder::RecorderError;
use itskit::trafficgen::TrafficError;
use itskit::CodecError;

/// Exit 1 for bad invocations, 2 for anything the data or the environment
/// refused.
#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Data(String),
    /// Stdout was closed by the reader; not worth reporting.
    BrokenPipe,
}

impl CliError {
    pub fn exit_code(&self) -> ExitCode {
        match self {
            CliError::Usage(_) => ExitCode::from(1),
            CliError::Data(_) => ExitCode::from(2),
            CliError::BrokenPipe => ExitCode::SUCCESS,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) | CliError::Data(m) => f.write_str(m),
            CliError::BrokenPipe => f.write_str("broken pipe"),
        }
    }
}

impl std::error::Error for CliError {}

macro_rules! data_error {
    ($($t:ty),*) => {$(
        impl From<$t> for CliError {
            fn from(e: $t) -> Self {
                CliError::Data(e.to_string())
            }
        }
    )*};
}

data_error!(
    AnalyzerError,
    CodecError,
    GatewayError,
    serde_json::Error
);

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        if e.kind() == std::io::ErrorKind::BrokenPipe {
            CliError::BrokenPipe
        } else {
            CliError::Data(e.to_string())
        }
    }
}

impl From<DatasetError> for CliError {
    fn from(e: DatasetError) -> Self {
        match e {
            DatasetError::Io { source, .. } if source.kind() == std::io::ErrorKind::BrokenPipe => CliError::BrokenPipe,
            e => CliError::Data(e.to_string()),
        }
    }
}

impl From<RecorderError> for CliError {
    fn from(e: RecorderError) -> Self {
        match e {
            RecorderError::InvalidConfig(_) => CliError::Usage(e.to_string()),
            e => CliError::Data(e.to_string()),
        }
    }
}

impl From<TrafficError> for CliError {
    fn from(e: TrafficError) -> Self {
        match e {
            TrafficError::Config(_) => CliError::Usage(e.to_string()),
            e => CliError::Data(e.to_string()),
        }
    }
}
