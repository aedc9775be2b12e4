use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorCode {
    MissingInput,
    Config,
    Ingest,
    Track,
    Evaluate,
    Io,
    Serve,
}

impl ErrorCode {
    pub fn as_str(&self) -> &'static str {
        match self {
            ErrorCode::MissingInput => "E_MISSING_INPUT",
            ErrorCode::Config => "E_CONFIG",
            ErrorCode::Ingest => "E_INGEST",
            ErrorCode::Track => "E_TRACK",
            ErrorCode::Evaluate => "E_EVALUATE",
            ErrorCode::Io => "E_IO",
            ErrorCode::Serve => "E_SERVE",
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            ErrorCode::MissingInput | ErrorCode::Config => 2,
            ErrorCode::Ingest => 3,
            ErrorCode::Track => 4,
            ErrorCode::Evaluate => 5,
            ErrorCode::Io => 6,
            ErrorCode::Serve => 7,
        }
    }
}

/// A failure reported as a single `E_CODE: message` line.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CliError {
    pub code: ErrorCode,
    pub message: String,
}

impl CliError {
    pub fn new(code: ErrorCode, message: impl fmt::Display) -> Self {
        let message = message.to_string().split_whitespace().collect::<Vec<_>>().join(" ");
        CliError { code, message }
    }

    pub fn missing(what: impl fmt::Display) -> Self {
        CliError::new(ErrorCode::MissingInput, what)
    }

    pub fn config(what: impl fmt::Display) -> Self {
        CliError::new(ErrorCode::Config, what)
    }

    pub fn io(path: &std::path::Path, err: impl fmt::Display) -> Self {
        CliError::new(ErrorCode::Io, format!("{}: {err}", path.display()))
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.code.as_str(), self.message)
    }
}

impl std::error::Error for CliError {}

impl From<vice_core::ingestion::IngestError> for CliError {
    fn from(e: vice_core::ingestion::IngestError) -> Self {
        use vice_core::ingestion::IngestError;
        match e {
            IngestError::MissingFile(_) => CliError::new(ErrorCode::MissingInput, e),
            _ => CliError::new(ErrorCode::Ingest, e),
        }
    }
}

impl From<vice_core::pipeline::PipelineError> for CliError {
    fn from(e: vice_core::pipeline::PipelineError) -> Self {
        CliError::new(ErrorCode::Track, e)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_line() {
        let e = CliError::new(ErrorCode::MissingInput, "no such\nfile:   x");
        assert_eq!(e.to_string(), "E_MISSING_INPUT: no such file: x");
        assert_eq!(e.code.exit_code(), 2);
    }
}
