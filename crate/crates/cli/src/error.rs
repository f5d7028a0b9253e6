use std::fmt;

/// Error surfaced on stderr as a single `ERROR:<category>:<message>` line.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CliError {
    pub category: &'static str,
    pub message: String,
}

impl CliError {
    pub fn new(category: &'static str, message: impl Into<String>) -> Self {
        CliError {
            category,
            message: message.into(),
        }
    }

    pub fn io(path: &std::path::Path, err: std::io::Error) -> Self {
        CliError::new("io", format!("{}: {err}", path.display()))
    }

    /// The machine-parsable line; newlines inside the message are folded.
    pub fn line(&self) -> String {
        let flat: Vec<&str> = self
            .message
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty())
            .collect();
        format!("ERROR:{}:{}", self.category, flat.join(" "))
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.line())
    }
}

impl std::error::Error for CliError {}

impl From<dqbn_core::Error> for CliError {
    fn from(e: dqbn_core::Error) -> Self {
        CliError::new(e.category(), e.to_string())
    }
}

pub type CliResult<T> = Result<T, CliError>;
