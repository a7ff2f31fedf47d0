use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kind {
    /// Bad input or usage; exit code 2.
    Input,
    /// Failure while running; exit code 1.
    Runtime,
}

/// An error tagged with the pipeline stage that produced it.
#[derive(Debug)]
pub struct CliError {
    pub stage: &'static str,
    pub kind: Kind,
    pub message: String,
}

impl CliError {
    pub fn input(stage: &'static str, message: impl Into<String>) -> Self {
        Self {
            stage,
            kind: Kind::Input,
            message: message.into(),
        }
    }

    pub fn runtime(stage: &'static str, message: impl Into<String>) -> Self {
        Self {
            stage,
            kind: Kind::Runtime,
            message: message.into(),
        }
    }

    pub fn code(&self) -> i32 {
        match self.kind {
            Kind::Input => 2,
            Kind::Runtime => 1,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} failed: {}", self.stage, self.message)
    }
}

impl std::error::Error for CliError {}

/// Tag a core error with a stage. Decode and IO problems count as input errors.
pub fn stage(stage: &'static str) -> impl FnOnce(colorlearn::Error) -> CliError {
    move |e| {
        use colorlearn::Error as E;
        match e {
            E::Decode(_) | E::Io { .. } | E::ModelFormat(_) | E::ModelVersion { .. } | E::Config(_) | E::DimensionMismatch { .. } => {
                CliError::input(stage, e.to_string())
            }
            _ => CliError::runtime(stage, e.to_string()),
        }
    }
}
