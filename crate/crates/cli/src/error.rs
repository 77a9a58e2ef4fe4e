use pivotforge::ErrorClass;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),

    #[error("{0}")]
    Core(#[from] pivotforge::Error),

    #[error("{0}")]
    Internal(String),
}

impl CliError {
    pub fn class(&self) -> ErrorClass {
        match self {
            CliError::Usage(_) => ErrorClass::Usage,
            CliError::Core(e) => e.class(),
            CliError::Internal(_) => ErrorClass::Internal,
        }
    }

    pub fn exit_code(&self) -> i32 {
        exit_code(self.class())
    }
}

pub fn exit_code(class: ErrorClass) -> i32 {
    match class {
        ErrorClass::Usage => 1,
        ErrorClass::Format => 2,
        ErrorClass::Integrity => 3,
        ErrorClass::Internal => 4,
    }
}

pub type CliResult<T> = Result<T, CliError>;

pub fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}
