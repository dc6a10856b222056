use std::fmt;

/// A failed command, classified by exit code.
#[derive(Debug)]
pub enum Failure {
    /// Malformed or unsupported input: exit 2.
    Validation(String),
    /// Valid input on which a computation or I/O failed: exit 3.
    Runtime(String),
}

impl Failure {
    pub fn code(&self) -> i32 {
        match self {
            Failure::Validation(_) => 2,
            Failure::Runtime(_) => 3,
        }
    }

    pub fn validation(msg: impl Into<String>) -> Self {
        Failure::Validation(msg.into())
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Validation(m) => write!(f, "invalid input: {m}"),
            Failure::Runtime(m) => write!(f, "{m}"),
        }
    }
}

impl From<uws::Error> for Failure {
    fn from(e: uws::Error) -> Self {
        if e.is_validation() {
            Failure::Validation(e.to_string())
        } else {
            Failure::Runtime(e.to_string())
        }
    }
}

impl From<serde_json::Error> for Failure {
    fn from(e: serde_json::Error) -> Self {
        if e.is_io() {
            Failure::Runtime(e.to_string())
        } else {
            Failure::Validation(e.to_string())
        }
    }
}

pub type CmdResult<T> = Result<T, Failure>;
