use std::fmt;

/// Failure of a command, carrying the process exit code it maps to.
#[derive(Debug)]
pub enum CliError {
    /// Bad flags or an invalid config. Exit code 1.
    Usage(String),
    /// Unreadable, malformed or inconsistent input files. Exit code 2.
    Data(String),
    /// A broken invariant inside the engine. Exit code 3.
    Internal(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Data(_) => 2,
            CliError::Internal(_) => 3,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage error: {m}"),
            CliError::Data(m) => write!(f, "data error: {m}"),
            CliError::Internal(m) => write!(f, "internal error: {m}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<qaret::Error> for CliError {
    fn from(e: qaret::Error) -> Self {
        let kind = kind_of(&e);
        let message = e.to_string();
        match kind {
            1 => CliError::Usage(message),
            2 => CliError::Data(message),
            _ => CliError::Internal(message),
        }
    }
}

fn kind_of(e: &qaret::Error) -> u8 {
    use qaret::Error as E;
    match e {
        E::InvalidParameter(_) | E::Config(_) => 1,
        E::Io { .. }
        | E::MalformedLine { .. }
        | E::DuplicateId(_)
        | E::Empty(_)
        | E::DimensionMismatch { .. }
        | E::Format(_)
        | E::VocabularyMismatch { .. }
        | E::MissingGold(_) => 2,
        E::Pair { source, .. } => kind_of(source),
        E::UnknownDocument(_) | E::TokenOutOfRange { .. } | E::MissingRanking(_) => 3,
    }
}

pub type CliResult<T> = Result<T, CliError>;

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nested_pair_errors_keep_their_kind() {
        let e = qaret::Error::Pair {
            id: 4,
            source: Box::new(qaret::Error::Empty("question")),
        };
        assert_eq!(CliError::from(e).exit_code(), 2);
        assert_eq!(
            CliError::from(qaret::Error::Config("x".into())).exit_code(),
            1
        );
        assert_eq!(
            CliError::from(qaret::Error::MissingRanking(1)).exit_code(),
            3
        );
    }
}
