use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// An argument fell outside the domain of a warping or profile function.
    #[error("{function}: argument {value} outside domain {domain}")]
    Domain {
        function: &'static str,
        value: f64,
        domain: String,
    },

    /// A distance function was differentiated at its centre or cut locus.
    #[error("singular evaluation: {0}")]
    Singular(String),

    /// A point or tangent vector violates the model constraint.
    #[error("model constraint violated: {0}")]
    Constraint(String),

    /// Parameters are individually valid but jointly infeasible.
    #[error("infeasible configuration: {0}")]
    Infeasible(String),

    /// A theorem hypothesis does not hold for the requested suite.
    #[error("hypothesis violated: {0}")]
    Hypothesis(String),

    #[error("invalid chart: {0}")]
    Chart(String),

    #[error("precondition failed: {0}")]
    Precondition(String),

    /// Configuration file diagnostics, addressed by line (0 when unknown) and field.
    #[error("config line {line}, field `{field}`: {message}")]
    Config {
        line: usize,
        field: String,
        message: String,
    },

    #[error("i/o: {0}")]
    Io(String),
}

impl Error {
    pub fn domain(function: &'static str, value: f64, domain: impl Into<String>) -> Self {
        Error::Domain {
            function,
            value,
            domain: domain.into(),
        }
    }

    pub fn config(line: usize, field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            line,
            field: field.into(),
            message: message.into(),
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
