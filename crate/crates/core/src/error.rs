use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// `r2_d == 1` makes the bias and standard-error factors divide by zero.
    #[error("partial R2 with the treatment equals 1 (pole of the bias factor)")]
    Pole,

    #[error("unknown column `{0}`")]
    UnknownColumn(String),

    #[error("invalid model specification: {0}")]
    InvalidSpec(String),

    #[error("singular design: column(s) {} are collinear with the preceding regressors", .columns.join(", "))]
    SingularDesign { columns: Vec<String> },

    #[error("not enough observations: {n} rows for {k} regressors")]
    TooFewRows { n: usize, k: usize },

    #[error(
        "{p} optional covariates exceed the enumeration cap of {cap}; \
         use the closed-form bound instead"
    )]
    TooManyCovariates { p: usize, cap: usize },

    #[error("every enumerated specification was singular")]
    AllSingular,

    /// A closed form failed its own verification. This signals a bug.
    #[error("internal consistency failure: {0}")]
    Internal(String),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }
}
