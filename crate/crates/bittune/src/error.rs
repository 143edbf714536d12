use std::path::PathBuf;

use bittune_core::constraints::ConstraintError;
use bittune_core::frontend::SyntaxError;
use bittune_core::policy::PiError;
use bittune_core::range::{RangeError, TableError};
use bittune_core::solver::SolveError;
use bittune_core::tuner::TuneError;
use bittune_core::validator::ValidateError;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
    #[error("syntax error: {0}")]
    Syntax(SyntaxError),
    #[error("range analysis: {0}")]
    Range(RangeError),
    #[error("{0}")]
    Table(TableError),
    #[error("constraint generation: {0}")]
    Constraint(ConstraintError),
    #[error("solver: {0}")]
    Solve(SolveError),
    #[error("policy iteration: {0}")]
    Pi(PiError),
    #[error("{0}")]
    Tune(TuneError),
    #[error("validation: {0}")]
    Validate(ValidateError),
    #[error("ranges file: {0}")]
    RangesFile(String),
    #[error("solution file: {0}")]
    SolutionFile(String),
    #[error("{0}")]
    Usage(String),
    /// two solvers disagreed, or a result failed its own re-check
    #[error("internal error: {0}")]
    Internal(String),
}

macro_rules! from_core {
    ($($t:ty => $v:ident),* $(,)?) => {
        $(impl From<$t> for Error {
            fn from(e: $t) -> Error {
                Error::$v(e)
            }
        })*
    };
}

from_core! {
    SyntaxError => Syntax,
    RangeError => Range,
    TableError => Table,
    ConstraintError => Constraint,
    SolveError => Solve,
    PiError => Pi,
    TuneError => Tune,
    ValidateError => Validate,
}

pub fn read_file(path: &std::path::Path) -> Result<String, Error> {
    std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn write_file(path: &std::path::Path, text: &str) -> Result<(), Error> {
    std::fs::write(path, text).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}
