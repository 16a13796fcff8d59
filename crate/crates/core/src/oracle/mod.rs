//! Exhaustive-enumeration ground truth over finite structural causal models.
//!
//! This is the only part of the library that is generic over the numeric
//! type; everything else works with exact integers and symbols.

mod eval;
pub mod expr;
pub mod fixtures;
mod random;
mod scm;
mod soundness;
mod table;

use thiserror::Error;

pub use eval::{eval_formula, true_estimand, ObservedDistribution};
pub use expr::{BinOp, Expr, ExprError, UnOp};
pub use random::random_scm;
pub(crate) use scm::cartesian;
pub use scm::{Mechanism, ScmError, ScmSpec, ScmVariable};
pub use soundness::{check_soundness, naive_formula, run_battery, SoundnessReport};
pub use table::{enumerate, GodRow, GodTable, DEFAULT_ROW_CAP};

use crate::estimand::EstimandError;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum OracleError {
    #[error("enumeration needs {rows} rows, above the cap of {cap}")]
    SupportTooLarge { rows: u128, cap: u128 },
    #[error("study has no scm block")]
    MissingScm,
    #[error(transparent)]
    Scm(#[from] ScmError),
    #[error(transparent)]
    Estimand(#[from] EstimandError),
    #[error("world {0} is not concrete")]
    SymbolicWorld(String),
    #[error("no enumerated world provides {0}")]
    MissingWorld(String),
    #[error("unknown variable `{0}`")]
    UnknownVariable(String),
    #[error("stratum {0} has probability zero")]
    EmptyStratum(String),
    #[error("conditioning event {0} has probability zero")]
    ZeroProbabilityCondition(String),
    #[error("symbol `{0}` is not bound")]
    UnboundSymbol(String),
    #[error("formula still contains the counterfactual term {0}")]
    NotIdentified(String),
}

/// Size the global worker pool used for enumeration. Results do not depend
/// on it; only the first call takes effect.
pub fn set_jobs(n: usize) -> Result<(), rayon::ThreadPoolBuildError> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
}
