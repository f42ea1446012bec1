//! Truncated multivariate Taylor arithmetic and the expression language.
//!
//! Every other module computes through [`TruncatedSeries`]: jets of
//! potentials, charts and equations of state are series, and so are the
//! forward-mode derivatives of whole pipelines.

mod expr;
mod multi_index;
mod series;

pub use expr::{eval_series, numbered_vars, Env, Expr};
pub use multi_index::{binomial, binomial_u128, factorial, MultiIndex};
pub use series::{SeriesLayout, TruncatedSeries};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum JetError {
    #[error("unbound name `{0}`")]
    UnboundName(String),
    #[error("singular evaluation: {0}")]
    SingularEvaluation(String),
    #[error("cannot differentiate a series of order 0")]
    OrderExhausted,
    #[error("basepoint mismatch in coordinate {index}: outer expects {expected}, inner starts at {found}")]
    BasepointMismatch { index: usize, expected: f64, found: f64 },
    #[error("series order too low: need {needed}, have {found}")]
    OrderMismatch { needed: usize, found: usize },
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
}
