use thiserror::Error;

use crate::context::ExtContext;
use crate::term::Term;

#[derive(Debug, Clone, Error)]
pub enum PssError {
    #[error("context is not prevalid: {0}")]
    InvalidContext(ExtContext),
    #[error("fuel exhausted during {0}")]
    BudgetExceeded(&'static str),
    #[error("no cached well-formedness record for {0}")]
    CacheMiss(Term),
    #[error("not applicable: {0}")]
    NotApplicable(String),
    #[error("square does not close: {top} with sides {equiv_side} and {sub_side}")]
    CommutationFailure {
        top: Term,
        equiv_side: Term,
        sub_side: Term,
    },
}

pub type Result<T> = std::result::Result<T, PssError>;
