use thiserror::Error;

use crate::model_io::Diagnostic;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    /// An argument lies outside the domain an operation is defined on.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid argument: {0}")]
    Argument(String),

    /// The systems involved do not have the required shape (component-set
    /// inclusion, composition over the union of components, ...).
    #[error("structural error: {0}")]
    Structural(String),

    #[error("capacity exceeded: {what} would have {count} elements (cap {cap})")]
    Capacity { what: String, count: u128, cap: usize },

    /// A formula is not in the language required by the operation.
    #[error("language error: {0}")]
    Language(String),

    #[error("configuration error: {0}")]
    Configuration(String),

    #[error("precondition failed: {0}")]
    Precondition(String),

    /// Two declarations of the same component disagree on its behaviour set.
    #[error("component `{0}` is declared with different behaviour sets")]
    ComponentMismatch(String),

    #[error("{}", render_diagnostics(.0))]
    Parse(Vec<Diagnostic>),
}

fn render_diagnostics(diags: &[Diagnostic]) -> String {
    diags
        .iter()
        .map(ToString::to_string)
        .collect::<Vec<_>>()
        .join("\n")
}
