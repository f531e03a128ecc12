//! The `.bsm` text format, the fixture corpus, JSON reports and the CLI.

use std::fmt;

use serde::Serialize;

mod cli;
pub mod fixtures;
mod formula_syntax;
mod model;
mod print;
mod report;
pub mod syntax;

pub use cli::cli_dispatch;
pub use formula_syntax::{parse_formula, parse_formula_at};
pub use model::{parse_model, parse_model_with, scenario_config, ModelFile};
pub use print::quote;
pub use report::{render_pretty, Report};

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Diagnostic {
    pub line: usize,
    pub column: usize,
    pub message: String,
}

impl Diagnostic {
    pub fn new(line: usize, column: usize, message: impl Into<String>) -> Self {
        Diagnostic {
            line,
            column,
            message: message.into(),
        }
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}: {}", self.line, self.column, self.message)
    }
}

/// Canonical text of a model; parsing it yields an equal model.
pub fn serialize_model(model: &ModelFile) -> String {
    print::serialize_decls(&model.decls)
}
