//! Structured command reports. The JSON document is the primary output; the
//! human rendering is derived from it.

use serde::Serialize;
use serde_json::{Map, Value};

use super::Diagnostic;
use crate::Error;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Report {
    pub command: String,
    /// The arguments as given, keyed by flag name.
    pub args: Map<String, Value>,
    /// `None` only for error reports.
    pub verdict: Option<bool>,
    pub details: Value,
    /// Results the verdict rests on.
    pub citations: Vec<String>,
    /// Model source, limits and universe or scenario configuration.
    pub provenance: Value,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
struct ErrorDetails {
    kind: &'static str,
    message: String,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    diagnostics: Vec<Diagnostic>,
}

fn kind(e: &Error) -> &'static str {
    match e {
        Error::Domain(_) => "domain",
        Error::Argument(_) => "argument",
        Error::Structural(_) => "structural",
        Error::Capacity { .. } => "capacity",
        Error::Language(_) => "language",
        Error::Configuration(_) => "configuration",
        Error::Precondition(_) => "precondition",
        Error::ComponentMismatch(_) => "component-mismatch",
        Error::Parse(_) => "parse",
    }
}

impl Report {
    pub fn error(command: &str, args: Map<String, Value>, e: &Error) -> Self {
        let details = ErrorDetails {
            kind: kind(e),
            message: e.to_string(),
            diagnostics: match e {
                Error::Parse(d) => d.clone(),
                _ => Vec::new(),
            },
        };
        Report {
            command: command.to_string(),
            args,
            verdict: None,
            details: serde_json::json!({ "error": details }),
            citations: Vec::new(),
            provenance: Value::Null,
        }
    }

    /// 0 for a true verdict, 1 for a false one, 2 for errors.
    pub fn exit_code(&self) -> i32 {
        match self.verdict {
            Some(true) => 0,
            Some(false) => 1,
            None => 2,
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("reports serialize");
        s.push('\n');
        s
    }
}

fn scalar(v: &Value) -> Option<String> {
    match v {
        Value::Null => Some("-".into()),
        Value::Bool(b) => Some(b.to_string()),
        Value::Number(n) => Some(n.to_string()),
        Value::String(s) if s.is_empty() => Some("\"\"".into()),
        Value::String(s) => Some(s.clone()),
        Value::Array(a) if a.is_empty() => Some("[]".into()),
        Value::Object(o) if o.is_empty() => Some("{}".into()),
        Value::Array(a) if a.iter().all(|x| !x.is_array() && !x.is_object()) => Some(format!(
            "[{}]",
            a.iter().filter_map(scalar).collect::<Vec<_>>().join(", ")
        )),
        _ => None,
    }
}

fn render(out: &mut String, v: &Value, indent: usize) {
    let pad = "  ".repeat(indent);
    match v {
        Value::Object(o) => {
            for (k, x) in o {
                match scalar(x) {
                    Some(s) => out.push_str(&format!("{pad}{k}: {s}\n")),
                    None => {
                        out.push_str(&format!("{pad}{k}:\n"));
                        render(out, x, indent + 1);
                    }
                }
            }
        }
        Value::Array(a) => {
            for x in a {
                match scalar(x) {
                    Some(s) => out.push_str(&format!("{pad}- {s}\n")),
                    None => {
                        out.push_str(&format!("{pad}-\n"));
                        render(out, x, indent + 1);
                    }
                }
            }
        }
        x => out.push_str(&format!("{pad}{}\n", scalar(x).unwrap_or_default())),
    }
}

/// Indented `key: value` text with the verdict first.
pub fn render_pretty(r: &Report) -> String {
    let verdict = match r.verdict {
        Some(true) => "true",
        Some(false) => "false",
        None => "error",
    };
    let mut out = format!("{}: {verdict}\n", r.command);
    let value = serde_json::to_value(r).expect("reports serialize");
    let mut rest = value.as_object().cloned().unwrap_or_default();
    rest.remove("command");
    rest.remove("verdict");
    render(&mut out, &Value::Object(rest), 0);
    out
}
