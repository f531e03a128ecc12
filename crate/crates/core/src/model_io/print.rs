//! Canonical text rendering of declarations; re-parsing the output yields
//! an equal model.

use std::fmt::Write;

use super::syntax::{is_plain, CapDecl, Decl, DeclKind, GuaranteeDef, ImplDef, Name, SystemDef};

/// A label as written in a `.bsm` file: bare when possible, else quoted.
pub fn quote(s: &str) -> String {
    if is_plain(s) && !super::syntax::KEYWORDS.contains(&s) {
        return s.to_string();
    }
    let mut out = String::from("\"");
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            c => out.push(c),
        }
    }
    out.push('"');
    out
}

fn join<T>(items: &[T], f: impl Fn(&T) -> String) -> String {
    items.iter().map(f).collect::<Vec<_>>().join(", ")
}

fn names(ns: &[Name]) -> String {
    join(ns, |n| n.text.clone())
}

fn set(ls: &[String]) -> String {
    format!("{{{}}}", join(ls, |l| quote(l)))
}

fn block<T>(out: &mut String, items: &[T], f: impl Fn(&T) -> String) {
    if items.is_empty() {
        out.push_str("{}");
        return;
    }
    out.push_str("{\n");
    for it in items {
        let _ = writeln!(out, "  {},", f(it));
    }
    out.push('}');
}

fn decl(out: &mut String, d: &Decl) {
    let name = &d.name.text;
    let _ = write!(out, "{} {name} ", d.kind.keyword());
    match &d.kind {
        DeclKind::Component { labels, order } => {
            out.push_str(&set(labels));
            if let Some(order) = order {
                let _ = write!(
                    out,
                    " order {{{}}}",
                    join(order, |(a, b)| format!("{} < {}", quote(a), quote(b)))
                );
            }
        }
        DeclKind::System(SystemDef::Table { over, rows }) => {
            let _ = write!(out, "over ({}) ", names(over));
            block(out, rows, |(l, vs)| {
                format!("{} -> ({})", quote(l), join(vs, |v| quote(v)))
            });
        }
        DeclKind::System(SystemDef::Tensor(parts)) => {
            let _ = write!(
                out,
                "= {}",
                parts.iter().map(|p| p.text.as_str()).collect::<Vec<_>>().join(" ⊗ ")
            );
        }
        DeclKind::System(SystemDef::Components(cs)) => {
            let _ = write!(out, "= components({})", names(cs));
        }
        DeclKind::Impl { from, to, def } => {
            let _ = write!(out, ": {from} -> {to} ");
            match def {
                ImplDef::Derive => out.push_str("derive"),
                ImplDef::Map(ps) => block(out, ps, |(a, b)| format!("{} -> {}", quote(a), quote(b))),
            }
        }
        DeclKind::Valuation(entries) => block(out, entries, |(c, v, ext)| {
            format!("{c}::{} = {}", quote(v), set(ext))
        }),
        DeclKind::Formula(text) => {
            let _ = write!(out, "= {}", quote_always(text));
        }
        DeclKind::Relation { on, pairs } => {
            let _ = write!(out, "on {on} ");
            block(out, pairs, |(a, b)| format!("{} -> {}", quote(a), quote(b)));
        }
        DeclKind::Guarantee(g) => {
            out.push_str("= ");
            match g {
                GuaranteeDef::Consistency { system, set: s } => {
                    let _ = write!(out, "consistency({system}) {}", set(s));
                }
                GuaranteeDef::WeakAvailability(r) => {
                    let _ = write!(out, "weak_availability({r})");
                }
                GuaranteeDef::StrongAvailability(r) => {
                    let _ = write!(out, "strong_availability({r})");
                }
                GuaranteeDef::PartitionTolerance(a, b) => {
                    let _ = write!(out, "partition_tolerance({a}, {b})");
                }
                GuaranteeDef::Explicit { system, family } => {
                    let _ = write!(out, "explicit({system}) ");
                    block(out, family, |s| set(s));
                }
                GuaranteeDef::All(parts) => {
                    let _ = write!(out, "all({})", names(parts));
                }
                GuaranteeDef::Cap(c) => {
                    let _ = write!(out, "cap({c})");
                }
            }
        }
        DeclKind::Universe { systems, depth } => {
            let _ = write!(out, "{{{}}} depth {depth}", names(systems));
        }
        DeclKind::Scenario(s) => {
            out.push_str("{\n");
            let _ = writeln!(out, "  timestamps {}", join(&s.timestamps, |t| quote(t)));
            let _ = writeln!(out, "  values {}", join(&s.values, |v| quote(v)));
            if let Some(i) = &s.initial {
                let _ = writeln!(out, "  initial {}", quote(i));
            }
            let _ = writeln!(out, "  max_length {}", s.max_length);
            if let Some(allow) = &s.allow {
                let _ = writeln!(out, "  allow {}", join(allow, |a| quote_always(a)));
            }
            out.push('}');
        }
        DeclKind::Cap(CapDecl {
            sigma1,
            sigma2,
            consistent,
            r,
            s,
            anchors,
            pairing,
        }) => {
            out.push_str("{\n");
            let _ = writeln!(out, "  sigma1 {sigma1}");
            let _ = writeln!(out, "  sigma2 {sigma2}");
            let _ = writeln!(out, "  consistent {}", set(consistent));
            let _ = writeln!(out, "  r {r}");
            let _ = writeln!(out, "  s {s}");
            if let Some(a) = anchors {
                let _ = writeln!(out, "  anchors {}", set(a));
            }
            if let Some(p) = pairing {
                let _ = writeln!(out, "  pairing {}", quote(p));
            }
            out.push('}');
        }
        DeclKind::Timed {
            observer,
            sigma,
            rho,
        } => {
            let _ = write!(out, "{{ observer {observer} sigma {sigma} rho {rho} }}");
        }
    }
    out.push('\n');
}

fn quote_always(s: &str) -> String {
    let q = quote(s);
    if q.starts_with('"') {
        q
    } else {
        format!("\"{s}\"")
    }
}

/// Renders declarations in order, one per paragraph.
pub fn serialize_decls(decls: &[Decl]) -> String {
    let mut out = String::new();
    for (i, d) in decls.iter().enumerate() {
        if i > 0 {
            out.push('\n');
        }
        decl(&mut out, d);
    }
    out
}
