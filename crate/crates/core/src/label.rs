//! Canonical tuple labels for product and tensor behaviours.
//!
//! A tuple of labels is rendered as `(a,b,...)`. A part is written verbatim
//! when its brackets balance and it has no comma outside brackets; otherwise
//! it is quoted. Under that rule the encoding is injective, and nested
//! tuples stay readable: `((x,y),z)`.

const OPEN: [char; 4] = ['(', '[', '{', '⟨'];
const CLOSE: [char; 4] = [')', ']', '}', '⟩'];

fn is_verbatim(part: &str) -> bool {
    if part.contains('"') || part.contains('\\') {
        return false;
    }
    let mut stack = Vec::new();
    for ch in part.chars() {
        if let Some(i) = OPEN.iter().position(|&o| o == ch) {
            stack.push(i);
        } else if let Some(i) = CLOSE.iter().position(|&c| c == ch) {
            if stack.pop() != Some(i) {
                return false;
            }
        } else if ch == ',' && stack.is_empty() {
            return false;
        }
    }
    stack.is_empty()
}

fn quote(part: &str) -> String {
    let mut out = String::with_capacity(part.len() + 2);
    out.push('"');
    for ch in part.chars() {
        if ch == '"' || ch == '\\' {
            out.push('\\');
        }
        out.push(ch);
    }
    out.push('"');
    out
}

/// Encodes a tuple of labels.
pub fn tuple_label<S: AsRef<str>>(parts: &[S]) -> String {
    let mut out = String::from("(");
    for (i, part) in parts.iter().enumerate() {
        if i > 0 {
            out.push(',');
        }
        let part = part.as_ref();
        if is_verbatim(part) {
            out.push_str(part);
        } else {
            out.push_str(&quote(part));
        }
    }
    out.push(')');
    out
}

pub fn pair_label(left: &str, right: &str) -> String {
    tuple_label(&[left, right])
}

/// Splits a label produced by [`tuple_label`] back into its parts.
pub fn split_tuple(label: &str) -> Option<Vec<String>> {
    let inner = label.strip_prefix('(')?.strip_suffix(')')?;
    let mut parts = Vec::new();
    let mut current = String::new();
    let mut depth = 0usize;
    let mut chars = inner.chars().peekable();
    let mut quoted_part = false;
    while let Some(ch) = chars.next() {
        match ch {
            '"' if depth == 0 && current.is_empty() && !quoted_part => {
                quoted_part = true;
                loop {
                    match chars.next()? {
                        '\\' => current.push(chars.next()?),
                        '"' => break,
                        c => current.push(c),
                    }
                }
            }
            ',' if depth == 0 => {
                parts.push(std::mem::take(&mut current));
                quoted_part = false;
            }
            c => {
                if quoted_part {
                    return None;
                }
                if OPEN.contains(&c) {
                    depth += 1;
                } else if CLOSE.contains(&c) {
                    depth = depth.checked_sub(1)?;
                }
                current.push(c);
            }
        }
    }
    parts.push(current);
    Some(parts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn plain_pairs() {
        assert_eq!(pair_label("x", "y"), "(x,y)");
        assert_eq!(pair_label("(x,y)", "z"), "((x,y),z)");
        assert_eq!(pair_label("⟨a,b⟩", ""), "(⟨a,b⟩,)");
    }

    #[test]
    fn awkward_parts_are_quoted() {
        assert_eq!(pair_label("a,b", "c"), "(\"a,b\",c)");
        assert_eq!(pair_label("a", "b,c"), "(a,\"b,c\")");
        assert_ne!(pair_label("a,b", "c"), pair_label("a", "b,c"));
        assert_eq!(pair_label("x)", "y"), "(\"x)\",y)");
    }

    proptest! {
        #[test]
        fn tuple_encoding_is_injective(parts in prop::collection::vec("[a-c,()\"\\\\⟨⟩]{0,4}", 1..4)) {
            let label = tuple_label(&parts);
            prop_assert_eq!(split_tuple(&label), Some(parts));
        }
    }
}
