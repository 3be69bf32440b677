//! The source language: lexing, parsing, compile-time expansion, and
//! typechecking.
//!
//! A source unit is a list of declarations: integer constants, type aliases,
//! ADT declarations (`enum` / `product` / `sum`), circuits, and properties. A
//! circuit declares registers (`state`), sub-circuit instances (`inst`), and a
//! single `call` — the combinational behavior evaluated once per cycle.
//!
//! Two constructs exist only at compile time and disappear during expansion:
//! `unroll x in [..] { .. }` stamps its body once per list element, and
//! `static if` selects a branch from a constant condition. After
//! [`expand`](expand::expand) the unit contains neither, and every named
//! constant has been replaced by its literal value.

pub mod ast;
pub mod check;
pub mod expand;
pub mod lexer;
pub mod parser;
pub mod pretty;

pub use ast::*;
pub use check::{typecheck, TypedUnit};
pub use expand::expand;
pub use parser::parse;

use std::collections::BTreeSet;

/// Pick an identifier not present in `avoid`, preferring the bare hint and
/// falling back to `hint_0`, `hint_1`, ... in order.
pub fn fresh_name(avoid: &BTreeSet<String>, hint: &str) -> String {
    if !avoid.contains(hint) {
        return hint.to_string();
    }
    for k in 0u64.. {
        let candidate = format!("{hint}_{k}");
        if !avoid.contains(&candidate) {
            return candidate;
        }
    }
    unreachable!("name space exhausted")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fresh_name_prefers_the_hint() {
        let mut avoid = BTreeSet::new();
        assert_eq!(fresh_name(&avoid, "cond"), "cond");
        avoid.insert("cond".into());
        assert_eq!(fresh_name(&avoid, "cond"), "cond_0");
        avoid.insert("cond_0".into());
        assert_eq!(fresh_name(&avoid, "cond"), "cond_1");
    }
}
