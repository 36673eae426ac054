//! The shipped example programs and the verdict each must receive.

use std::path::PathBuf;

use crate::ast::Type;
use crate::frontend::parser::parse_type;
use crate::machine::Observation;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Expected {
    Accept(Type, Observation),
    /// A diagnostic kind, such as `upward-funarg`.
    Reject(&'static str),
}

#[derive(Clone, Debug)]
pub struct CorpusEntry {
    pub name: &'static str,
    pub source: &'static str,
    /// Taken from a listing in the literature rather than written as an
    /// edge case.
    pub reference: bool,
    pub expected: Expected,
}

impl CorpusEntry {
    pub fn path(&self) -> PathBuf {
        examples_dir().join(format!("{}.fk", self.name))
    }
}

/// Directory holding the `.fk` files.
pub fn examples_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("examples")
}

macro_rules! entry {
    ($name:literal, $reference:expr, $expected:expr) => {
        CorpusEntry {
            name: $name,
            source: include_str!(concat!("../examples/", $name, ".fk")),
            reference: $reference,
            expected: $expected,
        }
    };
}

fn accept(ty: &str, o: Observation) -> Expected {
    Expected::Accept(parse_type(ty).expect("corpus type"), o)
}

fn num(n: i64) -> Observation {
    Observation::Num(n)
}

pub fn corpus() -> Vec<CorpusEntry> {
    use Expected::Reject;
    vec![
        entry!("fig1_compose", true, Reject("upward-funarg")),
        entry!("fig3_twice", true, accept("int", num(5))),
        entry!("curried_twice_bad", true, Reject("upward-funarg")),
        entry!("curried_twice_let", true, accept("int", num(5))),
        entry!("curried_twice_capture", true, accept("int", num(5))),
        entry!("effectpoly_bad", true, Reject("effect-violation")),
        entry!("effectpoly_ok", true, accept("int", num(12))),
        entry!("tailcall_lists", true, accept("int", num(0))),
        entry!("renaming", true, accept("int", num(3))),
        entry!("zero_arg_call", false, accept("int", num(7))),
        entry!("shadowing", false, accept("int", num(16))),
        entry!("nested_effect_abs", false, accept("int", num(7))),
        entry!("empty_effect_upward", false, accept("int", num(8))),
        entry!("copy_upward", false, accept("int", num(7))),
        entry!("returns_function", false, accept("func(int,int,[])", Observation::Fun)),
        entry!("returns_abstraction", false, accept("<p> func(int,[p])", Observation::Abs)),
        entry!("tail_call_overlap", false, Reject("tail-call-overlap")),
        entry!("not_in_effect", false, Reject("not-in-effect")),
        entry!("arity", false, Reject("arity")),
        entry!("malformed_effect", false, Reject("malformed-effect")),
        entry!("list_ops", false, accept("int list", Observation::List(vec![3, 2, 3]))),
        entry!("factorial", false, accept("int", num(120))),
        entry!("accumulate_tail", false, accept("int", num(500_500))),
        entry!("effect_app_location", false, accept("int", num(231))),
    ]
}

pub fn find(name: &str) -> Option<CorpusEntry> {
    corpus().into_iter().find(|e| e.name == name)
}

/// The tail-call list program with both occurrences of its size parameter
/// set to `n`.
pub fn tailcall_lists_source(n: u32) -> String {
    let base = find("tailcall_lists").expect("shipped").source;
    base.replace("s(100)", &format!("s({n})"))
        .replace("f(100,nil)", &format!("f({n},nil)"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_entry_has_a_file() {
        for e in corpus() {
            assert!(e.path().exists(), "{}", e.name);
        }
        assert_eq!(corpus().iter().filter(|e| e.reference).count(), 9);
        assert!(corpus().iter().filter(|e| !e.reference).count() >= 10);
    }

    #[test]
    fn parameterized_tail_call_program() {
        let s = tailcall_lists_source(7);
        assert!(s.contains("s(7)") && s.contains("f(7,nil)"));
        assert!(!s.contains("(100"));
    }
}
