//! Source text to checked program, with one diagnostic type for every
//! front-end and type error.

use std::fmt;

use serde::Serialize;

use crate::ast::Span;
use crate::frontend::{load, FrontendError, SourceProgram};
use crate::typecheck::{check_program, CheckedProgram, TypeError};

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Diagnostic {
    pub file: String,
    pub line: u32,
    pub col: u32,
    /// `syntax`, `unbound-var`, or a type error kind such as `upward-funarg`.
    pub kind: String,
    pub message: String,
}

impl Diagnostic {
    fn new(file: &str, span: Span, kind: &str, message: &str) -> Self {
        Diagnostic {
            file: file.to_string(),
            line: span.line,
            col: span.col,
            kind: kind.to_string(),
            message: message.to_string(),
        }
    }

    pub fn from_frontend(file: &str, e: &FrontendError) -> Self {
        Diagnostic::new(file, e.span, e.kind.as_str(), &e.message)
    }

    /// Type errors mention uniquified names; they are mapped back to the
    /// names as written.
    pub fn from_type(src: &SourceProgram, e: &TypeError) -> Self {
        Diagnostic::new(&src.path, e.span, e.kind.as_str(), &restore_names(src, &e.message))
    }
}

fn restore_names(src: &SourceProgram, message: &str) -> String {
    let is_ident = |c: char| c.is_alphanumeric() || c == '_' || c == '$' || c == '\'';
    let mut out = String::with_capacity(message.len());
    let mut word = String::new();
    let flush = |word: &mut String, out: &mut String| {
        match src.name_table.get(word.as_str()) {
            Some((orig, _)) => out.push_str(orig),
            None => out.push_str(word),
        }
        word.clear();
    };
    for c in message.chars() {
        if is_ident(c) {
            word.push(c);
        } else {
            flush(&mut word, &mut out);
            out.push(c);
        }
    }
    flush(&mut word, &mut out);
    out
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}:{}: {}: {}", self.file, self.line, self.col, self.kind, self.message)
    }
}

/// A program that parsed and type-checked.
#[derive(Clone, Debug)]
pub struct Compiled {
    pub source: SourceProgram,
    pub checked: CheckedProgram,
}

pub fn compile(path: &str, source: &str) -> Result<Compiled, Diagnostic> {
    let sp = load(path, source).map_err(|e| Diagnostic::from_frontend(path, &e))?;
    let checked = check_program(&sp.ast).map_err(|e| Diagnostic::from_type(&sp, &e))?;
    Ok(Compiled { source: sp, checked })
}
