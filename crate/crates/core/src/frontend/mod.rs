//! Source text to a desugared, uniquely named surface program.

pub mod desugar;
pub mod lexer;
pub mod parser;
pub mod uniquify;

use std::fmt;

use crate::ast::{Program, Span};

pub use desugar::desugar;
pub use parser::{parse, parse_expr, parse_type};
pub use uniquify::{base_name, uniquify, NameTable};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FrontendErrorKind {
    Syntax,
    UnboundVar,
}

impl FrontendErrorKind {
    pub fn as_str(self) -> &'static str {
        match self {
            FrontendErrorKind::Syntax => "syntax",
            FrontendErrorKind::UnboundVar => "unbound-var",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
#[error("{span}: {}: {message}", kind.as_str())]
pub struct FrontendError {
    pub kind: FrontendErrorKind,
    pub span: Span,
    pub message: String,
}

impl FrontendError {
    pub fn syntax(span: Span, message: impl Into<String>) -> Self {
        FrontendError {
            kind: FrontendErrorKind::Syntax,
            span,
            message: message.into(),
        }
    }

    pub fn unbound(span: Span, message: impl Into<String>) -> Self {
        FrontendError {
            kind: FrontendErrorKind::UnboundVar,
            span,
            message: message.into(),
        }
    }
}

/// A parsed, desugared and renamed source file.
#[derive(Clone, Debug)]
pub struct SourceProgram {
    pub path: String,
    pub source: String,
    pub ast: Program,
    pub name_table: NameTable,
}

impl SourceProgram {
    /// The name as written in the source, for diagnostics.
    pub fn original_name<'a>(&'a self, unique: &'a str) -> &'a str {
        self.name_table
            .get(unique)
            .map(|(orig, _)| orig.as_str())
            .unwrap_or(unique)
    }
}

impl fmt::Display for SourceProgram {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:#}", self.ast)
    }
}

/// Parse, desugar and uniquify.
pub fn load(path: impl Into<String>, source: impl Into<String>) -> Result<SourceProgram, FrontendError> {
    let source = source.into();
    let parsed = parse(&source)?;
    let (ast, name_table) = uniquify(&desugar(&parsed)?)?;
    Ok(SourceProgram {
        path: path.into(),
        source,
        ast,
        name_table,
    })
}

/// Parse and desugar without renaming; useful for showing why renaming is
/// needed.
pub fn load_without_renaming(source: &str) -> Result<Program, FrontendError> {
    desugar(&parse(source)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn load_runs_the_whole_pipeline() {
        let sp = load("t.fk", "proc id(x:int):int { return x; } var y = id(1); return y;").unwrap();
        let text = sp.ast.to_string();
        assert!(text.contains("fix id$2"), "{text}");
        assert_eq!(sp.original_name("y$4"), "y");
    }

    #[test]
    fn error_display_includes_kind_and_position() {
        let err = load("t.fk", "return q;").unwrap_err();
        assert_eq!(err.to_string(), "1:1: unbound-var: unbound variable `q`");
    }
}
