use super::FrontendError;
use crate::ast::Span;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Tok {
    Ident(String),
    /// Unsigned literal; the parser applies a leading minus.
    Num(u64),
    Punct(char),
    Eof,
}

#[derive(Clone, Debug)]
pub struct Token {
    pub tok: Tok,
    pub span: Span,
}

pub const KEYWORDS: [&str; 14] = [
    "var", "fun", "func", "proc", "fix", "let", "in", "return", "if", "else", "int", "list",
    "nil", "top",
];

const PUNCT: &str = "(){}[]<>;:,=.+-*#";

pub fn is_ident_start(c: char) -> bool {
    c.is_ascii_alphabetic() || c == '_'
}

fn is_ident_continue(c: char) -> bool {
    c.is_ascii_alphanumeric() || c == '_' || c == '$' || c == '\''
}

pub fn tokenize(src: &str) -> Result<Vec<Token>, FrontendError> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0usize, 1u32, 1u32);

    macro_rules! bump {
        () => {{
            if chars[i] == '\n' {
                line += 1;
                col = 1;
            } else {
                col += 1;
            }
            i += 1;
        }};
    }

    while i < chars.len() {
        let c = chars[i];
        let span = Span::new(line, col);
        if c.is_whitespace() {
            bump!();
        } else if c == '/' && chars.get(i + 1) == Some(&'/') {
            while i < chars.len() && chars[i] != '\n' {
                bump!();
            }
        } else if c == '/' && chars.get(i + 1) == Some(&'*') {
            bump!();
            bump!();
            loop {
                if i >= chars.len() {
                    return Err(FrontendError::syntax(span, "unterminated block comment"));
                }
                if chars[i] == '*' && chars.get(i + 1) == Some(&'/') {
                    bump!();
                    bump!();
                    break;
                }
                bump!();
            }
        } else if is_ident_start(c) {
            let start = i;
            while i < chars.len() && is_ident_continue(chars[i]) {
                bump!();
            }
            let word: String = chars[start..i].iter().collect();
            out.push(Token {
                tok: Tok::Ident(word),
                span,
            });
        } else if c.is_ascii_digit() {
            let start = i;
            while i < chars.len() && chars[i].is_ascii_digit() {
                bump!();
            }
            let digits: String = chars[start..i].iter().collect();
            let n = digits
                .parse::<u64>()
                .map_err(|_| FrontendError::syntax(span, format!("integer literal {digits} is too large")))?;
            out.push(Token {
                tok: Tok::Num(n),
                span,
            });
        } else if PUNCT.contains(c) {
            bump!();
            out.push(Token {
                tok: Tok::Punct(c),
                span,
            });
        } else {
            return Err(FrontendError::syntax(span, format!("unexpected character `{c}`")));
        }
    }
    out.push(Token {
        tok: Tok::Eof,
        span: Span::new(line, col),
    });
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toks(src: &str) -> Vec<Tok> {
        tokenize(src).unwrap().into_iter().map(|t| t.tok).collect()
    }

    #[test]
    fn identifiers_numbers_and_punctuation() {
        assert_eq!(
            toks("var x$1 = 42;"),
            vec![
                Tok::Ident("var".into()),
                Tok::Ident("x$1".into()),
                Tok::Punct('='),
                Tok::Num(42),
                Tok::Punct(';'),
                Tok::Eof
            ]
        );
    }

    #[test]
    fn comments_are_skipped() {
        assert_eq!(toks("a /* Error */ // tail\n b"), toks("a b"));
    }

    #[test]
    fn positions_are_one_based() {
        let t = tokenize("\n  foo").unwrap();
        assert_eq!((t[0].span.line, t[0].span.col), (2, 3));
    }

    #[test]
    fn stray_characters_are_rejected() {
        assert!(tokenize("a @ b").is_err());
        assert!(tokenize("/* open").is_err());
    }
}
