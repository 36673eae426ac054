//! Recursive-descent parser for the concrete syntax.
//!
//! Calls are statements, not expressions: after `var x =` or `return`, the
//! parser reads a postfix expression and treats a following `(` as the
//! argument list of a call. Operator names such as `inc` are ordinary
//! identifiers; `inc(e)` means the primitive only when no variable named
//! `inc` is in scope, so the parser tracks binders.

use super::lexer::{tokenize, Tok, Token, KEYWORDS};
use super::FrontendError;
use crate::ast::{
    Effect, EffectAtom, Expr, FunExpr, Name, OpName, ProcDef, Program, Span, Stmt, Type,
};

/// Parameters and capture list of a function literal.
type ParamList = (Vec<(Name, Type)>, Vec<Name>);

pub fn parse(src: &str) -> Result<Program, FrontendError> {
    let mut p = Parser::new(src)?;
    let body = p.stmt()?;
    p.expect_eof()?;
    Ok(Program::new(body))
}

pub fn parse_expr(src: &str) -> Result<Expr, FrontendError> {
    let mut p = Parser::new(src)?;
    let e = p.expr()?;
    p.expect_eof()?;
    Ok(e)
}

pub fn parse_type(src: &str) -> Result<Type, FrontendError> {
    let mut p = Parser::new(src)?;
    let t = p.ty()?;
    p.expect_eof()?;
    Ok(t)
}

struct Parser {
    toks: Vec<Token>,
    pos: usize,
    scope: Vec<Name>,
}

fn reserved(word: &str) -> bool {
    KEYWORDS.contains(&word)
}

fn describe(t: &Tok) -> String {
    match t {
        Tok::Ident(w) => format!("`{w}`"),
        Tok::Num(n) => format!("`{n}`"),
        Tok::Punct(c) => format!("`{c}`"),
        Tok::Eof => "end of input".to_string(),
    }
}

impl Parser {
    fn new(src: &str) -> Result<Self, FrontendError> {
        Ok(Parser {
            toks: tokenize(src)?,
            pos: 0,
            scope: Vec::new(),
        })
    }

    fn scoped<R>(&mut self, names: &[Name], f: impl FnOnce(&mut Self) -> R) -> R {
        let n = self.scope.len();
        self.scope.extend(names.iter().cloned());
        let r = f(self);
        self.scope.truncate(n);
        r
    }

    fn primitive_call(&self, word: &str) -> Option<OpName> {
        let op = OpName::from_name(word)?;
        let bound = self.scope.iter().any(|x| x == word);
        (!bound && *self.peek_at(1) == Tok::Punct('(')).then_some(op)
    }

    fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    fn peek_at(&self, k: usize) -> &Tok {
        let i = (self.pos + k).min(self.toks.len() - 1);
        &self.toks[i].tok
    }

    fn span(&self) -> Span {
        self.toks[self.pos].span
    }

    fn advance(&mut self) -> Tok {
        let t = self.toks[self.pos].tok.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn error<T>(&self, expected: &str) -> Result<T, FrontendError> {
        Err(FrontendError::syntax(
            self.span(),
            format!("expected {expected}, found {}", describe(self.peek())),
        ))
    }

    fn at_punct(&self, c: char) -> bool {
        *self.peek() == Tok::Punct(c)
    }

    fn at_kw(&self, kw: &str) -> bool {
        matches!(self.peek(), Tok::Ident(w) if w == kw)
    }

    fn eat_punct(&mut self, c: char) -> bool {
        if self.at_punct(c) {
            self.advance();
            true
        } else {
            false
        }
    }

    fn eat_kw(&mut self, kw: &str) -> bool {
        if self.at_kw(kw) {
            self.advance();
            true
        } else {
            false
        }
    }

    fn expect_punct(&mut self, c: char) -> Result<(), FrontendError> {
        if self.eat_punct(c) {
            Ok(())
        } else {
            self.error(&format!("`{c}`"))
        }
    }

    fn expect_kw(&mut self, kw: &str) -> Result<(), FrontendError> {
        if self.eat_kw(kw) {
            Ok(())
        } else {
            self.error(&format!("`{kw}`"))
        }
    }

    fn expect_eof(&self) -> Result<(), FrontendError> {
        if *self.peek() == Tok::Eof {
            Ok(())
        } else {
            self.error("end of input")
        }
    }

    fn ident(&mut self) -> Result<Name, FrontendError> {
        match self.peek().clone() {
            Tok::Ident(w) if reserved(&w) => Err(FrontendError::syntax(
                self.span(),
                format!("`{w}` is reserved and cannot be used as a name"),
            )),
            Tok::Ident(w) => {
                self.advance();
                Ok(w)
            }
            _ => self.error("an identifier"),
        }
    }

    fn ident_list(&mut self, close: char) -> Result<Vec<Name>, FrontendError> {
        let mut names = Vec::new();
        if self.at_punct(close) {
            return Ok(names);
        }
        loop {
            names.push(self.ident()?);
            if !self.eat_punct(',') {
                return Ok(names);
            }
        }
    }

    fn number(&mut self) -> Result<i64, FrontendError> {
        let span = self.span();
        let negative = self.eat_punct('-');
        match self.advance() {
            Tok::Num(n) => {
                let value = if negative {
                    0i64.checked_sub_unsigned(n)
                } else {
                    i64::try_from(n).ok()
                };
                value.ok_or_else(|| FrontendError::syntax(span, "integer literal out of range"))
            }
            _ => {
                self.pos -= 1;
                self.error("an integer literal")
            }
        }
    }

    // ---- statements ----

    fn stmt(&mut self) -> Result<Stmt, FrontendError> {
        let span = self.span();
        match self.peek().clone() {
            Tok::Ident(w) if w == "var" => self.var_stmt(span),
            Tok::Ident(w) if w == "return" => {
                self.advance();
                let head = self.stmt_head()?;
                let s = if self.at_punct('(') {
                    let args = self.call_args()?;
                    Stmt::TailCall {
                        func: head,
                        args,
                        span,
                    }
                } else {
                    let value = self.binary_rest(head, 0)?;
                    Stmt::Return { value, span }
                };
                self.expect_punct(';')?;
                Ok(s)
            }
            Tok::Ident(w) if w == "if" => {
                self.advance();
                self.expect_punct('(')?;
                let cond = self.expr()?;
                self.expect_punct(')')?;
                let then_branch = self.block_or_stmt()?;
                self.expect_kw("else")?;
                let else_branch = self.block_or_stmt()?;
                Ok(Stmt::If {
                    cond,
                    then_branch: Box::new(then_branch),
                    else_branch: Box::new(else_branch),
                    span,
                })
            }
            Tok::Ident(w) if w == "proc" => self.proc_stmt(span),
            Tok::Punct('{') => self.block(),
            Tok::Punct('}') | Tok::Eof => Err(FrontendError::syntax(
                span,
                "statement sequence must end with `return`",
            )),
            _ => self.error("a statement"),
        }
    }

    fn var_stmt(&mut self, span: Span) -> Result<Stmt, FrontendError> {
        self.expect_kw("var")?;
        let var = self.ident()?;
        let annot = if self.eat_punct(':') {
            Some(self.ty()?)
        } else {
            None
        };
        self.expect_punct('=')?;
        let head = self.stmt_head()?;
        if self.at_punct('(') {
            if annot.is_some() {
                return Err(FrontendError::syntax(
                    span,
                    "a type annotation is not allowed on a call statement",
                ));
            }
            let args = self.call_args()?;
            self.expect_punct(';')?;
            let rest = self.scoped(std::slice::from_ref(&var), |p| p.stmt())?;
            return Ok(Stmt::LetCall {
                var,
                func: head,
                args,
                rest: Box::new(rest),
                span,
            });
        }
        let rhs = self.binary_rest(head, 0)?;
        self.expect_punct(';')?;
        let rest = self.scoped(std::slice::from_ref(&var), |p| p.stmt())?;
        Ok(Stmt::VarInit {
            var,
            annot,
            rhs,
            rest: Box::new(rest),
            span,
        })
    }

    fn proc_stmt(&mut self, span: Span) -> Result<Stmt, FrontendError> {
        self.expect_kw("proc")?;
        let effect_params = if self.eat_punct('<') {
            let zs = self.ident_list('>')?;
            self.expect_punct('>')?;
            zs
        } else {
            Vec::new()
        };
        let name = self.ident()?;
        let (params, captures) = self.param_list()?;
        self.expect_punct(':')?;
        let ret = self.ty()?;
        let effect = self.opt_effect()?;
        let mut inner = vec![name.clone()];
        inner.extend(effect_params.iter().cloned());
        inner.extend(params.iter().map(|(x, _)| x.clone()));
        inner.extend(captures.iter().cloned());
        let body = self.scoped(&inner, |p| p.block())?;
        let rest = self.scoped(std::slice::from_ref(&name), |p| p.stmt())?;
        Ok(Stmt::Proc(Box::new(ProcDef {
            effect_params,
            name,
            params,
            captures,
            ret,
            effect,
            body,
            rest,
            span,
        })))
    }

    fn block(&mut self) -> Result<Stmt, FrontendError> {
        self.expect_punct('{')?;
        let s = self.stmt()?;
        self.expect_punct('}')?;
        Ok(s)
    }

    fn block_or_stmt(&mut self) -> Result<Stmt, FrontendError> {
        if self.at_punct('{') {
            self.block()
        } else {
            self.stmt()
        }
    }

    fn call_args(&mut self) -> Result<Vec<Expr>, FrontendError> {
        self.expect_punct('(')?;
        let mut args = Vec::new();
        if self.eat_punct(')') {
            return Ok(args);
        }
        loop {
            args.push(self.expr()?);
            if self.eat_punct(')') {
                return Ok(args);
            }
            self.expect_punct(',')?;
        }
    }

    /// `(x:T, ...; y, ...)`
    fn param_list(&mut self) -> Result<ParamList, FrontendError> {
        self.expect_punct('(')?;
        let mut params = Vec::new();
        if !self.at_punct(')') && !self.at_punct(';') {
            loop {
                let x = self.ident()?;
                self.expect_punct(':')?;
                params.push((x, self.ty()?));
                if !self.eat_punct(',') {
                    break;
                }
            }
        }
        let captures = if self.eat_punct(';') {
            self.ident_list(')')?
        } else {
            Vec::new()
        };
        self.expect_punct(')')?;
        Ok((params, captures))
    }

    // ---- effects and types ----

    fn opt_effect(&mut self) -> Result<Effect, FrontendError> {
        if self.at_punct('[') {
            self.effect()
        } else {
            Ok(Effect::empty())
        }
    }

    fn effect(&mut self) -> Result<Effect, FrontendError> {
        self.expect_punct('[')?;
        let mut eff = Effect::empty();
        if self.eat_punct(']') {
            return Ok(eff);
        }
        loop {
            eff.insert(self.atom()?);
            if self.eat_punct(']') {
                return Ok(eff);
            }
            self.expect_punct(',')?;
        }
    }

    fn atom(&mut self) -> Result<EffectAtom, FrontendError> {
        if self.eat_punct('#') {
            let span = self.span();
            let index = match self.advance() {
                Tok::Num(n) => usize::try_from(n)
                    .map_err(|_| FrontendError::syntax(span, "location index out of range"))?,
                _ => {
                    self.pos -= 1;
                    return self.error("a location index");
                }
            };
            self.expect_punct(':')?;
            Ok(EffectAtom::loc(index, self.ty()?))
        } else {
            Ok(EffectAtom::Var(self.ident()?))
        }
    }

    fn ty(&mut self) -> Result<Type, FrontendError> {
        if self.eat_kw("int") {
            return Ok(if self.eat_kw("list") {
                Type::IntList
            } else {
                Type::Int
            });
        }
        if self.eat_kw("top") {
            return Ok(Type::Top);
        }
        if self.eat_punct('<') {
            let vars = self.ident_list('>')?;
            self.expect_punct('>')?;
            if vars.is_empty() {
                return self.error("an effect variable");
            }
            let body = self.ty()?;
            return Ok(vars.into_iter().rev().fold(body, |t, x| Type::eff_all(x, t)));
        }
        if self.eat_punct('(') {
            let t = self.ty()?;
            self.expect_punct(')')?;
            return Ok(t);
        }
        if self.eat_kw("func") {
            self.expect_punct('(')?;
            let mut types = Vec::new();
            let mut effect = None;
            if !self.at_punct(')') {
                loop {
                    if self.at_punct('[') {
                        effect = Some(self.effect()?);
                        break;
                    }
                    types.push(self.ty()?);
                    if !self.eat_punct(',') {
                        break;
                    }
                }
            }
            self.expect_punct(')')?;
            let Some(ret) = types.pop() else {
                return self.error("a return type in `func(...)`");
            };
            return Ok(Type::func(types, ret, effect.unwrap_or_default()));
        }
        self.error("a type")
    }

    // ---- expressions ----

    fn expr(&mut self) -> Result<Expr, FrontendError> {
        if self.eat_kw("let") {
            let x = self.ident()?;
            self.expect_punct('=')?;
            let rhs = self.expr()?;
            self.expect_kw("in")?;
            let body = self.scoped(std::slice::from_ref(&x), |p| p.expr())?;
            return Ok(Expr::let_in(x, rhs, body));
        }
        if self.eat_kw("fix") {
            let x = self.ident()?;
            self.expect_punct(':')?;
            let t = self.ty()?;
            self.expect_punct('.')?;
            let body = self.scoped(std::slice::from_ref(&x), |p| p.expr())?;
            return Ok(Expr::fix(x, t, body));
        }
        if self.at_punct('<') {
            self.advance();
            let vars = self.ident_list('>')?;
            self.expect_punct('>')?;
            if vars.is_empty() {
                return self.error("an effect variable");
            }
            let body = self.scoped(&vars, |p| p.expr())?;
            return Ok(vars.into_iter().rev().fold(body, |e, x| Expr::eff_abs(x, e)));
        }
        let head = self.postfix()?;
        if self.at_punct('(') {
            return Err(FrontendError::syntax(
                self.span(),
                "calls are statements: bind the result with `var` or use `return`",
            ));
        }
        self.binary_rest(head, 0)
    }

    /// A binary expression whose first operand is still to be parsed.
    fn stmt_head(&mut self) -> Result<Expr, FrontendError> {
        if self.at_kw("let") || self.at_kw("fix") || self.at_punct('<') {
            return self.expr();
        }
        self.postfix()
    }

    fn binary_rest(&mut self, mut lhs: Expr, min_prec: u8) -> Result<Expr, FrontendError> {
        loop {
            let (op, prec) = match self.peek() {
                Tok::Punct('+') => (OpName::Add, 1),
                Tok::Punct('-') => (OpName::Sub, 1),
                Tok::Punct('*') => (OpName::Mul, 2),
                _ => return Ok(lhs),
            };
            if prec < min_prec {
                return Ok(lhs);
            }
            self.advance();
            let first = self.postfix()?;
            let rhs = self.binary_rest(first, prec + 1)?;
            lhs = Expr::prim(op, vec![lhs, rhs]);
        }
    }

    fn postfix(&mut self) -> Result<Expr, FrontendError> {
        let mut e = self.primary()?;
        while self.at_punct('<') {
            self.advance();
            loop {
                e = Expr::eff_app(e, self.atom()?);
                if self.eat_punct('>') {
                    break;
                }
                self.expect_punct(',')?;
            }
        }
        Ok(e)
    }

    fn primary(&mut self) -> Result<Expr, FrontendError> {
        match self.peek().clone() {
            Tok::Num(_) => Ok(Expr::Num(self.number()?)),
            Tok::Punct('-') if matches!(self.peek_at(1), Tok::Num(_)) => {
                Ok(Expr::Num(self.number()?))
            }
            Tok::Punct('(') => {
                self.advance();
                let e = self.expr()?;
                self.expect_punct(')')?;
                Ok(e)
            }
            Tok::Punct('#') => match self.atom()? {
                EffectAtom::Loc(i, t) => Ok(Expr::Loc(i, *t)),
                EffectAtom::Var(_) => unreachable!("`#` always introduces a location"),
            },
            Tok::Ident(w) if w == "nil" => {
                self.advance();
                Ok(Expr::nil())
            }
            Tok::Ident(w) if w == "list" => {
                self.advance();
                self.expect_punct('[')?;
                let mut items = Vec::new();
                if !self.eat_punct(']') {
                    loop {
                        items.push(self.number()?);
                        if self.eat_punct(']') {
                            break;
                        }
                        self.expect_punct(',')?;
                    }
                }
                Ok(Expr::List(items))
            }
            Tok::Ident(w) if w == "fun" => self.fun(),
            Tok::Ident(w) if self.primitive_call(&w).is_some() => {
                let op = self.primitive_call(&w).expect("checked by guard");
                self.advance();
                let args = self.call_args()?;
                Ok(Expr::prim(op, args))
            }
            Tok::Ident(_) => Ok(Expr::Var(self.ident()?)),
            _ => self.error("an expression"),
        }
    }

    fn fun(&mut self) -> Result<Expr, FrontendError> {
        self.expect_kw("fun")?;
        let (params, captures) = self.param_list()?;
        let mut ret = None;
        if self.eat_punct(':') {
            ret = Some(self.ty()?);
        }
        let effect = self.opt_effect()?;
        if ret.is_none() && self.eat_punct(':') {
            ret = Some(self.ty()?);
        }
        let mut names: Vec<Name> = params.iter().map(|(x, _)| x.clone()).collect();
        names.extend(captures.iter().cloned());
        let body = self.scoped(&names, |p| p.block())?;
        Ok(Expr::Fun(Box::new(FunExpr {
            params,
            captures,
            effect,
            ret,
            body,
        })))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_return() {
        assert_eq!(parse("return 0;").unwrap(), Program::new(Stmt::ret(Expr::Num(0))));
    }

    #[test]
    fn first_class_function_example_is_a_var_chain() {
        let src = "var x = 1;\n\
                   var addx = fun(z: int)[x]{ return x + z; };\n\
                   var twice = fun(f: func(int,int,[x]), y: int)[x] {\n\
                      var t = f(y); return f(t);\n\
                   };\n\
                   var b = twice(addx, 3);\n\
                   return b;";
        let p = parse(src).unwrap();
        let mut depth = 0;
        let mut s = &p.body;
        while let Stmt::VarInit { rest, .. } | Stmt::LetCall { rest, .. } = s {
            depth += 1;
            s = rest;
        }
        assert_eq!(depth, 4);
        assert!(matches!(s, Stmt::Return { .. }));
    }

    #[test]
    fn effect_list_on_inner_fun() {
        let e = parse_expr("fun(y:int)[f,x]{ var t = f(y); return f(t); }").unwrap();
        let Expr::Fun(f) = e else { panic!() };
        assert_eq!(f.effect, Effect::from_vars(["f", "x"]));
    }

    #[test]
    fn types() {
        assert_eq!(parse_type("int list").unwrap(), Type::IntList);
        assert_eq!(
            parse_type("func(int,int)").unwrap(),
            Type::func(vec![Type::Int], Type::Int, Effect::empty())
        );
        assert_eq!(
            parse_type("<p,q> func(int,[p,q])").unwrap(),
            Type::eff_all(
                "p",
                Type::eff_all("q", Type::func(vec![], Type::Int, Effect::from_vars(["p", "q"])))
            )
        );
    }

    #[test]
    fn effect_application_is_postfix() {
        let p = parse("var b = twice<x>(addx, 3); return b;").unwrap();
        let Stmt::LetCall { func, args, .. } = p.body else { panic!() };
        assert_eq!(func, Expr::eff_app(Expr::var("twice"), EffectAtom::var("x")));
        assert_eq!(args.len(), 2);
    }

    #[test]
    fn arithmetic_precedence() {
        let e = parse_expr("1 + 2 * 3 - 4").unwrap();
        assert_eq!(e.to_string(), "1 + 2 * 3 - 4");
        let Expr::Prim(OpName::Sub, args) = e else { panic!() };
        assert!(matches!(args[0], Expr::Prim(OpName::Add, _)));
    }

    #[test]
    fn negative_literals() {
        assert_eq!(parse_expr("-5").unwrap(), Expr::Num(-5));
        assert_eq!(parse_expr("-9223372036854775808").unwrap(), Expr::Num(i64::MIN));
        assert!(parse_expr("9223372036854775808").is_err());
    }

    #[test]
    fn if_forms() {
        let a = parse("if (x) return 0; else return 1;").unwrap();
        let b = parse("if (x) { return 0; } else { return 1; }").unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn missing_return_is_an_error() {
        let err = parse("var x = 1;").unwrap_err();
        assert!(err.message.contains("return"), "{err}");
    }

    #[test]
    fn keywords_cannot_name_variables() {
        assert!(parse("var in = 1; return 1;").is_err());
        assert!(parse("var fun = 1; return 1;").is_err());
    }

    #[test]
    fn bound_operator_names_are_called_not_applied() {
        let p = parse("return inc(1);").unwrap();
        assert!(matches!(p.body, Stmt::Return { value: Expr::Prim(OpName::Inc, _), .. }));
        let p = parse("proc inc(x:int):int { return x; } var y = inc(1); return y;").unwrap();
        let Stmt::Proc(d) = p.body else { panic!() };
        assert!(matches!(d.rest, Stmt::LetCall { .. }));
        let p = parse("var head = 1; return head;").unwrap();
        assert!(matches!(p.body, Stmt::VarInit { .. }));
    }

    #[test]
    fn calls_are_not_expressions() {
        assert!(parse("return f(1) + 2;").is_err());
        assert!(parse("var x = 1 + f(2); return x;").is_err());
    }

    #[test]
    fn proc_with_captures_and_effect_params() {
        let p = parse("proc <z> g(a:int; f, n):int [s] { return a; } return 0;").unwrap();
        let Stmt::Proc(d) = p.body else { panic!() };
        assert_eq!(d.effect_params, vec!["z"]);
        assert_eq!(d.captures, vec!["f", "n"]);
        assert_eq!(d.effect, Effect::from_vars(["s"]));
    }

    #[test]
    fn return_ascription_either_side_of_effect() {
        let a = parse_expr("fun(x:int):int [y] { return x; }").unwrap();
        let b = parse_expr("fun(x:int)[y]:int { return x; }").unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn diagnostics_carry_positions() {
        let err = parse("var x = 1;\nreturn ;").unwrap_err();
        assert_eq!((err.span.line, err.span.col), (2, 8));
    }
}
