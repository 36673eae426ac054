//! Canonical text rendering. The output parses back to the same term.
//!
//! `{}` renders everything on one line (used by traces); `{:#}` breaks
//! statements onto separate lines with indentation.

use std::fmt::{self, Display, Formatter, Write};

use crate::ast::{Effect, EffectAtom, Expr, FunExpr, OpName, Program, Stmt, Type};

impl Display for EffectAtom {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        match self {
            EffectAtom::Var(x) => f.write_str(x),
            EffectAtom::Loc(i, t) => write!(f, "#{i}:{t}"),
        }
    }
}

impl Display for Effect {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        f.write_char('[')?;
        for (i, atom) in self.iter().enumerate() {
            if i > 0 {
                f.write_char(',')?;
            }
            write!(f, "{atom}")?;
        }
        f.write_char(']')
    }
}

impl Display for Type {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        match self {
            Type::Top => f.write_str("top"),
            Type::Int => f.write_str("int"),
            Type::IntList => f.write_str("int list"),
            Type::Func {
                params,
                ret,
                effect,
            } => {
                f.write_str("func(")?;
                for p in params {
                    write!(f, "{p},")?;
                }
                write!(f, "{ret},{effect})")
            }
            Type::EffAll(x, body) => write!(f, "<{x}> {body}"),
        }
    }
}

impl Display for Expr {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        Printer::new(f).expr(self, 0)
    }
}

impl Display for Stmt {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        Printer::new(f).stmt(self)
    }
}

impl Display for Program {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        self.body.fmt(f)
    }
}

struct Printer<'a, 'b> {
    f: &'a mut Formatter<'b>,
    multiline: bool,
    indent: usize,
}

const PREC_LOW: u8 = 0;
const PREC_ADD: u8 = 1;
const PREC_MUL: u8 = 2;
const PREC_ATOM: u8 = 3;

fn prec(e: &Expr) -> u8 {
    match e {
        Expr::Let(..) | Expr::Fix(..) | Expr::EffAbs(..) => PREC_LOW,
        Expr::Prim(OpName::Add | OpName::Sub, args) if args.len() == 2 => PREC_ADD,
        Expr::Prim(OpName::Mul, args) if args.len() == 2 => PREC_MUL,
        _ => PREC_ATOM,
    }
}

impl<'a, 'b> Printer<'a, 'b> {
    fn new(f: &'a mut Formatter<'b>) -> Self {
        let multiline = f.alternate();
        Printer {
            f,
            multiline,
            indent: 0,
        }
    }

    fn newline(&mut self) -> fmt::Result {
        if self.multiline {
            self.f.write_char('\n')?;
            for _ in 0..self.indent {
                self.f.write_str("  ")?;
            }
            Ok(())
        } else {
            self.f.write_char(' ')
        }
    }

    fn expr(&mut self, e: &Expr, min_prec: u8) -> fmt::Result {
        if prec(e) < min_prec {
            self.f.write_char('(')?;
            self.expr(e, 0)?;
            return self.f.write_char(')');
        }
        match e {
            Expr::Var(x) => self.f.write_str(x),
            Expr::Loc(i, t) => write!(self.f, "#{i}:{t}"),
            Expr::Num(n) => write!(self.f, "{n}"),
            Expr::List(items) if items.is_empty() => self.f.write_str("nil"),
            Expr::List(items) => {
                self.f.write_str("list[")?;
                for (i, n) in items.iter().enumerate() {
                    if i > 0 {
                        self.f.write_char(',')?;
                    }
                    write!(self.f, "{n}")?;
                }
                self.f.write_char(']')
            }
            Expr::Prim(op, args) if op.is_infix() && args.len() == 2 => {
                let p = prec(e);
                self.expr(&args[0], p)?;
                write!(self.f, " {} ", op.symbol())?;
                self.expr(&args[1], p + 1)
            }
            Expr::Prim(op, args) => {
                self.f.write_str(op.symbol())?;
                self.args(args)
            }
            Expr::Fun(fun) => self.fun(fun),
            Expr::EffAbs(x, body) => {
                write!(self.f, "<{x}> ")?;
                self.expr(body, 0)
            }
            Expr::EffApp(head, atom) => {
                self.expr(head, PREC_ATOM)?;
                write!(self.f, "<{atom}>")
            }
            Expr::Let(x, rhs, body) => {
                write!(self.f, "let {x} = ")?;
                self.expr(rhs, 0)?;
                self.f.write_str(" in ")?;
                self.expr(body, 0)
            }
            Expr::Fix(x, t, body) => {
                write!(self.f, "fix {x}: {t}. ")?;
                self.expr(body, 0)
            }
        }
    }

    fn args(&mut self, args: &[Expr]) -> fmt::Result {
        self.f.write_char('(')?;
        for (i, a) in args.iter().enumerate() {
            if i > 0 {
                self.f.write_str(", ")?;
            }
            self.expr(a, 0)?;
        }
        self.f.write_char(')')
    }

    fn params(&mut self, params: &[(String, Type)], captures: &[String]) -> fmt::Result {
        self.f.write_char('(')?;
        for (i, (x, t)) in params.iter().enumerate() {
            if i > 0 {
                self.f.write_str(", ")?;
            }
            write!(self.f, "{x}:{t}")?;
        }
        if !captures.is_empty() {
            self.f.write_str("; ")?;
            self.f.write_str(&captures.join(", "))?;
        }
        self.f.write_char(')')
    }

    fn block(&mut self, s: &Stmt) -> fmt::Result {
        self.f.write_char('{')?;
        self.indent += 1;
        self.newline()?;
        self.stmt(s)?;
        self.indent -= 1;
        self.newline()?;
        self.f.write_char('}')
    }

    fn fun(&mut self, fun: &FunExpr) -> fmt::Result {
        self.f.write_str("fun")?;
        self.params(&fun.params, &fun.captures)?;
        if let Some(t) = &fun.ret {
            write!(self.f, ":{t}")?;
        }
        write!(self.f, "{} ", fun.effect)?;
        self.block(&fun.body)
    }

    fn call(&mut self, head: &Expr, args: &[Expr]) -> fmt::Result {
        self.expr(head, PREC_ATOM)?;
        self.args(args)
    }

    fn stmt(&mut self, s: &Stmt) -> fmt::Result {
        match s {
            Stmt::VarInit {
                var,
                annot,
                rhs,
                rest,
                ..
            } => {
                write!(self.f, "var {var}")?;
                if let Some(t) = annot {
                    write!(self.f, ":{t}")?;
                }
                self.f.write_str(" = ")?;
                self.expr(rhs, 0)?;
                self.f.write_char(';')?;
                self.newline()?;
                self.stmt(rest)
            }
            Stmt::LetCall {
                var,
                func,
                args,
                rest,
                ..
            } => {
                write!(self.f, "var {var} = ")?;
                self.call(func, args)?;
                self.f.write_char(';')?;
                self.newline()?;
                self.stmt(rest)
            }
            Stmt::TailCall { func, args, .. } => {
                self.f.write_str("return ")?;
                self.call(func, args)?;
                self.f.write_char(';')
            }
            Stmt::Return { value, .. } => {
                self.f.write_str("return ")?;
                self.expr(value, 0)?;
                self.f.write_char(';')
            }
            Stmt::If {
                cond,
                then_branch,
                else_branch,
                ..
            } => {
                self.f.write_str("if (")?;
                self.expr(cond, 0)?;
                self.f.write_str(") ")?;
                self.block(then_branch)?;
                self.f.write_str(" else ")?;
                self.block(else_branch)
            }
            Stmt::Proc(p) => {
                self.f.write_str("proc ")?;
                if !p.effect_params.is_empty() {
                    write!(self.f, "<{}> ", p.effect_params.join(","))?;
                }
                self.f.write_str(&p.name)?;
                self.params(&p.params, &p.captures)?;
                write!(self.f, ":{} {} ", p.ret, p.effect)?;
                self.block(&p.body)?;
                self.newline()?;
                self.stmt(&p.rest)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn function_type_rendering() {
        let t = Type::func(vec![Type::Int], Type::Int, Effect::from_vars(["x"]));
        assert_eq!(t.to_string(), "func(int,int,[x])");
    }

    #[test]
    fn effects_render_sorted() {
        assert_eq!(Effect::from_vars(["y", "x"]).to_string(), "[x,y]");
        let mixed: Effect = [
            EffectAtom::loc(1, Type::Int),
            EffectAtom::var("z"),
            EffectAtom::loc(0, Type::Int),
        ]
        .into_iter()
        .collect();
        assert_eq!(mixed.to_string(), "[z,#0:int,#1:int]");
    }

    #[test]
    fn location_rendering() {
        assert_eq!(Expr::Loc(3, Type::Int).to_string(), "#3:int");
    }

    #[test]
    fn infix_parenthesization() {
        let sub = |a, b| Expr::prim(OpName::Sub, vec![a, b]);
        let e = sub(Expr::Num(1), sub(Expr::Num(2), Expr::Num(3)));
        assert_eq!(e.to_string(), "1 - (2 - 3)");
        let e = Expr::prim(
            OpName::Mul,
            vec![Expr::prim(OpName::Add, vec![Expr::var("a"), Expr::var("b")]), Expr::Num(2)],
        );
        assert_eq!(e.to_string(), "(a + b) * 2");
    }

    #[test]
    fn multiline_statements() {
        let s = Stmt::var_init("x", Expr::Num(1), Stmt::ret(Expr::var("x")));
        assert_eq!(s.to_string(), "var x = 1; return x;");
        assert_eq!(format!("{s:#}"), "var x = 1;\nreturn x;");
    }
}
