//! Removes `proc` definitions and capture lists.
//!
//! `proc <z..> f(x:T..; y..):R [φ] { s1 } s2` becomes
//! `var f = (let y = y in .. fix f: <z..> func(T..,R,φ). <z..> fun(x:T..)[φ]{ s1 }); s2`,
//! and `fun(x:T..; y..)[φ]{s}` becomes `let y = y in .. fun(x:T..)[φ]{s}`.
//! Capture lets are hoisted above any effect abstractions and `fix`
//! binders wrapping the function, since those forms only admit
//! abstractions as bodies.

use super::FrontendError;
use crate::ast::{Expr, FunExpr, Name, Program, Span, Stmt, Type};

pub fn desugar(p: &Program) -> Result<Program, FrontendError> {
    let mut d = Desugar {
        scope: Vec::new(),
        span: Span::default(),
    };
    Ok(Program::new(d.stmt(&p.body)?))
}

struct Desugar {
    scope: Vec<Name>,
    span: Span,
}

impl Desugar {
    fn scoped<R>(&mut self, names: &[Name], f: impl FnOnce(&mut Self) -> R) -> R {
        let n = self.scope.len();
        self.scope.extend(names.iter().cloned());
        let r = f(self);
        self.scope.truncate(n);
        r
    }

    fn check_captures(&self, captures: &[Name]) -> Result<(), FrontendError> {
        for c in captures {
            if !self.scope.contains(c) {
                return Err(FrontendError::unbound(
                    self.span,
                    format!("captured variable `{c}` is not bound"),
                ));
            }
        }
        Ok(())
    }

    fn stmt(&mut self, s: &Stmt) -> Result<Stmt, FrontendError> {
        self.span = s.span();
        Ok(match s {
            Stmt::VarInit {
                var,
                annot,
                rhs,
                rest,
                span,
            } => Stmt::VarInit {
                var: var.clone(),
                annot: annot.clone(),
                rhs: self.expr(rhs)?,
                rest: Box::new(self.scoped(std::slice::from_ref(var), |d| d.stmt(rest))?),
                span: *span,
            },
            Stmt::LetCall {
                var,
                func,
                args,
                rest,
                span,
            } => Stmt::LetCall {
                var: var.clone(),
                func: self.expr(func)?,
                args: self.exprs(args)?,
                rest: Box::new(self.scoped(std::slice::from_ref(var), |d| d.stmt(rest))?),
                span: *span,
            },
            Stmt::TailCall { func, args, span } => Stmt::TailCall {
                func: self.expr(func)?,
                args: self.exprs(args)?,
                span: *span,
            },
            Stmt::Return { value, span } => Stmt::Return {
                value: self.expr(value)?,
                span: *span,
            },
            Stmt::If {
                cond,
                then_branch,
                else_branch,
                span,
            } => Stmt::If {
                cond: self.expr(cond)?,
                then_branch: Box::new(self.stmt(then_branch)?),
                else_branch: Box::new(self.stmt(else_branch)?),
                span: *span,
            },
            Stmt::Proc(p) => {
                let fun_ty = p.effect_params.iter().rev().fold(
                    Type::func(
                        p.params.iter().map(|(_, t)| t.clone()).collect(),
                        p.ret.clone(),
                        p.effect.clone(),
                    ),
                    |t, z| Type::eff_all(z.clone(), t),
                );
                let fun = Expr::Fun(Box::new(FunExpr {
                    params: p.params.clone(),
                    captures: p.captures.clone(),
                    effect: p.effect.clone(),
                    ret: None,
                    body: p.body.clone(),
                }));
                let abs = p
                    .effect_params
                    .iter()
                    .rev()
                    .fold(fun, |e, z| Expr::eff_abs(z.clone(), e));
                let rhs = self.expr(&Expr::fix(p.name.clone(), fun_ty, abs))?;
                self.span = p.span;
                Stmt::VarInit {
                    var: p.name.clone(),
                    annot: None,
                    rhs,
                    rest: Box::new(self.scoped(std::slice::from_ref(&p.name), |d| d.stmt(&p.rest))?),
                    span: p.span,
                }
            }
        })
    }

    fn exprs(&mut self, es: &[Expr]) -> Result<Vec<Expr>, FrontendError> {
        es.iter().map(|e| self.expr(e)).collect()
    }

    fn expr(&mut self, e: &Expr) -> Result<Expr, FrontendError> {
        Ok(match e {
            Expr::Var(_) | Expr::Loc(..) | Expr::Num(_) | Expr::List(_) => e.clone(),
            Expr::Prim(op, args) => Expr::Prim(*op, self.exprs(args)?),
            Expr::Fun(_) | Expr::EffAbs(..) | Expr::Fix(..) => {
                let (captures, core) = self.abstraction(e)?;
                self.check_captures(&captures)?;
                captures
                    .into_iter()
                    .rev()
                    .fold(core, |body, y| Expr::let_in(y.clone(), Expr::Var(y), body))
            }
            Expr::EffApp(head, atom) => Expr::eff_app(self.expr(head)?, atom.clone()),
            Expr::Let(x, rhs, body) => {
                let rhs = self.expr(rhs)?;
                let body = self.scoped(std::slice::from_ref(x), |d| d.expr(body))?;
                Expr::let_in(x.clone(), rhs, body)
            }
        })
    }

    /// Desugars an abstraction chain, returning the captures that must be
    /// let-bound around it.
    fn abstraction(&mut self, e: &Expr) -> Result<(Vec<Name>, Expr), FrontendError> {
        match e {
            Expr::Fun(f) => {
                let mut names: Vec<Name> = f.params.iter().map(|(x, _)| x.clone()).collect();
                names.extend(f.captures.iter().cloned());
                let span = self.span;
                let body = self.scoped(&names, |d| d.stmt(&f.body))?;
                self.span = span;
                Ok((
                    f.captures.clone(),
                    Expr::Fun(Box::new(FunExpr {
                        params: f.params.clone(),
                        captures: Vec::new(),
                        effect: f.effect.clone(),
                        ret: f.ret.clone(),
                        body,
                    })),
                ))
            }
            Expr::EffAbs(z, body) => {
                let (caps, core) = self.scoped(std::slice::from_ref(z), |d| d.abstraction(body))?;
                Ok((caps, Expr::eff_abs(z.clone(), core)))
            }
            Expr::Fix(f, t, body) => {
                let (mut caps, core) = self.scoped(std::slice::from_ref(f), |d| d.abstraction(body))?;
                // The fix binder is already a copy; capturing it is a no-op.
                caps.retain(|c| c != f);
                Ok((caps, Expr::fix(f.clone(), t.clone(), core)))
            }
            other => Ok((Vec::new(), self.expr(other)?)),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frontend::parser::parse;

    fn ds(src: &str) -> String {
        desugar(&parse(src).unwrap()).unwrap().to_string()
    }

    #[test]
    fn proc_without_captures_or_binders() {
        assert_eq!(
            ds("proc inc(x:int):int { return x + 1; } return 0;"),
            "var inc = fix inc: func(int,int,[]). fun(x:int)[] { return x + 1; }; return 0;"
        );
    }

    #[test]
    fn capture_list_becomes_let() {
        assert_eq!(
            ds("var f = 1; return fun(y:int; f)[x]{ return y; };"),
            "var f = 1; return let f = f in fun(y:int)[x] { return y; };"
        );
    }

    #[test]
    fn proc_with_captures() {
        let out = ds("var f = 1; var n = 2; proc g(; f, n):int [s] { return n; } return 0;");
        assert_eq!(
            out,
            "var f = 1; var n = 2; var g = let f = f in let n = n in \
             fix g: func(int,[s]). fun()[s] { return n; }; return 0;"
        );
    }

    #[test]
    fn captures_hoist_over_effect_abstraction() {
        let out = ds("var f = 1; var h = <p> fun(y:int; f)[p]{ return y; }; return 0;");
        assert_eq!(
            out,
            "var f = 1; var h = let f = f in <p> fun(y:int)[p] { return y; }; return 0;"
        );
    }

    #[test]
    fn effect_params_nest() {
        let out = ds("proc <p,q> h(a:int):int [p,q] { return a; } return 0;");
        assert!(
            out.starts_with("var h = fix h: <p> <q> func(int,int,[p,q]). <p> <q> fun(a:int)[p,q]"),
            "{out}"
        );
    }

    #[test]
    fn capture_of_unbound_name() {
        let p = parse("return fun(y:int; nope){ return y; };").unwrap();
        let err = desugar(&p).unwrap_err();
        assert!(err.message.contains("nope"));
    }
}
