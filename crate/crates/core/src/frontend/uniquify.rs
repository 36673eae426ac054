//! Gives every binder a globally fresh name `base$k`.
//!
//! The counter is global and advances in pre-order, so the output is a
//! deterministic function of the input. Effect-abstraction binders inside
//! types are renamed too.

use std::collections::BTreeMap;

use super::FrontendError;
use crate::ast::{Effect, EffectAtom, Expr, FunExpr, Name, Program, Span, Stmt, Type};

/// Unique name → (name as written, span of the declaring statement).
pub type NameTable = BTreeMap<Name, (Name, Span)>;

pub fn uniquify(p: &Program) -> Result<(Program, NameTable), FrontendError> {
    let mut u = Uniquify::default();
    let body = u.stmt(&p.body)?;
    Ok((Program::new(body), u.table))
}

/// Strips a `$k` suffix.
pub fn base_name(x: &str) -> &str {
    x.split('$').next().unwrap_or(x)
}

#[derive(Default)]
struct Uniquify {
    counter: usize,
    scope: Vec<(Name, Name)>,
    table: NameTable,
    span: Span,
}

impl Uniquify {
    fn fresh(&mut self, x: &str) -> Name {
        self.counter += 1;
        let fresh = format!("{}${}", base_name(x), self.counter);
        self.table.insert(fresh.clone(), (x.to_string(), self.span));
        fresh
    }

    fn resolve(&self, x: &str) -> Result<Name, FrontendError> {
        self.scope
            .iter()
            .rev()
            .find(|(orig, _)| orig == x)
            .map(|(_, new)| new.clone())
            .ok_or_else(|| FrontendError::unbound(self.span, format!("unbound variable `{x}`")))
    }

    fn with<R>(&mut self, binds: Vec<(Name, Name)>, f: impl FnOnce(&mut Self) -> R) -> R {
        let n = self.scope.len();
        self.scope.extend(binds);
        let r = f(self);
        self.scope.truncate(n);
        r
    }

    fn atom(&self, a: &EffectAtom) -> Result<EffectAtom, FrontendError> {
        Ok(match a {
            EffectAtom::Var(x) => EffectAtom::Var(self.resolve(x)?),
            // Location annotations are closed and left as written.
            EffectAtom::Loc(..) => a.clone(),
        })
    }

    fn effect(&self, e: &Effect) -> Result<Effect, FrontendError> {
        e.iter().map(|a| self.atom(a)).collect()
    }


    fn ty(&mut self, t: &Type) -> Result<Type, FrontendError> {
        Ok(match t {
            Type::Top | Type::Int | Type::IntList => t.clone(),
            Type::Func {
                params,
                ret,
                effect,
            } => {
                let params = params.iter().map(|p| self.ty(p)).collect::<Result<_, _>>()?;
                let ret = self.ty(ret)?;
                Type::func(params, ret, self.effect(effect)?)
            }
            Type::EffAll(x, body) => {
                let fresh = self.fresh(x);
                let body = self.with(vec![(x.clone(), fresh.clone())], |u| u.ty(body))?;
                Type::eff_all(fresh, body)
            }
        })
    }

    fn exprs(&mut self, es: &[Expr]) -> Result<Vec<Expr>, FrontendError> {
        es.iter().map(|e| self.expr(e)).collect()
    }

    fn expr(&mut self, e: &Expr) -> Result<Expr, FrontendError> {
        Ok(match e {
            Expr::Var(x) => Expr::Var(self.resolve(x)?),
            Expr::Loc(..) | Expr::Num(_) | Expr::List(_) => e.clone(),
            Expr::Prim(op, args) => Expr::Prim(*op, self.exprs(args)?),
            Expr::Fun(f) => {
                let params_in: Vec<(Name, Type)> = f
                    .params
                    .iter()
                    .map(|(x, t)| Ok((x.clone(), self.ty(t)?)))
                    .collect::<Result<_, FrontendError>>()?;
                let effect = self.effect(&f.effect)?;
                let ret = f.ret.as_ref().map(|t| self.ty(t)).transpose()?;
                let mut binds = Vec::new();
                let mut params = Vec::new();
                for (x, t) in params_in {
                    let fresh = self.fresh(&x);
                    binds.push((x, fresh.clone()));
                    params.push((fresh, t));
                }
                for c in &f.captures {
                    let fresh = self.fresh(c);
                    binds.push((c.clone(), fresh));
                }
                let captures: Vec<Name> = binds[params.len()..].iter().map(|b| b.1.clone()).collect();
                let span = self.span;
                let body = self.with(binds, |u| u.stmt(&f.body))?;
                self.span = span;
                Expr::Fun(Box::new(FunExpr {
                    params,
                    captures,
                    effect,
                    ret,
                    body,
                }))
            }
            Expr::EffAbs(x, body) => {
                let fresh = self.fresh(x);
                let body = self.with(vec![(x.clone(), fresh.clone())], |u| u.expr(body))?;
                Expr::eff_abs(fresh, body)
            }
            Expr::EffApp(head, atom) => Expr::eff_app(self.expr(head)?, self.atom(atom)?),
            Expr::Let(x, rhs, body) => {
                let fresh = self.fresh(x);
                let rhs = self.expr(rhs)?;
                let body = self.with(vec![(x.clone(), fresh.clone())], |u| u.expr(body))?;
                Expr::let_in(fresh, rhs, body)
            }
            Expr::Fix(x, t, body) => {
                let fresh = self.fresh(x);
                let t = self.ty(t)?;
                let body = self.with(vec![(x.clone(), fresh.clone())], |u| u.expr(body))?;
                Expr::fix(fresh, t, body)
            }
        })
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
            } => {
                let fresh = self.fresh(var);
                let annot = annot.as_ref().map(|t| self.ty(t)).transpose()?;
                let rhs = self.expr(rhs)?;
                let rest = self.with(vec![(var.clone(), fresh.clone())], |u| u.stmt(rest))?;
                Stmt::VarInit {
                    var: fresh,
                    annot,
                    rhs,
                    rest: Box::new(rest),
                    span: *span,
                }
            }
            Stmt::LetCall {
                var,
                func,
                args,
                rest,
                span,
            } => {
                let fresh = self.fresh(var);
                let func = self.expr(func)?;
                let args = self.exprs(args)?;
                let rest = self.with(vec![(var.clone(), fresh.clone())], |u| u.stmt(rest))?;
                Stmt::LetCall {
                    var: fresh,
                    func,
                    args,
                    rest: Box::new(rest),
                    span: *span,
                }
            }
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
            Stmt::Proc(_) => {
                return Err(FrontendError::syntax(
                    self.span,
                    "internal: `proc` must be desugared before renaming",
                ))
            }
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frontend::{desugar::desugar, parser::parse};

    fn uq(src: &str) -> Result<String, FrontendError> {
        let p = desugar(&parse(src).unwrap())?;
        Ok(uniquify(&p)?.0.to_string())
    }

    #[test]
    fn shadowed_parameter_is_distinguished_from_global() {
        let out = uq("var x = 1;\n\
                      proc f(a: int):int [x]{ return a + x; }\n\
                      proc g(x: int):int [x, f]{ return f(x); }\n\
                      var y = g(2);\n\
                      return y;")
        .unwrap();
        assert!(out.starts_with("var x$1 = 1;"), "{out}");
        // g's parameter is renamed apart from the global that its effect names.
        assert!(out.contains("fun(x$7:int)[f$2,x$1] { return f$2(x$7); }"), "{out}");
    }

    #[test]
    fn no_shadowing_changes_only_suffixes() {
        let out = uq("var a = 1; var b = a + 1; return b;").unwrap();
        assert_eq!(out, "var a$1 = 1; var b$2 = a$1 + 1; return b$2;");
    }

    #[test]
    fn unbound_reference_names_the_variable() {
        let err = uq("return y;").unwrap_err();
        assert!(err.message.contains("`y`"));
        assert_eq!(err.kind, crate::frontend::FrontendErrorKind::UnboundVar);
    }

    #[test]
    fn idempotent_up_to_suffixes() {
        let src = "var x = 1; var f = fun(y:int)[x]{ var x = y; return x; }; return 0;";
        let once = uniquify(&desugar(&parse(src).unwrap()).unwrap()).unwrap().0;
        let twice = uniquify(&once).unwrap().0;
        assert_eq!(once, twice);
    }

    #[test]
    fn name_table_records_originals() {
        let p = desugar(&parse("var x = 1;\nreturn x;").unwrap()).unwrap();
        let (_, table) = uniquify(&p).unwrap();
        assert_eq!(table["x$1"].0, "x");
        assert_eq!(table["x$1"].1.line, 1);
    }
}
