//! Substitution of closed expressions and of effect atoms (stack locations or
//! variables) for variables.
//!
//! Term substitution `[x := e]` only touches term positions: a let- or
//! fix-bound variable never occurs in an effect. Atom substitution
//! `[x := l]` descends everywhere, including into effects inside types.

use crate::ast::{fv_type, Effect, EffectAtom, Expr, FunExpr, Name, ProcDef, Stmt, Type};

#[derive(Clone, Copy)]
enum Subst<'a> {
    Term(&'a str, &'a Expr),
    Atom(&'a str, &'a EffectAtom),
}

impl Subst<'_> {
    fn target(&self) -> &str {
        match self {
            Subst::Term(x, _) | Subst::Atom(x, _) => x,
        }
    }

    fn shadowed_by(&self, binder: &str) -> bool {
        self.target() == binder
    }
}

/// `[x := replacement] target`. The replacement must be closed.
pub fn subst_expr(x: &str, replacement: &Expr, target: &Expr) -> Expr {
    expr(Subst::Term(x, replacement), target)
}

pub fn subst_expr_stmt(x: &str, replacement: &Expr, target: &Stmt) -> Stmt {
    stmt(Subst::Term(x, replacement), target)
}

/// `[x := atom] t` on types.
pub fn subst_atom_type(x: &str, atom: &EffectAtom, t: &Type) -> Type {
    ty(Subst::Atom(x, atom), t)
}

pub fn subst_atom_effect(x: &str, atom: &EffectAtom, eff: &Effect) -> Effect {
    effect(Subst::Atom(x, atom), eff)
}

pub fn subst_atom_expr(x: &str, atom: &EffectAtom, e: &Expr) -> Expr {
    expr(Subst::Atom(x, atom), e)
}

pub fn subst_atom_stmt(x: &str, atom: &EffectAtom, s: &Stmt) -> Stmt {
    stmt(Subst::Atom(x, atom), s)
}

fn effect(sub: Subst<'_>, eff: &Effect) -> Effect {
    match sub {
        Subst::Term(..) => eff.clone(),
        Subst::Atom(x, atom) => eff
            .iter()
            .map(|a| match a {
                EffectAtom::Var(y) if y == x => atom.clone(),
                EffectAtom::Var(_) => a.clone(),
                EffectAtom::Loc(i, t) => EffectAtom::Loc(*i, Box::new(ty(sub, t))),
            })
            .collect(),
    }
}

fn ty(sub: Subst<'_>, t: &Type) -> Type {
    if let Subst::Term(..) = sub {
        return t.clone();
    }
    match t {
        Type::Top | Type::Int | Type::IntList => t.clone(),
        Type::Func {
            params,
            ret,
            effect: eff,
        } => Type::Func {
            params: params.iter().map(|p| ty(sub, p)).collect(),
            ret: Box::new(ty(sub, ret)),
            effect: effect(sub, eff),
        },
        Type::EffAll(p, body) => {
            if sub.shadowed_by(p) {
                return t.clone();
            }
            if let Subst::Atom(x, EffectAtom::Var(y)) = sub {
                if y == p && fv_type(body).contains_var(x) {
                    let fresh = fresh_binder(p, body);
                    let renamed = subst_atom_type(p, &EffectAtom::Var(fresh.clone()), body);
                    return Type::EffAll(fresh, Box::new(ty(sub, &renamed)));
                }
            }
            Type::EffAll(p.clone(), Box::new(ty(sub, body)))
        }
    }
}

fn fresh_binder(base: &str, body: &Type) -> Name {
    let fv = fv_type(body);
    let mut candidate = format!("{base}'");
    while fv.contains_var(&candidate) {
        candidate.push('\'');
    }
    candidate
}

fn opt_ty(sub: Subst<'_>, t: &Option<Type>) -> Option<Type> {
    t.as_ref().map(|t| ty(sub, t))
}

fn expr(sub: Subst<'_>, e: &Expr) -> Expr {
    match e {
        Expr::Var(y) => {
            if y == sub.target() {
                match sub {
                    Subst::Term(_, repl) => repl.clone(),
                    Subst::Atom(_, EffectAtom::Loc(i, t)) => Expr::Loc(*i, (**t).clone()),
                    Subst::Atom(_, EffectAtom::Var(z)) => Expr::Var(z.clone()),
                }
            } else {
                e.clone()
            }
        }
        Expr::Loc(i, t) => Expr::Loc(*i, ty(sub, t)),
        Expr::Num(_) | Expr::List(_) => e.clone(),
        Expr::Prim(op, args) => Expr::Prim(*op, args.iter().map(|a| expr(sub, a)).collect()),
        Expr::Fun(f) => Expr::Fun(Box::new(fun(sub, f))),
        Expr::EffAbs(p, body) => {
            if sub.shadowed_by(p) {
                e.clone()
            } else {
                Expr::EffAbs(p.clone(), Box::new(expr(sub, body)))
            }
        }
        Expr::EffApp(f, atom) => {
            let atom = match sub {
                Subst::Atom(..) => effect(sub, &Effect::singleton(atom.clone()))
                    .into_iter()
                    .next()
                    .expect("singleton effect"),
                Subst::Term(..) => atom.clone(),
            };
            Expr::EffApp(Box::new(expr(sub, f)), atom)
        }
        Expr::Let(x, rhs, body) => {
            let rhs = expr(sub, rhs);
            let body = if sub.shadowed_by(x) {
                (**body).clone()
            } else {
                expr(sub, body)
            };
            Expr::Let(x.clone(), Box::new(rhs), Box::new(body))
        }
        Expr::Fix(x, t, body) => {
            let t = ty(sub, t);
            let body = if sub.shadowed_by(x) {
                (**body).clone()
            } else {
                expr(sub, body)
            };
            Expr::Fix(x.clone(), t, Box::new(body))
        }
    }
}

fn fun(sub: Subst<'_>, f: &FunExpr) -> FunExpr {
    let shadowed = f
        .params
        .iter()
        .map(|(x, _)| x)
        .chain(f.captures.iter())
        .any(|x| sub.shadowed_by(x));
    let captures = match sub {
        Subst::Atom(x, EffectAtom::Var(y)) => f
            .captures
            .iter()
            .map(|c| if c == x { y.clone() } else { c.clone() })
            .collect(),
        _ => f.captures.clone(),
    };
    FunExpr {
        params: f
            .params
            .iter()
            .map(|(x, t)| (x.clone(), ty(sub, t)))
            .collect(),
        captures,
        effect: effect(sub, &f.effect),
        ret: opt_ty(sub, &f.ret),
        body: if shadowed {
            f.body.clone()
        } else {
            stmt(sub, &f.body)
        },
    }
}

fn under(sub: Subst<'_>, binder: &str, s: &Stmt) -> Stmt {
    if sub.shadowed_by(binder) {
        s.clone()
    } else {
        stmt(sub, s)
    }
}

fn stmt(sub: Subst<'_>, s: &Stmt) -> Stmt {
    match s {
        Stmt::VarInit {
            var,
            annot,
            rhs,
            rest,
            span,
        } => Stmt::VarInit {
            var: var.clone(),
            annot: opt_ty(sub, annot),
            rhs: expr(sub, rhs),
            rest: Box::new(under(sub, var, rest)),
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
            func: expr(sub, func),
            args: args.iter().map(|a| expr(sub, a)).collect(),
            rest: Box::new(under(sub, var, rest)),
            span: *span,
        },
        Stmt::TailCall { func, args, span } => Stmt::TailCall {
            func: expr(sub, func),
            args: args.iter().map(|a| expr(sub, a)).collect(),
            span: *span,
        },
        Stmt::Return { value, span } => Stmt::Return {
            value: expr(sub, value),
            span: *span,
        },
        Stmt::If {
            cond,
            then_branch,
            else_branch,
            span,
        } => Stmt::If {
            cond: expr(sub, cond),
            then_branch: Box::new(stmt(sub, then_branch)),
            else_branch: Box::new(stmt(sub, else_branch)),
            span: *span,
        },
        Stmt::Proc(p) => {
            if sub.shadowed_by(&p.name) {
                return s.clone();
            }
            let in_sig = !p.effect_params.iter().any(|z| sub.shadowed_by(z));
            let in_body = in_sig
                && !p
                    .params
                    .iter()
                    .map(|(x, _)| x)
                    .chain(p.captures.iter())
                    .any(|x| sub.shadowed_by(x));
            let sig_ty = |t: &Type| if in_sig { ty(sub, t) } else { t.clone() };
            Stmt::Proc(Box::new(ProcDef {
                effect_params: p.effect_params.clone(),
                name: p.name.clone(),
                params: p.params.iter().map(|(x, t)| (x.clone(), sig_ty(t))).collect(),
                captures: p.captures.clone(),
                ret: sig_ty(&p.ret),
                effect: if in_sig {
                    effect(sub, &p.effect)
                } else {
                    p.effect.clone()
                },
                body: if in_body {
                    stmt(sub, &p.body)
                } else {
                    p.body.clone()
                },
                rest: stmt(sub, &p.rest),
                span: p.span,
            }))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ast::OpName;

    fn add(a: Expr, b: Expr) -> Expr {
        Expr::prim(OpName::Add, vec![a, b])
    }

    #[test]
    fn term_substitution_replaces_free_occurrences() {
        let e = add(Expr::var("x"), Expr::Num(1));
        assert_eq!(
            subst_expr("x", &Expr::Num(3), &e),
            add(Expr::Num(3), Expr::Num(1))
        );
    }

    #[test]
    fn term_substitution_stops_at_shadowing_binder() {
        let inner = Expr::fun(
            vec![("x".into(), Type::Int)],
            Effect::empty(),
            None,
            Stmt::ret(Expr::var("x")),
        );
        assert_eq!(subst_expr("x", &Expr::Num(3), &inner), inner);
    }

    #[test]
    fn let_step_copies_function_into_body() {
        // let g = addx in fun(y:int)[x]{ var t = g(y); return g(t); }
        let addx = Expr::fun(
            vec![("z".into(), Type::Int)],
            Effect::from_vars(["x"]),
            None,
            Stmt::ret(add(Expr::var("x"), Expr::var("z"))),
        );
        let body = |g: Expr| {
            Expr::fun(
                vec![("y".into(), Type::Int)],
                Effect::from_vars(["x"]),
                None,
                Stmt::let_call(
                    "t",
                    g.clone(),
                    vec![Expr::var("y")],
                    Stmt::tail_call(g, vec![Expr::var("t")]),
                ),
            )
        };
        let out = subst_expr("g", &addx, &body(Expr::var("g")));
        assert_eq!(out, body(addx));
    }

    #[test]
    fn location_substitution_reaches_effects() {
        let loc = EffectAtom::loc(0, Type::Int);
        let eff = Effect::from_vars(["x", "y"]);
        let expected: Effect = [loc.clone(), EffectAtom::var("y")].into_iter().collect();
        assert_eq!(subst_atom_effect("x", &loc, &eff), expected);
    }

    #[test]
    fn location_substitution_reaches_types() {
        let loc = EffectAtom::loc(2, Type::Int);
        let t = Type::func(vec![Type::Int], Type::Int, Effect::from_vars(["x"]));
        assert_eq!(
            subst_atom_type("x", &loc, &t),
            Type::func(vec![Type::Int], Type::Int, Effect::singleton(loc))
        );
    }

    #[test]
    fn non_free_variable_substitution_is_identity() {
        let loc = EffectAtom::loc(0, Type::Int);
        assert_eq!(subst_atom_type("x", &loc, &Type::Int), Type::Int);
    }

    #[test]
    fn variable_atom_substitution_avoids_capture() {
        // [x := y] <y> func(int,int,[x,y]) must not capture the free y.
        let t = Type::eff_all(
            "y",
            Type::func(vec![Type::Int], Type::Int, Effect::from_vars(["x", "y"])),
        );
        let out = subst_atom_type("x", &EffectAtom::var("y"), &t);
        let Type::EffAll(b, body) = &out else {
            panic!("expected abstraction")
        };
        assert_ne!(b, "y");
        assert_eq!(
            fv_type(&out),
            Effect::from_vars(["y"]),
            "free y stays free: {body:?}"
        );
    }
}
