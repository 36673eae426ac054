//! Type and effect erasure, and an evaluator for erased programs.
//!
//! Erased terms are their own syntax: there is nowhere to put a type, an
//! effect, an effect abstraction or an effect application, so an erased
//! program cannot perform effect work at run time.

use std::fmt;

use crate::ast::{Expr, Name, OpName, Program, Stmt};
use crate::machine::{Observation, RunError, RunStats, StuckKind};
use crate::ops::{delta, DeltaError, PrimValue};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ErasedExpr {
    Var(Name),
    Loc(usize),
    Num(i64),
    List(Vec<i64>),
    Prim(OpName, Vec<ErasedExpr>),
    Fun(Vec<Name>, Box<ErasedStmt>),
    Let(Name, Box<ErasedExpr>, Box<ErasedExpr>),
    Fix(Name, Box<ErasedExpr>),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ErasedStmt {
    VarInit(Name, ErasedExpr, Box<ErasedStmt>),
    LetCall(Name, ErasedExpr, Vec<ErasedExpr>, Box<ErasedStmt>),
    TailCall(ErasedExpr, Vec<ErasedExpr>),
    Return(ErasedExpr),
    If(ErasedExpr, Box<ErasedStmt>, Box<ErasedStmt>),
}

pub fn erase_expr(e: &Expr) -> ErasedExpr {
    match e {
        Expr::Var(x) => ErasedExpr::Var(x.clone()),
        Expr::Loc(i, _) => ErasedExpr::Loc(*i),
        Expr::Num(n) => ErasedExpr::Num(*n),
        Expr::List(l) => ErasedExpr::List(l.clone()),
        Expr::Prim(op, args) => ErasedExpr::Prim(*op, args.iter().map(erase_expr).collect()),
        Expr::Fun(f) => ErasedExpr::Fun(
            f.params.iter().map(|(x, _)| x.clone()).collect(),
            Box::new(erase_stmt(&f.body)),
        ),
        Expr::EffAbs(_, body) => erase_expr(body),
        Expr::EffApp(head, _) => erase_expr(head),
        Expr::Let(x, rhs, body) => {
            ErasedExpr::Let(x.clone(), Box::new(erase_expr(rhs)), Box::new(erase_expr(body)))
        }
        Expr::Fix(x, _, body) => ErasedExpr::Fix(x.clone(), Box::new(erase_expr(body))),
    }
}

pub fn erase_stmt(s: &Stmt) -> ErasedStmt {
    match s {
        Stmt::VarInit { var, rhs, rest, .. } => {
            ErasedStmt::VarInit(var.clone(), erase_expr(rhs), Box::new(erase_stmt(rest)))
        }
        Stmt::LetCall {
            var, func, args, rest, ..
        } => ErasedStmt::LetCall(
            var.clone(),
            erase_expr(func),
            args.iter().map(erase_expr).collect(),
            Box::new(erase_stmt(rest)),
        ),
        Stmt::TailCall { func, args, .. } => {
            ErasedStmt::TailCall(erase_expr(func), args.iter().map(erase_expr).collect())
        }
        Stmt::Return { value, .. } => ErasedStmt::Return(erase_expr(value)),
        Stmt::If {
            cond,
            then_branch,
            else_branch,
            ..
        } => ErasedStmt::If(
            erase_expr(cond),
            Box::new(erase_stmt(then_branch)),
            Box::new(erase_stmt(else_branch)),
        ),
        // Capture lists only copy values, which erasure cannot observe.
        Stmt::Proc(p) => ErasedStmt::VarInit(
            p.name.clone(),
            ErasedExpr::Fix(
                p.name.clone(),
                Box::new(ErasedExpr::Fun(
                    p.params.iter().map(|(x, _)| x.clone()).collect(),
                    Box::new(erase_stmt(&p.body)),
                )),
            ),
            Box::new(erase_stmt(&p.rest)),
        ),
    }
}

pub fn erase(p: &Program) -> ErasedStmt {
    erase_stmt(&p.body)
}

/// `[x := v] e` for a closed `v`.
pub fn subst_erased_expr(x: &str, v: &ErasedExpr, e: &ErasedExpr) -> ErasedExpr {
    match e {
        ErasedExpr::Var(y) if y == x => v.clone(),
        ErasedExpr::Var(_) | ErasedExpr::Loc(_) | ErasedExpr::Num(_) | ErasedExpr::List(_) => e.clone(),
        ErasedExpr::Prim(op, args) => {
            ErasedExpr::Prim(*op, args.iter().map(|a| subst_erased_expr(x, v, a)).collect())
        }
        ErasedExpr::Fun(params, body) => {
            if params.iter().any(|p| p == x) {
                e.clone()
            } else {
                ErasedExpr::Fun(params.clone(), Box::new(subst_erased_stmt(x, v, body)))
            }
        }
        ErasedExpr::Let(y, rhs, body) => ErasedExpr::Let(
            y.clone(),
            Box::new(subst_erased_expr(x, v, rhs)),
            if y == x {
                body.clone()
            } else {
                Box::new(subst_erased_expr(x, v, body))
            },
        ),
        ErasedExpr::Fix(y, body) => {
            if y == x {
                e.clone()
            } else {
                ErasedExpr::Fix(y.clone(), Box::new(subst_erased_expr(x, v, body)))
            }
        }
    }
}

pub fn subst_erased_stmt(x: &str, v: &ErasedExpr, s: &ErasedStmt) -> ErasedStmt {
    let e = |t: &ErasedExpr| subst_erased_expr(x, v, t);
    let es = |ts: &[ErasedExpr]| ts.iter().map(|t| subst_erased_expr(x, v, t)).collect();
    let under = |y: &str, rest: &ErasedStmt| {
        Box::new(if y == x {
            rest.clone()
        } else {
            subst_erased_stmt(x, v, rest)
        })
    };
    match s {
        ErasedStmt::VarInit(y, rhs, rest) => ErasedStmt::VarInit(y.clone(), e(rhs), under(y, rest)),
        ErasedStmt::LetCall(y, f, args, rest) => {
            ErasedStmt::LetCall(y.clone(), e(f), es(args), under(y, rest))
        }
        ErasedStmt::TailCall(f, args) => ErasedStmt::TailCall(e(f), es(args)),
        ErasedStmt::Return(r) => ErasedStmt::Return(e(r)),
        ErasedStmt::If(c, t, f) => ErasedStmt::If(
            e(c),
            Box::new(subst_erased_stmt(x, v, t)),
            Box::new(subst_erased_stmt(x, v, f)),
        ),
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ErasedValue {
    Num(i64),
    Fun(Vec<Name>, Box<ErasedStmt>),
    List(Vec<i64>),
}

impl ErasedValue {
    fn to_expr(&self) -> ErasedExpr {
        match self {
            ErasedValue::Num(n) => ErasedExpr::Num(*n),
            ErasedValue::Fun(p, b) => ErasedExpr::Fun(p.clone(), b.clone()),
            ErasedValue::List(l) => ErasedExpr::List(l.clone()),
        }
    }

    pub fn observe(&self) -> Observation {
        match self {
            ErasedValue::Num(n) => Observation::Num(*n),
            ErasedValue::Fun(..) => Observation::Fun,
            ErasedValue::List(l) => Observation::List(l.clone()),
        }
    }
}

enum Halt {
    Stuck(StuckKind),
    Fuel,
}

impl From<StuckKind> for Halt {
    fn from(k: StuckKind) -> Self {
        Halt::Stuck(k)
    }
}

fn burn(fuel: &mut u64) -> Result<(), Halt> {
    *fuel = fuel.checked_sub(1).ok_or(Halt::Fuel)?;
    Ok(())
}

fn eval(e: &ErasedExpr, sigma: &[ErasedValue], fuel: &mut u64) -> Result<ErasedValue, Halt> {
    burn(fuel)?;
    match e {
        ErasedExpr::Var(x) => Err(StuckKind::FreeVariable(x.clone()).into()),
        ErasedExpr::Loc(i) => sigma
            .get(*i)
            .cloned()
            .ok_or_else(|| StuckKind::LocationOutOfRange(*i).into()),
        ErasedExpr::Num(n) => Ok(ErasedValue::Num(*n)),
        ErasedExpr::List(l) => Ok(ErasedValue::List(l.clone())),
        ErasedExpr::Prim(op, args) => {
            let mut vals = Vec::with_capacity(args.len());
            for a in args {
                vals.push(match eval(a, sigma, fuel)? {
                    ErasedValue::Num(n) => PrimValue::Int(n),
                    ErasedValue::List(l) => PrimValue::List(l),
                    ErasedValue::Fun(..) => {
                        return Err(StuckKind::Delta(DeltaError::Domain { op: op.symbol() }).into())
                    }
                });
            }
            Ok(match delta(*op, &vals).map_err(StuckKind::Delta)? {
                PrimValue::Int(n) => ErasedValue::Num(n),
                PrimValue::List(l) => ErasedValue::List(l),
            })
        }
        ErasedExpr::Fun(p, b) => Ok(ErasedValue::Fun(p.clone(), b.clone())),
        ErasedExpr::Let(x, rhs, body) => {
            let v = eval(rhs, sigma, fuel)?;
            eval(&subst_erased_expr(x, &v.to_expr(), body), sigma, fuel)
        }
        ErasedExpr::Fix(x, body) => eval(&subst_erased_expr(x, e, body), sigma, fuel),
    }
}

struct ErasedFrame {
    var: Name,
    rest: ErasedStmt,
    locals: usize,
}

fn call(
    f: &ErasedExpr,
    args: &[ErasedExpr],
    sigma: &[ErasedValue],
    fuel: &mut u64,
) -> Result<(Vec<Name>, ErasedStmt, Vec<ErasedValue>), Halt> {
    let ErasedValue::Fun(params, body) = eval(f, sigma, fuel)? else {
        return Err(StuckKind::NotAFunction.into());
    };
    if params.len() != args.len() {
        return Err(StuckKind::Arity {
            expected: params.len(),
            given: args.len(),
        }
        .into());
    }
    let vals = args.iter().map(|a| eval(a, sigma, fuel)).collect::<Result<_, _>>()?;
    Ok((params, *body, vals))
}

fn enter(params: Vec<Name>, mut body: ErasedStmt, vals: Vec<ErasedValue>, sigma: &mut Vec<ErasedValue>) -> ErasedStmt {
    for (p, v) in params.into_iter().zip(vals) {
        body = subst_erased_stmt(&p, &ErasedExpr::Loc(sigma.len()), &body);
        sigma.push(v);
    }
    body
}

/// Runs an erased program with the machine's rules minus all type and effect
/// bookkeeping.
pub fn run_erased(s: &ErasedStmt, fuel: u64) -> Result<(Observation, RunStats), RunError> {
    let mut fuel = fuel;
    let mut stats = RunStats::default();
    let mut stmt = s.clone();
    let mut control: Vec<ErasedFrame> = Vec::new();
    let mut sigma: Vec<ErasedValue> = Vec::new();
    let mut locals = 0usize;
    let halt = |h: Halt, stats: RunStats, stmt: &ErasedStmt| match h {
        Halt::Fuel => RunError::FuelExhausted { stats },
        Halt::Stuck(kind) => RunError::Stuck {
            step: stats.steps,
            kind,
            dump: format!("statement: {stmt}"),
        },
    };
    loop {
        if fuel == 0 {
            return Err(RunError::FuelExhausted { stats });
        }
        fuel -= 1;
        let r: Result<ErasedStmt, Halt> = match &stmt {
            ErasedStmt::VarInit(x, rhs, rest) => eval(rhs, &sigma, &mut fuel).map(|v| {
                let rest = subst_erased_stmt(x, &ErasedExpr::Loc(sigma.len()), rest);
                sigma.push(v);
                locals += 1;
                rest
            }),
            ErasedStmt::LetCall(x, f, args, rest) => call(f, args, &sigma, &mut fuel).map(|(p, b, vals)| {
                control.push(ErasedFrame {
                    var: x.clone(),
                    rest: (**rest).clone(),
                    locals,
                });
                locals = vals.len();
                enter(p, b, vals, &mut sigma)
            }),
            ErasedStmt::TailCall(f, args) => call(f, args, &sigma, &mut fuel).map(|(p, b, vals)| {
                sigma.truncate(sigma.len() - locals);
                locals = vals.len();
                enter(p, b, vals, &mut sigma)
            }),
            ErasedStmt::Return(e) => match eval(e, &sigma, &mut fuel) {
                Err(h) => Err(h),
                Ok(v) => match control.pop() {
                    None => return Ok((v.observe(), stats)),
                    Some(fr) => {
                        sigma.truncate(sigma.len() - locals);
                        let rest = subst_erased_stmt(&fr.var, &ErasedExpr::Loc(sigma.len()), &fr.rest);
                        sigma.push(v);
                        locals = fr.locals + 1;
                        Ok(rest)
                    }
                },
            },
            ErasedStmt::If(c, t, f) => match eval(c, &sigma, &mut fuel) {
                Ok(ErasedValue::Num(n)) => Ok(if n != 0 { (**t).clone() } else { (**f).clone() }),
                Ok(_) => Err(StuckKind::BadCondition.into()),
                Err(h) => Err(h),
            },
        };
        match r {
            Ok(next) => {
                stmt = next;
                stats.steps += 1;
                stats.max_value_stack = stats.max_value_stack.max(sigma.len());
                stats.max_control_stack = stats.max_control_stack.max(control.len());
            }
            Err(h) => return Err(halt(h, stats, &stmt)),
        }
    }
}

/// Maps an original observation onto what erasure can observe: effect
/// abstractions become plain functions.
pub fn erased_view(o: &Observation) -> Observation {
    match o {
        Observation::Abs => Observation::Fun,
        other => other.clone(),
    }
}

impl fmt::Display for ErasedExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ErasedExpr::Var(x) => f.write_str(x),
            ErasedExpr::Loc(i) => write!(f, "#{i}"),
            ErasedExpr::Num(n) => write!(f, "{n}"),
            ErasedExpr::List(l) if l.is_empty() => f.write_str("nil"),
            ErasedExpr::List(l) => {
                let items: Vec<String> = l.iter().map(|n| n.to_string()).collect();
                write!(f, "list[{}]", items.join(","))
            }
            ErasedExpr::Prim(op, args) if op.is_infix() && args.len() == 2 => {
                write!(f, "({} {} {})", args[0], op.symbol(), args[1])
            }
            ErasedExpr::Prim(op, args) => write!(f, "{}({})", op.symbol(), comma(args)),
            ErasedExpr::Fun(params, body) => write!(f, "fun({}) {{ {body} }}", params.join(", ")),
            ErasedExpr::Let(x, rhs, body) => write!(f, "let {x} = {rhs} in {body}"),
            ErasedExpr::Fix(x, body) => write!(f, "fix {x}. {body}"),
        }
    }
}

fn comma(es: &[ErasedExpr]) -> String {
    es.iter().map(|e| e.to_string()).collect::<Vec<_>>().join(", ")
}

impl fmt::Display for ErasedStmt {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ErasedStmt::VarInit(x, e, rest) => write!(f, "var {x} = {e}; {rest}"),
            ErasedStmt::LetCall(x, g, args, rest) => write!(f, "var {x} = {g}({}); {rest}", comma(args)),
            ErasedStmt::TailCall(g, args) => write!(f, "return {g}({});", comma(args)),
            ErasedStmt::Return(e) => write!(f, "return {e};"),
            ErasedStmt::If(c, t, e) => write!(f, "if ({c}) {{ {t} }} else {{ {e} }}"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ast::{Effect, Type};
    use crate::frontend::load;
    use crate::typecheck::check_program;

    fn checked(src: &str) -> Program {
        check_program(&load("t.fk", src).unwrap().ast).unwrap().program
    }

    #[test]
    fn annotations_are_dropped() {
        let f = Expr::fun(
            vec![("x".into(), Type::Int)],
            Effect::from_vars(["y"]),
            None,
            Stmt::ret(Expr::var("x")),
        );
        assert_eq!(erase_expr(&f).to_string(), "fun(x) { return x; }");
    }

    #[test]
    fn abstraction_and_application_collapse() {
        let f = Expr::fun(vec![], Effect::from_vars(["p"]), None, Stmt::ret(Expr::Num(1)));
        let abs = Expr::eff_abs("p", f.clone());
        assert_eq!(erase_expr(&abs), erase_expr(&f));
        let app = Expr::eff_app(Expr::var("g"), crate::ast::EffectAtom::var("x"));
        assert_eq!(erase_expr(&app), ErasedExpr::Var("g".into()));
    }

    #[test]
    fn fix_keeps_its_binder() {
        let t = Type::func(vec![], Type::Int, Effect::empty());
        let body = Expr::fun(vec![], Effect::empty(), None, Stmt::ret(Expr::Num(0)));
        let e = erase_expr(&Expr::fix("f", t, body));
        assert_eq!(e.to_string(), "fix f. fun() { return 0; }");
    }

    #[test]
    fn trivial_program() {
        let p = checked("return 0;");
        assert_eq!(run_erased(&erase(&p), 100).unwrap().0, Observation::Num(0));
    }

    #[test]
    fn tail_calls_and_branches() {
        let p = checked(
            "var f = fix f: func(int,int,int,[]). fun(n:int, acc:int)[] {\n\
               if (iszero(n)) { return acc; } else { return f(n - 1, acc + 2); }\n\
             };\n\
             var r = f(10, 0); return r;",
        );
        let (o, stats) = run_erased(&erase(&p), 100_000).unwrap();
        assert_eq!(o, Observation::Num(20));
        assert!(stats.max_control_stack <= 1);
    }

    #[test]
    fn abs_maps_to_fun() {
        assert_eq!(erased_view(&Observation::Abs), Observation::Fun);
        assert_eq!(erased_view(&Observation::Num(3)), Observation::Num(3));
    }
}
