//! The type-and-effect checker.
//!
//! Expression judgments have the form `Γ; φ ⊢ e : T`, where `φ` lists the
//! stack variables (or, mid-execution, stack locations) the expression may
//! read. Statement judgments `Γ; φ1; φ2 ⊢ s : T` add `φ2`, the variables
//! belonging to the current call frame; a returned type may not mention
//! them.
//!
//! Checking elaborates as it goes: every `fun` receives its synthesized
//! return type and every `var` its initializer's type.

pub mod state;

use std::fmt;

use serde::Serialize;

use crate::ast::{fv_type, Effect, EffectAtom, Expr, Name, Program, Span, Stmt, Type};
use crate::ops::typeof_op;
use crate::subst::subst_atom_type;

pub use state::{satisfies, type_observation, type_state, type_value_stack, StackTyping, StateTyper};

/// How a variable is bound. Reading a `Plain` (stack) variable is an
/// effect; reading a `Copy` (let/fix) variable is not.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Binding {
    Plain(Type),
    Copy(Type),
}

impl Binding {
    pub fn ty(&self) -> &Type {
        match self {
            Binding::Plain(t) | Binding::Copy(t) => t,
        }
    }
}

/// Ordered bindings; lookup finds the rightmost.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct TypeEnv {
    entries: Vec<(Name, Binding)>,
}

impl TypeEnv {
    pub fn new() -> Self {
        TypeEnv::default()
    }

    pub fn plain(mut self, x: impl Into<Name>, t: Type) -> Self {
        self.push(x.into(), Binding::Plain(t));
        self
    }

    pub fn copy(mut self, x: impl Into<Name>, t: Type) -> Self {
        self.push(x.into(), Binding::Copy(t));
        self
    }

    pub fn push(&mut self, x: Name, b: Binding) {
        self.entries.push((x, b));
    }

    pub fn lookup(&self, x: &str) -> Option<&Binding> {
        self.entries.iter().rev().find(|(y, _)| y == x).map(|(_, b)| b)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn truncate(&mut self, n: usize) {
        self.entries.truncate(n);
    }

    pub fn iter(&self) -> impl Iterator<Item = &(Name, Binding)> {
        self.entries.iter()
    }

    /// The environment with the binding at `index` removed.
    pub fn without(&self, index: usize) -> TypeEnv {
        let mut entries = self.entries.clone();
        entries.remove(index);
        TypeEnv { entries }
    }

    /// Names bound as stack variables with a value type (not `top`).
    pub fn plain_value_vars(&self) -> Vec<Name> {
        self.entries
            .iter()
            .filter(|(_, b)| matches!(b, Binding::Plain(t) if *t != Type::Top))
            .map(|(x, _)| x.clone())
            .collect()
    }

    /// `⊢ Γ`: every bound type is well formed in the prefix before it.
    pub fn check_well_formed(&self) -> Result<(), TypeError> {
        for i in 0..self.entries.len() {
            let prefix = TypeEnv {
                entries: self.entries[..i].to_vec(),
            };
            wf_type(&prefix, self.entries[i].1.ty())?;
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum TypeErrorKind {
    UnboundVar,
    EffectViolation,
    NotInEffect,
    Arity,
    Mismatch,
    UpwardFunarg,
    TailCallOverlap,
    MalformedType,
    MalformedEffect,
}

impl TypeErrorKind {
    pub fn as_str(self) -> &'static str {
        match self {
            TypeErrorKind::UnboundVar => "unbound-var",
            TypeErrorKind::EffectViolation => "effect-violation",
            TypeErrorKind::NotInEffect => "not-in-effect",
            TypeErrorKind::Arity => "arity",
            TypeErrorKind::Mismatch => "mismatch",
            TypeErrorKind::UpwardFunarg => "upward-funarg",
            TypeErrorKind::TailCallOverlap => "tail-call-overlap",
            TypeErrorKind::MalformedType => "malformed-type",
            TypeErrorKind::MalformedEffect => "malformed-effect",
        }
    }
}

impl fmt::Display for TypeErrorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
#[error("{span}: {kind}: {message}")]
pub struct TypeError {
    pub kind: TypeErrorKind,
    pub span: Span,
    pub message: String,
}

/// A checked program together with its type. The program is elaborated.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CheckedProgram {
    pub program: Program,
    pub ty: Type,
}

#[derive(Clone, Debug)]
pub struct ExprJudgment {
    pub env: TypeEnv,
    pub effect: Effect,
    pub expr: Expr,
    pub ty: Type,
}

#[derive(Clone, Debug)]
pub struct StmtJudgment {
    pub env: TypeEnv,
    pub read: Effect,
    pub locals: Effect,
    pub stmt: Stmt,
    pub ty: Type,
}

/// Every successful judgment derived while checking a program.
#[derive(Clone, Debug, Default)]
pub struct Judgments {
    pub exprs: Vec<ExprJudgment>,
    pub stmts: Vec<StmtJudgment>,
}

fn err(kind: TypeErrorKind, span: Span, message: impl Into<String>) -> TypeError {
    TypeError {
        kind,
        span,
        message: message.into(),
    }
}

/// `Γ ⊢ φ`: every variable atom is bound as a stack variable. Location
/// atoms are left to state typing.
pub fn wf_effect(env: &TypeEnv, eff: &Effect) -> Result<(), TypeError> {
    for atom in eff.iter() {
        if let EffectAtom::Var(x) = atom {
            match env.lookup(x) {
                Some(Binding::Plain(_)) => {}
                Some(Binding::Copy(_)) => {
                    return Err(err(
                        TypeErrorKind::MalformedEffect,
                        Span::default(),
                        format!("effect names `{x}`, which is a copy and not a stack variable"),
                    ))
                }
                None => {
                    return Err(err(
                        TypeErrorKind::MalformedEffect,
                        Span::default(),
                        format!("effect names unbound variable `{x}`"),
                    ))
                }
            }
        }
    }
    Ok(())
}

/// `Γ ⊢ T`. `top` is rejected inside function signatures.
pub fn wf_type(env: &TypeEnv, t: &Type) -> Result<(), TypeError> {
    match t {
        Type::Top | Type::Int | Type::IntList => Ok(()),
        Type::Func {
            params,
            ret,
            effect,
        } => {
            for p in params.iter().chain(std::iter::once(&**ret)) {
                if *p == Type::Top {
                    return Err(err(
                        TypeErrorKind::MalformedType,
                        Span::default(),
                        format!("`top` cannot appear in a function signature: {t}"),
                    ));
                }
                wf_type(env, p)?;
            }
            wf_effect(env, effect)
        }
        Type::EffAll(x, body) => {
            let inner = env.clone().plain(x.clone(), Type::Top);
            wf_type(&inner, body)
        }
    }
}

/// Types `e` under `Γ; φ` and returns the elaborated expression's type.
pub fn type_expr(env: &TypeEnv, eff: &Effect, e: &Expr) -> Result<Type, TypeError> {
    let mut e = e.clone();
    Checker::new(env.clone()).expr(eff, &mut e)
}

/// Types `s` under `Γ; φ1; φ2`.
pub fn type_stmt(env: &TypeEnv, read: &Effect, locals: &Effect, s: &Stmt) -> Result<Type, TypeError> {
    let mut s = s.clone();
    Checker::new(env.clone()).stmt(read, locals, &mut s)
}

/// Checks and elaborates an expression in place.
pub fn elaborate_expr(env: &TypeEnv, eff: &Effect, e: &mut Expr) -> Result<Type, TypeError> {
    Checker::new(env.clone()).expr(eff, e)
}

/// `∅; ∅; ∅ ⊢ s : T` for a whole program.
pub fn check_program(p: &Program) -> Result<CheckedProgram, TypeError> {
    let mut program = p.clone();
    let ty = Checker::new(TypeEnv::new()).stmt(&Effect::empty(), &Effect::empty(), &mut program.body)?;
    Ok(CheckedProgram { program, ty })
}

/// Like [`check_program`], also returning every judgment derived on the way.
pub fn record_judgments(p: &Program) -> Result<(CheckedProgram, Judgments), TypeError> {
    let mut program = p.clone();
    let mut log = Judgments::default();
    let mut checker = Checker::new(TypeEnv::new());
    checker.log = Some(&mut log);
    let ty = checker.stmt(&Effect::empty(), &Effect::empty(), &mut program.body)?;
    Ok((CheckedProgram { program, ty }, log))
}

pub(crate) struct Checker<'r> {
    env: TypeEnv,
    span: Span,
    /// In collect mode, location atoms demanded by the current function
    /// level are accepted and accumulated in `required` instead of being
    /// looked up in the read effect. Used to reconstruct read effects of
    /// machine states.
    collect: bool,
    required: Effect,
    log: Option<&'r mut Judgments>,
}

impl<'r> Checker<'r> {
    pub(crate) fn new(env: TypeEnv) -> Self {
        Checker {
            env,
            span: Span::default(),
            collect: false,
            required: Effect::empty(),
            log: None,
        }
    }

    pub(crate) fn collecting(env: TypeEnv) -> Self {
        Checker {
            collect: true,
            ..Checker::new(env)
        }
    }

    pub(crate) fn into_required(self) -> Effect {
        self.required
    }

    fn err(&self, kind: TypeErrorKind, message: impl Into<String>) -> TypeError {
        err(kind, self.span, message)
    }

    fn at_span<T>(&self, r: Result<T, TypeError>) -> Result<T, TypeError> {
        r.map_err(|mut e| {
            e.span = self.span;
            e
        })
    }

    fn wf_type(&self, t: &Type) -> Result<(), TypeError> {
        self.at_span(wf_type(&self.env, t))
    }

    fn wf_effect(&self, eff: &Effect) -> Result<(), TypeError> {
        self.at_span(wf_effect(&self.env, eff))
    }

    fn has_atom(&mut self, atom: &EffectAtom, eff: &Effect) -> bool {
        if self.collect {
            if let EffectAtom::Loc(..) = atom {
                self.required.insert(atom.clone());
                return true;
            }
        }
        eff.contains(atom)
    }

    /// Atoms of `need` that are missing from `have`.
    fn missing(&mut self, need: &Effect, have: &Effect) -> Effect {
        need.iter()
            .filter(|a| !self.has_atom(a, have))
            .cloned()
            .collect()
    }

    /// Runs `f` with the environment extended, then restores it.
    fn bind<T>(&mut self, binds: Vec<(Name, Binding)>, f: impl FnOnce(&mut Self) -> T) -> T {
        let mark = self.env.len();
        for (x, b) in binds {
            self.env.push(x, b);
        }
        let r = f(self);
        self.env.truncate(mark);
        r
    }

    /// Runs `f` as a nested function level: collect mode is suspended and
    /// the span restored afterwards.
    fn nested<T>(&mut self, f: impl FnOnce(&mut Self) -> T) -> T {
        let collect = std::mem::replace(&mut self.collect, false);
        let span = self.span;
        let r = f(self);
        self.collect = collect;
        self.span = span;
        r
    }

    fn arg_mismatch(&self, what: &str, expected: &Type, found: &Type) -> TypeError {
        let kind = if expected.equal_modulo_effects(found) {
            TypeErrorKind::EffectViolation
        } else {
            TypeErrorKind::Mismatch
        };
        self.err(kind, format!("{what}: expected {expected}, found {found}"))
    }

    pub(crate) fn expr(&mut self, eff: &Effect, e: &mut Expr) -> Result<Type, TypeError> {
        let ty = self.expr_inner(eff, e)?;
        if let Some(log) = self.log.as_deref_mut() {
            log.exprs.push(ExprJudgment {
                env: self.env.clone(),
                effect: eff.clone(),
                expr: e.clone(),
                ty: ty.clone(),
            });
        }
        Ok(ty)
    }

    fn expr_inner(&mut self, eff: &Effect, e: &mut Expr) -> Result<Type, TypeError> {
        match e {
            Expr::Var(x) => match self.env.lookup(x).cloned() {
                None => Err(self.err(TypeErrorKind::UnboundVar, format!("unbound variable `{x}`"))),
                Some(Binding::Copy(t)) => Ok(t),
                Some(Binding::Plain(Type::Top)) => Err(self.err(
                    TypeErrorKind::Mismatch,
                    format!("effect variable `{x}` is not a value"),
                )),
                Some(Binding::Plain(t)) => {
                    if eff.contains_var(x) {
                        Ok(t)
                    } else {
                        Err(self.err(
                            TypeErrorKind::NotInEffect,
                            format!("reading stack variable `{x}` requires it in the effect {eff}"),
                        ))
                    }
                }
            },
            Expr::Loc(i, t) => {
                let atom = EffectAtom::loc(*i, t.clone());
                if self.has_atom(&atom, eff) {
                    Ok(t.clone())
                } else {
                    Err(self.err(
                        TypeErrorKind::NotInEffect,
                        format!("location {atom} is not in the effect {eff}"),
                    ))
                }
            }
            Expr::Num(_) => Ok(Type::Int),
            Expr::List(_) => Ok(Type::IntList),
            Expr::Prim(op, args) => {
                let (params, ret) = typeof_op(*op);
                if params.len() != args.len() {
                    return Err(self.err(
                        TypeErrorKind::Arity,
                        format!("`{}` takes {} arguments, given {}", op.symbol(), params.len(), args.len()),
                    ));
                }
                for (p, a) in params.iter().zip(args.iter_mut()) {
                    let ta = self.expr(eff, a)?;
                    if ta != *p {
                        return Err(self.arg_mismatch(&format!("argument of `{}`", op.symbol()), p, &ta));
                    }
                }
                Ok(ret)
            }
            Expr::Fun(f) => {
                for (_, t) in &f.params {
                    self.wf_type(t)?;
                    if *t == Type::Top {
                        return Err(self.err(TypeErrorKind::MalformedType, "parameter of type `top`"));
                    }
                }
                self.wf_effect(&f.effect)?;
                let locals = Effect::from_vars(f.params.iter().map(|(x, _)| x.clone()));
                let read = f.effect.union(&locals);
                let binds = f
                    .params
                    .iter()
                    .map(|(x, t)| (x.clone(), Binding::Plain(t.clone())))
                    .collect();
                let body_ty = self.nested(|c| c.bind(binds, |c| c.stmt(&read, &locals, &mut f.body)))?;
                if let Some(r) = &f.ret {
                    self.wf_type(r)?;
                    if *r != body_ty {
                        return Err(self.err(
                            TypeErrorKind::Mismatch,
                            format!("function declares return type {r} but returns {body_ty}"),
                        ));
                    }
                } else {
                    f.ret = Some(body_ty.clone());
                }
                let ty = Type::func(
                    f.params.iter().map(|(_, t)| t.clone()).collect(),
                    f.ret.clone().expect("set above"),
                    f.effect.clone(),
                );
                self.wf_type(&ty)?;
                Ok(ty)
            }
            Expr::EffAbs(x, body) => {
                if !body.is_abstraction() {
                    return Err(self.err(
                        TypeErrorKind::Mismatch,
                        "the body of an effect abstraction must be a function or an effect abstraction",
                    ));
                }
                let binds = vec![(x.clone(), Binding::Plain(Type::Top))];
                let t = self.nested(|c| c.bind(binds, |c| c.expr(&Effect::empty(), body)))?;
                Ok(Type::eff_all(x.clone(), t))
            }
            Expr::EffApp(head, atom) => {
                let t = self.expr(eff, head)?;
                let Type::EffAll(x, body) = t else {
                    return Err(self.err(
                        TypeErrorKind::Mismatch,
                        format!("effect application to a non-abstraction of type {t}"),
                    ));
                };
                if let EffectAtom::Var(_) = atom {
                    self.wf_effect(&Effect::singleton(atom.clone()))?;
                }
                Ok(subst_atom_type(&x, atom, &body))
            }
            Expr::Let(x, rhs, body) => {
                let t1 = self.expr(eff, rhs)?;
                self.bind(vec![(x.clone(), Binding::Copy(t1))], |c| c.expr(eff, body))
            }
            Expr::Fix(x, t, body) => {
                if !t.is_abstraction() {
                    return Err(self.err(
                        TypeErrorKind::Mismatch,
                        format!("`fix` needs a function or effect-abstraction type, given {t}"),
                    ));
                }
                self.wf_type(t)?;
                if !body.is_abstraction() {
                    return Err(self.err(
                        TypeErrorKind::Mismatch,
                        "the body of `fix` must be a function or an effect abstraction",
                    ));
                }
                let tb = self.bind(vec![(x.clone(), Binding::Copy(t.clone()))], |c| c.expr(eff, body))?;
                if tb != *t {
                    return Err(self.err(
                        TypeErrorKind::Mismatch,
                        format!("`fix` annotation {t} differs from body type {tb}"),
                    ));
                }
                Ok(t.clone())
            }
        }
    }

    /// Types a call's head and arguments, returning the callee's latent
    /// effect and result type.
    fn call(&mut self, read: &Effect, func: &mut Expr, args: &mut [Expr]) -> Result<(Effect, Type), TypeError> {
        let tf = self.expr(read, func)?;
        let Type::Func {
            params,
            ret,
            effect,
        } = tf
        else {
            let hint = if matches!(tf, Type::EffAll(..)) {
                "; apply it to an effect first"
            } else {
                ""
            };
            return Err(self.err(
                TypeErrorKind::Mismatch,
                format!("called expression has type {tf}, not a function type{hint}"),
            ));
        };
        if params.len() != args.len() {
            return Err(self.err(
                TypeErrorKind::Arity,
                format!("function takes {} arguments, given {}", params.len(), args.len()),
            ));
        }
        for (i, (p, a)) in params.iter().zip(args.iter_mut()).enumerate() {
            let ta = self.expr(read, a)?;
            if ta != *p {
                return Err(self.arg_mismatch(&format!("argument {}", i + 1), p, &ta));
            }
        }
        Ok((effect, *ret))
    }

    pub(crate) fn stmt(&mut self, read: &Effect, locals: &Effect, s: &mut Stmt) -> Result<Type, TypeError> {
        self.span = s.span();
        let ty = self.stmt_inner(read, locals, s)?;
        debug_assert!(
            fv_type(&ty).is_disjoint(locals),
            "locals {locals} escape in result type {ty}"
        );
        if let Some(log) = self.log.as_deref_mut() {
            log.stmts.push(StmtJudgment {
                env: self.env.clone(),
                read: read.clone(),
                locals: locals.clone(),
                stmt: s.clone(),
                ty: ty.clone(),
            });
        }
        Ok(ty)
    }

    fn stmt_inner(&mut self, read: &Effect, locals: &Effect, s: &mut Stmt) -> Result<Type, TypeError> {
        match s {
            Stmt::VarInit {
                var, annot, rhs, rest, ..
            } => {
                let t1 = self.expr(read, rhs)?;
                match annot {
                    Some(a) => {
                        self.wf_type(a)?;
                        if *a != t1 {
                            return Err(self.err(
                                TypeErrorKind::Mismatch,
                                format!("`{var}` is declared {a} but initialized with {t1}"),
                            ));
                        }
                    }
                    None => *annot = Some(t1.clone()),
                }
                let x = EffectAtom::Var(var.clone());
                let read = read.clone().with(x.clone());
                let locals = locals.clone().with(x);
                self.bind(vec![(var.clone(), Binding::Plain(t1))], |c| c.stmt(&read, &locals, rest))
            }
            Stmt::LetCall {
                var, func, args, rest, ..
            } => {
                let (phi3, t2) = self.call(read, func, args)?;
                let missing = self.missing(&phi3, read);
                if !missing.is_empty() {
                    return Err(self.err(
                        TypeErrorKind::EffectViolation,
                        format!("the callee reads {missing}, which the current effect {read} does not allow"),
                    ));
                }
                let x = EffectAtom::Var(var.clone());
                let read = read.clone().with(x.clone());
                let locals = locals.clone().with(x);
                self.bind(vec![(var.clone(), Binding::Plain(t2))], |c| c.stmt(&read, &locals, rest))
            }
            Stmt::TailCall { func, args, .. } => {
                let (phi3, t2) = self.call(read, func, args)?;
                let missing = self.missing(&phi3, read);
                if !missing.is_empty() {
                    return Err(self.err(
                        TypeErrorKind::EffectViolation,
                        format!("the callee reads {missing}, which the current effect {read} does not allow"),
                    ));
                }
                let overlap = phi3.intersection(locals);
                if !overlap.is_empty() {
                    return Err(self.err(
                        TypeErrorKind::TailCallOverlap,
                        format!("tail call reads {overlap}, which is popped before the call"),
                    ));
                }
                let escaping = fv_type(&t2).intersection(locals);
                if !escaping.is_empty() {
                    return Err(self.err(
                        TypeErrorKind::UpwardFunarg,
                        format!("tail call result of type {t2} refers to local variables {escaping}"),
                    ));
                }
                Ok(t2)
            }
            Stmt::Return { value, .. } => {
                let t = self.expr(read, value)?;
                let escaping = fv_type(&t).intersection(locals);
                if !escaping.is_empty() {
                    return Err(self.err(
                        TypeErrorKind::UpwardFunarg,
                        format!("returned value of type {t} refers to local variables {escaping}"),
                    ));
                }
                Ok(t)
            }
            Stmt::If {
                cond,
                then_branch,
                else_branch,
                ..
            } => {
                let tc = self.expr(read, cond)?;
                if tc != Type::Int {
                    return Err(self.err(
                        TypeErrorKind::Mismatch,
                        format!("condition has type {tc}, expected int"),
                    ));
                }
                let span = self.span;
                let t1 = self.stmt(read, locals, then_branch)?;
                let t2 = self.stmt(read, locals, else_branch)?;
                if t1 != t2 {
                    self.span = span;
                    return Err(self.err(
                        TypeErrorKind::Mismatch,
                        format!("branches have different types: {t1} and {t2}"),
                    ));
                }
                Ok(t1)
            }
            Stmt::Proc(_) => Err(self.err(
                TypeErrorKind::MalformedType,
                "internal: `proc` must be desugared before checking",
            )),
        }
    }
}
