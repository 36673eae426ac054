//! Abstract syntax shared by every pass: effects, types, expressions and
//! statements, in both the surface form produced by the parser and the
//! internal, location-bearing form manipulated by the machine.

use std::cmp::Ordering;
use std::collections::BTreeSet;

pub type Name = String;

/// Source position of a statement. Spans never participate in equality or
/// ordering, so structurally identical terms compare equal regardless of
/// where they were parsed from.
#[derive(Clone, Copy, Debug, Default)]
pub struct Span {
    pub line: u32,
    pub col: u32,
}

impl Span {
    pub fn new(line: u32, col: u32) -> Self {
        Span { line, col }
    }
}

impl PartialEq for Span {
    fn eq(&self, _: &Self) -> bool {
        true
    }
}

impl Eq for Span {}

impl std::fmt::Display for Span {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

/// An element of an effect: a variable (surface programs and effect
/// parameters) or an annotated stack location (mid-execution only).
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum EffectAtom {
    Var(Name),
    Loc(usize, Box<Type>),
}

impl EffectAtom {
    pub fn var(name: impl Into<Name>) -> Self {
        EffectAtom::Var(name.into())
    }

    pub fn loc(index: usize, ty: Type) -> Self {
        EffectAtom::Loc(index, Box::new(ty))
    }

    pub fn as_var(&self) -> Option<&str> {
        match self {
            EffectAtom::Var(x) => Some(x),
            EffectAtom::Loc(..) => None,
        }
    }
}

/// A finite set of effect atoms.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord)]
pub struct Effect(BTreeSet<EffectAtom>);

impl Effect {
    pub fn empty() -> Self {
        Effect(BTreeSet::new())
    }

    pub fn singleton(atom: EffectAtom) -> Self {
        let mut e = Effect::empty();
        e.insert(atom);
        e
    }

    pub fn from_vars<I, S>(vars: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<Name>,
    {
        vars.into_iter().map(|v| EffectAtom::Var(v.into())).collect()
    }

    pub fn insert(&mut self, atom: EffectAtom) -> bool {
        self.0.insert(atom)
    }

    pub fn remove(&mut self, atom: &EffectAtom) -> bool {
        self.0.remove(atom)
    }

    pub fn contains(&self, atom: &EffectAtom) -> bool {
        self.0.contains(atom)
    }

    pub fn contains_var(&self, name: &str) -> bool {
        self.0.contains(&EffectAtom::Var(name.to_string()))
    }

    pub fn union(&self, other: &Effect) -> Effect {
        Effect(self.0.union(&other.0).cloned().collect())
    }

    pub fn minus(&self, other: &Effect) -> Effect {
        Effect(self.0.difference(&other.0).cloned().collect())
    }

    pub fn intersection(&self, other: &Effect) -> Effect {
        Effect(self.0.intersection(&other.0).cloned().collect())
    }

    pub fn is_subset(&self, other: &Effect) -> bool {
        self.0.is_subset(&other.0)
    }

    pub fn is_disjoint(&self, other: &Effect) -> bool {
        self.0.is_disjoint(&other.0)
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn iter(&self) -> impl Iterator<Item = &EffectAtom> {
        self.0.iter()
    }

    pub fn with(mut self, atom: EffectAtom) -> Effect {
        self.insert(atom);
        self
    }

    pub fn has_locations(&self) -> bool {
        self.iter().any(|a| matches!(a, EffectAtom::Loc(..)))
    }
}

impl FromIterator<EffectAtom> for Effect {
    fn from_iter<I: IntoIterator<Item = EffectAtom>>(iter: I) -> Self {
        Effect(iter.into_iter().collect())
    }
}

impl IntoIterator for Effect {
    type Item = EffectAtom;
    type IntoIter = std::collections::btree_set::IntoIter<EffectAtom>;

    fn into_iter(self) -> Self::IntoIter {
        self.0.into_iter()
    }
}

/// Types. Equality and ordering identify types up to renaming of
/// effect-abstraction binders.
#[derive(Clone, Debug)]
pub enum Type {
    Top,
    Int,
    IntList,
    Func {
        params: Vec<Type>,
        ret: Box<Type>,
        effect: Effect,
    },
    EffAll(Name, Box<Type>),
}

impl Type {
    pub fn func(params: Vec<Type>, ret: Type, effect: Effect) -> Type {
        Type::Func {
            params,
            ret: Box::new(ret),
            effect,
        }
    }

    pub fn eff_all(var: impl Into<Name>, body: Type) -> Type {
        Type::EffAll(var.into(), Box::new(body))
    }

    pub fn is_abstraction(&self) -> bool {
        matches!(self, Type::Func { .. } | Type::EffAll(..))
    }

    /// Same shape once every effect annotation is ignored.
    pub fn equal_modulo_effects(&self, other: &Type) -> bool {
        fn strip(t: &Type) -> Type {
            match t {
                Type::Func { params, ret, .. } => Type::func(
                    params.iter().map(strip).collect(),
                    strip(ret),
                    Effect::empty(),
                ),
                Type::EffAll(x, body) => Type::EffAll(x.clone(), Box::new(strip(body))),
                other => other.clone(),
            }
        }
        strip(self) == strip(other)
    }

    fn canon(&self, binders: &mut Vec<Name>) -> CanonType {
        match self {
            Type::Top => CanonType::Top,
            Type::Int => CanonType::Int,
            Type::IntList => CanonType::IntList,
            Type::Func {
                params,
                ret,
                effect,
            } => CanonType::Func(
                params.iter().map(|p| p.canon(binders)).collect(),
                Box::new(ret.canon(binders)),
                effect.iter().map(|a| canon_atom(a, binders)).collect(),
            ),
            Type::EffAll(x, body) => {
                binders.push(x.clone());
                let body = body.canon(binders);
                binders.pop();
                CanonType::All(Box::new(body))
            }
        }
    }
}

#[derive(Debug, PartialEq, Eq, PartialOrd, Ord)]
enum CanonType {
    Top,
    Int,
    IntList,
    Func(Vec<CanonType>, Box<CanonType>, BTreeSet<CanonAtom>),
    All(Box<CanonType>),
}

#[derive(Debug, PartialEq, Eq, PartialOrd, Ord)]
enum CanonAtom {
    Bound(usize),
    Free(Name),
    Loc(usize, CanonType),
}

fn canon_atom(atom: &EffectAtom, binders: &mut Vec<Name>) -> CanonAtom {
    match atom {
        EffectAtom::Var(x) => match binders.iter().rposition(|b| b == x) {
            Some(level) => CanonAtom::Bound(level),
            None => CanonAtom::Free(x.clone()),
        },
        EffectAtom::Loc(i, t) => CanonAtom::Loc(*i, t.canon(binders)),
    }
}

impl PartialEq for Type {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Type {}

impl PartialOrd for Type {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Type {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self, other) {
            (Type::Int, Type::Int) | (Type::IntList, Type::IntList) | (Type::Top, Type::Top) => {
                Ordering::Equal
            }
            _ => self.canon(&mut Vec::new()).cmp(&other.canon(&mut Vec::new())),
        }
    }
}

/// Primitive operators.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum OpName {
    Add,
    Sub,
    Mul,
    IsZero,
    Inc,
    Dec,
    Cons,
    Length,
    Head,
    Tail,
}

impl OpName {
    pub const ALL: [OpName; 10] = [
        OpName::Add,
        OpName::Sub,
        OpName::Mul,
        OpName::IsZero,
        OpName::Inc,
        OpName::Dec,
        OpName::Cons,
        OpName::Length,
        OpName::Head,
        OpName::Tail,
    ];

    pub fn symbol(self) -> &'static str {
        match self {
            OpName::Add => "+",
            OpName::Sub => "-",
            OpName::Mul => "*",
            OpName::IsZero => "iszero",
            OpName::Inc => "inc",
            OpName::Dec => "dec",
            OpName::Cons => "cons",
            OpName::Length => "length",
            OpName::Head => "head",
            OpName::Tail => "tail",
        }
    }

    pub fn is_infix(self) -> bool {
        matches!(self, OpName::Add | OpName::Sub | OpName::Mul)
    }

    /// Named (call-style) operator for an identifier, if any.
    pub fn from_name(name: &str) -> Option<OpName> {
        OpName::ALL
            .into_iter()
            .find(|op| !op.is_infix() && op.symbol() == name)
    }
}

/// Expressions. `Loc` and `List` with elements appear only in internal terms.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Expr {
    Var(Name),
    Loc(usize, Type),
    Num(i64),
    List(Vec<i64>),
    Prim(OpName, Vec<Expr>),
    Fun(Box<FunExpr>),
    EffAbs(Name, Box<Expr>),
    EffApp(Box<Expr>, EffectAtom),
    Let(Name, Box<Expr>, Box<Expr>),
    Fix(Name, Type, Box<Expr>),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FunExpr {
    pub params: Vec<(Name, Type)>,
    /// Capture-list sugar; empty after desugaring.
    pub captures: Vec<Name>,
    pub effect: Effect,
    /// Absent in surface programs, filled in by the checker.
    pub ret: Option<Type>,
    pub body: Stmt,
}

impl Expr {
    pub fn var(name: impl Into<Name>) -> Expr {
        Expr::Var(name.into())
    }

    pub fn nil() -> Expr {
        Expr::List(Vec::new())
    }

    pub fn prim(op: OpName, args: Vec<Expr>) -> Expr {
        Expr::Prim(op, args)
    }

    pub fn fun(params: Vec<(Name, Type)>, effect: Effect, ret: Option<Type>, body: Stmt) -> Expr {
        Expr::Fun(Box::new(FunExpr {
            params,
            captures: Vec::new(),
            effect,
            ret,
            body,
        }))
    }

    pub fn let_in(x: impl Into<Name>, rhs: Expr, body: Expr) -> Expr {
        Expr::Let(x.into(), Box::new(rhs), Box::new(body))
    }

    pub fn fix(x: impl Into<Name>, ty: Type, body: Expr) -> Expr {
        Expr::Fix(x.into(), ty, Box::new(body))
    }

    pub fn eff_abs(x: impl Into<Name>, body: Expr) -> Expr {
        Expr::EffAbs(x.into(), Box::new(body))
    }

    pub fn eff_app(e: Expr, atom: EffectAtom) -> Expr {
        Expr::EffApp(Box::new(e), atom)
    }

    /// `fun` and effect-abstraction forms.
    pub fn is_abstraction(&self) -> bool {
        matches!(self, Expr::Fun(_) | Expr::EffAbs(..))
    }
}

/// Statements. Every control-flow path ends in `Return` or `TailCall`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Stmt {
    VarInit {
        var: Name,
        annot: Option<Type>,
        rhs: Expr,
        rest: Box<Stmt>,
        span: Span,
    },
    LetCall {
        var: Name,
        func: Expr,
        args: Vec<Expr>,
        rest: Box<Stmt>,
        span: Span,
    },
    TailCall {
        func: Expr,
        args: Vec<Expr>,
        span: Span,
    },
    Return {
        value: Expr,
        span: Span,
    },
    If {
        cond: Expr,
        then_branch: Box<Stmt>,
        else_branch: Box<Stmt>,
        span: Span,
    },
    /// `proc` sugar; removed by desugaring.
    Proc(Box<ProcDef>),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ProcDef {
    pub effect_params: Vec<Name>,
    pub name: Name,
    pub params: Vec<(Name, Type)>,
    pub captures: Vec<Name>,
    pub ret: Type,
    pub effect: Effect,
    pub body: Stmt,
    pub rest: Stmt,
    pub span: Span,
}

impl Stmt {
    pub fn ret(value: Expr) -> Stmt {
        Stmt::Return {
            value,
            span: Span::default(),
        }
    }

    pub fn var_init(var: impl Into<Name>, rhs: Expr, rest: Stmt) -> Stmt {
        Stmt::VarInit {
            var: var.into(),
            annot: None,
            rhs,
            rest: Box::new(rest),
            span: Span::default(),
        }
    }

    pub fn let_call(var: impl Into<Name>, func: Expr, args: Vec<Expr>, rest: Stmt) -> Stmt {
        Stmt::LetCall {
            var: var.into(),
            func,
            args,
            rest: Box::new(rest),
            span: Span::default(),
        }
    }

    pub fn tail_call(func: Expr, args: Vec<Expr>) -> Stmt {
        Stmt::TailCall {
            func,
            args,
            span: Span::default(),
        }
    }

    pub fn if_else(cond: Expr, then_branch: Stmt, else_branch: Stmt) -> Stmt {
        Stmt::If {
            cond,
            then_branch: Box::new(then_branch),
            else_branch: Box::new(else_branch),
            span: Span::default(),
        }
    }

    pub fn span(&self) -> Span {
        match self {
            Stmt::VarInit { span, .. }
            | Stmt::LetCall { span, .. }
            | Stmt::TailCall { span, .. }
            | Stmt::Return { span, .. }
            | Stmt::If { span, .. } => *span,
            Stmt::Proc(p) => p.span,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Program {
    pub body: Stmt,
}

impl Program {
    pub fn new(body: Stmt) -> Self {
        Program { body }
    }
}

/// Free effect atoms of a type.
pub fn fv_type(t: &Type) -> Effect {
    let mut out = Effect::empty();
    collect_fv(t, &mut Vec::new(), &mut out);
    out
}

fn collect_fv(t: &Type, bound: &mut Vec<Name>, out: &mut Effect) {
    match t {
        Type::Top | Type::Int | Type::IntList => {}
        Type::Func {
            params,
            ret,
            effect,
        } => {
            for p in params {
                collect_fv(p, bound, out);
            }
            for atom in effect.iter() {
                match atom {
                    EffectAtom::Var(x) if bound.contains(x) => {}
                    _ => {
                        out.insert(atom.clone());
                    }
                }
            }
            collect_fv(ret, bound, out);
        }
        Type::EffAll(x, body) => {
            bound.push(x.clone());
            collect_fv(body, bound, out);
            bound.pop();
        }
    }
}

/// Free term variables (including effect variables) of an expression.
pub fn free_vars_expr(e: &Expr) -> BTreeSet<Name> {
    let mut out = BTreeSet::new();
    FreeVars::default().expr(e, &mut out);
    out
}

pub fn free_vars_stmt(s: &Stmt) -> BTreeSet<Name> {
    let mut out = BTreeSet::new();
    FreeVars::default().stmt(s, &mut out);
    out
}

#[derive(Default)]
struct FreeVars {
    bound: Vec<Name>,
}

impl FreeVars {
    fn name(&self, x: &str, out: &mut BTreeSet<Name>) {
        if !self.bound.iter().any(|b| b == x) {
            out.insert(x.to_string());
        }
    }

    fn effect(&self, eff: &Effect, out: &mut BTreeSet<Name>) {
        for atom in eff.iter() {
            match atom {
                EffectAtom::Var(x) => self.name(x, out),
                EffectAtom::Loc(_, t) => self.ty(t, out),
            }
        }
    }

    fn ty(&self, t: &Type, out: &mut BTreeSet<Name>) {
        for atom in fv_type(t).iter() {
            match atom {
                EffectAtom::Var(x) => self.name(x, out),
                EffectAtom::Loc(_, t) => self.ty(t, out),
            }
        }
    }

    fn scoped<R>(&mut self, names: &[Name], f: impl FnOnce(&mut Self) -> R) -> R {
        let n = self.bound.len();
        self.bound.extend(names.iter().cloned());
        let r = f(self);
        self.bound.truncate(n);
        r
    }

    fn expr(&mut self, e: &Expr, out: &mut BTreeSet<Name>) {
        match e {
            Expr::Var(x) => self.name(x, out),
            Expr::Loc(_, t) => self.ty(t, out),
            Expr::Num(_) | Expr::List(_) => {}
            Expr::Prim(_, args) => args.iter().for_each(|a| self.expr(a, out)),
            Expr::Fun(f) => {
                for (_, t) in &f.params {
                    self.ty(t, out);
                }
                for c in &f.captures {
                    self.name(c, out);
                }
                self.effect(&f.effect, out);
                if let Some(t) = &f.ret {
                    self.ty(t, out);
                }
                let mut names: Vec<Name> = f.params.iter().map(|(x, _)| x.clone()).collect();
                names.extend(f.captures.iter().cloned());
                self.scoped(&names, |s| s.stmt(&f.body, out));
            }
            Expr::EffAbs(x, body) => self.scoped(std::slice::from_ref(x), |s| s.expr(body, out)),
            Expr::EffApp(e, atom) => {
                self.expr(e, out);
                self.effect(&Effect::singleton(atom.clone()), out);
            }
            Expr::Let(x, rhs, body) => {
                self.expr(rhs, out);
                self.scoped(std::slice::from_ref(x), |s| s.expr(body, out));
            }
            Expr::Fix(x, t, body) => {
                self.ty(t, out);
                self.scoped(std::slice::from_ref(x), |s| s.expr(body, out));
            }
        }
    }

    fn stmt(&mut self, s: &Stmt, out: &mut BTreeSet<Name>) {
        match s {
            Stmt::VarInit {
                var,
                annot,
                rhs,
                rest,
                ..
            } => {
                if let Some(t) = annot {
                    self.ty(t, out);
                }
                self.expr(rhs, out);
                self.scoped(std::slice::from_ref(var), |s| s.stmt(rest, out));
            }
            Stmt::LetCall {
                var,
                func,
                args,
                rest,
                ..
            } => {
                self.expr(func, out);
                args.iter().for_each(|a| self.expr(a, out));
                self.scoped(std::slice::from_ref(var), |s| s.stmt(rest, out));
            }
            Stmt::TailCall { func, args, .. } => {
                self.expr(func, out);
                args.iter().for_each(|a| self.expr(a, out));
            }
            Stmt::Return { value, .. } => self.expr(value, out),
            Stmt::If {
                cond,
                then_branch,
                else_branch,
                ..
            } => {
                self.expr(cond, out);
                self.stmt(then_branch, out);
                self.stmt(else_branch, out);
            }
            Stmt::Proc(p) => {
                for c in &p.captures {
                    self.name(c, out);
                }
                self.scoped(std::slice::from_ref(&p.name), |s| {
                    s.scoped(&p.effect_params, |s| {
                        for (_, t) in &p.params {
                            s.ty(t, out);
                        }
                        s.ty(&p.ret, out);
                        s.effect(&p.effect, out);
                        let mut names: Vec<Name> =
                            p.params.iter().map(|(x, _)| x.clone()).collect();
                        names.extend(p.captures.iter().cloned());
                        s.scoped(&names, |s| s.stmt(&p.body, out));
                    });
                    s.stmt(&p.rest, out);
                });
            }
        }
    }
}
