//! A region calculus, the translation into it, its type system and an
//! evaluator with LIFO region deallocation.
//!
//! Every stack variable of the source becomes a location in a region of its
//! own; reading the variable dereferences that location. Copy variables stay
//! plain variables.

pub mod check;
pub mod eval;
pub mod translate;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::ast::{Name, OpName};

pub use check::{region_typecheck, relate_env, RegionEnv, RegionTypeError, RegionTypeErrorKind};
pub use eval::{region_run, RegionOutcome, RegionStats, RegionTrap};
pub use translate::{
    translate_effect, translate_expr, translate_program, translate_stmt, translate_type, RegionMap,
    TranslateError, Translator,
};

/// A region: a name bound by `new` or `Λ`, or, at run time, the identity of
/// an allocated region.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Region {
    Name(Name),
    Id(usize),
}

impl Region {
    pub fn name(n: impl Into<Name>) -> Self {
        Region::Name(n.into())
    }
}

impl fmt::Display for Region {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Region::Name(n) => f.write_str(n),
            Region::Id(i) => write!(f, "@{i}"),
        }
    }
}

pub type RegionSet = BTreeSet<Region>;

#[derive(Clone, Debug)]
pub enum RegionType {
    Int,
    IntList,
    Arrow {
        params: Vec<RegionType>,
        ret: Box<RegionType>,
        effect: RegionSet,
    },
    RegAll(Name, Box<RegionType>),
    At(Box<RegionType>, Region),
}

impl RegionType {
    pub fn arrow(params: Vec<RegionType>, ret: RegionType, effect: RegionSet) -> Self {
        RegionType::Arrow {
            params,
            ret: Box::new(ret),
            effect,
        }
    }

    pub fn at(t: RegionType, r: Region) -> Self {
        RegionType::At(Box::new(t), r)
    }

    /// Free region names.
    pub fn free_regions(&self) -> RegionSet {
        let mut out = RegionSet::new();
        self.collect_free(&mut Vec::new(), &mut out);
        out
    }

    fn collect_free(&self, bound: &mut Vec<Name>, out: &mut RegionSet) {
        let mut add = |r: &Region, bound: &Vec<Name>| {
            if !matches!(r, Region::Name(n) if bound.contains(n)) {
                out.insert(r.clone());
            }
        };
        match self {
            RegionType::Int | RegionType::IntList => {}
            RegionType::Arrow {
                params,
                ret,
                effect,
            } => {
                for r in effect {
                    add(r, bound);
                }
                for p in params {
                    p.collect_free(bound, out);
                }
                ret.collect_free(bound, out);
            }
            RegionType::RegAll(x, body) => {
                bound.push(x.clone());
                body.collect_free(bound, out);
                bound.pop();
            }
            RegionType::At(t, r) => {
                add(r, bound);
                t.collect_free(bound, out);
            }
        }
    }

    /// `[ρ := r] T`, renaming bound regions that would capture `r`.
    pub fn subst(&self, rho: &str, r: &Region) -> RegionType {
        let sub = |x: &Region| match x {
            Region::Name(n) if n == rho => r.clone(),
            other => other.clone(),
        };
        match self {
            RegionType::Int | RegionType::IntList => self.clone(),
            RegionType::Arrow {
                params,
                ret,
                effect,
            } => RegionType::arrow(
                params.iter().map(|p| p.subst(rho, r)).collect(),
                ret.subst(rho, r),
                effect.iter().map(sub).collect(),
            ),
            RegionType::RegAll(x, body) if x == rho => self.clone(),
            RegionType::RegAll(x, body) => {
                if matches!(r, Region::Name(n) if n == x) {
                    let mut fresh = format!("{x}'");
                    let fv = body.free_regions();
                    while fv.contains(&Region::Name(fresh.clone())) {
                        fresh.push('\'');
                    }
                    let renamed = body.subst(x, &Region::Name(fresh.clone()));
                    RegionType::RegAll(fresh, Box::new(renamed.subst(rho, r)))
                } else {
                    RegionType::RegAll(x.clone(), Box::new(body.subst(rho, r)))
                }
            }
            RegionType::At(t, x) => RegionType::at(t.subst(rho, r), sub(x)),
        }
    }

    fn alpha_eq(&self, other: &RegionType, env: &mut Vec<(Name, Name)>) -> bool {
        fn region_eq(a: &Region, b: &Region, env: &[(Name, Name)]) -> bool {
            let lookup_l = |n: &Name| env.iter().rev().position(|(l, _)| l == n);
            let lookup_r = |n: &Name| env.iter().rev().position(|(_, r)| r == n);
            match (a, b) {
                (Region::Name(x), Region::Name(y)) => match (lookup_l(x), lookup_r(y)) {
                    (Some(i), Some(j)) => i == j,
                    (None, None) => x == y,
                    _ => false,
                },
                _ => a == b,
            }
        }
        fn set_eq(a: &RegionSet, b: &RegionSet, env: &[(Name, Name)]) -> bool {
            a.iter().all(|x| b.iter().any(|y| region_eq(x, y, env)))
                && b.iter().all(|y| a.iter().any(|x| region_eq(x, y, env)))
        }
        match (self, other) {
            (RegionType::Int, RegionType::Int) | (RegionType::IntList, RegionType::IntList) => true,
            (
                RegionType::Arrow {
                    params: p1,
                    ret: r1,
                    effect: e1,
                },
                RegionType::Arrow {
                    params: p2,
                    ret: r2,
                    effect: e2,
                },
            ) => {
                p1.len() == p2.len()
                    && p1.iter().zip(p2).all(|(a, b)| a.alpha_eq(b, env))
                    && r1.alpha_eq(r2, env)
                    && set_eq(e1, e2, env)
            }
            (RegionType::RegAll(x, b1), RegionType::RegAll(y, b2)) => {
                env.push((x.clone(), y.clone()));
                let eq = b1.alpha_eq(b2, env);
                env.pop();
                eq
            }
            (RegionType::At(t1, r1), RegionType::At(t2, r2)) => t1.alpha_eq(t2, env) && region_eq(r1, r2, env),
            _ => false,
        }
    }
}

/// Equality up to renaming of bound regions.
impl PartialEq for RegionType {
    fn eq(&self, other: &Self) -> bool {
        self.alpha_eq(other, &mut Vec::new())
    }
}

impl Eq for RegionType {}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Lam {
    /// `None` only in the `let` sugar, whose binder type is inferred.
    pub params: Vec<(Name, Option<RegionType>)>,
    pub effect: Option<RegionSet>,
    pub body: RegionTerm,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum RegionTerm {
    Var(Name),
    Num(i64),
    List(Vec<i64>),
    Prim(OpName, Vec<RegionTerm>),
    Lam(Box<Lam>),
    App(Box<RegionTerm>, Vec<RegionTerm>),
    Fix(Name, Option<RegionType>, Box<RegionTerm>),
    New(Name, Box<RegionTerm>),
    At(Box<RegionTerm>, Region),
    Deref(Box<RegionTerm>, Region),
    RegLam(Name, Box<RegionTerm>),
    RegApp(Box<RegionTerm>, Region),
    If(Box<RegionTerm>, Box<RegionTerm>, Box<RegionTerm>),
    /// A run-time location: region and offset.
    Loc(usize, usize),
}

impl RegionTerm {
    /// `let x = rhs in body`, i.e. `(λx. body) rhs`.
    pub fn let_in(x: impl Into<Name>, rhs: RegionTerm, body: RegionTerm) -> Self {
        RegionTerm::App(
            Box::new(RegionTerm::Lam(Box::new(Lam {
                params: vec![(x.into(), None)],
                effect: None,
                body,
            }))),
            vec![rhs],
        )
    }

    /// Recognizes the `let` sugar.
    pub fn as_let(&self) -> Option<(&Name, &RegionTerm, &RegionTerm)> {
        match self {
            RegionTerm::App(head, args) if args.len() == 1 => match &**head {
                RegionTerm::Lam(l) if l.effect.is_none() && l.params.len() == 1 && l.params[0].1.is_none() => {
                    Some((&l.params[0].0, &args[0], &l.body))
                }
                _ => None,
            },
            _ => None,
        }
    }

    pub fn new_region(r: impl Into<Name>, body: RegionTerm) -> Self {
        RegionTerm::New(r.into(), Box::new(body))
    }

    pub fn at(t: RegionTerm, r: Region) -> Self {
        RegionTerm::At(Box::new(t), r)
    }

    pub fn deref(t: RegionTerm, r: Region) -> Self {
        RegionTerm::Deref(Box::new(t), r)
    }

    pub fn is_value(&self) -> bool {
        matches!(
            self,
            RegionTerm::Num(_) | RegionTerm::List(_) | RegionTerm::Lam(_) | RegionTerm::RegLam(..) | RegionTerm::Loc(..)
        )
    }

    /// Every region name bound by `new` or `Λ`, in order of occurrence.
    pub fn region_binders(&self) -> Vec<Name> {
        let mut out = Vec::new();
        self.walk(&mut |t| {
            if let RegionTerm::New(r, _) | RegionTerm::RegLam(r, _) = t {
                out.push(r.clone());
            }
        });
        out
    }

    fn walk(&self, f: &mut impl FnMut(&RegionTerm)) {
        f(self);
        match self {
            RegionTerm::Var(_) | RegionTerm::Num(_) | RegionTerm::List(_) | RegionTerm::Loc(..) => {}
            RegionTerm::Prim(_, args) => args.iter().for_each(|a| a.walk(f)),
            RegionTerm::Lam(l) => l.body.walk(f),
            RegionTerm::App(h, args) => {
                h.walk(f);
                args.iter().for_each(|a| a.walk(f));
            }
            RegionTerm::Fix(_, _, b)
            | RegionTerm::New(_, b)
            | RegionTerm::At(b, _)
            | RegionTerm::Deref(b, _)
            | RegionTerm::RegLam(_, b)
            | RegionTerm::RegApp(b, _) => b.walk(f),
            RegionTerm::If(c, t, e) => {
                c.walk(f);
                t.walk(f);
                e.walk(f);
            }
        }
    }
}

fn effect_text(e: &RegionSet) -> String {
    e.iter().map(|r| r.to_string()).collect::<Vec<_>>().join(",")
}

impl fmt::Display for RegionType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RegionType::Int => f.write_str("int"),
            RegionType::IntList => f.write_str("int list"),
            RegionType::Arrow {
                params,
                ret,
                effect,
            } => {
                let ps: Vec<String> = params.iter().map(|p| p.to_string()).collect();
                write!(f, "({}) -[{}]-> {ret}", ps.join(", "), effect_text(effect))
            }
            RegionType::RegAll(x, body) => write!(f, "forall {x}. {body}"),
            RegionType::At(t, r) => match **t {
                RegionType::Arrow { .. } | RegionType::RegAll(..) => write!(f, "({t}) at {r}"),
                _ => write!(f, "{t} at {r}"),
            },
        }
    }
}

impl RegionTerm {
    fn is_atomic(&self) -> bool {
        matches!(
            self,
            RegionTerm::Var(_)
                | RegionTerm::Num(_)
                | RegionTerm::List(_)
                | RegionTerm::Prim(..)
                | RegionTerm::Loc(..)
                | RegionTerm::At(..)
                | RegionTerm::Deref(..)
                | RegionTerm::RegApp(..)
        ) || (matches!(self, RegionTerm::App(..)) && self.as_let().is_none())
    }
}

struct Operand<'a>(&'a RegionTerm);

impl fmt::Display for Operand<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_atomic() {
            self.0.fmt(f)
        } else {
            write!(f, "({})", self.0)
        }
    }
}

fn args_text(args: &[RegionTerm]) -> String {
    args.iter().map(|a| a.to_string()).collect::<Vec<_>>().join(", ")
}

impl fmt::Display for RegionTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some((x, rhs, body)) = self.as_let() {
            return write!(f, "let {x} = {rhs} in {body}");
        }
        match self {
            RegionTerm::Var(x) => f.write_str(x),
            RegionTerm::Num(n) => write!(f, "{n}"),
            RegionTerm::List(l) if l.is_empty() => f.write_str("nil"),
            RegionTerm::List(l) => {
                let items: Vec<String> = l.iter().map(|n| n.to_string()).collect();
                write!(f, "list[{}]", items.join(","))
            }
            RegionTerm::Prim(op, args) if op.is_infix() && args.len() == 2 => {
                write!(f, "({} {} {})", Operand(&args[0]), op.symbol(), Operand(&args[1]))
            }
            RegionTerm::Prim(op, args) => write!(f, "{}({})", op.symbol(), args_text(args)),
            RegionTerm::Lam(l) => {
                let ps: Vec<String> = l
                    .params
                    .iter()
                    .map(|(x, t)| match t {
                        Some(t) => format!("{x}:{t}"),
                        None => x.clone(),
                    })
                    .collect();
                f.write_str("lam(")?;
                f.write_str(&ps.join(", "))?;
                f.write_str(")")?;
                if let Some(e) = &l.effect {
                    write!(f, "[{}]", effect_text(e))?;
                }
                write!(f, ". {}", l.body)
            }
            RegionTerm::App(h, args) => write!(f, "{}({})", Operand(h), args_text(args)),
            RegionTerm::Fix(x, _, b) => write!(f, "fix {x}. {b}"),
            RegionTerm::New(r, b) => write!(f, "new {r}. {b}"),
            RegionTerm::At(t, r) => write!(f, "{} at {r}", Operand(t)),
            RegionTerm::Deref(t, r) => write!(f, "{} ! {r}", Operand(t)),
            RegionTerm::RegLam(r, b) => write!(f, "Lam {r}. {b}"),
            RegionTerm::RegApp(t, r) => write!(f, "{}[{r}]", Operand(t)),
            RegionTerm::If(c, t, e) => write!(f, "if {c} then {t} else {e}"),
            RegionTerm::Loc(r, o) => write!(f, "loc(@{r}, {o})"),
        }
    }
}

/// Maps source variables to regions, for diagnostics.
pub fn describe_map(r: &BTreeMap<Name, Region>) -> String {
    r.iter().map(|(x, rho)| format!("{x}->{rho}")).collect::<Vec<_>>().join(", ")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn let_sugar_prints_as_let() {
        let t = RegionTerm::new_region(
            "r1",
            RegionTerm::let_in(
                "x",
                RegionTerm::at(RegionTerm::Num(1), Region::name("r1")),
                RegionTerm::deref(RegionTerm::Var("x".into()), Region::name("r1")),
            ),
        );
        assert_eq!(t.to_string(), "new r1. let x = 1 at r1 in x ! r1");
    }

    #[test]
    fn types_compare_up_to_bound_names() {
        let a = RegionType::RegAll(
            "p".into(),
            Box::new(RegionType::arrow(vec![RegionType::Int], RegionType::Int, [Region::name("p")].into())),
        );
        let b = RegionType::RegAll(
            "q".into(),
            Box::new(RegionType::arrow(vec![RegionType::Int], RegionType::Int, [Region::name("q")].into())),
        );
        assert_eq!(a, b);
        assert!(a.free_regions().is_empty());
        let c = RegionType::arrow(vec![], RegionType::Int, [Region::name("q")].into());
        assert_ne!(c, RegionType::arrow(vec![], RegionType::Int, [Region::name("p")].into()));
    }

    #[test]
    fn substitution_avoids_capture() {
        let t = RegionType::RegAll(
            "q".into(),
            Box::new(RegionType::arrow(
                vec![],
                RegionType::Int,
                [Region::name("p"), Region::name("q")].into(),
            )),
        );
        let s = t.subst("p", &Region::name("q"));
        assert_eq!(s.free_regions(), [Region::name("q")].into());
    }
}
