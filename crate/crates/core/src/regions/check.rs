//! The region type system.
//!
//! `Γ; φ ⊢ r : T` where `φ` is the set of regions the term may touch.
//! Allocating with `at ρ` and reading with `! ρ` both need `ρ ∈ φ`; calling
//! a function needs its latent effect in `φ`; `new ρ. r` checks `r` under
//! `φ ∪ {ρ}` and forbids `ρ` in the result type.

use serde::Serialize;

use super::translate::{translate_type, RegionMap, TranslateError};
use super::{Region, RegionSet, RegionTerm, RegionType};
use crate::ast::{Name, Type};
use crate::ops::typeof_op;
use crate::typecheck::{Binding, TypeEnv};

pub type RegionEnv = Vec<(Name, RegionType)>;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum RegionTypeErrorKind {
    Unbound,
    Mismatch,
    EffectViolation,
    RegionEscape,
    Arity,
    Unannotated,
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
#[error("{kind:?}: {message}")]
pub struct RegionTypeError {
    pub kind: RegionTypeErrorKind,
    pub message: String,
}

fn fail<T>(kind: RegionTypeErrorKind, message: impl Into<String>) -> Result<T, RegionTypeError> {
    Err(RegionTypeError {
        kind,
        message: message.into(),
    })
}

/// `Γ ∼_R Γr`, using the rule without the auxiliary binding: `top`
/// bindings vanish, copies keep their translated type, stack variables get
/// `⟦T⟧ at R(x)`. Also checks `Γ ⊢ R`.
pub fn relate_env(gamma: &TypeEnv, r: &RegionMap) -> Result<RegionEnv, TranslateError> {
    for x in r.keys() {
        if !matches!(gamma.lookup(x), Some(Binding::Plain(_))) {
            return Err(TranslateError::Unmapped(x.clone()));
        }
    }
    let mut out = RegionEnv::new();
    for (x, b) in gamma.iter() {
        match b {
            Binding::Plain(Type::Top) => {}
            Binding::Plain(t) => {
                let rho = r.get(x).ok_or_else(|| TranslateError::Unmapped(x.clone()))?;
                out.push((x.clone(), RegionType::at(translate_type(t, r)?, rho.clone())));
            }
            Binding::Copy(t) => out.push((x.clone(), translate_type(t, r)?)),
        }
    }
    Ok(out)
}

struct Checker {
    env: RegionEnv,
    scope: Vec<Region>,
}

fn op_type(t: &Type) -> RegionType {
    match t {
        Type::IntList => RegionType::IntList,
        _ => RegionType::Int,
    }
}

impl Checker {
    fn wf(&self, t: &RegionType) -> Result<(), RegionTypeError> {
        for r in t.free_regions() {
            if !self.scope.contains(&r) {
                return fail(RegionTypeErrorKind::Unbound, format!("region {r} in {t} is not in scope"));
            }
        }
        Ok(())
    }

    fn with<T>(&mut self, binds: Vec<(Name, RegionType)>, f: impl FnOnce(&mut Self) -> T) -> T {
        let n = self.env.len();
        self.env.extend(binds);
        let r = f(self);
        self.env.truncate(n);
        r
    }

    fn with_region<T>(&mut self, rho: Region, f: impl FnOnce(&mut Self) -> T) -> T {
        self.scope.push(rho);
        let r = f(self);
        self.scope.pop();
        r
    }

    fn need(&self, rho: &Region, eff: &RegionSet, what: &str) -> Result<(), RegionTypeError> {
        if eff.contains(rho) {
            Ok(())
        } else {
            fail(
                RegionTypeErrorKind::EffectViolation,
                format!("{what} region {rho} outside the effect {{{}}}", super::effect_text(eff)),
            )
        }
    }

    fn term(&mut self, eff: &RegionSet, t: &RegionTerm) -> Result<RegionType, RegionTypeError> {
        if let Some((x, rhs, body)) = t.as_let() {
            let t1 = self.term(eff, rhs)?;
            return self.with(vec![(x.clone(), t1)], |c| c.term(eff, body));
        }
        match t {
            RegionTerm::Var(x) => match self.env.iter().rev().find(|(y, _)| y == x) {
                Some((_, t)) => Ok(t.clone()),
                None => fail(RegionTypeErrorKind::Unbound, format!("unbound variable `{x}`")),
            },
            RegionTerm::Num(_) => Ok(RegionType::Int),
            RegionTerm::List(_) => Ok(RegionType::IntList),
            RegionTerm::Prim(op, args) => {
                let (params, ret) = typeof_op(*op);
                if params.len() != args.len() {
                    return fail(RegionTypeErrorKind::Arity, format!("`{}` takes {} arguments", op.symbol(), params.len()));
                }
                for (p, a) in params.iter().zip(args) {
                    let ta = self.term(eff, a)?;
                    if ta != op_type(p) {
                        return fail(
                            RegionTypeErrorKind::Mismatch,
                            format!("`{}` expects {}, found {ta}", op.symbol(), op_type(p)),
                        );
                    }
                }
                Ok(op_type(&ret))
            }
            RegionTerm::Lam(l) => {
                let mut binds = Vec::new();
                for (x, ann) in &l.params {
                    let Some(ann) = ann else {
                        return fail(RegionTypeErrorKind::Unannotated, format!("parameter `{x}` lacks a type"));
                    };
                    self.wf(ann)?;
                    binds.push((x.clone(), ann.clone()));
                }
                let Some(latent) = &l.effect else {
                    return fail(RegionTypeErrorKind::Unannotated, "function lacks a latent effect");
                };
                for r in latent {
                    if !self.scope.contains(r) {
                        return fail(RegionTypeErrorKind::Unbound, format!("region {r} is not in scope"));
                    }
                }
                let params = binds.iter().map(|(_, t)| t.clone()).collect();
                let ret = self.with(binds, |c| c.term(latent, &l.body))?;
                Ok(RegionType::arrow(params, ret, latent.clone()))
            }
            RegionTerm::App(head, args) => {
                let th = self.term(eff, head)?;
                let RegionType::Arrow {
                    params,
                    ret,
                    effect,
                } = th
                else {
                    return fail(RegionTypeErrorKind::Mismatch, format!("applied a term of type {th}"));
                };
                if params.len() != args.len() {
                    return fail(
                        RegionTypeErrorKind::Arity,
                        format!("function takes {} arguments, given {}", params.len(), args.len()),
                    );
                }
                for (p, a) in params.iter().zip(args) {
                    let ta = self.term(eff, a)?;
                    if ta != *p {
                        return fail(RegionTypeErrorKind::Mismatch, format!("argument: expected {p}, found {ta}"));
                    }
                }
                for rho in &effect {
                    self.need(rho, eff, "call touches")?;
                }
                Ok(*ret)
            }
            RegionTerm::Fix(x, ann, body) => {
                let Some(ann) = ann else {
                    return fail(RegionTypeErrorKind::Unannotated, format!("`fix {x}` lacks a type"));
                };
                self.wf(ann)?;
                let tb = self.with(vec![(x.clone(), ann.clone())], |c| c.term(eff, body))?;
                if tb != *ann {
                    return fail(RegionTypeErrorKind::Mismatch, format!("`fix {x}`: annotation {ann}, body {tb}"));
                }
                Ok(tb)
            }
            RegionTerm::New(rho, body) => {
                let region = Region::Name(rho.clone());
                if self.scope.contains(&region) {
                    return fail(RegionTypeErrorKind::Mismatch, format!("region {rho} is already in scope"));
                }
                let mut inner = eff.clone();
                inner.insert(region.clone());
                let tb = self.with_region(region.clone(), |c| c.term(&inner, body))?;
                if tb.free_regions().contains(&region) {
                    return fail(
                        RegionTypeErrorKind::RegionEscape,
                        format!("type {tb} escapes the scope of region {rho}"),
                    );
                }
                Ok(tb)
            }
            RegionTerm::At(body, rho) => {
                self.need(rho, eff, "allocation in")?;
                Ok(RegionType::at(self.term(eff, body)?, rho.clone()))
            }
            RegionTerm::Deref(body, rho) => {
                self.need(rho, eff, "read from")?;
                match self.term(eff, body)? {
                    RegionType::At(t, r) if r == *rho => Ok(*t),
                    other => fail(
                        RegionTypeErrorKind::Mismatch,
                        format!("dereference at {rho} of a term of type {other}"),
                    ),
                }
            }
            RegionTerm::RegLam(rho, body) => {
                let region = Region::Name(rho.clone());
                if self.scope.contains(&region) {
                    return fail(RegionTypeErrorKind::Mismatch, format!("region {rho} is already in scope"));
                }
                let tb = self.with_region(region, |c| c.term(&RegionSet::new(), body))?;
                Ok(RegionType::RegAll(rho.clone(), Box::new(tb)))
            }
            RegionTerm::RegApp(body, rho) => {
                if !self.scope.contains(rho) {
                    return fail(RegionTypeErrorKind::Unbound, format!("region {rho} is not in scope"));
                }
                match self.term(eff, body)? {
                    RegionType::RegAll(x, t) => Ok(t.subst(&x, rho)),
                    other => fail(RegionTypeErrorKind::Mismatch, format!("region application to {other}")),
                }
            }
            RegionTerm::If(c, th, el) => {
                let tc = self.term(eff, c)?;
                if tc != RegionType::Int {
                    return fail(RegionTypeErrorKind::Mismatch, format!("condition has type {tc}"));
                }
                let t1 = self.term(eff, th)?;
                let t2 = self.term(eff, el)?;
                if t1 != t2 {
                    return fail(RegionTypeErrorKind::Mismatch, format!("branches have types {t1} and {t2}"));
                }
                Ok(t1)
            }
            RegionTerm::Loc(..) => fail(RegionTypeErrorKind::Mismatch, "run-time location in a source term"),
        }
    }
}

/// Types a term. The regions in scope are those free in `env` and `eff`.
pub fn region_typecheck(env: &RegionEnv, eff: &RegionSet, t: &RegionTerm) -> Result<RegionType, RegionTypeError> {
    let mut scope: Vec<Region> = eff.iter().cloned().collect();
    for (_, ty) in env {
        scope.extend(ty.free_regions());
    }
    Checker {
        env: env.clone(),
        scope,
    }
    .term(eff, t)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frontend::load;
    use crate::regions::translate::translate_program;
    use crate::typecheck::check_program;

    fn r1() -> Region {
        Region::name("r1")
    }

    #[test]
    fn allocate_then_read() {
        let t = RegionTerm::new_region(
            "r1",
            RegionTerm::let_in(
                "x",
                RegionTerm::at(RegionTerm::Num(1), r1()),
                RegionTerm::deref(RegionTerm::Var("x".into()), r1()),
            ),
        );
        assert_eq!(region_typecheck(&vec![], &RegionSet::new(), &t), Ok(RegionType::Int));
    }

    #[test]
    fn location_cannot_escape() {
        let t = RegionTerm::new_region("r1", RegionTerm::at(RegionTerm::Num(1), r1()));
        assert_eq!(
            region_typecheck(&vec![], &RegionSet::new(), &t).unwrap_err().kind,
            RegionTypeErrorKind::RegionEscape
        );
    }

    #[test]
    fn read_needs_the_region() {
        let env = vec![("x".to_string(), RegionType::at(RegionType::Int, r1()))];
        let t = RegionTerm::deref(RegionTerm::Var("x".into()), r1());
        assert_eq!(
            region_typecheck(&env, &RegionSet::new(), &t).unwrap_err().kind,
            RegionTypeErrorKind::EffectViolation
        );
        assert_eq!(region_typecheck(&env, &[r1()].into(), &t), Ok(RegionType::Int));
    }

    #[test]
    fn relate() {
        assert!(relate_env(&TypeEnv::new(), &RegionMap::new()).unwrap().is_empty());
        let g = TypeEnv::new().plain("x", Type::Int);
        let r: RegionMap = [("x".to_string(), r1())].into();
        assert_eq!(
            relate_env(&g, &r).unwrap(),
            vec![("x".to_string(), RegionType::at(RegionType::Int, r1()))]
        );
        let g = TypeEnv::new().plain("p", Type::Top);
        let r: RegionMap = [("p".to_string(), r1())].into();
        assert!(relate_env(&g, &r).unwrap().is_empty());
        assert!(relate_env(&TypeEnv::new(), &r).is_err());
    }

    #[test]
    fn translation_of_twice_program() {
        let src = "var x = 1;\n\
                   var addx = fun(y:int)[x]{ return x + y; };\n\
                   var twice = fun(f: func(int,int,[x]), z:int)[x]{ var a = f(z); return f(a); };\n\
                   var b = twice(addx, 3);\n\
                   return b;";
        let cp = check_program(&load("t.fk", src).unwrap().ast).unwrap();
        let t = translate_program(&cp.program).unwrap();
        assert_eq!(region_typecheck(&vec![], &RegionSet::new(), &t), Ok(RegionType::Int));
    }
}
