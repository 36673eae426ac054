//! Type-directed translation of checked, uniquified programs into the region
//! calculus. Each stack variable gets a fresh region `rK` from one counter.

use std::collections::BTreeMap;

use super::{Lam, Region, RegionSet, RegionTerm, RegionType};
use crate::ast::{Effect, EffectAtom, Expr, Name, Program, Stmt, Type};

/// `R`: stack variables to regions.
pub type RegionMap = BTreeMap<Name, Region>;

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum TranslateError {
    #[error("effect variable `{0}` has no region")]
    Unmapped(Name),
    #[error("stack location in a source term")]
    Location,
    #[error("`top` has no region-calculus counterpart")]
    Top,
    #[error("`proc` must be desugared before translation")]
    Proc,
}

pub fn translate_effect(eff: &Effect, r: &RegionMap) -> Result<RegionSet, TranslateError> {
    eff.iter()
        .map(|a| match a {
            EffectAtom::Var(x) => r.get(x).cloned().ok_or_else(|| TranslateError::Unmapped(x.clone())),
            EffectAtom::Loc(..) => Err(TranslateError::Location),
        })
        .collect()
}

pub fn translate_type(t: &Type, r: &RegionMap) -> Result<RegionType, TranslateError> {
    Ok(match t {
        Type::Top => return Err(TranslateError::Top),
        Type::Int => RegionType::Int,
        Type::IntList => RegionType::IntList,
        Type::Func {
            params,
            ret,
            effect,
        } => RegionType::arrow(
            params.iter().map(|p| translate_type(p, r)).collect::<Result<_, _>>()?,
            translate_type(ret, r)?,
            translate_effect(effect, r)?,
        ),
        Type::EffAll(x, body) => {
            // The bound region takes the variable's name, primed if some
            // outer variable already maps to a region of that name.
            let mut rho = x.clone();
            while r.values().any(|v| *v == Region::Name(rho.clone())) {
                rho.push('\'');
            }
            let mut inner = r.clone();
            inner.insert(x.clone(), Region::Name(rho.clone()));
            RegionType::RegAll(rho, Box::new(translate_type(body, &inner)?))
        }
    })
}

/// Holds the fresh-name counter shared by one translation.
#[derive(Debug, Default)]
pub struct Translator {
    regions: usize,
    temps: usize,
}

impl Translator {
    pub fn new() -> Self {
        Translator::default()
    }

    fn fresh_region(&mut self) -> Name {
        self.regions += 1;
        format!("r{}", self.regions)
    }

    fn fresh_temp(&mut self) -> Name {
        self.temps += 1;
        format!("%y{}", self.temps)
    }

    pub fn expr(&mut self, e: &Expr, r: &RegionMap) -> Result<RegionTerm, TranslateError> {
        Ok(match e {
            Expr::Var(x) => match r.get(x) {
                Some(rho) => RegionTerm::deref(RegionTerm::Var(x.clone()), rho.clone()),
                None => RegionTerm::Var(x.clone()),
            },
            Expr::Loc(..) => return Err(TranslateError::Location),
            Expr::Num(n) => RegionTerm::Num(*n),
            Expr::List(l) => RegionTerm::List(l.clone()),
            Expr::Prim(op, args) => RegionTerm::Prim(*op, self.exprs(args, r)?),
            Expr::Fun(f) => {
                let mut params = Vec::new();
                let mut inner = r.clone();
                let mut wrappers = Vec::new();
                for (x, t) in &f.params {
                    let y = self.fresh_temp();
                    let rho = self.fresh_region();
                    params.push((y.clone(), Some(translate_type(t, r)?)));
                    inner.insert(x.clone(), Region::Name(rho.clone()));
                    wrappers.push((x.clone(), y, rho));
                }
                let body = self.stmt(&f.body, &inner)?;
                let body = wrappers.into_iter().rev().fold(body, |body, (x, y, rho)| {
                    let region = Region::Name(rho.clone());
                    RegionTerm::new_region(
                        rho,
                        RegionTerm::let_in(x, RegionTerm::at(RegionTerm::Var(y), region), body),
                    )
                });
                RegionTerm::Lam(Box::new(Lam {
                    params,
                    effect: Some(translate_effect(&f.effect, r)?),
                    body,
                }))
            }
            Expr::EffAbs(x, body) => {
                let rho = self.fresh_region();
                let mut inner = r.clone();
                inner.insert(x.clone(), Region::Name(rho.clone()));
                RegionTerm::RegLam(rho, Box::new(self.expr(body, &inner)?))
            }
            Expr::EffApp(head, atom) => {
                let head = self.expr(head, r)?;
                let rho = translate_effect(&Effect::singleton(atom.clone()), r)?
                    .into_iter()
                    .next()
                    .expect("singleton");
                RegionTerm::RegApp(Box::new(head), rho)
            }
            Expr::Let(x, rhs, body) => {
                let rhs = self.expr(rhs, r)?;
                let body = self.expr(body, &without(r, x))?;
                RegionTerm::let_in(x.clone(), rhs, body)
            }
            Expr::Fix(x, t, body) => RegionTerm::Fix(
                x.clone(),
                Some(translate_type(t, r)?),
                Box::new(self.expr(body, &without(r, x))?),
            ),
        })
    }

    fn exprs(&mut self, es: &[Expr], r: &RegionMap) -> Result<Vec<RegionTerm>, TranslateError> {
        es.iter().map(|e| self.expr(e, r)).collect()
    }

    /// Binds `x` to `value at ρ` in a fresh region and translates `rest`.
    fn allocate(
        &mut self,
        x: &Name,
        value: impl FnOnce(&mut Self) -> Result<RegionTerm, TranslateError>,
        rest: &Stmt,
        r: &RegionMap,
    ) -> Result<RegionTerm, TranslateError> {
        let rho = self.fresh_region();
        let region = Region::Name(rho.clone());
        let value = value(self)?;
        let mut inner = r.clone();
        inner.insert(x.clone(), region.clone());
        let rest = self.stmt(rest, &inner)?;
        Ok(RegionTerm::new_region(
            rho,
            RegionTerm::let_in(x.clone(), RegionTerm::at(value, region), rest),
        ))
    }

    pub fn stmt(&mut self, s: &Stmt, r: &RegionMap) -> Result<RegionTerm, TranslateError> {
        match s {
            Stmt::VarInit { var, rhs, rest, .. } => self.allocate(var, |t| t.expr(rhs, r), rest, r),
            Stmt::LetCall {
                var, func, args, rest, ..
            } => self.allocate(
                var,
                |t| {
                    let head = t.expr(func, r)?;
                    Ok(RegionTerm::App(Box::new(head), t.exprs(args, r)?))
                },
                rest,
                r,
            ),
            Stmt::TailCall { func, args, .. } => {
                let head = self.expr(func, r)?;
                Ok(RegionTerm::App(Box::new(head), self.exprs(args, r)?))
            }
            Stmt::Return { value, .. } => self.expr(value, r),
            Stmt::If {
                cond,
                then_branch,
                else_branch,
                ..
            } => Ok(RegionTerm::If(
                Box::new(self.expr(cond, r)?),
                Box::new(self.stmt(then_branch, r)?),
                Box::new(self.stmt(else_branch, r)?),
            )),
            Stmt::Proc(_) => Err(TranslateError::Proc),
        }
    }
}

fn without(r: &RegionMap, x: &str) -> RegionMap {
    let mut r = r.clone();
    r.remove(x);
    r
}

pub fn translate_expr(e: &Expr, r: &RegionMap) -> Result<RegionTerm, TranslateError> {
    Translator::new().expr(e, r)
}

pub fn translate_stmt(s: &Stmt, r: &RegionMap) -> Result<RegionTerm, TranslateError> {
    Translator::new().stmt(s, r)
}

/// `⟦s⟧∅`.
pub fn translate_program(p: &Program) -> Result<RegionTerm, TranslateError> {
    translate_stmt(&p.body, &RegionMap::new())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frontend::load;
    use crate::typecheck::check_program;

    fn tr(src: &str) -> RegionTerm {
        let cp = check_program(&load("t.fk", src).unwrap().ast).unwrap();
        translate_program(&cp.program).unwrap()
    }

    #[test]
    fn types() {
        let r: RegionMap = [("x".to_string(), Region::name("r1"))].into();
        assert_eq!(translate_type(&Type::Int, &r).unwrap(), RegionType::Int);
        let f = Type::func(vec![Type::Int], Type::Int, Effect::from_vars(["x"]));
        assert_eq!(
            translate_type(&f, &r).unwrap(),
            RegionType::arrow(vec![RegionType::Int], RegionType::Int, [Region::name("r1")].into())
        );
        let poly = Type::eff_all("p", Type::func(vec![Type::Int], Type::Int, Effect::from_vars(["p"])));
        let RegionType::RegAll(rho, body) = translate_type(&poly, &RegionMap::new()).unwrap() else {
            panic!()
        };
        assert_eq!(
            *body,
            RegionType::arrow(vec![RegionType::Int], RegionType::Int, [Region::name(rho)].into())
        );
        assert_eq!(
            translate_type(&Type::func(vec![], Type::Int, Effect::from_vars(["z"])), &r),
            Err(TranslateError::Unmapped("z".into()))
        );
    }

    #[test]
    fn effects() {
        let r: RegionMap = [
            ("x".to_string(), Region::name("r1")),
            ("y".to_string(), Region::name("r1")),
        ]
        .into();
        assert_eq!(
            translate_effect(&Effect::from_vars(["x", "y"]), &r).unwrap(),
            [Region::name("r1")].into()
        );
        assert!(translate_effect(&Effect::empty(), &r).unwrap().is_empty());
    }

    #[test]
    fn init_and_return() {
        assert_eq!(tr("var x = 1; return x;").to_string(), "new r1. let x$1 = 1 at r1 in x$1 ! r1");
    }

    #[test]
    fn copies_are_not_dereferenced() {
        let t = tr("var f = fun(a:int)[]{ return a; }; var h = let g = f in fun(b:int)[]{ var c = g(b); return c; }; return 0;");
        let text = t.to_string();
        assert!(text.contains("let g$4 = f$1 ! r1 in"), "{text}");
        assert!(text.contains("g$4(b$5 ! r"), "{text}");
    }

    #[test]
    fn effect_application_uses_the_region() {
        let t = tr("var x = 1; var h = <p> fun()[p]{ return 0; }; var k = h<x>; return 0;");
        assert!(t.to_string().contains("h$2 ! r2[r1]"), "{t}");
    }

    #[test]
    fn binders_are_fresh() {
        let t = tr("var x = 1; var f = fun(a:int, b:int)[x]{ return a + b; }; var y = f(1, 2); return y;");
        let binders = t.region_binders();
        let set: std::collections::BTreeSet<_> = binders.iter().collect();
        assert_eq!(set.len(), binders.len());
        assert_eq!(binders.len(), 5);
    }
}
