//! Substitution-based evaluator for region terms.
//!
//! The evaluator keeps an explicit continuation stack. `new ρ. r` allocates
//! a region and substitutes its identity for `ρ`. The region is freed when
//! `r` produces a value. A freed region is tombstoned rather than reused, so
//! any later access to it traps as dangling.

use serde::Serialize;

use super::{Lam, Region, RegionTerm};
use crate::ast::OpName;
use crate::machine::Observation;
use crate::ops::{delta, PrimValue};

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum RegionTrap {
    #[error("dangling access to freed region @{region}")]
    Dangling { region: usize },
    #[error("stuck: {0}")]
    Stuck(String),
    #[error("fuel exhausted after {} steps", stats.steps)]
    FuelExhausted { stats: RegionStats },
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct RegionStats {
    pub steps: u64,
    pub regions_allocated: usize,
    pub max_live_regions: usize,
    /// Peak number of list cells stored in live regions.
    pub max_live_cells: usize,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RegionOutcome {
    pub observation: Observation,
    pub stats: RegionStats,
    /// The result was a bare location, reported as `fun`.
    pub opaque_location: bool,
}

enum Kont {
    Prim(OpName, Vec<PrimValue>, Vec<RegionTerm>),
    AppHead(Vec<RegionTerm>),
    AppArgs(Box<Lam>, Vec<RegionTerm>, Vec<RegionTerm>),
    At(usize),
    Deref(usize),
    Free(usize),
    RegApp(Region),
    If(Box<RegionTerm>, Box<RegionTerm>),
}

struct Store {
    regions: Vec<Option<Vec<RegionTerm>>>,
    live: Vec<usize>,
    cells: usize,
    stats: RegionStats,
}

fn cells(v: &RegionTerm) -> usize {
    match v {
        RegionTerm::List(l) => l.len(),
        _ => 0,
    }
}

impl Store {
    fn alloc(&mut self) -> usize {
        self.regions.push(Some(Vec::new()));
        self.live.push(self.regions.len() - 1);
        self.stats.regions_allocated += 1;
        self.stats.max_live_regions = self.stats.max_live_regions.max(self.live.len());
        self.regions.len() - 1
    }

    fn free(&mut self, id: usize) -> Result<(), RegionTrap> {
        if self.live.last() != Some(&id) {
            return Err(RegionTrap::Stuck(format!("region @{id} freed out of LIFO order")));
        }
        self.live.pop();
        let freed = self.regions[id].take().unwrap_or_default();
        self.cells -= freed.iter().map(cells).sum::<usize>();
        Ok(())
    }

    fn region(&mut self, id: usize) -> Result<&mut Vec<RegionTerm>, RegionTrap> {
        match self.regions.get_mut(id) {
            Some(Some(r)) => Ok(r),
            Some(None) => Err(RegionTrap::Dangling { region: id }),
            None => Err(RegionTrap::Stuck(format!("unknown region @{id}"))),
        }
    }

    fn put(&mut self, id: usize, v: RegionTerm) -> Result<RegionTerm, RegionTrap> {
        let c = cells(&v);
        let r = self.region(id)?;
        r.push(v);
        let loc = RegionTerm::Loc(id, r.len() - 1);
        self.cells += c;
        self.stats.max_live_cells = self.stats.max_live_cells.max(self.cells);
        Ok(loc)
    }
}

fn region_id(r: &Region) -> Result<usize, RegionTrap> {
    match r {
        Region::Id(i) => Ok(*i),
        Region::Name(n) => Err(RegionTrap::Stuck(format!("unallocated region `{n}`"))),
    }
}

/// `[x := v] t` for a closed value `v`.
pub fn subst_var(x: &str, v: &RegionTerm, t: &RegionTerm) -> RegionTerm {
    let go = |t: &RegionTerm| subst_var(x, v, t);
    match t {
        RegionTerm::Var(y) if y == x => v.clone(),
        RegionTerm::Var(_) | RegionTerm::Num(_) | RegionTerm::List(_) | RegionTerm::Loc(..) => t.clone(),
        RegionTerm::Prim(op, args) => RegionTerm::Prim(*op, args.iter().map(go).collect()),
        RegionTerm::Lam(l) => {
            if l.params.iter().any(|(p, _)| p == x) {
                t.clone()
            } else {
                RegionTerm::Lam(Box::new(Lam {
                    params: l.params.clone(),
                    effect: l.effect.clone(),
                    body: go(&l.body),
                }))
            }
        }
        RegionTerm::App(h, args) => RegionTerm::App(Box::new(go(h)), args.iter().map(go).collect()),
        RegionTerm::Fix(y, _, _) if y == x => t.clone(),
        RegionTerm::Fix(y, ann, b) => RegionTerm::Fix(y.clone(), ann.clone(), Box::new(go(b))),
        RegionTerm::New(r, b) => RegionTerm::New(r.clone(), Box::new(go(b))),
        RegionTerm::At(b, r) => RegionTerm::At(Box::new(go(b)), r.clone()),
        RegionTerm::Deref(b, r) => RegionTerm::Deref(Box::new(go(b)), r.clone()),
        RegionTerm::RegLam(r, b) => RegionTerm::RegLam(r.clone(), Box::new(go(b))),
        RegionTerm::RegApp(b, r) => RegionTerm::RegApp(Box::new(go(b)), r.clone()),
        RegionTerm::If(c, a, b) => RegionTerm::If(Box::new(go(c)), Box::new(go(a)), Box::new(go(b))),
    }
}

/// `[ρ := r] t` on the term-level region positions. Type annotations are
/// inert at run time and left untouched.
pub fn subst_region(rho: &str, r: &Region, t: &RegionTerm) -> RegionTerm {
    let go = |t: &RegionTerm| subst_region(rho, r, t);
    let sub = |x: &Region| match x {
        Region::Name(n) if n == rho => r.clone(),
        other => other.clone(),
    };
    match t {
        RegionTerm::Var(_) | RegionTerm::Num(_) | RegionTerm::List(_) | RegionTerm::Loc(..) => t.clone(),
        RegionTerm::Prim(op, args) => RegionTerm::Prim(*op, args.iter().map(go).collect()),
        RegionTerm::Lam(l) => RegionTerm::Lam(Box::new(Lam {
            params: l.params.clone(),
            effect: l.effect.clone(),
            body: go(&l.body),
        })),
        RegionTerm::App(h, args) => RegionTerm::App(Box::new(go(h)), args.iter().map(go).collect()),
        RegionTerm::Fix(y, ann, b) => RegionTerm::Fix(y.clone(), ann.clone(), Box::new(go(b))),
        RegionTerm::New(x, _) | RegionTerm::RegLam(x, _) if x == rho => t.clone(),
        RegionTerm::New(x, b) => RegionTerm::New(x.clone(), Box::new(go(b))),
        RegionTerm::RegLam(x, b) => RegionTerm::RegLam(x.clone(), Box::new(go(b))),
        RegionTerm::At(b, x) => RegionTerm::At(Box::new(go(b)), sub(x)),
        RegionTerm::Deref(b, x) => RegionTerm::Deref(Box::new(go(b)), sub(x)),
        RegionTerm::RegApp(b, x) => RegionTerm::RegApp(Box::new(go(b)), sub(x)),
        RegionTerm::If(c, a, b) => RegionTerm::If(Box::new(go(c)), Box::new(go(a)), Box::new(go(b))),
    }
}

fn to_prim(v: RegionTerm, op: OpName) -> Result<PrimValue, RegionTrap> {
    match v {
        RegionTerm::Num(n) => Ok(PrimValue::Int(n)),
        RegionTerm::List(l) => Ok(PrimValue::List(l)),
        other => Err(RegionTrap::Stuck(format!("`{}` applied to {other}", op.symbol()))),
    }
}

fn from_prim(v: PrimValue) -> RegionTerm {
    match v {
        PrimValue::Int(n) => RegionTerm::Num(n),
        PrimValue::List(l) => RegionTerm::List(l),
    }
}

enum Mode {
    Eval(RegionTerm),
    Ret(RegionTerm),
}

fn apply(lam: Lam, args: Vec<RegionTerm>) -> Result<RegionTerm, RegionTrap> {
    if lam.params.len() != args.len() {
        return Err(RegionTrap::Stuck(format!(
            "function takes {} arguments, given {}",
            lam.params.len(),
            args.len()
        )));
    }
    let mut body = lam.body;
    for ((x, _), v) in lam.params.iter().zip(&args) {
        body = subst_var(x, v, &body);
    }
    Ok(body)
}

/// `eval_R`: runs a closed term, one unit of fuel per transition.
pub fn region_run(t: &RegionTerm, fuel: u64) -> Result<RegionOutcome, RegionTrap> {
    let mut store = Store {
        regions: Vec::new(),
        live: Vec::new(),
        cells: 0,
        stats: RegionStats::default(),
    };
    let mut stack: Vec<Kont> = Vec::new();
    let mut mode = Mode::Eval(t.clone());
    let mut fuel = fuel;
    loop {
        if fuel == 0 {
            return Err(RegionTrap::FuelExhausted { stats: store.stats });
        }
        fuel -= 1;
        store.stats.steps += 1;
        mode = match mode {
            Mode::Eval(t) => match t {
                RegionTerm::Var(x) => return Err(RegionTrap::Stuck(format!("free variable `{x}`"))),
                v if v.is_value() => Mode::Ret(v),
                RegionTerm::Prim(op, mut args) => {
                    args.reverse();
                    match args.pop() {
                        None => Mode::Ret(from_prim(delta(op, &[]).map_err(|e| RegionTrap::Stuck(e.to_string()))?)),
                        Some(first) => {
                            stack.push(Kont::Prim(op, Vec::new(), args));
                            Mode::Eval(first)
                        }
                    }
                }
                RegionTerm::App(h, args) => {
                    stack.push(Kont::AppHead(args));
                    Mode::Eval(*h)
                }
                RegionTerm::Fix(x, ann, body) => {
                    let unrolled = RegionTerm::Fix(x.clone(), ann, body.clone());
                    Mode::Eval(subst_var(&x, &unrolled, &body))
                }
                RegionTerm::New(rho, body) => {
                    let id = store.alloc();
                    stack.push(Kont::Free(id));
                    Mode::Eval(subst_region(&rho, &Region::Id(id), &body))
                }
                RegionTerm::At(body, r) => {
                    stack.push(Kont::At(region_id(&r)?));
                    Mode::Eval(*body)
                }
                RegionTerm::Deref(body, r) => {
                    stack.push(Kont::Deref(region_id(&r)?));
                    Mode::Eval(*body)
                }
                RegionTerm::RegApp(body, r) => {
                    stack.push(Kont::RegApp(r));
                    Mode::Eval(*body)
                }
                RegionTerm::If(c, a, b) => {
                    stack.push(Kont::If(a, b));
                    Mode::Eval(*c)
                }
                _ => unreachable!("values handled above"),
            },
            Mode::Ret(v) => match stack.pop() {
                None => {
                    let (observation, opaque_location) = match &v {
                        RegionTerm::Num(n) => (Observation::Num(*n), false),
                        RegionTerm::List(l) => (Observation::List(l.clone()), false),
                        RegionTerm::Lam(_) => (Observation::Fun, false),
                        RegionTerm::RegLam(..) => (Observation::Abs, false),
                        _ => (Observation::Fun, true),
                    };
                    return Ok(RegionOutcome {
                        observation,
                        stats: store.stats,
                        opaque_location,
                    });
                }
                Some(k) => match k {
                    Kont::Prim(op, mut done, mut rest) => {
                        done.push(to_prim(v, op)?);
                        match rest.pop() {
                            Some(next) => {
                                stack.push(Kont::Prim(op, done, rest));
                                Mode::Eval(next)
                            }
                            None => Mode::Ret(from_prim(
                                delta(op, &done).map_err(|e| RegionTrap::Stuck(e.to_string()))?,
                            )),
                        }
                    }
                    Kont::AppHead(mut args) => {
                        let RegionTerm::Lam(lam) = v else {
                            return Err(RegionTrap::Stuck(format!("applied a non-function {v}")));
                        };
                        args.reverse();
                        match args.pop() {
                            None => Mode::Eval(apply(*lam, Vec::new())?),
                            Some(first) => {
                                stack.push(Kont::AppArgs(lam, Vec::new(), args));
                                Mode::Eval(first)
                            }
                        }
                    }
                    Kont::AppArgs(lam, mut done, mut rest) => {
                        done.push(v);
                        match rest.pop() {
                            Some(next) => {
                                stack.push(Kont::AppArgs(lam, done, rest));
                                Mode::Eval(next)
                            }
                            None => Mode::Eval(apply(*lam, done)?),
                        }
                    }
                    Kont::At(id) => Mode::Ret(store.put(id, v)?),
                    Kont::Deref(id) => match v {
                        RegionTerm::Loc(r, o) if r == id => {
                            let region = store.region(r)?;
                            let value = region
                                .get(o)
                                .cloned()
                                .ok_or_else(|| RegionTrap::Stuck(format!("offset {o} outside region @{r}")))?;
                            Mode::Ret(value)
                        }
                        RegionTerm::Loc(r, _) => {
                            if store.regions.get(r).is_some_and(|x| x.is_none()) {
                                return Err(RegionTrap::Dangling { region: r });
                            }
                            return Err(RegionTrap::Stuck(format!("location in @{r} read through @{id}")));
                        }
                        other => return Err(RegionTrap::Stuck(format!("dereference of non-location {other}"))),
                    },
                    Kont::Free(id) => {
                        store.free(id)?;
                        Mode::Ret(v)
                    }
                    Kont::RegApp(r) => match v {
                        RegionTerm::RegLam(rho, body) => Mode::Eval(subst_region(&rho, &r, &body)),
                        other => return Err(RegionTrap::Stuck(format!("region application to {other}"))),
                    },
                    Kont::If(a, b) => match v {
                        RegionTerm::Num(n) => Mode::Eval(if n != 0 { *a } else { *b }),
                        other => return Err(RegionTrap::Stuck(format!("condition {other} is not an integer"))),
                    },
                },
            },
        };
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ast::Name;

    fn var(x: &str) -> RegionTerm {
        RegionTerm::Var(Name::from(x))
    }

    #[test]
    fn allocation_and_read() {
        let r = Region::name("r1");
        let t = RegionTerm::new_region(
            "r1",
            RegionTerm::let_in("x", RegionTerm::at(RegionTerm::Num(1), r.clone()), RegionTerm::deref(var("x"), r)),
        );
        let out = region_run(&t, 1000).unwrap();
        assert_eq!(out.observation, Observation::Num(1));
        assert_eq!(out.stats.max_live_regions, 1);
    }

    #[test]
    fn reading_a_freed_region_traps() {
        let r = Region::name("r1");
        // let l = (new r1. 5 at r1) in l ! r1 -- the read names the freed region.
        let escape = RegionTerm::new_region("r1", RegionTerm::at(RegionTerm::Num(5), r.clone()));
        let t = RegionTerm::let_in(
            "l",
            escape,
            RegionTerm::Deref(Box::new(var("l")), Region::Id(0)),
        );
        assert_eq!(region_run(&t, 1000), Err(RegionTrap::Dangling { region: 0 }));
    }

    #[test]
    fn fuel_runs_out() {
        // fix f. lam(). f()
        let lam = RegionTerm::Lam(Box::new(Lam {
            params: vec![],
            effect: Some(Default::default()),
            body: RegionTerm::App(Box::new(var("f")), vec![]),
        }));
        let t = RegionTerm::App(Box::new(RegionTerm::Fix("f".into(), None, Box::new(lam))), vec![]);
        assert!(matches!(region_run(&t, 500), Err(RegionTrap::FuelExhausted { .. })));
    }
}
