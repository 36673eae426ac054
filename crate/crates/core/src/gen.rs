//! Random well-typed programs.
//!
//! Generation is goal-directed: every expression is built for a known
//! type, and every statement form is only chosen when its typing rule can
//! be met in the current scope (the callee's effect lies in the read
//! effect, a tail call does not read the frame it pops, a returned type
//! mentions no local). Recursion only happens through `proc`s whose
//! recursive call is guarded by a non-empty list and passes its tail, so
//! generated programs terminate unless fuel runs out first.

use std::collections::BTreeSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::pipeline::{compile, Compiled};

/// Maximum nesting of functions, branches and procedures.
pub const MAX_DEPTH: usize = 5;

/// Percentages of statement positions that become calls and tail calls.
pub const CALL_PERCENT: u32 = 30;
pub const TAIL_CALL_PERCENT: u32 = 15;

#[derive(Clone, Debug)]
pub struct GeneratedProgram {
    pub name: String,
    pub source: String,
    pub compiled: Compiled,
}

/// `count` programs drawn from one stream seeded by `seed`. Each program
/// uses roughly `size_bound` syntax nodes.
///
/// # Panics
///
/// Panics if a generated program fails to check, which would be a bug in
/// the generator.
pub fn generate_programs(seed: u64, count: usize, size_bound: usize) -> Vec<GeneratedProgram> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|i| {
            let source = generate_source(&mut rng, size_bound);
            let name = format!("gen-{seed}-{i}");
            let compiled = compile(&name, &source)
                .unwrap_or_else(|d| panic!("generated program does not check: {d}\n{source}"));
            GeneratedProgram {
                name,
                source,
                compiled,
            }
        })
        .collect()
}

/// One program's source text.
pub fn generate_source(rng: &mut ChaCha8Rng, size_bound: usize) -> String {
    let mut g = Gen {
        rng,
        budget: size_bound as i64,
        next: 0,
        nesting: 0,
    };
    let ctx = Ctx::default();
    let goal = g.program_type();
    g.stmt(&goal, &ctx)
}

#[derive(Clone, Debug, PartialEq, Eq)]
enum Ty {
    /// The type of an effect variable; never a value.
    Top,
    Int,
    List,
    Fun(Vec<Ty>, Box<Ty>, BTreeSet<String>),
    Abs(String, Box<Ty>),
}

impl Ty {
    fn render(&self) -> String {
        match self {
            Ty::Top => "top".into(),
            Ty::Int => "int".into(),
            Ty::List => "int list".into(),
            Ty::Fun(ps, r, eff) => {
                let mut items: Vec<String> = ps.iter().map(Ty::render).collect();
                items.push(r.render());
                items.push(format!("[{}]", eff.iter().cloned().collect::<Vec<_>>().join(",")));
                format!("func({})", items.join(","))
            }
            Ty::Abs(p, body) => format!("<{p}> {}", body.render()),
        }
    }

    /// Replaces the effect variable `from` by `to`.
    fn subst(&self, from: &str, to: &str) -> Ty {
        match self {
            Ty::Fun(ps, r, eff) => Ty::Fun(
                ps.iter().map(|p| p.subst(from, to)).collect(),
                Box::new(r.subst(from, to)),
                eff.iter()
                    .map(|a| if a == from { to.to_string() } else { a.clone() })
                    .collect(),
            ),
            Ty::Abs(p, _) if p == from => self.clone(),
            Ty::Abs(p, body) => Ty::Abs(p.clone(), Box::new(body.subst(from, to))),
            t => t.clone(),
        }
    }

    fn free(&self, out: &mut BTreeSet<String>) {
        match self {
            Ty::Fun(ps, r, eff) => {
                ps.iter().for_each(|p| p.free(out));
                r.free(out);
                out.extend(eff.iter().cloned());
            }
            Ty::Abs(p, body) => {
                let mut inner = BTreeSet::new();
                body.free(&mut inner);
                inner.remove(p);
                out.extend(inner);
            }
            _ => {}
        }
    }

    fn mentions(&self, names: &BTreeSet<String>) -> bool {
        let mut fv = BTreeSet::new();
        self.free(&mut fv);
        !fv.is_disjoint(names)
    }
}

#[derive(Clone, Debug)]
struct Var {
    name: String,
    ty: Ty,
    /// A stack variable, as opposed to a `let` copy or a `fix` binder.
    plain: bool,
}

#[derive(Clone, Debug, Default)]
struct Ctx {
    vars: Vec<Var>,
    read: BTreeSet<String>,
    locals: BTreeSet<String>,
    depth: usize,
}

impl Ctx {
    /// Visible bindings, innermost first.
    fn visible(&self) -> Vec<&Var> {
        let mut seen = BTreeSet::new();
        self.vars
            .iter()
            .rev()
            .filter(|v| seen.insert(v.name.as_str()))
            .collect()
    }

    /// Bindings that may be read as values here.
    fn readable(&self) -> Vec<&Var> {
        self.visible()
            .into_iter()
            .filter(|v| v.ty != Ty::Top && (!v.plain || self.read.contains(&v.name)))
            .collect()
    }

    /// Stack variables (including effect variables) in scope.
    fn plain_names(&self) -> Vec<String> {
        self.visible()
            .into_iter()
            .filter(|v| v.plain)
            .map(|v| v.name.clone())
            .collect()
    }

    fn with_local(&self, name: &str, ty: Ty) -> Ctx {
        let mut c = self.clone();
        c.vars.push(Var {
            name: name.to_string(),
            ty,
            plain: true,
        });
        c.read.insert(name.to_string());
        c.locals.insert(name.to_string());
        c
    }

    fn with_copy(&self, name: &str, ty: Ty) -> Ctx {
        let mut c = self.clone();
        c.vars.push(Var {
            name: name.to_string(),
            ty,
            plain: false,
        });
        c
    }

    fn deeper(&self) -> Ctx {
        Ctx {
            depth: self.depth + 1,
            ..self.clone()
        }
    }
}

/// A callable head: a function variable, possibly instantiated.
struct Callee {
    head: String,
    params: Vec<Ty>,
    ret: Ty,
    effect: BTreeSet<String>,
}

struct Gen<'r> {
    rng: &'r mut ChaCha8Rng,
    budget: i64,
    next: usize,
    /// Nesting of operator applications in the expression being built.
    nesting: usize,
}

/// Deepest operator nesting inside one expression.
const MAX_NESTING: usize = 2;

impl Gen<'_> {
    fn fresh(&mut self, base: &str) -> String {
        self.next += 1;
        format!("{base}{}", self.next)
    }

    fn pct(&mut self, p: u32) -> bool {
        self.rng.gen_range(0..100) < p
    }

    fn pick<'a, T>(&mut self, items: &'a [T]) -> Option<&'a T> {
        if items.is_empty() {
            None
        } else {
            Some(&items[self.rng.gen_range(0..items.len())])
        }
    }

    fn subset(&mut self, names: &[String], max: usize) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        for _ in 0..self.rng.gen_range(0..=max) {
            if let Some(n) = self.pick(names) {
                out.insert(n.clone());
            }
        }
        out
    }

    fn exhausted(&self, ctx: &Ctx) -> bool {
        self.budget <= 0 || ctx.depth >= MAX_DEPTH
    }

    fn program_type(&mut self) -> Ty {
        match self.rng.gen_range(0..100) {
            0..=59 => Ty::Int,
            60..=74 => Ty::List,
            75..=89 => {
                let ps = (0..self.rng.gen_range(0..=2)).map(|_| self.first_order()).collect();
                Ty::Fun(ps, Box::new(self.first_order()), BTreeSet::new())
            }
            _ => self.poly_type(&BTreeSet::new()),
        }
    }

    fn first_order(&mut self) -> Ty {
        if self.pct(70) {
            Ty::Int
        } else {
            Ty::List
        }
    }

    /// `<p> func(func(.., [p]), .., int, [p] ∪ extra)`.
    fn poly_type(&mut self, extra: &BTreeSet<String>) -> Ty {
        let p = self.fresh("p");
        let pe: BTreeSet<String> = [p.clone()].into();
        let reader = if self.pct(50) {
            Ty::Fun(vec![], Box::new(Ty::Int), pe.clone())
        } else {
            Ty::Fun(vec![Ty::Int], Box::new(Ty::Int), pe.clone())
        };
        let mut params = vec![reader];
        if self.pct(50) {
            params.push(Ty::Int);
        }
        let mut eff = pe;
        eff.extend(extra.iter().cloned());
        Ty::Abs(p, Box::new(Ty::Fun(params, Box::new(Ty::Int), eff)))
    }

    fn random_type(&mut self, ctx: &Ctx) -> Ty {
        let names = ctx.plain_names();
        match self.rng.gen_range(0..100) {
            0..=44 => Ty::Int,
            45..=64 => Ty::List,
            65..=92 => {
                let n = self.rng.gen_range(0..=2);
                let ps = (0..n)
                    .map(|_| {
                        if self.pct(15) {
                            let eff = self.subset(&names, 1);
                            Ty::Fun(vec![Ty::Int], Box::new(Ty::Int), eff)
                        } else {
                            self.first_order()
                        }
                    })
                    .collect();
                let ret = self.first_order();
                Ty::Fun(ps, Box::new(ret), self.subset(&names, 2))
            }
            _ => {
                let extra = self.subset(&names, 1);
                self.poly_type(&extra)
            }
        }
    }

    fn callees(&self, ctx: &Ctx) -> Vec<Callee> {
        let mut out = Vec::new();
        let read: Vec<String> = ctx.read.iter().cloned().collect();
        for v in ctx.readable() {
            match &v.ty {
                Ty::Fun(ps, r, eff) if eff.is_subset(&ctx.read) => out.push(Callee {
                    head: v.name.clone(),
                    params: ps.clone(),
                    ret: (**r).clone(),
                    effect: eff.clone(),
                }),
                Ty::Abs(p, body) => {
                    for x in &read {
                        if let Ty::Fun(ps, r, eff) = body.subst(p, x) {
                            if eff.is_subset(&ctx.read) {
                                out.push(Callee {
                                    head: format!("{}<{x}>", v.name),
                                    params: ps,
                                    ret: *r,
                                    effect: eff,
                                });
                            }
                        }
                    }
                }
                _ => {}
            }
        }
        out
    }

    fn args(&mut self, params: &[Ty], ctx: &Ctx) -> String {
        params
            .iter()
            .map(|p| self.expr(p, ctx))
            .collect::<Vec<_>>()
            .join(", ")
    }

    fn stmt(&mut self, goal: &Ty, ctx: &Ctx) -> String {
        self.budget -= 1;
        if self.exhausted(ctx) {
            return self.ret(goal, ctx);
        }
        let roll = self.rng.gen_range(0..100);
        if roll < CALL_PERCENT {
            let cs = self.callees(ctx);
            let (decl, ctx, c) = match self.pick(&cs) {
                Some(c) => (String::new(), ctx.clone(), (c.head.clone(), c.params.clone(), c.ret.clone())),
                None => {
                    let ret = self.first_order();
                    let (decl, ctx, f, params) = self.declare_callee(ret.clone(), &ctx.read, ctx);
                    (decl, ctx, (f, params, ret))
                }
            };
            let (head, params, ret) = c;
            let args = self.args(&params, &ctx);
            let x = self.fresh("r");
            let rest = self.stmt(goal, &ctx.with_local(&x, ret));
            return format!("{decl}var {x} = {head}({args});\n{rest}");
        } else if roll < CALL_PERCENT + TAIL_CALL_PERCENT {
            let cs: Vec<Callee> = self
                .callees(ctx)
                .into_iter()
                .filter(|c| c.ret == *goal && c.effect.is_disjoint(&ctx.locals))
                .collect();
            let (decl, ctx, head, params) = match self.pick(&cs) {
                Some(c) => (String::new(), ctx.clone(), c.head.clone(), c.params.clone()),
                None => {
                    let allowed: BTreeSet<String> = ctx.read.difference(&ctx.locals).cloned().collect();
                    self.declare_callee(goal.clone(), &allowed, ctx)
                }
            };
            let args = self.args(&params, &ctx);
            return format!("{decl}return {head}({args});");
        } else if roll < 53 {
            let cond = self.expr(&Ty::Int, ctx);
            let inner = ctx.deeper();
            let a = self.stmt(goal, &inner);
            let b = self.stmt(goal, &inner);
            return format!("if ({cond}) {{\n{a}\n}} else {{\n{b}\n}}");
        } else if roll < 60 {
            let lists: Vec<String> = ctx
                .readable()
                .into_iter()
                .filter(|v| v.ty == Ty::List)
                .map(|v| v.name.clone())
                .collect();
            if let Some(l) = self.pick(&lists).cloned() {
                return self.list_guard(&l, goal, ctx);
            }
        } else if roll < 65 && ctx.depth < 3 {
            return self.proc_def(goal, ctx);
        }
        if self.budget > 0 && roll < 88 {
            let ty = self.random_type(ctx);
            let e = self.expr(&ty, ctx);
            let x = self.fresh("v");
            let rest = self.stmt(goal, &ctx.with_local(&x, ty));
            return format!("var {x} = {e};\n{rest}");
        }
        self.ret(goal, ctx)
    }

    /// Declares a fresh function returning `ret` whose effect is drawn
    /// from `allowed`, so that it can be called right away.
    fn declare_callee(&mut self, ret: Ty, allowed: &BTreeSet<String>, ctx: &Ctx) -> (String, Ctx, String, Vec<Ty>) {
        let allowed: Vec<String> = allowed.iter().cloned().collect();
        let eff = self.subset(&allowed, 2);
        let params: Vec<Ty> = (0..self.rng.gen_range(0..=2)).map(|_| self.first_order()).collect();
        let lit = self.fun_literal(&params, &ret, &eff, ctx, true);
        let f = self.fresh("f");
        let ty = Ty::Fun(params.clone(), Box::new(ret), eff);
        (format!("var {f} = {lit};\n"), ctx.with_local(&f, ty), f, params)
    }

    fn ret(&mut self, goal: &Ty, ctx: &Ctx) -> String {
        debug_assert!(!goal.mentions(&ctx.locals));
        format!("return {};", self.expr(goal, ctx))
    }

    fn list_guard(&mut self, l: &str, goal: &Ty, ctx: &Ctx) -> String {
        let inner = ctx.deeper();
        let empty = self.stmt(goal, &inner);
        let h = self.fresh("h");
        let t = self.fresh("t");
        let cons = inner.with_local(&h, Ty::Int).with_local(&t, Ty::List);
        let nonempty = self.stmt(goal, &cons);
        format!(
            "if (iszero(length({l}))) {{\n{empty}\n}} else {{\nvar {h} = head({l});\nvar {t} = tail({l});\n{nonempty}\n}}"
        )
    }

    /// A procedure recursing on the tail of its list argument.
    fn proc_def(&mut self, goal: &Ty, ctx: &Ctx) -> String {
        let name = self.fresh("g");
        let l = self.fresh("l");
        let a = self.fresh("a");
        let ret = self.first_order();
        let read: Vec<String> = ctx.read.iter().cloned().collect();
        let eff = self.subset(&read, 2);
        let params = vec![Ty::List, Ty::Int];

        let mut body = ctx.deeper();
        body.read = eff.clone();
        body.locals = BTreeSet::new();
        let body = body.with_local(&l, Ty::List).with_local(&a, Ty::Int);
        let base = self.stmt(&ret, &body);
        let t = self.fresh("t");
        let h = self.fresh("h");
        let step = body.with_local(&t, Ty::List).with_local(&h, Ty::Int);
        let arg = self.expr(&Ty::Int, &step);
        let recur = if self.pct(50) {
            format!("return {name}({t}, {arg});")
        } else {
            let r = self.fresh("r");
            let rest = self.stmt(&ret, &step.with_local(&r, ret.clone()));
            format!("var {r} = {name}({t}, {arg});\n{rest}")
        };
        let eff_text = eff.iter().cloned().collect::<Vec<_>>().join(", ");
        let ty = Ty::Fun(params, Box::new(ret.clone()), eff);
        let rest = self.stmt(goal, &ctx.with_local(&name, ty));
        format!(
            "proc {name}({l}: int list, {a}: int): {} [{eff_text}] {{\n\
             if (iszero(length({l}))) {{\n{base}\n}} else {{\nvar {t} = tail({l});\nvar {h} = head({l});\n{recur}\n}}\n}}\n{rest}",
            ret.render()
        )
    }

    fn expr(&mut self, goal: &Ty, ctx: &Ctx) -> String {
        self.budget -= 1;
        let matching: Vec<String> = ctx
            .readable()
            .into_iter()
            .filter(|v| v.ty == *goal)
            .map(|v| v.name.clone())
            .collect();
        if !matching.is_empty() && self.pct(40) {
            return self.pick(&matching).expect("non-empty").clone();
        }
        if let Ty::Fun(..) = goal {
            let mut insts = Vec::new();
            for v in ctx.readable() {
                if let Ty::Abs(p, body) = &v.ty {
                    for x in ctx.plain_names() {
                        if body.subst(p, &x) == *goal {
                            insts.push(format!("{}<{x}>", v.name));
                        }
                    }
                }
            }
            if !insts.is_empty() && self.pct(50) {
                return self.pick(&insts).expect("non-empty").clone();
            }
        }
        let small = self.exhausted(ctx) || self.nesting >= MAX_NESTING;
        self.nesting += 1;
        let e = self.compound(goal, ctx, small, &matching);
        self.nesting -= 1;
        e
    }

    fn compound(&mut self, goal: &Ty, ctx: &Ctx, small: bool, matching: &[String]) -> String {
        match goal {
            Ty::Int => {
                if small {
                    return self.rng.gen_range(0..10).to_string();
                }
                match self.rng.gen_range(0..100) {
                    0..=24 => self.rng.gen_range(0..10).to_string(),
                    25..=54 => {
                        let op = *self.pick(&["+", "-", "*"]).expect("non-empty");
                        let a = self.expr(&Ty::Int, ctx);
                        let b = self.expr(&Ty::Int, ctx);
                        format!("({a} {op} {b})")
                    }
                    55..=69 => {
                        let op = *self.pick(&["inc", "dec", "iszero"]).expect("non-empty");
                        format!("{op}({})", self.expr(&Ty::Int, ctx))
                    }
                    70..=79 => format!("length({})", self.expr(&Ty::List, ctx)),
                    80..=89 => self.let_copy(goal, ctx),
                    _ => self
                        .pick(matching)
                        .cloned()
                        .unwrap_or_else(|| self.rng.gen_range(0..10).to_string()),
                }
            }
            Ty::List => {
                if small || self.pct(30) {
                    return "nil".into();
                }
                if self.pct(85) {
                    let h = self.expr(&Ty::Int, ctx);
                    let t = self.expr(&Ty::List, ctx);
                    format!("cons({h}, {t})")
                } else {
                    self.let_copy(goal, ctx)
                }
            }
            Ty::Fun(ps, r, eff) => {
                if !small && self.pct(15) {
                    self.let_copy(goal, ctx)
                } else {
                    self.fun_literal(ps, r, eff, ctx, true)
                }
            }
            Ty::Abs(..) => self.abstraction(goal, ctx),
            Ty::Top => unreachable!("effect variables are never goals"),
        }
    }

    /// `let c = e1 in e2`, with `c` readable anywhere in `e2`.
    fn let_copy(&mut self, goal: &Ty, ctx: &Ctx) -> String {
        let ty = self.first_order();
        let rhs = self.expr(&ty, ctx);
        let c = self.fresh("c");
        let body = self.expr(goal, &ctx.with_copy(&c, ty));
        format!("(let {c} = {rhs} in {body})")
    }

    /// An effect abstraction literal; its body is built under an empty
    /// read effect, as the typing rule requires.
    fn abstraction(&mut self, goal: &Ty, ctx: &Ctx) -> String {
        match goal {
            Ty::Abs(p, body) => {
                let q = self.fresh("q");
                let mut inner = ctx.clone();
                inner.vars.push(Var {
                    name: q.clone(),
                    ty: Ty::Top,
                    plain: true,
                });
                inner.read = BTreeSet::new();
                let b = self.abstraction(&body.subst(p, &q), &inner);
                format!("<{q}> {b}")
            }
            Ty::Fun(ps, r, eff) => self.fun_literal(ps, r, eff, ctx, false),
            _ => unreachable!("abstraction bodies are functions"),
        }
    }

    fn fun_literal(&mut self, ps: &[Ty], r: &Ty, eff: &BTreeSet<String>, ctx: &Ctx, may_capture: bool) -> String {
        let mut inner = ctx.deeper();
        let mut captures = Vec::new();
        if may_capture && self.pct(20) {
            let mut sig = BTreeSet::new();
            Ty::Fun(ps.to_vec(), Box::new(r.clone()), eff.clone()).free(&mut sig);
            let cands: Vec<(String, Ty)> = ctx
                .readable()
                .into_iter()
                .filter(|v| v.plain && !sig.contains(&v.name))
                .map(|v| (v.name.clone(), v.ty.clone()))
                .collect();
            if let Some((n, t)) = self.pick(&cands).cloned() {
                inner = inner.with_copy(&n, t);
                captures.push(n);
            }
        }
        let names: Vec<String> = ps.iter().map(|_| self.fresh("a")).collect();
        inner.read = eff.clone();
        inner.locals = BTreeSet::new();
        for (n, t) in names.iter().zip(ps) {
            inner = inner.with_local(n, t.clone());
        }
        let saved = std::mem::replace(&mut self.nesting, 0);
        let body = self.stmt(r, &inner);
        self.nesting = saved;
        let params = names
            .iter()
            .zip(ps)
            .map(|(n, t)| format!("{n}: {}", t.render()))
            .collect::<Vec<_>>()
            .join(", ");
        let caps = if captures.is_empty() {
            String::new()
        } else {
            format!("; {}", captures.join(", "))
        };
        let eff_text = eff.iter().cloned().collect::<Vec<_>>().join(", ");
        format!("fun({params}{caps})[{eff_text}] {{\n{body}\n}}")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_seed_same_program() {
        let a = generate_programs(1, 1, 40);
        let b = generate_programs(1, 1, 40);
        assert_eq!(a[0].source, b[0].source);
        assert_ne!(a[0].source, generate_programs(2, 1, 40)[0].source);
    }

    #[test]
    fn generated_programs_check() {
        for seed in 1..=60 {
            assert_eq!(generate_programs(seed, 2, 40).len(), 2);
        }
    }

    #[test]
    fn type_rendering_parses() {
        let t = Ty::Abs(
            "p".into(),
            Box::new(Ty::Fun(
                vec![Ty::Fun(vec![], Box::new(Ty::Int), ["p".to_string()].into()), Ty::List],
                Box::new(Ty::Int),
                ["p".to_string()].into(),
            )),
        );
        let parsed = crate::frontend::parse_type(&t.render()).unwrap();
        assert_eq!(parsed.to_string(), t.render().replace(", ", ","));
    }

    #[test]
    fn substitution_respects_binders() {
        let inner = Ty::Abs("p".into(), Box::new(Ty::Fun(vec![], Box::new(Ty::Int), ["p".to_string()].into())));
        assert_eq!(inner.subst("p", "x"), inner);
    }
}
