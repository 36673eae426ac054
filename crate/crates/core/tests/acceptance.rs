//! Acceptance suite: one line per criterion, each PASS or FAIL with the
//! measured numbers and the pinned threshold.

use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use funk::ast::{fv_type, Effect, EffectAtom, Expr, FunExpr, Stmt, Type};
use funk::corpus::{corpus, tailcall_lists_source, Expected};
use funk::diff::{diff_program, DiffEntry};
use funk::erasure::erased_view;
use funk::gen::{generate_programs, GeneratedProgram};
use funk::machine::{drop, run, step, RunError, RunOptions, State, StepMode, StepResult};
use funk::pipeline::compile;
use funk::subst::{subst_expr, subst_expr_stmt};
use funk::typecheck::{
    record_judgments, satisfies, type_expr, type_stmt, type_value_stack, Binding, CheckedProgram, StackTyping,
};

const GENERATED: u64 = 500;
const REGION_GENERATED: usize = 200;
const SIZE_BOUND: usize = 40;
const FUEL: u64 = 1_000_000;
const METATHEORY_MIN: usize = 1000;
const SAFETY_BUDGET: Duration = Duration::from_secs(5);
const SPACE_BUDGET: Duration = Duration::from_secs(2);
const MIN_R_SQUARED: f64 = 0.99;

struct Report {
    lines: Vec<(bool, String)>,
}

impl Report {
    fn record(&mut self, pass: bool, name: &str, detail: String) {
        let line = format!("[{}] {name}: {detail}", if pass { "PASS" } else { "FAIL" });
        println!("{line}");
        self.lines.push((pass, line));
    }
}

fn generated() -> Vec<GeneratedProgram> {
    (1..=GENERATED)
        .map(|seed| generate_programs(seed, 1, SIZE_BOUND).remove(0))
        .collect()
}

fn accepted_corpus() -> Vec<(String, CheckedProgram)> {
    corpus()
        .into_iter()
        .filter(|e| matches!(e.expected, Expected::Accept(..)))
        .map(|e| (e.name.to_string(), compile(e.name, e.source).expect("corpus accepts").checked))
        .collect()
}

fn corpus_verdicts(r: &mut Report) {
    let mut listed = (0, 0);
    let mut other = (0, 0);
    let mut wrong = Vec::new();
    for e in corpus() {
        let ok = match (&e.expected, compile(e.name, e.source)) {
            (Expected::Reject(kind), Err(d)) => d.kind == *kind,
            (Expected::Accept(ty, obs), Ok(c)) => {
                c.checked.ty == *ty
                    && run(&c.checked, RunOptions::default()).is_ok_and(|res| res.observation == *obs)
            }
            _ => false,
        };
        let tally = if e.reference { &mut listed } else { &mut other };
        tally.1 += 1;
        if ok {
            tally.0 += 1;
        } else {
            wrong.push(e.name);
        }
    }
    r.record(
        listed.0 == listed.1 && listed.1 == 9 && wrong.is_empty(),
        "corpus verdicts",
        format!(
            "{}/{} listing-derived and {}/{} synthesized programs match verdict, type and value exactly{}",
            listed.0,
            listed.1,
            other.0,
            other.1,
            if wrong.is_empty() { String::new() } else { format!("; wrong: {wrong:?}") }
        ),
    );
}

fn type_safety(r: &mut Report, progs: &[GeneratedProgram]) {
    let start = Instant::now();
    let (mut finals, mut fuel, mut stuck, mut oracle) = (0, 0, 0, 0);
    for g in progs {
        let opts = RunOptions {
            fuel: FUEL,
            oracle: true,
            ..RunOptions::default()
        };
        match run(&g.compiled.checked, opts) {
            Ok(_) => finals += 1,
            Err(RunError::FuelExhausted { .. }) => fuel += 1,
            Err(RunError::Stuck { .. }) => stuck += 1,
            Err(RunError::Oracle { .. }) => oracle += 1,
        }
    }
    let took = start.elapsed();
    r.record(
        stuck == 0 && oracle == 0 && finals + fuel == progs.len() && took < SAFETY_BUDGET,
        "type safety",
        format!(
            "{} generated programs: {finals} final, {fuel} out of fuel, {stuck} stuck, {oracle} state-typing failures \
             in {took:.2?} (need 0 stuck, 0 failures, < {SAFETY_BUDGET:?})",
            progs.len()
        ),
    );
}

fn erasure(r: &mut Report, entries: &[DiffEntry]) {
    let agree = entries
        .iter()
        .filter(|e| match (e.source.observation(), e.erased.observation()) {
            (Some(s), Some(x)) => erased_view(s) == *x,
            _ => false,
        })
        .count();
    r.record(
        agree == entries.len(),
        "erasure preserves observations",
        format!("{agree}/{} corpus and generated programs agree exactly (abs observed as fun)", entries.len()),
    );
}

fn regions(r: &mut Report, corpus_entries: &[DiffEntry], gen_entries: &[DiffEntry]) {
    let all: Vec<&DiffEntry> = corpus_entries.iter().chain(gen_entries).collect();
    let typed = all.iter().filter(|e| e.region_types_preserved).count();
    let compared: Vec<&DiffEntry> = corpus_entries
        .iter()
        .chain(gen_entries.iter().take(REGION_GENERATED))
        .collect();
    let agree = compared
        .iter()
        .filter(|e| matches!((e.source.observation(), e.region.observation()), (Some(s), Some(g)) if s == g))
        .count();
    let dangling = all.iter().filter(|e| e.dangling()).count();
    r.record(
        typed == all.len() && agree == compared.len() && dangling == 0,
        "region translation",
        format!(
            "types preserved on {typed}/{}; observations agree on {agree}/{} (corpus + {REGION_GENERATED} generated); \
             {dangling} dangling traps",
            all.len(),
            compared.len()
        ),
    );
}

/// Least-squares fit of `y = c·x + d`, returning (c, d, R²).
fn linear_fit(points: &[(f64, f64)]) -> (f64, f64, f64) {
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let c = sxy / sxx;
    let d = my - c * mx;
    let ss_res: f64 = points.iter().map(|p| (p.1 - (c * p.0 + d)).powi(2)).sum();
    let ss_tot: f64 = points.iter().map(|p| (p.1 - my).powi(2)).sum();
    let r2 = if ss_tot == 0.0 { 1.0 } else { 1.0 - ss_res / ss_tot };
    (c, d, r2)
}

fn tail_call_space(r: &mut Report) {
    let start = Instant::now();
    let mut tail = Vec::new();
    let mut plain_at_100 = 0;
    for n in [25u32, 50, 100] {
        let c = compile("tailcall_lists.fk", &tailcall_lists_source(n)).expect("checks");
        let cells = |tail_calls| {
            let opts = RunOptions {
                tail_calls,
                ..RunOptions::default()
            };
            run(&c.checked, opts).expect("terminates").stats.max_retained_cells
        };
        tail.push((n as f64, cells(true) as f64));
        if n == 100 {
            plain_at_100 = cells(false);
        }
    }
    let took = start.elapsed();
    let (c, d, r2) = linear_fit(&tail);
    let quarter_square = 100 * 100 / 4;
    r.record(
        r2 >= MIN_R_SQUARED && plain_at_100 >= quarter_square && took < SPACE_BUDGET,
        "tail-call space",
        format!(
            "retained cells {:?} fit {c:.3}·n + {d:.3} with R² = {r2:.4} (need ≥ {MIN_R_SQUARED}); \
             without frame reuse {plain_at_100} cells at n = 100 (need ≥ {quarter_square}); {took:.2?} (< {SPACE_BUDGET:?})",
            tail.iter().map(|p| p.1 as usize).collect::<Vec<_>>()
        ),
    );
}

/// A closed expression of the closed type `t`.
fn closed_value(t: &Type, rng: &mut ChaCha8Rng) -> Expr {
    match t {
        Type::Int => Expr::Num(rng.gen_range(-5..50)),
        Type::IntList => Expr::List((0..rng.gen_range(0..4)).map(|_| rng.gen_range(0..9)).collect()),
        Type::Func { params, ret, effect } => Expr::Fun(Box::new(FunExpr {
            params: params
                .iter()
                .enumerate()
                .map(|(i, p)| (format!("w{i}"), p.clone()))
                .collect(),
            captures: Vec::new(),
            effect: effect.clone(),
            ret: Some((**ret).clone()),
            body: Stmt::ret(closed_value(ret, rng)),
        })),
        Type::EffAll(p, body) => Expr::EffAbs(p.clone(), Box::new(closed_value(body, rng))),
        Type::Top => unreachable!("no value has type top"),
    }
}

fn machine_states(p: &CheckedProgram, limit: usize) -> Vec<State> {
    let mut out = Vec::new();
    let mut st = State::initial(p.program.body.clone());
    let mut fuel = FUEL;
    while out.len() < limit {
        out.push(st.clone());
        match step(st, StepMode::default(), &mut fuel) {
            StepResult::Next(next, _) => st = next,
            _ => break,
        }
    }
    out
}

fn metatheory(r: &mut Report, programs: &[CheckedProgram]) {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut weakening = (0usize, 0usize);
    let mut substitution = (0usize, 0usize);
    let mut locals = (0usize, 0usize);
    let mut drop_stack = (0usize, 0usize);

    for p in programs {
        let (_, log) = record_judgments(&p.program).expect("program checks");

        for j in log.exprs.iter().take(40) {
            let extra = j.env.plain_value_vars();
            let mut wider = j.effect.clone();
            for _ in 0..rng.gen_range(1..=3) {
                if !extra.is_empty() {
                    wider.insert(EffectAtom::Var(extra[rng.gen_range(0..extra.len())].clone()));
                }
            }
            if wider == j.effect {
                continue;
            }
            weakening.0 += 1;
            if type_expr(&j.env, &wider, &j.expr).ok().as_ref() != Some(&j.ty) {
                weakening.1 += 1;
            }
        }

        for j in &log.stmts {
            locals.0 += 1;
            let retyped = type_stmt(&j.env, &j.read, &j.locals, &j.stmt);
            if !fv_type(&j.ty).is_disjoint(&j.locals) || retyped.ok().as_ref() != Some(&j.ty) {
                locals.1 += 1;
            }
        }

        let copies = |env: &funk::typecheck::TypeEnv| -> Vec<(usize, String, Type)> {
            env.iter()
                .enumerate()
                .filter_map(|(i, (x, b))| match b {
                    Binding::Copy(t) if fv_type(t).is_empty() => Some((i, x.clone(), t.clone())),
                    _ => None,
                })
                .collect()
        };
        for j in log.exprs.iter().take(200) {
            for (i, x, t) in copies(&j.env) {
                let v = closed_value(&t, &mut rng);
                let after = subst_expr(&x, &v, &j.expr);
                if after == j.expr {
                    continue;
                }
                substitution.0 += 1;
                if type_expr(&j.env.without(i), &j.effect, &after).ok().as_ref() != Some(&j.ty) {
                    substitution.1 += 1;
                }
            }
        }
        for j in log.stmts.iter().take(100) {
            for (i, x, t) in copies(&j.env) {
                let v = closed_value(&t, &mut rng);
                let after = subst_expr_stmt(&x, &v, &j.stmt);
                if after == j.stmt {
                    continue;
                }
                substitution.0 += 1;
                if type_stmt(&j.env.without(i), &j.read, &j.locals, &after).ok().as_ref() != Some(&j.ty) {
                    substitution.1 += 1;
                }
            }
        }

        for st in machine_states(p, 20) {
            let Ok(sigma) = type_value_stack(&st.values) else {
                drop_stack.0 += 1;
                drop_stack.1 += 1;
                continue;
            };
            let n = rng.gen_range(0..=st.values.len());
            drop_stack.0 += 1;
            if type_value_stack(&drop(n, &st.values)).ok() != Some(sigma.drop_top(n)) {
                drop_stack.1 += 1;
            }
        }
    }

    let satisfaction = satisfaction_weakening(&mut rng, 2000);
    let suites = [
        ("effect weakening", weakening),
        ("satisfaction weakening", satisfaction),
        ("substitution preserves types", substitution),
        ("locals not in return type", locals),
        ("drop stack", drop_stack),
    ];
    let pass = suites.iter().all(|(_, (n, bad))| *n >= METATHEORY_MIN && *bad == 0);
    let detail = suites
        .iter()
        .map(|(name, (n, bad))| format!("{name} {bad}/{n}"))
        .collect::<Vec<_>>()
        .join("; ");
    r.record(
        pass,
        "metatheory suites",
        format!("violations/instances: {detail} (need ≥ {METATHEORY_MIN} instances each, 0 violations)"),
    );
}

fn random_type(rng: &mut ChaCha8Rng) -> Type {
    match rng.gen_range(0..3) {
        0 => Type::Int,
        1 => Type::IntList,
        _ => Type::func(vec![Type::Int], Type::Int, Effect::empty()),
    }
}

/// `Σ ⊨ φ1` and `φ2 ⊆ φ1` imply `Σ ⊨ φ2`, on random stack typings.
fn satisfaction_weakening(rng: &mut ChaCha8Rng, count: usize) -> (usize, usize) {
    let mut bad = 0;
    for _ in 0..count {
        let sigma = StackTyping((0..rng.gen_range(0..6)).map(|_| random_type(rng)).collect());
        let mut phi1 = Effect::empty();
        for _ in 0..rng.gen_range(0..5) {
            // Mostly atoms that hold, sometimes ones that do not.
            let i = rng.gen_range(0..sigma.len() + 2);
            let t = match sigma.get(i) {
                Some(t) if rng.gen_bool(0.8) => t.clone(),
                _ => random_type(rng),
            };
            phi1.insert(EffectAtom::loc(i, t));
        }
        let phi2: Effect = phi1.iter().filter(|_| rng.gen_bool(0.5)).cloned().collect();
        if satisfies(&sigma, &phi1) && !satisfies(&sigma, &phi2) {
            bad += 1;
        }
    }
    (count, bad)
}

#[test]
fn acceptance() {
    let mut r = Report { lines: Vec::new() };
    let progs = generated();

    corpus_verdicts(&mut r);
    type_safety(&mut r, &progs);

    let corpus_checked = accepted_corpus();
    let corpus_entries: Vec<DiffEntry> = corpus_checked
        .iter()
        .map(|(name, cp)| diff_program(name, cp, FUEL))
        .collect();
    let gen_entries: Vec<DiffEntry> = progs
        .iter()
        .map(|g| diff_program(&g.name, &g.compiled.checked, FUEL))
        .collect();
    let all: Vec<DiffEntry> = corpus_entries.iter().chain(&gen_entries).cloned().collect();
    erasure(&mut r, &all);
    regions(&mut r, &corpus_entries, &gen_entries);
    tail_call_space(&mut r);

    let mut meta: Vec<CheckedProgram> = corpus_checked
        .into_iter()
        .filter(|(name, _)| name != "tailcall_lists")
        .map(|(_, cp)| cp)
        .collect();
    meta.extend(progs.iter().map(|g| g.compiled.checked.clone()));
    metatheory(&mut r, &meta);

    let failed: Vec<&String> = r.lines.iter().filter(|(ok, _)| !ok).map(|(_, l)| l).collect();
    assert!(failed.is_empty(), "failing criteria:\n{failed:#?}");
}
