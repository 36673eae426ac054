//! The stack machine.
//!
//! A state is `⟨s, κ, σ, n⟩`: the statement being executed, the control
//! stack of suspended frames, the value stack, and the number of values on
//! top of the stack that belong to the running function. Stack locations
//! are numbered from the bottom, so pushing never renumbers a live slot.

use std::fmt;

use serde::Serialize;

use crate::ast::{EffectAtom, Expr, FunExpr, Name, Stmt, Type};
use crate::ops::{delta, DeltaError, PrimValue};
use crate::subst::{subst_atom_expr, subst_atom_stmt, subst_expr};
use crate::typecheck::{CheckedProgram, StateTyper};

pub const DEFAULT_FUEL: u64 = 1_000_000;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Value {
    Num(i64),
    Fun(Box<FunExpr>),
    EffAbs(Name, Box<Expr>),
    List(Vec<i64>),
}

impl Value {
    pub fn to_expr(&self) -> Expr {
        match self {
            Value::Num(n) => Expr::Num(*n),
            Value::Fun(f) => Expr::Fun(f.clone()),
            Value::EffAbs(x, e) => Expr::EffAbs(x.clone(), e.clone()),
            Value::List(l) => Expr::List(l.clone()),
        }
    }

    fn cells(&self) -> usize {
        match self {
            Value::List(l) => l.len(),
            _ => 0,
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.to_expr().fmt(f)
    }
}

/// The value stack. `get(ℓ)` reads back-index `ℓ`, counted from the bottom.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ValueStack {
    slots: Vec<Value>,
    cells: usize,
}

impl ValueStack {
    pub fn new() -> Self {
        ValueStack::default()
    }

    pub fn len(&self) -> usize {
        self.slots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.slots.is_empty()
    }

    pub fn get(&self, loc: usize) -> Option<&Value> {
        self.slots.get(loc)
    }

    pub fn push(&mut self, v: Value) {
        self.cells += v.cells();
        self.slots.push(v);
    }

    /// Removes the `n` most recently pushed values.
    pub fn drop_top(&mut self, n: usize) {
        assert!(n <= self.slots.len(), "drop {n} from a stack of {}", self.slots.len());
        for v in self.slots.drain(self.slots.len() - n..) {
            self.cells -= v.cells();
        }
    }

    /// Bottom-to-top.
    pub fn iter(&self) -> std::slice::Iter<'_, Value> {
        self.slots.iter()
    }

    /// List cells held on the stack, counting every slot separately.
    pub fn retained_cells(&self) -> usize {
        self.cells
    }
}

impl FromIterator<Value> for ValueStack {
    fn from_iter<I: IntoIterator<Item = Value>>(iter: I) -> Self {
        let mut s = ValueStack::new();
        for v in iter {
            s.push(v);
        }
        s
    }
}

/// `drop(n, σ)`: the stack without its `n` most recent values.
pub fn drop(n: usize, stack: &ValueStack) -> ValueStack {
    let mut s = stack.clone();
    s.drop_top(n);
    s
}

/// A suspended caller `(x:T, s, n)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Frame {
    pub var: Name,
    pub annot: Type,
    pub rest: Stmt,
    pub locals: usize,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct State {
    pub stmt: Stmt,
    /// Top of the control stack is the last element.
    pub control: Vec<Frame>,
    pub values: ValueStack,
    pub locals: usize,
}

impl State {
    pub fn initial(body: Stmt) -> Self {
        State {
            stmt: body,
            control: Vec::new(),
            values: ValueStack::new(),
            locals: 0,
        }
    }
}

impl fmt::Display for State {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "statement: {}", self.stmt)?;
        writeln!(f, "locals: {}", self.locals)?;
        writeln!(f, "control stack ({} frames, top first):", self.control.len())?;
        for fr in self.control.iter().rev() {
            writeln!(f, "  ({}:{}, {}, {})", fr.var, fr.annot, fr.rest, fr.locals)?;
        }
        writeln!(f, "value stack ({} values, top first):", self.values.len())?;
        for (i, v) in self.values.iter().enumerate().rev() {
            writeln!(f, "  #{i} = {v}")?;
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum StuckKind {
    #[error("location #{0} is outside the value stack")]
    LocationOutOfRange(usize),
    #[error("free variable `{0}` in a closed term")]
    FreeVariable(Name),
    #[error("effect application to a value that is not an effect abstraction")]
    NotAnAbstraction,
    #[error("call of a value that is not a function")]
    NotAFunction,
    #[error("function takes {expected} arguments, given {given}")]
    Arity { expected: usize, given: usize },
    #[error("condition is not an integer")]
    BadCondition,
    #[error("function value lacks its return type annotation")]
    Unelaborated,
    #[error("primitive failed: {0}")]
    Delta(#[from] DeltaError),
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum EvalError {
    #[error("stuck: {0}")]
    Stuck(StuckKind),
    #[error("fuel exhausted")]
    OutOfFuel,
}

impl From<StuckKind> for EvalError {
    fn from(k: StuckKind) -> Self {
        EvalError::Stuck(k)
    }
}

fn burn(fuel: &mut u64) -> Result<(), EvalError> {
    if *fuel == 0 {
        return Err(EvalError::OutOfFuel);
    }
    *fuel -= 1;
    Ok(())
}

fn prim_value(v: Value, op: &'static str) -> Result<PrimValue, EvalError> {
    match v {
        Value::Num(n) => Ok(PrimValue::Int(n)),
        Value::List(l) => Ok(PrimValue::List(l)),
        _ => Err(StuckKind::Delta(DeltaError::Domain { op }).into()),
    }
}

/// `⟦e⟧σ` for a closed expression. Every node evaluated consumes one unit of
/// fuel, so a diverging `fix` cannot hang the caller.
pub fn eval_expr(e: &Expr, sigma: &ValueStack, fuel: &mut u64) -> Result<Value, EvalError> {
    burn(fuel)?;
    match e {
        Expr::Var(x) => Err(StuckKind::FreeVariable(x.clone()).into()),
        Expr::Loc(i, _) => sigma
            .get(*i)
            .cloned()
            .ok_or_else(|| StuckKind::LocationOutOfRange(*i).into()),
        Expr::Num(n) => Ok(Value::Num(*n)),
        Expr::List(l) => Ok(Value::List(l.clone())),
        Expr::Prim(op, args) => {
            let mut vals = Vec::with_capacity(args.len());
            for a in args {
                vals.push(prim_value(eval_expr(a, sigma, fuel)?, op.symbol())?);
            }
            match delta(*op, &vals).map_err(StuckKind::Delta)? {
                PrimValue::Int(n) => Ok(Value::Num(n)),
                PrimValue::List(l) => Ok(Value::List(l)),
            }
        }
        Expr::Fun(f) => Ok(Value::Fun(f.clone())),
        Expr::EffAbs(x, body) => Ok(Value::EffAbs(x.clone(), body.clone())),
        Expr::Let(x, rhs, body) => {
            let v = eval_expr(rhs, sigma, fuel)?;
            eval_expr(&subst_expr(x, &v.to_expr(), body), sigma, fuel)
        }
        Expr::Fix(x, _, body) => eval_expr(&subst_expr(x, e, body), sigma, fuel),
        Expr::EffApp(head, atom) => match eval_expr(head, sigma, fuel)? {
            Value::EffAbs(x, body) => eval_expr(&subst_atom_expr(&x, atom, &body), sigma, fuel),
            _ => Err(StuckKind::NotAnAbstraction.into()),
        },
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Rule {
    Init,
    Call,
    TailCall,
    Return,
    If,
}

#[derive(Clone, Debug, PartialEq, Eq)]
#[allow(clippy::large_enum_variant)]
pub enum StepResult {
    Next(State, Rule),
    Final,
    Stuck(StuckKind),
    OutOfFuel,
}

/// Options controlling a single step.
#[derive(Clone, Copy, Debug)]
pub struct StepMode {
    /// When false, a tail call runs as an ordinary call followed by an
    /// immediate return, so the caller's locals stay on the stack.
    pub tail_calls: bool,
}

impl Default for StepMode {
    fn default() -> Self {
        StepMode { tail_calls: true }
    }
}

/// Name of the temporary that receives a tail call's result when tail
/// calls are disabled. `%` cannot occur in source identifiers.
const TAIL_TEMP: &str = "%ret";

fn eval_call(
    func: &Expr,
    args: &[Expr],
    sigma: &ValueStack,
    fuel: &mut u64,
) -> Result<(FunExpr, Vec<Value>), EvalError> {
    let Value::Fun(f) = eval_expr(func, sigma, fuel)? else {
        return Err(StuckKind::NotAFunction.into());
    };
    if f.params.len() != args.len() {
        return Err(StuckKind::Arity {
            expected: f.params.len(),
            given: args.len(),
        }
        .into());
    }
    let mut vals = Vec::with_capacity(args.len());
    for a in args {
        vals.push(eval_expr(a, sigma, fuel)?);
    }
    Ok((*f, vals))
}

/// Pushes call arguments and substitutes their locations into the body.
fn enter(f: FunExpr, args: Vec<Value>, values: &mut ValueStack) -> Stmt {
    let mut body = f.body;
    for ((y, t), v) in f.params.into_iter().zip(args) {
        let atom = EffectAtom::loc(values.len(), t);
        body = subst_atom_stmt(&y, &atom, &body);
        values.push(v);
    }
    body
}

/// One reduction step. The state is consumed; a new one is returned.
pub fn step(mut st: State, mode: StepMode, fuel: &mut u64) -> StepResult {
    match step_mut(&mut st, mode, fuel) {
        Ok(Some(rule)) => StepResult::Next(st, rule),
        Ok(None) => StepResult::Final,
        Err(EvalError::Stuck(k)) => StepResult::Stuck(k),
        Err(EvalError::OutOfFuel) => StepResult::OutOfFuel,
    }
}

fn take_stmt(st: &mut State) -> Stmt {
    std::mem::replace(&mut st.stmt, Stmt::ret(Expr::Num(0)))
}

fn push_frame(st: &mut State, var: Name, rest: Stmt, f: FunExpr, vals: Vec<Value>) -> Result<(), EvalError> {
    let annot = f.ret.clone().ok_or(StuckKind::Unelaborated)?;
    let arity = vals.len();
    st.control.push(Frame {
        var,
        annot,
        rest,
        locals: st.locals,
    });
    st.stmt = enter(f, vals, &mut st.values);
    st.locals = arity;
    Ok(())
}

/// Reduces `st` in place and returns the rule used, or `None` if `st` is
/// final. All evaluation happens before any mutation, so on error the
/// state is left exactly as it was.
pub fn step_mut(st: &mut State, mode: StepMode, fuel: &mut u64) -> Result<Option<Rule>, EvalError> {
    match &st.stmt {
        Stmt::VarInit { annot, rhs, .. } => {
            let annot = annot.clone().ok_or(StuckKind::Unelaborated)?;
            let v = eval_expr(rhs, &st.values, fuel)?;
            let Stmt::VarInit { var, rest, .. } = take_stmt(st) else {
                unreachable!()
            };
            st.stmt = subst_atom_stmt(&var, &EffectAtom::loc(st.values.len(), annot), &rest);
            st.values.push(v);
            st.locals += 1;
            Ok(Some(Rule::Init))
        }
        Stmt::LetCall { func, args, .. } => {
            let (f, vals) = eval_call(func, args, &st.values, fuel)?;
            f.ret.as_ref().ok_or(StuckKind::Unelaborated)?;
            let Stmt::LetCall { var, rest, .. } = take_stmt(st) else {
                unreachable!()
            };
            push_frame(st, var, *rest, f, vals)?;
            Ok(Some(Rule::Call))
        }
        Stmt::TailCall { func, args, span } => {
            let (f, vals) = eval_call(func, args, &st.values, fuel)?;
            if !mode.tail_calls {
                // Call into a fresh temporary, then return it at once.
                f.ret.as_ref().ok_or(StuckKind::Unelaborated)?;
                let rest = Stmt::Return {
                    value: Expr::var(TAIL_TEMP),
                    span: *span,
                };
                push_frame(st, TAIL_TEMP.to_string(), rest, f, vals)?;
                return Ok(Some(Rule::Call));
            }
            let arity = vals.len();
            st.values.drop_top(st.locals);
            st.stmt = enter(f, vals, &mut st.values);
            st.locals = arity;
            Ok(Some(Rule::TailCall))
        }
        Stmt::Return { value, .. } => {
            if st.control.is_empty() {
                return Ok(None);
            }
            let v = eval_expr(value, &st.values, fuel)?;
            let frame = st.control.pop().expect("checked above");
            st.values.drop_top(st.locals);
            let loc = EffectAtom::loc(st.values.len(), frame.annot);
            st.values.push(v);
            st.stmt = subst_atom_stmt(&frame.var, &loc, &frame.rest);
            st.locals = frame.locals + 1;
            Ok(Some(Rule::Return))
        }
        Stmt::If { cond, .. } => {
            let Value::Num(c) = eval_expr(cond, &st.values, fuel)? else {
                return Err(StuckKind::BadCondition.into());
            };
            let Stmt::If {
                then_branch,
                else_branch,
                ..
            } = take_stmt(st)
            else {
                unreachable!()
            };
            st.stmt = if c != 0 { *then_branch } else { *else_branch };
            Ok(Some(Rule::If))
        }
        Stmt::Proc(_) => Err(StuckKind::Unelaborated.into()),
    }
}

/// What a finished run shows to the outside.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", content = "value", rename_all = "lowercase")]
pub enum Observation {
    Num(i64),
    Fun,
    Abs,
    List(Vec<i64>),
}

impl fmt::Display for Observation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Observation::Num(n) => write!(f, "{n}"),
            Observation::Fun => f.write_str("fun"),
            Observation::Abs => f.write_str("abs"),
            Observation::List(l) => {
                f.write_str("list")?;
                for (i, n) in l.iter().enumerate() {
                    f.write_str(if i == 0 { " " } else { "," })?;
                    write!(f, "{n}")?;
                }
                Ok(())
            }
        }
    }
}

pub fn observe(v: &Value) -> Observation {
    match v {
        Value::Num(n) => Observation::Num(*n),
        Value::Fun(_) => Observation::Fun,
        Value::EffAbs(..) => Observation::Abs,
        Value::List(l) => Observation::List(l.clone()),
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct RunStats {
    pub steps: u64,
    pub max_value_stack: usize,
    pub max_control_stack: usize,
    pub max_retained_cells: usize,
}

impl RunStats {
    fn record(&mut self, st: &State) {
        self.max_value_stack = self.max_value_stack.max(st.values.len());
        self.max_control_stack = self.max_control_stack.max(st.control.len());
        self.max_retained_cells = self.max_retained_cells.max(st.values.retained_cells());
    }
}

#[derive(Clone, Copy, Debug)]
pub struct RunOptions {
    pub fuel: u64,
    /// Check the state against the program's type after every step.
    pub oracle: bool,
    pub tail_calls: bool,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions {
            fuel: DEFAULT_FUEL,
            oracle: false,
            tail_calls: true,
        }
    }
}

/// One line of a trace.
#[derive(Clone, Debug, Serialize)]
pub struct TraceEvent {
    pub version: u32,
    pub step: u64,
    pub rule: Rule,
    /// The statement that was reduced.
    pub stmt: String,
    pub stack_depth: usize,
    pub locals: usize,
    pub control_depth: usize,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RunResult {
    pub observation: Observation,
    pub value: Value,
    pub stats: RunStats,
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum RunError {
    #[error("stuck after {step} steps: {kind}\n{dump}")]
    Stuck {
        step: u64,
        kind: StuckKind,
        dump: String,
    },
    #[error("fuel exhausted after {} steps", stats.steps)]
    FuelExhausted { stats: RunStats },
    #[error("state typing failed after {step} steps: {message}\n{dump}")]
    Oracle {
        step: u64,
        message: String,
        dump: String,
    },
}

pub fn run(p: &CheckedProgram, opts: RunOptions) -> Result<RunResult, RunError> {
    run_with(p, opts, None)
}

/// Runs from `⟨s, ε, ε, 0⟩`, calling `trace` after every step.
pub fn run_traced(
    p: &CheckedProgram,
    opts: RunOptions,
    mut trace: impl FnMut(&TraceEvent),
) -> Result<RunResult, RunError> {
    run_with(p, opts, Some(&mut trace))
}

fn run_with(
    p: &CheckedProgram,
    opts: RunOptions,
    mut trace: Option<&mut dyn FnMut(&TraceEvent)>,
) -> Result<RunResult, RunError> {
    let mode = StepMode {
        tail_calls: opts.tail_calls,
    };
    let mut fuel = opts.fuel;
    let mut stats = RunStats::default();
    let mut st = State::initial(p.program.body.clone());
    let mut typer = StateTyper::new();
    let mut check = |st: &State, step: u64, keep: (usize, usize)| -> Result<(), RunError> {
        if !opts.oracle {
            return Ok(());
        }
        let fail = |message: String| RunError::Oracle {
            step,
            message,
            dump: st.to_string(),
        };
        match typer.retype(st, keep.0, keep.1) {
            Ok(t) if t == p.ty => Ok(()),
            Ok(t) => Err(fail(format!("state has type {t}, program has type {}", p.ty))),
            Err(e) => Err(fail(e.to_string())),
        }
    };
    check(&st, 0, (0, 0))?;
    stats.record(&st);
    loop {
        if let (Stmt::Return { value, .. }, true) = (&st.stmt, st.control.is_empty()) {
            return match eval_expr(value, &st.values, &mut fuel) {
                Ok(v) => Ok(RunResult {
                    observation: observe(&v),
                    value: v,
                    stats,
                }),
                Err(EvalError::OutOfFuel) => Err(RunError::FuelExhausted { stats }),
                Err(EvalError::Stuck(kind)) => Err(RunError::Stuck {
                    step: stats.steps,
                    kind,
                    dump: st.to_string(),
                }),
            };
        }
        if fuel == 0 {
            return Err(RunError::FuelExhausted { stats });
        }
        fuel -= 1;
        let stmt_text = trace.as_ref().map(|_| st.stmt.to_string());
        // Everything below the running level survives any single step.
        let keep_values = st.values.len() - st.locals;
        let control_before = st.control.len();
        match step_mut(&mut st, mode, &mut fuel) {
            Ok(Some(rule)) => {
                stats.steps += 1;
                stats.record(&st);
                if let (Some(t), Some(stmt)) = (trace.as_mut(), stmt_text) {
                    t(&TraceEvent {
                        version: 1,
                        step: stats.steps,
                        rule,
                        stmt,
                        stack_depth: st.values.len(),
                        locals: st.locals,
                        control_depth: st.control.len(),
                    });
                }
                check(&st, stats.steps, (keep_values, control_before.min(st.control.len())))?;
            }
            Ok(None) => unreachable!("final states are handled before stepping"),
            Err(EvalError::Stuck(kind)) => {
                return Err(RunError::Stuck {
                    step: stats.steps,
                    kind,
                    dump: st.to_string(),
                })
            }
            Err(EvalError::OutOfFuel) => return Err(RunError::FuelExhausted { stats }),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frontend::load;
    use crate::typecheck::check_program;

    fn run_src(src: &str) -> Result<RunResult, RunError> {
        let cp = check_program(&load("t.fk", src).unwrap().ast).unwrap();
        run(
            &cp,
            RunOptions {
                oracle: true,
                ..RunOptions::default()
            },
        )
    }

    #[test]
    fn literal_and_location() {
        let mut fuel = 10;
        assert_eq!(eval_expr(&Expr::Num(7), &ValueStack::new(), &mut fuel), Ok(Value::Num(7)));
        let sigma: ValueStack = [Value::Num(4)].into_iter().collect();
        assert_eq!(eval_expr(&Expr::Loc(0, Type::Int), &sigma, &mut fuel), Ok(Value::Num(4)));
    }

    #[test]
    fn init_step() {
        let cp = check_program(&load("t.fk", "var x:int = 1; return x;").unwrap().ast).unwrap();
        let mut fuel = 100;
        let StepResult::Next(st, Rule::Init) =
            step(State::initial(cp.program.body), StepMode::default(), &mut fuel)
        else {
            panic!()
        };
        assert_eq!(st.stmt.to_string(), "return #0:int;");
        assert_eq!(st.values.len(), 1);
        assert_eq!(st.locals, 1);
        let mut fuel = 100;
        assert_eq!(step(st, StepMode::default(), &mut fuel), StepResult::Final);
    }

    #[test]
    fn drop_keeps_back_indices() {
        let s: ValueStack = [Value::Num(1), Value::Num(2)].into_iter().collect();
        assert_eq!(drop(1, &s).get(0), Some(&Value::Num(1)));
        assert_eq!(drop(0, &s), s);
        assert!(drop(2, &s).is_empty());
    }

    #[test]
    fn observations_render() {
        assert_eq!(Observation::List(vec![0, 0]).to_string(), "list 0,0");
        assert_eq!(Observation::List(vec![]).to_string(), "list");
        assert_eq!(observe(&Value::Num(5)).to_string(), "5");
    }

    #[test]
    fn runs_with_oracle() {
        let r = run_src("var x = 1; var f = fun(y:int)[x]{ return x + y; }; var z = f(2); return z;").unwrap();
        assert_eq!(r.observation, Observation::Num(3));
    }

    #[test]
    fn fuel_bounds_divergence() {
        let src = "var f = fix f: func(int,int). fun(a:int){ return f(a); }; return f(0);";
        let cp = check_program(&load("t.fk", src).unwrap().ast).unwrap();
        let r = run(&cp, RunOptions { fuel: 1000, ..RunOptions::default() });
        assert!(matches!(r, Err(RunError::FuelExhausted { .. })));
    }

    #[test]
    fn empty_head_is_stuck() {
        let r = run_src("var l = nil; return head(l);");
        assert!(matches!(
            r,
            Err(RunError::Stuck { kind: StuckKind::Delta(DeltaError::EmptyList("head")), .. })
        ));
    }
}
