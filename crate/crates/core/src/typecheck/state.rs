//! Typing of machine states.
//!
//! A stack typing `Σ` gives a type to every occupied location. A state
//! `⟨s, κ, σ, n⟩` is typed level by level. The running statement owns the
//! top `n` locations, each frame `(x:T, s', n')` owns the `n'` below that,
//! and so on down. Each level is checked with the ordinary statement rules,
//! where `φ2` is the set of locations the level owns and `φ1` adds every
//! location the level actually reads. Atoms of `φ1` outside `φ2` must
//! belong to some level further down.

use super::{err, wf_type, Binding, Checker, TypeEnv, TypeError, TypeErrorKind};
use crate::ast::{Effect, EffectAtom, Name, Stmt, Type};
use crate::machine::{Observation, State, ValueStack};

/// `Σ`, indexed like the value stack (from the bottom).
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct StackTyping(pub Vec<Type>);

impl StackTyping {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn get(&self, loc: usize) -> Option<&Type> {
        self.0.get(loc)
    }

    /// `drop(n, Σ)`.
    pub fn drop_top(&self, n: usize) -> StackTyping {
        StackTyping(self.0[..self.0.len().saturating_sub(n)].to_vec())
    }

    /// The atoms for the top `n` locations.
    pub fn top_atoms(&self, n: usize) -> Effect {
        let len = self.0.len();
        (len.saturating_sub(n)..len)
            .map(|i| EffectAtom::loc(i, self.0[i].clone()))
            .collect()
    }
}

/// `Σ ⊨ φ`: every atom is a location of `Σ` carrying the type `Σ` gives it.
pub fn satisfies(sigma: &StackTyping, eff: &Effect) -> bool {
    satisfies_slice(&sigma.0, eff)
}

fn satisfies_slice(sigma: &[Type], eff: &Effect) -> bool {
    eff.iter().all(|a| match a {
        EffectAtom::Var(_) => false,
        EffectAtom::Loc(i, t) => sigma.get(*i) == Some(&**t),
    })
}

fn state_err(kind: TypeErrorKind, message: impl Into<String>) -> TypeError {
    err(kind, Default::default(), format!("state typing: {}", message.into()))
}

/// Types every stored value as a closed expression under an empty effect.
pub fn type_value_stack(sigma: &ValueStack) -> Result<StackTyping, TypeError> {
    let mut out = Vec::with_capacity(sigma.len());
    extend_value_typing(&mut out, sigma)?;
    Ok(StackTyping(out))
}

/// Types the values of `sigma` beyond those already typed in `out`.
fn extend_value_typing(out: &mut Vec<Type>, sigma: &ValueStack) -> Result<(), TypeError> {
    for i in out.len()..sigma.len() {
        let mut e = sigma.get(i).expect("in range").to_expr();
        let t = Checker::new(TypeEnv::new())
            .expr(&Effect::empty(), &mut e)
            .map_err(|e| state_err(e.kind, format!("value #{i}: {}", e.message)))?;
        out.push(t);
    }
    Ok(())
}

/// Types one level: the statement `s` owning the top `n` locations of `Σ`,
/// optionally with the pending result variable of a frame.
fn type_level(
    sigma: &[Type],
    n: usize,
    binder: Option<(&Name, &Type)>,
    s: &Stmt,
) -> Result<Type, TypeError> {
    if n > sigma.len() {
        return Err(state_err(
            TypeErrorKind::Mismatch,
            format!("level owns {n} locations but only {} remain", sigma.len()),
        ));
    }
    let mut phi2: Effect = (sigma.len() - n..sigma.len())
        .map(|i| EffectAtom::loc(i, sigma[i].clone()))
        .collect();
    let mut env = TypeEnv::new();
    if let Some((x, t)) = binder {
        wf_type(&env, t).map_err(|e| state_err(e.kind, e.message))?;
        env.push(x.clone(), Binding::Plain(t.clone()));
        phi2.insert(EffectAtom::Var(x.clone()));
    }
    let mut checker = Checker::collecting(env);
    let mut s = s.clone();
    let t = checker
        .stmt(&phi2, &phi2, &mut s)
        .map_err(|e| state_err(e.kind, e.message))?;
    let required = checker.into_required();
    let owned: Effect = phi2.iter().filter(|a| a.as_var().is_none()).cloned().collect();
    let phi1 = owned.union(&required);
    if !satisfies_slice(sigma, &phi1) {
        return Err(state_err(
            TypeErrorKind::NotInEffect,
            format!("reads {phi1}, not all of which lie on the stack with those types"),
        ));
    }
    let below = &sigma[..sigma.len() - n];
    if !satisfies_slice(below, &phi1.minus(&owned)) {
        return Err(state_err(
            TypeErrorKind::NotInEffect,
            format!("reads {} which are not below the current level", phi1.minus(&owned)),
        ));
    }
    Ok(t)
}

/// `⊢ ⟨s, κ, σ, n⟩ : T`.
pub fn type_state(st: &State) -> Result<Type, TypeError> {
    StateTyper::new().retype(st, 0, 0)
}

/// Types a sequence of states, reusing the typings of stack slots and
/// frames that a step left untouched.
#[derive(Clone, Debug, Default)]
pub struct StateTyper {
    sigma: Vec<Type>,
    /// Result type of each frame's level, bottom frame first.
    frames: Vec<Type>,
}

impl StateTyper {
    pub fn new() -> Self {
        StateTyper::default()
    }

    /// Types `st`. The bottom `keep_values` stack slots and `keep_frames`
    /// frames must be identical to those of the state passed last time.
    pub fn retype(&mut self, st: &State, keep_values: usize, keep_frames: usize) -> Result<Type, TypeError> {
        self.sigma.truncate(keep_values);
        self.frames.truncate(keep_frames);
        extend_value_typing(&mut self.sigma, &st.values)?;
        let mut base = 0;
        for (i, fr) in st.control.iter().enumerate() {
            let end = base + fr.locals;
            if end > self.sigma.len() {
                return Err(state_err(
                    TypeErrorKind::Mismatch,
                    format!("frame {i} owns locations beyond the stack"),
                ));
            }
            if i >= self.frames.len() {
                let t = type_level(&self.sigma[..end], fr.locals, Some((&fr.var, &fr.annot)), &fr.rest)?;
                self.frames.push(t);
            }
            base = end;
        }
        if base + st.locals != self.sigma.len() {
            return Err(state_err(
                TypeErrorKind::Mismatch,
                format!(
                    "levels own {} locations but the stack holds {}",
                    base + st.locals,
                    self.sigma.len()
                ),
            ));
        }
        let mut t = type_level(&self.sigma, st.locals, None, &st.stmt)?;
        for (fr, out) in st.control.iter().zip(&self.frames).rev() {
            if t != fr.annot {
                return Err(state_err(
                    TypeErrorKind::Mismatch,
                    format!("frame for `{}` expects {}, callee produces {t}", fr.var, fr.annot),
                ));
            }
            t = out.clone();
        }
        Ok(t)
    }
}

/// Whether an observation can be produced by a program of type `t`.
pub fn type_observation(o: &Observation, t: &Type) -> bool {
    matches!(
        (o, t),
        (Observation::Num(_), Type::Int)
            | (Observation::List(_), Type::IntList)
            | (Observation::Fun, Type::Func { .. })
            | (Observation::Abs, Type::EffAll(..))
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ast::Expr;
    use crate::frontend::load;
    use crate::machine::{step, StepMode, StepResult, Value};
    use crate::typecheck::check_program;

    #[test]
    fn satisfaction() {
        let sigma = StackTyping(vec![Type::Int, Type::IntList]);
        assert!(satisfies(&sigma, &Effect::singleton(EffectAtom::loc(1, Type::IntList))));
        assert!(!satisfies(&sigma, &Effect::singleton(EffectAtom::loc(1, Type::Int))));
        assert!(!satisfies(&sigma, &Effect::singleton(EffectAtom::loc(2, Type::Int))));
        assert!(!satisfies(&sigma, &Effect::from_vars(["x"])));
        assert!(satisfies(&StackTyping::default(), &Effect::empty()));
    }

    #[test]
    fn every_step_preserves_the_type() {
        let src = "var x = 3; var f = fun(y:int)[x]{ return x + y; }; var r = f(4); return r;";
        let cp = check_program(&load("t.fk", src).unwrap().ast).unwrap();
        let mut st = State::initial(cp.program.body.clone());
        let mut fuel = 1000;
        loop {
            assert_eq!(type_state(&st).unwrap(), Type::Int, "{st}");
            match step(st, StepMode::default(), &mut fuel) {
                StepResult::Next(next, _) => st = next,
                StepResult::Final => break,
                other => panic!("{other:?}"),
            }
        }
    }

    #[test]
    fn location_typed_wrongly_is_rejected() {
        let st = State {
            stmt: Stmt::ret(Expr::Loc(0, Type::IntList)),
            control: Vec::new(),
            values: [Value::Num(1)].into_iter().collect(),
            locals: 1,
        };
        assert!(type_state(&st).is_err());
    }

    #[test]
    fn unowned_locations_are_rejected() {
        let st = State {
            stmt: Stmt::ret(Expr::Num(0)),
            control: Vec::new(),
            values: [Value::Num(1)].into_iter().collect(),
            locals: 0,
        };
        assert_eq!(type_state(&st).unwrap_err().kind, TypeErrorKind::Mismatch);
    }

    #[test]
    fn incremental_typing_matches_full_typing() {
        for entry in crate::corpus::corpus() {
            if !matches!(entry.expected, crate::corpus::Expected::Accept(..)) || entry.name == "tailcall_lists" {
                continue;
            }
            let cp = check_program(&load(entry.name, entry.source).unwrap().ast).unwrap();
            let mut st = State::initial(cp.program.body.clone());
            let mut typer = StateTyper::new();
            let (mut keep_values, mut keep_frames) = (0, 0);
            let mut fuel = 100_000;
            loop {
                let full = type_state(&st);
                let inc = typer.retype(&st, keep_values, keep_frames.min(st.control.len()));
                assert_eq!(full.ok(), inc.ok(), "{}: {st}", entry.name);
                keep_values = st.values.len() - st.locals;
                keep_frames = st.control.len();
                match step(st, StepMode::default(), &mut fuel) {
                    StepResult::Next(next, _) => st = next,
                    StepResult::Final => break,
                    other => panic!("{}: {other:?}", entry.name),
                }
            }
        }
    }

    #[test]
    fn observation_types() {
        assert!(type_observation(&Observation::Num(1), &Type::Int));
        assert!(!type_observation(&Observation::Fun, &Type::Int));
    }
}
