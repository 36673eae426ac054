//! Runs one checked program under all three semantics and compares what
//! they observe.

use serde::Serialize;

use crate::erasure::{erase, erased_view, run_erased};
use crate::machine::{run, Observation, RunError, RunOptions};
use crate::regions::{region_run, region_typecheck, translate_program, translate_type, RegionMap, RegionTrap};
use crate::typecheck::CheckedProgram;

/// Region evaluation takes many small transitions per machine step, so it
/// gets a proportionally larger budget.
pub const REGION_FUEL_FACTOR: u64 = 64;

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "outcome", rename_all = "kebab-case")]
pub enum Outcome {
    Value { observation: Observation },
    Stuck { message: String },
    Trap { message: String, dangling: bool },
    FuelExhausted,
}

impl Outcome {
    fn from_run(r: Result<Observation, RunError>) -> Self {
        match r {
            Ok(observation) => Outcome::Value { observation },
            Err(RunError::FuelExhausted { .. }) => Outcome::FuelExhausted,
            Err(e) => Outcome::Stuck {
                message: e.to_string().lines().next().unwrap_or_default().to_string(),
            },
        }
    }

    pub fn observation(&self) -> Option<&Observation> {
        match self {
            Outcome::Value { observation } => Some(observation),
            _ => None,
        }
    }
}

impl std::fmt::Display for Outcome {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Outcome::Value { observation } => write!(f, "{observation}"),
            Outcome::Stuck { message } => write!(f, "stuck ({message})"),
            Outcome::Trap { message, .. } => write!(f, "trap ({message})"),
            Outcome::FuelExhausted => f.write_str("fuel exhausted"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct DiffEntry {
    pub name: String,
    pub source: Outcome,
    pub erased: Outcome,
    pub region: Outcome,
    /// The translated program's region type is the translation of its
    /// source type.
    pub region_types_preserved: bool,
    pub agree: bool,
    pub caveats: Vec<String>,
}

impl DiffEntry {
    pub fn dangling(&self) -> bool {
        matches!(self.region, Outcome::Trap { dangling: true, .. })
    }
}

/// An input that did not check, so it has no semantics to compare.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Rejected {
    pub name: String,
    pub kind: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct DiffReport {
    pub version: u32,
    pub entries: Vec<DiffEntry>,
    pub rejected: Vec<Rejected>,
    pub all_agree: bool,
}

impl DiffReport {
    pub fn new(entries: Vec<DiffEntry>, rejected: Vec<Rejected>) -> Self {
        let all_agree = entries.iter().all(|e| e.agree);
        DiffReport {
            version: 1,
            entries,
            rejected,
            all_agree,
        }
    }
}

impl std::fmt::Display for DiffReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        for e in &self.entries {
            let verdict = if e.agree { "agree" } else { "DISAGREE" };
            write!(
                f,
                "{}: {verdict}: source {} | erased {} | region {}",
                e.name, e.source, e.erased, e.region
            )?;
            if !e.region_types_preserved {
                f.write_str(" | region type not preserved")?;
            }
            for c in &e.caveats {
                write!(f, " | note: {c}")?;
            }
            writeln!(f)?;
        }
        for r in &self.rejected {
            writeln!(f, "{}: rejected ({})", r.name, r.kind)?;
        }
        let agreeing = self.entries.iter().filter(|e| e.agree).count();
        write!(f, "{agreeing}/{} programs agree", self.entries.len())
    }
}

pub fn diff_program(name: &str, cp: &CheckedProgram, fuel: u64) -> DiffEntry {
    let mut caveats = Vec::new();
    let source = Outcome::from_run(
        run(
            cp,
            RunOptions {
                fuel,
                ..RunOptions::default()
            },
        )
        .map(|r| r.observation),
    );
    let erased = Outcome::from_run(run_erased(&erase(&cp.program), fuel).map(|(o, _)| o));

    let (region, region_types_preserved) = match translate_program(&cp.program) {
        Err(e) => (
            Outcome::Stuck {
                message: format!("translation failed: {e}"),
            },
            false,
        ),
        Ok(term) => {
            let preserved = match (
                region_typecheck(&Vec::new(), &Default::default(), &term),
                translate_type(&cp.ty, &RegionMap::new()),
            ) {
                (Ok(got), Ok(want)) => got == want,
                _ => false,
            };
            let outcome = match region_run(&term, fuel.saturating_mul(REGION_FUEL_FACTOR)) {
                Ok(out) => {
                    if out.opaque_location {
                        caveats.push("region result is a bare location, observed as fun".to_string());
                    }
                    Outcome::Value {
                        observation: out.observation,
                    }
                }
                Err(RegionTrap::FuelExhausted { .. }) => Outcome::FuelExhausted,
                Err(t @ RegionTrap::Dangling { .. }) => Outcome::Trap {
                    message: t.to_string(),
                    dangling: true,
                },
                Err(t) => Outcome::Trap {
                    message: t.to_string(),
                    dangling: false,
                },
            };
            (outcome, preserved)
        }
    };

    if source.observation() == Some(&Observation::Abs) {
        caveats.push("effect abstraction observed as fun after erasure".to_string());
    }
    let agree = match (&source, &erased, &region) {
        (Outcome::Value { observation: s }, Outcome::Value { observation: e }, Outcome::Value { observation: r }) => {
            erased_view(s) == *e && s == r
        }
        _ => false,
    };
    DiffEntry {
        name: name.to_string(),
        source,
        erased,
        region,
        region_types_preserved,
        agree,
        caveats,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pipeline::compile;

    #[test]
    fn twice_agrees_everywhere() {
        let c = compile(
            "t.fk",
            "var x = 1; var addx = fun(z:int)[x]{ return x + z; };\n\
             var twice = fun(f: func(int,int,[x]), y:int)[x]{ var t = f(y); return f(t); };\n\
             var b = twice(addx, 3); return b;",
        )
        .unwrap();
        let d = diff_program("t", &c.checked, 10_000);
        assert!(d.agree, "{d:?}");
        assert!(d.region_types_preserved);
        assert_eq!(d.source.observation(), Some(&Observation::Num(5)));
    }

    #[test]
    fn abstraction_result_is_a_caveat() {
        let c = compile("t.fk", "return <p> fun()[p]{ return 0; };").unwrap();
        let d = diff_program("t", &c.checked, 1000);
        assert!(d.agree);
        assert_eq!(d.caveats.len(), 1);
    }
}
