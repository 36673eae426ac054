//! The `funk` command-line driver.
//!
//! Exit codes: 0 success, 1 the program does not check, 2 the program got
//! stuck or trapped, 3 fuel ran out, 4 the semantics disagree, 64 usage.

use std::ffi::OsString;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use serde_json::json;

use crate::diff::{diff_program, DiffReport, Rejected, REGION_FUEL_FACTOR};
use crate::erasure::{erase, run_erased};
use crate::machine::{run, run_traced, RunError, RunOptions, DEFAULT_FUEL};
use crate::pipeline::{compile, Compiled, Diagnostic};
use crate::regions::{region_run, region_typecheck, translate_program, RegionTrap};

pub const EXIT_OK: i32 = 0;
pub const EXIT_TYPE_ERROR: i32 = 1;
pub const EXIT_STUCK: i32 = 2;
pub const EXIT_FUEL: i32 = 3;
pub const EXIT_DISAGREE: i32 = 4;
pub const EXIT_USAGE: i32 = 64;

/// Overrides the default fuel when `--fuel` is absent.
pub const FUEL_ENV: &str = "FUNK_FUEL";

#[derive(Debug, Parser)]
#[command(name = "funk", version, about = "Check and run stack-allocated higher-order programs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Type-check a program and print its type.
    Check(Input),
    /// Run a program on the stack machine.
    Run {
        #[command(flatten)]
        input: Input,
        #[command(flatten)]
        exec: Exec,
        /// Run tail calls as ordinary calls that keep the caller's frame.
        #[arg(long)]
        no_tailcall: bool,
    },
    /// Print every machine step.
    Trace {
        #[command(flatten)]
        input: Input,
        #[command(flatten)]
        exec: Exec,
    },
    /// Run the program with all types and effects erased.
    EraseRun {
        #[command(flatten)]
        input: Input,
        #[command(flatten)]
        fuel: Fuel,
    },
    /// Print the translation into the region calculus.
    EmitRegions(Input),
    /// Run the translation into the region calculus.
    RegionRun {
        #[command(flatten)]
        input: Input,
        #[command(flatten)]
        fuel: Fuel,
    },
    /// Run all three semantics on a file or every `.fk` file of a directory.
    Diff {
        #[command(flatten)]
        input: Input,
        #[command(flatten)]
        fuel: Fuel,
    },
    /// Print space and step counts of a machine run.
    Stats {
        #[command(flatten)]
        input: Input,
        #[command(flatten)]
        exec: Exec,
        #[arg(long)]
        no_tailcall: bool,
    },
}

#[derive(Debug, Args)]
struct Input {
    /// Source file; standard input when absent or `-`.
    input: Option<PathBuf>,
    /// Print JSON instead of text.
    #[arg(long)]
    json: bool,
}

#[derive(Debug, Args)]
struct Fuel {
    /// Maximum number of steps (default: $FUNK_FUEL or 1000000).
    #[arg(long)]
    fuel: Option<u64>,
}

#[derive(Debug, Args)]
struct Exec {
    #[command(flatten)]
    fuel: Fuel,
    /// Type the machine state after every step.
    #[arg(long)]
    oracle: bool,
}

struct Io<'a> {
    stdin: &'a mut dyn Read,
    out: &'a mut dyn Write,
    err: &'a mut dyn Write,
    fuel_env: Option<String>,
}

/// Failure that ends a command with a given exit code.
struct Exit(i32);

type CmdResult = Result<(), Exit>;

/// Runs the driver against the process's standard streams.
pub fn main<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let stdin = std::io::stdin();
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    run_cli(
        args,
        &mut stdin.lock(),
        &mut stdout.lock(),
        &mut stderr.lock(),
        std::env::var(FUEL_ENV).ok(),
    )
}

/// Runs the driver against the given streams and fuel override.
pub fn run_cli<I, T>(
    args: I,
    stdin: &mut dyn Read,
    out: &mut dyn Write,
    err: &mut dyn Write,
    fuel_env: Option<String>,
) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if e.use_stderr() {
                err.write_all(text.as_bytes())
            } else {
                out.write_all(text.as_bytes())
            };
            return code;
        }
    };
    let mut io = Io {
        stdin,
        out,
        err,
        fuel_env,
    };
    match dispatch(cli.command, &mut io) {
        Ok(()) => EXIT_OK,
        Err(Exit(code)) => code,
    }
}

fn dispatch(cmd: Command, io: &mut Io) -> CmdResult {
    match cmd {
        Command::Check(input) => check(&input, io),
        Command::Run {
            input,
            exec,
            no_tailcall,
        } => machine_run(&input, &exec, no_tailcall, false, io),
        Command::Stats {
            input,
            exec,
            no_tailcall,
        } => machine_run(&input, &exec, no_tailcall, true, io),
        Command::Trace { input, exec } => trace(&input, &exec, io),
        Command::EraseRun { input, fuel } => erase_run(&input, &fuel, io),
        Command::EmitRegions(input) => emit_regions(&input, io),
        Command::RegionRun { input, fuel } => regions_run(&input, &fuel, io),
        Command::Diff { input, fuel } => diff(&input, &fuel, io),
    }
}

impl Io<'_> {
    fn fuel(&mut self, f: &Fuel) -> Result<u64, Exit> {
        if let Some(n) = f.fuel {
            return Ok(n);
        }
        match self.fuel_env.clone() {
            None => Ok(DEFAULT_FUEL),
            Some(s) => s.trim().parse().map_err(|_| {
                self.usage(&format!("{FUEL_ENV} must be a non-negative integer, found `{s}`"))
            }),
        }
    }

    fn usage(&mut self, message: &str) -> Exit {
        let _ = writeln!(self.err, "funk: {message}");
        Exit(EXIT_USAGE)
    }

    fn say(&mut self, text: impl std::fmt::Display) {
        let _ = writeln!(self.out, "{text}");
    }

    fn emit_json(&mut self, v: &impl Serialize) {
        let text = serde_json::to_string(v).expect("JSON output serializes");
        self.say(text);
    }

    fn fail(&mut self, json: bool, code: i32, kind: &str, message: &str) -> Exit {
        let _ = writeln!(self.err, "{message}");
        if json {
            self.emit_json(&json!({"version": 1, "error": kind, "message": message}));
        }
        Exit(code)
    }

    fn read_source(&mut self, input: &Input) -> Result<(String, String), Exit> {
        match input.input.as_deref() {
            None => self.read_stdin(),
            Some(p) if p == Path::new("-") => self.read_stdin(),
            Some(p) => std::fs::read_to_string(p)
                .map(|s| (p.display().to_string(), s))
                .map_err(|e| self.usage(&format!("cannot read {}: {e}", p.display()))),
        }
    }

    fn read_stdin(&mut self) -> Result<(String, String), Exit> {
        let mut s = String::new();
        match self.stdin.read_to_string(&mut s) {
            Ok(_) => Ok(("<stdin>".to_string(), s)),
            Err(e) => Err(self.usage(&format!("cannot read standard input: {e}"))),
        }
    }

    fn compile(&mut self, input: &Input) -> Result<Compiled, Exit> {
        let (path, src) = self.read_source(input)?;
        compile(&path, &src).map_err(|d| self.diagnostic(input.json, &d))
    }

    fn diagnostic(&mut self, json: bool, d: &Diagnostic) -> Exit {
        let _ = writeln!(self.err, "{d}");
        if json {
            self.emit_json(&json!({"version": 1, "error": "type-error", "diagnostic": d}));
        }
        Exit(EXIT_TYPE_ERROR)
    }

    fn run_error(&mut self, json: bool, e: &RunError) -> Exit {
        match e {
            RunError::FuelExhausted { stats } => {
                let msg = e.to_string();
                let _ = writeln!(self.err, "{msg}");
                if json {
                    self.emit_json(&json!({"version": 1, "error": "fuel-exhausted", "message": msg, "stats": stats}));
                }
                Exit(EXIT_FUEL)
            }
            RunError::Stuck { .. } => self.fail(json, EXIT_STUCK, "stuck", &e.to_string()),
            RunError::Oracle { .. } => self.fail(json, EXIT_STUCK, "oracle", &e.to_string()),
        }
    }
}

fn check(input: &Input, io: &mut Io) -> CmdResult {
    let c = io.compile(input)?;
    if input.json {
        io.emit_json(&json!({"version": 1, "type": c.checked.ty.to_string()}));
    } else {
        io.say(&c.checked.ty);
    }
    Ok(())
}

fn machine_run(input: &Input, exec: &Exec, no_tailcall: bool, stats_only: bool, io: &mut Io) -> CmdResult {
    let fuel = io.fuel(&exec.fuel)?;
    let c = io.compile(input)?;
    let opts = RunOptions {
        fuel,
        oracle: exec.oracle,
        tail_calls: !no_tailcall,
    };
    let r = run(&c.checked, opts).map_err(|e| io.run_error(input.json, &e))?;
    match (input.json, stats_only) {
        (true, false) => io.emit_json(&json!({"version": 1, "observation": r.observation, "stats": r.stats})),
        (true, true) => io.emit_json(&json!({"version": 1, "stats": r.stats})),
        (false, false) => io.say(&r.observation),
        (false, true) => {
            let s = r.stats;
            io.say(format!(
                "steps: {}\nmax_value_stack: {}\nmax_control_stack: {}\nmax_retained_cells: {}",
                s.steps, s.max_value_stack, s.max_control_stack, s.max_retained_cells
            ));
        }
    }
    Ok(())
}

fn trace(input: &Input, exec: &Exec, io: &mut Io) -> CmdResult {
    let fuel = io.fuel(&exec.fuel)?;
    let c = io.compile(input)?;
    let opts = RunOptions {
        fuel,
        oracle: exec.oracle,
        ..RunOptions::default()
    };
    let json = input.json;
    let out = &mut *io.out;
    let r = run_traced(&c.checked, opts, |ev| {
        let _ = if json {
            writeln!(out, "{}", serde_json::to_string(ev).expect("trace events serialize"))
        } else {
            let first = ev.stmt.lines().next().unwrap_or_default();
            writeln!(
                out,
                "{:>6} {:<8} stack={} locals={} control={}  {first}",
                ev.step,
                format!("{:?}", ev.rule),
                ev.stack_depth,
                ev.locals,
                ev.control_depth
            )
        };
    })
    .map_err(|e| io.run_error(json, &e))?;
    if json {
        io.emit_json(&json!({"version": 1, "final": true, "observation": r.observation, "stats": r.stats}));
    } else {
        io.say(format!("result: {} after {} steps", r.observation, r.stats.steps));
    }
    Ok(())
}

fn erase_run(input: &Input, fuel: &Fuel, io: &mut Io) -> CmdResult {
    let fuel = io.fuel(fuel)?;
    let c = io.compile(input)?;
    let erased = erase(&c.checked.program);
    let (obs, stats) = run_erased(&erased, fuel).map_err(|e| io.run_error(input.json, &e))?;
    if input.json {
        io.emit_json(&json!({"version": 1, "observation": obs, "stats": stats}));
    } else {
        io.say(obs);
    }
    Ok(())
}

fn emit_regions(input: &Input, io: &mut Io) -> CmdResult {
    let c = io.compile(input)?;
    let term = translate_program(&c.checked.program)
        .map_err(|e| io.fail(input.json, EXIT_STUCK, "translation", &format!("translation failed: {e}")))?;
    let ty = region_typecheck(&Vec::new(), &Default::default(), &term).map_err(|e| {
        io.fail(
            input.json,
            EXIT_STUCK,
            "region-type",
            &format!("translated program does not type: {e}"),
        )
    })?;
    if input.json {
        io.emit_json(&json!({"version": 1, "term": term.to_string(), "type": ty.to_string()}));
    } else {
        io.say(&term);
        io.say(format!(": {ty}"));
    }
    Ok(())
}

fn regions_run(input: &Input, fuel: &Fuel, io: &mut Io) -> CmdResult {
    let fuel = io.fuel(fuel)?;
    let c = io.compile(input)?;
    let json = input.json;
    let term = translate_program(&c.checked.program)
        .map_err(|e| io.fail(json, EXIT_STUCK, "translation", &format!("translation failed: {e}")))?;
    match region_run(&term, fuel.saturating_mul(REGION_FUEL_FACTOR)) {
        Ok(out) => {
            if json {
                io.emit_json(&json!({"version": 1, "observation": out.observation, "stats": out.stats}));
            } else {
                io.say(out.observation);
            }
            Ok(())
        }
        Err(t @ RegionTrap::FuelExhausted { .. }) => Err(io.fail(json, EXIT_FUEL, "fuel-exhausted", &t.to_string())),
        Err(t @ RegionTrap::Dangling { .. }) => Err(io.fail(json, EXIT_STUCK, "dangling", &t.to_string())),
        Err(t) => Err(io.fail(json, EXIT_STUCK, "stuck", &t.to_string())),
    }
}

fn diff(input: &Input, fuel: &Fuel, io: &mut Io) -> CmdResult {
    let fuel = io.fuel(fuel)?;
    let report = match input.input.as_deref() {
        Some(dir) if dir.is_dir() => {
            let mut files: Vec<PathBuf> = std::fs::read_dir(dir)
                .map_err(|e| io.usage(&format!("cannot read {}: {e}", dir.display())))?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|p| p.extension().is_some_and(|x| x == "fk"))
                .collect();
            files.sort();
            let mut entries = Vec::new();
            let mut rejected = Vec::new();
            for f in files {
                let src = std::fs::read_to_string(&f)
                    .map_err(|e| io.usage(&format!("cannot read {}: {e}", f.display())))?;
                let name = f.display().to_string();
                match compile(&name, &src) {
                    Ok(c) => entries.push(diff_program(&name, &c.checked, fuel)),
                    Err(d) => rejected.push(Rejected { name, kind: d.kind }),
                }
            }
            DiffReport::new(entries, rejected)
        }
        _ => {
            let (path, src) = io.read_source(input)?;
            let c = compile(&path, &src).map_err(|d| io.diagnostic(input.json, &d))?;
            DiffReport::new(vec![diff_program(&path, &c.checked, fuel)], Vec::new())
        }
    };
    if input.json {
        io.emit_json(&report);
    } else {
        io.say(&report);
    }
    let sound = report.all_agree && report.entries.iter().all(|e| e.region_types_preserved);
    if sound {
        Ok(())
    } else {
        Err(Exit(EXIT_DISAGREE))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cli(args: &[&str], stdin: &str) -> (i32, String, String) {
        let mut input = stdin.as_bytes();
        let (mut out, mut err) = (Vec::new(), Vec::new());
        let code = run_cli(
            std::iter::once("funk").chain(args.iter().copied()),
            &mut input,
            &mut out,
            &mut err,
            None,
        );
        (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
    }

    #[test]
    fn check_from_stdin() {
        let (code, out, _) = cli(&["check"], "return 1;");
        assert_eq!((code, out.trim()), (0, "int"));
    }

    #[test]
    fn exit_codes() {
        assert_eq!(cli(&["check", "-"], "var x = 1; var f = fun()[]{ return x; }; return 0;").0, 1);
        assert_eq!(cli(&["run"], "return head(nil);").0, 2);
        assert_eq!(cli(&["run", "--fuel", "1"], "var k = fun()[]{ return 1; }; var r = k(); return r;").0, 3);
        assert_eq!(cli(&["frobnicate"], "").0, 64);
        assert_eq!(cli(&["check", "--no-tailcall"], "return 1;").0, 64);
    }

    #[test]
    fn fuel_from_environment() {
        let mut input = "var k = fun()[]{ return 1; }; var r = k(); return r;".as_bytes();
        let (mut out, mut err) = (Vec::new(), Vec::new());
        let code = run_cli(["funk", "run"], &mut input, &mut out, &mut err, Some("1".into()));
        assert_eq!(code, EXIT_FUEL);
        let mut input = "return 1;".as_bytes();
        let code = run_cli(["funk", "run"], &mut input, &mut out, &mut err, Some("lots".into()));
        assert_eq!(code, EXIT_USAGE);
    }

    #[test]
    fn json_carries_a_version() {
        let (code, out, _) = cli(&["run", "--json"], "return cons(1, nil);");
        assert_eq!(code, 0);
        let v: serde_json::Value = serde_json::from_str(out.trim()).unwrap();
        assert_eq!(v["version"], 1);
        assert_eq!(v["observation"]["kind"], "list");
    }
}
