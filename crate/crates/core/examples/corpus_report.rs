//! Checks every corpus program against its recorded verdict.

use funk::corpus::{corpus, Expected};
use funk::machine::{run, RunOptions};
use funk::pipeline::compile;

fn main() {
    for e in corpus() {
        let got = match compile(e.name, e.source) {
            Err(d) => format!("reject {}", d.kind),
            Ok(c) => match run(&c.checked, RunOptions::default()) {
                Ok(r) => format!("accept {} = {}", c.checked.ty, r.observation),
                Err(err) => format!("accept {} but {err}", c.checked.ty),
            },
        };
        let want = match &e.expected {
            Expected::Accept(t, o) => format!("accept {t} = {o}"),
            Expected::Reject(k) => format!("reject {k}"),
        };
        let mark = if got == want { "ok  " } else { "FAIL" };
        println!("{mark} {:<24} {got}", e.name);
    }
}
