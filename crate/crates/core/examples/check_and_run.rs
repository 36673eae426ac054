//! Parse, check and run a program on the stack machine.
//!
//! `cargo run --example check_and_run [file.fk]`

use funk::machine::{run, RunOptions};
use funk::pipeline::compile;

fn main() {
    let path = std::env::args()
        .nth(1)
        .unwrap_or_else(|| format!("{}/examples/fig3_twice.fk", env!("CARGO_MANIFEST_DIR")));
    let src = std::fs::read_to_string(&path).expect("readable source file");
    let compiled = match compile(&path, &src) {
        Ok(c) => c,
        Err(d) => {
            eprintln!("{d}");
            std::process::exit(1);
        }
    };
    println!("type:   {}", compiled.checked.ty);
    let result = run(&compiled.checked, RunOptions::default()).expect("well-typed programs do not get stuck");
    println!("result: {}", result.observation);
    println!(
        "steps {}, deepest value stack {}, deepest control stack {}",
        result.stats.steps, result.stats.max_value_stack, result.stats.max_control_stack
    );
}
