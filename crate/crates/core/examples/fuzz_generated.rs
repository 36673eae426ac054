//! Generates random well-typed programs and runs each one under the state
//! typing oracle and all three semantics.
//!
//! `cargo run --example fuzz_generated [count] [size]`

use funk::diff::diff_program;
use funk::gen::generate_programs;
use funk::machine::{run, RunError, RunOptions};

fn main() {
    let mut args = std::env::args().skip(1);
    let count: u64 = args.next().map_or(100, |s| s.parse().expect("count"));
    let size: usize = args.next().map_or(40, |s| s.parse().expect("size"));
    let (mut finished, mut fuel_out, mut agree) = (0, 0, 0);
    for seed in 1..=count {
        let g = generate_programs(seed, 1, size).remove(0);
        let opts = RunOptions {
            oracle: true,
            ..RunOptions::default()
        };
        match run(&g.compiled.checked, opts) {
            Ok(_) => finished += 1,
            Err(RunError::FuelExhausted { .. }) => fuel_out += 1,
            Err(e) => panic!("{}: {e}\n{}", g.name, g.source),
        }
        if diff_program(&g.name, &g.compiled.checked, 1_000_000).agree {
            agree += 1;
        }
        if seed == 1 {
            println!("first program:\n{}\n", g.source);
        }
    }
    println!("{count} programs: {finished} finished, {fuel_out} out of fuel, {agree} agree across semantics");
}
