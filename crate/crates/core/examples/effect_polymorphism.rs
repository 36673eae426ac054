//! One function abstracted over the variable it reads, instantiated at two
//! different stack variables.

use funk::machine::{run, RunOptions};
use funk::pipeline::compile;

fn main() {
    let ok = include_str!("effectpoly_ok.fk");
    let c = compile("effectpoly_ok.fk", ok).expect("polymorphic version checks");
    println!("{ok}\n=> {}\n", run(&c.checked, RunOptions::default()).unwrap().observation);

    let bad = include_str!("effectpoly_bad.fk");
    println!("{bad}");
    match compile("effectpoly_bad.fk", bad) {
        Ok(_) => println!("=> unexpectedly accepted"),
        Err(d) => println!("=> {d}"),
    }
}
