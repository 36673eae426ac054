//! Erases types, effects and effect abstractions, then runs the untyped
//! program and compares the result with the typed machine.

use funk::erasure::{erase, erased_view, run_erased};
use funk::machine::{run, RunOptions};
use funk::pipeline::compile;

fn main() {
    let src = include_str!("effectpoly_ok.fk");
    let c = compile("effectpoly_ok.fk", src).expect("example checks");
    let erased = erase(&c.checked.program);
    println!("{erased}\n");
    let (untyped, _) = run_erased(&erased, 100_000).expect("erased run");
    let typed = run(&c.checked, RunOptions::default()).expect("typed run");
    println!("typed: {}  erased: {untyped}", typed.observation);
    assert_eq!(erased_view(&typed.observation), untyped);
}
