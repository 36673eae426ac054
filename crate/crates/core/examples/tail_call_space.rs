//! Space use of the list-building tail-call program with and without
//! frame reuse on tail calls.

use funk::corpus::tailcall_lists_source;
use funk::machine::{run, RunOptions};
use funk::pipeline::compile;

fn main() {
    println!("{:>5} {:>14} {:>16}", "n", "tail calls", "no tail calls");
    for n in [10, 25, 50, 100] {
        let c = compile("tailcall_lists.fk", &tailcall_lists_source(n)).expect("checks");
        let cells = |tail_calls| {
            run(
                &c.checked,
                RunOptions {
                    tail_calls,
                    ..RunOptions::default()
                },
            )
            .expect("terminates")
            .stats
            .max_retained_cells
        };
        println!("{n:>5} {:>14} {:>16}", cells(true), cells(false));
    }
}
