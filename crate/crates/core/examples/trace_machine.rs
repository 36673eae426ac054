//! Steps the machine one transition at a time, printing each state and
//! checking that every intermediate state has the program's type.

use funk::machine::{step, State, StepMode, StepResult};
use funk::pipeline::compile;
use funk::typecheck::type_state;

const SRC: &str = "var x = 1;
var addx = fun(z:int)[x]{ return x + z; };
var r = addx(2);
return r;";

fn main() {
    let c = compile("trace.fk", SRC).expect("example checks");
    let mut st = State::initial(c.checked.program.body.clone());
    let mut fuel = 1000;
    for n in 0.. {
        let ty = type_state(&st).expect("preservation");
        println!("--- state {n} : {ty}\n{st}");
        match step(st, StepMode::default(), &mut fuel) {
            StepResult::Next(next, rule) => {
                println!("=== {rule:?}");
                st = next;
            }
            StepResult::Final => break,
            other => panic!("unexpected {other:?}"),
        }
    }
}
