//! Translates a checked program into the region calculus, types the
//! result and runs it with a region store.

use funk::pipeline::compile;
use funk::regions::{region_run, region_typecheck, translate_program, translate_type, RegionMap};

fn main() {
    let src = include_str!("fig3_twice.fk");
    let c = compile("fig3_twice.fk", src).expect("example checks");
    let term = translate_program(&c.checked.program).expect("checked programs translate");
    println!("{term}\n");
    let ty = region_typecheck(&Vec::new(), &Default::default(), &term).expect("translation preserves types");
    let expected = translate_type(&c.checked.ty, &RegionMap::new()).expect("closed type");
    println!("region type {ty} (source type {} translates to {expected})", c.checked.ty);
    let out = region_run(&term, 1_000_000).expect("no dangling region access");
    println!("result {} using {:?}", out.observation, out.stats);
}
