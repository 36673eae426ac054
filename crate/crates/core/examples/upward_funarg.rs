//! The checker rejects closures that would outlive the stack slots they
//! read, and accepts the variants that copy those values instead.

use funk::corpus::{corpus, Expected};
use funk::pipeline::compile;

fn main() {
    for name in ["fig1_compose", "curried_twice_bad", "curried_twice_let", "curried_twice_capture", "copy_upward"] {
        let entry = corpus().into_iter().find(|e| e.name == name).expect("corpus entry");
        match compile(entry.name, entry.source) {
            Ok(c) => println!("{name}: accepted at type {}", c.checked.ty),
            Err(d) => println!("{name}: rejected\n  {d}"),
        }
        if let Expected::Reject(kind) = entry.expected {
            println!("  (expected rejection: {kind})");
        }
    }
}
