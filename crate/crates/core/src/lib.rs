//! An implementation of a small imperative-functional calculus whose
//! variables live on a call stack, whose closures are first class, and
//! whose type-and-effect system rejects upward funargs that would read
//! dead stack slots.
//!
//! The pipeline is: [`frontend`] (parse, desugar, uniquify) →
//! [`typecheck`] (elaborating checker) → one of three evaluators:
//! the stack [`machine`], the annotation-free [`erasure`] evaluator, or
//! the [`regions`] translation and its region-store interpreter.

pub mod ast;
pub mod frontend;
pub mod gen;
pub mod ops;
pub mod pretty;
pub mod subst;
pub mod typecheck;
pub mod machine;
pub mod erasure;
pub mod regions;
pub mod pipeline;
pub mod corpus;
pub mod diff;
pub mod cli;
