//! Primitive operators: their signatures and their meaning.

use crate::ast::{OpName, Type};

/// First-order data the primitive operators act on.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum PrimValue {
    Int(i64),
    List(Vec<i64>),
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum DeltaError {
    #[error("{0}: empty list")]
    EmptyList(&'static str),
    #[error("{op}: bad operands")]
    Domain { op: &'static str },
}

/// Parameter types and result type of an operator.
pub fn typeof_op(op: OpName) -> (Vec<Type>, Type) {
    use OpName::*;
    match op {
        Add | Sub | Mul => (vec![Type::Int, Type::Int], Type::Int),
        IsZero | Inc | Dec => (vec![Type::Int], Type::Int),
        Cons => (vec![Type::Int, Type::IntList], Type::IntList),
        Length => (vec![Type::IntList], Type::Int),
        Head => (vec![Type::IntList], Type::Int),
        Tail => (vec![Type::IntList], Type::IntList),
    }
}

/// Integer arithmetic wraps, so every semantics agrees on overflow.
pub fn delta(op: OpName, args: &[PrimValue]) -> Result<PrimValue, DeltaError> {
    use OpName::*;
    use PrimValue::{Int, List};
    let domain = || DeltaError::Domain { op: op.symbol() };
    Ok(match (op, args) {
        (Add, [Int(a), Int(b)]) => Int(a.wrapping_add(*b)),
        (Sub, [Int(a), Int(b)]) => Int(a.wrapping_sub(*b)),
        (Mul, [Int(a), Int(b)]) => Int(a.wrapping_mul(*b)),
        (IsZero, [Int(a)]) => Int(i64::from(*a == 0)),
        (Inc, [Int(a)]) => Int(a.wrapping_add(1)),
        (Dec, [Int(a)]) => Int(a.wrapping_sub(1)),
        (Cons, [Int(a), List(l)]) => {
            let mut out = Vec::with_capacity(l.len() + 1);
            out.push(*a);
            out.extend_from_slice(l);
            List(out)
        }
        (Length, [List(l)]) => Int(l.len() as i64),
        (Head, [List(l)]) => Int(*l.first().ok_or(DeltaError::EmptyList("head"))?),
        (Tail, [List(l)]) => {
            if l.is_empty() {
                return Err(DeltaError::EmptyList("tail"));
            }
            List(l[1..].to_vec())
        }
        _ => return Err(domain()),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use PrimValue::{Int, List};

    #[test]
    fn signatures() {
        assert_eq!(typeof_op(OpName::Add), (vec![Type::Int, Type::Int], Type::Int));
        assert_eq!(typeof_op(OpName::IsZero), (vec![Type::Int], Type::Int));
        assert_eq!(
            typeof_op(OpName::Cons),
            (vec![Type::Int, Type::IntList], Type::IntList)
        );
    }

    #[test]
    fn arithmetic_and_lists() {
        assert_eq!(delta(OpName::Add, &[Int(3), Int(4)]), Ok(Int(7)));
        assert_eq!(delta(OpName::IsZero, &[Int(0)]), Ok(Int(1)));
        assert_eq!(delta(OpName::IsZero, &[Int(5)]), Ok(Int(0)));
        assert_eq!(delta(OpName::Cons, &[Int(0), List(vec![])]), Ok(List(vec![0])));
        assert_eq!(delta(OpName::Length, &[List(vec![1, 2])]), Ok(Int(2)));
        assert_eq!(delta(OpName::Tail, &[List(vec![1, 2])]), Ok(List(vec![2])));
    }

    #[test]
    fn partial_operators_trap() {
        assert_eq!(
            delta(OpName::Head, &[List(vec![])]),
            Err(DeltaError::EmptyList("head"))
        );
        assert!(delta(OpName::Add, &[Int(1)]).is_err());
    }

    #[test]
    fn every_operator_is_type_safe_on_sample_inputs() {
        let samples = |t: &Type| match t {
            Type::Int => vec![Int(0), Int(-3), Int(9)],
            Type::IntList => vec![List(vec![1]), List(vec![4, 5, 6])],
            _ => unreachable!(),
        };
        for op in OpName::ALL {
            let (params, ret) = typeof_op(op);
            let mut combos: Vec<Vec<PrimValue>> = vec![vec![]];
            for p in &params {
                combos = combos
                    .into_iter()
                    .flat_map(|c| {
                        samples(p).into_iter().map(move |v| {
                            let mut c = c.clone();
                            c.push(v);
                            c
                        })
                    })
                    .collect();
            }
            for args in combos {
                let out = delta(op, &args).unwrap();
                let ok = matches!((&out, &ret), (Int(_), Type::Int) | (List(_), Type::IntList));
                assert!(ok, "{op:?} {args:?} -> {out:?}");
            }
        }
    }
}
