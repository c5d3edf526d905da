//! Symbolic differentiation with light constant folding.

use num_complex::Complex64;

use super::{DiffError, Func, Node};

fn zero() -> Complex64 {
    Complex64::new(0.0, 0.0)
}

fn one() -> Complex64 {
    Complex64::new(1.0, 0.0)
}

fn as_const(n: &Node) -> Option<Complex64> {
    match n {
        Node::Const(c) => Some(*c),
        _ => None,
    }
}

fn konst(c: Complex64) -> Node {
    Node::Const(c)
}

fn neg(a: Node) -> Node {
    match a {
        Node::Const(c) => konst(-c),
        Node::Neg(inner) => *inner,
        other => Node::Neg(Box::new(other)),
    }
}

fn add(a: Node, b: Node) -> Node {
    match (as_const(&a), as_const(&b)) {
        (Some(x), Some(y)) => konst(x + y),
        (Some(x), None) if x == zero() => b,
        (None, Some(y)) if y == zero() => a,
        _ => Node::Add(Box::new(a), Box::new(b)),
    }
}

fn sub(a: Node, b: Node) -> Node {
    match (as_const(&a), as_const(&b)) {
        (Some(x), Some(y)) => konst(x - y),
        (Some(x), None) if x == zero() => neg(b),
        (None, Some(y)) if y == zero() => a,
        _ => Node::Sub(Box::new(a), Box::new(b)),
    }
}

fn mul(a: Node, b: Node) -> Node {
    match (as_const(&a), as_const(&b)) {
        (Some(x), Some(y)) => konst(x * y),
        (Some(x), _) | (_, Some(x)) if x == zero() => konst(zero()),
        (Some(x), None) if x == one() => b,
        (None, Some(y)) if y == one() => a,
        (None, Some(_)) => Node::Mul(Box::new(b), Box::new(a)),
        _ => Node::Mul(Box::new(a), Box::new(b)),
    }
}

fn div(a: Node, b: Node) -> Node {
    match (as_const(&a), as_const(&b)) {
        (Some(x), _) if x == zero() => konst(zero()),
        (Some(x), Some(y)) if y != zero() => konst(x / y),
        (None, Some(y)) if y == one() => a,
        _ => Node::Div(Box::new(a), Box::new(b)),
    }
}

fn pow(a: Node, n: i64) -> Result<Node, DiffError> {
    if n.abs() > super::MAX_EXPONENT as i64 + 1 {
        return Err(DiffError::ExponentOverflow(n));
    }
    Ok(match n {
        0 => konst(one()),
        1 => a,
        _ => match as_const(&a) {
            Some(c) if c != zero() || n > 0 => konst(c.powi(n as i32)),
            _ => Node::Pow(Box::new(a), n as i32),
        },
    })
}

pub(super) fn derivative(node: &Node) -> Result<Node, DiffError> {
    Ok(match node {
        Node::Var => konst(one()),
        Node::Const(_) => konst(zero()),
        Node::Neg(a) => neg(derivative(a)?),
        Node::Add(a, b) => add(derivative(a)?, derivative(b)?),
        Node::Sub(a, b) => sub(derivative(a)?, derivative(b)?),
        Node::Mul(a, b) => add(
            mul(derivative(a)?, (**b).clone()),
            mul((**a).clone(), derivative(b)?),
        ),
        Node::Div(a, b) => {
            let numerator = sub(
                mul(derivative(a)?, (**b).clone()),
                mul((**a).clone(), derivative(b)?),
            );
            div(numerator, pow((**b).clone(), 2)?)
        }
        Node::Pow(a, n) => {
            let n = *n as i64;
            let outer = mul(konst(Complex64::new(n as f64, 0.0)), pow((**a).clone(), n - 1)?);
            mul(outer, derivative(a)?)
        }
        Node::Call(func, a) => {
            let inner = (**a).clone();
            let outer = match func {
                Func::Exp => Node::Call(Func::Exp, Box::new(inner)),
                Func::Sin => Node::Call(Func::Cos, Box::new(inner)),
                Func::Cos => neg(Node::Call(Func::Sin, Box::new(inner))),
            };
            mul(outer, derivative(a)?)
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::MapExpr;

    #[test]
    fn folds_constants() {
        let d = MapExpr::parse("3*z + 2").unwrap().differentiate().unwrap();
        assert_eq!(d.root(), &Node::Const(Complex64::new(3.0, 0.0)));
        let d = MapExpr::parse("z").unwrap().differentiate().unwrap();
        assert_eq!(d.root(), &Node::Const(one()));
        let d = MapExpr::parse("5").unwrap().differentiate().unwrap();
        assert_eq!(d.root(), &Node::Const(zero()));
    }

    #[test]
    fn negative_power() {
        let d = MapExpr::parse("z^-2").unwrap().differentiate().unwrap();
        let v = d.eval(Complex64::new(2.0, 0.0)).unwrap().finite().unwrap();
        assert!((v - Complex64::new(-0.25, 0.0)).norm() < 1e-14);
    }

    #[test]
    fn cos_derivative() {
        let d = MapExpr::parse("cos(z)").unwrap().differentiate().unwrap();
        let z = Complex64::new(0.3, -0.7);
        let v = d.eval(z).unwrap().finite().unwrap();
        assert!((v + z.sin()).norm() < 1e-14);
    }
}
