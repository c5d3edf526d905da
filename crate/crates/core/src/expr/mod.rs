//! Map expressions: a tiny language for holomorphic maps built from `z`,
//! complex literals, rational operations, integer powers and `exp`, `sin`,
//! `cos`.
//!
//! A [`MapExpr`] is immutable once built. Evaluation is pure and can be
//! shared freely between threads.

mod diff;
mod parse;

use std::fmt;

use num_complex::Complex64;

pub use parse::ParseError;

/// Largest admissible magnitude of an integer exponent.
pub const MAX_EXPONENT: i32 = 64;

/// A point of the extended complex plane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Ext {
    Finite(Complex64),
    Infinity,
}

impl Ext {
    pub fn finite(self) -> Option<Complex64> {
        match self {
            Ext::Finite(c) => Some(c),
            Ext::Infinity => None,
        }
    }

    pub fn is_infinite(self) -> bool {
        matches!(self, Ext::Infinity)
    }

    /// Wraps a raw complex value, mapping overflowed results to infinity.
    pub(crate) fn from_raw(c: Complex64) -> Ext {
        if c.re.is_finite() && c.im.is_finite() {
            Ext::Finite(c)
        } else {
            Ext::Infinity
        }
    }
}

impl From<Complex64> for Ext {
    fn from(c: Complex64) -> Self {
        Ext::from_raw(c)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
pub enum EvalError {
    #[error("indeterminate form at the sample point")]
    Indeterminate,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum DiffError {
    #[error("derivative needs exponent {0}, beyond the supported range")]
    ExponentOverflow(i64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Exp,
    Sin,
    Cos,
}

impl Func {
    fn name(self) -> &'static str {
        match self {
            Func::Exp => "exp",
            Func::Sin => "sin",
            Func::Cos => "cos",
        }
    }
}

/// Expression tree node.
#[derive(Debug, Clone, PartialEq)]
pub enum Node {
    Var,
    Const(Complex64),
    Neg(Box<Node>),
    Add(Box<Node>, Box<Node>),
    Sub(Box<Node>, Box<Node>),
    Mul(Box<Node>, Box<Node>),
    Div(Box<Node>, Box<Node>),
    Pow(Box<Node>, i32),
    Call(Func, Box<Node>),
}

impl Node {
    pub fn eval(&self, z: Complex64) -> Result<Ext, EvalError> {
        use Ext::{Finite, Infinity};
        Ok(match self {
            Node::Var => Finite(z),
            Node::Const(c) => Finite(*c),
            Node::Neg(a) => match a.eval(z)? {
                Finite(v) => Finite(-v),
                Infinity => Infinity,
            },
            Node::Add(a, b) | Node::Sub(a, b) => {
                let sign = if matches!(self, Node::Add(..)) { 1.0 } else { -1.0 };
                match (a.eval(z)?, b.eval(z)?) {
                    (Finite(x), Finite(y)) => Ext::from_raw(x + y * sign),
                    (Infinity, Infinity) => return Err(EvalError::Indeterminate),
                    _ => Infinity,
                }
            }
            Node::Mul(a, b) => match (a.eval(z)?, b.eval(z)?) {
                (Finite(x), Finite(y)) => Ext::from_raw(x * y),
                (Finite(x), Infinity) | (Infinity, Finite(x)) => {
                    if x.norm() == 0.0 {
                        return Err(EvalError::Indeterminate);
                    }
                    Infinity
                }
                (Infinity, Infinity) => Infinity,
            },
            Node::Div(a, b) => divide(a.eval(z)?, b.eval(z)?)?,
            Node::Pow(a, n) => power(a.eval(z)?, *n)?,
            Node::Call(func, a) => match a.eval(z)? {
                Finite(v) => Ext::from_raw(match func {
                    Func::Exp => v.exp(),
                    Func::Sin => v.sin(),
                    Func::Cos => v.cos(),
                }),
                // essential singularity
                Infinity => return Err(EvalError::Indeterminate),
            },
        })
    }

    fn contains_pole_source(&self) -> bool {
        match self {
            Node::Var | Node::Const(_) => false,
            Node::Div(..) => true,
            Node::Pow(a, n) => *n < 0 || a.contains_pole_source(),
            Node::Neg(a) | Node::Call(_, a) => a.contains_pole_source(),
            Node::Add(a, b) | Node::Sub(a, b) | Node::Mul(a, b) => {
                a.contains_pole_source() || b.contains_pole_source()
            }
        }
    }

    fn contains_var(&self) -> bool {
        match self {
            Node::Var => true,
            Node::Const(_) => false,
            Node::Neg(a) | Node::Pow(a, _) | Node::Call(_, a) => a.contains_var(),
            Node::Add(a, b) | Node::Sub(a, b) | Node::Mul(a, b) | Node::Div(a, b) => {
                a.contains_var() || b.contains_var()
            }
        }
    }
}

fn divide(num: Ext, den: Ext) -> Result<Ext, EvalError> {
    use Ext::{Finite, Infinity};
    match (num, den) {
        (Finite(x), Finite(y)) => {
            if y.norm() == 0.0 {
                if x.norm() == 0.0 {
                    Err(EvalError::Indeterminate)
                } else {
                    Ok(Infinity)
                }
            } else {
                Ok(Ext::from_raw(x / y))
            }
        }
        (Finite(_), Infinity) => Ok(Finite(Complex64::new(0.0, 0.0))),
        (Infinity, Finite(_)) => Ok(Infinity),
        (Infinity, Infinity) => Err(EvalError::Indeterminate),
    }
}

fn power(base: Ext, n: i32) -> Result<Ext, EvalError> {
    use Ext::{Finite, Infinity};
    if n == 0 {
        return Ok(Finite(Complex64::new(1.0, 0.0)));
    }
    match base {
        Infinity => Ok(if n > 0 {
            Infinity
        } else {
            Finite(Complex64::new(0.0, 0.0))
        }),
        Finite(b) => {
            if n < 0 {
                if b.norm() == 0.0 {
                    return Ok(Infinity);
                }
                Ok(Ext::from_raw(b.powi(n)))
            } else {
                Ok(Ext::from_raw(b.powi(n)))
            }
        }
    }
}

/// A holomorphic map given by an expression tree.
#[derive(Debug, Clone)]
pub struct MapExpr {
    root: Node,
    source_text: String,
}

impl MapExpr {
    /// Parses a map definition; see the module docs for the grammar.
    pub fn parse(source: &str) -> Result<MapExpr, ParseError> {
        let root = parse::parse(source)?;
        Ok(MapExpr {
            root,
            source_text: source.to_string(),
        })
    }

    pub fn from_node(root: Node) -> MapExpr {
        let source_text = print_node(&root);
        MapExpr { root, source_text }
    }

    pub fn root(&self) -> &Node {
        &self.root
    }

    pub fn source_text(&self) -> &str {
        &self.source_text
    }

    /// Exact symbolic derivative with constant folding.
    pub fn differentiate(&self) -> Result<MapExpr, DiffError> {
        Ok(MapExpr::from_node(diff::derivative(&self.root)?))
    }

    pub fn eval(&self, z: Complex64) -> Result<Ext, EvalError> {
        self.root.eval(z)
    }

    /// True when the tree has no division and no negative power, so the map
    /// is entire and has no poles.
    pub fn is_entire(&self) -> bool {
        !self.root.contains_pole_source()
    }

    /// True when the expression does not mention `z`.
    pub fn is_constant(&self) -> bool {
        !self.root.contains_var()
    }

    /// Canonical printed form: explicit `*` and full parenthesisation.
    pub fn canonical(&self) -> String {
        print_node(&self.root)
    }
}

impl PartialEq for MapExpr {
    fn eq(&self, other: &Self) -> bool {
        self.root == other.root
    }
}

impl fmt::Display for MapExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.canonical())
    }
}

/// A map together with its derivative, the pair every numerical stage needs.
#[derive(Debug, Clone)]
pub struct HoloMap {
    pub map: MapExpr,
    pub deriv: MapExpr,
}

impl HoloMap {
    pub fn new(map: MapExpr) -> Result<HoloMap, DiffError> {
        let deriv = map.differentiate()?;
        Ok(HoloMap { map, deriv })
    }

    pub fn parse(source: &str) -> Result<HoloMap, crate::Error> {
        let map = MapExpr::parse(source)?;
        Ok(HoloMap::new(map)?)
    }

    #[inline]
    pub fn eval(&self, z: Complex64) -> Result<Ext, EvalError> {
        self.map.eval(z)
    }

    #[inline]
    pub fn eval_deriv(&self, z: Complex64) -> Result<Ext, EvalError> {
        self.deriv.eval(z)
    }
}

fn fmt_real(x: f64) -> String {
    // Display for f64 is the shortest round-tripping decimal.
    format!("{}", x)
}

fn print_const(c: Complex64) -> String {
    let (re, im) = (c.re, c.im);
    if im == 0.0 {
        if re.is_sign_negative() && re != 0.0 {
            format!("(-{})", fmt_real(-re))
        } else {
            fmt_real(re.abs())
        }
    } else if re == 0.0 {
        if im < 0.0 {
            format!("(-{}i)", fmt_real(-im))
        } else {
            format!("{}i", fmt_real(im))
        }
    } else {
        let re_part = if re < 0.0 {
            format!("(-{})", fmt_real(-re))
        } else {
            fmt_real(re)
        };
        if im < 0.0 {
            format!("({}-{}i)", re_part, fmt_real(-im))
        } else {
            format!("({}+{}i)", re_part, fmt_real(im))
        }
    }
}

fn print_node(node: &Node) -> String {
    match node {
        Node::Var => "z".to_string(),
        Node::Const(c) => print_const(*c),
        Node::Neg(a) => format!("(-{})", print_node(a)),
        Node::Add(a, b) => format!("({}+{})", print_node(a), print_node(b)),
        Node::Sub(a, b) => format!("({}-{})", print_node(a), print_node(b)),
        Node::Mul(a, b) => format!("({}*{})", print_node(a), print_node(b)),
        Node::Div(a, b) => format!("({}/{})", print_node(a), print_node(b)),
        Node::Pow(a, n) => {
            let base = print_node(a);
            let base = if matches!(**a, Node::Var) || is_wrapped(&base) {
                base
            } else {
                format!("({})", base)
            };
            format!("{}^{}", base, n)
        }
        Node::Call(f, a) => {
            let inner = print_node(a);
            let inner = inner
                .strip_prefix('(')
                .filter(|_| is_wrapped(&inner))
                .and_then(|s| s.strip_suffix(')'))
                .map(str::to_string)
                .unwrap_or(inner.clone());
            format!("{}({})", f.name(), inner)
        }
    }
}

/// True when the outer parentheses of `s` enclose the whole string.
fn is_wrapped(s: &str) -> bool {
    let bytes = s.as_bytes();
    if bytes.first() != Some(&b'(') || bytes.last() != Some(&b')') {
        return false;
    }
    let mut depth = 0i32;
    for (i, &b) in bytes.iter().enumerate() {
        match b {
            b'(' => depth += 1,
            b')' => {
                depth -= 1;
                if depth == 0 && i + 1 != bytes.len() {
                    return false;
                }
            }
            _ => {}
        }
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn finite(m: &MapExpr, z: Complex64) -> Complex64 {
        m.eval(z).unwrap().finite().unwrap()
    }

    #[test]
    fn euler_identity() {
        let m = MapExpr::parse("exp(z)").unwrap();
        let v = finite(&m, c(0.0, PI));
        assert!((v - c(-1.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn mobius_at_i() {
        let m = MapExpr::parse("(z-1)/(z+1)").unwrap();
        let v = finite(&m, c(0.0, 1.0));
        assert!((v - c(0.0, 1.0)).norm() < 1e-15);
    }

    #[test]
    fn pole_is_infinity() {
        let m = MapExpr::parse("1/z").unwrap();
        assert_eq!(m.eval(c(0.0, 0.0)).unwrap(), Ext::Infinity);
        let m = MapExpr::parse("z^-2").unwrap();
        assert_eq!(m.eval(c(0.0, 0.0)).unwrap(), Ext::Infinity);
        // infinity propagates through a further reciprocal
        let m = MapExpr::parse("1/(1/z)").unwrap();
        assert_eq!(m.eval(c(0.0, 0.0)).unwrap(), Ext::Finite(c(0.0, 0.0)));
    }

    #[test]
    fn zero_over_zero_is_indeterminate() {
        let m = MapExpr::parse("z/z").unwrap();
        assert_eq!(m.eval(c(0.0, 0.0)), Err(EvalError::Indeterminate));
        let m = MapExpr::parse("exp(1/z)").unwrap();
        assert_eq!(m.eval(c(0.0, 0.0)), Err(EvalError::Indeterminate));
    }

    #[test]
    fn power_rule_and_chain_rule() {
        let d = MapExpr::parse("z^3").unwrap().differentiate().unwrap();
        assert!((finite(&d, c(2.0, 0.0)) - c(12.0, 0.0)).norm() < 1e-12);
        let d = MapExpr::parse("exp(2*z)").unwrap().differentiate().unwrap();
        assert!((finite(&d, c(0.0, 0.0)) - c(2.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn canonical_forms() {
        let m = MapExpr::parse("z^3").unwrap();
        assert_eq!(m.canonical(), "z^3");
        let m = MapExpr::parse("2*z + 0.5i").unwrap();
        assert_eq!(m.canonical(), "((2*z)+0.5i)");
        let m = MapExpr::parse("exp(-z)").unwrap();
        assert_eq!(m.canonical(), "exp(-z)");
        assert_eq!(print_const(c(-1.5, 2.0)), "((-1.5)+2i)");
    }

    #[test]
    fn entire_detection() {
        assert!(MapExpr::parse("z^3+exp(z)").unwrap().is_entire());
        assert!(!MapExpr::parse("1/z").unwrap().is_entire());
        assert!(!MapExpr::parse("z^-1").unwrap().is_entire());
        assert!(MapExpr::parse("2+3i").unwrap().is_constant());
    }
}
