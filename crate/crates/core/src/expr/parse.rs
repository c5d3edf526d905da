//! Recursive-descent parser.
//!
//! ```text
//! expr    := term (('+' | '-') term)*
//! term    := factor (('*' | '/') factor)*
//! factor  := '-' factor | atom ('^' signed-integer)?
//! atom    := 'z' | literal | func '(' expr ')' | '(' expr ')'
//! literal := decimal 'i'? | 'i'
//! func    := 'exp' | 'sin' | 'cos'
//! ```

use num_complex::Complex64;

use super::{Func, Node, MAX_EXPONENT};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
/// Error positions are 1-based byte columns; an error at the end of the
/// input points one past the last byte.
pub enum ParseError {
    #[error("empty map expression")]
    Empty,
    #[error("syntax error at column {offset}: {message}")]
    Syntax { offset: usize, message: String },
    #[error("exponent {value} at column {offset} exceeds the supported magnitude {max}", max = MAX_EXPONENT)]
    ExponentOverflow { offset: usize, value: i64 },
    #[error("unknown function `{name}` at column {offset}")]
    UnknownFunction { offset: usize, name: String },
    #[error("division by the literal zero at column {offset}")]
    ZeroDenominator { offset: usize },
}

impl ParseError {
    pub fn offset(&self) -> Option<usize> {
        match self {
            ParseError::Empty => None,
            ParseError::Syntax { offset, .. }
            | ParseError::ExponentOverflow { offset, .. }
            | ParseError::UnknownFunction { offset, .. }
            | ParseError::ZeroDenominator { offset } => Some(*offset),
        }
    }
}

pub(super) fn parse(source: &str) -> Result<Node, ParseError> {
    if source.trim().is_empty() {
        return Err(ParseError::Empty);
    }
    let mut p = Parser {
        src: source.as_bytes(),
        pos: 0,
    };
    p.root().map_err(ParseError::into_column)
}

impl ParseError {
    fn into_column(self) -> Self {
        match self {
            ParseError::Empty => ParseError::Empty,
            ParseError::Syntax { offset, message } => ParseError::Syntax { offset: offset + 1, message },
            ParseError::ExponentOverflow { offset, value } => ParseError::ExponentOverflow { offset: offset + 1, value },
            ParseError::UnknownFunction { offset, name } => ParseError::UnknownFunction { offset: offset + 1, name },
            ParseError::ZeroDenominator { offset } => ParseError::ZeroDenominator { offset: offset + 1 },
        }
    }
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
}

impl<'a> Parser<'a> {
    fn root(&mut self) -> Result<Node, ParseError> {
        let node = self.expr()?;
        self.skip_ws();
        if self.pos != self.src.len() {
            return Err(self.syntax("unexpected trailing input"));
        }
        Ok(node)
    }

    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    fn syntax(&self, message: &str) -> ParseError {
        ParseError::Syntax {
            offset: self.pos,
            message: message.to_string(),
        }
    }

    fn expr(&mut self) -> Result<Node, ParseError> {
        let mut lhs = self.term()?;
        while let Some(op @ (b'+' | b'-')) = self.peek() {
            self.pos += 1;
            let rhs = self.term()?;
            lhs = if op == b'+' {
                Node::Add(Box::new(lhs), Box::new(rhs))
            } else {
                Node::Sub(Box::new(lhs), Box::new(rhs))
            };
        }
        Ok(lhs)
    }

    fn term(&mut self) -> Result<Node, ParseError> {
        let mut lhs = self.factor()?;
        while let Some(op @ (b'*' | b'/')) = self.peek() {
            self.pos += 1;
            let at = {
                self.skip_ws();
                self.pos
            };
            let rhs = self.factor()?;
            lhs = if op == b'*' {
                Node::Mul(Box::new(lhs), Box::new(rhs))
            } else {
                if matches!(rhs, Node::Const(c) if c == Complex64::new(0.0, 0.0)) {
                    return Err(ParseError::ZeroDenominator { offset: at });
                }
                Node::Div(Box::new(lhs), Box::new(rhs))
            };
        }
        Ok(lhs)
    }

    fn factor(&mut self) -> Result<Node, ParseError> {
        if self.peek() == Some(b'-') {
            self.pos += 1;
            let inner = self.factor()?;
            return Ok(Node::Neg(Box::new(inner)));
        }
        let base = self.atom()?;
        if self.peek() == Some(b'^') {
            self.pos += 1;
            let n = self.signed_integer()?;
            return Ok(Node::Pow(Box::new(base), n));
        }
        Ok(base)
    }

    fn signed_integer(&mut self) -> Result<i32, ParseError> {
        self.skip_ws();
        let start = self.pos;
        let negative = match self.src.get(self.pos) {
            Some(b'-') => {
                self.pos += 1;
                true
            }
            Some(b'+') => {
                self.pos += 1;
                false
            }
            _ => false,
        };
        let digits_start = self.pos;
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if self.pos == digits_start {
            return Err(self.syntax("expected an integer exponent"));
        }
        let digits = std::str::from_utf8(&self.src[digits_start..self.pos]).unwrap();
        let magnitude: i64 = digits.parse().unwrap_or(i64::MAX);
        let value = if negative { -magnitude } else { magnitude };
        if magnitude > MAX_EXPONENT as i64 {
            return Err(ParseError::ExponentOverflow {
                offset: start,
                value,
            });
        }
        Ok(value as i32)
    }

    fn atom(&mut self) -> Result<Node, ParseError> {
        let Some(b) = self.peek() else {
            return Err(self.syntax("unexpected end of input"));
        };
        match b {
            b'(' => {
                self.pos += 1;
                let inner = self.expr()?;
                self.expect_close()?;
                Ok(inner)
            }
            b'0'..=b'9' | b'.' => self.literal(),
            b'a'..=b'z' | b'A'..=b'Z' => {
                let start = self.pos;
                while self.pos < self.src.len() && self.src[self.pos].is_ascii_alphabetic() {
                    self.pos += 1;
                }
                let name = std::str::from_utf8(&self.src[start..self.pos]).unwrap();
                match name {
                    "z" => Ok(Node::Var),
                    "i" => Ok(Node::Const(Complex64::new(0.0, 1.0))),
                    "exp" | "sin" | "cos" => {
                        let func = match name {
                            "exp" => Func::Exp,
                            "sin" => Func::Sin,
                            _ => Func::Cos,
                        };
                        if self.peek() != Some(b'(') {
                            return Err(self.syntax("expected `(` after function name"));
                        }
                        self.pos += 1;
                        let arg = self.expr()?;
                        self.expect_close()?;
                        Ok(Node::Call(func, Box::new(arg)))
                    }
                    _ => Err(ParseError::UnknownFunction {
                        offset: start,
                        name: name.to_string(),
                    }),
                }
            }
            _ => Err(self.syntax("expected `z`, a number, a function or `(`")),
        }
    }

    fn expect_close(&mut self) -> Result<(), ParseError> {
        if self.peek() == Some(b')') {
            self.pos += 1;
            Ok(())
        } else {
            Err(self.syntax("expected `)`"))
        }
    }

    fn literal(&mut self) -> Result<Node, ParseError> {
        let start = self.pos;
        let mut seen_dot = false;
        let mut seen_digit = false;
        while let Some(&b) = self.src.get(self.pos) {
            if b.is_ascii_digit() {
                seen_digit = true;
            } else if b == b'.' && !seen_dot {
                seen_dot = true;
            } else {
                break;
            }
            self.pos += 1;
        }
        // optional exponent, so printed forms of tiny constants reparse
        if seen_digit && matches!(self.src.get(self.pos), Some(b'e' | b'E')) {
            let save = self.pos;
            self.pos += 1;
            if matches!(self.src.get(self.pos), Some(b'+' | b'-')) {
                self.pos += 1;
            }
            let exp_digits = self.pos;
            while self.src.get(self.pos).is_some_and(u8::is_ascii_digit) {
                self.pos += 1;
            }
            if self.pos == exp_digits {
                self.pos = save;
            }
        }
        if !seen_digit {
            self.pos = start;
            return Err(self.syntax("malformed number"));
        }
        let text = std::str::from_utf8(&self.src[start..self.pos]).unwrap();
        let value: f64 = text.parse().map_err(|_| ParseError::Syntax {
            offset: start,
            message: format!("malformed number `{}`", text),
        })?;
        // an `i` directly attached to the number marks the imaginary part,
        // unless it starts an identifier
        if self.src.get(self.pos) == Some(&b'i')
            && !self
                .src
                .get(self.pos + 1)
                .is_some_and(u8::is_ascii_alphanumeric)
        {
            self.pos += 1;
            return Ok(Node::Const(Complex64::new(0.0, value)));
        }
        Ok(Node::Const(Complex64::new(value, 0.0)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn b(n: Node) -> Box<Node> {
        Box::new(n)
    }

    #[test]
    fn cube() {
        assert_eq!(parse("z^3").unwrap(), Node::Pow(b(Node::Var), 3));
    }

    #[test]
    fn rational_map_shape() {
        let n = parse("(z^2-1)/(z^2+1)").unwrap();
        let one = || b(Node::Const(Complex64::new(1.0, 0.0)));
        let sq = || b(Node::Pow(b(Node::Var), 2));
        assert_eq!(n, Node::Div(b(Node::Sub(sq(), one())), b(Node::Add(sq(), one()))));
    }

    #[test]
    fn unclosed_paren_offset() {
        let err = parse("exp(2*z").unwrap_err();
        assert!(matches!(err, ParseError::Syntax { offset: 8, .. }), "{err:?}");
    }

    #[test]
    fn complex_literal_via_sum() {
        let n = parse("1+2i").unwrap();
        assert_eq!(
            n,
            Node::Add(
                b(Node::Const(Complex64::new(1.0, 0.0))),
                b(Node::Const(Complex64::new(0.0, 2.0)))
            )
        );
        assert_eq!(parse("0.5i").unwrap(), Node::Const(Complex64::new(0.0, 0.5)));
    }

    #[test]
    fn errors() {
        assert!(matches!(
            parse("z^65"),
            Err(ParseError::ExponentOverflow { offset: 3, value: 65 })
        ));
        assert!(matches!(parse("z^-64"), Ok(Node::Pow(_, -64))));
        assert!(matches!(
            parse("log(z)"),
            Err(ParseError::UnknownFunction { offset: 1, .. })
        ));
        assert!(matches!(parse("1/0"), Err(ParseError::ZeroDenominator { offset: 3 })));
        assert!(matches!(parse("   "), Err(ParseError::Empty)));
        assert!(matches!(parse("z z"), Err(ParseError::Syntax { offset: 3, .. })));
        assert!(matches!(parse("2*"), Err(ParseError::Syntax { offset: 3, .. })));
    }

    #[test]
    fn unary_minus_binds_looser_than_power() {
        assert_eq!(
            parse("-z^2").unwrap(),
            Node::Neg(b(Node::Pow(b(Node::Var), 2)))
        );
    }
}
