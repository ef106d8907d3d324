//! Recursive-descent parser.
//!
//! ```text
//! list   := expr | '[' expr (',' expr)* ']'
//! expr   := term (('+' | '-') term)*
//! term   := factor (('*' | '/') factor)*
//! factor := '-' factor | base ('^' '-'? number)?
//! base   := number | ident | '(' expr ')' | func '(' expr ')'
//! func   := exp | log | ln | sin | cos | tan | sqrt
//! ident  := t | y1 .. yd
//! ```

use super::{Expr, ExprBuilder, ExprError, Node, NodeId, UnaryOp};

/// Parses one expression, or a bracketed list of `d`-many or fewer
/// components, over the variables `t, y1..yd`.
pub fn parse(text: &str, dim: usize) -> Result<Expr, ExprError> {
    let mut p = Parser {
        src: text.as_bytes(),
        pos: 0,
        dim,
        b: ExprBuilder::new(),
    };
    let roots = p.list()?;
    p.skip_ws();
    if p.pos < p.src.len() {
        return Err(p.err("unexpected trailing input"));
    }
    Ok(p.b.finish(roots))
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
    dim: usize,
    b: ExprBuilder,
}

impl Parser<'_> {
    fn err(&self, msg: &str) -> ExprError {
        ExprError::Syntax {
            pos: self.pos,
            msg: msg.to_string(),
        }
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

    fn eat(&mut self, c: u8) -> bool {
        if self.peek() == Some(c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, c: u8) -> Result<(), ExprError> {
        if self.eat(c) {
            Ok(())
        } else {
            Err(self.err(&format!("expected `{}`", c as char)))
        }
    }

    fn list(&mut self) -> Result<Vec<NodeId>, ExprError> {
        if self.eat(b'[') {
            let mut roots = vec![self.expr()?];
            while self.eat(b',') {
                roots.push(self.expr()?);
            }
            self.expect(b']')?;
            Ok(roots)
        } else {
            Ok(vec![self.expr()?])
        }
    }

    fn expr(&mut self) -> Result<NodeId, ExprError> {
        let mut lhs = self.term()?;
        loop {
            if self.eat(b'+') {
                let rhs = self.term()?;
                lhs = self.b.binary(super::BinaryOp::Add, lhs, rhs);
            } else if self.eat(b'-') {
                let rhs = self.term()?;
                lhs = self.b.binary(super::BinaryOp::Sub, lhs, rhs);
            } else {
                return Ok(lhs);
            }
        }
    }

    fn term(&mut self) -> Result<NodeId, ExprError> {
        let mut lhs = self.factor()?;
        loop {
            if self.eat(b'*') {
                let rhs = self.factor()?;
                lhs = self.b.binary(super::BinaryOp::Mul, lhs, rhs);
            } else if self.eat(b'/') {
                let rhs = self.factor()?;
                lhs = self.b.binary(super::BinaryOp::Div, lhs, rhs);
            } else {
                return Ok(lhs);
            }
        }
    }

    fn factor(&mut self) -> Result<NodeId, ExprError> {
        if self.eat(b'-') {
            let inner = self.factor()?;
            return Ok(match self.b.get(inner) {
                Node::Const(c) => self.b.constant(-c),
                _ => self.b.unary(UnaryOp::Neg, inner),
            });
        }
        let base = self.base()?;
        if self.eat(b'^') {
            let start = self.pos;
            let negative = self.eat(b'-');
            match self.peek() {
                Some(c) if c.is_ascii_digit() || c == b'.' => {}
                _ => {
                    return Err(ExprError::NonConstantExponent {
                        pos: if negative { start } else { self.pos },
                    })
                }
            }
            let mut e = self.number()?;
            if negative {
                e = -e;
            }
            return Ok(self.b.pow(base, e));
        }
        Ok(base)
    }

    fn base(&mut self) -> Result<NodeId, ExprError> {
        match self.peek() {
            Some(b'(') => {
                self.pos += 1;
                let e = self.expr()?;
                self.expect(b')')?;
                Ok(e)
            }
            Some(c) if c.is_ascii_digit() || c == b'.' => {
                let v = self.number()?;
                Ok(self.b.constant(v))
            }
            Some(c) if c.is_ascii_alphabetic() => self.ident(),
            Some(_) => Err(self.err("expected a number, variable, function or `(`")),
            None => Err(self.err("unexpected end of input")),
        }
    }

    fn number(&mut self) -> Result<f64, ExprError> {
        self.skip_ws();
        let start = self.pos;
        let digits = |p: &mut Self| {
            while p.pos < p.src.len() && p.src[p.pos].is_ascii_digit() {
                p.pos += 1;
            }
        };
        digits(self);
        if self.pos < self.src.len() && self.src[self.pos] == b'.' {
            self.pos += 1;
            digits(self);
        }
        if self.pos < self.src.len() && matches!(self.src[self.pos], b'e' | b'E') {
            let save = self.pos;
            self.pos += 1;
            if self.pos < self.src.len() && matches!(self.src[self.pos], b'+' | b'-') {
                self.pos += 1;
            }
            let exp_start = self.pos;
            digits(self);
            if self.pos == exp_start {
                self.pos = save;
            }
        }
        let text = std::str::from_utf8(&self.src[start..self.pos]).unwrap();
        match text.parse::<f64>() {
            Ok(v) if v.is_finite() => Ok(v),
            _ => Err(ExprError::Syntax {
                pos: start,
                msg: format!("invalid number `{text}`"),
            }),
        }
    }

    fn ident(&mut self) -> Result<NodeId, ExprError> {
        let start = self.pos;
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_alphanumeric() {
            self.pos += 1;
        }
        let name = std::str::from_utf8(&self.src[start..self.pos]).unwrap();
        let func = match name {
            "exp" => Some(UnaryOp::Exp),
            "log" | "ln" => Some(UnaryOp::Log),
            "sin" => Some(UnaryOp::Sin),
            "cos" => Some(UnaryOp::Cos),
            "tan" => Some(UnaryOp::Tan),
            "sqrt" => Some(UnaryOp::Sqrt),
            _ => None,
        };
        if let Some(op) = func {
            self.expect(b'(')?;
            let arg = self.expr()?;
            self.expect(b')')?;
            return Ok(self.b.unary(op, arg));
        }
        if name == "t" {
            return Ok(self.b.var(0));
        }
        if let Some(idx) = name.strip_prefix('y') {
            if let Ok(k) = idx.parse::<usize>() {
                if k >= 1 && k <= self.dim && !idx.starts_with('0') {
                    return Ok(self.b.var(k));
                }
            }
        }
        Err(ExprError::UnknownIdentifier {
            pos: start,
            name: name.to_string(),
        })
    }
}
