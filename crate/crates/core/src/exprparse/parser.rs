//! Recursive-descent parser for the scalar expression grammar.
//!
//! ```text
//! expr     = term { ("+" | "-") term } ;
//! term     = unary { ("*" | "/") unary } ;
//! unary    = "-" unary | power ;
//! power    = primary { "^" exponent } ;
//! exponent = [ "-" ] digits ;
//! primary  = number | "pi" | variable | func "(" expr ")" | "(" expr ")" ;
//! number   = digits [ "." digits ] [ ("e" | "E") [ "+" | "-" ] digits ]
//!          | "." digits [ ("e" | "E") [ "+" | "-" ] digits ] ;
//! variable = "t" | "x1" .. "x4" | "u1" .. "u4" ;
//! func     = "sin" | "cos" | "sinh" | "cosh" | "exp" | "log" | "sqrt" ;
//! ```
//!
//! `^` binds tighter than unary minus, so `-t^2` is `-(t^2)`.

use thiserror::Error;

use super::ast::{BinOp, Expr, Func, Var};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ParseError {
    #[error("empty expression")]
    Empty,
    #[error("syntax error at offset {offset}: {message}")]
    Syntax { offset: usize, message: String },
    #[error("unknown identifier `{name}` at offset {offset}")]
    UnknownIdentifier { name: String, offset: usize },
    #[error("non-integer exponent at offset {offset}")]
    NonIntegerExponent { offset: usize },
}

impl ParseError {
    pub fn offset(&self) -> Option<usize> {
        match self {
            ParseError::Empty => None,
            ParseError::Syntax { offset, .. }
            | ParseError::UnknownIdentifier { offset, .. }
            | ParseError::NonIntegerExponent { offset } => Some(*offset),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Num(String),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
    End,
}

struct Lexer<'a> {
    src: &'a [u8],
    pos: usize,
}

impl<'a> Lexer<'a> {
    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn digits(&mut self) -> usize {
        let start = self.pos;
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        self.pos - start
    }

    fn next(&mut self) -> Result<(Tok, usize), ParseError> {
        self.skip_ws();
        let start = self.pos;
        let Some(&c) = self.src.get(self.pos) else {
            return Ok((Tok::End, start));
        };
        let single = match c {
            b'+' => Some(Tok::Plus),
            b'-' => Some(Tok::Minus),
            b'*' => Some(Tok::Star),
            b'/' => Some(Tok::Slash),
            b'^' => Some(Tok::Caret),
            b'(' => Some(Tok::LParen),
            b')' => Some(Tok::RParen),
            _ => None,
        };
        if let Some(tok) = single {
            self.pos += 1;
            return Ok((tok, start));
        }
        if c.is_ascii_digit() || c == b'.' {
            let int_digits = self.digits();
            let mut frac_digits = 0;
            if self.src.get(self.pos) == Some(&b'.') {
                self.pos += 1;
                frac_digits = self.digits();
            }
            if int_digits + frac_digits == 0 {
                return Err(ParseError::Syntax {
                    offset: start,
                    message: "malformed number".into(),
                });
            }
            if matches!(self.src.get(self.pos), Some(b'e') | Some(b'E')) {
                let save = self.pos;
                self.pos += 1;
                if matches!(self.src.get(self.pos), Some(b'+') | Some(b'-')) {
                    self.pos += 1;
                }
                if self.digits() == 0 {
                    // not an exponent after all
                    self.pos = save;
                }
            }
            let text = String::from_utf8_lossy(&self.src[start..self.pos]).into_owned();
            return Ok((Tok::Num(text), start));
        }
        if c.is_ascii_alphabetic() || c == b'_' {
            while self.pos < self.src.len()
                && (self.src[self.pos].is_ascii_alphanumeric() || self.src[self.pos] == b'_')
            {
                self.pos += 1;
            }
            let text = String::from_utf8_lossy(&self.src[start..self.pos]).into_owned();
            return Ok((Tok::Ident(text), start));
        }
        Err(ParseError::Syntax {
            offset: start,
            message: format!("unexpected character `{}`", c as char),
        })
    }
}

struct Parser<'a> {
    lexer: Lexer<'a>,
    tok: Tok,
    at: usize,
}

impl<'a> Parser<'a> {
    fn bump(&mut self) -> Result<(), ParseError> {
        let (tok, at) = self.lexer.next()?;
        self.tok = tok;
        self.at = at;
        Ok(())
    }

    fn syntax<T>(&self, message: impl Into<String>) -> Result<T, ParseError> {
        Err(ParseError::Syntax {
            offset: self.at,
            message: message.into(),
        })
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.term()?;
        loop {
            let op = match self.tok {
                Tok::Plus => BinOp::Add,
                Tok::Minus => BinOp::Sub,
                _ => return Ok(lhs),
            };
            self.bump()?;
            let rhs = self.term()?;
            lhs = Expr::binary(op, lhs, rhs);
        }
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.unary()?;
        loop {
            let op = match self.tok {
                Tok::Star => BinOp::Mul,
                Tok::Slash => BinOp::Div,
                _ => return Ok(lhs),
            };
            self.bump()?;
            let rhs = self.unary()?;
            lhs = Expr::binary(op, lhs, rhs);
        }
    }

    fn unary(&mut self) -> Result<Expr, ParseError> {
        if self.tok == Tok::Minus {
            self.bump()?;
            return Ok(Expr::Neg(Box::new(self.unary()?)));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr, ParseError> {
        let mut base = self.primary()?;
        while self.tok == Tok::Caret {
            self.bump()?;
            let exp_at = self.at;
            let negative = self.tok == Tok::Minus;
            if negative {
                self.bump()?;
            }
            let n = match &self.tok {
                Tok::Num(text) if text.bytes().all(|b| b.is_ascii_digit()) => {
                    text.parse::<i32>()
                        .map_err(|_| ParseError::NonIntegerExponent { offset: exp_at })?
                }
                Tok::Num(_) | Tok::Ident(_) | Tok::LParen => {
                    return Err(ParseError::NonIntegerExponent { offset: exp_at })
                }
                _ => return self.syntax("expected integer exponent"),
            };
            self.bump()?;
            base = Expr::pow(base, if negative { -n } else { n });
        }
        Ok(base)
    }

    fn primary(&mut self) -> Result<Expr, ParseError> {
        match self.tok.clone() {
            Tok::Num(text) => {
                let value: f64 = text.parse().map_err(|_| ParseError::Syntax {
                    offset: self.at,
                    message: format!("malformed number `{text}`"),
                })?;
                self.bump()?;
                Ok(Expr::Num { value, text })
            }
            Tok::Ident(name) => {
                let at = self.at;
                self.bump()?;
                if name == "pi" {
                    return Ok(Expr::Num {
                        value: std::f64::consts::PI,
                        text: name,
                    });
                }
                if let Some(v) = Var::from_name(&name) {
                    return Ok(Expr::Var(v));
                }
                if let Some(f) = Func::from_name(&name) {
                    if self.tok != Tok::LParen {
                        return self.syntax(format!("expected `(` after `{name}`"));
                    }
                    self.bump()?;
                    let arg = self.expr()?;
                    self.expect_rparen()?;
                    return Ok(Expr::call(f, arg));
                }
                Err(ParseError::UnknownIdentifier { name, offset: at })
            }
            Tok::LParen => {
                self.bump()?;
                let inner = self.expr()?;
                self.expect_rparen()?;
                Ok(Expr::Paren(Box::new(inner)))
            }
            Tok::End => self.syntax("unexpected end of input"),
            other => self.syntax(format!("unexpected token {other:?}")),
        }
    }

    fn expect_rparen(&mut self) -> Result<(), ParseError> {
        if self.tok != Tok::RParen {
            return self.syntax("expected `)`");
        }
        self.bump()
    }
}

/// Parses an expression string.
pub fn parse(text: &str) -> Result<Expr, ParseError> {
    if text.trim().is_empty() {
        return Err(ParseError::Empty);
    }
    let mut p = Parser {
        lexer: Lexer {
            src: text.as_bytes(),
            pos: 0,
        },
        tok: Tok::End,
        at: 0,
    };
    p.bump()?;
    let e = p.expr()?;
    if p.tok != Tok::End {
        return p.syntax("trailing input");
    }
    Ok(e)
}

/// Parses and checks that every variable is in `allowed`.
pub fn parse_in(text: &str, allowed: &[Var]) -> Result<Expr, ParseError> {
    let e = parse(text)?;
    if let Some(v) = e.variables().into_iter().find(|v| !allowed.contains(v)) {
        let name = v.to_string();
        let offset = find_ident(text, &name).unwrap_or(0);
        return Err(ParseError::UnknownIdentifier { name, offset });
    }
    Ok(e)
}

fn find_ident(text: &str, name: &str) -> Option<usize> {
    let bytes = text.as_bytes();
    let is_word = |b: u8| b.is_ascii_alphanumeric() || b == b'_';
    text.match_indices(name).map(|(i, _)| i).find(|&i| {
        let before = i == 0 || !is_word(bytes[i - 1]);
        let end = i + name.len();
        let after = end >= bytes.len() || !is_word(bytes[end]);
        before && after
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_call() {
        let e = parse("cos(t)").unwrap();
        assert_eq!(e, Expr::call(Func::Cos, Expr::Var(Var::T)));
    }

    #[test]
    fn precedence_of_power_and_sum() {
        let e = parse("t^2 + sinh(x1)").unwrap();
        let expected = Expr::binary(
            BinOp::Add,
            Expr::pow(Expr::Var(Var::T), 2),
            Expr::call(Func::Sinh, Expr::Var(Var::X(0))),
        );
        assert_eq!(e, expected);
    }

    #[test]
    fn unary_minus_binds_looser_than_power() {
        let e = parse("-t^2").unwrap();
        assert_eq!(e, Expr::Neg(Box::new(Expr::pow(Expr::Var(Var::T), 2))));
        let e = parse("2*-t").unwrap();
        assert!(matches!(e, Expr::Binary(BinOp::Mul, _, _)));
    }

    #[test]
    fn unbalanced_paren_reports_end_offset() {
        let err = parse("cos(").unwrap_err();
        assert_eq!(err.offset(), Some(4));
        assert!(matches!(err, ParseError::Syntax { .. }));
    }

    #[test]
    fn rejects_bad_exponents_and_identifiers() {
        assert_eq!(
            parse("t^1.5").unwrap_err(),
            ParseError::NonIntegerExponent { offset: 2 }
        );
        assert!(matches!(
            parse("t^x1").unwrap_err(),
            ParseError::NonIntegerExponent { .. }
        ));
        assert_eq!(
            parse("2*y").unwrap_err(),
            ParseError::UnknownIdentifier {
                name: "y".into(),
                offset: 2
            }
        );
        assert!(matches!(
            parse("x5").unwrap_err(),
            ParseError::UnknownIdentifier { .. }
        ));
        assert_eq!(parse("  ").unwrap_err(), ParseError::Empty);
        assert!(matches!(
            parse("sin t").unwrap_err(),
            ParseError::Syntax { .. }
        ));
        assert!(matches!(
            parse("1 2").unwrap_err(),
            ParseError::Syntax { .. }
        ));
    }

    #[test]
    fn negative_exponent_and_scientific_literal() {
        let e = parse("t^-2 * 1.5e-3").unwrap();
        assert_eq!(e.to_string(), "t^-2*1.5e-3");
    }

    #[test]
    fn printing_reproduces_source_without_whitespace() {
        for src in [
            "cos(t)",
            "( t + 1 ) * -x2 ^ 3",
            "sqrt(x1^2 + x2^2) / (2*pi)",
            "exp(log(u1)) - - u2",
        ] {
            let stripped: String = src.chars().filter(|c| !c.is_whitespace()).collect();
            assert_eq!(parse(src).unwrap().to_string(), stripped);
        }
    }

    #[test]
    fn scoped_parse_rejects_foreign_variables() {
        let err = parse_in("cos(t) + x1", &[Var::T]).unwrap_err();
        assert_eq!(
            err,
            ParseError::UnknownIdentifier {
                name: "x1".into(),
                offset: 9
            }
        );
        assert!(parse_in("x1*x2", &[Var::X(0), Var::X(1)]).is_ok());
    }
}
