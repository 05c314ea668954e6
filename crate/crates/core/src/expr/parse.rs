//! Recursive-descent Pratt parser for the expression grammar.
//!
//! Grammar: variables `t`, `y`, `y'`, `y''` (aliases `y1`, `y2`; `y'''`/`y3`
//! are accepted so printed verification expressions round-trip), infix
//! `+ - * / ^` with standard precedence and right-associative `^`, unary
//! minus, functions `exp( )`, `ln( )`, `sin( )`, `cos( )`, and decimal or
//! rational literals. Exponents must reduce to exact rational constants.
//! The postfix prime binds only to `y`.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use num_traits::pow::pow as int_pow;

use super::{add, div, mul, neg, pow, sub, Expr, FuncKind, Rat, Var};

/// Parse failure with the byte offset of the offending token and a hint for
/// what was expected there.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SyntaxError {
    pub offset: usize,
    pub expected: String,
}

impl fmt::Display for SyntaxError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "syntax error at byte {}: expected {}", self.offset, self.expected)
    }
}

/// Parse `text` into a canonical expression.
pub fn parse(text: &str) -> Result<Expr, SyntaxError> {
    let tokens = lex(text)?;
    let mut parser = Parser { tokens, pos: 0 };
    let expr = parser.parse_expr(0)?;
    match parser.peek() {
        Token::End(_) => Ok(expr),
        tok => Err(SyntaxError {
            offset: tok.offset(),
            expected: "an operator or end of input".to_string(),
        }),
    }
}

#[derive(Clone, Debug, PartialEq)]
enum Token {
    Num(usize, Rat),
    Ident(usize, String),
    Prime(usize),
    Plus(usize),
    Minus(usize),
    Star(usize),
    Slash(usize),
    Caret(usize),
    LParen(usize),
    RParen(usize),
    End(usize),
}

impl Token {
    fn offset(&self) -> usize {
        match self {
            Token::Num(o, _)
            | Token::Ident(o, _)
            | Token::Prime(o)
            | Token::Plus(o)
            | Token::Minus(o)
            | Token::Star(o)
            | Token::Slash(o)
            | Token::Caret(o)
            | Token::LParen(o)
            | Token::RParen(o)
            | Token::End(o) => *o,
        }
    }
}

fn lex(text: &str) -> Result<Vec<Token>, SyntaxError> {
    let bytes = text.as_bytes();
    let mut tokens = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let b = bytes[i];
        match b {
            b' ' | b'\t' | b'\n' | b'\r' => i += 1,
            b'+' => {
                tokens.push(Token::Plus(i));
                i += 1;
            }
            b'-' => {
                tokens.push(Token::Minus(i));
                i += 1;
            }
            b'*' => {
                tokens.push(Token::Star(i));
                i += 1;
            }
            b'/' => {
                tokens.push(Token::Slash(i));
                i += 1;
            }
            b'^' => {
                tokens.push(Token::Caret(i));
                i += 1;
            }
            b'(' => {
                tokens.push(Token::LParen(i));
                i += 1;
            }
            b')' => {
                tokens.push(Token::RParen(i));
                i += 1;
            }
            b'\'' => {
                tokens.push(Token::Prime(i));
                i += 1;
            }
            b'0'..=b'9' | b'.' => {
                let start = i;
                while i < bytes.len() && bytes[i].is_ascii_digit() {
                    i += 1;
                }
                let mut frac_digits = 0usize;
                if i < bytes.len() && bytes[i] == b'.' {
                    i += 1;
                    let frac_start = i;
                    while i < bytes.len() && bytes[i].is_ascii_digit() {
                        i += 1;
                    }
                    frac_digits = i - frac_start;
                    if i == frac_start && frac_start == start + 1 {
                        return Err(SyntaxError {
                            offset: start,
                            expected: "digits around the decimal point".to_string(),
                        });
                    }
                }
                let digits: String = text[start..i].chars().filter(|c| *c != '.').collect();
                let numer: num_bigint::BigInt = digits.parse().map_err(|_| SyntaxError {
                    offset: start,
                    expected: "a numeric literal".to_string(),
                })?;
                let denom = int_pow(num_bigint::BigInt::from(10), frac_digits);
                tokens.push(Token::Num(start, Rat::new(numer, denom)));
            }
            b'a'..=b'z' | b'A'..=b'Z' => {
                let start = i;
                while i < bytes.len() && (bytes[i].is_ascii_alphanumeric()) {
                    i += 1;
                }
                tokens.push(Token::Ident(start, text[start..i].to_string()));
            }
            _ => {
                return Err(SyntaxError {
                    offset: i,
                    expected: "a number, variable, function, or operator".to_string(),
                })
            }
        }
    }
    tokens.push(Token::End(text.len()));
    Ok(tokens)
}

// Binding powers: additive (1,2) < multiplicative (3,4) < unary minus (5) <
// power (8,7, right-associative).
const BP_ADD: (u8, u8) = (1, 2);
const BP_MUL: (u8, u8) = (3, 4);
const BP_NEG: u8 = 5;
const BP_POW: (u8, u8) = (8, 7);

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> &Token {
        &self.tokens[self.pos]
    }

    fn bump(&mut self) -> Token {
        let tok = self.tokens[self.pos].clone();
        if self.pos + 1 < self.tokens.len() {
            self.pos += 1;
        }
        tok
    }

    fn parse_expr(&mut self, min_bp: u8) -> Result<Expr, SyntaxError> {
        let mut lhs = self.parse_prefix()?;
        loop {
            let (l_bp, r_bp, op) = match self.peek() {
                Token::Plus(_) => (BP_ADD.0, BP_ADD.1, b'+'),
                Token::Minus(_) => (BP_ADD.0, BP_ADD.1, b'-'),
                Token::Star(_) => (BP_MUL.0, BP_MUL.1, b'*'),
                Token::Slash(_) => (BP_MUL.0, BP_MUL.1, b'/'),
                Token::Caret(_) => (BP_POW.0, BP_POW.1, b'^'),
                _ => break,
            };
            if l_bp < min_bp {
                break;
            }
            self.bump();
            if op == b'^' {
                let exp_offset = self.peek().offset();
                let rhs = self.parse_expr(r_bp)?;
                let q = match rhs {
                    Expr::Const(q) => q,
                    _ => {
                        return Err(SyntaxError {
                            offset: exp_offset,
                            expected: "an exact rational exponent".to_string(),
                        })
                    }
                };
                lhs = pow(lhs, q);
            } else {
                let rhs = self.parse_expr(r_bp)?;
                lhs = match op {
                    b'+' => add(lhs, rhs),
                    b'-' => sub(lhs, rhs),
                    b'*' => mul(lhs, rhs),
                    b'/' => div(lhs, rhs),
                    _ => unreachable!(),
                };
            }
        }
        Ok(lhs)
    }

    fn parse_prefix(&mut self) -> Result<Expr, SyntaxError> {
        match self.bump() {
            Token::Num(_, value) => Ok(Expr::Const(value)),
            Token::Minus(_) => {
                let inner = self.parse_expr(BP_NEG)?;
                Ok(neg(inner))
            }
            Token::LParen(_) => {
                let inner = self.parse_expr(0)?;
                match self.bump() {
                    Token::RParen(_) => Ok(inner),
                    tok => Err(SyntaxError {
                        offset: tok.offset(),
                        expected: "a closing parenthesis".to_string(),
                    }),
                }
            }
            Token::Ident(offset, name) => self.parse_ident(offset, &name),
            tok => Err(SyntaxError {
                offset: tok.offset(),
                expected: "a number, variable, function, or parenthesized expression".to_string(),
            }),
        }
    }

    fn parse_ident(&mut self, offset: usize, name: &str) -> Result<Expr, SyntaxError> {
        match name {
            "t" => Ok(Expr::Var(Var::T)),
            "y" => {
                let mut primes = 0u8;
                while matches!(self.peek(), Token::Prime(_)) {
                    let tok = self.bump();
                    primes += 1;
                    if primes > 3 {
                        return Err(SyntaxError {
                            offset: tok.offset(),
                            expected: "at most three primes on y".to_string(),
                        });
                    }
                }
                Ok(Expr::Var(match primes {
                    0 => Var::Y,
                    1 => Var::Y1,
                    2 => Var::Y2,
                    _ => Var::Y3,
                }))
            }
            "y1" => Ok(Expr::Var(Var::Y1)),
            "y2" => Ok(Expr::Var(Var::Y2)),
            "y3" => Ok(Expr::Var(Var::Y3)),
            "exp" | "ln" | "sin" | "cos" => {
                let kind = match name {
                    "exp" => FuncKind::Exp,
                    "ln" => FuncKind::Ln,
                    "sin" => FuncKind::Sin,
                    _ => FuncKind::Cos,
                };
                match self.bump() {
                    Token::LParen(_) => {}
                    tok => {
                        return Err(SyntaxError {
                            offset: tok.offset(),
                            expected: format!("an opening parenthesis after {name}"),
                        })
                    }
                }
                let arg = self.parse_expr(0)?;
                match self.bump() {
                    Token::RParen(_) => Ok(super::func(kind, arg)),
                    tok => Err(SyntaxError {
                        offset: tok.offset(),
                        expected: "a closing parenthesis".to_string(),
                    }),
                }
            }
            _ => Err(SyntaxError {
                offset,
                expected: "one of t, y, y', y'', y1, y2, exp, ln, sin, cos".to_string(),
            }),
        }
    }
}
