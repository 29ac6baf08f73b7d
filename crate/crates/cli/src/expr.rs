//! A small expression evaluator for p-adic arithmetic at the command line:
//! `norm(12, p=2)` → `1/4`, `halve(rat(1/3)) * 3 - Qp(2; -1; 1)` → canonical
//! literal output.
//!
//! Grammar:
//!   expr    := term (('+'|'-') term)*
//!   term    := unary (('*'|'/') unary)*
//!   unary   := '-' unary | atom
//!   atom    := call | literal | '(' expr ')'
//!   call    := name '(' expr (',' (expr | key '=' value))* ')'
//! Literals are integers, fractions `a/b`, `rat(a/b)` and `Qp(p; v; d0,…)`.
//! Keyword arguments `p=…` and `N=…` set the evaluation context (prime and
//! precision) for the whole expression.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::Zero;
use ulamlab_core::padic::PAdicNumber;
use ulamlab_core::{Error, Result};

#[derive(Debug, Clone)]
enum Ast {
    Literal(String),
    Neg(Box<Ast>),
    Binary(char, Box<Ast>, Box<Ast>),
    Call(String, Vec<Ast>),
}

#[derive(Debug, Clone)]
pub enum Value {
    Padic(PAdicNumber),
    Rational(BigRational),
}

impl Value {
    pub fn render(&self) -> String {
        match self {
            Value::Padic(x) => x.to_string(),
            Value::Rational(q) => {
                if q.denom() == &BigInt::from(1) {
                    q.numer().to_string()
                } else {
                    format!("{}/{}", q.numer(), q.denom())
                }
            }
        }
    }
}

pub struct Evaluator {
    pub prime: u32,
    pub precision: usize,
}

impl Evaluator {
    pub fn new(prime: u32, precision: usize) -> Self {
        Evaluator { prime, precision }
    }

    /// Parse and evaluate; keyword arguments may update the context first.
    pub fn eval(&mut self, input: &str) -> Result<Value> {
        let mut parser = Parser::new(input);
        let ast = parser.expr()?;
        parser.expect_end()?;
        for (key, value) in parser.keywords {
            match key.as_str() {
                "p" => {
                    self.prime = value
                        .parse()
                        .map_err(|_| Error::Parse(format!("bad prime `{value}`")))?
                }
                "N" | "n" | "prec" => {
                    self.precision = value
                        .parse()
                        .map_err(|_| Error::Parse(format!("bad precision `{value}`")))?
                }
                other => return Err(Error::Parse(format!("unknown option `{other}`"))),
            }
        }
        self.eval_ast(&ast)
    }

    fn embed(&self, q: &BigRational) -> Result<PAdicNumber> {
        PAdicNumber::from_rational(
            q.numer().clone(),
            q.denom().clone(),
            self.prime,
            self.precision,
        )
    }

    fn as_padic(&self, v: Value) -> Result<PAdicNumber> {
        match v {
            Value::Padic(x) => Ok(x),
            Value::Rational(q) => self.embed(&q),
        }
    }

    fn eval_ast(&self, ast: &Ast) -> Result<Value> {
        match ast {
            Ast::Literal(s) => Ok(Value::Padic(PAdicNumber::parse(
                s,
                self.prime,
                self.precision,
            )?)),
            Ast::Neg(inner) => match self.eval_ast(inner)? {
                Value::Padic(x) => Ok(Value::Padic(x.neg())),
                Value::Rational(q) => Ok(Value::Rational(-q)),
            },
            Ast::Binary(op, l, r) => {
                let lv = self.eval_ast(l)?;
                let rv = self.eval_ast(r)?;
                // Rational ⊙ Rational stays exact in ℚ; anything touching a
                // p-adic value is computed in Q_p.
                if let (Value::Rational(a), Value::Rational(b)) = (&lv, &rv) {
                    return match op {
                        '+' => Ok(Value::Rational(a + b)),
                        '-' => Ok(Value::Rational(a - b)),
                        '*' => Ok(Value::Rational(a * b)),
                        '/' => {
                            if b.is_zero() {
                                Err(Error::DivisionByZero)
                            } else {
                                Ok(Value::Rational(a / b))
                            }
                        }
                        _ => unreachable!(),
                    };
                }
                let a = self.as_padic(lv)?;
                let b = self.as_padic(rv)?;
                let out = match op {
                    '+' => a.add(&b)?,
                    '-' => a.sub(&b)?,
                    '*' => a.mul(&b)?,
                    '/' => a.div(&b)?,
                    _ => unreachable!(),
                };
                Ok(Value::Padic(out))
            }
            Ast::Call(name, args) => self.eval_call(name, args),
        }
    }

    fn eval_call(&self, name: &str, args: &[Ast]) -> Result<Value> {
        let arity = |n: usize| -> Result<()> {
            if args.len() != n {
                Err(Error::Parse(format!("{name}() takes {n} argument(s)")))
            } else {
                Ok(())
            }
        };
        match name {
            "norm" => {
                arity(1)?;
                let x = self.as_padic(self.eval_ast(&args[0])?)?;
                Ok(Value::Rational(x.norm()))
            }
            "val" => {
                arity(1)?;
                let x = self.as_padic(self.eval_ast(&args[0])?)?;
                match x.valuation() {
                    Some(v) => Ok(Value::Rational(BigRational::from_integer(BigInt::from(v)))),
                    None => Err(Error::Domain("val(0) is +infinity".into())),
                }
            }
            "halve" => {
                arity(1)?;
                let x = self.as_padic(self.eval_ast(&args[0])?)?;
                Ok(Value::Padic(x.halve()))
            }
            "double" => {
                arity(1)?;
                let x = self.as_padic(self.eval_ast(&args[0])?)?;
                Ok(Value::Padic(x.scale_pow2(1)))
            }
            "inv" => {
                arity(1)?;
                let x = self.as_padic(self.eval_ast(&args[0])?)?;
                let one = PAdicNumber::one(self.prime, self.precision);
                Ok(Value::Padic(one.div(&x)?))
            }
            "neg" => {
                arity(1)?;
                let x = self.as_padic(self.eval_ast(&args[0])?)?;
                Ok(Value::Padic(x.neg()))
            }
            other => Err(Error::Parse(format!("unknown function `{other}`"))),
        }
    }
}

struct Parser<'a> {
    chars: Vec<char>,
    pos: usize,
    src: &'a str,
    keywords: Vec<(String, String)>,
}

impl<'a> Parser<'a> {
    fn new(src: &'a str) -> Self {
        Parser { chars: src.chars().collect(), pos: 0, src, keywords: Vec::new() }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.chars.len() && self.chars[self.pos].is_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<char> {
        self.skip_ws();
        self.chars.get(self.pos).copied()
    }

    fn bump(&mut self) -> Option<char> {
        self.skip_ws();
        let c = self.chars.get(self.pos).copied();
        if c.is_some() {
            self.pos += 1;
        }
        c
    }

    fn expect(&mut self, c: char) -> Result<()> {
        match self.bump() {
            Some(got) if got == c => Ok(()),
            got => Err(Error::Parse(format!(
                "expected `{c}` at position {} of `{}`, found {:?}",
                self.pos, self.src, got
            ))),
        }
    }

    fn expect_end(&mut self) -> Result<()> {
        self.skip_ws();
        if self.pos == self.chars.len() {
            Ok(())
        } else {
            Err(Error::Parse(format!(
                "unexpected trailing input `{}`",
                self.chars[self.pos..].iter().collect::<String>()
            )))
        }
    }

    fn expr(&mut self) -> Result<Ast> {
        let mut lhs = self.term()?;
        while let Some(op @ ('+' | '-')) = self.peek() {
            self.bump();
            let rhs = self.term()?;
            lhs = Ast::Binary(op, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn term(&mut self) -> Result<Ast> {
        let mut lhs = self.unary()?;
        while let Some(op @ ('*' | '/')) = self.peek() {
            // `a/b` between bare integers is a rational literal, handled in
            // the literal scanner; at this level `/` is field division.
            self.bump();
            let rhs = self.unary()?;
            lhs = Ast::Binary(op, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Ast> {
        if self.peek() == Some('-') {
            self.bump();
            return Ok(Ast::Neg(Box::new(self.unary()?)));
        }
        self.atom()
    }

    fn atom(&mut self) -> Result<Ast> {
        match self.peek() {
            Some('(') => {
                self.bump();
                let inner = self.expr()?;
                self.expect(')')?;
                Ok(inner)
            }
            Some(c) if c.is_ascii_digit() => Ok(Ast::Literal(self.number()?)),
            Some(c) if c.is_alphabetic() => self.ident_or_call(),
            other => Err(Error::Parse(format!(
                "unexpected {:?} in `{}`",
                other, self.src
            ))),
        }
    }

    fn number(&mut self) -> Result<String> {
        self.skip_ws();
        let start = self.pos;
        while self
            .chars
            .get(self.pos)
            .is_some_and(|c| c.is_ascii_digit())
        {
            self.pos += 1;
        }
        Ok(self.chars[start..self.pos].iter().collect())
    }

    fn ident(&mut self) -> String {
        self.skip_ws();
        let start = self.pos;
        while self
            .chars
            .get(self.pos)
            .is_some_and(|c| c.is_alphanumeric() || *c == '_')
        {
            self.pos += 1;
        }
        self.chars[start..self.pos].iter().collect()
    }

    fn ident_or_call(&mut self) -> Result<Ast> {
        let name = self.ident();
        if name.is_empty() {
            return Err(Error::Parse(format!("expected a name in `{}`", self.src)));
        }
        // `rat(...)` and `Qp(...)` are literals with their own bracketed
        // syntax; capture their raw text.
        if name == "rat" || name == "Qp" {
            self.expect('(')?;
            let start = self.pos;
            let mut depth = 1usize;
            while depth > 0 {
                match self.chars.get(self.pos) {
                    Some('(') => depth += 1,
                    Some(')') => depth -= 1,
                    None => return Err(Error::Parse(format!("unterminated `{name}(`"))),
                    _ => {}
                }
                self.pos += 1;
            }
            let body: String = self.chars[start..self.pos - 1].iter().collect();
            return Ok(Ast::Literal(format!("{name}({body})")));
        }
        self.expect('(')?;
        let mut args = Vec::new();
        if self.peek() == Some(')') {
            self.bump();
            return Ok(Ast::Call(name, args));
        }
        loop {
            // keyword argument: ident '=' token
            let save = self.pos;
            let maybe_key = if self.peek().is_some_and(|c| c.is_alphabetic()) {
                let k = self.ident();
                if self.peek() == Some('=') {
                    self.bump();
                    Some(k)
                } else {
                    self.pos = save;
                    None
                }
            } else {
                None
            };
            if let Some(key) = maybe_key {
                self.skip_ws();
                let start = self.pos;
                while self
                    .chars
                    .get(self.pos)
                    .is_some_and(|c| !matches!(c, ',' | ')'))
                {
                    self.pos += 1;
                }
                let value: String = self.chars[start..self.pos].iter().collect();
                self.keywords.push((key, value.trim().to_string()));
            } else {
                args.push(self.expr()?);
            }
            match self.bump() {
                Some(',') => continue,
                Some(')') => break,
                got => {
                    return Err(Error::Parse(format!(
                        "expected `,` or `)` in argument list, found {got:?}"
                    )))
                }
            }
        }
        Ok(Ast::Call(name, args))
    }
}
