//! A small expression language over exact rationals, used for piecewise maps
//! and coefficient functions on interval spaces.
//!
//! ```text
//! expr   := term (('+' | '-') term)*
//! term   := factor ('*' factor)*
//! factor := '-' factor | power
//! power  := atom ('^' uint)?
//! atom   := rational | 'x' | 'y' | 'abs' '(' expr ')' | '(' expr ')'
//! ```
//!
//! Rational literals are integers, exact decimals (`0.25`) or `p/q`.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::rational::Rational;

/// Largest exponent accepted after `^`.
pub const MAX_EXPONENT: u32 = 64;

/// Deepest nesting of parentheses, `abs` and unary minus the parser accepts.
pub const MAX_DEPTH: usize = 128;

/// Longest source text, in characters.
pub const MAX_SOURCE_CHARS: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Var {
    X,
    Y,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Expression {
    Const(Rational),
    Var(Var),
    Neg(Box<Expression>),
    Add(Box<Expression>, Box<Expression>),
    Sub(Box<Expression>, Box<Expression>),
    Mul(Box<Expression>, Box<Expression>),
    Pow(Box<Expression>, u32),
    Abs(Box<Expression>),
}

/// Token class the parser was looking for.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Expected {
    Operand,
    OperatorOrEnd,
    CloseParen,
    OpenParen,
    Exponent,
    ShallowerNesting,
    ShorterSource,
}

impl fmt::Display for Expected {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Expected::Operand => "a number, 'x', 'y', 'abs(' or '('",
            Expected::OperatorOrEnd => "an operator or end of input",
            Expected::CloseParen => "')'",
            Expected::OpenParen => "'('",
            Expected::Exponent => "a non-negative integer exponent",
            Expected::ShallowerNesting => "nesting at most 128 levels deep",
            Expected::ShorterSource => "at most 4096 characters",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("expected {expected} at offset {position}")]
pub struct ParseError {
    /// Character offset into the source.
    pub position: usize,
    pub expected: Expected,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EvalError {
    #[error("variable y is not bound")]
    UnboundY,
}

pub fn parse(source: &str) -> Result<Expression, ParseError> {
    let chars: Vec<char> = source.chars().collect();
    if chars.len() > MAX_SOURCE_CHARS {
        return Err(ParseError { position: MAX_SOURCE_CHARS, expected: Expected::ShorterSource });
    }
    let mut p = Parser { chars: &chars, pos: 0, depth: 0 };
    let e = p.expr()?;
    p.skip_ws();
    if p.pos < chars.len() {
        return Err(p.error(Expected::OperatorOrEnd));
    }
    Ok(e)
}

struct Parser<'a> {
    chars: &'a [char],
    pos: usize,
    depth: usize,
}

impl Parser<'_> {
    fn skip_ws(&mut self) {
        while self.pos < self.chars.len() && self.chars[self.pos].is_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<char> {
        self.skip_ws();
        self.chars.get(self.pos).copied()
    }

    fn error(&self, expected: Expected) -> ParseError {
        // errors at end of input point at the last character
        let position = self.pos.min(self.chars.len().saturating_sub(1));
        ParseError { position, expected }
    }

    fn expr(&mut self) -> Result<Expression, ParseError> {
        let mut lhs = self.term()?;
        loop {
            match self.peek() {
                Some('+') => {
                    self.pos += 1;
                    lhs = Expression::Add(Box::new(lhs), Box::new(self.term()?));
                }
                Some('-') => {
                    self.pos += 1;
                    lhs = Expression::Sub(Box::new(lhs), Box::new(self.term()?));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn term(&mut self) -> Result<Expression, ParseError> {
        let mut lhs = self.factor()?;
        while self.peek() == Some('*') {
            self.pos += 1;
            lhs = Expression::Mul(Box::new(lhs), Box::new(self.factor()?));
        }
        Ok(lhs)
    }

    fn factor(&mut self) -> Result<Expression, ParseError> {
        self.depth += 1;
        if self.depth > MAX_DEPTH {
            return Err(self.error(Expected::ShallowerNesting));
        }
        let out = self.factor_inner();
        self.depth -= 1;
        out
    }

    fn factor_inner(&mut self) -> Result<Expression, ParseError> {
        if self.peek() == Some('-') {
            self.pos += 1;
            return Ok(Expression::Neg(Box::new(self.factor()?)));
        }
        let base = self.atom()?;
        if self.peek() == Some('^') {
            self.pos += 1;
            self.skip_ws();
            let start = self.pos;
            while self.pos < self.chars.len() && self.chars[self.pos].is_ascii_digit() {
                self.pos += 1;
            }
            let digits: String = self.chars[start..self.pos].iter().collect();
            let exp = match digits.parse::<u32>() {
                Ok(e) if e <= MAX_EXPONENT => e,
                _ => {
                    self.pos = start;
                    return Err(self.error(Expected::Exponent));
                }
            };
            return Ok(Expression::Pow(Box::new(base), exp));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Expression, ParseError> {
        match self.peek() {
            Some('(') => {
                self.pos += 1;
                let e = self.expr()?;
                if self.peek() != Some(')') {
                    return Err(self.error(Expected::CloseParen));
                }
                self.pos += 1;
                Ok(e)
            }
            Some(c) if c.is_ascii_digit() || c == '.' => self.number(),
            Some(c) if c.is_ascii_alphabetic() => {
                let start = self.pos;
                while self.pos < self.chars.len() && self.chars[self.pos].is_ascii_alphanumeric() {
                    self.pos += 1;
                }
                let word: String = self.chars[start..self.pos].iter().collect();
                match word.as_str() {
                    "x" => Ok(Expression::Var(Var::X)),
                    "y" => Ok(Expression::Var(Var::Y)),
                    "abs" => {
                        if self.peek() != Some('(') {
                            return Err(self.error(Expected::OpenParen));
                        }
                        self.pos += 1;
                        let e = self.expr()?;
                        if self.peek() != Some(')') {
                            return Err(self.error(Expected::CloseParen));
                        }
                        self.pos += 1;
                        Ok(Expression::Abs(Box::new(e)))
                    }
                    _ => {
                        self.pos = start;
                        Err(self.error(Expected::Operand))
                    }
                }
            }
            _ => Err(self.error(Expected::Operand)),
        }
    }

    fn number(&mut self) -> Result<Expression, ParseError> {
        let start = self.pos;
        let digits = |p: &mut Self| {
            let s = p.pos;
            while p.pos < p.chars.len() && p.chars[p.pos].is_ascii_digit() {
                p.pos += 1;
            }
            p.pos - s
        };
        let int_len = digits(self);
        let mut is_decimal = false;
        if self.chars.get(self.pos) == Some(&'.') {
            self.pos += 1;
            is_decimal = true;
            if digits(self) == 0 && int_len == 0 {
                self.pos = start;
                return Err(self.error(Expected::Operand));
            }
        }
        // p/q only between integers; a slash after a decimal is not a literal
        let save = self.pos;
        if !is_decimal && self.chars.get(self.pos) == Some(&'/') {
            self.pos += 1;
            if digits(self) == 0 {
                self.pos = save;
            }
        }
        let text: String = self.chars[start..self.pos].iter().collect();
        match Rational::from_str(&text) {
            Ok(v) => Ok(Expression::Const(v)),
            Err(_) => {
                // zero denominator: take the integer and leave '/' unconsumed
                self.pos = save;
                let text: String = self.chars[start..save].iter().collect();
                Ok(Expression::Const(Rational::from_str(&text).map_err(|_| self.error(Expected::Operand))?))
            }
        }
    }
}

impl FromStr for Expression {
    type Err = ParseError;
    fn from_str(s: &str) -> Result<Self, ParseError> {
        parse(s)
    }
}

impl Expression {
    pub fn constant(v: Rational) -> Self {
        Expression::Const(v)
    }

    pub fn mentions(&self, var: Var) -> bool {
        match self {
            Expression::Const(_) => false,
            Expression::Var(v) => *v == var,
            Expression::Neg(a) | Expression::Pow(a, _) | Expression::Abs(a) => a.mentions(var),
            Expression::Add(a, b) | Expression::Sub(a, b) | Expression::Mul(a, b) => {
                a.mentions(var) || b.mentions(var)
            }
        }
    }

    /// Exact value at `x` (and `y`, when bound).
    pub fn evaluate(&self, x: &Rational, y: Option<&Rational>) -> Result<Rational, EvalError> {
        Ok(match self {
            Expression::Const(c) => c.clone(),
            Expression::Var(Var::X) => x.clone(),
            Expression::Var(Var::Y) => y.cloned().ok_or(EvalError::UnboundY)?,
            Expression::Neg(a) => -a.evaluate(x, y)?,
            Expression::Add(a, b) => a.evaluate(x, y)? + b.evaluate(x, y)?,
            Expression::Sub(a, b) => a.evaluate(x, y)? - b.evaluate(x, y)?,
            Expression::Mul(a, b) => a.evaluate(x, y)? * b.evaluate(x, y)?,
            Expression::Pow(a, n) => a.evaluate(x, y)?.pow(*n),
            Expression::Abs(a) => a.evaluate(x, y)?.abs(),
        })
    }

    /// Split into `sum scale_t * term_t`, descending through sums, differences,
    /// negations and products with a constant factor.
    pub fn additive_terms(&self) -> Vec<(Rational, &Expression)> {
        fn walk<'a>(e: &'a Expression, scale: Rational, out: &mut Vec<(Rational, &'a Expression)>) {
            match e {
                Expression::Add(a, b) => {
                    walk(a, scale.clone(), out);
                    walk(b, scale, out);
                }
                Expression::Sub(a, b) => {
                    walk(a, scale.clone(), out);
                    walk(b, -scale, out);
                }
                Expression::Neg(a) => walk(a, -scale, out),
                Expression::Mul(c, a) | Expression::Mul(a, c) if matches!(**c, Expression::Const(_)) => {
                    let Expression::Const(c) = &**c else { unreachable!() };
                    walk(a, scale * c, out)
                }
                _ => out.push((scale, e)),
            }
        }
        let mut out = Vec::new();
        walk(self, Rational::one(), &mut out);
        out
    }

    fn precedence(&self) -> u8 {
        match self {
            Expression::Add(..) | Expression::Sub(..) => 1,
            Expression::Mul(..) => 2,
            Expression::Neg(_) => 3,
            Expression::Pow(..) => 4,
            Expression::Const(c) if c.is_negative() => 3,
            Expression::Const(_) | Expression::Var(_) | Expression::Abs(_) => 5,
        }
    }
}

fn write_at(f: &mut fmt::Formatter<'_>, e: &Expression, min_prec: u8) -> fmt::Result {
    if e.precedence() < min_prec {
        write!(f, "({e})")
    } else {
        write!(f, "{e}")
    }
}

/// Canonical form: re-parsing the printed text yields the same tree.
impl fmt::Display for Expression {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expression::Const(c) if c.is_negative() => write!(f, "-{}", c.abs()),
            Expression::Const(c) => write!(f, "{c}"),
            Expression::Var(Var::X) => f.write_str("x"),
            Expression::Var(Var::Y) => f.write_str("y"),
            Expression::Neg(a) => {
                f.write_str("-")?;
                write_at(f, a, 3)
            }
            Expression::Add(a, b) => {
                write_at(f, a, 1)?;
                f.write_str(" + ")?;
                write_at(f, b, 2)
            }
            Expression::Sub(a, b) => {
                write_at(f, a, 1)?;
                f.write_str(" - ")?;
                write_at(f, b, 2)
            }
            Expression::Mul(a, b) => {
                write_at(f, a, 2)?;
                f.write_str("*")?;
                write_at(f, b, 3)
            }
            Expression::Pow(a, n) => {
                match a.as_ref() {
                    Expression::Const(c) if !c.is_integer() => write!(f, "({a})")?,
                    _ => write_at(f, a, 5)?,
                }
                write!(f, "^{n}")
            }
            Expression::Abs(a) => write!(f, "abs({a})"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(s: &str) -> Rational {
        s.parse().unwrap()
    }

    const EX37_A0: &str = "abs(4*x^2 - 3*x + 1/2) + abs(4*y^2 - 3*y + 1/2)";
    const EX210_A0: &str = "(5/6)*(x*abs(x - 1/4) + y*abs(y - 1/4))";

    fn c(s: &str) -> Box<Expression> {
        Box::new(Expression::Const(q(s)))
    }

    fn var(v: Var) -> Box<Expression> {
        Box::new(Expression::Var(v))
    }

    #[test]
    fn parses_quadratic_abs_tree() {
        use Expression::*;
        let quad = |v| {
            Box::new(Abs(Box::new(Add(
                Box::new(Sub(Box::new(Mul(c("4"), Box::new(Pow(var(v), 2)))), Box::new(Mul(c("3"), var(v))))),
                c("1/2"),
            ))))
        };
        assert_eq!(parse(EX37_A0).unwrap(), Add(quad(super::Var::X), quad(super::Var::Y)));
    }

    #[test]
    fn parses_weighted_abs_tree() {
        use Expression::*;
        let t = |v| Box::new(Mul(var(v), Box::new(Abs(Box::new(Sub(var(v), c("1/4")))))));
        assert_eq!(parse(EX210_A0).unwrap(), Mul(c("5/6"), Box::new(Add(t(super::Var::X), t(super::Var::Y)))));
    }

    #[test]
    fn zero_literal() {
        assert_eq!(parse("0").unwrap(), Expression::Const(Rational::zero()));
        assert_eq!(parse(" 0.25 ").unwrap(), Expression::Const(q("1/4")));
    }

    #[test]
    fn evaluates_exactly() {
        let a37 = parse(EX37_A0).unwrap();
        assert_eq!(a37.evaluate(&q("1"), Some(&q("0"))).unwrap(), q("2"));
        assert_eq!(a37.evaluate(&q("1/4"), Some(&q("1"))).unwrap(), q("3/2"));
        let a210 = parse(EX210_A0).unwrap();
        assert_eq!(a210.evaluate(&q("1/4"), Some(&q("1/4"))).unwrap(), q("0"));
    }

    #[test]
    fn unbound_y_is_an_error() {
        assert_eq!(parse("x + y").unwrap().evaluate(&q("1"), None), Err(EvalError::UnboundY));
        assert_eq!(parse("2*x").unwrap().evaluate(&q("3"), None), Ok(q("6")));
    }

    #[test]
    fn precedence_and_unary_minus() {
        let e = parse("-x^2 + 2*3 - 1 - 1").unwrap();
        assert_eq!(e.evaluate(&q("3"), None).unwrap(), q("-5"));
        assert_eq!(parse("--x").unwrap().evaluate(&q("2"), None).unwrap(), q("2"));
        assert_eq!(parse("(x - 1)^3").unwrap().evaluate(&q("0"), None).unwrap(), q("-1"));
    }

    #[test]
    fn parse_errors_carry_position_and_class() {
        let err = |s: &str| parse(s).unwrap_err();
        assert_eq!(err(""), ParseError { position: 0, expected: Expected::Operand });
        assert_eq!(err("x +"), ParseError { position: 2, expected: Expected::Operand });
        assert_eq!(err("abs x"), ParseError { position: 4, expected: Expected::OpenParen });
        assert_eq!(err("(x"), ParseError { position: 1, expected: Expected::CloseParen });
        assert_eq!(err("x y"), ParseError { position: 2, expected: Expected::OperatorOrEnd });
        assert_eq!(err("z"), ParseError { position: 0, expected: Expected::Operand });
        assert_eq!(err("x^-1"), ParseError { position: 2, expected: Expected::Exponent });
        assert_eq!(err("x^1000"), ParseError { position: 2, expected: Expected::Exponent });
        assert_eq!(err("1/0"), ParseError { position: 1, expected: Expected::OperatorOrEnd });
        assert_eq!(err(&"x+".repeat(5000)).expected, Expected::ShorterSource);
        let deep = "(".repeat(1000);
        assert_eq!(err(&deep).expected, Expected::ShallowerNesting);
        assert!(parse(&format!("{}x{}", "(".repeat(100), ")".repeat(100))).is_ok());
        for s in ["", "x +", "abs x", "(x", "x y", "1/0", "((", "x*"] {
            let e = err(s);
            assert!(e.position <= s.chars().count().saturating_sub(1));
        }
    }

    #[test]
    fn printer_round_trips() {
        for s in [EX37_A0, EX210_A0, "-x^2", "-(x + 1)", "x - (y - 1)", "(x*y)*2", "x*(y*2)", "(-x)^2", "0.5"] {
            let e = parse(s).unwrap();
            assert_eq!(parse(&e.to_string()).unwrap(), e, "round trip of {s:?} via {e}");
        }
    }

    #[test]
    fn additive_split_of_examples() {
        let e = parse(EX210_A0).unwrap();
        let terms = e.additive_terms();
        assert_eq!(terms.len(), 2);
        assert!(terms.iter().all(|(s, _)| *s == q("5/6")));
        assert!(terms[0].1.mentions(Var::X) && !terms[0].1.mentions(Var::Y));
        let e = parse("x - 2*(y - 3)").unwrap();
        let scales: Vec<Rational> = e.additive_terms().into_iter().map(|(s, _)| s).collect();
        // the constant 3 stays a leaf with scale 2
        assert_eq!(scales, vec![q("1"), q("-2"), q("2")]);
    }

    use num_bigint::BigInt;
    use num_rational::BigRational;
    use num_traits::{One, Signed, Zero};
    use proptest::prelude::*;

    fn big(r: &Rational) -> BigRational {
        BigRational::new(r.numer_string().parse::<BigInt>().unwrap(), r.denom_string().parse::<BigInt>().unwrap())
    }

    fn oracle(e: &Expression, x: &BigRational, y: &BigRational) -> BigRational {
        match e {
            Expression::Const(c) => big(c),
            Expression::Var(Var::X) => x.clone(),
            Expression::Var(Var::Y) => y.clone(),
            Expression::Neg(a) => -oracle(a, x, y),
            Expression::Add(a, b) => oracle(a, x, y) + oracle(b, x, y),
            Expression::Sub(a, b) => oracle(a, x, y) - oracle(b, x, y),
            Expression::Mul(a, b) => oracle(a, x, y) * oracle(b, x, y),
            Expression::Pow(a, n) => {
                let base = oracle(a, x, y);
                (0..*n).fold(BigRational::one(), |acc, _| acc * &base)
            }
            Expression::Abs(a) => oracle(a, x, y).abs(),
        }
    }

    fn tree() -> impl Strategy<Value = Expression> {
        let leaf = prop_oneof![
            (0i64..7, 1i64..4).prop_map(|(n, d)| Expression::Const(Rational::new(n, d))),
            Just(Expression::Var(Var::X)),
            Just(Expression::Var(Var::Y)),
        ];
        leaf.prop_recursive(4, 24, 2, |inner| {
            prop_oneof![
                inner.clone().prop_map(|a| Expression::Neg(Box::new(a))),
                inner.clone().prop_map(|a| Expression::Abs(Box::new(a))),
                (inner.clone(), 0u32..4).prop_map(|(a, n)| Expression::Pow(Box::new(a), n)),
                (inner.clone(), inner.clone()).prop_map(|(a, b)| Expression::Add(Box::new(a), Box::new(b))),
                (inner.clone(), inner.clone()).prop_map(|(a, b)| Expression::Sub(Box::new(a), Box::new(b))),
                (inner.clone(), inner).prop_map(|(a, b)| Expression::Mul(Box::new(a), Box::new(b))),
            ]
        })
    }

    fn point() -> impl Strategy<Value = Rational> {
        (-8i64..9, 1i64..5).prop_map(|(n, d)| Rational::new(n, d))
    }

    proptest! {
        #[test]
        fn printed_trees_reparse_stably(t in tree()) {
            let once = parse(&t.to_string()).unwrap();
            prop_assert_eq!(parse(&once.to_string()).unwrap(), once);
        }

        #[test]
        fn evaluation_matches_oracle(t in tree(), x in point(), y in point()) {
            let expected = oracle(&t, &big(&x), &big(&y));
            prop_assert_eq!(big(&t.evaluate(&x, Some(&y)).unwrap()), expected.clone());
            let printed = parse(&t.to_string()).unwrap();
            prop_assert_eq!(big(&printed.evaluate(&x, Some(&y)).unwrap()), expected);
        }

        #[test]
        fn abs_is_non_negative(t in tree(), x in point(), y in point()) {
            let v = Expression::Abs(Box::new(t)).evaluate(&x, Some(&y)).unwrap();
            prop_assert!(!v.is_negative());
        }

        #[test]
        fn additive_terms_sum_to_value(t in tree(), x in point(), y in point()) {
            let total: Rational =
                t.additive_terms().into_iter().map(|(s, e)| s * e.evaluate(&x, Some(&y)).unwrap()).sum();
            prop_assert_eq!(total, t.evaluate(&x, Some(&y)).unwrap());
            let zero = BigRational::zero();
            prop_assert!(!big(&Expression::Abs(Box::new(t)).evaluate(&x, Some(&y)).unwrap()).lt(&zero));
        }
    }
}
