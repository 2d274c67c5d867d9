//! Exact arithmetic in Q and in real quadratic fields Q(sqrt(D)).
//!
//! A [`QuadSurd`] is the canonical form `(p + q*sqrt(D))/r` with `D > 1`
//! squarefree, `r > 0`, `gcd(p, q, r) = 1` and `q != 0`, so "is irrational"
//! is a type-level fact. Values that degenerate to Q are demoted to
//! [`Rational`]. Mixed-field arithmetic is an error rather than an implicit
//! embedding into a biquadratic field.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};

/// Arbitrary-precision rational with positive reduced denominator.
pub type Rational = num_rational::BigRational;

/// Trial-division bound for squarefree extraction. Square factors made of
/// primes above this bound are a deterministic error, never silent.
pub const TRIAL_DIVISION_BOUND: u64 = 1_000_000;

/// Decompose `n > 0` as `core * s^2` with `core` squarefree.
///
/// Trial division up to [`TRIAL_DIVISION_BOUND`]; the undecidable leftover
/// range (non-square cofactors >= 10^18 with no small factor) is rejected.
pub(crate) fn squarefree_decompose(n: &BigInt) -> Result<(BigInt, BigInt)> {
    if !n.is_positive() {
        return Err(Error::InvalidRadicand(n.clone()));
    }
    let mut m = n.clone();
    let mut core = BigInt::one();
    let mut square = BigInt::one();
    let mut p = BigInt::from(2u32);
    let bound = BigInt::from(TRIAL_DIVISION_BOUND);
    while &p * &p <= m && p <= bound {
        if m.is_multiple_of(&p) {
            let mut e = 0u64;
            while m.is_multiple_of(&p) {
                m /= &p;
                e += 1;
            }
            if e % 2 == 1 {
                core *= &p;
            }
            square *= p.pow((e / 2) as u32);
        }
        p += if p == BigInt::from(2u32) { 1u32 } else { 2u32 };
    }
    if !m.is_one() {
        let s = m.sqrt();
        if &s * &s == m {
            // leftover is a perfect square; its root need not be prime
            square *= s;
        } else if m < BigInt::from(10u64).pow(18) {
            // no factor <= 10^6 and non-square below 10^18 forces squarefree
            core *= m;
        } else {
            return Err(Error::SquareFactorTooLarge);
        }
    }
    Ok((core, square))
}

fn gcd3(a: &BigInt, b: &BigInt, c: &BigInt) -> BigInt {
    a.gcd(b).gcd(c)
}

/// Canonical element `(p + q*sqrt(D))/r` of a real quadratic field.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct QuadSurd {
    p: BigInt,
    q: BigInt,
    r: BigInt,
    d: BigInt,
}

/// A value that lives in Q or in a fixed real quadratic field.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FieldElem {
    Rational(Rational),
    Surd(QuadSurd),
}

/// Canonicalize `(p + q*sqrt(d))/r`.
///
/// The square part of `d` is folded into `q`, the sign of `r` is normalized
/// positive and the triple is divided by its gcd. Rational values (including
/// every perfect-square `d`) are rejected; use [`Rational`] for those.
pub fn surd_normalize(p: BigInt, q: BigInt, r: BigInt, d: BigInt) -> Result<QuadSurd> {
    if r.is_zero() {
        return Err(Error::DivisionByZero);
    }
    if !d.is_positive() {
        return Err(Error::InvalidRadicand(d));
    }
    let (core, square) = squarefree_decompose(&d)?;
    let q = q * square;
    if q.is_zero() || core.is_one() {
        return Err(Error::RationalValue);
    }
    let (mut p, mut q, mut r) = (p, q, r);
    if r.is_negative() {
        p = -p;
        q = -q;
        r = -r;
    }
    let g = gcd3(&p, &q, &r);
    Ok(QuadSurd {
        p: p / &g,
        q: q / &g,
        r: r / &g,
        d: core,
    })
}

impl QuadSurd {
    pub fn new(p: impl Into<BigInt>, q: impl Into<BigInt>, r: impl Into<BigInt>, d: impl Into<BigInt>) -> Result<Self> {
        surd_normalize(p.into(), q.into(), r.into(), d.into())
    }

    /// `sqrt(d)` for a positive non-square `d`.
    pub fn sqrt_of(d: impl Into<BigInt>) -> Result<Self> {
        surd_normalize(BigInt::zero(), BigInt::one(), BigInt::one(), d.into())
    }

    pub fn p(&self) -> &BigInt {
        &self.p
    }
    pub fn q(&self) -> &BigInt {
        &self.q
    }
    pub fn r(&self) -> &BigInt {
        &self.r
    }
    /// The squarefree radicand `D > 1`.
    pub fn d(&self) -> &BigInt {
        &self.d
    }

    /// Galois conjugate `(p - q*sqrt(D))/r`.
    pub fn conjugate(&self) -> QuadSurd {
        QuadSurd {
            p: self.p.clone(),
            q: -self.q.clone(),
            r: self.r.clone(),
            d: self.d.clone(),
        }
    }

    pub fn neg(&self) -> QuadSurd {
        QuadSurd {
            p: -self.p.clone(),
            q: -self.q.clone(),
            r: self.r.clone(),
            d: self.d.clone(),
        }
    }

    /// Sign of the real value: -1, 0 never occurs, +1.
    pub fn signum(&self) -> i8 {
        raw_sign(&self.p, &self.q, &self.d)
    }

    pub fn is_positive(&self) -> bool {
        self.signum() > 0
    }

    /// Exact floor of the real value.
    pub fn floor(&self) -> BigInt {
        floor_quadratic(&self.p, &self.q, &self.r, &self.d)
    }

    /// Exact comparison; errors on mixed radicands.
    pub fn cmp_surd(&self, other: &QuadSurd) -> Result<Ordering> {
        if self.d != other.d {
            return Err(Error::MixedFields(self.d.clone(), other.d.clone()));
        }
        // sign of self - other
        let p = &self.p * &other.r - &other.p * &self.r;
        let q = &self.q * &other.r - &other.q * &self.r;
        Ok(sign_to_ordering(raw_sign(&p, &q, &self.d)))
    }

    pub fn cmp_rational(&self, t: &Rational) -> Ordering {
        // sign of self - t
        let p = &self.p * t.denom() - t.numer() * &self.r;
        let q = &self.q * t.denom();
        sign_to_ordering(raw_sign(&p, &q, &self.d))
    }

    /// Enclosing rational interval of width at most `10^-digits`.
    pub fn bounds(&self, digits: u32) -> (Rational, Rational) {
        let scale = BigInt::from(10u32).pow(digits);
        let n = &self.q * &self.q * &self.d * &scale * &scale;
        let s = n.sqrt();
        let den = &self.r * &scale;
        let (lo_num, hi_num) = if self.q.is_positive() {
            (&self.p * &scale + &s, &self.p * &scale + &s + 1)
        } else {
            (&self.p * &scale - &s - 1, &self.p * &scale - &s)
        };
        (
            Rational::new(lo_num, den.clone()),
            Rational::new(hi_num, den),
        )
    }
}

fn sign_to_ordering(s: i8) -> Ordering {
    match s {
        x if x > 0 => Ordering::Greater,
        x if x < 0 => Ordering::Less,
        _ => Ordering::Equal,
    }
}

/// Sign of `p + q*sqrt(D)` for squarefree `D > 1`.
fn raw_sign(p: &BigInt, q: &BigInt, d: &BigInt) -> i8 {
    if q.is_zero() {
        return if p.is_positive() {
            1
        } else if p.is_negative() {
            -1
        } else {
            0
        };
    }
    if p.is_zero() {
        return if q.is_positive() { 1 } else { -1 };
    }
    match (p.is_positive(), q.is_positive()) {
        (true, true) => 1,
        (false, false) => -1,
        (true, false) => {
            // p > 0 > q: compare p^2 with q^2 D (equality impossible, D non-square)
            if p * p > q * q * d {
                1
            } else {
                -1
            }
        }
        (false, true) => {
            if p * p > q * q * d {
                -1
            } else {
                1
            }
        }
    }
}

/// Exact floor of `(p + q*sqrt(D))/r` with `r != 0`, `q != 0`, `D` non-square.
pub(crate) fn floor_quadratic(p: &BigInt, q: &BigInt, r: &BigInt, d: &BigInt) -> BigInt {
    let s = (q * q * d).sqrt();
    // q*sqrt(D) lies strictly between s and s+1 (q > 0), or -(s+1) and -s (q < 0)
    let num = if q.is_positive() { p + s } else { p - s - 1 };
    let num = if r.is_negative() { num + 1 } else { num };
    num.div_floor(r)
}

impl FieldElem {
    pub fn from_int(n: impl Into<BigInt>) -> FieldElem {
        FieldElem::Rational(Rational::from_integer(n.into()))
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, FieldElem::Rational(t) if t.is_zero())
    }

    pub fn as_surd(&self) -> Option<&QuadSurd> {
        match self {
            FieldElem::Surd(x) => Some(x),
            FieldElem::Rational(_) => None,
        }
    }

    /// Radicand of the field the value generates, when irrational.
    fn radicand(&self) -> Option<&BigInt> {
        self.as_surd().map(|x| &x.d)
    }

    fn common_radicand(&self, other: &FieldElem) -> Result<Option<BigInt>> {
        match (self.radicand(), other.radicand()) {
            (Some(a), Some(b)) if a != b => Err(Error::MixedFields(a.clone(), b.clone())),
            (Some(a), _) => Ok(Some(a.clone())),
            (_, Some(b)) => Ok(Some(b.clone())),
            (None, None) => Ok(None),
        }
    }

    /// Raw triple `(p, q, r)` over a fixed radicand, `r > 0` not enforced.
    fn raw(&self) -> (BigInt, BigInt, BigInt) {
        match self {
            FieldElem::Rational(t) => (t.numer().clone(), BigInt::zero(), t.denom().clone()),
            FieldElem::Surd(x) => (x.p.clone(), x.q.clone(), x.r.clone()),
        }
    }

    pub fn add(&self, other: &FieldElem) -> Result<FieldElem> {
        match self.common_radicand(other)? {
            None => match (self, other) {
                (FieldElem::Rational(a), FieldElem::Rational(b)) => {
                    Ok(FieldElem::Rational(a + b))
                }
                _ => unreachable!(),
            },
            Some(d) => {
                let (p1, q1, r1) = self.raw();
                let (p2, q2, r2) = other.raw();
                combine(&p1 * &r2 + &p2 * &r1, &q1 * &r2 + &q2 * &r1, r1 * r2, d)
            }
        }
    }

    pub fn sub(&self, other: &FieldElem) -> Result<FieldElem> {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> FieldElem {
        match self {
            FieldElem::Rational(t) => FieldElem::Rational(-t),
            FieldElem::Surd(x) => FieldElem::Surd(x.neg()),
        }
    }

    pub fn mul(&self, other: &FieldElem) -> Result<FieldElem> {
        match self.common_radicand(other)? {
            None => match (self, other) {
                (FieldElem::Rational(a), FieldElem::Rational(b)) => {
                    Ok(FieldElem::Rational(a * b))
                }
                _ => unreachable!(),
            },
            Some(d) => {
                let (p1, q1, r1) = self.raw();
                let (p2, q2, r2) = other.raw();
                combine(
                    &p1 * &p2 + &q1 * &q2 * &d,
                    &p1 * &q2 + &q1 * &p2,
                    r1 * r2,
                    d,
                )
            }
        }
    }

    pub fn inv(&self) -> Result<FieldElem> {
        match self {
            FieldElem::Rational(t) => {
                if t.is_zero() {
                    Err(Error::DivisionByZero)
                } else {
                    Ok(FieldElem::Rational(t.recip()))
                }
            }
            FieldElem::Surd(x) => {
                // 1/x = r (p - q sqrt(D)) / (p^2 - q^2 D), nonzero since x is irrational
                let norm = &x.p * &x.p - &x.q * &x.q * &x.d;
                combine(&x.r * &x.p, -(&x.r * &x.q), norm, x.d.clone())
            }
        }
    }

    pub fn div(&self, other: &FieldElem) -> Result<FieldElem> {
        if other.is_zero() {
            return Err(Error::DivisionByZero);
        }
        self.mul(&other.inv()?)
    }

    pub fn signum(&self) -> i8 {
        match self {
            FieldElem::Rational(t) => {
                if t.is_positive() {
                    1
                } else if t.is_negative() {
                    -1
                } else {
                    0
                }
            }
            FieldElem::Surd(x) => x.signum(),
        }
    }

    /// Enclosing rational interval of width at most `10^-digits`.
    pub fn bounds(&self, digits: u32) -> (Rational, Rational) {
        match self {
            FieldElem::Rational(t) => (t.clone(), t.clone()),
            FieldElem::Surd(x) => x.bounds(digits),
        }
    }
}

/// Normalize a raw `(p + q*sqrt(d))/r`, demoting rational results.
fn combine(p: BigInt, q: BigInt, r: BigInt, d: BigInt) -> Result<FieldElem> {
    if r.is_zero() {
        return Err(Error::DivisionByZero);
    }
    if q.is_zero() {
        return Ok(FieldElem::Rational(Rational::new(p, r)));
    }
    Ok(FieldElem::Surd(surd_normalize(p, q, r, d)?))
}

/// Primitive integer quadratic `a x^2 + b x + c` with `a > 0`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MinPoly {
    a: BigInt,
    b: BigInt,
    c: BigInt,
}

impl MinPoly {
    pub fn a(&self) -> &BigInt {
        &self.a
    }
    pub fn b(&self) -> &BigInt {
        &self.b
    }
    pub fn c(&self) -> &BigInt {
        &self.c
    }

    pub fn discriminant(&self) -> BigInt {
        &self.b * &self.b - BigInt::from(4u32) * &self.a * &self.c
    }

    /// Exact evaluation at a field element.
    pub fn eval(&self, x: &FieldElem) -> Result<FieldElem> {
        let x2 = x.mul(x)?;
        let ax2 = x2.mul(&FieldElem::from_int(self.a.clone()))?;
        let bx = x.mul(&FieldElem::from_int(self.b.clone()))?;
        ax2.add(&bx)?.add(&FieldElem::from_int(self.c.clone()))
    }
}

impl fmt::Display for MinPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let term = |f: &mut fmt::Formatter<'_>, coef: &BigInt, var: &str| -> fmt::Result {
            if coef.is_zero() {
                return Ok(());
            }
            if coef.is_positive() {
                write!(f, " + ")?;
            } else {
                write!(f, " - ")?;
            }
            let a = coef.abs();
            if a.is_one() && !var.is_empty() {
                write!(f, "{var}")
            } else if var.is_empty() {
                write!(f, "{a}")
            } else {
                write!(f, "{a}{var}")
            }
        };
        if self.a.is_one() {
            write!(f, "x^2")?;
        } else {
            write!(f, "{}x^2", self.a)?;
        }
        term(f, &self.b, "x")?;
        term(f, &self.c, "")
    }
}

/// The unique primitive integer quadratic with positive leading coefficient
/// vanishing at `x`: from `(rx - p)^2 = q^2 D`.
pub fn minimal_polynomial(x: &QuadSurd) -> MinPoly {
    let a = &x.r * &x.r;
    let b = BigInt::from(-2) * &x.p * &x.r;
    let c = &x.p * &x.p - &x.q * &x.q * &x.d;
    let g = gcd3(&a, &b, &c);
    MinPoly {
        a: a / &g,
        b: b / &g,
        c: c / &g,
    }
}

impl fmt::Display for QuadSurd {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut core = String::new();
        if !self.p.is_zero() {
            core.push_str(&self.p.to_string());
            core.push(if self.q.is_positive() { '+' } else { '-' });
        } else if self.q.is_negative() {
            core.push('-');
        }
        let qa = self.q.abs();
        if !qa.is_one() {
            core.push_str(&qa.to_string());
            core.push('*');
        }
        core.push_str(&format!("sqrt({})", self.d));
        if self.r.is_one() {
            write!(f, "{core}")
        } else {
            write!(f, "({core})/{}", self.r)
        }
    }
}

impl fmt::Display for FieldElem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FieldElem::Rational(t) => write!(f, "{t}"),
            FieldElem::Surd(x) => write!(f, "{x}"),
        }
    }
}

fn parse_int(s: &str) -> Result<BigInt> {
    BigInt::from_str(s).map_err(|_| Error::Parse(format!("expected an integer, got {s:?}")))
}

/// Parse `"n/d"` or `"n"`.
pub fn parse_rational(s: &str) -> Result<Rational> {
    let s: String = s.chars().filter(|c| !c.is_whitespace()).collect();
    match s.split_once('/') {
        None => Ok(Rational::from_integer(parse_int(&s)?)),
        Some((n, d)) => {
            let den = parse_int(d)?;
            if den.is_zero() {
                return Err(Error::DivisionByZero);
            }
            Ok(Rational::new(parse_int(n)?, den))
        }
    }
}

/// Parse the surd syntax `(p+q*sqrt(D))/r` with optional spaces.
///
/// Shorthands are accepted: `sqrt(2)`, `-sqrt(2)`, `3*sqrt(2)`, `1+sqrt(5)`,
/// `(1+sqrt(5))/2`, `sqrt(2)/2`.
pub fn parse_surd(s: &str) -> Result<QuadSurd> {
    let s: String = s.chars().filter(|c| !c.is_whitespace()).collect();
    let err = || Error::Parse(format!("cannot parse quadratic surd from {s:?}"));
    let idx = s.find("sqrt(").ok_or_else(err)?;
    let after_open = idx + "sqrt(".len();
    let close = s[after_open..].find(')').ok_or_else(err)? + after_open;
    let d = parse_int(&s[after_open..close])?;

    let mut before = &s[..idx];
    let mut after = &s[close + 1..];
    if let Some(rest) = after.strip_prefix(')') {
        before = before.strip_prefix('(').ok_or_else(err)?;
        after = rest;
    }
    let r = if after.is_empty() {
        BigInt::one()
    } else {
        let rest = after.strip_prefix('/').ok_or_else(err)?;
        parse_int(rest)?
    };

    let (p, q) = if before.is_empty() {
        (BigInt::zero(), BigInt::one())
    } else if before == "-" || before == "+" {
        (BigInt::zero(), if before == "-" { -BigInt::one() } else { BigInt::one() })
    } else if let Some(head) = before.strip_suffix('*') {
        // forms: "q*", "p+q*", "p-q*"
        match head.rfind(['+', '-']) {
            Some(i) if i > 0 => (parse_int(&head[..i])?, parse_int(&head[i..])?),
            _ => (BigInt::zero(), parse_int(head)?),
        }
    } else {
        // coefficient 1, form "p+" or "p-"
        let op = before.chars().last().ok_or_else(err)?;
        let q = match op {
            '+' => BigInt::one(),
            '-' => -BigInt::one(),
            _ => return Err(err()),
        };
        let head = &before[..before.len() - 1];
        let p = if head.is_empty() { BigInt::zero() } else { parse_int(head)? };
        (p, q)
    };
    surd_normalize(p, q, r, d)
}

/// Parse either a quadratic surd or a rational, dispatching on `sqrt`.
pub fn parse_field_elem(s: &str) -> Result<FieldElem> {
    if s.contains("sqrt") {
        Ok(FieldElem::Surd(parse_surd(s)?))
    } else {
        Ok(FieldElem::Rational(parse_rational(s)?))
    }
}

impl FromStr for QuadSurd {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        parse_surd(s)
    }
}
