//! Scalar fields the calculus runs over.
//!
//! Every kernel and coefficient tensor is generic over [`Scalar`]. Three
//! implementations ship: `f64` (fast float mode), [`Rational`] (exact mode,
//! used for identity proofs) and [`C64`] (needed once the two-point function
//! enters).

use std::fmt::Debug;
use std::ops::{Add, Mul, Neg, Sub};

use num::bigint::BigInt;
use num::rational::{BigRational, Rational64};
use num::{Complex, One, Signed, ToPrimitive, Zero};
use serde_json::Value;

pub type Rational = BigRational;
pub type C64 = Complex<f64>;

/// Arithmetic mode selector used by reports and the CLI.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Float,
    Rational,
}

impl Mode {
    pub fn as_str(&self) -> &'static str {
        match self {
            Mode::Float => "float",
            Mode::Rational => "rational",
        }
    }
}

pub trait Scalar:
    Clone
    + Debug
    + PartialEq
    + Zero
    + One
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Neg<Output = Self>
    + Send
    + Sync
    + 'static
{
    /// True when arithmetic is exact.
    const EXACT: bool;

    fn from_ratio(num: i64, den: i64) -> Self;
    fn from_rational64(r: &Rational64) -> Self;
    /// Absolute value as a float, used for residual norms.
    fn magnitude(&self) -> f64;
    fn to_c64(&self) -> C64;
    fn to_json(&self) -> Value;
    fn from_json(v: &Value) -> Option<Self>;

    fn from_i64(n: i64) -> Self {
        Self::from_ratio(n, 1)
    }
}

impl Scalar for f64 {
    const EXACT: bool = false;

    fn from_ratio(num: i64, den: i64) -> Self {
        num as f64 / den as f64
    }
    fn from_rational64(r: &Rational64) -> Self {
        *r.numer() as f64 / *r.denom() as f64
    }
    fn magnitude(&self) -> f64 {
        self.abs()
    }
    fn to_c64(&self) -> C64 {
        C64::new(*self, 0.0)
    }
    fn to_json(&self) -> Value {
        serde_json::json!(self)
    }
    fn from_json(v: &Value) -> Option<Self> {
        match v {
            Value::String(s) => parse_big_rational(s).and_then(|r| r.to_f64()),
            _ => v.as_f64(),
        }
    }
}

impl Scalar for Rational {
    const EXACT: bool = true;

    fn from_ratio(num: i64, den: i64) -> Self {
        Rational::new(BigInt::from(num), BigInt::from(den))
    }
    fn from_rational64(r: &Rational64) -> Self {
        Rational::new(BigInt::from(*r.numer()), BigInt::from(*r.denom()))
    }
    fn magnitude(&self) -> f64 {
        self.abs().to_f64().unwrap_or(f64::INFINITY)
    }
    fn to_c64(&self) -> C64 {
        C64::new(self.to_f64().unwrap_or(f64::NAN), 0.0)
    }
    fn to_json(&self) -> Value {
        Value::String(format!("{}/{}", self.numer(), self.denom()))
    }
    fn from_json(v: &Value) -> Option<Self> {
        match v {
            Value::String(s) => parse_big_rational(s),
            Value::Number(n) => n.as_i64().map(|i| Self::from_ratio(i, 1)),
            _ => None,
        }
    }
}

impl Scalar for C64 {
    const EXACT: bool = false;

    fn from_ratio(num: i64, den: i64) -> Self {
        C64::new(num as f64 / den as f64, 0.0)
    }
    fn from_rational64(r: &Rational64) -> Self {
        C64::new(f64::from_rational64(r), 0.0)
    }
    fn magnitude(&self) -> f64 {
        self.norm()
    }
    fn to_c64(&self) -> C64 {
        *self
    }
    fn to_json(&self) -> Value {
        serde_json::json!([self.re, self.im])
    }
    fn from_json(v: &Value) -> Option<Self> {
        let a = v.as_array()?;
        if a.len() != 2 {
            return None;
        }
        Some(C64::new(a[0].as_f64()?, a[1].as_f64()?))
    }
}

fn parse_big_rational(s: &str) -> Option<Rational> {
    let s = s.trim();
    match s.split_once('/') {
        Some((n, d)) => {
            let n: BigInt = n.trim().parse().ok()?;
            let d: BigInt = d.trim().parse().ok()?;
            if d.is_zero() {
                None
            } else {
                Some(Rational::new(n, d))
            }
        }
        None => s.parse::<BigInt>().ok().map(Rational::from_integer),
    }
}

/// Parses `"1/2"`, `"0.25"` or `"3"` into an exact small rational.
pub fn parse_rational64(s: &str) -> Option<Rational64> {
    let s = s.trim();
    if let Some((n, d)) = s.split_once('/') {
        let n: i64 = n.trim().parse().ok()?;
        let d: i64 = d.trim().parse().ok()?;
        if d == 0 {
            return None;
        }
        return Some(Rational64::new(n, d));
    }
    if let Some((int, frac)) = s.split_once('.') {
        if frac.len() > 15 || !frac.chars().all(|c| c.is_ascii_digit()) {
            return None;
        }
        let negative = int.trim_start().starts_with('-');
        let int_part: i64 = if int.is_empty() || int == "-" { 0 } else { int.parse().ok()? };
        let den = 10i64.checked_pow(frac.len() as u32)?;
        let frac_part: i64 = if frac.is_empty() { 0 } else { frac.parse().ok()? };
        let sign = if negative { -1 } else { 1 };
        let num = int_part.checked_mul(den)?.checked_add(sign * frac_part)?;
        return Some(Rational64::new(num, den));
    }
    s.parse::<i64>().ok().map(Rational64::from_integer)
}

pub fn format_rational64(r: &Rational64) -> String {
    if r.is_integer() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

/// `n!` as an `i64`; only used for the small orders appearing in expansions.
pub fn factorial(n: usize) -> i64 {
    (1..=n as i64).product::<i64>().max(1)
}

/// Number of distinct orderings of a sorted multiset, `d! / Π mᵢ!`.
pub fn orderings(sorted: &[u32]) -> i64 {
    let mut count = factorial(sorted.len());
    let mut run = 1usize;
    for w in sorted.windows(2) {
        if w[0] == w[1] {
            run += 1;
        } else {
            count /= factorial(run);
            run = 1;
        }
    }
    count / factorial(run)
}

pub fn binomial(n: usize, k: usize) -> i64 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: i64 = 1;
    for i in 0..k {
        acc = acc * (n - i) as i64 / (i + 1) as i64;
    }
    acc
}
