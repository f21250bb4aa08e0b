//! Dual-mode scalars, exact square-root tests, seeded randomness and 1-D
//! minimization.
//!
//! Every statistic in the crate is generic over [`Scalar`]. The exact mode is
//! [`Rational`] (arbitrary precision, always reduced); the float mode is `f64`.
//! A computation never mixes the two: conversions go through
//! [`Scalar::to_f64`] or the text form.

use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};
use std::str::FromStr;

use num_bigint::{BigInt, BigUint, Sign};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Rational = BigRational;

/// Tolerance for zero tests on deltas, the prevalence product and the
/// discriminant in float mode.
pub const FLOAT_ZERO_TOL: f64 = 1e-9;

/// Slack allowed on the closed unit interval in float mode.
pub const FLOAT_CUBE_SLACK: f64 = 1e-12;

/// Arithmetic mode of a computation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Exact,
    Float,
}

impl FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "exact" | "rational" => Ok(Mode::Exact),
            "float" | "f64" => Ok(Mode::Float),
            other => Err(Error::InvalidConfig(format!("unknown mode '{other}'"))),
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Mode::Exact => f.write_str("exact"),
            Mode::Float => f.write_str("float"),
        }
    }
}

/// Outcome of taking a square root in a given mode.
#[derive(Debug, Clone, PartialEq)]
pub enum Root<S> {
    /// The root exists in the scalar field.
    Exact(S),
    /// Nonnegative, but the root is not a rational number.
    Irrational,
    Negative,
}

pub trait Scalar:
    Clone
    + fmt::Debug
    + PartialEq
    + PartialOrd
    + Send
    + Sync
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
{
    const MODE: Mode;

    fn zero() -> Self;
    fn one() -> Self;
    /// `num / den`; `den` must be nonzero.
    fn from_ratio(num: i64, den: i64) -> Self;
    fn from_counts(num: u64, den: u64) -> Self;
    fn to_f64(&self) -> f64;
    /// Exact equality with zero, or `|x| < FLOAT_ZERO_TOL` in float mode.
    fn is_negligible(&self) -> bool;
    fn sqrt_root(&self) -> Root<Self>;
    /// Canonical text form: `"p/q"` (reduced, positive denominator) or the
    /// shortest round-trip decimal.
    fn to_text(&self) -> String;
    fn parse_text(s: &str) -> Result<Self>;
    fn from_f64_lossy(x: f64) -> Self;
    /// The exact value, when this scalar is rational.
    fn as_rational(&self) -> Option<Rational>;

    fn is_exact() -> bool {
        Self::MODE == Mode::Exact
    }

    fn half() -> Self {
        Self::from_ratio(1, 2)
    }

    fn abs_val(&self) -> Self {
        if *self < Self::zero() {
            -self.clone()
        } else {
            self.clone()
        }
    }

    fn in_unit_interval(&self) -> bool {
        let slack = if Self::is_exact() { 0.0 } else { FLOAT_CUBE_SLACK };
        if Self::is_exact() {
            *self >= Self::zero() && *self <= Self::one()
        } else {
            let x = self.to_f64();
            x >= -slack && x <= 1.0 + slack
        }
    }
}

impl Scalar for f64 {
    const MODE: Mode = Mode::Float;

    fn zero() -> Self {
        0.0
    }
    fn one() -> Self {
        1.0
    }
    fn from_ratio(num: i64, den: i64) -> Self {
        num as f64 / den as f64
    }
    fn from_counts(num: u64, den: u64) -> Self {
        num as f64 / den as f64
    }
    fn to_f64(&self) -> f64 {
        *self
    }
    fn is_negligible(&self) -> bool {
        self.abs() < FLOAT_ZERO_TOL
    }
    fn sqrt_root(&self) -> Root<Self> {
        if *self < -FLOAT_ZERO_TOL {
            Root::Negative
        } else {
            Root::Exact(self.max(0.0).sqrt())
        }
    }
    fn to_text(&self) -> String {
        format!("{self:?}")
    }
    fn parse_text(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.contains('/') {
            let r = parse_rational(s)?;
            return Ok(Scalar::to_f64(&r));
        }
        s.parse::<f64>()
            .map_err(|_| Error::InvalidNumber(s.to_string()))
    }
    fn from_f64_lossy(x: f64) -> Self {
        x
    }
    fn as_rational(&self) -> Option<Rational> {
        None
    }
}

impl Scalar for Rational {
    const MODE: Mode = Mode::Exact;

    fn zero() -> Self {
        Zero::zero()
    }
    fn one() -> Self {
        One::one()
    }
    fn from_ratio(num: i64, den: i64) -> Self {
        Rational::new(BigInt::from(num), BigInt::from(den))
    }
    fn from_counts(num: u64, den: u64) -> Self {
        Rational::new(BigInt::from(num), BigInt::from(den))
    }
    fn to_f64(&self) -> f64 {
        ratio_to_f64(self)
    }
    fn is_negligible(&self) -> bool {
        self.is_zero()
    }
    fn sqrt_root(&self) -> Root<Self> {
        rational_sqrt(self)
    }
    fn to_text(&self) -> String {
        format_rational(self)
    }
    fn parse_text(s: &str) -> Result<Self> {
        parse_rational(s)
    }
    fn from_f64_lossy(x: f64) -> Self {
        Rational::from_float(x).unwrap_or_else(Zero::zero)
    }
    fn as_rational(&self) -> Option<Rational> {
        Some(self.clone())
    }
}

/// Converts a rational to the nearest-ish binary64 without overflowing on
/// huge numerators and denominators.
pub fn ratio_to_f64(r: &Rational) -> f64 {
    if let (Some(n), Some(d)) = (r.numer().to_f64(), r.denom().to_f64()) {
        if n.is_finite() && d.is_finite() && d != 0.0 {
            return n / d;
        }
    }
    // Scale both parts down to keep 64 significant bits.
    let nb = r.numer().bits() as i64;
    let db = r.denom().bits() as i64;
    let shift_n = (nb - 64).max(0) as usize;
    let shift_d = (db - 64).max(0) as usize;
    let n = (r.numer() >> shift_n).to_f64().unwrap_or(0.0);
    let d = (r.denom() >> shift_d).to_f64().unwrap_or(1.0);
    n / d * 2f64.powi((shift_n as i64 - shift_d as i64) as i32)
}

pub fn format_rational(r: &Rational) -> String {
    if r.denom().is_one() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

/// Parses `"p/q"`, an integer, or a finite decimal such as `"0.625"` into a
/// reduced rational.
pub fn parse_rational(s: &str) -> Result<Rational> {
    let s = s.trim();
    let bad = || Error::InvalidNumber(s.to_string());
    if let Some((p, q)) = s.split_once('/') {
        let p: BigInt = p.trim().parse().map_err(|_| bad())?;
        let q: BigInt = q.trim().parse().map_err(|_| bad())?;
        if q.is_zero() {
            return Err(bad());
        }
        return Ok(Rational::new(p, q));
    }
    if let Some((int, frac)) = s.split_once('.') {
        let negative = int.starts_with('-');
        let int_digits = int.trim_start_matches(['-', '+']);
        if frac.is_empty() && int_digits.is_empty() {
            return Err(bad());
        }
        if !int_digits.chars().all(|c| c.is_ascii_digit())
            || !frac.chars().all(|c| c.is_ascii_digit())
        {
            return Err(bad());
        }
        let digits = format!("{int_digits}{frac}");
        let mut numer: BigInt = if digits.is_empty() {
            BigInt::zero()
        } else {
            digits.parse().map_err(|_| bad())?
        };
        if negative {
            numer = -numer;
        }
        let denom = num_traits::pow(BigInt::from(10u32), frac.len());
        return Ok(Rational::new(numer, denom));
    }
    let p: BigInt = s.parse().map_err(|_| bad())?;
    Ok(Rational::from_integer(p))
}

/// Floor of the square root by Newton's iteration on big integers.
pub fn integer_sqrt_floor(n: &BigUint) -> BigUint {
    if n.is_zero() {
        return BigUint::zero();
    }
    // Initial guess 2^ceil(bits/2) is always >= sqrt(n).
    let mut x = BigUint::one() << (n.bits().div_ceil(2) as usize);
    loop {
        let y = (&x + n / &x) >> 1usize;
        if y >= x {
            return x;
        }
        x = y;
    }
}

/// Returns `r` with `r * r == n`, or `None` when `n` is not a perfect square.
pub fn integer_sqrt_exact(n: &BigUint) -> Option<BigUint> {
    let r = integer_sqrt_floor(n);
    if &r * &r == *n {
        Some(r)
    } else {
        None
    }
}

fn bigint_sqrt_exact(n: &BigInt) -> Option<BigInt> {
    match n.sign() {
        Sign::Minus => None,
        _ => integer_sqrt_exact(n.magnitude()).map(BigInt::from),
    }
}

/// Square root of a rational: exact when both reduced parts are perfect
/// squares.
pub fn rational_sqrt(x: &Rational) -> Root<Rational> {
    if x.is_negative() {
        return Root::Negative;
    }
    match (bigint_sqrt_exact(x.numer()), bigint_sqrt_exact(x.denom())) {
        (Some(p), Some(q)) => Root::Exact(Rational::new(p, q)),
        _ => Root::Irrational,
    }
}

/// Least common multiple of the reduced denominators.
pub fn lcm_denominators<'a>(values: impl IntoIterator<Item = &'a Rational>) -> BigInt {
    values
        .into_iter()
        .fold(BigInt::one(), |acc, v| acc.lcm(v.denom()))
}

/// Golden-section search for a minimum of `f` on `[lo, hi]`.
///
/// Each iteration shrinks the bracket by the inverse golden ratio. For a
/// unimodal `f` the result is the minimum; otherwise it is some local minimum
/// inside the bracket.
pub fn golden_section_min<F>(f: F, lo: f64, hi: f64, iters: usize) -> Result<(f64, f64)>
where
    F: Fn(f64) -> f64,
{
    if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
        return Err(Error::InvalidBracket { lo, hi });
    }
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (lo, hi);
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    for _ in 0..iters {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    let (x, fx) = if fc <= fd { (c, fc) } else { (d, fd) };
    // The midpoint is often better once the bracket has collapsed.
    let m = 0.5 * (a + b);
    let fm = f(m);
    if fm < fx {
        Ok((m, fm))
    } else {
        Ok((x, fx))
    }
}

/// Identifier of the pseudo-random generator, reported in output metadata.
pub const PRNG_NAME: &str = "chacha20 (rand_chacha 0.3, 64-bit seed, stream-split)";

/// Seeded ChaCha20 generator. Independent sub-streams are derived with
/// [`SeededRng::split`], so parallel workers never share state.
#[derive(Debug, Clone)]
pub struct SeededRng {
    seed: u64,
    inner: ChaCha20Rng,
}

impl SeededRng {
    pub fn new(seed: u64) -> Self {
        SeededRng {
            seed,
            inner: ChaCha20Rng::seed_from_u64(seed),
        }
    }

    /// A generator on stream `stream` of the same seed.
    pub fn split(&self, stream: u64) -> Self {
        let mut inner = ChaCha20Rng::seed_from_u64(self.seed);
        inner.set_stream(stream);
        SeededRng {
            seed: self.seed,
            inner,
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }
}

impl RngCore for SeededRng {
    fn next_u32(&mut self) -> u32 {
        self.inner.next_u32()
    }
    fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }
    fn fill_bytes(&mut self, dest: &mut [u8]) {
        self.inner.fill_bytes(dest)
    }
    fn try_fill_bytes(&mut self, dest: &mut [u8]) -> std::result::Result<(), rand::Error> {
        self.inner.try_fill_bytes(dest)
    }
}
