//! Numeric policies and the value types every bound in the crate is expressed in.
//!
//! Two arithmetic backends implement [`Scalar`]:
//!
//! * `f64` for [`Policy::Fast`]: ordinary round-to-nearest arithmetic.
//! * [`Interval`] for [`Policy::Certified`]: every operation rounds its lower
//!   endpoint toward -inf and its upper endpoint toward +inf, so the upper
//!   endpoint of a computed expression is never below the exact real value.
//!
//! The directed rounding is obtained by stepping one ulp outward from the
//! round-to-nearest result, which is valid because IEEE-754 add/sub/mul/div
//! and sqrt are correctly rounded (error at most half an ulp).

use alloc::string::String;
use core::fmt;
use core::ops::{Add, Div, Mul, Sub};

use num_bigint::BigUint;

/// Rounding policy attached to every computed bound.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Policy {
    /// Outward rounding; values are rigorous upper bounds.
    Certified,
    /// Round-to-nearest; reproduces the reference table digits.
    Fast,
}

impl Policy {
    pub fn as_str(self) -> &'static str {
        match self {
            Policy::Certified => "certified",
            Policy::Fast => "fast",
        }
    }
}

impl fmt::Display for Policy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl core::str::FromStr for Policy {
    type Err = crate::Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "certified" => Ok(Policy::Certified),
            "fast" => Ok(Policy::Fast),
            _ => Err(crate::Error::UnknownPolicy),
        }
    }
}

/// π to 40 significant digits. The f64 brackets are derived from this string
/// by exact rational comparison, see [`pi_bracket`].
pub const PI_DECIMAL: &str = "3.141592653589793238462643383279502884197";

/// Bracket of π used by certified arithmetic; equal to [`pi_bracket`] (checked in tests).
const PI_LO: f64 = core::f64::consts::PI;
const PI_HI: f64 = f64::from_bits(core::f64::consts::PI.to_bits() + 1);

/// An upper bound on some nonnegative quantity, possibly `+inf`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct UpperBound {
    value: f64,
    policy: Policy,
}

impl UpperBound {
    pub fn new(value: f64, policy: Policy) -> Self {
        debug_assert!(!value.is_nan(), "bound must not be NaN");
        UpperBound { value, policy }
    }

    pub fn infinite(policy: Policy) -> Self {
        UpperBound { value: f64::INFINITY, policy }
    }

    pub fn value(self) -> f64 {
        self.value
    }

    pub fn policy(self) -> Policy {
        self.policy
    }

    pub fn is_finite(self) -> bool {
        self.value.is_finite()
    }

    /// Seven significant digits, rounded up; `"inf"` for +inf. Certified
    /// bounds round their exact value, fast ones their shortest decimal.
    pub fn display7(self) -> String {
        match self.policy {
            Policy::Certified => sci_ceil(self.value, 7),
            Policy::Fast => sci_ceil_shortest(self.value, 7),
        }
    }
}

impl fmt::Display for UpperBound {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.display7())
    }
}

/// Arithmetic backend shared by the whole bound chain.
pub trait Scalar:
    Copy + fmt::Debug + Add<Output = Self> + Sub<Output = Self> + Mul<Output = Self> + Div<Output = Self>
{
    const POLICY: Policy;

    /// A value known exactly as an f64.
    fn exact(x: f64) -> Self;
    fn pi() -> Self;
    fn sqrt(self) -> Self;
    /// Largest value the represented quantity can take.
    fn upper(self) -> f64;
    /// Smallest value the represented quantity can take.
    fn lower(self) -> f64;
    fn max(self, other: Self) -> Self;
    /// A quantity known to lie in `[lo, hi]` whose nearest f64 is `nearest`.
    fn enclose(lo: f64, nearest: f64, hi: f64) -> Self;

    fn powu(self, mut n: u32) -> Self {
        let mut acc = Self::exact(1.0);
        let mut base = self;
        while n > 0 {
            if n & 1 == 1 {
                acc = acc * base;
            }
            n >>= 1;
            if n > 0 {
                base = base * base;
            }
        }
        acc
    }

    /// `self^(k/2)` for a nonnegative base.
    fn half_pow(self, k: u32) -> Self {
        let whole = self.powu(k / 2);
        if k % 2 == 1 {
            whole * self.sqrt()
        } else {
            whole
        }
    }

    fn to_bound(self) -> UpperBound {
        UpperBound::new(self.upper(), Self::POLICY)
    }
}

impl Scalar for f64 {
    const POLICY: Policy = Policy::Fast;

    fn exact(x: f64) -> Self {
        x
    }
    fn pi() -> Self {
        core::f64::consts::PI
    }
    fn sqrt(self) -> Self {
        libm::sqrt(self)
    }
    fn upper(self) -> f64 {
        self
    }
    fn lower(self) -> f64 {
        self
    }
    fn max(self, other: Self) -> Self {
        if other > self {
            other
        } else {
            self
        }
    }
    fn enclose(_lo: f64, nearest: f64, _hi: f64) -> Self {
        nearest
    }
}

/// Closed interval `[lo, hi]` with outward-rounded arithmetic.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

fn down(x: f64) -> f64 {
    if x.is_finite() {
        x.next_down()
    } else {
        x
    }
}

fn up(x: f64) -> f64 {
    if x.is_finite() {
        x.next_up()
    } else {
        x
    }
}

// Below this magnitude an FMA residual may itself be rounded.
const EXACT_RESIDUAL_FLOOR: f64 = 1.0e-290;

/// Bracket of the exact value whose nearest rounding is `r`, given the sign
/// of `exact - r`.
fn bracket(r: f64, sign: f64) -> (f64, f64) {
    if sign > 0.0 {
        (r, up(r))
    } else if sign < 0.0 {
        (down(r), r)
    } else {
        (r, r)
    }
}

fn widen(r: f64) -> (f64, f64) {
    if r.is_finite() {
        (down(r), up(r))
    } else if r == f64::INFINITY {
        (f64::MAX, r)
    } else {
        (r, f64::MIN)
    }
}

fn add_bracket(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    if !s.is_finite() || !a.is_finite() || !b.is_finite() {
        return if a.is_finite() && b.is_finite() { widen(s) } else { (s, s) };
    }
    // TwoSum: err = (a + b) - s exactly.
    let bb = s - a;
    let err = (a - (s - bb)) + (b - bb);
    bracket(s, err)
}

fn mul_bracket(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    if !a.is_finite() || !b.is_finite() {
        return (p, p);
    }
    if !p.is_finite() || (p != 0.0 && p.abs() < EXACT_RESIDUAL_FLOOR) || (p == 0.0 && a != 0.0 && b != 0.0) {
        return widen(p);
    }
    bracket(p, libm::fma(a, b, -p))
}

fn div_bracket(a: f64, b: f64) -> (f64, f64) {
    let q = a / b;
    if !a.is_finite() || !b.is_finite() {
        return (q, q);
    }
    if !q.is_finite() || (q != 0.0 && q.abs() < EXACT_RESIDUAL_FLOOR) || (q == 0.0 && a != 0.0) {
        return widen(q);
    }
    // a - q b is exact; a/b - q = (a - q b) / b.
    let r = libm::fma(-q, b, a);
    bracket(q, r * b.signum())
}

fn sqrt_bracket(x: f64) -> (f64, f64) {
    let r = libm::sqrt(x);
    if !r.is_finite() || x < EXACT_RESIDUAL_FLOOR {
        let (lo, hi) = widen(r);
        return (lo.max(0.0), hi);
    }
    bracket(r, libm::fma(-r, r, x))
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Self {
        debug_assert!(lo <= hi, "inverted interval [{lo}, {hi}]");
        Interval { lo, hi }
    }

    pub fn point(x: f64) -> Self {
        Interval { lo: x, hi: x }
    }

    pub fn contains(self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }

    fn hull(corners: [(f64, f64); 4]) -> Interval {
        let lo = corners.iter().map(|c| c.0).fold(f64::INFINITY, f64::min);
        let hi = corners.iter().map(|c| c.1).fold(f64::NEG_INFINITY, f64::max);
        Interval::new(lo, hi)
    }
}

impl Add for Interval {
    type Output = Interval;
    fn add(self, rhs: Interval) -> Interval {
        Interval::new(add_bracket(self.lo, rhs.lo).0, add_bracket(self.hi, rhs.hi).1)
    }
}

impl Sub for Interval {
    type Output = Interval;
    fn sub(self, rhs: Interval) -> Interval {
        Interval::new(add_bracket(self.lo, -rhs.hi).0, add_bracket(self.hi, -rhs.lo).1)
    }
}

impl Mul for Interval {
    type Output = Interval;
    fn mul(self, rhs: Interval) -> Interval {
        if self.lo >= 0.0 && rhs.lo >= 0.0 {
            return Interval::new(mul_bracket(self.lo, rhs.lo).0, mul_bracket(self.hi, rhs.hi).1);
        }
        Interval::hull([
            mul_bracket(self.lo, rhs.lo),
            mul_bracket(self.lo, rhs.hi),
            mul_bracket(self.hi, rhs.lo),
            mul_bracket(self.hi, rhs.hi),
        ])
    }
}

impl Div for Interval {
    type Output = Interval;
    fn div(self, rhs: Interval) -> Interval {
        if rhs.lo <= 0.0 && rhs.hi >= 0.0 {
            return Interval::new(f64::NEG_INFINITY, f64::INFINITY);
        }
        Interval::hull([
            div_bracket(self.lo, rhs.lo),
            div_bracket(self.lo, rhs.hi),
            div_bracket(self.hi, rhs.lo),
            div_bracket(self.hi, rhs.hi),
        ])
    }
}

impl Scalar for Interval {
    const POLICY: Policy = Policy::Certified;

    fn exact(x: f64) -> Self {
        Interval::point(x)
    }
    fn pi() -> Self {
        Interval::new(PI_LO, PI_HI)
    }
    fn sqrt(self) -> Self {
        Interval::new(sqrt_bracket(self.lo.max(0.0)).0, sqrt_bracket(self.hi.max(0.0)).1)
    }
    fn upper(self) -> f64 {
        self.hi
    }
    fn lower(self) -> f64 {
        self.lo
    }
    fn max(self, other: Self) -> Self {
        Interval::new(self.lo.max(other.lo), self.hi.max(other.hi))
    }
    fn enclose(lo: f64, _nearest: f64, hi: f64) -> Self {
        Interval::new(lo, hi)
    }
}

/// Direction used when converting an exact rational to f64.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Rounding {
    Down,
    Up,
    Nearest,
}

/// Rounds the positive rational `num/den` to an f64 in the requested
/// direction. The result must lie in the normal f64 range.
pub fn round_ratio(num: &BigUint, den: &BigUint, mode: Rounding) -> f64 {
    assert!(den.bits() > 0, "zero denominator");
    if num.bits() == 0 {
        return 0.0;
    }
    // Pick a scale s such that q = floor(num * 2^s / den) has exactly 53 bits.
    let mut shift: i64 = 53 + den.bits() as i64 - num.bits() as i64;
    loop {
        let (n, d) = if shift >= 0 {
            (num << shift as u64, den.clone())
        } else {
            (num.clone(), den << (-shift) as u64)
        };
        let q = &n / &d;
        let bits = q.bits();
        if bits > 53 {
            shift -= 1;
            continue;
        }
        if bits < 53 {
            shift += 1;
            continue;
        }
        let r = &n - &q * &d;
        let mut mant = q.iter_u64_digits().next().unwrap_or(0);
        let inexact = r.bits() > 0;
        match mode {
            Rounding::Down => {}
            Rounding::Up => {
                if inexact {
                    mant += 1;
                }
            }
            Rounding::Nearest => {
                let twice = &r << 1u32;
                if twice > d || (twice == d && mant & 1 == 1) {
                    mant += 1;
                }
            }
        }
        let exp = -shift;
        assert!(
            (-1000..=960).contains(&exp),
            "ratio outside the normal f64 range"
        );
        // mant <= 2^53 is exact as f64; scaling by a power of two is exact.
        return libm::ldexp(mant as f64, exp as i32);
    }
}

/// Parses a plain decimal literal (`digits[.digits]`) into an exact rational.
pub fn decimal_ratio(s: &str) -> (BigUint, BigUint) {
    let (int_part, frac_part) = match s.split_once('.') {
        Some((a, b)) => (a, b),
        None => (s, ""),
    };
    let mut num = BigUint::from(0u32);
    for c in int_part.chars().chain(frac_part.chars()) {
        let digit = c.to_digit(10).expect("decimal literal must contain only digits");
        num = num * 10u32 + digit;
    }
    let den = BigUint::from(10u32).pow(frac_part.len() as u32);
    (num, den)
}

/// f64 values immediately below and above π.
pub fn pi_bracket() -> (f64, f64) {
    let (num, den) = decimal_ratio(PI_DECIMAL);
    let lo = round_ratio(&num, &den, Rounding::Down);
    // The literal is truncated: π lies in [literal, literal + one unit in the last digit].
    let hi = round_ratio(&(num + 1u32), &den, Rounding::Up);
    (lo, hi)
}

/// Scientific notation with `sig` significant digits, rounded toward +inf,
/// exponent with sign and at least two digits (`2.143604e-03`).
pub fn sci_ceil(x: f64, sig: usize) -> String {
    // The exact decimal expansion of any f64 has at most 767 significant digits.
    sci_round_up(x, sig, |v| alloc::format!("{:.780e}", v))
}

/// Like [`sci_ceil`], but rounds the shortest decimal that reads back as `x`
/// rather than its exact binary value, so `1e-5` prints as `1.000000e-05`.
/// The result can undershoot `x` by less than half an ulp.
pub fn sci_ceil_shortest(x: f64, sig: usize) -> String {
    sci_round_up(x, sig, |v| alloc::format!("{:e}", v))
}

fn sci_round_up(x: f64, sig: usize, expand: impl Fn(f64) -> String) -> String {
    use alloc::format;

    assert!(sig >= 1);
    if x.is_nan() {
        return String::from("nan");
    }
    if x == f64::INFINITY {
        return String::from("inf");
    }
    if x == 0.0 {
        return format!("{:.*}e+00", sig - 1, 0.0);
    }
    if x < 0.0 {
        // Rounding -|x| toward +inf truncates its magnitude.
        let (digits, exp) = decimal_digits(&expand(-x), sig);
        return format!("-{}", render_sci(&digits[..sig], exp));
    }
    let (digits, mut exp) = decimal_digits(&expand(x), sig);
    let mut kept = digits[..sig].to_vec();
    if digits[sig..].iter().any(|&d| d != 0) {
        let mut i = sig;
        loop {
            if i == 0 {
                kept.insert(0, 1);
                kept.pop();
                exp += 1;
                break;
            }
            i -= 1;
            if kept[i] == 9 {
                kept[i] = 0;
            } else {
                kept[i] += 1;
                break;
            }
        }
    }
    render_sci(&kept, exp)
}

/// Mantissa digits (zero-padded to at least `sig`) and exponent of `d.ddde±x`.
fn decimal_digits(s: &str, sig: usize) -> (alloc::vec::Vec<u8>, i32) {
    let (mantissa, exp) = s.split_once('e').expect("exponent");
    let exp: i32 = exp.parse().expect("exponent digits");
    let mut digits: alloc::vec::Vec<u8> = mantissa.bytes().filter(|b| b.is_ascii_digit()).map(|b| b - b'0').collect();
    if digits.len() < sig {
        digits.resize(sig, 0);
    }
    (digits, exp)
}

fn render_sci(digits: &[u8], exp: i32) -> String {
    use core::fmt::Write;
    let mut out = String::new();
    out.push((b'0' + digits[0]) as char);
    if digits.len() > 1 {
        out.push('.');
        for &d in &digits[1..] {
            out.push((b'0' + d) as char);
        }
    }
    let sign = if exp < 0 { '-' } else { '+' };
    let _ = write!(out, "e{}{:02}", sign, exp.unsigned_abs());
    out
}
