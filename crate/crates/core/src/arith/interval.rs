//! Certified interval arithmetic over dyadic rationals.
//!
//! Endpoints are stored as `m * 2^e` with an arbitrary-precision mantissa. Each
//! inexact operation rounds the lower endpoint down and the upper endpoint up,
//! so an [`Interval`] always encloses the real number it stands for. `exp` and
//! `ln` use Taylor and `atanh` series with explicit tail bounds.

use std::cmp::Ordering;
use std::fmt;

use num_bigint::{BigInt, BigUint, Sign};
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use super::{log2_hint, Ratio};
use crate::error::{Error, Result};

pub const DEFAULT_PRECISION_BITS: u32 = 256;
pub const DEFAULT_PRECISION_CAP: u32 = 4096;

/// Guard bits added on top of the requested precision inside series evaluation.
const GUARD_BITS: u32 = 24;

/// Outcome of a certified comparison.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Holds,
    Violated,
    Inconclusive,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Holds => "holds",
            Verdict::Violated => "violated",
            Verdict::Inconclusive => "inconclusive",
        })
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
enum Round {
    Down,
    Up,
}

/// `m * 2^e`.
#[derive(Clone, Debug)]
struct Dyadic {
    m: BigInt,
    e: i64,
}

fn shift_mag(mag: &BigUint, s: u64, dir_away: bool) -> BigUint {
    let q = mag >> s;
    if dir_away && mag.trailing_zeros().map_or(false, |tz| tz < s) {
        q + 1u32
    } else {
        q
    }
}

impl Dyadic {
    fn zero() -> Self {
        Dyadic { m: BigInt::zero(), e: 0 }
    }

    fn one() -> Self {
        Dyadic { m: BigInt::one(), e: 0 }
    }

    fn is_zero(&self) -> bool {
        self.m.is_zero()
    }

    fn is_negative(&self) -> bool {
        self.m.is_negative()
    }

    fn to_ratio(&self) -> Ratio {
        if self.e >= 0 {
            Ratio::from_integer(&self.m << self.e as usize)
        } else {
            Ratio::new(self.m.clone(), BigInt::one() << (-self.e) as usize)
        }
    }

    /// Rounds `m` to at most `prec` significant bits in direction `dir`.
    fn round(self, prec: u32, dir: Round) -> Self {
        let bits = self.m.bits();
        if bits <= prec as u64 {
            return self;
        }
        let s = bits - prec as u64;
        let neg = self.m.is_negative();
        // rounding down a negative number moves away from zero
        let away = (dir == Round::Up) != neg;
        let mag = shift_mag(self.m.magnitude(), s, away);
        let m = BigInt::from_biguint(if neg { Sign::Minus } else { Sign::Plus }, mag);
        Dyadic { m, e: self.e + s as i64 }
    }

    fn from_ratio(x: &Ratio, prec: u32, dir: Round) -> Self {
        if x.is_zero() {
            return Dyadic::zero();
        }
        if x.denom().is_one() {
            return Dyadic { m: x.numer().clone(), e: 0 }.round(prec, dir);
        }
        let s = prec as i64 + 2 - log2_hint(x);
        let (n, d) = if s >= 0 {
            (x.numer() << s as usize, x.denom().clone())
        } else {
            (x.numer().clone(), x.denom() << (-s) as usize)
        };
        let q = match dir {
            Round::Down => n.div_floor(&d),
            Round::Up => -((-n).div_floor(&d)),
        };
        Dyadic { m: q, e: -s }.round(prec, dir)
    }

    fn add(&self, o: &Dyadic) -> Dyadic {
        if self.is_zero() {
            return o.clone();
        }
        if o.is_zero() {
            return self.clone();
        }
        let e = self.e.min(o.e);
        let a = &self.m << (self.e - e) as usize;
        let b = &o.m << (o.e - e) as usize;
        Dyadic { m: a + b, e }
    }

    fn neg(&self) -> Dyadic {
        Dyadic { m: -&self.m, e: self.e }
    }

    fn mul(&self, o: &Dyadic) -> Dyadic {
        Dyadic { m: &self.m * &o.m, e: self.e + o.e }
    }

    fn abs(&self) -> Dyadic {
        Dyadic { m: self.m.abs(), e: self.e }
    }

    /// `self / n` rounded to `prec` bits.
    fn div_int(&self, n: &BigInt, prec: u32, dir: Round) -> Dyadic {
        if self.is_zero() {
            return Dyadic::zero();
        }
        let k = prec as i64 + n.bits() as i64 + 2 - self.m.bits() as i64;
        let k = k.max(0) as usize;
        let num = &self.m << k;
        let q = match dir {
            Round::Down => num.div_floor(n),
            Round::Up => -((-num).div_floor(n)),
        };
        Dyadic { m: q, e: self.e - k as i64 }.round(prec, dir)
    }

    /// Upper bound on `log2 |self|`; meaningless for zero.
    fn log2_ceil(&self) -> i64 {
        self.m.bits() as i64 + self.e
    }
}

impl PartialEq for Dyadic {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Dyadic {}

impl PartialOrd for Dyadic {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Dyadic {
    fn cmp(&self, o: &Self) -> Ordering {
        let (sa, sb) = (self.m.sign(), o.m.sign());
        if sa != sb || self.is_zero() || o.is_zero() {
            return self.m.sign().cmp(&o.m.sign()).then_with(|| {
                // signs equal only when both are zero here
                Ordering::Equal
            });
        }
        let e = self.e.min(o.e);
        let a = &self.m << (self.e - e) as usize;
        let b = &o.m << (o.e - e) as usize;
        a.cmp(&b)
    }
}

/// A closed interval `[lo, hi]` guaranteed to contain the value it represents.
#[derive(Clone, Debug)]
pub struct Interval {
    lo: Dyadic,
    hi: Dyadic,
    precision_bits: u32,
}

impl PartialEq for Interval {
    fn eq(&self, other: &Self) -> bool {
        self.lo == other.lo && self.hi == other.hi
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {}]", format_sci(&self.lo(), 12, false), format_sci(&self.hi(), 12, true))
    }
}

impl Interval {
    fn from_dyadics(lo: Dyadic, hi: Dyadic, precision_bits: u32) -> Self {
        debug_assert!(lo <= hi, "interval endpoints out of order");
        Interval {
            lo: lo.round(precision_bits, Round::Down),
            hi: hi.round(precision_bits, Round::Up),
            precision_bits,
        }
    }

    /// Smallest `precision_bits`-dyadic interval containing `[lo, hi]`.
    pub fn new(lo: &Ratio, hi: &Ratio, precision_bits: u32) -> Result<Self> {
        if lo > hi {
            return Err(Error::invalid(format!("interval endpoints out of order: {lo} > {hi}")));
        }
        Ok(Interval {
            lo: Dyadic::from_ratio(lo, precision_bits, Round::Down),
            hi: Dyadic::from_ratio(hi, precision_bits, Round::Up),
            precision_bits,
        })
    }

    /// Enclosure of a single rational; exact when `x` is a short dyadic.
    pub fn point(x: &Ratio, precision_bits: u32) -> Self {
        Interval {
            lo: Dyadic::from_ratio(x, precision_bits, Round::Down),
            hi: Dyadic::from_ratio(x, precision_bits, Round::Up),
            precision_bits,
        }
    }

    pub fn zero(precision_bits: u32) -> Self {
        Interval { lo: Dyadic::zero(), hi: Dyadic::zero(), precision_bits }
    }

    pub fn one(precision_bits: u32) -> Self {
        Interval { lo: Dyadic::one(), hi: Dyadic::one(), precision_bits }
    }

    pub fn lo(&self) -> Ratio {
        self.lo.to_ratio()
    }

    pub fn hi(&self) -> Ratio {
        self.hi.to_ratio()
    }

    pub fn precision_bits(&self) -> u32 {
        self.precision_bits
    }

    pub fn width(&self) -> Ratio {
        self.hi() - self.lo()
    }

    pub fn contains(&self, x: &Ratio) -> bool {
        self.lo() <= *x && *x <= self.hi()
    }

    pub fn is_point(&self) -> bool {
        self.lo == self.hi
    }

    pub fn is_positive(&self) -> bool {
        self.lo.m.is_positive()
    }

    /// Same enclosure re-rounded at a different precision.
    pub fn with_precision(&self, precision_bits: u32) -> Self {
        Interval::from_dyadics(self.lo.clone(), self.hi.clone(), precision_bits)
    }

    pub fn intersect(&self, other: &Interval) -> Option<Interval> {
        let lo = if self.lo >= other.lo { &self.lo } else { &other.lo };
        let hi = if self.hi <= other.hi { &self.hi } else { &other.hi };
        (lo <= hi).then(|| Interval {
            lo: lo.clone(),
            hi: hi.clone(),
            precision_bits: self.precision_bits.max(other.precision_bits),
        })
    }

    /// Lower endpoint as `f64`, for display only.
    pub fn lo_f64(&self) -> f64 {
        self.lo().to_f64().unwrap_or(f64::NAN)
    }

    pub fn hi_f64(&self) -> f64 {
        self.hi().to_f64().unwrap_or(f64::NAN)
    }

    fn max_abs(&self) -> Dyadic {
        let (a, b) = (self.lo.abs(), self.hi.abs());
        if a >= b {
            a
        } else {
            b
        }
    }

    fn widen(&self, r: &Dyadic) -> Interval {
        Interval::from_dyadics(self.lo.add(&r.neg()), self.hi.add(r), self.precision_bits)
    }

    pub fn add(&self, o: &Interval) -> Interval {
        let p = self.precision_bits.max(o.precision_bits);
        Interval::from_dyadics(self.lo.add(&o.lo), self.hi.add(&o.hi), p)
    }

    pub fn neg(&self) -> Interval {
        Interval { lo: self.hi.neg(), hi: self.lo.neg(), precision_bits: self.precision_bits }
    }

    pub fn sub(&self, o: &Interval) -> Interval {
        self.add(&o.neg())
    }

    pub fn mul(&self, o: &Interval) -> Interval {
        let p = self.precision_bits.max(o.precision_bits);
        let products = [self.lo.mul(&o.lo), self.lo.mul(&o.hi), self.hi.mul(&o.lo), self.hi.mul(&o.hi)];
        let lo = products.iter().min().expect("nonempty").clone();
        let hi = products.iter().max().expect("nonempty").clone();
        Interval::from_dyadics(lo, hi, p)
    }

    pub fn mul_ratio(&self, x: &Ratio) -> Interval {
        self.mul(&Interval::point(x, self.precision_bits))
    }

    /// Division by a positive integer.
    pub fn div_int(&self, n: u64) -> Interval {
        let n = BigInt::from(n);
        let p = self.precision_bits;
        Interval {
            lo: self.lo.div_int(&n, p, Round::Down),
            hi: self.hi.div_int(&n, p, Round::Up),
            precision_bits: p,
        }
    }

    /// `1 / self`; the interval must not contain zero.
    pub fn recip(&self) -> Result<Interval> {
        if !self.is_positive() && !self.hi.is_negative() {
            return Err(Error::Domain("reciprocal of an interval containing 0".into()));
        }
        let p = self.precision_bits;
        let one = BigInt::one();
        let inv = |d: &Dyadic, dir: Round| -> Dyadic {
            // 1 / (m 2^e) = (1/m) 2^{-e}
            let q = Dyadic::one().div_int(&d.m, p, dir);
            Dyadic { m: q.m, e: q.e - d.e }
        };
        let _ = one;
        if self.is_positive() {
            Ok(Interval { lo: inv(&self.hi, Round::Down), hi: inv(&self.lo, Round::Up), precision_bits: p })
        } else {
            let pos = self.neg().recip()?;
            Ok(pos.neg())
        }
    }

    pub fn div(&self, o: &Interval) -> Result<Interval> {
        Ok(self.mul(&o.recip()?))
    }

    pub fn powi(&self, k: u32) -> Interval {
        if k == 0 {
            return Interval::one(self.precision_bits);
        }
        if k % 2 == 0 && !self.is_positive() && !self.hi.is_negative() && !self.lo.is_zero() {
            // straddles zero: even power ranges over [0, max^k]
            let m = Interval { lo: Dyadic::zero(), hi: self.max_abs(), precision_bits: self.precision_bits };
            return m.powi(k);
        }
        let mut acc = Interval::one(self.precision_bits);
        for _ in 0..k {
            acc = acc.mul(self);
        }
        acc
    }

    pub fn max_with(&self, x: &Ratio) -> Interval {
        let d = Interval::point(x, self.precision_bits);
        let lo = if self.lo >= d.lo { self.lo.clone() } else { d.lo };
        let hi = if self.hi >= d.hi { self.hi.clone() } else { d.hi };
        Interval { lo, hi, precision_bits: self.precision_bits }
    }

    pub fn exp(&self) -> Result<Interval> {
        let p = self.precision_bits;
        let lo = exp_dyadic(&self.lo, p)?;
        let hi = if self.is_point() { lo.clone() } else { exp_dyadic(&self.hi, p)? };
        Ok(Interval { lo: lo.lo, hi: hi.hi, precision_bits: p })
    }

    pub fn ln(&self) -> Result<Interval> {
        if !self.is_positive() {
            return Err(Error::Domain(format!("logarithm of nonpositive interval {self}")));
        }
        let p = self.precision_bits;
        let lo = ln_dyadic(&self.lo, p);
        let hi = if self.is_point() { lo.clone() } else { ln_dyadic(&self.hi, p) };
        Ok(Interval { lo: lo.lo, hi: hi.hi, precision_bits: p })
    }

    /// `Log x = max(1, ln x)`, for intervals with `x >= 1`.
    pub fn log_t(&self) -> Result<Interval> {
        if self.lo < Dyadic::one() {
            return Err(Error::Domain(format!("Log t needs t >= 1, got {self}")));
        }
        Ok(self.ln()?.max_with(&Ratio::one()))
    }

    /// Certified `self <= other`: `Holds` if every point of `self` is at most
    /// every point of `other`, `Violated` if every point is strictly greater.
    pub fn certify_le(&self, other: &Interval) -> Verdict {
        if self.hi <= other.lo {
            Verdict::Holds
        } else if self.lo > other.hi {
            Verdict::Violated
        } else {
            Verdict::Inconclusive
        }
    }

    /// Certified `self < other`.
    pub fn certify_lt(&self, other: &Interval) -> Verdict {
        if self.hi < other.lo {
            Verdict::Holds
        } else if self.lo >= other.hi {
            Verdict::Violated
        } else {
            Verdict::Inconclusive
        }
    }

    /// `(lo, hi)` of `exp(self)` as decimal scientific strings, rounded outward.
    /// Works for values far outside the range of any float.
    pub fn exp_to_sci(&self, digits: usize) -> Result<(String, String)> {
        let p = self.precision_bits.max(64) + 64;
        let ln10 = ln_dyadic(&Dyadic { m: BigInt::from(10), e: 0 }, p);
        let inv = ln10.recip()?;
        let lo = Interval::point(&self.lo(), p).mul(&inv);
        let hi = Interval::point(&self.hi(), p).mul(&inv);
        Ok((sci_from_log10(&lo.lo(), &ln10, digits, false)?, sci_from_log10(&hi.hi(), &ln10, digits, true)?))
    }
}

/// `10^y` formatted as `d.ddd...e±E`, rounded down or up.
fn sci_from_log10(y: &Ratio, ln10: &Interval, digits: usize, up: bool) -> Result<String> {
    let e10 = y.floor();
    let frac = y - &e10;
    let mant = Interval::point(&frac, ln10.precision_bits).mul(ln10).exp()?;
    let m = if up { mant.hi() } else { mant.lo() };
    let mut e10 = e10.to_integer();
    let scale = BigInt::from(10).pow(digits.saturating_sub(1) as u32);
    let scaled = m * Ratio::from_integer(scale.clone());
    let mut int = if up { scaled.ceil() } else { scaled.floor() }.to_integer();
    if int >= &scale * 10 {
        int /= 10;
        e10 += 1;
    }
    if int < scale {
        int = scale.clone();
    }
    let s = int.to_string();
    let (head, tail) = s.split_at(1);
    let sign = if e10.is_negative() { "-" } else { "+" };
    Ok(format!("{head}.{tail}e{sign}{}", e10.abs()))
}

/// Decimal scientific rendering of a rational, rounded down or up.
pub fn format_sci(x: &Ratio, digits: usize, up: bool) -> String {
    if x.is_zero() {
        return "0".into();
    }
    if x.is_negative() {
        return format!("-{}", format_sci(&-x, digits, !up));
    }
    // 10^k <= x < 10^{k+1}
    let est = (log2_hint(x) as f64 * std::f64::consts::LOG10_2).floor() as i64;
    let ten = Ratio::from_integer(BigInt::from(10));
    let mut k = est;
    let pow10 = |k: i64| super::pow_i(&ten, k);
    while pow10(k) > *x {
        k -= 1;
    }
    while pow10(k + 1) <= *x {
        k += 1;
    }
    let mant = x / pow10(k);
    let scale = BigInt::from(10).pow(digits.saturating_sub(1) as u32);
    let scaled = mant * Ratio::from_integer(scale.clone());
    let mut int = if up { scaled.ceil() } else { scaled.floor() }.to_integer();
    if int >= &scale * 10 {
        int /= 10;
        k += 1;
    }
    let s = int.to_string();
    let (head, tail) = s.split_at(1);
    let sign = if k < 0 { "-" } else { "+" };
    format!("{head}.{tail}e{sign}{}", k.abs())
}

/// Largest `log2 |x|` accepted by `exp`; beyond it the result has an
/// exponent too large to store.
const EXP_ARG_LOG2_LIMIT: i64 = 40;

fn exp_dyadic(x: &Dyadic, prec: u32) -> Result<Interval> {
    if x.is_zero() {
        return Ok(Interval::one(prec));
    }
    if x.log2_ceil() > EXP_ARG_LOG2_LIMIT {
        return Err(Error::Domain("exp argument too large; use the logarithmic evaluator".into()));
    }
    // exp(x) = exp(x / 2^s)^(2^s) with |x / 2^s| <= 2^-10
    let s = (x.log2_ceil() + 10).max(0) as u32;
    let work = prec + s + GUARD_BITS;
    let r = Dyadic { m: x.m.clone(), e: x.e - s as i64 };
    let r_iv = Interval { lo: r.clone(), hi: r, precision_bits: work };
    let eps = Dyadic { m: BigInt::one(), e: -(work as i64) - 8 };
    let mut sum = Interval::one(work);
    let mut term = Interval::one(work);
    let mut n = 1u64;
    loop {
        term = term.mul(&r_iv).div_int(n);
        sum = sum.add(&term);
        if term.max_abs() < eps {
            break;
        }
        n += 1;
    }
    // remaining terms sum to at most |term| * |r| / (1 - |r|) < |term|
    sum = sum.widen(&term.max_abs());
    for _ in 0..s {
        sum = sum.mul(&sum);
    }
    Ok(sum.with_precision(prec))
}

/// `sum_{k>=0} z^(2k+1) / (2k+1)` for `|z| <= 1/3`.
fn atanh_series(z: &Interval) -> Interval {
    let work = z.precision_bits;
    let z2 = z.mul(z);
    let eps = Dyadic { m: BigInt::one(), e: -(work as i64) - 8 };
    let mut power = z.clone();
    let mut sum = z.clone();
    let mut k = 1u64;
    loop {
        power = power.mul(&z2);
        sum = sum.add(&power.div_int(2 * k + 1));
        if power.max_abs() < eps {
            break;
        }
        k += 1;
    }
    // tail is at most |power| * z^2 / (1 - z^2) <= |power| / 8
    sum.widen(&power.max_abs())
}

fn ln2(work: u32) -> Interval {
    let third = Interval::point(&Ratio::new(BigInt::one(), BigInt::from(3)), work);
    let a = atanh_series(&third);
    a.add(&a)
}

fn ln_dyadic(x: &Dyadic, prec: u32) -> Interval {
    debug_assert!(x.m.is_positive());
    if x.m.is_one() && x.e == 0 {
        return Interval::zero(prec);
    }
    let work = prec + GUARD_BITS;
    // x = m 2^e = (m / 2^(b-1)) 2^(e+b-1), mantissa in [1, 2)
    let b = x.m.bits() as i64;
    let mut k = x.e + b - 1;
    let mut mant = Dyadic { m: x.m.clone(), e: 1 - b };
    // move the mantissa into [2/3, 4/3]
    let four_thirds = Ratio::new(BigInt::from(4), BigInt::from(3));
    if mant.to_ratio() > four_thirds {
        k += 1;
        mant.e -= 1;
    }
    let mant = mant.round(work, Round::Down);
    let m = mant.to_ratio();
    let one = Ratio::one();
    let z = (&m - &one) / (&m + &one);
    let ln_m = {
        let a = atanh_series(&Interval::point(&z, work));
        a.add(&a)
    };
    let mut out = ln_m;
    if k != 0 {
        let kl = ln2(work).mul(&Interval::point(&Ratio::from_integer(BigInt::from(k)), work));
        out = out.add(&kl);
    }
    out.with_precision(prec)
}

/// A real-valued expression built from rationals, `exp`, `ln`, `Log`, sums,
/// products and powers. Evaluates to a certified [`Interval`].
#[derive(Clone, Debug, PartialEq)]
pub enum RealExpr {
    Const(Ratio),
    Exp(Box<RealExpr>),
    Ln(Box<RealExpr>),
    /// `Log t = max(1, ln t)` for `t >= 1`.
    LogT(Box<RealExpr>),
    Sum(Vec<RealExpr>),
    Product(Vec<RealExpr>),
    Neg(Box<RealExpr>),
    Pow(Box<RealExpr>, Box<RealExpr>),
}

impl RealExpr {
    pub fn constant(x: Ratio) -> Self {
        RealExpr::Const(x)
    }

    pub fn int(n: i64) -> Self {
        RealExpr::Const(Ratio::from_integer(BigInt::from(n)))
    }

    pub fn exp(x: RealExpr) -> Self {
        RealExpr::Exp(Box::new(x))
    }

    pub fn ln(x: RealExpr) -> Self {
        RealExpr::Ln(Box::new(x))
    }

    pub fn log_t(x: RealExpr) -> Self {
        RealExpr::LogT(Box::new(x))
    }

    pub fn pow(base: RealExpr, exponent: RealExpr) -> Self {
        RealExpr::Pow(Box::new(base), Box::new(exponent))
    }

    pub fn neg(x: RealExpr) -> Self {
        RealExpr::Neg(Box::new(x))
    }

    pub fn eval(&self, prec: u32) -> Result<Interval> {
        Ok(match self {
            RealExpr::Const(x) => Interval::point(x, prec),
            RealExpr::Exp(a) => a.eval(prec)?.exp()?,
            RealExpr::Ln(a) => a.eval_ln(prec)?,
            RealExpr::LogT(a) => a.eval(prec)?.log_t()?,
            RealExpr::Sum(items) => {
                let mut acc = Interval::zero(prec);
                for it in items {
                    acc = acc.add(&it.eval(prec)?);
                }
                acc
            }
            RealExpr::Product(items) => {
                let mut acc = Interval::one(prec);
                for it in items {
                    acc = acc.mul(&it.eval(prec)?);
                }
                acc
            }
            RealExpr::Neg(a) => a.eval(prec)?.neg(),
            RealExpr::Pow(b, e) => match e.as_ref() {
                RealExpr::Const(k) if k.is_integer() => {
                    let k = k.to_integer();
                    let base = b.eval(prec)?;
                    let mag = k.abs().to_u32().ok_or_else(|| Error::Domain("exponent too large".into()))?;
                    let v = base.powi(mag);
                    if k.is_negative() {
                        v.recip()?
                    } else {
                        v
                    }
                }
                _ => {
                    let base = b.eval(prec)?;
                    if !base.is_positive() {
                        return Err(Error::Domain(format!(
                            "fractional power of a base that may be nonpositive: {base}"
                        )));
                    }
                    e.eval(prec)?.mul(&b.eval_ln(prec)?).exp()?
                }
            },
        })
    }

    /// Encloses `ln(self)`; fails unless the value is certainly positive.
    pub fn eval_ln(&self, prec: u32) -> Result<Interval> {
        match self {
            RealExpr::Const(x) => {
                if !x.is_positive() {
                    return Err(Error::Domain(format!("logarithm of nonpositive constant {x}")));
                }
                Interval::point(x, prec + GUARD_BITS).ln().map(|i| i.with_precision(prec))
            }
            RealExpr::Exp(a) => a.eval(prec),
            RealExpr::Pow(b, e) => {
                let lb = b.eval_ln(prec)?;
                Ok(e.eval(prec)?.mul(&lb))
            }
            RealExpr::Product(items) => {
                let mut acc = Interval::zero(prec);
                for it in items {
                    acc = acc.add(&it.eval_ln(prec)?);
                }
                Ok(acc)
            }
            other => other.eval(prec)?.ln(),
        }
    }
}

/// Encloses `base * prod_i factor_i ^ exponent_i`.
///
/// Factors raised to non-integer exponents must be certainly positive,
/// otherwise this returns [`Error::Domain`].
pub fn interval_eval(base: &Ratio, factors: &[(RealExpr, RealExpr)], precision_bits: u32) -> Result<Interval> {
    let mut acc = Interval::point(base, precision_bits);
    for (f, e) in factors {
        let v = RealExpr::pow(f.clone(), e.clone()).eval(precision_bits)?;
        acc = acc.mul(&v);
    }
    Ok(acc)
}

/// Encloses `ln(base * prod_i factor_i ^ exponent_i)` for a positive base.
/// Use this when the value itself is too large to write down.
pub fn interval_eval_ln(base: &Ratio, factors: &[(RealExpr, RealExpr)], precision_bits: u32) -> Result<Interval> {
    let mut acc = RealExpr::Const(base.clone()).eval_ln(precision_bits)?;
    for (f, e) in factors {
        acc = acc.add(&RealExpr::pow(f.clone(), e.clone()).eval_ln(precision_bits)?);
    }
    Ok(acc)
}

/// Runs `attempt` at `start`, `2 start`, ... up to `cap` bits until it returns
/// a conclusive verdict. Returns the last verdict and the precision it used.
pub fn escalate(start: u32, cap: u32, mut attempt: impl FnMut(u32) -> Result<Verdict>) -> Result<(Verdict, u32)> {
    let mut prec = start.max(8);
    loop {
        let v = attempt(prec)?;
        if v != Verdict::Inconclusive || prec >= cap {
            return Ok((v, prec));
        }
        prec = (prec * 2).min(cap.max(prec));
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arith::{int, ratio};

    /// Independent high-precision oracle: exact rational partial sums of the
    /// exponential series with a crude but valid tail bound.
    fn exp_oracle(x: &Ratio, terms: u32) -> (Ratio, Ratio) {
        let mut sum = Ratio::zero();
        let mut term = Ratio::one();
        for n in 1..=terms {
            sum += &term;
            term = term * x / int(n as u64);
        }
        let tail = term.abs() * int(2);
        (&sum - &tail, &sum + &tail)
    }

    #[test]
    fn exp_zero_is_exact() {
        let v = interval_eval(&int(1), &[(RealExpr::exp(RealExpr::int(0)), RealExpr::int(1))], 256).unwrap();
        assert_eq!(v.lo(), int(1));
        assert_eq!(v.hi(), int(1));
    }

    #[test]
    fn log_of_one_is_one() {
        let v = interval_eval(&int(1), &[(RealExpr::log_t(RealExpr::int(1)), RealExpr::int(5))], 256).unwrap();
        assert_eq!((v.lo(), v.hi()), (int(1), int(1)));
    }

    #[test]
    fn inverse_e_at_128_bits() {
        let v = interval_eval(&int(1), &[(RealExpr::exp(RealExpr::int(1)), RealExpr::int(-1))], 128).unwrap();
        let (olo, ohi) = exp_oracle(&ratio(-1, 1), 60);
        // oracle bracket is ~1e-80 wide; the enclosure must overlap it and be tight
        assert!(v.lo() <= ohi && olo <= v.hi());
        let tol = Ratio::new(BigInt::one(), BigInt::one() << 100usize);
        assert!(v.width() < tol, "width {}", v.width());
        let approx = ratio(367_879_441, 1_000_000_000);
        assert!((v.lo() - approx).abs() < ratio(1, 1_000_000_000));
    }

    #[test]
    fn exp_encloses_series_oracle() {
        for (n, d) in [(1, 3), (-7, 2), (5, 1), (123, 10), (-1, 1000), (40, 1)] {
            let x = ratio(n, d);
            let v = Interval::point(&x, 200).exp().unwrap();
            let (olo, ohi) = exp_oracle(&x, 200);
            assert!(v.lo() <= ohi && olo <= v.hi(), "exp({x})");
            assert!(v.lo() <= olo || ohi <= v.hi() || v.width() < (&ohi - &olo) * int(4), "exp({x})");
        }
    }

    #[test]
    fn ln_inverts_exp() {
        for (n, d) in [(2, 1), (1, 7), (1_000_003, 1), (99, 100), (3, 2), (1, 1_000_000)] {
            let x = ratio(n, d);
            let l = Interval::point(&x, 256).ln().unwrap();
            let back = l.exp().unwrap();
            assert!(back.contains(&x), "exp(ln({x})) = {back}");
            assert!(back.width() < ratio(1, 1_000_000_000_000));
        }
    }

    #[test]
    fn ln_of_e_power_is_tight() {
        // ln(exp(5/2)) via numeric route
        let e = Interval::point(&ratio(5, 2), 256).exp().unwrap();
        let l = e.ln().unwrap();
        assert!(l.contains(&ratio(5, 2)));
    }

    #[test]
    fn fractional_power_of_nonpositive_base_is_domain_error() {
        let r = interval_eval(&int(1), &[(RealExpr::int(-2), RealExpr::constant(ratio(1, 2)))], 64);
        assert!(matches!(r, Err(Error::Domain(_))));
        let ok = interval_eval(&int(1), &[(RealExpr::int(-2), RealExpr::int(3))], 64).unwrap();
        assert_eq!(ok.lo(), ratio(-8, 1));
    }

    #[test]
    fn log_t_clamps_below_e() {
        let v = RealExpr::log_t(RealExpr::int(2)).eval(64).unwrap();
        assert_eq!((v.lo(), v.hi()), (int(1), int(1)));
        let v = RealExpr::log_t(RealExpr::int(100)).eval(64).unwrap();
        assert!(v.lo() > ratio(46, 10) && v.hi() < ratio(47, 10));
        assert!(RealExpr::log_t(RealExpr::constant(ratio(1, 2))).eval(64).is_err());
    }

    #[test]
    fn recip_and_div() {
        let x = Interval::new(&ratio(1, 3), &ratio(1, 2), 64).unwrap();
        let r = x.recip().unwrap();
        assert!(r.contains(&int(2)) && r.contains(&int(3)));
        assert!(Interval::new(&ratio(-1, 1), &int(1), 64).unwrap().recip().is_err());
        let n = Interval::point(&ratio(-4, 1), 64).recip().unwrap();
        assert!(n.contains(&ratio(-1, 4)));
    }

    #[test]
    fn sci_formatting_brackets_value() {
        assert_eq!(format_sci(&ratio(12345, 1), 3, false), "1.23e+4");
        assert_eq!(format_sci(&ratio(12345, 1), 3, true), "1.24e+4");
        assert_eq!(format_sci(&ratio(1, 1000), 2, false), "1.0e-3");
        // exp(ln 1000) ~ 1000
        let l = Interval::point(&int(1000), 256).ln().unwrap();
        let (lo, hi) = l.exp_to_sci(6).unwrap();
        assert!(lo.starts_with("9.99999e+2") || lo.starts_with("1.00000e+3"), "{lo}");
        assert!(hi.starts_with("1.00001e+3") || hi.starts_with("1.00000e+3"), "{hi}");
    }

    #[test]
    fn escalation_stops_at_cap() {
        let mut seen = vec![];
        let (v, p) = escalate(16, 128, |p| {
            seen.push(p);
            Ok(Verdict::Inconclusive)
        })
        .unwrap();
        assert_eq!(v, Verdict::Inconclusive);
        assert_eq!(p, 128);
        assert_eq!(seen, vec![16, 32, 64, 128]);
    }

    #[test]
    fn near_tie_resolves_after_escalation() {
        // a rational 2^-50 below e is undecided at 16 bits
        let e = RealExpr::exp(RealExpr::int(1));
        let x = e.eval(512).unwrap().lo() - Ratio::new(1.into(), BigInt::from(1u64 << 50));
        let (v, bits) = escalate(16, 4096, |p| Ok(Interval::point(&x, p).certify_lt(&e.eval(p)?))).unwrap();
        assert_eq!(v, Verdict::Holds);
        assert!(bits >= 64, "{bits}");
    }
}
