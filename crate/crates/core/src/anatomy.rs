//! Counting integers with many small prime factors, and the Rankin-type
//! majorants that bound such counts.
//!
//! Everything is parameterized by a rational `γ > 1` standing in for `e^C`, so
//! each step of the chains
//!
//! ```text
//! #{n ≤ x : ω_t(n) ≥ K}               ≤ γ^{-K} Σ_{n≤x} γ^{ω_t(n)}
//! Σ_{mn=M, ω_t(m)≥K} f(n)             ≤ γ^{-K} Σ_{mn=M} γ^{ω_t(m)} f(n)
//!                                     ≤ γ^{-K} M Π_{p≤t, p|M} (1 + (γ-1)/p)
//! ```
//!
//! is an exact rational inequality. Here `ω_t(n) = #{p ≤ t : p | n}`.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::Serialize;

use crate::arith::interval::Interval;
use crate::arith::sieve::sieve;
use crate::arith::{factorize, floor_u64, format_ratio, int, pow_i, primes_upto, Ratio, RealExpr};
use crate::error::{Error, Result};
use crate::model::{MultiplicativeFunction, Natural};
use crate::quality::k_threshold;

/// Largest `x` accepted by the enumeration-based counts.
pub const ENUMERATION_CAP: u64 = 10_000_000;

fn check_common(x: &Ratio, t: &Ratio) -> Result<(u64, u64)> {
    if *x < Ratio::one() || *t < Ratio::one() {
        return Err(Error::invalid(format!("x = {x} and t = {t} must be at least 1")));
    }
    let xf = floor_u64(x);
    if xf > ENUMERATION_CAP.min(crate::arith::sieve_cap()) {
        return Err(Error::ResourceLimit(format!("x = {xf} above enumeration cap {ENUMERATION_CAP}")));
    }
    Ok((xf, floor_u64(t)))
}

/// `h[j] = #{n ≤ x : ω_t(n) = j}`.
pub fn omega_histogram(x: &Ratio, t: &Ratio) -> Result<Vec<u64>> {
    let (xf, tf) = check_common(x, t)?;
    let s = sieve();
    let mut h: Vec<u64> = vec![];
    for n in 1..=xf {
        let j = s.omega_upto(n, tf)? as usize;
        if h.len() <= j {
            h.resize(j + 1, 0);
        }
        h[j] += 1;
    }
    Ok(h)
}

/// `#{n ≤ x : #{p ≤ t : p | n} ≥ K}` by enumeration.
pub fn count_many_small_primes(x: &Ratio, t: &Ratio, k: &Ratio) -> Result<u64> {
    let h = omega_histogram(x, t)?;
    let kmin = k_threshold(k) as usize;
    Ok(h.iter().skip(kmin).sum())
}

/// `Σ_j h[j] γ^j`.
pub fn weighted_histogram(h: &[u64], gamma: &Ratio) -> Ratio {
    let mut acc = Ratio::zero();
    let mut g = Ratio::one();
    for &c in h {
        acc += &g * int(c);
        g *= gamma;
    }
    acc
}

/// `Σ_{n≤x} γ^{#{p ≤ t : p | n}}`, exact.
pub fn rankin_sum(x: &Ratio, t: &Ratio, gamma: &Ratio) -> Result<Ratio> {
    if !gamma.is_positive() {
        return Err(Error::invalid(format!("gamma = {gamma} must be positive")));
    }
    Ok(weighted_histogram(&omega_histogram(x, t)?, gamma))
}

fn divisors_with_omega(m: Natural, t: u64) -> Result<Vec<(Natural, u32)>> {
    let mut out = vec![(1u64, 0u32)];
    for (p, a) in factorize(m)? {
        let mut next = Vec::with_capacity(out.len() * (a as usize + 1));
        for &(d, w) in &out {
            let mut pe = 1u64;
            for e in 0..=a {
                next.push((d * pe, w + (e > 0 && p <= t) as u32));
                pe *= p;
            }
        }
        out = next;
    }
    Ok(out)
}

/// `h[j] = Σ_{mn=M, ω_t(m)=j} f(n)`.
pub fn divisor_profile(m: Natural, t: &Ratio, f: &MultiplicativeFunction) -> Result<Vec<Ratio>> {
    if m == 0 {
        return Err(Error::invalid("M must be positive"));
    }
    if *t < Ratio::one() {
        return Err(Error::invalid(format!("t = {t} must be at least 1")));
    }
    let mut h: Vec<Ratio> = vec![];
    for (d, j) in divisors_with_omega(m, floor_u64(t))? {
        let j = j as usize;
        if h.len() <= j {
            h.resize(j + 1, Ratio::zero());
        }
        h[j] += f.eval(m / d)?;
    }
    Ok(h)
}

/// `Σ_{mn=M, #{p≤t : p|m} ≥ K} f(n)`.
pub fn divisor_anatomy_sum(m: Natural, t: &Ratio, k: &Ratio, f: &MultiplicativeFunction) -> Result<Ratio> {
    let h = divisor_profile(m, t, f)?;
    Ok(h.into_iter().skip(k_threshold(k) as usize).sum())
}

/// `Σ_{mn=M} γ^{ω_t(m)} f(n)` by divisor enumeration.
pub fn divisor_rankin_sum(m: Natural, t: &Ratio, gamma: &Ratio, f: &MultiplicativeFunction) -> Result<Ratio> {
    let h = divisor_profile(m, t, f)?;
    let mut acc = Ratio::zero();
    let mut g = Ratio::one();
    for c in h {
        acc += &g * c;
        g *= gamma;
    }
    Ok(acc)
}

/// `Π_{p^ν ‖ M} [(1⋆f)(p^ν) + (γ-1) 1_{p≤t} (1⋆f)(p^{ν-1})]`, which equals
/// [`divisor_rankin_sum`] by multiplicativity.
pub fn divisor_rankin_product(m: Natural, t: &Ratio, gamma: &Ratio, f: &MultiplicativeFunction) -> Result<Ratio> {
    let mut acc = Ratio::one();
    for (p, a) in factorize(m)? {
        let mut factor = f.convolution_at(p, a)?;
        if int(p) <= *t {
            factor += (gamma - Ratio::one()) * f.convolution_at(p, a - 1)?;
        }
        acc *= factor;
    }
    Ok(acc)
}

/// A majorant that is exact for integer `K` and enclosed otherwise.
#[derive(Clone, Debug)]
pub enum BoundValue {
    Exact(Ratio),
    /// `K` was not an integer, so `γ^{-K}` is irrational in general.
    Certified(Interval),
}

impl BoundValue {
    /// Certified `value ≤ self`.
    pub fn dominates(&self, value: &Ratio) -> bool {
        match self {
            BoundValue::Exact(b) => value <= b,
            BoundValue::Certified(iv) => *value <= iv.lo(),
        }
    }

    pub fn exact(&self) -> Option<&Ratio> {
        match self {
            BoundValue::Exact(b) => Some(b),
            BoundValue::Certified(_) => None,
        }
    }
}

/// `γ^{-K}` exactly for integer `K`, else an enclosure.
fn gamma_pow_neg_k(gamma: &Ratio, k: &Ratio, prec: u32) -> Result<BoundValue> {
    if k.is_integer() {
        let e = k.to_integer().to_i64().ok_or_else(|| Error::invalid("K too large"))?;
        return Ok(BoundValue::Exact(pow_i(gamma, -e)));
    }
    let iv = RealExpr::pow(RealExpr::Const(gamma.clone()), RealExpr::Const(-k.clone())).eval(prec)?;
    Ok(BoundValue::Certified(iv))
}

fn check_gamma(gamma: &Ratio) -> Result<()> {
    if *gamma <= Ratio::one() {
        return Err(Error::invalid(format!("gamma = {gamma} must exceed 1")));
    }
    Ok(())
}

/// `M γ^{-K} Π_{p≤t, p|M} (1 + (γ-1)/p)`.
pub fn divisor_anatomy_bound(m: Natural, t: &Ratio, k: &Ratio, gamma: &Ratio) -> Result<BoundValue> {
    divisor_anatomy_bound_prec(m, t, k, gamma, crate::arith::interval::DEFAULT_PRECISION_BITS)
}

pub fn divisor_anatomy_bound_prec(m: Natural, t: &Ratio, k: &Ratio, gamma: &Ratio, prec: u32) -> Result<BoundValue> {
    check_gamma(gamma)?;
    let mut prod = int(m);
    for (p, _) in factorize(m)? {
        if int(p) <= *t {
            prod *= Ratio::one() + (gamma - Ratio::one()) / int(p);
        }
    }
    Ok(match gamma_pow_neg_k(gamma, k, prec)? {
        BoundValue::Exact(g) => BoundValue::Exact(prod * g),
        BoundValue::Certified(iv) => BoundValue::Certified(iv.mul_ratio(&prod)),
    })
}

/// Product of integers by balanced splitting.
fn product_tree(xs: &[BigInt]) -> BigInt {
    match xs.len() {
        0 => BigInt::one(),
        1 => xs[0].clone(),
        n => product_tree(&xs[..n / 2]) * product_tree(&xs[n / 2..]),
    }
}

/// `Π_{p≤t} (1 + (γ-1)/p)` in lowest terms.
///
/// Each factor is `(bp + a - b) / (bp)` for `γ = a/b`; the result is reduced by
/// accumulating prime exponents rather than by a gcd on the full product,
/// which keeps `t = 10^6` fast.
pub fn mertens_product(t: &Ratio, gamma: &Ratio) -> Result<Ratio> {
    if !gamma.is_positive() {
        return Err(Error::invalid(format!("gamma = {gamma} must be positive")));
    }
    let primes = primes_upto(t)?;
    if gamma.is_one() || primes.is_empty() {
        return Ok(Ratio::one());
    }
    let a = gamma.numer();
    let b = gamma.denom();
    let mut exps: BTreeMap<u64, i64> = BTreeMap::new();
    let mut leftover_num: Vec<BigInt> = vec![];
    let cap = crate::arith::sieve_cap();
    let b_fact: Vec<(u64, u32)> = match b.to_u64() {
        Some(bu) => factorize(bu)?,
        None => return Err(Error::ResourceLimit("gamma denominator too large".into())),
    };
    let np = primes.len() as i64;
    for &(q, e) in &b_fact {
        *exps.entry(q).or_insert(0) -= e as i64 * np;
    }
    for &p in &primes {
        *exps.entry(p).or_insert(0) -= 1;
        let term = b * BigInt::from(p) + a - b;
        if term.is_zero() {
            return Ok(Ratio::zero());
        }
        match term.abs().to_u64() {
            Some(n) if n <= cap.saturating_mul(cap) => {
                for (q, e) in factorize(n)? {
                    *exps.entry(q).or_insert(0) += e as i64;
                }
                if term.is_negative() {
                    leftover_num.push(BigInt::from(-1));
                }
            }
            _ => leftover_num.push(term),
        }
    }
    // terms too large to factor leave common factors that only a gcd removes
    let fully_factored = leftover_num.iter().all(|x| x.abs().is_one());
    let mut num: Vec<BigInt> = leftover_num;
    let mut den: Vec<BigInt> = vec![];
    for (q, e) in exps {
        if e > 0 {
            num.push(BigInt::from(q).pow(e as u32));
        } else if e < 0 {
            den.push(BigInt::from(q).pow((-e) as u32));
        }
    }
    let n = product_tree(&num);
    let d = product_tree(&den);
    if fully_factored {
        Ok(Ratio::new_raw(n, d))
    } else {
        Ok(Ratio::new(n, d))
    }
}

/// Encloses `Π_{p≤t}(1 + (γ-1)/p) / (Log t)^{γ-1}`.
pub fn ratio_to_log_power(t: &Ratio, gamma: &Ratio, prec: u32) -> Result<Interval> {
    let prod = mertens_product(t, gamma)?;
    let ln_prod = Interval::point(&Ratio::from_integer(prod.numer().clone()), prec)
        .ln()?
        .sub(&Interval::point(&Ratio::from_integer(prod.denom().clone()), prec).ln()?);
    let ln_log = RealExpr::log_t(RealExpr::Const(t.clone())).eval_ln(prec)?;
    ln_prod.sub(&ln_log.mul_ratio(&(gamma - Ratio::one()))).exp()
}

/// Exact value and its two majorants for one parameter point.
#[derive(Clone, Debug, Serialize)]
pub struct AnatomyReport {
    pub exact: String,
    pub rankin_bound: String,
    pub mertens_bound: String,
    pub gamma: String,
}

/// `#{n ≤ x : ω_t(n) ≥ K} ≤ γ^{-K'} Σ_{n≤x} γ^{ω_t(n)} ≤ γ^{-K'} x Π_{p≤t}(1 + (γ-1)/p)`
/// with `K' = max(0, ⌈K⌉)`.
pub fn count_report(x: &Ratio, t: &Ratio, k: &Ratio, gamma: &Ratio) -> Result<AnatomyReport> {
    check_gamma(gamma)?;
    let h = omega_histogram(x, t)?;
    let kk = k_threshold(k) as usize;
    let exact: u64 = h.iter().skip(kk).sum();
    let g = pow_i(gamma, -(kk as i64));
    let rankin = &g * weighted_histogram(&h, gamma);
    let mertens = &g * int(floor_u64(x)) * mertens_product(t, gamma)?;
    Ok(AnatomyReport {
        exact: exact.to_string(),
        rankin_bound: format_ratio(&rankin),
        mertens_bound: format_ratio(&mertens),
        gamma: format_ratio(gamma),
    })
}

/// `Σ_{mn=M, ω_t(m)≥K} f(n) ≤ γ^{-K'} Σ_{mn=M} γ^{ω_t(m)} f(n) ≤ γ^{-K'} M Π_{p≤t,p|M}(1 + (γ-1)/p)`
/// with `K' = max(0, ⌈K⌉)`; the last step needs `(1⋆f)(n) ≤ n`.
pub fn divisor_report(m: Natural, t: &Ratio, k: &Ratio, gamma: &Ratio, f: &MultiplicativeFunction) -> Result<AnatomyReport> {
    check_gamma(gamma)?;
    let kk = int(k_threshold(k) as u64);
    let exact = divisor_anatomy_sum(m, t, k, f)?;
    let g = pow_i(gamma, -(floor_u64(&kk) as i64));
    let rankin = &g * divisor_rankin_sum(m, t, gamma, f)?;
    let bound = divisor_anatomy_bound(m, t, &kk, gamma)?;
    Ok(AnatomyReport {
        exact: format_ratio(&exact),
        rankin_bound: format_ratio(&rankin),
        mertens_bound: format_ratio(bound.exact().expect("integer K gives an exact bound")),
        gamma: format_ratio(gamma),
    })
}

/// One row of a parameter sweep.
#[derive(Clone, Debug, Serialize)]
pub struct SweepRow {
    pub kind: &'static str,
    pub n: u64,
    pub t: String,
    pub k: String,
    pub gamma: String,
    pub exact: String,
    pub bound: String,
    pub ratio: f64,
    pub holds: bool,
}

fn ratio_f64(a: &Ratio, b: &Ratio) -> f64 {
    if b.is_zero() {
        return f64::NAN;
    }
    (a / b).to_f64().unwrap_or(f64::NAN)
}

/// Checks `count ≤ γ^{-K} rankin_sum` for every `x ≤ x_max` and grid point.
pub fn sweep_rankin(x_max: u64, ts: &[Ratio], ks: &[i64], gammas: &[Ratio]) -> Result<Vec<SweepRow>> {
    let mut rows = vec![];
    for t in ts {
        let h_full = omega_histogram(&int(x_max), t)?;
        let tf = floor_u64(t);
        let s = sieve();
        let mut h = vec![0u64; h_full.len()];
        for x in 1..=x_max {
            h[s.omega_upto(x, tf)? as usize] += 1;
            for &k in ks {
                let kk = k.max(0) as usize;
                let count: u64 = h.iter().skip(kk).sum();
                for gamma in gammas {
                    let rs = weighted_histogram(&h, gamma);
                    let bound = pow_i(gamma, -(kk as i64)) * &rs;
                    let exact = int(count);
                    rows.push(SweepRow {
                        kind: "rankin",
                        n: x,
                        t: format_ratio(t),
                        k: k.to_string(),
                        gamma: format_ratio(gamma),
                        holds: exact <= bound,
                        ratio: ratio_f64(&exact, &bound),
                        exact: count.to_string(),
                        bound: format_ratio(&bound),
                    });
                }
            }
        }
    }
    Ok(rows)
}

/// Checks `divisor_anatomy_sum ≤ divisor_anatomy_bound` for every `M ≤ m_max`
/// and grid point.
pub fn sweep_divisor(
    m_max: u64,
    ts: &[Ratio],
    ks: &[i64],
    gammas: &[Ratio],
    f: &MultiplicativeFunction,
) -> Result<Vec<SweepRow>> {
    let mut rows = vec![];
    for m in 1..=m_max {
        for t in ts {
            let h = divisor_profile(m, t, f)?;
            for &k in ks {
                let kk = k.max(0) as usize;
                let exact: Ratio = h.iter().skip(kk).sum();
                for gamma in gammas {
                    let bound = divisor_anatomy_bound(m, t, &Ratio::from_integer(BigInt::from(k)), gamma)?;
                    let b = bound.exact().cloned().expect("integer K");
                    rows.push(SweepRow {
                        kind: "divisor",
                        n: m,
                        t: format_ratio(t),
                        k: k.to_string(),
                        gamma: format_ratio(gamma),
                        holds: exact <= b,
                        ratio: ratio_f64(&exact, &b),
                        exact: format_ratio(&exact),
                        bound: format_ratio(&b),
                    });
                }
            }
        }
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arith::ratio;

    #[test]
    fn count_examples() {
        assert_eq!(count_many_small_primes(&int(10), &int(10), &int(2)).unwrap(), 2);
        assert_eq!(count_many_small_primes(&int(30), &int(3), &int(2)).unwrap(), 5);
        assert_eq!(count_many_small_primes(&ratio(21, 2), &int(10), &int(0)).unwrap(), 10);
        assert_eq!(count_many_small_primes(&int(17), &int(10), &ratio(-3, 1)).unwrap(), 17);
        assert!(count_many_small_primes(&int(100_000_000), &int(10), &int(0)).is_err());
    }

    #[test]
    fn rankin_examples() {
        assert_eq!(rankin_sum(&int(4), &int(2), &int(2)).unwrap(), int(6));
        assert_eq!(rankin_sum(&int(50), &int(10), &int(1)).unwrap(), int(50));
        assert_eq!(rankin_sum(&int(50), &int(1), &int(3)).unwrap(), int(50));
    }

    #[test]
    fn divisor_examples() {
        let phi = MultiplicativeFunction::Totient;
        assert_eq!(divisor_anatomy_sum(12, &int(10), &int(1), &phi).unwrap(), int(8));
        assert_eq!(divisor_anatomy_sum(12, &int(10), &int(3), &phi).unwrap(), Ratio::zero());
        let zero = MultiplicativeFunction::zero_on(&[(2, 2), (3, 1)]);
        assert_eq!(divisor_anatomy_sum(12, &int(10), &int(1), &zero).unwrap(), int(1));
        assert_eq!(divisor_anatomy_bound(12, &int(10), &int(1), &int(2)).unwrap().exact(), Some(&int(12)));
        assert_eq!(divisor_anatomy_bound(1, &int(10), &int(3), &int(2)).unwrap().exact(), Some(&ratio(1, 8)));
        assert_eq!(divisor_anatomy_bound(12, &int(1), &int(1), &int(2)).unwrap().exact(), Some(&int(6)));
        match divisor_anatomy_bound(12, &int(10), &ratio(1, 2), &int(2)).unwrap() {
            BoundValue::Certified(iv) => {
                // 24 / sqrt 2 ≈ 16.97
                assert!(iv.lo() > ratio(1697, 100) && iv.hi() < ratio(1698, 100));
            }
            BoundValue::Exact(_) => panic!("non-integer K must be enclosed"),
        }
    }

    #[test]
    fn rankin_product_identity_small() {
        let phi = MultiplicativeFunction::Totient;
        for m in 1..300u64 {
            for t in [int(2), int(5), int(100)] {
                assert_eq!(
                    divisor_rankin_sum(m, &t, &ratio(3, 2), &phi).unwrap(),
                    divisor_rankin_product(m, &t, &ratio(3, 2), &phi).unwrap(),
                    "M = {m}"
                );
            }
        }
    }

    #[test]
    fn mertens_examples() {
        assert_eq!(mertens_product(&int(1), &int(2)).unwrap(), Ratio::one());
        assert_eq!(mertens_product(&int(3), &int(2)).unwrap(), int(2));
        assert_eq!(mertens_product(&int(1000), &int(1)).unwrap(), Ratio::one());
        // reduced form agrees with a naive product
        for t in [10u64, 97, 500] {
            for g in [ratio(3, 2), int(2), ratio(7, 3), int(4)] {
                let naive: Ratio = primes_upto(&int(t))
                    .unwrap()
                    .into_iter()
                    .map(|p| Ratio::one() + (&g - Ratio::one()) / int(p))
                    .product();
                assert_eq!(mertens_product(&int(t), &g).unwrap(), naive);
            }
        }
    }

    #[test]
    fn log_power_ratio_is_moderate() {
        let r = ratio_to_log_power(&int(10_000), &int(2), 128).unwrap();
        assert!(r.lo() > ratio(1, 1) && r.hi() < ratio(12, 10), "{r}");
    }

    #[test]
    fn reports_are_ordered() {
        let r = count_report(&int(1000), &int(10), &int(2), &int(2)).unwrap();
        let e = crate::arith::parse_ratio(&r.exact).unwrap();
        let a = crate::arith::parse_ratio(&r.rankin_bound).unwrap();
        let b = crate::arith::parse_ratio(&r.mertens_bound).unwrap();
        assert!(e <= a && a <= b);
        let r = divisor_report(360, &int(10), &int(2), &int(3), &MultiplicativeFunction::Totient).unwrap();
        let e = crate::arith::parse_ratio(&r.exact).unwrap();
        let a = crate::arith::parse_ratio(&r.rankin_bound).unwrap();
        let b = crate::arith::parse_ratio(&r.mertens_bound).unwrap();
        assert!(e <= a && a <= b);
    }
}
