//! Brute-force oracles shared by the integration tests. Nothing here calls
//! into the library's arithmetic; factorizations use trial division and all
//! measures are summed straight from their definitions.

#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};

pub type Q = BigRational;

pub fn q(a: i64, b: i64) -> Q {
    Q::new(a.into(), b.into())
}

pub fn qi(n: u64) -> Q {
    Q::from_integer(BigInt::from(n))
}

pub fn trial_factor(mut n: u64) -> Vec<(u64, u32)> {
    let mut out = vec![];
    let mut p = 2;
    while p * p <= n {
        if n % p == 0 {
            let mut a = 0;
            while n % p == 0 {
                n /= p;
                a += 1;
            }
            out.push((p, a));
        }
        p += 1;
    }
    if n > 1 {
        out.push((n, 1));
    }
    out
}

pub fn val(p: u64, mut n: u64) -> u32 {
    let mut a = 0;
    while n % p == 0 {
        n /= p;
        a += 1;
    }
    a
}

pub fn is_prime(n: u64) -> bool {
    n >= 2 && trial_factor(n) == vec![(n, 1)]
}

pub fn phi(n: u64) -> u64 {
    trial_factor(n).iter().fold(n, |acc, &(p, _)| acc / p * (p - 1))
}

pub fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// `#{p ≤ t : ν_p(v) ≠ ν_p(w)}`, scanning every integer up to `t`.
pub fn omega_squared(v: u64, w: u64, t: u64) -> u32 {
    (2..=t).filter(|&p| is_prime(p) && val(p, v) != val(p, w)).count() as u32
}

/// `#{p ≤ t : p | n}`.
pub fn omega_small(n: u64, t: u64) -> u32 {
    trial_factor(n).iter().filter(|&&(p, _)| p <= t).count() as u32
}

/// Smallest nonnegative integer at least `k`.
pub fn k_min(k: &Q) -> u32 {
    let c = k.ceil().to_integer();
    if c <= BigInt::zero() {
        0
    } else {
        u32::try_from(c).unwrap()
    }
}

/// `ψ(v) φ(v) / v`.
pub fn mu_point(w: &BTreeMap<u64, Q>, v: u64) -> Q {
    w.get(&v).cloned().unwrap_or_else(Q::zero) * qi(phi(v)) / qi(v)
}

pub fn mu_set<'a>(w: &BTreeMap<u64, Q>, s: impl IntoIterator<Item = &'a u64>) -> Q {
    s.into_iter().map(|&v| mu_point(w, v)).sum()
}

pub fn mu_edges(psi: &BTreeMap<u64, Q>, theta: &BTreeMap<u64, Q>, e: &BTreeSet<(u64, u64)>) -> Q {
    e.iter().map(|&(v, w)| mu_point(psi, v) * mu_point(theta, w)).sum()
}

pub fn weights_of(w: &qds::model::WeightFunction) -> BTreeMap<u64, Q> {
    w.iter().map(|(n, x)| (n, x.clone())).collect()
}

/// `{(v, w) : max(wψ(v), vθ(w)) ≤ gcd(v, w), ω_t(v, w) ≥ K}` by a plain
/// double loop.
pub fn edge_oracle(psi: &BTreeMap<u64, Q>, theta: &BTreeMap<u64, Q>, t: u64, k: &Q) -> BTreeSet<(u64, u64)> {
    let kk = k_min(k);
    let primes: Vec<u64> = (2..=t).filter(|&p| is_prime(p)).collect();
    let mut out = BTreeSet::new();
    for (&v, pv) in psi {
        for (&w, tw) in theta {
            let g = qi(gcd(v, w));
            let d = (qi(w) * pv).max(qi(v) * tw);
            if d <= g && primes.iter().filter(|&&p| val(p, v) != val(p, w)).count() as u32 >= kk {
                out.insert((v, w));
            }
        }
    }
    out
}

pub fn neighbors_v(e: &BTreeSet<(u64, u64)>, v: u64) -> BTreeSet<u64> {
    e.iter().filter(|p| p.0 == v).map(|p| p.1).collect()
}

pub fn neighbors_w(e: &BTreeSet<(u64, u64)>, w: u64) -> BTreeSet<u64> {
    e.iter().filter(|p| p.1 == w).map(|p| p.0).collect()
}

/// Vertices with `μ(Γ(x)) μ(side) < (1/q') μ(𝓔)`.
pub fn property2_failures(
    psi: &BTreeMap<u64, Q>,
    theta: &BTreeMap<u64, Q>,
    e: &BTreeSet<(u64, u64)>,
    inv_q_prime: &Q,
) -> Vec<u64> {
    let vs: BTreeSet<u64> = e.iter().map(|p| p.0).collect();
    let ws: BTreeSet<u64> = e.iter().map(|p| p.1).collect();
    let total = mu_edges(psi, theta, e);
    let (mv, mw) = (mu_set(psi, &vs), mu_set(theta, &ws));
    let mut bad = vec![];
    for &v in &vs {
        if mu_set(theta, &neighbors_v(e, v)) * &mv < inv_q_prime * &total {
            bad.push(v);
        }
    }
    for &w in &ws {
        if mu_set(psi, &neighbors_w(e, w)) * &mw < inv_q_prime * &total {
            bad.push(w);
        }
    }
    bad
}

/// `(v⁻, v⁺)` from signed valuations of `v / N`; `None` if some `|ν| ≥ 2`.
pub fn split(v: u64, n: u64) -> Option<(u64, u64)> {
    let mut primes: BTreeSet<u64> = trial_factor(v).into_iter().map(|x| x.0).collect();
    primes.extend(trial_factor(n).into_iter().map(|x| x.0));
    let (mut minus, mut plus) = (1, 1);
    for p in primes {
        match val(p, v) as i64 - val(p, n) as i64 {
            0 => {}
            1 => plus *= p,
            -1 => minus *= p,
            _ => return None,
        }
    }
    Some((minus, plus))
}

/// `S₁..S₄` and `T` written out from their definitions.
pub fn s_sums_oracle(
    f: impl Fn(u64) -> Q,
    g: impl Fn(u64) -> Q,
    e: &BTreeSet<(u64, u64)>,
    n: u64,
    t: u64,
    k: &Q,
) -> Option<([Q; 4], Q)> {
    let ws: BTreeSet<u64> = e.iter().map(|p| p.1).collect();
    let parts = |x: u64| split(x, n).unwrap();
    let cond = |x: u64| qi(4 * omega_small(x, t) as u64) >= *k;
    let mut w0 = None;
    for &w in &ws {
        if w0.is_none_or(|b| parts(w).1 > parts(b).1) {
            w0 = Some(w);
        }
    }
    let w0 = w0?;
    let mut s: [Q; 4] = std::array::from_fn(|_| Q::zero());
    let mut total = Q::zero();
    for &w in &ws {
        let gamma = neighbors_w(e, w);
        let mut v0 = *gamma.iter().next().unwrap();
        for &v in &gamma {
            if parts(v).1 > parts(v0).1 {
                v0 = v;
            }
        }
        let (wm, wp) = parts(w);
        let outer = g(w) / qi(w * wm) / qi(parts(v0).1);
        for &v in &gamma {
            let (vm, vp) = parts(v);
            let term = &outer * f(v) / qi(v) / qi(vm);
            if cond(vm) {
                s[0] += &term;
            }
            if cond(vp) {
                s[1] += &term;
            }
            if cond(wm) {
                s[2] += &term;
            }
            if cond(wp) {
                s[3] += &term;
            }
            total += term;
        }
    }
    let scale = qi(parts(w0).1);
    for x in s.iter_mut() {
        *x /= &scale;
    }
    Some((s, total / scale))
}

/// `γ^{-K} Σ_{d | M} γ^{ω_t(d)} φ(M/d)` and `Σ_{d | M, ω_t(d) ≥ K} φ(M/d)`.
pub fn divisor_oracle(m: u64, t: u64, k: u32, gamma: &Q) -> (Q, Q) {
    let (mut exact, mut rankin) = (Q::zero(), Q::zero());
    for d in (1..=m).filter(|d| m % d == 0) {
        let om = omega_small(d, t);
        let f = qi(phi(m / d));
        if om >= k {
            exact += &f;
        }
        rankin += pow(gamma, om as i32) * f;
    }
    (exact, rankin * pow(gamma, -(k as i32)))
}

pub fn pow(x: &Q, e: i32) -> Q {
    let mut out = Q::one();
    for _ in 0..e.unsigned_abs() {
        out *= x;
    }
    if e < 0 {
        out.recip()
    } else {
        out
    }
}
