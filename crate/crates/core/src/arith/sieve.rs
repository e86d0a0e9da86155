//! Smallest-prime-factor sieve, built once per process.
//!
//! Integers up to the sieve cap factor by table lookup; larger integers up to
//! `cap^2` fall back to trial division by the sieved primes. Anything bigger is
//! rejected with [`Error::ResourceLimit`].

use std::sync::OnceLock;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{Signed, Zero};

use super::{floor_u64, Ratio};
use crate::error::{Error, Result};

pub const DEFAULT_SIEVE_CAP: u64 = 10_000_000;

/// Environment variable overriding [`DEFAULT_SIEVE_CAP`].
pub const SIEVE_CAP_ENV: &str = "QDS_SIEVE_CAP";

pub(crate) struct Sieve {
    cap: u64,
    spf: Vec<u32>,
    primes: Vec<u64>,
}

static SIEVE: OnceLock<Sieve> = OnceLock::new();

pub(crate) fn sieve() -> &'static Sieve {
    SIEVE.get_or_init(|| {
        let cap = std::env::var(SIEVE_CAP_ENV)
            .ok()
            .and_then(|s| s.trim().parse::<u64>().ok())
            .filter(|&c| (100..=u32::MAX as u64).contains(&c))
            .unwrap_or(DEFAULT_SIEVE_CAP);
        Sieve::build(cap)
    })
}

/// Largest integer whose factorization is a table lookup.
pub fn sieve_cap() -> u64 {
    sieve().cap
}

impl Sieve {
    fn build(cap: u64) -> Self {
        let n = cap as usize;
        let mut spf = vec![0u32; n + 1];
        let mut primes = Vec::new();
        // linear sieve: every composite is struck exactly once by its smallest prime
        for i in 2..=n {
            if spf[i] == 0 {
                spf[i] = i as u32;
                primes.push(i as u64);
            }
            let si = spf[i] as u64;
            for &p in &primes {
                let m = p as usize * i;
                if p > si || m > n {
                    break;
                }
                spf[m] = p as u32;
            }
        }
        Sieve { cap, spf, primes }
    }

    pub(crate) fn primes_upto(&self, n: u64) -> &[u64] {
        let end = self.primes.partition_point(|&p| p <= n);
        &self.primes[..end]
    }

    /// Calls `visit(p, e)` for each prime power exactly dividing `n`, in
    /// increasing order of `p`.
    pub(crate) fn for_each_factor(&self, mut n: u64, mut visit: impl FnMut(u64, u32)) -> Result<()> {
        if n == 0 {
            return Err(Error::invalid("cannot factor 0"));
        }
        if n > self.cap {
            for &p in &self.primes {
                if p * p > n {
                    break;
                }
                if n % p == 0 {
                    let mut e = 0;
                    while n % p == 0 {
                        n /= p;
                        e += 1;
                    }
                    visit(p, e);
                    if n <= self.cap {
                        break;
                    }
                }
            }
            if n > self.cap {
                let last = *self.primes.last().expect("sieve has primes");
                if last.saturating_mul(last) < n {
                    return Err(Error::ResourceLimit(format!(
                        "cofactor {n} exceeds the factorization limit {}^2",
                        self.cap
                    )));
                }
                visit(n, 1);
                return Ok(());
            }
        }
        while n > 1 {
            let p = self.spf[n as usize] as u64;
            let mut e = 0;
            while n % p == 0 {
                n /= p;
                e += 1;
            }
            visit(p, e);
        }
        Ok(())
    }

    pub(crate) fn is_prime(&self, n: u64) -> bool {
        if n < 2 {
            return false;
        }
        if n <= self.cap {
            return self.spf[n as usize] as u64 == n;
        }
        let mut prime = true;
        let ok = self.for_each_factor(n, |p, e| prime &= p == n && e == 1);
        ok.is_ok() && prime
    }

    /// Number of distinct primes `p <= t` dividing `n`.
    pub(crate) fn omega_upto(&self, n: u64, t: u64) -> Result<u32> {
        let mut count = 0;
        self.for_each_factor(n, |p, _| count += (p <= t) as u32)?;
        Ok(count)
    }
}

/// All primes in `[2, floor(t)]`, ascending.
pub fn primes_upto(t: &Ratio) -> Result<Vec<u64>> {
    if *t < Ratio::from_integer(1.into()) {
        return Err(Error::invalid(format!("prime bound t = {t} must be at least 1")));
    }
    let n = floor_u64(t);
    let s = sieve();
    if n > s.cap {
        return Err(Error::ResourceLimit(format!("prime bound {n} above sieve cap {}", s.cap)));
    }
    Ok(s.primes_upto(n).to_vec())
}

/// Canonical factorization: primes strictly increasing, exponents at least 1.
/// `factorize(1)` is empty.
pub fn factorize(n: u64) -> Result<Vec<(u64, u32)>> {
    let mut out = Vec::new();
    sieve().for_each_factor(n, |p, e| out.push((p, e)))?;
    Ok(out)
}

pub fn is_prime(n: u64) -> bool {
    sieve().is_prime(n)
}

pub fn valuation_u64(p: u64, mut n: u64) -> u32 {
    debug_assert!(p >= 2 && n > 0);
    let mut e = 0;
    while n % p == 0 {
        n /= p;
        e += 1;
    }
    e
}

fn valuation_big(p: &BigInt, n: &BigInt) -> i64 {
    let mut n = n.abs();
    let mut e = 0;
    loop {
        let (q, r) = n.div_rem(p);
        if !r.is_zero() {
            return e;
        }
        n = q;
        e += 1;
    }
}

/// p-adic valuation of a nonzero rational: `v_p(numerator) - v_p(denominator)`.
pub fn valuation(p: u64, x: &Ratio) -> Result<i64> {
    if !is_prime(p) {
        return Err(Error::invalid(format!("{p} is not prime")));
    }
    if x.is_zero() {
        return Err(Error::UndefinedValuation);
    }
    let p = BigInt::from(p);
    Ok(valuation_big(&p, x.numer()) - valuation_big(&p, x.denom()))
}
