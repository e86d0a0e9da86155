//! The quality conditions `D_{ψ,θ}(v,w) ≤ 1` and `ω_t(v,w) ≥ K`, the edge sets
//! they cut out, and the certified check of the main measure bound
//!
//! ```text
//! μ(𝓔) ≤ (100 e^C)^P · (Log t)^{(e^{40C}-1)/2} · (μ_ψ^f(V) μ_θ^g(W) e^{-CK})^{1/2+ε}.
//! ```
//!
//! The right-hand side overflows any fixed-size representation for modest `C`
//! (for `C = 1` the `Log t` exponent is about `1.2e17`), so it is enclosed in the
//! logarithmic domain.

use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::arith::interval::{escalate, Interval, DEFAULT_PRECISION_BITS, DEFAULT_PRECISION_CAP};
use crate::arith::{ceil_i64, factorize, floor_u64, format_ratio, gcd, int, ratio, Ratio, RealExpr, Verdict};
use crate::error::{Error, Result};
use crate::model::{mu_pairs, EdgeSet, Natural, PairSystem, WeightFunction};

pub const DEFAULT_P0: u64 = 100;

/// Which reading of `ω_t(v, w)` to use.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OmegaMode {
    /// `#{p ≤ t : ν_p(v) ≠ ν_p(w)}`, i.e. primes dividing `vw / gcd(v,w)^2`.
    #[default]
    Squared,
    /// `#{p ≤ t : p | vw / gcd(v,w)}`, i.e. primes dividing `lcm(v, w)`.
    Lcm,
}

impl FromStr for OmegaMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "squared" => Ok(OmegaMode::Squared),
            "lcm" => Ok(OmegaMode::Lcm),
            _ => Err(Error::Parse(format!("unknown omega mode {s:?} (expected squared or lcm)"))),
        }
    }
}

impl fmt::Display for OmegaMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            OmegaMode::Squared => "squared",
            OmegaMode::Lcm => "lcm",
        })
    }
}

/// Parameters `ε, C, t, K, p₀` plus evaluation settings.
#[derive(Clone, Debug, PartialEq)]
pub struct Params {
    pub epsilon: Ratio,
    pub c: Ratio,
    pub t: Ratio,
    pub k: Ratio,
    pub p0: u64,
    pub precision_bits: u32,
    pub precision_cap: u32,
    pub omega_mode: OmegaMode,
}

impl Params {
    pub fn new(epsilon: Ratio, c: Ratio, t: Ratio, k: Ratio, p0: u64, precision_bits: u32) -> Result<Self> {
        let p = Params {
            epsilon,
            c,
            t,
            k,
            p0,
            precision_bits,
            precision_cap: DEFAULT_PRECISION_CAP.max(precision_bits),
            omega_mode: OmegaMode::Squared,
        };
        p.validate()?;
        Ok(p)
    }

    /// `ε`, `C`, `t`, `K` with `p₀ = 100` and 256-bit precision.
    pub fn standard(epsilon: Ratio, c: Ratio, t: Ratio, k: Ratio) -> Result<Self> {
        Params::new(epsilon, c, t, k, DEFAULT_P0, DEFAULT_PRECISION_BITS)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon.is_positive() && self.epsilon <= ratio(2, 5)) {
            return Err(Error::invalid(format!("epsilon = {} must lie in (0, 2/5]", self.epsilon)));
        }
        if !self.c.is_positive() {
            return Err(Error::invalid(format!("C = {} must be positive", self.c)));
        }
        if self.t < Ratio::one() {
            return Err(Error::invalid(format!("t = {} must be at least 1", self.t)));
        }
        if self.p0 == 0 {
            return Err(Error::invalid("p0 must be positive"));
        }
        if self.precision_bits < 8 {
            return Err(Error::invalid("precision_bits must be at least 8"));
        }
        Ok(())
    }

    /// `q = 2 / (1 - 2ε)`.
    pub fn q(&self) -> Ratio {
        int(2) / (Ratio::one() - int(2) * &self.epsilon)
    }

    /// `q' = 2 / (1 + 2ε)`.
    pub fn q_prime(&self) -> Ratio {
        int(2) / (Ratio::one() + int(2) * &self.epsilon)
    }

    /// `1/q' = 1/2 + ε`.
    pub fn inv_q_prime(&self) -> Ratio {
        ratio(1, 2) + &self.epsilon
    }

    pub fn with_k(&self, k: Ratio) -> Self {
        Params { k, ..self.clone() }
    }

    pub fn with_epsilon(&self, epsilon: Ratio) -> Result<Self> {
        let p = Params { epsilon, ..self.clone() };
        p.validate()?;
        Ok(p)
    }

    pub fn with_precision(&self, precision_bits: u32) -> Self {
        Params { precision_bits, ..self.clone() }
    }

    /// Smallest integer `ω` with `ω ≥ K`, floored at 0.
    pub fn k_threshold(&self) -> u32 {
        k_threshold(&self.k)
    }
}

/// Smallest nonnegative integer `n` with `n ≥ K`.
pub fn k_threshold(k: &Ratio) -> u32 {
    ceil_i64(k).map_or(if k.is_negative() { 0 } else { u32::MAX }, |c| c.clamp(0, u32::MAX as i64) as u32)
}

/// `x * m <= g` for a nonnegative rational `x`, without building a Ratio.
fn scaled_le(x: &Ratio, m: u64, g: u64) -> bool {
    if let (Some(a), Some(b)) = (x.numer().to_u64(), x.denom().to_u64()) {
        return (a as u128) * (m as u128) <= (b as u128) * (g as u128);
    }
    x.numer() * BigInt::from(m) <= x.denom() * BigInt::from(g)
}

/// `D_{ψ,θ}(v,w) = max(w ψ(v), v θ(w)) / gcd(v,w)`.
pub fn d_value(v: Natural, w: Natural, psi: &WeightFunction, theta: &WeightFunction) -> Ratio {
    let a = int(w) * psi.value(v);
    let b = int(v) * theta.value(w);
    a.max(b) / int(gcd(v, w))
}

/// `D_{ψ,θ}(v,w) ≤ 1` by integer cross-multiplication.
pub fn d_le_one(v: Natural, w: Natural, psi: &WeightFunction, theta: &WeightFunction) -> bool {
    let g = gcd(v, w);
    let zero = Ratio::zero();
    scaled_le(psi.get(v).unwrap_or(&zero), w, g) && scaled_le(theta.get(w).unwrap_or(&zero), v, g)
}

/// Counts `ω_t` from two factorizations (sorted by prime).
fn omega_from_factors(fv: &[(u64, u32)], fw: &[(u64, u32)], t: u64, mode: OmegaMode) -> u32 {
    let (mut i, mut j, mut n) = (0, 0, 0);
    while i < fv.len() || j < fw.len() {
        let (p, differs) = match (fv.get(i), fw.get(j)) {
            (Some(&(p, a)), Some(&(q, b))) if p == q => {
                i += 1;
                j += 1;
                (p, a != b)
            }
            (Some(&(p, _)), Some(&(q, _))) if p < q => {
                i += 1;
                (p, true)
            }
            (Some(&(p, _)), None) => {
                i += 1;
                (p, true)
            }
            (_, Some(&(q, _))) => {
                j += 1;
                (q, true)
            }
            (None, None) => unreachable!(),
        };
        if p > t {
            // the merge visits primes in increasing order
            break;
        }
        n += match mode {
            OmegaMode::Squared => differs as u32,
            OmegaMode::Lcm => 1,
        };
    }
    n
}

/// `ω_t(v, w)` under the given reading.
pub fn omega_t_with(v: Natural, w: Natural, t: &Ratio, mode: OmegaMode) -> Result<u32> {
    if *t < Ratio::one() {
        return Err(Error::invalid(format!("t = {t} must be at least 1")));
    }
    Ok(omega_from_factors(&factorize(v)?, &factorize(w)?, floor_u64(t), mode))
}

/// `#{p ≤ t : ν_p(v) ≠ ν_p(w)}`.
pub fn omega_t(v: Natural, w: Natural, t: &Ratio) -> Result<u32> {
    omega_t_with(v, w, t, OmegaMode::Squared)
}

/// `#{p ≤ t : p | n}`.
pub fn omega_small(n: Natural, t: u64) -> Result<u32> {
    Ok(factorize(n)?.iter().take_while(|&&(p, _)| p <= t).count() as u32)
}

fn factor_table(ns: impl Iterator<Item = Natural>) -> Result<HashMap<Natural, Vec<(u64, u32)>>> {
    ns.map(|n| Ok((n, factorize(n)?))).collect()
}

/// `𝓔_{ψ,θ}^{t,K} = {(v,w) ∈ V×W : D(v,w) ≤ 1, ω_t(v,w) ≥ K}`.
pub fn build_edge_set(psi: &WeightFunction, theta: &WeightFunction, t: &Ratio, k: &Ratio) -> Result<EdgeSet> {
    build_edge_set_with(psi, theta, t, k, OmegaMode::Squared)
}

pub fn build_edge_set_with(
    psi: &WeightFunction,
    theta: &WeightFunction,
    t: &Ratio,
    k: &Ratio,
    mode: OmegaMode,
) -> Result<EdgeSet> {
    if *t < Ratio::one() {
        return Err(Error::invalid(format!("t = {t} must be at least 1")));
    }
    let tf = floor_u64(t);
    let kmin = k_threshold(k);
    let fv = factor_table(psi.support())?;
    let fw = factor_table(theta.support())?;
    let vs: Vec<(Natural, &Ratio)> = psi.iter().collect();
    let ws: Vec<(Natural, &Ratio)> = theta.iter().collect();
    let rows: Vec<Vec<(Natural, Natural)>> = vs
        .par_iter()
        .map(|&(v, pv)| {
            let mut row = Vec::new();
            for &(w, tw) in &ws {
                let g = gcd(v, w);
                if !scaled_le(pv, w, g) || !scaled_le(tw, v, g) {
                    continue;
                }
                if kmin == 0 || omega_from_factors(&fv[&v], &fw[&w], tf, mode) >= kmin {
                    row.push((v, w));
                }
            }
            row
        })
        .collect();
    Ok(rows.into_iter().flatten().collect())
}

/// Primes dividing some `vw` with `(v,w) ∈ supp ψ × supp θ`.
pub fn prime_set(psi: &WeightFunction, theta: &WeightFunction) -> Result<BTreeSet<u64>> {
    let mut out = BTreeSet::new();
    if psi.is_empty() || theta.is_empty() {
        return Ok(out);
    }
    for n in psi.support().chain(theta.support()) {
        for (p, _) in factorize(n)? {
            out.insert(p);
        }
    }
    Ok(out)
}

/// `P_{ψ,θ} = p₀ + |𝒫_{ψ,θ} ∩ [1, p₀]|`.
pub fn p_value(psi: &WeightFunction, theta: &WeightFunction, p0: u64) -> Result<u64> {
    if p0 == 0 {
        return Err(Error::invalid("p0 must be positive"));
    }
    Ok(p_value_from_primes(&prime_set(psi, theta)?, p0))
}

pub fn p_value_from_primes(primes: &BTreeSet<u64>, p0: u64) -> u64 {
    p0 + primes.range(..=p0).count() as u64
}

/// Certified comparison of an exact left-hand side with an enclosed right-hand
/// side. `log_rhs` encloses `ln(rhs)`; `rhs_lo`/`rhs_hi` render `rhs` in
/// decimal scientific notation.
#[derive(Clone, Debug)]
pub struct BoundReport {
    pub lhs: Ratio,
    pub log_lhs: Option<Interval>,
    /// `None` when the right-hand side is exactly zero.
    pub log_rhs: Option<Interval>,
    pub rhs_lo: String,
    pub rhs_hi: String,
    pub verdict: Verdict,
    pub precision_bits: u32,
    pub p_value: u64,
    /// Replayable instance document, attached by callers when the verdict is
    /// not `holds`.
    pub witness: Option<String>,
}

impl BoundReport {
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "lhs": format_ratio(&self.lhs),
            "rhs_lo": self.rhs_lo,
            "rhs_hi": self.rhs_hi,
            "log_rhs_lo": self.log_rhs.as_ref().map(|i| i.lo_f64()),
            "log_rhs_hi": self.log_rhs.as_ref().map(|i| i.hi_f64()),
            "verdict": self.verdict,
            "precision_bits": self.precision_bits,
            "P": self.p_value,
        })
    }
}

/// Encloses `ln` of the main bound's right-hand side, given positive
/// `μ_ψ^f(V)` and `μ_θ^g(W)`.
pub fn log_main_rhs(params: &Params, p_val: u64, mu_v: &Ratio, mu_w: &Ratio, prec: u32) -> Result<Interval> {
    let c = RealExpr::Const(params.c.clone());
    // P (ln 100 + C)
    let head = RealExpr::Product(vec![
        RealExpr::Const(int(p_val)),
        RealExpr::Sum(vec![RealExpr::ln(RealExpr::int(100)), c.clone()]),
    ])
    .eval(prec)?;
    // (e^{40C} - 1)/2 · ln(Log t)
    let log_log_t = RealExpr::log_t(RealExpr::Const(params.t.clone())).eval_ln(prec)?;
    let mid = if log_log_t.is_point() && log_log_t.lo().is_zero() {
        Interval::zero(prec)
    } else {
        let expo = RealExpr::Product(vec![
            RealExpr::Sum(vec![RealExpr::exp(RealExpr::Const(int(40) * &params.c)), RealExpr::int(-1)]),
            RealExpr::Const(ratio(1, 2)),
        ])
        .eval(prec)?;
        expo.mul(&log_log_t)
    };
    // (1/2 + ε)(ln μ_V + ln μ_W - C K)
    let inner = RealExpr::Sum(vec![
        RealExpr::ln(RealExpr::Const(mu_v.clone())),
        RealExpr::ln(RealExpr::Const(mu_w.clone())),
        RealExpr::Const(-(&params.c * &params.k)),
    ])
    .eval(prec)?;
    let tail = inner.mul_ratio(&params.inv_q_prime());
    Ok(head.add(&mid).add(&tail))
}

/// Compares an exact positive-or-zero `lhs` against `exp(log_rhs)`, escalating
/// precision until conclusive or the cap is hit.
pub fn certify_against_log(
    lhs: &Ratio,
    start_bits: u32,
    cap_bits: u32,
    mut log_rhs: impl FnMut(u32) -> Result<Interval>,
) -> Result<(Verdict, u32, Option<Interval>, Interval)> {
    let mut last: Option<(Option<Interval>, Interval)> = None;
    let (verdict, bits) = escalate(start_bits, cap_bits, |prec| {
        let r = log_rhs(prec)?;
        if lhs.is_zero() {
            last = Some((None, r));
            return Ok(Verdict::Holds);
        }
        let l = Interval::point(lhs, prec + 32).ln()?;
        let v = l.certify_le(&r);
        last = Some((Some(l), r));
        Ok(v)
    })?;
    let (log_lhs, log_rhs) = last.expect("escalate runs at least once");
    Ok((verdict, bits, log_lhs, log_rhs))
}

/// Checks the main measure bound for `edges` with exact `μ(𝓔)` and an enclosed
/// right-hand side.
pub fn main_bound_check(system: &PairSystem, params: &Params, edges: &EdgeSet) -> Result<BoundReport> {
    params.validate()?;
    let lhs = mu_pairs(system, edges)?;
    let p_val = p_value(&system.psi, &system.theta, params.p0)?;
    let mu_v = system.mu_psi_support()?;
    let mu_w = system.mu_theta_support()?;
    if mu_v.is_zero() || mu_w.is_zero() {
        // right-hand side is exactly zero, and so is every pair measure
        let verdict = if lhs.is_zero() { Verdict::Holds } else { Verdict::Violated };
        return Ok(BoundReport {
            lhs,
            log_lhs: None,
            log_rhs: None,
            rhs_lo: "0".into(),
            rhs_hi: "0".into(),
            verdict,
            precision_bits: params.precision_bits,
            p_value: p_val,
            witness: None,
        });
    }
    let (verdict, bits, log_lhs, log_rhs) =
        certify_against_log(&lhs, params.precision_bits, params.precision_cap, |prec| {
            log_main_rhs(params, p_val, &mu_v, &mu_w, prec)
        })?;
    let (rhs_lo, rhs_hi) = log_rhs.exp_to_sci(8)?;
    Ok(BoundReport {
        lhs,
        log_lhs,
        log_rhs: Some(log_rhs),
        rhs_lo,
        rhs_hi,
        verdict,
        precision_bits: bits,
        p_value: p_val,
        witness: None,
    })
}
