//! Diagonal concentration and peeling.
//!
//! For a prime `p`, the pair measure of `𝓔` splits by valuation pair:
//! `m(i,j) = μ(𝓔 ∩ V_i×W_j) / μ(𝓔)`. This module builds that measure, checks the
//! bilinear bound on its cells, locates the diagonal center `k_p` minimizing the
//! mass at distance at least 2 from `(k,k)`, filters `𝓔` to the arithmetically
//! structured part `𝓔*`, and peels vertices until every neighborhood carries a
//! proportional share of the mass.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::arith::interval::{escalate, Interval};
use crate::arith::{factorize, format_ratio, int, interval_eval, ratio, Ratio, RealExpr, Verdict};
use crate::error::{Error, Result};
use crate::model::{EdgeSet, Natural, PairMasses, PairSystem};
use crate::quality::{certify_against_log, prime_set, Params};

/// `m(i,j)` with marginals `α_i = μ(V_i)/μ(V)` and `β_j = μ(W_j)/μ(W)`.
#[derive(Clone, Debug, PartialEq)]
pub struct DiagonalMeasure {
    pub p: u64,
    pub cells: BTreeMap<(i64, i64), Ratio>,
    pub alpha: BTreeMap<i64, Ratio>,
    pub beta: BTreeMap<i64, Ratio>,
    /// `μ(𝓔)` of the source, positive.
    pub total: Ratio,
}

impl DiagonalMeasure {
    /// Builds a measure directly from cell masses; they are normalized to sum to 1.
    pub fn from_cells(
        p: u64,
        cells: BTreeMap<(i64, i64), Ratio>,
        alpha: BTreeMap<i64, Ratio>,
        beta: BTreeMap<i64, Ratio>,
    ) -> Result<Self> {
        let total: Ratio = cells.values().sum();
        if !total.is_positive() {
            return Err(Error::DegenerateMeasure);
        }
        let cells = cells.into_iter().filter(|(_, m)| !m.is_zero()).map(|(k, m)| (k, m / &total)).collect();
        Ok(DiagonalMeasure { p, cells, alpha, beta, total })
    }

    pub fn cell(&self, i: i64, j: i64) -> Ratio {
        self.cells.get(&(i, j)).cloned().unwrap_or_else(Ratio::zero)
    }

    /// `[min, max]` of all indices carrying mass.
    pub fn index_hull(&self) -> Option<(i64, i64)> {
        let idx = self.cells.keys().flat_map(|&(i, j)| [i, j]);
        let lo = idx.clone().min()?;
        let hi = idx.max()?;
        Some((lo, hi))
    }

    /// `Σ_{|i-k|+|j-k| ≥ 2} m(i,j)`.
    pub fn tail(&self, k: i64) -> Ratio {
        self.cells
            .iter()
            .filter(|(&(i, j), _)| (i - k).abs() + (j - k).abs() >= 2)
            .map(|(_, m)| m)
            .sum()
    }
}

/// `m(i,j)` for the valuation pairs of `edges` at `p`.
pub fn diagonal_measure(system: &PairSystem, edges: &EdgeSet, p: u64) -> Result<DiagonalMeasure> {
    let masses = PairMasses::new(system)?;
    diagonal_measure_with(system, &masses, edges, p)
}

pub fn diagonal_measure_with(
    system: &PairSystem,
    masses: &PairMasses,
    edges: &EdgeSet,
    p: u64,
) -> Result<DiagonalMeasure> {
    if !crate::arith::is_prime(p) {
        return Err(Error::invalid(format!("{p} is not prime")));
    }
    let total_scaled = masses.pair_sum(edges);
    if !total_scaled.is_positive() {
        return Err(Error::DegenerateMeasure);
    }
    let nu = |n: Natural| crate::arith::valuation_u64(p, n) as i64;
    let mut cells: BTreeMap<(i64, i64), BigInt> = BTreeMap::new();
    for &(v, w) in edges {
        let m = masses.v.of(v) * masses.w.of(w);
        if !m.is_zero() {
            *cells.entry((nu(v), nu(w))).or_insert_with(BigInt::zero) += m;
        }
    }
    let marginal = |ns: &mut dyn Iterator<Item = Natural>, mass: &crate::model::Masses| {
        let mut acc: BTreeMap<i64, BigInt> = BTreeMap::new();
        let mut total = BigInt::zero();
        for n in ns {
            let m = mass.of(n);
            total += &m;
            *acc.entry(nu(n)).or_insert_with(BigInt::zero) += m;
        }
        acc.into_iter()
            .filter(|(_, m)| !m.is_zero())
            .map(|(i, m)| (i, Ratio::new(m, total.clone())))
            .collect::<BTreeMap<_, _>>()
    };
    let alpha = marginal(&mut system.psi.support(), &masses.v);
    let beta = marginal(&mut system.theta.support(), &masses.w);
    let cells = cells.into_iter().map(|(k, m)| (k, Ratio::new(m, total_scaled.clone()))).collect();
    Ok(DiagonalMeasure { p, cells, alpha, beta, total: masses.pair_ratio(total_scaled) })
}

/// Verdict for one cell of the bilinear bound.
#[derive(Clone, Debug, Serialize)]
pub struct CellVerdict {
    pub i: i64,
    pub j: i64,
    pub m: String,
    pub verdict: Verdict,
    /// Enclosure of `ln` of the bound, as floats for display.
    pub log_bound: (f64, f64),
}

/// `ln` of `(100 e^C)^{-1_{p≤p₀}} p^{-|i-j|/q} (α_i β_j e^{1_{i≠j} C})^{1/q'}`.
fn log_bilinear_bound(params: &Params, p: u64, i: i64, j: i64, a: &Ratio, b: &Ratio, prec: u32) -> Result<Interval> {
    let off = i != j;
    let mut terms = vec![];
    if p <= params.p0 {
        terms.push(RealExpr::neg(RealExpr::Sum(vec![
            RealExpr::ln(RealExpr::int(100)),
            RealExpr::Const(params.c.clone()),
        ])));
    }
    let inv_q = ratio(1, 2) - &params.epsilon;
    if off {
        terms.push(RealExpr::Product(vec![
            RealExpr::Const(-(inv_q * int((i - j).unsigned_abs()))),
            RealExpr::ln(RealExpr::Const(int(p))),
        ]));
    }
    let mut inner = vec![RealExpr::ln(RealExpr::Const(a.clone())), RealExpr::ln(RealExpr::Const(b.clone()))];
    if off {
        inner.push(RealExpr::Const(params.c.clone()));
    }
    terms.push(RealExpr::Product(vec![RealExpr::Const(params.inv_q_prime()), RealExpr::Sum(inner)]));
    RealExpr::Sum(terms).eval(prec)
}

/// Certified cell-by-cell comparison of `m(i,j)` with the bilinear bound.
/// Diagnostic only: the bound is a property of minimal counterexamples.
pub fn bilinear_check(dm: &DiagonalMeasure, params: &Params) -> Result<Vec<CellVerdict>> {
    let mut out = Vec::new();
    for (&(i, j), m) in &dm.cells {
        let (a, b) = match (dm.alpha.get(&i), dm.beta.get(&j)) {
            (Some(a), Some(b)) => (a, b),
            _ => return Err(Error::invalid(format!("cell ({i},{j}) carries mass but a marginal is zero"))),
        };
        let (verdict, _, _, lb) = certify_against_log(m, params.precision_bits, params.precision_cap, |prec| {
            log_bilinear_bound(params, dm.p, i, j, a, b, prec)
        })?;
        out.push(CellVerdict { i, j, m: format_ratio(m), verdict, log_bound: (lb.lo_f64(), lb.hi_f64()) });
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct CenterResult {
    pub k: i64,
    #[serde(serialize_with = "ser_ratio")]
    pub tail_mass: Ratio,
}

fn ser_ratio<S: serde::Serializer>(x: &Ratio, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&format_ratio(x))
}

/// The `k` minimizing the off-diagonal tail, scanning the index hull of the
/// support; ties go to the smallest `k`.
///
/// Outside the hull every cell sits at distance at least 2 from `(k,k)`, so
/// the tail there is the full mass. The scan checks that one step beyond each
/// end of the hull is never strictly better.
pub fn find_center(dm: &DiagonalMeasure) -> CenterResult {
    let Some((lo, hi)) = dm.index_hull() else {
        return CenterResult { k: 0, tail_mass: Ratio::zero() };
    };
    let mut best = CenterResult { k: lo, tail_mass: dm.tail(lo) };
    for k in lo + 1..=hi {
        let t = dm.tail(k);
        if t < best.tail_mass {
            best = CenterResult { k, tail_mass: t };
        }
    }
    debug_assert!(dm.tail(lo - 1) >= best.tail_mass && dm.tail(hi + 1) >= best.tail_mass);
    best
}

/// Parameters of the decay-away-from-the-diagonal hypothesis, preset from the
/// bilinear bound.
#[derive(Clone, Debug, Serialize)]
pub struct DecayReport {
    pub p: u64,
    /// Cells violating `m(i,j) ≤ c₁ x_i y_j` (diagonal) or
    /// `m(i,j) ≤ c₁ C₃ λ^{|i-j|} x_i y_j` (off-diagonal).
    pub hypothesis_violations: Vec<(i64, i64)>,
    pub hypothesis_inconclusive: Vec<(i64, i64)>,
    /// `c₁ ≥ c₂ / (1 + (2C₃ - 1) λ)`. For `p ≤ p₀` this is expected to be
    /// violated, which is what rules out the hypothesis at small primes.
    pub first_conclusion: Verdict,
    /// `λ ≤ 1 - c₂`.
    pub lambda_in_range: Verdict,
    pub center: CenterResult,
    /// Enclosure of `tail / ((λ^q)^{2/q'} + (λ^q)^{1+1/q})`.
    pub tail_ratio: (f64, f64),
}

/// Checks the decay hypothesis with `c₁ = (100e^C)^{-1_{p≤p₀}}`,
/// `λ = p^{-1/2+ε}`, `C₃ = e^C`, `c₂ = 1 - 2^{-1/10}`, `x_i = α_i^{1/2+ε}`,
/// `y_j = β_j^{1/2+ε}`, and reports the empirical tail ratio at the center.
pub fn decay_check(dm: &DiagonalMeasure, params: &Params) -> Result<DecayReport> {
    let prec = params.precision_bits;
    let cap = params.precision_cap;
    let p = dm.p;
    let c = RealExpr::Const(params.c.clone());
    let small = p <= params.p0;
    // ln c₁, ln λ, ln C₃
    let ln_c1 = |prec| -> Result<Interval> {
        if small {
            RealExpr::neg(RealExpr::Sum(vec![RealExpr::ln(RealExpr::int(100)), c.clone()])).eval(prec)
        } else {
            Ok(Interval::zero(prec))
        }
    };
    let lambda_exp = &params.epsilon - ratio(1, 2);
    let ln_lambda = |prec| RealExpr::Product(vec![RealExpr::Const(lambda_exp.clone()), RealExpr::ln(RealExpr::Const(int(p)))]).eval(prec);

    let mut violations = vec![];
    let mut inconclusive = vec![];
    for (&(i, j), m) in &dm.cells {
        let (a, b) = (&dm.alpha[&i], &dm.beta[&j]);
        let (v, _, _, _) = certify_against_log(m, prec, cap, |prec| {
            let mut acc = ln_c1(prec)?;
            if i != j {
                acc = acc.add(&c.eval(prec)?).add(&ln_lambda(prec)?.mul_ratio(&int((i - j).unsigned_abs())));
            }
            let xy = RealExpr::Sum(vec![RealExpr::ln(RealExpr::Const(a.clone())), RealExpr::ln(RealExpr::Const(b.clone()))])
                .eval(prec)?
                .mul_ratio(&params.inv_q_prime());
            Ok(acc.add(&xy))
        })?;
        match v {
            Verdict::Holds => {}
            Verdict::Violated => violations.push((i, j)),
            Verdict::Inconclusive => inconclusive.push((i, j)),
        }
    }

    // c₂ / (1 + (2 C₃ - 1) λ) ≤ c₁
    let (first_conclusion, _) = escalate(prec, cap, |prec| {
        let c2 = RealExpr::Sum(vec![
            RealExpr::int(1),
            RealExpr::neg(RealExpr::pow(RealExpr::int(2), RealExpr::Const(ratio(-1, 10)))),
        ])
        .eval(prec)?;
        let lam = ln_lambda(prec)?.exp()?;
        let c3 = c.eval(prec)?.exp()?;
        let denom = Interval::one(prec).add(&c3.add(&c3).sub(&Interval::one(prec)).mul(&lam));
        let lhs = c2.div(&denom)?;
        Ok(lhs.certify_le(&ln_c1(prec)?.exp()?))
    })?;
    let (lambda_in_range, _) = escalate(prec, cap, |prec| {
        let lam = ln_lambda(prec)?.exp()?;
        let bound = RealExpr::pow(RealExpr::int(2), RealExpr::Const(ratio(-1, 10))).eval(prec)?;
        Ok(lam.certify_le(&bound))
    })?;

    let center = find_center(dm);
    let q = params.q();
    let qp = params.q_prime();
    let ln_lq = ln_lambda(prec)?.mul_ratio(&q);
    let denom = ln_lq
        .mul_ratio(&(int(2) / &qp))
        .exp()?
        .add(&ln_lq.mul_ratio(&(Ratio::one() + q.recip())).exp()?);
    let tail = Interval::point(&center.tail_mass, prec);
    let ratio_iv = tail.div(&denom)?;
    Ok(DecayReport {
        p,
        hypothesis_violations: violations,
        hypothesis_inconclusive: inconclusive,
        first_conclusion,
        lambda_in_range,
        center,
        tail_ratio: (ratio_iv.lo_f64(), ratio_iv.hi_f64()),
    })
}

/// Output of [`concentrate`].
#[derive(Clone, Debug)]
pub struct Concentration {
    /// `N = Π_{p ∈ 𝒫} p^{k_p}`.
    pub n: Natural,
    pub centers: BTreeMap<u64, CenterResult>,
    pub e_star: EdgeSet,
    /// `μ(𝓔 \ 𝓔*) / μ(𝓔)`.
    pub removed_fraction: Ratio,
    pub mu_e: Ratio,
    pub mu_e_star: Ratio,
}

/// Picks a diagonal center `k_p` for each prime of the system, sets
/// `N = Π p^{k_p}` and keeps the pairs with `|ν_p(v/N)| + |ν_p(w/N)| ≤ 1` at
/// every prime.
pub fn concentrate(system: &PairSystem, edges: &EdgeSet) -> Result<Concentration> {
    let masses = PairMasses::new(system)?;
    let total = masses.pair_sum(edges);
    if !total.is_positive() {
        return Err(Error::DegenerateMeasure);
    }
    let primes = prime_set(&system.psi, &system.theta)?;
    let mut centers = BTreeMap::new();
    let mut n: u64 = 1;
    for &p in &primes {
        let dm = diagonal_measure_with(system, &masses, edges, p)?;
        let c = find_center(&dm);
        if c.k < 0 {
            return Err(Error::invalid(format!("negative center {} at p = {p}", c.k)));
        }
        let pk = p.checked_pow(c.k as u32).ok_or_else(|| Error::Overflow(format!("{p}^{}", c.k)))?;
        n = n.checked_mul(pk).ok_or_else(|| Error::Overflow(format!("N exceeds 64 bits at p = {p}")))?;
        centers.insert(p, c);
    }
    let n_fact: HashMap<u64, i64> = factorize(n)?.into_iter().map(|(p, e)| (p, e as i64)).collect();
    let mut fact_cache: HashMap<Natural, Vec<(u64, u32)>> = HashMap::new();
    let mut structured = |v: Natural, w: Natural| -> Result<bool> {
        for x in [v, w] {
            if !fact_cache.contains_key(&x) {
                fact_cache.insert(x, factorize(x)?);
            }
        }
        Ok(pair_structured(&fact_cache[&v], &fact_cache[&w], &n_fact))
    };
    let mut e_star = EdgeSet::new();
    for &(v, w) in edges {
        if structured(v, w)? {
            e_star.insert((v, w));
        }
    }
    let kept = masses.pair_sum(&e_star);
    let removed = &total - &kept;
    Ok(Concentration {
        n,
        centers,
        removed_fraction: Ratio::new(removed, total.clone()),
        mu_e: masses.pair_ratio(total),
        mu_e_star: masses.pair_ratio(kept),
        e_star,
    })
}

/// `|ν_p(v/N)| + |ν_p(w/N)| ≤ 1` at every prime, from factorizations.
pub(crate) fn pair_structured(fv: &[(u64, u32)], fw: &[(u64, u32)], n: &HashMap<u64, i64>) -> bool {
    let mut primes: BTreeSet<u64> = n.keys().copied().collect();
    primes.extend(fv.iter().map(|x| x.0));
    primes.extend(fw.iter().map(|x| x.0));
    let val = |f: &[(u64, u32)], p: u64| f.iter().find(|x| x.0 == p).map_or(0, |x| x.1 as i64);
    primes.into_iter().all(|p| {
        let np = n.get(&p).copied().unwrap_or(0);
        (val(fv, p) - np).abs() + (val(fw, p) - np).abs() <= 1
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    V,
    W,
}

/// Certificate that a removal kept the mass above the rescaled bound
/// `μ(𝓔_new) > μ(𝓔_old) · (μ(side_new) / μ(side_old))^{1/q'}`.
#[derive(Clone, Debug, Serialize)]
pub struct StepCertificate {
    pub verdict: Verdict,
    pub precision_bits: u32,
    /// The removed vertex had zero mass, so both sides are equal and the
    /// strict inequality cannot hold.
    pub degenerate: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct PeelStep {
    pub step: usize,
    pub vertex: Natural,
    pub side: Side,
    pub mass_before: String,
    pub mass_after: String,
    pub side_before: String,
    pub side_after: String,
    pub certificate: StepCertificate,
}

#[derive(Clone, Debug)]
pub struct PeelResult {
    pub edges: EdgeSet,
    pub trace: Vec<PeelStep>,
}

/// Incremental state: adjacency, scaled neighborhood masses and side totals.
struct PeelState<'a> {
    masses: &'a PairMasses,
    adj_v: BTreeMap<Natural, BTreeSet<Natural>>,
    adj_w: BTreeMap<Natural, BTreeSet<Natural>>,
    /// `μ_θ^g(Γ(v))`, scaled by `w.denom`.
    gamma_v: HashMap<Natural, BigInt>,
    /// `μ_ψ^f(Γ(w))`, scaled by `v.denom`.
    gamma_w: HashMap<Natural, BigInt>,
    sv: BigInt,
    sw: BigInt,
    /// `μ(𝓔)`, scaled by `v.denom * w.denom`.
    m: BigInt,
}

impl<'a> PeelState<'a> {
    fn new(masses: &'a PairMasses, edges: &EdgeSet) -> Self {
        let mut adj_v: BTreeMap<Natural, BTreeSet<Natural>> = BTreeMap::new();
        let mut adj_w: BTreeMap<Natural, BTreeSet<Natural>> = BTreeMap::new();
        for &(v, w) in edges {
            adj_v.entry(v).or_default().insert(w);
            adj_w.entry(w).or_default().insert(v);
        }
        let gamma_v = adj_v.iter().map(|(&v, ws)| (v, masses.w.sum(ws))).collect();
        let gamma_w = adj_w.iter().map(|(&w, vs)| (w, masses.v.sum(vs))).collect();
        let sv = masses.v.sum(adj_v.keys());
        let sw = masses.w.sum(adj_w.keys());
        let m = masses.pair_sum(edges);
        PeelState { masses, adj_v, adj_w, gamma_v, gamma_w, sv, sw, m }
    }

    /// Violators of the neighborhood-mass property with their ranking key.
    fn violators(&self, a: &BigInt, b: &BigInt) -> Vec<(BigInt, Natural, Side)> {
        let am = a * &self.m;
        let mut out = vec![];
        for &v in self.adj_v.keys() {
            let key = &self.gamma_v[&v] * &self.sv;
            if b * &key < am {
                out.push((key, v, Side::V));
            }
        }
        for &w in self.adj_w.keys() {
            let key = &self.gamma_w[&w] * &self.sw;
            if b * &key < am {
                out.push((key, w, Side::W));
            }
        }
        out
    }

    fn remove(&mut self, x: Natural, side: Side) {
        let (adj_x, adj_y, gamma_y, s_y, mx, my) = match side {
            Side::V => (&mut self.adj_v, &mut self.adj_w, &mut self.gamma_w, &mut self.sw, &self.masses.v, &self.masses.w),
            Side::W => (&mut self.adj_w, &mut self.adj_v, &mut self.gamma_v, &mut self.sv, &self.masses.w, &self.masses.v),
        };
        let nx = mx.of(x);
        let nbrs = adj_x.remove(&x).unwrap_or_default();
        for y in nbrs {
            let ny = my.of(y);
            self.m -= &nx * &ny;
            let set = adj_y.get_mut(&y).expect("adjacency is symmetric");
            set.remove(&x);
            *gamma_y.get_mut(&y).expect("tracked") -= &nx;
            if set.is_empty() {
                adj_y.remove(&y);
                gamma_y.remove(&y);
                *s_y -= ny;
            }
        }
        match side {
            Side::V => {
                self.gamma_v.remove(&x);
                self.sv -= nx;
            }
            Side::W => {
                self.gamma_w.remove(&x);
                self.sw -= nx;
            }
        }
    }

    fn edges(&self) -> EdgeSet {
        self.adj_v.iter().flat_map(|(&v, ws)| ws.iter().map(move |&w| (v, w))).collect()
    }
}

/// Certifies `m_new > m_old · r^{e}` for rationals with `0 < r ≤ 1`.
fn certify_step(m_new: &Ratio, m_old: &Ratio, r: &Ratio, e: &Ratio, prec: u32, cap: u32) -> Result<(Verdict, u32)> {
    if r.is_zero() {
        let v = if m_new.is_positive() { Verdict::Holds } else { Verdict::Violated };
        return Ok((v, prec));
    }
    escalate(prec, cap, |prec| {
        let rhs = interval_eval(m_old, &[(RealExpr::Const(r.clone()), RealExpr::Const(e.clone()))], prec)?;
        Ok(rhs.certify_lt(&Interval::point(m_new, prec)))
    })
}

/// Removes vertices violating
/// `μ_θ^g(Γ(v)) ≥ (1/q') μ(𝓔) / μ_ψ^f(𝓔|_V)` (or its `W` analogue) until none
/// is left. Among violators the one with the smallest
/// `μ(Γ(x)) μ(side) / μ(𝓔)` goes first, ties to the smaller integer, then the
/// `V` side.
pub fn peel(system: &PairSystem, edges: &EdgeSet, params: &Params) -> Result<PeelResult> {
    let masses = PairMasses::new(system)?;
    let e = params.inv_q_prime();
    let (a, b) = (e.numer().clone(), e.denom().clone());
    let mut state = PeelState::new(&masses, edges);
    let limit = state.adj_v.len() + state.adj_w.len();
    let mut trace = Vec::new();
    let pair_denom = masses.pair_denom();
    loop {
        let mut viol = state.violators(&a, &b);
        viol.sort();
        let Some((_, x, side)) = viol.into_iter().next() else { break };
        if trace.len() >= limit {
            return Err(Error::invalid("peeling did not terminate within |V| + |W| removals"));
        }
        let m_old = Ratio::new(state.m.clone(), pair_denom.clone());
        let (s_old_scaled, side_denom) = match side {
            Side::V => (state.sv.clone(), &masses.v.denom),
            Side::W => (state.sw.clone(), &masses.w.denom),
        };
        let x_mass = match side {
            Side::V => masses.v.of(x),
            Side::W => masses.w.of(x),
        };
        state.remove(x, side);
        let m_new = Ratio::new(state.m.clone(), pair_denom.clone());
        let s_new_scaled = match side {
            Side::V => state.sv.clone(),
            Side::W => state.sw.clone(),
        };
        let s_old = Ratio::new(s_old_scaled.clone(), side_denom.clone());
        let s_new = Ratio::new(s_new_scaled.clone(), side_denom.clone());
        let degenerate = x_mass.is_zero() || s_old_scaled.is_zero();
        let certificate = if degenerate {
            StepCertificate { verdict: Verdict::Inconclusive, precision_bits: 0, degenerate }
        } else {
            let r = Ratio::new(s_new_scaled, s_old_scaled);
            let (verdict, bits) = certify_step(&m_new, &m_old, &r, &e, params.precision_bits, params.precision_cap)?;
            StepCertificate { verdict, precision_bits: bits, degenerate }
        };
        trace.push(PeelStep {
            step: trace.len() + 1,
            vertex: x,
            side,
            mass_before: format_ratio(&m_old),
            mass_after: format_ratio(&m_new),
            side_before: format_ratio(&s_old),
            side_after: format_ratio(&s_new),
            certificate,
        });
    }
    Ok(PeelResult { edges: state.edges(), trace })
}

/// Vertices of `edges` violating either neighborhood-mass inequality, by exact
/// comparison.
pub fn property2_violations(system: &PairSystem, edges: &EdgeSet, params: &Params) -> Result<Vec<(Side, Natural)>> {
    let masses = PairMasses::new(system)?;
    let e = params.inv_q_prime();
    let state = PeelState::new(&masses, edges);
    let mut out: Vec<(Side, Natural)> =
        state.violators(e.numer(), e.denom()).into_iter().map(|(_, x, s)| (s, x)).collect();
    out.sort();
    Ok(out)
}
