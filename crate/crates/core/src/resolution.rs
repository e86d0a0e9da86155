//! Resolution of a structured edge set: splitting every vertex around a
//! common `N` as `v = N v⁺ / v⁻`, the four anatomy sums `S₁..S₄`, and the
//! exact chain
//!
//! ```text
//! μ(𝓔')² ≤ q' μ(𝓔') μ_ψ(Γ(w₀)) μ_θ(W')
//!        ≤ q'² μ_ψ(V') μ_θ(W') Σ_{v∈Γ(w₀)} μ_ψ(v) μ_θ(Γ(v))
//!        ≤ q'² μ_ψ(V') μ_θ(W') T
//!        ≤ q'² μ_ψ(V') μ_θ(W') (S₁ + S₂ + S₃ + S₄)
//! ```
//!
//! where `T` is the unsplit double sum and `μ_ψ = μ_ψ^f`, `μ_θ = μ_θ^g`.

use std::collections::{BTreeMap, HashMap};

use num_traits::{One, Signed, Zero};
use serde_json::json;

use crate::anatomy::mertens_product;
use crate::arith::{factorize, floor_u64, format_ratio, gcd, int, pow_i, primes_upto, Interval, Ratio, RealExpr, Verdict};
use crate::diagonal::{pair_structured, property2_violations};
use crate::error::{Error, Result};
use crate::model::{mu_pairs, mu_set, neighborhood_v, neighborhood_w, restrict, EdgeSet, Natural, PairSystem};
use crate::quality::{d_le_one, k_threshold, omega_small, omega_t_with, Params};

fn signed_valuations(v: Natural, n: Natural) -> Result<BTreeMap<u64, i64>> {
    if v == 0 || n == 0 {
        return Err(Error::UndefinedValuation);
    }
    let mut val: BTreeMap<u64, i64> = BTreeMap::new();
    for (p, a) in factorize(v)? {
        *val.entry(p).or_insert(0) += a as i64;
    }
    for (p, a) in factorize(n)? {
        *val.entry(p).or_insert(0) -= a as i64;
    }
    val.retain(|_, e| *e != 0);
    Ok(val)
}

/// `(v⁻, v⁺)`: the products of the primes with `ν_p(v/N) = -1` and `+1`.
pub fn decompose(v: Natural, n: Natural) -> Result<(Natural, Natural)> {
    let (mut minus, mut plus) = (1u64, 1u64);
    for (p, e) in signed_valuations(v, n)? {
        match e {
            1 => plus *= p,
            -1 => minus *= p,
            _ => return Err(Error::NotStructured(format!("ν_{p}({v}/{n}) = {e}"))),
        }
    }
    Ok((minus, plus))
}

/// `N_x = Π_{p ∤ x} p^{ν_p(N)}`.
pub fn coprime_part(n: Natural, x: Natural) -> Result<Natural> {
    let mut out = 1u64;
    for (p, a) in factorize(n)? {
        if x % p != 0 {
            out *= p.pow(a);
        }
    }
    Ok(out)
}

/// First edge and prime with `|ν_p(v/N)| + |ν_p(w/N)| ≥ 2`.
pub fn structure_violation(e: &EdgeSet, n: Natural) -> Result<Option<(Natural, Natural, u64)>> {
    let n_fact: HashMap<u64, i64> = factorize(n)?.into_iter().map(|(p, a)| (p, a as i64)).collect();
    for &(v, w) in e {
        let (fv, fw) = (factorize(v)?, factorize(w)?);
        if !pair_structured(&fv, &fw, &n_fact) {
            let (sv, sw) = (signed_valuations(v, n)?, signed_valuations(w, n)?);
            let p = sv
                .keys()
                .chain(sw.keys())
                .copied()
                .find(|p| sv.get(p).map_or(0, |e| e.abs()) + sw.get(p).map_or(0, |e| e.abs()) >= 2)
                .expect("an offending prime exists");
            return Ok(Some((v, w, p)));
        }
    }
    Ok(None)
}

/// Every edge satisfies `|ν_p(v/N)| + |ν_p(w/N)| ≤ 1` at every prime.
pub fn check_structured(e: &EdgeSet, n: Natural) -> Result<bool> {
    Ok(structure_violation(e, n)?.is_none())
}

/// The `±` parts of every vertex of a structured edge set.
#[derive(Clone, Debug)]
pub struct Decomposition {
    pub n: Natural,
    pub v_parts: BTreeMap<Natural, (Natural, Natural)>,
    pub w_parts: BTreeMap<Natural, (Natural, Natural)>,
}

impl Decomposition {
    pub fn new(e: &EdgeSet, n: Natural) -> Result<Self> {
        if let Some((v, w, p)) = structure_violation(e, n)? {
            return Err(Error::NotStructured(format!("edge ({v}, {w}) at p = {p} with N = {n}")));
        }
        let (vs, ws) = restrict(e);
        let v_parts = vs.into_iter().map(|v| Ok((v, decompose(v, n)?))).collect::<Result<_>>()?;
        let w_parts = ws.into_iter().map(|w| Ok((w, decompose(w, n)?))).collect::<Result<_>>()?;
        Ok(Decomposition { n, v_parts, w_parts })
    }

    pub fn v_minus(&self, v: Natural) -> Natural {
        self.v_parts[&v].0
    }

    pub fn v_plus(&self, v: Natural) -> Natural {
        self.v_parts[&v].1
    }

    pub fn w_minus(&self, w: Natural) -> Natural {
        self.w_parts[&w].0
    }

    pub fn w_plus(&self, w: Natural) -> Natural {
        self.w_parts[&w].1
    }
}

/// The four sums and the unsplit sum `T` they cover.
#[derive(Clone, Debug)]
pub struct SSums {
    pub s1: Ratio,
    pub s2: Ratio,
    pub s3: Ratio,
    pub s4: Ratio,
    pub total_unsplit: Ratio,
    /// Maximizer of `w⁺` over `W'`, smallest on ties. `None` for empty `𝓔'`.
    pub w0: Option<Natural>,
    /// Maximizer of `v⁺` over `Γ(w)`, smallest on ties.
    pub v0: BTreeMap<Natural, Natural>,
}

impl SSums {
    pub fn sum(&self) -> Ratio {
        &self.s1 + &self.s2 + &self.s3 + &self.s4
    }

    pub fn degenerate(&self) -> bool {
        self.w0.is_none()
    }

    pub fn as_array(&self) -> [&Ratio; 4] {
        [&self.s1, &self.s2, &self.s3, &self.s4]
    }
}

/// `4 · #{p ≤ t : p | x} ≥ K`.
fn anatomy_condition(x: Natural, t: u64, k: &Ratio) -> Result<bool> {
    Ok(int(4 * omega_small(x, t)? as u64) >= *k)
}

fn argmax_by_key(xs: impl IntoIterator<Item = Natural>, key: impl Fn(Natural) -> Natural) -> Option<Natural> {
    // iteration is ascending, so the strict comparison keeps the smallest on ties
    let mut best: Option<(Natural, Natural)> = None;
    for x in xs {
        let k = key(x);
        if best.is_none_or(|(bk, _)| k > bk) {
            best = Some((k, x));
        }
    }
    best.map(|(_, x)| x)
}

/// `S₁..S₄` with the anatomy condition on `v⁻`, `v⁺` (inner sum over
/// `Γ(w)`) and on `w⁻`, `w⁺` (outer sum over `W'`).
pub fn s_sums(system: &PairSystem, e_prime: &EdgeSet, n: Natural, t: &Ratio, k: &Ratio) -> Result<SSums> {
    let dec = Decomposition::new(e_prime, n)?;
    s_sums_with(system, e_prime, &dec, t, k)
}

fn s_sums_with(system: &PairSystem, e_prime: &EdgeSet, dec: &Decomposition, t: &Ratio, k: &Ratio) -> Result<SSums> {
    let tf = floor_u64(t);
    let zero = Ratio::zero();
    let mut out = SSums {
        s1: zero.clone(),
        s2: zero.clone(),
        s3: zero.clone(),
        s4: zero.clone(),
        total_unsplit: zero,
        w0: None,
        v0: BTreeMap::new(),
    };
    let Some(w0) = argmax_by_key(dec.w_parts.keys().copied(), |w| dec.w_plus(w)) else {
        return Ok(out);
    };
    out.w0 = Some(w0);
    let mut term_v: HashMap<Natural, Ratio> = HashMap::new();
    let mut cond_minus: HashMap<Natural, bool> = HashMap::new();
    let mut cond_plus: HashMap<Natural, bool> = HashMap::new();
    for (&v, &(vm, vp)) in &dec.v_parts {
        term_v.insert(v, system.f.eval(v)? / (int(v) * int(vm)));
        cond_minus.insert(v, anatomy_condition(vm, tf, k)?);
        cond_plus.insert(v, anatomy_condition(vp, tf, k)?);
    }
    for (&w, &(wm, wp)) in &dec.w_parts {
        let gamma = neighborhood_w(e_prime, w);
        let v0 = argmax_by_key(gamma.iter().copied(), |v| dec.v_plus(v)).expect("w has a neighbor");
        out.v0.insert(w, v0);
        let outer = system.g.eval(w)? / (int(w) * int(wm)) / int(dec.v_plus(v0));
        let (mut all, mut minus, mut plus) = (Ratio::zero(), Ratio::zero(), Ratio::zero());
        for v in &gamma {
            let tv = &term_v[v];
            all += tv;
            if cond_minus[v] {
                minus += tv;
            }
            if cond_plus[v] {
                plus += tv;
            }
        }
        out.s1 += &outer * minus;
        out.s2 += &outer * plus;
        let full = &outer * all;
        if anatomy_condition(wm, tf, k)? {
            out.s3 += &full;
        }
        if anatomy_condition(wp, tf, k)? {
            out.s4 += &full;
        }
        out.total_unsplit += full;
    }
    let scale = int(dec.w_plus(w0));
    for s in [&mut out.s1, &mut out.s2, &mut out.s3, &mut out.s4, &mut out.total_unsplit] {
        *s /= &scale;
    }
    Ok(out)
}

/// `γ^{-max(0,⌈K/4⌉)} Π_{p≤t}(1 + (γ-1)/p)`, which bounds each `S_i` when
/// `(1⋆f)(n) ≤ n` and `(1⋆g)(n) ≤ n`.
pub fn s_majorant(t: &Ratio, k: &Ratio, gamma: &Ratio) -> Result<Ratio> {
    if *gamma <= Ratio::one() {
        return Err(Error::invalid(format!("gamma = {gamma} must exceed 1")));
    }
    let k4 = k_threshold(&(k / int(4))) as i64;
    Ok(pow_i(gamma, -k4) * mertens_product(t, gamma)?)
}

/// Largest `t` for which [`log_s_majorant_exp`] is evaluated.
pub const MAJORANT_T_CAP: u64 = 10_000;

/// Encloses `ln` of [`s_majorant`] at `γ = e^{40C}`.
pub fn log_s_majorant_exp(t: &Ratio, k: &Ratio, c: &Ratio, prec: u32) -> Result<Interval> {
    let c40 = c * int(40);
    let gamma = Interval::point(&c40, prec).exp()?;
    let gm1 = gamma.sub(&Interval::one(prec));
    let k4 = k_threshold(&(k / int(4)));
    let mut acc = Interval::point(&(-(c40 * int(k4 as u64))), prec);
    for p in primes_upto(t)? {
        acc = acc.add(&Interval::one(prec).add(&gm1.div_int(p)).ln()?);
    }
    Ok(acc)
}

/// One link `lhs ≤ rhs` of the chain.
#[derive(Clone, Debug)]
pub struct ChainLink {
    pub name: &'static str,
    pub lhs: Ratio,
    pub rhs: Ratio,
}

impl ChainLink {
    pub fn holds(&self) -> bool {
        self.lhs <= self.rhs
    }
}

#[derive(Clone, Debug)]
pub struct ResolutionReport {
    pub n: Natural,
    pub sums: SSums,
    pub mu_e: Ratio,
    pub mu_v: Ratio,
    pub mu_w: Ratio,
    /// `μ(𝓔')²`.
    pub lhs_sq: Ratio,
    /// `q'² (S₁+S₂+S₃+S₄) μ_ψ(V') μ_θ(W')`.
    pub rhs: Ratio,
    pub verdict: Verdict,
    pub chain: Vec<ChainLink>,
    /// Edges or vertices breaking a pointwise consequence of `D ≤ 1`.
    pub pointwise_failures: Vec<String>,
    /// Edges breaking reconstruction, coprimality or the four-factor identity.
    pub structure_failures: Vec<String>,
    /// Edges with `ω_t ≥ K` where no part carries `K/4` small primes.
    pub case_split_failures: Vec<(Natural, Natural)>,
    /// `S_i ≤` [`s_majorant`] at `γ = 2`.
    pub majorant_holds: bool,
    pub majorant: Ratio,
    /// Enclosure of `ln` of [`s_majorant`] at `γ = e^{40C}`.
    pub log_majorant_exp: Option<Interval>,
    /// Enclosure of `ln [μ(𝓔') / ((Log t)^{(e^{40C}-1)/2} (μ_ψ(V') μ_θ(W') e^{-10CK})^{1/2})]`.
    pub log_mc_ratio: Option<Interval>,
}

impl ResolutionReport {
    /// True when the main comparison and every side check holds.
    pub fn all_hold(&self) -> bool {
        self.verdict == Verdict::Holds
            && self.chain.iter().all(ChainLink::holds)
            && self.pointwise_failures.is_empty()
            && self.structure_failures.is_empty()
            && self.case_split_failures.is_empty()
            && self.majorant_holds
    }

    pub fn to_json(&self) -> serde_json::Value {
        let iv = |x: &Option<Interval>| x.as_ref().map(|i| json!([i.lo_f64(), i.hi_f64()]));
        json!({
            "N": self.n,
            "S1": format_ratio(&self.sums.s1),
            "S2": format_ratio(&self.sums.s2),
            "S3": format_ratio(&self.sums.s3),
            "S4": format_ratio(&self.sums.s4),
            "T": format_ratio(&self.sums.total_unsplit),
            "w0": self.sums.w0,
            "mu_e": format_ratio(&self.mu_e),
            "mu_v": format_ratio(&self.mu_v),
            "mu_w": format_ratio(&self.mu_w),
            "lhs_sq": format_ratio(&self.lhs_sq),
            "rhs": format_ratio(&self.rhs),
            "verdict": self.verdict,
            "chain": self.chain.iter().map(|l| json!({
                "name": l.name,
                "lhs": format_ratio(&l.lhs),
                "rhs": format_ratio(&l.rhs),
                "holds": l.holds(),
            })).collect::<Vec<_>>(),
            "witnesses": {
                "pointwise": self.pointwise_failures,
                "structure": self.structure_failures,
                "case_split": self.case_split_failures,
            },
            "majorant_gamma_2": format_ratio(&self.majorant),
            "majorant_holds": self.majorant_holds,
            "log_majorant_exp_40c": iv(&self.log_majorant_exp),
            "log_mc_ratio": iv(&self.log_mc_ratio),
        })
    }
}

fn check_preconditions(system: &PairSystem, e_prime: &EdgeSet, n: Natural, params: &Params) -> Result<()> {
    if let Some((v, w, p)) = structure_violation(e_prime, n)? {
        return Err(Error::precondition(
            "arithmetic structure",
            format!("edge ({v}, {w}) has |ν_{p}(v/N)| + |ν_{p}(w/N)| ≥ 2 for N = {n}"),
        ));
    }
    for &(v, w) in e_prime {
        if !system.psi.contains(v) || !system.theta.contains(w) || !d_le_one(v, w, &system.psi, &system.theta) {
            return Err(Error::precondition("quality D ≤ 1", format!("edge ({v}, {w})")));
        }
        let om = omega_t_with(v, w, &params.t, params.omega_mode)?;
        if int(om as u64) < params.k {
            return Err(Error::precondition("ω_t ≥ K", format!("edge ({v}, {w}) has ω_t = {om}")));
        }
    }
    if let Some((side, x)) = property2_violations(system, e_prime, params)?.first() {
        return Err(Error::precondition("neighborhood mass", format!("{side:?} vertex {x}")));
    }
    Ok(())
}

/// Checks the squared resolution inequality and its supporting identities on
/// a peeled, structured edge set.
pub fn resolution_check(system: &PairSystem, e_prime: &EdgeSet, n: Natural, params: &Params) -> Result<ResolutionReport> {
    params.validate()?;
    check_preconditions(system, e_prime, n, params)?;
    let dec = Decomposition::new(e_prime, n)?;
    let sums = s_sums_with(system, e_prime, &dec, &params.t, &params.k)?;
    let (vs, ws) = restrict(e_prime);
    let mu_e = mu_pairs(system, e_prime)?;
    let mu_v = mu_set(&system.f, &system.psi, &vs)?;
    let mu_w = mu_set(&system.g, &system.theta, &ws)?;
    let qp = params.q_prime();
    let qp2 = &qp * &qp;
    let lhs_sq = &mu_e * &mu_e;
    let vw = &mu_v * &mu_w;
    let rhs = &qp2 * sums.sum() * &vw;
    let verdict = if lhs_sq <= rhs { Verdict::Holds } else { Verdict::Violated };

    let mut chain = vec![];
    let mut pointwise = vec![];
    if let Some(w0) = sums.w0 {
        let gamma_w0 = neighborhood_w(e_prime, w0);
        let mu_gamma_w0 = mu_set(&system.f, &system.psi, &gamma_w0)?;
        let mut double = Ratio::zero();
        for &v in &gamma_w0 {
            double += system.mu_v(v)? * mu_set(&system.g, &system.theta, &neighborhood_v(e_prime, v))?;
        }
        let l1 = &qp * &mu_e * mu_gamma_w0 * &mu_w;
        let l2 = &qp2 * &vw * double;
        let l3 = &qp2 * &vw * &sums.total_unsplit;
        chain.push(ChainLink { name: "neighborhood of w0", lhs: lhs_sq.clone(), rhs: l1.clone() });
        chain.push(ChainLink { name: "neighborhoods of v", lhs: l1, rhs: l2.clone() });
        chain.push(ChainLink { name: "pointwise weights", lhs: l2, rhs: l3.clone() });
        chain.push(ChainLink { name: "anatomy split", lhs: l3, rhs: rhs.clone() });

        let w0p = dec.w_plus(w0);
        for &v in &gamma_w0 {
            if system.psi.value(v) * int(dec.v_minus(v)) * int(w0p) > Ratio::one() {
                pointwise.push(format!("ψ({v}) > 1/(v⁻ w₀⁺) with w₀ = {w0}"));
            }
        }
        for (&w, &v0) in &sums.v0 {
            if system.theta.value(w) * int(dec.v_plus(v0)) * int(dec.w_minus(w)) > Ratio::one() {
                pointwise.push(format!("θ({w}) > 1/(v₀⁺ w⁻) with v₀ = {v0}"));
            }
        }
    }

    let tf = floor_u64(&params.t);
    let mut structure = vec![];
    let mut case_split = vec![];
    for &(v, w) in e_prime {
        let (vm, vp) = dec.v_parts[&v];
        let (wm, wp) = dec.w_parts[&w];
        if system.psi.value(v) * int(vm) * int(wp) > Ratio::one() {
            pointwise.push(format!("ψ({v}) > 1/(v⁻ w⁺) on ({v}, {w})"));
        }
        if system.theta.value(w) * int(vp) * int(wm) > Ratio::one() {
            pointwise.push(format!("θ({w}) > 1/(v⁺ w⁻) on ({v}, {w})"));
        }
        if int(v) * int(vm) != int(n) * int(vp) || int(w) * int(wm) != int(n) * int(wp) {
            structure.push(format!("reconstruction fails on ({v}, {w})"));
        }
        let parts = [vm, vp, wm, wp];
        let coprime = (0..4).all(|i| (i + 1..4).all(|j| gcd(parts[i], parts[j]) == 1));
        if !coprime {
            structure.push(format!("parts {parts:?} of ({v}, {w}) share a prime"));
        }
        let g = int(gcd(v, w));
        let lhs = int(v) * int(w) / (&g * &g);
        let prod: Ratio = parts.iter().map(|&x| int(x)).product();
        if lhs != prod {
            structure.push(format!("vw/gcd² = {lhs} but v⁻v⁺w⁻w⁺ = {prod} on ({v}, {w})"));
        }
        if int(omega_t_with(v, w, &params.t, params.omega_mode)? as u64) >= params.k {
            let mut any = false;
            for x in parts {
                any |= anatomy_condition(x, tf, &params.k)?;
            }
            if !any {
                case_split.push((v, w));
            }
        }
    }

    let majorant = s_majorant(&params.t, &params.k, &int(2))?;
    let majorant_holds = sums.as_array().iter().all(|s| **s <= majorant);
    let prec = params.precision_bits;
    let log_majorant_exp = if tf <= MAJORANT_T_CAP {
        Some(log_s_majorant_exp(&params.t, &params.k, &params.c, prec)?)
    } else {
        None
    };
    let log_mc_ratio = if mu_e.is_positive() && mu_v.is_positive() && mu_w.is_positive() {
        Some(log_mc_ratio(&mu_e, &mu_v, &mu_w, params)?)
    } else {
        None
    };

    Ok(ResolutionReport {
        n,
        sums,
        mu_e,
        mu_v,
        mu_w,
        lhs_sq,
        rhs,
        verdict,
        chain,
        pointwise_failures: pointwise,
        structure_failures: structure,
        case_split_failures: case_split,
        majorant_holds,
        majorant,
        log_majorant_exp,
        log_mc_ratio,
    })
}

fn log_mc_ratio(mu_e: &Ratio, mu_v: &Ratio, mu_w: &Ratio, params: &Params) -> Result<Interval> {
    let prec = params.precision_bits;
    let ln = |x: &Ratio| RealExpr::ln(RealExpr::Const(x.clone())).eval(prec);
    let half = Ratio::new(1.into(), 2.into());
    let exponent = Interval::point(&(&params.c * int(40)), prec).exp()?.sub(&Interval::one(prec)).mul_ratio(&half);
    let ln_log_t = RealExpr::log_t(RealExpr::Const(params.t.clone())).eval_ln(prec)?;
    let ten_ck = &params.c * &params.k * int(10);
    let denom = exponent
        .mul(&ln_log_t)
        .add(&ln(mu_v)?.add(&ln(mu_w)?).sub(&Interval::point(&ten_ck, prec)).mul_ratio(&half));
    Ok(ln(mu_e)?.sub(&denom))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arith::ratio;
    use crate::model::{MultiplicativeFunction, WeightFunction};

    fn weights(pairs: &[(u64, i64, i64)]) -> WeightFunction {
        WeightFunction::from_pairs(pairs.iter().map(|&(n, a, b)| (n, ratio(a, b)))).unwrap()
    }

    #[test]
    fn decompose_examples() {
        assert_eq!(decompose(6, 6).unwrap(), (1, 1));
        assert_eq!(decompose(4, 6).unwrap(), (3, 2));
        assert!(matches!(decompose(24, 6), Err(Error::NotStructured(_))));
        assert_eq!(coprime_part(12, 2).unwrap(), 3);
        assert_eq!(coprime_part(12, 5).unwrap(), 12);
    }

    #[test]
    fn structured_examples() {
        let n = 30;
        let e = |v, w| -> EdgeSet { [(v, w)].into_iter().collect() };
        assert!(check_structured(&e(n, n), n).unwrap());
        assert!(check_structured(&e(2 * n, n), n).unwrap());
        assert!(!check_structured(&e(2 * n, 2 * n), n).unwrap());
        assert_eq!(structure_violation(&e(2 * n, 2 * n), n).unwrap(), Some((60, 60, 2)));
    }

    #[test]
    fn single_edge_sums() {
        let s = PairSystem::new(
            weights(&[(1, 1, 1)]),
            weights(&[(1, 1, 1)]),
            MultiplicativeFunction::Totient,
            MultiplicativeFunction::Totient,
            [(1, 1)].into_iter().collect(),
        )
        .unwrap();
        let ss = s_sums(&s, &s.edges, 1, &int(10), &int(0)).unwrap();
        assert_eq!(ss.s1, Ratio::one());
        assert_eq!(ss.total_unsplit, Ratio::one());
        assert_eq!(ss.w0, Some(1));
        // 4 primes ≤ 10, so K = 17 is out of reach
        let ss = s_sums(&s, &s.edges, 1, &int(10), &int(17)).unwrap();
        assert!(ss.as_array().iter().all(|x| x.is_zero()));
        let ss = s_sums(&s, &EdgeSet::new(), 1, &int(10), &int(0)).unwrap();
        assert!(ss.degenerate());

        let p = Params::standard(ratio(1, 4), int(1), int(10), int(0)).unwrap();
        let r = resolution_check(&s, &s.edges, 1, &p).unwrap();
        assert_eq!(r.lhs_sq, Ratio::one());
        assert_eq!(r.verdict, Verdict::Holds);
        assert!(r.all_hold(), "{:?}", r.to_json());
    }

    #[test]
    fn four_factor_example() {
        // v = 4, w = 9, N = 6: v⁻ = 3, v⁺ = 2, w⁻ = 2, w⁺ = 3
        assert_eq!(decompose(4, 6).unwrap(), (3, 2));
        assert_eq!(decompose(9, 6).unwrap(), (2, 3));
        assert_eq!(3 * 2 * 2 * 3, 4 * 9 / gcd(4, 9).pow(2));
    }

    #[test]
    fn unstructured_input_is_a_precondition_error() {
        let s = PairSystem::new(
            weights(&[(4, 1, 100)]),
            weights(&[(4, 1, 100)]),
            MultiplicativeFunction::Totient,
            MultiplicativeFunction::Totient,
            [(4, 4)].into_iter().collect(),
        )
        .unwrap();
        let p = Params::standard(ratio(1, 4), int(1), int(10), int(0)).unwrap();
        match resolution_check(&s, &s.edges, 1, &p) {
            Err(Error::Precondition { property, .. }) => assert_eq!(property, "arithmetic structure"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn small_structured_instance() {
        // N = 6 and vertices within one prime step of it
        let psi = weights(&[(6, 1, 6), (12, 1, 12), (3, 1, 6)]);
        let theta = weights(&[(6, 1, 6), (2, 1, 6), (18, 1, 18)]);
        let edges: EdgeSet = [(6, 6), (12, 6), (6, 2), (3, 6), (6, 18)].into_iter().collect();
        let s = PairSystem::new(psi, theta, MultiplicativeFunction::Totient, MultiplicativeFunction::Totient, edges).unwrap();
        for &(v, w) in &s.edges {
            assert!(d_le_one(v, w, &s.psi, &s.theta), "({v}, {w})");
        }
        let p = Params::standard(ratio(1, 4), int(1), int(10), int(0)).unwrap();
        let peeled = crate::diagonal::peel(&s, &s.edges, &p).unwrap().edges;
        assert!(!peeled.is_empty());
        let r = resolution_check(&s, &peeled, 6, &p).unwrap();
        assert!(r.all_hold(), "{}", r.to_json());
        assert!(r.sums.total_unsplit <= r.sums.sum());
    }

    #[test]
    fn majorant_examples() {
        // K = 0 and t = 3: (3/2)(4/3) = 2 at γ = 2
        assert_eq!(s_majorant(&int(3), &int(0), &int(2)).unwrap(), int(2));
        // ⌈5/4⌉ = 2
        assert_eq!(s_majorant(&int(3), &int(5), &int(2)).unwrap(), ratio(1, 2));
        let iv = log_s_majorant_exp(&int(1), &int(4), &int(1), 128).unwrap();
        assert!(iv.contains(&ratio(-40, 1)));
    }
}
