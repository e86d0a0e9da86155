//! Prime-slice compression.
//!
//! For a prime `p` and valuations `(i, j)`, the slice keeps the pairs whose
//! left entry has `ν_p = i` and right entry has `ν_p = j`, strips `p` from both
//! sides and rescales the weights so that the quality `D` is unchanged:
//!
//! ```text
//! ψ̃(v) = p^{j-min(i,j)} ψ(p^i v),   θ̃(w) = p^{i-min(i,j)} θ(p^j w)   (p ∤ v, w)
//! ```

use std::collections::BTreeSet;
use std::fmt;

use num_traits::{One, Zero};
use serde::Serialize;

use crate::arith::{int, valuation_u64, Ratio};
use crate::error::{Error, Result};
use crate::model::{mu_pairs, mu_set, EdgeSet, Natural, PairSystem, WeightFunction};
use crate::quality::{d_value, k_threshold, omega_t_with, prime_set, OmegaMode};

/// A slice `(ψ̃, θ̃, f, g, 𝓔̃)` together with the source cells `V_i`, `W_j`.
#[derive(Clone, Debug)]
pub struct Slice {
    pub p: u64,
    pub i: u32,
    pub j: u32,
    pub system: PairSystem,
    /// `V_i = {v ∈ supp ψ : ν_p(v) = i}`.
    pub v_cell: BTreeSet<Natural>,
    /// `W_j = {w ∈ supp θ : ν_p(w) = j}`.
    pub w_cell: BTreeSet<Natural>,
}

fn checked_pow(p: u64, e: u32) -> Result<u64> {
    p.checked_pow(e).ok_or_else(|| Error::Overflow(format!("{p}^{e}")))
}

/// Builds the `(p, i, j)` slice of `system`.
pub fn slice(system: &PairSystem, p: u64, i: u32, j: u32) -> Result<Slice> {
    if !crate::arith::is_prime(p) {
        return Err(Error::invalid(format!("{p} is not prime")));
    }
    system.f.at_prime_power(p, i)?;
    system.g.at_prime_power(p, j)?;
    let m = i.min(j);
    let pi = checked_pow(p, i)?;
    let pj = checked_pow(p, j)?;
    let scale_v = int(checked_pow(p, j - m)?);
    let scale_w = int(checked_pow(p, i - m)?);

    let v_cell: BTreeSet<Natural> = system.psi.support().filter(|&v| valuation_u64(p, v) == i).collect();
    let w_cell: BTreeSet<Natural> = system.theta.support().filter(|&w| valuation_u64(p, w) == j).collect();
    let psi = WeightFunction::from_pairs(v_cell.iter().map(|&v| (v / pi, &scale_v * system.psi.value(v))))?;
    let theta = WeightFunction::from_pairs(w_cell.iter().map(|&w| (w / pj, &scale_w * system.theta.value(w))))?;
    let edges: EdgeSet = system
        .edges
        .iter()
        .filter(|(v, w)| v_cell.contains(v) && w_cell.contains(w))
        .map(|&(v, w)| (v / pi, w / pj))
        .collect();
    let sys = PairSystem::new(psi, theta, system.f.clone(), system.g.clone(), edges)?;
    Ok(Slice { p, i, j, system: sys, v_cell, w_cell })
}

/// Status of one identity.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "status", rename_all = "lowercase")]
pub enum IdentityStatus {
    Holds,
    Vacuous { reason: String },
    Failed { counterexample: String },
}

#[derive(Clone, Debug, Serialize)]
pub struct IdentityRow {
    pub name: &'static str,
    #[serde(flatten)]
    pub status: IdentityStatus,
}

/// Outcome of [`verify_slice_identities`], one row per identity.
#[derive(Clone, Debug, Serialize)]
pub struct IdentityReport {
    pub p: u64,
    pub i: u32,
    pub j: u32,
    pub rows: Vec<IdentityRow>,
}

impl IdentityReport {
    pub fn failures(&self) -> impl Iterator<Item = &IdentityRow> {
        self.rows.iter().filter(|r| matches!(r.status, IdentityStatus::Failed { .. }))
    }

    pub fn all_hold(&self) -> bool {
        self.failures().next().is_none()
    }

    pub fn status(&self, name: &str) -> Option<&IdentityStatus> {
        self.rows.iter().find(|r| r.name == name).map(|r| &r.status)
    }
}

impl fmt::Display for IdentityReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "slice p={} i={} j={}", self.p, self.i, self.j)?;
        for r in &self.rows {
            match &r.status {
                IdentityStatus::Holds => writeln!(f, "  {}: holds", r.name)?,
                IdentityStatus::Vacuous { reason } => writeln!(f, "  {}: vacuous ({reason})", r.name)?,
                IdentityStatus::Failed { counterexample } => writeln!(f, "  {}: FAILED {counterexample}", r.name)?,
            }
        }
        Ok(())
    }
}

fn eq_row(name: &'static str, lhs: &Ratio, rhs: &Ratio) -> IdentityRow {
    let status = if lhs == rhs {
        IdentityStatus::Holds
    } else {
        IdentityStatus::Failed { counterexample: format!("lhs {lhs} != rhs {rhs}") }
    };
    IdentityRow { name, status }
}

/// `ω` shift between a slice pair and its source pair: the identity
/// `ω_t(v,w) = ω_t(p^i v, p^j w) - shift`.
pub fn omega_shift(p: u64, i: u32, j: u32, t: &Ratio, mode: OmegaMode) -> u32 {
    let small = int(p) <= *t;
    let differs = match mode {
        OmegaMode::Squared => i != j,
        OmegaMode::Lcm => i.max(j) > 0,
    };
    (small && differs) as u32
}

/// Checks the exact identities relating a slice to its source:
///
/// * `a`: `μ_ψ̃^f(Ṽ_i) = p^{j-m} (p^i / f(p^i)) μ_ψ^f(V_i)`
/// * `b`: `μ_θ̃^g(W̃_j) = p^{i-m} (p^j / g(p^j)) μ_θ^g(W_j)`
/// * `c`: `μ(𝓔̃) = p^{i+j} / (f(p^i) g(p^j)) · p^{|i-j|} · μ(𝓔 ∩ V_i×W_j)`
/// * `d`: `D_{ψ̃,θ̃}(v,w) = D_{ψ,θ}(p^i v, p^j w)` on every slice edge
/// * `e`: `ω_t(v,w) = ω_t(p^i v, p^j w) - 1_{i≠j, p≤t}` on every slice edge
/// * `f`: the slice's prime set avoids `p` and sits inside the source's
/// * `containment`: slice edges lie in `𝓔_{ψ̃,θ̃}^{t, K - 1_{i≠j, p≤t}}` when the
///   source edges lie in `𝓔_{ψ,θ}^{t,K}`
pub fn verify_slice_identities(
    source: &PairSystem,
    s: &Slice,
    t: &Ratio,
    k: &Ratio,
    mode: OmegaMode,
) -> Result<IdentityReport> {
    let (p, i, j) = (s.p, s.i, s.j);
    let m = i.min(j);
    let pp = |e: u32| int(p).pow(e as i32);
    let fi = source.f.at_prime_power(p, i)?;
    let gj = source.g.at_prime_power(p, j)?;
    let mut rows = Vec::new();

    let mu_vt = s.system.mu_psi_support()?;
    let mu_wt = s.system.mu_theta_support()?;
    if fi.is_zero() {
        rows.push(IdentityRow {
            name: "a",
            status: IdentityStatus::Vacuous { reason: format!("zero multiplier f({p}^{i}) = 0") },
        });
    } else {
        let rhs = pp(j - m) * pp(i) / &fi * mu_set(&source.f, &source.psi, &s.v_cell)?;
        rows.push(eq_row("a", &mu_vt, &rhs));
    }
    if gj.is_zero() {
        rows.push(IdentityRow {
            name: "b",
            status: IdentityStatus::Vacuous { reason: format!("zero multiplier g({p}^{j}) = 0") },
        });
    } else {
        let rhs = pp(i - m) * pp(j) / &gj * mu_set(&source.g, &source.theta, &s.w_cell)?;
        rows.push(eq_row("b", &mu_wt, &rhs));
    }

    let src_cell: EdgeSet =
        source.edges.iter().filter(|(v, w)| s.v_cell.contains(v) && s.w_cell.contains(w)).copied().collect();
    if fi.is_zero() || gj.is_zero() {
        rows.push(IdentityRow {
            name: "c",
            status: IdentityStatus::Vacuous { reason: "zero multiplier f(p^i) g(p^j) = 0".into() },
        });
    } else {
        let lhs = mu_pairs(&s.system, &s.system.edges)?;
        let rhs = pp(i + j) / (&fi * &gj) * pp(i.abs_diff(j)) * mu_pairs(source, &src_cell)?;
        rows.push(eq_row("c", &lhs, &rhs));
    }

    let (pi, pj) = (p.pow(i), p.pow(j));
    let mut d_status = IdentityStatus::Holds;
    let mut e_status = IdentityStatus::Holds;
    let mut contain_status = IdentityStatus::Holds;
    let shift = omega_shift(p, i, j, t, mode);
    let kmin_src = k_threshold(k);
    let k_slice = k - int(shift as u64);
    let kmin_slice = k_threshold(&k_slice);
    let mut source_in_class = true;
    for &(v, w) in &source.edges {
        if d_value(v, w, &source.psi, &source.theta) > Ratio::one() || omega_t_with(v, w, t, mode)? < kmin_src {
            source_in_class = false;
            break;
        }
    }
    for &(v, w) in &s.system.edges {
        let (sv, sw) = (pi * v, pj * w);
        let dt = d_value(v, w, &s.system.psi, &s.system.theta);
        let ds = d_value(sv, sw, &source.psi, &source.theta);
        if dt != ds && d_status == IdentityStatus::Holds {
            d_status = IdentityStatus::Failed { counterexample: format!("pair ({v},{w}): D~ = {dt}, D = {ds}") };
        }
        let wt = omega_t_with(v, w, t, mode)?;
        let ws = omega_t_with(sv, sw, t, mode)?;
        if wt + shift != ws && e_status == IdentityStatus::Holds {
            e_status = IdentityStatus::Failed {
                counterexample: format!("pair ({v},{w}): omega~ = {wt}, omega = {ws}, shift = {shift}"),
            };
        }
        if source_in_class && (dt > Ratio::one() || wt < kmin_slice) && contain_status == IdentityStatus::Holds {
            contain_status = IdentityStatus::Failed {
                counterexample: format!("pair ({v},{w}) has D~ = {dt}, omega~ = {wt}, K - shift = {k_slice}"),
            };
        }
    }
    rows.push(IdentityRow { name: "d", status: d_status });
    rows.push(IdentityRow { name: "e", status: e_status });

    let sp = prime_set(&s.system.psi, &s.system.theta)?;
    let src = prime_set(&source.psi, &source.theta)?;
    let f_status = match sp.iter().find(|&&q| q == p || !src.contains(&q)) {
        None => IdentityStatus::Holds,
        Some(q) => IdentityStatus::Failed { counterexample: format!("prime {q} in slice prime set") },
    };
    rows.push(IdentityRow { name: "f", status: f_status });
    if source_in_class {
        rows.push(IdentityRow { name: "containment", status: contain_status });
    } else {
        rows.push(IdentityRow {
            name: "containment",
            status: IdentityStatus::Vacuous { reason: "source edges not inside the quality class".into() },
        });
    }
    Ok(IdentityReport { p, i, j, rows })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arith::ratio;
    use crate::model::MultiplicativeFunction;
    use crate::quality::build_edge_set;

    fn wf(pairs: &[(u64, i64, i64)]) -> WeightFunction {
        WeightFunction::from_pairs(pairs.iter().map(|&(n, a, b)| (n, ratio(a, b)))).unwrap()
    }

    #[test]
    fn slice_example_p3() {
        let psi = wf(&[(3, 1, 4)]);
        let theta = wf(&[(2, 1, 5), (9, 1, 9)]);
        let sys = PairSystem::totient(psi, theta);
        let s = slice(&sys, 3, 1, 0).unwrap();
        assert_eq!(s.system.psi.support().collect::<Vec<_>>(), vec![1]);
        assert_eq!(s.system.psi.value(1), ratio(1, 4));
        assert_eq!(s.system.theta.value(2), ratio(3, 5));
        assert!(!s.system.theta.contains(9) && !s.system.theta.contains(3));
        // identity (a): 1/4 = (3/2)(1/6)
        assert_eq!(s.system.mu_psi_support().unwrap(), ratio(1, 4));
        let r = verify_slice_identities(&sys, &s, &int(10), &int(0), OmegaMode::Squared).unwrap();
        assert!(r.all_hold(), "{r}");
        assert_eq!(r.status("a"), Some(&IdentityStatus::Holds));
    }

    #[test]
    fn diagonal_slice_keeps_weights() {
        let psi = wf(&[(6, 1, 7), (12, 1, 13)]);
        let sys = PairSystem::totient(psi.clone(), psi.clone());
        let s = slice(&sys, 2, 1, 1).unwrap();
        assert_eq!(s.system.psi.value(3), ratio(1, 7));
        assert_eq!(s.system.theta.value(3), ratio(1, 7));
    }

    #[test]
    fn empty_cell_gives_empty_slice() {
        let psi = wf(&[(5, 1, 7)]);
        let sys = PairSystem::totient(psi.clone(), psi);
        let s = slice(&sys, 2, 2, 0).unwrap();
        assert!(s.system.psi.is_empty() && s.system.edges.is_empty());
    }

    #[test]
    fn identities_on_small_instance() {
        let psi = wf(&[(1, 1, 2), (2, 1, 2), (3, 1, 3), (4, 1, 4), (6, 1, 6), (12, 1, 12), (9, 1, 9), (18, 1, 18)]);
        let t = int(10);
        for k in [int(0), int(1), int(2)] {
            let edges = build_edge_set(&psi, &psi, &t, &k).unwrap();
            let sys = PairSystem::totient(psi.clone(), psi.clone()).with_edges(edges).unwrap();
            for p in [2, 3, 5] {
                for i in 0..3 {
                    for j in 0..3 {
                        let s = slice(&sys, p, i, j).unwrap();
                        let r = verify_slice_identities(&sys, &s, &t, &k, OmegaMode::Squared).unwrap();
                        assert!(r.all_hold(), "{r}");
                    }
                }
            }
        }
    }

    #[test]
    fn prime_above_t_leaves_omega_unchanged() {
        assert_eq!(omega_shift(11, 2, 0, &int(10), OmegaMode::Squared), 0);
        assert_eq!(omega_shift(7, 2, 0, &int(10), OmegaMode::Squared), 1);
        assert_eq!(omega_shift(7, 1, 1, &int(10), OmegaMode::Squared), 0);
    }

    #[test]
    fn zero_multiplier_is_vacuous() {
        let psi = wf(&[(2, 1, 2), (4, 1, 4)]);
        let f = MultiplicativeFunction::Table([((2, 1), Ratio::zero()), ((2, 2), int(1))].into_iter().collect());
        let sys = PairSystem { f: f.clone(), g: f, ..PairSystem::totient(psi.clone(), psi) };
        let s = slice(&sys, 2, 1, 2).unwrap();
        let r = verify_slice_identities(&sys, &s, &int(10), &int(0), OmegaMode::Squared).unwrap();
        assert!(matches!(r.status("a"), Some(IdentityStatus::Vacuous { .. })));
        assert!(matches!(r.status("c"), Some(IdentityStatus::Vacuous { .. })));
        assert_eq!(r.status("b"), Some(&IdentityStatus::Holds));
    }

    #[test]
    fn slicing_commutes_across_primes() {
        let psi = wf(&[(6, 1, 6), (12, 1, 12), (18, 1, 18), (3, 1, 3), (2, 1, 2), (36, 1, 36)]);
        let edges = build_edge_set(&psi, &psi, &int(10), &int(0)).unwrap();
        let sys = PairSystem::totient(psi.clone(), psi).with_edges(edges).unwrap();
        let a = slice(&slice(&sys, 2, 1, 2).unwrap().system, 3, 1, 0).unwrap();
        let b = slice(&slice(&sys, 3, 1, 0).unwrap().system, 2, 1, 2).unwrap();
        assert_eq!(a.system.edges, b.system.edges);
        assert_eq!(a.system.psi, b.system.psi);
    }
}
