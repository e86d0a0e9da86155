mod common;

use std::collections::{BTreeMap, BTreeSet};

use num_traits::{One, Zero};
use proptest::prelude::*;

use common::*;
use qds::anatomy::{divisor_rankin_product, divisor_rankin_sum};
use qds::arith::{factorize, valuation, Interval, RealExpr};
use qds::compress::slice;
use qds::diagonal::concentrate;
use qds::harness::{certify_campaign, kmy_report, rescale_kmy, CampaignOptions, GeneratorConfig};
use qds::model::{mu_pairs, mu_set, MultiplicativeFunction, PairSystem, WeightFunction};
use qds::quality::{build_edge_set, d_value, omega_t};

fn weights() -> impl Strategy<Value = WeightFunction> {
    prop::collection::btree_map(1u64..=400, (1i64..=3, 1i64..=400), 1..25).prop_map(|m| {
        WeightFunction::from_pairs(m.into_iter().map(|(n, (a, b))| (n, q(a, b)))).unwrap()
    })
}

fn system() -> impl Strategy<Value = PairSystem> {
    (weights(), weights()).prop_map(|(psi, theta)| PairSystem::totient(psi, theta))
}

fn positive() -> impl Strategy<Value = Q> {
    (1i64..=1000, 1i64..=1000).prop_map(|(a, b)| q(a, b))
}

#[test]
fn factorization_reconstructs_every_n() {
    for n in 1..=100_000u64 {
        let f = factorize(n).unwrap();
        assert!(f.windows(2).all(|w| w[0].0 < w[1].0), "{n}");
        assert!(f.iter().all(|&(_, a)| a >= 1));
        assert_eq!(f.iter().map(|&(p, a)| p.pow(a)).product::<u64>(), n);
    }
}

#[test]
fn divisor_rankin_factorization_identity() {
    let f = MultiplicativeFunction::Totient;
    for m in 1..=5000u64 {
        for t in [2u64, 10, 100] {
            for g in [q(3, 2), qi(2), qi(4)] {
                let a = divisor_rankin_sum(m, &qi(t), &g, &f).unwrap();
                assert_eq!(a, divisor_rankin_product(m, &qi(t), &g, &f).unwrap(), "M = {m}, t = {t}, γ = {g}");
            }
        }
    }
}

#[test]
fn campaign_is_deterministic_and_tallies_add_up() {
    let cfg = GeneratorConfig { seed: 9, support_max: 40, ..Default::default() };
    let opts = CampaignOptions::standard();
    let a = certify_campaign(&cfg, 24, &opts).unwrap();
    let b = certify_campaign(&cfg, 24, &opts).unwrap();
    let t = &a.tallies;
    assert_eq!(t.holds + t.violated + t.inconclusive, 24);
    let strip = |r: &qds::harness::CampaignReport| {
        r.rows.iter().map(|row| (row.seed, row.lhs.clone(), row.rhs_lo.clone(), row.resolution.clone())).collect::<Vec<_>>()
    };
    assert_eq!(strip(&a), strip(&b));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn valuation_is_additive(a in positive(), b in positive(), p in prop::sample::select(vec![2u64, 3, 5, 7, 11, 13])) {
        let lhs = valuation(p, &(&a * &b)).unwrap();
        prop_assert_eq!(lhs, valuation(p, &a).unwrap() + valuation(p, &b).unwrap());
    }

    #[test]
    fn enclosures_nest_under_doubled_precision(a in 1i64..=5000, b in 1i64..=500, bits in 16u32..=128) {
        let x = q(a, b);
        let e = RealExpr::exp(RealExpr::ln(RealExpr::Const(x.clone())));
        let reference = RealExpr::ln(RealExpr::Const(x.clone())).eval(1024).unwrap();
        let coarse = e.eval(bits).unwrap();
        let fine = e.eval(2 * bits).unwrap();
        prop_assert!(coarse.contains(&x) && fine.contains(&x));
        prop_assert!(fine.width() <= coarse.width());
        let l = RealExpr::ln(RealExpr::Const(x)).eval(bits).unwrap();
        prop_assert!(l.lo() <= reference.lo() && reference.hi() <= l.hi());
    }

    #[test]
    fn mu_is_additive_and_bounded(sys in system(), mask in any::<u64>()) {
        let vs: Vec<u64> = sys.psi.support().collect();
        let (s1, s2): (BTreeSet<u64>, BTreeSet<u64>) = {
            let (a, b): (Vec<_>, Vec<_>) = vs.iter().enumerate().partition(|(i, _)| mask >> (i % 64) & 1 == 1);
            (a.into_iter().map(|x| *x.1).collect(), b.into_iter().map(|x| *x.1).collect())
        };
        let all: BTreeSet<u64> = vs.iter().copied().collect();
        let f = &sys.f;
        prop_assert_eq!(mu_set(f, &sys.psi, &all).unwrap(), mu_set(f, &sys.psi, &s1).unwrap() + mu_set(f, &sys.psi, &s2).unwrap());
        let ws: BTreeSet<u64> = sys.theta.support().collect();
        let e: BTreeSet<(u64, u64)> = s1.iter().flat_map(|&v| ws.iter().map(move |&w| (v, w))).filter(|&(v, w)| (v ^ w ^ mask) % 3 != 0).collect();
        let sys = sys.with_edges(e.clone()).unwrap();
        prop_assert!(mu_pairs(&sys, &e).unwrap() <= mu_set(f, &sys.psi, &all).unwrap() * mu_set(&sys.g, &sys.theta, &ws).unwrap());
        prop_assert_eq!(mu_pairs(&sys, &e).unwrap(), mu_edges(&weights_of(&sys.psi), &weights_of(&sys.theta), &e));
    }

    #[test]
    fn table_function_evaluates_multiplicatively(n in 1u64..=5000) {
        let table: BTreeMap<(u64, u32), Q> = (2..=5000u64)
            .filter(|&p| is_prime(p) && n % p == 0)
            .flat_map(|p| (1..=13).map(move |a| ((p, a), q(1, (p + a as u64) as i64))))
            .collect();
        let f = MultiplicativeFunction::Table(table);
        let expect: Q = trial_factor(n).iter().map(|&(p, a)| q(1, (p + a as u64) as i64)).product();
        prop_assert_eq!(f.eval(n).unwrap(), expect);
    }

    #[test]
    fn quality_and_omega_are_symmetric(sys in system(), t in 1u64..=60) {
        for v in sys.psi.support() {
            for w in sys.theta.support() {
                prop_assert_eq!(d_value(v, w, &sys.psi, &sys.theta), d_value(w, v, &sys.theta, &sys.psi));
                prop_assert_eq!(omega_t(v, w, &qi(t)).unwrap(), omega_t(w, v, &qi(t)).unwrap());
                prop_assert_eq!(omega_t(v, w, &qi(t)).unwrap(), omega_squared(v, w, t));
            }
        }
    }

    #[test]
    fn edge_sets_shrink_with_k_and_grow_with_t(sys in system(), t in 1u64..=40, k in 0u64..=4) {
        let e = |t: u64, k: u64| build_edge_set(&sys.psi, &sys.theta, &qi(t), &qi(k)).unwrap();
        let base = e(t, k);
        prop_assert!(e(t, k + 1).is_subset(&base));
        prop_assert!(base.is_subset(&e(t + 7, k)));
        for &(v, w) in &base {
            prop_assert!(sys.psi.contains(v) && sys.theta.contains(w));
        }
    }

    #[test]
    fn rescaling_transforms_quality_exactly(sys in system(), y in positive(), cut in 1u64..=400) {
        let scaled = rescale_kmy(&sys.psi, &y, cut).unwrap();
        prop_assert!(scaled.support().all(|n| n <= cut));
        for v in scaled.support() {
            for w in sys.theta.support() {
                let expect = (qi(w) * sys.psi.value(v) / &y).max(qi(v) * sys.theta.value(w)) / qi(gcd(v, w));
                prop_assert_eq!(d_value(v, w, &scaled, &sys.theta), expect);
            }
        }
    }

    #[test]
    fn kmy_report_matches_recomputation(psi in weights(), y in positive(), cut in 1u64..=400, t in 1u64..=30) {
        let r = kmy_report(&psi, &y, cut, &qi(t), &q(1, 2), &qi(1), &q(1, 4), 128).unwrap();
        let scaled: BTreeMap<u64, Q> = weights_of(&psi).into_iter().filter(|&(n, _)| n <= cut).map(|(n, x)| (n, x / &y)).collect();
        let kk = (1..).find(|&k| {
            let iv = RealExpr::ln(RealExpr::Const(qi(t))).eval(256).unwrap().mul_ratio(&q(1, 2));
            qi(k) >= iv.hi()
        }).unwrap();
        let kk = if t == 1 { 0 } else { kk };
        prop_assert_eq!(r.k as u64, kk);
        let e = edge_oracle(&scaled, &scaled, t, &qi(kk));
        prop_assert_eq!(&r.edges, &e);
        prop_assert_eq!(r.lhs, mu_edges(&scaled, &scaled, &e));
    }

    #[test]
    fn slicing_commutes_across_primes(sys in system(), i in 0u32..=2, j in 0u32..=2, k in 0u32..=2, l in 0u32..=2) {
        let e = build_edge_set(&sys.psi, &sys.theta, &qi(10), &Q::zero()).unwrap();
        let sys = sys.with_edges(e).unwrap();
        let (p, r) = (2, 3);
        let a = slice(&slice(&sys, p, i, j).unwrap().system, r, k, l).unwrap().system;
        let b = slice(&slice(&sys, r, k, l).unwrap().system, p, i, j).unwrap().system;
        prop_assert_eq!(&a.edges, &b.edges);
        prop_assert_eq!(weights_of(&a.psi), weights_of(&b.psi));
        prop_assert_eq!(weights_of(&a.theta), weights_of(&b.theta));
    }

    #[test]
    fn concentration_splits_mass_exactly(sys in system()) {
        let e = build_edge_set(&sys.psi, &sys.theta, &qi(10), &Q::zero()).unwrap();
        let sys = sys.with_edges(e.clone()).unwrap();
        prop_assume!(!mu_pairs(&sys, &e).unwrap().is_zero());
        let c = concentrate(&sys, &e).unwrap();
        let rest: BTreeSet<(u64, u64)> = e.difference(&c.e_star).copied().collect();
        let (psi, theta) = (weights_of(&sys.psi), weights_of(&sys.theta));
        prop_assert_eq!(mu_edges(&psi, &theta, &c.e_star) + mu_edges(&psi, &theta, &rest), mu_edges(&psi, &theta, &e));
        prop_assert_eq!(&c.removed_fraction * &c.mu_e, mu_edges(&psi, &theta, &rest));
        for &(v, w) in &c.e_star {
            prop_assert!(split(v, c.n).is_some() && split(w, c.n).is_some());
            let (vm, vp) = split(v, c.n).unwrap();
            let (wm, wp) = split(w, c.n).unwrap();
            prop_assert!(gcd(vm * vp, wm * wp) == 1);
        }
    }

    #[test]
    fn intervals_enclose_their_endpoints(a in 1i64..=100, b in 1i64..=100, bits in 8u32..=64) {
        let iv = Interval::point(&q(a, b), bits);
        prop_assert!(iv.lo() <= q(a, b) && q(a, b) <= iv.hi());
        prop_assert!(Interval::one(bits).contains(&Q::one()));
    }
}
