//! Weight functions, multiplicative weights, pair systems and their measures.
//!
//! `μ_ψ^f(v) = f(v) ψ(v) / v`, extended additively to sets of vertices and,
//! through products `μ_ψ^f(v) μ_θ^g(w)`, to sets of pairs.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};

use crate::arith::{factorize, int, Ratio};
use crate::error::{Error, Result};

/// A natural number. Supports are kept well below the factorization limit.
pub type Natural = u64;

/// Edge sets are kept sorted so that every serialization is canonical.
pub type EdgeSet = BTreeSet<(Natural, Natural)>;

/// Finitely supported map `ℕ → ℚ_{>0}`; absent keys have value zero.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct WeightFunction {
    table: BTreeMap<Natural, Ratio>,
}

impl WeightFunction {
    pub fn new() -> Self {
        Self::default()
    }

    /// Builds a weight function from `(n, value)` pairs. Zero or negative
    /// values and `n = 0` are rejected.
    pub fn from_pairs(pairs: impl IntoIterator<Item = (Natural, Ratio)>) -> Result<Self> {
        let mut w = Self::new();
        for (n, x) in pairs {
            w.insert(n, x)?;
        }
        Ok(w)
    }

    pub fn insert(&mut self, n: Natural, value: Ratio) -> Result<()> {
        if n == 0 {
            return Err(Error::invalid("weight functions are defined on positive integers"));
        }
        if !value.is_positive() {
            return Err(Error::invalid(format!(
                "weight at {n} must be positive (absent keys mean zero), got {value}"
            )));
        }
        self.table.insert(n, value);
        Ok(())
    }

    pub fn get(&self, n: Natural) -> Option<&Ratio> {
        self.table.get(&n)
    }

    /// `ψ(n)`, zero outside the support.
    pub fn value(&self, n: Natural) -> Ratio {
        self.table.get(&n).cloned().unwrap_or_else(Ratio::zero)
    }

    pub fn contains(&self, n: Natural) -> bool {
        self.table.contains_key(&n)
    }

    /// The support, ascending.
    pub fn support(&self) -> impl Iterator<Item = Natural> + '_ {
        self.table.keys().copied()
    }

    pub fn support_set(&self) -> BTreeSet<Natural> {
        self.table.keys().copied().collect()
    }

    pub fn iter(&self) -> impl Iterator<Item = (Natural, &Ratio)> + '_ {
        self.table.iter().map(|(&n, x)| (n, x))
    }

    pub fn len(&self) -> usize {
        self.table.len()
    }

    pub fn is_empty(&self) -> bool {
        self.table.is_empty()
    }

    /// Keeps only the support points selected by `keep`.
    pub fn restrict(&self, mut keep: impl FnMut(Natural) -> bool) -> Self {
        WeightFunction {
            table: self.table.iter().filter(|(&n, _)| keep(n)).map(|(&n, x)| (n, x.clone())).collect(),
        }
    }
}

/// A multiplicative function given by its values on prime powers, with
/// `f(1) = 1`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum MultiplicativeFunction {
    /// Euler's totient, `φ(p^a) = p^a - p^(a-1)`.
    Totient,
    /// Explicit `(p, a) ↦ f(p^a)` table; any prime power missing from the
    /// table is undefined.
    Table(BTreeMap<(Natural, u32), Ratio>),
}

/// Result of checking `(1⋆f)(p^a) ≤ p^a` on a list of prime powers.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum MultiplicativeCheck {
    Accept,
    /// First failing prime power with its convolution value.
    Reject { p: Natural, a: u32, convolution: Ratio },
    /// A prime-power value is negative.
    Negative { p: Natural, a: u32, value: Ratio },
}

impl fmt::Display for MultiplicativeCheck {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MultiplicativeCheck::Accept => f.write_str("accept"),
            MultiplicativeCheck::Reject { p, a, convolution } => {
                write!(f, "reject: (1*f)({p}^{a}) = {convolution} > {}", int(*p).pow(*a as i32))
            }
            MultiplicativeCheck::Negative { p, a, value } => write!(f, "reject: f({p}^{a}) = {value} < 0"),
        }
    }
}

impl MultiplicativeFunction {
    /// Table mapping every listed prime power, and every lower power of the
    /// same prime, to zero.
    pub fn zero_on(prime_powers: &[(Natural, u32)]) -> Self {
        MultiplicativeFunction::Table(
            prime_powers.iter().flat_map(|&(p, a)| (1..=a).map(move |b| ((p, b), Ratio::zero()))).collect(),
        )
    }

    pub fn at_prime_power(&self, p: Natural, a: u32) -> Result<Ratio> {
        if a == 0 {
            return Ok(Ratio::one());
        }
        match self {
            MultiplicativeFunction::Totient => {
                let hi = BigInt::from(p).pow(a);
                let lo = BigInt::from(p).pow(a - 1);
                Ok(Ratio::from_integer(hi - lo))
            }
            MultiplicativeFunction::Table(t) => {
                t.get(&(p, a)).cloned().ok_or_else(|| Error::IncompleteDefinition(format!("f({p}^{a})")))
            }
        }
    }

    /// `f(n)` as the product of prime-power values over the factorization of `n`.
    pub fn eval(&self, n: Natural) -> Result<Ratio> {
        if let MultiplicativeFunction::Totient = self {
            let mut phi = n;
            for (p, _) in factorize(n)? {
                phi = phi / p * (p - 1);
            }
            return Ok(int(phi));
        }
        let mut acc = Ratio::one();
        for (p, a) in factorize(n)? {
            acc *= self.at_prime_power(p, a)?;
            if acc.is_zero() {
                break;
            }
        }
        Ok(acc)
    }

    /// `(1⋆f)(p^a) = Σ_{b≤a} f(p^b)`.
    pub fn convolution_at(&self, p: Natural, a: u32) -> Result<Ratio> {
        let mut s = Ratio::zero();
        for b in 0..=a {
            s += self.at_prime_power(p, b)?;
        }
        Ok(s)
    }

    /// Accepts iff every listed prime power has nonnegative value and
    /// `(1⋆f)(p^a) ≤ p^a`. By multiplicativity this certifies
    /// `(1⋆f)(n) ≤ n` for every `n` built from the listed prime powers.
    pub fn validate(&self, prime_powers: &[(Natural, u32)]) -> Result<MultiplicativeCheck> {
        for &(p, a) in prime_powers {
            let value = self.at_prime_power(p, a)?;
            if value.is_negative() {
                return Ok(MultiplicativeCheck::Negative { p, a, value });
            }
            let convolution = self.convolution_at(p, a)?;
            if convolution > int(p).pow(a as i32) {
                return Ok(MultiplicativeCheck::Reject { p, a, convolution });
            }
        }
        Ok(MultiplicativeCheck::Accept)
    }
}

/// Free-function form of [`MultiplicativeFunction::validate`].
pub fn validate_multiplicative(f: &MultiplicativeFunction, prime_powers: &[(Natural, u32)]) -> Result<MultiplicativeCheck> {
    f.validate(prime_powers)
}

/// Every `(p, b)` with `1 ≤ b ≤ ν_p(n)` for some `n` in `ns`, sorted.
pub fn prime_powers_in(ns: impl IntoIterator<Item = Natural>) -> Result<Vec<(Natural, u32)>> {
    let mut max_exp: BTreeMap<Natural, u32> = BTreeMap::new();
    for n in ns {
        for (p, a) in factorize(n)? {
            let e = max_exp.entry(p).or_insert(0);
            *e = (*e).max(a);
        }
    }
    Ok(max_exp.into_iter().flat_map(|(p, a)| (1..=a).map(move |b| (p, b))).collect())
}

/// `μ_ψ^f(v) = f(v) ψ(v) / v`; zero off the support.
pub fn mu_point(f: &MultiplicativeFunction, psi: &WeightFunction, v: Natural) -> Result<Ratio> {
    match psi.get(v) {
        None => Ok(Ratio::zero()),
        Some(x) => Ok(f.eval(v)? * x / int(v)),
    }
}

pub fn mu_set<'a>(
    f: &MultiplicativeFunction,
    psi: &WeightFunction,
    s: impl IntoIterator<Item = &'a Natural>,
) -> Result<Ratio> {
    let mut acc = Ratio::zero();
    for &v in s {
        acc += mu_point(f, psi, v)?;
    }
    Ok(acc)
}

/// The tuple `(ψ, θ, f, g, 𝓔)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PairSystem {
    pub psi: WeightFunction,
    pub theta: WeightFunction,
    pub f: MultiplicativeFunction,
    pub g: MultiplicativeFunction,
    pub edges: EdgeSet,
}

impl PairSystem {
    /// Checks that every edge joins `supp ψ` to `supp θ`.
    pub fn new(
        psi: WeightFunction,
        theta: WeightFunction,
        f: MultiplicativeFunction,
        g: MultiplicativeFunction,
        edges: EdgeSet,
    ) -> Result<Self> {
        for &(v, w) in &edges {
            if !psi.contains(v) || !theta.contains(w) {
                return Err(Error::invalid(format!("edge ({v}, {w}) leaves supp ψ × supp θ")));
            }
        }
        Ok(PairSystem { psi, theta, f, g, edges })
    }

    /// Totient weights and no edges.
    pub fn totient(psi: WeightFunction, theta: WeightFunction) -> Self {
        PairSystem {
            psi,
            theta,
            f: MultiplicativeFunction::Totient,
            g: MultiplicativeFunction::Totient,
            edges: EdgeSet::new(),
        }
    }

    pub fn with_edges(&self, edges: EdgeSet) -> Result<Self> {
        PairSystem::new(self.psi.clone(), self.theta.clone(), self.f.clone(), self.g.clone(), edges)
    }

    pub fn mu_v(&self, v: Natural) -> Result<Ratio> {
        mu_point(&self.f, &self.psi, v)
    }

    pub fn mu_w(&self, w: Natural) -> Result<Ratio> {
        mu_point(&self.g, &self.theta, w)
    }

    /// `μ_ψ^f(V)` over the whole support.
    pub fn mu_psi_support(&self) -> Result<Ratio> {
        mu_set(&self.f, &self.psi, self.psi.table.keys())
    }

    pub fn mu_theta_support(&self) -> Result<Ratio> {
        mu_set(&self.g, &self.theta, self.theta.table.keys())
    }

    /// Validates `f` on the prime powers of `supp ψ` and `g` on those of `supp θ`.
    pub fn validate_weights(&self) -> Result<(MultiplicativeCheck, MultiplicativeCheck)> {
        let fp = prime_powers_in(self.psi.support())?;
        let gp = prime_powers_in(self.theta.support())?;
        Ok((self.f.validate(&fp)?, self.g.validate(&gp)?))
    }
}

/// `Σ_{(v,w)∈E} μ_ψ^f(v) μ_θ^g(w)`.
pub fn mu_pairs<'a>(system: &PairSystem, e: impl IntoIterator<Item = &'a (Natural, Natural)>) -> Result<Ratio> {
    let mut cache_v: HashMap<Natural, Ratio> = HashMap::new();
    let mut cache_w: HashMap<Natural, Ratio> = HashMap::new();
    let mut acc = Ratio::zero();
    for &(v, w) in e {
        if !cache_v.contains_key(&v) {
            cache_v.insert(v, system.mu_v(v)?);
        }
        if !cache_w.contains_key(&w) {
            cache_w.insert(w, system.mu_w(w)?);
        }
        acc += &cache_v[&v] * &cache_w[&w];
    }
    Ok(acc)
}

/// `Γ_E(v)` for `v` on the left side.
pub fn neighborhood_v(e: &EdgeSet, v: Natural) -> BTreeSet<Natural> {
    e.range((v, 0)..=(v, Natural::MAX)).map(|&(_, w)| w).collect()
}

/// `Γ_E(w)` for `w` on the right side.
pub fn neighborhood_w(e: &EdgeSet, w: Natural) -> BTreeSet<Natural> {
    e.iter().filter(|&&(_, x)| x == w).map(|&(v, _)| v).collect()
}

/// `(E|_V, E|_W)`.
pub fn restrict(e: &EdgeSet) -> (BTreeSet<Natural>, BTreeSet<Natural>) {
    (e.iter().map(|&(v, _)| v).collect(), e.iter().map(|&(_, w)| w).collect())
}

/// Measures of one side scaled to a common denominator, so that subset sums
/// are integer additions: `μ(v) = num[v] / denom`.
#[derive(Clone, Debug)]
pub struct Masses {
    pub denom: BigInt,
    pub num: HashMap<Natural, BigInt>,
}

impl Masses {
    pub fn new(f: &MultiplicativeFunction, weights: &WeightFunction) -> Result<Self> {
        let mut exact = Vec::with_capacity(weights.len());
        for v in weights.support() {
            exact.push((v, mu_point(f, weights, v)?));
        }
        let denom = crate::arith::common_denominator(exact.iter().map(|(_, x)| x));
        let num = exact
            .into_iter()
            .map(|(v, x)| {
                let scaled = x * Ratio::from_integer(denom.clone());
                (v, scaled.to_integer())
            })
            .collect();
        Ok(Masses { denom, num })
    }

    /// Scaled mass of `v`; zero off the support.
    pub fn of(&self, v: Natural) -> BigInt {
        self.num.get(&v).cloned().unwrap_or_else(BigInt::zero)
    }

    pub fn sum<'a>(&self, s: impl IntoIterator<Item = &'a Natural>) -> BigInt {
        s.into_iter().filter_map(|v| self.num.get(v)).sum()
    }

    pub fn to_ratio(&self, scaled: BigInt) -> Ratio {
        Ratio::new(scaled, self.denom.clone())
    }
}

/// Both sides of a pair system as [`Masses`].
#[derive(Clone, Debug)]
pub struct PairMasses {
    pub v: Masses,
    pub w: Masses,
}

impl PairMasses {
    pub fn new(system: &PairSystem) -> Result<Self> {
        Ok(PairMasses { v: Masses::new(&system.f, &system.psi)?, w: Masses::new(&system.g, &system.theta)? })
    }

    /// Scaled `μ(E)`, with denominator `v.denom * w.denom`.
    pub fn pair_sum<'a>(&self, e: impl IntoIterator<Item = &'a (Natural, Natural)>) -> BigInt {
        e.into_iter()
            .map(|(v, w)| match (self.v.num.get(v), self.w.num.get(w)) {
                (Some(a), Some(b)) => a * b,
                _ => BigInt::zero(),
            })
            .sum()
    }

    pub fn pair_denom(&self) -> BigInt {
        &self.v.denom * &self.w.denom
    }

    pub fn pair_ratio(&self, scaled: BigInt) -> Ratio {
        Ratio::new(scaled, self.pair_denom())
    }
}
