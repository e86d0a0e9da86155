//! Instance files, the seeded generator, the weight rescaling used to pass
//! from `(ψ, y)` to a single weight, and certification campaigns.

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};
use std::time::Instant;

use num_traits::{One, Signed, ToPrimitive, Zero};
use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::arith::interval::{DEFAULT_PRECISION_BITS, DEFAULT_PRECISION_CAP};
use crate::arith::{format_ratio, gcd, int, parse_ratio, primes_upto, ratio, Interval, Ratio, RealExpr, Verdict};
use crate::compress::{slice, verify_slice_identities};
use crate::diagonal::{concentrate, peel};
use crate::error::{Error, Result};
use crate::model::{mu_pairs, EdgeSet, MultiplicativeFunction, Natural, PairSystem, WeightFunction};
use crate::quality::{build_edge_set_with, main_bound_check, prime_set, BoundReport, OmegaMode, Params, DEFAULT_P0};
use crate::resolution::resolution_check;

/// Serialized form of [`Params`]; rationals are `"p/q"` strings.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParamsDoc {
    pub epsilon: String,
    #[serde(rename = "C", alias = "c")]
    pub c: String,
    pub t: String,
    #[serde(rename = "K", alias = "k")]
    pub k: String,
    #[serde(default = "default_p0")]
    pub p0: u64,
    #[serde(default = "default_bits")]
    pub precision_bits: u32,
    #[serde(default = "default_cap")]
    pub precision_cap: u32,
    #[serde(default)]
    pub omega_mode: OmegaMode,
}

fn default_p0() -> u64 {
    DEFAULT_P0
}

fn default_bits() -> u32 {
    DEFAULT_PRECISION_BITS
}

fn default_cap() -> u32 {
    DEFAULT_PRECISION_CAP
}

impl ParamsDoc {
    pub fn to_params(&self) -> Result<Params> {
        let mut p = Params::new(
            parse_ratio(&self.epsilon)?,
            parse_ratio(&self.c)?,
            parse_ratio(&self.t)?,
            parse_ratio(&self.k)?,
            self.p0,
            self.precision_bits,
        )?;
        p.precision_cap = self.precision_cap.max(self.precision_bits);
        p.omega_mode = self.omega_mode;
        Ok(p)
    }

    pub fn from_params(p: &Params) -> Self {
        ParamsDoc {
            epsilon: format_ratio(&p.epsilon),
            c: format_ratio(&p.c),
            t: format_ratio(&p.t),
            k: format_ratio(&p.k),
            p0: p.p0,
            precision_bits: p.precision_bits,
            precision_cap: p.precision_cap,
            omega_mode: p.omega_mode,
        }
    }
}

impl Default for ParamsDoc {
    fn default() -> Self {
        ParamsDoc {
            epsilon: "2/5".into(),
            c: "1".into(),
            t: "10".into(),
            k: "1".into(),
            p0: DEFAULT_P0,
            precision_bits: DEFAULT_PRECISION_BITS,
            precision_cap: DEFAULT_PRECISION_CAP,
            omega_mode: OmegaMode::Squared,
        }
    }
}

/// Serialized multiplicative function.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum FunctionDoc {
    Totient,
    /// Entries `[p, a, "f(p^a)"]`.
    Table { values: Vec<(u64, u32, String)> },
}

impl FunctionDoc {
    fn to_function(&self) -> Result<MultiplicativeFunction> {
        Ok(match self {
            FunctionDoc::Totient => MultiplicativeFunction::Totient,
            FunctionDoc::Table { values } => MultiplicativeFunction::Table(
                values.iter().map(|(p, a, v)| Ok(((*p, *a), parse_ratio(v)?))).collect::<Result<_>>()?,
            ),
        })
    }

    fn from_function(f: &MultiplicativeFunction) -> Self {
        match f {
            MultiplicativeFunction::Totient => FunctionDoc::Totient,
            MultiplicativeFunction::Table(t) => FunctionDoc::Table {
                values: t.iter().map(|(&(p, a), v)| (p, a, format_ratio(v))).collect(),
            },
        }
    }
}

fn default_totient() -> FunctionDoc {
    FunctionDoc::Totient
}

/// On-disk instance: a pair system plus optional parameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InstanceDoc {
    pub psi: BTreeMap<u64, String>,
    pub theta: BTreeMap<u64, String>,
    #[serde(default = "default_totient")]
    pub f: FunctionDoc,
    #[serde(default = "default_totient")]
    pub g: FunctionDoc,
    #[serde(default)]
    pub edges: Vec<(u64, u64)>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub params: Option<ParamsDoc>,
}

/// A pair system with the parameters it was generated or saved with.
#[derive(Clone, Debug, PartialEq)]
pub struct Instance {
    pub system: PairSystem,
    pub params: Option<Params>,
}

fn weights_from_doc(m: &BTreeMap<u64, String>) -> Result<WeightFunction> {
    WeightFunction::from_pairs(m.iter().map(|(&n, v)| parse_ratio(v).map(|r| (n, r))).collect::<Result<Vec<_>>>()?)
}

fn weights_to_doc(w: &WeightFunction) -> BTreeMap<u64, String> {
    w.iter().map(|(n, v)| (n, format_ratio(v))).collect()
}

impl Instance {
    pub fn from_doc(doc: &InstanceDoc) -> Result<Self> {
        let system = PairSystem::new(
            weights_from_doc(&doc.psi)?,
            weights_from_doc(&doc.theta)?,
            doc.f.to_function()?,
            doc.g.to_function()?,
            doc.edges.iter().copied().collect(),
        )?;
        let params = doc.params.as_ref().map(ParamsDoc::to_params).transpose()?;
        Ok(Instance { system, params })
    }

    pub fn to_doc(&self) -> InstanceDoc {
        InstanceDoc {
            psi: weights_to_doc(&self.system.psi),
            theta: weights_to_doc(&self.system.theta),
            f: FunctionDoc::from_function(&self.system.f),
            g: FunctionDoc::from_function(&self.system.g),
            edges: self.system.edges.iter().copied().collect(),
            params: self.params.as_ref().map(ParamsDoc::from_params),
        }
    }

    pub fn to_json_string(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&self.to_doc())?)
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        Instance::from_doc(&serde_json::from_str(s)?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Instance::from_json_str(&std::fs::read_to_string(path)?)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json_string()? + "\n")?;
        Ok(())
    }

    /// The stored parameters, or an error naming what is missing.
    pub fn params(&self) -> Result<&Params> {
        self.params.as_ref().ok_or_else(|| Error::IncompleteDefinition("instance parameters".into()))
    }
}

/// Settings for [`generate_instance`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GeneratorConfig {
    pub seed: u64,
    pub support_min: usize,
    pub support_max: usize,
    /// Weights are scaled by `a / value_numerator_bound` with
    /// `a ∈ [1, value_numerator_bound]`; a bound of 1 disables scaling.
    pub value_numerator_bound: u64,
    /// Support elements are products of primes up to this bound.
    pub prime_pool_bound: u64,
    /// Most prime factors (with multiplicity) per support element.
    pub max_factors: u32,
    /// Fraction of the other side each weight is capped against.
    pub density: String,
    /// Use one support and `θ = ψ`.
    pub symmetric: bool,
    pub params: ParamsDoc,
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        GeneratorConfig {
            seed: 42,
            support_min: 1,
            support_max: 100,
            value_numerator_bound: 4,
            prime_pool_bound: 50,
            max_factors: 4,
            density: "1/2".into(),
            symmetric: false,
            params: ParamsDoc::default(),
        }
    }
}

impl GeneratorConfig {
    pub fn load(path: &Path) -> Result<Self> {
        Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
    }
}

fn draw_support(rng: &mut ChaCha8Rng, pool: &[u64], size: usize, max_factors: u32) -> BTreeSet<Natural> {
    let mut out = BTreeSet::new();
    let mut attempts = 0;
    while out.len() < size && attempts < 50 * size.max(1) {
        attempts += 1;
        let r = rng.random_range(0..=max_factors);
        let mut n: u64 = 1;
        for _ in 0..r {
            let p = *pool.choose(rng).expect("nonempty pool");
            n = n.saturating_mul(p);
        }
        out.insert(n);
    }
    out
}

fn bernoulli(rng: &mut ChaCha8Rng, p: &Ratio) -> bool {
    if *p >= Ratio::one() {
        return true;
    }
    if !p.is_positive() {
        return false;
    }
    // p = a/b exactly
    match (p.numer().to_u64(), p.denom().to_u64()) {
        (Some(a), Some(b)) => rng.random_range(0..b) < a,
        _ => rng.random_bool(p.to_f64().unwrap_or(0.0)),
    }
}

/// Weight on each `x` capped by `gcd(x, y)/y` over a random subset of the
/// other side, so that pairs inside both subsets have `D ≤ 1`.
fn capped_weights(
    rng: &mut ChaCha8Rng,
    side: &BTreeSet<Natural>,
    other: &BTreeSet<Natural>,
    density: &Ratio,
    numerator_bound: u64,
) -> Result<WeightFunction> {
    let others: Vec<Natural> = other.iter().copied().collect();
    let mut w = WeightFunction::new();
    for &x in side {
        let mut cap: Option<Ratio> = None;
        for &y in &others {
            if bernoulli(rng, density) {
                let c = ratio(gcd(x, y) as i64, y as i64);
                cap = Some(cap.map_or(c.clone(), |m: Ratio| m.min(c)));
            }
        }
        let cap = match cap {
            Some(c) => c,
            None => match others.choose(rng) {
                Some(&y) => ratio(gcd(x, y) as i64, y as i64),
                None => Ratio::one(),
            },
        };
        let a = rng.random_range(1..=numerator_bound.max(1));
        w.insert(x, cap * ratio(a as i64, numerator_bound.max(1) as i64))?;
    }
    Ok(w)
}

/// Deterministic instance from `config`. Edges are left empty; callers build
/// them from the parameters.
pub fn generate_instance(config: &GeneratorConfig) -> Result<Instance> {
    let params = config.params.to_params()?;
    let density = parse_ratio(&config.density)?;
    if density.is_negative() || density > Ratio::one() {
        log::warn!("density {density} outside [0, 1]; clamping");
    }
    if config.support_min > config.support_max {
        return Err(Error::invalid("support_min exceeds support_max"));
    }
    let pool = primes_upto(&int(config.prime_pool_bound))?;
    if pool.is_empty() && config.support_max > 1 {
        return Err(Error::invalid("prime pool is empty"));
    }
    let pool = if pool.is_empty() { vec![2] } else { pool };
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let nv = rng.random_range(config.support_min..=config.support_max);
    let vs = draw_support(&mut rng, &pool, nv, config.max_factors);
    let (psi, theta) = if config.symmetric {
        let psi = capped_weights(&mut rng, &vs, &vs, &density, config.value_numerator_bound)?;
        (psi.clone(), psi)
    } else {
        let nw = rng.random_range(config.support_min..=config.support_max);
        let ws = draw_support(&mut rng, &pool, nw, config.max_factors);
        let psi = capped_weights(&mut rng, &vs, &ws, &density, config.value_numerator_bound)?;
        let theta = capped_weights(&mut rng, &ws, &vs, &density, config.value_numerator_bound)?;
        (psi, theta)
    };
    Ok(Instance { system: PairSystem::totient(psi, theta), params: Some(params) })
}

/// `ψ̃(n) = ψ(n)/y` for `n ≤ Q`, zero beyond.
pub fn rescale_kmy(psi: &WeightFunction, y: &Ratio, q: Natural) -> Result<WeightFunction> {
    if !y.is_positive() {
        return Err(Error::invalid(format!("y = {y} must be positive")));
    }
    WeightFunction::from_pairs(psi.iter().filter(|&(n, _)| n <= q).map(|(n, v)| (n, v / y)))
}

/// `⌈κ ln t⌉`, floored at 0, with the logarithm enclosed tightly enough to
/// decide the ceiling.
pub fn kappa_log_threshold(kappa: &Ratio, t: &Ratio, start: u32, cap: u32) -> Result<u32> {
    if t.is_one() || kappa.is_zero() {
        return Ok(0);
    }
    let mut prec = start;
    loop {
        let iv = RealExpr::ln(RealExpr::Const(t.clone())).eval(prec)?.mul_ratio(kappa);
        let (lo, hi) = (iv.lo().ceil(), iv.hi().ceil());
        if lo == hi {
            return Ok(if lo.is_positive() { crate::arith::floor_u64(&lo) as u32 } else { 0 });
        }
        if prec >= cap {
            return Err(Error::ResourceLimit(format!("⌈κ ln t⌉ undecided at {prec} bits")));
        }
        prec = (prec * 2).min(cap);
    }
}

/// The single-weight measure after rescaling, next to `t^{-C} μ^{1+ε}`.
#[derive(Clone, Debug)]
pub struct KmyReport {
    pub k: u32,
    pub psi: WeightFunction,
    pub edges: EdgeSet,
    /// `μ_{ψ̃,ψ̃}^{φ,φ}(𝓔^{t,κ log t}_{ψ̃,ψ̃})`.
    pub lhs: Ratio,
    /// `μ_ψ̃^φ` of the truncated support.
    pub mu: Ratio,
    /// Encloses `ln lhs - ln(t^{-C} μ^{1+ε})` when both sides are positive.
    pub log_ratio: Option<Interval>,
}

#[allow(clippy::too_many_arguments)]
pub fn kmy_report(
    psi: &WeightFunction,
    y: &Ratio,
    q: Natural,
    t: &Ratio,
    kappa: &Ratio,
    c: &Ratio,
    epsilon: &Ratio,
    prec: u32,
) -> Result<KmyReport> {
    let psi_t = rescale_kmy(psi, y, q)?;
    let k = kappa_log_threshold(kappa, t, prec, DEFAULT_PRECISION_CAP.max(prec))?;
    let edges = build_edge_set_with(&psi_t, &psi_t, t, &int(k as u64), OmegaMode::Squared)?;
    let system = PairSystem::totient(psi_t.clone(), psi_t.clone()).with_edges(edges.clone())?;
    let lhs = mu_pairs(&system, &edges)?;
    let mu = system.mu_psi_support()?;
    let log_ratio = if lhs.is_positive() && mu.is_positive() {
        let ln = |x: &Ratio| RealExpr::ln(RealExpr::Const(x.clone())).eval(prec);
        let rhs = ln(t)?.mul_ratio(&-c.clone()).add(&ln(&mu)?.mul_ratio(&(Ratio::one() + epsilon)));
        Some(ln(&lhs)?.sub(&rhs))
    } else {
        None
    };
    Ok(KmyReport { k, psi: psi_t, edges, lhs, mu, log_ratio })
}

/// Default grid: `ε × C × t × K` with `p₀ = 100`.
pub fn default_grid() -> Vec<(Ratio, Ratio, Ratio, Ratio)> {
    let mut out = vec![];
    for eps in [ratio(1, 10), ratio(1, 4), ratio(2, 5)] {
        for c in [ratio(1, 2), int(1)] {
            for t in [int(1), int(10), int(100)] {
                for k in [0u64, 1, 2, 4] {
                    out.push((eps.clone(), c.clone(), t.clone(), int(k)));
                }
            }
        }
    }
    out
}

/// Options for [`certify_campaign`].
#[derive(Clone, Debug, Default)]
pub struct CampaignOptions {
    /// Cycle instance `i` through grid point `i mod 72` instead of using the
    /// generator's parameters.
    pub grid: bool,
    /// Alternate instances use `θ = ψ`, `f = g = φ` and `ε/2`.
    pub alternate_corollary: bool,
    /// Skip slice, peel and resolution checks.
    pub bound_only: bool,
    pub witness_dir: Option<PathBuf>,
}

impl CampaignOptions {
    pub fn standard() -> Self {
        CampaignOptions { grid: true, alternate_corollary: true, bound_only: false, witness_dir: None }
    }
}

/// One campaign row; rationals are `"p/q"` strings.
#[derive(Clone, Debug, Serialize)]
pub struct CampaignRow {
    pub index: u64,
    pub seed: u64,
    pub preset: &'static str,
    pub epsilon: String,
    pub c: String,
    pub t: String,
    pub k: String,
    pub v_size: usize,
    pub w_size: usize,
    pub edges: usize,
    pub lhs: String,
    pub rhs_lo: String,
    pub rhs_hi: String,
    pub verdict: Verdict,
    pub precision_bits: u32,
    pub slice_checks: usize,
    pub side_failures: usize,
    pub peel_steps: usize,
    pub resolution: String,
    pub elapsed_ms: f64,
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct Tallies {
    pub holds: u64,
    pub violated: u64,
    pub inconclusive: u64,
}

#[derive(Clone, Debug, Serialize)]
pub struct CampaignReport {
    pub count: u64,
    pub tallies: Tallies,
    /// Instances where a slice identity, peel certificate or resolution
    /// check failed.
    pub side_failures: u64,
    pub resolution_checked: u64,
    pub witness_paths: Vec<String>,
    pub total_seconds: f64,
    pub mean_ms: f64,
    pub max_ms: f64,
    #[serde(skip)]
    pub rows: Vec<CampaignRow>,
    #[serde(skip)]
    pub failure_notes: Vec<String>,
}

impl CampaignReport {
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        for r in &self.rows {
            w.serialize(r)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Result of certifying one instance.
#[derive(Clone, Debug)]
pub struct InstanceOutcome {
    pub instance: Instance,
    pub bound: BoundReport,
    pub row: CampaignRow,
    pub failures: Vec<String>,
    pub resolution_checked: bool,
}

/// Builds the edge set and runs the main bound, slice spot checks, peeling and
/// resolution on one instance.
pub fn certify_instance(instance: &Instance, params: &Params, bound_only: bool, rng_seed: u64) -> Result<InstanceOutcome> {
    let start = Instant::now();
    let sys = &instance.system;
    let edges = build_edge_set_with(&sys.psi, &sys.theta, &params.t, &params.k, params.omega_mode)?;
    let system = sys.with_edges(edges.clone())?;
    let bound = main_bound_check(&system, params, &edges)?;
    let mut failures = vec![];
    let mut slice_checks = 0;
    let mut peel_steps = 0;
    let mut resolution = String::from("skipped");
    let mut resolution_checked = false;
    if !bound_only {
        let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
        let primes: Vec<u64> = prime_set(&system.psi, &system.theta)?.into_iter().collect();
        for _ in 0..3 {
            let Some(&p) = primes.choose(&mut rng) else { break };
            let (i, j) = (rng.random_range(0..=3u32), rng.random_range(0..=3u32));
            let s = slice(&system, p, i, j)?;
            let rep = verify_slice_identities(&system, &s, &params.t, &params.k, params.omega_mode)?;
            slice_checks += 1;
            for row in rep.failures() {
                failures.push(format!("slice ({p}, {i}, {j}) identity {}", row.name));
            }
        }
        if mu_pairs(&system, &edges)?.is_positive() {
            match concentrate(&system, &edges) {
                Ok(conc) => {
                    let peeled = peel(&system, &conc.e_star, params)?;
                    peel_steps = peeled.trace.len();
                    for st in &peeled.trace {
                        if st.certificate.verdict != Verdict::Holds {
                            failures.push(format!("peel step {} certificate {}", st.step, st.certificate.verdict));
                        }
                    }
                    if !peeled.edges.is_empty() {
                        let rep = resolution_check(&system, &peeled.edges, conc.n, params)?;
                        resolution_checked = true;
                        resolution = rep.verdict.to_string();
                        if !rep.all_hold() {
                            failures.push(format!("resolution {}", rep.to_json()));
                        }
                    }
                }
                Err(Error::Overflow(msg)) => resolution = format!("skipped: {msg}"),
                Err(e) => return Err(e),
            }
        }
    }
    let (vs, ws) = (system.psi.len(), system.theta.len());
    let row = CampaignRow {
        index: 0,
        seed: 0,
        preset: "main",
        epsilon: format_ratio(&params.epsilon),
        c: format_ratio(&params.c),
        t: format_ratio(&params.t),
        k: format_ratio(&params.k),
        v_size: vs,
        w_size: ws,
        edges: edges.len(),
        lhs: format_ratio(&bound.lhs),
        rhs_lo: bound.rhs_lo.clone(),
        rhs_hi: bound.rhs_hi.clone(),
        verdict: bound.verdict,
        precision_bits: bound.precision_bits,
        slice_checks,
        side_failures: failures.len(),
        peel_steps,
        resolution,
        elapsed_ms: start.elapsed().as_secs_f64() * 1e3,
    };
    let instance = Instance { system, params: Some(params.clone()) };
    Ok(InstanceOutcome { instance, bound, row, failures, resolution_checked })
}

/// Seed of instance `index` in a campaign.
pub fn instance_seed(base: u64, index: u64) -> u64 {
    base.wrapping_add(index.wrapping_mul(0x9E37_79B9_7F4A_7C15))
}

/// Generator config and parameters of campaign instance `index`.
pub fn campaign_instance(config: &GeneratorConfig, index: u64, options: &CampaignOptions) -> Result<(GeneratorConfig, Params, &'static str)> {
    let mut cfg = config.clone();
    cfg.seed = instance_seed(config.seed, index);
    let base = config.params.to_params()?;
    let mut params = if options.grid {
        let grid = default_grid();
        let (eps, c, t, k) = grid[(index % grid.len() as u64) as usize].clone();
        let mut p = Params::new(eps, c, t, k, base.p0, base.precision_bits)?;
        p.precision_cap = base.precision_cap;
        p.omega_mode = base.omega_mode;
        p
    } else {
        base
    };
    cfg.params = ParamsDoc::from_params(&params);
    let preset = if options.alternate_corollary && index % 2 == 1 {
        cfg.symmetric = true;
        params = params.with_epsilon(&params.epsilon / int(2))?;
        "corollary"
    } else {
        "main"
    };
    Ok((cfg, params, preset))
}

/// Generates and certifies `count` instances. Violations and side-check
/// failures are written as replayable instance files when a witness directory
/// is set.
pub fn certify_campaign(config: &GeneratorConfig, count: u64, options: &CampaignOptions) -> Result<CampaignReport> {
    if count == 0 {
        return Err(Error::invalid("count must be at least 1"));
    }
    let start = Instant::now();
    let outcomes: Vec<Result<(u64, u64, &'static str, InstanceOutcome)>> = (0..count)
        .into_par_iter()
        .map(|i| {
            let (cfg, params, preset) = campaign_instance(config, i, options)?;
            let inst = generate_instance(&cfg)?;
            let out = certify_instance(&inst, &params, options.bound_only, cfg.seed ^ 0x5EED)?;
            Ok((i, cfg.seed, preset, out))
        })
        .collect();
    let mut report = CampaignReport {
        count,
        tallies: Tallies::default(),
        side_failures: 0,
        resolution_checked: 0,
        witness_paths: vec![],
        total_seconds: 0.0,
        mean_ms: 0.0,
        max_ms: 0.0,
        rows: vec![],
        failure_notes: vec![],
    };
    if let Some(dir) = &options.witness_dir {
        std::fs::create_dir_all(dir)?;
    }
    for o in outcomes {
        let (i, seed, preset, mut out) = o?;
        match out.bound.verdict {
            Verdict::Holds => report.tallies.holds += 1,
            Verdict::Violated => report.tallies.violated += 1,
            Verdict::Inconclusive => report.tallies.inconclusive += 1,
        }
        report.resolution_checked += out.resolution_checked as u64;
        let flagged = out.bound.verdict != Verdict::Holds || !out.failures.is_empty();
        if !out.failures.is_empty() {
            report.side_failures += 1;
            report.failure_notes.extend(out.failures.iter().map(|f| format!("instance {i}: {f}")));
        }
        if flagged {
            if let Some(dir) = &options.witness_dir {
                let path = dir.join(format!("witness_{i:06}.json"));
                out.instance.save(&path)?;
                report.witness_paths.push(path.display().to_string());
            }
        }
        out.row.index = i;
        out.row.seed = seed;
        out.row.preset = preset;
        report.max_ms = report.max_ms.max(out.row.elapsed_ms);
        report.rows.push(out.row);
    }
    report.total_seconds = start.elapsed().as_secs_f64();
    report.mean_ms = report.rows.iter().map(|r| r.elapsed_ms).sum::<f64>() / count as f64;
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quality::d_le_one;

    #[test]
    fn rescale_examples() {
        let psi = WeightFunction::from_pairs([(5, int(3)), (12, ratio(1, 2))]).unwrap();
        assert_eq!(rescale_kmy(&psi, &Ratio::one(), 100).unwrap(), psi);
        let r = rescale_kmy(&psi, &int(6), 10).unwrap();
        assert_eq!(r.value(5), ratio(1, 2));
        assert!(!r.contains(12));
        assert!(rescale_kmy(&psi, &int(2), 1).unwrap().is_empty());
        assert!(rescale_kmy(&psi, &Ratio::zero(), 1).is_err());
    }

    #[test]
    fn generator_is_deterministic() {
        let cfg = GeneratorConfig::default();
        let a = generate_instance(&cfg).unwrap().to_json_string().unwrap();
        let b = generate_instance(&cfg).unwrap().to_json_string().unwrap();
        assert_eq!(a, b);
        let other = GeneratorConfig { seed: 43, ..cfg };
        assert_ne!(a, generate_instance(&other).unwrap().to_json_string().unwrap());
    }

    #[test]
    fn empty_config_gives_empty_instance() {
        let cfg = GeneratorConfig { support_min: 0, support_max: 0, ..Default::default() };
        let inst = generate_instance(&cfg).unwrap();
        assert!(inst.system.psi.is_empty() && inst.system.theta.is_empty());
        let out = certify_instance(&inst, inst.params().unwrap(), false, 0).unwrap();
        assert_eq!(out.bound.verdict, Verdict::Holds);
    }

    #[test]
    fn full_density_caps_give_every_pair() {
        let cfg = GeneratorConfig {
            density: "1".into(),
            value_numerator_bound: 1,
            support_max: 25,
            ..Default::default()
        };
        for seed in 0..5 {
            let inst = generate_instance(&GeneratorConfig { seed, ..cfg.clone() }).unwrap();
            let s = &inst.system;
            let e = build_edge_set_with(&s.psi, &s.theta, &int(10), &ratio(-1000, 1), OmegaMode::Squared).unwrap();
            assert_eq!(e.len(), s.psi.len() * s.theta.len());
            for v in s.psi.support() {
                for w in s.theta.support() {
                    assert!(d_le_one(v, w, &s.psi, &s.theta));
                }
            }
        }
    }

    #[test]
    fn instance_round_trip() {
        let inst = generate_instance(&GeneratorConfig::default()).unwrap();
        let p = inst.params().unwrap().clone();
        let e = build_edge_set_with(&inst.system.psi, &inst.system.theta, &p.t, &p.k, p.omega_mode).unwrap();
        let inst = Instance { system: inst.system.with_edges(e).unwrap(), params: Some(p) };
        let back = Instance::from_json_str(&inst.to_json_string().unwrap()).unwrap();
        assert_eq!(back, inst);
        let table = MultiplicativeFunction::zero_on(&[(2, 2)]);
        let inst2 = Instance { system: PairSystem { f: table, ..inst.system.clone() }, params: None };
        assert_eq!(Instance::from_json_str(&inst2.to_json_string().unwrap()).unwrap(), inst2);
    }

    #[test]
    fn kappa_threshold_examples() {
        assert_eq!(kappa_log_threshold(&int(1), &int(1), 64, 4096).unwrap(), 0);
        // ln 10 ≈ 2.3026
        assert_eq!(kappa_log_threshold(&int(1), &int(10), 64, 4096).unwrap(), 3);
        assert_eq!(kappa_log_threshold(&ratio(1, 2), &int(10), 64, 4096).unwrap(), 2);
        assert_eq!(kappa_log_threshold(&ratio(-1, 2), &int(10), 64, 4096).unwrap(), 0);
    }

    #[test]
    fn small_campaign() {
        let cfg = GeneratorConfig { support_max: 12, ..Default::default() };
        let r = certify_campaign(&cfg, 12, &CampaignOptions::standard()).unwrap();
        assert_eq!(r.tallies.holds + r.tallies.violated + r.tallies.inconclusive, 12);
        assert_eq!(r.tallies.holds, 12);
        assert_eq!(r.side_failures, 0, "{:?}", r.failure_notes);
        let again = certify_campaign(&cfg, 12, &CampaignOptions::standard()).unwrap();
        let strip = |rep: &CampaignReport| rep.rows.iter().map(|r| (r.lhs.clone(), r.verdict)).collect::<Vec<_>>();
        assert_eq!(strip(&r), strip(&again));
    }
}
