use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde_json::json;

use qds::anatomy::{count_report, divisor_report, mertens_product, ratio_to_log_power, sweep_divisor, sweep_rankin};
use qds::arith::{format_ratio, int, parse_ratio, Ratio, Verdict};
use qds::compress::{slice, verify_slice_identities};
use qds::diagonal::{bilinear_check, concentrate, decay_check, diagonal_measure, find_center, peel};
use qds::harness::{certify_campaign, certify_instance, generate_instance, CampaignOptions, GeneratorConfig, Instance};
use qds::model::{EdgeSet, MultiplicativeFunction};
use qds::quality::{build_edge_set_with, main_bound_check, OmegaMode, Params};
use qds::resolution::resolution_check;

#[derive(Parser)]
#[command(name = "qds", version, about = "Exact checks for weighted pair systems and their measure bounds")]
struct Cli {
    /// Starting interval precision in bits.
    #[arg(long, global = true)]
    precision: Option<u32>,
    /// Largest precision reached by escalation.
    #[arg(long, global = true)]
    precision_cap: Option<u32>,
    #[command(subcommand)]
    command: Command,
}

/// Parameter overrides applied on top of an instance's stored parameters.
#[derive(Args, Clone, Default)]
struct ParamArgs {
    #[arg(long)]
    epsilon: Option<String>,
    #[arg(long = "C")]
    c: Option<String>,
    #[arg(long)]
    t: Option<String>,
    #[arg(long = "K")]
    k: Option<String>,
    #[arg(long)]
    p0: Option<u64>,
    /// `squared` (differing valuations) or `lcm` (primes dividing lcm(v, w)).
    #[arg(long)]
    omega_mode: Option<OmegaMode>,
}

#[derive(Subcommand)]
enum Command {
    /// Generate an instance from a generator config.
    Gen {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Build the edge set of an instance.
    Edges {
        #[arg(long)]
        instance: PathBuf,
        #[command(flatten)]
        params: ParamArgs,
        /// Write the instance with its edges here instead of printing them.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Certify the main bound on one instance.
    Check {
        #[arg(long)]
        instance: PathBuf,
        #[command(flatten)]
        params: ParamArgs,
    },
    /// Certify one instance with all side checks, or a generated campaign.
    Certify {
        #[arg(long, conflicts_with = "campaign")]
        instance: Option<PathBuf>,
        /// Generator config for the campaign; defaults apply when omitted.
        #[arg(long)]
        campaign: Option<Option<PathBuf>>,
        #[arg(long, default_value_t = 100)]
        count: u64,
        /// Per-instance rows.
        #[arg(long)]
        csv: Option<PathBuf>,
        #[arg(long)]
        witness_dir: Option<PathBuf>,
        /// Use the config's parameters for every instance instead of the grid.
        #[arg(long)]
        no_grid: bool,
        /// Skip slice, peel and resolution checks.
        #[arg(long)]
        bound_only: bool,
        #[command(flatten)]
        params: ParamArgs,
    },
    /// Slice an instance at (p, i, j).
    Compress {
        #[arg(long)]
        instance: PathBuf,
        #[arg(long)]
        p: u64,
        #[arg(long)]
        i: u32,
        #[arg(long)]
        j: u32,
        #[arg(long)]
        verify: bool,
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        params: ParamArgs,
    },
    /// Diagonal measure, bilinear bound, decay check and center at one prime.
    Diagonal {
        #[arg(long)]
        instance: PathBuf,
        #[arg(long)]
        p: u64,
        #[command(flatten)]
        params: ParamArgs,
    },
    /// Pick centers at every prime and keep the pairs near them.
    Concentrate {
        #[arg(long)]
        instance: PathBuf,
        /// Write the instance restricted to the kept pairs here
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        params: ParamArgs,
    },
    /// Peel vertices with light neighborhoods.
    Peel {
        #[arg(long)]
        instance: PathBuf,
        #[arg(long)]
        trace: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        params: ParamArgs,
    },
    /// Resolution sums and the squared inequality for a structured edge set.
    Resolve {
        #[arg(long)]
        instance: PathBuf,
        #[arg(long = "N")]
        n: u64,
        #[command(flatten)]
        params: ParamArgs,
    },
    /// Counting and divisor-sum inequalities.
    Anatomy {
        #[command(subcommand)]
        which: AnatomyCommand,
    },
}

#[derive(Subcommand)]
enum AnatomyCommand {
    Count {
        #[arg(long)]
        x: String,
        #[arg(long)]
        t: String,
        #[arg(long = "K")]
        k: String,
        #[arg(long, default_value = "2")]
        gamma: String,
    },
    Rankin {
        #[arg(long)]
        x: String,
        #[arg(long)]
        t: String,
        #[arg(long, default_value = "2")]
        gamma: String,
    },
    Divisor {
        #[arg(long = "M")]
        m: u64,
        #[arg(long)]
        t: String,
        #[arg(long = "K")]
        k: String,
        #[arg(long, default_value = "2")]
        gamma: String,
    },
    Mertens {
        #[arg(long)]
        t: String,
        #[arg(long, default_value = "2")]
        gamma: String,
    },
    /// Grid sweep written as CSV.
    Sweep {
        #[arg(long, default_value_t = 1000)]
        x_max: u64,
        #[arg(long, default_value_t = 500)]
        m_max: u64,
        #[arg(long)]
        csv: PathBuf,
    },
}

fn ratio_arg(s: &str) -> Result<Ratio> {
    parse_ratio(s).with_context(|| format!("bad rational {s:?}"))
}

impl Cli {
    fn params_for(&self, base: Option<&Params>, o: &ParamArgs) -> Result<Params> {
        let mut doc = base.map(qds::harness::ParamsDoc::from_params).unwrap_or_default();
        if let Some(x) = &o.epsilon {
            doc.epsilon = x.clone();
        }
        if let Some(x) = &o.c {
            doc.c = x.clone();
        }
        if let Some(x) = &o.t {
            doc.t = x.clone();
        }
        if let Some(x) = &o.k {
            doc.k = x.clone();
        }
        if let Some(x) = o.p0 {
            doc.p0 = x;
        }
        if let Some(x) = o.omega_mode {
            doc.omega_mode = x;
        }
        if let Some(b) = self.precision {
            doc.precision_bits = b;
        }
        if let Some(c) = self.precision_cap {
            doc.precision_cap = c;
        }
        Ok(doc.to_params()?)
    }

    fn load(&self, path: &PathBuf, o: &ParamArgs) -> Result<(Instance, Params)> {
        let inst = Instance::load(path).with_context(|| format!("reading {}", path.display()))?;
        let params = self.params_for(inst.params.as_ref(), o)?;
        Ok((inst, params))
    }
}

/// The instance's own edges, or `𝓔^{t,K}` when it has none.
fn edges_of(inst: &Instance, p: &Params) -> Result<EdgeSet> {
    if !inst.system.edges.is_empty() {
        return Ok(inst.system.edges.clone());
    }
    let s = &inst.system;
    Ok(build_edge_set_with(&s.psi, &s.theta, &p.t, &p.k, p.omega_mode)?)
}

fn print(v: &serde_json::Value) {
    let text = serde_json::to_string_pretty(v).expect("json values serialize");
    // a closed pipe (e.g. `| head`) is not an error worth a panic
    let _ = writeln!(std::io::stdout().lock(), "{text}");
}

fn exit_for(v: Verdict) -> u8 {
    match v {
        Verdict::Holds => 0,
        Verdict::Violated => 2,
        Verdict::Inconclusive => 3,
    }
}

fn run(cli: &Cli) -> Result<u8> {
    match &cli.command {
        Command::Gen { config, seed, out } => {
            let mut cfg = match config {
                Some(p) => GeneratorConfig::load(p)?,
                None => GeneratorConfig::default(),
            };
            if let Some(s) = seed {
                cfg.seed = *s;
            }
            if let Some(b) = cli.precision {
                cfg.params.precision_bits = b;
            }
            generate_instance(&cfg)?.save(out)?;
            Ok(0)
        }
        Command::Edges { instance, params, out } => {
            let (inst, p) = cli.load(instance, params)?;
            let s = &inst.system;
            let e = build_edge_set_with(&s.psi, &s.theta, &p.t, &p.k, p.omega_mode)?;
            match out {
                Some(path) => Instance { system: s.with_edges(e)?, params: Some(p) }.save(path)?,
                None => print(&json!({ "count": e.len(), "edges": e })),
            }
            Ok(0)
        }
        Command::Check { instance, params } => {
            let (inst, p) = cli.load(instance, params)?;
            let e = edges_of(&inst, &p)?;
            let r = main_bound_check(&inst.system.with_edges(e.clone())?, &p, &e)?;
            print(&r.to_json());
            Ok(exit_for(r.verdict))
        }
        Command::Certify { instance, campaign, count, csv, witness_dir, no_grid, bound_only, params } => {
            if let Some(path) = instance {
                let (inst, p) = cli.load(path, params)?;
                let out = certify_instance(&inst, &p, *bound_only, 0)?;
                print(&json!({
                    "bound": out.bound.to_json(),
                    "row": out.row,
                    "failures": out.failures,
                }));
                return Ok(if !out.failures.is_empty() { 2 } else { exit_for(out.bound.verdict) });
            }
            let Some(cfg_path) = campaign else { bail!("give --instance or --campaign") };
            let mut cfg = match cfg_path {
                Some(p) => GeneratorConfig::load(p)?,
                None => GeneratorConfig::default(),
            };
            cfg.params = qds::harness::ParamsDoc::from_params(&cli.params_for(Some(&cfg.params.to_params()?), params)?);
            let options = CampaignOptions {
                grid: !no_grid,
                alternate_corollary: !no_grid,
                bound_only: *bound_only,
                witness_dir: witness_dir.clone(),
            };
            let report = certify_campaign(&cfg, *count, &options)?;
            if let Some(path) = csv {
                report.write_csv(path)?;
            }
            for note in &report.failure_notes {
                log::warn!("{note}");
            }
            print(&serde_json::to_value(&report)?);
            Ok(if report.tallies.violated > 0 || report.side_failures > 0 {
                2
            } else if report.tallies.inconclusive > 0 {
                3
            } else {
                0
            })
        }
        Command::Compress { instance, p, i, j, verify, out, params } => {
            let (inst, prm) = cli.load(instance, params)?;
            let e = edges_of(&inst, &prm)?;
            let source = inst.system.with_edges(e)?;
            let s = slice(&source, *p, *i, *j)?;
            if let Some(path) = out {
                Instance { system: s.system.clone(), params: Some(prm.clone()) }.save(path)?;
            }
            let mut doc = json!({
                "p": p, "i": i, "j": j,
                "slice": serde_json::to_value(Instance { system: s.system.clone(), params: None }.to_doc())?,
            });
            let mut code = 0;
            if *verify {
                let rep = verify_slice_identities(&source, &s, &prm.t, &prm.k, prm.omega_mode)?;
                if !rep.all_hold() {
                    code = 2;
                }
                doc["identities"] = serde_json::to_value(&rep)?;
            }
            print(&doc);
            Ok(code)
        }
        Command::Diagonal { instance, p, params } => {
            let (inst, prm) = cli.load(instance, params)?;
            let e = edges_of(&inst, &prm)?;
            let dm = diagonal_measure(&inst.system, &e, *p)?;
            let cells: Vec<_> = dm.cells.iter().map(|(&(i, j), m)| json!([i, j, format_ratio(m)])).collect();
            print(&json!({
                "p": p,
                "cells": cells,
                "center": find_center(&dm),
                "bilinear": bilinear_check(&dm, &prm)?,
                "decay": decay_check(&dm, &prm)?,
            }));
            Ok(0)
        }
        Command::Concentrate { instance, out, params } => {
            let (inst, prm) = cli.load(instance, params)?;
            let e = edges_of(&inst, &prm)?;
            let c = concentrate(&inst.system, &e)?;
            if let Some(path) = out {
                Instance { system: inst.system.with_edges(c.e_star.clone())?, params: Some(prm) }.save(path)?;
            }
            print(&json!({
                "N": c.n,
                "centers": c.centers.iter().map(|(p, r)| (p.to_string(), r)).collect::<std::collections::BTreeMap<_, _>>(),
                "e_star": c.e_star,
                "removed_fraction": format_ratio(&c.removed_fraction),
                "mu_e": format_ratio(&c.mu_e),
                "mu_e_star": format_ratio(&c.mu_e_star),
            }));
            Ok(0)
        }
        Command::Peel { instance, trace, out, params } => {
            let (inst, prm) = cli.load(instance, params)?;
            let e = edges_of(&inst, &prm)?;
            let r = peel(&inst.system, &e, &prm)?;
            if let Some(path) = trace {
                std::fs::write(path, serde_json::to_string_pretty(&r.trace)? + "\n")?;
            }
            if let Some(path) = out {
                Instance { system: inst.system.with_edges(r.edges.clone())?, params: Some(prm) }.save(path)?;
            }
            let ok = r.trace.iter().all(|s| s.certificate.verdict == Verdict::Holds);
            print(&json!({ "steps": r.trace.len(), "edges": r.edges, "certificates_hold": ok }));
            Ok(if ok { 0 } else { 3 })
        }
        Command::Resolve { instance, n, params } => {
            let (inst, prm) = cli.load(instance, params)?;
            let e = edges_of(&inst, &prm)?;
            let r = resolution_check(&inst.system, &e, *n, &prm)?;
            print(&r.to_json());
            Ok(if r.all_hold() { 0 } else { 2 })
        }
        Command::Anatomy { which } => anatomy(which, cli.precision.unwrap_or(256)),
    }
}

fn anatomy(which: &AnatomyCommand, prec: u32) -> Result<u8> {
    match which {
        AnatomyCommand::Count { x, t, k, gamma } => {
            let r = count_report(&ratio_arg(x)?, &ratio_arg(t)?, &ratio_arg(k)?, &ratio_arg(gamma)?)?;
            print(&serde_json::to_value(r)?);
        }
        AnatomyCommand::Rankin { x, t, gamma } => {
            let v = qds::anatomy::rankin_sum(&ratio_arg(x)?, &ratio_arg(t)?, &ratio_arg(gamma)?)?;
            print(&json!({ "rankin_sum": format_ratio(&v) }));
        }
        AnatomyCommand::Divisor { m, t, k, gamma } => {
            let r = divisor_report(*m, &ratio_arg(t)?, &ratio_arg(k)?, &ratio_arg(gamma)?, &MultiplicativeFunction::Totient)?;
            print(&serde_json::to_value(r)?);
        }
        AnatomyCommand::Mertens { t, gamma } => {
            let (t, g) = (ratio_arg(t)?, ratio_arg(gamma)?);
            let prod = mertens_product(&t, &g)?;
            let iv = ratio_to_log_power(&t, &g, prec)?;
            print(&json!({
                "product_bits": prod.numer().bits() + prod.denom().bits(),
                "product_approx": qds::arith::Interval::point(&prod, 64).lo_f64(),
                "ratio_lo": iv.lo_f64(),
                "ratio_hi": iv.hi_f64(),
            }));
        }
        AnatomyCommand::Sweep { x_max, m_max, csv } => {
            let ts = [int(2), int(10), int(100)];
            let ks: Vec<i64> = (0..=6).collect();
            let gammas = [Ratio::new(3.into(), 2.into()), int(2), int(4)];
            let mut rows = sweep_rankin(*x_max, &ts, &ks, &gammas)?;
            rows.extend(sweep_divisor(*m_max, &ts, &ks, &gammas, &MultiplicativeFunction::Totient)?);
            let mut w = csv::Writer::from_path(csv)?;
            let mut failures = 0;
            for r in &rows {
                failures += !r.holds as usize;
                w.serialize(r)?;
            }
            w.flush()?;
            print(&json!({ "rows": rows.len(), "failures": failures }));
            return Ok(if failures == 0 { 0 } else { 2 });
        }
    }
    Ok(0)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
