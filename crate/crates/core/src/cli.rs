//! The `dosx` batch driver: loads a configuration, runs one mode, writes one
//! CSV per table plus `summary.json`, and reports whether every asserted
//! inequality held.

use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use clap::Parser;
use num_complex::Complex64;
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::{ExperimentConfig, Mode, Model};
use crate::disorder::sample_config;
use crate::dos::{choose_kappa, dos_direct, dos_expansion, tail_prefactor, tail_r, DosRequest};
use crate::error::{Error, Result};
use crate::expansion::{
    constructive_n, duhamel_crosscheck, partial_sums, s_coeffs, t_coeff_det, t_coeffs_mc, ExpansionEstimate, Method,
    MAX_DET_ORDER,
};
use crate::oracle::expect_resolvent_batch;
use crate::profile::profile_norms;
use crate::verify::{run_suite, SuiteOptions};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Parser)]
#[command(name = "dosx", version, about = "Expansion coefficients and smoothed density of states for a random Schrödinger operator")]
pub struct Cli {
    #[arg(value_enum)]
    pub mode: Mode,
    #[arg(long)]
    pub config: PathBuf,
    /// Overrides `sampling.seed`.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
    /// Overrides `sampling.samples`.
    #[arg(long)]
    pub samples: Option<u64>,
}

/// One asserted inequality `measured ≤ bound`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Assertion {
    pub name: String,
    pub measured: f64,
    pub bound: f64,
    pub pass: bool,
}

impl Assertion {
    fn new(name: impl Into<String>, measured: f64, bound: f64) -> Self {
        Assertion { name: name.into(), measured, bound, pass: measured <= bound }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Outcome {
    pub all_pass: bool,
    pub summary: PathBuf,
    pub tables: Vec<PathBuf>,
    pub assertions: Vec<Assertion>,
}

fn number(value: f64, method: &str, stderr: Option<f64>) -> Value {
    json!({ "value": value, "method": method, "stderr": stderr })
}

fn complex(value: Complex64, method: &str, stderr: Option<f64>) -> Value {
    json!({ "value": { "re": value.re, "im": value.im }, "method": method, "stderr": stderr })
}

fn estimate(e: &ExpansionEstimate) -> Value {
    let method = match e.method {
        crate::expansion::MethodTag::Deterministic => "deterministic",
        crate::expansion::MethodTag::MonteCarlo => "monte_carlo",
    };
    let mut v = complex(e.value, method, e.stderr);
    v["numerical_error"] = json!(e.numerical_error);
    v
}

fn io_error(path: &Path, e: impl std::fmt::Display) -> Error {
    Error::InvalidParameter { name: "out", reason: format!("{}: {e}", path.display()) }
}

fn write_csv<R: Serialize>(dir: &Path, name: &str, rows: &[R]) -> Result<PathBuf> {
    let path = dir.join(name);
    let mut w = csv::Writer::from_path(&path).map_err(|e| io_error(&path, e))?;
    for r in rows {
        w.serialize(r).map_err(|e| io_error(&path, e))?;
    }
    w.flush().map_err(|e| io_error(&path, e))?;
    Ok(path)
}

struct ModeResult {
    results: Value,
    assertions: Vec<Assertion>,
    tables: Vec<PathBuf>,
}

/// Runs one mode and writes its artifacts into `cli.out`.
pub fn run(cli: &Cli) -> Result<Outcome> {
    let started = Instant::now();
    let mut cfg = ExperimentConfig::load(&cli.config)?;
    if let Some(seed) = cli.seed {
        cfg.sampling.seed = seed;
    }
    if let Some(samples) = cli.samples {
        cfg.sampling.samples = samples;
    }
    let model = cfg.model()?;
    std::fs::create_dir_all(&cli.out).map_err(|e| io_error(&cli.out, e))?;

    let r = match cli.mode {
        Mode::Coeffs => run_coeffs(&cfg, &model, &cli.out)?,
        Mode::Resolvent => run_resolvent(&cfg, &model, &cli.out)?,
        Mode::Dos => run_dos(&cfg, &model, &cli.out)?,
        Mode::Verify => run_verify(&cfg, &model, &cli.out)?,
        Mode::Crosscheck => run_crosscheck(&cfg, &model, &cli.out)?,
    };
    let all_pass = r.assertions.iter().all(|a| a.pass);
    let unix = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
    let summary = json!({
        "schema_version": SCHEMA_VERSION,
        "mode": cli.mode.as_str(),
        "inputs": cfg,
        "seed": cfg.sampling.seed,
        "samples": cfg.sampling.samples,
        "results": r.results,
        "assertions": r.assertions,
        "all_pass": all_pass,
        "tables": r.tables.iter().filter_map(|p| p.file_name()).map(|n| n.to_string_lossy().into_owned()).collect::<Vec<_>>(),
        "timestamp": { "unix_seconds": unix, "wall_time_seconds": started.elapsed().as_secs_f64() },
    });
    let path = cli.out.join("summary.json");
    let text = serde_json::to_string_pretty(&summary).map_err(|e| io_error(&path, e))?;
    std::fs::write(&path, text + "\n").map_err(|e| io_error(&path, e))?;
    Ok(Outcome { all_pass, summary: path, tables: r.tables, assertions: r.assertions })
}

#[derive(Serialize)]
struct CoeffRow<'a> {
    vector: &'a str,
    n: usize,
    quantity: &'static str,
    method: &'static str,
    re: f64,
    im: f64,
    stderr: Option<f64>,
    numerical_error: f64,
}

fn run_coeffs(cfg: &ExperimentConfig, m: &Model, out: &Path) -> Result<ModeResult> {
    let n_max = cfg.orders.n_max;
    let (samples, seed) = (cfg.sampling.samples, cfg.sampling.seed);
    let z = m.window.z();
    let mc_method = Method::MonteCarlo { samples, seed };
    let mut rows = Vec::new();
    let mut assertions = Vec::new();
    let mut results = Vec::new();
    for v in &m.vectors {
        let t_mc = t_coeffs_mc(n_max, &m.bx, &m.profile, &m.dist, &[z], &v.psi, &v.psi, samples, seed)?;
        let s_mc = s_coeffs(n_max, &m.bx, &m.profile, &m.dist, &m.window, &v.psi, &v.psi, mc_method)?;
        let s_det = s_coeffs(n_max.min(MAX_DET_ORDER), &m.bx, &m.profile, &m.dist, &m.window, &v.psi, &v.psi, Method::Deterministic)?;
        for n in 0..=n_max {
            let t = t_mc[n][0];
            rows.push(CoeffRow { vector: &v.name, n, quantity: "T", method: "monte_carlo", re: t.value.re, im: t.value.im, stderr: Some(t.stderr), numerical_error: 0.0 });
            let s = &s_mc[n];
            rows.push(CoeffRow { vector: &v.name, n, quantity: "S", method: "monte_carlo", re: s.value.re, im: s.value.im, stderr: s.stderr, numerical_error: s.numerical_error });
            let mut entry = json!({
                "vector": v.name, "n": n,
                "T_monte_carlo": complex(t.value, "monte_carlo", Some(t.stderr)),
                "S_monte_carlo": estimate(s),
            });
            if n <= MAX_DET_ORDER {
                let td = t_coeff_det(n, &m.bx, &m.profile, &m.dist, z, &v.psi, &v.psi)?;
                let sd = &s_det[n];
                rows.push(CoeffRow { vector: &v.name, n, quantity: "T", method: "deterministic", re: td.value.re, im: td.value.im, stderr: None, numerical_error: 0.0 });
                rows.push(CoeffRow { vector: &v.name, n, quantity: "S", method: "deterministic", re: sd.value.re, im: sd.value.im, stderr: None, numerical_error: sd.numerical_error });
                entry["T_deterministic"] = estimate(&td);
                entry["S_deterministic"] = estimate(sd);
                assertions.push(Assertion::new(format!("T_{n}[{}] det vs mc", v.name), (td.value - t.value).norm(), 4.0 * t.stderr + 1e-12));
                assertions.push(Assertion::new(
                    format!("S_{n}[{}] det vs mc", v.name),
                    (sd.value - s.value).norm(),
                    4.0 * s.stderr.unwrap_or(0.0) + sd.numerical_error + s.numerical_error + 1e-12,
                ));
            }
            results.push(entry);
        }
    }
    let tables = vec![write_csv(out, "coeffs.csv", &rows)?];
    Ok(ModeResult { results: json!({ "z": { "re": z.re, "im": z.im }, "coefficients": results }), assertions, tables })
}

#[derive(Serialize)]
struct ResolventRow<'a> {
    vector: &'a str,
    lambda: f64,
    order: usize,
    oracle_re: f64,
    oracle_im: f64,
    oracle_stderr: f64,
    expansion_re: f64,
    expansion_im: f64,
    expansion_stderr: Option<f64>,
    expansion_numerical_error: f64,
    discrepancy: f64,
    budget: f64,
}

fn run_resolvent(cfg: &ExperimentConfig, m: &Model, out: &Path) -> Result<ModeResult> {
    let big_n = cfg.orders.big_n;
    let (samples, seed) = (cfg.sampling.samples, cfg.sampling.seed);
    let w = &m.window;
    let pairs: Vec<_> = m.vectors.iter().map(|v| (v.psi.clone(), v.psi.clone())).collect();
    let oracle = expect_resolvent_batch(&m.bx, &m.profile, &m.dist, &[w.lambda], w.z(), &pairs, samples, seed)?;
    let method = if big_n <= MAX_DET_ORDER { Method::Deterministic } else { Method::MonteCarlo { samples, seed } };
    let mut rows = Vec::new();
    let mut assertions = Vec::new();
    let mut results = Vec::new();
    for (v, orc) in m.vectors.iter().zip(&oracle[0]) {
        let coeffs = s_coeffs(big_n, &m.bx, &m.profile, &m.dist, w, &v.psi, &v.psi, method)?;
        let sums = partial_sums(&coeffs, w.lambda);
        let norm2 = v.psi.norm().powi(2);
        let mut numerical = 0.0;
        let mut per_order = Vec::new();
        for (order, (sum, c)) in sums.iter().zip(&coeffs).enumerate() {
            numerical += w.lambda.abs().powi(order as i32) * c.numerical_error;
            // Summing per-order stderrs overestimates the stderr of a sum of correlated estimates.
            let exp_stderr = c.stderr.map(|_| coeffs[..=order].iter().map(|c| w.lambda.abs().powi(c.n as i32) * c.stderr.unwrap_or(0.0)).sum::<f64>());
            let discrepancy = (sum - orc.value).norm();
            let budget = w.epsilon * norm2 + 3.0 * (orc.stderr + exp_stderr.unwrap_or(0.0)) + numerical;
            rows.push(ResolventRow {
                vector: &v.name,
                lambda: w.lambda,
                order,
                oracle_re: orc.value.re,
                oracle_im: orc.value.im,
                oracle_stderr: orc.stderr,
                expansion_re: sum.re,
                expansion_im: sum.im,
                expansion_stderr: exp_stderr,
                expansion_numerical_error: numerical,
                discrepancy,
                budget,
            });
            per_order.push(json!({
                "order": order,
                "expansion": { "value": { "re": sum.re, "im": sum.im }, "method": if exp_stderr.is_some() { "monte_carlo" } else { "deterministic" }, "stderr": exp_stderr, "numerical_error": numerical },
                "discrepancy": number(discrepancy, "derived", None),
                "budget": number(budget, "derived", None),
            }));
            if order == big_n {
                assertions.push(Assertion::new(format!("resolvent[{}] N={order}", v.name), discrepancy, budget));
            }
        }
        results.push(json!({ "vector": v.name, "oracle": complex(orc.value, "monte_carlo", Some(orc.stderr)), "partial_sums": per_order }));
    }
    let c = m.dist.moment_constant().unwrap_or(1.0).max(m.dist.moment(1).abs());
    let cn = constructive_n(w, c, profile_norms(&m.profile, &m.bx).norm_1_inf);
    let tables = vec![write_csv(out, "resolvent.csv", &rows)?];
    Ok(ModeResult {
        results: json!({
            "a": number(w.a(), "closed_form", None),
            "constructive_n": { "n": cn.n, "astronomical": cn.astronomical, "log_weighted_bound": number(cn.log_weighted_bound, "closed_form", None) },
            "vectors": results,
        }),
        assertions,
        tables,
    })
}

#[derive(Serialize)]
struct DosRow {
    lambda: f64,
    kappa: f64,
    order: usize,
    direct: f64,
    direct_stderr: f64,
    direct_head: f64,
    direct_head_stderr: f64,
    expansion: f64,
    expansion_numerical_error: f64,
    discrepancy: f64,
    budget: f64,
    tail_bound: f64,
}

fn run_dos(cfg: &ExperimentConfig, m: &Model, out: &Path) -> Result<ModeResult> {
    let w = m.window;
    let kappa = match cfg.dos.kappa {
        Some(k) => k,
        None => choose_kappa(&w, &m.bx, &m.profile, &m.dist, w.epsilon / 2.0)?.kappa,
    };
    let req = DosRequest { window: w, kappa, order: cfg.orders.big_n, samples: cfg.sampling.samples, seed: cfg.sampling.seed };
    let exp = dos_expansion(&req, &m.bx, &m.profile, &m.dist)?;
    let direct = dos_direct(&req, &m.bx, &m.profile, &m.dist)?;
    let tail_bound = tail_prefactor(&w, &m.bx, &m.profile, &m.dist) * tail_r(kappa, &m.bx)?.lattice;
    let discrepancy = (direct.full.value - exp.value).abs();
    let budget = w.epsilon + 3.0 * direct.full.stderr + exp.numerical_error;
    let tail_gap = (direct.full.value - direct.head.value).abs();
    let assertions = vec![
        Assertion::new("dos direct vs expansion", discrepancy, budget),
        Assertion::new("dos head truncation", tail_gap, tail_bound + 3.0 * (direct.full.stderr + direct.head.stderr)),
    ];
    let row = DosRow {
        lambda: w.lambda,
        kappa,
        order: req.order,
        direct: direct.full.value,
        direct_stderr: direct.full.stderr,
        direct_head: direct.head.value,
        direct_head_stderr: direct.head.stderr,
        expansion: exp.value,
        expansion_numerical_error: exp.numerical_error,
        discrepancy,
        budget,
        tail_bound,
    };
    let tables = vec![write_csv(out, "dos.csv", &[row])?];
    let mut expansion = number(exp.value, "deterministic", None);
    expansion["numerical_error"] = json!(exp.numerical_error);
    Ok(ModeResult {
        results: json!({
            "kappa": kappa,
            "head_points": exp.points,
            "direct": number(direct.full.value, "monte_carlo", Some(direct.full.stderr)),
            "direct_head": number(direct.head.value, "monte_carlo", Some(direct.head.stderr)),
            "expansion": expansion,
            "tail_bound": number(tail_bound, "closed_form", None),
        }),
        assertions,
        tables,
    })
}

fn run_verify(cfg: &ExperimentConfig, m: &Model, out: &Path) -> Result<ModeResult> {
    let checks = run_suite(m, SuiteOptions { order: cfg.orders.big_n, samples: cfg.sampling.samples, seed: cfg.sampling.seed });
    let assertions: Vec<Assertion> = checks
        .iter()
        .map(|c| Assertion { name: c.name.to_string(), measured: c.measured, bound: c.threshold, pass: c.pass })
        .collect();
    let tables = vec![write_csv(out, "verify.csv", &assertions)?];
    let passed = checks.iter().filter(|c| c.pass).count();
    Ok(ModeResult { results: json!({ "checks": checks, "total": checks.len(), "passed": passed }), assertions, tables })
}

#[derive(Serialize)]
struct CrosscheckRow<'a> {
    vector: &'a str,
    config: u64,
    n: usize,
    time_re: f64,
    time_im: f64,
    freq_re: f64,
    freq_im: f64,
    discrepancy: f64,
}

fn run_crosscheck(cfg: &ExperimentConfig, m: &Model, out: &Path) -> Result<ModeResult> {
    let mut rows = Vec::new();
    let mut assertions = Vec::new();
    for i in 0..cfg.crosscheck.configs {
        let config = sample_config(&m.bx, &m.dist, cfg.sampling.seed, i);
        for v in &m.vectors {
            for n in 0..=1 {
                let r = duhamel_crosscheck(n, &m.bx, &m.profile, &config, &m.window, &v.psi, &v.psi)?;
                let tol = if n == 0 { 1e-6 } else { 1e-5 };
                assertions.push(Assertion::new(format!("duhamel[{}] config={i} n={n}", v.name), r.discrepancy, tol));
                rows.push(CrosscheckRow {
                    vector: &v.name,
                    config: i,
                    n,
                    time_re: r.time_value.re,
                    time_im: r.time_value.im,
                    freq_re: r.freq_value.re,
                    freq_im: r.freq_value.im,
                    discrepancy: r.discrepancy,
                });
            }
        }
    }
    let tables = vec![write_csv(out, "crosscheck.csv", &rows)?];
    let worst = rows.iter().map(|r| r.discrepancy).fold(0.0, f64::max);
    Ok(ModeResult { results: json!({ "rows": rows.len(), "max_discrepancy": number(worst, "quadrature", None) }), assertions, tables })
}
