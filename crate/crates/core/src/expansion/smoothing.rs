//! `α`-integrals against `χ̂_a`: after `σ = α / a` they read
//! `∫ χ̂(σ) F(E + iη + 2πaσ) dσ` and are evaluated on the composite
//! Kronrod rule of [`ChiRule`], truncated where the decay of `χ̂` certifies
//! the remainder.

use std::collections::HashMap;
use std::sync::{Arc, OnceLock, RwLock};

use num_complex::Complex64;

use super::cutoff::{tail_bound, tail_cutoff, ChiRule, MAX_LEVEL};
use super::poles::{NuTable, PoleKey, PoleSum};
use crate::error::{Error, Result};

/// Tail allowance per unit of integrand bound.
pub const TAIL_TOL: f64 = 1e-11;
/// Target for the quadrature error estimate of a single pole product.
pub const KEY_TOL: f64 = 1e-10;

/// A value with its numerical error budget (quadrature estimate plus
/// certified tail).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Smoothed {
    pub value: Complex64,
    pub error: f64,
}

struct Level {
    rule: ChiRule,
    /// `(ν_i - E - iη - 2πaσ)^{-1}` at every node, built on first use.
    factors: Vec<OnceLock<Vec<Complex64>>>,
}

/// Integrates pole products of one order against `χ̂`, memoizing per key.
pub struct AlphaIntegrator {
    table: Arc<NuTable>,
    z0: Complex64,
    two_pi_a: f64,
    order: usize,
    sigma_max: f64,
    levels: Vec<OnceLock<Level>>,
    cache: RwLock<HashMap<PoleKey, Smoothed>>,
}

impl AlphaIntegrator {
    /// For products of `order + 1` factors, each bounded by `1/η`.
    pub fn new(table: Arc<NuTable>, e: f64, eta: f64, a: f64, order: usize) -> Self {
        let bound = eta.powi(-(order as i32 + 1));
        AlphaIntegrator {
            table,
            z0: Complex64::new(e, eta),
            two_pi_a: 2.0 * std::f64::consts::PI * a,
            order,
            sigma_max: tail_cutoff(bound, TAIL_TOL),
            levels: (0..=MAX_LEVEL).map(|_| OnceLock::new()).collect(),
            cache: RwLock::new(HashMap::new()),
        }
    }

    pub fn sigma_max(&self) -> f64 {
        self.sigma_max
    }

    pub fn order(&self) -> usize {
        self.order
    }

    /// Certified tail per unit weight.
    pub fn tail_per_weight(&self) -> f64 {
        let eta = self.z0.im;
        tail_bound(eta.powi(-(self.order as i32 + 1)), self.sigma_max)
    }

    fn level(&self, l: u32) -> &Level {
        self.levels[l as usize].get_or_init(|| Level {
            rule: ChiRule::new(l, self.sigma_max),
            factors: (0..self.table.len()).map(|_| OnceLock::new()).collect(),
        })
    }

    fn factors<'a>(&self, level: &'a Level, i: u16) -> &'a [Complex64] {
        level.factors[i as usize].get_or_init(|| {
            let nu = self.table.nu(i);
            level
                .rule
                .sigma
                .iter()
                .map(|&s| (Complex64::new(nu - self.two_pi_a * s, 0.0) - self.z0).inv())
                .collect()
        })
    }

    /// `∫ χ̂(σ) Π_{ν ∈ key} (ν - E - iη - 2πaσ)^{-1} dσ`.
    pub fn integrate_key(&self, key: &PoleKey) -> Result<Smoothed> {
        if let Some(v) = self.cache.read().expect("cache lock").get(key) {
            return Ok(*v);
        }
        let mut last = f64::INFINITY;
        for l in 0..=MAX_LEVEL {
            let level = self.level(l);
            let cols: Vec<&[Complex64]> = key.indices().iter().map(|&i| self.factors(level, i)).collect();
            let mut value = Complex64::default();
            let mut error = 0.0;
            for p in 0..level.rule.panels() {
                let mut k_sum = Complex64::default();
                let mut d_sum = Complex64::default();
                for node in 21 * p..21 * (p + 1) {
                    let prod = cols.iter().fold(Complex64::new(1.0, 0.0), |acc, c| acc * c[node]);
                    k_sum += prod * level.rule.kronrod[node];
                    d_sum += prod * level.rule.difference[node];
                }
                value += k_sum;
                error += d_sum.norm();
            }
            last = error;
            if error <= KEY_TOL {
                let s = Smoothed { value, error };
                self.cache.write().expect("cache lock").insert(*key, s);
                return Ok(s);
            }
        }
        Err(Error::Quadrature { estimate: last, tolerance: KEY_TOL })
    }

    /// `Σ_key w_key I_key` with the combined error budget.
    pub fn integrate_poles(&self, poles: &PoleSum) -> Result<Smoothed> {
        use rayon::prelude::*;
        let terms: Vec<(&PoleKey, &Complex64)> = poles.terms().collect();
        let parts: Vec<Result<(Complex64, f64)>> = terms
            .par_iter()
            .map(|(k, w)| {
                let s = self.integrate_key(k)?;
                Ok((**w * s.value, w.norm() * s.error))
            })
            .collect();
        let mut value = Complex64::default();
        let mut error = 0.0;
        for p in parts {
            let (v, e) = p?;
            value += v;
            error += e;
        }
        error += poles.total_weight() * self.tail_per_weight();
        Ok(Smoothed { value, error })
    }
}

/// `∫ χ̂(σ) f(E + iη + 2πaσ) dσ` for a general `f` with `|f| ≤ bound` on the
/// line; the rule is refined until the error estimate is below `tol`.
pub fn integrate_fn<F>(f: F, e: f64, eta: f64, a: f64, bound: f64, tol: f64) -> Result<Smoothed>
where
    F: Fn(Complex64) -> Complex64 + Sync,
{
    use rayon::prelude::*;
    let sigma_max = tail_cutoff(bound, tol * 0.1);
    let two_pi_a = 2.0 * std::f64::consts::PI * a;
    let mut last = f64::INFINITY;
    for l in 0..=MAX_LEVEL {
        let rule = ChiRule::new(l, sigma_max);
        let vals: Vec<Complex64> = rule
            .sigma
            .par_iter()
            .map(|&s| f(Complex64::new(e + two_pi_a * s, eta)))
            .collect();
        let mut value = Complex64::default();
        let mut error = 0.0;
        for p in 0..rule.panels() {
            let mut k_sum = Complex64::default();
            let mut d_sum = Complex64::default();
            for node in 21 * p..21 * (p + 1) {
                k_sum += vals[node] * rule.kronrod[node];
                d_sum += vals[node] * rule.difference[node];
            }
            value += k_sum;
            error += d_sum.norm();
        }
        last = error;
        if error <= tol {
            return Ok(Smoothed { value, error: error + tail_bound(bound, sigma_max) });
        }
    }
    Err(Error::Quadrature { estimate: last, tolerance: tol })
}
