//! Smoothed density of states: the Lorentzian, the momentum cutoff with its
//! tail bound, the expansion side and the eigenvalue side.

use std::f64::consts::{FRAC_PI_4, PI, SQRT_2};
use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;

use crate::disorder::{expected_v_squared, sample_config, PotentialTable, WeightDistribution};
use crate::error::{Error, Result};
use crate::expansion::poles::NuTable;
use crate::expansion::smoothing::AlphaIntegrator;
use crate::expansion::{t_pole_sum, SpectralWindow};
use crate::lattice::{BoxSpec, Momentum, WaveVector};
use crate::oracle::TruncatedHamiltonian;
use crate::profile::Profile;
use crate::stats::{reduce_samples, Accumulator, McValue};

/// `f_{E,η}(x) = η / ((x - E)² + η²)`.
pub fn f_lorentz(x: f64, e: f64, eta: f64) -> f64 {
    eta / ((x - e).powi(2) + eta * eta)
}

/// `C_{η,E} = 2(η + (1 + E)²/η)`, so that `f_{E,η}(x) ≤ C/(x + 1)²` for `x ≥ 0`.
pub fn c_eta_e(eta: f64, e: f64) -> f64 {
    2.0 * (eta + (1.0 + e).powi(2) / eta)
}

/// `R_κ = ∫_{|p| > κ} (p²/2 + 1)^{-2} dp`: the truncated-lattice star sum and
/// the continuum integral over `ℝ^d` that dominates it for large boxes.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TailR {
    pub lattice: f64,
    pub continuum: f64,
}

fn tail_weight(p_sq: f64) -> f64 {
    (0.5 * p_sq + 1.0).powi(-2)
}

pub fn tail_r(kappa: f64, bx: &BoxSpec) -> Result<TailR> {
    if !(kappa > 0.0) {
        return Err(Error::InvalidParameter { name: "kappa", reason: format!("must be > 0, got {kappa}") });
    }
    let k2 = kappa * kappa;
    let lattice = bx
        .points()
        .iter()
        .map(|p| p.norm_sq(bx))
        .filter(|&p2| p2 > k2 * (1.0 + 1e-12))
        .map(tail_weight)
        .fold(0.0, |acc, x| acc + x)
        / bx.volume();
    let theta = (kappa / SQRT_2).atan();
    let continuum = match bx.dim() {
        1 => 2.0 * SQRT_2 * (FRAC_PI_4 - (theta / 2.0 + (2.0 * theta).sin() / 4.0)),
        2 => 2.0 * PI / (0.5 * k2 + 1.0),
        _ => 8.0 * SQRT_2 * PI * (FRAC_PI_4 - (theta / 2.0 - (2.0 * theta).sin() / 4.0)),
    };
    Ok(TailR { lattice, continuum })
}

/// Distinct positive radii `|p|` of the truncated lattice, ascending.
pub fn shell_radii(bx: &BoxSpec) -> Vec<f64> {
    let mut norms: Vec<i64> = bx.points().iter().map(Momentum::index_norm_sq).filter(|&n| n > 0).collect();
    norms.sort_unstable();
    norms.dedup();
    norms.into_iter().map(|n| (n as f64).sqrt() / bx.side()).collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct KappaChoice {
    pub kappa: f64,
    /// `C_{η,E} (1 + √(λ² E V²))² R_κ` with the lattice tail.
    pub bound: f64,
    pub tail: TailR,
}

/// `C_{η,E} (1 + √(λ² E V(0)²))²`, the factor multiplying `R_κ`.
pub fn tail_prefactor(window: &SpectralWindow, bx: &BoxSpec, profile: &Profile, dist: &WeightDistribution) -> f64 {
    let ev2 = expected_v_squared(bx, profile, dist);
    c_eta_e(window.eta, window.e) * (1.0 + (window.lambda * window.lambda * ev2).sqrt()).powi(2)
}

/// Smallest positive shell radius `κ ≤ p_max` whose tail bound fits the budget.
pub fn choose_kappa(
    window: &SpectralWindow,
    bx: &BoxSpec,
    profile: &Profile,
    dist: &WeightDistribution,
    budget: f64,
) -> Result<KappaChoice> {
    if !(budget > 0.0) {
        return Err(Error::InvalidParameter { name: "budget", reason: format!("must be > 0, got {budget}") });
    }
    let factor = tail_prefactor(window, bx, profile, dist);
    let mut best = f64::INFINITY;
    for kappa in shell_radii(bx).into_iter().filter(|&k| k <= bx.p_max() * (1.0 + 1e-12)) {
        let tail = tail_r(kappa, bx)?;
        let bound = factor * tail.lattice;
        if bound <= budget {
            return Ok(KappaChoice { kappa, bound, tail });
        }
        best = best.min(bound);
    }
    Err(Error::CutoffInsufficient { p_max: bx.p_max(), budget, best })
}

/// Inputs shared by both sides of the density-of-states comparison.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DosRequest {
    pub window: SpectralWindow,
    pub kappa: f64,
    pub order: usize,
    pub samples: u64,
    pub seed: u64,
}

impl DosRequest {
    fn validate(&self, bx: &BoxSpec, dist: &WeightDistribution) -> Result<()> {
        if !(self.kappa > 0.0) || self.kappa > bx.p_max() * (1.0 + 1e-12) {
            return Err(Error::InvalidParameter {
                name: "kappa",
                reason: format!("must lie in (0, p_max = {}], got {}", bx.p_max(), self.kappa),
            });
        }
        if self.window.lambda < 0.0 {
            return Err(Error::InvalidParameter { name: "window.lambda", reason: "must be >= 0".into() });
        }
        if !dist.positive_support() {
            return Err(Error::UnsupportedDistribution(dist.name()));
        }
        Ok(())
    }

    /// Basis points with `|q| ≤ κ`.
    pub fn head(&self, bx: &BoxSpec) -> Vec<Momentum> {
        let k2 = self.kappa * self.kappa * (1.0 + 1e-12);
        bx.points().into_iter().filter(|q| q.norm_sq(bx) <= k2).collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DosExpansion {
    pub value: f64,
    /// Quadrature and certified-tail budget of the `α`-integrals.
    pub numerical_error: f64,
    pub points: usize,
}

/// `Σ_{n ≤ N} λ^n ∫_{|q| ≤ κ} Im S_n[φ_q, φ_q] dq`.
pub fn dos_expansion(req: &DosRequest, bx: &BoxSpec, profile: &Profile, dist: &WeightDistribution) -> Result<DosExpansion> {
    req.validate(bx, dist)?;
    let w = &req.window;
    let table = Arc::new(NuTable::new(bx));
    let integrators: Vec<AlphaIntegrator> =
        (0..=req.order).map(|n| AlphaIntegrator::new(table.clone(), w.e, w.eta, w.a(), n)).collect();
    let head = req.head(bx);
    let per_q: Vec<Result<(f64, f64)>> = head
        .par_iter()
        .map(|q| {
            let psi = WaveVector::plane_wave(*q);
            let mut value = 0.0;
            let mut error = 0.0;
            for (n, integ) in integrators.iter().enumerate() {
                let poles = t_pole_sum(n, bx, profile, dist, &psi, &psi)?;
                let s = integ.integrate_poles(&poles)?;
                let weight = w.lambda.powi(n as i32) * if n % 2 == 0 { 1.0 } else { -1.0 };
                value += weight * s.value.im;
                error += weight.abs() * s.error;
            }
            Ok((value, error))
        })
        .collect();
    let mut value = 0.0;
    let mut error = 0.0;
    for r in per_q {
        let (v, e) = r?;
        value += v;
        error += e;
    }
    Ok(DosExpansion { value: value / bx.volume(), numerical_error: error / bx.volume(), points: head.len() })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DosDirect {
    /// `L^{-d} E Tr f_{E,η}(H)`.
    pub full: McValue<f64>,
    /// The same trace compressed to the plane waves with `|q| ≤ κ`.
    pub head: McValue<f64>,
}

/// Eigenvalue side: Monte Carlo over configurations of `L^{-d} Σ_j f(e_j)`.
pub fn dos_direct(req: &DosRequest, bx: &BoxSpec, profile: &Profile, dist: &WeightDistribution) -> Result<DosDirect> {
    req.validate(bx, dist)?;
    if req.samples == 0 {
        return Err(Error::InvalidParameter { name: "samples", reason: "must be at least 1".into() });
    }
    let w = req.window;
    let basis = bx.points();
    let head = req.head(bx);
    let rows: Vec<usize> = head.iter().map(|q| basis.binary_search(q).expect("head lies in the basis")).collect();
    let f = |x: f64| f_lorentz(x, w.e, w.eta);
    let failure = std::sync::Mutex::new(None::<Error>);
    let acc = reduce_samples(
        req.samples,
        || vec![Accumulator::default(); 2],
        |acc, i| {
            let config = sample_config(bx, dist, req.seed, i);
            let pot = PotentialTable::new(&config, profile, bx);
            match TruncatedHamiltonian::from_table(bx, &pot, w.lambda).and_then(|h| h.eigen()) {
                Ok(spec) => {
                    acc[0].push(spec.trace_of(f) / bx.volume());
                    acc[1].push(spec.projected_trace_of(f, &rows) / bx.volume());
                }
                Err(e) => {
                    failure.lock().expect("lock").get_or_insert(e);
                }
            }
        },
    );
    if let Some(e) = failure.into_inner().expect("lock") {
        return Err(e);
    }
    Ok(DosDirect { full: McValue::from(&acc[0]), head: McValue::from(&acc[1]) })
}

/// `L^{-d} Σ_{|q| ≤ κ} f_{E,η}(ν(q))`, the free density of states restricted
/// to the head.
pub fn free_dos(req: &DosRequest, bx: &BoxSpec) -> f64 {
    req.head(bx).iter().map(|q| f_lorentz(bx.nu(q), req.window.e, req.window.eta)).sum::<f64>() / bx.volume()
}
