//! Expansion coefficients of the averaged resolvent: `T_n` by partition sums
//! and by Monte Carlo, the `χ̂`-smoothed coefficients `S_n`, their partial
//! sums, the explicit truncation bound, and the time-domain cross-check.

pub mod bound;
pub mod coefficients;
pub mod cutoff;
pub mod duhamel;
pub mod poles;
pub mod smoothing;

use std::sync::{Arc, Mutex};

use num_complex::Complex64;
use serde::Serialize;

use crate::disorder::{sample_config, PotentialTable, WeightDistribution};
use crate::error::{Error, Result};
use crate::lattice::{BoxSpec, WaveVector};
use crate::profile::Profile;
use crate::stats::{reduce_samples, Accumulator, ComplexAccumulator};

pub use bound::{bound_at, constructive_n, ConstructiveN};
pub use coefficients::{t_coeffs_mc, t_pole_sum, MAX_DET_ORDER};
pub use cutoff::{chi, chi_hat};
pub use duhamel::{duhamel_crosscheck, free_time_integral, DuhamelReport};

use coefficients::{check_off_axis, config_pole_sums};
use poles::NuTable;
use smoothing::AlphaIntegrator;

/// `a(η, ε) = η / (|ln(ηε/2)| + 1)`.
pub fn a_scale(eta: f64, epsilon: f64) -> f64 {
    eta / ((eta * epsilon / 2.0).ln().abs() + 1.0)
}

/// Energy, imaginary offset, target accuracy and coupling of an expansion.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SpectralWindow {
    pub e: f64,
    pub eta: f64,
    pub epsilon: f64,
    pub lambda: f64,
    pub lambda0: f64,
}

impl SpectralWindow {
    pub fn new(e: f64, eta: f64, epsilon: f64, lambda: f64, lambda0: f64) -> Result<Self> {
        let check = |name: &'static str, ok: bool, v: f64| {
            if ok {
                Ok(())
            } else {
                Err(Error::InvalidParameter { name, reason: format!("invalid value {v}") })
            }
        };
        check("window.E", e.is_finite(), e)?;
        check("window.eta", eta.is_finite() && eta > 0.0, eta)?;
        check("window.epsilon", epsilon.is_finite() && epsilon > 0.0, epsilon)?;
        check("window.lambda0", lambda0.is_finite() && lambda0 >= 0.0, lambda0)?;
        check("window.lambda", lambda.is_finite() && lambda.abs() <= lambda0, lambda)?;
        Ok(SpectralWindow { e, eta, epsilon, lambda, lambda0 })
    }

    pub fn a(&self) -> f64 {
        a_scale(self.eta, self.epsilon)
    }

    pub fn z(&self) -> Complex64 {
        Complex64::new(self.e, self.eta)
    }

    pub fn with_lambda(&self, lambda: f64) -> Result<Self> {
        Self::new(self.e, self.eta, self.epsilon, lambda, self.lambda0.max(lambda.abs()))
    }
}

/// How a coefficient is evaluated.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Method {
    Deterministic,
    MonteCarlo { samples: u64, seed: u64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum MethodTag {
    Deterministic,
    MonteCarlo,
}

impl Method {
    pub fn tag(&self) -> MethodTag {
        match self {
            Method::Deterministic => MethodTag::Deterministic,
            Method::MonteCarlo { .. } => MethodTag::MonteCarlo,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EstimateMeta {
    pub box_spec: String,
    pub profile: String,
    pub distribution: String,
    pub seed: Option<u64>,
    pub samples: Option<u64>,
}

impl EstimateMeta {
    pub fn new(bx: &BoxSpec, profile: &Profile, dist: &WeightDistribution, method: Method) -> Self {
        let (seed, samples) = match method {
            Method::Deterministic => (None, None),
            Method::MonteCarlo { samples, seed } => (Some(seed), Some(samples)),
        };
        EstimateMeta {
            box_spec: format!("L={},d={},p_max={}", bx.side(), bx.dim(), bx.p_max()),
            profile: profile.name(),
            distribution: dist.name(),
            seed,
            samples,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExpansionEstimate {
    pub n: usize,
    pub value: Complex64,
    /// Present exactly when the estimate is stochastic.
    pub stderr: Option<f64>,
    pub method: MethodTag,
    /// Quadrature and certified-tail budget; zero for exact evaluations.
    pub numerical_error: f64,
    pub meta: EstimateMeta,
}

/// Exact `T_n(z)` on the truncated basis.
pub fn t_coeff_det(
    n: usize,
    bx: &BoxSpec,
    profile: &Profile,
    dist: &WeightDistribution,
    z: Complex64,
    psi1: &WaveVector,
    psi2: &WaveVector,
) -> Result<ExpansionEstimate> {
    check_off_axis(z)?;
    let value = t_pole_sum(n, bx, profile, dist, psi1, psi2)?.eval(z)?;
    Ok(ExpansionEstimate {
        n,
        value,
        stderr: None,
        method: MethodTag::Deterministic,
        numerical_error: 0.0,
        meta: EstimateMeta::new(bx, profile, dist, Method::Deterministic),
    })
}

/// Monte Carlo `T_n(z)`.
#[allow(clippy::too_many_arguments)]
pub fn t_coeff_mc(
    n: usize,
    bx: &BoxSpec,
    profile: &Profile,
    dist: &WeightDistribution,
    z: Complex64,
    psi1: &WaveVector,
    psi2: &WaveVector,
    samples: u64,
    seed: u64,
) -> Result<ExpansionEstimate> {
    let est = t_coeffs_mc(n, bx, profile, dist, &[z], psi1, psi2, samples, seed)?;
    let v = est[n][0];
    Ok(ExpansionEstimate {
        n,
        value: v.value,
        stderr: Some(v.stderr),
        method: MethodTag::MonteCarlo,
        numerical_error: 0.0,
        meta: EstimateMeta::new(bx, profile, dist, Method::MonteCarlo { samples, seed }),
    })
}

fn sign(n: usize) -> f64 {
    if n.is_multiple_of(2) {
        1.0
    } else {
        -1.0
    }
}

/// `S_n = (-1)^n ∫ χ̂_a(α) T_n(E + iη + 2πα) dα` for `n = 0..=max_n`.
#[allow(clippy::too_many_arguments)]
pub fn s_coeffs(
    max_n: usize,
    bx: &BoxSpec,
    profile: &Profile,
    dist: &WeightDistribution,
    window: &SpectralWindow,
    psi1: &WaveVector,
    psi2: &WaveVector,
    method: Method,
) -> Result<Vec<ExpansionEstimate>> {
    match method {
        Method::Deterministic => (0..=max_n)
            .map(|n| s_coeff(n, bx, profile, dist, window, psi1, psi2, method))
            .collect(),
        Method::MonteCarlo { samples, seed } => {
            Ok(smoothed_mc(max_n, bx, profile, dist, window, psi1, psi2, samples, seed, &[])?.0)
        }
    }
}

/// A single smoothed coefficient `S_n`.
#[allow(clippy::too_many_arguments)]
pub fn s_coeff(
    n: usize,
    bx: &BoxSpec,
    profile: &Profile,
    dist: &WeightDistribution,
    window: &SpectralWindow,
    psi1: &WaveVector,
    psi2: &WaveVector,
    method: Method,
) -> Result<ExpansionEstimate> {
    match method {
        Method::Deterministic => {
            let poles = t_pole_sum(n, bx, profile, dist, psi1, psi2)?;
            let integ = AlphaIntegrator::new(poles.table().clone(), window.e, window.eta, window.a(), n);
            let s = integ.integrate_poles(&poles)?;
            Ok(ExpansionEstimate {
                n,
                value: s.value * sign(n),
                stderr: None,
                method: MethodTag::Deterministic,
                numerical_error: s.error,
                meta: EstimateMeta::new(bx, profile, dist, method),
            })
        }
        Method::MonteCarlo { .. } => {
            let mut all = s_coeffs(n, bx, profile, dist, window, psi1, psi2, method)?;
            Ok(all.swap_remove(n))
        }
    }
}

/// Monte Carlo `S_n` with common configurations for every order and every
/// quadrature node; optionally also the per-configuration partial sums
/// `Σ_{n ≤ N} λ^n S_n` for each `λ` in `lambdas` (`result.1[λ][N]`).
#[allow(clippy::too_many_arguments)]
fn smoothed_mc(
    max_n: usize,
    bx: &BoxSpec,
    profile: &Profile,
    dist: &WeightDistribution,
    window: &SpectralWindow,
    psi1: &WaveVector,
    psi2: &WaveVector,
    samples: u64,
    seed: u64,
    lambdas: &[f64],
) -> Result<(Vec<ExpansionEstimate>, Vec<Vec<ExpansionEstimate>>)> {
    if samples == 0 {
        return Err(Error::InvalidParameter { name: "samples", reason: "must be at least 1".into() });
    }
    psi1.check_in(bx)?;
    psi2.check_in(bx)?;
    let table = Arc::new(NuTable::new(bx));
    let integrators: Vec<AlphaIntegrator> = (0..=max_n)
        .map(|n| AlphaIntegrator::new(table.clone(), window.e, window.eta, window.a(), n))
        .collect();
    let failure: Mutex<Option<Error>> = Mutex::new(None);
    let orders = max_n + 1;
    let slots = orders * (1 + lambdas.len());

    struct State {
        values: Vec<ComplexAccumulator>,
        errors: Vec<Accumulator>,
    }
    impl crate::stats::Mergeable for State {
        fn merge_from(&mut self, other: Self) {
            self.values.merge_from(other.values);
            self.errors.merge_from(other.errors);
        }
    }

    let state = reduce_samples(
        samples,
        || State { values: vec![ComplexAccumulator::default(); slots], errors: vec![Accumulator::default(); orders] },
        |st, i| {
            let config = sample_config(bx, dist, seed, i);
            let pot = PotentialTable::new(&config, profile, bx);
            let result = config_pole_sums(max_n, bx, &table, &pot, psi1, psi2).and_then(|sums| {
                sums.iter()
                    .zip(&integrators)
                    .map(|(s, integ)| integ.integrate_poles(s))
                    .collect::<Result<Vec<_>>>()
            });
            match result {
                Ok(smoothed) => {
                    for (n, s) in smoothed.iter().enumerate() {
                        st.values[n].push(s.value * sign(n));
                        st.errors[n].push(s.error);
                    }
                    for (li, &lambda) in lambdas.iter().enumerate() {
                        let mut partial = Complex64::default();
                        for (n, s) in smoothed.iter().enumerate() {
                            partial += s.value * sign(n) * lambda.powi(n as i32);
                            st.values[orders * (1 + li) + n].push(partial);
                        }
                    }
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
    let meta = EstimateMeta::new(bx, profile, dist, Method::MonteCarlo { samples, seed });
    let make = |n: usize, acc: &ComplexAccumulator, err: f64| ExpansionEstimate {
        n,
        value: acc.mean(),
        stderr: Some(acc.stderr()),
        method: MethodTag::MonteCarlo,
        numerical_error: err,
        meta: meta.clone(),
    };
    let coeffs = (0..orders).map(|n| make(n, &state.values[n], state.errors[n].mean())).collect();
    let partials = lambdas
        .iter()
        .enumerate()
        .map(|(li, &lambda)| {
            let mut budget = 0.0;
            (0..orders)
                .map(|n| {
                    budget += lambda.abs().powi(n as i32) * state.errors[n].mean();
                    make(n, &state.values[orders * (1 + li) + n], budget)
                })
                .collect()
        })
        .collect();
    Ok((coeffs, partials))
}

/// `Σ_{n ≤ N} λ^n S_n` for every `N = 0..=max_n`, from precomputed coefficients.
pub fn partial_sums(coeffs: &[ExpansionEstimate], lambda: f64) -> Vec<Complex64> {
    let mut acc = Complex64::default();
    coeffs
        .iter()
        .map(|c| {
            acc += c.value * lambda.powi(c.n as i32);
            acc
        })
        .collect()
}

/// `Σ_{n=0}^{N} λ^n S_n` with `λ = window.lambda`.
#[allow(clippy::too_many_arguments)]
pub fn resolvent_partial_sum(
    big_n: usize,
    window: &SpectralWindow,
    bx: &BoxSpec,
    profile: &Profile,
    dist: &WeightDistribution,
    psi1: &WaveVector,
    psi2: &WaveVector,
    method: Method,
) -> Result<ExpansionEstimate> {
    match method {
        Method::Deterministic => {
            let coeffs = s_coeffs(big_n, bx, profile, dist, window, psi1, psi2, method)?;
            let value = *partial_sums(&coeffs, window.lambda).last().expect("at least one order");
            let numerical_error = coeffs
                .iter()
                .map(|c| window.lambda.abs().powi(c.n as i32) * c.numerical_error)
                .sum();
            Ok(ExpansionEstimate {
                n: big_n,
                value,
                stderr: None,
                method: MethodTag::Deterministic,
                numerical_error,
                meta: EstimateMeta::new(bx, profile, dist, method),
            })
        }
        Method::MonteCarlo { samples, seed } => {
            let (_, mut partials) =
                smoothed_mc(big_n, bx, profile, dist, window, psi1, psi2, samples, seed, &[window.lambda])?;
            Ok(partials.swap_remove(0).swap_remove(big_n))
        }
    }
}

/// The budget `ε/2 · ‖ψ_1‖‖ψ_2‖` for replacing the resolvent by its
/// cut-off time integral at scale `a(η, ε)`.
pub fn cutoff_budget(window: &SpectralWindow, psi1: &WaveVector, psi2: &WaveVector) -> f64 {
    window.epsilon / 2.0 * psi1.norm() * psi2.norm()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::Momentum;

    fn setup() -> (BoxSpec, Profile, SpectralWindow) {
        (
            BoxSpec::new(4.0, 1, 3.0).unwrap(),
            Profile::gaussian(1.0).unwrap(),
            SpectralWindow::new(1.0, 0.5, 0.25, 0.1, 1.0).unwrap(),
        )
    }

    #[test]
    fn scale_examples() {
        assert_eq!(a_scale(2.0, 1.0), 2.0);
        assert!((a_scale(1.0, 2.0 * (-2f64).exp()) - 1.0 / 3.0).abs() < 1e-15);
        assert!((a_scale(0.5, 0.25) - 0.5 / (1.0 + 16f64.ln())).abs() < 1e-15);
        let w = SpectralWindow::new(0.3, 0.7, 0.01, 0.0, 1.0).unwrap();
        assert!(w.a() > 0.0 && w.a() <= w.eta);
        assert!(SpectralWindow::new(1.0, 0.5, 0.25, 2.0, 1.0).is_err());
        assert!(SpectralWindow::new(1.0, 0.0, 0.25, 0.0, 1.0).is_err());
    }

    #[test]
    fn s0_matches_time_domain() {
        let (bx, prof, w) = setup();
        let psi = WaveVector::plane_wave(Momentum::ZERO);
        let s0 = s_coeff(0, &bx, &prof, &WeightDistribution::Rademacher, &w, &psi, &psi, Method::Deterministic).unwrap();
        let oracle = free_time_integral(0.0, &w).unwrap();
        assert!((s0.value - oracle).norm() < 1e-6, "{} vs {}", s0.value, oracle);
        assert!(s0.numerical_error < 1e-8);
    }

    #[test]
    fn s_independent_of_lambda_and_zero_for_odd_symmetric() {
        let (bx, prof, w) = setup();
        let psi = WaveVector::plane_wave(Momentum::new(&[1]));
        let a = s_coeff(2, &bx, &prof, &WeightDistribution::Rademacher, &w, &psi, &psi, Method::Deterministic).unwrap();
        let b = s_coeff(2, &bx, &prof, &WeightDistribution::Rademacher, &w.with_lambda(0.0).unwrap(), &psi, &psi, Method::Deterministic)
            .unwrap();
        assert_eq!(a.value, b.value);
        let s1 = s_coeff(1, &bx, &prof, &WeightDistribution::Rademacher, &w, &psi, &psi, Method::Deterministic).unwrap();
        assert_eq!(s1.value, Complex64::default());
    }

    #[test]
    fn zeroth_partial_sum_is_close_to_free_resolvent() {
        let (bx, prof, _) = setup();
        let w = SpectralWindow::new(1.0, 0.5, 0.05, 0.0, 1.0).unwrap();
        for m in [0, 2, 5] {
            let q = Momentum::new(&[m]);
            let psi = WaveVector::plane_wave(q);
            let s = resolvent_partial_sum(0, &w, &bx, &prof, &WeightDistribution::UniformZeroOne, &psi, &psi, Method::Deterministic)
                .unwrap();
            let exact = 1.0 / (bx.nu(&q) - w.z());
            assert!((s.value - exact).norm() <= cutoff_budget(&w, &psi, &psi));
        }
    }

    #[test]
    fn monte_carlo_smoothing_agrees_with_exact() {
        let (_, prof, w) = setup();
        let bx = BoxSpec::new(2.0, 1, 1.0).unwrap();
        let psi = WaveVector::plane_wave(Momentum::ZERO);
        let dist = WeightDistribution::UniformZeroOne;
        let det = s_coeffs(2, &bx, &prof, &dist, &w, &psi, &psi, Method::Deterministic).unwrap();
        let mc = s_coeffs(2, &bx, &prof, &dist, &w, &psi, &psi, Method::MonteCarlo { samples: 4000, seed: 3 }).unwrap();
        for (d, m) in det.iter().zip(&mc) {
            let se = m.stderr.unwrap();
            assert!((d.value - m.value).norm() <= 4.0 * se + 1e-9, "n={}: {} vs {} ± {}", d.n, d.value, m.value, se);
        }
        assert_eq!(mc[0].stderr, Some(0.0));
    }
}
