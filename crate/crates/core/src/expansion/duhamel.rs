//! Time-domain evaluation of the cut-off Duhamel terms for a fixed
//! configuration, and its comparison with the frequency-domain form.

use num_complex::Complex64;
use serde::Serialize;

use super::coefficients::{neumann_chain, potential_matrix};
use super::cutoff::chi_scaled;
use super::smoothing::integrate_fn;
use super::SpectralWindow;
use crate::disorder::{DisorderConfig, PotentialTable};
use crate::error::{Error, Result};
use crate::lattice::{BoxSpec, Momentum, WaveVector};
use crate::profile::Profile;
use crate::quadrature::{integrate, integrate_with_breaks, QuadOptions};

const OUTER_TOL: f64 = 1e-10;
const INNER_TOL: f64 = 1e-12;

fn cis(x: f64) -> Complex64 {
    Complex64::from_polar(1.0, x)
}

/// `i ∫_0^{2/a} χ_a(t) e^{-it(ν - E - iη)} dt`, the cut-off free resolvent.
pub fn free_time_integral(nu: f64, window: &SpectralWindow) -> Result<Complex64> {
    let a = window.a();
    let q = integrate_with_breaks(
        |t| chi_scaled(a, t) * cis(-t * (nu - window.e)) * (-window.eta * t).exp(),
        &[0.0, 1.0 / a, 2.0 / a],
        QuadOptions::abs(1e-12),
    )?;
    Ok(Complex64::i() * q.value)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DuhamelReport {
    pub n: usize,
    pub time_value: Complex64,
    pub freq_value: Complex64,
    pub discrepancy: f64,
}

/// Compares `∫ χ_a(t) ⟨ψ_1, E_n(t) e^{iEt - ηt} ψ_2⟩ dt` (nested quadrature
/// over the simplex) with `(-i)^{n+1} ∫ χ̂_a(α) ⟨ψ_1, R(VR)^n ψ_2⟩ dα` at
/// `z = E + iη + 2πα`, for `n ∈ {0, 1}`.
pub fn duhamel_crosscheck(
    n: usize,
    bx: &BoxSpec,
    profile: &Profile,
    config: &DisorderConfig,
    window: &SpectralWindow,
    psi1: &WaveVector,
    psi2: &WaveVector,
) -> Result<DuhamelReport> {
    if n > 1 {
        return Err(Error::SizeLimit { what: "Duhamel cross-check order", value: n, max: 1 });
    }
    psi1.check_in(bx)?;
    psi2.check_in(bx)?;
    let a = window.a();
    let basis = bx.points();
    let pot = PotentialTable::new(config, profile, bx);

    // (ν_p, ν_q, conj(c1_p) ⟨φ_p, W φ_q⟩ c2_q), W = 1 for n = 0 and V for n = 1
    let mut pairs: Vec<(f64, f64, Complex64)> = Vec::new();
    for (p, c1) in psi1.iter() {
        for (q, c2) in psi2.iter() {
            let w = if n == 0 {
                if p == q { Complex64::new(1.0, 0.0) } else { Complex64::default() }
            } else {
                pot.matrix_element(p, q)
            };
            if w != Complex64::default() {
                pairs.push((bx.nu(p), bx.nu(q), c1.conj() * w * c2));
            }
        }
    }

    let envelope = |t: f64| chi_scaled(a, t) * cis(window.e * t) * (-window.eta * t).exp();
    let outer = |t: f64| -> Complex64 {
        let amplitude = if n == 0 {
            pairs.iter().map(|&(nu, _, c)| c * cis(-t * nu)).sum()
        } else if t == 0.0 {
            Complex64::default()
        } else {
            integrate(
                |s: f64| pairs.iter().map(|&(np, nq, c)| c * cis(-(t - s) * np - s * nq)).sum::<Complex64>(),
                0.0,
                t,
                QuadOptions::abs(INNER_TOL),
            )
            .map(|q| q.value)
            .unwrap_or(Complex64::new(f64::NAN, f64::NAN))
        };
        envelope(t) * amplitude
    };
    let time = integrate_with_breaks(outer, &[0.0, 1.0 / a, 2.0 / a], QuadOptions::abs(OUTER_TOL))?;
    if !time.value.re.is_finite() {
        return Err(Error::Quadrature { estimate: f64::INFINITY, tolerance: INNER_TOL });
    }

    let nus: Vec<f64> = basis.iter().map(|p: &Momentum| bx.nu(p)).collect();
    let vmat = potential_matrix(bx, &pot, &basis);
    let d1 = psi1.to_dense(bx)?;
    let d2 = psi2.to_dense(bx)?;
    let v_norm = vmat.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
    let bound = psi1.norm() * psi2.norm() * v_norm.powi(n as i32) * window.eta.powi(-(n as i32 + 1));
    let freq = integrate_fn(
        |z| neumann_chain(n, &nus, &vmat, &d1, &d2, z).expect("z is off the real axis")[n],
        window.e,
        window.eta,
        a,
        bound,
        1e-10,
    )?;
    let prefactor = (-Complex64::i()).powu(n as u32 + 1);
    let freq_value = prefactor * freq.value;
    Ok(DuhamelReport {
        n,
        time_value: time.value,
        freq_value,
        discrepancy: (time.value - freq_value).norm(),
    })
}
