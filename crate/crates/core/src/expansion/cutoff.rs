//! The smooth time cutoff `χ`, its Fourier transform, the decay constant of
//! the transform, and the composite rule used for `α`-integrals against `χ̂`.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Arc, OnceLock, RwLock};

use crate::quadrature::{gk21_rule, integrate, integrate_with_breaks, QuadOptions};

/// Below this argument `e^{-1/s}` is treated as identically zero (it is
/// below `e^{-1000}` there, together with all its derivatives).
const FLAT: f64 = 1e-3;

fn g(s: f64) -> f64 {
    if s <= FLAT {
        0.0
    } else {
        (-1.0 / s).exp()
    }
}

/// The transition `h(t) = g(2-t) / (g(2-t) + g(t-1))` on `[1, 2]`.
fn transition(t: f64) -> f64 {
    let a = g(2.0 - t);
    let b = g(t - 1.0);
    a / (a + b)
}

/// `χ(t)`: 1 on `[-1, 1]`, 0 for `|t| ≥ 2`, smooth in between.
pub fn chi(t: f64) -> f64 {
    let t = t.abs();
    if t <= 1.0 {
        1.0
    } else if t >= 2.0 {
        0.0
    } else {
        transition(t)
    }
}

/// `χ_a(t) = χ(a t)`.
pub fn chi_scaled(a: f64, t: f64) -> f64 {
    chi(a * t)
}

/// `χ̂(σ) = ∫ χ(t) e^{-2πiσt} dt = 2[sin(2πσ)/(2πσ) + ∫_1^2 h(t) cos(2πσt) dt]`,
/// to absolute accuracy `1e-10`.
pub fn chi_hat(sigma: f64) -> f64 {
    let x = 2.0 * PI * sigma;
    let plateau = if x.abs() < 1e-4 {
        1.0 - x * x / 6.0
    } else {
        x.sin() / x
    };
    // One panel per oscillation keeps the adaptive rule out of trouble.
    let pieces = (sigma.abs().ceil() as usize).clamp(1, 4096);
    let breaks: Vec<f64> = (0..=pieces).map(|k| 1.0 + k as f64 / pieces as f64).collect();
    let ramp = integrate_with_breaks(|t| transition(t) * (x * t).cos(), &breaks, QuadOptions::abs(2.5e-11))
        .expect("χ̂ quadrature converges for a smooth integrand");
    2.0 * (plateau + ramp.value)
}

/// Truncated Taylor series `Σ_k c_k ε^k` up to order 8.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Jet {
    pub c: [f64; 9],
}

impl Jet {
    pub fn constant(v: f64) -> Self {
        let mut c = [0.0; 9];
        c[0] = v;
        Jet { c }
    }

    /// The identity jet at `x`, scaled by `slope`: `x + slope ε`.
    pub fn variable(x: f64, slope: f64) -> Self {
        let mut j = Self::constant(x);
        j.c[1] = slope;
        j
    }

    pub fn add(&self, o: &Jet) -> Jet {
        let mut c = self.c;
        c.iter_mut().zip(o.c).for_each(|(a, b)| *a += b);
        Jet { c }
    }

    pub fn mul(&self, o: &Jet) -> Jet {
        let mut c = [0.0; 9];
        for (i, ci) in c.iter_mut().enumerate() {
            *ci = (0..=i).map(|j| self.c[j] * o.c[i - j]).sum();
        }
        Jet { c }
    }

    pub fn recip(&self) -> Jet {
        let mut r = [0.0; 9];
        r[0] = 1.0 / self.c[0];
        for k in 1..9 {
            let s: f64 = (1..=k).map(|j| self.c[j] * r[k - j]).sum();
            r[k] = -s * r[0];
        }
        Jet { c: r }
    }

    pub fn div(&self, o: &Jet) -> Jet {
        self.mul(&o.recip())
    }

    pub fn exp(&self) -> Jet {
        let mut e = [0.0; 9];
        e[0] = self.c[0].exp();
        for k in 1..9 {
            let s: f64 = (1..=k).map(|j| j as f64 * self.c[j] * e[k - j]).sum();
            e[k] = s / k as f64;
        }
        Jet { c: e }
    }

    pub fn scale(&self, f: f64) -> Jet {
        Jet { c: self.c.map(|v| v * f) }
    }

    /// `k`-th derivative of the represented function.
    pub fn derivative(&self, k: usize) -> f64 {
        let fact: f64 = (1..=k).map(|i| i as f64).product();
        self.c[k] * fact
    }
}

fn g_jet(s: &Jet) -> Jet {
    if s.c[0] <= FLAT {
        Jet::constant(0.0)
    } else {
        s.recip().scale(-1.0).exp()
    }
}

/// Taylor jet of the transition `h` at `t ∈ (1, 2)`.
pub fn transition_jet(t: f64) -> Jet {
    let a = g_jet(&Jet::variable(2.0 - t, -1.0));
    let b = g_jet(&Jet::variable(t - 1.0, 1.0));
    a.div(&a.add(&b))
}

/// `‖χ^{(8)}‖_{L¹} = 2 ∫_1^2 |h^{(8)}(t)| dt`.
pub fn chi_eighth_derivative_l1() -> f64 {
    static VALUE: OnceLock<f64> = OnceLock::new();
    *VALUE.get_or_init(|| {
        let breaks: Vec<f64> = (0..=64).map(|k| 1.0 + k as f64 / 64.0).collect();
        let opts = QuadOptions { abs_tol: 0.0, rel_tol: 1e-9, max_panels: 20_000 };
        let q = integrate_with_breaks(|t| transition_jet(t).derivative(8).abs(), &breaks, opts)
            .expect("|h^(8)| is integrable");
        2.0 * q.value
    })
}

/// `c_8` in `|χ̂(σ)| ≤ c_8 / |σ|^8`, i.e. `‖χ^{(8)}‖_1 / (2π)^8`.
pub fn decay_constant() -> f64 {
    chi_eighth_derivative_l1() / (2.0 * PI).powi(8)
}

/// Base panel width of the `σ` grid; panel widths at level `ℓ` are `H0 / 2^ℓ`.
pub const H0: f64 = 0.25;
pub const MAX_LEVEL: u32 = 5;

type PanelValues = Arc<[f64; 21]>;

/// `χ̂` at the 21 Kronrod nodes of panel `k` (covering `[k h, (k + 1) h]`).
fn chi_hat_panel(level: u32, k: i64) -> PanelValues {
    static CACHE: OnceLock<RwLock<HashMap<(u32, i64), PanelValues>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| RwLock::new(HashMap::new()));
    if let Some(v) = cache.read().expect("cache lock").get(&(level, k)) {
        return v.clone();
    }
    let (x, _, _) = gk21_rule();
    let h = H0 / f64::from(1u32 << level);
    let lo = k as f64 * h;
    let vals: PanelValues = Arc::new(x.map(|xi| chi_hat(lo + 0.5 * h * (xi + 1.0))));
    cache.write().expect("cache lock").insert((level, k), vals.clone());
    vals
}

/// Node positions and weights (`w · χ̂`) of the composite rule on
/// `[-σ_max, σ_max]` at a refinement level, with `(w_K - w_G) · χ̂`
/// for the per-panel error estimate.
pub struct ChiRule {
    pub level: u32,
    pub sigma: Vec<f64>,
    pub kronrod: Vec<f64>,
    pub difference: Vec<f64>,
}

impl ChiRule {
    /// `sigma_max` must be a multiple of [`H0`].
    pub fn new(level: u32, sigma_max: f64) -> Self {
        let (x, wk, wg) = gk21_rule();
        let h = H0 / f64::from(1u32 << level);
        let half_panels = (sigma_max / h).round() as i64;
        let panels: Vec<i64> = (-half_panels..half_panels).collect();
        let chis: Vec<PanelValues> = {
            use rayon::prelude::*;
            panels.par_iter().map(|&k| chi_hat_panel(level, k)).collect()
        };
        let mut sigma = Vec::with_capacity(21 * panels.len());
        let mut kronrod = Vec::with_capacity(sigma.capacity());
        let mut difference = Vec::with_capacity(sigma.capacity());
        for (&k, c) in panels.iter().zip(&chis) {
            let lo = k as f64 * h;
            for i in 0..21 {
                sigma.push(lo + 0.5 * h * (x[i] + 1.0));
                kronrod.push(0.5 * h * wk[i] * c[i]);
                difference.push(0.5 * h * (wk[i] - wg[i]) * c[i]);
            }
        }
        ChiRule { level, sigma, kronrod, difference }
    }

    pub fn panels(&self) -> usize {
        self.sigma.len() / 21
    }
}

/// Smallest multiple of [`H0`] (at least 4) beyond which
/// `2 c_8 bound / (7 Σ^7) ≤ tol`, where `bound` majorizes the modulus of the
/// function integrated against `χ̂`.
pub fn tail_cutoff(bound: f64, tol: f64) -> f64 {
    let s = (2.0 * decay_constant() * bound.max(f64::MIN_POSITIVE) / (7.0 * tol)).powf(1.0 / 7.0);
    ((s / H0).ceil() * H0).max(4.0)
}

/// The certified tail `2 c_8 bound / (7 Σ^7)`.
pub fn tail_bound(bound: f64, sigma_max: f64) -> f64 {
    2.0 * decay_constant() * bound / (7.0 * sigma_max.powi(7))
}

/// `∫ χ(t) dt` over the transition by adaptive quadrature; equals `1/2`.
pub fn transition_mass() -> f64 {
    integrate(transition, 1.0, 2.0, QuadOptions::abs(1e-13)).expect("smooth").value
}
