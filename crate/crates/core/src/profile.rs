//! Single-site potential profiles and their lattice Fourier data.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::lattice::{BoxSpec, Momentum, StarNorm};

/// Profile shape. `B(x) = e^{-π|x/w|²} / w^d`, so `B̂(0) = 1` for every width.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Profile {
    Gaussian { width: f64 },
}

impl Profile {
    pub fn gaussian(width: f64) -> Result<Self> {
        if !width.is_finite() || width <= 0.0 {
            return Err(Error::InvalidParameter {
                name: "profile.width",
                reason: format!("must be positive, got {width}"),
            });
        }
        Ok(Profile::Gaussian { width })
    }

    pub fn width(&self) -> f64 {
        match *self {
            Profile::Gaussian { width } => width,
        }
    }

    pub fn name(&self) -> String {
        match *self {
            Profile::Gaussian { width } => format!("gaussian(w={width})"),
        }
    }

    /// `B̂` at a momentum with squared norm `k²`.
    pub fn hat_of_norm_sq(&self, k_sq: f64) -> f64 {
        let w = self.width();
        (-PI * w * w * k_sq).exp()
    }

    /// `B(x)` on the whole space.
    pub fn value(&self, x: &[f64]) -> f64 {
        let w = self.width();
        let r2: f64 = x.iter().map(|v| v * v).sum::<f64>() / (w * w);
        (-PI * r2).exp() / w.powi(x.len() as i32)
    }

    /// Image count per axis so the neglected periodic images are below `1e-16`
    /// relative to the profile's peak.
    fn images(&self, side: f64) -> i32 {
        // e^{-π r²/w²} < 1e-16 once r > 3.4 w
        (3.5 * self.width() / side).ceil() as i32 + 1
    }

    /// Periodization `B_#(x) = Σ_n B(x + nL)` on the box.
    pub fn periodized(&self, bx: &BoxSpec, x: &[f64]) -> f64 {
        let k = self.images(bx.side());
        let w = self.width();
        // The Gaussian factorizes over axes.
        x.iter()
            .map(|&xj| {
                (-k..=k)
                    .map(|n| {
                        let y = (xj + f64::from(n) * bx.side()) / w;
                        (-PI * y * y).exp() / w
                    })
                    .sum::<f64>()
            })
            .product()
    }

    /// `∫_{Λ_L} |B_#(x)|² dx`, exact via the image sum
    /// `2^{-d/2} w^{-d} (Σ_n e^{-π L² n² / (2 w²)})^d`.
    pub fn periodized_l2_sq(&self, bx: &BoxSpec) -> f64 {
        let w = self.width();
        let l = bx.side();
        let k = self.images(l) + 2;
        let axis: f64 = (-k..=k)
            .map(|n| (-PI * (l * f64::from(n)).powi(2) / (2.0 * w * w)).exp())
            .sum();
        let d = bx.dim() as i32;
        (axis / (2f64.sqrt() * w)).powi(d)
    }
}

/// `B̂_#(k) = B̂(k)` at a lattice momentum.
pub fn profile_hat(profile: &Profile, bx: &BoxSpec, k: &Momentum) -> f64 {
    profile.hat_of_norm_sq(k.norm_sq(bx))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ProfileNorms {
    pub norm_1: f64,
    pub norm_inf: f64,
    pub norm_1_inf: f64,
}

/// `‖B̂_#‖_{*,1}`, `‖B̂_#‖_{*,∞}` and their sum over the truncated lattice.
pub fn profile_norms(profile: &Profile, bx: &BoxSpec) -> ProfileNorms {
    let f = |p: &Momentum| Complex64::new(profile_hat(profile, bx, p), 0.0);
    let norm_1 = crate::lattice::star_norm(bx, f, StarNorm::L1);
    let norm_inf = crate::lattice::star_norm(bx, f, StarNorm::Sup);
    ProfileNorms {
        norm_1,
        norm_inf,
        norm_1_inf: norm_1 + norm_inf,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DecayReport {
    /// `max_k Π_j (1 + k_j²) |B̂_#(k)|` over the truncated lattice.
    pub weighted_max: f64,
    pub argmax: Momentum,
    /// Seminorm bound `π^d Σ_{α_j ∈ {0,2}} (2π)^{-|α|} sup |⟨x⟩^{2d} ∂^α B|`.
    pub bound: f64,
}

/// Scans the weighted transform over the lattice and compares it with the
/// Schwartz-seminorm bound.
///
/// The bound follows from `Π(1 + k_j²) f̂(k)` being the transform of
/// `Π(1 - ∂_j²/4π²) f` and `∫⟨x⟩^{-2d} ≤ π^d`. The supremum over `x` is
/// over-estimated by the separable majorant `⟨x⟩^{2d} ≤ Π_j ⟨x_j⟩^{2d}`.
pub fn verify_decay_bound(profile: &Profile, bx: &BoxSpec) -> Result<DecayReport> {
    let d = bx.dim();
    let (mut weighted_max, mut argmax) = (0.0, Momentum::ZERO);
    for p in bx.points() {
        let weight: f64 = p.components(bx).iter().map(|k| 1.0 + k * k).product();
        let v = weight * profile_hat(profile, bx, &p).abs();
        if v > weighted_max {
            weighted_max = v;
            argmax = p;
        }
    }

    let w = profile.width();
    // sup_t ⟨t⟩^{2d} |g^{(a)}(t)| for g(t) = e^{-π t²/w²}/w, a ∈ {0, 2}
    let axis_sup = |order: u32| -> f64 {
        let steps = 200_000;
        let t_max = 30.0 * w;
        (0..=steps)
            .map(|i| {
                let t = t_max * f64::from(i) / f64::from(steps);
                let g = (-PI * t * t / (w * w)).exp() / w;
                let deriv = match order {
                    0 => g,
                    _ => g * ((2.0 * PI * t / (w * w)).powi(2) - 2.0 * PI / (w * w)),
                };
                (1.0 + t * t).powi(d as i32) * deriv.abs()
            })
            .fold(0.0, f64::max)
    };
    // Slack for the grid under-resolving the supremum.
    let s0 = axis_sup(0) * (1.0 + 1e-6);
    let s2 = axis_sup(2) * (1.0 + 1e-6);
    let per_axis = s0 + s2 / (4.0 * PI * PI);
    let bound = PI.powi(d as i32) * per_axis.powi(d as i32);

    if weighted_max > bound {
        return Err(Error::BoundViolated { measured: weighted_max, bound });
    }
    Ok(DecayReport { weighted_max, argmax, bound })
}
