//! Finite periodic box, its truncated dual lattice and the star-integral.
//!
//! Momenta are stored as integer index vectors `m` with `p = m / L`, so
//! lattice membership, negation and differences are exact. Physical
//! components are derived on demand.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Neg, Sub};

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};

/// Upper limit on the number of truncated lattice points.
pub const MAX_BASIS: usize = 1 << 20;

/// A momentum of the dual lattice `(Z/L)^d`, stored by its integer indices.
///
/// Unused trailing components (for `d < 3`) are zero.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct Momentum {
    idx: [i32; 3],
}

impl Momentum {
    pub const ZERO: Momentum = Momentum { idx: [0; 3] };

    /// Builds a momentum from up to three integer indices.
    pub fn new(indices: &[i32]) -> Self {
        assert!(indices.len() <= 3, "at most three spatial dimensions");
        let mut idx = [0; 3];
        idx[..indices.len()].copy_from_slice(indices);
        Momentum { idx }
    }

    pub fn indices(&self) -> [i32; 3] {
        self.idx
    }

    /// Squared Euclidean norm of the index vector, `L^2 |p|^2`.
    pub fn index_norm_sq(&self) -> i64 {
        self.idx.iter().map(|&m| i64::from(m) * i64::from(m)).sum()
    }

    pub fn is_zero(&self) -> bool {
        self.idx == [0; 3]
    }

    /// Physical components `m_j / L` for the first `d` axes.
    pub fn components(&self, bx: &BoxSpec) -> Vec<f64> {
        self.idx[..bx.dim()]
            .iter()
            .map(|&m| f64::from(m) / bx.side())
            .collect()
    }

    /// `|p|^2` in physical units.
    pub fn norm_sq(&self, bx: &BoxSpec) -> f64 {
        self.index_norm_sq() as f64 / (bx.side() * bx.side())
    }
}

impl Add for Momentum {
    type Output = Momentum;
    fn add(self, rhs: Momentum) -> Momentum {
        Momentum {
            idx: [
                self.idx[0] + rhs.idx[0],
                self.idx[1] + rhs.idx[1],
                self.idx[2] + rhs.idx[2],
            ],
        }
    }
}

impl Sub for Momentum {
    type Output = Momentum;
    fn sub(self, rhs: Momentum) -> Momentum {
        self + (-rhs)
    }
}

impl Neg for Momentum {
    type Output = Momentum;
    fn neg(self) -> Momentum {
        Momentum {
            idx: [-self.idx[0], -self.idx[1], -self.idx[2]],
        }
    }
}

impl fmt::Display for Momentum {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {}, {}]", self.idx[0], self.idx[1], self.idx[2])
    }
}

/// The box `[-L/2, L/2)^d` together with the momentum cutoff that truncates
/// its dual lattice to `{p : max_j |p_j| <= p_max}`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BoxSpec {
    side: f64,
    dim: usize,
    p_max: f64,
    #[serde(skip)]
    n_max: i32,
}

impl BoxSpec {
    pub fn new(side: f64, dim: usize, p_max: f64) -> Result<Self> {
        if !side.is_finite() || side < 1.0 {
            return Err(Error::InvalidBox(format!("side length L = {side} must be >= 1")));
        }
        if !(1..=3).contains(&dim) {
            return Err(Error::InvalidBox(format!("dimension d = {dim} must be 1, 2 or 3")));
        }
        if !p_max.is_finite() || p_max <= 0.0 {
            return Err(Error::InvalidBox(format!("cutoff p_max = {p_max} must be > 0")));
        }
        // The tiny slack keeps e.g. p_max = 3, L = 4 at exactly 12 despite rounding.
        let n_max = (p_max * side + 1e-9).floor();
        let count = (2.0 * n_max + 1.0).powi(dim as i32);
        if count > MAX_BASIS as f64 {
            return Err(Error::SizeLimit {
                what: "truncated lattice size",
                value: count as usize,
                max: MAX_BASIS,
            });
        }
        Ok(BoxSpec {
            side,
            dim,
            p_max,
            n_max: n_max as i32,
        })
    }

    pub fn side(&self) -> f64 {
        self.side
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn p_max(&self) -> f64 {
        self.p_max
    }

    /// Largest admissible index `floor(p_max L)` along each axis.
    pub fn index_cutoff(&self) -> i32 {
        self.n_max
    }

    /// `|Λ_L| = L^d`.
    pub fn volume(&self) -> f64 {
        self.side.powi(self.dim as i32)
    }

    /// Number of truncated lattice points, `(2 n_max + 1)^d`.
    pub fn len(&self) -> usize {
        ((2 * self.n_max + 1) as usize).pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn contains(&self, p: &Momentum) -> bool {
        let idx = p.indices();
        idx[..self.dim].iter().all(|m| m.abs() <= self.n_max)
            && idx[self.dim..].iter().all(|&m| m == 0)
    }

    /// Position of `p` in the canonical (lexicographic) order.
    pub fn index_of(&self, p: &Momentum) -> Option<usize> {
        if !self.contains(p) {
            return None;
        }
        let width = (2 * self.n_max + 1) as usize;
        let idx = p.indices();
        Some(
            idx[..self.dim]
                .iter()
                .fold(0, |acc, &m| acc * width + (m + self.n_max) as usize),
        )
    }

    /// Converts physical components to a lattice momentum; the components must
    /// be integer multiples of `1/L` (up to rounding noise of `1e-9`).
    pub fn momentum(&self, components: &[f64]) -> Result<Momentum> {
        if components.len() != self.dim {
            return Err(Error::InvalidParameter {
                name: "momentum",
                reason: format!("expected {} components, got {}", self.dim, components.len()),
            });
        }
        let mut idx = [0i32; 3];
        for (slot, &c) in idx.iter_mut().zip(components) {
            let scaled = c * self.side;
            let rounded = scaled.round();
            if (scaled - rounded).abs() > 1e-9 || rounded.abs() > i32::MAX as f64 {
                return Err(Error::InvalidParameter {
                    name: "momentum",
                    reason: format!("component {c} is not a multiple of 1/L = {}", 1.0 / self.side),
                });
            }
            *slot = rounded as i32;
        }
        Ok(Momentum { idx })
    }

    /// The truncated dual lattice in lexicographic order of the integer indices.
    pub fn points(&self) -> Vec<Momentum> {
        let n = self.n_max;
        let range = -n..=n;
        match self.dim {
            1 => range.map(|a| Momentum::new(&[a])).collect(),
            2 => range
                .clone()
                .flat_map(|a| (-n..=n).map(move |b| Momentum::new(&[a, b])))
                .collect(),
            _ => range
                .clone()
                .flat_map(|a| {
                    (-n..=n).flat_map(move |b| (-n..=n).map(move |c| Momentum::new(&[a, b, c])))
                })
                .collect(),
        }
    }

    /// Kinetic energy `ν(p) = p²/2`.
    pub fn nu(&self, p: &Momentum) -> f64 {
        0.5 * p.norm_sq(self)
    }

    /// `ν` for a squared index norm; pole keys are stored this way.
    pub fn nu_of_index_norm(&self, index_norm_sq: i64) -> f64 {
        0.5 * index_norm_sq as f64 / (self.side * self.side)
    }
}

/// Dual-lattice points of the truncated box, in canonical order.
pub fn dual_lattice_points(bx: &BoxSpec) -> Vec<Momentum> {
    bx.points()
}

/// `∫_{Λ*} f(p) dp = L^{-d} Σ_p f(p)` over the truncated lattice.
pub fn star_integral<F>(bx: &BoxSpec, f: F) -> Complex64
where
    F: Fn(&Momentum) -> Complex64,
{
    let sum: Complex64 = bx.points().iter().map(f).sum();
    sum / bx.volume()
}

/// The energy function `ν(p) = ½ Σ_j p_j²`.
pub fn nu(bx: &BoxSpec, p: &Momentum) -> f64 {
    bx.nu(p)
}

/// Eigenvalue `(ν(p) - z)^{-1}` of the free resolvent on the plane wave `φ_p`.
pub fn free_resolvent_multiplier(bx: &BoxSpec, p: &Momentum, z: Complex64) -> Result<Complex64> {
    resolvent_factor(bx.nu(p), z)
}

pub(crate) fn resolvent_factor(nu: f64, z: Complex64) -> Result<Complex64> {
    let denom = Complex64::new(nu - z.re, -z.im);
    if denom.re == 0.0 && denom.im == 0.0 {
        return Err(Error::Domain { z });
    }
    Ok(denom.inv())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StarNorm {
    L1,
    L2,
    Sup,
}

/// `‖f‖_{*,q}` over the truncated lattice.
pub fn star_norm<F>(bx: &BoxSpec, f: F, q: StarNorm) -> f64
where
    F: Fn(&Momentum) -> Complex64,
{
    let values = bx.points().into_iter().map(|p| f(&p).norm());
    match q {
        StarNorm::L1 => values.sum::<f64>() / bx.volume(),
        StarNorm::L2 => (values.map(|v| v * v).sum::<f64>() / bx.volume()).sqrt(),
        StarNorm::Sup => values.fold(0.0, f64::max),
    }
}

/// A finite combination `ψ = Σ_p c_p φ_p` of plane waves.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct WaveVector {
    coefficients: BTreeMap<Momentum, Complex64>,
}

impl WaveVector {
    pub fn new() -> Self {
        Self::default()
    }

    /// The normalized plane wave `φ_q`.
    pub fn plane_wave(q: Momentum) -> Self {
        let mut w = Self::new();
        w.insert(q, Complex64::new(1.0, 0.0));
        w
    }

    pub fn from_pairs<I>(pairs: I) -> Self
    where
        I: IntoIterator<Item = (Momentum, Complex64)>,
    {
        let mut w = Self::new();
        for (p, c) in pairs {
            w.insert(p, c);
        }
        w
    }

    /// Adds `c` to the coefficient of `φ_p`.
    pub fn insert(&mut self, p: Momentum, c: Complex64) {
        *self.coefficients.entry(p).or_default() += c;
    }

    pub fn coefficient(&self, p: &Momentum) -> Complex64 {
        self.coefficients.get(p).copied().unwrap_or_default()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Momentum, &Complex64)> {
        self.coefficients.iter()
    }

    pub fn len(&self) -> usize {
        self.coefficients.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coefficients.is_empty()
    }

    /// `‖ψ‖ = (Σ |c_p|²)^{1/2}`.
    pub fn norm(&self) -> f64 {
        self.coefficients.values().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Discrete transform `ψ̂_#(p) = |Λ_L|^{1/2} c_p`.
    pub fn transform(&self, bx: &BoxSpec, p: &Momentum) -> Complex64 {
        self.coefficient(p) * bx.volume().sqrt()
    }

    /// Fails if any coefficient sits outside the truncated basis.
    pub fn check_in(&self, bx: &BoxSpec) -> Result<()> {
        match self.coefficients.keys().find(|p| !bx.contains(p)) {
            Some(p) => Err(Error::OutsideBasis { indices: p.indices() }),
            None => Ok(()),
        }
    }

    /// Coefficients as a dense vector in the canonical basis order.
    pub fn to_dense(&self, bx: &BoxSpec) -> Result<Vec<Complex64>> {
        self.check_in(bx)?;
        let mut out = vec![Complex64::default(); bx.len()];
        for (p, c) in &self.coefficients {
            // check_in guarantees membership
            out[bx.index_of(p).unwrap()] = *c;
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn one(_: &Momentum) -> Complex64 {
        Complex64::new(1.0, 0.0)
    }

    #[test]
    fn lattice_examples() {
        let bx = BoxSpec::new(2.0, 1, 1.0).unwrap();
        let pts: Vec<f64> = bx.points().iter().map(|p| p.components(&bx)[0]).collect();
        assert_eq!(pts, vec![-1.0, -0.5, 0.0, 0.5, 1.0]);

        let bx = BoxSpec::new(1.0, 2, 1.0).unwrap();
        assert_eq!(bx.points().len(), 9);
        assert_eq!(bx.points()[0], Momentum::new(&[-1, -1]));

        let bx = BoxSpec::new(4.0, 1, 3.0).unwrap();
        assert_eq!(bx.points().len(), 25);
        assert_abs_diff_eq!(bx.points()[1].components(&bx)[0] - bx.points()[0].components(&bx)[0], 0.25);
    }

    #[test]
    fn rejects_invalid_boxes() {
        assert!(BoxSpec::new(0.5, 1, 1.0).is_err());
        assert!(BoxSpec::new(2.0, 4, 1.0).is_err());
        assert!(BoxSpec::new(2.0, 1, 0.0).is_err());
        assert!(BoxSpec::new(f64::NAN, 1, 1.0).is_err());
    }

    #[test]
    fn canonical_index_matches_order() {
        let bx = BoxSpec::new(2.0, 3, 1.0).unwrap();
        for (i, p) in bx.points().iter().enumerate() {
            assert_eq!(bx.index_of(p), Some(i));
        }
        assert_eq!(bx.index_of(&Momentum::new(&[3, 0, 0])), None);
    }

    #[test]
    fn star_integral_examples() {
        let bx = BoxSpec::new(2.0, 1, 1.0).unwrap();
        assert_abs_diff_eq!(star_integral(&bx, one).re, 2.5);

        for bx in [BoxSpec::new(3.0, 2, 1.0).unwrap(), BoxSpec::new(2.0, 1, 2.0).unwrap()] {
            let delta = star_integral(&bx, |p| Complex64::new(if p.is_zero() { 1.0 } else { 0.0 }, 0.0));
            assert_abs_diff_eq!(delta.re, 1.0 / bx.volume());
        }

        // Riemann sum of e^{-π p²}; Poisson summation puts the full-lattice sum at
        // 1 + 2e^{-16π}, and the cut tail beyond |p| = 3 is below 1e-14.
        let bx = BoxSpec::new(4.0, 1, 3.0).unwrap();
        let gauss = star_integral(&bx, |p| {
            Complex64::new((-std::f64::consts::PI * p.norm_sq(&bx)).exp(), 0.0)
        });
        assert!((gauss.re - 1.0).abs() < 1e-6);
    }

    #[test]
    fn nu_examples() {
        let bx = BoxSpec::new(1.0, 1, 3.0).unwrap();
        assert_eq!(nu(&bx, &Momentum::ZERO), 0.0);
        assert_eq!(nu(&bx, &Momentum::new(&[2])), 2.0);
        let bx2 = BoxSpec::new(1.0, 2, 3.0).unwrap();
        assert_eq!(nu(&bx2, &Momentum::new(&[1, 1])), 1.0);
    }

    #[test]
    fn resolvent_multiplier_examples() {
        let bx = BoxSpec::new(1.0, 1, 3.0).unwrap();
        let r = free_resolvent_multiplier(&bx, &Momentum::ZERO, Complex64::i()).unwrap();
        assert_eq!(r, Complex64::i());
        let r = free_resolvent_multiplier(&bx, &Momentum::new(&[2]), Complex64::new(1.0, 1.0)).unwrap();
        assert_abs_diff_eq!(r.re, 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(r.im, 0.5, epsilon = 1e-15);
        let err = free_resolvent_multiplier(&bx, &Momentum::new(&[2]), Complex64::new(2.0, 0.0));
        assert!(matches!(err, Err(Error::Domain { .. })));
    }

    #[test]
    fn star_norm_examples() {
        let bx = BoxSpec::new(2.0, 1, 1.0).unwrap();
        assert_eq!(star_norm(&bx, one, StarNorm::Sup), 1.0);
        assert_abs_diff_eq!(star_norm(&bx, one, StarNorm::L1), 2.5);

        let psi = WaveVector::plane_wave(Momentum::new(&[1]));
        let n = star_norm(&bx, |p| psi.transform(&bx, p), StarNorm::L2);
        assert_abs_diff_eq!(n, 1.0, epsilon = 1e-15);
    }

    #[test]
    fn momentum_from_components() {
        let bx = BoxSpec::new(4.0, 1, 3.0).unwrap();
        assert_eq!(bx.momentum(&[0.25]).unwrap(), Momentum::new(&[1]));
        assert!(bx.momentum(&[0.3]).is_err());
        assert!(bx.momentum(&[0.25, 0.0]).is_err());
    }

    #[test]
    fn wave_vector_outside_basis() {
        let bx = BoxSpec::new(2.0, 1, 1.0).unwrap();
        let psi = WaveVector::plane_wave(Momentum::new(&[3]));
        assert!(matches!(psi.to_dense(&bx), Err(Error::OutsideBasis { .. })));
    }

    fn arb_box() -> impl Strategy<Value = BoxSpec> {
        (1usize..=3, 1.0f64..4.0, 0.3f64..2.0)
            .prop_map(|(d, l, p)| BoxSpec::new(l, d, p).unwrap())
    }

    proptest! {
        #[test]
        fn lattice_closed_under_negation(bx in arb_box()) {
            let pts = bx.points();
            prop_assert_eq!(pts.len(), bx.len());
            for p in &pts {
                prop_assert!(bx.contains(&-*p));
                prop_assert_eq!(bx.nu(p), bx.nu(&-*p));
            }
        }

        #[test]
        fn parseval(coeffs in prop::collection::vec((-4i32..=4, -3.0f64..3.0, -3.0f64..3.0), 1..8),
                    side in 1.0f64..5.0) {
            let bx = BoxSpec::new(side, 1, 4.0).unwrap();
            let psi = WaveVector::from_pairs(
                coeffs.iter().map(|&(m, re, im)| (Momentum::new(&[m]), Complex64::new(re, im))));
            let lhs = psi.norm().powi(2);
            let rhs = star_norm(&bx, |p| psi.transform(&bx, p), StarNorm::L2).powi(2);
            prop_assert!((lhs - rhs).abs() <= 1e-12 * lhs.max(1e-300));
        }

        #[test]
        fn resolvent_bound(m in -40i32..40, re in -20.0f64..20.0, im in 1e-3f64..10.0, sign in prop::bool::ANY) {
            let bx = BoxSpec::new(2.0, 1, 20.0).unwrap();
            let z = Complex64::new(re, if sign { im } else { -im });
            let r = free_resolvent_multiplier(&bx, &Momentum::new(&[m]), z).unwrap();
            prop_assert!(r.norm() <= 1.0 / im);
        }

        #[test]
        fn star_integral_linear_and_reflection_invariant(a in -2.0f64..2.0, b in -2.0f64..2.0, side in 1.0f64..4.0) {
            let bx = BoxSpec::new(side, 2, 1.5).unwrap();
            let f = |p: &Momentum| Complex64::new(p.indices()[0] as f64, (p.indices()[1] as f64).powi(2));
            let g = |p: &Momentum| Complex64::new((p.index_norm_sq() as f64).sqrt(), 1.0);
            let lhs = star_integral(&bx, |p| f(p) * a + g(p) * b);
            let rhs = star_integral(&bx, f) * a + star_integral(&bx, g) * b;
            prop_assert!((lhs - rhs).norm() <= 1e-10 * (1.0 + rhs.norm()));
            let reflected = star_integral(&bx, |p| f(&-*p));
            let direct = star_integral(&bx, f);
            prop_assert!((reflected - direct).norm() <= 1e-12 * (1.0 + direct.norm()));
        }
    }
}
