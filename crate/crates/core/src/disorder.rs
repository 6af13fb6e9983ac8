//! Poisson point configurations, weight laws and the random potential in
//! momentum space.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::distributions::{Distribution, Open01};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::lattice::{BoxSpec, Momentum};
use crate::profile::{profile_hat, Profile};

/// Law of the single-site coupling constants `v_γ`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum WeightDistribution {
    Constant { c: f64 },
    UniformZeroOne,
    Rademacher,
}

impl WeightDistribution {
    /// Exact moment `m_k = E v^k`.
    pub fn moment(&self, k: u32) -> f64 {
        match *self {
            WeightDistribution::Constant { c } => c.powi(k as i32),
            WeightDistribution::UniformZeroOne => 1.0 / (f64::from(k) + 1.0),
            WeightDistribution::Rademacher => {
                if k.is_multiple_of(2) {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            WeightDistribution::Constant { c } => c,
            WeightDistribution::UniformZeroOne => Open01.sample(rng),
            WeightDistribution::Rademacher => {
                if rng.gen::<bool>() {
                    1.0
                } else {
                    -1.0
                }
            }
        }
    }

    /// Whether the law is supported in `(0, ∞)`.
    pub fn positive_support(&self) -> bool {
        match *self {
            WeightDistribution::Constant { c } => c > 0.0,
            WeightDistribution::UniformZeroOne => true,
            WeightDistribution::Rademacher => false,
        }
    }

    /// A uniform bound `|m_k| ≤ C` holds for every `k` only when `|v| ≤ 1`.
    pub fn satisfies_moment_bound(&self) -> bool {
        match *self {
            WeightDistribution::Constant { c } => c.abs() <= 1.0,
            _ => true,
        }
    }

    /// The constant `C` with `E|v|^k ≤ C` for all `k`; `None` if none exists.
    pub fn moment_constant(&self) -> Option<f64> {
        self.satisfies_moment_bound().then_some(1.0)
    }

    pub fn name(&self) -> String {
        match *self {
            WeightDistribution::Constant { c } => format!("constant({c})"),
            WeightDistribution::UniformZeroOne => "uniform01".to_string(),
            WeightDistribution::Rademacher => "rademacher".to_string(),
        }
    }
}

/// Exact moment, free-function form.
pub fn moment(dist: &WeightDistribution, k: u32) -> f64 {
    dist.moment(k)
}

/// The random stream for sample `index` under `seed`: a ChaCha8 key derived
/// from the seed, with the sample index as the stream selector.
pub fn sample_stream(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Largest Poisson mean sampled by inversion.
const INVERSION_LIMIT: f64 = 30.0;

pub fn sample_poisson<R: Rng + ?Sized>(mean: f64, rng: &mut R) -> u64 {
    if mean <= 0.0 {
        return 0;
    }
    if mean > INVERSION_LIMIT {
        let d = rand_distr::Poisson::new(mean).expect("positive finite mean");
        return d.sample(rng) as u64;
    }
    let u: f64 = rng.gen();
    let mut k = 0u64;
    let mut p = (-mean).exp();
    let mut cdf = p;
    while u >= cdf {
        k += 1;
        p *= mean / k as f64;
        let next = cdf + p;
        if next == cdf {
            // cdf saturated below u by rounding
            break;
        }
        cdf = next;
    }
    k
}

/// One realization of the Poisson point measure on the box.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DisorderConfig {
    dim: usize,
    side: f64,
    points: Vec<[f64; 3]>,
    weights: Vec<f64>,
    seed: Option<u64>,
    index: Option<u64>,
}

impl DisorderConfig {
    /// A hand-built configuration; points must lie in `[-L/2, L/2)^d`.
    pub fn from_parts(bx: &BoxSpec, points: &[Vec<f64>], weights: &[f64]) -> Result<Self> {
        if points.len() != weights.len() {
            return Err(Error::InvalidParameter {
                name: "config",
                reason: format!("{} points but {} weights", points.len(), weights.len()),
            });
        }
        let half = bx.side() / 2.0;
        let mut stored = Vec::with_capacity(points.len());
        for p in points {
            if p.len() != bx.dim() || p.iter().any(|&x| !(x >= -half && x < half)) {
                return Err(Error::InvalidParameter {
                    name: "config",
                    reason: format!("point {p:?} is not in the box"),
                });
            }
            let mut y = [0.0; 3];
            y[..p.len()].copy_from_slice(p);
            stored.push(y);
        }
        Ok(DisorderConfig {
            dim: bx.dim(),
            side: bx.side(),
            points: stored,
            weights: weights.to_vec(),
            seed: None,
            index: None,
        })
    }

    pub fn empty(bx: &BoxSpec) -> Self {
        Self::from_parts(bx, &[], &[]).expect("empty configuration is valid")
    }

    pub fn count(&self) -> usize {
        self.points.len()
    }

    pub fn points(&self) -> impl Iterator<Item = &[f64]> + '_ {
        self.points.iter().map(move |p| &p[..self.dim])
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// `(seed, index)` of the stream that produced the configuration.
    pub fn origin(&self) -> Option<(u64, u64)> {
        self.seed.zip(self.index)
    }
}

/// Draws `M ~ Poisson(L^d)`, then `M` uniform points and `M` weights, in that
/// order, from the stream `(seed, index)`.
pub fn sample_config(bx: &BoxSpec, dist: &WeightDistribution, seed: u64, index: u64) -> DisorderConfig {
    let mut rng = sample_stream(seed, index);
    let m = sample_poisson(bx.volume(), &mut rng) as usize;
    let half = bx.side() / 2.0;
    let mut points = Vec::with_capacity(m);
    for _ in 0..m {
        let mut y = [0.0; 3];
        for c in y.iter_mut().take(bx.dim()) {
            let u: f64 = rng.gen();
            let x = (u - 0.5) * bx.side();
            // (u - 0.5) L can round up to L/2 for u just below 1
            *c = if x >= half { -half } else { x };
        }
        points.push(y);
    }
    let weights = (0..m).map(|_| dist.sample(&mut rng)).collect();
    DisorderConfig {
        dim: bx.dim(),
        side: bx.side(),
        points,
        weights,
        seed: Some(seed),
        index: Some(index),
    }
}

/// `V̂(u) = Σ_γ v_γ B̂(u) e^{-2πi u·y_γ}`.
pub fn potential_hat(config: &DisorderConfig, profile: &Profile, bx: &BoxSpec, u: &Momentum) -> Complex64 {
    let idx = u.indices();
    let mut sum = Complex64::default();
    for (y, &v) in config.points.iter().zip(&config.weights) {
        let phase: f64 = (0..bx.dim()).map(|j| f64::from(idx[j]) * y[j]).sum::<f64>() / bx.side();
        sum += Complex64::from_polar(v, -2.0 * PI * phase);
    }
    sum * profile_hat(profile, bx, u)
}

/// `V(x) = Σ_γ v_γ B_#(x - y_γ)` in position space.
pub fn potential_at(config: &DisorderConfig, profile: &Profile, bx: &BoxSpec, x: &[f64]) -> f64 {
    config
        .points()
        .zip(&config.weights)
        .map(|(y, &v)| {
            let diff: Vec<f64> = x.iter().zip(y).map(|(a, b)| a - b).collect();
            v * profile.periodized(bx, &diff)
        })
        .sum()
}

/// `V̂` tabulated on every difference `p - q` of truncated momenta.
///
/// Phases are built per point and axis from `e^{-2πi m y / L}` for `m ≥ 0`;
/// negative indices use conjugates, so `V̂(-u) = conj V̂(u)` holds bit-for-bit.
pub struct PotentialTable {
    dim: usize,
    span: i32,
    width: usize,
    values: Vec<Complex64>,
    volume: f64,
}

impl PotentialTable {
    pub fn new(config: &DisorderConfig, profile: &Profile, bx: &BoxSpec) -> Self {
        let dim = bx.dim();
        let span = 2 * bx.index_cutoff();
        let width = (2 * span + 1) as usize;
        let len = width.pow(dim as u32);
        let mut values = vec![Complex64::default(); len];

        // phases[γ][j][m] = e^{-2πi m y_j / L}, m = 0..=span
        let phases: Vec<Vec<Vec<Complex64>>> = config
            .points
            .iter()
            .map(|y| {
                (0..dim)
                    .map(|j| {
                        (0..=span)
                            .map(|m| Complex64::from_polar(1.0, -2.0 * PI * f64::from(m) * y[j] / bx.side()))
                            .collect()
                    })
                    .collect()
            })
            .collect();
        let phase = |g: usize, j: usize, m: i32| -> Complex64 {
            let c = phases[g][j][m.unsigned_abs() as usize];
            if m < 0 {
                c.conj()
            } else {
                c
            }
        };

        let mut table = PotentialTable { dim, span, width, values: Vec::new(), volume: bx.volume() };
        for (slot, value) in values.iter_mut().enumerate() {
            let u = table.momentum_at(slot);
            let idx = u.indices();
            // Fill only the half u ≥ -u; mirror below.
            if u < -u {
                continue;
            }
            let mut sum = Complex64::default();
            for (g, &v) in config.weights.iter().enumerate() {
                let mut e = Complex64::new(v, 0.0);
                for (j, &m) in idx.iter().enumerate().take(dim) {
                    e *= phase(g, j, m);
                }
                sum += e;
            }
            *value = sum * profile_hat(profile, bx, &u);
        }
        for slot in 0..len {
            let u = table.momentum_at(slot);
            if u < -u {
                let mirror = table.slot_of(&-u);
                values[slot] = values[mirror].conj();
            }
        }
        let zero = table.slot_of(&Momentum::ZERO);
        values[zero].im = 0.0;
        table.values = values;
        table
    }

    fn slot_of(&self, u: &Momentum) -> usize {
        let idx = u.indices();
        idx[..self.dim]
            .iter()
            .fold(0, |acc, &m| acc * self.width + (m + self.span) as usize)
    }

    fn momentum_at(&self, mut slot: usize) -> Momentum {
        let mut idx = [0i32; 3];
        for j in (0..self.dim).rev() {
            idx[j] = (slot % self.width) as i32 - self.span;
            slot /= self.width;
        }
        Momentum::new(&idx[..self.dim])
    }

    /// `V̂(u)` for `u` a difference of two truncated momenta.
    pub fn get(&self, u: &Momentum) -> Complex64 {
        let idx = u.indices();
        assert!(
            idx[..self.dim].iter().all(|m| m.abs() <= self.span),
            "momentum transfer {u} outside the tabulated range"
        );
        self.values[self.slot_of(u)]
    }

    /// `⟨φ_p, V φ_q⟩ = V̂(p - q) / L^d`.
    pub fn matrix_element(&self, p: &Momentum, q: &Momentum) -> Complex64 {
        self.get(&(*p - *q)) / self.volume
    }
}

/// `E V(0)² = m_1² B̂(0)² + m_2 ∫_{Λ_L} |B_#|²`.
pub fn expected_v_squared(bx: &BoxSpec, profile: &Profile, dist: &WeightDistribution) -> f64 {
    let b0 = profile.hat_of_norm_sq(0.0);
    dist.moment(1).powi(2) * b0 * b0 + dist.moment(2) * profile.periodized_l2_sq(bx)
}
