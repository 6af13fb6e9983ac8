//! The explicit truncation bound of the expansion and the order it certifies.

use serde::Serialize;

use super::SpectralWindow;

/// Orders above this are flagged as astronomical.
pub const ASTRONOMICAL: u64 = 1_000_000;

/// Linear scan limit before switching to a geometric search.
const SCAN_LIMIT: u64 = 1_000_000;

/// `ln` of `(2/a) (3.168 e C ‖B̂‖ / (a ln(2N+1)))^N / √(2πN)`.
pub fn log_bound_at(a: f64, c_moment: f64, norm_1_inf: f64, n: u64) -> f64 {
    if n == 0 {
        return f64::INFINITY;
    }
    let nf = n as f64;
    let base = 3.168 * std::f64::consts::E * c_moment * norm_1_inf / (a * (2.0 * nf + 1.0).ln());
    (2.0 / a).ln() + nf * base.ln() - 0.5 * (2.0 * std::f64::consts::PI * nf).ln()
}

/// The truncation bound after the first `n` orders (per unit `‖ψ_1‖‖ψ_2‖`).
pub fn bound_at(a: f64, c_moment: f64, norm_1_inf: f64, n: u64) -> f64 {
    log_bound_at(a, c_moment, norm_1_inf, n).exp()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ConstructiveN {
    pub n: u64,
    pub astronomical: bool,
    /// `ln(λ_0^N bound_at(N))` at the returned order.
    pub log_weighted_bound: f64,
}

/// Smallest `N ≥ 1` with `λ_0^N bound_at(N) ≤ ε/2`, or `N = 0` when `λ_0 = 0`.
/// Orders up to a million are scanned one by one; beyond that the first
/// crossing is bracketed on a geometric grid and bisected.
pub fn constructive_n(window: &SpectralWindow, c_moment: f64, norm_1_inf: f64) -> ConstructiveN {
    let a = window.a();
    if window.lambda0 == 0.0 {
        return ConstructiveN { n: 0, astronomical: false, log_weighted_bound: f64::NEG_INFINITY };
    }
    let target = (window.epsilon / 2.0).ln();
    let log_lambda0 = window.lambda0.ln();
    let weighted = |n: u64| n as f64 * log_lambda0 + log_bound_at(a, c_moment, norm_1_inf, n);
    let done = |n: u64| ConstructiveN { n, astronomical: n > ASTRONOMICAL, log_weighted_bound: weighted(n) };

    if let Some(n) = (1..=SCAN_LIMIT).find(|&n| weighted(n) <= target) {
        return done(n);
    }
    let mut lo = SCAN_LIMIT;
    loop {
        let hi = ((lo as f64) * 1.001).ceil() as u64;
        if weighted(hi) <= target {
            let (mut l, mut h) = (lo, hi);
            while h - l > 1 {
                let mid = l + (h - l) / 2;
                if weighted(mid) <= target {
                    h = mid;
                } else {
                    l = mid;
                }
            }
            return done(h);
        }
        if hi >= u64::MAX / 2 {
            return done(u64::MAX);
        }
        lo = hi;
    }
}
