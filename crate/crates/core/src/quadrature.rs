//! Gauss–Kronrod (10/21 point) quadrature: a single panel rule, a fixed
//! composite rule, and a globally adaptive integrator.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::ops::{Add, Mul, Sub};

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Positive Kronrod abscissae on `[-1, 1]`, descending; the last entry is the centre.
/// Odd positions (0-based 1, 3, ...) are the 10-point Gauss nodes.
const XGK: [f64; 11] = [
    0.995_657_163_025_808_1,
    0.973_906_528_517_171_7,
    0.930_157_491_355_708_2,
    0.865_063_366_688_984_5,
    0.780_817_726_586_416_9,
    0.679_409_568_299_024_4,
    0.562_757_134_668_604_7,
    0.433_395_394_129_247_2,
    0.294_392_862_701_460_2,
    0.148_874_338_981_631_22,
    0.0,
];

const WGK: [f64; 11] = [
    0.011_694_638_867_371_874,
    0.032_558_162_307_964_725,
    0.054_755_896_574_351_995,
    0.075_039_674_810_919_96,
    0.093_125_454_583_697_6,
    0.109_387_158_802_297_64,
    0.123_491_976_262_065_84,
    0.134_709_217_311_473_34,
    0.142_775_938_577_060_09,
    0.147_739_104_901_338_49,
    0.149_445_554_002_916_9,
];

const WG: [f64; 5] = [
    0.066_671_344_308_688_14,
    0.149_451_349_150_580_6,
    0.219_086_362_515_982_04,
    0.269_266_719_309_996_35,
    0.295_524_224_714_752_87,
];

/// The 21-point rule on `[-1, 1]` in ascending node order:
/// `(nodes, kronrod weights, gauss weights)`; Gauss weights are zero at
/// Kronrod-only nodes.
pub fn gk21_rule() -> ([f64; 21], [f64; 21], [f64; 21]) {
    let mut x = [0.0; 21];
    let mut wk = [0.0; 21];
    let mut wg = [0.0; 21];
    for i in 0..10 {
        x[i] = -XGK[i];
        x[20 - i] = XGK[i];
        wk[i] = WGK[i];
        wk[20 - i] = WGK[i];
        if i % 2 == 1 {
            wg[i] = WG[i / 2];
            wg[20 - i] = WG[i / 2];
        }
    }
    wk[10] = WGK[10];
    (x, wk, wg)
}

/// Values the integrators can accumulate.
pub trait QuadValue:
    Copy + Default + Add<Output = Self> + Sub<Output = Self> + Mul<f64, Output = Self>
{
    fn magnitude(&self) -> f64;
}

impl QuadValue for f64 {
    fn magnitude(&self) -> f64 {
        self.abs()
    }
}

impl QuadValue for Complex64 {
    fn magnitude(&self) -> f64 {
        self.norm()
    }
}

/// One 21-point panel on `[a, b]`: `(kronrod value, |kronrod - gauss|)`.
pub fn gk21<V, F>(f: &mut F, a: f64, b: f64) -> (V, f64)
where
    V: QuadValue,
    F: FnMut(f64) -> V,
{
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kron = fc * WGK[10];
    let mut gauss = V::default();
    for i in 0..10 {
        let dx = h * XGK[i];
        let pair = f(c - dx) + f(c + dx);
        kron = kron + pair * WGK[i];
        if i % 2 == 1 {
            gauss = gauss + pair * WG[i / 2];
        }
    }
    let kron = kron * h;
    let gauss = gauss * h;
    let err = (kron - gauss).magnitude();
    (kron, err)
}

/// Composite 21-point rule on `panels` equal panels; returns `(value, Σ|K - G|)`.
pub fn composite_gk21<V, F>(mut f: F, a: f64, b: f64, panels: usize) -> (V, f64)
where
    V: QuadValue,
    F: FnMut(f64) -> V,
{
    let h = (b - a) / panels as f64;
    let mut total = V::default();
    let mut err = 0.0;
    for k in 0..panels {
        let lo = a + h * k as f64;
        let (v, e) = gk21(&mut f, lo, lo + h);
        total = total + v;
        err += e;
    }
    (total, err)
}

#[derive(Clone, Copy, Debug)]
pub struct QuadOptions {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_panels: usize,
}

impl Default for QuadOptions {
    fn default() -> Self {
        QuadOptions {
            abs_tol: 1e-10,
            rel_tol: 0.0,
            max_panels: 4000,
        }
    }
}

impl QuadOptions {
    pub fn abs(tol: f64) -> Self {
        QuadOptions {
            abs_tol: tol,
            ..Self::default()
        }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct Quadrature<V> {
    pub value: V,
    pub error: f64,
    pub evaluations: usize,
}

struct Panel<V> {
    a: f64,
    b: f64,
    value: V,
    error: f64,
}

impl<V> PartialEq for Panel<V> {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}

impl<V> Eq for Panel<V> {}

impl<V> PartialOrd for Panel<V> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl<V> Ord for Panel<V> {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

/// Globally adaptive integration over `[a, b]`, bisecting the panel with the
/// largest error estimate until the total estimate meets the tolerance.
pub fn integrate<V, F>(f: F, a: f64, b: f64, opts: QuadOptions) -> Result<Quadrature<V>>
where
    V: QuadValue,
    F: FnMut(f64) -> V,
{
    integrate_with_breaks(f, &[a, b], opts)
}

/// As [`integrate`], with the interval pre-split at the sorted `breaks`
/// (which include both endpoints).
pub fn integrate_with_breaks<V, F>(mut f: F, breaks: &[f64], opts: QuadOptions) -> Result<Quadrature<V>>
where
    V: QuadValue,
    F: FnMut(f64) -> V,
{
    assert!(breaks.len() >= 2, "need at least two break points");
    let mut heap = BinaryHeap::new();
    let mut value = V::default();
    let mut error = 0.0;
    for w in breaks.windows(2) {
        if w[1] <= w[0] {
            continue;
        }
        let (v, e) = gk21(&mut f, w[0], w[1]);
        value = value + v;
        error += e;
        heap.push(Panel { a: w[0], b: w[1], value: v, error: e });
    }
    let mut evaluations = 21 * heap.len();
    loop {
        let tol = opts.abs_tol.max(opts.rel_tol * value.magnitude());
        if error <= tol {
            break;
        }
        if heap.len() >= opts.max_panels {
            return Err(Error::Quadrature { estimate: error, tolerance: tol });
        }
        let worst = heap.pop().expect("heap is never empty here");
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            return Err(Error::Quadrature { estimate: error, tolerance: tol });
        }
        let (lv, le) = gk21(&mut f, worst.a, mid);
        let (rv, re) = gk21(&mut f, mid, worst.b);
        evaluations += 42;
        value = value - worst.value + lv + rv;
        error += le + re - worst.error;
        heap.push(Panel { a: worst.a, b: mid, value: lv, error: le });
        heap.push(Panel { a: mid, b: worst.b, value: rv, error: re });
    }
    // Re-sum to shed the drift from incremental updates.
    let value = heap.iter().fold(V::default(), |acc, p| acc + p.value);
    let error = heap.iter().map(|p| p.error).sum();
    Ok(Quadrature { value, error, evaluations })
}
