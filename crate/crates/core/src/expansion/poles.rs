//! Coefficients written as weighted sums of resolvent products
//! `Σ_key w_key Π_{ν ∈ key} (ν - z)^{-1}`, so that one enumeration serves
//! every spectral parameter.

use std::collections::BTreeMap;
use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::lattice::{resolvent_factor, BoxSpec, Momentum};

/// Longest pole multiset, i.e. highest order `n = MAX_POLES - 1`.
pub const MAX_POLES: usize = 8;

/// Distinct kinetic energies of a truncated lattice, indexed by `|m|²`.
#[derive(Debug, PartialEq)]
pub struct NuTable {
    norms: Vec<i64>,
    side: f64,
}

impl NuTable {
    pub fn new(bx: &BoxSpec) -> Self {
        let mut norms: Vec<i64> = bx.points().iter().map(Momentum::index_norm_sq).collect();
        norms.sort_unstable();
        norms.dedup();
        NuTable { norms, side: bx.side() }
    }

    pub fn len(&self) -> usize {
        self.norms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.norms.is_empty()
    }

    /// Table index of the energy of `p`; `p` must be in the box.
    pub fn index_of(&self, p: &Momentum) -> u16 {
        let i = self
            .norms
            .binary_search(&p.index_norm_sq())
            .expect("momentum lies in the tabulated box");
        i as u16
    }

    pub fn nu(&self, i: u16) -> f64 {
        0.5 * self.norms[i as usize] as f64 / (self.side * self.side)
    }
}

/// A sorted multiset of energy indices.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PoleKey {
    len: u8,
    idx: [u16; MAX_POLES],
}

impl PoleKey {
    pub fn single(i: u16) -> Self {
        let mut k = PoleKey::default();
        k.idx[0] = i;
        k.len = 1;
        k
    }

    /// The key with one more pole, kept sorted.
    pub fn with(&self, i: u16) -> Self {
        let n = self.len as usize;
        assert!(n < MAX_POLES, "pole multiset overflow");
        let mut k = *self;
        let pos = self.idx[..n].partition_point(|&x| x <= i);
        k.idx.copy_within(pos..n, pos + 1);
        k.idx[pos] = i;
        k.len += 1;
        k
    }

    pub fn indices(&self) -> &[u16] {
        &self.idx[..self.len as usize]
    }

    pub fn len(&self) -> usize {
        self.len as usize
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }
}

#[derive(Clone, Debug)]
pub struct PoleSum {
    table: Arc<NuTable>,
    terms: BTreeMap<PoleKey, Complex64>,
}

impl PoleSum {
    pub fn new(table: Arc<NuTable>) -> Self {
        PoleSum { table, terms: BTreeMap::new() }
    }

    pub fn table(&self) -> &Arc<NuTable> {
        &self.table
    }

    pub fn add(&mut self, key: PoleKey, w: Complex64) {
        *self.terms.entry(key).or_default() += w;
    }

    pub fn merge(&mut self, other: &PoleSum) {
        for (k, w) in &other.terms {
            self.add(*k, *w);
        }
    }

    pub fn terms(&self) -> impl Iterator<Item = (&PoleKey, &Complex64)> {
        self.terms.iter()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// `Σ |w_key|`, which bounds `|T(z)| · |Im z|^{n+1}`.
    pub fn total_weight(&self) -> f64 {
        self.terms.values().map(|w| w.norm()).sum()
    }

    pub fn eval(&self, z: Complex64) -> Result<Complex64> {
        let mut factors = Vec::with_capacity(self.table.len());
        for i in 0..self.table.len() {
            factors.push(resolvent_factor(self.table.nu(i as u16), z));
        }
        let mut total = Complex64::default();
        for (key, w) in &self.terms {
            let mut prod = *w;
            for &i in key.indices() {
                match factors[i as usize] {
                    Ok(f) => prod *= f,
                    Err(_) => return Err(Error::Domain { z }),
                }
            }
            total += prod;
        }
        Ok(total)
    }
}
