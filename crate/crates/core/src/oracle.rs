//! Brute-force reference: the truncated random Hamiltonian as a dense
//! Hermitian matrix, its resolvent by direct solves and by diagonalization,
//! and Monte Carlo averages of both.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

use crate::disorder::{sample_config, DisorderConfig, PotentialTable, WeightDistribution};
use crate::error::{Error, Result};
use crate::expansion::coefficients::check_off_axis;
use crate::lattice::{BoxSpec, Momentum, WaveVector};
use crate::profile::Profile;
use crate::stats::{reduce_samples, ComplexAccumulator, McValue};

/// Largest dense dimension the oracle will assemble.
pub const MAX_DENSE: usize = 4096;

/// Relative residual accepted from a linear solve.
pub const SOLVE_RESIDUAL: f64 = 1e-10;

/// `H = diag(ν) + λ V` on the truncated plane-wave basis.
#[derive(Clone, Debug)]
pub struct TruncatedHamiltonian {
    basis: Vec<Momentum>,
    matrix: DMatrix<Complex64>,
    lambda: f64,
}

impl TruncatedHamiltonian {
    pub fn assemble(config: &DisorderConfig, bx: &BoxSpec, profile: &Profile, lambda: f64) -> Result<Self> {
        let pot = PotentialTable::new(config, profile, bx);
        Self::from_table(bx, &pot, lambda)
    }

    pub(crate) fn from_table(bx: &BoxSpec, pot: &PotentialTable, lambda: f64) -> Result<Self> {
        let n = bx.len();
        if n > MAX_DENSE {
            return Err(Error::SizeLimit { what: "dense Hamiltonian dimension", value: n, max: MAX_DENSE });
        }
        let basis = bx.points();
        let matrix = DMatrix::from_fn(n, n, |i, j| {
            let v = if lambda == 0.0 { Complex64::default() } else { lambda * pot.matrix_element(&basis[i], &basis[j]) };
            if i == j {
                v + bx.nu(&basis[i])
            } else {
                v
            }
        });
        Ok(TruncatedHamiltonian { basis, matrix, lambda })
    }

    pub fn basis(&self) -> &[Momentum] {
        &self.basis
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.matrix
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    /// `max |H - H†|`.
    pub fn hermiticity_residual(&self) -> f64 {
        let n = self.dim();
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in 0..n {
                worst = worst.max((self.matrix[(i, j)] - self.matrix[(j, i)].conj()).norm());
            }
        }
        worst
    }

    fn dense(&self, psi: &WaveVector) -> Result<DVector<Complex64>> {
        let n = self.dim();
        let mut v = DVector::zeros(n);
        for (p, c) in psi.iter() {
            let i = self.basis.binary_search(p).map_err(|_| Error::OutsideBasis { indices: p.indices() })?;
            v[i] = *c;
        }
        Ok(v)
    }

    /// `⟨ψ_1, (H - z)^{-1} ψ_2⟩` by LU, with a residual check.
    pub fn resolvent_element(&self, z: Complex64, psi1: &WaveVector, psi2: &WaveVector) -> Result<Complex64> {
        check_off_axis(z)?;
        let b = self.dense(psi2)?;
        let a = self.shifted(z);
        let x = a.clone().lu().solve(&b).ok_or(Error::Solver { residual: f64::INFINITY })?;
        let residual = (&a * &x - &b).norm();
        if residual > SOLVE_RESIDUAL * b.norm().max(f64::MIN_POSITIVE) {
            return Err(Error::Solver { residual });
        }
        Ok(self.dense(psi1)?.dotc(&x))
    }

    fn shifted(&self, z: Complex64) -> DMatrix<Complex64> {
        let mut a = self.matrix.clone();
        for i in 0..self.dim() {
            a[(i, i)] -= z;
        }
        a
    }

    pub fn eigen(&self) -> Result<Spectrum> {
        let eig = SymmetricEigen::try_new(self.matrix.clone(), 1e-14, 10_000)
            .ok_or_else(|| Error::Eigen("eigensolver did not converge".into()))?;
        let mut order: Vec<usize> = (0..self.dim()).collect();
        order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
        let values: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
        let vectors = DMatrix::from_fn(self.dim(), self.dim(), |r, c| eig.eigenvectors[(r, order[c])]);
        Ok(Spectrum { basis: self.basis.clone(), values, vectors })
    }

    /// Ascending eigenvalues.
    pub fn eigenvalues(&self) -> Result<Vec<f64>> {
        Ok(self.eigen()?.values)
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim()).map(|i| self.matrix[(i, i)].re).sum()
    }
}

/// Eigenvalues (ascending) with eigenvectors as matching columns.
#[derive(Clone, Debug)]
pub struct Spectrum {
    basis: Vec<Momentum>,
    pub values: Vec<f64>,
    pub vectors: DMatrix<Complex64>,
}

impl Spectrum {
    fn coordinates(&self, psi: &WaveVector) -> Result<DVector<Complex64>> {
        let mut v = DVector::zeros(self.basis.len());
        for (p, c) in psi.iter() {
            let i = self.basis.binary_search(p).map_err(|_| Error::OutsideBasis { indices: p.indices() })?;
            v[i] = *c;
        }
        Ok(self.vectors.adjoint() * v)
    }

    /// `Σ_j conj(⟨u_j, ψ_1⟩) ⟨u_j, ψ_2⟩ / (e_j - z)`.
    pub fn resolvent_element(&self, z: Complex64, psi1: &WaveVector, psi2: &WaveVector) -> Result<Complex64> {
        check_off_axis(z)?;
        let a = self.coordinates(psi1)?;
        let b = self.coordinates(psi2)?;
        Ok(self.values.iter().enumerate().map(|(j, &e)| a[j].conj() * b[j] / (e - z)).sum())
    }

    /// `Σ_j f(e_j)`.
    pub fn trace_of<F: Fn(f64) -> f64>(&self, f: F) -> f64 {
        self.values.iter().map(|&e| f(e)).sum()
    }

    /// `Σ_j f(e_j) Σ_{q ∈ rows} |⟨φ_q, u_j⟩|²`: the trace of `f(H)` compressed
    /// to the span of the given basis rows.
    pub fn projected_trace_of<F: Fn(f64) -> f64>(&self, f: F, rows: &[usize]) -> f64 {
        self.values
            .iter()
            .enumerate()
            .map(|(j, &e)| f(e) * rows.iter().map(|&r| self.vectors[(r, j)].norm_sqr()).sum::<f64>())
            .sum()
    }
}

/// Monte Carlo `E⟨ψ_1, (H_λ - z)^{-1} ψ_2⟩` for every `λ` and every pair, from
/// common configurations: `result[λ][pair]`.
#[allow(clippy::too_many_arguments)]
pub fn expect_resolvent_batch(
    bx: &BoxSpec,
    profile: &Profile,
    dist: &WeightDistribution,
    lambdas: &[f64],
    z: Complex64,
    pairs: &[(WaveVector, WaveVector)],
    samples: u64,
    seed: u64,
) -> Result<Vec<Vec<McValue<Complex64>>>> {
    check_off_axis(z)?;
    if samples == 0 {
        return Err(Error::InvalidParameter { name: "samples", reason: "must be at least 1".into() });
    }
    if bx.len() > MAX_DENSE {
        return Err(Error::SizeLimit { what: "dense Hamiltonian dimension", value: bx.len(), max: MAX_DENSE });
    }
    for (a, b) in pairs {
        a.check_in(bx)?;
        b.check_in(bx)?;
    }
    let width = pairs.len();
    let failure = std::sync::Mutex::new(None::<Error>);
    let acc = reduce_samples(
        samples,
        || vec![ComplexAccumulator::default(); lambdas.len() * width],
        |acc, i| {
            let config = sample_config(bx, dist, seed, i);
            let pot = PotentialTable::new(&config, profile, bx);
            for (li, &lambda) in lambdas.iter().enumerate() {
                let result = TruncatedHamiltonian::from_table(bx, &pot, lambda).and_then(|h| {
                    pairs.iter().map(|(a, b)| h.resolvent_element(z, a, b)).collect::<Result<Vec<_>>>()
                });
                match result {
                    Ok(values) => {
                        for (k, v) in values.into_iter().enumerate() {
                            acc[li * width + k].push(v);
                        }
                    }
                    Err(e) => {
                        failure.lock().expect("lock").get_or_insert(e);
                    }
                }
            }
        },
    );
    if let Some(e) = failure.into_inner().expect("lock") {
        return Err(e);
    }
    Ok((0..lambdas.len())
        .map(|li| (0..width).map(|k| McValue::from(&acc[li * width + k])).collect())
        .collect())
}

/// Monte Carlo `E⟨ψ_1, (H_λ - z)^{-1} ψ_2⟩`.
#[allow(clippy::too_many_arguments)]
pub fn expect_resolvent(
    bx: &BoxSpec,
    profile: &Profile,
    dist: &WeightDistribution,
    lambda: f64,
    z: Complex64,
    psi1: &WaveVector,
    psi2: &WaveVector,
    samples: u64,
    seed: u64,
) -> Result<McValue<Complex64>> {
    let pairs = [(psi1.clone(), psi2.clone())];
    Ok(expect_resolvent_batch(bx, profile, dist, &[lambda], z, &pairs, samples, seed)?[0][0])
}

/// Largest singular value of the potential matrix `V̂(p - q)/L^d`, by power
/// iteration on `V†V`.
pub fn potential_operator_norm(config: &DisorderConfig, bx: &BoxSpec, profile: &Profile) -> Result<f64> {
    let h0 = TruncatedHamiltonian::assemble(config, bx, profile, 0.0)?;
    let h1 = TruncatedHamiltonian::assemble(config, bx, profile, 1.0)?;
    let v = h1.matrix() - h0.matrix();
    let eig = SymmetricEigen::try_new(v, 1e-14, 10_000).ok_or_else(|| Error::Eigen("eigensolver did not converge".into()))?;
    Ok(eig.eigenvalues.iter().fold(0.0f64, |m, e| m.max(e.abs())))
}
