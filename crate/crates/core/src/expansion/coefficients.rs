//! `T_n(z) = E ⟨ψ_1, R(z) [V R(z)]^n ψ_2⟩` on the truncated basis, by exact
//! partition summation and by Monte Carlo.

use std::collections::BTreeMap;
use std::sync::Arc;

use num_complex::Complex64;

use super::poles::{NuTable, PoleKey, PoleSum, MAX_POLES};
use crate::disorder::{sample_config, PotentialTable, WeightDistribution};
use crate::error::{Error, Result};
use crate::lattice::{resolvent_factor, BoxSpec, Momentum, WaveVector};
use crate::partitions::{enumerate_partitions, split_indices, Partition};
use crate::profile::{profile_hat, Profile};
use crate::stats::{reduce_samples, ComplexAccumulator, McValue};

/// Highest order of the exact partition sum.
pub const MAX_DET_ORDER: usize = 4;

pub(crate) fn check_off_axis(z: Complex64) -> Result<()> {
    if z.im == 0.0 {
        Err(Error::Domain { z })
    } else {
        Ok(())
    }
}

struct DetContext<'a> {
    bx: &'a BoxSpec,
    profile: &'a Profile,
    basis: &'a [Momentum],
    table: &'a NuTable,
    psi2: &'a WaveVector,
    partition: &'a Partition,
    is_max: Vec<bool>,
    n: usize,
}

impl DetContext<'_> {
    /// Walks `p_j → p_{j+1} = p_j - u_j`; free transfers for `j ∈ I_A`, the
    /// block-closing transfer for `j ∈ J_A`.
    fn walk(
        &self,
        j: usize,
        p: Momentum,
        key: PoleKey,
        weight: Complex64,
        block_sums: &mut [Momentum],
        out: &mut PoleSum,
    ) {
        if j > self.n {
            let c2 = self.psi2.coefficient(&p);
            if c2 != Complex64::default() {
                out.add(key, weight * c2);
            }
            return;
        }
        let b = self.partition.block_index(j);
        if self.is_max[j - 1] {
            let u = -block_sums[b];
            let next = p - u;
            if !self.bx.contains(&next) {
                return;
            }
            let w = weight * profile_hat(self.profile, self.bx, &u);
            self.walk(j + 1, next, key.with(self.table.index_of(&next)), w, block_sums, out);
        } else {
            for &next in self.basis {
                let u = p - next;
                let w = weight * profile_hat(self.profile, self.bx, &u);
                block_sums[b] = block_sums[b] + u;
                self.walk(j + 1, next, key.with(self.table.index_of(&next)), w, block_sums, out);
                block_sums[b] = block_sums[b] - u;
            }
        }
    }
}

/// Exact pole representation of `T_n`: each partition `A` contributes
/// `Π_a m_{|a|} / |Λ|^{|I_A|}` times a sum over the external momentum and
/// the free transfers `u_j, j ∈ I_A`, with the block-closing transfers fixed
/// by `M_A`.
pub fn t_pole_sum(
    n: usize,
    bx: &BoxSpec,
    profile: &Profile,
    dist: &WeightDistribution,
    psi1: &WaveVector,
    psi2: &WaveVector,
) -> Result<PoleSum> {
    if n > MAX_DET_ORDER {
        return Err(Error::SizeLimit { what: "deterministic order", value: n, max: MAX_DET_ORDER });
    }
    psi1.check_in(bx)?;
    psi2.check_in(bx)?;
    let table = Arc::new(NuTable::new(bx));
    let mut total = PoleSum::new(table.clone());
    if n == 0 {
        for (p, c1) in psi1.iter() {
            let c2 = psi2.coefficient(p);
            if c2 != Complex64::default() {
                total.add(PoleKey::single(table.index_of(p)), c1.conj() * c2);
            }
        }
        return Ok(total);
    }
    let basis = bx.points();
    let partitions = enumerate_partitions(n)?;
    let jobs: Vec<(&Partition, Momentum, Complex64)> = partitions
        .iter()
        .flat_map(|a| psi1.iter().map(move |(p, c)| (a, *p, c.conj())))
        .collect();

    use rayon::prelude::*;
    let parts: Vec<PoleSum> = jobs
        .par_iter()
        .map(|&(a, p1, c1)| {
            let mut out = PoleSum::new(table.clone());
            let moments: f64 = a.blocks().iter().map(|b| dist.moment(b.len() as u32)).product();
            if moments == 0.0 {
                return out;
            }
            let (maxima, free) = split_indices(a);
            let scale = moments / bx.volume().powi(free.len() as i32);
            let mut is_max = vec![false; n];
            for j in maxima {
                is_max[j - 1] = true;
            }
            let ctx = DetContext {
                bx,
                profile,
                basis: &basis,
                table: &table,
                psi2,
                partition: a,
                is_max,
                n,
            };
            let mut sums = vec![Momentum::ZERO; a.len()];
            ctx.walk(1, p1, PoleKey::single(table.index_of(&p1)), c1 * scale, &mut sums, &mut out);
            out
        })
        .collect();
    for p in &parts {
        total.merge(p);
    }
    Ok(total)
}

/// Per-configuration pole representation of `⟨ψ_1, R [V R]^n ψ_2⟩` for
/// `n = 0..=max_n`, by propagating `(momentum, pole multiset)` states.
pub fn config_pole_sums(
    max_n: usize,
    bx: &BoxSpec,
    table: &Arc<NuTable>,
    potential: &PotentialTable,
    psi1: &WaveVector,
    psi2: &WaveVector,
) -> Result<Vec<PoleSum>> {
    if max_n + 1 > MAX_POLES {
        return Err(Error::SizeLimit { what: "Monte Carlo pole order", value: max_n, max: MAX_POLES - 1 });
    }
    let basis = bx.points();
    let nu_idx: Vec<u16> = basis.iter().map(|p| table.index_of(p)).collect();
    let c1: Vec<Complex64> = basis.iter().map(|p| psi1.coefficient(p).conj()).collect();

    let mut states: BTreeMap<(usize, PoleKey), Complex64> = BTreeMap::new();
    for (p, c) in psi2.iter() {
        let i = bx.index_of(p).ok_or(Error::OutsideBasis { indices: p.indices() })?;
        *states.entry((i, PoleKey::single(nu_idx[i]))).or_default() += *c;
    }
    let contract = |states: &BTreeMap<(usize, PoleKey), Complex64>| {
        let mut s = PoleSum::new(table.clone());
        for (&(i, key), w) in states {
            if c1[i] != Complex64::default() {
                s.add(key, c1[i] * w);
            }
        }
        s
    };
    let mut out = vec![contract(&states)];
    for _ in 0..max_n {
        let mut next: BTreeMap<(usize, PoleKey), Complex64> = BTreeMap::new();
        for (&(i, key), w) in &states {
            for (k, q) in basis.iter().enumerate() {
                let v = potential.matrix_element(q, &basis[i]);
                *next.entry((k, key.with(nu_idx[k]))).or_default() += v * w;
            }
        }
        states = next;
        out.push(contract(&states));
    }
    Ok(out)
}

/// Dense `⟨φ_p, V φ_q⟩` in the canonical basis order, row-major.
pub(crate) fn potential_matrix(bx: &BoxSpec, table: &PotentialTable, basis: &[Momentum]) -> Vec<Complex64> {
    let n = basis.len();
    let mut m = vec![Complex64::default(); n * n];
    for (i, p) in basis.iter().enumerate() {
        for (j, q) in basis.iter().enumerate() {
            m[i * n + j] = table.matrix_element(p, q);
        }
    }
    debug_assert_eq!(n, bx.len());
    m
}

pub(crate) fn matvec(m: &[Complex64], x: &[Complex64], out: &mut [Complex64]) {
    let n = x.len();
    for (i, o) in out.iter_mut().enumerate() {
        let row = &m[i * n..(i + 1) * n];
        *o = row.iter().zip(x).map(|(a, b)| a * b).sum();
    }
}

/// `⟨ψ_1, R(z)[V R(z)]^k ψ_2⟩` for `k = 0..=max_n` for one potential matrix.
pub(crate) fn neumann_chain(
    max_n: usize,
    nus: &[f64],
    vmat: &[Complex64],
    psi1: &[Complex64],
    psi2: &[Complex64],
    z: Complex64,
) -> Result<Vec<Complex64>> {
    let r: Vec<Complex64> = nus.iter().map(|&nu| resolvent_factor(nu, z)).collect::<Result<_>>()?;
    let mut x: Vec<Complex64> = r.iter().zip(psi2).map(|(a, b)| a * b).collect();
    let mut tmp = vec![Complex64::default(); x.len()];
    let inner = |x: &[Complex64]| psi1.iter().zip(x).map(|(a, b)| a.conj() * b).sum::<Complex64>();
    let mut out = vec![inner(&x)];
    for _ in 0..max_n {
        matvec(vmat, &x, &mut tmp);
        for ((xi, ti), ri) in x.iter_mut().zip(&tmp).zip(&r) {
            *xi = ti * ri;
        }
        out.push(inner(&x));
    }
    Ok(out)
}

/// Monte Carlo estimates of `T_k(z)` for `k = 0..=max_n` and every `z`, all
/// from the same configurations: `result[k][i]` belongs to `zs[i]`.
#[allow(clippy::too_many_arguments)]
pub fn t_coeffs_mc(
    max_n: usize,
    bx: &BoxSpec,
    profile: &Profile,
    dist: &WeightDistribution,
    zs: &[Complex64],
    psi1: &WaveVector,
    psi2: &WaveVector,
    samples: u64,
    seed: u64,
) -> Result<Vec<Vec<McValue<Complex64>>>> {
    for &z in zs {
        check_off_axis(z)?;
    }
    if samples == 0 {
        return Err(Error::InvalidParameter { name: "samples", reason: "must be at least 1".into() });
    }
    let basis = bx.points();
    let nus: Vec<f64> = basis.iter().map(|p| bx.nu(p)).collect();
    let d1 = psi1.to_dense(bx)?;
    let d2 = psi2.to_dense(bx)?;
    let width = zs.len();
    let acc = reduce_samples(
        samples,
        || vec![ComplexAccumulator::default(); (max_n + 1) * width],
        |acc, i| {
            let config = sample_config(bx, dist, seed, i);
            let table = PotentialTable::new(&config, profile, bx);
            let vmat = potential_matrix(bx, &table, &basis);
            for (zi, &z) in zs.iter().enumerate() {
                let chain = neumann_chain(max_n, &nus, &vmat, &d1, &d2, z).expect("z is off the real axis");
                for (k, v) in chain.into_iter().enumerate() {
                    acc[k * width + zi].push(v);
                }
            }
        },
    );
    Ok((0..=max_n)
        .map(|k| (0..width).map(|zi| McValue::from(&acc[k * width + zi])).collect())
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::star_integral;

    fn setup() -> (BoxSpec, Profile) {
        (BoxSpec::new(4.0, 1, 3.0).unwrap(), Profile::gaussian(1.0).unwrap())
    }

    #[test]
    fn closed_forms() {
        let (bx, prof) = setup();
        let q = Momentum::new(&[2]);
        let psi = WaveVector::plane_wave(q);
        let z = Complex64::new(0.7, 0.4);
        let r = 1.0 / (bx.nu(&q) - z);

        let t0 = t_pole_sum(0, &bx, &prof, &WeightDistribution::Rademacher, &psi, &psi).unwrap();
        assert_eq!(t0.eval(z).unwrap(), r);

        let u01 = WeightDistribution::UniformZeroOne;
        let t1 = t_pole_sum(1, &bx, &prof, &u01, &psi, &psi).unwrap().eval(z).unwrap();
        let expect = 0.5 * r * r;
        assert!((t1 - expect).norm() <= 1e-12 * expect.norm());

        let rad = WeightDistribution::Rademacher;
        let t2 = t_pole_sum(2, &bx, &prof, &rad, &psi, &psi).unwrap().eval(z).unwrap();
        let inner = star_integral(&bx, |p| profile_hat(&prof, &bx, &(q - *p)).powi(2) / (bx.nu(p) - z));
        let expect = r * r * inner;
        assert!((t2 - expect).norm() <= 1e-12 * expect.norm());
    }

    #[test]
    fn odd_orders_vanish_for_symmetric_weights() {
        let (bx, prof) = setup();
        let psi = WaveVector::plane_wave(Momentum::new(&[1]));
        for n in [1, 3] {
            let t = t_pole_sum(n, &bx, &prof, &WeightDistribution::Rademacher, &psi, &psi).unwrap();
            assert!(t.is_empty());
        }
    }

    #[test]
    fn conjugation_symmetry_is_exact() {
        let (bx, prof) = setup();
        let psi = WaveVector::from_pairs([
            (Momentum::ZERO, Complex64::new(0.6, 0.0)),
            (Momentum::new(&[2]), Complex64::new(0.8, 0.0)),
        ]);
        let z = Complex64::new(0.9, 0.5);
        for n in 0..=3 {
            let t = t_pole_sum(n, &bx, &prof, &WeightDistribution::UniformZeroOne, &psi, &psi).unwrap();
            assert_eq!(t.eval(z.conj()).unwrap(), t.eval(z).unwrap().conj());
        }
    }

    #[test]
    fn config_dp_matches_neumann_chain() {
        let (bx, prof) = setup();
        let table = Arc::new(NuTable::new(&bx));
        let psi1 = WaveVector::from_pairs([(Momentum::ZERO, Complex64::new(1.0, 0.5))]);
        let psi2 = WaveVector::from_pairs([
            (Momentum::new(&[1]), Complex64::new(0.3, 0.0)),
            (Momentum::new(&[-2]), Complex64::new(0.0, 1.0)),
        ]);
        let config = sample_config(&bx, &WeightDistribution::UniformZeroOne, 4, 2);
        let pot = PotentialTable::new(&config, &prof, &bx);
        let sums = config_pole_sums(3, &bx, &table, &pot, &psi1, &psi2).unwrap();
        let basis = bx.points();
        let nus: Vec<f64> = basis.iter().map(|p| bx.nu(p)).collect();
        let vmat = potential_matrix(&bx, &pot, &basis);
        let z = Complex64::new(1.1, 0.6);
        let chain =
            neumann_chain(3, &nus, &vmat, &psi1.to_dense(&bx).unwrap(), &psi2.to_dense(&bx).unwrap(), z).unwrap();
        for k in 0..=3 {
            let v = sums[k].eval(z).unwrap();
            assert!((v - chain[k]).norm() < 1e-12 * (1.0 + chain[k].norm()));
        }
    }

    #[test]
    fn order_zero_monte_carlo_is_exact() {
        let (bx, prof) = setup();
        let q = Momentum::new(&[1]);
        let z = Complex64::new(0.2, 1.0);
        let est = t_coeffs_mc(0, &bx, &prof, &WeightDistribution::UniformZeroOne, &[z], &WaveVector::plane_wave(q), &WaveVector::plane_wave(q), 100, 1).unwrap();
        assert_eq!(est[0][0].value, 1.0 / (bx.nu(&q) - z));
        assert_eq!(est[0][0].stderr, 0.0);
        let other = t_coeffs_mc(0, &bx, &prof, &WeightDistribution::UniformZeroOne, &[z], &WaveVector::plane_wave(q), &WaveVector::plane_wave(Momentum::ZERO), 10, 1).unwrap();
        assert_eq!(other[0][0].value, Complex64::default());
        assert!(t_coeffs_mc(1, &bx, &prof, &WeightDistribution::Rademacher, &[Complex64::new(1.0, 0.0)], &WaveVector::plane_wave(q), &WaveVector::plane_wave(q), 10, 1).is_err());
    }
}
