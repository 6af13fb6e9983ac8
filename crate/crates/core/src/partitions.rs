//! Set partitions of `{1, …, n}` and the moment formula for products of
//! potential transforms.

use serde::Serialize;

use crate::disorder::WeightDistribution;
use crate::error::{Error, Result};
use crate::lattice::{BoxSpec, Momentum};
use crate::profile::{profile_hat, Profile};

pub const MAX_ENUMERATION: usize = 12;
pub const MAX_MOMENT_ORDER: usize = 8;

/// A partition in canonical form: blocks ordered by their minimum, elements
/// ascending. Elements are 1-based.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct Partition {
    n: usize,
    blocks: Vec<Vec<usize>>,
    /// `block_of[j - 1]` is the block containing `j`.
    block_of: Vec<usize>,
}

impl Partition {
    /// From a restricted-growth string `a` (`a[0] = 0`, `a[i] ≤ 1 + max a[..i]`).
    pub fn from_rgs(rgs: &[usize]) -> Self {
        let n = rgs.len();
        let count = rgs.iter().max().map_or(0, |m| m + 1);
        let mut blocks = vec![Vec::new(); count];
        for (i, &b) in rgs.iter().enumerate() {
            blocks[b].push(i + 1);
        }
        Partition { n, blocks, block_of: rgs.to_vec() }
    }

    /// From explicit blocks; they are put into canonical form.
    pub fn from_blocks(n: usize, blocks: &[&[usize]]) -> Result<Self> {
        let mut seen = vec![false; n];
        let mut sorted: Vec<Vec<usize>> = blocks.iter().map(|b| {
            let mut b = b.to_vec();
            b.sort_unstable();
            b
        }).collect();
        for b in &sorted {
            if b.is_empty() {
                return Err(Error::InvalidParameter { name: "partition", reason: "empty block".into() });
            }
            for &j in b {
                if j == 0 || j > n || seen[j - 1] {
                    return Err(Error::InvalidParameter {
                        name: "partition",
                        reason: format!("element {j} is out of range or repeated"),
                    });
                }
                seen[j - 1] = true;
            }
        }
        if seen.iter().any(|s| !s) {
            return Err(Error::InvalidParameter { name: "partition", reason: "blocks do not cover 1..=n".into() });
        }
        sorted.sort_by_key(|b| b[0]);
        let mut block_of = vec![0; n];
        for (k, b) in sorted.iter().enumerate() {
            for &j in b {
                block_of[j - 1] = k;
            }
        }
        Ok(Partition { n, blocks: sorted, block_of })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn blocks(&self) -> &[Vec<usize>] {
        &self.blocks
    }

    /// Index of the block containing element `j` (1-based).
    pub fn block_index(&self, j: usize) -> usize {
        self.block_of[j - 1]
    }

    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }
}

/// All partitions of `{1, …, n}` in lexicographic order of their
/// restricted-growth strings.
pub fn enumerate_partitions(n: usize) -> Result<Vec<Partition>> {
    if n == 0 {
        return Err(Error::InvalidParameter { name: "n", reason: "must be at least 1".into() });
    }
    if n > MAX_ENUMERATION {
        return Err(Error::SizeLimit { what: "partition ground set", value: n, max: MAX_ENUMERATION });
    }
    let mut out = Vec::with_capacity(bell(n) as usize);
    let mut a = vec![0usize; n];
    // b[i] = 1 + max(a[..i]): the largest value a[i] may take
    let mut b = vec![1usize; n];
    loop {
        out.push(Partition::from_rgs(&a));
        // rightmost position that can still be incremented
        let Some(i) = (1..n).rev().find(|&i| a[i] < b[i]) else {
            break;
        };
        a[i] += 1;
        for j in i + 1..n {
            a[j] = 0;
            b[j] = b[i].max(a[i] + 1);
        }
    }
    Ok(out)
}

/// Bell number by the recurrence `B_{n+1} = Σ_k C(n, k) B_k`.
pub fn bell(n: usize) -> u128 {
    let mut b = vec![1u128];
    for m in 0..n {
        let mut binom = 1u128;
        let mut next = 0u128;
        for (k, bk) in b.iter().enumerate() {
            next += binom * bk;
            binom = binom * (m - k) as u128 / (k + 1) as u128;
        }
        b.push(next);
    }
    b[n]
}

/// `(0.792 n / ln(n + 1))^n`.
pub fn bell_bound(n: usize) -> f64 {
    let n = n as f64;
    (0.792 * n / (n + 1.0).ln()).powf(n)
}

/// `(J_A, I_A)`: block maxima and the remaining elements, both ascending.
pub fn split_indices(a: &Partition) -> (Vec<usize>, Vec<usize>) {
    let mut j: Vec<usize> = a.blocks.iter().map(|b| *b.last().expect("non-empty block")).collect();
    j.sort_unstable();
    let i = (1..=a.n).filter(|x| j.binary_search(x).is_err()).collect();
    (j, i)
}

/// `[M_A(v)]_j = v_j` for `j ∈ I_A`, and minus the sum of the other members
/// of its block for `j ∈ J_A`. `v` lists the momenta of `I_A` in ascending order.
pub fn apply_ma(a: &Partition, v: &[Momentum]) -> Result<Vec<Momentum>> {
    let (_, free) = split_indices(a);
    if free.len() != v.len() {
        return Err(Error::InvalidParameter {
            name: "v",
            reason: format!("expected {} momenta, got {}", free.len(), v.len()),
        });
    }
    let mut u = vec![Momentum::ZERO; a.n];
    for (&j, &vj) in free.iter().zip(v) {
        u[j - 1] = vj;
    }
    for block in &a.blocks {
        let (last, rest) = block.split_last().expect("non-empty block");
        let sum = rest.iter().fold(Momentum::ZERO, |acc, &l| acc + u[l - 1]);
        u[*last - 1] = -sum;
    }
    Ok(u)
}

/// `E Π_j V̂(p_j - p_{j+1})` for `momenta = [p_1, …, p_{n+1}]`, by summing
/// over partitions of the `n` transfers. Each block contributes
/// `m_{|a|} δ_{*,L}(Σ_a u) Π_a B̂(u)` with `δ_{*,L}(u) = L^d [u = 0]`.
pub fn expected_moment_product(
    bx: &BoxSpec,
    profile: &Profile,
    dist: &WeightDistribution,
    momenta: &[Momentum],
) -> Result<f64> {
    let n = momenta.len().saturating_sub(1);
    if n == 0 {
        return Err(Error::InvalidParameter { name: "momenta", reason: "need at least two momenta".into() });
    }
    if n > MAX_MOMENT_ORDER {
        return Err(Error::SizeLimit { what: "moment product order", value: n, max: MAX_MOMENT_ORDER });
    }
    let u: Vec<Momentum> = momenta.windows(2).map(|w| w[0] - w[1]).collect();
    let hats: Vec<f64> = u.iter().map(|x| profile_hat(profile, bx, x)).collect();
    let mut total = 0.0;
    for a in enumerate_partitions(n)? {
        let mut term = 1.0;
        for block in a.blocks() {
            let sum = block.iter().fold(Momentum::ZERO, |acc, &l| acc + u[l - 1]);
            if !sum.is_zero() {
                term = 0.0;
                break;
            }
            term *= dist.moment(block.len() as u32) * bx.volume();
            term *= block.iter().map(|&l| hats[l - 1]).product::<f64>();
        }
        total += term;
    }
    Ok(total)
}
