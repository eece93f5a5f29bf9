//! Integral representations of `C_p` over `Z_p`.
//!
//! A lattice with an order-p automorphism `T` splits as
//! `n1·I1 ⊕ n2·I2 ⊕ n3·I3` (trivial, cyclotomic, regular).  The counts are
//! read off the Smith form of the norm map `N = 1 + T + … + T^{p-1}`:
//! `N` is `p` on `I1`, zero on `I2`, and has a single unit divisor on `I3`.

use std::fmt;

use rand::{Rng as _, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::padic::{snf, PadicError, RMatrix, Ring, Valuation};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum RepError {
    #[error(transparent)]
    Padic(#[from] PadicError),
    #[error("matrix is not square")]
    NotSquare,
    #[error("T^p is not the identity")]
    NotOrderDividingP,
    #[error("integer overflow while powering the action")]
    Overflow,
    #[error("norm map has a divisor of valuation above 1; not a C_p-lattice")]
    Inconsistent,
    #[error("counts do not describe a lattice of rank at least 1")]
    InvalidCounts,
}

pub type Result<T> = std::result::Result<T, RepError>;

pub type IntMatrix = Vec<Vec<i64>>;

fn identity(n: usize) -> IntMatrix {
    (0..n)
        .map(|i| (0..n).map(|j| i64::from(i == j)).collect())
        .collect()
}

fn mul(a: &IntMatrix, b: &IntMatrix) -> Option<IntMatrix> {
    let n = a.len();
    let mut out = vec![vec![0i64; n]; n];
    for i in 0..n {
        for t in 0..n {
            if a[i][t] == 0 {
                continue;
            }
            for j in 0..n {
                out[i][j] = out[i][j].checked_add(a[i][t].checked_mul(b[t][j])?)?;
            }
        }
    }
    Some(out)
}

/// Verify that `T` is square and `T^p = I` exactly.
pub fn check_order_p(p: u64, t: &IntMatrix) -> Result<()> {
    let n = t.len();
    if t.iter().any(|r| r.len() != n) {
        return Err(RepError::NotSquare);
    }
    let mut power = identity(n);
    for _ in 0..p {
        power = mul(&power, t).ok_or(RepError::Overflow)?;
    }
    if power == identity(n) {
        Ok(())
    } else {
        Err(RepError::NotOrderDividingP)
    }
}

/// A `Z_p⟨z⟩`-lattice given by the exact action of `z`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CpLattice {
    pub p: u64,
    pub t: IntMatrix,
}

impl CpLattice {
    pub fn new(p: u64, t: IntMatrix) -> Result<CpLattice> {
        if !crate::padic::is_prime(p) {
            return Err(PadicError::NotPrime(p).into());
        }
        check_order_p(p, &t)?;
        Ok(CpLattice { p, t })
    }

    pub fn rank(&self) -> usize {
        self.t.len()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct DecompositionCounts {
    pub p: u64,
    pub n1: u32,
    pub n2: u32,
    pub n3: u32,
}

impl DecompositionCounts {
    pub fn new(p: u64, n1: u32, n2: u32, n3: u32) -> DecompositionCounts {
        DecompositionCounts { p, n1, n2, n3 }
    }

    /// `n1 + (p-1) n2 + p n3`.
    pub fn rank(&self) -> u64 {
        self.n1 as u64 + (self.p - 1) * self.n2 as u64 + self.p * self.n3 as u64
    }

    pub fn add(&self, other: &DecompositionCounts) -> DecompositionCounts {
        assert_eq!(self.p, other.p);
        DecompositionCounts {
            p: self.p,
            n1: self.n1 + other.n1,
            n2: self.n2 + other.n2,
            n3: self.n3 + other.n3,
        }
    }
}

fn count_valuations(diag: &[Valuation]) -> Result<(u32, u32)> {
    let (mut units, mut ones) = (0, 0);
    for v in diag {
        match v {
            Valuation::Finite(0) => units += 1,
            Valuation::Finite(1) => ones += 1,
            Valuation::AtLeastK => {}
            Valuation::Finite(_) => return Err(RepError::Inconsistent),
        }
    }
    Ok((units, ones))
}

pub fn decompose(lat: &CpLattice) -> Result<DecompositionCounts> {
    let (p, n) = (lat.p, lat.rank());
    if n == 0 {
        return Ok(DecompositionCounts::new(p, 0, 0, 0));
    }
    // divisors of N and T - I have valuation at most 1, so K = 3 separates them from 0
    let ring = Ring::new(p, 3)?;
    let t = RMatrix::from_rows(ring, &lat.t)?;
    let id = RMatrix::identity(ring, n);
    let mut norm = RMatrix::zero(ring, n, n);
    let mut power = id.clone();
    for _ in 0..p {
        norm = norm.add(&power);
        power = power.mul(&t);
    }
    let (n3, n1) = count_valuations(&snf(&norm).diagonal)?;
    let rest = (n as u64)
        .checked_sub(n1 as u64 + p * n3 as u64)
        .ok_or(RepError::Inconsistent)?;
    if rest % (p - 1) != 0 {
        return Err(RepError::Inconsistent);
    }
    let counts = DecompositionCounts::new(p, n1, n2_of(rest, p)?, n3);
    // the fixed lattice has rank n1 + n3
    let fixed_rank = snf(&t.sub(&id)).diagonal.iter().filter(|v| **v == Valuation::AtLeastK).count();
    if fixed_rank != (n1 + n3) as usize {
        return Err(RepError::Inconsistent);
    }
    Ok(counts)
}

fn n2_of(rest: u64, p: u64) -> Result<u32> {
    u32::try_from(rest / (p - 1)).map_err(|_| RepError::Inconsistent)
}

/// Minimal number of generators of `Q_p ⊗ M`.
pub fn rational_d(c: &DecompositionCounts) -> u32 {
    c.n1.max(c.n2) + c.n3
}

/// `1 + max(0, n2 - n1) >= (p-1)(n2 + n3)`.
pub fn inequality_check(c: &DecompositionCounts) -> bool {
    let lhs = 1 + (c.n2 as i64 - c.n1 as i64).max(0);
    let rhs = (c.p as i64 - 1) * (c.n2 as i64 + c.n3 as i64);
    lhs >= rhs
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Table1Label {
    T21,
    T22,
    T23,
    T24,
    T25,
    T26,
    T31,
    T32,
    Generic,
}

impl fmt::Display for Table1Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Table1Label::T21 => "(T 2.1)",
            Table1Label::T22 => "(T 2.2)",
            Table1Label::T23 => "(T 2.3)",
            Table1Label::T24 => "(T 2.4)",
            Table1Label::T25 => "(T 2.5)",
            Table1Label::T26 => "(T 2.6)",
            Table1Label::T31 => "(T 3.1)",
            Table1Label::T32 => "(T 3.2)",
            Table1Label::Generic => "(p >= 5)",
        };
        f.write_str(s)
    }
}

/// Case label of an admissible triple, by the row patterns of the table.
pub fn table1_label(c: &DecompositionCounts) -> Option<Table1Label> {
    let (n1, n2, n3) = (c.n1, c.n2, c.n3);
    match c.p {
        2 => match (n1, n2, n3) {
            (a, 0, 0) if a >= 2 => Some(Table1Label::T21),
            (a, 1, 0) if a >= 2 => Some(Table1Label::T22),
            (a, 0, 1) if a >= 1 => Some(Table1Label::T23),
            (0, b, 0) if b >= 2 => Some(Table1Label::T24),
            (1, b, 0) if b >= 1 => Some(Table1Label::T25),
            (0, _, 1) => Some(Table1Label::T26),
            _ => None,
        },
        3 => match (n1, n2, n3) {
            (a, 0, 0) if a >= 2 => Some(Table1Label::T31),
            (0, 1, 0) => Some(Table1Label::T32),
            _ => None,
        },
        _ => match (n1, n2, n3) {
            (a, 0, 0) if a >= 2 => Some(Table1Label::Generic),
            _ => None,
        },
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Table1Row {
    pub counts: DecompositionCounts,
    pub dim: u64,
    pub label: Option<Table1Label>,
}

/// All triples of rank in `[2, n_max]` satisfying the inequality, ordered
/// by rank and then lexicographically.
pub fn table1(p: u64, n_max: u64) -> Vec<Table1Row> {
    let mut rows = Vec::new();
    for n3 in 0..=n_max / p {
        for n2 in 0..=n_max / (p - 1) {
            for n1 in 0..=n_max {
                let c = DecompositionCounts::new(p, n1 as u32, n2 as u32, n3 as u32);
                let dim = c.rank();
                if (2..=n_max).contains(&dim) && inequality_check(&c) {
                    rows.push(Table1Row {
                        counts: c,
                        dim,
                        label: table1_label(&c),
                    });
                }
            }
        }
    }
    rows.sort_by_key(|r| (r.dim, r.counts.n1, r.counts.n2, r.counts.n3));
    rows
}

/// Companion matrix of `1 + x + … + x^{p-1}`.
pub fn cyclotomic_companion(p: u64) -> IntMatrix {
    let n = p as usize - 1;
    let mut m = vec![vec![0i64; n]; n];
    for (i, row) in m.iter_mut().enumerate() {
        if i > 0 {
            row[i - 1] = 1;
        }
        row[n - 1] = -1;
    }
    m
}

/// The `p x p` cyclic shift.
pub fn cyclic_permutation(p: u64) -> IntMatrix {
    let n = p as usize;
    let mut m = vec![vec![0i64; n]; n];
    for i in 0..n {
        m[(i + 1) % n][i] = 1;
    }
    m
}

pub fn block_sum(a: &IntMatrix, b: &IntMatrix) -> IntMatrix {
    let (na, nb) = (a.len(), b.len());
    let mut m = vec![vec![0i64; na + nb]; na + nb];
    for i in 0..na {
        m[i][..na].copy_from_slice(&a[i]);
    }
    for i in 0..nb {
        m[na + i][na..].copy_from_slice(&b[i]);
    }
    m
}

/// `U T U^{-1}` for a unimodular `U` with its exact inverse.
pub fn conjugate(t: &IntMatrix, u: &IntMatrix, u_inv: &IntMatrix) -> Option<IntMatrix> {
    mul(&mul(u, t)?, u_inv)
}

const ENTRY_BOUND: i64 = 1 << 40;

/// Random unimodular matrix as a product of elementary matrices with
/// multipliers in `[-3, 3]`, together with its inverse.
pub fn random_unimodular(n: usize, rng: &mut ChaCha8Rng) -> (IntMatrix, IntMatrix) {
    loop {
        let mut u = identity(n);
        let mut u_inv = identity(n);
        let mut ok = true;
        if n >= 2 {
            for _ in 0..n + 2 {
                let i = rng.gen_range(0..n);
                let mut j = rng.gen_range(0..n - 1);
                if j >= i {
                    j += 1;
                }
                let c = rng.gen_range(1..=3) * if rng.gen_bool(0.5) { 1 } else { -1 };
                // U <- U E, U^{-1} <- E^{-1} U^{-1} with E = I + c e_i e_j^T
                for row in u.iter_mut() {
                    row[j] += c * row[i];
                }
                for col in 0..n {
                    let v = u_inv[j][col];
                    u_inv[i][col] -= c * v;
                }
                if u.iter().chain(&u_inv).flatten().any(|x| x.abs() > ENTRY_BOUND / 64) {
                    ok = false;
                    break;
                }
            }
        }
        if ok {
            return (u, u_inv);
        }
    }
}

/// Block-diagonal model with the given counts, conjugated by a seeded
/// random unimodular matrix.
pub fn synth_instance(counts: &DecompositionCounts, seed: u64) -> Result<CpLattice> {
    let p = counts.p;
    if !crate::padic::is_prime(p) {
        return Err(PadicError::NotPrime(p).into());
    }
    if counts.rank() == 0 {
        return Err(RepError::InvalidCounts);
    }
    let mut t: IntMatrix = Vec::new();
    for _ in 0..counts.n1 {
        t = block_sum(&t, &vec![vec![1]]);
    }
    for _ in 0..counts.n2 {
        t = block_sum(&t, &cyclotomic_companion(p));
    }
    for _ in 0..counts.n3 {
        t = block_sum(&t, &cyclic_permutation(p));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    loop {
        let (u, u_inv) = random_unimodular(t.len(), &mut rng);
        if let Some(c) = conjugate(&t, &u, &u_inv) {
            if c.iter().flatten().all(|x| x.abs() < ENTRY_BOUND) {
                return CpLattice::new(p, c);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn counts(p: u64, a: u32, b: u32, c: u32) -> DecompositionCounts {
        DecompositionCounts::new(p, a, b, c)
    }

    #[test]
    fn check_order_examples() {
        assert!(check_order_p(3, &identity(2)).is_ok());
        assert!(check_order_p(3, &vec![vec![0, -1], vec![1, -1]]).is_ok());
        assert_eq!(
            check_order_p(2, &vec![vec![1, 1], vec![0, 1]]),
            Err(RepError::NotOrderDividingP)
        );
    }

    #[test]
    fn decompose_examples() {
        for p in [2, 3, 5] {
            let lat = CpLattice::new(p, identity(2)).unwrap();
            assert_eq!(decompose(&lat).unwrap(), counts(p, 2, 0, 0));
        }
        let w = CpLattice::new(3, vec![vec![0, -1], vec![1, -1]]).unwrap();
        assert_eq!(decompose(&w).unwrap(), counts(3, 0, 1, 0));
        let swap = CpLattice::new(2, vec![vec![0, 1], vec![1, 0]]).unwrap();
        assert_eq!(decompose(&swap).unwrap(), counts(2, 0, 0, 1));
    }

    #[test]
    fn rational_d_examples() {
        assert_eq!(rational_d(&counts(2, 2, 0, 0)), 2);
        assert_eq!(rational_d(&counts(2, 1, 2, 1)), 3);
        assert_eq!(rational_d(&counts(3, 0, 1, 0)), 1);
    }

    #[test]
    fn inequality_examples() {
        assert!(inequality_check(&counts(2, 1, 0, 1)));
        assert!(inequality_check(&counts(3, 0, 1, 0)));
        assert!(!inequality_check(&counts(5, 0, 1, 0)));
    }

    #[test]
    fn synth_examples() {
        let one = synth_instance(&counts(2, 1, 0, 0), 7).unwrap();
        assert_eq!(one.t, vec![vec![1]]);
        let swap = synth_instance(&counts(2, 0, 0, 1), 11).unwrap();
        assert_eq!(decompose(&swap).unwrap(), counts(2, 0, 0, 1));
        let big = synth_instance(&counts(3, 2, 1, 1), 5).unwrap();
        // 2·1 + 1·(p-1) + 1·p
        assert_eq!(big.rank(), 7);
        assert_eq!(decompose(&big).unwrap(), counts(3, 2, 1, 1));
    }

    #[test]
    fn table1_p5_only_trivial() {
        assert!(table1(5, 6)
            .iter()
            .all(|r| r.counts.n2 == 0 && r.counts.n3 == 0 && r.label == Some(Table1Label::Generic)));
    }

    #[test]
    fn table1_t23_row() {
        let rows = table1(2, 4);
        let row = rows.iter().find(|r| r.counts == counts(2, 1, 0, 1)).unwrap();
        assert_eq!(row.label, Some(Table1Label::T23));
    }
}
