//! Fixed-precision arithmetic over `Z/p^K`.
//!
//! Everything here works with residues modulo `p^K` and keeps track of
//! p-adic valuations.  Sublattices of `Z_p^n` are handled through the
//! convention that a lattice "at precision K" contains `p^K Z_p^n`, so it is
//! determined by its image in `(Z/p^K)^n`.  Operations that would need more
//! precision than they have fail with [`PadicError::PrecisionExhausted`]
//! instead of truncating.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PadicError {
    #[error("{0} is not a prime")]
    NotPrime(u64),
    #[error("precision exponent must be at least 1")]
    ZeroPrecision,
    #[error("{p}^{k} does not fit the residue word")]
    PrecisionTooLarge { p: u64, k: u32 },
    #[error("{value} is not a unit modulo {p}^{k}")]
    NonUnit { value: u64, p: u64, k: u32 },
    #[error("pivot valuation reached the working precision {k} (row {row})")]
    PrecisionExhausted { row: usize, k: u32 },
    #[error("sublattice is not contained in the ambient lattice")]
    NotContained,
    #[error("lattices have different ambient dimensions ({0} and {1})")]
    InfiniteIndex(usize, usize),
    #[error("matrix order modulo {p}^{k} is not a power of {p}")]
    NotPPowerOrder { p: u64, k: u32 },
    #[error("scalar {lambda} is not congruent to 1 modulo {p}; no continuous Z_{p}-action exists")]
    DiscontinuousAction { p: u64, lambda: i64 },
    #[error("dimension mismatch: {0}")]
    Shape(String),
}

pub type Result<T> = std::result::Result<T, PadicError>;

pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    let mut d = 2u64;
    while d.saturating_mul(d) <= n {
        if n.is_multiple_of(d) {
            return false;
        }
        d += 1;
    }
    true
}

/// The residue ring `Z/p^K`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Ring {
    p: u64,
    k: u32,
    modulus: u64,
}

impl Ring {
    pub fn new(p: u64, k: u32) -> Result<Ring> {
        if !is_prime(p) {
            return Err(PadicError::NotPrime(p));
        }
        if k == 0 {
            return Err(PadicError::ZeroPrecision);
        }
        let mut modulus: u64 = 1;
        for _ in 0..k {
            modulus = match modulus.checked_mul(p) {
                Some(m) if m < (1u64 << 62) => m,
                _ => return Err(PadicError::PrecisionTooLarge { p, k }),
            };
        }
        Ok(Ring { p, k, modulus })
    }

    #[inline]
    pub fn p(&self) -> u64 {
        self.p
    }

    #[inline]
    pub fn k(&self) -> u32 {
        self.k
    }

    #[inline]
    pub fn modulus(&self) -> u64 {
        self.modulus
    }

    /// The same prime at a different precision.
    pub fn with_precision(&self, k: u32) -> Result<Ring> {
        Ring::new(self.p, k)
    }

    /// `p^e` as a residue; saturates to 0 once `e >= K`.
    pub fn p_power(&self, e: u32) -> u64 {
        if e >= self.k {
            0
        } else {
            self.p.pow(e)
        }
    }

    #[inline]
    pub fn reduce(&self, x: i128) -> u64 {
        x.rem_euclid(self.modulus as i128) as u64
    }

    #[inline]
    pub fn add(&self, a: u64, b: u64) -> u64 {
        let s = a + b;
        if s >= self.modulus {
            s - self.modulus
        } else {
            s
        }
    }

    #[inline]
    pub fn sub(&self, a: u64, b: u64) -> u64 {
        if a >= b {
            a - b
        } else {
            a + self.modulus - b
        }
    }

    #[inline]
    pub fn neg(&self, a: u64) -> u64 {
        if a == 0 {
            0
        } else {
            self.modulus - a
        }
    }

    #[inline]
    pub fn mul(&self, a: u64, b: u64) -> u64 {
        ((a as u128 * b as u128) % self.modulus as u128) as u64
    }

    pub fn pow(&self, mut base: u64, mut e: u64) -> u64 {
        let mut acc = 1 % self.modulus;
        while e > 0 {
            if e & 1 == 1 {
                acc = self.mul(acc, base);
            }
            base = self.mul(base, base);
            e >>= 1;
        }
        acc
    }

    pub fn val(&self, x: u64) -> Valuation {
        let x = x % self.modulus;
        if x == 0 {
            return Valuation::AtLeastK;
        }
        let mut v = 0;
        let mut y = x;
        while y.is_multiple_of(self.p) {
            y /= self.p;
            v += 1;
        }
        Valuation::Finite(v)
    }

    /// Finite valuation of a nonzero residue; `K` for zero.
    #[inline]
    fn val_capped(&self, x: u64) -> u32 {
        match self.val(x) {
            Valuation::Finite(v) => v,
            Valuation::AtLeastK => self.k,
        }
    }

    pub fn unit_inverse(&self, x: u64) -> Result<u64> {
        let x = x % self.modulus;
        if x.is_multiple_of(self.p) {
            return Err(PadicError::NonUnit {
                value: x,
                p: self.p,
                k: self.k,
            });
        }
        let (mut r0, mut r1) = (self.modulus as i128, x as i128);
        let (mut t0, mut t1) = (0i128, 1i128);
        while r1 != 0 {
            let q = r0 / r1;
            (r0, r1) = (r1, r0 - q * r1);
            (t0, t1) = (t1, t0 - q * t1);
        }
        debug_assert_eq!(r0, 1);
        Ok(self.reduce(t0))
    }

    pub fn residue(&self, value: i64) -> Residue {
        Residue {
            ring: *self,
            value: self.reduce(value as i128),
        }
    }

    /// Symmetric lift in `(-p^K/2, p^K/2]`.
    pub fn signed(&self, x: u64) -> i64 {
        if x > self.modulus / 2 {
            x as i64 - self.modulus as i64
        } else {
            x as i64
        }
    }
}

/// Saturated p-adic valuation of a residue.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Valuation {
    Finite(u32),
    AtLeastK,
}

impl Valuation {
    pub fn finite(self) -> Option<u32> {
        match self {
            Valuation::Finite(v) => Some(v),
            Valuation::AtLeastK => None,
        }
    }
}

impl fmt::Display for Valuation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Valuation::Finite(v) => write!(f, "{v}"),
            Valuation::AtLeastK => write!(f, ">=K"),
        }
    }
}

/// An element of `Z/p^K`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Residue {
    ring: Ring,
    value: u64,
}

impl Residue {
    pub fn new(ring: Ring, value: u64) -> Residue {
        Residue {
            ring,
            value: value % ring.modulus,
        }
    }

    pub fn ring(&self) -> Ring {
        self.ring
    }

    pub fn value(&self) -> u64 {
        self.value
    }

    pub fn val(&self) -> Valuation {
        self.ring.val(self.value)
    }

    pub fn unit_inverse(&self) -> Result<Residue> {
        Ok(Residue {
            ring: self.ring,
            value: self.ring.unit_inverse(self.value)?,
        })
    }

    pub fn pow(&self, e: u64) -> Residue {
        Residue {
            ring: self.ring,
            value: self.ring.pow(self.value, e),
        }
    }
}

macro_rules! residue_binop {
    ($trait:ident, $method:ident) => {
        impl $trait for Residue {
            type Output = Residue;
            fn $method(self, rhs: Residue) -> Residue {
                assert_eq!(self.ring, rhs.ring, "residues from different rings");
                Residue {
                    ring: self.ring,
                    value: self.ring.$method(self.value, rhs.value),
                }
            }
        }
    };
}

residue_binop!(Add, add);
residue_binop!(Sub, sub);
residue_binop!(Mul, mul);

impl Neg for Residue {
    type Output = Residue;
    fn neg(self) -> Residue {
        Residue {
            ring: self.ring,
            value: self.ring.neg(self.value),
        }
    }
}

/// A dense matrix over `Z/p^K`, row-major.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct RMatrix {
    ring: Ring,
    rows: usize,
    cols: usize,
    data: Vec<u64>,
}

impl RMatrix {
    pub fn zero(ring: Ring, rows: usize, cols: usize) -> RMatrix {
        RMatrix {
            ring,
            rows,
            cols,
            data: vec![0; rows * cols],
        }
    }

    pub fn identity(ring: Ring, n: usize) -> RMatrix {
        let mut m = RMatrix::zero(ring, n, n);
        for i in 0..n {
            m.data[i * n + i] = 1 % ring.modulus;
        }
        m
    }

    pub fn scalar(ring: Ring, n: usize, lambda: i64) -> RMatrix {
        let mut m = RMatrix::zero(ring, n, n);
        let l = ring.reduce(lambda as i128);
        for i in 0..n {
            m.data[i * n + i] = l;
        }
        m
    }

    /// Reduce an exact integer matrix given by rows.
    pub fn from_rows(ring: Ring, rows: &[Vec<i64>]) -> Result<RMatrix> {
        let r = rows.len();
        let c = rows.first().map_or(0, |row| row.len());
        if rows.iter().any(|row| row.len() != c) {
            return Err(PadicError::Shape("ragged rows".into()));
        }
        let data = rows
            .iter()
            .flat_map(|row| row.iter().map(|&x| ring.reduce(x as i128)))
            .collect();
        Ok(RMatrix {
            ring,
            rows: r,
            cols: c,
            data,
        })
    }

    /// Build an `n x cols.len()` matrix whose columns are the given residue vectors.
    pub fn from_columns(ring: Ring, n: usize, cols: &[Vec<u64>]) -> RMatrix {
        let mut m = RMatrix::zero(ring, n, cols.len());
        for (j, col) in cols.iter().enumerate() {
            assert_eq!(col.len(), n, "column length");
            for i in 0..n {
                m.data[i * cols.len() + j] = col[i] % ring.modulus;
            }
        }
        m
    }

    pub fn ring(&self) -> Ring {
        self.ring
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> u64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: u64) {
        self.data[i * self.cols + j] = v % self.ring.modulus;
    }

    pub fn entry(&self, i: usize, j: usize) -> Residue {
        Residue::new(self.ring, self.get(i, j))
    }

    pub fn column(&self, j: usize) -> Vec<u64> {
        (0..self.rows).map(|i| self.get(i, j)).collect()
    }

    pub fn columns(&self) -> Vec<Vec<u64>> {
        (0..self.cols).map(|j| self.column(j)).collect()
    }

    pub fn data(&self) -> &[u64] {
        &self.data
    }

    pub fn mul(&self, other: &RMatrix) -> RMatrix {
        assert_eq!(self.ring, other.ring);
        assert_eq!(self.cols, other.rows);
        let mut out = RMatrix::zero(self.ring, self.rows, other.cols);
        for i in 0..self.rows {
            for j in 0..other.cols {
                let mut acc: u128 = 0;
                for t in 0..self.cols {
                    acc += self.get(i, t) as u128 * other.get(t, j) as u128;
                    if acc >= 1u128 << 120 {
                        acc %= self.ring.modulus as u128;
                    }
                }
                out.data[i * other.cols + j] = (acc % self.ring.modulus as u128) as u64;
            }
        }
        out
    }

    pub fn apply(&self, v: &[u64]) -> Vec<u64> {
        assert_eq!(v.len(), self.cols);
        (0..self.rows)
            .map(|i| {
                let mut acc: u128 = 0;
                for (t, &x) in v.iter().enumerate() {
                    acc += self.get(i, t) as u128 * x as u128;
                }
                (acc % self.ring.modulus as u128) as u64
            })
            .collect()
    }

    pub fn sub(&self, other: &RMatrix) -> RMatrix {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(&a, &b)| self.ring.sub(a, b))
            .collect();
        RMatrix { data, ..*self }
    }

    pub fn add(&self, other: &RMatrix) -> RMatrix {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(&a, &b)| self.ring.add(a, b))
            .collect();
        RMatrix { data, ..*self }
    }

    pub fn pow(&self, mut e: u64) -> RMatrix {
        assert_eq!(self.rows, self.cols);
        let mut acc = RMatrix::identity(self.ring, self.rows);
        let mut base = self.clone();
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.mul(&base);
            }
            e >>= 1;
            if e > 0 {
                base = base.mul(&base);
            }
        }
        acc
    }

    pub fn is_identity(&self) -> bool {
        self.rows == self.cols
            && (0..self.rows).all(|i| {
                (0..self.cols).all(|j| self.get(i, j) == u64::from(i == j) % self.ring.modulus)
            })
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|&x| x == 0)
    }

    /// Reduce to a lower precision of the same prime.
    pub fn reduce_to(&self, ring: Ring) -> RMatrix {
        assert_eq!(ring.p, self.ring.p);
        assert!(ring.k <= self.ring.k);
        RMatrix {
            ring,
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&x| x % ring.modulus).collect(),
        }
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        if a != b {
            for j in 0..self.cols {
                self.data.swap(a * self.cols + j, b * self.cols + j);
            }
        }
    }

    fn swap_cols(&mut self, a: usize, b: usize) {
        if a != b {
            for i in 0..self.rows {
                self.data.swap(i * self.cols + a, i * self.cols + b);
            }
        }
    }

    fn scale_row(&mut self, i: usize, f: u64) {
        for j in 0..self.cols {
            let idx = i * self.cols + j;
            self.data[idx] = self.ring.mul(self.data[idx], f);
        }
    }

    /// row_dst -= f * row_src
    fn row_axpy(&mut self, dst: usize, src: usize, f: u64) {
        for j in 0..self.cols {
            let s = self.ring.mul(self.data[src * self.cols + j], f);
            let idx = dst * self.cols + j;
            self.data[idx] = self.ring.sub(self.data[idx], s);
        }
    }

    /// col_dst -= f * col_src
    fn col_axpy(&mut self, dst: usize, src: usize, f: u64) {
        for i in 0..self.rows {
            let s = self.ring.mul(self.data[i * self.cols + src], f);
            let idx = i * self.cols + dst;
            self.data[idx] = self.ring.sub(self.data[idx], s);
        }
    }
}

/// A power of `p`, used for indices.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct PPower {
    pub p: u64,
    pub exponent: u32,
}

impl PPower {
    pub fn value(&self) -> Option<u128> {
        (self.p as u128).checked_pow(self.exponent)
    }
}

impl fmt::Display for PPower {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.value() {
            Some(v) => write!(f, "{v}"),
            None => write!(f, "{}^{}", self.p, self.exponent),
        }
    }
}

/// A full-rank sublattice of `Z_p^n` containing `p^K Z_p^n`, kept in
/// canonical lower-triangular column Hermite form.
///
/// Column `i` has zeros above row `i`, the exact power `p^{a_i}` on the
/// diagonal, and every entry of an earlier column in row `i` lies in
/// `[0, p^{a_i})`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Lattice {
    ring: Ring,
    n: usize,
    basis: Vec<Vec<u64>>,
    pivots: Vec<u32>,
}

impl Lattice {
    /// The whole of `Z_p^n`.
    pub fn full(ring: Ring, n: usize) -> Lattice {
        let basis = (0..n)
            .map(|j| (0..n).map(|i| u64::from(i == j)).collect())
            .collect();
        Lattice {
            ring,
            n,
            basis,
            pivots: vec![0; n],
        }
    }

    /// `p^e Z_p^n`.
    pub fn scaled_full(ring: Ring, n: usize, e: u32) -> Result<Lattice> {
        if e >= ring.k {
            return Err(PadicError::PrecisionExhausted { row: 0, k: ring.k });
        }
        let pe = ring.p_power(e);
        let basis = (0..n)
            .map(|j| (0..n).map(|i| if i == j { pe } else { 0 }).collect())
            .collect();
        Ok(Lattice {
            ring,
            n,
            basis,
            pivots: vec![e; n],
        })
    }

    /// Canonical form of the lattice spanned by the given columns and `p^K Z^n`.
    pub fn from_columns(ring: Ring, n: usize, cols: Vec<Vec<u64>>) -> Result<Lattice> {
        let (basis, pivots) = echelon(ring, n, cols)?;
        Ok(Lattice {
            ring,
            n,
            basis,
            pivots,
        })
    }

    pub fn ring(&self) -> Ring {
        self.ring
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn basis(&self) -> &[Vec<u64>] {
        &self.basis
    }

    pub fn pivots(&self) -> &[u32] {
        &self.pivots
    }

    pub fn basis_matrix(&self) -> RMatrix {
        RMatrix::from_columns(self.ring, self.n, &self.basis)
    }

    /// `log_p |Z_p^n : L|`.
    pub fn index_exponent(&self) -> u32 {
        self.pivots.iter().sum()
    }

    pub fn contains_vector(&self, v: &[u64]) -> bool {
        assert_eq!(v.len(), self.n);
        let r = self.ring;
        let mut w: Vec<u64> = v.iter().map(|&x| x % r.modulus).collect();
        for i in 0..self.n {
            if w[i] == 0 {
                continue;
            }
            let pa = r.p.pow(self.pivots[i]);
            if !w[i].is_multiple_of(pa) {
                return false;
            }
            let f = w[i] / pa;
            for (t, x) in w.iter_mut().enumerate().skip(i) {
                *x = r.sub(*x, r.mul(f, self.basis[i][t]));
            }
        }
        w.iter().all(|&x| x == 0)
    }

    pub fn contains(&self, other: &Lattice) -> bool {
        self.n == other.n && other.basis.iter().all(|c| self.contains_vector(c))
    }

    pub fn sum(&self, other: &Lattice) -> Result<Lattice> {
        if self.n != other.n {
            return Err(PadicError::InfiniteIndex(self.n, other.n));
        }
        let mut cols = self.basis.clone();
        cols.extend(other.basis.iter().cloned());
        Lattice::from_columns(self.ring, self.n, cols)
    }

    /// Image `T L` of the lattice under a square matrix.
    pub fn image(&self, t: &RMatrix) -> Result<Lattice> {
        let cols = self.basis.iter().map(|c| t.apply(c)).collect();
        Lattice::from_columns(self.ring, self.n, cols)
    }

    /// `p^e L`.
    pub fn scale_p(&self, e: u32) -> Result<Lattice> {
        let f = self.ring.p_power(e);
        let cols = self
            .basis
            .iter()
            .map(|c| c.iter().map(|&x| self.ring.mul(x, f)).collect())
            .collect();
        Lattice::from_columns(self.ring, self.n, cols)
    }

    /// Re-express the lattice at another precision. The caller guarantees the
    /// lattice contains `p^{K'}` times the ambient lattice when lowering.
    pub fn with_precision(&self, ring: Ring) -> Result<Lattice> {
        let cols = self
            .basis
            .iter()
            .map(|c| c.iter().map(|&x| x % ring.modulus).collect())
            .collect();
        Lattice::from_columns(ring, self.n, cols)
    }
}

/// Column Hermite form of the lattice generated by `cols` and `p^K Z^n`.
fn echelon(ring: Ring, n: usize, cols: Vec<Vec<u64>>) -> Result<(Vec<Vec<u64>>, Vec<u32>)> {
    let q = ring.modulus;
    let mut cols: Vec<Vec<u64>> = cols
        .into_iter()
        .map(|c| {
            assert_eq!(c.len(), n, "generator length");
            c.into_iter().map(|x| x % q).collect::<Vec<_>>()
        })
        .filter(|c| c.iter().any(|&x| x != 0))
        .collect();
    let mut basis = Vec::with_capacity(n);
    let mut pivots = Vec::with_capacity(n);
    for row in 0..n {
        let best = cols
            .iter()
            .enumerate()
            .filter(|(_, c)| c[row] != 0)
            .min_by_key(|(i, c)| (ring.val_capped(c[row]), *i))
            .map(|(i, _)| i);
        let Some(bi) = best else {
            return Err(PadicError::PrecisionExhausted { row, k: ring.k });
        };
        let mut piv = cols.remove(bi);
        let a = ring.val_capped(piv[row]);
        let pa = ring.p.pow(a);
        let inv = ring.unit_inverse(piv[row] / pa)?;
        for x in piv.iter_mut() {
            *x = ring.mul(*x, inv);
        }
        debug_assert_eq!(piv[row], pa);
        for c in cols.iter_mut() {
            let f = c[row] / pa;
            if f != 0 {
                for t in row..n {
                    c[t] = ring.sub(c[t], ring.mul(f, piv[t]));
                }
            }
            debug_assert_eq!(c[row], 0);
        }
        if a > 0 {
            // p^K e_row is implicitly in the lattice; eliminating it against the
            // pivot leaves p^{K-a} times the pivot's tail.
            let f = ring.p_power(ring.k - a);
            let extra: Vec<u64> = piv.iter().map(|&x| ring.mul(x, f)).collect();
            cols.push(extra);
        }
        cols.retain(|c| c.iter().any(|&x| x != 0));
        basis.push(piv);
        pivots.push(a);
    }
    debug_assert!(cols.is_empty());
    for i in 0..n {
        let pa = ring.p.pow(pivots[i]);
        let (head, tail) = basis.split_at_mut(i);
        let piv = &tail[0];
        for col in head.iter_mut() {
            let f = col[i] / pa;
            if f != 0 {
                for t in i..n {
                    col[t] = ring.sub(col[t], ring.mul(f, piv[t]));
                }
            }
        }
    }
    Ok((basis, pivots))
}

/// Canonical lattice spanned by the columns of `m`.
pub fn hnf(m: &RMatrix) -> Result<Lattice> {
    Lattice::from_columns(m.ring, m.rows, m.columns())
}

/// `|sup : sub|` as a power of p.
pub fn lattice_index(sub: &Lattice, sup: &Lattice) -> Result<PPower> {
    if sub.n != sup.n {
        return Err(PadicError::InfiniteIndex(sub.n, sup.n));
    }
    if !sup.contains(sub) {
        return Err(PadicError::NotContained);
    }
    Ok(PPower {
        p: sub.ring.p,
        exponent: sub.index_exponent() - sup.index_exponent(),
    })
}

/// Smith normal form `U M V = diag(p^{a_1}, ...)`.
#[derive(Clone, Debug)]
pub struct SmithForm {
    pub diagonal: Vec<Valuation>,
    pub left: RMatrix,
    pub right: RMatrix,
}

impl SmithForm {
    /// True when every diagonal entry has a finite valuation below K.
    pub fn is_resolved(&self) -> bool {
        self.diagonal.iter().all(|v| v.finite().is_some())
    }

    /// Number of diagonal entries that are nonzero modulo `p^K`.
    pub fn rank(&self) -> usize {
        self.diagonal.iter().filter(|v| v.finite().is_some()).count()
    }
}

pub fn snf(m: &RMatrix) -> SmithForm {
    let ring = m.ring;
    let (r, c) = (m.rows, m.cols);
    let mut a = m.clone();
    let mut u = RMatrix::identity(ring, r);
    let mut v = RMatrix::identity(ring, c);
    let mut diagonal = Vec::with_capacity(r.min(c));
    for t in 0..r.min(c) {
        let mut best: Option<(u32, usize, usize)> = None;
        for i in t..r {
            for j in t..c {
                let x = a.get(i, j);
                if x != 0 {
                    let val = ring.val_capped(x);
                    if best.is_none_or(|(bv, _, _)| val < bv) {
                        best = Some((val, i, j));
                    }
                }
            }
        }
        let Some((val, bi, bj)) = best else {
            diagonal.extend(std::iter::repeat_n(Valuation::AtLeastK, r.min(c) - t));
            break;
        };
        a.swap_rows(t, bi);
        u.swap_rows(t, bi);
        a.swap_cols(t, bj);
        v.swap_cols(t, bj);
        let pa = ring.p.pow(val);
        let inv = ring
            .unit_inverse(a.get(t, t) / pa)
            .expect("unit part of a minimal-valuation pivot");
        a.scale_row(t, inv);
        u.scale_row(t, inv);
        for i in t + 1..r {
            let f = a.get(i, t) / pa;
            if f != 0 {
                a.row_axpy(i, t, f);
                u.row_axpy(i, t, f);
            }
        }
        for j in t + 1..c {
            let f = a.get(t, j) / pa;
            if f != 0 {
                a.col_axpy(j, t, f);
                v.col_axpy(j, t, f);
            }
        }
        diagonal.push(Valuation::Finite(val));
    }
    SmithForm {
        diagonal,
        left: u,
        right: v,
    }
}

/// Least `q = p^e` with `T^q = I` modulo `p^K`.
pub fn matrix_order_mod(t: &RMatrix) -> Result<PPower> {
    let ring = t.ring;
    if t.rows != t.cols {
        return Err(PadicError::Shape("order of a non-square matrix".into()));
    }
    let n = t.rows as u32;
    // p-part of |GL_n(Z/p^K)|
    let bound = n * n * (ring.k - 1) + n * n.saturating_sub(1) / 2;
    let mut power = t.clone();
    for e in 0..=bound {
        if power.is_identity() {
            return Ok(PPower {
                p: ring.p,
                exponent: e,
            });
        }
        power = power.pow(ring.p);
    }
    Err(PadicError::NotPPowerOrder {
        p: ring.p,
        k: ring.k,
    })
}

/// Normal form of a scalar action of a procyclic top on a lattice.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ScalarForm {
    Trivial,
    /// `1 + p^s`
    Plus(u32),
    MinusOne,
    /// `-(1 + 2^s)`, only for p = 2.
    Minus(u32),
}

impl ScalarForm {
    /// The canonical scalar with this normal form.
    pub fn lambda(&self, p: u64) -> i64 {
        match *self {
            ScalarForm::Trivial => 1,
            ScalarForm::Plus(s) => 1 + (p as i64).pow(s),
            ScalarForm::MinusOne => -1,
            ScalarForm::Minus(s) => -(1 + (p as i64).pow(s)),
        }
    }

    /// Normal form of an exact integer scalar, at a precision large enough
    /// that `lambda = ±1` is decided exactly.
    pub fn of_integer(p: u64, lambda: i64) -> Result<ScalarForm> {
        let bound = lambda.unsigned_abs() as u128 * 2 + 4;
        let mut k = 1;
        while (p as u128).pow(k) <= bound {
            k += 1;
        }
        let ring = Ring::new(p, k + 1)?;
        match scalar_normal_form(ring.residue(lambda)) {
            Err(PadicError::DiscontinuousAction { p, .. }) => {
                Err(PadicError::DiscontinuousAction { p, lambda })
            }
            other => other,
        }
    }
}

impl fmt::Display for ScalarForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ScalarForm::Trivial => write!(f, "1"),
            ScalarForm::Plus(s) => write!(f, "1+p^{s}"),
            ScalarForm::MinusOne => write!(f, "-1"),
            ScalarForm::Minus(s) => write!(f, "-(1+2^{s})"),
        }
    }
}

pub fn scalar_normal_form(lambda: Residue) -> Result<ScalarForm> {
    let ring = lambda.ring;
    let p = ring.p;
    let x = lambda.value;
    if x.is_multiple_of(p) {
        return Err(PadicError::NonUnit {
            value: x,
            p,
            k: ring.k,
        });
    }
    let one = 1 % ring.modulus;
    if x == one {
        return Ok(ScalarForm::Trivial);
    }
    if p != 2 {
        if x % p != 1 {
            return Err(PadicError::DiscontinuousAction {
                p,
                lambda: ring.signed(x),
            });
        }
        let s = ring.val_capped(ring.sub(x, one));
        return Ok(ScalarForm::Plus(s));
    }
    if x == ring.neg(one) {
        return Ok(ScalarForm::MinusOne);
    }
    // x is odd; pick the sign that makes it 1 mod 4
    let (signed, plus) = if ring.k < 2 || x % 4 == 1 {
        (x, true)
    } else {
        (ring.neg(x), false)
    };
    let s = ring.val_capped(ring.sub(signed, one));
    Ok(if plus {
        ScalarForm::Plus(s)
    } else {
        ScalarForm::Minus(s)
    })
}
