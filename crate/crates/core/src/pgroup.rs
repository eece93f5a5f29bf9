//! Finite p-groups of affine maps over `Z/p^K`.
//!
//! A [`FiniteGroup`] is fully materialized: every element is packed into a
//! `u128` code, the codes are sorted, and an element's id is its position in
//! that sorted list.  Subgroups are sorted id sets, which doubles as the
//! canonical dedup key.

use std::collections::VecDeque;
use std::fmt;
use std::sync::Arc;

use rayon::prelude::*;
use thiserror::Error;

use crate::padic::{PadicError, RMatrix, Ring};

pub const DEFAULT_BUDGET: usize = 1 << 21;
pub const MAX_DIM: usize = 10;
const MAX_ENTRIES: usize = MAX_DIM * MAX_DIM + MAX_DIM;
const EMPTY: u32 = u32::MAX;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GroupError {
    #[error(transparent)]
    Padic(#[from] PadicError),
    #[error("element budget of {0} exceeded")]
    BudgetExceeded(usize),
    #[error("group order {order} is not a power of {p}")]
    NotAPGroup { order: usize, p: u64 },
    #[error("affine dimension {0} is outside 1..={MAX_DIM}")]
    UnsupportedDimension(usize),
    #[error("modulus {0} is too large for element packing")]
    ModulusTooLarge(u64),
    #[error("element encoding needs {0} bits, more than 128")]
    EncodingTooWide(u32),
    #[error("linear part is not invertible modulo p")]
    NotInvertible,
    #[error("element does not belong to the group")]
    NotInGroup,
    #[error("shape mismatch: {0}")]
    Shape(String),
}

pub type Result<T> = std::result::Result<T, GroupError>;

/// An affine map `x -> M x + v` over `Z/p^K`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct AffineElement {
    ring: Ring,
    dim: usize,
    matrix: Vec<u64>,
    shift: Vec<u64>,
}

impl AffineElement {
    pub fn identity(ring: Ring, dim: usize) -> AffineElement {
        let mut matrix = vec![0; dim * dim];
        for i in 0..dim {
            matrix[i * dim + i] = 1 % ring.modulus();
        }
        AffineElement {
            ring,
            dim,
            matrix,
            shift: vec![0; dim],
        }
    }

    /// Build from residues; the matrix is row-major.
    pub fn new(ring: Ring, dim: usize, matrix: Vec<u64>, shift: Vec<u64>) -> Result<AffineElement> {
        if matrix.len() != dim * dim || shift.len() != dim {
            return Err(GroupError::Shape(format!(
                "expected {dim}x{dim} matrix and length-{dim} shift"
            )));
        }
        let q = ring.modulus();
        let e = AffineElement {
            ring,
            dim,
            matrix: matrix.into_iter().map(|x| x % q).collect(),
            shift: shift.into_iter().map(|x| x % q).collect(),
        };
        if invert_matrix(ring, dim, &e.matrix).is_none() {
            return Err(GroupError::NotInvertible);
        }
        Ok(e)
    }

    /// Reduce an exact integer affine map.
    pub fn from_integers(ring: Ring, matrix: &[Vec<i64>], shift: &[i64]) -> Result<AffineElement> {
        let dim = shift.len();
        if matrix.len() != dim || matrix.iter().any(|r| r.len() != dim) {
            return Err(GroupError::Shape("matrix and shift sizes disagree".into()));
        }
        let m = matrix
            .iter()
            .flatten()
            .map(|&x| ring.reduce(x as i128))
            .collect();
        let v = shift.iter().map(|&x| ring.reduce(x as i128)).collect();
        AffineElement::new(ring, dim, m, v)
    }

    pub fn translation(ring: Ring, shift: &[i64]) -> AffineElement {
        let mut e = AffineElement::identity(ring, shift.len());
        e.shift = shift.iter().map(|&x| ring.reduce(x as i128)).collect();
        e
    }

    pub fn ring(&self) -> Ring {
        self.ring
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn matrix_entries(&self) -> &[u64] {
        &self.matrix
    }

    pub fn shift(&self) -> &[u64] {
        &self.shift
    }

    pub fn matrix(&self) -> RMatrix {
        let mut m = RMatrix::zero(self.ring, self.dim, self.dim);
        for i in 0..self.dim {
            for j in 0..self.dim {
                m.set(i, j, self.matrix[i * self.dim + j]);
            }
        }
        m
    }

    pub fn is_identity(&self) -> bool {
        *self == AffineElement::identity(self.ring, self.dim)
    }

    /// `(M1, v1) (M2, v2) = (M1 M2, M1 v2 + v1)`.
    pub fn compose(&self, other: &AffineElement) -> AffineElement {
        assert_eq!(self.ring, other.ring);
        assert_eq!(self.dim, other.dim);
        let (n, r) = (self.dim, self.ring);
        let mut matrix = vec![0; n * n];
        let mut shift = vec![0; n];
        for i in 0..n {
            for j in 0..n {
                let mut acc = 0;
                for t in 0..n {
                    acc = r.add(acc, r.mul(self.matrix[i * n + t], other.matrix[t * n + j]));
                }
                matrix[i * n + j] = acc;
            }
            let mut acc = self.shift[i];
            for t in 0..n {
                acc = r.add(acc, r.mul(self.matrix[i * n + t], other.shift[t]));
            }
            shift[i] = acc;
        }
        AffineElement {
            ring: r,
            dim: n,
            matrix,
            shift,
        }
    }

    pub fn inverse(&self) -> AffineElement {
        let (n, r) = (self.dim, self.ring);
        let inv = invert_matrix(r, n, &self.matrix).expect("invertible by construction");
        let shift = (0..n)
            .map(|i| {
                let mut acc = 0;
                for t in 0..n {
                    acc = r.add(acc, r.mul(inv[i * n + t], self.shift[t]));
                }
                r.neg(acc)
            })
            .collect();
        AffineElement {
            ring: r,
            dim: n,
            matrix: inv,
            shift,
        }
    }

    pub fn pow(&self, mut e: u64) -> AffineElement {
        let mut acc = AffineElement::identity(self.ring, self.dim);
        let mut base = self.clone();
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.compose(&base);
            }
            e >>= 1;
            if e > 0 {
                base = base.compose(&base);
            }
        }
        acc
    }

    /// Reduce to a lower precision of the same prime.
    pub fn reduce_to(&self, ring: Ring) -> AffineElement {
        assert_eq!(ring.p(), self.ring.p());
        let q = ring.modulus();
        AffineElement {
            ring,
            dim: self.dim,
            matrix: self.matrix.iter().map(|&x| x % q).collect(),
            shift: self.shift.iter().map(|&x| x % q).collect(),
        }
    }

    /// Signed lifts, as (matrix rows, shift).
    pub fn to_signed(&self) -> (Vec<Vec<i64>>, Vec<i64>) {
        let rows = self
            .matrix
            .chunks(self.dim)
            .map(|row| row.iter().map(|&x| self.ring.signed(x)).collect())
            .collect();
        let shift = self.shift.iter().map(|&x| self.ring.signed(x)).collect();
        (rows, shift)
    }
}

impl fmt::Display for AffineElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (m, v) = self.to_signed();
        write!(f, "({m:?}, {v:?})")
    }
}

/// Gauss-Jordan inverse over `Z/p^K`; `None` when the matrix is singular mod p.
fn invert_matrix(r: Ring, n: usize, m: &[u64]) -> Option<Vec<u64>> {
    let mut a = m.to_vec();
    let mut inv = AffineElement::identity(r, n).matrix;
    for c in 0..n {
        let piv = (c..n).find(|&i| !a[i * n + c].is_multiple_of(r.p()))?;
        if piv != c {
            for j in 0..n {
                a.swap(piv * n + j, c * n + j);
                inv.swap(piv * n + j, c * n + j);
            }
        }
        let u = r.unit_inverse(a[c * n + c]).ok()?;
        for j in 0..n {
            a[c * n + j] = r.mul(a[c * n + j], u);
            inv[c * n + j] = r.mul(inv[c * n + j], u);
        }
        for i in 0..n {
            let f = a[i * n + c];
            if i != c && f != 0 {
                for j in 0..n {
                    a[i * n + j] = r.sub(a[i * n + j], r.mul(f, a[c * n + j]));
                    inv[i * n + j] = r.sub(inv[i * n + j], r.mul(f, inv[c * n + j]));
                }
            }
        }
    }
    Some(inv)
}

#[inline]
fn mix(code: u128) -> u64 {
    let mut x = (code as u64) ^ ((code >> 64) as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    x ^= x >> 30;
    x = x.wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x ^= x >> 27;
    x = x.wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

/// Open-addressing index from codes to their positions in a code list.
#[derive(Clone, Debug)]
struct CodeTable {
    slots: Vec<u32>,
    mask: usize,
}

impl CodeTable {
    fn with_capacity(n: usize) -> CodeTable {
        let size = (2 * n).next_power_of_two().max(16);
        CodeTable {
            slots: vec![EMPTY; size],
            mask: size - 1,
        }
    }

    fn build(codes: &[u128]) -> CodeTable {
        let mut t = CodeTable::with_capacity(codes.len());
        for (i, &c) in codes.iter().enumerate() {
            if let Err(slot) = t.find(codes, c) {
                t.slots[slot] = i as u32;
            }
        }
        t
    }

    /// `Ok(id)` when present, otherwise the free slot where it would go.
    #[inline]
    fn find(&self, codes: &[u128], code: u128) -> std::result::Result<u32, usize> {
        let mut slot = mix(code) as usize & self.mask;
        loop {
            let id = self.slots[slot];
            if id == EMPTY {
                return Err(slot);
            }
            if codes[id as usize] == code {
                return Ok(id);
            }
            slot = (slot + 1) & self.mask;
        }
    }
}

/// A finite p-group of affine maps, with all elements materialized.
#[derive(Clone, Debug)]
pub struct FiniteGroup {
    ring: Ring,
    dim: usize,
    bits: u32,
    generators: Vec<AffineElement>,
    generator_ids: Vec<u32>,
    codes: Vec<u128>,
    table: CodeTable,
    identity: u32,
}

impl FiniteGroup {
    /// Materialize the subgroup of `Aff_dim(Z/p^K)` generated by `gens`.
    pub fn closure(
        ring: Ring,
        dim: usize,
        gens: &[AffineElement],
        budget: usize,
    ) -> Result<FiniteGroup> {
        if dim == 0 || dim > MAX_DIM {
            return Err(GroupError::UnsupportedDimension(dim));
        }
        let q = ring.modulus();
        if q >= 1 << 31 {
            return Err(GroupError::ModulusTooLarge(q));
        }
        let bits = 64 - (q - 1).leading_zeros();
        let width = (dim * dim + dim) as u32 * bits;
        if width > 128 {
            return Err(GroupError::EncodingTooWide(width));
        }
        for g in gens {
            if g.ring != ring || g.dim != dim {
                return Err(GroupError::Shape("generator from a different affine group".into()));
            }
        }
        let mut group = FiniteGroup {
            ring,
            dim,
            bits: bits.max(1),
            generators: gens.to_vec(),
            generator_ids: Vec::new(),
            codes: Vec::new(),
            table: CodeTable::with_capacity(16),
            identity: 0,
        };
        let id_code = group.encode(&AffineElement::identity(ring, dim));
        let gcodes: Vec<u128> = gens.iter().map(|g| group.encode(g)).collect();

        let mut codes = vec![id_code];
        let mut table = CodeTable::with_capacity(1024);
        if let Err(slot) = table.find(&codes, id_code) {
            table.slots[slot] = 0;
        }
        let mut i = 0;
        while i < codes.len() {
            let x = codes[i];
            for &g in &gcodes {
                let y = group.compose_codes(x, g);
                if let Err(slot) = table.find(&codes, y) {
                    if codes.len() >= budget {
                        return Err(GroupError::BudgetExceeded(budget));
                    }
                    table.slots[slot] = codes.len() as u32;
                    codes.push(y);
                    if 2 * codes.len() > table.slots.len() {
                        table = CodeTable::build(&codes);
                    }
                }
            }
            i += 1;
        }
        let order = codes.len();
        if !is_power_of(order as u64, ring.p()) {
            return Err(GroupError::NotAPGroup {
                order,
                p: ring.p(),
            });
        }
        drop(table);
        codes.sort_unstable();
        group.table = CodeTable::build(&codes);
        group.codes = codes;
        group.identity = group.lookup(id_code).expect("identity present");
        group.generator_ids = gcodes
            .iter()
            .map(|&c| group.lookup(c).expect("generator present"))
            .collect();
        Ok(group)
    }

    pub fn ring(&self) -> Ring {
        self.ring
    }

    pub fn p(&self) -> u64 {
        self.ring.p()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn order(&self) -> usize {
        self.codes.len()
    }

    /// `log_p |Q|`.
    pub fn order_exponent(&self) -> u32 {
        log_p(self.codes.len() as u64, self.p())
    }

    pub fn generators(&self) -> &[AffineElement] {
        &self.generators
    }

    pub fn generator_ids(&self) -> &[u32] {
        &self.generator_ids
    }

    pub fn identity(&self) -> u32 {
        self.identity
    }

    /// Packed code of an element; part of the stable output contract.
    pub fn code(&self, id: u32) -> u128 {
        self.codes[id as usize]
    }

    pub fn element(&self, id: u32) -> AffineElement {
        let mut e = [0u64; MAX_ENTRIES];
        self.decode(self.codes[id as usize], &mut e);
        let nn = self.dim * self.dim;
        AffineElement {
            ring: self.ring,
            dim: self.dim,
            matrix: e[..nn].to_vec(),
            shift: e[nn..nn + self.dim].to_vec(),
        }
    }

    pub fn id_of(&self, x: &AffineElement) -> Option<u32> {
        if x.ring != self.ring || x.dim != self.dim {
            return None;
        }
        self.lookup(self.encode(x))
    }

    #[inline]
    fn lookup(&self, code: u128) -> Option<u32> {
        self.table.find(&self.codes, code).ok()
    }

    #[inline]
    pub fn mul(&self, a: u32, b: u32) -> u32 {
        let c = self.compose_codes(self.codes[a as usize], self.codes[b as usize]);
        self.lookup(c).expect("group is closed")
    }

    pub fn pow(&self, a: u32, mut e: u64) -> u32 {
        let mut acc = self.codes[self.identity as usize];
        let mut base = self.codes[a as usize];
        while e > 0 {
            if e & 1 == 1 {
                acc = self.compose_codes(acc, base);
            }
            e >>= 1;
            if e > 0 {
                base = self.compose_codes(base, base);
            }
        }
        self.lookup(acc).expect("group is closed")
    }

    pub fn inverse(&self, a: u32) -> u32 {
        let inv = self.element(a).inverse();
        self.id_of(&inv).expect("group is closed")
    }

    /// `[a, b] = a^-1 b^-1 a b`.
    pub fn commutator(&self, a: u32, b: u32) -> u32 {
        let ai = self.inverse(a);
        let bi = self.inverse(b);
        self.mul(self.mul(ai, bi), self.mul(a, b))
    }

    /// `g x g^-1`.
    pub fn conjugate(&self, x: u32, g: u32) -> u32 {
        self.mul(self.mul(g, x), self.inverse(g))
    }

    fn encode(&self, x: &AffineElement) -> u128 {
        let b = self.bits;
        let mut code = 0u128;
        for (idx, &v) in x.matrix.iter().chain(&x.shift).enumerate() {
            code |= (v as u128) << (idx as u32 * b);
        }
        code
    }

    #[inline]
    fn decode(&self, code: u128, out: &mut [u64; MAX_ENTRIES]) {
        let b = self.bits;
        let mask = (1u128 << b) - 1;
        for (idx, slot) in out.iter_mut().enumerate().take(self.dim * self.dim + self.dim) {
            *slot = ((code >> (idx as u32 * b)) & mask) as u64;
        }
    }

    #[inline]
    fn compose_codes(&self, a: u128, b: u128) -> u128 {
        let n = self.dim;
        let q = self.ring.modulus();
        let bits = self.bits;
        let mut ea = [0u64; MAX_ENTRIES];
        let mut eb = [0u64; MAX_ENTRIES];
        self.decode(a, &mut ea);
        self.decode(b, &mut eb);
        let nn = n * n;
        let mut out = 0u128;
        for i in 0..n {
            let row = &ea[i * n..i * n + n];
            for j in 0..n {
                let mut acc = 0u64;
                for t in 0..n {
                    acc = (acc + row[t] * eb[t * n + j]) % q;
                }
                out |= (acc as u128) << ((i * n + j) as u32 * bits);
            }
            let mut acc = ea[nn + i];
            for t in 0..n {
                acc = (acc + row[t] * eb[nn + t]) % q;
            }
            out |= (acc as u128) << ((nn + i) as u32 * bits);
        }
        out
    }
}

fn is_power_of(n: u64, p: u64) -> bool {
    let mut n = n;
    while n > 1 && n.is_multiple_of(p) {
        n /= p;
    }
    n == 1
}

fn log_p(n: u64, p: u64) -> u32 {
    debug_assert!(is_power_of(n, p));
    let mut e = 0;
    let mut n = n;
    while n > 1 {
        n /= p;
        e += 1;
    }
    e
}

/// A subgroup of a materialized group, as a sorted id set.
#[derive(Clone, Debug)]
pub struct Subgroup {
    group: Arc<FiniteGroup>,
    ids: Arc<[u32]>,
    gens: Vec<u32>,
}

impl PartialEq for Subgroup {
    fn eq(&self, other: &Subgroup) -> bool {
        Arc::ptr_eq(&self.group, &other.group) && self.ids == other.ids
    }
}

impl Eq for Subgroup {}

impl Subgroup {
    pub fn full(group: &Arc<FiniteGroup>) -> Subgroup {
        Subgroup {
            group: group.clone(),
            ids: (0..group.order() as u32).collect(),
            gens: group.generator_ids.clone(),
        }
    }

    pub fn group(&self) -> &Arc<FiniteGroup> {
        &self.group
    }

    pub fn ids(&self) -> &[u32] {
        &self.ids
    }

    pub fn generators(&self) -> &[u32] {
        &self.gens
    }

    pub fn generator_elements(&self) -> Vec<AffineElement> {
        self.gens.iter().map(|&g| self.group.element(g)).collect()
    }

    pub fn order(&self) -> usize {
        self.ids.len()
    }

    /// `log_p |Q : S|`.
    pub fn index_exponent(&self) -> u32 {
        log_p((self.group.order() / self.ids.len()) as u64, self.group.p())
    }

    pub fn contains(&self, id: u32) -> bool {
        self.ids.binary_search(&id).is_ok()
    }

    pub fn is_subgroup_of(&self, other: &Subgroup) -> bool {
        self.ids.iter().all(|&x| other.contains(x))
    }
}

/// Incrementally generated subgroup, using coset enumeration when a new
/// generator is added.
struct Grower<'a> {
    group: &'a FiniteGroup,
    mark: Vec<u64>,
    elems: Vec<u32>,
    gens: Vec<u32>,
}

impl<'a> Grower<'a> {
    fn new(group: &'a FiniteGroup) -> Grower<'a> {
        let mut g = Grower {
            group,
            mark: vec![0; group.order().div_ceil(64)],
            elems: Vec::new(),
            gens: Vec::new(),
        };
        g.insert(group.identity);
        g
    }

    #[inline]
    fn contains(&self, id: u32) -> bool {
        self.mark[id as usize >> 6] >> (id & 63) & 1 == 1
    }

    #[inline]
    fn insert(&mut self, id: u32) {
        self.mark[id as usize >> 6] |= 1 << (id & 63);
        self.elems.push(id);
    }

    /// Returns false when `x` was already in the subgroup.
    fn add_generator(&mut self, x: u32) -> bool {
        if self.contains(x) {
            return false;
        }
        let h_len = self.elems.len();
        self.gens.push(x);
        self.add_coset(h_len, x);
        let mut reps = vec![x];
        let mut i = 0;
        while i < reps.len() {
            let r = reps[i];
            for gi in 0..self.gens.len() {
                let e = self.group.mul(r, self.gens[gi]);
                if !self.contains(e) {
                    self.add_coset(h_len, e);
                    reps.push(e);
                }
            }
            i += 1;
        }
        true
    }

    /// Adds the right coset `H e` of the old subgroup `H = elems[..h_len]`.
    fn add_coset(&mut self, h_len: usize, e: u32) {
        for idx in 0..h_len {
            let y = self.group.mul(self.elems[idx], e);
            debug_assert!(!self.contains(y));
            self.insert(y);
        }
    }

    fn into_parts(self) -> (Vec<u32>, Vec<u32>) {
        let mut ids = self.elems;
        ids.sort_unstable();
        (ids, self.gens)
    }
}

fn normal_closure<'a>(
    group: &'a FiniteGroup,
    ambient_gens: &[u32],
    seeds: impl IntoIterator<Item = u32>,
) -> Grower<'a> {
    let conj: Vec<(u32, u32)> = ambient_gens
        .iter()
        .map(|&g| (g, group.inverse(g)))
        .collect();
    let mut grower = Grower::new(group);
    let mut work = VecDeque::new();
    for s in seeds {
        if grower.add_generator(s) {
            work.push_back(s);
        }
    }
    while let Some(x) = work.pop_front() {
        for &(g, gi) in &conj {
            let c = group.mul(group.mul(g, x), gi);
            if grower.add_generator(c) {
                work.push_back(c);
            }
        }
    }
    grower
}

/// The subgroup generated by the given elements.
pub fn subgroup_closure(group: &Arc<FiniteGroup>, gens: &[u32]) -> Subgroup {
    let mut grower = Grower::new(group);
    for &g in gens {
        grower.add_generator(g);
    }
    let (ids, gens) = grower.into_parts();
    Subgroup {
        group: group.clone(),
        ids: ids.into(),
        gens,
    }
}

/// `Φ(S)` together with a labelling of `S/Φ(S) ≅ F_p^d`.
struct FrattiniData {
    phi_ids: Vec<u32>,
    phi_gens: Vec<u32>,
    /// Generators of `S` whose images form a basis of `S/Φ(S)`.
    basis: Vec<u32>,
    /// Base-p coordinates of each element of `S`, indexed by id.
    labels: Vec<u32>,
}

fn frattini_data(s: &Subgroup) -> FrattiniData {
    let group = &*s.group;
    let p = group.p();
    let gens = &s.gens;
    let mut seeds = Vec::with_capacity(gens.len() * (gens.len() + 1) / 2);
    for &g in gens {
        seeds.push(group.pow(g, p));
    }
    for i in 0..gens.len() {
        for j in i + 1..gens.len() {
            seeds.push(group.commutator(gens[i], gens[j]));
        }
    }
    let grower = normal_closure(group, gens, seeds);
    let (phi_ids, phi_gens) = grower.into_parts();

    let mut labels = vec![EMPTY; group.order()];
    let mut span = phi_ids.clone();
    for &x in &span {
        labels[x as usize] = 0;
    }
    let mut basis = Vec::new();
    let mut pk = 1u32;
    for &g in gens {
        if labels[g as usize] != EMPTY {
            continue;
        }
        basis.push(g);
        let len = span.len();
        let mut gj = g;
        for j in 1..p as u32 {
            for idx in 0..len {
                let x = span[idx];
                let y = group.mul(x, gj);
                debug_assert_eq!(labels[y as usize], EMPTY);
                labels[y as usize] = labels[x as usize] + j * pk;
                span.push(y);
            }
            gj = group.mul(gj, g);
        }
        pk = pk.wrapping_mul(p as u32);
    }
    debug_assert_eq!(span.len(), s.ids.len());
    FrattiniData {
        phi_ids,
        phi_gens,
        basis,
        labels,
    }
}

/// `Φ(S) = S^p [S, S]`.
pub fn frattini(s: &Subgroup) -> Subgroup {
    let fd = frattini_data(s);
    Subgroup {
        group: s.group.clone(),
        ids: fd.phi_ids.into(),
        gens: fd.phi_gens,
    }
}

/// Minimal number of generators, `log_p |S : Φ(S)|`.
pub fn dmin(s: &Subgroup) -> u32 {
    frattini_data(s).basis.len() as u32
}

/// A generating set of minimal size.
pub fn minimal_generators(s: &Subgroup) -> Vec<u32> {
    frattini_data(s).basis
}

/// Normalized nonzero functionals on `F_p^d`: the first nonzero coordinate is 1.
fn functionals(p: u64, d: usize) -> Vec<Vec<u32>> {
    let p = p as u32;
    let mut out = Vec::new();
    for lead in 0..d {
        let free = d - lead - 1;
        let count = (p as usize).pow(free as u32);
        for mut c in 0..count {
            let mut phi = vec![0u32; d];
            phi[lead] = 1;
            for slot in phi.iter_mut().skip(lead + 1) {
                *slot = (c % p as usize) as u32;
                c /= p as usize;
            }
            out.push(phi);
        }
    }
    out
}

fn maximal_from(s: &Subgroup, fd: &FrattiniData) -> Vec<(Vec<u32>, Vec<u32>)> {
    let group = &*s.group;
    let p = group.p() as u32;
    let d = fd.basis.len();
    if d == 0 {
        return Vec::new();
    }
    let space = (p as usize).pow(d as u32);
    functionals(p as u64, d)
        .into_iter()
        .map(|phi| {
            let dot: Vec<u8> = (0..space)
                .map(|mut v| {
                    let mut acc = 0;
                    for &c in &phi {
                        acc += c * (v % p as usize) as u32;
                        v /= p as usize;
                    }
                    (acc % p) as u8
                })
                .collect();
            let ids: Vec<u32> = s
                .ids
                .iter()
                .copied()
                .filter(|&x| dot[fd.labels[x as usize] as usize] == 0)
                .collect();
            let lead = phi.iter().position(|&c| c == 1).expect("normalized");
            let bt = fd.basis[lead];
            let mut gens: Vec<u32> = (0..d)
                .filter(|&k| k != lead)
                .map(|k| {
                    let e = (p - phi[k]) % p;
                    group.mul(fd.basis[k], group.pow(bt, e as u64))
                })
                .collect();
            gens.extend(&fd.phi_gens);
            (ids, gens)
        })
        .collect()
}

/// All subgroups of index p, as hyperplane preimages in `S/Φ(S)`.
pub fn maximal_subgroups(s: &Subgroup) -> Vec<Subgroup> {
    let fd = frattini_data(s);
    maximal_from(s, &fd)
        .into_iter()
        .map(|(ids, gens)| Subgroup {
            group: s.group.clone(),
            ids: ids.into(),
            gens,
        })
        .collect()
}

/// `Φ^0 = Q ⊇ Φ^1 ⊇ … ⊇ Φ^j`.
pub fn frattini_series(group: &Arc<FiniteGroup>, j: u32) -> Vec<Subgroup> {
    let mut series = vec![Subgroup::full(group)];
    for _ in 0..j {
        let next = frattini(series.last().expect("nonempty"));
        series.push(next);
    }
    series
}

#[derive(Clone, Debug)]
pub struct SubgroupRecord {
    /// Generators are a minimal generating set.
    pub subgroup: Subgroup,
    pub index_exponent: u32,
    pub d: u32,
}

/// Every subgroup of index at most `p^m`, each once, ordered by index and
/// then by sorted id set.  `id_budget` caps the total number of stored ids
/// per level.
/// Subgroups of one level as (sorted ids, generators).
type Level = Vec<(Arc<[u32]>, Vec<u32>)>;

pub fn all_subgroups_up_to_index(
    group: &Arc<FiniteGroup>,
    m: u32,
    id_budget: usize,
) -> Result<Vec<SubgroupRecord>> {
    let mut level: Level = vec![(
        (0..group.order() as u32).collect(),
        group.generator_ids.clone(),
    )];
    let mut records = Vec::new();
    for i in 0..=m {
        level.sort_by(|a, b| a.0.cmp(&b.0));
        level.dedup_by(|a, b| a.0 == b.0);
        let processed: Vec<(SubgroupRecord, Level)> = level
            .par_iter()
            .map(|(ids, gens)| {
                let s = Subgroup {
                    group: group.clone(),
                    ids: ids.clone(),
                    gens: gens.clone(),
                };
                let fd = frattini_data(&s);
                let children = if i < m {
                    maximal_from(&s, &fd)
                        .into_iter()
                        .map(|(ids, gens)| (Arc::from(ids), gens))
                        .collect()
                } else {
                    Vec::new()
                };
                let record = SubgroupRecord {
                    subgroup: Subgroup {
                        gens: fd.basis.clone(),
                        ..s
                    },
                    index_exponent: i,
                    d: fd.basis.len() as u32,
                };
                (record, children)
            })
            .collect();
        let mut next = Vec::new();
        let mut stored = 0usize;
        for (record, children) in processed {
            records.push(record);
            for child in children {
                stored += child.0.len();
                if stored > id_budget {
                    return Err(GroupError::BudgetExceeded(id_budget));
                }
                next.push(child);
            }
        }
        level = next;
    }
    Ok(records)
}
