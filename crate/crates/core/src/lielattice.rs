//! `Z_p`-Lie lattices at finite precision and their bracket-closed sublattices.
//!
//! The generator count of a lattice `L` is `dim_{F_p} L / (pL + [L, L])`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::padic::{Lattice, PadicError, Ring};
use crate::verify::Outcome;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum LieError {
    #[error(transparent)]
    Padic(#[from] PadicError),
    #[error("structure constants are not antisymmetric at ({0}, {1})")]
    NotAntisymmetric(usize, usize),
    #[error("Jacobi identity fails for ({0}, {1}, {2})")]
    JacobiFails(usize, usize, usize),
    #[error("structure tensor has the wrong shape")]
    Shape,
    #[error("precision {k} is too low for index exponent {m}; need at least {need}")]
    InsufficientPrecision { k: u32, m: u32, need: u32 },
    #[error("sublattice budget of {0} exceeded")]
    BudgetExceeded(usize),
}

pub type Result<T> = std::result::Result<T, LieError>;

/// `[e_i, e_j] = Σ_k c[i][j][k] e_k` over `Z/p^K`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LieLattice {
    ring: Ring,
    dim: usize,
    c: Vec<u64>,
}

impl LieLattice {
    /// Validate a residue tensor indexed `c[(i * dim + j) * dim + k]`.
    pub fn new(ring: Ring, dim: usize, c: Vec<u64>) -> Result<LieLattice> {
        if c.len() != dim * dim * dim {
            return Err(LieError::Shape);
        }
        let l = LieLattice {
            ring,
            dim,
            c: c.into_iter().map(|x| x % ring.modulus()).collect(),
        };
        for i in 0..dim {
            for j in i..dim {
                for k in 0..dim {
                    if l.coeff(i, j, k) != ring.neg(l.coeff(j, i, k)) {
                        return Err(LieError::NotAntisymmetric(i, j));
                    }
                }
            }
        }
        for i in 0..dim {
            for j in i + 1..dim {
                for k in j + 1..dim {
                    let e = |t: usize| l.unit(t);
                    let a = l.bracket(&e(i), &l.bracket(&e(j), &e(k)));
                    let b = l.bracket(&e(j), &l.bracket(&e(k), &e(i)));
                    let c = l.bracket(&e(k), &l.bracket(&e(i), &e(j)));
                    if (0..dim).any(|t| ring.add(ring.add(a[t], b[t]), c[t]) != 0) {
                        return Err(LieError::JacobiFails(i, j, k));
                    }
                }
            }
        }
        Ok(l)
    }

    /// Build from exact brackets `[e_i, e_j] = v` for `i < j`; the rest
    /// follows by antisymmetry.
    pub fn from_brackets(
        p: u64,
        k: u32,
        dim: usize,
        brackets: &[(usize, usize, Vec<i64>)],
    ) -> Result<LieLattice> {
        let ring = Ring::new(p, k)?;
        let mut c = vec![0u64; dim * dim * dim];
        for (i, j, v) in brackets {
            let (i, j) = (*i, *j);
            if i >= dim || j >= dim || v.len() != dim {
                return Err(LieError::Shape);
            }
            if i == j {
                if v.iter().any(|&x| ring.reduce(x as i128) != 0) {
                    return Err(LieError::NotAntisymmetric(i, j));
                }
                continue;
            }
            for (t, &x) in v.iter().enumerate() {
                let r = ring.reduce(x as i128);
                c[(i * dim + j) * dim + t] = r;
                c[(j * dim + i) * dim + t] = ring.neg(r);
            }
        }
        LieLattice::new(ring, dim, c)
    }

    pub fn abelian(p: u64, k: u32, dim: usize) -> Result<LieLattice> {
        LieLattice::from_brackets(p, k, dim, &[])
    }

    /// `Z_p x ⊕ A` with `ad(x)` acting on `A` as `p^s`; `x = e_0`.
    pub fn x_scalar(p: u64, k: u32, dim: usize, s: u32) -> Result<LieLattice> {
        let ps = (p as i64).pow(s);
        let brackets: Vec<_> = (1..dim)
            .map(|a| {
                let mut v = vec![0; dim];
                v[a] = ps;
                (0, a, v)
            })
            .collect();
        LieLattice::from_brackets(p, k, dim, &brackets)
    }

    /// `[e_0, e_2] = p e_1` on `Z_p^3`.
    pub fn unipotent(p: u64, k: u32) -> Result<LieLattice> {
        LieLattice::from_brackets(p, k, 3, &[(0, 2, vec![0, p as i64, 0])])
    }

    pub fn ring(&self) -> Ring {
        self.ring
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn coeff(&self, i: usize, j: usize, k: usize) -> u64 {
        self.c[(i * self.dim + j) * self.dim + k]
    }

    fn unit(&self, i: usize) -> Vec<u64> {
        let mut v = vec![0; self.dim];
        v[i] = 1;
        v
    }

    pub fn bracket(&self, u: &[u64], v: &[u64]) -> Vec<u64> {
        let r = self.ring;
        let n = self.dim;
        let mut out = vec![0; n];
        for i in 0..n {
            if u[i] == 0 {
                continue;
            }
            for j in 0..n {
                if v[j] == 0 {
                    continue;
                }
                let f = r.mul(u[i], v[j]);
                for (k, o) in out.iter_mut().enumerate() {
                    *o = r.add(*o, r.mul(f, self.coeff(i, j, k)));
                }
            }
        }
        out
    }

    pub fn is_bracket_closed(&self, sub: &Lattice) -> bool {
        let b = sub.basis();
        (0..b.len()).all(|i| (i + 1..b.len()).all(|j| sub.contains_vector(&self.bracket(&b[i], &b[j]))))
    }

    /// `log_p |L' : pL' + [L', L']|` for a bracket-closed sublattice `L'`.
    pub fn sub_dmin(&self, sub: &Lattice) -> Result<u32> {
        let r = self.ring;
        let b = sub.basis();
        let mut cols: Vec<Vec<u64>> = b
            .iter()
            .map(|v| v.iter().map(|&x| r.mul(x, r.p() % r.modulus())).collect())
            .collect();
        for i in 0..b.len() {
            for j in i + 1..b.len() {
                cols.push(self.bracket(&b[i], &b[j]));
            }
        }
        let frat = Lattice::from_columns(r, self.dim, cols)?;
        Ok(frat.index_exponent() - sub.index_exponent())
    }
}

/// Minimal number of Lie generators of the whole lattice.
pub fn lattice_dmin(l: &LieLattice) -> Result<u32> {
    l.sub_dmin(&Lattice::full(l.ring, l.dim))
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SubLatticeRecord {
    pub lattice: Lattice,
    pub index_exponent: u32,
    pub d: u32,
}

/// Maximal additive sublattices `pL' + ker(φ)`.
fn maximal_sublattices(sub: &Lattice) -> Result<Vec<Lattice>> {
    let r = sub.ring();
    let p = r.p();
    let b = sub.basis();
    let n = b.len();
    let scaled: Vec<Vec<u64>> = b
        .iter()
        .map(|v| v.iter().map(|&x| r.mul(x, p % r.modulus())).collect())
        .collect();
    let mut out = Vec::new();
    for lead in 0..n {
        let free = n - lead - 1;
        for mut code in 0..(p as usize).pow(free as u32) {
            let mut phi = vec![0u64; n];
            phi[lead] = 1;
            for slot in phi.iter_mut().skip(lead + 1) {
                *slot = code as u64 % p;
                code /= p as usize;
            }
            let mut cols = scaled.clone();
            for k in (0..n).filter(|&k| k != lead) {
                // b_k - φ_k b_lead lies in the kernel
                let f = r.reduce(-(phi[k] as i128));
                cols.push(
                    b[k].iter()
                        .zip(&b[lead])
                        .map(|(&x, &y)| r.add(x, r.mul(f, y)))
                        .collect(),
                );
            }
            out.push(Lattice::from_columns(r, sub.dim(), cols)?);
        }
    }
    Ok(out)
}

/// Bracket-closed sublattices of index at most `p^m`, deduplicated by their
/// canonical form and ordered by index and then by basis.
pub fn lie_sublattices_up_to_index(
    l: &LieLattice,
    m: u32,
    budget: usize,
) -> Result<Vec<SubLatticeRecord>> {
    let need = m + 2;
    if l.ring.k() < need {
        return Err(LieError::InsufficientPrecision {
            k: l.ring.k(),
            m,
            need,
        });
    }
    let mut level = vec![Lattice::full(l.ring, l.dim)];
    let mut out = Vec::new();
    for i in 0..=m {
        level.sort_by(|a, b| a.basis().cmp(b.basis()));
        level.dedup();
        for sub in &level {
            if l.is_bracket_closed(sub) {
                out.push(SubLatticeRecord {
                    lattice: sub.clone(),
                    index_exponent: i,
                    d: l.sub_dmin(sub)?,
                });
            }
        }
        if i == m {
            break;
        }
        let mut next = Vec::new();
        for sub in &level {
            next.extend(maximal_sublattices(sub)?);
            if next.len() > budget {
                return Err(LieError::BudgetExceeded(budget));
            }
        }
        level = next;
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LatticeWitness {
    pub index_exponent: u32,
    pub index: u64,
    pub d_found: u32,
    pub d_expected: u32,
    /// Basis columns as signed lifts.
    pub basis: Vec<Vec<i64>>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LatticeVerdict {
    pub outcome: Outcome,
    pub witness: Option<LatticeWitness>,
    pub max_index_exponent: u32,
}

pub const DEFAULT_LATTICE_BUDGET: usize = 1 << 20;

pub fn star_check_lattice(l: &LieLattice, m: u32, d_expected: u32) -> Result<LatticeVerdict> {
    let subs = lie_sublattices_up_to_index(l, m, DEFAULT_LATTICE_BUDGET)?;
    let p = l.ring.p();
    let witness = subs.iter().find(|s| s.d != d_expected).map(|s| LatticeWitness {
        index_exponent: s.index_exponent,
        index: p.pow(s.index_exponent),
        d_found: s.d,
        d_expected,
        basis: s
            .lattice
            .basis()
            .iter()
            .map(|c| c.iter().map(|&x| l.ring.signed(x)).collect())
            .collect(),
    });
    Ok(LatticeVerdict {
        outcome: if witness.is_some() {
            Outcome::Witness
        } else {
            Outcome::Pass
        },
        witness,
        max_index_exponent: m,
    })
}
