//! Group specifications, their affine embeddings and precision certificates.
//!
//! Procyclic tops `⟨y⟩ ≅ Z_p` carry an extra counter coordinate: `y` acts as
//! `block(1, T)` and translates the counter by 1.  The counter keeps `y` of
//! order `p^K` in the truncation even when `T` itself has small order.

use std::collections::BTreeMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::padic::{
    matrix_order_mod, Lattice, PadicError, RMatrix, Ring, ScalarForm,
};
use crate::pgroup::{
    all_subgroups_up_to_index, frattini_series, subgroup_closure, AffineElement, FiniteGroup,
    GroupError, Subgroup, SubgroupRecord, DEFAULT_BUDGET,
};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CatalogError {
    #[error(transparent)]
    Padic(#[from] PadicError),
    #[error(transparent)]
    Group(#[from] GroupError),
    #[error("constraint violation: {0}")]
    ConstraintViolation(String),
    #[error("certificate unavailable: {0}")]
    CertificateUnavailable(String),
    #[error("spec has no split single-top description")]
    NotSplit,
}

pub type Result<T> = std::result::Result<T, CatalogError>;

/// An exact integer affine map.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct IntAffine {
    pub matrix: Vec<Vec<i64>>,
    pub shift: Vec<i64>,
}

impl IntAffine {
    pub fn linear(matrix: Vec<Vec<i64>>) -> IntAffine {
        let n = matrix.len();
        IntAffine {
            matrix,
            shift: vec![0; n],
        }
    }

    pub fn translation(shift: Vec<i64>) -> IntAffine {
        let n = shift.len();
        IntAffine {
            matrix: identity(n),
            shift,
        }
    }

    pub fn dim(&self) -> usize {
        self.shift.len()
    }

    /// Homogeneous `(n+1) x (n+1)` form with the affine row last.
    pub fn homogeneous(&self) -> Vec<Vec<i64>> {
        let n = self.dim();
        let mut rows: Vec<Vec<i64>> = self
            .matrix
            .iter()
            .zip(&self.shift)
            .map(|(row, &v)| {
                let mut r = row.clone();
                r.push(v);
                r
            })
            .collect();
        let mut last = vec![0; n];
        last.push(1);
        rows.push(last);
        rows
    }

    pub fn from_homogeneous(rows: &[Vec<i64>]) -> Option<IntAffine> {
        let n = rows.len().checked_sub(1)?;
        if rows.iter().any(|r| r.len() != n + 1) {
            return None;
        }
        let last = &rows[n];
        if last[..n].iter().any(|&x| x != 0) || last[n] != 1 {
            return None;
        }
        Some(IntAffine {
            matrix: rows[..n].iter().map(|r| r[..n].to_vec()).collect(),
            shift: rows[..n].iter().map(|r| r[n]).collect(),
        })
    }

    fn reduce(&self, ring: Ring) -> Result<AffineElement> {
        Ok(AffineElement::from_integers(ring, &self.matrix, &self.shift)?)
    }
}

/// Named negative controls; they are never listed.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MutantKind {
    /// `z` acts as `diag(1, …, 1, -1)` and squares to the first basis vector.
    DiagonalFlip,
    /// `z` swaps two basis vectors, fixes the rest, and `z^2 = 1`.
    Swap,
    /// `z` swaps two basis vectors, negates the rest, and `z^2 = 1`.
    SwapNegate,
    /// `C_2` acting by `-1` on `Z_2^r`.
    TorsionMinusOne,
    /// `Z_3 × C_3` acting on `Z_3[ω]` through `1+3` and `ω`.
    OmegaTwist,
    /// Two commuting involutions modulo a rank-3 lattice.
    KleinFour,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CustomShape {
    Opaque,
    Mutant(MutantKind),
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GroupSpec {
    Abelian {
        p: u64,
        d: u32,
    },
    /// `Z_p ⋉ Z_p^{d-1}` with the top acting by the scalar `lambda`.
    ScalarSplit {
        p: u64,
        d: u32,
        lambda: i64,
    },
    /// `Z_p ⋉ Z_p^n` with the top acting through an integer matrix.
    MatrixSplit {
        p: u64,
        action: Vec<Vec<i64>>,
    },
    MaxClass3,
    /// Finite cyclic top acting by the scalar `lambda` on `Z_p^rank`.
    TorsionScalar {
        p: u64,
        rank: u32,
        lambda: i64,
    },
    CustomAffine {
        p: u64,
        dim: usize,
        generators: Vec<IntAffine>,
        shape: CustomShape,
    },
}

pub const OMEGA: [[i64; 2]; 2] = [[0, -1], [1, -1]];

fn identity(n: usize) -> Vec<Vec<i64>> {
    (0..n)
        .map(|i| (0..n).map(|j| i64::from(i == j)).collect())
        .collect()
}

fn scalar(n: usize, lambda: i64) -> Vec<Vec<i64>> {
    (0..n)
        .map(|i| (0..n).map(|j| if i == j { lambda } else { 0 }).collect())
        .collect()
}

fn omega() -> Vec<Vec<i64>> {
    OMEGA.iter().map(|r| r.to_vec()).collect()
}

/// `block(1, t)`.
fn with_counter(t: &[Vec<i64>]) -> Vec<Vec<i64>> {
    let n = t.len();
    let mut m = identity(n + 1);
    for i in 0..n {
        m[i + 1][1..].copy_from_slice(&t[i]);
    }
    m
}

fn unit_vector(n: usize, i: usize) -> Vec<i64> {
    let mut v = vec![0; n];
    v[i] = 1;
    v
}

fn int_mul(a: &[Vec<i64>], b: &[Vec<i64>]) -> Option<Vec<Vec<i64>>> {
    let n = a.len();
    let mut out = vec![vec![0i64; n]; n];
    for i in 0..n {
        for j in 0..n {
            let mut acc = 0i64;
            for t in 0..n {
                acc = acc.checked_add(a[i][t].checked_mul(b[t][j])?)?;
            }
            out[i][j] = acc;
        }
    }
    Some(out)
}

/// Exact multiplicative order of an integer matrix, if at most `limit`.
pub fn exact_order(t: &[Vec<i64>], limit: u64) -> Option<u64> {
    let id = identity(t.len());
    let mut power = t.to_vec();
    for k in 1..=limit {
        if power == id {
            return Some(k);
        }
        power = int_mul(&power, t)?;
    }
    None
}

/// The top of a split single-top group `⟨y⟩ ⋉ A`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Top {
    None,
    Procyclic(Vec<Vec<i64>>),
    Torsion { action: Vec<Vec<i64>>, order: u64 },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Split {
    pub p: u64,
    pub rank: usize,
    pub top: Top,
}

impl Split {
    /// Offset of the lattice coordinates inside the affine embedding.
    pub fn offset(&self) -> usize {
        usize::from(matches!(self.top, Top::Procyclic(_)))
    }

    fn action(&self) -> Option<&[Vec<i64>]> {
        match &self.top {
            Top::None => None,
            Top::Procyclic(t) | Top::Torsion { action: t, .. } => Some(t),
        }
    }
}

impl GroupSpec {
    pub fn p(&self) -> u64 {
        match self {
            GroupSpec::Abelian { p, .. }
            | GroupSpec::ScalarSplit { p, .. }
            | GroupSpec::MatrixSplit { p, .. }
            | GroupSpec::TorsionScalar { p, .. }
            | GroupSpec::CustomAffine { p, .. } => *p,
            GroupSpec::MaxClass3 => 3,
        }
    }

    /// Normal form of the top's scalar action, for scalar specs.
    pub fn scalar_form(&self) -> Option<ScalarForm> {
        match self {
            GroupSpec::ScalarSplit { p, lambda, .. } => ScalarForm::of_integer(*p, *lambda).ok(),
            _ => None,
        }
    }

    /// Rank of `Z_p ⊗ G` as a p-adic analytic group.
    pub fn dimension(&self) -> Option<u32> {
        match self {
            GroupSpec::Abelian { d, .. } | GroupSpec::ScalarSplit { d, .. } => Some(*d),
            GroupSpec::MatrixSplit { action, .. } => Some(action.len() as u32 + 1),
            GroupSpec::MaxClass3 => Some(2),
            GroupSpec::TorsionScalar { rank, .. } => Some(*rank),
            GroupSpec::CustomAffine { .. } => None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let p = self.p();
        if !crate::padic::is_prime(p) {
            return Err(PadicError::NotPrime(p).into());
        }
        match self {
            GroupSpec::Abelian { .. } | GroupSpec::MaxClass3 => Ok(()),
            GroupSpec::ScalarSplit { p, d, lambda } => {
                if *d < 2 {
                    return Err(CatalogError::ConstraintViolation(format!(
                        "scalar split group needs d >= 2, got {d}"
                    )));
                }
                ScalarForm::of_integer(*p, *lambda)?;
                Ok(())
            }
            GroupSpec::MatrixSplit { p, action } => {
                let n = action.len();
                if n == 0 || action.iter().any(|r| r.len() != n) {
                    return Err(CatalogError::ConstraintViolation(
                        "action must be a nonempty square matrix".into(),
                    ));
                }
                let ring = Ring::new(*p, 1)?;
                let t = RMatrix::from_rows(ring, action)?;
                // a continuous action of Z_p needs p-power order modulo p
                match matrix_order_mod(&t) {
                    Ok(_) => Ok(()),
                    Err(PadicError::NotPPowerOrder { .. }) => Err(CatalogError::ConstraintViolation(
                        "action matrix does not have p-power order modulo p".into(),
                    )),
                    Err(e) => Err(e.into()),
                }
            }
            GroupSpec::TorsionScalar { p, rank, lambda } => {
                if *p != 2 || *lambda != -1 || *rank == 0 {
                    return Err(CatalogError::ConstraintViolation(
                        "torsion scalar tops are supported for p = 2, lambda = -1, rank >= 1".into(),
                    ));
                }
                Ok(())
            }
            GroupSpec::CustomAffine {
                dim, generators, ..
            } => {
                if *dim == 0 {
                    return Err(CatalogError::ConstraintViolation("dimension must be positive".into()));
                }
                for g in generators {
                    if g.dim() != *dim || g.matrix.len() != *dim || g.matrix.iter().any(|r| r.len() != *dim)
                    {
                        return Err(CatalogError::ConstraintViolation(format!(
                            "generator is not a {dim}-dimensional affine map"
                        )));
                    }
                }
                Ok(())
            }
        }
    }

    /// Split single-top description, when the spec has one.
    pub fn split(&self) -> Option<Split> {
        let p = self.p();
        let (rank, top) = match self {
            GroupSpec::Abelian { d, .. } => (*d as usize, Top::None),
            GroupSpec::ScalarSplit { d, lambda, .. } => {
                let r = *d as usize - 1;
                (r, Top::Procyclic(scalar(r, *lambda)))
            }
            GroupSpec::MatrixSplit { action, .. } => (action.len(), Top::Procyclic(action.clone())),
            GroupSpec::MaxClass3 => (
                2,
                Top::Torsion {
                    action: omega(),
                    order: 3,
                },
            ),
            GroupSpec::TorsionScalar { rank, lambda, .. } => {
                let r = *rank as usize;
                let action = scalar(r, *lambda);
                let order = exact_order(&action, 64).expect("validated torsion scalar");
                (r, Top::Torsion { action, order })
            }
            GroupSpec::CustomAffine { .. } => return None,
        };
        Some(Split { p, rank, top })
    }

    /// Affine dimension and integer generators of the embedding.
    pub fn embedding(&self) -> (usize, Vec<IntAffine>) {
        if let GroupSpec::CustomAffine {
            dim, generators, ..
        } = self
        {
            return (*dim, generators.clone());
        }
        let split = self.split().expect("non-custom specs are split");
        let r = split.rank;
        match &split.top {
            Top::Procyclic(t) => {
                let dim = r + 1;
                let mut gens = vec![IntAffine {
                    matrix: with_counter(t),
                    shift: unit_vector(dim, 0),
                }];
                gens.extend((1..dim).map(|i| IntAffine::translation(unit_vector(dim, i))));
                (dim, gens)
            }
            Top::Torsion { action, .. } => {
                let mut gens = vec![IntAffine::linear(action.clone())];
                gens.extend((0..r).map(|i| IntAffine::translation(unit_vector(r, i))));
                (r, gens)
            }
            Top::None => {
                let dim = r.max(1);
                let gens = (0..r).map(|i| IntAffine::translation(unit_vector(dim, i))).collect();
                (dim, gens)
            }
        }
    }

    /// The image of the group in `Aff_dim(Z/p^K)`.
    pub fn quotient(&self, k: u32, budget: usize) -> Result<FiniteGroup> {
        let ring = Ring::new(self.p(), k)?;
        let (dim, gens) = self.embedding();
        let gens = gens
            .iter()
            .map(|g| g.reduce(ring))
            .collect::<Result<Vec<_>>>()?;
        Ok(FiniteGroup::closure(ring, dim, &gens, budget)?)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sign {
    Plus,
    Minus,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FamilyParams {
    pub p: u64,
    pub d: u32,
    pub s: u32,
    pub sign: Sign,
}

impl FamilyParams {
    pub fn new(p: u64, d: u32) -> FamilyParams {
        FamilyParams {
            p,
            d,
            s: 1,
            sign: Sign::Plus,
        }
    }

    pub fn with_s(self, s: u32, sign: Sign) -> FamilyParams {
        FamilyParams { s, sign, ..self }
    }
}

fn violation<T>(msg: impl Into<String>) -> Result<T> {
    Err(CatalogError::ConstraintViolation(msg.into()))
}

/// Constructor for the four listed families.
pub fn family(item: u32, params: FamilyParams) -> Result<GroupSpec> {
    let FamilyParams { p, d, s, sign } = params;
    let spec = match item {
        1 => GroupSpec::Abelian { p, d },
        2 => {
            if d < 2 {
                return violation("item 2 needs d >= 2");
            }
            if p == 2 && s < 2 {
                return violation("item 2 at p = 2 needs s >= 2");
            }
            if p != 2 && s < 1 {
                return violation("item 2 needs s >= 1");
            }
            if p != 2 && sign == Sign::Minus {
                return violation("negative scalars only occur for p = 2");
            }
            let base = (p as i64)
                .checked_pow(s)
                .and_then(|x| x.checked_add(1))
                .ok_or_else(|| CatalogError::ConstraintViolation("1+p^s overflows".into()))?;
            let lambda = match sign {
                Sign::Plus => base,
                Sign::Minus => -base,
            };
            GroupSpec::ScalarSplit { p, d, lambda }
        }
        3 => GroupSpec::MaxClass3,
        4 => {
            if p != 2 || d < 2 {
                return violation("item 4 needs p = 2 and d >= 2");
            }
            GroupSpec::ScalarSplit { p, d, lambda: -1 }
        }
        _ => return violation(format!("there is no item {item}")),
    };
    spec.validate()?;
    Ok(spec)
}

/// Negative-control groups; `d` is the rank where the shape has one.
pub fn mutant(kind: MutantKind, d: usize) -> Result<GroupSpec> {
    let custom = |p: u64, dim: usize, generators: Vec<IntAffine>| GroupSpec::CustomAffine {
        p,
        dim,
        generators,
        shape: CustomShape::Mutant(kind),
    };
    let spec = match kind {
        MutantKind::DiagonalFlip => {
            if d < 3 {
                return violation("diagonal flip needs d >= 3");
            }
            let mut m = identity(d);
            m[d - 1][d - 1] = -1;
            let mut gens = vec![IntAffine {
                matrix: m,
                shift: unit_vector(d, 0),
            }];
            gens.extend((1..d).map(|i| IntAffine::translation(unit_vector(d, i))));
            custom(2, d, gens)
        }
        MutantKind::Swap | MutantKind::SwapNegate => {
            if d < 2 || (kind == MutantKind::Swap && d < 3) {
                return violation("swap shapes need d >= 3 (or d >= 2 with negation)");
            }
            let rest = if kind == MutantKind::Swap { 1 } else { -1 };
            let mut m = scalar(d, rest);
            m[0][0] = 0;
            m[1][1] = 0;
            m[0][1] = 1;
            m[1][0] = 1;
            let mut gens = vec![IntAffine::linear(m)];
            gens.extend((0..d).map(|i| IntAffine::translation(unit_vector(d, i))));
            custom(2, d, gens)
        }
        MutantKind::TorsionMinusOne => {
            if d < 1 {
                return violation("rank must be positive");
            }
            let mut gens = vec![IntAffine::linear(scalar(d, -1))];
            gens.extend((0..d).map(|i| IntAffine::translation(unit_vector(d, i))));
            custom(2, d, gens)
        }
        MutantKind::OmegaTwist => {
            let y = IntAffine {
                matrix: with_counter(&scalar(2, 4)),
                shift: unit_vector(3, 0),
            };
            let z = IntAffine::linear(with_counter(&omega()));
            custom(
                3,
                3,
                vec![
                    y,
                    z,
                    IntAffine::translation(unit_vector(3, 1)),
                    IntAffine::translation(unit_vector(3, 2)),
                ],
            )
        }
        MutantKind::KleinFour => {
            let w = IntAffine {
                matrix: vec![vec![1, 0, 0], vec![0, -1, 0], vec![0, 0, -1]],
                shift: vec![1, 0, 0],
            };
            let z = IntAffine {
                matrix: vec![vec![-1, 0, 0], vec![0, 1, 0], vec![0, 0, -1]],
                shift: vec![0, 1, 1],
            };
            custom(2, 3, vec![w, z])
        }
    };
    spec.validate()?;
    Ok(spec)
}

/// `Z_5 ⋉ Z_5^2` with the top acting by `I + 5 E_12`.
pub fn unipotent_mutant() -> GroupSpec {
    GroupSpec::MatrixSplit {
        p: 5,
        action: vec![vec![1, 5], vec![0, 1]],
    }
}

/// `Z_3 ⋉ Z_3^2` with the top acting by `diag(4, 10)`.
pub fn nonscalar_mutant() -> GroupSpec {
    GroupSpec::MatrixSplit {
        p: 3,
        action: vec![vec![4, 0], vec![0, 10]],
    }
}

/// `Φ^level(G) = ⟨y^{p^e}⟩ ⋉ L` for a split group.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PhiSeriesEntry {
    pub level: u32,
    /// `e` with top part `⟨y^{p^e}⟩`; `None` when the top part is trivial.
    pub top_exponent: Option<u32>,
    pub lattice: Lattice,
}

/// Levels `0..=j` of the Frattini series, via
/// `L_{i+1} = p L_i + (T^{p^i} - 1) L_i`.
pub fn symbolic_phi_series(spec: &GroupSpec, j: u32) -> Result<Vec<PhiSeriesEntry>> {
    let split = spec.split().ok_or(CatalogError::NotSplit)?;
    // every L_i contains p^i A, so precision j + 2 resolves all levels
    let ring = Ring::new(split.p, j + 2)?;
    symbolic_series_at(&split, ring, j)
}

fn symbolic_series_at(split: &Split, ring: Ring, j: u32) -> Result<Vec<PhiSeriesEntry>> {
    let r = split.rank;
    let p = split.p;
    let t = split
        .action()
        .map(|t| RMatrix::from_rows(ring, t))
        .transpose()?;
    let mut lattice = Lattice::full(ring, r);
    let mut out = Vec::with_capacity(j as usize + 1);
    for level in 0..=j {
        let top_exponent = match &split.top {
            Top::None => None,
            Top::Procyclic(_) => Some(level),
            Top::Torsion { order, .. } => {
                if p.checked_pow(level).is_none_or(|q| q >= *order) {
                    None
                } else {
                    Some(level)
                }
            }
        };
        out.push(PhiSeriesEntry {
            level,
            top_exponent,
            lattice: lattice.clone(),
        });
        if level == j {
            break;
        }
        let mut cols: Vec<Vec<u64>> = lattice
            .basis()
            .iter()
            .map(|c| c.iter().map(|&x| ring.mul(x, p % ring.modulus())).collect())
            .collect();
        if let Some(t) = &t {
            let tq = t.pow(p.pow(level)).sub(&RMatrix::identity(ring, r));
            cols.extend(lattice.basis().iter().map(|c| tq.apply(c)));
        }
        lattice = Lattice::from_columns(ring, r, cols)?;
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CertificateMode {
    Exact,
    Heuristic,
    Failed,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Evidence {
    /// Truncation kernel `⟨y^{p^E}⟩ ⋉ p^K A` against symbolic `Φ^{m+1}`.
    Symbolic {
        kernel_top_exponent: Option<u32>,
        phi_top_exponent: Option<u32>,
        phi_lattice_pivots: Vec<u32>,
        top_contained: bool,
        lattice_contained: bool,
    },
    /// Kernel of `Q_{K+1} -> Q_K` against `Φ^{m+1}(Q_{K+1})`, plus census agreement.
    KernelCheck {
        levels: (u32, u32),
        kernel_order: usize,
        kernel_in_phi: bool,
        census_agrees: bool,
    },
    Unavailable {
        reason: String,
    },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Certificate {
    pub mode: CertificateMode,
    pub max_index_exponent: u32,
    pub precision: u32,
    pub evidence: Vec<Evidence>,
}

/// `(index exponent, d) -> count`.
pub type Census = BTreeMap<(u32, u32), usize>;

pub fn census(records: &[SubgroupRecord]) -> Census {
    let mut c = Census::new();
    for r in records {
        *c.entry((r.index_exponent, r.d)).or_insert(0) += 1;
    }
    c
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BuildOptions {
    /// Element cap for each materialized quotient.
    pub budget: usize,
    /// Fixed precision instead of escalation.
    pub precision: Option<u32>,
}

impl Default for BuildOptions {
    fn default() -> BuildOptions {
        BuildOptions {
            budget: DEFAULT_BUDGET,
            precision: None,
        }
    }
}

impl BuildOptions {
    pub fn id_budget(&self) -> usize {
        self.budget.saturating_mul(32)
    }
}

#[derive(Clone, Debug)]
pub struct BuiltGroup {
    pub spec: GroupSpec,
    pub quotient: Arc<FiniteGroup>,
    pub certificate: Certificate,
    records: Option<Vec<SubgroupRecord>>,
}

impl BuiltGroup {
    /// Enumerated subgroups up to the certified index.
    pub fn subgroups(&self, options: &BuildOptions) -> Result<Vec<SubgroupRecord>> {
        if let Some(r) = &self.records {
            return Ok(r.clone());
        }
        Ok(all_subgroups_up_to_index(
            &self.quotient,
            self.certificate.max_index_exponent,
            options.id_budget(),
        )?)
    }
}

fn symbolic_evidence(split: &Split, k: u32, m: u32) -> Result<Evidence> {
    let ring_k = Ring::new(split.p, k)?;
    let kernel_top_exponent = match &split.top {
        Top::None => None,
        Top::Procyclic(t) => {
            let ord = matrix_order_mod(&RMatrix::from_rows(ring_k, t)?)?;
            Some(k.max(ord.exponent))
        }
        Top::Torsion { action, order } => {
            let ord = matrix_order_mod(&RMatrix::from_rows(ring_k, action)?)?;
            if ord.value() == Some(*order as u128) {
                None
            } else {
                Some(ord.exponent)
            }
        }
    };
    let precision = (m + 3).max(k + 1);
    let series = symbolic_series_at(split, Ring::new(split.p, precision)?, m + 1)?;
    let last = series.last().expect("nonempty series");
    let top_contained = match (kernel_top_exponent, last.top_exponent) {
        (None, _) => true,
        (Some(_), None) => false,
        (Some(e), Some(f)) => e >= f,
    };
    let pk = last.lattice.ring().p_power(k);
    let lattice_contained = (0..split.rank).all(|i| {
        let mut v = vec![0; split.rank];
        v[i] = pk;
        last.lattice.contains_vector(&v)
    });
    Ok(Evidence::Symbolic {
        kernel_top_exponent,
        phi_top_exponent: last.top_exponent,
        phi_lattice_pivots: last.lattice.pivots().to_vec(),
        top_contained,
        lattice_contained,
    })
}

/// Kernel check against the next precision level; also returns the census
/// records at level `k`.
fn kernel_evidence(
    spec: &GroupSpec,
    quotient: &Arc<FiniteGroup>,
    k: u32,
    m: u32,
    options: &BuildOptions,
) -> Result<(Evidence, Option<Vec<SubgroupRecord>>)> {
    let upper = match spec.quotient(k + 1, options.budget) {
        Ok(q) => Arc::new(q),
        Err(CatalogError::Group(GroupError::BudgetExceeded(b))) => {
            return Ok((
                Evidence::Unavailable {
                    reason: format!("level {} quotient exceeds the budget of {b}", k + 1),
                },
                None,
            ))
        }
        Err(e) => return Err(e),
    };
    let lower_ring = quotient.ring();
    let phi = frattini_series(&upper, m + 1).pop().expect("nonempty series");
    let kernel: Vec<u32> = (0..upper.order() as u32)
        .filter(|&id| upper.element(id).reduce_to(lower_ring).is_identity())
        .collect();
    let kernel_in_phi = kernel.iter().all(|&x| phi.contains(x));
    let mut census_agrees = false;
    let mut records = None;
    if kernel_in_phi {
        let lower = all_subgroups_up_to_index(quotient, m, options.id_budget())?;
        let higher = all_subgroups_up_to_index(&upper, m, options.id_budget())?;
        census_agrees = census(&lower) == census(&higher);
        records = Some(lower);
    }
    Ok((
        Evidence::KernelCheck {
            levels: (k, k + 1),
            kernel_order: kernel.len(),
            kernel_in_phi,
            census_agrees,
        },
        records,
    ))
}

fn certify_quotient(
    spec: &GroupSpec,
    quotient: &Arc<FiniteGroup>,
    k: u32,
    m: u32,
    options: &BuildOptions,
) -> Result<(Certificate, Option<Vec<SubgroupRecord>>)> {
    let mut evidence = Vec::new();
    if let Some(split) = spec.split() {
        let ev = symbolic_evidence(&split, k, m)?;
        let exact = matches!(
            ev,
            Evidence::Symbolic {
                top_contained: true,
                lattice_contained: true,
                ..
            }
        );
        evidence.push(ev);
        if exact {
            return Ok((
                Certificate {
                    mode: CertificateMode::Exact,
                    max_index_exponent: m,
                    precision: k,
                    evidence,
                },
                None,
            ));
        }
    }
    let (ev, records) = kernel_evidence(spec, quotient, k, m, options)?;
    let heuristic = matches!(
        ev,
        Evidence::KernelCheck {
            kernel_in_phi: true,
            census_agrees: true,
            ..
        }
    );
    evidence.push(ev);
    let mode = if heuristic {
        CertificateMode::Heuristic
    } else {
        CertificateMode::Failed
    };
    Ok((
        Certificate {
            mode,
            max_index_exponent: m,
            precision: k,
            evidence,
        },
        records.filter(|_| heuristic),
    ))
}

/// Certificate for the quotient of `spec` at precision `k`, valid up to index `p^m`.
pub fn certify(spec: &GroupSpec, k: u32, m: u32, options: &BuildOptions) -> Result<Certificate> {
    let quotient = Arc::new(spec.quotient(k, options.budget)?);
    Ok(certify_quotient(spec, &quotient, k, m, options)?.0)
}

/// Quotient plus certificate, escalating precision from `m + 1` to `m + 4`.
pub fn build(spec: &GroupSpec, m: u32, options: &BuildOptions) -> Result<BuiltGroup> {
    spec.validate()?;
    let range = match options.precision {
        Some(k) => k..=k,
        None => (m + 1)..=(m + 4),
    };
    let mut last_reason = String::from("no precision tried");
    for k in range {
        let quotient = Arc::new(spec.quotient(k, options.budget)?);
        let (certificate, records) = certify_quotient(spec, &quotient, k, m, options)?;
        if certificate.mode != CertificateMode::Failed {
            return Ok(BuiltGroup {
                spec: spec.clone(),
                quotient,
                certificate,
                records,
            });
        }
        last_reason = format!("certification failed at precision {k}: {:?}", certificate.evidence);
    }
    Err(CatalogError::CertificateUnavailable(last_reason))
}

/// Image in the quotient of a symbolic Frattini term.
pub fn symbolic_subgroup(built: &BuiltGroup, entry: &PhiSeriesEntry) -> Result<Subgroup> {
    let split = built.spec.split().ok_or(CatalogError::NotSplit)?;
    let q = &built.quotient;
    let ring = q.ring();
    let off = split.offset();
    let dim = q.dim();
    let mut gens = Vec::new();
    if let Some(e) = entry.top_exponent {
        let top = q.generator_ids()[0];
        gens.push(q.pow(top, split.p.pow(e)));
    }
    for col in entry.lattice.basis() {
        let mut v = vec![0i64; dim];
        for (i, &x) in col.iter().enumerate() {
            v[off + i] = (x % ring.modulus()) as i64;
        }
        let t = AffineElement::translation(ring, &v);
        gens.push(q.id_of(&t).ok_or(GroupError::NotInGroup)?);
    }
    Ok(subgroup_closure(q, &gens))
}

/// Built-in specs for the catalog listing.
pub fn builtin_catalog() -> Vec<(String, GroupSpec)> {
    let mut out = Vec::new();
    let f = |item, params| family(item, params).expect("built-in parameters are valid");
    for (p, d) in [(2, 2), (2, 3), (3, 2), (3, 3), (5, 2)] {
        out.push((format!("family1-p{p}-d{d}"), f(1, FamilyParams::new(p, d))));
    }
    for (p, d, s, sign) in [
        (3, 2, 1, Sign::Plus),
        (3, 3, 1, Sign::Plus),
        (5, 2, 1, Sign::Plus),
        (2, 2, 2, Sign::Plus),
        (2, 2, 2, Sign::Minus),
        (2, 3, 2, Sign::Minus),
    ] {
        let tag = if sign == Sign::Plus { "+" } else { "-" };
        out.push((
            format!("family2-p{p}-d{d}-s{s}{tag}"),
            f(2, FamilyParams::new(p, d).with_s(s, sign)),
        ));
    }
    out.push(("family3".into(), f(3, FamilyParams::new(3, 2))));
    for d in [2, 3] {
        out.push((format!("family4-d{d}"), f(4, FamilyParams::new(2, d))));
    }
    let m = |k, d| mutant(k, d).expect("built-in mutant");
    out.push(("mutant-diagonal-flip".into(), m(MutantKind::DiagonalFlip, 3)));
    out.push(("mutant-swap".into(), m(MutantKind::Swap, 3)));
    out.push(("mutant-swap-negate".into(), m(MutantKind::SwapNegate, 2)));
    out.push(("mutant-torsion".into(), m(MutantKind::TorsionMinusOne, 2)));
    out.push(("mutant-omega-twist".into(), m(MutantKind::OmegaTwist, 0)));
    out.push(("mutant-klein-four".into(), m(MutantKind::KleinFour, 3)));
    out.push(("mutant-unipotent".into(), unipotent_mutant()));
    out.push(("mutant-nonscalar".into(), nonscalar_mutant()));
    out
}
