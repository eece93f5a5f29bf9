//! Checks over certified quotients: constant generating number, the classes
//! `E_n`, Schreier defects, d-profiles, and the shape oracle for specs.

use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::catalog::{
    census, BuildOptions, BuiltGroup, CatalogError, CertificateMode, CustomShape, GroupSpec,
    IntAffine,
};
use crate::padic::ScalarForm;
use crate::pgroup::{dmin, subgroup_closure, FiniteGroup, GroupError, SubgroupRecord};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum VerifyError {
    #[error("certificate unavailable: {0}")]
    CertificateUnavailable(String),
    #[error(transparent)]
    Catalog(#[from] CatalogError),
    #[error(transparent)]
    Group(#[from] GroupError),
}

pub type Result<T> = std::result::Result<T, VerifyError>;

/// A built quotient together with its subgroup enumeration.
#[derive(Clone, Debug)]
pub struct CertifiedQuotient {
    pub built: BuiltGroup,
    pub records: Vec<SubgroupRecord>,
}

impl CertifiedQuotient {
    pub fn new(built: BuiltGroup, options: &BuildOptions) -> Result<CertifiedQuotient> {
        if built.certificate.mode == CertificateMode::Failed {
            return Err(VerifyError::CertificateUnavailable(
                "certificate mode is failed".into(),
            ));
        }
        let records = built.subgroups(options)?;
        Ok(CertifiedQuotient { built, records })
    }

    pub fn p(&self) -> u64 {
        self.built.quotient.p()
    }

    pub fn mode(&self) -> CertificateMode {
        self.built.certificate.mode
    }

    /// `d` of the whole quotient.
    pub fn d(&self) -> u32 {
        self.records[0].d
    }

    fn upto(&self, m: u32) -> Result<impl Iterator<Item = &SubgroupRecord>> {
        let certified = self.built.certificate.max_index_exponent;
        if self.mode() == CertificateMode::Failed || m > certified {
            return Err(VerifyError::CertificateUnavailable(format!(
                "requested index exponent {m}, certified up to {certified}"
            )));
        }
        Ok(self.records.iter().filter(move |r| r.index_exponent <= m))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    Pass,
    Witness,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Witness {
    pub index_exponent: u32,
    pub index: u64,
    pub d_found: u32,
    pub d_expected: i64,
    /// Generators as signed integer lifts; they re-verify in the quotient.
    pub generators: Vec<IntAffine>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Verdict {
    pub outcome: Outcome,
    pub witness: Option<Witness>,
    pub certificate: CertificateMode,
    pub max_index_exponent: u32,
}

fn witness_of(record: &SubgroupRecord, p: u64, d_expected: i64) -> Witness {
    let generators = record
        .subgroup
        .generator_elements()
        .iter()
        .map(|g| {
            let (matrix, shift) = g.to_signed();
            IntAffine { matrix, shift }
        })
        .collect();
    Witness {
        index_exponent: record.index_exponent,
        index: p.pow(record.index_exponent),
        d_found: record.d,
        d_expected,
        generators,
    }
}

fn verdict(cq: &CertifiedQuotient, m: u32, witness: Option<Witness>) -> Verdict {
    Verdict {
        outcome: if witness.is_some() {
            Outcome::Witness
        } else {
            Outcome::Pass
        },
        witness,
        certificate: cq.mode(),
        max_index_exponent: m,
    }
}

/// `d(H) = d_expected` for every subgroup of index at most `p^m`.  The first
/// violation in (index, id set) order is the witness.
pub fn star_check(cq: &CertifiedQuotient, m: u32, d_expected: u32) -> Result<Verdict> {
    let p = cq.p();
    let witness = cq
        .upto(m)?
        .find(|r| r.d != d_expected)
        .map(|r| witness_of(r, p, d_expected as i64));
    Ok(verdict(cq, m, witness))
}

/// `d(H) - n = |G:H| (d(G) - n)` for every subgroup of index at most `p^m`.
pub fn en_check(cq: &CertifiedQuotient, m: u32, n: u32) -> Result<Verdict> {
    let p = cq.p() as i128;
    let dg = cq.d() as i128;
    let n = n as i128;
    let witness = cq
        .upto(m)?
        .find(|r| r.d as i128 - n != p.pow(r.index_exponent) * (dg - n))
        .map(|r| {
            let expected = n + p.pow(r.index_exponent) * (dg - n);
            witness_of(r, cq.p(), expected as i64)
        });
    Ok(verdict(cq, m, witness))
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SchreierRow {
    pub index_exponent: u32,
    pub index: u64,
    pub d: u32,
    /// `d(H) - 1`
    pub lhs: i64,
    /// `|G:H| (d(G) - 1)`
    pub rhs: i64,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SchreierReport {
    pub rows: Vec<SchreierRow>,
    /// Every row balances.
    pub free_like: bool,
}

pub fn schreier_defect_report(cq: &CertifiedQuotient, m: u32) -> Result<SchreierReport> {
    let p = cq.p() as i128;
    let dg = cq.d() as i128;
    let rows: Vec<SchreierRow> = cq
        .upto(m)?
        .map(|r| SchreierRow {
            index_exponent: r.index_exponent,
            index: p.pow(r.index_exponent) as u64,
            d: r.d,
            lhs: r.d as i64 - 1,
            rhs: (p.pow(r.index_exponent) * (dg - 1)) as i64,
        })
        .collect();
    let free_like = rows.iter().all(|r| r.lhs == r.rhs);
    Ok(SchreierReport { rows, free_like })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProfileEntry {
    pub index: u64,
    pub index_exponent: u32,
    pub d: u32,
    pub count: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DProfile {
    pub entries: Vec<ProfileEntry>,
}

pub fn d_profile(cq: &CertifiedQuotient, m: u32) -> Result<DProfile> {
    let p = cq.p();
    let records: Vec<SubgroupRecord> = cq.upto(m)?.cloned().collect();
    let entries = census(&records)
        .into_iter()
        .map(|((i, d), count)| ProfileEntry {
            index: p.pow(i),
            index_exponent: i,
            d,
            count,
        })
        .collect();
    Ok(DProfile { entries })
}

/// Recompute index and `d` from the witness generators.
pub fn reverify(group: &Arc<FiniteGroup>, witness: &Witness) -> bool {
    let ring = group.ring();
    let mut ids = Vec::with_capacity(witness.generators.len());
    for g in &witness.generators {
        let Ok(e) = crate::pgroup::AffineElement::from_integers(ring, &g.matrix, &g.shift) else {
            return false;
        };
        let Some(id) = group.id_of(&e) else {
            return false;
        };
        ids.push(id);
    }
    let s = subgroup_closure(group, &ids);
    s.index_exponent() == witness.index_exponent && dmin(&s) == witness.d_found
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "answer", rename_all = "snake_case")]
pub enum OracleAnswer {
    Listed {
        item: u32,
        d: u32,
        form: Option<ScalarForm>,
    },
    NotListed {
        reason: String,
    },
    Unknown,
}

fn listed_scalar(p: u64, d: u32, lambda: i64) -> OracleAnswer {
    match ScalarForm::of_integer(p, lambda) {
        Ok(ScalarForm::Trivial) => OracleAnswer::Listed {
            item: 1,
            d,
            form: None,
        },
        Ok(form @ (ScalarForm::Plus(_) | ScalarForm::Minus(_))) => OracleAnswer::Listed {
            item: 2,
            d,
            form: Some(form),
        },
        Ok(ScalarForm::MinusOne) => OracleAnswer::Listed {
            item: 4,
            d,
            form: Some(ScalarForm::MinusOne),
        },
        Err(_) => OracleAnswer::NotListed {
            reason: "scalar does not define a continuous action".into(),
        },
    }
}

/// Rank over `Q` of a list of integer vectors.
fn integer_rank(rows: &[Vec<i64>]) -> usize {
    let mut m: Vec<Vec<i128>> = rows
        .iter()
        .map(|r| r.iter().map(|&x| x as i128).collect())
        .collect();
    let cols = m.first().map_or(0, |r| r.len());
    let mut rank = 0;
    for c in 0..cols {
        let Some(piv) = (rank..m.len()).find(|&i| m[i][c] != 0) else {
            continue;
        };
        m.swap(rank, piv);
        for i in rank + 1..m.len() {
            let (a, b) = (m[rank][c], m[i][c]);
            if b != 0 {
                let g = gcd(a, b);
                let (fa, fb) = (b / g, a / g);
                for j in 0..cols {
                    m[i][j] = m[i][j] * fb - m[rank][j] * fa;
                }
                let row_gcd = m[i].iter().fold(0, |acc, &x| gcd(acc, x));
                if row_gcd > 1 {
                    m[i].iter_mut().for_each(|x| *x /= row_gcd);
                }
            }
        }
        rank += 1;
    }
    rank
}

fn gcd(a: i128, b: i128) -> i128 {
    let (mut a, mut b) = (a.abs(), b.abs());
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// Shape classifier over specs; never searches for isomorphisms.
pub fn theorem_oracle(spec: &GroupSpec) -> OracleAnswer {
    match spec {
        GroupSpec::Abelian { d, .. } => OracleAnswer::Listed {
            item: 1,
            d: *d,
            form: None,
        },
        GroupSpec::ScalarSplit { p, d, lambda } => listed_scalar(*p, *d, *lambda),
        GroupSpec::MatrixSplit { p, action } => {
            let n = action.len();
            let lambda = action[0][0];
            let is_scalar = (0..n).all(|i| {
                (0..n).all(|j| action[i][j] == if i == j { lambda } else { 0 })
            });
            if is_scalar {
                listed_scalar(*p, n as u32 + 1, lambda)
            } else {
                OracleAnswer::NotListed {
                    reason: "top acts through a non-scalar matrix".into(),
                }
            }
        }
        GroupSpec::MaxClass3 => OracleAnswer::Listed {
            item: 3,
            d: 2,
            form: None,
        },
        GroupSpec::TorsionScalar { .. } => OracleAnswer::NotListed {
            reason: "torsion top acting by a scalar".into(),
        },
        GroupSpec::CustomAffine {
            dim,
            generators,
            shape,
            ..
        } => match shape {
            CustomShape::Mutant(kind) => OracleAnswer::NotListed {
                reason: format!("mutant shape {kind:?}"),
            },
            CustomShape::Opaque => {
                let id: Vec<Vec<i64>> = (0..*dim)
                    .map(|i| (0..*dim).map(|j| i64::from(i == j)).collect())
                    .collect();
                if generators.iter().all(|g| g.matrix == id) {
                    let shifts: Vec<Vec<i64>> = generators.iter().map(|g| g.shift.clone()).collect();
                    OracleAnswer::Listed {
                        item: 1,
                        d: integer_rank(&shifts) as u32,
                        form: None,
                    }
                } else {
                    OracleAnswer::Unknown
                }
            }
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::{build, family, mutant, unipotent_mutant, FamilyParams, MutantKind, Sign};

    fn certified(spec: &GroupSpec, m: u32) -> CertifiedQuotient {
        let opts = BuildOptions::default();
        CertifiedQuotient::new(build(spec, m, &opts).unwrap(), &opts).unwrap()
    }

    #[test]
    fn star_examples() {
        let ab = certified(&family(1, FamilyParams::new(5, 2)).unwrap(), 2);
        assert_eq!(star_check(&ab, 2, 2).unwrap().outcome, Outcome::Pass);

        let tor = certified(
            &GroupSpec::TorsionScalar {
                p: 2,
                rank: 2,
                lambda: -1,
            },
            1,
        );
        let v = star_check(&tor, 1, tor.d()).unwrap();
        let w = v.witness.unwrap();
        assert_eq!((w.index, w.d_found, w.d_expected), (2, 2, 3));
        assert!(reverify(&tor.built.quotient, &w));

        let uni = certified(&unipotent_mutant(), 1);
        let w = star_check(&uni, 1, uni.d()).unwrap().witness.unwrap();
        assert_eq!((w.index, w.d_found, w.d_expected), (5, 2, 3));
    }

    #[test]
    fn en_examples() {
        let ab = certified(&family(1, FamilyParams::new(3, 3)).unwrap(), 2);
        assert_eq!(en_check(&ab, 2, 3).unwrap().outcome, Outcome::Pass);
        let f2 = certified(&family(2, FamilyParams::new(3, 2)).unwrap(), 2);
        assert_eq!(en_check(&f2, 2, 2).unwrap().outcome, Outcome::Pass);
        assert_eq!(en_check(&f2, 1, 1).unwrap().outcome, Outcome::Witness);
    }

    #[test]
    fn schreier_examples() {
        let zp = certified(&family(1, FamilyParams::new(2, 1)).unwrap(), 2);
        let rep = schreier_defect_report(&zp, 2).unwrap();
        assert!(rep.free_like);
        assert!(rep.rows.iter().all(|r| r.lhs == 0 && r.rhs == 0));

        let z5 = certified(&family(1, FamilyParams::new(5, 2)).unwrap(), 1);
        let rep = schreier_defect_report(&z5, 1).unwrap();
        assert!(!rep.free_like);
        assert!(rep.rows[1..].iter().all(|r| r.lhs == 1 && r.rhs == 5));

        let mc = certified(&GroupSpec::MaxClass3, 1);
        let rep = schreier_defect_report(&mc, 1).unwrap();
        assert!(rep.rows[1..].iter().all(|r| r.lhs == 1 && r.rhs == 3));
    }

    #[test]
    fn profile_examples() {
        let mc = certified(&GroupSpec::MaxClass3, 1);
        let prof: Vec<_> = d_profile(&mc, 1)
            .unwrap()
            .entries
            .iter()
            .map(|e| (e.index, e.d, e.count))
            .collect();
        assert_eq!(prof, vec![(1, 2, 1), (3, 2, 4)]);
    }

    #[test]
    fn oracle_examples() {
        assert_eq!(
            theorem_oracle(&GroupSpec::ScalarSplit {
                p: 2,
                d: 3,
                lambda: 3
            }),
            OracleAnswer::Listed {
                item: 2,
                d: 3,
                form: Some(ScalarForm::Minus(2))
            }
        );
        assert!(matches!(
            theorem_oracle(&GroupSpec::MaxClass3),
            OracleAnswer::Listed { item: 3, .. }
        ));
        let diag = |b| GroupSpec::MatrixSplit {
            p: 3,
            action: vec![vec![4, 0], vec![0, b]],
        };
        assert!(matches!(
            theorem_oracle(&diag(4)),
            OracleAnswer::Listed { item: 2, .. }
        ));
        assert!(matches!(
            theorem_oracle(&diag(10)),
            OracleAnswer::NotListed { .. }
        ));
        assert!(matches!(
            theorem_oracle(&mutant(MutantKind::KleinFour, 3).unwrap()),
            OracleAnswer::NotListed { .. }
        ));
        assert!(matches!(
            theorem_oracle(&family(4, FamilyParams::new(2, 2).with_s(2, Sign::Plus)).unwrap()),
            OracleAnswer::Listed { item: 4, .. }
        ));
    }

    #[test]
    fn oracle_on_opaque_customs() {
        let trans = GroupSpec::CustomAffine {
            p: 3,
            dim: 2,
            generators: vec![
                IntAffine::translation(vec![1, 2]),
                IntAffine::translation(vec![2, 4]),
            ],
            shape: CustomShape::Opaque,
        };
        assert_eq!(
            theorem_oracle(&trans),
            OracleAnswer::Listed {
                item: 1,
                d: 1,
                form: None
            }
        );
        let opaque = GroupSpec::CustomAffine {
            p: 2,
            dim: 1,
            generators: vec![IntAffine::linear(vec![vec![-1]])],
            shape: CustomShape::Opaque,
        };
        assert_eq!(theorem_oracle(&opaque), OracleAnswer::Unknown);
    }

    #[test]
    fn requesting_beyond_certificate_is_refused() {
        let ab = certified(&family(1, FamilyParams::new(2, 2)).unwrap(), 1);
        assert!(matches!(
            star_check(&ab, 2, 2),
            Err(VerifyError::CertificateUnavailable(_))
        ));
    }
}
