//! Report schema and its text rendering.

use std::fmt::Write as _;

use constgen::catalog::{Certificate, GroupSpec};
use constgen::lielattice::LatticeVerdict;
use constgen::repdecomp::DecompositionCounts;
use constgen::verify::{Outcome, ProfileEntry, SchreierReport, Verdict};
use serde::{Deserialize, Serialize};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Version {
    pub schema: u32,
    pub tool: String,
}

impl Default for Version {
    fn default() -> Version {
        Version {
            schema: SCHEMA_VERSION,
            tool: env!("CARGO_PKG_VERSION").into(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpecEcho {
    pub text: String,
    pub group: GroupSpec,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CertificateEntry {
    pub group: usize,
    pub certificate: Certificate,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TableRow {
    pub n1: u32,
    pub n2: u32,
    pub n3: u32,
    pub dim: u64,
    pub label: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ResultEntry {
    Star {
        group: usize,
        verdict: Verdict,
    },
    En {
        group: usize,
        n: u32,
        verdict: Verdict,
    },
    Schreier {
        group: usize,
        report: SchreierReport,
    },
    Unavailable {
        group: usize,
        reason: String,
    },
    Decompose {
        counts: DecompositionCounts,
        rational_d: u32,
        inequality_holds: bool,
        label: Option<String>,
    },
    Table1 {
        p: u64,
        max_dim: u64,
        rows: Vec<TableRow>,
    },
    Lattice {
        shape: String,
        p: u64,
        dim: usize,
        s: Option<u32>,
        d: u32,
        verdict: LatticeVerdict,
    },
    Catalog {
        name: String,
        text: String,
        group: GroupSpec,
    },
    Recheck {
        group: usize,
        index_exponent: u32,
        reverified: bool,
    },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProfileBlock {
    pub group: usize,
    pub entries: Vec<ProfileEntry>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Timing {
    pub total_ms: u64,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Report {
    pub version: Version,
    pub spec: Vec<SpecEcho>,
    pub certificate: Vec<CertificateEntry>,
    pub results: Vec<ResultEntry>,
    pub profile: Vec<ProfileBlock>,
    pub timing: Option<Timing>,
}

impl Report {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        writeln!(s, "constgen {} (report schema {})", self.version.tool, self.version.schema).unwrap();
        for (i, g) in self.spec.iter().enumerate() {
            writeln!(s, "group {i}: {}", g.text).unwrap();
        }
        for c in &self.certificate {
            writeln!(
                s,
                "certificate {}: {:?} at precision {} up to index p^{}",
                c.group, c.certificate.mode, c.certificate.precision, c.certificate.max_index_exponent
            )
            .unwrap();
        }
        for r in &self.results {
            render_result(&mut s, r);
        }
        for b in &self.profile {
            for e in &b.entries {
                writeln!(s, "profile {}: index {} d {} count {}", b.group, e.index, e.d, e.count).unwrap();
            }
        }
        if let Some(t) = &self.timing {
            writeln!(s, "time: {} ms", t.total_ms).unwrap();
        }
        s
    }
}

fn verdict_text(v: &Verdict) -> String {
    match (&v.outcome, &v.witness) {
        (Outcome::Witness, Some(w)) => format!(
            "witness at index {} with d = {} (expected {})",
            w.index, w.d_found, w.d_expected
        ),
        _ => format!("pass up to index p^{}", v.max_index_exponent),
    }
}

fn render_result(s: &mut String, r: &ResultEntry) {
    let line = match r {
        ResultEntry::Star { group, verdict } => format!("star {group}: {}", verdict_text(verdict)),
        ResultEntry::En { group, n, verdict } => format!("en(n = {n}) {group}: {}", verdict_text(verdict)),
        ResultEntry::Schreier { group, report } => {
            let mut t = format!("schreier {group}: free-like = {}", report.free_like);
            for row in &report.rows {
                write!(t, "\n  index {} d {}: {} vs {}", row.index, row.d, row.lhs, row.rhs).unwrap();
            }
            t
        }
        ResultEntry::Unavailable { group, reason } => format!("unavailable {group}: {reason}"),
        ResultEntry::Decompose {
            counts,
            rational_d,
            inequality_holds,
            label,
        } => format!(
            "decompose p={}: n1={} n2={} n3={} rational d={} inequality {} label {}",
            counts.p,
            counts.n1,
            counts.n2,
            counts.n3,
            rational_d,
            if *inequality_holds { "holds" } else { "fails" },
            label.as_deref().unwrap_or("-")
        ),
        ResultEntry::Table1 { p, max_dim, rows } => {
            let mut t = format!("table p={p} up to dimension {max_dim}: {} rows", rows.len());
            for row in rows {
                write!(
                    t,
                    "\n  n1={} n2={} n3={} dim={} {}",
                    row.n1,
                    row.n2,
                    row.n3,
                    row.dim,
                    row.label.as_deref().unwrap_or("-")
                )
                .unwrap();
            }
            t
        }
        ResultEntry::Lattice {
            shape, p, dim, d, verdict, ..
        } => match &verdict.witness {
            Some(w) => format!(
                "lattice {shape} p={p} dim={dim} d={d}: witness at index {} with d = {}",
                w.index, w.d_found
            ),
            None => format!(
                "lattice {shape} p={p} dim={dim} d={d}: pass up to index p^{}",
                verdict.max_index_exponent
            ),
        },
        ResultEntry::Catalog { name, text, .. } => format!("{name}: {text}"),
        ResultEntry::Recheck {
            group,
            index_exponent,
            reverified,
        } => format!("recheck {group}: witness at index p^{index_exponent} reverified = {reverified}"),
    };
    s.push_str(&line);
    s.push('\n');
}
