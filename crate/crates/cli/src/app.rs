//! Command dispatch and exit-code policy.

use std::path::PathBuf;
use std::sync::Arc;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use constgen::catalog::{build, builtin_catalog, BuildOptions, CatalogError, GroupSpec};
use constgen::lielattice::{lattice_dmin, star_check_lattice, LieError, LieLattice};
use constgen::pgroup::GroupError;
use constgen::repdecomp::{
    decompose, inequality_check, rational_d, synth_instance, table1, table1_label, CpLattice,
    DecompositionCounts,
};
use constgen::verify::{
    d_profile, en_check, reverify, schreier_defect_report, star_check, CertifiedQuotient, Outcome,
    VerifyError,
};
use thiserror::Error;

use crate::grammar::{self, parse_spec, Params, Precision, SpecDocument};
use crate::report::{
    CertificateEntry, ProfileBlock, Report, ResultEntry, SpecEcho, TableRow, Timing,
};

pub const EXIT_PASS: i32 = 0;
pub const EXIT_WITNESS: i32 = 1;
pub const EXIT_UNAVAILABLE: i32 = 2;
pub const EXIT_INPUT: i32 = 3;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Parse(#[from] grammar::ParseError),
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("invalid input: {0}")]
    Input(String),
    #[error("certificate unavailable: {0}")]
    Unavailable(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Unavailable(_) => EXIT_UNAVAILABLE,
            _ => EXIT_INPUT,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, ValueEnum)]
pub enum Format {
    #[default]
    Json,
    Text,
}

#[derive(Debug, Parser)]
#[command(name = "constgen", version, about = "Generator-number verification for pro-p groups")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub flags: Flags,
}

#[derive(Debug, Args, Default)]
pub struct Flags {
    /// Check subgroups of index up to p^m.
    #[arg(long, global = true, value_name = "m")]
    pub max_index: Option<u32>,
    /// `auto` or a fixed precision K.
    #[arg(long, global = true, value_name = "auto|K")]
    pub precision: Option<String>,
    /// Element cap for each materialized quotient.
    #[arg(long, global = true, value_name = "elements")]
    pub budget: Option<usize>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[arg(long, global = true, value_enum, default_value = "json")]
    pub format: Format,
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Record wall-clock time; reports are then no longer reproducible.
    #[arg(long, global = true)]
    pub timing: bool,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run a check over every group of a spec.
    Verify {
        #[command(subcommand)]
        check: Check,
    },
    /// Count subgroups by index and generator number.
    Profile { spec: String },
    /// Decompose a C_p-lattice given by its action, or a synthesized one.
    Decompose {
        #[arg(long)]
        p: u64,
        /// Integer matrix such as `[[0, 1], [1, 0]]`.
        #[arg(long, conflicts_with = "counts")]
        action: Option<String>,
        /// `n1,n2,n3` for a seeded synthetic instance.
        #[arg(long)]
        counts: Option<String>,
    },
    /// Admissible decomposition types up to a dimension.
    Table1 {
        #[arg(long)]
        p: u64,
        #[arg(long)]
        max_dim: u64,
    },
    /// Generator-number check on a Lie lattice.
    Lattice {
        #[arg(long, value_enum)]
        shape: LatticeShape,
        #[arg(long)]
        p: u64,
        #[arg(long, default_value_t = 2)]
        dim: usize,
        #[arg(long, default_value_t = 1)]
        s: u32,
    },
    Catalog {
        #[command(subcommand)]
        action: CatalogAction,
    },
    /// Re-verify every witness in a JSON report.
    Recheck { report: PathBuf },
}

#[derive(Debug, Subcommand)]
pub enum Check {
    Star { spec: String },
    En {
        spec: String,
        /// Defaults to d(G).
        #[arg(long)]
        n: Option<u32>,
    },
    Schreier { spec: String },
}

#[derive(Debug, Subcommand)]
pub enum CatalogAction {
    List,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum LatticeShape {
    Abelian,
    XScalar,
    Unipotent,
}

/// A spec argument: a file path, or `builtin:NAME` from the catalog.
pub fn load_spec(arg: &str) -> Result<SpecDocument, CliError> {
    if let Some(name) = arg.strip_prefix("builtin:") {
        let (_, spec) = builtin_catalog()
            .into_iter()
            .find(|(n, _)| n == name)
            .ok_or_else(|| CliError::Input(format!("no built-in group named {name:?}")))?;
        return Ok(SpecDocument {
            groups: vec![spec],
            params: Params::default(),
        });
    }
    let text = std::fs::read_to_string(arg).map_err(|source| CliError::Io {
        path: arg.into(),
        source,
    })?;
    Ok(parse_spec(&text)?)
}

fn merge(flags: &Flags, mut params: Params) -> Result<Params, CliError> {
    if let Some(m) = flags.max_index {
        params.max_index = m;
    }
    if let Some(p) = &flags.precision {
        params.precision = match p.as_str() {
            "auto" => Precision::Auto,
            k => Precision::Fixed(
                k.parse()
                    .map_err(|_| CliError::Input(format!("precision must be auto or an integer, got {k:?}")))?,
            ),
        };
    }
    if let Some(b) = flags.budget {
        params.budget = b;
    }
    if let Some(s) = flags.seed {
        params.seed = s;
    }
    Ok(params)
}

fn options(params: &Params) -> BuildOptions {
    BuildOptions {
        budget: params.budget,
        precision: match params.precision {
            Precision::Auto => None,
            Precision::Fixed(k) => Some(k),
        },
    }
}

/// Build failures that mean the quotient could not be certified, as opposed
/// to malformed input.
fn unavailable(e: &CatalogError) -> bool {
    matches!(
        e,
        CatalogError::CertificateUnavailable(_) | CatalogError::Group(GroupError::BudgetExceeded(_))
    )
}

fn verify_unavailable(e: &VerifyError) -> bool {
    match e {
        VerifyError::CertificateUnavailable(_) => true,
        VerifyError::Catalog(c) => unavailable(c),
        VerifyError::Group(GroupError::BudgetExceeded(_)) => true,
        _ => false,
    }
}

fn echo(doc: &SpecDocument) -> Vec<SpecEcho> {
    doc.groups
        .iter()
        .map(|g| SpecEcho {
            text: grammar::print_group(g),
            group: g.clone(),
        })
        .collect()
}

#[derive(Clone, Copy)]
enum GroupCheck {
    Star,
    En(Option<u32>),
    Schreier,
    Profile,
}

fn run_groups(doc: &SpecDocument, params: &Params, check: GroupCheck) -> Result<(Report, i32), CliError> {
    let opts = options(params);
    let m = params.max_index;
    let mut report = Report {
        spec: echo(doc),
        ..Report::default()
    };
    let mut code = EXIT_PASS;
    for (i, spec) in doc.groups.iter().enumerate() {
        let cq = build(spec, m, &opts)
            .map_err(VerifyError::from)
            .and_then(|b| CertifiedQuotient::new(b, &opts));
        let cq = match cq {
            Ok(cq) => cq,
            Err(e) if verify_unavailable(&e) => {
                report.results.push(ResultEntry::Unavailable {
                    group: i,
                    reason: e.to_string(),
                });
                code = code.max(EXIT_UNAVAILABLE);
                continue;
            }
            Err(e) => return Err(CliError::Input(e.to_string())),
        };
        report.certificate.push(CertificateEntry {
            group: i,
            certificate: cq.built.certificate.clone(),
        });
        let failed = |e: VerifyError| CliError::Unavailable(e.to_string());
        match check {
            GroupCheck::Star => {
                let verdict = star_check(&cq, m, cq.d()).map_err(failed)?;
                if verdict.outcome == Outcome::Witness {
                    code = code.max(EXIT_WITNESS);
                }
                report.results.push(ResultEntry::Star { group: i, verdict });
            }
            GroupCheck::En(n) => {
                let n = n.unwrap_or(cq.d());
                let verdict = en_check(&cq, m, n).map_err(failed)?;
                if verdict.outcome == Outcome::Witness {
                    code = code.max(EXIT_WITNESS);
                }
                report.results.push(ResultEntry::En { group: i, n, verdict });
            }
            GroupCheck::Schreier => {
                let r = schreier_defect_report(&cq, m).map_err(failed)?;
                report.results.push(ResultEntry::Schreier { group: i, report: r });
            }
            GroupCheck::Profile => {
                let p = d_profile(&cq, m).map_err(failed)?;
                report.profile.push(ProfileBlock {
                    group: i,
                    entries: p.entries,
                });
            }
        }
    }
    Ok((report, code))
}

fn parse_counts(p: u64, text: &str) -> Result<DecompositionCounts, CliError> {
    let parts: Vec<u32> = text
        .split(',')
        .map(|s| s.trim().parse())
        .collect::<Result<_, _>>()
        .map_err(|_| CliError::Input(format!("counts must be n1,n2,n3, got {text:?}")))?;
    match parts[..] {
        [n1, n2, n3] => Ok(DecompositionCounts::new(p, n1, n2, n3)),
        _ => Err(CliError::Input(format!("counts must be n1,n2,n3, got {text:?}"))),
    }
}

fn run_decompose(p: u64, action: &Option<String>, counts: &Option<String>, seed: u64) -> Result<Report, CliError> {
    let bad = |e: constgen::repdecomp::RepError| CliError::Input(e.to_string());
    let lattice = match (action, counts) {
        (Some(a), None) => CpLattice::new(p, grammar::parse_matrix(a)?).map_err(bad)?,
        (None, Some(c)) => synth_instance(&parse_counts(p, c)?, seed).map_err(bad)?,
        _ => return Err(CliError::Input("give exactly one of --action and --counts".into())),
    };
    let counts = decompose(&lattice).map_err(bad)?;
    Ok(Report {
        results: vec![ResultEntry::Decompose {
            counts,
            rational_d: rational_d(&counts),
            inequality_holds: inequality_check(&counts),
            label: table1_label(&counts).map(|l| l.to_string()),
        }],
        ..Report::default()
    })
}

fn run_table1(p: u64, max_dim: u64) -> Result<Report, CliError> {
    if !constgen::padic::is_prime(p) {
        return Err(CliError::Input(format!("{p} is not prime")));
    }
    let rows = table1(p, max_dim)
        .into_iter()
        .map(|r| TableRow {
            n1: r.counts.n1,
            n2: r.counts.n2,
            n3: r.counts.n3,
            dim: r.dim,
            label: r.label.map(|l| l.to_string()),
        })
        .collect();
    Ok(Report {
        results: vec![ResultEntry::Table1 { p, max_dim, rows }],
        ..Report::default()
    })
}

fn run_lattice(shape: LatticeShape, p: u64, dim: usize, s: u32, params: &Params) -> Result<(Report, i32), CliError> {
    let m = params.max_index;
    let k = match params.precision {
        Precision::Auto => m + 2,
        Precision::Fixed(k) => k,
    };
    let lie = |e: LieError| match e {
        LieError::InsufficientPrecision { .. } | LieError::BudgetExceeded(_) => CliError::Unavailable(e.to_string()),
        e => CliError::Input(e.to_string()),
    };
    let (l, name, s) = match shape {
        LatticeShape::Abelian => (LieLattice::abelian(p, k, dim).map_err(lie)?, "abelian", None),
        LatticeShape::XScalar => (LieLattice::x_scalar(p, k, dim, s).map_err(lie)?, "x-scalar", Some(s)),
        LatticeShape::Unipotent => (LieLattice::unipotent(p, k).map_err(lie)?, "unipotent", None),
    };
    let d = lattice_dmin(&l).map_err(lie)?;
    let verdict = star_check_lattice(&l, m, d).map_err(lie)?;
    let code = if verdict.outcome == Outcome::Witness {
        EXIT_WITNESS
    } else {
        EXIT_PASS
    };
    let report = Report {
        results: vec![ResultEntry::Lattice {
            shape: name.into(),
            p,
            dim: l.dim(),
            s,
            d,
            verdict,
        }],
        ..Report::default()
    };
    Ok((report, code))
}

fn run_catalog() -> Report {
    Report {
        results: builtin_catalog()
            .into_iter()
            .map(|(name, group)| ResultEntry::Catalog {
                name,
                text: grammar::print_group(&group),
                group,
            })
            .collect(),
        ..Report::default()
    }
}

fn run_recheck(path: &PathBuf, params: &Params) -> Result<(Report, i32), CliError> {
    let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let old: Report = serde_json::from_str(&text).map_err(|e| CliError::Input(format!("not a report: {e}")))?;
    let mut report = Report {
        spec: old.spec.clone(),
        ..Report::default()
    };
    let mut code = EXIT_PASS;
    for r in &old.results {
        let (group, verdict) = match r {
            ResultEntry::Star { group, verdict } | ResultEntry::En { group, verdict, .. } => (*group, verdict),
            _ => continue,
        };
        let Some(w) = &verdict.witness else { continue };
        let spec: &GroupSpec = &old
            .spec
            .get(group)
            .ok_or_else(|| CliError::Input(format!("report has no spec for group {group}")))?
            .group;
        let cert = old
            .certificate
            .iter()
            .find(|c| c.group == group)
            .ok_or_else(|| CliError::Input(format!("report has no certificate for group {group}")))?;
        let q = spec
            .quotient(cert.certificate.precision, params.budget)
            .map_err(|e| CliError::Unavailable(e.to_string()))?;
        let ok = reverify(&Arc::new(q), w);
        if !ok {
            code = EXIT_WITNESS;
        }
        report.results.push(ResultEntry::Recheck {
            group,
            index_exponent: w.index_exponent,
            reverified: ok,
        });
    }
    Ok((report, code))
}

/// Execute a parsed command line; the report and the exit code.
pub fn run(cli: &Cli) -> Result<(Report, i32), CliError> {
    let start = Instant::now();
    let flags = &cli.flags;
    let (mut report, code) = match &cli.command {
        Command::Verify { check } => {
            let (spec, kind) = match check {
                Check::Star { spec } => (spec, GroupCheck::Star),
                Check::En { spec, n } => (spec, GroupCheck::En(*n)),
                Check::Schreier { spec } => (spec, GroupCheck::Schreier),
            };
            let doc = load_spec(spec)?;
            let params = merge(flags, doc.params.clone())?;
            run_groups(&doc, &params, kind)?
        }
        Command::Profile { spec } => {
            let doc = load_spec(spec)?;
            let params = merge(flags, doc.params.clone())?;
            run_groups(&doc, &params, GroupCheck::Profile)?
        }
        Command::Decompose { p, action, counts } => {
            let params = merge(flags, Params::default())?;
            (run_decompose(*p, action, counts, params.seed)?, EXIT_PASS)
        }
        Command::Table1 { p, max_dim } => (run_table1(*p, *max_dim)?, EXIT_PASS),
        Command::Lattice { shape, p, dim, s } => {
            let params = merge(flags, Params::default())?;
            run_lattice(*shape, *p, *dim, *s, &params)?
        }
        Command::Catalog {
            action: CatalogAction::List,
        } => (run_catalog(), EXIT_PASS),
        Command::Recheck { report } => {
            let params = merge(flags, Params::default())?;
            run_recheck(report, &params)?
        }
    };
    if flags.timing {
        report.timing = Some(Timing {
            total_ms: start.elapsed().as_millis() as u64,
        });
    }
    Ok((report, code))
}

pub fn render(report: &Report, format: Format) -> String {
    match format {
        Format::Json => report.to_json(),
        Format::Text => report.to_text(),
    }
}
