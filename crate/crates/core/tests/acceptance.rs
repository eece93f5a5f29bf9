//! Acceptance gate: one PASS/FAIL line per criterion, nonzero exit on any FAIL.

mod common;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::sync::{Arc, OnceLock};
use std::time::{Duration, Instant};

use constgen::catalog::{
    build, census, family, mutant, symbolic_phi_series, symbolic_subgroup, unipotent_mutant,
    BuildOptions, CertificateMode, CustomShape, FamilyParams, GroupSpec, MutantKind, Sign,
};
use constgen::lielattice::{star_check_lattice, LieLattice};
use constgen::pgroup::{
    all_subgroups_up_to_index, dmin, frattini_series, maximal_subgroups, FiniteGroup, Subgroup,
    DEFAULT_BUDGET,
};
use constgen::repdecomp::{
    block_sum, conjugate, decompose, random_unimodular, synth_instance, table1, CpLattice,
    DecompositionCounts, Table1Label,
};
use constgen::verify::{
    en_check, reverify, schreier_defect_report, star_check, CertifiedQuotient, Outcome, Verdict,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Check = std::result::Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($arg:tt)*) => {
        if !$cond {
            return Err(format!($($arg)*));
        }
    };
}

struct Built {
    inst: common::Instance,
    cq: CertifiedQuotient,
    star: Verdict,
    elapsed: Duration,
}

fn positive() -> &'static Result<Vec<Built>, String> {
    static CELL: OnceLock<Result<Vec<Built>, String>> = OnceLock::new();
    CELL.get_or_init(|| {
        let opts = BuildOptions::default();
        common::positive_suite()
            .into_iter()
            .map(|inst| {
                let t = Instant::now();
                let built = build(&inst.spec, inst.m, &opts).map_err(|e| format!("{}: {e}", inst.name))?;
                let cq = CertifiedQuotient::new(built, &opts).map_err(|e| format!("{}: {e}", inst.name))?;
                let star = star_check(&cq, inst.m, inst.d).map_err(|e| format!("{}: {e}", inst.name))?;
                Ok(Built {
                    inst,
                    cq,
                    star,
                    elapsed: t.elapsed(),
                })
            })
            .collect()
    })
}

fn criterion_1() -> Check {
    let suite = positive().as_ref()?;
    let mut total = Duration::ZERO;
    for b in suite {
        let name = &b.inst.name;
        ensure!(b.cq.mode() == CertificateMode::Exact, "{name}: certificate {:?}", b.cq.mode());
        ensure!(b.star.outcome == Outcome::Pass, "{name}: witness {:?}", b.star.witness);
        ensure!(b.elapsed <= Duration::from_secs(120), "{name}: took {:?}", b.elapsed);
        total += b.elapsed;
    }
    ensure!(total <= Duration::from_secs(900), "suite took {total:?}");
    Ok(format!("{} instances, exact certificates, {:.1}s", suite.len(), total.as_secs_f64()))
}

fn criterion_2() -> Check {
    struct Case {
        tag: &'static str,
        spec: GroupSpec,
        m: u32,
        custom: bool,
        expect: fn(u32, &constgen::verify::Witness) -> bool,
    }
    let cases = [
        Case {
            tag: "(a) diagonal flip",
            spec: mutant(MutantKind::DiagonalFlip, 3).unwrap(),
            m: 2,
            custom: true,
            expect: |d, w| d == 3 && w.d_found == d - 1,
        },
        Case {
            tag: "(b) swap",
            spec: mutant(MutantKind::Swap, 3).unwrap(),
            m: 2,
            custom: true,
            expect: |d, w| d == 3 && w.d_found == d + 1,
        },
        Case {
            tag: "(c) torsion -1",
            spec: mutant(MutantKind::TorsionMinusOne, 2).unwrap(),
            m: 1,
            custom: true,
            expect: |_, w| w.index == 2,
        },
        Case {
            tag: "(d) omega twist",
            spec: mutant(MutantKind::OmegaTwist, 0).unwrap(),
            m: 1,
            custom: false,
            expect: |d, w| d == 3 && w.d_found == 2,
        },
        Case {
            tag: "(e) unipotent",
            spec: unipotent_mutant(),
            m: 1,
            custom: false,
            expect: |d, w| d == 3 && w.index == 5 && w.d_found == 2,
        },
    ];
    let opts = BuildOptions::default();
    let mut notes = Vec::new();
    for c in cases {
        if c.custom {
            ensure!(
                matches!(c.spec, GroupSpec::CustomAffine { shape: CustomShape::Mutant(_), .. }),
                "{}: not a custom affine build",
                c.tag
            );
        }
        let built = build(&c.spec, c.m, &opts).map_err(|e| format!("{}: {e}", c.tag))?;
        let cq = CertifiedQuotient::new(built, &opts).map_err(|e| format!("{}: {e}", c.tag))?;
        ensure!(
            matches!(cq.mode(), CertificateMode::Exact | CertificateMode::Heuristic),
            "{}: certificate {:?}",
            c.tag,
            cq.mode()
        );
        let d = cq.d();
        let v = star_check(&cq, c.m, d).map_err(|e| e.to_string())?;
        let w = v.witness.ok_or(format!("{}: no witness", c.tag))?;
        ensure!((c.expect)(d, &w), "{}: unexpected witness d(G)={d} {w:?}", c.tag);
        ensure!(reverify(&cq.built.quotient, &w), "{}: witness does not re-verify", c.tag);
        notes.push(format!("{} index {} d {} vs {}", c.tag, w.index, w.d_found, d));
    }
    Ok(notes.join("; "))
}

/// Inclusive range; `None` is unbounded.
type Span = (u32, Option<u32>);

/// Expected rows: label, n1 range, n2 range, fixed n3.
fn table_patterns(p: u64) -> Vec<(Table1Label, Span, Span, u32)> {
    use Table1Label::*;
    match p {
        2 => vec![
            (T21, (2, None), (0, Some(0)), 0),
            (T22, (2, None), (1, Some(1)), 0),
            (T23, (1, None), (0, Some(0)), 1),
            (T24, (0, Some(0)), (2, None), 0),
            (T25, (1, Some(1)), (1, None), 0),
            (T26, (0, Some(0)), (0, None), 1),
        ],
        3 => vec![(T31, (2, None), (0, Some(0)), 0), (T32, (0, Some(0)), (1, Some(1)), 0)],
        _ => vec![(Generic, (2, None), (0, Some(0)), 0)],
    }
}

fn expected_table(p: u64, n_max: u64) -> Vec<(u32, u32, u32, Table1Label)> {
    let mut out = Vec::new();
    for (label, (a1, b1), (a2, b2), n3) in table_patterns(p) {
        for n1 in a1..=b1.unwrap_or(n_max as u32) {
            for n2 in a2..=b2.unwrap_or(n_max as u32) {
                let dim = n1 as u64 + (p - 1) * n2 as u64 + p * n3 as u64;
                if (2..=n_max).contains(&dim) {
                    out.push((n1, n2, n3, label));
                }
            }
        }
    }
    out.sort();
    out
}

fn criterion_3() -> Check {
    let mut sizes = Vec::new();
    for (p, n_max) in [(2, 6), (3, 6), (5, 8)] {
        let mut got: Vec<_> = table1(p, n_max)
            .into_iter()
            .map(|r| Ok((r.counts.n1, r.counts.n2, r.counts.n3, r.label.ok_or("unlabelled row")?)))
            .collect::<Result<_, String>>()?;
        got.sort();
        let want = expected_table(p, n_max);
        ensure!(got == want, "p={p}: rows {got:?} differ from {want:?}");
        sizes.push(format!("p={p}: {} rows", got.len()));
    }
    ensure!(Table1Label::T21.to_string() == "(T 2.1)", "label text");
    Ok(sizes.join(", "))
}

fn criterion_4() -> Check {
    let start = Instant::now();
    let mut corpus = Vec::new();
    for p in [2u64, 3, 5, 7, 11] {
        for n3 in 0..=12 / p as u32 {
            for n2 in 0..=12 / (p as u32 - 1) {
                for n1 in 0..=12 {
                    let c = DecompositionCounts::new(p, n1, n2, n3);
                    if (1..=12).contains(&c.rank()) {
                        corpus.push(c);
                    }
                }
            }
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut checks = 0usize;
    for c in &corpus {
        let partners: Vec<_> = corpus.iter().filter(|o| o.p == c.p).collect();
        for seed in 0..20u64 {
            let lat = synth_instance(c, seed).map_err(|e| e.to_string())?;
            let got = decompose(&lat).map_err(|e| e.to_string())?;
            ensure!(got == *c, "{c:?} seed {seed}: decomposed as {got:?}");

            let (u, u_inv) = random_unimodular(lat.rank(), &mut rng);
            if let Some(t) = conjugate(&lat.t, &u, &u_inv) {
                let moved = CpLattice::new(c.p, t).map_err(|e| e.to_string())?;
                let got = decompose(&moved).map_err(|e| e.to_string())?;
                ensure!(got == *c, "{c:?} seed {seed}: conjugate decomposed as {got:?}");
            }

            let other = partners[rng.gen_range(0..partners.len())];
            let olat = synth_instance(other, seed + 1000).map_err(|e| e.to_string())?;
            let sum = CpLattice::new(c.p, block_sum(&lat.t, &olat.t)).map_err(|e| e.to_string())?;
            let got = decompose(&sum).map_err(|e| e.to_string())?;
            ensure!(got == c.add(other), "{c:?} + {other:?}: decomposed as {got:?}");
            checks += 3;
        }
    }
    let elapsed = start.elapsed();
    ensure!(elapsed <= Duration::from_secs(120), "took {elapsed:?}");
    Ok(format!(
        "{} counts x 20 seeds, {checks} checks, {:.1}s",
        corpus.len(),
        elapsed.as_secs_f64()
    ))
}

fn criterion_5() -> Check {
    let suite = positive().as_ref()?;
    for b in suite {
        let name = &b.inst.name;
        let m = b.inst.m;
        let built = &b.cq.built;
        let symbolic = symbolic_phi_series(&b.inst.spec, m + 1).map_err(|e| format!("{name}: {e}"))?;
        let series = frattini_series(&built.quotient, m + 1);
        for entry in &symbolic[1..] {
            let sub = symbolic_subgroup(built, entry).map_err(|e| format!("{name}: {e}"))?;
            ensure!(
                sub == series[entry.level as usize],
                "{name}: level {} differs from the computed Frattini series",
                entry.level
            );
        }
        let k = built.certificate.precision;
        let finer = Arc::new(
            b.inst
                .spec
                .quotient(k + 1, 1 << 25)
                .map_err(|e| format!("{name}: precision {}: {e}", k + 1))?,
        );
        let records = all_subgroups_up_to_index(&finer, m, 1 << 31).map_err(|e| format!("{name}: {e}"))?;
        let coarse = census(&b.cq.records);
        let fine = census(&records);
        ensure!(coarse == fine, "{name}: census at K={k} {coarse:?} vs K+1 {fine:?}");
    }
    Ok(format!("{} instances, series and censuses agree", suite.len()))
}

fn criterion_6() -> Check {
    let suite = positive().as_ref()?;
    for b in suite {
        let name = &b.inst.name;
        let (m, d) = (b.inst.m, b.inst.d);
        let en = en_check(&b.cq, m, d).map_err(|e| e.to_string())?;
        ensure!(en.outcome == Outcome::Pass, "{name}: en_check(n = {d}) {:?}", en.witness);
        let en1 = en_check(&b.cq, m, 1).map_err(|e| e.to_string())?;
        ensure!(en1.outcome == Outcome::Witness, "{name}: en_check(n = 1) passed");
        let report = schreier_defect_report(&b.cq, m).map_err(|e| e.to_string())?;
        ensure!(!report.free_like, "{name}: Schreier defect vanishes");
        ensure!(report.rows.iter().any(|r| r.lhs != r.rhs), "{name}: no defective row");
    }
    Ok(format!("{} instances", suite.len()))
}

fn small_quotients() -> Vec<Arc<FiniteGroup>> {
    let mut out = Vec::new();
    for inst in common::positive_suite() {
        for k in 1..=3 {
            if let Ok(g) = inst.spec.quotient(k, DEFAULT_BUDGET) {
                if g.order_exponent() <= 6 {
                    out.push(Arc::new(g));
                }
            }
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    while out.len() < 60 {
        if let Some(g) = common::random_group(&mut rng, 6) {
            out.push(g);
        }
    }
    out
}

fn criterion_7() -> Check {
    let groups = small_quotients();
    for g in &groups {
        let p = g.p() as usize;
        let full = Subgroup::full(g);
        let d = dmin(&full);
        let brute = common::brute_force_d(g);
        ensure!(d == brute, "order {}: dmin {d}, brute force {brute}", g.order());
        let m = 3.min(g.order_exponent());
        let records = all_subgroups_up_to_index(g, m, 1 << 24).map_err(|e| e.to_string())?;
        let index_p = records.iter().filter(|r| r.index_exponent == 1).count();
        ensure!(
            g.order_exponent() == 0 || index_p == (p.pow(d) - 1) / (p - 1),
            "order {}: {index_p} index-p subgroups, d = {d}",
            g.order()
        );
        ensure!(maximal_subgroups(&full).len() == index_p, "maximal subgroup count");
        let series = frattini_series(g, m);
        for r in &records {
            ensure!(
                series[r.index_exponent as usize].is_subgroup_of(&r.subgroup),
                "order {}: index p^{} subgroup misses the Frattini term",
                g.order(),
                r.index_exponent
            );
        }
    }
    Ok(format!("{} groups of order <= p^6", groups.len()))
}

fn group_side(spec: &GroupSpec, m: u32) -> Result<Verdict, String> {
    if let Ok(suite) = positive() {
        if let Some(b) = suite.iter().find(|b| &b.inst.spec == spec && b.inst.m == m) {
            return Ok(b.star.clone());
        }
    }
    let opts = BuildOptions::default();
    let cq = CertifiedQuotient::new(build(spec, m, &opts).map_err(|e| e.to_string())?, &opts)
        .map_err(|e| e.to_string())?;
    let d = cq.d();
    star_check(&cq, m, d).map_err(|e| e.to_string())
}

fn criterion_8() -> Check {
    let m = 3;
    let k = m + 2;
    let mut n = 0;
    for (p, dim) in [(2u64, 2usize), (3, 2), (5, 2), (2, 3), (3, 3)] {
        let l = LieLattice::abelian(p, k, dim).map_err(|e| e.to_string())?;
        let v = star_check_lattice(&l, m, dim as u32).map_err(|e| e.to_string())?;
        ensure!(v.outcome == Outcome::Pass, "abelian p={p} dim={dim}: {:?}", v.witness);
        let spec = family(1, FamilyParams::new(p, dim as u32)).map_err(|e| e.to_string())?;
        let g = group_side(&spec, if dim == 2 { 3 } else { 2 })?;
        ensure!(g.outcome == Outcome::Pass, "abelian p={p} dim={dim}: group side disagrees");
        n += 1;
    }
    for (p, dim, s) in [(3u64, 2usize, 1u32), (5, 2, 1), (3, 3, 1), (2, 2, 2), (2, 3, 2)] {
        let l = LieLattice::x_scalar(p, k, dim, s).map_err(|e| e.to_string())?;
        let v = star_check_lattice(&l, m, dim as u32).map_err(|e| e.to_string())?;
        ensure!(v.outcome == Outcome::Pass, "x-scalar p={p} dim={dim} s={s}: {:?}", v.witness);
        let spec = family(2, FamilyParams::new(p, dim as u32).with_s(s, Sign::Plus))
            .map_err(|e| e.to_string())?;
        let g = group_side(&spec, if dim == 2 { 3 } else { 2 })?;
        ensure!(g.outcome == Outcome::Pass, "x-scalar p={p} dim={dim} s={s}: group side disagrees");
        n += 1;
    }
    for p in [3u64, 5] {
        let l = LieLattice::x_scalar(p, k, 2, 0).map_err(|e| e.to_string())?;
        let v = star_check_lattice(&l, m, 2).map_err(|e| e.to_string())?;
        ensure!(v.outcome == Outcome::Witness, "s=0 p={p}: no witness");
        // no pro-p group has this lattice: the action is not continuous
        ensure!(
            family(2, FamilyParams::new(p, 2).with_s(0, Sign::Plus)).is_err(),
            "s=0 p={p}: group side accepted"
        );
        n += 1;
    }
    let l = LieLattice::unipotent(5, k).map_err(|e| e.to_string())?;
    let v = star_check_lattice(&l, m, 3).map_err(|e| e.to_string())?;
    let lw = v.witness.ok_or("unipotent: no lattice witness")?;
    let g = group_side(&unipotent_mutant(), 1)?;
    let gw = g.witness.ok_or("unipotent: no group witness")?;
    ensure!(
        (lw.index, lw.d_found) == (gw.index, gw.d_found) && lw.index == 5 && lw.d_found == 2,
        "unipotent: lattice {lw:?} vs group {gw:?}"
    );
    n += 1;
    Ok(format!("{n} shapes concordant"))
}

type Criterion = (&'static str, fn() -> Check);

fn main() {
    let criteria: [Criterion; 8] = [
        ("1 positive suite", criterion_1),
        ("2 negative suite", criterion_2),
        ("3 table reproduction", criterion_3),
        ("4 decomposition oracle", criterion_4),
        ("5 certificate cross-validation", criterion_5),
        ("6 E_n concordance", criterion_6),
        ("7 engine invariants", criterion_7),
        ("8 lattice mirror", criterion_8),
    ];
    let only: Vec<String> = std::env::args()
        .skip(1)
        .filter(|a| !a.starts_with('-'))
        .collect();
    let mut failed = 0;
    for (name, f) in criteria {
        if !only.is_empty() && !only.iter().any(|o| name.contains(o.as_str())) {
            continue;
        }
        let t = Instant::now();
        let result = catch_unwind(AssertUnwindSafe(f))
            .unwrap_or_else(|e| Err(format!("panicked: {:?}", e.downcast_ref::<String>())));
        let secs = t.elapsed().as_secs_f64();
        match result {
            Ok(detail) => println!("criterion {name}: PASS ({detail}) [{secs:.1}s]"),
            Err(why) => {
                failed += 1;
                println!("criterion {name}: FAIL ({why}) [{secs:.1}s]");
            }
        }
    }
    if failed > 0 {
        std::process::exit(1);
    }
}
