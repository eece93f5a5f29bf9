#![allow(dead_code)]

use std::collections::{BTreeSet, VecDeque};
use std::sync::Arc;

use constgen::catalog::{family, FamilyParams, GroupSpec, Sign};
use constgen::padic::Ring;
use constgen::pgroup::{AffineElement, FiniteGroup};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub struct Instance {
    pub name: String,
    pub spec: GroupSpec,
    pub d: u32,
    pub m: u32,
}

/// Listed groups with their expected generator number and checked index bound.
pub fn positive_suite() -> Vec<Instance> {
    let mut out = Vec::new();
    let mut push = |name: String, spec: GroupSpec, d: u32| {
        let m = if d == 2 { 3 } else { 2 };
        out.push(Instance { name, spec, d, m });
    };
    for (p, d) in [(2, 2), (2, 3), (3, 2), (3, 3), (5, 2)] {
        push(format!("abelian p={p} d={d}"), family(1, FamilyParams::new(p, d)).unwrap(), d);
    }
    for (p, d, s, sign) in [
        (3, 2, 1, Sign::Plus),
        (3, 3, 1, Sign::Plus),
        (5, 2, 1, Sign::Plus),
        (2, 2, 2, Sign::Plus),
        (2, 2, 2, Sign::Minus),
        (2, 3, 2, Sign::Minus),
    ] {
        let spec = family(2, FamilyParams::new(p, d).with_s(s, sign)).unwrap();
        push(format!("scalar p={p} d={d} s={s} {sign:?}"), spec, d);
    }
    push("max class p=3".into(), family(3, FamilyParams::new(3, 2)).unwrap(), 2);
    for d in [2, 3] {
        push(format!("minus-one top d={d}"), family(4, FamilyParams::new(2, d)).unwrap(), d);
    }
    out
}

/// Random affine group over `Z/p^K` whose linear parts are unipotent mod `p`,
/// or `None` when its order exceeds `p^max_exp`.
pub fn random_group(rng: &mut ChaCha8Rng, max_exp: u32) -> Option<Arc<FiniteGroup>> {
    let p = [2u64, 3][rng.gen_range(0..2)];
    let dim = rng.gen_range(2..=3usize);
    let k = rng.gen_range(1..=2u32);
    let ring = Ring::new(p, k).unwrap();
    let q = ring.modulus() as i64;
    let ngens = rng.gen_range(2..=4);
    let mut gens = Vec::new();
    for _ in 0..ngens {
        let mut m = vec![vec![0i64; dim]; dim];
        for (i, row) in m.iter_mut().enumerate() {
            for (j, x) in row.iter_mut().enumerate() {
                let sparse = rng.gen_bool(0.45);
                *x = match (i.cmp(&j), sparse) {
                    (std::cmp::Ordering::Equal, _) => 1 + if sparse { p as i64 } else { 0 },
                    (std::cmp::Ordering::Less, true) => rng.gen_range(0..q),
                    (_, true) => p as i64 * rng.gen_range(0..q),
                    _ => 0,
                };
            }
        }
        let shift: Vec<i64> = (0..dim)
            .map(|_| if rng.gen_bool(0.7) { rng.gen_range(0..q) } else { 0 })
            .collect();
        gens.push(AffineElement::from_integers(ring, &m, &shift).unwrap());
    }
    let budget = (p as usize).pow(max_exp);
    FiniteGroup::closure(ring, dim, &gens, budget).ok().map(Arc::new)
}

/// Breadth-first closure through the multiplication table only.
pub fn naive_closure(g: &FiniteGroup, gens: &[u32]) -> Vec<u32> {
    let mut seen = vec![false; g.order()];
    let e = g.identity();
    seen[e as usize] = true;
    let mut queue = VecDeque::from([e]);
    while let Some(x) = queue.pop_front() {
        for &s in gens {
            let y = g.mul(x, s);
            if !seen[y as usize] {
                seen[y as usize] = true;
                queue.push_back(y);
            }
        }
    }
    (0..g.order() as u32).filter(|&i| seen[i as usize]).collect()
}

/// Least `r` such that some `r` elements generate `g`, by exhausting the
/// subgroups generated by `r` elements.
pub fn brute_force_d(g: &FiniteGroup) -> u32 {
    let n = g.order();
    if n == 1 {
        return 0;
    }
    let mut level: BTreeSet<(Vec<u32>, Vec<u32>)> = BTreeSet::new();
    level.insert((vec![g.identity()], vec![]));
    for r in 1.. {
        let mut next = BTreeSet::new();
        for (ids, gens) in &level {
            let mut member = vec![false; n];
            for &i in ids {
                member[i as usize] = true;
            }
            for x in 0..n as u32 {
                if member[x as usize] {
                    continue;
                }
                let mut gs = gens.clone();
                gs.push(x);
                let sub = naive_closure(g, &gs);
                if sub.len() == n {
                    return r;
                }
                next.insert((sub, gs));
            }
        }
        // keep one generating tuple per subgroup
        let mut dedup: Vec<(Vec<u32>, Vec<u32>)> = next.into_iter().collect();
        dedup.dedup_by(|a, b| a.0 == b.0);
        level = dedup.into_iter().collect();
    }
    unreachable!()
}
