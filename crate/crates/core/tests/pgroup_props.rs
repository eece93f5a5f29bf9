mod common;

use std::sync::Arc;

use constgen::pgroup::{
    all_subgroups_up_to_index, dmin, frattini, frattini_series, maximal_subgroups,
    minimal_generators, subgroup_closure, Subgroup,
};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn group(seed: u64) -> Option<Arc<constgen::pgroup::FiniteGroup>> {
    common::random_group(&mut ChaCha8Rng::seed_from_u64(seed), 6)
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 32, max_global_rejects: 4096, ..ProptestConfig::default() })]

    #[test]
    fn closure_matches_naive_closure(seed in any::<u64>()) {
        let Some(g) = group(seed) else { return Err(TestCaseError::reject("too large")) };
        let full = common::naive_closure(&g, g.generator_ids());
        prop_assert_eq!(full.len(), g.order());
        let gens: Vec<u32> = (0..g.order() as u32).step_by(7).take(2).collect();
        let s = subgroup_closure(&g, &gens);
        prop_assert_eq!(s.ids(), &common::naive_closure(&g, &gens)[..]);
    }

    #[test]
    fn group_axioms_hold(seed in any::<u64>()) {
        let Some(g) = group(seed) else { return Err(TestCaseError::reject("too large")) };
        let n = g.order() as u32;
        let pick = |i: u64| ((seed.rotate_left(i as u32 * 7) ^ i) % n as u64) as u32;
        for i in 0..20 {
            let (a, b, c) = (pick(3 * i), pick(3 * i + 1), pick(3 * i + 2));
            prop_assert_eq!(g.mul(g.mul(a, b), c), g.mul(a, g.mul(b, c)));
            prop_assert_eq!(g.mul(a, g.inverse(a)), g.identity());
            prop_assert_eq!(g.mul(g.identity(), a), a);
        }
    }

    #[test]
    fn dmin_matches_brute_force(seed in any::<u64>()) {
        let Some(g) = group(seed) else { return Err(TestCaseError::reject("too large")) };
        let full = Subgroup::full(&g);
        let d = dmin(&full);
        prop_assert_eq!(d, common::brute_force_d(&g));
        let gens = minimal_generators(&full);
        prop_assert_eq!(gens.len() as u32, d);
        prop_assert_eq!(subgroup_closure(&g, &gens).order(), g.order());
    }

    #[test]
    fn index_p_count_follows_dmin(seed in any::<u64>()) {
        let Some(g) = group(seed) else { return Err(TestCaseError::reject("too large")) };
        let p = g.p() as usize;
        let d = dmin(&Subgroup::full(&g));
        let records = all_subgroups_up_to_index(&g, 1, 1 << 24).unwrap();
        let index_p = records.iter().filter(|r| r.index_exponent == 1).count();
        prop_assert_eq!(index_p, (p.pow(d) - 1) / (p - 1));
        prop_assert_eq!(maximal_subgroups(&Subgroup::full(&g)).len(), index_p);
    }

    #[test]
    fn subgroups_contain_iterated_frattini(seed in any::<u64>()) {
        let Some(g) = group(seed) else { return Err(TestCaseError::reject("too large")) };
        let m = 3.min(g.order_exponent());
        let series = frattini_series(&g, m);
        for r in all_subgroups_up_to_index(&g, m, 1 << 24).unwrap() {
            let i = r.index_exponent as usize;
            prop_assert!(series[i].is_subgroup_of(&r.subgroup));
            prop_assert_eq!(r.d, dmin(&r.subgroup));
        }
        for w in series.windows(2) {
            prop_assert_eq!(&frattini(&w[0]), &w[1]);
        }
    }
}
