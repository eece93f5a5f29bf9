use constgen::lielattice::{lattice_dmin, lie_sublattices_up_to_index, LieLattice};
use constgen::padic::Lattice;
use proptest::prelude::*;

/// Number of index-`p^k` sublattices of `Z_p^n`: a sum over Hermite diagonals
/// `(p^{a_1}, …, p^{a_n})` of `Π p^{(i-1) a_i}` free entries.
fn sublattice_count(p: u64, n: usize, k: u32) -> usize {
    fn go(p: u64, i: usize, n: usize, left: u32) -> u64 {
        if i == n {
            return (left == 0) as u64;
        }
        (0..=left).map(|a| p.pow(i as u32 * a) * go(p, i + 1, n, left - a)).sum()
    }
    go(p, 0, n, k) as usize
}

fn shape() -> impl Strategy<Value = (u64, usize, u32)> {
    (prop::sample::select(vec![2u64, 3, 5]), 2usize..=3, 1u32..=2)
        .prop_filter("small", |(p, n, m)| p.pow(*m * *n as u32) <= 5u64.pow(4))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn abelian_sublattice_counts((p, n, m) in shape()) {
        let l = LieLattice::abelian(p, m + 2, n).unwrap();
        let subs = lie_sublattices_up_to_index(&l, m, 1 << 20).unwrap();
        for k in 0..=m {
            let got = subs.iter().filter(|s| s.index_exponent == k).count();
            prop_assert_eq!(got, sublattice_count(p, n, k));
        }
        prop_assert!(subs.iter().all(|s| s.d == n as u32));
    }

    #[test]
    fn sublattices_are_closed_and_contain_scaled_full((p, n, m) in shape(), s in 0u32..3) {
        let k = m + 2;
        let l = LieLattice::x_scalar(p, k, n, s).unwrap();
        for r in lie_sublattices_up_to_index(&l, m, 1 << 20).unwrap() {
            prop_assert!(l.is_bracket_closed(&r.lattice));
            let floor = Lattice::scaled_full(l.ring(), n, r.index_exponent).unwrap();
            prop_assert!(r.lattice.contains(&floor));
            prop_assert!(r.d >= 1 && r.d <= n as u32);
        }
    }

    #[test]
    fn x_scalar_with_small_action_keeps_rank((p, n, m) in shape(), s in 1u32..3) {
        prop_assume!(p != 2 || s >= 2);
        let l = LieLattice::x_scalar(p, m + 2, n, s).unwrap();
        prop_assert_eq!(lattice_dmin(&l).unwrap(), n as u32);
        let subs = lie_sublattices_up_to_index(&l, m, 1 << 20).unwrap();
        prop_assert!(subs.iter().all(|r| r.d == n as u32));
    }

    #[test]
    fn bracket_is_alternating_and_bilinear(
        s in 0u32..3,
        u in prop::collection::vec(0u64..27, 3),
        v in prop::collection::vec(0u64..27, 3),
        w in prop::collection::vec(0u64..27, 3),
    ) {
        let l = LieLattice::x_scalar(3, 3, 3, s).unwrap();
        let r = l.ring();
        let neg = |x: Vec<u64>| x.into_iter().map(|a| r.neg(a)).collect::<Vec<_>>();
        let add = |x: &[u64], y: &[u64]| x.iter().zip(y).map(|(&a, &b)| r.add(a, b)).collect::<Vec<_>>();
        prop_assert_eq!(l.bracket(&u, &v), neg(l.bracket(&v, &u)));
        prop_assert!(l.bracket(&u, &u).iter().all(|&x| x == 0));
        prop_assert_eq!(l.bracket(&add(&u, &w), &v), add(&l.bracket(&u, &v), &l.bracket(&w, &v)));
    }
}

#[test]
fn count_oracle_matches_known_small_cases() {
    // Z_p^2 has p + 1 index-p sublattices and p^2 + p + 1 of index p^2
    assert_eq!(sublattice_count(3, 2, 1), 4);
    assert_eq!(sublattice_count(3, 2, 2), 13);
    assert_eq!(sublattice_count(2, 3, 1), 7);
}
