use ideal_lab::construction::{build_divergent_perm, build_divergent_subseq, in_am, AmVerdict};
use ideal_lab::ideal::{density_profile, interval_witness, Membership};
use ideal_lab::selection::CoinVector;
use ideal_lab::{
    check_witness, coins_to_subseq, i_converges, image_set, indicator_sequence, subseq_to_coins, witness_pair, EpsGrid,
    Horizon, IdealSpec, IndexSet, MetricKind, PointSeq, Selection, SubseqPrefix, VerdictTag,
};
use proptest::prelude::*;

fn index_set(max_n: usize) -> impl Strategy<Value = IndexSet> {
    (2..=max_n).prop_flat_map(|n| {
        proptest::collection::vec(any::<bool>(), n).prop_map(move |bits| {
            let h = Horizon::new(n).unwrap();
            IndexSet::from_predicate(h, |i| bits[i - 1])
        })
    })
}

fn pair_of_sets(max_n: usize) -> impl Strategy<Value = (IndexSet, IndexSet)> {
    (2..=max_n).prop_flat_map(|n| {
        (proptest::collection::vec(any::<bool>(), n), proptest::collection::vec(any::<bool>(), n)).prop_map(
            move |(a, b)| {
                let h = Horizon::new(n).unwrap();
                (IndexSet::from_predicate(h, |i| a[i - 1]), IndexSet::from_predicate(h, |i| b[i - 1]))
            },
        )
    })
}

/// A strictly increasing selection of `len ≥ 1` entries within `[1, horizon]`.
fn selection(horizon: usize) -> impl Strategy<Value = SubseqPrefix> {
    proptest::collection::btree_set(1..=horizon, 1..=horizon.min(64))
        .prop_map(move |set| SubseqPrefix::new(set.into_iter().collect(), horizon).unwrap())
}

fn dyadic_seq(values: Vec<i32>) -> PointSeq<f64> {
    PointSeq::from_values(MetricKind::RealAbs, values.into_iter().map(|v| v as f64 / 8.0).collect()).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn profile_subadditive((a, b) in pair_of_sets(400)) {
        let n = a.horizon().get();
        let cps: Vec<usize> = (1..=n).step_by(7).collect();
        let u = density_profile(&a.union(&b), &cps).unwrap();
        let pa = density_profile(&a, &cps).unwrap();
        let pb = density_profile(&b, &cps).unwrap();
        for ((u, a), b) in u.iter().zip(&pa).zip(&pb) {
            prop_assert!(u.count <= a.count + b.count);
            prop_assert!(u.count >= a.count.max(b.count));
            prop_assert!((0.0..=1.0).contains(&u.value()));
        }
    }

    #[test]
    fn profile_matches_naive_count(a in index_set(500)) {
        let n = a.horizon().get();
        let cps: Vec<usize> = (1..=n).collect();
        for p in density_profile(&a, &cps).unwrap() {
            prop_assert_eq!(p.count, a.elements().iter().filter(|&&e| e <= p.n).count());
        }
    }

    #[test]
    fn fin_member_implies_density_member(a in index_set(3000), head in 0usize..200) {
        // sparse head-heavy sets exercise the Fin Member branch
        let h = a.horizon();
        let trimmed = IndexSet::new(a.elements().iter().copied().filter(|&e| e <= head).collect(), h).unwrap();
        for set in [&a, &trimmed] {
            if IdealSpec::fin().membership(set).membership == Membership::Member {
                prop_assert_eq!(IdealSpec::density().membership(set).membership, Membership::Member);
            }
        }
    }

    #[test]
    fn check_witness_matches_brute_force(a in index_set(600), count in 1usize..30, fin in any::<bool>()) {
        let ideal = if fin { IdealSpec::fin() } else { IdealSpec::density() };
        let w = interval_witness(&ideal, count).unwrap();
        let n = a.horizon().get();
        let naive = w
            .cutpoints()
            .windows(2)
            .filter(|c| c[1] - 1 <= n && (c[0]..c[1]).all(|i| a.contains(i)))
            .count();
        prop_assert_eq!(check_witness(&w, &a), naive);
    }

    #[test]
    fn image_is_monotone_and_identity_fixes((a, b) in pair_of_sets(200), s in selection(400)) {
        let n = a.horizon().get();
        let id = SubseqPrefix::identity(n);
        prop_assert_eq!(&image_set(&id, &a).unwrap(), &a);
        let ab = a.union(&b);
        let m = s.len();
        let restrict = |x: &IndexSet| {
            IndexSet::new(x.elements().iter().copied().filter(|&e| e <= m).collect(), Horizon::new(m.max(2)).unwrap()).unwrap()
        };
        let (small, big) = (restrict(&a), restrict(&ab));
        let (ia, ib) = (image_set(&s, &small).unwrap(), image_set(&s, &big).unwrap());
        prop_assert!(ia.is_subset(&ib));
        prop_assert_eq!(ia.len(), small.len());
    }

    #[test]
    fn verdicts_are_translation_equivariant(values in proptest::collection::vec(-16i32..16, 256..600), shift in -64i32..64, density in any::<bool>()) {
        // dyadic values keep every distance exact under translation
        let ideal = if density { IdealSpec::density() } else { IdealSpec::fin() };
        let x = dyadic_seq(values);
        let c = shift as f64 / 4.0;
        let grid = EpsGrid::default();
        let (a, b) = (i_converges(&x, &ideal, &grid), i_converges(&x.translate(c), &ideal, &grid));
        prop_assert_eq!(a.tag(), b.tag());
        if let (Some(la), Some(lb)) = (a.limit(), b.limit()) {
            prop_assert_eq!(la[0] + c, lb[0]);
        }
    }

    #[test]
    fn indicator_grows_with_k(values in proptest::collection::vec(-64i32..64, 2..200), anchor_pick in any::<prop::sample::Index>(), k in 1usize..40) {
        let x = dyadic_seq(values);
        let s = SubseqPrefix::identity(x.len());
        let anchor = anchor_pick.index(x.len()) + 1;
        let coarse = indicator_sequence(&x, &s, anchor, k).unwrap();
        let fine = indicator_sequence(&x, &s, anchor, k + 1).unwrap();
        for j in 1..=x.len() {
            prop_assert!(!coarse.bit(j) || fine.bit(j));
        }
    }

    #[test]
    fn selections_compose(values in proptest::collection::vec(-9i32..9, 64..200), s in selection(64), t_bits in proptest::collection::vec(any::<bool>(), 64)) {
        let x = dyadic_seq(values);
        let t_entries: Vec<usize> = (1..=s.len()).filter(|&i| t_bits[i - 1]).collect();
        prop_assume!(t_entries.len() >= 2 && s.len() >= 2);
        let t = SubseqPrefix::new(t_entries, s.len()).unwrap();
        let lhs = x.apply_selection(&s).unwrap().apply_selection(&t).unwrap();
        let rhs = x.apply_selection(&s.compose(&t).unwrap()).unwrap();
        prop_assert_eq!(lhs, rhs);
    }

    #[test]
    fn coins_round_trip(bits in proptest::collection::vec(any::<bool>(), 1..300)) {
        prop_assume!(bits.iter().any(|&b| b));
        let t = CoinVector::from_bits(&bits);
        let s = coins_to_subseq(&t).unwrap();
        prop_assert_eq!(subseq_to_coins(&s, bits.len()).unwrap(), t);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn constructions_land_in_every_visited_am(seed in any::<u64>(), target in 8usize..400, fin in any::<bool>()) {
        let x = PointSeq::from_fn(MetricKind::RealAbs, Horizon::new(1 << 13).unwrap(), |n| {
            // three interleaved cluster values
            [0.0, 1.0, 4.0][n % 3]
        })
        .unwrap();
        let ideal = if fin { IdealSpec::fin() } else { IdealSpec::density() };
        let sub = build_divergent_subseq(&x, &ideal, target, seed).unwrap();
        let perm = build_divergent_perm(&x, &ideal, target, seed).unwrap();
        prop_assert!(sub.pair.holds_on(&x));
        prop_assert!(sub.selection.len() >= target && perm.selection.len() >= target);
        for m in 1..=sub.visited_m {
            prop_assert!(matches!(in_am(&sub.selection, &sub.plan(m), &x).unwrap(), AmVerdict::Yes(_)));
        }
        for m in 1..=perm.visited_m {
            prop_assert!(matches!(in_am(&perm.selection, &perm.plan(m), &x).unwrap(), AmVerdict::Yes(_)));
        }
        let mut seen = perm.selection.entries().to_vec();
        seen.sort_unstable();
        seen.dedup();
        prop_assert_eq!(seen.len(), perm.selection.len());
    }

    #[test]
    fn witness_pairs_hold(values in proptest::collection::vec(-4i32..4, 64..2000)) {
        let x = dyadic_seq(values);
        if let Some(p) = witness_pair(&x) {
            prop_assert!(p.holds_on(&x));
            prop_assert!(!p.u.is_empty() && !p.v.is_empty());
        }
    }
}

#[test]
fn density_divergent_construction_replays_divergent() {
    let x = PointSeq::from_fn(MetricKind::RealAbs, Horizon::new(1 << 16).unwrap(), |n| (n % 3) as f64).unwrap();
    let c = build_divergent_subseq(&x, &IdealSpec::density(), 5000, 3).unwrap();
    let y = x.apply_selection(&c.selection).unwrap();
    assert_eq!(i_converges(&y, &IdealSpec::density(), &EpsGrid::default()).tag(), VerdictTag::Divergent);
}
