use dbundle::group::{builtin_groups, Element, Group};
use dbundle::milnor::{bg_cover_member, bg_partition, bg_section, eg_act, eg_divide, eg_project, odd_shuffle_homotopy, Entry};
use dbundle::{MilnorPointF64, MilnorPointQ, Rational};
use num_bigint::BigInt;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn q(n: i64, d: i64) -> Rational {
    Rational::new(BigInt::from(n), BigInt::from(d))
}

#[test]
fn hand_built_point_projects_to_canonical_gauge() {
    let g = Group::circle();
    // [1/4 at 0 with 1/3 turn, 3/4 at 2 with 1/2 turn]
    let p = MilnorPointQ::new(
        vec![Entry::new(0, q(1, 4), Element::Turn(q(1, 3))), Entry::new(2, q(3, 4), Element::Turn(q(1, 2)))],
        3,
    )
    .unwrap();
    let b = eg_project(&g, &p).unwrap();
    assert!(b.is_canonical(&g));
    // 1/2 - 1/3 = 1/6 of a turn, exactly
    let s = bg_section(&g, 2, &b).unwrap();
    assert_eq!(s.element(0), Some(&Element::Turn(q(5, 6))));
    assert_eq!(s.element(2), Some(&Element::Turn(q(0, 1))));
    // t_0 = 1/4 is not above 1/2, so only index 2 carries partition weight
    let tau = bg_partition(&b);
    assert_eq!(tau[0], 0.0);
    assert_eq!(tau[2], 1.0);
    // B_0 is the open set t_0 > 1/4
    assert!(!bg_cover_member(0, &b));
    assert!(bg_cover_member(2, &b));
    assert!(bg_section(&g, 0, &b).is_err());
}

#[test]
fn division_recovers_the_acting_element() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for g in builtin_groups() {
        for _ in 0..50 {
            let p = MilnorPointQ::random(&g, 4, 3, &mut rng);
            let h = g.sample::<Rational, _>(&mut rng);
            let moved = eg_act(&g, &p, &h).unwrap();
            assert_eq!(eg_divide(&g, &p, &moved, 0.0, 0.0), Some(h));
        }
    }
}

fn group_strategy() -> impl Strategy<Value = Group> {
    (0..builtin_groups().len()).prop_map(|k| builtin_groups().swap_remove(k))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn projection_is_invariant(g in group_strategy(), seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let p = MilnorPointQ::random(&g, 5, 4, &mut rng);
        let h = g.sample::<Rational, _>(&mut rng);
        prop_assert_eq!(eg_project(&g, &eg_act(&g, &p, &h).unwrap()).unwrap(), eg_project(&g, &p).unwrap());
    }

    #[test]
    fn action_is_a_right_action(g in group_strategy(), seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let p = MilnorPointQ::random(&g, 3, 2, &mut rng);
        let (a, b) = (g.sample::<Rational, _>(&mut rng), g.sample::<Rational, _>(&mut rng));
        let ab = g.multiply(&a, &b).unwrap();
        let lhs = eg_act(&g, &eg_act(&g, &p, &a).unwrap(), &b).unwrap();
        prop_assert_eq!(lhs, eg_act(&g, &p, &ab).unwrap());
    }

    #[test]
    fn partition_supports_sit_above_thresholds(g in group_strategy(), seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let b = eg_project(&g, &MilnorPointQ::random(&g, 6, 5, &mut rng)).unwrap();
        let tau = bg_partition(&b);
        prop_assert!((tau.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        for (i, t) in tau.iter().enumerate() {
            if *t > 0.0 {
                prop_assert!(b.weight(i) > q(1, 1 << (i + 1)));
                prop_assert!(bg_cover_member(i, &b));
            }
        }
    }

    #[test]
    fn shuffles_keep_weights(g in group_strategy(), seed in any::<u64>(), t in 0.0f64..1.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let p = MilnorPointF64::random(&g, 4, 3, &mut rng);
        let s = odd_shuffle_homotopy(&p, t);
        prop_assert!((s.weight_sum() - 1.0).abs() < 1e-12);
    }
}
