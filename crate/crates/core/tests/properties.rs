use proptest::prelude::*;

use num_rational::Ratio;
use replicable::coins::{hoeffding_n, tv_upper_bound, BiasVector};
use replicable::geometry::{
    cert_bad_set, grid_cert_round, scaled_list_round, CertString, Partition, PartitionFile,
    PartitionSpec, Shift, VerifiedPartition,
};
use replicable::rng::derive_seed;
use replicable::sq::err_unif;
use replicable::Point;

fn pt(v: &[f64]) -> Point {
    Point::new(v.to_vec()).unwrap()
}

fn shear() -> impl Strategy<Value = PartitionSpec> {
    (1usize..=4).prop_flat_map(|d| {
        let pairs: Vec<(usize, usize)> = (0..d)
            .flat_map(|i| (i + 1..d).map(move |j| (i, j)))
            .collect();
        let n = pairs.len();
        prop::collection::vec((0i64..12, 1i64..12), n).prop_map(move |entries| {
            let shifts = pairs
                .iter()
                .zip(entries)
                .map(|(&(row, col), (p, q))| Shift {
                    row,
                    col,
                    value: Ratio::new(p % q, q),
                });
            PartitionSpec::new(d, shifts).unwrap()
        })
    })
}

fn spec_and_point() -> impl Strategy<Value = (PartitionSpec, Vec<f64>)> {
    shear().prop_flat_map(|s| {
        let d = s.dim();
        (Just(s), prop::collection::vec(-50.0f64..50.0, d))
    })
}

proptest! {
    #[test]
    fn located_tile_contains_the_point((spec, x) in spec_and_point()) {
        let p = Partition::new(spec).unwrap();
        let z = p.locate(&pt(&x)).unwrap();
        let a = p.anchor(&z);
        for (ai, xi) in a.iter().zip(&x) {
            prop_assert!(*ai <= *xi + 1e-9 && *xi < *ai + 1.0 + 1e-9);
        }
        prop_assert_eq!(p.locate(&p.center(&z)).unwrap(), z.clone());
        prop_assert!(p.members_near(&pt(&x), 0.1).unwrap().contains(&z));
    }

    #[test]
    fn members_near_grows_with_radius((spec, x) in spec_and_point(), r in 0.01f64..0.4) {
        let p = Partition::new(spec).unwrap();
        let small = p.members_near(&pt(&x), r).unwrap();
        let large = p.members_near(&pt(&x), 2.0 * r).unwrap();
        prop_assert!(small.iter().all(|z| large.contains(z)));
    }

    #[test]
    fn brick_balls_meet_at_most_three_tiles(x in prop::collection::vec(-20.0f64..20.0, 2)) {
        let vp = VerifiedPartition::standard(2).unwrap();
        let hits = vp.partition().members_near(&pt(&x), vp.rho()).unwrap();
        prop_assert!(hits.len() <= 3);
    }

    #[test]
    fn list_rounding_stays_within_eps(
        x in prop::collection::vec(0.0f64..1.0, 2),
        u in prop::collection::vec(-1.0f64..=1.0, 2),
        eps in 0.005f64..0.5,
    ) {
        let vp = VerifiedPartition::standard(2).unwrap();
        let r = vp.rho() * eps;
        let xhat: Vec<f64> = x.iter().zip(&u).map(|(a, b)| a + r * b).collect();
        let out = scaled_list_round(&pt(&xhat), eps, vp.partition()).unwrap();
        prop_assert!(out.value.linf_dist(&pt(&x)) <= eps * (1.0 + 1e-12));
    }

    #[test]
    fn grid_rounding_moves_at_most_modulus_times_eps0(
        x in prop::collection::vec(-2.0f64..2.0, 1..5),
        eps0 in 0.001f64..0.2,
        ell in 0u32..6,
        seed in any::<u64>(),
    ) {
        let r = seed % (1u64 << ell) + 1;
        let cert = CertString::new(ell, r).unwrap();
        let out = grid_cert_round(&pt(&x), eps0, cert).unwrap();
        let m = (1u64 << ell) as f64;
        prop_assert!(out.value.linf_dist(&pt(&x)) <= m * eps0 * (1.0 + 1e-9));
        for &k in &out.grid {
            prop_assert_eq!((k - r as i64).rem_euclid(1i64 << ell), 0);
        }
    }

    #[test]
    fn good_certificates_round_the_ball_to_one_point(
        x in prop::collection::vec(0.0f64..1.0, 1..4),
        u in prop::collection::vec(-1.0f64..=1.0, 3),
        w in prop::collection::vec(-1.0f64..=1.0, 3),
        eps0 in 0.001f64..0.05,
        ell in 1u32..5,
    ) {
        let d = x.len();
        let bad = cert_bad_set(&pt(&x), eps0, ell).unwrap();
        prop_assert!(bad.len() <= d);
        let a: Vec<f64> = (0..d).map(|i| x[i] + eps0 * u[i]).collect();
        let b: Vec<f64> = (0..d).map(|i| x[i] + eps0 * w[i]).collect();
        for cert in CertString::all(ell).unwrap().filter(|c| !bad.contains(&c.r())) {
            let ga = grid_cert_round(&pt(&a), eps0, cert).unwrap().grid;
            let gb = grid_cert_round(&pt(&b), eps0, cert).unwrap().grid;
            prop_assert_eq!(ga, gb);
        }
    }

    #[test]
    fn run_seeds_do_not_collide(master in any::<u64>(), i in any::<u64>(), j in any::<u64>()) {
        prop_assume!(i != j);
        prop_assert_ne!(derive_seed(master, i, 0), derive_seed(master, j, 0));
    }

    #[test]
    fn err_unif_is_a_metric(
        s in prop::collection::vec(0.0f64..=1.0, 3),
        t in prop::collection::vec(0.0f64..=1.0, 3),
        u in prop::collection::vec(0.0f64..=1.0, 3),
    ) {
        let (s, t, u) = (pt(&s), pt(&t), pt(&u));
        let st = err_unif(&s, &t).unwrap();
        prop_assert!((0.0..=1.0).contains(&st));
        prop_assert!((st - err_unif(&t, &s).unwrap()).abs() < 1e-15);
        prop_assert!(st <= err_unif(&s, &u).unwrap() + err_unif(&u, &t).unwrap() + 1e-12);
    }

    #[test]
    fn tv_bound_is_monotone_in_n(
        a in prop::collection::vec(0.0f64..=1.0, 2),
        b in prop::collection::vec(0.0f64..=1.0, 2),
        n in 1u64..10_000,
    ) {
        let a = BiasVector::from_vec(a).unwrap();
        let b = BiasVector::from_vec(b).unwrap();
        let lo = tv_upper_bound(&a, &b, n).unwrap();
        let hi = tv_upper_bound(&a, &b, n + 1).unwrap();
        prop_assert!((0.0..=1.0).contains(&lo) && lo <= hi);
    }

    #[test]
    fn hoeffding_is_monotone(e in 0.001f64..0.5, d in 0.001f64..0.5) {
        prop_assert!(hoeffding_n(e, d).unwrap() >= hoeffding_n(e * 1.5, d).unwrap());
        prop_assert!(hoeffding_n(e, d).unwrap() >= hoeffding_n(e, d * 1.5).unwrap());
    }

    #[test]
    fn spec_files_round_trip(spec in shear()) {
        let file = PartitionFile::new(&spec, None);
        let back: PartitionFile = serde_json::from_str(&file.to_json().unwrap()).unwrap();
        prop_assert_eq!(back.spec().unwrap(), spec);
    }
}
