use proptest::prelude::*;
use sublev_core::functions::PlateauBump;
use sublev_core::generator::{check_positive_maximum_principle, ScanBox, CHECK_TOLERANCE};
use sublev_core::grid::{Extension, GridFunction};
use sublev_core::hjb::{hjb_solve, hjb_step, SchemeConfig};
use sublev_core::semigroup::{evolve, nisio_step};
use sublev_core::triplets::{CharacteristicFamily, Label, LevyTriplet};

const LO: f64 = -8.0;
const HI: f64 = 8.0;
const N: usize = 129;

fn triplet() -> impl Strategy<Value = LevyTriplet> {
    (
        -1.0..1.0f64,
        0.0..0.8f64,
        prop::collection::vec((-1.5..1.5f64, 0.0..1.5f64), 0..3),
    )
        .prop_map(|(b, q, atoms)| {
            let atoms: Vec<(f64, f64)> = atoms.into_iter().filter(|(y, _)| *y != 0.0).collect();
            LevyTriplet::one_d(0.0, b, q, &atoms).unwrap()
        })
}

fn family() -> impl Strategy<Value = CharacteristicFamily> {
    prop::collection::vec(triplet(), 1..4).prop_map(|trips| {
        let labels = (0..trips.len()).map(|i| Label(format!("m{i}"))).collect();
        CharacteristicFamily::invariant(labels, trips).unwrap()
    })
}

fn datum() -> impl Strategy<Value = GridFunction> {
    prop::collection::vec((-3.0..3.0f64, 0.3..1.5f64, -1.0..1.0f64), 1..4).prop_map(|bumps| {
        GridFunction::from_fn(1, LO, HI, N, Extension::Constant, |x| {
            bumps.iter().map(|&(c, s, a)| a * (-(x[0] - c) * (x[0] - c) / (2.0 * s * s)).exp()).sum()
        })
        .unwrap()
    })
}

fn perturbation() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.0..0.5f64, N)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn nisio_step_is_monotone(fam in family(), f in datum(), bump in perturbation()) {
        let g = f.with_values(f.values().iter().zip(&bump).map(|(a, b)| a + b).collect()).unwrap();
        let (tf, _) = nisio_step(&fam, &f, 0.05).unwrap();
        let (tg, _) = nisio_step(&fam, &g, 0.05).unwrap();
        for (a, b) in tf.values().iter().zip(tg.values()) {
            prop_assert!(a <= &(b + 1e-12));
        }
    }

    #[test]
    fn constants_shift_through(fam in family(), f in datum(), c in -2.0..2.0f64) {
        let g = f.map(|v| v + c).unwrap();
        let (tf, _) = nisio_step(&fam, &f, 0.05).unwrap();
        let (tg, _) = nisio_step(&fam, &g, 0.05).unwrap();
        for (a, b) in tf.values().iter().zip(tg.values()) {
            prop_assert!((a + c - b).abs() < 1e-10);
        }
    }

    #[test]
    fn killing_keeps_one_sub_markov(c in 0.0..2.0f64, t in triplet()) {
        let killed = LevyTriplet::new(c, t.drift().to_vec(), t.diffusion().to_vec(), t.jumps().clone()).unwrap();
        let fam = CharacteristicFamily::singleton(killed);
        let one = GridFunction::from_fn(1, LO, HI, N, Extension::Constant, |_| 1.0).unwrap();
        let traj = evolve(&fam, &one, 0.4, 8).unwrap();
        for v in traj.last().values() {
            prop_assert!(*v <= 1.0 && *v >= 0.0);
            prop_assert!((v - (-c * 0.4f64).exp()).abs() < 1e-12);
        }
    }

    #[test]
    fn semigroup_property_on_dyadic_steps(fam in family(), f in datum()) {
        let whole = evolve(&fam, &f, 0.5, 8).unwrap();
        let half = evolve(&fam, &f, 0.25, 4).unwrap();
        let rest = evolve(&fam, half.last(), 0.25, 4).unwrap();
        prop_assert_eq!(whole.last(), rest.last());
    }

    #[test]
    fn sublinear(fam in family(), f in datum(), g in datum(), lambda in 0.0..3.0f64) {
        let sum = f.zip_with(&g, |a, b| a + b).unwrap();
        let (tf, _) = nisio_step(&fam, &f, 0.05).unwrap();
        let (tg, _) = nisio_step(&fam, &g, 0.05).unwrap();
        let (ts, _) = nisio_step(&fam, &sum, 0.05).unwrap();
        for ((s, a), b) in ts.values().iter().zip(tf.values()).zip(tg.values()) {
            prop_assert!(*s <= a + b + 1e-12);
        }
        let (tl, _) = nisio_step(&fam, &f.map(|v| lambda * v).unwrap(), 0.05).unwrap();
        for (l, a) in tl.values().iter().zip(tf.values()) {
            prop_assert!((l - lambda * a).abs() < 1e-12 * (1.0 + lambda));
        }
    }

    #[test]
    fn frames_are_lipschitz_in_time(fam in family(), f in datum()) {
        // ‖T_t f − T_s f‖ ≤ |t − s|·‖env f‖ on the grid, up to the scheme error.
        let traj = evolve(&fam, &f, 0.4, 8).unwrap();
        let trips = fam.invariant_triplets().unwrap();
        let bound = (0..f.n()).map(|i| {
            let x = [f.coordinate(i)];
            trips.iter().map(|t| sublev_core::generator::apply_generator(t, (&f).into(), &x).unwrap()).fold(f64::MIN, f64::max).abs()
        }).fold(0.0, f64::max);
        let step_bound = bound * traj.dt;
        for w in traj.frames.windows(2) {
            prop_assert!(w[0].sup_distance(&w[1]) <= step_bound * 1.5 + 1e-9);
        }
    }

    #[test]
    fn hjb_comparison_and_contraction(fam in family(), f in datum(), bump in perturbation()) {
        let g = f.with_values(f.values().iter().zip(&bump).map(|(a, b)| a + b).collect()).unwrap();
        let cfg = SchemeConfig::default();
        let a = hjb_solve(&fam, &f, 0.1, &cfg).unwrap();
        let b = hjb_solve(&fam, &g, 0.1, &cfg).unwrap();
        for (x, y) in a.frames.iter().zip(&b.frames) {
            prop_assert!(x.values().iter().zip(y.values()).all(|(u, v)| u <= v));
        }
        let (sa, sb) = (hjb_step(&fam, &f, &cfg).unwrap(), hjb_step(&fam, &g, &cfg).unwrap());
        prop_assert!(sa.sup_distance(&sb) <= f.sup_distance(&g) + 1e-14);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn positive_maximum_principle(fam in family(), center in -2.0..2.0f64, radius in 0.2..1.5f64, amp in 0.1..3.0f64, u in -1.0..1.0f64) {
        let bump = PlateauBump::new(1, &[center], radius, amp);
        let x0 = center + u * radius;
        let scan = ScanBox { lo: center - 4.0, hi: center + 4.0, n: 81 };
        let report = check_positive_maximum_principle(&fam, &bump, &[x0], scan).unwrap();
        prop_assert!(report.value <= CHECK_TOLERANCE, "{}", report.value);
        prop_assert!(report.pass);
    }
}
