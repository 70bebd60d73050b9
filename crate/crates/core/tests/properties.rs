use orlicz_umd::bounds::{beta_upper, c_h, c_kx_bound, certify_ratio, zeta_lower, ConstantsReport};
use orlicz_umd::martingale::{
    estimate_umd, random_martingale, read_tree_csv, write_tree_csv, Budget, SignSequence, YNorm,
};
use orlicz_umd::modular::{AtomicMeasureSpace, MusielakOrlicz, SimpleFunction};
use orlicz_umd::solve::grid;
use orlicz_umd::young::{
    estimate_delta2, young_margin, Delta2Mode, PiecewiseLinear, Tail, YoungFunction,
};
use proptest::prelude::*;

fn family() -> impl Strategy<Value = YoungFunction> {
    prop_oneof![
        (1.1..5.0f64).prop_map(|p| YoungFunction::power(p, 1).unwrap()),
        (1.1..5.0f64).prop_map(|p| YoungFunction::holder_dual(vec![p]).unwrap()),
        Just(YoungFunction::exp_minus_one(1)),
        prop::collection::vec(0.05..2.0f64, 1..6).prop_map(|mut slopes| {
            slopes.sort_by(f64::total_cmp);
            let mut knots = vec![(0.0, 0.0)];
            let (mut x, mut y) = (0.0, 0.0);
            for s in slopes {
                x += 1.0;
                y += s;
                knots.push((x, y));
            }
            YoungFunction::tabulated(vec![PiecewiseLinear::new(&knots, Tail::Linear).unwrap()])
        }),
    ]
}

fn space_and_function() -> impl Strategy<Value = (AtomicMeasureSpace, Vec<f64>, SimpleFunction)> {
    (1usize..6).prop_flat_map(|n| {
        (
            prop::collection::vec(0.05..3.0f64, n),
            prop::collection::vec(1.1..4.5f64, n),
            prop::collection::vec(-5.0..5.0f64, n),
        )
            .prop_map(|(w, p, f)| {
                let ids = (0..w.len()).map(|i| format!("a{i}")).collect();
                (
                    AtomicMeasureSpace::new(ids, w).unwrap(),
                    p,
                    SimpleFunction::new(f),
                )
            })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn young_functions_are_convex_and_increasing(phi in family(), a in 0.0..8.0f64, b in 0.0..8.0f64) {
        let (lo, hi) = (a.min(b), a.max(b));
        let (fa, fb) = (phi.eval(0, lo).unwrap().to_f64(), phi.eval(0, hi).unwrap().to_f64());
        let mid = phi.eval(0, 0.5 * (lo + hi)).unwrap().to_f64();
        prop_assert!(mid <= 0.5 * (fa + fb) + 1e-12 * fb.max(1.0));
        prop_assert!(fa <= fb + 1e-12 * fb.max(1.0));
    }

    #[test]
    fn young_inequality_and_equality_case(phi in family(), x in 0.01..6.0f64, y in 0.0..6.0f64) {
        let psi = phi.conjugate();
        if let Some(m) = young_margin(&phi, &psi, 0, x, y).unwrap().finite() {
            prop_assert!(m >= -1e-9 * (x * y).max(1.0));
        }
        let slope = phi.right_derivative(0, x).unwrap();
        let eq = young_margin(&phi, &psi, 0, x, slope).unwrap().to_f64();
        prop_assert!(eq.abs() <= 1e-8 * (x * slope).max(1.0), "equality gap {}", eq);
    }

    #[test]
    fn biconjugate_recovers_phi(p in 1.2..4.0f64, x in 0.05..20.0f64) {
        let phi = YoungFunction::power(p, 1).unwrap();
        let bi = phi.conjugate().conjugate_at(0, x).unwrap().to_f64();
        let v = phi.eval(0, x).unwrap().to_f64();
        prop_assert!((bi - v).abs() <= 1e-6 * v.max(1e-300));
    }

    #[test]
    fn inverse_derivative_is_a_right_inverse(phi in family(), x in 0.0..6.0f64) {
        let slope = phi.right_derivative(0, x).unwrap();
        prop_assert!(phi.inverse_derivative(0, slope).unwrap().to_f64() >= x - 1e-9 * x.max(1.0));
    }

    #[test]
    fn delta2_certificate_survives_denser_grid(p in prop::collection::vec(1.1..4.0f64, 1..4)) {
        let n = p.len();
        let phi = YoungFunction::variable_exponent(p).unwrap();
        let space = AtomicMeasureSpace::uniform(n, 1.0).unwrap();
        let coarse = grid(0.01, 100.0, 30, true);
        let cert = estimate_delta2(&phi, &space, &coarse, Delta2Mode::RatioOnly).unwrap();
        prop_assert!(cert.is_certified());
        prop_assert!(cert.replay(&phi, &grid(0.01, 100.0, 300, true)).unwrap() <= 1e-9);
    }

    #[test]
    fn luxemburg_norm_is_a_norm((space, p, f) in space_and_function(), c in -4.0..4.0f64, shift in -2.0..2.0f64) {
        let n = space.len();
        let mo = MusielakOrlicz::new(space, YoungFunction::variable_exponent(p).unwrap()).unwrap();
        let nf = mo.luxemburg_norm(&f).unwrap().value;
        let scaled = mo.luxemburg_norm(&f.scaled(c)).unwrap().value;
        prop_assert!((scaled - c.abs() * nf).abs() <= 1e-10 * nf.max(1e-12) * c.abs().max(1.0));
        let g = SimpleFunction::new((0..n).map(|i| shift * (i as f64 - 1.0)).collect());
        let sum = mo.luxemburg_norm(&f.plus(&g)).unwrap().value;
        let ng = mo.luxemburg_norm(&g).unwrap().value;
        prop_assert!(sum <= (nf + ng) * (1.0 + 1e-10) + 1e-12);
        if nf > 0.0 {
            prop_assert!(mo.modular(&f, nf).unwrap().to_f64() <= 1.0 + 1e-9);
        }
    }

    #[test]
    fn amemiya_lies_between_one_and_two_luxemburg((space, p, f) in space_and_function()) {
        let mo = MusielakOrlicz::new(space, YoungFunction::variable_exponent(p).unwrap()).unwrap();
        if !f.is_zero() {
            let r = mo.check_equivalence(&f).unwrap();
            prop_assert!((1.0 - 1e-9..=2.0 + 1e-9).contains(&r), "ratio {}", r);
        }
    }

    #[test]
    fn amemiya_objective_is_unimodal((space, p, f) in space_and_function()) {
        prop_assume!(!f.is_zero());
        let mo = MusielakOrlicz::new(space, YoungFunction::variable_exponent(p).unwrap()).unwrap();
        let values: Vec<f64> = grid(1e-3, 1e3, 200, true)
            .into_iter()
            .map(|l| mo.amemiya_objective(&f, l).unwrap().to_f64())
            .collect();
        let turns = values.windows(2).map(|w| w[1] > w[0] * (1.0 + 1e-12)).collect::<Vec<_>>();
        let first_up = turns.iter().position(|&u| u).unwrap_or(turns.len());
        prop_assert!(turns[first_up..].iter().all(|&u| u), "objective is not unimodal");
    }

    #[test]
    fn transforms_are_involutions(depth in 1usize..7, atoms in 1usize..4, seed in any::<u64>(), bits in any::<u64>()) {
        let f = random_martingale(depth, atoms, 1.0, &YNorm::Fiber(0), seed).unwrap();
        let s = SignSequence::from_bits(depth, bits & ((1 << depth) - 1));
        let size = f.leaves().iter().fold(1.0, |m: f64, v| m.max(v.abs()));
        let back = f.transform(&s).unwrap().transform(&s).unwrap();
        let plus = f.transform(&SignSequence::constant(depth, 1)).unwrap();
        for g in [&back, &plus] {
            for (a, b) in g.leaves().iter().zip(f.leaves()) {
                prop_assert!((a - b).abs() <= 1e-12 * size);
            }
        }
        let minus = f.transform(&SignSequence::constant(depth, -1)).unwrap();
        let norm = YNorm::Fiber(0);
        let (a, b) = (minus.lp_omega_norm(2.5, &norm).unwrap(), f.lp_omega_norm(2.5, &norm).unwrap());
        prop_assert!((a - b).abs() <= 1e-12 * b.max(1e-300));
    }

    #[test]
    fn fibers_are_nonnegative_submartingales(depth in 1usize..8, atoms in 1usize..4, seed in any::<u64>()) {
        let f = random_martingale(depth, atoms, 2.0, &YNorm::Fiber(0), seed).unwrap();
        for t in 0..atoms {
            prop_assert!(f.abs_fiber(t).unwrap().check_nonnegative_submartingale().is_ok());
        }
    }

    #[test]
    fn tree_csv_round_trips(depth in 1usize..6, atoms in 1usize..4, seed in any::<u64>()) {
        let f = random_martingale(depth, atoms, 1.0, &YNorm::Fiber(0), seed).unwrap();
        let ids: Vec<String> = (0..atoms).map(|i| format!("t{i}")).collect();
        let mut buf = Vec::new();
        write_tree_csv(&mut buf, &f, &ids).unwrap();
        let (g, back) = read_tree_csv(buf.as_slice()).unwrap();
        prop_assert_eq!(back, ids);
        prop_assert_eq!(g, f);
    }

    #[test]
    fn beta_times_zeta_is_fixed(p in 1.01..20.0f64, k in 1.01..50.0f64, c in 1.0..1e6f64, h in 2.0..10.0f64) {
        let z = zeta_lower(k, c, h).unwrap();
        let b = beta_upper(p, k, c, h).unwrap();
        let target = 72.0 * (p + 1.0).powi(2) / (p - 1.0);
        prop_assert!((b * z - target).abs() <= 4.0 * f64::EPSILON * target);
    }

    #[test]
    fn c_kx_grows_with_k(k in 1.01..30.0f64, dk in 0.01..10.0f64, zeta in 0.05..1.0f64) {
        let (_, a) = c_kx_bound(k, zeta).unwrap();
        let (_, b) = c_kx_bound(k + dk, zeta).unwrap();
        prop_assert!(b > a);
    }

    #[test]
    fn certification_matches_interval(ratio in 0.5..1e7f64, k in 1.5..8.0f64) {
        let report = ConstantsReport::from_constants(k, 0.0, k, 0.0, 1.0, &[2.0]).unwrap();
        report.check_invariants().unwrap();
        let c = certify_ratio(ratio, &report, 2.0).unwrap();
        prop_assert_eq!(c.certified, ratio >= 1.0 - 1e-9 && ratio <= c.beta_upper);
        prop_assert_eq!(c_h(0.0, k, 0.0).unwrap(), report.c_h);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn search_is_monotone_in_budget(seed in any::<u64>(), r in 1usize..4, s in 1usize..20) {
        let norm = YNorm::Fiber(0);
        let small = estimate_umd(&norm, 1, 3.0, 4, Budget::new(r, s).unwrap(), seed).unwrap();
        let more_steps = estimate_umd(&norm, 1, 3.0, 4, Budget::new(r, s + 7).unwrap(), seed).unwrap();
        let more_restarts = estimate_umd(&norm, 1, 3.0, 4, Budget::new(r + 2, s).unwrap(), seed).unwrap();
        prop_assert!(more_steps.best_ratio >= small.best_ratio);
        prop_assert!(more_restarts.best_ratio >= small.best_ratio);
    }
}
