use proptest::prelude::*;

use pdtrim::cli::Grid;
use pdtrim::densities::{ln_k_n, ln_k_n_product, GrFamily};
use pdtrim::fit::{fit_alpha_given_r, select_r, RankedData};
use pdtrim::levy::{sample_ordered_jumps, sample_pd, StableParams};
use pdtrim::nbproc::{ratios_from_jumps, sample_nb, total_mass, NBParams, PointMeasure};
use pdtrim::rng::{par_draws, Stream};
use pdtrim::sizebias::{residual_fractions, size_biased_permutation, stick_reconstruct};
use pdtrim::verify::{params, Method, VerificationReport};
use rand::Rng as _;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn pd_sample_is_a_ranked_subprobability(alpha in 0.05f64..0.95, r in 0usize..6, depth in 1usize..30, seed in any::<u64>()) {
        let p = StableParams::new(alpha, 1.0).unwrap();
        let s = sample_pd(&p, r, depth, 1e-4, &mut Stream::new(seed).rng()).unwrap();
        prop_assert_eq!(s.values.len(), depth);
        prop_assert!(s.values.windows(2).all(|w| w[0] >= w[1]));
        prop_assert!(s.values.iter().all(|&v| v > 0.0 && v < 1.0));
        prop_assert!((s.values.iter().sum::<f64>() + s.tail_fraction - 1.0).abs() < 1e-12);
    }

    #[test]
    fn ratio_measure_lives_in_the_unit_interval(alpha in 0.05f64..0.95, r in 1usize..6, seed in any::<u64>()) {
        let p = StableParams::new(alpha, 2.5).unwrap();
        let js = sample_ordered_jumps(&p, 1.0, r + 20, &mut Stream::new(seed).rng()).unwrap();
        let m = ratios_from_jumps(&js, r).unwrap();
        prop_assert_eq!(m.len(), 20);
        prop_assert!(m.points.iter().all(|&x| x > 0.0 && x <= 1.0));
    }

    #[test]
    fn size_biased_picks_rebuild_from_fractions(points in prop::collection::vec(0.01f64..0.99, 1..20), extra in 0.0f64..0.5, seed in any::<u64>()) {
        let m = PointMeasure::new(points.clone(), 0.0, extra).unwrap();
        let n = points.len();
        let d = size_biased_permutation(&m, n, &mut Stream::new(seed).rng()).unwrap();
        prop_assert!(d.totals.windows(2).all(|w| w[1] <= w[0]));
        prop_assert!(d.picks.iter().all(|p| points.contains(p)));
        let u = residual_fractions(&d);
        if u.iter().all(|&x| x > 0.0 && x < 1.0) {
            let v = stick_reconstruct(&u).unwrap();
            for (a, b) in v.iter().zip(d.normalized_picks()) {
                prop_assert!((a - b).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn nb_points_are_above_the_threshold(alpha in 0.1f64..0.9, r in 0.5f64..5.0, eps in 1e-3f64..0.5, seed in any::<u64>()) {
        let m = sample_nb(&NBParams::new(alpha, r).unwrap(), eps, &mut Stream::new(seed).rng()).unwrap();
        prop_assert!(m.points.iter().all(|&x| x >= eps && x < 1.0));
        prop_assert!(total_mass(&m) >= m.points.iter().sum::<f64>());
    }

    #[test]
    fn kn_closed_forms_agree(alpha in 0.05f64..0.95, n in 1usize..12) {
        prop_assert!((ln_k_n(alpha, n) - ln_k_n_product(alpha, n)).abs() < 1e-10);
    }

    #[test]
    fn fit_is_invariant_under_power_of_two_scaling(seed in any::<u64>(), k in -20i32..20) {
        let p = StableParams::new(0.6, 1.0).unwrap();
        let w = sample_ordered_jumps(&p, 1.0, 60, &mut Stream::new(seed).rng()).unwrap().jumps;
        let a = RankedData::new(w.clone(), "a").unwrap();
        let b = RankedData::new(w.iter().map(|x| x * 2f64.powi(k)).collect(), "b").unwrap();
        let fa = select_r(&a, 5, None).unwrap();
        let fb = select_r(&b, 5, None).unwrap();
        prop_assert_eq!(fa, fb);
    }

    #[test]
    fn fit_is_invariant_under_scaling(seed in any::<u64>(), k in 1e-6f64..1e6) {
        let p = StableParams::new(0.6, 1.0).unwrap();
        let w = sample_ordered_jumps(&p, 1.0, 60, &mut Stream::new(seed).rng()).unwrap().jumps;
        let a = RankedData::new(w.clone(), "a").unwrap();
        let b = RankedData::new(w.iter().map(|x| x * k).collect(), "b").unwrap();
        for r in 0..5 {
            let (xa, ra) = fit_alpha_given_r(&a, r, None).unwrap();
            let (xb, rb) = fit_alpha_given_r(&b, r, None).unwrap();
            prop_assert!((xa - xb).abs() < 1e-12 && (ra - rb).abs() <= 1e-12 * ra.max(1e-300));
        }
    }

    #[test]
    fn grids_have_the_requested_points(lo in -5.0f64..5.0, width in 0.001f64..10.0, count in 2usize..500) {
        let g: Grid = format!("{lo}:{}:{count}", lo + width).parse().unwrap();
        let p = g.points();
        prop_assert_eq!(p.len(), count);
        prop_assert_eq!(p[0], lo);
        prop_assert_eq!(p[count - 1], lo + width);
        prop_assert!(p.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn reports_round_trip_through_json(stat in -1e3f64..1e3, exp in -1e3f64..1e3, se in 1e-6f64..10.0, fam in 1usize..50) {
        let r = VerificationReport::monte_carlo_diff("x", params([("alpha", 0.5.into()), ("r", 2usize.into())]), stat, exp, se, fam);
        let back: VerificationReport = serde_json::from_str(&serde_json::to_string(&r).unwrap()).unwrap();
        prop_assert_eq!(back, r);
    }
}

#[test]
fn density_is_nonnegative_on_its_range() {
    for (a, r) in [(0.3, 1.0), (0.5, 2.0), (0.7, 5.0), (0.2, 3.0)] {
        let fam = GrFamily::new(a, r, 1).unwrap();
        let g = fam.get(0).unwrap();
        for i in 1..2000 {
            let t = g.t_max * i as f64 / 2000.0;
            assert!(g.eval(t).unwrap() >= 0.0, "g at alpha {a} r {r} t {t}");
        }
    }
}

#[test]
fn draws_do_not_depend_on_the_thread_pool() {
    let draw = |threads| {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        pool.install(|| par_draws(Stream::new(11), 10_000, |rng| rng.gen::<u64>()))
    };
    assert_eq!(draw(1), draw(3));
}

#[test]
fn failed_reports_keep_their_error() {
    let r = VerificationReport::failed("x", params([]), Method::Quadrature, "boom");
    assert!(!r.pass && r.error.as_deref() == Some("boom"));
    assert!(!r.clone().control().pass);
}
