mod common;

use common::random_problem;
use levystop_core::{threshold, HittingTransforms, LevyModel, ProblemSpec, ValueFunction};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_xoshiro::Xoshiro256PlusPlus;

fn problem(family: usize, seed: u64, v: f64) -> ProblemSpec {
    let mut rng = Xoshiro256PlusPlus::seed_from_u64(seed);
    let (model, r, alpha, c) = random_problem(&mut rng, family);
    ProblemSpec::new(model, r, alpha, c, v).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn threshold_scales_with_cost_ratio(family in 0usize..5, seed: u64, k in 0.1f64..10.0) {
        let s = problem(family, seed, 1.0);
        let b = threshold(&s).unwrap().b_c;
        let scaled = ProblemSpec::new(*s.model(), s.r(), s.alpha(), k * s.c(), 1.0).unwrap();
        let bk = threshold(&scaled).unwrap().b_c;
        prop_assert!((bk - k * b).abs() <= 1e-12 * k * b);
        let both = ProblemSpec::new(*s.model(), s.r(), k * s.alpha(), k * s.c(), 1.0).unwrap();
        prop_assert!((threshold(&both).unwrap().b_c - b).abs() <= 1e-12 * b);
    }

    #[test]
    fn value_function_shape(family in 0usize..5, seed: u64) {
        let s = problem(family, seed, 1.0);
        let th = threshold(&s).unwrap();
        let vf = ValueFunction::new(&s, &th).unwrap();
        let b = th.b_c;
        prop_assert!(b > 0.0 && b <= th.positivity_bound * (1.0 + 1e-12));
        let cr = s.c() / s.r();
        let vs: Vec<f64> = (1..=60).map(|i| b * 0.05 * i as f64 * 1.15f64.powi(i / 4)).collect();
        let mut prev = 0.0;
        for &v in &vs {
            let w = vf.w(v);
            let sv = vf.s(v);
            if v <= b {
                prop_assert_eq!(w, 0.0);
            }
            prop_assert!(w >= prev - 1e-12 * (1.0 + w), "w not monotone at {}", v);
            prev = w;
            prop_assert!(sv >= -1e-12 && sv <= cr * (1.0 + 1e-12), "s({})={} outside [0, c/r]", v, sv);
            prop_assert!(sv >= vf.payoff(v) - 1e-12 * cr);
        }
    }

    #[test]
    fn s_is_convex(family in 0usize..5, seed: u64, pts in prop::collection::vec((0.01f64..20.0, 0.01f64..20.0, 0.01f64..20.0), 50)) {
        let s = problem(family, seed, 1.0);
        let th = threshold(&s).unwrap();
        let vf = ValueFunction::new(&s, &th).unwrap();
        let cr = s.c() / s.r();
        for (a, b, c) in pts {
            let mut x = [a * th.b_c, b * th.b_c, c * th.b_c];
            x.sort_by(f64::total_cmp);
            if x[2] - x[0] < 1e-6 * x[2] {
                continue;
            }
            let t = (x[1] - x[0]) / (x[2] - x[0]);
            let chord = (1.0 - t) * vf.s(x[0]) + t * vf.s(x[2]);
            prop_assert!(vf.s(x[1]) <= chord + 1e-9 * cr, "chord test fails at {:?}", x);
        }
    }

    #[test]
    fn smooth_fit_and_convexity(family in prop::sample::select(vec![0usize, 1, 2, 4]), seed: u64) {
        let s = problem(family, seed, 1.0);
        let th = threshold(&s).unwrap();
        let rep = ValueFunction::new(&s, &th).unwrap().convexity_report().unwrap();
        prop_assert!(rep.tangency_error < 1e-6, "{:?}", rep);
        prop_assert!(rep.passed(), "{:?}", rep);
    }

    #[test]
    fn passage_transforms_ordered(family in 0usize..5, seed: u64, x in -5.0f64..-1e-3, dx in 0.0f64..1.0) {
        let s = problem(family, seed, 1.0);
        let t = HittingTransforms::from_spec(&s).unwrap();
        let (l, g) = (t.laplace_l(x), t.laplace_g(x));
        prop_assert!(l > 0.0 && l <= 1.0);
        prop_assert!(g > 0.0 && g <= l * x.exp() * (1.0 + 1e-12));
        prop_assert!(t.laplace_l(x - dx) <= l * (1.0 + 1e-12));
    }
}

#[test]
fn spectneg_kou_convexity_holds_on_edge_parameters() {
    // Heavy, frequent down jumps and little diffusion.
    let model = LevyModel::SpectNegKou {
        m: 0.5,
        sigma: 0.1,
        a: 5.0,
        eta2: 0.5,
    };
    let s = ProblemSpec::new(model, 0.5, 1.0, 1.0, 1.0).unwrap();
    let th = threshold(&s).unwrap();
    assert!(th.warnings.is_empty(), "{:?}", th.warnings);
    assert!(ValueFunction::new(&s, &th).unwrap().convexity_report().unwrap().passed());
}
