mod common;

use common::{char_poly, closed_form_threshold, psi1_direct, random_problem, real_roots, FAMILIES};
use levystop_core::{kou_roots, psi1, threshold, LevyModel, ProblemSpec, Regime};
use rand::SeedableRng;
use rand_xoshiro::Xoshiro256PlusPlus;

fn spec(model: LevyModel, r: f64, alpha: f64, c: f64) -> ProblemSpec {
    ProblemSpec::new(model, r, alpha, c, 1.0).unwrap()
}

#[test]
fn fuzzed_thresholds_match_family_formulas() {
    let mut rng = Xoshiro256PlusPlus::seed_from_u64(11);
    for (f, name) in FAMILIES.iter().enumerate() {
        for _ in 0..40 {
            let (model, r, alpha, c) = random_problem(&mut rng, f);
            let th = threshold(&spec(model, r, alpha, c)).unwrap();
            let want = closed_form_threshold(&model, r, alpha, c);
            let rel = (th.b_c - want).abs() / want;
            assert!(rel < 1e-10, "{name} {model:?} r={r}: {} vs {want} ({rel:e})", th.b_c);
        }
    }
}

#[test]
fn psi1_matches_direct_formula() {
    let mut rng = Xoshiro256PlusPlus::seed_from_u64(3);
    for f in 0..5 {
        for _ in 0..20 {
            let (model, ..) = random_problem(&mut rng, f);
            assert!((psi1(&model) - psi1_direct(&model)).abs() < 1e-13);
        }
    }
}

#[test]
fn kou_roots_match_polynomial() {
    let mut rng = Xoshiro256PlusPlus::seed_from_u64(5);
    for _ in 0..50 {
        let (model, r, ..) = random_problem(&mut rng, 1);
        let ours = kou_roots(&model, r).unwrap().descending();
        let poly = real_roots(&char_poly(&model, r));
        assert_eq!(ours.len(), 4);
        for (a, b) in ours.iter().zip(&poly) {
            assert!((a - b).abs() < 1e-10 * (1.0 + b.abs()), "{ours:?} {poly:?}");
        }
    }
}

#[test]
fn standard_brownian_textbook_value() {
    for r in [0.6, 1.0, 2.0, 5.0] {
        let (alpha, c) = (1.3, 0.7);
        let th = threshold(&spec(LevyModel::BrownianDrift { m: 0.0, sigma: 1.0 }, r, alpha, c)).unwrap();
        let s = (2.0 * r).sqrt();
        let want = c * s * (r - 0.5) / (alpha * r * (s + 1.0));
        assert!((th.b_c - want).abs() < 1e-12 * want);
        let phi = th.phi_r.unwrap();
        assert!((th.b_c - c * (phi - 1.0) / (alpha * phi)).abs() < 1e-12);
    }
}

#[test]
fn neg_poisson_threshold_is_cost_ratio() {
    // e(r − ψ(1)) = er + ea − a, so the lattice formula collapses to c/α.
    for (a, r) in [(1.0, 0.2), (2.0, 0.5), (0.3, 3.0)] {
        let th = threshold(&spec(LevyModel::NegPoisson { a }, r, 2.0, 3.0)).unwrap();
        assert_eq!(th.regime, Regime::GDiscontinuous);
        assert!((th.b_c - 1.5).abs() < 1e-14, "{}", th.b_c);
    }
}

#[test]
fn spectneg_kou_is_kou_without_up_jumps() {
    let (m, sigma, a, eta2, r) = (0.05, 0.4, 1.2, 2.5, 0.8);
    let snk = threshold(&spec(LevyModel::SpectNegKou { m, sigma, a, eta2 }, r, 1.0, 1.0)).unwrap();
    let kou = LevyModel::KouJD {
        m,
        sigma,
        a,
        p: 1e-10,
        eta1: 4.0,
        eta2,
    };
    let want = closed_form_threshold(&kou, r, 1.0, 1.0);
    assert!((snk.b_c - want).abs() < 1e-6, "{} vs {want}", snk.b_c);
}

#[test]
fn expjd_with_vanishing_jumps_is_brownian() {
    let (m, sigma, r) = (-0.1, 0.6, 0.9);
    let bm = threshold(&spec(LevyModel::BrownianDrift { m, sigma }, r, 1.0, 2.0)).unwrap();
    let ej = threshold(&spec(
        LevyModel::ExpJD {
            m,
            sigma,
            a: 1e-10,
            eta1: 3.0,
        },
        r,
        1.0,
        2.0,
    ))
    .unwrap();
    assert!((bm.b_c - ej.b_c).abs() < 1e-6);
}

#[test]
fn threshold_below_cap() {
    let mut rng = Xoshiro256PlusPlus::seed_from_u64(9);
    for f in 0..5 {
        for _ in 0..10 {
            let (model, r, alpha, c) = random_problem(&mut rng, f);
            let s = spec(model, r, alpha, c);
            let th = threshold(&s).unwrap();
            assert!(th.b_c > 0.0 && th.b_c < s.threshold_cap());
            assert!(th.slope_ratio > 0.0 && th.slope_ratio < 1.0);
        }
    }
}

#[test]
fn discounting_violation_is_reported() {
    let err = ProblemSpec::new(LevyModel::BrownianDrift { m: 0.0, sigma: 1.0 }, 0.4, 1.0, 1.0, 1.0).unwrap_err();
    assert!(err.is_assumption());
    assert!(err.to_string().contains("psi(1) = 0.5"), "{err}");
}
