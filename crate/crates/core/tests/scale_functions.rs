use levystop_core::{LevyModel, ScaleFunction};
use rand::{Rng, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;

const BM: LevyModel = LevyModel::BrownianDrift { m: 0.0, sigma: 1.0 };

fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for i in 1..n {
        s += f(a + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    s * h / 3.0
}

#[test]
fn brownian_sinh_form() {
    for q in [0.3, 1.0, 2.5] {
        let sf = ScaleFunction::new(&BM, q).unwrap();
        let k = (2.0 * q).sqrt();
        for i in 0..=500 {
            let x = i as f64 * 0.01;
            let exact = 2.0 * (k * x).sinh() / k;
            assert!((sf.w(x) - exact).abs() <= 1e-6 * exact.max(1.0), "q={q} x={x}");
        }
    }
}

#[test]
fn laplace_round_trip() {
    let mut rng = Xoshiro256PlusPlus::seed_from_u64(21);
    for model in [
        BM,
        LevyModel::SpectNegKou {
            m: 0.1,
            sigma: 0.5,
            a: 1.0,
            eta2: 2.0,
        },
    ] {
        let q = 0.7;
        let sf = ScaleFunction::new(&model, q).unwrap();
        let phi = sf.phi();
        for _ in 0..20 {
            let beta = phi + rng.random_range(0.5..4.0);
            let k = beta - phi;
            // Tail beyond 40/k is below e^{-40} of the total.
            let top = 40.0 / k;
            let got = simpson(|x| (-beta * x).exp() * sf.w(x), 0.0, top, 8000);
            let want = 1.0 / (model.exponent(beta) - q);
            assert!((got - want).abs() < 1e-6 * want, "beta={beta}: {got} vs {want}");
        }
    }
}

#[test]
fn derivative_at_zero() {
    for sigma in [0.3, 1.0, 2.0] {
        let m = LevyModel::SpectNegKou {
            m: 0.2,
            sigma,
            a: 0.5,
            eta2: 3.0,
        };
        let sf = ScaleFunction::new(&m, 1.0).unwrap();
        let want = 2.0 / (sigma * sigma);
        assert!((sf.w_prime(0.0) - want).abs() < 1e-4);
        // The right limit, not just the stored value.
        let h = 1e-7;
        assert!(((sf.w(h) - sf.w(0.0)) / h - want).abs() < 1e-4 * want.max(1.0));
    }
}

#[test]
fn z_prime_is_q_w() {
    let q = 1.3;
    for model in [
        BM,
        LevyModel::SpectNegKou {
            m: -0.1,
            sigma: 0.8,
            a: 2.0,
            eta2: 1.5,
        },
    ] {
        let sf = ScaleFunction::new(&model, q).unwrap();
        let h = 1e-4;
        for i in 1..=20 {
            let x = 0.25 * i as f64;
            let fd = (sf.z(x + h) - sf.z(x - h)) / (2.0 * h);
            let want = q * sf.w(x);
            assert!((fd - want).abs() < 1e-5 * want.max(1.0), "x={x}: {fd} vs {want}");
        }
    }
}

#[test]
fn fit_combination_positive() {
    let sf = ScaleFunction::new(
        &LevyModel::SpectNegKou {
            m: 0.0,
            sigma: 0.4,
            a: 3.0,
            eta2: 1.0,
        },
        0.5,
    )
    .unwrap();
    for i in 0..=200 {
        let x = i as f64 * 0.05;
        assert!(sf.smooth_fit_combination(x) > 0.0, "{x}");
        let direct = sf.smooth_fit_combination_direct(x);
        assert!((direct - (sf.w_prime(x) - sf.phi() * sf.w(x))).abs() < 1e-6 * (1.0 + sf.w_prime(x)));
    }
    assert_eq!(sf.inversion_warnings(), 0);
}

#[test]
fn unsupported_families() {
    assert!(ScaleFunction::new(&LevyModel::NegPoisson { a: 1.0 }, 1.0).is_err());
    assert!(ScaleFunction::new(
        &LevyModel::ExpJD {
            m: 0.0,
            sigma: 1.0,
            a: 1.0,
            eta1: 2.0
        },
        1.0
    )
    .is_err());
    assert!(ScaleFunction::new(&BM, -1.0).is_err());
}
