//! Independent oracles: characteristic roots from polynomial root finding
//! and the per-family threshold formulas written out by hand.
#![allow(dead_code)]

use levystop_core::LevyModel;
use num_complex::Complex64;

/// Coefficients lowest degree first.
fn mul(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

fn add(a: &[f64], b: &[f64]) -> Vec<f64> {
    let n = a.len().max(b.len());
    (0..n)
        .map(|i| a.get(i).unwrap_or(&0.0) + b.get(i).unwrap_or(&0.0))
        .collect()
}

fn eval(p: &[f64], z: Complex64) -> Complex64 {
    p.iter().rev().fold(Complex64::new(0.0, 0.0), |acc, &c| acc * z + c)
}

/// Real roots of a polynomial by Weierstrass iteration, polished with
/// Newton steps in real arithmetic. Descending.
pub fn real_roots(p: &[f64]) -> Vec<f64> {
    let n = p.len() - 1;
    let lead = p[n];
    let monic: Vec<f64> = p.iter().map(|c| c / lead).collect();
    let radius = 1.0 + monic[..n].iter().fold(0.0f64, |m, c| m.max(c.abs()));
    let seed = Complex64::new(0.4, 0.9);
    let mut z: Vec<Complex64> = (0..n).map(|k| seed.powu(k as u32) * radius).collect();
    for _ in 0..2000 {
        let mut moved = 0.0f64;
        for i in 0..n {
            let mut den = Complex64::new(1.0, 0.0);
            for j in 0..n {
                if i != j {
                    den *= z[i] - z[j];
                }
            }
            let step = eval(&monic, z[i]) / den;
            z[i] -= step;
            moved = moved.max(step.norm() / (1.0 + z[i].norm()));
        }
        if moved < 1e-15 {
            break;
        }
    }
    let dp: Vec<f64> = (1..=n).map(|k| k as f64 * monic[k]).collect();
    let mut out: Vec<f64> = z
        .iter()
        .filter(|c| c.im.abs() < 1e-7 * (1.0 + c.re.abs()))
        .map(|c| {
            let mut x = c.re;
            for _ in 0..8 {
                let f = eval(&monic, Complex64::new(x, 0.0)).re;
                let d = eval(&dp, Complex64::new(x, 0.0)).re;
                if d == 0.0 {
                    break;
                }
                x -= f / d;
            }
            x
        })
        .collect();
    out.sort_by(|a, b| b.total_cmp(a));
    out
}

/// (ψ(β) − r) times the jump denominators, as a polynomial in β.
pub fn char_poly(model: &LevyModel, r: f64) -> Vec<f64> {
    let diff = |m: f64, s: f64| vec![-r, m, 0.5 * s * s];
    match *model {
        LevyModel::BrownianDrift { m, sigma } => diff(m, sigma),
        LevyModel::KouJD {
            m,
            sigma,
            a,
            p,
            eta1,
            eta2,
        } => {
            let up = [eta1, -1.0];
            let down = [eta2, 1.0];
            let base = mul(&mul(&diff(m, sigma), &up), &down);
            let jumps = add(&mul(&[0.0, a * p], &down), &mul(&[0.0, -a * (1.0 - p)], &up));
            add(&base, &jumps)
        }
        LevyModel::ExpJD { m, sigma, a, eta1 } => add(&mul(&diff(m, sigma), &[eta1, -1.0]), &[0.0, a]),
        LevyModel::SpectNegKou { m, sigma, a, eta2 } => add(&mul(&diff(m, sigma), &[eta2, 1.0]), &[0.0, -a]),
        LevyModel::NegPoisson { .. } => panic!("no polynomial form"),
    }
}

pub fn psi1_direct(model: &LevyModel) -> f64 {
    match *model {
        LevyModel::BrownianDrift { m, sigma } => m + 0.5 * sigma * sigma,
        LevyModel::KouJD {
            m,
            sigma,
            a,
            p,
            eta1,
            eta2,
        } => m + 0.5 * sigma * sigma + a * (p * eta1 / (eta1 - 1.0) + (1.0 - p) * eta2 / (eta2 + 1.0) - 1.0),
        LevyModel::ExpJD { m, sigma, a, eta1 } => m + 0.5 * sigma * sigma + a / (eta1 - 1.0),
        LevyModel::SpectNegKou { m, sigma, a, eta2 } => m + 0.5 * sigma * sigma - a / (eta2 + 1.0),
        LevyModel::NegPoisson { a } => a * ((-1f64).exp() - 1.0),
    }
}

/// B_c from the per-family closed forms, roots from [`real_roots`].
pub fn closed_form_threshold(model: &LevyModel, r: f64, alpha: f64, c: f64) -> f64 {
    let p1 = psi1_direct(model);
    match *model {
        LevyModel::BrownianDrift { .. } | LevyModel::SpectNegKou { .. } => {
            let phi = real_roots(&char_poly(model, r))[0];
            c * (phi - 1.0) / (alpha * phi)
        }
        LevyModel::KouJD { eta2, .. } => {
            let roots = real_roots(&char_poly(model, r));
            assert_eq!(roots.len(), 4, "{roots:?}");
            let (p2, p3) = (roots[2], roots[3]);
            c * (r - p1) * p2 * p3 * (eta2 + 1.0) / (r * alpha * eta2 * (1.0 - p2) * (1.0 - p3))
        }
        LevyModel::ExpJD { .. } => {
            let roots = real_roots(&char_poly(model, r));
            let lam = -roots[roots.len() - 1];
            c * lam * (r - p1) / (alpha * r * (lam + 1.0))
        }
        LevyModel::NegPoisson { a } => {
            let e = 1f64.exp();
            c * e * (r - p1) / (alpha * (e * r + e * a - a))
        }
    }
}

pub fn uniform(rng: &mut impl rand::Rng, lo: f64, hi: f64) -> f64 {
    lo + (hi - lo) * rng.random::<f64>()
}

/// A random admissible problem of the given family index 0..5
/// (brownian, kou, expjd, neg_poisson, spectneg_kou).
pub fn random_problem(rng: &mut impl rand::Rng, family: usize) -> (LevyModel, f64, f64, f64) {
    let m = uniform(rng, -0.5, 0.5);
    let sigma = uniform(rng, 0.15, 1.2);
    let a = uniform(rng, 0.1, 3.0);
    let model = match family {
        0 => LevyModel::BrownianDrift { m, sigma },
        1 => LevyModel::KouJD {
            m,
            sigma,
            a,
            p: uniform(rng, 0.05, 0.95),
            eta1: uniform(rng, 1.5, 10.0),
            eta2: uniform(rng, 0.5, 10.0),
        },
        2 => LevyModel::ExpJD {
            m,
            sigma,
            a,
            eta1: uniform(rng, 1.5, 10.0),
        },
        3 => LevyModel::NegPoisson { a },
        _ => LevyModel::SpectNegKou {
            m,
            sigma,
            a,
            eta2: uniform(rng, 0.5, 10.0),
        },
    };
    let r = psi1_direct(&model).max(0.0) + uniform(rng, 0.05, 2.0);
    (model, r, uniform(rng, 0.2, 5.0), uniform(rng, 0.1, 10.0))
}

pub const FAMILIES: [&str; 5] = ["brownian", "kou", "expjd", "neg_poisson", "spectneg_kou"];
