//! Real roots of the characteristic equations ψ(β) = r.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::LevyModel;

/// Bisection down to adjacent floating point numbers. `f(lo)` and `f(hi)`
/// must have opposite signs (zero counts as either).
pub(crate) fn bisect<F: Fn(f64) -> f64>(f: F, mut lo: f64, mut hi: f64, what: &str) -> Result<f64> {
    let flo = f(lo);
    let fhi = f(hi);
    if flo == 0.0 {
        return Ok(lo);
    }
    if fhi == 0.0 {
        return Ok(hi);
    }
    if flo.is_nan() || fhi.is_nan() || flo.signum() == fhi.signum() {
        return Err(Error::Bracket(format!(
            "{what}: no sign change on [{lo}, {hi}] (f = {flo}, {fhi})"
        )));
    }
    let lo_neg = flo < 0.0;
    for _ in 0..2000 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let fm = f(mid);
        if fm == 0.0 {
            return Ok(mid);
        }
        if (fm < 0.0) == lo_neg {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(if f(lo).abs() <= f(hi).abs() { lo } else { hi })
}

/// Root of an eventually positive function to the right of `lo`, where
/// `f(lo) < 0`. The search interval is doubled until the sign flips.
pub(crate) fn right_root_unbounded<F: Fn(f64) -> f64>(f: F, lo: f64, what: &str) -> Result<f64> {
    let mut step = 1.0_f64.max(lo.abs());
    let mut a = lo;
    loop {
        let hi = lo + step;
        if !hi.is_finite() || step > 1e300 {
            return Err(Error::Bracket(format!("{what}: no sign change right of {lo}")));
        }
        if f(hi) > 0.0 {
            return bisect(&f, a, hi, what);
        }
        a = hi;
        step *= 2.0;
    }
}

/// Mirror image of [`right_root_unbounded`].
pub(crate) fn left_root_unbounded<F: Fn(f64) -> f64>(f: F, hi: f64, what: &str) -> Result<f64> {
    right_root_unbounded(|x| f(-x), -hi, what).map(|x| -x)
}

/// A point just beside `pole` on the requested side, moved closer when
/// needed so that `f` already has the sign it takes at the pole.
fn beside_pole<F: Fn(f64) -> f64>(f: &F, pole: f64, right: bool, want_positive: bool) -> f64 {
    let mut d = 1e-9 * (1.0 + pole.abs());
    let sgn = if right { 1.0 } else { -1.0 };
    let mut x = pole + sgn * d;
    for _ in 0..12 {
        let fx = f(x);
        if fx.is_finite() && (fx > 0.0) == want_positive {
            return x;
        }
        d *= 1e-3;
        let nx = pole + sgn * d;
        if nx == pole {
            break;
        }
        x = nx;
    }
    x
}

/// Real roots of ψ(β) = r for the double exponential family and its
/// one-sided special cases. Slots that do not exist for a family are `None`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KouRoots {
    /// Positive root beyond the up-jump pole.
    pub psi0: Option<f64>,
    /// Smallest positive root.
    pub psi1: Option<f64>,
    /// Largest negative root.
    pub psi2: Option<f64>,
    /// Negative root beyond the down-jump pole.
    pub psi3: Option<f64>,
}

impl KouRoots {
    /// Present roots in descending order.
    pub fn descending(&self) -> Vec<f64> {
        [self.psi0, self.psi1, self.psi2, self.psi3]
            .into_iter()
            .flatten()
            .collect()
    }

    /// (ψ2, ψ3), required by the downward passage transforms.
    pub fn negative_pair(&self) -> Result<(f64, f64)> {
        match (self.psi2, self.psi3) {
            (Some(a), Some(b)) => Ok((a, b)),
            _ => Err(Error::Unsupported {
                operation: "negative root pair",
                family: "expjd",
            }),
        }
    }
}

/// Solves ψ(β) = r inside each analytic bracket.
pub fn kou_roots(model: &LevyModel, r: f64) -> Result<KouRoots> {
    if !(r > 0.0) {
        return Err(Error::param("r", format!("must be > 0, got {r}")));
    }
    model.validate()?;
    let f = |b: f64| model.exponent(b) - r;
    let up = |eta1: f64| -> Result<(f64, f64)> {
        let below = beside_pole(&f, eta1, false, true);
        let above = beside_pole(&f, eta1, true, false);
        let p1 = bisect(f, 0.0, below, "psi1")?;
        let p0 = right_root_unbounded(f, above, "psi0")?;
        Ok((p0, p1))
    };
    let down = |eta2: f64| -> Result<(f64, f64)> {
        let above = beside_pole(&f, -eta2, true, true);
        let below = beside_pole(&f, -eta2, false, false);
        let p2 = bisect(f, above, 0.0, "psi2")?;
        let p3 = left_root_unbounded(f, below, "psi3")?;
        Ok((p2, p3))
    };
    match *model {
        LevyModel::KouJD { eta1, eta2, .. } => {
            let (p0, p1) = up(eta1)?;
            let (p2, p3) = down(eta2)?;
            Ok(KouRoots {
                psi0: Some(p0),
                psi1: Some(p1),
                psi2: Some(p2),
                psi3: Some(p3),
            })
        }
        LevyModel::ExpJD { eta1, .. } => {
            let (p0, p1) = up(eta1)?;
            Ok(KouRoots {
                psi0: Some(p0),
                psi1: Some(p1),
                psi2: None,
                psi3: None,
            })
        }
        LevyModel::SpectNegKou { eta2, .. } => {
            let p1 = right_root_unbounded(f, 0.0, "psi1")?;
            let (p2, p3) = down(eta2)?;
            Ok(KouRoots {
                psi0: None,
                psi1: Some(p1),
                psi2: Some(p2),
                psi3: Some(p3),
            })
        }
        _ => Err(Error::Unsupported {
            operation: "kou_roots",
            family: model.family().name(),
        }),
    }
}

/// The single negative root of ψ(β) = r for a process without negative
/// jumps, reported by its magnitude.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EmeryRoot {
    /// λ̄ > 0 with ψ(−λ̄) = r.
    pub lam_bar: f64,
}

pub fn emery_root(model: &LevyModel, r: f64) -> Result<EmeryRoot> {
    if !matches!(model, LevyModel::ExpJD { .. }) {
        return Err(Error::Unsupported {
            operation: "emery_root",
            family: model.family().name(),
        });
    }
    if !(r > 0.0) {
        return Err(Error::param("r", format!("must be > 0, got {r}")));
    }
    model.validate()?;
    let root = left_root_unbounded(|b| model.exponent(b) - r, 0.0, "lam_bar")?;
    Ok(EmeryRoot { lam_bar: -root })
}

/// Positive roots of ψ(β) − rβ = 0, the exponent of X_t − rt at zero
/// discount. They drive the upward passage of X_t − rt. The second slot is
/// the root beyond the up-jump pole when there is one.
pub fn drifted_up_roots(model: &LevyModel, r: f64) -> Result<(f64, Option<f64>)> {
    model.validate()?;
    let f = |b: f64| model.exponent(b) - r * b;
    if !(f(1.0) < 0.0) {
        return Err(Error::Assumption(format!(
            "requires r > psi(1) = {}, got r = {r}",
            model.exponent(1.0)
        )));
    }
    match *model {
        LevyModel::BrownianDrift { m, sigma } => Ok((2.0 * (r - m) / (sigma * sigma), None)),
        LevyModel::SpectNegKou { .. } => Ok((right_root_unbounded(f, 1.0, "upward root")?, None)),
        LevyModel::KouJD { eta1, .. } | LevyModel::ExpJD { eta1, .. } => {
            let below = beside_pole(&f, eta1, false, true);
            let above = beside_pole(&f, eta1, true, false);
            let b1 = bisect(f, 1.0, below, "upward root")?;
            let b0 = right_root_unbounded(f, above, "upward root beyond pole")?;
            Ok((b1, Some(b0)))
        }
        LevyModel::NegPoisson { .. } => Err(Error::Unsupported {
            operation: "upward passage roots",
            family: "neg_poisson",
        }),
    }
}

/// Closed form of E[e^{−rR_n + X_{R_n}}; R_n < ∞] where R_n is the first
/// time X_t − rt reaches ln n, for n ≥ 1.
pub fn class_d_closed_form(model: &LevyModel, r: f64, n: f64) -> Result<f64> {
    if !(n >= 1.0) {
        return Err(Error::param("n", format!("must be >= 1, got {n}")));
    }
    if let LevyModel::NegPoisson { .. } = model {
        // X_t − rt never rises above 0.
        return Ok(if n == 1.0 { 1.0 } else { 0.0 });
    }
    let (b1, b0) = drifted_up_roots(model, r)?;
    match (*model, b0) {
        (LevyModel::KouJD { eta1, .. } | LevyModel::ExpJD { eta1, .. }, Some(b0)) => {
            let d = (b0 - b1) * (eta1 - 1.0);
            Ok(n.powf(1.0 - b1) * (eta1 - b1) * (b0 - 1.0) / d
                + n.powf(1.0 - b0) * (b0 - eta1) * (b1 - 1.0) / d)
        }
        _ => Ok(n.powf(1.0 - b1)),
    }
}
