//! Parametric Lévy families, their Laplace exponents and the problem
//! specification.

use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::roots;

/// The five supported Lévy families. `X = −N` for [`LevyModel::NegPoisson`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", deny_unknown_fields)]
pub enum LevyModel {
    #[serde(rename = "brownian")]
    BrownianDrift { m: f64, sigma: f64 },
    /// Double exponential jumps: up with probability `p` at rate `eta1`,
    /// down with probability `1 − p` at rate `eta2`.
    #[serde(rename = "kou")]
    KouJD {
        m: f64,
        sigma: f64,
        a: f64,
        p: f64,
        eta1: f64,
        eta2: f64,
    },
    /// Exponential upward jumps only.
    #[serde(rename = "expjd")]
    ExpJD { m: f64, sigma: f64, a: f64, eta1: f64 },
    /// Unit downward jumps at rate `a`, no diffusion.
    #[serde(rename = "neg_poisson")]
    NegPoisson { a: f64 },
    /// Exponential downward jumps plus a nondegenerate diffusion.
    #[serde(rename = "spectneg_kou")]
    SpectNegKou { m: f64, sigma: f64, a: f64, eta2: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Brownian,
    Kou,
    Expjd,
    NegPoisson,
    SpectnegKou,
}

impl Family {
    pub fn name(self) -> &'static str {
        match self {
            Family::Brownian => "brownian",
            Family::Kou => "kou",
            Family::Expjd => "expjd",
            Family::NegPoisson => "neg_poisson",
            Family::SpectnegKou => "spectneg_kou",
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

fn finite(name: &'static str, x: f64) -> Result<()> {
    if x.is_finite() {
        Ok(())
    } else {
        Err(Error::param(name, format!("must be finite, got {x}")))
    }
}

fn positive(name: &'static str, x: f64) -> Result<()> {
    finite(name, x)?;
    if x > 0.0 {
        Ok(())
    } else {
        Err(Error::param(name, format!("must be > 0, got {x}")))
    }
}

fn up_rate(x: f64) -> Result<()> {
    finite("eta1", x)?;
    if x > 1.0 {
        Ok(())
    } else {
        Err(Error::param(
            "eta1",
            format!("must be > 1 so that E[e^Y] is finite, got {x}"),
        ))
    }
}

impl LevyModel {
    pub fn family(&self) -> Family {
        match self {
            LevyModel::BrownianDrift { .. } => Family::Brownian,
            LevyModel::KouJD { .. } => Family::Kou,
            LevyModel::ExpJD { .. } => Family::Expjd,
            LevyModel::NegPoisson { .. } => Family::NegPoisson,
            LevyModel::SpectNegKou { .. } => Family::SpectnegKou,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            LevyModel::BrownianDrift { m, sigma } => {
                finite("m", m)?;
                positive("sigma", sigma)
            }
            LevyModel::KouJD {
                m,
                sigma,
                a,
                p,
                eta1,
                eta2,
            } => {
                finite("m", m)?;
                positive("sigma", sigma)?;
                positive("a", a)?;
                finite("p", p)?;
                if !(p > 0.0 && p < 1.0) {
                    return Err(Error::param(
                        "p",
                        format!("must lie strictly inside (0, 1), got {p}; use expjd or spectneg_kou for the one-sided cases"),
                    ));
                }
                up_rate(eta1)?;
                positive("eta2", eta2)
            }
            LevyModel::ExpJD { m, sigma, a, eta1 } => {
                finite("m", m)?;
                positive("sigma", sigma)?;
                positive("a", a)?;
                up_rate(eta1)
            }
            LevyModel::NegPoisson { a } => positive("a", a),
            LevyModel::SpectNegKou { m, sigma, a, eta2 } => {
                finite("m", m)?;
                positive("sigma", sigma)?;
                positive("a", a)?;
                positive("eta2", eta2)
            }
        }
    }

    /// Gaussian volatility, zero for the pure-jump family.
    pub fn sigma(&self) -> f64 {
        match *self {
            LevyModel::BrownianDrift { sigma, .. }
            | LevyModel::KouJD { sigma, .. }
            | LevyModel::ExpJD { sigma, .. }
            | LevyModel::SpectNegKou { sigma, .. } => sigma,
            LevyModel::NegPoisson { .. } => 0.0,
        }
    }

    /// True when the process has no positive jumps.
    pub fn is_spectrally_negative(&self) -> bool {
        matches!(
            self,
            LevyModel::BrownianDrift { .. }
                | LevyModel::NegPoisson { .. }
                | LevyModel::SpectNegKou { .. }
        )
    }

    /// Right end of the domain of ψ on the real line (the up-jump pole).
    pub fn upper_pole(&self) -> Option<f64> {
        match *self {
            LevyModel::KouJD { eta1, .. } | LevyModel::ExpJD { eta1, .. } => Some(eta1),
            _ => None,
        }
    }

    /// Left end of the domain of ψ (the down-jump pole).
    pub fn lower_pole(&self) -> Option<f64> {
        match *self {
            LevyModel::KouJD { eta2, .. } | LevyModel::SpectNegKou { eta2, .. } => Some(-eta2),
            _ => None,
        }
    }

    /// ψ(β) for any real β strictly between the poles. No domain check.
    pub fn exponent(&self, b: f64) -> f64 {
        match *self {
            LevyModel::BrownianDrift { m, sigma } => m * b + 0.5 * sigma * sigma * b * b,
            LevyModel::KouJD {
                m,
                sigma,
                a,
                p,
                eta1,
                eta2,
            } => {
                let q = 1.0 - p;
                m * b
                    + 0.5 * sigma * sigma * b * b
                    + a * (p * b / (eta1 - b) - q * b / (eta2 + b))
            }
            LevyModel::ExpJD { m, sigma, a, eta1 } => {
                m * b + 0.5 * sigma * sigma * b * b + a * b / (eta1 - b)
            }
            LevyModel::NegPoisson { a } => a * (-b).exp_m1(),
            LevyModel::SpectNegKou { m, sigma, a, eta2 } => {
                m * b + 0.5 * sigma * sigma * b * b - a * b / (eta2 + b)
            }
        }
    }

    /// ψ′(β).
    pub fn exponent_derivative(&self, b: f64) -> f64 {
        match *self {
            LevyModel::BrownianDrift { m, sigma } => m + sigma * sigma * b,
            LevyModel::KouJD {
                m,
                sigma,
                a,
                p,
                eta1,
                eta2,
            } => {
                let q = 1.0 - p;
                m + sigma * sigma * b
                    + a * (p * eta1 / (eta1 - b).powi(2) - q * eta2 / (eta2 + b).powi(2))
            }
            LevyModel::ExpJD { m, sigma, a, eta1 } => {
                m + sigma * sigma * b + a * eta1 / (eta1 - b).powi(2)
            }
            LevyModel::NegPoisson { a } => -a * (-b).exp(),
            LevyModel::SpectNegKou { m, sigma, a, eta2 } => {
                m + sigma * sigma * b - a * eta2 / (eta2 + b).powi(2)
            }
        }
    }

    /// ψ continued to complex arguments.
    pub fn exponent_complex(&self, z: Complex64) -> Complex64 {
        let half_s2 = |s: f64| 0.5 * s * s;
        match *self {
            LevyModel::BrownianDrift { m, sigma } => z * m + z * z * half_s2(sigma),
            LevyModel::KouJD {
                m,
                sigma,
                a,
                p,
                eta1,
                eta2,
            } => {
                let q = 1.0 - p;
                z * m + z * z * half_s2(sigma) + a * (p * z / (eta1 - z) - q * z / (z + eta2))
            }
            LevyModel::ExpJD { m, sigma, a, eta1 } => {
                z * m + z * z * half_s2(sigma) + a * z / (eta1 - z)
            }
            LevyModel::NegPoisson { a } => ((-z).exp() - 1.0) * a,
            LevyModel::SpectNegKou { m, sigma, a, eta2 } => {
                z * m + z * z * half_s2(sigma) - a * z / (z + eta2)
            }
        }
    }
}

/// Laplace exponent ψ(λ) = log E[e^{λX_1}] for λ ≥ 0.
pub fn psi(model: &LevyModel, lam: f64) -> Result<f64> {
    if !(lam >= 0.0) || !lam.is_finite() {
        return Err(Error::Domain {
            what: "psi",
            value: lam,
            reason: "argument must be finite and >= 0".into(),
        });
    }
    if let Some(eta1) = model.upper_pole() {
        if lam >= eta1 {
            return Err(Error::Domain {
                what: "psi",
                value: lam,
                reason: format!("E[e^(lam X)] is infinite for lam >= eta1 = {eta1}"),
            });
        }
    }
    Ok(model.exponent(lam))
}

/// ψ(1), the growth rate of E[V_t].
pub fn psi1(model: &LevyModel) -> f64 {
    model.exponent(1.0)
}

/// Φ(q): the largest root of ψ(λ) = q for a spectrally negative model.
pub fn phi(model: &LevyModel, q: f64) -> Result<f64> {
    if !(q > 0.0) || !q.is_finite() {
        return Err(Error::Domain {
            what: "phi",
            value: q,
            reason: "argument must be finite and > 0".into(),
        });
    }
    match model {
        LevyModel::NegPoisson { .. } => Err(Error::Domain {
            what: "phi",
            value: q,
            reason: "psi is bounded above by 0 for X = -N, so psi(lam) = q has no root".into(),
        }),
        m if !m.is_spectrally_negative() => Err(Error::Unsupported {
            operation: "phi",
            family: m.family().name(),
        }),
        m => roots::right_root_unbounded(|b| m.exponent(b) - q, 0.0, "phi"),
    }
}

/// Outcome of the standing-assumption checks.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AssumptionReport {
    pub family: Family,
    /// E|X_1| < ∞ and E[e^{X_1}] < ∞.
    pub finite_mean: bool,
    /// r > ψ(1).
    pub discounting: bool,
    pub psi1: f64,
    pub r: f64,
    pub class_d: bool,
    pub class_d_basis: &'static str,
    /// Set for the pure-jump family, whose class-D argument differs.
    pub special_regime: Option<&'static str>,
}

impl AssumptionReport {
    pub fn all_hold(&self) -> bool {
        self.finite_mean && self.discounting && self.class_d
    }

    /// Human readable descriptions of each failed assumption.
    pub fn failures(&self) -> Vec<String> {
        let mut out = Vec::new();
        if !self.finite_mean {
            out.push("finite mean: E[e^Y] must be finite (eta1 > 1)".to_string());
        }
        if !self.discounting {
            out.push(format!(
                "discounting: requires r > psi(1) = {}, got r = {}",
                self.psi1, self.r
            ));
        }
        if !self.class_d {
            out.push("class D condition fails".to_string());
        }
        out
    }
}

/// Checks the assumptions for `model` with discount rate `r`. Never fails;
/// violations are reported through the flags.
pub fn check_assumptions(model: &LevyModel, r: f64) -> AssumptionReport {
    let family = model.family();
    let finite_mean = model.validate().is_ok();
    let psi1 = psi1(model);
    let (basis, special) = match family {
        Family::Brownian => (
            "continuous paths: E[exp(-r R_n + X_(R_n))] = n^(1 - 2(r - m)/sigma^2) -> 0",
            None,
        ),
        Family::Kou | Family::Expjd => (
            "upward passage transform of X - rt is a combination of n^(1 - beta) with both positive roots beta > 1",
            None,
        ),
        Family::SpectnegKou => (
            "no positive jumps: upward passage is continuous and the transform equals n^(1 - Phi) with Phi > 1",
            None,
        ),
        Family::NegPoisson => (
            "Y = X - rt is bounded above by 0, so the reward process is dominated",
            Some("pure jump with sigma = 0; class D follows from boundedness, not from the upward passage limit"),
        ),
    };
    AssumptionReport {
        family,
        finite_mean,
        discounting: r.is_finite() && r > psi1,
        psi1,
        r,
        class_d: true,
        class_d_basis: basis,
        special_regime: special,
    }
}

/// Unvalidated problem parameters, as read from a JSON document.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemInput {
    pub model: LevyModel,
    pub r: f64,
    pub alpha: f64,
    pub c: f64,
    pub v: f64,
}

/// A validated instance of the stopping problem.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(into = "ProblemInput")]
pub struct ProblemSpec {
    model: LevyModel,
    r: f64,
    alpha: f64,
    c: f64,
    v: f64,
    psi1: f64,
}

impl From<ProblemSpec> for ProblemInput {
    fn from(s: ProblemSpec) -> Self {
        ProblemInput {
            model: s.model,
            r: s.r,
            alpha: s.alpha,
            c: s.c,
            v: s.v,
        }
    }
}

impl TryFrom<ProblemInput> for ProblemSpec {
    type Error = Error;
    fn try_from(i: ProblemInput) -> Result<Self> {
        ProblemSpec::new(i.model, i.r, i.alpha, i.c, i.v)
    }
}

impl ProblemSpec {
    /// Validates every parameter. Violating r > ψ(1) yields
    /// [`Error::Assumption`]; anything else is an invalid parameter.
    pub fn new(model: LevyModel, r: f64, alpha: f64, c: f64, v: f64) -> Result<Self> {
        model.validate()?;
        positive("r", r)?;
        positive("alpha", alpha)?;
        finite("c", c)?;
        if c == 0.0 {
            return Err(Error::param(
                "c",
                "c = 0 is degenerate: the cash flow is then always positive and the optimal time is never to stop",
            ));
        }
        positive("c", c)?;
        positive("v", v)?;
        let report = check_assumptions(&model, r);
        if !report.all_hold() {
            return Err(Error::Assumption(report.failures().join("; ")));
        }
        Ok(ProblemSpec {
            model,
            r,
            alpha,
            c,
            v,
            psi1: report.psi1,
        })
    }

    pub fn model(&self) -> &LevyModel {
        &self.model
    }
    pub fn r(&self) -> f64 {
        self.r
    }
    pub fn alpha(&self) -> f64 {
        self.alpha
    }
    pub fn c(&self) -> f64 {
        self.c
    }
    pub fn v(&self) -> f64 {
        self.v
    }
    pub fn psi1(&self) -> f64 {
        self.psi1
    }

    /// r − ψ(1) > 0.
    pub fn growth_gap(&self) -> f64 {
        self.r - self.psi1
    }

    /// Same problem started from another firm value.
    pub fn with_v(&self, v: f64) -> Result<Self> {
        positive("v", v)?;
        Ok(ProblemSpec { v, ..*self })
    }

    /// Upper end of the interval of thresholds on which g stays positive,
    /// c(r − ψ(1))/(rα).
    pub fn threshold_cap(&self) -> f64 {
        self.c * self.growth_gap() / (self.r * self.alpha)
    }

    /// Payoff of stopping immediately, f(v) = −αv/(r − ψ(1)) + c/r.
    pub fn payoff(&self, v: f64) -> f64 {
        -self.alpha * v / self.growth_gap() + self.c / self.r
    }

    pub fn assumptions(&self) -> AssumptionReport {
        check_assumptions(&self.model, self.r)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn standard_brownian_growth() {
        let m = LevyModel::BrownianDrift { m: 0.0, sigma: 1.0 };
        assert_eq!(psi1(&m), 0.5);
        assert!((phi(&m, 2.0).unwrap() - 2.0).abs() < 1e-13);
    }

    #[test]
    fn kou_reference_value() {
        let m = LevyModel::KouJD {
            m: 0.1,
            sigma: 0.3,
            a: 1.0,
            p: 0.5,
            eta1: 3.0,
            eta2: 2.0,
        };
        let want = 0.1 + 0.045 + (1.5 / 2.0 + 1.0 / 3.0 - 1.0);
        assert!((psi(&m, 1.0).unwrap() - want).abs() < 1e-15);
        assert!(psi(&m, 3.0).is_err());
        assert_eq!(psi(&m, 0.0).unwrap(), 0.0);
        assert!(phi(&m, 1.0).is_err());
    }

    #[test]
    fn neg_poisson_has_no_right_inverse() {
        let m = LevyModel::NegPoisson { a: 1.0 };
        assert!(matches!(phi(&m, 0.3), Err(Error::Domain { .. })));
    }

    #[test]
    fn json_tags() {
        let m: LevyModel =
            serde_json::from_str(r#"{"family":"spectneg_kou","m":0,"sigma":0.4,"a":1,"eta2":2}"#)
                .unwrap();
        assert_eq!(m.family(), Family::SpectnegKou);
        let s = serde_json::to_string(&LevyModel::NegPoisson { a: 2.0 }).unwrap();
        assert_eq!(s, r#"{"family":"neg_poisson","a":2.0}"#);
        assert!(serde_json::from_str::<LevyModel>(r#"{"family":"brownian","m":0}"#).is_err());
    }

    #[test]
    fn spec_rejections() {
        let b = LevyModel::BrownianDrift { m: 0.0, sigma: 1.0 };
        assert!(ProblemSpec::new(b, 0.4, 1.0, 1.0, 1.0).unwrap_err().is_assumption());
        assert!(!ProblemSpec::new(b, 1.0, 1.0, 0.0, 1.0).unwrap_err().is_assumption());
        assert!(ProblemSpec::new(b, 1.0, 1.0, 1.0, -1.0).is_err());
        let k = LevyModel::KouJD {
            m: 0.0,
            sigma: 0.3,
            a: 1.0,
            p: 0.5,
            eta1: 1.0,
            eta2: 2.0,
        };
        assert!(ProblemSpec::new(k, 5.0, 1.0, 1.0, 1.0).is_err());
        let np = LevyModel::NegPoisson { a: 1.0 };
        assert!(check_assumptions(&np, 0.01).discounting);
    }
}
