//! Optimal threshold, value function and the diagnostics behind them.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{phi, LevyModel, ProblemSpec};
use crate::roots::{emery_root, kou_roots};
use crate::scale::ScaleConfig;
use crate::transforms::{g_dv, g_unchecked, HittingTransforms};

/// Whether G is continuous at 0, which decides how B_c is obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    /// The process creeps downward; B_c comes from the slopes L′(0⁻)/G′(0⁻).
    GContinuous,
    /// Downward passage always jumps; B_c comes from the jump ratio at 0.
    GDiscontinuous,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdResult {
    pub b_c: f64,
    pub regime: Regime,
    pub psi1: f64,
    pub phi_r: Option<f64>,
    /// Real roots of ψ(β) = r behind the transforms, descending.
    pub roots: Option<Vec<f64>>,
    /// lim_{x↑0} (1 − L(x))/(1 − G(x)).
    pub slope_ratio: f64,
    /// c(r − ψ(1))/(rα): the running reward αv − c plus its discounted
    /// future drift is positive above this level, so B_c never exceeds it.
    #[serde(default)]
    pub positivity_bound: f64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

/// What to do when the numerical convexity check of g(·, B_c) fails for the
/// spectrally negative jump family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ConvexityPolicy {
    #[default]
    Abort,
    Warn,
    Skip,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ThresholdOptions {
    pub convexity: ConvexityPolicy,
    pub scale: Option<ScaleConfig>,
}

pub fn threshold(spec: &ProblemSpec) -> Result<ThresholdResult> {
    threshold_with(spec, &ThresholdOptions::default())
}

pub fn threshold_with(spec: &ProblemSpec, opts: &ThresholdOptions) -> Result<ThresholdResult> {
    let model = spec.model();
    let r = spec.r();
    let scale = opts.scale.unwrap_or(ScaleConfig {
        cached: false,
        ..ScaleConfig::default()
    });
    let t = HittingTransforms::with_scale_config(model, r, scale)?;
    let mut warnings = Vec::new();
    let (phi_r, roots) = match *model {
        LevyModel::BrownianDrift { m, sigma } => {
            let p = phi(model, r)?;
            let s2 = sigma * sigma;
            let neg = -(m + (m * m + 2.0 * s2 * r).sqrt()) / s2;
            (Some(p), Some(vec![p, neg]))
        }
        LevyModel::KouJD { .. } => (None, Some(kou_roots(model, r)?.descending())),
        LevyModel::ExpJD { .. } => {
            let mut v = kou_roots(model, r)?.descending();
            v.push(-emery_root(model, r)?.lam_bar);
            (None, Some(v))
        }
        LevyModel::NegPoisson { .. } => (None, None),
        LevyModel::SpectNegKou { .. } => {
            let rt = kou_roots(model, r)?;
            (rt.psi1, Some(rt.descending()))
        }
    };
    let regime = if t.g_continuous() {
        Regime::GContinuous
    } else {
        Regime::GDiscontinuous
    };
    let slope_ratio = t.slope_ratio();
    let cap = spec.threshold_cap();
    let b_c = cap * slope_ratio;
    if !(b_c > 0.0 && b_c < cap) {
        return Err(Error::Accuracy(format!(
            "threshold {b_c} outside the admissible interval (0, {cap})"
        )));
    }

    if let Some(sf) = t.scale_function() {
        if opts.convexity != ConvexityPolicy::Skip {
            // g(·, B_c) is convex on (B_c, ∞) iff W′ − ΦW > 0 on (0, ∞); the
            // grid covers v up to 10·B_c.
            let n = 200;
            let top = 10f64.ln();
            let bad: Vec<f64> = (1..=n)
                .map(|i| top * i as f64 / n as f64)
                .filter(|&y| !(sf.smooth_fit_combination_direct(y) > 0.0))
                .collect();
            if !bad.is_empty() {
                let msg = format!(
                    "W'(y) - Phi(r) W(y) <= 0 at {} of {n} grid points, first at y = {}",
                    bad.len(),
                    bad[0]
                );
                match opts.convexity {
                    ConvexityPolicy::Abort => return Err(Error::Convexity(msg)),
                    _ => warnings.push(msg),
                }
            }
        }
        let w = sf.inversion_warnings();
        if w > 0 {
            warnings.push(format!(
                "scale function inversion missed its accuracy target {w} times"
            ));
        }
    }

    Ok(ThresholdResult {
        b_c,
        regime,
        psi1: spec.psi1(),
        phi_r,
        roots,
        slope_ratio,
        positivity_bound: spec.c() * (spec.r() - spec.psi1()) / (spec.r() * spec.alpha()),
        warnings,
    })
}

/// Boundary of the ε-stopping region {v : s(v) ≤ f(v) + ε}.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EpsilonBoundary {
    /// Stop once V ≤ level.
    Level(f64),
    /// Every state is in the region.
    Everywhere,
}

impl EpsilonBoundary {
    /// The level, with +∞ for [`EpsilonBoundary::Everywhere`].
    pub fn as_f64(self) -> f64 {
        match self {
            EpsilonBoundary::Level(b) => b,
            EpsilonBoundary::Everywhere => f64::INFINITY,
        }
    }
}

/// v ↦ w(v) = s(v) − f(v) for a solved problem.
#[derive(Debug, Clone)]
pub struct ValueFunction {
    spec: ProblemSpec,
    th: ThresholdResult,
    t: HittingTransforms,
}

pub fn value_function(spec: &ProblemSpec, th: &ThresholdResult) -> Result<ValueFunction> {
    ValueFunction::new(spec, th)
}

impl ValueFunction {
    pub fn new(spec: &ProblemSpec, th: &ThresholdResult) -> Result<Self> {
        let t = HittingTransforms::from_spec(spec)?;
        Ok(Self::with_transforms(spec, th, t))
    }

    pub fn with_transforms(spec: &ProblemSpec, th: &ThresholdResult, t: HittingTransforms) -> Self {
        ValueFunction {
            spec: *spec,
            th: th.clone(),
            t,
        }
    }

    pub fn spec(&self) -> &ProblemSpec {
        &self.spec
    }
    pub fn threshold(&self) -> &ThresholdResult {
        &self.th
    }
    pub fn transforms(&self) -> &HittingTransforms {
        &self.t
    }
    pub fn b_c(&self) -> f64 {
        self.th.b_c
    }

    /// w(v) = αv/(r − ψ(1)) − c/r + g(v, B_c); exactly 0 for v ≤ B_c.
    pub fn w(&self, v: f64) -> f64 {
        let b = self.th.b_c;
        if v <= b {
            return 0.0;
        }
        let s = &self.spec;
        let raw = s.alpha() * v / s.growth_gap() - s.c() / s.r() + g_unchecked(s, &self.t, b, v);
        // w ≥ 0 exactly; only rounding can push it below.
        raw.max(0.0)
    }

    /// s(v) = w(v) + f(v).
    pub fn s(&self, v: f64) -> f64 {
        if v <= self.th.b_c {
            return self.spec.payoff(v);
        }
        g_unchecked(&self.spec, &self.t, self.th.b_c, v)
    }

    pub fn payoff(&self, v: f64) -> f64 {
        self.spec.payoff(v)
    }

    /// b(ε) = sup{v : w(v) ≤ ε}. w is nondecreasing and unbounded, so the
    /// level is finite for every finite ε.
    pub fn epsilon_region(&self, eps: f64) -> Result<EpsilonBoundary> {
        if !(eps > 0.0) {
            return Err(Error::param("eps", format!("must be > 0, got {eps}")));
        }
        if eps.is_infinite() {
            return Ok(EpsilonBoundary::Everywhere);
        }
        let mut lo = self.th.b_c;
        let mut hi = 2.0 * lo;
        while self.w(hi) <= eps {
            lo = hi;
            hi *= 2.0;
            if !hi.is_finite() {
                return Ok(EpsilonBoundary::Everywhere);
            }
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.w(mid) <= eps {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(EpsilonBoundary::Level(lo))
    }
}

/// Free-function form of [`ValueFunction::epsilon_region`].
pub fn epsilon_region(spec: &ProblemSpec, th: &ThresholdResult, eps: f64) -> Result<EpsilonBoundary> {
    ValueFunction::new(spec, th)?.epsilon_region(eps)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvexityReport {
    pub b_c: f64,
    pub grid_points: usize,
    /// Smallest second difference of g(·, B_c) on the grid over (B_c, 10B_c].
    pub min_second_difference: f64,
    pub convex: bool,
    /// |∂g/∂v(B_c⁺) − f′|.
    pub tangency_error: f64,
    pub smooth_fit: bool,
    /// (A_c, D_c), the coefficients of the double exponential value function.
    pub kou_coefficients: Option<(f64, f64)>,
    /// min of W′ − ΦW over the grid, spectrally negative families.
    pub min_fit_combination: Option<f64>,
    pub violations: Vec<String>,
}

impl ConvexityReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Grid checks of convexity and smooth fit at B_c. Violations are reported,
/// not raised.
pub fn convexity_report(spec: &ProblemSpec, th: &ThresholdResult) -> Result<ConvexityReport> {
    let vf = ValueFunction::new(spec, th)?;
    vf.convexity_report()
}

impl ValueFunction {
    pub fn convexity_report(&self) -> Result<ConvexityReport> {
        let spec = &self.spec;
        if self.th.regime != Regime::GContinuous {
            return Err(Error::Unsupported {
                operation: "convexity report (G is discontinuous at 0)",
                family: spec.model().family().name(),
            });
        }
        let b = self.th.b_c;
        let n = 1000;
        let h = 9.0 * b / n as f64;
        let g: Vec<f64> = (0..=n + 1)
            .map(|i| g_unchecked(spec, &self.t, b, b + i as f64 * h))
            .collect();
        let min_sd = (1..=n)
            .map(|i| g[i - 1] - 2.0 * g[i] + g[i + 1])
            .fold(f64::INFINITY, f64::min);
        let fprime = -spec.alpha() / spec.growth_gap();
        let tangency_error = (g_dv(spec, &self.t, b, b * (1.0 + 1e-9)) - fprime).abs();

        let mut violations = Vec::new();
        let convex = min_sd > 0.0;
        if !convex {
            violations.push(format!("second difference of g reaches {min_sd}"));
        }
        let smooth_fit = tangency_error < 1e-6 * (1.0 + fprime.abs());
        if !smooth_fit {
            violations.push(format!("smooth fit misses by {tangency_error}"));
        }

        let kou_coefficients = match *spec.model() {
            LevyModel::KouJD { eta2, .. } => {
                let (p2, p3) = kou_roots(spec.model(), spec.r())?.negative_pair()?;
                let (c, r) = (spec.c(), spec.r());
                let a_c = c * p2 * (eta2 + p3) / (r * (p2 - p3) * eta2 * (1.0 - p3));
                let d_c = -c * p3 * (eta2 + p2) / (r * (p2 - p3) * eta2 * (1.0 - p2));
                if !(a_c > 0.0 && d_c > 0.0) {
                    violations.push(format!("coefficients A_c = {a_c}, D_c = {d_c} not positive"));
                }
                Some((a_c, d_c))
            }
            _ => None,
        };
        let min_fit_combination = self.t.scale_function().map(|sf| {
            let m = (1..=n)
                .map(|i| sf.smooth_fit_combination((1.0 + i as f64 * 9.0 / n as f64).ln()))
                .fold(f64::INFINITY, f64::min);
            if !(m > 0.0) {
                violations.push(format!("W' - Phi W reaches {m}"));
            }
            m
        });
        Ok(ConvexityReport {
            b_c: b,
            grid_points: n,
            min_second_difference: min_sd,
            convex,
            tangency_error,
            smooth_fit,
            kou_coefficients,
            min_fit_combination,
            violations,
        })
    }
}
