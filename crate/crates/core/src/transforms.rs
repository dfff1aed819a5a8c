//! Downward first-passage transforms
//! L(x) = E[e^{−rτ̄_x}] and G(x) = E[e^{−rτ̄_x + X_{τ̄_x}}], x ≤ 0,
//! and the value g(v, b) of stopping at the first passage of V below b.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::model::{psi1, Family, LevyModel, ProblemSpec};
use crate::roots::{emery_root, kou_roots};
use crate::scale::{ScaleConfig, ScaleFunction, Table};

#[derive(Debug, Clone)]
enum Kind {
    /// L = e^{x·rate}, G = e^{x(rate+1)}: no negative jumps.
    Exponential { rate: f64 },
    /// Double exponential downward jumps, in terms of the negative roots.
    Kou { psi2: f64, psi3: f64, eta2: f64 },
    /// Unit jumps: L = l^⌈−x⌉, G = g^⌈−x⌉.
    Lattice { l: f64, g: f64 },
    /// Scale function representation.
    Scale {
        sf: Arc<ScaleFunction>,
        phi: f64,
        k1: f64,
        /// (L, L′) and (G, G′) in y = −x.
        tables: Option<Arc<(Table, Table)>>,
    },
}

/// The pair (L, G) for one model and discount rate. Cheap to clone.
#[derive(Debug, Clone)]
pub struct HittingTransforms {
    family: Family,
    r: f64,
    psi1: f64,
    kind: Kind,
}

impl HittingTransforms {
    /// Family-specific construction. Requires r > ψ(1).
    pub fn new(model: &LevyModel, r: f64) -> Result<Self> {
        Self::with_scale_config(model, r, ScaleConfig::default())
    }

    pub fn from_spec(spec: &ProblemSpec) -> Result<Self> {
        Self::new(spec.model(), spec.r())
    }

    /// As [`Self::new`], with explicit scale-function settings for the
    /// spectrally negative jump family.
    pub fn with_scale_config(model: &LevyModel, r: f64, cfg: ScaleConfig) -> Result<Self> {
        let (psi1, family) = Self::check(model, r)?;
        let kind = match *model {
            LevyModel::BrownianDrift { m, sigma } => Kind::Exponential {
                rate: (m + (m * m + 2.0 * sigma * sigma * r).sqrt()) / (sigma * sigma),
            },
            LevyModel::ExpJD { .. } => Kind::Exponential {
                rate: emery_root(model, r)?.lam_bar,
            },
            LevyModel::KouJD { eta2, .. } => {
                let (psi2, psi3) = kou_roots(model, r)?.negative_pair()?;
                Kind::Kou { psi2, psi3, eta2 }
            }
            LevyModel::NegPoisson { a } => Kind::Lattice {
                l: a / (r + a),
                g: a / (std::f64::consts::E * (r + a)),
            },
            LevyModel::SpectNegKou { .. } => {
                let sf = ScaleFunction::with_config(model, r, cfg)?;
                let phi = sf.phi();
                let tables = if cfg.cached {
                    let node = |c: f64| {
                        let sf = &sf;
                        move |y: f64| {
                            (
                                sf.passage(c, y).unwrap_or(f64::NAN),
                                sf.passage_slope(c, y).unwrap_or(f64::NAN),
                            )
                        }
                    };
                    let l = Table::build(cfg.grid_max, cfg.grid_step, node(0.0));
                    let g = Table::build(cfg.grid_max, cfg.grid_step, node(1.0));
                    Some(Arc::new((l, g)))
                } else {
                    None
                };
                Kind::Scale {
                    sf: Arc::new(sf),
                    phi,
                    k1: (r - psi1) / (phi - 1.0),
                    tables,
                }
            }
        };
        Ok(HittingTransforms {
            family,
            r,
            psi1,
            kind,
        })
    }

    /// The double exponential closed forms applied to the spectrally
    /// negative jump family (the p = 0 case). Used to cross-check the scale
    /// function route.
    pub fn kou_route(model: &LevyModel, r: f64) -> Result<Self> {
        let (psi1, family) = Self::check(model, r)?;
        let eta2 = match *model {
            LevyModel::KouJD { eta2, .. } | LevyModel::SpectNegKou { eta2, .. } => eta2,
            _ => {
                return Err(Error::Unsupported {
                    operation: "double exponential passage formulas",
                    family: family.name(),
                })
            }
        };
        let (psi2, psi3) = kou_roots(model, r)?.negative_pair()?;
        Ok(HittingTransforms {
            family,
            r,
            psi1,
            kind: Kind::Kou { psi2, psi3, eta2 },
        })
    }

    fn check(model: &LevyModel, r: f64) -> Result<(f64, Family)> {
        model.validate()?;
        let p1 = psi1(model);
        if !(r > p1) || !r.is_finite() {
            return Err(Error::Assumption(format!(
                "requires r > psi(1) = {p1}, got r = {r}"
            )));
        }
        Ok((p1, model.family()))
    }

    pub fn family(&self) -> Family {
        self.family
    }
    pub fn r(&self) -> f64 {
        self.r
    }
    pub fn psi1(&self) -> f64 {
        self.psi1
    }

    /// The scale function behind the transforms, when there is one.
    pub fn scale_function(&self) -> Option<&ScaleFunction> {
        match &self.kind {
            Kind::Scale { sf, .. } => Some(sf),
            _ => None,
        }
    }

    /// Whether G (and L) are continuous at 0, i.e. the process creeps
    /// downward.
    pub fn g_continuous(&self) -> bool {
        !matches!(self.kind, Kind::Lattice { .. })
    }

    pub fn laplace_l(&self, x: f64) -> f64 {
        if x >= 0.0 {
            return 1.0;
        }
        match &self.kind {
            Kind::Exponential { rate } => (x * rate).exp(),
            Kind::Kou { psi2, psi3, eta2 } => {
                let (p2, p3, e2) = (*psi2, *psi3, *eta2);
                let d = (p2 - p3) * e2;
                p2 * (e2 + p3) / d * (-x * p3).exp() - p3 * (e2 + p2) / d * (-x * p2).exp()
            }
            Kind::Lattice { l, .. } => l.powf((-x).ceil()),
            // Z(y) − (r/Φ)W(y) with y = −x.
            Kind::Scale { sf, tables, .. } => tables
                .as_ref()
                .and_then(|t| t.0.eval(-x))
                .map(|v| v.0)
                .unwrap_or_else(|| sf.passage(0.0, -x).unwrap_or(f64::NAN)),
        }
    }

    pub fn laplace_g(&self, x: f64) -> f64 {
        if x >= 0.0 {
            return 1.0;
        }
        match &self.kind {
            Kind::Exponential { rate } => (x * (rate + 1.0)).exp(),
            Kind::Kou { psi2, psi3, eta2 } => {
                let (p2, p3, e2) = (*psi2, *psi3, *eta2);
                let d = (p2 - p3) * (e2 + 1.0);
                (e2 + p3) * (p2 - 1.0) / d * (x * (1.0 - p3)).exp()
                    + (e2 + p2) * (1.0 - p3) / d * (x * (1.0 - p2)).exp()
            }
            Kind::Lattice { g, .. } => g.powf((-x).ceil()),
            // Z_1(y) − k1·W_1(y): the tilt by 1 is admissible as ψ(1) < r.
            Kind::Scale { sf, tables, .. } => tables
                .as_ref()
                .and_then(|t| t.1.eval(-x))
                .map(|v| v.0)
                .unwrap_or_else(|| sf.passage(1.0, -x).unwrap_or(f64::NAN)),
        }
    }

    /// dL/dx for x < 0; at x = 0 the left derivative. Zero for x > 0.
    pub fn dl_dx(&self, x: f64) -> f64 {
        if x > 0.0 {
            return 0.0;
        }
        match &self.kind {
            Kind::Exponential { rate } => rate * (x * rate).exp(),
            Kind::Kou { psi2, psi3, eta2 } => {
                let (p2, p3, e2) = (*psi2, *psi3, *eta2);
                let d = (p2 - p3) * e2;
                -p3 * p2 * (e2 + p3) / d * (-x * p3).exp()
                    + p2 * p3 * (e2 + p2) / d * (-x * p2).exp()
            }
            Kind::Lattice { .. } => 0.0,
            Kind::Scale { sf, phi, .. } => {
                self.r / phi * if x == 0.0 { sf.w_prime(0.0) } else { sf.smooth_fit_combination(-x) }
            }
        }
    }

    /// dG/dx for x < 0; at x = 0 the left derivative. Zero for x > 0.
    pub fn dg_dx(&self, x: f64) -> f64 {
        if x > 0.0 {
            return 0.0;
        }
        match &self.kind {
            Kind::Exponential { rate } => (rate + 1.0) * (x * (rate + 1.0)).exp(),
            Kind::Kou { psi2, psi3, eta2 } => {
                let (p2, p3, e2) = (*psi2, *psi3, *eta2);
                let d = (p2 - p3) * (e2 + 1.0);
                (e2 + p3) * (p2 - 1.0) * (1.0 - p3) / d * (x * (1.0 - p3)).exp()
                    + (e2 + p2) * (1.0 - p3) * (1.0 - p2) / d * (x * (1.0 - p2)).exp()
            }
            Kind::Lattice { .. } => 0.0,
            Kind::Scale { sf, k1, .. } => {
                k1 * x.exp() * if x == 0.0 { sf.w_prime(0.0) } else { sf.smooth_fit_combination(-x) }
            }
        }
    }

    /// (L(0⁻), G(0⁻)).
    pub fn left_limits(&self) -> (f64, f64) {
        match &self.kind {
            Kind::Lattice { l, g } => (*l, *g),
            _ => (1.0, 1.0),
        }
    }

    /// lim_{x↑0} (1 − L(x))/(1 − G(x)), computed analytically.
    pub fn slope_ratio(&self) -> f64 {
        match &self.kind {
            Kind::Lattice { l, g } => (1.0 - l) / (1.0 - g),
            _ => self.dl_dx(0.0) / self.dg_dx(0.0),
        }
    }
}

/// g(v, b) for a threshold b inside (0, c(r − ψ(1))/(rα)).
pub fn g_value(spec: &ProblemSpec, t: &HittingTransforms, b: f64, v: f64) -> Result<f64> {
    let cap = spec.threshold_cap();
    if !(b > 0.0 && b < cap) {
        return Err(Error::Domain {
            what: "g",
            value: b,
            reason: format!("threshold must lie in (0, {cap})"),
        });
    }
    if !(v > 0.0) {
        return Err(Error::param("v", format!("must be > 0, got {v}")));
    }
    Ok(g_unchecked(spec, t, b, v))
}

pub(crate) fn g_unchecked(spec: &ProblemSpec, t: &HittingTransforms, b: f64, v: f64) -> f64 {
    if v <= b {
        return spec.payoff(v);
    }
    let x = (b / v).ln();
    -spec.alpha() * v / spec.growth_gap() * t.laplace_g(x) + spec.c() / spec.r() * t.laplace_l(x)
}

/// ∂g/∂v for v > b, or the right derivative at v = b.
pub fn g_dv(spec: &ProblemSpec, t: &HittingTransforms, b: f64, v: f64) -> f64 {
    if v < b {
        return -spec.alpha() / spec.growth_gap();
    }
    let x = if v == b { 0.0 } else { (b / v).ln() };
    let k = spec.growth_gap();
    let a = spec.alpha();
    let gx = if x < 0.0 { t.laplace_g(x) } else { t.left_limits().1 };
    -a / k * gx + a / k * t.dg_dx(x) - spec.c() / (spec.r() * v) * t.dl_dx(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn brownian_reference_values() {
        let m = LevyModel::BrownianDrift { m: 0.0, sigma: 1.0 };
        let t = HittingTransforms::new(&m, 2.0).unwrap();
        assert!((t.laplace_l(-1.0) - (-2.0f64).exp()).abs() < 1e-15);
        assert!((t.laplace_g(-1.0) - (-3.0f64).exp()).abs() < 1e-15);
        assert_eq!(t.laplace_g(0.3), 1.0);
    }

    #[test]
    fn lattice_buckets() {
        let m = LevyModel::NegPoisson { a: 1.0 };
        let t = HittingTransforms::new(&m, 1.0).unwrap();
        assert_eq!(t.laplace_l(-0.5), 0.5);
        assert_eq!(t.laplace_l(-1.0), 0.5);
        assert_eq!(t.laplace_l(-1.0 - 1e-12), 0.25);
        assert_eq!(t.laplace_l(0.0), 1.0);
    }

    #[test]
    fn scale_route_matches_closed_form() {
        let m = LevyModel::SpectNegKou {
            m: 0.05,
            sigma: 0.4,
            a: 1.0,
            eta2: 2.0,
        };
        let a = HittingTransforms::new(&m, 0.6).unwrap();
        let b = HittingTransforms::kou_route(&m, 0.6).unwrap();
        for &x in &[-0.01, -0.3, -1.0, -2.5, -6.0] {
            assert!((a.laplace_l(x) - b.laplace_l(x)).abs() < 1e-8, "{x}");
            assert!((a.laplace_g(x) - b.laplace_g(x)).abs() < 1e-8, "{x}");
            assert!((a.dl_dx(x) - b.dl_dx(x)).abs() < 1e-7, "{x}");
            assert!((a.dg_dx(x) - b.dg_dx(x)).abs() < 1e-7, "{x}");
        }
        assert!((a.slope_ratio() - b.slope_ratio()).abs() < 1e-10);
    }
}
