//! q-scale functions W^(q), Z^(q) of spectrally negative processes with a
//! Gaussian component.
//!
//! W is never inverted directly. We invert the tilted function
//! U(x) = e^{−Φ(q)x} W^(q)(x), whose transform 1/(ψ(β + Φ) − q) has all its
//! singularities on the closed negative axis, and multiply back. This keeps
//! the relative accuracy of W uniform in x.
//!
//! Quantities that decay, such as W′ − ΦW or the passage transforms
//! Z_c − (p/Φ_c)W_c, are differences of exponentially large terms. Those are
//! inverted from their own transforms instead, where the pole at Φ cancels.

pub mod inversion;
pub mod quad;

use std::sync::atomic::{AtomicUsize, Ordering};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::model::LevyModel;
use crate::roots;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScaleConfig {
    /// Talbot node count.
    pub nodes: usize,
    /// Spacing of the interpolation grid.
    pub grid_step: f64,
    /// Right end of the interpolation grid; beyond it every call inverts.
    pub grid_max: f64,
    /// Build interpolation grids at all.
    pub cached: bool,
}

impl Default for ScaleConfig {
    fn default() -> Self {
        ScaleConfig {
            nodes: 24,
            grid_step: 1e-3,
            grid_max: 10.0,
            cached: true,
        }
    }
}

/// Values and slopes on a uniform grid starting at 0.
#[derive(Debug, Clone)]
pub(crate) struct Table {
    h: f64,
    f: Vec<f64>,
    df: Vec<f64>,
}

impl Table {
    pub(crate) fn build(max: f64, step: f64, node: impl FnMut(f64) -> (f64, f64)) -> Table {
        let n = (max / step).ceil() as usize + 1;
        let h = max / (n - 1) as f64;
        let (f, df) = (0..n).map(|i| i as f64 * h).map(node).unzip();
        Table { h, f, df }
    }

    /// Cubic Hermite for the value, four-point Lagrange for the slope.
    /// `None` outside the grid.
    pub(crate) fn eval(&self, x: f64) -> Option<(f64, f64)> {
        let pos = x / self.h;
        if !(pos >= 0.0) {
            return None;
        }
        let i = pos.floor() as usize;
        if i + 1 >= self.f.len() {
            return None;
        }
        let s = pos - i as f64;
        let (f0, f1, d0, d1) = (self.f[i], self.f[i + 1], self.df[i], self.df[i + 1]);
        let s2 = s * s;
        let s3 = s2 * s;
        let h = self.h;
        let v = (2.0 * s3 - 3.0 * s2 + 1.0) * f0
            + (s3 - 2.0 * s2 + s) * h * d0
            + (-2.0 * s3 + 3.0 * s2) * f1
            + (s3 - s2) * h * d1;
        let d = if i >= 1 && i + 2 < self.df.len() {
            let (a, b, c, e) = (self.df[i - 1], d0, d1, self.df[i + 2]);
            -s * (s - 1.0) * (s - 2.0) / 6.0 * a + (s + 1.0) * (s - 1.0) * (s - 2.0) / 2.0 * b
                - (s + 1.0) * s * (s - 2.0) / 2.0 * c
                + (s + 1.0) * s * (s - 1.0) / 6.0 * e
        } else {
            d0 + s * (d1 - d0)
        };
        Some((v, d))
    }
}

/// W^(q) and its relatives for one model and one q ≥ 0.
#[derive(Debug)]
pub struct ScaleFunction {
    model: LevyModel,
    q: f64,
    phi: f64,
    cfg: ScaleConfig,
    u_scale: f64,
    du_scale: f64,
    /// (U, U′)
    u_table: Option<Table>,
    /// (W′ − ΦW, its derivative)
    d_table: Option<Table>,
    warnings: AtomicUsize,
}

/// Largest root of ψ = q, allowing q = 0.
fn right_inverse(model: &LevyModel, q: f64) -> Result<f64> {
    if q > 0.0 {
        return crate::model::phi(model, q);
    }
    if model.exponent_derivative(0.0) >= 0.0 {
        return Ok(0.0);
    }
    // ψ(β)/β is increasing and negative near 0.
    roots::right_root_unbounded(
        |b| {
            if b == 0.0 {
                model.exponent_derivative(0.0)
            } else {
                model.exponent(b) / b
            }
        },
        0.0,
        "phi(0)",
    )
}

impl ScaleFunction {
    pub fn new(model: &LevyModel, q: f64) -> Result<Self> {
        Self::with_config(model, q, ScaleConfig::default())
    }

    pub fn with_config(model: &LevyModel, q: f64, cfg: ScaleConfig) -> Result<Self> {
        model.validate()?;
        match model {
            LevyModel::BrownianDrift { .. } | LevyModel::SpectNegKou { .. } => {}
            LevyModel::NegPoisson { .. } => {
                return Err(Error::Unsupported {
                    operation: "scale functions (bounded variation)",
                    family: "neg_poisson",
                })
            }
            m => {
                return Err(Error::Unsupported {
                    operation: "scale functions",
                    family: m.family().name(),
                })
            }
        }
        if !(q >= 0.0) || !q.is_finite() {
            return Err(Error::param("q", format!("must be finite and >= 0, got {q}")));
        }
        if cfg.nodes < 8 || !(cfg.grid_step > 0.0) || !(cfg.grid_max > 0.0) {
            return Err(Error::param("scale config", format!("{cfg:?}")));
        }
        let phi = right_inverse(model, q)?;
        let sigma = model.sigma();
        let dpsi = model.exponent_derivative(phi);
        let mut sf = ScaleFunction {
            model: *model,
            q,
            phi,
            cfg,
            u_scale: if dpsi > 0.0 { 1.0 / dpsi } else { 1.0 },
            du_scale: 2.0 / (sigma * sigma),
            u_table: None,
            d_table: None,
            warnings: AtomicUsize::new(0),
        };
        if cfg.cached {
            let u = Table::build(cfg.grid_max, cfg.grid_step, |x| {
                (sf.invert_u(x), sf.invert_du(x))
            });
            let d = Table::build(cfg.grid_max, cfg.grid_step, |x| {
                (sf.invert_d(x), sf.invert_dd(x))
            });
            sf.u_table = Some(u);
            sf.d_table = Some(d);
        }
        Ok(sf)
    }

    pub fn model(&self) -> &LevyModel {
        &self.model
    }
    pub fn q(&self) -> f64 {
        self.q
    }
    /// Φ(q).
    pub fn phi(&self) -> f64 {
        self.phi
    }
    pub fn config(&self) -> &ScaleConfig {
        &self.cfg
    }

    /// Number of inversions where the Talbot cross-check failed and the
    /// Euler fallback disagreed as well. Zero means every value met the
    /// accuracy target.
    pub fn inversion_warnings(&self) -> usize {
        self.warnings.load(Ordering::Relaxed)
    }

    fn psi_minus_q(&self, s: Complex64) -> Complex64 {
        self.model.exponent_complex(s) - self.q
    }

    /// Talbot with `nodes`, cross-checked against `nodes − 6` and then
    /// against Euler summation.
    pub(crate) fn checked_inverse<F: Fn(Complex64) -> Complex64>(
        &self,
        f: F,
        x: f64,
        scale: f64,
    ) -> f64 {
        let m = self.cfg.nodes;
        let a = inversion::talbot(&f, x, m);
        let b = inversion::talbot(&f, x, m - 6);
        let tol = (1e-9 * a.abs()).max(1e-10 * scale);
        if (a - b).abs() <= tol && a.is_finite() {
            return a;
        }
        let e = inversion::euler(&f, x, 18);
        if (a - e).abs() <= 1e2 * tol && a.is_finite() {
            return a;
        }
        self.warnings.fetch_add(1, Ordering::Relaxed);
        e
    }

    fn invert_u(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 0.0;
        }
        self.checked_inverse(|b| 1.0 / self.psi_minus_q(b + self.phi), x, self.u_scale)
    }

    fn invert_du(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return self.du_scale;
        }
        self.checked_inverse(|b| b / self.psi_minus_q(b + self.phi), x, self.du_scale)
    }

    /// W′ − ΦW, transform (β − Φ)/(ψ(β) − q).
    fn invert_d(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return self.du_scale;
        }
        self.checked_inverse(|b| (b - self.phi) / self.psi_minus_q(b), x, self.du_scale)
    }

    /// Derivative of W′ − ΦW, transform β(β − Φ)/(ψ(β) − q) − 2/σ².
    fn invert_dd(&self, x: f64) -> f64 {
        let s = self.du_scale;
        let f = |b: Complex64| b * (b - self.phi) / self.psi_minus_q(b) - s;
        if x <= 0.0 {
            // Initial value theorem on the transform above.
            let big = 1e8 * (1.0 + self.phi);
            return (Complex64::new(big, 0.0) * f(Complex64::new(big, 0.0))).re;
        }
        self.checked_inverse(f, x, s * (1.0 + self.phi))
    }

    /// (U(x), U′(x)) for x ≥ 0.
    fn tilted_pair(&self, x: f64) -> (f64, f64) {
        if let Some(v) = self.u_table.as_ref().and_then(|t| t.eval(x)) {
            return v;
        }
        (self.invert_u(x), self.invert_du(x))
    }

    /// W^(q)(x); zero for x < 0.
    pub fn w(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 0.0;
        }
        let (u, _) = self.tilted_pair(x);
        (self.phi * x).exp() * u
    }

    /// Right derivative W′^(q)(x); zero for x < 0 and 2/σ² at 0.
    pub fn w_prime(&self, x: f64) -> f64 {
        if x < 0.0 {
            return 0.0;
        }
        if x == 0.0 {
            return self.du_scale;
        }
        let (u, du) = self.tilted_pair(x);
        (self.phi * x).exp() * (self.phi * u + du)
    }

    /// W′(x) − Φ(q)W(x), positive for every x ≥ 0. The smooth-fit and
    /// convexity arguments for the threshold rest on this sign.
    pub fn smooth_fit_combination(&self, x: f64) -> f64 {
        self.fit_pair(x).0
    }

    /// (W′ − ΦW, its derivative) at x ≥ 0.
    pub fn fit_pair(&self, x: f64) -> (f64, f64) {
        if x < 0.0 {
            return (0.0, 0.0);
        }
        if let Some(v) = self.d_table.as_ref().and_then(|t| t.eval(x)) {
            return v;
        }
        (self.invert_d(x), self.invert_dd(x))
    }

    /// [`Self::smooth_fit_combination`] by direct inversion, bypassing the
    /// grid.
    pub fn smooth_fit_combination_direct(&self, x: f64) -> f64 {
        self.invert_d(x)
    }

    fn integral_tilted_w(&self, c: f64, x: f64) -> f64 {
        // ∫_0^x e^{(Φ−c)y} U(y) dy
        let k = self.phi - c;
        let f = |y: f64| (k * y).exp() * self.tilted_pair(y).0;
        let scale = self.u_scale * if k > 0.0 { (k * x).exp() } else { 1.0 } * x;
        quad::integrate(f, 0.0, x, 1e-13 * scale).0
    }

    /// Z^(q)(x) = 1 + q∫_0^x W^(q); equals 1 for x ≤ 0.
    pub fn z(&self, x: f64) -> f64 {
        if x <= 0.0 || self.q == 0.0 {
            return 1.0;
        }
        1.0 + self.q * self.integral_tilted_w(0.0, x)
    }

    fn check_tilt(&self, c: f64) -> Result<f64> {
        let lower = self.model.lower_pole().unwrap_or(f64::NEG_INFINITY);
        if !(c > lower) || !c.is_finite() {
            return Err(Error::Domain {
                what: "tilted scale function",
                value: c,
                reason: format!("psi(c) is infinite for c <= {lower}"),
            });
        }
        let pc = self.model.exponent(c);
        if pc > self.q * (1.0 + 1e-14) + 1e-300 {
            return Err(Error::Domain {
                what: "tilted scale function",
                value: c,
                reason: format!("requires psi(c) = {pc} <= q = {}", self.q),
            });
        }
        Ok(pc)
    }

    /// W_c^(q−ψ(c))(x) = e^{−cx}W^(q)(x).
    pub fn tilted_w(&self, c: f64, x: f64) -> Result<f64> {
        self.check_tilt(c)?;
        if x <= 0.0 {
            return Ok(0.0);
        }
        let (u, _) = self.tilted_pair(x);
        Ok(((self.phi - c) * x).exp() * u)
    }

    /// Derivative of [`Self::tilted_w`]: e^{−cx}(W′ − cW).
    pub fn tilted_w_prime(&self, c: f64, x: f64) -> Result<f64> {
        self.check_tilt(c)?;
        if x < 0.0 {
            return Ok(0.0);
        }
        if x == 0.0 {
            return Ok(self.du_scale);
        }
        let (u, du) = self.tilted_pair(x);
        Ok(((self.phi - c) * x).exp() * ((self.phi - c) * u + du))
    }

    /// Z_c^(q−ψ(c))(x) = 1 + (q − ψ(c))∫_0^x W_c.
    pub fn tilted_z(&self, c: f64, x: f64) -> Result<f64> {
        let pc = self.check_tilt(c)?;
        if x <= 0.0 {
            return Ok(1.0);
        }
        Ok(1.0 + (self.q - pc) * self.integral_tilted_w(c, x))
    }

    /// Z_c(x) − (p/(Φ − c))·W_c(x) with p = q − ψ(c), for c < Φ(q). This is
    /// E[exp(−qτ + c(X_τ + x))] for the first passage τ below −x, so c = 0
    /// and c = 1 give the L and G transforms.
    ///
    /// Inverted from its transform
    /// [Φ_c ψ_c(β) − pβ] / [Φ_c β (ψ_c(β) − p)], ψ_c(β) = ψ(β + c) − ψ(c),
    /// rather than assembled from Z_c and W_c, which cancel.
    pub fn passage(&self, c: f64, x: f64) -> Result<f64> {
        let pc = self.check_tilt(c)?;
        let phic = self.phi - c;
        if !(phic > 0.0) {
            return Err(Error::Domain {
                what: "passage transform",
                value: c,
                reason: format!("requires c < Phi(q) = {}", self.phi),
            });
        }
        if x <= 0.0 {
            return Ok(1.0);
        }
        let p = self.q - pc;
        let f = |b: Complex64| {
            let h = self.psi_minus_q(b + c);
            (phic * (h + p) - p * b) / (phic * b * h)
        };
        Ok(self.checked_inverse(f, x, 1.0))
    }

    /// Derivative in x of [`Self::passage`]: −(p/Φ_c)e^{−cx}(W′ − ΦW).
    pub fn passage_slope(&self, c: f64, x: f64) -> Result<f64> {
        let pc = self.check_tilt(c)?;
        let phic = self.phi - c;
        let d = if x <= 0.0 { self.du_scale } else { self.smooth_fit_combination(x) };
        Ok(-(self.q - pc) / phic * (-c * x.max(0.0)).exp() * d)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn brownian_closed_form() {
        let m = LevyModel::BrownianDrift { m: 0.0, sigma: 1.0 };
        let sf = ScaleFunction::new(&m, 1.0).unwrap();
        let p = 2f64.sqrt();
        for i in 0..=500 {
            let x = i as f64 * 0.01;
            let exact = 2.0 * (p * x).sinh() / p;
            assert!((sf.w(x) - exact).abs() < 1e-9 * exact.max(1.0), "{x}");
            let dexact = 2.0 * (p * x).cosh();
            assert!((sf.w_prime(x) - dexact).abs() < 1e-7 * dexact, "{x}");
            let comb = 2.0 * (-p * x).exp();
            assert!((sf.smooth_fit_combination(x) - comb).abs() < 1e-9 * comb, "{x}");
            let l = sf.passage(0.0, x).unwrap();
            assert!((l - (-p * x).exp()).abs() < 1e-10, "{x}");
        }
        assert!((sf.z(1.3) - (p * 1.3).cosh()).abs() < 1e-10);
        assert_eq!(sf.inversion_warnings(), 0);
    }

    #[test]
    fn uncached_matches_cached() {
        let m = LevyModel::SpectNegKou {
            m: 0.0,
            sigma: 0.4,
            a: 1.0,
            eta2: 2.0,
        };
        let a = ScaleFunction::new(&m, 0.5).unwrap();
        let b = ScaleFunction::with_config(
            &m,
            0.5,
            ScaleConfig {
                cached: false,
                ..Default::default()
            },
        )
        .unwrap();
        for &x in &[0.0005, 0.1, 1.0, 3.3, 9.99, 12.0] {
            let (wa, wb) = (a.w(x), b.w(x));
            assert!((wa - wb).abs() <= 1e-10 * wb.max(1.0), "{x} {wa} {wb}");
            let (da, db) = (a.smooth_fit_combination(x), b.smooth_fit_combination(x));
            assert!((da - db).abs() <= 1e-9 * db, "{x} {da} {db}");
        }
        assert_eq!(a.inversion_warnings(), 0);
    }

    #[test]
    fn rejects_other_families() {
        assert!(ScaleFunction::new(&LevyModel::NegPoisson { a: 1.0 }, 1.0).is_err());
        let k = LevyModel::ExpJD {
            m: 0.0,
            sigma: 1.0,
            a: 1.0,
            eta1: 2.0,
        };
        assert!(ScaleFunction::new(&k, 1.0).is_err());
    }
}
