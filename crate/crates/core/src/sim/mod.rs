//! Monte Carlo oracle for the analytic layer.
//!
//! Every public estimator is deterministic in `SimConfig::seed`: paths use
//! per-index generators and are reduced in a fixed batch order.

mod dynamics;
mod engine;
mod stats;

pub use dynamics::{Dynamics, Jumps};
pub use stats::McEstimate;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{psi1, LevyModel, ProblemSpec};
use crate::threshold::{EpsilonBoundary, ThresholdResult, ValueFunction};
use engine::{path_rng, Engine, Path};
use stats::{accumulate, collect, Accum};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SimConfig {
    pub n_paths: usize,
    /// Longest Brownian leaf between bridge checks.
    pub dt: f64,
    /// Time cap; `None` means 50/(r − ψ(1)).
    pub horizon: Option<f64>,
    pub seed: u64,
    pub bridge_correction: bool,
    /// A path stops early once everything it could still contribute is
    /// below `tail_tol` times the problem scale.
    pub tail_tol: f64,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            n_paths: 10_000,
            dt: 1e-3,
            horizon: None,
            seed: 0,
            bridge_correction: true,
            tail_tol: 1e-12,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_paths == 0 {
            return Err(Error::param("n_paths", "must be >= 1"));
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::param("dt", format!("must be > 0, got {}", self.dt)));
        }
        if let Some(h) = self.horizon {
            if !(h > 0.0) {
                return Err(Error::param("horizon", format!("must be > 0, got {h}")));
            }
        }
        if !(self.tail_tol >= 0.0) {
            return Err(Error::param("tail_tol", "must be >= 0"));
        }
        Ok(())
    }

    fn horizon_for(&self, model: &LevyModel, r: f64) -> f64 {
        self.horizon.unwrap_or_else(|| {
            let gap = r - psi1(model);
            if gap > 0.0 {
                50.0 / gap
            } else {
                50.0 / r
            }
        })
    }
}

/// Sorts levels descending and returns them with `order[k]` = original index
/// of the k-th sorted level.
fn sorted_levels(levels: &[f64]) -> (Vec<f64>, Vec<usize>) {
    let mut order: Vec<usize> = (0..levels.len()).collect();
    order.sort_by(|&i, &j| levels[j].total_cmp(&levels[i]));
    (order.iter().map(|&i| levels[i]).collect(), order)
}

fn check_rate(r: f64) -> Result<()> {
    if !(r > 0.0 && r.is_finite()) {
        return Err(Error::param("r", format!("must be > 0, got {r}")));
    }
    Ok(())
}

/// Estimates (L(x), G(x)) = (E[e^{−rτ̄_x}], E[e^{−rτ̄_x + X_τ̄_x}]).
pub fn simulate_hit(model: &LevyModel, r: f64, x_level: f64, cfg: &SimConfig) -> Result<(McEstimate, McEstimate)> {
    Ok(simulate_hit_levels(model, r, &[x_level], cfg)?[0])
}

/// [`simulate_hit`] for several levels on the same paths.
pub fn simulate_hit_levels(
    model: &LevyModel,
    r: f64,
    levels: &[f64],
    cfg: &SimConfig,
) -> Result<Vec<(McEstimate, McEstimate)>> {
    model.validate()?;
    check_rate(r)?;
    cfg.validate()?;
    if let Some(&x) = levels.iter().find(|&&x| !(x < 0.0)) {
        return Err(Error::param("x_level", format!("must be < 0, got {x}")));
    }
    let (sorted, order) = sorted_levels(levels);
    let engine = Engine {
        dynamics: Dynamics::from_model(model),
        levels: &sorted,
        dt: cfg.dt,
        bridge: cfg.bridge_correction,
        horizon: cfg.horizon_for(model, r),
        disc: r,
        track_integral: false,
    };
    let tol = cfg.tail_tol;
    let negligible = move |t: f64, _x: f64| (-r * t).exp() < tol;
    let k = levels.len();
    let acc = accumulate(cfg.n_paths, 2 * k, |i, y, cap| {
        let p = engine.run(cfg.seed, i, &negligible);
        for (s, &j) in order.iter().enumerate() {
            let (l, g) = match p.hits[s] {
                Some(h) => {
                    let d = (-r * h.t).exp();
                    (d, d * h.x.exp())
                }
                None => {
                    cap[2 * j] = p.capped;
                    cap[2 * j + 1] = p.capped;
                    (0.0, 0.0)
                }
            };
            y[2 * j] = l;
            y[2 * j + 1] = g;
        }
    });
    Ok((0..k).map(|j| (acc.estimate(2 * j), acc.estimate(2 * j + 1))).collect())
}

/// Runs the cash-flow functional for thresholds `bs`, returning an
/// accumulator with observables [direct_0.., lemma_0..].
fn policy_paths(spec: &ProblemSpec, bs: &[f64], cfg: &SimConfig) -> Result<Accum> {
    cfg.validate()?;
    if let Some(&b) = bs.iter().find(|&&b| !(b > 0.0 && b.is_finite())) {
        return Err(Error::param("b", format!("must be > 0, got {b}")));
    }
    let (model, r, alpha, c, v) = (*spec.model(), spec.r(), spec.alpha(), spec.c(), spec.v());
    let k = spec.growth_gap();
    let xs: Vec<f64> = bs.iter().map(|b| (b / v).ln()).collect();
    let (sorted, order) = sorted_levels(&xs);
    let engine = Engine {
        dynamics: Dynamics::from_model(&model),
        levels: &sorted,
        dt: cfg.dt,
        bridge: cfg.bridge_correction,
        horizon: cfg.horizon_for(&model, r),
        disc: r,
        track_integral: true,
    };
    let b_max = bs.iter().cloned().fold(0.0, f64::max);
    let scale = c / r + alpha * v / k;
    let tol = cfg.tail_tol * scale;
    let negligible = move |t: f64, x: f64| {
        (-r * t).exp() * (alpha * v * x.exp() / k + 2.0 * c / r + alpha * b_max / k) < tol
    };
    let n = bs.len();
    let base = alpha * v / k - c / r;
    Ok(accumulate(cfg.n_paths, 2 * n, |i, y, cap| {
        let p: Path = engine.run(cfg.seed, i, &negligible);
        for (s, &j) in order.iter().enumerate() {
            let (direct, lemma) = match p.hits[s] {
                Some(h) if h.t == 0.0 => (0.0, 0.0),
                Some(h) => {
                    let d = (-r * h.t).exp();
                    let f = spec.payoff(v * h.x.exp());
                    (alpha * v * h.integral - c * (-r * h.t).exp_m1() / -r, base + d * f)
                }
                None => {
                    cap[j] = p.capped;
                    cap[n + j] = p.capped;
                    (alpha * v * p.integral - c * (-r * p.t).exp_m1() / -r, base)
                }
            };
            y[j] = direct;
            y[n + j] = lemma;
        }
    }))
}

/// Expected discounted cash flow of liquidating at τ_b, by two estimators.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PolicyValue {
    pub b: f64,
    /// Pathwise ∫_0^{τ_b} e^{−rs}(αV_s − c) ds.
    pub direct: McEstimate,
    /// αv/(r − ψ(1)) − c/r + e^{−rτ_b} f(V_{τ_b}).
    pub lemma: McEstimate,
    /// direct − lemma on the same paths.
    pub difference: McEstimate,
    /// The two estimators agree within 4 standard errors.
    pub consistent: bool,
}

fn agree(d: &McEstimate) -> bool {
    d.mean.abs() <= 4.0 * d.std_error + 1e-12
}

pub fn policy_value(spec: &ProblemSpec, b: f64, cfg: &SimConfig) -> Result<PolicyValue> {
    let acc = policy_paths(spec, &[b], cfg)?;
    let difference = acc.difference(0, 1);
    Ok(PolicyValue {
        b,
        direct: acc.estimate(0),
        lemma: acc.estimate(1),
        difference,
        consistent: agree(&difference),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    /// Ascending thresholds.
    pub b: Vec<f64>,
    pub direct: Vec<McEstimate>,
    pub lemma: Vec<McEstimate>,
    /// value(b[argmax]) − value(b[j]), paired on the same paths.
    pub gap: Vec<McEstimate>,
    /// Index of the largest direct estimate.
    pub argmax: usize,
    /// Inclusive index range around the argmax where every gap is within
    /// one standard error.
    pub flat: (usize, usize),
    /// Per-threshold agreement of the two estimators.
    pub consistent: Vec<bool>,
}

impl SweepResult {
    pub fn flat_interval(&self) -> (f64, f64) {
        (self.b[self.flat.0], self.b[self.flat.1])
    }

    pub fn flat_contains(&self, b: f64) -> bool {
        let (lo, hi) = self.flat_interval();
        lo <= b && b <= hi
    }
}

/// Policy values over an ascending grid of thresholds on common paths.
pub fn sweep(spec: &ProblemSpec, grid: &[f64], cfg: &SimConfig) -> Result<SweepResult> {
    if grid.is_empty() {
        return Err(Error::param("grid", "must not be empty"));
    }
    if grid.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::param("grid", "must be strictly ascending"));
    }
    let acc = policy_paths(spec, grid, cfg)?;
    let n = grid.len();
    let direct: Vec<McEstimate> = (0..n).map(|j| acc.estimate(j)).collect();
    let lemma: Vec<McEstimate> = (0..n).map(|j| acc.estimate(n + j)).collect();
    let mut argmax = 0;
    for j in 1..n {
        if direct[j].mean > direct[argmax].mean {
            argmax = j;
        }
    }
    let gap: Vec<McEstimate> = (0..n).map(|j| acc.difference(argmax, j)).collect();
    let flat_ok = |j: usize| gap[j].mean <= gap[j].std_error;
    let mut lo = argmax;
    while lo > 0 && flat_ok(lo - 1) {
        lo -= 1;
    }
    let mut hi = argmax;
    while hi + 1 < n && flat_ok(hi + 1) {
        hi += 1;
    }
    let consistent = (0..n).map(|j| agree(&acc.difference(j, n + j))).collect();
    Ok(SweepResult {
        b: grid.to_vec(),
        direct,
        lemma,
        gap,
        argmax,
        flat: (lo, hi),
        consistent,
    })
}

/// Stopping times of the ε-optimal rules on common paths.
#[derive(Debug, Clone, PartialEq)]
pub struct EpsilonRun {
    pub eps: Vec<f64>,
    pub boundaries: Vec<EpsilonBoundary>,
    /// Mean of τ_ε ∧ horizon per ε.
    pub mean_time: Vec<McEstimate>,
    /// Mean of τ_{B_c} ∧ horizon on the same paths.
    pub threshold_time: McEstimate,
    /// `times[path][k]` = τ_{eps[k]} ∧ horizon.
    pub times: Vec<Vec<f64>>,
    pub threshold_times: Vec<f64>,
}

/// Simulates τ_ε = inf{t : w(V_t) ≤ ε} for each ε in a descending list,
/// along with τ_{B_c}.
pub fn epsilon_stop_paths(
    spec: &ProblemSpec,
    th: &ThresholdResult,
    eps_list: &[f64],
    cfg: &SimConfig,
) -> Result<EpsilonRun> {
    cfg.validate()?;
    if eps_list.iter().any(|&e| !(e > 0.0)) {
        return Err(Error::param("eps", "every entry must be > 0"));
    }
    if eps_list.windows(2).any(|w| w[0] < w[1]) {
        return Err(Error::param("eps", "must be in descending order"));
    }
    let vf = ValueFunction::new(spec, th)?;
    let boundaries = eps_list
        .iter()
        .map(|&e| vf.epsilon_region(e))
        .collect::<Result<Vec<_>>>()?;
    let v = spec.v();
    // Stop anywhere is an immediate hit at level +∞.
    let mut levels: Vec<f64> = boundaries
        .iter()
        .map(|b| match *b {
            EpsilonBoundary::Level(b) => (b / v).ln(),
            EpsilonBoundary::Everywhere => f64::INFINITY,
        })
        .collect();
    levels.push((th.b_c / v).ln());
    let (sorted, order) = sorted_levels(&levels);
    let model = *spec.model();
    let horizon = cfg.horizon_for(&model, spec.r());
    let engine = Engine {
        dynamics: Dynamics::from_model(&model),
        levels: &sorted,
        dt: cfg.dt,
        bridge: cfg.bridge_correction,
        horizon,
        disc: spec.r(),
        track_integral: false,
    };
    let never = |_: f64, _: f64| false;
    let k = levels.len();
    let rows: Vec<(Vec<f64>, Vec<bool>)> = collect(cfg.n_paths, |i| {
        let p = engine.run(cfg.seed, i, &never);
        let mut t = vec![0.0; k];
        let mut capped = vec![false; k];
        for (s, &j) in order.iter().enumerate() {
            t[j] = match p.hits[s] {
                Some(h) => h.t,
                None => {
                    capped[j] = true;
                    p.t.min(horizon)
                }
            };
        }
        (t, capped)
    });
    let mut acc = Accum::new(k);
    for (t, c) in &rows {
        acc.push(t, c);
    }
    let m = eps_list.len();
    let mut times = Vec::with_capacity(rows.len());
    let mut threshold_times = Vec::with_capacity(rows.len());
    for (mut t, _) in rows {
        threshold_times.push(t[m]);
        t.truncate(m);
        times.push(t);
    }
    Ok(EpsilonRun {
        eps: eps_list.to_vec(),
        boundaries,
        mean_time: (0..m).map(|j| acc.estimate(j)).collect(),
        threshold_time: acc.estimate(m),
        times,
        threshold_times,
    })
}

/// Estimates E[e^{−rR_n + X_{R_n}}; R_n < ∞] where R_n is the first time
/// X_t − rt reaches ln n, for each n ≥ 1.
///
/// Under the measure with density e^{X_t − ψ(1)t} the quantity becomes
/// E[e^{−(r − ψ(1))R_n}], which is simulated as a downward passage of the
/// negated, tilted and drift-shifted process.
pub fn class_d_diagnostic(model: &LevyModel, r: f64, ns: &[f64], cfg: &SimConfig) -> Result<Vec<McEstimate>> {
    model.validate()?;
    check_rate(r)?;
    cfg.validate()?;
    let q = r - psi1(model);
    if !(q > 0.0) {
        return Err(Error::Assumption(format!(
            "discounting: requires r > psi(1) = {}, got r = {r}",
            psi1(model)
        )));
    }
    if let Some(&n) = ns.iter().find(|&&n| !(n >= 1.0 && n.is_finite())) {
        return Err(Error::param("n", format!("must be >= 1, got {n}")));
    }
    let levels: Vec<f64> = ns.iter().map(|n| -n.ln()).collect();
    let (sorted, order) = sorted_levels(&levels);
    let engine = Engine {
        dynamics: Dynamics::from_model(model).esscher().shifted(-r).negated(),
        levels: &sorted,
        dt: cfg.dt,
        bridge: cfg.bridge_correction,
        horizon: cfg.horizon.unwrap_or(50.0 / q),
        disc: q,
        track_integral: false,
    };
    let tol = cfg.tail_tol;
    let negligible = move |t: f64, _x: f64| (-q * t).exp() < tol;
    let acc = accumulate(cfg.n_paths, ns.len(), |i, y, cap| {
        let p = engine.run(cfg.seed, i, &negligible);
        for (s, &j) in order.iter().enumerate() {
            y[j] = match p.hits[s] {
                Some(h) => (-q * h.t).exp(),
                None => {
                    cap[j] = p.capped;
                    0.0
                }
            };
        }
    });
    Ok((0..ns.len()).map(|j| acc.estimate(j)).collect())
}

/// `n` exact draws of X_t.
pub fn sample_increments(model: &LevyModel, t: f64, n: usize, seed: u64) -> Result<Vec<f64>> {
    model.validate()?;
    if !(t > 0.0 && t.is_finite()) {
        return Err(Error::param("t", format!("must be > 0, got {t}")));
    }
    let d = Dynamics::from_model(model);
    Ok(collect(n, |i| d.sample_increment(t, &mut path_rng(seed, i, 2))))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn immediate_and_reproducible() {
        let spec = ProblemSpec::new(LevyModel::BrownianDrift { m: 0.0, sigma: 1.0 }, 1.0, 1.0, 1.0, 1.0).unwrap();
        let cfg = SimConfig {
            n_paths: 300,
            ..SimConfig::default()
        };
        let pv = policy_value(&spec, 1.5, &cfg).unwrap();
        assert_eq!(pv.direct.mean, 0.0);
        assert_eq!(pv.lemma.mean, 0.0);
        let a = policy_value(&spec, 0.3, &cfg).unwrap();
        let b = policy_value(&spec, 0.3, &cfg).unwrap();
        assert_eq!(a, b);
        assert!(a.consistent, "{a:?}");
    }
}
