//! Single-pass path simulation against a ladder of downward levels.
//!
//! Jump times and sizes are exact. Between jumps the Brownian part is drawn
//! on adaptive coarse steps. Each step decides whether the continuous path
//! crosses the next level from the exact bridge crossing probability; a
//! crossing is then located by conditional bridge bisection down to leaves
//! of length at most `dt`. With the bridge correction the crossing leaf is
//! bisected further, down to `dt/4096`, and the passage time is its middle.
//! Without it only end points of `dt` leaves are monitored. The random draws do not depend on that switch until the
//! first detection, so it can only move a passage time earlier.

use rand::{Rng, SeedableRng};
use rand_distr::{Distribution, Exp1, StandardNormal};
use rand_xoshiro::Xoshiro256PlusPlus;

use super::dynamics::Dynamics;

/// Coarse steps are about d²/(STEP·σ²) at distance d from the next level.
const STEP: f64 = 8.0;
/// Crossing-free intervals are refined while the crossing probability of
/// the unconditioned bridge exceeds this, when the integral is tracked.
const NO_CROSS_TOL: f64 = 1e-3;
const MAX_REJECT: usize = 1_000_000;
/// Crossing leaves are this fraction of `dt` with the bridge correction.
/// Placing τ mid-leaf on `dt` itself biases L upward by about r·dt/4.
const LOCATE: f64 = 1.0 / 4096.0;

#[derive(Debug, Clone, Copy, PartialEq)]
enum Known {
    Unknown,
    Cross,
    NoCross,
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Independent generator for (seed, path index, stream).
pub(crate) fn path_rng(seed: u64, index: u64, stream: u64) -> Xoshiro256PlusPlus {
    let key = splitmix(splitmix(seed ^ splitmix(stream)) ^ index);
    Xoshiro256PlusPlus::seed_from_u64(key)
}

/// expm1(z)/z.
fn exprel(z: f64) -> f64 {
    if z.abs() < 1e-8 {
        1.0 + 0.5 * z
    } else {
        z.exp_m1() / z
    }
}

const GL5_X: [f64; 5] = [
    -0.906_179_845_938_664,
    -0.538_469_310_105_683,
    0.0,
    0.538_469_310_105_683,
    0.906_179_845_938_664,
];
const GL5_W: [f64; 5] = [
    0.236_926_885_056_189,
    0.478_628_670_499_366,
    0.568_888_888_888_889,
    0.478_628_670_499_366,
    0.236_926_885_056_189,
];

/// E[∫_0^h e^{Y_s} ds] for a Brownian bridge Y from `a` to `b` over time
/// `h` with variance rate `s2`.
pub(crate) fn bridge_integral(a: f64, b: f64, h: f64, s2: f64) -> f64 {
    let d = b - a;
    if d.abs() < 0.05 && s2 * h < 0.01 {
        return a.exp() * h * exprel(d) * (1.0 + s2 * h / 12.0);
    }
    let pieces = ((d.abs() + s2 * h / 8.0) / 0.5).ceil().clamp(1.0, 256.0) as usize;
    let w = h / pieces as f64;
    let mut sum = 0.0;
    for k in 0..pieces {
        let c = (k as f64 + 0.5) * w;
        for (x, wt) in GL5_X.iter().zip(GL5_W) {
            let s = c + 0.5 * w * x;
            let e = a + d * s / h + s2 * s * (h - s) / (2.0 * h);
            sum += wt * e.exp();
        }
    }
    0.5 * w * sum
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Hit {
    pub t: f64,
    /// X at the passage time, below the level after a jump.
    pub x: f64,
    /// ∫_0^t e^{X_s − disc·s} ds.
    pub integral: f64,
}

#[derive(Debug, Clone)]
pub(crate) struct Path {
    pub hits: Vec<Option<Hit>>,
    /// Levels `[0, next)` have been crossed.
    pub next: usize,
    pub t: f64,
    pub x: f64,
    pub integral: f64,
    /// Stopped by the horizon.
    pub capped: bool,
}

impl Path {
    fn cross_at(&mut self, levels: &[f64], t: f64, x: f64) {
        while self.next < levels.len() && x <= levels[self.next] {
            self.hits[self.next] = Some(Hit {
                t,
                x,
                integral: self.integral,
            });
            self.next += 1;
        }
    }
}

pub(crate) struct Engine<'a> {
    pub dynamics: Dynamics,
    /// Descending.
    pub levels: &'a [f64],
    pub dt: f64,
    pub bridge: bool,
    pub horizon: f64,
    /// Discount rate inside the tracked integral.
    pub disc: f64,
    pub track_integral: bool,
}

impl Engine<'_> {
    fn max_step(&self) -> f64 {
        (1.0 / self.disc.max(1e-6)).min(self.horizon / 20.0).max(self.dt)
    }

    /// Simulates one path until every level is crossed, the horizon is
    /// reached or `negligible(t, x)` reports that the rest cannot matter.
    pub(crate) fn run(&self, seed: u64, index: u64, negligible: &dyn Fn(f64, f64) -> bool) -> Path {
        debug_assert!(self.levels.windows(2).all(|w| w[0] >= w[1]));
        let mut main = path_rng(seed, index, 0);
        let mut br = path_rng(seed, index, 1);
        let n = self.levels.len();
        let d = self.dynamics;
        let mut p = Path {
            hits: vec![None; n],
            next: 0,
            t: 0.0,
            x: 0.0,
            integral: 0.0,
            capped: false,
        };
        p.cross_at(self.levels, 0.0, 0.0);
        let clock = |rng: &mut Xoshiro256PlusPlus| -> f64 {
            if d.jump_rate > 0.0 {
                let e: f64 = Exp1.sample(rng);
                e / d.jump_rate
            } else {
                f64::INFINITY
            }
        };
        let mut next_jump = clock(&mut main);
        let max_step = self.max_step();
        let s2 = d.sigma * d.sigma;
        while p.next < n {
            if p.t >= self.horizon {
                p.capped = true;
                break;
            }
            if negligible(p.t, p.x) {
                break;
            }
            let seg_end = next_jump.min(self.horizon);
            let remaining = seg_end - p.t;
            let mut h = match self.levels.get(p.next) {
                Some(l) if s2 > 0.0 => ((p.x - l).powi(2) / (STEP * s2)).max(self.dt),
                _ => max_step,
            };
            h = h.min(max_step);
            let at_end = h >= remaining;
            let (h, t1) = if at_end { (remaining, seg_end) } else { (h, p.t + h) };
            if s2 > 0.0 {
                let z: f64 = StandardNormal.sample(&mut main);
                let x1 = p.x + d.drift * h + d.sigma * h.sqrt() * z;
                let (t0, x0) = (p.t, p.x);
                self.interval(&mut p, &mut br, t0, x0, t1, x1, Known::Unknown);
                p.t = t1;
                p.x = x1;
            } else {
                self.drift_segment(&mut p, h, t1);
            }
            if p.next >= n {
                break;
            }
            if at_end && seg_end == next_jump {
                p.x += d.sample_jump(&mut main);
                p.cross_at(self.levels, p.t, p.x);
                next_jump += clock(&mut main);
            }
        }
        p
    }

    /// Deterministic motion when there is no diffusion.
    fn drift_segment(&self, p: &mut Path, h: f64, t1: f64) {
        let mu = self.dynamics.drift;
        let (t0, x0) = (p.t, p.x);
        let seg = |s: f64| -> f64 {
            if self.track_integral {
                (x0 - self.disc * t0).exp() * s * exprel((mu - self.disc) * s)
            } else {
                0.0
            }
        };
        if mu < 0.0 {
            let x1 = x0 + mu * h;
            let base = p.integral;
            while p.next < self.levels.len() && x1 <= self.levels[p.next] {
                let l = self.levels[p.next];
                let s = (x0 - l) / -mu;
                p.hits[p.next] = Some(Hit {
                    t: t0 + s,
                    x: l,
                    integral: base + seg(s),
                });
                p.next += 1;
            }
        }
        p.integral += seg(h);
        p.t = t1;
        p.x = x0 + mu * h;
    }

    /// Crossing probability of `l` by the bridge from `x0` to `x1` over `h`.
    fn cross_prob(&self, x0: f64, x1: f64, l: f64, h: f64) -> f64 {
        if x0 <= l || x1 <= l {
            return 1.0;
        }
        let s2 = self.dynamics.sigma * self.dynamics.sigma;
        (-2.0 * (x0 - l) * (x1 - l) / (s2 * h)).exp()
    }

    fn bridge_mid<R: Rng>(&self, br: &mut R, x0: f64, x1: f64, h: f64) -> f64 {
        let z: f64 = StandardNormal.sample(br);
        0.5 * (x0 + x1) + 0.5 * self.dynamics.sigma * h.sqrt() * z
    }

    fn add_integral(&self, p: &mut Path, t0: f64, x0: f64, t1: f64, x1: f64) {
        if self.track_integral {
            let s2 = self.dynamics.sigma * self.dynamics.sigma;
            p.integral += bridge_integral(x0 - self.disc * t0, x1 - self.disc * t1, t1 - t0, s2);
        }
    }

    /// Processes the bridge from (t0, x0) to (t1, x1) against the next
    /// uncrossed level. `known` carries what has already been decided about
    /// whether that level is crossed inside the interval.
    fn interval<R: Rng>(&self, p: &mut Path, br: &mut R, t0: f64, x0: f64, t1: f64, x1: f64, known: Known) {
        if p.next >= self.levels.len() {
            self.add_integral(p, t0, x0, t1, x1);
            return;
        }
        let l = self.levels[p.next];
        let h = t1 - t0;
        let prob = self.cross_prob(x0, x1, l, h);
        let status = match known {
            Known::Unknown => {
                let u: f64 = br.random();
                if u < prob {
                    Known::Cross
                } else {
                    Known::NoCross
                }
            }
            k => k,
        };
        let leaf = h <= self.dt * (1.0 + 1e-12);
        match status {
            Known::NoCross => {
                // Without crossings the unconditioned bridge mean of the
                // integral is off by O(prob); refine until that is small.
                if self.track_integral && prob > NO_CROSS_TOL && !leaf {
                    let tm = t0 + 0.5 * h;
                    let mut xm = self.bridge_mid(br, x0, x1, h);
                    for _ in 0..MAX_REJECT {
                        let keep = (1.0 - self.cross_prob(x0, xm, l, 0.5 * h))
                            * (1.0 - self.cross_prob(xm, x1, l, 0.5 * h));
                        let u: f64 = br.random();
                        if u < keep {
                            break;
                        }
                        xm = self.bridge_mid(br, x0, x1, h);
                    }
                    self.interval(p, br, t0, x0, tm, xm, Known::NoCross);
                    self.interval(p, br, tm, xm, t1, x1, Known::NoCross);
                } else {
                    self.add_integral(p, t0, x0, t1, x1);
                }
            }
            _ if leaf && !(self.bridge && h > self.dt * LOCATE) => self.crossing_leaf(p, br, t0, x0, t1, x1, prob),
            _ => {
                // Midpoint given that the level is crossed somewhere, then
                // the half holding the first crossing.
                let tm = t0 + 0.5 * h;
                let mut draw = || {
                    let xm = self.bridge_mid(br, x0, x1, h);
                    let pl = self.cross_prob(x0, xm, l, 0.5 * h);
                    let pr = self.cross_prob(xm, x1, l, 0.5 * h);
                    let pc = 1.0 - (1.0 - pl) * (1.0 - pr);
                    let u: f64 = br.random();
                    (xm, pl, pc, u)
                };
                let (mut xm, mut pl, mut pc, mut u) = draw();
                for _ in 0..MAX_REJECT {
                    if u < pc {
                        break;
                    }
                    (xm, pl, pc, u) = draw();
                }
                let v: f64 = br.random();
                if v * pc < pl {
                    self.interval(p, br, t0, x0, tm, xm, Known::Cross);
                    self.interval(p, br, tm, xm, t1, x1, Known::Unknown);
                } else {
                    self.interval(p, br, t0, x0, tm, xm, Known::NoCross);
                    self.interval(p, br, tm, xm, t1, x1, Known::Cross);
                }
            }
        }
    }

    /// A leaf known to cross the next level.
    #[allow(clippy::too_many_arguments)]
    fn crossing_leaf<R: Rng>(&self, p: &mut Path, br: &mut R, t0: f64, x0: f64, t1: f64, x1: f64, prob: f64) {
        let h = t1 - t0;
        let s2 = self.dynamics.sigma * self.dynamics.sigma;
        let full = if self.track_integral {
            bridge_integral(x0 - self.disc * t0, x1 - self.disc * t1, h, s2)
        } else {
            0.0
        };
        if self.bridge {
            // The bridge minimum is below every level with crossing
            // probability above u.
            let u = br.random::<f64>() * prob;
            let tm = t0 + 0.5 * h;
            let mut first = true;
            while p.next < self.levels.len() {
                let l = self.levels[p.next];
                if !(first || u < self.cross_prob(x0, x1, l, h)) {
                    break;
                }
                first = false;
                let part = if self.track_integral {
                    bridge_integral(x0 - self.disc * t0, l - self.disc * tm, 0.5 * h, s2)
                } else {
                    0.0
                };
                p.hits[p.next] = Some(Hit {
                    t: tm,
                    x: l,
                    integral: p.integral + part,
                });
                p.next += 1;
            }
        } else {
            while p.next < self.levels.len() && x1 <= self.levels[p.next] {
                p.hits[p.next] = Some(Hit {
                    t: t1,
                    x: x1,
                    integral: p.integral + full,
                });
                p.next += 1;
            }
        }
        p.integral += full;
    }
}
