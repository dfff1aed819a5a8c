//! Path dynamics: drift, diffusion and a compound Poisson jump part.

use rand::Rng;
use rand_distr::{Distribution, Exp1, Poisson, StandardNormal};

use crate::model::LevyModel;

/// Jump size law of the compound Poisson part.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Jumps {
    None,
    /// Up with probability `p_up`, size Exp(`eta_up`); otherwise down with
    /// size Exp(`eta_down`). An absent side carries an infinite rate.
    TwoSidedExp { p_up: f64, eta_up: f64, eta_down: f64 },
    /// Every jump has the same size.
    Fixed(f64),
}

/// X_t = drift·t + sigma·B_t + Σ_{i ≤ N_t} J_i with N a Poisson process of
/// rate `jump_rate`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Dynamics {
    pub drift: f64,
    pub sigma: f64,
    pub jump_rate: f64,
    pub jumps: Jumps,
}

impl Dynamics {
    pub fn from_model(model: &LevyModel) -> Self {
        match *model {
            LevyModel::BrownianDrift { m, sigma } => Dynamics {
                drift: m,
                sigma,
                jump_rate: 0.0,
                jumps: Jumps::None,
            },
            LevyModel::KouJD {
                m,
                sigma,
                a,
                p,
                eta1,
                eta2,
            } => Dynamics {
                drift: m,
                sigma,
                jump_rate: a,
                jumps: Jumps::TwoSidedExp {
                    p_up: p,
                    eta_up: eta1,
                    eta_down: eta2,
                },
            },
            LevyModel::ExpJD { m, sigma, a, eta1 } => Dynamics {
                drift: m,
                sigma,
                jump_rate: a,
                jumps: Jumps::TwoSidedExp {
                    p_up: 1.0,
                    eta_up: eta1,
                    eta_down: f64::INFINITY,
                },
            },
            LevyModel::NegPoisson { a } => Dynamics {
                drift: 0.0,
                sigma: 0.0,
                jump_rate: a,
                jumps: Jumps::Fixed(-1.0),
            },
            LevyModel::SpectNegKou { m, sigma, a, eta2 } => Dynamics {
                drift: m,
                sigma,
                jump_rate: a,
                jumps: Jumps::TwoSidedExp {
                    p_up: 0.0,
                    eta_up: f64::INFINITY,
                    eta_down: eta2,
                },
            },
        }
    }

    /// log E[e^{βX_1}], finite for β strictly inside the jump poles.
    pub fn exponent(&self, b: f64) -> f64 {
        let jump = match self.jumps {
            Jumps::None => 0.0,
            Jumps::TwoSidedExp {
                p_up,
                eta_up,
                eta_down,
            } => {
                let up = if p_up > 0.0 { p_up * b / (eta_up - b) } else { 0.0 };
                let down = if p_up < 1.0 {
                    (1.0 - p_up) * b / (eta_down + b)
                } else {
                    0.0
                };
                up - down
            }
            Jumps::Fixed(j) => (b * j).exp_m1(),
        };
        self.drift * b + 0.5 * self.sigma * self.sigma * b * b + self.jump_rate * jump
    }

    /// The law under the exponential change of measure e^{X_t − ψ(1)t}.
    /// Exponent β ↦ ψ(β + 1) − ψ(1).
    pub fn esscher(&self) -> Self {
        let drift = self.drift + self.sigma * self.sigma;
        let (jump_rate, jumps) = match self.jumps {
            Jumps::None => (0.0, Jumps::None),
            Jumps::TwoSidedExp {
                p_up,
                eta_up,
                eta_down,
            } => {
                let up = if p_up > 0.0 {
                    p_up * eta_up / (eta_up - 1.0)
                } else {
                    0.0
                };
                let down = if p_up < 1.0 {
                    (1.0 - p_up) * eta_down / (eta_down + 1.0)
                } else {
                    0.0
                };
                let total = up + down;
                (
                    self.jump_rate * total,
                    Jumps::TwoSidedExp {
                        p_up: up / total,
                        eta_up: eta_up - 1.0,
                        eta_down: eta_down + 1.0,
                    },
                )
            }
            Jumps::Fixed(j) => (self.jump_rate * j.exp(), Jumps::Fixed(j)),
        };
        Dynamics {
            drift,
            sigma: self.sigma,
            jump_rate,
            jumps,
        }
    }

    pub fn shifted(&self, d: f64) -> Self {
        Dynamics {
            drift: self.drift + d,
            ..*self
        }
    }

    /// The law of −X.
    pub fn negated(&self) -> Self {
        let jumps = match self.jumps {
            Jumps::None => Jumps::None,
            Jumps::TwoSidedExp {
                p_up,
                eta_up,
                eta_down,
            } => Jumps::TwoSidedExp {
                p_up: 1.0 - p_up,
                eta_up: eta_down,
                eta_down: eta_up,
            },
            Jumps::Fixed(j) => Jumps::Fixed(-j),
        };
        Dynamics {
            drift: -self.drift,
            jumps,
            ..*self
        }
    }

    pub(crate) fn sample_jump<R: Rng>(&self, rng: &mut R) -> f64 {
        match self.jumps {
            Jumps::None => 0.0,
            Jumps::TwoSidedExp {
                p_up,
                eta_up,
                eta_down,
            } => {
                let u: f64 = rng.random();
                let e: f64 = Exp1.sample(rng);
                if u < p_up {
                    e / eta_up
                } else {
                    -e / eta_down
                }
            }
            Jumps::Fixed(j) => j,
        }
    }

    /// One draw of X_t, exact.
    pub fn sample_increment<R: Rng>(&self, t: f64, rng: &mut R) -> f64 {
        let z: f64 = StandardNormal.sample(rng);
        let mut x = self.drift * t + self.sigma * t.sqrt() * z;
        let mean = self.jump_rate * t;
        if mean > 0.0 {
            let n = Poisson::new(mean).map(|d| d.sample(rng)).unwrap_or(0.0) as u64;
            for _ in 0..n {
                x += self.sample_jump(rng);
            }
        }
        x
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponents_match_models() {
        let models = [
            LevyModel::BrownianDrift { m: 0.2, sigma: 0.7 },
            LevyModel::KouJD {
                m: 0.1,
                sigma: 0.3,
                a: 1.0,
                p: 0.4,
                eta1: 3.0,
                eta2: 2.0,
            },
            LevyModel::ExpJD {
                m: -0.1,
                sigma: 0.5,
                a: 0.7,
                eta1: 4.0,
            },
            LevyModel::NegPoisson { a: 1.3 },
            LevyModel::SpectNegKou {
                m: 0.0,
                sigma: 0.4,
                a: 1.0,
                eta2: 2.0,
            },
        ];
        for m in &models {
            let d = Dynamics::from_model(m);
            let e = d.esscher();
            let n = d.negated();
            for &b in &[-0.5, 0.3, 1.0, 1.5] {
                assert!((d.exponent(b) - m.exponent(b)).abs() < 1e-12, "{m:?}");
                let want = m.exponent(b + 1.0) - m.exponent(1.0);
                assert!((e.exponent(b) - want).abs() < 1e-12, "{m:?} {b}");
                assert!((n.exponent(b) - m.exponent(-b)).abs() < 1e-12);
            }
        }
    }
}
