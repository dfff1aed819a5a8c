//! Fixtures shared by the benchmarks.

use levystop_core::{LevyModel, ProblemSpec};

pub const BROWNIAN: LevyModel = LevyModel::BrownianDrift { m: 0.0, sigma: 1.0 };

pub const KOU: LevyModel = LevyModel::KouJD {
    m: 0.1,
    sigma: 0.3,
    a: 1.0,
    p: 0.5,
    eta1: 3.0,
    eta2: 2.0,
};

pub const EXPJD: LevyModel = LevyModel::ExpJD {
    m: -0.2,
    sigma: 0.4,
    a: 0.8,
    eta1: 4.0,
};

pub const NEG_POISSON: LevyModel = LevyModel::NegPoisson { a: 2.0 };

pub const SPECTNEG_KOU: LevyModel = LevyModel::SpectNegKou {
    m: 0.1,
    sigma: 0.3,
    a: 1.0,
    eta2: 2.0,
};

/// Every family with a short name, at r = 1.
pub fn families() -> [(&'static str, LevyModel); 5] {
    [
        ("brownian", BROWNIAN),
        ("kou", KOU),
        ("expjd", EXPJD),
        ("neg_poisson", NEG_POISSON),
        ("spectneg_kou", SPECTNEG_KOU),
    ]
}

/// α = c = 1, r = 1 and v = 2 so that B_c < v for every fixture.
pub fn problem(model: LevyModel) -> ProblemSpec {
    ProblemSpec::new(model, 1.0, 1.0, 1.0, 2.0).expect("fixture is admissible")
}
