#![allow(dead_code)]

use std::f64::consts::{FRAC_PI_2, PI};

use qgame_qkd::{EntanglementConfig, PayoffMatrix, SimRng, StrategyParams, StrategyTriple};

pub fn random_config(rng: &mut SimRng) -> EntanglementConfig {
    EntanglementConfig::new(rng.uniform_in(0.0, FRAC_PI_2), rng.uniform_in(0.0, FRAC_PI_2)).unwrap()
}

pub fn random_params(rng: &mut SimRng) -> StrategyParams {
    StrategyParams::new(rng.uniform_in(0.0, PI), rng.uniform_in(-PI, PI), rng.uniform_in(-PI, PI)).unwrap()
}

pub fn random_strategies(rng: &mut SimRng) -> StrategyTriple {
    StrategyTriple::new(random_params(rng), random_params(rng), random_params(rng))
}

pub fn random_thetas(rng: &mut SimRng) -> StrategyTriple {
    StrategyTriple::from_thetas([rng.uniform_in(0.0, PI), rng.uniform_in(0.0, PI), rng.uniform_in(0.0, PI)]).unwrap()
}

pub fn random_matrix(rng: &mut SimRng) -> PayoffMatrix {
    PayoffMatrix::from_fn(|_, _| rng.uniform_in(-5.0, 5.0)).unwrap()
}

pub fn random_cs(rng: &mut SimRng, lo: f64, hi: f64) -> [f64; 3] {
    [rng.uniform_in(lo, hi), rng.uniform_in(lo, hi), rng.uniform_in(lo, hi)]
}

/// Brute-force payoffs for a regime at the given strategy weights.
pub fn oracle_payoffs(regime: &qgame_qkd::Regime, m: &PayoffMatrix, cs: [f64; 3]) -> qgame_qkd::Payoffs {
    let s = regime.strategies_from_cs(cs).unwrap();
    qgame_qkd::state::expected_payoffs_oracle(&regime.config().unwrap(), &s, m)
}
