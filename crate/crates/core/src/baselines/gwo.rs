use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::optcore::{
    search_fitness, sigmoid_binarize, ContinuousPosition, FeatureMask, Individual, Population, RngStream,
    SearchOutcome,
};

use super::tlbo::random_population;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GwoConfig {
    pub iter_max: usize,
    pub pop_size: usize,
}

impl Default for GwoConfig {
    fn default() -> Self {
        Self {
            iter_max: 500,
            pop_size: 30,
        }
    }
}

/// Leaders for one round of position updates.
#[derive(Debug, Clone)]
pub struct GwoState {
    pub a: f64,
    pub alpha: Individual,
    pub beta: Individual,
    pub delta: Individual,
    pub iteration: usize,
}

impl GwoState {
    /// Takes the three fittest members of `pop` as alpha, beta and delta.
    pub fn from_population(pop: &Population, a: f64, iteration: usize) -> Result<Self> {
        if pop.len() < 3 {
            return Err(Error::invalid("GWO needs at least three members"));
        }
        let top = pop.top(3);
        Ok(Self {
            a,
            alpha: pop.members[top[0]].clone(),
            beta: pop.members[top[1]].clone(),
            delta: pop.members[top[2]].clone(),
            iteration,
        })
    }

    fn leader_positions(&self) -> [&[f64]; 3] {
        [
            self.alpha.position.values(),
            self.beta.position.values(),
            self.delta.position.values(),
        ]
    }
}

/// `a = 2 - 2 t / iter_max`, falling linearly from 2 to 0.
pub fn decay_a(t: usize, iter_max: usize) -> f64 {
    if iter_max == 0 {
        return 0.0;
    }
    2.0 - 2.0 * t as f64 / iter_max as f64
}

pub fn wolf_update(x: &ContinuousPosition, state: &GwoState, rng: &mut RngStream) -> ContinuousPosition {
    wolf_update_with(x, state.leader_positions(), state.a, || rng.uniform())
}

/// Hunting step: for each leader L, `A = 2a r1 - a`, `C = 2 r2`,
/// `D = |C x_L - x|`, `x_L' = x_L - A D`; the result averages the three `x_L'`.
///
/// Draws are consumed per dimension, per leader, `r1` before `r2`.
pub fn wolf_update_with(
    x: &ContinuousPosition,
    leaders: [&[f64]; 3],
    a: f64,
    mut draw: impl FnMut() -> f64,
) -> ContinuousPosition {
    let values = x
        .values()
        .iter()
        .enumerate()
        .map(|(j, &xj)| {
            let sum: f64 = leaders
                .iter()
                .map(|leader| {
                    let big_a = 2.0 * a * draw() - a;
                    let c = 2.0 * draw();
                    let d = (c * leader[j] - xj).abs();
                    leader[j] - big_a * d
                })
                .sum();
            sum / 3.0
        })
        .collect();
    ContinuousPosition(values)
}

/// Binary GWO maximizing the MAD of one document's weights. Members follow the
/// current three best unconditionally; the archive keeps the best seen.
pub fn run_gwo(weights: &[f64], config: &GwoConfig, rng: &mut RngStream) -> Result<SearchOutcome> {
    if weights.is_empty() {
        return Err(Error::invalid("document has no features"));
    }
    if config.pop_size < 3 {
        return Err(Error::invalid("GWO needs a population of at least 3"));
    }
    let fitness = |m: &FeatureMask| search_fitness(m, weights);
    let mut pop = random_population(weights.len(), config.pop_size, &fitness, rng);
    let mut trace = Vec::with_capacity(config.iter_max + 1);
    trace.push(pop.trace_point());
    for it in 1..=config.iter_max {
        let state = GwoState::from_population(&pop, decay_a(it, config.iter_max), it)?;
        for i in 0..pop.len() {
            let position = wolf_update(&pop.members[i].position, &state, rng);
            let mask = sigmoid_binarize(&position, rng);
            pop.members[i] = Individual::evaluated(position, mask, &fitness);
        }
        pop.update_archive();
        trace.push(pop.trace_point());
    }
    Ok(SearchOutcome {
        best: pop.best,
        trace,
    })
}
