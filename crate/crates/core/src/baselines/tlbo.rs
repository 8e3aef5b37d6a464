use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::optcore::{
    search_fitness, sigmoid_binarize, ContinuousPosition, FeatureMask, Individual, Population, RngStream,
    SearchOutcome,
};

/// Which partner a learner moves towards.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LearnerRule {
    /// Higher fitness is better (MAD). Learners move towards fitter partners.
    #[default]
    Maximize,
    /// Classic textbook form for minimization problems.
    Minimize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TlboConfig {
    pub iter_max: usize,
    pub pop_size: usize,
    pub learner_rule: LearnerRule,
}

impl Default for TlboConfig {
    fn default() -> Self {
        Self {
            iter_max: 500,
            pop_size: 30,
            learner_rule: LearnerRule::Maximize,
        }
    }
}

/// `x + r * (teacher - tf * mean)`.
pub fn teacher_candidate(x: &[f64], mean: &[f64], teacher: &[f64], tf: f64, r: f64) -> Vec<f64> {
    x.iter()
        .zip(mean.iter().zip(teacher))
        .map(|(&xi, (&m, &t))| xi + r * (t - tf * m))
        .collect()
}

/// Moves learner `i` away from a weaker partner `j`, or towards a fitter one.
pub fn learner_candidate(
    xi: &[f64],
    xj: &[f64],
    fi: f64,
    fj: f64,
    r: f64,
    rule: LearnerRule,
) -> Vec<f64> {
    let i_better = match rule {
        LearnerRule::Maximize => fi > fj,
        LearnerRule::Minimize => fi < fj,
    };
    xi.iter()
        .zip(xj)
        .map(|(&a, &b)| if i_better { a + r * (a - b) } else { a + r * (b - a) })
        .collect()
}

fn column_mean(pop: &Population) -> Vec<f64> {
    let t = pop.members[0].position.len();
    let mut mean = vec![0.0; t];
    for m in &pop.members {
        for (acc, x) in mean.iter_mut().zip(m.position.values()) {
            *acc += x;
        }
    }
    let n = pop.len() as f64;
    mean.iter_mut().for_each(|x| *x /= n);
    mean
}

fn try_replace(
    pop: &mut Population,
    i: usize,
    position: Vec<f64>,
    fitness: &dyn Fn(&FeatureMask) -> f64,
    rng: &mut RngStream,
) {
    let position = ContinuousPosition(position);
    let mask = sigmoid_binarize(&position, rng);
    let candidate = Individual::evaluated(position, mask, fitness);
    if candidate.fitness > pop.members[i].fitness {
        pop.offer(&candidate);
        pop.members[i] = candidate;
    }
}

/// Every member steps along `r * (teacher - tf * mean)`; improvements are kept.
/// The teacher (fittest member) and the class mean are fixed at phase entry and
/// the teaching factor is drawn once per phase.
pub fn teacher_phase(pop: &mut Population, fitness: &dyn Fn(&FeatureMask) -> f64, rng: &mut RngStream) {
    let mean = column_mean(pop);
    let teacher = pop.members[pop.best_member()].position.clone();
    let tf = (1 + rng.below(2)) as f64;
    for i in 0..pop.len() {
        let r = rng.uniform();
        let cand = teacher_candidate(pop.members[i].position.values(), &mean, teacher.values(), tf, r);
        try_replace(pop, i, cand, fitness, rng);
    }
}

/// Each member interacts with a random partner; improvements are kept.
pub fn learner_phase(
    pop: &mut Population,
    fitness: &dyn Fn(&FeatureMask) -> f64,
    rule: LearnerRule,
    rng: &mut RngStream,
) {
    let n = pop.len();
    assert!(n >= 2, "learner phase needs at least two members");
    for i in 0..n {
        let mut j = rng.below(n - 1);
        if j >= i {
            j += 1;
        }
        let r = rng.uniform();
        let (a, b) = (&pop.members[i], &pop.members[j]);
        let cand = learner_candidate(
            a.position.values(),
            b.position.values(),
            a.fitness,
            b.fitness,
            r,
            rule,
        );
        try_replace(pop, i, cand, fitness, rng);
    }
}

pub(crate) fn random_population(
    t: usize,
    pop_size: usize,
    fitness: &dyn Fn(&FeatureMask) -> f64,
    rng: &mut RngStream,
) -> Population {
    let members = (0..pop_size)
        .map(|_| {
            let position = ContinuousPosition::random(t, rng);
            let mask = sigmoid_binarize(&position, rng);
            Individual::evaluated(position, mask, fitness)
        })
        .collect();
    Population::new(members)
}

/// Binary TLBO maximizing the MAD of one document's weights.
pub fn run_tlbo(weights: &[f64], config: &TlboConfig, rng: &mut RngStream) -> Result<SearchOutcome> {
    if weights.is_empty() {
        return Err(Error::invalid("document has no features"));
    }
    if config.pop_size < 2 {
        return Err(Error::invalid("TLBO needs a population of at least 2"));
    }
    let fitness = |m: &FeatureMask| search_fitness(m, weights);
    let mut pop = random_population(weights.len(), config.pop_size, &fitness, rng);
    let mut trace = Vec::with_capacity(config.iter_max + 1);
    trace.push(pop.trace_point());
    for _ in 0..config.iter_max {
        teacher_phase(&mut pop, &fitness, rng);
        learner_phase(&mut pop, &fitness, config.learner_rule, rng);
        trace.push(pop.trace_point());
    }
    Ok(SearchOutcome {
        best: pop.best,
        trace,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn teacher_step_arithmetic() {
        assert_eq!(teacher_candidate(&[0.2], &[0.5], &[1.0], 1.0, 1.0), vec![0.7]);
        // Teacher at the mean with tf = 1 is a fixed point.
        assert_eq!(teacher_candidate(&[0.3, -0.4], &[0.1, 0.2], &[0.1, 0.2], 1.0, 0.37), vec![0.3, -0.4]);
        assert_eq!(teacher_candidate(&[0.3], &[0.9], &[-2.0], 2.0, 0.0), vec![0.3]);
    }

    #[test]
    fn learner_step_arithmetic() {
        let x = learner_candidate(&[0.2], &[0.8], 0.9, 0.1, 0.5, LearnerRule::Maximize);
        assert!((x[0] + 0.1).abs() < 1e-12);
        // Minimization flips the branch.
        let x = learner_candidate(&[0.2], &[0.8], 0.9, 0.1, 0.5, LearnerRule::Minimize);
        assert!((x[0] - 0.5).abs() < 1e-12);
        assert_eq!(learner_candidate(&[0.2], &[0.8], 0.9, 0.1, 0.0, LearnerRule::Maximize), vec![0.2]);
        assert_eq!(learner_candidate(&[0.4, 1.0], &[0.4, 1.0], 0.1, 0.9, 0.7, LearnerRule::Maximize), vec![0.4, 1.0]);
    }

    fn weights() -> Vec<f64> {
        vec![0.1, 0.9, 0.3, 0.0, 0.6, 0.25, 0.7, 0.05]
    }

    #[test]
    fn phases_never_lower_member_fitness() {
        let w = weights();
        let fitness = |m: &FeatureMask| search_fitness(m, &w);
        let mut rng = RngStream::new(4);
        let mut pop = random_population(w.len(), 10, &fitness, &mut rng);
        for _ in 0..20 {
            let before = pop.fitnesses();
            teacher_phase(&mut pop, &fitness, &mut rng);
            assert!(pop.fitnesses().iter().zip(&before).all(|(a, b)| a >= b));
            let before = pop.fitnesses();
            learner_phase(&mut pop, &fitness, LearnerRule::Maximize, &mut rng);
            assert!(pop.fitnesses().iter().zip(&before).all(|(a, b)| a >= b));
            for m in &pop.members {
                assert_eq!(m.fitness, search_fitness(&m.mask, &w));
            }
        }
    }

    #[test]
    fn zero_iterations_returns_initial_best() {
        let w = weights();
        let cfg = TlboConfig { iter_max: 0, pop_size: 6, ..Default::default() };
        let out = run_tlbo(&w, &cfg, &mut RngStream::new(8)).unwrap();
        assert_eq!(out.trace.len(), 1);
        let fitness = |m: &FeatureMask| search_fitness(m, &w);
        let pop = random_population(w.len(), 6, &fitness, &mut RngStream::new(8));
        assert_eq!(out.best.fitness, pop.best.fitness);
    }

    #[test]
    fn deterministic_and_monotone() {
        let w = weights();
        let cfg = TlboConfig { iter_max: 40, pop_size: 8, ..Default::default() };
        let a = run_tlbo(&w, &cfg, &mut RngStream::new(21)).unwrap();
        let b = run_tlbo(&w, &cfg, &mut RngStream::new(21)).unwrap();
        assert_eq!(a.trace, b.trace);
        assert_eq!(a.best.mask, b.best.mask);
        assert_eq!(a.trace.len(), 41);
        assert!(a.trace.windows(2).all(|p| p[1].best >= p[0].best));
    }
}
