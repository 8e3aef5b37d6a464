//! The hybrid TLBO-GWO feature selector.
//!
//! Each iteration runs three stages over a population of students:
//!
//! 1. **Teaching**: every student is uniformly crossed with the teacher (the
//!    fittest student); the child replaces the student only if fitter.
//! 2. **Interactive learning**: students move towards the three best students
//!    with the grey wolf update, then are re-binarized. Replacement is
//!    unconditional; the archive keeps the best mask seen.
//! 3. **Self-learning**: rank-based mutation, zero for the best student and
//!    `p_max` for the worst, with greedy acceptance.
//!
//! Selection runs independently per document; the corpus-level subset is the
//! union of every document's best mask.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::baselines::{decay_a, wolf_update, GwoState};
use crate::corpus::WeightMatrix;
use crate::error::{Error, Result};
use crate::optcore::{
    search_fitness, mutate, random_mask, rank_mutation_prob, rank_population, sigmoid_binarize,
    uniform_crossover, ContinuousPosition, FeatureMask, Individual, MutationPolicy, Population,
    RngStream, SearchOutcome, TracePoint,
};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HybridConfig {
    pub iter_max: usize,
    pub pop_size: usize,
    pub p_max: f64,
    pub seed: u64,
}

impl Default for HybridConfig {
    fn default() -> Self {
        Self {
            iter_max: 500,
            pop_size: 30,
            p_max: 0.08,
            seed: 0,
        }
    }
}

impl HybridConfig {
    pub fn validate(&self) -> Result<()> {
        if self.pop_size < 3 {
            return Err(Error::invalid("TLBO-GWO needs a population of at least 3"));
        }
        MutationPolicy::new(self.p_max)?;
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DocumentRunResult {
    /// Row of the weight matrix.
    pub doc_index: usize,
    pub best_mask: FeatureMask,
    pub best_fitness: f64,
    pub trace: Vec<TracePoint>,
}

#[derive(Debug, Clone)]
pub struct GlobalSelection {
    /// Union of all per-document best masks.
    pub global_mask: FeatureMask,
    /// One entry per non-empty document, in row order.
    pub per_document: Vec<DocumentRunResult>,
    pub reduction_ratio: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Teaching,
    InteractiveLearning,
    SelfLearning,
}

/// Member fitness and archive fitness around one stage.
#[derive(Debug, Clone)]
pub struct StageEvent {
    pub iteration: usize,
    pub stage: Stage,
    pub fitness_before: Vec<f64>,
    pub fitness_after: Vec<f64>,
    pub archive_before: f64,
    pub archive_after: f64,
}

pub fn teaching_stage(pop: &mut Population, fitness: &dyn Fn(&FeatureMask) -> f64, rng: &mut RngStream) {
    let teacher = pop.members[pop.best_member()].mask.clone();
    for i in 0..pop.len() {
        let child = uniform_crossover(&pop.members[i].mask, &teacher, rng)
            .expect("population masks share one length");
        let f = fitness(&child);
        if f > pop.members[i].fitness {
            let candidate = Individual {
                position: ContinuousPosition::from_mask(&child),
                mask: child,
                fitness: f,
            };
            pop.offer(&candidate);
            pop.members[i] = candidate;
        }
    }
}

/// Grey wolf moves towards the leaders chosen at stage entry.
pub fn interactive_learning_stage(
    pop: &mut Population,
    fitness: &dyn Fn(&FeatureMask) -> f64,
    a: f64,
    rng: &mut RngStream,
) -> Result<()> {
    let leaders = GwoState::from_population(pop, a, 0)?;
    for i in 0..pop.len() {
        let position = wolf_update(&pop.members[i].position, &leaders, rng);
        let mask = sigmoid_binarize(&position, rng);
        let candidate = Individual::evaluated(position, mask, fitness);
        pop.offer(&candidate);
        pop.members[i] = candidate;
    }
    Ok(())
}

pub fn self_learning_stage(
    pop: &mut Population,
    fitness: &dyn Fn(&FeatureMask) -> f64,
    policy: MutationPolicy,
    rng: &mut RngStream,
) -> Result<()> {
    let ranks = rank_population(&pop.fitnesses());
    let n = pop.len();
    for (i, &rank) in ranks.iter().enumerate() {
        let p = rank_mutation_prob(rank, n, policy.p_max)?;
        let child = mutate(&pop.members[i].mask, p, rng);
        let f = fitness(&child);
        if f > pop.members[i].fitness {
            let candidate = Individual {
                position: ContinuousPosition::from_mask(&child),
                mask: child,
                fitness: f,
            };
            pop.offer(&candidate);
            pop.members[i] = candidate;
        }
    }
    Ok(())
}

fn initial_population(
    t: usize,
    pop_size: usize,
    fitness: &dyn Fn(&FeatureMask) -> f64,
    rng: &mut RngStream,
) -> Result<Population> {
    let members = (0..pop_size)
        .map(|_| {
            let mask = random_mask(t, rng)?;
            Ok(Individual::evaluated(ContinuousPosition::from_mask(&mask), mask, fitness))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Population::new(members))
}

/// Runs the hybrid on one document's weight vector.
pub fn run_document_fs(weights: &[f64], config: &HybridConfig, rng: &mut RngStream) -> Result<SearchOutcome> {
    run_document_fs_observed(weights, config, rng, &mut |_| {})
}

/// As [`run_document_fs`], reporting every stage to `observer`.
pub fn run_document_fs_observed(
    weights: &[f64],
    config: &HybridConfig,
    rng: &mut RngStream,
    observer: &mut dyn FnMut(&StageEvent),
) -> Result<SearchOutcome> {
    config.validate()?;
    if weights.is_empty() {
        return Err(Error::invalid("document has no features"));
    }
    let policy = MutationPolicy::new(config.p_max)?;
    let fitness = |m: &FeatureMask| search_fitness(m, weights);
    let mut pop = initial_population(weights.len(), config.pop_size, &fitness, rng)?;
    let mut trace = Vec::with_capacity(config.iter_max + 1);
    trace.push(pop.trace_point());

    for it in 1..=config.iter_max {
        for stage in [Stage::Teaching, Stage::InteractiveLearning, Stage::SelfLearning] {
            let fitness_before = pop.fitnesses();
            let archive_before = pop.best.fitness;
            match stage {
                Stage::Teaching => teaching_stage(&mut pop, &fitness, rng),
                Stage::InteractiveLearning => {
                    interactive_learning_stage(&mut pop, &fitness, decay_a(it, config.iter_max), rng)?
                }
                Stage::SelfLearning => self_learning_stage(&mut pop, &fitness, policy, rng)?,
            }
            observer(&StageEvent {
                iteration: it,
                stage,
                fitness_before,
                fitness_after: pop.fitnesses(),
                archive_before,
                archive_after: pop.best.fitness,
            });
        }
        trace.push(pop.trace_point());
    }
    Ok(SearchOutcome {
        best: pop.best,
        trace,
    })
}

/// Runs `search` on every non-empty row and unions the best masks.
///
/// Row `i` gets the stream seeded with `seed ^ doc_id(i)`, so results follow
/// the document rather than its position in the matrix.
pub fn select_global<F>(matrix: &WeightMatrix, seed: u64, search: F) -> Result<GlobalSelection>
where
    F: Fn(&[f64], &mut RngStream) -> Result<SearchOutcome> + Sync,
{
    let per_document = (0..matrix.n())
        .into_par_iter()
        .filter(|&i| !matrix.is_zero_row(i))
        .map(|i| {
            let mut rng = RngStream::new(seed ^ matrix.doc_ids()[i] as u64);
            let outcome = search(matrix.row(i), &mut rng)?;
            Ok(DocumentRunResult {
                doc_index: i,
                best_fitness: outcome.best.fitness,
                best_mask: outcome.best.mask,
                trace: outcome.trace,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let mut global_mask = FeatureMask::zeros(matrix.t());
    for r in &per_document {
        global_mask.union_with(&r.best_mask)?;
    }
    let reduction_ratio = if matrix.t() == 0 {
        0.0
    } else {
        1.0 - global_mask.count_ones() as f64 / matrix.t() as f64
    };
    Ok(GlobalSelection {
        global_mask,
        per_document,
        reduction_ratio,
    })
}

/// Hybrid selection over the whole corpus.
pub fn run_corpus_fs(matrix: &WeightMatrix, config: &HybridConfig) -> Result<GlobalSelection> {
    config.validate()?;
    select_global(matrix, config.seed, |w, rng| run_document_fs(w, config, rng))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(s: &str) -> FeatureMask {
        FeatureMask::parse(s).unwrap()
    }

    fn ind(mask: &str, fitness: f64) -> Individual {
        let mask = m(mask);
        Individual {
            position: ContinuousPosition::from_mask(&mask),
            mask,
            fitness,
        }
    }

    #[test]
    fn teaching_keeps_better_member_and_teacher() {
        // Fitness pinned per mask so the greedy rule is visible.
        let f = |mask: &FeatureMask| match mask.to_string().as_str() {
            "1100" => 0.9,
            "0011" => 0.5,
            _ => 0.4,
        };
        let mut pop = Population::new(vec![ind("1100", 0.9), ind("0011", 0.5)]);
        teaching_stage(&mut pop, &f, &mut RngStream::new(1));
        assert_eq!(pop.members[0].mask, m("1100"));
        assert_eq!(pop.members[1].mask, m("0011"));
    }

    #[test]
    fn teaching_adopts_fitter_child() {
        let f = |mask: &FeatureMask| if mask.get(0) { 0.6 } else { 0.1 };
        // Any child of 0111 and the teacher 1000 that takes bit 0 from the teacher is fitter.
        let mut pop = Population::new(vec![ind("1000", 0.6), ind("0111", 0.1)]);
        let mut rng = RngStream::new(0);
        for _ in 0..20 {
            teaching_stage(&mut pop, &f, &mut rng);
        }
        assert!(pop.members[1].mask.get(0));
        assert_eq!(pop.members[1].fitness, 0.6);
        assert_eq!(pop.members[1].position, ContinuousPosition::from_mask(&pop.members[1].mask));
    }

    #[test]
    fn best_student_never_mutated() {
        let w = [0.0, 0.9, 0.2, 0.4, 0.7, 0.1];
        let fitness = |mask: &FeatureMask| search_fitness(mask, &w);
        let mut rng = RngStream::new(12);
        let mut pop = initial_population(w.len(), 10, &fitness, &mut rng).unwrap();
        let ranks = rank_population(&pop.fitnesses());
        let top = ranks.iter().position(|&r| r == 10).unwrap();
        let before = pop.members[top].clone();
        self_learning_stage(&mut pop, &fitness, MutationPolicy::new(1.0).unwrap(), &mut rng).unwrap();
        assert_eq!(pop.members[top], before);
    }

    #[test]
    fn worst_member_flip_rate() {
        // Rank 1 mutates at p_max; count flips over a zero mask of 1000 bits.
        let mut rng = RngStream::new(77);
        let flips: usize = (0..20)
            .map(|_| mutate(&FeatureMask::zeros(1000), rank_mutation_prob(1, 30, 0.08).unwrap(), &mut rng).count_ones())
            .sum();
        let mean = flips as f64 / 20.0;
        // 20 draws: sd of the mean is sqrt(73.6/20) ~ 1.92.
        assert!((mean - 80.0).abs() < 8.0, "{mean}");
    }

    #[test]
    fn interactive_stage_fixed_point_and_snapshot() {
        let w = [0.0, 1.0, 0.5];
        let fitness = |mask: &FeatureMask| search_fitness(mask, &w);
        // All members at the same position with a = 0: positions stay put.
        let members: Vec<_> = (0..4)
            .map(|_| Individual::evaluated(ContinuousPosition(vec![30.0, 30.0, -30.0]), m("110"), &fitness))
            .collect();
        let mut pop = Population::new(members);
        interactive_learning_stage(&mut pop, &fitness, 0.0, &mut RngStream::new(3)).unwrap();
        for member in &pop.members {
            assert_eq!(member.position.values(), &[30.0, 30.0, -30.0]);
            assert_eq!(member.mask, m("110"));
        }
        let mut small = Population::new(vec![ind("110", 0.5), ind("011", 0.25)]);
        assert!(interactive_learning_stage(&mut small, &fitness, 1.0, &mut RngStream::new(3)).is_err());
    }

    #[test]
    fn constant_document_scores_zero() {
        let w = vec![0.7; 9];
        let cfg = HybridConfig { iter_max: 10, pop_size: 6, ..Default::default() };
        let out = run_document_fs(&w, &cfg, &mut RngStream::new(1)).unwrap();
        assert_eq!(out.best.fitness, 0.0);
        assert!(out.trace.iter().all(|p| p.best == 0.0));
    }

    #[test]
    fn stage_order_and_monotonicity() {
        let w = [0.0, 0.3, 1.2, 0.05, 0.8, 0.0, 0.4, 2.0, 0.1, 0.0];
        let cfg = HybridConfig { iter_max: 15, pop_size: 8, ..Default::default() };
        let mut events = Vec::new();
        run_document_fs_observed(&w, &cfg, &mut RngStream::new(6), &mut |e| events.push(e.clone())).unwrap();
        assert_eq!(events.len(), 45);
        for (k, e) in events.iter().enumerate() {
            let expected = [Stage::Teaching, Stage::InteractiveLearning, Stage::SelfLearning][k % 3];
            assert_eq!(e.stage, expected);
            assert_eq!(e.iteration, k / 3 + 1);
            assert!(e.archive_after >= e.archive_before);
            if e.stage != Stage::InteractiveLearning {
                assert!(e.fitness_after.iter().zip(&e.fitness_before).all(|(a, b)| a >= b));
            }
        }
    }

    #[test]
    fn rejects_bad_config() {
        let w = [0.1, 0.2];
        let mut rng = RngStream::new(0);
        let small = HybridConfig { pop_size: 2, ..Default::default() };
        assert!(run_document_fs(&w, &small, &mut rng).is_err());
        let bad_p = HybridConfig { p_max: 0.0, ..Default::default() };
        assert!(run_document_fs(&w, &bad_p, &mut rng).is_err());
    }

    #[test]
    fn corpus_union_examples() {
        let cfg = HybridConfig { iter_max: 20, pop_size: 6, p_max: 0.08, seed: 9 };
        let one = WeightMatrix::from_rows(&[vec![0.0, 1.0, 0.2, 0.0, 3.0]]).unwrap();
        let sel = run_corpus_fs(&one, &cfg).unwrap();
        assert_eq!(sel.global_mask, sel.per_document[0].best_mask);

        // Disjoint supports; a zero row contributes nothing.
        let rows = vec![
            vec![0.5, 2.0, 1.0, 0.0, 0.0, 0.0],
            vec![0.0, 0.0, 0.0, 1.5, 0.2, 0.9],
            vec![0.0; 6],
        ];
        let mat = WeightMatrix::from_rows(&rows).unwrap();
        let sel = run_corpus_fs(&mat, &cfg).unwrap();
        assert_eq!(sel.per_document.len(), 2);
        let mut expected = FeatureMask::zeros(6);
        for r in &sel.per_document {
            expected.union_with(&r.best_mask).unwrap();
            let mut g = sel.global_mask.clone();
            g.union_with(&r.best_mask).unwrap();
            assert_eq!(g, sel.global_mask);
            assert_eq!(r.best_fitness, r.trace.last().unwrap().best);
        }
        assert_eq!(sel.global_mask, expected);
        let t = 6.0;
        assert!((sel.reduction_ratio - (1.0 - sel.global_mask.count_ones() as f64 / t)).abs() < 1e-15);
    }
}
