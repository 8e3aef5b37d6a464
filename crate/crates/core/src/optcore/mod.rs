//! Binary optimization machinery shared by every optimizer: the feature
//! mask representation, the MAD fitness, sigmoid binarization and the
//! crossover / rank-mutation operators.

mod rng;

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{check_len, Error, Result};

pub use rng::{mix_seed, RngStream};

/// One bit per vocabulary term; a set bit selects the term.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct FeatureMask(Vec<bool>);

impl FeatureMask {
    pub fn new(bits: Vec<bool>) -> Self {
        Self(bits)
    }

    pub fn zeros(t: usize) -> Self {
        Self(vec![false; t])
    }

    pub fn ones_mask(t: usize) -> Self {
        Self(vec![true; t])
    }

    /// Parses a string of `0`/`1` characters.
    pub fn parse(s: &str) -> Result<Self> {
        s.chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                other => Err(Error::invalid(format!("mask character {other:?}"))),
            })
            .collect::<Result<Vec<_>>>()
            .map(Self)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn bits(&self) -> &[bool] {
        &self.0
    }

    pub fn get(&self, j: usize) -> bool {
        self.0[j]
    }

    pub fn set(&mut self, j: usize, bit: bool) {
        self.0[j] = bit;
    }

    /// Number of selected features.
    pub fn count_ones(&self) -> usize {
        self.0.iter().filter(|b| **b).count()
    }

    /// Indices of selected features.
    pub fn ones(&self) -> impl Iterator<Item = usize> + '_ {
        self.0.iter().enumerate().filter(|(_, b)| **b).map(|(j, _)| j)
    }

    pub fn union_with(&mut self, other: &FeatureMask) -> Result<()> {
        check_len(self.len(), other.len())?;
        for (a, b) in self.0.iter_mut().zip(&other.0) {
            *a |= *b;
        }
        Ok(())
    }
}

impl fmt::Display for FeatureMask {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &b in &self.0 {
            f.write_str(if b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

/// Real-valued search position, binarized through the sigmoid before evaluation.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ContinuousPosition(pub Vec<f64>);

impl ContinuousPosition {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    /// +1 for selected bits, -1 otherwise.
    pub fn from_mask(mask: &FeatureMask) -> Self {
        Self(mask.bits().iter().map(|&b| if b { 1.0 } else { -1.0 }).collect())
    }

    /// Uniform in `[-1, 1)` per dimension.
    pub fn random(t: usize, rng: &mut RngStream) -> Self {
        Self((0..t).map(|_| rng.range(-1.0, 1.0)).collect())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Individual {
    pub position: ContinuousPosition,
    pub mask: FeatureMask,
    /// MAD of `mask`; higher is better.
    pub fitness: f64,
}

impl Individual {
    pub fn evaluated(position: ContinuousPosition, mask: FeatureMask, fitness: &dyn Fn(&FeatureMask) -> f64) -> Self {
        let f = fitness(&mask);
        Self {
            position,
            mask,
            fitness: f,
        }
    }
}

/// Best-so-far and mean member fitness after one iteration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TracePoint {
    pub best: f64,
    pub mean: f64,
}

#[derive(Debug, Clone)]
pub struct Population {
    pub members: Vec<Individual>,
    /// Best individual observed so far in the run.
    pub best: Individual,
}

impl Population {
    pub fn new(members: Vec<Individual>) -> Self {
        assert!(!members.is_empty(), "population must be non-empty");
        let best = members[best_index(&members)].clone();
        Self { members, best }
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn fitnesses(&self) -> Vec<f64> {
        self.members.iter().map(|m| m.fitness).collect()
    }

    /// Index of the fittest current member (lowest index among ties).
    pub fn best_member(&self) -> usize {
        best_index(&self.members)
    }

    /// Indices of the `k` fittest members, best first, ties by lower index.
    pub fn top(&self, k: usize) -> Vec<usize> {
        let mut idx: Vec<usize> = (0..self.members.len()).collect();
        idx.sort_by(|&a, &b| {
            self.members[b]
                .fitness
                .total_cmp(&self.members[a].fitness)
                .then(a.cmp(&b))
        });
        idx.truncate(k);
        idx
    }

    pub fn mean_fitness(&self) -> f64 {
        self.members.iter().map(|m| m.fitness).sum::<f64>() / self.members.len() as f64
    }

    /// Copies any member strictly better than the archive into it.
    pub fn update_archive(&mut self) {
        let i = best_index(&self.members);
        if self.members[i].fitness > self.best.fitness {
            self.best = self.members[i].clone();
        }
    }

    pub fn offer(&mut self, candidate: &Individual) {
        if candidate.fitness > self.best.fitness {
            self.best = candidate.clone();
        }
    }

    pub fn trace_point(&self) -> TracePoint {
        TracePoint {
            best: self.best.fitness,
            mean: self.mean_fitness(),
        }
    }
}

fn best_index(members: &[Individual]) -> usize {
    let mut best = 0;
    for (i, m) in members.iter().enumerate().skip(1) {
        if m.fitness > members[best].fitness {
            best = i;
        }
    }
    best
}

/// Final archive and convergence trace of one optimizer run.
#[derive(Debug, Clone)]
pub struct SearchOutcome {
    pub best: Individual,
    /// `iter_max + 1` points; entry 0 is the initial population.
    pub trace: Vec<TracePoint>,
}

/// Mean absolute difference of the selected weights around their mean.
///
/// Only selected features take part; masks with fewer than two selected
/// features score 0.
pub fn mad_fitness(mask: &FeatureMask, weights: &[f64]) -> Result<f64> {
    check_len(weights.len(), mask.len())?;
    Ok(mad(mask, weights))
}

pub(crate) fn mad(mask: &FeatureMask, weights: &[f64]) -> f64 {
    let selected = || weights.iter().zip(mask.bits()).filter(|(_, &b)| b).map(|(&w, _)| w);
    let count = selected().count();
    if count <= 1 {
        return 0.0;
    }
    // Work relative to the first selected weight so equal weights give exactly 0.
    let origin = selected().next().expect("count > 1");
    let mean = selected().map(|w| w - origin).sum::<f64>() / count as f64;
    selected().map(|w| (w - origin - mean).abs()).sum::<f64>() / count as f64
}

/// MAD rounded to 12 significant digits, used by the optimizers. Rounding
/// noise is far below that precision, so candidates that tie exactly stay
/// tied and the search takes the same path when all weights are rescaled.
pub(crate) fn search_fitness(mask: &FeatureMask, weights: &[f64]) -> f64 {
    round_significant(mad(mask, weights), 12)
}

fn round_significant(x: f64, digits: i32) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return x;
    }
    let shift = digits - 1 - x.abs().log10().floor() as i32;
    if shift >= 0 {
        let f = 10f64.powi(shift);
        (x * f).round() / f
    } else {
        let f = 10f64.powi(-shift);
        (x / f).round() * f
    }
}

/// Each bit set with probability 1/2; an all-zero draw is repeated.
pub fn random_mask(t: usize, rng: &mut RngStream) -> Result<FeatureMask> {
    if t == 0 {
        return Err(Error::invalid("mask length must be at least 1"));
    }
    loop {
        let mask = FeatureMask((0..t).map(|_| rng.coin()).collect());
        if mask.count_ones() > 0 {
            return Ok(mask);
        }
    }
}

pub fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Bit j is set iff a fresh uniform draw falls below `sigmoid(x_j)`.
pub fn sigmoid_binarize(position: &ContinuousPosition, rng: &mut RngStream) -> FeatureMask {
    binarize_with(position, || rng.uniform())
}

pub fn binarize_with(position: &ContinuousPosition, mut draw: impl FnMut() -> f64) -> FeatureMask {
    FeatureMask(position.0.iter().map(|&x| draw() < sigmoid(x)).collect())
}

/// Takes bit j from the student where a fair coin shows 1, else from the teacher.
pub fn uniform_crossover(student: &FeatureMask, teacher: &FeatureMask, rng: &mut RngStream) -> Result<FeatureMask> {
    check_len(student.len(), teacher.len())?;
    let pattern = FeatureMask((0..student.len()).map(|_| rng.coin()).collect());
    crossover_with_pattern(student, teacher, &pattern)
}

/// `r * student + (1 - r) * teacher`, bitwise.
pub fn crossover_with_pattern(student: &FeatureMask, teacher: &FeatureMask, pattern: &FeatureMask) -> Result<FeatureMask> {
    check_len(student.len(), teacher.len())?;
    check_len(student.len(), pattern.len())?;
    Ok(FeatureMask(
        pattern
            .bits()
            .iter()
            .zip(student.bits().iter().zip(teacher.bits()))
            .map(|(&r, (&s, &t))| if r { s } else { t })
            .collect(),
    ))
}

/// Linear rank-based mutation probability: `p_max` for rank 1 (worst), 0 for
/// rank `n` (best).
pub fn rank_mutation_prob(rank: usize, n: usize, p_max: f64) -> Result<f64> {
    if n < 2 {
        return Err(Error::invalid("rank mutation needs a population of at least 2"));
    }
    if rank < 1 || rank > n {
        return Err(Error::invalid(format!("rank {rank} outside 1..={n}")));
    }
    Ok(p_max * (1.0 - (rank - 1) as f64 / (n - 1) as f64))
}

/// Flips each bit independently with probability `p`.
pub fn mutate(mask: &FeatureMask, p: f64, rng: &mut RngStream) -> FeatureMask {
    mutate_with(mask, p, || rng.uniform())
}

pub fn mutate_with(mask: &FeatureMask, p: f64, mut draw: impl FnMut() -> f64) -> FeatureMask {
    FeatureMask(mask.0.iter().map(|&b| if draw() < p { !b } else { b }).collect())
}

/// Ranks in `1..=n`: the fittest member gets `n`, the weakest 1. Among equal
/// fitness the lower index ranks higher.
pub fn rank_population(fitnesses: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..fitnesses.len()).collect();
    order.sort_by(|&a, &b| fitnesses[a].total_cmp(&fitnesses[b]).then(b.cmp(&a)));
    let mut ranks = vec![0; fitnesses.len()];
    for (r, &i) in order.iter().enumerate() {
        ranks[i] = r + 1;
    }
    ranks
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MutationPolicy {
    pub p_max: f64,
}

impl MutationPolicy {
    pub fn new(p_max: f64) -> Result<Self> {
        if !(p_max > 0.0 && p_max <= 1.0) {
            return Err(Error::invalid(format!("p_max {p_max} outside (0, 1]")));
        }
        Ok(Self { p_max })
    }
}

impl Default for MutationPolicy {
    fn default() -> Self {
        Self { p_max: 0.08 }
    }
}
