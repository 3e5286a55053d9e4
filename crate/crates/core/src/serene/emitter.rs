//! Elitist reward-maximising emitters and their scoring rules.

use rand::Rng;

use crate::env::Point;
use crate::metrics::Evaluator;
use crate::novelty::{novelty_excluding, EvaluatedPolicy, Origin};
use crate::policy::{mutate, sample_around, ParameterVector};

/// A local elitist EA seeded from one rewarding policy.
#[derive(Clone, Debug)]
pub struct Emitter {
    pub id: u64,
    pub anchor: EvaluatedPolicy,
    /// Mutation scale, fixed at initialisation.
    pub sigma: f64,
    pub population: Vec<EvaluatedPolicy>,
    /// Completed generations (the initial population is not counted).
    pub generation: usize,
    /// Best reward seen so far, including the initial population.
    pub best_reward: f64,
    pub improvement: f64,
    /// Novelty of the anchor; never changes.
    pub eta: f64,
    /// Policies more novel than `eta`, with the novelty they had when found.
    pub novelty_candidates: Vec<(EvaluatedPolicy, f64)>,
    /// Best reward after each generation.
    pub reward_history: Vec<f64>,
    /// Sum of survivor rewards after each generation.
    pub reward_sums: Vec<f64>,
    /// Generation count at the start of the current exploitation phase.
    pub gamma_0: usize,
}

/// Where an emitter generation deposits what it finds.
pub(crate) struct Sinks<'a> {
    pub a_rew: &'a mut Vec<EvaluatedPolicy>,
    pub reference: &'a [(u64, Point)],
    pub novelty_k: usize,
}

impl Emitter {
    /// Samples and evaluates the initial population around `anchor`.
    pub(crate) fn spawn<R: Rng + ?Sized>(
        id: u64,
        anchor: EvaluatedPolicy,
        sigma: f64,
        eta: f64,
        size: usize,
        ev: &mut Evaluator<'_>,
        rng: &mut R,
    ) -> Self {
        let genomes: Vec<ParameterVector> = (0..size).map(|_| sample_around(anchor.genome(), sigma, rng)).collect();
        let population = ev.evaluate_all(genomes, Origin::Bootstrap);
        let best_reward = population.iter().map(|p| p.reward).fold(0.0, f64::max);
        Self {
            id,
            anchor,
            sigma,
            population,
            generation: 0,
            best_reward,
            improvement: 0.0,
            eta,
            novelty_candidates: Vec::new(),
            reward_history: Vec::new(),
            reward_sums: Vec::new(),
            gamma_0: 0,
        }
    }

    /// One elitist generation; offspring use the exploration mutation scale
    /// `sigma`. Without sinks (bootstrap) nothing is
    /// archived; with sinks, offspring beating the previous best reward go
    /// to the reward archive and offspring more novel than `eta` go to the
    /// novelty candidates.
    pub(crate) fn step<R: Rng + ?Sized>(
        &mut self,
        m: usize,
        sigma: f64,
        origin: Origin,
        ev: &mut Evaluator<'_>,
        rng: &mut R,
        sinks: Option<Sinks<'_>>,
    ) {
        let size = self.population.len();
        let genomes: Vec<ParameterVector> = self
            .population
            .iter()
            .flat_map(|p| mutate(p.genome(), sigma, m, rng))
            .collect();
        let offspring = ev.evaluate_all(genomes, origin);

        if let Some(sinks) = sinks {
            for child in &offspring {
                if child.reward > self.best_reward {
                    sinks.a_rew.push(child.clone());
                    ev.note_archived(child.descriptor);
                }
                let nov = novelty_excluding(child.descriptor, child.uid, sinks.reference, sinks.novelty_k);
                if nov > self.eta {
                    self.novelty_candidates.push((child.clone(), nov));
                }
            }
        }

        let gen_best = offspring.iter().map(|p| p.reward).fold(f64::NEG_INFINITY, f64::max);
        if gen_best > self.best_reward {
            self.best_reward = gen_best;
        }
        let pool: Vec<EvaluatedPolicy> = self.population.drain(..).chain(offspring).collect();
        self.population = most_rewarding(pool, size);
        self.reward_sums.push(self.population.iter().map(|p| p.reward).sum());
        self.reward_history.push(self.best_reward);
        self.generation += 1;
    }

    /// Improvement over the generations completed since `gamma_0`.
    pub fn improvement_since(&self, gamma_0: usize, lambda: usize, m_e: usize) -> f64 {
        let start = gamma_0.min(self.reward_sums.len());
        improvement(&self.reward_sums[start..], lambda, m_e)
    }
}

/// The `keep` highest-reward entries of `pool`; ties favour earlier entries
/// (incumbents before offspring).
pub(crate) fn most_rewarding(pool: Vec<EvaluatedPolicy>, keep: usize) -> Vec<EvaluatedPolicy> {
    let mut order: Vec<usize> = (0..pool.len()).collect();
    order.sort_by(|&a, &b| pool[b].reward.total_cmp(&pool[a].reward).then(a.cmp(&b)));
    order.truncate(keep);
    let mut slots: Vec<Option<EvaluatedPolicy>> = pool.into_iter().map(Some).collect();
    order.into_iter().map(|i| slots[i].take().expect("unique index")).collect()
}

/// Emitter improvement from per-generation survivor reward sums:
/// `(sum of the last h generations - sum of the first h) / (lambda * m_e)`
/// with `h = ceil(lambda / 2)`. Windows shorter than `lambda` use
/// `h = floor(len / 2)`.
pub fn improvement(window: &[f64], lambda: usize, m_e: usize) -> f64 {
    assert!(lambda >= 1 && m_e >= 1);
    let n = window.len();
    let h = if n >= lambda { lambda.div_ceil(2) } else { n / 2 };
    if h == 0 {
        return 0.0;
    }
    let recent: f64 = window[n - h..].iter().sum();
    let initial: f64 = window[..h].iter().sum();
    (recent - initial) / (lambda * m_e) as f64
}

/// Length of the stagnation window, in generations.
pub fn stagnation_window(param_dim: usize, m_e: usize) -> usize {
    120 + 20 * param_dim / m_e
}

fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_unstable_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Stagnation test over the per-generation best rewards: once a full window
/// is available, stop when the last 20 values do not beat the first 20 of
/// the window in maximum or in median.
pub fn should_terminate(history: &[f64], param_dim: usize, m_e: usize) -> bool {
    const EDGE: usize = 20;
    let window = stagnation_window(param_dim, m_e);
    if history.len() < window {
        return false;
    }
    let w = &history[history.len() - window..];
    let (first, last) = (&w[..EDGE], &w[window - EDGE..]);
    let max = |s: &[f64]| s.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    max(last) <= max(first) || median(last) <= median(first)
}

/// Indices of the emitters not dominated in (improvement, novelty), both
/// maximised.
pub fn pareto_front(points: &[(f64, f64)]) -> Vec<usize> {
    (0..points.len())
        .filter(|&i| {
            !points.iter().any(|&(ib, nb)| {
                let (ia, na) = points[i];
                ib >= ia && nb >= na && (ib > ia || nb > na)
            })
        })
        .collect()
}

/// Mutation scale of a new emitter: a third of the parameter-space distance
/// from the anchor to its nearest distinct exploration individual, or
/// `fallback` when every individual coincides with the anchor.
pub fn init_sigma<'a>(
    anchor: &EvaluatedPolicy,
    individuals: impl IntoIterator<Item = &'a EvaluatedPolicy>,
    fallback: f64,
) -> f64 {
    let genome = anchor.genome();
    let nearest = individuals
        .into_iter()
        .filter(|p| p.uid != anchor.uid)
        .map(|p| genome.distance(p.genome()))
        .filter(|d| *d > 0.0)
        .fold(f64::INFINITY, f64::min);
    if nearest.is_finite() {
        nearest / 3.0
    } else {
        fallback
    }
}
