//! Novelty Search generations, shared by SERENE and the NS baseline.

use rand::Rng;

use super::SereneConfig;
use crate::metrics::{ArchiveSizes, Evaluator, Phase};
use crate::novelty::{population_novelties, sample_into_archive, EvaluatedPolicy, NoveltyArchive, Origin};
use crate::policy::{mutate, sample_dim};

/// Population, latest offspring and novelty archive of the exploration
/// process.
#[derive(Clone, Debug, Default)]
pub struct Explorer {
    pub population: Vec<EvaluatedPolicy>,
    pub offspring: Vec<EvaluatedPolicy>,
    pub archive: NoveltyArchive,
    generation: u64,
}

impl Explorer {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn generation(&self) -> u64 {
        self.generation
    }

    /// Current population followed by the latest offspring.
    pub fn individuals(&self) -> impl Iterator<Item = &EvaluatedPolicy> {
        self.population.iter().chain(&self.offspring)
    }

    /// Runs generations until at least `chunk` evaluations were spent. The
    /// first call also samples and evaluates the initial population. Every
    /// rewarding policy evaluated here is handed to `on_rewarding`.
    /// Returns the evaluations consumed.
    pub fn phase<R: Rng + ?Sized>(
        &mut self,
        chunk: u64,
        cfg: &SereneConfig,
        ev: &mut Evaluator<'_>,
        rng: &mut R,
        a_rew_size: usize,
        mut on_rewarding: impl FnMut(&EvaluatedPolicy),
    ) -> u64 {
        let start = ev.evaluations();
        if self.population.is_empty() {
            let dim = ev.param_count();
            let genomes = (0..cfg.m_pop).map(|_| sample_dim(dim, rng)).collect();
            self.population = ev.evaluate_all(genomes, Origin::Initial);
            self.population.iter().filter(|p| p.is_rewarding()).for_each(&mut on_rewarding);
            ev.checkpoint(Phase::Exploration, self.sizes(a_rew_size));
        }
        while ev.evaluations() - start < chunk {
            self.step(cfg, ev, rng, &mut on_rewarding);
            ev.checkpoint(Phase::Exploration, self.sizes(a_rew_size));
        }
        ev.evaluations() - start
    }

    fn sizes(&self, a_rew: usize) -> ArchiveSizes {
        ArchiveSizes {
            a_nov: self.archive.len(),
            a_rew,
        }
    }

    /// One generation: mutate, evaluate, score novelty, archive a uniform
    /// sample of the offspring, keep the most novel individuals.
    fn step<R: Rng + ?Sized>(
        &mut self,
        cfg: &SereneConfig,
        ev: &mut Evaluator<'_>,
        rng: &mut R,
        on_rewarding: &mut impl FnMut(&EvaluatedPolicy),
    ) {
        let genomes: Vec<_> = self
            .population
            .iter()
            .flat_map(|p| mutate(p.genome(), cfg.sigma, cfg.m_offspring, rng))
            .collect();
        let offspring = ev.evaluate_all(genomes, Origin::Exploration);
        let novelties = population_novelties(&self.population, &offspring, &self.archive, cfg.novelty_k);
        for added in sample_into_archive(&mut self.archive, &offspring, cfg.n_q, rng) {
            ev.note_archived(added.descriptor);
        }
        offspring.iter().filter(|p| p.is_rewarding()).for_each(on_rewarding);

        let pool: Vec<EvaluatedPolicy> = self.population.drain(..).chain(offspring.iter().cloned()).collect();
        self.population = most_novel(pool, &novelties, cfg.m_pop);
        self.offspring = offspring;
        self.generation += 1;
    }
}

/// The `keep` entries of `pool` with the highest novelty; ties favour the
/// earlier entry.
pub(crate) fn most_novel(pool: Vec<EvaluatedPolicy>, novelty: &[f64], keep: usize) -> Vec<EvaluatedPolicy> {
    debug_assert_eq!(pool.len(), novelty.len());
    let mut order: Vec<usize> = (0..pool.len()).collect();
    order.sort_by(|&a, &b| novelty[b].total_cmp(&novelty[a]).then(a.cmp(&b)));
    order.truncate(keep);
    order.sort_unstable();
    let mut slots: Vec<Option<EvaluatedPolicy>> = pool.into_iter().map(Some).collect();
    order.into_iter().map(|i| slots[i].take().expect("unique index")).collect()
}
