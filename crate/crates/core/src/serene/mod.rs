//! SERENE: novelty-driven exploration alternated with reward-maximising
//! emitters under a budget-chunk scheduler.
//!
//! The scheduler splits the evaluation budget into chunks. Every chunk of
//! exploration runs Novelty Search generations and collects the rewarding
//! policies it stumbles on. When rewarding policies or live emitters exist,
//! the next chunk goes to exploitation: a third of it bootstraps emitters
//! from the most novel (with respect to the reward archive) candidates and
//! keeps those that improve, the rest runs emitters sampled from the
//! Pareto front of (improvement, novelty) until they stagnate.
//!
//! Generations are atomic, so a chunk may overshoot its allotment by at
//! most one generation. All randomness comes from one seeded stream drawn
//! in a fixed order.

mod emitter;
mod explore;

use std::collections::HashSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub use emitter::{
    improvement, init_sigma, pareto_front, should_terminate, stagnation_window, Emitter,
};
pub use explore::Explorer;

use crate::env::{Point, Task};
use crate::error::{Error, Result};
use crate::metrics::{ArchiveSizes, Evaluator, MetricsRow, Phase};
use crate::novelty::{novelty, novelty_excluding, sample_into_archive, EvaluatedPolicy, Origin, DEFAULT_K};
use emitter::Sinks;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SereneConfig {
    /// Total evaluation budget.
    pub bud: u64,
    /// Scheduler chunk size.
    pub k_bud: u64,
    /// Exploration population size.
    pub m_pop: usize,
    /// Offspring per parent.
    pub m_offspring: usize,
    /// Exploration mutation scale.
    pub sigma: f64,
    /// Policies added to the novelty archive per generation / terminated emitter.
    pub n_q: usize,
    /// Emitter population size.
    pub m_emitter: usize,
    /// Bootstrap generations per emitter.
    pub lambda_bootstrap: usize,
    pub novelty_k: usize,
    pub seed: u64,
}

impl Default for SereneConfig {
    fn default() -> Self {
        Self {
            bud: 500_000,
            k_bud: 1000,
            m_pop: 100,
            m_offspring: 2,
            sigma: 0.5,
            n_q: 5,
            m_emitter: 6,
            lambda_bootstrap: 6,
            novelty_k: DEFAULT_K,
            seed: 0,
        }
    }
}

impl SereneConfig {
    pub fn validate(&self) -> Result<()> {
        let counts = [
            ("bud", self.bud as usize),
            ("k_bud", self.k_bud as usize),
            ("m_pop", self.m_pop),
            ("m_offspring", self.m_offspring),
            ("n_q", self.n_q),
            ("m_emitter", self.m_emitter),
            ("lambda_bootstrap", self.lambda_bootstrap),
            ("novelty_k", self.novelty_k),
        ];
        if let Some((name, _)) = counts.iter().find(|(_, v)| *v == 0) {
            return Err(Error::InvalidConfig(format!("{name} must be at least 1")));
        }
        if self.k_bud > self.bud {
            return Err(Error::InvalidConfig("k_bud must not exceed bud".into()));
        }
        if !(self.sigma > 0.0 && self.sigma.is_finite()) {
            return Err(Error::InvalidConfig("sigma must be positive".into()));
        }
        Ok(())
    }

    /// Largest single generation any algorithm runs: the overshoot bound.
    pub fn max_generation(&self) -> u64 {
        (self.m_offspring * self.m_pop.max(self.m_emitter)) as u64
    }

    pub(crate) fn rng(&self) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.seed)
    }
}

/// Archives, metric rows and (optionally) the full evaluation trace of a
/// finished run.
#[derive(Clone, Debug, Default)]
pub struct RunOutput {
    pub evaluations: u64,
    pub rows: Vec<MetricsRow>,
    /// Named archives in a fixed order.
    pub archives: Vec<(String, Vec<EvaluatedPolicy>)>,
    pub trace: Option<Vec<EvaluatedPolicy>>,
}

impl RunOutput {
    pub fn archive(&self, name: &str) -> Option<&[EvaluatedPolicy]> {
        self.archives
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, a)| a.as_slice())
    }

    pub fn final_row(&self) -> Option<&MetricsRow> {
        self.rows.last()
    }
}

/// Removes and returns the candidate most novel with respect to the reward
/// archive; ties go to the lowest uid.
pub fn select_candidate(
    candidates: &mut Vec<EvaluatedPolicy>,
    a_rew: &[Point],
    novelty_k: usize,
) -> EvaluatedPolicy {
    assert!(!candidates.is_empty(), "no emitter candidates to select from");
    let mut best = 0;
    let mut best_score = f64::NEG_INFINITY;
    for (i, c) in candidates.iter().enumerate() {
        let score = novelty(c.descriptor, a_rew, novelty_k);
        let better = score > best_score
            || (score == best_score && c.uid < candidates[best].uid);
        if better {
            best = i;
            best_score = score;
        }
    }
    candidates.remove(best)
}

/// Complete SERENE state for one run.
pub struct Serene<'t> {
    cfg: SereneConfig,
    ev: Evaluator<'t>,
    rng: ChaCha8Rng,
    pub explorer: Explorer,
    pub a_rew: Vec<EvaluatedPolicy>,
    /// Rewarding policies waiting to seed an emitter.
    pub candidates: Vec<EvaluatedPolicy>,
    admitted: HashSet<u64>,
    /// Emitters with positive bootstrap improvement, paused between phases.
    pub emitters: Vec<Emitter>,
    next_emitter: u64,
    /// Evaluations spent per phase.
    pub exploration_evals: u64,
    pub exploitation_evals: u64,
    phase: Phase,
}

impl<'t> Serene<'t> {
    pub fn new(cfg: SereneConfig, task: &'t dyn Task, snapshot_every: u64) -> Self {
        let rng = cfg.rng();
        Self {
            cfg,
            ev: Evaluator::new(task, snapshot_every),
            rng,
            explorer: Explorer::new(),
            a_rew: Vec::new(),
            candidates: Vec::new(),
            admitted: HashSet::new(),
            emitters: Vec::new(),
            next_emitter: 0,
            exploration_evals: 0,
            exploitation_evals: 0,
            phase: Phase::Exploration,
        }
    }

    pub fn with_trace(mut self) -> Self {
        self.ev = self.ev.with_trace();
        self
    }

    pub fn evaluations(&self) -> u64 {
        self.ev.evaluations()
    }

    fn sizes(&self) -> ArchiveSizes {
        ArchiveSizes {
            a_nov: self.explorer.archive.len(),
            a_rew: self.a_rew.len(),
        }
    }

    fn remaining(&self) -> u64 {
        self.cfg.bud.saturating_sub(self.ev.evaluations())
    }

    /// Runs the scheduler until the budget is spent.
    pub fn run(mut self) -> RunOutput {
        while self.remaining() > 0 {
            let chunk = self.cfg.k_bud.min(self.remaining());
            self.exploration_phase(chunk);
            if self.remaining() == 0 {
                break;
            }
            if !self.candidates.is_empty() || !self.emitters.is_empty() {
                let chunk = self.cfg.k_bud.min(self.remaining());
                self.exploitation_phase(chunk);
            }
        }
        let sizes = self.sizes();
        self.ev.finish(self.phase, sizes);
        let evaluations = self.ev.evaluations();
        let (rows, trace) = self.ev.into_parts();
        RunOutput {
            evaluations,
            rows,
            archives: vec![
                ("nov".to_string(), self.explorer.archive.into_entries()),
                ("rew".to_string(), self.a_rew),
            ],
            trace,
        }
    }

    /// Novelty Search generations for one chunk; rewarding policies become
    /// emitter candidates (each uid once).
    pub fn exploration_phase(&mut self, chunk: u64) -> u64 {
        self.phase = Phase::Exploration;
        let a_rew = self.a_rew.len();
        let candidates = &mut self.candidates;
        let admitted = &mut self.admitted;
        let used = self.explorer.phase(chunk, &self.cfg, &mut self.ev, &mut self.rng, a_rew, |p| {
            if admitted.insert(p.uid) {
                candidates.push(p.clone());
            }
        });
        self.exploration_evals += used;
        used
    }

    /// Bootstrap step on the first third of the chunk, emitter step on the
    /// rest.
    pub fn exploitation_phase(&mut self, chunk: u64) -> u64 {
        self.phase = Phase::Exploitation;
        let start = self.ev.evaluations();
        let cfg = self.cfg.clone();
        let dim = self.ev.param_count();

        // Novelty reference for the whole phase.
        let mut seen = HashSet::new();
        let reference: Vec<(u64, Point)> = self
            .explorer
            .archive
            .entries()
            .iter()
            .chain(self.explorer.individuals())
            .filter(|p| seen.insert(p.uid))
            .map(|p| (p.uid, p.descriptor))
            .collect();

        for e in &mut self.emitters {
            e.gamma_0 = e.generation;
        }

        let bootstrap_budget = chunk.div_ceil(3);
        while self.ev.evaluations() - start < bootstrap_budget && !self.candidates.is_empty() {
            let rew: Vec<Point> = self.a_rew.iter().map(|p| p.descriptor).collect();
            let anchor = select_candidate(&mut self.candidates, &rew, cfg.novelty_k);
            let sigma = init_sigma(&anchor, self.explorer.individuals(), cfg.sigma / 10.0);
            let eta = novelty_excluding(anchor.descriptor, anchor.uid, &reference, cfg.novelty_k);
            let mut em = Emitter::spawn(
                self.next_emitter,
                anchor,
                sigma,
                eta,
                cfg.m_emitter,
                &mut self.ev,
                &mut self.rng,
            );
            self.next_emitter += 1;
            for _ in 0..cfg.lambda_bootstrap {
                em.step(cfg.m_offspring, cfg.sigma, Origin::Bootstrap, &mut self.ev, &mut self.rng, None);
                self.ev.checkpoint(Phase::Exploitation, self.sizes());
                if self.ev.evaluations() - start >= bootstrap_budget {
                    break;
                }
            }
            em.improvement = em.improvement_since(0, cfg.lambda_bootstrap, cfg.m_emitter);
            if em.improvement > 0.0 {
                em.gamma_0 = 0;
                self.emitters.push(em);
            }
        }

        while self.ev.evaluations() - start < chunk && !self.emitters.is_empty() {
            let scores: Vec<(f64, f64)> = self.emitters.iter().map(|e| (e.improvement, e.eta)).collect();
            let front = pareto_front(&scores);
            let pick = front[self.rng.random_range(0..front.len())];
            let mut em = self.emitters.remove(pick);
            loop {
                em.step(
                    cfg.m_offspring,
                    cfg.sigma,
                    Origin::Emitter,
                    &mut self.ev,
                    &mut self.rng,
                    Some(Sinks {
                        a_rew: &mut self.a_rew,
                        reference: &reference,
                        novelty_k: cfg.novelty_k,
                    }),
                );
                self.ev.checkpoint(Phase::Exploitation, self.sizes());
                if should_terminate(&em.reward_history, dim, cfg.m_emitter) {
                    let pool: Vec<EvaluatedPolicy> =
                        em.novelty_candidates.iter().map(|(p, _)| p.clone()).collect();
                    for added in sample_into_archive(&mut self.explorer.archive, &pool, cfg.n_q, &mut self.rng) {
                        self.ev.note_archived(added.descriptor);
                    }
                    break;
                }
                if self.ev.evaluations() - start >= chunk {
                    em.improvement = em.improvement_since(em.gamma_0, cfg.lambda_bootstrap, cfg.m_emitter);
                    self.emitters.push(em);
                    break;
                }
            }
        }
        let used = self.ev.evaluations() - start;
        self.exploitation_evals += used;
        used
    }
}

/// Runs SERENE on `task` with metric snapshots every `snapshot_every`
/// evaluations.
pub fn run(cfg: &SereneConfig, task: &dyn Task, snapshot_every: u64) -> RunOutput {
    Serene::new(cfg.clone(), task, snapshot_every).run()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cand(uid: u64, d: Point) -> EvaluatedPolicy {
        EvaluatedPolicy {
            uid,
            origin: Origin::Exploration,
            descriptor: d,
            reward: 0.5,
            area_id: Some(1),
            params: None,
        }
    }

    #[test]
    fn single_candidate_is_selected() {
        let mut c = vec![cand(4, [0.2, 0.2])];
        assert_eq!(select_candidate(&mut c, &[], 15).uid, 4);
        assert!(c.is_empty());
    }

    #[test]
    fn far_candidate_preferred() {
        let mut c = vec![cand(1, [0.0, 0.1]), cand(2, [0.9, 0.9])];
        let rew = [[0.0, 0.0]; 5];
        assert_eq!(select_candidate(&mut c, &rew, 15).uid, 2);
        assert_eq!(c.len(), 1);
    }

    #[test]
    fn empty_reward_archive_picks_lowest_uid() {
        let mut c = vec![cand(9, [0.0, 0.1]), cand(3, [0.9, 0.9]), cand(5, [0.4, 0.4])];
        assert_eq!(select_candidate(&mut c, &[], 15).uid, 3);
    }

    #[test]
    fn config_validation() {
        assert!(SereneConfig::default().validate().is_ok());
        let bad = SereneConfig {
            k_bud: 10,
            bud: 5,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
        let bad = SereneConfig {
            m_emitter: 0,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
        assert_eq!(SereneConfig::default().max_generation(), 200);
    }
}
