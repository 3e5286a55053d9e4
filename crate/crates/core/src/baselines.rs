//! Reference algorithms: Novelty Search, MAP-Elites, NSGA-II over
//! (novelty, reward) and random search. They share the evaluator, budget
//! accounting and metric pipeline with SERENE.

use rand::Rng;

use crate::env::{Rect, Task};
use crate::metrics::{ArchiveSizes, Evaluator, Phase, GRID_CELLS};
use crate::novelty::{cell_of, population_novelties, sample_into_archive, EvaluatedPolicy, NoveltyArchive, Origin};
use crate::policy::{mutate, sample_dim};
use crate::serene::{Explorer, RunOutput, SereneConfig};

fn finish(ev: Evaluator<'_>, phase: Phase, sizes: ArchiveSizes, archives: Vec<(String, Vec<EvaluatedPolicy>)>) -> RunOutput {
    let mut ev = ev;
    ev.finish(phase, sizes);
    let evaluations = ev.evaluations();
    let (rows, trace) = ev.into_parts();
    RunOutput {
        evaluations,
        rows,
        archives,
        trace,
    }
}

/// Novelty Search: SERENE's exploration phase over the whole budget, chunk
/// by chunk, with rewards ignored.
pub fn run_ns(cfg: &SereneConfig, task: &dyn Task, snapshot_every: u64) -> RunOutput {
    run_ns_with(cfg, Evaluator::new(task, snapshot_every))
}

pub(crate) fn run_ns_with(cfg: &SereneConfig, mut ev: Evaluator<'_>) -> RunOutput {
    let mut rng = cfg.rng();
    let mut explorer = Explorer::new();
    while ev.evaluations() < cfg.bud {
        let chunk = cfg.k_bud.min(cfg.bud - ev.evaluations());
        explorer.phase(chunk, cfg, &mut ev, &mut rng, 0, |_| {});
    }
    let sizes = ArchiveSizes {
        a_nov: explorer.archive.len(),
        a_rew: 0,
    };
    finish(ev, Phase::Exploration, sizes, vec![("nov".into(), explorer.archive.into_entries())])
}

/// 50x50 grid of elites, one highest-reward policy per cell.
#[derive(Clone, Debug)]
pub struct GridArchive {
    bounds: Rect,
    cells: usize,
    slots: Vec<Option<EvaluatedPolicy>>,
    occupied: Vec<usize>,
}

impl GridArchive {
    pub fn new(bounds: Rect) -> Self {
        Self::with_cells(bounds, GRID_CELLS)
    }

    pub fn with_cells(bounds: Rect, cells: usize) -> Self {
        Self {
            bounds,
            cells,
            slots: vec![None; cells * cells],
            occupied: Vec::new(),
        }
    }

    fn index(&self, p: &EvaluatedPolicy) -> usize {
        let (i, j) = cell_of(p.descriptor, &self.bounds, self.cells);
        j * self.cells + i
    }

    /// Stores `policy` if its cell is empty or it strictly beats the
    /// incumbent's reward. Returns whether it was stored.
    pub fn insert(&mut self, policy: EvaluatedPolicy) -> bool {
        let idx = self.index(&policy);
        match &self.slots[idx] {
            Some(incumbent) if policy.reward <= incumbent.reward => false,
            slot => {
                if slot.is_none() {
                    self.occupied.push(idx);
                }
                self.slots[idx] = Some(policy);
                true
            }
        }
    }

    pub fn len(&self) -> usize {
        self.occupied.len()
    }

    pub fn is_empty(&self) -> bool {
        self.occupied.is_empty()
    }

    pub fn get(&self, cell: (usize, usize)) -> Option<&EvaluatedPolicy> {
        self.slots[cell.1 * self.cells + cell.0].as_ref()
    }

    /// Elite of a uniformly chosen occupied cell.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> &EvaluatedPolicy {
        let idx = self.occupied[rng.random_range(0..self.occupied.len())];
        self.slots[idx].as_ref().expect("occupied cell")
    }

    /// Elites in cell order.
    pub fn elites(&self) -> Vec<EvaluatedPolicy> {
        self.slots.iter().flatten().cloned().collect()
    }

    pub fn rewarding(&self) -> usize {
        self.slots.iter().flatten().filter(|p| p.is_rewarding()).count()
    }
}

/// MAP-Elites: after `m_pop` random genomes, every generation mutates
/// `m_offspring * m_pop` elites drawn uniformly from occupied cells.
pub fn run_me(cfg: &SereneConfig, task: &dyn Task, snapshot_every: u64) -> RunOutput {
    run_me_with(cfg, Evaluator::new(task, snapshot_every))
}

pub(crate) fn run_me_with(cfg: &SereneConfig, mut ev: Evaluator<'_>) -> RunOutput {
    let mut rng = cfg.rng();
    let mut grid = GridArchive::new(ev.task().bounds());
    let sizes = |g: &GridArchive| ArchiveSizes {
        a_nov: g.len(),
        a_rew: g.rewarding(),
    };
    let dim = ev.param_count();
    let init: Vec<_> = (0..cfg.m_pop).map(|_| sample_dim(dim, &mut rng)).collect();
    for p in ev.evaluate_all(init, Origin::Initial) {
        let d = p.descriptor;
        if grid.insert(p) {
            ev.note_archived(d);
        }
    }
    ev.checkpoint(Phase::MapElites, sizes(&grid));
    let batch = cfg.m_offspring * cfg.m_pop;
    while ev.evaluations() < cfg.bud {
        let genomes: Vec<_> = (0..batch)
            .flat_map(|_| {
                let parent = grid.sample(&mut rng).genome().clone();
                mutate(&parent, cfg.sigma, 1, &mut rng)
            })
            .collect();
        for p in ev.evaluate_all(genomes, Origin::Exploration) {
            let d = p.descriptor;
            if grid.insert(p) {
                ev.note_archived(d);
            }
        }
        ev.checkpoint(Phase::MapElites, sizes(&grid));
    }
    let s = sizes(&grid);
    finish(ev, Phase::MapElites, s, vec![("grid".into(), grid.elites())])
}

/// Whether `a` Pareto-dominates `b` (all objectives maximised).
pub fn dominates(a: &[f64], b: &[f64]) -> bool {
    a.iter().zip(b).all(|(x, y)| x >= y) && a.iter().zip(b).any(|(x, y)| x > y)
}

/// Fast non-dominated sorting: fronts of indices, best first.
pub fn non_dominated_sort(objectives: &[Vec<f64>]) -> Vec<Vec<usize>> {
    let n = objectives.len();
    let mut dominated_by: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut domination_count = vec![0usize; n];
    let mut fronts = vec![Vec::new()];
    for p in 0..n {
        for q in 0..n {
            if p == q {
                continue;
            }
            if dominates(&objectives[p], &objectives[q]) {
                dominated_by[p].push(q);
            } else if dominates(&objectives[q], &objectives[p]) {
                domination_count[p] += 1;
            }
        }
        if domination_count[p] == 0 {
            fronts[0].push(p);
        }
    }
    let mut i = 0;
    while !fronts[i].is_empty() {
        let mut next = Vec::new();
        for &p in &fronts[i] {
            for &q in &dominated_by[p] {
                domination_count[q] -= 1;
                if domination_count[q] == 0 {
                    next.push(q);
                }
            }
        }
        next.sort_unstable();
        i += 1;
        fronts.push(next);
    }
    fronts.pop();
    fronts
}

/// Crowding distance of each member of one front (positions match `front`).
/// Boundary points get `f64::INFINITY`.
pub fn crowding_distance(objectives: &[Vec<f64>], front: &[usize]) -> Vec<f64> {
    let n = front.len();
    let mut distance = vec![0.0; n];
    if n == 0 {
        return distance;
    }
    let m = objectives[front[0]].len();
    for k in 0..m {
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| objectives[front[a]][k].total_cmp(&objectives[front[b]][k]));
        let lo = objectives[front[order[0]]][k];
        let hi = objectives[front[order[n - 1]]][k];
        distance[order[0]] = f64::INFINITY;
        distance[order[n - 1]] = f64::INFINITY;
        if hi > lo {
            for w in 1..n.saturating_sub(1) {
                let prev = objectives[front[order[w - 1]]][k];
                let next = objectives[front[order[w + 1]]][k];
                distance[order[w]] += (next - prev) / (hi - lo);
            }
        }
    }
    distance
}

/// NSGA-II survivor selection: whole fronts while they fit, then the most
/// crowded-apart members of the first front that does not.
pub fn nsga2_select(objectives: &[Vec<f64>], keep: usize) -> Vec<usize> {
    let mut chosen = Vec::with_capacity(keep);
    for front in non_dominated_sort(objectives) {
        if chosen.len() + front.len() <= keep {
            chosen.extend_from_slice(&front);
        } else {
            let dist = crowding_distance(objectives, &front);
            let mut order: Vec<usize> = (0..front.len()).collect();
            order.sort_by(|&a, &b| dist[b].total_cmp(&dist[a]).then(front[a].cmp(&front[b])));
            chosen.extend(order.into_iter().take(keep - chosen.len()).map(|i| front[i]));
        }
        if chosen.len() == keep {
            break;
        }
    }
    chosen.sort_unstable();
    chosen
}

/// NSGA-II on (novelty, reward), mutation only. Novelty is measured
/// against population, offspring and a novelty archive fed like NS's.
pub fn run_nsga2(cfg: &SereneConfig, task: &dyn Task, snapshot_every: u64) -> RunOutput {
    run_nsga2_with(cfg, Evaluator::new(task, snapshot_every))
}

pub(crate) fn run_nsga2_with(cfg: &SereneConfig, mut ev: Evaluator<'_>) -> RunOutput {
    let mut rng = cfg.rng();
    let mut archive = NoveltyArchive::new();
    let dim = ev.param_count();
    let init: Vec<_> = (0..cfg.m_pop).map(|_| sample_dim(dim, &mut rng)).collect();
    let mut population = ev.evaluate_all(init, Origin::Initial);
    let sizes = |a: &NoveltyArchive| ArchiveSizes {
        a_nov: a.len(),
        a_rew: 0,
    };
    ev.checkpoint(Phase::Nsga2, sizes(&archive));
    while ev.evaluations() < cfg.bud {
        let genomes: Vec<_> = population
            .iter()
            .flat_map(|p| mutate(p.genome(), cfg.sigma, cfg.m_offspring, &mut rng))
            .collect();
        let offspring = ev.evaluate_all(genomes, Origin::Exploration);
        let novelty = population_novelties(&population, &offspring, &archive, cfg.novelty_k);
        for added in sample_into_archive(&mut archive, &offspring, cfg.n_q, &mut rng) {
            ev.note_archived(added.descriptor);
        }
        let pool: Vec<EvaluatedPolicy> = population.drain(..).chain(offspring).collect();
        let objectives: Vec<Vec<f64>> = pool.iter().zip(&novelty).map(|(p, n)| vec![*n, p.reward]).collect();
        let keep = nsga2_select(&objectives, cfg.m_pop);
        let mut slots: Vec<Option<EvaluatedPolicy>> = pool.into_iter().map(Some).collect();
        population = keep.into_iter().map(|i| slots[i].take().expect("unique")).collect();
        ev.checkpoint(Phase::Nsga2, sizes(&archive));
    }
    let s = sizes(&archive);
    finish(
        ev,
        Phase::Nsga2,
        s,
        vec![("nov".into(), archive.into_entries()), ("population".into(), population)],
    )
}

/// Random search: `bud` independent N(0, I) genomes, evaluated in batches
/// of one generation.
pub fn run_rnd(cfg: &SereneConfig, task: &dyn Task, snapshot_every: u64) -> RunOutput {
    run_rnd_with(cfg, Evaluator::new(task, snapshot_every))
}

pub(crate) fn run_rnd_with(cfg: &SereneConfig, mut ev: Evaluator<'_>) -> RunOutput {
    let mut rng = cfg.rng();
    let dim = ev.param_count();
    let batch = (cfg.m_offspring * cfg.m_pop) as u64;
    let mut evaluated = Vec::with_capacity(cfg.bud as usize);
    while ev.evaluations() < cfg.bud {
        let n = batch.min(cfg.bud - ev.evaluations());
        let genomes: Vec<_> = (0..n).map(|_| sample_dim(dim, &mut rng)).collect();
        for p in ev.evaluate_all(genomes, Origin::Initial) {
            ev.note_archived(p.descriptor);
            evaluated.push(p);
        }
        let sizes = ArchiveSizes {
            a_nov: evaluated.len(),
            a_rew: 0,
        };
        ev.checkpoint(Phase::Random, sizes);
    }
    let sizes = ArchiveSizes {
        a_nov: evaluated.len(),
        a_rew: 0,
    };
    finish(ev, Phase::Random, sizes, vec![("evaluated".into(), evaluated)])
}
