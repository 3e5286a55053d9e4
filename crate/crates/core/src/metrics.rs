//! Evaluation accounting and metric snapshots shared by every algorithm.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::env::{EpisodeResult, Point, Task};
use crate::novelty::{CoverageGrid, EvaluatedPolicy, Origin};
use crate::policy::ParameterVector;

/// Cells per side of the coverage grid.
pub const GRID_CELLS: usize = 50;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    Exploration,
    Exploitation,
    MapElites,
    Nsga2,
    Random,
}

impl Phase {
    pub fn label(self) -> &'static str {
        match self {
            Phase::Exploration => "exploration",
            Phase::Exploitation => "exploitation",
            Phase::MapElites => "me",
            Phase::Nsga2 => "nsga2",
            Phase::Random => "rnd",
        }
    }

    pub fn from_label(label: &str) -> Option<Self> {
        [
            Phase::Exploration,
            Phase::Exploitation,
            Phase::MapElites,
            Phase::Nsga2,
            Phase::Random,
        ]
        .into_iter()
        .find(|p| p.label() == label)
    }
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// Evaluations spent without reward versus inside each reward area.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct BudgetSplit {
    pub exploration: u64,
    pub areas: BTreeMap<u32, u64>,
}

impl BudgetSplit {
    pub fn with_areas(ids: &[u32]) -> Self {
        Self {
            exploration: 0,
            areas: ids.iter().map(|id| (*id, 0)).collect(),
        }
    }

    pub fn add(&mut self, result: &EpisodeResult) {
        match result.area_id {
            Some(id) if result.reward > 0.0 => *self.areas.entry(id).or_insert(0) += 1,
            _ => self.exploration += 1,
        }
    }

    pub fn total(&self) -> u64 {
        self.exploration + self.areas.values().sum::<u64>()
    }
}

pub fn compute_budget_split<'a>(evaluated: impl IntoIterator<Item = &'a EpisodeResult>) -> BudgetSplit {
    let mut split = BudgetSplit::default();
    for r in evaluated {
        split.add(r);
    }
    split
}

/// Running maximum reward per area; areas in `area_ids` that were never
/// reached report 0.
pub fn compute_max_rewards<'a>(
    evaluated: impl IntoIterator<Item = &'a EpisodeResult>,
    area_ids: &[u32],
) -> BTreeMap<u32, f64> {
    let mut best: BTreeMap<u32, f64> = area_ids.iter().map(|id| (*id, 0.0)).collect();
    for r in evaluated {
        if let Some(id) = r.area_id {
            let slot = best.entry(id).or_insert(0.0);
            if r.reward > *slot {
                *slot = r.reward;
            }
        }
    }
    best
}

/// One snapshot of a run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricsRow {
    pub evaluations: u64,
    /// Coverage of every evaluated policy.
    pub coverage: f64,
    /// Coverage of the archived policies only.
    pub cov_archive: f64,
    pub max_reward_per_area: BTreeMap<u32, f64>,
    pub budget_split: BudgetSplit,
    pub a_nov_size: usize,
    pub a_rew_size: usize,
    pub phase: Phase,
}

/// Archive sizes reported alongside a snapshot.
#[derive(Clone, Copy, Debug, Default)]
pub struct ArchiveSizes {
    pub a_nov: usize,
    pub a_rew: usize,
}

/// Wraps a task: evaluates genomes, assigns uids, counts every episode and
/// records metric rows whenever the count crosses a snapshot boundary.
pub struct Evaluator<'t> {
    task: &'t dyn Task,
    next_uid: u64,
    evaluations: u64,
    coverage: CoverageGrid,
    archive_coverage: CoverageGrid,
    split: BudgetSplit,
    max_rewards: BTreeMap<u32, f64>,
    snapshot_every: u64,
    next_snapshot: u64,
    rows: Vec<MetricsRow>,
    trace: Option<Vec<EvaluatedPolicy>>,
}

impl<'t> Evaluator<'t> {
    pub fn new(task: &'t dyn Task, snapshot_every: u64) -> Self {
        assert!(snapshot_every >= 1, "snapshot_every must be at least 1");
        let ids = task.area_ids();
        Self {
            task,
            next_uid: 0,
            evaluations: 0,
            coverage: CoverageGrid::new(task.bounds(), GRID_CELLS),
            archive_coverage: CoverageGrid::new(task.bounds(), GRID_CELLS),
            split: BudgetSplit::with_areas(&ids),
            max_rewards: ids.iter().map(|id| (*id, 0.0)).collect(),
            snapshot_every,
            next_snapshot: snapshot_every,
            rows: Vec::new(),
            trace: None,
        }
    }

    /// Also keep every evaluated policy, in evaluation order.
    pub fn with_trace(mut self) -> Self {
        self.trace = Some(Vec::new());
        self
    }

    pub fn task(&self) -> &'t dyn Task {
        self.task
    }

    pub fn evaluations(&self) -> u64 {
        self.evaluations
    }

    pub fn param_count(&self) -> usize {
        self.task.param_count()
    }

    pub fn evaluate(&mut self, params: ParameterVector, origin: Origin) -> EvaluatedPolicy {
        let result = self.task.run_episode(&params);
        self.evaluations += u64::from(result.evaluations_consumed.max(1));
        self.coverage.insert(result.descriptor);
        self.split.add(&result);
        if let Some(id) = result.area_id {
            let slot = self.max_rewards.entry(id).or_insert(0.0);
            if result.reward > *slot {
                *slot = result.reward;
            }
        }
        let policy = EvaluatedPolicy {
            uid: self.next_uid,
            origin,
            descriptor: result.descriptor,
            reward: result.reward,
            area_id: result.area_id,
            params: Some(params),
        };
        self.next_uid += 1;
        if let Some(trace) = &mut self.trace {
            trace.push(policy.clone());
        }
        policy
    }

    /// Evaluates a batch in order; results are returned in the same order.
    pub fn evaluate_all(&mut self, batch: Vec<ParameterVector>, origin: Origin) -> Vec<EvaluatedPolicy> {
        batch.into_iter().map(|p| self.evaluate(p, origin)).collect()
    }

    /// Registers a descriptor stored in one of the algorithm's archives.
    pub fn note_archived(&mut self, descriptor: Point) {
        self.archive_coverage.insert(descriptor);
    }

    /// Called after every generation and phase transition; records a row
    /// when the evaluation count has reached the next snapshot boundary.
    pub fn checkpoint(&mut self, phase: Phase, sizes: ArchiveSizes) {
        if self.evaluations >= self.next_snapshot {
            self.push_row(phase, sizes);
            self.next_snapshot = (self.evaluations / self.snapshot_every + 1) * self.snapshot_every;
        }
    }

    /// Records a final row unless one already exists for the current count.
    pub fn finish(&mut self, phase: Phase, sizes: ArchiveSizes) {
        if self.rows.last().map(|r| r.evaluations) != Some(self.evaluations) {
            self.push_row(phase, sizes);
        }
    }

    fn push_row(&mut self, phase: Phase, sizes: ArchiveSizes) {
        self.rows.push(MetricsRow {
            evaluations: self.evaluations,
            coverage: self.coverage.coverage(),
            cov_archive: self.archive_coverage.coverage(),
            max_reward_per_area: self.max_rewards.clone(),
            budget_split: self.split.clone(),
            a_nov_size: sizes.a_nov,
            a_rew_size: sizes.a_rew,
            phase,
        });
    }

    pub fn rows(&self) -> &[MetricsRow] {
        &self.rows
    }

    pub fn into_parts(self) -> (Vec<MetricsRow>, Option<Vec<EvaluatedPolicy>>) {
        (self.rows, self.trace)
    }
}
