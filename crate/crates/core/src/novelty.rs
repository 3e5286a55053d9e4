//! kNN novelty, the novelty archive and the coverage metric.

use std::collections::HashSet;
use std::io::{BufRead, Write};
use std::path::Path;

use rand::seq::index;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::env::{dist, Point, Rect};
use crate::error::{Error, Result};
use crate::policy::ParameterVector;

/// Neighbourhood size used when none is configured.
pub const DEFAULT_K: usize = 15;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Origin {
    Initial,
    Exploration,
    Bootstrap,
    Emitter,
}

/// A genome together with the outcome of its single evaluation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvaluatedPolicy {
    pub uid: u64,
    pub origin: Origin,
    pub descriptor: Point,
    pub reward: f64,
    pub area_id: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub params: Option<ParameterVector>,
}

impl EvaluatedPolicy {
    /// The genome; every policy produced by a search keeps its genome.
    pub fn genome(&self) -> &ParameterVector {
        self.params.as_ref().expect("policy genome was stripped")
    }

    pub fn is_rewarding(&self) -> bool {
        self.reward > 0.0
    }
}

/// Mean Euclidean distance from `query` to its `k` nearest points in
/// `reference` (fewer if the reference is smaller). The caller removes the
/// query itself from `reference`; an empty reference has novelty 0.
pub fn novelty(query: Point, reference: &[Point], k: usize) -> f64 {
    let mut scratch = Vec::with_capacity(reference.len());
    novelty_with(query, reference.iter().copied(), k, &mut scratch)
}

fn novelty_with(
    query: Point,
    reference: impl Iterator<Item = Point>,
    k: usize,
    scratch: &mut Vec<f64>,
) -> f64 {
    assert!(k >= 1, "novelty needs k >= 1");
    scratch.clear();
    scratch.extend(reference.map(|p| dist(query, p)));
    if scratch.is_empty() {
        return 0.0;
    }
    let k = k.min(scratch.len());
    if k < scratch.len() {
        scratch.select_nth_unstable_by(k - 1, f64::total_cmp);
    }
    let nearest = &mut scratch[..k];
    // Fixed summation order keeps results independent of the selection
    // algorithm's internal permutation.
    nearest.sort_unstable_by(f64::total_cmp);
    nearest.iter().sum::<f64>() / k as f64
}

/// Novelty of every member of `population` followed by every member of
/// `offspring`, each measured against all other distinct policies of the
/// population, the offspring and the archive. Policies are identified by
/// uid, so an archived copy of a population member is not its own neighbour.
pub fn population_novelties(
    population: &[EvaluatedPolicy],
    offspring: &[EvaluatedPolicy],
    archive: &NoveltyArchive,
    k: usize,
) -> Vec<f64> {
    let mut seen = HashSet::with_capacity(population.len() + offspring.len());
    let mut reference: Vec<(u64, Point)> = Vec::with_capacity(population.len() + offspring.len() + archive.len());
    for p in population.iter().chain(offspring).chain(archive.entries()) {
        if seen.insert(p.uid) {
            reference.push((p.uid, p.descriptor));
        }
    }
    let mut scratch = Vec::with_capacity(reference.len());
    population
        .iter()
        .chain(offspring)
        .map(|p| {
            let others = reference
                .iter()
                .filter(|(uid, _)| *uid != p.uid)
                .map(|(_, d)| *d);
            novelty_with(p.descriptor, others, k, &mut scratch)
        })
        .collect()
}

/// Novelty of `query` against a reference set keyed by uid, skipping any
/// entry that shares the query's uid.
pub fn novelty_excluding(query: Point, uid: u64, reference: &[(u64, Point)], k: usize) -> f64 {
    let mut scratch = Vec::with_capacity(reference.len());
    let others = reference.iter().filter(|(u, _)| *u != uid).map(|(_, d)| *d);
    novelty_with(query, others, k, &mut scratch)
}

/// Append-only store of policies, unique by uid.
#[derive(Clone, Debug, Default)]
pub struct NoveltyArchive {
    entries: Vec<EvaluatedPolicy>,
    uids: HashSet<u64>,
}

impl NoveltyArchive {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[EvaluatedPolicy] {
        &self.entries
    }

    pub fn contains(&self, uid: u64) -> bool {
        self.uids.contains(&uid)
    }

    /// Appends `policy` unless its uid is already stored.
    pub fn push(&mut self, policy: EvaluatedPolicy) -> bool {
        if self.uids.insert(policy.uid) {
            self.entries.push(policy);
            true
        } else {
            false
        }
    }

    pub fn descriptors(&self) -> impl Iterator<Item = Point> + '_ {
        self.entries.iter().map(|p| p.descriptor)
    }

    pub fn into_entries(self) -> Vec<EvaluatedPolicy> {
        self.entries
    }
}

/// Moves `min(n_q, pool.len())` policies chosen uniformly without
/// replacement from `pool` into `archive`. Returns the appended policies.
pub fn sample_into_archive<R: Rng + ?Sized>(
    archive: &mut NoveltyArchive,
    pool: &[EvaluatedPolicy],
    n_q: usize,
    rng: &mut R,
) -> Vec<EvaluatedPolicy> {
    let amount = n_q.min(pool.len());
    if amount == 0 {
        return Vec::new();
    }
    let picked = index::sample(rng, pool.len(), amount);
    let mut added = Vec::with_capacity(amount);
    for i in picked.iter() {
        if archive.push(pool[i].clone()) {
            added.push(pool[i].clone());
        }
    }
    added
}

/// Grid cell of `p` in a `cells`-per-side discretisation of `bounds`.
/// Points on the upper boundary fall in the last cell; points outside are
/// clamped first.
pub fn cell_of(p: Point, bounds: &Rect, cells: usize) -> (usize, usize) {
    let axis = |v: f64, lo: f64, hi: f64| {
        let t = ((v - lo) / (hi - lo) * cells as f64).floor();
        if t.is_nan() || t < 0.0 {
            0
        } else {
            (t as usize).min(cells - 1)
        }
    };
    (
        axis(p[0], bounds.min[0], bounds.max[0]),
        axis(p[1], bounds.min[1], bounds.max[1]),
    )
}

/// Fraction of grid cells occupied by at least one descriptor.
pub fn coverage(descriptors: &[Point], bounds: &Rect, cells_per_side: usize) -> f64 {
    let mut grid = CoverageGrid::new(*bounds, cells_per_side);
    for d in descriptors {
        grid.insert(*d);
    }
    grid.coverage()
}

/// Incrementally maintained occupancy grid.
#[derive(Clone, Debug)]
pub struct CoverageGrid {
    bounds: Rect,
    cells: usize,
    occupied: Vec<bool>,
    count: usize,
}

impl CoverageGrid {
    pub fn new(bounds: Rect, cells_per_side: usize) -> Self {
        assert!(cells_per_side >= 1, "coverage grid needs at least one cell");
        Self {
            bounds,
            cells: cells_per_side,
            occupied: vec![false; cells_per_side * cells_per_side],
            count: 0,
        }
    }

    /// Marks the cell of `p`; returns whether it was newly occupied.
    pub fn insert(&mut self, p: Point) -> bool {
        let (i, j) = cell_of(p, &self.bounds, self.cells);
        let slot = &mut self.occupied[j * self.cells + i];
        if *slot {
            false
        } else {
            *slot = true;
            self.count += 1;
            true
        }
    }

    pub fn occupied(&self) -> usize {
        self.count
    }

    pub fn coverage(&self) -> f64 {
        self.count as f64 / (self.cells * self.cells) as f64
    }
}

/// Writes one JSON object per line; genomes are dropped when
/// `with_genomes` is false.
pub fn write_jsonl(path: &Path, policies: &[EvaluatedPolicy], with_genomes: bool) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = std::io::BufWriter::new(file);
    for p in policies {
        let line = if with_genomes {
            serde_json::to_string(p)
        } else {
            serde_json::to_string(&EvaluatedPolicy {
                params: None,
                ..p.clone()
            })
        }
        .map_err(|e| Error::json(path, e))?;
        writeln!(out, "{line}").map_err(|e| Error::io(path, e))?;
    }
    out.flush().map_err(|e| Error::io(path, e))
}

pub fn read_jsonl(path: &Path) -> Result<Vec<EvaluatedPolicy>> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut policies = Vec::new();
    for line in std::io::BufReader::new(file).lines() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        policies.push(serde_json::from_str(&line).map_err(|e| Error::json(path, e))?);
    }
    Ok(policies)
}
