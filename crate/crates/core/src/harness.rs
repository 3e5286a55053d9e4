//! Experiment orchestration: resolves a run configuration, runs every seed
//! and writes metrics, archives, metadata and a cross-seed summary.
//!
//! Layout of a run directory:
//!
//! ```text
//! <out_dir>/
//!   summary.csv
//!   seed_<n>/metrics.csv
//!   seed_<n>/archive_<name>.jsonl
//!   seed_<n>/meta.json
//! ```
//!
//! `metrics.csv` columns: `evaluations, coverage, cov_archive,
//! max_r_area_<id>..., split_exploration, split_area_<id>..., a_nov_size,
//! a_rew_size, phase`. `summary.csv` has `checkpoint, n_seeds` followed by
//! `<column>_mean, <column>_std` for every numeric metrics column; the
//! standard deviation is the population one (zero for a single seed).

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::baselines;
use crate::env::{EnvSpec, Task};
use crate::error::{Error, Result};
use crate::metrics::{Evaluator, MetricsRow};
use crate::novelty::write_jsonl;
use crate::serene::{RunOutput, Serene, SereneConfig};

pub const DEFAULT_SNAPSHOT_EVERY: u64 = 1000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algo {
    Serene,
    Ns,
    Me,
    Nsga2,
    Rnd,
}

impl Algo {
    pub const ALL: [Algo; 5] = [Algo::Serene, Algo::Ns, Algo::Me, Algo::Nsga2, Algo::Rnd];

    pub fn name(self) -> &'static str {
        match self {
            Algo::Serene => "serene",
            Algo::Ns => "ns",
            Algo::Me => "me",
            Algo::Nsga2 => "nsga2",
            Algo::Rnd => "rnd",
        }
    }
}

impl fmt::Display for Algo {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algo {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Algo::ALL
            .into_iter()
            .find(|a| a.name() == s)
            .ok_or_else(|| Error::InvalidConfig(format!("unknown algorithm '{s}'")))
    }
}

/// Budget and seed count presets.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Profile {
    /// 100k evaluations, 5 seeds.
    Desk,
    /// 500k evaluations, 15 seeds.
    Paper,
}

impl Profile {
    pub fn budget(self) -> u64 {
        match self {
            Profile::Desk => 100_000,
            Profile::Paper => 500_000,
        }
    }

    pub fn seed_count(self) -> u64 {
        match self {
            Profile::Desk => 5,
            Profile::Paper => 15,
        }
    }
}

impl FromStr for Profile {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "desk" => Ok(Profile::Desk),
            "paper" => Ok(Profile::Paper),
            _ => Err(Error::InvalidConfig(format!("unknown profile '{s}'"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub algo: Algo,
    /// Built-in environment name or path to a geometry file.
    pub env: String,
    #[serde(default)]
    pub serene: SereneConfig,
    pub seeds: Vec<u64>,
    pub out_dir: PathBuf,
    #[serde(default = "default_snapshot_every")]
    pub snapshot_every: u64,
    /// Store genomes in the archive files.
    #[serde(default = "default_true")]
    pub with_genomes: bool,
}

fn default_snapshot_every() -> u64 {
    DEFAULT_SNAPSHOT_EVERY
}

fn default_true() -> bool {
    true
}

impl RunConfig {
    pub fn from_profile(algo: Algo, env: &str, profile: Profile, seed_base: u64, out_dir: impl Into<PathBuf>) -> Self {
        Self {
            algo,
            env: env.to_string(),
            serene: SereneConfig {
                bud: profile.budget(),
                ..SereneConfig::default()
            },
            seeds: (seed_base..seed_base + profile.seed_count()).collect(),
            out_dir: out_dir.into(),
            snapshot_every: DEFAULT_SNAPSHOT_EVERY,
            with_genomes: true,
        }
    }

    pub fn from_json_file(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::json(path, e))
    }

    pub fn validate(&self) -> Result<()> {
        if self.seeds.is_empty() {
            return Err(Error::InvalidConfig("seeds must not be empty".into()));
        }
        let mut sorted = self.seeds.clone();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != self.seeds.len() {
            return Err(Error::InvalidConfig("seeds must be distinct".into()));
        }
        if self.snapshot_every == 0 {
            return Err(Error::InvalidConfig("snapshot_every must be at least 1".into()));
        }
        self.serene.validate()
    }

    pub fn seed_config(&self, seed: u64) -> SereneConfig {
        SereneConfig {
            seed,
            ..self.serene.clone()
        }
    }
}

/// Runs `algo` once. With `trace`, the output carries every evaluated
/// policy in order.
pub fn run_algorithm(algo: Algo, cfg: &SereneConfig, task: &dyn Task, snapshot_every: u64, trace: bool) -> RunOutput {
    if algo == Algo::Serene {
        let serene = Serene::new(cfg.clone(), task, snapshot_every);
        return if trace { serene.with_trace() } else { serene }.run();
    }
    let ev = Evaluator::new(task, snapshot_every);
    let ev = if trace { ev.with_trace() } else { ev };
    match algo {
        Algo::Serene => unreachable!(),
        Algo::Ns => baselines::run_ns_with(cfg, ev),
        Algo::Me => baselines::run_me_with(cfg, ev),
        Algo::Nsga2 => baselines::run_nsga2_with(cfg, ev),
        Algo::Rnd => baselines::run_rnd_with(cfg, ev),
    }
}

/// Header of `metrics.csv` for the given area ids.
pub fn metrics_header(area_ids: &[u32]) -> Vec<String> {
    let mut h = vec!["evaluations".to_string(), "coverage".into(), "cov_archive".into()];
    h.extend(area_ids.iter().map(|id| format!("max_r_area_{id}")));
    h.push("split_exploration".into());
    h.extend(area_ids.iter().map(|id| format!("split_area_{id}")));
    h.extend(["a_nov_size".to_string(), "a_rew_size".into(), "phase".into()]);
    h
}

fn metrics_record(row: &MetricsRow, area_ids: &[u32]) -> Vec<String> {
    let mut r = vec![
        row.evaluations.to_string(),
        row.coverage.to_string(),
        row.cov_archive.to_string(),
    ];
    r.extend(area_ids.iter().map(|id| row.max_reward_per_area.get(id).copied().unwrap_or(0.0).to_string()));
    r.push(row.budget_split.exploration.to_string());
    r.extend(area_ids.iter().map(|id| row.budget_split.areas.get(id).copied().unwrap_or(0).to_string()));
    r.extend([row.a_nov_size.to_string(), row.a_rew_size.to_string(), row.phase.label().to_string()]);
    r
}

pub fn write_metrics_csv(path: &Path, rows: &[MetricsRow], area_ids: &[u32]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_error(path, e))?;
    w.write_record(metrics_header(area_ids)).map_err(|e| csv_error(path, e))?;
    for row in rows {
        w.write_record(metrics_record(row, area_ids)).map_err(|e| csv_error(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

fn csv_error(path: &Path, e: csv::Error) -> Error {
    Error::Malformed {
        path: path.to_path_buf(),
        msg: e.to_string(),
    }
}

/// A parsed CSV file: header plus rows of raw fields.
#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn read(path: &Path) -> Result<Self> {
        let mut r = csv::Reader::from_path(path).map_err(|e| csv_error(path, e))?;
        let header = r.headers().map_err(|e| csv_error(path, e))?.iter().map(String::from).collect();
        let mut rows = Vec::new();
        for rec in r.records() {
            rows.push(rec.map_err(|e| csv_error(path, e))?.iter().map(String::from).collect());
        }
        Ok(Self { header, rows })
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.header.iter().position(|h| h == name)
    }

    /// Numeric value of `column` in `row`.
    pub fn value(&self, row: usize, column: &str) -> Option<f64> {
        self.rows.get(row)?.get(self.column(column)?)?.parse().ok()
    }
}

/// Metadata written next to each seed's metrics.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RunMeta {
    pub algo: Algo,
    pub env: String,
    pub seed: u64,
    pub config: SereneConfig,
    pub snapshot_every: u64,
    pub with_genomes: bool,
    pub geometry_hash: String,
    pub geometry: serde_json::Value,
    pub policy: serde_json::Value,
    pub param_count: usize,
    pub evaluations: u64,
    pub wall_time_s: f64,
    pub version: String,
}

pub fn seed_dir(out_dir: &Path, seed: u64) -> PathBuf {
    out_dir.join(format!("seed_{seed}"))
}

/// Runs one seed and writes its directory.
pub fn run_seed(config: &RunConfig, env: &EnvSpec, seed: u64) -> Result<RunMeta> {
    let dir = seed_dir(&config.out_dir, seed);
    fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
    let cfg = config.seed_config(seed);
    let started = Instant::now();
    let out = run_algorithm(config.algo, &cfg, env, config.snapshot_every, false);
    let wall_time_s = started.elapsed().as_secs_f64();

    let ids = env.area_ids();
    write_metrics_csv(&dir.join("metrics.csv"), &out.rows, &ids)?;
    for (name, archive) in &out.archives {
        write_jsonl(&dir.join(format!("archive_{name}.jsonl")), archive, config.with_genomes)?;
    }
    let meta = RunMeta {
        algo: config.algo,
        env: env.name().to_string(),
        seed,
        config: cfg,
        snapshot_every: config.snapshot_every,
        with_genomes: config.with_genomes,
        geometry_hash: env.geometry_hash(),
        geometry: serde_json::to_value(&env.geometry).expect("geometry serializes"),
        policy: env.controller.metadata(),
        param_count: env.param_count(),
        evaluations: out.evaluations,
        wall_time_s,
        version: env!("CARGO_PKG_VERSION").to_string(),
    };
    let path = dir.join("meta.json");
    let text = serde_json::to_string_pretty(&meta).expect("meta serializes");
    fs::write(&path, text + "\n").map_err(|e| Error::io(&path, e))?;
    Ok(meta)
}

/// Runs every seed (in parallel, one thread per available core), then
/// writes `summary.csv`. Configuration and output directory are checked
/// before any evaluation.
pub fn run_experiment(config: &RunConfig) -> Result<PathBuf> {
    config.validate()?;
    let env = EnvSpec::resolve(&config.env)?;
    let out = &config.out_dir;
    fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
    let probe = out.join(".qdlab_write_probe");
    fs::write(&probe, b"").map_err(|e| Error::io(&probe, e))?;
    fs::remove_file(&probe).map_err(|e| Error::io(&probe, e))?;
    let path = out.join("config.json");
    let text = serde_json::to_string_pretty(config).expect("config serializes");
    fs::write(&path, text + "\n").map_err(|e| Error::io(&path, e))?;

    let workers = std::thread::available_parallelism().map_or(1, |n| n.get()).min(config.seeds.len());
    let results: Vec<Result<RunMeta>> = if workers <= 1 {
        config.seeds.iter().map(|&s| run_seed(config, &env, s)).collect()
    } else {
        let next = std::sync::atomic::AtomicUsize::new(0);
        let mut slots: Vec<Option<Result<RunMeta>>> = (0..config.seeds.len()).map(|_| None).collect();
        let done = std::sync::Mutex::new(&mut slots);
        std::thread::scope(|scope| {
            for _ in 0..workers {
                scope.spawn(|| loop {
                    let i = next.fetch_add(1, std::sync::atomic::Ordering::Relaxed);
                    let Some(&seed) = config.seeds.get(i) else { break };
                    let r = run_seed(config, &env, seed);
                    done.lock().expect("no poisoned worker")[i] = Some(r);
                });
            }
        });
        slots.into_iter().map(|r| r.expect("every seed ran")).collect()
    };
    for r in results {
        r?;
    }
    summarize(out)?;
    Ok(out.clone())
}

/// Seed directories of a run, sorted by seed.
pub fn seed_dirs(run_dir: &Path) -> Result<Vec<(u64, PathBuf)>> {
    let mut dirs = Vec::new();
    for entry in fs::read_dir(run_dir).map_err(|e| Error::io(run_dir, e))? {
        let entry = entry.map_err(|e| Error::io(run_dir, e))?;
        let name = entry.file_name();
        let Some(seed) = name.to_str().and_then(|n| n.strip_prefix("seed_")).and_then(|n| n.parse().ok()) else {
            continue;
        };
        if entry.path().join("metrics.csv").is_file() {
            dirs.push((seed, entry.path()));
        }
    }
    dirs.sort();
    Ok(dirs)
}

/// Checkpoint of every metrics row: the snapshot boundary it was recorded
/// at. A closing row that falls short of the next boundary is keyed by the
/// budget instead.
pub fn checkpoints(evaluations: &[u64], snapshot_every: u64, budget: u64) -> Vec<u64> {
    let mut keys: Vec<u64> = Vec::with_capacity(evaluations.len());
    for &e in evaluations {
        let k = e / snapshot_every * snapshot_every;
        let k = if keys.last().is_some_and(|&prev| prev >= k) { budget } else { k };
        keys.push(k);
    }
    keys
}

/// Mean and population standard deviation.
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// Rebuilds `summary.csv` from the per-seed metrics files. Checkpoints
/// missing from some seeds are averaged over the seeds that have them.
pub fn summarize(run_dir: &Path) -> Result<PathBuf> {
    let dirs = seed_dirs(run_dir)?;
    if dirs.is_empty() {
        return Err(Error::Malformed {
            path: run_dir.to_path_buf(),
            msg: "no seed_<n>/metrics.csv found".into(),
        });
    }
    let mut header: Option<Vec<String>> = None;
    // checkpoint -> per-seed numeric rows
    let mut groups: BTreeMap<u64, Vec<Vec<f64>>> = BTreeMap::new();
    for (_, dir) in &dirs {
        let path = dir.join("metrics.csv");
        let table = Table::read(&path)?;
        let meta_path = dir.join("meta.json");
        let meta: RunMeta = serde_json::from_str(&fs::read_to_string(&meta_path).map_err(|e| Error::io(&meta_path, e))?)
            .map_err(|e| Error::json(&meta_path, e))?;
        let numeric: Vec<usize> = (0..table.header.len()).filter(|&i| table.header[i] != "phase").collect();
        let names: Vec<String> = numeric.iter().map(|&i| table.header[i].clone()).collect();
        match &header {
            None => header = Some(names),
            Some(h) if *h != names => {
                return Err(Error::Malformed {
                    path,
                    msg: "columns differ from the other seeds".into(),
                })
            }
            Some(_) => {}
        }
        let mut evals = Vec::with_capacity(table.rows.len());
        let mut values = Vec::with_capacity(table.rows.len());
        for (r, row) in table.rows.iter().enumerate() {
            let parsed: Result<Vec<f64>> = numeric
                .iter()
                .map(|&i| {
                    row.get(i).and_then(|v| v.parse().ok()).ok_or_else(|| Error::Malformed {
                        path: path.clone(),
                        msg: format!("row {}: column '{}' is not numeric", r + 1, table.header[i]),
                    })
                })
                .collect();
            let parsed = parsed?;
            evals.push(parsed[0] as u64);
            values.push(parsed);
        }
        for (k, v) in checkpoints(&evals, meta.snapshot_every, meta.config.bud).into_iter().zip(values) {
            groups.entry(k).or_default().push(v);
        }
    }
    let header = header.expect("at least one seed");
    let path = run_dir.join("summary.csv");
    let mut w = csv::Writer::from_path(&path).map_err(|e| csv_error(&path, e))?;
    let mut out_header = vec!["checkpoint".to_string(), "n_seeds".into()];
    for h in &header {
        out_header.push(format!("{h}_mean"));
        out_header.push(format!("{h}_std"));
    }
    w.write_record(&out_header).map_err(|e| csv_error(&path, e))?;
    for (k, rows) in &groups {
        let mut rec = vec![k.to_string(), rows.len().to_string()];
        for c in 0..header.len() {
            let col: Vec<f64> = rows.iter().map(|r| r[c]).collect();
            let (m, s) = mean_std(&col);
            rec.push(m.to_string());
            rec.push(s.to_string());
        }
        w.write_record(&rec).map_err(|e| csv_error(&path, e))?;
    }
    w.flush().map_err(|e| Error::io(&path, e))?;
    Ok(path)
}
