//! Brute-force reference implementations used to check the library.
//! Written independently of the code under test: no shared helpers.
#![allow(dead_code)]

use std::collections::HashSet;
use std::path::Path;
use std::sync::atomic::{AtomicU64, Ordering};

use qdlab::env::{EpisodeResult, Rect, RewardArea, Task};
use qdlab::policy::{MlpSpec, ParameterVector};

/// Mean distance to the k nearest reference points, by full sort.
pub fn knn_oracle(q: [f64; 2], reference: &[[f64; 2]], k: usize) -> f64 {
    if reference.is_empty() {
        return 0.0;
    }
    let mut d: Vec<f64> = reference
        .iter()
        .map(|r| ((q[0] - r[0]).powi(2) + (q[1] - r[1]).powi(2)).sqrt())
        .collect();
    d.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = k.min(d.len());
    d[..n].iter().sum::<f64>() / n as f64
}

fn dominates(a: &[f64], b: &[f64]) -> bool {
    let mut strict = false;
    for (x, y) in a.iter().zip(b) {
        if x < y {
            return false;
        }
        if x > y {
            strict = true;
        }
    }
    strict
}

/// Indices not dominated by any other point (all objectives maximised).
pub fn nondominated_oracle(points: &[Vec<f64>]) -> Vec<usize> {
    (0..points.len())
        .filter(|&i| !(0..points.len()).any(|j| j != i && dominates(&points[j], &points[i])))
        .collect()
}

/// Occupied-cell fraction with cells keyed in a hash set.
pub fn coverage_oracle(points: &[[f64; 2]], bounds: &Rect, cells: usize) -> f64 {
    let mut seen = HashSet::new();
    for p in points {
        let mut key = [0usize; 2];
        for a in 0..2 {
            let lo = bounds.min[a];
            let hi = bounds.max[a];
            let x = p[a].max(lo).min(hi);
            let f = ((x - lo) / (hi - lo) * cells as f64).floor() as usize;
            key[a] = if f >= cells { cells - 1 } else { f };
        }
        seen.insert(key);
    }
    seen.len() as f64 / (cells * cells) as f64
}

/// Smallest parameter-space distance from `anchor` to any other genome,
/// divided by three; genomes equal to the anchor are skipped.
pub fn sigma_oracle(anchor: &[f64], others: &[Vec<f64>]) -> Option<f64> {
    others
        .iter()
        .map(|o| anchor.iter().zip(o).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt())
        .filter(|d| *d > 0.0)
        .fold(None, |best: Option<f64>, d| Some(best.map_or(d, |b| b.min(d))))
        .map(|d| d / 3.0)
}

fn normal_pdf(x: f64, mu: f64, sigma: f64) -> f64 {
    let z = (x - mu) / sigma;
    (-0.5 * z * z).exp() / (sigma * (2.0 * std::f64::consts::PI).sqrt())
}

fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    if b <= a {
        return 0.0;
    }
    let n = n + n % 2;
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        s += w * f(a + i as f64 * h);
    }
    s * h / 3.0
}

/// Mean and standard deviation of `clamp(X, lo, hi)` with
/// `X ~ N(mu, sigma^2)`, by numerical integration.
pub fn clipped_normal_moments(mu: f64, sigma: f64, lo: f64, hi: f64) -> (f64, f64) {
    let a = mu - 12.0 * sigma;
    let b = mu + 12.0 * sigma;
    let n = 200_000;
    let p_lo = simpson(|x| normal_pdf(x, mu, sigma), a, lo.max(a), n);
    let p_hi = simpson(|x| normal_pdf(x, mu, sigma), hi.min(b), b, n);
    let (l, h) = (lo.max(a), hi.min(b));
    let m1 = simpson(|x| x * normal_pdf(x, mu, sigma), l, h, n) + lo * p_lo + hi * p_hi;
    let m2 = simpson(|x| x * x * normal_pdf(x, mu, sigma), l, h, n) + lo * lo * p_lo + hi * hi * p_hi;
    (m1, (m2 - m1 * m1).sqrt())
}

pub fn mean_std(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    let v = xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / n;
    (m, v.sqrt())
}

/// Wraps a task and counts every episode it runs.
pub struct Counting<'a, T: Task + ?Sized> {
    pub inner: &'a T,
    pub calls: AtomicU64,
}

impl<'a, T: Task + ?Sized> Counting<'a, T> {
    pub fn new(inner: &'a T) -> Self {
        Self {
            inner,
            calls: AtomicU64::new(0),
        }
    }

    pub fn count(&self) -> u64 {
        self.calls.load(Ordering::SeqCst)
    }
}

impl<T: Task + ?Sized> Task for Counting<'_, T> {
    fn controller(&self) -> &MlpSpec {
        self.inner.controller()
    }

    fn bounds(&self) -> Rect {
        self.inner.bounds()
    }

    fn reward_areas(&self) -> &[RewardArea] {
        self.inner.reward_areas()
    }

    fn run_episode(&self, params: &ParameterVector) -> EpisodeResult {
        self.calls.fetch_add(1, Ordering::SeqCst);
        self.inner.run_episode(params)
    }
}

/// A cheap synthetic task: the descriptor is a fixed smooth squashing of
/// the first two genome coordinates. Optional reward areas.
pub struct Plane {
    pub spec: MlpSpec,
    pub areas: Vec<RewardArea>,
}

impl Plane {
    pub fn new(areas: Vec<RewardArea>) -> Self {
        Self {
            spec: MlpSpec::new(2, vec![2], 1).unwrap(),
            areas,
        }
    }
}

impl Task for Plane {
    fn controller(&self) -> &MlpSpec {
        &self.spec
    }

    fn bounds(&self) -> Rect {
        Rect::new([-1.0, -1.0], [1.0, 1.0])
    }

    fn reward_areas(&self) -> &[RewardArea] {
        &self.areas
    }

    fn run_episode(&self, params: &ParameterVector) -> EpisodeResult {
        let g = params.as_slice();
        let d = [(g[0] / 5.0).tanh() * 1.3, (g[1] * g[2] / 10.0).tanh()];
        qdlab::env::score_position(d, &self.bounds(), &self.areas)
    }
}

/// Parses a CSV written by the harness into a header and rows of strings.
pub fn read_csv(path: &Path) -> (Vec<String>, Vec<Vec<String>>) {
    let text = std::fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    let header = lines.next().unwrap().split(',').map(String::from).collect();
    let rows = lines.map(|l| l.split(',').map(String::from).collect()).collect();
    (header, rows)
}
