//! Deterministic sparse-reward benchmark environments.
//!
//! Every environment maps a genome to the final position of one tracked
//! point (the behavior descriptor) and a terminal reward that is non-zero
//! only inside one of a few disjoint reward discs.

mod arm;
mod curling;
mod geometry;
mod maze;

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::policy::{MlpSpec, ParameterVector};

pub use geometry::{Geometry, Start};
pub use maze::{segment_distance, segments_intersect};

/// A point in the 2-D behavior space.
pub type Point = [f64; 2];

#[inline]
pub fn dist(a: Point, b: Point) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt()
}

/// Axis-aligned rectangle.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Rect {
    pub min: Point,
    pub max: Point,
}

impl Rect {
    pub fn new(min: Point, max: Point) -> Self {
        Self { min, max }
    }

    pub fn width(&self) -> f64 {
        self.max[0] - self.min[0]
    }

    pub fn height(&self) -> f64 {
        self.max[1] - self.min[1]
    }

    pub fn contains(&self, p: Point) -> bool {
        (self.min[0]..=self.max[0]).contains(&p[0]) && (self.min[1]..=self.max[1]).contains(&p[1])
    }

    pub fn clamp(&self, p: Point) -> Point {
        [
            p[0].clamp(self.min[0], self.max[0]),
            p[1].clamp(self.min[1], self.max[1]),
        ]
    }

    /// Whether the closed disc lies inside the rectangle.
    pub fn contains_disc(&self, center: Point, radius: f64) -> bool {
        center[0] - radius >= self.min[0]
            && center[0] + radius <= self.max[0]
            && center[1] - radius >= self.min[1]
            && center[1] + radius <= self.max[1]
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RewardArea {
    pub id: u32,
    pub center: Point,
    pub radius: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EnvKind {
    Curling,
    Hardmaze,
    RedundantArm,
}

impl EnvKind {
    pub const ALL: [EnvKind; 3] = [EnvKind::Curling, EnvKind::Hardmaze, EnvKind::RedundantArm];

    pub fn name(self) -> &'static str {
        match self {
            EnvKind::Curling => "curling",
            EnvKind::Hardmaze => "hardmaze",
            EnvKind::RedundantArm => "redundant_arm",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.name() == name)
    }

    /// Episode length used by each benchmark.
    pub fn timesteps(self) -> usize {
        match self {
            EnvKind::Curling => 500,
            EnvKind::Hardmaze => 2000,
            EnvKind::RedundantArm => 100,
        }
    }

    fn bundled_geometry(self) -> &'static str {
        match self {
            EnvKind::Curling => include_str!("../../geometry/curling.json"),
            EnvKind::Hardmaze => include_str!("../../geometry/hardmaze.json"),
            EnvKind::RedundantArm => include_str!("../../geometry/redundant_arm.json"),
        }
    }
}

/// Outcome of one episode.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpisodeResult {
    pub descriptor: Point,
    pub reward: f64,
    pub area_id: Option<u32>,
    pub evaluations_consumed: u32,
}

/// Terminal reward for a final position at distance `d_r` from an area
/// center: linear from 1 at the center to 0 at the rim, 0 outside.
pub fn reward_value(d_r: f64, radius: f64) -> Result<f64> {
    if !(radius > 0.0) {
        return Err(Error::InvalidGeometry(format!(
            "reward radius must be positive, got {radius}"
        )));
    }
    if d_r > radius {
        Ok(0.0)
    } else {
        Ok((radius - d_r) / radius)
    }
}

/// Scores a raw final position: clamps it into `bounds`, then rewards it
/// against the nearest area whose rim strictly contains it.
pub fn score_position(raw: Point, bounds: &Rect, areas: &[RewardArea]) -> EpisodeResult {
    let descriptor = bounds.clamp(raw);
    let hit = areas
        .iter()
        .map(|a| (a, dist(descriptor, a.center)))
        .filter(|(a, d)| *d < a.radius)
        .min_by(|x, y| x.1.total_cmp(&y.1));
    let (reward, area_id) = match hit {
        Some((area, d)) => {
            // radius > 0 is an EnvSpec invariant
            let r = reward_value(d, area.radius).unwrap_or(0.0);
            if r > 0.0 {
                (r, Some(area.id))
            } else {
                (0.0, None)
            }
        }
        None => (0.0, None),
    };
    EpisodeResult {
        descriptor,
        reward,
        area_id,
        evaluations_consumed: 1,
    }
}

/// Anything the search algorithms can evaluate a genome on.
///
/// Implementations must be pure: the same genome always yields the same
/// result.
pub trait Task: Sync {
    fn controller(&self) -> &MlpSpec;
    fn bounds(&self) -> Rect;
    fn reward_areas(&self) -> &[RewardArea];
    fn run_episode(&self, params: &ParameterVector) -> EpisodeResult;

    fn param_count(&self) -> usize {
        self.controller().param_count()
    }

    fn area_ids(&self) -> Vec<u32> {
        let mut ids: Vec<u32> = self.reward_areas().iter().map(|a| a.id).collect();
        ids.sort_unstable();
        ids
    }
}

/// A validated environment: geometry plus the controller it expects.
#[derive(Clone, Debug, PartialEq)]
pub struct EnvSpec {
    pub kind: EnvKind,
    pub geometry: Geometry,
    pub controller: MlpSpec,
}

impl EnvSpec {
    pub fn builtin(kind: EnvKind) -> Self {
        let geometry: Geometry = serde_json::from_str(kind.bundled_geometry())
            .expect("bundled geometry parses");
        Self::from_geometry(geometry).expect("bundled geometry is valid")
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let geometry: Geometry = serde_json::from_str(&text).map_err(|e| Error::json(path, e))?;
        Self::from_geometry(geometry)
    }

    /// Accepts a built-in environment name or a path to a geometry file.
    pub fn resolve(name_or_path: &str) -> Result<Self> {
        if let Some(kind) = EnvKind::from_name(name_or_path) {
            return Ok(Self::builtin(kind));
        }
        let path = Path::new(name_or_path);
        if path.exists() {
            Self::from_path(path)
        } else {
            Err(Error::UnknownEnv(name_or_path.to_string()))
        }
    }

    pub fn from_geometry(geometry: Geometry) -> Result<Self> {
        geometry.validate()?;
        let kind = geometry.name;
        let (input, output) = match kind {
            EnvKind::Curling => (6, 2),
            EnvKind::Hardmaze => (maze::SENSOR_ANGLES.len(), 2),
            EnvKind::RedundantArm => (geometry.links.len(), geometry.links.len()),
        };
        let controller = MlpSpec::new(input, geometry.hidden.clone(), output)?;
        Ok(Self {
            kind,
            geometry,
            controller,
        })
    }

    pub fn name(&self) -> &'static str {
        self.kind.name()
    }

    pub fn behavior_bounds(&self) -> Rect {
        self.geometry.behavior_bounds
    }

    pub fn timesteps(&self) -> usize {
        self.geometry.timesteps
    }

    /// Copy of this environment with every reward area removed.
    pub fn without_rewards(&self) -> Self {
        let mut stripped = self.clone();
        stripped.geometry.reward_areas.clear();
        stripped
    }

    /// SHA-256 of the canonical JSON form of the geometry.
    pub fn geometry_hash(&self) -> String {
        use sha2::{Digest, Sha256};
        let canonical = serde_json::to_vec(&self.geometry).expect("geometry serializes");
        hex::encode(Sha256::digest(&canonical))
    }

    /// Final position of the tracked point before clamping and scoring.
    pub fn simulate(&self, params: &ParameterVector) -> Point {
        match self.kind {
            EnvKind::Curling => curling::simulate(self, params),
            EnvKind::Hardmaze => maze::simulate(self, params),
            EnvKind::RedundantArm => arm::simulate(self, params),
        }
    }

    pub fn run_episode(&self, params: &ParameterVector) -> EpisodeResult {
        assert_eq!(
            params.len(),
            self.controller.param_count(),
            "genome length does not match the {} controller",
            self.name()
        );
        let raw = self.simulate(params);
        score_position(raw, &self.geometry.behavior_bounds, &self.geometry.reward_areas)
    }
}

/// Behavior-space rectangle of an environment.
pub fn behavior_bounds(spec: &EnvSpec) -> Rect {
    spec.behavior_bounds()
}

/// Free-function form of [`EnvSpec::run_episode`].
pub fn run_episode(spec: &EnvSpec, params: &ParameterVector) -> EpisodeResult {
    spec.run_episode(params)
}

impl Task for EnvSpec {
    fn controller(&self) -> &MlpSpec {
        &self.controller
    }

    fn bounds(&self) -> Rect {
        self.geometry.behavior_bounds
    }

    fn reward_areas(&self) -> &[RewardArea] {
        &self.geometry.reward_areas
    }

    fn run_episode(&self, params: &ParameterVector) -> EpisodeResult {
        EnvSpec::run_episode(self, params)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::policy::sample_initial;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn reward_formula() {
        assert_eq!(reward_value(0.0, 0.5).unwrap(), 1.0);
        assert_eq!(reward_value(0.5, 0.5).unwrap(), 0.0);
        assert_eq!(reward_value(0.25, 0.5).unwrap(), 0.5);
        assert_eq!(reward_value(1.0, 0.5).unwrap(), 0.0);
        assert!(reward_value(0.1, 0.0).is_err());
        assert!(reward_value(0.1, -1.0).is_err());
    }

    #[test]
    fn builtin_specs_are_consistent() {
        for kind in EnvKind::ALL {
            let spec = EnvSpec::builtin(kind);
            assert_eq!(spec.timesteps(), kind.timesteps());
            let b = spec.behavior_bounds();
            for area in &spec.geometry.reward_areas {
                assert!(b.contains_disc(area.center, area.radius), "{kind:?} {area:?}");
            }
        }
        assert_eq!(EnvSpec::builtin(EnvKind::Curling).controller.param_count(), 107);
        assert_eq!(EnvSpec::builtin(EnvKind::Hardmaze).controller.param_count(), 72);
        assert_eq!(EnvSpec::builtin(EnvKind::RedundantArm).controller.param_count(), 255);
    }

    #[test]
    fn resolve_names_and_rejects_unknown() {
        assert_eq!(EnvSpec::resolve("hardmaze").unwrap().kind, EnvKind::Hardmaze);
        assert!(matches!(
            EnvSpec::resolve("no-such-env"),
            Err(Error::UnknownEnv(_))
        ));
    }

    #[test]
    fn clamp_is_identity_inside() {
        let b = EnvSpec::builtin(EnvKind::Curling).behavior_bounds();
        for p in [[0.0, 0.0], [0.99, -0.99], [-1.0, 1.0]] {
            assert_eq!(b.clamp(p), p);
        }
        assert_eq!(b.clamp([3.0, -7.0]), [1.0, -1.0]);
    }

    #[test]
    fn teleported_point_gets_full_reward() {
        for kind in EnvKind::ALL {
            let spec = EnvSpec::builtin(kind);
            for area in &spec.geometry.reward_areas {
                let r = score_position(area.center, &spec.behavior_bounds(), &spec.geometry.reward_areas);
                assert_eq!(r.reward, 1.0);
                assert_eq!(r.area_id, Some(area.id));
                let rim = [area.center[0] + area.radius * (1.0 + 1e-9), area.center[1]];
                let r = score_position(rim, &spec.behavior_bounds(), &spec.geometry.reward_areas);
                assert_eq!((r.reward, r.area_id), (0.0, None));
                let half = [area.center[0], area.center[1] - area.radius / 2.0];
                let r = score_position(half, &spec.behavior_bounds(), &spec.geometry.reward_areas);
                assert!((r.reward - 0.5).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn episodes_are_deterministic() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for kind in EnvKind::ALL {
            let spec = EnvSpec::builtin(kind);
            for _ in 0..5 {
                let p = sample_initial(&spec.controller, &mut rng);
                let a = spec.run_episode(&p);
                let b = spec.run_episode(&p);
                assert_eq!(a, b);
                assert!(spec.behavior_bounds().contains(a.descriptor));
                assert_eq!(a.reward > 0.0, a.area_id.is_some());
                assert!((0.0..=1.0).contains(&a.reward));
            }
        }
    }

    #[test]
    fn zero_policy_maze_robot_stays_home() {
        let spec = EnvSpec::builtin(EnvKind::Hardmaze);
        let p = ParameterVector::zeros(spec.controller.param_count());
        let r = spec.run_episode(&p);
        assert_eq!(r.descriptor, spec.geometry.start.position.unwrap());
        assert_eq!(r.reward, 0.0);
        assert_eq!(r.area_id, None);
    }

    #[test]
    fn geometry_hash_tracks_content() {
        let spec = EnvSpec::builtin(EnvKind::Hardmaze);
        assert_eq!(spec.geometry_hash(), EnvSpec::builtin(EnvKind::Hardmaze).geometry_hash());
        assert_ne!(spec.geometry_hash(), spec.without_rewards().geometry_hash());
    }
}
