use serde::{Deserialize, Serialize};

use super::{dist, EnvKind, Point, Rect, RewardArea};
use crate::error::{Error, Result};

/// On-disk description of an environment.
///
/// `walls` is only used by the maze and `links` only by the arms; `start`
/// holds whichever initial pose fields the environment needs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Geometry {
    pub name: EnvKind,
    #[serde(default = "default_version")]
    pub version: u32,
    pub behavior_bounds: Rect,
    pub timesteps: usize,
    #[serde(default)]
    pub reward_areas: Vec<RewardArea>,
    #[serde(default)]
    pub walls: Vec<[f64; 4]>,
    #[serde(default)]
    pub links: Vec<f64>,
    #[serde(default)]
    pub start: Start,
    /// Hidden layer widths of the controller.
    pub hidden: Vec<usize>,
}

fn default_version() -> u32 {
    1
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Start {
    /// Ball center (curling).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ball: Option<Point>,
    /// Robot center (maze).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub position: Option<Point>,
    /// Robot heading in radians (maze).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub heading: Option<f64>,
    /// Initial joint angles (arms).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub joints: Option<Vec<f64>>,
}

fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidGeometry(msg.into())
}

impl Geometry {
    pub fn validate(&self) -> Result<()> {
        let b = &self.behavior_bounds;
        if !(b.width() > 0.0 && b.height() > 0.0) {
            return Err(invalid("behavior_bounds must have positive extent"));
        }
        if self.timesteps != self.name.timesteps() {
            return Err(invalid(format!(
                "{} episodes last {} timesteps, got {}",
                self.name.name(),
                self.name.timesteps(),
                self.timesteps
            )));
        }
        for (i, a) in self.reward_areas.iter().enumerate() {
            if !(a.radius > 0.0) {
                return Err(invalid(format!("reward area {} has non-positive radius", a.id)));
            }
            if !b.contains_disc(a.center, a.radius) {
                return Err(invalid(format!("reward area {} leaves behavior_bounds", a.id)));
            }
            for other in &self.reward_areas[..i] {
                if other.id == a.id {
                    return Err(invalid(format!("duplicate reward area id {}", a.id)));
                }
                if dist(a.center, other.center) <= a.radius + other.radius {
                    return Err(invalid(format!(
                        "reward areas {} and {} overlap",
                        other.id, a.id
                    )));
                }
            }
        }
        match self.name {
            EnvKind::Curling => {
                if self.links.len() != 2 {
                    return Err(invalid("curling needs exactly two links"));
                }
                if self.start.ball.is_none() {
                    return Err(invalid("curling needs start.ball"));
                }
                self.check_joints(2)?;
            }
            EnvKind::Hardmaze => {
                let p = self
                    .start
                    .position
                    .ok_or_else(|| invalid("hardmaze needs start.position"))?;
                if !b.contains(p) {
                    return Err(invalid("start.position outside the arena"));
                }
                if self.start.heading.is_none() {
                    return Err(invalid("hardmaze needs start.heading"));
                }
            }
            EnvKind::RedundantArm => {
                if self.links.is_empty() {
                    return Err(invalid("redundant_arm needs at least one link"));
                }
                self.check_joints(self.links.len())?;
            }
        }
        if self.links.iter().any(|l| !(*l > 0.0)) {
            return Err(invalid("link lengths must be positive"));
        }
        Ok(())
    }

    fn check_joints(&self, n: usize) -> Result<()> {
        match &self.start.joints {
            Some(j) if j.len() != n => Err(invalid(format!(
                "start.joints has {} entries, expected {n}",
                j.len()
            ))),
            _ => Ok(()),
        }
    }

    pub(crate) fn joints_or_zero(&self, n: usize) -> Vec<f64> {
        self.start.joints.clone().unwrap_or_else(|| vec![0.0; n])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn base() -> Geometry {
        serde_json::from_str(include_str!("../../geometry/hardmaze.json")).unwrap()
    }

    #[test]
    fn bundled_files_validate() {
        for kind in EnvKind::ALL {
            let g: Geometry = serde_json::from_str(kind.bundled_geometry()).unwrap();
            g.validate().unwrap();
            assert_eq!(g.name, kind);
        }
    }

    #[test]
    fn overlapping_areas_rejected() {
        let mut g = base();
        let mut a = g.reward_areas[0].clone();
        a.id = 99;
        a.center[0] += a.radius;
        g.reward_areas.push(a);
        assert!(g.validate().is_err());
    }

    #[test]
    fn area_outside_bounds_rejected() {
        let mut g = base();
        g.reward_areas[0].center = [0.01, 0.5];
        assert!(g.validate().is_err());
    }

    #[test]
    fn wrong_episode_length_rejected() {
        let mut g = base();
        g.timesteps = 10;
        assert!(g.validate().is_err());
    }

    #[test]
    fn json_round_trip() {
        let g = base();
        let text = serde_json::to_string(&g).unwrap();
        let back: Geometry = serde_json::from_str(&text).unwrap();
        assert_eq!(g, back);
    }
}
