//! Planar redundant arm driven by joint torques.

use std::f64::consts::FRAC_PI_2;

use super::{EnvSpec, Point};
use crate::policy::{Controller, ParameterVector};

const JOINT_LIMIT: f64 = FRAC_PI_2;
const DAMPING: f64 = 0.9;
const TORQUE_GAIN: f64 = 0.05;

/// End-effector position of a chain anchored at the origin; each joint
/// angle is relative to the previous link.
pub(crate) fn forward_kinematics(links: &[f64], joints: &[f64]) -> Point {
    let mut angle = 0.0;
    let mut tip = [0.0, 0.0];
    for (len, q) in links.iter().zip(joints) {
        angle += q;
        let (s, c) = angle.sin_cos();
        tip[0] += len * c;
        tip[1] += len * s;
    }
    tip
}

pub(crate) fn simulate(spec: &EnvSpec, params: &ParameterVector) -> Point {
    let g = &spec.geometry;
    let n = g.links.len();
    let mut q = g.joints_or_zero(n);
    let mut vel = vec![0.0; n];
    let mut obs = vec![0.0; n];
    let mut controller = Controller::new(&spec.controller, params.as_slice());
    for _ in 0..g.timesteps {
        for (o, qi) in obs.iter_mut().zip(&q) {
            *o = qi / JOINT_LIMIT;
        }
        let torque = controller.act(&obs);
        for ((qi, vi), t) in q.iter_mut().zip(&mut vel).zip(torque) {
            *vi = DAMPING * *vi + TORQUE_GAIN * t;
            *qi += *vi;
            if qi.abs() > JOINT_LIMIT {
                *qi = qi.clamp(-JOINT_LIMIT, JOINT_LIMIT);
                *vi = 0.0;
            }
        }
    }
    forward_kinematics(&g.links, &q)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::EnvKind;

    #[test]
    fn straight_arm_reaches_full_length() {
        let links = vec![0.05; 20];
        let tip = forward_kinematics(&links, &[0.0; 20]);
        assert!((tip[0] - 1.0).abs() < 1e-12 && tip[1].abs() < 1e-12);
    }

    #[test]
    fn two_link_elbow() {
        let tip = forward_kinematics(&[0.5, 0.5], &[FRAC_PI_2, -FRAC_PI_2]);
        assert!((tip[0] - 0.5).abs() < 1e-12 && (tip[1] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn zero_policy_keeps_arm_straight() {
        let spec = EnvSpec::builtin(EnvKind::RedundantArm);
        let p = ParameterVector::zeros(spec.controller.param_count());
        let tip = simulate(&spec, &p);
        let expected = forward_kinematics(&spec.geometry.links, &spec.geometry.joints_or_zero(20));
        assert_eq!(tip, expected);
    }
}
