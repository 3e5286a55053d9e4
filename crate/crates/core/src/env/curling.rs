//! Two-link arm pushing a sliding ball.
//!
//! The ball is moved kinematically: whenever the end-effector disc overlaps
//! it, the ball is pushed out along the contact normal by the overlap depth
//! and the push is added to its velocity. The ball then slides with
//! geometric velocity decay and stops dead against the arena walls.

use std::f64::consts::PI;

use super::{EnvSpec, Point, Rect};
use crate::policy::{Controller, ParameterVector};

const MAX_JOINT_SPEED: f64 = PI / 10.0;
const BALL_RADIUS: f64 = 0.05;
const EFFECTOR_RADIUS: f64 = 0.05;
const VELOCITY_DECAY: f64 = 0.95;
/// Largest end-effector displacement between two contact checks.
const CONTACT_STEP: f64 = 0.02;

fn wrap_angle(a: f64) -> f64 {
    (a + PI).rem_euclid(2.0 * PI) - PI
}

fn tip(links: &[f64], q: [f64; 2]) -> Point {
    let (s1, c1) = q[0].sin_cos();
    let (s12, c12) = (q[0] + q[1]).sin_cos();
    [links[0] * c1 + links[1] * c12, links[0] * s1 + links[1] * s12]
}

struct Ball {
    pos: Point,
    vel: Point,
}

impl Ball {
    fn keep_inside(&mut self, arena: &Rect) {
        for k in 0..2 {
            let lo = arena.min[k] + BALL_RADIUS;
            let hi = arena.max[k] - BALL_RADIUS;
            if self.pos[k] < lo {
                self.pos[k] = lo;
                self.vel[k] = 0.0;
            } else if self.pos[k] > hi {
                self.pos[k] = hi;
                self.vel[k] = 0.0;
            }
        }
    }

    fn slide(&mut self, arena: &Rect) {
        self.pos[0] += self.vel[0];
        self.pos[1] += self.vel[1];
        self.vel[0] *= VELOCITY_DECAY;
        self.vel[1] *= VELOCITY_DECAY;
        self.keep_inside(arena);
    }

    fn push_from(&mut self, effector: Point, arena: &Rect) {
        let d = [self.pos[0] - effector[0], self.pos[1] - effector[1]];
        let gap = (d[0] * d[0] + d[1] * d[1]).sqrt();
        let depth = BALL_RADIUS + EFFECTOR_RADIUS - gap;
        if depth <= 0.0 {
            return;
        }
        let normal = if gap > 0.0 {
            [d[0] / gap, d[1] / gap]
        } else {
            [1.0, 0.0]
        };
        let push = [normal[0] * depth, normal[1] * depth];
        self.pos[0] += push[0];
        self.pos[1] += push[1];
        self.vel[0] += push[0];
        self.vel[1] += push[1];
        self.keep_inside(arena);
    }
}

pub(crate) fn simulate(spec: &EnvSpec, params: &ParameterVector) -> Point {
    let g = &spec.geometry;
    let arena = g.behavior_bounds;
    let links = &g.links;
    let reach = links[0] + links[1];
    let start = g.joints_or_zero(2);
    let mut q = [start[0], start[1]];
    let mut qd = [0.0, 0.0];
    let mut ball = Ball {
        pos: g.start.ball.expect("validated"),
        vel: [0.0, 0.0],
    };
    let mut controller = Controller::new(&spec.controller, params.as_slice());
    for _ in 0..g.timesteps {
        let obs = [
            ball.pos[0],
            ball.pos[1],
            wrap_angle(q[0]),
            wrap_angle(q[1]),
            qd[0] / MAX_JOINT_SPEED,
            qd[1] / MAX_JOINT_SPEED,
        ];
        let out = controller.act(&obs);
        qd = [out[0] * MAX_JOINT_SPEED, out[1] * MAX_JOINT_SPEED];

        ball.slide(&arena);

        // Bound on how far the effector can travel this step.
        let sweep = qd[0].abs() * reach + qd[1].abs() * links[1];
        let from = tip(links, q);
        let near = super::dist(from, ball.pos) <= sweep + BALL_RADIUS + EFFECTOR_RADIUS;
        if near {
            let substeps = ((sweep / CONTACT_STEP).ceil() as usize).max(1);
            for i in 1..=substeps {
                let f = i as f64 / substeps as f64;
                let qi = [q[0] + f * qd[0], q[1] + f * qd[1]];
                ball.push_from(tip(links, qi), &arena);
            }
        }
        q = [q[0] + qd[0], q[1] + qd[1]];
    }
    ball.pos
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::EnvKind;

    #[test]
    fn zero_policy_leaves_ball() {
        let spec = EnvSpec::builtin(EnvKind::Curling);
        let p = ParameterVector::zeros(spec.controller.param_count());
        assert_eq!(simulate(&spec, &p), spec.geometry.start.ball.unwrap());
    }

    #[test]
    fn angle_wrapping() {
        assert!((wrap_angle(3.0 * PI) - -PI).abs() < 1e-12);
        assert!((wrap_angle(0.5) - 0.5).abs() < 1e-12);
        assert!((wrap_angle(-0.5 - 2.0 * PI) + 0.5).abs() < 1e-12);
    }

    #[test]
    fn push_separates_discs() {
        let arena = Rect::new([-1.0, -1.0], [1.0, 1.0]);
        let mut ball = Ball {
            pos: [0.05, 0.0],
            vel: [0.0, 0.0],
        };
        ball.push_from([0.0, 0.0], &arena);
        assert!((ball.pos[0] - 0.1).abs() < 1e-12);
        assert!((ball.vel[0] - 0.05).abs() < 1e-12);
        // sliding decays geometrically
        ball.vel = [0.01, 0.0];
        for _ in 0..1000 {
            ball.slide(&arena);
        }
        assert!((ball.pos[0] - (0.1 + 0.01 / (1.0 - VELOCITY_DECAY))).abs() < 1e-9);
        // and stops dead against a wall
        ball.vel = [0.0, 0.5];
        for _ in 0..1000 {
            ball.slide(&arena);
        }
        assert_eq!(ball.pos[1], 1.0 - BALL_RADIUS);
        assert_eq!(ball.vel, [0.0, 0.0]);
    }
}
