//! Differential-drive robot in a walled maze.

use std::f64::consts::FRAC_PI_4;

use super::{EnvSpec, Point};
use crate::policy::{Controller, ParameterVector};

/// Sensor directions relative to the heading.
pub(crate) const SENSOR_ANGLES: [f64; 5] = [-2.0 * FRAC_PI_4, -FRAC_PI_4, 0.0, FRAC_PI_4, 2.0 * FRAC_PI_4];
const SENSOR_RANGE: f64 = 0.5;
/// Wheel speed at full command, in arena units per step.
const WHEEL_SPEED: f64 = 0.01;
pub(crate) const ROBOT_RADIUS: f64 = 0.02;
const WHEEL_BASE: f64 = 2.0 * ROBOT_RADIUS;

#[inline]
fn cross(a: Point, b: Point) -> f64 {
    a[0] * b[1] - a[1] * b[0]
}

#[inline]
fn sub(a: Point, b: Point) -> Point {
    [a[0] - b[0], a[1] - b[1]]
}

/// Distance from `p` to the segment `[a, b]`.
pub fn segment_distance(p: Point, a: Point, b: Point) -> f64 {
    let ab = sub(b, a);
    let ap = sub(p, a);
    let len2 = ab[0] * ab[0] + ab[1] * ab[1];
    let t = if len2 > 0.0 {
        ((ap[0] * ab[0] + ap[1] * ab[1]) / len2).clamp(0.0, 1.0)
    } else {
        0.0
    };
    let q = [a[0] + t * ab[0], a[1] + t * ab[1]];
    super::dist(p, q)
}

/// Whether the closed segments `[p, q]` and `[a, b]` share a point.
pub fn segments_intersect(p: Point, q: Point, a: Point, b: Point) -> bool {
    let d1 = cross(sub(b, a), sub(p, a));
    let d2 = cross(sub(b, a), sub(q, a));
    let d3 = cross(sub(q, p), sub(a, p));
    let d4 = cross(sub(q, p), sub(b, p));
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0))
        && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0))
    {
        return true;
    }
    let on = |s: Point, e: Point, x: Point, d: f64| {
        d == 0.0
            && x[0] >= s[0].min(e[0])
            && x[0] <= s[0].max(e[0])
            && x[1] >= s[1].min(e[1])
            && x[1] <= s[1].max(e[1])
    };
    on(a, b, p, d1) || on(a, b, q, d2) || on(p, q, a, d3) || on(p, q, b, d4)
}

/// Distance along the ray `origin + t * dir` (unit `dir`) to the nearest
/// wall, capped at `range`.
fn cast(origin: Point, dir: Point, walls: &[[f64; 4]], range: f64) -> f64 {
    let mut best = range;
    for w in walls {
        let e = [w[2] - w[0], w[3] - w[1]];
        let denom = cross(dir, e);
        if denom == 0.0 {
            continue;
        }
        let ao = [w[0] - origin[0], w[1] - origin[1]];
        // compare numerators against the denominator and divide once
        let (tn, sn, d) = if denom > 0.0 {
            (cross(ao, e), cross(ao, dir), denom)
        } else {
            (-cross(ao, e), -cross(ao, dir), -denom)
        };
        if tn >= 0.0 && tn < best * d && sn >= 0.0 && sn <= d {
            best = best.min(tn / d);
        }
    }
    best
}

fn segment_distance2(p: Point, a: Point, b: Point) -> f64 {
    let ab = sub(b, a);
    let ap = sub(p, a);
    let len2 = ab[0] * ab[0] + ab[1] * ab[1];
    let t = if len2 > 0.0 {
        ((ap[0] * ab[0] + ap[1] * ab[1]) / len2).clamp(0.0, 1.0)
    } else {
        0.0
    };
    let d = [p[0] - a[0] - t * ab[0], p[1] - a[1] - t * ab[1]];
    d[0] * d[0] + d[1] * d[1]
}

/// Whether the robot may move its center from `from` to `to`.
fn move_allowed(from: Point, to: Point, walls: &[[f64; 4]]) -> bool {
    walls.iter().all(|w| {
        let (a, b) = ([w[0], w[1]], [w[2], w[3]]);
        segment_distance2(to, a, b) >= ROBOT_RADIUS * ROBOT_RADIUS && !segments_intersect(from, to, a, b)
    })
}

/// Robot state after each step; exposed for collision tests.
pub(crate) fn trajectory(
    spec: &EnvSpec,
    params: &ParameterVector,
    mut visit: impl FnMut(Point, Point),
) -> Point {
    let g = &spec.geometry;
    let walls = &g.walls;
    let mut pos = g.start.position.expect("validated");
    let mut heading = g.start.heading.expect("validated");
    let mut controller = Controller::new(&spec.controller, params.as_slice());
    let mut obs = [0.0; SENSOR_ANGLES.len()];
    let offsets = SENSOR_ANGLES.map(|a| a.sin_cos());
    let (mut hs, mut hc) = heading.sin_cos();
    for _ in 0..g.timesteps {
        // sensor directions are the heading rotated by fixed offsets
        for (o, (s, c)) in obs.iter_mut().zip(offsets) {
            let dir = [hc * c - hs * s, hs * c + hc * s];
            *o = cast(pos, dir, walls, SENSOR_RANGE) / SENSOR_RANGE;
        }
        let out = controller.act(&obs);
        let (left, right) = (out[0] * WHEEL_SPEED, out[1] * WHEEL_SPEED);
        let speed = 0.5 * (left + right);
        let new_heading = heading + (right - left) / WHEEL_BASE;
        let (s, c) = if new_heading == heading { (hs, hc) } else { new_heading.sin_cos() };
        let target = [pos[0] + speed * c, pos[1] + speed * s];
        let new_pos = if move_allowed(pos, target, walls) {
            target
        } else {
            pos
        };
        visit(pos, new_pos);
        // The controller is reactive, so an unchanged state repeats forever.
        if new_pos == pos && new_heading == heading {
            break;
        }
        pos = new_pos;
        heading = new_heading;
        (hs, hc) = (s, c);
    }
    pos
}

pub(crate) fn simulate(spec: &EnvSpec, params: &ParameterVector) -> Point {
    trajectory(spec, params, |_, _| {})
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::EnvKind;
    use crate::policy::sample_initial;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn segment_intersection_cases() {
        assert!(segments_intersect([0.0, 0.0], [1.0, 1.0], [0.0, 1.0], [1.0, 0.0]));
        assert!(!segments_intersect([0.0, 0.0], [0.4, 0.4], [0.0, 1.0], [1.0, 0.0]));
        // touching endpoint
        assert!(segments_intersect([0.0, 0.0], [0.5, 0.5], [0.0, 1.0], [1.0, 0.0]));
        // collinear disjoint
        assert!(!segments_intersect([0.0, 0.0], [1.0, 0.0], [2.0, 0.0], [3.0, 0.0]));
    }

    #[test]
    fn ray_cast_hits_nearest_wall() {
        let walls = [[1.0, -1.0, 1.0, 1.0], [0.3, -1.0, 0.3, 1.0]];
        assert!((cast([0.0, 0.0], [1.0, 0.0], &walls, 5.0) - 0.3).abs() < 1e-12);
        assert_eq!(cast([0.0, 0.0], [-1.0, 0.0], &walls, 5.0), 5.0);
        assert_eq!(cast([0.0, 0.0], [1.0, 0.0], &walls, 0.1), 0.1);
    }

    #[test]
    fn robot_center_never_crosses_a_wall() {
        let spec = EnvSpec::builtin(EnvKind::Hardmaze);
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let walls = spec.geometry.walls.clone();
        for _ in 0..40 {
            let p = sample_initial(&spec.controller, &mut rng);
            trajectory(&spec, &p, |from, to| {
                for w in &walls {
                    let (a, b) = ([w[0], w[1]], [w[2], w[3]]);
                    assert!(!segments_intersect(from, to, a, b));
                    assert!(segment_distance(to, a, b) >= ROBOT_RADIUS);
                }
            });
        }
    }
}
