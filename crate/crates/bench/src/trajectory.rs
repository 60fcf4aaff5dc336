//! State trajectories `(x₁(t), x₂(t))` driving the open-loop experiments.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Repetitive path `x₁ = sin t`, `x₂ = cos t`.
pub fn case_a(t: f64) -> [f64; 2] {
    let (s, c) = t.sin_cos();
    [s, c]
}

/// Half length active at time `t` under an abrupt change at `switch_time`.
pub fn perturbed_half_length(t: f64, before: f64, after: f64, switch_time: f64) -> f64 {
    if t < switch_time {
        before
    } else {
        after
    }
}

/// Growing spiral `x₁ = (20 + t) sin t / 120` with its exact time derivative.
pub fn case_b(t: f64) -> [f64; 2] {
    let (s, c) = t.sin_cos();
    [(20.0 + t) * s / 120.0, (s + (20.0 + t) * c) / 120.0]
}

/// Closed periodic cubic B-spline with non-uniform knots, traversed at a
/// constant parameter rate. Knot intervals and control points are drawn from
/// a seeded generator, so the curve speeds up and slows down along the loop
/// and leaves some regions sparsely sampled. The curve stays inside the
/// convex hull of its control points.
#[derive(Debug, Clone, PartialEq)]
pub struct ClosedSpline {
    control_points: Vec<[f64; 2]>,
    /// `knots[i]` is the parameter where span `i` starts; `knots[0] = 0`.
    knots: Vec<f64>,
    period: f64,
    loop_time: f64,
}

impl ClosedSpline {
    pub const DEGREE: usize = 3;

    /// `count` control points in `[-extent, extent]²`, knot intervals in `[0.25, 1.75]`.
    pub fn random(seed: u64, count: usize, extent: f64, loop_time: f64) -> Self {
        assert!(
            count > Self::DEGREE,
            "need more control points than the degree"
        );
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let control_points: Vec<[f64; 2]> = (0..count)
            .map(|_| {
                [
                    rng.gen_range(-extent..=extent),
                    rng.gen_range(-extent..=extent),
                ]
            })
            .collect();
        let mut knots = Vec::with_capacity(count);
        let mut acc = 0.0;
        for _ in 0..count {
            knots.push(acc);
            acc += rng.gen_range(0.25..=1.75);
        }
        Self {
            control_points,
            knots,
            period: acc,
            loop_time,
        }
    }

    pub fn control_points(&self) -> &[[f64; 2]] {
        &self.control_points
    }

    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    pub fn loop_time(&self) -> f64 {
        self.loop_time
    }

    fn knot(&self, i: isize) -> f64 {
        let k = self.knots.len() as isize;
        let wraps = i.div_euclid(k);
        self.knots[i.rem_euclid(k) as usize] + wraps as f64 * self.period
    }

    fn point(&self, i: isize) -> [f64; 2] {
        self.control_points[i.rem_euclid(self.control_points.len() as isize) as usize]
    }

    /// Curve point at spline parameter `u` (taken modulo the period).
    pub fn eval_param(&self, u: f64) -> [f64; 2] {
        let u = u.rem_euclid(self.period);
        let span = match self.knots.iter().rposition(|&k| k <= u) {
            Some(s) => s as isize,
            None => 0,
        };
        let p = Self::DEGREE as isize;
        // de Boor on the periodic knot sequence
        let mut d: Vec<[f64; 2]> = (0..=p).map(|r| self.point(span - p + r)).collect();
        for r in 1..=p {
            for i in (r..=p).rev() {
                let lo = self.knot(span - p + i);
                let hi = self.knot(span + 1 + i - r);
                let alpha = (u - lo) / (hi - lo);
                let prev = d[(i - 1) as usize];
                let cur = &mut d[i as usize];
                cur[0] = (1.0 - alpha) * prev[0] + alpha * cur[0];
                cur[1] = (1.0 - alpha) * prev[1] + alpha * cur[1];
            }
        }
        d[p as usize]
    }

    /// Curve point at time `t`; one loop takes `loop_time` seconds.
    pub fn eval(&self, t: f64) -> [f64; 2] {
        self.eval_param(t / self.loop_time * self.period)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Trajectory {
    Sine,
    Spiral,
    Spline(ClosedSpline),
}

impl Trajectory {
    pub fn state(&self, t: f64) -> [f64; 2] {
        match self {
            Trajectory::Sine => case_a(t),
            Trajectory::Spiral => case_b(t),
            Trajectory::Spline(s) => s.eval(t),
        }
    }

    /// Sample times `period, 2·period, …` up to `duration` with their states.
    pub fn sample(&self, duration: f64, period: f64) -> Vec<(f64, [f64; 2])> {
        let steps = step_count(duration, period);
        (1..=steps)
            .map(|k| {
                let t = k as f64 * period;
                (t, self.state(t))
            })
            .collect()
    }
}

/// Number of sampling instants in `(0, duration]`.
pub fn step_count(duration: f64, period: f64) -> usize {
    (duration / period).round() as usize
}
