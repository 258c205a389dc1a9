//! Ground-truth trajectories and the shared extrapolation primitive.
//!
//! Every state produced here is analytically exact: velocity and acceleration
//! are the derivatives of the position law, and the heading is the direction
//! of horizontal travel with its exact rate of turn.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::vec3::Vec3;

/// Kinematic snapshot of one entity.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct EntityState<T> {
    pub position: Vec3<T>,
    pub velocity: Vec3<T>,
    pub acceleration: Vec3<T>,
    /// Heading in radians, kept in `[-pi, pi)`.
    pub orientation: T,
    pub angular_rate: T,
    /// Simulation clock, seconds.
    pub time: T,
}

impl<T: Real> EntityState<T> {
    /// A state at rest at the origin.
    pub fn at_rest(time: T) -> Self {
        Self {
            position: Vec3::zero(),
            velocity: Vec3::zero(),
            acceleration: Vec3::zero(),
            orientation: T::zero(),
            angular_rate: T::zero(),
            time,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.position.is_finite()
            && self.velocity.is_finite()
            && self.acceleration.is_finite()
            && self.orientation.is_finite()
            && self.angular_rate.is_finite()
            && self.time.is_finite())
        {
            return Err(Error::validation(format!("non-finite entity state at t={}", self.time)));
        }
        if self.time < T::zero() {
            return Err(Error::validation(format!("negative state time {}", self.time)));
        }
        if self.orientation < -T::PI() || self.orientation >= T::PI() {
            return Err(Error::validation(format!(
                "orientation {} not normalized into [-pi, pi)",
                self.orientation
            )));
        }
        Ok(())
    }
}

/// Wraps an angle into `[-pi, pi)`. In-range inputs are returned untouched.
pub fn normalize_angle<T: Real>(theta: T) -> T {
    let pi = T::PI();
    if theta >= -pi && theta < pi {
        return theta;
    }
    let two_pi = pi + pi;
    let mut wrapped = theta - two_pi * ((theta + pi) / two_pi).floor();
    if wrapped >= pi {
        wrapped = wrapped - two_pi;
    }
    if wrapped < -pi {
        wrapped = wrapped + two_pi;
    }
    wrapped
}

/// Signed shortest angular difference `a - b`, wrapped into `[-pi, pi)`.
pub fn angle_diff<T: Real>(a: T, b: T) -> T {
    normalize_angle(a - b)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Order {
    First,
    Second,
}

/// Polynomial dead-reckoning extrapolation of `base` to time `t`.
///
/// First order moves position along the velocity only; second order adds the
/// `1/2 * A * dt^2` term and advances velocity. Heading always advances at the
/// constant angular rate.
pub fn extrapolate<T: Real>(base: &EntityState<T>, t: T, order: Order) -> Result<EntityState<T>> {
    base.validate()?;
    if !t.is_finite() || t < base.time {
        return Err(Error::range(format!(
            "extrapolation target t={} precedes base time {}",
            t, base.time
        )));
    }
    let dt = t - base.time;
    let (position, velocity) = match order {
        Order::First => (base.position + base.velocity * dt, base.velocity),
        Order::Second => (
            base.position + base.velocity * dt + base.acceleration * (T::lit(0.5) * dt * dt),
            base.velocity + base.acceleration * dt,
        ),
    };
    Ok(EntityState {
        position,
        velocity,
        acceleration: base.acceleration,
        orientation: normalize_angle(base.orientation + base.angular_rate * dt),
        angular_rate: base.angular_rate,
        time: t,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct Waypoint<T> {
    pub t: T,
    pub position: Vec3<T>,
}

/// Position law of a trajectory.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", bound = "T: Real")]
pub enum Motion<T> {
    ConstantVelocity {
        position: Vec3<T>,
        velocity: Vec3<T>,
    },
    ConstantAcceleration {
        position: Vec3<T>,
        velocity: Vec3<T>,
        acceleration: Vec3<T>,
    },
    /// `p(t) = position + velocity*t + amplitude * sin(omega*t + phase)`.
    SinusoidWeave {
        position: Vec3<T>,
        velocity: Vec3<T>,
        amplitude: Vec3<T>,
        omega: T,
        #[serde(default)]
        phase: T,
    },
    /// Horizontal circle around `center`, counter-clockwise for `omega > 0`.
    Circular {
        center: Vec3<T>,
        radius: T,
        omega: T,
        #[serde(default)]
        phase: T,
    },
    /// Cubic Hermite spline through timed waypoints (Catmull-Rom tangents).
    WaypointScript { waypoints: Vec<Waypoint<T>> },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct Trajectory<T> {
    #[serde(flatten)]
    pub motion: Motion<T>,
    pub duration: T,
    pub tick: T,
}

impl<T: Real> Trajectory<T> {
    pub fn new(motion: Motion<T>, duration: T, tick: T) -> Result<Self> {
        let traj = Self { motion, duration, tick };
        traj.validate()?;
        Ok(traj)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tick.is_finite() && self.tick > T::zero()) {
            return Err(Error::validation(format!("tick must be > 0, got {}", self.tick)));
        }
        if !(self.duration.is_finite() && self.duration >= self.tick) {
            return Err(Error::validation(format!(
                "duration {} must be finite and >= tick {}",
                self.duration, self.tick
            )));
        }
        let finite = |v: Vec3<T>| v.is_finite();
        let ok = match &self.motion {
            Motion::ConstantVelocity { position, velocity } => finite(*position) && finite(*velocity),
            Motion::ConstantAcceleration { position, velocity, acceleration } => {
                finite(*position) && finite(*velocity) && finite(*acceleration)
            }
            Motion::SinusoidWeave { position, velocity, amplitude, omega, phase } => {
                finite(*position) && finite(*velocity) && finite(*amplitude) && omega.is_finite() && phase.is_finite()
            }
            Motion::Circular { center, radius, omega, phase } => {
                if *radius < T::zero() {
                    return Err(Error::validation("circular radius must be >= 0"));
                }
                finite(*center) && radius.is_finite() && omega.is_finite() && phase.is_finite()
            }
            Motion::WaypointScript { waypoints } => {
                if waypoints.len() < 2 {
                    return Err(Error::validation("waypoint script needs at least two waypoints"));
                }
                if waypoints[0].t != T::zero() {
                    return Err(Error::validation("first waypoint must be at t = 0"));
                }
                if waypoints.windows(2).any(|w| !(w[1].t > w[0].t)) {
                    return Err(Error::validation("waypoint times must strictly increase"));
                }
                if waypoints[waypoints.len() - 1].t < self.duration {
                    return Err(Error::validation("waypoint script ends before the trajectory duration"));
                }
                waypoints.iter().all(|w| w.t.is_finite() && finite(w.position))
            }
        };
        if !ok {
            return Err(Error::validation("trajectory parameters must be finite"));
        }
        Ok(())
    }

    /// Number of whole ticks in the run; sample times are `i * tick` for `i in 0..=ticks()`.
    pub fn ticks(&self) -> usize {
        let n = (self.duration / self.tick).to_f64().unwrap_or(0.0);
        (n + 1e-9).floor() as usize
    }

    pub fn tick_time(&self, i: usize) -> T {
        T::from_count(i) * self.tick
    }

    /// Exact state at time `t`.
    pub fn sample_truth(&self, t: T) -> Result<EntityState<T>> {
        // Allow for rounding in `i * tick` landing a hair past the end.
        let slack = self.tick * T::lit(1e-9);
        if !t.is_finite() || t < T::zero() || t > self.duration + slack {
            return Err(Error::range(format!("t={} outside [0, {}]", t, self.duration)));
        }
        let (position, velocity, acceleration) = self.motion.evaluate(t);
        let (orientation, angular_rate) = heading(velocity, acceleration);
        Ok(EntityState { position, velocity, acceleration, orientation, angular_rate, time: t })
    }

    /// Upper bound on `|A(t)|` over the whole trajectory.
    pub fn max_acceleration(&self) -> T {
        match &self.motion {
            Motion::ConstantVelocity { .. } => T::zero(),
            Motion::ConstantAcceleration { acceleration, .. } => acceleration.norm(),
            Motion::SinusoidWeave { amplitude, omega, .. } => amplitude.norm() * *omega * *omega,
            Motion::Circular { radius, omega, .. } => *radius * *omega * *omega,
            Motion::WaypointScript { waypoints } => {
                let tangents = catmull_rom_tangents(waypoints);
                let mut best = T::zero();
                for k in 0..waypoints.len() - 1 {
                    for s in [T::zero(), T::one()] {
                        let (_, _, a) = hermite(waypoints, &tangents, k, s);
                        best = best.max(a.norm());
                    }
                }
                best
            }
        }
    }

    /// Upper bound on `|A(t) - A(s)|` for any two instants of the trajectory.
    pub fn max_acceleration_variation(&self) -> T {
        match &self.motion {
            Motion::ConstantVelocity { .. } | Motion::ConstantAcceleration { .. } => T::zero(),
            _ => T::lit(2.0) * self.max_acceleration(),
        }
    }

    /// Bound on `|A_truth - A_model|` for the given extrapolation order: a
    /// first-order model assumes zero acceleration, a second-order model holds
    /// the acceleration of the last update.
    pub fn acceleration_bound(&self, order: Order) -> T {
        match order {
            Order::First => self.max_acceleration(),
            Order::Second => self.max_acceleration_variation(),
        }
    }
}

impl<T: Real> Motion<T> {
    fn evaluate(&self, t: T) -> (Vec3<T>, Vec3<T>, Vec3<T>) {
        match self {
            Motion::ConstantVelocity { position, velocity } => {
                (*position + *velocity * t, *velocity, Vec3::zero())
            }
            Motion::ConstantAcceleration { position, velocity, acceleration } => (
                *position + *velocity * t + *acceleration * (T::lit(0.5) * t * t),
                *velocity + *acceleration * t,
                *acceleration,
            ),
            Motion::SinusoidWeave { position, velocity, amplitude, omega, phase } => {
                let arg = *omega * t + *phase;
                let (s, c) = arg.sin_cos();
                (
                    *position + *velocity * t + *amplitude * s,
                    *velocity + *amplitude * (*omega * c),
                    *amplitude * (-*omega * *omega * s),
                )
            }
            Motion::Circular { center, radius, omega, phase } => {
                let arg = *omega * t + *phase;
                let (s, c) = arg.sin_cos();
                let w = *omega;
                (
                    *center + Vec3::new(*radius * c, *radius * s, T::zero()),
                    Vec3::new(-*radius * w * s, *radius * w * c, T::zero()),
                    Vec3::new(-*radius * w * w * c, -*radius * w * w * s, T::zero()),
                )
            }
            Motion::WaypointScript { waypoints } => {
                let tangents = catmull_rom_tangents(waypoints);
                let last = waypoints.len() - 2;
                let k = waypoints[..waypoints.len() - 1]
                    .iter()
                    .rposition(|w| w.t <= t)
                    .unwrap_or(0)
                    .min(last);
                let h = waypoints[k + 1].t - waypoints[k].t;
                let s = (t - waypoints[k].t) / h;
                hermite(waypoints, &tangents, k, s)
            }
        }
    }
}

/// Heading of horizontal travel and its exact time derivative.
fn heading<T: Real>(v: Vec3<T>, a: Vec3<T>) -> (T, T) {
    let speed2 = v.x * v.x + v.y * v.y;
    if speed2 <= T::epsilon() {
        return (T::zero(), T::zero());
    }
    let theta = normalize_angle(v.y.atan2(v.x));
    let rate = (v.x * a.y - v.y * a.x) / speed2;
    (theta, rate)
}

fn catmull_rom_tangents<T: Real>(wps: &[Waypoint<T>]) -> Vec<Vec3<T>> {
    let n = wps.len();
    (0..n)
        .map(|k| {
            let (lo, hi) = (k.saturating_sub(1), (k + 1).min(n - 1));
            (wps[hi].position - wps[lo].position) * (T::one() / (wps[hi].t - wps[lo].t))
        })
        .collect()
}

/// Position, velocity and acceleration on segment `k` at local parameter `s`.
fn hermite<T: Real>(
    wps: &[Waypoint<T>],
    tangents: &[Vec3<T>],
    k: usize,
    s: T,
) -> (Vec3<T>, Vec3<T>, Vec3<T>) {
    let l = T::lit;
    let h = wps[k + 1].t - wps[k].t;
    let (p0, p1) = (wps[k].position, wps[k + 1].position);
    let (m0, m1) = (tangents[k] * h, tangents[k + 1] * h);
    let (s2, s3) = (s * s, s * s * s);

    let pos = p0 * (l(2.0) * s3 - l(3.0) * s2 + l(1.0))
        + m0 * (s3 - l(2.0) * s2 + s)
        + p1 * (l(-2.0) * s3 + l(3.0) * s2)
        + m1 * (s3 - s2);
    let vel = (p0 * (l(6.0) * s2 - l(6.0) * s)
        + m0 * (l(3.0) * s2 - l(4.0) * s + l(1.0))
        + p1 * (l(-6.0) * s2 + l(6.0) * s)
        + m1 * (l(3.0) * s2 - l(2.0) * s))
        * (T::one() / h);
    let acc = (p0 * (l(12.0) * s - l(6.0))
        + m0 * (l(6.0) * s - l(4.0))
        + p1 * (l(-12.0) * s + l(6.0))
        + m1 * (l(6.0) * s - l(2.0)))
        * (T::one() / (h * h));
    (pos, vel, acc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn v(x: f64, y: f64, z: f64) -> Vec3<f64> {
        Vec3::new(x, y, z)
    }

    fn state(p: f64, vel: f64, acc: f64, t: f64) -> EntityState<f64> {
        EntityState {
            position: v(p, 0.0, 0.0),
            velocity: v(vel, 0.0, 0.0),
            acceleration: v(acc, 0.0, 0.0),
            orientation: 0.0,
            angular_rate: 0.0,
            time: t,
        }
    }

    #[test]
    fn constant_velocity_truth() {
        let traj = Trajectory::new(
            Motion::ConstantVelocity { position: Vec3::zero(), velocity: v(1.0, 0.0, 0.0) },
            10.0,
            0.1,
        )
        .unwrap();
        let s = traj.sample_truth(3.0).unwrap();
        assert_eq!(s.position, v(3.0, 0.0, 0.0));
        assert_eq!(s.time, 3.0);
    }

    #[test]
    fn initial_state_at_zero() {
        let traj = Trajectory::new(
            Motion::ConstantAcceleration {
                position: v(1.0, 2.0, 3.0),
                velocity: v(4.0, 5.0, 6.0),
                acceleration: v(0.5, 0.0, -1.0),
            },
            5.0,
            0.1,
        )
        .unwrap();
        let s = traj.sample_truth(0.0).unwrap();
        assert_eq!(s.position, v(1.0, 2.0, 3.0));
        assert_eq!(s.velocity, v(4.0, 5.0, 6.0));
        assert_eq!(s.acceleration, v(0.5, 0.0, -1.0));
    }

    #[test]
    fn sinusoid_peak() {
        let traj = Trajectory::new(
            Motion::SinusoidWeave {
                position: Vec3::zero(),
                velocity: Vec3::zero(),
                amplitude: v(1.0, 0.0, 0.0),
                omega: 1.0,
                phase: 0.0,
            },
            10.0,
            0.1,
        )
        .unwrap();
        let s = traj.sample_truth(PI / 2.0).unwrap();
        assert!((s.position.x - 1.0).abs() < 1e-15);
        assert!(s.velocity.x.abs() < 1e-15);
        assert!((s.acceleration.x + 1.0).abs() < 1e-15);
    }

    #[test]
    fn out_of_range_sample() {
        let traj = Trajectory::new(
            Motion::ConstantVelocity { position: Vec3::zero(), velocity: Vec3::zero() },
            1.0,
            0.1,
        )
        .unwrap();
        assert!(matches!(traj.sample_truth(-0.1), Err(Error::Range(_))));
        assert!(matches!(traj.sample_truth(1.5), Err(Error::Range(_))));
    }

    #[test]
    fn second_order_hand_values() {
        let s = extrapolate(&state(0.0, 2.0, 1.0, 0.0), 2.0, Order::Second).unwrap();
        assert_eq!(s.position.x, 6.0);
        assert_eq!(s.velocity.x, 4.0);
        assert_eq!(s.time, 2.0);
    }

    #[test]
    fn first_order_ignores_acceleration() {
        let s = extrapolate(&state(0.0, 2.0, 1.0, 0.0), 2.0, Order::First).unwrap();
        assert_eq!(s.position.x, 4.0);
        assert_eq!(s.velocity.x, 2.0);
    }

    #[test]
    fn zero_dt_is_identity() {
        let mut base = state(1.5, -2.0, 0.25, 7.0);
        base.orientation = 3.0;
        base.angular_rate = 0.4;
        for order in [Order::First, Order::Second] {
            assert_eq!(extrapolate(&base, 7.0, order).unwrap(), base);
        }
    }

    #[test]
    fn extrapolation_rejects_regression_and_nan() {
        let base = state(0.0, 1.0, 0.0, 5.0);
        assert!(matches!(extrapolate(&base, 4.9, Order::First), Err(Error::Range(_))));
        let mut bad = base;
        bad.velocity.y = f64::NAN;
        assert!(matches!(extrapolate(&bad, 6.0, Order::First), Err(Error::Validation(_))));
    }

    #[test]
    fn angle_wrapping() {
        assert_eq!(normalize_angle(PI), -PI);
        assert_eq!(normalize_angle(-PI), -PI);
        assert!((normalize_angle(3.0 * PI + 0.5) - (-PI + 0.5)).abs() < 1e-12);
        assert!((angle_diff(3.1, -3.1) - (6.2 - 2.0 * PI)).abs() < 1e-12);
        // in-range values come back bit-identical
        let x = PI - 1e-15;
        assert_eq!(normalize_angle(x), x);
    }

    #[test]
    fn heading_tracks_circular_motion() {
        let traj = Trajectory::new(
            Motion::Circular { center: Vec3::zero(), radius: 10.0, omega: 0.2, phase: 0.0 },
            30.0,
            0.1,
        )
        .unwrap();
        let s = traj.sample_truth(0.0).unwrap();
        assert!((s.orientation - PI / 2.0).abs() < 1e-12);
        assert!((s.angular_rate - 0.2).abs() < 1e-12);
        assert!((traj.max_acceleration() - 0.4).abs() < 1e-12);
    }

    #[test]
    fn waypoint_derivatives_match_finite_differences() {
        let traj = Trajectory::new(
            Motion::WaypointScript {
                waypoints: vec![
                    Waypoint { t: 0.0, position: v(0.0, 0.0, 0.0) },
                    Waypoint { t: 4.0, position: v(20.0, 5.0, 0.0) },
                    Waypoint { t: 9.0, position: v(30.0, 25.0, 2.0) },
                    Waypoint { t: 15.0, position: v(10.0, 40.0, 2.0) },
                ],
            },
            15.0,
            0.1,
        )
        .unwrap();
        let h = 1e-5;
        for &t in &[0.7, 3.3, 5.0, 8.2, 12.9] {
            let s = traj.sample_truth(t).unwrap();
            let (a, b) = (traj.sample_truth(t - h).unwrap(), traj.sample_truth(t + h).unwrap());
            let fd_v = (b.position - a.position) * (0.5 / h);
            let fd_a = (b.velocity - a.velocity) * (0.5 / h);
            assert!((fd_v - s.velocity).norm() < 1e-6, "velocity at {t}");
            assert!((fd_a - s.acceleration).norm() < 1e-5, "acceleration at {t}");
        }
        // passes through every waypoint
        let s = traj.sample_truth(9.0).unwrap();
        assert!((s.position - v(30.0, 25.0, 2.0)).norm() < 1e-12);
        let a = traj.max_acceleration();
        for i in 0..=150 {
            assert!(traj.sample_truth(i as f64 * 0.1).unwrap().acceleration.norm() <= a + 1e-12);
        }
    }

    #[test]
    fn generic_over_f32() {
        let base = EntityState::<f32> {
            position: Vec3::zero(),
            velocity: Vec3::new(2.0, 0.0, 0.0),
            acceleration: Vec3::new(1.0, 0.0, 0.0),
            orientation: 0.0,
            angular_rate: 0.0,
            time: 0.0,
        };
        let s = extrapolate(&base, 2.0f32, Order::Second).unwrap();
        assert_eq!(s.position.x, 6.0f32);
    }

    #[test]
    fn trajectory_validation() {
        let bad = Trajectory::new(
            Motion::ConstantVelocity { position: Vec3::<f64>::zero(), velocity: Vec3::zero() },
            0.05,
            0.1,
        );
        assert!(matches!(bad, Err(Error::Validation(_))));
        let bad = Trajectory::new(
            Motion::WaypointScript { waypoints: vec![Waypoint { t: 0.0, position: Vec3::<f64>::zero() }] },
            1.0,
            0.1,
        );
        assert!(bad.is_err());
    }
}
