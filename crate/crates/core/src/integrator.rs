//! Fixed-step RK4 integration with bisection-localized wall contacts at the
//! critical angles.
//!
//! With collisions on, the ball lives in `[θ_min, θ_max]`. Reaching either
//! bound reflects the angular velocity (`θ̇ → −e·θ̇`), which for two equal
//! balls moving mirror-symmetrically is exactly the elastic velocity
//! exchange. A ball that arrives at a bound with negligible speed while the
//! effective gravity presses it into its partner is held in contact until
//! the contact force changes sign.

use serde::{Deserialize, Serialize};

use crate::drive::DriveSchedule;
use crate::dynamics::{Dynamics, Model, State};
use crate::error::{Error, Result};
use crate::params::{CriticalAngles, PendulumParams};

pub const DEFAULT_STEP: f64 = 1e-3;
pub const DEFAULT_EVENT_TOL: f64 = 1e-10;
pub const DEFAULT_REST_SPEED: f64 = 1e-6;
pub const MAX_BISECTIONS: u32 = 64;
/// Upper bound on contact events inside one step before giving up.
const MAX_EVENTS_PER_STEP: usize = 10_000;

fn default_step() -> f64 {
    DEFAULT_STEP
}
fn default_duration() -> f64 {
    300.0
}
fn default_restitution() -> f64 {
    1.0
}
fn default_event_tol() -> f64 {
    DEFAULT_EVENT_TOL
}
fn default_rest_speed() -> f64 {
    DEFAULT_REST_SPEED
}

/// Integration settings for one trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    /// Time step (s).
    #[serde(default = "default_step")]
    pub h: f64,
    /// Total simulated time (s).
    #[serde(rename = "T", default = "default_duration")]
    pub duration: f64,
    pub theta0: f64,
    #[serde(rename = "thetadot0", default)]
    pub theta_dot0: f64,
    /// Enforce the contact walls at the critical angles.
    #[serde(default)]
    pub collisions: bool,
    /// Coefficient of restitution.
    #[serde(rename = "e", default = "default_restitution")]
    pub restitution: f64,
    #[serde(default)]
    pub model: Model,
    /// Angular localization tolerance of contact events (rad).
    #[serde(default = "default_event_tol")]
    pub event_tol: f64,
    /// Post-impact speed (rad/s) below which a ball pressed into its
    /// partner stays in contact.
    #[serde(default = "default_rest_speed")]
    pub rest_speed: f64,
}

impl SimConfig {
    pub fn new(h: f64, duration: f64, theta0: f64, theta_dot0: f64) -> Self {
        Self {
            h,
            duration,
            theta0,
            theta_dot0,
            collisions: false,
            restitution: 1.0,
            model: Model::Full,
            event_tol: DEFAULT_EVENT_TOL,
            rest_speed: DEFAULT_REST_SPEED,
        }
    }

    pub fn with_collisions(mut self, on: bool) -> Self {
        self.collisions = on;
        self
    }

    pub fn with_restitution(mut self, e: f64) -> Self {
        self.restitution = e;
        self
    }

    pub fn with_model(mut self, model: Model) -> Self {
        self.model = model;
        self
    }

    /// Number of fixed steps covering `[0, T]`.
    pub fn steps(&self) -> usize {
        (self.duration / self.h).round().max(1.0) as usize
    }

    pub fn validate(&self, p: &PendulumParams) -> Result<()> {
        if !(self.h.is_finite() && self.h > 0.0) {
            return Err(Error::invalid("h", format!("must be > 0, got {}", self.h)));
        }
        if !(self.duration.is_finite() && self.duration > 0.0) {
            return Err(Error::invalid("T", format!("must be > 0, got {}", self.duration)));
        }
        if !(self.restitution > 0.0 && self.restitution <= 1.0) {
            return Err(Error::invalid("e", format!("must lie in (0, 1], got {}", self.restitution)));
        }
        if !(self.event_tol.is_finite() && self.event_tol > 0.0) {
            return Err(Error::invalid("event_tol", format!("must be > 0, got {}", self.event_tol)));
        }
        if !(self.rest_speed.is_finite() && self.rest_speed >= 0.0) {
            return Err(Error::invalid("rest_speed", format!("must be >= 0, got {}", self.rest_speed)));
        }
        if !self.theta0.is_finite() || !self.theta_dot0.is_finite() {
            return Err(Error::invalid("theta0", "initial state must be finite"));
        }
        if self.collisions {
            let a = p.critical_angles()?;
            if self.theta0 < a.min - self.event_tol || self.theta0 > a.max + self.event_tol {
                return Err(Error::invalid(
                    "theta0",
                    format!("{} lies outside the contact range [{}, {}]", self.theta0, a.min, a.max),
                ));
            }
        }
        Ok(())
    }
}

/// Which contact angle an event happened at.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Boundary {
    ThetaMin,
    ThetaMax,
}

impl Boundary {
    pub fn angle(&self, a: &CriticalAngles) -> f64 {
        match self {
            Boundary::ThetaMin => a.min,
            Boundary::ThetaMax => a.max,
        }
    }

    /// Signed distance from the wall, non-negative on the allowed side.
    fn clearance(&self, a: &CriticalAngles, theta: f64) -> f64 {
        match self {
            Boundary::ThetaMin => theta - a.min,
            Boundary::ThetaMax => a.max - theta,
        }
    }

    /// True when an acceleration presses the ball into this wall.
    fn pressed_by(&self, acceleration: f64) -> bool {
        match self {
            Boundary::ThetaMin => acceleration <= 0.0,
            Boundary::ThetaMax => acceleration >= 0.0,
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            Boundary::ThetaMin => "theta_min",
            Boundary::ThetaMax => "theta_max",
        }
    }
}

impl std::fmt::Display for Boundary {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// An impulsive contact between the two balls.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CollisionEvent {
    pub t: f64,
    pub boundary: Boundary,
    pub v_pre: f64,
    pub v_post: f64,
}

/// Sampled motion plus the inputs that produced it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub t: Vec<f64>,
    pub theta: Vec<f64>,
    pub theta_dot: Vec<f64>,
    pub events: Vec<CollisionEvent>,
    pub params: PendulumParams,
    pub drive: DriveSchedule,
    pub config: SimConfig,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    pub fn state(&self, i: usize) -> State {
        State::new(self.theta[i], self.theta_dot[i], self.t[i])
    }

    pub fn states(&self) -> impl Iterator<Item = State> + '_ {
        (0..self.len()).map(|i| self.state(i))
    }

    pub fn last(&self) -> State {
        self.state(self.len() - 1)
    }

    /// Largest |θ| over samples with `t_from <= t <= t_to`.
    pub fn max_abs_theta_between(&self, t_from: f64, t_to: f64) -> f64 {
        self.t
            .iter()
            .zip(&self.theta)
            .filter(|(t, _)| **t >= t_from && **t <= t_to)
            .map(|(_, th)| th.abs())
            .fold(0.0, f64::max)
    }

    pub fn max_abs_theta(&self) -> f64 {
        self.theta.iter().fold(0.0, |m, th| m.max(th.abs()))
    }

    pub fn events_at(&self, boundary: Boundary) -> impl Iterator<Item = &CollisionEvent> {
        self.events.iter().filter(move |e| e.boundary == boundary)
    }

    fn push(&mut self, s: &State) {
        self.t.push(s.t);
        self.theta.push(s.theta);
        self.theta_dot.push(s.theta_dot);
    }
}

/// One classical fourth-order Runge–Kutta step of size `h`.
pub fn rk4_step<F>(s: &State, h: f64, rhs: F) -> Result<State>
where
    F: Fn(&State) -> (f64, f64),
{
    let half = 0.5 * h;
    let (k1x, k1v) = rhs(s);
    let (k2x, k2v) = rhs(&State::new(s.theta + half * k1x, s.theta_dot + half * k1v, s.t + half));
    let (k3x, k3v) = rhs(&State::new(s.theta + half * k2x, s.theta_dot + half * k2v, s.t + half));
    let (k4x, k4v) = rhs(&State::new(s.theta + h * k3x, s.theta_dot + h * k3v, s.t + h));
    let next = State::new(
        s.theta + h / 6.0 * (k1x + 2.0 * k2x + 2.0 * k3x + k4x),
        s.theta_dot + h / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v),
        s.t + h,
    );
    if next.is_finite() && k4v.is_finite() && k4x.is_finite() {
        Ok(next)
    } else {
        Err(Error::NonFinite { t: s.t })
    }
}

/// Post-contact angular velocity `−e·θ̇`.
///
/// Equal masses meeting with mirror velocities exchange them, which for the
/// tracked ball is a reversal.
#[inline]
pub fn collide(theta_dot_pre: f64, restitution: f64) -> f64 {
    -restitution * theta_dot_pre
}

/// Finds the state at which `θ = boundary` inside the step that went from
/// `before` to `after`, by bisecting the length of a single RK4 sub-step
/// taken from `before`.
pub fn locate_event<F>(before: &State, after: &State, boundary: f64, tol: f64, rhs: F) -> Result<State>
where
    F: Fn(&State) -> (f64, f64),
{
    // Orient so that `before` is on the non-negative side.
    let side = -(after.theta - boundary).signum();
    let dist = |s: &State| side * (s.theta - boundary);
    if dist(before) < 0.0 || dist(after) >= 0.0 {
        return Err(Error::invalid(
            "boundary",
            format!("{boundary} is not bracketed by θ = {} and θ = {}", before.theta, after.theta),
        ));
    }
    if dist(after).abs() < tol {
        return Ok(*after);
    }
    let span = after.t - before.t;
    let (mut lo, mut hi) = (0.0, span);
    for _ in 0..MAX_BISECTIONS {
        let mid = 0.5 * (lo + hi);
        let s = rk4_step(before, mid, &rhs)?;
        let d = dist(&s);
        if d.abs() < tol {
            return Ok(s);
        }
        if d > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Err(Error::NoConvergence { t: before.t + lo, iterations: MAX_BISECTIONS })
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Contact {
    Free,
    Held(Boundary),
}

/// Integrates one trajectory over `[0, T]`.
///
/// Every fixed step is sampled; contact instants inside a step are sampled
/// too, with their post-contact velocity.
pub fn simulate(p: &PendulumParams, d: &DriveSchedule, cfg: &SimConfig) -> Result<Trajectory> {
    p.validate()?;
    cfg.validate(p)?;
    let dyn_ = Dynamics::new(p, d, cfg.model);
    let rhs = |s: &State| dyn_.rhs(s);
    let walls = if cfg.collisions { Some(p.critical_angles()?) } else { None };

    let n = cfg.steps();
    let mut traj = Trajectory {
        t: Vec::with_capacity(n + 1),
        theta: Vec::with_capacity(n + 1),
        theta_dot: Vec::with_capacity(n + 1),
        events: Vec::new(),
        params: *p,
        drive: d.clone(),
        config: *cfg,
    };

    let mut state = State::new(cfg.theta0, cfg.theta_dot0, 0.0);
    let mut contact = Contact::Free;
    if let Some(a) = &walls {
        state.theta = state.theta.clamp(a.min, a.max);
        for b in [Boundary::ThetaMin, Boundary::ThetaMax] {
            if b.clearance(a, state.theta) > cfg.event_tol {
                continue;
            }
            state.theta = b.angle(a);
            // velocity pointing into the wall: impact at t = 0
            let inward = match b {
                Boundary::ThetaMin => state.theta_dot < 0.0,
                Boundary::ThetaMax => state.theta_dot > 0.0,
            };
            if inward && state.theta_dot.abs() > cfg.rest_speed {
                let v_post = collide(state.theta_dot, cfg.restitution);
                traj.events.push(CollisionEvent { t: 0.0, boundary: b, v_pre: state.theta_dot, v_post });
                state.theta_dot = v_post;
            }
            if state.theta_dot.abs() <= cfg.rest_speed && b.pressed_by(dyn_.acceleration(&state.at_rest())) {
                state.theta_dot = 0.0;
                contact = Contact::Held(b);
            }
            break;
        }
    }
    traj.push(&state);

    let switches = d.switch_times();
    for k in 1..=n {
        let t_end = k as f64 * cfg.h;
        let mut events_in_step = 0usize;
        while state.t < t_end {
            let target = switches.iter().copied().find(|&s| s > state.t && s < t_end).unwrap_or(t_end);
            match contact {
                Contact::Held(b) => {
                    let pressed = |t: f64| b.pressed_by(dyn_.acceleration(&State::new(state.theta, 0.0, t)));
                    if pressed(target) {
                        state.t = target;
                    } else {
                        state.t = release_time(state.t, target, pressed);
                        contact = Contact::Free;
                    }
                }
                Contact::Free => {
                    let mut next = rk4_step(&state, target - state.t, rhs)?;
                    next.t = target;
                    let crossed = walls.as_ref().and_then(|a| {
                        [Boundary::ThetaMin, Boundary::ThetaMax]
                            .into_iter()
                            .find(|b| b.clearance(a, next.theta) < 0.0)
                            .map(|b| (a, b))
                    });
                    let Some((a, b)) = crossed else {
                        state = next;
                        continue;
                    };
                    events_in_step += 1;
                    if events_in_step > MAX_EVENTS_PER_STEP {
                        return Err(Error::NoConvergence { t: state.t, iterations: MAX_BISECTIONS });
                    }
                    let wall = b.angle(a);
                    let mut hit = locate_event(&state, &next, wall, cfg.event_tol, rhs)?;
                    let v_pre = hit.theta_dot;
                    let v_post = collide(v_pre, cfg.restitution);
                    traj.events.push(CollisionEvent { t: hit.t, boundary: b, v_pre, v_post });
                    hit.theta = wall;
                    hit.theta_dot = v_post;
                    // A rebound whose flight time or apex is below what the event
                    // localization can resolve is a ball at rest.
                    let acc = dyn_.acceleration(&hit.at_rest());
                    let stalled = hit.t - state.t <= 1e-12 * hit.t.max(1.0);
                    let unresolved = v_post * v_post <= 2.0 * acc.abs() * cfg.event_tol;
                    if (v_post.abs() <= cfg.rest_speed || stalled || unresolved) && b.pressed_by(acc) {
                        hit.theta_dot = 0.0;
                        contact = Contact::Held(b);
                    }
                    if hit.t > *traj.t.last().unwrap() && hit.t < t_end {
                        traj.push(&hit);
                    }
                    state = hit;
                }
            }
        }
        state.t = t_end;
        traj.push(&state);
    }
    Ok(traj)
}

/// First instant in `(from, to]` at which the wall stops pressing, given
/// that it presses at `from` and not at `to`.
fn release_time(from: f64, to: f64, pressed: impl Fn(f64) -> bool) -> f64 {
    let (mut lo, mut hi) = (from, to);
    for _ in 0..MAX_BISECTIONS {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if pressed(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    hi
}

impl State {
    fn at_rest(&self) -> State {
        State::new(self.theta, 0.0, self.t)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::analytic_underdamped;
    use approx::assert_relative_eq;

    fn drift(s: &State) -> (f64, f64) {
        (s.theta_dot, 0.0)
    }

    #[test]
    fn free_drift_is_exact() {
        let s = rk4_step(&State::new(0.0, 1.0, 0.0), 0.1, drift).unwrap();
        assert_relative_eq!(s.theta, 0.1, epsilon = 1e-15);
        assert_eq!(s.theta_dot, 1.0);
        assert_relative_eq!(s.t, 0.1, epsilon = 1e-15);
    }

    #[test]
    fn non_finite_rhs_is_an_error() {
        let bad = |_: &State| (f64::NAN, 0.0);
        assert!(matches!(rk4_step(&State::new(0.0, 0.0, 2.0), 0.1, bad), Err(Error::NonFinite { t }) if t == 2.0));
    }

    #[test]
    fn one_period_matches_harmonic_solution() {
        let p = PendulumParams::new(0.8, 1.0, 0.0, 0.0, 9.8).unwrap();
        let d = DriveSchedule::stationary();
        let period = std::f64::consts::TAU / p.natural_frequency();
        let cfg = SimConfig::new(1e-3, period, 0.001, 0.0);
        let tr = simulate(&p, &d, &cfg).unwrap();
        for s in tr.states() {
            let exact = analytic_underdamped(s.t, 0.001, &p).unwrap();
            assert!((s.theta - exact).abs() < 1e-8, "t = {}: {} vs {exact}", s.t, s.theta);
        }
    }

    #[test]
    fn collide_examples() {
        assert_eq!(collide(-2.0, 1.0), 2.0);
        assert_eq!(collide(0.0, 0.7), 0.0);
        assert_relative_eq!(collide(2.0, 0.9), -1.8, epsilon = 1e-15);
    }

    #[test]
    fn locate_linear_crossing() {
        let before = State::new(0.0, 1.0, 0.0);
        let after = rk4_step(&before, 0.1, drift).unwrap();
        let hit = locate_event(&before, &after, 0.05, 1e-10, drift).unwrap();
        assert!((hit.theta - 0.05).abs() < 1e-10);
        assert!((hit.t - 0.05).abs() < 1e-10);
    }

    #[test]
    fn locate_downward_crossing_respects_tolerance() {
        let rhs = |s: &State| (s.theta_dot, -9.8 * s.theta.sin());
        let before = State::new(0.1004, -0.3, 1.0);
        let after = rk4_step(&before, 1e-3, rhs).unwrap();
        let boundary = (0.1f64).asin();
        let hit = locate_event(&before, &after, boundary, 1e-10, rhs).unwrap();
        assert!((hit.theta - boundary).abs() < 1e-10);
        assert!(hit.t > 1.0 && hit.t < after.t);
    }

    #[test]
    fn locate_requires_bracket() {
        let before = State::new(0.0, 1.0, 0.0);
        let after = rk4_step(&before, 0.1, drift).unwrap();
        assert!(locate_event(&before, &after, 0.5, 1e-10, drift).is_err());
    }

    #[test]
    fn config_validation() {
        let p = PendulumParams::new(0.8, 1.0, 0.1, 0.0, 9.8).unwrap();
        assert!(SimConfig::new(0.0, 1.0, 0.0, 0.0).validate(&p).is_err());
        assert!(SimConfig::new(1e-3, -1.0, 0.0, 0.0).validate(&p).is_err());
        assert!(SimConfig::new(1e-3, 1.0, 0.5, 0.0).with_restitution(0.0).validate(&p).is_err());
        assert!(SimConfig::new(1e-3, 1.0, 0.5, 0.0).with_restitution(1.1).validate(&p).is_err());
        // outside [θ_min, θ_max] only matters with walls
        assert!(SimConfig::new(1e-3, 1.0, 0.0, 0.0).validate(&p).is_ok());
        assert!(SimConfig::new(1e-3, 1.0, 0.0, 0.0).with_collisions(true).validate(&p).is_err());
        assert!(SimConfig::new(1e-3, 1.0, 3.1, 0.0).with_collisions(true).validate(&p).is_err());
    }

    #[test]
    fn resting_ball_stays_in_contact_under_weak_drive() {
        // A₀ω² < g: the effective gravity never reverses.
        let p = PendulumParams::new(0.8, 1.0, 0.1, 0.02, 9.8).unwrap();
        let d = DriveSchedule::single(0.2, 6.26).unwrap();
        let a = p.critical_angles().unwrap();
        let cfg = SimConfig::new(1e-3, 20.0, a.min, 0.0).with_collisions(true);
        let tr = simulate(&p, &d, &cfg).unwrap();
        assert!(tr.events.is_empty());
        assert!(tr.theta.iter().all(|&th| th == a.min));
    }

    #[test]
    fn strong_drive_lifts_ball_off_contact() {
        // A₀ω² > g at the bottom wall: contact releases each cycle.
        let p = PendulumParams::new(0.8, 1.0, 0.1, 0.0, 9.8).unwrap();
        let d = DriveSchedule::single(0.4, 6.26).unwrap();
        let a = p.critical_angles().unwrap();
        let cfg = SimConfig::new(1e-3, 30.0, a.min, 0.0).with_collisions(true);
        let tr = simulate(&p, &d, &cfg).unwrap();
        assert!(!tr.events.is_empty());
        assert!(tr.max_abs_theta() > a.min + 1e-3);
    }

    #[test]
    fn inelastic_bounces_settle_into_contact() {
        let p = PendulumParams::new(0.8, 1.0, 0.1, 0.0, 9.8).unwrap();
        let d = DriveSchedule::stationary();
        let a = p.critical_angles().unwrap();
        let cfg = SimConfig::new(1e-3, 60.0, 0.4, 0.0).with_collisions(true).with_restitution(0.5);
        let tr = simulate(&p, &d, &cfg).unwrap();
        assert!(tr.events.len() > 3);
        let last = tr.last();
        assert_eq!(last.theta, a.min);
        assert_eq!(last.theta_dot, 0.0);
        for w in tr.events.windows(2) {
            assert!(w[1].v_pre.abs() <= w[0].v_pre.abs() + 1e-9);
        }
    }

    #[test]
    fn zero_restitution_not_allowed_but_small_is() {
        let p = PendulumParams::new(0.8, 1.0, 0.1, 0.0, 9.8).unwrap();
        let cfg = SimConfig::new(1e-3, 5.0, 0.4, 0.0).with_collisions(true).with_restitution(0.05);
        let tr = simulate(&p, &DriveSchedule::stationary(), &cfg).unwrap();
        assert!(!tr.events.is_empty());
    }

    #[test]
    fn initial_impact_at_wall() {
        let p = PendulumParams::new(0.8, 1.0, 0.1, 0.0, 9.8).unwrap();
        let a = p.critical_angles().unwrap();
        let cfg = SimConfig::new(1e-3, 1.0, a.min, -1.0).with_collisions(true);
        let tr = simulate(&p, &DriveSchedule::stationary(), &cfg).unwrap();
        assert_eq!(tr.events[0].t, 0.0);
        assert_eq!(tr.events[0].v_post, 1.0);
        assert!(tr.theta[1] > a.min);
    }

    #[test]
    fn samples_fall_on_the_step_grid() {
        let p = PendulumParams::new(0.8, 1.0, 0.1, 0.0, 9.8).unwrap();
        let cfg = SimConfig::new(1e-3, 10.0, 1.0, 0.0).with_collisions(true);
        let tr = simulate(&p, &DriveSchedule::stationary(), &cfg).unwrap();
        assert!(!tr.events.is_empty());
        assert_eq!(tr.len(), 10_001 + tr.events.len());
        assert!(tr.t.windows(2).all(|w| w[1] > w[0]));
        assert_eq!(*tr.t.last().unwrap(), 10.0);
    }
}
