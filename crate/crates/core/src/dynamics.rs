//! Equations of motion of one ball on a vertically driven pivot, the
//! closed-form free decay, and the mapping onto the Mathieu form.

use serde::{Deserialize, Serialize};

use crate::drive::{DriveSchedule, DriveStage};
use crate::error::{Error, Result};
use crate::params::PendulumParams;

/// Angle from the downward vertical (rad), angular velocity (rad/s), time (s).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct State {
    pub theta: f64,
    pub theta_dot: f64,
    pub t: f64,
}

impl State {
    pub fn new(theta: f64, theta_dot: f64, t: f64) -> Self {
        Self { theta, theta_dot, t }
    }

    pub fn is_finite(&self) -> bool {
        self.theta.is_finite() && self.theta_dot.is_finite() && self.t.is_finite()
    }
}

/// Which restoring term to integrate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Model {
    /// `sin θ` restoring term.
    #[default]
    Full,
    /// `θ` restoring term (linearised, Mathieu-type).
    SmallAngle,
}

impl std::str::FromStr for Model {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "full" => Ok(Model::Full),
            "small-angle" | "small_angle" => Ok(Model::SmallAngle),
            other => Err(Error::invalid("model", format!("unknown model `{other}`"))),
        }
    }
}

/// Bundles the inputs of the right-hand side so the integrator can call it
/// as a plain function of the state.
#[derive(Debug, Clone, Copy)]
pub struct Dynamics<'a> {
    pub params: &'a PendulumParams,
    pub drive: &'a DriveSchedule,
    pub model: Model,
}

impl<'a> Dynamics<'a> {
    pub fn new(params: &'a PendulumParams, drive: &'a DriveSchedule, model: Model) -> Self {
        Self { params, drive, model }
    }

    /// `(dθ/dt, dθ̇/dt)` at `s`.
    #[inline]
    pub fn rhs(&self, s: &State) -> (f64, f64) {
        match self.model {
            Model::Full => eom_full(s, self.params, self.drive),
            Model::SmallAngle => eom_small_angle(s, self.params, self.drive),
        }
    }

    #[inline]
    pub fn acceleration(&self, s: &State) -> f64 {
        self.rhs(s).1
    }
}

#[inline]
fn driven_acceleration(restoring: f64, s: &State, p: &PendulumParams, d: &DriveSchedule) -> f64 {
    let stiffness = (p.g - d.modulation(s.t)) / p.l;
    -(p.c / (p.m * p.l)) * s.theta_dot - stiffness * restoring
}

/// θ̈ = −(C/ml)·θ̇ − (g/l − A₀ω²/l·cos(ωt + φ))·sin θ
#[inline]
pub fn eom_full(s: &State, p: &PendulumParams, d: &DriveSchedule) -> (f64, f64) {
    (s.theta_dot, driven_acceleration(s.theta.sin(), s, p, d))
}

/// Same as [`eom_full`] with `sin θ` replaced by `θ`.
#[inline]
pub fn eom_small_angle(s: &State, p: &PendulumParams, d: &DriveSchedule) -> (f64, f64) {
    (s.theta_dot, driven_acceleration(s.theta, s, p, d))
}

/// Closed-form solution of the linear damped pendulum released from rest at
/// `theta0` with a static pivot:
///
/// θ(t) = θ₀·e^(−kt)·√(1 + tan²φ)·cos(Ωt − φ),  k = C/(2ml), Ω = √(g/l − k²), tan φ = k/Ω.
pub fn analytic_underdamped(t: f64, theta0: f64, p: &PendulumParams) -> Result<f64> {
    let k = p.decay_rate();
    let stiffness = p.g / p.l;
    if stiffness <= k * k {
        return Err(Error::Overdamped { stiffness, decay_sq: k * k });
    }
    let omega_d = (stiffness - k * k).sqrt();
    let tan_phi = k / omega_d;
    let phi = tan_phi.atan();
    Ok(theta0 * (-k * t).exp() * (1.0 + tan_phi * tan_phi).sqrt() * (omega_d * t - phi).cos())
}

/// Parameters of `ẍ + (ω₀² − 2γω₀²·cos ωt)·x = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MathieuParams {
    pub omega0: f64,
    pub gamma: f64,
    pub omega: f64,
}

impl MathieuParams {
    /// The modulated stiffness `ω₀² − 2γω₀²·cos ωt`.
    pub fn stiffness(&self, t: f64) -> f64 {
        let w2 = self.omega0 * self.omega0;
        w2 - 2.0 * self.gamma * w2 * (self.omega * t).cos()
    }
}

/// Matches `2γω₀²` against `A₀ω²/l`, giving `γ = A₀ω²/(2g)`.
pub fn to_mathieu(p: &PendulumParams, stage: &DriveStage) -> MathieuParams {
    MathieuParams {
        omega0: p.natural_frequency(),
        gamma: stage.amplitude * stage.omega * stage.omega / (2.0 * p.g),
        omega: stage.omega,
    }
}

/// Drive frequencies `2ω₀/n`, `n = 1..=n_max`, at which the Mathieu
/// equation resonates.
pub fn mathieu_resonance_frequencies(omega0: f64, n_max: u32) -> Vec<f64> {
    (1..=n_max).map(|n| 2.0 * omega0 / n as f64).collect()
}
