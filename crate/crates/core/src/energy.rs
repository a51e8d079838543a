//! Energy bookkeeping along a trajectory.
//!
//! Two bookkeepings coexist. The ground-frame kinetic and potential energies
//! include the pivot's own motion (zero potential at `y₀ = 0`). The
//! pivot-frame energy `E_piv = ½ml²θ̇² − mgl·cosθ` is the one whose rate is
//! exactly `P_in − P_diss` along solutions of the driven equation.

use serde::{Deserialize, Serialize};

use crate::drive::DriveSchedule;
use crate::dynamics::State;
use crate::error::{Error, Result};
use crate::integrator::Trajectory;
use crate::params::PendulumParams;

/// Ground-frame kinetic and potential energy:
///
/// T = ½m(l²θ̇² + ẏ₀² + 2ẏ₀·lθ̇·sinθ),  U = mg(y₀ − l·cosθ)
pub fn ground_frame_energies(s: &State, p: &PendulumParams, d: &DriveSchedule) -> (f64, f64) {
    let k = d.kinematics(s.t);
    let lw = p.l * s.theta_dot;
    let kinetic = 0.5 * p.m * (lw * lw + k.y_dot * k.y_dot + 2.0 * k.y_dot * lw * s.theta.sin());
    let potential = p.m * p.g * (k.y - p.l * s.theta.cos());
    (kinetic, potential)
}

/// Inertial driving force `m·A₀ω²·cos(ωt + φ)` times the ball's vertical
/// velocity relative to the pivot, `l·sinθ·θ̇`.
pub fn input_power(s: &State, p: &PendulumParams, d: &DriveSchedule) -> f64 {
    p.m * d.modulation(s.t) * p.l * s.theta.sin() * s.theta_dot
}

/// `C·l·θ̇²`
pub fn dissipated_power(s: &State, p: &PendulumParams) -> f64 {
    p.c * p.l * s.theta_dot * s.theta_dot
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergyTrace {
    pub t: Vec<f64>,
    #[serde(rename = "T")]
    pub kinetic: Vec<f64>,
    #[serde(rename = "U")]
    pub potential: Vec<f64>,
    #[serde(rename = "E")]
    pub total: Vec<f64>,
    #[serde(rename = "P_in")]
    pub input_power: Vec<f64>,
    #[serde(rename = "P_diss")]
    pub dissipated_power: Vec<f64>,
    /// Pivot-frame energy.
    #[serde(rename = "E_piv")]
    pub pivot_energy: Vec<f64>,
}

impl EnergyTrace {
    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    /// Trapezoidal ∫P_diss dt over the whole trace.
    pub fn dissipated_energy(&self) -> f64 {
        trapezoid(&self.t, &self.dissipated_power)
    }

    /// Trapezoidal ∫P_in dt over the whole trace.
    pub fn injected_energy(&self) -> f64 {
        trapezoid(&self.t, &self.input_power)
    }
}

pub fn energy_trace(traj: &Trajectory, p: &PendulumParams, d: &DriveSchedule) -> Result<EnergyTrace> {
    if traj.params != *p {
        return Err(Error::MismatchedParameters(format!(
            "trajectory was integrated with {:?}, not {:?}",
            traj.params, p
        )));
    }
    if traj.drive != *d {
        return Err(Error::MismatchedParameters("trajectory was integrated with a different drive".into()));
    }
    let n = traj.len();
    let mut out = EnergyTrace {
        t: Vec::with_capacity(n),
        kinetic: Vec::with_capacity(n),
        potential: Vec::with_capacity(n),
        total: Vec::with_capacity(n),
        input_power: Vec::with_capacity(n),
        dissipated_power: Vec::with_capacity(n),
        pivot_energy: Vec::with_capacity(n),
    };
    for s in traj.states() {
        let (kin, pot) = ground_frame_energies(&s, p, d);
        out.t.push(s.t);
        out.kinetic.push(kin);
        out.potential.push(pot);
        out.total.push(kin + pot);
        out.input_power.push(input_power(&s, p, d));
        out.dissipated_power.push(dissipated_power(&s, p));
        out.pivot_energy.push(p.pivot_energy(s.theta, s.theta_dot));
    }
    Ok(out)
}

/// One centred-difference check of `dE_piv/dt = P_in − P_diss`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BalanceSample {
    pub t: f64,
    pub rate: f64,
    pub net_power: f64,
}

impl BalanceSample {
    pub fn residual(&self) -> f64 {
        self.rate - self.net_power
    }
}

/// Centred finite-difference rate of the pivot-frame energy compared with
/// the net power, at every interior sample whose stencil is on the regular
/// step grid and contains no contact event.
pub fn power_balance(traj: &Trajectory, trace: &EnergyTrace) -> Vec<BalanceSample> {
    let h = traj.config.h;
    let mut event_times = traj.events.iter().map(|e| e.t).peekable();
    let mut out = Vec::new();
    for i in 1..trace.len().saturating_sub(1) {
        let (t0, t1, t2) = (trace.t[i - 1], trace.t[i], trace.t[i + 1]);
        while event_times.peek().is_some_and(|&te| te < t0) {
            event_times.next();
        }
        if event_times.peek().is_some_and(|&te| te <= t2) {
            continue;
        }
        let regular = ((t1 - t0) - h).abs() <= 1e-9 * h && ((t2 - t1) - h).abs() <= 1e-9 * h;
        if !regular {
            continue;
        }
        out.push(BalanceSample {
            t: t1,
            rate: (trace.pivot_energy[i + 1] - trace.pivot_energy[i - 1]) / (t2 - t0),
            net_power: trace.input_power[i] - trace.dissipated_power[i],
        });
    }
    out
}

pub(crate) fn trapezoid(t: &[f64], y: &[f64]) -> f64 {
    t.windows(2).zip(y.windows(2)).map(|(tw, yw)| 0.5 * (yw[0] + yw[1]) * (tw[1] - tw[0])).sum()
}
