//! Physical constants of one ball on its rod.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Standard gravity used by every worked configuration.
pub const STANDARD_GRAVITY: f64 = 9.8;

/// Mass, rod length, ball radius, damping coefficient and gravity of one
/// ball/rod system. The rod is massless.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PendulumParams {
    /// Ball mass (kg).
    pub m: f64,
    /// Rod length, pivot to ball centre (m).
    pub l: f64,
    /// Ball radius (m).
    pub r: f64,
    /// Damping coefficient (kg·m/s).
    #[serde(rename = "C")]
    pub c: f64,
    /// Gravitational acceleration (m/s²).
    pub g: f64,
}

impl PendulumParams {
    pub fn new(m: f64, l: f64, r: f64, c: f64, g: f64) -> Result<Self> {
        let p = Self { m, l, r, c, g };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        positive("m", self.m)?;
        positive("l", self.l)?;
        positive("g", self.g)?;
        if !self.c.is_finite() || self.c < 0.0 {
            return Err(Error::invalid("C", format!("must be finite and >= 0, got {}", self.c)));
        }
        if !self.r.is_finite() || self.r < 0.0 {
            return Err(Error::invalid("r", format!("must be finite and >= 0, got {}", self.r)));
        }
        if self.r >= self.l {
            return Err(Error::DegenerateGeometry { r: self.r, l: self.l });
        }
        Ok(())
    }

    /// Small-oscillation angular frequency √(g/l).
    pub fn natural_frequency(&self) -> f64 {
        (self.g / self.l).sqrt()
    }

    /// Contact angles of the two balls: at the bottom of the arc
    /// (`arcsin(r/l)`) and at the top (`π − arcsin(r/l)`).
    pub fn critical_angles(&self) -> Result<CriticalAngles> {
        if !(self.r >= 0.0 && self.r < self.l) {
            return Err(Error::DegenerateGeometry { r: self.r, l: self.l });
        }
        let min = (self.r / self.l).asin();
        Ok(CriticalAngles { min, max: std::f64::consts::PI - min })
    }

    /// Exponential decay rate C/(2ml) of the undriven small-angle motion.
    pub fn decay_rate(&self) -> f64 {
        self.c / (2.0 * self.m * self.l)
    }

    /// Pivot-frame mechanical energy ½ml²θ̇² − mgl·cosθ.
    pub fn pivot_energy(&self, theta: f64, theta_dot: f64) -> f64 {
        let ml = self.m * self.l;
        0.5 * ml * self.l * theta_dot * theta_dot - ml * self.g * theta.cos()
    }
}

/// Bottom and top contact angles, `0 <= min < max <= π`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CriticalAngles {
    pub min: f64,
    pub max: f64,
}

impl CriticalAngles {
    pub fn contains(&self, theta: f64) -> bool {
        theta >= self.min && theta <= self.max
    }
}

fn positive(name: &'static str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::invalid(name, format!("must be finite and > 0, got {v}")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    fn params(l: f64, r: f64) -> PendulumParams {
        PendulumParams::new(0.8, l, r, 0.0, 9.8).unwrap()
    }

    #[test]
    fn natural_frequency_closed_form() {
        assert_relative_eq!(params(1.0, 0.0).natural_frequency(), 9.8f64.sqrt(), epsilon = 1e-15);
        assert_relative_eq!(params(1.0, 0.0).natural_frequency(), 3.130495, epsilon = 1e-6);
        assert_relative_eq!(params(0.3630, 0.0).natural_frequency(), 5.195887, epsilon = 1e-6);
    }

    #[test]
    fn natural_frequency_matches_reported_drive_ratio() {
        // 10.09 rad/s at a ratio of 1.942 implies the l = 0.3630 m pendulum.
        let implied = 10.09 / 1.942;
        assert!((params(0.3630, 0.0).natural_frequency() - implied).abs() < 1e-3);
    }

    #[test]
    fn critical_angles_examples() {
        let a = params(1.0, 0.1).critical_angles().unwrap();
        assert_relative_eq!(a.min, 0.100167, epsilon = 1e-6);
        assert_relative_eq!(a.max, 3.041425, epsilon = 1e-6);
        let a = params(1.0, 0.0).critical_angles().unwrap();
        assert_eq!(a.min, 0.0);
        assert_eq!(a.max, PI);
    }

    #[test]
    fn degenerate_geometry_rejected() {
        let err = PendulumParams::new(0.8, 1.0, 1.0, 0.0, 9.8).unwrap_err();
        assert!(matches!(err, Error::DegenerateGeometry { .. }));
        let raw = PendulumParams { m: 0.8, l: 1.0, r: 1.0, c: 0.0, g: 9.8 };
        assert!(matches!(raw.critical_angles(), Err(Error::DegenerateGeometry { .. })));
    }

    #[test]
    fn rejects_bad_constants() {
        assert!(PendulumParams::new(0.0, 1.0, 0.0, 0.0, 9.8).is_err());
        assert!(PendulumParams::new(1.0, -1.0, 0.0, 0.0, 9.8).is_err());
        assert!(PendulumParams::new(1.0, 1.0, 0.0, -0.1, 9.8).is_err());
        assert!(PendulumParams::new(1.0, 1.0, 0.0, 0.0, 0.0).is_err());
        assert!(PendulumParams::new(1.0, 1.0, -0.1, 0.0, 9.8).is_err());
        assert!(PendulumParams::new(f64::NAN, 1.0, 0.0, 0.0, 9.8).is_err());
    }
}
