//! Vertical pivot motion: a piecewise sinusoid `y₀ = A₀·cos(ωt + φ)` whose
//! stages switch instantaneously with a phase offset that keeps `y₀`
//! continuous.

use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One constant-amplitude, constant-frequency segment of the drive.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DriveStage {
    /// Pivot amplitude (m).
    #[serde(rename = "A0")]
    pub amplitude: f64,
    /// Angular frequency (rad/s).
    pub omega: f64,
    /// Switch time to the next stage (s). Ignored on the last stage.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_end: Option<f64>,
}

impl DriveStage {
    pub fn new(amplitude: f64, omega: f64) -> Self {
        Self { amplitude, omega, t_end: None }
    }

    pub fn until(mut self, t_end: f64) -> Self {
        self.t_end = Some(t_end);
        self
    }

    /// Peak pivot acceleration A₀ω².
    pub fn peak_acceleration(&self) -> f64 {
        self.amplitude * self.omega * self.omega
    }
}

/// Pivot position, velocity and acceleration at one instant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PivotKinematics {
    pub y: f64,
    pub y_dot: f64,
    pub y_ddot: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Segment {
    amplitude: f64,
    omega: f64,
    phase: f64,
    end: f64,
}

/// Ordered drive stages with continuity phases resolved at construction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<DriveStage>", into = "Vec<DriveStage>")]
pub struct DriveSchedule {
    stages: Vec<DriveStage>,
    segments: Vec<Segment>,
}

impl DriveSchedule {
    /// A single unbounded stage starting with zero phase.
    pub fn single(amplitude: f64, omega: f64) -> Result<Self> {
        Self::new(vec![DriveStage::new(amplitude, omega)])
    }

    /// A pivot at rest.
    pub fn stationary() -> Self {
        Self::single(0.0, 0.0).expect("zero drive is valid")
    }

    pub fn new(stages: Vec<DriveStage>) -> Result<Self> {
        if stages.is_empty() {
            return Err(Error::invalid("stages", "at least one drive stage is required"));
        }
        let last = stages.len() - 1;
        let mut segments: Vec<Segment> = Vec::with_capacity(stages.len());
        let mut start = 0.0;
        for (i, st) in stages.iter().enumerate() {
            if !st.amplitude.is_finite() || st.amplitude < 0.0 {
                return Err(Error::invalid("A0", format!("must be finite and >= 0, got {}", st.amplitude)));
            }
            if !st.omega.is_finite() || st.omega < 0.0 {
                return Err(Error::invalid("omega", format!("must be finite and >= 0, got {}", st.omega)));
            }
            let end = if i == last {
                f64::INFINITY
            } else {
                match st.t_end {
                    Some(e) if e.is_finite() && e > start => e,
                    Some(e) => {
                        return Err(Error::invalid(
                            "t_end",
                            format!("stage {i} ends at {e}, which is not after {start}"),
                        ))
                    }
                    None => return Err(Error::invalid("t_end", format!("stage {i} needs an end time"))),
                }
            };
            let phase = match segments.last() {
                None => 0.0,
                Some(prev) => continuity_phase(prev, st, start)?,
            };
            segments.push(Segment { amplitude: st.amplitude, omega: st.omega, phase, end });
            start = end;
        }
        Ok(Self { stages, segments })
    }

    pub fn stages(&self) -> &[DriveStage] {
        &self.stages
    }

    /// Phase offsets φ of each stage, in radians within [0, 2π).
    pub fn phases(&self) -> Vec<f64> {
        self.segments.iter().map(|s| s.phase).collect()
    }

    /// Switch instants between consecutive stages.
    pub fn switch_times(&self) -> Vec<f64> {
        self.segments[..self.segments.len() - 1].iter().map(|s| s.end).collect()
    }

    /// Index of the stage active at `t`; a switch instant belongs to the
    /// later stage.
    pub fn stage_index(&self, t: f64) -> usize {
        self.segments.iter().position(|s| t < s.end).unwrap_or(self.segments.len() - 1)
    }

    pub fn stage_at(&self, t: f64) -> &DriveStage {
        &self.stages[self.stage_index(t)]
    }

    /// Largest pivot acceleration magnitude over all stages.
    pub fn max_peak_acceleration(&self) -> f64 {
        self.stages.iter().map(DriveStage::peak_acceleration).fold(0.0, f64::max)
    }

    /// The modulation term `A₀ω²·cos(ωt + φ)`, equal to `−ÿ₀`.
    #[inline]
    pub fn modulation(&self, t: f64) -> f64 {
        let s = self.segment(t);
        if s.amplitude == 0.0 {
            return 0.0;
        }
        s.amplitude * s.omega * s.omega * (s.omega * t + s.phase).cos()
    }

    pub fn kinematics(&self, t: f64) -> PivotKinematics {
        let s = self.segment(t);
        let (sin, cos) = (s.omega * t + s.phase).sin_cos();
        PivotKinematics {
            y: s.amplitude * cos,
            y_dot: -s.amplitude * s.omega * sin,
            y_ddot: -s.amplitude * s.omega * s.omega * cos,
        }
    }

    #[inline]
    fn segment(&self, t: f64) -> &Segment {
        match self.segments.as_slice() {
            [only] => only,
            segs => segs.iter().find(|s| t < s.end).unwrap_or(&segs[segs.len() - 1]),
        }
    }
}

/// Phase of `next` that reproduces the previous stage's pivot position at
/// the switch instant, keeping the direction of pivot motion when the
/// amplitude changes.
fn continuity_phase(prev: &Segment, next: &DriveStage, at: f64) -> Result<f64> {
    let psi_prev = prev.omega * at + prev.phase;
    let y_prev = prev.amplitude * psi_prev.cos();
    let psi = if next.amplitude == prev.amplitude {
        psi_prev
    } else if next.amplitude == 0.0 {
        if y_prev.abs() > 1e-12 {
            return Err(Error::invalid(
                "A0",
                format!("cannot stop the pivot continuously at t = {at}: y0 = {y_prev}"),
            ));
        }
        0.0
    } else {
        let c = y_prev / next.amplitude;
        if c.abs() > 1.0 + 1e-12 {
            return Err(Error::invalid(
                "A0",
                format!("amplitude {} cannot reach pivot position {y_prev} at t = {at}", next.amplitude),
            ));
        }
        let base = c.clamp(-1.0, 1.0).acos();
        if psi_prev.sin() < 0.0 {
            -base
        } else {
            base
        }
    };
    Ok((psi - next.omega * at).rem_euclid(TAU))
}

impl TryFrom<Vec<DriveStage>> for DriveSchedule {
    type Error = Error;

    fn try_from(stages: Vec<DriveStage>) -> Result<Self> {
        Self::new(stages)
    }
}

impl From<DriveSchedule> for Vec<DriveStage> {
    fn from(d: DriveSchedule) -> Self {
        d.stages
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn single_stage_at_origin() {
        let d = DriveSchedule::single(0.05, 6.26).unwrap();
        let k = d.kinematics(0.0);
        assert_eq!(k.y, 0.05);
        assert_eq!(k.y_dot, 0.0);
        assert_relative_eq!(k.y_ddot, -0.05 * 6.26 * 6.26, epsilon = 1e-15);
    }

    #[test]
    fn zero_amplitude_is_motionless() {
        let d = DriveSchedule::single(0.0, 7.0).unwrap();
        for i in 0..100 {
            let k = d.kinematics(i as f64 * 0.37);
            assert_eq!((k.y, k.y_dot, k.y_ddot), (0.0, 0.0, 0.0));
        }
    }

    #[test]
    fn stepped_frequency_is_position_continuous() {
        let w0 = (9.8f64 / 0.245).sqrt();
        let d = DriveSchedule::new(vec![
            DriveStage::new(0.03, 3.136 * w0).until(4.166),
            DriveStage::new(0.03, 2.389 * w0),
        ])
        .unwrap();
        let before = d.kinematics(4.166 - 1e-12);
        let after = d.kinematics(4.166);
        assert!((before.y - after.y).abs() < 1e-9);
        // direction of motion is kept, only the speed jumps
        assert_eq!(before.y_dot.signum(), after.y_dot.signum());
        assert_eq!(d.stage_index(4.166 - 1e-9), 0);
        assert_eq!(d.stage_index(4.166), 1);
        assert_eq!(d.switch_times(), vec![4.166]);
    }

    #[test]
    fn amplitude_change_keeps_position() {
        let d = DriveSchedule::new(vec![DriveStage::new(0.02, 5.0).until(1.3), DriveStage::new(0.05, 9.0)]).unwrap();
        let a = d.kinematics(1.3 - 1e-13).y;
        let b = d.kinematics(1.3).y;
        assert!((a - b).abs() < 1e-10, "{a} vs {b}");
    }

    #[test]
    fn unreachable_amplitude_rejected() {
        // At t = 2π/5·2 = the pivot sits at its top, y0 = 0.05 > 0.01.
        let t = TAU / 5.0 * 2.0;
        let err = DriveSchedule::new(vec![DriveStage::new(0.05, 5.0).until(t), DriveStage::new(0.01, 5.0)]);
        assert!(err.is_err());
    }

    #[test]
    fn stage_times_must_increase() {
        assert!(DriveSchedule::new(vec![
            DriveStage::new(0.1, 1.0).until(2.0),
            DriveStage::new(0.1, 1.0).until(1.0),
            DriveStage::new(0.1, 1.0),
        ])
        .is_err());
        assert!(DriveSchedule::new(vec![DriveStage::new(0.1, 1.0), DriveStage::new(0.1, 2.0)]).is_err());
        assert!(DriveSchedule::new(vec![]).is_err());
        assert!(DriveSchedule::single(-0.1, 1.0).is_err());
        assert!(DriveSchedule::single(0.1, -1.0).is_err());
    }

    #[test]
    fn json_round_trip_keeps_phases() {
        let d = DriveSchedule::new(vec![DriveStage::new(0.03, 19.8).until(4.166), DriveStage::new(0.03, 15.1)]).unwrap();
        let s = serde_json::to_string(&d).unwrap();
        assert!(s.contains("\"A0\""));
        let back: DriveSchedule = serde_json::from_str(&s).unwrap();
        assert_eq!(back, d);
    }
}
