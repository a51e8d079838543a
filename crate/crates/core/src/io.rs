//! Run configuration documents and CSV encodings of results.
//!
//! All angles are radians and all times seconds. Every CSV starts with a
//! header row; floats are written in shortest round-trip form.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::drive::{DriveSchedule, DriveStage};
use crate::dynamics::Model;
use crate::energy::EnergyTrace;
use crate::error::{Error, Result};
use crate::integrator::{CollisionEvent, SimConfig, Trajectory, DEFAULT_EVENT_TOL, DEFAULT_REST_SPEED, DEFAULT_STEP};
use crate::params::{PendulumParams, STANDARD_GRAVITY};
use crate::sweep::{Criterion, StabilityMap, SweepSpec};

fn default_gravity() -> f64 {
    STANDARD_GRAVITY
}

/// One flat JSON document describing a run. Integration keys that are
/// absent take their defaults when resolved.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub m: f64,
    pub l: f64,
    #[serde(default)]
    pub r: f64,
    #[serde(rename = "C", default)]
    pub c: f64,
    #[serde(default = "default_gravity")]
    pub g: f64,
    /// Empty means a stationary pivot.
    #[serde(default)]
    pub stages: Vec<DriveStage>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta0: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub thetadot0: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub h: Option<f64>,
    #[serde(rename = "T", default, skip_serializing_if = "Option::is_none")]
    pub duration: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub collisions: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub e: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model: Option<Model>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub event_tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rest_speed: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepSpec>,
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Parse(format!("config: {e}")))
    }

    pub fn params(&self) -> Result<PendulumParams> {
        PendulumParams::new(self.m, self.l, self.r, self.c, self.g)
    }

    pub fn drive(&self) -> Result<DriveSchedule> {
        if self.stages.is_empty() {
            Ok(DriveSchedule::stationary())
        } else {
            DriveSchedule::new(self.stages.clone())
        }
    }

    /// Integration settings with defaults filled in; `theta0` is required.
    pub fn sim_config(&self) -> Result<SimConfig> {
        let theta0 = self.theta0.ok_or_else(|| Error::invalid("theta0", "missing from config"))?;
        Ok(SimConfig {
            h: self.h.unwrap_or(DEFAULT_STEP),
            duration: self.duration.unwrap_or(300.0),
            theta0,
            theta_dot0: self.thetadot0.unwrap_or(0.0),
            collisions: self.collisions.unwrap_or(false),
            restitution: self.e.unwrap_or(1.0),
            model: self.model.unwrap_or_default(),
            event_tol: self.event_tol.unwrap_or(DEFAULT_EVENT_TOL),
            rest_speed: self.rest_speed.unwrap_or(DEFAULT_REST_SPEED),
        })
    }

    /// Copies every integration setting of `cfg` into explicit keys.
    pub fn resolve_sim(&mut self, cfg: &SimConfig) {
        self.theta0 = Some(cfg.theta0);
        self.thetadot0 = Some(cfg.theta_dot0);
        self.h = Some(cfg.h);
        self.duration = Some(cfg.duration);
        self.collisions = Some(cfg.collisions);
        self.e = Some(cfg.restitution);
        self.model = Some(cfg.model);
        self.event_tol = Some(cfg.event_tol);
        self.rest_speed = Some(cfg.rest_speed);
    }

    pub fn sweep_spec(&self) -> SweepSpec {
        self.sweep.clone().unwrap_or_default()
    }
}

fn num(v: f64) -> String {
    format!("{v}")
}

fn csv_writer<W: Write>(w: W) -> csv::Writer<W> {
    csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(w)
}

/// `t,theta,theta_dot`
pub fn write_trajectory_csv<W: Write>(w: W, traj: &Trajectory) -> Result<()> {
    let mut out = csv_writer(w);
    out.write_record(["t", "theta", "theta_dot"])?;
    for i in 0..traj.len() {
        out.write_record([num(traj.t[i]), num(traj.theta[i]), num(traj.theta_dot[i])])?;
    }
    out.flush()?;
    Ok(())
}

/// `t,boundary,v_pre,v_post`
pub fn write_events_csv<W: Write>(w: W, events: &[CollisionEvent]) -> Result<()> {
    let mut out = csv_writer(w);
    out.write_record(["t", "boundary", "v_pre", "v_post"])?;
    for e in events {
        out.write_record([num(e.t), e.boundary.as_str().to_string(), num(e.v_pre), num(e.v_post)])?;
    }
    out.flush()?;
    Ok(())
}

/// `t,T,U,E,P_in,P_diss` in the ground frame.
pub fn write_energy_csv<W: Write>(w: W, trace: &EnergyTrace) -> Result<()> {
    let mut out = csv_writer(w);
    out.write_record(["t", "T", "U", "E", "P_in", "P_diss"])?;
    for i in 0..trace.len() {
        out.write_record([
            num(trace.t[i]),
            num(trace.kinetic[i]),
            num(trace.potential[i]),
            num(trace.total[i]),
            num(trace.input_power[i]),
            num(trace.dissipated_power[i]),
        ])?;
    }
    out.flush()?;
    Ok(())
}

/// Long format `A0,ratio,criterion,value,label`, one row per cell and
/// criterion. Failed cells carry an empty value and the label `error`.
pub fn write_map_csv<W: Write>(w: W, map: &StabilityMap) -> Result<()> {
    let mut out = csv_writer(w);
    out.write_record(["A0", "ratio", "criterion", "value", "label"])?;
    let criterion = map.metadata.criterion;
    for c in &map.cells {
        if criterion.uses_energy() {
            let (value, label) = match (c.mean_energy, c.energy_label) {
                (Some(v), Some(l)) => (num(v), l.as_str()),
                _ => (String::new(), "error"),
            };
            out.write_record([num(c.a0), num(c.ratio), "mean-energy".into(), value, label.into()])?;
        }
        if criterion.uses_crossings() {
            let (value, label) = match (c.crossings, c.crossing_label) {
                (Some(v), Some(l)) => (v.to_string(), l.as_str()),
                _ => (String::new(), "error"),
            };
            out.write_record([num(c.a0), num(c.ratio), "crossing-count".into(), value, label.into()])?;
        }
    }
    out.flush()?;
    Ok(())
}

/// Criterion name as written in map files.
pub fn criterion_name(c: Criterion) -> &'static str {
    match c {
        Criterion::MeanEnergy => "mean-energy",
        Criterion::CrossingCount => "crossing-count",
        Criterion::Both => "both",
    }
}

/// Reads the `t` and `theta` columns of a headed CSV; other columns are
/// ignored.
pub fn read_series_csv<R: Read>(r: R) -> Result<(Vec<f64>, Vec<f64>)> {
    let mut rd = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(r);
    let headers = rd.headers().map_err(|e| Error::Parse(format!("header: {e}")))?.clone();
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::Parse(format!("missing column {name:?} in header {:?}", headers.iter().collect::<Vec<_>>())))
    };
    let (it, ith) = (col("t")?, col("theta")?);
    let (mut t, mut theta) = (Vec::new(), Vec::new());
    for (row, rec) in rd.records().enumerate() {
        let rec = rec.map_err(|e| Error::Parse(format!("row {}: {e}", row + 2)))?;
        let field = |i: usize| -> Result<f64> {
            let s = rec.get(i).unwrap_or("");
            s.parse::<f64>().map_err(|_| Error::Parse(format!("row {}: {s:?} is not a number", row + 2)))
        };
        t.push(field(it)?);
        theta.push(field(ith)?);
    }
    Ok((t, theta))
}
