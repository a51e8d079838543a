//! Stability maps over the (A₀, ω/ω₀) plane.
//!
//! Every cell is an independent simulation from rest near the bottom
//! (θ₀ = 0.001 rad) or, with collisions, from rest at θ_min. Two criteria are
//! available: the time-averaged pivot-frame energy and the number of times
//! |θ| crosses a fixed angle.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::drive::DriveSchedule;
use crate::dynamics::Model;
use crate::energy::trapezoid;
use crate::error::{Error, Result};
use crate::integrator::{simulate, SimConfig, Trajectory, DEFAULT_EVENT_TOL, DEFAULT_REST_SPEED};
use crate::params::PendulumParams;

pub const DEFAULT_CROSSING_ANGLE: f64 = 2.0;
/// Starting angle of collision-free cells (rad).
pub const FREE_START_ANGLE: f64 = 0.001;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Criterion {
    MeanEnergy,
    CrossingCount,
    #[default]
    Both,
}

impl Criterion {
    pub fn uses_energy(self) -> bool {
        matches!(self, Criterion::MeanEnergy | Criterion::Both)
    }

    pub fn uses_crossings(self) -> bool {
        matches!(self, Criterion::CrossingCount | Criterion::Both)
    }
}

impl FromStr for Criterion {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mean-energy" | "mean_energy" | "energy" => Ok(Criterion::MeanEnergy),
            "crossing-count" | "crossing_count" | "crossings" => Ok(Criterion::CrossingCount),
            "both" => Ok(Criterion::Both),
            other => Err(Error::Parse(format!(
                "unknown criterion {other:?}, expected mean-energy, crossing-count or both"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Label {
    Stable,
    Unstable,
}

impl Label {
    pub fn as_str(self) -> &'static str {
        match self {
            Label::Stable => "stable",
            Label::Unstable => "unstable",
        }
    }

    pub fn is_unstable(self) -> bool {
        self == Label::Unstable
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Unstable iff `value > threshold`; ties are stable.
pub fn classify(value: f64, threshold: f64) -> Label {
    if value > threshold {
        Label::Unstable
    } else {
        Label::Stable
    }
}

/// Time average of the pivot-frame energy, trapezoidal in t.
///
/// Accumulated relative to the first sample so that a constant trajectory
/// returns its energy exactly.
pub fn criterion_mean_energy(traj: &Trajectory, p: &PendulumParams) -> f64 {
    let n = traj.len();
    if n == 0 {
        return f64::NAN;
    }
    let base = p.pivot_energy(traj.theta[0], traj.theta_dot[0]);
    if n == 1 {
        return base;
    }
    let excess: Vec<f64> = traj
        .theta
        .iter()
        .zip(&traj.theta_dot)
        .map(|(&th, &w)| p.pivot_energy(th, w) - base)
        .collect();
    let span = traj.t[n - 1] - traj.t[0];
    base + trapezoid(&traj.t, &excess) / span
}

/// Number of sign changes of `|θ| − threshold` along the samples.
pub fn criterion_crossing_count(theta: &[f64], threshold: f64) -> u64 {
    let mut count = 0;
    let mut above: Option<bool> = None;
    for th in theta {
        let d = th.abs() - threshold;
        if d == 0.0 {
            continue;
        }
        let now = d > 0.0;
        if above.is_some_and(|a| a != now) {
            count += 1;
        }
        above = Some(now);
    }
    count
}

fn default_a0_max() -> f64 {
    0.5
}
fn default_n() -> usize {
    128
}
fn default_ratio_max() -> f64 {
    5.0
}
fn default_sweep_step() -> f64 {
    2e-3
}
fn default_sweep_duration() -> f64 {
    300.0
}
fn default_restitution() -> f64 {
    1.0
}
fn default_crossing_angle() -> f64 {
    DEFAULT_CROSSING_ANGLE
}

/// Grid and per-cell integration settings of a sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    /// Largest pivot amplitude (m); the axis starts at 0.
    #[serde(default = "default_a0_max")]
    pub a0_max: f64,
    #[serde(default = "default_n")]
    pub n_a: usize,
    /// Largest ω/ω₀; the axis starts at 0.
    #[serde(default = "default_ratio_max")]
    pub ratio_max: f64,
    #[serde(default = "default_n")]
    pub n_ratio: usize,
    #[serde(default = "default_sweep_step")]
    pub h: f64,
    #[serde(rename = "T", default = "default_sweep_duration")]
    pub duration: f64,
    #[serde(default)]
    pub collisions: bool,
    #[serde(rename = "e", default = "default_restitution")]
    pub restitution: f64,
    #[serde(default)]
    pub model: Model,
    #[serde(default)]
    pub criterion: Criterion,
    /// Damping used in every cell, replacing the pendulum's own C.
    #[serde(rename = "C", default)]
    pub damping: f64,
    /// Starting angle; defaults to 0.001 rad, or θ_min with collisions.
    #[serde(default)]
    pub theta0: Option<f64>,
    #[serde(default = "default_crossing_angle")]
    pub crossing_angle: f64,
    /// Crossings allowed before a cell is unstable.
    #[serde(default)]
    pub crossing_threshold: u64,
    /// Mean pivot-frame energy (J) above which a cell is unstable; defaults
    /// to the energy at rest at max(θ_min, |θ₀|).
    #[serde(default)]
    pub energy_threshold: Option<f64>,
}

impl Default for SweepSpec {
    fn default() -> Self {
        Self {
            a0_max: default_a0_max(),
            n_a: default_n(),
            ratio_max: default_ratio_max(),
            n_ratio: default_n(),
            h: default_sweep_step(),
            duration: default_sweep_duration(),
            collisions: false,
            restitution: 1.0,
            model: Model::Full,
            criterion: Criterion::Both,
            damping: 0.0,
            theta0: None,
            crossing_angle: DEFAULT_CROSSING_ANGLE,
            crossing_threshold: 0,
            energy_threshold: None,
        }
    }
}

impl SweepSpec {
    pub fn validate(&self, p: &PendulumParams) -> Result<()> {
        if self.n_a < 2 || self.n_ratio < 2 {
            return Err(Error::invalid("n_a/n_ratio", format!("need at least 2 samples per axis, got {}x{}", self.n_a, self.n_ratio)));
        }
        if !(self.a0_max.is_finite() && self.a0_max > 0.0) {
            return Err(Error::invalid("a0_max", format!("must be > 0, got {}", self.a0_max)));
        }
        if !(self.ratio_max.is_finite() && self.ratio_max > 0.0) {
            return Err(Error::invalid("ratio_max", format!("must be > 0, got {}", self.ratio_max)));
        }
        if !(self.damping.is_finite() && self.damping >= 0.0) {
            return Err(Error::invalid("C", format!("must be >= 0, got {}", self.damping)));
        }
        if !(self.crossing_angle.is_finite() && self.crossing_angle > 0.0) {
            return Err(Error::invalid("crossing_angle", format!("must be > 0, got {}", self.crossing_angle)));
        }
        if self.energy_threshold.is_some_and(|v| !v.is_finite()) {
            return Err(Error::invalid("energy_threshold", "must be finite"));
        }
        let p = self.cell_params(p)?;
        self.sim_config(&p)?.validate(&p)
    }

    pub fn a0_axis(&self) -> Vec<f64> {
        linspace(self.a0_max, self.n_a)
    }

    pub fn ratio_axis(&self) -> Vec<f64> {
        linspace(self.ratio_max, self.n_ratio)
    }

    /// The pendulum simulated in every cell.
    pub fn cell_params(&self, p: &PendulumParams) -> Result<PendulumParams> {
        PendulumParams::new(p.m, p.l, p.r, self.damping, p.g)
    }

    pub fn start_angle(&self, p: &PendulumParams) -> Result<f64> {
        match self.theta0 {
            Some(t) => Ok(t),
            None if self.collisions => Ok(p.critical_angles()?.min),
            None => Ok(FREE_START_ANGLE),
        }
    }

    pub fn sim_config(&self, p: &PendulumParams) -> Result<SimConfig> {
        Ok(SimConfig {
            h: self.h,
            duration: self.duration,
            theta0: self.start_angle(p)?,
            theta_dot0: 0.0,
            collisions: self.collisions,
            restitution: self.restitution,
            model: self.model,
            event_tol: DEFAULT_EVENT_TOL,
            rest_speed: DEFAULT_REST_SPEED,
        })
    }

    pub fn resolved_energy_threshold(&self, p: &PendulumParams) -> Result<f64> {
        if let Some(v) = self.energy_threshold {
            return Ok(v);
        }
        let rest = p.critical_angles()?.min.max(self.start_angle(p)?.abs());
        Ok(p.pivot_energy(rest, 0.0))
    }
}

fn linspace(max: f64, n: usize) -> Vec<f64> {
    let step = max / (n - 1) as f64;
    (0..n).map(|i| if i == n - 1 { max } else { i as f64 * step }).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    #[serde(rename = "A0")]
    pub a0: f64,
    pub ratio: f64,
    pub mean_energy: Option<f64>,
    pub crossings: Option<u64>,
    pub energy_label: Option<Label>,
    pub crossing_label: Option<Label>,
    /// Simulation failure for this cell, if any.
    pub error: Option<String>,
}

impl Cell {
    pub fn label(&self, criterion: Criterion) -> Option<Label> {
        match criterion {
            Criterion::MeanEnergy => self.energy_label,
            Criterion::CrossingCount => self.crossing_label,
            Criterion::Both => match (self.energy_label, self.crossing_label) {
                (Some(a), Some(b)) => Some(if a.is_unstable() || b.is_unstable() { Label::Unstable } else { Label::Stable }),
                (a, b) => a.or(b),
            },
        }
    }
}

/// Thresholds and settings used to label a map.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MapMetadata {
    pub criterion: Criterion,
    pub energy_threshold: f64,
    pub crossing_angle: f64,
    pub crossing_threshold: u64,
    pub omega0: f64,
    pub theta0: f64,
    pub params: PendulumParams,
    pub spec: SweepSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilityMap {
    #[serde(rename = "A0")]
    pub a0: Vec<f64>,
    pub ratio: Vec<f64>,
    /// Row-major: `cells[i * ratio.len() + j]` is `(a0[i], ratio[j])`.
    pub cells: Vec<Cell>,
    pub metadata: MapMetadata,
}

impl StabilityMap {
    pub fn cell(&self, i_a: usize, i_ratio: usize) -> &Cell {
        &self.cells[i_a * self.ratio.len() + i_ratio]
    }

    /// Index of the axis sample nearest to `ratio`.
    pub fn nearest_ratio(&self, ratio: f64) -> usize {
        nearest(&self.ratio, ratio)
    }

    pub fn nearest_a0(&self, a0: f64) -> usize {
        nearest(&self.a0, a0)
    }

    /// `[A₀ index][ratio index]` unstable flags under one criterion; cells
    /// without a label count as stable.
    pub fn unstable_grid(&self, criterion: Criterion) -> Vec<Vec<bool>> {
        (0..self.a0.len())
            .map(|i| {
                (0..self.ratio.len())
                    .map(|j| self.cell(i, j).label(criterion).is_some_and(Label::is_unstable))
                    .collect()
            })
            .collect()
    }

    pub fn failed_cells(&self) -> impl Iterator<Item = &Cell> {
        self.cells.iter().filter(|c| c.error.is_some())
    }

    /// Unstable region connected (4-neighbour) to any unstable cell of the
    /// column nearest `ratio`, or `None` if that column is all stable.
    pub fn tongue(&self, criterion: Criterion, ratio: f64) -> Option<Tongue> {
        let grid = self.unstable_grid(criterion);
        let (na, nr) = (self.a0.len(), self.ratio.len());
        let col = self.nearest_ratio(ratio);
        let mut seen = vec![vec![false; nr]; na];
        let mut stack: Vec<(usize, usize)> = (0..na).filter(|&i| grid[i][col]).map(|i| (i, col)).collect();
        if stack.is_empty() {
            return None;
        }
        for &(i, j) in &stack {
            seen[i][j] = true;
        }
        let mut members = Vec::new();
        while let Some((i, j)) = stack.pop() {
            members.push((i, j));
            let mut visit = |a: usize, b: usize| {
                if grid[a][b] && !seen[a][b] {
                    seen[a][b] = true;
                    stack.push((a, b));
                }
            };
            if i > 0 {
                visit(i - 1, j);
            }
            if i + 1 < na {
                visit(i + 1, j);
            }
            if j > 0 {
                visit(i, j - 1);
            }
            if j + 1 < nr {
                visit(i, j + 1);
            }
        }
        members.sort_unstable();
        let tip_row = members[0].0;
        let tip: Vec<f64> = members.iter().filter(|c| c.0 == tip_row).map(|c| self.ratio[c.1]).collect();
        Some(Tongue {
            tip_a0: self.a0[tip_row],
            tip_ratio: tip.iter().sum::<f64>() / tip.len() as f64,
            cells: members,
        })
    }

    /// Whether any cell with ratio in `[lo, hi]` is unstable.
    pub fn band_present(&self, criterion: Criterion, lo: f64, hi: f64) -> bool {
        let grid = self.unstable_grid(criterion);
        self.ratio
            .iter()
            .enumerate()
            .filter(|(_, r)| **r >= lo && **r <= hi)
            .any(|(j, _)| grid.iter().any(|row| row[j]))
    }
}

fn nearest(axis: &[f64], x: f64) -> usize {
    let mut best = 0;
    for (i, v) in axis.iter().enumerate() {
        if (v - x).abs() < (axis[best] - x).abs() {
            best = i;
        }
    }
    best
}

/// Connected unstable region of a map.
#[derive(Debug, Clone, PartialEq)]
pub struct Tongue {
    /// Smallest A₀ reached by the region.
    pub tip_a0: f64,
    /// Mean ratio of the region's cells on its lowest row.
    pub tip_ratio: f64,
    /// `(A₀ index, ratio index)` of every member, sorted.
    pub cells: Vec<(usize, usize)>,
}

/// Simulates one cell and evaluates the selected criteria.
pub fn evaluate_cell(spec: &SweepSpec, p: &PendulumParams, cfg: &SimConfig, energy_threshold: f64, a0: f64, ratio: f64) -> Cell {
    let mut cell = Cell {
        a0,
        ratio,
        mean_energy: None,
        crossings: None,
        energy_label: None,
        crossing_label: None,
        error: None,
    };
    let outcome = DriveSchedule::single(a0, ratio * p.natural_frequency()).and_then(|d| simulate(p, &d, cfg));
    match outcome {
        Ok(traj) => {
            if spec.criterion.uses_energy() {
                let v = criterion_mean_energy(&traj, p);
                cell.mean_energy = Some(v);
                cell.energy_label = Some(classify(v, energy_threshold));
            }
            if spec.criterion.uses_crossings() {
                let n = criterion_crossing_count(&traj.theta, spec.crossing_angle);
                cell.crossings = Some(n);
                cell.crossing_label = Some(if n > spec.crossing_threshold { Label::Unstable } else { Label::Stable });
            }
        }
        Err(e) => cell.error = Some(e.to_string()),
    }
    cell
}

/// Evaluates every cell in parallel on the current rayon pool. The result
/// does not depend on the pool size or evaluation order.
pub fn run_sweep(spec: &SweepSpec, p: &PendulumParams) -> Result<StabilityMap> {
    spec.validate(p)?;
    let cp = spec.cell_params(p)?;
    let cfg = spec.sim_config(&cp)?;
    let energy_threshold = spec.resolved_energy_threshold(&cp)?;
    let a0 = spec.a0_axis();
    let ratio = spec.ratio_axis();
    let nr = ratio.len();
    let cells: Vec<Cell> = (0..a0.len() * nr)
        .into_par_iter()
        .map(|k| evaluate_cell(spec, &cp, &cfg, energy_threshold, a0[k / nr], ratio[k % nr]))
        .collect();
    Ok(StabilityMap {
        metadata: MapMetadata {
            criterion: spec.criterion,
            energy_threshold,
            crossing_angle: spec.crossing_angle,
            crossing_threshold: spec.crossing_threshold,
            omega0: cp.natural_frequency(),
            theta0: cfg.theta0,
            params: cp,
            spec: spec.clone(),
        },
        a0,
        ratio,
        cells,
    })
}

/// [`run_sweep`] on a dedicated pool of `jobs` threads.
pub fn run_sweep_with_jobs(spec: &SweepSpec, p: &PendulumParams, jobs: usize) -> Result<StabilityMap> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| Error::invalid("jobs", e.to_string()))?;
    pool.install(|| run_sweep(spec, p))
}
