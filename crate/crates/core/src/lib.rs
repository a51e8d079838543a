pub mod drive;
pub mod dynamics;
pub mod energy;
pub mod error;
pub mod fit;
pub mod integrator;
pub mod io;
pub mod params;
pub mod sweep;

pub use drive::{DriveSchedule, DriveStage, PivotKinematics};
pub use dynamics::{
    analytic_underdamped, eom_full, eom_small_angle, mathieu_resonance_frequencies, to_mathieu, Dynamics,
    MathieuParams, Model, State,
};
pub use energy::{dissipated_power, energy_trace, ground_frame_energies, input_power, power_balance, BalanceSample, EnergyTrace};
pub use error::{Error, Result};
pub use fit::{damping_from_decay, extract_peaks, fit_decay, fit_envelope, DecayFit, Envelope, Peak};
pub use io::{read_series_csv, write_energy_csv, write_events_csv, write_map_csv, write_trajectory_csv, RunConfig};
pub use integrator::{collide, locate_event, rk4_step, simulate, Boundary, CollisionEvent, SimConfig, Trajectory};
pub use params::{CriticalAngles, PendulumParams, STANDARD_GRAVITY};
pub use sweep::{
    classify, criterion_crossing_count, criterion_mean_energy, evaluate_cell, run_sweep, run_sweep_with_jobs, Cell, Criterion, Label,
    MapMetadata, StabilityMap, SweepSpec, Tongue,
};
