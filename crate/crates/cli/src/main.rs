use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use latolato_core::{
    energy_trace, fit_decay, mathieu_resonance_frequencies, read_series_csv, run_sweep_with_jobs, simulate, to_mathieu,
    write_energy_csv, write_events_csv, write_map_csv, write_trajectory_csv, Criterion, Error, Model, RunConfig,
};
use serde::Serialize;

mod manifest;

use manifest::{load_config, RunManifest};

#[derive(Parser)]
#[command(name = "latolato", version, about = "Driven pendulum pair with collisions: simulation, stability maps, damping fits")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate one trajectory.
    Simulate(SimulateArgs),
    /// Energy and power along one trajectory.
    Energy(SimulateArgs),
    /// Stability map over drive amplitude and frequency ratio.
    Sweep(SweepArgs),
    /// Damping coefficient from a decaying `t,theta` series.
    Fit(FitArgs),
    /// Principal parametric resonance frequencies 2ω₀/n.
    ResonanceFreqs(ResonanceArgs),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
    Both,
}

impl Format {
    fn csv(self) -> bool {
        self != Format::Json
    }

    fn json(self) -> bool {
        self != Format::Csv
    }
}

#[derive(Args)]
struct Common {
    /// Run configuration (JSON), or a manifest emitted by an earlier run.
    #[arg(long)]
    config: PathBuf,
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
    #[arg(long, value_enum, default_value = "csv")]
    format: Format,
    /// Accepted for compatibility; every run is deterministic.
    #[arg(long)]
    seedless: bool,
}

#[derive(Args)]
struct SimulateArgs {
    #[command(flatten)]
    common: Common,
    /// full | small-angle
    #[arg(long)]
    model: Option<Model>,
    /// Enforce the contact walls at the critical angles.
    #[arg(long)]
    collisions: bool,
    /// Also write the energy trace (always written by `energy`).
    #[arg(long)]
    energy: bool,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    collisions: bool,
    /// mean-energy | crossing-count | both
    #[arg(long)]
    criterion: Option<Criterion>,
    /// Worker threads; the map does not depend on this.
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    #[arg(long)]
    model: Option<Model>,
}

#[derive(Args)]
struct FitArgs {
    /// CSV with `t` and `theta` columns.
    #[arg(long)]
    input: PathBuf,
    /// Ball mass (kg).
    #[arg(long)]
    m: f64,
    /// Rod length (m).
    #[arg(long)]
    l: f64,
    /// Also write `fit.json` and a manifest here.
    #[arg(long)]
    out_dir: Option<PathBuf>,
}

#[derive(Args)]
struct ResonanceArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long, default_value_t = 4)]
    n_max: u32,
}

#[derive(Debug)]
enum Failure {
    Core(Error),
    Io(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Core(e)
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Failure {
    fn from(e: serde_json::Error) -> Self {
        Failure::Io(e.to_string())
    }
}

impl Failure {
    fn kind(&self) -> &'static str {
        match self {
            Failure::Core(e) if e.is_numerical() => "numerical",
            Failure::Core(Error::Io(_) | Error::Csv(_) | Error::Json(_)) | Failure::Io(_) => "io",
            Failure::Core(Error::Parse(_)) => "parse",
            Failure::Core(_) => "validation",
        }
    }

    fn exit_code(&self) -> u8 {
        match self.kind() {
            "numerical" => 3,
            "io" => 1,
            _ => 2,
        }
    }

    fn message(&self) -> String {
        match self {
            Failure::Core(e) => e.to_string(),
            Failure::Io(s) => s.clone(),
        }
    }
}

type Outcome<T> = Result<T, Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Simulate(a) => cmd_simulate(a, false),
        Command::Energy(a) => cmd_simulate(a, true),
        Command::Sweep(a) => cmd_sweep(a),
        Command::Fit(a) => cmd_fit(a),
        Command::ResonanceFreqs(a) => cmd_resonance(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            let record = serde_json::json!({"error": {"kind": f.kind(), "message": f.message()}});
            eprintln!("{record}");
            ExitCode::from(f.exit_code())
        }
    }
}

fn create(dir: &Path, name: &str, outputs: &mut Vec<String>) -> Outcome<BufWriter<File>> {
    outputs.push(name.to_string());
    Ok(BufWriter::new(File::create(dir.join(name))?))
}

fn write_json<T: Serialize>(dir: &Path, name: &str, value: &T, outputs: &mut Vec<String>) -> Outcome<()> {
    let mut w = create(dir, name, outputs)?;
    serde_json::to_writer_pretty(&mut w, value)?;
    std::io::Write::write_all(&mut w, b"\n")?;
    Ok(())
}

fn cmd_simulate(a: SimulateArgs, energy_only: bool) -> Outcome<()> {
    let start = Instant::now();
    let mut config = load_config(&a.common.config)?;
    if let Some(m) = a.model {
        config.model = Some(m);
    }
    if a.collisions {
        config.collisions = Some(true);
    }
    let p = config.params()?;
    let d = config.drive()?;
    let cfg = config.sim_config()?;
    config.resolve_sim(&cfg);
    let traj = simulate(&p, &d, &cfg)?;

    let dir = &a.common.out_dir;
    fs::create_dir_all(dir)?;
    let mut outputs = Vec::new();
    let fmt = a.common.format;
    if !energy_only {
        if fmt.csv() {
            write_trajectory_csv(create(dir, "trajectory.csv", &mut outputs)?, &traj)?;
            write_events_csv(create(dir, "events.csv", &mut outputs)?, &traj.events)?;
        }
        if fmt.json() {
            write_json(dir, "trajectory.json", &traj, &mut outputs)?;
        }
    }
    if energy_only || a.energy {
        let trace = energy_trace(&traj, &p, &d)?;
        if fmt.csv() {
            write_energy_csv(create(dir, "energy.csv", &mut outputs)?, &trace)?;
        }
        if fmt.json() {
            write_json(dir, "energy.json", &trace, &mut outputs)?;
        }
    }
    let command = if energy_only { "energy" } else { "simulate" };
    let manifest = RunManifest::new(command, Some(config), Some(d.phases()), None, outputs, start);
    manifest.write(dir)
}

fn cmd_sweep(a: SweepArgs) -> Outcome<()> {
    let start = Instant::now();
    let mut config = load_config(&a.common.config)?;
    let mut spec = config.sweep_spec();
    if a.collisions {
        spec.collisions = true;
    }
    if let Some(c) = a.criterion {
        spec.criterion = c;
    }
    if let Some(m) = a.model {
        spec.model = m;
    }
    let p = config.params()?;
    let map = run_sweep_with_jobs(&spec, &p, a.jobs)?;
    config.sweep = Some(spec);

    let dir = &a.common.out_dir;
    fs::create_dir_all(dir)?;
    let mut outputs = Vec::new();
    if a.common.format.csv() {
        write_map_csv(create(dir, "stability_map.csv", &mut outputs)?, &map)?;
    }
    if a.common.format.json() {
        write_json(dir, "stability_map.json", &map, &mut outputs)?;
    }
    RunManifest::new("sweep", Some(config), None, None, outputs, start).write(dir)
}

fn cmd_fit(a: FitArgs) -> Outcome<()> {
    let start = Instant::now();
    let file = File::open(&a.input).map_err(|e| Failure::Io(format!("{}: {e}", a.input.display())))?;
    let (t, theta) = read_series_csv(file)?;
    let report = fit_decay(&t, &theta, a.m, a.l)?;
    println!("{}", serde_json::to_string_pretty(&report)?);
    if let Some(dir) = &a.out_dir {
        fs::create_dir_all(dir)?;
        let mut outputs = Vec::new();
        write_json(dir, "fit.json", &report, &mut outputs)?;
        let inputs = serde_json::json!({"input": a.input, "m": a.m, "l": a.l});
        RunManifest::new("fit", None, None, Some(inputs), outputs, start).write(dir)?;
    }
    Ok(())
}

#[derive(Serialize)]
struct Resonance {
    n: u32,
    omega: f64,
    ratio: f64,
}

fn cmd_resonance(a: ResonanceArgs) -> Outcome<()> {
    let config: RunConfig = load_config(&a.config)?;
    let p = config.params()?;
    let w0 = p.natural_frequency();
    let lines: Vec<Resonance> = mathieu_resonance_frequencies(w0, a.n_max)
        .into_iter()
        .enumerate()
        .map(|(i, omega)| Resonance { n: i as u32 + 1, omega, ratio: omega / w0 })
        .collect();
    let d = config.drive()?;
    let mathieu: Vec<_> = d.stages().iter().map(|s| to_mathieu(&p, s)).collect();
    let out = serde_json::json!({"omega0": w0, "resonances": lines, "stages": mathieu});
    println!("{}", serde_json::to_string_pretty(&out)?);
    Ok(())
}
