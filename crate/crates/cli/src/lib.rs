//! Command-line surface of the simulator.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use qsr_core::analytic;
use qsr_core::config::{linspace, RunConfig};
use qsr_core::ensemble::{self, EnergyEstimator, ExclusionStats, ScanResult, Window};
use qsr_core::persist::{self, RunSummary};
use qsr_core::spectral::{self, ScanAxis};
use qsr_core::{Error, SystemParams};

#[derive(Parser, Debug)]
#[command(name = "qsr", version, about = "Driven dissipative two-level system: ensemble Langevin simulation and analysis")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Run one ensemble and write its moment series.
    Simulate(Common),
    /// Undriven equilibrium observables against closed-form references over a temperature grid.
    ThermoScan {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        grid: TempGrid,
    },
    /// Power amplitude and Fourier coefficients along a frequency or temperature grid.
    QsrScan {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum)]
        axis: Option<Axis>,
    },
    /// Closed-form thermodynamic and linear-response tables.
    Reference {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        grid: TempGrid,
    },
    /// Fourier coefficients and power amplitudes of an existing moment series.
    Spectrum {
        #[command(flatten)]
        common: Common,
        /// moments.csv written by `simulate`.
        #[arg(long)]
        input: PathBuf,
    },
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum Axis {
    Omega,
    Temperature,
}

#[derive(Args, Debug)]
pub struct TempGrid {
    /// Lowest temperature (default 0.2Δ).
    #[arg(long)]
    pub tmin: Option<f64>,
    /// Highest temperature (default 5Δ).
    #[arg(long)]
    pub tmax: Option<f64>,
    #[arg(long, default_value_t = 12)]
    pub points: usize,
}

macro_rules! key_flags {
    ($($field:ident),* $(,)?) => {
        /// Flags that override individual config keys.
        #[derive(Args, Debug, Default)]
        pub struct KeyFlags {
            $(
                #[arg(long, value_name = "VALUE", help_heading = "Config keys", allow_hyphen_values = true)]
                pub $field: Option<String>,
            )*
        }

        impl KeyFlags {
            pub fn pairs(&self) -> Vec<(&'static str, &str)> {
                let mut out = vec![];
                $(
                    if let Some(v) = &self.$field {
                        out.push((stringify!($field), v.as_str()));
                    }
                )*
                out
            }
        }
    };
}

key_flags!(
    epsilon,
    delta,
    epsilon1,
    omega,
    gamma,
    temperature,
    fdt_prefactor,
    scheme,
    dt,
    t_final,
    record_stride,
    z_cap,
    stability_threshold,
    n_traj,
    population_init,
    z0,
    phase_init,
    phi0,
    window_start,
    window_end,
    n_blocks,
    n_groups,
    m_max,
    omega_c,
    scan_min,
    scan_max,
    scan_points,
);

#[derive(Args, Debug)]
pub struct Common {
    /// Flat key-value config file.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Overwrite a non-empty output directory.
    #[arg(long)]
    pub force: bool,
    /// Worker threads; never changes results.
    #[arg(long, env = "SIM_THREADS")]
    pub threads: Option<usize>,
    /// Extra `key=value` config override (repeatable).
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub set: Vec<String>,
    #[command(flatten)]
    pub keys: KeyFlags,
}

impl Common {
    fn load(&self, base: Option<RunConfig>) -> Result<RunConfig> {
        let mut cfg = match (&self.config, base) {
            (Some(path), _) => {
                let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
                RunConfig::parse(&text).with_context(|| path.display().to_string())?
            }
            (None, Some(b)) => b,
            (None, None) => RunConfig::default(),
        };
        let mut pairs: Vec<(&str, &str)> = vec![];
        for s in &self.set {
            let (k, v) = s
                .split_once('=')
                .ok_or_else(|| Error::Config {
                    line: 0,
                    message: format!("--set expects KEY=VALUE, got {s:?}"),
                })?;
            pairs.push((k.trim(), v.trim()));
        }
        pairs.extend(self.keys.pairs());
        if !pairs.is_empty() {
            cfg = cfg.with_overrides(pairs)?;
        }
        if let Some(seed) = self.seed {
            cfg.seed = seed;
            cfg.validate()?;
        }
        Ok(cfg)
    }

    fn out_dir(&self, cfg: &RunConfig, command: &str) -> PathBuf {
        self.out
            .clone()
            .or_else(|| cfg.output.as_ref().map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from(format!("qsr-{command}")))
    }
}

struct Run {
    command: &'static str,
    cfg: RunConfig,
    dir: PathBuf,
    started: Instant,
    started_unix: f64,
    outputs: Vec<String>,
}

impl Run {
    fn start(command: &'static str, common: &Common, cfg: RunConfig) -> Result<Self> {
        let dir = common.out_dir(&cfg, command);
        persist::prepare_output_dir(&dir, common.force)?;
        Ok(Self {
            command,
            cfg,
            dir,
            started: Instant::now(),
            started_unix: SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map_or(0.0, |d| d.as_secs_f64()),
            outputs: vec![],
        })
    }

    fn path(&mut self, name: &str) -> PathBuf {
        self.outputs.push(name.into());
        self.dir.join(name)
    }

    fn finish(
        mut self,
        exclusions: Option<ExclusionStats>,
        scan: Option<&ScanResult>,
        results: Value,
    ) -> Result<()> {
        let path = self.path("summary.json");
        let summary = RunSummary {
            tool: "qsr".into(),
            version: env!("CARGO_PKG_VERSION").into(),
            command: self.command.into(),
            config_hash: self.cfg.hash(),
            master_seed: self.cfg.seed,
            wall_time_s: self.started.elapsed().as_secs_f64(),
            started_unix_s: self.started_unix,
            exclusions,
            outputs: self.outputs.clone(),
            failures: scan.map(|s| s.failures.clone()).unwrap_or_default(),
            warnings: scan.map(|s| s.warnings.clone()).unwrap_or_default(),
            config: serde_json::to_value(&self.cfg)?,
            results,
        };
        persist::write_json(&path, &summary)?;
        Ok(())
    }
}

fn workers(ecfg: &mut ensemble::EnsembleConfig, threads: Option<usize>) {
    ecfg.workers = threads;
}

fn json_num(x: f64) -> Value {
    serde_json::Number::from_f64(x).map_or(Value::Null, Value::Number)
}

fn simulate(common: &Common) -> Result<()> {
    let cfg = common.load(None)?;
    let p = cfg.params();
    let mut icfg = cfg.integrator();
    if p.is_driven() {
        icfg = spectral::commensurate(&icfg, p.omega)?;
    }
    let mut ecfg = cfg.ensemble();
    workers(&mut ecfg, common.threads);
    let mut run = Run::start("simulate", common, cfg.clone())?;

    let ms = ensemble::run_ensemble(&p, &cfg.noise(), &icfg, &ecfg)?;
    let csv = run.path("moments.csv");
    persist::write_moment_series(&csv, &ms)?;

    let window = match (p.is_driven(), ecfg.window) {
        (true, None) => spectral::asymptotic_window(icfg.n_steps() as f64 * icfg.dt, p.omega),
        _ => ecfg.resolve_window(&p, &icfg)?,
    };
    let mut results = json!({
        "dt": icfg.dt,
        "t_final": icfg.t_final,
        "window": window,
        "n_valid": ms.n_valid,
    });
    match ensemble::asymptotic_average(&ms, window, ecfg.n_blocks) {
        Ok(avg) => results["asymptotic"] = serde_json::to_value(avg)?,
        Err(e) => results["asymptotic_error"] = json!(e.to_string()),
    }
    if p.temperature > 0.0 {
        for (key, est) in [("heat_capacity", EnergyEstimator::Effective), ("heat_capacity_h0", EnergyEstimator::Bare)] {
            if let Ok(cv) = ensemble::heat_capacity_fluct_with(&ms, window, p.temperature, ecfg.n_blocks, est) {
                results[key] = serde_json::to_value(cv.value)?;
            }
        }
        results["reference"] = serde_json::to_value(analytic::thermal_averages(p.beta(), &p, 0.0))?;
    }
    if p.is_driven() {
        match spectral::fourier_coefficients(&ms, p.omega, window, cfg.m_max) {
            Ok(fc) => results["fourier"] = fourier_json(&fc, &p),
            Err(e) => results["fourier_error"] = json!(e.to_string()),
        }
    }
    run.finish(Some(ms.exclusions), None, results)
}

fn fourier_json(fc: &spectral::FourierCoefficients, p: &SystemParams) -> Value {
    let eta = spectral::power_amplitudes(fc).ok();
    let rows: Vec<Value> = fc
        .harmonics()
        .enumerate()
        .map(|(j, (m, c))| {
            json!({
                "m": m,
                "re": json_num(c.re),
                "im": json_num(c.im),
                "abs": json_num(c.norm()),
                "se_abs": json_num(fc.se_abs[j]),
                "eta": eta.as_ref().map_or(Value::Null, |e| json_num(e.eta[j])),
            })
        })
        .collect();
    json!({
        "omega": fc.omega,
        "epsilon1": fc.epsilon1,
        "window": fc.window,
        "coefficients": rows,
        "hermitian_defect": json_num(fc.hermitian_defect()),
        "parseval_defect": json_num(fc.parseval_defect()),
        "residual_power": json_num(fc.residual_power),
        "p1_linear_response": if p.temperature > 0.0 {
            json_num(analytic::linear_response_p1(p.omega, p.beta(), p, analytic::default_omega_c(p)).p1)
        } else {
            Value::Null
        },
    })
}

fn temperature_grid(grid: &TempGrid, p: &SystemParams) -> Vec<f64> {
    let big = p.big_delta();
    linspace(grid.tmin.unwrap_or(0.2 * big), grid.tmax.unwrap_or(5.0 * big), grid.points)
}

fn thermo_scan(common: &Common, grid: &TempGrid) -> Result<()> {
    let cfg = common.load(None)?;
    let p = cfg.params();
    let temps = temperature_grid(grid, &p);
    let mut ecfg = cfg.ensemble();
    workers(&mut ecfg, common.threads);
    let mut run = Run::start("thermo-scan", common, cfg.clone())?;
    let mut scan = ensemble::thermo_scan(&p, &temps, &cfg.noise(), &cfg.integrator(), &ecfg);
    scan.config_hash = Some(cfg.hash());
    persist::write_scan(&run.path("thermo_scan.csv"), &scan)?;
    let results = json!({
        "temperatures": temps,
        "critical_temperature": analytic::critical_temperature(&p),
    });
    run.finish(None, Some(&scan), results)
}

fn qsr_scan(common: &Common, axis: Option<Axis>) -> Result<()> {
    let mut cfg = common.load(None)?;
    if let Some(a) = axis {
        cfg.scan_axis = match a {
            Axis::Omega => ScanAxis::Omega,
            Axis::Temperature => ScanAxis::Temperature,
        };
    }
    let p = cfg.params();
    let grid = cfg.scan_grid();
    let mut scfg = cfg.spectral();
    workers(&mut scfg.ensemble, common.threads);
    let mut run = Run::start("qsr-scan", common, cfg.clone())?;
    let mut scan = spectral::spectral_scan(&p, cfg.scan_axis, &grid, &scfg);
    scan.config_hash = Some(cfg.hash());
    persist::write_scan(&run.path("qsr_scan.csv"), &scan)?;
    let reports: Vec<_> = ["eta_1", "P0", "abs_P1", "Cv"]
        .iter()
        .filter_map(|obs| spectral::peak_report(&scan, obs, &p))
        .collect();
    persist::write_json(&run.path("peaks.json"), &reports)?;
    let results = json!({
        "axis": cfg.scan_axis,
        "grid": grid,
        "qsr_temperature": analytic::qsr_temperature(&p).ok(),
        "p1_peak_temperature": analytic::p1_peak_temperature(&p).ok(),
    });
    run.finish(None, Some(&scan), results)
}

pub const REFERENCE_COLUMNS: &[&str] = &[
    "T",
    "beta",
    "Z",
    "z_avg",
    "sigmax_avg",
    "coherence_factor",
    "energy",
    "entropy",
    "Cv",
    "Z_classical",
    "z_classical",
    "P1_linear",
];

fn reference(common: &Common, grid: &TempGrid) -> Result<()> {
    let cfg = common.load(None)?;
    let p = cfg.params();
    let temps = temperature_grid(grid, &p);
    let omega_c = cfg.omega_c.unwrap_or_else(|| analytic::default_omega_c(&p));
    let mut run = Run::start("reference", common, cfg.clone())?;
    let rows = temps
        .iter()
        .map(|&t| -> Result<Vec<f64>> {
            let beta = 1.0 / t;
            let r = analytic::thermal_averages(beta, &p, 0.0);
            let zc = analytic::classical_average(|z, _| z, beta, &p)?;
            Ok(vec![
                t,
                beta,
                analytic::quantum_partition(beta, &p),
                r.z_avg,
                r.sigmax_avg,
                r.coherence_factor,
                r.energy_avg,
                r.entropy,
                r.heat_capacity,
                analytic::classical_partition(beta, &p),
                zc,
                analytic::linear_response_p1(p.omega, beta, &p, omega_c).p1,
            ])
        })
        .collect::<Result<Vec<_>>>()?;
    persist::write_table(&run.path("reference.csv"), REFERENCE_COLUMNS, &rows)?;
    let results = json!({
        "critical_temperature": analytic::critical_temperature(&p),
        "qsr_temperature": analytic::qsr_temperature(&p).ok(),
        "p1_peak_temperature": analytic::p1_peak_temperature(&p).ok(),
        "omega_c": omega_c,
    });
    run.finish(None, None, results)
}

pub const FOURIER_COLUMNS: &[&str] = &["m", "frequency", "re_P", "im_P", "abs_P", "se_abs_P", "weight", "eta", "re_U", "im_U"];

fn default_spectrum_window(t: &[f64], omega: f64) -> Result<Window> {
    match t.last() {
        Some(&t_end) => Ok(spectral::asymptotic_window(t_end, omega)),
        None => anyhow::bail!("empty moment series"),
    }
}

fn spectrum(common: &Common, input: &Path) -> Result<()> {
    let sibling = input.parent().map(|d| d.join("summary.json"));
    let base = match sibling.filter(|s| s.exists() && common.config.is_none()) {
        Some(s) => Some(serde_json::from_value::<RunConfig>(persist::read_summary(&s)?.config)?),
        None => None,
    };
    let cfg = common.load(base)?;
    let p = cfg.params();
    let ms = persist::read_moment_series(input, p)?;
    let window = match cfg.window_start.zip(cfg.window_end) {
        Some((a, b)) => Window::new(a, b),
        None => default_spectrum_window(&ms.t, p.omega)?,
    };
    let fc = spectral::fourier_coefficients(&ms, p.omega, window, cfg.m_max)?;
    let eta = spectral::power_amplitudes(&fc).ok();
    let u = spectral::energy_harmonics(&fc, &p).ok();
    let mut run = Run::start("spectrum", common, cfg.clone())?;
    let rows: Vec<Vec<f64>> = fc
        .harmonics()
        .enumerate()
        .map(|(j, (m, c))| {
            vec![
                m as f64,
                m as f64 * fc.omega,
                c.re,
                c.im,
                c.norm(),
                fc.se_abs[j],
                c.norm_sqr(),
                eta.as_ref().map_or(f64::NAN, |e| e.eta[j]),
                u.as_ref().map_or(f64::NAN, |u| u[j].re),
                u.as_ref().map_or(f64::NAN, |u| u[j].im),
            ]
        })
        .collect();
    persist::write_table(&run.path("fourier.csv"), FOURIER_COLUMNS, &rows)?;
    let results = json!({
        "input": input.display().to_string(),
        "fourier": fourier_json(&fc, &p),
    });
    run.finish(None, None, results)
}

pub fn run(cli: Cli) -> Result<()> {
    match &cli.command {
        Command::Simulate(c) => simulate(c),
        Command::ThermoScan { common, grid } => thermo_scan(common, grid),
        Command::QsrScan { common, axis } => qsr_scan(common, *axis),
        Command::Reference { common, grid } => reference(common, grid),
        Command::Spectrum { common, input } => spectrum(common, input),
    }
}

/// Machine-readable description of a failure.
pub fn error_json(err: &anyhow::Error) -> Value {
    let kind = err
        .chain()
        .find_map(|e| e.downcast_ref::<Error>())
        .map_or("error", Error::kind);
    json!({
        "error": {
            "kind": kind,
            "message": format!("{err:#}"),
        }
    })
}
