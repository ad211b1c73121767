//! Parallel trajectory ensembles, moment series and asymptotic thermodynamics.
//!
//! Trajectories are grouped into fixed chunks of consecutive stream ids.
//! Chunks run concurrently and their partial sums are merged strictly in
//! chunk order, so a fixed master seed yields bit-identical moments for any
//! number of worker threads.

use std::f64::consts::PI;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analytic;
use crate::error::{Error, Result};
use crate::model::{self, SystemParams, TlsState};
use crate::stochastic::{self, IntegratorConfig, NoiseConfig};

const CHUNK: usize = 32;
const CHUNKS_PER_BATCH: usize = 16;
/// Largest tolerated fraction of unstable trajectories.
pub const MAX_EXCLUDED_FRACTION: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "snake_case")]
pub enum PopulationInit {
    Fixed(f64),
    /// +z on even stream ids, -z on odd ones.
    Alternating(f64),
    /// Thermal population difference of the quantum two-level system.
    Equilibrium,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "snake_case")]
pub enum PhaseInit {
    /// Uniform on [-π, π].
    Uniform,
    Fixed(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InitPolicy {
    pub population: PopulationInit,
    pub phase: PhaseInit,
}

impl Default for InitPolicy {
    fn default() -> Self {
        Self {
            population: PopulationInit::Fixed(0.999),
            phase: PhaseInit::Uniform,
        }
    }
}

impl InitPolicy {
    pub fn initial_state(&self, p: &SystemParams, ncfg: &NoiseConfig) -> TlsState {
        let mut rng = ncfg.init_rng();
        let z = match self.population {
            PopulationInit::Fixed(z) => z,
            PopulationInit::Alternating(z) => {
                if ncfg.stream_id % 2 == 0 {
                    z
                } else {
                    -z
                }
            }
            PopulationInit::Equilibrium => analytic::thermal_averages(p.beta(), p, 0.0).z_avg,
        };
        let phi = match self.phase {
            PhaseInit::Uniform => rng.random_range(-PI..=PI),
            PhaseInit::Fixed(phi) => phi,
        };
        TlsState::new(z, phi, 0.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnsembleConfig {
    pub n_traj: usize,
    pub init: InitPolicy,
    /// Averaging window; `None` selects the last quarter of the run,
    /// trimmed to whole driving periods when driven.
    pub window: Option<(f64, f64)>,
    pub n_blocks: usize,
    /// Trajectory groups kept separately for error estimates of Fourier
    /// coefficients.
    pub n_groups: usize,
    /// Worker-thread hint; never changes results.
    pub workers: Option<usize>,
}

impl Default for EnsembleConfig {
    fn default() -> Self {
        Self {
            n_traj: 10_000,
            init: InitPolicy::default(),
            window: None,
            n_blocks: 20,
            n_groups: 10,
            workers: None,
        }
    }
}

impl EnsembleConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |field, reason: &str| {
            Err(Error::InvalidParameter {
                field,
                reason: reason.into(),
            })
        };
        if self.n_traj == 0 {
            return bad("n_traj", "must be >= 1");
        }
        if self.n_blocks < 10 {
            return bad("n_blocks", "must be >= 10");
        }
        if self.n_groups == 0 {
            return bad("n_groups", "must be >= 1");
        }
        if let Some((a, b)) = self.window {
            if !(a < b) {
                return bad("window", "start must precede end");
            }
        }
        match self.init.population {
            PopulationInit::Fixed(z) | PopulationInit::Alternating(z) if z.abs() > 1.0 => {
                bad("z0", "must lie in [-1, 1]")
            }
            _ => Ok(()),
        }
    }

    /// Averaging window for a run of the given integrator/parameters.
    pub fn resolve_window(&self, p: &SystemParams, icfg: &IntegratorConfig) -> Result<Window> {
        let t_end = icfg.n_steps() as f64 * icfg.dt;
        let w = match self.window {
            Some((a, b)) => Window::new(a, b),
            None => match p.period() {
                Some(period) => {
                    let periods = (0.25 * t_end / period + 1e-9).floor().max(1.0);
                    Window::new(t_end - periods * period, t_end)
                }
                None => Window::new(0.75 * t_end, t_end),
            },
        };
        if w.end > t_end + 1e-9 * t_end || w.start < 0.0 {
            return Err(Error::Window {
                start: w.start,
                end: w.end,
                reason: format!("outside recorded range [0, {t_end}]"),
            });
        }
        Ok(w)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Window {
    pub start: f64,
    pub end: f64,
}

impl Window {
    pub fn new(start: f64, end: f64) -> Self {
        Self { start, end }
    }

    pub fn len(&self) -> f64 {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.len() <= 0.0
    }

    /// Indices `i0..=i1` of the records covering the window, which must start
    /// and end on recorded times.
    pub fn record_range(&self, times: &[f64]) -> Result<(usize, usize)> {
        let err = |reason: String| Error::Window {
            start: self.start,
            end: self.end,
            reason,
        };
        if times.len() < 2 {
            return Err(err("fewer than two recorded samples".into()));
        }
        let h = times[1] - times[0];
        let locate = |t: f64| -> Result<usize> {
            let k = ((t - times[0]) / h).round();
            if k < 0.0 || k as usize >= times.len() {
                return Err(err(format!("t = {t} outside recorded range")));
            }
            let k = k as usize;
            if (times[k] - t).abs() > 1e-6 * h.max(t.abs() * 1e-3) {
                return Err(err(format!("t = {t} is not a recorded time")));
            }
            Ok(k)
        };
        let (i0, i1) = (locate(self.start)?, locate(self.end)?);
        if i1 <= i0 {
            return Err(err("empty window".into()));
        }
        Ok((i0, i1))
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct ExclusionStats {
    pub total: usize,
    pub excluded: usize,
    pub reflections: usize,
    pub steps: usize,
}

impl ExclusionStats {
    pub fn excluded_fraction(&self) -> f64 {
        self.excluded as f64 / self.total.max(1) as f64
    }

    pub fn reflection_rate(&self) -> f64 {
        self.reflections as f64 / self.steps.max(1) as f64
    }
}

/// Ensemble moments at every recorded time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentSeries {
    pub params: SystemParams,
    pub t: Vec<f64>,
    pub mean_z: Vec<f64>,
    pub se_z: Vec<f64>,
    pub mean_cos_phi: Vec<f64>,
    pub se_cos_phi: Vec<f64>,
    /// Effective energy H_{γ,ξ} with the noise of the producing step.
    pub mean_e: Vec<f64>,
    pub se_e: Vec<f64>,
    pub var_e: Vec<f64>,
    pub mean_h0: Vec<f64>,
    pub se_h0: Vec<f64>,
    pub var_h0: Vec<f64>,
    pub mean_sx: Vec<f64>,
    pub mean_sy: Vec<f64>,
    /// mean_z restricted to each trajectory group (stream_id mod n_groups).
    pub group_mean_z: Vec<Vec<f64>>,
    pub n_valid: usize,
    pub exclusions: ExclusionStats,
}

impl MomentSeries {
    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    /// |⟨σ⟩|² of the ensemble-averaged Bloch vector.
    pub fn bloch_norm_sqr(&self, i: usize) -> f64 {
        self.mean_sx[i].powi(2) + self.mean_sy[i].powi(2) + self.mean_z[i].powi(2)
    }

    /// Series built from an externally supplied population signal, for
    /// post-processing only; all other moments are left at zero.
    pub fn from_population(params: SystemParams, t: Vec<f64>, mean_z: Vec<f64>) -> Self {
        let n = t.len();
        let zeros = vec![0.0; n];
        Self {
            params,
            se_z: zeros.clone(),
            mean_cos_phi: zeros.clone(),
            se_cos_phi: zeros.clone(),
            mean_e: zeros.clone(),
            se_e: zeros.clone(),
            var_e: zeros.clone(),
            mean_h0: zeros.clone(),
            se_h0: zeros.clone(),
            var_h0: zeros.clone(),
            mean_sx: zeros.clone(),
            mean_sy: zeros,
            group_mean_z: vec![],
            n_valid: 0,
            exclusions: ExclusionStats::default(),
            t,
            mean_z,
        }
    }
}

const FIELDS: usize = 6;
const Z: usize = 0;
const COS: usize = 1;
const E: usize = 2;
const H0: usize = 3;
const SX: usize = 4;
const SY: usize = 5;

#[derive(Debug, Clone)]
struct Partial {
    n_records: usize,
    /// [field][record] sums and sums of squares, flattened.
    sum: Vec<f64>,
    sum_sq: Vec<f64>,
    group_sum_z: Vec<f64>,
    group_count: Vec<usize>,
    valid: usize,
    stats: ExclusionStats,
}

impl Partial {
    fn new(n_records: usize, n_groups: usize) -> Self {
        Self {
            n_records,
            sum: vec![0.0; FIELDS * n_records],
            sum_sq: vec![0.0; FIELDS * n_records],
            group_sum_z: vec![0.0; n_groups * n_records],
            group_count: vec![0; n_groups],
            valid: 0,
            stats: ExclusionStats::default(),
        }
    }

    fn add_trajectory(&mut self, values: &[f64], group: usize) {
        for (acc, v) in self.sum.iter_mut().zip(values) {
            *acc += v;
        }
        for (acc, v) in self.sum_sq.iter_mut().zip(values) {
            *acc += v * v;
        }
        let n = self.n_records;
        for (acc, v) in self.group_sum_z[group * n..(group + 1) * n]
            .iter_mut()
            .zip(&values[Z * n..(Z + 1) * n])
        {
            *acc += v;
        }
        self.group_count[group] += 1;
        self.valid += 1;
    }

    fn merge(&mut self, other: &Partial) {
        for (a, b) in self.sum.iter_mut().zip(&other.sum) {
            *a += b;
        }
        for (a, b) in self.sum_sq.iter_mut().zip(&other.sum_sq) {
            *a += b;
        }
        for (a, b) in self.group_sum_z.iter_mut().zip(&other.group_sum_z) {
            *a += b;
        }
        for (a, b) in self.group_count.iter_mut().zip(&other.group_count) {
            *a += b;
        }
        self.valid += other.valid;
        self.stats.total += other.stats.total;
        self.stats.excluded += other.stats.excluded;
        self.stats.reflections += other.stats.reflections;
        self.stats.steps += other.stats.steps;
    }
}

fn run_chunk(
    ids: std::ops::Range<usize>,
    p: &SystemParams,
    ncfg: &NoiseConfig,
    icfg: &IntegratorConfig,
    ecfg: &EnsembleConfig,
) -> Partial {
    let n = icfg.n_records();
    let mut partial = Partial::new(n, ecfg.n_groups);
    let mut values = vec![0.0; FIELDS * n];
    for id in ids {
        let tcfg = ncfg.with_stream(id as u64);
        let init = ecfg.init.initial_state(p, &tcfg);
        let flags = stochastic::integrate_with(init, p, &tcfg, icfg, |k, s| {
            let st = &s.state;
            let b = model::bloch_unchecked(st);
            values[Z * n + k] = st.z;
            values[COS * n + k] = st.phi.cos();
            values[E * n + k] = model::effective_unchecked(st, p, s.xi, icfg.z_cap);
            values[H0 * n + k] = model::h0_unchecked(st, p);
            values[SX * n + k] = b.sx;
            values[SY * n + k] = b.sy;
        });
        partial.stats.total += 1;
        partial.stats.reflections += flags.reflections;
        partial.stats.steps += flags.steps;
        if flags.is_stable() {
            partial.add_trajectory(&values, id % ecfg.n_groups);
        } else {
            partial.stats.excluded += 1;
        }
    }
    partial
}

fn accumulate(p: &SystemParams, ncfg: &NoiseConfig, icfg: &IntegratorConfig, ecfg: &EnsembleConfig) -> Partial {
    let chunks: Vec<_> = (0..ecfg.n_traj)
        .step_by(CHUNK)
        .map(|a| a..(a + CHUNK).min(ecfg.n_traj))
        .collect();
    let mut total = Partial::new(icfg.n_records(), ecfg.n_groups);
    for batch in chunks.chunks(CHUNKS_PER_BATCH) {
        let partials: Vec<Partial> = batch
            .par_iter()
            .map(|ids| run_chunk(ids.clone(), p, ncfg, icfg, ecfg))
            .collect();
        for part in &partials {
            total.merge(part);
        }
    }
    total
}

/// Propagates `ecfg.n_traj` trajectories with stream ids 0..n_traj and
/// returns their moments at every recorded time.
pub fn run_ensemble(
    p: &SystemParams,
    ncfg: &NoiseConfig,
    icfg: &IntegratorConfig,
    ecfg: &EnsembleConfig,
) -> Result<MomentSeries> {
    p.validate()?;
    ncfg.validate()?;
    icfg.validate()?;
    ecfg.validate()?;

    let total = match ecfg.workers {
        Some(w) => rayon::ThreadPoolBuilder::new()
            .num_threads(w.max(1))
            .build()
            .map_err(|e| Error::InvalidParameter {
                field: "workers",
                reason: e.to_string(),
            })?
            .install(|| accumulate(p, ncfg, icfg, ecfg)),
        None => accumulate(p, ncfg, icfg, ecfg),
    };

    let stats = total.stats;
    if stats.excluded_fraction() > MAX_EXCLUDED_FRACTION || total.valid == 0 {
        return Err(Error::TooManyExclusions {
            excluded: stats.excluded,
            total: stats.total,
        });
    }

    let n = total.n_records;
    let count = total.valid as f64;
    let field = |f: usize| -> (Vec<f64>, Vec<f64>, Vec<f64>) {
        let mut mean = Vec::with_capacity(n);
        let mut var = Vec::with_capacity(n);
        let mut se = Vec::with_capacity(n);
        for k in 0..n {
            let m = total.sum[f * n + k] / count;
            let v = if total.valid > 1 {
                ((total.sum_sq[f * n + k] - count * m * m) / (count - 1.0)).max(0.0)
            } else {
                0.0
            };
            mean.push(m);
            var.push(v);
            se.push((v / count).sqrt());
        }
        (mean, var, se)
    };
    let (mean_z, _, se_z) = field(Z);
    let (mean_cos_phi, _, se_cos_phi) = field(COS);
    let (mean_e, var_e, se_e) = field(E);
    let (mean_h0, var_h0, se_h0) = field(H0);
    let (mean_sx, _, _) = field(SX);
    let (mean_sy, _, _) = field(SY);
    let group_mean_z = (0..ecfg.n_groups)
        .filter(|&g| total.group_count[g] > 0)
        .map(|g| {
            let c = total.group_count[g] as f64;
            total.group_sum_z[g * n..(g + 1) * n].iter().map(|s| s / c).collect()
        })
        .collect();

    Ok(MomentSeries {
        params: *p,
        t: (0..n).map(|k| icfg.record_time(k)).collect(),
        mean_z,
        se_z,
        mean_cos_phi,
        se_cos_phi,
        mean_e,
        se_e,
        var_e,
        mean_h0,
        se_h0,
        var_h0,
        mean_sx,
        mean_sy,
        group_mean_z,
        n_valid: total.valid,
        exclusions: stats,
    })
}

/// Mean with a standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub mean: f64,
    pub se: f64,
}

impl Estimate {
    /// |self - other| in units of the combined standard error.
    pub fn z_score(&self, other: &Estimate) -> f64 {
        let se = self.se.hypot(other.se);
        if se == 0.0 {
            if self.mean == other.mean {
                0.0
            } else {
                f64::INFINITY
            }
        } else {
            (self.mean - other.mean).abs() / se
        }
    }
}

/// Block-averaged mean of `series[i0..=i1]`.
pub fn block_average(series: &[f64], n_blocks: usize) -> Result<Estimate> {
    if series.len() < 10 || n_blocks < 10 {
        return Err(Error::Window {
            start: 0.0,
            end: series.len() as f64,
            reason: "fewer than 10 blocks".into(),
        });
    }
    let nb = n_blocks.min(series.len());
    let len = series.len() / nb;
    // Drop the leading remainder so blocks end at the window end.
    let tail = &series[series.len() - nb * len..];
    let blocks: Vec<f64> = tail
        .chunks(len)
        .map(|c| c.iter().sum::<f64>() / len as f64)
        .collect();
    let mean = series.iter().sum::<f64>() / series.len() as f64;
    let bmean = blocks.iter().sum::<f64>() / nb as f64;
    let var = blocks.iter().map(|b| (b - bmean).powi(2)).sum::<f64>() / (nb as f64 - 1.0);
    Ok(Estimate {
        mean,
        se: (var / nb as f64).sqrt(),
    })
}

/// Standard error of a window average from per-time standard errors,
/// treating the window as `n_blocks` independent blocks.
fn ensemble_floor(se: &[f64], n_blocks: usize) -> f64 {
    let mean_se = se.iter().sum::<f64>() / se.len() as f64;
    mean_se / (n_blocks as f64).sqrt()
}

fn window_estimate(series: &[f64], se: &[f64], n_blocks: usize) -> Result<Estimate> {
    let mut e = block_average(series, n_blocks)?;
    // Block scatter of a nearly stationary ensemble mean can vanish; the
    // ensemble noise bounds the error from below.
    e.se = e.se.max(ensemble_floor(se, n_blocks.min(series.len())));
    Ok(e)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AsymptoticAverage {
    pub window: Window,
    pub z: Estimate,
    pub cos_phi: Estimate,
    pub energy: Estimate,
    pub h0: Estimate,
    pub sx: Estimate,
    pub sy: Estimate,
}

pub fn asymptotic_average(ms: &MomentSeries, window: Window, n_blocks: usize) -> Result<AsymptoticAverage> {
    let (i0, i1) = window.record_range(&ms.t)?;
    let r = i0..=i1;
    let est = |v: &[f64], se: &[f64]| window_estimate(&v[r.clone()], &se[r.clone()], n_blocks);
    let zeros = vec![0.0; ms.len()];
    Ok(AsymptoticAverage {
        window,
        z: est(&ms.mean_z, &ms.se_z)?,
        cos_phi: est(&ms.mean_cos_phi, &ms.se_cos_phi)?,
        energy: est(&ms.mean_e, &ms.se_e)?,
        h0: est(&ms.mean_h0, &ms.se_h0)?,
        sx: est(&ms.mean_sx, &zeros)?,
        sy: est(&ms.mean_sy, &zeros)?,
    })
}

/// Which energy function enters the fluctuation formula.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EnergyEstimator {
    /// H_{γ,ξ}, including friction and noise work.
    Effective,
    /// The bare H₀.
    Bare,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeatCapacity {
    pub value: Estimate,
    /// C_v(t) = Var[E](t)/T² at every recorded time.
    pub series: Vec<f64>,
}

pub fn heat_capacity_fluct(ms: &MomentSeries, window: Window, temperature: f64, n_blocks: usize) -> Result<HeatCapacity> {
    heat_capacity_fluct_with(ms, window, temperature, n_blocks, EnergyEstimator::Effective)
}

pub fn heat_capacity_fluct_with(
    ms: &MomentSeries,
    window: Window,
    temperature: f64,
    n_blocks: usize,
    estimator: EnergyEstimator,
) -> Result<HeatCapacity> {
    if !(temperature > 0.0) {
        return Err(Error::InvalidParameter {
            field: "temperature",
            reason: "heat capacity needs T > 0".into(),
        });
    }
    let var = match estimator {
        EnergyEstimator::Effective => &ms.var_e,
        EnergyEstimator::Bare => &ms.var_h0,
    };
    let t2 = temperature * temperature;
    let series: Vec<f64> = var.iter().map(|v| v / t2).collect();
    let (i0, i1) = window.record_range(&ms.t)?;
    let value = block_average(&series[i0..=i1], n_blocks)?;
    Ok(HeatCapacity { value, series })
}

/// Observable-versus-control table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanResult {
    pub control: String,
    pub columns: Vec<String>,
    /// One row per control value; failed points are NaN past the control column.
    pub rows: Vec<Vec<f64>>,
    pub failures: Vec<(usize, String)>,
    pub warnings: Vec<String>,
    pub master_seed: u64,
    pub config_hash: Option<String>,
}

impl ScanResult {
    pub fn new(control: &str, columns: &[&str], master_seed: u64) -> Self {
        Self {
            control: control.into(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: vec![],
            failures: vec![],
            warnings: vec![],
            master_seed,
            config_hash: None,
        }
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let j = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| r[j]).collect())
    }

    pub(crate) fn push_gap(&mut self, index: usize, control: f64, err: &Error) {
        let mut row = vec![f64::NAN; self.columns.len()];
        row[0] = control;
        self.rows.push(row);
        self.failures.push((index, err.to_string()));
    }
}

/// Seed of scan point `index`, decorrelated from the master seed.
pub fn point_seed(master_seed: u64, index: usize) -> u64 {
    // splitmix64 finalizer
    let mut x = master_seed ^ (index as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

/// Relative deviation |sim - ref|/|ref|.
pub fn deviation(simulated: f64, reference: f64) -> f64 {
    (simulated - reference).abs() / reference.abs()
}

pub const THERMO_COLUMNS: &[&str] = &[
    "T",
    "z_eq",
    "se_z",
    "cos_phi_eq",
    "se_cos_phi",
    "E_eq",
    "se_E",
    "Cv_fluct",
    "se_Cv",
    "H0_eq",
    "Cv_H0",
    "z_ref",
    "cos_phi_ref",
    "E_ref",
    "Cv_ref",
    "dev_z",
    "dev_cos_phi",
    "dev_E",
    "dev_Cv",
];

/// Classical white noise needs T well above γ.
pub(crate) fn classical_noise_warning(p: &SystemParams) -> Option<String> {
    (p.temperature * analytic::LINEAR_REGIME_RATIO < p.gamma).then(|| {
        format!(
            "T = {} is not much larger than gamma = {}; classical white noise is questionable",
            p.temperature, p.gamma
        )
    })
}

/// Undriven equilibrium observables against the closed-form references on a
/// temperature grid. Each point runs its own ensemble seeded from the master
/// seed and the point index.
pub fn thermo_scan(
    p: &SystemParams,
    temperatures: &[f64],
    ncfg: &NoiseConfig,
    icfg: &IntegratorConfig,
    ecfg: &EnsembleConfig,
) -> ScanResult {
    let mut out = ScanResult::new("T", THERMO_COLUMNS, ncfg.master_seed);
    for (i, &temp) in temperatures.iter().enumerate() {
        let q = p.with_temperature(temp);
        if let Some(w) = classical_noise_warning(&q) {
            out.warnings.push(w);
        }
        let pcfg = NoiseConfig {
            master_seed: point_seed(ncfg.master_seed, i),
            ..*ncfg
        };
        match thermo_point(&q, &pcfg, icfg, ecfg) {
            Ok(row) => out.rows.push(row),
            Err(e) => out.push_gap(i, temp, &e),
        }
    }
    out
}

fn thermo_point(q: &SystemParams, ncfg: &NoiseConfig, icfg: &IntegratorConfig, ecfg: &EnsembleConfig) -> Result<Vec<f64>> {
    let ms = run_ensemble(q, ncfg, icfg, ecfg)?;
    let window = ecfg.resolve_window(q, icfg)?;
    let avg = asymptotic_average(&ms, window, ecfg.n_blocks)?;
    let cv = heat_capacity_fluct(&ms, window, q.temperature, ecfg.n_blocks)?;
    let cv0 = heat_capacity_fluct_with(&ms, window, q.temperature, ecfg.n_blocks, EnergyEstimator::Bare)?;
    let r = analytic::thermal_averages(q.beta(), q, 0.0);
    Ok(vec![
        q.temperature,
        avg.z.mean,
        avg.z.se,
        avg.cos_phi.mean,
        avg.cos_phi.se,
        avg.energy.mean,
        avg.energy.se,
        cv.value.mean,
        cv.value.se,
        avg.h0.mean,
        cv0.value.mean,
        r.z_avg,
        r.coherence_factor,
        r.energy_avg,
        r.heat_capacity,
        deviation(avg.z.mean, r.z_avg),
        deviation(avg.cos_phi.mean, r.coherence_factor),
        deviation(avg.energy.mean, r.energy_avg),
        deviation(cv.value.mean, r.heat_capacity),
    ])
}
