//! Fourier analysis of the driven asymptotic population and ω/T scans.

use std::f64::consts::PI;

use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::analytic::{self, LINEAR_REGIME_RATIO};
use crate::ensemble::{self, EnsembleConfig, MomentSeries, ScanResult, Window};
use crate::error::{Error, Result};
use crate::model::SystemParams;
use crate::stochastic::{IntegratorConfig, NoiseConfig};

pub const DEFAULT_M_MAX: usize = 4;
/// Fewest driving periods accepted in a Fourier window.
pub const MIN_PERIODS: usize = 10;
/// Driven runs last at least this many periods, so the default window never
/// covers more than the second half of the run.
pub const MIN_RUN_PERIODS: usize = 2 * MIN_PERIODS;

/// Default Fourier window ending at `t_end`: whole periods covering the
/// last quarter of the run, but never fewer than [`MIN_PERIODS`].
pub fn asymptotic_window(t_end: f64, omega: f64) -> Window {
    let period = 2.0 * PI / omega;
    let periods = (0.25 * t_end / period + 1e-9).floor().max(MIN_PERIODS as f64);
    Window::new(t_end - periods * period, t_end)
}

/// Integrator settings whose record grid divides the driving period evenly
/// and whose run length is a whole number of periods.
///
/// The step never grows: dt' = period/n with n the smallest multiple of the
/// record stride such that dt' ≤ dt.
pub fn commensurate(icfg: &IntegratorConfig, omega: f64) -> Result<IntegratorConfig> {
    if !(omega > 0.0 && omega.is_finite()) {
        return Err(Error::InvalidParameter {
            field: "omega",
            reason: "must be > 0".into(),
        });
    }
    let period = 2.0 * PI / omega;
    let stride = icfg.record_stride;
    let per_period = ((period / (icfg.dt * stride as f64)) - 1e-9).ceil().max(1.0) as usize * stride;
    let periods = ((icfg.t_final / period) - 1e-9).ceil().max(MIN_RUN_PERIODS as f64);
    Ok(IntegratorConfig {
        dt: period / per_period as f64,
        t_final: periods * period,
        ..*icfg
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FourierCoefficients {
    pub m_max: usize,
    /// P_m for m = -m_max..=m_max.
    pub p: Vec<Complex64>,
    /// Standard error of |P_m| from trajectory-group scatter (zero when no
    /// groups are available).
    pub se_abs: Vec<f64>,
    pub omega: f64,
    pub epsilon1: f64,
    pub window: Window,
    /// Window average of mean_z².
    pub mean_square: f64,
    /// Window average of the part of mean_z outside |m| ≤ m_max.
    pub residual_power: f64,
}

impl FourierCoefficients {
    pub fn get(&self, m: i64) -> Complex64 {
        self.p[(m + self.m_max as i64) as usize]
    }

    pub fn se(&self, m: i64) -> f64 {
        self.se_abs[(m + self.m_max as i64) as usize]
    }

    pub fn harmonics(&self) -> impl Iterator<Item = (i64, Complex64)> + '_ {
        let off = self.m_max as i64;
        self.p.iter().enumerate().map(move |(i, c)| (i as i64 - off, *c))
    }

    /// max_m |P_{-m} - conj(P_m)|.
    pub fn hermitian_defect(&self) -> f64 {
        (0..=self.m_max as i64)
            .map(|m| (self.get(-m) - self.get(m).conj()).norm())
            .fold(0.0, f64::max)
    }

    /// |mean(z²) - Σ|P_m|² - residual|; zero up to rounding when the window
    /// is a whole number of periods on the record grid.
    pub fn parseval_defect(&self) -> f64 {
        let lines: f64 = self.p.iter().map(|c| c.norm_sqr()).sum();
        (self.mean_square - lines - self.residual_power).abs()
    }
}

struct Projection {
    p: Vec<Complex64>,
    mean_square: f64,
    residual_power: f64,
}

fn project(t: &[f64], z: &[f64], omega: f64, m_max: usize) -> Projection {
    let n = t.len();
    // Trapezoid weights normalized to the window length.
    let w = |k: usize| if k == 0 || k == n - 1 { 0.5 } else { 1.0 } / (n - 1) as f64;
    let mm = m_max as i64;
    let p: Vec<Complex64> = (-mm..=mm)
        .map(|m| {
            t.iter()
                .zip(z)
                .enumerate()
                .map(|(k, (&tk, &zk))| Complex64::from_polar(w(k) * zk, m as f64 * omega * tk))
                .sum()
        })
        .collect();
    let mut mean_square = 0.0;
    let mut residual_power = 0.0;
    for (k, (&tk, &zk)) in t.iter().zip(z).enumerate() {
        let fit: f64 = (-mm..=mm)
            .zip(&p)
            .map(|(m, c)| (c * Complex64::from_polar(1.0, -(m as f64) * omega * tk)).re)
            .sum();
        mean_square += w(k) * zk * zk;
        residual_power += w(k) * (zk - fit).powi(2);
    }
    Projection {
        p,
        mean_square,
        residual_power,
    }
}

fn check_periods(window: Window, omega: f64) -> Result<()> {
    let err = |reason: String| Error::Window {
        start: window.start,
        end: window.end,
        reason,
    };
    if !(omega > 0.0) {
        return Err(err("driving frequency must be > 0".into()));
    }
    let periods = window.len() * omega / (2.0 * PI);
    if (periods - periods.round()).abs() > 1e-6 * periods.max(1.0) {
        return Err(err(format!("spans {periods:.6} periods, not a whole number")));
    }
    if (periods.round() as usize) < MIN_PERIODS {
        return Err(err(format!("spans {} periods, need at least {MIN_PERIODS}", periods.round())));
    }
    Ok(())
}

/// P_m = (1/T_w)∫ mean_z(t) e^{imωt} dt over the window, by the trapezoid rule.
pub fn fourier_coefficients(ms: &MomentSeries, omega: f64, window: Window, m_max: usize) -> Result<FourierCoefficients> {
    check_periods(window, omega)?;
    let (i0, i1) = window.record_range(&ms.t)?;
    let t = &ms.t[i0..=i1];
    let full = project(t, &ms.mean_z[i0..=i1], omega, m_max);

    let groups = &ms.group_mean_z;
    let se_abs = if groups.len() >= 2 {
        let g = groups.len() as f64;
        let per_group: Vec<Vec<f64>> = groups
            .iter()
            .map(|z| project(t, &z[i0..=i1], omega, m_max).p.iter().map(|c| c.norm()).collect())
            .collect();
        (0..full.p.len())
            .map(|j| {
                let mean = per_group.iter().map(|v| v[j]).sum::<f64>() / g;
                let var = per_group.iter().map(|v| (v[j] - mean).powi(2)).sum::<f64>() / (g - 1.0);
                (var / g).sqrt()
            })
            .collect()
    } else {
        vec![0.0; full.p.len()]
    };

    Ok(FourierCoefficients {
        m_max,
        p: full.p,
        se_abs,
        omega,
        epsilon1: ms.params.epsilon1,
        window,
        mean_square: full.mean_square,
        residual_power: full.residual_power,
    })
}

/// C̄^asy(τ) = Σ_m |P_m|² e^{-imωτ}; the sum is real by Hermitian symmetry.
pub fn autocorrelation_asy(fc: &FourierCoefficients, taus: &[f64]) -> Vec<f64> {
    taus.iter()
        .map(|&tau| {
            fc.harmonics()
                .map(|(m, c)| c.norm_sqr() * (m as f64 * fc.omega * tau).cos())
                .sum()
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerSpectrum {
    /// Line frequencies mω for m = -m_max..=m_max.
    pub frequencies: Vec<f64>,
    /// |P_m|².
    pub weights: Vec<f64>,
    /// η_m = 4π|P_m/ε₁|².
    pub eta: Vec<f64>,
}

impl PowerSpectrum {
    pub fn eta_at(&self, m: i64) -> f64 {
        self.eta[(m + (self.eta.len() as i64 - 1) / 2) as usize]
    }
}

fn require_driving(epsilon1: f64) -> Result<()> {
    if epsilon1 > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter {
            field: "epsilon1",
            reason: "power amplitudes need epsilon1 > 0".into(),
        })
    }
}

pub fn power_amplitudes(fc: &FourierCoefficients) -> Result<PowerSpectrum> {
    require_driving(fc.epsilon1)?;
    let scale = 4.0 * PI / (fc.epsilon1 * fc.epsilon1);
    Ok(PowerSpectrum {
        frequencies: fc.harmonics().map(|(m, _)| m as f64 * fc.omega).collect(),
        weights: fc.p.iter().map(|c| c.norm_sqr()).collect(),
        eta: fc.p.iter().map(|c| scale * c.norm_sqr()).collect(),
    })
}

fn energy_scale(p: &SystemParams) -> Result<f64> {
    if p.epsilon == 0.0 {
        return Err(Error::InvalidParameter {
            field: "epsilon",
            reason: "energy harmonics are singular at epsilon = 0".into(),
        });
    }
    let big = p.big_delta();
    Ok(-big * big / p.epsilon)
}

/// U_m = -(Δ²/ε) P_m.
pub fn energy_harmonics(fc: &FourierCoefficients, p: &SystemParams) -> Result<Vec<Complex64>> {
    let k = energy_scale(p)?;
    Ok(fc.p.iter().map(|c| c * k).collect())
}

/// C_{v,m} = -(Δ²/ε) ∂P_m/∂T from coefficients at T - dT and T + dT.
pub fn heat_capacity_harmonics(
    lower: &FourierCoefficients,
    upper: &FourierCoefficients,
    d_temperature: f64,
    p: &SystemParams,
) -> Result<Vec<Complex64>> {
    let k = energy_scale(p)?;
    if lower.m_max != upper.m_max || !(d_temperature > 0.0) {
        return Err(Error::InvalidParameter {
            field: "d_temperature",
            reason: "need matching coefficient sets and dT > 0".into(),
        });
    }
    Ok(lower
        .p
        .iter()
        .zip(&upper.p)
        .map(|(lo, hi)| (hi - lo) * (k / (2.0 * d_temperature)))
        .collect())
}

/// Everything needed to turn a parameter point into Fourier coefficients.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectralConfig {
    pub noise: NoiseConfig,
    pub integrator: IntegratorConfig,
    pub ensemble: EnsembleConfig,
    pub m_max: usize,
    /// None selects 10Δ.
    pub omega_c: Option<f64>,
}

impl Default for SpectralConfig {
    fn default() -> Self {
        Self {
            noise: NoiseConfig::default(),
            integrator: IntegratorConfig::default(),
            ensemble: EnsembleConfig::default(),
            m_max: DEFAULT_M_MAX,
            omega_c: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralPoint {
    pub params: SystemParams,
    pub fourier: FourierCoefficients,
    pub heat_capacity: f64,
    pub se_heat_capacity: f64,
    pub exclusions: ensemble::ExclusionStats,
}

/// Runs one ensemble at `p` on a commensurate grid and extracts its
/// Fourier coefficients over the asymptotic window.
pub fn spectral_point(p: &SystemParams, cfg: &SpectralConfig) -> Result<SpectralPoint> {
    let icfg = commensurate(&cfg.integrator, p.omega)?;
    let ms = ensemble::run_ensemble(p, &cfg.noise, &icfg, &cfg.ensemble)?;
    let window = match cfg.ensemble.window {
        Some(_) => cfg.ensemble.resolve_window(p, &icfg)?,
        None => asymptotic_window(icfg.n_steps() as f64 * icfg.dt, p.omega),
    };
    let fourier = fourier_coefficients(&ms, p.omega, window, cfg.m_max)?;
    let (heat_capacity, se_heat_capacity) = if p.temperature > 0.0 {
        let cv = ensemble::heat_capacity_fluct(&ms, window, p.temperature, cfg.ensemble.n_blocks)?;
        (cv.value.mean, cv.value.se)
    } else {
        (f64::NAN, f64::NAN)
    };
    Ok(SpectralPoint {
        params: *p,
        fourier,
        heat_capacity,
        se_heat_capacity,
        exclusions: ms.exclusions,
    })
}

pub const SPECTRAL_COLUMNS: &[&str] = &[
    "control",
    "omega",
    "T",
    "eta_1",
    "se_eta_1",
    "P0",
    "abs_P0",
    "se_P0",
    "abs_P1",
    "se_P1",
    "abs_P2",
    "se_P2",
    "Cv",
    "se_Cv",
    "hermitian_defect",
    "parseval_defect",
    "residual_power",
    "P1_linear",
];

fn spectral_row(control: f64, sp: &SpectralPoint, omega_c: f64) -> Vec<f64> {
    let fc = &sp.fourier;
    let q = &sp.params;
    let abs1 = fc.get(1).norm();
    let (eta1, se_eta1) = if q.epsilon1 > 0.0 {
        let k = 4.0 * PI / (q.epsilon1 * q.epsilon1);
        (k * abs1 * abs1, 2.0 * k * abs1 * fc.se(1))
    } else {
        (f64::NAN, f64::NAN)
    };
    let p1_lin = if q.temperature > 0.0 {
        analytic::linear_response_p1(q.omega, q.beta(), q, omega_c).p1
    } else {
        f64::NAN
    };
    let at = |m: i64| if (m as usize) <= fc.m_max { fc.get(m).norm() } else { f64::NAN };
    let se_at = |m: i64| if (m as usize) <= fc.m_max { fc.se(m) } else { f64::NAN };
    vec![
        control,
        q.omega,
        q.temperature,
        eta1,
        se_eta1,
        fc.get(0).re,
        at(0),
        se_at(0),
        at(1),
        se_at(1),
        at(2),
        se_at(2),
        sp.heat_capacity,
        sp.se_heat_capacity,
        fc.hermitian_defect(),
        fc.parseval_defect(),
        fc.residual_power,
        p1_lin,
    ]
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScanAxis {
    Omega,
    Temperature,
}

impl ScanAxis {
    pub fn name(&self) -> &'static str {
        match self {
            ScanAxis::Omega => "omega",
            ScanAxis::Temperature => "T",
        }
    }

    fn apply(&self, p: &SystemParams, value: f64) -> SystemParams {
        match self {
            ScanAxis::Omega => SystemParams { omega: value, ..*p },
            ScanAxis::Temperature => p.with_temperature(value),
        }
    }
}

/// Spectral observables along one axis. Every point gets its own seed
/// derived from the master seed and its index; failures become NaN rows.
pub fn spectral_scan(p: &SystemParams, axis: ScanAxis, grid: &[f64], cfg: &SpectralConfig) -> ScanResult {
    let mut out = ScanResult::new(axis.name(), SPECTRAL_COLUMNS, cfg.noise.master_seed);
    let omega_c = cfg.omega_c.unwrap_or_else(|| analytic::default_omega_c(p));
    for (i, &value) in grid.iter().enumerate() {
        let q = axis.apply(p, value);
        if let Some(w) = ensemble::classical_noise_warning(&q) {
            out.warnings.push(w);
        }
        let pcfg = SpectralConfig {
            noise: NoiseConfig {
                master_seed: ensemble::point_seed(cfg.noise.master_seed, i),
                ..cfg.noise
            },
            ..*cfg
        };
        match spectral_point(&q, &pcfg) {
            Ok(sp) => out.rows.push(spectral_row(value, &sp, omega_c)),
            Err(e) => out.push_gap(i, value, &e),
        }
    }
    out
}

/// η₁(ω) at fixed temperature.
pub fn qsr_scan_omega(p: &SystemParams, omegas: &[f64], cfg: &SpectralConfig) -> ScanResult {
    spectral_scan(p, ScanAxis::Omega, omegas, cfg)
}

/// η₁(T) at fixed driving frequency.
pub fn qsr_scan_temperature(p: &SystemParams, temperatures: &[f64], cfg: &SpectralConfig) -> ScanResult {
    spectral_scan(p, ScanAxis::Temperature, temperatures, cfg)
}

/// ⟨z₀⟩ = P₀ along either axis (column "P0").
pub fn population_scan(p: &SystemParams, axis: ScanAxis, grid: &[f64], cfg: &SpectralConfig) -> ScanResult {
    spectral_scan(p, axis, grid, cfg)
}

/// Asymptotic C_v(ω) for each temperature in `temperatures`, rows grouped
/// by temperature.
pub fn heat_capacity_scan(p: &SystemParams, omegas: &[f64], temperatures: &[f64], cfg: &SpectralConfig) -> ScanResult {
    let mut out = ScanResult::new("omega", SPECTRAL_COLUMNS, cfg.noise.master_seed);
    for (j, &temp) in temperatures.iter().enumerate() {
        let sub_cfg = SpectralConfig {
            noise: NoiseConfig {
                master_seed: ensemble::point_seed(cfg.noise.master_seed, usize::MAX - j),
                ..cfg.noise
            },
            ..*cfg
        };
        let part = spectral_scan(&p.with_temperature(temp), ScanAxis::Omega, omegas, &sub_cfg);
        let offset = out.rows.len();
        out.rows.extend(part.rows);
        out.failures
            .extend(part.failures.into_iter().map(|(i, e)| (i + offset, e)));
        out.warnings.extend(part.warnings);
    }
    out
}

/// Runs `p` at T - dT, T and T + dT with common random numbers and
/// returns (U_m, C_{v,m}) at T. `rel_step` is dT/T (0.05 by default).
pub fn energy_harmonics_fd(
    p: &SystemParams,
    cfg: &SpectralConfig,
    rel_step: f64,
) -> Result<(Vec<Complex64>, Vec<Complex64>)> {
    let d_t = rel_step * p.temperature;
    if !(d_t > 0.0) || d_t >= p.temperature {
        return Err(Error::InvalidParameter {
            field: "rel_step",
            reason: "need 0 < dT < T".into(),
        });
    }
    let mid = spectral_point(p, cfg)?;
    let lo = spectral_point(&p.with_temperature(p.temperature - d_t), cfg)?;
    let hi = spectral_point(&p.with_temperature(p.temperature + d_t), cfg)?;
    Ok((
        energy_harmonics(&mid.fourier, p)?,
        heat_capacity_harmonics(&lo.fourier, &hi.fourier, d_t, p)?,
    ))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Peak {
    pub index: usize,
    pub location: f64,
    pub height: f64,
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Interior local maxima whose height above the median exceeds three
/// median absolute deviations, sorted by decreasing height. NaN gaps are
/// skipped.
pub fn find_peaks(x: &[f64], y: &[f64]) -> Vec<Peak> {
    let pts: Vec<(usize, f64, f64)> = x
        .iter()
        .zip(y)
        .enumerate()
        .filter(|(_, (_, v))| v.is_finite())
        .map(|(i, (a, b))| (i, *a, *b))
        .collect();
    if pts.len() < 3 {
        return vec![];
    }
    let ys: Vec<f64> = pts.iter().map(|p| p.2).collect();
    let med = median(ys.clone());
    let mad = median(ys.iter().map(|v| (v - med).abs()).collect());
    let mut peaks: Vec<Peak> = pts
        .windows(3)
        .filter(|w| w[1].2 > w[0].2 && w[1].2 >= w[2].2 && w[1].2 - med > 3.0 * mad)
        .map(|w| Peak {
            index: w[1].0,
            location: w[1].1,
            height: w[1].2,
        })
        .collect();
    peaks.sort_by(|a, b| b.height.total_cmp(&a.height));
    peaks
}

/// Distance of a peak to the nearest member of a comb base/n, n = 1..=n_max.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CombMatch {
    pub base: f64,
    pub n: u32,
    pub distance: f64,
}

pub fn nearest_comb(location: f64, base: f64, n_max: u32) -> CombMatch {
    (1..=n_max)
        .map(|n| CombMatch {
            base,
            n,
            distance: (location - base / n as f64).abs(),
        })
        .min_by(|a, b| a.distance.total_cmp(&b.distance))
        .expect("n_max >= 1")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeakEntry {
    pub peak: Peak,
    /// Nearest ε/n.
    pub bias_comb: CombMatch,
    /// Nearest Δ/n.
    pub splitting_comb: CombMatch,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TemperatureRegime {
    /// η₁ falls with T throughout.
    MonotoneDecay,
    /// A dip followed by a rise to a maximum.
    MinimumThenMaximum,
    /// A single interior maximum.
    Resonance,
    Unclassified,
}

impl TemperatureRegime {
    /// Behaviour expected from the driving strength relative to the bias.
    pub fn expected(p: &SystemParams) -> Self {
        if p.epsilon1 > p.epsilon.abs() {
            TemperatureRegime::MonotoneDecay
        } else if p.epsilon1 <= LINEAR_REGIME_RATIO * p.epsilon.abs() {
            TemperatureRegime::Resonance
        } else {
            TemperatureRegime::MinimumThenMaximum
        }
    }

    /// Shape of a measured curve ordered by increasing T. Differences within
    /// `tol` count as flat.
    pub fn classify(y: &[f64], tol: &[f64]) -> Self {
        let pts: Vec<(f64, f64)> = y
            .iter()
            .zip(tol)
            .filter(|(v, _)| v.is_finite())
            .map(|(a, b)| (*a, if b.is_finite() { *b } else { 0.0 }))
            .collect();
        if pts.len() < 3 {
            return TemperatureRegime::Unclassified;
        }
        let rises: Vec<i8> = pts
            .windows(2)
            .map(|w| {
                let d = w[1].0 - w[0].0;
                let s = w[0].1.hypot(w[1].1);
                if d > s {
                    1
                } else if d < -s {
                    -1
                } else {
                    0
                }
            })
            .collect();
        if rises.iter().all(|&r| r <= 0) && rises.contains(&-1) {
            return TemperatureRegime::MonotoneDecay;
        }
        let first_up = rises.iter().position(|&r| r == 1);
        let first_down = rises.iter().position(|&r| r == -1);
        match (first_down, first_up) {
            (Some(d), Some(u)) if d < u && rises[u..].contains(&-1) => TemperatureRegime::MinimumThenMaximum,
            (Some(d), Some(u)) if u < d => TemperatureRegime::Resonance,
            (None, Some(_)) => TemperatureRegime::Unclassified,
            _ => TemperatureRegime::Unclassified,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeakReport {
    pub axis: String,
    pub observable: String,
    pub peaks: Vec<PeakEntry>,
    pub regime: Option<TemperatureRegime>,
    pub expected_regime: Option<TemperatureRegime>,
}

/// Peaks of `observable` in a scan, each matched against the ε/n and Δ/n
/// frequency combs. Temperature scans are also classified.
pub fn peak_report(scan: &ScanResult, observable: &str, p: &SystemParams) -> Option<PeakReport> {
    let x = scan.column(&scan.columns[0])?;
    let y = scan.column(observable)?;
    let peaks = find_peaks(&x, &y)
        .into_iter()
        .map(|peak| PeakEntry {
            peak,
            bias_comb: nearest_comb(peak.location, p.epsilon.abs(), 4),
            splitting_comb: nearest_comb(peak.location, p.big_delta(), 4),
        })
        .collect();
    let (regime, expected) = if scan.control == ScanAxis::Temperature.name() {
        let se = scan
            .column(&format!("se_{}", observable.trim_start_matches("abs_")))
            .unwrap_or_else(|| vec![0.0; y.len()]);
        (Some(TemperatureRegime::classify(&y, &se)), Some(TemperatureRegime::expected(p)))
    } else {
        (None, None)
    };
    Some(PeakReport {
        axis: scan.control.clone(),
        observable: observable.into(),
        peaks,
        regime,
        expected_regime: expected,
    })
}

/// Welch estimate of the one-sided power spectral density of a uniformly
/// sampled series, with Hann-windowed half-overlapping segments. For
/// visual inspection only.
pub fn welch_periodogram(series: &[f64], sample_spacing: f64, segment: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    if segment < 4 || segment > series.len() || !(sample_spacing > 0.0) {
        return Err(Error::InvalidParameter {
            field: "segment",
            reason: format!("need 4 <= segment <= {} and positive spacing", series.len()),
        });
    }
    let hann: Vec<f64> = (0..segment)
        .map(|k| 0.5 - 0.5 * (2.0 * PI * k as f64 / segment as f64).cos())
        .collect();
    let norm: f64 = hann.iter().map(|w| w * w).sum::<f64>() / sample_spacing;
    let fft = FftPlanner::new().plan_fft_forward(segment);
    let bins = segment / 2 + 1;
    let mut psd = vec![0.0; bins];
    let mut count = 0usize;
    let hop = segment / 2;
    let mut start = 0;
    while start + segment <= series.len() {
        let seg = &series[start..start + segment];
        let mean = seg.iter().sum::<f64>() / segment as f64;
        let mut buf: Vec<Complex64> = seg
            .iter()
            .zip(&hann)
            .map(|(x, w)| Complex64::new((x - mean) * w, 0.0))
            .collect();
        fft.process(&mut buf);
        for (k, acc) in psd.iter_mut().enumerate() {
            let two_sided = if k == 0 || (segment % 2 == 0 && k == segment / 2) { 1.0 } else { 2.0 };
            *acc += two_sided * buf[k].norm_sqr() / norm;
        }
        count += 1;
        start += hop;
    }
    psd.iter_mut().for_each(|v| *v /= count as f64);
    let freqs = (0..bins)
        .map(|k| 2.0 * PI * k as f64 / (segment as f64 * sample_spacing))
        .collect();
    Ok((freqs, psd))
}
