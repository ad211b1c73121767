//! Seeded white noise and the stochastic integrator for single trajectories.
//!
//! The noise enters only the population equation. Each step draws one
//! Gaussian force ξ with variance c·γ·T/dt and holds it fixed over the step,
//! so every stage of the scheme sees the same realization. With additive
//! noise both schemes converge to the Stratonovich (= Itô) solution, and with
//! ξ = 0 they reduce to the deterministic Heun and classical RK4 methods.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{self, SystemParams, TlsState, DEFAULT_Z_CAP};

/// Stream ids with this bit set are reserved for initial-condition draws.
const INIT_STREAM_BIT: u64 = 1 << 63;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseConfig {
    /// c in Var[ξ_k] = c·γ·T/dt.
    pub fdt_prefactor: f64,
    pub master_seed: u64,
    pub stream_id: u64,
}

impl Default for NoiseConfig {
    fn default() -> Self {
        Self {
            fdt_prefactor: 2.0,
            master_seed: 0,
            stream_id: 0,
        }
    }
}

impl NoiseConfig {
    pub fn with_stream(self, stream_id: u64) -> Self {
        Self { stream_id, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        if self.fdt_prefactor > 0.0 && self.fdt_prefactor.is_finite() {
            Ok(())
        } else {
            Err(Error::InvalidParameter {
                field: "fdt_prefactor",
                reason: "must be > 0".into(),
            })
        }
    }

    pub fn variance(&self, p: &SystemParams, dt: f64) -> f64 {
        self.fdt_prefactor * p.gamma * p.temperature / dt
    }

    fn rng(&self, stream: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.master_seed);
        rng.set_stream(stream);
        rng
    }

    /// Generator for the initial condition of this trajectory, independent
    /// of its noise stream.
    pub fn init_rng(&self) -> ChaCha8Rng {
        self.rng(self.stream_id | INIT_STREAM_BIT)
    }
}

/// Per-trajectory source of the discretized white-noise force.
#[derive(Debug, Clone)]
pub struct NoiseSource {
    rng: ChaCha8Rng,
    std_dev: f64,
}

impl NoiseSource {
    pub fn new(cfg: &NoiseConfig, p: &SystemParams, dt: f64) -> Self {
        Self {
            rng: cfg.rng(cfg.stream_id & !INIT_STREAM_BIT),
            std_dev: cfg.variance(p, dt).sqrt(),
        }
    }

    pub fn std_dev(&self) -> f64 {
        self.std_dev
    }

    /// Next ξ_k; exactly zero when the variance vanishes.
    pub fn gaussian_step_noise(&mut self) -> f64 {
        if self.std_dev == 0.0 {
            return 0.0;
        }
        let n: f64 = self.rng.sample(StandardNormal);
        self.std_dev * n
    }
}

/// Deterministic skeleton of the stochastic step.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    /// Predictor–corrector, second order in the noiseless limit.
    Heun,
    /// Classical four-stage Runge–Kutta, fourth order in the noiseless limit.
    #[default]
    Rk4,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntegratorConfig {
    pub scheme: Scheme,
    pub dt: f64,
    pub t_final: f64,
    pub record_stride: usize,
    pub z_cap: f64,
    /// Largest |dz/dt| accepted in a single step.
    pub stability_threshold: f64,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        Self {
            scheme: Scheme::default(),
            dt: 1e-2,
            t_final: 500.0,
            record_stride: 10,
            z_cap: DEFAULT_Z_CAP,
            stability_threshold: 1e3,
        }
    }
}

impl IntegratorConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |field, reason: &str| {
            Err(Error::InvalidParameter {
                field,
                reason: reason.into(),
            })
        };
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return bad("dt", "must be > 0");
        }
        if !(self.t_final > 0.0 && self.t_final.is_finite()) {
            return bad("t_final", "must be > 0");
        }
        if self.record_stride == 0 {
            return bad("record_stride", "must be >= 1");
        }
        if !(self.z_cap > 0.0 && self.z_cap < 1.0) {
            return bad("z_cap", "must lie in (0, 1)");
        }
        if !(self.stability_threshold > 0.0) {
            return bad("stability_threshold", "must be > 0");
        }
        Ok(())
    }

    pub fn n_steps(&self) -> usize {
        // Tolerate t_final/dt landing a hair above an integer.
        (self.t_final / self.dt - 1e-9).ceil().max(0.0) as usize
    }

    /// Number of recorded samples including t = 0.
    pub fn n_records(&self) -> usize {
        self.n_steps() / self.record_stride + 1
    }

    pub fn record_time(&self, index: usize) -> f64 {
        (index * self.record_stride) as f64 * self.dt
    }
}

/// Folds z back into [-1, 1]: z > 1 ↦ 2 - z, z < -1 ↦ -2 - z.
pub fn reflect_z(z: f64) -> f64 {
    if z.abs() <= 1.0 {
        return z;
    }
    let mut z = z;
    while z.abs() > 1.0 && z.is_finite() {
        z = if z > 1.0 { 2.0 - z } else { -2.0 - z };
    }
    z
}

/// A recorded state together with the noise force of the step that produced it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub state: TlsState,
    pub xi: f64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryFlags {
    /// Time of the step that exceeded the stability threshold.
    pub unstable_at: Option<f64>,
    pub reflections: usize,
    pub steps: usize,
}

impl TrajectoryFlags {
    pub fn is_stable(&self) -> bool {
        self.unstable_at.is_none()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub samples: Vec<Sample>,
    pub flags: TrajectoryFlags,
}

/// Result of a single accepted step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepOutcome {
    pub state: TlsState,
    pub xi: f64,
    pub reflected: bool,
}

/// One stochastic step of length `icfg.dt`.
pub fn step(
    s: &TlsState,
    p: &SystemParams,
    noise: &mut NoiseSource,
    icfg: &IntegratorConfig,
) -> Result<StepOutcome> {
    if s.z.abs() > 1.0 {
        return Err(Error::Domain { z: s.z });
    }
    step_with_xi(s, p, noise.gaussian_step_noise(), icfg)
}

#[inline]
fn drift(s: &TlsState, p: &SystemParams, xi: f64, z_cap: f64) -> (f64, f64) {
    let d = model::rhs_unchecked(s, p, p.gamma, 0.0, z_cap);
    (d.dz + xi, d.dphi)
}

#[inline]
fn stage(s: &TlsState, k: (f64, f64), h: f64) -> TlsState {
    TlsState {
        z: reflect_z(s.z + k.0 * h),
        phi: s.phi + k.1 * h,
        t: s.t + h,
    }
}

#[inline]
fn step_with_xi(s: &TlsState, p: &SystemParams, xi: f64, icfg: &IntegratorConfig) -> Result<StepOutcome> {
    let dt = icfg.dt;
    let cap = icfg.z_cap;
    let (dz, dphi) = match icfg.scheme {
        Scheme::Heun => {
            let k1 = drift(s, p, xi, cap);
            let k2 = drift(&stage(s, k1, dt), p, xi, cap);
            (0.5 * (k1.0 + k2.0) * dt, 0.5 * (k1.1 + k2.1) * dt)
        }
        Scheme::Rk4 => {
            let h = 0.5 * dt;
            let k1 = drift(s, p, xi, cap);
            let k2 = drift(&stage(s, k1, h), p, xi, cap);
            let k3 = drift(&stage(s, k2, h), p, xi, cap);
            let k4 = drift(&stage(s, k3, dt), p, xi, cap);
            (
                (k1.0 + 2.0 * (k2.0 + k3.0) + k4.0) * dt / 6.0,
                (k1.1 + 2.0 * (k2.1 + k3.1) + k4.1) * dt / 6.0,
            )
        }
    };
    if !(dz.abs() <= icfg.stability_threshold * dt) {
        return Err(Error::UnstableStep {
            t: s.t + dt,
            dz: dz.abs(),
        });
    }
    let z = s.z + dz;
    Ok(StepOutcome {
        state: TlsState {
            z: reflect_z(z),
            phi: s.phi + dphi,
            t: s.t + dt,
        },
        xi,
        reflected: z.abs() > 1.0,
    })
}

/// Integrates one trajectory, handing every recorded sample to `visit`
/// together with its record index. Stops at the first unstable step.
pub fn integrate_with<F>(
    init: TlsState,
    p: &SystemParams,
    ncfg: &NoiseConfig,
    icfg: &IntegratorConfig,
    mut visit: F,
) -> TrajectoryFlags
where
    F: FnMut(usize, &Sample),
{
    let mut noise = NoiseSource::new(ncfg, p, icfg.dt);
    let mut flags = TrajectoryFlags::default();
    let mut state = init;
    visit(0, &Sample { state, xi: 0.0 });
    for k in 1..=icfg.n_steps() {
        let xi = noise.gaussian_step_noise();
        match step_with_xi(&state, p, xi, icfg) {
            Ok(out) => {
                state = out.state;
                // Exact grid times, free of accumulated round-off.
                state.t = k as f64 * icfg.dt;
                flags.reflections += out.reflected as usize;
                flags.steps = k;
                if k % icfg.record_stride == 0 {
                    visit(k / icfg.record_stride, &Sample { state, xi });
                }
            }
            Err(Error::UnstableStep { t, .. }) => {
                flags.unstable_at = Some(t);
                break;
            }
            Err(_) => unreachable!("step_with_xi only reports instability"),
        }
    }
    flags
}

pub fn propagate_trajectory(
    init: TlsState,
    p: &SystemParams,
    ncfg: &NoiseConfig,
    icfg: &IntegratorConfig,
) -> Result<Trajectory> {
    p.validate()?;
    ncfg.validate()?;
    icfg.validate()?;
    if init.z.abs() > 1.0 {
        return Err(Error::Domain { z: init.z });
    }
    let mut samples = Vec::with_capacity(icfg.n_records());
    let flags = integrate_with(init, p, ncfg, icfg, |_, s| samples.push(*s));
    Ok(Trajectory { samples, flags })
}
