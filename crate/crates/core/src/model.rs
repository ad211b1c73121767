//! Canonical-variable description of a biased two-level system.
//!
//! The state is the pair (z, Φ): population difference and phase difference
//! between the left and right localized states. Time is measured in units of
//! (2δ)⁻¹ and energies in units of δ, so the bias only enters through ε/δ.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest |z| used inside denominators of the equations of motion.
pub const DEFAULT_Z_CAP: f64 = 1.0 - 1e-12;

/// Physical parameters of the (possibly driven) open two-level system.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SystemParams {
    /// Static bias ε.
    pub epsilon: f64,
    /// Tunneling rate δ.
    pub delta: f64,
    /// Driving amplitude ε₁.
    pub epsilon1: f64,
    /// Driving angular frequency ω.
    pub omega: f64,
    /// Ohmic friction γ.
    pub gamma: f64,
    /// Bath temperature (k_B = 1).
    pub temperature: f64,
}

impl Default for SystemParams {
    fn default() -> Self {
        Self {
            epsilon: 1.2,
            delta: 1.0,
            epsilon1: 0.0,
            omega: 1.0,
            gamma: 0.1,
            temperature: 1.0,
        }
    }
}

impl SystemParams {
    /// Undriven parameters with the given bias, tunneling, friction and temperature.
    pub fn undriven(epsilon: f64, delta: f64, gamma: f64, temperature: f64) -> Self {
        Self {
            epsilon,
            delta,
            epsilon1: 0.0,
            omega: 1.0,
            gamma,
            temperature,
        }
    }

    pub fn with_driving(mut self, epsilon1: f64, omega: f64) -> Self {
        self.epsilon1 = epsilon1;
        self.omega = omega;
        self
    }

    pub fn with_temperature(mut self, temperature: f64) -> Self {
        self.temperature = temperature;
        self
    }

    pub fn with_gamma(mut self, gamma: f64) -> Self {
        self.gamma = gamma;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let check = |ok: bool, field: &'static str, msg: &str| {
            if ok {
                Ok(())
            } else {
                Err(Error::InvalidParameter {
                    field,
                    reason: msg.to_string(),
                })
            }
        };
        check(self.epsilon.is_finite(), "epsilon", "must be finite")?;
        check(self.delta > 0.0 && self.delta.is_finite(), "delta", "must be > 0")?;
        check(self.gamma >= 0.0 && self.gamma.is_finite(), "gamma", "must be >= 0")?;
        check(
            self.temperature >= 0.0 && self.temperature.is_finite(),
            "temperature",
            "must be >= 0",
        )?;
        check(
            self.epsilon1 >= 0.0 && self.epsilon1.is_finite(),
            "epsilon1",
            "must be >= 0",
        )?;
        check(
            self.epsilon1 == 0.0 || (self.omega > 0.0 && self.omega.is_finite()),
            "omega",
            "must be > 0 when epsilon1 > 0",
        )?;
        Ok(())
    }

    /// Δ = sqrt(δ² + ε²).
    pub fn big_delta(&self) -> f64 {
        self.delta.hypot(self.epsilon)
    }

    /// Δ in rescaled units, sqrt(1 + (ε/δ)²).
    pub fn reduced_big_delta(&self) -> f64 {
        1f64.hypot(self.epsilon / self.delta)
    }

    pub fn is_driven(&self) -> bool {
        self.epsilon1 > 0.0
    }

    pub fn beta(&self) -> f64 {
        1.0 / self.temperature
    }

    /// Driving period 2π/ω, `None` when undriven.
    pub fn period(&self) -> Option<f64> {
        self.is_driven()
            .then(|| std::f64::consts::TAU / self.omega)
    }
}

/// Point (z, Φ) of the canonical phase space at time `t`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TlsState {
    pub z: f64,
    /// Unwrapped phase difference.
    pub phi: f64,
    pub t: f64,
}

impl TlsState {
    pub fn new(z: f64, phi: f64, t: f64) -> Self {
        Self { z, phi, t }
    }
}

/// Expectation values of the three Pauli operators.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlochVector {
    pub sx: f64,
    pub sy: f64,
    pub sz: f64,
}

impl BlochVector {
    pub fn norm_sqr(&self) -> f64 {
        self.sx * self.sx + self.sy * self.sy + self.sz * self.sz
    }
}

fn check_domain(z: f64) -> Result<()> {
    if z.abs() <= 1.0 {
        Ok(())
    } else {
        Err(Error::Domain { z })
    }
}

/// sqrt(1 - z²) for |z| ≤ 1, tolerant of tiny negative round-off.
#[inline]
fn transverse(z: f64) -> f64 {
    (1.0 - z * z).max(0.0).sqrt()
}

/// sqrt(1 - z²) floored at sqrt(1 - z_cap²); for denominators only.
#[inline]
fn guarded_transverse(z: f64, z_cap: f64) -> f64 {
    transverse(z).max(transverse(z_cap))
}

/// ε̃(t) = ε + ε₁ cos(ωt).
pub fn driven_bias(t: f64, p: &SystemParams) -> f64 {
    if p.epsilon1 == 0.0 {
        p.epsilon
    } else {
        p.epsilon + p.epsilon1 * (p.omega * t).cos()
    }
}

/// Conserved energy of the isolated system, H₀ = -sqrt(1-z²) cos Φ + (ε̃/δ) z.
pub fn hamiltonian_h0(s: &TlsState, p: &SystemParams) -> Result<f64> {
    check_domain(s.z)?;
    Ok(h0_unchecked(s, p))
}

#[inline]
pub(crate) fn h0_unchecked(s: &TlsState, p: &SystemParams) -> f64 {
    -transverse(s.z) * s.phi.cos() + driven_bias(s.t, p) / p.delta * s.z
}

/// Non-conserved energy including friction and noise work,
/// H₀ + γΦ(z cos Φ / sqrt(1-z²) + ε̃/δ) - ξΦ.
pub fn effective_hamiltonian(s: &TlsState, p: &SystemParams, xi: f64) -> Result<f64> {
    check_domain(s.z)?;
    if s.z.abs() >= 1.0 {
        return Err(Error::Singular { z: s.z });
    }
    Ok(effective_unchecked(s, p, xi, DEFAULT_Z_CAP))
}

#[inline]
pub(crate) fn effective_unchecked(s: &TlsState, p: &SystemParams, xi: f64, z_cap: f64) -> f64 {
    let phi_dot = s.z * s.phi.cos() / guarded_transverse(s.z, z_cap) + driven_bias(s.t, p) / p.delta;
    h0_unchecked(s, p) + p.gamma * s.phi * phi_dot - xi * s.phi
}

pub fn bloch_map(s: &TlsState) -> Result<BlochVector> {
    check_domain(s.z)?;
    Ok(bloch_unchecked(s))
}

#[inline]
pub(crate) fn bloch_unchecked(s: &TlsState) -> BlochVector {
    let r = transverse(s.z);
    let (sin, cos) = s.phi.sin_cos();
    BlochVector {
        sx: -r * cos,
        sy: r * sin,
        sz: s.z,
    }
}

/// Time derivatives (dz/dt, dΦ/dt).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Derivative {
    pub dz: f64,
    pub dphi: f64,
}

/// Equations of motion of the isolated system (γ = ξ = 0).
pub fn rhs_closed(s: &TlsState, p: &SystemParams) -> Result<Derivative> {
    if s.z.abs() >= 1.0 {
        return Err(Error::Singular { z: s.z });
    }
    Ok(rhs_unchecked(s, p, 0.0, 0.0, DEFAULT_Z_CAP))
}

/// Langevin equations with the friction term -γΦ̇ made explicit by
/// substituting the phase equation into the population equation.
pub fn rhs_open(s: &TlsState, p: &SystemParams, xi: f64) -> Result<Derivative> {
    if s.z.abs() >= 1.0 {
        return Err(Error::Singular { z: s.z });
    }
    Ok(rhs_unchecked(s, p, p.gamma, xi, DEFAULT_Z_CAP))
}

#[inline]
pub(crate) fn rhs_unchecked(
    s: &TlsState,
    p: &SystemParams,
    gamma: f64,
    xi: f64,
    z_cap: f64,
) -> Derivative {
    let r = transverse(s.z);
    let (sin, cos) = s.phi.sin_cos();
    let dphi = s.z * cos / guarded_transverse(s.z, z_cap) + driven_bias(s.t, p) / p.delta;
    let dz = -r * sin - gamma * dphi + xi;
    Derivative { dz, dphi }
}
