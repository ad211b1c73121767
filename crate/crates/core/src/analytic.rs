//! Closed-form equilibrium thermodynamics and linear-response formulas.
//!
//! Signs follow the energy-minimizing equilibrium: for ε > 0 the thermal
//! population difference is negative and δ⟨σx⟩ + ε⟨z⟩ = -Δ tanh(βΔ).
//! Magnitudes are exposed separately for comparison with the usual
//! unsigned expressions.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::SystemParams;
use crate::quadrature;

/// Ratio below which a "much smaller than" regime condition counts as met.
pub const LINEAR_REGIME_RATIO: f64 = 0.2;

/// Heat-capacity maximum sits near βΔ ≈ 1.2.
pub const CRITICAL_RATIO: f64 = 1.2;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThermoReference {
    pub beta: f64,
    pub e0: f64,
    pub z_avg: f64,
    pub sigmax_avg: f64,
    pub coherence_factor: f64,
    pub energy_avg: f64,
    pub entropy: f64,
    pub heat_capacity: f64,
}

impl ThermoReference {
    pub fn z_magnitude(&self) -> f64 {
        self.z_avg.abs()
    }

    pub fn sigmax_magnitude(&self) -> f64 {
        self.sigmax_avg.abs()
    }
}

/// Validity flags of the linear-response approximation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RegimeFlags {
    pub slow_driving: bool,
    pub weak_driving: bool,
    pub amplitude_below_bias: bool,
}

impl RegimeFlags {
    pub fn all(&self) -> bool {
        self.slow_driving && self.weak_driving && self.amplitude_below_bias
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearResponse {
    pub p1: f64,
    pub lambda: f64,
    pub omega_c: f64,
    pub f_value: f64,
    pub regime: RegimeFlags,
}

/// tanh(x) for x possibly infinite.
fn tanh(x: f64) -> f64 {
    if x.is_infinite() {
        x.signum()
    } else {
        x.tanh()
    }
}

/// x² sech²(x), finite for all x.
fn x2_sech2(x: f64) -> f64 {
    let ax = x.abs();
    if ax > 300.0 {
        return 0.0;
    }
    let s = 1.0 / ax.cosh();
    ax * ax * s * s
}

/// ln(2 cosh x) without overflow.
fn ln_2cosh(x: f64) -> f64 {
    let ax = x.abs();
    ax + (-2.0 * ax).exp().ln_1p()
}

/// Z = 2 cosh(βΔ).
pub fn quantum_partition(beta: f64, p: &SystemParams) -> f64 {
    2.0 * (beta * p.big_delta()).cosh()
}

/// ln Z including the energy origin, ln[2 e^{-βE₀} cosh(βΔ)].
pub fn log_partition(beta: f64, p: &SystemParams, e0: f64) -> f64 {
    ln_2cosh(beta * p.big_delta()) - beta * e0
}

pub fn thermal_averages(beta: f64, p: &SystemParams, e0: f64) -> ThermoReference {
    let big = p.big_delta();
    let th = tanh(beta * big);
    let z_avg = -(p.epsilon / big) * th;
    let sigmax_avg = -(p.delta / big) * th;
    ThermoReference {
        beta,
        e0,
        z_avg,
        sigmax_avg,
        coherence_factor: coherence_factor_ref(beta, p),
        energy_avg: e0 - big * th,
        entropy: entropy(beta, p, e0),
        heat_capacity: schottky_cv(beta, p),
    }
}

/// Schottky heat capacity β²Δ² sech²(βΔ).
pub fn schottky_cv(beta: f64, p: &SystemParams) -> f64 {
    x2_sech2(beta * p.big_delta())
}

/// Canonical entropy S = ln Z + β⟨E⟩ = ln(2 cosh βΔ) - βΔ tanh βΔ.
///
/// The energy origin cancels between the two terms; `e0` is accepted so the
/// call mirrors [`log_partition`].
pub fn entropy(beta: f64, p: &SystemParams, e0: f64) -> f64 {
    let x = beta * p.big_delta();
    if x.is_infinite() {
        return 0.0;
    }
    let energy = e0 - p.big_delta() * tanh(x);
    log_partition(beta, p, e0) + beta * energy
}

/// T_c ≈ Δ/1.2.
pub fn critical_temperature(p: &SystemParams) -> f64 {
    p.big_delta() / CRITICAL_RATIO
}

/// Partition function of H₀ over the (z, Φ) phase space,
/// (4π/(βΔ_r)) sinh(βΔ_r) with Δ_r = sqrt(1 + (ε/δ)²).
pub fn classical_partition(beta: f64, p: &SystemParams) -> f64 {
    let x = beta * p.reduced_big_delta();
    if x == 0.0 {
        4.0 * PI
    } else {
        4.0 * PI * x.sinh() / x
    }
}

const QUAD_REL_TOL: f64 = 1e-10;
const QUAD_INNER_REL_TOL: f64 = 1e-12;
const QUAD_MAX_PANELS: usize = 2000;

/// ∬ F e^{-βH₀} dz dΦ over [-1, 1] × [0, 2π], Φ outer and z inner.
pub fn classical_integral<F>(f: F, beta: f64, p: &SystemParams) -> Result<quadrature::Integral>
where
    F: Fn(f64, f64) -> f64,
{
    let bias = p.epsilon / p.delta;
    let mut inner_failure = None;
    let outer = quadrature::integrate(
        |phi| {
            let cos = phi.cos();
            let inner = quadrature::integrate(
                |z| {
                    let h0 = -(1.0 - z * z).max(0.0).sqrt() * cos + bias * z;
                    f(z, phi) * (-beta * h0).exp()
                },
                -1.0,
                1.0,
                QUAD_INNER_REL_TOL,
                1e-300,
                QUAD_MAX_PANELS,
            );
            match inner {
                Ok(r) => r.value,
                Err(e) => {
                    inner_failure.get_or_insert(e);
                    f64::NAN
                }
            }
        },
        0.0,
        2.0 * PI,
        QUAD_REL_TOL,
        1e-300,
        QUAD_MAX_PANELS,
    );
    if let Some(e) = inner_failure {
        return Err(e);
    }
    outer
}

/// Classical phase-space average ⟨F⟩ = Z_c⁻¹ ∬ F e^{-βH₀} dz dΦ.
pub fn classical_average<F>(f: F, beta: f64, p: &SystemParams) -> Result<f64>
where
    F: Fn(f64, f64) -> f64,
{
    if !(beta > 0.0) {
        return Err(Error::InvalidParameter {
            field: "beta",
            reason: "classical average needs beta > 0".into(),
        });
    }
    let num = classical_integral(&f, beta, p)?;
    let den = classical_integral(|_, _| 1.0, beta, p)?;
    Ok(num.value / den.value)
}

/// ⟨cos Φ⟩ = (δ/Δ) tanh(βΔ) / sqrt(1 - (ε/Δ)² tanh²(βΔ)),
/// evaluated as δ tanh(βΔ) / sqrt(δ² + ε² sech²(βΔ)).
pub fn coherence_factor_ref(beta: f64, p: &SystemParams) -> f64 {
    let x = beta * p.big_delta();
    let th = tanh(x);
    let sech = if x.abs() > 700.0 { 0.0 } else { 1.0 / x.cosh() };
    let denom = p.delta.hypot(p.epsilon * sech);
    if denom == 0.0 {
        // δ → 0 at zero temperature: fully localized, no coherence.
        0.0
    } else {
        p.delta * th / denom
    }
}

/// f(β, ε) = β sech²(βε).
pub fn response_f(beta: f64, epsilon: f64) -> f64 {
    let x = beta * epsilon;
    if x.abs() > 300.0 {
        return 0.0;
    }
    let s = 1.0 / x.cosh();
    beta * s * s
}

/// First Fourier coefficient of the driven population in linear response,
/// (ε₁/4) λ²/(λ² + ω²) β sech²(βε) with λ = πΔ²/(2ω_c).
pub fn linear_response_p1(omega: f64, beta: f64, p: &SystemParams, omega_c: f64) -> LinearResponse {
    let big = p.big_delta();
    let lambda = PI * big * big / (2.0 * omega_c);
    let f_value = response_f(beta, p.epsilon);
    let lorentz = lambda * lambda / (lambda * lambda + omega * omega);
    LinearResponse {
        p1: 0.25 * p.epsilon1 * lorentz * f_value,
        lambda,
        omega_c,
        f_value,
        regime: RegimeFlags {
            slow_driving: (omega * beta).abs() <= LINEAR_REGIME_RATIO,
            weak_driving: (p.epsilon1 * beta).abs() <= LINEAR_REGIME_RATIO,
            amplitude_below_bias: p.epsilon1 < p.epsilon.abs(),
        },
    }
}

/// Default cutoff frequency, 10Δ.
pub fn default_omega_c(p: &SystemParams) -> f64 {
    10.0 * p.big_delta()
}

/// Root of x tanh x = c on (0, ∞) by bisection.
pub(crate) fn solve_x_tanh_x(c: f64) -> f64 {
    let g = |x: f64| x * x.tanh() - c;
    let (mut lo, mut hi) = (0.0, 1.0);
    while g(hi) < 0.0 {
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if g(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 4.0 * f64::EPSILON * hi {
            break;
        }
    }
    0.5 * (lo + hi)
}

/// Stochastic-resonance temperature ε/x* with x* tanh x* = 1.
pub fn qsr_temperature(p: &SystemParams) -> Result<f64> {
    if !(p.epsilon > 0.0) {
        return Err(Error::InvalidParameter {
            field: "epsilon",
            reason: "resonance temperature needs epsilon > 0".into(),
        });
    }
    Ok(p.epsilon / solve_x_tanh_x(1.0))
}

/// Temperature maximizing the linear-response P₁ at fixed ω.
///
/// d/dT[β sech²(βε)] vanishes where 2βε tanh βε = 1, which is not the
/// condition used by [`qsr_temperature`].
pub fn p1_peak_temperature(p: &SystemParams) -> Result<f64> {
    if !(p.epsilon > 0.0) {
        return Err(Error::InvalidParameter {
            field: "epsilon",
            reason: "resonance temperature needs epsilon > 0".into(),
        });
    }
    Ok(p.epsilon / solve_x_tanh_x(0.5))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn p(eps: f64) -> SystemParams {
        SystemParams::undriven(eps, 1.0, 0.1, 1.0)
    }

    /// Golden-section search for a maximum, kept test-local as an oracle.
    fn golden_max(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
        let r = (5f64.sqrt() - 1.0) / 2.0;
        let mut c = b - r * (b - a);
        let mut d = a + r * (b - a);
        while (b - a).abs() > 1e-10 {
            if f(c) > f(d) {
                b = d;
            } else {
                a = c;
            }
            c = b - r * (b - a);
            d = a + r * (b - a);
        }
        0.5 * (a + b)
    }

    #[test]
    fn partition_examples() {
        assert_eq!(quantum_partition(0.0, &p(1.2)), 2.0);
        // 2 cosh(1.5620499) computed independently.
        assert_relative_eq!(quantum_partition(1.0, &p(1.2)), 4.978_292_273, epsilon = 1e-8);
        let big = p(1.2).big_delta();
        let beta = 400.0;
        assert!((log_partition(beta, &p(1.2), 0.0) - beta * big).abs() < 1e-12);
    }

    #[test]
    fn thermal_average_examples() {
        let r = thermal_averages(0.0, &p(1.2), 0.3);
        assert_eq!(r.z_avg.abs(), 0.0);
        assert_eq!(r.energy_avg, 0.3);
        let r = thermal_averages(f64::INFINITY, &p(1.2), 0.0);
        assert_relative_eq!(r.z_magnitude(), 1.2 / 2.44f64.sqrt(), epsilon = 1e-15);
        let r = thermal_averages(1.0, &p(1.2), 0.0);
        assert_relative_eq!(r.z_magnitude(), 0.703_500_12, epsilon = 1e-7);
        assert!(r.z_avg < 0.0 && r.sigmax_avg < 0.0);
        assert_relative_eq!(r.energy_avg, -1.430_450_25, epsilon = 1e-7);
    }

    #[test]
    fn schottky_examples() {
        assert_eq!(schottky_cv(0.0, &p(1.2)), 0.0);
        assert_eq!(schottky_cv(f64::INFINITY, &p(1.2)), 0.0);
        let q = SystemParams::undriven(0.0, 1.2, 0.1, 1.0);
        assert_relative_eq!(schottky_cv(1.0, &q), 0.439_228_794_5, epsilon = 1e-9);
    }

    #[test]
    fn schottky_matches_log_partition_curvature() {
        let q = p(1.2);
        let big = q.big_delta();
        // ln Z = βΔ + ln(1 + e^{-2βΔ}); the linear part has no
        // curvature, and differencing only the remainder keeps round-off
        // far below the tolerance. Below h ~ 1e-4 round-off still wins.
        let g = |b: f64| (-2.0 * b * big).exp().ln_1p();
        let h = 1e-4;
        for i in 0..25 {
            let beta = (0.1 + i as f64 * (10.0 - 0.1) / 24.0) / big;
            let lz = log_partition(beta, &q, 0.0);
            assert!((lz - (beta * big + g(beta))).abs() <= 1e-14 * lz);
            let d2 = (g(beta + h) - 2.0 * g(beta) + g(beta - h)) / (h * h);
            assert!(d2 >= 0.0);
            let cv = schottky_cv(beta, &q);
            let fd = beta * beta * d2;
            assert!((fd - cv).abs() <= 1e-6 * cv.max(1e-3), "β={beta}: {fd} vs {cv}");
        }
    }

    #[test]
    fn entropy_examples() {
        assert_relative_eq!(entropy(0.0, &p(1.2), 0.0), 2f64.ln(), epsilon = 1e-15);
        // βΔ = 20: S = ln(1 + e^{-40}) + 20(1 - tanh 20) ≈ 0.
        let q = SystemParams::undriven(0.0, 1.0, 0.1, 1.0);
        assert!(entropy(20.0, &q, 0.0) < 1e-15);
        assert_eq!(entropy(f64::INFINITY, &q, 0.0), 0.0);
    }

    #[test]
    fn entropy_derivative_gives_heat_capacity() {
        let q = p(1.2);
        let h = 1e-4;
        for t in [0.3, 0.7, 1.0, 1.3, 2.0, 4.0] {
            let s = |t: f64| entropy(1.0 / t, &q, 0.0);
            let fd = t * (s(t + h) - s(t - h)) / (2.0 * h);
            let cv = schottky_cv(1.0 / t, &q);
            assert!((fd - cv).abs() < 1e-6, "T={t}: {fd} vs {cv}");
        }
    }

    #[test]
    fn critical_temperature_examples() {
        let q = SystemParams::undriven(0.0, 1.2, 0.1, 1.0);
        assert_relative_eq!(critical_temperature(&q), 1.0, epsilon = 1e-15);
        assert_relative_eq!(critical_temperature(&p(1.2)), 1.301_708_28, epsilon = 1e-8);
        let q = p(1.2);
        let t_max = golden_max(|t| schottky_cv(1.0 / t, &q), 0.1, 10.0);
        let tc = critical_temperature(&q);
        assert!((t_max - tc).abs() / tc < 0.02, "{t_max} vs {tc}");
    }

    #[test]
    fn classical_partition_examples() {
        let b1 = classical_partition(1.0, &p(0.0));
        assert_relative_eq!(b1, 4.0 * PI * 1f64.sinh(), epsilon = 1e-13);
        assert_relative_eq!(b1, 14.768_013_745_765, epsilon = 1e-10);
        assert_relative_eq!(classical_partition(1.0, &p(1.2)), 18.337_629_343, epsilon = 1e-8);
        assert_eq!(classical_partition(0.0, &p(1.2)), 4.0 * PI);
        assert_relative_eq!(classical_partition(1e-9, &p(1.2)), 4.0 * PI, epsilon = 1e-12);
    }

    #[test]
    fn classical_partition_matches_quadrature() {
        for beta in [0.5, 1.0, 2.0] {
            for eps in [0.0, 0.5, 1.2] {
                let q = p(eps);
                let quad = classical_integral(|_, _| 1.0, beta, &q).unwrap().value;
                let closed = classical_partition(beta, &q);
                assert!(((quad - closed) / closed).abs() < 1e-8, "{quad} vs {closed}");
            }
        }
    }

    #[test]
    fn classical_average_examples() {
        assert_relative_eq!(classical_average(|_, _| 1.0, 1.0, &p(1.2)).unwrap(), 1.0, epsilon = 1e-12);
        assert!(classical_average(|z, _| z, 1.0, &p(0.0)).unwrap().abs() < 1e-12);
        assert!(classical_average(|z, _| z, 0.0, &p(0.0)).is_err());
    }

    /// Plain Monte Carlo over the phase space, independent of the quadrature.
    fn mc_average(f: impl Fn(f64, f64) -> f64, beta: f64, bias: f64, n: usize) -> (f64, f64) {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let (mut num, mut den) = (0.0, 0.0);
        let mut ws = Vec::with_capacity(n);
        for _ in 0..n {
            let z: f64 = rng.random_range(-1.0..1.0);
            let phi: f64 = rng.random_range(0.0..2.0 * PI);
            let h0 = -(1.0 - z * z).sqrt() * phi.cos() + bias * z;
            let w = (-beta * h0).exp();
            num += w * f(z, phi);
            den += w;
            ws.push((w, f(z, phi)));
        }
        let mean = num / den;
        // Delta-method standard error of the ratio estimator.
        let nf = n as f64;
        let wbar = den / nf;
        let var: f64 = ws
            .iter()
            .map(|(w, v)| (w * (v - mean) / wbar).powi(2))
            .sum::<f64>()
            / (nf * (nf - 1.0));
        (mean, var.sqrt())
    }

    #[test]
    fn classical_z_average_regression() {
        let q = p(1.2);
        let v = classical_average(|z, _| z, 1.0, &q).unwrap();
        // Frozen from the quadrature; equals -(ε/Δ_r) L(Δ_r) with L the Langevin function.
        let x = q.reduced_big_delta();
        let langevin = 1.0 / x.tanh() - 1.0 / x;
        assert_relative_eq!(v, -(1.2 / x) * langevin, epsilon = 1e-9);
        assert_relative_eq!(v, -0.347_093_425_5, epsilon = 1e-8);
        let (mc, se) = mc_average(|z, _| z, 1.0, 1.2, 400_000);
        assert!((mc - v).abs() < 4.0 * se, "{mc} ± {se} vs {v}");
    }

    #[test]
    fn coherence_factor_examples() {
        assert_eq!(coherence_factor_ref(0.0, &p(1.2)), 0.0);
        for beta in [0.2, 1.0, 3.0] {
            let q = p(0.0);
            assert_relative_eq!(coherence_factor_ref(beta, &q), (beta * 1.0f64).tanh(), epsilon = 1e-15);
        }
        assert_relative_eq!(coherence_factor_ref(1.0, &p(1.2)), 0.824_896_74, epsilon = 1e-7);
    }

    #[test]
    fn linear_response_examples() {
        let q = p(1.2).with_driving(0.0, 0.3);
        assert_eq!(linear_response_p1(0.3, 1.0, &q, 10.0).p1, 0.0);

        let q = p(1.2).with_driving(0.1, 0.3);
        let at_zero = linear_response_p1(0.0, 1.0, &q, 10.0);
        assert_relative_eq!(at_zero.p1, 0.025 * response_f(1.0, 1.2), epsilon = 1e-15);
        let lam = at_zero.lambda;
        assert_relative_eq!(linear_response_p1(lam, 1.0, &q, 10.0).p1, 0.5 * at_zero.p1, epsilon = 1e-15);
        assert!(linear_response_p1(0.1, 1.0, &q, 10.0).regime.slow_driving);
        assert!(!linear_response_p1(1.0, 1.0, &q, 10.0).regime.slow_driving);
    }

    #[test]
    fn qsr_temperature_examples() {
        // Newton iteration as an independent root finder.
        let mut x = 1.5f64;
        for _ in 0..50 {
            let g = x * x.tanh() - 1.0;
            let dg = x.tanh() + x / x.cosh().powi(2);
            x -= g / dg;
        }
        assert_relative_eq!(solve_x_tanh_x(1.0), x, epsilon = 1e-13);
        assert_relative_eq!(x, 1.199_678_64, epsilon = 1e-8);
        assert_relative_eq!(qsr_temperature(&p(1.2)).unwrap(), 1.000_267_87, epsilon = 1e-8);
        assert!(qsr_temperature(&p(0.0)).is_err());
        assert!(qsr_temperature(&p(-1.0)).is_err());
    }

    #[test]
    fn p1_temperature_maximum() {
        let q = p(1.2).with_driving(0.06, 0.1);
        let t_peak = golden_max(|t| linear_response_p1(0.1, 1.0 / t, &q, 10.0).p1, 0.2, 10.0);
        let predicted = p1_peak_temperature(&q).unwrap();
        assert!((t_peak - predicted).abs() / predicted < 1e-6, "{t_peak} vs {predicted}");
        // The x tanh x = 1 temperature is well away from the actual maximum.
        assert!((t_peak - qsr_temperature(&q).unwrap()).abs() > 0.4);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn magnitudes_sum_to_tanh(eps in -3.0f64..3.0, delta in 0.05f64..3.0, beta in 0.0f64..20.0) {
                let q = SystemParams::undriven(eps, delta, 0.1, 1.0);
                let r = thermal_averages(beta, &q, 0.0);
                let lhs = delta * r.sigmax_magnitude() + eps.abs() * r.z_magnitude();
                let rhs = q.big_delta() * (beta * q.big_delta()).tanh();
                prop_assert!((lhs - rhs).abs() <= 1e-12 * rhs.max(1.0));
                prop_assert!((delta * r.sigmax_avg + eps * r.z_avg + rhs).abs() <= 1e-12 * rhs.max(1.0));
                prop_assert!(r.heat_capacity >= 0.0);
                prop_assert!(r.z_magnitude() <= 1.0);
            }

            #[test]
            fn coherence_bounded(eps in -3.0f64..3.0, delta in 0.01f64..3.0, beta in 0.0f64..50.0) {
                let q = SystemParams::undriven(eps, delta, 0.1, 1.0);
                let c = coherence_factor_ref(beta, &q);
                prop_assert!(c.abs() <= 1.0 + 1e-12);
            }

            #[test]
            fn p1_decreases_with_frequency(w1 in 0.0f64..5.0, dw in 1e-3f64..5.0, beta in 0.1f64..5.0) {
                let q = SystemParams::undriven(1.2, 1.0, 0.1, 1.0).with_driving(0.05, 1.0);
                let a = linear_response_p1(w1, beta, &q, 10.0).p1;
                let b = linear_response_p1(w1 + dw, beta, &q, 10.0).p1;
                prop_assert!(b < a);
            }
        }
    }
}
