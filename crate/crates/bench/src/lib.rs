//! Shared fixtures for the benchmarks.

use qsr_core::ensemble::EnsembleConfig;
use qsr_core::stochastic::IntegratorConfig;
use qsr_core::SystemParams;

/// The standard driven test system (ε = 1.2, δ = 1, γ = 0.1, ε₁ = 0.5).
pub fn driven_params() -> SystemParams {
    SystemParams::undriven(1.2, 1.0, 0.1, 0.5).with_driving(0.5, 1.5)
}

pub fn short_run(t_final: f64) -> IntegratorConfig {
    IntegratorConfig {
        t_final,
        ..Default::default()
    }
}

pub fn small_ensemble(n_traj: usize) -> EnsembleConfig {
    EnsembleConfig {
        n_traj,
        ..Default::default()
    }
}
