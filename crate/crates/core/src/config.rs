//! Flat key-value run configuration.
//!
//! The on-disk form is a flat TOML document (`key = value` per line, `#`
//! comments). Every key is optional; unknown keys are rejected.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::ensemble::{EnsembleConfig, InitPolicy, PhaseInit, PopulationInit};
use crate::error::{Error, Result};
use crate::model::{SystemParams, DEFAULT_Z_CAP};
use crate::spectral::{ScanAxis, SpectralConfig, DEFAULT_M_MAX};
use crate::stochastic::{IntegratorConfig, NoiseConfig, Scheme};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PopulationKind {
    Fixed,
    Alternating,
    Equilibrium,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PhaseKind {
    Uniform,
    Fixed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub epsilon: f64,
    pub delta: f64,
    pub epsilon1: f64,
    pub omega: f64,
    pub gamma: f64,
    pub temperature: f64,

    pub seed: u64,
    pub fdt_prefactor: f64,

    pub scheme: Scheme,
    pub dt: f64,
    pub t_final: f64,
    pub record_stride: usize,
    pub z_cap: f64,
    pub stability_threshold: f64,

    pub n_traj: usize,
    pub population_init: PopulationKind,
    pub z0: f64,
    pub phase_init: PhaseKind,
    pub phi0: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub window_start: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub window_end: Option<f64>,
    pub n_blocks: usize,
    pub n_groups: usize,

    pub m_max: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub omega_c: Option<f64>,

    pub scan_axis: ScanAxis,
    pub scan_min: f64,
    pub scan_max: f64,
    pub scan_points: usize,

    #[serde(skip_serializing_if = "Option::is_none")]
    pub output: Option<String>,
}

impl Default for RunConfig {
    fn default() -> Self {
        let p = SystemParams::default();
        let i = IntegratorConfig::default();
        let e = EnsembleConfig::default();
        Self {
            epsilon: p.epsilon,
            delta: p.delta,
            epsilon1: p.epsilon1,
            omega: p.omega,
            gamma: p.gamma,
            temperature: p.temperature,
            seed: 0,
            fdt_prefactor: NoiseConfig::default().fdt_prefactor,
            scheme: i.scheme,
            dt: i.dt,
            t_final: i.t_final,
            record_stride: i.record_stride,
            z_cap: DEFAULT_Z_CAP,
            stability_threshold: i.stability_threshold,
            n_traj: e.n_traj,
            population_init: PopulationKind::Fixed,
            z0: 0.999,
            phase_init: PhaseKind::Uniform,
            phi0: 0.0,
            window_start: None,
            window_end: None,
            n_blocks: e.n_blocks,
            n_groups: e.n_groups,
            m_max: DEFAULT_M_MAX,
            omega_c: None,
            scan_axis: ScanAxis::Omega,
            scan_min: 0.4,
            scan_max: 2.2,
            scan_points: 19,
            output: None,
        }
    }
}

/// 1-based line of `key = ...` in `text`, or 0 when absent.
fn key_line(text: &str, key: &str) -> usize {
    text.lines()
        .position(|l| {
            let l = l.trim_start();
            l.strip_prefix(key)
                .is_some_and(|rest| rest.trim_start().starts_with('='))
        })
        .map_or(0, |i| i + 1)
}

fn offset_line(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].matches('\n').count() + 1
}

impl RunConfig {
    /// Parses and validates a document; absent keys take their defaults.
    pub fn parse(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| Error::Config {
            line: e.span().map_or(0, |s| offset_line(text, s.start)),
            message: e.message().trim().to_string(),
        })?;
        cfg.validate().map_err(|e| match e {
            Error::InvalidParameter { field, reason } => Error::Config {
                line: key_line(text, field),
                message: format!("{field}: {reason}"),
            },
            other => other,
        })?;
        Ok(cfg)
    }

    pub fn serialize(&self) -> String {
        toml::to_string(self).expect("flat config always serializes")
    }

    /// SHA-256 of the canonical serialization, hex encoded.
    pub fn hash(&self) -> String {
        Sha256::digest(self.serialize().as_bytes())
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }

    /// Applies `key = value` overrides, where values use config syntax
    /// (bare words are read as strings).
    pub fn with_overrides<'a, I>(&self, overrides: I) -> Result<Self>
    where
        I: IntoIterator<Item = (&'a str, &'a str)>,
    {
        let mut text = self.serialize();
        let mut table: toml::Table = toml::from_str(&text).expect("own serialization parses");
        for (key, raw) in overrides {
            let value = format!("v = {raw}")
                .parse::<toml::Table>()
                .ok()
                .and_then(|mut t| t.remove("v"))
                .unwrap_or_else(|| toml::Value::String(raw.to_string()));
            table.insert(key.to_string(), value);
        }
        text = toml::to_string(&table).expect("table serializes");
        // Line numbers would point into the synthesized document.
        Self::parse(&text).map_err(|e| match e {
            Error::Config { message, .. } => Error::Config { line: 0, message },
            other => other,
        })
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |field: &'static str, reason: &str| {
            Err(Error::InvalidParameter {
                field,
                reason: reason.into(),
            })
        };
        self.params().validate()?;
        self.noise().validate()?;
        self.integrator().validate()?;
        if self.seed > i64::MAX as u64 {
            return bad("seed", "must be < 2^63");
        }
        if self.z0.abs() > 1.0 || !self.z0.is_finite() {
            return bad("z0", "must lie in [-1, 1]");
        }
        if !self.phi0.is_finite() {
            return bad("phi0", "must be finite");
        }
        if self.window_start.is_some() != self.window_end.is_some() {
            return bad("window_start", "window_start and window_end go together");
        }
        if self.m_max == 0 {
            return bad("m_max", "must be >= 1");
        }
        if let Some(wc) = self.omega_c {
            if !(wc > 0.0 && wc.is_finite()) {
                return bad("omega_c", "must be > 0");
            }
        }
        if self.scan_points == 0 {
            return bad("scan_points", "must be >= 1");
        }
        if !(self.scan_min > 0.0 && self.scan_max >= self.scan_min && self.scan_max.is_finite()) {
            return bad("scan_min", "need 0 < scan_min <= scan_max");
        }
        self.ensemble().validate()
    }

    pub fn params(&self) -> SystemParams {
        SystemParams {
            epsilon: self.epsilon,
            delta: self.delta,
            epsilon1: self.epsilon1,
            omega: self.omega,
            gamma: self.gamma,
            temperature: self.temperature,
        }
    }

    pub fn noise(&self) -> NoiseConfig {
        NoiseConfig {
            fdt_prefactor: self.fdt_prefactor,
            master_seed: self.seed,
            stream_id: 0,
        }
    }

    pub fn integrator(&self) -> IntegratorConfig {
        IntegratorConfig {
            scheme: self.scheme,
            dt: self.dt,
            t_final: self.t_final,
            record_stride: self.record_stride,
            z_cap: self.z_cap,
            stability_threshold: self.stability_threshold,
        }
    }

    pub fn ensemble(&self) -> EnsembleConfig {
        let population = match self.population_init {
            PopulationKind::Fixed => PopulationInit::Fixed(self.z0),
            PopulationKind::Alternating => PopulationInit::Alternating(self.z0),
            PopulationKind::Equilibrium => PopulationInit::Equilibrium,
        };
        let phase = match self.phase_init {
            PhaseKind::Uniform => PhaseInit::Uniform,
            PhaseKind::Fixed => PhaseInit::Fixed(self.phi0),
        };
        EnsembleConfig {
            n_traj: self.n_traj,
            init: InitPolicy { population, phase },
            window: self.window_start.zip(self.window_end),
            n_blocks: self.n_blocks,
            n_groups: self.n_groups,
            workers: None,
        }
    }

    pub fn spectral(&self) -> SpectralConfig {
        SpectralConfig {
            noise: self.noise(),
            integrator: self.integrator(),
            ensemble: self.ensemble(),
            m_max: self.m_max,
            omega_c: self.omega_c,
        }
    }

    /// Evenly spaced scan values from scan_min to scan_max.
    pub fn scan_grid(&self) -> Vec<f64> {
        linspace(self.scan_min, self.scan_max, self.scan_points)
    }
}

pub fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    match n {
        0 => vec![],
        1 => vec![a],
        _ => (0..n).map(|k| a + (b - a) * k as f64 / (n - 1) as f64).collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn empty_document_gives_defaults() {
        let cfg = RunConfig::parse("").unwrap();
        assert_eq!(cfg, RunConfig::default());
        assert_eq!(cfg.dt, 1e-2);
        assert_eq!(cfg.gamma, 0.1);
        assert_eq!(cfg.n_traj, 10_000);
        assert_eq!(cfg.ensemble().init.population, PopulationInit::Fixed(0.999));
        assert_eq!(cfg.ensemble().init.phase, PhaseInit::Uniform);
    }

    #[test]
    fn negative_gamma_is_a_range_error() {
        let err = RunConfig::parse("epsilon = 1.0\ngamma = -0.1\n").unwrap_err();
        match err {
            Error::Config { line, message } => {
                assert_eq!(line, 2);
                assert!(message.contains("gamma"), "{message}");
            }
            e => panic!("unexpected {e}"),
        }
    }

    #[test]
    fn unknown_key_is_rejected_with_line() {
        let err = RunConfig::parse("# comment\nepsilon = 1.0\nfriction = 0.2\n").unwrap_err();
        match err {
            Error::Config { line, message } => {
                assert_eq!(line, 3);
                assert!(message.contains("friction"), "{message}");
            }
            e => panic!("unexpected {e}"),
        }
    }

    #[test]
    fn type_errors_are_reported() {
        assert!(matches!(RunConfig::parse("n_traj = \"many\""), Err(Error::Config { line: 1, .. })));
        assert!(matches!(RunConfig::parse("scheme = \"euler\""), Err(Error::Config { .. })));
    }

    #[test]
    fn sample_round_trip() {
        let text = "epsilon = 1.2\nepsilon1 = 0.5\nomega = 1.5\ntemperature = 0.5\nseed = 42\n\
                    scheme = \"heun\"\nwindow_start = 300.0\nwindow_end = 500.0\nscan_axis = \"temperature\"\n\
                    population_init = \"alternating\"\noutput = \"runs/a\"\n";
        let cfg = RunConfig::parse(text).unwrap();
        assert_eq!(RunConfig::parse(&cfg.serialize()).unwrap(), cfg);
        assert_eq!(cfg.ensemble().window, Some((300.0, 500.0)));
        assert_eq!(cfg.ensemble().init.population, PopulationInit::Alternating(0.999));
    }

    #[test]
    fn overrides() {
        let cfg = RunConfig::default()
            .with_overrides([("n_traj", "12"), ("scheme", "heun"), ("omega_c", "3.5")])
            .unwrap();
        assert_eq!(cfg.n_traj, 12);
        assert_eq!(cfg.scheme, Scheme::Heun);
        assert_eq!(cfg.omega_c, Some(3.5));
        assert!(RunConfig::default().with_overrides([("nope", "1")]).is_err());
    }

    #[test]
    fn hash_tracks_content() {
        let a = RunConfig::default();
        let mut b = a.clone();
        assert_eq!(a.hash(), b.hash());
        b.n_blocks += 1;
        assert_ne!(a.hash(), b.hash());
        assert_eq!(a.hash().len(), 64);
    }

    #[test]
    fn linspace_endpoints() {
        let g = linspace(0.2, 5.0, 12);
        assert_eq!(g.len(), 12);
        assert_eq!(g[0], 0.2);
        assert_eq!(g[11], 5.0);
    }

    fn arb_config() -> impl Strategy<Value = RunConfig> {
        (
            (0.0f64..3.0, 0.1f64..3.0, 0.0f64..2.0, 0.1f64..5.0, 0.0f64..1.0, 0.0f64..5.0),
            (0u64..(i64::MAX as u64), 1e-4f64..0.1, 1.0f64..1e3, 1usize..50),
            (1usize..100_000, -1.0f64..1.0, prop::option::of((0.0f64..10.0, 10.0f64..20.0))),
            (any::<bool>(), 10usize..40, 1usize..20, 1usize..8, prop::option::of(0.1f64..100.0)),
        )
            .prop_map(|(phys, integ, ens, rest)| RunConfig {
                epsilon: phys.0,
                delta: phys.1,
                epsilon1: phys.2,
                omega: phys.3,
                gamma: phys.4,
                temperature: phys.5,
                seed: integ.0,
                dt: integ.1,
                t_final: integ.2,
                record_stride: integ.3,
                n_traj: ens.0,
                z0: ens.1,
                window_start: ens.2.map(|w| w.0),
                window_end: ens.2.map(|w| w.1),
                scheme: if rest.0 { Scheme::Heun } else { Scheme::Rk4 },
                n_blocks: rest.1,
                n_groups: rest.2,
                m_max: rest.3,
                omega_c: rest.4,
                ..RunConfig::default()
            })
    }

    proptest! {
        #[test]
        fn parse_serialize_round_trip(cfg in arb_config()) {
            let back = RunConfig::parse(&cfg.serialize()).unwrap();
            prop_assert_eq!(&back, &cfg);
            prop_assert_eq!(back.hash(), cfg.hash());
        }
    }
}
