use qsr_core::analytic;
use qsr_core::config::RunConfig;
use qsr_core::ensemble::{asymptotic_average, run_ensemble, Window};
use qsr_core::persist::{read_moment_series, write_moment_series};
use qsr_core::spectral::{asymptotic_window, commensurate, fourier_coefficients, power_amplitudes};

fn driven_config() -> RunConfig {
    RunConfig::parse("epsilon1 = 0.5\nomega = 1.5\ntemperature = 0.5\nn_traj = 64\nt_final = 60.0\nseed = 11\n").unwrap()
}

#[test]
fn config_to_spectrum_through_csv() {
    let cfg = driven_config();
    cfg.validate().unwrap();
    let p = cfg.params();
    let icfg = commensurate(&cfg.integrator(), p.omega).unwrap();
    let ms = run_ensemble(&p, &cfg.noise(), &icfg, &cfg.ensemble()).unwrap();
    let w = asymptotic_window(*ms.t.last().unwrap(), p.omega);

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("moments.csv");
    write_moment_series(&path, &ms).unwrap();
    let back = read_moment_series(&path, p).unwrap();

    let direct = fourier_coefficients(&ms, p.omega, w, 4).unwrap();
    let reloaded = fourier_coefficients(&back, p.omega, w, 4).unwrap();
    for m in -4..=4 {
        assert_eq!(direct.get(m), reloaded.get(m));
    }
    assert!(direct.hermitian_defect() <= 1e-12);
    assert!(direct.parseval_defect().abs() <= 1e-10);
    let eta = power_amplitudes(&direct).unwrap();
    assert!(eta.eta.iter().all(|e| e.is_finite() && *e >= 0.0));
}

#[test]
fn same_config_same_hash_same_numbers() {
    let a = driven_config();
    let b = RunConfig::parse(&a.serialize()).unwrap();
    assert_eq!(a.hash(), b.hash());
    let run = |c: &RunConfig| {
        let p = c.params();
        let icfg = commensurate(&c.integrator(), p.omega).unwrap();
        run_ensemble(&p, &c.noise(), &icfg, &c.ensemble()).unwrap()
    };
    assert_eq!(run(&a), run(&b));
}

#[test]
fn undriven_average_is_bounded_and_has_error_bars() {
    let cfg = RunConfig::parse("n_traj = 200\nt_final = 100.0\nseed = 3\n").unwrap();
    let p = cfg.params();
    let ms = run_ensemble(&p, &cfg.noise(), &cfg.integrator(), &cfg.ensemble()).unwrap();
    let avg = asymptotic_average(&ms, Window::new(50.0, 100.0), 10).unwrap();
    assert!(avg.z.mean.abs() < 1.0 && avg.z.se > 0.0);
    // The classical Gibbs state has a weaker population than the quantum one.
    let quantum = analytic::thermal_averages(p.beta(), &p, 0.0).z_avg;
    assert!(avg.z.mean.abs() < quantum.abs());
}
