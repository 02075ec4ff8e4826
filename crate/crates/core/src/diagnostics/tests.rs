use super::*;
use crate::hybrid::{HybridModel, HybridState, ModelParams};
use crate::integrator::{integrate, Direction, IntegratorConfig};
use crate::pauli::{Amplitudes, ModelKind};
use crate::phase_space::QuantumPhasePoint;

fn default_state() -> HybridState {
    HybridState::from_amplitudes(&Amplitudes::from_real([0.5; 4]), 1.0, 0.0, 1.0)
}

fn short(n_renorms: usize) -> LyapunovSettings {
    LyapunovSettings { n_renorms, ..Default::default() }
}

#[test]
fn decoupled_oscillator_has_zero_exponent() {
    let mut params = ModelParams::figure(ModelKind::Symmetric);
    params.c1 = 0.0;
    params.c2 = 0.0;
    let model = HybridModel::new(params).unwrap();
    let s0 = HybridState::new(QuantumPhasePoint::ZERO, 1.0, 0.0);
    let est = lyapunov_benettin(&model, &s0, &IntegratorConfig::default(), &short(2000)).unwrap();
    assert!(est.exponent.abs() < 1e-3, "{est:?}");
    assert_eq!(est.samples, 2000);
}

#[test]
fn integrable_hybrid_exponent_vanishes_both_ways() {
    let model = HybridModel::figure(ModelKind::Symmetric);
    let settings = LyapunovSettings::default();
    for direction in [Direction::Forward, Direction::Backward] {
        let cfg = IntegratorConfig { direction, ..Default::default() };
        let est = lyapunov_benettin(&model, &default_state(), &cfg, &settings).unwrap();
        assert!(est.exponent.abs() < 1e-3, "{direction:?}: {est:?}");
    }
}

#[test]
fn broken_symmetry_gives_positive_exponent() {
    let model = HybridModel::figure(ModelKind::NonSymmetric2);
    let est = lyapunov_benettin(&model, &default_state(), &IntegratorConfig::default(), &short(500)).unwrap();
    assert!(est.exponent > 0.5, "{est:?}");
}

#[test]
fn lyapunov_is_seeded() {
    let model = HybridModel::figure(ModelKind::NonSymmetric1);
    let cfg = IntegratorConfig::default();
    let a = lyapunov_benettin(&model, &default_state(), &cfg, &short(100)).unwrap();
    let b = lyapunov_benettin(&model, &default_state(), &cfg, &short(100)).unwrap();
    let c = lyapunov_benettin(&model, &default_state(), &cfg, &LyapunovSettings { seed: 9, ..short(100) }).unwrap();
    assert_eq!(a.exponent.to_bits(), b.exponent.to_bits());
    assert_ne!(a.exponent, c.exponent);
}

#[test]
fn lyapunov_settings_are_validated() {
    let model = HybridModel::figure(ModelKind::Symmetric);
    let cfg = IntegratorConfig::default();
    for bad in [short(99), LyapunovSettings { d0: 0.0, ..short(100) }, LyapunovSettings { renorm_interval: -1.0, ..short(100) }] {
        let err = lyapunov_benettin(&model, &default_state(), &cfg, &bad).unwrap_err();
        assert!(matches!(err, DiagnosticsError::InvalidArgument(_)), "{err}");
    }
}

#[test]
fn drift_of_quadratic_invariants() {
    let model = HybridModel::figure(ModelKind::NonSymmetric1);
    let traj = integrate(&default_state(), &model, &IntegratorConfig::default(), 200.0, 10).unwrap();
    assert!(conservation_drift(&traj, "norm").unwrap() < 1e-8);
    assert!(conservation_drift(&traj, "sigma_z2").unwrap() < 1e-8);
    assert!(conservation_drift(&traj, "sigma_z1").unwrap() > 0.1);
    assert!(relative_drift(&traj, "energy").unwrap() < 1e-2);
    let err = conservation_drift(&traj, "angular_momentum").unwrap_err();
    assert_eq!(err, DiagnosticsError::UnknownObservable("angular_momentum".into()));
}

#[test]
fn classification_rules() {
    let th = VerdictThresholds::default();
    let tone = 1e-12;
    assert_eq!(classify(None, 1.0, 1.0, tone, &th), Verdict::Indeterminate);
    assert_eq!(classify(Some(5e-4), 0.95, 1e-10, tone, &th), Verdict::Regular);
    assert_eq!(classify(Some(-5e-4), 0.95, 1e-10, tone, &th), Verdict::Regular);
    assert_eq!(classify(Some(5e-4), 0.5, 1e-10, tone, &th), Verdict::Indeterminate);
    assert_eq!(classify(Some(1.5), 0.01, 1e-3, tone, &th), Verdict::Chaotic);
    assert_eq!(classify(Some(1.5), 0.01, 5e-12, tone, &th), Verdict::Indeterminate);
    assert_eq!(classify(Some(3e-3), 0.01, 1e-3, tone, &th), Verdict::Indeterminate);
    // Both boundaries are exclusive for λ.
    assert_eq!(classify(Some(1e-3), 0.95, 1e-10, tone, &th), Verdict::Indeterminate);
    assert_eq!(classify(Some(5e-3), 0.01, 1e-3, tone, &th), Verdict::Indeterminate);
}

#[test]
fn report_from_a_pure_tone() {
    let dt = 0.1;
    let series: Vec<f64> = (0..4096).map(|k| (2.0 * std::f64::consts::PI * 0.25 * k as f64 * dt).sin()).collect();
    let (report, sp) = ChaosReport::from_series("q", &series, dt, Some(0.0), VerdictThresholds::default()).unwrap();
    assert_eq!(report.verdict, Verdict::Regular);
    // 0.25 falls 0.4 bins off the grid, so some power leaks past the three
    // central bins.
    assert!(report.dominant_peak_fraction > 0.98);
    assert!((sp.dominant_peak().unwrap().freq - 0.25).abs() < 1e-3);
    assert_eq!(report.series, "q");
    assert!(ChaosReport::from_series("q", &series[..8], dt, None, VerdictThresholds::default()).is_err());
}

#[test]
fn verdict_names() {
    assert_eq!(Verdict::Chaotic.to_string(), "chaotic");
    assert_eq!(toml::to_string(&ChaosReport {
        series: "x1".into(),
        lyapunov: None,
        dominant_peak_fraction: 0.1,
        spectral_flatness: 0.2,
        pure_tone_flatness: 0.0,
        verdict: Verdict::Indeterminate,
        thresholds: VerdictThresholds::default(),
    })
    .unwrap()
    .contains("verdict = \"indeterminate\""), true);
}
