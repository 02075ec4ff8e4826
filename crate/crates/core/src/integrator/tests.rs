use super::*;
use crate::hybrid::{ModelParams, PHASE_DIM};
use crate::pauli::{unitary_evolve, Amplitudes, ModelKind};
use crate::phase_space::{coords_to_state, QuantumPhasePoint};
use approx::assert_abs_diff_eq;

fn decoupled(kind: ModelKind) -> HybridModel {
    let mut params = ModelParams::figure(kind);
    params.c1 = 0.0;
    params.c2 = 0.0;
    HybridModel::new(params).unwrap()
}

fn oscillator_only(q: f64, p: f64) -> HybridState {
    HybridState::new(QuantumPhasePoint::ZERO, q, p)
}

#[test]
fn registry_lists_builtins_and_rejects_unknown() {
    let reg = builtin_schemes();
    assert_eq!(reg.names(), ["gauss-legendre-4", "implicit-midpoint", "rk4", "strang-exact"]);
    assert_eq!(reg.get("rk4").unwrap().order(), 4);
    assert!(reg.get("implicit-midpoint").unwrap().is_symplectic());
    let err = Integrator::new(&IntegratorConfig::with_scheme("leapfrog", 0.01)).err().unwrap();
    assert!(matches!(err, IntegrateError::UnknownScheme { .. }), "{err}");
}

#[test]
fn custom_schemes_can_be_registered() {
    struct Frozen;
    impl Scheme for Frozen {
        fn name(&self) -> &'static str {
            "frozen"
        }
        fn order(&self) -> u32 {
            0
        }
        fn is_symplectic(&self) -> bool {
            true
        }
        fn step(&self, _: &dyn VectorField, s: &PhaseVector, _: f64, _: &SolverSettings) -> Result<PhaseVector, StepError> {
            Ok(*s)
        }
    }
    let mut reg = SchemeRegistry::with_builtins();
    assert!(reg.register(Arc::new(Frozen)).is_none());
    let integ = Integrator::from_registry(&reg, &IntegratorConfig::with_scheme("frozen", 0.1)).unwrap();
    let model = HybridModel::figure(ModelKind::Symmetric);
    let s = oscillator_only(1.0, 0.0);
    assert_eq!(integ.step(&model, &s).unwrap(), s);
}

#[test]
fn config_validation() {
    let bad = [
        IntegratorConfig { dt: 0.0, ..Default::default() },
        IntegratorConfig { dt: f64::NAN, ..Default::default() },
        IntegratorConfig { fixed_point_tol: 0.0, ..Default::default() },
        IntegratorConfig { fixed_point_max_iters: 0, ..Default::default() },
    ];
    for cfg in bad {
        assert!(matches!(cfg.validate(), Err(IntegrateError::InvalidConfig(_))), "{cfg:?}");
    }
    assert!(IntegratorConfig::default().validate().is_ok());
}

#[test]
fn midpoint_preserves_oscillator_energy_in_one_step() {
    let model = decoupled(ModelKind::Symmetric);
    let s0 = oscillator_only(1.0, 0.0);
    let s1 = step(&s0, &model, &IntegratorConfig::with_scheme("implicit-midpoint", 0.01)).unwrap();
    assert_abs_diff_eq!(model.classical_energy(&s1), model.classical_energy(&s0), epsilon = 1e-12);
    assert_ne!(s1, s0);
}

#[test]
fn zero_step_is_identity() {
    let model = HybridModel::figure(ModelKind::NonSymmetric2);
    let s = HybridState::from_amplitudes(&Amplitudes::from_real([0.5; 4]), 1.0, 0.0, 1.0).to_array();
    let solver = IntegratorConfig::default().solver();
    for name in builtin_schemes().names() {
        let scheme = builtin_schemes().get(name).unwrap();
        assert_eq!(scheme.step(&model, &s, 0.0, &solver).unwrap(), s, "{name}");
    }
}

#[test]
fn one_step_matches_exact_propagator() {
    // Local error of the midpoint rule on a linear flow is ~ (λh)³/12, so it is
    // checked on a Hamiltonian with spectral radius 1.5; the fourth-order
    // collocation scheme is checked at the figure parameters.
    let psi0 = Amplitudes::new([
        num_complex::Complex64::new(0.3, 0.1),
        num_complex::Complex64::new(-0.5, 0.2),
        num_complex::Complex64::new(0.1, -0.6),
        num_complex::Complex64::new(0.4, 0.0),
    ])
    .normalized()
    .unwrap();
    let h = 1e-3;
    let cases = [
        ("implicit-midpoint", ModelParams { omega: 0.5, mu: 0.5, ..ModelParams::figure(ModelKind::Symmetric) }),
        ("gauss-legendre-4", ModelParams::figure(ModelKind::NonSymmetric1)),
        ("rk4", ModelParams::figure(ModelKind::NonSymmetric2)),
    ];
    for (scheme, mut params) in cases {
        params.c1 = 0.0;
        params.c2 = 0.0;
        let model = HybridModel::new(params).unwrap();
        let s0 = HybridState::from_amplitudes(&psi0, 0.0, 0.0, 1.0);
        let s1 = step(&s0, &model, &IntegratorConfig::with_scheme(scheme, h)).unwrap();
        let exact = unitary_evolve(model.quantum_hamiltonian().matrix(), &psi0, h, 1.0).unwrap();
        let err = coords_to_state(&s1.quantum, 1.0).max_abs_diff(&exact);
        assert!(err < 1e-9, "{scheme}: {err:e}");
    }
}

#[test]
fn symmetric_eigenstate_keeps_sigma_z() {
    let model = HybridModel::figure(ModelKind::Symmetric);
    let s0 = HybridState::from_amplitudes(&Amplitudes::basis(0), 0.0, 0.0, 1.0);
    for scheme in ["implicit-midpoint", "strang-exact"] {
        let traj = integrate(&s0, &model, &IntegratorConfig::with_scheme(scheme, 0.01), 50.0, 10).unwrap();
        for label in ["sigma_z1", "sigma_z2"] {
            for v in traj.observable_values(label).unwrap() {
                assert!((v - 1.0).abs() < 1e-10, "{scheme}: {label} = {v}");
            }
        }
    }
    // Constant force -16 shifts the oscillator centre to q = -8. At |q| ~ 16 the
    // quantum phase turns ~260 rad per unit time, which the midpoint rule at
    // dt = 0.01 under-resolves, so the excursion is checked with a finer
    // fourth-order run.
    let fine = integrate(&s0, &model, &IntegratorConfig::with_scheme("gauss-legendre-4", 1e-3), 5.0, 10).unwrap();
    let q = fine.q_series();
    let q_min = q.iter().copied().fold(f64::INFINITY, f64::min);
    assert_abs_diff_eq!(q_min, -16.0, epsilon = 1e-3);
}

#[test]
fn decoupled_oscillator_matches_closed_form() {
    // H = p²/2m + kq² gives q(t) = cos(sqrt(2k/m) t) from (1, 0).
    let model = decoupled(ModelKind::Symmetric);
    let s0 = oscillator_only(1.0, 0.0);
    let expected = (model.oscillator_frequency() * 10.0).cos();
    for (scheme, dt) in [("implicit-midpoint", 5e-5), ("rk4", 0.01), ("gauss-legendre-4", 0.01), ("strang-exact", 0.01)] {
        let traj = integrate(&s0, &model, &IntegratorConfig::with_scheme(scheme, dt), 10.0, 1000).unwrap();
        let last = traj.final_state().unwrap();
        assert_abs_diff_eq!(*traj.times.last().unwrap(), 10.0, epsilon = dt);
        assert!((last.q - expected).abs() < 1e-8, "{scheme}: {} vs {expected}", last.q);
    }
}

#[test]
fn single_step_trajectory_has_two_samples() {
    let model = HybridModel::figure(ModelKind::Symmetric);
    let s0 = oscillator_only(1.0, 0.0);
    let traj = integrate(&s0, &model, &IntegratorConfig::default(), 0.01, 1).unwrap();
    assert_eq!(traj.len(), 2);
    assert_eq!(traj.times, [0.0, 0.01]);
    assert_eq!(traj.labels().count(), model.monitored_set().len());
    for label in traj.labels() {
        assert_eq!(traj.observable_values(label).unwrap().len(), 2);
    }
}

#[test]
fn sampling_stride_and_bad_arguments() {
    let model = HybridModel::figure(ModelKind::Symmetric);
    let s0 = oscillator_only(1.0, 0.0);
    let cfg = IntegratorConfig::default();
    let traj = integrate(&s0, &model, &cfg, 1.0, 10).unwrap();
    assert_eq!(traj.len(), 11);
    assert!(traj.times.windows(2).all(|w| w[1] > w[0]));
    assert!(integrate(&s0, &model, &cfg, 0.0, 1).is_err());
    assert!(integrate(&s0, &model, &cfg, 1.0, 0).is_err());
}

#[test]
fn oversized_step_reports_non_convergence() {
    let model = HybridModel::figure(ModelKind::NonSymmetric2);
    let s0 = HybridState::from_amplitudes(&Amplitudes::from_real([0.5; 4]), 1.0, 0.0, 1.0);
    let cfg = IntegratorConfig { fixed_point_max_iters: 2, ..IntegratorConfig::with_scheme("implicit-midpoint", 0.5) };
    match integrate(&s0, &model, &cfg, 10.0, 1) {
        Err(IntegrateError::Step { time, source: StepError::NoConvergence { iterations, .. } }) => {
            assert!(iterations <= 2);
            assert_eq!(time, 0.0);
        }
        other => panic!("expected a convergence failure, got {other:?}"),
    }
}

#[test]
fn partial_trajectory_survives_failure() {
    let model = HybridModel::figure(ModelKind::NonSymmetric2);
    let s0 = HybridState::from_amplitudes(&Amplitudes::from_real([0.5; 4]), 1.0, 0.0, 1.0);
    let cfg = IntegratorConfig { fixed_point_max_iters: 2, ..IntegratorConfig::with_scheme("implicit-midpoint", 0.5) };
    let (partial, err) = Integrator::new(&cfg)
        .unwrap()
        .integrate_partial(&s0, &model, model.monitored_set(), 10.0, 1)
        .unwrap_err();
    assert_eq!(partial.len(), 1);
    assert!(matches!(err, IntegrateError::Step { .. }));
}

#[test]
fn steps_are_bitwise_deterministic() {
    let model = HybridModel::figure(ModelKind::NonSymmetric1);
    let s0 = HybridState::from_amplitudes(&Amplitudes::from_real([0.5; 4]), 1.0, 0.0, 1.0);
    for name in builtin_schemes().names() {
        let cfg = IntegratorConfig::with_scheme(name, 0.01);
        let a = integrate(&s0, &model, &cfg, 5.0, 7).unwrap();
        let b = integrate(&s0, &model, &cfg, 5.0, 7).unwrap();
        let bits = |t: &Trajectory| -> Vec<u64> {
            t.states.iter().flat_map(|s| s.to_array()).map(f64::to_bits).collect()
        };
        assert_eq!(bits(&a), bits(&b), "{name}");
    }
}

#[test]
fn backward_direction_undoes_forward() {
    let s0 = HybridState::from_amplitudes(&Amplitudes::from_real([0.5; 4]), 1.0, 0.0, 1.0).to_array();
    // Roundoff is amplified along the chaotic orbit, so that one is kept short.
    for (kind, span) in [(ModelKind::Symmetric, 10.0), (ModelKind::NonSymmetric1, 2.0)] {
        let model = HybridModel::figure(kind);
        for scheme in ["implicit-midpoint", "strang-exact"] {
            let cfg = IntegratorConfig::with_scheme(scheme, 0.01);
            let fwd = Integrator::new(&cfg).unwrap();
            let back = Integrator::new(&IntegratorConfig { direction: Direction::Backward, ..cfg }).unwrap();
            let there = fwd.advance(&model, &s0, span).unwrap();
            let again = back.advance(&model, &there, span).unwrap();
            let err = (0..PHASE_DIM).map(|i| (again[i] - s0[i]).abs()).fold(0.0, f64::max);
            assert!(err < 1e-9, "{kind:?} {scheme}: {err:e}");
        }
    }
}

#[test]
fn split_scheme_conserves_symmetric_invariants() {
    let model = HybridModel::figure(ModelKind::Symmetric);
    let s0 = HybridState::from_amplitudes(&Amplitudes::from_real([0.5; 4]), 1.0, 0.0, 1.0);
    let traj = integrate(&s0, &model, &IntegratorConfig::default(), 200.0, 10).unwrap();
    for label in ["energy", "sigma_z1", "sigma_z2", "norm"] {
        let v = traj.observable_values(label).unwrap();
        let drift = v.iter().map(|x| (x - v[0]).abs()).fold(0.0, f64::max);
        assert!(drift < 1e-10, "{label}: {drift:e}");
    }
    // Zero net force: the oscillator runs free.
    let last = traj.final_state().unwrap();
    assert_abs_diff_eq!(last.q, (model.oscillator_frequency() * 200.0).cos(), epsilon = 1e-9);
}

#[test]
fn split_scheme_needs_a_hybrid_model() {
    struct Plain;
    impl VectorField for Plain {
        fn eval(&self, v: &PhaseVector) -> PhaseVector {
            *v
        }
    }
    let scheme = builtin_schemes().get("strang-exact").unwrap();
    let err = scheme.step(&Plain, &[0.0; PHASE_DIM], 0.1, &IntegratorConfig::default().solver()).unwrap_err();
    assert!(matches!(err, StepError::Unsupported { .. }), "{err}");
}
