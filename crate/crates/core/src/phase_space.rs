//! Canonical coordinates of the quantum subsystem.
//!
//! A state `|ψ> = Σ c_n |n>` maps to real coordinates through
//! `c_n = (x_n + i y_n) / sqrt(2ħ)`, so a normalised state satisfies
//! `Σ (x_n² + y_n²) = 2ħ`. An observable `Â = R + iS` (R symmetric, S
//! antisymmetric) becomes the quadratic form
//! `A(x, y) = (xᵀRx + yᵀRy - 2xᵀSy) / 2ħ`.

use num_complex::Complex64 as C64;

use crate::pauli::{single_qubit_operator, AlgebraError, Amplitudes, Axis, ComplexMatrix, Qubit, HERMITIAN_TOL};

pub type Real4 = [f64; 4];
pub type RealMatrix4 = [[f64; 4]; 4];

#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub struct QuantumPhasePoint {
    pub x: Real4,
    pub y: Real4,
}

impl QuantumPhasePoint {
    pub const ZERO: QuantumPhasePoint = QuantumPhasePoint { x: [0.0; 4], y: [0.0; 4] };

    pub fn new(x: Real4, y: Real4) -> Self {
        Self { x, y }
    }

    /// `Σ (x_n² + y_n²)`, equal to `2ħ` on physical states.
    pub fn norm_squared(&self) -> f64 {
        self.x.iter().chain(&self.y).map(|v| v * v).sum()
    }
}

pub fn state_to_coords(psi: &Amplitudes, hbar: f64) -> QuantumPhasePoint {
    let s = (2.0 * hbar).sqrt();
    QuantumPhasePoint { x: psi.0.map(|c| s * c.re), y: psi.0.map(|c| s * c.im) }
}

pub fn coords_to_state(p: &QuantumPhasePoint, hbar: f64) -> Amplitudes {
    let s = (2.0 * hbar).sqrt();
    let mut c = [C64::new(0.0, 0.0); 4];
    for (n, c) in c.iter_mut().enumerate() {
        *c = C64::new(p.x[n] / s, p.y[n] / s);
    }
    Amplitudes(c)
}

/// A Hermitian operator viewed as a quadratic function on phase space.
#[derive(Clone, Debug)]
pub struct QuadraticObservable {
    matrix: ComplexMatrix,
    scale: f64,
    re: RealMatrix4,
    im: RealMatrix4,
}

impl QuadraticObservable {
    pub fn new(matrix: ComplexMatrix, scale: f64) -> Result<Self, AlgebraError> {
        if matrix.dim() != 4 {
            return Err(AlgebraError::DimensionMismatch { expected: 4, got: matrix.dim() });
        }
        let deviation = matrix.hermitian_deviation();
        if deviation > HERMITIAN_TOL * matrix.max_abs().max(1.0) {
            return Err(AlgebraError::NotHermitian { deviation });
        }
        let mut re = [[0.0; 4]; 4];
        let mut im = [[0.0; 4]; 4];
        for i in 0..4 {
            for j in 0..4 {
                // Symmetrise so R and S are exactly symmetric / antisymmetric.
                let avg = 0.5 * (matrix[(i, j)] + matrix[(j, i)].conj());
                re[i][j] = avg.re;
                im[i][j] = avg.im;
            }
        }
        Ok(Self { matrix, scale, re, im })
    }

    pub fn unscaled(matrix: ComplexMatrix) -> Result<Self, AlgebraError> {
        Self::new(matrix, 1.0)
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    /// Scaled real part `scale·R`.
    pub fn real_part(&self) -> RealMatrix4 {
        self.re.map(|row| row.map(|v| v * self.scale))
    }

    /// Scaled imaginary part `scale·S`.
    pub fn imag_part(&self) -> RealMatrix4 {
        self.im.map(|row| row.map(|v| v * self.scale))
    }

    pub fn eval(&self, p: &QuantumPhasePoint, hbar: f64) -> f64 {
        let rx = matvec(&self.re, &p.x);
        let ry = matvec(&self.re, &p.y);
        let sy = matvec(&self.im, &p.y);
        (dot(&p.x, &rx) + dot(&p.y, &ry) - 2.0 * dot(&p.x, &sy)) * self.scale / (2.0 * hbar)
    }

    /// `(∂A/∂x, ∂A/∂y)`.
    pub fn gradient(&self, p: &QuantumPhasePoint, hbar: f64) -> (Real4, Real4) {
        let f = self.scale / hbar;
        let rx = matvec(&self.re, &p.x);
        let ry = matvec(&self.re, &p.y);
        let sx = matvec(&self.im, &p.x);
        let sy = matvec(&self.im, &p.y);
        let mut gx = [0.0; 4];
        let mut gy = [0.0; 4];
        for n in 0..4 {
            gx[n] = (rx[n] - sy[n]) * f;
            gy[n] = (ry[n] + sx[n]) * f;
        }
        (gx, gy)
    }
}

pub fn eval_observable(a: &QuadraticObservable, p: &QuantumPhasePoint, hbar: f64) -> f64 {
    a.eval(p, hbar)
}

pub fn gradient(a: &QuadraticObservable, p: &QuantumPhasePoint, hbar: f64) -> (Real4, Real4) {
    a.gradient(p, hbar)
}

/// `<σ_axis^qubit>` at a phase point.
pub fn expectation_sigma(qubit: Qubit, axis: Axis, p: &QuantumPhasePoint, hbar: f64) -> f64 {
    QuadraticObservable::unscaled(single_qubit_operator(qubit, axis))
        .expect("Pauli operators are Hermitian")
        .eval(p, hbar)
}

pub(crate) fn matvec(m: &RealMatrix4, v: &Real4) -> Real4 {
    let mut out = [0.0; 4];
    for (i, row) in m.iter().enumerate() {
        out[i] = row[0] * v[0] + row[1] * v[1] + row[2] * v[2] + row[3] * v[3];
    }
    out
}

pub(crate) fn dot(a: &Real4, b: &Real4) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2] + a[3] * b[3]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pauli::{build_quantum_hamiltonian, ModelKind};
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use std::f64::consts::SQRT_2;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn arb_amplitudes() -> impl Strategy<Value = Amplitudes> {
        prop::array::uniform8(-1.0f64..1.0).prop_filter_map("nonzero state", |v| {
            Amplitudes::new([c(v[0], v[1]), c(v[2], v[3]), c(v[4], v[5]), c(v[6], v[7])]).normalized()
        })
    }

    fn arb_hermitian() -> impl Strategy<Value = ComplexMatrix> {
        prop::array::uniform16(-3.0f64..3.0).prop_map(|v| {
            let mut m = ComplexMatrix::zeros(4);
            let mut k = 0;
            for i in 0..4 {
                m[(i, i)] = c(v[k], 0.0);
                k += 1;
                for j in (i + 1)..4 {
                    m[(i, j)] = c(v[k], v[(k + 6) % 16]);
                    m[(j, i)] = m[(i, j)].conj();
                    k += 1;
                }
            }
            m
        })
    }

    #[test]
    fn coordinate_scaling_examples() {
        let p = state_to_coords(&Amplitudes::basis(0), 1.0);
        assert_eq!(p, QuantumPhasePoint::new([SQRT_2, 0.0, 0.0, 0.0], [0.0; 4]));

        let p = state_to_coords(&Amplitudes::new([c(0.0, 1.0), c(0.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)]), 1.0);
        assert_eq!(p, QuantumPhasePoint::new([0.0; 4], [SQRT_2, 0.0, 0.0, 0.0]));

        let p = state_to_coords(&Amplitudes::from_real([0.5; 4]), 1.0);
        for n in 0..4 {
            assert_abs_diff_eq!(p.x[n], 1.0 / SQRT_2, epsilon = 1e-15);
            assert_eq!(p.y[n], 0.0);
        }
    }

    #[test]
    fn inverse_map_examples() {
        let psi = coords_to_state(&QuantumPhasePoint::new([SQRT_2, 0.0, 0.0, 0.0], [0.0; 4]), 1.0);
        assert!(psi.max_abs_diff(&Amplitudes::basis(0)) < 1e-15);
        let zero = coords_to_state(&QuantumPhasePoint::ZERO, 2.0);
        assert_eq!(zero.norm_sqr(), 0.0);
    }

    #[test]
    fn symmetric_hamiltonian_expectation_on_basis_state() {
        let h = QuadraticObservable::unscaled(build_quantum_hamiltonian(ModelKind::Symmetric, 1.0, 5.0, 1.0, 1.0)).unwrap();
        let p = state_to_coords(&Amplitudes::basis(0), 1.0);
        assert_abs_diff_eq!(h.eval(&p, 1.0), 7.0, epsilon = 1e-14);

        let (gx, gy) = h.gradient(&p, 1.0);
        assert_abs_diff_eq!(gx[0], 7.0 * SQRT_2, epsilon = 1e-13);
        assert!(gx[1..].iter().chain(&gy).all(|&g| g == 0.0));
    }

    #[test]
    fn simple_expectations() {
        let z1 = QuadraticObservable::unscaled(single_qubit_operator(Qubit::First, Axis::Z)).unwrap();
        let balanced = state_to_coords(&Amplitudes::from_real([0.5; 4]), 1.0);
        assert_abs_diff_eq!(z1.eval(&balanced, 1.0), 0.0, epsilon = 1e-15);

        let id = QuadraticObservable::unscaled(ComplexMatrix::identity(4)).unwrap();
        for hbar in [0.25, 1.0, 4.0] {
            let p = state_to_coords(&Amplitudes::from_real([0.1, 0.7, -0.2, 0.3]).normalized().unwrap(), hbar);
            assert_abs_diff_eq!(id.eval(&p, hbar), 1.0, epsilon = 1e-14);
        }

        let (gx, gy) = z1.gradient(&QuantumPhasePoint::ZERO, 1.0);
        assert_eq!((gx, gy), ([0.0; 4], [0.0; 4]));
    }

    #[test]
    fn sigma_expectations_on_named_states() {
        let up = state_to_coords(&Amplitudes::basis(0), 1.0);
        let down = state_to_coords(&Amplitudes::basis(3), 1.0);
        let plus = state_to_coords(&Amplitudes::from_real([0.5; 4]), 1.0);
        assert_abs_diff_eq!(expectation_sigma(Qubit::First, Axis::Z, &up, 1.0), 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(expectation_sigma(Qubit::Second, Axis::Z, &up, 1.0), 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(expectation_sigma(Qubit::First, Axis::Z, &down, 1.0), -1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(expectation_sigma(Qubit::Second, Axis::Z, &down, 1.0), -1.0, epsilon = 1e-15);
        // (1,1,1,1)/2 = |+>|+>, the +1 eigenstate of σx on either qubit.
        assert_abs_diff_eq!(expectation_sigma(Qubit::First, Axis::X, &plus, 1.0), 1.0, epsilon = 1e-15);
        let oracle = Amplitudes::from_real([0.5; 4]).expectation(&single_qubit_operator(Qubit::First, Axis::X)).unwrap();
        assert_abs_diff_eq!(oracle.re, 1.0, epsilon = 1e-15);
    }

    #[test]
    fn sigma_z1_closed_form() {
        let p = QuantumPhasePoint::new([0.3, -0.4, 0.5, 0.1], [0.2, 0.6, -0.7, 0.3]);
        let hbar = 0.8;
        let expected = (p.x[0].powi(2) + p.y[0].powi(2) + p.x[1].powi(2) + p.y[1].powi(2)
            - p.x[2].powi(2)
            - p.y[2].powi(2)
            - p.x[3].powi(2)
            - p.y[3].powi(2))
            / (2.0 * hbar);
        assert_abs_diff_eq!(expectation_sigma(Qubit::First, Axis::Z, &p, hbar), expected, epsilon = 1e-15);
    }

    #[test]
    fn rejects_non_hermitian_matrix() {
        let mut m = ComplexMatrix::zeros(4);
        m[(0, 1)] = c(0.0, 1.0);
        assert!(QuadraticObservable::unscaled(m).is_err());
    }

    proptest! {
        #[test]
        fn coords_round_trip(psi in arb_amplitudes(), hbar in 0.1f64..5.0) {
            let p = state_to_coords(&psi, hbar);
            prop_assert!((p.norm_squared() - 2.0 * hbar).abs() < 1e-12 * hbar.max(1.0));
            prop_assert!(coords_to_state(&p, hbar).max_abs_diff(&psi) < 1e-14);
        }

        #[test]
        fn quadratic_form_equals_matrix_expectation(a in arb_hermitian(), psi in arb_amplitudes(), hbar in 0.1f64..5.0) {
            let obs = QuadraticObservable::unscaled(a.clone()).unwrap();
            let via_coords = obs.eval(&state_to_coords(&psi, hbar), hbar);
            let via_matrix = psi.expectation(&a).unwrap();
            prop_assert!((via_coords - via_matrix.re).abs() < 1e-12);
            prop_assert!(via_matrix.im.abs() < 1e-12);
        }

        #[test]
        fn global_phase_invariance(a in arb_hermitian(), psi in arb_amplitudes(), theta in 0.0f64..6.3) {
            let obs = QuadraticObservable::unscaled(a).unwrap();
            let v0 = obs.eval(&state_to_coords(&psi, 1.0), 1.0);
            let v1 = obs.eval(&state_to_coords(&psi.with_global_phase(theta), 1.0), 1.0);
            prop_assert!((v0 - v1).abs() < 1e-12);
        }

        #[test]
        fn gradient_matches_central_differences(
            a in arb_hermitian(),
            x in prop::array::uniform4(-1.5f64..1.5),
            y in prop::array::uniform4(-1.5f64..1.5),
            scale in 0.5f64..2.0,
        ) {
            let hbar = 1.0;
            let obs = QuadraticObservable::new(a, scale).unwrap();
            let p = QuantumPhasePoint::new(x, y);
            let (gx, gy) = obs.gradient(&p, hbar);
            let h = 1e-5;
            let fd = |k: usize| {
                let (mut plus, mut minus) = (p, p);
                if k < 4 { plus.x[k] += h; minus.x[k] -= h; } else { plus.y[k - 4] += h; minus.y[k - 4] -= h; }
                (obs.eval(&plus, hbar) - obs.eval(&minus, hbar)) / (2.0 * h)
            };
            let gnorm = gx.iter().chain(&gy).fold(0.0f64, |m, g| m.max(g.abs())).max(1.0);
            for k in 0..8 {
                let analytic = if k < 4 { gx[k] } else { gy[k - 4] };
                prop_assert!((fd(k) - analytic).abs() < 1e-8 * gnorm, "component {}: fd {} vs {}", k, fd(k), analytic);
            }
        }
    }
}
