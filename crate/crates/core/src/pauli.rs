//! Two-qubit operator algebra.
//!
//! Operators live in the computational basis `|1,1>, |1,-1>, |-1,1>, |-1,-1>`
//! where `|±1>` are the eigenvectors of σz and qubit 1 is the outer (slow)
//! Kronecker index. Every other module indexes into this ordering.

use std::fmt;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Absolute tolerance under which a matrix is treated as Hermitian.
pub const HERMITIAN_TOL: f64 = 1e-14;

/// Off-diagonal Frobenius norm at which the Jacobi sweep stops.
const JACOBI_TOL: f64 = 1e-13;
const JACOBI_MAX_SWEEPS: usize = 64;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AlgebraError {
    #[error("dimension mismatch: expected {expected}x{expected}, got {got}x{got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("entry buffer of length {len} does not describe a square matrix of dimension {dim}")]
    MalformedEntries { dim: usize, len: usize },
    #[error("matrix is not Hermitian: |A_ij - conj(A_ji)| reaches {deviation:e}")]
    NotHermitian { deviation: f64 },
    #[error("Jacobi eigensolver did not converge (off-diagonal norm {off_norm:e})")]
    NoConvergence { off_norm: f64 },
}

/// Dense square complex matrix stored row-major.
#[derive(Clone, PartialEq)]
pub struct ComplexMatrix {
    dim: usize,
    entries: Vec<C64>,
}

impl ComplexMatrix {
    pub fn zeros(dim: usize) -> Self {
        assert!(dim > 0, "matrix dimension must be positive");
        Self { dim, entries: vec![C64::new(0.0, 0.0); dim * dim] }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m[(i, i)] = C64::new(1.0, 0.0);
        }
        m
    }

    pub fn from_entries(dim: usize, entries: Vec<C64>) -> Result<Self, AlgebraError> {
        if dim == 0 || entries.len() != dim * dim {
            return Err(AlgebraError::MalformedEntries { dim, len: entries.len() });
        }
        Ok(Self { dim, entries })
    }

    pub fn from_real_diagonal(diag: &[f64]) -> Self {
        let mut m = Self::zeros(diag.len());
        for (i, &d) in diag.iter().enumerate() {
            m[(i, i)] = C64::new(d, 0.0);
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn entries(&self) -> &[C64] {
        &self.entries
    }

    pub fn adjoint(&self) -> Self {
        let mut out = Self::zeros(self.dim);
        for i in 0..self.dim {
            for j in 0..self.dim {
                out[(j, i)] = self[(i, j)].conj();
            }
        }
        out
    }

    pub fn scale(&self, factor: C64) -> Self {
        Self { dim: self.dim, entries: self.entries.iter().map(|z| z * factor).collect() }
    }

    pub fn scale_real(&self, factor: f64) -> Self {
        self.scale(C64::new(factor, 0.0))
    }

    pub fn add(&self, other: &Self) -> Result<Self, AlgebraError> {
        self.check_same_dim(other)?;
        let entries = self.entries.iter().zip(&other.entries).map(|(a, b)| a + b).collect();
        Ok(Self { dim: self.dim, entries })
    }

    pub fn sub(&self, other: &Self) -> Result<Self, AlgebraError> {
        self.check_same_dim(other)?;
        let entries = self.entries.iter().zip(&other.entries).map(|(a, b)| a - b).collect();
        Ok(Self { dim: self.dim, entries })
    }

    pub fn matmul(&self, other: &Self) -> Result<Self, AlgebraError> {
        self.check_same_dim(other)?;
        let n = self.dim;
        let mut out = Self::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let a = self[(i, k)];
                if a == C64::new(0.0, 0.0) {
                    continue;
                }
                for j in 0..n {
                    out[(i, j)] += a * other[(k, j)];
                }
            }
        }
        Ok(out)
    }

    /// `[A, B] = AB - BA`.
    pub fn commutator(&self, other: &Self) -> Result<Self, AlgebraError> {
        self.matmul(other)?.sub(&other.matmul(self)?)
    }

    pub fn max_abs(&self) -> f64 {
        self.entries.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Largest `|A_ij - conj(A_ji)|` over all index pairs.
    pub fn hermitian_deviation(&self) -> f64 {
        let mut dev = 0.0f64;
        for i in 0..self.dim {
            for j in i..self.dim {
                dev = dev.max((self[(i, j)] - self[(j, i)].conj()).norm());
            }
        }
        dev
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.hermitian_deviation() <= tol
    }

    pub fn trace(&self) -> C64 {
        (0..self.dim).map(|i| self[(i, i)]).sum()
    }

    fn check_same_dim(&self, other: &Self) -> Result<(), AlgebraError> {
        if self.dim != other.dim {
            return Err(AlgebraError::DimensionMismatch { expected: self.dim, got: other.dim });
        }
        Ok(())
    }
}

impl std::ops::Index<(usize, usize)> for ComplexMatrix {
    type Output = C64;

    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        &self.entries[i * self.dim + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for ComplexMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C64 {
        &mut self.entries[i * self.dim + j]
    }
}

impl fmt::Debug for ComplexMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "ComplexMatrix {}x{} [", self.dim, self.dim)?;
        for i in 0..self.dim {
            write!(f, "  ")?;
            for j in 0..self.dim {
                let z = self[(i, j)];
                write!(f, "{:+.6}{:+.6}i  ", z.re, z.im)?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

/// Four complex amplitudes `c_1..c_4` of a two-qubit pure state.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Amplitudes(pub [C64; 4]);

impl Amplitudes {
    pub fn new(entries: [C64; 4]) -> Self {
        Self(entries)
    }

    pub fn from_real(entries: [f64; 4]) -> Self {
        Self(entries.map(|re| C64::new(re, 0.0)))
    }

    /// `|1,1>`, `|1,-1>`, `|-1,1>`, `|-1,-1>` for `index` 0..4.
    pub fn basis(index: usize) -> Self {
        let mut c = [C64::new(0.0, 0.0); 4];
        c[index] = C64::new(1.0, 0.0);
        Self(c)
    }

    pub fn norm_sqr(&self) -> f64 {
        self.0.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn normalized(&self) -> Option<Self> {
        let n = self.norm_sqr().sqrt();
        (n > 0.0 && n.is_finite()).then(|| Self(self.0.map(|z| z / n)))
    }

    /// Componentwise maximum of `|a_n - b_n|`.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.0.iter().zip(&other.0).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max)
    }

    /// Multiplies every amplitude by `e^{iθ}`.
    pub fn with_global_phase(&self, theta: f64) -> Self {
        let phase = C64::from_polar(1.0, theta);
        Self(self.0.map(|z| z * phase))
    }

    pub fn apply(matrix: &ComplexMatrix, v: &Self) -> Result<Self, AlgebraError> {
        if matrix.dim() != 4 {
            return Err(AlgebraError::DimensionMismatch { expected: 4, got: matrix.dim() });
        }
        let mut out = [C64::new(0.0, 0.0); 4];
        for (i, o) in out.iter_mut().enumerate() {
            *o = (0..4).map(|j| matrix[(i, j)] * v.0[j]).sum();
        }
        Ok(Self(out))
    }

    /// `<v|A|v>`; real for Hermitian `A`.
    pub fn expectation(&self, matrix: &ComplexMatrix) -> Result<C64, AlgebraError> {
        let av = Self::apply(matrix, self)?;
        Ok(self.0.iter().zip(&av.0).map(|(c, a)| c.conj() * a).sum())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    X,
    Y,
    Z,
}

/// Which qubit a single-qubit operator acts on.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Qubit {
    First,
    Second,
}

/// The three quantum parts studied: one with SO(2)×SO(2) symmetry and two that break it.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ModelKind {
    /// `ħω σz¹ + ħω σz² + ħμ σz¹σz²`; σz¹ and σz² are both conserved.
    #[serde(rename = "symmetric")]
    Symmetric,
    /// Symmetric plus `ħβ σy¹`; only σz² is conserved.
    #[serde(rename = "nonsymmetric1")]
    NonSymmetric1,
    /// `ħω σz¹ + ħω σz² + ħμ σx¹σx²`; no additional conserved observable.
    #[serde(rename = "nonsymmetric2")]
    NonSymmetric2,
}

impl ModelKind {
    pub const ALL: [ModelKind; 3] = [ModelKind::Symmetric, ModelKind::NonSymmetric1, ModelKind::NonSymmetric2];

    pub fn name(self) -> &'static str {
        match self {
            ModelKind::Symmetric => "symmetric",
            ModelKind::NonSymmetric1 => "nonsymmetric1",
            ModelKind::NonSymmetric2 => "nonsymmetric2",
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

pub fn pauli(axis: Axis) -> ComplexMatrix {
    let (o, z, i) = (C64::new(1.0, 0.0), C64::new(0.0, 0.0), C64::new(0.0, 1.0));
    let entries = match axis {
        Axis::X => vec![z, o, o, z],
        Axis::Y => vec![z, -i, i, z],
        Axis::Z => vec![o, z, z, -o],
    };
    ComplexMatrix { dim: 2, entries }
}

/// Kronecker product of two single-qubit operators; `a` acts on qubit 1.
pub fn tensor_product(a: &ComplexMatrix, b: &ComplexMatrix) -> Result<ComplexMatrix, AlgebraError> {
    for m in [a, b] {
        if m.dim() != 2 {
            return Err(AlgebraError::DimensionMismatch { expected: 2, got: m.dim() });
        }
    }
    let mut out = ComplexMatrix::zeros(4);
    for (i1, j1, i2, j2) in kron_indices() {
        out[(2 * i1 + i2, 2 * j1 + j2)] = a[(i1, j1)] * b[(i2, j2)];
    }
    Ok(out)
}

fn kron_indices() -> impl Iterator<Item = (usize, usize, usize, usize)> {
    (0..16).map(|n| (n >> 3 & 1, n >> 2 & 1, n >> 1 & 1, n & 1))
}

/// `σ_axis` acting on one qubit, identity on the other, as a 4×4 operator.
pub fn single_qubit_operator(qubit: Qubit, axis: Axis) -> ComplexMatrix {
    let (a, b) = match qubit {
        Qubit::First => (pauli(axis), ComplexMatrix::identity(2)),
        Qubit::Second => (ComplexMatrix::identity(2), pauli(axis)),
    };
    tensor_product(&a, &b).expect("2x2 factors")
}

/// `σ_a¹ σ_b²` as a 4×4 operator.
pub fn two_qubit_operator(first: Axis, second: Axis) -> ComplexMatrix {
    tensor_product(&pauli(first), &pauli(second)).expect("2x2 factors")
}

/// Builds the quantum Hamiltonian of the requested kind.
///
/// `beta` only enters [`ModelKind::NonSymmetric1`].
pub fn build_quantum_hamiltonian(kind: ModelKind, omega: f64, mu: f64, beta: f64, hbar: f64) -> ComplexMatrix {
    let z1 = single_qubit_operator(Qubit::First, Axis::Z);
    let z2 = single_qubit_operator(Qubit::Second, Axis::Z);
    let local = z1.add(&z2).expect("4x4").scale_real(hbar * omega);
    let h = match kind {
        ModelKind::Symmetric => local.add(&two_qubit_operator(Axis::Z, Axis::Z).scale_real(hbar * mu)),
        ModelKind::NonSymmetric1 => local
            .add(&two_qubit_operator(Axis::Z, Axis::Z).scale_real(hbar * mu))
            .and_then(|h| h.add(&single_qubit_operator(Qubit::First, Axis::Y).scale_real(hbar * beta))),
        ModelKind::NonSymmetric2 => local.add(&two_qubit_operator(Axis::X, Axis::X).scale_real(hbar * mu)),
    };
    h.expect("4x4")
}

/// Eigen-decomposition `A = V diag(λ) V†` of a Hermitian matrix.
#[derive(Clone, Debug)]
pub struct HermitianEigen {
    pub values: Vec<f64>,
    /// Columns are the eigenvectors.
    pub vectors: ComplexMatrix,
}

/// Cyclic complex Jacobi eigensolver for small Hermitian matrices.
pub fn hermitian_eigen(matrix: &ComplexMatrix) -> Result<HermitianEigen, AlgebraError> {
    let scale = matrix.max_abs().max(1.0);
    let deviation = matrix.hermitian_deviation();
    if deviation > HERMITIAN_TOL * scale {
        return Err(AlgebraError::NotHermitian { deviation });
    }
    let n = matrix.dim();
    let mut a = matrix.clone();
    let mut v = ComplexMatrix::identity(n);
    let off_norm = |a: &ComplexMatrix| -> f64 {
        let mut s = 0.0;
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    s += a[(i, j)].norm_sqr();
                }
            }
        }
        s.sqrt()
    };

    for _ in 0..JACOBI_MAX_SWEEPS {
        if off_norm(&a) <= JACOBI_TOL * scale {
            let values = (0..n).map(|i| a[(i, i)].re).collect();
            return Ok(HermitianEigen { values, vectors: v });
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[(p, q)];
                let r = apq.norm();
                if r == 0.0 {
                    continue;
                }
                // Phase-strip the pivot, then rotate the resulting real symmetric block.
                let phase = apq / r;
                let app = a[(p, p)].re;
                let aqq = a[(q, q)].re;
                let theta = 0.5 * (2.0 * r).atan2(aqq - app);
                let (s, c) = theta.sin_cos();
                // G = [[c, s], [-s e^{-iφ}, c e^{-iφ}]] on the (p, q) plane.
                let gpp = C64::new(c, 0.0);
                let gpq = C64::new(s, 0.0);
                let gqp = -phase.conj() * s;
                let gqq = phase.conj() * c;

                // A <- A G
                for k in 0..n {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = akp * gpp + akq * gqp;
                    a[(k, q)] = akp * gpq + akq * gqq;
                }
                // A <- G† A
                for k in 0..n {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = gpp.conj() * apk + gqp.conj() * aqk;
                    a[(q, k)] = gpq.conj() * apk + gqq.conj() * aqk;
                }
                a[(p, q)] = C64::new(0.0, 0.0);
                a[(q, p)] = C64::new(0.0, 0.0);
                a[(p, p)] = C64::new(a[(p, p)].re, 0.0);
                a[(q, q)] = C64::new(a[(q, q)].re, 0.0);
                // V <- V G
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = vkp * gpp + vkq * gqp;
                    v[(k, q)] = vkp * gpq + vkq * gqq;
                }
            }
        }
    }
    Err(AlgebraError::NoConvergence { off_norm: off_norm(&a) })
}

/// Exact propagation `exp(-iHt/ħ) ψ0` by diagonalising `H`.
///
/// This is the reference solution that the phase-space integrators are checked against;
/// it never time-steps.
pub fn unitary_evolve(hamiltonian: &ComplexMatrix, psi0: &Amplitudes, t: f64, hbar: f64) -> Result<Amplitudes, AlgebraError> {
    if hamiltonian.dim() != 4 {
        return Err(AlgebraError::DimensionMismatch { expected: 4, got: hamiltonian.dim() });
    }
    let eig = hermitian_eigen(hamiltonian)?;
    if t == 0.0 {
        return Ok(*psi0);
    }
    let v = &eig.vectors;
    let mut out = [C64::new(0.0, 0.0); 4];
    for k in 0..4 {
        // Projection onto eigenvector k, then the phase it accumulates.
        let proj: C64 = (0..4).map(|j| v[(j, k)].conj() * psi0.0[j]).sum();
        let phased = proj * C64::from_polar(1.0, -eig.values[k] * t / hbar);
        for (i, o) in out.iter_mut().enumerate() {
            *o += v[(i, k)] * phased;
        }
    }
    Ok(Amplitudes(out))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn assert_matrix_eq(a: &ComplexMatrix, b: &ComplexMatrix, tol: f64) {
        assert_eq!(a.dim(), b.dim());
        let diff = a.sub(b).unwrap().max_abs();
        assert!(diff <= tol, "matrices differ by {diff:e}\n{a:?}\n{b:?}");
    }

    #[test]
    fn pauli_matrices_are_standard() {
        let z = pauli(Axis::Z);
        assert_eq!(z.entries(), &[c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(-1.0, 0.0)]);
        let x = pauli(Axis::X);
        assert_eq!(x.entries(), &[c(0.0, 0.0), c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)]);
        for axis in [Axis::X, Axis::Y, Axis::Z] {
            let s = pauli(axis);
            assert!(s.is_hermitian(0.0));
            assert_eq!(s.trace(), c(0.0, 0.0));
            assert_matrix_eq(&s.matmul(&s).unwrap(), &ComplexMatrix::identity(2), 0.0);
        }
    }

    #[test]
    fn kronecker_products_in_computational_order() {
        let zz = tensor_product(&pauli(Axis::Z), &pauli(Axis::Z)).unwrap();
        assert_matrix_eq(&zz, &ComplexMatrix::from_real_diagonal(&[1.0, -1.0, -1.0, 1.0]), 0.0);

        let iz = tensor_product(&ComplexMatrix::identity(2), &pauli(Axis::Z)).unwrap();
        assert_matrix_eq(&iz, &ComplexMatrix::from_real_diagonal(&[1.0, -1.0, 1.0, -1.0]), 0.0);

        let xx = tensor_product(&pauli(Axis::X), &pauli(Axis::X)).unwrap();
        for i in 0..4 {
            for j in 0..4 {
                let expected = if i + j == 3 { 1.0 } else { 0.0 };
                assert_eq!(xx[(i, j)], c(expected, 0.0), "entry ({i},{j})");
            }
        }
    }

    #[test]
    fn kronecker_rejects_wrong_dimensions() {
        let err = tensor_product(&ComplexMatrix::identity(4), &pauli(Axis::X)).unwrap_err();
        assert_eq!(err, AlgebraError::DimensionMismatch { expected: 2, got: 4 });
    }

    #[test]
    fn symmetric_hamiltonian_at_figure_parameters() {
        let h = build_quantum_hamiltonian(ModelKind::Symmetric, 1.0, 5.0, 1.0, 1.0);
        assert_matrix_eq(&h, &ComplexMatrix::from_real_diagonal(&[7.0, -5.0, -5.0, 3.0]), 0.0);
    }

    #[test]
    fn nonsymmetric2_hamiltonian_at_figure_parameters() {
        let h = build_quantum_hamiltonian(ModelKind::NonSymmetric2, 1.0, 5.0, 1.0, 1.0);
        let mut expected = ComplexMatrix::from_real_diagonal(&[2.0, 0.0, 0.0, -2.0]);
        for i in 0..4 {
            expected[(i, 3 - i)] = c(5.0, 0.0);
        }
        assert_matrix_eq(&h, &expected, 0.0);
    }

    #[test]
    fn nonsymmetric1_adds_sigma_y_on_first_qubit() {
        let h = build_quantum_hamiltonian(ModelKind::NonSymmetric1, 1.0, 5.0, 2.0, 1.0);
        // σy ⊗ I couples |1,s> and |-1,s> with -i above the diagonal.
        assert_eq!(h[(0, 2)], c(0.0, -2.0));
        assert_eq!(h[(1, 3)], c(0.0, -2.0));
        assert_eq!(h[(2, 0)], c(0.0, 2.0));
        assert_eq!(h[(0, 0)], c(7.0, 0.0));
        assert_eq!(h[(0, 1)], c(0.0, 0.0));
    }

    #[test]
    fn all_couplings_off_gives_zero() {
        for hbar in [0.5, 1.0, 3.0] {
            let h = build_quantum_hamiltonian(ModelKind::Symmetric, 0.0, 0.0, 1.0, hbar);
            assert_eq!(h.max_abs(), 0.0);
        }
    }

    #[test]
    fn commutators_match_symmetry_classification() {
        let z1 = single_qubit_operator(Qubit::First, Axis::Z);
        let z2 = single_qubit_operator(Qubit::Second, Axis::Z);
        let hs = build_quantum_hamiltonian(ModelKind::Symmetric, 1.0, 5.0, 1.0, 1.0);
        let h1 = build_quantum_hamiltonian(ModelKind::NonSymmetric1, 1.0, 5.0, 1.0, 1.0);
        let h2 = build_quantum_hamiltonian(ModelKind::NonSymmetric2, 1.0, 5.0, 1.0, 1.0);
        assert_eq!(hs.commutator(&z1).unwrap().max_abs(), 0.0);
        assert_eq!(hs.commutator(&z2).unwrap().max_abs(), 0.0);
        assert_eq!(h1.commutator(&z2).unwrap().max_abs(), 0.0);
        assert!(h1.commutator(&z1).unwrap().max_abs() > 1.0);
        assert!(h2.commutator(&z1).unwrap().max_abs() > 1.0);
        assert!(h2.commutator(&z2).unwrap().max_abs() > 1.0);
    }

    #[test]
    fn jacobi_reconstructs_hermitian_matrix() {
        for kind in ModelKind::ALL {
            let h = build_quantum_hamiltonian(kind, 1.3, 4.2, 0.7, 1.0);
            let eig = hermitian_eigen(&h).unwrap();
            let lambda = ComplexMatrix::from_real_diagonal(&eig.values);
            let rebuilt = eig.vectors.matmul(&lambda).unwrap().matmul(&eig.vectors.adjoint()).unwrap();
            assert_matrix_eq(&rebuilt, &h, 1e-12);
            let vtv = eig.vectors.adjoint().matmul(&eig.vectors).unwrap();
            assert_matrix_eq(&vtv, &ComplexMatrix::identity(4), 1e-13);
        }
    }

    #[test]
    fn eigenstate_only_acquires_phase() {
        let h = ComplexMatrix::from_real_diagonal(&[7.0, -5.0, -5.0, 3.0]);
        for tau in [0.3, 1.0, 17.5] {
            let psi = unitary_evolve(&h, &Amplitudes::basis(0), tau, 1.0).unwrap();
            let expected = Amplitudes::new([C64::from_polar(1.0, -7.0 * tau), c(0.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)]);
            assert!(psi.max_abs_diff(&expected) < 1e-13);
        }
    }

    #[test]
    fn zero_time_is_identity() {
        let h = build_quantum_hamiltonian(ModelKind::NonSymmetric1, 1.0, 5.0, 1.0, 1.0);
        let psi0 = Amplitudes::new([c(0.1, 0.2), c(-0.3, 0.5), c(0.4, 0.0), c(0.0, -0.6)]).normalized().unwrap();
        assert_eq!(unitary_evolve(&h, &psi0, 0.0, 1.0).unwrap(), psi0);
    }

    #[test]
    fn nonsymmetric2_two_level_block() {
        // σx¹σx² only mixes |1,1> with |-1,-1>; that block is [[2ω, μ], [μ, -2ω]] with
        // eigenvalues ±Ω, Ω = sqrt(4ω² + μ²), so c1(t) = cos Ωt - i (2ω/Ω) sin Ωt and
        // c4(t) = -i (μ/Ω) sin Ωt.
        let (omega, mu, t) = (1.0f64, 5.0f64, 1.0f64);
        let big = (4.0 * omega * omega + mu * mu).sqrt();
        let expected = Amplitudes::new([
            c((big * t).cos(), -(2.0 * omega / big) * (big * t).sin()),
            c(0.0, 0.0),
            c(0.0, 0.0),
            c(0.0, -(mu / big) * (big * t).sin()),
        ]);
        let h = build_quantum_hamiltonian(ModelKind::NonSymmetric2, omega, mu, 0.0, 1.0);
        let psi = unitary_evolve(&h, &Amplitudes::basis(0), t, 1.0).unwrap();
        assert!(psi.max_abs_diff(&expected) < 1e-13, "{psi:?} vs {expected:?}");
        assert_abs_diff_eq!(psi.norm_sqr(), 1.0, epsilon = 1e-14);
    }

    #[test]
    fn propagator_rejects_non_hermitian() {
        let mut h = ComplexMatrix::identity(4);
        h[(0, 1)] = c(1.0, 0.0);
        assert!(matches!(
            unitary_evolve(&h, &Amplitudes::basis(0), 1.0, 1.0),
            Err(AlgebraError::NotHermitian { .. })
        ));
    }
}
