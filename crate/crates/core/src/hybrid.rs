//! The hybrid quantum-classical model on the product phase space `M_q × M_c`.
//!
//! Total Hamiltonian:
//!
//! ```text
//! H(x, y, q, p) = H_q(x, y) + p²/2m + k q² + q·(c1 ħ<σz¹> + c2 ħ<σz²>)
//! ```
//!
//! The oscillator potential is `k q²` (not `k q²/2`), so its angular frequency is
//! `sqrt(2k/m)`.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::integrator::{PhaseMatrix, VectorField};
use num_complex::Complex64 as C64;

use crate::pauli::{
    build_quantum_hamiltonian, hermitian_eigen, single_qubit_operator, AlgebraError, Amplitudes, Axis, ModelKind, Qubit,
};
use crate::phase_space::{coords_to_state, dot, matvec, state_to_coords, QuadraticObservable, QuantumPhasePoint, RealMatrix4};

/// Dimension of the hybrid phase space: four `x`, four `y`, then `q` and `p`.
pub const PHASE_DIM: usize = 10;

/// Flat layout `(x1..x4, y1..y4, q, p)`.
pub type PhaseVector = [f64; PHASE_DIM];

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("parameter `{name}` must be strictly positive (got {value})")]
    NonPositive { name: &'static str, value: f64 },
    #[error("parameter `{name}` must be finite (got {value})")]
    NonFinite { name: &'static str, value: f64 },
    #[error("unknown model parameter `{0}`")]
    UnknownParameter(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub struct HybridState {
    pub quantum: QuantumPhasePoint,
    pub q: f64,
    pub p: f64,
}

impl HybridState {
    pub fn new(quantum: QuantumPhasePoint, q: f64, p: f64) -> Self {
        Self { quantum, q, p }
    }

    /// Scales normalised amplitudes onto the `Σ(x²+y²) = 2ħ` shell.
    pub fn from_amplitudes(psi: &Amplitudes, q: f64, p: f64, hbar: f64) -> Self {
        Self { quantum: state_to_coords(psi, hbar), q, p }
    }

    pub fn to_array(&self) -> PhaseVector {
        let mut v = [0.0; PHASE_DIM];
        v[..4].copy_from_slice(&self.quantum.x);
        v[4..8].copy_from_slice(&self.quantum.y);
        v[8] = self.q;
        v[9] = self.p;
        v
    }

    pub fn from_array(v: &PhaseVector) -> Self {
        let mut x = [0.0; 4];
        let mut y = [0.0; 4];
        x.copy_from_slice(&v[..4]);
        y.copy_from_slice(&v[4..8]);
        Self { quantum: QuantumPhasePoint { x, y }, q: v[8], p: v[9] }
    }
}

/// Physical parameters of a hybrid model. Defaults are the figure parameters
/// `ω=1, μ=5, m=k=1, c1=15, c2=1`, with `ħ=1` and `β=1`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelParams {
    pub kind: ModelKind,
    pub omega: f64,
    pub mu: f64,
    pub beta: f64,
    pub mass: f64,
    pub stiffness: f64,
    pub c1: f64,
    pub c2: f64,
    pub hbar: f64,
}

impl ModelParams {
    pub fn figure(kind: ModelKind) -> Self {
        Self { kind, omega: 1.0, mu: 5.0, beta: 1.0, mass: 1.0, stiffness: 1.0, c1: 15.0, c2: 1.0, hbar: 1.0 }
    }

    /// Real-valued parameter names accepted by [`ModelParams::set`].
    pub const NAMES: [&'static str; 8] = ["omega", "mu", "beta", "mass", "stiffness", "c1", "c2", "hbar"];

    pub fn get(&self, name: &str) -> Result<f64, ModelError> {
        Ok(match name {
            "omega" => self.omega,
            "mu" => self.mu,
            "beta" => self.beta,
            "mass" | "m" => self.mass,
            "stiffness" | "k" => self.stiffness,
            "c1" => self.c1,
            "c2" => self.c2,
            "hbar" => self.hbar,
            other => return Err(ModelError::UnknownParameter(other.to_string())),
        })
    }

    pub fn set(&mut self, name: &str, value: f64) -> Result<(), ModelError> {
        let slot = match name {
            "omega" => &mut self.omega,
            "mu" => &mut self.mu,
            "beta" => &mut self.beta,
            "mass" | "m" => &mut self.mass,
            "stiffness" | "k" => &mut self.stiffness,
            "c1" => &mut self.c1,
            "c2" => &mut self.c2,
            "hbar" => &mut self.hbar,
            other => return Err(ModelError::UnknownParameter(other.to_string())),
        };
        *slot = value;
        Ok(())
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        for name in Self::NAMES {
            let value = self.get(name)?;
            if !value.is_finite() {
                return Err(ModelError::NonFinite { name, value });
            }
        }
        for (name, value) in [("mass", self.mass), ("stiffness", self.stiffness), ("hbar", self.hbar)] {
            if value <= 0.0 {
                return Err(ModelError::NonPositive { name, value });
            }
        }
        Ok(())
    }
}

/// A validated model with the quadratic forms it needs precomputed.
#[derive(Clone, Debug)]
pub struct HybridModel {
    params: ModelParams,
    quantum: QuadraticObservable,
    /// `ħ(c1 σz¹ + c2 σz²)`; the interaction is `q` times its expectation.
    coupling: QuadraticObservable,
    sigma_z1: QuadraticObservable,
    sigma_z2: QuadraticObservable,
    norm_op: QuadraticObservable,
    // Scaled real/imaginary parts used in the vector field.
    hq_re: RealMatrix4,
    hq_im: RealMatrix4,
    cp_re: RealMatrix4,
    cp_im: RealMatrix4,
}

impl HybridModel {
    pub fn new(params: ModelParams) -> Result<Self, ModelError> {
        params.validate()?;
        let ModelParams { kind, omega, mu, beta, hbar, c1, c2, .. } = params;
        let quantum = QuadraticObservable::unscaled(build_quantum_hamiltonian(kind, omega, mu, beta, hbar))
            .expect("built Hamiltonians are Hermitian");
        let z1 = single_qubit_operator(Qubit::First, Axis::Z);
        let z2 = single_qubit_operator(Qubit::Second, Axis::Z);
        let coupling_matrix = z1.scale_real(hbar * c1).add(&z2.scale_real(hbar * c2)).expect("4x4");
        let coupling = QuadraticObservable::unscaled(coupling_matrix).expect("diagonal");
        let sigma_z1 = QuadraticObservable::unscaled(z1).expect("Pauli");
        let sigma_z2 = QuadraticObservable::unscaled(z2).expect("Pauli");
        // Σ(x²+y²) = 2ħ<I>.
        let norm_op = QuadraticObservable::new(crate::pauli::ComplexMatrix::identity(4), 2.0 * hbar).expect("identity");
        Ok(Self {
            hq_re: quantum.real_part(),
            hq_im: quantum.imag_part(),
            cp_re: coupling.real_part(),
            cp_im: coupling.imag_part(),
            params,
            quantum,
            coupling,
            sigma_z1,
            sigma_z2,
            norm_op,
        })
    }

    pub fn figure(kind: ModelKind) -> Self {
        Self::new(ModelParams::figure(kind)).expect("figure parameters are valid")
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    pub fn kind(&self) -> ModelKind {
        self.params.kind
    }

    pub fn hbar(&self) -> f64 {
        self.params.hbar
    }

    pub fn quantum_hamiltonian(&self) -> &QuadraticObservable {
        &self.quantum
    }

    /// Angular frequency `sqrt(2k/m)` of the isolated oscillator.
    pub fn oscillator_frequency(&self) -> f64 {
        (2.0 * self.params.stiffness / self.params.mass).sqrt()
    }

    pub fn quantum_energy(&self, s: &HybridState) -> f64 {
        self.quantum.eval(&s.quantum, self.params.hbar)
    }

    pub fn classical_energy(&self, s: &HybridState) -> f64 {
        s.p * s.p / (2.0 * self.params.mass) + self.params.stiffness * s.q * s.q
    }

    pub fn interaction_energy(&self, s: &HybridState) -> f64 {
        s.q * self.coupling.eval(&s.quantum, self.params.hbar)
    }

    pub fn total_energy(&self, s: &HybridState) -> f64 {
        self.quantum_energy(s) + self.classical_energy(s) + self.interaction_energy(s)
    }

    pub fn sigma_z1(&self, s: &HybridState) -> f64 {
        self.sigma_z1.eval(&s.quantum, self.params.hbar)
    }

    pub fn sigma_z2(&self, s: &HybridState) -> f64 {
        self.sigma_z2.eval(&s.quantum, self.params.hbar)
    }

    pub fn quantum_norm(&self, s: &HybridState) -> f64 {
        self.norm_op.eval(&s.quantum, self.params.hbar)
    }

    /// Hamilton's equations for the full hybrid.
    pub fn vector_field(&self, s: &HybridState) -> HybridState {
        HybridState::from_array(&self.eval(&s.to_array()))
    }

    /// Conserved observables for this kind of quantum part.
    pub fn conserved_set(&self) -> Vec<ObservableFunction> {
        let mut set = vec![observable(self, "energy", HybridModel::total_energy)];
        match self.kind() {
            ModelKind::Symmetric => {
                set.push(observable(self, "sigma_z1", HybridModel::sigma_z1));
                set.push(observable(self, "sigma_z2", HybridModel::sigma_z2));
            }
            ModelKind::NonSymmetric1 => set.push(observable(self, "sigma_z2", HybridModel::sigma_z2)),
            ModelKind::NonSymmetric2 => {}
        }
        set.push(observable(self, "norm", HybridModel::quantum_norm));
        set
    }

    /// Quantities recorded alongside every trajectory sample, conserved or not.
    ///
    /// The conserved set comes first, followed by the remaining monitors
    /// (`<σz>` not in the conserved set and the bare quantum energy `H_q`).
    pub fn monitored_set(&self) -> Vec<ObservableFunction> {
        let mut set = self.conserved_set();
        for (label, f) in [
            ("sigma_z1", HybridModel::sigma_z1 as fn(&HybridModel, &HybridState) -> f64),
            ("sigma_z2", HybridModel::sigma_z2),
        ] {
            if !set.iter().any(|o| o.label == label) {
                set.push(observable(self, label, f));
            }
        }
        set.push(observable(self, "h_quantum", HybridModel::quantum_energy));
        set
    }
}

/// Exact flows of the two pieces `H_q + q·C` and `p²/2m + kq²` of the
/// Hamiltonian, composed by the `strang-exact` scheme.
impl HybridModel {
    /// Flow of the oscillator Hamiltonian `p²/2m + kq²` for time `t`: a rotation
    /// in `(q, p)`, quantum part untouched.
    pub fn oscillator_flow(&self, v: &PhaseVector, t: f64) -> PhaseVector {
        let m = self.params.mass;
        let w = self.oscillator_frequency();
        let (sin, cos) = (w * t).sin_cos();
        let (q, p) = (v[8], v[9]);
        let mut out = *v;
        out[8] = q * cos + p / (m * w) * sin;
        out[9] = -m * w * q * sin + p * cos;
        out
    }

    /// Flow of `H_q + q·C` for time `t` at frozen `q`: the amplitudes evolve
    /// under `exp(-i(H_q + qC)t/ħ)` and `p` receives `-∫<C> ds`, both in closed
    /// form from one eigendecomposition.
    pub fn quantum_flow(&self, v: &PhaseVector, t: f64) -> Result<PhaseVector, AlgebraError> {
        let hbar = self.params.hbar;
        let q = v[8];
        let generator = self.quantum.matrix().add(&self.coupling.matrix().scale_real(q))?;
        let eig = hermitian_eigen(&generator)?;
        let vecs = &eig.vectors;
        let psi = coords_to_state(&HybridState::from_array(v).quantum, hbar);

        // Components along the eigenvectors, and the coupling in that basis.
        let a: [C64; 4] = std::array::from_fn(|k| (0..4).map(|j| vecs[(j, k)].conj() * psi.0[j]).sum());
        let c = self.coupling.matrix();
        let c_eig = |j: usize, k: usize| -> C64 {
            let mut acc = C64::new(0.0, 0.0);
            for r in 0..4 {
                for s in 0..4 {
                    acc += vecs[(r, j)].conj() * c[(r, s)] * vecs[(s, k)];
                }
            }
            acc
        };
        let mut impulse = 0.0;
        for j in 0..4 {
            for k in 0..4 {
                // ∫₀ᵗ exp(iωs) ds = t·exp(iωt/2)·sinc(ωt/2)
                let half = 0.5 * (eig.values[j] - eig.values[k]) * t / hbar;
                let sinc = if half.abs() < 1e-8 { 1.0 - half * half / 6.0 } else { half.sin() / half };
                let integral = C64::from_polar(t * sinc, half);
                impulse += (a[j].conj() * a[k] * c_eig(j, k) * integral).re;
            }
        }

        let mut evolved = [C64::new(0.0, 0.0); 4];
        for k in 0..4 {
            let ak = a[k] * C64::from_polar(1.0, -eig.values[k] * t / hbar);
            for (j, e) in evolved.iter_mut().enumerate() {
                *e += vecs[(j, k)] * ak;
            }
        }
        let coords = state_to_coords(&Amplitudes::new(evolved), hbar);
        let mut out = *v;
        out[..4].copy_from_slice(&coords.x);
        out[4..8].copy_from_slice(&coords.y);
        out[9] -= impulse;
        Ok(out)
    }
}

impl VectorField for HybridModel {
    fn eval(&self, v: &PhaseVector) -> PhaseVector {
        let ModelParams { mass, stiffness, hbar, .. } = self.params;
        let mut x = [0.0; 4];
        let mut y = [0.0; 4];
        x.copy_from_slice(&v[..4]);
        y.copy_from_slice(&v[4..8]);
        let q = v[8];

        // Effective quantum quadratic form at fixed q: H_q + q·C.
        let mut re = self.hq_re;
        let mut im = self.hq_im;
        for i in 0..4 {
            for j in 0..4 {
                re[i][j] += q * self.cp_re[i][j];
                im[i][j] += q * self.cp_im[i][j];
            }
        }
        let rx = matvec(&re, &x);
        let ry = matvec(&re, &y);
        let sx = matvec(&im, &x);
        let sy = matvec(&im, &y);

        let crx = matvec(&self.cp_re, &x);
        let cry = matvec(&self.cp_re, &y);
        let csy = matvec(&self.cp_im, &y);
        let coupling = (dot(&x, &crx) + dot(&y, &cry) - 2.0 * dot(&x, &csy)) / (2.0 * hbar);

        let mut out = [0.0; PHASE_DIM];
        for n in 0..4 {
            // ẋ = ∂H/∂y, ẏ = -∂H/∂x
            out[n] = (ry[n] + sx[n]) / hbar;
            out[n + 4] = -(rx[n] - sy[n]) / hbar;
        }
        out[8] = v[9] / mass;
        out[9] = -2.0 * stiffness * q - coupling;
        out
    }

    fn jacobian(&self, v: &PhaseVector) -> PhaseMatrix {
        let ModelParams { mass, stiffness, hbar, .. } = self.params;
        let mut x = [0.0; 4];
        let mut y = [0.0; 4];
        x.copy_from_slice(&v[..4]);
        y.copy_from_slice(&v[4..8]);
        let q = v[8];

        let crx = matvec(&self.cp_re, &x);
        let cry = matvec(&self.cp_re, &y);
        let csx = matvec(&self.cp_im, &x);
        let csy = matvec(&self.cp_im, &y);

        let mut jac = [[0.0; PHASE_DIM]; PHASE_DIM];
        for n in 0..4 {
            for m in 0..4 {
                let re = (self.hq_re[n][m] + q * self.cp_re[n][m]) / hbar;
                let im = (self.hq_im[n][m] + q * self.cp_im[n][m]) / hbar;
                jac[n][m] = im;
                jac[n][m + 4] = re;
                jac[n + 4][m] = -re;
                jac[n + 4][m + 4] = im;
            }
            let gx = (crx[n] - csy[n]) / hbar;
            let gy = (cry[n] + csx[n]) / hbar;
            jac[n][8] = gy;
            jac[n + 4][8] = -gx;
            jac[9][n] = -gx;
            jac[9][n + 4] = -gy;
        }
        jac[8][9] = 1.0 / mass;
        jac[9][8] = -2.0 * stiffness;
        jac
    }

    fn as_hybrid(&self) -> Option<&HybridModel> {
        Some(self)
    }
}

type Evaluator = Arc<dyn Fn(&HybridState) -> f64 + Send + Sync>;

/// A named scalar function on the hybrid phase space.
#[derive(Clone)]
pub struct ObservableFunction {
    pub label: String,
    evaluator: Evaluator,
}

impl ObservableFunction {
    pub fn new(label: impl Into<String>, f: impl Fn(&HybridState) -> f64 + Send + Sync + 'static) -> Self {
        Self { label: label.into(), evaluator: Arc::new(f) }
    }

    pub fn eval(&self, s: &HybridState) -> f64 {
        (self.evaluator)(s)
    }

    /// Position `q` of the oscillator.
    pub fn position() -> Self {
        Self::new("q", |s| s.q)
    }

    /// Momentum `p` of the oscillator.
    pub fn momentum() -> Self {
        Self::new("p", |s| s.p)
    }
}

impl fmt::Debug for ObservableFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ObservableFunction").field("label", &self.label).finish_non_exhaustive()
    }
}

fn observable(model: &HybridModel, label: &str, f: fn(&HybridModel, &HybridState) -> f64) -> ObservableFunction {
    let model = model.clone();
    ObservableFunction::new(label, move |s| f(&model, s))
}

/// Relative central-difference step, with an absolute floor.
const FD_REL_STEP: f64 = 1e-6;
const FD_MIN_STEP: f64 = 1e-8;

/// Canonical Poisson bracket `{f, g}` by central finite differences.
///
/// Pairs are `(x_n, y_n)` and `(q, p)`.
pub fn poisson_bracket(f: &ObservableFunction, g: &ObservableFunction, s: &HybridState) -> f64 {
    let v = s.to_array();
    let partial = |obs: &ObservableFunction, k: usize| -> f64 {
        let h = (FD_REL_STEP * v[k].abs()).max(FD_MIN_STEP);
        let mut plus = v;
        let mut minus = v;
        plus[k] += h;
        minus[k] -= h;
        let step = plus[k] - minus[k];
        (obs.eval(&HybridState::from_array(&plus)) - obs.eval(&HybridState::from_array(&minus))) / step
    };
    let mut bracket = 0.0;
    for (pos, mom) in [(0, 4), (1, 5), (2, 6), (3, 7), (8, 9)] {
        bracket += partial(f, pos) * partial(g, mom) - partial(f, mom) * partial(g, pos);
    }
    bracket
}
