use super::{Scheme, SolverSettings, StepError, VectorField};
use crate::hybrid::{PhaseVector, PHASE_DIM};

fn axpy(a: f64, x: &PhaseVector, y: &PhaseVector) -> PhaseVector {
    std::array::from_fn(|i| y[i] + a * x[i])
}

fn max_abs_diff(a: &PhaseVector, b: &PhaseVector) -> f64 {
    a.iter().zip(b).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
}

fn max_abs(a: &PhaseVector) -> f64 {
    a.iter().fold(0.0, |m, v| m.max(v.abs()))
}

/// Once the residual is this close to the tolerance and stops shrinking, the
/// iteration has hit roundoff and is accepted.
const STALL_FACTOR: f64 = 100.0;

/// Consecutive growing residuals after which fixed-point iteration is abandoned
/// for Newton.
const GROWTH_LIMIT: usize = 3;

/// Convergence bookkeeping shared by the implicit solves. The tolerance is
/// relative to `max(1, |y|∞)` so large oscillator excursions do not push it
/// below the roundoff floor. Once the increment is under tolerance, iteration
/// continues while it keeps halving: leftover solve error is not
/// time-symmetric, and over long runs it shows up as phase drift.
struct Convergence {
    tol: f64,
    best: f64,
    growing: usize,
    reached: bool,
}

enum Progress {
    Converged,
    Continue,
    Diverged,
}

impl Convergence {
    fn new(solver: &SolverSettings, y0: &PhaseVector) -> Self {
        Self { tol: solver.tol * max_abs(y0).max(1.0), best: f64::INFINITY, growing: 0, reached: false }
    }

    fn check(&mut self, residual: f64) -> Progress {
        if !residual.is_finite() {
            return Progress::Diverged;
        }
        if self.reached {
            if residual == 0.0 || residual > 0.5 * self.best {
                return Progress::Converged;
            }
            self.best = residual;
            return Progress::Continue;
        }
        if residual <= self.tol {
            self.reached = true;
            self.best = residual;
            return if residual == 0.0 { Progress::Converged } else { Progress::Continue };
        }
        if residual >= self.best {
            if self.best <= STALL_FACTOR * self.tol {
                return Progress::Converged;
            }
            self.growing += 1;
            if self.growing >= GROWTH_LIMIT {
                return Progress::Diverged;
            }
        } else {
            self.best = residual;
            self.growing = 0;
        }
        Progress::Continue
    }

    /// Whether running out of iterations still leaves an acceptable iterate.
    fn accepted(&self) -> bool {
        self.reached
    }
}

/// Solves `a·x = b` in place by Gaussian elimination with partial pivoting.
/// `a` is row-major `n×n`; returns `false` if it is numerically singular.
fn solve_dense(a: &mut [f64], b: &mut [f64], n: usize) -> bool {
    for col in 0..n {
        let pivot = (col..n).max_by(|&i, &j| a[i * n + col].abs().total_cmp(&a[j * n + col].abs())).unwrap_or(col);
        if a[pivot * n + col].abs() < 1e-300 {
            return false;
        }
        if pivot != col {
            for k in 0..n {
                a.swap(pivot * n + k, col * n + k);
            }
            b.swap(pivot, col);
        }
        for row in col + 1..n {
            let factor = a[row * n + col] / a[col * n + col];
            if factor == 0.0 {
                continue;
            }
            for k in col..n {
                a[row * n + k] -= factor * a[col * n + k];
            }
            b[row] -= factor * b[col];
        }
    }
    for row in (0..n).rev() {
        let mut acc = b[row];
        for k in row + 1..n {
            acc -= a[row * n + k] * b[k];
        }
        b[row] = acc / a[row * n + row];
    }
    true
}

/// `y1 = y0 + h f((y0 + y1)/2)`.
///
/// Fixed-point iteration first; when that stops contracting (fast quantum
/// phase rotation at large |q| makes `h‖J‖/2 > 1`) the same equation is solved
/// by Newton's method.
#[derive(Clone, Copy, Debug, Default)]
pub struct ImplicitMidpoint;

impl ImplicitMidpoint {
    fn fixed_point(field: &dyn VectorField, y0: &PhaseVector, h: f64, solver: &SolverSettings) -> Result<PhaseVector, StepError> {
        let mut y1 = axpy(h, &field.eval(y0), y0);
        let mut residual = f64::INFINITY;
        let mut conv = Convergence::new(solver, y0);
        for iter in 1..=solver.max_iters {
            let mid: PhaseVector = std::array::from_fn(|i| 0.5 * (y0[i] + y1[i]));
            let next = axpy(h, &field.eval(&mid), y0);
            residual = max_abs_diff(&next, &y1);
            y1 = next;
            match conv.check(residual) {
                Progress::Converged => return Ok(y1),
                Progress::Diverged => return Err(StepError::NoConvergence { iterations: iter, residual }),
                Progress::Continue => {}
            }
        }
        if conv.accepted() {
            return Ok(y1);
        }
        Err(StepError::NoConvergence { iterations: solver.max_iters, residual })
    }

    fn newton(field: &dyn VectorField, y0: &PhaseVector, h: f64, solver: &SolverSettings) -> Result<PhaseVector, StepError> {
        let mut y1 = *y0;
        let mut residual = f64::INFINITY;
        let mut conv = Convergence::new(solver, y0);
        for iter in 1..=solver.max_iters {
            let mid: PhaseVector = std::array::from_fn(|i| 0.5 * (y0[i] + y1[i]));
            let f = field.eval(&mid);
            let jac = field.jacobian(&mid);
            let mut a = [0.0; PHASE_DIM * PHASE_DIM];
            let mut b = [0.0; PHASE_DIM];
            for i in 0..PHASE_DIM {
                for j in 0..PHASE_DIM {
                    a[i * PHASE_DIM + j] = -0.5 * h * jac[i][j];
                }
                a[i * PHASE_DIM + i] += 1.0;
                b[i] = y0[i] + h * f[i] - y1[i];
            }
            if !solve_dense(&mut a, &mut b, PHASE_DIM) {
                return Err(StepError::NoConvergence { iterations: iter, residual });
            }
            for i in 0..PHASE_DIM {
                y1[i] += b[i];
            }
            residual = max_abs(&b);
            match conv.check(residual) {
                Progress::Converged => return Ok(y1),
                Progress::Diverged => return Err(StepError::NoConvergence { iterations: iter, residual }),
                Progress::Continue => {}
            }
        }
        if conv.accepted() {
            return Ok(y1);
        }
        Err(StepError::NoConvergence { iterations: solver.max_iters, residual })
    }
}

impl Scheme for ImplicitMidpoint {
    fn name(&self) -> &'static str {
        "implicit-midpoint"
    }

    fn order(&self) -> u32 {
        2
    }

    fn is_symplectic(&self) -> bool {
        true
    }

    fn step(&self, field: &dyn VectorField, y0: &PhaseVector, h: f64, solver: &SolverSettings) -> Result<PhaseVector, StepError> {
        if h == 0.0 {
            return Ok(*y0);
        }
        Self::fixed_point(field, y0, h, solver).or_else(|_| Self::newton(field, y0, h, solver))
    }
}

/// Classical four-stage Runge-Kutta.
#[derive(Clone, Copy, Debug, Default)]
pub struct ExplicitRk4;

impl Scheme for ExplicitRk4 {
    fn name(&self) -> &'static str {
        "rk4"
    }

    fn order(&self) -> u32 {
        4
    }

    fn is_symplectic(&self) -> bool {
        false
    }

    fn step(&self, field: &dyn VectorField, y0: &PhaseVector, h: f64, _: &SolverSettings) -> Result<PhaseVector, StepError> {
        if h == 0.0 {
            return Ok(*y0);
        }
        let k1 = field.eval(y0);
        let k2 = field.eval(&axpy(0.5 * h, &k1, y0));
        let k3 = field.eval(&axpy(0.5 * h, &k2, y0));
        let k4 = field.eval(&axpy(h, &k3, y0));
        Ok(std::array::from_fn(|i| y0[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i])))
    }
}

/// Two-stage Gauss-Legendre collocation: order 4, symplectic, symmetric.
#[derive(Clone, Copy, Debug, Default)]
pub struct GaussLegendre4;

impl GaussLegendre4 {
    const SQRT3_6: f64 = 0.288_675_134_594_812_9; // √3/6
    const A: [[f64; 2]; 2] = [[0.25, 0.25 - Self::SQRT3_6], [0.25 + Self::SQRT3_6, 0.25]];
}

impl GaussLegendre4 {
    fn finish(y0: &PhaseVector, h: f64, k: &[PhaseVector; 2]) -> PhaseVector {
        std::array::from_fn(|i| y0[i] + 0.5 * h * (k[0][i] + k[1][i]))
    }

    fn stage(y0: &PhaseVector, h: f64, k: &[PhaseVector; 2], row: usize) -> PhaseVector {
        std::array::from_fn(|i| y0[i] + h * (Self::A[row][0] * k[0][i] + Self::A[row][1] * k[1][i]))
    }

    fn fixed_point(field: &dyn VectorField, y0: &PhaseVector, h: f64, solver: &SolverSettings) -> Result<PhaseVector, StepError> {
        let f0 = field.eval(y0);
        let mut k = [f0, f0];
        let mut residual = f64::INFINITY;
        let mut conv = Convergence::new(solver, y0);
        for iter in 1..=solver.max_iters {
            let next = [field.eval(&Self::stage(y0, h, &k, 0)), field.eval(&Self::stage(y0, h, &k, 1))];
            residual = h.abs() * max_abs_diff(&next[0], &k[0]).max(max_abs_diff(&next[1], &k[1]));
            k = next;
            match conv.check(residual) {
                Progress::Converged => return Ok(Self::finish(y0, h, &k)),
                Progress::Diverged => return Err(StepError::NoConvergence { iterations: iter, residual }),
                Progress::Continue => {}
            }
        }
        if conv.accepted() {
            return Ok(Self::finish(y0, h, &k));
        }
        Err(StepError::NoConvergence { iterations: solver.max_iters, residual })
    }

    /// Newton on the stacked stage equations `K_r = f(y0 + h Σ_s A_rs K_s)`.
    fn newton(field: &dyn VectorField, y0: &PhaseVector, h: f64, solver: &SolverSettings) -> Result<PhaseVector, StepError> {
        const N: usize = 2 * PHASE_DIM;
        let f0 = field.eval(y0);
        let mut k = [f0, f0];
        let mut residual = f64::INFINITY;
        let mut conv = Convergence::new(solver, y0);
        for iter in 1..=solver.max_iters {
            let mut a = vec![0.0; N * N];
            let mut b = vec![0.0; N];
            for r in 0..2 {
                let z = Self::stage(y0, h, &k, r);
                let f = field.eval(&z);
                let jac = field.jacobian(&z);
                for i in 0..PHASE_DIM {
                    let row = r * PHASE_DIM + i;
                    b[row] = f[i] - k[r][i];
                    for s in 0..2 {
                        for j in 0..PHASE_DIM {
                            a[row * N + s * PHASE_DIM + j] = -h * Self::A[r][s] * jac[i][j];
                        }
                    }
                    a[row * N + row] += 1.0;
                }
            }
            if !solve_dense(&mut a, &mut b, N) {
                return Err(StepError::NoConvergence { iterations: iter, residual });
            }
            for r in 0..2 {
                for i in 0..PHASE_DIM {
                    k[r][i] += b[r * PHASE_DIM + i];
                }
            }
            residual = h.abs() * b.iter().fold(0.0, |m: f64, v| m.max(v.abs()));
            match conv.check(residual) {
                Progress::Converged => return Ok(Self::finish(y0, h, &k)),
                Progress::Diverged => return Err(StepError::NoConvergence { iterations: iter, residual }),
                Progress::Continue => {}
            }
        }
        if conv.accepted() {
            return Ok(Self::finish(y0, h, &k));
        }
        Err(StepError::NoConvergence { iterations: solver.max_iters, residual })
    }
}

impl Scheme for GaussLegendre4 {
    fn name(&self) -> &'static str {
        "gauss-legendre-4"
    }

    fn order(&self) -> u32 {
        4
    }

    fn is_symplectic(&self) -> bool {
        true
    }

    fn step(&self, field: &dyn VectorField, y0: &PhaseVector, h: f64, solver: &SolverSettings) -> Result<PhaseVector, StepError> {
        if h == 0.0 {
            return Ok(*y0);
        }
        Self::fixed_point(field, y0, h, solver).or_else(|_| Self::newton(field, y0, h, solver))
    }
}

/// Strang composition of the exact oscillator rotation (half steps) around the
/// exact frozen-`q` quantum flow with its momentum impulse.
///
/// Symplectic and symmetric. The norm, and every `<σz>` that commutes with the
/// quantum Hamiltonian, are conserved to roundoff, since each substep is a
/// unitary that commutes with them. Only works on [`HybridModel`]s.
///
/// [`HybridModel`]: crate::hybrid::HybridModel
#[derive(Clone, Copy, Debug, Default)]
pub struct StrangExact;

impl Scheme for StrangExact {
    fn name(&self) -> &'static str {
        "strang-exact"
    }

    fn order(&self) -> u32 {
        2
    }

    fn is_symplectic(&self) -> bool {
        true
    }

    fn step(&self, field: &dyn VectorField, y0: &PhaseVector, h: f64, _: &SolverSettings) -> Result<PhaseVector, StepError> {
        if h == 0.0 {
            return Ok(*y0);
        }
        let model = field.as_hybrid().ok_or_else(|| StepError::Unsupported {
            scheme: "strang-exact",
            reason: "needs the split structure of a hybrid model".into(),
        })?;
        if y0.iter().any(|v| !v.is_finite()) {
            return Err(StepError::NonFinite);
        }
        let half = model.oscillator_flow(y0, 0.5 * h);
        let kicked = model.quantum_flow(&half, h).map_err(|_| StepError::NonFinite)?;
        Ok(model.oscillator_flow(&kicked, 0.5 * h))
    }
}
