//! Quadrature covariance engine for zero-mean Gaussian optical states.
//!
//! Conventions, fixed once here and relied on by every other module:
//!
//! * Shot-noise units: the vacuum has variance 1 in each quadrature.
//! * A mode with annihilation operator `a` has quadratures `X = Re a`,
//!   `Y = Im a` (so `a = X + iY` up to normalisation).
//! * Quadratures are stored interleaved: index `2k` is `X_k`, index `2k+1`
//!   is `Y_k` for mode `k` (0-based).
//! * The two-mode squeezer uses the deamplification convention
//!   `X_i' = X_i cosh r - X_j sinh r`, `Y_i' = Y_i cosh r + Y_j sinh r`
//!   (and symmetrically for mode `j`), so the sum `X_i + X_j` and the
//!   difference `Y_i - Y_j` are squeezed: each has variance `2 exp(-2r)`.
//! * The beamsplitter maps `b_i' = sqrt(t) b_i + sqrt(1-t) e^{i phi} b_j`,
//!   `b_j' = -sqrt(1-t) e^{-i phi} b_i + sqrt(t) b_j`.
//!
//! States evolve by congruence: applying a symplectic matrix S sends the
//! mean to `S m` and the covariance to `S V S^T`. Physicality of a
//! covariance matrix is the uncertainty bound `V + i Omega >= 0`, checked
//! through the eigenvalues of that Hermitian matrix.

use nalgebra::{Complex, DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

// ---------------------------------------------------------------------------
// Quadrature indexing
// ---------------------------------------------------------------------------

/// One of the two field quadratures of a mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Quad {
    X,
    Y,
}

impl Quad {
    /// Index of this quadrature of mode `mode` in the interleaved layout.
    pub fn index(self, mode: usize) -> usize {
        match self {
            Quad::X => 2 * mode,
            Quad::Y => 2 * mode + 1,
        }
    }
}

/// Index of `X_mode` in the interleaved quadrature layout.
pub fn x_index(mode: usize) -> usize {
    2 * mode
}

/// Index of `Y_mode` in the interleaved quadrature layout.
pub fn y_index(mode: usize) -> usize {
    2 * mode + 1
}

/// The symplectic form `Omega` for `n` modes: block-diagonal copies of
/// `[[0, 1], [-1, 0]]` in the interleaved layout.
pub fn omega(n_modes: usize) -> DMatrix<f64> {
    let d = 2 * n_modes;
    let mut m = DMatrix::zeros(d, d);
    for k in 0..n_modes {
        m[(2 * k, 2 * k + 1)] = 1.0;
        m[(2 * k + 1, 2 * k)] = -1.0;
    }
    m
}

fn check_mode(index: usize, n_modes: usize) -> Result<()> {
    if index >= n_modes {
        return Err(Error::ModeOutOfRange { index, n_modes });
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Gaussian states
// ---------------------------------------------------------------------------

/// A Gaussian state of `n_modes` optical modes: mean quadrature vector and
/// symmetric covariance matrix in shot-noise units.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianState {
    n_modes: usize,
    mean: DVector<f64>,
    cov: DMatrix<f64>,
}

impl GaussianState {
    /// The n-mode vacuum: zero mean, identity covariance.
    pub fn vacuum(n_modes: usize) -> Result<Self> {
        if n_modes == 0 {
            return Err(Error::ZeroModes);
        }
        let d = 2 * n_modes;
        Ok(GaussianState {
            n_modes,
            mean: DVector::zeros(d),
            cov: DMatrix::identity(d, d),
        })
    }

    pub fn n_modes(&self) -> usize {
        self.n_modes
    }

    /// Mean quadrature vector, length `2 * n_modes`.
    pub fn mean(&self) -> &DVector<f64> {
        &self.mean
    }

    /// Covariance matrix, `2 n x 2 n`, stored exactly symmetric.
    pub fn cov(&self) -> &DMatrix<f64> {
        &self.cov
    }

    /// Variance of a single quadrature.
    pub fn variance(&self, mode: usize, quad: Quad) -> Result<f64> {
        check_mode(mode, self.n_modes)?;
        let k = quad.index(mode);
        Ok(self.cov[(k, k)])
    }

    /// Smallest eigenvalue of the Hermitian matrix `cov + i Omega`.
    ///
    /// The state satisfies the uncertainty bound exactly when this is >= 0;
    /// numerical checks should allow a small negative tolerance (for example
    /// `-1e-9`) for floating-point round-off.
    pub fn min_uncertainty_eigenvalue(&self) -> f64 {
        let d = 2 * self.n_modes;
        let om = omega(self.n_modes);
        let mut h = DMatrix::<Complex<f64>>::zeros(d, d);
        for i in 0..d {
            for j in 0..d {
                h[(i, j)] = Complex::new(self.cov[(i, j)], om[(i, j)]);
            }
        }
        let eig = h.symmetric_eigenvalues();
        eig.iter().fold(f64::INFINITY, |acc, &v| acc.min(v))
    }

    /// Whether `cov + i Omega >= -tol`, i.e. the state is physical up to
    /// round-off `tol`.
    pub fn is_physical(&self, tol: f64) -> bool {
        self.min_uncertainty_eigenvalue() >= -tol
    }
}

// ---------------------------------------------------------------------------
// Symplectic operations
// ---------------------------------------------------------------------------

/// A linear optical operation: a symplectic matrix on the interleaved
/// quadrature vector, with a human-readable label.
#[derive(Debug, Clone, PartialEq)]
pub struct SymplecticOp {
    matrix: DMatrix<f64>,
    description: String,
}

impl SymplecticOp {
    /// The identity on `n_modes` modes.
    pub fn identity(n_modes: usize) -> Result<Self> {
        if n_modes == 0 {
            return Err(Error::ZeroModes);
        }
        let d = 2 * n_modes;
        Ok(SymplecticOp {
            matrix: DMatrix::identity(d, d),
            description: format!("identity({n_modes})"),
        })
    }

    /// Two-mode squeezer with parameter `r >= 0` acting on modes `i` and `j`
    /// (deamplification convention: `X_i + X_j` and `Y_i - Y_j` end up
    /// squeezed by `exp(-r)` each when applied to vacuum).
    pub fn two_mode_squeezer(r: f64, i: usize, j: usize, n_modes: usize) -> Result<Self> {
        if n_modes == 0 {
            return Err(Error::ZeroModes);
        }
        check_mode(i, n_modes)?;
        check_mode(j, n_modes)?;
        if i == j {
            return Err(Error::DuplicateMode(i));
        }
        if r.is_nan() || r < 0.0 {
            return Err(Error::NegativeSqueezing(r));
        }
        let (ch, sh) = (r.cosh(), r.sinh());
        let d = 2 * n_modes;
        let mut m = DMatrix::identity(d, d);
        let (xi, yi, xj, yj) = (x_index(i), y_index(i), x_index(j), y_index(j));
        m[(xi, xi)] = ch;
        m[(xi, xj)] = -sh;
        m[(yi, yi)] = ch;
        m[(yi, yj)] = sh;
        m[(xj, xi)] = -sh;
        m[(xj, xj)] = ch;
        m[(yj, yi)] = sh;
        m[(yj, yj)] = ch;
        Ok(SymplecticOp {
            matrix: m,
            description: format!("TMS(r={r}, modes {i},{j})"),
        })
    }

    /// Beamsplitter of transmittance `t` in (0, 1) and relative phase `phase`
    /// coupling modes `i` and `j`:
    /// `b_i' = sqrt(t) b_i + sqrt(1-t) e^{i phase} b_j`,
    /// `b_j' = -sqrt(1-t) e^{-i phase} b_i + sqrt(t) b_j`.
    pub fn beamsplitter(t: f64, phase: f64, i: usize, j: usize, n_modes: usize) -> Result<Self> {
        if n_modes == 0 {
            return Err(Error::ZeroModes);
        }
        check_mode(i, n_modes)?;
        check_mode(j, n_modes)?;
        if i == j {
            return Err(Error::DuplicateMode(i));
        }
        if !(t > 0.0 && t < 1.0) {
            return Err(Error::TransmittanceOutOfRange(t));
        }
        let (tt, rr) = (t.sqrt(), (1.0 - t).sqrt());
        let (c, s) = (phase.cos(), phase.sin());
        let d = 2 * n_modes;
        let mut m = DMatrix::identity(d, d);
        let (xi, yi, xj, yj) = (x_index(i), y_index(i), x_index(j), y_index(j));
        // Port i: transmitted b_i plus b_j rotated by +phase.
        m[(xi, xi)] = tt;
        m[(xi, xj)] = rr * c;
        m[(xi, yj)] = -rr * s;
        m[(yi, yi)] = tt;
        m[(yi, xj)] = rr * s;
        m[(yi, yj)] = rr * c;
        // Port j: transmitted b_j minus b_i rotated by -phase.
        m[(xj, xi)] = -rr * c;
        m[(xj, yi)] = -rr * s;
        m[(xj, xj)] = tt;
        m[(yj, xi)] = rr * s;
        m[(yj, yi)] = -rr * c;
        m[(yj, yj)] = tt;
        Ok(SymplecticOp {
            matrix: m,
            description: format!("BS(t={t}, phase={phase}, modes {i},{j})"),
        })
    }

    /// Single-mode phase shift by `theta`: `b -> e^{i theta} b`, i.e.
    /// `X' = X cos theta - Y sin theta`, `Y' = X sin theta + Y cos theta`.
    pub fn phase_shift(theta: f64, mode: usize, n_modes: usize) -> Result<Self> {
        if n_modes == 0 {
            return Err(Error::ZeroModes);
        }
        check_mode(mode, n_modes)?;
        let (c, s) = (theta.cos(), theta.sin());
        let d = 2 * n_modes;
        let mut m = DMatrix::identity(d, d);
        let (x, y) = (x_index(mode), y_index(mode));
        m[(x, x)] = c;
        m[(x, y)] = -s;
        m[(y, x)] = s;
        m[(y, y)] = c;
        Ok(SymplecticOp {
            matrix: m,
            description: format!("phase(theta={theta}, mode {mode})"),
        })
    }

    /// Relabels modes `i` and `j` (swaps both quadratures).
    pub fn mode_swap(i: usize, j: usize, n_modes: usize) -> Result<Self> {
        if n_modes == 0 {
            return Err(Error::ZeroModes);
        }
        check_mode(i, n_modes)?;
        check_mode(j, n_modes)?;
        if i == j {
            return Err(Error::DuplicateMode(i));
        }
        let d = 2 * n_modes;
        let mut m = DMatrix::identity(d, d);
        let (xi, yi, xj, yj) = (x_index(i), y_index(i), x_index(j), y_index(j));
        m[(xi, xi)] = 0.0;
        m[(yi, yi)] = 0.0;
        m[(xj, xj)] = 0.0;
        m[(yj, yj)] = 0.0;
        m[(xi, xj)] = 1.0;
        m[(yi, yj)] = 1.0;
        m[(xj, xi)] = 1.0;
        m[(yj, yi)] = 1.0;
        Ok(SymplecticOp {
            matrix: m,
            description: format!("swap(modes {i},{j})"),
        })
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn description(&self) -> &str {
        &self.description
    }

    pub fn n_modes(&self) -> usize {
        self.matrix.nrows() / 2
    }

    /// Composition "self first, then `next`" (matrix product `next * self`).
    pub fn then(&self, next: &SymplecticOp) -> Result<SymplecticOp> {
        if self.matrix.nrows() != next.matrix.nrows() {
            return Err(Error::DimensionMismatch {
                expected: self.matrix.nrows(),
                actual: next.matrix.nrows(),
            });
        }
        Ok(SymplecticOp {
            matrix: &next.matrix * &self.matrix,
            description: format!("{}; {}", self.description, next.description),
        })
    }

    /// Symplectic inverse `S^{-1} = -Omega S^T Omega`.
    pub fn inverse(&self) -> SymplecticOp {
        let om = omega(self.n_modes());
        SymplecticOp {
            matrix: -(&om * self.matrix.transpose() * &om),
            description: format!("inverse({})", self.description),
        }
    }

    /// Largest absolute entry of `S Omega S^T - Omega`; zero for an exactly
    /// symplectic matrix.
    pub fn symplectic_deviation(&self) -> f64 {
        let om = omega(self.n_modes());
        let dev = &self.matrix * &om * self.matrix.transpose() - &om;
        dev.iter().fold(0.0f64, |acc, &v| acc.max(v.abs()))
    }
}

/// Applies a symplectic operation to a state: `mean -> S mean`,
/// `cov -> S cov S^T` (re-symmetrised so the stored matrix is exactly
/// symmetric despite round-off).
pub fn apply(op: &SymplecticOp, state: &GaussianState) -> Result<GaussianState> {
    let d = 2 * state.n_modes;
    if op.matrix.nrows() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            actual: op.matrix.nrows(),
        });
    }
    let mean = &op.matrix * &state.mean;
    let raw = &op.matrix * &state.cov * op.matrix.transpose();
    let mut cov = DMatrix::zeros(d, d);
    for i in 0..d {
        cov[(i, i)] = raw[(i, i)];
        for j in (i + 1)..d {
            let v = 0.5 * (raw[(i, j)] + raw[(j, i)]);
            cov[(i, j)] = v;
            cov[(j, i)] = v;
        }
    }
    Ok(GaussianState {
        n_modes: state.n_modes,
        mean,
        cov,
    })
}

// ---------------------------------------------------------------------------
// Linear quadrature forms
// ---------------------------------------------------------------------------

/// A linear combination of quadratures plus a symbolic classical-signal
/// contribution: `sum_k coeffs[k] * quad_k + sx * X_s + sy * Y_s`, where
/// `X_s`, `Y_s` are independent zero-mean signals whose variances are
/// supplied when the variance is evaluated.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearForm {
    coeffs: Vec<f64>,
    signal_coeffs: (f64, f64),
}

impl LinearForm {
    pub fn new(coeffs: Vec<f64>, signal_coeffs: (f64, f64)) -> Result<Self> {
        for &c in coeffs
            .iter()
            .chain([signal_coeffs.0, signal_coeffs.1].iter())
        {
            if !c.is_finite() {
                return Err(Error::NonFiniteCoefficient(c));
            }
        }
        Ok(LinearForm {
            coeffs,
            signal_coeffs,
        })
    }

    /// All-zero form over `n_modes` modes.
    pub fn zero(n_modes: usize) -> Self {
        LinearForm {
            coeffs: vec![0.0; 2 * n_modes],
            signal_coeffs: (0.0, 0.0),
        }
    }

    /// Builder-style helper: sets the coefficient of one quadrature.
    pub fn with(mut self, mode: usize, quad: Quad, coeff: f64) -> Self {
        let k = quad.index(mode);
        assert!(k < self.coeffs.len(), "quadrature index out of range");
        self.coeffs[k] = coeff;
        self
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn signal_coeffs(&self) -> (f64, f64) {
        self.signal_coeffs
    }

    pub fn set_signal_coeffs(&mut self, sx: f64, sy: f64) {
        self.signal_coeffs = (sx, sy);
    }

    /// Adds `scale` times the coefficient vector of `other` into `self`
    /// (signal coefficients included).
    pub fn add_scaled(&mut self, other: &LinearForm, scale: f64) -> Result<()> {
        if other.coeffs.len() != self.coeffs.len() {
            return Err(Error::DimensionMismatch {
                expected: self.coeffs.len(),
                actual: other.coeffs.len(),
            });
        }
        for (a, b) in self.coeffs.iter_mut().zip(other.coeffs.iter()) {
            *a += scale * b;
        }
        self.signal_coeffs.0 += scale * other.signal_coeffs.0;
        self.signal_coeffs.1 += scale * other.signal_coeffs.1;
        Ok(())
    }

    /// Rewrites a form given over the *output* quadratures of `op` as a form
    /// over the input quadratures: `c -> S^T c`. Signal coefficients are
    /// carried over unchanged.
    pub fn pulled_back(&self, op: &SymplecticOp) -> Result<LinearForm> {
        if op.matrix.nrows() != self.coeffs.len() {
            return Err(Error::DimensionMismatch {
                expected: self.coeffs.len(),
                actual: op.matrix.nrows(),
            });
        }
        let c = DVector::from_column_slice(&self.coeffs);
        let back = op.matrix.transpose() * c;
        Ok(LinearForm {
            coeffs: back.iter().copied().collect(),
            signal_coeffs: self.signal_coeffs,
        })
    }
}

/// Quantum and classical-signal contributions to the variance of a
/// [`LinearForm`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VarianceParts {
    /// `c^T cov c` from the optical state.
    pub quantum: f64,
    /// `sx^2 V_Xs + sy^2 V_Ys` from the modulation signals.
    pub signal: f64,
}

impl VarianceParts {
    pub fn total(&self) -> f64 {
        self.quantum + self.signal
    }
}

/// Variance of a linear quadrature form on a state, with independent signal
/// variances `(v_xs, v_ys)` for the symbolic `X_s`, `Y_s` contributions.
pub fn linear_form_variance(
    state: &GaussianState,
    form: &LinearForm,
    signal_variances: (f64, f64),
) -> Result<VarianceParts> {
    let d = 2 * state.n_modes;
    if form.coeffs.len() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            actual: form.coeffs.len(),
        });
    }
    let (v_xs, v_ys) = signal_variances;
    if v_xs < 0.0 {
        return Err(Error::NegativeVariance(v_xs));
    }
    if v_ys < 0.0 {
        return Err(Error::NegativeVariance(v_ys));
    }
    let c = DVector::from_column_slice(&form.coeffs);
    let quantum = (c.transpose() * &state.cov * &c)[(0, 0)];
    let (sx, sy) = form.signal_coeffs;
    Ok(VarianceParts {
        quantum,
        signal: sx * sx * v_xs + sy * sy * v_ys,
    })
}

// ---------------------------------------------------------------------------
// Tests
// ---------------------------------------------------------------------------
