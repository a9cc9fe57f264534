//! The four-mode TTPC (totally three-party correlated) entangled source.
//!
//! Construction: two EPR pairs from two-mode squeezers with parameter `r`
//! are produced on modes (b1, a2) and (a3, b3); the inner modes a2 and a3
//! interfere on a balanced beamsplitter with relative phase pi/2. Writing
//! `b = X + iY`, the output modes are
//!
//! ```text
//! b1 = a1,              b2 = (a2 + i a3) / sqrt(2),
//! b3 = a4,              b4 = (a2 - i a3) / sqrt(2),
//! ```
//!
//! so in quadratures `X_b2 = (X_a2 - Y_a3)/sqrt(2)`, `Y_b2 = (Y_a2 +
//! X_a3)/sqrt(2)`, `X_b4 = (X_a2 + Y_a3)/sqrt(2)`, `Y_b4 = (Y_a2 -
//! X_a3)/sqrt(2)`. The beamsplitter stage in the engine leaves its second
//! output as `i * b4`; a -pi/2 phase shift and a mode relabel bring the
//! register to the (b1, b2, b3, b4) layout above.
//!
//! The state carries eight three-mode correlations, each a linear form whose
//! variance is `4 exp(-2r)`: any single mode is thermal (variance `cosh 2r`),
//! any pair looks classically noisy, but these triple combinations drop to
//! the squeezed level. Relations I-IV reduce to two seed quadratures,
//! relations V-VIII to four.

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::gaussian::{apply, linear_form_variance, GaussianState, LinearForm, Quad, SymplecticOp};

/// Number of optical modes in the source.
pub const N_MODES: usize = 4;

// ---------------------------------------------------------------------------
// State construction
// ---------------------------------------------------------------------------

/// The TTPC source output: a four-mode Gaussian state in register order
/// (b1, b2, b3, b4), together with the squeezing parameter that built it.
#[derive(Debug, Clone, PartialEq)]
pub struct TtpcState {
    state: GaussianState,
    r: f64,
}

impl TtpcState {
    pub fn state(&self) -> &GaussianState {
        &self.state
    }

    /// Squeezing parameter of both source squeezers.
    pub fn r(&self) -> f64 {
        self.r
    }

    /// Squeezing factor `s = exp(-2r)`, the variance of a squeezed
    /// quadrature in shot-noise units.
    pub fn s(&self) -> f64 {
        (-2.0 * self.r).exp()
    }
}

/// The full source map from the four seed vacua to (b1, b2, b3, b4):
/// two squeezers, the combining beamsplitter, and the phase/relabel
/// bookkeeping that fixes the output quadrature conventions.
pub fn source_op(r: f64) -> Result<SymplecticOp> {
    let tms_first = SymplecticOp::two_mode_squeezer(r, 0, 1, N_MODES)?;
    let tms_second = SymplecticOp::two_mode_squeezer(r, 2, 3, N_MODES)?;
    let combine = SymplecticOp::beamsplitter(0.5, std::f64::consts::FRAC_PI_2, 1, 2, N_MODES)?;
    let fix_phase = SymplecticOp::phase_shift(-std::f64::consts::FRAC_PI_2, 2, N_MODES)?;
    let relabel = SymplecticOp::mode_swap(2, 3, N_MODES)?;
    tms_first
        .then(&tms_second)?
        .then(&combine)?
        .then(&fix_phase)?
        .then(&relabel)
}

/// Builds the TTPC state for squeezing parameter `r >= 0`.
pub fn build_ttpc(r: f64) -> Result<TtpcState> {
    let vac = GaussianState::vacuum(N_MODES)?;
    let op = source_op(r)?;
    Ok(TtpcState {
        state: apply(&op, &vac)?,
        r,
    })
}

/// Optional extension: independent squeezing parameters for the two source
/// pairs. Returns the bare state; the named correlation relations then mix
/// the two squeezing levels (a relation on one pair has variance
/// `4 exp(-2r)` of that pair, the mixed relations V-VIII have variance
/// `2 exp(-2 r1) + 2 exp(-2 r2)`).
pub fn build_ttpc_asymmetric(r1: f64, r2: f64) -> Result<GaussianState> {
    let vac = GaussianState::vacuum(N_MODES)?;
    let tms_first = SymplecticOp::two_mode_squeezer(r1, 0, 1, N_MODES)?;
    let tms_second = SymplecticOp::two_mode_squeezer(r2, 2, 3, N_MODES)?;
    let combine = SymplecticOp::beamsplitter(0.5, std::f64::consts::FRAC_PI_2, 1, 2, N_MODES)?;
    let fix_phase = SymplecticOp::phase_shift(-std::f64::consts::FRAC_PI_2, 2, N_MODES)?;
    let relabel = SymplecticOp::mode_swap(2, 3, N_MODES)?;
    let op = tms_first
        .then(&tms_second)?
        .then(&combine)?
        .then(&fix_phase)?
        .then(&relabel)?;
    apply(&op, &vac)
}

// ---------------------------------------------------------------------------
// Correlation relations
// ---------------------------------------------------------------------------

/// Identifier of one of the eight three-mode correlation relations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[allow(clippy::upper_case_acronyms)]
pub enum RelationId {
    I,
    II,
    III,
    IV,
    V,
    VI,
    VII,
    VIII,
}

impl RelationId {
    pub const ALL: [RelationId; 8] = [
        RelationId::I,
        RelationId::II,
        RelationId::III,
        RelationId::IV,
        RelationId::V,
        RelationId::VI,
        RelationId::VII,
        RelationId::VIII,
    ];
}

impl std::fmt::Display for RelationId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let name = match self {
            RelationId::I => "I",
            RelationId::II => "II",
            RelationId::III => "III",
            RelationId::IV => "IV",
            RelationId::V => "V",
            RelationId::VI => "VI",
            RelationId::VII => "VII",
            RelationId::VIII => "VIII",
        };
        f.write_str(name)
    }
}

/// One correlation relation: a named linear form over the eight output
/// quadratures whose variance on the source state is `4 exp(-2r)`.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationRelation {
    pub id: RelationId,
    pub form: LinearForm,
}

/// The linear form of a correlation relation.
///
/// ```text
/// I    sqrt(2) X_b1 + X_b2 + X_b4
/// II   Y_b2 + sqrt(2) X_b3 - Y_b4
/// III  -sqrt(2) Y_b1 + Y_b2 + Y_b4
/// IV   X_b2 + sqrt(2) Y_b3 - X_b4
/// V    Y_b1 + X_b3 - sqrt(2) Y_b4
/// VI   -Y_b1 + sqrt(2) Y_b2 + X_b3
/// VII  X_b1 - Y_b3 + sqrt(2) X_b4
/// VIII X_b1 + sqrt(2) X_b2 + Y_b3
/// ```
pub fn relation(id: RelationId) -> CorrelationRelation {
    use Quad::{X, Y};
    let rt2 = std::f64::consts::SQRT_2;
    let z = LinearForm::zero(N_MODES);
    let form = match id {
        RelationId::I => z.with(0, X, rt2).with(1, X, 1.0).with(3, X, 1.0),
        RelationId::II => z.with(1, Y, 1.0).with(2, X, rt2).with(3, Y, -1.0),
        RelationId::III => z.with(0, Y, -rt2).with(1, Y, 1.0).with(3, Y, 1.0),
        RelationId::IV => z.with(1, X, 1.0).with(2, Y, rt2).with(3, X, -1.0),
        RelationId::V => z.with(0, Y, 1.0).with(2, X, 1.0).with(3, Y, -rt2),
        RelationId::VI => z.with(0, Y, -1.0).with(1, Y, rt2).with(2, X, 1.0),
        RelationId::VII => z.with(0, X, 1.0).with(2, Y, -1.0).with(3, X, rt2),
        RelationId::VIII => z.with(0, X, 1.0).with(1, X, rt2).with(2, Y, 1.0),
    };
    CorrelationRelation { id, form }
}

/// Variance of one correlation relation on a TTPC state; equals
/// `4 exp(-2r)` for every relation.
pub fn correlation_variance(ttpc: &TtpcState, id: RelationId) -> f64 {
    let rel = relation(id);
    linear_form_variance(ttpc.state(), &rel.form, (0.0, 0.0))
        .expect("relation forms are sized for the four-mode register")
        .quantum
}

// ---------------------------------------------------------------------------
// Tests
// ---------------------------------------------------------------------------
