//! The six dense-coding channel configurations on the TTPC network.
//!
//! Four stations hold one mode each: Alice b1, Bob b2, Claire b3, Daisy b4.
//! Alice encodes two real signals by displacing her mode (`X_s` on the
//! amplitude quadrature, `Y_s` on the phase quadrature) and sends it to the
//! receiver, who mixes incoming and local modes on beamsplitters and
//! measures two photocurrents `i_plus` (carrying `X_s`) and `i_minus`
//! (carrying `Y_s`). Controllers may assist by homodyning their own modes
//! and sending the outcomes as classical messages that the receiver adds
//! with electronic gains `g_x`, `g_y`.
//!
//! Configurations (receiver after the dash, assisting controllers after the
//! underscore):
//!
//! * `AB` — Alice to neighbour Bob, no assistance.
//! * `AC` — Alice to diagonal Claire, no assistance. The two modes are
//!   uncorrelated, so each photocurrent carries thermal noise `cosh 2r`.
//! * `AB_CD` — Alice to Bob, Claire and Daisy assisting. A 1:2 beamsplitter
//!   plus the two feedforwards cancels the anti-squeezed terms; at the
//!   optimal gain `tanh(2r)/sqrt(3)` the noise falls below shot noise for
//!   every r > 0.
//! * `AC_BD` — Alice to Claire, Bob and Daisy assisting; optimal gain
//!   `tanh 2r`.
//! * `AB_D` — Alice to Bob, Daisy alone assisting by sending her mode
//!   optically; noise `exp(-2r)` exactly.
//! * `AC_D` — Alice to Claire, Daisy alone assisting optically; noise
//!   `exp(-2r)` with signal power halved (gain 1/4 per quadrature).
//!
//! Every configuration is described twice: once by closed-form noise
//! spectra in shot-noise units, and once by a declarative [`ProtocolSpec`]
//! (beamsplitter list plus measured photocurrents) that the covariance
//! engine evaluates. The two routes are verified against each other in the
//! test suites; neither is derived from the other in code.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::{map_ordered, Execution};
use crate::gaussian::{apply, linear_form_variance, LinearForm, Quad, SymplecticOp};
use crate::ttpc::{build_ttpc, N_MODES};

// ---------------------------------------------------------------------------
// Identifiers
// ---------------------------------------------------------------------------

/// Identifier of a dense-coding configuration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ProtocolId {
    #[serde(rename = "AB")]
    Ab,
    #[serde(rename = "AC")]
    Ac,
    #[serde(rename = "AB_CD")]
    AbCd,
    #[serde(rename = "AC_BD")]
    AcBd,
    #[serde(rename = "AB_D")]
    AbD,
    #[serde(rename = "AC_D")]
    AcD,
}

impl ProtocolId {
    pub const ALL: [ProtocolId; 6] = [
        ProtocolId::Ab,
        ProtocolId::Ac,
        ProtocolId::AbCd,
        ProtocolId::AcBd,
        ProtocolId::AbD,
        ProtocolId::AcD,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ProtocolId::Ab => "AB",
            ProtocolId::Ac => "AC",
            ProtocolId::AbCd => "AB_CD",
            ProtocolId::AcBd => "AC_BD",
            ProtocolId::AbD => "AB_D",
            ProtocolId::AcD => "AC_D",
        }
    }
}

impl std::fmt::Display for ProtocolId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for ProtocolId {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.to_ascii_uppercase().as_str() {
            "AB" => Ok(ProtocolId::Ab),
            "AC" => Ok(ProtocolId::Ac),
            "AB_CD" => Ok(ProtocolId::AbCd),
            "AC_BD" => Ok(ProtocolId::AcBd),
            "AB_D" => Ok(ProtocolId::AbD),
            "AC_D" => Ok(ProtocolId::AcD),
            other => Err(format!(
                "unknown protocol `{other}` (expected one of ab, ac, ab_cd, ac_bd, ab_d, ac_d)"
            )),
        }
    }
}

/// One of the four network stations. Station k holds mode b(k+1).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum StationName {
    Alice,
    Bob,
    Claire,
    Daisy,
}

impl StationName {
    pub const ALL: [StationName; 4] = [
        StationName::Alice,
        StationName::Bob,
        StationName::Claire,
        StationName::Daisy,
    ];

    /// The register mode this station holds (Alice 0 ... Daisy 3).
    pub fn home_mode(self) -> usize {
        match self {
            StationName::Alice => 0,
            StationName::Bob => 1,
            StationName::Claire => 2,
            StationName::Daisy => 3,
        }
    }
}

impl std::fmt::Display for StationName {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let name = match self {
            StationName::Alice => "Alice",
            StationName::Bob => "Bob",
            StationName::Claire => "Claire",
            StationName::Daisy => "Daisy",
        };
        f.write_str(name)
    }
}

/// Electronic feedforward gains applied by the receiver: `x` scales the
/// message entering `i_plus`, `y` the one entering `i_minus`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GainPair {
    pub x: f64,
    pub y: f64,
}

impl GainPair {
    pub fn new(x: f64, y: f64) -> Self {
        GainPair { x, y }
    }

    pub fn zero() -> Self {
        GainPair { x: 0.0, y: 0.0 }
    }

    pub fn uniform(g: f64) -> Self {
        GainPair { x: g, y: g }
    }
}

// ---------------------------------------------------------------------------
// Declarative network description
// ---------------------------------------------------------------------------

/// One beamsplitter in the receiver-side optical network, acting on
/// register modes `mode_a` (transmitted port) and `mode_b`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OpticalStep {
    pub transmittance: f64,
    pub phase: f64,
    pub mode_a: usize,
    pub mode_b: usize,
}

/// A single quadrature of a register mode with an electronic sign, as seen
/// *after* all optical steps have been applied.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadRef {
    pub mode: usize,
    pub quad: Quad,
    pub sign: f64,
}

/// Which gain a feedforward message is scaled by at the receiver.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum GainSlot {
    X,
    Y,
}

/// A controller's homodyne measurement forwarded classically to the
/// receiver, entering a photocurrent as `sign * gain * value`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Feedforward {
    pub from: StationName,
    pub tap: QuadRef,
    pub gain: GainSlot,
}

/// One photocurrent: the receiver's own homodyne port plus any gain-scaled
/// feedforward contributions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Photocurrent {
    pub port: QuadRef,
    pub feedforward: Vec<Feedforward>,
}

/// The pair of measured photocurrents.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasuredForms {
    pub plus: Photocurrent,
    pub minus: Photocurrent,
}

/// Declarative description of one configuration: who talks to whom, the
/// optical network, and the measured photocurrents. Serializable to JSON so
/// the analytic engine, the Monte Carlo simulator and the CLI share one
/// source of truth.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProtocolSpec {
    pub id: ProtocolId,
    pub sender: StationName,
    pub receiver: StationName,
    pub controllers: Vec<StationName>,
    pub optical_steps: Vec<OpticalStep>,
    pub measured_forms: MeasuredForms,
    /// Register mode carrying the signal displacement (applied before the
    /// optical steps).
    pub signal_mode: usize,
    pub description: String,
}

impl ProtocolSpec {
    /// Checks station disjointness and mode ranges.
    pub fn validate(&self) -> Result<()> {
        if self.sender == self.receiver {
            return Err(Error::StationConflict(format!(
                "sender and receiver are both {}",
                self.sender
            )));
        }
        for c in &self.controllers {
            if *c == self.sender || *c == self.receiver {
                return Err(Error::StationConflict(format!(
                    "controller {c} is also an endpoint"
                )));
            }
        }
        for (k, c) in self.controllers.iter().enumerate() {
            if self.controllers[..k].contains(c) {
                return Err(Error::StationConflict(format!("controller {c} repeated")));
            }
        }
        if self.signal_mode >= N_MODES {
            return Err(Error::ModeOutOfRange {
                index: self.signal_mode,
                n_modes: N_MODES,
            });
        }
        let check = |index: usize| -> Result<()> {
            if index >= N_MODES {
                Err(Error::ModeOutOfRange {
                    index,
                    n_modes: N_MODES,
                })
            } else {
                Ok(())
            }
        };
        for step in &self.optical_steps {
            check(step.mode_a)?;
            check(step.mode_b)?;
            if step.mode_a == step.mode_b {
                return Err(Error::DuplicateMode(step.mode_a));
            }
        }
        for pc in [&self.measured_forms.plus, &self.measured_forms.minus] {
            check(pc.port.mode)?;
            for ff in &pc.feedforward {
                check(ff.tap.mode)?;
                if ff.from == self.sender || ff.from == self.receiver {
                    return Err(Error::StationConflict(format!(
                        "feedforward source {} is an endpoint",
                        ff.from
                    )));
                }
            }
        }
        Ok(())
    }
}

/// The built-in network description for a configuration.
pub fn builtin_spec(id: ProtocolId) -> ProtocolSpec {
    use GainSlot::{X as GX, Y as GY};
    use Quad::{X, Y};
    let port = |mode: usize, quad: Quad, sign: f64| QuadRef { mode, quad, sign };
    let bs = |transmittance: f64, phase: f64, mode_a: usize, mode_b: usize| OpticalStep {
        transmittance,
        phase,
        mode_a,
        mode_b,
    };
    let half = 0.5;
    let pi_2 = std::f64::consts::FRAC_PI_2;
    match id {
        ProtocolId::Ab => ProtocolSpec {
            id,
            sender: StationName::Alice,
            receiver: StationName::Bob,
            controllers: vec![],
            optical_steps: vec![bs(half, 0.0, 0, 1)],
            measured_forms: MeasuredForms {
                plus: Photocurrent {
                    port: port(0, X, 1.0),
                    feedforward: vec![],
                },
                minus: Photocurrent {
                    port: port(1, Y, 1.0),
                    feedforward: vec![],
                },
            },
            signal_mode: 0,
            description: "Unassisted neighbour channel: Bob mixes Alice's displaced mode \
                          with his own on a balanced beamsplitter and homodynes X on the \
                          sum port and Y on the difference port."
                .to_string(),
        },
        ProtocolId::Ac => ProtocolSpec {
            id,
            sender: StationName::Alice,
            receiver: StationName::Claire,
            controllers: vec![],
            optical_steps: vec![bs(half, 0.0, 0, 2)],
            measured_forms: MeasuredForms {
                plus: Photocurrent {
                    port: port(0, X, 1.0),
                    feedforward: vec![],
                },
                minus: Photocurrent {
                    port: port(2, Y, 1.0),
                    feedforward: vec![],
                },
            },
            signal_mode: 0,
            description: "Unassisted diagonal channel: Claire mixes Alice's displaced mode \
                          with her own uncorrelated mode on a balanced beamsplitter; both \
                          photocurrents carry thermal noise cosh 2r."
                .to_string(),
        },
        ProtocolId::AbCd => ProtocolSpec {
            id,
            sender: StationName::Alice,
            receiver: StationName::Bob,
            controllers: vec![StationName::Claire, StationName::Daisy],
            optical_steps: vec![bs(2.0 / 3.0, 0.0, 0, 1)],
            measured_forms: MeasuredForms {
                plus: Photocurrent {
                    port: port(0, X, 1.0),
                    feedforward: vec![Feedforward {
                        from: StationName::Daisy,
                        tap: port(3, X, 1.0),
                        gain: GX,
                    }],
                },
                minus: Photocurrent {
                    port: port(1, Y, 1.0),
                    feedforward: vec![Feedforward {
                        from: StationName::Claire,
                        tap: port(2, X, 1.0),
                        gain: GY,
                    }],
                },
            },
            signal_mode: 0,
            description: "Neighbour channel with two controllers: a 1:2 beamsplitter \
                          (transmittance 2/3 toward Alice's mode) feeds X and Y homodynes; \
                          Daisy's X_b4 enters i_plus with gain g_x and Claire's X_b3 enters \
                          i_minus with gain g_y."
                .to_string(),
        },
        ProtocolId::AcBd => ProtocolSpec {
            id,
            sender: StationName::Alice,
            receiver: StationName::Claire,
            controllers: vec![StationName::Bob, StationName::Daisy],
            optical_steps: vec![bs(half, pi_2, 0, 2)],
            measured_forms: MeasuredForms {
                plus: Photocurrent {
                    port: port(0, X, 1.0),
                    feedforward: vec![Feedforward {
                        from: StationName::Daisy,
                        tap: port(3, X, 1.0),
                        gain: GX,
                    }],
                },
                minus: Photocurrent {
                    port: port(2, X, -1.0),
                    feedforward: vec![Feedforward {
                        from: StationName::Bob,
                        tap: port(1, Y, -1.0),
                        gain: GY,
                    }],
                },
            },
            signal_mode: 0,
            description: "Diagonal channel with two controllers: Claire couples Alice's \
                          mode and her own on a balanced beamsplitter with pi/2 phase and \
                          homodynes X on both output ports (the second electronically \
                          inverted), so i_plus = (X_b1' - Y_b3)/sqrt2 + g_x X_b4 and \
                          i_minus = (Y_b1' - X_b3)/sqrt2 - g_y Y_b2. Sign choices are fixed \
                          by requiring positive optimal gains."
                .to_string(),
        },
        ProtocolId::AbD => ProtocolSpec {
            id,
            sender: StationName::Alice,
            receiver: StationName::Bob,
            controllers: vec![StationName::Daisy],
            optical_steps: vec![bs(half, 0.0, 1, 3), bs(half, 0.0, 0, 1)],
            measured_forms: MeasuredForms {
                plus: Photocurrent {
                    port: port(0, X, 1.0),
                    feedforward: vec![],
                },
                minus: Photocurrent {
                    port: port(1, Y, 1.0),
                    feedforward: vec![],
                },
            },
            signal_mode: 0,
            description: "Neighbour channel with one controller: Daisy sends her mode \
                          optically; Bob combines it with his own on a balanced \
                          beamsplitter (recovering the pair-correlated mode a2), then \
                          measures a standard two-port homodyne pair against Alice's \
                          displaced mode."
                .to_string(),
        },
        ProtocolId::AcD => ProtocolSpec {
            id,
            sender: StationName::Alice,
            receiver: StationName::Claire,
            controllers: vec![StationName::Daisy],
            optical_steps: vec![bs(half, pi_2, 0, 2), bs(half, 0.0, 0, 3)],
            measured_forms: MeasuredForms {
                plus: Photocurrent {
                    port: port(0, X, 1.0),
                    feedforward: vec![],
                },
                minus: Photocurrent {
                    port: port(3, Y, -1.0),
                    feedforward: vec![],
                },
            },
            signal_mode: 0,
            description: "Diagonal channel with one controller: Claire couples Alice's \
                          mode with her own on a balanced pi/2 beamsplitter, then couples \
                          the sum port with Daisy's optically forwarded mode on a balanced \
                          zero-phase beamsplitter; X on the final sum port gives \
                          (X_b1' - Y_b3 + sqrt2 X_b4)/2 and -Y on the final difference \
                          port gives (Y_b1' + X_b3 - sqrt2 Y_b4)/2."
                .to_string(),
        },
    }
}

// ---------------------------------------------------------------------------
// Noise spectra
// ---------------------------------------------------------------------------

/// Noise and signal transfer of one configuration at squeezing `r`.
///
/// `noise_plus`/`noise_minus` are the quantum noise variances of the two
/// photocurrents in shot-noise units; `signal_gain_plus` is the squared
/// coefficient multiplying the `X_s` variance in `i_plus` (likewise
/// `signal_gain_minus` for `Y_s` in `i_minus`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectrumReport {
    pub protocol: ProtocolId,
    pub r: f64,
    pub gains: GainPair,
    pub noise_plus: f64,
    pub noise_minus: f64,
    pub signal_gain_plus: f64,
    pub signal_gain_minus: f64,
}

fn require_non_negative_r(r: f64) -> Result<()> {
    if r.is_nan() || r < 0.0 {
        return Err(Error::NegativeSqueezing(r));
    }
    Ok(())
}

/// Unassisted neighbour channel noise:
/// `[(sqrt2 - 1)^2 + 1] e^{2r}/8 + [(sqrt2 + 1)^2 + 1] e^{-2r}/8`
/// per photocurrent, signal gain 1/2.
pub fn spectra_ab_unassisted(r: f64) -> Result<SpectrumReport> {
    require_non_negative_r(r)?;
    let rt2 = std::f64::consts::SQRT_2;
    let s = (-2.0 * r).exp();
    let noise = ((4.0 - 2.0 * rt2) / s + (4.0 + 2.0 * rt2) * s) / 8.0;
    Ok(SpectrumReport {
        protocol: ProtocolId::Ab,
        r,
        gains: GainPair::zero(),
        noise_plus: noise,
        noise_minus: noise,
        signal_gain_plus: 0.5,
        signal_gain_minus: 0.5,
    })
}

/// Unassisted diagonal channel noise: `cosh 2r` per photocurrent, signal
/// gain 1/2.
pub fn spectra_ac_unassisted(r: f64) -> Result<SpectrumReport> {
    require_non_negative_r(r)?;
    let noise = (2.0 * r).cosh();
    Ok(SpectrumReport {
        protocol: ProtocolId::Ac,
        r,
        gains: GainPair::zero(),
        noise_plus: noise,
        noise_minus: noise,
        signal_gain_plus: 0.5,
        signal_gain_minus: 0.5,
    })
}

/// Two-controller neighbour channel at arbitrary gains:
///
/// ```text
/// noise_plus  = [2 (1 - sqrt3 g_x)^2 e^{2r}
///                + ((3 + sqrt3 g_x)^2 + (sqrt3 g_x - 1)^2) e^{-2r}] / 12
/// noise_minus = [(sqrt3 g_y - 1)^2 e^{2r}
///                + (4 + (sqrt3 g_y + 1)^2) e^{-2r}] / 6
/// ```
///
/// Signal gains 2/3 and 1/3. The two expressions are algebraically equal at
/// equal gains.
pub fn spectra_ab_two_controllers(r: f64, gains: GainPair) -> Result<SpectrumReport> {
    require_non_negative_r(r)?;
    let rt3 = 3.0f64.sqrt();
    let (ep, em) = ((2.0 * r).exp(), (-2.0 * r).exp());
    let gx = rt3 * gains.x;
    let gy = rt3 * gains.y;
    let noise_plus =
        (2.0 * (1.0 - gx).powi(2) * ep + ((3.0 + gx).powi(2) + (gx - 1.0).powi(2)) * em) / 12.0;
    let noise_minus = ((gy - 1.0).powi(2) * ep + (4.0 + (gy + 1.0).powi(2)) * em) / 6.0;
    Ok(SpectrumReport {
        protocol: ProtocolId::AbCd,
        r,
        gains,
        noise_plus,
        noise_minus,
        signal_gain_plus: 2.0 / 3.0,
        signal_gain_minus: 1.0 / 3.0,
    })
}

/// Two-controller diagonal channel at arbitrary gains:
/// `noise = [(1 - g)^2 e^{2r} + (1 + g)^2 e^{-2r}] / 2` per photocurrent,
/// signal gain 1/2 each.
pub fn spectra_ac_two_controllers(r: f64, gains: GainPair) -> Result<SpectrumReport> {
    require_non_negative_r(r)?;
    let (ep, em) = ((2.0 * r).exp(), (-2.0 * r).exp());
    let noise = |g: f64| ((1.0 - g).powi(2) * ep + (1.0 + g).powi(2) * em) / 2.0;
    Ok(SpectrumReport {
        protocol: ProtocolId::AcBd,
        r,
        gains,
        noise_plus: noise(gains.x),
        noise_minus: noise(gains.y),
        signal_gain_plus: 0.5,
        signal_gain_minus: 0.5,
    })
}

/// One-controller neighbour channel: noise `exp(-2r)`, signal gain 1/2.
pub fn spectra_ab_one_controller(r: f64) -> Result<SpectrumReport> {
    require_non_negative_r(r)?;
    let noise = (-2.0 * r).exp();
    Ok(SpectrumReport {
        protocol: ProtocolId::AbD,
        r,
        gains: GainPair::zero(),
        noise_plus: noise,
        noise_minus: noise,
        signal_gain_plus: 0.5,
        signal_gain_minus: 0.5,
    })
}

/// One-controller diagonal channel: noise `exp(-2r)`, signal gain 1/4.
pub fn spectra_ac_one_controller(r: f64) -> Result<SpectrumReport> {
    require_non_negative_r(r)?;
    let noise = (-2.0 * r).exp();
    Ok(SpectrumReport {
        protocol: ProtocolId::AcD,
        r,
        gains: GainPair::zero(),
        noise_plus: noise,
        noise_minus: noise,
        signal_gain_plus: 0.25,
        signal_gain_minus: 0.25,
    })
}

/// Noise-minimising gains for the two-controller neighbour channel:
/// `g_x = g_y = tanh(2r) / sqrt(3)`.
pub fn optimal_gains_ab(r: f64) -> Result<GainPair> {
    require_non_negative_r(r)?;
    Ok(GainPair::uniform((2.0 * r).tanh() / 3.0f64.sqrt()))
}

/// Noise-minimising gains for the two-controller diagonal channel:
/// `g_x = g_y = tanh 2r`.
pub fn optimal_gains_ac(r: f64) -> Result<GainPair> {
    require_non_negative_r(r)?;
    Ok(GainPair::uniform((2.0 * r).tanh()))
}

/// Noise-minimising gains for any configuration (zero for the ones without
/// electronic feedforward).
pub fn optimal_gains(id: ProtocolId, r: f64) -> Result<GainPair> {
    match id {
        ProtocolId::AbCd => optimal_gains_ab(r),
        ProtocolId::AcBd => optimal_gains_ac(r),
        _ => {
            require_non_negative_r(r)?;
            Ok(GainPair::zero())
        }
    }
}

/// Closed-form spectrum of any configuration at explicit gains (ignored by
/// the configurations without feedforward).
pub fn closed_form_spectra(id: ProtocolId, r: f64, gains: GainPair) -> Result<SpectrumReport> {
    match id {
        ProtocolId::Ab => spectra_ab_unassisted(r),
        ProtocolId::Ac => spectra_ac_unassisted(r),
        ProtocolId::AbCd => spectra_ab_two_controllers(r, gains),
        ProtocolId::AcBd => spectra_ac_two_controllers(r, gains),
        ProtocolId::AbD => spectra_ab_one_controller(r),
        ProtocolId::AcD => spectra_ac_one_controller(r),
    }
}

/// Closed-form spectrum at the configuration's optimal gains.
pub fn spectrum_at_optimal(id: ProtocolId, r: f64) -> Result<SpectrumReport> {
    closed_form_spectra(id, r, optimal_gains(id, r)?)
}

// ---------------------------------------------------------------------------
// Engine evaluation of a ProtocolSpec
// ---------------------------------------------------------------------------

/// The two photocurrent forms of a spec over the post-optics register, with
/// signal coefficients filled in, plus the composed optical map.
pub fn engine_forms(
    spec: &ProtocolSpec,
    gains: GainPair,
) -> Result<(LinearForm, LinearForm, SymplecticOp)> {
    spec.validate()?;
    let mut optics = SymplecticOp::identity(N_MODES)?;
    for step in &spec.optical_steps {
        let bs = SymplecticOp::beamsplitter(
            step.transmittance,
            step.phase,
            step.mode_a,
            step.mode_b,
            N_MODES,
        )?;
        optics = optics.then(&bs)?;
    }
    let assemble = |pc: &Photocurrent| -> Result<LinearForm> {
        let mut form = LinearForm::zero(N_MODES).with(pc.port.mode, pc.port.quad, pc.port.sign);
        for ff in &pc.feedforward {
            let g = match ff.gain {
                GainSlot::X => gains.x,
                GainSlot::Y => gains.y,
            };
            let tap = LinearForm::zero(N_MODES).with(ff.tap.mode, ff.tap.quad, ff.tap.sign);
            form.add_scaled(&tap, g)?;
        }
        // The signal displaces the sender's mode before the optics, so its
        // weight in the photocurrent is the pulled-back coefficient of that
        // mode's quadratures.
        let back = form.pulled_back(&optics)?;
        let sx = back.coeffs()[Quad::X.index(spec.signal_mode)];
        let sy = back.coeffs()[Quad::Y.index(spec.signal_mode)];
        form.set_signal_coeffs(sx, sy);
        Ok(form)
    };
    let plus = assemble(&spec.measured_forms.plus)?;
    let minus = assemble(&spec.measured_forms.minus)?;
    Ok((plus, minus, optics))
}

/// Evaluates a network description on the covariance engine: builds the
/// source state, applies the optical steps, and reads off the photocurrent
/// noise variances and signal gains. Independent of the closed-form spectra.
pub fn engine_spectra(spec: &ProtocolSpec, r: f64, gains: GainPair) -> Result<SpectrumReport> {
    let source = build_ttpc(r)?;
    let (plus, minus, optics) = engine_forms(spec, gains)?;
    let state = apply(&optics, source.state())?;
    let noise_plus = linear_form_variance(&state, &plus, (0.0, 0.0))?.quantum;
    let noise_minus = linear_form_variance(&state, &minus, (0.0, 0.0))?.quantum;
    let (sx_plus, _) = plus.signal_coeffs();
    let (_, sy_minus) = minus.signal_coeffs();
    Ok(SpectrumReport {
        protocol: spec.id,
        r,
        gains,
        noise_plus,
        noise_minus,
        signal_gain_plus: sx_plus * sx_plus,
        signal_gain_minus: sy_minus * sy_minus,
    })
}

// ---------------------------------------------------------------------------
// Noise curve sweep
// ---------------------------------------------------------------------------

/// Squeezing strength in decibels: `-10 log10(exp(-2r))`.
pub fn squeezing_db(r: f64) -> f64 {
    -10.0 * (-2.0 * r).exp().log10()
}

/// Exact squeezing factor at which the unassisted neighbour channel noise
/// crosses shot noise: the lower root of
/// `(4 + 2 sqrt2) s^2 - 8 s + (4 - 2 sqrt2)`, namely `s = 3 - 2 sqrt2`
/// (about 7.66 dB; the other root is `s = 1`). The channel beats shot noise
/// for `3 - 2 sqrt2 < s < 1` and is noisier than shot noise once the
/// squeezing is stronger than this factor.
pub fn ab_snl_crossing_s() -> f64 {
    3.0 - 2.0 * std::f64::consts::SQRT_2
}

/// One row of the noise-versus-squeezing sweep: every configuration's
/// `i_plus` noise at optimal gains, in shot-noise units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseCurvesRow {
    pub r: f64,
    pub squeezing_db: f64,
    pub snl: f64,
    pub ab_unassisted: f64,
    pub ab_two_controllers_opt: f64,
    pub ab_one_controller: f64,
    pub ac_unassisted: f64,
    pub ac_two_controllers_opt: f64,
    pub ac_one_controller: f64,
}

/// Sweeps the optimal-gain noise spectra over a squeezing grid.
pub fn noise_curves(r_grid: &[f64], exec: Execution) -> Result<Vec<NoiseCurvesRow>> {
    let rows = map_ordered(
        r_grid.to_vec(),
        |r| -> Result<NoiseCurvesRow> {
            Ok(NoiseCurvesRow {
                r,
                squeezing_db: squeezing_db(r),
                snl: 1.0,
                ab_unassisted: spectra_ab_unassisted(r)?.noise_plus,
                ab_two_controllers_opt: spectrum_at_optimal(ProtocolId::AbCd, r)?.noise_plus,
                ab_one_controller: spectra_ab_one_controller(r)?.noise_plus,
                ac_unassisted: spectra_ac_unassisted(r)?.noise_plus,
                ac_two_controllers_opt: spectrum_at_optimal(ProtocolId::AcBd, r)?.noise_plus,
                ac_one_controller: spectra_ac_one_controller(r)?.noise_plus,
            })
        },
        exec,
    );
    rows.into_iter().collect()
}

// ---------------------------------------------------------------------------
// Tests
// ---------------------------------------------------------------------------

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ttpc::source_op;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    const TOL: f64 = 1e-12;
    const ENGINE_TOL: f64 = 1e-10;

    const R_GRID: [f64; 5] = [0.0, 0.3, 0.5, 1.0, 2.0];

    /// Golden-section minimiser, the independent oracle for gain optimality.
    fn golden_min(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
        let phi = (5.0f64.sqrt() - 1.0) / 2.0;
        let mut c = b - phi * (b - a);
        let mut d = a + phi * (b - a);
        for _ in 0..120 {
            if f(c) < f(d) {
                b = d;
            } else {
                a = c;
            }
            c = b - phi * (b - a);
            d = a + phi * (b - a);
        }
        0.5 * (a + b)
    }

    #[test]
    fn every_spectrum_is_shot_noise_at_zero_squeezing() {
        for id in ProtocolId::ALL {
            let rep = spectrum_at_optimal(id, 0.0).unwrap();
            assert_abs_diff_eq!(rep.noise_plus, 1.0, epsilon = TOL);
            assert_abs_diff_eq!(rep.noise_minus, 1.0, epsilon = TOL);
        }
    }

    #[test]
    fn unassisted_neighbour_matches_hyperbolic_form() {
        // The printed spectrum equals cosh 2r - sinh 2r / sqrt2.
        for r in R_GRID {
            let rep = spectra_ab_unassisted(r).unwrap();
            let alt = (2.0 * r).cosh() - (2.0 * r).sinh() / std::f64::consts::SQRT_2;
            assert_abs_diff_eq!(rep.noise_plus, alt, epsilon = TOL);
        }
        // Frozen spot value at r = 1.
        assert_abs_diff_eq!(
            spectra_ab_unassisted(1.0).unwrap().noise_plus,
            1.197_618_1,
            epsilon = 1e-6
        );
    }

    #[test]
    fn two_controller_neighbour_optimum_matches_closed_form() {
        // At the optimal gain the noise is (2s/3)(s^2 + 2)/(s^2 + 1).
        for r in R_GRID {
            let s = (-2.0 * r).exp();
            let want = (2.0 * s / 3.0) * (s * s + 2.0) / (s * s + 1.0);
            let rep = spectrum_at_optimal(ProtocolId::AbCd, r).unwrap();
            assert_abs_diff_eq!(rep.noise_plus, want, epsilon = TOL);
            assert_abs_diff_eq!(rep.noise_minus, want, epsilon = TOL);
        }
        // Frozen spot value at s = 0.1.
        let r = -0.1f64.ln() / 2.0;
        let rep = spectrum_at_optimal(ProtocolId::AbCd, r).unwrap();
        assert_abs_diff_eq!(rep.noise_plus, 0.132_673, epsilon = 1e-5);
    }

    #[test]
    fn two_controller_diagonal_optimum_matches_closed_form() {
        // At the optimal gain the noise is 2s/(1 + s^2).
        for r in R_GRID {
            let s = (-2.0 * r).exp();
            let want = 2.0 * s / (1.0 + s * s);
            let rep = spectrum_at_optimal(ProtocolId::AcBd, r).unwrap();
            assert_abs_diff_eq!(rep.noise_plus, want, epsilon = TOL);
        }
        let r = -0.1f64.ln() / 2.0;
        let rep = spectrum_at_optimal(ProtocolId::AcBd, r).unwrap();
        assert_abs_diff_eq!(rep.noise_plus, 0.198_019_801_980_198, epsilon = 1e-12);
    }

    #[test]
    fn optimal_gain_values_at_ten_db() {
        let r = -0.1f64.ln() / 2.0;
        let ab = optimal_gains_ab(r).unwrap();
        let ac = optimal_gains_ac(r).unwrap();
        assert_abs_diff_eq!(ac.x, 0.980_198_019_801_980_2, epsilon = TOL);
        assert_abs_diff_eq!(ab.x, 0.565_92, epsilon = 1e-5);
        assert_eq!(ab.x, ab.y);
    }

    #[test]
    fn numerical_minimiser_recovers_optimal_gains() {
        for r in [0.1, 0.5, 1.0, 2.0] {
            let want_ab = optimal_gains_ab(r).unwrap().x;
            let got_ab = golden_min(
                |g| {
                    spectra_ab_two_controllers(r, GainPair::uniform(g))
                        .unwrap()
                        .noise_plus
                },
                -2.0,
                2.0,
            );
            assert_abs_diff_eq!(got_ab, want_ab, epsilon = 1e-8);

            let want_ac = optimal_gains_ac(r).unwrap().x;
            let got_ac = golden_min(
                |g| {
                    spectra_ac_two_controllers(r, GainPair::uniform(g))
                        .unwrap()
                        .noise_minus
                },
                -2.0,
                2.0,
            );
            assert_abs_diff_eq!(got_ac, want_ac, epsilon = 1e-8);
        }
    }

    #[test]
    fn numerical_minimiser_on_engine_noise_agrees() {
        // Same oracle applied to the engine route instead of the closed form.
        let r = 0.8;
        let spec_ab = builtin_spec(ProtocolId::AbCd);
        let got = golden_min(
            |g| {
                engine_spectra(&spec_ab, r, GainPair::uniform(g))
                    .unwrap()
                    .noise_plus
            },
            -2.0,
            2.0,
        );
        assert_abs_diff_eq!(got, optimal_gains_ab(r).unwrap().x, epsilon = 1e-8);

        let spec_ac = builtin_spec(ProtocolId::AcBd);
        let got = golden_min(
            |g| {
                engine_spectra(&spec_ac, r, GainPair::uniform(g))
                    .unwrap()
                    .noise_minus
            },
            -2.0,
            2.0,
        );
        assert_abs_diff_eq!(got, optimal_gains_ac(r).unwrap().x, epsilon = 1e-8);
    }

    #[test]
    fn engine_agrees_with_closed_forms_on_grid() {
        for id in ProtocolId::ALL {
            let spec = builtin_spec(id);
            for r in R_GRID {
                let gains = optimal_gains(id, r).unwrap();
                let engine = engine_spectra(&spec, r, gains).unwrap();
                let closed = closed_form_spectra(id, r, gains).unwrap();
                assert_abs_diff_eq!(engine.noise_plus, closed.noise_plus, epsilon = ENGINE_TOL);
                assert_abs_diff_eq!(engine.noise_minus, closed.noise_minus, epsilon = ENGINE_TOL);
                assert_abs_diff_eq!(
                    engine.signal_gain_plus,
                    closed.signal_gain_plus,
                    epsilon = ENGINE_TOL
                );
                assert_abs_diff_eq!(
                    engine.signal_gain_minus,
                    closed.signal_gain_minus,
                    epsilon = ENGINE_TOL
                );
            }
        }
    }

    #[test]
    fn photocurrents_keep_signal_quadratures_separate() {
        // i_plus must carry no Y_s and i_minus no X_s.
        for id in ProtocolId::ALL {
            let spec = builtin_spec(id);
            let gains = optimal_gains(id, 0.9).unwrap();
            let (plus, minus, _) = engine_forms(&spec, gains).unwrap();
            assert_abs_diff_eq!(plus.signal_coeffs().1, 0.0, epsilon = TOL);
            assert_abs_diff_eq!(minus.signal_coeffs().0, 0.0, epsilon = TOL);
        }
    }

    #[test]
    fn neighbour_photocurrent_seed_coefficients() {
        // Pulled back to the seed vacua, i_plus of the unassisted neighbour
        // channel reads
        // [(sqrt2 cosh r - sinh r) X01 + (cosh r - sqrt2 sinh r) X02
        //  - cosh r Y03 - sinh r Y04] / 2.
        let r = 0.8f64;
        let (c, s) = (r.cosh(), r.sinh());
        let rt2 = std::f64::consts::SQRT_2;
        let spec = builtin_spec(ProtocolId::Ab);
        let (plus, _, optics) = engine_forms(&spec, GainPair::zero()).unwrap();
        let full = source_op(r).unwrap().then(&optics).unwrap();
        let seed = plus.pulled_back(&full).unwrap();
        let want = [
            (rt2 * c - s) / 2.0, // X01
            0.0,                 // Y01
            (c - rt2 * s) / 2.0, // X02
            0.0,                 // Y02
            0.0,                 // X03
            -c / 2.0,            // Y03
            0.0,                 // X04
            -s / 2.0,            // Y04
        ];
        for (got, want) in seed.coeffs().iter().zip(want) {
            assert_abs_diff_eq!(*got, want, epsilon = TOL);
        }
    }

    #[test]
    fn two_controller_photocurrents_in_register_basis() {
        // i_plus = (sqrt2 X_b1' + X_b2)/sqrt3 + g_x X_b4,
        // i_minus = (sqrt2 Y_b2 - Y_b1')/sqrt3 + g_y X_b3.
        let gains = GainPair::new(0.25, -0.4);
        let rt3 = 3.0f64.sqrt();
        let spec = builtin_spec(ProtocolId::AbCd);
        let (plus, minus, optics) = engine_forms(&spec, gains).unwrap();
        let plus_b = plus.pulled_back(&optics).unwrap();
        let minus_b = minus.pulled_back(&optics).unwrap();
        let want_plus = [
            std::f64::consts::SQRT_2 / rt3, // X_b1
            0.0,
            1.0 / rt3, // X_b2
            0.0,
            0.0,
            0.0,
            gains.x, // X_b4
            0.0,
        ];
        let want_minus = [
            0.0,
            -1.0 / rt3, // Y_b1
            0.0,
            std::f64::consts::SQRT_2 / rt3, // Y_b2
            gains.y,                        // X_b3
            0.0,
            0.0,
            0.0,
        ];
        for (got, want) in plus_b.coeffs().iter().zip(want_plus) {
            assert_abs_diff_eq!(*got, want, epsilon = TOL);
        }
        for (got, want) in minus_b.coeffs().iter().zip(want_minus) {
            assert_abs_diff_eq!(*got, want, epsilon = TOL);
        }
    }

    #[test]
    fn one_controller_diagonal_photocurrents_hit_correlation_forms() {
        // i_plus = (X_b1' - Y_b3 + sqrt2 X_b4)/2,
        // i_minus = (Y_b1' + X_b3 - sqrt2 Y_b4)/2.
        let rt2 = std::f64::consts::SQRT_2;
        let spec = builtin_spec(ProtocolId::AcD);
        let (plus, minus, optics) = engine_forms(&spec, GainPair::zero()).unwrap();
        let plus_b = plus.pulled_back(&optics).unwrap();
        let minus_b = minus.pulled_back(&optics).unwrap();
        let want_plus = [0.5, 0.0, 0.0, 0.0, 0.0, -0.5, rt2 / 2.0, 0.0];
        let want_minus = [0.0, 0.5, 0.0, 0.0, 0.5, 0.0, 0.0, -rt2 / 2.0];
        for (got, want) in plus_b.coeffs().iter().zip(want_plus) {
            assert_abs_diff_eq!(*got, want, epsilon = TOL);
        }
        for (got, want) in minus_b.coeffs().iter().zip(want_minus) {
            assert_abs_diff_eq!(*got, want, epsilon = TOL);
        }
        // Signal gains 1/4 each.
        assert_abs_diff_eq!(plus.signal_coeffs().0, 0.5, epsilon = TOL);
        assert_abs_diff_eq!(minus.signal_coeffs().1, 0.5, epsilon = TOL);
    }

    #[test]
    fn snl_crossing_is_the_quadratic_root() {
        // Bisection on the closed form, compared with the exact root.
        let f = |s: f64| {
            let r = -s.ln() / 2.0;
            spectra_ab_unassisted(r).unwrap().noise_plus - 1.0
        };
        // The quadratic has roots at s = 1 and s = 3 - 2 sqrt2: the noise
        // dips below shot noise between them (weak squeezing) and rises
        // above it for stronger squeezing. Bracket the lower root.
        let mut lo = 0.01;
        let mut inside = 0.3;
        assert!(f(lo) > 0.0);
        assert!(f(inside) < 0.0);
        assert!(f(0.9) < 0.0, "weak squeezing sits inside the dip");
        for _ in 0..200 {
            let mid = 0.5 * (lo + inside);
            if f(mid) > 0.0 {
                lo = mid;
            } else {
                inside = mid;
            }
        }
        let root = 0.5 * (lo + inside);
        assert_abs_diff_eq!(root, ab_snl_crossing_s(), epsilon = 1e-10);
        // The crossing sits near (but measurably off) a 0.16 squeezing
        // factor, i.e. about 7.66 dB rather than 7.96 dB.
        assert!((ab_snl_crossing_s() - 0.16).abs() < 0.02);
    }

    #[test]
    fn noise_curve_sweep_brackets_shot_noise_crossing() {
        let grid: Vec<f64> = (0..=250).map(|k| k as f64 * 0.01).collect();
        let rows = noise_curves(&grid, Execution::Sequential).unwrap();
        assert_abs_diff_eq!(rows[0].ab_unassisted, 1.0, epsilon = TOL);
        assert_abs_diff_eq!(rows[0].ac_two_controllers_opt, 1.0, epsilon = TOL);
        // The unassisted neighbour curve starts at shot noise, dips below
        // it, and crosses back up between 7.6 and 7.7 dB.
        let crossing = rows
            .windows(2)
            .find(|w| w[0].ab_unassisted < 1.0 && w[1].ab_unassisted >= 1.0)
            .expect("upward crossing inside the default grid");
        assert!(crossing[0].squeezing_db > 7.0 && crossing[1].squeezing_db < 8.0);
        assert!(
            rows[1].ab_unassisted < 1.0,
            "weak squeezing beats shot noise"
        );
        let db_root = -10.0 * ab_snl_crossing_s().log10();
        assert!(db_root > 7.6 && db_root < 7.7);
        // Assisted curves sit below the unassisted diagonal curve and below
        // shot noise for every r > 0.
        for row in &rows[1..] {
            for assisted in [
                row.ab_two_controllers_opt,
                row.ab_one_controller,
                row.ac_two_controllers_opt,
                row.ac_one_controller,
            ] {
                assert!(assisted < 1.0, "assisted noise {assisted} at r = {}", row.r);
                assert!(assisted < row.ac_unassisted);
            }
            assert!(row.ac_unassisted >= 1.0);
        }
    }

    #[test]
    fn specs_roundtrip_through_json() {
        for id in ProtocolId::ALL {
            let spec = builtin_spec(id);
            let json = serde_json::to_string(&spec).unwrap();
            let back: ProtocolSpec = serde_json::from_str(&json).unwrap();
            assert_eq!(spec, back);
        }
        // Spot-check the wire naming.
        let json = serde_json::to_string(&builtin_spec(ProtocolId::AbCd)).unwrap();
        assert!(json.contains("\"id\":\"AB_CD\""));
        assert!(json.contains("\"measured_forms\""));
        assert!(json.contains("\"signal_mode\":0"));
        assert!(json.contains("\"controllers\":[\"Claire\",\"Daisy\"]"));
    }

    #[test]
    fn validation_rejects_malformed_specs() {
        let mut spec = builtin_spec(ProtocolId::AbCd);
        spec.controllers = vec![StationName::Bob, StationName::Daisy];
        assert!(matches!(spec.validate(), Err(Error::StationConflict(_))));

        let mut spec = builtin_spec(ProtocolId::Ab);
        spec.optical_steps[0].mode_b = 7;
        assert!(matches!(
            spec.validate(),
            Err(Error::ModeOutOfRange { index: 7, .. })
        ));

        let mut spec = builtin_spec(ProtocolId::Ab);
        spec.receiver = StationName::Alice;
        assert!(spec.validate().is_err());

        assert!(engine_spectra(&spec, 1.0, GainPair::zero()).is_err());
    }

    #[test]
    fn spectra_reject_negative_squeezing() {
        assert!(spectra_ab_unassisted(-0.2).is_err());
        assert!(spectrum_at_optimal(ProtocolId::AcD, -1.0).is_err());
        assert!(optimal_gains(ProtocolId::AbCd, f64::NAN).is_err());
    }

    proptest! {
        #[test]
        fn engine_matches_closed_forms_at_random_gains(
            r in 0.0f64..2.0,
            gx in -1.5f64..1.5,
            gy in -1.5f64..1.5,
        ) {
            let gains = GainPair::new(gx, gy);
            for id in [ProtocolId::AbCd, ProtocolId::AcBd] {
                let engine = engine_spectra(&builtin_spec(id), r, gains).unwrap();
                let closed = closed_form_spectra(id, r, gains).unwrap();
                prop_assert!((engine.noise_plus - closed.noise_plus).abs() < 1e-9);
                prop_assert!((engine.noise_minus - closed.noise_minus).abs() < 1e-9);
            }
        }

        #[test]
        fn equal_gains_give_symmetric_photocurrents(r in 0.0f64..2.0, g in -1.5f64..1.5) {
            for id in [ProtocolId::AbCd, ProtocolId::AcBd] {
                let rep = closed_form_spectra(id, r, GainPair::uniform(g)).unwrap();
                prop_assert!((rep.noise_plus - rep.noise_minus).abs() < 1e-12);
            }
        }

        #[test]
        fn assisted_curves_beat_shot_noise(r in 1e-6f64..3.0) {
            for id in [ProtocolId::AbCd, ProtocolId::AcBd, ProtocolId::AbD, ProtocolId::AcD] {
                let rep = spectrum_at_optimal(id, r).unwrap();
                prop_assert!(rep.noise_plus < 1.0);
                prop_assert!(rep.noise_minus < 1.0);
            }
            prop_assert!(spectra_ac_unassisted(r).unwrap().noise_plus >= 1.0);
        }

        #[test]
        fn optimal_noise_decreases_with_squeezing(r in 0.01f64..2.9) {
            let dr = 0.05;
            for id in [ProtocolId::AbCd, ProtocolId::AcBd, ProtocolId::AbD, ProtocolId::AcD] {
                let lo = spectrum_at_optimal(id, r).unwrap().noise_plus;
                let hi = spectrum_at_optimal(id, r + dr).unwrap().noise_plus;
                prop_assert!(hi < lo, "{id}: noise rose from {lo} to {hi} at r = {r}");
            }
        }
    }
}
