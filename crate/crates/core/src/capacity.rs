//! Channel capacity of the dense-coding configurations under a photon
//! budget.
//!
//! Alice's station spends a mean photon number `nbar` per use, divided
//! between the squeezing that builds the shared state (`sinh^2 r` photons)
//! and the Gaussian signal displacement (`sigma2` photons, i.e. `X_s` and
//! `Y_s` drawn with variance `2 sigma2` in shot-noise units). The standard
//! split puts `sigma2 = sinh r cosh r`, which makes the budget identity
//! `nbar = sigma2 + sinh^2 r` solvable in closed form:
//! `r = ln(2 nbar + 1) / 2` and `sigma2 = (nbar + nbar^2) / (2 nbar + 1)`.
//!
//! With Gaussian signalling over two quadratures the mutual information is
//! `I = (1/2) ln(1 + SNR_x) + (1/2) ln(1 + SNR_y)` nats per use, where each
//! SNR is the ratio of signal power to quantum noise in the corresponding
//! photocurrent. [`capacity`] chains the budget, the optimal-gain spectra
//! and the information formula; the test suite pins the result against
//! independently derived closed forms in the photon number.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::{map_ordered, Execution};
use crate::protocols::{spectrum_at_optimal, ProtocolId, SpectrumReport};

/// How one use's mean photon number is divided between squeezing and
/// signal displacement.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SignalBudget {
    /// Total mean photon number per use at the sender.
    pub nbar: f64,
    /// Mean photon number spent on the signal displacement; the signal
    /// quadratures have variance `2 sigma2`.
    pub sigma2: f64,
    /// Squeezing strength of the shared state.
    pub r: f64,
}

impl SignalBudget {
    /// The standard split `sigma2 = sinh r cosh r`, solved in closed form.
    pub fn from_nbar(nbar: f64) -> Result<Self> {
        if nbar.is_nan() || nbar < 0.0 {
            return Err(Error::NegativePhotonNumber(nbar));
        }
        let q = 2.0 * nbar + 1.0;
        Ok(SignalBudget {
            nbar,
            sigma2: (nbar + nbar * nbar) / q,
            r: 0.5 * q.ln(),
        })
    }

    /// An explicit split: `fraction` of the photons go to the signal, the
    /// rest to squeezing (`sinh^2 r = (1 - fraction) nbar`).
    pub fn with_split(nbar: f64, fraction: f64) -> Result<Self> {
        if nbar.is_nan() || nbar < 0.0 {
            return Err(Error::NegativePhotonNumber(nbar));
        }
        if !(0.0..=1.0).contains(&fraction) {
            return Err(Error::SplitOutOfRange(fraction));
        }
        let squeeze_photons = (1.0 - fraction) * nbar;
        Ok(SignalBudget {
            nbar,
            sigma2: fraction * nbar,
            r: squeeze_photons.sqrt().asinh(),
        })
    }

    /// `sigma2 + sinh^2 r`, which must reproduce `nbar`.
    pub fn photon_total(&self) -> f64 {
        self.sigma2 + self.r.sinh().powi(2)
    }
}

/// Signal-to-noise ratios of the two photocurrents given a spectrum and a
/// signal power: `SNR = gain * 2 sigma2 / noise`.
pub fn snr_from_spectrum(report: &SpectrumReport, sigma2: f64) -> Result<(f64, f64)> {
    if sigma2.is_nan() || sigma2 < 0.0 {
        return Err(Error::NegativePhotonNumber(sigma2));
    }
    if report.noise_plus <= 0.0 {
        return Err(Error::NegativeVariance(report.noise_plus));
    }
    if report.noise_minus <= 0.0 {
        return Err(Error::NegativeVariance(report.noise_minus));
    }
    Ok((
        report.signal_gain_plus * 2.0 * sigma2 / report.noise_plus,
        report.signal_gain_minus * 2.0 * sigma2 / report.noise_minus,
    ))
}

/// Gaussian mutual information over the two quadrature channels, in nats.
pub fn mutual_information(snr_x: f64, snr_y: f64) -> Result<f64> {
    if snr_x.is_nan() || snr_x < 0.0 {
        return Err(Error::NegativeSnr(snr_x));
    }
    if snr_y.is_nan() || snr_y < 0.0 {
        return Err(Error::NegativeSnr(snr_y));
    }
    Ok(0.5 * snr_x.ln_1p() + 0.5 * snr_y.ln_1p())
}

/// Capacity of one configuration at one photon budget.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CapacityPoint {
    pub protocol: ProtocolId,
    pub nbar: f64,
    pub sigma2: f64,
    pub r: f64,
    pub snr_x: f64,
    pub snr_y: f64,
    pub capacity_nats: f64,
}

/// Capacity at the standard budget split and optimal gains: budget ->
/// spectrum -> SNR -> mutual information.
pub fn capacity(id: ProtocolId, nbar: f64) -> Result<CapacityPoint> {
    let budget = SignalBudget::from_nbar(nbar)?;
    capacity_with_budget(id, &budget)
}

/// Capacity at an explicit budget (optimal gains for the budget's `r`).
pub fn capacity_with_budget(id: ProtocolId, budget: &SignalBudget) -> Result<CapacityPoint> {
    let report = spectrum_at_optimal(id, budget.r)?;
    let (snr_x, snr_y) = snr_from_spectrum(&report, budget.sigma2)?;
    Ok(CapacityPoint {
        protocol: id,
        nbar: budget.nbar,
        sigma2: budget.sigma2,
        r: budget.r,
        snr_x,
        snr_y,
        capacity_nats: mutual_information(snr_x, snr_y)?,
    })
}

/// Capacities of all six configurations at one photon budget.
pub fn capacity_table(nbar: f64) -> Result<Vec<CapacityPoint>> {
    ProtocolId::ALL
        .iter()
        .map(|&id| capacity(id, nbar))
        .collect()
}

/// One row of the capacity-versus-photon-number sweep, in nats per use.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CapacityCurvesRow {
    pub nbar: f64,
    pub c_ab: f64,
    pub c_ab_cd: f64,
    pub c_ab_d: f64,
    pub c_ac: f64,
    pub c_ac_bd: f64,
    pub c_ac_d: f64,
}

/// Sweeps all six capacities over a photon-number grid.
pub fn capacity_curves(nbar_grid: &[f64], exec: Execution) -> Result<Vec<CapacityCurvesRow>> {
    let rows = map_ordered(
        nbar_grid.to_vec(),
        |nbar| -> Result<CapacityCurvesRow> {
            Ok(CapacityCurvesRow {
                nbar,
                c_ab: capacity(ProtocolId::Ab, nbar)?.capacity_nats,
                c_ab_cd: capacity(ProtocolId::AbCd, nbar)?.capacity_nats,
                c_ab_d: capacity(ProtocolId::AbD, nbar)?.capacity_nats,
                c_ac: capacity(ProtocolId::Ac, nbar)?.capacity_nats,
                c_ac_bd: capacity(ProtocolId::AcBd, nbar)?.capacity_nats,
                c_ac_d: capacity(ProtocolId::AcD, nbar)?.capacity_nats,
            })
        },
        exec,
    );
    rows.into_iter().collect()
}

/// Converts nats per use to bits per use.
pub fn nats_to_bits(nats: f64) -> f64 {
    nats / std::f64::consts::LN_2
}
