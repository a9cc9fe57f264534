//! End-to-end agreement checks across the three independent computation
//! routes exposed by the public API: closed-form spectra, the symplectic
//! covariance engine, and the scalar Monte Carlo sampler. Each route is
//! implemented separately, so agreement here is strong evidence that none
//! of them drifted.

use approx::assert_abs_diff_eq;
use ttpcnet::capacity::{capacity, capacity_table, SignalBudget};
use ttpcnet::gaussian::{GaussianState, Quad};
use ttpcnet::netsim::compare_mc_analytic;
use ttpcnet::protocols::{
    builtin_spec, closed_form_spectra, engine_spectra, optimal_gains, ProtocolId,
};
use ttpcnet::ttpc::{build_ttpc, correlation_variance, RelationId};
use ttpcnet::Execution;

const ALL: [ProtocolId; 6] = [
    ProtocolId::Ab,
    ProtocolId::Ac,
    ProtocolId::AbCd,
    ProtocolId::AcBd,
    ProtocolId::AbD,
    ProtocolId::AcD,
];

/// The source state must stay physical (uncertainty-respecting) at every
/// squeezing level, and its eight two-mode correlations must agree with the
/// closed form.
#[test]
fn source_state_is_physical_and_correlated_at_all_squeezing_levels() {
    for k in 0..=30 {
        let r = k as f64 * 0.1;
        let state = build_ttpc(r).unwrap();
        assert!(state.state().is_physical(1e-9), "r = {r}");
        let expected = 4.0 * (-2.0 * r).exp();
        for id in RelationId::ALL {
            assert_abs_diff_eq!(correlation_variance(&state, id), expected, epsilon = 1e-10);
        }
    }
}

/// Closed forms and covariance engine agree on every protocol across a grid
/// of squeezing values and gains around the optimum.
#[test]
fn engine_matches_closed_forms_for_every_protocol() {
    for id in ALL {
        let spec = builtin_spec(id);
        for k in 0..=10 {
            let r = k as f64 * 0.25;
            let opt = optimal_gains(id, r).unwrap();
            for scale in [0.0, 0.5, 1.0, 1.3] {
                let gains = ttpcnet::protocols::GainPair::new(opt.x * scale, opt.y * scale);
                let closed = closed_form_spectra(id, r, gains).unwrap();
                let engine = engine_spectra(&spec, r, gains).unwrap();
                for (a, b) in [
                    (closed.noise_plus, engine.noise_plus),
                    (closed.noise_minus, engine.noise_minus),
                    (closed.signal_gain_plus, engine.signal_gain_plus),
                    (closed.signal_gain_minus, engine.signal_gain_minus),
                ] {
                    assert_abs_diff_eq!(a, b, epsilon = 1e-10);
                }
            }
        }
    }
}

/// The Monte Carlo sampler reproduces the analytic spectra for every
/// protocol within its statistical gate, in both execution modes.
#[test]
fn monte_carlo_agrees_with_analytics_for_every_protocol() {
    for id in ALL {
        let spec = builtin_spec(id);
        let cmp = compare_mc_analytic(&spec, 0.6, 1.5, 200_000, 71).unwrap();
        assert!(
            cmp.pass,
            "{id}: Monte Carlo drifted from the closed form: {cmp:?}"
        );
        assert!(!cmp.low_power);
    }
}

/// Capacities recomputed from first principles (budget split, SNR from the
/// spectra, Gaussian-channel information) match the capacity module.
#[test]
fn capacity_chain_is_consistent_with_spectra() {
    for id in ALL {
        for nbar in [0.5, 1.0, 2.0, 5.0] {
            let point = capacity(id, nbar).unwrap();
            let budget = SignalBudget::from_nbar(nbar).unwrap();
            let report =
                closed_form_spectra(id, budget.r, optimal_gains(id, budget.r).unwrap()).unwrap();
            let snr_x = report.signal_gain_plus * 2.0 * budget.sigma2 / report.noise_plus;
            let snr_y = report.signal_gain_minus * 2.0 * budget.sigma2 / report.noise_minus;
            let info = 0.5 * (1.0 + snr_x).ln() + 0.5 * (1.0 + snr_y).ln();
            assert_abs_diff_eq!(point.capacity_nats, info, epsilon = 1e-12);
        }
    }
}

/// A capacity table row exists for each protocol and parallel sweeps match
/// sequential ones exactly.
#[test]
fn sweeps_are_identical_across_execution_modes() {
    let grid: Vec<f64> = (0..=20).map(|k| k as f64 * 0.25).collect();
    let seq = ttpcnet::protocols::noise_curves(&grid, Execution::Sequential).unwrap();
    let par = ttpcnet::protocols::noise_curves(&grid, Execution::Parallel).unwrap();
    for (a, b) in seq.iter().zip(&par) {
        assert_eq!(a.squeezing_db.to_bits(), b.squeezing_db.to_bits());
        assert_eq!(a.ab_unassisted.to_bits(), b.ab_unassisted.to_bits());
        assert_eq!(
            a.ac_two_controllers_opt.to_bits(),
            b.ac_two_controllers_opt.to_bits()
        );
    }

    let nbars: Vec<f64> = (1..=12).map(|k| k as f64 * 0.5).collect();
    let seq = ttpcnet::capacity::capacity_curves(&nbars, Execution::Sequential).unwrap();
    let par = ttpcnet::capacity::capacity_curves(&nbars, Execution::Parallel).unwrap();
    for (a, b) in seq.iter().zip(&par) {
        assert_eq!(a.c_ab_cd.to_bits(), b.c_ab_cd.to_bits());
        assert_eq!(a.c_ac_d.to_bits(), b.c_ac_d.to_bits());
    }

    let table = capacity_table(3.0).unwrap();
    assert_eq!(table.len(), 6);
}

/// Modulating a vacuum mode directly (no entanglement, no network) gives the
/// textbook single-channel information, tying the budget and information
/// helpers to an independently obvious case.
#[test]
fn vacuum_channel_sanity() {
    let vacuum = GaussianState::vacuum(1).unwrap();
    assert_abs_diff_eq!(vacuum.variance(0, Quad::X).unwrap(), 1.0, epsilon = 1e-15);
    // SNR per quadrature = 2 sigma^2 / 1; with the full budget in modulation
    // (r = 0 means sigma2 = nbar under the budget identity only at nbar = 0,
    // so build the comparison directly from sigma2 instead).
    let sigma2 = 0.75;
    let snr = 2.0 * sigma2;
    let info = ttpcnet::capacity::mutual_information(snr, snr).unwrap();
    assert_abs_diff_eq!(info, (1.0 + snr).ln(), epsilon = 1e-15);
}
