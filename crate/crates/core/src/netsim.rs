//! Monte Carlo four-station network harness.
//!
//! This module is the statistical cross-check on the analytic spectra. It
//! never touches the covariance engine: each sample draws the eight seed
//! quadratures and the two signal values as explicit Gaussians, pushes them
//! through hand-written scalar versions of the squeezer/beamsplitter maps,
//! simulates the homodyne outcomes and classical feedforward messages
//! between the stations, and estimates noise and SNR from the sample
//! variances. Agreement with the closed forms is therefore evidence for
//! both routes.
//!
//! Reproducibility contract: a run is driven by one `u64` seed. Samples are
//! processed in fixed batches of [`BATCH_SIZE`]; batch `k` draws from
//! ChaCha8 stream `k` of the seeded generator, and within a sample the draw
//! order is fixed (eight seed quadratures, then the two signal values, all
//! standard normal). Batch accumulators are merged in batch order, so
//! sequential and parallel execution produce bitwise-identical estimates,
//! and the same seed always reproduces the same [`McEstimate`].

use std::io::Write as IoWrite;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::{map_ordered, Execution};
use crate::gaussian::Quad;
use crate::protocols::{
    optimal_gains, spectrum_at_optimal, GainPair, GainSlot, OpticalStep, Photocurrent,
    ProtocolSpec, SpectrumReport, StationName,
};

/// Samples per RNG stream / accumulator batch.
pub const BATCH_SIZE: u64 = 8192;

/// Flagging threshold for the statistical comparison, in standard errors.
pub const GATE_SIGMAS: f64 = 5.0;

// ---------------------------------------------------------------------------
// Stations and messages
// ---------------------------------------------------------------------------

/// What a station does during a run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StationRole {
    Sender,
    Receiver,
    Controller,
    Idle,
}

/// One of the four stations with its held mode and role for a given
/// configuration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Station {
    pub name: StationName,
    pub held_mode: usize,
    pub role: StationRole,
}

/// The four stations in mode order with roles assigned by the spec.
pub fn station_layout(spec: &ProtocolSpec) -> [Station; 4] {
    let role = |name: StationName| {
        if name == spec.sender {
            StationRole::Sender
        } else if name == spec.receiver {
            StationRole::Receiver
        } else if spec.controllers.contains(&name) {
            StationRole::Controller
        } else {
            StationRole::Idle
        }
    };
    StationName::ALL.map(|name| Station {
        name,
        held_mode: name.home_mode(),
        role: role(name),
    })
}

/// Kind of a classical message between stations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum MessageKind {
    #[serde(rename = "measured-quadrature")]
    MeasuredQuadrature,
    #[serde(rename = "gain-instruction")]
    GainInstruction,
}

/// A classical message routed during a traced run. Measured-quadrature
/// messages carry a controller's homodyne outcome for one sample;
/// gain-instruction messages are the receiver's one-time setup broadcast.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassicalMessage {
    pub from: StationName,
    pub to: StationName,
    pub kind: MessageKind,
    pub value: f64,
    pub sample_index: u64,
}

/// NDJSON record written by the optional message trace.
#[derive(Serialize)]
struct TraceRecord {
    sample: u64,
    from: StationName,
    to: StationName,
    kind: MessageKind,
    value: f64,
}

// ---------------------------------------------------------------------------
// Estimates
// ---------------------------------------------------------------------------

/// How the random stream was produced, recorded alongside every estimate.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RngInfo {
    pub family: String,
    pub seed: u64,
    pub stream_scheme: String,
}

impl RngInfo {
    fn new(seed: u64) -> Self {
        RngInfo {
            family: "ChaCha8".to_string(),
            seed,
            stream_scheme: format!(
                "stream k serves samples [k*{BATCH_SIZE}, (k+1)*{BATCH_SIZE}); per sample: \
                 eight seed quadratures then X_s, Y_s, all standard normal"
            ),
        }
    }
}

/// Empirical noise and SNR estimates from one Monte Carlo run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub protocol: crate::protocols::ProtocolId,
    pub r: f64,
    pub sigma2: f64,
    pub gains: GainPair,
    pub n_samples: u64,
    /// Sample variance of the signal-free photocurrents.
    pub noise_plus_hat: f64,
    pub noise_minus_hat: f64,
    /// Sample variance of the signal contribution alone.
    pub signal_plus_hat: f64,
    pub signal_minus_hat: f64,
    pub snr_x_hat: f64,
    pub snr_y_hat: f64,
    /// Standard errors of the variance estimates, `v * sqrt(2/(n-1))`.
    pub noise_plus_stderr: f64,
    pub noise_minus_stderr: f64,
    pub rng: RngInfo,
}

/// Result of checking an estimate against the closed-form spectrum.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McComparison {
    pub estimate: McEstimate,
    /// The closed-form reference at the configuration's optimal gains; a
    /// gain override in the simulation is judged against this.
    pub analytic: SpectrumReport,
    pub noise_plus_sigmas: f64,
    pub noise_minus_sigmas: f64,
    /// Deviations of the signal-power estimates, present when sigma2 > 0.
    pub signal_plus_sigmas: Option<f64>,
    pub signal_minus_sigmas: Option<f64>,
    pub threshold_sigmas: f64,
    /// True when n is so small that the relative standard error exceeds
    /// 10 percent, making a pass vacuous.
    pub low_power: bool,
    pub pass: bool,
}

// ---------------------------------------------------------------------------
// Scalar propagation (independent of the covariance engine)
// ---------------------------------------------------------------------------

/// Seed quadratures -> register quadratures, written out longhand: two
/// deamplified pair squeezers on (1,2) and (3,4), then the balanced
/// recombination that forms the cross modes.
fn source_register(seeds: &[f64; 8], ch: f64, sh: f64) -> [f64; 8] {
    let k = std::f64::consts::FRAC_1_SQRT_2;
    let [x01, y01, x02, y02, x03, y03, x04, y04] = *seeds;
    let xa1 = ch * x01 - sh * x02;
    let ya1 = ch * y01 + sh * y02;
    let xa2 = ch * x02 - sh * x01;
    let ya2 = ch * y02 + sh * y01;
    let xa3 = ch * x03 - sh * x04;
    let ya3 = ch * y03 + sh * y04;
    let xa4 = ch * x04 - sh * x03;
    let ya4 = ch * y04 + sh * y03;
    [
        xa1,
        ya1,
        k * (xa2 - ya3),
        k * (ya2 + xa3),
        xa4,
        ya4,
        k * (xa2 + ya3),
        k * (ya2 - xa3),
    ]
}

/// In-place scalar beamsplitter on a quadrature sample.
fn beamsplit_scalar(q: &mut [f64; 8], step: &OpticalStep) {
    let ct = step.transmittance.sqrt();
    let st = (1.0 - step.transmittance).sqrt();
    let (sp, cp) = step.phase.sin_cos();
    let (ia, ib) = (2 * step.mode_a, 2 * step.mode_b);
    let (xi, yi, xj, yj) = (q[ia], q[ia + 1], q[ib], q[ib + 1]);
    q[ia] = ct * xi + st * (cp * xj - sp * yj);
    q[ia + 1] = ct * yi + st * (sp * xj + cp * yj);
    q[ib] = -st * (cp * xi + sp * yi) + ct * xj;
    q[ib + 1] = -st * (-sp * xi + cp * yi) + ct * yj;
}

fn gain_for(slot: GainSlot, gains: GainPair) -> f64 {
    match slot {
        GainSlot::X => gains.x,
        GainSlot::Y => gains.y,
    }
}

/// Photocurrent value read directly off a propagated sample.
fn read_current(q: &[f64; 8], pc: &Photocurrent, gains: GainPair) -> f64 {
    let mut v = pc.port.sign * q[pc.port.quad.index(pc.port.mode)];
    for ff in &pc.feedforward {
        v += gain_for(ff.gain, gains) * ff.tap.sign * q[ff.tap.quad.index(ff.tap.mode)];
    }
    v
}

fn validate_run(spec: &ProtocolSpec, r: f64, sigma2: f64, n_samples: u64) -> Result<()> {
    spec.validate()?;
    if r.is_nan() || r < 0.0 {
        return Err(Error::NegativeSqueezing(r));
    }
    if sigma2.is_nan() || sigma2 < 0.0 {
        return Err(Error::NegativePhotonNumber(sigma2));
    }
    if n_samples < 2 {
        return Err(Error::TooFewSamples(n_samples));
    }
    for step in &spec.optical_steps {
        if !(0.0..=1.0).contains(&step.transmittance) {
            return Err(Error::TransmittanceOutOfRange(step.transmittance));
        }
        if !step.phase.is_finite() {
            return Err(Error::NonFiniteCoefficient(step.phase));
        }
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Streaming variance accumulation
// ---------------------------------------------------------------------------

/// Welford accumulator; batches merge pairwise in fixed order so the result
/// does not depend on the execution mode.
#[derive(Debug, Clone, Copy)]
struct Accum {
    n: u64,
    mean: f64,
    m2: f64,
}

impl Accum {
    fn new() -> Self {
        Accum {
            n: 0,
            mean: 0.0,
            m2: 0.0,
        }
    }

    fn push(&mut self, x: f64) {
        self.n += 1;
        let delta = x - self.mean;
        self.mean += delta / self.n as f64;
        self.m2 += delta * (x - self.mean);
    }

    fn merge(self, other: Accum) -> Accum {
        if self.n == 0 {
            return other;
        }
        if other.n == 0 {
            return self;
        }
        let n = self.n + other.n;
        let delta = other.mean - self.mean;
        let nf = n as f64;
        Accum {
            n,
            mean: self.mean + delta * (other.n as f64 / nf),
            m2: self.m2 + other.m2 + delta * delta * (self.n as f64 * other.n as f64 / nf),
        }
    }

    fn variance(&self) -> f64 {
        if self.n < 2 {
            0.0
        } else {
            self.m2 / (self.n - 1) as f64
        }
    }
}

/// Per-batch output: noise-plus, noise-minus, signal-plus, signal-minus.
type BatchAccums = [Accum; 4];

/// Immutable configuration of one Monte Carlo run, shared by every batch.
struct RunParams<'a> {
    spec: &'a ProtocolSpec,
    r: f64,
    sigma2: f64,
    gains: GainPair,
    seed: u64,
    n_samples: u64,
}

/// Draws and propagates the samples of one batch, accumulating variances.
/// `on_sample` sees each propagated sample (for tracing) and is a no-op in
/// the fast path.
fn run_batch(
    params: &RunParams<'_>,
    batch: u64,
    mut on_sample: impl FnMut(u64, &[f64; 8]),
) -> BatchAccums {
    let (spec, gains) = (params.spec, params.gains);
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    rng.set_stream(batch);
    let (ch, sh) = (params.r.cosh(), params.r.sinh());
    let amp = (2.0 * params.sigma2).sqrt();
    let start = batch * BATCH_SIZE;
    let end = params.n_samples.min(start + BATCH_SIZE);
    let mut accums = [Accum::new(); 4];
    let normal = StandardNormal;
    for sample in start..end {
        let mut seeds = [0.0f64; 8];
        for v in &mut seeds {
            *v = normal.sample(&mut rng);
        }
        let xs: f64 = amp * Distribution::<f64>::sample(&normal, &mut rng);
        let ys: f64 = amp * Distribution::<f64>::sample(&normal, &mut rng);

        let mut q_noise = source_register(&seeds, ch, sh);
        let mut q_total = q_noise;
        q_total[Quad::X.index(spec.signal_mode)] += xs;
        q_total[Quad::Y.index(spec.signal_mode)] += ys;
        for step in &spec.optical_steps {
            beamsplit_scalar(&mut q_noise, step);
            beamsplit_scalar(&mut q_total, step);
        }

        let i_plus_noise = read_current(&q_noise, &spec.measured_forms.plus, gains);
        let i_minus_noise = read_current(&q_noise, &spec.measured_forms.minus, gains);
        let i_plus_total = read_current(&q_total, &spec.measured_forms.plus, gains);
        let i_minus_total = read_current(&q_total, &spec.measured_forms.minus, gains);

        accums[0].push(i_plus_noise);
        accums[1].push(i_minus_noise);
        accums[2].push(i_plus_total - i_plus_noise);
        accums[3].push(i_minus_total - i_minus_noise);

        on_sample(sample, &q_total);
    }
    accums
}

fn estimate_from(
    spec: &ProtocolSpec,
    r: f64,
    sigma2: f64,
    gains: GainPair,
    seed: u64,
    merged: BatchAccums,
) -> McEstimate {
    let n = merged[0].n;
    let stderr_factor = (2.0 / (n - 1) as f64).sqrt();
    let noise_plus_hat = merged[0].variance();
    let noise_minus_hat = merged[1].variance();
    let signal_plus_hat = merged[2].variance();
    let signal_minus_hat = merged[3].variance();
    McEstimate {
        protocol: spec.id,
        r,
        sigma2,
        gains,
        n_samples: n,
        noise_plus_hat,
        noise_minus_hat,
        signal_plus_hat,
        signal_minus_hat,
        snr_x_hat: signal_plus_hat / noise_plus_hat,
        snr_y_hat: signal_minus_hat / noise_minus_hat,
        noise_plus_stderr: noise_plus_hat * stderr_factor,
        noise_minus_stderr: noise_minus_hat * stderr_factor,
        rng: RngInfo::new(seed),
    }
}

fn merge_batches(batches: Vec<BatchAccums>) -> BatchAccums {
    batches.into_iter().fold([Accum::new(); 4], |acc, batch| {
        [
            acc[0].merge(batch[0]),
            acc[1].merge(batch[1]),
            acc[2].merge(batch[2]),
            acc[3].merge(batch[3]),
        ]
    })
}

// ---------------------------------------------------------------------------
// Runs
// ---------------------------------------------------------------------------

/// Monte Carlo run at the configuration's optimal gains, default execution
/// mode.
pub fn sample_run(
    spec: &ProtocolSpec,
    r: f64,
    sigma2: f64,
    n_samples: u64,
    seed: u64,
) -> Result<McEstimate> {
    let gains = optimal_gains(spec.id, r)?;
    sample_run_with(
        spec,
        r,
        sigma2,
        gains,
        n_samples,
        seed,
        Execution::default(),
    )
}

/// Monte Carlo run with explicit gains and execution mode. Parallel and
/// sequential execution give bitwise-identical estimates.
pub fn sample_run_with(
    spec: &ProtocolSpec,
    r: f64,
    sigma2: f64,
    gains: GainPair,
    n_samples: u64,
    seed: u64,
    exec: Execution,
) -> Result<McEstimate> {
    validate_run(spec, r, sigma2, n_samples)?;
    let params = RunParams {
        spec,
        r,
        sigma2,
        gains,
        seed,
        n_samples,
    };
    let n_batches = n_samples.div_ceil(BATCH_SIZE);
    let batches = map_ordered(
        (0..n_batches).collect(),
        |batch| run_batch(&params, batch, |_, _| {}),
        exec,
    );
    Ok(estimate_from(
        spec,
        r,
        sigma2,
        gains,
        seed,
        merge_batches(batches),
    ))
}

/// Sequential run that routes every feedforward as an explicit
/// [`ClassicalMessage`], asserts each message is consumed exactly once by
/// the receiver for its own sample, and returns the full ledger. When
/// `sink` is given, each message is also written as one NDJSON line
/// `{"sample":..,"from":..,"to":..,"kind":..,"value":..}`.
///
/// The estimate is bitwise identical to [`sample_run_with`] at the same
/// arguments.
pub fn sample_run_traced<W: IoWrite>(
    spec: &ProtocolSpec,
    r: f64,
    sigma2: f64,
    gains: GainPair,
    n_samples: u64,
    seed: u64,
    mut sink: Option<&mut W>,
) -> Result<(McEstimate, Vec<ClassicalMessage>)> {
    validate_run(spec, r, sigma2, n_samples)?;
    let mut ledger: Vec<ClassicalMessage> = Vec::new();
    let mut emit = |msg: ClassicalMessage, sink: &mut Option<&mut W>| -> Result<()> {
        if let Some(w) = sink.as_deref_mut() {
            let record = TraceRecord {
                sample: msg.sample_index,
                from: msg.from,
                to: msg.to,
                kind: msg.kind,
                value: msg.value,
            };
            let line =
                serde_json::to_string(&record).map_err(|e| Error::TraceWrite(e.to_string()))?;
            writeln!(w, "{line}").map_err(|e| Error::TraceWrite(e.to_string()))?;
        }
        ledger.push(msg);
        Ok(())
    };

    // Setup broadcast: the receiver announces the gain applied to each
    // controller's channel.
    for pc in [&spec.measured_forms.plus, &spec.measured_forms.minus] {
        for ff in &pc.feedforward {
            emit(
                ClassicalMessage {
                    from: spec.receiver,
                    to: ff.from,
                    kind: MessageKind::GainInstruction,
                    value: gain_for(ff.gain, gains),
                    sample_index: 0,
                },
                &mut sink,
            )?;
        }
    }

    let params = RunParams {
        spec,
        r,
        sigma2,
        gains,
        seed,
        n_samples,
    };
    let n_batches = n_samples.div_ceil(BATCH_SIZE);
    let mut batches = Vec::with_capacity(n_batches as usize);
    let mut route_err: Option<Error> = None;
    for batch in 0..n_batches {
        let accums = run_batch(&params, batch, |sample, q_total| {
            if route_err.is_some() {
                return;
            }
            // Controllers measure and send; the receiver consumes each
            // message exactly once for this sample.
            let mut queue: Vec<(StationName, f64, bool)> = Vec::new();
            for pc in [&spec.measured_forms.plus, &spec.measured_forms.minus] {
                for ff in &pc.feedforward {
                    let value = q_total[ff.tap.quad.index(ff.tap.mode)];
                    let msg = ClassicalMessage {
                        from: ff.from,
                        to: spec.receiver,
                        kind: MessageKind::MeasuredQuadrature,
                        value,
                        sample_index: sample,
                    };
                    if let Err(e) = emit(msg, &mut sink) {
                        route_err = Some(e);
                        return;
                    }
                    queue.push((ff.from, value, false));
                }
            }
            // Consumption pass mirrors the photocurrent assembly.
            for pc in [&spec.measured_forms.plus, &spec.measured_forms.minus] {
                for ff in &pc.feedforward {
                    let slot = queue
                        .iter_mut()
                        .find(|(from, _, used)| *from == ff.from && !*used)
                        .expect("controller message present for this sample");
                    slot.2 = true;
                }
            }
            assert!(
                queue.iter().all(|(_, _, used)| *used),
                "every routed message must be consumed exactly once"
            );
        });
        if let Some(e) = route_err {
            return Err(e);
        }
        batches.push(accums);
    }
    let estimate = estimate_from(spec, r, sigma2, gains, seed, merge_batches(batches));
    Ok((estimate, ledger))
}

// ---------------------------------------------------------------------------
// Analytic comparison
// ---------------------------------------------------------------------------

/// Runs the simulation at optimal gains and gates it against the
/// closed-form spectrum at [`GATE_SIGMAS`] standard errors.
pub fn compare_mc_analytic(
    spec: &ProtocolSpec,
    r: f64,
    sigma2: f64,
    n_samples: u64,
    seed: u64,
) -> Result<McComparison> {
    let gains = optimal_gains(spec.id, r)?;
    compare_mc_analytic_with_gains(
        spec,
        r,
        sigma2,
        gains,
        n_samples,
        seed,
        Execution::default(),
    )
}

/// Comparison with a gain override: the simulation honours `gains`, but the
/// reference stays the configuration's official optimal-gain spectrum, so a
/// corrupted override is reported as a failure.
pub fn compare_mc_analytic_with_gains(
    spec: &ProtocolSpec,
    r: f64,
    sigma2: f64,
    gains: GainPair,
    n_samples: u64,
    seed: u64,
    exec: Execution,
) -> Result<McComparison> {
    let estimate = sample_run_with(spec, r, sigma2, gains, n_samples, seed, exec)?;
    let analytic = spectrum_at_optimal(spec.id, r)?;
    let stderr_factor = (2.0 / (n_samples - 1) as f64).sqrt();
    let sigmas = |hat: f64, want: f64| (hat - want).abs() / (want * stderr_factor);
    let noise_plus_sigmas = sigmas(estimate.noise_plus_hat, analytic.noise_plus);
    let noise_minus_sigmas = sigmas(estimate.noise_minus_hat, analytic.noise_minus);
    let (signal_plus_sigmas, signal_minus_sigmas) = if sigma2 > 0.0 {
        (
            Some(sigmas(
                estimate.signal_plus_hat,
                analytic.signal_gain_plus * 2.0 * sigma2,
            )),
            Some(sigmas(
                estimate.signal_minus_hat,
                analytic.signal_gain_minus * 2.0 * sigma2,
            )),
        )
    } else {
        (None, None)
    };
    let mut worst = noise_plus_sigmas.max(noise_minus_sigmas);
    for s in [signal_plus_sigmas, signal_minus_sigmas]
        .into_iter()
        .flatten()
    {
        worst = worst.max(s);
    }
    Ok(McComparison {
        analytic,
        noise_plus_sigmas,
        noise_minus_sigmas,
        signal_plus_sigmas,
        signal_minus_sigmas,
        threshold_sigmas: GATE_SIGMAS,
        low_power: stderr_factor > 0.1,
        pass: worst <= GATE_SIGMAS,
        estimate,
    })
}
