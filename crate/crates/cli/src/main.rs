//! Command-line front end: figure-data sweeps and verification suites for
//! the four-mode dense-coding simulator.
//!
//! Subcommands: `verify-correlations`, `spectra`, `gains`, `fig4`, `fig5`,
//! `capacity`, `montecarlo`. Exit codes: 0 success/pass, 1 verification or
//! statistical failure, 2 usage error.
//!
//! All outputs are deterministic given the flags (and the seed for Monte
//! Carlo runs). CSV files start with a timestamp comment line that can be
//! suppressed with `--no-header`, making repeated invocations byte
//! identical; JSON output never includes the timestamp.

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};

use ttpcnet::capacity::{capacity, capacity_curves, nats_to_bits, CapacityPoint};
use ttpcnet::netsim::{compare_mc_analytic_with_gains, McComparison};
use ttpcnet::protocols::{
    ab_snl_crossing_s, builtin_spec, closed_form_spectra, engine_spectra, noise_curves,
    optimal_gains, GainPair, ProtocolId,
};
use ttpcnet::ttpc::{build_ttpc, correlation_variance, RelationId};
use ttpcnet::Execution;

/// Engine-versus-closed-form gate used by the verification commands.
const VERIFY_TOL: f64 = 1e-10;

#[derive(Parser)]
#[command(
    name = "ttpcnet",
    about = "Dense-coding network simulator on a four-mode entangled source",
    version
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Check the eight three-mode correlation variances against 4*exp(-2r).
    VerifyCorrelations {
        /// Squeezing grid: comma list ("0,1,2") or start:stop:step.
        #[arg(long, default_value = "0:3:0.25")]
        grid: String,
        #[command(flatten)]
        out: OutputOpts,
    },
    /// Noise spectra of the configurations, cross-checked engine vs closed form.
    Spectra {
        /// Configuration (ab, ac, ab_cd, ac_bd, ab_d, ac_d); all six when omitted.
        #[arg(long)]
        protocol: Option<String>,
        /// Single squeezing strength (ignored when --grid is given).
        #[arg(long, default_value_t = 1.0)]
        r: f64,
        /// Squeezing grid overriding --r.
        #[arg(long)]
        grid: Option<String>,
        /// Uniform feedforward gain override (optimal gains when omitted).
        #[arg(long)]
        gain: Option<f64>,
        #[command(flatten)]
        out: OutputOpts,
    },
    /// Optimal feedforward gains over a squeezing grid.
    Gains {
        #[arg(long)]
        protocol: Option<String>,
        #[arg(long, default_value = "0:2.5:0.05")]
        grid: String,
        #[command(flatten)]
        out: OutputOpts,
    },
    /// Noise-versus-squeezing sweep of all configurations (shot-noise units).
    Fig4 {
        #[arg(long, default_value = "0:2.5:0.05")]
        grid: String,
        #[command(flatten)]
        out: OutputOpts,
    },
    /// Capacity-versus-photon-number sweep of all configurations.
    Fig5 {
        #[arg(long, default_value = "0:20:0.1")]
        grid: String,
        /// Report bits per use instead of nats.
        #[arg(long)]
        bits: bool,
        #[command(flatten)]
        out: OutputOpts,
    },
    /// Capacity table at one photon budget (or a grid).
    Capacity {
        #[arg(long, default_value_t = 1.0)]
        nbar: f64,
        /// Photon-number grid overriding --nbar.
        #[arg(long)]
        grid: Option<String>,
        #[arg(long)]
        protocol: Option<String>,
        #[arg(long)]
        bits: bool,
        #[command(flatten)]
        out: OutputOpts,
    },
    /// Monte Carlo run gated against the closed-form spectrum.
    Montecarlo {
        #[arg(long)]
        protocol: String,
        #[arg(long)]
        r: f64,
        #[arg(long, default_value_t = 0.0)]
        sigma2: f64,
        #[arg(long, default_value_t = 1_000_000)]
        samples: u64,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        /// Uniform gain override; the analytic reference stays at the
        /// optimal gains, so a corrupted override fails the gate.
        #[arg(long)]
        gain: Option<f64>,
        /// Force single-threaded sampling (estimates are bitwise identical
        /// either way).
        #[arg(long)]
        sequential: bool,
        #[command(flatten)]
        out: OutputOpts,
    },
}

#[derive(Args)]
struct OutputOpts {
    #[arg(long, value_enum, default_value = "csv")]
    format: Format,
    /// Write to this file instead of stdout.
    #[arg(long)]
    output: Option<PathBuf>,
    /// Suppress the timestamp header line (CSV only).
    #[arg(long)]
    no_header: bool,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

/// A command's outcome: the file content plus the verification verdict.
struct Rendered {
    content: String,
    failed: bool,
}

#[derive(Debug)]
enum CliError {
    Usage(String),
    Run(String),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.cmd) {
        Ok(Rendered { content, failed }) => {
            print!("{content}");
            let _ = std::io::stdout().flush();
            if failed {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            }
        }
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(CliError::Run(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}

fn run(cmd: Cmd) -> Result<Rendered, CliError> {
    match cmd {
        Cmd::VerifyCorrelations { grid, out } => cmd_verify_correlations(&grid, &out),
        Cmd::Spectra {
            protocol,
            r,
            grid,
            gain,
            out,
        } => cmd_spectra(protocol.as_deref(), r, grid.as_deref(), gain, &out),
        Cmd::Gains {
            protocol,
            grid,
            out,
        } => cmd_gains(protocol.as_deref(), &grid, &out),
        Cmd::Fig4 { grid, out } => cmd_fig4(&grid, &out),
        Cmd::Fig5 { grid, bits, out } => cmd_fig5(&grid, bits, &out),
        Cmd::Capacity {
            nbar,
            grid,
            protocol,
            bits,
            out,
        } => cmd_capacity(nbar, grid.as_deref(), protocol.as_deref(), bits, &out),
        Cmd::Montecarlo {
            protocol,
            r,
            sigma2,
            samples,
            seed,
            gain,
            sequential,
            out,
        } => cmd_montecarlo(&protocol, r, sigma2, samples, seed, gain, sequential, &out),
    }
}

// ---------------------------------------------------------------------------
// Commands
// ---------------------------------------------------------------------------

fn cmd_verify_correlations(grid: &str, out: &OutputOpts) -> Result<Rendered, CliError> {
    let rs = parse_grid(grid)?;
    let mut rows: Vec<(f64, RelationId, f64, f64)> = Vec::new();
    let mut failed = false;
    for &r in &rs {
        let state = build_ttpc(r).map_err(run_err)?;
        let expected = 4.0 * (-2.0 * r).exp();
        for id in RelationId::ALL {
            let variance = correlation_variance(&state, id);
            if (variance - expected).abs() > VERIFY_TOL {
                failed = true;
            }
            rows.push((r, id, variance, expected));
        }
    }
    let content = match out.format {
        Format::Csv => {
            let mut lines = header_lines(out);
            lines.push("r,relation,variance_snu,expected=4*exp(-2r),abs_error".to_string());
            for (r, id, variance, expected) in &rows {
                lines.push(format!(
                    "{},{},{},{},{}",
                    fmt_sig(*r),
                    id,
                    fmt_sig(*variance),
                    fmt_sig(*expected),
                    fmt_sig((variance - expected).abs())
                ));
            }
            finish_csv(lines)
        }
        Format::Json => {
            let objects: Vec<serde_json::Value> = rows
                .iter()
                .map(|(r, id, variance, expected)| {
                    serde_json::json!({
                        "r": r,
                        "relation": id.to_string(),
                        "variance_snu": variance,
                        "expected_snu": expected,
                        "abs_error": (variance - expected).abs(),
                    })
                })
                .collect();
            to_json(&objects)?
        }
    };
    emit(out, content, failed)
}

fn cmd_spectra(
    protocol: Option<&str>,
    r: f64,
    grid: Option<&str>,
    gain: Option<f64>,
    out: &OutputOpts,
) -> Result<Rendered, CliError> {
    let protocols = parse_protocols(protocol)?;
    let rs = match grid {
        Some(g) => parse_grid(g)?,
        None => vec![require_non_negative("--r", r)?],
    };
    let mut failed = false;
    let mut reports = Vec::new();
    let mut deviations = Vec::new();
    for id in &protocols {
        let spec = builtin_spec(*id);
        for &r in &rs {
            let gains = match gain {
                Some(g) => GainPair::uniform(require_finite("--gain", g)?),
                None => optimal_gains(*id, r).map_err(run_err)?,
            };
            let closed = closed_form_spectra(*id, r, gains).map_err(run_err)?;
            let engine = engine_spectra(&spec, r, gains).map_err(run_err)?;
            let dev = (engine.noise_plus - closed.noise_plus)
                .abs()
                .max((engine.noise_minus - closed.noise_minus).abs())
                .max((engine.signal_gain_plus - closed.signal_gain_plus).abs())
                .max((engine.signal_gain_minus - closed.signal_gain_minus).abs());
            if dev > VERIFY_TOL {
                failed = true;
            }
            reports.push(closed);
            deviations.push(dev);
        }
    }
    let content = match out.format {
        Format::Csv => {
            let mut lines = header_lines(out);
            lines.push(
                "protocol,r,gain_x,gain_y,noise_plus_snu,noise_minus_snu,signal_gain_plus,\
                 signal_gain_minus,engine_abs_dev"
                    .to_string(),
            );
            for (rep, dev) in reports.iter().zip(&deviations) {
                lines.push(format!(
                    "{},{},{},{},{},{},{},{},{}",
                    rep.protocol,
                    fmt_sig(rep.r),
                    fmt_sig(rep.gains.x),
                    fmt_sig(rep.gains.y),
                    fmt_sig(rep.noise_plus),
                    fmt_sig(rep.noise_minus),
                    fmt_sig(rep.signal_gain_plus),
                    fmt_sig(rep.signal_gain_minus),
                    fmt_sig(*dev)
                ));
            }
            finish_csv(lines)
        }
        Format::Json => {
            let objects: Vec<serde_json::Value> = reports
                .iter()
                .zip(&deviations)
                .map(|(rep, dev)| {
                    let mut v = serde_json::to_value(rep).unwrap_or_default();
                    v["engine_abs_dev"] = serde_json::json!(dev);
                    v
                })
                .collect();
            to_json(&objects)?
        }
    };
    emit(out, content, failed)
}

fn cmd_gains(protocol: Option<&str>, grid: &str, out: &OutputOpts) -> Result<Rendered, CliError> {
    let protocols = parse_protocols(protocol)?;
    let rs = parse_grid(grid)?;
    let mut rows = Vec::new();
    for id in &protocols {
        for &r in &rs {
            let g = optimal_gains(*id, r).map_err(run_err)?;
            rows.push((*id, r, g));
        }
    }
    let content = match out.format {
        Format::Csv => {
            let mut lines = header_lines(out);
            lines.push("protocol,r,gain_x,gain_y".to_string());
            for (id, r, g) in &rows {
                lines.push(format!(
                    "{},{},{},{}",
                    id,
                    fmt_sig(*r),
                    fmt_sig(g.x),
                    fmt_sig(g.y)
                ));
            }
            finish_csv(lines)
        }
        Format::Json => {
            let objects: Vec<serde_json::Value> = rows
                .iter()
                .map(|(id, r, g)| {
                    serde_json::json!({
                        "protocol": id.to_string(),
                        "r": r,
                        "gain_x": g.x,
                        "gain_y": g.y,
                    })
                })
                .collect();
            to_json(&objects)?
        }
    };
    emit(out, content, false)
}

fn cmd_fig4(grid: &str, out: &OutputOpts) -> Result<Rendered, CliError> {
    let rs = parse_grid(grid)?;
    let rows = noise_curves(&rs, execution(false)).map_err(run_err)?;
    let content = match out.format {
        Format::Csv => {
            let mut lines = header_lines(out);
            lines.push(
                "squeezing_dB,snl_snu,ab_unassisted_snu,ab_two_controllers_opt_snu,\
                 ab_one_controller_snu,ac_unassisted_snu,ac_two_controllers_opt_snu,\
                 ac_one_controller_snu"
                    .to_string(),
            );
            for row in &rows {
                lines.push(format!(
                    "{},{},{},{},{},{},{},{}",
                    fmt_sig(row.squeezing_db),
                    fmt_sig(row.snl),
                    fmt_sig(row.ab_unassisted),
                    fmt_sig(row.ab_two_controllers_opt),
                    fmt_sig(row.ab_one_controller),
                    fmt_sig(row.ac_unassisted),
                    fmt_sig(row.ac_two_controllers_opt),
                    fmt_sig(row.ac_one_controller)
                ));
            }
            let s_root = ab_snl_crossing_s();
            lines.push(format!(
                "# note: ab_unassisted crosses shot noise upward at s = 3-2*sqrt(2) = {} \
                 ({} dB); the often-quoted rounding s = 0.16 (7.96 dB) overstates the \
                 crossing by about 0.3 dB",
                fmt_sig(s_root),
                fmt_sig(-10.0 * s_root.log10())
            ));
            finish_csv(lines)
        }
        Format::Json => to_json(&rows)?,
    };
    emit(out, content, false)
}

fn cmd_fig5(grid: &str, bits: bool, out: &OutputOpts) -> Result<Rendered, CliError> {
    let nbars = parse_grid(grid)?;
    let rows = capacity_curves(&nbars, execution(false)).map_err(run_err)?;
    let unit = if bits { "bits" } else { "nats" };
    let conv = |v: f64| if bits { nats_to_bits(v) } else { v };
    let content = match out.format {
        Format::Csv => {
            let mut lines = header_lines(out);
            lines.push(format!(
                "nbar,C_AB_{unit},C_AB_CD_{unit},C_AB_D_{unit},C_AC_{unit},C_AC_BD_{unit},\
                 C_AC_D_{unit}"
            ));
            for row in &rows {
                lines.push(format!(
                    "{},{},{},{},{},{},{}",
                    fmt_sig(row.nbar),
                    fmt_sig(conv(row.c_ab)),
                    fmt_sig(conv(row.c_ab_cd)),
                    fmt_sig(conv(row.c_ab_d)),
                    fmt_sig(conv(row.c_ac)),
                    fmt_sig(conv(row.c_ac_bd)),
                    fmt_sig(conv(row.c_ac_d))
                ));
            }
            finish_csv(lines)
        }
        Format::Json => {
            let objects: Vec<serde_json::Value> = rows
                .iter()
                .map(|row| {
                    serde_json::json!({
                        "nbar": row.nbar,
                        "units": unit,
                        "C_AB": conv(row.c_ab),
                        "C_AB_CD": conv(row.c_ab_cd),
                        "C_AB_D": conv(row.c_ab_d),
                        "C_AC": conv(row.c_ac),
                        "C_AC_BD": conv(row.c_ac_bd),
                        "C_AC_D": conv(row.c_ac_d),
                    })
                })
                .collect();
            to_json(&objects)?
        }
    };
    emit(out, content, false)
}

fn cmd_capacity(
    nbar: f64,
    grid: Option<&str>,
    protocol: Option<&str>,
    bits: bool,
    out: &OutputOpts,
) -> Result<Rendered, CliError> {
    let protocols = parse_protocols(protocol)?;
    let nbars = match grid {
        Some(g) => parse_grid(g)?,
        None => vec![require_non_negative("--nbar", nbar)?],
    };
    let unit = if bits { "bits" } else { "nats" };
    let conv = |v: f64| if bits { nats_to_bits(v) } else { v };
    let mut points: Vec<CapacityPoint> = Vec::new();
    for &n in &nbars {
        for id in &protocols {
            points.push(capacity(*id, n).map_err(run_err)?);
        }
    }
    let content = match out.format {
        Format::Csv => {
            let mut lines = header_lines(out);
            lines.push(format!("nbar,protocol,snr_x,snr_y,capacity_{unit}"));
            for p in &points {
                lines.push(format!(
                    "{},{},{},{},{}",
                    fmt_sig(p.nbar),
                    p.protocol,
                    fmt_sig(p.snr_x),
                    fmt_sig(p.snr_y),
                    fmt_sig(conv(p.capacity_nats))
                ));
            }
            finish_csv(lines)
        }
        Format::Json => {
            let objects: Vec<serde_json::Value> = points
                .iter()
                .map(|p| {
                    serde_json::json!({
                        "nbar": p.nbar,
                        "protocol": p.protocol.to_string(),
                        "snr_x": p.snr_x,
                        "snr_y": p.snr_y,
                        "units": unit,
                        "capacity": conv(p.capacity_nats),
                    })
                })
                .collect();
            to_json(&objects)?
        }
    };
    emit(out, content, false)
}

#[allow(clippy::too_many_arguments)]
fn cmd_montecarlo(
    protocol: &str,
    r: f64,
    sigma2: f64,
    samples: u64,
    seed: u64,
    gain: Option<f64>,
    sequential: bool,
    out: &OutputOpts,
) -> Result<Rendered, CliError> {
    let id = parse_protocol(protocol)?;
    require_non_negative("--r", r)?;
    require_non_negative("--sigma2", sigma2)?;
    if samples < 2 {
        return Err(CliError::Usage(format!(
            "--samples must be at least 2, got {samples}"
        )));
    }
    let gains = match gain {
        Some(g) => GainPair::uniform(require_finite("--gain", g)?),
        None => optimal_gains(id, r).map_err(run_err)?,
    };
    let spec = builtin_spec(id);
    let cmp = compare_mc_analytic_with_gains(
        &spec,
        r,
        sigma2,
        gains,
        samples,
        seed,
        execution(sequential),
    )
    .map_err(run_err)?;
    let failed = !cmp.pass;
    let content = match out.format {
        Format::Csv => render_mc_csv(&cmp, out),
        Format::Json => to_json(&cmp)?,
    };
    // A failed gate still prints its report before exiting nonzero.
    let rendered = emit(out, content, false)?;
    Ok(Rendered {
        content: rendered.content,
        failed,
    })
}

fn render_mc_csv(cmp: &McComparison, out: &OutputOpts) -> String {
    let mut lines = header_lines(out);
    let est = &cmp.estimate;
    lines.push(format!(
        "# rng: family={} seed={} ({})",
        est.rng.family, est.rng.seed, est.rng.stream_scheme
    ));
    lines.push(
        "protocol,r,sigma2,gain_x,gain_y,samples,noise_plus_hat_snu,noise_minus_hat_snu,\
         analytic_noise_plus_snu,analytic_noise_minus_snu,snr_x_hat,snr_y_hat,\
         noise_plus_sigmas,noise_minus_sigmas,low_power,pass"
            .to_string(),
    );
    lines.push(format!(
        "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
        est.protocol,
        fmt_sig(est.r),
        fmt_sig(est.sigma2),
        fmt_sig(est.gains.x),
        fmt_sig(est.gains.y),
        est.n_samples,
        fmt_sig(est.noise_plus_hat),
        fmt_sig(est.noise_minus_hat),
        fmt_sig(cmp.analytic.noise_plus),
        fmt_sig(cmp.analytic.noise_minus),
        fmt_sig(est.snr_x_hat),
        fmt_sig(est.snr_y_hat),
        fmt_sig(cmp.noise_plus_sigmas),
        fmt_sig(cmp.noise_minus_sigmas),
        cmp.low_power,
        cmp.pass
    ));
    finish_csv(lines)
}

// ---------------------------------------------------------------------------
// Shared helpers
// ---------------------------------------------------------------------------

fn execution(sequential: bool) -> Execution {
    if sequential {
        Execution::Sequential
    } else {
        Execution::default()
    }
}

fn run_err(e: ttpcnet::Error) -> CliError {
    CliError::Run(e.to_string())
}

fn require_non_negative(flag: &str, v: f64) -> Result<f64, CliError> {
    if v.is_finite() && v >= 0.0 {
        Ok(v)
    } else {
        Err(CliError::Usage(format!(
            "{flag} must be a non-negative finite number, got {v}"
        )))
    }
}

fn require_finite(flag: &str, v: f64) -> Result<f64, CliError> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(CliError::Usage(format!("{flag} must be finite, got {v}")))
    }
}

fn parse_protocol(s: &str) -> Result<ProtocolId, CliError> {
    ProtocolId::from_str(s).map_err(CliError::Usage)
}

fn parse_protocols(s: Option<&str>) -> Result<Vec<ProtocolId>, CliError> {
    match s {
        None => Ok(ProtocolId::ALL.to_vec()),
        Some(list) => list.split(',').map(|p| parse_protocol(p.trim())).collect(),
    }
}

/// Parses "a,b,c" or "start:stop:step" into a non-empty grid of
/// non-negative values.
fn parse_grid(s: &str) -> Result<Vec<f64>, CliError> {
    let usage = |msg: String| CliError::Usage(msg);
    let parse_one = |v: &str| -> Result<f64, CliError> {
        let x: f64 = v
            .trim()
            .parse()
            .map_err(|_| usage(format!("grid value `{v}` is not a number")))?;
        if !x.is_finite() || x < 0.0 {
            return Err(usage(format!(
                "grid value {x} must be non-negative and finite"
            )));
        }
        Ok(x)
    };
    if s.trim().is_empty() {
        return Err(usage("grid must not be empty".to_string()));
    }
    let values = if s.contains(':') {
        let parts: Vec<&str> = s.split(':').collect();
        if parts.len() != 3 {
            return Err(usage(format!(
                "range grid must be start:stop:step, got `{s}`"
            )));
        }
        let (start, stop, step) = (
            parse_one(parts[0])?,
            parse_one(parts[1])?,
            parse_one(parts[2])?,
        );
        if step <= 0.0 {
            return Err(usage(format!("grid step must be positive, got {step}")));
        }
        if stop < start {
            return Err(usage(format!(
                "grid stop {stop} must not be below start {start}"
            )));
        }
        let count = ((stop - start) / step + 1e-9).floor() as usize + 1;
        (0..count).map(|k| start + k as f64 * step).collect()
    } else {
        s.split(',')
            .map(parse_one)
            .collect::<Result<Vec<f64>, CliError>>()?
    };
    if values.is_empty() {
        return Err(usage("grid must not be empty".to_string()));
    }
    Ok(values)
}

/// Formats with 12 significant digits, trimming trailing zeros (plain
/// decimal notation in the sane range, scientific outside it).
fn fmt_sig(x: f64) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    if !x.is_finite() {
        return format!("{x}");
    }
    let exp = x.abs().log10().floor() as i32;
    if (-5..12).contains(&exp) {
        let decimals = (11 - exp).max(0) as usize;
        trim_zeros(&format!("{x:.decimals$}"))
    } else {
        let s = format!("{x:.11e}");
        match s.split_once('e') {
            Some((mantissa, e)) => format!("{}e{e}", trim_zeros(mantissa)),
            None => s,
        }
    }
}

fn trim_zeros(s: &str) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s.to_string()
    }
}

fn header_lines(out: &OutputOpts) -> Vec<String> {
    if out.no_header {
        return Vec::new();
    }
    let now = time::OffsetDateTime::now_utc();
    let stamp = now
        .format(&time::format_description::well_known::Rfc3339)
        .unwrap_or_else(|_| now.unix_timestamp().to_string());
    vec![format!("# generated_at: {stamp}")]
}

fn finish_csv(lines: Vec<String>) -> String {
    let mut content = lines.join("\n");
    content.push('\n');
    content
}

fn to_json<T: serde::Serialize>(value: &T) -> Result<String, CliError> {
    serde_json::to_string_pretty(value)
        .map(|mut s| {
            s.push('\n');
            s
        })
        .map_err(|e| CliError::Run(format!("serialization failed: {e}")))
}

/// Writes the content to the requested destination; returns it for the
/// caller to decide the exit code.
fn emit(out: &OutputOpts, content: String, failed: bool) -> Result<Rendered, CliError> {
    if let Some(path) = &out.output {
        std::fs::write(path, &content)
            .map_err(|e| CliError::Run(format!("cannot write {}: {e}", path.display())))?;
        // File consumers read the file; keep stdout quiet.
        return Ok(Rendered {
            content: String::new(),
            failed,
        });
    }
    Ok(Rendered { content, failed })
}
