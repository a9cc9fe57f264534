//! Black-box contract tests for the command-line interface: exit codes,
//! output formats, unit-declaring headers, and file output.

use std::process::{Command, Output};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ttpcnet"))
        .args(args)
        .output()
        .expect("spawn CLI")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

#[test]
fn exit_codes_for_usage_errors() {
    // Unknown flags and bad subcommands are clap usage errors.
    assert_eq!(run(&["no-such-command"]).status.code(), Some(2));
    assert_eq!(run(&["fig4", "--bogus"]).status.code(), Some(2));
    // Manual validation failures use the same code.
    assert_eq!(run(&["fig4", "--grid", ""]).status.code(), Some(2));
    assert_eq!(run(&["fig4", "--grid", "1:0:0.1"]).status.code(), Some(2));
    assert_eq!(
        run(&[
            "montecarlo",
            "--protocol",
            "ab",
            "--r",
            "1",
            "--samples",
            "1"
        ])
        .status
        .code(),
        Some(2)
    );
    assert_eq!(
        run(&["montecarlo", "--protocol", "zz", "--r", "1"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        run(&["montecarlo", "--protocol", "ab", "--r", "-1"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(run(&["capacity", "--nbar", "-3"]).status.code(), Some(2));
}

#[test]
fn montecarlo_gate_failure_exits_one_but_still_reports() {
    let out = run(&[
        "montecarlo",
        "--protocol",
        "ab_cd",
        "--r",
        "1",
        "--gain",
        "0",
        "--samples",
        "30000",
        "--seed",
        "3",
        "--no-header",
    ]);
    assert_eq!(out.status.code(), Some(1));
    let text = stdout(&out);
    assert!(text.contains(",false\n") || text.ends_with("false\n"));
    assert!(text.contains("AB_CD"));
}

#[test]
fn montecarlo_pass_exits_zero() {
    let out = run(&[
        "montecarlo",
        "--protocol",
        "ac_d",
        "--r",
        "0.5",
        "--sigma2",
        "1",
        "--samples",
        "50000",
        "--seed",
        "12",
        "--format",
        "json",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let report: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(report["pass"], true);
    assert_eq!(report["estimate"]["protocol"], "AC_D");
    assert_eq!(report["estimate"]["rng"]["family"], "ChaCha8");
    assert!(report["signal_plus_sigmas"].is_number());
}

#[test]
fn verify_correlations_declares_expected_column_and_units() {
    let out = run(&["verify-correlations", "--grid", "0,1,2", "--no-header"]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    let header = text.lines().next().unwrap();
    assert!(header.contains("expected=4*exp(-2r)"));
    assert!(header.contains("variance_snu"));
    assert_eq!(
        text.lines().count(),
        25,
        "header plus 8 relations x 3 r values"
    );
}

#[test]
fn fig4_headers_units_and_footer() {
    let out = run(&["fig4", "--grid", "0:0.5:0.25", "--no-header"]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    let mut lines = text.lines();
    let header = lines.next().unwrap();
    for col in [
        "squeezing_dB",
        "snl_snu",
        "ab_unassisted_snu",
        "ab_two_controllers_opt_snu",
        "ab_one_controller_snu",
        "ac_unassisted_snu",
        "ac_two_controllers_opt_snu",
        "ac_one_controller_snu",
    ] {
        assert!(header.contains(col), "missing column {col}");
    }
    assert!(text
        .trim_end()
        .lines()
        .last()
        .unwrap()
        .starts_with("# note:"));
}

#[test]
fn fig5_units_and_bits_flag() {
    let nats = stdout(&run(&["fig5", "--grid", "2", "--no-header"]));
    assert!(nats.lines().next().unwrap().contains("C_AB_D_nats"));
    let bits = stdout(&run(&["fig5", "--grid", "2", "--bits", "--no-header"]));
    assert!(bits.lines().next().unwrap().contains("C_AB_D_bits"));
    let pick = |text: &str| -> f64 {
        text.lines()
            .nth(1)
            .unwrap()
            .split(',')
            .nth(3)
            .unwrap()
            .parse()
            .unwrap()
    };
    let (v_nats, v_bits) = (pick(&nats), pick(&bits));
    assert!((v_nats - 7.0f64.ln()).abs() < 1e-9);
    assert!((v_bits - 7.0f64.ln() / 2.0f64.ln()).abs() < 1e-9);
}

#[test]
fn capacity_table_lists_all_protocols() {
    let out = run(&["capacity", "--nbar", "2", "--no-header"]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    assert_eq!(
        text.lines().next().unwrap(),
        "nbar,protocol,snr_x,snr_y,capacity_nats"
    );
    assert_eq!(text.lines().count(), 7);
    for name in ["AB", "AC", "AB_CD", "AC_BD", "AB_D", "AC_D"] {
        assert!(text.lines().any(|l| l.split(',').nth(1) == Some(name)));
    }
    let single = stdout(&run(&[
        "capacity",
        "--nbar",
        "2",
        "--protocol",
        "ab_d",
        "--no-header",
    ]));
    assert_eq!(single.lines().count(), 2);
    assert!(single.contains("AB_D"));
}

#[test]
fn spectra_command_verifies_engine_against_closed_forms() {
    let out = run(&["spectra", "--protocol", "ab_cd", "--r", "1", "--no-header"]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    assert!(text.lines().next().unwrap().contains("engine_abs_dev"));
    let row: Vec<&str> = text.lines().nth(1).unwrap().split(',').collect();
    assert_eq!(row[0], "AB_CD");
    let dev: f64 = row.last().unwrap().parse().unwrap();
    assert!(dev <= 1e-10);
}

#[test]
fn gains_json_round_trips() {
    let out = run(&[
        "gains",
        "--protocol",
        "ac_bd",
        "--grid",
        "1",
        "--format",
        "json",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let rows: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    let g = rows[0]["gain_x"].as_f64().unwrap();
    assert!((g - 2.0f64.tanh()).abs() < 1e-12);
}

#[test]
fn output_flag_writes_the_same_bytes_as_stdout() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("fig5.csv");
    let to_stdout = run(&["fig5", "--grid", "0:1:0.5", "--no-header"]);
    let to_file = run(&[
        "fig5",
        "--grid",
        "0:1:0.5",
        "--no-header",
        "--output",
        path.to_str().unwrap(),
    ]);
    assert_eq!(to_file.status.code(), Some(0));
    assert!(to_file.stdout.is_empty(), "file mode keeps stdout quiet");
    let file_bytes = std::fs::read(&path).unwrap();
    assert_eq!(file_bytes, to_stdout.stdout);
}

#[test]
fn json_outputs_are_valid_json_arrays() {
    for args in [
        vec!["verify-correlations", "--grid", "0,1", "--format", "json"],
        vec!["fig4", "--grid", "0,1", "--format", "json"],
        vec!["fig5", "--grid", "0,1", "--format", "json"],
        vec!["capacity", "--nbar", "1", "--format", "json"],
        vec!["spectra", "--r", "0.5", "--format", "json"],
    ] {
        let out = run(&args);
        assert_eq!(out.status.code(), Some(0), "{args:?}");
        let v: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
        assert!(v.is_array(), "{args:?} should emit a JSON array");
        assert!(!v.as_array().unwrap().is_empty());
    }
}
