//! Command-level tests: exit-status contract, output determinism, JSON
//! schemas, and the statistical sweep bounds.

use bqct::cli::{execute, CommandKind, FormatArg, RunConfig};
use bqct::choreography::SessionMode;
use bqct::protocol::{BellIndex, ProtocolOutcome};
use serde_json::Value;

fn outcome(i: u8, j: u8, k: u8) -> ProtocolOutcome {
    ProtocolOutcome::new(BellIndex::new(i).unwrap(), BellIndex::new(j).unwrap(), k).unwrap()
}

fn run_to_string(config: &RunConfig) -> (i32, String) {
    let mut buffer = Vec::new();
    let code = execute(config, &mut buffer).expect("command execution");
    (code, String::from_utf8(buffer).expect("utf-8 output"))
}

const PLUS: (f64, f64) = (std::f64::consts::FRAC_1_SQRT_2, 0.0);

fn plus_amplitudes() -> (num_complex::Complex64, num_complex::Complex64) {
    (
        num_complex::Complex64::new(PLUS.0, PLUS.1),
        num_complex::Complex64::new(PLUS.0, PLUS.1),
    )
}

#[test]
fn verify_passes_with_default_config() {
    let mut config = RunConfig::new(CommandKind::Verify, 0);
    config.trials = 5;
    let (code, output) = run_to_string(&config);
    assert_eq!(code, 0, "verify failed:\n{output}");
    assert!(output.contains("check brown-state-golden: pass"));
    assert!(output.contains("check transformed-channel-golden: pass"));
    assert!(output.contains("check teleportation-fidelity: pass"));
    assert!(output.contains("check outcome-uniformity: pass"));
    assert!(output.contains("check table-round-trip: pass"));
    assert!(output.contains("min fidelity:"));
    assert!(output.contains("max probability deviation:"));
    assert!(output.contains("result: pass"));
}

#[test]
fn verify_emits_machine_readable_json() {
    let mut config = RunConfig::new(CommandKind::Verify, 1);
    config.trials = 2;
    config.format = FormatArg::Json;
    let (code, output) = run_to_string(&config);
    assert_eq!(code, 0);
    let value: Value = serde_json::from_str(&output).unwrap();
    assert_eq!(value["passed"], Value::Bool(true));
    assert_eq!(value["checks"].as_array().unwrap().len(), 5);
    assert!(value["min_fidelity"].as_f64().unwrap() >= 1.0 - 1e-10);
    assert!(value["max_probability_deviation"].as_f64().unwrap() <= 1e-12);
}

#[test]
fn verify_with_corrupted_entry_fails_and_names_it() {
    let mut config = RunConfig::new(CommandKind::Verify, 0);
    config.trials = 3;
    config.corrupt_entry = Some(outcome(2, 3, 1));
    let (code, output) = run_to_string(&config);
    assert_eq!(code, 1);
    assert!(output.contains("check teleportation-fidelity: FAIL"));
    assert!(output.contains("(2,3,1)"), "report must name the entry:\n{output}");
    assert!(output.contains("result: FAIL"));
}

#[test]
fn verify_trials_one_is_sufficient() {
    let mut config = RunConfig::new(CommandKind::Verify, 9);
    config.trials = 1;
    let (code, _) = run_to_string(&config);
    assert_eq!(code, 0);
}

#[test]
fn table_output_is_canonical_and_seed_independent() {
    let mut outputs = Vec::new();
    for seed in [0u64, 1, 42, 1_000_003, u64::MAX] {
        let config = RunConfig::new(CommandKind::Table, seed);
        let (code, output) = run_to_string(&config);
        assert_eq!(code, 0);
        outputs.push(output);
    }
    for output in &outputs[1..] {
        assert_eq!(output, &outputs[0]);
    }
    let lines: Vec<&str> = outputs[0].lines().collect();
    assert_eq!(lines.len(), 32);
    assert_eq!(lines[0], "1 1 0 I +1 I +1 I I");
}

#[test]
fn table_output_matches_checked_in_artifact() {
    let config = RunConfig::new(CommandKind::Table, 7);
    let (_, output) = run_to_string(&config);
    assert_eq!(output, include_str!("../data/correction_table.txt"));
}

#[test]
fn run_json_has_the_documented_schema() {
    let mut config = RunConfig::new(CommandKind::Run, 12);
    config.format = FormatArg::Json;
    let (code, output) = run_to_string(&config);
    assert_eq!(code, 0);
    let value: Value = serde_json::from_str(&output).unwrap();
    let i = value["outcome"]["i"].as_u64().unwrap();
    let j = value["outcome"]["j"].as_u64().unwrap();
    let k = value["outcome"]["k"].as_u64().unwrap();
    assert!((1..=4).contains(&i));
    assert!((1..=4).contains(&j));
    assert!(k <= 1);
    assert!((value["fidelity_B1"].as_f64().unwrap() - 1.0).abs() < 1e-10);
    assert!((value["fidelity_A2"].as_f64().unwrap() - 1.0).abs() < 1e-10);
    assert_eq!(value["messages"].as_array().unwrap().len(), 4);
}

#[test]
fn run_output_is_deterministic_for_a_seed() {
    for format in [FormatArg::Text, FormatArg::Json, FormatArg::Csv] {
        let mut config = RunConfig::new(CommandKind::Run, 77);
        config.format = format;
        let first = run_to_string(&config);
        let second = run_to_string(&config);
        assert_eq!(first, second);
    }
}

#[test]
fn withheld_run_with_plus_inputs_reports_imperfect_fidelity() {
    // seed 0 samples a k = 1 outcome for these fixed inputs
    let mut config = RunConfig::new(CommandKind::Run, 0);
    config.mode = SessionMode::ControlWithheld;
    config.input_a = Some(plus_amplitudes());
    config.input_b = Some(plus_amplitudes());
    config.format = FormatArg::Json;
    let (code, output) = run_to_string(&config);
    assert_eq!(code, 0);
    let value: Value = serde_json::from_str(&output).unwrap();
    assert_eq!(value["outcome"]["k"].as_u64().unwrap(), 1);
    assert!(value["fidelity_B1"].as_f64().unwrap() < 1.0 - 1e-10);
    assert_eq!(value["messages"].as_array().unwrap().len(), 2);
}

#[test]
fn forced_outcome_run_is_reported_verbatim() {
    let mut config = RunConfig::new(CommandKind::Run, 5);
    config.outcome = Some(outcome(3, 4, 1));
    let (code, output) = run_to_string(&config);
    assert_eq!(code, 0);
    assert!(output.contains("outcome: (3,4,1)"));
}

#[test]
fn sweep_outcome_frequencies_are_uniform_within_five_sigma() {
    let mut config = RunConfig::new(CommandKind::Sweep, 31);
    config.trials = 32_000;
    config.format = FormatArg::Json;
    let (code, output) = run_to_string(&config);
    assert_eq!(code, 0);
    let value: Value = serde_json::from_str(&output).unwrap();
    let outcomes = value["outcomes"].as_array().unwrap();
    assert_eq!(outcomes.len(), 32);
    // binomial: mean 1000, σ = √(n·p·(1−p)) ≈ 31.12, 5σ ≈ 156
    let mut total = 0u64;
    for entry in outcomes {
        let count = entry["count"].as_u64().unwrap();
        total += count;
        assert!(
            (count as f64 - 1000.0).abs() <= 156.0,
            "outcome ({},{},{}) count {count}",
            entry["i"], entry["j"], entry["k"]
        );
    }
    assert_eq!(total, 32_000);
    // controlled sweeps correct every branch
    assert!((value["mean_fidelity_B1"].as_f64().unwrap() - 1.0).abs() < 1e-10);
    assert!((value["mean_fidelity_A2"].as_f64().unwrap() - 1.0).abs() < 1e-10);
}

#[test]
fn withheld_sweep_mean_tracks_the_expected_average() {
    // Expected uncontrolled mean for |+⟩ inputs is exactly 1/2; per-session
    // fidelities are Bernoulli, so 3σ over 2000 trials is 0.5·3/√2000 ≈ 0.034.
    let mut config = RunConfig::new(CommandKind::Sweep, 13);
    config.trials = 2000;
    config.mode = SessionMode::ControlWithheld;
    config.input_a = Some(plus_amplitudes());
    config.input_b = Some(plus_amplitudes());
    config.format = FormatArg::Json;
    let (code, output) = run_to_string(&config);
    assert_eq!(code, 0);
    let value: Value = serde_json::from_str(&output).unwrap();
    let mean_b1 = value["mean_fidelity_B1"].as_f64().unwrap();
    let mean_a2 = value["mean_fidelity_A2"].as_f64().unwrap();
    assert!((mean_b1 - 0.5).abs() <= 0.034, "mean_b1 = {mean_b1}");
    assert!((mean_a2 - 0.5).abs() <= 0.034, "mean_a2 = {mean_a2}");
}

#[test]
fn sweep_csv_is_order_stable() {
    let mut config = RunConfig::new(CommandKind::Sweep, 2);
    config.trials = 64;
    config.format = FormatArg::Csv;
    let first = run_to_string(&config);
    let second = run_to_string(&config);
    assert_eq!(first, second);
    let (_, output) = first;
    assert!(output.starts_with("i,j,k,count,frequency\n"));
    assert_eq!(output.lines().count(), 1 + 32 + 2);
}

mod process {
    //! Exit-status contract exercised against the real binary.

    use std::process::Command;

    fn bqct() -> Command {
        Command::new(env!("CARGO_BIN_EXE_bqct"))
    }

    #[test]
    fn verify_exits_zero_on_success() {
        let output = bqct()
            .args(["verify", "--trials", "2", "--seed", "0"])
            .env_remove("BQCT_SEED")
            .output()
            .unwrap();
        assert!(output.status.success(), "{output:?}");
    }

    #[test]
    fn verify_exits_one_on_corruption() {
        let output = bqct()
            .args(["verify", "--trials", "2", "--corrupt-entry", "1,1,1"])
            .env_remove("BQCT_SEED")
            .output()
            .unwrap();
        assert_eq!(output.status.code(), Some(1));
        let stdout = String::from_utf8_lossy(&output.stdout);
        assert!(stdout.contains("(1,1,1)"));
    }

    #[test]
    fn malformed_inputs_exit_with_usage_error() {
        let output = bqct()
            .args(["run", "--input-a", "1,0,1,0"])
            .output()
            .unwrap();
        assert_eq!(output.status.code(), Some(2));
        let stderr = String::from_utf8_lossy(&output.stderr);
        assert!(stderr.contains("not normalized"));
    }

    #[test]
    fn seed_env_variable_is_honored_but_flags_win() {
        let with_env = bqct()
            .args(["run", "--format", "json"])
            .env("BQCT_SEED", "123")
            .output()
            .unwrap();
        let with_flag = bqct()
            .args(["run", "--format", "json", "--seed", "123"])
            .env_remove("BQCT_SEED")
            .output()
            .unwrap();
        assert_eq!(with_env.stdout, with_flag.stdout);

        let flag_beats_env = bqct()
            .args(["run", "--format", "json", "--seed", "123"])
            .env("BQCT_SEED", "9")
            .output()
            .unwrap();
        assert_eq!(flag_beats_env.stdout, with_flag.stdout);
    }

    #[test]
    fn table_writes_the_out_file() {
        let dir = std::env::temp_dir().join("bqct-cli-test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("table.txt");
        let output = bqct()
            .args(["table", "--out", path.to_str().unwrap()])
            .output()
            .unwrap();
        assert!(output.status.success());
        assert!(output.stdout.is_empty());
        let written = std::fs::read_to_string(&path).unwrap();
        assert_eq!(written.lines().count(), 32);
        std::fs::remove_file(&path).ok();
    }
}
