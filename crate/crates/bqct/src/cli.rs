//! Command-line interface: verification sweeps, table generation, single
//! sessions and statistical sweeps, all with deterministic seeded output.

use std::fs;
use std::io::Write;
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use num_complex::Complex64;
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use crate::choreography::{self, SessionMode, SessionResult};
use crate::correction::CorrectionTable;
use crate::protocol::{
    alice_unitary, brown_state, haar_random_inputs, outcome_probability, BellIndex, InputQubit,
    ProtocolOutcome,
};

const INV_2_SQRT_2: f64 = 0.353_553_390_593_273_8;

/// Signed amplitude table of the channel state: (index, sign/(2√2)).
const CHANNEL_AMPLITUDES: [(usize, f64); 8] = [
    (0b00101, INV_2_SQRT_2),
    (0b00110, -INV_2_SQRT_2),
    (0b01000, INV_2_SQRT_2),
    (0b01011, -INV_2_SQRT_2),
    (0b10001, INV_2_SQRT_2),
    (0b10010, INV_2_SQRT_2),
    (0b11100, INV_2_SQRT_2),
    (0b11111, INV_2_SQRT_2),
];

/// Signed amplitude table of the channel after Alice's local unitary.
const TRANSFORMED_AMPLITUDES: [(usize, f64); 8] = [
    (0b00000, INV_2_SQRT_2),
    (0b00011, -INV_2_SQRT_2),
    (0b01001, INV_2_SQRT_2),
    (0b01010, INV_2_SQRT_2),
    (0b10100, INV_2_SQRT_2),
    (0b10111, INV_2_SQRT_2),
    (0b11101, -INV_2_SQRT_2),
    (0b11110, INV_2_SQRT_2),
];

#[derive(Debug, Parser)]
#[command(
    name = "bqct",
    about = "Bidirectional controlled teleportation over a five-qubit channel",
    version
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the built-in verification suite and exit nonzero on any failure
    Verify(VerifyArgs),
    /// Emit the canonical 32-entry correction table
    Table(TableArgs),
    /// Run one choreographed session and print its transcript
    Run(RunArgs),
    /// Run many sampled sessions and report aggregate statistics
    Sweep(SweepArgs),
}

#[derive(Debug, Args)]
pub struct CommonArgs {
    /// RNG seed (the BQCT_SEED environment variable supplies the default)
    #[arg(long, env = "BQCT_SEED", default_value_t = 0)]
    pub seed: u64,

    /// Output format
    #[arg(long, value_enum, default_value_t = FormatArg::Text)]
    pub format: FormatArg,

    /// Write output to this file instead of stdout
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[command(flatten)]
    pub common: CommonArgs,

    /// Number of random input pairs per sweep check
    #[arg(long, default_value_t = 100)]
    pub trials: usize,

    /// Corrupt one table entry "i,j,k" before verifying (test hook)
    #[arg(long, hide = true, value_name = "i,j,k")]
    pub corrupt_entry: Option<String>,
}

#[derive(Debug, Args)]
pub struct TableArgs {
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[command(flatten)]
    pub common: CommonArgs,

    /// Whether Charlie discloses his measurement outcome
    #[arg(long, value_enum, default_value_t = ModeArg::Controlled)]
    pub mode: ModeArg,

    /// Alice's input amplitudes "c0re,c0im,c1re,c1im" (random if absent)
    #[arg(long, value_name = "c0re,c0im,c1re,c1im")]
    pub input_a: Option<String>,

    /// Bob's input amplitudes "c0re,c0im,c1re,c1im" (random if absent)
    #[arg(long, value_name = "c0re,c0im,c1re,c1im")]
    pub input_b: Option<String>,

    /// Force the joint outcome "i,j,k" instead of sampling
    #[arg(long, value_name = "i,j,k")]
    pub outcome: Option<String>,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub common: CommonArgs,

    /// Number of sampled sessions
    #[arg(long, default_value_t = 1000)]
    pub trials: usize,

    /// Whether Charlie discloses his measurement outcome
    #[arg(long, value_enum, default_value_t = ModeArg::Controlled)]
    pub mode: ModeArg,

    /// Alice's input amplitudes "c0re,c0im,c1re,c1im" (random per trial if absent)
    #[arg(long, value_name = "c0re,c0im,c1re,c1im")]
    pub input_a: Option<String>,

    /// Bob's input amplitudes "c0re,c0im,c1re,c1im" (random per trial if absent)
    #[arg(long, value_name = "c0re,c0im,c1re,c1im")]
    pub input_b: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FormatArg {
    Text,
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Controlled,
    Withheld,
    /// Withheld control where receivers guess the control bit at random
    WithheldGuess,
}

impl From<ModeArg> for SessionMode {
    fn from(mode: ModeArg) -> Self {
        match mode {
            ModeArg::Controlled => SessionMode::Controlled,
            ModeArg::Withheld => SessionMode::ControlWithheld,
            ModeArg::WithheldGuess => SessionMode::ControlWithheldGuess,
        }
    }
}

/// Which subcommand a [`RunConfig`] executes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CommandKind {
    Verify,
    Table,
    Run,
    Sweep,
}

/// Fully resolved invocation, independent of the flag parser.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub command: CommandKind,
    pub seed: u64,
    pub trials: usize,
    pub format: FormatArg,
    pub out: Option<PathBuf>,
    pub mode: SessionMode,
    pub input_a: Option<(Complex64, Complex64)>,
    pub input_b: Option<(Complex64, Complex64)>,
    pub outcome: Option<ProtocolOutcome>,
    pub corrupt_entry: Option<ProtocolOutcome>,
}

impl RunConfig {
    pub fn new(command: CommandKind, seed: u64) -> Self {
        Self {
            command,
            seed,
            trials: 100,
            format: FormatArg::Text,
            out: None,
            mode: SessionMode::Controlled,
            input_a: None,
            input_b: None,
            outcome: None,
            corrupt_entry: None,
        }
    }

    fn from_cli(cli: Cli) -> Result<Self> {
        let config = match cli.command {
            Command::Verify(args) => {
                let mut c = RunConfig::new(CommandKind::Verify, args.common.seed);
                c.trials = args.trials;
                c.format = args.common.format;
                c.out = args.common.out;
                c.corrupt_entry = args
                    .corrupt_entry
                    .as_deref()
                    .map(parse_outcome)
                    .transpose()?;
                c
            }
            Command::Table(args) => {
                let mut c = RunConfig::new(CommandKind::Table, args.common.seed);
                c.trials = 1;
                c.format = args.common.format;
                c.out = args.common.out;
                c
            }
            Command::Run(args) => {
                let mut c = RunConfig::new(CommandKind::Run, args.common.seed);
                c.trials = 1;
                c.format = args.common.format;
                c.out = args.common.out;
                c.mode = args.mode.into();
                c.input_a = args.input_a.as_deref().map(parse_amplitudes).transpose()?;
                c.input_b = args.input_b.as_deref().map(parse_amplitudes).transpose()?;
                c.outcome = args.outcome.as_deref().map(parse_outcome).transpose()?;
                c
            }
            Command::Sweep(args) => {
                let mut c = RunConfig::new(CommandKind::Sweep, args.common.seed);
                c.trials = args.trials;
                c.format = args.common.format;
                c.out = args.common.out;
                c.mode = args.mode.into();
                c.input_a = args.input_a.as_deref().map(parse_amplitudes).transpose()?;
                c.input_b = args.input_b.as_deref().map(parse_amplitudes).transpose()?;
                c
            }
        };
        if matches!(config.command, CommandKind::Verify | CommandKind::Sweep) && config.trials == 0
        {
            bail!("--trials must be at least 1");
        }
        Ok(config)
    }
}

/// Parse "c0re,c0im,c1re,c1im" into normalized amplitudes.
pub fn parse_amplitudes(text: &str) -> Result<(Complex64, Complex64)> {
    let parts: Vec<&str> = text.split(',').map(str::trim).collect();
    if parts.len() != 4 {
        bail!("expected 4 comma-separated numbers, found {}", parts.len());
    }
    let nums: Vec<f64> = parts
        .iter()
        .map(|p| p.parse::<f64>().with_context(|| format!("bad number {p:?}")))
        .collect::<Result<_>>()?;
    let c0 = Complex64::new(nums[0], nums[1]);
    let c1 = Complex64::new(nums[2], nums[3]);
    let norm = c0.norm_sqr() + c1.norm_sqr();
    if (norm - 1.0).abs() > qsim_core::NORM_TOLERANCE {
        bail!("amplitudes are not normalized: |c0|² + |c1|² = {norm}");
    }
    Ok((c0, c1))
}

/// Parse "i,j,k" into a joint outcome.
pub fn parse_outcome(text: &str) -> Result<ProtocolOutcome> {
    let parts: Vec<&str> = text.split(',').map(str::trim).collect();
    if parts.len() != 3 {
        bail!("expected \"i,j,k\", found {text:?}");
    }
    let nums: Vec<u8> = parts
        .iter()
        .map(|p| p.parse::<u8>().with_context(|| format!("bad index {p:?}")))
        .collect::<Result<_>>()?;
    let i = BellIndex::new(nums[0])?;
    let j = BellIndex::new(nums[1])?;
    Ok(ProtocolOutcome::new(i, j, nums[2])?)
}

/// Entry point used by `main`: parse flags, resolve the sink, dispatch.
pub fn run(cli: Cli) -> Result<i32> {
    let config = RunConfig::from_cli(cli)?;
    match &config.out {
        Some(path) => {
            let mut buffer = Vec::new();
            let code = execute(&config, &mut buffer)?;
            fs::write(path, &buffer)
                .with_context(|| format!("writing {}", path.display()))?;
            Ok(code)
        }
        None => {
            let stdout = std::io::stdout();
            let mut lock = stdout.lock();
            execute(&config, &mut lock)
        }
    }
}

/// Execute a resolved config, writing all output to `out`. Returns the
/// process exit code: 0 iff every check passed.
pub fn execute(config: &RunConfig, out: &mut dyn Write) -> Result<i32> {
    match config.command {
        CommandKind::Verify => cmd_verify(config, out),
        CommandKind::Table => cmd_table(config, out),
        CommandKind::Run => cmd_run(config, out),
        CommandKind::Sweep => cmd_sweep(config, out),
    }
}

/// Format with 12 significant digits.
fn sig12(x: f64) -> String {
    format!("{x:.11e}")
}

/// Round to 12 significant digits for JSON number output.
fn round12(x: f64) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return x;
    }
    let exp = x.abs().log10().floor() as i32;
    let factor = 10f64.powi(11 - exp);
    (x * factor).round() / factor
}

struct Check {
    name: &'static str,
    passed: bool,
    detail: String,
}

fn golden_check(
    name: &'static str,
    state: &qsim_core::StateVector,
    expected: &[(usize, f64)],
) -> Check {
    let mut max_deviation = 0.0f64;
    for idx in 0..state.dim() {
        let want = expected
            .iter()
            .find(|(i, _)| *i == idx)
            .map(|(_, v)| Complex64::new(*v, 0.0))
            .unwrap_or(Complex64::ZERO);
        max_deviation = max_deviation.max((state.amplitude(idx) - want).norm());
    }
    Check {
        name,
        passed: max_deviation <= 1e-12,
        detail: format!("max amplitude deviation {}", sig12(max_deviation)),
    }
}

/// The full verification suite: amplitude goldens, the 32-outcome fidelity
/// sweep, probability uniformity, and the table round trip.
pub fn cmd_verify(config: &RunConfig, out: &mut dyn Write) -> Result<i32> {
    let mut checks = Vec::new();

    checks.push(golden_check(
        "brown-state-golden",
        &brown_state(),
        &CHANNEL_AMPLITUDES,
    ));
    checks.push(golden_check(
        "transformed-channel-golden",
        &brown_state().apply(&alice_unitary())?,
        &TRANSFORMED_AMPLITUDES,
    ));

    let table = match config.corrupt_entry {
        Some(outcome) => {
            let entry = *CorrectionTable::standard().entry(outcome);
            CorrectionTable::standard().with_recoveries(
                outcome,
                entry.recovery_b1.cycled(),
                entry.recovery_a2,
            )
        }
        None => CorrectionTable::standard().clone(),
    };

    let report = table.verify(config.trials, config.seed)?;
    let min_fidelity = report.min_fidelity;
    let fidelity_detail = match report.failures.first() {
        Some(failure) => format!(
            "min fidelity {} over {} cases; first failing entry {} (trial {})",
            sig12(report.min_fidelity),
            report.cases,
            failure.outcome,
            failure.trial,
        ),
        None => format!(
            "min fidelity {} over {} cases",
            sig12(report.min_fidelity),
            report.cases
        ),
    };
    checks.push(Check {
        name: "teleportation-fidelity",
        passed: report.passed(),
        detail: fidelity_detail,
    });

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut max_probability_deviation = 0.0f64;
    let mut max_sum_deviation = 0.0f64;
    for _ in 0..config.trials {
        let (chi_a, chi_b) = haar_random_inputs(&mut rng);
        let mut sum = 0.0;
        for outcome in ProtocolOutcome::all() {
            let p = outcome_probability(&chi_a, &chi_b, outcome)?;
            max_probability_deviation = max_probability_deviation.max((p - 1.0 / 32.0).abs());
            sum += p;
        }
        max_sum_deviation = max_sum_deviation.max((sum - 1.0).abs());
    }
    checks.push(Check {
        name: "outcome-uniformity",
        passed: max_probability_deviation <= 1e-12 && max_sum_deviation <= 1e-10,
        detail: format!(
            "max |p − 1/32| = {}, max |Σp − 1| = {}",
            sig12(max_probability_deviation),
            sig12(max_sum_deviation)
        ),
    });

    let round_trip = CorrectionTable::parse(&table.serialize());
    checks.push(Check {
        name: "table-round-trip",
        passed: round_trip.as_ref() == Ok(&table),
        detail: match &round_trip {
            Ok(_) => "serialize → parse → equal".to_string(),
            Err(e) => format!("round trip failed: {e}"),
        },
    });

    let passed = checks.iter().all(|c| c.passed);
    match config.format {
        FormatArg::Text => {
            for check in &checks {
                writeln!(
                    out,
                    "check {}: {} ({})",
                    check.name,
                    if check.passed { "pass" } else { "FAIL" },
                    check.detail
                )?;
            }
            writeln!(out, "min fidelity: {}", sig12(min_fidelity))?;
            writeln!(
                out,
                "max probability deviation: {}",
                sig12(max_probability_deviation)
            )?;
            writeln!(out, "result: {}", if passed { "pass" } else { "FAIL" })?;
        }
        FormatArg::Json => {
            let value = json!({
                "checks": checks.iter().map(|c| json!({
                    "name": c.name,
                    "passed": c.passed,
                    "detail": c.detail,
                })).collect::<Vec<_>>(),
                "min_fidelity": round12(min_fidelity),
                "max_probability_deviation": round12(max_probability_deviation),
                "passed": passed,
            });
            writeln!(out, "{}", serde_json::to_string_pretty(&value)?)?;
        }
        FormatArg::Csv => {
            writeln!(out, "check,passed,detail")?;
            for check in &checks {
                writeln!(out, "{},{},{:?}", check.name, check.passed, check.detail)?;
            }
        }
    }
    Ok(if passed { 0 } else { 1 })
}

/// Emit the canonical correction table; byte-identical across runs and seeds.
pub fn cmd_table(_config: &RunConfig, out: &mut dyn Write) -> Result<i32> {
    out.write_all(CorrectionTable::standard().serialize().as_bytes())?;
    Ok(0)
}

fn resolve_inputs(
    config: &RunConfig,
    rng: &mut dyn RngCore,
) -> Result<(InputQubit, InputQubit)> {
    let (random_a, random_b) = haar_random_inputs(rng);
    let chi_a = match config.input_a {
        Some((c0, c1)) => InputQubit::alice(c0, c1)?,
        None => random_a,
    };
    let chi_b = match config.input_b {
        Some((c0, c1)) => InputQubit::bob(c0, c1)?,
        None => random_b,
    };
    Ok((chi_a, chi_b))
}

fn session_json(result: &SessionResult) -> serde_json::Value {
    json!({
        "outcome": {
            "i": result.outcome.i.value(),
            "j": result.outcome.j.value(),
            "k": result.outcome.k,
        },
        "fidelity_B1": round12(result.fidelity_b1),
        "fidelity_A2": round12(result.fidelity_a2),
        "corrections": {
            "A2": result.correction_a2.to_string(),
            "B1": result.correction_b1.to_string(),
        },
        "messages": result.transcript.messages().map(|m| json!({
            "sender": m.sender.to_string(),
            "recipient": m.recipient.to_string(),
            "payload": m.payload.to_string(),
            "bits": m.payload.bit_count(),
        })).collect::<Vec<_>>(),
    })
}

/// One choreographed session with the given or random inputs.
pub fn cmd_run(config: &RunConfig, out: &mut dyn Write) -> Result<i32> {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let (chi_a, chi_b) = resolve_inputs(config, &mut rng)?;
    let session_seed = rng.next_u64();
    let result = match config.outcome {
        Some(outcome) => choreography::run_session_forced(&chi_a, &chi_b, config.mode, outcome)?,
        None => choreography::run_session(&chi_a, &chi_b, config.mode, session_seed)?,
    };

    match config.format {
        FormatArg::Text => {
            write!(out, "{}", result.transcript.export())?;
            writeln!(out, "outcome: {}", result.outcome)?;
            writeln!(out, "fidelity_B1: {}", sig12(result.fidelity_b1))?;
            writeln!(out, "fidelity_A2: {}", sig12(result.fidelity_a2))?;
            writeln!(
                out,
                "classical bits: {}",
                result.transcript.classical_bits()
            )?;
        }
        FormatArg::Json => {
            writeln!(out, "{}", serde_json::to_string_pretty(&session_json(&result))?)?;
        }
        FormatArg::Csv => {
            writeln!(out, "seq,party,event")?;
            for event in result.transcript.events() {
                let line = event.to_string();
                let rest = line.splitn(3, ' ').nth(2).unwrap_or("");
                writeln!(out, "{},{},{:?}", event.seq, event.party, rest)?;
            }
            writeln!(out, ",,outcome={}", result.outcome)?;
            writeln!(out, ",,fidelity_B1={}", sig12(result.fidelity_b1))?;
            writeln!(out, ",,fidelity_A2={}", sig12(result.fidelity_a2))?;
        }
    }
    Ok(0)
}

/// Many sampled sessions; reports empirical outcome frequencies and mean
/// fidelities for the chosen mode.
pub fn cmd_sweep(config: &RunConfig, out: &mut dyn Write) -> Result<i32> {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let outcomes = ProtocolOutcome::all();
    let mut counts = vec![0u64; outcomes.len()];
    let mut sum_fidelity_b1 = 0.0;
    let mut sum_fidelity_a2 = 0.0;

    for _ in 0..config.trials {
        let (chi_a, chi_b) = resolve_inputs(config, &mut rng)?;
        let session_seed = rng.next_u64();
        let result = choreography::run_session(&chi_a, &chi_b, config.mode, session_seed)?;
        let slot = outcomes
            .iter()
            .position(|o| *o == result.outcome)
            .expect("outcome enumeration is total");
        counts[slot] += 1;
        sum_fidelity_b1 += result.fidelity_b1;
        sum_fidelity_a2 += result.fidelity_a2;
    }

    let trials = config.trials as f64;
    let mean_b1 = sum_fidelity_b1 / trials;
    let mean_a2 = sum_fidelity_a2 / trials;

    match config.format {
        FormatArg::Text => {
            writeln!(out, "mode: {}", config.mode)?;
            writeln!(out, "trials: {}", config.trials)?;
            for (slot, outcome) in outcomes.iter().enumerate() {
                writeln!(
                    out,
                    "outcome {}: count {} frequency {}",
                    outcome,
                    counts[slot],
                    sig12(counts[slot] as f64 / trials)
                )?;
            }
            writeln!(out, "mean fidelity_B1: {}", sig12(mean_b1))?;
            writeln!(out, "mean fidelity_A2: {}", sig12(mean_a2))?;
        }
        FormatArg::Json => {
            let value = json!({
                "mode": config.mode.to_string(),
                "trials": config.trials,
                "outcomes": outcomes.iter().enumerate().map(|(slot, o)| json!({
                    "i": o.i.value(),
                    "j": o.j.value(),
                    "k": o.k,
                    "count": counts[slot],
                    "frequency": round12(counts[slot] as f64 / trials),
                })).collect::<Vec<_>>(),
                "mean_fidelity_B1": round12(mean_b1),
                "mean_fidelity_A2": round12(mean_a2),
            });
            writeln!(out, "{}", serde_json::to_string_pretty(&value)?)?;
        }
        FormatArg::Csv => {
            writeln!(out, "i,j,k,count,frequency")?;
            for (slot, o) in outcomes.iter().enumerate() {
                writeln!(
                    out,
                    "{},{},{},{},{}",
                    o.i.value(),
                    o.j.value(),
                    o.k,
                    counts[slot],
                    sig12(counts[slot] as f64 / trials)
                )?;
            }
            writeln!(out, "mean_fidelity_B1,,,,{}", sig12(mean_b1))?;
            writeln!(out, "mean_fidelity_A2,,,,{}", sig12(mean_a2))?;
        }
    }
    Ok(0)
}

// Re-exported so integration tests can assert on the same Pauli type the
// corruption hook mutates.
pub use crate::correction::Pauli as CorrectionPauli;

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn amplitude_parsing_accepts_normalized_inputs() {
        let (c0, c1) = parse_amplitudes("0.6,0,0,0.8").unwrap();
        assert_eq!(c0, Complex64::new(0.6, 0.0));
        assert_eq!(c1, Complex64::new(0.0, 0.8));
    }

    #[test]
    fn amplitude_parsing_rejects_unnormalized_inputs() {
        assert!(parse_amplitudes("1,0,1,0").is_err());
        assert!(parse_amplitudes("0.6,0,0").is_err());
        assert!(parse_amplitudes("a,b,c,d").is_err());
    }

    #[test]
    fn outcome_parsing() {
        let o = parse_outcome("2,4,1").unwrap();
        assert_eq!(o.i.value(), 2);
        assert_eq!(o.j.value(), 4);
        assert_eq!(o.k, 1);
        assert!(parse_outcome("5,1,0").is_err());
        assert!(parse_outcome("1,1,2").is_err());
        assert!(parse_outcome("1,1").is_err());
    }

    #[test]
    fn sig12_has_twelve_significant_digits() {
        assert_eq!(sig12(1.0), "1.00000000000e0");
        assert_eq!(sig12(1.0 / 32.0), "3.12500000000e-2");
    }

    #[test]
    fn round12_is_stable_for_probabilities() {
        assert_eq!(round12(0.03125), 0.03125);
        assert_eq!(round12(0.0), 0.0);
    }
}
