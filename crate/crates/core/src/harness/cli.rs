//! Command-line interface: decode an instance file, run experiments and
//! gap sweeps from config files, validate the operating regime, print
//! analytical bounds, and generate instance files.
//!
//! Exit codes: 0 success, 2 on configuration or validation failure, 1 on
//! runtime error.

use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::decoder::{joint_typicality_decode, DecoderConfig, SelectionRule, TypicalitySlack};
use crate::error::{Error, Result};
use crate::harness::{
    bound_values, emit_report, run_experiment, run_gap_sweep, ExperimentConfig, OutputFormat,
};
use crate::model::{
    gen_gaussian_matrix, gen_sparse_signal, measure, AmplitudeRule, InstanceDocument,
    ProblemInstance,
};

#[derive(Parser)]
#[command(
    name = "jtdec",
    version,
    about = "Joint typicality decoding simulator for noisy compressive sampling"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum RuleArg {
    /// Smallest typicality deviation, lexicographic tie-break.
    MinDeviation,
    /// Lexicographically first typical support.
    FirstLex,
}

impl From<RuleArg> for SelectionRule {
    fn from(r: RuleArg) -> Self {
        match r {
            RuleArg::MinDeviation => SelectionRule::MinDeviation,
            RuleArg::FirstLex => SelectionRule::FirstLexicographic,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Json,
    Csv,
}

impl From<FormatArg> for OutputFormat {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Json => OutputFormat::Json,
            FormatArg::Csv => OutputFormat::Csv,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum RuleGenArg {
    Constant,
    UniformAboveMu,
}

impl From<RuleGenArg> for AmplitudeRule {
    fn from(r: RuleGenArg) -> Self {
        match r {
            RuleGenArg::Constant => AmplitudeRule::Constant,
            RuleGenArg::UniformAboveMu => AmplitudeRule::UniformAboveMu,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Decode one instance file with the joint typicality decoder.
    Decode(DecodeArgs),
    /// Run a Monte Carlo experiment from a config file.
    Experiment(ExperimentArgs),
    /// Run the experiment at several problem scales and print the gap table.
    Sweep(SweepArgs),
    /// Check the operating-regime hypotheses of a config.
    Validate(ConfigOnlyArgs),
    /// Print the analytical bound values of a config.
    Bounds(ConfigOnlyArgs),
    /// Generate a random problem instance file.
    Gen(GenArgs),
}

#[derive(Args)]
struct DecodeArgs {
    /// Instance JSON file.
    #[arg(long)]
    instance: PathBuf,
    /// Typicality slack delta.
    #[arg(long, group = "slack")]
    delta: Option<f64>,
    /// Derive delta from zeta in (2/3, 1) and the instance's mu.
    #[arg(long, group = "slack")]
    zeta: Option<f64>,
    /// Selection rule among typical supports.
    #[arg(long, value_enum, default_value = "min-deviation")]
    rule: RuleArg,
    /// Output file (stdout if omitted).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ExperimentArgs {
    /// Experiment config JSON file.
    #[arg(long)]
    config: PathBuf,
    /// Output file (stdout if omitted).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Report format, overriding the config.
    #[arg(long, value_enum)]
    format: Option<FormatArg>,
    /// Worker threads, overriding the config.
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Args)]
struct SweepArgs {
    /// Base experiment config JSON file.
    #[arg(long)]
    config: PathBuf,
    /// Comma-separated integer scale factors, e.g. 1,2,4.
    #[arg(long, value_delimiter = ',', required = true)]
    scales: Vec<u32>,
    /// Directory for the per-scale report files (default: current dir).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ConfigOnlyArgs {
    /// Experiment config JSON file.
    #[arg(long)]
    config: PathBuf,
}

#[derive(Args)]
struct GenArgs {
    /// Measurement rows N.
    #[arg(long)]
    n: usize,
    /// Signal length M.
    #[arg(long)]
    m: usize,
    /// Sparsity L.
    #[arg(long)]
    l: usize,
    /// Noise variance per coordinate.
    #[arg(long)]
    sigma2: f64,
    /// Minimum nonzero magnitude.
    #[arg(long, default_value_t = 1.0)]
    mu: f64,
    /// Amplitude rule for the nonzeros.
    #[arg(long, value_enum, default_value = "constant")]
    rule: RuleGenArg,
    /// Master seed; matrix, signal, and noise seeds derive from it.
    #[arg(long)]
    seed: u64,
    /// Output file (stdout if omitted).
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Parse failures on user-supplied documents are validation errors
/// (exit 2), unlike I/O faults (exit 1).
fn parse_document<T: serde::de::DeserializeOwned>(text: &str, what: &str) -> Result<T> {
    serde_json::from_str(text).map_err(|e| Error::InvalidConfig(format!("{what}: {e}")))
}

fn read_config(path: &Path) -> Result<ExperimentConfig> {
    let mut text = String::new();
    File::open(path)?.read_to_string(&mut text)?;
    let config: ExperimentConfig = parse_document(&text, "config file")?;
    config.validate()?;
    Ok(config)
}

/// Like [`read_config`] but without the subset budget check, for the
/// analytical subcommands that never decode.
fn read_config_analytical(path: &Path) -> Result<ExperimentConfig> {
    let mut text = String::new();
    File::open(path)?.read_to_string(&mut text)?;
    let config: ExperimentConfig = parse_document(&text, "config file")?;
    config.validate_params()?;
    Ok(config)
}

fn write_output(path: Option<&Path>, body: &[u8]) -> Result<()> {
    match path {
        Some(p) => {
            let mut w = BufWriter::new(File::create(p)?);
            w.write_all(body)?;
            w.flush()?;
        }
        None => {
            std::io::stdout().write_all(body)?;
        }
    }
    Ok(())
}

fn cmd_decode(args: &DecodeArgs) -> Result<()> {
    let mut text = String::new();
    File::open(&args.instance)?.read_to_string(&mut text)?;
    let doc: InstanceDocument = parse_document(&text, "instance file")?;
    let inst = ProblemInstance::from_document(&doc)?;

    let slack = match (args.delta, args.zeta) {
        (Some(d), None) => TypicalitySlack::Delta(d),
        (None, Some(z)) => TypicalitySlack::Zeta(z),
        _ => {
            return Err(Error::InvalidConfig(
                "exactly one of --delta and --zeta is required".into(),
            ))
        }
    };
    let config = DecoderConfig {
        slack,
        selection_rule: args.rule.into(),
        ..DecoderConfig::with_delta(1.0)
    }
    .resolve_slack(inst.signal.mu(), doc.n, doc.l)?;
    config.validate()?;

    let result = joint_typicality_decode(
        &inst.matrix,
        &inst.observation,
        doc.l,
        inst.sigma2,
        &config,
    )?;
    let mut body = serde_json::to_vec_pretty(&result)?;
    body.push(b'\n');
    write_output(args.out.as_deref(), &body)
}

fn cmd_experiment(args: &ExperimentArgs) -> Result<()> {
    let mut config = read_config(&args.config)?;
    if let Some(t) = args.threads {
        config.parallelism = t;
    }
    if let Some(f) = args.format {
        config.output_format = f.into();
    }
    config.validate()?;
    let report = run_experiment(&config)?;
    let mut buf = Vec::new();
    emit_report(&report, config.output_format, &mut buf)?;
    write_output(args.out.as_deref(), &buf)
}

fn cmd_sweep(args: &SweepArgs) -> Result<()> {
    let config = read_config(&args.config)?;
    let out_dir = args.out.clone().unwrap_or_else(|| PathBuf::from("."));
    std::fs::create_dir_all(&out_dir)?;
    let reports = run_gap_sweep(&config, &args.scales)?;

    let mut table = String::from(
        "scale        n      m      l    alpha     beta          gap  support_recovered\n",
    );
    for (s, rep) in args.scales.iter().zip(&reports) {
        table.push_str(&format!(
            "{:>5} {:>8} {:>6} {:>6} {:>8.5} {:>8.4} {:>12.6e} {:>18.4}\n",
            s,
            rep.config.n,
            rep.config.m,
            rep.config.l,
            rep.alpha,
            rep.beta,
            rep.gap,
            rep.freq_support_recovered
        ));
        let path = out_dir.join(format!("sweep_scale_{s}.json"));
        let mut buf = Vec::new();
        emit_report(rep, OutputFormat::Json, &mut buf)?;
        write_output(Some(&path), &buf)?;
    }
    print!("{table}");
    Ok(())
}

fn cmd_validate(args: &ConfigOnlyArgs) -> Result<bool> {
    let config = read_config_analytical(&args.config)?;
    let report = crate::bounds::validate_regime(
        &config.regime_params(),
        config.l as f64 * config.mu * config.mu,
    );
    let mut body = serde_json::to_vec_pretty(&report)?;
    body.push(b'\n');
    write_output(None, &body)?;
    Ok(report.passed())
}

fn cmd_bounds(args: &ConfigOnlyArgs) -> Result<()> {
    let config = read_config_analytical(&args.config)?;
    let values = bound_values(&config)?;
    let mut body = serde_json::to_vec_pretty(&values)?;
    body.push(b'\n');
    write_output(None, &body)
}

fn cmd_gen(args: &GenArgs) -> Result<()> {
    use rand::{Rng, SeedableRng};
    let mut stream = rand_chacha::ChaCha8Rng::seed_from_u64(args.seed);
    let matrix_seed = stream.next_u64();
    let signal_seed = stream.next_u64();
    let noise_seed = stream.next_u64();
    let a = gen_gaussian_matrix::<f64>(args.n, args.m, matrix_seed)?;
    let x = gen_sparse_signal::<f64>(args.m, args.l, args.mu, args.rule.into(), signal_seed)?;
    let inst = measure(a, x, args.sigma2, noise_seed)?;
    let mut body = serde_json::to_vec_pretty(&inst.to_document())?;
    body.push(b'\n');
    write_output(args.out.as_deref(), &body)
}

/// Entry point used by the binary.
pub fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::Decode(args) => cmd_decode(args),
        Command::Experiment(args) => cmd_experiment(args),
        Command::Sweep(args) => cmd_sweep(args),
        Command::Validate(args) => match cmd_validate(args) {
            Ok(true) => Ok(()),
            Ok(false) => {
                eprintln!("regime validation failed");
                return ExitCode::from(2);
            }
            Err(e) => Err(e),
        },
        Command::Bounds(args) => cmd_bounds(args),
        Command::Gen(args) => cmd_gen(args),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_validation() { 2 } else { 1 })
        }
    }
}
