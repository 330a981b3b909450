use std::fs::{self, File};
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use fullpack::{pack, read_packed, unpack, write_packed, BitWidth, KernelId, SubByteTensor};
use fullpack_cli::config::parse_kernels;
use fullpack_cli::{
    emit_csv, parse_sizes, run_scenario, run_sweep, run_verify, BenchReport, HarnessError, LayerScenario, Result,
    Runner, SweepConfig,
};

#[derive(Parser)]
#[command(name = "fullpack", version, about = "Sub-byte GEMV kernels: benchmarks, verification and packed files")]
struct Cli {
    /// Use the portable backend even when a hardware vector unit is available.
    #[arg(long, global = true)]
    portable: bool,

    /// Corrupt one kernel's output to exercise the verification path.
    #[arg(long, global = true, hide = true, value_name = "KERNEL")]
    inject_fault: Option<String>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Time kernels over a grid of matrix sizes against the 8-bit baseline.
    Sweep(SweepArgs),
    /// Time a multi-layer model with one kernel on its single-batch layers.
    Scenario(ScenarioArgs),
    /// Cross-check kernels against the scalar reference on random shapes.
    Verify(VerifyArgs),
    /// Pack a raw file of signed bytes (one value per byte) into a packed file.
    Pack(PackArgs),
    /// Expand a packed file back to one signed byte per value.
    Unpack(UnpackArgs),
}

#[derive(Args)]
struct TimingArgs {
    #[arg(long)]
    iters: Option<usize>,
    #[arg(long)]
    warmup: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Write the CSV report here instead of stdout.
    #[arg(long, short)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct SweepArgs {
    /// Comma-separated kernels, e.g. `w4a8,w8a8,naive_w4a8`, or `all`.
    #[arg(long, default_value = "all")]
    kernels: String,
    /// `START:STOP:xFACTOR` grid or a list like `512x512,1024x256`.
    #[arg(long, default_value = "128:8192:x2")]
    sizes: String,
    #[command(flatten)]
    timing: TimingArgs,
}

#[derive(Args)]
struct ScenarioArgs {
    /// Scenario file; the built-in speech model is used when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, default_value = "w4a4")]
    kernel: String,
    #[command(flatten)]
    timing: TimingArgs,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long, default_value = "all,w8a8,naive_w4a8")]
    kernels: String,
    #[arg(long, default_value_t = 100)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct PackArgs {
    #[arg(long)]
    bits: u8,
    #[arg(long)]
    rows: usize,
    #[arg(long)]
    cols: usize,
    input: PathBuf,
    output: PathBuf,
}

#[derive(Args)]
struct UnpackArgs {
    input: PathBuf,
    output: PathBuf,
}

fn config_err(msg: impl Into<String>) -> HarnessError {
    HarnessError::Config(msg.into())
}

fn single_kernel(name: &str) -> Result<KernelId> {
    match parse_kernels(name)?.as_slice() {
        [id] => Ok(*id),
        _ => Err(config_err(format!("expected one kernel, got {name:?}"))),
    }
}

fn write_report(report: &BenchReport, output: Option<&Path>) -> Result<()> {
    match output {
        Some(path) => emit_csv(report, BufWriter::new(File::create(path)?))?,
        None => emit_csv(report, io::stdout().lock())?,
    }
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    let mut runner = Runner::new(!cli.portable);
    if let Some(name) = &cli.inject_fault {
        runner = runner.with_fault(single_kernel(name)?);
    }

    match cli.command {
        Command::Sweep(args) => {
            let mut cfg = SweepConfig::default_grid(parse_kernels(&args.kernels)?);
            cfg.sizes = parse_sizes(&args.sizes)?;
            cfg.iters = args.timing.iters.unwrap_or(cfg.iters);
            cfg.warmup = args.timing.warmup.unwrap_or(cfg.warmup);
            cfg.seed = args.timing.seed.unwrap_or(cfg.seed);
            let report = run_sweep(&cfg, &runner)?;
            write_report(&report, args.timing.output.as_deref())
        }
        Command::Scenario(args) => {
            let mut scenario = match &args.config {
                Some(path) => LayerScenario::parse(&fs::read_to_string(path)?)?,
                None => LayerScenario::speech_model(),
            };
            scenario.iters = args.timing.iters.unwrap_or(scenario.iters);
            scenario.warmup = args.timing.warmup.unwrap_or(scenario.warmup);
            scenario.seed = args.timing.seed.unwrap_or(scenario.seed);
            let report = run_scenario(&scenario, single_kernel(&args.kernel)?, &runner)?;
            write_report(&report, args.timing.output.as_deref())
        }
        Command::Verify(args) => {
            let kernels = parse_kernels(&args.kernels)?;
            if args.trials == 0 {
                return Err(config_err("trials must be at least 1"));
            }
            let summary = run_verify(&kernels, args.trials, args.seed, &runner)?;
            let mut out = io::stdout().lock();
            writeln!(out, "backend: {}", runner.backend().name())?;
            for k in &summary.kernels {
                let status = if k.mismatches == 0 { "ok" } else { "MISMATCH" };
                write!(
                    out,
                    "{:<12} {:>5} trials {:>5} mismatches  {status}",
                    k.kernel.to_string(),
                    k.trials,
                    k.mismatches
                )?;
                if let Some((rows, cols)) = k.first_failure {
                    write!(out, " (first at {rows}x{cols})")?;
                }
                writeln!(out)?;
            }
            match summary.kernels.iter().find(|k| k.mismatches > 0) {
                Some(k) => {
                    let (rows, cols) = k.first_failure.unwrap_or_default();
                    Err(HarnessError::Verification { kernel: k.kernel, rows, cols })
                }
                None => Ok(()),
            }
        }
        Command::Pack(args) => {
            let bits = BitWidth::try_from(args.bits).map_err(|e| config_err(e.to_string()))?;
            let raw = fs::read(&args.input)?;
            if raw.len() != args.rows * args.cols {
                return Err(config_err(format!(
                    "{} holds {} values, expected {}x{}",
                    args.input.display(),
                    raw.len(),
                    args.rows,
                    args.cols
                )));
            }
            let values = raw.into_iter().map(|b| b as i8).collect();
            let packed = pack(&SubByteTensor::new(bits, args.rows, args.cols, values)?)?;
            let mut out = BufWriter::new(File::create(&args.output)?);
            write_packed(&packed, &mut out)?;
            out.flush()?;
            Ok(())
        }
        Command::Unpack(args) => {
            let packed = read_packed(BufReader::new(File::open(&args.input)?))?;
            let values: Vec<u8> = unpack(&packed)?.into_values().into_iter().map(|v| v as u8).collect();
            fs::write(&args.output, values)?;
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(3) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
