use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use nttkit::bench::{
    emit, run_bench, BenchConfig, BenchError, Kernel, OutputFormat, DEFAULT_SEED, MIN_REPS,
    TIMING_NOTE,
};

/// Verify and time NTT and element-wise kernels against naive baselines.
#[derive(Debug, Parser)]
#[command(name = "nttkit-bench", version)]
struct Args {
    /// Kernel name(s), comma separated, or `all`.
    #[arg(long, default_value = "all", value_delimiter = ',')]
    kernel: Vec<String>,

    /// Transform lengths.
    #[arg(long = "n", default_values_t = [1024usize, 4096, 16384], value_delimiter = ',')]
    sizes: Vec<usize>,

    /// Modulus bit sizes.
    #[arg(long, default_values_t = [50u32], value_delimiter = ',')]
    q_bits: Vec<u32>,

    /// Timed repetitions per variant (at least 10).
    #[arg(long, default_value_t = MIN_REPS)]
    reps: usize,

    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,

    /// csv, json or table.
    #[arg(long, default_value = "table")]
    format: String,

    /// Write results here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn parse_kernels(names: &[String]) -> Result<Vec<Kernel>, BenchError> {
    if names.iter().any(|n| n == "all") {
        return Ok(Kernel::ALL.to_vec());
    }
    names.iter().map(|n| n.parse()).collect()
}

fn run(args: Args) -> Result<(), BenchError> {
    let format: OutputFormat = args.format.parse()?;
    let config = BenchConfig {
        kernels: parse_kernels(&args.kernel)?,
        sizes: args.sizes,
        q_bits: args.q_bits,
        reps: args.reps,
        seed: args.seed,
    };
    config.validate()?;
    let sink: Box<dyn Write> = match &args.out {
        Some(path) => Box::new(BufWriter::new(File::create(path)?)),
        None => Box::new(io::stdout().lock()),
    };
    let records = run_bench(&config)?;
    eprintln!("# {TIMING_NOTE}; seed={}", config.seed);
    emit(&records, format, sink)
}

fn main() -> ExitCode {
    match run(Args::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("nttkit-bench: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
