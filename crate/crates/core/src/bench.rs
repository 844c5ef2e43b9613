//! Benchmark harness: times optimized kernels against eager-`%` baselines.
//!
//! Inputs come from a seeded ChaCha stream, every optimized output is checked
//! against the naive result before anything is timed, and records are
//! produced in a fixed order (kernel, n, q_bits, variant).

use std::fmt;
use std::hint::black_box;
use std::io::Write;
use std::str::FromStr;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::eltwise::{
    add_mod_into, fma_mod_with_shift_into, mult_mod_float_into, mult_mod_int_into,
    FLOAT_PATH_MAX_MODULUS, FMA_MAX_MODULUS,
};
use crate::modarith::{naive_mul_mod, ntt_primes, BitShift, Modulus};
use crate::ntt::{CoeffVec, NttTables};
use crate::ring::poly_mult_mod;

pub const DEFAULT_SIZES: [usize; 3] = [1024, 4096, 16384];
pub const DEFAULT_Q_BITS: u32 = 50;
pub const MIN_REPS: usize = 10;
pub const DEFAULT_SEED: u64 = 0x4e54_544b;

/// One repetition is sized to take at least this long.
const MIN_REP_TIME: Duration = Duration::from_micros(200);
const MAX_ITERS_PER_REP: u32 = 1000;

pub const TIMING_NOTE: &str =
    "timing: monotonic clock, median of repetitions after one warm-up run; single-threaded; no CPU pinning";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Kernel {
    FwdNtt,
    InvNtt,
    EltwiseMult,
    EltwiseFma,
    EltwiseAdd,
    PolyMult,
}

impl Kernel {
    pub const ALL: [Kernel; 6] = [
        Kernel::FwdNtt,
        Kernel::InvNtt,
        Kernel::EltwiseMult,
        Kernel::EltwiseFma,
        Kernel::EltwiseAdd,
        Kernel::PolyMult,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Kernel::FwdNtt => "fwd_ntt",
            Kernel::InvNtt => "inv_ntt",
            Kernel::EltwiseMult => "eltwise_mult",
            Kernel::EltwiseFma => "eltwise_fma",
            Kernel::EltwiseAdd => "eltwise_add",
            Kernel::PolyMult => "poly_mult",
        }
    }
}

impl fmt::Display for Kernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Kernel {
    type Err = BenchError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Kernel::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| BenchError::Config(format!("unknown kernel '{s}'")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    Naive,
    #[serde(rename = "optimized_64")]
    Optimized64,
    #[serde(rename = "optimized_52")]
    Optimized52,
    Float,
}

impl Variant {
    pub const ALL: [Variant; 4] = [
        Variant::Naive,
        Variant::Optimized64,
        Variant::Optimized52,
        Variant::Float,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Variant::Naive => "naive",
            Variant::Optimized64 => "optimized_64",
            Variant::Optimized52 => "optimized_52",
            Variant::Float => "float",
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// One timing row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRecord {
    pub kernel: Kernel,
    pub n: usize,
    pub q_bits: u32,
    pub variant: Variant,
    pub median_ns: f64,
    pub speedup_vs_naive: f64,
}

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("verification failed: {kernel}/{variant} at n={n}, q_bits={q_bits} disagrees with the naive result at index {index}")]
    Verification {
        kernel: Kernel,
        variant: Variant,
        n: usize,
        q_bits: u32,
        index: usize,
    },

    #[error("output error: {0}")]
    Io(#[from] std::io::Error),
}

impl BenchError {
    /// Process exit code for the CLI.
    pub fn exit_code(&self) -> i32 {
        match self {
            BenchError::Config(_) => 2,
            BenchError::Verification { .. } => 3,
            BenchError::Io(_) => 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BenchConfig {
    pub kernels: Vec<Kernel>,
    pub sizes: Vec<usize>,
    pub q_bits: Vec<u32>,
    pub reps: usize,
    pub seed: u64,
}

impl Default for BenchConfig {
    fn default() -> Self {
        BenchConfig {
            kernels: Kernel::ALL.to_vec(),
            sizes: DEFAULT_SIZES.to_vec(),
            q_bits: vec![DEFAULT_Q_BITS],
            reps: MIN_REPS,
            seed: DEFAULT_SEED,
        }
    }
}

impl BenchConfig {
    pub fn validate(&self) -> Result<(), BenchError> {
        let err = |msg: String| Err(BenchError::Config(msg));
        if self.kernels.is_empty() || self.sizes.is_empty() || self.q_bits.is_empty() {
            return err("kernels, sizes and q_bits must be non-empty".into());
        }
        if self.reps < MIN_REPS {
            return err(format!(
                "reps must be at least {MIN_REPS}, got {}",
                self.reps
            ));
        }
        for &n in &self.sizes {
            if !(2..=crate::ntt::MAX_LEN).contains(&n) || !n.is_power_of_two() {
                return err(format!("n = {n} is not a power of two in [2, 2^20]"));
            }
        }
        for &bits in &self.q_bits {
            if !(2..=62).contains(&bits) {
                return err(format!("q_bits = {bits} outside [2, 62]"));
            }
            for &n in &self.sizes {
                if ntt_primes(bits, n, 1).is_empty() {
                    return err(format!("no {bits}-bit prime with q = 1 mod {}", 2 * n));
                }
            }
        }
        Ok(())
    }
}

/// The modulus used for a `(n, q_bits)` group: the largest `q_bits`-bit
/// prime with `q = 1 mod 2n`.
pub fn group_modulus(n: usize, q_bits: u32) -> Option<u64> {
    ntt_primes(q_bits, n, 1).first().copied()
}

/// Variants that are legal for `kernel` with modulus `q`, in record order.
/// Empty when the kernel cannot run on `q` at all.
pub fn legal_variants(kernel: Kernel, q: u64) -> Vec<Variant> {
    let fits52 = |v: u64| BitShift::Bits52.fits(v as u128);
    let optimized: Vec<Variant> = match kernel {
        Kernel::FwdNtt | Kernel::InvNtt | Kernel::PolyMult => {
            let mut v = vec![Variant::Optimized64];
            if fits52(4 * q) {
                v.push(Variant::Optimized52);
            }
            v
        }
        Kernel::EltwiseMult => {
            let mut v = vec![Variant::Optimized64];
            if q < FLOAT_PATH_MAX_MODULUS {
                v.push(Variant::Float);
            }
            v
        }
        Kernel::EltwiseFma => {
            if q >= FMA_MAX_MODULUS {
                return Vec::new();
            }
            let mut v = vec![Variant::Optimized64];
            if fits52(q) {
                v.push(Variant::Optimized52);
            }
            v
        }
        Kernel::EltwiseAdd => vec![Variant::Optimized64],
    };
    std::iter::once(Variant::Naive).chain(optimized).collect()
}

/// Deterministic inputs for one group.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Inputs {
    pub a: Vec<u64>,
    pub b: Vec<u64>,
    pub scalar: u64,
}

pub fn generate_inputs(seed: u64, kernel: Kernel, n: usize, q: u64) -> Inputs {
    let group_seed = seed
        ^ (kernel as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15)
        ^ (n as u64).rotate_left(17)
        ^ q.rotate_left(41);
    let mut rng = ChaCha8Rng::seed_from_u64(group_seed);
    let a = (0..n).map(|_| rng.gen_range(0..q)).collect();
    let b = (0..n).map(|_| rng.gen_range(0..q)).collect();
    let scalar = rng.gen_range(1..q);
    Inputs { a, b, scalar }
}

struct Group {
    kernel: Kernel,
    q: u64,
    modulus: Modulus,
    inputs: Inputs,
    tables64: NttTables,
    tables52: Option<NttTables>,
}

impl Group {
    fn new(kernel: Kernel, n: usize, q: u64, seed: u64) -> Result<Self, BenchError> {
        let cfg = |e: crate::error::Error| BenchError::Config(e.to_string());
        let modulus = Modulus::new(q).map_err(cfg)?;
        let tables64 = NttTables::with_options(n, q, None, Some(BitShift::Bits64)).map_err(cfg)?;
        let tables52 = if BitShift::Bits52.fits(4 * q as u128) {
            Some(NttTables::with_options(n, q, None, Some(BitShift::Bits52)).map_err(cfg)?)
        } else {
            None
        };
        Ok(Group {
            kernel,
            q,
            modulus,
            inputs: generate_inputs(seed, kernel, n, q),
            tables64,
            tables52,
        })
    }

    fn tables(&self, variant: Variant) -> &NttTables {
        match variant {
            Variant::Optimized52 => self.tables52.as_ref().expect("52-bit tables"),
            _ => &self.tables64,
        }
    }

    /// Runs the kernel once, writing into `out` (length n).
    fn run(&self, variant: Variant, out: &mut [u64]) {
        let q = self.q;
        let Inputs { a, b, scalar } = &self.inputs;
        let shift = if variant == Variant::Optimized52 {
            BitShift::Bits52
        } else {
            BitShift::Bits64
        };
        match (self.kernel, variant) {
            (Kernel::FwdNtt, Variant::Naive) => {
                out.copy_from_slice(a);
                self.tables64.forward_naive(out);
            }
            (Kernel::FwdNtt, v) => self.tables(v).compute_forward(out, a, 1, 1).unwrap(),
            (Kernel::InvNtt, Variant::Naive) => {
                out.copy_from_slice(a);
                self.tables64.inverse_naive(out);
            }
            (Kernel::InvNtt, v) => self.tables(v).compute_inverse(out, a, 1, 1).unwrap(),
            (Kernel::EltwiseMult, Variant::Naive) => {
                for ((o, &x), &y) in out.iter_mut().zip(a).zip(b) {
                    *o = naive_mul_mod(x, y, q);
                }
            }
            (Kernel::EltwiseMult, Variant::Float) => {
                mult_mod_float_into(out, a, b, &self.modulus, 1).unwrap()
            }
            (Kernel::EltwiseMult, _) => mult_mod_int_into(out, a, b, &self.modulus, 1).unwrap(),
            (Kernel::EltwiseFma, Variant::Naive) => {
                for ((o, &x), &z) in out.iter_mut().zip(a).zip(b) {
                    *o = ((x as u128 * *scalar as u128 + z as u128) % q as u128) as u64;
                }
            }
            (Kernel::EltwiseFma, _) => {
                fma_mod_with_shift_into(out, a, *scalar, Some(b), &self.modulus, 1, shift).unwrap()
            }
            (Kernel::EltwiseAdd, Variant::Naive) => {
                for ((o, &x), &y) in out.iter_mut().zip(a).zip(b) {
                    *o = (x + y) % q;
                }
            }
            (Kernel::EltwiseAdd, _) => add_mod_into(out, a, b, &self.modulus).unwrap(),
            (Kernel::PolyMult, Variant::Naive) => {
                let t = &self.tables64;
                let mut fa = a.clone();
                let mut fb = b.clone();
                t.forward_naive(&mut fa);
                t.forward_naive(&mut fb);
                for ((o, &x), &y) in out.iter_mut().zip(&fa).zip(&fb) {
                    *o = naive_mul_mod(x, y, q);
                }
                t.inverse_naive(out);
            }
            (Kernel::PolyMult, v) => {
                let r = poly_mult_mod(
                    &CoeffVec::reduced(a.clone()),
                    &CoeffVec::reduced(b.clone()),
                    self.tables(v),
                )
                .unwrap();
                out.copy_from_slice(r.data());
            }
        }
    }
}

/// Compares an optimized output with the naive one.
pub fn verify(
    kernel: Kernel,
    variant: Variant,
    q_bits: u32,
    expected: &[u64],
    actual: &[u64],
) -> Result<(), BenchError> {
    let mismatch = expected
        .iter()
        .zip(actual)
        .position(|(e, a)| e != a)
        .or((expected.len() != actual.len()).then(|| expected.len().min(actual.len())));
    match mismatch {
        Some(index) => Err(BenchError::Verification {
            kernel,
            variant,
            n: expected.len(),
            q_bits,
            index,
        }),
        None => Ok(()),
    }
}

fn median(mut samples: Vec<f64>) -> f64 {
    samples.sort_by(|a, b| a.total_cmp(b));
    let mid = samples.len() / 2;
    if samples.len().is_multiple_of(2) {
        (samples[mid - 1] + samples[mid]) / 2.0
    } else {
        samples[mid]
    }
}

/// Median nanoseconds per call of `f` over `reps` repetitions.
fn time_median<F: FnMut()>(reps: usize, mut f: F) -> f64 {
    f();
    let start = Instant::now();
    f();
    let once = start.elapsed().max(Duration::from_nanos(1));
    let iters =
        (MIN_REP_TIME.as_nanos() / once.as_nanos()).clamp(1, MAX_ITERS_PER_REP as u128) as u32;
    let samples = (0..reps)
        .map(|_| {
            let start = Instant::now();
            for _ in 0..iters {
                f();
            }
            start.elapsed().as_nanos() as f64 / iters as f64
        })
        .collect();
    median(samples)
}

/// Verifies and times every legal `(kernel, n, q_bits, variant)` combination.
pub fn run_bench(config: &BenchConfig) -> Result<Vec<BenchRecord>, BenchError> {
    config.validate()?;
    let mut records = Vec::new();
    for &kernel in &config.kernels {
        for &n in &config.sizes {
            for &q_bits in &config.q_bits {
                let q = group_modulus(n, q_bits).ok_or_else(|| {
                    BenchError::Config(format!("no {q_bits}-bit NTT prime for n = {n}"))
                })?;
                let variants = legal_variants(kernel, q);
                if variants.is_empty() {
                    continue;
                }
                let group = Group::new(kernel, n, q, config.seed)?;

                let mut expected = vec![0u64; n];
                group.run(Variant::Naive, &mut expected);
                let mut out = vec![0u64; n];
                for &v in &variants[1..] {
                    out.fill(0);
                    group.run(v, &mut out);
                    verify(kernel, v, q_bits, &expected, &out)?;
                }

                let mut naive_ns = None;
                for &v in &variants {
                    let ns = time_median(config.reps, || {
                        group.run(v, &mut out);
                        black_box(&mut out);
                    });
                    let base = *naive_ns.get_or_insert(ns);
                    records.push(BenchRecord {
                        kernel,
                        n,
                        q_bits,
                        variant: v,
                        median_ns: ns,
                        speedup_vs_naive: base / ns,
                    });
                }
            }
        }
    }
    Ok(records)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputFormat {
    Csv,
    Json,
    Table,
}

impl FromStr for OutputFormat {
    type Err = BenchError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "csv" => Ok(OutputFormat::Csv),
            "json" => Ok(OutputFormat::Json),
            "table" => Ok(OutputFormat::Table),
            _ => Err(BenchError::Config(format!("unknown format '{s}'"))),
        }
    }
}

pub const CSV_HEADER: [&str; 6] = [
    "kernel",
    "n",
    "q_bits",
    "variant",
    "median_ns",
    "speedup_vs_naive",
];

pub fn emit<W: Write>(
    records: &[BenchRecord],
    format: OutputFormat,
    mut out: W,
) -> Result<(), BenchError> {
    match format {
        OutputFormat::Csv => {
            let mut w = csv::WriterBuilder::new()
                .has_headers(false)
                .from_writer(out);
            w.write_record(CSV_HEADER).map_err(csv_err)?;
            for r in records {
                w.serialize(r).map_err(csv_err)?;
            }
            w.flush()?;
        }
        OutputFormat::Json => {
            serde_json::to_writer_pretty(&mut out, records).map_err(std::io::Error::from)?;
            writeln!(out)?;
        }
        OutputFormat::Table => {
            writeln!(
                out,
                "{:<13} {:>7} {:>6} {:<13} {:>14} {:>8}",
                "kernel", "n", "q_bits", "variant", "median_ns", "speedup"
            )?;
            for r in records {
                writeln!(
                    out,
                    "{:<13} {:>7} {:>6} {:<13} {:>14.1} {:>7.2}x",
                    r.kernel.name(),
                    r.n,
                    r.q_bits,
                    r.variant.name(),
                    r.median_ns,
                    r.speedup_vs_naive
                )?;
            }
            writeln!(out, "# {TIMING_NOTE}")?;
        }
    }
    Ok(())
}

fn csv_err(e: csv::Error) -> BenchError {
    BenchError::Io(std::io::Error::other(e))
}
