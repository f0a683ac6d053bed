//! `spbench`: convert, generate, benchmark, analyze and validate sparse
//! tensors from the command line.
//!
//! Mode numbers on the command line are 1-based, like the indices in `.tns`
//! files.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use spbench_core::analysis::{
    load_platforms, memory_bytes, operational_intensity, preset, roofline_bound, work_flops,
    AnalysisParams, Format, RooflinePlatform,
};
use spbench_core::generators::{
    bundled_tensor, bundled_tensors, skewed_initiator, GeneratorSpec, Initiator, KroneckerSpec,
    PowerLawSpec,
};
use spbench_core::harness::{emit_report, ReportFormat};
use spbench_core::io::{read_tns, write_tns};
use spbench_core::kernels::WORKERS_ENV;
use spbench_core::{
    bench, BenchConfig, CooTensor, Executor, HicooTensor, KernelId, MttkrpStrategy, Precision,
    StorageBytes, TensorSource, Validate,
};

#[derive(Parser)]
#[command(
    name = "spbench",
    version,
    about = "Sparse tensor kernel benchmark suite"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Convert a .tns tensor to another storage format (.tns or .json output).
    Convert(ConvertArgs),
    /// Generate a synthetic tensor.
    Generate(GenerateArgs),
    /// Run the benchmark suite.
    Bench(BenchArgs),
    /// Print modeled work, traffic, operational intensity and Roofline bound.
    Analyze(AnalyzeArgs),
    /// Check a tensor file against its representation invariants.
    Validate(ValidateArgs),
}

#[derive(Args)]
struct ConvertArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    output: PathBuf,
    #[arg(long, default_value = "hicoo")]
    format: Format,
    #[arg(long, default_value_t = 128)]
    block_size: u32,
    /// 1-based modes to compress for gHiCOO; all but the last by default.
    #[arg(long, value_delimiter = ',')]
    compressed_modes: Option<Vec<usize>>,
}

#[derive(Args)]
struct GenerateArgs {
    #[command(subcommand)]
    model: GenerateModel,
}

#[derive(Subcommand)]
enum GenerateModel {
    /// Stochastic Kronecker tensor.
    Kron(KronArgs),
    /// Power-law tensor with small dense modes.
    Powerlaw(PowerLawArgs),
    /// One of the bundled presets; lists them without --name.
    Bundled(BundledArgs),
}

#[derive(Args)]
struct OutputArgs {
    #[arg(long)]
    seed: Option<u64>,
    /// .tns output file; .json writes the generator spec instead.
    #[arg(long)]
    output: PathBuf,
}

#[derive(Args)]
struct KronArgs {
    /// Target dimensions, comma separated.
    #[arg(long, value_delimiter = ',', required = true)]
    dims: Vec<u32>,
    #[arg(long)]
    iterations: u32,
    #[arg(long)]
    samples: u64,
    /// Row-major 2x..x2 initiator probabilities; a skewed one by default.
    #[arg(long, value_delimiter = ',')]
    initiator: Option<Vec<f64>>,
    #[arg(long, default_value_t = 0.95)]
    hi: f64,
    #[arg(long, default_value_t = 0.55)]
    lo: f64,
    #[command(flatten)]
    out: OutputArgs,
}

#[derive(Args)]
struct PowerLawArgs {
    #[arg(long, value_delimiter = ',', required = true)]
    dims: Vec<u32>,
    /// 1-based modes sampled uniformly and fully covered.
    #[arg(long, value_delimiter = ',', required = true)]
    dense_modes: Vec<usize>,
    #[arg(long)]
    nnz: u64,
    #[arg(long, default_value_t = 1.2)]
    alpha: f64,
    #[command(flatten)]
    out: OutputArgs,
}

#[derive(Args)]
struct BundledArgs {
    #[arg(long)]
    name: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum StrategyArg {
    Atomic,
    Privatized,
}

#[derive(Args)]
struct BenchArgs {
    /// .tns files, .json generator specs or bundled preset names.
    #[arg(long, value_delimiter = ',', required = true)]
    tensors: Vec<String>,
    #[arg(long, value_delimiter = ',', default_value = "tew,ts,ttv,ttm,mttkrp")]
    kernels: Vec<KernelId>,
    #[arg(long, value_delimiter = ',', default_value = "coo,hicoo")]
    formats: Vec<Format>,
    /// 1-based modes for the per-mode kernels; all modes by default.
    #[arg(long, value_delimiter = ',')]
    modes: Option<Vec<usize>>,
    #[arg(short = 'R', long = "rank", default_value_t = 16)]
    rank: usize,
    #[arg(long, default_value_t = 128)]
    block_size: u32,
    /// 1-based modes compressed by the ghicoo format.
    #[arg(long, value_delimiter = ',')]
    compressed_modes: Option<Vec<usize>>,
    #[arg(long, default_value_t = 5)]
    reps: usize,
    #[arg(long, env = WORKERS_ENV)]
    workers: Option<usize>,
    /// Preset name or a platform file; NAME@FILE picks one entry of a file.
    #[arg(long, default_value = "bluesky")]
    platform: String,
    #[arg(long, default_value = "f32")]
    precision: Precision,
    #[arg(long, default_value_t = 0x5eed)]
    seed: u64,
    #[arg(long, value_enum, default_value = "atomic")]
    mttkrp_strategy: StrategyArg,
    #[arg(long)]
    csv: Option<PathBuf>,
    #[arg(long)]
    svg: Option<PathBuf>,
    /// Full results with per-mode timings as JSON.
    #[arg(long)]
    json: Option<PathBuf>,
}

#[derive(Args)]
struct AnalyzeArgs {
    #[arg(long)]
    nnz: u64,
    #[arg(long)]
    nfibs: Option<u64>,
    #[arg(short = 'R', long = "rank", default_value_t = 16)]
    rank: u64,
    #[arg(long)]
    nblocks: Option<u64>,
    #[arg(long, default_value_t = 128)]
    block_size: u32,
    #[arg(long, default_value_t = 3)]
    order: u32,
    #[arg(long, default_value = "bluesky")]
    platform: String,
}

#[derive(Args)]
struct ValidateArgs {
    #[arg(long)]
    input: PathBuf,
}

fn zero_based(modes: &[usize], what: &str) -> Result<Vec<usize>> {
    modes
        .iter()
        .map(|&m| {
            m.checked_sub(1)
                .ok_or_else(|| anyhow!("{what}: modes are 1-based, got 0"))
        })
        .collect()
}

fn is_json(p: &Path) -> bool {
    p.extension()
        .is_some_and(|e| e.eq_ignore_ascii_case("json"))
}

fn write_json<T: serde::Serialize>(value: &T, path: &Path) -> Result<()> {
    let f = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    let mut w = BufWriter::new(f);
    serde_json::to_writer(&mut w, value)?;
    w.flush()?;
    Ok(())
}

fn resolve_platform(arg: &str) -> Result<RooflinePlatform> {
    if let Ok(p) = preset(arg) {
        return Ok(p);
    }
    let (name, file) = match arg.split_once('@') {
        Some((n, f)) => (Some(n), f),
        None => (None, arg),
    };
    let all = load_platforms(Path::new(file))
        .with_context(|| format!("'{arg}' is neither a preset nor a readable platform file"))?;
    match name {
        Some(n) => all
            .into_iter()
            .find(|p| p.name.eq_ignore_ascii_case(n))
            .ok_or_else(|| anyhow!("no platform '{n}' in {file}")),
        None => all
            .into_iter()
            .next()
            .ok_or_else(|| anyhow!("{file} defines no platform")),
    }
}

fn convert(a: ConvertArgs) -> Result<()> {
    let x: CooTensor<f64> = read_tns(&a.input)?;
    let report = |bytes: u64| {
        println!(
            "{}: order {}, nnz {}, {} format, {} bytes",
            a.input.display(),
            x.order(),
            x.nnz(),
            a.format,
            bytes
        );
    };
    match a.format {
        Format::Coo => {
            report(x.storage_bytes());
            if is_json(&a.output) {
                write_json(&x, &a.output)?;
            } else {
                write_tns(&x, &a.output)?;
            }
        }
        Format::Hicoo | Format::GHicoo => {
            let h = if a.format == Format::Hicoo {
                HicooTensor::from_coo(&x, a.block_size)?
            } else {
                let comp = match &a.compressed_modes {
                    Some(m) => zero_based(m, "--compressed-modes")?,
                    None => (0..x.order().saturating_sub(1)).collect(),
                };
                HicooTensor::from_coo_compressed(&x, &comp, a.block_size)?
            };
            report(h.storage_bytes());
            println!("blocks: {}", h.nblocks());
            if is_json(&a.output) {
                write_json(&h, &a.output)?;
            } else {
                write_tns(&h.to_coo(), &a.output)?;
            }
        }
    }
    Ok(())
}

fn emit_spec(spec: GeneratorSpec, seed: Option<u64>, output: &Path) -> Result<()> {
    let spec = match seed {
        Some(s) => spec.with_seed(s),
        None => spec,
    };
    if is_json(output) {
        return write_json(&spec, output);
    }
    let t: CooTensor<f64> = spec.generate()?;
    write_tns(&t, output)?;
    println!(
        "wrote {}: dims {:?}, nnz {}",
        output.display(),
        t.dims(),
        t.nnz()
    );
    Ok(())
}

fn generate(a: GenerateArgs) -> Result<()> {
    match a.model {
        GenerateModel::Kron(k) => {
            let order = k.dims.len();
            let initiator = match k.initiator {
                Some(p) => Initiator::new(vec![2; order], p)?,
                None => skewed_initiator(order, k.hi, k.lo),
            };
            let spec = KroneckerSpec {
                initiator,
                iterations: k.iterations,
                target_dims: k.dims,
                sample_count: k.samples,
                seed: 0,
            };
            spec.validate()?;
            emit_spec(
                GeneratorSpec::Kronecker(spec),
                Some(k.out.seed.unwrap_or(0)),
                &k.out.output,
            )
        }
        GenerateModel::Powerlaw(p) => {
            let dense = zero_based(&p.dense_modes, "--dense-modes")?;
            let sparse = (0..p.dims.len()).filter(|m| !dense.contains(m)).collect();
            let spec = PowerLawSpec {
                dims: p.dims,
                sparse_modes: sparse,
                dense_modes: dense,
                nnz_target: p.nnz,
                alpha: p.alpha,
                seed: 0,
            };
            spec.validate()?;
            emit_spec(
                GeneratorSpec::PowerLaw(spec),
                Some(p.out.seed.unwrap_or(0)),
                &p.out.output,
            )
        }
        GenerateModel::Bundled(b) => match b.name {
            None => {
                for t in bundled_tensors() {
                    println!("{:<14} {}", t.name, t.description);
                }
                Ok(())
            }
            Some(name) => {
                let output = b
                    .output
                    .ok_or_else(|| anyhow!("--output is required with --name"))?;
                emit_spec(bundled_tensor(&name)?.spec, b.seed, &output)
            }
        },
    }
}

fn tensor_source(arg: &str) -> Result<TensorSource> {
    let path = Path::new(arg);
    if is_json(path) {
        let text =
            std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let spec: GeneratorSpec =
            serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
        let name = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| arg.to_string());
        return Ok(TensorSource::Generated { name, spec });
    }
    if path.exists() || arg.ends_with(".tns") {
        return Ok(TensorSource::File(path.to_path_buf()));
    }
    bundled_tensor(arg).map_err(|_| anyhow!("'{arg}' is not a file or a bundled tensor name"))?;
    Ok(TensorSource::Bundled(arg.to_string()))
}

fn run_bench(a: BenchArgs) -> Result<()> {
    let config = BenchConfig {
        kernels: a.kernels,
        formats: a.formats,
        tensors: a
            .tensors
            .iter()
            .map(|t| tensor_source(t))
            .collect::<Result<_>>()?,
        modes: a
            .modes
            .as_deref()
            .map(|m| zero_based(m, "--modes"))
            .transpose()?,
        rank: a.rank,
        block_size: a.block_size,
        compressed_modes: a
            .compressed_modes
            .as_deref()
            .map(|m| zero_based(m, "--compressed-modes"))
            .transpose()?,
        repetitions: a.reps,
        workers: a.workers.unwrap_or_else(Executor::default_workers),
        platform: resolve_platform(&a.platform)?,
        precision: a.precision,
        seed: a.seed,
        mttkrp_strategy: match a.mttkrp_strategy {
            StrategyArg::Atomic => MttkrpStrategy::Atomic,
            StrategyArg::Privatized => MttkrpStrategy::Privatized,
        },
        ..Default::default()
    };
    let result = bench(&config)?;
    println!(
        "{:<16} {:<7} {:<7} {:>12} {:>10} {:>10} {:>10} {:>10}",
        "tensor", "kernel", "format", "time_s", "oi", "gflops", "bound", "eff"
    );
    for r in &result.reports {
        match &r.error {
            None => println!(
                "{:<16} {:<7} {:<7} {:>12.6e} {:>10.4} {:>10.4} {:>10.3} {:>10.4}",
                r.tensor,
                r.kernel,
                r.format,
                r.time_s,
                r.oi,
                r.gflops,
                r.bound_gflops,
                r.efficiency
            ),
            Some(e) => println!(
                "{:<16} {:<7} {:<7} error: {e}",
                r.tensor, r.kernel, r.format
            ),
        }
    }
    if result.reports.is_empty() {
        bail!("nothing was benchmarked");
    }
    if let Some(p) = &a.csv {
        emit_report(&result, ReportFormat::Csv, p)?;
    }
    if let Some(p) = &a.svg {
        emit_report(&result, ReportFormat::Svg, p)?;
    }
    if let Some(p) = &a.json {
        write_json(&result, p)?;
    }
    Ok(())
}

fn analyze(a: AnalyzeArgs) -> Result<()> {
    let platform = resolve_platform(&a.platform)?;
    let mut p = AnalysisParams::new(a.nnz)
        .with_rank(a.rank)
        .with_order(a.order);
    if let Some(f) = a.nfibs {
        p = p.with_nfibs(f);
    }
    if let Some(nb) = a.nblocks {
        p = p.with_blocks(nb, a.block_size);
    }
    println!(
        "platform {}: {} GFLOPS peak, {} GB/s",
        platform.name, platform.peak_gflops, platform.mem_bw_gbs
    );
    println!(
        "{:<7} {:<7} {:>14} {:>14} {:>10} {:>10}",
        "kernel", "format", "flops", "bytes", "oi", "bound"
    );
    for k in KernelId::ALL {
        for f in [Format::Coo, Format::Hicoo] {
            let row = work_flops(k, &p).and_then(|w| {
                let b = memory_bytes(k, f, &p)?;
                let oi = operational_intensity(k, f, &p)?;
                Ok((w, b, oi))
            });
            match row {
                Ok((w, b, oi)) => println!(
                    "{:<7} {:<7} {:>14} {:>14} {:>10.5} {:>10.3}",
                    k,
                    f,
                    w,
                    b,
                    oi,
                    roofline_bound(&platform, oi)
                ),
                Err(e) => println!("{k:<7} {f:<7} n/a ({e})"),
            }
        }
    }
    Ok(())
}

fn validate(a: ValidateArgs) -> Result<()> {
    let violations = if is_json(&a.input) {
        let text = std::fs::read_to_string(&a.input)
            .with_context(|| format!("reading {}", a.input.display()))?;
        if let Ok(h) = serde_json::from_str::<HicooTensor<f64>>(&text) {
            h.validate()
        } else {
            serde_json::from_str::<CooTensor<f64>>(&text)
                .with_context(|| format!("{} is not a COO or HiCOO tensor", a.input.display()))?
                .validate()
        }
    } else {
        read_tns::<f64>(&a.input)?.validate()
    };
    if violations.is_empty() {
        println!("{}: ok", a.input.display());
        return Ok(());
    }
    for v in &violations {
        println!("{v}");
    }
    bail!("{} violation(s)", violations.len())
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Convert(a) => convert(a),
        Command::Generate(a) => generate(a),
        Command::Bench(a) => run_bench(a),
        Command::Analyze(a) => analyze(a),
        Command::Validate(a) => validate(a),
    }
}
