//! Benchmark harness: loads or generates tensors, converts them to the
//! requested formats, runs every kernel and fills one [`KernelReport`] per
//! (tensor, kernel, format) triple.
//!
//! Per triple and mode the harness first builds the kernel plan, which is
//! the untimed pre-processing stage, then runs one untimed warm-up and
//! `repetitions` timed executions. Only the `execute` calls sit between the
//! timestamps. Per-mode kernels (TTV, TTM, MTTKRP) repeat this for every
//! selected mode and the report averages over modes. A failing triple is
//! recorded with its error and the suite moves on.

mod emit;

use std::path::PathBuf;
use std::sync::Arc;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub use emit::{csv_string, emit_report, svg_string, write_csv, ReportFormat, CSV_COLUMNS};

use crate::analysis::{
    memory_bytes, work_flops, AnalysisParams, Format, KernelReport, ModeMeasurement,
    RooflinePlatform,
};
use crate::error::{Error, Result};
use crate::generators::{bundled_tensor, GeneratorSpec};
use crate::io::read_tns;
use crate::kernels::dense::unit_open_closed;
use crate::kernels::{
    DenseMatrix, DenseVector, ElementwiseOp, Executor, KernelId, KernelPlan, MttkrpCooPlan,
    MttkrpHicooPlan, MttkrpStrategy, TewPlan, TsOp, TsPlan, TtmCooPlan, TtmGHicooPlan, TtvCooPlan,
    TtvGHicooPlan,
};
use crate::scalar::Scalar;
use crate::tensor::{CooTensor, HicooTensor};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Precision {
    #[default]
    F32,
    F64,
}

impl std::str::FromStr for Precision {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "f32" | "single" => Ok(Precision::F32),
            "f64" | "double" => Ok(Precision::F64),
            other => Err(Error::Config(format!("unknown precision '{other}'"))),
        }
    }
}

impl std::fmt::Display for Precision {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.pad(match self {
            Precision::F32 => "f32",
            Precision::F64 => "f64",
        })
    }
}

/// Where a benchmark tensor comes from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum TensorSource {
    /// A `.tns` file; the report names it after the file stem.
    File(PathBuf),
    /// A named generator configuration.
    Generated { name: String, spec: GeneratorSpec },
    /// One of the bundled generator presets.
    Bundled(String),
}

impl TensorSource {
    pub fn name(&self) -> String {
        match self {
            TensorSource::File(p) => p
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| p.display().to_string()),
            TensorSource::Generated { name, .. } => name.clone(),
            TensorSource::Bundled(name) => name.clone(),
        }
    }

    pub fn load<V: Scalar>(&self) -> Result<CooTensor<V>> {
        match self {
            TensorSource::File(p) => read_tns(p),
            TensorSource::Generated { spec, .. } => spec.generate(),
            TensorSource::Bundled(name) => bundled_tensor(name)?.spec.generate(),
        }
    }
}

/// Called with a short stage label at the start of every pre-processing
/// stage. Tests use it to slow pre-processing down on purpose.
pub type PrepareHook = Arc<dyn Fn(&str) + Send + Sync>;

#[derive(Clone, Serialize, Deserialize)]
pub struct BenchConfig {
    pub kernels: Vec<KernelId>,
    pub formats: Vec<Format>,
    pub tensors: Vec<TensorSource>,
    /// Zero-based modes for the per-mode kernels; all modes when `None`.
    pub modes: Option<Vec<usize>>,
    pub rank: usize,
    pub block_size: u32,
    /// Compressed modes of the gHiCOO format; all but the last when `None`.
    pub compressed_modes: Option<Vec<usize>>,
    pub repetitions: usize,
    pub warmup: usize,
    pub workers: usize,
    pub platform: RooflinePlatform,
    pub precision: Precision,
    pub seed: u64,
    pub tew_op: ElementwiseOp,
    pub ts_op: TsOp,
    pub mttkrp_strategy: MttkrpStrategy,
    #[serde(skip)]
    pub prepare_hook: Option<PrepareHook>,
}

impl std::fmt::Debug for BenchConfig {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("BenchConfig")
            .field("kernels", &self.kernels)
            .field("formats", &self.formats)
            .field("tensors", &self.tensors)
            .field("modes", &self.modes)
            .field("rank", &self.rank)
            .field("block_size", &self.block_size)
            .field("compressed_modes", &self.compressed_modes)
            .field("repetitions", &self.repetitions)
            .field("warmup", &self.warmup)
            .field("workers", &self.workers)
            .field("platform", &self.platform)
            .field("precision", &self.precision)
            .field("seed", &self.seed)
            .field("tew_op", &self.tew_op)
            .field("ts_op", &self.ts_op)
            .field("mttkrp_strategy", &self.mttkrp_strategy)
            .field("prepare_hook", &self.prepare_hook.is_some())
            .finish()
    }
}

impl Default for BenchConfig {
    fn default() -> Self {
        BenchConfig {
            kernels: KernelId::ALL.to_vec(),
            formats: vec![Format::Coo, Format::Hicoo],
            tensors: Vec::new(),
            modes: None,
            rank: 16,
            block_size: 128,
            compressed_modes: None,
            repetitions: 5,
            warmup: 1,
            workers: Executor::default_workers(),
            platform: crate::analysis::preset("bluesky").expect("preset"),
            precision: Precision::F32,
            seed: 0x5eed,
            tew_op: ElementwiseOp::Add,
            ts_op: TsOp::Mul,
            mttkrp_strategy: MttkrpStrategy::Atomic,
            prepare_hook: None,
        }
    }
}

impl BenchConfig {
    pub fn validate(&self) -> Result<()> {
        if self.repetitions == 0 {
            return Err(Error::Config("repetitions must be at least 1".into()));
        }
        if self.rank == 0 {
            return Err(Error::Config("rank R must be at least 1".into()));
        }
        if self.workers == 0 {
            return Err(Error::Config("worker count must be at least 1".into()));
        }
        crate::tensor::block_shift(self.block_size)?;
        Ok(())
    }
}

/// Run conditions recorded with the results.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Environment {
    pub workers: usize,
    pub precision: Precision,
    pub timestamp: u64,
    pub seed: u64,
    pub platform: RooflinePlatform,
    pub rank: usize,
    pub block_size: u32,
    pub repetitions: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchSuiteResult {
    pub reports: Vec<KernelReport>,
    pub environment: Environment,
}

/// Runs the whole suite. Per-triple failures become failed reports; only
/// an invalid configuration is an error.
pub fn bench(config: &BenchConfig) -> Result<BenchSuiteResult> {
    config.validate()?;
    let exec = Executor::new(config.workers)?;
    let mut reports = Vec::new();
    for (ti, source) in config.tensors.iter().enumerate() {
        match config.precision {
            Precision::F32 => run_tensor::<f32>(config, &exec, ti, source, &mut reports),
            Precision::F64 => run_tensor::<f64>(config, &exec, ti, source, &mut reports),
        }
    }
    Ok(BenchSuiteResult {
        reports,
        environment: Environment {
            workers: config.workers,
            precision: config.precision,
            timestamp: SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0),
            seed: config.seed,
            platform: config.platform.clone(),
            rank: config.rank,
            block_size: config.block_size,
            repetitions: config.repetitions,
        },
    })
}

/// Dense operands for one tensor, drawn from the suite seed.
struct Operands<V> {
    vectors: Vec<DenseVector<V>>,
    factors: Vec<DenseMatrix<V>>,
    tew_values: Vec<V>,
    scalar: V,
}

impl<V: Scalar> Operands<V> {
    fn new(x: &CooTensor<V>, rank: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let vectors = x
            .dims()
            .iter()
            .map(|&d| DenseVector::random(d as usize, &mut rng))
            .collect();
        let factors = x
            .dims()
            .iter()
            .map(|&d| DenseMatrix::random(d as usize, rank, &mut rng))
            .collect();
        let tew_values = (0..x.nnz()).map(|_| unit_open_closed(&mut rng)).collect();
        let scalar = unit_open_closed(&mut rng);
        Operands {
            vectors,
            factors,
            tew_values,
            scalar,
        }
    }
}

enum Rep<V: Scalar> {
    Coo,
    Blocked(HicooTensor<V>),
}

struct TensorCtx<'a, V: Scalar> {
    name: String,
    x: CooTensor<V>,
    ops: Operands<V>,
    config: &'a BenchConfig,
    exec: &'a Executor,
}

fn run_tensor<V: Scalar>(
    config: &BenchConfig,
    exec: &Executor,
    ti: usize,
    source: &TensorSource,
    reports: &mut Vec<KernelReport>,
) {
    let name = source.name();
    let x = match source.load::<V>() {
        Ok(x) => x,
        Err(e) => {
            for &f in &config.formats {
                for &k in &config.kernels {
                    reports.push(KernelReport::failed(&name, k, f, format!("load: {e}")));
                }
            }
            return;
        }
    };
    let seed = config.seed ^ (ti as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15);
    let ops = Operands::new(&x, config.rank, seed);
    let ctx = TensorCtx {
        name,
        x,
        ops,
        config,
        exec,
    };
    for &format in &config.formats {
        ctx.hook("convert");
        let rep = match format {
            Format::Coo => Ok(Rep::Coo),
            Format::Hicoo => HicooTensor::from_coo(&ctx.x, config.block_size).map(Rep::Blocked),
            Format::GHicoo => {
                let comp = config
                    .compressed_modes
                    .clone()
                    .unwrap_or_else(|| (0..ctx.x.order().saturating_sub(1)).collect());
                HicooTensor::from_coo_compressed(&ctx.x, &comp, config.block_size).map(Rep::Blocked)
            }
        };
        for &kernel in &config.kernels {
            let report = match &rep {
                Ok(rep) => ctx.run(kernel, format, rep).unwrap_or_else(|e| {
                    KernelReport::failed(&ctx.name, kernel, format, e.to_string())
                }),
                Err(e) => KernelReport::failed(&ctx.name, kernel, format, format!("convert: {e}")),
            };
            reports.push(report);
        }
    }
}

impl<V: Scalar> TensorCtx<'_, V> {
    fn hook(&self, stage: &str) {
        if let Some(h) = &self.config.prepare_hook {
            h(stage);
        }
    }

    fn modes(&self) -> Result<Vec<usize>> {
        let order = self.x.order();
        let modes = self
            .config
            .modes
            .clone()
            .unwrap_or_else(|| (0..order).collect());
        if modes.is_empty() {
            return Err(Error::Config("no modes selected".into()));
        }
        if let Some(&m) = modes.iter().find(|&&m| m >= order) {
            return Err(Error::Config(format!(
                "mode {m} out of range for order {order}"
            )));
        }
        Ok(modes)
    }

    fn params(&self) -> AnalysisParams {
        AnalysisParams::new(self.x.nnz() as u64)
            .with_rank(self.config.rank as u64)
            .with_order(self.x.order() as u32)
    }

    /// Warm-up plus timed repetitions; checks the flop counter against the
    /// work model on every run.
    fn measure(
        &self,
        kernel: KernelId,
        mode: Option<usize>,
        plan: &mut dyn KernelPlan,
        params: &AnalysisParams,
        format: Format,
    ) -> Result<ModeMeasurement> {
        let expected = work_flops(kernel, params)?;
        let bytes = memory_bytes(kernel, format, params)?;
        for _ in 0..self.config.warmup {
            plan.execute(self.exec)?;
        }
        let mut times = Vec::with_capacity(self.config.repetitions);
        for _ in 0..self.config.repetitions {
            let t0 = Instant::now();
            let flops = plan.execute(self.exec)?;
            times.push(t0.elapsed().as_secs_f64());
            if flops != expected {
                return Err(Error::Analysis(format!(
                    "{kernel} counted {flops} flops, model says {expected}"
                )));
            }
        }
        Ok(ModeMeasurement {
            mode,
            times,
            flops: expected,
            bytes,
        })
    }

    fn run(&self, kernel: KernelId, format: Format, rep: &Rep<V>) -> Result<KernelReport> {
        let cfg = self.config;
        let x = &self.x;
        let ops = &self.ops;
        let mut base = self.params();
        if let Rep::Blocked(h) = rep {
            base = base.with_blocks(h.nblocks() as u64, h.block_size());
        }
        let mut measurements = Vec::new();
        match kernel {
            KernelId::Tew => {
                self.hook("tew");
                let m = match rep {
                    Rep::Coo => {
                        let y = CooTensor::from_raw_parts_unchecked(
                            x.dims().to_vec(),
                            x.all_inds().to_vec(),
                            ops.tew_values.clone(),
                            x.sort_state().clone(),
                        );
                        let mut plan = TewPlan::new(x, &y, cfg.tew_op)?;
                        self.measure(kernel, None, &mut plan, &base, format)?
                    }
                    Rep::Blocked(h) => {
                        let y = h.with_values(ops.tew_values.clone());
                        let mut plan = TewPlan::new_hicoo(h, &y, cfg.tew_op)?;
                        self.measure(kernel, None, &mut plan, &base, format)?
                    }
                };
                measurements.push(m);
            }
            KernelId::Ts => {
                self.hook("ts");
                let m = match rep {
                    Rep::Coo => {
                        let mut plan = TsPlan::new(x, cfg.ts_op, ops.scalar);
                        self.measure(kernel, None, &mut plan, &base, format)?
                    }
                    Rep::Blocked(h) => {
                        let mut plan = TsPlan::new_hicoo(h, cfg.ts_op, ops.scalar);
                        self.measure(kernel, None, &mut plan, &base, format)?
                    }
                };
                measurements.push(m);
            }
            KernelId::Ttv | KernelId::Ttm => {
                for n in self.modes()? {
                    self.hook(kernel.name());
                    let u = &ops.factors[n];
                    let v = &ops.vectors[n];
                    let m = match (rep, format) {
                        (Rep::Coo, _) => {
                            if kernel == KernelId::Ttv {
                                let mut plan = TtvCooPlan::new(x, v, n)?;
                                let p = base.with_nfibs(plan.layout().nfibs() as u64);
                                self.measure(kernel, Some(n), &mut plan, &p, format)?
                            } else {
                                let mut plan = TtmCooPlan::new(x, u, n)?;
                                let p = base.with_nfibs(plan.layout().nfibs() as u64);
                                self.measure(kernel, Some(n), &mut plan, &p, format)?
                            }
                        }
                        (Rep::Blocked(h), f) => {
                            // full HiCOO leaves the product mode uncompressed
                            let owned;
                            let g = if f == Format::Hicoo {
                                let comp: Vec<usize> = (0..x.order()).filter(|&m| m != n).collect();
                                owned = HicooTensor::from_coo_compressed(x, &comp, cfg.block_size)?;
                                &owned
                            } else {
                                h
                            };
                            let p = base.with_blocks(g.nblocks() as u64, g.block_size());
                            if kernel == KernelId::Ttv {
                                let mut plan = TtvGHicooPlan::new(g, v, n)?;
                                let p = p.with_nfibs(plan.nfibs() as u64);
                                self.measure(kernel, Some(n), &mut plan, &p, format)?
                            } else {
                                let mut plan = TtmGHicooPlan::new(g, u, n)?;
                                let p = p.with_nfibs(plan.nfibs() as u64);
                                self.measure(kernel, Some(n), &mut plan, &p, format)?
                            }
                        }
                    };
                    measurements.push(m);
                }
            }
            KernelId::Mttkrp => {
                let refs: Vec<&DenseMatrix<V>> = ops.factors.iter().collect();
                for n in self.modes()? {
                    self.hook("mttkrp");
                    let m = match rep {
                        Rep::Coo => {
                            let mut plan = MttkrpCooPlan::new(x, &refs, n, cfg.mttkrp_strategy)?;
                            self.measure(kernel, Some(n), &mut plan, &base, format)?
                        }
                        Rep::Blocked(h) => {
                            let mut plan = MttkrpHicooPlan::new(h, &refs, n, cfg.mttkrp_strategy)?;
                            self.measure(kernel, Some(n), &mut plan, &base, format)?
                        }
                    };
                    measurements.push(m);
                }
            }
        }
        Ok(KernelReport::from_measurements(
            &self.name,
            kernel,
            format,
            measurements,
            &cfg.platform,
        ))
    }
}
