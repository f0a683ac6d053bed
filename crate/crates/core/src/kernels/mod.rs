//! The five benchmark kernels over COO and HiCOO-family tensors.
//!
//! Every kernel is split into a plan and an execution. Building the plan is
//! the pre-processing stage: it sorts or permutes the input as needed and
//! allocates the output with its indices already set. [`KernelPlan::execute`]
//! only computes output values, so timing it measures the kernel alone.
//! Each execution returns the number of floating-point operations it
//! performed.

pub mod dense;
mod mttkrp;
pub mod oracle;
mod tew;
mod ts;
mod ttm;
mod ttv;

use serde::{Deserialize, Serialize};

pub use dense::{DenseMatrix, DenseTensor, DenseVector, ToDense, DENSE_CAP};
pub use mttkrp::{mttkrp, mttkrp_hicoo, MttkrpCooPlan, MttkrpHicooPlan, MttkrpStrategy};
pub use tew::{tew, tew_hicoo, TewPlan};
pub use ts::{ts, ts_hicoo, TsOp, TsPlan};
pub use ttm::{ttm, ttm_ghicoo, TtmCooPlan, TtmGHicooPlan};
pub use ttv::{ttv, ttv_ghicoo, TtvCooPlan, TtvGHicooPlan};

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::tensor::{CooTensor, HicooTensor};

/// Environment variable holding the default worker count.
pub const WORKERS_ENV: &str = "SPBENCH_WORKERS";

/// Thread pool the kernels run on.
pub struct Executor {
    pool: rayon::ThreadPool,
    workers: usize,
}

impl Executor {
    pub fn new(workers: usize) -> Result<Self> {
        if workers == 0 {
            return Err(Error::Config("worker count must be at least 1".into()));
        }
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build()
            .map_err(|e| Error::Config(format!("cannot build thread pool: {e}")))?;
        Ok(Executor { pool, workers })
    }

    /// `SPBENCH_WORKERS` if set, otherwise the number of physical cores.
    pub fn default_workers() -> usize {
        std::env::var(WORKERS_ENV)
            .ok()
            .and_then(|s| s.trim().parse().ok())
            .filter(|&w: &usize| w > 0)
            .unwrap_or_else(num_cpus::get_physical)
    }

    pub fn workers(&self) -> usize {
        self.workers
    }

    pub fn install<R: Send>(&self, f: impl FnOnce() -> R + Send) -> R {
        self.pool.install(f)
    }
}

impl Default for Executor {
    fn default() -> Self {
        Executor::new(Executor::default_workers()).expect("default executor")
    }
}

/// A pre-processed kernel invocation.
pub trait KernelPlan {
    /// Computes the output values; returns the flop count.
    fn execute(&mut self, exec: &Executor) -> Result<u64>;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ElementwiseOp {
    Add,
    Sub,
    Mul,
    Div,
}

impl ElementwiseOp {
    #[inline]
    pub fn apply<V: Scalar>(self, a: V, b: V) -> V {
        match self {
            ElementwiseOp::Add => a + b,
            ElementwiseOp::Sub => a - b,
            ElementwiseOp::Mul => a * b,
            ElementwiseOp::Div => a / b,
        }
    }
}

/// Kernel identifiers used by the analysis model and the harness.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum KernelId {
    Tew,
    Ts,
    Ttv,
    Ttm,
    Mttkrp,
}

impl KernelId {
    pub const ALL: [KernelId; 5] = [
        KernelId::Tew,
        KernelId::Ts,
        KernelId::Ttv,
        KernelId::Ttm,
        KernelId::Mttkrp,
    ];

    pub fn name(self) -> &'static str {
        match self {
            KernelId::Tew => "tew",
            KernelId::Ts => "ts",
            KernelId::Ttv => "ttv",
            KernelId::Ttm => "ttm",
            KernelId::Mttkrp => "mttkrp",
        }
    }

    /// True for kernels that run once per tensor mode.
    pub fn per_mode(self) -> bool {
        matches!(self, KernelId::Ttv | KernelId::Ttm | KernelId::Mttkrp)
    }
}

impl std::fmt::Display for KernelId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.pad(self.name())
    }
}

impl std::str::FromStr for KernelId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "tew" => Ok(KernelId::Tew),
            "ts" => Ok(KernelId::Ts),
            "ttv" => Ok(KernelId::Ttv),
            "ttm" => Ok(KernelId::Ttm),
            "mttkrp" => Ok(KernelId::Mttkrp),
            other => Err(Error::Config(format!("unknown kernel '{other}'"))),
        }
    }
}

/// Output containers whose values a plan overwrites in place.
pub(crate) trait ValuesMut<V> {
    fn values_mut(&mut self) -> &mut [V];
}

impl<V: Scalar> ValuesMut<V> for CooTensor<V> {
    fn values_mut(&mut self) -> &mut [V] {
        self.vals_mut()
    }
}

impl<V: Scalar> ValuesMut<V> for HicooTensor<V> {
    fn values_mut(&mut self) -> &mut [V] {
        self.vals_mut()
    }
}

pub(crate) fn check_mode(order: usize, n: usize) -> Result<()> {
    if n >= order {
        return Err(Error::Config(format!(
            "mode {n} out of range for an order-{order} tensor"
        )));
    }
    Ok(())
}
