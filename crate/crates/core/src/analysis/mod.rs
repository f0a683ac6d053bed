//! Analytical performance model for the five kernels.
//!
//! Work and memory traffic follow closed-form per-kernel formulas in terms
//! of the nonzero count, fiber count, matrix rank and HiCOO block count.
//! Their ratio is the operational intensity, which the Roofline model turns
//! into an attainable GFLOPS bound for a platform.

mod platform;
mod report;

use serde::{Deserialize, Serialize};

pub use platform::{load_platforms, parse_platforms, platform_presets, preset, RooflinePlatform};
pub use report::{KernelReport, ModeMeasurement};

use crate::error::{Error, Result};
use crate::kernels::KernelId;

/// Storage format identifiers used by the harness and the reports.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Coo,
    Hicoo,
    #[serde(rename = "ghicoo")]
    GHicoo,
}

impl Format {
    pub const ALL: [Format; 3] = [Format::Coo, Format::Hicoo, Format::GHicoo];

    pub fn name(self) -> &'static str {
        match self {
            Format::Coo => "coo",
            Format::Hicoo => "hicoo",
            Format::GHicoo => "ghicoo",
        }
    }

    /// Whether the blocked traffic model applies.
    pub fn is_blocked(self) -> bool {
        !matches!(self, Format::Coo)
    }
}

impl std::fmt::Display for Format {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.pad(self.name())
    }
}

impl std::str::FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "coo" => Ok(Format::Coo),
            "hicoo" => Ok(Format::Hicoo),
            "ghicoo" => Ok(Format::GHicoo),
            other => Err(Error::Config(format!("unknown format '{other}'"))),
        }
    }
}

/// Inputs to the work and traffic formulas.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct AnalysisParams {
    pub nnz: u64,
    pub nfibs: Option<u64>,
    pub rank: Option<u64>,
    /// HiCOO block count `n_b`.
    pub nblocks: Option<u64>,
    pub block_size: Option<u32>,
    /// Tensor order, used only by the MTTKRP work count; 3 when unset.
    pub order: Option<u32>,
}

impl AnalysisParams {
    pub fn new(nnz: u64) -> Self {
        AnalysisParams {
            nnz,
            ..Default::default()
        }
    }

    pub fn with_nfibs(mut self, nfibs: u64) -> Self {
        self.nfibs = Some(nfibs);
        self
    }

    pub fn with_rank(mut self, rank: u64) -> Self {
        self.rank = Some(rank);
        self
    }

    pub fn with_blocks(mut self, nblocks: u64, block_size: u32) -> Self {
        self.nblocks = Some(nblocks);
        self.block_size = Some(block_size);
        self
    }

    pub fn with_order(mut self, order: u32) -> Self {
        self.order = Some(order);
        self
    }

    /// Average nonzeros per block, `nnz / n_b` rounded to nearest.
    pub fn nnz_b(&self) -> Option<u64> {
        match self.nblocks {
            Some(0) => Some(0),
            Some(nb) => Some((self.nnz + nb / 2) / nb),
            None => None,
        }
    }

    fn rank_for(&self, k: KernelId) -> Result<u64> {
        self.rank
            .ok_or_else(|| Error::Analysis(format!("{k} needs the matrix rank R")))
    }

    fn nfibs_for(&self, k: KernelId) -> Result<u64> {
        self.nfibs
            .ok_or_else(|| Error::Analysis(format!("{k} needs the fiber count")))
    }
}

/// Floating-point operation count of one kernel invocation.
///
/// MTTKRP counts `order * nnz * R`, which is `3 nnz R` for third-order
/// tensors: `order - 1` multiplications and one addition per nonzero and
/// column.
pub fn work_flops(kernel: KernelId, p: &AnalysisParams) -> Result<u64> {
    let nnz = p.nnz;
    Ok(match kernel {
        KernelId::Tew | KernelId::Ts => nnz,
        KernelId::Ttv => 2 * nnz,
        KernelId::Ttm => 2 * nnz * p.rank_for(kernel)?,
        KernelId::Mttkrp => p.order.unwrap_or(3) as u64 * nnz * p.rank_for(kernel)?,
    })
}

/// Modeled DRAM traffic in bytes for single-precision values and 32-bit
/// indices.
pub fn memory_bytes(kernel: KernelId, format: Format, p: &AnalysisParams) -> Result<u64> {
    let nnz = p.nnz;
    Ok(match kernel {
        KernelId::Tew => 12 * nnz,
        KernelId::Ts => 8 * nnz,
        KernelId::Ttv => 12 * nnz + 12 * p.nfibs_for(kernel)?,
        KernelId::Ttm => {
            let r = p.rank_for(kernel)?;
            let nf = p.nfibs_for(kernel)?;
            4 * nnz * r + 4 * nf * r + 8 * nnz + 8 * nf
        }
        KernelId::Mttkrp => {
            let r = p.rank_for(kernel)?;
            if format.is_blocked() {
                let nb = p.nblocks.ok_or_else(|| {
                    Error::Analysis("blocked MTTKRP needs the block count".into())
                })?;
                let nnz_b = p.nnz_b().unwrap_or(0);
                12 * r * (nb * nnz_b).min(nnz) + 7 * nnz + 20 * nb
            } else {
                12 * nnz * r + 16 * nnz
            }
        }
    })
}

/// Flops per byte.
pub fn operational_intensity(kernel: KernelId, format: Format, p: &AnalysisParams) -> Result<f64> {
    let bytes = memory_bytes(kernel, format, p)?;
    if bytes == 0 {
        return Err(Error::Analysis(format!("{kernel} moves zero bytes")));
    }
    Ok(work_flops(kernel, p)? as f64 / bytes as f64)
}

/// Attainable GFLOPS at intensity `oi`: `min(peak, bandwidth * oi)`.
pub fn roofline_bound(platform: &RooflinePlatform, oi: f64) -> f64 {
    platform.peak_gflops.min(platform.mem_bw_gbs * oi)
}

/// Fraction of the bound achieved; not clamped, since cache reuse can push
/// measurements above a DRAM bound.
pub fn efficiency(measured_gflops: f64, bound: f64) -> f64 {
    measured_gflops / bound
}
