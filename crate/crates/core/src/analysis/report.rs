use serde::{Deserialize, Serialize};

use super::{efficiency, roofline_bound, Format, RooflinePlatform};
use crate::kernels::KernelId;

/// Timings and model counts of one kernel run on one mode (or the whole
/// tensor for kernels that are not per-mode).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeMeasurement {
    pub mode: Option<usize>,
    /// Wall time of each repetition, seconds.
    pub times: Vec<f64>,
    pub flops: u64,
    pub bytes: u64,
}

impl ModeMeasurement {
    pub fn mean_time(&self) -> f64 {
        self.times.iter().sum::<f64>() / self.times.len() as f64
    }

    pub fn median_time(&self) -> f64 {
        let mut t = self.times.clone();
        t.sort_by(f64::total_cmp);
        let k = t.len();
        if k % 2 == 1 {
            t[k / 2]
        } else {
            0.5 * (t[k / 2 - 1] + t[k / 2])
        }
    }

    pub fn min_time(&self) -> f64 {
        self.times.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

/// One row of the benchmark report.
///
/// For per-mode kernels every measured quantity is a mean over the modes,
/// so `gflops = flops / (1e9 * time_s)` and `oi = flops / bytes_model` hold
/// for every row. `gflops_mode_avg` is the mean of the per-mode GFLOPS
/// figures instead. Failed runs keep their identifiers, carry the error
/// message and have NaN in every numeric field.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelReport {
    pub tensor: String,
    pub kernel: KernelId,
    pub format: Format,
    pub time_s: f64,
    pub flops: f64,
    pub bytes_model: f64,
    pub oi: f64,
    pub gflops: f64,
    pub bound_gflops: f64,
    pub efficiency: f64,
    pub time_median_s: f64,
    pub time_min_s: f64,
    pub gflops_mode_avg: f64,
    pub error: Option<String>,
    pub modes: Vec<ModeMeasurement>,
}

fn mean(xs: impl Iterator<Item = f64>) -> f64 {
    let (s, n) = xs.fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    s / n as f64
}

impl KernelReport {
    pub fn from_measurements(
        tensor: impl Into<String>,
        kernel: KernelId,
        format: Format,
        modes: Vec<ModeMeasurement>,
        platform: &RooflinePlatform,
    ) -> Self {
        let time_s = mean(modes.iter().map(|m| m.mean_time()));
        let flops = mean(modes.iter().map(|m| m.flops as f64));
        let bytes_model = mean(modes.iter().map(|m| m.bytes as f64));
        let oi = flops / bytes_model;
        let gflops = flops / (1e9 * time_s);
        let bound_gflops = roofline_bound(platform, oi);
        KernelReport {
            tensor: tensor.into(),
            kernel,
            format,
            time_s,
            flops,
            bytes_model,
            oi,
            gflops,
            bound_gflops,
            efficiency: efficiency(gflops, bound_gflops),
            time_median_s: mean(modes.iter().map(|m| m.median_time())),
            time_min_s: mean(modes.iter().map(|m| m.min_time())),
            gflops_mode_avg: mean(modes.iter().map(|m| m.flops as f64 / (1e9 * m.mean_time()))),
            error: None,
            modes,
        }
    }

    pub fn failed(
        tensor: impl Into<String>,
        kernel: KernelId,
        format: Format,
        error: impl Into<String>,
    ) -> Self {
        KernelReport {
            tensor: tensor.into(),
            kernel,
            format,
            time_s: f64::NAN,
            flops: f64::NAN,
            bytes_model: f64::NAN,
            oi: f64::NAN,
            gflops: f64::NAN,
            bound_gflops: f64::NAN,
            efficiency: f64::NAN,
            time_median_s: f64::NAN,
            time_min_s: f64::NAN,
            gflops_mode_avg: f64::NAN,
            error: Some(error.into()),
            modes: Vec::new(),
        }
    }

    pub fn is_ok(&self) -> bool {
        self.error.is_none()
    }
}
