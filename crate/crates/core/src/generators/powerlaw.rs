//! Power-law stream tensors: sparse modes follow a Zipf law, small dense
//! modes are uniform and fully covered.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Zipf};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::dense::unit_open_closed;
use crate::scalar::Scalar;
use crate::tensor::CooTensor;

/// Largest size allowed for a dense mode.
pub const MAX_DENSE_MODE: u32 = 1024;

/// Extra draws allowed per dense index value while forcing coverage.
pub const COVERAGE_RETRY_FACTOR: u64 = 100;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerLawSpec {
    pub dims: Vec<u32>,
    /// Zero-based modes sampled from the power law.
    pub sparse_modes: Vec<usize>,
    /// Zero-based modes sampled uniformly and forced to full coverage.
    pub dense_modes: Vec<usize>,
    pub nnz_target: u64,
    pub alpha: f64,
    pub seed: u64,
}

impl PowerLawSpec {
    pub fn validate(&self) -> Result<()> {
        let order = self.dims.len();
        if self.dims.contains(&0) {
            return Err(Error::Spec(format!("dims {:?}", self.dims)));
        }
        let mut seen = vec![0u8; order];
        for &m in self.sparse_modes.iter().chain(&self.dense_modes) {
            if m >= order {
                return Err(Error::Spec(format!(
                    "mode {m} out of range for order {order}"
                )));
            }
            seen[m] += 1;
        }
        if seen.iter().any(|&c| c != 1) {
            return Err(Error::Spec(
                "sparse and dense modes must partition the tensor modes".into(),
            ));
        }
        if self.sparse_modes.len() < 2 {
            return Err(Error::Spec("at least two sparse modes are required".into()));
        }
        if let Some(&m) = self
            .dense_modes
            .iter()
            .find(|&&m| self.dims[m] > MAX_DENSE_MODE)
        {
            return Err(Error::Spec(format!(
                "dense mode {m} has size {} above {MAX_DENSE_MODE}",
                self.dims[m]
            )));
        }
        if self.alpha <= 1.0 || !self.alpha.is_finite() {
            return Err(Error::Spec(format!("alpha {} must exceed 1", self.alpha)));
        }
        let largest = self
            .dense_modes
            .iter()
            .map(|&m| self.dims[m])
            .max()
            .unwrap_or(0);
        if self.nnz_target < largest as u64 {
            return Err(Error::Spec(format!(
                "nnz_target {} cannot cover a dense mode of size {largest}",
                self.nnz_target
            )));
        }
        Ok(())
    }
}

struct Coverage {
    covered: Vec<bool>,
    uncovered: usize,
    budget: u64,
}

impl Coverage {
    fn new(size: u32) -> Self {
        Coverage {
            covered: vec![false; size as usize],
            uncovered: size as usize,
            budget: COVERAGE_RETRY_FACTOR * size as u64,
        }
    }

    /// Draws a dense index. Once the draws left can no longer cover the
    /// missing values by chance, re-draws until an uncovered value appears
    /// or the retry budget runs out, then takes the smallest uncovered one.
    fn draw(&mut self, rng: &mut ChaCha8Rng, remaining: u64) -> u32 {
        let size = self.covered.len() as u32;
        let mut i = rng.random_range(0..size);
        if self.uncovered > 0 && remaining <= self.uncovered as u64 {
            while self.covered[i as usize] && self.budget > 0 {
                self.budget -= 1;
                i = rng.random_range(0..size);
            }
            if self.covered[i as usize] {
                i = self.covered.iter().position(|&c| !c).unwrap() as u32;
            }
        }
        if !self.covered[i as usize] {
            self.covered[i as usize] = true;
            self.uncovered -= 1;
        }
        i
    }
}

/// Emits `nnz_target` coordinate draws and sums duplicates, so the result
/// has at most `nnz_target` nonzeros.
pub fn powerlaw_generate<V: Scalar>(spec: &PowerLawSpec) -> Result<CooTensor<V>> {
    spec.validate()?;
    let order = spec.dims.len();
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut zipf: Vec<Option<Zipf<f64>>> = vec![None; order];
    for &m in &spec.sparse_modes {
        zipf[m] = Some(
            Zipf::new(spec.dims[m] as f64, spec.alpha)
                .map_err(|e| Error::Spec(format!("power law for mode {m}: {e}")))?,
        );
    }
    let mut coverage: Vec<Option<Coverage>> = (0..order).map(|_| None).collect();
    for &m in &spec.dense_modes {
        coverage[m] = Some(Coverage::new(spec.dims[m]));
    }

    let n = spec.nnz_target as usize;
    let mut inds: Vec<Vec<u32>> = (0..order).map(|_| Vec::with_capacity(n)).collect();
    let mut vals = Vec::with_capacity(n);
    for t in 0..spec.nnz_target {
        let remaining = spec.nnz_target - t;
        for m in 0..order {
            let i = match (&zipf[m], &mut coverage[m]) {
                (Some(z), _) => {
                    let k = z.sample(&mut rng) as u32;
                    k.clamp(1, spec.dims[m]) - 1
                }
                (None, Some(c)) => c.draw(&mut rng, remaining),
                (None, None) => unreachable!(),
            };
            inds[m].push(i);
        }
        vals.push(unit_open_closed::<V>(&mut rng));
    }
    CooTensor::from_parts(spec.dims.clone(), inds, vals)
}
