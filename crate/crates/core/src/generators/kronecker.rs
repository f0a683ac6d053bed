//! Stochastic Kronecker tensors realized by recursive descent sampling.

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::dense::unit_open_closed;
use crate::scalar::Scalar;
use crate::tensor::CooTensor;

/// Small order-`N` tensor of cell probabilities, row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Initiator {
    pub dims: Vec<u32>,
    pub probs: Vec<f64>,
}

impl Initiator {
    pub fn new(dims: Vec<u32>, probs: Vec<f64>) -> Result<Self> {
        let init = Initiator { dims, probs };
        init.check()?;
        Ok(init)
    }

    fn check(&self) -> Result<()> {
        if self.dims.is_empty() || self.dims.contains(&0) {
            return Err(Error::Spec(format!("initiator dims {:?}", self.dims)));
        }
        let cells: usize = self.dims.iter().map(|&d| d as usize).product();
        if self.probs.len() != cells {
            return Err(Error::Spec(format!(
                "initiator has {} probabilities for {cells} cells",
                self.probs.len()
            )));
        }
        if let Some(p) = self.probs.iter().find(|p| !(0.0..=1.0).contains(*p)) {
            return Err(Error::Spec(format!(
                "initiator probability {p} outside [0, 1]"
            )));
        }
        if self.probs.iter().all(|&p| p == 0.0) {
            return Err(Error::Spec("initiator is all zero".into()));
        }
        Ok(())
    }

    pub fn order(&self) -> usize {
        self.dims.len()
    }

    /// Per-mode offsets of cell `c`.
    pub fn cell_coord(&self, mut c: usize) -> Vec<u32> {
        let mut out = vec![0; self.dims.len()];
        for m in (0..self.dims.len()).rev() {
            out[m] = (c % self.dims[m] as usize) as u32;
            c /= self.dims[m] as usize;
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KroneckerSpec {
    pub initiator: Initiator,
    pub iterations: u32,
    pub target_dims: Vec<u32>,
    pub sample_count: u64,
    pub seed: u64,
}

impl KroneckerSpec {
    pub fn validate(&self) -> Result<()> {
        self.initiator.check()?;
        if self.iterations == 0 {
            return Err(Error::Spec("iterations must be at least 1".into()));
        }
        if self.target_dims.len() != self.initiator.order() {
            return Err(Error::Spec(format!(
                "target has {} modes, initiator has {}",
                self.target_dims.len(),
                self.initiator.order()
            )));
        }
        for (m, (&t, &d)) in self
            .target_dims
            .iter()
            .zip(&self.initiator.dims)
            .enumerate()
        {
            let full = (d as u128).pow(self.iterations);
            if t == 0 || t as u128 > full {
                return Err(Error::Spec(format!(
                    "target size {t} for mode {m} outside 1..={full}"
                )));
            }
        }
        Ok(())
    }

    /// Per-mode size of the full Kronecker power, `d^iterations`.
    pub fn full_dims(&self) -> Vec<u128> {
        self.initiator
            .dims
            .iter()
            .map(|&d| (d as u128).pow(self.iterations))
            .collect()
    }

    /// Initiator cell chosen at the first (most significant) level for a
    /// coordinate of the full space.
    pub fn top_cell(&self, coord: &[u64]) -> usize {
        let mut c = 0usize;
        for (m, &d) in self.initiator.dims.iter().enumerate() {
            let span = (d as u64).pow(self.iterations - 1);
            c = c * d as usize + (coord[m] / span) as usize;
        }
        c
    }
}

/// Raw sample stream: each item is a coordinate of the full Kronecker space
/// and the value drawn for it, before the stripping step.
pub struct KroneckerStream {
    rng: ChaCha8Rng,
    cells: WeightedIndex<f64>,
    offsets: Vec<Vec<u32>>,
    dims: Vec<u32>,
    iterations: u32,
    remaining: u64,
}

impl KroneckerStream {
    pub fn new(spec: &KroneckerSpec) -> Result<Self> {
        spec.validate()?;
        let init = &spec.initiator;
        let cells = WeightedIndex::new(&init.probs)
            .map_err(|e| Error::Spec(format!("initiator weights: {e}")))?;
        Ok(KroneckerStream {
            rng: ChaCha8Rng::seed_from_u64(spec.seed),
            cells,
            offsets: (0..init.probs.len()).map(|c| init.cell_coord(c)).collect(),
            dims: init.dims.clone(),
            iterations: spec.iterations,
            remaining: spec.sample_count,
        })
    }
}

impl Iterator for KroneckerStream {
    type Item = (Vec<u64>, f64);

    fn next(&mut self) -> Option<Self::Item> {
        if self.remaining == 0 {
            return None;
        }
        self.remaining -= 1;
        let mut coord = vec![0u64; self.dims.len()];
        for _ in 0..self.iterations {
            let off = &self.offsets[self.cells.sample(&mut self.rng)];
            for (c, (&o, &d)) in coord.iter_mut().zip(off.iter().zip(&self.dims)) {
                *c = *c * d as u64 + o as u64;
            }
        }
        let v: f64 = unit_open_closed(&mut self.rng);
        Some((coord, v))
    }
}

/// Generates a tensor of shape `target_dims` from `sample_count` draws.
/// Draws outside the target are discarded and repeated coordinates sum
/// their values.
pub fn kronecker_generate<V: Scalar>(spec: &KroneckerSpec) -> Result<CooTensor<V>> {
    let order = spec.target_dims.len();
    let mut inds: Vec<Vec<u32>> = vec![Vec::new(); order];
    let mut vals = Vec::new();
    for (coord, v) in KroneckerStream::new(spec)? {
        if coord
            .iter()
            .zip(&spec.target_dims)
            .all(|(&c, &t)| c < t as u64)
        {
            for (arr, &c) in inds.iter_mut().zip(&coord) {
                arr.push(c as u32);
            }
            vals.push(V::from_f64(v));
        }
    }
    CooTensor::from_parts(spec.target_dims.clone(), inds, vals)
}

/// Cell probabilities of the full Kronecker power, row-major, for spaces of
/// at most `cap` cells.
pub fn kronecker_cell_probabilities(spec: &KroneckerSpec, cap: usize) -> Result<Vec<f64>> {
    spec.validate()?;
    let cells: u128 = spec.full_dims().iter().product();
    if cells > cap as u128 {
        return Err(Error::DenseCapExceeded { cells, cap });
    }
    let init = &spec.initiator;
    let mut probs = vec![1.0];
    let mut dims: Vec<usize> = vec![1; init.order()];
    for _ in 0..spec.iterations {
        let new_dims: Vec<usize> = dims
            .iter()
            .zip(&init.dims)
            .map(|(&a, &d)| a * d as usize)
            .collect();
        let total: usize = new_dims.iter().product();
        let mut next = vec![0.0; total];
        let mut coord = vec![0usize; init.order()];
        for (o, slot) in next.iter_mut().enumerate() {
            let mut rem = o;
            for m in (0..init.order()).rev() {
                coord[m] = rem % new_dims[m];
                rem /= new_dims[m];
            }
            let (mut outer, mut inner) = (0usize, 0usize);
            for m in 0..init.order() {
                let d = init.dims[m] as usize;
                outer = outer * dims[m] + coord[m] / d;
                inner = inner * d + coord[m] % d;
            }
            *slot = probs[outer] * init.probs[inner];
        }
        probs = next;
        dims = new_dims;
    }
    Ok(probs)
}

/// Realizes the Kronecker power by an independent Bernoulli trial per cell,
/// for spaces of at most `cap` cells. Coordinates outside `target_dims` are
/// stripped.
pub fn kronecker_bernoulli<V: Scalar>(spec: &KroneckerSpec, cap: usize) -> Result<CooTensor<V>> {
    let probs = kronecker_cell_probabilities(spec, cap)?;
    let full: Vec<usize> = spec.full_dims().iter().map(|&d| d as usize).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut entries = Vec::new();
    for (o, &p) in probs.iter().enumerate() {
        let hit = rng.random::<f64>() < p;
        let v: V = unit_open_closed(&mut rng);
        if !hit {
            continue;
        }
        let mut coord = vec![0u32; full.len()];
        let mut rem = o;
        for m in (0..full.len()).rev() {
            coord[m] = (rem % full[m]) as u32;
            rem /= full[m];
        }
        if coord.iter().zip(&spec.target_dims).all(|(&c, &t)| c < t) {
            entries.push((coord, v));
        }
    }
    CooTensor::from_entries(spec.target_dims.clone(), entries)
}
