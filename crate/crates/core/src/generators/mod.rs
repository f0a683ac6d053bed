//! Seeded synthetic tensor generators and distribution checks.
//!
//! Two models are provided. The stochastic Kronecker model grows a small
//! initiator tensor by repeated Kronecker products, giving equidimensional
//! tensors with self-similar structure. The power-law stream model draws
//! coordinates independently per mode, a Zipf law on the large sparse modes
//! and a uniform law on the small dense ones. Generation is sequential over
//! one seeded stream and does not depend on the worker count.

mod histogram;
mod kronecker;
mod powerlaw;

use serde::{Deserialize, Serialize};

pub use histogram::{
    mode_degree_histogram, powerlaw_fit, powerlaw_fit_binned, DegreeHistogram, PowerLawFit,
};
pub use kronecker::{
    kronecker_bernoulli, kronecker_cell_probabilities, kronecker_generate, Initiator,
    KroneckerSpec, KroneckerStream,
};
pub use powerlaw::{powerlaw_generate, PowerLawSpec, COVERAGE_RETRY_FACTOR, MAX_DENSE_MODE};

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::tensor::CooTensor;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "lowercase")]
pub enum GeneratorSpec {
    Kronecker(KroneckerSpec),
    PowerLaw(PowerLawSpec),
}

impl GeneratorSpec {
    pub fn generate<V: Scalar>(&self) -> Result<CooTensor<V>> {
        match self {
            GeneratorSpec::Kronecker(s) => kronecker_generate(s),
            GeneratorSpec::PowerLaw(s) => powerlaw_generate(s),
        }
    }

    pub fn seed(&self) -> u64 {
        match self {
            GeneratorSpec::Kronecker(s) => s.seed,
            GeneratorSpec::PowerLaw(s) => s.seed,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        match &mut self {
            GeneratorSpec::Kronecker(s) => s.seed = seed,
            GeneratorSpec::PowerLaw(s) => s.seed = seed,
        }
        self
    }
}

/// Skewed 2x...x2 initiator: cell probability `hi^(zeros) * lo^(ones)`
/// over the cell's binary offsets, so the origin cell dominates.
pub fn skewed_initiator(order: usize, hi: f64, lo: f64) -> Initiator {
    let probs = (0..1usize << order)
        .map(|c| {
            let ones = c.count_ones() as i32;
            hi.powi(order as i32 - ones) * lo.powi(ones)
        })
        .collect();
    Initiator::new(vec![2; order], probs).expect("valid initiator")
}

/// A named generator configuration shipped with the suite.
#[derive(Debug, Clone, PartialEq)]
pub struct BundledTensor {
    pub name: &'static str,
    pub description: &'static str,
    pub spec: GeneratorSpec,
}

/// Desk-scale synthetic tensors: equidimensional Kronecker tensors and
/// irregular power-law tensors with one or two small dense modes, in third
/// and fourth order, around 10^5 nonzeros each.
pub fn bundled_tensors() -> Vec<BundledTensor> {
    vec![
        BundledTensor {
            name: "kron3-small",
            description: "3rd-order Kronecker, 2000^3",
            spec: GeneratorSpec::Kronecker(KroneckerSpec {
                initiator: skewed_initiator(3, 0.95, 0.55),
                iterations: 11,
                target_dims: vec![2000; 3],
                sample_count: 120_000,
                seed: 1,
            }),
        },
        BundledTensor {
            name: "pl3-small",
            description: "3rd-order power law, 4096^2 x 76",
            spec: GeneratorSpec::PowerLaw(PowerLawSpec {
                dims: vec![4096, 4096, 76],
                sparse_modes: vec![0, 1],
                dense_modes: vec![2],
                nnz_target: 120_000,
                alpha: 1.2,
                seed: 2,
            }),
        },
        BundledTensor {
            name: "kron4-small",
            description: "4th-order Kronecker, 250^4",
            spec: GeneratorSpec::Kronecker(KroneckerSpec {
                initiator: skewed_initiator(4, 0.95, 0.55),
                iterations: 8,
                target_dims: vec![250; 4],
                sample_count: 120_000,
                seed: 3,
            }),
        },
        BundledTensor {
            name: "pl4-small",
            description: "4th-order power law, 16384^3 x 82",
            spec: GeneratorSpec::PowerLaw(PowerLawSpec {
                dims: vec![16384, 16384, 16384, 82],
                sparse_modes: vec![0, 1, 2],
                dense_modes: vec![3],
                nnz_target: 120_000,
                alpha: 1.2,
                seed: 4,
            }),
        },
        BundledTensor {
            name: "pl4x2-small",
            description: "4th-order power law, 8192^2 x 122 x 436",
            spec: GeneratorSpec::PowerLaw(PowerLawSpec {
                dims: vec![8192, 8192, 122, 436],
                sparse_modes: vec![0, 1],
                dense_modes: vec![2, 3],
                nnz_target: 160_000,
                alpha: 1.2,
                seed: 5,
            }),
        },
    ]
}

pub fn bundled_tensor(name: &str) -> Result<BundledTensor> {
    bundled_tensors()
        .into_iter()
        .find(|b| b.name == name)
        .ok_or_else(|| Error::Spec(format!("no bundled tensor named '{name}'")))
}
