//! Fixtures shared by the criterion benchmarks: a bundled tensor in COO and
//! HiCOO form with seeded dense operands.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use spbench_core::generators::bundled_tensor;
use spbench_core::{CooTensor, DenseMatrix, DenseVector, HicooTensor};

pub struct Fixture {
    pub name: &'static str,
    pub coo: CooTensor<f32>,
    pub hicoo: HicooTensor<f32>,
    pub vectors: Vec<DenseVector<f32>>,
    pub factors: Vec<DenseMatrix<f32>>,
}

impl Fixture {
    pub fn load(name: &'static str, rank: usize, block_size: u32) -> Self {
        let coo: CooTensor<f32> = bundled_tensor(name)
            .expect("bundled tensor")
            .spec
            .generate()
            .expect("generate");
        let hicoo = HicooTensor::from_coo(&coo, block_size).expect("hicoo");
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let vectors = coo
            .dims()
            .iter()
            .map(|&d| DenseVector::random(d as usize, &mut rng))
            .collect();
        let factors = coo
            .dims()
            .iter()
            .map(|&d| DenseMatrix::random(d as usize, rank, &mut rng))
            .collect();
        Fixture {
            name,
            coo,
            hicoo,
            vectors,
            factors,
        }
    }

    /// gHiCOO copy with every mode except `n` compressed.
    pub fn ghicoo_for(&self, n: usize) -> HicooTensor<f32> {
        let comp: Vec<usize> = (0..self.coo.order()).filter(|&m| m != n).collect();
        HicooTensor::from_coo_compressed(&self.coo, &comp, self.hicoo.block_size()).expect("ghicoo")
    }
}
