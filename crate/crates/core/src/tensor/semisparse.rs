use serde::{Deserialize, Serialize};

use super::hicoo::ModeIndex;
use crate::scalar::Scalar;

/// Index store over the sparse modes of a semi-sparse tensor, one entry per
/// fiber.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum SparseIndex {
    /// sCOO: one flat index array per sparse mode.
    Coo(Vec<Vec<u32>>),
    /// sHiCOO: blocked indices over the sparse modes.
    Hicoo {
        block_size: u32,
        bptr: Vec<u64>,
        modes: Vec<ModeIndex>,
    },
}

/// Tensor with one or more dense modes: sparse modes are indexed per fiber,
/// and each fiber owns a contiguous chunk of `prod(dense dims)` values laid
/// out row-major over the dense modes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SemiSparseTensor<V> {
    dims: Vec<u32>,
    dense_modes: Vec<usize>,
    index: SparseIndex,
    vals: Vec<V>,
}

impl<V: Scalar> SemiSparseTensor<V> {
    pub fn from_raw_parts_unchecked(
        dims: Vec<u32>,
        dense_modes: Vec<usize>,
        index: SparseIndex,
        vals: Vec<V>,
    ) -> Self {
        SemiSparseTensor {
            dims,
            dense_modes,
            index,
            vals,
        }
    }

    pub fn order(&self) -> usize {
        self.dims.len()
    }

    pub fn dims(&self) -> &[u32] {
        &self.dims
    }

    pub fn dense_modes(&self) -> &[usize] {
        &self.dense_modes
    }

    pub fn sparse_modes(&self) -> Vec<usize> {
        (0..self.order())
            .filter(|m| !self.dense_modes.contains(m))
            .collect()
    }

    pub fn index(&self) -> &SparseIndex {
        &self.index
    }

    pub fn chunk_len(&self) -> usize {
        self.dense_modes
            .iter()
            .map(|&m| self.dims[m] as usize)
            .product()
    }

    pub fn nfibers(&self) -> usize {
        match &self.index {
            SparseIndex::Coo(inds) => inds.first().map_or(0, Vec::len),
            SparseIndex::Hicoo { modes, .. } => match modes.first() {
                Some(ModeIndex::Blocked { einds, .. }) => einds.len(),
                Some(ModeIndex::Flat(a)) => a.len(),
                None => 0,
            },
        }
    }

    pub fn vals(&self) -> &[V] {
        &self.vals
    }

    pub fn vals_mut(&mut self) -> &mut [V] {
        &mut self.vals
    }

    pub fn chunk(&self, f: usize) -> &[V] {
        let c = self.chunk_len();
        &self.vals[f * c..(f + 1) * c]
    }

    /// Sparse-mode indices of every fiber, one array per sparse mode.
    pub fn decode_sparse_inds(&self) -> Vec<Vec<u32>> {
        match &self.index {
            SparseIndex::Coo(inds) => inds.clone(),
            SparseIndex::Hicoo {
                block_size,
                bptr,
                modes,
            } => {
                let mut out = vec![Vec::with_capacity(self.nfibers()); modes.len()];
                for b in 0..bptr.len().saturating_sub(1) {
                    for x in bptr[b] as usize..bptr[b + 1] as usize {
                        for (k, mi) in modes.iter().enumerate() {
                            out[k].push(match mi {
                                ModeIndex::Blocked { binds, einds } => {
                                    binds[b] * block_size + einds[x] as u32
                                }
                                ModeIndex::Flat(a) => a[x],
                            });
                        }
                    }
                }
                out
            }
        }
    }

    /// Calls `f(coordinate, value)` for every stored value, including the
    /// dense positions of each fiber.
    pub fn for_each_value(&self, mut f: impl FnMut(&[u32], V)) {
        let sparse = self.sparse_modes();
        let inds = self.decode_sparse_inds();
        let dense_dims: Vec<u32> = self.dense_modes.iter().map(|&m| self.dims[m]).collect();
        let chunk = self.chunk_len();
        let mut coord = vec![0u32; self.order()];
        for fib in 0..self.nfibers() {
            for (k, &m) in sparse.iter().enumerate() {
                coord[m] = inds[k][fib];
            }
            for off in 0..chunk {
                let mut rem = off;
                for (j, &m) in self.dense_modes.iter().enumerate().rev() {
                    coord[m] = (rem % dense_dims[j] as usize) as u32;
                    rem /= dense_dims[j] as usize;
                }
                f(&coord, self.vals[fib * chunk + off]);
            }
        }
    }
}
