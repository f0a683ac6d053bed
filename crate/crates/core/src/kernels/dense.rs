//! Dense operands for the kernels and the dense tensor used by the oracle.

use rand::Rng;

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::tensor::{CooTensor, HicooTensor, SemiSparseTensor};

/// Row-major `rows x cols` matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix<V> {
    rows: usize,
    cols: usize,
    data: Vec<V>,
}

impl<V: Scalar> DenseMatrix<V> {
    pub fn new(rows: usize, cols: usize, data: Vec<V>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::ShapeMismatch(format!(
                "{} values for a {rows}x{cols} matrix",
                data.len()
            )));
        }
        Ok(DenseMatrix { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        DenseMatrix {
            rows,
            cols,
            data: vec![V::ZERO; rows * cols],
        }
    }

    pub fn from_fn(rows: usize, cols: usize, f: impl Fn(usize, usize) -> V) -> Self {
        let data = (0..rows * cols).map(|x| f(x / cols, x % cols)).collect();
        DenseMatrix { rows, cols, data }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_fn(n, n, |i, j| if i == j { V::ONE } else { V::ZERO })
    }

    /// Entries drawn uniformly from `(0, 1]`.
    pub fn random(rows: usize, cols: usize, rng: &mut impl Rng) -> Self {
        let data = (0..rows * cols).map(|_| unit_open_closed(rng)).collect();
        DenseMatrix { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn data(&self) -> &[V] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [V] {
        &mut self.data
    }

    pub fn row(&self, i: usize) -> &[V] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn get(&self, i: usize, j: usize) -> V {
        self.data[i * self.cols + j]
    }

    pub fn to_f64(&self) -> DenseMatrix<f64> {
        DenseMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|v| v.to_f64()).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DenseVector<V>(Vec<V>);

impl<V: Scalar> DenseVector<V> {
    pub fn new(values: Vec<V>) -> Self {
        DenseVector(values)
    }

    pub fn random(len: usize, rng: &mut impl Rng) -> Self {
        DenseVector((0..len).map(|_| unit_open_closed(rng)).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[V] {
        &self.0
    }

    pub fn to_f64(&self) -> Vec<f64> {
        self.0.iter().map(|v| v.to_f64()).collect()
    }
}

/// Uniform draw from `(0, 1]`.
pub fn unit_open_closed<V: Scalar>(rng: &mut impl Rng) -> V {
    let u: f64 = rng.random();
    let v = V::from_f64(1.0 - u);
    if v == V::ZERO {
        V::ONE
    } else {
        v
    }
}

/// Default cell cap for [`DenseTensor`].
pub const DENSE_CAP: usize = 10_000_000;

/// Fully materialized tensor in 64-bit precision, with a mask marking which
/// cells were stored in the sparse source.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseTensor {
    dims: Vec<usize>,
    data: Vec<f64>,
    stored: Vec<bool>,
}

impl DenseTensor {
    pub fn zeros(dims: Vec<usize>, cap: usize) -> Result<Self> {
        let cells: u128 = dims.iter().map(|&d| d as u128).product();
        if cells > cap as u128 {
            return Err(Error::DenseCapExceeded { cells, cap });
        }
        let n = cells as usize;
        Ok(DenseTensor {
            dims,
            data: vec![0.0; n],
            stored: vec![false; n],
        })
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn stored(&self) -> &[bool] {
        &self.stored
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn offset(&self, coord: &[usize]) -> usize {
        coord
            .iter()
            .zip(&self.dims)
            .fold(0, |acc, (&c, &d)| acc * d + c)
    }

    pub fn coord(&self, mut offset: usize) -> Vec<usize> {
        let mut c = vec![0; self.dims.len()];
        for m in (0..self.dims.len()).rev() {
            c[m] = offset % self.dims[m];
            offset /= self.dims[m];
        }
        c
    }

    pub fn get(&self, coord: &[usize]) -> f64 {
        self.data[self.offset(coord)]
    }

    pub fn is_stored(&self, coord: &[usize]) -> bool {
        self.stored[self.offset(coord)]
    }

    pub(crate) fn put(&mut self, offset: usize, v: f64) {
        self.data[offset] += v;
        self.stored[offset] = true;
    }

    pub(crate) fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    #[cfg(test)]
    pub(crate) fn stored_mut(&mut self) -> &mut [bool] {
        &mut self.stored
    }
}

/// Densification of a sparse representation.
pub trait ToDense {
    fn to_dense(&self, cap: usize) -> Result<DenseTensor>;
}

fn dims_usize(dims: &[u32]) -> Vec<usize> {
    dims.iter().map(|&d| d as usize).collect()
}

impl<V: Scalar> ToDense for CooTensor<V> {
    fn to_dense(&self, cap: usize) -> Result<DenseTensor> {
        let mut d = DenseTensor::zeros(dims_usize(self.dims()), cap)?;
        let mut c = vec![0usize; self.order()];
        for x in 0..self.nnz() {
            for (m, slot) in c.iter_mut().enumerate() {
                *slot = self.inds(m)[x] as usize;
            }
            let off = d.offset(&c);
            d.put(off, self.vals()[x].to_f64());
        }
        Ok(d)
    }
}

impl<V: Scalar> ToDense for HicooTensor<V> {
    fn to_dense(&self, cap: usize) -> Result<DenseTensor> {
        let mut d = DenseTensor::zeros(dims_usize(self.dims()), cap)?;
        let mut c = vec![0usize; self.order()];
        for b in 0..self.nblocks() {
            for x in self.block_range(b) {
                for (m, slot) in c.iter_mut().enumerate() {
                    *slot = self.index(m, b, x) as usize;
                }
                let off = d.offset(&c);
                d.put(off, self.vals()[x].to_f64());
            }
        }
        Ok(d)
    }
}

impl<V: Scalar> ToDense for SemiSparseTensor<V> {
    fn to_dense(&self, cap: usize) -> Result<DenseTensor> {
        let mut d = DenseTensor::zeros(dims_usize(self.dims()), cap)?;
        self.for_each_value(|coord, v| {
            let c: Vec<usize> = coord.iter().map(|&i| i as usize).collect();
            let off = d.offset(&c);
            d.put(off, v.to_f64());
        });
        Ok(d)
    }
}
