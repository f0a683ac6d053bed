use std::borrow::Cow;

use rayon::prelude::*;

use super::ttv::{fiber_heads, fiber_sorted, ghicoo_fiber_heads, ghicoo_fibers, GHicooFibers};
use super::{check_mode, DenseMatrix, Executor, KernelPlan};
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::tensor::{
    CooTensor, FiberLayout, HicooTensor, ModeIndex, SemiSparseTensor, SparseIndex,
};

fn check_matrix<V: Scalar>(dims: &[u32], u: &DenseMatrix<V>, n: usize) -> Result<()> {
    if u.rows() != dims[n] as usize {
        return Err(Error::ShapeMismatch(format!(
            "matrix has {} rows for mode {n} of size {}",
            u.rows(),
            dims[n]
        )));
    }
    if u.cols() == 0 || u.cols() > u32::MAX as usize {
        return Err(Error::ShapeMismatch(format!(
            "matrix has {} columns",
            u.cols()
        )));
    }
    Ok(())
}

fn output_dims(dims: &[u32], n: usize, r: usize) -> Vec<u32> {
    let mut d = dims.to_vec();
    d[n] = r as u32;
    d
}

fn ttm_fibers<V: Scalar>(
    exec: &Executor,
    fptr: &[usize],
    vals: &[V],
    kidx: &[u32],
    u: &DenseMatrix<V>,
    out: &mut [V],
) -> u64 {
    let r = u.cols();
    exec.install(|| {
        out.par_chunks_mut(r)
            .enumerate()
            .map(|(f, chunk)| {
                let (lo, hi) = (fptr[f], fptr[f + 1]);
                chunk.fill(V::ZERO);
                for x in lo..hi {
                    let xv = vals[x];
                    let row = u.row(kidx[x] as usize);
                    for (c, &w) in chunk.iter_mut().zip(row) {
                        *c += xv * w;
                    }
                }
                2 * (hi - lo) as u64 * r as u64
            })
            .sum()
    })
}

/// Tensor-times-matrix on COO input. The output is sCOO: one dense chunk of
/// `R` values per mode-`n` fiber, with mode `n` as the dense mode.
pub struct TtmCooPlan<'a, V: Scalar> {
    sorted: Cow<'a, CooTensor<V>>,
    layout: FiberLayout,
    u: &'a DenseMatrix<V>,
    output: SemiSparseTensor<V>,
}

impl<'a, V: Scalar> TtmCooPlan<'a, V> {
    /// `u` has `dims[n]` rows and `R` columns.
    pub fn new(x: &'a CooTensor<V>, u: &'a DenseMatrix<V>, n: usize) -> Result<Self> {
        check_mode(x.order(), n)?;
        check_matrix(x.dims(), u, n)?;
        let (sorted, layout) = fiber_sorted(x, n)?;
        let heads = fiber_heads(&sorted, &layout, n);
        let output = SemiSparseTensor::from_raw_parts_unchecked(
            output_dims(x.dims(), n, u.cols()),
            vec![n],
            SparseIndex::Coo(heads),
            vec![V::ZERO; layout.nfibs() * u.cols()],
        );
        Ok(TtmCooPlan {
            sorted,
            layout,
            u,
            output,
        })
    }

    pub fn layout(&self) -> &FiberLayout {
        &self.layout
    }

    pub fn output(&self) -> &SemiSparseTensor<V> {
        &self.output
    }

    pub fn into_output(self) -> SemiSparseTensor<V> {
        self.output
    }
}

impl<V: Scalar> KernelPlan for TtmCooPlan<'_, V> {
    fn execute(&mut self, exec: &Executor) -> Result<u64> {
        let n = self.layout.mode();
        Ok(ttm_fibers(
            exec,
            self.layout.fptr(),
            self.sorted.vals(),
            self.sorted.inds(n),
            self.u,
            self.output.vals_mut(),
        ))
    }
}

/// Tensor-times-matrix on gHiCOO input with mode `n` uncompressed; the
/// output is sHiCOO.
pub struct TtmGHicooPlan<'a, V: Scalar> {
    fibers: GHicooFibers<'a, V>,
    n: usize,
    u: &'a DenseMatrix<V>,
    output: SemiSparseTensor<V>,
}

impl<'a, V: Scalar> TtmGHicooPlan<'a, V> {
    pub fn new(x: &'a HicooTensor<V>, u: &'a DenseMatrix<V>, n: usize) -> Result<Self> {
        check_mode(x.order(), n)?;
        check_matrix(x.dims(), u, n)?;
        let fibers = ghicoo_fibers(x, n)?;
        let heads = ghicoo_fiber_heads(&fibers.tensor, &fibers.fptr, n)?;
        let nfibs = heads.nnz();
        let (_, block_size, bptr, modes, _) = heads.into_parts();
        let output = SemiSparseTensor::from_raw_parts_unchecked(
            output_dims(x.dims(), n, u.cols()),
            vec![n],
            SparseIndex::Hicoo {
                block_size,
                bptr,
                modes,
            },
            vec![V::ZERO; nfibs * u.cols()],
        );
        Ok(TtmGHicooPlan {
            fibers,
            n,
            u,
            output,
        })
    }

    pub fn nfibs(&self) -> usize {
        self.fibers.fptr.len() - 1
    }

    pub fn output(&self) -> &SemiSparseTensor<V> {
        &self.output
    }

    pub fn into_output(self) -> SemiSparseTensor<V> {
        self.output
    }
}

impl<V: Scalar> KernelPlan for TtmGHicooPlan<'_, V> {
    fn execute(&mut self, exec: &Executor) -> Result<u64> {
        let t = self.fibers.tensor.as_ref();
        let kidx = match t.mode(self.n) {
            ModeIndex::Flat(a) => a.as_slice(),
            ModeIndex::Blocked { .. } => unreachable!(),
        };
        Ok(ttm_fibers(
            exec,
            &self.fibers.fptr,
            t.vals(),
            kidx,
            self.u,
            self.output.vals_mut(),
        ))
    }
}

/// `Y = X x_n U` for COO `X`, with `U` of shape `dims[n] x R`.
pub fn ttm<V: Scalar>(
    x: &CooTensor<V>,
    u: &DenseMatrix<V>,
    n: usize,
    exec: &Executor,
) -> Result<SemiSparseTensor<V>> {
    let mut plan = TtmCooPlan::new(x, u, n)?;
    plan.execute(exec)?;
    Ok(plan.into_output())
}

/// `Y = X x_n U` for gHiCOO `X`.
pub fn ttm_ghicoo<V: Scalar>(
    x: &HicooTensor<V>,
    u: &DenseMatrix<V>,
    n: usize,
    exec: &Executor,
) -> Result<SemiSparseTensor<V>> {
    let mut plan = TtmGHicooPlan::new(x, u, n)?;
    plan.execute(exec)?;
    Ok(plan.into_output())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::{ToDense, DENSE_CAP};
    use crate::tensor::Validate;

    fn x() -> CooTensor<f32> {
        CooTensor::from_entries(
            vec![2, 2, 2],
            [
                (vec![0, 0, 0], 1.0),
                (vec![0, 1, 1], 2.0),
                (vec![1, 0, 1], 3.0),
            ],
        )
        .unwrap()
    }

    #[test]
    fn ones_matrix_replicates_fiber_sums() {
        let e = Executor::new(2).unwrap();
        let u = DenseMatrix::from_fn(2, 2, |_, _| 1.0f32);
        let y = ttm(&x(), &u, 2, &e).unwrap();
        assert_eq!(y.nfibers(), 3);
        assert_eq!(y.dense_modes(), &[2]);
        assert_eq!(y.chunk(0), &[1.0, 1.0]);
        assert_eq!(y.chunk(1), &[2.0, 2.0]);
        assert_eq!(y.chunk(2), &[3.0, 3.0]);
        assert_eq!(y.decode_sparse_inds(), vec![vec![0, 0, 1], vec![0, 1, 0]]);
        assert!(y.validate().is_empty());
    }

    #[test]
    fn identity_matrix_reproduces_fibers() {
        let e = Executor::new(1).unwrap();
        let u = DenseMatrix::<f32>::identity(2);
        let y = ttm(&x(), &u, 2, &e).unwrap();
        // entry (f, r) is X at k = r, zero where absent
        let d = y.to_dense(DENSE_CAP).unwrap();
        assert_eq!(d, {
            let mut expect = x().to_dense(DENSE_CAP).unwrap();
            // every cell of a nonempty (i, j) fiber is stored in the output
            for (o, s) in expect.stored_mut().iter_mut().enumerate() {
                let c = [o / 4, (o / 2) % 2];
                *s = !(c == [1, 1]);
            }
            expect
        });
    }

    #[test]
    fn flop_count() {
        let e = Executor::new(1).unwrap();
        let u = DenseMatrix::from_fn(2, 2, |_, _| 1.0f32);
        let t = x();
        let mut plan = TtmCooPlan::new(&t, &u, 2).unwrap();
        assert_eq!(plan.execute(&e).unwrap(), 12);
    }

    #[test]
    fn row_count_checked() {
        let e = Executor::new(1).unwrap();
        let u = DenseMatrix::<f32>::zeros(3, 2);
        assert!(matches!(ttm(&x(), &u, 0, &e), Err(Error::ShapeMismatch(_))));
    }

    #[test]
    fn shicoo_output_matches_scoo() {
        let e = Executor::new(2).unwrap();
        let t = CooTensor::from_entries(
            vec![6, 5, 7],
            (0..40u32).map(|i| (vec![i % 6, (i * 3) % 5, (i * 5) % 7], 0.5 + i as f32)),
        )
        .unwrap();
        for n in 0..3 {
            let u = DenseMatrix::from_fn(t.dims()[n] as usize, 3, |i, j| (i + 2 * j) as f32 + 0.25);
            let comp: Vec<usize> = (0..3).filter(|&m| m != n).collect();
            let g = HicooTensor::from_coo_compressed(&t, &comp, 4).unwrap();
            let hy = ttm_ghicoo(&g, &u, n, &e).unwrap();
            assert!(hy.validate().is_empty(), "{:?}", hy.validate());
            let y = ttm(&t, &u, n, &e).unwrap();
            assert_eq!(
                hy.to_dense(DENSE_CAP).unwrap(),
                y.to_dense(DENSE_CAP).unwrap()
            );
        }
    }
}
