use std::borrow::Cow;
use std::cmp::Ordering;

use rayon::prelude::*;

use super::{check_mode, DenseVector, Executor, KernelPlan};
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::tensor::morton::morton_cmp_by;
use crate::tensor::{
    fiber_mode_order, CooTensor, FiberLayout, HicooBuilder, HicooTensor, ModeIndex, SortState,
};

/// COO input sorted with `n` last, borrowed when it already is.
pub(crate) fn fiber_sorted<V: Scalar>(
    x: &CooTensor<V>,
    n: usize,
) -> Result<(Cow<'_, CooTensor<V>>, FiberLayout)> {
    check_mode(x.order(), n)?;
    let wanted = SortState::Lexicographic(fiber_mode_order(x.order(), n));
    let sorted = if *x.sort_state() == wanted {
        Cow::Borrowed(x)
    } else {
        Cow::Owned(x.lex_sort(&fiber_mode_order(x.order(), n))?)
    };
    let layout = FiberLayout::from_sorted(&sorted, n)?;
    Ok((sorted, layout))
}

/// Output coordinates of each fiber: the fiber's indices on every mode but `n`.
pub(crate) fn fiber_heads<V: Scalar>(
    sorted: &CooTensor<V>,
    layout: &FiberLayout,
    n: usize,
) -> Vec<Vec<u32>> {
    (0..sorted.order())
        .filter(|&m| m != n)
        .map(|m| {
            (0..layout.nfibs())
                .map(|f| sorted.inds(m)[layout.fptr()[f]])
                .collect()
        })
        .collect()
}

/// gHiCOO input reordered inside blocks so that mode-`n` fibers are
/// contiguous, with the fiber start offsets.
pub(crate) struct GHicooFibers<'a, V: Clone> {
    pub tensor: Cow<'a, HicooTensor<V>>,
    pub fptr: Vec<usize>,
}

pub(crate) fn ghicoo_fibers<V: Scalar>(
    x: &HicooTensor<V>,
    n: usize,
) -> Result<GHicooFibers<'_, V>> {
    check_mode(x.order(), n)?;
    if x.is_compressed(n) {
        return Err(Error::CompressedProductMode { mode: n });
    }
    let order = x.order();
    let comp = x.compressed_modes();
    let flat_other: Vec<usize> = (0..order)
        .filter(|&m| m != n && !x.is_compressed(m))
        .collect();
    let einds: Vec<&[u8]> = comp
        .iter()
        .map(|&m| match x.mode(m) {
            ModeIndex::Blocked { einds, .. } => einds.as_slice(),
            ModeIndex::Flat(_) => unreachable!(),
        })
        .collect();
    let flat_of = |m: usize| -> &[u32] {
        match x.mode(m) {
            ModeIndex::Flat(a) => a.as_slice(),
            ModeIndex::Blocked { .. } => unreachable!(),
        }
    };
    let others: Vec<&[u32]> = flat_other.iter().map(|&m| flat_of(m)).collect();
    let prod = flat_of(n);

    // same fiber: equal element offsets and equal non-product flat indices
    let fiber_cmp = |a: usize, b: usize| -> Ordering {
        morton_cmp_by(einds.len(), |k| einds[k][a] as u32, |k| einds[k][b] as u32).then_with(|| {
            others
                .iter()
                .map(|arr| arr[a].cmp(&arr[b]))
                .find(|o| o.is_ne())
                .unwrap_or(Ordering::Equal)
        })
    };

    let mut perm: Vec<usize> = (0..x.nnz()).collect();
    let blocks: Vec<std::ops::Range<usize>> = (0..x.nblocks()).map(|b| x.block_range(b)).collect();
    {
        let mut rest = perm.as_mut_slice();
        let mut chunks = Vec::with_capacity(blocks.len());
        for r in &blocks {
            let (head, tail) = rest.split_at_mut(r.len());
            chunks.push(head);
            rest = tail;
        }
        chunks.into_par_iter().for_each(|chunk| {
            chunk.sort_by(|&a, &b| fiber_cmp(a, b).then_with(|| prod[a].cmp(&prod[b])));
        });
    }
    let identity = perm.iter().enumerate().all(|(i, &p)| i == p);
    let tensor = if identity {
        Cow::Borrowed(x)
    } else {
        Cow::Owned(x.permuted_within_blocks(&perm))
    };

    let t = tensor.as_ref();
    let einds: Vec<&[u8]> = comp
        .iter()
        .map(|&m| match t.mode(m) {
            ModeIndex::Blocked { einds, .. } => einds.as_slice(),
            ModeIndex::Flat(_) => unreachable!(),
        })
        .collect();
    let others: Vec<&[u32]> = flat_other
        .iter()
        .map(|&m| match t.mode(m) {
            ModeIndex::Flat(a) => a.as_slice(),
            ModeIndex::Blocked { .. } => unreachable!(),
        })
        .collect();
    let mut fptr = vec![0usize];
    for r in &blocks {
        for x in r.clone() {
            if x == r.start {
                if x != 0 {
                    fptr.push(x);
                }
                continue;
            }
            let differs =
                einds.iter().any(|e| e[x] != e[x - 1]) || others.iter().any(|a| a[x] != a[x - 1]);
            if differs {
                fptr.push(x);
            }
        }
    }
    if t.nnz() > 0 {
        fptr.push(t.nnz());
    }
    Ok(GHicooFibers { tensor, fptr })
}

/// Blocked index store for the fiber heads of a gHiCOO tensor, with mode
/// `n` removed.
pub(crate) fn ghicoo_fiber_heads<V: Scalar>(
    t: &HicooTensor<V>,
    fptr: &[usize],
    n: usize,
) -> Result<HicooTensor<V>> {
    let order = t.order();
    let dims: Vec<u32> = (0..order)
        .filter(|&m| m != n)
        .map(|m| t.dims()[m])
        .collect();
    let compressed: Vec<bool> = (0..order)
        .filter(|&m| m != n)
        .map(|m| t.is_compressed(m))
        .collect();
    let nfibs = fptr.len() - 1;
    let mut builder = HicooBuilder::new(dims, t.block_size(), compressed, nfibs)?;
    let mut coord = vec![0u32; order - 1];
    let mut b = 0;
    for f in 0..nfibs {
        let x = fptr[f];
        while t.bptr()[b + 1] as usize <= x {
            b += 1;
        }
        for (k, m) in (0..order).filter(|&m| m != n).enumerate() {
            coord[k] = t.index(m, b, x);
        }
        builder.push(&coord, V::ZERO);
    }
    Ok(builder.finish())
}

/// Tensor-times-vector on COO input; one output entry per mode-`n` fiber.
pub struct TtvCooPlan<'a, V: Scalar> {
    sorted: Cow<'a, CooTensor<V>>,
    layout: FiberLayout,
    v: &'a DenseVector<V>,
    output: CooTensor<V>,
}

impl<'a, V: Scalar> TtvCooPlan<'a, V> {
    pub fn new(x: &'a CooTensor<V>, v: &'a DenseVector<V>, n: usize) -> Result<Self> {
        check_mode(x.order(), n)?;
        if x.order() < 2 {
            return Err(Error::Config("tensor-times-vector needs order >= 2".into()));
        }
        if v.len() != x.dims()[n] as usize {
            return Err(Error::ShapeMismatch(format!(
                "vector of length {} for mode {n} of size {}",
                v.len(),
                x.dims()[n]
            )));
        }
        let (sorted, layout) = fiber_sorted(x, n)?;
        let heads = fiber_heads(&sorted, &layout, n);
        let dims: Vec<u32> = (0..x.order())
            .filter(|&m| m != n)
            .map(|m| x.dims()[m])
            .collect();
        let output = CooTensor::from_raw_parts_unchecked(
            dims,
            heads,
            vec![V::ZERO; layout.nfibs()],
            SortState::Lexicographic((0..x.order() - 1).collect()),
        );
        Ok(TtvCooPlan {
            sorted,
            layout,
            v,
            output,
        })
    }

    pub fn layout(&self) -> &FiberLayout {
        &self.layout
    }

    pub fn output(&self) -> &CooTensor<V> {
        &self.output
    }

    pub fn into_output(self) -> CooTensor<V> {
        self.output
    }
}

fn ttv_fibers<V: Scalar>(
    exec: &Executor,
    fptr: &[usize],
    vals: &[V],
    kidx: &[u32],
    v: &[V],
    out: &mut [V],
) -> u64 {
    exec.install(|| {
        out.par_iter_mut()
            .enumerate()
            .map(|(f, o)| {
                let (lo, hi) = (fptr[f], fptr[f + 1]);
                let mut acc = V::ZERO;
                for x in lo..hi {
                    acc += vals[x] * v[kidx[x] as usize];
                }
                *o = acc;
                2 * (hi - lo) as u64
            })
            .sum()
    })
}

impl<V: Scalar> KernelPlan for TtvCooPlan<'_, V> {
    fn execute(&mut self, exec: &Executor) -> Result<u64> {
        let n = self.layout.mode();
        Ok(ttv_fibers(
            exec,
            self.layout.fptr(),
            self.sorted.vals(),
            self.sorted.inds(n),
            self.v.as_slice(),
            self.output.vals_mut(),
        ))
    }
}

/// Tensor-times-vector on gHiCOO input whose mode `n` is uncompressed; the
/// output keeps the blocking of the remaining modes.
pub struct TtvGHicooPlan<'a, V: Scalar> {
    fibers: GHicooFibers<'a, V>,
    n: usize,
    v: &'a DenseVector<V>,
    output: HicooTensor<V>,
}

impl<'a, V: Scalar> TtvGHicooPlan<'a, V> {
    pub fn new(x: &'a HicooTensor<V>, v: &'a DenseVector<V>, n: usize) -> Result<Self> {
        check_mode(x.order(), n)?;
        if v.len() != x.dims()[n] as usize {
            return Err(Error::ShapeMismatch(format!(
                "vector of length {} for mode {n} of size {}",
                v.len(),
                x.dims()[n]
            )));
        }
        let fibers = ghicoo_fibers(x, n)?;
        let output = ghicoo_fiber_heads(&fibers.tensor, &fibers.fptr, n)?;
        Ok(TtvGHicooPlan {
            fibers,
            n,
            v,
            output,
        })
    }

    pub fn nfibs(&self) -> usize {
        self.fibers.fptr.len() - 1
    }

    pub fn output(&self) -> &HicooTensor<V> {
        &self.output
    }

    pub fn into_output(self) -> HicooTensor<V> {
        self.output
    }
}

impl<V: Scalar> KernelPlan for TtvGHicooPlan<'_, V> {
    fn execute(&mut self, exec: &Executor) -> Result<u64> {
        let t = self.fibers.tensor.as_ref();
        let kidx = match t.mode(self.n) {
            ModeIndex::Flat(a) => a.as_slice(),
            ModeIndex::Blocked { .. } => unreachable!(),
        };
        Ok(ttv_fibers(
            exec,
            &self.fibers.fptr,
            t.vals(),
            kidx,
            self.v.as_slice(),
            self.output.vals_mut(),
        ))
    }
}

/// `Y = X x_n v` for COO `X`.
pub fn ttv<V: Scalar>(
    x: &CooTensor<V>,
    v: &DenseVector<V>,
    n: usize,
    exec: &Executor,
) -> Result<CooTensor<V>> {
    let mut plan = TtvCooPlan::new(x, v, n)?;
    plan.execute(exec)?;
    Ok(plan.into_output())
}

/// `Y = X x_n v` for gHiCOO `X`.
pub fn ttv_ghicoo<V: Scalar>(
    x: &HicooTensor<V>,
    v: &DenseVector<V>,
    n: usize,
    exec: &Executor,
) -> Result<HicooTensor<V>> {
    let mut plan = TtvGHicooPlan::new(x, v, n)?;
    plan.execute(exec)?;
    Ok(plan.into_output())
}
