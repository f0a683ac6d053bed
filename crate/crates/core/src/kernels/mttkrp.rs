use std::ops::Range;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{check_mode, DenseMatrix, Executor, KernelPlan};
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::tensor::{CooTensor, HicooTensor, ModeIndex};

/// How concurrent updates to the same output row are combined.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub enum MttkrpStrategy {
    /// Lock-free atomic adds into one shared output. Summation order depends
    /// on scheduling, so results can differ in the last bits between runs.
    #[default]
    Atomic,
    /// One private output per worker over a fixed contiguous partition,
    /// reduced in partition order. Bitwise reproducible for a given worker
    /// count.
    Privatized,
}

/// Pairs each non-product mode with its factor matrix.
///
/// Accepts either `N - 1` factors in mode order with mode `n` skipped, or
/// `N` factors where entry `n` is ignored.
fn pair_factors<'a, V: Scalar>(
    dims: &[u32],
    factors: &[&'a DenseMatrix<V>],
    n: usize,
) -> Result<(Vec<(usize, &'a DenseMatrix<V>)>, usize)> {
    let order = dims.len();
    check_mode(order, n)?;
    let others: Vec<usize> = (0..order).filter(|&m| m != n).collect();
    let pairs: Vec<(usize, &DenseMatrix<V>)> = if factors.len() == order {
        others.iter().map(|&m| (m, factors[m])).collect()
    } else if factors.len() + 1 == order {
        others
            .iter()
            .copied()
            .zip(factors.iter().copied())
            .collect()
    } else {
        return Err(Error::ShapeMismatch(format!(
            "{} factor matrices for an order-{order} tensor",
            factors.len()
        )));
    };
    let rank = match pairs.first() {
        Some((_, u)) => u.cols(),
        None => return Err(Error::Config("MTTKRP needs order >= 2".into())),
    };
    if rank == 0 {
        return Err(Error::ShapeMismatch(
            "factor matrices have no columns".into(),
        ));
    }
    for &(m, u) in &pairs {
        if u.rows() != dims[m] as usize || u.cols() != rank {
            return Err(Error::ShapeMismatch(format!(
                "factor for mode {m} is {}x{}, expected {}x{rank}",
                u.rows(),
                u.cols(),
                dims[m]
            )));
        }
    }
    Ok((pairs, rank))
}

/// Splits `0..len` into `parts` contiguous ranges of near-equal weight, where
/// `prefix[i]` is the cumulative weight before item `i`.
fn balanced_ranges(prefix: &[u64], parts: usize) -> Vec<Range<usize>> {
    let len = prefix.len() - 1;
    let total = prefix[len];
    let mut out = Vec::with_capacity(parts);
    let mut lo = 0;
    for p in 1..=parts {
        let target = total * p as u64 / parts as u64;
        let hi = if p == parts {
            len
        } else {
            prefix.partition_point(|&w| w < target).min(len).max(lo)
        };
        out.push(lo..hi);
        lo = hi;
    }
    out
}

/// Multiplies the value into the factor rows of one nonzero.
#[inline]
fn khatri_rao_row<V: Scalar>(
    scratch: &mut [V],
    xv: V,
    others: &[(usize, &DenseMatrix<V>)],
    idx: impl Fn(usize) -> usize,
) {
    scratch.fill(xv);
    for &(m, u) in others {
        for (s, &w) in scratch.iter_mut().zip(u.row(idx(m))) {
            *s = *s * w;
        }
    }
}

#[inline]
fn add_row<V: Scalar>(dst: &mut [V], src: &[V]) {
    for (d, &s) in dst.iter_mut().zip(src) {
        *d += s;
    }
}

#[inline]
fn atomic_add_row<V: Scalar>(dst: &[V::Atomic], src: &[V]) {
    for (d, &s) in dst.iter().zip(src) {
        V::atomic_add(d, s);
    }
}

/// Sums private buffers element-wise in buffer order.
fn reduce_private<V: Scalar>(out: &mut [V], partials: &[Vec<V>]) {
    out.par_iter_mut().enumerate().for_each(|(i, o)| {
        let mut acc = V::ZERO;
        for p in partials {
            acc += p[i];
        }
        *o = acc;
    });
}

fn flops(order: usize, nnz: usize, rank: usize) -> u64 {
    (order * nnz * rank) as u64
}

/// MTTKRP on COO input, parallel over nonzeros.
pub struct MttkrpCooPlan<'a, V: Scalar> {
    x: &'a CooTensor<V>,
    n: usize,
    others: Vec<(usize, &'a DenseMatrix<V>)>,
    rank: usize,
    strategy: MttkrpStrategy,
    shared: Vec<V::Atomic>,
    output: DenseMatrix<V>,
}

impl<'a, V: Scalar> MttkrpCooPlan<'a, V> {
    pub fn new(
        x: &'a CooTensor<V>,
        factors: &[&'a DenseMatrix<V>],
        n: usize,
        strategy: MttkrpStrategy,
    ) -> Result<Self> {
        let (others, rank) = pair_factors(x.dims(), factors, n)?;
        let rows = x.dims()[n] as usize;
        let shared = match strategy {
            MttkrpStrategy::Atomic => (0..rows * rank).map(|_| V::new_atomic(V::ZERO)).collect(),
            MttkrpStrategy::Privatized => Vec::new(),
        };
        Ok(MttkrpCooPlan {
            x,
            n,
            others,
            rank,
            strategy,
            shared,
            output: DenseMatrix::zeros(rows, rank),
        })
    }

    pub fn output(&self) -> &DenseMatrix<V> {
        &self.output
    }

    pub fn into_output(self) -> DenseMatrix<V> {
        self.output
    }
}

impl<V: Scalar> KernelPlan for MttkrpCooPlan<'_, V> {
    fn execute(&mut self, exec: &Executor) -> Result<u64> {
        let (x, n, r) = (self.x, self.n, self.rank);
        let others = &self.others;
        let inds = x.all_inds();
        let vals = x.vals();
        let out_idx = x.inds(n);
        let shared = &self.shared;
        let out = self.output.data_mut();
        let workers = exec.workers();
        exec.install(|| match self.strategy {
            MttkrpStrategy::Atomic => {
                shared.par_iter().for_each(|c| V::atomic_store(c, V::ZERO));
                (0..vals.len())
                    .into_par_iter()
                    .with_min_len(256)
                    .for_each_init(
                        || vec![V::ZERO; r],
                        |s, e| {
                            khatri_rao_row(s, vals[e], others, |m| inds[m][e] as usize);
                            let row = out_idx[e] as usize * r;
                            atomic_add_row::<V>(&shared[row..row + r], s);
                        },
                    );
                out.par_iter_mut()
                    .zip(shared.par_iter())
                    .for_each(|(o, c)| *o = V::atomic_load(c));
            }
            MttkrpStrategy::Privatized => {
                let nnz = vals.len();
                let parts: Vec<Range<usize>> = (0..workers)
                    .map(|p| nnz * p / workers..nnz * (p + 1) / workers)
                    .collect();
                let len = out.len();
                let partials: Vec<Vec<V>> = parts
                    .into_par_iter()
                    .map(|range| {
                        let mut buf = vec![V::ZERO; len];
                        let mut s = vec![V::ZERO; r];
                        for e in range {
                            khatri_rao_row(&mut s, vals[e], others, |m| inds[m][e] as usize);
                            let row = out_idx[e] as usize * r;
                            add_row(&mut buf[row..row + r], &s);
                        }
                        buf
                    })
                    .collect();
                reduce_private(out, &partials);
            }
        });
        Ok(flops(x.order(), x.nnz(), r))
    }
}

/// MTTKRP on HiCOO input, parallel over blocks. Flat modes of a gHiCOO
/// tensor are read directly.
pub struct MttkrpHicooPlan<'a, V: Scalar> {
    x: &'a HicooTensor<V>,
    n: usize,
    others: Vec<(usize, &'a DenseMatrix<V>)>,
    rank: usize,
    strategy: MttkrpStrategy,
    shared: Vec<V::Atomic>,
    output: DenseMatrix<V>,
}

impl<'a, V: Scalar> MttkrpHicooPlan<'a, V> {
    pub fn new(
        x: &'a HicooTensor<V>,
        factors: &[&'a DenseMatrix<V>],
        n: usize,
        strategy: MttkrpStrategy,
    ) -> Result<Self> {
        let (others, rank) = pair_factors(x.dims(), factors, n)?;
        let rows = x.dims()[n] as usize;
        let shared = match strategy {
            MttkrpStrategy::Atomic => (0..rows * rank).map(|_| V::new_atomic(V::ZERO)).collect(),
            MttkrpStrategy::Privatized => Vec::new(),
        };
        Ok(MttkrpHicooPlan {
            x,
            n,
            others,
            rank,
            strategy,
            shared,
            output: DenseMatrix::zeros(rows, rank),
        })
    }

    pub fn output(&self) -> &DenseMatrix<V> {
        &self.output
    }

    pub fn into_output(self) -> DenseMatrix<V> {
        self.output
    }
}

/// Visits every nonzero of block `b` with a mode index lookup.
#[inline]
fn for_block<V: Scalar>(
    t: &HicooTensor<V>,
    b: usize,
    base: &mut [usize],
    mut f: impl FnMut(usize, &dyn Fn(usize) -> usize),
) {
    let modes = t.modes();
    let bs = t.block_size() as usize;
    for (m, slot) in base.iter_mut().enumerate() {
        if let ModeIndex::Blocked { binds, .. } = &modes[m] {
            *slot = binds[b] as usize * bs;
        }
    }
    for e in t.block_range(b) {
        let idx = |m: usize| match &modes[m] {
            ModeIndex::Blocked { einds, .. } => base[m] + einds[e] as usize,
            ModeIndex::Flat(a) => a[e] as usize,
        };
        f(e, &idx);
    }
}

impl<V: Scalar> KernelPlan for MttkrpHicooPlan<'_, V> {
    fn execute(&mut self, exec: &Executor) -> Result<u64> {
        let (x, n, r) = (self.x, self.n, self.rank);
        let others = &self.others;
        let vals = x.vals();
        let order = x.order();
        let shared = &self.shared;
        let out = self.output.data_mut();
        let workers = exec.workers();
        exec.install(|| match self.strategy {
            MttkrpStrategy::Atomic => {
                shared.par_iter().for_each(|c| V::atomic_store(c, V::ZERO));
                (0..x.nblocks()).into_par_iter().for_each_init(
                    || (vec![V::ZERO; r], vec![0usize; order]),
                    |(s, base), b| {
                        for_block(x, b, base, |e, idx| {
                            khatri_rao_row(s, vals[e], others, idx);
                            let row = idx(n) * r;
                            atomic_add_row::<V>(&shared[row..row + r], s);
                        });
                    },
                );
                out.par_iter_mut()
                    .zip(shared.par_iter())
                    .for_each(|(o, c)| *o = V::atomic_load(c));
            }
            MttkrpStrategy::Privatized => {
                let parts = balanced_ranges(x.bptr(), workers);
                let len = out.len();
                let partials: Vec<Vec<V>> = parts
                    .into_par_iter()
                    .map(|blocks| {
                        let mut buf = vec![V::ZERO; len];
                        let mut s = vec![V::ZERO; r];
                        let mut base = vec![0usize; order];
                        for b in blocks {
                            for_block(x, b, &mut base, |e, idx| {
                                khatri_rao_row(&mut s, vals[e], others, idx);
                                let row = idx(n) * r;
                                add_row(&mut buf[row..row + r], &s);
                            });
                        }
                        buf
                    })
                    .collect();
                reduce_private(out, &partials);
            }
        });
        Ok(flops(order, x.nnz(), r))
    }
}

/// Mode-`n` MTTKRP of a COO tensor with atomic accumulation.
pub fn mttkrp<V: Scalar>(
    x: &CooTensor<V>,
    factors: &[&DenseMatrix<V>],
    n: usize,
    exec: &Executor,
) -> Result<DenseMatrix<V>> {
    let mut plan = MttkrpCooPlan::new(x, factors, n, MttkrpStrategy::Atomic)?;
    plan.execute(exec)?;
    Ok(plan.into_output())
}

/// Mode-`n` MTTKRP of a HiCOO tensor with atomic accumulation.
pub fn mttkrp_hicoo<V: Scalar>(
    x: &HicooTensor<V>,
    factors: &[&DenseMatrix<V>],
    n: usize,
    exec: &Executor,
) -> Result<DenseMatrix<V>> {
    let mut plan = MttkrpHicooPlan::new(x, factors, n, MttkrpStrategy::Atomic)?;
    plan.execute(exec)?;
    Ok(plan.into_output())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn x() -> CooTensor<f32> {
        CooTensor::from_entries(
            vec![2, 2, 2],
            [
                (vec![0, 0, 0], 1.0),
                (vec![0, 1, 1], 1.0),
                (vec![1, 0, 1], 1.0),
            ],
        )
        .unwrap()
    }

    #[test]
    fn ones_factors_count_slice_nonzeros() {
        let e = Executor::new(2).unwrap();
        let ones = DenseMatrix::from_fn(2, 2, |_, _| 1.0f32);
        let m = mttkrp(&x(), &[&ones, &ones], 0, &e).unwrap();
        assert_eq!(m.row(0), &[2.0, 2.0]);
        assert_eq!(m.row(1), &[1.0, 1.0]);
        let full = mttkrp(&x(), &[&ones, &ones, &ones], 0, &e).unwrap();
        assert_eq!(full, m);
    }

    #[test]
    fn zero_factor_gives_zero() {
        let e = Executor::new(1).unwrap();
        let ones = DenseMatrix::from_fn(2, 3, |_, _| 1.0f32);
        let zero = DenseMatrix::zeros(2, 3);
        let m = mttkrp(&x(), &[&ones, &zero], 2, &e).unwrap();
        assert!(m.data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn flop_count() {
        let e = Executor::new(1).unwrap();
        let ones = DenseMatrix::from_fn(2, 4, |_, _| 1.0f32);
        let t = x();
        let mut plan = MttkrpCooPlan::new(&t, &[&ones, &ones], 1, MttkrpStrategy::Atomic).unwrap();
        assert_eq!(plan.execute(&e).unwrap(), 3 * 3 * 4);
    }

    #[test]
    fn factor_shapes_checked() {
        let e = Executor::new(1).unwrap();
        let a = DenseMatrix::from_fn(2, 2, |_, _| 1.0f32);
        let b = DenseMatrix::from_fn(3, 2, |_, _| 1.0f32);
        let c = DenseMatrix::from_fn(2, 3, |_, _| 1.0f32);
        assert!(matches!(
            mttkrp(&x(), &[&a, &b], 0, &e),
            Err(Error::ShapeMismatch(_))
        ));
        assert!(matches!(
            mttkrp(&x(), &[&a, &c], 0, &e),
            Err(Error::ShapeMismatch(_))
        ));
        assert!(matches!(
            mttkrp(&x(), &[&a], 0, &e),
            Err(Error::ShapeMismatch(_))
        ));
    }

    fn random_case() -> (CooTensor<f64>, Vec<DenseMatrix<f64>>) {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let entries: Vec<(Vec<u32>, f64)> = (0..40)
            .map(|_| {
                (
                    (0..3).map(|_| rng.random_range(0..6)).collect(),
                    rng.random_range(0.1..1.0),
                )
            })
            .collect();
        let t = CooTensor::from_entries(vec![6, 6, 6], entries).unwrap();
        let f = (0..3)
            .map(|_| DenseMatrix::random(6, 4, &mut rng))
            .collect();
        (t, f)
    }

    fn brute(t: &CooTensor<f64>, f: &[DenseMatrix<f64>], n: usize) -> Vec<f64> {
        let r = f[0].cols();
        let mut out = vec![0.0; t.dims()[n] as usize * r];
        for e in 0..t.nnz() {
            let c = t.coord(e);
            for j in 0..r {
                let mut p = t.vals()[e];
                for m in (0..3).filter(|&m| m != n) {
                    p *= f[m].get(c[m] as usize, j);
                }
                out[c[n] as usize * r + j] += p;
            }
        }
        out
    }

    #[test]
    fn all_paths_agree() {
        let (t, f) = random_case();
        let refs: Vec<&DenseMatrix<f64>> = f.iter().collect();
        let h = HicooTensor::from_coo(&t, 2).unwrap();
        let g = HicooTensor::from_coo_compressed(&t, &[0, 2], 4).unwrap();
        for workers in [1, 3] {
            let e = Executor::new(workers).unwrap();
            for n in 0..3 {
                let want = brute(&t, &f, n);
                for strategy in [MttkrpStrategy::Atomic, MttkrpStrategy::Privatized] {
                    let mut p = MttkrpCooPlan::new(&t, &refs, n, strategy).unwrap();
                    p.execute(&e).unwrap();
                    let mut q = MttkrpHicooPlan::new(&h, &refs, n, strategy).unwrap();
                    q.execute(&e).unwrap();
                    let mut s = MttkrpHicooPlan::new(&g, &refs, n, strategy).unwrap();
                    s.execute(&e).unwrap();
                    for got in [p.output(), q.output(), s.output()] {
                        for (a, b) in got.data().iter().zip(&want) {
                            assert!((a - b).abs() <= 1e-12 * b.abs().max(1.0));
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn repeated_execution_does_not_accumulate() {
        let (t, f) = random_case();
        let refs: Vec<&DenseMatrix<f64>> = f.iter().collect();
        let e = Executor::new(2).unwrap();
        for strategy in [MttkrpStrategy::Atomic, MttkrpStrategy::Privatized] {
            let mut p = MttkrpCooPlan::new(&t, &refs, 1, strategy).unwrap();
            p.execute(&e).unwrap();
            let first = p.output().clone();
            p.execute(&e).unwrap();
            for (a, b) in p.output().data().iter().zip(first.data()) {
                assert!((a - b).abs() <= 1e-12 * b.abs().max(1.0));
            }
        }
    }

    #[test]
    fn privatized_is_bitwise_reproducible() {
        let (t, f) = random_case();
        let t = t.map_values(|v| v as f32);
        let f: Vec<DenseMatrix<f32>> = f
            .iter()
            .map(|m| DenseMatrix::from_fn(m.rows(), m.cols(), |i, j| m.get(i, j) as f32))
            .collect();
        let refs: Vec<&DenseMatrix<f32>> = f.iter().collect();
        let e = Executor::new(3).unwrap();
        let mut p = MttkrpCooPlan::new(&t, &refs, 0, MttkrpStrategy::Privatized).unwrap();
        p.execute(&e).unwrap();
        let first = p.output().clone();
        for _ in 0..5 {
            p.execute(&e).unwrap();
            assert_eq!(p.output(), &first);
        }
    }

    #[test]
    fn balanced_ranges_cover_everything() {
        let prefix = [0u64, 5, 5, 9, 20, 21];
        for parts in 1..8 {
            let rs = balanced_ranges(&prefix, parts);
            assert_eq!(rs.len(), parts);
            assert_eq!(rs[0].start, 0);
            assert_eq!(rs.last().unwrap().end, 5);
            for w in rs.windows(2) {
                assert_eq!(w[0].end, w[1].start);
            }
        }
    }
}
