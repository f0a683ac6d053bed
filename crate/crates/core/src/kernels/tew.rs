use std::cmp::Ordering;

use rayon::prelude::*;

use super::{ElementwiseOp, Executor, KernelPlan, ValuesMut};
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::tensor::morton::morton_cmp_by;
use crate::tensor::{CooTensor, HicooBuilder, HicooTensor, SortState};

#[derive(Debug, Clone, Copy)]
enum Source {
    Both(usize, usize),
    Left(usize),
    Right(usize),
}

/// Element-wise kernel `Z = X op Y`.
///
/// Identical patterns take the fused path: one loop over the value arrays.
/// Otherwise the plan holds, for every output entry, where its operands
/// live: add and sub take the union of the patterns, mul the intersection,
/// div the pattern of `X` with every divisor required to be present and
/// nonzero.
pub struct TewPlan<'a, V, T> {
    x: &'a [V],
    y: &'a [V],
    op: ElementwiseOp,
    sources: Option<Vec<Source>>,
    output: T,
}

fn merge_sources(
    nx: usize,
    ny: usize,
    op: ElementwiseOp,
    cmp: impl Fn(usize, usize) -> Ordering,
) -> std::result::Result<Vec<Source>, usize> {
    let mut out = Vec::with_capacity(nx.max(ny));
    let (mut i, mut j) = (0, 0);
    while i < nx || j < ny {
        let ord = if i == nx {
            Ordering::Greater
        } else if j == ny {
            Ordering::Less
        } else {
            cmp(i, j)
        };
        match ord {
            Ordering::Equal => {
                out.push(Source::Both(i, j));
                i += 1;
                j += 1;
            }
            Ordering::Less => {
                match op {
                    ElementwiseOp::Add | ElementwiseOp::Sub => out.push(Source::Left(i)),
                    ElementwiseOp::Div => return Err(i),
                    ElementwiseOp::Mul => {}
                }
                i += 1;
            }
            Ordering::Greater => {
                if matches!(op, ElementwiseOp::Add | ElementwiseOp::Sub) {
                    out.push(Source::Right(j));
                }
                j += 1;
            }
        }
    }
    Ok(out)
}

fn check_divisors<V: Scalar>(
    sources: &[Source],
    y: &[V],
    coord_of: impl Fn(usize) -> Vec<u32>,
) -> Result<()> {
    for s in sources {
        if let Source::Both(i, j) = *s {
            if y[j] == V::ZERO {
                return Err(Error::DivisionByZero { coord: coord_of(i) });
            }
        }
    }
    Ok(())
}

impl<'a, V: Scalar> TewPlan<'a, V, CooTensor<V>> {
    /// `x` and `y` must share dims and be sorted in the same mode order.
    pub fn new(x: &'a CooTensor<V>, y: &'a CooTensor<V>, op: ElementwiseOp) -> Result<Self> {
        if x.dims() != y.dims() {
            return Err(Error::ShapeMismatch(format!(
                "element-wise operands have dims {:?} and {:?}",
                x.dims(),
                y.dims()
            )));
        }
        if x.same_pattern(y) {
            if op == ElementwiseOp::Div {
                if let Some(p) = y.vals().iter().position(|&v| v == V::ZERO) {
                    return Err(Error::DivisionByZero { coord: y.coord(p) });
                }
            }
            return Ok(TewPlan {
                x: x.vals(),
                y: y.vals(),
                op,
                sources: None,
                output: x.map_values(|_| V::ZERO),
            });
        }
        let mode_order = match (x.sort_state(), y.sort_state()) {
            (SortState::Lexicographic(a), SortState::Lexicographic(b)) if a == b => a.clone(),
            (a, b) => {
                return Err(Error::Config(format!(
                    "element-wise operands must be sorted in the same mode order (found {a:?} and {b:?})"
                )))
            }
        };
        let sources = merge_sources(x.nnz(), y.nnz(), op, |i, j| {
            mode_order
                .iter()
                .map(|&m| x.inds(m)[i].cmp(&y.inds(m)[j]))
                .find(|o| o.is_ne())
                .unwrap_or(Ordering::Equal)
        })
        .map_err(|i| Error::DivisionByZero { coord: x.coord(i) })?;
        if op == ElementwiseOp::Div {
            check_divisors(&sources, y.vals(), |i| x.coord(i))?;
        }
        let order = x.order();
        let mut inds = vec![Vec::with_capacity(sources.len()); order];
        for s in &sources {
            for (m, arr) in inds.iter_mut().enumerate() {
                arr.push(match *s {
                    Source::Both(i, _) | Source::Left(i) => x.inds(m)[i],
                    Source::Right(j) => y.inds(m)[j],
                });
            }
        }
        let output = CooTensor::from_raw_parts_unchecked(
            x.dims().to_vec(),
            inds,
            vec![V::ZERO; sources.len()],
            SortState::Lexicographic(mode_order),
        );
        Ok(TewPlan {
            x: x.vals(),
            y: y.vals(),
            op,
            sources: Some(sources),
            output,
        })
    }
}

impl<'a, V: Scalar> TewPlan<'a, V, HicooTensor<V>> {
    /// `x` and `y` must agree in shape and in their blocking layout.
    pub fn new_hicoo(
        x: &'a HicooTensor<V>,
        y: &'a HicooTensor<V>,
        op: ElementwiseOp,
    ) -> Result<Self> {
        if x.dims() != y.dims()
            || x.block_size() != y.block_size()
            || x.compressed_modes() != y.compressed_modes()
        {
            return Err(Error::ShapeMismatch(
                "element-wise HiCOO operands need equal dims, block size and compressed modes"
                    .into(),
            ));
        }
        if x.same_structure(y) {
            if op == ElementwiseOp::Div {
                if let Some(p) = y.vals().iter().position(|&v| v == V::ZERO) {
                    let inds = y.decode_inds();
                    return Err(Error::DivisionByZero {
                        coord: inds.iter().map(|a| a[p]).collect(),
                    });
                }
            }
            return Ok(TewPlan {
                x: x.vals(),
                y: y.vals(),
                op,
                sources: None,
                output: x.with_values(vec![V::ZERO; x.nnz()]),
            });
        }
        let xi = x.decode_inds();
        let yi = y.decode_inds();
        let comp = x.compressed_modes();
        let flat: Vec<usize> = (0..x.order()).filter(|m| !comp.contains(m)).collect();
        let sources = merge_sources(x.nnz(), y.nnz(), op, |i, j| {
            morton_cmp_by(comp.len(), |k| xi[comp[k]][i], |k| yi[comp[k]][j]).then_with(|| {
                flat.iter()
                    .map(|&m| xi[m][i].cmp(&yi[m][j]))
                    .find(|o| o.is_ne())
                    .unwrap_or(Ordering::Equal)
            })
        })
        .map_err(|i| Error::DivisionByZero {
            coord: xi.iter().map(|a| a[i]).collect(),
        })?;
        if op == ElementwiseOp::Div {
            check_divisors(&sources, y.vals(), |i| xi.iter().map(|a| a[i]).collect())?;
        }
        let compressed: Vec<bool> = (0..x.order()).map(|m| x.is_compressed(m)).collect();
        let mut builder =
            HicooBuilder::new(x.dims().to_vec(), x.block_size(), compressed, sources.len())?;
        let mut coord = vec![0u32; x.order()];
        for s in &sources {
            let (arrs, p) = match *s {
                Source::Both(i, _) | Source::Left(i) => (&xi, i),
                Source::Right(j) => (&yi, j),
            };
            for (m, c) in coord.iter_mut().enumerate() {
                *c = arrs[m][p];
            }
            builder.push(&coord, V::ZERO);
        }
        Ok(TewPlan {
            x: x.vals(),
            y: y.vals(),
            op,
            sources: Some(sources),
            output: builder.finish(),
        })
    }
}

impl<V: Scalar, T: ValuesMut<V> + Send> KernelPlan for TewPlan<'_, V, T> {
    fn execute(&mut self, exec: &Executor) -> Result<u64> {
        let (x, y, op) = (self.x, self.y, self.op);
        let out = self.output.values_mut();
        exec.install(|| match &self.sources {
            None => {
                out.par_iter_mut()
                    .zip(x.par_iter().zip(y.par_iter()))
                    .for_each(|(o, (&a, &b))| *o = op.apply(a, b));
            }
            Some(sources) => {
                out.par_iter_mut()
                    .zip(sources.par_iter())
                    .for_each(|(o, s)| {
                        *o = match *s {
                            Source::Both(i, j) => op.apply(x[i], y[j]),
                            Source::Left(i) => x[i],
                            Source::Right(j) => match op {
                                ElementwiseOp::Sub => -y[j],
                                _ => y[j],
                            },
                        }
                    });
            }
        });
        Ok(out.len() as u64)
    }
}

impl<V, T> TewPlan<'_, V, T> {
    pub fn output(&self) -> &T {
        &self.output
    }

    pub fn into_output(self) -> T {
        self.output
    }
}

/// Element-wise operation on two COO tensors.
pub fn tew<V: Scalar>(
    x: &CooTensor<V>,
    y: &CooTensor<V>,
    op: ElementwiseOp,
    exec: &Executor,
) -> Result<CooTensor<V>> {
    let mut plan = TewPlan::new(x, y, op)?;
    plan.execute(exec)?;
    Ok(plan.into_output())
}

/// Element-wise operation on two HiCOO tensors with matching blocking.
pub fn tew_hicoo<V: Scalar>(
    x: &HicooTensor<V>,
    y: &HicooTensor<V>,
    op: ElementwiseOp,
    exec: &Executor,
) -> Result<HicooTensor<V>> {
    let mut plan = TewPlan::new_hicoo(x, y, op)?;
    plan.execute(exec)?;
    Ok(plan.into_output())
}
