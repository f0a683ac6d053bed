//! Brute-force reference kernels over [`DenseTensor`] in 64-bit arithmetic.
//!
//! Every function evaluates the kernel definition with nested loops over
//! all cells. The stored mask of the result marks the cells a sparse kernel
//! is expected to produce, so pattern and values can be checked together.

use super::{DenseMatrix, DenseTensor, ElementwiseOp, TsOp, DENSE_CAP};
use crate::error::{Error, Result};

fn same_dims(x: &DenseTensor, y: &DenseTensor) -> Result<()> {
    if x.dims() != y.dims() {
        return Err(Error::ShapeMismatch(format!(
            "dims {:?} vs {:?}",
            x.dims(),
            y.dims()
        )));
    }
    Ok(())
}

fn strides(dims: &[usize]) -> Vec<usize> {
    let mut s = vec![1; dims.len()];
    for m in (0..dims.len().saturating_sub(1)).rev() {
        s[m] = s[m + 1] * dims[m + 1];
    }
    s
}

fn check_mode(x: &DenseTensor, n: usize) -> Result<()> {
    if n >= x.dims().len() {
        return Err(Error::Config(format!("mode {n} out of range")));
    }
    Ok(())
}

/// Offset into `x` of the first cell of each mode-`n` fiber, in row-major
/// order of the remaining modes.
fn fiber_bases(x: &DenseTensor, n: usize) -> Vec<usize> {
    let st = strides(x.dims());
    let dims = x.dims();
    let rest: Vec<usize> = (0..dims.len()).filter(|&m| m != n).collect();
    let count: usize = rest.iter().map(|&m| dims[m]).product();
    (0..count)
        .map(|mut o| {
            let mut base = 0;
            for &m in rest.iter().rev() {
                base += (o % dims[m]) * st[m];
                o /= dims[m];
            }
            base
        })
        .collect()
}

/// Element-wise operation with sparse pattern semantics.
pub fn tew(x: &DenseTensor, y: &DenseTensor, op: ElementwiseOp) -> Result<DenseTensor> {
    same_dims(x, y)?;
    let mut out = DenseTensor::zeros(x.dims().to_vec(), usize::MAX)?;
    for o in 0..x.len() {
        let (a, b) = (x.data()[o], y.data()[o]);
        let (sa, sb) = (x.stored()[o], y.stored()[o]);
        let (v, keep) = match op {
            ElementwiseOp::Add => (a + b, sa || sb),
            ElementwiseOp::Sub => (a - b, sa || sb),
            ElementwiseOp::Mul => (a * b, sa && sb),
            ElementwiseOp::Div => {
                if sa && (!sb || b == 0.0) {
                    return Err(Error::DivisionByZero {
                        coord: x.coord(o).iter().map(|&c| c as u32).collect(),
                    });
                }
                (if sa { a / b } else { 0.0 }, sa)
            }
        };
        if keep {
            out.put(o, v);
        }
    }
    Ok(out)
}

/// Tensor-scalar operation applied to stored cells only.
pub fn ts(x: &DenseTensor, op: TsOp, s: f64) -> DenseTensor {
    let mut out = x.clone();
    for (v, &keep) in out.data_mut().iter_mut().zip(x.stored()) {
        if keep {
            *v = match op {
                TsOp::Add => *v + s,
                TsOp::Mul => *v * s,
            };
        }
    }
    out
}

/// Mode-`n` tensor-times-vector. An output cell is stored when its input
/// fiber holds any stored cell.
pub fn ttv(x: &DenseTensor, v: &[f64], n: usize) -> Result<DenseTensor> {
    check_mode(x, n)?;
    let dims = x.dims();
    if v.len() != dims[n] {
        return Err(Error::ShapeMismatch(format!("vector length {}", v.len())));
    }
    let st = strides(dims)[n];
    let out_dims: Vec<usize> = (0..dims.len())
        .filter(|&m| m != n)
        .map(|m| dims[m])
        .collect();
    let mut out = DenseTensor::zeros(out_dims, DENSE_CAP.max(x.len()))?;
    for (f, base) in fiber_bases(x, n).into_iter().enumerate() {
        let mut acc = 0.0;
        let mut any = false;
        for (k, &w) in v.iter().enumerate() {
            acc += x.data()[base + k * st] * w;
            any |= x.stored()[base + k * st];
        }
        if any {
            out.put(f, acc);
        }
    }
    Ok(out)
}

/// Mode-`n` tensor-times-matrix with `u` of shape `dims[n] x R`. The whole
/// output fiber is stored when the input fiber holds any stored cell.
pub fn ttm(x: &DenseTensor, u: &DenseMatrix<f64>, n: usize) -> Result<DenseTensor> {
    check_mode(x, n)?;
    let dims = x.dims();
    if u.rows() != dims[n] {
        return Err(Error::ShapeMismatch(format!("matrix rows {}", u.rows())));
    }
    let r = u.cols();
    let st = strides(dims)[n];
    let mut out_dims = dims.to_vec();
    out_dims[n] = r;
    let mut out = DenseTensor::zeros(out_dims, DENSE_CAP.max(x.len() * r))?;
    let out_st = strides(out.dims())[n];
    let in_bases = fiber_bases(x, n);
    let out_bases = fiber_bases(&out, n);
    for (base, obase) in in_bases.into_iter().zip(out_bases) {
        let any = (0..dims[n]).any(|k| x.stored()[base + k * st]);
        if !any {
            continue;
        }
        for j in 0..r {
            let mut acc = 0.0;
            for k in 0..dims[n] {
                acc += x.data()[base + k * st] * u.get(k, j);
            }
            out.put(obase + j * out_st, acc);
        }
    }
    Ok(out)
}

/// Mode-`n` MTTKRP. `factors` holds either `N - 1` matrices in mode order
/// with mode `n` skipped, or `N` matrices with entry `n` ignored.
pub fn mttkrp(
    x: &DenseTensor,
    factors: &[&DenseMatrix<f64>],
    n: usize,
) -> Result<DenseMatrix<f64>> {
    check_mode(x, n)?;
    let order = x.dims().len();
    let others: Vec<usize> = (0..order).filter(|&m| m != n).collect();
    let pairs: Vec<(usize, &DenseMatrix<f64>)> = if factors.len() == order {
        others.iter().map(|&m| (m, factors[m])).collect()
    } else if factors.len() + 1 == order {
        others
            .iter()
            .copied()
            .zip(factors.iter().copied())
            .collect()
    } else {
        return Err(Error::ShapeMismatch(format!("{} factors", factors.len())));
    };
    let r = pairs.first().map_or(0, |(_, u)| u.cols());
    for &(m, u) in &pairs {
        if u.rows() != x.dims()[m] || u.cols() != r {
            return Err(Error::ShapeMismatch(format!("factor for mode {m}")));
        }
    }
    let mut out = vec![0.0; x.dims()[n] * r];
    for o in 0..x.len() {
        let c = x.coord(o);
        let xv = x.data()[o];
        for j in 0..r {
            let mut p = xv;
            for &(m, u) in &pairs {
                p *= u.get(c[m], j);
            }
            out[c[n] * r + j] += p;
        }
    }
    DenseMatrix::new(x.dims()[n], r, out)
}

/// Largest relative deviation `|got - want| / |want|` over two value
/// arrays; a nonzero difference against an exact zero counts as infinite.
pub fn max_rel_error(got: &[f64], want: &[f64]) -> f64 {
    assert_eq!(got.len(), want.len(), "length mismatch");
    got.iter()
        .zip(want)
        .map(|(&g, &w)| {
            let d = (g - w).abs();
            if d == 0.0 {
                0.0
            } else if w == 0.0 {
                f64::INFINITY
            } else {
                d / w.abs()
            }
        })
        .fold(0.0, f64::max)
}

/// Checks that two dense tensors share dims and stored pattern and that
/// their values agree within relative tolerance `tol`.
pub fn check_close(
    got: &DenseTensor,
    want: &DenseTensor,
    tol: f64,
) -> std::result::Result<(), String> {
    if got.dims() != want.dims() {
        return Err(format!("dims {:?} vs {:?}", got.dims(), want.dims()));
    }
    if let Some(o) = (0..got.len()).find(|&o| got.stored()[o] != want.stored()[o]) {
        return Err(format!(
            "pattern differs at {:?}: got stored={}, want stored={}",
            got.coord(o),
            got.stored()[o],
            want.stored()[o]
        ));
    }
    let err = max_rel_error(got.data(), want.data());
    if err > tol {
        return Err(format!("relative error {err:e} exceeds {tol:e}"));
    }
    Ok(())
}
