use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{Executor, KernelPlan, ValuesMut};
use crate::error::Result;
use crate::scalar::Scalar;
use crate::tensor::{CooTensor, HicooTensor};

/// Tensor-scalar operations; subtraction and division reduce to these.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TsOp {
    Add,
    Mul,
}

/// Tensor-scalar kernel over the stored values only: absent entries stay
/// absent, so adding a scalar does not densify the tensor.
pub struct TsPlan<'a, V, T> {
    x: &'a [V],
    op: TsOp,
    scalar: V,
    output: T,
}

impl<'a, V: Scalar> TsPlan<'a, V, CooTensor<V>> {
    pub fn new(x: &'a CooTensor<V>, op: TsOp, scalar: V) -> Self {
        TsPlan {
            x: x.vals(),
            op,
            scalar,
            output: x.map_values(|_| V::ZERO),
        }
    }
}

impl<'a, V: Scalar> TsPlan<'a, V, HicooTensor<V>> {
    pub fn new_hicoo(x: &'a HicooTensor<V>, op: TsOp, scalar: V) -> Self {
        TsPlan {
            x: x.vals(),
            op,
            scalar,
            output: x.with_values(vec![V::ZERO; x.nnz()]),
        }
    }
}

impl<V, T> TsPlan<'_, V, T> {
    pub fn output(&self) -> &T {
        &self.output
    }

    pub fn into_output(self) -> T {
        self.output
    }
}

impl<V: Scalar, T: ValuesMut<V> + Send> KernelPlan for TsPlan<'_, V, T> {
    fn execute(&mut self, exec: &Executor) -> Result<u64> {
        let (x, s) = (self.x, self.scalar);
        let out = self.output.values_mut();
        exec.install(|| match self.op {
            TsOp::Add => out
                .par_iter_mut()
                .zip(x.par_iter())
                .for_each(|(o, &v)| *o = v + s),
            TsOp::Mul => out
                .par_iter_mut()
                .zip(x.par_iter())
                .for_each(|(o, &v)| *o = v * s),
        });
        Ok(out.len() as u64)
    }
}

pub fn ts<V: Scalar>(x: &CooTensor<V>, op: TsOp, s: V, exec: &Executor) -> Result<CooTensor<V>> {
    let mut plan = TsPlan::new(x, op, s);
    plan.execute(exec)?;
    Ok(plan.into_output())
}

pub fn ts_hicoo<V: Scalar>(
    x: &HicooTensor<V>,
    op: TsOp,
    s: V,
    exec: &Executor,
) -> Result<HicooTensor<V>> {
    let mut plan = TsPlan::new_hicoo(x, op, s);
    plan.execute(exec)?;
    Ok(plan.into_output())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn x() -> CooTensor<f32> {
        CooTensor::from_entries(
            vec![3, 3],
            [(vec![0, 0], 1.0), (vec![1, 2], 2.0), (vec![2, 1], 3.0)],
        )
        .unwrap()
    }

    #[test]
    fn mul_identity() {
        let e = Executor::new(1).unwrap();
        assert_eq!(ts(&x(), TsOp::Mul, 1.0, &e).unwrap(), x());
    }

    #[test]
    fn mul_by_two() {
        let e = Executor::new(1).unwrap();
        assert_eq!(
            ts(&x(), TsOp::Mul, 2.0, &e).unwrap().vals(),
            &[2.0, 4.0, 6.0]
        );
    }

    #[test]
    fn add_half_keeps_pattern() {
        let e = Executor::new(2).unwrap();
        let y = ts(&x(), TsOp::Add, 0.5, &e).unwrap();
        assert!(y.same_pattern(&x()));
        assert_eq!(y.vals(), &[1.5, 2.5, 3.5]);
    }

    #[test]
    fn mul_by_zero_keeps_explicit_zeros() {
        let e = Executor::new(1).unwrap();
        let y = ts(&x(), TsOp::Mul, 0.0, &e).unwrap();
        assert_eq!(y.nnz(), 3);
        assert!(y.vals().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn hicoo_matches_coo() {
        let e = Executor::new(2).unwrap();
        let h = HicooTensor::from_coo(&x(), 2).unwrap();
        let hy = ts_hicoo(&h, TsOp::Add, 0.5, &e).unwrap();
        assert_eq!(hy.to_coo(), ts(&x(), TsOp::Add, 0.5, &e).unwrap());
    }
}
