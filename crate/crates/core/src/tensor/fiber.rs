use std::ops::Range;

use super::coo::{CooTensor, SortState};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Start offsets of the mode-`n` fibers of a tensor sorted with `n` as the
/// last (fastest varying) mode.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FiberLayout {
    mode: usize,
    fptr: Vec<usize>,
}

/// Mode order that groups the mode-`n` fibers: every other mode in natural
/// order, then `n`.
pub fn fiber_mode_order(order: usize, n: usize) -> Vec<usize> {
    (0..order)
        .filter(|&m| m != n)
        .chain(std::iter::once(n))
        .collect()
}

impl FiberLayout {
    /// Scans a tensor already sorted with `n` last.
    pub fn from_sorted<V: Scalar>(t: &CooTensor<V>, n: usize) -> Result<Self> {
        let expected = SortState::Lexicographic(fiber_mode_order(t.order(), n));
        if t.sort_state() != &expected {
            return Err(Error::Config(format!(
                "fiber layout for mode {n} needs sort state {expected:?}, found {:?}",
                t.sort_state()
            )));
        }
        let others: Vec<usize> = (0..t.order()).filter(|&m| m != n).collect();
        let mut fptr = vec![0];
        for x in 1..t.nnz() {
            if others.iter().any(|&m| t.inds(m)[x] != t.inds(m)[x - 1]) {
                fptr.push(x);
            }
        }
        if t.nnz() > 0 {
            fptr.push(t.nnz());
        }
        Ok(FiberLayout { mode: n, fptr })
    }

    pub fn mode(&self) -> usize {
        self.mode
    }

    pub fn nfibs(&self) -> usize {
        self.fptr.len() - 1
    }

    pub fn fptr(&self) -> &[usize] {
        &self.fptr
    }

    pub fn fiber(&self, f: usize) -> Range<usize> {
        self.fptr[f]..self.fptr[f + 1]
    }
}

/// Sorts `t` so the mode-`n` fibers are contiguous and records where each
/// fiber starts.
pub fn build_fiber_layout<V: Scalar>(
    t: &CooTensor<V>,
    n: usize,
) -> Result<(CooTensor<V>, FiberLayout)> {
    if n >= t.order() {
        return Err(Error::Config(format!(
            "mode {n} out of range for an order-{} tensor",
            t.order()
        )));
    }
    let sorted = t.lex_sort(&fiber_mode_order(t.order(), n))?;
    let layout = FiberLayout::from_sorted(&sorted, n)?;
    Ok((sorted, layout))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn coo(entries: &[[u32; 3]]) -> CooTensor<f32> {
        CooTensor::from_entries(vec![3, 3, 3], entries.iter().map(|c| (c.to_vec(), 1.0))).unwrap()
    }

    #[test]
    fn run_length_over_prefix() {
        let t = coo(&[[0, 0, 0], [0, 0, 1], [0, 1, 0]]);
        let (_, l) = build_fiber_layout(&t, 2).unwrap();
        assert_eq!(l.nfibs(), 2);
        assert_eq!(l.fptr(), &[0, 2, 3]);
    }

    #[test]
    fn single_fiber() {
        let t = coo(&[[1, 1, 0], [1, 1, 1], [1, 1, 2]]);
        let (_, l) = build_fiber_layout(&t, 2).unwrap();
        assert_eq!(l.nfibs(), 1);
    }

    #[test]
    fn distinct_fibers() {
        let t = coo(&[[0, 0, 0], [1, 1, 1], [2, 2, 2]]);
        let (_, l) = build_fiber_layout(&t, 0).unwrap();
        assert_eq!(l.fptr(), &[0, 1, 2, 3]);
    }

    #[test]
    fn middle_mode_fibers() {
        // mode-1 fibers group by (i, k)
        let t = coo(&[[0, 0, 0], [0, 2, 0], [0, 1, 1]]);
        let (s, l) = build_fiber_layout(&t, 1).unwrap();
        assert_eq!(l.fptr(), &[0, 2, 3]);
        assert_eq!(s.coord(0), vec![0, 0, 0]);
        assert_eq!(s.coord(1), vec![0, 2, 0]);
    }

    #[test]
    fn empty_tensor() {
        let t = CooTensor::<f32>::empty(vec![2, 2]).unwrap();
        let (_, l) = build_fiber_layout(&t, 1).unwrap();
        assert_eq!(l.nfibs(), 0);
        assert_eq!(l.fptr(), &[0]);
    }
}
