use std::cmp::Ordering;
use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Ordering guarantee carried by a [`CooTensor`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum SortState {
    Unsorted,
    /// Sorted by index tuples permuted by the contained mode order.
    Lexicographic(Vec<usize>),
    /// Z-curve order with the given block size.
    Morton(u32),
}

/// Order-N sparse tensor in coordinate format.
///
/// One 32-bit index array per mode plus a value array, all of length `nnz`.
/// Indices are 0-based. Coordinates are unique; constructors sum duplicates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CooTensor<V> {
    dims: Vec<u32>,
    inds: Vec<Vec<u32>>,
    vals: Vec<V>,
    sort_state: SortState,
}

pub(crate) fn check_dims(dims: &[u32]) -> Result<()> {
    if dims.is_empty() {
        return Err(Error::ShapeMismatch(
            "tensor order must be at least 1".into(),
        ));
    }
    if let Some(m) = dims.iter().position(|&d| d == 0) {
        return Err(Error::ShapeMismatch(format!("mode {m} has size 0")));
    }
    Ok(())
}

pub(crate) fn natural_order(order: usize) -> Vec<usize> {
    (0..order).collect()
}

pub(crate) fn check_mode_order(order: usize, mode_order: &[usize]) -> Result<()> {
    let mut seen = vec![false; order];
    if mode_order.len() != order {
        return Err(Error::Config(format!(
            "mode order {mode_order:?} is not a permutation of {order} modes"
        )));
    }
    for &m in mode_order {
        if m >= order || seen[m] {
            return Err(Error::Config(format!(
                "mode order {mode_order:?} is not a permutation of {order} modes"
            )));
        }
        seen[m] = true;
    }
    Ok(())
}

impl<V: Scalar> CooTensor<V> {
    pub fn empty(dims: Vec<u32>) -> Result<Self> {
        check_dims(&dims)?;
        let order = dims.len();
        Ok(CooTensor {
            inds: vec![Vec::new(); order],
            vals: Vec::new(),
            sort_state: SortState::Lexicographic(natural_order(order)),
            dims,
        })
    }

    /// Builds a tensor from `(coordinate, value)` pairs.
    ///
    /// The result is sorted in natural mode order with duplicate coordinates
    /// summed. Explicit zeros are kept.
    pub fn from_entries<I>(dims: Vec<u32>, entries: I) -> Result<Self>
    where
        I: IntoIterator<Item = (Vec<u32>, V)>,
    {
        check_dims(&dims)?;
        let order = dims.len();
        let mut inds = vec![Vec::new(); order];
        let mut vals = Vec::new();
        for (x, (coord, v)) in entries.into_iter().enumerate() {
            if coord.len() != order {
                return Err(Error::ShapeMismatch(format!(
                    "entry {x} has {} indices, tensor order is {order}",
                    coord.len()
                )));
            }
            for (m, &i) in coord.iter().enumerate() {
                inds[m].push(i);
            }
            vals.push(v);
        }
        Self::from_parts(dims, inds, vals)
    }

    /// Builds a tensor from per-mode index arrays, checking bounds, sorting
    /// in natural mode order and summing duplicates.
    pub fn from_parts(dims: Vec<u32>, inds: Vec<Vec<u32>>, vals: Vec<V>) -> Result<Self> {
        check_dims(&dims)?;
        let order = dims.len();
        if inds.len() != order {
            return Err(Error::ShapeMismatch(format!(
                "{} index arrays for an order-{order} tensor",
                inds.len()
            )));
        }
        if let Some(m) = inds.iter().position(|a| a.len() != vals.len()) {
            return Err(Error::ShapeMismatch(format!(
                "mode {m} index array has length {}, value array has {}",
                inds[m].len(),
                vals.len()
            )));
        }
        for (m, arr) in inds.iter().enumerate() {
            if let Some(x) = arr.iter().position(|&i| i >= dims[m]) {
                return Err(Error::OutOfBounds {
                    mode: m,
                    entry: x,
                    index: arr[x] as u64,
                    dim: dims[m],
                });
            }
        }
        let unsorted = CooTensor {
            dims,
            inds,
            vals,
            sort_state: SortState::Unsorted,
        };
        let perm = unsorted.sorted_permutation(&natural_order(order));
        Ok(unsorted.gather_accumulate(&perm, natural_order(order)))
    }

    /// Wraps raw arrays without any checks. Use [`crate::tensor::Validate`]
    /// to inspect the result.
    pub fn from_raw_parts_unchecked(
        dims: Vec<u32>,
        inds: Vec<Vec<u32>>,
        vals: Vec<V>,
        sort_state: SortState,
    ) -> Self {
        CooTensor {
            dims,
            inds,
            vals,
            sort_state,
        }
    }

    pub fn order(&self) -> usize {
        self.dims.len()
    }

    pub fn dims(&self) -> &[u32] {
        &self.dims
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn inds(&self, mode: usize) -> &[u32] {
        &self.inds[mode]
    }

    pub fn all_inds(&self) -> &[Vec<u32>] {
        &self.inds
    }

    pub fn vals(&self) -> &[V] {
        &self.vals
    }

    pub fn vals_mut(&mut self) -> &mut [V] {
        &mut self.vals
    }

    pub fn sort_state(&self) -> &SortState {
        &self.sort_state
    }

    pub fn coord(&self, x: usize) -> Vec<u32> {
        self.inds.iter().map(|a| a[x]).collect()
    }

    pub fn into_parts(self) -> (Vec<u32>, Vec<Vec<u32>>, Vec<V>) {
        (self.dims, self.inds, self.vals)
    }

    /// Coordinate to value map, independent of storage order.
    pub fn to_map(&self) -> BTreeMap<Vec<u32>, V> {
        (0..self.nnz())
            .map(|x| (self.coord(x), self.vals[x]))
            .collect()
    }

    pub(crate) fn cmp_entries(&self, mode_order: &[usize], a: usize, b: usize) -> Ordering {
        for &m in mode_order {
            match self.inds[m][a].cmp(&self.inds[m][b]) {
                Ordering::Equal => continue,
                o => return o,
            }
        }
        Ordering::Equal
    }

    fn sorted_permutation(&self, mode_order: &[usize]) -> Vec<usize> {
        let mut perm: Vec<usize> = (0..self.nnz()).collect();
        perm.par_sort_by(|&a, &b| self.cmp_entries(mode_order, a, b));
        perm
    }

    /// Applies `perm` and sums runs of equal coordinates in permuted order.
    fn gather_accumulate(self, perm: &[usize], mode_order: Vec<usize>) -> Self {
        let order = self.order();
        let mut inds: Vec<Vec<u32>> = vec![Vec::with_capacity(perm.len()); order];
        let mut vals: Vec<V> = Vec::with_capacity(perm.len());
        let mut prev: Option<usize> = None;
        for &p in perm {
            let dup = prev.is_some_and(|q| self.cmp_entries(&mode_order, p, q) == Ordering::Equal);
            if dup {
                *vals.last_mut().unwrap() += self.vals[p];
            } else {
                for m in 0..order {
                    inds[m].push(self.inds[m][p]);
                }
                vals.push(self.vals[p]);
            }
            prev = Some(p);
        }
        CooTensor {
            dims: self.dims,
            inds,
            vals,
            sort_state: SortState::Lexicographic(mode_order),
        }
    }

    pub(crate) fn permuted(&self, perm: &[usize], sort_state: SortState) -> Self {
        CooTensor {
            dims: self.dims.clone(),
            inds: self
                .inds
                .par_iter()
                .map(|a| perm.iter().map(|&p| a[p]).collect())
                .collect(),
            vals: perm.iter().map(|&p| self.vals[p]).collect(),
            sort_state,
        }
    }

    /// Returns a copy sorted by index tuples permuted by `mode_order`.
    pub fn lex_sort(&self, mode_order: &[usize]) -> Result<Self> {
        check_mode_order(self.order(), mode_order)?;
        if self.sort_state == SortState::Lexicographic(mode_order.to_vec()) {
            return Ok(self.clone());
        }
        let perm = self.sorted_permutation(mode_order);
        Ok(self.permuted(&perm, SortState::Lexicographic(mode_order.to_vec())))
    }

    /// True when every nonzero sits at the same coordinate as in `other`, in
    /// the same storage order.
    pub fn same_pattern(&self, other: &Self) -> bool {
        self.dims == other.dims && self.inds == other.inds
    }

    pub fn map_values<W: Scalar>(&self, f: impl Fn(V) -> W) -> CooTensor<W> {
        CooTensor {
            dims: self.dims.clone(),
            inds: self.inds.clone(),
            vals: self.vals.iter().map(|&v| f(v)).collect(),
            sort_state: self.sort_state.clone(),
        }
    }
}
