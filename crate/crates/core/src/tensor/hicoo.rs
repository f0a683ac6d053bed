//! Hierarchical coordinate storage (HiCOO) and its partially compressed
//! generalization (gHiCOO).
//!
//! Nonzeros are grouped into `B x ... x B` blocks over the compressed modes.
//! Each block stores one 32-bit block coordinate per compressed mode; each
//! nonzero stores an 8-bit offset inside its block. Modes left uncompressed
//! keep a flat 32-bit index per nonzero. Blocks follow Z-curve order over
//! block coordinates, nonzeros inside a block follow Z-curve order over
//! element offsets, then the uncompressed indices in mode order.

use std::ops::Range;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::coo::{CooTensor, SortState};
use super::morton::morton_cmp_by;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Index storage for one mode of a blocked tensor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum ModeIndex {
    /// Compressed: block coordinate per block, element offset per nonzero.
    Blocked { binds: Vec<u32>, einds: Vec<u8> },
    /// Uncompressed: full index per nonzero.
    Flat(Vec<u32>),
}

impl ModeIndex {
    pub fn is_blocked(&self) -> bool {
        matches!(self, ModeIndex::Blocked { .. })
    }
}

/// HiCOO tensor; with some modes left [`ModeIndex::Flat`] it is a gHiCOO
/// tensor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HicooTensor<V> {
    dims: Vec<u32>,
    block_size: u32,
    bptr: Vec<u64>,
    modes: Vec<ModeIndex>,
    vals: Vec<V>,
}

/// A HiCOO tensor that compresses only a subset of its modes.
pub type GHicooTensor<V> = HicooTensor<V>;

/// Returns `log2(block_size)` for a valid block size.
pub fn block_shift(block_size: u32) -> Result<u32> {
    if block_size == 0 || !block_size.is_power_of_two() || block_size > 256 {
        return Err(Error::InvalidBlockSize(block_size));
    }
    Ok(block_size.trailing_zeros())
}

/// Incremental assembly of a blocked tensor from coordinates that arrive
/// grouped by block.
pub(crate) struct HicooBuilder<V> {
    dims: Vec<u32>,
    block_size: u32,
    shift: u32,
    compressed: Vec<bool>,
    bptr: Vec<u64>,
    modes: Vec<ModeIndex>,
    vals: Vec<V>,
    last_block: Vec<u32>,
    started: bool,
}

impl<V: Scalar> HicooBuilder<V> {
    pub(crate) fn new(
        dims: Vec<u32>,
        block_size: u32,
        compressed: Vec<bool>,
        capacity: usize,
    ) -> Result<Self> {
        let shift = block_shift(block_size)?;
        let modes = compressed
            .iter()
            .map(|&c| {
                if c {
                    ModeIndex::Blocked {
                        binds: Vec::new(),
                        einds: Vec::with_capacity(capacity),
                    }
                } else {
                    ModeIndex::Flat(Vec::with_capacity(capacity))
                }
            })
            .collect();
        Ok(HicooBuilder {
            last_block: vec![0; dims.len()],
            dims,
            block_size,
            shift,
            compressed,
            bptr: vec![0],
            modes,
            vals: Vec::with_capacity(capacity),
            started: false,
        })
    }

    pub(crate) fn push(&mut self, coord: &[u32], v: V) {
        let shift = self.shift;
        let new_block = !self.started
            || coord
                .iter()
                .zip(&self.compressed)
                .zip(&self.last_block)
                .any(|((&c, &comp), &lb)| comp && (c >> shift) != lb);
        if new_block {
            if self.started {
                self.bptr.push(self.vals.len() as u64);
            }
            self.started = true;
            for (m, &c) in coord.iter().enumerate() {
                if let ModeIndex::Blocked { binds, .. } = &mut self.modes[m] {
                    binds.push(c >> shift);
                    self.last_block[m] = c >> shift;
                }
            }
        }
        let mask = self.block_size - 1;
        for (m, &c) in coord.iter().enumerate() {
            match &mut self.modes[m] {
                ModeIndex::Blocked { einds, .. } => einds.push((c & mask) as u8),
                ModeIndex::Flat(a) => a.push(c),
            }
        }
        self.vals.push(v);
    }

    pub(crate) fn finish(mut self) -> HicooTensor<V> {
        if self.started {
            self.bptr.push(self.vals.len() as u64);
        }
        HicooTensor {
            dims: self.dims,
            block_size: self.block_size,
            bptr: self.bptr,
            modes: self.modes,
            vals: self.vals,
        }
    }
}

impl<V: Scalar> HicooTensor<V> {
    /// Blocks every mode.
    pub fn from_coo(t: &CooTensor<V>, block_size: u32) -> Result<Self> {
        let all: Vec<usize> = (0..t.order()).collect();
        Self::from_coo_compressed(t, &all, block_size)
    }

    /// Blocks only `compressed_modes`; the rest stay flat 32-bit arrays.
    pub fn from_coo_compressed(
        t: &CooTensor<V>,
        compressed_modes: &[usize],
        block_size: u32,
    ) -> Result<Self> {
        block_shift(block_size)?;
        if compressed_modes.is_empty() {
            return Err(Error::Config(
                "gHiCOO needs at least one compressed mode".into(),
            ));
        }
        let order = t.order();
        let mut compressed = vec![false; order];
        for &m in compressed_modes {
            if m >= order {
                return Err(Error::Config(format!(
                    "compressed mode {m} out of range for an order-{order} tensor"
                )));
            }
            compressed[m] = true;
        }
        let comp: Vec<usize> = (0..order).filter(|&m| compressed[m]).collect();
        let flat: Vec<usize> = (0..order).filter(|&m| !compressed[m]).collect();
        let inds = t.all_inds();

        let mut perm: Vec<usize> = (0..t.nnz()).collect();
        perm.par_sort_by(|&a, &b| {
            morton_cmp_by(comp.len(), |k| inds[comp[k]][a], |k| inds[comp[k]][b]).then_with(|| {
                flat.iter()
                    .map(|&m| inds[m][a].cmp(&inds[m][b]))
                    .find(|o| o.is_ne())
                    .unwrap_or(std::cmp::Ordering::Equal)
            })
        });

        let mut builder = HicooBuilder::new(t.dims().to_vec(), block_size, compressed, t.nnz())?;
        let mut coord = vec![0u32; order];
        for &p in &perm {
            for m in 0..order {
                coord[m] = inds[m][p];
            }
            builder.push(&coord, t.vals()[p]);
        }
        Ok(builder.finish())
    }

    #[allow(clippy::too_many_arguments)]
    pub fn from_raw_parts_unchecked(
        dims: Vec<u32>,
        block_size: u32,
        bptr: Vec<u64>,
        modes: Vec<ModeIndex>,
        vals: Vec<V>,
    ) -> Self {
        HicooTensor {
            dims,
            block_size,
            bptr,
            modes,
            vals,
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

    pub fn block_size(&self) -> u32 {
        self.block_size
    }

    pub fn nblocks(&self) -> usize {
        self.bptr.len().saturating_sub(1)
    }

    pub fn bptr(&self) -> &[u64] {
        &self.bptr
    }

    pub fn modes(&self) -> &[ModeIndex] {
        &self.modes
    }

    pub fn mode(&self, m: usize) -> &ModeIndex {
        &self.modes[m]
    }

    pub fn vals(&self) -> &[V] {
        &self.vals
    }

    pub fn vals_mut(&mut self) -> &mut [V] {
        &mut self.vals
    }

    pub fn compressed_modes(&self) -> Vec<usize> {
        (0..self.order())
            .filter(|&m| self.modes[m].is_blocked())
            .collect()
    }

    pub fn is_compressed(&self, m: usize) -> bool {
        self.modes[m].is_blocked()
    }

    pub fn is_fully_compressed(&self) -> bool {
        self.modes.iter().all(ModeIndex::is_blocked)
    }

    pub fn block_range(&self, b: usize) -> Range<usize> {
        self.bptr[b] as usize..self.bptr[b + 1] as usize
    }

    /// Index of nonzero `x` (in block `b`) on mode `m`.
    #[inline]
    pub fn index(&self, m: usize, b: usize, x: usize) -> u32 {
        match &self.modes[m] {
            ModeIndex::Blocked { binds, einds } => binds[b] * self.block_size + einds[x] as u32,
            ModeIndex::Flat(a) => a[x],
        }
    }

    /// Full per-mode index arrays in storage order.
    pub fn decode_inds(&self) -> Vec<Vec<u32>> {
        let mut out = vec![Vec::with_capacity(self.nnz()); self.order()];
        for b in 0..self.nblocks() {
            for x in self.block_range(b) {
                for (m, arr) in out.iter_mut().enumerate() {
                    arr.push(self.index(m, b, x));
                }
            }
        }
        out
    }

    /// Converts back to coordinate format, sorted in natural mode order.
    pub fn to_coo(&self) -> CooTensor<V> {
        let inds = self.decode_inds();
        let order = self.order();
        let unsorted = CooTensor::from_raw_parts_unchecked(
            self.dims.clone(),
            inds,
            self.vals.clone(),
            SortState::Morton(self.block_size),
        );
        unsorted
            .lex_sort(&(0..order).collect::<Vec<_>>())
            .expect("natural order is a permutation")
    }

    /// Identical layout and indices; values may differ.
    pub fn same_structure(&self, other: &Self) -> bool {
        self.dims == other.dims
            && self.block_size == other.block_size
            && self.bptr == other.bptr
            && self.modes == other.modes
    }

    pub(crate) fn into_parts(self) -> (Vec<u32>, u32, Vec<u64>, Vec<ModeIndex>, Vec<V>) {
        (self.dims, self.block_size, self.bptr, self.modes, self.vals)
    }

    pub(crate) fn with_values<W: Scalar>(&self, vals: Vec<W>) -> HicooTensor<W> {
        assert_eq!(vals.len(), self.nnz());
        HicooTensor {
            dims: self.dims.clone(),
            block_size: self.block_size,
            bptr: self.bptr.clone(),
            modes: self.modes.clone(),
            vals,
        }
    }

    pub(crate) fn permuted_within_blocks(&self, perm: &[usize]) -> Self {
        let modes = self
            .modes
            .iter()
            .map(|mi| match mi {
                ModeIndex::Blocked { binds, einds } => ModeIndex::Blocked {
                    binds: binds.clone(),
                    einds: perm.iter().map(|&p| einds[p]).collect(),
                },
                ModeIndex::Flat(a) => ModeIndex::Flat(perm.iter().map(|&p| a[p]).collect()),
            })
            .collect();
        HicooTensor {
            dims: self.dims.clone(),
            block_size: self.block_size,
            bptr: self.bptr.clone(),
            modes,
            vals: perm.iter().map(|&p| self.vals[p]).collect(),
        }
    }
}
