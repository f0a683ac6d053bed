//! Sparse tensor data model: COO, HiCOO/gHiCOO and semi-sparse storage,
//! conversions, fiber preprocessing, storage accounting and validation.

mod coo;
mod fiber;
mod hicoo;
pub mod morton;
mod semisparse;

use std::cmp::Ordering;
use std::fmt;

pub use coo::{CooTensor, SortState};
pub use fiber::{build_fiber_layout, fiber_mode_order, FiberLayout};
pub(crate) use hicoo::HicooBuilder;
pub use hicoo::{block_shift, GHicooTensor, HicooTensor, ModeIndex};
pub use semisparse::{SemiSparseTensor, SparseIndex};

use crate::scalar::Scalar;
use morton::morton_cmp_by;

/// Bytes occupied by all arrays of a
/// representation: 32-bit indices, 8-bit element offsets, 64-bit block
/// pointers and `size_of::<V>()` per value.
pub trait StorageBytes {
    fn storage_bytes(&self) -> u64;
}

impl<V: Scalar> StorageBytes for CooTensor<V> {
    fn storage_bytes(&self) -> u64 {
        ((4 * self.order() + V::BYTES) * self.nnz()) as u64
    }
}

fn mode_index_bytes(modes: &[ModeIndex]) -> u64 {
    modes
        .iter()
        .map(|mi| match mi {
            ModeIndex::Blocked { binds, einds } => 4 * binds.len() as u64 + einds.len() as u64,
            ModeIndex::Flat(a) => 4 * a.len() as u64,
        })
        .sum()
}

impl<V: Scalar> StorageBytes for HicooTensor<V> {
    fn storage_bytes(&self) -> u64 {
        8 * self.bptr().len() as u64
            + mode_index_bytes(self.modes())
            + (V::BYTES * self.nnz()) as u64
    }
}

impl<V: Scalar> StorageBytes for SemiSparseTensor<V> {
    fn storage_bytes(&self) -> u64 {
        let index = match self.index() {
            SparseIndex::Coo(inds) => inds.iter().map(|a| 4 * a.len() as u64).sum(),
            SparseIndex::Hicoo { bptr, modes, .. } => {
                8 * bptr.len() as u64 + mode_index_bytes(modes)
            }
        };
        index + (V::BYTES * self.vals().len()) as u64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ViolationKind {
    Shape,
    Length,
    Bounds,
    Duplicate,
    SortOrder,
    BlockPointer,
    ElementIndex,
    BlockOrder,
    BlockSize,
    ChunkLength,
}

/// A broken type invariant with the offending position.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub kind: ViolationKind,
    pub detail: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}: {}", self.kind, self.detail)
    }
}

fn violation(kind: ViolationKind, detail: String) -> Violation {
    Violation { kind, detail }
}

pub trait Validate {
    /// Empty iff every invariant of the representation holds.
    fn validate(&self) -> Vec<Violation>;
}

fn validate_dims(dims: &[u32], out: &mut Vec<Violation>) {
    if dims.is_empty() {
        out.push(violation(ViolationKind::Shape, "order is 0".into()));
    }
    for (m, &d) in dims.iter().enumerate() {
        if d == 0 {
            out.push(violation(
                ViolationKind::Shape,
                format!("mode {m} has size 0"),
            ));
        }
    }
}

impl<V: Scalar> Validate for CooTensor<V> {
    fn validate(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        validate_dims(self.dims(), &mut out);
        let order = self.order();
        let inds = self.all_inds();
        if inds.len() != order {
            out.push(violation(
                ViolationKind::Length,
                format!("{} index arrays for order {order}", inds.len()),
            ));
            return out;
        }
        for (m, a) in inds.iter().enumerate() {
            if a.len() != self.nnz() {
                out.push(violation(
                    ViolationKind::Length,
                    format!("mode {m} has {} indices for {} values", a.len(), self.nnz()),
                ));
            }
        }
        if !out.is_empty() {
            return out;
        }
        for (m, a) in inds.iter().enumerate() {
            for (x, &i) in a.iter().enumerate() {
                if i >= self.dims()[m] {
                    out.push(violation(
                        ViolationKind::Bounds,
                        format!("entry {x}: index {i} >= dim {} on mode {m}", self.dims()[m]),
                    ));
                }
            }
        }
        let cmp_morton = |a: usize, b: usize| morton_cmp_by(order, |m| inds[m][a], |m| inds[m][b]);
        match self.sort_state() {
            SortState::Lexicographic(p) => {
                if coo::check_mode_order(order, p).is_err() {
                    out.push(violation(
                        ViolationKind::SortOrder,
                        format!("sort state names invalid mode order {p:?}"),
                    ));
                    return out;
                }
                for x in 1..self.nnz() {
                    match self.cmp_entries(p, x - 1, x) {
                        Ordering::Greater => out.push(violation(
                            ViolationKind::SortOrder,
                            format!("entry {x} precedes entry {} in mode order {p:?}", x - 1),
                        )),
                        Ordering::Equal => out.push(violation(
                            ViolationKind::Duplicate,
                            format!(
                                "entries {} and {x} share coordinate {:?}",
                                x - 1,
                                self.coord(x)
                            ),
                        )),
                        Ordering::Less => {}
                    }
                }
            }
            SortState::Morton(_) => {
                for x in 1..self.nnz() {
                    match cmp_morton(x - 1, x) {
                        Ordering::Greater => out.push(violation(
                            ViolationKind::SortOrder,
                            format!("entry {x} precedes entry {} in Morton order", x - 1),
                        )),
                        Ordering::Equal => out.push(violation(
                            ViolationKind::Duplicate,
                            format!(
                                "entries {} and {x} share coordinate {:?}",
                                x - 1,
                                self.coord(x)
                            ),
                        )),
                        Ordering::Less => {}
                    }
                }
            }
            SortState::Unsorted => {
                let natural: Vec<usize> = (0..order).collect();
                let mut perm: Vec<usize> = (0..self.nnz()).collect();
                perm.sort_by(|&a, &b| self.cmp_entries(&natural, a, b));
                for w in perm.windows(2) {
                    if self.cmp_entries(&natural, w[0], w[1]) == Ordering::Equal {
                        out.push(violation(
                            ViolationKind::Duplicate,
                            format!(
                                "entries {} and {} share coordinate {:?}",
                                w[0],
                                w[1],
                                self.coord(w[1])
                            ),
                        ));
                    }
                }
            }
        }
        out
    }
}

/// Checks block pointers, per-mode array lengths, element offsets, bounds
/// and Z-curve order of the blocks.
fn validate_blocked(
    dims: &[u32],
    mode_ids: &[usize],
    block_size: u32,
    bptr: &[u64],
    modes: &[ModeIndex],
    entries: usize,
    out: &mut Vec<Violation>,
) {
    if block_shift(block_size).is_err() {
        out.push(violation(
            ViolationKind::BlockSize,
            format!("block size {block_size} is not a power of two <= 256"),
        ));
        return;
    }
    if bptr.is_empty() {
        out.push(violation(
            ViolationKind::BlockPointer,
            "bptr is empty".into(),
        ));
        return;
    }
    if bptr[0] != 0 {
        out.push(violation(
            ViolationKind::BlockPointer,
            format!("bptr[0] = {} (expected 0)", bptr[0]),
        ));
    }
    let nb = bptr.len() - 1;
    if bptr[nb] != entries as u64 {
        out.push(violation(
            ViolationKind::BlockPointer,
            format!("bptr[{nb}] = {} (expected {entries})", bptr[nb]),
        ));
    }
    let mut monotone = true;
    for b in 0..nb {
        if bptr[b] >= bptr[b + 1] {
            monotone = false;
            out.push(violation(
                ViolationKind::BlockPointer,
                format!(
                    "bptr not strictly increasing at block {b}: {} >= {}",
                    bptr[b],
                    bptr[b + 1]
                ),
            ));
        }
    }
    if !modes.iter().any(ModeIndex::is_blocked) {
        out.push(violation(ViolationKind::Shape, "no compressed mode".into()));
    }
    let mut lengths_ok = true;
    for (k, mi) in modes.iter().enumerate() {
        let m = mode_ids[k];
        match mi {
            ModeIndex::Blocked { binds, einds } => {
                if binds.len() != nb || einds.len() != entries {
                    lengths_ok = false;
                    out.push(violation(
                        ViolationKind::Length,
                        format!(
                            "mode {m}: {} block indices for {nb} blocks, {} element indices for {entries} entries",
                            binds.len(),
                            einds.len()
                        ),
                    ));
                }
            }
            ModeIndex::Flat(a) => {
                if a.len() != entries {
                    lengths_ok = false;
                    out.push(violation(
                        ViolationKind::Length,
                        format!("mode {m}: {} flat indices for {entries} entries", a.len()),
                    ));
                }
            }
        }
    }
    if !lengths_ok || !monotone || bptr[0] != 0 || bptr[nb] != entries as u64 {
        return;
    }
    for (k, mi) in modes.iter().enumerate() {
        let m = mode_ids[k];
        let dim = dims[m] as u64;
        match mi {
            ModeIndex::Blocked { binds, einds } => {
                for b in 0..nb {
                    for x in bptr[b] as usize..bptr[b + 1] as usize {
                        let e = einds[x] as u32;
                        if e >= block_size {
                            out.push(violation(
                                ViolationKind::ElementIndex,
                                format!("entry {x}: element index {e} >= block size on mode {m}"),
                            ));
                        }
                        let full = binds[b] as u64 * block_size as u64 + e as u64;
                        if full >= dim {
                            out.push(violation(
                                ViolationKind::Bounds,
                                format!("entry {x}: index {full} >= dim {dim} on mode {m}"),
                            ));
                        }
                    }
                }
            }
            ModeIndex::Flat(a) => {
                for (x, &i) in a.iter().enumerate() {
                    if i as u64 >= dim {
                        out.push(violation(
                            ViolationKind::Bounds,
                            format!("entry {x}: index {i} >= dim {dim} on mode {m}"),
                        ));
                    }
                }
            }
        }
    }
    let blocked: Vec<&Vec<u32>> = modes
        .iter()
        .filter_map(|mi| match mi {
            ModeIndex::Blocked { binds, .. } => Some(binds),
            ModeIndex::Flat(_) => None,
        })
        .collect();
    for b in 1..nb {
        if morton_cmp_by(blocked.len(), |k| blocked[k][b - 1], |k| blocked[k][b]) != Ordering::Less
        {
            out.push(violation(
                ViolationKind::BlockOrder,
                format!("block {b} does not follow block {} in Morton order", b - 1),
            ));
        }
    }
}

impl<V: Scalar> Validate for HicooTensor<V> {
    fn validate(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        validate_dims(self.dims(), &mut out);
        if self.modes().len() != self.order() {
            out.push(violation(
                ViolationKind::Length,
                format!(
                    "{} mode index stores for order {}",
                    self.modes().len(),
                    self.order()
                ),
            ));
            return out;
        }
        let ids: Vec<usize> = (0..self.order()).collect();
        validate_blocked(
            self.dims(),
            &ids,
            self.block_size(),
            self.bptr(),
            self.modes(),
            self.nnz(),
            &mut out,
        );
        out
    }
}

impl<V: Scalar> Validate for SemiSparseTensor<V> {
    fn validate(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        validate_dims(self.dims(), &mut out);
        if self.dense_modes().is_empty() {
            out.push(violation(ViolationKind::Shape, "no dense mode".into()));
        }
        for &m in self.dense_modes() {
            if m >= self.order() {
                out.push(violation(
                    ViolationKind::Shape,
                    format!("dense mode {m} out of range"),
                ));
                return out;
            }
        }
        let sparse = self.sparse_modes();
        let nf = self.nfibers();
        if nf * self.chunk_len() != self.vals().len() {
            out.push(violation(
                ViolationKind::ChunkLength,
                format!(
                    "{nf} fibers x chunk {} != {} values",
                    self.chunk_len(),
                    self.vals().len()
                ),
            ));
        }
        match self.index() {
            SparseIndex::Coo(inds) => {
                if inds.len() != sparse.len() {
                    out.push(violation(
                        ViolationKind::Length,
                        format!(
                            "{} index arrays for {} sparse modes",
                            inds.len(),
                            sparse.len()
                        ),
                    ));
                    return out;
                }
                for (k, a) in inds.iter().enumerate() {
                    let m = sparse[k];
                    if a.len() != nf {
                        out.push(violation(
                            ViolationKind::Length,
                            format!("mode {m}: {} indices for {nf} fibers", a.len()),
                        ));
                    }
                    for (x, &i) in a.iter().enumerate() {
                        if i >= self.dims()[m] {
                            out.push(violation(
                                ViolationKind::Bounds,
                                format!(
                                    "fiber {x}: index {i} >= dim {} on mode {m}",
                                    self.dims()[m]
                                ),
                            ));
                        }
                    }
                }
            }
            SparseIndex::Hicoo {
                block_size,
                bptr,
                modes,
            } => {
                if modes.len() != sparse.len() {
                    out.push(violation(
                        ViolationKind::Length,
                        format!(
                            "{} mode stores for {} sparse modes",
                            modes.len(),
                            sparse.len()
                        ),
                    ));
                    return out;
                }
                validate_blocked(self.dims(), &sparse, *block_size, bptr, modes, nf, &mut out);
            }
        }
        out
    }
}
