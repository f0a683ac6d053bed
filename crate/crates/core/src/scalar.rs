//! Value types accepted by the tensor containers and kernels.

use std::fmt::{Debug, Display};
use std::iter::Sum;
use std::ops::{Add, AddAssign, Div, Mul, Neg, Sub};
use std::sync::atomic::{AtomicU32, AtomicU64, Ordering};

/// Floating-point element type (`f32` or `f64`).
///
/// Carries an atomic cell type so MTTKRP can accumulate into shared output
/// rows without locks.
pub trait Scalar:
    Copy
    + Send
    + Sync
    + Debug
    + Display
    + Default
    + PartialEq
    + PartialOrd
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + AddAssign
    + Sum
    + 'static
{
    type Atomic: Send + Sync;

    const ZERO: Self;
    const ONE: Self;
    const BYTES: usize;
    const NAME: &'static str;

    fn from_f64(v: f64) -> Self;
    fn to_f64(self) -> f64;

    fn new_atomic(v: Self) -> Self::Atomic;
    fn atomic_add(cell: &Self::Atomic, v: Self);
    fn atomic_load(cell: &Self::Atomic) -> Self;
    fn atomic_store(cell: &Self::Atomic, v: Self);
}

macro_rules! impl_scalar {
    ($t:ty, $atomic:ty, $name:literal) => {
        impl Scalar for $t {
            type Atomic = $atomic;

            const ZERO: Self = 0.0;
            const ONE: Self = 1.0;
            const BYTES: usize = std::mem::size_of::<$t>();
            const NAME: &'static str = $name;

            #[inline]
            fn from_f64(v: f64) -> Self {
                v as $t
            }

            #[inline]
            fn to_f64(self) -> f64 {
                self as f64
            }

            fn new_atomic(v: Self) -> Self::Atomic {
                <$atomic>::new(v.to_bits())
            }

            #[inline]
            fn atomic_add(cell: &Self::Atomic, v: Self) {
                let mut cur = cell.load(Ordering::Relaxed);
                loop {
                    let next = (<$t>::from_bits(cur) + v).to_bits();
                    match cell.compare_exchange_weak(
                        cur,
                        next,
                        Ordering::Relaxed,
                        Ordering::Relaxed,
                    ) {
                        Ok(_) => break,
                        Err(actual) => cur = actual,
                    }
                }
            }

            #[inline]
            fn atomic_load(cell: &Self::Atomic) -> Self {
                <$t>::from_bits(cell.load(Ordering::Relaxed))
            }

            #[inline]
            fn atomic_store(cell: &Self::Atomic, v: Self) {
                cell.store(v.to_bits(), Ordering::Relaxed)
            }
        }
    };
}

impl_scalar!(f32, AtomicU32, "f32");
impl_scalar!(f64, AtomicU64, "f64");
