//! Z-curve (Morton) ordering over 32-bit coordinates.
//!
//! Coordinates are compared as if their bits were interleaved, most
//! significant bit level first, with lower mode numbers taking the higher
//! position inside each level. Nothing is materialized: the comparison finds
//! the mode holding the most significant differing bit and compares there.

use std::cmp::Ordering;

#[inline]
fn less_msb(x: u32, y: u32) -> bool {
    x < y && x < (x ^ y)
}

/// Morton comparison of two coordinate tuples given by accessor closures.
#[inline]
pub fn morton_cmp_by(order: usize, a: impl Fn(usize) -> u32, b: impl Fn(usize) -> u32) -> Ordering {
    if order == 0 {
        return Ordering::Equal;
    }
    let mut msd = 0;
    let mut best = a(0) ^ b(0);
    for m in 1..order {
        let x = a(m) ^ b(m);
        if less_msb(best, x) {
            msd = m;
            best = x;
        }
    }
    a(msd).cmp(&b(msd))
}

pub fn morton_cmp(a: &[u32], b: &[u32]) -> Ordering {
    debug_assert_eq!(a.len(), b.len());
    morton_cmp_by(a.len(), |m| a[m], |m| b[m])
}

/// Explicit bit-interleaved key for up to four 32-bit coordinates.
pub fn morton_encode(coords: &[u32]) -> u128 {
    assert!(coords.len() <= 4, "morton_encode supports at most 4 modes");
    let mut key = 0u128;
    for bit in (0..32).rev() {
        for &c in coords {
            key = (key << 1) | ((c >> bit) & 1) as u128;
        }
    }
    key
}
