//! Lattice points and their packed 64-bit keys.
//!
//! A site in Z^d (d <= 3) packs into one `u64`: 21 bits per coordinate,
//! stored with an offset of 2^20 so that every coordinate with
//! `|c| < 2^20` maps to a non-negative field. Unused coordinates are zero.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::collections::{HashMap, HashSet};
use std::hash::{BuildHasherDefault, Hasher};
use std::ops::{Add, Neg, Sub};

pub const MAX_DIM: usize = 3;
const FIELD_BITS: u32 = 21;
const OFFSET: i64 = 1 << 20;
const FIELD_MASK: u64 = (1 << FIELD_BITS) - 1;

/// A point of Z^d, d <= 3; trailing coordinates beyond `d` are zero.
#[derive(Copy, Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Site(pub [i64; MAX_DIM]);

impl Site {
    pub const ORIGIN: Site = Site([0; MAX_DIM]);

    pub fn new(coords: &[i64]) -> Result<Self> {
        if coords.is_empty() || coords.len() > MAX_DIM {
            return Err(Error::UnsupportedDimension(coords.len()));
        }
        let mut c = [0; MAX_DIM];
        c[..coords.len()].copy_from_slice(coords);
        Ok(Site(c))
    }

    /// Unit vector `e_axis` (0-based).
    pub fn unit(axis: usize) -> Self {
        let mut c = [0; MAX_DIM];
        c[axis] = 1;
        Site(c)
    }

    pub fn is_origin(&self) -> bool {
        self.0 == [0; MAX_DIM]
    }

    /// Max-norm.
    pub fn norm_inf(&self) -> i64 {
        self.0.iter().map(|c| c.abs()).max().unwrap_or(0)
    }

    pub fn key(&self) -> Result<u64> {
        let mut key = 0u64;
        for (i, &c) in self.0.iter().enumerate() {
            if c.abs() >= OFFSET {
                return Err(Error::CoordinateOverflow { coord: c });
            }
            key |= ((c + OFFSET) as u64) << (FIELD_BITS * i as u32);
        }
        Ok(key)
    }

    pub fn from_key(key: u64) -> Self {
        let mut c = [0; MAX_DIM];
        for (i, slot) in c.iter_mut().enumerate() {
            let field = (key >> (FIELD_BITS * i as u32)) & FIELD_MASK;
            *slot = field as i64 - OFFSET;
        }
        Site(c)
    }
}

impl Add for Site {
    type Output = Site;
    #[inline]
    fn add(self, rhs: Site) -> Site {
        Site([self.0[0] + rhs.0[0], self.0[1] + rhs.0[1], self.0[2] + rhs.0[2]])
    }
}

impl Sub for Site {
    type Output = Site;
    #[inline]
    fn sub(self, rhs: Site) -> Site {
        Site([self.0[0] - rhs.0[0], self.0[1] - rhs.0[1], self.0[2] - rhs.0[2]])
    }
}

impl Neg for Site {
    type Output = Site;
    #[inline]
    fn neg(self) -> Site {
        Site([-self.0[0], -self.0[1], -self.0[2]])
    }
}

/// Largest coordinate magnitude a walk may reach before its keys overflow.
pub const MAX_COORD: i64 = OFFSET - 1;

/// Multiplicative mixer for packed keys. The packed layout already spreads
/// coordinates over disjoint bit fields, so one odd multiply plus a fold is
/// enough to randomise the low bits the table indexes on.
#[derive(Default, Clone, Copy)]
pub struct KeyHasher(u64);

impl Hasher for KeyHasher {
    #[inline]
    fn finish(&self) -> u64 {
        self.0
    }

    fn write(&mut self, bytes: &[u8]) {
        for &b in bytes {
            self.0 = (self.0.rotate_left(8) ^ b as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15);
        }
    }

    #[inline]
    fn write_u64(&mut self, x: u64) {
        let h = (self.0.rotate_left(23) ^ x).wrapping_mul(0x9E37_79B9_7F4A_7C15);
        self.0 = h ^ (h >> 29);
    }
}

pub type KeyBuildHasher = BuildHasherDefault<KeyHasher>;
pub type KeySet = HashSet<u64, KeyBuildHasher>;
pub type KeyMap<V> = HashMap<u64, V, KeyBuildHasher>;
