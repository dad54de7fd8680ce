//! Truncated wavenumber lattice `{(n, m) : |n| <= N, |m| <= N}` and the
//! region split that decides which velocity component is independent.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// An integer wavenumber pair: `n` along x, `m` along y.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct WaveIndex {
    pub n: i32,
    pub m: i32,
}

impl WaveIndex {
    pub const MEAN: WaveIndex = WaveIndex { n: 0, m: 0 };

    pub const fn new(n: i32, m: i32) -> Self {
        Self { n, m }
    }

    /// The Hermitian partner `(-n, -m)`.
    pub const fn neg(self) -> Self {
        Self { n: -self.n, m: -self.m }
    }

    pub fn region(self) -> Region {
        assign_region(self)
    }

    /// `n² + m²`.
    pub fn norm_sq(self) -> i64 {
        let (n, m) = (self.n as i64, self.m as i64);
        n * n + m * m
    }

    /// `max(|n|, |m|)`, the smallest truncation bound containing this mode.
    pub fn chebyshev_radius(self) -> u32 {
        self.n.unsigned_abs().max(self.m.unsigned_abs())
    }

    /// One representative of each Hermitian pair: `m > 0`, or `m == 0` and
    /// `n > 0`. The mean mode is its own partner and counts as canonical.
    pub fn is_canonical(self) -> bool {
        self.m > 0 || (self.m == 0 && self.n >= 0)
    }
}

/// Which incompressibility relation determines the dependent component.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Region {
    /// `|m| >= |n|`, not both zero: `C` is independent, `D = -(n/m) C`.
    Region1,
    /// `|n| > |m|`: `D` is independent, `C = -(m/n) D`.
    Region2,
    /// `(0, 0)`: both components are free and held constant in time.
    MeanMode,
}

pub fn assign_region(idx: WaveIndex) -> Region {
    let (an, am) = (idx.n.unsigned_abs(), idx.m.unsigned_abs());
    if an == 0 && am == 0 {
        Region::MeanMode
    } else if am >= an {
        Region::Region1
    } else {
        Region::Region2
    }
}

/// Square lattice of modes with `|n|, |m| <= N`, stored row-major with `n`
/// as the slow index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ModeLattice {
    bound: usize,
}

impl ModeLattice {
    pub fn new(bound: usize) -> Result<Self> {
        if bound == 0 || bound > i32::MAX as usize / 8 {
            return Err(Error::InvalidTruncation(bound as i64));
        }
        Ok(Self { bound })
    }

    /// The truncation bound `N`.
    pub fn bound(&self) -> usize {
        self.bound
    }

    pub fn side(&self) -> usize {
        2 * self.bound + 1
    }

    /// Number of modes, `(2N + 1)²`.
    pub fn len(&self) -> usize {
        self.side() * self.side()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn contains(&self, idx: WaveIndex) -> bool {
        let b = self.bound as u32;
        idx.n.unsigned_abs() <= b && idx.m.unsigned_abs() <= b
    }

    pub fn index(&self, idx: WaveIndex) -> Option<usize> {
        self.contains(idx).then(|| self.index_unchecked(idx))
    }

    pub fn try_index(&self, idx: WaveIndex) -> Result<usize> {
        self.index(idx).ok_or(Error::ModeOutOfRange { mode: idx, bound: self.bound })
    }

    #[inline]
    pub(crate) fn index_unchecked(&self, idx: WaveIndex) -> usize {
        let b = self.bound as i32;
        ((idx.n + b) as usize) * self.side() + (idx.m + b) as usize
    }

    pub fn mode_at(&self, k: usize) -> WaveIndex {
        let b = self.bound as i32;
        let side = self.side();
        WaveIndex::new((k / side) as i32 - b, (k % side) as i32 - b)
    }

    /// All modes in storage order.
    pub fn modes(&self) -> impl Iterator<Item = WaveIndex> + '_ {
        (0..self.len()).map(move |k| self.mode_at(k))
    }

    /// Storage index of the Hermitian partner of the mode stored at `k`.
    #[inline]
    pub(crate) fn partner(&self, k: usize) -> usize {
        self.len() - 1 - k
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn region_examples() {
        assert_eq!(assign_region(WaveIndex::new(2, 3)), Region::Region1);
        assert_eq!(assign_region(WaveIndex::new(3, 2)), Region::Region2);
        assert_eq!(assign_region(WaveIndex::new(2, 2)), Region::Region1);
        assert_eq!(assign_region(WaveIndex::new(-2, 2)), Region::Region1);
        assert_eq!(assign_region(WaveIndex::new(0, 0)), Region::MeanMode);
        assert_eq!(assign_region(WaveIndex::new(0, -1)), Region::Region1);
        assert_eq!(assign_region(WaveIndex::new(-1, 0)), Region::Region2);
    }

    #[test]
    fn lattice_cardinality() {
        assert_eq!(ModeLattice::new(27).unwrap().len(), 3025);
        assert_eq!(ModeLattice::new(5).unwrap().len(), 121);
        assert!(ModeLattice::new(0).is_err());
    }

    #[test]
    fn indexing_roundtrip_and_partner() {
        let lat = ModeLattice::new(4).unwrap();
        for (k, mode) in lat.modes().enumerate() {
            assert_eq!(lat.index(mode), Some(k));
            assert_eq!(lat.mode_at(lat.partner(k)), mode.neg());
        }
        assert_eq!(lat.index(WaveIndex::new(5, 0)), None);
    }

    #[test]
    fn every_pair_has_one_canonical_member() {
        let lat = ModeLattice::new(3).unwrap();
        for mode in lat.modes().filter(|m| *m != WaveIndex::MEAN) {
            assert_ne!(mode.is_canonical(), mode.neg().is_canonical());
        }
    }
}
