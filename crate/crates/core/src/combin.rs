//! Binomial coefficients and canonical subset enumeration.
//!
//! Subpacketization indices everywhere in this crate are t-subsets of the
//! user set, enumerated in lexicographic order of their sorted member
//! lists: for K=4, t=2 the order is {0,1},{0,2},{0,3},{1,2},{1,3},{2,3}.
//! That order is the canonical packet order for serialization.

use alloc::vec::Vec;

use num_bigint::BigUint;
use num_traits::{One, Zero};

/// Exact binomial coefficient with the convention C(n, k) = 0 for k > n.
pub fn binom(n: u64, k: u64) -> BigUint {
    if k > n {
        return BigUint::zero();
    }
    let k = k.min(n - k);
    let mut res = BigUint::one();
    for i in 0..k {
        res = res * BigUint::from(n - i) / BigUint::from(i + 1);
    }
    res
}

/// Binomial coefficient as `u64`; panics on overflow. Intended for packet
/// and signal counts, which stay small at any scale this crate executes.
pub fn binom_u64(n: u64, k: u64) -> u64 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut res: u128 = 1;
    for i in 0..k {
        res = res * u128::from(n - i) / u128::from(i + 1);
    }
    u64::try_from(res).expect("binomial coefficient overflows u64")
}

/// A subset of users `[0, K)` as a bitmask. `K` is capped at 64.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug, Default)]
pub struct Subset(u64);

impl Subset {
    pub const EMPTY: Subset = Subset(0);

    pub fn from_members(members: &[usize]) -> Self {
        let mut mask = 0u64;
        for &m in members {
            assert!(m < 64, "user index out of range");
            mask |= 1 << m;
        }
        Subset(mask)
    }

    /// The full set [0, k).
    pub fn full(k: usize) -> Self {
        assert!(k <= 64);
        if k == 64 {
            Subset(u64::MAX)
        } else {
            Subset((1u64 << k) - 1)
        }
    }

    pub fn contains(&self, user: usize) -> bool {
        user < 64 && self.0 & (1 << user) != 0
    }

    pub fn with(&self, user: usize) -> Self {
        assert!(user < 64);
        Subset(self.0 | (1 << user))
    }

    pub fn without(&self, user: usize) -> Self {
        assert!(user < 64);
        Subset(self.0 & !(1 << user))
    }

    pub fn len(&self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_empty(&self) -> bool {
        self.0 == 0
    }

    pub fn intersects(&self, other: &Subset) -> bool {
        self.0 & other.0 != 0
    }

    pub fn complement(&self, k: usize) -> Self {
        Subset(Self::full(k).0 & !self.0)
    }

    /// Members in ascending order.
    pub fn members(&self) -> impl Iterator<Item = usize> + '_ {
        let mask = self.0;
        (0..64).filter(move |i| mask & (1 << i) != 0)
    }

    /// All 2^k subsets of [0, k), in ascending mask order.
    pub fn all(k: usize) -> impl Iterator<Item = Subset> {
        assert!(k < 32, "subset powerset too large");
        (0u64..(1 << k)).map(Subset)
    }
}

/// All t-subsets of `[0, k)` in lexicographic order, with rank lookup.
#[derive(Clone, Debug)]
pub struct SubsetSpace {
    k: usize,
    t: usize,
    sets: Vec<Subset>,
    // (mask, lexicographic rank), sorted by mask for binary search
    by_mask: Vec<(u64, usize)>,
}

impl SubsetSpace {
    pub fn new(k: usize, t: usize) -> Self {
        assert!(t <= k && k <= 64);
        let mut sets = Vec::new();
        if t == 0 {
            sets.push(Subset::EMPTY);
        } else {
            // Standard next-combination walk over sorted index tuples.
            let mut idx: Vec<usize> = (0..t).collect();
            loop {
                sets.push(Subset::from_members(&idx));
                // advance
                let mut i = t;
                loop {
                    if i == 0 {
                        i = usize::MAX;
                        break;
                    }
                    i -= 1;
                    if idx[i] != i + k - t {
                        break;
                    }
                }
                if i == usize::MAX {
                    break;
                }
                idx[i] += 1;
                for j in i + 1..t {
                    idx[j] = idx[j - 1] + 1;
                }
            }
        }
        let mut by_mask: Vec<(u64, usize)> =
            sets.iter().enumerate().map(|(r, s)| (s.0, r)).collect();
        by_mask.sort_unstable();
        SubsetSpace { k, t, sets, by_mask }
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn t(&self) -> usize {
        self.t
    }

    pub fn len(&self) -> usize {
        self.sets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sets.is_empty()
    }

    pub fn get(&self, rank: usize) -> Subset {
        self.sets[rank]
    }

    /// Lexicographic rank of a t-subset, or `None` if it has the wrong size.
    pub fn rank(&self, s: Subset) -> Option<usize> {
        if s.len() != self.t {
            return None;
        }
        self.by_mask
            .binary_search_by_key(&s.0, |&(m, _)| m)
            .ok()
            .map(|i| self.by_mask[i].1)
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, Subset)> + '_ {
        self.sets.iter().copied().enumerate()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn binom_values() {
        assert_eq!(binom(5, 2), BigUint::from(10u32));
        assert_eq!(binom(0, 0), BigUint::from(1u32));
        assert_eq!(binom(3, 5), BigUint::zero());
        assert_eq!(binom_u64(30, 3), 4060);
        assert_eq!(binom_u64(300, 3), 4_455_100);
        // C(KN, t) at the scales the subpacketization table prints
        assert_eq!(
            binom(300, 30) % BigUint::from(1_000_000_007u64),
            binom(299, 29) % BigUint::from(1_000_000_007u64) * BigUint::from(10u32)
                % BigUint::from(1_000_000_007u64)
        );
    }

    #[test]
    fn lexicographic_order_k4_t2() {
        let sp = SubsetSpace::new(4, 2);
        let expect = [
            Subset::from_members(&[0, 1]),
            Subset::from_members(&[0, 2]),
            Subset::from_members(&[0, 3]),
            Subset::from_members(&[1, 2]),
            Subset::from_members(&[1, 3]),
            Subset::from_members(&[2, 3]),
        ];
        assert_eq!(sp.len(), 6);
        for (i, e) in expect.iter().enumerate() {
            assert_eq!(sp.get(i), *e);
            assert_eq!(sp.rank(*e), Some(i));
        }
    }

    #[test]
    fn empty_subset_space() {
        let sp = SubsetSpace::new(3, 0);
        assert_eq!(sp.len(), 1);
        assert_eq!(sp.get(0), Subset::EMPTY);
        assert_eq!(sp.rank(Subset::EMPTY), Some(0));
    }

    #[test]
    fn space_sizes_match_binomials() {
        for k in 1..=8usize {
            for t in 0..=k {
                assert_eq!(
                    SubsetSpace::new(k, t).len() as u64,
                    binom_u64(k as u64, t as u64)
                );
            }
        }
    }

    #[test]
    fn subset_ops() {
        let s = Subset::from_members(&[1, 3]);
        assert!(s.contains(1) && s.contains(3) && !s.contains(0));
        assert_eq!(s.with(0).len(), 3);
        assert_eq!(s.without(3).len(), 1);
        assert_eq!(s.complement(4), Subset::from_members(&[0, 2]));
        assert_eq!(Subset::all(3).count(), 8);
        let members: alloc::vec::Vec<usize> = s.members().collect();
        assert_eq!(members, alloc::vec![1, 3]);
    }
}
