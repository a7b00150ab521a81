//! Comparison schemes.
//!
//! The virtual-user construction (a private scheme built from a non-private
//! one for `NK` users) and the plain non-private scheme enter only through
//! their corner points: executing the virtual-user scheme is infeasible at
//! any interesting scale because its subpacketization is `C(KN, t)`, and the
//! comparisons only need the tradeoff curves.
//!
//! The index-shuffle baseline (`example1_*`) is executable at tiny scale. It
//! hides each demanded file part among uniform filler slots and is known to
//! satisfy the weaker per-user privacy notion while leaking under fixed file
//! realizations; the audit module demonstrates the leak. It works over `F_2`
//! and requires more files than users.

use alloc::vec;
use alloc::vec::Vec;

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive};
use rand_core::RngCore;
use thiserror::Error;

use crate::combin::binom;
use crate::scheme::uniform_residue;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum BaselineError {
    #[error("unsupported: {0}")]
    Unsupported(&'static str),
    #[error("invalid parameters: {0}")]
    InvalidParams(&'static str),
    #[error("size constraint violated: {0}")]
    InvalidLength(&'static str),
}

/// One corner of a memory-load tradeoff: cache size, load, subpacketization.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TradeoffPoint {
    pub m: BigRational,
    pub r: BigRational,
    pub f: BigUint,
}

fn ratio(num: BigUint, den: BigUint) -> BigRational {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

/// Corner points of the virtual-user private scheme: for `t` in `[0, KN]`,
/// `M = t/K`, `R = (C(KN,t+1) - C((K-1)N,t+1)) / C(KN,t)`, `F = C(KN,t)`.
pub fn virtual_user_points(n: usize, k: usize) -> Vec<TradeoffPoint> {
    assert!(n >= 2 && k >= 2);
    let (n64, k64) = (n as u64, k as u64);
    let kn = k64 * n64;
    (0..=kn)
        .map(|t| TradeoffPoint {
            m: BigRational::new(BigInt::from(t), BigInt::from(k64)),
            r: ratio(
                binom(kn, t + 1) - binom((k64 - 1) * n64, t + 1),
                binom(kn, t),
            ),
            f: binom(kn, t),
        })
        .collect()
}

/// Corner points of the non-private scheme: for `t` in `[0, K]`,
/// `M = tN/K`, `R = (C(K,t+1) - C(K-min(N,K),t+1)) / C(K,t)`, `F = C(K,t)`.
pub fn nonprivate_points(n: usize, k: usize) -> Vec<TradeoffPoint> {
    assert!(n >= 2 && k >= 2);
    let (n64, k64) = (n as u64, k as u64);
    let m = n64.min(k64);
    (0..=k64)
        .map(|t| TradeoffPoint {
            m: BigRational::new(BigInt::from(t * n64), BigInt::from(k64)),
            r: ratio(binom(k64, t + 1) - binom(k64 - m, t + 1), binom(k64, t)),
            f: binom(k64, t),
        })
        .collect()
}

/// Parameters of the index-shuffle baseline. Files live in `F_2^B`; a
/// fraction `M/N` of every file is cached by everyone, the rest is served
/// through shuffled broadcast slots.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Example1Params {
    n: usize,
    k: usize,
    b: usize,
    cached_len: usize,
}

impl Example1Params {
    pub fn new(n: usize, k: usize, m: &BigRational, b: usize) -> Result<Self, BaselineError> {
        if k < 1 || n < 2 {
            return Err(BaselineError::InvalidParams("need N >= 2 and K >= 1"));
        }
        if n <= k {
            return Err(BaselineError::Unsupported(
                "the index-shuffle baseline requires more files than users",
            ));
        }
        if m.is_negative() || m > &BigRational::from_integer(BigInt::from(n)) {
            return Err(BaselineError::InvalidParams("cache size must lie in [0, N]"));
        }
        if b == 0 {
            return Err(BaselineError::InvalidLength("file length must be positive"));
        }
        // cached part per file: (M/N) * B symbols, must be an integer
        let cached = m * BigRational::new(BigInt::from(b), BigInt::from(n));
        if !cached.is_integer() {
            return Err(BaselineError::InvalidLength(
                "(M/N)*B must be an integer symbol count",
            ));
        }
        let cached_len = cached.to_integer().to_usize().expect("cached length fits");
        Ok(Example1Params {
            n,
            k,
            b,
            cached_len,
        })
    }

    pub fn n_files(&self) -> usize {
        self.n
    }

    pub fn k_users(&self) -> usize {
        self.k
    }

    pub fn file_len(&self) -> usize {
        self.b
    }

    pub fn cached_len(&self) -> usize {
        self.cached_len
    }

    pub fn uncached_len(&self) -> usize {
        self.b - self.cached_len
    }
}

/// The server randomness of one round: a slot permutation `T`, per-user slot
/// keys `S`, and per-slot fillers `V`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Example1Randomness {
    /// `T_1..T_K`: a permutation of the slot indices `[0, K)`.
    pub slot_perm: Vec<usize>,
    /// `S_1..S_K`: i.i.d. uniform on `[0, K)`.
    pub keys: Vec<usize>,
    /// `V_1..V_K`: i.i.d. uniform on `F_2^{(1-M/N)B}`.
    pub fillers: Vec<Vec<u32>>,
}

pub fn example1_sample(params: &Example1Params, rng: &mut impl RngCore) -> Example1Randomness {
    let k = params.k;
    let mut slot_perm: Vec<usize> = (0..k).collect();
    // Fisher-Yates with exact uniform draws
    for i in (1..k).rev() {
        let j = uniform_residue(rng, (i + 1) as u32) as usize;
        slot_perm.swap(i, j);
    }
    let keys = (0..k)
        .map(|_| uniform_residue(rng, k as u32) as usize)
        .collect();
    let fillers = (0..k)
        .map(|_| {
            (0..params.uncached_len())
                .map(|_| uniform_residue(rng, 2))
                .collect()
        })
        .collect();
    Example1Randomness {
        slot_perm,
        keys,
        fillers,
    }
}

/// Enumerable view of the randomness space: every index in `[0, len)` maps
/// to one equally likely realization, which is what the exact audit needs.
#[derive(Debug, Clone, Copy)]
pub struct Example1PSpace {
    params: Example1Params,
}

impl Example1PSpace {
    pub fn new(params: Example1Params) -> Self {
        Example1PSpace { params }
    }

    pub fn len(&self) -> u64 {
        let k = self.params.k as u64;
        let filler_bits = self.params.uncached_len() * self.params.k;
        assert!(filler_bits < 48, "filler space too large to enumerate");
        let perms: u64 = (1..=k).product();
        let keys = k.pow(self.params.k as u32);
        perms * keys * (1u64 << filler_bits)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn get(&self, idx: u64) -> Example1Randomness {
        let k = self.params.k;
        let u = self.params.uncached_len();
        let filler_sz = 1u64 << (u * k);
        let key_sz = (k as u64).pow(k as u32);
        let filler_rank = idx % filler_sz;
        let key_rank = (idx / filler_sz) % key_sz;
        let perm_rank = idx / filler_sz / key_sz;
        // fillers: one bit per symbol, user-major
        let fillers = (0..k)
            .map(|j| {
                (0..u)
                    .map(|s| ((filler_rank >> (j * u + s)) & 1) as u32)
                    .collect()
            })
            .collect();
        // keys: base-K digits, user 0 least significant
        let mut kr = key_rank;
        let keys = (0..k)
            .map(|_| {
                let d = (kr % k as u64) as usize;
                kr /= k as u64;
                d
            })
            .collect();
        // permutation: factorial number system
        let mut avail: Vec<usize> = (0..k).collect();
        let mut pr = perm_rank;
        let mut slot_perm = Vec::with_capacity(k);
        for i in (0..k).rev() {
            let fact: u64 = (1..=i as u64).product();
            let d = (pr / fact) as usize;
            pr %= fact;
            slot_perm.push(avail.remove(d));
        }
        Example1Randomness {
            slot_perm,
            keys,
            fillers,
        }
    }
}

/// Samples fresh randomness and executes one round.
pub fn example1_round(
    params: &Example1Params,
    files: &[Vec<u32>],
    demands: &[usize],
    rng: &mut impl RngCore,
) -> Result<Example1Run, BaselineError> {
    let rnd = example1_sample(params, rng);
    example1_run(params, &rnd, files, demands)
}

/// One user's cache in the baseline: its slot key and the cached prefix of
/// every file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Example1Cache {
    pub key: usize,
    pub cached_parts: Vec<Vec<u32>>,
}

/// One executed round of the baseline.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Example1Run {
    /// `Q_1..Q_K`: masked slot positions, residues in `[0, K)`.
    pub queries: Vec<usize>,
    /// `Y_1..Y_K`: broadcast slots (demanded file parts or fillers).
    pub slots: Vec<Vec<u32>>,
    pub caches: Vec<Example1Cache>,
    pub decoded: Vec<Vec<u32>>,
}

/// Executes the baseline verbatim: slot assignment `J` reuses the slot of
/// the first user with the same demand, `Q_j` masks `J_j` with the user key,
/// slot `T_i` carries the uncached part demanded by user `i`, every other
/// slot carries its filler. `demands` are file indices.
pub fn example1_run(
    params: &Example1Params,
    rnd: &Example1Randomness,
    files: &[Vec<u32>],
    demands: &[usize],
) -> Result<Example1Run, BaselineError> {
    let (n, k, b) = (params.n, params.k, params.b);
    if files.len() != n || files.iter().any(|f| f.len() != b) {
        return Err(BaselineError::InvalidParams("library must hold N files of length B"));
    }
    if files.iter().flatten().any(|&s| s > 1) {
        return Err(BaselineError::InvalidParams("files must be binary"));
    }
    if demands.len() != k || demands.iter().any(|&d| d >= n) {
        return Err(BaselineError::InvalidParams("demands must be K file indices"));
    }
    if rnd.slot_perm.len() != k || rnd.keys.len() != k || rnd.fillers.len() != k {
        return Err(BaselineError::InvalidParams("randomness has wrong shape"));
    }
    let cached = params.cached_len;
    // Side indices J: first occurrence takes its own slot from T, repeats
    // point at the first occurrence's slot.
    let mut side = vec![0usize; k];
    for i in 0..k {
        side[i] = match (0..i).find(|&j| demands[j] == demands[i]) {
            Some(j) => side[j],
            None => rnd.slot_perm[i],
        };
    }
    let queries: Vec<usize> = (0..k).map(|j| (side[j] + rnd.keys[j]) % k).collect();
    // Broadcast slots: T_i carries user i's uncached demanded part.
    let mut slots: Vec<Vec<u32>> = rnd.fillers.clone();
    for i in 0..k {
        slots[rnd.slot_perm[i]] = files[demands[i]][cached..].to_vec();
    }
    let caches: Vec<Example1Cache> = (0..k)
        .map(|j| Example1Cache {
            key: rnd.keys[j],
            cached_parts: files.iter().map(|f| f[..cached].to_vec()).collect(),
        })
        .collect();
    // Decode: recover the slot index from the masked query and the cached
    // key, then prepend the cached prefix.
    let decoded = (0..k)
        .map(|j| {
            let slot = (queries[j] + k - caches[j].key) % k;
            let mut msg = caches[j].cached_parts[demands[j]].clone();
            msg.extend_from_slice(&slots[slot]);
            msg
        })
        .collect();
    Ok(Example1Run {
        queries,
        slots,
        caches,
        decoded,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_traits::One;

    fn rat(n: i64, d: i64) -> BigRational {
        BigRational::new(BigInt::from(n), BigInt::from(d))
    }

    #[test]
    fn virtual_user_endpoints() {
        let pts = virtual_user_points(3, 2);
        // t = 0 achieves (0, N)
        assert_eq!(pts[0].m, rat(0, 1));
        assert_eq!(pts[0].r, rat(3, 1));
        assert_eq!(pts[0].f, BigUint::one());
        // t = KN achieves (N, 0)
        let last = pts.last().unwrap();
        assert_eq!(last.m, rat(3, 1));
        assert_eq!(last.r, rat(0, 1));
    }

    #[test]
    fn virtual_user_mid_corner() {
        // N=2, K=2, t=2: M = 1, R = (C(4,3) - C(2,3)) / C(4,2) = 4/6
        let pts = virtual_user_points(2, 2);
        assert_eq!(pts[2].m, rat(1, 1));
        assert_eq!(pts[2].r, rat(2, 3));
    }

    #[test]
    fn virtual_user_load_nonincreasing() {
        for (n, k) in [(2usize, 2usize), (3, 2), (2, 3), (4, 3)] {
            let pts = virtual_user_points(n, k);
            for w in pts.windows(2) {
                assert!(w[0].r >= w[1].r, "load must be nonincreasing in t");
            }
        }
    }

    #[test]
    fn nonprivate_corners() {
        // t = K gives (N, 0)
        let pts = nonprivate_points(4, 3);
        let last = pts.last().unwrap();
        assert_eq!(last.m, rat(4, 1));
        assert_eq!(last.r, rat(0, 1));
        // N >= K, t = 0 gives (0, K)
        assert_eq!(pts[0].m, rat(0, 1));
        assert_eq!(pts[0].r, rat(3, 1));
        // N=10, K=30, t=3: M = 1, R = (C(30,4) - C(20,4)) / C(30,3)
        //                     = (27405 - 4845) / 4060 = 1128/203
        let pts = nonprivate_points(10, 30);
        assert_eq!(pts[3].m, rat(1, 1));
        assert_eq!(pts[3].r, rat(1128, 203));
    }

    #[test]
    fn example1_requires_more_files_than_users() {
        let m = rat(0, 1);
        assert!(matches!(
            Example1Params::new(2, 2, &m, 2),
            Err(BaselineError::Unsupported(_))
        ));
    }

    #[test]
    fn example1_single_distinct_demand_takes_own_slot() {
        let params = Example1Params::new(3, 1, &rat(0, 1), 1).unwrap();
        let rnd = Example1Randomness {
            slot_perm: vec![0],
            keys: vec![0],
            fillers: vec![vec![0]],
        };
        let files = vec![vec![1], vec![0], vec![1]];
        let run = example1_run(&params, &rnd, &files, &[1]).unwrap();
        assert_eq!(run.slots[0], files[1]);
        assert_eq!(run.decoded[0], files[1]);
    }

    #[test]
    fn example1_decodes_all_users() {
        // N=3, K=2, M=0: caches hold only the slot key; everything decoded
        // from the broadcast.
        let params = Example1Params::new(3, 2, &rat(0, 1), 2).unwrap();
        let files = vec![vec![1, 0], vec![0, 1], vec![1, 1]];
        let space = Example1PSpace::new(params);
        for idx in 0..space.len() {
            let rnd = space.get(idx);
            for d0 in 0..3 {
                for d1 in 0..3 {
                    let run = example1_run(&params, &rnd, &files, &[d0, d1]).unwrap();
                    assert_eq!(run.decoded[0], files[d0]);
                    assert_eq!(run.decoded[1], files[d1]);
                }
            }
        }
    }

    #[test]
    fn example1_repeated_demands_share_a_slot() {
        let params = Example1Params::new(3, 2, &rat(0, 1), 1).unwrap();
        let rnd = Example1Randomness {
            slot_perm: vec![1, 0],
            keys: vec![0, 1],
            fillers: vec![vec![0], vec![0]],
        };
        let files = vec![vec![1], vec![0], vec![1]];
        let run = example1_run(&params, &rnd, &files, &[0, 0]).unwrap();
        // J_2 = J_1 = T_1 = slot 1; both queries point at the same slot
        let slot0 = (run.queries[0] + 2 - rnd.keys[0]) % 2;
        let slot1 = (run.queries[1] + 2 - rnd.keys[1]) % 2;
        assert_eq!(slot0, slot1);
        assert_eq!(slot0, 1);
    }

    #[test]
    fn example1_pspace_is_exhaustive_and_distinct() {
        let params = Example1Params::new(3, 2, &rat(0, 1), 1).unwrap();
        let space = Example1PSpace::new(params);
        // 2! permutations, 2^2 keys, 2^(1*2) fillers
        assert_eq!(space.len(), 2 * 4 * 4);
        let mut seen = std::collections::BTreeSet::new();
        for idx in 0..space.len() {
            assert!(seen.insert(alloc::format!("{:?}", space.get(idx))));
        }
    }

    #[test]
    fn example1_cache_size_matches_m() {
        // M = 1, N = 4, B = 4: each user caches (M/N)*B = 1 symbol per file
        let params = Example1Params::new(4, 2, &rat(1, 1), 4).unwrap();
        assert_eq!(params.cached_len(), 1);
        assert_eq!(params.uncached_len(), 3);
    }
}
