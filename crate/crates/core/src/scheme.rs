//! The privacy-key coded-caching engine.
//!
//! A library of `N` files over `F_q` is split into packets indexed by
//! t-subsets of the `K` users. Each user caches the packets of every file
//! for the subsets containing it, plus one *privacy key* per remaining
//! subset: a random linear combination of that subset's packets across all
//! files. Delivery publishes the query vectors `q_k = p_k + d_k`, picks a
//! leader set of maximal rank, and multicasts one coded signal per
//! (t+1)-subset that meets a leader; the remaining signals are linear
//! combinations of the transmitted ones and are recovered by an explicit
//! solve over the packet basis.
//!
//! Two demand variants are supported: SFR restricts demands to unit vectors
//! and draws keys from the affine hyperplane with component sum `q-1` (so
//! queries live in the sum-zero subspace); LFR allows any demand vector and
//! draws keys uniformly from `F_q^N`.

use alloc::vec;
use alloc::vec::Vec;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rand_core::RngCore;
use thiserror::Error;

use crate::bounds;
use crate::combin::{binom_u64, Subset, SubsetSpace};
use crate::gf::{Fq, GfError};
use crate::linalg::{self, FqMatrix, FqVector, LinalgError};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SchemeError {
    #[error("invalid parameters: {0}")]
    InvalidParams(&'static str),
    #[error("file length {len} is not a positive multiple of the subpacketization {subpacketization}")]
    InvalidLength { len: usize, subpacketization: usize },
    #[error("invalid demand: {0}")]
    InvalidDemand(&'static str),
    #[error("an untransmitted signal is not a combination of the transmitted ones; this contradicts the reconstructability guarantee and signals a bug")]
    TheoremViolation,
    #[error("decode failure: {0}")]
    DecodeFailure(&'static str),
    #[error(transparent)]
    Gf(#[from] GfError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

/// Demand model: single file retrieval or linear function retrieval.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Variant {
    Sfr,
    Lfr,
}

impl Variant {
    pub fn as_str(&self) -> &'static str {
        match self {
            Variant::Sfr => "sfr",
            Variant::Lfr => "lfr",
        }
    }
}

impl core::str::FromStr for Variant {
    type Err = SchemeError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "sfr" | "SFR" => Ok(Variant::Sfr),
            "lfr" | "LFR" => Ok(Variant::Lfr),
            _ => Err(SchemeError::InvalidParams("variant must be sfr or lfr")),
        }
    }
}

/// System parameters, validated at construction.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SystemParams {
    n: usize,
    k: usize,
    t: usize,
    field: Fq,
    b: usize,
    variant: Variant,
}

impl SystemParams {
    pub fn new(
        n: usize,
        k: usize,
        t: usize,
        q: u32,
        b: usize,
        variant: Variant,
    ) -> Result<Self, SchemeError> {
        if n < 2 {
            return Err(SchemeError::InvalidParams("at least two files required"));
        }
        if k < 2 {
            return Err(SchemeError::InvalidParams("at least two users required"));
        }
        if k > 24 {
            return Err(SchemeError::InvalidParams("user count is capped at 24"));
        }
        if t >= k {
            return Err(SchemeError::InvalidParams(
                "cache parameter t must lie in [0, K-1]",
            ));
        }
        let field = Fq::new(q)?;
        let f_t = binom_u64(k as u64, t as u64) as usize;
        if b == 0 || !b.is_multiple_of(f_t) {
            return Err(SchemeError::InvalidLength {
                len: b,
                subpacketization: f_t,
            });
        }
        Ok(SystemParams {
            n,
            k,
            t,
            field,
            b,
            variant,
        })
    }

    pub fn n_files(&self) -> usize {
        self.n
    }

    pub fn k_users(&self) -> usize {
        self.k
    }

    pub fn t(&self) -> usize {
        self.t
    }

    pub fn field(&self) -> Fq {
        self.field
    }

    pub fn file_len(&self) -> usize {
        self.b
    }

    pub fn variant(&self) -> Variant {
        self.variant
    }

    /// Number of packets each file is split into, `C(K, t)`.
    pub fn subpacketization(&self) -> usize {
        binom_u64(self.k as u64, self.t as u64) as usize
    }

    pub fn packet_len(&self) -> usize {
        self.b / self.subpacketization()
    }

    /// Packet index space: t-subsets of the users in lexicographic order.
    pub fn packet_space(&self) -> SubsetSpace {
        SubsetSpace::new(self.k, self.t)
    }

    /// Signal index space: (t+1)-subsets in lexicographic order.
    pub fn signal_space(&self) -> SubsetSpace {
        SubsetSpace::new(self.k, self.t + 1)
    }

    /// Cache size per user in file units, `M_t = 1 + t(N-1)/K`.
    pub fn memory_per_user(&self) -> BigRational {
        BigRational::new(
            BigInt::from(self.k + self.t * (self.n - 1)),
            BigInt::from(self.k),
        )
    }

    /// Cache size per user in symbols, exactly `M_t * B`.
    pub fn cache_symbols(&self) -> usize {
        let uncoded = if self.t == 0 {
            0
        } else {
            self.n * binom_u64((self.k - 1) as u64, (self.t - 1) as u64) as usize
        };
        let keyed = binom_u64((self.k - 1) as u64, self.t as u64) as usize;
        (uncoded + keyed) * self.packet_len()
    }

    pub fn is_valid_demand(&self, d: &FqVector) -> bool {
        if d.field() != self.field || d.len() != self.n {
            return false;
        }
        match self.variant {
            Variant::Lfr => true,
            Variant::Sfr => {
                d.as_raw().iter().filter(|&&v| v != 0).count() == 1
                    && d.as_raw().contains(&1)
            }
        }
    }

    /// The demand set `D`, one entry per admissible per-user demand vector.
    /// SFR: the unit vectors in file order. LFR: all of `F_q^N`, enumerated
    /// as base-q counters with the first coordinate most significant.
    pub fn demand_alphabet(&self) -> Vec<FqVector> {
        match self.variant {
            Variant::Sfr => (0..self.n)
                .map(|i| FqVector::unit(self.field, self.n, i))
                .collect(),
            Variant::Lfr => enumerate_vectors(self.field, self.n),
        }
    }

    /// The support of the per-user key distribution, enumerated in the same
    /// order the sampler parameterizes it (free coordinates as a base-q
    /// counter). Every entry is equally likely under `sample_keys`.
    pub fn key_alphabet(&self) -> Vec<FqVector> {
        match self.variant {
            Variant::Sfr => {
                let q = self.field.modulus();
                enumerate_vectors(self.field, self.n - 1)
                    .into_iter()
                    .map(|head| {
                        let mut vals = head.as_raw().to_vec();
                        let sum = head.component_sum();
                        vals.push(self.field.sub_raw(q - 1, sum));
                        FqVector::new(self.field, vals).expect("residues in range")
                    })
                    .collect()
            }
            Variant::Lfr => enumerate_vectors(self.field, self.n),
        }
    }
}

fn enumerate_vectors(field: Fq, len: usize) -> Vec<FqVector> {
    let q = field.modulus() as u64;
    let total = q.checked_pow(len as u32).expect("vector space too large") as usize;
    let mut out = Vec::with_capacity(total);
    let mut current = vec![0u32; len];
    for _ in 0..total {
        out.push(FqVector::new(field, current.clone()).expect("residues in range"));
        // increment base-q counter, last coordinate least significant
        for pos in (0..len).rev() {
            current[pos] += 1;
            if current[pos] < q as u32 {
                break;
            }
            current[pos] = 0;
        }
    }
    out
}

/// The file library, stored as flat symbol vectors; packets are views
/// selected by the lexicographic rank of their t-subset.
#[derive(Debug, Clone)]
pub struct Library {
    params: SystemParams,
    files: Vec<Vec<u32>>,
}

/// Splits `files` into the packet structure dictated by `params`. The
/// partition is lossless by construction: packet `r` of file `n` is the
/// r-th length-`B/C(K,t)` slice, and concatenating the packets in canonical
/// subset order reproduces the file.
pub fn split_library(files: Vec<Vec<u32>>, params: &SystemParams) -> Result<Library, SchemeError> {
    if files.len() != params.n {
        return Err(SchemeError::InvalidParams("library must hold N files"));
    }
    for f in &files {
        if f.len() != params.b {
            return Err(SchemeError::InvalidLength {
                len: f.len(),
                subpacketization: params.subpacketization(),
            });
        }
        for &s in f {
            if s >= params.field.modulus() {
                return Err(GfError::OutOfRange {
                    value: u64::from(s),
                    q: params.field.modulus(),
                }
                .into());
            }
        }
    }
    Ok(Library {
        params: *params,
        files,
    })
}

impl Library {
    pub fn random(params: &SystemParams, rng: &mut impl RngCore) -> Library {
        let q = params.field.modulus();
        let files = (0..params.n)
            .map(|_| (0..params.b).map(|_| uniform_residue(rng, q)).collect())
            .collect();
        Library {
            params: *params,
            files,
        }
    }

    pub fn params(&self) -> &SystemParams {
        &self.params
    }

    pub fn files(&self) -> &[Vec<u32>] {
        &self.files
    }

    /// Packet `W_{n,T}` where `rank` is the lexicographic rank of `T`.
    pub fn packet(&self, n: usize, rank: usize) -> &[u32] {
        let plen = self.params.packet_len();
        &self.files[n][rank * plen..(rank + 1) * plen]
    }

    /// Coded packet `W_{a,T} = sum_n a_n W_{n,T}`.
    pub fn linear_packet(&self, coeffs: &FqVector, rank: usize) -> Vec<u32> {
        let f = self.params.field;
        let mut out = vec![0u32; self.params.packet_len()];
        for (n, &c) in coeffs.as_raw().iter().enumerate() {
            if c != 0 {
                for (o, &s) in out.iter_mut().zip(self.packet(n, rank)) {
                    *o = f.add_raw(*o, f.mul_raw(c, s));
                }
            }
        }
        out
    }

    /// The demanded message `W_d = sum_n d_n W_n`. This is the definition a
    /// decoder's output is checked against; `decode` itself never calls it.
    pub fn demanded_message(&self, demand: &FqVector) -> Vec<u32> {
        let f = self.params.field;
        let mut out = vec![0u32; self.params.b];
        for (n, &c) in demand.as_raw().iter().enumerate() {
            if c != 0 {
                for (o, &s) in out.iter_mut().zip(&self.files[n]) {
                    *o = f.add_raw(*o, f.mul_raw(c, s));
                }
            }
        }
        out
    }
}

/// Draws one value uniformly from `[0, q)` by rejection, so the law is
/// exactly uniform for any modulus.
pub fn uniform_residue(rng: &mut impl RngCore, q: u32) -> u32 {
    let q64 = u64::from(q);
    let bound = (1u64 << 32) / q64 * q64;
    loop {
        let x = u64::from(rng.next_u32());
        if x < bound {
            return (x % q64) as u32;
        }
    }
}

/// Samples the key coefficient vectors `p_1..p_K`, independent across
/// users. SFR keys are uniform on the hyperplane with component sum `q-1`
/// (the first `N-1` coordinates are free, the last is forced), LFR keys are
/// uniform on all of `F_q^N`.
pub fn sample_keys(params: &SystemParams, rng: &mut impl RngCore) -> Vec<FqVector> {
    let q = params.field.modulus();
    (0..params.k)
        .map(|_| {
            let mut vals: Vec<u32> = match params.variant {
                Variant::Sfr => {
                    let mut v: Vec<u32> =
                        (0..params.n - 1).map(|_| uniform_residue(rng, q)).collect();
                    let sum = v.iter().fold(0, |acc, &x| params.field.add_raw(acc, x));
                    v.push(params.field.sub_raw(q - 1, sum));
                    v
                }
                Variant::Lfr => (0..params.n).map(|_| uniform_residue(rng, q)).collect(),
            };
            vals.shrink_to_fit();
            FqVector::new(params.field, vals).expect("residues in range")
        })
        .collect()
}

/// One user's cache: the uncoded packets of every file for subsets
/// containing the user, and one key packet per remaining subset.
#[derive(Debug, Clone)]
pub struct UserCache {
    user: usize,
    in_ranks: Vec<usize>,
    out_ranks: Vec<usize>,
    uncoded: Vec<Vec<u32>>,
    keyed: Vec<Vec<u32>>,
}

impl UserCache {
    pub fn user(&self) -> usize {
        self.user
    }

    /// Cached packet `W_{n,T}`, or `None` when `T` does not contain the user.
    pub fn uncoded_packet(&self, n: usize, rank: usize) -> Option<&[u32]> {
        let pos = self.in_ranks.binary_search(&rank).ok()?;
        Some(&self.uncoded[n * self.in_ranks.len() + pos])
    }

    /// Cached key packet `W_{p,T}`, or `None` when `T` contains the user.
    pub fn key_packet(&self, rank: usize) -> Option<&[u32]> {
        let pos = self.out_ranks.binary_search(&rank).ok()?;
        Some(&self.keyed[pos])
    }

    pub fn total_symbols(&self) -> usize {
        self.uncoded.iter().map(Vec::len).sum::<usize>()
            + self.keyed.iter().map(Vec::len).sum::<usize>()
    }

    /// Every cached symbol in canonical order: uncoded packets file-major by
    /// subset rank, then key packets by subset rank. This is the cache's
    /// serialization for audits and byte-exact comparisons.
    pub fn symbols(&self) -> impl Iterator<Item = u32> + '_ {
        self.uncoded
            .iter()
            .chain(self.keyed.iter())
            .flatten()
            .copied()
    }
}

/// Fills one user's cache from its key vector.
pub fn user_cache(
    library: &Library,
    user: usize,
    key: &FqVector,
) -> Result<UserCache, SchemeError> {
    let params = library.params();
    if user >= params.k {
        return Err(SchemeError::InvalidParams("user index out of range"));
    }
    if key.field() != params.field || key.len() != params.n {
        return Err(SchemeError::InvalidParams(
            "key vector has the wrong shape for this system",
        ));
    }
    let space = params.packet_space();
    let mut in_ranks = Vec::new();
    let mut out_ranks = Vec::new();
    for (rank, set) in space.iter() {
        if set.contains(user) {
            in_ranks.push(rank);
        } else {
            out_ranks.push(rank);
        }
    }
    let mut uncoded = Vec::with_capacity(params.n * in_ranks.len());
    for n in 0..params.n {
        for &rank in &in_ranks {
            uncoded.push(library.packet(n, rank).to_vec());
        }
    }
    let keyed = out_ranks
        .iter()
        .map(|&rank| library.linear_packet(key, rank))
        .collect();
    Ok(UserCache {
        user,
        in_ranks,
        out_ranks,
        uncoded,
        keyed,
    })
}

/// Result of the placement phase: the server randomness `P = p_[K]` and the
/// filled caches `Z_[K]`.
#[derive(Debug, Clone)]
pub struct PlacementState {
    pub keys: Vec<FqVector>,
    pub caches: Vec<UserCache>,
}

pub fn place(library: &Library, keys: Vec<FqVector>) -> Result<PlacementState, SchemeError> {
    let params = library.params();
    if keys.len() != params.k {
        return Err(SchemeError::InvalidParams("one key vector per user required"));
    }
    let caches = keys
        .iter()
        .enumerate()
        .map(|(k, key)| user_cache(library, k, key))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(PlacementState { keys, caches })
}

/// One multicast signal `Y_S`, tagged by the lexicographic rank of `S` in
/// the (t+1)-subset space.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PayloadSignal {
    pub rank: usize,
    pub symbols: Vec<u32>,
}


/// The transmitted signal `X = (L, q_[K], Y)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DeliverySignal {
    /// Leader users, ascending.
    pub leaders: Vec<usize>,
    /// Query vectors `q_k = p_k + d_k`.
    pub queries: Vec<FqVector>,
    /// Signals `Y_S` for every `S` meeting the leader set, canonical order.
    pub payload: Vec<PayloadSignal>,
}

impl DeliverySignal {
    pub fn payload_symbols(&self) -> usize {
        self.payload.iter().map(|p| p.symbols.len()).sum()
    }
}

pub fn deliver(
    placement: &PlacementState,
    demands: &[FqVector],
    library: &Library,
) -> Result<DeliverySignal, SchemeError> {
    let params = library.params();
    if demands.len() != params.k {
        return Err(SchemeError::InvalidDemand("one demand per user required"));
    }
    for d in demands {
        if d.field() != params.field || d.len() != params.n {
            return Err(SchemeError::InvalidDemand("demand vector has wrong shape"));
        }
        if !params.is_valid_demand(d) {
            return Err(SchemeError::InvalidDemand(
                "SFR demands must be standard unit vectors",
            ));
        }
    }
    let queries: Vec<FqVector> = placement
        .keys
        .iter()
        .zip(demands)
        .map(|(p, d)| p.add(d))
        .collect();
    let leaders = linalg::leader_set(&queries)?;
    let leader_set = Subset::from_members(&leaders);
    let pspace = params.packet_space();
    let mut payload = Vec::new();
    for (rank, s) in params.signal_space().iter() {
        if !s.intersects(&leader_set) {
            continue;
        }
        let f = params.field;
        let mut symbols = vec![0u32; params.packet_len()];
        // Terms alternate sign with the member's position in the sorted
        // subset. The alternation gives the signal family its
        // boundary-operator structure, which is what makes every
        // untransmitted signal a linear combination of the transmitted ones
        // over any prime field; over F_2 the signs vanish and the signals
        // coincide with the plain XOR form.
        for (pos, j) in s.members().enumerate() {
            let t_rank = pspace.rank(s.without(j)).expect("valid t-subset");
            let coded = library.linear_packet(&queries[j], t_rank);
            for (o, c) in symbols.iter_mut().zip(coded) {
                *o = if pos % 2 == 0 {
                    f.add_raw(*o, c)
                } else {
                    f.sub_raw(*o, c)
                };
            }
        }
        payload.push(PayloadSignal { rank, symbols });
    }
    Ok(DeliverySignal {
        leaders,
        queries,
        payload,
    })
}

/// Coefficient vector of `Y_S` over the packet-variable basis `(n, T)`,
/// flattened as `n * C(K,t) + rank(T)`.
fn signal_coefficients(
    queries: &[FqVector],
    s: Subset,
    pspace: &SubsetSpace,
    params: &SystemParams,
) -> FqVector {
    let f = params.field;
    let dim = params.n * pspace.len();
    let mut coeff = vec![0u32; dim];
    for (pos, j) in s.members().enumerate() {
        let t_rank = pspace.rank(s.without(j)).expect("valid t-subset");
        for (n, &c) in queries[j].as_raw().iter().enumerate() {
            let idx = n * pspace.len() + t_rank;
            coeff[idx] = if pos % 2 == 0 {
                f.add_raw(coeff[idx], c)
            } else {
                f.sub_raw(coeff[idx], c)
            };
        }
    }
    FqVector::new(f, coeff).expect("residues in range")
}

/// Completes the payload to the full family `{Y_S : S in Omega_{t+1}}`,
/// expressing every untransmitted signal as a linear combination of the
/// transmitted ones. The combination is found by solving for the signal's
/// coefficient vector over the packet basis, so a failure here means the
/// reconstructability guarantee was violated.
pub fn reconstruct_missing(
    signal: &DeliverySignal,
    params: &SystemParams,
) -> Result<Vec<Vec<u32>>, SchemeError> {
    let pspace = params.packet_space();
    let sspace = params.signal_space();
    let plen = params.packet_len();
    let f = params.field;
    let mut full: Vec<Option<Vec<u32>>> = vec![None; sspace.len()];
    for p in &signal.payload {
        if p.symbols.len() != plen {
            return Err(SchemeError::DecodeFailure("payload packet length mismatch"));
        }
        full[p.rank] = Some(p.symbols.clone());
    }
    if full.iter().all(Option::is_some) {
        return Ok(full.into_iter().map(Option::unwrap).collect());
    }
    // Transposed coefficient matrix: one column per transmitted signal.
    let dim = params.n * pspace.len();
    let mut at = FqMatrix::zeros(f, dim, signal.payload.len());
    for (col, p) in signal.payload.iter().enumerate() {
        let c = signal_coefficients(&signal.queries, sspace.get(p.rank), &pspace, params);
        for (row, &v) in c.as_raw().iter().enumerate() {
            at.set(row, col, v);
        }
    }
    for (rank, slot) in full.iter_mut().enumerate() {
        if slot.is_some() {
            continue;
        }
        let target = signal_coefficients(&signal.queries, sspace.get(rank), &pspace, params);
        let Some(x) = linalg::solve(&at, &target)? else {
            return Err(SchemeError::TheoremViolation);
        };
        let mut symbols = vec![0u32; plen];
        for (i, &c) in x.as_raw().iter().enumerate() {
            if c != 0 {
                for (o, &s) in symbols.iter_mut().zip(&signal.payload[i].symbols) {
                    *o = f.add_raw(*o, f.mul_raw(c, s));
                }
            }
        }
        *slot = Some(symbols);
    }
    Ok(full.into_iter().map(Option::unwrap).collect())
}

/// Decodes user `k`'s demanded message from the broadcast signal and its own
/// cache only. Packets for subsets containing `k` come straight from the
/// uncoded cache; every other packet is peeled out of `Y_{T + {k}}` by
/// cancelling the cached key packet and the cross terms computable from the
/// uncoded cache.
pub fn decode(
    user: usize,
    signal: &DeliverySignal,
    cache: &UserCache,
    demand: &FqVector,
    params: &SystemParams,
) -> Result<Vec<u32>, SchemeError> {
    let full = reconstruct_missing(signal, params)?;
    decode_with_payload(user, &signal.queries, &full, cache, demand, params)
}

/// Same as [`decode`], with the payload already completed by
/// [`reconstruct_missing`]. Exposed so bulk simulations can complete each
/// signal once and decode many users against it.
pub fn decode_with_payload(
    user: usize,
    queries: &[FqVector],
    full_payload: &[Vec<u32>],
    cache: &UserCache,
    demand: &FqVector,
    params: &SystemParams,
) -> Result<Vec<u32>, SchemeError> {
    if user >= params.k || cache.user() != user {
        return Err(SchemeError::DecodeFailure("cache does not belong to user"));
    }
    if queries.len() != params.k {
        return Err(SchemeError::DecodeFailure("one query vector per user required"));
    }
    if !params.is_valid_demand(demand) {
        return Err(SchemeError::InvalidDemand("demand vector has wrong shape"));
    }
    let pspace = params.packet_space();
    let sspace = params.signal_space();
    if full_payload.len() != sspace.len() {
        return Err(SchemeError::DecodeFailure("incomplete payload family"));
    }
    let f = params.field;
    let plen = params.packet_len();
    let mut message = vec![0u32; params.b];
    for (rank, t_set) in pspace.iter() {
        let out = &mut message[rank * plen..(rank + 1) * plen];
        if t_set.contains(user) {
            // W_{d,T} directly from the uncoded cache.
            for (n, &c) in demand.as_raw().iter().enumerate() {
                if c != 0 {
                    let packet = cache
                        .uncoded_packet(n, rank)
                        .ok_or(SchemeError::DecodeFailure("missing uncoded packet"))?;
                    for (o, &s) in out.iter_mut().zip(packet) {
                        *o = f.add_raw(*o, f.mul_raw(c, s));
                    }
                }
            }
        } else {
            // Peel the user's coded packet out of Y_{T+{k}} with the signal
            // signs, then strip the cached key:
            //   W_{q,T} = sgn(k) (Y_{T+{k}} - sum_{j in T} sgn(j) W_{q_j, T+{k}-{j}})
            //   W_{d,T} = W_{q,T} - W_{p,T}
            let s = t_set.with(user);
            let s_rank = sspace.rank(s).expect("valid signal subset");
            out.copy_from_slice(&full_payload[s_rank]);
            let mut user_negated = false;
            for (pos, j) in s.members().enumerate() {
                if j == user {
                    user_negated = pos % 2 == 1;
                    continue;
                }
                let cross_rank = pspace.rank(s.without(j)).expect("valid t-subset");
                for (n, &c) in queries[j].as_raw().iter().enumerate() {
                    if c != 0 {
                        let packet = cache
                            .uncoded_packet(n, cross_rank)
                            .ok_or(SchemeError::DecodeFailure("missing cross packet"))?;
                        for (o, &sym) in out.iter_mut().zip(packet) {
                            let term = f.mul_raw(c, sym);
                            *o = if pos % 2 == 0 {
                                f.sub_raw(*o, term)
                            } else {
                                f.add_raw(*o, term)
                            };
                        }
                    }
                }
            }
            if user_negated {
                for o in out.iter_mut() {
                    *o = f.neg_raw(*o);
                }
            }
            let key = cache
                .key_packet(rank)
                .ok_or(SchemeError::DecodeFailure("missing key packet"))?;
            for (o, &sym) in out.iter_mut().zip(key) {
                *o = f.sub_raw(*o, sym);
            }
        }
    }
    Ok(message)
}

/// Worst-case load accounting for one delivery: transmitted payload packets
/// divided by the per-file packet count, as an exact rational. The leader
/// set and query vectors ride along in `K + NK` symbols and vanish in the
/// large-file limit, so they are excluded.
pub fn measured_load(signal: &DeliverySignal, params: &SystemParams) -> BigRational {
    BigRational::new(
        BigInt::from(signal.payload.len()),
        BigInt::from(params.subpacketization()),
    )
}

/// A full placement-delivery-decode round for one demand tuple.
#[derive(Debug, Clone)]
pub struct SimulationRun {
    pub keys: Vec<FqVector>,
    pub demands: Vec<FqVector>,
    pub signal: DeliverySignal,
    pub decoded: Vec<Vec<u32>>,
    pub decoded_ok: bool,
    pub measured_load: BigRational,
}

/// Samples keys, places, delivers, and decodes every user, then checks each
/// decoder output against the demanded linear combination.
pub fn simulate(
    library: &Library,
    demands: &[FqVector],
    rng: &mut impl RngCore,
) -> Result<SimulationRun, SchemeError> {
    let params = library.params();
    let keys = sample_keys(params, rng);
    let placement = place(library, keys.clone())?;
    let signal = deliver(&placement, demands, library)?;
    let full = reconstruct_missing(&signal, params)?;
    let mut decoded = Vec::with_capacity(params.k);
    let mut decoded_ok = true;
    for (k, demand) in demands.iter().enumerate() {
        let out = decode_with_payload(
            k,
            &signal.queries,
            &full,
            &placement.caches[k],
            demand,
            params,
        )?;
        decoded_ok &= out == library.demanded_message(demand);
        decoded.push(out);
    }
    let load = measured_load(&signal, params);
    Ok(SimulationRun {
        keys,
        demands: demands.to_vec(),
        signal,
        decoded,
        decoded_ok,
        measured_load: load,
    })
}

/// One corner scheme a memory-sharing split delegates to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ShareCorner {
    /// The (0, N) point: nothing cached, every file broadcast.
    Broadcast,
    /// A privacy-key corner with parameter `t` in [0, K-1].
    Keyed { t: usize },
    /// The (N, 0) point: every file cached whole, nothing sent.
    FullCache,
}

impl ShareCorner {
    pub fn subpacketization(&self, k: usize) -> u64 {
        match self {
            ShareCorner::Broadcast | ShareCorner::FullCache => 1,
            ShareCorner::Keyed { t } => binom_u64(k as u64, *t as u64),
        }
    }
}

/// A memory-sharing plan for a non-corner cache size: split each file with
/// ratio `alpha` and run the two adjacent envelope corner schemes side by
/// side on the parts.
#[derive(Debug, Clone)]
pub struct SharePlan {
    pub n: usize,
    pub k: usize,
    pub variant: Variant,
    pub low: ShareCorner,
    pub high: ShareCorner,
    /// Weight of the low corner: `M = alpha*M_low + (1-alpha)*M_high`.
    pub alpha: BigRational,
    pub memory: BigRational,
    /// Envelope load at `memory`.
    pub load: BigRational,
}

impl SharePlan {
    /// Packets per file once both corner splits are applied.
    pub fn subpacketization(&self) -> u64 {
        if self.alpha.is_one() {
            self.low.subpacketization(self.k)
        } else if self.alpha.is_zero() {
            self.high.subpacketization(self.k)
        } else {
            self.low.subpacketization(self.k) + self.high.subpacketization(self.k)
        }
    }

    /// Least file length B such that `alpha*B` is a multiple of the low
    /// corner's subpacketization and `(1-alpha)*B` of the high corner's.
    pub fn min_file_len(&self) -> u64 {
        let lo = part_divisor(&self.alpha, self.low.subpacketization(self.k));
        let hi = part_divisor(
            &(BigRational::one() - &self.alpha),
            self.high.subpacketization(self.k),
        );
        lcm(lo, hi)
    }

    pub fn part_lens(&self, b: usize) -> Result<(usize, usize), SchemeError> {
        let lo = &self.alpha * BigRational::from_integer(BigInt::from(b));
        if !lo.is_integer() {
            return Err(SchemeError::InvalidLength {
                len: b,
                subpacketization: self.min_file_len() as usize,
            });
        }
        let lo = lo.to_integer().to_usize().expect("part length fits usize");
        let hi = b - lo;
        let flo = self.low.subpacketization(self.k) as usize;
        let fhi = self.high.subpacketization(self.k) as usize;
        if (flo > 0 && !lo.is_multiple_of(flo)) || (fhi > 0 && !hi.is_multiple_of(fhi)) {
            return Err(SchemeError::InvalidLength {
                len: b,
                subpacketization: self.min_file_len() as usize,
            });
        }
        Ok((lo, hi))
    }
}

// Least b with (num/den)*b an integer multiple of f.
fn part_divisor(alpha: &BigRational, f: u64) -> u64 {
    if alpha.is_zero() {
        return 1;
    }
    let num = alpha.numer().magnitude().to_u64().expect("small ratio");
    let den = alpha.denom().magnitude().to_u64().expect("small ratio");
    // b = den*f / gcd(num, den*f)
    den * f / gcd(num, den * f)
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

fn lcm(a: u64, b: u64) -> u64 {
    a / gcd(a, b) * b
}

fn corner_of(m: &BigRational, n: usize, k: usize) -> ShareCorner {
    if m.is_zero() {
        return ShareCorner::Broadcast;
    }
    // M_t = 1 + t(N-1)/K, so t = (M-1) K / (N-1).
    let t = (m - BigRational::one()) * BigRational::new(BigInt::from(k), BigInt::from(n - 1));
    assert!(t.is_integer(), "hull corner is not a scheme corner");
    let t = t.to_integer().to_usize().expect("corner parameter");
    if t == k {
        ShareCorner::FullCache
    } else {
        ShareCorner::Keyed { t }
    }
}

/// Chooses the adjacent lower-convex-envelope corners for cache size `m` and
/// the split ratio between them.
pub fn plan_memory_share(
    n: usize,
    k: usize,
    variant: Variant,
    m: &BigRational,
) -> Result<SharePlan, SchemeError> {
    if n < 2 || k < 2 {
        return Err(SchemeError::InvalidParams("need N >= 2 and K >= 2"));
    }
    if m.is_negative() || m > &BigRational::from_integer(BigInt::from(n)) {
        return Err(SchemeError::InvalidParams("cache size must lie in [0, N]"));
    }
    let curve = bounds::privacy_key_curve(n, k, variant);
    let hull = curve.hull();
    let load = curve
        .eval(m)
        .map_err(|_| SchemeError::InvalidParams("cache size must lie in [0, N]"))?;
    // Find the hull segment containing m.
    let mut seg = hull.len() - 2;
    for i in 0..hull.len() - 1 {
        if m >= &hull[i].0 && m <= &hull[i + 1].0 {
            seg = i;
            break;
        }
    }
    let (m_lo, _) = &hull[seg];
    let (m_hi, _) = &hull[seg + 1];
    let alpha = if m_lo == m_hi {
        BigRational::one()
    } else {
        (m_hi - m) / (m_hi - m_lo)
    };
    Ok(SharePlan {
        n,
        k,
        variant,
        low: corner_of(m_lo, n, k),
        high: corner_of(m_hi, n, k),
        alpha,
        memory: m.clone(),
        load,
    })
}

/// Outcome of a memory-shared round.
#[derive(Debug, Clone)]
pub struct ShareRun {
    pub plan: SharePlan,
    pub decoded: Vec<Vec<u32>>,
    pub decoded_ok: bool,
    /// Total cached symbols per user across both parts.
    pub cache_symbols: usize,
    pub payload_symbols: usize,
    pub measured_load: BigRational,
}

/// Runs the memory-sharing scheme at cache size `m` on `files` of length
/// `B`: the first `alpha*B` symbols of every file go to the low-memory
/// corner, the rest to the high-memory corner.
#[allow(clippy::too_many_arguments)]
pub fn share_memory(
    n: usize,
    k: usize,
    q: u32,
    variant: Variant,
    m: &BigRational,
    files: &[Vec<u32>],
    demands: &[FqVector],
    rng: &mut impl RngCore,
) -> Result<ShareRun, SchemeError> {
    let plan = plan_memory_share(n, k, variant, m)?;
    if files.len() != n {
        return Err(SchemeError::InvalidParams("library must hold N files"));
    }
    let b = files.first().map(Vec::len).unwrap_or(0);
    if b == 0 || files.iter().any(|f| f.len() != b) {
        return Err(SchemeError::InvalidParams("files must share one positive length"));
    }
    let (b_lo, b_hi) = plan.part_lens(b)?;
    let mut decoded = vec![vec![0u32; 0]; k];
    let mut cache_symbols = 0usize;
    let mut payload_symbols = 0usize;
    for (corner, range) in [
        (plan.low, 0..b_lo),
        (plan.high, b_lo..b_lo + b_hi),
    ] {
        if range.is_empty() {
            continue;
        }
        let part: Vec<Vec<u32>> = files.iter().map(|f| f[range.clone()].to_vec()).collect();
        let part_len = range.len();
        match corner {
            ShareCorner::Broadcast => {
                // Everything on the air; a demand is decoded by combining
                // the broadcast files directly.
                payload_symbols += n * part_len;
                let params = SystemParams::new(n, k, 0, q, part_len, variant)?;
                let lib = split_library(part, &params)?;
                for (user, d) in demands.iter().enumerate() {
                    decoded[user].extend(lib.demanded_message(d));
                }
            }
            ShareCorner::FullCache => {
                cache_symbols += n * part_len;
                let params = SystemParams::new(n, k, 0, q, part_len, variant)?;
                let lib = split_library(part, &params)?;
                for (user, d) in demands.iter().enumerate() {
                    decoded[user].extend(lib.demanded_message(d));
                }
            }
            ShareCorner::Keyed { t } => {
                let params = SystemParams::new(n, k, t, q, part_len, variant)?;
                let lib = split_library(part, &params)?;
                let run = simulate(&lib, demands, rng)?;
                if !run.decoded_ok {
                    return Err(SchemeError::DecodeFailure("corner scheme decode mismatch"));
                }
                cache_symbols += params.cache_symbols();
                payload_symbols += run.signal.payload_symbols();
                for (user, out) in run.decoded.into_iter().enumerate() {
                    decoded[user].extend(out);
                }
            }
        }
    }
    let expected: Vec<Vec<u32>> = {
        let field = Fq::new(q)?;
        demands
            .iter()
            .map(|d| {
                let mut out = vec![0u32; b];
                for (nf, &c) in d.as_raw().iter().enumerate() {
                    if c != 0 {
                        for (o, &s) in out.iter_mut().zip(&files[nf]) {
                            *o = field.add_raw(*o, field.mul_raw(c, s));
                        }
                    }
                }
                out
            })
            .collect()
    };
    let decoded_ok = decoded == expected;
    let measured_load = BigRational::new(BigInt::from(payload_symbols), BigInt::from(b));
    Ok(ShareRun {
        plan,
        decoded,
        decoded_ok,
        cache_symbols,
        payload_symbols,
        measured_load,
    })
}
