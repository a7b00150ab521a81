//! Exact privacy verification by exhaustive enumeration.
//!
//! The colluding-user privacy condition asks that, with the files held
//! fixed, the joint law of the transmitted signal, the colluders' demands
//! and the colluders' caches be identical for every assignment of the
//! remaining users' demands. The audit enumerates the entire server
//! randomness space (every value equally likely) and the full demand space,
//! builds the conditional distributions as exact counts, and compares them
//! for equality — the verdict never touches floating point. Equality per
//! demand value also makes the verdict independent of the demand
//! distribution.
//!
//! A failing audit returns a witness: the colluder set and the two demand
//! assignments whose conditional distributions differ the most in total
//! variation.

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use thiserror::Error;

use crate::baselines::{example1_run, Example1PSpace, Example1Params};
use crate::combin::Subset;
use crate::linalg::FqVector;
use crate::scheme::{deliver, place, DeliverySignal, Library, UserCache};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum AuditError {
    #[error("enumeration of {0} cases exceeds the audit budget")]
    AuditTooLarge(u128),
    #[error("joint distribution does not sum to one")]
    Unnormalized,
    #[error("joint distribution must be rectangular and nonempty")]
    Shape,
}

pub const DEFAULT_AUDIT_BUDGET: u64 = 10_000_000;

/// A deterministic scheme execution the audit can drive: a finite randomness
/// space with a uniform law, a per-user demand alphabet, and a run map from
/// `(P, demands)` to the byte-encoded observables `(X, Z_[K])`. Files are
/// fixed inside the runner.
pub trait SchemeRunner {
    fn num_users(&self) -> usize;
    fn p_space_len(&self) -> u64;
    /// Size of the per-user demand alphabet `D`.
    fn demand_count(&self) -> usize;
    /// Executes one round. Encodings must be injective and deterministic.
    fn run(&self, p_index: u64, demands: &[usize]) -> RunOutput;
}

/// Byte-encoded observables of one round.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunOutput {
    pub signal: Vec<u8>,
    pub caches: Vec<Vec<u8>>,
}

#[derive(Debug, Clone)]
pub struct AuditConfig {
    /// Colluder sets to check; `None` audits every subset of the users,
    /// including the empty set (signal/demand independence).
    pub colluder_sets: Option<Vec<Subset>>,
    /// Upper bound on `|P-space| * |D|^K`.
    pub budget: u64,
}

impl Default for AuditConfig {
    fn default() -> Self {
        AuditConfig {
            colluder_sets: None,
            budget: DEFAULT_AUDIT_BUDGET,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Pass,
    Fail,
}

/// Per-colluder-set audit outcome. `tv_max` is the largest total-variation
/// distance between conditional distributions across demand assignments of
/// the non-colluders; `mi_bits` the mutual information between those demands
/// (uniform) and the observables.
#[derive(Debug, Clone)]
pub struct SetReport {
    pub colluders: Subset,
    pub tv_max: BigRational,
    pub mi_bits: f64,
}

#[derive(Debug, Clone)]
pub struct Witness {
    pub colluders: Subset,
    /// The non-colluding users, ascending; `demands_a`/`demands_b` assign a
    /// demand index to each of them.
    pub free_users: Vec<usize>,
    pub demands_a: Vec<usize>,
    pub demands_b: Vec<usize>,
    pub tv: BigRational,
}

#[derive(Debug, Clone)]
pub struct AuditReport {
    pub verdict: Verdict,
    pub per_set: Vec<SetReport>,
    pub witness: Option<Witness>,
}

/// Runs the exact audit for every requested colluder set.
pub fn audit_privacy(
    runner: &impl SchemeRunner,
    config: &AuditConfig,
) -> Result<AuditReport, AuditError> {
    let k = runner.num_users();
    let dcount = runner.demand_count();
    let p_len = runner.p_space_len();
    let total = u128::from(p_len) * (dcount as u128).pow(k as u32);
    if total > u128::from(config.budget) {
        return Err(AuditError::AuditTooLarge(total));
    }
    let sets: Vec<Subset> = match &config.colluder_sets {
        Some(sets) => sets.clone(),
        None => Subset::all(k).collect(),
    };

    let mut per_set = Vec::with_capacity(sets.len());
    let mut witness: Option<Witness> = None;
    for &s in &sets {
        let free_users: Vec<usize> = s.complement(k).members().collect();
        // conditional histograms, keyed by the free users' demand assignment
        let mut groups: BTreeMap<Vec<usize>, BTreeMap<Vec<u8>, u64>> = BTreeMap::new();
        let mut demands = vec![0usize; k];
        loop {
            let key_free: Vec<usize> = free_users.iter().map(|&u| demands[u]).collect();
            let hist = groups.entry(key_free).or_default();
            for p in 0..p_len {
                let out = runner.run(p, &demands);
                *hist.entry(encode_observables(&out, &demands, s)).or_insert(0) += 1;
            }
            if !next_tuple(&mut demands, dcount) {
                break;
            }
        }
        let group_total: u64 = p_len * (dcount as u64).pow(s.len() as u32);
        debug_assert!(groups
            .values()
            .all(|h| h.values().sum::<u64>() == group_total));

        // Pairwise total variation between the conditionals.
        let keys: Vec<&Vec<usize>> = groups.keys().collect();
        let mut tv_max = BigRational::zero();
        let mut arg: Option<(Vec<usize>, Vec<usize>)> = None;
        for i in 0..keys.len() {
            for j in i + 1..keys.len() {
                let tv = total_variation(&groups[keys[i]], &groups[keys[j]], group_total);
                if tv > tv_max {
                    tv_max = tv.clone();
                    arg = Some((keys[i].clone(), keys[j].clone()));
                }
            }
        }
        let mi_bits = mutual_information(&joint_distribution(&groups, total))?.bits();
        if !tv_max.is_zero() {
            let (a, b) = arg.expect("positive tv implies a witness pair");
            let better = witness
                .as_ref()
                .map(|w| tv_max > w.tv)
                .unwrap_or(true);
            if better {
                witness = Some(Witness {
                    colluders: s,
                    free_users: free_users.clone(),
                    demands_a: a,
                    demands_b: b,
                    tv: tv_max.clone(),
                });
            }
        }
        per_set.push(SetReport {
            colluders: s,
            tv_max,
            mi_bits,
        });
    }
    let verdict = if per_set.iter().all(|r| r.tv_max.is_zero()) {
        Verdict::Pass
    } else {
        Verdict::Fail
    };
    Ok(AuditReport {
        verdict,
        per_set,
        witness,
    })
}

fn next_tuple(tuple: &mut [usize], radix: usize) -> bool {
    for d in tuple.iter_mut().rev() {
        *d += 1;
        if *d < radix {
            return true;
        }
        *d = 0;
    }
    false
}

fn encode_observables(out: &RunOutput, demands: &[usize], colluders: Subset) -> Vec<u8> {
    let mut enc = Vec::with_capacity(out.signal.len() + 16);
    enc.extend_from_slice(&(out.signal.len() as u32).to_le_bytes());
    enc.extend_from_slice(&out.signal);
    for u in colluders.members() {
        enc.extend_from_slice(&(demands[u] as u16).to_le_bytes());
        enc.extend_from_slice(&(out.caches[u].len() as u32).to_le_bytes());
        enc.extend_from_slice(&out.caches[u]);
    }
    enc
}

fn total_variation(
    a: &BTreeMap<Vec<u8>, u64>,
    b: &BTreeMap<Vec<u8>, u64>,
    total: u64,
) -> BigRational {
    let mut diff: u64 = 0;
    for (key, &ca) in a {
        let cb = b.get(key).copied().unwrap_or(0);
        diff += ca.abs_diff(cb);
    }
    for (key, &cb) in b {
        if !a.contains_key(key) {
            diff += cb;
        }
    }
    BigRational::new(BigInt::from(diff), BigInt::from(2 * total))
}

fn joint_distribution(
    groups: &BTreeMap<Vec<usize>, BTreeMap<Vec<u8>, u64>>,
    grand_total: u128,
) -> Vec<Vec<BigRational>> {
    // union of outcome keys, in deterministic order
    let mut columns: BTreeMap<&Vec<u8>, usize> = BTreeMap::new();
    for hist in groups.values() {
        for key in hist.keys() {
            let next = columns.len();
            columns.entry(key).or_insert(next);
        }
    }
    let mut joint = vec![vec![BigRational::zero(); columns.len()]; groups.len()];
    for (row, hist) in groups.values().enumerate() {
        for (key, &count) in hist {
            let col = columns[key];
            joint[row][col] =
                BigRational::new(BigInt::from(count), BigInt::from(grand_total));
        }
    }
    joint
}

/// Result of an exact mutual-information evaluation. Exact zero is decided
/// on the rationals (product law) before any logarithm is taken, so it can
/// be distinguished from a dependence too small for floating point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MutualInformation {
    /// The joint law is exactly a product law.
    ExactZero,
    /// The variables are dependent; value in bits (may round to 0.0).
    Bits(f64),
}

impl MutualInformation {
    pub fn bits(&self) -> f64 {
        match self {
            MutualInformation::ExactZero => 0.0,
            MutualInformation::Bits(b) => b.max(0.0),
        }
    }

    pub fn is_exactly_zero(&self) -> bool {
        matches!(self, MutualInformation::ExactZero)
    }
}

/// Mutual information of an exact joint distribution over a pair of finite
/// variables. Returns [`MutualInformation::ExactZero`] iff the product law
/// holds exactly; otherwise the value is evaluated in floating point.
pub fn mutual_information(joint: &[Vec<BigRational>]) -> Result<MutualInformation, AuditError> {
    if joint.is_empty() || joint[0].is_empty() {
        return Err(AuditError::Shape);
    }
    let cols = joint[0].len();
    if joint.iter().any(|r| r.len() != cols) {
        return Err(AuditError::Shape);
    }
    let sum: BigRational = joint.iter().flatten().sum();
    if !sum.is_one() {
        return Err(AuditError::Unnormalized);
    }
    let row_marg: Vec<BigRational> = joint.iter().map(|r| r.iter().sum()).collect();
    let col_marg: Vec<BigRational> = (0..cols)
        .map(|c| joint.iter().map(|r| &r[c]).sum())
        .collect();
    let independent = joint.iter().enumerate().all(|(i, row)| {
        row.iter()
            .enumerate()
            .all(|(j, p)| *p == &row_marg[i] * &col_marg[j])
    });
    if independent {
        return Ok(MutualInformation::ExactZero);
    }
    let mut mi = 0.0f64;
    for (i, row) in joint.iter().enumerate() {
        for (j, p) in row.iter().enumerate() {
            if p.is_zero() {
                continue;
            }
            let pf = p.to_f64().expect("probability fits f64");
            let prod = (&row_marg[i] * &col_marg[j])
                .to_f64()
                .expect("probability fits f64");
            mi += pf * libm::log2(pf / prod);
        }
    }
    Ok(MutualInformation::Bits(mi))
}

/// Fixed file realizations audits run against: all-zero files, per-file
/// constants, and a ramp pattern. None of them look uniform, which is the
/// point — privacy must hold for every fixed realization.
pub fn audit_file_realizations(n: usize, b: usize, q: u32) -> Vec<Vec<Vec<u32>>> {
    let zeros = vec![vec![0u32; b]; n];
    let constants: Vec<Vec<u32>> = (0..n).map(|i| vec![(i as u32) % q; b]).collect();
    let ramp: Vec<Vec<u32>> = (0..n)
        .map(|i| (0..b).map(|j| ((i + 2 * j + 1) as u32) % q).collect())
        .collect();
    vec![zeros, constants, ramp]
}

/// Audit adapter for the privacy-key scheme: the randomness space is the
/// K-fold product of the per-user key alphabet (every tuple equally likely),
/// demands index the variant's demand alphabet, and the observables are the
/// delivery signal and the cache contents.
pub struct PrivacyKeyRunner {
    library: Library,
    demand_alphabet: Vec<FqVector>,
    key_alphabet: Vec<FqVector>,
}

impl PrivacyKeyRunner {
    pub fn new(library: Library) -> Self {
        let params = *library.params();
        PrivacyKeyRunner {
            library,
            demand_alphabet: params.demand_alphabet(),
            key_alphabet: params.key_alphabet(),
        }
    }

    pub fn library(&self) -> &Library {
        &self.library
    }

    pub fn demand_vector(&self, index: usize) -> &FqVector {
        &self.demand_alphabet[index]
    }

    fn keys_for(&self, p_index: u64) -> Vec<FqVector> {
        let k = self.library.params().k_users();
        let base = self.key_alphabet.len() as u64;
        let mut idx = p_index;
        (0..k)
            .map(|_| {
                let d = (idx % base) as usize;
                idx /= base;
                self.key_alphabet[d].clone()
            })
            .collect()
    }
}

impl SchemeRunner for PrivacyKeyRunner {
    fn num_users(&self) -> usize {
        self.library.params().k_users()
    }

    fn p_space_len(&self) -> u64 {
        (self.key_alphabet.len() as u64)
            .checked_pow(self.library.params().k_users() as u32)
            .expect("key space too large to enumerate")
    }

    fn demand_count(&self) -> usize {
        self.demand_alphabet.len()
    }

    fn run(&self, p_index: u64, demands: &[usize]) -> RunOutput {
        let keys = self.keys_for(p_index);
        let placement = place(&self.library, keys).expect("valid placement");
        let demand_vecs: Vec<FqVector> = demands
            .iter()
            .map(|&d| self.demand_alphabet[d].clone())
            .collect();
        let signal = deliver(&placement, &demand_vecs, &self.library).expect("valid delivery");
        RunOutput {
            signal: encode_signal(&signal),
            caches: placement.caches.iter().map(encode_cache).collect(),
        }
    }
}

fn encode_signal(signal: &DeliverySignal) -> Vec<u8> {
    let mut enc = Vec::new();
    enc.push(signal.leaders.len() as u8);
    for &l in &signal.leaders {
        enc.push(l as u8);
    }
    for q in &signal.queries {
        for &v in q.as_raw() {
            enc.extend_from_slice(&(v as u16).to_le_bytes());
        }
    }
    for p in &signal.payload {
        enc.extend_from_slice(&(p.rank as u16).to_le_bytes());
        for &v in &p.symbols {
            enc.extend_from_slice(&(v as u16).to_le_bytes());
        }
    }
    enc
}

fn encode_cache(cache: &UserCache) -> Vec<u8> {
    // The cache is the packets themselves (uncoded then keyed, canonical
    // order); the key coefficient vector is not part of the cache contents.
    let mut enc = Vec::new();
    enc.push(cache.user() as u8);
    for v in cache.symbols() {
        enc.extend_from_slice(&(v as u16).to_le_bytes());
    }
    enc
}

/// Audit adapter for the index-shuffle baseline.
pub struct Example1Runner {
    params: Example1Params,
    files: Vec<Vec<u32>>,
    space: Example1PSpace,
}

impl Example1Runner {
    pub fn new(params: Example1Params, files: Vec<Vec<u32>>) -> Self {
        Example1Runner {
            params,
            files,
            space: Example1PSpace::new(params),
        }
    }
}

impl SchemeRunner for Example1Runner {
    fn num_users(&self) -> usize {
        self.params.k_users()
    }

    fn p_space_len(&self) -> u64 {
        self.space.len()
    }

    fn demand_count(&self) -> usize {
        self.params.n_files()
    }

    fn run(&self, p_index: u64, demands: &[usize]) -> RunOutput {
        let rnd = self.space.get(p_index);
        let run = example1_run(&self.params, &rnd, &self.files, demands).expect("valid run");
        let mut signal = Vec::new();
        for &q in &run.queries {
            signal.push(q as u8);
        }
        for slot in &run.slots {
            for &v in slot {
                signal.push(v as u8);
            }
        }
        let caches = run
            .caches
            .iter()
            .map(|c| {
                let mut enc = Vec::new();
                enc.push(c.key as u8);
                for part in &c.cached_parts {
                    for &v in part {
                        enc.push(v as u8);
                    }
                }
                enc
            })
            .collect();
        RunOutput { signal, caches }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rat(n: i64, d: i64) -> BigRational {
        BigRational::new(BigInt::from(n), BigInt::from(d))
    }

    #[test]
    fn mi_of_independent_uniform_pair_is_zero() {
        let joint = vec![
            vec![rat(1, 4), rat(1, 4)],
            vec![rat(1, 4), rat(1, 4)],
        ];
        assert!(mutual_information(&joint).unwrap().is_exactly_zero());
    }

    #[test]
    fn mi_of_identical_binary_variables_is_one_bit() {
        let joint = vec![
            vec![rat(1, 2), rat(0, 1)],
            vec![rat(0, 1), rat(1, 2)],
        ];
        let mi = mutual_information(&joint).unwrap();
        assert!((mi.bits() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn mi_rejects_unnormalized() {
        let joint = vec![vec![rat(1, 2), rat(1, 4)]];
        assert_eq!(
            mutual_information(&joint),
            Err(AuditError::Unnormalized)
        );
    }

    #[test]
    fn mi_detects_near_uniform_dependence_exactly() {
        // A joint law that is extremely close to, but not exactly, a product
        // law must not be reported as exactly zero.
        let eps = rat(1, 1_000_000_000_000);
        let q = rat(1, 4);
        let joint = vec![
            vec![&q + &eps, &q - &eps],
            vec![&q - &eps, &q + &eps],
        ];
        let mi = mutual_information(&joint).unwrap();
        assert!(!mi.is_exactly_zero());
    }

    #[test]
    fn tuple_iteration_covers_radix_space() {
        let mut t = vec![0usize; 3];
        let mut count = 1;
        while next_tuple(&mut t, 3) {
            count += 1;
        }
        assert_eq!(count, 27);
    }

    use crate::scheme::{split_library, SystemParams, Variant};

    fn privacy_key_runner(
        n: usize,
        k: usize,
        t: usize,
        q: u32,
        variant: Variant,
        files: Vec<Vec<u32>>,
    ) -> PrivacyKeyRunner {
        let b = files[0].len();
        let params = SystemParams::new(n, k, t, q, b, variant).unwrap();
        PrivacyKeyRunner::new(split_library(files, &params).unwrap())
    }

    #[test]
    fn privacy_key_sfr_passes_every_colluder_set() {
        let f_t = 2; // C(2,1)
        for files in audit_file_realizations(2, f_t, 2) {
            let runner = privacy_key_runner(2, 2, 1, 2, Variant::Sfr, files);
            let report = audit_privacy(&runner, &AuditConfig::default()).unwrap();
            assert_eq!(report.verdict, Verdict::Pass);
            assert!(report.witness.is_none());
            assert_eq!(report.per_set.len(), 4);
            for set in &report.per_set {
                assert!(set.tv_max.is_zero());
                assert_eq!(set.mi_bits, 0.0);
            }
        }
    }

    #[test]
    fn privacy_key_lfr_passes_every_colluder_set() {
        for files in audit_file_realizations(2, 1, 2) {
            let runner = privacy_key_runner(2, 2, 0, 2, Variant::Lfr, files);
            let report = audit_privacy(&runner, &AuditConfig::default()).unwrap();
            assert_eq!(report.verdict, Verdict::Pass);
        }
    }

    fn leaky_runner() -> Example1Runner {
        let params = Example1Params::new(3, 2, &rat(0, 1), 1).unwrap();
        // a fixed non-degenerate realization: file contents distinguish the
        // broadcast slots
        Example1Runner::new(params, vec![vec![0], vec![1], vec![0]])
    }

    #[test]
    fn example1_fails_with_nonzero_witness() {
        let report = audit_privacy(&leaky_runner(), &AuditConfig::default()).unwrap();
        assert_eq!(report.verdict, Verdict::Fail);
        let witness = report.witness.expect("failing audit carries a witness");
        assert!(witness.tv > BigRational::zero());
        // the empty colluder set alone already leaks (the signal depends on
        // the demands for fixed files)
        let empty = report
            .per_set
            .iter()
            .find(|s| s.colluders.is_empty())
            .unwrap();
        assert!(!empty.tv_max.is_zero());
        assert!(empty.mi_bits > 0.0);
    }

    /// Rebuilds the conditional histogram for one assignment of the free
    /// users' demands, enumerating colluder demands and the randomness.
    fn conditional_hist(
        runner: &impl SchemeRunner,
        colluders: Subset,
        free_users: &[usize],
        assignment: &[usize],
    ) -> BTreeMap<Vec<u8>, u64> {
        let k = runner.num_users();
        let dcount = runner.demand_count();
        let colluder_users: Vec<usize> = colluders.members().collect();
        let mut hist = BTreeMap::new();
        let mut coll_demands = vec![0usize; colluder_users.len()];
        loop {
            let mut demands = vec![0usize; k];
            for (u, d) in free_users.iter().zip(assignment) {
                demands[*u] = *d;
            }
            for (u, d) in colluder_users.iter().zip(&coll_demands) {
                demands[*u] = *d;
            }
            for p in 0..runner.p_space_len() {
                let out = runner.run(p, &demands);
                *hist
                    .entry(encode_observables(&out, &demands, colluders))
                    .or_insert(0u64) += 1;
            }
            if coll_demands.is_empty() || !next_tuple(&mut coll_demands, dcount) {
                break;
            }
        }
        hist
    }

    #[test]
    fn example1_witness_is_reproducible() {
        let runner = leaky_runner();
        let report = audit_privacy(&runner, &AuditConfig::default()).unwrap();
        let w = report.witness.unwrap();
        let ha = conditional_hist(&runner, w.colluders, &w.free_users, &w.demands_a);
        let hb = conditional_hist(&runner, w.colluders, &w.free_users, &w.demands_b);
        let total: u64 = ha.values().sum();
        assert_eq!(total, hb.values().sum::<u64>());
        assert_eq!(total_variation(&ha, &hb, total), w.tv);
    }

    #[test]
    fn audit_is_deterministic() {
        let runner = leaky_runner();
        let a = audit_privacy(&runner, &AuditConfig::default()).unwrap();
        let b = audit_privacy(&runner, &AuditConfig::default()).unwrap();
        assert_eq!(a.verdict, b.verdict);
        let (wa, wb) = (a.witness.unwrap(), b.witness.unwrap());
        assert_eq!(wa.colluders, wb.colluders);
        assert_eq!(wa.demands_a, wb.demands_a);
        assert_eq!(wa.demands_b, wb.demands_b);
        assert_eq!(wa.tv, wb.tv);
    }

    #[test]
    fn budget_guard_rejects_large_enumerations() {
        let runner = leaky_runner();
        let config = AuditConfig {
            colluder_sets: None,
            budget: 10,
        };
        assert!(matches!(
            audit_privacy(&runner, &config),
            Err(AuditError::AuditTooLarge(_))
        ));
    }

    #[test]
    fn single_colluder_set_restriction() {
        let runner = leaky_runner();
        let config = AuditConfig {
            colluder_sets: Some(vec![Subset::from_members(&[1])]),
            budget: DEFAULT_AUDIT_BUDGET,
        };
        let report = audit_privacy(&runner, &config).unwrap();
        assert_eq!(report.per_set.len(), 1);
        assert_eq!(
            report.per_set[0].colluders,
            Subset::from_members(&[1])
        );
    }
}
