//! Property tests for the library's standing invariants: elimination-based
//! routines, query structure, cache accounting, and envelope ordering.

use num_bigint::BigInt;
use num_rational::BigRational;
use proptest::prelude::*;
use rand_chacha::ChaCha12Rng;
use rand_core::SeedableRng;

use privcache_core::bounds::{corner_load, privacy_key_curve};
use privcache_core::combin::binom_u64;
use privcache_core::gf::Fq;
use privcache_core::linalg::{leader_set, rank, solve, FqMatrix, FqVector};
use privcache_core::scheme::{
    sample_keys, simulate, uniform_residue, Library, SystemParams, Variant,
};

fn arb_field() -> impl Strategy<Value = u32> {
    prop_oneof![Just(2u32), Just(3), Just(5)]
}

fn arb_rows() -> impl Strategy<Value = (u32, Vec<Vec<u32>>)> {
    (arb_field(), 1usize..=5, 1usize..=5).prop_flat_map(|(q, rows, cols)| {
        (
            Just(q),
            proptest::collection::vec(proptest::collection::vec(0..q, cols), rows),
        )
    })
}

fn to_vectors(q: u32, rows: &[Vec<u32>]) -> Vec<FqVector> {
    let field = Fq::new(q).unwrap();
    rows.iter()
        .map(|r| FqVector::new(field, r.clone()).unwrap())
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    #[test]
    fn rank_invariant_under_permutation_and_scaling(
        ((q, rows), seed) in (arb_rows(), any::<u64>())
    ) {
        let vectors = to_vectors(q, &rows);
        let base = rank(&vectors).unwrap();
        // permute rows and scale each by a nonzero element
        let field = Fq::new(q).unwrap();
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        let mut order: Vec<usize> = (0..rows.len()).collect();
        for i in (1..order.len()).rev() {
            let j = uniform_residue(&mut rng, (i + 1) as u32) as usize;
            order.swap(i, j);
        }
        let transformed: Vec<FqVector> = order
            .iter()
            .map(|&i| {
                let scale = field.el(u64::from(1 + uniform_residue(&mut rng, q - 1)));
                vectors[i].scaled(scale)
            })
            .collect();
        prop_assert_eq!(rank(&transformed).unwrap(), base);
    }

    #[test]
    fn leader_set_is_maximal_independent((q, rows) in arb_rows()) {
        let vectors = to_vectors(q, &rows);
        let leaders = leader_set(&vectors).unwrap();
        let total = rank(&vectors).unwrap();
        prop_assert_eq!(leaders.len(), total);
        if !leaders.is_empty() {
            let chosen: Vec<FqVector> =
                leaders.iter().map(|&i| vectors[i].clone()).collect();
            prop_assert_eq!(rank(&chosen).unwrap(), total);
        }
    }

    #[test]
    fn solve_returns_exact_solutions(
        ((q, rows), x_seed) in (arb_rows(), any::<u64>())
    ) {
        let field = Fq::new(q).unwrap();
        let vectors = to_vectors(q, &rows);
        let a = FqMatrix::from_rows(&vectors).unwrap();
        // build a consistent rhs from a random solution
        let mut rng = ChaCha12Rng::seed_from_u64(x_seed);
        let x = FqVector::new(
            field,
            (0..a.ncols()).map(|_| uniform_residue(&mut rng, q)).collect(),
        )
        .unwrap();
        let b = a.mul_vector(&x).unwrap();
        let y = solve(&a, &b).unwrap().expect("consistent system");
        prop_assert_eq!(a.mul_vector(&y).unwrap(), b);
    }

    #[test]
    fn no_solution_means_inconsistent(
        ((q, rows), b_vals) in arb_rows().prop_flat_map(|(q, rows)| {
            let len = rows.len();
            ((Just(q), Just(rows)), proptest::collection::vec(0..q, len))
        })
    ) {
        let field = Fq::new(q).unwrap();
        let vectors = to_vectors(q, &rows);
        let a = FqMatrix::from_rows(&vectors).unwrap();
        let b = FqVector::new(field, b_vals).unwrap();
        match solve(&a, &b).unwrap() {
            Some(x) => prop_assert_eq!(a.mul_vector(&x).unwrap(), b),
            None => {
                // the augmented system must have strictly larger rank
                let mut aug = Vec::new();
                for (i, v) in vectors.iter().enumerate() {
                    let mut vals = v.as_raw().to_vec();
                    vals.push(b.as_raw()[i]);
                    aug.push(FqVector::new(field, vals).unwrap());
                }
                prop_assert_eq!(rank(&aug).unwrap(), rank(&vectors).unwrap() + 1);
            }
        }
    }
}

fn arb_params() -> impl Strategy<Value = (SystemParams, u64)> {
    (2usize..=4, 2usize..=4)
        .prop_flat_map(|(n, k)| (Just(n), Just(k), 0..k, arb_field()))
        .prop_flat_map(|(n, k, t, q)| {
            let variant = prop_oneof![Just(Variant::Sfr), Just(Variant::Lfr)];
            (Just(n), Just(k), Just(t), Just(q), variant, 1usize..=2, any::<u64>())
        })
        .prop_map(|(n, k, t, q, variant, width, seed)| {
            let b = binom_u64(k as u64, t as u64) as usize * width;
            (SystemParams::new(n, k, t, q, b, variant).unwrap(), seed)
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    // One randomized end-to-end round per generated system: correctness,
    // query structure, rank cap, cache accounting and the load cap.
    #[test]
    fn randomized_round_trip((params, seed) in arb_params()) {
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        let library = Library::random(&params, &mut rng);
        let field = params.field();
        let q = field.modulus();
        let n = params.n_files();
        let demands: Vec<FqVector> = (0..params.k_users())
            .map(|_| match params.variant() {
                Variant::Sfr => FqVector::unit(
                    field,
                    n,
                    uniform_residue(&mut rng, n as u32) as usize,
                ),
                Variant::Lfr => FqVector::new(
                    field,
                    (0..n).map(|_| uniform_residue(&mut rng, q)).collect(),
                )
                .unwrap(),
            })
            .collect();
        let run = simulate(&library, &demands, &mut rng).unwrap();
        prop_assert!(run.decoded_ok);

        // cache occupancy is exactly M_t * B for every user
        let placement = privcache_core::scheme::place(&library, run.keys.clone()).unwrap();
        let m_b = params.memory_per_user()
            * BigRational::from_integer(BigInt::from(params.file_len()));
        for cache in &placement.caches {
            prop_assert_eq!(
                BigRational::from_integer(BigInt::from(cache.total_symbols())),
                m_b.clone()
            );
        }

        // query structure and the rank cap
        let reach = match params.variant() {
            Variant::Sfr => (n - 1).min(params.k_users()),
            Variant::Lfr => n.min(params.k_users()),
        };
        if params.variant() == Variant::Sfr {
            for qv in &run.signal.queries {
                prop_assert_eq!(qv.component_sum(), 0);
            }
        }
        prop_assert!(rank(&run.signal.queries).unwrap() <= reach);
        prop_assert_eq!(run.signal.leaders.len(), rank(&run.signal.queries).unwrap());

        // payload count is C(K,t+1) - C(K-|L|,t+1)
        let k = params.k_users() as u64;
        let t1 = params.t() as u64 + 1;
        let expected_count =
            binom_u64(k, t1) - binom_u64(k - run.signal.leaders.len() as u64, t1);
        prop_assert_eq!(run.signal.payload.len() as u64, expected_count);

        // any single run's load is capped by the corner formula
        let cap = corner_load(n, params.k_users(), params.t(), params.variant());
        prop_assert!(run.measured_load <= cap);
    }

    // SFR keys are never valid LFR giveaways: every sampled key lies on the
    // sum-(q-1) hyperplane, independent of N, K, q.
    #[test]
    fn sfr_keys_lie_on_the_hyperplane((params, seed) in arb_params()) {
        let params = SystemParams::new(
            params.n_files(),
            params.k_users(),
            params.t(),
            params.field().modulus(),
            params.file_len(),
            Variant::Sfr,
        ).unwrap();
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        for key in sample_keys(&params, &mut rng) {
            prop_assert_eq!(key.component_sum(), params.field().modulus() - 1);
        }
    }
}

/// Envelope ordering (LFR never below SFR, equal when N > K) over a
/// rational grid; deterministic, so a plain test.
#[test]
fn lfr_envelope_dominates_sfr_and_matches_for_many_files() {
    for n in 2..=8usize {
        for k in 2..=8usize {
            let rf = privacy_key_curve(n, k, Variant::Sfr);
            let rl = privacy_key_curve(n, k, Variant::Lfr);
            for i in 0..=(4 * n) {
                let m = BigRational::new(BigInt::from(i), BigInt::from(4));
                let f = rf.eval(&m).unwrap();
                let l = rl.eval(&m).unwrap();
                assert!(l >= f, "R_L < R_F at N={n} K={k} M={m}");
                if n > k {
                    assert_eq!(l, f, "envelopes must coincide for N > K at M={m}");
                }
            }
        }
    }
}

/// Corner-ratio cap from the LFR/SFR comparison: R_t'/R_t <= 1 + 1/(N-1)
/// wherever the loads can differ (t <= K - N, which requires N <= K).
#[test]
fn corner_load_ratio_is_bounded() {
    for n in 2..=8usize {
        for k in n..=10usize {
            let cap = BigRational::new(BigInt::from(n), BigInt::from(n - 1));
            for t in 0..=k.saturating_sub(n) {
                let sfr = corner_load(n, k, t, Variant::Sfr);
                let lfr = corner_load(n, k, t, Variant::Lfr);
                assert!(
                    &lfr / &sfr <= cap,
                    "ratio cap violated at N={n} K={k} t={t}"
                );
            }
        }
    }
}
