//! Analytical tradeoff curves and bounds.
//!
//! Corner points and convex hulls are exact rationals so that hull decisions
//! never flip on rounding; floating point appears only in grid sweeps and
//! the gap-ratio certification, which carry explicit tolerances.
//!
//! The lower bound used by the gap sweep is the pointwise maximum of every
//! bound valid under the colluding-user privacy condition: the converse for
//! SFR demands, the cut-set bound, and the non-private optimal loads scaled
//! by their uncoded-placement gap constant (2 when `N >= K(K+1)/2`, else
//! 2.00884). Any point where every lower bound vanishes (only `M = N`) is
//! skipped, since the gap statements exclude zero optimal load.

use alloc::vec::Vec;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use thiserror::Error;

use crate::baselines;
use crate::combin::binom;
use crate::scheme::Variant;

#[derive(Debug, Error, Clone, Copy, PartialEq, Eq)]
pub enum BoundsError {
    #[error("no corner points")]
    Empty,
    #[error("evaluation point outside the curve's memory range")]
    OutOfRange,
}

/// Ratio tolerance for the gap certification: a sweep point passes when its
/// ratio does not exceed the regime constant by more than this.
pub const GAP_TOLERANCE: f64 = 1e-6;

fn rat(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

fn int(n: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(n))
}

/// A memory-load tradeoff curve: achievable corner points closed under
/// memory sharing, i.e. their lower convex envelope.
#[derive(Debug, Clone)]
pub struct TradeoffCurve {
    hull: Vec<(BigRational, BigRational)>,
    hull_f64: Vec<(f64, f64)>,
}

impl TradeoffCurve {
    /// Builds the lower convex envelope of `points` by monotone chain on
    /// exact rationals. Points sharing a memory value keep the lowest load.
    pub fn from_points(mut points: Vec<(BigRational, BigRational)>) -> Result<Self, BoundsError> {
        if points.is_empty() {
            return Err(BoundsError::Empty);
        }
        points.sort();
        points.dedup_by(|b, a| {
            if a.0 == b.0 {
                // sorted ascending, so `a` already has the smaller load
                true
            } else {
                false
            }
        });
        let mut hull: Vec<(BigRational, BigRational)> = Vec::new();
        for p in points {
            while hull.len() >= 2 {
                let a = &hull[hull.len() - 2];
                let b = &hull[hull.len() - 1];
                // keep only strict left turns
                let cross = (&b.0 - &a.0) * (&p.1 - &a.1) - (&b.1 - &a.1) * (&p.0 - &a.0);
                if cross <= BigRational::zero() {
                    hull.pop();
                } else {
                    break;
                }
            }
            hull.push(p);
        }
        let hull_f64 = hull
            .iter()
            .map(|(m, r)| {
                (
                    m.to_f64().expect("hull corner fits f64"),
                    r.to_f64().expect("hull corner fits f64"),
                )
            })
            .collect();
        Ok(TradeoffCurve { hull, hull_f64 })
    }

    pub fn hull(&self) -> &[(BigRational, BigRational)] {
        &self.hull
    }

    pub fn min_m(&self) -> &BigRational {
        &self.hull[0].0
    }

    pub fn max_m(&self) -> &BigRational {
        &self.hull[self.hull.len() - 1].0
    }

    /// Exact envelope value at `m`.
    pub fn eval(&self, m: &BigRational) -> Result<BigRational, BoundsError> {
        if m < self.min_m() || m > self.max_m() {
            return Err(BoundsError::OutOfRange);
        }
        let i = match self.hull.binary_search_by(|(hm, _)| hm.cmp(m)) {
            Ok(i) => return Ok(self.hull[i].1.clone()),
            Err(i) => i - 1,
        };
        let (m0, r0) = &self.hull[i];
        let (m1, r1) = &self.hull[i + 1];
        Ok(r0 + (r1 - r0) * (m - m0) / (m1 - m0))
    }

    /// Envelope value at `m` in floating point (for grid sweeps).
    pub fn eval_f64(&self, m: f64) -> Result<f64, BoundsError> {
        let lo = self.hull_f64[0].0;
        let hi = self.hull_f64[self.hull_f64.len() - 1].0;
        if !(lo..=hi).contains(&m) {
            return Err(BoundsError::OutOfRange);
        }
        if self.hull_f64.len() == 1 {
            return Ok(self.hull_f64[0].1);
        }
        let i = self
            .hull_f64
            .partition_point(|&(hm, _)| hm <= m)
            .saturating_sub(1)
            .min(self.hull_f64.len() - 2);
        let (m0, r0) = self.hull_f64[i];
        let (m1, r1) = self.hull_f64[i + 1];
        if m1 == m0 {
            return Ok(r0);
        }
        Ok(r0 + (r1 - r0) * (m - m0) / (m1 - m0))
    }
}

/// Cache size of the privacy-key corner `t`: `M_t = 1 + t(N-1)/K`.
pub fn corner_memory(n: usize, k: usize, t: usize) -> BigRational {
    rat((k + t * (n - 1)) as i64, k as i64)
}

/// Load of the privacy-key corner `t`: `R_t` for SFR (a function of
/// `min{N-1,K}`), `R_t'` for LFR (`min{N,K}`).
pub fn corner_load(n: usize, k: usize, t: usize, variant: Variant) -> BigRational {
    let reach = match variant {
        Variant::Sfr => (n - 1).min(k),
        Variant::Lfr => n.min(k),
    };
    let (k64, t64) = (k as u64, t as u64);
    BigRational::new(
        BigInt::from(binom(k64, t64 + 1) - binom(k64 - reach as u64, t64 + 1)),
        BigInt::from(binom(k64, t64)),
    )
}

/// The achievable corner points `{(0, N)} ∪ {(M_t, R_t) : t in [0, K]}`.
pub fn privacy_key_corners(n: usize, k: usize, variant: Variant) -> Vec<(BigRational, BigRational)> {
    assert!(n >= 2 && k >= 2);
    let mut pts = Vec::with_capacity(k + 2);
    pts.push((int(0), int(n as i64)));
    for t in 0..=k {
        pts.push((corner_memory(n, k, t), corner_load(n, k, t, variant)));
    }
    pts
}

pub fn privacy_key_curve(n: usize, k: usize, variant: Variant) -> TradeoffCurve {
    TradeoffCurve::from_points(privacy_key_corners(n, k, variant)).expect("nonempty corners")
}

/// Envelope of the non-private corner points (the optimal centralized load
/// under uncoded placement, without privacy).
pub fn nonprivate_curve(n: usize, k: usize) -> TradeoffCurve {
    TradeoffCurve::from_points(
        baselines::nonprivate_points(n, k)
            .into_iter()
            .map(|p| (p.m, p.r))
            .collect(),
    )
    .expect("nonempty corners")
}

/// Envelope of the virtual-user corner points.
pub fn virtual_user_curve(n: usize, k: usize) -> TradeoffCurve {
    TradeoffCurve::from_points(
        baselines::virtual_user_points(n, k)
            .into_iter()
            .map(|p| (p.m, p.r))
            .collect(),
    )
    .expect("nonempty corners")
}

/// The converse bound on the optimal SFR load:
/// `max_l { l + min(l+1,K)(N-l)/(N-l+min(l+1,K)) - l*M }`, floored at 0.
pub fn converse_sfr(m: f64, n: usize, k: usize) -> f64 {
    let mut best = 0.0f64;
    for l in 1..=n {
        let reach = (l + 1).min(k) as f64;
        let rem = (n - l) as f64;
        let v = l as f64 + reach * rem / (rem + reach) - l as f64 * m;
        if v > best {
            best = v;
        }
    }
    best
}

/// Exact-rational form of [`converse_sfr`].
pub fn converse_sfr_exact(m: &BigRational, n: usize, k: usize) -> BigRational {
    let mut best = BigRational::zero();
    for l in 1..=n {
        let reach = int((l + 1).min(k) as i64);
        let rem = int((n - l) as i64);
        let v = int(l as i64) + &reach * &rem / (&rem + &reach) - int(l as i64) * m;
        if v > best {
            best = v;
        }
    }
    best
}

/// The single-user cut-set bound `R >= 1 - M/N`, floored at 0.
pub fn cutset_bound(m: f64, n: usize, _k: usize) -> f64 {
    (1.0 - m / n as f64).max(0.0)
}

pub fn cutset_bound_exact(m: &BigRational, n: usize) -> BigRational {
    let v = BigRational::one() - m / int(n as i64);
    if v.is_negative() {
        BigRational::zero()
    } else {
        v
    }
}

/// Optimal centralized non-private load under uncoded placement, `r_C`.
pub fn r_c(m: f64, n: usize, k: usize) -> Result<f64, BoundsError> {
    nonprivate_curve(n, k).eval_f64(m)
}

/// Optimal decentralized non-private load under uncoded placement,
/// `r_D(M) = ((N-M)/M)(1 - (1-M/N)^min(N,K))`, extended by continuity to
/// `min(N,K)` at `M = 0`.
pub fn r_d(m: f64, n: usize, k: usize) -> Result<f64, BoundsError> {
    let nf = n as f64;
    if !(0.0..=nf).contains(&m) {
        return Err(BoundsError::OutOfRange);
    }
    let reach = n.min(k) as u32;
    if m == 0.0 {
        return Ok(f64::from(reach));
    }
    Ok((nf - m) / m * (1.0 - powi(1.0 - m / nf, reach)))
}

/// Exact-rational form of [`r_d`].
pub fn r_d_exact(m: &BigRational, n: usize, k: usize) -> Result<BigRational, BoundsError> {
    let nr = int(n as i64);
    if m.is_negative() || m > &nr {
        return Err(BoundsError::OutOfRange);
    }
    let reach = n.min(k);
    if m.is_zero() {
        return Ok(int(reach as i64));
    }
    let base = BigRational::one() - m / &nr;
    let mut pow = BigRational::one();
    for _ in 0..reach {
        pow *= &base;
    }
    Ok((&nr - m) / m * (BigRational::one() - pow))
}

fn powi(base: f64, exp: u32) -> f64 {
    let mut acc = 1.0;
    for _ in 0..exp {
        acc *= base;
    }
    acc
}

/// One regime of the constant-gap certification.
#[derive(Debug, Clone)]
pub struct GapRegime {
    pub label: &'static str,
    /// Memory range `[m_lo, m_hi]` the regime covers.
    pub m_lo: f64,
    pub m_hi: f64,
    /// The constant the ratio is certified against.
    pub bound: f64,
    pub max_ratio: f64,
    pub argmax_m: f64,
    /// Grid points evaluated (points where every lower bound vanishes are
    /// skipped and not counted).
    pub points: usize,
    pub pass: bool,
}

#[derive(Debug, Clone)]
pub struct GapReport {
    pub n: usize,
    pub k: usize,
    pub variant: Variant,
    pub grid_step: f64,
    pub regimes: Vec<GapRegime>,
    pub overall_max: f64,
    pub pass: bool,
}

/// Sweeps the achievable envelope against the composed lower bound over an
/// `M`-grid and certifies the per-regime gap constants. Regime constants for
/// SFR: 2 / 2 / 4 / 4 / 4.0177 / 5.4606; the last (N <= K, M >= 1) regime is
/// 6.3707 for LFR.
pub fn gap_report(n: usize, k: usize, variant: Variant, grid_step: f64) -> GapReport {
    assert!(n >= 2 && k >= 2 && grid_step > 0.0);
    let achievable = privacy_key_curve(n, k, variant);
    let np = nonprivate_curve(n, k);
    let chain = if n >= k * (k + 1) / 2 { 2.0 } else { 2.00884 };
    let nf = n as f64;

    let mut regimes: Vec<GapRegime> = Vec::new();
    let mut push = |label, m_lo: f64, m_hi: f64, bound: f64| {
        regimes.push(GapRegime {
            label,
            m_lo,
            m_hi,
            bound,
            max_ratio: 0.0,
            argmax_m: 0.0,
            points: 0,
            pass: true,
        });
    };
    if n >= 2 * k {
        push("0 <= M <= 1, N >= 2K", 0.0, 1.0, 2.0);
    } else {
        push("0 <= M <= 1/2, N < 2K", 0.0, 0.5, 2.0);
        push("1/2 <= M <= 1, N < 2K", 0.5, 1.0, 4.0);
    }
    if n <= k {
        let bound = match variant {
            Variant::Sfr => 5.4606,
            Variant::Lfr => 6.3707,
        };
        push("1 <= M <= N, N <= K", 1.0, nf, bound);
    } else if n >= k * (k + 1) / 2 {
        push("1 <= M <= N, N >= K(K+1)/2", 1.0, nf, 4.0);
    } else {
        push("1 <= M <= N, K < N < K(K+1)/2", 1.0, nf, 4.0177);
    }

    let steps = libm::round(nf / grid_step) as usize;
    let mut overall_max = 0.0f64;
    for i in 0..=steps {
        let m = (i as f64 * grid_step).min(nf);
        let mut lb = converse_sfr(m, n, k).max(cutset_bound(m, n, k));
        if let Ok(v) = np.eval_f64(m) {
            lb = lb.max(v / chain);
        }
        if let Ok(v) = r_d(m, n, k) {
            lb = lb.max(v / chain);
        }
        if lb <= 0.0 {
            continue;
        }
        let ach = achievable.eval_f64(m).expect("grid point in range");
        let ratio = ach / lb;
        overall_max = overall_max.max(ratio);
        for reg in regimes.iter_mut() {
            if m >= reg.m_lo && m <= reg.m_hi {
                reg.points += 1;
                if ratio > reg.max_ratio {
                    reg.max_ratio = ratio;
                    reg.argmax_m = m;
                }
            }
        }
    }
    for reg in regimes.iter_mut() {
        reg.pass = reg.max_ratio <= reg.bound + GAP_TOLERANCE;
    }
    let pass = regimes.iter().all(|r| r.pass);
    GapReport {
        n,
        k,
        variant,
        grid_step,
        regimes,
        overall_max,
        pass,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn sfr_corner_matches_worked_example() {
        // (N,K) = (3,2), t = 1: (M, R) = (2, 1/2)
        assert_eq!(corner_memory(3, 2, 1), int(2));
        assert_eq!(corner_load(3, 2, 1, Variant::Sfr), rat(1, 2));
    }

    #[test]
    fn corner_t_equals_k_is_zero_load() {
        for (n, k) in [(2usize, 2usize), (3, 2), (2, 3), (5, 4)] {
            assert_eq!(corner_memory(n, k, k), int(n as i64));
            assert!(corner_load(n, k, k, Variant::Sfr).is_zero());
            assert!(corner_load(n, k, k, Variant::Lfr).is_zero());
        }
    }

    #[test]
    fn sfr_corner_n2_k3() {
        // t = 1 gives (4/3, 2/3)
        assert_eq!(corner_memory(2, 3, 1), rat(4, 3));
        assert_eq!(corner_load(2, 3, 1, Variant::Sfr), rat(2, 3));
    }

    #[test]
    fn envelope_of_worked_example_at_m1() {
        // (N,K) = (3,2) SFR envelope is 3 - (5/4)M on [0, 2]
        let curve = privacy_key_curve(3, 2, Variant::Sfr);
        assert_eq!(curve.eval(&int(1)).unwrap(), rat(7, 4));
        assert_eq!(curve.eval(&int(0)).unwrap(), int(3));
        assert_eq!(curve.eval(&int(2)).unwrap(), rat(1, 2));
        // midpoint of two adjacent hull corners is the mean of their loads
        let hull = curve.hull();
        for w in hull.windows(2) {
            let mid = (&w[0].0 + &w[1].0) / int(2);
            let mean = (&w[0].1 + &w[1].1) / int(2);
            assert_eq!(curve.eval(&mid).unwrap(), mean);
        }
    }

    #[test]
    fn envelope_rejects_out_of_range() {
        let curve = privacy_key_curve(3, 2, Variant::Sfr);
        assert_eq!(curve.eval(&rat(-1, 2)), Err(BoundsError::OutOfRange));
        assert_eq!(curve.eval(&int(4)), Err(BoundsError::OutOfRange));
    }

    #[test]
    fn hull_is_convex_and_nonincreasing() {
        for (n, k) in [(2usize, 2usize), (3, 2), (10, 30), (30, 10), (12, 12)] {
            for variant in [Variant::Sfr, Variant::Lfr] {
                let curve = privacy_key_curve(n, k, variant);
                let hull = curve.hull();
                for w in hull.windows(2) {
                    assert!(w[0].1 >= w[1].1);
                }
                for w in hull.windows(3) {
                    let s01 = (&w[1].1 - &w[0].1) / (&w[1].0 - &w[0].0);
                    let s12 = (&w[2].1 - &w[1].1) / (&w[2].0 - &w[1].0);
                    assert!(s01 < s12, "slopes must strictly increase along the hull");
                }
            }
        }
    }

    #[test]
    fn converse_values() {
        // M = 0 forces R >= N
        assert_eq!(converse_sfr(0.0, 3, 2), 3.0);
        assert_eq!(converse_sfr_exact(&int(0), 3, 2), int(3));
        // N=3, K=2, M=1: max over l of {1, 2/3, 0} = 1
        assert_eq!(converse_sfr_exact(&int(1), 3, 2), int(1));
        // M = N floors to 0
        assert_eq!(converse_sfr(3.0, 3, 2), 0.0);
    }

    #[test]
    fn cutset_values() {
        assert_eq!(cutset_bound(0.0, 3, 2), 1.0);
        assert_eq!(cutset_bound(3.0, 3, 2), 0.0);
        assert!((cutset_bound(1.0, 3, 2) - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn r_d_values() {
        // M = N gives 0
        assert_eq!(r_d(2.0, 2, 2).unwrap(), 0.0);
        // continuity value at M = 0
        assert_eq!(r_d(0.0, 5, 3).unwrap(), 3.0);
        // N=2, K=2, M=1: (1/1)(1 - (1/2)^2) = 3/4
        assert!((r_d(1.0, 2, 2).unwrap() - 0.75).abs() < 1e-15);
    }

    #[test]
    fn r_c_at_zero_is_min_nk() {
        assert!((r_c(0.0, 10, 30).unwrap() - 10.0).abs() < 1e-12);
        assert!((r_c(0.0, 30, 10).unwrap() - 10.0).abs() < 1e-12);
    }

    #[test]
    fn curve_from_points_drops_dominated_corners() {
        // (1, 2) lies above the segment (0,2)-(2,0) and must not be a hull
        // corner, while collinear or dominated points never raise the value.
        let pts = vec![(int(0), int(2)), (int(1), int(2)), (int(2), int(0))];
        let curve = TradeoffCurve::from_points(pts).unwrap();
        assert_eq!(curve.hull().len(), 2);
        assert_eq!(curve.eval(&int(1)).unwrap(), int(1));
    }

    #[test]
    fn gap_ratio_is_one_at_zero_memory() {
        // achievable and converse both equal N at M = 0
        for (n, k) in [(2usize, 2usize), (5, 3), (3, 7), (12, 12)] {
            for variant in [Variant::Sfr, Variant::Lfr] {
                let ach = privacy_key_curve(n, k, variant).eval_f64(0.0).unwrap();
                let lb = converse_sfr(0.0, n, k)
                    .max(cutset_bound(0.0, n, k))
                    .max(r_c(0.0, n, k).unwrap() / 2.00884)
                    .max(r_d(0.0, n, k).unwrap() / 2.00884);
                assert_eq!(ach / lb, 1.0);
            }
        }
    }

    #[test]
    fn gap_report_worked_example_regime() {
        // (N,K) = (3,2): on [1, 2] the ratio stays within 21/8
        let report = gap_report(3, 2, Variant::Sfr, 0.01);
        assert!(report.pass);
        let mut max_ratio_mid: f64 = 0.0;
        let curve = privacy_key_curve(3, 2, Variant::Sfr);
        for i in 100..=200 {
            let m = i as f64 * 0.01;
            let lb = converse_sfr(m, 3, 2).max(cutset_bound(m, 3, 2));
            let ratio = curve.eval_f64(m).unwrap() / lb;
            max_ratio_mid = max_ratio_mid.max(ratio);
        }
        assert!(max_ratio_mid <= 21.0 / 8.0 + GAP_TOLERANCE);
    }
}
