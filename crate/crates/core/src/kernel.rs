//! The random-matching kernel.
//!
//! For a uniform perfect matching of `m` labeled stubs with the first `k`
//! painted, `X(k, m)` counts the matched pairs crossing between the two
//! groups. The kernel g_β(k, m) = E[e^{−2βX(k,m)}] drives the annealed
//! partition function; its exponential growth rate is
//! F_β(t) = ∫₀^{t∧(1−t)} log f_β(u) du. This module computes all of them:
//! f_β and its inverse in closed form, F_β by adaptive Gauss–Kronrod
//! quadrature, and g_β exactly in log scale via the crossing-count
//! distribution.

use crate::error::{Error, Result};
use crate::numeric::LogSumExp;

/// Largest stub count accepted by the exact kernel combinatorics.
pub const M_CAP: usize = 4000;

/// f_β(u) for u ∈ [0, 1/2]; takes values in [e^{−2β}, 1].
pub fn f_beta(u: f64, beta: f64) -> Result<f64> {
    if !(0.0..=0.5).contains(&u) {
        return Err(Error::DomainError(format!(
            "f_beta argument must lie in [0, 1/2], got {u}"
        )));
    }
    Ok(f_beta_unchecked(u, beta))
}

#[inline]
fn f_beta_unchecked(u: f64, beta: f64) -> f64 {
    let c = (-2.0 * beta).exp();
    let v = 1.0 - 2.0 * u;
    (c * v + (1.0 + (c * c - 1.0) * v * v).sqrt()) / (2.0 * (1.0 - u))
}

/// Inverse of f_β on its range (e^{−2β}, 1].
pub fn f_beta_inverse(y: f64, beta: f64) -> Result<f64> {
    let c = (-2.0 * beta).exp();
    if y == 1.0 {
        // fixed endpoint f_β(1/2) = 1; the generic formula is 0/0 at β = 0
        return Ok(0.5);
    }
    if !(y > c && y < 1.0) {
        return Err(Error::DomainError(format!(
            "f_beta_inverse argument must lie in (e^(-2 beta), 1], got {y}"
        )));
    }
    Ok((y * y - c * y) / (1.0 + y * y - 2.0 * c * y))
}

/// F_β(t) = ∫₀^{t∧(1−t)} log f_β(u) du, evaluated by adaptive quadrature to
/// absolute tolerance 1e-13. Always ≤ 0, symmetric about t = 1/2.
pub fn big_f_beta(t: f64, beta: f64) -> f64 {
    debug_assert!((-1e-12..=1.0 + 1e-12).contains(&t), "t out of [0,1]: {t}");
    let upper = t.min(1.0 - t).clamp(0.0, 0.5);
    if upper <= 0.0 || beta == 0.0 {
        return 0.0;
    }
    integrate(|u| f_beta_unchecked(u, beta).ln(), 0.0, upper, 1e-13)
}

/// F_β'(t): log f_β(t) below 1/2, −log f_β(1−t) above. Bounded by 2β.
pub fn big_f_beta_prime(t: f64, beta: f64) -> f64 {
    debug_assert!((0.0..=1.0).contains(&t));
    if t <= 0.5 {
        f_beta_unchecked(t, beta).ln()
    } else {
        -f_beta_unchecked(1.0 - t, beta).ln()
    }
}

/// Distribution of the crossing count X(k, m) of a uniform perfect matching,
/// stored in log scale. Admissible counts share the parity of k and are at
/// most min(k, m−k).
#[derive(Debug, Clone)]
pub struct CrossingDistribution {
    m: usize,
    k: usize,
    counts: Vec<usize>,
    log_probs: Vec<f64>,
}

impl CrossingDistribution {
    pub(crate) fn from_parts(m: usize, k: usize, counts: Vec<usize>, log_probs: Vec<f64>) -> Self {
        debug_assert_eq!(counts.len(), log_probs.len());
        CrossingDistribution {
            m,
            k,
            counts,
            log_probs,
        }
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn k(&self) -> usize {
        self.k
    }

    /// Admissible crossing counts, ascending.
    pub fn counts(&self) -> &[usize] {
        &self.counts
    }

    pub fn log_probs(&self) -> &[f64] {
        &self.log_probs
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.counts
            .iter()
            .copied()
            .zip(self.log_probs.iter().copied())
    }

    pub fn prob(&self, j: usize) -> f64 {
        match self.counts.binary_search(&j) {
            Ok(i) => self.log_probs[i].exp(),
            Err(_) => 0.0,
        }
    }
}

/// Exact law of X(k, m):
/// P(X = j) = C(k,j) C(m−k,j) j! (k−j−1)!! (m−k−j−1)!! / (m−1)!!,
/// computed via log-gamma so m can reach [`M_CAP`].
pub fn crossing_distribution(k: usize, m: usize) -> Result<CrossingDistribution> {
    if !m.is_multiple_of(2) {
        return Err(Error::InvalidParameter(format!(
            "stub count must be even, got {m}"
        )));
    }
    if k > m {
        return Err(Error::InvalidParameter(format!(
            "group size {k} exceeds stub count {m}"
        )));
    }
    if m > M_CAP {
        return Err(Error::BudgetExceeded(format!(
            "stub count {m} exceeds the kernel cap {M_CAP}"
        )));
    }
    // X(k, m) and X(m−k, m) share one law; canonicalizing makes the
    // symmetry bit-exact (m is even, so the parity of j is unaffected)
    let kk = k.min(m - k);
    let log_total = log_double_factorial(m as i64 - 1);
    let mut counts = Vec::new();
    let mut log_probs = Vec::new();
    let mut j = kk % 2;
    while j <= kk {
        let lp = log_binomial(kk, j)
            + log_binomial(m - kk, j)
            + log_factorial(j)
            + log_double_factorial(kk as i64 - j as i64 - 1)
            + log_double_factorial((m - kk) as i64 - j as i64 - 1)
            - log_total;
        counts.push(j);
        log_probs.push(lp);
        j += 2;
    }
    Ok(CrossingDistribution::from_parts(m, k, counts, log_probs))
}

/// log g_β(k, m) = log E[e^{−2βX(k,m)}], accumulated with a max-shifted
/// log-sum. Lies in [−2β·min(k, m−k), 0].
pub fn log_g_beta(k: usize, m: usize, beta: f64) -> Result<f64> {
    let dist = crossing_distribution(k, m)?;
    Ok(log_g_of(&dist, beta))
}

pub(crate) fn log_g_of(dist: &CrossingDistribution, beta: f64) -> f64 {
    let mut lse = LogSumExp::new();
    for (j, lp) in dist.iter() {
        lse.add(lp - 2.0 * beta * j as f64);
    }
    lse.value().min(0.0)
}

/// F_β sampled on a 4097-point uniform grid over [0, 1/2] with cubic
/// interpolation, for hot loops that evaluate the rate thousands of times.
/// Reported values should use [`big_f_beta`] directly.
#[derive(Debug, Clone)]
pub struct BigFTable {
    beta: f64,
    values: Vec<f64>,
    step: f64,
}

const TABLE_CELLS: usize = 4096;

impl BigFTable {
    pub fn new(beta: f64) -> Self {
        let step = 0.5 / TABLE_CELLS as f64;
        let mut values = Vec::with_capacity(TABLE_CELLS + 1);
        values.push(0.0);
        let mut acc = 0.0;
        for i in 0..TABLE_CELLS {
            let a = i as f64 * step;
            let b = a + step;
            // one Gauss–Kronrod panel per cell is far below 1e-15 for this
            // smooth integrand; prefix sums give the cumulative integral
            let (panel, _err) = gk15(&|u: f64| f_beta_unchecked(u, beta).ln(), a, b);
            acc += panel;
            values.push(acc);
        }
        BigFTable { beta, values, step }
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    /// Interpolated F_β(t).
    pub fn eval(&self, t: f64) -> f64 {
        let folded = t.min(1.0 - t).clamp(0.0, 0.5);
        if self.beta == 0.0 {
            return 0.0;
        }
        let x = folded / self.step;
        let cell = (x as usize).min(TABLE_CELLS - 1);
        let s = x - cell as f64;
        let at = |i: isize| -> f64 {
            let idx = (cell as isize + i).clamp(0, TABLE_CELLS as isize);
            self.values[idx as usize]
        };
        let (p0, p1, p2, p3) = (at(-1), at(0), at(1), at(2));
        // Catmull-Rom between p1 and p2
        p1 + 0.5
            * s
            * (p2 - p0
                + s * (2.0 * p0 - 5.0 * p1 + 4.0 * p2 - p3 + s * (3.0 * (p1 - p2) + p3 - p0)))
    }
}

// ---------------------------------------------------------------------------
// log-gamma combinatorics

pub(crate) fn log_factorial(n: usize) -> f64 {
    libm::lgamma(n as f64 + 1.0)
}

pub(crate) fn log_binomial(n: usize, k: usize) -> f64 {
    debug_assert!(k <= n);
    log_factorial(n) - log_factorial(k) - log_factorial(n - k)
}

/// log n!! with the conventions (−1)!! = 0!! = 1.
pub(crate) fn log_double_factorial(n: i64) -> f64 {
    if n <= 0 {
        debug_assert!(n >= -1, "double factorial of {n}");
        return 0.0;
    }
    let n = n as usize;
    if n.is_multiple_of(2) {
        // (2a)!! = 2^a a!
        let a = (n / 2) as f64;
        a * std::f64::consts::LN_2 + libm::lgamma(a + 1.0)
    } else {
        // (2a−1)!! = (2a)! / (2^a a!)
        let a = n.div_ceil(2) as f64;
        libm::lgamma(2.0 * a + 1.0) - a * std::f64::consts::LN_2 - libm::lgamma(a + 1.0)
    }
}

// ---------------------------------------------------------------------------
// adaptive Gauss–Kronrod quadrature

#[allow(clippy::excessive_precision)] // verbatim 15-point Kronrod table
const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_838_258_730,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.000_000_000_000_000_000_000_000_000_000_000,
];
#[allow(clippy::excessive_precision)]
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];
#[allow(clippy::excessive_precision)]
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];

/// One 15-point Kronrod panel on [a, b]; returns (estimate, error estimate).
fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut resg = fc * WG[3];
    let mut resk = fc * WGK[7];
    for j in 0..7 {
        let dx = half * XGK[j];
        let fsum = f(center - dx) + f(center + dx);
        if j % 2 != 0 {
            resg += WG[j / 2] * fsum;
        }
        resk += WGK[j] * fsum;
    }
    (resk * half, ((resk - resg) * half).abs())
}

/// Adaptive bisection on the Kronrod error estimate until the absolute
/// tolerance is met.
pub(crate) fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, abs_tol: f64) -> f64 {
    fn recurse<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64, depth: u32) -> f64 {
        let (whole, err) = gk15(f, a, b);
        if err <= tol || depth >= 24 {
            return whole;
        }
        let mid = 0.5 * (a + b);
        recurse(f, a, mid, 0.5 * tol, depth + 1) + recurse(f, mid, b, 0.5 * tol, depth + 1)
    }
    if a == b {
        return 0.0;
    }
    recurse(&f, a, b, abs_tol, 0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn f_beta_endpoints() {
        for beta in [0.0, 0.3, 1.0, 2.5] {
            let c = (-2.0f64 * beta).exp();
            assert!((f_beta(0.0, beta).unwrap() - c).abs() < 1e-15);
            assert!((f_beta(0.5, beta).unwrap() - 1.0).abs() < 1e-15);
        }
        // β = 0 collapses f to the constant 1
        for u in [0.0, 0.1, 0.25, 0.4, 0.5] {
            assert!((f_beta(u, 0.0).unwrap() - 1.0).abs() < 1e-15);
        }
        assert!(f_beta(-0.01, 1.0).is_err());
        assert!(f_beta(0.51, 1.0).is_err());
    }

    #[test]
    fn f_beta_inverse_round_trip() {
        assert!((f_beta_inverse(1.0, 0.7).unwrap() - 0.5).abs() < 1e-15);
        assert!((f_beta_inverse(1.0, 0.0).unwrap() - 0.5).abs() < 1e-15);

        let beta = 1.0;
        let u = f_beta_inverse(0.9, beta).unwrap();
        assert!((f_beta(u, beta).unwrap() - 0.9).abs() < 1e-12);

        assert!(f_beta_inverse(0.1, 1.0).is_err()); // below e^{-2β}
        assert!(f_beta_inverse(1.1, 1.0).is_err());
    }

    #[test]
    fn big_f_trivial_values() {
        for beta in [0.2, 0.9, 1.7] {
            assert_eq!(big_f_beta(0.0, beta), 0.0);
            assert_eq!(big_f_beta(1.0, beta), 0.0);
        }
        for t in [0.0, 0.2, 0.5, 0.8, 1.0] {
            assert_eq!(big_f_beta(t, 0.0), 0.0);
        }
    }

    #[test]
    fn big_f_half_matches_matching_growth_rate() {
        // Independent oracle for F_β(1/2): the exact kernel satisfies
        // log g_β(m/2, m)/m → F_β(1/2) with an O(1/m) correction, so a
        // two-point Richardson step 2·r(2m) − r(m) removes the leading term.
        let beta = 1.0;
        let r = |m: usize| log_g_beta(m / 2, m, beta).unwrap() / m as f64;
        let oracle = 2.0 * r(3200) - r(1600);
        let quad = big_f_beta(0.5, beta);
        assert!(
            (quad - oracle).abs() < 1e-6,
            "quadrature {quad} vs extrapolated kernel {oracle}"
        );
        // and both agree with (1/2)·log((1 + e^{−2β})/2)
        let closed = 0.5 * ((1.0 + (-2.0f64 * beta).exp()) / 2.0).ln();
        assert!((quad - closed).abs() < 1e-8, "{quad} vs {closed}");
    }

    #[test]
    fn big_f_prime_values() {
        let beta = 0.8;
        assert_eq!(big_f_beta_prime(0.5, beta), 0.0);
        assert!((big_f_beta_prime(1e-14, beta) + 2.0 * beta).abs() < 1e-10);

        // central difference oracle
        let (t, b, h) = (0.3, 0.7, 1e-5);
        let fd = (big_f_beta(t + h, b) - big_f_beta(t - h, b)) / (2.0 * h);
        assert!((big_f_beta_prime(t, b) - fd).abs() < 1e-6);
    }

    #[test]
    fn crossing_small_cases() {
        let d = crossing_distribution(0, 4).unwrap();
        assert_eq!(d.counts(), &[0]);
        assert!((d.prob(0) - 1.0).abs() < 1e-15);

        let d = crossing_distribution(1, 2).unwrap();
        assert_eq!(d.counts(), &[1]);
        assert!((d.prob(1) - 1.0).abs() < 1e-15);

        // 3 matchings of 4 stubs: one stays inside, two cross twice
        let d = crossing_distribution(2, 4).unwrap();
        assert_eq!(d.counts(), &[0, 2]);
        assert!((d.prob(0) - 1.0 / 3.0).abs() < 1e-14);
        assert!((d.prob(2) - 2.0 / 3.0).abs() < 1e-14);

        assert!(crossing_distribution(1, 3).is_err());
        assert!(crossing_distribution(5, 4).is_err());
        assert!(crossing_distribution(0, M_CAP + 2).is_err());
    }

    #[test]
    fn log_g_small_cases() {
        for beta in [0.0, 0.5, 1.3] {
            assert_eq!(log_g_beta(0, 12, beta).unwrap(), 0.0);
            assert_eq!(log_g_beta(12, 12, beta).unwrap(), 0.0);
        }
        let beta = 0.7;
        let expected = ((1.0 + 2.0 * (-4.0f64 * beta).exp()) / 3.0).ln();
        assert!((log_g_beta(2, 4, beta).unwrap() - expected).abs() < 1e-14);

        for k in 0..=8usize {
            assert!(log_g_beta(k, 8, 0.0).unwrap().abs() < 1e-12);
        }
    }

    #[test]
    fn table_is_shareable_across_threads() {
        fn assert_shareable<T: Send + Sync>() {}
        assert_shareable::<BigFTable>();
        assert_shareable::<CrossingDistribution>();
        assert_shareable::<crate::degree::DegreeDistribution>();
    }

    #[test]
    fn table_matches_quadrature() {
        for beta in [0.3, 1.0, 2.0] {
            let table = BigFTable::new(beta);
            for i in 0..=40 {
                let t = i as f64 / 40.0;
                assert!(
                    (table.eval(t) - big_f_beta(t, beta)).abs() < 1e-10,
                    "beta {beta} t {t}"
                );
            }
        }
    }

    #[test]
    fn double_factorial_matches_direct() {
        fn direct(n: i64) -> f64 {
            let mut acc = 1.0f64;
            let mut i = n;
            while i > 1 {
                acc *= i as f64;
                i -= 2;
            }
            acc
        }
        for n in [-1i64, 0, 1, 2, 3, 7, 10, 15] {
            assert!(
                (log_double_factorial(n) - direct(n).ln()).abs() < 1e-12,
                "n = {n}"
            );
        }
    }

    proptest! {
        #[test]
        fn crossing_probabilities_sum_to_one(m_half in 1usize..20, kf in 0.0f64..=1.0) {
            let m = 2 * m_half;
            let k = (kf * m as f64).round() as usize;
            let d = crossing_distribution(k, m).unwrap();
            let total: f64 = d.log_probs().iter().map(|lp| lp.exp()).sum();
            prop_assert!((total - 1.0).abs() < 1e-10);
        }

        #[test]
        fn log_g_symmetric_in_k(m_half in 1usize..20, kf in 0.0f64..=1.0, beta in 0.0f64..2.0) {
            let m = 2 * m_half;
            let k = (kf * m as f64).round() as usize;
            let a = log_g_beta(k, m, beta).unwrap();
            let b = log_g_beta(m - k, m, beta).unwrap();
            prop_assert_eq!(a, b);
        }

        #[test]
        fn big_f_symmetric(t in 0.0f64..=1.0, beta in 0.0f64..2.0) {
            let a = big_f_beta(t, beta);
            let b = big_f_beta(1.0 - t, beta);
            prop_assert!((a - b).abs() < 1e-11);
        }

        #[test]
        fn f_round_trip(yf in 0.001f64..1.0, beta in 0.05f64..2.0) {
            let c = (-2.0f64 * beta).exp();
            let y = c + yf * (1.0 - c);
            if y > c {
                let u = f_beta_inverse(y, beta).unwrap();
                prop_assert!((0.0..=0.5).contains(&u));
                prop_assert!((f_beta(u, beta).unwrap() - y).abs() < 1e-12);
            }
        }

        #[test]
        fn truncation_inequality(
            a in 0.0f64..5.0,
            gap_b in 0.01f64..5.0,
            gap_c in 0.0f64..5.0,
            extra in 0.0f64..5.0,
            beta in 0.05f64..2.0,
        ) {
            // 0 ≤ a ≤ b, a ≤ c ≤ d, b−a ≤ d−c implies d·F(c/d) ≤ b·F(a/b)
            let b = a + gap_b;
            let c = a + gap_c;
            let d = c + gap_b + extra;
            let lhs = d * big_f_beta((c / d).min(1.0), beta);
            let rhs = b * big_f_beta((a / b).min(1.0), beta);
            prop_assert!(lhs - rhs <= 1e-10);
        }
    }
}
