//! Thermodynamic limit for a fixed asymptotic degree distribution.
//!
//! The annealed pressure is φ(β, B) = βE[D]/2 + sup_s G(s) with
//!
//! G(s) = Σ_k p_k I(s_k) + B(2Σ_k s_k p_k − 1) + E[D]·F_β(Σ_k k p_k s_k / E[D]),
//!
//! where I is the binary entropy. Every maximizer lies on the one-parameter
//! family s_k = 1/(w^k e^{−2B} + 1) indexed by a root w of the scalar
//! consistency equation; the solver brackets every root of that equation on a
//! grid, refines by bisection, evaluates G on each and keeps the best.

use crate::degree::DegreeDistribution;
use crate::error::{Error, Result};
use crate::kernel::{self, BigFTable};
use crate::numeric::{neville, SplitMix64};

/// Inverse temperature β ≥ 0 and external field B.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams {
    beta: f64,
    field: f64,
}

impl ModelParams {
    pub fn new(beta: f64, field: f64) -> Result<Self> {
        if !beta.is_finite() || beta < 0.0 {
            return Err(Error::InvalidParameter(format!(
                "inverse temperature must be a finite nonnegative number, got {beta}"
            )));
        }
        if !field.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "external field must be finite, got {field}"
            )));
        }
        Ok(ModelParams { beta, field })
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn field(&self) -> f64 {
        self.field
    }

    /// Same parameters with the field replaced by its absolute value. The
    /// pressure is even in B, so the solver only works at B ≥ 0 and restores
    /// the magnetization sign afterwards.
    fn abs_field(&self) -> ModelParams {
        ModelParams {
            beta: self.beta,
            field: self.field.abs(),
        }
    }
}

/// A root w of the consistency equation with its induced occupation
/// fractions and functional value.
#[derive(Debug, Clone)]
pub struct FixedPointSolution {
    /// Root in (e^{−2β}, 1].
    pub w: f64,
    /// s_k = 1/(w^k e^{−2B} + 1), aligned with the distribution support.
    pub occupation: Vec<f64>,
    /// G evaluated at the induced occupation.
    pub g_value: f64,
    /// Defect of the consistency equation at w (0 for the appended w = 1).
    pub residual: f64,
}

/// Pressure, magnetization and the winning root, plus every bracketed root
/// for diagnostics.
#[derive(Debug, Clone)]
pub struct PressureResult {
    pub pressure: f64,
    pub magnetization: f64,
    pub solution: FixedPointSolution,
    pub n_roots: usize,
    pub all_roots: Vec<FixedPointSolution>,
}

/// Root-scan controls.
#[derive(Debug, Clone, Copy)]
pub struct SolveOptions {
    /// Number of grid points for the sign scan over (e^{−2β}, 1).
    pub grid_size: usize,
    /// Margin ε_w keeping the scan away from both interval ends.
    pub boundary_margin: f64,
    /// Bisection stops below this bracket width.
    pub bisect_width: f64,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            grid_size: 2048,
            boundary_margin: 1e-9,
            bisect_width: 1e-13,
        }
    }
}

/// Binary entropy I(t) = −t log t − (1−t) log(1−t), I(0) = I(1) = 0.
pub fn binary_entropy(t: f64) -> f64 {
    debug_assert!((0.0..=1.0).contains(&t));
    let mut h = 0.0;
    if t > 0.0 {
        h -= t * t.ln();
    }
    if t < 1.0 {
        h -= (1.0 - t) * (1.0 - t).ln();
    }
    h
}

/// Occupation fraction s_k(w, B) = 1/(w^k e^{−2B} + 1).
pub fn occupation(w: f64, field: f64, k: u32) -> f64 {
    1.0 / (w.powi(k as i32) * (-2.0 * field).exp() + 1.0)
}

pub(crate) enum RateEval<'a> {
    Quadrature,
    Table(&'a BigFTable),
}

impl RateEval<'_> {
    pub(crate) fn eval(&self, t: f64, beta: f64) -> f64 {
        match self {
            RateEval::Quadrature => kernel::big_f_beta(t, beta),
            RateEval::Table(table) => table.eval(t),
        }
    }
}

/// The functional G at occupation fractions `s` (aligned with the support of
/// `dist`), with F_β evaluated by direct quadrature.
pub fn g_functional(s: &[f64], params: &ModelParams, dist: &DegreeDistribution) -> Result<f64> {
    if s.len() != dist.len() {
        return Err(Error::DomainError(format!(
            "expected {} occupation fractions, got {}",
            dist.len(),
            s.len()
        )));
    }
    if s.iter().any(|&v| !(0.0..=1.0).contains(&v)) {
        return Err(Error::DomainError(
            "occupation fractions must lie in [0, 1]".into(),
        ));
    }
    Ok(g_functional_unchecked(
        s,
        params,
        dist,
        &RateEval::Quadrature,
    ))
}

pub(crate) fn g_functional_unchecked(
    s: &[f64],
    params: &ModelParams,
    dist: &DegreeDistribution,
    rate: &RateEval,
) -> f64 {
    let mean = dist.mean();
    let mut entropy = 0.0;
    let mut occupied = 0.0;
    let mut edge_fraction = 0.0;
    for ((k, p), &sk) in dist.iter().zip(s) {
        entropy += p * binary_entropy(sk);
        occupied += p * sk;
        edge_fraction += k as f64 * p * sk;
    }
    entropy
        + params.field() * (2.0 * occupied - 1.0)
        + mean * rate.eval(edge_fraction / mean, params.beta())
}

/// Left-hand side minus right-hand side of the consistency equation at w:
/// (1 − cw)/(1 + w² − 2cw) − E[(1 + w^{D*} e^{−2B})^{−1}], c = e^{−2β},
/// the expectation running over the size-biased degree.
pub fn fixed_point_residual(w: f64, params: &ModelParams, dist: &DegreeDistribution) -> f64 {
    let c = (-2.0 * params.beta()).exp();
    let lhs = (1.0 - c * w) / (1.0 + w * w - 2.0 * c * w);
    let e2b = (-2.0 * params.field()).exp();
    let mean = dist.mean();
    debug_assert!(mean > 0.0);
    // incremental powers over the ascending support
    let mut rhs = 0.0;
    let mut last_k = 0u32;
    let mut wk = 1.0f64;
    for (k, p) in dist.iter() {
        if k == 0 {
            continue; // no mass in the size-biased law
        }
        for _ in last_k..k {
            wk *= w;
        }
        last_k = k;
        rhs += (k as f64 * p / mean) / (1.0 + wk * e2b);
    }
    lhs - rhs
}

fn solution_at(
    w: f64,
    residual: f64,
    params: &ModelParams,
    dist: &DegreeDistribution,
    rate: &RateEval,
) -> FixedPointSolution {
    let s: Vec<f64> = dist
        .support()
        .iter()
        .map(|&k| occupation(w, params.field(), k))
        .collect();
    // w <= 1 and B >= 0 pin every occupation fraction to [1/2, 1)
    debug_assert!(s.iter().all(|&sk| sk >= 0.5 && sk < 1.0 + 1e-15));
    let g_value = g_functional_unchecked(&s, params, dist, rate);
    FixedPointSolution {
        w,
        occupation: s,
        g_value,
        residual,
    }
}

/// All roots of the consistency equation at the given parameters, ascending
/// in w. The field is taken at its absolute value; at B = 0 the trivial root
/// w = 1 is always part of the list.
pub fn solve_w(params: &ModelParams, dist: &DegreeDistribution) -> Result<Vec<FixedPointSolution>> {
    solve_w_with(params, dist, &SolveOptions::default())
}

pub fn solve_w_with(
    params: &ModelParams,
    dist: &DegreeDistribution,
    opts: &SolveOptions,
) -> Result<Vec<FixedPointSolution>> {
    solve_w_impl(&params.abs_field(), dist, opts, &RateEval::Quadrature)
}

pub(crate) fn solve_w_impl(
    params: &ModelParams,
    dist: &DegreeDistribution,
    opts: &SolveOptions,
    rate: &RateEval,
) -> Result<Vec<FixedPointSolution>> {
    debug_assert!(params.field() >= 0.0);
    if dist.mean() <= 0.0 {
        return Err(Error::DegenerateDistribution(
            "consistency equation needs a positive mean degree".into(),
        ));
    }
    let beta = params.beta();
    let b = params.field();

    // β = 0: f_0 ≡ 1 forces w = 1, spins decouple analytically.
    if beta == 0.0 {
        return Ok(vec![solution_at(1.0, 0.0, params, dist, rate)]);
    }

    let c = (-2.0 * beta).exp();
    let lo = c + opts.boundary_margin;
    let hi = 1.0 - opts.boundary_margin;
    let mut roots: Vec<f64> = Vec::new();
    if lo < hi {
        let grid = opts.grid_size.max(2);
        let step = (hi - lo) / (grid - 1) as f64;
        let residual_at = |w: f64| fixed_point_residual(w, params, dist);
        let mut prev_w = lo;
        let mut prev_r = residual_at(lo);
        for i in 1..grid {
            let w = lo + i as f64 * step;
            let r = residual_at(w);
            if prev_r == 0.0 {
                roots.push(prev_w);
            } else if prev_r.signum() != r.signum() && r != 0.0 {
                // bisection refine
                let (mut left, mut f_left, mut right) = (prev_w, prev_r, w);
                while right - left > opts.bisect_width {
                    let mid = 0.5 * (left + right);
                    let fm = residual_at(mid);
                    if fm == 0.0 {
                        left = mid;
                        break;
                    }
                    if fm.signum() == f_left.signum() {
                        left = mid;
                        f_left = fm;
                    } else {
                        right = mid;
                    }
                }
                roots.push(0.5 * (left + right));
            }
            prev_w = w;
            prev_r = r;
        }
        if prev_r == 0.0 {
            roots.push(prev_w);
        }
    }
    if b == 0.0 {
        // w = 1 always solves at zero field; the scan stops at 1 − ε
        roots.push(1.0);
    }
    // merge near-duplicates from adjacent brackets
    roots.sort_by(|a, b| a.partial_cmp(b).unwrap());
    roots.dedup_by(|a, b| (*a - *b).abs() < 1e-8);

    if roots.is_empty() {
        return Err(Error::NoRootFound(format!(
            "no sign change over ({lo}, {hi}) at beta={beta}, field={b}"
        )));
    }
    Ok(roots
        .into_iter()
        .map(|w| {
            let r = if w == 1.0 && b == 0.0 {
                0.0
            } else {
                fixed_point_residual(w, params, dist)
            };
            solution_at(w, r, params, dist, rate)
        })
        .collect())
}

/// Index of the root with the largest G; exact ties go to the larger w.
pub fn select_root(roots: &[FixedPointSolution]) -> usize {
    debug_assert!(!roots.is_empty());
    let mut best = 0;
    for i in 1..roots.len() {
        if roots[i].g_value >= roots[best].g_value {
            best = i; // roots ascend in w, so >= prefers larger w on ties
        }
    }
    best
}

/// Annealed pressure and magnetization. Rejects distributions with mass at
/// degree 0; the i.i.d. layer uses the crate-internal variant that accepts
/// them (isolated vertices decouple exactly).
pub fn pressure(params: &ModelParams, dist: &DegreeDistribution) -> Result<PressureResult> {
    if dist.min_degree() == 0 {
        return Err(Error::InvalidDistribution(
            "deterministic pressure needs minimum degree >= 1".into(),
        ));
    }
    pressure_impl(
        params,
        dist,
        &SolveOptions::default(),
        &RateEval::Quadrature,
    )
}

pub fn pressure_with(
    params: &ModelParams,
    dist: &DegreeDistribution,
    opts: &SolveOptions,
) -> Result<PressureResult> {
    if dist.min_degree() == 0 {
        return Err(Error::InvalidDistribution(
            "deterministic pressure needs minimum degree >= 1".into(),
        ));
    }
    pressure_impl(params, dist, opts, &RateEval::Quadrature)
}

pub(crate) fn pressure_impl(
    params: &ModelParams,
    dist: &DegreeDistribution,
    opts: &SolveOptions,
    rate: &RateEval,
) -> Result<PressureResult> {
    let abs_params = params.abs_field();
    let roots = solve_w_impl(&abs_params, dist, opts, rate)?;
    let winner = select_root(&roots);
    let solution = roots[winner].clone();
    let pressure = params.beta() * dist.mean() / 2.0 + solution.g_value;
    let mut magnetization = dist
        .iter()
        .zip(&solution.occupation)
        .map(|((_, p), &s)| p * s)
        .sum::<f64>()
        * 2.0
        - 1.0;
    if params.field() < 0.0 {
        magnetization = -magnetization;
    }
    Ok(PressureResult {
        pressure,
        magnetization,
        n_roots: roots.len(),
        solution,
        all_roots: roots,
    })
}

/// atanh(1/ν), or +∞ when ν ≤ 1 (no transition).
pub fn critical_beta(dist: &DegreeDistribution) -> f64 {
    match dist.forward_degree_nu() {
        Ok(nu) if nu > 1.0 => (1.0 / nu).atanh(),
        _ => f64::INFINITY,
    }
}

/// Default field ladder for the B ↓ 0 extrapolation.
pub const FIELD_LADDER: [f64; 5] = [1e-1, 3e-2, 1e-2, 3e-3, 1e-3];

/// Spontaneous magnetization estimate: the raw ladder and the polynomial
/// extrapolation of M(B) to B = 0.
#[derive(Debug, Clone)]
pub struct Spontaneous {
    pub extrapolated: f64,
    /// (B, M(B)) pairs in ladder order.
    pub ladder: Vec<(f64, f64)>,
    /// Whether M decreased monotonically along the descending ladder.
    pub monotone: bool,
}

pub fn spontaneous_magnetization(
    beta: f64,
    dist: &DegreeDistribution,
    fields: &[f64],
) -> Result<Spontaneous> {
    assert!(!fields.is_empty(), "field ladder must not be empty");
    let mut ladder = Vec::with_capacity(fields.len());
    for &b in fields {
        let result = pressure(&ModelParams::new(beta, b)?, dist)?;
        ladder.push((b, result.magnetization));
    }
    Ok(extrapolate_ladder(ladder))
}

pub(crate) fn extrapolate_ladder(ladder: Vec<(f64, f64)>) -> Spontaneous {
    let monotone = ladder.windows(2).all(|w| w[1].1 <= w[0].1 + 1e-12);
    let extrapolated = neville(&ladder, 0.0);
    Spontaneous {
        extrapolated,
        ladder,
        monotone,
    }
}

/// First β (linearly interpolated) where the extrapolated spontaneous
/// magnetization exceeds `threshold`. `points` are (β, M) with ascending β.
pub fn estimate_transition(points: &[(f64, f64)], threshold: f64) -> Option<f64> {
    let mut prev: Option<(f64, f64)> = None;
    for &(beta, m) in points {
        if m >= threshold {
            return Some(match prev {
                Some((b0, m0)) if m > m0 => b0 + (threshold - m0) * (beta - b0) / (m - m0),
                _ => beta,
            });
        }
        prev = Some((beta, m));
    }
    None
}

/// Direct projected-gradient ascent of G over the occupation fractions,
/// bypassing the one-parameter root family. A cross-check for the solver on
/// small supports: returns the best pressure found over `restarts` random
/// starting points.
pub fn direct_ascent_pressure(
    params: &ModelParams,
    dist: &DegreeDistribution,
    restarts: usize,
    tol: f64,
) -> Result<f64> {
    let abs_params = params.abs_field();
    let n = dist.len();
    let mut rng = SplitMix64::new(0x5eed_face);
    let eps = 1e-12;
    let grad = |s: &[f64]| -> Vec<f64> {
        let mean = dist.mean();
        let t = dist
            .iter()
            .zip(s)
            .map(|((k, p), &sk)| k as f64 * p * sk)
            .sum::<f64>()
            / mean;
        let fp = kernel::big_f_beta_prime(t.clamp(0.0, 1.0), abs_params.beta());
        dist.iter()
            .zip(s)
            .map(|((k, p), &sk)| {
                p * (((1.0 - sk) / sk).ln() + 2.0 * abs_params.field() + k as f64 * fp)
            })
            .collect()
    };
    let value = |s: &[f64]| g_functional_unchecked(s, &abs_params, dist, &RateEval::Quadrature);

    let mut best = f64::NEG_INFINITY;
    for restart in 0..restarts.max(1) {
        let mut s: Vec<f64> = if restart == 0 {
            vec![0.5 + eps; n] // deterministic start at the symmetric point
        } else {
            (0..n).map(|_| 0.05 + 0.9 * rng.next_unit()).collect()
        };
        let mut g = value(&s);
        let mut step = 0.25;
        for _ in 0..20_000 {
            let gr = grad(&s);
            let norm = gr.iter().map(|x| x * x).sum::<f64>().sqrt();
            if norm < tol || step < 1e-14 {
                break;
            }
            // backtracking line search on the projected step
            let mut improved = false;
            while step >= 1e-14 {
                let trial: Vec<f64> = s
                    .iter()
                    .zip(&gr)
                    .map(|(&sk, &gk)| (sk + step * gk).clamp(eps, 1.0 - eps))
                    .collect();
                let gt = value(&trial);
                if gt > g {
                    s = trial;
                    g = gt;
                    step *= 1.5;
                    improved = true;
                    break;
                }
                step *= 0.5;
            }
            if !improved {
                break;
            }
        }
        best = best.max(g);
    }
    Ok(params.beta() * dist.mean() / 2.0 + best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::degree::{dirac, make_distribution, poisson_truncated};

    fn params(beta: f64, field: f64) -> ModelParams {
        ModelParams::new(beta, field).unwrap()
    }

    #[test]
    fn occupation_examples() {
        for k in [1, 2, 5] {
            assert!((occupation(1.0, 0.0, k) - 0.5).abs() < 1e-15);
            assert!(occupation(0.7, 40.0, k) > 1.0 - 1e-12);
        }
        assert!((occupation(0.5, 0.0, 2) - 0.8).abs() < 1e-15);
    }

    #[test]
    fn g_functional_closed_forms() {
        let d = dirac(3);
        // β = 0, B = 0, s ≡ 1/2: G = log 2
        let g = g_functional(&[0.5], &params(0.0, 0.0), &d).unwrap();
        assert!((g - 2.0f64.ln()).abs() < 1e-14);

        // s ≡ 0: only the field term survives
        let g = g_functional(&[0.0], &params(0.4, 0.3), &d).unwrap();
        assert!((g + 0.3).abs() < 1e-14);

        // β = 0 with the decoupled optimum s* = e^{2B}/(1+e^{2B})
        let b = 0.7f64;
        let s_opt = (2.0 * b).exp() / (1.0 + (2.0 * b).exp());
        let g = g_functional(&[s_opt], &params(0.0, b), &d).unwrap();
        assert!((g - (2.0 * b.cosh()).ln()).abs() < 1e-12);

        // one-dimensional calculus oracle: grid maximum of I(s) + 2Bs − B
        let grid_max = (0..=10_000)
            .map(|i| i as f64 / 10_000.0)
            .map(|s| binary_entropy(s) + 2.0 * b * s - b)
            .fold(f64::NEG_INFINITY, f64::max);
        assert!((grid_max - (2.0 * b.cosh()).ln()).abs() < 1e-8);

        assert!(g_functional(&[1.5], &params(0.0, 0.0), &d).is_err());
        assert!(g_functional(&[0.5, 0.5], &params(0.0, 0.0), &d).is_err());
    }

    #[test]
    fn residual_at_trivial_root() {
        let d3 = dirac(3);
        assert!(fixed_point_residual(1.0, &params(0.8, 0.0), &d3).abs() < 1e-14);
        let d2 = dirac(2);
        assert!(fixed_point_residual(1.0, &params(1.2, 0.0), &d2).abs() < 1e-14);
    }

    #[test]
    fn solve_subcritical_has_unique_trivial_root() {
        let d = dirac(3);
        let roots = solve_w(&params(0.3, 0.0), &d).unwrap();
        assert_eq!(roots.len(), 1);
        assert_eq!(roots[0].w, 1.0);
        for &s in &roots[0].occupation {
            assert!((s - 0.5).abs() < 1e-15);
        }
        // independent dense scan: no interior sign change
        let c = (-0.6f64).exp();
        let p = params(0.3, 0.0);
        let mut prev = fixed_point_residual(c + 1e-9, &p, &d);
        let mut crossings = 0;
        for i in 1..=20_000 {
            let w = c + 1e-9 + (1.0 - 1e-6 - c) * i as f64 / 20_000.0;
            let r = fixed_point_residual(w, &p, &d);
            if prev.signum() != r.signum() {
                crossings += 1;
            }
            prev = r;
        }
        assert_eq!(crossings, 0);
    }

    #[test]
    fn solve_supercritical_finds_ordered_root() {
        let d = dirac(3);
        // analytic nontrivial root at B=0: cw² − (1−c)w + c = 0
        let beta = 0.8f64;
        let c = (-2.0 * beta).exp();
        let w_exact = ((1.0 - c) - ((1.0 - c).powi(2) - 4.0 * c * c).sqrt()) / (2.0 * c);
        let roots = solve_w(&params(beta, 0.0), &d).unwrap();
        assert!(roots.iter().any(|r| (r.w - w_exact).abs() < 1e-9));
        assert!(roots.iter().any(|r| r.w == 1.0));

        // small positive field: a root stays far from 1
        let roots = solve_w(&params(beta, 0.01), &d).unwrap();
        assert!(roots.iter().all(|r| r.w < 1.0));
        assert!(roots.iter().any(|r| r.w < 0.9));

        // for B > 0 every root satisfies |residual| below tolerance
        for r in &roots {
            assert!(r.residual.abs() < 1e-10);
        }
    }

    #[test]
    fn pressure_closed_forms() {
        // β = 0 decouples for any distribution
        for dist in [
            dirac(3),
            make_distribution(&[(1, 1.0), (2, 1.0)]).unwrap(),
            crate::degree::geometric(0.3, 50).unwrap(),
        ] {
            for b in [0.0, 0.5, -0.7] {
                let r = pressure(&params(0.0, b), &dist).unwrap();
                assert!((r.pressure - (2.0 * b.cosh()).ln()).abs() < 1e-12);
                assert!((r.magnetization - b.tanh()).abs() < 1e-12);
            }
        }

        // B = 0 below criticality: φ = log 2 + (E[D]/2) log cosh β
        let d = dirac(3);
        let beta = 0.8 * critical_beta(&d);
        let r = pressure(&params(beta, 0.0), &d).unwrap();
        let expected = 2.0f64.ln() + 1.5 * beta.cosh().ln();
        assert!((r.pressure - expected).abs() < 1e-9);

        // single-degree line graphs never order: closed form for all β
        let d1 = dirac(1);
        for beta in [0.2, 1.0, 3.0] {
            let r = pressure(&params(beta, 0.0), &d1).unwrap();
            let expected = 2.0f64.ln() + 0.5 * beta.cosh().ln();
            assert!((r.pressure - expected).abs() < 1e-9);
        }
    }

    #[test]
    fn pressure_rejects_zero_degrees() {
        let with_zero = poisson_truncated(1.0, 30).unwrap();
        assert!(matches!(
            pressure(&params(0.5, 0.0), &with_zero),
            Err(Error::InvalidDistribution(_))
        ));
    }

    #[test]
    fn pressure_even_and_magnetization_odd_in_field() {
        let d = make_distribution(&[(1, 1.0), (3, 1.0)]).unwrap();
        for (beta, b) in [(0.4, 0.3), (1.1, 0.05)] {
            let plus = pressure(&params(beta, b), &d).unwrap();
            let minus = pressure(&params(beta, -b), &d).unwrap();
            assert_eq!(plus.pressure, minus.pressure);
            assert_eq!(plus.magnetization, -minus.magnetization);
        }
    }

    #[test]
    fn critical_beta_examples() {
        assert!((critical_beta(&dirac(3)) - 0.5f64.atanh()).abs() < 1e-12);
        assert!(critical_beta(&dirac(2)).is_infinite());
        let pois = poisson_truncated(2.0, 60).unwrap();
        assert!((critical_beta(&pois) - 0.5f64.atanh()).abs() < 1e-6);
    }

    #[test]
    fn spontaneous_magnetization_regimes() {
        let d = dirac(3);
        let sub = spontaneous_magnetization(0.3, &d, &FIELD_LADDER).unwrap();
        assert!(sub.extrapolated.abs() < 2e-3, "{}", sub.extrapolated);

        let sup = spontaneous_magnetization(1.0, &d, &FIELD_LADDER).unwrap();
        assert!(sup.extrapolated > 0.1, "{}", sup.extrapolated);
        assert!(sup.monotone);

        // β = 0: M(B) = tanh(B) extrapolates to 0
        let zero = spontaneous_magnetization(0.0, &d, &FIELD_LADDER).unwrap();
        assert!(zero.extrapolated.abs() < 1e-10, "{}", zero.extrapolated);
    }

    #[test]
    fn transition_estimator() {
        let rows = vec![
            (0.40, 0.0),
            (0.45, 0.001),
            (0.50, 0.01),
            (0.55, 0.06),
            (0.60, 0.2),
        ];
        let t = estimate_transition(&rows, 0.02).unwrap();
        assert!(t > 0.50 && t < 0.55, "{t}");
        // exact interpolation: 0.50 + (0.02-0.01)/(0.06-0.01)*0.05
        assert!((t - 0.51).abs() < 1e-12);

        assert!(estimate_transition(&rows, 0.5).is_none());
        assert_eq!(estimate_transition(&[(0.3, 0.4)], 0.02), Some(0.3));
    }

    #[test]
    fn ascent_oracle_agrees_with_root_family() {
        let cases = [
            (dirac(3), 0.4, 0.0),
            (dirac(3), 0.9, 0.1),
            (make_distribution(&[(1, 1.0), (3, 1.0)]).unwrap(), 0.7, 0.05),
        ];
        for (dist, beta, b) in cases {
            let via_roots = pressure(&params(beta, b), &dist).unwrap().pressure;
            let via_ascent = direct_ascent_pressure(&params(beta, b), &dist, 5, 1e-10).unwrap();
            assert!(
                (via_roots - via_ascent).abs() < 1e-8,
                "{beta} {b}: {via_roots} vs {via_ascent}"
            );
        }
    }

    #[test]
    fn root_selection_shift_invariant() {
        let d = dirac(3);
        let roots = solve_w(&params(0.9, 0.0), &d).unwrap();
        assert!(roots.len() >= 2);
        let base = select_root(&roots);
        for shift in [-5.0, 1e-3, 7.0] {
            let shifted: Vec<FixedPointSolution> = roots
                .iter()
                .map(|r| {
                    let mut r = r.clone();
                    r.g_value += shift;
                    r
                })
                .collect();
            assert_eq!(select_root(&shifted), base);
        }
    }

    #[test]
    fn grid_doubling_keeps_roots() {
        let d = dirac(3);
        let p = params(0.9, 0.02);
        let coarse = solve_w_with(&p, &d, &SolveOptions::default()).unwrap();
        let fine = solve_w_with(
            &p,
            &d,
            &SolveOptions {
                grid_size: 4096,
                ..SolveOptions::default()
            },
        )
        .unwrap();
        assert_eq!(coarse.len(), fine.len());
        for (a, b) in coarse.iter().zip(&fine) {
            assert!((a.w - b.w).abs() < 1e-9);
        }
    }
}
