//! The i.i.d.-degree layer.
//!
//! When the degrees themselves are drawn i.i.d. from p, averaging over both
//! graph and degrees yields the entropy-penalized variational pressure
//!
//! φ(β, B) = sup_q [ φ_det(β, B; q) − H(q | p) ],
//!
//! with the supremum over degree laws q supported inside supp(p). The
//! optimizer at B = 0 below criticality is the tilted law
//! q_k(β) ∝ p_k cosh(β)^{k/2}; the general case is solved by alternating
//! maximization between the inner scalar problem and a tilted-Gibbs update
//! of q. The critical upper bound β̄ solves β = atanh(1/ν(q(β))) and has
//! closed forms for Poisson and geometric degrees.

use crate::degree::{self, make_distribution, relative_entropy, DegreeDistribution};
use crate::deterministic::{
    binary_entropy, extrapolate_ladder, pressure_impl, ModelParams, PressureResult, RateEval,
    SolveOptions, Spontaneous,
};
use crate::error::{Error, Result};
use crate::kernel::{self, BigFTable};
use crate::numeric::LogSumExp;

/// Upper bound on the i.i.d. critical inverse temperature: the unique
/// solution of β = atanh(1/ν(q(β))) together with the tilted law there.
#[derive(Debug, Clone)]
pub struct CriticalBound {
    pub beta_bar: f64,
    pub tilted: DegreeDistribution,
    pub nu_at_bar: f64,
}

/// Solves β = atanh(1/ν(tilt(p, β))) by bisection on the strictly increasing
/// defect β − atanh(1/ν(q(β))). Returns `None` when no transition exists
/// below β = 50 (e.g. ν(q(β)) never exceeds 1).
pub fn beta_bar_c(dist: &DegreeDistribution) -> Option<CriticalBound> {
    let defect = |beta: f64| -> f64 {
        match dist.tilt(beta).forward_degree_nu() {
            Ok(nu) if nu > 1.0 => beta - (1.0 / nu).atanh(),
            _ => f64::NEG_INFINITY, // atanh(1/ν) diverges for ν ≤ 1
        }
    };
    let mut hi = 1.0f64;
    while defect(hi) <= 0.0 {
        if hi >= 50.0 {
            return None;
        }
        hi = (hi * 2.0).min(50.0);
    }
    let mut lo = 0.0f64;
    while hi - lo > 1e-12 {
        let mid = 0.5 * (lo + hi);
        if defect(mid) > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let beta_bar = 0.5 * (lo + hi);
    let tilted = dist.tilt(beta_bar);
    let nu_at_bar = tilted.forward_degree_nu().ok()?;
    Some(CriticalBound {
        beta_bar,
        tilted,
        nu_at_bar,
    })
}

/// Closed form of β̄ for Poisson(λ) degrees:
/// −log(2λ²) + log[1 + √(1+4λ⁴) + √(2 + 2√(1+4λ⁴))].
pub fn poisson_beta_bar(lambda: f64) -> Result<f64> {
    if !lambda.is_finite() || lambda <= 0.0 {
        return Err(Error::InvalidParameter(format!(
            "poisson intensity must be positive, got {lambda}"
        )));
    }
    let root = (1.0 + 4.0 * lambda.powi(4)).sqrt();
    Ok(-(2.0 * lambda * lambda).ln() + (1.0 + root + (2.0 + 2.0 * root).sqrt()).ln())
}

/// Closed form of β̄ for geometric(p) degrees: with r = 1−p and x* ≥ 1 the
/// unique such root of 3r²x⁴ + 2rx³ − x² − 4r² = 0 (bracketed in [1, 1/r]),
/// β̄ = log(x*² + √(x*⁴ − 1)).
pub fn geometric_beta_bar(p: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "geometric parameter must lie in (0,1), got {p}"
        )));
    }
    let r = 1.0 - p;
    let quartic = |x: f64| 3.0 * r * r * x.powi(4) + 2.0 * r * x.powi(3) - x * x - 4.0 * r * r;
    let (mut lo, mut hi) = (1.0, 1.0 / r);
    debug_assert!(quartic(lo) <= 0.0 && quartic(hi) > 0.0);
    while hi - lo > 1e-14 * hi {
        let mid = 0.5 * (lo + hi);
        if quartic(mid) > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let x = 0.5 * (lo + hi);
    Ok((x * x + (x.powi(4) - 1.0).max(0.0).sqrt()).ln())
}

/// ∂G/∂q_i at occupation `s` (aligned with the support of `q`):
/// I(s_i) + 2s_iB + i·F_β(T) + E[D(q)]·F_β'(T)·(i s_i/E[D(q)] − i T/E[D(q)]),
/// where T = Σ_k k q_k s_k / E[D(q)].
pub fn q_gradient(i: u32, s: &[f64], q: &DegreeDistribution, params: &ModelParams) -> f64 {
    q_gradient_with(i, s, q, params, &RateEval::Quadrature)
}

fn q_gradient_with(
    i: u32,
    s: &[f64],
    q: &DegreeDistribution,
    params: &ModelParams,
    rate: &RateEval,
) -> f64 {
    debug_assert_eq!(s.len(), q.len());
    let idx = q
        .support()
        .binary_search(&i)
        .expect("q_gradient: degree not in support");
    let mean = q.mean();
    let t = q
        .iter()
        .zip(s)
        .map(|((k, qk), &sk)| k as f64 * qk * sk)
        .sum::<f64>()
        / mean;
    let i_f = i as f64;
    binary_entropy(s[idx])
        + 2.0 * s[idx] * params.field()
        + i_f * rate.eval(t, params.beta())
        + mean
            * kernel::big_f_beta_prime(t.clamp(0.0, 1.0), params.beta())
            * (i_f * s[idx] / mean - i_f * t / mean)
}

/// G as a function of an *unnormalized* degree measure (support, weights):
/// Σ w_k I(s_k) + B(2Σ w_k s_k − 1) + E_w[D]·F_β(Σ k w_k s_k / E_w[D]).
/// Exists so the q-gradient can be checked by central differences.
pub fn g_functional_q(s: &[f64], support: &[u32], weights: &[f64], params: &ModelParams) -> f64 {
    debug_assert!(s.len() == support.len() && s.len() == weights.len());
    let mean: f64 = support
        .iter()
        .zip(weights)
        .map(|(&k, &w)| k as f64 * w)
        .sum();
    let mut entropy = 0.0;
    let mut occupied = 0.0;
    let mut edge = 0.0;
    for ((&k, &w), &sk) in support.iter().zip(weights).zip(s) {
        entropy += w * binary_entropy(sk);
        occupied += w * sk;
        edge += k as f64 * w * sk;
    }
    entropy
        + params.field() * (2.0 * occupied - 1.0)
        + mean * kernel::big_f_beta(edge / mean, params.beta())
}

/// Starting points for the alternating maximization.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QStart {
    /// q⁰ = p
    Base,
    /// q⁰ = tilt(p, β)
    Tilted,
    /// q⁰ uniform on the support of p
    Uniform,
}

#[derive(Debug, Clone)]
pub struct IidOptions {
    pub max_iterations: usize,
    /// Sup-norm change in q below which the iteration stops.
    pub tolerance: f64,
    pub starts: Vec<QStart>,
    pub solve: SolveOptions,
}

impl Default for IidOptions {
    fn default() -> Self {
        IidOptions {
            max_iterations: 10_000,
            tolerance: 1e-11,
            starts: vec![QStart::Base, QStart::Tilted, QStart::Uniform],
            solve: SolveOptions::default(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct IidPressureResult {
    /// φ_det(β, B; q*) − H(q* | p)
    pub pressure: f64,
    pub optimizer_q: DegreeDistribution,
    /// Inner deterministic result at the optimizer.
    pub inner: PressureResult,
    pub entropy_cost: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Optimizer mass sitting at degree 0 (isolated vertices decouple).
    pub zero_degree_mass: f64,
}

/// Outcome of the i.i.d. pressure: infinite when E[e^{βD/2}] diverges for
/// the untruncated family, finite with full diagnostics otherwise.
#[derive(Debug, Clone)]
pub enum IidPressure {
    Infinite { condition: String },
    Finite(IidPressureResult),
}

impl IidPressure {
    pub fn finite(self) -> Option<IidPressureResult> {
        match self {
            IidPressure::Finite(r) => Some(r),
            IidPressure::Infinite { .. } => None,
        }
    }

    pub fn value(&self) -> f64 {
        match self {
            IidPressure::Finite(r) => r.pressure,
            IidPressure::Infinite { .. } => f64::INFINITY,
        }
    }
}

fn normalized_from_logs(support: &[u32], log_weights: &[f64]) -> Result<DegreeDistribution> {
    let mut lse = LogSumExp::new();
    for &lw in log_weights {
        lse.add(lw);
    }
    let norm = lse.value();
    let pairs: Vec<(u32, f64)> = support
        .iter()
        .zip(log_weights)
        .map(|(&k, &lw)| (k, (lw - norm).exp()))
        .collect();
    make_distribution(&pairs)
}

struct RestartOutcome {
    q: DegreeDistribution,
    objective: f64,
    iterations: usize,
    converged: bool,
}

/// Alternating maximization of φ_det(β, B; q) − H(q | p).
///
/// Each round solves the inner scalar problem at the current q, then applies
/// the tilted-Gibbs update q_i ∝ p_i exp(βi/2 + ∂G/∂q_i); if the objective
/// drops, the step is damped by averaging with the previous iterate. The
/// best final objective over the configured restarts wins, and the reported
/// numbers are recomputed with direct quadrature.
pub fn pressure_iid(
    params: &ModelParams,
    dist: &DegreeDistribution,
    opts: &IidOptions,
) -> Result<IidPressure> {
    if !degree::exp_moment_condition(dist, params.beta()) {
        return Ok(IidPressure::Infinite {
            condition: format!(
                "E[exp(beta D/2)] diverges for the untruncated family at beta = {}",
                params.beta()
            ),
        });
    }
    if dist.mean() <= 0.0 {
        return Err(Error::DegenerateDistribution(
            "i.i.d. pressure needs a positive mean degree".into(),
        ));
    }
    let abs_params = ModelParams::new(params.beta(), params.field().abs())?;
    let table = BigFTable::new(params.beta());
    let rate = RateEval::Table(&table);

    let mut best: Option<RestartOutcome> = None;
    for start in &opts.starts {
        let q0 = match start {
            QStart::Base => dist.clone(),
            QStart::Tilted => dist.tilt(params.beta()),
            QStart::Uniform => {
                let pairs: Vec<(u32, f64)> = dist.support().iter().map(|&k| (k, 1.0)).collect();
                make_distribution(&pairs)?
            }
        };
        let outcome = run_restart(&abs_params, dist, q0, opts, &rate)?;
        let better = match &best {
            None => true,
            Some(b) => outcome.objective > b.objective,
        };
        if better {
            best = Some(outcome);
        }
    }
    let best = best.expect("at least one restart");

    // reported values use direct quadrature and the signed field
    let inner = pressure_impl(params, &best.q, &opts.solve, &RateEval::Quadrature)?;
    let entropy_cost = relative_entropy(&best.q, dist);
    let zero_degree_mass = best.q.prob(0);
    Ok(IidPressure::Finite(IidPressureResult {
        pressure: inner.pressure - entropy_cost,
        optimizer_q: best.q,
        inner,
        entropy_cost,
        iterations: best.iterations,
        converged: best.converged,
        zero_degree_mass,
    }))
}

fn run_restart(
    abs_params: &ModelParams,
    base: &DegreeDistribution,
    q0: DegreeDistribution,
    opts: &IidOptions,
    rate: &RateEval,
) -> Result<RestartOutcome> {
    let beta = abs_params.beta();
    let objective_of = |q: &DegreeDistribution| -> Result<(PressureResult, f64)> {
        let inner = pressure_impl(abs_params, q, &opts.solve, rate)?;
        let obj = inner.pressure - relative_entropy(q, base);
        Ok((inner, obj))
    };

    let mut q = q0;
    let (mut inner, mut objective) = objective_of(&q)?;
    let mut iterations = 0;
    let mut converged = false;

    for iter in 1..=opts.max_iterations {
        iterations = iter;
        let s = &inner.solution.occupation;
        let log_weights: Vec<f64> = q
            .support()
            .iter()
            .map(|&k| {
                base.prob(k).ln()
                    + 0.5 * beta * k as f64
                    + q_gradient_with(k, s, &q, abs_params, rate)
            })
            .collect();
        let proposal = normalized_from_logs(q.support(), &log_weights)?;
        let (prop_inner, prop_obj) = objective_of(&proposal)?;

        let (next_q, next_inner, next_obj) = if prop_obj < objective {
            // damped step: average with the previous iterate
            let mixed: Vec<(u32, f64)> = q
                .support()
                .iter()
                .map(|&k| (k, 0.5 * q.prob(k) + 0.5 * proposal.prob(k)))
                .collect();
            let mixed = make_distribution(&mixed)?;
            let (mixed_inner, mixed_obj) = objective_of(&mixed)?;
            (mixed, mixed_inner, mixed_obj)
        } else {
            (proposal, prop_inner, prop_obj)
        };

        let delta = q
            .support()
            .iter()
            .map(|&k| (q.prob(k) - next_q.prob(k)).abs())
            .fold(0.0f64, f64::max);
        q = next_q;
        inner = next_inner;
        objective = next_obj;
        if delta < opts.tolerance {
            converged = true;
            break;
        }
    }
    Ok(RestartOutcome {
        q,
        objective,
        iterations,
        converged,
    })
}

/// Spontaneous magnetization of the i.i.d. model via the same descending
/// field ladder and polynomial extrapolation as the deterministic layer.
pub fn spontaneous_magnetization_iid(
    beta: f64,
    dist: &DegreeDistribution,
    fields: &[f64],
    opts: &IidOptions,
) -> Result<Spontaneous> {
    assert!(!fields.is_empty(), "field ladder must not be empty");
    let mut ladder = Vec::with_capacity(fields.len());
    for &b in fields {
        match pressure_iid(&ModelParams::new(beta, b)?, dist, opts)? {
            IidPressure::Finite(r) => ladder.push((b, r.inner.magnetization)),
            IidPressure::Infinite { condition } => {
                return Err(Error::DomainError(format!(
                    "spontaneous magnetization undefined: {condition}"
                )))
            }
        }
    }
    Ok(extrapolate_ladder(ladder))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::degree::{dirac, geometric, poisson_truncated};
    use crate::deterministic::pressure;

    fn params(beta: f64, field: f64) -> ModelParams {
        ModelParams::new(beta, field).unwrap()
    }

    fn two_atom() -> DegreeDistribution {
        make_distribution(&[(1, 1.0), (3, 1.0)]).unwrap()
    }

    #[test]
    fn beta_bar_on_regular_degrees_is_the_quenched_value() {
        // tilting a point mass is the identity
        for r in [3u32, 4, 7] {
            let bound = beta_bar_c(&dirac(r)).unwrap();
            let expected = (1.0 / (r as f64 - 1.0)).atanh();
            assert!((bound.beta_bar - expected).abs() < 1e-10);
            assert!((bound.beta_bar - (1.0 / bound.nu_at_bar).atanh()).abs() < 1e-10);
        }
        assert!(beta_bar_c(&dirac(2)).is_none());
        assert!(beta_bar_c(&dirac(1)).is_none());
    }

    #[test]
    fn beta_bar_strictly_below_quenched_for_non_regular() {
        let d = two_atom();
        let bound = beta_bar_c(&d).unwrap();
        let quenched = (1.0 / d.forward_degree_nu().unwrap()).atanh();
        assert!(bound.beta_bar < quenched - 1e-6);
        assert!((bound.beta_bar - (1.0 / bound.nu_at_bar).atanh()).abs() < 1e-10);
    }

    #[test]
    fn poisson_closed_form() {
        // λ = 1: log[(1 + √5 + √(2 + 2√5))/2]
        let s5 = 5.0f64.sqrt();
        let expected = ((1.0 + s5 + (2.0 + 2.0 * s5).sqrt()) / 2.0).ln();
        let got = poisson_beta_bar(1.0).unwrap();
        assert!((got - expected).abs() < 1e-14);

        // generic-solver cross-check at λ = 2
        let bound = beta_bar_c(&poisson_truncated(2.0, 200).unwrap()).unwrap();
        assert!((poisson_beta_bar(2.0).unwrap() - bound.beta_bar).abs() < 1e-6);

        // stationarity: tanh(β̄)·λ·√cosh(β̄) = 1
        for lambda in [0.5, 1.0, 3.0] {
            let b = poisson_beta_bar(lambda).unwrap();
            assert!((b.tanh() * lambda * b.cosh().sqrt() - 1.0).abs() < 1e-10);
        }

        assert!(poisson_beta_bar(0.0).is_err());
    }

    #[test]
    fn geometric_closed_form() {
        // quartic bracket holds across the parameter range
        for i in 1..=9 {
            let p = i as f64 / 10.0;
            let r = 1.0 - p;
            let f = |x: f64| 3.0 * r * r * x.powi(4) + 2.0 * r * x.powi(3) - x * x - 4.0 * r * r;
            assert!(f(1.0) <= 0.0);
            assert!(f(1.0 / r) >= 0.0);
            // finiteness: β̄ below the exponential-moment boundary
            let b = geometric_beta_bar(p).unwrap();
            assert!(b < -2.0 * r.ln(), "p = {p}");
        }

        let bound = beta_bar_c(&geometric(0.5, 400).unwrap()).unwrap();
        assert!((geometric_beta_bar(0.5).unwrap() - bound.beta_bar).abs() < 1e-5);

        assert!(geometric_beta_bar(0.0).is_err());
        assert!(geometric_beta_bar(1.0).is_err());
    }

    #[test]
    fn zero_temperature_keeps_base_law() {
        let d = two_atom();
        for b in [0.0, 0.4] {
            let result = pressure_iid(&params(0.0, b), &d, &IidOptions::default())
                .unwrap()
                .finite()
                .unwrap();
            assert!((result.pressure - (2.0 * b.cosh()).ln()).abs() < 1e-10);
            for (k, p) in d.iter() {
                assert!((result.optimizer_q.prob(k) - p).abs() < 1e-9);
            }
            assert!(result.entropy_cost.abs() < 1e-12);
            assert!(result.converged);
        }
    }

    #[test]
    fn subcritical_optimizer_is_the_tilted_law() {
        let d = two_atom();
        let beta = 0.4;
        let result = pressure_iid(&params(beta, 0.0), &d, &IidOptions::default())
            .unwrap()
            .finite()
            .unwrap();
        let tilted = d.tilt(beta);
        let tv: f64 = d
            .support()
            .iter()
            .map(|&k| (result.optimizer_q.prob(k) - tilted.prob(k)).abs())
            .sum::<f64>()
            / 2.0;
        assert!(tv < 1e-6, "total variation {tv}");

        // closed form at the tilted optimizer: log 2 + log E[cosh(β)^{D/2}]
        let c_beta: f64 = d
            .iter()
            .map(|(k, p)| p * beta.cosh().powf(k as f64 / 2.0))
            .sum();
        let expected = 2.0f64.ln() + c_beta.ln();
        assert!((result.pressure - expected).abs() < 1e-8);

        // strict dominance over the deterministic pressure at p
        let det = pressure(&params(beta, 0.0), &d).unwrap().pressure;
        assert!(result.pressure - det >= 1e-4);
    }

    #[test]
    fn point_mass_collapses_to_deterministic() {
        let d = dirac(3);
        for (beta, b) in [(0.4, 0.0), (0.9, 0.2)] {
            let iid = pressure_iid(&params(beta, b), &d, &IidOptions::default())
                .unwrap()
                .finite()
                .unwrap();
            let det = pressure(&params(beta, b), &d).unwrap();
            assert!((iid.pressure - det.pressure).abs() < 1e-10);
            assert_eq!(iid.optimizer_q.support(), d.support());
            assert!(iid.entropy_cost.abs() < 1e-14);
        }
    }

    #[test]
    fn infinite_pressure_sentinel() {
        let d = geometric(0.5, 100).unwrap();
        // boundary −2 log(0.5) ≈ 1.386
        let result = pressure_iid(&params(1.5, 0.0), &d, &IidOptions::default()).unwrap();
        assert!(matches!(result, IidPressure::Infinite { .. }));
        assert!(result.value().is_infinite());

        let fine = pressure_iid(&params(1.0, 0.0), &d, &IidOptions::default()).unwrap();
        assert!(fine.value().is_finite());
    }

    #[test]
    fn q_gradient_closed_forms() {
        let d = two_atom();
        // s ≡ 1/2, B = 0: log 2 + (i/2)·log((1 + e^{−2β})/2)
        let beta = 0.7;
        let q = d.tilt(beta);
        let s = vec![0.5; q.len()];
        for (i, _) in q.iter() {
            let got = q_gradient(i, &s, &q, &params(beta, 0.0));
            let expected = 2.0f64.ln() + i as f64 / 2.0 * ((1.0 + (-2.0 * beta).exp()) / 2.0).ln();
            assert!((got - expected).abs() < 1e-10, "degree {i}");
        }
        // β = 0 flattens the rate term entirely
        for (i, _) in d.iter() {
            let got = q_gradient(i, &vec![0.5; d.len()], &d, &params(0.0, 0.0));
            assert!((got - 2.0f64.ln()).abs() < 1e-14);
        }
    }

    #[test]
    fn q_gradient_matches_finite_differences() {
        let d = two_atom();
        let p = params(0.6, 0.15);
        let q = d.tilt(0.3);
        let s: Vec<f64> = q
            .support()
            .iter()
            .map(|&k| crate::deterministic::occupation(0.8, p.field(), k))
            .collect();
        let support = q.support().to_vec();
        let weights: Vec<f64> = q.probs().to_vec();
        let h = 1e-6;
        for (idx, &i) in support.iter().enumerate() {
            let grad = q_gradient(i, &s, &q, &p);
            let mut plus = weights.clone();
            plus[idx] += h;
            let mut minus = weights.clone();
            minus[idx] -= h;
            let fd = (g_functional_q(&s, &support, &plus, &p)
                - g_functional_q(&s, &support, &minus, &p))
                / (2.0 * h);
            assert!((grad - fd).abs() < 1e-5, "degree {i}: {grad} vs {fd}");
        }
    }

    #[test]
    fn poisson_base_law_runs_through_the_zero_degree_path() {
        let d = poisson_truncated(1.0, 60).unwrap();
        let result = pressure_iid(&params(0.5, 0.0), &d, &IidOptions::default())
            .unwrap()
            .finite()
            .unwrap();
        assert!(result.zero_degree_mass > 0.0);
        assert!(result.pressure.is_finite());
        // subcritical closed form still applies with mass at zero
        let c_beta: f64 = d
            .iter()
            .map(|(k, p)| p * 0.5f64.cosh().powf(k as f64 / 2.0))
            .sum();
        assert!((result.pressure - (2.0f64.ln() + c_beta.ln())).abs() < 1e-7);
    }
}
