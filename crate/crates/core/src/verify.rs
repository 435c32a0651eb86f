//! The invariant suite behind the `verify` command.
//!
//! Every module-level invariant is packaged as a named check returning a
//! pass/fail verdict plus a one-line detail, so the CLI can print a table
//! and exit nonzero on any violation. All checks are deterministic.

use crate::degree::{
    dirac, geometric, make_distribution, poisson_truncated, relative_entropy, DegreeDistribution,
};
use crate::deterministic::{
    self, critical_beta, direct_ascent_pressure, pressure, select_root, solve_w, solve_w_with,
    ModelParams, SolveOptions,
};
use crate::iid::{self, beta_bar_c, pressure_iid, q_gradient, IidOptions};
use crate::kernel::{self, big_f_beta, big_f_beta_prime, log_g_beta};
use crate::numeric::SplitMix64;
use crate::oracle::{self, OracleInstance};

#[derive(Debug, Clone)]
pub struct CheckResult {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

impl CheckResult {
    fn new(name: &'static str, passed: bool, detail: String) -> Self {
        CheckResult {
            name,
            passed,
            detail,
        }
    }
}

pub fn all_passed(results: &[CheckResult]) -> bool {
    results.iter().all(|r| r.passed)
}

/// Run the whole suite.
pub fn run_all() -> Vec<CheckResult> {
    let mut out = Vec::new();
    out.extend(degree_checks());
    out.extend(kernel_checks());
    out.extend(deterministic_checks());
    out.extend(iid_checks());
    out.extend(oracle_checks());
    out
}

fn sample_distributions() -> Vec<DegreeDistribution> {
    vec![
        dirac(3),
        make_distribution(&[(1, 1.0), (2, 1.0)]).unwrap(),
        make_distribution(&[(1, 1.0), (3, 1.0)]).unwrap(),
        make_distribution(&[(2, 0.3), (3, 0.5), (7, 0.2)]).unwrap(),
        geometric(0.4, 60).unwrap(),
    ]
}

fn random_distribution(rng: &mut SplitMix64) -> DegreeDistribution {
    let atoms = 2 + (rng.next_u64() % 4) as usize;
    let mut pairs = Vec::new();
    let mut k = 1 + (rng.next_u64() % 3) as u32;
    for _ in 0..atoms {
        pairs.push((k, 0.05 + rng.next_unit()));
        k += 1 + (rng.next_u64() % 3) as u32;
    }
    make_distribution(&pairs).unwrap()
}

// ---------------------------------------------------------------------------

pub fn degree_checks() -> Vec<CheckResult> {
    let mut out = Vec::new();

    let mut worst: f64 = 0.0;
    for d in sample_distributions() {
        let q = d.tilt(0.0);
        for ((_, p), (_, pq)) in d.iter().zip(q.iter()) {
            worst = worst.max((p - pq).abs());
        }
    }
    out.push(CheckResult::new(
        "degree.tilt_zero_identity",
        worst <= 1e-15,
        format!("max component deviation {worst:.2e}"),
    ));

    let mut ok = true;
    let mut detail = String::new();
    for d in sample_distributions() {
        let nu0 = d.forward_degree_nu().unwrap();
        let mut prev = nu0;
        for i in 1..=8 {
            let beta = 0.25 * i as f64;
            let nu = d.tilt(beta).forward_degree_nu().unwrap();
            let strict_expected = !d.is_dirac();
            if nu < prev - 1e-12 || (strict_expected && nu <= prev) {
                ok = false;
                detail = format!("nu not increasing at beta {beta}");
            }
            if d.is_dirac() && (nu - nu0).abs() > 1e-12 {
                ok = false;
                detail = "tilt moved nu of a point mass".into();
            }
            prev = nu;
        }
    }
    out.push(CheckResult::new(
        "degree.nu_monotone_under_tilt",
        ok,
        if ok {
            "nondecreasing, strict off point masses".into()
        } else {
            detail
        },
    ));

    let mut rng = SplitMix64::new(11);
    let mut ok = true;
    let mut min_h = f64::INFINITY;
    for _ in 0..200 {
        let q = random_distribution(&mut rng);
        let p = random_distribution(&mut rng);
        let h = relative_entropy(&q, &p);
        if h.is_finite() {
            min_h = min_h.min(h);
            if h < -1e-12 {
                ok = false;
            }
        }
        if relative_entropy(&q, &q).abs() > 1e-15 {
            ok = false;
        }
    }
    out.push(CheckResult::new(
        "degree.gibbs_inequality",
        ok,
        format!("smallest finite divergence {min_h:.2e}"),
    ));

    let mut worst: f64 = 0.0;
    for d in sample_distributions() {
        let sb = d.size_biased().unwrap();
        let nu = d.forward_degree_nu().unwrap();
        worst = worst.max((sb.mean() - (nu + 1.0)).abs());
    }
    out.push(CheckResult::new(
        "degree.size_biased_mean",
        worst <= 1e-12,
        format!("max |E[D*] - (nu+1)| = {worst:.2e}"),
    ));

    out
}

// ---------------------------------------------------------------------------

pub fn kernel_checks() -> Vec<CheckResult> {
    let mut out = Vec::new();

    let mut exact = true;
    for m in [6usize, 14, 40, 60] {
        for k in 0..=m {
            for beta in [0.3, 1.1] {
                if log_g_beta(k, m, beta).unwrap() != log_g_beta(m - k, m, beta).unwrap() {
                    exact = false;
                }
            }
        }
    }
    out.push(CheckResult::new(
        "kernel.g_symmetry",
        exact,
        "log g(k,m) = log g(m-k,m) bit-exact".into(),
    ));

    let mut worst: f64 = 0.0;
    for i in 0..=20 {
        let t = i as f64 / 20.0;
        for beta in [0.4, 1.2] {
            worst = worst.max((big_f_beta(t, beta) - big_f_beta(1.0 - t, beta)).abs());
        }
    }
    out.push(CheckResult::new(
        "kernel.big_f_symmetry",
        worst <= 1e-11,
        format!("max asymmetry {worst:.2e}"),
    ));

    // scaled error m·|log g(⌊tm⌋, m)/m − F(t)| must not grow with m
    let mut ok = true;
    let mut worst_ratio: f64 = 0.0;
    for beta in [0.3, 0.8, 1.5] {
        for t in [0.1, 0.25, 0.5] {
            let scaled: Vec<f64> = [40usize, 80, 160, 320]
                .iter()
                .map(|&m| {
                    let k = (t * m as f64).floor() as usize;
                    let rate = log_g_beta(k, m, beta).unwrap() / m as f64;
                    m as f64 * (rate - big_f_beta(k as f64 / m as f64, beta)).abs()
                })
                .collect();
            let max = scaled.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let bound = 2.0 * scaled[0] + 1.0;
            worst_ratio = worst_ratio.max(max / bound);
            if max > bound {
                ok = false;
            }
        }
    }
    out.push(CheckResult::new(
        "kernel.asymptotic_rate",
        ok,
        format!("worst scaled-error ratio {worst_ratio:.3}"),
    ));

    let mut rng = SplitMix64::new(23);
    let mut worst: f64 = f64::NEG_INFINITY;
    for _ in 0..200 {
        let a = 5.0 * rng.next_unit();
        let b = a + 0.01 + 5.0 * rng.next_unit();
        let c = a + 5.0 * rng.next_unit();
        let d = c + (b - a) + 5.0 * rng.next_unit();
        let beta = 0.05 + 2.0 * rng.next_unit();
        let gap = d * big_f_beta(c / d, beta) - b * big_f_beta(a / b, beta);
        worst = worst.max(gap);
    }
    out.push(CheckResult::new(
        "kernel.truncation_inequality",
        worst <= 1e-10,
        format!("max d*F(c/d) - b*F(a/b) = {worst:.2e}"),
    ));

    // monotone decreasing on [0, 1/2], convex on [0, 1]
    let mut ok = true;
    for beta in [0.4, 1.0, 1.8] {
        let n = 101;
        let f: Vec<f64> = (0..=n)
            .map(|i| big_f_beta(i as f64 / n as f64, beta))
            .collect();
        for i in 1..=n / 2 {
            if f[i] > f[i - 1] + 1e-12 {
                ok = false;
            }
        }
        for i in 1..n {
            if f[i + 1] - 2.0 * f[i] + f[i - 1] < -1e-9 {
                ok = false;
            }
        }
    }
    out.push(CheckResult::new(
        "kernel.big_f_shape",
        ok,
        "decreasing to 1/2, nonnegative second differences".into(),
    ));

    let mut worst: f64 = 0.0;
    for m in [2usize, 4, 6, 8, 10, 12] {
        for k in 0..=m {
            let exact = kernel::crossing_distribution(k, m).unwrap();
            let brute = oracle::brute_force_crossing(k, m).unwrap();
            if exact.counts() != brute.counts() {
                worst = f64::INFINITY;
                continue;
            }
            for (j, lp) in exact.iter() {
                worst = worst.max((lp.exp() - brute.prob(j)).abs());
            }
        }
    }
    out.push(CheckResult::new(
        "kernel.crossing_vs_enumeration",
        worst <= 1e-12,
        format!("max probability deviation {worst:.2e}"),
    ));

    // derivative consistency: F' vs central differences
    let mut worst: f64 = 0.0;
    for beta in [0.5, 1.3] {
        for &t in &[0.15, 0.3, 0.45, 0.62, 0.8] {
            let h = 1e-5;
            let fd = (big_f_beta(t + h, beta) - big_f_beta(t - h, beta)) / (2.0 * h);
            worst = worst.max((big_f_beta_prime(t, beta) - fd).abs());
        }
    }
    out.push(CheckResult::new(
        "kernel.big_f_prime_consistency",
        worst <= 1e-6,
        format!("max |F' - central difference| = {worst:.2e}"),
    ));

    out
}

// ---------------------------------------------------------------------------

pub fn deterministic_checks() -> Vec<CheckResult> {
    let mut out = Vec::new();
    let two_atom = make_distribution(&[(1, 1.0), (3, 1.0)]).unwrap();
    let cases = [(dirac(3), 0.4), (dirac(3), 0.9), (two_atom.clone(), 0.7)];

    let mut worst: f64 = 0.0;
    for (dist, beta) in &cases {
        for b in [0.05, 0.3, 0.8] {
            let plus = pressure(&ModelParams::new(*beta, b).unwrap(), dist).unwrap();
            let minus = pressure(&ModelParams::new(*beta, -b).unwrap(), dist).unwrap();
            worst = worst.max((plus.pressure - minus.pressure).abs());
        }
    }
    out.push(CheckResult::new(
        "deterministic.pressure_even_in_field",
        worst <= 1e-12,
        format!("max |phi(B) - phi(-B)| = {worst:.2e}"),
    ));

    let mut worst: f64 = f64::INFINITY;
    for (dist, beta) in &cases {
        let n = 21;
        let phi: Vec<f64> = (0..n)
            .map(|i| {
                let b = -0.5 + i as f64 * 0.05;
                pressure(&ModelParams::new(*beta, b).unwrap(), dist)
                    .unwrap()
                    .pressure
            })
            .collect();
        for i in 1..n - 1 {
            worst = worst.min(phi[i + 1] - 2.0 * phi[i] + phi[i - 1]);
        }
    }
    out.push(CheckResult::new(
        "deterministic.pressure_convex_in_field",
        worst >= -1e-8,
        format!("smallest second difference {worst:.2e}"),
    ));

    // envelope magnetization vs finite differences, away from criticality
    let mut worst: f64 = 0.0;
    for (dist, beta, b) in [
        (&dirac(3), 0.3, 0.2),
        (&dirac(3), 0.9, 0.15),
        (&two_atom, 0.5, 0.4),
    ] {
        let h = 1e-5;
        let m = pressure(&ModelParams::new(beta, b).unwrap(), dist)
            .unwrap()
            .magnetization;
        let up = pressure(&ModelParams::new(beta, b + h).unwrap(), dist)
            .unwrap()
            .pressure;
        let down = pressure(&ModelParams::new(beta, b - h).unwrap(), dist)
            .unwrap()
            .pressure;
        worst = worst.max((m - (up - down) / (2.0 * h)).abs());
    }
    out.push(CheckResult::new(
        "deterministic.magnetization_matches_derivative",
        worst <= 1e-5,
        format!("max |M - dphi/dB| = {worst:.2e}"),
    ));

    let mut ok = true;
    for (dist, beta) in &cases {
        let zero = solve_w(&ModelParams::new(*beta, 0.0).unwrap(), dist).unwrap();
        if !zero.iter().any(|r| r.w == 1.0) {
            ok = false;
        }
        let positive = solve_w(&ModelParams::new(*beta, 0.05).unwrap(), dist).unwrap();
        if !positive.iter().all(|r| r.w < 1.0) {
            ok = false;
        }
    }
    out.push(CheckResult::new(
        "deterministic.root_location_bounds",
        ok,
        "w = 1 present iff B = 0".into(),
    ));

    let mut ok = true;
    for dist in [dirac(3), two_atom.clone()] {
        let mut prev = f64::NEG_INFINITY;
        for i in 0..=24 {
            let beta = i as f64 * 0.05;
            let phi = pressure(&ModelParams::new(beta, 0.0).unwrap(), &dist)
                .unwrap()
                .pressure;
            if phi < prev - 1e-12 {
                ok = false;
            }
            prev = phi;
        }
    }
    out.push(CheckResult::new(
        "deterministic.pressure_monotone_in_beta",
        ok,
        "nondecreasing at B = 0".into(),
    ));

    let mut ok = true;
    let roots = solve_w(&ModelParams::new(0.9, 0.0).unwrap(), &dirac(3)).unwrap();
    let base = select_root(&roots);
    for shift in [-3.0, 0.002, 11.0] {
        let shifted: Vec<_> = roots
            .iter()
            .map(|r| {
                let mut r = r.clone();
                r.g_value += shift;
                r
            })
            .collect();
        if select_root(&shifted) != base {
            ok = false;
        }
    }
    out.push(CheckResult::new(
        "deterministic.argmax_shift_invariance",
        ok,
        "selected root unchanged under constant shifts of G".into(),
    ));

    let mut worst: f64 = 0.0;
    let mut ok = true;
    for (dist, beta, b) in [
        (&dirac(3), 0.9, 0.02),
        (&dirac(3), 0.4, 0.0),
        (&two_atom, 1.1, 0.1),
    ] {
        let p = ModelParams::new(beta, b).unwrap();
        let coarse = solve_w_with(&p, dist, &SolveOptions::default()).unwrap();
        let fine = solve_w_with(
            &p,
            dist,
            &SolveOptions {
                grid_size: 4096,
                ..SolveOptions::default()
            },
        )
        .unwrap();
        if coarse.len() != fine.len() {
            ok = false;
            continue;
        }
        for (a, b) in coarse.iter().zip(&fine) {
            worst = worst.max((a.w - b.w).abs());
        }
    }
    out.push(CheckResult::new(
        "deterministic.grid_self_consistency",
        ok && worst <= 1e-9,
        format!("max root shift under grid doubling {worst:.2e}"),
    ));

    let mut worst: f64 = 0.0;
    for (dist, beta, b) in [
        (&dirac(3), 0.4, 0.0),
        (&dirac(3), 0.9, 0.1),
        (&two_atom, 0.7, 0.05),
    ] {
        let p = ModelParams::new(beta, b).unwrap();
        let via_roots = pressure(&p, dist).unwrap().pressure;
        let via_ascent = direct_ascent_pressure(&p, dist, 5, 1e-10).unwrap();
        worst = worst.max((via_roots - via_ascent).abs());
    }
    out.push(CheckResult::new(
        "deterministic.ascent_cross_check",
        worst <= 1e-8,
        format!("max |root family - direct ascent| = {worst:.2e}"),
    ));

    out
}

// ---------------------------------------------------------------------------

pub fn iid_checks() -> Vec<CheckResult> {
    let mut out = Vec::new();
    let two_atom = make_distribution(&[(1, 1.0), (3, 1.0)]).unwrap();
    let opts = IidOptions::default();

    let mut ok = true;
    let mut detail = String::new();
    for d in [two_atom.clone(), geometric(0.4, 80).unwrap()] {
        if let Some(bound) = beta_bar_c(&d) {
            let quenched = critical_beta(&d);
            if bound.beta_bar >= quenched {
                ok = false;
                detail = "bound not below the quenched value".into();
            }
        } else {
            ok = false;
            detail = "no bound found".into();
        }
    }
    // equality on point masses
    if let Some(bound) = beta_bar_c(&dirac(4)) {
        if (bound.beta_bar - critical_beta(&dirac(4))).abs() > 1e-9 {
            ok = false;
            detail = "point-mass bound should equal atanh(1/nu)".into();
        }
    } else {
        ok = false;
    }
    out.push(CheckResult::new(
        "iid.critical_bound_dominated",
        ok,
        if ok {
            "beta_bar < atanh(1/nu) except on point masses".into()
        } else {
            detail
        },
    ));

    let mut min_gap: f64 = f64::INFINITY;
    let mut strict_gap: f64 = 0.0;
    let mut ok = true;
    for (beta, b) in [(0.2, 0.0), (0.4, 0.0), (0.6, 0.1), (0.9, 0.0)] {
        let p = ModelParams::new(beta, b).unwrap();
        let det = pressure(&p, &two_atom).unwrap().pressure;
        match pressure_iid(&p, &two_atom, &opts).unwrap() {
            iid::IidPressure::Finite(r) => {
                let gap = r.pressure - det;
                min_gap = min_gap.min(gap);
                if gap < -1e-9 {
                    ok = false;
                }
                if (beta, b) == (0.9, 0.0) {
                    strict_gap = gap;
                }
            }
            iid::IidPressure::Infinite { .. } => ok = false,
        }
    }
    if strict_gap <= 1e-4 {
        ok = false;
    }
    out.push(CheckResult::new(
        "iid.pressure_dominates_deterministic",
        ok,
        format!("min gap {min_gap:.2e}, supercritical gap {strict_gap:.2e}"),
    ));

    // stationarity of the reported optimizer: βi/2 + dG/dq_i − log(q_i/p_i)
    // must be constant across the support
    let beta = 0.4;
    let p = ModelParams::new(beta, 0.0).unwrap();
    let result = pressure_iid(&p, &two_atom, &opts)
        .unwrap()
        .finite()
        .unwrap();
    let q = &result.optimizer_q;
    let s = &result.inner.solution.occupation;
    let residuals: Vec<f64> = q
        .iter()
        .map(|(k, qk)| {
            0.5 * beta * k as f64 + q_gradient(k, s, q, &p) - (qk / two_atom.prob(k)).ln()
        })
        .collect();
    let mean = residuals.iter().sum::<f64>() / residuals.len() as f64;
    let spread = residuals
        .iter()
        .map(|r| (r - mean).abs())
        .fold(0.0f64, f64::max);
    out.push(CheckResult::new(
        "iid.stationarity_residual",
        spread <= 1e-8,
        format!("Lagrange-condition spread {spread:.2e}"),
    ));

    let mut worst: f64 = 0.0;
    let fd_params = ModelParams::new(0.6, 0.15).unwrap();
    let q = two_atom.tilt(0.3);
    let s: Vec<f64> = q
        .support()
        .iter()
        .map(|&k| deterministic::occupation(0.8, fd_params.field(), k))
        .collect();
    let support = q.support().to_vec();
    let weights = q.probs().to_vec();
    for (idx, &i) in support.iter().enumerate() {
        let grad = q_gradient(i, &s, &q, &fd_params);
        let h = 1e-6;
        let mut plus = weights.clone();
        plus[idx] += h;
        let mut minus = weights.clone();
        minus[idx] -= h;
        let fd = (iid::g_functional_q(&s, &support, &plus, &fd_params)
            - iid::g_functional_q(&s, &support, &minus, &fd_params))
            / (2.0 * h);
        worst = worst.max((grad - fd).abs());
    }
    out.push(CheckResult::new(
        "iid.qgradient_matches_fd",
        worst <= 1e-5,
        format!("max |grad - central difference| = {worst:.2e}"),
    ));

    // doubling the truncation must move the pressure by less than 10x the
    // tilted tail mass; a short truncation keeps the tail measurable
    let beta = 0.5;
    let lambda = 3.0;
    let p = ModelParams::new(beta, 0.0).unwrap();
    let coarse = poisson_truncated(lambda, 10).unwrap();
    let fine = poisson_truncated(lambda, 20).unwrap();
    let tail = tilted_tail_mass(lambda, beta, 10);
    let phi_coarse = pressure_iid(&p, &coarse, &opts).unwrap().value();
    let phi_fine = pressure_iid(&p, &fine, &opts).unwrap().value();
    let delta = (phi_fine - phi_coarse).abs();
    out.push(CheckResult::new(
        "iid.kmax_stability",
        delta < 10.0 * tail,
        format!(
            "|delta phi| = {delta:.2e} vs 10x tail mass {:.2e}",
            10.0 * tail
        ),
    ));

    out
}

/// Mass beyond `kmax` of the tilted Poisson law: tilting Poisson(λ) by
/// cosh(β)^{k/2} gives Poisson(λ√cosh β) after renormalization.
fn tilted_tail_mass(lambda: f64, beta: f64, kmax: u32) -> f64 {
    let tilted_rate = lambda * beta.cosh().sqrt();
    let mut term = (-tilted_rate).exp();
    let mut kept = 0.0;
    for i in 0..=kmax {
        kept += term;
        term *= tilted_rate / (i as f64 + 1.0);
    }
    (1.0 - kept).max(f64::MIN_POSITIVE)
}

// ---------------------------------------------------------------------------

pub fn oracle_checks() -> Vec<CheckResult> {
    let mut out = Vec::new();

    let mut worst: f64 = 0.0;
    for degrees in [
        vec![1u32, 1],
        vec![2, 2],
        vec![1, 1, 2],
        vec![3, 3, 3, 3],
        vec![1, 2, 3],
    ] {
        let inst = OracleInstance::from_degrees(degrees).unwrap();
        for (beta, b) in [(0.5, 0.2), (1.3, -0.2), (0.8, 0.0)] {
            let p = ModelParams::new(beta, b).unwrap();
            let formula = oracle::log_annealed_z(&inst, &p).unwrap();
            let brute = oracle::brute_force_z(&inst, &p).unwrap();
            worst = worst.max((formula - brute).abs());
        }
    }
    out.push(CheckResult::new(
        "oracle.cross_identity",
        worst <= 1e-10,
        format!("max |subset formula - exhaustive| = {worst:.2e}"),
    ));

    let inst = OracleInstance::from_degrees(vec![1, 2, 3, 4]).unwrap();
    let mut exact = true;
    for (beta, b) in [(0.6, 0.25), (1.1, 0.4)] {
        let plus = oracle::log_annealed_z(&inst, &ModelParams::new(beta, b).unwrap()).unwrap();
        let minus = oracle::log_annealed_z(&inst, &ModelParams::new(beta, -b).unwrap()).unwrap();
        if plus != minus {
            exact = false;
        }
    }
    out.push(CheckResult::new(
        "oracle.field_symmetry",
        exact,
        "log E[Z](B) = log E[Z](-B) bit-exact".into(),
    ));

    // finite-size pressure approaches the limit like log n / n
    let r = 3u32;
    let beta = 0.9 * (1.0 / (r as f64 - 1.0)).atanh();
    let p = ModelParams::new(beta, 0.0).unwrap();
    let limit = 2.0f64.ln() + r as f64 / 2.0 * beta.cosh().ln();
    let scaled: Vec<f64> = [8usize, 16, 32, 64]
        .iter()
        .map(|&n| {
            let inst = OracleInstance::from_degrees(vec![r; n]).unwrap();
            let err = (oracle::psi_n(&inst, &p).unwrap() - limit).abs();
            err * n as f64 / (n as f64).ln()
        })
        .collect();
    let bound = 2.0 * scaled[0] + 0.1;
    let max = scaled.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    out.push(CheckResult::new(
        "oracle.finite_size_convergence",
        max <= bound,
        format!("scaled errors n/log(n)*|psi_n - phi| peak at {max:.3}"),
    ));

    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn full_suite_passes() {
        let results = run_all();
        for r in &results {
            assert!(r.passed, "{} failed: {}", r.name, r.detail);
        }
        assert!(all_passed(&results));
        assert!(results.len() >= 20);
    }
}
