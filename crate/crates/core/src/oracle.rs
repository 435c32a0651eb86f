//! Exact finite-size computations.
//!
//! Two independent routes to E[Z_n] for a fixed degree sequence:
//!
//! * [`log_annealed_z`] evaluates the closed subset formula
//!   E[Z_n] = e^{(βE[D_n]/2 − B)n} Σ_{(j_k)≤(n_k)} Π_k C(n_k, j_k)
//!   e^{2BΣj_k} g_β(Σ k j_k, ℓ_n) by mixed-radix enumeration of the degree
//!   occupation multi-index, entirely in log scale;
//! * [`brute_force_z`] enumerates all (ℓ_n−1)!! perfect matchings of the
//!   half-edges and all 2^n spin vectors on each resulting multigraph.
//!
//! Agreement of the two to 1e-10 validates the kernel combinatorics, the
//! subset grouping and the spin bookkeeping at once. Self-loops contribute
//! βσ_i² = β per pairing and multi-edges count with multiplicity: crossing
//! counts live on stub pairs, not simple edges, and the brute-force side must
//! follow the same convention for the identity to hold exactly.

use crate::degree::DegreeSequence;
use crate::deterministic::ModelParams;
use crate::error::{Error, Result};
use crate::kernel::{self, CrossingDistribution};
use crate::numeric::LogSumExp;

/// Caps for the exhaustive matching/spin enumeration.
pub const BRUTE_FORCE_STUB_CAP: u64 = 12;
pub const BRUTE_FORCE_VERTEX_CAP: usize = 10;
/// Budget for the multi-index enumeration of [`log_annealed_z`].
pub const SUBSET_BUDGET: u128 = 10_000_000;

/// A degree sequence together with its degree counts n_k.
#[derive(Debug, Clone)]
pub struct OracleInstance {
    seq: DegreeSequence,
    counts: Vec<(u32, u32)>,
}

impl OracleInstance {
    pub fn new(seq: DegreeSequence) -> Self {
        let counts = seq.counts().into_iter().collect();
        OracleInstance { seq, counts }
    }

    pub fn from_degrees(degrees: Vec<u32>) -> Result<Self> {
        Ok(OracleInstance::new(DegreeSequence::new(degrees)?))
    }

    pub fn sequence(&self) -> &DegreeSequence {
        &self.seq
    }

    /// (degree, multiplicity) pairs, ascending in degree.
    pub fn counts(&self) -> &[(u32, u32)] {
        &self.counts
    }

    pub fn n(&self) -> usize {
        self.seq.n()
    }

    pub fn total_degree(&self) -> u64 {
        self.seq.total_degree()
    }
}

/// log E[Z_n(β, B)] via the subset formula. Evaluated at |B|, which is exact:
/// flipping every spin maps the field B to −B and leaves E[Z_n] unchanged.
pub fn log_annealed_z(instance: &OracleInstance, params: &ModelParams) -> Result<f64> {
    let ell = instance.total_degree();
    if ell as usize > kernel::M_CAP {
        return Err(Error::BudgetExceeded(format!(
            "total degree {ell} exceeds the kernel cap {}",
            kernel::M_CAP
        )));
    }
    let mut states: u128 = 1;
    for &(_, nk) in instance.counts() {
        states = states.saturating_mul(nk as u128 + 1);
        if states > SUBSET_BUDGET {
            return Err(Error::BudgetExceeded(format!(
                "multi-index enumeration needs more than {SUBSET_BUDGET} states"
            )));
        }
    }

    let beta = params.beta();
    let b = params.field().abs();
    let n = instance.n() as f64;

    // log C(n_k, j) rows per degree class
    let log_binom: Vec<Vec<f64>> = instance
        .counts()
        .iter()
        .map(|&(_, nk)| {
            (0..=nk)
                .map(|j| kernel::log_binomial(nk as usize, j as usize))
                .collect()
        })
        .collect();

    // g_β(ℓ_A, ℓ_n) cache over the realized group degrees
    let mut log_g: Vec<Option<f64>> = vec![None; ell as usize + 1];

    let mut lse = LogSumExp::new();
    let classes = instance.counts().len();
    let mut index = vec![0u32; classes];
    loop {
        let mut log_choose = 0.0;
        let mut group_degree = 0usize;
        let mut group_size = 0u64;
        for (c, &j) in index.iter().enumerate() {
            log_choose += log_binom[c][j as usize];
            group_degree += instance.counts()[c].0 as usize * j as usize;
            group_size += j as u64;
        }
        let lg = match log_g[group_degree] {
            Some(v) => v,
            None => {
                let v = kernel::log_g_beta(group_degree, ell as usize, beta)?;
                log_g[group_degree] = Some(v);
                v
            }
        };
        lse.add(log_choose + 2.0 * b * group_size as f64 + lg);

        // mixed-radix increment of (j_k) bounded by (n_k)
        let mut c = 0;
        loop {
            if c == classes {
                let prefactor = beta * ell as f64 / 2.0 - b * n;
                return Ok(prefactor + lse.value());
            }
            index[c] += 1;
            if index[c] <= instance.counts()[c].1 {
                break;
            }
            index[c] = 0;
            c += 1;
        }
    }
}

/// Finite-size annealed pressure ψ_n = (1/n) log E[Z_n].
pub fn psi_n(instance: &OracleInstance, params: &ModelParams) -> Result<f64> {
    Ok(log_annealed_z(instance, params)? / instance.n() as f64)
}

/// log E[Z_n(β, B)] by exhaustive enumeration: all perfect matchings of the
/// labeled half-edges and all 2^n spin vectors per multigraph. Kept fully
/// independent of the subset formula, including the sign of B.
pub fn brute_force_z(instance: &OracleInstance, params: &ModelParams) -> Result<f64> {
    let ell = instance.total_degree();
    if ell > BRUTE_FORCE_STUB_CAP || instance.n() > BRUTE_FORCE_VERTEX_CAP {
        return Err(Error::BudgetExceeded(format!(
            "brute force handles at most {BRUTE_FORCE_STUB_CAP} stubs and {BRUTE_FORCE_VERTEX_CAP} vertices, got {} stubs on {} vertices",
            ell,
            instance.n()
        )));
    }
    let n = instance.n();
    let beta = params.beta();
    let b = params.field();

    // stub -> owning vertex
    let mut owner = Vec::with_capacity(ell as usize);
    for (v, &d) in instance.sequence().degrees().iter().enumerate() {
        for _ in 0..d {
            owner.push(v);
        }
    }

    // spin sums per configuration, reused across matchings
    let spins: Vec<Vec<f64>> = (0..1u32 << n)
        .map(|mask| {
            (0..n)
                .map(|v| if mask >> v & 1 == 1 { 1.0 } else { -1.0 })
                .collect()
        })
        .collect();
    let field_term: Vec<f64> = spins.iter().map(|s| b * s.iter().sum::<f64>()).collect();

    let mut z_sum = 0.0f64;
    let mut matchings = 0u64;
    let mut edges: Vec<(usize, usize)> = Vec::with_capacity(ell as usize / 2);
    enumerate_matchings(
        &(0..ell as usize).collect::<Vec<_>>(),
        &mut edges,
        &mut |edges| {
            matchings += 1;
            let mut z = 0.0;
            for (mask, s) in spins.iter().enumerate() {
                let mut energy = field_term[mask];
                for &(a, bb) in edges.iter() {
                    energy += beta * s[owner[a]] * s[owner[bb]];
                }
                z += energy.exp();
            }
            z_sum += z;
        },
    );
    debug_assert_eq!(
        matchings,
        double_factorial(ell as i64 - 1),
        "matching enumeration must produce (m-1)!! leaves"
    );
    Ok((z_sum / matchings as f64).ln())
}

/// Law of the crossing count by exhaustive matching enumeration; the
/// independent check of [`kernel::crossing_distribution`].
pub fn brute_force_crossing(k: usize, m: usize) -> Result<CrossingDistribution> {
    if !m.is_multiple_of(2) || k > m {
        return Err(Error::InvalidParameter(format!(
            "need even m and k <= m, got k={k} m={m}"
        )));
    }
    if m as u64 > BRUTE_FORCE_STUB_CAP {
        return Err(Error::BudgetExceeded(format!(
            "crossing enumeration handles at most {BRUTE_FORCE_STUB_CAP} stubs"
        )));
    }
    let mut tally = vec![0u64; m / 2 + 1];
    let mut edges = Vec::with_capacity(m / 2);
    enumerate_matchings(&(0..m).collect::<Vec<_>>(), &mut edges, &mut |edges| {
        let crossings = edges.iter().filter(|&&(a, b)| (a < k) != (b < k)).count();
        tally[crossings] += 1;
    });
    let total = double_factorial(m as i64 - 1) as f64;
    let mut counts = Vec::new();
    let mut log_probs = Vec::new();
    for (j, &c) in tally.iter().enumerate() {
        if c > 0 {
            counts.push(j);
            log_probs.push((c as f64 / total).ln());
        }
    }
    Ok(CrossingDistribution::from_parts(m, k, counts, log_probs))
}

/// Pair the lowest free stub with every larger free stub, recursively. The
/// recursion is canonical and duplicate-free with (m−1)!! leaves.
fn enumerate_matchings(
    free: &[usize],
    edges: &mut Vec<(usize, usize)>,
    visit: &mut impl FnMut(&[(usize, usize)]),
) {
    if free.is_empty() {
        visit(edges);
        return;
    }
    let first = free[0];
    for i in 1..free.len() {
        let partner = free[i];
        let mut rest: Vec<usize> = free[1..].to_vec();
        rest.remove(i - 1);
        edges.push((first, partner));
        enumerate_matchings(&rest, edges, visit);
        edges.pop();
    }
}

fn double_factorial(n: i64) -> u64 {
    let mut acc = 1u64;
    let mut i = n;
    while i > 1 {
        acc *= i as u64;
        i -= 2;
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::crossing_distribution;

    fn params(beta: f64, field: f64) -> ModelParams {
        ModelParams::new(beta, field).unwrap()
    }

    fn instance(degrees: &[u32]) -> OracleInstance {
        OracleInstance::from_degrees(degrees.to_vec()).unwrap()
    }

    #[test]
    fn zero_beta_decouples() {
        for degrees in [vec![1, 1], vec![2, 2], vec![3, 3, 3, 3], vec![1, 2, 3]] {
            let inst = instance(&degrees);
            let p = params(0.0, 0.4);
            let expected = inst.n() as f64 * (2.0 * 0.4f64.cosh()).ln();
            assert!((log_annealed_z(&inst, &p).unwrap() - expected).abs() < 1e-12);
            assert!((brute_force_z(&inst, &p).unwrap() - expected).abs() < 1e-12);
            assert!((psi_n(&inst, &p).unwrap() - (2.0 * 0.4f64.cosh()).ln()).abs() < 1e-12);
        }
    }

    #[test]
    fn single_edge_hand_count() {
        // one edge: spins ++, +-, -+, -- give e^{β±2B} and 2e^{−β}
        let inst = instance(&[1, 1]);
        for (beta, field) in [(0.5f64, 0.2f64), (1.3, 0.0), (0.7, -0.3)] {
            let expected = (2.0 * beta.exp() * (2.0 * field).cosh() + 2.0 * (-beta).exp()).ln();
            let p = params(beta, field);
            assert!((log_annealed_z(&inst, &p).unwrap() - expected).abs() < 1e-12);
            assert!((brute_force_z(&inst, &p).unwrap() - expected).abs() < 1e-12);
        }
    }

    #[test]
    fn oracles_agree_on_small_instances() {
        for degrees in [
            vec![2, 2],
            vec![1, 1, 2],
            vec![3, 3, 3, 3],
            vec![1, 2, 3],
            vec![2, 2, 2],
        ] {
            let inst = instance(&degrees);
            for (beta, field) in [(0.5, 0.2), (1.3, -0.2), (0.8, 0.0)] {
                let p = params(beta, field);
                let a = log_annealed_z(&inst, &p).unwrap();
                let b = brute_force_z(&inst, &p).unwrap();
                assert!(
                    (a - b).abs() < 1e-10,
                    "disagreement on {degrees:?} at ({beta}, {field}): {a} vs {b}"
                );
            }
        }
    }

    #[test]
    fn field_symmetry_is_exact() {
        let inst = instance(&[1, 2, 3]);
        let plus = log_annealed_z(&inst, &params(0.9, 0.35)).unwrap();
        let minus = log_annealed_z(&inst, &params(0.9, -0.35)).unwrap();
        assert_eq!(plus, minus);
    }

    #[test]
    fn crossing_enumeration_small_cases() {
        let d = brute_force_crossing(2, 4).unwrap();
        assert_eq!(d.counts(), &[0, 2]);
        assert!((d.prob(0) - 1.0 / 3.0).abs() < 1e-15);
        assert!((d.prob(2) - 2.0 / 3.0).abs() < 1e-15);

        let d = brute_force_crossing(0, 6).unwrap();
        assert_eq!(d.counts(), &[0]);
        assert!((d.prob(0) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn crossing_enumeration_matches_kernel_up_to_eight() {
        for m in [2usize, 4, 6, 8] {
            for k in 0..=m {
                let exact = crossing_distribution(k, m).unwrap();
                let brute = brute_force_crossing(k, m).unwrap();
                assert_eq!(exact.counts(), brute.counts(), "support at k={k} m={m}");
                for (j, lp) in exact.iter() {
                    assert!(
                        (lp.exp() - brute.prob(j)).abs() < 1e-12,
                        "P(X={j}) mismatch at k={k} m={m}"
                    );
                }
            }
        }
    }

    #[test]
    fn budget_errors() {
        let big = instance(&[3; 20]);
        assert!(matches!(
            brute_force_z(&big, &params(0.5, 0.0)),
            Err(Error::BudgetExceeded(_))
        ));
        assert!(matches!(
            brute_force_crossing(2, 40),
            Err(Error::BudgetExceeded(_))
        ));
        let huge = instance(&[2; 4000]);
        assert!(matches!(
            log_annealed_z(&huge, &params(0.5, 0.0)),
            Err(Error::BudgetExceeded(_))
        ));
    }

    #[test]
    fn psi_on_two_vertices() {
        let inst = instance(&[1, 1]);
        let p = params(0.6, 0.1);
        let z = log_annealed_z(&inst, &p).unwrap();
        assert!((psi_n(&inst, &p).unwrap() - z / 2.0).abs() < 1e-15);
    }
}
