//! Degree distributions and degree sequences.
//!
//! Finite-support probability mass functions over integer degrees, with the
//! operations the annealed analysis needs: moments, the size-biased law D*,
//! the cosh-tilted law q(β), relative entropy, and the exponential-moment
//! finiteness test for the untruncated families.

use crate::error::{Error, Result};
use crate::numeric::LogSumExp;
use serde::Deserialize;
use std::collections::BTreeMap;

/// Where a distribution came from. Truncated families keep their parameters
/// so the untruncated exponential-moment condition can still be evaluated.
#[derive(Debug, Clone, PartialEq)]
pub enum Provenance {
    Explicit,
    Dirac(u32),
    Poisson { lambda: f64, kmax: u32 },
    Geometric { p: f64, kmax: u32 },
    Empirical,
}

/// Finite-support degree distribution. Support is strictly increasing and all
/// stored probabilities are positive and sum to one.
#[derive(Debug, Clone, PartialEq)]
pub struct DegreeDistribution {
    support: Vec<u32>,
    probs: Vec<f64>,
    provenance: Provenance,
    /// Mass beyond the truncation point of the originating infinite family.
    truncated_tail: f64,
}

impl DegreeDistribution {
    fn from_normalized(
        support: Vec<u32>,
        probs: Vec<f64>,
        provenance: Provenance,
        truncated_tail: f64,
    ) -> Self {
        debug_assert!(support.windows(2).all(|w| w[0] < w[1]));
        debug_assert!((probs.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        DegreeDistribution {
            support,
            probs,
            provenance,
            truncated_tail,
        }
    }

    pub fn support(&self) -> &[u32] {
        &self.support
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn provenance(&self) -> &Provenance {
        &self.provenance
    }

    /// Pre-truncation tail mass of the originating family (zero for
    /// intrinsically finite distributions).
    pub fn truncated_tail(&self) -> f64 {
        self.truncated_tail
    }

    pub fn len(&self) -> usize {
        self.support.len()
    }

    pub fn is_empty(&self) -> bool {
        self.support.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (u32, f64)> + '_ {
        self.support.iter().copied().zip(self.probs.iter().copied())
    }

    pub fn prob(&self, k: u32) -> f64 {
        match self.support.binary_search(&k) {
            Ok(i) => self.probs[i],
            Err(_) => 0.0,
        }
    }

    pub fn min_degree(&self) -> u32 {
        self.support[0]
    }

    pub fn max_degree(&self) -> u32 {
        *self.support.last().unwrap()
    }

    pub fn is_dirac(&self) -> bool {
        self.support.len() == 1
    }

    /// E[D]
    pub fn mean(&self) -> f64 {
        self.iter().map(|(k, p)| k as f64 * p).sum()
    }

    /// E[D²]
    pub fn second_moment(&self) -> f64 {
        self.iter().map(|(k, p)| (k as f64).powi(2) * p).sum()
    }

    /// Expected forward degree ν = E[D(D−1)] / E[D].
    pub fn forward_degree_nu(&self) -> Result<f64> {
        let mean = self.mean();
        if mean <= 0.0 {
            return Err(Error::DegenerateDistribution(
                "forward degree needs a positive mean degree".into(),
            ));
        }
        let fact: f64 = self
            .iter()
            .map(|(k, p)| k as f64 * (k as f64 - 1.0) * p)
            .sum();
        Ok(fact / mean)
    }

    /// Size-biased law: P(D* = k) = k p_k / E[D]. Mass at degree 0 vanishes.
    pub fn size_biased(&self) -> Result<SizeBiasedDistribution> {
        let mean = self.mean();
        if mean <= 0.0 {
            return Err(Error::DegenerateDistribution(
                "size-biasing needs a positive mean degree".into(),
            ));
        }
        let mut support = Vec::new();
        let mut probs = Vec::new();
        for (k, p) in self.iter() {
            if k > 0 {
                support.push(k);
                probs.push(k as f64 * p / mean);
            }
        }
        Ok(SizeBiasedDistribution { support, probs })
    }

    /// Tilted law q_k(β) = p_k cosh(β)^{k/2} / c(β) with c(β) = E[cosh(β)^{D/2}].
    ///
    /// Computed in log scale so large supports and large β cannot overflow;
    /// the provenance tag is preserved.
    pub fn tilt(&self, beta: f64) -> DegreeDistribution {
        assert!(beta >= 0.0 && beta.is_finite(), "tilt needs beta >= 0");
        let log_cosh = beta.cosh().ln();
        let logs: Vec<f64> = self
            .iter()
            .map(|(k, p)| p.ln() + 0.5 * k as f64 * log_cosh)
            .collect();
        let mut lse = LogSumExp::new();
        for &t in &logs {
            lse.add(t);
        }
        let norm = lse.value();
        let probs: Vec<f64> = logs.iter().map(|t| (t - norm).exp()).collect();
        DegreeDistribution::from_normalized(
            self.support.clone(),
            probs,
            self.provenance.clone(),
            self.truncated_tail,
        )
    }
}

/// The law of the degree found at the end of a uniformly chosen half-edge.
#[derive(Debug, Clone, PartialEq)]
pub struct SizeBiasedDistribution {
    support: Vec<u32>,
    probs: Vec<f64>,
}

impl SizeBiasedDistribution {
    pub fn support(&self) -> &[u32] {
        &self.support
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn iter(&self) -> impl Iterator<Item = (u32, f64)> + '_ {
        self.support.iter().copied().zip(self.probs.iter().copied())
    }

    pub fn mean(&self) -> f64 {
        self.iter().map(|(k, p)| k as f64 * p).sum()
    }
}

/// Build a distribution from (degree, weight) pairs. Weights are normalized;
/// zero-weight pairs are dropped.
pub fn make_distribution(pairs: &[(u32, f64)]) -> Result<DegreeDistribution> {
    let mut seen = BTreeMap::new();
    for &(k, w) in pairs {
        if !w.is_finite() || w < 0.0 {
            return Err(Error::InvalidDistribution(format!(
                "weight {w} for degree {k} is not a finite nonnegative number"
            )));
        }
        if seen.insert(k, w).is_some() {
            return Err(Error::InvalidDistribution(format!(
                "degree {k} appears more than once"
            )));
        }
    }
    let total: f64 = seen.values().sum();
    if total <= 0.0 {
        return Err(Error::InvalidDistribution("all weights are zero".into()));
    }
    let mut support = Vec::new();
    let mut probs = Vec::new();
    for (k, w) in seen {
        if w > 0.0 {
            support.push(k);
            probs.push(w / total);
        }
    }
    let provenance = if support.len() == 1 {
        Provenance::Dirac(support[0])
    } else {
        Provenance::Explicit
    };
    Ok(DegreeDistribution::from_normalized(
        support, probs, provenance, 0.0,
    ))
}

/// Point mass at degree `k`.
pub fn dirac(k: u32) -> DegreeDistribution {
    DegreeDistribution::from_normalized(vec![k], vec![1.0], Provenance::Dirac(k), 0.0)
}

/// Poisson(λ) truncated to {0, …, kmax} and renormalized. The dropped tail
/// mass is recorded as a diagnostic.
pub fn poisson_truncated(lambda: f64, kmax: u32) -> Result<DegreeDistribution> {
    if !lambda.is_finite() || lambda <= 0.0 {
        return Err(Error::InvalidParameter(format!(
            "poisson intensity must be positive, got {lambda}"
        )));
    }
    // pmf accumulated by the recurrence p_{i+1} = p_i * λ / (i+1)
    let mut weights = Vec::with_capacity(kmax as usize + 1);
    let mut w = (-lambda).exp();
    for i in 0..=kmax {
        weights.push(w);
        w *= lambda / (i as f64 + 1.0);
    }
    let kept: f64 = weights.iter().sum();
    let tail = (1.0 - kept).max(0.0);
    let mut support = Vec::new();
    let mut probs = Vec::new();
    for (i, &wi) in weights.iter().enumerate() {
        if wi > 0.0 {
            support.push(i as u32);
            probs.push(wi / kept);
        }
    }
    Ok(DegreeDistribution::from_normalized(
        support,
        probs,
        Provenance::Poisson { lambda, kmax },
        tail,
    ))
}

/// Geometric(p) on {1, …, kmax}, p_i ∝ (1−p)^{i−1} p, renormalized.
pub fn geometric(p: f64, kmax: u32) -> Result<DegreeDistribution> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "geometric parameter must lie in (0,1), got {p}"
        )));
    }
    if kmax < 1 {
        return Err(Error::InvalidParameter(
            "geometric support needs kmax >= 1".into(),
        ));
    }
    let mut support = Vec::new();
    let mut weights = Vec::new();
    let mut w = p;
    for i in 1..=kmax {
        if w > 0.0 {
            support.push(i);
            weights.push(w);
        }
        w *= 1.0 - p;
    }
    let kept: f64 = weights.iter().sum();
    let tail = (1.0 - kept).max(0.0);
    let probs = weights.iter().map(|wi| wi / kept).collect();
    Ok(DegreeDistribution::from_normalized(
        support,
        probs,
        Provenance::Geometric { p, kmax },
        tail,
    ))
}

/// Relative entropy H(q | p) = Σ q_i log(q_i / p_i), with the convention
/// 0 log 0 = 0. Returns +∞ when the support of q escapes the support of p.
pub fn relative_entropy(q: &DegreeDistribution, p: &DegreeDistribution) -> f64 {
    let mut h = 0.0;
    for (k, qk) in q.iter() {
        if qk == 0.0 {
            continue;
        }
        let pk = p.prob(k);
        if pk == 0.0 {
            return f64::INFINITY;
        }
        h += qk * (qk / pk).ln();
    }
    h
}

/// Whether E[e^{βD/2}] is finite for the *untruncated* family behind `dist`.
///
/// Always true for dirac, Poisson and intrinsically finite distributions;
/// for geometric(p) the condition is β < −2 log(1−p).
pub fn exp_moment_condition(dist: &DegreeDistribution, beta: f64) -> bool {
    match dist.provenance() {
        Provenance::Geometric { p, .. } => beta < -2.0 * (1.0 - p).ln(),
        _ => true,
    }
}

/// A finite degree sequence. The total degree is kept even by bumping the
/// last entry when the raw sum is odd.
#[derive(Debug, Clone, PartialEq)]
pub struct DegreeSequence {
    degrees: Vec<u32>,
}

impl DegreeSequence {
    pub fn new(mut degrees: Vec<u32>) -> Result<Self> {
        if degrees.is_empty() {
            return Err(Error::InvalidParameter("empty degree sequence".into()));
        }
        if degrees.contains(&0) {
            return Err(Error::InvalidParameter(
                "degree sequence entries must be >= 1".into(),
            ));
        }
        let total: u64 = degrees.iter().map(|&d| d as u64).sum();
        if total % 2 == 1 {
            *degrees.last_mut().unwrap() += 1;
        }
        Ok(DegreeSequence { degrees })
    }

    pub fn degrees(&self) -> &[u32] {
        &self.degrees
    }

    pub fn n(&self) -> usize {
        self.degrees.len()
    }

    /// ℓ_n = Σ d_i (always even).
    pub fn total_degree(&self) -> u64 {
        self.degrees.iter().map(|&d| d as u64).sum()
    }

    /// n_k = #{i : d_i = k}
    pub fn counts(&self) -> BTreeMap<u32, u32> {
        let mut counts = BTreeMap::new();
        for &d in &self.degrees {
            *counts.entry(d).or_insert(0) += 1;
        }
        counts
    }

    /// Whitespace-separated positive integers.
    pub fn from_text(text: &str) -> Result<Self> {
        let mut degrees = Vec::new();
        for tok in text.split_whitespace() {
            let d: u32 = tok.parse().map_err(|_| {
                Error::InvalidParameter(format!("cannot parse degree entry {tok:?}"))
            })?;
            degrees.push(d);
        }
        DegreeSequence::new(degrees)
    }

    /// Empirical degree distribution p_k = n_k / n.
    pub fn empirical(&self) -> DegreeDistribution {
        let n = self.n() as f64;
        let counts = self.counts();
        let support: Vec<u32> = counts.keys().copied().collect();
        let probs: Vec<f64> = counts.values().map(|&c| c as f64 / n).collect();
        DegreeDistribution::from_normalized(support, probs, Provenance::Empirical, 0.0)
    }
}

/// JSON description of a degree distribution, e.g.
/// `{"family":"poisson","lambda":1.0,"kmax":200}` or
/// `{"family":"explicit","pairs":[[1,0.5],[2,0.5]]}`.
#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "family", rename_all = "lowercase", deny_unknown_fields)]
pub enum DistributionSpec {
    Dirac {
        degree: u32,
    },
    Poisson {
        lambda: f64,
        #[serde(default = "default_kmax")]
        kmax: u32,
    },
    Geometric {
        p: f64,
        #[serde(default = "default_kmax")]
        kmax: u32,
    },
    Explicit {
        pairs: Vec<(u32, f64)>,
    },
}

fn default_kmax() -> u32 {
    200
}

impl DistributionSpec {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text)
            .map_err(|e| Error::InvalidParameter(format!("bad distribution spec: {e}")))
    }

    pub fn build(&self) -> Result<DegreeDistribution> {
        match self {
            DistributionSpec::Dirac { degree } => Ok(dirac(*degree)),
            DistributionSpec::Poisson { lambda, kmax } => poisson_truncated(*lambda, *kmax),
            DistributionSpec::Geometric { p, kmax } => geometric(*p, *kmax),
            DistributionSpec::Explicit { pairs } => make_distribution(pairs),
        }
    }
}
