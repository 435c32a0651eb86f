//! Small numeric helpers shared across modules.

/// Streaming log-sum-exp accumulator with O(1) state.
///
/// Terms are added as logarithms; the running maximum is used as the shift so
/// the accumulated sum never overflows.
#[derive(Debug, Clone, Copy)]
pub(crate) struct LogSumExp {
    max: f64,
    sum: f64,
}

impl LogSumExp {
    pub fn new() -> Self {
        LogSumExp {
            max: f64::NEG_INFINITY,
            sum: 0.0,
        }
    }

    pub fn add(&mut self, log_term: f64) {
        if log_term == f64::NEG_INFINITY {
            return;
        }
        if log_term <= self.max {
            self.sum += (log_term - self.max).exp();
        } else {
            self.sum = self.sum * (self.max - log_term).exp() + 1.0;
            self.max = log_term;
        }
    }

    pub fn value(&self) -> f64 {
        if self.max == f64::NEG_INFINITY {
            f64::NEG_INFINITY
        } else {
            self.max + self.sum.ln()
        }
    }
}

/// Neville polynomial extrapolation of `points` to abscissa `x`.
pub(crate) fn neville(points: &[(f64, f64)], x: f64) -> f64 {
    let n = points.len();
    assert!(n > 0, "neville: empty point set");
    let mut p: Vec<f64> = points.iter().map(|&(_, y)| y).collect();
    for level in 1..n {
        for i in 0..n - level {
            let (xi, _) = points[i];
            let (xj, _) = points[i + level];
            p[i] = ((x - xj) * p[i] - (x - xi) * p[i + 1]) / (xi - xj);
        }
    }
    p[0]
}

/// SplitMix64: tiny deterministic generator for reproducible restart points.
#[derive(Debug, Clone)]
pub(crate) struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        SplitMix64 { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9e37_79b9_7f4a_7c15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        z ^ (z >> 31)
    }

    /// Uniform in (0, 1).
    pub fn next_unit(&mut self) -> f64 {
        ((self.next_u64() >> 11) as f64 + 0.5) / (1u64 << 53) as f64
    }
}
