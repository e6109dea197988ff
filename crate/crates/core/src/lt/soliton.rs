use super::LtError;

/// Default robust-soliton tuning constant.
pub const DEFAULT_C: f64 = 0.1;
/// Default robust-soliton failure-probability parameter.
pub const DEFAULT_DELTA: f64 = 0.5;

/// Parameters of the robust soliton distribution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolitonParams {
    /// Source symbols per block.
    pub n: usize,
    pub c: f64,
    pub delta: f64,
}

impl SolitonParams {
    pub fn new(n: usize, c: f64, delta: f64) -> Result<Self, LtError> {
        let p = Self { n, c, delta };
        p.validate()?;
        Ok(p)
    }

    pub fn with_defaults(n: usize) -> Result<Self, LtError> {
        Self::new(n, DEFAULT_C, DEFAULT_DELTA)
    }

    pub fn validate(&self) -> Result<(), LtError> {
        if self.n == 0 {
            return Err(LtError::InvalidParameter("n must be at least 1".into()));
        }
        if !(self.c > 0.0 && self.c.is_finite()) {
            return Err(LtError::InvalidParameter(format!("c must be positive, got {}", self.c)));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(LtError::InvalidParameter(format!(
                "delta must lie in (0, 1), got {}",
                self.delta
            )));
        }
        Ok(())
    }

    /// Expected ripple size `c * sqrt(n) * ln(n / delta)`.
    pub fn ripple(&self) -> f64 {
        let n = self.n as f64;
        self.c * n.sqrt() * (n / self.delta).ln()
    }

    /// Degree carrying the spike term, `ceil(n / ripple)` capped at `n`.
    pub fn spike(&self) -> usize {
        let s = (self.n as f64 / self.ripple()).ceil();
        if s >= self.n as f64 {
            self.n
        } else {
            (s as usize).max(1)
        }
    }
}

/// Probability mass over degrees `1..=n` with its cumulative form.
#[derive(Debug, Clone, PartialEq)]
pub struct DegreeDistribution {
    pmf: Vec<f64>,
    cdf: Vec<f64>,
}

impl DegreeDistribution {
    /// Builds from an unnormalized nonnegative weight vector indexed by degree - 1.
    pub fn from_weights(weights: Vec<f64>) -> Result<Self, LtError> {
        if weights.is_empty() {
            return Err(LtError::InvalidParameter("empty distribution".into()));
        }
        if let Some(d) = weights.iter().position(|w| !(w.is_finite() && *w >= 0.0)) {
            return Err(LtError::InvalidParameter(format!(
                "negative or non-finite mass at degree {}",
                d + 1
            )));
        }
        let total: f64 = weights.iter().sum();
        let pmf: Vec<f64> = weights.iter().map(|w| w / total).collect();
        let mut acc = 0.0;
        let mut cdf: Vec<f64> = pmf
            .iter()
            .map(|p| {
                acc += p;
                acc
            })
            .collect();
        // Rounding can leave the tail at 1 - 1e-16; pin it so sampling never runs off the end.
        *cdf.last_mut().unwrap() = 1.0;
        Ok(Self { pmf, cdf })
    }

    /// Largest degree `n`.
    pub fn n(&self) -> usize {
        self.pmf.len()
    }

    /// `pmf()[d - 1]` is the probability of degree `d`.
    pub fn pmf(&self) -> &[f64] {
        &self.pmf
    }

    pub fn cdf(&self) -> &[f64] {
        &self.cdf
    }

    pub fn prob(&self, degree: usize) -> f64 {
        if degree == 0 || degree > self.n() {
            0.0
        } else {
            self.pmf[degree - 1]
        }
    }

    /// Inverse-cdf lookup: smallest degree `d` with `u < cdf(d)`.
    pub fn degree_for(&self, u: f64) -> usize {
        let idx = self.cdf.partition_point(|&c| c <= u);
        (idx + 1).min(self.n())
    }

    pub fn mean_degree(&self) -> f64 {
        self.pmf.iter().enumerate().map(|(i, p)| (i + 1) as f64 * p).sum()
    }
}

fn ideal_weights(n: usize) -> Vec<f64> {
    (1..=n)
        .map(|j| {
            if j == 1 {
                1.0 / n as f64
            } else {
                let j = j as f64;
                1.0 / (j * (j - 1.0))
            }
        })
        .collect()
}

/// Ideal soliton: `P(1) = 1/n`, `P(j) = 1/(j(j-1))`.
pub fn ideal_soliton(n: usize) -> Result<DegreeDistribution, LtError> {
    if n == 0 {
        return Err(LtError::InvalidParameter("n must be at least 1".into()));
    }
    DegreeDistribution::from_weights(ideal_weights(n))
}

/// Robust soliton: ideal soliton plus the ripple-keeping term, renormalized.
///
/// With `R = c sqrt(n) ln(n/delta)` and spike `s = min(ceil(n/R), n)`, the extra
/// mass is `R/(j n)` for `j < s`, `R ln(R/delta)/n` at `j = s`, and zero above.
pub fn robust_soliton(params: SolitonParams) -> Result<DegreeDistribution, LtError> {
    params.validate()?;
    let n = params.n;
    let r = params.ripple();
    if r >= n as f64 {
        return Err(LtError::InvalidParameter(format!(
            "ripple {r:.3} must be below n = {n}"
        )));
    }
    let spike = params.spike();
    let nf = n as f64;
    let mut weights = ideal_weights(n);
    for (i, w) in weights.iter_mut().enumerate() {
        let j = i + 1;
        if j < spike {
            *w += r / (j as f64 * nf);
        } else if j == spike {
            *w += r * (r / params.delta).ln() / nf;
        }
    }
    DegreeDistribution::from_weights(weights)
}
