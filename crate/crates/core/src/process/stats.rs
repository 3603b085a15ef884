use crate::error::{Error, Result};

/// Sample mean and variance with their standard errors.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McStats {
    pub n: usize,
    pub mean: f64,
    /// Unbiased (n - 1 divisor).
    pub variance: f64,
    pub mean_se: f64,
    /// From the fourth central moment: `sqrt((m4 - (n-3)/(n-1) s⁴) / n)`.
    pub variance_se: f64,
}

impl McStats {
    /// True when `value` is within `k` standard errors of the sample mean.
    pub fn mean_within(&self, value: f64, k: f64) -> bool {
        (self.mean - value).abs() <= k * self.mean_se
    }

    pub fn variance_within(&self, value: f64, k: f64) -> bool {
        (self.variance - value).abs() <= k * self.variance_se
    }
}

/// Reduces in index order, so the result is a deterministic function of the
/// input ordering.
pub fn mc_statistics(values: &[f64]) -> Result<McStats> {
    let n = values.len();
    if n < 2 {
        return Err(Error::TooFewSamples(n));
    }
    let nf = n as f64;
    let mean = values.iter().sum::<f64>() / nf;
    let (mut m2, mut m4) = (0.0, 0.0);
    for &x in values {
        let d = x - mean;
        let d2 = d * d;
        m2 += d2;
        m4 += d2 * d2;
    }
    let variance = m2 / (nf - 1.0);
    let m4 = m4 / nf;
    let var_of_var = ((m4 - (nf - 3.0) / (nf - 1.0) * variance * variance) / nf).max(0.0);
    Ok(McStats {
        n,
        mean,
        variance,
        mean_se: (variance / nf).sqrt(),
        variance_se: var_of_var.sqrt(),
    })
}
