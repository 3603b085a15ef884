//! Discrete microfoundation: a linear system driven by independent impulses
//! `Δη_k` at times `t_k`, with mean `a_k Δt_k` and variance `b_k² Δt_k`.
//! Impulses are drawn Gaussian.

use crate::error::{invalid, Error, Result};
use crate::rng::StreamKey;

#[derive(Debug, Clone, PartialEq)]
pub struct Impulse {
    pub time: f64,
    /// Mean rate `a_k`.
    pub mean_rate: f64,
    /// Volatility `b_k > 0`.
    pub vol: f64,
    /// Interval `Δt_k > 0`.
    pub dt: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ImpulseModel {
    impulses: Vec<Impulse>,
}

impl ImpulseModel {
    pub fn new(impulses: Vec<Impulse>) -> Result<Self> {
        if impulses.is_empty() {
            return Err(invalid("impulses", "at least one impulse is required"));
        }
        for (i, imp) in impulses.iter().enumerate() {
            if !(imp.vol > 0.0) {
                return Err(Error::NonPositiveVolatility {
                    t: imp.time,
                    value: imp.vol,
                });
            }
            if !(imp.dt > 0.0) {
                return Err(invalid(
                    "impulses",
                    format!("impulse {i} has dt = {}", imp.dt),
                ));
            }
        }
        if let Some(i) = impulses.windows(2).position(|w| !(w[1].time > w[0].time)) {
            return Err(Error::NonMonotoneTime {
                index: i + 1,
                prev: impulses[i].time,
                next: impulses[i + 1].time,
            });
        }
        Ok(Self { impulses })
    }

    /// Impulses at `t0 + kΔ`, `k = 0..n`, with rates sampled from closures.
    pub fn uniform(
        t0: f64,
        dt: f64,
        n: usize,
        mean_rate: impl Fn(f64) -> f64,
        vol: impl Fn(f64) -> f64,
    ) -> Result<Self> {
        Self::new(
            (0..n)
                .map(|k| {
                    let time = t0 + k as f64 * dt;
                    Impulse {
                        time,
                        mean_rate: mean_rate(time),
                        vol: vol(time),
                        dt,
                    }
                })
                .collect(),
        )
    }

    pub fn impulses(&self) -> &[Impulse] {
        &self.impulses
    }

    fn active(&self, t: f64) -> Result<impl Iterator<Item = (usize, &Impulse)>> {
        let first = self.impulses[0].time;
        if t < first {
            return Err(invalid(
                "t",
                format!("t = {t} precedes the first impulse at {first}"),
            ));
        }
        Ok(self
            .impulses
            .iter()
            .enumerate()
            .take_while(move |(_, imp)| imp.time <= t))
    }

    /// `Σ a_k Δt_k` over impulses up to `t`.
    pub fn mean(&self, t: f64) -> Result<f64> {
        Ok(self.active(t)?.map(|(_, i)| i.mean_rate * i.dt).sum())
    }

    /// `Σ b_k² Δt_k` over impulses up to `t`.
    pub fn variance(&self, t: f64) -> Result<f64> {
        Ok(self.active(t)?.map(|(_, i)| i.vol * i.vol * i.dt).sum())
    }
}

/// One realization of `ξ(t) = Σ_{t_k ≤ t} Δη(t_k)`.
pub fn simulate_impulse_sum(
    model: &ImpulseModel,
    t: f64,
    key: impl Into<StreamKey>,
) -> Result<f64> {
    let key = key.into();
    Ok(model
        .active(t)?
        .map(|(k, imp)| imp.mean_rate * imp.dt + imp.vol * imp.dt.sqrt() * key.normal(k as u64))
        .sum())
}
