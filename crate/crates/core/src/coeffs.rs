//! Deterministic coefficient curves: drift `a(t)`, log-drift `A(t)` and
//! impulse volatility `b(t)`.
//!
//! Two families are supported, constants and piecewise-linear tables. Both
//! have exact integrals of the curve and of its square, which the rest of the
//! crate relies on for closed-form moments. Evaluation outside the knot range
//! is an error; there is no extrapolation.

use std::path::Path;

use crate::error::{Error, Result};

/// Whether a curve is used as a drift or as a volatility.
///
/// Volatility curves must be strictly positive on their domain.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CurveRole {
    Drift,
    Volatility,
}

/// Integrand selector for [`CoefficientCurve::integrate`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Integrand {
    /// `g(x) = curve(x)`
    Value,
    /// `g(x) = curve(x)^2`
    Squared,
}

#[derive(Debug, Clone, PartialEq)]
pub enum CoefficientCurve {
    /// Same value at every time; the domain is the whole real line.
    Constant(f64),
    PiecewiseLinear(PiecewiseLinear),
}

/// Linear interpolation between at least two knots with strictly increasing
/// times.
#[derive(Debug, Clone, PartialEq)]
pub struct PiecewiseLinear {
    knots: Vec<(f64, f64)>,
}

impl PiecewiseLinear {
    pub fn new(knots: Vec<(f64, f64)>) -> Result<Self> {
        if knots.len() < 2 {
            return Err(crate::error::invalid(
                "knots",
                format!("need at least 2 knots, got {}", knots.len()),
            ));
        }
        for (i, &(t, v)) in knots.iter().enumerate() {
            if !t.is_finite() || !v.is_finite() {
                return Err(crate::error::invalid(
                    "knots",
                    format!("non-finite knot ({t}, {v}) at row {i}"),
                ));
            }
        }
        for (i, w) in knots.windows(2).enumerate() {
            if w[1].0 <= w[0].0 {
                return Err(Error::NonMonotoneTime {
                    index: i + 1,
                    prev: w[0].0,
                    next: w[1].0,
                });
            }
        }
        Ok(Self { knots })
    }

    pub fn knots(&self) -> &[(f64, f64)] {
        &self.knots
    }

    // Caller guarantees t is inside the knot range.
    fn eval_inside(&self, t: f64) -> f64 {
        let idx = self.knots.partition_point(|&(k, _)| k <= t);
        if idx == 0 {
            return self.knots[0].1;
        }
        let (t0, v0) = self.knots[idx - 1];
        if t == t0 || idx == self.knots.len() {
            return v0;
        }
        let (t1, v1) = self.knots[idx];
        v0 + (v1 - v0) * (t - t0) / (t1 - t0)
    }

    fn integrate_inside(&self, s: f64, t: f64, integrand: Integrand) -> f64 {
        let mut total = 0.0;
        for w in self.knots.windows(2) {
            let lo = s.max(w[0].0);
            let hi = t.min(w[1].0);
            if hi <= lo {
                continue;
            }
            let vl = self.eval_inside(lo);
            let vh = self.eval_inside(hi);
            let h = hi - lo;
            total += match integrand {
                Integrand::Value => h * (vl + vh) / 2.0,
                Integrand::Squared => h * (vl * vl + vl * vh + vh * vh) / 3.0,
            };
        }
        total
    }
}

impl CoefficientCurve {
    pub fn constant(value: f64) -> Self {
        Self::Constant(value)
    }

    pub fn piecewise(knots: Vec<(f64, f64)>) -> Result<Self> {
        PiecewiseLinear::new(knots).map(Self::PiecewiseLinear)
    }

    /// Closed domain `[t_min, t_max]`; infinite for constants.
    pub fn domain(&self) -> (f64, f64) {
        match self {
            Self::Constant(_) => (f64::NEG_INFINITY, f64::INFINITY),
            Self::PiecewiseLinear(p) => (p.knots[0].0, p.knots[p.knots.len() - 1].0),
        }
    }

    pub fn contains(&self, t: f64) -> bool {
        let (lo, hi) = self.domain();
        t >= lo && t <= hi
    }

    fn check(&self, t: f64) -> Result<()> {
        if self.contains(t) {
            Ok(())
        } else {
            let (min, max) = self.domain();
            Err(Error::OutOfDomain { t, min, max })
        }
    }

    pub fn eval(&self, t: f64) -> Result<f64> {
        self.check(t)?;
        Ok(match self {
            Self::Constant(v) => *v,
            Self::PiecewiseLinear(p) => p.eval_inside(t),
        })
    }

    /// Exact `∫ₛᵗ g(x) dx` with `g = curve` or `g = curve²`.
    pub fn integrate(&self, s: f64, t: f64, integrand: Integrand) -> Result<f64> {
        if s > t {
            return Err(Error::ReversedInterval { s, t });
        }
        self.check(s)?;
        self.check(t)?;
        if s == t {
            return Ok(0.0);
        }
        Ok(match self {
            Self::Constant(v) => match integrand {
                Integrand::Value => v * (t - s),
                Integrand::Squared => v * v * (t - s),
            },
            Self::PiecewiseLinear(p) => p.integrate_inside(s, t, integrand),
        })
    }

    /// Knot times strictly inside `(s, t)`, used as quadrature breakpoints.
    pub fn breakpoints(&self, s: f64, t: f64) -> Vec<f64> {
        match self {
            Self::Constant(_) => Vec::new(),
            Self::PiecewiseLinear(p) => p
                .knots
                .iter()
                .map(|&(k, _)| k)
                .filter(|&k| k > s && k < t)
                .collect(),
        }
    }

    /// Checks the volatility requirement `b(t) > 0` on the whole domain.
    ///
    /// A linear interpolant is positive everywhere iff it is positive at the
    /// knots.
    pub fn ensure_positive(&self) -> Result<()> {
        match self {
            Self::Constant(v) if *v > 0.0 => Ok(()),
            Self::Constant(v) => Err(Error::NonPositiveVolatility { t: 0.0, value: *v }),
            Self::PiecewiseLinear(p) => match p.knots.iter().find(|&&(_, v)| !(v > 0.0)) {
                Some(&(t, value)) => Err(Error::NonPositiveVolatility { t, value }),
                None => Ok(()),
            },
        }
    }

    /// Validates the curve for the given role.
    pub fn validated(self, role: CurveRole) -> Result<Self> {
        if let Self::Constant(v) = self {
            if !v.is_finite() {
                return Err(crate::error::invalid(
                    "curve",
                    format!("non-finite constant {v}"),
                ));
            }
        }
        if role == CurveRole::Volatility {
            self.ensure_positive()?;
        }
        Ok(self)
    }
}

/// Loads a piecewise-linear curve from a two-column CSV file with header
/// `t,value`.
pub fn load_curve_csv(path: impl AsRef<Path>, role: CurveRole) -> Result<CoefficientCurve> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_curve_csv(&text, path)?.validated(role)
}

fn parse_curve_csv(text: &str, path: &Path) -> Result<CoefficientCurve> {
    let parse_err = |line: usize, message: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        message,
    };
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let headers = reader
        .headers()
        .map_err(|e| parse_err(1, e.to_string()))?
        .clone();
    if headers.len() != 2 || &headers[0] != "t" || &headers[1] != "value" {
        return Err(parse_err(
            1,
            format!("expected header `t,value`, got {headers:?}"),
        ));
    }
    let mut knots = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line() as usize);
            parse_err(line, e.to_string())
        })?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        if record.len() != 2 {
            return Err(parse_err(
                line,
                format!("expected 2 columns, got {}", record.len()),
            ));
        }
        let num = |field: &str| {
            field
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| parse_err(line, format!("not a finite number: `{field}`")))
        };
        knots.push((num(&record[0])?, num(&record[1])?));
    }
    if knots.len() < 2 {
        return Err(parse_err(
            1,
            format!(
                "need at least 2 rows, got {}; use `const:<value>` for a constant curve",
                knots.len()
            ),
        ));
    }
    CoefficientCurve::piecewise(knots)
}

/// Parses the config syntax `const:<value>` or `csv:<path>`; relative paths
/// resolve against `base_dir`.
pub fn parse_curve_source(
    source: &str,
    base_dir: &Path,
    role: CurveRole,
) -> Result<CoefficientCurve> {
    let source = source.trim();
    if let Some(v) = source.strip_prefix("const:") {
        let value = v
            .trim()
            .parse::<f64>()
            .map_err(|_| crate::error::invalid("curve", format!("bad constant `{v}`")))?;
        CoefficientCurve::constant(value).validated(role)
    } else if let Some(p) = source.strip_prefix("csv:") {
        load_curve_csv(base_dir.join(p.trim()), role)
    } else {
        Err(crate::error::invalid(
            "curve",
            format!("expected `const:<value>` or `csv:<path>`, got `{source}`"),
        ))
    }
}
