//! Flat `key = value` run configuration.
//!
//! Lines are `section.key = value`; `#` starts a comment. Every problem in a
//! file is collected before reporting, so one run shows all of them.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};

use memvol::coeffs::parse_curve_source;
use memvol::pricing::{DriftCoefficient, OptionKind, OptionSpec, MIN_PATHS};
use memvol::{CoefficientCurve, CurveRole, EffVolMethod, KernelFamily, MemoryKernel, ProcessSpec};
use sha2::{Digest, Sha256};

/// Recognized keys with their defaults and a one-line description.
pub const KEYS: &[(&str, &str, &str)] = &[
    (
        "process.a",
        "0",
        "drift curve of the process: number, const:<v> or csv:<path>",
    ),
    (
        "process.b",
        "0.2",
        "impulse volatility curve, same syntax; must stay positive",
    ),
    ("process.t0", "0", "start of the observation window"),
    (
        "process.kernel",
        "gaussian",
        "memory kernel family: gaussian | exponential",
    ),
    ("process.tau", "0", "memory depth; 0 disables memory"),
    ("pricing.s0", "100", "spot at t0"),
    (
        "pricing.A",
        "0",
        "log-drift curve of the asset (physical measure)",
    ),
    ("pricing.r", "0.05", "risk-free rate"),
    ("pricing.option", "call", "call | put"),
    ("pricing.strike", "100", "strike"),
    ("pricing.maturity", "", "maturity; empty means t0 + horizon"),
    (
        "pde.drift_coefficient",
        "r",
        "first-order PDE coefficient: r | one",
    ),
    (
        "numerics.horizon",
        "1",
        "window length simulated and tabulated",
    ),
    ("numerics.n_steps", "200", "time steps over the horizon"),
    (
        "numerics.n_paths",
        "10000",
        "Monte Carlo paths (antithetic pairs for pricing)",
    ),
    (
        "numerics.seed",
        "1",
        "root seed; subsystems derive their own",
    ),
    ("numerics.quad_tol", "1e-9", "adaptive quadrature tolerance"),
    (
        "numerics.effvol_method",
        "exact",
        "exact | asymptotic | gaussian",
    ),
    ("numerics.pde_space", "400", "PDE space steps"),
    ("numerics.pde_time", "400", "PDE time steps"),
    (
        "numerics.picard_max_iter",
        "50",
        "Picard iteration cap for full memory",
    ),
    ("numerics.picard_tol", "1e-10", "Picard stopping tolerance"),
    ("io.simulate", "", "default output of `simulate`"),
    ("io.effvol", "", "default output of `effvol`"),
    (
        "io.moments",
        "",
        "default output of `moments`; empty prints to stdout",
    ),
    ("io.price", "", "default output of `price`"),
    (
        "io.surface",
        "",
        "default surface output of `price --engine pde`",
    ),
];

const ALIASES: &[(&str, &str)] = &[
    ("a", "process.a"),
    ("b", "process.b"),
    ("t0", "process.t0"),
    ("kernel", "process.kernel"),
    ("tau", "process.tau"),
];

#[derive(Debug, Clone, PartialEq)]
pub enum ConfigError {
    Parse {
        line: usize,
        message: String,
    },
    Validation {
        key: String,
        line: Option<usize>,
        message: String,
    },
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Parse { line, message } => write!(f, "line {line}: {message}"),
            Self::Validation {
                key,
                line: Some(line),
                message,
            } => {
                write!(f, "{key} (line {line}): {message}")
            }
            Self::Validation {
                key,
                line: None,
                message,
            } => write!(f, "{key}: {message}"),
        }
    }
}

#[derive(Debug, thiserror::Error)]
#[error("{} configuration error(s)", .0.len())]
pub struct ConfigErrors(pub Vec<ConfigError>);

#[derive(Debug, Clone)]
pub struct Numerics {
    pub horizon: f64,
    pub n_steps: usize,
    pub n_paths: usize,
    pub seed: u64,
    pub quad_tol: f64,
    pub effvol_method: EffVolMethod,
    pub pde_space: usize,
    pub pde_time: usize,
    pub picard_max_iter: usize,
    pub picard_tol: f64,
}

#[derive(Debug, Clone)]
pub struct Pricing {
    pub s0: f64,
    pub log_drift: CoefficientCurve,
    pub r: f64,
    pub option: OptionSpec,
    pub drift_coefficient: DriftCoefficient,
}

#[derive(Debug, Clone, Default)]
pub struct Outputs {
    pub simulate: Option<PathBuf>,
    pub effvol: Option<PathBuf>,
    pub moments: Option<PathBuf>,
    pub price: Option<PathBuf>,
    pub surface: Option<PathBuf>,
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub process: ProcessSpec,
    pub pricing: Pricing,
    pub numerics: Numerics,
    pub io: Outputs,
    /// Hex SHA-256 of the canonical form.
    pub digest: String,
}

impl RunConfig {
    pub fn t_end(&self) -> f64 {
        self.process.t0 + self.numerics.horizon
    }
}

struct Entry {
    value: String,
    line: Option<usize>,
}

struct Reader {
    entries: BTreeMap<&'static str, Entry>,
    base_dir: PathBuf,
    errors: Vec<ConfigError>,
    /// Extra canonical lines (content hashes of referenced files).
    attachments: Vec<String>,
}

impl Reader {
    fn entry(&self, key: &'static str) -> &Entry {
        &self.entries[key]
    }

    fn fail(&mut self, key: &str, message: impl Into<String>) {
        let line = self.entries.get(key).and_then(|e| e.line);
        self.errors.push(ConfigError::Validation {
            key: key.to_string(),
            line,
            message: message.into(),
        });
    }

    fn parse<T: std::str::FromStr>(&mut self, key: &'static str, what: &str) -> Option<T> {
        let raw = self.entry(key).value.clone();
        match raw.parse::<T>() {
            Ok(v) => Some(v),
            Err(_) => {
                self.fail(key, format!("expected {what}, got `{raw}`"));
                None
            }
        }
    }

    fn real(
        &mut self,
        key: &'static str,
        check: impl Fn(f64) -> Option<&'static str>,
    ) -> Option<f64> {
        let v = self.parse::<f64>(key, "a number")?;
        if !v.is_finite() {
            self.fail(key, "must be finite");
            return None;
        }
        match check(v) {
            Some(msg) => {
                self.fail(key, format!("{msg}, got {v}"));
                None
            }
            None => Some(v),
        }
    }

    fn count(&mut self, key: &'static str, min: usize) -> Option<usize> {
        let v = self.parse::<usize>(key, "a nonnegative integer")?;
        if v < min {
            self.fail(key, format!("must be >= {min}, got {v}"));
            return None;
        }
        Some(v)
    }

    fn curve(&mut self, key: &'static str, role: CurveRole) -> Option<CoefficientCurve> {
        let raw = self.entry(key).value.clone();
        let source = if raw.parse::<f64>().is_ok() {
            format!("const:{raw}")
        } else {
            raw.clone()
        };
        if let Some(path) = source.strip_prefix("csv:") {
            let full = self.base_dir.join(path.trim());
            if let Ok(bytes) = std::fs::read(&full) {
                self.attachments
                    .push(format!("{key}.sha256 = {}", sha256_hex(&bytes)));
            }
        }
        match parse_curve_source(&source, &self.base_dir, role) {
            Ok(c) => Some(c),
            Err(e) => {
                self.fail(key, e.to_string());
                None
            }
        }
    }

    fn path(&mut self, key: &'static str) -> Option<PathBuf> {
        let raw = &self.entry(key).value;
        (!raw.is_empty()).then(|| self.base_dir.join(raw))
    }

    fn canonical(&self) -> String {
        let mut out = String::new();
        for (key, _, _) in KEYS {
            out.push_str(&format!("{key} = {}\n", self.entries[key].value));
        }
        for line in &self.attachments {
            out.push_str(line);
            out.push('\n');
        }
        out
    }
}

fn canonical_key(raw: &str) -> Option<&'static str> {
    KEYS.iter()
        .map(|(k, _, _)| *k)
        .find(|k| *k == raw)
        .or_else(|| ALIASES.iter().find(|(a, _)| *a == raw).map(|(_, k)| *k))
}

/// Parses and validates a config file. Relative paths inside it resolve
/// against the file's directory.
pub fn parse_config(path: &Path) -> Result<RunConfig, ConfigErrors> {
    let text = std::fs::read_to_string(path).map_err(|e| {
        ConfigErrors(vec![ConfigError::Parse {
            line: 0,
            message: format!("cannot read {}: {e}", path.display()),
        }])
    })?;
    let base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
    parse_config_str(&text, &base_dir)
}

pub fn parse_config_str(text: &str, base_dir: &Path) -> Result<RunConfig, ConfigErrors> {
    let mut errors = Vec::new();
    let mut entries: BTreeMap<&'static str, Entry> = BTreeMap::new();
    for (i, raw_line) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw_line.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let Some((k, v)) = content.split_once('=') else {
            errors.push(ConfigError::Parse {
                line,
                message: format!("expected `key = value`, got `{content}`"),
            });
            continue;
        };
        let (k, v) = (k.trim(), v.trim());
        let Some(key) = canonical_key(k) else {
            errors.push(ConfigError::Parse {
                line,
                message: format!("unknown key `{k}`"),
            });
            continue;
        };
        if let Some(prev) = entries.get(key) {
            errors.push(ConfigError::Parse {
                line,
                message: format!(
                    "duplicate key `{key}` (first set on line {})",
                    prev.line.unwrap_or(0)
                ),
            });
            continue;
        }
        entries.insert(
            key,
            Entry {
                value: v.to_string(),
                line: Some(line),
            },
        );
    }
    for (key, default, _) in KEYS {
        entries.entry(key).or_insert_with(|| Entry {
            value: default.to_string(),
            line: None,
        });
    }

    let mut r = Reader {
        entries,
        base_dir: base_dir.to_path_buf(),
        errors,
        attachments: Vec::new(),
    };
    let a = r.curve("process.a", CurveRole::Drift);
    let b = r.curve("process.b", CurveRole::Volatility);
    let t0 = r.real("process.t0", |_| None);
    let family = r.parse::<KernelFamily>("process.kernel", "gaussian or exponential");
    let tau = r.real("process.tau", |v| (v < 0.0).then_some("must be >= 0"));

    let s0 = r.real("pricing.s0", |v| (v <= 0.0).then_some("must be > 0"));
    let log_drift = r.curve("pricing.A", CurveRole::Drift);
    let rate = r.real("pricing.r", |_| None);
    let kind = r.parse::<OptionKind>("pricing.option", "call or put");
    let strike = r.real("pricing.strike", |v| (v <= 0.0).then_some("must be > 0"));
    let maturity = if r.entry("pricing.maturity").value.is_empty() {
        Some(None)
    } else {
        r.real("pricing.maturity", |_| None).map(Some)
    };
    let drift_coefficient = r.parse::<DriftCoefficient>("pde.drift_coefficient", "r or one");

    let horizon = r.real("numerics.horizon", |v| (v <= 0.0).then_some("must be > 0"));
    let n_steps = r.count("numerics.n_steps", 1);
    let n_paths = r.count("numerics.n_paths", MIN_PATHS);
    let seed = r.parse::<u64>("numerics.seed", "an unsigned 64-bit integer");
    let quad_tol = r.real("numerics.quad_tol", |v| (v <= 0.0).then_some("must be > 0"));
    let effvol_method =
        r.parse::<EffVolMethod>("numerics.effvol_method", "exact, asymptotic or gaussian");
    let pde_space = r.count("numerics.pde_space", 50);
    let pde_time = r.count("numerics.pde_time", 50);
    let picard_max_iter = r.count("numerics.picard_max_iter", 1);
    let picard_tol = r.real("numerics.picard_tol", |v| {
        (v <= 0.0).then_some("must be > 0")
    });

    let io = Outputs {
        simulate: r.path("io.simulate"),
        effvol: r.path("io.effvol"),
        moments: r.path("io.moments"),
        price: r.path("io.price"),
        surface: r.path("io.surface"),
    };

    // Cross-field checks run only on fields that parsed.
    let kernel = match (family, tau) {
        (Some(f), Some(t)) => match MemoryKernel::new(f, t) {
            Ok(k) => Some(k),
            Err(e) => {
                r.fail("process.tau", e.to_string());
                None
            }
        },
        _ => None,
    };
    if let (Some(t0), Some(h)) = (t0, horizon) {
        let end = t0 + h;
        for (key, curve) in [
            ("process.a", &a),
            ("process.b", &b),
            ("pricing.A", &log_drift),
        ] {
            if let Some(c) = curve {
                let (lo, hi) = c.domain();
                if lo > t0 || hi < end {
                    r.fail(
                        key,
                        format!("curve covers [{lo}, {hi}] but the run needs [{t0}, {end}]"),
                    );
                }
            }
        }
        if effvol_method == Some(EffVolMethod::GaussianClosed)
            && family == Some(KernelFamily::Exponential)
        {
            r.fail(
                "numerics.effvol_method",
                "the gaussian closed form needs process.kernel = gaussian",
            );
        }
    }
    let option = match (kind, strike, maturity, t0, horizon) {
        (Some(kind), Some(strike), Some(m), Some(t0), Some(h)) => {
            let m = m.unwrap_or(t0 + h);
            if !(m > t0) || m > t0 + h {
                r.fail(
                    "pricing.maturity",
                    format!(
                        "must lie in (t0, t0 + horizon] = ({t0}, {}], got {m}",
                        t0 + h
                    ),
                );
                None
            } else {
                OptionSpec::new(kind, strike, m).ok()
            }
        }
        _ => None,
    };

    let canonical = r.canonical();
    if !r.errors.is_empty() {
        return Err(ConfigErrors(r.errors));
    }
    let invalid = |what: &str| {
        ConfigErrors(vec![ConfigError::Parse {
            line: 0,
            message: what.to_string(),
        }])
    };
    let (Some(a), Some(b), Some(t0), Some(kernel)) = (a, b, t0, kernel) else {
        return Err(invalid("incomplete process block"));
    };
    let process = ProcessSpec::new(a, b, kernel, t0).map_err(|e| {
        ConfigErrors(vec![ConfigError::Validation {
            key: "process".into(),
            line: None,
            message: e.to_string(),
        }])
    })?;
    let pricing = Pricing {
        s0: s0.ok_or_else(|| invalid("pricing.s0"))?,
        log_drift: log_drift.ok_or_else(|| invalid("pricing.A"))?,
        r: rate.ok_or_else(|| invalid("pricing.r"))?,
        option: option.ok_or_else(|| invalid("pricing option"))?,
        drift_coefficient: drift_coefficient.ok_or_else(|| invalid("pde.drift_coefficient"))?,
    };
    let numerics = Numerics {
        horizon: horizon.ok_or_else(|| invalid("numerics.horizon"))?,
        n_steps: n_steps.ok_or_else(|| invalid("numerics.n_steps"))?,
        n_paths: n_paths.ok_or_else(|| invalid("numerics.n_paths"))?,
        seed: seed.ok_or_else(|| invalid("numerics.seed"))?,
        quad_tol: quad_tol.ok_or_else(|| invalid("numerics.quad_tol"))?,
        effvol_method: effvol_method.ok_or_else(|| invalid("numerics.effvol_method"))?,
        pde_space: pde_space.ok_or_else(|| invalid("numerics.pde_space"))?,
        pde_time: pde_time.ok_or_else(|| invalid("numerics.pde_time"))?,
        picard_max_iter: picard_max_iter.ok_or_else(|| invalid("numerics.picard_max_iter"))?,
        picard_tol: picard_tol.ok_or_else(|| invalid("numerics.picard_tol"))?,
    };
    Ok(RunConfig {
        process,
        pricing,
        numerics,
        io,
        digest: sha256_hex(canonical.as_bytes()),
    })
}

fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}
