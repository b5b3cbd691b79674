//! Experiment configs: flat `key = value` files and `--key value` flags.

use phivar::VariationFunction;
use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;

#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub line: usize,
    pub col: usize,
    pub msg: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.line == 0 {
            write!(f, "{}", self.msg)
        } else {
            write!(f, "line {}, column {}: {}", self.line, self.col, self.msg)
        }
    }
}

impl std::error::Error for ConfigError {}

fn err<T>(line: usize, col: usize, msg: impl Into<String>) -> Result<T, ConfigError> {
    Err(ConfigError { line, col, msg: msg.into() })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Experiment {
    LimitingVariation,
    SigmaConstant,
    SeriesCheck,
    Chaining,
    Covariance,
    JmBound,
}

pub const EXPERIMENTS: [Experiment; 6] = [
    Experiment::LimitingVariation,
    Experiment::SigmaConstant,
    Experiment::SeriesCheck,
    Experiment::Chaining,
    Experiment::Covariance,
    Experiment::JmBound,
];

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Kind {
    Int { min: i64, max: i64 },
    /// Open lower bound, closed upper bound.
    Float { above: f64, max: f64 },
    /// Comma-separated positive numbers, or `auto`.
    List,
    /// A variation-function token, or `auto`.
    Phi,
}

#[derive(Debug, Clone, Copy)]
pub struct ParamSpec {
    pub key: &'static str,
    pub kind: Kind,
    pub default: &'static str,
    pub help: &'static str,
}

const fn int(key: &'static str, min: i64, max: i64, default: &'static str, help: &'static str) -> ParamSpec {
    ParamSpec { key, kind: Kind::Int { min, max }, default, help }
}

const fn float(key: &'static str, above: f64, max: f64, default: &'static str, help: &'static str) -> ParamSpec {
    ParamSpec { key, kind: Kind::Float { above, max }, default, help }
}

const SIGMA: &[ParamSpec] = &[
    int("m", 1, 3, "1", "chaos order"),
    float("H", 0.5, 0.999_999, "0.75", "Hurst index in (1/2, 1)"),
    int("nodes", 2, 512, "128", "Galerkin cells"),
    float("U", 9.999_999, f64::MAX, "1e8", "truncation of the u-range"),
];

const SERIES: &[ParamSpec] = &[
    int("case", 1, 4, "1", "preset 1-4"),
    float("p", 0.0, f64::MAX, "2", "power (cases 1, 2)"),
    float("alpha", 0.0, f64::MAX, "2", "Orlicz exponent"),
    float("beta0", 0.0, f64::MAX, "1", "Psi exponent (case 3)"),
    float("beta", 0.0, f64::MAX, "1.4", "Phi exponent (case 3)"),
    float("c", 0.0, f64::MAX, "1", "log power (case 4)"),
    float("r", 0.0, f64::MAX, "1", "Psi rate (case 4)"),
    float("v", 0.0, f64::MAX, "2", "Phi rate (case 4)"),
    int("m_max", 10, 100_000, "1000", "last term"),
];

const LIMITING: &[ParamSpec] = &[
    int("m", 1, 3, "1", "chaos order"),
    float("H", 0.0, 0.999_999, "0.5", "Hurst index (1/2 allowed for m = 1)"),
    int("grid", 16, 1 << 20, "4096", "grid steps"),
    int("paths", 1, 100_000, "20", "sample paths"),
    ParamSpec { key: "phi", kind: Kind::Phi, default: "auto", help: "gauge; auto = hermite:m=<m>,H=<H>" },
    ParamSpec { key: "deltas", kind: Kind::List, default: "auto", help: "decreasing mesh caps; auto = 4/sqrt(grid) x 8,4,2,1" },
];

const CHAINING: &[ParamSpec] = &[
    float("H", 0.0, 0.999_999, "0.5", "Hurst index"),
    ParamSpec { key: "grids", kind: Kind::List, default: "4096,65536", help: "grid sizes" },
    int("paths", 1, 100_000, "20", "sample paths per grid"),
    float("alpha", 0.0, 2.0, "2", "Orlicz exponent"),
];

const COVARIANCE: &[ParamSpec] = &[
    float("H", 0.0, 0.999_999, "0.7", "Hurst index"),
    int("n", 8, 1 << 16, "1024", "grid steps"),
    int("paths", 100, 10_000_000, "20000", "sample paths"),
    int("points", 2, 64, "8", "sub-grid points"),
];

const JM: &[ParamSpec] = &[
    float("p", 0.999_999, f64::MAX, "3", "variation exponent"),
    float("H", 0.0, 0.999_999, "0.5", "Hurst index"),
    ParamSpec { key: "grids", kind: Kind::List, default: "1024,4096,16384", help: "grid sizes" },
    int("paths", 1, 100_000, "20", "sample paths per grid"),
];

impl Experiment {
    pub fn name(self) -> &'static str {
        match self {
            Experiment::LimitingVariation => "limiting-variation",
            Experiment::SigmaConstant => "sigma-constant",
            Experiment::SeriesCheck => "series-check",
            Experiment::Chaining => "chaining",
            Experiment::Covariance => "covariance",
            Experiment::JmBound => "jm-bound",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        EXPERIMENTS.into_iter().find(|e| e.name() == s)
    }

    pub fn params(self) -> &'static [ParamSpec] {
        match self {
            Experiment::LimitingVariation => LIMITING,
            Experiment::SigmaConstant => SIGMA,
            Experiment::SeriesCheck => SERIES,
            Experiment::Chaining => CHAINING,
            Experiment::Covariance => COVARIANCE,
            Experiment::JmBound => JM,
        }
    }

    pub fn spec(self, key: &str) -> Option<&'static ParamSpec> {
        self.params().iter().find(|p| p.key == key)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    Int(i64),
    Float(f64),
    List(Vec<f64>),
    Phi(VariationFunction),
    Auto,
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Int(v) => write!(f, "{v}"),
            Value::Float(v) => write!(f, "{v:?}"),
            Value::List(v) => {
                let parts: Vec<String> = v.iter().map(|x| format!("{x:?}")).collect();
                write!(f, "{}", parts.join(","))
            }
            Value::Phi(p) => write!(f, "{p}"),
            Value::Auto => write!(f, "auto"),
        }
    }
}

/// Parse `raw` for `spec`; `col` is the 1-based column of `raw` for error reports.
pub fn parse_value(spec: &ParamSpec, raw: &str, line: usize, col: usize) -> Result<Value, ConfigError> {
    let key = spec.key;
    match spec.kind {
        Kind::Int { min, max } => match raw.parse::<i64>() {
            Ok(v) if (min..=max).contains(&v) => Ok(Value::Int(v)),
            Ok(v) => err(line, col, format!("`{key}` must be in [{min}, {max}], got {v}")),
            Err(_) => err(line, col, format!("`{key}` expects an integer, got `{raw}`")),
        },
        Kind::Float { above, max } => match raw.parse::<f64>() {
            Ok(v) if v > above && v <= max && v.is_finite() => Ok(Value::Float(v)),
            Ok(v) if max == f64::MAX => err(line, col, format!("`{key}` must be a finite number > {above}, got {v}")),
            Ok(v) => err(line, col, format!("`{key}` must be in ({above}, {max}], got {v}")),
            Err(_) => err(line, col, format!("`{key}` expects a number, got `{raw}`")),
        },
        Kind::List => {
            if raw == "auto" {
                return Ok(Value::Auto);
            }
            let mut out = Vec::new();
            let mut offset = 0;
            for part in raw.split(',') {
                let c = col + offset;
                offset += part.len() + 1;
                match part.trim().parse::<f64>() {
                    Ok(v) if v > 0.0 && v.is_finite() => out.push(v),
                    _ => return err(line, c, format!("`{key}` expects positive numbers, got `{part}`")),
                }
            }
            Ok(Value::List(out))
        }
        Kind::Phi => {
            if raw == "auto" {
                return Ok(Value::Auto);
            }
            raw.parse::<VariationFunction>().map(Value::Phi).map_err(|e| match e {
                phivar::Error::Parse { col: c, msg, .. } => ConfigError { line, col: col + c - 1, msg },
                other => ConfigError { line, col, msg: other.to_string() },
            })
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    pub params: BTreeMap<String, Value>,
    pub seed: u64,
    pub output_dir: PathBuf,
}

pub const DEFAULT_OUTPUT: &str = "phivar-out";

/// One `key = value` entry with its position.
#[derive(Debug, Clone)]
pub struct Entry {
    pub key: String,
    pub value: String,
    pub line: usize,
    pub key_col: usize,
    pub value_col: usize,
}

pub fn parse_entries(text: &str) -> Result<Vec<Entry>, ConfigError> {
    let mut out: Vec<Entry> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let body = raw.trim_start();
        if body.is_empty() || body.starts_with('#') {
            continue;
        }
        let indent = raw.len() - body.len();
        let Some(eq) = body.find('=') else {
            return err(line, indent + 1, "expected `key = value`");
        };
        let key = body[..eq].trim_end();
        if key.is_empty() {
            return err(line, indent + 1, "missing key");
        }
        let rest = &body[eq + 1..];
        let value = rest.trim();
        let value_col = indent + eq + 1 + (rest.len() - rest.trim_start().len()) + 1;
        if value.is_empty() {
            return err(line, value_col, format!("missing value for `{key}`"));
        }
        if let Some(prev) = out.iter().find(|e| e.key == key) {
            return err(line, indent + 1, format!("duplicate key `{key}` (first on line {})", prev.line));
        }
        out.push(Entry { key: key.to_string(), value: value.to_string(), line, key_col: indent + 1, value_col });
    }
    Ok(out)
}

impl ExperimentConfig {
    pub fn defaults(experiment: Experiment) -> Self {
        let params = experiment
            .params()
            .iter()
            .map(|s| (s.key.to_string(), parse_value(s, s.default, 0, 0).expect("defaults parse")))
            .collect();
        ExperimentConfig { experiment, params, seed: 1, output_dir: PathBuf::from(DEFAULT_OUTPUT) }
    }

    /// Apply entries over the current values; `experiment` entries are handled by the caller.
    pub fn apply(&mut self, entries: &[Entry]) -> Result<(), ConfigError> {
        for e in entries {
            match e.key.as_str() {
                "experiment" => {}
                "seed" => {
                    self.seed = e.value.parse().map_err(|_| ConfigError {
                        line: e.line,
                        col: e.value_col,
                        msg: format!("`seed` expects an unsigned 64-bit integer, got `{}`", e.value),
                    })?
                }
                "output_dir" => self.output_dir = PathBuf::from(&e.value),
                key => {
                    let Some(spec) = self.experiment.spec(key) else {
                        return err(e.line, e.key_col, format!("unknown key `{key}` for experiment {}", self.experiment.name()));
                    };
                    let v = parse_value(spec, &e.value, e.line, e.value_col)?;
                    self.params.insert(key.to_string(), v);
                }
            }
        }
        Ok(())
    }

    pub fn from_entries(entries: &[Entry], fallback: Option<Experiment>) -> Result<Self, ConfigError> {
        let experiment = match entries.iter().find(|e| e.key == "experiment") {
            Some(e) => Experiment::from_name(&e.value)
                .ok_or_else(|| ConfigError { line: e.line, col: e.value_col, msg: format!("unknown experiment `{}`", e.value) })?,
            None => fallback.ok_or(ConfigError { line: 0, col: 0, msg: "missing `experiment` key".into() })?,
        };
        let mut cfg = Self::defaults(experiment);
        cfg.apply(entries)?;
        Ok(cfg)
    }

    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        Self::from_entries(&parse_entries(text)?, None)
    }

    /// Canonical file form; `parse` inverts it exactly.
    pub fn to_file_string(&self) -> String {
        let mut s = format!("experiment = {}\nseed = {}\noutput_dir = {}\n", self.experiment.name(), self.seed, self.output_dir.display());
        for (k, v) in &self.params {
            s.push_str(&format!("{k} = {v}\n"));
        }
        s
    }

    pub fn int(&self, key: &str) -> i64 {
        match self.params.get(key) {
            Some(Value::Int(v)) => *v,
            other => panic!("`{key}` is not an integer parameter: {other:?}"),
        }
    }

    pub fn float(&self, key: &str) -> f64 {
        match self.params.get(key) {
            Some(Value::Float(v)) => *v,
            other => panic!("`{key}` is not a float parameter: {other:?}"),
        }
    }

    /// None for `auto`.
    pub fn list(&self, key: &str) -> Option<Vec<f64>> {
        match self.params.get(key) {
            Some(Value::List(v)) => Some(v.clone()),
            _ => None,
        }
    }

    pub fn phi(&self, key: &str) -> Option<VariationFunction> {
        match self.params.get(key) {
            Some(Value::Phi(v)) => Some(*v),
            _ => None,
        }
    }
}
