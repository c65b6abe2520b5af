//! Parameter values and ranges given on the command line.

use std::fmt;
use std::str::FromStr;

use serde::Serialize;

/// A single value or an inclusive range `lo:hi:step`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum ParamSpec {
    Value(f64),
    Range { lo: f64, hi: f64, step: f64 },
}

impl ParamSpec {
    pub fn is_range(&self) -> bool {
        matches!(self, ParamSpec::Range { .. })
    }

    pub fn scalar(&self, name: &str) -> Result<f64, String> {
        match *self {
            ParamSpec::Value(v) => Ok(v),
            ParamSpec::Range { .. } => Err(format!("--{name} must be a single value here")),
        }
    }

    /// Grid points `lo + i step <= hi`; an empty range is an error.
    pub fn values(&self) -> Result<Vec<f64>, String> {
        match *self {
            ParamSpec::Value(v) => Ok(vec![v]),
            ParamSpec::Range { lo, hi, step } => {
                if !(step > 0.0) || !(hi >= lo) {
                    return Err(format!("empty range {lo}:{hi}:{step}"));
                }
                let n = ((hi - lo) / step * (1.0 + 1e-12)).floor() as usize;
                Ok((0..=n).map(|i| lo + i as f64 * step).collect())
            }
        }
    }
}

impl FromStr for ParamSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let num = |t: &str| t.trim().parse::<f64>().map_err(|e| format!("bad number '{t}': {e}"));
        let parts: Vec<&str> = s.split(':').collect();
        let spec = match parts.as_slice() {
            [v] => ParamSpec::Value(num(v)?),
            [lo, hi, step] => ParamSpec::Range { lo: num(lo)?, hi: num(hi)?, step: num(step)? },
            _ => return Err(format!("expected a value or lo:hi:step, got '{s}'")),
        };
        let finite = match spec {
            ParamSpec::Value(v) => v.is_finite(),
            ParamSpec::Range { lo, hi, step } => lo.is_finite() && hi.is_finite() && step.is_finite(),
        };
        if !finite {
            return Err(format!("non-finite value in '{s}'"));
        }
        Ok(spec)
    }
}

impl fmt::Display for ParamSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ParamSpec::Value(v) => write!(f, "{v}"),
            ParamSpec::Range { lo, hi, step } => write!(f, "{lo}:{hi}:{step}"),
        }
    }
}

/// `name=lo:hi` pairs separated by commas.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WindowSpec(pub Vec<(String, f64, f64)>);

impl WindowSpec {
    pub fn bounds(&self, name: &str) -> Option<(f64, f64)> {
        self.0.iter().find(|e| e.0 == name).map(|e| (e.1, e.2))
    }
}

impl FromStr for WindowSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let mut out = Vec::new();
        for part in s.split(',') {
            let (name, range) = part.split_once('=').ok_or_else(|| format!("expected name=lo:hi, got '{part}'"))?;
            let (lo, hi) = range.split_once(':').ok_or_else(|| format!("expected lo:hi, got '{range}'"))?;
            let lo: f64 = lo.trim().parse().map_err(|e| format!("bad number '{lo}': {e}"))?;
            let hi: f64 = hi.trim().parse().map_err(|e| format!("bad number '{hi}': {e}"))?;
            if !(lo < hi) {
                return Err(format!("empty window for {name}: {lo}:{hi}"));
            }
            out.push((name.trim().to_string(), lo, hi));
        }
        Ok(WindowSpec(out))
    }
}
