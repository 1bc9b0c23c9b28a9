use serde::{Deserialize, Serialize};

use crate::error::{IdsError, Result};

/// Single-site law of the i.i.d. coupling constants `omega_gamma`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "law", rename_all = "lowercase")]
pub enum Disorder {
    /// `v1` with probability `p`, `v0` otherwise.
    Bernoulli { p: f64, v0: f64, v1: f64 },
    /// Uniform on `[a, b]`.
    Uniform { a: f64, b: f64 },
}

impl Disorder {
    pub fn bernoulli(p: f64, v0: f64, v1: f64) -> Result<Self> {
        let d = Disorder::Bernoulli { p, v0, v1 };
        d.validate()?;
        Ok(d)
    }

    pub fn uniform(a: f64, b: f64) -> Result<Self> {
        let d = Disorder::Uniform { a, b };
        d.validate()?;
        Ok(d)
    }

    /// Point mass at `v` (Bernoulli with `p = 1`).
    pub fn constant(v: f64) -> Self {
        Disorder::Bernoulli { p: 1.0, v0: v, v1: v }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            Disorder::Bernoulli { p, v0, v1 } => {
                if !(0.0..=1.0).contains(&p) || !v0.is_finite() || !v1.is_finite() {
                    return Err(IdsError::config(format!(
                        "bernoulli law needs p in [0,1] and finite values, got p={p}, v0={v0}, v1={v1}"
                    )));
                }
            }
            Disorder::Uniform { a, b } => {
                if !(a.is_finite() && b.is_finite() && a <= b) {
                    return Err(IdsError::config(format!(
                        "uniform law needs finite a <= b, got a={a}, b={b}"
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn mean(&self) -> f64 {
        match *self {
            Disorder::Bernoulli { p, v0, v1 } => v0 + p * (v1 - v0),
            Disorder::Uniform { a, b } => 0.5 * (a + b),
        }
    }

    pub fn variance(&self) -> f64 {
        match *self {
            Disorder::Bernoulli { p, v0, v1 } => p * (1.0 - p) * (v1 - v0) * (v1 - v0),
            Disorder::Uniform { a, b } => (b - a) * (b - a) / 12.0,
        }
    }

    pub fn is_degenerate(&self) -> bool {
        self.variance() == 0.0
    }

    /// Smallest closed interval containing the support.
    pub fn support(&self) -> (f64, f64) {
        match *self {
            Disorder::Bernoulli { p, v0, v1 } => {
                if p == 1.0 {
                    (v1, v1)
                } else if p == 0.0 {
                    (v0, v0)
                } else {
                    (v0.min(v1), v0.max(v1))
                }
            }
            Disorder::Uniform { a, b } => (a, b),
        }
    }

    /// Largest possible deviation of a draw from the mean.
    pub fn support_radius(&self) -> f64 {
        let (lo, hi) = self.support();
        let mu = self.mean();
        (mu - lo).max(hi - mu)
    }

    /// Inverse-CDF style map from a uniform `u in [0,1)` to a draw.
    pub fn draw(&self, u: f64) -> f64 {
        match *self {
            Disorder::Bernoulli { p, v0, v1 } => {
                if u < p {
                    v1
                } else {
                    v0
                }
            }
            Disorder::Uniform { a, b } => a + (b - a) * u,
        }
    }

    /// Parses `bernoulli:p[:v0:v1]`, `uniform:a:b` or `constant:v`.
    pub fn parse(text: &str) -> Result<Self> {
        let parts: Vec<&str> = text.split(':').map(str::trim).collect();
        let nums = |xs: &[&str]| -> Result<Vec<f64>> {
            xs.iter()
                .map(|s| {
                    s.parse::<f64>()
                        .map_err(|_| IdsError::config(format!("bad number '{s}' in law '{text}'")))
                })
                .collect()
        };
        match parts[0].to_ascii_lowercase().as_str() {
            "bernoulli" => {
                let v = nums(&parts[1..])?;
                match v.as_slice() {
                    [p] => Disorder::bernoulli(*p, 0.0, 1.0),
                    [p, v0, v1] => Disorder::bernoulli(*p, *v0, *v1),
                    _ => Err(IdsError::config(format!(
                        "expected bernoulli:p or bernoulli:p:v0:v1, got '{text}'"
                    ))),
                }
            }
            "uniform" => {
                let v = nums(&parts[1..])?;
                match v.as_slice() {
                    [a, b] => Disorder::uniform(*a, *b),
                    _ => Err(IdsError::config(format!("expected uniform:a:b, got '{text}'"))),
                }
            }
            "constant" => {
                let v = nums(&parts[1..])?;
                match v.as_slice() {
                    [c] => Ok(Disorder::constant(*c)),
                    _ => Err(IdsError::config(format!("expected constant:v, got '{text}'"))),
                }
            }
            other => Err(IdsError::config(format!("unknown disorder law '{other}'"))),
        }
    }
}

impl std::fmt::Display for Disorder {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match *self {
            Disorder::Bernoulli { p, v0, v1 } => write!(f, "bernoulli:{p}:{v0}:{v1}"),
            Disorder::Uniform { a, b } => write!(f, "uniform:{a}:{b}"),
        }
    }
}
