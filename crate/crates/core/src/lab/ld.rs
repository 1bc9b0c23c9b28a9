use serde::{Deserialize, Serialize};

use crate::error::{IdsError, Result};
use crate::field::Disorder;

/// Slopes below this are treated as "no decay".
pub const CONFORMING_SLOPE: f64 = 0.05;

/// Tail of the empirical mean of `cells` i.i.d. draws around the law's mean.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LdRate {
    pub threshold: f64,
    pub cells: u64,
    /// `P(|mean - E| >= t)`: exact for Bernoulli, the Hoeffding bound otherwise.
    pub probability: f64,
    pub exact: bool,
    /// `2 exp(-2 m t^2 / (b - a)^2)`, capped at 1.
    pub hoeffding: f64,
    /// Exponential rate per cell: the Cramer rate for Bernoulli, the
    /// Hoeffding exponent otherwise.
    pub rate: f64,
}

pub fn ld_rate(disorder: &Disorder, t: f64, cells: u64) -> Result<LdRate> {
    disorder.validate()?;
    if cells == 0 {
        return Err(IdsError::config("ld-rate needs at least one cell"));
    }
    if !(t >= 0.0 && t.is_finite()) {
        return Err(IdsError::config(format!("threshold must be >= 0, got {t}")));
    }
    let (lo, hi) = disorder.support();
    let width = hi - lo;
    let m = cells as f64;
    let hoeffding = if width > 0.0 {
        (2.0 * (-2.0 * m * t * t / (width * width)).exp()).min(1.0)
    } else if t == 0.0 {
        1.0
    } else {
        0.0
    };
    let hoeffding_rate = if width > 0.0 { 2.0 * t * t / (width * width) } else { f64::INFINITY };
    let mut out = LdRate {
        threshold: t,
        cells,
        probability: hoeffding,
        exact: false,
        hoeffding,
        rate: hoeffding_rate,
    };
    if t == 0.0 {
        out.probability = 1.0;
        out.exact = true;
        out.rate = 0.0;
        return Ok(out);
    }
    if t > disorder.support_radius() {
        out.probability = 0.0;
        out.exact = true;
        out.rate = f64::INFINITY;
        return Ok(out);
    }
    if let Disorder::Bernoulli { p, v0, v1 } = *disorder {
        let delta = (v1 - v0).abs();
        out.probability = binomial_two_sided(cells, p, m * t / delta);
        out.exact = true;
        out.rate = bernoulli_rate(p, t / delta);
    }
    Ok(out)
}

/// `P(|K - m p| >= s)` for `K ~ Bin(m, p)`. Thresholds that land on an integer
/// up to rounding count as reached.
fn binomial_two_sided(m: u64, p: f64, s: f64) -> f64 {
    let mp = m as f64 * p;
    let tol = 1e-9 * s.max(1.0);
    let hit = |k: u64| (k as f64 - mp).abs() >= s - tol;
    // ln pmf by the ratio recurrence from k = 0; lgamma-based binomials lose
    // about 1e-11 relative at m ~ 100
    let odds = (p / (1.0 - p)).ln();
    let mut log_p = m as f64 * (1.0 - p).ln();
    let mut terms = Vec::new();
    for k in 0..=m {
        if hit(k) {
            terms.push(log_p);
        }
        if k < m {
            log_p += ((m - k) as f64).ln() - ((k + 1) as f64).ln() + odds;
        }
    }
    if terms.is_empty() {
        return 0.0;
    }
    let top = terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if top == f64::NEG_INFINITY {
        return 0.0;
    }
    let s: f64 = terms.iter().map(|l| (l - top).exp()).sum();
    (top + s.ln()).exp().min(1.0)
}

/// `min(I(p + x), I(p - x))` with `I` the Bernoulli relative entropy.
fn bernoulli_rate(p: f64, x: f64) -> f64 {
    let kl = |q: f64| {
        if !(0.0..=1.0).contains(&q) {
            return f64::INFINITY;
        }
        let part = |a: f64, b: f64| if a == 0.0 { 0.0 } else { a * (a / b).ln() };
        part(q, p) + part(1.0 - q, 1.0 - p)
    };
    kl(p + x).min(kl(p - x))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "kebab-case")]
pub enum TailFit {
    /// Least squares of `log(-log p)` against `log(1/E)`.
    Fitted {
        tau: f64,
        intercept: f64,
        /// Root-mean-square residual of the fit.
        residual: f64,
        points: usize,
        conforming: bool,
    },
    /// Every estimate was zero: consistent with the bound, `tau` unbounded
    /// below the resolution of the experiment.
    Unbounded { points: usize },
}

impl TailFit {
    pub fn tau(&self) -> Option<f64> {
        match self {
            TailFit::Fitted { tau, .. } => Some(*tau),
            TailFit::Unbounded { .. } => None,
        }
    }
}

/// Fits `p(E) ~ exp(-c E^{-tau})` to `(E, p)` pairs. Points with `p` equal
/// to 0 or 1 carry no slope information and are dropped.
pub fn fit_tail(points: &[(f64, f64)]) -> Result<TailFit> {
    if points.iter().any(|(e, p)| !(*e > 0.0) || !(0.0..=1.0).contains(p)) {
        return Err(IdsError::config("tail fit needs E > 0 and p in [0, 1]"));
    }
    if !points.is_empty() && points.iter().all(|(_, p)| *p == 0.0) {
        return Ok(TailFit::Unbounded { points: points.len() });
    }
    let xy: Vec<(f64, f64)> = points
        .iter()
        .filter(|(_, p)| *p > 0.0 && *p < 1.0)
        .map(|(e, p)| ((1.0 / e).ln(), (-p.ln()).ln()))
        .collect();
    if xy.len() < 4 {
        return Err(IdsError::config(format!(
            "tail fit needs at least 4 energies with 0 < p < 1, got {}",
            xy.len()
        )));
    }
    let k = xy.len() as f64;
    let mx = xy.iter().map(|p| p.0).sum::<f64>() / k;
    let my = xy.iter().map(|p| p.1).sum::<f64>() / k;
    let sxx: f64 = xy.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(IdsError::config("tail fit needs at least two distinct energies"));
    }
    let sxy: f64 = xy.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let tau = sxy / sxx;
    let intercept = my - tau * mx;
    let residual = (xy
        .iter()
        .map(|p| (p.1 - intercept - tau * p.0).powi(2))
        .sum::<f64>()
        / k)
        .sqrt();
    Ok(TailFit::Fitted {
        tau,
        intercept,
        residual,
        points: xy.len(),
        conforming: tau > CONFORMING_SLOPE,
    })
}
