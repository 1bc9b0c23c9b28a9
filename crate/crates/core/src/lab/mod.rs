//! Experiments on the sandwich bound, the periodic approximation bracket and
//! the large-deviation event, plus report output.

mod approx;
mod deviation;
mod ld;
mod sandwich;

use std::io::Write;
use std::path::Path;

use serde::Serialize;

use crate::error::{IdsError, Result};

pub use approx::{approximation_check, ApproxSettings, BracketReport, Increment};
pub use deviation::{clopper_pearson, deviation_event_probability, DeviationEstimate, DeviationSettings};
pub use ld::{fit_tail, ld_rate, LdRate, TailFit, CONFORMING_SLOPE};
pub use sandwich::{sandwich_check, sandwich_scan, SandwichParams, SandwichReport, SandwichRow, SandwichSettings};

/// Fits the tail exponent to the hit frequencies of several estimates.
pub fn fit_tail_estimates(estimates: &[DeviationEstimate]) -> Result<TailFit> {
    let pts: Vec<(f64, f64)> = estimates.iter().map(|e| (e.energy, e.p_hat)).collect();
    fit_tail(&pts)
}

/// Pretty JSON with a trailing newline.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value).map_err(|e| IdsError::domain(format!("json: {e}")))?;
    std::fs::write(path, text + "\n")?;
    Ok(())
}

pub fn write_sandwich_csv<W: Write>(report: &SandwichReport, mut out: W) -> Result<()> {
    writeln!(out, "E,N,stderr,Nbar_minus,Nbar_plus,lower_margin,upper_margin,pass")?;
    for r in &report.rows {
        writeln!(
            out,
            "{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{}",
            r.energy,
            r.n,
            r.stderr,
            r.bar_minus,
            r.bar_plus,
            r.lower_margin,
            r.upper_margin,
            r.pass_lower && r.pass_upper
        )?;
    }
    Ok(())
}

pub fn write_deviation_csv<W: Write>(estimates: &[DeviationEstimate], mut out: W) -> Result<()> {
    writeln!(out, "n,E,alpha,trials,hits,p_hat,ci_low,ci_high,subspace_dim,max_radius")?;
    for e in estimates {
        writeln!(
            out,
            "{},{:.17e},{:.17e},{},{},{:.17e},{:.17e},{:.17e},{},{:.17e}",
            e.n, e.energy, e.alpha, e.trials, e.hits, e.p_hat, e.ci_low, e.ci_high, e.subspace_dim, e.max_radius
        )?;
    }
    Ok(())
}
