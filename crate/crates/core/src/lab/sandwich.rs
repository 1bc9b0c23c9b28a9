use serde::{Deserialize, Serialize};

use crate::discretize::BoundaryCondition;
use crate::error::{IdsError, Result};
use crate::field::{mean_field, CoefficientSpec};
use crate::ids::{finite_volume_ids, floquet_ids, IdsCurve, ThetaGrid};

/// `alpha` window exponent, energies, and the `(C, tau)` of the correction
/// term `C exp(-E^{-tau})`. With `c = None` the smallest passing `C >= 1` is
/// fitted and used.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SandwichParams {
    pub alpha: f64,
    pub energies: Vec<f64>,
    pub c: Option<f64>,
    pub tau: f64,
}

impl SandwichParams {
    pub fn new(alpha: f64, energies: Vec<f64>) -> Self {
        SandwichParams { alpha, energies, c: None, tau: 1.0 }
    }

    fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return Err(IdsError::config(format!("alpha must lie in (0, 1], got {}", self.alpha)));
        }
        if !(self.tau > 0.0) {
            return Err(IdsError::config("tau must be positive"));
        }
        if let Some(c) = self.c {
            if !(c >= 1.0) {
                return Err(IdsError::config("C must be at least 1"));
            }
        }
        if self.energies.iter().any(|e| !(*e > 0.0)) {
            return Err(IdsError::config("sandwich energies must be positive"));
        }
        Ok(())
    }
}

/// Box, mesh and sampling settings for the random side, and the theta
/// resolution of the homogenized side.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SandwichSettings {
    pub n: usize,
    pub bc: BoundaryCondition,
    pub samples: usize,
    pub seed: u64,
    pub theta: ThetaGrid,
    /// The homogenized operator is evaluated on `2 cells + 1` unit cells,
    /// which multiplies the effective theta resolution.
    pub cells: usize,
    /// Evaluate the homogenized IDS on this grid and interpolate; by default
    /// it is evaluated exactly at `E +- E^alpha`.
    pub bar_grid: Option<Vec<f64>>,
}

impl Default for SandwichSettings {
    fn default() -> Self {
        SandwichSettings {
            n: 200,
            bc: BoundaryCondition::Dirichlet,
            samples: 200,
            seed: 0,
            theta: ThetaGrid::midpoint(64),
            cells: 8,
            bar_grid: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SandwichRow {
    pub energy: f64,
    pub n: f64,
    pub stderr: f64,
    pub bar_minus: f64,
    pub bar_plus: f64,
    pub lower_margin: f64,
    pub upper_margin: f64,
    pub pass_lower: bool,
    pub pass_upper: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SandwichReport {
    pub params: SandwichParams,
    /// `C` used for the margins.
    pub c: f64,
    /// Smallest `C >= 1` for which every energy passes; infinite if the
    /// correction term underflows where it is needed.
    pub c_min: f64,
    pub rows: Vec<SandwichRow>,
    pub all_pass: bool,
    /// `|N(E) - Nbar(E + E^alpha)|` in ascending energy order.
    pub upper_gap: Vec<f64>,
    /// Whether `upper_gap` shrinks as `E` decreases.
    pub gap_decreasing: bool,
}

/// Tests `Nbar(E - E^a) - C e^{-E^{-tau}} <= N(E) <= Nbar(E + E^a) + C e^{-E^{-tau}}`
/// with `N` the Monte Carlo finite-volume IDS and `Nbar` the IDS of the
/// mean-coefficient operator. Margins are accepted down to `-3 stderr`.
pub fn sandwich_check(
    spec: &CoefficientSpec,
    params: &SandwichParams,
    settings: &SandwichSettings,
) -> Result<SandwichReport> {
    params.validate()?;
    let mut energies = params.energies.clone();
    energies.sort_by(f64::total_cmp);
    energies.dedup();
    let n_curve = finite_volume_ids(spec, settings.n, &settings.bc, &energies, settings.samples, settings.seed)?;

    let shifted: Vec<(f64, f64)> = energies
        .iter()
        .map(|&e| (e - e.powf(params.alpha), e + e.powf(params.alpha)))
        .collect();
    let bar = bar_curve(spec, settings, &shifted)?;

    let mut rows = Vec::with_capacity(energies.len());
    let mut needed: f64 = 1.0;
    for (k, &e) in energies.iter().enumerate() {
        let (lo, hi) = shifted[k];
        let bar_minus = bar.value_at(lo)?;
        let bar_plus = bar.value_at(hi)?;
        let n = n_curve.values[k];
        let se = n_curve.stderr[k];
        let w = (-e.powf(-params.tau)).exp();
        // N - Nbar(-) + C w >= -3 se  and  Nbar(+) - N + C w >= -3 se
        for deficit in [bar_minus - n - 3.0 * se, n - bar_plus - 3.0 * se] {
            if deficit > 0.0 {
                needed = needed.max(if w > 0.0 { deficit / w } else { f64::INFINITY });
            }
        }
        rows.push(SandwichRow {
            energy: e,
            n,
            stderr: se,
            bar_minus,
            bar_plus,
            lower_margin: 0.0,
            upper_margin: 0.0,
            pass_lower: false,
            pass_upper: false,
        });
    }
    let c = params.c.unwrap_or(needed);
    for row in &mut rows {
        let w = (-row.energy.powf(-params.tau)).exp();
        let corr = if c.is_finite() { c * w } else if w > 0.0 { f64::INFINITY } else { 0.0 };
        row.lower_margin = row.n - (row.bar_minus - corr);
        row.upper_margin = row.bar_plus + corr - row.n;
        row.pass_lower = row.lower_margin >= -3.0 * row.stderr;
        row.pass_upper = row.upper_margin >= -3.0 * row.stderr;
    }
    let upper_gap: Vec<f64> = rows.iter().map(|r| (r.n - r.bar_plus).abs()).collect();
    let gap_decreasing = upper_gap.windows(2).all(|w| w[0] <= w[1]);
    Ok(SandwichReport {
        params: params.clone(),
        c,
        c_min: needed,
        all_pass: rows.iter().all(|r| r.pass_lower && r.pass_upper),
        rows,
        upper_gap,
        gap_decreasing,
    })
}

/// Runs [`sandwich_check`] once per exponent.
pub fn sandwich_scan(
    spec: &CoefficientSpec,
    alphas: &[f64],
    energies: &[f64],
    settings: &SandwichSettings,
) -> Result<Vec<SandwichReport>> {
    alphas
        .iter()
        .map(|&a| sandwich_check(spec, &SandwichParams::new(a, energies.to_vec()), settings))
        .collect()
}

fn bar_curve(
    spec: &CoefficientSpec,
    settings: &SandwichSettings,
    shifted: &[(f64, f64)],
) -> Result<IdsCurve> {
    let field = mean_field(spec)?.tile(settings.cells)?;
    match &settings.bar_grid {
        Some(grid) => {
            let c = floquet_ids(&field, grid, settings.theta)?;
            let lo = grid[0];
            let hi = grid[grid.len() - 1];
            for &(a, b) in shifted {
                for e in [a, b] {
                    if e > 0.0 && (e < lo || e > hi) {
                        return Err(IdsError::Range { energy: e, lo, hi });
                    }
                }
            }
            Ok(c)
        }
        None => {
            let mut grid: Vec<f64> = shifted
                .iter()
                .flat_map(|&(a, b)| [a, b])
                .filter(|e| *e > 0.0)
                .collect();
            grid.sort_by(f64::total_cmp);
            grid.dedup();
            if grid.is_empty() {
                grid.push(f64::MIN_POSITIVE);
            }
            floquet_ids(&field, &grid, settings.theta)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::Disorder;

    fn small() -> SandwichSettings {
        SandwichSettings { n: 40, samples: 4, theta: ThetaGrid::midpoint(16), cells: 4, ..Default::default() }
    }

    #[test]
    fn degenerate_law_passes_with_unit_constant() {
        let spec = CoefficientSpec::uniform_cell(1, 4, 1.0, 1.0, Disorder::constant(0.25)).unwrap();
        let p = SandwichParams::new(0.7, vec![0.02, 0.05, 0.1, 0.2]);
        let r = sandwich_check(&spec, &p, &small()).unwrap();
        assert_eq!(r.c, 1.0);
        assert!(r.all_pass);
        for row in &r.rows {
            assert_eq!(row.stderr, 0.0);
            assert!(row.bar_minus <= row.bar_plus);
        }
    }

    #[test]
    fn grid_must_cover_window() {
        let spec = CoefficientSpec::constant(1, 4, 1.0).unwrap();
        let s = SandwichSettings { bar_grid: Some(vec![0.01, 0.2]), ..small() };
        let p = SandwichParams::new(0.7, vec![0.1]);
        assert!(matches!(sandwich_check(&spec, &p, &s), Err(IdsError::Range { .. })));
    }

    #[test]
    fn rejects_bad_alpha() {
        let spec = CoefficientSpec::constant(1, 4, 1.0).unwrap();
        let p = SandwichParams::new(1.5, vec![0.1]);
        assert!(sandwich_check(&spec, &p, &small()).unwrap_err().is_config());
    }
}
