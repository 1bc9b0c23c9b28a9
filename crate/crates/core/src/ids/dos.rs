use std::f64::consts::{PI, SQRT_2};

use serde::{Deserialize, Serialize};
use statrs::function::erf::erf;

use super::floquet::ThetaGrid;
use crate::discretize::{assemble, BoundaryCondition};
use crate::error::{IdsError, Result};
use crate::field::{periodize, sample_field, CoefficientSpec, FieldOnGrid};
use crate::parallel::{mean_stderr, ordered_map_range};
use crate::spectral::{eigenvalues_in_with, Counter, DENSE_CAP};

/// Truncation radius in units of the width.
const CUTOFF: f64 = 6.0;

/// Smooth test function paired with the density of states.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "lowercase")]
pub enum TestFunction {
    /// Gaussian bump of unit mass, truncated at `6 width`.
    Bump { center: f64, width: f64 },
    /// Indicator of `[a, b]` convolved with a Gaussian of the given width.
    Window { a: f64, b: f64, width: f64 },
}

impl TestFunction {
    pub fn bump(center: f64, width: f64) -> Result<Self> {
        if !(width > 0.0 && center.is_finite()) {
            return Err(IdsError::config("test function needs a positive width"));
        }
        Ok(TestFunction::Bump { center, width })
    }

    pub fn window(a: f64, b: f64, width: f64) -> Result<Self> {
        if !(width > 0.0 && a < b) {
            return Err(IdsError::config("window needs a < b and a positive width"));
        }
        Ok(TestFunction::Window { a, b, width })
    }

    /// Closed support after truncation.
    pub fn support(&self) -> (f64, f64) {
        match *self {
            TestFunction::Bump { center, width } => (center - CUTOFF * width, center + CUTOFF * width),
            TestFunction::Window { a, b, width } => (a - CUTOFF * width, b + CUTOFF * width),
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        let (lo, hi) = self.support();
        if x < lo || x > hi {
            return 0.0;
        }
        match *self {
            TestFunction::Bump { center, width } => {
                let z = (x - center) / width;
                let mass = erf(CUTOFF / SQRT_2);
                (-0.5 * z * z).exp() / (width * (2.0 * PI).sqrt() * mass)
            }
            TestFunction::Window { a, b, width } => {
                0.5 * (erf((x - a) / (SQRT_2 * width)) - erf((x - b) / (SQRT_2 * width)))
            }
        }
    }

    pub fn center(&self) -> f64 {
        match *self {
            TestFunction::Bump { center, .. } => center,
            TestFunction::Window { a, b, .. } => 0.5 * (a + b),
        }
    }

    pub fn width(&self) -> f64 {
        match *self {
            TestFunction::Bump { width, .. } | TestFunction::Window { width, .. } => width,
        }
    }
}

/// Which operators the smoothed density of states is taken over.
#[derive(Debug, Clone)]
pub enum DosSource<'a> {
    /// Random box `Lambda_n` with a fixed boundary condition.
    Box {
        spec: &'a CoefficientSpec,
        n: usize,
        bc: BoundaryCondition,
    },
    /// Random periodic approximants with the theta-integrated trace.
    Periodized {
        spec: &'a CoefficientSpec,
        n: usize,
        theta: ThetaGrid,
    },
    /// One deterministic periodic field with the theta-integrated trace.
    Field { field: &'a FieldOnGrid, theta: ThetaGrid },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DosEstimate {
    pub value: f64,
    pub stderr: f64,
    pub samples: usize,
    pub per_sample: Vec<f64>,
    pub warnings: Vec<String>,
}

/// `(1/vol) sum_j phi(lambda_j)` over the eigenvalues in the support of `phi`,
/// averaged over samples (and over theta for periodic sources).
pub fn smoothed_dos(
    source: &DosSource<'_>,
    phi: &TestFunction,
    samples: usize,
    seed: u64,
) -> Result<DosEstimate> {
    if samples == 0 {
        return Err(IdsError::config("samples must be at least 1"));
    }
    let samples = match source {
        DosSource::Field { .. } => 1,
        _ => samples,
    };
    let results = ordered_map_range(samples, |s| -> Result<(f64, Vec<f64>)> {
        let idx = s as u64;
        let wrap = |e: IdsError| IdsError::Sample { seed, index: idx, source: Box::new(e) };
        match source {
            DosSource::Box { spec, n, bc } => {
                let (_, f) = sample_field(spec, *n, seed, idx).map_err(wrap)?;
                let a = assemble(&f, bc).map_err(wrap)?;
                let ev = window_eigenvalues(&a, phi).map_err(wrap)?;
                Ok((ev.iter().map(|l| phi.eval(*l)).sum::<f64>() / f.volume(), ev))
            }
            DosSource::Periodized { spec, n, theta } => {
                let (r, _) = sample_field(spec, *n, seed, idx).map_err(wrap)?;
                let f = periodize(&r, spec).map_err(wrap)?;
                theta_trace(&f, *theta, phi).map_err(wrap)
            }
            DosSource::Field { field, theta } => theta_trace(field, *theta, phi),
        }
    });
    let mut per_sample = Vec::with_capacity(samples);
    let mut spectrum = Vec::new();
    for r in results {
        let (v, ev) = r?;
        per_sample.push(v);
        if spectrum.is_empty() {
            spectrum = ev;
        }
    }
    let (value, stderr) = mean_stderr(&per_sample);
    let mut warnings = Vec::new();
    if let Some(spacing) = median_spacing_near(&spectrum, phi.center(), phi.width()) {
        if phi.width() < 3.0 * spacing {
            let w = format!(
                "test function width {} is below 3x the median level spacing {spacing:.3e}",
                phi.width()
            );
            log::warn!("{w}");
            warnings.push(w);
        }
    }
    Ok(DosEstimate {
        value,
        stderr,
        samples,
        per_sample,
        warnings,
    })
}

fn window_eigenvalues(a: &crate::discretize::StiffnessMatrix, phi: &TestFunction) -> Result<Vec<f64>> {
    let (lo, hi) = phi.support();
    let counter = Counter::new(a);
    eigenvalues_in_with(&counter, lo, hi, DENSE_CAP)
}

fn theta_trace(field: &FieldOnGrid, theta: ThetaGrid, phi: &TestFunction) -> Result<(f64, Vec<f64>)> {
    if !field.periodic {
        return Err(IdsError::domain("theta-integrated trace needs a periodic field"));
    }
    let points = theta.points(field.dimension);
    let mut total = 0.0;
    let mut all = Vec::new();
    for t in &points {
        let a = assemble(field, &BoundaryCondition::floquet(t))?;
        let ev = window_eigenvalues(&a, phi)?;
        total += ev.iter().map(|l| phi.eval(*l)).sum::<f64>();
        all.extend(ev);
    }
    all.sort_by(f64::total_cmp);
    Ok((total / (points.len() as f64 * field.volume()), all))
}

fn median_spacing_near(ev: &[f64], center: f64, width: f64) -> Option<f64> {
    let near: Vec<f64> = ev
        .iter()
        .copied()
        .filter(|l| (l - center).abs() <= 3.0 * width)
        .collect();
    if near.len() < 3 {
        return None;
    }
    let mut gaps: Vec<f64> = near.windows(2).map(|w| w[1] - w[0]).collect();
    gaps.sort_by(f64::total_cmp);
    Some(gaps[gaps.len() / 2])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::Disorder;

    #[test]
    fn bump_has_unit_mass() {
        let phi = TestFunction::bump(0.3, 0.05).unwrap();
        let (lo, hi) = phi.support();
        let k = 20_000;
        let dx = (hi - lo) / k as f64;
        let mass: f64 = (0..k).map(|i| phi.eval(lo + (i as f64 + 0.5) * dx)).sum::<f64>() * dx;
        assert!((mass - 1.0).abs() < 1e-8);
        assert_eq!(phi.eval(hi + 1e-9), 0.0);
        assert!(phi.eval(0.3) > 0.0);
    }

    #[test]
    fn negative_support_gives_zero() {
        let spec = CoefficientSpec::constant(1, 4, 1.0).unwrap();
        let phi = TestFunction::bump(-1.0, 0.1).unwrap();
        let src = DosSource::Box { spec: &spec, n: 10, bc: BoundaryCondition::Neumann };
        let est = smoothed_dos(&src, &phi, 2, 0).unwrap();
        assert_eq!(est.value, 0.0);
    }

    #[test]
    fn window_matches_counting() {
        let spec = CoefficientSpec::uniform_cell(1, 4, 1.0, 0.5, Disorder::constant(1.0)).unwrap();
        let (a, b) = (0.2, 0.6);
        let phi = TestFunction::window(a, b, 1e-4).unwrap();
        let src = DosSource::Box { spec: &spec, n: 60, bc: BoundaryCondition::Dirichlet };
        let est = smoothed_dos(&src, &phi, 1, 0).unwrap();
        let c = crate::ids::finite_volume_ids(&spec, 60, &BoundaryCondition::Dirichlet, &[a, b], 1, 0).unwrap();
        let diff = c.values[1] - c.values[0];
        // a level sitting inside the mollification band contributes fractionally
        assert!((est.value - diff).abs() <= 1.0 / 121.0, "{} vs {diff}", est.value);
    }

    #[test]
    fn degenerate_expectation_is_single_sample() {
        let spec = CoefficientSpec::uniform_cell(1, 4, 1.0, 1.0, Disorder::constant(0.5)).unwrap();
        let phi = TestFunction::bump(0.3, 0.05).unwrap();
        let src = DosSource::Periodized { spec: &spec, n: 3, theta: ThetaGrid::midpoint(8) };
        let one = smoothed_dos(&src, &phi, 1, 0).unwrap();
        let many = smoothed_dos(&src, &phi, 5, 0).unwrap();
        assert_eq!(one.value, many.value);
        assert_eq!(many.stderr, 0.0);
    }
}
