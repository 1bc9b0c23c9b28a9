use serde::{Deserialize, Serialize};

use crate::discretize::{BoundaryCondition, FaceAverage};
use crate::error::{IdsError, Result};
use crate::field::{periodize, sample_field, CoefficientSpec};
use crate::ids::{finite_volume_samples, floquet_values, ThetaGrid};
use crate::parallel::{mean_stderr, ordered_map_range};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ApproxSettings {
    /// Coupling `n >= eps^{-exponent}` checked before anything runs.
    pub coupling_exponent: f64,
    /// `eta` in the correction `exp(-eps^{-eta})`.
    pub eta: f64,
    pub theta: ThetaGrid,
    /// Box radius and boundary condition of the finite-volume reference.
    pub reference_n: usize,
    pub reference_bc: BoundaryCondition,
    pub seed: u64,
}

impl Default for ApproxSettings {
    fn default() -> Self {
        ApproxSettings {
            coupling_exponent: 1.0,
            eta: 1.0,
            theta: ThetaGrid::midpoint(32),
            reference_n: 200,
            reference_bc: BoundaryCondition::Dirichlet,
            seed: 0,
        }
    }
}

/// A difference of IDS values with its Monte Carlo standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Increment {
    pub value: f64,
    pub stderr: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BracketReport {
    pub energy: f64,
    pub epsilon: f64,
    pub n: usize,
    pub samples: usize,
    /// `E N^n(E + eps/2) - E N^n(E - eps/2)`
    pub inner: Increment,
    /// `N(E + eps) - N(E - eps)` from the finite-volume reference.
    pub middle: Increment,
    /// `E N^n(E + 2 eps) - E N^n(E - 2 eps)`
    pub outer: Increment,
    pub correction: f64,
    pub lower: f64,
    pub upper: f64,
    pub width: f64,
    /// `middle - lower` and `upper - middle`, each in units of the combined
    /// standard error (infinite when both errors vanish and the side holds).
    pub lower_z: f64,
    pub upper_z: f64,
    pub holds: bool,
}

/// Two-sided bracket of the IDS increment over `[E - eps, E + eps]` by
/// expected increments of the periodic approximants, each widened by
/// `exp(-eps^{-eta})`. Holds if both sides are violated by at most 3 sigma.
pub fn approximation_check(
    spec: &CoefficientSpec,
    energy: f64,
    epsilon: f64,
    n: usize,
    samples: usize,
    settings: &ApproxSettings,
) -> Result<BracketReport> {
    if !(epsilon > 0.0 && epsilon < energy / 2.0) {
        return Err(IdsError::config(format!(
            "need 0 < eps < E/2, got eps = {epsilon}, E = {energy}"
        )));
    }
    if samples == 0 {
        return Err(IdsError::config("samples must be at least 1"));
    }
    let required = epsilon.powf(-settings.coupling_exponent);
    if (n as f64) < required {
        return Err(IdsError::config(format!(
            "n = {n} violates n >= eps^-{} = {required:.2}",
            settings.coupling_exponent
        )));
    }
    spec.check_box(n)?;
    spec.check_box(settings.reference_n)?;
    let (e, h) = (energy, epsilon);
    let grid = [e - 2.0 * h, e - h / 2.0, e + h / 2.0, e + 2.0 * h];
    let seed = settings.seed;
    let rows = ordered_map_range(samples, |s| -> Result<Vec<f64>> {
        let idx = s as u64;
        let wrap = |err: IdsError| IdsError::Sample { seed, index: idx, source: Box::new(err) };
        let (r, _) = sample_field(spec, n, seed, idx).map_err(wrap)?;
        let f = periodize(&r, spec).map_err(wrap)?;
        floquet_values(&f, &grid, settings.theta, FaceAverage::Arithmetic).map_err(wrap)
    });
    let rows: Vec<Vec<f64>> = rows.into_iter().collect::<Result<_>>()?;
    let diff = |hi: usize, lo: usize| -> Increment {
        let d: Vec<f64> = rows.iter().map(|r| r[hi] - r[lo]).collect();
        let (value, stderr) = mean_stderr(&d);
        Increment { value, stderr }
    };
    let inner = diff(2, 1);
    let outer = diff(3, 0);

    // Independent stream for the reference so it does not share draws with
    // the approximants.
    let ref_rows = finite_volume_samples(
        spec,
        settings.reference_n,
        &settings.reference_bc,
        &[e - h, e + h],
        samples,
        seed ^ 0x5a5a_5a5a_5a5a_5a5a,
        FaceAverage::Arithmetic,
    )?;
    let d: Vec<f64> = ref_rows.iter().map(|r| r[1] - r[0]).collect();
    let (mv, ms) = mean_stderr(&d);
    let middle = Increment { value: mv, stderr: ms };

    let correction = (-h.powf(-settings.eta)).exp();
    let lower = inner.value - correction;
    let upper = outer.value + correction;
    let z = |gap: f64, a: f64, b: f64| {
        let s = (a * a + b * b).sqrt();
        if s > 0.0 {
            gap / s
        } else if gap >= 0.0 {
            f64::INFINITY
        } else {
            f64::NEG_INFINITY
        }
    };
    let lower_z = z(middle.value - lower, middle.stderr, inner.stderr);
    let upper_z = z(upper - middle.value, middle.stderr, outer.stderr);
    Ok(BracketReport {
        energy,
        epsilon,
        n,
        samples,
        inner,
        middle,
        outer,
        correction,
        lower,
        upper,
        width: upper - lower,
        lower_z,
        upper_z,
        holds: lower_z >= -3.0 && upper_z >= -3.0,
    })
}
