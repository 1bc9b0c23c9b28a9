use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use statrs::distribution::{Beta, ContinuousCDF};

use super::ld::ld_rate;
use crate::discretize::{faces, BoundaryCondition, FaceAverage};
use crate::error::{IdsError, Result};
use crate::field::{mean_field, periodize, sample_field, CoefficientSpec};
use crate::parallel::ordered_map_range;
use crate::spectral::{eigen_count, lowest_eigenpairs};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeviationSettings {
    /// Test subspace: eigenvectors of the periodic `rho = 1` operator with
    /// eigenvalue `<= cutoff_mult * E * rho_upper`.
    pub cutoff_mult: f64,
    /// Two-sided confidence level of the Clopper-Pearson interval.
    pub confidence: f64,
}

impl Default for DeviationSettings {
    fn default() -> Self {
        DeviationSettings { cutoff_mult: 1.0, confidence: 0.95 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeviationEstimate {
    pub n: usize,
    pub energy: f64,
    pub alpha: f64,
    pub trials: usize,
    pub hits: usize,
    pub p_hat: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub subspace_dim: usize,
    pub cutoff: f64,
    /// Largest spectral radius of the restricted form over all trials.
    pub max_radius: f64,
    /// `sup |rho - rho_bar| * (largest test eigenvalue)`: no trial can reach
    /// the threshold when this is below `E^alpha`.
    pub sup_bound: f64,
    pub certified_empty: bool,
    /// Per-cell large-deviation rate of the couplings at `t = E^alpha`.
    pub chernoff_rate: f64,
    pub diagnostic: Option<String>,
}

/// Monte Carlo lower bound on the probability that some `u` in the low
/// kinetic-energy subspace has `|<(rho_n - rho_bar) grad u, grad u>| >= E^alpha |u|^2`.
pub fn deviation_event_probability(
    spec: &CoefficientSpec,
    n: usize,
    energy: f64,
    alpha: f64,
    trials: usize,
    seed: u64,
    settings: &DeviationSettings,
) -> Result<DeviationEstimate> {
    if trials == 0 {
        return Err(IdsError::config("trials must be at least 1"));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(IdsError::config(format!("alpha must lie in (0, 1), got {alpha}")));
    }
    if !(energy > 0.0) || !(settings.cutoff_mult > 0.0) {
        return Err(IdsError::config("energy and cutoff multiplier must be positive"));
    }
    if !(settings.confidence > 0.0 && settings.confidence < 1.0) {
        return Err(IdsError::config("confidence must lie in (0, 1)"));
    }
    spec.check_box(n)?;
    let threshold = energy.powf(alpha);
    let cutoff = settings.cutoff_mult * energy * spec.rho_upper;
    let cells = (2 * n + 1).pow(spec.dimension as u32) as u64;
    let chernoff_rate = ld_rate(&spec.disorder, threshold, cells)?.rate;

    let unit = mean_field(&CoefficientSpec::constant(spec.dimension, spec.mesh, 1.0)?)?.tile(n)?;
    let lap = crate::discretize::assemble(&unit, &BoundaryCondition::Periodic)?;
    let k = eigen_count(&lap, cutoff)?;
    let mut est = DeviationEstimate {
        n,
        energy,
        alpha,
        trials,
        hits: 0,
        p_hat: 0.0,
        ci_low: 0.0,
        ci_high: 0.0,
        subspace_dim: k,
        cutoff,
        max_radius: 0.0,
        sup_bound: 0.0,
        certified_empty: false,
        chernoff_rate,
        diagnostic: None,
    };
    if k == 0 {
        est.certified_empty = true;
        est.diagnostic = Some(format!("no Laplacian eigenvalue <= {cutoff:.3e}; test subspace is empty"));
        est.ci_high = clopper_pearson(0, trials, settings.confidence).1;
        return Ok(est);
    }
    let basis = lowest_eigenpairs(&lap, k)?;
    let lam_max = basis.eigenvalues.last().copied().unwrap_or(0.0).max(0.0);
    let bump_max = spec.rho_bump.iter().fold(0.0f64, |a, b| a.max(b.abs()));
    est.sup_bound = spec.disorder.support_radius() * bump_max * lam_max;
    est.certified_empty = est.sup_bound < threshold;
    if est.certified_empty {
        est.diagnostic = Some(format!(
            "|B(u)| <= {:.3e} < E^alpha = {threshold:.3e} on the test subspace; no trial can hit",
            est.sup_bound
        ));
    }

    let vecs = basis
        .eigenvectors
        .ok_or_else(|| IdsError::NoConvergence("eigenvectors unavailable".into()))?;
    let mean_faces = faces(&mean_field(spec)?.tile(n)?, &BoundaryCondition::Periodic, FaceAverage::Arithmetic)?;
    // Face gradients of the basis: grad[(f, a)] = v_a[i] - phase v_a[j].
    let grad = DMatrix::from_fn(mean_faces.len(), k, |f, a| {
        let face = &mean_faces[f];
        let vi = vecs[(face.i, a)];
        let vj = face.j.map(|j| vecs[(j, a)]).unwrap_or_default();
        vi - face.phase * vj
    });

    let radii = ordered_map_range(trials, |t| -> Result<f64> {
        let idx = t as u64;
        let wrap = |e: IdsError| IdsError::Sample { seed, index: idx, source: Box::new(e) };
        let (r, _) = sample_field(spec, n, seed, idx).map_err(wrap)?;
        let field = periodize(&r, spec).map_err(wrap)?;
        let fs = faces(&field, &BoundaryCondition::Periodic, FaceAverage::Arithmetic).map_err(wrap)?;
        let mut scaled = grad.clone();
        for (f, (a, b)) in fs.iter().zip(&mean_faces).enumerate() {
            let dc = a.coef - b.coef;
            scaled.row_mut(f).scale_mut(dc);
        }
        let form: DMatrix<Complex64> = grad.adjoint() * scaled;
        let ev = form.symmetric_eigenvalues();
        Ok(ev.iter().fold(0.0f64, |m, l| m.max(l.abs())))
    });
    for r in radii {
        let rad = r?;
        est.max_radius = est.max_radius.max(rad);
        if rad >= threshold {
            est.hits += 1;
        }
    }
    est.p_hat = est.hits as f64 / trials as f64;
    let (lo, hi) = clopper_pearson(est.hits, trials, settings.confidence);
    est.ci_low = lo;
    est.ci_high = hi;
    Ok(est)
}

/// Exact binomial confidence interval for `hits` successes in `trials`.
pub fn clopper_pearson(hits: usize, trials: usize, confidence: f64) -> (f64, f64) {
    let a = 1.0 - confidence;
    let (x, n) = (hits as f64, trials as f64);
    let lo = if hits == 0 {
        0.0
    } else {
        Beta::new(x, n - x + 1.0).map(|b| b.inverse_cdf(a / 2.0)).unwrap_or(0.0)
    };
    let hi = if hits == trials {
        1.0
    } else {
        Beta::new(x + 1.0, n - x).map(|b| b.inverse_cdf(1.0 - a / 2.0)).unwrap_or(1.0)
    };
    (lo, hi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::Disorder;

    #[test]
    fn zero_hits_interval() {
        let (lo, hi) = clopper_pearson(0, 100, 0.95);
        assert_eq!(lo, 0.0);
        // closed form 1 - (a/2)^(1/n)
        assert!((hi - (1.0 - 0.025f64.powf(0.01))).abs() < 1e-9);
        let (lo, hi) = clopper_pearson(100, 100, 0.95);
        assert!((lo - 0.025f64.powf(0.01)).abs() < 1e-9);
        assert_eq!(hi, 1.0);
    }

    #[test]
    fn degenerate_law_never_hits() {
        let spec = CoefficientSpec::uniform_cell(1, 4, 1.0, 1.0, Disorder::constant(0.5)).unwrap();
        let est = deviation_event_probability(&spec, 8, 0.2, 0.5, 20, 0, &Default::default()).unwrap();
        assert_eq!(est.hits, 0);
        assert!(est.max_radius < 1e-12);
        assert!(est.subspace_dim >= 1);
    }

    #[test]
    fn strong_disorder_can_hit() {
        let spec = CoefficientSpec::uniform_cell(1, 4, 1.0, 1.0, Disorder::bernoulli(0.5, 0.0, 20.0).unwrap()).unwrap();
        let s = DeviationSettings { cutoff_mult: 4.0, ..Default::default() };
        let est = deviation_event_probability(&spec, 2, 0.05, 0.9, 50, 3, &s).unwrap();
        assert!(!est.certified_empty);
        assert!(est.max_radius <= est.sup_bound * (1.0 + 1e-9));
        assert!(est.hits > 0, "{est:?}");
    }

    #[test]
    fn larger_subspace_never_loses_hits() {
        let spec = CoefficientSpec::uniform_cell(1, 4, 1.0, 1.0, Disorder::bernoulli(0.5, 0.0, 20.0).unwrap()).unwrap();
        let a = DeviationSettings { cutoff_mult: 1.0, ..Default::default() };
        let b = DeviationSettings { cutoff_mult: 4.0, ..Default::default() };
        let x = deviation_event_probability(&spec, 3, 0.05, 0.9, 40, 1, &a).unwrap();
        let y = deviation_event_probability(&spec, 3, 0.05, 0.9, 40, 1, &b).unwrap();
        assert!(y.subspace_dim >= x.subspace_dim);
        assert!(y.hits >= x.hits);
    }
}
