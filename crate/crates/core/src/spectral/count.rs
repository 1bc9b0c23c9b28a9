use nalgebra::DMatrix;
use num_complex::Complex64;

use super::banded::{banded_shifted, ldl, Ordering};
use super::bunch_kaufman;
use crate::discretize::StiffnessMatrix;
use crate::error::{IdsError, Result};

/// Relative width of the inclusive tie band: `eps_m = TIE_TOL * ||A||`.
pub const TIE_TOL: f64 = 1e-9;
const MAX_RETRIES: usize = 8;

/// Outcome of an inertia count.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CountResult {
    pub count: usize,
    /// Shift actually factorized (differs from the request after a breakdown).
    pub shift_used: f64,
    pub retries: usize,
}

/// Reusable counting context: ordering, bandwidth and norm are computed once
/// per matrix.
#[derive(Debug, Clone)]
pub struct Counter<'a> {
    pub matrix: &'a StiffnessMatrix,
    pub ordering: Ordering,
    pub norm: f64,
    dense: bool,
}

impl<'a> Counter<'a> {
    pub fn new(matrix: &'a StiffnessMatrix) -> Self {
        let ordering = Ordering::for_matrix(matrix);
        let norm = matrix.norm_inf().max(f64::MIN_POSITIVE);
        // Without a useful band the pivoted dense path is both faster and safer.
        let dense = matrix.dim > 2 && 2 * ordering.bandwidth + 1 >= matrix.dim;
        Counter {
            matrix,
            ordering,
            norm,
            dense,
        }
    }

    pub fn tie_band(&self) -> f64 {
        TIE_TOL * self.norm
    }

    /// Number of eigenvalues strictly below `sigma` (Sylvester inertia of
    /// `A - sigma I`). A breakdown nudges `sigma` upward by `eps_m * 2^k`.
    pub fn below(&self, sigma: f64) -> Result<CountResult> {
        let eps = self.tie_band();
        let pivmin = f64::EPSILON * f64::EPSILON * self.norm;
        let mut shift = sigma;
        for attempt in 0..=MAX_RETRIES {
            let neg = if self.dense {
                self.dense_negatives(shift)
            } else if self.matrix.is_real() {
                ldl(banded_shifted::<f64>(self.matrix, &self.ordering, shift), pivmin)
                    .map(|f| f.negatives)
            } else {
                ldl(banded_shifted::<Complex64>(self.matrix, &self.ordering, shift), pivmin)
                    .map(|f| f.negatives)
            };
            if let Some(count) = neg {
                return Ok(CountResult {
                    count,
                    shift_used: shift,
                    retries: attempt,
                });
            }
            shift = sigma + eps * f64::powi(2.0, attempt as i32);
        }
        Err(IdsError::Factorization {
            shift,
            attempts: MAX_RETRIES + 1,
        })
    }

    fn dense_negatives(&self, shift: f64) -> Option<usize> {
        let (neg, zero, _) = match self.matrix.to_dense_real() {
            Some(mut a) => {
                for i in 0..a.nrows() {
                    a[(i, i)] -= shift;
                }
                bunch_kaufman::inertia(&a)
            }
            None => {
                let mut a: DMatrix<Complex64> = self.matrix.to_dense_complex();
                for i in 0..a.nrows() {
                    a[(i, i)] -= shift;
                }
                bunch_kaufman::inertia(&a)
            }
        };
        (zero == 0).then_some(neg)
    }

    /// `#{lambda <= E}` with the inclusive tie band `eps_m`.
    pub fn count(&self, energy: f64) -> Result<CountResult> {
        self.below(energy + self.tie_band())
    }
}

/// Counting function `#{eigenvalues <= E + eps_m}` by factorization inertia.
pub fn eigen_count(matrix: &StiffnessMatrix, energy: f64) -> Result<usize> {
    Ok(Counter::new(matrix).count(energy)?.count)
}

/// Reference count from a dense eigensolve.
pub fn dense_count(matrix: &StiffnessMatrix, energy: f64) -> usize {
    let eps = TIE_TOL * matrix.norm_inf();
    super::eigen::dense_eigenvalues(matrix)
        .iter()
        .filter(|l| **l <= energy + eps)
        .count()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::discretize::{assemble, BoundaryCondition};
    use crate::field::{FieldKind, FieldOnGrid};

    #[test]
    fn diagonal_counts() {
        let a = StiffnessMatrix::from_diagonal(&[1.0, 2.0, 3.0]);
        assert_eq!(eigen_count(&a, 2.0).unwrap(), 2);
        assert_eq!(eigen_count(&a, 0.5).unwrap(), 0);
        assert_eq!(eigen_count(&a, 10.0).unwrap(), 3);
    }

    #[test]
    fn dirichlet_sine_spectrum() {
        // closed form: (4/h^2) sin^2(j pi / (2(N+1)))
        let m = 5;
        let f = FieldOnGrid::new(1, m, 3, vec![1.0; 35], FieldKind::Realized, false, 1.0, 1.0).unwrap();
        let a = assemble(&f, &BoundaryCondition::Dirichlet).unwrap();
        let n = a.dim;
        let h = 1.0 / m as f64;
        let exact: Vec<f64> = (1..=n)
            .map(|j| 4.0 / (h * h) * (j as f64 * std::f64::consts::PI / (2.0 * (n + 1) as f64)).sin().powi(2))
            .collect();
        let counter = Counter::new(&a);
        for k in 0..200 {
            let e = k as f64 * 0.53 + 0.011;
            let want = exact.iter().filter(|l| **l <= e).count();
            assert_eq!(counter.count(e).unwrap().count, want, "E={e}");
        }
    }

    #[test]
    fn exact_eigenvalue_is_counted() {
        let a = StiffnessMatrix::from_diagonal(&[0.0, 1.0, 1.0, 4.0]);
        assert_eq!(eigen_count(&a, 1.0).unwrap(), 3);
        assert_eq!(eigen_count(&a, 0.0).unwrap(), 1);
    }

    #[test]
    fn twisted_two_dimensional_counts_match_dense() {
        use crate::field::{mean_field, periodize, sample_field, CoefficientSpec, Disorder};
        let spec = CoefficientSpec::uniform_cell(2, 4, 1.0, 1.0, Disorder::bernoulli(0.5, 0.0, 1.0).unwrap()).unwrap();
        let (r, _) = sample_field(&spec, 2, 5, 0).unwrap();
        let fields = [periodize(&r, &spec).unwrap(), mean_field(&spec).unwrap().tile(2).unwrap()];
        for f in &fields {
            for theta in [[0.0, 0.0], [0.1, 0.1], [0.3, 2.0], [std::f64::consts::PI, 0.7], [1e-3, 0.0], [0.05, 0.05]] {
                let a = assemble(f, &BoundaryCondition::floquet(&theta)).unwrap();
                let ev = super::super::eigen::dense_eigenvalues(&a);
                let counter = Counter::new(&a);
                let gaps: Vec<f64> = ev
                    .windows(2)
                    .filter(|w| w[1] - w[0] > 1e-6 * counter.norm)
                    .map(|w| 0.5 * (w[0] + w[1]))
                    .take(120)
                    .chain((1..200).map(|k| ev[0] + (ev[120] - ev[0]) * ((k as f64 * 0.618_034).fract())))
                    .filter(|e| ev.iter().all(|l| (l - e).abs() > 1e-6 * counter.norm))
                    .collect();
                for e in gaps {
                    let want = ev.iter().filter(|l| **l <= e).count();
                    assert_eq!(counter.count(e).unwrap().count, want, "theta={theta:?} E={e} {:?} {}", &ev[..4], counter.norm);
                }
            }
        }
    }
}
