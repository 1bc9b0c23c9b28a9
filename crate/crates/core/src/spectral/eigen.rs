//! Low-lying eigenpairs: bisection on inertia counts for the eigenvalues,
//! shift-invert block iteration for the vectors, final Rayleigh-Ritz.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::banded::{banded_shifted, ldl};
use super::count::Counter;
use crate::discretize::StiffnessMatrix;
use crate::error::{IdsError, Result};

/// Largest dimension handled by dense eigensolves.
pub const DENSE_CAP: usize = 4096;
/// Below this size the dense solver is simply used directly.
const SMALL_DENSE: usize = 160;
const RESIDUAL_TOL: f64 = 1e-8;
const MAX_SWEEPS: usize = 40;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Dense,
    Inertia,
    Iterative,
}

#[derive(Debug, Clone)]
pub struct SpectrumSlice {
    /// Ascending.
    pub eigenvalues: Vec<f64>,
    /// Column `k` belongs to `eigenvalues[k]`.
    pub eigenvectors: Option<DMatrix<Complex64>>,
    pub method: Method,
    pub norm: f64,
}

impl SpectrumSlice {
    pub fn count_below(&self, energy: f64) -> usize {
        let eps = super::count::TIE_TOL * self.norm;
        self.eigenvalues.iter().filter(|l| **l <= energy + eps).count()
    }

    pub fn vector(&self, k: usize) -> Option<Vec<Complex64>> {
        self.eigenvectors
            .as_ref()
            .map(|v| v.column(k).iter().copied().collect())
    }

    /// `max_k ||A v_k - lambda_k v_k||`.
    pub fn max_residual(&self, a: &StiffnessMatrix) -> f64 {
        let Some(v) = &self.eigenvectors else { return 0.0 };
        (0..v.ncols())
            .map(|k| {
                let x: Vec<Complex64> = v.column(k).iter().copied().collect();
                let ax = a.apply(&x);
                ax.iter()
                    .zip(&x)
                    .map(|(y, xi)| (y - xi * self.eigenvalues[k]).norm_sqr())
                    .sum::<f64>()
                    .sqrt()
            })
            .fold(0.0, f64::max)
    }

    /// `max |V^H V - I|`.
    pub fn orthogonality_defect(&self) -> f64 {
        let Some(v) = &self.eigenvectors else { return 0.0 };
        let g = v.adjoint() * v;
        let mut worst = 0.0f64;
        for i in 0..g.nrows() {
            for j in 0..g.ncols() {
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((g[(i, j)] - target).norm());
            }
        }
        worst
    }
}

/// All eigenvalues, ascending, from a dense Hermitian eigensolve.
pub fn dense_eigenvalues(a: &StiffnessMatrix) -> Vec<f64> {
    let mut ev: Vec<f64> = match a.to_dense_real() {
        Some(m) => m.symmetric_eigenvalues().iter().copied().collect(),
        None => a.to_dense_complex().symmetric_eigenvalues().iter().copied().collect(),
    };
    ev.sort_by(f64::total_cmp);
    ev
}

fn dense_pairs(a: &StiffnessMatrix, k: usize) -> SpectrumSlice {
    let (vals, vecs): (Vec<f64>, DMatrix<Complex64>) = match a.to_dense_real() {
        Some(m) => {
            let e = m.symmetric_eigen();
            (e.eigenvalues.iter().copied().collect(), e.eigenvectors.map(|x| Complex64::new(x, 0.0)))
        }
        None => {
            let e = a.to_dense_complex().symmetric_eigen();
            (e.eigenvalues.iter().copied().collect(), e.eigenvectors)
        }
    };
    let mut order: Vec<usize> = (0..vals.len()).collect();
    order.sort_by(|&i, &j| vals[i].total_cmp(&vals[j]));
    order.truncate(k);
    let eigenvalues = order.iter().map(|&i| vals[i]).collect();
    let eigenvectors = DMatrix::from_fn(a.dim, order.len(), |r, c| vecs[(r, order[c])]);
    SpectrumSlice {
        eigenvalues,
        eigenvectors: Some(eigenvectors),
        method: Method::Dense,
        norm: a.norm_inf(),
    }
}

/// Eigenvalues in `(lo, hi]` by bisection on inertia counts, down to a few
/// ulps (or `1e-17 ||A||`). The result is only as good as the counts, which
/// can be off by about `1e-9 ||A||` inside tight clusters; use
/// [`lowest_eigenpairs`] when clustered values matter.
pub fn eigenvalues_in(a: &StiffnessMatrix, lo: f64, hi: f64) -> Result<Vec<f64>> {
    let counter = Counter::new(a);
    eigenvalues_in_with(&counter, lo, hi, DENSE_CAP)
}

pub(crate) fn eigenvalues_in_with(
    counter: &Counter<'_>,
    lo: f64,
    hi: f64,
    cap: usize,
) -> Result<Vec<f64>> {
    if hi <= lo {
        return Ok(Vec::new());
    }
    let tol = 1e-17 * counter.norm;
    let c_lo = counter.below(lo)?.count;
    let c_hi = counter.below(hi)?.count;
    if c_hi - c_lo > cap {
        return Err(IdsError::SizeCap(format!(
            "{} eigenvalues in [{lo}, {hi}] exceed the cap {cap}; use a smaller box or window",
            c_hi - c_lo
        )));
    }
    let mut out = Vec::with_capacity(c_hi - c_lo);
    let mut stack = vec![(lo, hi, c_lo, c_hi)];
    while let Some((a, b, ca, cb)) = stack.pop() {
        if cb == ca {
            continue;
        }
        if b - a <= tol.max(2.0 * f64::EPSILON * b.abs().max(a.abs())) {
            out.extend(std::iter::repeat(0.5 * (a + b)).take(cb - ca));
            continue;
        }
        let mid = 0.5 * (a + b);
        let cm = counter.below(mid)?.count.clamp(ca, cb);
        // right half first so the left half is processed next
        stack.push((mid, b, cm, cb));
        stack.push((a, mid, ca, cm));
    }
    out.sort_by(f64::total_cmp);
    Ok(out)
}

/// The `k` smallest eigenvalues.
pub fn lowest_eigenvalues(a: &StiffnessMatrix, k: usize) -> Result<Vec<f64>> {
    let counter = Counter::new(a);
    lowest_eigenvalues_with(&counter, k)
}

fn lowest_eigenvalues_with(counter: &Counter<'_>, k: usize) -> Result<Vec<f64>> {
    let n = counter.matrix.dim;
    let k = k.min(n);
    if k == 0 {
        return Ok(Vec::new());
    }
    let lo = -counter.norm - 1.0;
    // grow the upper end until it holds k eigenvalues
    let mut hi = counter.norm * 1e-3;
    while counter.below(hi)?.count < k && hi < 2.0 * counter.norm + 1.0 {
        hi = (hi * 4.0).min(2.0 * counter.norm + 1.0);
    }
    let all = eigenvalues_in_with(counter, lo, hi, n)?;
    Ok(all.into_iter().take(k).collect())
}

/// The `k` smallest eigenpairs with orthonormal eigenvectors.
pub fn lowest_eigenpairs(a: &StiffnessMatrix, k: usize) -> Result<SpectrumSlice> {
    if k > a.dim {
        return Err(IdsError::DimensionMismatch {
            expected: a.dim,
            got: k,
        });
    }
    if a.dim <= SMALL_DENSE {
        return Ok(dense_pairs(a, k));
    }
    match iterative_pairs(a, k) {
        Ok(s) => Ok(s),
        Err(e) if a.dim <= DENSE_CAP => {
            log::debug!("iterative eigensolver failed ({e}); falling back to dense");
            Ok(dense_pairs(a, k))
        }
        Err(e) => Err(e),
    }
}

fn iterative_pairs(a: &StiffnessMatrix, k: usize) -> Result<SpectrumSlice> {
    let counter = Counter::new(a);
    let norm = counter.norm;
    let n = a.dim;
    if k == 0 {
        return Ok(SpectrumSlice {
            eigenvalues: Vec::new(),
            eigenvectors: Some(DMatrix::zeros(n, 0)),
            method: Method::Iterative,
            norm,
        });
    }
    // one extra value decides whether the last cluster continues past k
    let vals = lowest_eigenvalues_with(&counter, (k + 1).min(n))?;
    let cluster_tol = 1e-8 * norm;
    let mut clusters: Vec<(usize, usize)> = Vec::new();
    let mut start = 0;
    for i in 1..=vals.len() {
        if i == vals.len() || vals[i] - vals[i - 1] > cluster_tol {
            if start < k {
                clusters.push((start, i));
            }
            start = i;
        }
    }
    let ord = &counter.ordering;
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_1a2c);
    let mut basis: Vec<DVector<Complex64>> = Vec::new();
    for &(s, e) in &clusters {
        let width = e - s;
        let below = if s > 0 { vals[s] - vals[s - 1] } else { norm };
        let delta = (1e-9 * norm).max(1e-12).min(0.25 * below);
        let mut sigma = vals[s] - delta;
        let factor = loop {
            let f = ldl(banded_shifted::<Complex64>(a, ord, sigma), 0.0);
            match f {
                Some(f) => break f,
                None => sigma -= delta,
            }
        };
        let mut block: Vec<DVector<Complex64>> = (0..width)
            .map(|_| DVector::from_fn(n, |_, _| Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)))
            .collect();
        let mut converged = false;
        for _ in 0..MAX_SWEEPS {
            for v in block.iter_mut() {
                let mut x: Vec<Complex64> = (0..n).map(|i| v[ord.old_of[i]]).collect();
                factor.solve_in_place(&mut x);
                for (i, xi) in x.into_iter().enumerate() {
                    v[ord.old_of[i]] = xi;
                }
            }
            orthonormalize(&basis, &mut block);
            let worst = block
                .iter()
                .map(|v| {
                    let x: Vec<Complex64> = v.iter().copied().collect();
                    let ax = DVector::from_vec(a.apply(&x));
                    let rq = v.dotc(&ax).re;
                    (ax - v * Complex64::new(rq, 0.0)).norm()
                })
                .fold(0.0, f64::max);
            if worst <= 0.1 * RESIDUAL_TOL * norm {
                converged = true;
                break;
            }
        }
        if !converged {
            log::debug!("cluster at {} not fully converged", vals[s]);
        }
        basis.extend(block);
    }
    let v = DMatrix::from_columns(&basis);
    let av = DMatrix::from_columns(
        &basis
            .iter()
            .map(|b| DVector::from_vec(a.apply(&b.iter().copied().collect::<Vec<_>>())))
            .collect::<Vec<_>>(),
    );
    let h = v.adjoint() * &av;
    let h = (&h + h.adjoint()) * Complex64::new(0.5, 0.0);
    let eig = h.symmetric_eigen();
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    order.truncate(k);
    let rotated = &v * &eig.eigenvectors;
    let vectors = DMatrix::from_fn(n, k, |r, c| rotated[(r, order[c])]);
    let slice = SpectrumSlice {
        eigenvalues: order.iter().map(|&i| eig.eigenvalues[i]).collect(),
        eigenvectors: Some(vectors),
        method: Method::Iterative,
        norm,
    };
    let res = slice.max_residual(a);
    let orth = slice.orthogonality_defect();
    if res > RESIDUAL_TOL * norm || orth > 1e-10 {
        return Err(IdsError::NoConvergence(format!(
            "residual {res:e}, orthogonality defect {orth:e}"
        )));
    }
    Ok(slice)
}

/// Modified Gram-Schmidt of `block` against `fixed` and itself (two passes).
fn orthonormalize(fixed: &[DVector<Complex64>], block: &mut [DVector<Complex64>]) {
    for _ in 0..2 {
        for i in 0..block.len() {
            let (done, rest) = block.split_at_mut(i);
            let v = &mut rest[0];
            for q in fixed.iter().chain(done.iter()) {
                let c = q.dotc(v);
                *v -= q * c;
            }
            let nrm = v.norm();
            if nrm > 0.0 {
                *v /= Complex64::new(nrm, 0.0);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::discretize::{assemble, BoundaryCondition};
    use crate::field::{FieldKind, FieldOnGrid};

    fn field(n: usize, m: usize, vals: impl Fn(usize) -> f64, periodic: bool) -> FieldOnGrid {
        let len = m * (2 * n + 1);
        let v: Vec<f64> = (0..len).map(vals).collect();
        let lo = v.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        FieldOnGrid::new(1, m, n, v, FieldKind::Periodized, periodic, lo, hi).unwrap()
    }

    #[test]
    fn periodic_constant_has_zero_mode() {
        let f = field(20, 8, |_| 1.0, true);
        let a = assemble(&f, &BoundaryCondition::Periodic).unwrap();
        let s = lowest_eigenpairs(&a, 5).unwrap();
        assert_eq!(s.method, Method::Iterative);
        assert!(s.eigenvalues[0].abs() < 1e-9);
        let v0 = s.vector(0).unwrap();
        let phase = v0[0];
        for x in &v0 {
            assert!((x - phase).norm() < 1e-8);
        }
        // doubly degenerate plane waves
        assert!((s.eigenvalues[1] - s.eigenvalues[2]).abs() < 1e-8);
        assert!(s.max_residual(&a) <= 1e-8 * s.norm);
        assert!(s.orthogonality_defect() < 1e-10);
    }

    #[test]
    fn iterative_matches_dense() {
        let f = field(12, 8, |i| if (i / 5) % 3 == 0 { 2.0 } else { 1.0 }, true);
        let a = assemble(&f, &BoundaryCondition::floquet(&[0.9])).unwrap();
        let s = lowest_eigenpairs(&a, 10).unwrap();
        let d = dense_eigenvalues(&a);
        for k in 0..10 {
            assert!((s.eigenvalues[k] - d[k]).abs() <= 1e-8 * d[k].abs().max(1e-3), "{k}");
        }
    }

    #[test]
    fn window_bisection() {
        let f = field(3, 4, |i| 1.0 + (i % 3) as f64, false);
        let a = assemble(&f, &BoundaryCondition::Neumann).unwrap();
        let d = dense_eigenvalues(&a);
        let w = eigenvalues_in(&a, 0.5, 40.0).unwrap();
        let want: Vec<f64> = d.iter().copied().filter(|l| *l > 0.5 && *l <= 40.0).collect();
        assert_eq!(w.len(), want.len());
        for (x, y) in w.iter().zip(&want) {
            assert!((x - y).abs() < 1e-9 * a.norm_inf());
        }
    }
}
