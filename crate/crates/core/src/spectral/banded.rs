//! Banded Hermitian storage under a bandwidth-reducing ordering, and an
//! unpivoted `L D L^H` factorization used both for inertia and for solves.

use num_complex::Complex64;

use crate::discretize::{Entries, StiffnessMatrix};
use crate::scalar::Scalar;

/// Symmetric permutation of the grid unknowns. Axes that wrap around
/// (periodic or Floquet) are visited in the interleaved order
/// `0, p-1, 1, p-2, ...`, which keeps every wrap-around neighbour within two
/// positions along that axis.
#[derive(Debug, Clone, PartialEq)]
pub struct Ordering {
    /// `new_of[old]`
    pub new_of: Vec<usize>,
    /// `old_of[new]`
    pub old_of: Vec<usize>,
    pub bandwidth: usize,
}

fn interleave(p: usize) -> Vec<usize> {
    // position of each coordinate in the interleaved sequence
    let mut pos = vec![0; p];
    let (mut lo, mut hi) = (0usize, p.wrapping_sub(1));
    let mut k = 0;
    while k < p {
        pos[lo] = k;
        k += 1;
        if k < p {
            pos[hi] = k;
            k += 1;
        }
        lo += 1;
        hi = hi.wrapping_sub(1);
    }
    pos
}

impl Ordering {
    pub fn for_matrix(a: &StiffnessMatrix) -> Self {
        let [px, py] = a.shape;
        let n = a.dim;
        let new_of: Vec<usize> = if a.bc.wraps() && px * py == n {
            let ix = interleave(px);
            let iy = interleave(py);
            (0..n).map(|k| ix[k % px] + px * iy[k / px]).collect()
        } else {
            (0..n).collect()
        };
        let mut old_of = vec![0; n];
        for (old, &new) in new_of.iter().enumerate() {
            old_of[new] = old;
        }
        let bandwidth = a
            .triplets()
            .map(|(r, c, _)| new_of[r].abs_diff(new_of[c]))
            .max()
            .unwrap_or(0);
        Ordering {
            new_of,
            old_of,
            bandwidth,
        }
    }
}

/// Lower band of a Hermitian matrix: row `i` stores columns `i-b ..= i`.
#[derive(Debug, Clone)]
pub struct Banded<S> {
    pub n: usize,
    pub b: usize,
    pub data: Vec<S>,
}

impl<S: Scalar> Banded<S> {
    #[inline]
    fn at(&self, i: usize, j: usize) -> usize {
        i * (self.b + 1) + (j + self.b - i)
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> S {
        self.data[self.at(i, j)]
    }
}

pub trait FromEntry: Scalar {
    fn from_entry(e: &Entries, k: usize) -> Self;
}

impl FromEntry for f64 {
    fn from_entry(e: &Entries, k: usize) -> Self {
        match e {
            Entries::Real(v) => v[k],
            Entries::Complex(v) => v[k].re,
        }
    }
}

impl FromEntry for Complex64 {
    fn from_entry(e: &Entries, k: usize) -> Self {
        match e {
            Entries::Real(v) => Complex64::new(v[k], 0.0),
            Entries::Complex(v) => v[k],
        }
    }
}

/// Banded copy of `P (A - shift I) P^T`.
pub fn banded_shifted<S: FromEntry>(a: &StiffnessMatrix, ord: &Ordering, shift: f64) -> Banded<S> {
    let b = ord.bandwidth;
    let mut m = Banded {
        n: a.dim,
        b,
        data: vec![S::zero(); a.dim * (b + 1)],
    };
    for r in 0..a.dim {
        let nr = ord.new_of[r];
        for k in a.row_ptr[r]..a.row_ptr[r + 1] {
            let nc = ord.new_of[a.col_idx[k]];
            if nc <= nr {
                let idx = m.at(nr, nc);
                m.data[idx] = S::from_entry(&a.entries, k);
            }
        }
    }
    for i in 0..a.dim {
        let idx = m.at(i, i);
        m.data[idx] -= S::from_re(shift);
    }
    m
}

/// Result of an `L D L^H` factorization: `L` overwrites the strict lower band,
/// `D` sits on the diagonal.
#[derive(Debug, Clone)]
pub struct Factor<S> {
    pub band: Banded<S>,
    pub negatives: usize,
    pub min_abs_pivot: f64,
}

/// Unpivoted factorization; returns `None` if a pivot is exactly zero or
/// smaller in magnitude than `pivmin`.
pub fn ldl<S: Scalar>(mut m: Banded<S>, pivmin: f64) -> Option<Factor<S>> {
    let n = m.n;
    let b = m.b;
    let w = b + 1;
    let mut d = vec![0.0f64; n];
    let mut negatives = 0;
    let mut min_abs = f64::INFINITY;
    // scratch: l_jt * d_t for the current row
    let mut ld = vec![S::zero(); w];
    for j in 0..n {
        let lo = j.saturating_sub(b);
        let row = j * w;
        for k in lo..j {
            let krow = k * w;
            let klo = k.saturating_sub(b).max(lo);
            let mut s = m.data[row + (k + b - j)];
            for t in klo..k {
                // l_jt d_t conj(l_kt)
                s -= ld[t - lo] * m.data[krow + (t + b - k)].conj();
            }
            let l = s.scale(1.0 / d[k]);
            m.data[row + (k + b - j)] = l;
            ld[k - lo] = l.scale(d[k]);
        }
        let mut djj = m.data[row + b].re();
        for k in lo..j {
            djj -= (ld[k - lo] * m.data[row + (k + b - j)].conj()).re();
        }
        if !(djj.abs() > pivmin) || !djj.is_finite() {
            return None;
        }
        min_abs = min_abs.min(djj.abs());
        if djj < 0.0 {
            negatives += 1;
        }
        d[j] = djj;
        m.data[row + b] = S::from_re(djj);
    }
    Some(Factor {
        band: m,
        negatives,
        min_abs_pivot: min_abs,
    })
}

impl<S: Scalar> Factor<S> {
    /// Solves `(L D L^H) x = rhs` in place (permuted coordinates).
    pub fn solve_in_place(&self, x: &mut [S]) {
        let n = self.band.n;
        let b = self.band.b;
        let w = b + 1;
        let data = &self.band.data;
        for j in 0..n {
            let lo = j.saturating_sub(b);
            let mut s = x[j];
            for k in lo..j {
                s -= data[j * w + (k + b - j)] * x[k];
            }
            x[j] = s;
        }
        for j in 0..n {
            x[j] = x[j].scale(1.0 / data[j * w + b].re());
        }
        for j in (0..n).rev() {
            let hi = (j + b).min(n - 1);
            let mut s = x[j];
            for i in j + 1..=hi {
                s -= data[i * w + (j + b - i)].conj() * x[i];
            }
            x[j] = s;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn interleave_is_a_permutation_with_short_wraps() {
        for p in 1..12 {
            let pos = interleave(p);
            let mut seen = pos.clone();
            seen.sort();
            assert_eq!(seen, (0..p).collect::<Vec<_>>());
            for i in 0..p {
                let j = (i + 1) % p;
                assert!(pos[i].abs_diff(pos[j]) <= 2, "p={p} i={i}");
            }
        }
    }

    #[test]
    fn tridiagonal_solve() {
        // [[2,-1,0],[-1,2,-1],[0,-1,2]]
        let m = Banded { n: 3, b: 1, data: vec![0.0, 2.0, -1.0, 2.0, -1.0, 2.0] };
        let f = ldl(m, 0.0).unwrap();
        assert_eq!(f.negatives, 0);
        let mut x = vec![1.0, 0.0, 1.0];
        f.solve_in_place(&mut x);
        for v in &x {
            assert!((v - 1.0).abs() < 1e-14);
        }
    }
}
