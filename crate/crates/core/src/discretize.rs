//! Finite-difference assembly of `-div(rho grad)` on a box.
//!
//! Unknowns live at the cell centres of the field grid. Every pair of
//! neighbouring points shares a face whose coefficient is the (arithmetic or
//! harmonic) mean of the two cell values, and contributes
//! `rho_f / h^2 * |u_i - phase * u_j|^2` to the quadratic form.

use std::f64::consts::TAU;
use std::io::Write;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{IdsError, Result};
use crate::field::{FieldKind, FieldOnGrid};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "tag", rename_all = "lowercase")]
pub enum BoundaryCondition {
    Dirichlet,
    Neumann,
    Periodic,
    /// Quasi-periodic `u(x + L e_k) = exp(i theta_k) u(x)`; one phase per axis,
    /// accumulated over one traversal of the box.
    Floquet { theta: Vec<f64> },
}

impl BoundaryCondition {
    pub fn floquet(theta: &[f64]) -> Self {
        BoundaryCondition::Floquet {
            theta: theta.iter().map(|t| t.rem_euclid(TAU)).collect(),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            BoundaryCondition::Dirichlet => "dirichlet",
            BoundaryCondition::Neumann => "neumann",
            BoundaryCondition::Periodic => "periodic",
            BoundaryCondition::Floquet { .. } => "floquet",
        }
    }

    pub fn wraps(&self) -> bool {
        matches!(self, BoundaryCondition::Periodic | BoundaryCondition::Floquet { .. })
    }

    pub fn parse(text: &str) -> Result<Self> {
        match text.to_ascii_lowercase().as_str() {
            "dirichlet" => Ok(BoundaryCondition::Dirichlet),
            "neumann" => Ok(BoundaryCondition::Neumann),
            "periodic" => Ok(BoundaryCondition::Periodic),
            other => Err(IdsError::config(format!(
                "unknown boundary condition '{other}' (dirichlet, neumann, periodic)"
            ))),
        }
    }
}

/// How the coefficient on a face is built from the two adjacent cell values.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FaceAverage {
    #[default]
    Arithmetic,
    Harmonic,
}

impl FaceAverage {
    #[inline]
    pub fn apply(self, a: f64, b: f64) -> f64 {
        match self {
            FaceAverage::Arithmetic => 0.5 * (a + b),
            FaceAverage::Harmonic => 2.0 * a * b / (a + b),
        }
    }
}

/// One term `coef * |u_i - phase * u_j|^2` of the quadratic form. Boundary
/// faces of a Dirichlet box have `j = None` (the exterior value is zero).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Face {
    pub i: usize,
    pub j: Option<usize>,
    pub coef: f64,
    pub phase: Complex64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Entries {
    Real(Vec<f64>),
    Complex(Vec<Complex64>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub kind: FieldKind,
    pub n: usize,
}

/// Sparse Hermitian matrix in compressed-row form, with the grid shape kept
/// around for bandwidth-reducing orderings.
#[derive(Debug, Clone, PartialEq)]
pub struct StiffnessMatrix {
    pub dim: usize,
    pub row_ptr: Vec<usize>,
    pub col_idx: Vec<usize>,
    pub entries: Entries,
    pub h: f64,
    pub bc: BoundaryCondition,
    /// Points per axis; the second entry is 1 in one dimension.
    pub shape: [usize; 2],
    pub provenance: Provenance,
}

/// Faces of the stencil for `field` under `bc`.
pub fn faces(field: &FieldOnGrid, bc: &BoundaryCondition, avg: FaceAverage) -> Result<Vec<Face>> {
    if let Some(v) = field.values.iter().find(|v| !v.is_finite()) {
        return Err(IdsError::domain(format!("non-finite coefficient {v}")));
    }
    let d = field.dimension;
    let p = field.points_per_axis();
    let theta: Vec<f64> = match bc {
        BoundaryCondition::Floquet { theta } => {
            if theta.len() != d {
                return Err(IdsError::Assembly(format!(
                    "Floquet condition has {} angles for a {d}-dimensional box",
                    theta.len()
                )));
            }
            if !field.periodic {
                return Err(IdsError::Assembly(format!(
                    "Floquet condition needs a field whose period is the box; got a {} field",
                    field.kind.as_str()
                )));
            }
            theta.clone()
        }
        _ => vec![0.0; d],
    };
    let inv_h2 = 1.0 / (field.h() * field.h());
    let shape = if d == 1 { [p, 1] } else { [p, p] };
    let index = |ix: usize, iy: usize| ix + shape[0] * iy;
    let mut out = Vec::with_capacity(field.len() * (d + 1));
    for iy in 0..shape[1] {
        for ix in 0..shape[0] {
            let i = index(ix, iy);
            let rho_i = field.values[i];
            for axis in 0..d {
                let (pos, len) = if axis == 0 { (ix, shape[0]) } else { (iy, shape[1]) };
                let step = |q: usize| if axis == 0 { index(q, iy) } else { index(ix, q) };
                if pos + 1 < len {
                    let j = step(pos + 1);
                    out.push(Face {
                        i,
                        j: Some(j),
                        coef: avg.apply(rho_i, field.values[j]) * inv_h2,
                        phase: Complex64::new(1.0, 0.0),
                    });
                } else {
                    match bc {
                        BoundaryCondition::Dirichlet => out.push(Face {
                            i,
                            j: None,
                            coef: rho_i * inv_h2,
                            phase: Complex64::new(0.0, 0.0),
                        }),
                        BoundaryCondition::Neumann => {}
                        BoundaryCondition::Periodic | BoundaryCondition::Floquet { .. } => {
                            let j = step(0);
                            let t = theta[axis];
                            let phase = if t == 0.0 {
                                Complex64::new(1.0, 0.0)
                            } else {
                                Complex64::from_polar(1.0, t)
                            };
                            out.push(Face {
                                i,
                                j: Some(j),
                                coef: avg.apply(rho_i, field.values[j]) * inv_h2,
                                phase,
                            });
                        }
                    }
                }
                if pos == 0 && matches!(bc, BoundaryCondition::Dirichlet) {
                    out.push(Face {
                        i,
                        j: None,
                        coef: rho_i * inv_h2,
                        phase: Complex64::new(0.0, 0.0),
                    });
                }
            }
        }
    }
    Ok(out)
}

/// Assembles the stiffness matrix with arithmetic face averaging.
pub fn assemble(field: &FieldOnGrid, bc: &BoundaryCondition) -> Result<StiffnessMatrix> {
    assemble_with(field, bc, FaceAverage::Arithmetic)
}

pub fn assemble_with(
    field: &FieldOnGrid,
    bc: &BoundaryCondition,
    avg: FaceAverage,
) -> Result<StiffnessMatrix> {
    let fs = faces(field, bc, avg)?;
    let p = field.points_per_axis();
    let shape = if field.dimension == 1 { [p, 1] } else { [p, p] };
    Ok(StiffnessMatrix::from_faces(
        field.len(),
        &fs,
        field.h(),
        bc.clone(),
        shape,
        Provenance { kind: field.kind, n: field.n },
    ))
}

impl StiffnessMatrix {
    /// Sums the face contributions into compressed rows.
    pub fn from_faces(
        dim: usize,
        faces: &[Face],
        h: f64,
        bc: BoundaryCondition,
        shape: [usize; 2],
        provenance: Provenance,
    ) -> Self {
        let mut rows: Vec<Vec<(usize, Complex64)>> = vec![Vec::with_capacity(5); dim];
        let mut add = |r: usize, c: usize, v: Complex64| {
            let row = &mut rows[r];
            match row.iter_mut().find(|(cc, _)| *cc == c) {
                Some(e) => e.1 += v,
                None => row.push((c, v)),
            }
        };
        for f in faces {
            let c = Complex64::new(f.coef, 0.0);
            add(f.i, f.i, c);
            if let Some(j) = f.j {
                add(j, j, c);
                add(f.i, j, -c * f.phase);
                add(j, f.i, -c * f.phase.conj());
            }
        }
        let real = rows.iter().flatten().all(|(_, v)| v.im == 0.0);
        let mut row_ptr = Vec::with_capacity(dim + 1);
        let mut col_idx = Vec::new();
        let mut vals = Vec::new();
        row_ptr.push(0);
        for mut row in rows {
            row.sort_by_key(|(c, _)| *c);
            for (c, v) in row {
                col_idx.push(c);
                vals.push(v);
            }
            row_ptr.push(col_idx.len());
        }
        let entries = if real {
            Entries::Real(vals.iter().map(|v| v.re).collect())
        } else {
            Entries::Complex(vals)
        };
        StiffnessMatrix {
            dim,
            row_ptr,
            col_idx,
            entries,
            h,
            bc,
            shape,
            provenance,
        }
    }

    /// Diagonal matrix, mostly for tests and oracles.
    pub fn from_diagonal(diag: &[f64]) -> Self {
        let n = diag.len();
        StiffnessMatrix {
            dim: n,
            row_ptr: (0..=n).collect(),
            col_idx: (0..n).collect(),
            entries: Entries::Real(diag.to_vec()),
            h: 1.0,
            bc: BoundaryCondition::Neumann,
            shape: [n, 1],
            provenance: Provenance { kind: FieldKind::Realized, n: 0 },
        }
    }

    /// Sparse matrix from a dense real symmetric one (upper triangle mirrored).
    pub fn from_dense_symmetric(a: &DMatrix<f64>) -> Self {
        let n = a.nrows();
        let mut row_ptr = vec![0];
        let mut col_idx = Vec::new();
        let mut vals = Vec::new();
        for i in 0..n {
            for j in 0..n {
                let v = if j >= i { a[(i, j)] } else { a[(j, i)] };
                if v != 0.0 {
                    col_idx.push(j);
                    vals.push(v);
                }
            }
            row_ptr.push(col_idx.len());
        }
        StiffnessMatrix {
            dim: n,
            row_ptr,
            col_idx,
            entries: Entries::Real(vals),
            h: 1.0,
            bc: BoundaryCondition::Neumann,
            shape: [n, 1],
            provenance: Provenance { kind: FieldKind::Realized, n: 0 },
        }
    }

    pub fn is_real(&self) -> bool {
        matches!(self.entries, Entries::Real(_))
    }

    pub fn nnz(&self) -> usize {
        self.col_idx.len()
    }

    pub fn entry(&self, k: usize) -> Complex64 {
        match &self.entries {
            Entries::Real(v) => Complex64::new(v[k], 0.0),
            Entries::Complex(v) => v[k],
        }
    }

    /// Iterates `(row, col, value)` over stored entries.
    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, Complex64)> + '_ {
        (0..self.dim).flat_map(move |r| {
            (self.row_ptr[r]..self.row_ptr[r + 1]).map(move |k| (r, self.col_idx[k], self.entry(k)))
        })
    }

    /// Infinity norm, an upper bound for the spectral radius.
    pub fn norm_inf(&self) -> f64 {
        (0..self.dim)
            .map(|r| {
                (self.row_ptr[r]..self.row_ptr[r + 1])
                    .map(|k| self.entry(k).norm())
                    .sum::<f64>()
            })
            .fold(0.0, f64::max)
    }

    /// `max |A_ij - conj(A_ji)|` over stored entries.
    pub fn hermiticity_defect(&self) -> f64 {
        let dense = self.to_dense_complex();
        let mut worst = 0.0f64;
        for (r, c, v) in self.triplets() {
            worst = worst.max((v - dense[(c, r)].conj()).norm());
        }
        worst
    }

    pub fn apply(&self, x: &[Complex64]) -> Vec<Complex64> {
        (0..self.dim)
            .map(|r| {
                (self.row_ptr[r]..self.row_ptr[r + 1])
                    .map(|k| self.entry(k) * x[self.col_idx[k]])
                    .sum()
            })
            .collect()
    }

    pub fn to_dense_complex(&self) -> DMatrix<Complex64> {
        let mut m = DMatrix::from_element(self.dim, self.dim, Complex64::new(0.0, 0.0));
        for (r, c, v) in self.triplets() {
            m[(r, c)] = v;
        }
        m
    }

    pub fn to_dense_real(&self) -> Option<DMatrix<f64>> {
        let Entries::Real(vals) = &self.entries else {
            return None;
        };
        let mut m = DMatrix::zeros(self.dim, self.dim);
        for r in 0..self.dim {
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                m[(r, self.col_idx[k])] = vals[k];
            }
        }
        Some(m)
    }

    /// Coordinate export `row,col,re,im`.
    pub fn write_coo_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "row,col,re,im")?;
        for (r, c, v) in self.triplets() {
            writeln!(out, "{r},{c},{},{}", v.re, v.im)?;
        }
        Ok(())
    }
}

/// `u* A u`, real by Hermiticity.
pub fn quadratic_form<T: Copy + Into<Complex64>>(matrix: &StiffnessMatrix, u: &[T]) -> Result<f64> {
    if u.len() != matrix.dim {
        return Err(IdsError::DimensionMismatch {
            expected: matrix.dim,
            got: u.len(),
        });
    }
    let x: Vec<Complex64> = u.iter().map(|v| (*v).into()).collect();
    let ax = matrix.apply(&x);
    let s: Complex64 = x.iter().zip(&ax).map(|(a, b)| a.conj() * b).sum();
    Ok(s.re)
}

/// `sum_f coef_f |u_i - phase_f u_j|^2` straight from the faces.
pub fn face_form<T: Copy + Into<Complex64>>(faces: &[Face], u: &[T]) -> f64 {
    faces
        .iter()
        .map(|f| {
            let ui: Complex64 = u[f.i].into();
            let uj: Complex64 = f.j.map(|j| u[j].into()).unwrap_or_default();
            f.coef * (ui - f.phase * uj).norm_sqr()
        })
        .sum()
}
