use serde::{Deserialize, Serialize};

use crate::error::{IdsError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FieldKind {
    Realized,
    Periodized,
    HomogenizedMean,
    Reciprocal,
}

impl FieldKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            FieldKind::Realized => "realized",
            FieldKind::Periodized => "periodized",
            FieldKind::HomogenizedMean => "homogenized-mean",
            FieldKind::Reciprocal => "reciprocal",
        }
    }
}

/// Coefficient samples at the cell centres of a box of `2n+1` unit cells per
/// axis, `mesh` points per unit cell per axis. Axis 0 varies fastest.
///
/// Point `i` along an axis sits at `-(2n+1)/2 + (i + 1/2) h` with `h = 1/mesh`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldOnGrid {
    pub dimension: usize,
    pub mesh: usize,
    pub n: usize,
    pub values: Vec<f64>,
    pub kind: FieldKind,
    /// True when the values describe one period of a `(2n+1)Z^d`-periodic field.
    pub periodic: bool,
    pub lower: f64,
    pub upper: f64,
}

impl FieldOnGrid {
    pub fn new(
        dimension: usize,
        mesh: usize,
        n: usize,
        values: Vec<f64>,
        kind: FieldKind,
        periodic: bool,
        lower: f64,
        upper: f64,
    ) -> Result<Self> {
        let per_axis = mesh * (2 * n + 1);
        let expected = per_axis.pow(dimension as u32);
        if values.len() != expected {
            return Err(IdsError::DimensionMismatch {
                expected,
                got: values.len(),
            });
        }
        let tol = 1e-12 * upper.abs().max(1.0);
        for (i, v) in values.iter().enumerate() {
            if !v.is_finite() {
                return Err(IdsError::domain(format!("non-finite field value at point {i}")));
            }
            if *v < lower - tol || *v > upper + tol {
                return Err(IdsError::domain(format!(
                    "field value {v} at point {i} outside bounds [{lower}, {upper}]"
                )));
            }
        }
        Ok(FieldOnGrid {
            dimension,
            mesh,
            n,
            values,
            kind,
            periodic,
            lower,
            upper,
        })
    }

    pub fn h(&self) -> f64 {
        1.0 / self.mesh as f64
    }

    /// Unit cells per axis.
    pub fn extent(&self) -> usize {
        2 * self.n + 1
    }

    pub fn points_per_axis(&self) -> usize {
        self.mesh * self.extent()
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Continuum volume `(2n+1)^d` of the box.
    pub fn volume(&self) -> f64 {
        (self.extent() as f64).powi(self.dimension as i32)
    }

    pub fn coordinate(&self, i: usize) -> f64 {
        -(self.extent() as f64) / 2.0 + (i as f64 + 0.5) * self.h()
    }

    pub fn linear_index(&self, idx: &[usize]) -> usize {
        let p = self.points_per_axis();
        match self.dimension {
            1 => idx[0],
            _ => idx[0] + p * idx[1],
        }
    }

    /// Value at an arbitrary integer point index, reduced modulo the box.
    /// Meaningful as a field evaluation only for periodic fields.
    pub fn value_wrapped(&self, idx: &[i64]) -> f64 {
        let p = self.points_per_axis() as i64;
        let w: Vec<usize> = idx.iter().map(|i| i.rem_euclid(p) as usize).collect();
        self.values[self.linear_index(&w)]
    }

    /// Tiles a periodic field to `2n+1` copies of its period per axis.
    pub fn tile(&self, n: usize) -> Result<FieldOnGrid> {
        if !self.periodic || self.n != 0 {
            return Err(IdsError::domain(
                "only single-cell periodic fields can be tiled",
            ));
        }
        let m = self.mesh;
        let p = m * (2 * n + 1);
        let values: Vec<f64> = match self.dimension {
            1 => (0..p).map(|i| self.values[i % m]).collect(),
            _ => (0..p * p)
                .map(|k| self.values[(k % p) % m + m * ((k / p) % m)])
                .collect(),
        };
        FieldOnGrid::new(
            self.dimension,
            m,
            n,
            values,
            self.kind,
            true,
            self.lower,
            self.upper,
        )
    }

    pub fn scaled(&self, c: f64) -> Result<FieldOnGrid> {
        if !(c > 0.0) {
            return Err(IdsError::domain("scale factor must be positive"));
        }
        FieldOnGrid::new(
            self.dimension,
            self.mesh,
            self.n,
            self.values.iter().map(|v| v * c).collect(),
            self.kind,
            self.periodic,
            self.lower * c,
            self.upper * c,
        )
    }

    /// Reinterprets a realized box as one period of a periodic field. The
    /// bump lives in a single cell, so periodization never changes values on
    /// the fundamental domain.
    pub fn as_periodic(&self) -> FieldOnGrid {
        let mut f = self.clone();
        f.periodic = true;
        if f.kind == FieldKind::Realized {
            f.kind = FieldKind::Periodized;
        }
        f
    }
}
