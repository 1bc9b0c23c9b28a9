use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use super::curve::{check_energies, IdsCurve, IdsMeta};
use super::finite_volume::reduce_samples;
use crate::discretize::{assemble_with, BoundaryCondition, FaceAverage};
use crate::error::{IdsError, Result};
use crate::field::{
    harmonic_mean_field, mean_field, periodize, sample_field, CoefficientSpec, FieldOnGrid,
};
use crate::parallel::{ordered_map, ordered_map_range};
use crate::spectral::Counter;

/// Adaptive quadrature stops once successive refinements agree to this
/// relative tolerance.
pub const ADAPTIVE_TOL: f64 = 5e-3;
pub const ADAPTIVE_CAP: usize = 128;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ThetaRule {
    /// `theta_j = 2 pi (j + 1/2) / K`
    #[default]
    Midpoint,
    /// `theta_j = 2 pi j / K`, so a single node is `theta = 0`.
    Endpoint,
}

/// Uniform tensor grid on the torus `[0, 2 pi)^d`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ThetaGrid {
    pub nodes: usize,
    pub rule: ThetaRule,
}

impl ThetaGrid {
    pub fn midpoint(nodes: usize) -> Self {
        ThetaGrid { nodes, rule: ThetaRule::Midpoint }
    }

    pub fn endpoint(nodes: usize) -> Self {
        ThetaGrid { nodes, rule: ThetaRule::Endpoint }
    }

    pub fn axis(&self) -> Vec<f64> {
        let off = match self.rule {
            ThetaRule::Midpoint => 0.5,
            ThetaRule::Endpoint => 0.0,
        };
        (0..self.nodes)
            .map(|j| TAU * (j as f64 + off) / self.nodes as f64)
            .collect()
    }

    pub fn points(&self, dimension: usize) -> Vec<Vec<f64>> {
        let ax = self.axis();
        match dimension {
            1 => ax.iter().map(|t| vec![*t]).collect(),
            _ => ax
                .iter()
                .flat_map(|ty| ax.iter().map(move |tx| vec![*tx, *ty]))
                .collect(),
        }
    }
}

/// Floquet counting for one periodic field: the theta-average of
/// `#{eigenvalues of H(theta) <= E}` divided by the box volume.
pub fn floquet_values(
    field: &FieldOnGrid,
    energies: &[f64],
    theta: ThetaGrid,
    face: FaceAverage,
) -> Result<Vec<f64>> {
    check_energies(energies)?;
    if !field.periodic {
        return Err(IdsError::domain(format!(
            "Floquet IDS needs a periodic field, got a {} field",
            field.kind.as_str()
        )));
    }
    if theta.nodes == 0 {
        return Err(IdsError::config("theta grid needs at least one node per axis"));
    }
    let points = theta.points(field.dimension);
    let per_node = ordered_map(&points, |t| -> Result<Vec<usize>> {
        let a = assemble_with(field, &BoundaryCondition::floquet(t), face)?;
        let counter = Counter::new(&a);
        energies.iter().map(|&e| Ok(counter.count(e)?.count)).collect()
    });
    let mut totals = vec![0usize; energies.len()];
    for counts in per_node {
        for (t, c) in totals.iter_mut().zip(counts?) {
            *t += c;
        }
    }
    let denom = points.len() as f64 * field.volume();
    Ok(totals.into_iter().map(|t| t as f64 / denom).collect())
}

pub fn floquet_ids(field: &FieldOnGrid, energies: &[f64], theta: ThetaGrid) -> Result<IdsCurve> {
    let values = floquet_values(field, energies, theta, FaceAverage::Arithmetic)?;
    Ok(IdsCurve {
        energies: energies.to_vec(),
        stderr: vec![0.0; values.len()],
        values,
        meta: IdsMeta {
            method: "floquet".into(),
            bc: "floquet".into(),
            dimension: field.dimension,
            mesh: field.mesh,
            n: field.n,
            extent: field.extent(),
            samples: 1,
            seed: 0,
            theta_nodes: Some(theta.nodes),
            config: serde_json::Value::Null,
        },
    })
}

/// Monte Carlo IDS from periodic approximants: the sample mean of the Floquet
/// IDS of the periodized field on `Lambda_n`.
pub fn periodized_ids(
    spec: &CoefficientSpec,
    n: usize,
    energies: &[f64],
    samples: usize,
    seed: u64,
    theta: ThetaGrid,
) -> Result<IdsCurve> {
    if samples == 0 {
        return Err(IdsError::config("samples must be at least 1"));
    }
    check_energies(energies)?;
    spec.check_box(n)?;
    let rows = ordered_map_range(samples, |s| -> Result<Vec<f64>> {
        let idx = s as u64;
        let wrap = |e: IdsError| IdsError::Sample { seed, index: idx, source: Box::new(e) };
        let (r, _) = sample_field(spec, n, seed, idx).map_err(wrap)?;
        let f = periodize(&r, spec).map_err(wrap)?;
        floquet_values(&f, energies, theta, FaceAverage::Arithmetic).map_err(wrap)
    });
    let rows: Vec<Vec<f64>> = rows.into_iter().collect::<Result<_>>()?;
    let (values, stderr) = reduce_samples(&rows);
    Ok(IdsCurve {
        energies: energies.to_vec(),
        values,
        stderr,
        meta: IdsMeta {
            method: "periodized".into(),
            bc: "floquet".into(),
            dimension: spec.dimension,
            mesh: spec.mesh,
            n,
            extent: 2 * n + 1,
            samples,
            seed,
            theta_nodes: Some(theta.nodes),
            config: serde_json::Value::Null,
        },
    })
}

/// Doubles the node count from `start` until the curve moves by less than
/// [`ADAPTIVE_TOL`] (relative, over nonzero values) or `cap` is reached.
pub fn floquet_ids_adaptive(
    field: &FieldOnGrid,
    energies: &[f64],
    start: usize,
    cap: usize,
) -> Result<IdsCurve> {
    let mut nodes = start.max(1);
    let mut curve = floquet_ids(field, energies, ThetaGrid::midpoint(nodes))?;
    // counts are step functions of the node count, so one agreement can be a coincidence
    let mut agreed = 0;
    while nodes * 2 <= cap {
        nodes *= 2;
        let next = floquet_ids(field, energies, ThetaGrid::midpoint(nodes))?;
        let change = curve
            .values
            .iter()
            .zip(&next.values)
            .filter(|(_, b)| **b > 0.0)
            .map(|(a, b)| (a - b).abs() / b)
            .fold(0.0, f64::max);
        curve = next;
        agreed = if change < ADAPTIVE_TOL { agreed + 1 } else { 0 };
        if agreed == 2 {
            break;
        }
    }
    Ok(curve)
}

/// Which constant-law comparison coefficient to use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MeanKind {
    /// `rho_bar = E(rho)`
    #[default]
    Arithmetic,
    /// `1 / E(1/rho)`, the one-dimensional homogenization limit.
    Harmonic,
}

/// IDS of the periodic comparison operator `-div(rho_bar grad)` on one unit cell.
pub fn homogenized_ids(
    spec: &CoefficientSpec,
    energies: &[f64],
    theta: ThetaGrid,
) -> Result<IdsCurve> {
    homogenized_ids_with(spec, energies, theta, MeanKind::Arithmetic)
}

pub fn homogenized_ids_with(
    spec: &CoefficientSpec,
    energies: &[f64],
    theta: ThetaGrid,
    mean: MeanKind,
) -> Result<IdsCurve> {
    let field = match mean {
        MeanKind::Arithmetic => mean_field(spec)?,
        MeanKind::Harmonic => harmonic_mean_field(spec)?,
    };
    let mut c = floquet_ids(&field, energies, theta)?;
    c.meta.method = match mean {
        MeanKind::Arithmetic => "homogenized".into(),
        MeanKind::Harmonic => "homogenized-harmonic".into(),
    };
    Ok(c)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{Disorder, FieldKind};
    use std::f64::consts::PI;

    #[test]
    fn endpoint_single_node_is_zero() {
        assert_eq!(ThetaGrid::endpoint(1).axis(), vec![0.0]);
        assert_eq!(ThetaGrid::midpoint(1).axis(), vec![PI]);
        assert_eq!(ThetaGrid::midpoint(4).points(2).len(), 16);
    }

    #[test]
    fn constant_coefficient_scaling() {
        // rho = c: N(E) = sqrt(E/c)/pi; unit cell with many theta nodes
        let spec = CoefficientSpec::constant(1, 8, 2.0).unwrap();
        let e = [0.2, 0.5, 1.0];
        let c = homogenized_ids(&spec, &e, ThetaGrid::midpoint(4096)).unwrap();
        for (x, v) in e.iter().zip(&c.values) {
            let exact = (x / 2.0).sqrt() / PI;
            assert!((v - exact).abs() < 0.01 * exact, "{v} vs {exact}");
        }
    }

    #[test]
    fn below_band_bottom_is_zero() {
        let spec = CoefficientSpec::constant(1, 4, 1.0).unwrap();
        let c = homogenized_ids(&spec, &[-0.1, 1e-6], ThetaGrid::midpoint(8)).unwrap();
        assert_eq!(c.values, vec![0.0, 0.0]);
    }

    #[test]
    fn aperiodic_field_is_rejected() {
        let f = FieldOnGrid::new(1, 2, 0, vec![1.0, 1.0], FieldKind::Realized, false, 1.0, 1.0).unwrap();
        assert!(matches!(floquet_ids(&f, &[0.1], ThetaGrid::midpoint(2)), Err(IdsError::Domain(_))));
    }

    #[test]
    fn mean_of_bernoulli_field() {
        let spec = CoefficientSpec::uniform_cell(1, 2, 1.0, 1.0, Disorder::bernoulli(0.5, 0.0, 1.0).unwrap()).unwrap();
        assert_eq!(mean_field(&spec).unwrap().values, vec![1.5, 1.5]);
    }

    #[test]
    fn adaptive_converges() {
        let spec = CoefficientSpec::constant(1, 4, 1.0).unwrap();
        let f = mean_field(&spec).unwrap().tile(20).unwrap();
        let c = floquet_ids_adaptive(&f, &[0.3, 0.6], 2, ADAPTIVE_CAP).unwrap();
        assert!(c.meta.theta_nodes.unwrap() <= ADAPTIVE_CAP);
        let exact = 0.3f64.sqrt() / PI;
        assert!((c.values[0] - exact).abs() < 0.02 * exact, "{:?} {:?}", c.values, c.meta.theta_nodes);
    }

    #[test]
    fn periodized_degenerate_matches_floquet() {
        let spec = CoefficientSpec::uniform_cell(1, 4, 1.0, 1.0, Disorder::constant(0.5)).unwrap();
        let e = [0.2, 1.0];
        let p = periodized_ids(&spec, 3, &e, 3, 1, ThetaGrid::midpoint(8)).unwrap();
        let f = floquet_ids(&mean_field(&spec).unwrap().tile(3).unwrap(), &e, ThetaGrid::midpoint(8)).unwrap();
        assert_eq!(p.values, f.values);
        assert!(p.stderr.iter().all(|s| *s == 0.0));
    }
}
