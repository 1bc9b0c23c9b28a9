use super::curve::{check_energies, IdsCurve, IdsMeta};
use crate::discretize::{assemble_with, BoundaryCondition, FaceAverage};
use crate::error::{IdsError, Result};
use crate::field::{sample_field, CoefficientSpec};
use crate::parallel::{mean_stderr, ordered_map_range};
use crate::spectral::Counter;

/// Per-sample finite-volume IDS values `N_Lambda(E)`; row `s` is sample `s`.
pub fn finite_volume_samples(
    spec: &CoefficientSpec,
    n: usize,
    bc: &BoundaryCondition,
    energies: &[f64],
    samples: usize,
    seed: u64,
    face: FaceAverage,
) -> Result<Vec<Vec<f64>>> {
    check_energies(energies)?;
    if samples == 0 {
        return Err(IdsError::config("samples must be at least 1"));
    }
    if matches!(bc, BoundaryCondition::Floquet { .. }) {
        return Err(IdsError::config(
            "finite-volume IDS takes dirichlet, neumann or periodic boundary conditions",
        ));
    }
    spec.check_box(n)?;
    let rows = ordered_map_range(samples, |s| -> Result<Vec<f64>> {
        let idx = s as u64;
        let wrap = |e: IdsError| IdsError::Sample {
            seed,
            index: idx,
            source: Box::new(e),
        };
        let (_, field) = sample_field(spec, n, seed, idx).map_err(wrap)?;
        let a = assemble_with(&field, bc, face).map_err(wrap)?;
        let counter = Counter::new(&a);
        let vol = field.volume();
        energies
            .iter()
            .map(|&e| Ok(counter.count(e).map_err(wrap)?.count as f64 / vol))
            .collect()
    });
    rows.into_iter().collect()
}

/// Column means and standard errors of a sample matrix.
pub fn reduce_samples(rows: &[Vec<f64>]) -> (Vec<f64>, Vec<f64>) {
    let k = rows.first().map_or(0, |r| r.len());
    (0..k)
        .map(|j| {
            let col: Vec<f64> = rows.iter().map(|r| r[j]).collect();
            mean_stderr(&col)
        })
        .unzip()
}

/// Monte Carlo finite-volume IDS: mean over samples of
/// `#{eigenvalues <= E} / vol(Lambda_n)` with `vol = (2n+1)^d`.
pub fn finite_volume_ids(
    spec: &CoefficientSpec,
    n: usize,
    bc: &BoundaryCondition,
    energies: &[f64],
    samples: usize,
    seed: u64,
) -> Result<IdsCurve> {
    finite_volume_ids_with(spec, n, bc, energies, samples, seed, FaceAverage::Arithmetic)
}

pub fn finite_volume_ids_with(
    spec: &CoefficientSpec,
    n: usize,
    bc: &BoundaryCondition,
    energies: &[f64],
    samples: usize,
    seed: u64,
    face: FaceAverage,
) -> Result<IdsCurve> {
    let rows = finite_volume_samples(spec, n, bc, energies, samples, seed, face)?;
    let (values, stderr) = reduce_samples(&rows);
    Ok(IdsCurve {
        energies: energies.to_vec(),
        values,
        stderr,
        meta: IdsMeta {
            method: "finite-volume".into(),
            bc: bc.name().into(),
            dimension: spec.dimension,
            mesh: spec.mesh,
            n,
            extent: 2 * n + 1,
            samples,
            seed,
            theta_nodes: None,
            config: serde_json::Value::Null,
        },
    })
}
