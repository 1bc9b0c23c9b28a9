use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::grid::{FieldKind, FieldOnGrid};
use super::spec::CoefficientSpec;
use crate::error::{IdsError, Result};

/// One draw of the couplings `omega_gamma` for the lattice sites of the box
/// `Lambda_n`, i.e. integer coordinates `-n..=n` per axis (axis 0 fastest).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Realization {
    pub dimension: usize,
    pub n: usize,
    pub omega: Vec<f64>,
    pub master_seed: u64,
    pub sample_index: u64,
}

impl Realization {
    pub fn extent(&self) -> usize {
        2 * self.n + 1
    }

    /// Coupling of the site with lattice coordinates `gamma` (each in `-n..=n`).
    pub fn omega_at(&self, gamma: &[i64]) -> f64 {
        let e = self.extent();
        let n = self.n as i64;
        let mut k = 0usize;
        let mut stride = 1usize;
        for g in gamma {
            k += ((g + n) as usize) * stride;
            stride *= e;
        }
        self.omega[k]
    }
}

fn zigzag(x: i64) -> u64 {
    ((x << 1) ^ (x >> 63)) as u64
}

/// Counter-based stream position of a lattice site. Independent of `n`, so the
/// same site gets the same coupling in every box that contains it.
fn site_key(gamma: &[i64]) -> u64 {
    match gamma {
        [a] => zigzag(*a),
        [a, b] => (zigzag(*a) & 0xffff_ffff) << 32 | (zigzag(*b) & 0xffff_ffff),
        _ => unreachable!("dimension is 1 or 2"),
    }
}

/// Uniform in `[0,1)` for site `gamma` of sample `sample_index`.
pub(crate) fn site_uniform(base: &ChaCha8Rng, sample_index: u64, gamma: &[i64]) -> f64 {
    let mut rng = base.clone();
    rng.set_stream(sample_index);
    rng.set_word_pos(2 * u128::from(site_key(gamma)));
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

pub fn draw_realization(spec: &CoefficientSpec, n: usize, seed: u64, idx: u64) -> Realization {
    let base = ChaCha8Rng::seed_from_u64(seed);
    let e = 2 * n + 1;
    let sites = e.pow(spec.dimension as u32);
    let omega = (0..sites)
        .map(|k| {
            let gamma: Vec<i64> = match spec.dimension {
                1 => vec![k as i64 - n as i64],
                _ => vec![(k % e) as i64 - n as i64, (k / e) as i64 - n as i64],
            };
            spec.disorder.draw(site_uniform(&base, idx, &gamma))
        })
        .collect();
    Realization {
        dimension: spec.dimension,
        n,
        omega,
        master_seed: seed,
        sample_index: idx,
    }
}

/// Evaluates `rho_plus + sum_gamma omega_gamma rho_bump(. - gamma)` on the box
/// for the given couplings.
pub(crate) fn field_from_omega(
    spec: &CoefficientSpec,
    n: usize,
    omega: &[f64],
    kind: FieldKind,
    periodic: bool,
) -> Result<FieldOnGrid> {
    let m = spec.mesh;
    let e = 2 * n + 1;
    let p = m * e;
    let d = spec.dimension;
    let values: Vec<f64> = (0..p.pow(d as u32))
        .map(|k| {
            let (ix, iy) = (k % p, k / p);
            let (cell, local) = match d {
                1 => (ix / m, ix % m),
                _ => ((ix / m) + e * (iy / m), (ix % m) + m * (iy % m)),
            };
            spec.rho_plus[local] + omega[cell] * spec.rho_bump[local]
        })
        .collect();
    FieldOnGrid::new(d, m, n, values, kind, periodic, spec.rho_lower, spec.rho_upper)
}

/// Samples the couplings for `(seed, idx)` and evaluates the field on `Lambda_n`.
pub fn sample_field(
    spec: &CoefficientSpec,
    n: usize,
    seed: u64,
    idx: u64,
) -> Result<(Realization, FieldOnGrid)> {
    spec.check_box(n)?;
    let r = draw_realization(spec, n, seed, idx);
    let f = field_from_omega(spec, n, &r.omega, FieldKind::Realized, false)?;
    Ok((r, f))
}

/// `(2n+1)Z^d`-periodic approximant built from one realization, returned on
/// its fundamental domain `Lambda_n`.
pub fn periodize(realization: &Realization, spec: &CoefficientSpec) -> Result<FieldOnGrid> {
    if realization.dimension != spec.dimension {
        return Err(IdsError::config("realization and spec dimensions differ"));
    }
    spec.check_box(realization.n)?;
    // With a single-cell bump the copies translated by (2n+1)Z^d never
    // overlap, so each point of the fundamental domain sees exactly the
    // coupling of its own cell.
    field_from_omega(
        spec,
        realization.n,
        &realization.omega,
        FieldKind::Periodized,
        true,
    )
}

/// `rho_bar = rho_plus + E(omega) rho_bump` on one unit cell.
pub fn mean_field(spec: &CoefficientSpec) -> Result<FieldOnGrid> {
    let w = spec.disorder.mean();
    field_from_omega(spec, 0, &[w], FieldKind::HomogenizedMean, true)
}

/// Harmonic-mean alternative for the homogenized comparison: the pointwise
/// reciprocal of `E(1/rho)`.
pub fn harmonic_mean_field(spec: &CoefficientSpec) -> Result<FieldOnGrid> {
    let values: Vec<f64> = spec
        .rho_plus
        .iter()
        .zip(&spec.rho_bump)
        .map(|(&p, &b)| 1.0 / expected_reciprocal(spec, p, b))
        .collect();
    FieldOnGrid::new(
        spec.dimension,
        spec.mesh,
        0,
        values,
        FieldKind::HomogenizedMean,
        true,
        spec.rho_lower,
        spec.rho_upper,
    )
}

fn expected_reciprocal(spec: &CoefficientSpec, p: f64, b: f64) -> f64 {
    use super::disorder::Disorder;
    match spec.disorder {
        Disorder::Bernoulli { p: q, v0, v1 } => q / (p + v1 * b) + (1.0 - q) / (p + v0 * b),
        Disorder::Uniform { a, b: hi } => {
            if b == 0.0 || a == hi {
                1.0 / (p + 0.5 * (a + hi) * b)
            } else {
                ((p + hi * b).ln() - (p + a * b).ln()) / (b * (hi - a))
            }
        }
    }
}

pub fn reciprocal_field(field: &FieldOnGrid) -> Result<FieldOnGrid> {
    if let Some((i, v)) = field.values.iter().enumerate().find(|(_, v)| !(**v > 0.0)) {
        return Err(IdsError::domain(format!(
            "cannot take reciprocal of value {v} at point {i}"
        )));
    }
    FieldOnGrid::new(
        field.dimension,
        field.mesh,
        field.n,
        field.values.iter().map(|v| 1.0 / v).collect(),
        FieldKind::Reciprocal,
        field.periodic,
        1.0 / field.upper,
        1.0 / field.lower,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::Disorder;

    fn bern(p: f64) -> Disorder {
        Disorder::bernoulli(p, 0.0, 1.0).unwrap()
    }

    #[test]
    fn no_bump_gives_background() {
        let spec = CoefficientSpec::new(1, 4, vec![1.0, 2.0, 3.0, 4.0], vec![0.0], bern(0.5)).unwrap();
        let (_, f) = sample_field(&spec, 3, 7, 0).unwrap();
        for (i, v) in f.values.iter().enumerate() {
            assert_eq!(*v, spec.rho_plus[i % 4]);
        }
    }

    #[test]
    fn degenerate_law_gives_two() {
        let spec = CoefficientSpec::uniform_cell(2, 3, 1.0, 1.0, bern(1.0)).unwrap();
        let (r, f) = sample_field(&spec, 2, 1, 5).unwrap();
        assert!(r.omega.iter().all(|w| *w == 1.0));
        assert!(f.values.iter().all(|v| *v == 2.0));
    }

    #[test]
    fn reproducible_and_nested() {
        let spec = CoefficientSpec::uniform_cell(1, 2, 1.0, 1.0, Disorder::uniform(0.0, 1.0).unwrap()).unwrap();
        let a = draw_realization(&spec, 5, 42, 3);
        let b = draw_realization(&spec, 5, 42, 3);
        assert_eq!(a, b);
        let c = draw_realization(&spec, 5, 42, 4);
        assert_ne!(a.omega, c.omega);
        // Same site, bigger box: same coupling.
        let big = draw_realization(&spec, 9, 42, 3);
        for g in -5..=5 {
            assert_eq!(a.omega_at(&[g]), big.omega_at(&[g]));
        }
    }

    #[test]
    fn periodize_single_cell() {
        let spec = CoefficientSpec::new(1, 4, vec![1.0], vec![0.0, 1.0, 1.0, 0.0], bern(0.5)).unwrap();
        let r = Realization { dimension: 1, n: 0, omega: vec![1.0], master_seed: 0, sample_index: 0 };
        let f = periodize(&r, &spec).unwrap();
        assert_eq!(f.values, vec![1.0, 2.0, 2.0, 1.0]);
        assert!(f.periodic);
    }

    #[test]
    fn constant_disorder_periodizes_to_mean() {
        let spec = CoefficientSpec::uniform_cell(1, 3, 1.0, 0.5, Disorder::uniform(1.0, 3.0).unwrap()).unwrap();
        let r = Realization { dimension: 1, n: 2, omega: vec![2.0; 5], master_seed: 0, sample_index: 0 };
        let p = periodize(&r, &spec).unwrap();
        let mean = mean_field(&spec).unwrap().tile(2).unwrap();
        assert_eq!(p.values, mean.values);
    }

    #[test]
    fn periodized_translation_invariance() {
        let spec = CoefficientSpec::new(1, 3, vec![1.0], vec![0.5, 1.0, 0.5], bern(0.5)).unwrap();
        let r = Realization { dimension: 1, n: 2, omega: vec![1.0, 0.0, 1.0, 1.0, 0.0], master_seed: 0, sample_index: 0 };
        let f = periodize(&r, &spec).unwrap();
        let period = f.points_per_axis() as i64;
        for i in -40i64..40 {
            assert_eq!(f.value_wrapped(&[i]), f.value_wrapped(&[i + period]));
        }
        // cell gamma = -2 has omega 1: values 1.5, 2, 1.5
        assert_eq!(&f.values[0..3], &[1.5, 2.0, 1.5]);
        assert_eq!(&f.values[3..6], &[1.0, 1.0, 1.0]);
    }

    #[test]
    fn reciprocal_cases() {
        let f = FieldOnGrid::new(1, 2, 0, vec![1.0, 2.0], FieldKind::Realized, false, 1.0, 2.0).unwrap();
        let r = reciprocal_field(&f).unwrap();
        assert_eq!(r.values, vec![1.0, 0.5]);
        assert_eq!((r.lower, r.upper), (0.5, 1.0));
        assert_eq!(r.kind, FieldKind::Reciprocal);
        let rr = reciprocal_field(&r).unwrap();
        for (a, b) in rr.values.iter().zip(&f.values) {
            assert!((a - b).abs() <= 1e-15 * b);
        }
        let mut bad = f.clone();
        bad.values[1] = 0.0;
        assert!(reciprocal_field(&bad).is_err());
    }

    #[test]
    fn mean_values() {
        let spec = CoefficientSpec::uniform_cell(1, 2, 1.0, 1.0, bern(0.5)).unwrap();
        assert_eq!(mean_field(&spec).unwrap().values, vec![1.5, 1.5]);
        let h = harmonic_mean_field(&spec).unwrap();
        assert!((h.values[0] - 1.0 / 0.75).abs() < 1e-14);
    }
}
