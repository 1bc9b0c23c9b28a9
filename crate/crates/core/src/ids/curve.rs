use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{IdsError, Result};

/// Where an IDS estimate came from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdsMeta {
    pub method: String,
    pub bc: String,
    pub dimension: usize,
    pub mesh: usize,
    pub n: usize,
    /// Unit cells per axis of the box.
    pub extent: usize,
    pub samples: usize,
    pub seed: u64,
    pub theta_nodes: Option<usize>,
    /// Resolved run configuration, embedded verbatim in the JSON sidecar.
    #[serde(default)]
    pub config: serde_json::Value,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdsCurve {
    pub energies: Vec<f64>,
    pub values: Vec<f64>,
    /// Standard error per point; zero for deterministic methods.
    pub stderr: Vec<f64>,
    pub meta: IdsMeta,
}

impl IdsCurve {
    pub fn is_monotone(&self) -> bool {
        self.values.windows(2).all(|w| w[0] <= w[1])
    }

    /// Monotone piecewise-linear interpolation. Non-positive energies map to
    /// zero (the operator is nonnegative and its IDS vanishes at 0).
    pub fn value_at(&self, energy: f64) -> Result<f64> {
        if energy <= 0.0 {
            return Ok(0.0);
        }
        let e = &self.energies;
        let (lo, hi) = (e[0], e[e.len() - 1]);
        if energy < lo || energy > hi {
            return Err(IdsError::Range { energy, lo, hi });
        }
        let k = e.partition_point(|x| *x < energy);
        if e[k] == energy {
            return Ok(self.values[k]);
        }
        let (e0, e1) = (e[k - 1], e[k]);
        let t = (energy - e0) / (e1 - e0);
        Ok(self.values[k - 1] + t * (self.values[k] - self.values[k - 1]))
    }

    /// `{method}-{d}d-n{n}-s{seed}`
    pub fn file_stem(&self) -> String {
        format!(
            "{}-{}d-n{}-s{}",
            self.meta.method, self.meta.dimension, self.meta.n, self.meta.seed
        )
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "E,N,stderr")?;
        for ((e, v), s) in self.energies.iter().zip(&self.values).zip(&self.stderr) {
            writeln!(out, "{e:.17e},{v:.17e},{s:.17e}")?;
        }
        Ok(())
    }

    /// Writes `{stem}.csv` and `{stem}.json` into `dir`; returns the CSV path.
    pub fn write_files(&self, dir: &Path) -> Result<PathBuf> {
        std::fs::create_dir_all(dir)?;
        let csv = dir.join(format!("{}.csv", self.file_stem()));
        let json = dir.join(format!("{}.json", self.file_stem()));
        self.write_csv(std::io::BufWriter::new(std::fs::File::create(&csv)?))?;
        let text = serde_json::to_string_pretty(&self.meta)
            .map_err(|e| IdsError::domain(format!("json: {e}")))?;
        std::fs::write(json, text + "\n")?;
        Ok(csv)
    }
}

/// Geometric grid from `lo` to `hi` (both included) with `per_decade` points
/// per factor of ten.
pub fn geometric_grid(lo: f64, hi: f64, per_decade: usize) -> Result<Vec<f64>> {
    if !(lo > 0.0 && hi >= lo && per_decade > 0) {
        return Err(IdsError::config(format!(
            "geometric grid needs 0 < lo <= hi and per_decade > 0 (got {lo}, {hi}, {per_decade})"
        )));
    }
    let decades = (hi / lo).log10();
    let steps = (decades * per_decade as f64).ceil().max(1.0) as usize;
    if hi == lo {
        return Ok(vec![lo]);
    }
    Ok((0..=steps)
        .map(|k| {
            if k == steps {
                hi
            } else {
                lo * 10f64.powf(decades * k as f64 / steps as f64)
            }
        })
        .collect())
}

pub(crate) fn check_energies(energies: &[f64]) -> Result<()> {
    if energies.is_empty() {
        return Err(IdsError::config("energy list is empty"));
    }
    if energies.iter().any(|e| !e.is_finite()) || energies.windows(2).any(|w| w[0] >= w[1]) {
        return Err(IdsError::config("energies must be finite and strictly ascending"));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn curve() -> IdsCurve {
        IdsCurve {
            energies: vec![0.1, 0.2, 0.4],
            values: vec![1.0, 2.0, 2.0],
            stderr: vec![0.0; 3],
            meta: IdsMeta {
                method: "floquet".into(),
                bc: "floquet".into(),
                dimension: 1,
                mesh: 4,
                n: 0,
                extent: 1,
                samples: 1,
                seed: 0,
                theta_nodes: Some(8),
                config: serde_json::Value::Null,
            },
        }
    }

    #[test]
    fn interpolation() {
        let c = curve();
        assert_eq!(c.value_at(-1.0).unwrap(), 0.0);
        assert_eq!(c.value_at(0.15).unwrap(), 1.5);
        assert_eq!(c.value_at(0.2).unwrap(), 2.0);
        assert_eq!(c.value_at(0.3).unwrap(), 2.0);
        assert!(matches!(c.value_at(0.05), Err(IdsError::Range { .. })));
        assert!(matches!(c.value_at(0.5), Err(IdsError::Range { .. })));
        assert_eq!(c.file_stem(), "floquet-1d-n0-s0");
    }

    #[test]
    fn grid() {
        let g = geometric_grid(0.01, 0.1, 24).unwrap();
        assert_eq!(g.len(), 25);
        assert_eq!(g[0], 0.01);
        assert_eq!(g[24], 0.1);
        assert!((g[12] - 0.1f64.sqrt() * 0.1).abs() < 1e-15);
    }
}
