//! Config files: a coefficient spec at the top level plus an optional `[run]`
//! table of defaults for the experiment flags.
//!
//! ```toml
//! dimension = 1
//! mesh = 16
//! rho_plus = "constant:1"
//! disorder = "bernoulli:0.5:0:1"
//!
//! [run]
//! n = 20
//! samples = 50
//! seed = 7
//! energies = [0.1, 0.5]
//! ```

use std::path::{Path, PathBuf};

use serde::Deserialize;

use idslab_core::field::SpecFile;
use idslab_core::{CoefficientSpec, IdsError, Result};

pub const OUT_ENV: &str = "IDSLAB_OUT";
pub const DEFAULT_OUT: &str = "out";

/// Defaults read from the `[run]` table; every field can be overridden by a flag.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunFile {
    pub n: Option<usize>,
    pub samples: Option<usize>,
    pub seed: Option<u64>,
    pub theta_nodes: Option<usize>,
    pub energies: Option<Vec<f64>>,
    pub alpha: Option<Vec<f64>>,
    pub bc: Option<String>,
    pub method: Option<String>,
    pub trials: Option<usize>,
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone)]
pub struct Loaded {
    pub spec_file: SpecFile,
    pub run: RunFile,
    pub source: Option<PathBuf>,
}

pub fn free_spec_file(dimension: usize, mesh: usize) -> SpecFile {
    let text = format!("dimension = {dimension}\nmesh = {mesh}\nrho_plus = \"constant:1\"\n");
    toml::from_str(&text).expect("built-in spec parses")
}

pub fn load(path: Option<&Path>) -> Result<Loaded> {
    let Some(path) = path else {
        return Ok(Loaded { spec_file: free_spec_file(1, 16), run: RunFile::default(), source: None });
    };
    let text = std::fs::read_to_string(path)
        .map_err(|e| IdsError::config(format!("cannot read {}: {e}", path.display())))?;
    parse(&text).map(|(spec_file, run)| Loaded { spec_file, run, source: Some(path.to_path_buf()) })
}

pub fn parse(text: &str) -> Result<(SpecFile, RunFile)> {
    let mut table: toml::Table =
        toml::from_str(text).map_err(|e| IdsError::config(format!("config: {e}")))?;
    let run = match table.remove("run") {
        Some(v) => v.try_into().map_err(|e| IdsError::config(format!("[run]: {e}")))?,
        None => RunFile::default(),
    };
    let spec = toml::Value::Table(table)
        .try_into()
        .map_err(|e| IdsError::config(format!("spec: {e}")))?;
    Ok((spec, run))
}

impl Loaded {
    /// Applies the `--d` / `--m` overrides and validates the coefficient spec.
    pub fn spec(&self, d: Option<usize>, m: Option<usize>) -> Result<CoefficientSpec> {
        let mut f = self.spec_file.clone();
        if let Some(d) = d {
            f.dimension = d;
        }
        if let Some(m) = m {
            f.mesh = m;
        }
        f.resolve()
    }
}

/// `--out` beats `IDSLAB_OUT`, which beats the `[run]` table and the default.
pub fn out_dir(flag: Option<&Path>, run: &RunFile) -> PathBuf {
    if let Some(p) = flag {
        return p.to_path_buf();
    }
    if let Some(p) = std::env::var_os(OUT_ENV).filter(|v| !v.is_empty()) {
        return PathBuf::from(p);
    }
    run.out.clone().unwrap_or_else(|| PathBuf::from(DEFAULT_OUT))
}

/// `lo:hi:per_decade` geometric grid.
pub fn parse_grid(text: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = text.split(':').collect();
    let bad = || IdsError::config(format!("grid must be lo:hi:per_decade, got '{text}'"));
    if parts.len() != 3 {
        return Err(bad());
    }
    let lo: f64 = parts[0].trim().parse().map_err(|_| bad())?;
    let hi: f64 = parts[1].trim().parse().map_err(|_| bad())?;
    let k: usize = parts[2].trim().parse().map_err(|_| bad())?;
    idslab_core::ids::geometric_grid(lo, hi, k)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn run_table_is_split_off() {
        let (spec, run) = parse(
            "dimension = 2\nmesh = 3\nrho_plus = \"constant:2\"\n[run]\nn = 4\nenergies = [0.5]\n",
        )
        .unwrap();
        assert_eq!(spec.dimension, 2);
        assert_eq!(run.n, Some(4));
        assert_eq!(run.energies, Some(vec![0.5]));
    }

    #[test]
    fn unknown_keys_are_config_errors() {
        assert!(parse("dimension = 1\nmesh = 2\nrho_plus = \"zero\"\nfoo = 1\n").unwrap_err().is_config());
        assert!(parse("dimension = 1\nmesh = 2\nrho_plus = \"zero\"\n[run]\nbar = 1\n").unwrap_err().is_config());
    }

    #[test]
    fn grid_parsing() {
        assert_eq!(parse_grid("0.1:1:1").unwrap(), vec![0.1, 1.0]);
        assert!(parse_grid("0.1:1").is_err());
    }
}
