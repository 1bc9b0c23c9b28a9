use serde::{Deserialize, Serialize};

use super::disorder::Disorder;
use crate::error::{IdsError, Result};

/// Upper limit on the number of grid points of any box (all axes combined).
pub const DEFAULT_POINT_CAP: usize = 1 << 22;

/// Law of an Anderson-type coefficient field
/// `rho(x) = rho_plus(x) + sum_gamma omega_gamma rho_bump(x - gamma)`.
///
/// Both profiles are stored as `mesh^dimension` cell-centre samples of one unit
/// cell (axis 0 fastest). The bump is therefore supported in a single cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoefficientSpec {
    pub dimension: usize,
    pub mesh: usize,
    pub rho_plus: Vec<f64>,
    pub rho_bump: Vec<f64>,
    pub disorder: Disorder,
    pub rho_lower: f64,
    pub rho_upper: f64,
    pub point_cap: usize,
}

impl CoefficientSpec {
    /// Validates the profiles and derives the essential bounds
    /// `rho_lower <= rho <= rho_upper` over the support of the disorder law.
    pub fn new(
        dimension: usize,
        mesh: usize,
        rho_plus: Vec<f64>,
        rho_bump: Vec<f64>,
        disorder: Disorder,
    ) -> Result<Self> {
        if !(1..=2).contains(&dimension) {
            return Err(IdsError::config(format!(
                "dimension must be 1 or 2, got {dimension}"
            )));
        }
        if mesh == 0 {
            return Err(IdsError::config("mesh must be at least 1"));
        }
        disorder.validate()?;
        let cell_points = mesh.pow(dimension as u32);
        let rho_plus = broadcast("rho_plus", rho_plus, cell_points)?;
        let rho_bump = broadcast("rho_bump", rho_bump, cell_points)?;

        let (w_lo, w_hi) = disorder.support();
        let mut lower = f64::INFINITY;
        let mut upper = f64::NEG_INFINITY;
        for (k, (&p, &b)) in rho_plus.iter().zip(&rho_bump).enumerate() {
            if !p.is_finite() || !b.is_finite() {
                return Err(IdsError::config(format!(
                    "non-finite profile value at cell point {}",
                    describe_point(k, mesh, dimension)
                )));
            }
            // Affine in omega: extremes sit at the ends of the support.
            for w in [w_lo, w_hi] {
                let v = p + w * b;
                if v <= 0.0 {
                    return Err(IdsError::config(format!(
                        "coefficient {v} <= 0 at cell point {} for omega = {w}",
                        describe_point(k, mesh, dimension)
                    )));
                }
                lower = lower.min(v);
                upper = upper.max(v);
            }
        }
        Ok(CoefficientSpec {
            dimension,
            mesh,
            rho_plus,
            rho_bump,
            disorder,
            rho_lower: lower,
            rho_upper: upper,
            point_cap: DEFAULT_POINT_CAP,
        })
    }

    /// Constant background `c`, no bump, constant disorder.
    pub fn constant(dimension: usize, mesh: usize, c: f64) -> Result<Self> {
        Self::new(dimension, mesh, vec![c], vec![0.0], Disorder::constant(0.0))
    }

    /// `rho_plus = background`, `rho_bump = bump` on the whole cell.
    pub fn uniform_cell(
        dimension: usize,
        mesh: usize,
        background: f64,
        bump: f64,
        disorder: Disorder,
    ) -> Result<Self> {
        Self::new(dimension, mesh, vec![background], vec![bump], disorder)
    }

    pub fn cell_points(&self) -> usize {
        self.mesh.pow(self.dimension as u32)
    }

    pub fn points_per_axis(&self, n: usize) -> usize {
        self.mesh * (2 * n + 1)
    }

    pub fn check_box(&self, n: usize) -> Result<()> {
        let per_axis = self.points_per_axis(n);
        let total = per_axis
            .checked_pow(self.dimension as u32)
            .unwrap_or(usize::MAX);
        if total > self.point_cap {
            return Err(IdsError::config(format!(
                "box n={n} with mesh {} gives {total} points, above the cap {}",
                self.mesh, self.point_cap
            )));
        }
        Ok(())
    }

    /// Reads a spec from the TOML config format (see [`SpecFile`]).
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let file: SpecFile =
            toml::from_str(text).map_err(|e| IdsError::config(format!("spec file: {e}")))?;
        file.resolve()
    }

    pub fn from_file(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| IdsError::config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    /// Same law on a different mesh; named profiles are resampled, inline
    /// arrays must be constant to be re-meshed.
    pub fn with_mesh(&self, mesh: usize) -> Result<Self> {
        if mesh == self.mesh {
            return Ok(self.clone());
        }
        let remesh = |name: &str, v: &[f64]| -> Result<Vec<f64>> {
            if v.iter().all(|x| *x == v[0]) {
                Ok(vec![v[0]])
            } else {
                Err(IdsError::config(format!(
                    "{name} is not constant; cannot change mesh from {} to {mesh}",
                    self.mesh
                )))
            }
        };
        let plus = remesh("rho_plus", &self.rho_plus)?;
        let bump = remesh("rho_bump", &self.rho_bump)?;
        let mut s = Self::new(self.dimension, mesh, plus, bump, self.disorder)?;
        s.point_cap = self.point_cap;
        Ok(s)
    }

    pub fn with_disorder(&self, disorder: Disorder) -> Result<Self> {
        let mut s = Self::new(
            self.dimension,
            self.mesh,
            self.rho_plus.clone(),
            self.rho_bump.clone(),
            disorder,
        )?;
        s.point_cap = self.point_cap;
        Ok(s)
    }
}

fn broadcast(name: &str, v: Vec<f64>, len: usize) -> Result<Vec<f64>> {
    match v.len() {
        1 => Ok(vec![v[0]; len]),
        l if l == len => Ok(v),
        l => Err(IdsError::config(format!(
            "{name} has {l} values, expected 1 or {len}"
        ))),
    }
}

fn describe_point(k: usize, mesh: usize, dimension: usize) -> String {
    if dimension == 1 {
        format!("({k})")
    } else {
        format!("({}, {})", k % mesh, k / mesh)
    }
}

/// On-disk spec schema.
///
/// ```toml
/// dimension = 1
/// mesh = 8
/// rho_plus = "constant:1"        # or "two-phase:1:2", "cosine:1.5:0.5", or an array
/// rho_bump = "constant:1"        # default "zero"
/// disorder = "bernoulli:0.5:0:1" # or { law = "uniform", a = 1, b = 3 }
/// ```
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpecFile {
    pub dimension: usize,
    pub mesh: usize,
    pub rho_plus: ProfileDef,
    #[serde(default = "ProfileDef::zero")]
    pub rho_bump: ProfileDef,
    #[serde(default = "DisorderDef::none")]
    pub disorder: DisorderDef,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum ProfileDef {
    Named(String),
    Inline(Vec<f64>),
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum DisorderDef {
    Text(String),
    Table(Disorder),
}

impl ProfileDef {
    fn zero() -> Self {
        ProfileDef::Named("zero".into())
    }

    /// Cell samples of the profile at `mesh^dimension` cell centres.
    pub fn samples(&self, dimension: usize, mesh: usize) -> Result<Vec<f64>> {
        match self {
            ProfileDef::Inline(v) => Ok(v.clone()),
            ProfileDef::Named(text) => named_profile(text, dimension, mesh),
        }
    }
}

impl DisorderDef {
    fn none() -> Self {
        DisorderDef::Table(Disorder::constant(0.0))
    }

    pub fn resolve(&self) -> Result<Disorder> {
        match self {
            DisorderDef::Text(t) => Disorder::parse(t),
            DisorderDef::Table(d) => {
                d.validate()?;
                Ok(*d)
            }
        }
    }
}

impl SpecFile {
    pub fn resolve(&self) -> Result<CoefficientSpec> {
        CoefficientSpec::new(
            self.dimension,
            self.mesh,
            self.rho_plus.samples(self.dimension, self.mesh)?,
            self.rho_bump.samples(self.dimension, self.mesh)?,
            self.disorder.resolve()?,
        )
    }
}

/// Named one-cell profiles, sampled at cell centres `x0 = (j + 1/2)/mesh`
/// measured along axis 0 from the left edge of the cell.
pub fn named_profile(text: &str, dimension: usize, mesh: usize) -> Result<Vec<f64>> {
    let parts: Vec<&str> = text.split(':').map(str::trim).collect();
    let nums: Vec<f64> = parts[1..]
        .iter()
        .map(|s| {
            s.parse::<f64>()
                .map_err(|_| IdsError::config(format!("bad number '{s}' in profile '{text}'")))
        })
        .collect::<Result<_>>()?;
    let len = mesh.pow(dimension as u32);
    let x0 = |k: usize| ((k % mesh) as f64 + 0.5) / mesh as f64;
    let values: Vec<f64> = match (parts[0].to_ascii_lowercase().as_str(), nums.as_slice()) {
        ("zero", []) => vec![0.0; len],
        ("constant", [c]) => vec![*c; len],
        ("two-phase", [a, b]) => (0..len).map(|k| if x0(k) < 0.5 { *a } else { *b }).collect(),
        ("cosine", [a, b]) => (0..len)
            .map(|k| a + b * (2.0 * std::f64::consts::PI * x0(k)).cos())
            .collect(),
        _ => {
            return Err(IdsError::config(format!(
                "unknown profile '{text}' (expected zero, constant:c, two-phase:a:b, cosine:a:b)"
            )))
        }
    };
    Ok(values)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bounds_derived_from_support() {
        let s = CoefficientSpec::uniform_cell(1, 4, 1.0, 1.0, Disorder::bernoulli(0.5, 0.0, 1.0).unwrap())
            .unwrap();
        assert_eq!((s.rho_lower, s.rho_upper), (1.0, 2.0));
    }

    #[test]
    fn nonpositive_coefficient_names_the_point() {
        let err = CoefficientSpec::new(
            1,
            4,
            vec![1.0, 1.0, 0.2, 1.0],
            vec![1.0],
            Disorder::uniform(-0.5, 0.5).unwrap(),
        )
        .unwrap_err();
        let msg = err.to_string();
        assert!(err.is_config());
        assert!(msg.contains("(2)"), "{msg}");
    }

    #[test]
    fn toml_round() {
        let text = r#"
            dimension = 1
            mesh = 4
            rho_plus = "two-phase:1:2"
            rho_bump = [0.0, 0.5, 0.5, 0.0]
            disorder = { law = "uniform", a = 0.0, b = 2.0 }
        "#;
        let s = CoefficientSpec::from_toml_str(text).unwrap();
        assert_eq!(s.rho_plus, vec![1.0, 1.0, 2.0, 2.0]);
        assert_eq!(s.rho_upper, 3.0);
        assert_eq!(s.disorder.mean(), 1.0);

        let text = "dimension = 2\nmesh = 2\nrho_plus = \"constant:1\"\ndisorder = \"bernoulli:0.5\"\n";
        let s = CoefficientSpec::from_toml_str(text).unwrap();
        assert_eq!(s.rho_bump, vec![0.0; 4]);
        assert!(CoefficientSpec::from_toml_str("dimension = 3\nmesh = 2\nrho_plus = \"zero\"").is_err());
        assert!(CoefficientSpec::from_toml_str("dimension = 1\nmesh = 2\nrho_plus = \"constant:1\"\nbogus = 1").is_err());
    }

    #[test]
    fn size_cap() {
        let mut s = CoefficientSpec::constant(2, 8, 1.0).unwrap();
        s.point_cap = 10_000;
        assert!(s.check_box(5).is_ok());
        assert!(s.check_box(6).is_err());
    }
}
