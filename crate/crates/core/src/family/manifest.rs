use serde::{Deserialize, Serialize};

use super::{kernel_family, DifferentiableMap, PolynomialSpec, SubspaceFamily};
use crate::builtins;
use crate::config::Config;
use crate::error::{Error, Result};
use crate::io::MatrixJson;
use crate::linalg::{Subspace, Vector};

/// A map named in a manifest: a builtin name or an inline polynomial.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MapRef {
    Builtin(String),
    Polynomial(PolynomialSpec),
}

/// Family description read from JSON.
///
/// ```json
/// {"kind": "kernel", "map": "sphere_2d", "x0": [0, 1]}
/// {"kind": "explicit", "points": [[0, 0], [0.1, 0]], "bases": [{"rows": 2, "cols": 1, "data": [1, 0]}, ...]}
/// ```
///
/// `complement`, when present, is a matrix whose columns span `E*`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum FamilyManifest {
    Kernel {
        map: MapRef,
        #[serde(default)]
        x0: Option<Vec<f64>>,
        #[serde(default)]
        complement: Option<MatrixJson>,
    },
    Explicit {
        points: Vec<Vec<f64>>,
        bases: Vec<MatrixJson>,
        #[serde(default)]
        x0: Option<Vec<f64>>,
        #[serde(default)]
        complement: Option<MatrixJson>,
    },
}

/// A family known only at finitely many listed points.
#[derive(Debug, Clone)]
pub struct ExplicitFamily {
    pub points: Vec<Vector>,
    pub subspaces: Vec<Subspace>,
}

impl ExplicitFamily {
    pub fn lookup(&self, x: &Vector) -> Result<Subspace> {
        self.points
            .iter()
            .position(|p| p.len() == x.len() && (p - x).amax() <= 1e-12)
            .map(|i| self.subspaces[i].clone())
            .ok_or_else(|| Error::Eval(format!("{:?} is not a listed point of the family", x.as_slice())))
    }
}

/// The family described by a manifest, with its generating map when there is one.
#[derive(Debug, Clone)]
pub struct ManifestFamily {
    pub family: SubspaceFamily,
    pub map: Option<DifferentiableMap>,
    /// Listed points of an explicit family.
    pub points: Vec<Vector>,
}

impl FamilyManifest {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Parse(format!("manifest: {e}")))
    }

    pub fn build(&self, cfg: &Config) -> Result<ManifestFamily> {
        let (family, map, points, complement) = match self {
            FamilyManifest::Kernel { map, x0, complement } => {
                let (f, default_x0) = match map {
                    MapRef::Builtin(name) => {
                        let b = builtins::builtin_map(name)?;
                        (b.map, Some(b.base_point))
                    }
                    MapRef::Polynomial(spec) => (spec.to_map()?, None),
                };
                let x0 = match (x0, default_x0) {
                    (Some(v), _) => Vector::from_column_slice(v),
                    (None, Some(v)) => v,
                    (None, None) => return Err(Error::Parse("kernel manifest with a polynomial map needs x0".into())),
                };
                let fam = kernel_family(&f, &x0, cfg)?;
                (fam, Some(f), Vec::new(), complement)
            }
            FamilyManifest::Explicit {
                points,
                bases,
                x0,
                complement,
            } => {
                if points.is_empty() || points.len() != bases.len() {
                    return Err(Error::Parse(format!(
                        "explicit manifest needs one basis per point ({} points, {} bases)",
                        points.len(),
                        bases.len()
                    )));
                }
                let pts: Vec<Vector> = points.iter().map(|p| Vector::from_column_slice(p)).collect();
                let ambient = bases[0].rows;
                let mut subspaces = Vec::with_capacity(bases.len());
                for (i, b) in bases.iter().enumerate() {
                    let m = b.clone().into_matrix()?;
                    if m.nrows() != ambient {
                        return Err(Error::Dimension(format!("basis {i} lives in R^{}, expected R^{ambient}", m.nrows())));
                    }
                    subspaces.push(Subspace::span_or_trivial(&m, ambient));
                }
                let x0 = x0.as_ref().map(|v| Vector::from_column_slice(v)).unwrap_or_else(|| pts[0].clone());
                let table = ExplicitFamily {
                    points: pts.clone(),
                    subspaces,
                };
                let fam = SubspaceFamily::new(move |x: &Vector| table.lookup(x), x0, cfg)?;
                (fam, None, pts, complement)
            }
        };
        let family = match complement {
            Some(c) => {
                let m = c.clone().into_matrix()?;
                let ambient = family.ambient_dim();
                family.with_complement(Subspace::span_or_trivial(&m, ambient), cfg)?
            }
            None => family,
        };
        Ok(ManifestFamily { family, map, points })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const CFG: Config = Config::DEFAULT;

    #[test]
    fn builtin_kernel_manifest() {
        let m = FamilyManifest::from_json(r#"{"kind": "kernel", "map": "sphere_2d"}"#).unwrap();
        let built = m.build(&CFG).unwrap();
        assert_eq!(built.family.base_point().as_slice(), &[0.0, 1.0]);
        assert!(built.map.is_some());
    }

    #[test]
    fn polynomial_manifest_requires_x0() {
        let text = r#"{"kind": "kernel", "map": {"dom_dim": 2, "components": [[{"coef": 1, "powers": [1, 1]}]]}}"#;
        assert!(FamilyManifest::from_json(text).unwrap().build(&CFG).is_err());
        let text = r#"{"kind": "kernel", "x0": [1, 1], "map": {"dom_dim": 2, "components": [[{"coef": 1, "powers": [1, 1]}]]}}"#;
        let built = FamilyManifest::from_json(text).unwrap().build(&CFG).unwrap();
        assert_eq!(built.family.base_subspace().dim(), 1);
    }

    #[test]
    fn explicit_manifest_evaluates_listed_points_only() {
        let text = r#"{"kind": "explicit",
            "points": [[0, 0], [0.5, 0]],
            "bases": [{"rows": 2, "cols": 1, "data": [1, 0]}, {"rows": 2, "cols": 1, "data": [1, 1]}],
            "complement": {"rows": 2, "cols": 1, "data": [0, 1]}}"#;
        let built = FamilyManifest::from_json(text).unwrap().build(&CFG).unwrap();
        let fam = &built.family;
        assert!(fam.cofinal_member(&built.points[1], &CFG).unwrap());
        assert!((fam.alpha_at(&built.points[1], &CFG).unwrap().alpha[(0, 0)] - 1.0).abs() < 1e-12);
        assert!(matches!(fam.eval(&Vector::from_vec(vec![0.2, 0.0])), Err(Error::Eval(_))));
    }

    #[test]
    fn malformed_manifests() {
        assert!(FamilyManifest::from_json(r#"{"kind": "sideways"}"#).is_err());
        let m = FamilyManifest::from_json(r#"{"kind": "kernel", "map": "torus"}"#).unwrap();
        assert!(matches!(m.build(&CFG), Err(Error::Parse(_))));
        let m = FamilyManifest::from_json(r#"{"kind": "explicit", "points": [[0]], "bases": []}"#).unwrap();
        assert!(m.build(&CFG).is_err());
    }
}
