//! Named example maps and families: the circle, the 2-sphere and the rank
//! family of `diag(1, 0)` in 2×2 matrices.

use crate::config::Config;
use crate::error::{Error, Result};
use crate::family::{kernel_family, DifferentiableMap, SubspaceFamily};
use crate::linalg::{Matrix, Vector};
use crate::opmanifold::OperatorFamilyContext;

pub const BUILTIN_NAMES: [&str; 3] = ["sphere_2d", "sphere_3d", "sec4_2x2"];

/// A builtin map with its default base point.
#[derive(Debug, Clone)]
pub struct BuiltinMap {
    pub map: DifferentiableMap,
    pub base_point: Vector,
}

/// `x ↦ ‖x‖²` on `R^n`.
pub fn squared_norm(n: usize) -> DifferentiableMap {
    DifferentiableMap::new(n, 1, |x| Ok(Vector::from_element(1, x.norm_squared())))
        .with_jacobian(|x| Ok(Matrix::from_row_slice(1, x.len(), (x * 2.0).as_slice())))
}

pub fn builtin_map(name: &str) -> Result<BuiltinMap> {
    match name {
        "sphere_2d" => Ok(BuiltinMap {
            map: squared_norm(2),
            base_point: Vector::from_vec(vec![0.0, 1.0]),
        }),
        "sphere_3d" => Ok(BuiltinMap {
            map: squared_norm(3),
            base_point: Vector::from_vec(vec![0.0, 0.0, 1.0]),
        }),
        other => Err(Error::Parse(format!(
            "unknown builtin map `{other}` (expected sphere_2d or sphere_3d)"
        ))),
    }
}

/// `A = diag(1, 0)`.
pub fn sec4_matrix() -> Matrix {
    Matrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 0.0])
}

/// A builtin family, with its generating map when it is a kernel family.
#[derive(Debug, Clone)]
pub struct BuiltinFamily {
    pub family: SubspaceFamily,
    pub map: Option<DifferentiableMap>,
}

pub fn builtin_family(name: &str, cfg: &Config) -> Result<BuiltinFamily> {
    match name {
        "sec4_2x2" => {
            let ctx = OperatorFamilyContext::new(&sec4_matrix(), cfg)?;
            Ok(BuiltinFamily {
                family: ctx.family(cfg)?,
                map: None,
            })
        }
        _ => {
            let b = builtin_map(name).map_err(|_| {
                Error::Parse(format!(
                    "unknown builtin `{name}` (expected one of {})",
                    BUILTIN_NAMES.join(", ")
                ))
            })?;
            Ok(BuiltinFamily {
                family: kernel_family(&b.map, &b.base_point, cfg)?,
                map: Some(b.map),
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_name_resolves() {
        for name in BUILTIN_NAMES {
            let b = builtin_family(name, &Config::DEFAULT).unwrap();
            assert!(b.family.base_consistency().unwrap() < 1e-12, "{name}");
        }
        assert!(builtin_family("torus", &Config::DEFAULT).is_err());
    }

    #[test]
    fn sec4_dimensions() {
        let b = builtin_family("sec4_2x2", &Config::DEFAULT).unwrap();
        assert_eq!(b.family.ambient_dim(), 4);
        assert_eq!(b.family.base_subspace().dim(), 3);
        assert_eq!(b.family.complement().dim(), 1);
    }
}
