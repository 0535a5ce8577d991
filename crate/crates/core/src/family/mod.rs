//! Families of subspaces `x ↦ M(x)`, co-final membership against a fixed
//! complement `E*`, and the coordinate operator `α(x) : M₀ → E*` whose graph
//! is `M(x)`.

mod kernel;
mod manifest;
mod map;

pub use kernel::{generalized_regular_probe, grp_alpha, kernel_family, RegularProbeReport};
pub use manifest::{ExplicitFamily, FamilyManifest, MapRef};
pub use map::{DifferentiableMap, JacobianFn, Monomial, PointFn, PolynomialSpec};

use std::fmt;
use std::sync::Arc;

use serde::Serialize;

use crate::config::Config;
use crate::error::{Error, Result};
use crate::io::matrix_serde;
use crate::linalg::{direct_sum_check, oblique_projector, subspace_distance, Matrix, Projector, Subspace, Vector};

pub type SubspaceFn = Arc<dyn Fn(&Vector) -> Result<Subspace> + Send + Sync>;

/// `α` expressed in the stored orthonormal bases of `M₀` (columns) and `E*` (rows).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoordinateOperator {
    #[serde(with = "matrix_serde")]
    pub alpha: Matrix,
}

impl CoordinateOperator {
    pub fn zero(m0_dim: usize, estar_dim: usize) -> Self {
        Self {
            alpha: Matrix::zeros(estar_dim, m0_dim),
        }
    }

    pub fn apply(&self, m0_coords: &Vector) -> Vector {
        &self.alpha * m0_coords
    }
}

/// The unique `α` with `Mx = {e + αe : e ∈ M₀}`:
/// `(projector onto E* along M₀) ∘ (projector onto Mx along E*)` restricted to `M₀`.
pub fn coordinate_operator(m0: &Subspace, estar: &Subspace, mx: &Subspace, cfg: &Config) -> Result<CoordinateOperator> {
    if mx.dim() != m0.dim() {
        return Err(Error::Dimension(format!(
            "dim M(x) = {} but dim M₀ = {}",
            mx.dim(),
            m0.dim()
        )));
    }
    let onto_mx = oblique_projector(mx, estar, cfg.tol_split)?;
    let onto_estar = oblique_projector(estar, m0, cfg.tol_split)?;
    Ok(coordinate_operator_with(&onto_estar, m0, estar, &onto_mx))
}

fn coordinate_operator_with(onto_estar: &Projector, m0: &Subspace, estar: &Subspace, onto_mx: &Projector) -> CoordinateOperator {
    CoordinateOperator {
        alpha: estar.basis().transpose() * &onto_estar.matrix * &onto_mx.matrix * m0.basis(),
    }
}

/// Orthonormalized span of `{b + α·b}` over the basis vectors `b` of `M₀`.
pub fn graph_subspace(m0: &Subspace, estar: &Subspace, alpha: &CoordinateOperator) -> Subspace {
    let n = m0.ambient_dim();
    if m0.dim() == 0 {
        return Subspace::trivial(n);
    }
    Subspace::span(&(m0.basis() + estar.basis() * &alpha.alpha))
}

/// A family `x ↦ M(x)` with pinned bases for `M₀ = M(x₀)` and a complement `E*`.
#[derive(Clone)]
pub struct SubspaceFamily {
    param_dim: usize,
    eval: SubspaceFn,
    base_point: Vector,
    base_subspace: Subspace,
    complement: Subspace,
    /// Projector onto `M₀` along `E*`.
    onto_base: Projector,
    /// Projector onto `E*` along `M₀`.
    onto_complement: Projector,
}

impl fmt::Debug for SubspaceFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SubspaceFamily")
            .field("ambient_dim", &self.ambient_dim())
            .field("param_dim", &self.param_dim)
            .field("base_point", &self.base_point.as_slice())
            .field("base_dim", &self.base_subspace.dim())
            .finish()
    }
}

impl SubspaceFamily {
    /// Builds a family with the orthogonal complement of `M₀` as `E*`.
    pub fn new<F>(eval: F, base_point: Vector, cfg: &Config) -> Result<Self>
    where
        F: Fn(&Vector) -> Result<Subspace> + Send + Sync + 'static,
    {
        let eval: SubspaceFn = Arc::new(eval);
        let base_subspace = eval(&base_point)?;
        let complement = base_subspace.orthogonal_complement();
        Self::assemble(eval, base_point, base_subspace, complement, cfg)
    }

    /// Replaces `E*` by a user complement of `M₀`.
    pub fn with_complement(self, complement: Subspace, cfg: &Config) -> Result<Self> {
        Self::assemble(self.eval, self.base_point, self.base_subspace, complement, cfg)
    }

    fn assemble(
        eval: SubspaceFn,
        base_point: Vector,
        base_subspace: Subspace,
        complement: Subspace,
        cfg: &Config,
    ) -> Result<Self> {
        if complement.ambient_dim() != base_subspace.ambient_dim() {
            return Err(Error::Dimension(format!(
                "E* lives in R^{}, M₀ in R^{}",
                complement.ambient_dim(),
                base_subspace.ambient_dim()
            )));
        }
        let onto_base = oblique_projector(&base_subspace, &complement, cfg.tol_split)?;
        let onto_complement = onto_base.complementary();
        Ok(Self {
            param_dim: base_point.len(),
            eval,
            base_point,
            base_subspace,
            complement,
            onto_base,
            onto_complement,
        })
    }

    pub fn ambient_dim(&self) -> usize {
        self.base_subspace.ambient_dim()
    }

    pub fn param_dim(&self) -> usize {
        self.param_dim
    }

    pub fn base_point(&self) -> &Vector {
        &self.base_point
    }

    pub fn base_subspace(&self) -> &Subspace {
        &self.base_subspace
    }

    pub fn complement(&self) -> &Subspace {
        &self.complement
    }

    pub fn eval(&self, x: &Vector) -> Result<Subspace> {
        if x.len() != self.param_dim {
            return Err(Error::Dimension(format!(
                "point has {} coordinates, family expects {}",
                x.len(),
                self.param_dim
            )));
        }
        let s = (self.eval)(x)?;
        if s.ambient_dim() != self.ambient_dim() {
            return Err(Error::Eval(format!(
                "family returned a subspace of R^{} instead of R^{}",
                s.ambient_dim(),
                self.ambient_dim()
            )));
        }
        Ok(s)
    }

    /// `M(x) ⊕ E*` spans the ambient space. A change of dimension counts as a
    /// failed membership, not as an error.
    pub fn cofinal_member(&self, x: &Vector, cfg: &Config) -> Result<bool> {
        let mx = self.eval(x)?;
        Ok(mx.dim() == self.base_subspace.dim() && direct_sum_check(&mx, &self.complement, cfg.tol_split))
    }

    /// `α(x)` in the pinned bases of `M₀` and `E*`; `CofinalBreach` when `x`
    /// is outside the co-final set.
    pub fn alpha_at(&self, x: &Vector, cfg: &Config) -> Result<CoordinateOperator> {
        let mx = self.eval(x)?;
        self.alpha_of(&mx, x, cfg)
    }

    fn alpha_of(&self, mx: &Subspace, x: &Vector, cfg: &Config) -> Result<CoordinateOperator> {
        let breach = |reason: String| Error::CofinalBreach {
            point: x.iter().copied().collect(),
            reason,
        };
        if mx.dim() != self.base_subspace.dim() {
            return Err(breach(format!(
                "dim M(x) = {} differs from dim M₀ = {}",
                mx.dim(),
                self.base_subspace.dim()
            )));
        }
        let onto_mx = oblique_projector(mx, &self.complement, cfg.tol_split).map_err(|e| breach(e.to_string()))?;
        Ok(coordinate_operator_with(
            &self.onto_complement,
            &self.base_subspace,
            &self.complement,
            &onto_mx,
        ))
    }

    /// Distance between `M(x₀)` evaluated now and the pinned `M₀`.
    pub fn base_consistency(&self) -> Result<f64> {
        Ok(subspace_distance(&self.eval(&self.base_point)?, &self.base_subspace))
    }

    /// Splits an ambient point into `(M₀-coordinates of P^{E*}_{M₀}x,
    /// E*-coordinates of P^{M₀}_{E*}x)`.
    pub fn split(&self, x: &Vector) -> (Vector, Vector) {
        let along = &self.onto_base.matrix * x;
        let across = &self.onto_complement.matrix * x;
        (self.base_subspace.coords(&along), self.complement.coords(&across))
    }

    /// Inverse of [`SubspaceFamily::split`].
    pub fn compose(&self, m0_coords: &Vector, estar_coords: &Vector) -> Vector {
        self.base_subspace.lift(m0_coords) + self.complement.lift(estar_coords)
    }
}
