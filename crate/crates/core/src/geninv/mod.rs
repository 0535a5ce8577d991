//! Generalized inverses with prescribed complements and their perturbation
//! theory inside the ball `‖T − A‖ < ‖A⁺‖⁻¹`.
//!
//! Orientation is fixed throughout: `A` is `cod_dim × dom_dim` and maps
//! `R^dom → R^cod`; `A⁺` maps back. `R(A⁺) ⊂ R^dom` is the range complement
//! (a complement of `N(A)`) and `N(A⁺) ⊂ R^cod` the kernel complement (a
//! complement of `R(A)`).

mod conditions;
mod probe;

pub use conditions::{seven_conditions, CheckKind, ConditionCheck, ConditionReport, CONDITION_KEYS};
pub use probe::{locally_fine_probe, LocallyFineReport, RadiusOutcome, SampleFailure};

use serde::Serialize;

use crate::config::Config;
use crate::error::{Error, Result};
use crate::io::matrix_serde;
use crate::linalg::{
    direct_sum_check, hstack, kernel_of, oblique_projector, op_norm, range_of, right_solve, singular_values,
    condition_number, Matrix, Subspace,
};

/// A `{1,2}`-inverse of `forward` together with the complements that pin it down.
#[derive(Debug, Clone, Serialize)]
pub struct GenInverse {
    #[serde(with = "matrix_serde")]
    pub forward: Matrix,
    #[serde(rename = "A_plus", with = "matrix_serde")]
    pub inverse: Matrix,
    #[serde(rename = "R_plus", serialize_with = "serialize_basis")]
    pub range_complement: Subspace,
    #[serde(rename = "N_plus", serialize_with = "serialize_basis")]
    pub kernel_complement: Subspace,
}

fn serialize_basis<S: serde::Serializer>(s: &Subspace, ser: S) -> std::result::Result<S::Ok, S::Error> {
    matrix_serde::serialize(s.basis(), ser)
}

/// Relative residuals of the two defining identities.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct AxiomResiduals {
    /// `‖A·A⁺·A − A‖ / (1 + ‖A‖)`
    pub outer: f64,
    /// `‖A⁺·A·A⁺ − A⁺‖ / (1 + ‖A⁺‖)`
    pub inner: f64,
}

impl AxiomResiduals {
    pub fn max(&self) -> f64 {
        self.outer.max(self.inner)
    }
}

pub fn axiom_residuals(a: &Matrix, b: &Matrix) -> AxiomResiduals {
    AxiomResiduals {
        outer: op_norm(&(a * b * a - a)) / (1.0 + op_norm(a)),
        inner: op_norm(&(b * a * b - b)) / (1.0 + op_norm(b)),
    }
}

impl GenInverse {
    pub fn dom_dim(&self) -> usize {
        self.forward.ncols()
    }

    pub fn cod_dim(&self) -> usize {
        self.forward.nrows()
    }

    pub fn residuals(&self) -> AxiomResiduals {
        axiom_residuals(&self.forward, &self.inverse)
    }

    /// `‖A⁺‖⁻¹`, infinite for the zero inverse.
    pub fn ball_radius(&self) -> f64 {
        let n = op_norm(&self.inverse);
        if n == 0.0 {
            f64::INFINITY
        } else {
            1.0 / n
        }
    }

    /// `A⁺A`, the projector onto `R(A⁺)` along `N(A)`.
    pub fn domain_projector(&self) -> Matrix {
        &self.inverse * &self.forward
    }

    /// `AA⁺`, the projector onto `R(A)` along `N(A⁺)`.
    pub fn codomain_projector(&self) -> Matrix {
        &self.forward * &self.inverse
    }

    /// Checks both axioms and that the stored complements are `R(A⁺)` and `N(A⁺)`.
    pub fn validate(&self, cfg: &Config) -> Result<()> {
        let r = self.residuals();
        if r.max() > cfg.tol_num {
            return Err(Error::Parse(format!(
                "not a generalized inverse (residuals {:e}, {:e})",
                r.outer, r.inner
            )));
        }
        let rb = range_of(&self.inverse, cfg.tol_split);
        let nb = kernel_of(&self.inverse, cfg.tol_split);
        let dr = crate::linalg::subspace_distance(&rb, &self.range_complement);
        let dn = crate::linalg::subspace_distance(&nb, &self.kernel_complement);
        if dr.max(dn) > cfg.tol_num {
            return Err(Error::Parse(format!(
                "stored complements disagree with R(A⁺), N(A⁺) ({dr:e}, {dn:e})"
            )));
        }
        Ok(())
    }

    /// Wraps a user-supplied inverse matrix after checking the axioms.
    pub fn from_matrices(forward: Matrix, inverse: Matrix, cfg: &Config) -> Result<Self> {
        if inverse.shape() != (forward.ncols(), forward.nrows()) {
            return Err(Error::Dimension(format!(
                "A is {}×{} but A⁺ is {}×{}",
                forward.nrows(),
                forward.ncols(),
                inverse.nrows(),
                inverse.ncols()
            )));
        }
        let gi = Self {
            range_complement: range_of(&inverse, cfg.tol_split),
            kernel_complement: kernel_of(&inverse, cfg.tol_split),
            forward,
            inverse,
        };
        gi.validate(cfg)?;
        Ok(gi)
    }
}

/// Moore–Penrose inverse (orthogonal complements) at relative rank tolerance `tol`.
pub fn moore_penrose_with_tol(a: &Matrix, tol: f64) -> GenInverse {
    let (m, n) = a.shape();
    let svd = crate::linalg::sorted_svd(a);
    let smax = svd.sigma.first().copied().unwrap_or(0.0);
    let r = if smax > 0.0 {
        svd.sigma.iter().filter(|&&s| s > tol * smax).count()
    } else {
        0
    };
    let mut inverse = Matrix::zeros(n, m);
    for i in 0..r {
        inverse += svd.v.column(i) * svd.u.column(i).transpose() / svd.sigma[i];
    }
    GenInverse {
        forward: a.clone(),
        inverse,
        range_complement: Subspace::span_or_trivial(&svd.v.columns(0, r).into_owned(), n),
        kernel_complement: Subspace::span_or_trivial(&svd.u.columns(0, r).into_owned(), m)
            .orthogonal_complement(),
    }
}

pub fn moore_penrose(a: &Matrix) -> GenInverse {
    moore_penrose_with_tol(a, Config::DEFAULT.tol_split)
}

/// The unique inverse with `A⁺A = P^{N(A)}_{R⁺}` and `AA⁺ = P^{N⁺}_{R(A)}`:
/// `A` restricted to `R⁺ → R(A)` is inverted and extended by zero on `N⁺`.
pub fn gi_from_complements(a: &Matrix, r_plus: &Subspace, n_plus: &Subspace, cfg: &Config) -> Result<GenInverse> {
    let (m, n) = a.shape();
    if r_plus.ambient_dim() != n || n_plus.ambient_dim() != m {
        return Err(Error::Dimension(format!(
            "A is {m}×{n}; R⁺ lives in R^{}, N⁺ in R^{}",
            r_plus.ambient_dim(),
            n_plus.ambient_dim()
        )));
    }
    let null_a = kernel_of(a, cfg.tol_split);
    let range_a = range_of(a, cfg.tol_split);
    if !direct_sum_check(r_plus, &null_a, cfg.tol_split) {
        return Err(Error::Complement("R⁺ ⊕ N(A) does not span the domain".into()));
    }
    if !direct_sum_check(n_plus, &range_a, cfg.tol_split) {
        return Err(Error::Complement("N⁺ ⊕ R(A) does not span the codomain".into()));
    }
    let onto_range = oblique_projector(&range_a, n_plus, cfg.tol_split)?;
    let qa = range_a.basis();
    let restricted = qa.transpose() * a * r_plus.basis();
    let inverse = if restricted.nrows() == 0 {
        Matrix::zeros(n, m)
    } else {
        let rhs = qa.transpose() * &onto_range.matrix;
        let solved = restricted
            .lu()
            .solve(&rhs)
            .ok_or_else(|| Error::Complement("A restricted to R⁺ is singular".into()))?;
        r_plus.basis() * solved
    };
    Ok(GenInverse {
        forward: a.clone(),
        inverse,
        range_complement: r_plus.clone(),
        kernel_complement: n_plus.clone(),
    })
}

fn check_shapes(gi: &GenInverse, t: &Matrix) -> Result<()> {
    if t.shape() != gi.forward.shape() {
        return Err(Error::Dimension(format!(
            "T is {}×{} but A is {}×{}",
            t.nrows(),
            t.ncols(),
            gi.cod_dim(),
            gi.dom_dim()
        )));
    }
    Ok(())
}

/// `C_A(A⁺,T) = I_F + (T − A)A⁺` on the codomain.
pub fn c_op(gi: &GenInverse, t: &Matrix) -> Matrix {
    let m = gi.cod_dim();
    Matrix::identity(m, m) + (t - &gi.forward) * &gi.inverse
}

/// `D_A(A⁺,T) = I_E + A⁺(T − A)` on the domain.
pub fn d_op(gi: &GenInverse, t: &Matrix) -> Matrix {
    let n = gi.dom_dim();
    Matrix::identity(n, n) + &gi.inverse * (t - &gi.forward)
}

/// Errors with `Ball` unless `‖T − A‖ < ‖A⁺‖⁻¹`. Returns `‖T − A‖·‖A⁺‖`.
pub fn ball_check(gi: &GenInverse, t: &Matrix) -> Result<f64> {
    check_shapes(gi, t)?;
    let ratio = op_norm(&(t - &gi.forward)) * op_norm(&gi.inverse);
    if ratio < 1.0 {
        Ok(ratio)
    } else {
        Err(Error::Ball(format!("‖T − A‖·‖A⁺‖ = {ratio:.6} ≥ 1")))
    }
}

/// `C⁻¹` through an LU solve, refused when `C` is too ill-conditioned.
pub(crate) fn c_inverse(gi: &GenInverse, t: &Matrix, cfg: &Config) -> Result<Matrix> {
    let c = c_op(gi, t);
    let cond = condition_number(&c);
    if cond > cfg.cond_max {
        return Err(Error::Ball(format!("C_A(A⁺,T) has condition number {cond:e}")));
    }
    let m = c.nrows();
    c.lu()
        .solve(&Matrix::identity(m, m))
        .ok_or_else(|| Error::Ball("C_A(A⁺,T) is singular".into()))
}

/// `B = A⁺·C⁻¹` (equivalently `D⁻¹·A⁺`), without the transversality check.
pub(crate) fn candidate_inverse(gi: &GenInverse, t: &Matrix, cfg: &Config) -> Result<Matrix> {
    let c = c_op(gi, t);
    let cond = condition_number(&c);
    if cond > cfg.cond_max {
        return Err(Error::Ball(format!("C_A(A⁺,T) has condition number {cond:e}")));
    }
    right_solve(&gi.inverse, &c).ok_or_else(|| Error::Ball("C_A(A⁺,T) is singular".into()))
}

/// Separation statistic for `R(T) ∩ N(A⁺) = {0}`: the smallest singular value
/// of the stacked orthonormal bases, zero when the dimensions alone force an
/// intersection and one when either space is trivial.
pub fn transversality_margin(gi: &GenInverse, t: &Matrix, cfg: &Config) -> f64 {
    let range_t = range_of(t, cfg.tol_split);
    let n = &gi.kernel_complement;
    if range_t.dim() == 0 || n.dim() == 0 {
        return 1.0;
    }
    if range_t.dim() + n.dim() > gi.cod_dim() {
        return 0.0;
    }
    singular_values(&hstack(range_t.basis(), n.basis()))
        .last()
        .copied()
        .unwrap_or(0.0)
}

/// Generalized inverse of a perturbation `T` of `A` sharing the complements
/// of `A⁺`: `B = A⁺·C_A(A⁺,T)⁻¹`.
pub fn perturbed_gi(gi: &GenInverse, t: &Matrix, cfg: &Config) -> Result<GenInverse> {
    ball_check(gi, t)?;
    let margin = transversality_margin(gi, t, cfg);
    if margin <= cfg.tol_split {
        return Err(Error::Transversality(format!("separation {margin:e}")));
    }
    let inverse = candidate_inverse(gi, t, cfg)?;
    Ok(GenInverse {
        forward: t.clone(),
        inverse,
        range_complement: gi.range_complement.clone(),
        kernel_complement: gi.kernel_complement.clone(),
    })
}

/// Finite-dimensional rank-class test: inside the ball, `T` keeps the rank of `A`.
pub fn rank_class_preserved(gi: &GenInverse, t: &Matrix, cfg: &Config) -> Result<bool> {
    ball_check(gi, t)?;
    Ok(crate::linalg::rank_of(t, cfg.tol_split) == crate::linalg::rank_of(&gi.forward, cfg.tol_split))
}
