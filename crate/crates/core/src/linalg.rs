//! Dense building blocks: subspaces with orthonormal bases, oblique
//! projectors, ranks, spectral norms and subspace comparisons.
//!
//! Every subspace is stored by an orthonormal basis whose column count is its
//! dimension. The trivial subspace has an `n × 0` basis and flows through all
//! operations without special cases.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

pub type Matrix = DMatrix<f64>;
pub type Vector = DVector<f64>;

/// Default relative rank tolerance `max(rows, cols) · ε`.
pub fn default_rank_tol(a: &Matrix) -> f64 {
    a.nrows().max(a.ncols()).max(1) as f64 * f64::EPSILON
}

/// Thin SVD with singular values sorted in decreasing order.
pub(crate) struct SortedSvd {
    pub u: Matrix,
    pub sigma: Vec<f64>,
    pub v: Matrix,
}

pub(crate) fn sorted_svd(a: &Matrix) -> SortedSvd {
    let (m, n) = a.shape();
    let p = m.min(n);
    if p == 0 {
        return SortedSvd {
            u: Matrix::zeros(m, 0),
            sigma: Vec::new(),
            v: Matrix::zeros(n, 0),
        };
    }
    let fa = faer::Mat::<f64>::from_fn(m, n, |i, j| a[(i, j)]);
    let svd = fa.thin_svd().expect("SVD of a finite matrix converges");
    let s = svd.S().column_vector();
    let mut order: Vec<usize> = (0..p).collect();
    order.sort_by(|&i, &j| s[j].total_cmp(&s[i]));
    let sigma = order.iter().map(|&i| s[i]).collect();
    let (fu, fv) = (svd.U(), svd.V());
    let u = Matrix::from_fn(m, p, |r, c| fu[(r, order[c])]);
    let v = Matrix::from_fn(n, p, |r, c| fv[(r, order[c])]);
    SortedSvd { u, sigma, v }
}

pub fn singular_values(a: &Matrix) -> Vec<f64> {
    let (m, n) = a.shape();
    if m.min(n) == 0 {
        return Vec::new();
    }
    let fa = faer::Mat::<f64>::from_fn(m, n, |i, j| a[(i, j)]);
    let mut s = fa
        .singular_values()
        .expect("SVD of a finite matrix converges");
    s.sort_by(|x, y| y.total_cmp(x));
    s
}

/// Spectral norm (largest singular value). Empty matrices have norm zero.
pub fn op_norm(a: &Matrix) -> f64 {
    singular_values(a).first().copied().unwrap_or(0.0)
}

/// Numerical rank: the number of singular values above `tol · σ_max`.
pub fn rank_of(a: &Matrix, tol: f64) -> usize {
    let s = singular_values(a);
    match s.first() {
        Some(&smax) if smax > 0.0 => s.iter().filter(|&&x| x > tol * smax).count(),
        _ => 0,
    }
}

pub fn range_of(a: &Matrix, tol: f64) -> Subspace {
    let svd = sorted_svd(a);
    let smax = svd.sigma.first().copied().unwrap_or(0.0);
    let r = if smax > 0.0 {
        svd.sigma.iter().filter(|&&x| x > tol * smax).count()
    } else {
        0
    };
    Subspace {
        basis: canonical_signs(svd.u.columns(0, r).into_owned()),
    }
}

/// Flips each column so that its largest-magnitude entry is positive, which
/// makes computed bases independent of the SVD's sign conventions.
fn canonical_signs(mut basis: Matrix) -> Matrix {
    for mut col in basis.column_iter_mut() {
        let pivot = col.iter().copied().fold(0.0_f64, |best, x| {
            if x.abs() > best.abs() + 1e-12 {
                x
            } else {
                best
            }
        });
        if pivot < 0.0 {
            col.neg_mut();
        }
    }
    basis
}

pub fn kernel_of(a: &Matrix, tol: f64) -> Subspace {
    range_of(&a.transpose(), tol).orthogonal_complement()
}

/// Smallest singular value of `[U.basis | V.basis]`, or `None` when the
/// dimensions do not add up to the ambient dimension.
pub fn split_margin(u: &Subspace, v: &Subspace) -> Option<f64> {
    let n = u.ambient_dim();
    if v.ambient_dim() != n || u.dim() + v.dim() != n {
        return None;
    }
    if n == 0 {
        return Some(1.0);
    }
    let stacked = hstack(u.basis(), v.basis());
    singular_values(&stacked).last().copied()
}

pub fn direct_sum_check(u: &Subspace, v: &Subspace, tol_split: f64) -> bool {
    split_margin(u, v).is_some_and(|m| m > tol_split)
}

/// `‖P_U − P_V‖` for the orthogonal projectors onto `U` and `V`; equals the
/// sine of the largest principal angle when dimensions agree and 1 otherwise.
pub fn subspace_distance(u: &Subspace, v: &Subspace) -> f64 {
    assert_eq!(u.ambient_dim(), v.ambient_dim(), "ambient dimensions differ");
    op_norm(&(u.orthogonal_projector() - v.orthogonal_projector()))
}

/// Dimension of `U ∩ V` decided by the rank of the stacked bases.
pub fn intersection_dim(u: &Subspace, v: &Subspace, tol: f64) -> usize {
    let stacked = hstack(u.basis(), v.basis());
    let s = singular_values(&stacked);
    let r = s.iter().filter(|&&x| x > tol).count();
    u.dim() + v.dim() - r
}

pub(crate) fn hstack(a: &Matrix, b: &Matrix) -> Matrix {
    assert_eq!(a.nrows(), b.nrows());
    let mut out = Matrix::zeros(a.nrows(), a.ncols() + b.ncols());
    out.columns_mut(0, a.ncols()).copy_from(a);
    out.columns_mut(a.ncols(), b.ncols()).copy_from(b);
    out
}

pub fn max_abs(a: &Matrix) -> f64 {
    a.iter().fold(0.0_f64, |acc, x| acc.max(x.abs()))
}

/// Solves `X · M = B` for `X` (right division) through an LU factorization.
pub(crate) fn right_solve(b: &Matrix, m: &Matrix) -> Option<Matrix> {
    let lu = m.transpose().lu();
    lu.solve(&b.transpose()).map(|x| x.transpose())
}

pub(crate) fn condition_number(m: &Matrix) -> f64 {
    let s = singular_values(m);
    match (s.first(), s.last()) {
        (Some(&hi), Some(&lo)) if lo > 0.0 => hi / lo,
        (Some(_), Some(_)) => f64::INFINITY,
        _ => 1.0,
    }
}

/// A linear subspace of `R^n` held by an orthonormal basis.
#[derive(Debug, Clone, PartialEq)]
pub struct Subspace {
    basis: Matrix,
}

impl Subspace {
    pub fn trivial(ambient_dim: usize) -> Self {
        Self {
            basis: Matrix::zeros(ambient_dim, 0),
        }
    }

    pub fn full(ambient_dim: usize) -> Self {
        Self {
            basis: Matrix::identity(ambient_dim, ambient_dim),
        }
    }

    /// Wraps a basis that is already orthonormal within `tol_ortho`.
    pub fn from_orthonormal(basis: Matrix, tol_ortho: f64) -> Result<Self> {
        if basis.ncols() > basis.nrows() {
            return Err(Error::Dimension(format!(
                "{} basis vectors in dimension {}",
                basis.ncols(),
                basis.nrows()
            )));
        }
        let gram = basis.transpose() * &basis;
        let defect = max_abs(&(gram - Matrix::identity(basis.ncols(), basis.ncols())));
        if defect > tol_ortho {
            return Err(Error::Parse(format!(
                "basis is not orthonormal (defect {defect:e})"
            )));
        }
        Ok(Self { basis })
    }

    /// Orthonormal basis of the column span of `vectors`.
    pub fn span(vectors: &Matrix) -> Self {
        range_of(vectors, default_rank_tol(vectors).max(1e-13))
    }

    /// Like [`Subspace::span`] but accepts a basis with zero columns.
    pub fn span_or_trivial(vectors: &Matrix, ambient: usize) -> Self {
        if vectors.ncols() == 0 {
            Self::trivial(ambient)
        } else {
            Self::span(vectors)
        }
    }

    /// Span of a non-empty list of vectors.
    pub fn span_of(vectors: &[Vector]) -> Self {
        Self::span(&Matrix::from_columns(vectors))
    }

    pub fn ambient_dim(&self) -> usize {
        self.basis.nrows()
    }

    pub fn dim(&self) -> usize {
        self.basis.ncols()
    }

    pub fn basis(&self) -> &Matrix {
        &self.basis
    }

    pub fn orthogonal_projector(&self) -> Matrix {
        &self.basis * self.basis.transpose()
    }

    pub fn orthogonal_complement(&self) -> Subspace {
        let n = self.ambient_dim();
        let k = self.dim();
        if k == 0 {
            return Subspace::full(n);
        }
        if k == n {
            return Subspace::trivial(n);
        }
        let q = Matrix::identity(n, n) - self.orthogonal_projector();
        let svd = sorted_svd(&q);
        Subspace {
            basis: canonical_signs(svd.u.columns(0, n - k).into_owned()),
        }
    }

    /// Coordinates of `v` in the stored basis (exact for `v` in the subspace).
    pub fn coords(&self, v: &Vector) -> Vector {
        self.basis.transpose() * v
    }

    pub fn lift(&self, c: &Vector) -> Vector {
        &self.basis * c
    }

    /// Norm of the component of `v` orthogonal to the subspace.
    pub fn residual(&self, v: &Vector) -> f64 {
        (v - self.lift(&self.coords(v))).norm()
    }
}

/// An idempotent matrix together with its range and null space.
#[derive(Debug, Clone)]
pub struct Projector {
    pub matrix: Matrix,
    pub range: Subspace,
    pub nullspace: Subspace,
}

impl Projector {
    pub fn orthogonal(range: &Subspace) -> Self {
        Self {
            matrix: range.orthogonal_projector(),
            range: range.clone(),
            nullspace: range.orthogonal_complement(),
        }
    }

    /// The complementary projector `I − P`.
    pub fn complementary(&self) -> Self {
        let n = self.matrix.nrows();
        Self {
            matrix: Matrix::identity(n, n) - &self.matrix,
            range: self.nullspace.clone(),
            nullspace: self.range.clone(),
        }
    }

    pub fn idempotence_defect(&self) -> f64 {
        op_norm(&(&self.matrix * &self.matrix - &self.matrix))
    }
}

/// Projector onto `range` along `nullspace`, built as `B·(C·B)⁻¹·C` with `B`
/// the range basis and `C` the transposed orthonormal basis of `nullspace⊥`.
pub fn oblique_projector(range: &Subspace, nullspace: &Subspace, tol_split: f64) -> Result<Projector> {
    let n = range.ambient_dim();
    if nullspace.ambient_dim() != n {
        return Err(Error::Dimension(format!(
            "range lives in R^{n}, null space in R^{}",
            nullspace.ambient_dim()
        )));
    }
    match split_margin(range, nullspace) {
        None => {
            return Err(Error::Complement(format!(
                "dim {} + dim {} ≠ {n}",
                range.dim(),
                nullspace.dim()
            )))
        }
        Some(m) if m <= tol_split => {
            return Err(Error::Complement(format!(
                "subspaces intersect (separation {m:e})"
            )))
        }
        Some(_) => {}
    }
    if range.dim() == 0 || nullspace.dim() == 0 {
        let matrix = if range.dim() == 0 { Matrix::zeros(n, n) } else { Matrix::identity(n, n) };
        return Ok(Projector {
            matrix,
            range: range.clone(),
            nullspace: nullspace.clone(),
        });
    }
    let b = range.basis();
    let c = nullspace.orthogonal_complement().basis().transpose();
    let cb = &c * b;
    let inner = cb
        .lu()
        .solve(&c)
        .ok_or_else(|| Error::Complement("singular coupling matrix".into()))?;
    Ok(Projector {
        matrix: b * inner,
        range: range.clone(),
        nullspace: nullspace.clone(),
    })
}
