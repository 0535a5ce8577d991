//! Fixed-rank operator manifolds through the family
//! `M(X) = {T : T·N(X) ⊂ R(X)}` on `m × n` matrices.
//!
//! Matrices are embedded in `R^{mn}` row-major, so `vec(P·T·Q) = (P ⊗ Qᵀ)·vec(T)`
//! and the generic subspace-family code applies unchanged. The chart around
//! `A` is
//!
//! ```text
//! D(X)  = (X − A)·A⁺A + C⁻¹·X,          C = I + (X − A)A⁺
//! D*(T) = T·A⁺A + C(T)·T·(I − A⁺A)
//! ```
//!
//! and maps rank-`rank A` matrices near `A` onto the affine slice `M(A)`.

use rand::Rng;
use serde::Serialize;

use crate::config::Config;
use crate::error::{Error, Result};
use crate::family::{coordinate_operator, SubspaceFamily};
use crate::geninv::{c_inverse, c_op, moore_penrose_with_tol, perturbed_gi, transversality_margin, GenInverse};
use crate::linalg::{op_norm, range_of, rank_of, Matrix, Projector, Subspace, Vector};
use crate::sampling::{gaussian_matrix, gaussian_vector, rng_for};

/// Row-major vectorization.
pub fn vec_of(t: &Matrix) -> Vector {
    Vector::from_iterator(t.len(), t.transpose().iter().copied())
}

pub fn unvec(v: &Vector, rows: usize, cols: usize) -> Matrix {
    Matrix::from_row_slice(rows, cols, v.as_slice())
}

/// Matrix of `T ↦ P·T·Q` acting on row-major vectorizations.
pub fn sandwich(p: &Matrix, q: &Matrix) -> Matrix {
    p.kronecker(&q.transpose())
}

/// Matrix of `T ↦ XX⁺·T + (I − XX⁺)·T·X⁺X` on `R^{mn}`; its range is `M(X)`.
fn mx_operator(x: &GenInverse) -> Matrix {
    let (m, n) = x.forward.shape();
    let left = x.codomain_projector();
    let right = x.domain_projector();
    sandwich(&left, &Matrix::identity(n, n)) + sandwich(&(Matrix::identity(m, m) - left), &right)
}

/// Orthonormal basis of the vectorized `M(X)` for `X` with inverse `X⁺`.
pub fn mx_basis(x: &GenInverse, cfg: &Config) -> Subspace {
    let (m, n) = x.forward.shape();
    let op = mx_operator(x);
    if op_norm(&op) == 0.0 {
        return Subspace::trivial(m * n);
    }
    range_of(&op, cfg.tol_split)
}

/// The fixed data of the chart around `A`.
#[derive(Debug, Clone)]
pub struct OperatorFamilyContext {
    pub a: Matrix,
    pub ainv: GenInverse,
    /// `M(A)` in `R^{mn}`.
    pub m0: Subspace,
    /// `E_A = {P_{N(A⁺)}·T·P_{N(A)}}` in `R^{mn}`.
    pub estar: Subspace,
    /// Onto `R(A)` along `N(A⁺)`.
    pub p_range_a: Projector,
    /// Onto `N(A⁺)` along `R(A)`.
    pub p_null_aplus: Projector,
    /// Onto `R(A⁺)` along `N(A)`.
    pub p_range_aplus: Projector,
    /// Onto `N(A)` along `R(A⁺)`.
    pub p_null_a: Projector,
    rank: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct IdentityResiduals {
    /// `‖C⁻¹·T·A⁺A − A‖max`
    pub c_inv_t: f64,
    /// `‖C⁻¹·P_{N(A⁺)} − P_{N(A⁺)}‖max`
    pub c_inv_null: f64,
}

impl OperatorFamilyContext {
    /// Context around `A` with the Moore–Penrose inverse.
    pub fn new(a: &Matrix, cfg: &Config) -> Result<Self> {
        Self::with_inverse(moore_penrose_with_tol(a, cfg.tol_split), cfg)
    }

    pub fn with_inverse(ainv: GenInverse, cfg: &Config) -> Result<Self> {
        let a = ainv.forward.clone();
        let (m, n) = a.shape();
        if m == 0 || n == 0 || op_norm(&a) == 0.0 {
            return Err(Error::Parse("the chart needs a nonzero matrix A".into()));
        }
        ainv.validate(cfg)?;
        let null_a = crate::linalg::kernel_of(&a, cfg.tol_split);
        let range_a = range_of(&a, cfg.tol_split);
        let p_range_a = Projector {
            matrix: ainv.codomain_projector(),
            range: range_a,
            nullspace: ainv.kernel_complement.clone(),
        };
        let p_range_aplus = Projector {
            matrix: ainv.domain_projector(),
            range: ainv.range_complement.clone(),
            nullspace: null_a,
        };
        let p_null_aplus = p_range_a.complementary();
        let p_null_a = p_range_aplus.complementary();
        let m0 = mx_basis(&ainv, cfg);
        let e_op = sandwich(&p_null_aplus.matrix, &p_null_a.matrix);
        let estar = if op_norm(&e_op) == 0.0 {
            Subspace::trivial(m * n)
        } else {
            range_of(&e_op, cfg.tol_split)
        };
        let rank = rank_of(&a, cfg.tol_split);
        Ok(Self {
            a,
            ainv,
            m0,
            estar,
            p_range_a,
            p_null_aplus,
            p_range_aplus,
            p_null_a,
            rank,
        })
    }

    pub fn shape(&self) -> (usize, usize) {
        self.a.shape()
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    /// `mn − (m − k)(n − k)`.
    pub fn expected_m0_dim(&self) -> usize {
        let (m, n) = self.shape();
        m * n - (m - self.rank) * (n - self.rank)
    }

    fn check_shape(&self, x: &Matrix) -> Result<()> {
        if x.shape() != self.a.shape() {
            return Err(Error::Dimension(format!(
                "expected a {}×{} matrix, got {}×{}",
                self.a.nrows(),
                self.a.ncols(),
                x.nrows(),
                x.ncols()
            )));
        }
        Ok(())
    }

    /// `‖(X − A)A⁺‖`; the chart region `V₁` is where this is below one.
    pub fn v1_ratio(&self, x: &Matrix) -> f64 {
        op_norm(&((x - &self.a) * &self.ainv.inverse))
    }

    fn v1_check(&self, x: &Matrix) -> Result<()> {
        self.check_shape(x)?;
        let r = self.v1_ratio(x);
        if r >= 1.0 {
            return Err(Error::Ball(format!("‖(X − A)A⁺‖ = {r:.6} ≥ 1")));
        }
        Ok(())
    }

    /// `‖X − A‖·‖A⁺‖`; the region `W` is where this is below one.
    pub fn w_ratio(&self, x: &Matrix) -> f64 {
        op_norm(&(x - &self.a)) * op_norm(&self.ainv.inverse)
    }

    /// Residual of `vec(T)` off `M(A)`, relative to `1 + ‖T‖`.
    pub fn m0_residual(&self, t: &Matrix) -> f64 {
        self.m0.residual(&vec_of(t)) / (1.0 + t.norm())
    }

    pub fn chart_d(&self, x: &Matrix, cfg: &Config) -> Result<Matrix> {
        self.v1_check(x)?;
        let c_inv = c_inverse(&self.ainv, x, cfg)?;
        Ok((x - &self.a) * &self.p_range_aplus.matrix + c_inv * x)
    }

    pub fn chart_d_star(&self, t: &Matrix) -> Result<Matrix> {
        self.v1_check(t)?;
        let c = c_op(&self.ainv, t);
        Ok(t * &self.p_range_aplus.matrix + c * t * &self.p_null_a.matrix)
    }

    /// `D′(X)ΔX = ΔX·A⁺A + C⁻¹ΔX − C⁻¹·ΔX·A⁺·C⁻¹·X`.
    pub fn chart_d_derivative(&self, x: &Matrix, dx: &Matrix, cfg: &Config) -> Result<Matrix> {
        self.v1_check(x)?;
        self.check_shape(dx)?;
        let c_inv = c_inverse(&self.ainv, x, cfg)?;
        let cdx = &c_inv * dx;
        Ok(dx * &self.p_range_aplus.matrix + &cdx - &cdx * &self.ainv.inverse * &c_inv * x)
    }

    fn membership(&self, dx: &Matrix, cfg: &Config) -> Result<()> {
        let r = self.m0_residual(dx);
        if r > cfg.tol_num {
            return Err(Error::Membership(r));
        }
        Ok(())
    }

    fn require_transversal(&self, x: &Matrix, cfg: &Config) -> Result<GenInverse> {
        self.check_shape(x)?;
        perturbed_gi(&self.ainv, x, cfg)
    }

    /// Closed-form coordinate operator of the family at `X`, applied to `ΔX ∈ M(A)`:
    /// `P_{N(A⁺)}·(C⁻¹·ΔX·A⁺·C⁻¹·X − C⁻¹·ΔX)·P_{N(A)}`.
    pub fn alpha_operator_family(&self, x: &Matrix, dx: &Matrix, cfg: &Config) -> Result<Matrix> {
        self.require_transversal(x, cfg)?;
        self.check_shape(dx)?;
        self.membership(dx, cfg)?;
        let c_inv = c_inverse(&self.ainv, x, cfg)?;
        let cdx = &c_inv * dx;
        let inner = &cdx * &self.ainv.inverse * &c_inv * x - &cdx;
        Ok(&self.p_null_aplus.matrix * inner * &self.p_null_a.matrix)
    }

    /// The same operator through the generic projector construction on the
    /// vectorized `M(X)`.
    pub fn alpha_generic(&self, x: &Matrix, dx: &Matrix, cfg: &Config) -> Result<Matrix> {
        let xinv = self.require_transversal(x, cfg)?;
        self.check_shape(dx)?;
        self.membership(dx, cfg)?;
        let mx = mx_basis(&xinv, cfg);
        let alpha = coordinate_operator(&self.m0, &self.estar, &mx, cfg)?;
        let image = self.estar.lift(&alpha.apply(&self.m0.coords(&vec_of(dx))));
        let (m, n) = self.shape();
        Ok(unvec(&image, m, n))
    }

    /// `−P_{N(A⁺)}·D′(X)ΔX·P_{N(A)}` with `D′` by central differences of the chart.
    pub fn alpha_from_chart_fd(&self, x: &Matrix, dx: &Matrix, h: f64, cfg: &Config) -> Result<Matrix> {
        let plus = self.chart_d(&(x + dx * h), cfg)?;
        let minus = self.chart_d(&(x - dx * h), cfg)?;
        let d_prime = (plus - minus) / (2.0 * h);
        Ok(-(&self.p_null_aplus.matrix * d_prime * &self.p_null_a.matrix))
    }

    /// The three parts of `T` in the splitting
    /// `P_{R(A)}T + P_{N(A⁺)}T·P_{R(A⁺)}` (in `M(A)`) and `P_{N(A⁺)}T·P_{N(A)}` (in `E_A`).
    pub fn decompose(&self, t: &Matrix) -> [Matrix; 3] {
        [
            &self.p_range_a.matrix * t,
            &self.p_null_aplus.matrix * t * &self.p_range_aplus.matrix,
            &self.p_null_aplus.matrix * t * &self.p_null_a.matrix,
        ]
    }

    /// Idempotence defect of `T ↦ P^{N(A⁺)}_{R(X)}T + P^{R(X)}_{N(A⁺)}T·P^{N(X)}_{R(A⁺)}`
    /// where the projectors use `X⁺ = A⁺C⁻¹`.
    pub fn family_projector_defect(&self, x: &Matrix, cfg: &Config) -> Result<f64> {
        let xinv = self.require_transversal(x, cfg)?;
        let p = mx_operator(&xinv);
        Ok(op_norm(&(&p * &p - &p)))
    }

    /// Residuals of `C⁻¹·T·A⁺A = A` and `C⁻¹·P_{N(A⁺)} = P_{N(A⁺)}` at `T`.
    pub fn identity_residuals(&self, t: &Matrix, cfg: &Config) -> Result<IdentityResiduals> {
        self.require_transversal(t, cfg)?;
        let c_inv = c_inverse(&self.ainv, t, cfg)?;
        let null = &self.p_null_aplus.matrix;
        Ok(IdentityResiduals {
            c_inv_t: crate::linalg::max_abs(&(&c_inv * t * &self.p_range_aplus.matrix - &self.a)),
            c_inv_null: crate::linalg::max_abs(&(&c_inv * null - null)),
        })
    }

    /// The family `vec X ↦ vec M(X)` with `M₀ = M(A)` and `E* = E_A` pinned.
    pub fn family(&self, cfg: &Config) -> Result<SubspaceFamily> {
        let (m, n) = self.shape();
        let tol = cfg.tol_split;
        let c = *cfg;
        let m0 = self.m0.clone();
        let a_vec = vec_of(&self.a);
        let fam = SubspaceFamily::new(
            move |v: &Vector| {
                if (v - &a_vec).amax() == 0.0 {
                    return Ok(m0.clone());
                }
                Ok(mx_basis(&moore_penrose_with_tol(&unvec(v, m, n), tol), &c))
            },
            vec_of(&self.a),
            cfg,
        )?;
        fam.with_complement(self.estar.clone(), cfg)
    }

    /// Random rank-`k` matrix inside `W`, from perturbed SVD factors of `A`.
    pub fn sample_rank_k<R: Rng>(&self, rng: &mut R) -> Matrix {
        let (m, n) = self.shape();
        let k = self.rank;
        let svd = crate::linalg::sorted_svd(&self.a);
        let root = Matrix::from_diagonal(&Vector::from_iterator(k, svd.sigma[..k].iter().map(|s| s.sqrt())));
        let left = svd.u.columns(0, k) * &root;
        let right = &root * svd.v.columns(0, k).transpose();
        let g1 = gaussian_matrix(rng, m, k);
        let g2 = gaussian_matrix(rng, k, n);
        let mut s = rng.gen_range(0.2..1.0);
        loop {
            let x = (&left + &g1 * s) * (&right + &g2 * s);
            if self.w_ratio(&x) < 0.9 {
                return x;
            }
            s *= 0.5;
        }
    }

    /// Random `T = A + s·ΔT` with `ΔT ∈ M(A)`, scaled so `D*(T)` lies in `W`.
    pub fn sample_slice<R: Rng>(&self, rng: &mut R) -> Matrix {
        let (m, n) = self.shape();
        let coeffs = gaussian_vector(rng, self.m0.dim());
        let dt = unvec(&self.m0.lift(&coeffs), m, n);
        let dt = &dt / op_norm(&dt).max(1e-300);
        let mut s = rng.gen_range(0.2..1.0) * self.ainv.ball_radius().min(1e6);
        loop {
            let t = &self.a + &dt * s;
            if self.v1_ratio(&t) < 0.9 {
                if let Ok(x) = self.chart_d_star(&t) {
                    if self.w_ratio(&x) < 0.9 {
                        return t;
                    }
                }
            }
            s *= 0.5;
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ChartFailure {
    pub sample: usize,
    pub reason: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct ChartReport {
    pub rows: usize,
    pub cols: usize,
    pub rank: usize,
    pub m0_dim: usize,
    pub samples: usize,
    /// Largest `‖D*(D(X)) − X‖ / ‖X‖` over rank-`k` samples.
    pub round_trip_max: f64,
    /// Largest `‖D(D*(T)) − T‖ / ‖T‖` over slice samples.
    pub inverse_round_trip_max: f64,
    /// Largest residual of `D(X)` off `M(A)`.
    pub membership_max: f64,
    pub rank_failures: usize,
    pub failures: Vec<ChartFailure>,
}

impl ChartReport {
    pub fn passes(&self, round_trip_tol: f64, cfg: &Config) -> bool {
        self.failures.is_empty()
            && self.rank_failures == 0
            && self.round_trip_max <= round_trip_tol
            && self.inverse_round_trip_max <= round_trip_tol
            && self.membership_max <= cfg.tol_num
    }
}

/// Samples rank-`k` matrices `X ∈ W` (checking `D(X) ∈ M(A)` and the round
/// trip) and slice points `T ∈ M(A) ∩ D(W)` (checking `rank D*(T) = k`).
pub fn fixed_rank_chart_check(ctx: &OperatorFamilyContext, samples: usize, seed: u64, cfg: &Config) -> ChartReport {
    let (m, n) = ctx.shape();
    let mut report = ChartReport {
        rows: m,
        cols: n,
        rank: ctx.rank(),
        m0_dim: ctx.m0.dim(),
        samples,
        round_trip_max: 0.0,
        inverse_round_trip_max: 0.0,
        membership_max: 0.0,
        rank_failures: 0,
        failures: Vec::new(),
    };
    for s in 0..samples {
        let mut rng = rng_for(seed, s as u64);
        let x = ctx.sample_rank_k(&mut rng);
        match ctx.chart_d(&x, cfg).and_then(|d| Ok((ctx.chart_d_star(&d)?, d))) {
            Ok((back, d)) => {
                report.round_trip_max = report.round_trip_max.max((back - &x).norm() / x.norm());
                report.membership_max = report.membership_max.max(ctx.m0_residual(&d));
            }
            Err(e) => report.failures.push(ChartFailure {
                sample: s,
                reason: e.to_string(),
            }),
        }
        let t = ctx.sample_slice(&mut rng);
        match ctx.chart_d_star(&t).and_then(|x| Ok((ctx.chart_d(&x, cfg)?, x))) {
            Ok((again, x)) => {
                report.inverse_round_trip_max = report.inverse_round_trip_max.max((again - &t).norm() / t.norm());
                if rank_of(&x, cfg.tol_split) != ctx.rank() {
                    report.rank_failures += 1;
                }
            }
            Err(e) => report.failures.push(ChartFailure {
                sample: s,
                reason: e.to_string(),
            }),
        }
    }
    report
}

#[derive(Debug, Clone, Serialize)]
pub struct TangencyReport {
    pub curves: usize,
    /// Largest `‖(I − P_{M(X)}) vec ċ(0)‖ / ‖ċ(0)‖`.
    pub max_residual: f64,
    /// Numerical rank of the sampled tangents at relative tolerance `1e-6`.
    pub span_dim: usize,
    pub expected_dim: usize,
}

/// Pushes random straight lines `D(X) + t·ΔT`, `ΔT ∈ M(A)`, through the
/// inverse chart and measures how far their velocities at `X` leave `M(X)`.
pub fn tangency_fixed_rank(
    ctx: &OperatorFamilyContext,
    x: &Matrix,
    curves: usize,
    seed: u64,
    cfg: &Config,
) -> Result<TangencyReport> {
    const H: f64 = 1e-6;
    let (m, n) = ctx.shape();
    let xinv = ctx.require_transversal(x, cfg)?;
    let mx = mx_basis(&xinv, cfg);
    let base = ctx.chart_d(x, cfg)?;
    let mut tangents = Matrix::zeros(m * n, curves);
    let mut max_residual = 0.0_f64;
    for c in 0..curves {
        let mut rng = rng_for(seed, c as u64);
        let dt = unvec(&ctx.m0.lift(&gaussian_vector(&mut rng, ctx.m0.dim())), m, n);
        let norm = dt.norm();
        if norm == 0.0 {
            continue;
        }
        let dt = dt / norm;
        let plus = ctx.chart_d_star(&(&base + &dt * H))?;
        let minus = ctx.chart_d_star(&(&base - &dt * H))?;
        let velocity = vec_of(&((plus - minus) / (2.0 * H)));
        let speed = velocity.norm();
        if speed > 0.0 {
            max_residual = max_residual.max(mx.residual(&velocity) / speed);
            tangents.set_column(c, &(velocity / speed));
        }
    }
    Ok(TangencyReport {
        curves,
        max_residual,
        span_dim: rank_of(&tangents, 1e-6),
        expected_dim: mx.dim(),
    })
}

/// Transversality margin of `X` against `N(A⁺)`, exposed for reports.
pub fn chart_margin(ctx: &OperatorFamilyContext, x: &Matrix, cfg: &Config) -> f64 {
    transversality_margin(&ctx.ainv, x, cfg)
}
