use serde::{Deserialize, Serialize};

/// Tolerances and numerical limits shared by every module.
///
/// A snapshot of this record is serialized into every verification report so
/// that a numerical claim can be reproduced from the report alone.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Config {
    /// Orthonormality tolerance for stored subspace bases.
    pub tol_ortho: f64,
    /// General numerical residual tolerance (projector idempotence, GI axioms, containments).
    pub tol_num: f64,
    /// Separation tolerance for direct sums, intersections and rank decisions.
    pub tol_split: f64,
    /// Allowed gap between an analytic Jacobian and central differences.
    pub fd_tol: f64,
    /// Initial-condition tolerance for integral patches.
    pub tol_int: f64,
    pub newton_tol: f64,
    pub newton_max_iter: usize,
    /// Largest accepted condition number of `C_A(A⁺,T)` before a solve is refused.
    pub cond_max: f64,
}

impl Config {
    pub const DEFAULT: Config = Config {
        tol_ortho: 1e-10,
        tol_num: 1e-8,
        tol_split: 1e-8,
        fd_tol: 1e-4,
        tol_int: 1e-10,
        newton_tol: 1e-12,
        newton_max_iter: 50,
        cond_max: 1e12,
    };
}

impl Default for Config {
    fn default() -> Self {
        Self::DEFAULT
    }
}
