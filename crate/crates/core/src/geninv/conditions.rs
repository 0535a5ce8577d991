use std::collections::BTreeMap;

use serde::Serialize;

use super::{ball_check, c_inverse, candidate_inverse, transversality_margin, GenInverse};
use crate::config::Config;
use crate::error::Result;
use crate::io::matrix_serde;
use crate::linalg::{kernel_of, op_norm, range_of, singular_values, split_margin, subspace_distance, Matrix};

pub const CONDITION_KEYS: [&str; 7] = ["i", "ii", "iii", "iv", "v", "vi", "vii"];

/// How a statistic is compared with its threshold.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckKind {
    /// Holds when the statistic exceeds the threshold (a separation).
    Separation,
    /// Holds when the statistic is at most the threshold (a residual).
    Residual,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct ConditionCheck {
    pub holds: bool,
    pub statistic: f64,
    pub threshold: f64,
    pub kind: CheckKind,
}

impl ConditionCheck {
    fn separation(statistic: f64, threshold: f64) -> Self {
        Self {
            holds: statistic > threshold,
            statistic,
            threshold,
            kind: CheckKind::Separation,
        }
    }

    fn residual(statistic: f64, threshold: f64) -> Self {
        Self {
            holds: statistic <= threshold,
            statistic,
            threshold,
            kind: CheckKind::Residual,
        }
    }

    /// The statistic sits at least a factor of ten away from the threshold.
    pub fn is_decisive(&self) -> bool {
        self.statistic <= self.threshold / 10.0 || self.statistic >= self.threshold * 10.0
    }
}

/// The seven equivalent transversality conditions evaluated for one `T`.
#[derive(Debug, Clone, Serialize)]
pub struct ConditionReport {
    pub conditions: BTreeMap<String, ConditionCheck>,
    /// `B = A⁺·C_A(A⁺,T)⁻¹`.
    #[serde(with = "matrix_serde")]
    pub candidate_inverse: Matrix,
    /// All seven booleans coincide.
    pub agree: bool,
    /// Every statistic and every singular-value gap of `T` is at least a
    /// factor of ten from its decision threshold.
    pub decisive: bool,
}

impl ConditionReport {
    pub fn holds(&self, key: &str) -> bool {
        self.conditions[key].holds
    }

    pub fn all_hold(&self) -> bool {
        self.conditions.values().all(|c| c.holds)
    }

    pub fn none_hold(&self) -> bool {
        self.conditions.values().all(|c| !c.holds)
    }

    /// Keys whose verdict differs from condition (i).
    pub fn disagreements(&self) -> Vec<&str> {
        let first = self.holds("i");
        CONDITION_KEYS
            .iter()
            .copied()
            .filter(|k| self.holds(k) != first)
            .collect()
    }
}

fn rank_gap_is_decisive(t: &Matrix, tol: f64) -> bool {
    let s = singular_values(t);
    let Some(&smax) = s.first() else { return true };
    if smax == 0.0 {
        return true;
    }
    s.iter().all(|&x| {
        let rel = x / smax;
        rel <= tol / 10.0 || rel >= tol * 10.0
    })
}

/// Evaluates conditions (i)–(vii) for `T` in the ball around `A`.
///
/// Statistics: (i) smallest singular value of `[R(T) | N(A⁺)]`; (ii) worst of
/// the two axiom residuals of `B` and the distances `R(B)↔R(A⁺)`,
/// `N(B)↔N(A⁺)`; (iii)/(iv) direct-sum separations; (v) distance between
/// `(I − A⁺A)N(T)` and `N(A)`; (vi)/(vii) relative norms of the parts of
/// `C⁻¹T N(A)` and `C⁻¹T` outside `R(A)`.
pub fn seven_conditions(gi: &GenInverse, t: &Matrix, cfg: &Config) -> Result<ConditionReport> {
    ball_check(gi, t)?;
    let a = &gi.forward;
    let (m, n) = a.shape();
    let tol = cfg.tol_split;
    let scale = 1.0 + op_norm(t);

    let range_t = range_of(t, tol);
    let null_t = kernel_of(t, tol);
    let null_a = kernel_of(a, tol);
    let range_a = range_of(a, tol);

    let c_inv = c_inverse(gi, t, cfg)?;
    let b = candidate_inverse(gi, t, cfg)?;

    let mut conditions = BTreeMap::new();

    conditions.insert(
        "i".to_string(),
        ConditionCheck::separation(transversality_margin(gi, t, cfg), tol),
    );

    let tbt = op_norm(&(t * &b * t - t)) / scale;
    let btb = op_norm(&(&b * t * &b - &b)) / (1.0 + op_norm(&b));
    let dr = subspace_distance(&range_of(&b, tol), &gi.range_complement);
    let dn = subspace_distance(&kernel_of(&b, tol), &gi.kernel_complement);
    conditions.insert(
        "ii".to_string(),
        ConditionCheck::residual(tbt.max(btb).max(dr).max(dn), cfg.tol_num),
    );

    let sep = |u, v| split_margin(u, v).unwrap_or(0.0);
    conditions.insert(
        "iii".to_string(),
        ConditionCheck::separation(sep(&range_t, &gi.kernel_complement), tol),
    );
    conditions.insert(
        "iv".to_string(),
        ConditionCheck::separation(sep(&null_t, &gi.range_complement), tol),
    );

    let complement_proj = Matrix::identity(n, n) - gi.domain_projector();
    let image = if null_t.dim() == 0 {
        crate::linalg::Subspace::trivial(n)
    } else {
        let w = &complement_proj * null_t.basis();
        if op_norm(&w) == 0.0 {
            crate::linalg::Subspace::trivial(n)
        } else {
            range_of(&w, tol)
        }
    };
    conditions.insert(
        "v".to_string(),
        ConditionCheck::residual(subspace_distance(&image, &null_a), cfg.tol_num),
    );

    let outside_range_a = Matrix::identity(m, m) - range_a.orthogonal_projector();
    let ct = &c_inv * t;
    let vi = op_norm(&(&outside_range_a * &ct * null_a.basis())) / scale;
    conditions.insert("vi".to_string(), ConditionCheck::residual(vi, cfg.tol_num));
    let vii = op_norm(&(&outside_range_a * &ct)) / scale;
    conditions.insert("vii".to_string(), ConditionCheck::residual(vii, cfg.tol_num));

    let first = conditions["i"].holds;
    let agree = conditions.values().all(|c| c.holds == first);
    let decisive = conditions.values().all(ConditionCheck::is_decisive)
        && rank_gap_is_decisive(t, tol)
        && rank_gap_is_decisive(a, tol);
    Ok(ConditionReport {
        conditions,
        candidate_inverse: b,
        agree,
        decisive,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geninv::moore_penrose;
    use crate::linalg::Vector;

    fn diag(d: &[f64]) -> Matrix {
        Matrix::from_diagonal(&Vector::from_column_slice(d))
    }

    #[test]
    fn unperturbed_operator_satisfies_everything() {
        let a = Matrix::from_row_slice(2, 3, &[1.0, 2.0, 0.0, 2.0, 4.0, 0.0]);
        let gi = moore_penrose(&a);
        let report = seven_conditions(&gi, &a, &Config::DEFAULT).unwrap();
        assert!(report.all_hold(), "{report:#?}");
        assert!(report.agree && report.decisive);
    }

    #[test]
    fn rank_jump_violates_everything() {
        let a = diag(&[1.0, 0.0]);
        let gi = moore_penrose(&a);
        for eps in [0.5, -0.5, 0.1, -0.1, 0.01, -0.01] {
            let report = seven_conditions(&gi, &diag(&[1.0, eps]), &Config::DEFAULT).unwrap();
            assert!(report.none_hold(), "eps {eps}: {report:#?}");
            assert!(report.decisive);
        }
    }

    #[test]
    fn outside_ball_is_an_error() {
        let gi = moore_penrose(&diag(&[1.0, 0.0]));
        assert!(seven_conditions(&gi, &diag(&[1.0, 1.5]), &Config::DEFAULT).is_err());
    }

    #[test]
    fn report_serializes_keys_in_order() {
        let gi = moore_penrose(&diag(&[1.0, 0.0]));
        let report = seven_conditions(&gi, &diag(&[1.0, 0.0]), &Config::DEFAULT).unwrap();
        let json = serde_json::to_string(&report).unwrap();
        let positions: Vec<usize> = CONDITION_KEYS
            .iter()
            .map(|k| json.find(&format!("\"{k}\":")).unwrap())
            .collect();
        assert!(positions.windows(2).all(|w| w[0] < w[1]));
    }
}
