use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::config::Config;
use crate::error::{Error, Result};
use crate::linalg::{max_abs, Matrix, Vector};

pub type PointFn = Arc<dyn Fn(&Vector) -> Result<Vector> + Send + Sync>;
pub type JacobianFn = Arc<dyn Fn(&Vector) -> Result<Matrix> + Send + Sync>;

/// A `C¹` map `R^dom → R^cod` with an optional analytic Jacobian.
///
/// Without an analytic Jacobian, central differences with step
/// `1e-6·(1 + ‖x‖∞)` are used.
#[derive(Clone)]
pub struct DifferentiableMap {
    dom_dim: usize,
    cod_dim: usize,
    eval: PointFn,
    jacobian: Option<JacobianFn>,
}

impl fmt::Debug for DifferentiableMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("DifferentiableMap")
            .field("dom_dim", &self.dom_dim)
            .field("cod_dim", &self.cod_dim)
            .field("analytic_jacobian", &self.jacobian.is_some())
            .finish()
    }
}

impl DifferentiableMap {
    pub fn new<F>(dom_dim: usize, cod_dim: usize, eval: F) -> Self
    where
        F: Fn(&Vector) -> Result<Vector> + Send + Sync + 'static,
    {
        Self {
            dom_dim,
            cod_dim,
            eval: Arc::new(eval),
            jacobian: None,
        }
    }

    pub fn with_jacobian<J>(mut self, jacobian: J) -> Self
    where
        J: Fn(&Vector) -> Result<Matrix> + Send + Sync + 'static,
    {
        self.jacobian = Some(Arc::new(jacobian));
        self
    }

    /// `f(x) = A·x`.
    pub fn linear(a: Matrix) -> Self {
        let (m, n) = a.shape();
        let a2 = a.clone();
        Self::new(n, m, move |x| Ok(&a * x)).with_jacobian(move |_| Ok(a2.clone()))
    }

    pub fn dom_dim(&self) -> usize {
        self.dom_dim
    }

    pub fn cod_dim(&self) -> usize {
        self.cod_dim
    }

    pub fn has_analytic_jacobian(&self) -> bool {
        self.jacobian.is_some()
    }

    fn check_point(&self, x: &Vector) -> Result<()> {
        if x.len() != self.dom_dim {
            return Err(Error::Dimension(format!(
                "point has {} coordinates, map expects {}",
                x.len(),
                self.dom_dim
            )));
        }
        Ok(())
    }

    pub fn eval(&self, x: &Vector) -> Result<Vector> {
        self.check_point(x)?;
        let y = (self.eval)(x)?;
        if y.len() != self.cod_dim || y.iter().any(|v| !v.is_finite()) {
            return Err(Error::Eval(format!("map returned an invalid value at {:?}", x.as_slice())));
        }
        Ok(y)
    }

    pub fn jacobian(&self, x: &Vector) -> Result<Matrix> {
        match &self.jacobian {
            Some(jac) => {
                self.check_point(x)?;
                let j = jac(x)?;
                if j.shape() != (self.cod_dim, self.dom_dim) || j.iter().any(|v| !v.is_finite()) {
                    return Err(Error::Eval(format!(
                        "Jacobian has an invalid value at {:?}",
                        x.as_slice()
                    )));
                }
                Ok(j)
            }
            None => self.fd_jacobian(x),
        }
    }

    /// Central-difference Jacobian.
    pub fn fd_jacobian(&self, x: &Vector) -> Result<Matrix> {
        self.check_point(x)?;
        let h = 1e-6 * (1.0 + x.amax());
        let mut j = Matrix::zeros(self.cod_dim, self.dom_dim);
        for i in 0..self.dom_dim {
            let mut xp = x.clone();
            let mut xm = x.clone();
            xp[i] += h;
            xm[i] -= h;
            let col = (self.eval(&xp)? - self.eval(&xm)?) / (2.0 * h);
            j.set_column(i, &col);
        }
        Ok(j)
    }

    /// Largest relative gap `‖J − J_fd‖max / (1 + ‖J‖max)` over `points`.
    /// Errors when it exceeds `fd_tol`.
    pub fn check_jacobian(&self, points: &[Vector], cfg: &Config) -> Result<f64> {
        let mut worst = 0.0_f64;
        for x in points {
            let analytic = self.jacobian(x)?;
            let fd = self.fd_jacobian(x)?;
            let gap = max_abs(&(&analytic - &fd)) / (1.0 + max_abs(&analytic));
            worst = worst.max(gap);
        }
        if worst > cfg.fd_tol {
            return Err(Error::Eval(format!(
                "analytic Jacobian disagrees with central differences ({worst:e})"
            )));
        }
        Ok(worst)
    }
}

/// One monomial `coef · ∏ xᵢ^powers[i]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Monomial {
    pub coef: f64,
    pub powers: Vec<u32>,
}

/// A polynomial map given component by component as sums of monomials.
///
/// ```json
/// {"dom_dim": 2, "components": [[{"coef": 1, "powers": [2, 0]},
///                                 {"coef": 1, "powers": [0, 2]}]]}
/// ```
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolynomialSpec {
    pub dom_dim: usize,
    pub components: Vec<Vec<Monomial>>,
}

fn monomial_value(m: &Monomial, x: &Vector) -> f64 {
    m.powers
        .iter()
        .zip(x.iter())
        .fold(m.coef, |acc, (&p, &xi)| acc * xi.powi(p as i32))
}

fn monomial_partial(m: &Monomial, x: &Vector, i: usize) -> f64 {
    let p = m.powers[i];
    if p == 0 {
        return 0.0;
    }
    let mut v = m.coef * p as f64;
    for (k, (&pk, &xk)) in m.powers.iter().zip(x.iter()).enumerate() {
        let e = if k == i { pk - 1 } else { pk };
        v *= xk.powi(e as i32);
    }
    v
}

impl PolynomialSpec {
    pub fn validate(&self) -> Result<()> {
        if self.dom_dim == 0 || self.components.is_empty() {
            return Err(Error::Parse("polynomial needs a positive domain dimension and at least one component".into()));
        }
        for (c, terms) in self.components.iter().enumerate() {
            for t in terms {
                if t.powers.len() != self.dom_dim {
                    return Err(Error::Parse(format!(
                        "component {c}: monomial has {} powers, expected {}",
                        t.powers.len(),
                        self.dom_dim
                    )));
                }
                if !t.coef.is_finite() {
                    return Err(Error::Parse(format!("component {c}: non-finite coefficient")));
                }
            }
        }
        Ok(())
    }

    pub fn to_map(&self) -> Result<DifferentiableMap> {
        self.validate()?;
        let (n, m) = (self.dom_dim, self.components.len());
        let comps = self.components.clone();
        let comps2 = self.components.clone();
        Ok(DifferentiableMap::new(n, m, move |x| {
            Ok(Vector::from_iterator(
                comps.len(),
                comps.iter().map(|terms| terms.iter().map(|t| monomial_value(t, x)).sum()),
            ))
        })
        .with_jacobian(move |x| {
            Ok(Matrix::from_fn(comps2.len(), n, |r, i| {
                comps2[r].iter().map(|t| monomial_partial(t, x, i)).sum()
            }))
        }))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sphere() -> PolynomialSpec {
        serde_json::from_str(
            r#"{"dom_dim": 2, "components": [[{"coef": 1, "powers": [2, 0]}, {"coef": 1, "powers": [0, 2]}]]}"#,
        )
        .unwrap()
    }

    #[test]
    fn polynomial_values_and_jacobian() {
        let f = sphere().to_map().unwrap();
        let x = Vector::from_vec(vec![0.6, 0.8]);
        assert!((f.eval(&x).unwrap()[0] - 1.0).abs() < 1e-15);
        let j = f.jacobian(&x).unwrap();
        assert!((j[(0, 0)] - 1.2).abs() < 1e-15 && (j[(0, 1)] - 1.6).abs() < 1e-15);
        let gap = f.check_jacobian(&[x, Vector::from_vec(vec![-2.0, 3.0])], &Config::DEFAULT).unwrap();
        assert!(gap < 1e-8);
    }

    #[test]
    fn fd_fallback_matches_linear_map() {
        let a = Matrix::from_row_slice(2, 3, &[1.0, -2.0, 0.5, 0.0, 3.0, 1.0]);
        let f = DifferentiableMap::new(3, 2, {
            let a = a.clone();
            move |x| Ok(&a * x)
        });
        let j = f.jacobian(&Vector::from_vec(vec![1.0, 2.0, 3.0])).unwrap();
        assert!(max_abs(&(j - a)) < 1e-8);
    }

    #[test]
    fn wrong_jacobian_is_caught() {
        let f = DifferentiableMap::new(1, 1, |x| Ok(x.map(|v| v * v))).with_jacobian(|x| Ok(Matrix::from_element(1, 1, x[0])));
        assert!(f.check_jacobian(&[Vector::from_vec(vec![1.0])], &Config::DEFAULT).is_err());
    }

    #[test]
    fn dimension_errors() {
        let f = sphere().to_map().unwrap();
        assert!(matches!(f.eval(&Vector::zeros(3)), Err(Error::Dimension(_))));
        let bad: PolynomialSpec =
            serde_json::from_str(r#"{"dom_dim": 2, "components": [[{"coef": 1, "powers": [2]}]]}"#).unwrap();
        assert!(bad.to_map().is_err());
    }
}
