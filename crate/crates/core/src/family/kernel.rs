use serde::Serialize;

use super::{CoordinateOperator, DifferentiableMap, SubspaceFamily};
use crate::config::Config;
use crate::error::{Error, Result};
use crate::geninv::{
    ball_check, d_op, locally_fine_probe, moore_penrose_with_tol, transversality_margin, GenInverse, LocallyFineReport,
};
use crate::linalg::{kernel_of, oblique_projector, op_norm, Vector};
use crate::sampling::{rng_for, unit_vector};

/// `x ↦ N(f′(x))` with `N₀ = N(f′(x₀))` and `E* = R(T₀⁺)` for the
/// Moore–Penrose `T₀⁺`.
pub fn kernel_family(f: &DifferentiableMap, x0: &Vector, cfg: &Config) -> Result<SubspaceFamily> {
    let tol = cfg.tol_split;
    let gi0 = moore_penrose_with_tol(&f.jacobian(x0)?, tol);
    let g = f.clone();
    let fam = SubspaceFamily::new(move |x: &Vector| Ok(kernel_of(&g.jacobian(x)?, tol)), x0.clone(), cfg)?;
    fam.with_complement(gi0.range_complement, cfg)
}

/// `α(x) = P^{N₀}_{E*} · D_{T₀}(T₀⁺,T_x)⁻¹ · P^{E*}_{N₀}` restricted to `N₀`, in
/// the bases that [`kernel_family`] pins (`N₀ = N(T₀)`, `E* = R(T₀⁺)`).
pub fn grp_alpha(f: &DifferentiableMap, gi0: &GenInverse, x: &Vector, cfg: &Config) -> Result<CoordinateOperator> {
    let tx = f.jacobian(x)?;
    ball_check(gi0, &tx)?;
    let margin = transversality_margin(gi0, &tx, cfg);
    if margin <= cfg.tol_split {
        return Err(Error::Transversality(format!("separation {margin:e}")));
    }
    let n0 = kernel_of(&gi0.forward, cfg.tol_split);
    let estar = &gi0.range_complement;
    let onto_n0 = oblique_projector(&n0, estar, cfg.tol_split)?;
    let onto_estar = onto_n0.complementary();
    let d = d_op(gi0, &tx);
    let d_inv_n0 = d
        .lu()
        .solve(&(&onto_n0.matrix * n0.basis()))
        .ok_or_else(|| Error::Ball("D_T₀(T₀⁺,T_x) is singular".into()))?;
    Ok(CoordinateOperator {
        alpha: estar.basis().transpose() * &onto_estar.matrix * d_inv_n0,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct RegularProbeReport {
    #[serde(flatten)]
    pub probe: LocallyFineReport,
    /// Largest `‖α(x)‖` over the passing samples at each radius.
    pub alpha_modulus: Vec<f64>,
}

impl RegularProbeReport {
    pub fn passes(&self) -> bool {
        self.probe.radii.iter().all(|r| r.all_pass())
    }
}

/// Locally-fine probe of `x ↦ f′(x)` at `x₀` plus the sampled continuity
/// modulus of `α(x)`. The modulus is an observation on finitely many points,
/// not a certificate of continuity.
pub fn generalized_regular_probe(
    f: &DifferentiableMap,
    x0: &Vector,
    radii: &[f64],
    samples: usize,
    seed: u64,
    cfg: &Config,
) -> Result<RegularProbeReport> {
    let gi0 = moore_penrose_with_tol(&f.jacobian(x0)?, cfg.tol_split);
    let probe = locally_fine_probe(|x| f.jacobian(x), x0, &gi0, radii, samples, seed, cfg);
    let directions: Vec<Vector> = (0..samples)
        .map(|s| unit_vector(&mut rng_for(seed, s as u64), x0.len()))
        .collect();
    let alpha_modulus = radii
        .iter()
        .zip(&probe.radii)
        .map(|(&r, outcome)| {
            let failed: Vec<usize> = outcome.failures.iter().map(|f| f.sample).collect();
            directions
                .iter()
                .enumerate()
                .filter(|(s, _)| !failed.contains(s))
                .filter_map(|(_, d)| grp_alpha(f, &gi0, &(x0 + d * r), cfg).ok())
                .map(|a| op_norm(&a.alpha))
                .fold(0.0, f64::max)
        })
        .collect();
    Ok(RegularProbeReport { probe, alpha_modulus })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::family::coordinate_operator;
    use crate::linalg::{max_abs, subspace_distance, Matrix, Subspace};

    const CFG: Config = Config::DEFAULT;

    fn sphere(n: usize) -> DifferentiableMap {
        DifferentiableMap::new(n, 1, |x| Ok(Vector::from_element(1, x.norm_squared())))
            .with_jacobian(|x| Ok(Matrix::from_row_slice(1, x.len(), (x * 2.0).as_slice())))
    }

    fn e(n: usize, i: usize) -> Vector {
        let mut v = Vector::zeros(n);
        v[i] = 1.0;
        v
    }

    #[test]
    fn circle_kernel_family() {
        let fam = kernel_family(&sphere(2), &Vector::from_vec(vec![0.0, 1.0]), &CFG).unwrap();
        assert!(subspace_distance(fam.base_subspace(), &Subspace::span_of(&[e(2, 0)])) < 1e-15);
        assert!(subspace_distance(fam.complement(), &Subspace::span_of(&[e(2, 1)])) < 1e-15);
        assert!(fam.cofinal_member(&Vector::from_vec(vec![0.7, 0.2]), &CFG).unwrap());
    }

    #[test]
    fn sphere_kernel_is_tangent_plane() {
        let fam = kernel_family(&sphere(3), &Vector::from_vec(vec![0.0, 0.0, 1.0]), &CFG).unwrap();
        let plane = Subspace::span_of(&[e(3, 0), e(3, 1)]);
        assert!(subspace_distance(fam.base_subspace(), &plane) < 1e-15);
    }

    #[test]
    fn affine_map_gives_constant_family() {
        let a = Matrix::from_row_slice(1, 3, &[1.0, 2.0, -1.0]);
        let f = DifferentiableMap::linear(a.clone());
        let fam = kernel_family(&f, &Vector::zeros(3), &CFG).unwrap();
        let gi0 = moore_penrose_with_tol(&a, CFG.tol_split);
        for x in [Vector::from_vec(vec![1.0, 5.0, -3.0]), Vector::from_vec(vec![-2.0, 0.1, 0.0])] {
            assert!(subspace_distance(&fam.eval(&x).unwrap(), fam.base_subspace()) < 1e-12);
            assert!(max_abs(&grp_alpha(&f, &gi0, &x, &CFG).unwrap().alpha) < 1e-12);
        }
    }

    #[test]
    fn closed_form_alpha_on_circle() {
        let f = sphere(2);
        let gi0 = moore_penrose_with_tol(&Matrix::from_row_slice(1, 2, &[0.0, 2.0]), CFG.tol_split);
        let at_base = grp_alpha(&f, &gi0, &Vector::from_vec(vec![0.0, 1.0]), &CFG).unwrap();
        assert!(max_abs(&at_base.alpha) < 1e-15);
        for (x, y) in [(0.3, 1.0), (-0.2, 0.9), (0.1, 1.2)] {
            let a = grp_alpha(&f, &gi0, &Vector::from_vec(vec![x, y]), &CFG).unwrap();
            assert!((a.alpha[(0, 0)] + x / y).abs() < 1e-12, "({x},{y})");
        }
    }

    #[test]
    fn closed_form_matches_projector_path() {
        // f(x,y,z) = (x + y² + z³/3) with a quadratic-cubic kernel family in R³
        let f = DifferentiableMap::new(3, 1, |x| Ok(Vector::from_element(1, x[0] + x[1] * x[1] + x[2].powi(3) / 3.0)))
            .with_jacobian(|x| Ok(Matrix::from_row_slice(1, 3, &[1.0, 2.0 * x[1], x[2] * x[2]])));
        let x0 = Vector::from_vec(vec![0.1, 0.2, -0.3]);
        let fam = kernel_family(&f, &x0, &CFG).unwrap();
        let gi0 = moore_penrose_with_tol(&f.jacobian(&x0).unwrap(), CFG.tol_split);
        for dx in [[0.05, -0.02, 0.01], [-0.1, 0.08, 0.03], [0.0, 0.1, -0.1]] {
            let x = &x0 + Vector::from_column_slice(&dx);
            let closed = grp_alpha(&f, &gi0, &x, &CFG).unwrap();
            let generic = coordinate_operator(fam.base_subspace(), fam.complement(), &fam.eval(&x).unwrap(), &CFG).unwrap();
            assert!(max_abs(&(&closed.alpha - &generic.alpha)) < 1e-10);
        }
    }

    #[test]
    fn regular_probe_on_circle_shrinks_linearly() {
        let radii = [0.4, 0.2, 0.1, 0.05, 0.025];
        let report = generalized_regular_probe(&sphere(2), &Vector::from_vec(vec![0.0, 1.0]), &radii, 12, 2, &CFG).unwrap();
        assert!(report.passes());
        for w in report.alpha_modulus.windows(2) {
            let ratio = w[1] / w[0];
            assert!(ratio > 0.35 && ratio < 0.65, "{:?}", report.alpha_modulus);
        }
    }

    #[test]
    fn regular_probe_flags_rank_jump() {
        let f = DifferentiableMap::new(2, 2, |x| Ok(Vector::from_vec(vec![x[0] * x[0], x[1]])))
            .with_jacobian(|x| Ok(Matrix::from_row_slice(2, 2, &[2.0 * x[0], 0.0, 0.0, 1.0])));
        let report = generalized_regular_probe(&f, &Vector::zeros(2), &[0.4, 0.2, 0.1], 8, 4, &CFG).unwrap();
        assert!(report.probe.fails_everywhere());
    }
}
