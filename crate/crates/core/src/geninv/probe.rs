use serde::Serialize;

use super::{perturbed_gi, GenInverse};
use crate::config::Config;
use crate::error::Result;
use crate::linalg::{op_norm, Matrix, Vector};
use crate::sampling::{rng_for, unit_vector};

#[derive(Debug, Clone, Serialize)]
pub struct SampleFailure {
    pub sample: usize,
    pub point: Vec<f64>,
    pub reason: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct RadiusOutcome {
    pub radius: f64,
    pub passed: usize,
    pub failures: Vec<SampleFailure>,
    /// `max ‖T_x⁺ − T₀⁺‖` over the passing samples.
    pub max_deviation: f64,
}

impl RadiusOutcome {
    pub fn all_pass(&self) -> bool {
        self.failures.is_empty()
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct LocallyFineReport {
    pub base_point: Vec<f64>,
    pub radii: Vec<RadiusOutcome>,
    /// Largest probed radius such that every sample at it and at all smaller
    /// probed radii passed.
    pub fine_radius: Option<f64>,
}

impl LocallyFineReport {
    pub fn deviations(&self) -> Vec<f64> {
        self.radii.iter().map(|r| r.max_deviation).collect()
    }

    pub fn fails_everywhere(&self) -> bool {
        self.radii.iter().all(|r| !r.all_pass())
    }
}

/// Samples `x₀ + r·d` for a fixed set of unit directions `d` at every radius
/// `r`, builds `T_x⁺ = T₀⁺·C⁻¹` where `R(T_x) ∩ N(T₀⁺) = {0}` holds and records
/// how far it strays from `T₀⁺`. Per-sample errors land in the report.
pub fn locally_fine_probe<F>(
    family: F,
    x0: &Vector,
    gi0: &GenInverse,
    radii: &[f64],
    samples: usize,
    seed: u64,
    cfg: &Config,
) -> LocallyFineReport
where
    F: Fn(&Vector) -> Result<Matrix>,
{
    let directions: Vec<Vector> = (0..samples)
        .map(|s| unit_vector(&mut rng_for(seed, s as u64), x0.len()))
        .collect();
    let outcomes: Vec<RadiusOutcome> = radii
        .iter()
        .map(|&radius| {
            let mut outcome = RadiusOutcome {
                radius,
                passed: 0,
                failures: Vec::new(),
                max_deviation: 0.0,
            };
            for (sample, d) in directions.iter().enumerate() {
                let x = x0 + d * radius;
                let result = family(&x).and_then(|t| perturbed_gi(gi0, &t, cfg));
                match result {
                    Ok(gx) => {
                        outcome.passed += 1;
                        let dev = op_norm(&(&gx.inverse - &gi0.inverse));
                        outcome.max_deviation = outcome.max_deviation.max(dev);
                    }
                    Err(e) => outcome.failures.push(SampleFailure {
                        sample,
                        point: x.iter().copied().collect(),
                        reason: e.to_string(),
                    }),
                }
            }
            outcome
        })
        .collect();

    let mut order: Vec<usize> = (0..outcomes.len()).collect();
    order.sort_by(|&i, &j| outcomes[i].radius.total_cmp(&outcomes[j].radius));
    let mut fine_radius = None;
    for i in order {
        if outcomes[i].all_pass() {
            fine_radius = Some(outcomes[i].radius);
        } else {
            break;
        }
    }
    LocallyFineReport {
        base_point: x0.iter().copied().collect(),
        radii: outcomes,
        fine_radius,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geninv::moore_penrose;

    const RADII: [f64; 5] = [0.4, 0.2, 0.1, 0.05, 0.025];

    #[test]
    fn constant_family_has_zero_deviation() {
        let t0 = Matrix::from_row_slice(2, 3, &[1.0, 0.0, 2.0, 0.0, 1.0, 1.0]);
        let gi = moore_penrose(&t0);
        let x0 = Vector::from_vec(vec![0.3, -0.2]);
        let report = locally_fine_probe(|_| Ok(t0.clone()), &x0, &gi, &RADII, 8, 3, &Config::DEFAULT);
        assert_eq!(report.fine_radius, Some(0.4));
        assert!(report.deviations().iter().all(|&d| d == 0.0));
    }

    #[test]
    fn rank_jump_family_fails_at_every_radius() {
        let x0 = Vector::from_vec(vec![0.0, 0.0]);
        let gi = moore_penrose(&Matrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 0.0]));
        let family = |x: &Vector| {
            let r = (x - Vector::zeros(2)).norm();
            Ok(Matrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, r]))
        };
        let report = locally_fine_probe(family, &x0, &gi, &RADII, 6, 1, &Config::DEFAULT);
        assert!(report.fails_everywhere());
        assert_eq!(report.fine_radius, None);
        assert!(report.radii.iter().all(|r| r.failures.len() == 6));
    }

    #[test]
    fn sphere_gradient_deviation_shrinks_linearly() {
        // f(x,y) = x² + y² at (0,1): f′ = [2x, 2y]
        let x0 = Vector::from_vec(vec![0.0, 1.0]);
        let jac = |x: &Vector| Ok(Matrix::from_row_slice(1, 2, &[2.0 * x[0], 2.0 * x[1]]));
        let gi = moore_penrose(&jac(&x0).unwrap());
        let report = locally_fine_probe(jac, &x0, &gi, &RADII, 16, 5, &Config::DEFAULT);
        assert_eq!(report.fine_radius, Some(0.4));
        let dev = report.deviations();
        for w in dev.windows(2) {
            let ratio = w[1] / w[0];
            assert!(ratio > 0.3 && ratio < 0.6, "{dev:?}");
        }
    }
}
