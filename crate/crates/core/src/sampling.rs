//! Seeded random generators for matrices, subspaces and directions.
//!
//! Every trial draws from its own stream, `rng_for(seed, index)`, so results
//! do not depend on the order in which trials run.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::linalg::{Matrix, Subspace, Vector};

pub type TrialRng = ChaCha8Rng;

/// splitmix64 finalizer.
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn trial_seed(seed: u64, index: u64) -> u64 {
    mix(mix(seed) ^ index.wrapping_mul(0xD6E8_FEB8_6659_FD93))
}

pub fn rng_for(seed: u64, index: u64) -> TrialRng {
    ChaCha8Rng::seed_from_u64(trial_seed(seed, index))
}

pub fn gaussian_matrix<R: Rng>(rng: &mut R, rows: usize, cols: usize) -> Matrix {
    Matrix::from_fn(rows, cols, |_, _| rng.sample(StandardNormal))
}

pub fn gaussian_vector<R: Rng>(rng: &mut R, n: usize) -> Vector {
    Vector::from_fn(n, |_, _| rng.sample(StandardNormal))
}

pub fn unit_vector<R: Rng>(rng: &mut R, n: usize) -> Vector {
    loop {
        let v = gaussian_vector(rng, n);
        let norm = v.norm();
        if norm > 1e-3 {
            return v / norm;
        }
    }
}

/// Random `rows × cols` matrix of exact rank `k` as a product of Gaussian
/// factors, rescaled to unit spectral norm.
pub fn rank_k_matrix<R: Rng>(rng: &mut R, rows: usize, cols: usize, k: usize) -> Matrix {
    if k == 0 {
        return Matrix::zeros(rows, cols);
    }
    let a = gaussian_matrix(rng, rows, k) * gaussian_matrix(rng, k, cols);
    let norm = crate::linalg::op_norm(&a);
    a / norm
}

/// Random subspace of the given dimension (generic position).
pub fn random_subspace<R: Rng>(rng: &mut R, ambient: usize, dim: usize) -> Subspace {
    if dim == 0 {
        return Subspace::trivial(ambient);
    }
    Subspace::span(&gaussian_matrix(rng, ambient, dim))
}

/// Random complement of `s` that stays well separated from it: the
/// orthogonal complement tilted by a bounded random graph map.
pub fn random_complement<R: Rng>(rng: &mut R, s: &Subspace, tilt: f64) -> Subspace {
    let perp = s.orthogonal_complement();
    if perp.dim() == 0 || s.dim() == 0 {
        return perp;
    }
    let g = gaussian_matrix(rng, s.dim(), perp.dim());
    let g = &g * (tilt / crate::linalg::op_norm(&g).max(1e-12));
    Subspace::span(&(perp.basis() + s.basis() * g))
}
