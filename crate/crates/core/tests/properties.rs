use proptest::prelude::*;

use frobkit::family::{coordinate_operator, graph_subspace, CoordinateOperator};
use frobkit::geninv::{axiom_residuals, c_op, gi_from_complements, moore_penrose};
use frobkit::io::{matrix_from_csv, matrix_from_json, matrix_to_csv, matrix_to_json};
use frobkit::linalg::{kernel_of, oblique_projector, op_norm, range_of, subspace_distance, Matrix};
use frobkit::opmanifold::OperatorFamilyContext;
use frobkit::sampling::{gaussian_matrix, random_complement, random_subspace, rank_k_matrix, rng_for};
use frobkit::Config;

const CFG: Config = Config::DEFAULT;

fn shape() -> impl Strategy<Value = (usize, usize, usize, u64)> {
    (1usize..=6, 1usize..=6, any::<u64>()).prop_flat_map(|(m, n, seed)| (Just(m), Just(n), 0..=m.min(n), Just(seed)))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn moore_penrose_satisfies_all_four_equations((m, n, r, seed) in shape()) {
        let a = rank_k_matrix(&mut rng_for(seed, 0), m, n, r);
        let gi = moore_penrose(&a);
        prop_assert!(gi.residuals().max() < 1e-10);
        let ab = &a * &gi.inverse;
        let ba = &gi.inverse * &a;
        prop_assert!(op_norm(&(&ab - ab.transpose())) < 1e-10);
        prop_assert!(op_norm(&(&ba - ba.transpose())) < 1e-10);
    }

    #[test]
    fn prescribed_complements_are_honoured((m, n, r, seed) in shape()) {
        let mut rng = rng_for(seed, 1);
        let a = rank_k_matrix(&mut rng, m, n, r);
        let r_plus = random_complement(&mut rng, &kernel_of(&a, CFG.tol_split), 0.5);
        let n_plus = random_complement(&mut rng, &range_of(&a, CFG.tol_split), 0.5);
        let gi = gi_from_complements(&a, &r_plus, &n_plus, &CFG).unwrap();
        prop_assert!(axiom_residuals(&a, &gi.inverse).max() < 1e-8);
        prop_assert!(subspace_distance(&range_of(&gi.inverse, CFG.tol_split), &r_plus) < 1e-8);
        prop_assert!(subspace_distance(&kernel_of(&gi.inverse, CFG.tol_split), &n_plus) < 1e-8);
    }

    #[test]
    fn residual_identity_holds_in_the_ball((m, n, r, seed) in shape(), size in 0.01f64..0.9) {
        let mut rng = rng_for(seed, 2);
        let a = rank_k_matrix(&mut rng, m, n, r);
        let gi = moore_penrose(&a);
        let g = gaussian_matrix(&mut rng, m, n);
        let t = &a + &g * (size / (op_norm(&g) * op_norm(&gi.inverse).max(1.0)));
        let c = c_op(&gi, &t);
        let c_inv = c.clone().try_inverse().unwrap();
        let b = &gi.inverse * &c_inv;
        let lhs = &t * &b * &t - &t;
        let rhs = -(Matrix::identity(m, m) - &a * &gi.inverse) * &c_inv * &t;
        prop_assert!(op_norm(&(lhs - rhs)) < 1e-9 * (1.0 + op_norm(&t)));
    }

    #[test]
    fn oblique_projector_is_idempotent(n in 2usize..7, seed in any::<u64>(), k_frac in 0.0f64..1.0) {
        let mut rng = rng_for(seed, 3);
        let k = ((n as f64) * k_frac) as usize;
        let range = random_subspace(&mut rng, n, k);
        let null = random_complement(&mut rng, &range, 0.5);
        let p = oblique_projector(&range, &null, CFG.tol_split).unwrap();
        prop_assert!(p.idempotence_defect() < 1e-10);
        prop_assert!(op_norm(&(&p.matrix * range.basis() - range.basis())) < 1e-10);
        if null.dim() > 0 {
            prop_assert!(op_norm(&(&p.matrix * null.basis())) < 1e-10);
        }
    }

    #[test]
    fn coordinate_operator_inverts_graph(n in 2usize..8, seed in any::<u64>(), scale in 0.0f64..3.0) {
        let mut rng = rng_for(seed, 4);
        let k = 1 + (seed as usize) % (n - 1);
        let m0 = random_subspace(&mut rng, n, k);
        let estar = random_complement(&mut rng, &m0, 0.5);
        let alpha = CoordinateOperator { alpha: gaussian_matrix(&mut rng, n - k, k) * scale };
        let back = coordinate_operator(&m0, &estar, &graph_subspace(&m0, &estar, &alpha), &CFG).unwrap();
        prop_assert!((back.alpha - &alpha.alpha).amax() < 1e-8 * (1.0 + scale));
    }

    #[test]
    fn fixed_rank_chart_round_trips(seed in any::<u64>(), pick in 0usize..3) {
        let (m, n, k) = [(2, 2, 1), (3, 3, 2), (3, 4, 1)][pick];
        let mut rng = rng_for(seed, 5);
        let ctx = OperatorFamilyContext::new(&rank_k_matrix(&mut rng, m, n, k), &CFG).unwrap();
        let x = ctx.sample_rank_k(&mut rng);
        let back = ctx.chart_d_star(&ctx.chart_d(&x, &CFG).unwrap()).unwrap();
        prop_assert!((back - &x).norm() <= 1e-10 * x.norm());
    }

    #[test]
    fn matrix_text_formats_round_trip(rows in 1usize..5, cols in 1usize..5, seed in any::<u64>(), scale in -300i32..300) {
        let m = gaussian_matrix(&mut rng_for(seed, 6), rows, cols) * 10f64.powi(scale / 10);
        prop_assert_eq!(&matrix_from_json(&matrix_to_json(&m)).unwrap(), &m);
        prop_assert_eq!(&matrix_from_csv(&matrix_to_csv(&m)).unwrap(), &m);
    }
}
