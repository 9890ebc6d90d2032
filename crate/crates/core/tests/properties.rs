use dppcheck::cs::jordan_angles;
use dppcheck::dpp::{enumerate_distribution, inclusion_prob};
use dppcheck::exterior::{
    binomial, combo_rank, combo_unrank, compound2, inner, plucker_coords, wedge, wedge2_norm_sq, wedge_columns,
    Combinations, KVector,
};
use dppcheck::harness::random_frame;
use dppcheck::linalg::{dot, gram_det, householder_to_e1, mixed_gram_det, DenseMatrix};
use dppcheck::IndexCombo;
use proptest::prelude::*;

fn vec_of(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-1.0f64..1.0, n)
}

fn matrix(r: usize, c: usize) -> impl Strategy<Value = DenseMatrix> {
    prop::collection::vec(vec_of(c), r).prop_map(|rows| DenseMatrix::from_rows(&rows).unwrap())
}

fn frame_dims() -> impl Strategy<Value = (u64, usize, usize)> {
    (any::<u64>(), 4usize..=8).prop_flat_map(|(seed, n)| (Just(seed), Just(n), 2usize..n.min(5)))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn wedge_of_vectors_is_antisymmetric(x in vec_of(5), y in vec_of(5)) {
        let xy = wedge(&KVector::from_vector(&x), &KVector::from_vector(&y)).unwrap();
        let yx = wedge(&KVector::from_vector(&y), &KVector::from_vector(&x)).unwrap();
        for (a, b) in xy.coeffs().iter().zip(yx.coeffs()) {
            prop_assert!((a + b).abs() < 1e-15);
        }
        let t = plucker_coords(&x, &y).unwrap();
        for i in 1..=5 {
            prop_assert_eq!(t.t(i, i), 0.0);
            for j in i + 1..=5 {
                prop_assert_eq!(t.t(i, j), -t.t(j, i));
            }
        }
    }

    #[test]
    fn second_compound_is_multiplicative(a in matrix(3, 4), b in matrix(4, 3)) {
        let direct = compound2(&a.matmul(&b).unwrap()).unwrap();
        let product = compound2(&a).unwrap().matmul(&compound2(&b).unwrap()).unwrap();
        prop_assert!(direct.max_abs_diff(&product) < 1e-13);
    }

    #[test]
    fn wedge_norm_matches_gram_determinant(x in vec_of(6), y in vec_of(6)) {
        let lagrange = dot(&x, &x) * dot(&y, &y) - dot(&x, &y).powi(2);
        let w = wedge2_norm_sq(&x, &y).unwrap();
        prop_assert!((w - lagrange).abs() < 1e-13);
        prop_assert!((w - gram_det(&[&x, &y]).unwrap()).abs() < 1e-13);
    }

    #[test]
    fn wedge_inner_product_is_cauchy_binet(a in prop::collection::vec(vec_of(5), 3), b in prop::collection::vec(vec_of(5), 3)) {
        let s = IndexCombo::range(1, 3);
        let wa = wedge_columns(&a, &s).unwrap();
        let wb = wedge_columns(&b, &s).unwrap();
        let (ra, rb): (Vec<&[f64]>, Vec<&[f64]>) = (a.iter().map(Vec::as_slice).collect(), b.iter().map(Vec::as_slice).collect());
        let direct = mixed_gram_det(&ra, &rb).unwrap();
        prop_assert!((inner(&wa, &wb).unwrap() - direct).abs() < 1e-12);
    }

    #[test]
    fn combination_rank_round_trips(n in 1usize..12, k in 0usize..6, pick in any::<u64>()) {
        prop_assume!(k <= n);
        let total = binomial(n, k) as usize;
        let rank = (pick % total as u64) as usize;
        let combo = combo_unrank(n, k, rank);
        prop_assert_eq!(combo.len(), k);
        prop_assert_eq!(combo_rank(n, combo.as_slice()), rank);
    }

    #[test]
    fn distribution_is_invariant_under_row_rotation((seed, n, p) in frame_dims(), axis in vec_of(5)) {
        let f = random_frame(seed, n, p).unwrap();
        prop_assume!(axis[..p].iter().map(|v| v * v).sum::<f64>() > 1e-3);
        let q = householder_to_e1(&axis[..p]);
        let before = enumerate_distribution(&f).unwrap();
        let after = enumerate_distribution(&f.rotated(&q).unwrap()).unwrap();
        prop_assert!(before.max_abs_diff(&after) < 1e-12);
    }

    #[test]
    fn inclusion_is_negatively_correlated((seed, n, p) in frame_dims(), split in any::<u64>()) {
        let f = random_frame(seed, n, p).unwrap();
        // every partition of a p-subset into two nonempty parts
        let pts: Vec<usize> = Combinations::new(n, p).nth((split % binomial(n, p) as u64) as usize).unwrap().iter().collect();
        for cut in 1..pts.len() {
            let a = IndexCombo::new(pts[..cut].to_vec()).unwrap();
            let b = IndexCombo::new(pts[cut..].to_vec()).unwrap();
            let joint = inclusion_prob(&f, &a.union(&b)).unwrap();
            let prod = inclusion_prob(&f, &a).unwrap() * inclusion_prob(&f, &b).unwrap();
            prop_assert!(joint <= prod + 1e-12, "{joint} > {prod}");
        }
    }

    #[test]
    fn principal_angles_are_symmetric(e1 in prop::collection::vec(vec_of(6), 2), e2 in prop::collection::vec(vec_of(6), 3)) {
        let fwd = jordan_angles(&e1, &e2).unwrap();
        let back = jordan_angles(&e2, &e1).unwrap();
        prop_assert_eq!(fwd.angles.len(), back.angles.len());
        for (a, b) in fwd.angles.iter().zip(&back.angles) {
            prop_assert!((a - b).abs() < 1e-12);
        }
        for w in fwd.angles.windows(2) {
            prop_assert!(w[0] <= w[1] + 1e-15);
        }
    }
}
