use flowcat_core::linalg::{
    f2_canonical_form, f2_similar, is_prime_power, prime_power_refine, smith_normal_form, F2Matrix,
    IntMatrix,
};
use num_bigint::BigInt;
use num_integer::Integer;
use proptest::prelude::*;

fn int_matrix(rows: usize, cols: usize, range: i64) -> impl Strategy<Value = IntMatrix> {
    prop::collection::vec(-range..=range, rows * cols).prop_map(move |v| {
        IntMatrix::from_rows(&v.chunks(cols).map(<[i64]>::to_vec).collect::<Vec<_>>())
    })
}

fn f2_matrix(n: usize) -> impl Strategy<Value = F2Matrix> {
    prop::collection::vec(any::<bool>(), n * n).prop_map(move |bits| {
        let mut m = F2Matrix::zeros(n, n);
        for (k, b) in bits.into_iter().enumerate() {
            m.set(k / n, k % n, b);
        }
        m
    })
}

fn invertible(n: usize) -> impl Strategy<Value = F2Matrix> {
    f2_matrix(n).prop_filter("invertible", F2Matrix::is_invertible)
}

fn unit(d: &BigInt) -> bool {
    d == &BigInt::from(1) || d == &BigInt::from(-1)
}

fn check_smith(a: &IntMatrix) -> Result<(), TestCaseError> {
    let snf = smith_normal_form(a);
    prop_assert_eq!(&snf.u.mul(a).unwrap().mul(&snf.v).unwrap(), &snf.d);
    prop_assert!(unit(&snf.u.determinant().unwrap()));
    prop_assert!(unit(&snf.v.determinant().unwrap()));
    prop_assert!(snf.d.is_diagonal());
    let f = snf.invariant_factors();
    for w in f.windows(2) {
        prop_assert!(w[0] > BigInt::from(0));
        prop_assert!(
            w[1].is_multiple_of(&w[0]),
            "{} does not divide {}",
            w[0],
            w[1]
        );
    }
    for i in f.len()..a.rows().min(a.cols()) {
        prop_assert_eq!(snf.d.get(i, i), &BigInt::from(0));
    }
    Ok(())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn smith_identity_six_by_six(a in int_matrix(6, 6, 20)) {
        check_smith(&a)?;
    }

    #[test]
    fn smith_identity_rectangular(rows in 1usize..6, cols in 1usize..6, seed in any::<u64>()) {
        let mut x = seed;
        let mut next = || {
            x = x.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (x >> 33) as i64 % 7 - 3
        };
        let data: Vec<Vec<i64>> = (0..rows).map(|_| (0..cols).map(|_| next()).collect()).collect();
        check_smith(&IntMatrix::from_rows(&data))?;
    }

    #[test]
    fn prime_power_refinement_multiplies_back(d in 1i64..5000) {
        let parts = prime_power_refine(&BigInt::from(d)).unwrap();
        let product = parts.iter().fold(BigInt::from(1), |acc, p| acc * p);
        prop_assert_eq!(product, BigInt::from(d));
        for p in &parts {
            prop_assert!(is_prime_power(p));
        }
    }

    #[test]
    fn canonical_basis_conjugates_to_assembly(n in 1usize..7, seed in any::<u64>()) {
        let mut bits = seed;
        let mut a = F2Matrix::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                a.set(i, j, bits & 1 == 1);
                bits = bits.rotate_right(1) ^ (bits >> 3);
            }
        }
        let c = f2_canonical_form(&a).unwrap();
        let p = &c.basis;
        prop_assert!(p.is_invertible());
        prop_assert_eq!(p.inverse().unwrap().mul(&a).unwrap().mul(p).unwrap(), c.assembly());
    }

    #[test]
    fn canonical_form_is_a_conjugation_invariant(a in f2_matrix(4), p in invertible(4)) {
        let b = p.inverse().unwrap().mul(&a).unwrap().mul(&p).unwrap();
        prop_assert_eq!(
            f2_canonical_form(&a).unwrap().blocks,
            f2_canonical_form(&b).unwrap().blocks
        );
        prop_assert!(f2_similar(&a, &b).unwrap());
    }

    #[test]
    fn similar_implies_equal_invariants(a in f2_matrix(4), b in f2_matrix(4)) {
        if f2_similar(&a, &b).unwrap() {
            prop_assert_eq!(a.rank(), b.rank());
            prop_assert_eq!(a.mul(&a).unwrap().rank(), b.mul(&b).unwrap().rank());
        }
    }
}
