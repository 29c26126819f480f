use ebmlp_core::data::parse_idx;
use ebmlp_core::ebm::exact_conditional;
use ebmlp_core::linalg::Matrix;
use ebmlp_core::{symmetrized_kl, transfer_weights, EbmModel, IdxFile, MlpModel, Params};
use proptest::prelude::*;

fn params(n: usize, k: usize, m: usize, scale: f64) -> impl Strategy<Value = Params> {
    let v = move |len: usize| proptest::collection::vec(-scale..scale, len);
    (v(k * n), v(m * k), v(k), v(m)).prop_map(move |(w1, w2, b, c)| {
        Params::new(
            Matrix::from_vec(k, n, w1).unwrap(),
            Matrix::from_vec(m, k, w2).unwrap(),
            b,
            c,
        )
        .unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn conditional_is_normalized(p in params(3, 4, 2, 2.0), x in proptest::collection::vec(0.0f64..=1.0, 3)) {
        let joint = exact_conditional(&EbmModel::new(p).unwrap(), &x).unwrap();
        prop_assert!((joint.probs().iter().sum::<f64>() - 1.0).abs() < 1e-12);
        prop_assert!(joint.probs().iter().all(|&q| q >= 0.0));
    }

    #[test]
    fn kl_is_symmetric_and_nonnegative(
        pq in proptest::collection::vec((0.0f64..=1.0, 0.0f64..=1.0), 1..20)
    ) {
        let (p, q): (Vec<f64>, Vec<f64>) = pq.into_iter().unzip();
        let a = symmetrized_kl(&p, &q).unwrap();
        let b = symmetrized_kl(&q, &p).unwrap();
        prop_assert!(a >= 0.0);
        prop_assert!((a - b).abs() <= 1e-12 * a.max(1.0));
        prop_assert_eq!(symmetrized_kl(&p, &p).unwrap(), 0.0);
    }

    #[test]
    fn transfer_round_trip_is_bitwise(p in params(4, 3, 1, 5.0)) {
        let mlp = MlpModel::new(p).unwrap();
        let back: MlpModel = transfer_weights(&transfer_weights(&mlp));
        prop_assert_eq!(back.params.to_bytes(), mlp.params.to_bytes());
    }

    #[test]
    fn blob_round_trip(p in params(5, 2, 2, 3.0)) {
        prop_assert_eq!(Params::from_bytes(&p.to_bytes()).unwrap(), p);
    }

    #[test]
    fn idx_round_trip(count in 0u32..6, rows in 1u32..5, cols in 1u32..5, seed in any::<u8>()) {
        let payload: Vec<u8> = (0..count * rows * cols).map(|i| (i as u8).wrapping_mul(31) ^ seed).collect();
        let file = IdxFile::images(count, rows, cols, payload).unwrap();
        let bytes = file.to_bytes();
        let parsed = parse_idx(&bytes).unwrap();
        prop_assert_eq!(parsed.to_bytes(), bytes);
        prop_assert_eq!(parsed, file);
    }

    #[test]
    fn mlp_output_is_strictly_inside_unit_interval(p in params(3, 3, 2, 4.0), x in proptest::collection::vec(0.0f64..=1.0, 3)) {
        let z = MlpModel::new(p).unwrap().forward(&x).unwrap();
        prop_assert!(z.iter().all(|&v| v > 0.0 && v < 1.0));
    }
}
