//! Randomized invariants over the public API.

use eclipsehash::{
    hamming_distance, inverse_stereographic, knn_hamming, knn_l2, pack_bits,
    spherical_hamming_distance, stereographic, Dataset, Error, HashFamily, Method, Seed,
    StreamPurpose,
};
use proptest::prelude::*;

fn bools(len: usize) -> impl Strategy<Value = Vec<bool>> {
    proptest::collection::vec(any::<bool>(), len)
}

fn three_same_length_codes() -> impl Strategy<Value = (Vec<bool>, Vec<bool>, Vec<bool>)> {
    (1usize..200).prop_flat_map(|len| (bools(len), bools(len), bools(len)))
}

proptest! {
    #[test]
    fn hamming_is_a_metric((a, b, c) in three_same_length_codes()) {
        let (ca, cb, cc) = (pack_bits(&a), pack_bits(&b), pack_bits(&c));
        let naive = a.iter().zip(&b).filter(|(x, y)| x != y).count() as u32;
        let ab = hamming_distance(&ca, &cb).unwrap();
        prop_assert_eq!(ab, naive);
        prop_assert_eq!(hamming_distance(&ca, &ca).unwrap(), 0);
        prop_assert_eq!(ab, hamming_distance(&cb, &ca).unwrap());
        let (bc, ac) = (
            hamming_distance(&cb, &cc).unwrap(),
            hamming_distance(&ca, &cc).unwrap(),
        );
        prop_assert!(ac <= ab + bc);
    }

    #[test]
    fn packing_preserves_every_bit(bits in (1usize..300).prop_flat_map(bools)) {
        let code = pack_bits(&bits);
        prop_assert_eq!(code.len(), bits.len());
        for (i, &b) in bits.iter().enumerate() {
            prop_assert_eq!(code.get(i), b);
        }
        prop_assert_eq!(code.count_ones() as usize, bits.iter().filter(|&&b| b).count());
    }

    #[test]
    fn spherical_hamming_matches_a_naive_oracle(
        (a, b) in (1usize..150).prop_flat_map(|len| (bools(len), bools(len)))
    ) {
        let xor = a.iter().zip(&b).filter(|(x, y)| x != y).count();
        let and = a.iter().zip(&b).filter(|(x, y)| **x && **y).count();
        let got = spherical_hamming_distance(&pack_bits(&a), &pack_bits(&b));
        match (xor, and) {
            (0, 0) => {
                let indeterminate = matches!(got, Err(Error::SphericalHammingIndeterminate));
                prop_assert!(indeterminate);
            }
            (_, 0) => {
                let division = matches!(got, Err(Error::SphericalHammingDivision { .. }));
                prop_assert!(division);
            }
            _ => prop_assert_eq!(got.unwrap(), xor as f64 / and as f64),
        }
    }
}

fn small_family() -> impl Strategy<Value = (Method, usize, usize, Option<f64>, Option<f64>, u64)> {
    (
        prop_oneof![
            Just(Method::Lh),
            Just(Method::Ah),
            Just(Method::Hs),
            Just(Method::Eh)
        ],
        1usize..6,
        1usize..80,
        -1.0f64..=1.0,
        0.1f64..10.0,
        any::<u64>(),
    )
        .prop_map(|(m, n, b, c, d, seed)| {
            if m == Method::Eh {
                (m, n, b, Some(c), Some(d), seed)
            } else {
                (m, n, b, None, None, seed)
            }
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn batch_hash_agrees_with_single(
        (method, n, b, c, d, seed) in small_family(),
        data_seed in any::<u64>(),
        rows in 1usize..24,
    ) {
        let family = HashFamily::sample(
            method, n, b, c, d, &mut Seed(seed).stream(StreamPurpose::Family),
        ).unwrap();
        let mut rng = Seed(data_seed).stream(StreamPurpose::Records);
        let data = eclipsehash::rng::sample_standard_normal_matrix(rows, n, &mut rng);
        let xs: Vec<Vec<f64>> = (0..rows).map(|r| data.row(r).to_vec()).collect();
        let batch = family.batch_hash(&xs).unwrap();
        for (x, code) in xs.iter().zip(&batch) {
            prop_assert_eq!(&family.hash(x).unwrap(), code);
        }
    }

    #[test]
    fn hamming_knn_matches_a_sort_oracle(
        n in 1usize..30,
        len in 1usize..16,
        seed in any::<u64>(),
        k_frac in 0.0f64..1.0,
    ) {
        let mut rng = Seed(seed).stream(StreamPurpose::Records);
        use rand::Rng;
        let codes: Vec<_> = (0..n)
            .map(|_| pack_bits(&(0..len).map(|_| rng.random::<bool>()).collect::<Vec<_>>()))
            .collect();
        let query = pack_bits(&(0..len).map(|_| rng.random::<bool>()).collect::<Vec<_>>());
        let k = 1 + ((n - 1) as f64 * k_frac) as usize;
        let got = knn_hamming(&codes, &query, k).unwrap();
        let mut oracle: Vec<(u32, usize)> = codes
            .iter()
            .enumerate()
            .map(|(i, c)| (hamming_distance(c, &query).unwrap(), i))
            .collect();
        oracle.sort();
        let expect: Vec<usize> = oracle[..k].iter().map(|&(_, i)| i).collect();
        prop_assert_eq!(got.ids(), &expect[..]);
    }

    #[test]
    fn l2_knn_matches_a_sort_oracle(
        n in 1usize..40,
        dim in 1usize..4,
        seed in any::<u64>(),
    ) {
        let mut rng = Seed(seed).stream(StreamPurpose::Records);
        use rand::Rng;
        // Small integer coordinates force plenty of exact distance ties.
        let recs: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..dim).map(|_| f64::from(rng.random_range(-2i32..=2))).collect())
            .collect();
        let q: Vec<f64> = (0..dim).map(|_| f64::from(rng.random_range(-2i32..=2))).collect();
        let k = 1 + seed as usize % n;
        let got = knn_l2(&recs, &q, k).unwrap();
        let mut oracle: Vec<(f64, usize)> = recs
            .iter()
            .enumerate()
            .map(|(i, r)| {
                (r.iter().zip(&q).map(|(a, b)| (a - b) * (a - b)).sum::<f64>(), i)
            })
            .collect();
        oracle.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let expect: Vec<usize> = oracle[..k].iter().map(|&(_, i)| i).collect();
        prop_assert_eq!(got.ids(), &expect[..]);
    }

    #[test]
    fn projection_round_trip_is_the_identity(
        dim in 1usize..12,
        scale in 0.1f64..10.0,
        d in 0.1f64..10.0,
        seed in any::<u64>(),
    ) {
        let mut rng = Seed(seed).stream(StreamPurpose::Records);
        use rand::Rng;
        let x: Vec<f64> = (0..dim).map(|_| (rng.random::<f64>() - 0.5) * 2.0 * scale).collect();
        let p = inverse_stereographic(&x, d).unwrap();
        let back = stereographic(&p, d).unwrap();
        let scale_ref = x.iter().map(|v| v.abs()).fold(d, f64::max);
        for (a, b) in x.iter().zip(&back) {
            prop_assert!((a - b).abs() <= 1e-9 * scale_ref, "{a} vs {b}");
        }
    }

    #[test]
    fn ratio_is_the_empirical_norm_cdf(
        n in 1usize..60,
        seed in any::<u64>(),
        d in 0.01f64..6.0,
    ) {
        let mut rng = Seed(seed).stream(StreamPurpose::Records);
        use rand::Rng;
        let recs: Vec<Vec<f64>> = (0..n)
            .map(|_| vec![rng.random::<f64>() * 4.0, rng.random::<f64>() * 4.0])
            .collect();
        let expect = recs
            .iter()
            .filter(|r| (r[0] * r[0] + r[1] * r[1]).sqrt() < d)
            .count() as f64
            / n as f64;
        let ds = Dataset::new("t", recs, vec![]).unwrap();
        prop_assert_eq!(eclipsehash::eval::ratio(&ds, d).unwrap(), expect);
        // Nondecreasing in d.
        prop_assert!(eclipsehash::eval::ratio(&ds, d + 0.5).unwrap() >= expect);
    }
}
