use proptest::prelude::*;

use sketchlab::combinatorics::{colex_rank, colex_unrank};
use sketchlab::ecc::{corrupt, Codec, SyndromeCodec};
use sketchlab::estimator_attack::{
    bruteforce_decode, exact_answers, gen_random_factors, hadamard_product, max_violation,
    zhat_recover,
};
use sketchlab::rng::random_database;
use sketchlab::sketch::{read_blob, write_blob};
use sketchlab::validity::answer_is_wrong;
use sketchlab::{
    BitMatrix, BitString, Builder, Database, Itemset, Semantics, Sketch, SketchBuilder,
    SketchParams,
};

fn db_strategy() -> impl Strategy<Value = Database> {
    (1usize..12, 1usize..12, any::<u64>()).prop_map(|(n, d, seed)| random_database(n, d, 0.5, seed))
}

fn semantics() -> impl Strategy<Value = Semantics> {
    prop::sample::select(Semantics::ALL.to_vec())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn text_format_round_trips(db in db_strategy()) {
        prop_assert_eq!(Database::parse_text(&db.to_text()).unwrap(), db.clone());
        prop_assert_eq!(Database::from_binary(&db.to_binary()).unwrap(), db);
    }

    #[test]
    fn bitstring_bytes_round_trip(bits in prop::collection::vec(any::<bool>(), 0..200)) {
        let b = BitString::from_bools(&bits);
        prop_assert_eq!(BitString::from_bytes(&b.to_bytes(), bits.len()).unwrap().to_bools(), bits);
    }

    #[test]
    fn colex_is_a_bijection(rank in 0u128..5000, k in 1usize..5) {
        let s = colex_unrank(rank, k);
        prop_assert_eq!(s.len(), k);
        prop_assert!(s.windows(2).all(|w| w[0] < w[1]));
        prop_assert_eq!(colex_rank(&s), rank);
    }

    #[test]
    fn frequency_counts_containing_rows(db in db_strategy(), mask in any::<u16>()) {
        let attrs: Vec<usize> = (0..db.d()).filter(|&c| mask >> c & 1 == 1).collect();
        let t = Itemset::from_indices(db.d(), attrs.clone()).unwrap();
        let want = (0..db.n()).filter(|&r| attrs.iter().all(|&a| db.get(r, a))).count() as u64;
        let f = db.frequency(&t).unwrap();
        prop_assert_eq!((f.count, f.total), (want, db.n() as u64));
    }

    #[test]
    fn blobs_round_trip(seed in any::<u64>(), sem in semantics(), which in 0usize..3) {
        let db = random_database(20, 6, 0.5, seed);
        let p = SketchParams::new(2, 0.25, 0.2, 20, 6).unwrap();
        let builder = [Builder::ReleaseDb, Builder::ReleaseAnswers, Builder::Subsample][which];
        let blob = builder.build(&db, &p, sem, seed).unwrap();
        let mut buf = Vec::new();
        write_blob(&blob, &mut buf).unwrap();
        prop_assert_eq!(read_blob(buf.as_slice()).unwrap(), blob);
    }

    #[test]
    fn exact_sketches_are_always_valid(db in db_strategy(), sem in semantics()) {
        prop_assume!(db.d() >= 2);
        let p = SketchParams::new(2, 0.125, 0.1, db.n() as u64, db.d()).unwrap();
        for builder in [Builder::ReleaseDb, Builder::ReleaseAnswers] {
            let sketch = Sketch::from_blob(&builder.build(&db, &p, sem, 0).unwrap()).unwrap();
            for a in 0..db.d() {
                for b in a + 1..db.d() {
                    let t = Itemset::from_indices(db.d(), [a, b]).unwrap();
                    let answer = sketch.query(&t).unwrap();
                    prop_assert!(!answer_is_wrong(answer, db.frequency(&t).unwrap(), 0.125));
                }
            }
        }
    }

    #[test]
    fn syndrome_code_corrects_up_to_t(seed in any::<u64>(), msg_seed in any::<u64>()) {
        let codec = SyndromeCodec::new(48).unwrap();
        let t = codec.correctable_errors();
        let mut rng = sketchlab::rng::stream_rng(msg_seed, 0);
        let msg = sketchlab::rng::random_bits(codec.message_len(), &mut rng);
        let word = codec.encode(&msg).unwrap();
        let positions: Vec<usize> = (0..t).map(|i| ((seed >> (8 * i)) as usize + i) % 48).collect();
        prop_assert_eq!(codec.decode(&corrupt(&word, &positions)).unwrap(), msg);
    }

    #[test]
    fn hadamard_entries_are_products(seed in any::<u64>(), s in 1usize..4, ell in 1usize..5, n in 1usize..9) {
        let f = gen_random_factors(s, ell, n, seed);
        let stack = hadamard_product(&f).unwrap();
        for r in 0..stack.rows() {
            let tuple = stack.tuple(r);
            for h in 0..n {
                let want = tuple.iter().zip(&f).all(|(&i, m)| m.get(i, h));
                prop_assert_eq!(stack.product().get(r, h), want);
            }
        }
    }

    #[test]
    fn zhat_output_is_feasible(z in prop::collection::vec(0.0f64..=1.0, 1..7), noise in prop::collection::vec(-1.0f64..=1.0, 64)) {
        let eps = 0.03;
        let answers: Vec<f64> = exact_answers(&z).iter().zip(&noise).map(|(a, u)| a + eps * u).collect();
        let zhat = zhat_recover(&answers, z.len(), eps).unwrap();
        prop_assert!(max_violation(&zhat, &answers) <= eps + 1e-9);
        let dist: f64 = zhat.iter().zip(&z).map(|(a, b)| (a - b).abs()).sum::<f64>() / z.len() as f64;
        prop_assert!(dist <= 4.0 * eps + 1e-9);
    }

    #[test]
    fn bruteforce_is_l1_nearest(seed in any::<u64>(), counts in prop::collection::vec(-1.0f64..4.0, 3)) {
        let a: BitMatrix = gen_random_factors(1, 3, 4, seed).remove(0);
        let out = bruteforce_decode(&a, &counts, 1.0).unwrap();
        for mask in 0u32..16 {
            let res: f64 = (0..3)
                .map(|r| {
                    let ay = (0..4).filter(|&h| mask >> h & 1 == 1 && a.get(r, h)).count() as f64;
                    (ay - counts[r]).abs()
                })
                .sum();
            prop_assert!(out.residual <= res + 1e-9);
        }
    }
}
