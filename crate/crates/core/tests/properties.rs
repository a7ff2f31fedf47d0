use proptest::prelude::*;

use colorlearn::evaluation::{delta_e2000, perturb, weight_perturbation};
use colorlearn::imagecore::GrayImage;
use colorlearn::matching::{ChromaSeeds, Feature, Seed, WeightVector, SIMPLEX_TOLERANCE};
use colorlearn::spreader::{spread, SpreadParams};

fn lab() -> impl Strategy<Value = [f64; 3]> {
    (0.0..100.0f64, -100.0..100.0f64, -100.0..100.0f64).prop_map(|(l, a, b)| [l, a, b])
}

fn simplex() -> impl Strategy<Value = WeightVector> {
    prop::array::uniform4(0.001..1.0f64).prop_map(|w| WeightVector::normalized(w).unwrap())
}

fn feature() -> impl Strategy<Value = Feature> {
    prop::sample::select(Feature::ALL.to_vec())
}

fn on_simplex(w: &WeightVector) -> bool {
    let a = w.as_array();
    (a.iter().sum::<f64>() - 1.0).abs() <= SIMPLEX_TOLERANCE && a.iter().all(|&v| v >= 0.0)
}

/// A small image and 1..6 distinct seeds on it.
fn spread_case() -> impl Strategy<Value = (GrayImage, Vec<((usize, usize), [f64; 2])>)> {
    (6usize..14, 6usize..14).prop_flat_map(|(w, h)| {
        (
            prop::collection::vec(0.0..100.0f64, w * h),
            prop::collection::btree_map((0..w, 0..h), (-80.0..80.0f64, -80.0..80.0f64), 1..6),
        )
            .prop_map(move |(l, seeds)| {
                let gray = GrayImage::new(w, h, l).unwrap();
                (gray, seeds.into_iter().map(|(p, (a, b))| (p, [a, b])).collect())
            })
    })
}

fn to_seeds(points: &[((usize, usize), [f64; 2])]) -> ChromaSeeds {
    ChromaSeeds {
        seeds: points
            .iter()
            .enumerate()
            .map(|(k, &(position, chroma))| Seed { position, chroma, matched: k })
            .collect(),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn delta_e_is_symmetric_and_nonnegative(p in lab(), q in lab()) {
        let d = delta_e2000(p, q);
        prop_assert!(d >= 0.0);
        prop_assert!((d - delta_e2000(q, p)).abs() <= 1e-9);
        prop_assert_eq!(delta_e2000(p, p), 0.0);
    }

    #[test]
    fn perturbation_stays_on_simplex(w in simplex(), f in feature(), v in 0.0..=1.0f64) {
        let p = perturb(&w, f, v).unwrap();
        prop_assert!(on_simplex(&p));
        prop_assert!((p.get(f) - v).abs() <= 1e-12);
        for (_, q) in weight_perturbation(&w, f) {
            prop_assert!(on_simplex(&q));
        }
    }

    #[test]
    fn spread_obeys_maximum_principle((gray, seeds) in spread_case()) {
        let out = spread(&gray, &to_seeds(&seeds), &SpreadParams::default()).unwrap();
        for (c, chan) in [out.a(), out.b()].into_iter().enumerate() {
            let lo = seeds.iter().map(|s| s.1[c]).fold(f64::INFINITY, f64::min);
            let hi = seeds.iter().map(|s| s.1[c]).fold(f64::NEG_INFINITY, f64::max);
            prop_assert!(chan.iter().all(|&v| v >= lo - 1e-7 && v <= hi + 1e-7));
        }
        let w = gray.width();
        for (p, chroma) in &seeds {
            let i = p.1 * w + p.0;
            prop_assert_eq!([out.a()[i], out.b()[i]], *chroma);
        }
    }

    #[test]
    fn spread_ignores_seed_order((gray, seeds) in spread_case()) {
        let params = SpreadParams::default();
        let forward = spread(&gray, &to_seeds(&seeds), &params).unwrap();
        let mut rev = seeds.clone();
        rev.reverse();
        let backward = spread(&gray, &to_seeds(&rev), &params).unwrap();
        for i in 0..gray.len() {
            prop_assert!((forward.a()[i] - backward.a()[i]).abs() <= 1e-7);
            prop_assert!((forward.b()[i] - backward.b()[i]).abs() <= 1e-7);
        }
    }
}
