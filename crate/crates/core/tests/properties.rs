//! Property tests for the generator and metric invariants.

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use wyckoff::neural_core::sigmoid;
use wyckoff::pattern_synth::{filler, up_filler};
use wyckoff::train_eval::roc;
use wyckoff::wyckoff_rules::tr_valid;

proptest! {
    #[test]
    fn tr_valid_iff_total_order(p in prop::array::uniform4(0.0f64..100.0)) {
        let order = p[1] < p[3] && p[3] < p[2] && p[2] < p[0];
        prop_assert_eq!(tr_valid(&p), order);
    }

    #[test]
    fn filler_preserves_anchors_and_brackets_inserts(
        anchors in prop::collection::vec(0.0f64..100.0, 2..8),
        fillers in 0usize..5,
        seed in any::<u64>(),
    ) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let out = filler(&mut rng, &anchors, fillers).unwrap();
        prop_assert_eq!(out.len(), (anchors.len() - 1) * (1 + fillers) + 1);
        for (gap, pair) in anchors.windows(2).enumerate() {
            let base = gap * (1 + fillers);
            prop_assert_eq!(out[base], pair[0]);
            let (lo, hi) = (pair[0].min(pair[1]), pair[0].max(pair[1]));
            for k in 1..=fillers {
                prop_assert!(out[base + k] >= lo && out[base + k] <= hi);
            }
        }
        prop_assert_eq!(*out.last().unwrap(), *anchors.last().unwrap());
    }

    #[test]
    fn up_filler_length_and_dropped_tail(
        values in prop::collection::vec(0.0f64..100.0, 2..8),
        seed in any::<u64>(),
    ) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let out = up_filler(&mut rng, &values, 100.0, 1).unwrap();
        prop_assert_eq!(out.len(), 2 * (values.len() - 1));
        for (i, &v) in values[..values.len() - 1].iter().enumerate() {
            prop_assert_eq!(out[2 * i], v);
        }
    }

    #[test]
    fn sigmoid_complements_sum_to_one(x in -30.0f64..30.0) {
        prop_assert!((sigmoid(x) + sigmoid(-x) - 1.0).abs() <= 1e-15);
    }

    #[test]
    fn roc_curves_are_monotone_with_unit_range_auc(
        scored in prop::collection::vec((0.0f64..1.0, prop::bool::ANY), 10..200),
    ) {
        let scores: Vec<f64> = scored.iter().map(|(s, _)| *s).collect();
        let labels: Vec<u8> = scored.iter().map(|(_, l)| u8::from(*l)).collect();
        prop_assume!(labels.iter().any(|&y| y == 1) && labels.iter().any(|&y| y == 0));
        let (points, auc) = roc(&scores, &labels).unwrap();
        prop_assert!((0.0..=1.0).contains(&auc));
        prop_assert_eq!(points.first().unwrap().fpr, 0.0);
        prop_assert_eq!(points.first().unwrap().tpr, 0.0);
        prop_assert_eq!(points.last().unwrap().fpr, 1.0);
        prop_assert_eq!(points.last().unwrap().tpr, 1.0);
        for pair in points.windows(2) {
            prop_assert!(pair[1].fpr >= pair[0].fpr);
            prop_assert!(pair[1].tpr >= pair[0].tpr);
        }
    }
}
