use proptest::prelude::*;
use tetherplan_core::viewpoint::{
    cut_inconsistent, inconsistency, pairwise_dissimilarities, performance_score, standardized_distance,
    upgma_cluster, upgma_linkage, Affordance, SamplePoint, TrialRecord,
};

fn point() -> impl Strategy<Value = [f64; 4]> {
    prop::array::uniform4(-10.0f64..10.0)
}

fn samples(n: std::ops::Range<usize>) -> impl Strategy<Value = Vec<SamplePoint>> {
    prop::collection::vec((0.0f64..1.5, -3.1f64..3.1, -1.0f64..3.0), n).prop_map(|v| {
        v.into_iter().map(|(theta, phi, value)| SamplePoint { r: 1.5, theta, phi, value }).collect()
    })
}

proptest! {
    #[test]
    fn standardized_distance_is_a_metric(a in point(), b in point(), c in point(), q in prop::array::uniform4(0.1f64..5.0)) {
        let d = |x: &[f64; 4], y: &[f64; 4]| standardized_distance(x, y, &q).unwrap();
        prop_assert_eq!(d(&a, &a), 0.0);
        prop_assert_eq!(d(&a, &b), d(&b, &a));
        prop_assert!(d(&a, &c) <= d(&a, &b) + d(&b, &c) + 1e-12);
    }

    #[test]
    fn cluster_output_is_a_partition_and_refines(s in samples(3..25), t in 0.2f64..1.2) {
        let coarse = upgma_cluster(&s, t + 0.3).unwrap();
        let fine = upgma_cluster(&s, t).unwrap();
        for ms in [&coarse, &fine] {
            let mut all: Vec<usize> = ms.iter().flat_map(|m| m.members.clone()).collect();
            all.sort();
            prop_assert_eq!(all, (0..s.len()).collect::<Vec<_>>());
            prop_assert!(ms.windows(2).all(|w| w[0].value <= w[1].value));
            for m in ms.iter() {
                let mean = m.members.iter().map(|&i| s[i].value).sum::<f64>() / m.members.len() as f64;
                prop_assert_eq!(m.value, mean);
            }
        }
        prop_assert!(fine.len() >= coarse.len());
    }

    #[test]
    fn cut_is_monotone_in_threshold(s in samples(3..30)) {
        let l = upgma_linkage(&pairwise_dissimilarities(&s).unwrap()).unwrap();
        let coef: Vec<f64> = inconsistency(&l, 2).iter().map(|c| c.coefficient).collect();
        let count = |t: f64| cut_inconsistent(&l, &coef, t).into_iter().max().unwrap() + 1;
        let mut prev = usize::MAX;
        for t in [0.0, 0.3, 0.6, 0.9, 1.1, 1.15, 1.2, 2.0] {
            let c = count(t);
            prop_assert!(c <= prev);
            prev = c;
        }
        prop_assert_eq!(count(2.0), 1);
    }

    #[test]
    fn score_ignores_affine_time_units(
        times in prop::collection::vec(1.0f64..100.0, 4..12),
        a in 0.01f64..100.0,
        b in -50.0f64..50.0,
    ) {
        let recs: Vec<TrialRecord> = times
            .iter()
            .enumerate()
            .map(|(i, &t)| TrialRecord { subject: "s".into(), affordance: Affordance::Passability, viewpoint: i, time_s: t, errors: (i % 3) as u32 })
            .collect();
        prop_assume!(times.iter().any(|&t| t != times[0]));
        let base = performance_score(&recs).unwrap();
        let shift = b.max(-0.9 * a * times.iter().cloned().fold(f64::INFINITY, f64::min));
        let scaled: Vec<TrialRecord> = recs.iter().map(|r| TrialRecord { time_s: a * r.time_s + shift, ..r.clone() }).collect();
        let moved = performance_score(&scaled).unwrap();
        for (x, y) in base.iter().zip(&moved) {
            prop_assert!((x - y).abs() <= 1e-9, "{} vs {}", x, y);
        }
    }
}
