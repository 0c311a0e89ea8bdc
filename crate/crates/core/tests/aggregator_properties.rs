use poisonbench::aggregators::{cc_agg, faba_agg, mean_agg, trimean_agg, AggregatorKind, AggregatorSpec, CcStart};
use proptest::prelude::*;

fn messages(max_w: usize, dim: usize) -> impl Strategy<Value = Vec<Vec<f64>>> {
    prop::collection::vec(prop::collection::vec(-100.0..100.0f64, dim), 3..=max_w)
}

fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
    a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol * (1.0 + x.abs().max(y.abs())))
}

fn specs(w: usize) -> Vec<AggregatorSpec> {
    let r = w / 2 + 1;
    vec![
        AggregatorSpec::mean(w),
        AggregatorSpec::trimean(r),
        AggregatorSpec::faba(r),
        AggregatorSpec::cc(5.0, 3, CcStart::Zero),
    ]
}

proptest! {
    #[test]
    fn permutation_invariance(ms in messages(12, 3), rot in 0usize..12) {
        let mut shuffled = ms.clone();
        shuffled.rotate_left(rot % ms.len());
        shuffled.swap(0, ms.len() - 1);
        for spec in specs(ms.len()) {
            let a = spec.aggregate(&ms, None).unwrap();
            let b = spec.aggregate(&shuffled, None).unwrap();
            prop_assert_eq!(a, b, "{:?}", spec.kind);
        }
    }

    #[test]
    fn translation_equivariance(ms in messages(12, 2), shift in prop::collection::vec(-50.0..50.0f64, 2)) {
        let moved: Vec<Vec<f64>> = ms.iter().map(|m| vec![m[0] + shift[0], m[1] + shift[1]]).collect();
        for spec in specs(ms.len()).into_iter().filter(|s| s.kind != AggregatorKind::Cc) {
            let a = spec.aggregate(&ms, None).unwrap();
            let b = spec.aggregate(&moved, None).unwrap();
            let expected = [a[0] + shift[0], a[1] + shift[1]];
            prop_assert!(close(&b, &expected, 1e-9), "{:?}", spec.kind);
        }
        // CC is equivariant when its start point moves along
        let v0 = [1.0, -2.0];
        let a = cc_agg(&ms, 5.0, 2, &v0).unwrap();
        let b = cc_agg(&moved, 5.0, 2, &[v0[0] + shift[0], v0[1] + shift[1]]).unwrap();
        prop_assert!(close(&b, &[a[0] + shift[0], a[1] + shift[1]], 1e-9));
    }

    #[test]
    fn robust_rules_degenerate_to_mean(ms in messages(15, 4)) {
        let w = ms.len();
        let mean = mean_agg(&ms).unwrap();
        prop_assert_eq!(&trimean_agg(&ms, w).unwrap(), &mean);
        prop_assert_eq!(&faba_agg(&ms, w).unwrap(), &mean);
        prop_assert_eq!(&cc_agg(&ms, 1e12, 1, &[0.0; 4]).unwrap(), &mean);
    }

    #[test]
    fn output_inside_coordinate_hull(ms in messages(12, 3)) {
        let w = ms.len();
        for spec in specs(w) {
            if spec.kind == AggregatorKind::Cc {
                continue;
            }
            let out = spec.aggregate(&ms, None).unwrap();
            for (j, v) in out.iter().enumerate() {
                let lo = ms.iter().map(|m| m[j]).fold(f64::INFINITY, f64::min);
                let hi = ms.iter().map(|m| m[j]).fold(f64::NEG_INFINITY, f64::max);
                prop_assert!(*v >= lo - 1e-9 && *v <= hi + 1e-9);
            }
        }
    }
}

#[test]
fn cc_from_previous_uses_the_given_point() {
    let ms = vec![vec![4.0, 0.0], vec![0.0, 0.0]];
    let spec = AggregatorSpec::cc(1.0, 1, CcStart::Previous);
    assert_eq!(spec.aggregate(&ms, None).unwrap(), vec![0.5, 0.0]);
    // from [2, 0] both corrections are clipped to unit length and cancel
    assert_eq!(spec.aggregate(&ms, Some(&[2.0, 0.0])).unwrap(), vec![2.0, 0.0]);
}
