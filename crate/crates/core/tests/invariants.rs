mod common;

use covlab_core::covering::{exact_covering_1d, fractal_covering_dp};
use covlab_core::geometry::{NormSpec, PointCloud, SampledSet};
use covlab_core::polarization::brute_force_polarization;
use covlab_core::sets::{normalize_intervals, Contraction, IfsModel, Interval};
use proptest::prelude::*;

fn intervals() -> impl Strategy<Value = Vec<Interval>> {
    prop::collection::vec((0.01f64..2.0, 0.0f64..1.0), 1..6).prop_map(|v| {
        let mut at = 0.0;
        v.into_iter()
            .map(|(gap, len)| {
                let iv = Interval::new(at + gap, at + gap + len).unwrap();
                at = iv.hi;
                iv
            })
            .collect()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn finite_sets_match_the_half_gap_oracle(mut xs in prop::collection::vec(-5.0f64..5.0, 1..25), n in 1usize..8) {
        xs.sort_by(f64::total_cmp);
        xs.dedup();
        let ivs = normalize_intervals(xs.iter().map(|&x| Interval::point(x)).collect()).unwrap();
        let (r, w) = exact_covering_1d(&ivs, n, false).unwrap();
        let want = common::brute_covering_1d(&xs, n);
        prop_assert!((r - want).abs() <= 1e-12 * (1.0 + want), "{r} vs {want}");
        prop_assert!(w.len() <= n);
    }

    #[test]
    fn covering_radius_is_monotone_and_constrained_dominates(ivs in intervals(), n in 1usize..40) {
        let (r1, _) = exact_covering_1d(&ivs, n, false).unwrap();
        let (r2, _) = exact_covering_1d(&ivs, n + 1, false).unwrap();
        let (c1, _) = exact_covering_1d(&ivs, n, true).unwrap();
        prop_assert!(r2 <= r1 + 1e-12);
        prop_assert!(c1 >= r1 - 1e-12);
        prop_assert!(c1 <= 2.0 * r1 + 1e-12);
    }

    #[test]
    fn covering_radius_scales(ivs in intervals(), n in 1usize..20, t in 0.1f64..10.0) {
        let scaled: Vec<Interval> = ivs.iter().map(|i| Interval::new(t * i.lo, t * i.hi).unwrap()).collect();
        let (r, _) = exact_covering_1d(&ivs, n, false).unwrap();
        let (rt, _) = exact_covering_1d(&scaled, n, false).unwrap();
        prop_assert!((rt - t * r).abs() <= 1e-9 * (1.0 + t * r));
    }

    #[test]
    fn polarization_scales_with_power(ys in prop::collection::vec(0.0f64..1.0, 3..10), n in 1usize..4, t in 0.25f64..4.0, s in 1.5f64..4.0) {
        let norm = NormSpec::euclidean(1);
        let y = SampledSet::from_points(PointCloud::from_scalars(&ys), 1.0).unwrap();
        let yt = SampledSet::from_points(PointCloud::from_scalars(&ys).scaled(t), 1.0).unwrap();
        let (v, _) = brute_force_polarization(&y.points, &y, n, s, &norm).unwrap();
        let (vt, _) = brute_force_polarization(&yt.points, &yt, n, s, &norm).unwrap();
        if v.is_finite() {
            prop_assert!((vt - t.powf(-s) * v).abs() <= 1e-9 * vt.abs().max(1.0));
        } else {
            prop_assert!(vt.is_infinite());
        }
    }

    #[test]
    fn fractal_table_is_nonincreasing(num in 1u64..4, den in 4u64..9) {
        prop_assume!(3 * num < 2 * den);
        let ifs = IfsModel::two_map_interval(Contraction::rational(1, 3).unwrap(), Contraction::rational(num, den).unwrap()).unwrap();
        let table = fractal_covering_dp(&ifs, 200, false).unwrap();
        for n in 1..200 {
            prop_assert!(table.radius(n + 1).unwrap() <= table.radius(n).unwrap() * (1.0 + 1e-12));
        }
    }
}

#[test]
fn oracles_on_small_cases() {
    let pts = [0.0, 0.1, 0.5, 0.55, 1.0];
    assert_eq!(common::brute_covering_1d(&pts, 5), 0.0);
    assert!((common::brute_covering_1d(&pts, 1) - 0.5).abs() < 1e-15);
    assert!((common::naive_polarization(&[0.5], &[0.0, 1.0], 1, 2.0) - 4.0).abs() < 1e-12);
    let (c, r, hex) = common::hex_covering(64);
    assert!(hex.len() <= 64);
    assert!((c - 8.0 * r).abs() < 1e-12);
}
