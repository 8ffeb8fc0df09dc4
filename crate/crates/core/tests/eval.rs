mod common;

use ndarray::Array2;
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::Rng;
use radiomap::eval::{make_split, rmse_macro, rmse_micro};
use radiomap::{RadioMap, Split};

/// Random prediction/target sets; some target pixels are padding.
fn map_set(seed: u64, maps: usize) -> (Vec<RadioMap>, Vec<RadioMap>) {
    let mut rng = common::rng(seed);
    let mut preds = vec![];
    let mut targets = vec![];
    for _ in 0..maps {
        let (h, w) = (rng.gen_range(1..12), rng.gen_range(1..12));
        let t = Array2::from_shape_simple_fn((h, w), || if rng.gen_bool(0.1) { -1.0 } else { rng.gen_range(0.0..160.0) });
        let mut t = t;
        t[[0, 0]] = rng.gen_range(0.0..160.0);
        let p = Array2::from_shape_simple_fn((h, w), || rng.gen_range(0.0..160.0));
        preds.push(RadioMap::new(p).unwrap());
        targets.push(RadioMap::new(t).unwrap());
    }
    (preds, targets)
}

fn values(maps: &[RadioMap]) -> Vec<Array2<f64>> {
    maps.iter().map(|m| m.values().clone()).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn metrics_match_naive_reference(seed in any::<u64>(), maps in 1..8usize) {
        let (p, t) = map_set(seed, maps);
        let micro = rmse_micro(&p, &t, None).unwrap();
        let macro_ = rmse_macro(&p, &t, None).unwrap();
        prop_assert!((micro - common::naive_micro(&values(&p), &values(&t))).abs() < 1e-9);
        prop_assert!((macro_ - common::naive_macro(&values(&p), &values(&t))).abs() < 1e-9);
    }

    #[test]
    fn metrics_ignore_pixel_order(seed in any::<u64>(), maps in 1..6usize) {
        let (p, t) = map_set(seed, maps);
        let mut rng = common::rng(seed ^ 1);
        let (mut pp, mut tt) = (vec![], vec![]);
        for (a, b) in p.iter().zip(&t) {
            let mut idx: Vec<usize> = (0..a.values().len()).collect();
            idx.shuffle(&mut rng);
            let pick = |m: &RadioMap| {
                let flat: Vec<f64> = m.values().iter().cloned().collect();
                RadioMap::new(Array2::from_shape_fn(m.dim(), |(r, c)| flat[idx[r * m.dim().1 + c]])).unwrap()
            };
            pp.push(pick(a));
            tt.push(pick(b));
        }
        let close = |x: f64, y: f64| (x - y).abs() <= 1e-12 * x.max(1.0);
        prop_assert!(close(rmse_micro(&p, &t, None).unwrap(), rmse_micro(&pp, &tt, None).unwrap()));
        prop_assert!(close(rmse_macro(&p, &t, None).unwrap(), rmse_macro(&pp, &tt, None).unwrap()));
    }

    #[test]
    fn zero_iff_equal_on_scored_pixels(seed in any::<u64>(), maps in 1..6usize) {
        let (p, t) = map_set(seed, maps);
        prop_assert!(rmse_micro(&p, &t, None).unwrap() > 0.0);
        // copy targets, but leave padded pixels arbitrary
        let same: Vec<RadioMap> = p.iter().zip(&t)
            .map(|(a, b)| RadioMap::new(ndarray::Zip::from(a.values()).and(b.values()).map_collect(|&x, &y| if y == -1.0 { x } else { y })).unwrap())
            .collect();
        prop_assert_eq!(rmse_micro(&same, &t, None).unwrap(), 0.0);
        prop_assert_eq!(rmse_macro(&same, &t, None).unwrap(), 0.0);
    }

    #[test]
    fn micro_equals_macro_for_uniform_maps(n in 1..6usize, maps in 1..6usize, err in 0.0..50.0f64) {
        let p: Vec<RadioMap> = (0..maps).map(|_| RadioMap::new(Array2::from_elem((n, n), 10.0 + err)).unwrap()).collect();
        let t: Vec<RadioMap> = (0..maps).map(|_| RadioMap::new(Array2::from_elem((n, n), 10.0)).unwrap()).collect();
        let micro = rmse_micro(&p, &t, None).unwrap();
        let macro_ = rmse_macro(&p, &t, None).unwrap();
        prop_assert!((micro - macro_).abs() < 1e-12);
    }
}

#[test]
fn splits_are_disjoint_on_separated_axes() {
    for task in 1..=3 {
        let s = make_split(task).unwrap();
        let [tr, va, te] = [Split::Train, Split::Val, Split::Test].map(|x| s.sets(x).clone());
        for (a, b) in [(&tr, &va), (&tr, &te), (&va, &te)] {
            assert!(a.buildings.iter().all(|x| !b.buildings.contains(x)));
            if task >= 2 && std::ptr::eq(a, &tr) {
                assert!(a.freqs_mhz.iter().all(|x| !b.freqs_mhz.contains(x)));
            }
            if task == 3 {
                assert!(a.antennas.iter().all(|x| !b.antennas.contains(x)));
            }
        }
    }
}
