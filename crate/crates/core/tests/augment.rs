mod common;

use ndarray::Array2;
use proptest::prelude::*;
use radiomap::augment::{
    apply_pipeline, draw, flip, mixup, resize_db_domain, rot90, AugmentConfig, MIN_CROP_SIDE,
};
use radiomap::features::{write_stack, ChannelKind};
use radiomap::gridfile;
use radiomap::{FeatureStack, RadioMap};

/// Stack whose channels are `tag`, `2·tag`, `3·tag` with unique tags; the
/// target is `tag + 0.5`.
fn tagged(n: usize) -> (FeatureStack, RadioMap) {
    let tag = Array2::from_shape_fn((n, n), |(r, c)| (r * n + c) as f64);
    let kinds = ChannelKind::for_task(1).unwrap();
    let stack = FeatureStack::new(kinds.into_iter().zip(1..).map(|(k, m)| (k, &tag * m as f64)).collect()).unwrap();
    (stack, RadioMap::new(tag + 0.5).unwrap())
}

fn assert_coherent(stack: &FeatureStack, target: &RadioMap) {
    let base = &stack.channels()[0].1;
    for (m, (_, p)) in (1..).zip(stack.channels()) {
        assert_eq!(p, &(base * m as f64));
    }
    assert_eq!(target.values(), &(base + 0.5));
}

fn sorted(values: impl Iterator<Item = f64>) -> Vec<f64> {
    let mut v: Vec<f64> = values.collect();
    v.sort_by(f64::total_cmp);
    v
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn geometric_maps_act_alike_and_are_lossless(n in 1..12usize, k in 0..4u8, h in any::<bool>(), v in any::<bool>()) {
        let (s, t) = tagged(n);
        let (fs, ft) = flip(&s, &t, h, v).unwrap();
        let (rs, rt) = rot90(&fs, &ft, k).unwrap();
        assert_coherent(&rs, &rt);
        prop_assert_eq!(sorted(rt.values().iter().cloned()), sorted(t.values().iter().cloned()));
        let (ff, fft) = flip(&fs, &ft, h, v).unwrap();
        prop_assert_eq!((ff, fft), (s.clone(), t.clone()));
        let mut cur = (s.clone(), t.clone());
        for _ in 0..4 {
            cur = rot90(&cur.0, &cur.1, 1).unwrap();
        }
        prop_assert_eq!(cur, (s, t));
    }

    #[test]
    fn mixup_stays_in_envelope(seed in any::<u64>(), lambda in 0.0..=1.0f64) {
        let mut rng = common::rng(seed);
        let (a, b) = (common::random_stack(&mut rng, 2, 6), common::random_stack(&mut rng, 2, 6));
        let ta = RadioMap::new(a.channels()[2].1.mapv(|v| 160.0 * v)).unwrap();
        let tb = RadioMap::new(b.channels()[2].1.mapv(|v| 160.0 * v)).unwrap();
        let (m, tm) = mixup((&a, &ta), (&b, &tb), lambda).unwrap();
        let pairs = m.channels().iter().zip(a.channels()).zip(b.channels())
            .map(|((x, y), z)| (&x.1, &y.1, &z.1))
            .chain(std::iter::once((tm.values(), ta.values(), tb.values())));
        for (mv, av, bv) in pairs {
            for ((x, y), z) in mv.iter().zip(av).zip(bv) {
                prop_assert!(*x >= y.min(*z) && *x <= y.max(*z));
            }
        }
    }

    #[test]
    fn db_resize_respects_envelope(seed in any::<u64>(), sh in 1..10usize, sw in 1..10usize, h in 1..25usize, w in 1..25usize) {
        let mut rng = common::rng(seed);
        use rand::Rng;
        let map = RadioMap::new(Array2::from_shape_simple_fn((sh, sw), || rng.gen_range(0.0..160.0))).unwrap();
        let out = resize_db_domain(&map, (h, w)).unwrap();
        let lo = map.values().iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = map.values().iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        prop_assert!(out.values().iter().all(|&v| v >= lo && v <= hi));
    }

    #[test]
    fn crop_side_in_range(seed in any::<u64>()) {
        let d = draw(&AugmentConfig { seed, crop_prob: 1.0, ..Default::default() });
        let c = d.crop.unwrap();
        prop_assert!((MIN_CROP_SIDE..=518).contains(&c.side));
        prop_assert!(c.row + c.side <= 518 && c.col + c.side <= 518);
    }
}

#[test]
fn pipeline_is_reproducible_byte_for_byte() {
    let mut rng = common::rng(3);
    let a = common::random_stack(&mut rng, 1, 518);
    let b = common::random_stack(&mut rng, 1, 518);
    let ta = RadioMap::new(a.channels()[2].1.mapv(|v| 100.0 * v)).unwrap();
    let tb = RadioMap::new(b.channels()[2].1.mapv(|v| 100.0 * v)).unwrap();
    let dir = tempfile::tempdir().unwrap();
    for (i, seed) in [11u64, 12, 13].into_iter().enumerate() {
        let cfg = AugmentConfig { seed, arbitrary_rotation: i == 1, db_domain_resize: i == 2, ..Default::default() };
        let run = |name: &str| {
            let (s, t, d) = apply_pipeline(&a, &ta, Some((&b, &tb)), &cfg).unwrap();
            let path = dir.path().join(name);
            write_stack(&s, &path).unwrap();
            (std::fs::read(&path).unwrap(), gridfile::encode(&t.to_raster()).unwrap(), d)
        };
        assert_eq!(run("x.rmg"), run("y.rmg"));
    }
}

#[test]
fn pipeline_transforms_channels_and_target_alike() {
    let (s, t) = tagged(518);
    for seed in 0..6 {
        // without crop-resize and mixup every step is an exact index map
        let cfg = AugmentConfig { seed, mixup_prob: 0.0, crop_prob: 0.0, ..Default::default() };
        let (out, target, _) = apply_pipeline(&s, &t, None, &cfg).unwrap();
        assert_coherent(&out, &target);
    }
}
