mod common;

use ndarray::{s, Array2};
use proptest::prelude::*;
use radiomap::baseline::{predict, BaselineConfig};
use radiomap::features::{distance_channel, CellWalk};
use radiomap::{BuildingGrid, DistanceMode, TxConfig};

fn rot_plane(p: &Array2<f64>) -> Array2<f64> {
    p.t().slice(s![..;-1, ..]).to_owned()
}

fn scene(max: usize) -> impl Strategy<Value = (BuildingGrid, TxConfig)> {
    (2..max, 2..max, any::<u64>(), 0.0..0.35f64).prop_flat_map(|(h, w, seed, p)| {
        (0..h, 0..w, 100.0..6000.0f64).prop_map(move |(tr, tc, f)| {
            let mut rng = common::rng(seed);
            (common::random_grid(&mut rng, h, w, p), TxConfig::new(tr as f64, tc as f64, f))
        })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn all_air_loss_grows_with_distance(h in 2..40usize, w in 2..40usize, seed in any::<u64>()) {
        let mut rng = common::rng(seed);
        let grid = BuildingGrid::air(h, w);
        let tx = common::random_tx(&mut rng, h, w);
        let pl = predict(&grid, &tx, &BaselineConfig::default()).unwrap();
        let d = distance_channel(&grid, &tx, DistanceMode::Slant).unwrap();
        let mut pairs: Vec<(f64, f64)> = d.iter().cloned().zip(pl.values().iter().cloned()).collect();
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        for win in pairs.windows(2) {
            prop_assert!(win[1].1 >= win[0].1);
        }
    }

    #[test]
    fn output_within_clamp((grid, tx) in scene(24), lo in -50.0..40.0f64, span in 1.0..120.0f64) {
        let cfg = BaselineConfig { clamp_min: lo, clamp_max: lo + span, ..Default::default() };
        let pl = predict(&grid, &tx, &cfg).unwrap();
        prop_assert!(pl.values().iter().all(|&v| v >= lo && v <= lo + span));
    }

    #[test]
    fn rotation_permutes_prediction((grid, tx) in scene(24)) {
        let rg = grid.map_planes(rot_plane);
        let rtx = TxConfig { row: (grid.width() - 1) as f64 - tx.col, col: tx.row, ..tx.clone() };
        let cfg = BaselineConfig::default();
        let a = predict(&grid, &tx, &cfg).unwrap();
        let b = predict(&rg, &rtx, &cfg).unwrap();
        prop_assert_eq!(&rot_plane(a.values()), b.values());
    }

    /// Adding a separate wall (its successor on the path is air) never lowers
    /// the loss at the far end.
    #[test]
    fn added_wall_never_lowers_loss(
        (grid, tx) in scene(20),
        pick in any::<prop::sample::Index>(),
        target in any::<prop::sample::Index>(),
        trans in 0.0..20.0f64,
    ) {
        let (h, w) = grid.dim();
        let p = { let i = target.index(h * w); (i / w, i % w) };
        let walk: Vec<(usize, usize)> = CellWalk::new((tx.row as i64, tx.col as i64), (p.0 as i64, p.1 as i64))
            .map(|(r, c)| (r as usize, c as usize))
            .collect();
        let k = pick.index(walk.len());
        let cell = walk[k];
        prop_assume!(!grid.is_wall(cell.0, cell.1));
        prop_assume!(walk.get(k + 1).is_none_or(|&(r, c)| !grid.is_wall(r, c)));
        let cfg = BaselineConfig::default();
        let before = predict(&grid, &tx, &cfg).unwrap().values()[p];
        let mut more = grid.clone();
        more.set_cell(cell.0, cell.1, 1.0, trans).unwrap();
        let after = predict(&more, &tx, &cfg).unwrap().values()[p];
        prop_assert!(after >= before);
    }
}

#[test]
fn bridging_walls_can_lower_loss() {
    // entering a thin low-loss cell in front of a lossy wall replaces that
    // wall's entry
    let mut g = BuildingGrid::air(1, 8);
    g.set_cell(0, 4, 1.0, 15.0).unwrap();
    let tx = TxConfig::new(0.0, 0.0, 868.0);
    let cfg = BaselineConfig::default();
    let before = predict(&g, &tx, &cfg).unwrap().values()[[0, 7]];
    g.set_cell(0, 3, 1.0, 1.0).unwrap();
    let after = predict(&g, &tx, &cfg).unwrap().values()[[0, 7]];
    assert!((before - after - 14.0).abs() < 1e-9);
}
