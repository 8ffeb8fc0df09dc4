use radiomap::features::{build_stack, preprocess, read_stack, write_stack, ChannelKind, DistanceMode};
use radiomap::gridfile;
use radiomap::synth::{bundled_building, synthetic_building, BUNDLED_BUILDING_RMG, BUNDLED_SEED, BUNDLED_SHAPE};
use radiomap::TxConfig;
use sha2::{Digest, Sha256};

const FEATURIZE_SHA256: &str = "95a970d0920f52a17681daa078e69885c1476987eff1d83196713840a9e0094f";

fn hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

#[test]
fn generator_reproduces_bundled_building() {
    let (h, w) = BUNDLED_SHAPE;
    let g = synthetic_building(h, w, BUNDLED_SEED);
    assert_eq!(gridfile::encode(&g.to_raster()).unwrap(), BUNDLED_BUILDING_RMG);
    assert_eq!(bundled_building(), g);
}

#[test]
fn featurize_checksum_is_pinned() {
    let grid = bundled_building();
    let tx = TxConfig::new(48.0, 64.0, 868.0);
    let stack = build_stack(&grid, &tx, &ChannelKind::for_task(1).unwrap(), DistanceMode::Planar).unwrap();
    let (pre, _) = preprocess(&stack, None).unwrap();
    assert_eq!(pre.dim(), Some((518, 518)));
    assert_eq!(pre.len(), 3);

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("stack.rmg");
    write_stack(&pre, &path).unwrap();
    let bytes = std::fs::read(&path).unwrap();
    assert_eq!(bytes.len(), 16 + 3 * 518 * 518 * 4);
    assert_eq!(hex(&bytes), FEATURIZE_SHA256);

    // re-read and re-write gives the same bytes
    let back = read_stack(&path).unwrap();
    let again = dir.path().join("again.rmg");
    write_stack(&back, &again).unwrap();
    assert_eq!(std::fs::read(&again).unwrap(), bytes);
}
