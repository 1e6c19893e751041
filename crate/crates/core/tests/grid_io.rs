use std::fs;

use mrisr::error::Error;
use mrisr::grid::{normalize_by_std, RealGrid};
use mrisr::io::{load_grid, save_grid, save_png_preview};
use mrisr::phantom::{generate_phantoms, PhantomConfig};
use proptest::prelude::*;

fn grd_bytes(h: u32, w: u32, values: &[f32]) -> Vec<u8> {
    let mut b = b"GRD1".to_vec();
    b.extend_from_slice(&h.to_le_bytes());
    b.extend_from_slice(&w.to_le_bytes());
    for v in values {
        b.extend_from_slice(&v.to_le_bytes());
    }
    b
}

#[test]
fn loads_hand_written_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("g.grd");
    fs::write(&path, grd_bytes(2, 2, &[0.0, 1.0, 2.0, 3.0])).unwrap();
    let g = load_grid(&path).unwrap();
    assert_eq!(g.dims(), (2, 2));
    assert_eq!(g.data(), &[0.0, 1.0, 2.0, 3.0]);
}

#[test]
fn writes_documented_layout() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("z.grd");
    save_grid(&RealGrid::zeros(4, 4), &path).unwrap();
    assert_eq!(fs::read(&path).unwrap(), grd_bytes(4, 4, &[0.0; 16]));

    save_grid(&RealGrid::filled(1, 1, 0.5), &path).unwrap();
    let bytes = fs::read(&path).unwrap();
    assert_eq!(bytes.len(), 16);
    assert_eq!(&bytes[4..12], &[1, 0, 0, 0, 1, 0, 0, 0]);
    assert_eq!(f32::from_le_bytes(bytes[12..16].try_into().unwrap()), 0.5);
}

#[test]
fn load_errors_are_distinct() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("nope.grd");
    assert!(matches!(load_grid(&missing), Err(Error::MissingFile(_))));

    let bad = dir.path().join("bad.grd");
    let mut bytes = grd_bytes(1, 1, &[1.0]);
    bytes[..4].copy_from_slice(b"XXXX");
    fs::write(&bad, &bytes).unwrap();
    assert!(matches!(load_grid(&bad), Err(Error::BadMagic { .. })));

    let short = dir.path().join("short.grd");
    fs::write(&short, &grd_bytes(2, 2, &[1.0, 2.0, 3.0, 4.0])[..20]).unwrap();
    assert!(matches!(load_grid(&short), Err(Error::Truncated { .. })));

    let nan = dir.path().join("nan.grd");
    fs::write(&nan, grd_bytes(1, 2, &[1.0, f32::NAN])).unwrap();
    assert!(matches!(load_grid(&nan), Err(Error::NonFinite { index: 1 })));
}

fn decode_png(path: &std::path::Path) -> (u32, u32, Vec<u8>) {
    let decoder = png::Decoder::new(std::io::BufReader::new(fs::File::open(path).unwrap()));
    let mut reader = decoder.read_info().unwrap();
    let mut buf = vec![0; reader.output_buffer_size().unwrap()];
    let info = reader.next_frame(&mut buf).unwrap();
    assert_eq!(info.color_type, png::ColorType::Grayscale);
    assert_eq!(info.bit_depth, png::BitDepth::Eight);
    buf.truncate(info.buffer_size());
    (info.height, info.width, buf)
}

#[test]
fn png_previews() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("p.png");

    let ramp = [0.0f32, 1.0, 2.0, 3.0];
    save_png_preview(&RealGrid::new(2, 2, ramp.to_vec()).unwrap(), &path).unwrap();
    let want: Vec<u8> = ramp.iter().map(|v| (255.0 * v / 3.0).round() as u8).collect();
    assert_eq!(decode_png(&path), (2, 2, want));

    save_png_preview(&RealGrid::new(1, 3, vec![0.0, 1.0, 0.0]).unwrap(), &path).unwrap();
    assert_eq!(decode_png(&path).2, vec![0, 255, 0]);

    save_png_preview(&RealGrid::filled(3, 2, 4.2), &path).unwrap();
    assert_eq!(decode_png(&path).2, vec![128; 6]);
}

#[test]
fn phantom_contract() {
    let cfg = PhantomConfig {
        count: 3,
        seed: 11,
        ..Default::default()
    };
    let a = generate_phantoms(&cfg).unwrap();
    assert_eq!(a, generate_phantoms(&cfg).unwrap());
    assert!(a.iter().flat_map(|g| g.data()).all(|&v| (0.0..=1.0).contains(&v)));
    assert_ne!(a, generate_phantoms(&PhantomConfig { seed: 12, ..cfg.clone() }).unwrap());

    for bad in [
        PhantomConfig { size: 15, ..cfg.clone() },
        PhantomConfig { count: 0, ..cfg.clone() },
    ] {
        assert!(matches!(generate_phantoms(&bad), Err(Error::Config(_))));
    }
}

#[test]
fn two_hundred_distinct_phantoms() {
    let set = generate_phantoms(&PhantomConfig::default()).unwrap();
    assert_eq!(set.len(), 200);
    for (i, a) in set.iter().enumerate() {
        assert_eq!(a.dims(), (64, 64));
        for b in &set[i + 1..] {
            assert_ne!(a, b);
        }
    }
}

fn grid_strategy() -> impl Strategy<Value = RealGrid> {
    (1usize..12, 1usize..12).prop_flat_map(|(h, w)| {
        prop::collection::vec(prop::num::f32::NORMAL | prop::num::f32::ZERO | prop::num::f32::SUBNORMAL, h * w)
            .prop_map(move |data| RealGrid::new(h, w, data).unwrap())
    })
}

proptest! {
    #[test]
    fn grd_roundtrip_is_bit_exact(g in grid_strategy()) {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("g.grd");
        save_grid(&g, &path).unwrap();
        let back = load_grid(&path).unwrap();
        prop_assert_eq!(back.dims(), g.dims());
        let bits = |x: &RealGrid| x.data().iter().map(|v| v.to_bits()).collect::<Vec<_>>();
        prop_assert_eq!(bits(&back), bits(&g));
    }

    #[test]
    fn normalized_std_is_one(data in prop::collection::vec(-100.0f32..100.0, 4..200)) {
        let g = RealGrid::new(1, data.len(), data).unwrap();
        prop_assume!(g.std() > 1e-3);
        let (n, scale) = normalize_by_std(&g).unwrap();
        prop_assert!((n.std() - 1.0).abs() < 1e-6);
        prop_assert!((scale - g.std()).abs() < 1e-12);
    }

    #[test]
    fn phantoms_are_pure(seed in any::<u64>()) {
        let cfg = PhantomConfig { count: 2, size: 16, seed, ..Default::default() };
        prop_assert_eq!(generate_phantoms(&cfg).unwrap(), generate_phantoms(&cfg).unwrap());
    }
}
