use mclift::container::{read_container, write_container};
use mclift::fixtures::{generate, FixtureKind, FixtureSpec};
use mclift::io::{
    decode_raw_sequence, encode_raw_sequence, read_dataset, read_pgm, read_raw_sequence, write_dataset, write_heatmap,
    write_pgm, write_pgm16, write_raw_sequence, HeatSource, PgmMap,
};
use mclift::lifting::analyze_sequence;
use mclift::{ConnectivityMap, Frame, LiftConfig, UpdateField, UpdateMode};
use proptest::prelude::*;

proptest! {
    #[test]
    fn raw_bytes_round_trip(
        w in 1usize..12, h in 1usize..12, frames in 1usize..4,
        depth in prop::sample::select(vec![8u8, 10, 12, 16]),
        seed in any::<u64>(),
    ) {
        let bps = if depth <= 8 { 1 } else { 2 };
        let mut state = seed | 1;
        let max = (1u32 << depth) - 1;
        let mut bytes = Vec::new();
        for _ in 0..w * h * frames {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            let v = ((state >> 33) as u32) % (max + 1);
            if bps == 1 {
                bytes.push(v as u8);
            } else {
                bytes.extend_from_slice(&(v as u16).to_le_bytes());
            }
        }
        let seq = decode_raw_sequence(&bytes, w, h, depth, frames, "time").unwrap();
        prop_assert_eq!(encode_raw_sequence(&seq).unwrap(), bytes);
    }
}

#[test]
fn dataset_files_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let seq = generate(&FixtureSpec { bit_depth: 12, frames: 3, ..FixtureSpec::new(FixtureKind::Translate, 4) }).unwrap();
    let sidecar = write_dataset(&seq, dir.path(), "ct").unwrap();
    let (sc, back) = read_dataset(&sidecar).unwrap();
    assert_eq!((sc.width, sc.height, sc.bit_depth, sc.frames), (128, 128, 12, 3));
    assert_eq!(back, seq);

    let raw = dir.path().join("copy.raw");
    write_raw_sequence(&seq, &raw).unwrap();
    assert_eq!(std::fs::read(&raw).unwrap(), std::fs::read(dir.path().join("ct.raw")).unwrap());
    assert_eq!(read_raw_sequence(&raw, 128, 128, 12, 3).unwrap().frames(), seq.frames());
}

#[test]
fn sidecar_axis_defaults_to_time() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("a.raw"), [1u8, 2, 3, 4]).unwrap();
    std::fs::write(
        dir.path().join("a.json"),
        r#"{"width": 2, "height": 2, "bit_depth": 8, "frames": 1, "raw": "a.raw"}"#,
    )
    .unwrap();
    let (sc, seq) = read_dataset(dir.path().join("a.json")).unwrap();
    assert_eq!(sc.axis, "time");
    assert_eq!(seq.frames()[0].samples(), &[1, 2, 3, 4]);
}

#[test]
fn container_files_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let seq = generate(&FixtureSpec { width: 40, height: 24, frames: 5, ..FixtureSpec::new(FixtureKind::FlashDisocclusion, 2) })
        .unwrap();
    let bands = analyze_sequence(&seq, &LiftConfig::default().with_mode(UpdateMode::CopyUnconnected)).unwrap();
    let path = dir.path().join("x.mclf");
    write_container(&bands, &path).unwrap();
    assert_eq!(read_container(&path).unwrap(), bands);
}

#[test]
fn image_files() {
    let dir = tempfile::tempdir().unwrap();
    let f = Frame::from_fn(5, 4, 8, |x, y| (x * 40 + y) as i32).unwrap();
    let p8 = dir.path().join("f.pgm");
    write_pgm(&f, &p8, PgmMap::Clamp).unwrap();
    let back = read_pgm(&p8).unwrap();
    assert_eq!(back.maxval, 255);
    assert_eq!(back.samples.iter().map(|&v| v as i32).collect::<Vec<_>>(), f.samples());

    let p16 = dir.path().join("f16.pgm");
    write_pgm16(&f, &p16, PgmMap::Range { lo: 0.0, hi: 255.0 }).unwrap();
    let back = read_pgm(&p16).unwrap();
    assert_eq!(back.maxval, 65535);
    assert_eq!(back.samples[0], 0);
    assert_eq!(back.samples[4], (160.0 / 255.0 * 65535.0f64).round() as u16);

    let zero = UpdateField::zeros(3, 2);
    let path = dir.path().join("u.ppm");
    write_heatmap(HeatSource::Update(&zero), &path).unwrap();
    let bytes = std::fs::read(&path).unwrap();
    assert!(bytes.starts_with(b"P6 3 2 255\n"));
    assert!(bytes[11..].chunks(3).all(|c| c == [0, 255, 0]));

    let conn = ConnectivityMap { width: 2, height: 1, counts: vec![0, 3] };
    let path = dir.path().join("c.ppm");
    write_heatmap(HeatSource::Connectivity(&conn), &path).unwrap();
    let bytes = std::fs::read(&path).unwrap();
    assert_eq!(&bytes[11..], &[255, 255, 255, 255, 0, 0]);
}
