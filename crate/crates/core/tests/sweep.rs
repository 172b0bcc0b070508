mod common;

use std::collections::BTreeMap;
use std::fs;

use common::tiny_sweep;
use proptest::prelude::*;
use sfdi_forge::groundtruth::render_ground_truth;
use sfdi_forge::sweep::{file_sha256, generate, read_manifest, sha256_hex, FrameStatus, SweepSpec, Track};
use sfdi_forge::transport::render;

fn png_bytes(img: &image::RgbImage) -> Vec<u8> {
    let mut out = Vec::new();
    img.write_to(&mut std::io::Cursor::new(&mut out), image::ImageFormat::Png).unwrap();
    out
}

#[test]
fn generates_resumes_and_rerenders_only_stale_frames() {
    let dir = tempfile::tempdir().unwrap();
    let spec = tiny_sweep("tiny", 6, 12, 2);
    let first = generate(&spec, dir.path(), |_| {}).unwrap();
    assert_eq!((first.rendered, first.skipped), (6, 0));
    let rows = read_manifest(dir.path()).unwrap();
    assert_eq!(rows.iter().map(|r| r.frame).collect::<Vec<_>>(), (1..=6).collect::<Vec<_>>());

    let again = generate(&spec, dir.path(), |_| {}).unwrap();
    assert_eq!((again.rendered, again.skipped), (0, 6));

    fs::write(dir.path().join("input/frame_00003.png"), b"corrupt").unwrap();
    let mut events = Vec::new();
    let repaired = generate(&spec, dir.path(), |e| events.push((e.frame, e.status.clone()))).unwrap();
    assert_eq!((repaired.rendered, repaired.skipped), (1, 5));
    assert!(matches!(events[2], (3, FrameStatus::Rendered { .. })));
    let after = read_manifest(dir.path()).unwrap();
    for (a, b) in after.iter().zip(&rows) {
        assert_eq!((&a.input_sha256, &a.gt_sha256, &a.config_hash), (&b.input_sha256, &b.gt_sha256, &b.config_hash));
    }

    let mut changed = spec.clone();
    changed.render.samples_per_pixel = 3;
    let redo = generate(&changed, dir.path(), |_| {}).unwrap();
    assert_eq!(redo.rendered, 6);
}

#[test]
fn manifest_rows_reproduce_their_files() {
    let dir = tempfile::tempdir().unwrap();
    let spec = tiny_sweep("tiny", 4, 12, 2);
    generate(&spec, dir.path(), |_| {}).unwrap();
    let rows = read_manifest(dir.path()).unwrap();

    let mut referenced: BTreeMap<String, usize> = BTreeMap::new();
    for row in &rows {
        *referenced.entry(row.input.clone()).or_default() += 1;
        *referenced.entry(row.gt.clone().unwrap()).or_default() += 1;
        assert_eq!(file_sha256(&dir.path().join(&row.input)).unwrap(), row.input_sha256);

        let scene = row.scene::<f64>().unwrap();
        assert_eq!(scene, spec.instantiate_frame(row.frame).unwrap());
        let lit = render(&scene, &row.settings::<f64>()).unwrap();
        assert_eq!(sha256_hex(&png_bytes(&lit.to_rgb8())), row.input_sha256, "frame {}", row.frame);
        let gt = render_ground_truth(&scene).unwrap();
        assert_eq!(Some(sha256_hex(&png_bytes(&gt))), row.gt_sha256);
        assert!(row.params.contains_key("spheroid[0].center.x"));
        assert!(row.max_throughput <= 1.0);
    }
    let mut on_disk = Vec::new();
    for sub in ["input", "gt"] {
        for e in fs::read_dir(dir.path().join(sub)).unwrap() {
            on_disk.push(format!("{sub}/{}", e.unwrap().file_name().to_string_lossy()));
        }
    }
    on_disk.sort();
    assert_eq!(on_disk, referenced.keys().cloned().collect::<Vec<_>>());
    assert!(referenced.values().all(|&n| n == 1));
}

#[test]
fn frame_seeds_differ() {
    let spec = tiny_sweep("tiny", 3, 12, 2);
    let seeds: Vec<u64> = spec.frames().map(|f| spec.frame_settings(f).rng_seed).collect();
    assert!(seeds[0] != seeds[1] && seeds[1] != seeds[2]);
}

#[test]
fn spec_file_with_bad_path_fails_with_its_name() {
    let text = r#"
        name = "bad"
        template = "rectangular"
        start_frame = 1
        end_frame = 3
        [[tracks]]
        target = "material[9].foo"
        keyframes = [[1, 0.1]]
    "#;
    let err = SweepSpec::<f64>::parse(text, std::path::Path::new("bad.toml")).unwrap_err().to_string();
    assert!(err.contains("material[9].foo"), "{err}");
}

proptest! {
    #[test]
    fn evaluation_is_piecewise_linear(
        start in -50i64..50,
        gaps in prop::collection::vec(3i64..40, 1..6),
        values in prop::collection::vec(-5.0f64..5.0, 7),
        pick in 0usize..1000,
    ) {
        let mut frames = vec![start];
        for g in &gaps {
            frames.push(frames.last().unwrap() + g);
        }
        let keys: Vec<(i64, f64)> = frames.iter().zip(&values).map(|(&f, &v)| (f, v)).collect();
        let track = Track::new("x", keys.clone()).unwrap();
        for &(f, v) in &keys {
            prop_assert_eq!(track.evaluate(f), v);
        }
        let seg = pick % (keys.len() - 1);
        let (f0, f1) = (keys[seg].0, keys[seg + 1].0);
        let mid = f0 + 1 + pick as i64 % (f1 - f0 - 1);
        let (a, b, c) = (track.evaluate(mid - 1), track.evaluate(mid), track.evaluate(mid + 1));
        prop_assert!((b - (a + c) / 2.0).abs() < 1e-12);
        let last = keys[keys.len() - 1];
        prop_assert_eq!(track.evaluate(last.0 + 1000), last.1);
        prop_assert_eq!(track.evaluate(keys[0].0 - 1000), keys[0].1);
    }
}
