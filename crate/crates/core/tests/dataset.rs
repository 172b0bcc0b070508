mod common;

use std::fs;
use std::path::PathBuf;

use common::tiny_sweep;
use image::RgbImage;
use sfdi_forge::dataset::{
    build_dataset, collect_composites, collect_sweep_pairs, pair, split, unpair, DatasetManifest, DatasetOptions,
    Layout, SplitSpec,
};
use sfdi_forge::sweep::{generate, read_manifest};

fn load(path: &std::path::Path) -> RgbImage {
    image::open(path).unwrap().to_rgb8()
}

#[test]
fn composites_put_ground_truth_on_the_right() {
    let src = tempfile::tempdir().unwrap();
    generate(&tiny_sweep("ds", 7, 10, 1), src.path(), |_| {}).unwrap();
    let out = tempfile::tempdir().unwrap();
    let sources = collect_sweep_pairs(&[src.path().to_path_buf()]).unwrap();
    assert_eq!(sources.len(), 7);
    let opts = DatasetOptions {
        split: SplitSpec::Counts { train: 5, val: 2 },
        seed: 4,
        expect_size: None,
        ..DatasetOptions::default()
    };
    let manifest = build_dataset(&sources, out.path(), &opts).unwrap();
    assert_eq!((manifest.header.width, manifest.header.height), (20, 10));
    assert_eq!((manifest.header.train, manifest.header.val), (5, 2));

    let sweep_rows = read_manifest(src.path()).unwrap();
    for row in &manifest.rows {
        let (left, right) = unpair(&load(&out.path().join(&row.file))).unwrap();
        let frame = sweep_rows.iter().find(|r| Some(r.frame) == row.frame).unwrap();
        assert_eq!(left, load(&src.path().join(&frame.input)));
        assert_eq!(right, load(&src.path().join(frame.gt.as_ref().unwrap())));
        assert_eq!(row.id as i64, frame.frame, "ids follow source order");
        assert!(row.file.starts_with(&row.split));
    }

    let reread = DatasetManifest::read(out.path()).unwrap();
    assert_eq!(reread, manifest);
    let expected = split(7, opts.split, opts.seed).unwrap();
    assert_eq!(reread.split_ids("train"), expected.train.iter().map(|i| i + 1).collect::<Vec<_>>());
    assert_eq!(reread.split_ids("val"), expected.val.iter().map(|i| i + 1).collect::<Vec<_>>());
    for d in ["train", "val"] {
        assert_eq!(fs::read_dir(out.path().join(d)).unwrap().count(), reread.split_ids(d).len());
    }

    let again = tempfile::tempdir().unwrap();
    let rebuilt = build_dataset(&sources, again.path(), &opts).unwrap();
    let hashes = |m: &DatasetManifest| m.rows.iter().map(|r| (r.file.clone(), r.sha256.clone())).collect::<Vec<_>>();
    assert_eq!(hashes(&rebuilt), hashes(&manifest));
}

#[test]
fn drop_blue_and_swapped_layout() {
    let src = tempfile::tempdir().unwrap();
    generate(&tiny_sweep("ds", 3, 8, 1), src.path(), |_| {}).unwrap();
    let sources = collect_sweep_pairs(&[src.path().to_path_buf()]).unwrap();
    let out = tempfile::tempdir().unwrap();
    let opts = DatasetOptions {
        split: SplitSpec::ValFraction(0.0),
        drop_blue: true,
        layout: Layout::GtLeftInputRight,
        expect_size: None,
        ..DatasetOptions::default()
    };
    let manifest = build_dataset(&sources, out.path(), &opts).unwrap();
    let first = load(&out.path().join(&manifest.rows[0].file));
    assert!(first.pixels().all(|p| p.0[2] == 0));
    let (left, _) = unpair(&first).unwrap();
    let gt = load(&sources[0].gt.clone().unwrap());
    assert_eq!(left, gt, "ground truth already has no blue");
}

#[test]
fn imported_composites_are_checked_for_size() {
    let dir = tempfile::tempdir().unwrap();
    let half = |v: u8| RgbImage::from_pixel(6, 6, image::Rgb([v, v / 2, 0]));
    for i in 0..4u8 {
        pair(&half(10 * i), &half(200 - i)).unwrap().save(dir.path().join(format!("img_{i}.png"))).unwrap();
    }
    let sources = collect_composites(&[dir.path().to_path_buf()]).unwrap();
    let out = tempfile::tempdir().unwrap();
    let mut opts =
        DatasetOptions { split: SplitSpec::Counts { train: 3, val: 1 }, seed: 1, ..DatasetOptions::default() };
    let err = build_dataset(&sources, out.path(), &opts).unwrap_err().to_string();
    assert!(err.contains("12x6") || err.contains("512"), "{err}");
    opts.expect_size = Some((12, 6));
    let m = build_dataset(&sources, out.path(), &opts).unwrap();
    assert_eq!(m.rows.len(), 4);
    assert!(m.rows.iter().all(|r| r.sweep.is_none()));

    RgbImage::new(10, 6).save(dir.path().join("img_9.png")).unwrap();
    let sources = collect_composites(&[dir.path().to_path_buf()]).unwrap();
    let other = tempfile::tempdir().unwrap();
    assert!(build_dataset(&sources, other.path(), &opts).is_err());
}

#[test]
fn non_sweep_directory_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    assert!(collect_sweep_pairs(&[PathBuf::from(dir.path())]).is_err());
}
