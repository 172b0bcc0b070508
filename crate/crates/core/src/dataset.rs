//! Paired composites, train/validation splits and the dataset manifest.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use image::RgbImage;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sweep::{read_manifest, sha256_hex, write_atomic, MANIFEST_FILE};

pub const TRAIN_DIR: &str = "train";
pub const VAL_DIR: &str = "val";

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Layout {
    #[default]
    InputLeftGtRight,
    GtLeftInputRight,
}

/// Side-by-side composite: `left` in columns `0..w`, `right` in `w..2w`.
pub fn pair(left: &RgbImage, right: &RgbImage) -> Result<RgbImage> {
    if left.dimensions() != right.dimensions() {
        return Err(Error::Dimensions(format!(
            "cannot pair {}x{} with {}x{}",
            left.width(),
            left.height(),
            right.width(),
            right.height()
        )));
    }
    let (w, h) = left.dimensions();
    let mut out = RgbImage::new(2 * w, h);
    for y in 0..h {
        for x in 0..w {
            out.put_pixel(x, y, *left.get_pixel(x, y));
            out.put_pixel(w + x, y, *right.get_pixel(x, y));
        }
    }
    Ok(out)
}

/// Splits a composite back into its left and right halves.
pub fn unpair(composite: &RgbImage) -> Result<(RgbImage, RgbImage)> {
    let (w2, h) = composite.dimensions();
    if w2 % 2 != 0 || w2 == 0 {
        return Err(Error::Dimensions(format!("composite width {w2} is not even")));
    }
    let w = w2 / 2;
    let left = image::imageops::crop_imm(composite, 0, 0, w, h).to_image();
    let right = image::imageops::crop_imm(composite, w, 0, w, h).to_image();
    Ok((left, right))
}

pub fn swap_halves(composite: &RgbImage) -> Result<RgbImage> {
    let (l, r) = unpair(composite)?;
    pair(&r, &l)
}

pub fn drop_blue(img: &RgbImage) -> RgbImage {
    let mut out = img.clone();
    for p in out.pixels_mut() {
        p.0[2] = 0;
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SplitSpec {
    Counts { train: usize, val: usize },
    ValFraction(f64),
}

impl SplitSpec {
    fn counts(self, n: usize) -> Result<(usize, usize)> {
        match self {
            SplitSpec::Counts { train, val } => {
                if train + val > n {
                    Err(Error::invalid("split", format!("{train} train + {val} val exceeds {n} pairs")))
                } else {
                    Ok((train, val))
                }
            }
            SplitSpec::ValFraction(f) => {
                if !(0.0..=1.0).contains(&f) {
                    return Err(Error::invalid("split.val_fraction", format!("{f} outside [0, 1]")));
                }
                let val = (f * n as f64).round() as usize;
                Ok((n - val, val))
            }
        }
    }
}

/// Train and validation membership as indices into the pair list.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetSplit {
    pub train: Vec<usize>,
    pub val: Vec<usize>,
    pub seed: u64,
}

/// Seeded uniform permutation of `0..n`, cut into train then validation.
/// Each list is returned sorted.
pub fn split(n: usize, spec: SplitSpec, seed: u64) -> Result<DatasetSplit> {
    let (n_train, n_val) = spec.counts(n)?;
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut train = order[..n_train].to_vec();
    let mut val = order[n_train..n_train + n_val].to_vec();
    train.sort_unstable();
    val.sort_unstable();
    Ok(DatasetSplit { train, val, seed })
}

/// One pair available for a dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SourcePair {
    pub dir: PathBuf,
    pub sweep: Option<String>,
    pub frame: Option<i64>,
    pub params: BTreeMap<String, f64>,
    /// Input render, or the composite itself for imported data.
    pub input: PathBuf,
    pub gt: Option<PathBuf>,
}

/// Collects generated pairs from sweep output directories, in argument
/// order and then frame order.
pub fn collect_sweep_pairs(dirs: &[PathBuf]) -> Result<Vec<SourcePair>> {
    let mut out = Vec::new();
    for dir in dirs {
        let rows = read_manifest(dir)?;
        if rows.is_empty() {
            return Err(Error::Config(format!(
                "{}: no {MANIFEST_FILE} rows (not a sweep output directory?)",
                dir.display()
            )));
        }
        for row in rows {
            let gt = row
                .gt
                .as_ref()
                .ok_or_else(|| Error::Config(format!("{}: frame {} has no ground truth", dir.display(), row.frame)))?;
            out.push(SourcePair {
                dir: dir.clone(),
                sweep: Some(row.sweep.clone()),
                frame: Some(row.frame),
                params: row.params.clone(),
                input: dir.join(&row.input),
                gt: Some(dir.join(gt)),
            });
        }
    }
    Ok(out)
}

/// Collects externally supplied composite PNGs, sorted by file name.
pub fn collect_composites(dirs: &[PathBuf]) -> Result<Vec<SourcePair>> {
    let mut out = Vec::new();
    for dir in dirs {
        let mut files: Vec<PathBuf> = fs::read_dir(dir)
            .map_err(|e| Error::io(dir, e))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x.eq_ignore_ascii_case("png")))
            .collect();
        files.sort();
        for input in files {
            out.push(SourcePair {
                dir: dir.clone(),
                sweep: None,
                frame: None,
                params: BTreeMap::new(),
                input,
                gt: None,
            });
        }
    }
    Ok(out)
}

fn load_rgb(path: &Path) -> Result<RgbImage> {
    Ok(image::open(path).map_err(|e| Error::Image { path: path.to_path_buf(), source: e })?.to_rgb8())
}

#[derive(Debug, Clone, PartialEq)]
pub struct DatasetOptions {
    pub split: SplitSpec,
    pub seed: u64,
    pub drop_blue: bool,
    pub layout: Layout,
    /// Expected composite size for imported data, `(width, height)`.
    pub expect_size: Option<(u32, u32)>,
}

impl Default for DatasetOptions {
    fn default() -> Self {
        Self {
            split: SplitSpec::ValFraction(0.3),
            seed: 0,
            drop_blue: false,
            layout: Layout::InputLeftGtRight,
            expect_size: Some((512, 256)),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetHeader {
    pub kind: String,
    pub layout: Layout,
    pub width: u32,
    pub height: u32,
    pub split_seed: u64,
    pub train: usize,
    pub val: usize,
    pub drop_blue: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetRow {
    pub kind: String,
    pub id: usize,
    pub split: String,
    pub file: String,
    pub sha256: String,
    pub source_dir: String,
    pub source_file: String,
    pub sweep: Option<String>,
    pub frame: Option<i64>,
    pub params: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DatasetManifest {
    pub header: DatasetHeader,
    pub rows: Vec<DatasetRow>,
}

impl DatasetManifest {
    pub fn read(dir: &Path) -> Result<Self> {
        let path = dir.join(MANIFEST_FILE);
        let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header: DatasetHeader =
            serde_json::from_str(lines.next().ok_or_else(|| Error::parse(&path, "empty manifest"))?)
                .map_err(|e| Error::parse(&path, format!("header: {e}")))?;
        let rows = lines
            .enumerate()
            .map(|(i, l)| serde_json::from_str(l).map_err(|e| Error::parse(&path, format!("line {}: {e}", i + 2))))
            .collect::<Result<_>>()?;
        Ok(Self { header, rows })
    }

    pub fn split_ids(&self, split: &str) -> Vec<usize> {
        self.rows.iter().filter(|r| r.split == split).map(|r| r.id).collect()
    }
}

fn composite_for(source: &SourcePair, opts: &DatasetOptions) -> Result<RgbImage> {
    let mut img = match &source.gt {
        Some(gt) => {
            let input = load_rgb(&source.input)?;
            let gt_img = load_rgb(gt)?;
            pair(&input, &gt_img).map_err(|e| Error::Config(format!("{}: {e}", source.input.display())))?
        }
        None => {
            let img = load_rgb(&source.input)?;
            if let Some((w, h)) = opts.expect_size {
                if img.dimensions() != (w, h) {
                    return Err(Error::Dimensions(format!(
                        "{}: composite is {}x{}, expected {w}x{h}",
                        source.input.display(),
                        img.width(),
                        img.height()
                    )));
                }
            } else if img.width() != 2 * img.height() {
                return Err(Error::Dimensions(format!(
                    "{}: composite width {} is not twice its height {}",
                    source.input.display(),
                    img.width(),
                    img.height()
                )));
            }
            img
        }
    };
    if opts.layout == Layout::GtLeftInputRight {
        img = swap_halves(&img)?;
    }
    if opts.drop_blue {
        img = drop_blue(&img);
    }
    Ok(img)
}

/// Writes `train/` and `val/` composites plus `manifest.jsonl` into `out`.
/// Pairs are numbered from 1 in source order.
pub fn build_dataset(sources: &[SourcePair], out: &Path, opts: &DatasetOptions) -> Result<DatasetManifest> {
    if sources.is_empty() {
        return Err(Error::Config("no pairs to build a dataset from".into()));
    }
    let split = split(sources.len(), opts.split, opts.seed)?;
    let mut membership: BTreeMap<usize, &str> = BTreeMap::new();
    for &i in &split.train {
        membership.insert(i, TRAIN_DIR);
    }
    for &i in &split.val {
        membership.insert(i, VAL_DIR);
    }
    for d in [TRAIN_DIR, VAL_DIR] {
        let p = out.join(d);
        fs::create_dir_all(&p).map_err(|e| Error::io(&p, e))?;
    }

    let mut rows = Vec::with_capacity(membership.len());
    let mut size = None;
    for (&i, &dir) in &membership {
        let source = &sources[i];
        let img = composite_for(source, opts)?;
        match size {
            None => size = Some(img.dimensions()),
            Some(s) if s != img.dimensions() => {
                return Err(Error::Dimensions(format!(
                    "{}: composite {}x{} differs from earlier {}x{}",
                    source.input.display(),
                    img.width(),
                    img.height(),
                    s.0,
                    s.1
                )))
            }
            _ => {}
        }
        let id = i + 1;
        let rel = format!("{dir}/frame_{id:05}.png");
        let mut bytes = Vec::new();
        img.write_to(&mut std::io::Cursor::new(&mut bytes), image::ImageFormat::Png)
            .map_err(|e| Error::Image { path: out.join(&rel), source: e })?;
        write_atomic(&out.join(&rel), &bytes)?;
        rows.push(DatasetRow {
            kind: "pair".into(),
            id,
            split: dir.into(),
            file: rel,
            sha256: sha256_hex(&bytes),
            source_dir: source.dir.display().to_string(),
            source_file: source.input.display().to_string(),
            sweep: source.sweep.clone(),
            frame: source.frame,
            params: source.params.clone(),
        });
    }
    let (width, height) = size.unwrap_or((0, 0));
    let header = DatasetHeader {
        kind: "header".into(),
        layout: opts.layout,
        width,
        height,
        split_seed: opts.seed,
        train: split.train.len(),
        val: split.val.len(),
        drop_blue: opts.drop_blue,
    };
    let mut text = serde_json::to_string(&header).expect("header serialises");
    text.push('\n');
    for r in &rows {
        text.push_str(&serde_json::to_string(r).expect("row serialises"));
        text.push('\n');
    }
    write_atomic(&out.join(MANIFEST_FILE), text.as_bytes())?;
    Ok(DatasetManifest { header, rows })
}
