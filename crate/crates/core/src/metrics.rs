//! Error metrics between predicted and reference property maps.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use image::RgbImage;
use num_rational::Ratio;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::real::Real;
use crate::sweep::write_atomic;

pub const PHYSICAL_MAX_ABSORPTION: f64 = 0.25;
pub const PHYSICAL_MAX_SCATTERING: f64 = 2.5;
/// Reference values below this many 8-bit levels are excluded from
/// difference maps.
pub const DIFF_FLOOR_LEVELS: f64 = 1.0 / 255.0;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChannelScaling {
    /// Raw 0-255 pixel values.
    #[default]
    Proxy,
    /// 255 maps to 0.25 mm⁻¹ absorption and 2.5 mm⁻¹ scattering.
    Physical,
}

impl ChannelScaling {
    /// Units per 8-bit level for (absorption, scattering).
    pub fn per_level(self) -> (f64, f64) {
        match self {
            ChannelScaling::Proxy => (1.0, 1.0),
            ChannelScaling::Physical => (PHYSICAL_MAX_ABSORPTION / 255.0, PHYSICAL_MAX_SCATTERING / 255.0),
        }
    }
}

/// Single-channel map, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Map<T> {
    pub width: usize,
    pub height: usize,
    pub data: Vec<T>,
}

impl<T: Real> Map<T> {
    pub fn new(width: usize, height: usize, data: Vec<T>) -> Result<Self> {
        if data.len() != width * height {
            return Err(Error::Dimensions(format!("{} values for a {width}x{height} map", data.len())));
        }
        Ok(Self { width, height, data })
    }

    fn same_shape(&self, other: &Self) -> Result<()> {
        if (self.width, self.height) != (other.width, other.height) {
            return Err(Error::Dimensions(format!(
                "prediction {}x{} vs reference {}x{}",
                self.width, self.height, other.width, other.height
            )));
        }
        Ok(())
    }

    pub fn scaled(&self, s: T) -> Self {
        Self { width: self.width, height: self.height, data: self.data.iter().map(|&v| v * s).collect() }
    }
}

/// Scaled red (absorption) and green (scattering) planes; blue is ignored.
pub fn extract_channels<T: Real>(img: &RgbImage, scaling: ChannelScaling) -> (Map<T>, Map<T>) {
    let (sa, ss) = scaling.per_level();
    let (w, h) = (img.width() as usize, img.height() as usize);
    let conv = |v: u8, s: f64| match scaling {
        ChannelScaling::Proxy => T::from_u8(v).unwrap(),
        ChannelScaling::Physical => T::lit(f64::from(v) * s),
    };
    let a = img.pixels().map(|p| conv(p.0[0], sa)).collect();
    let s = img.pixels().map(|p| conv(p.0[1], ss)).collect();
    (Map { width: w, height: h, data: a }, Map { width: w, height: h, data: s })
}

/// `Σ|pred − ref| / Σ ref`.
pub fn nmae<T: Real>(pred: &Map<T>, reference: &Map<T>) -> Result<T> {
    pred.same_shape(reference)?;
    let mut num = T::zero();
    let mut den = T::zero();
    for (&p, &r) in pred.data.iter().zip(&reference.data) {
        num += (p - r).abs();
        den += r;
    }
    if !(den > T::zero()) {
        return Err(Error::UndefinedMetric("NMAE reference sums to zero".into()));
    }
    Ok(num / den)
}

/// NMAE of 8-bit planes as an exact fraction.
pub fn nmae_exact(pred: &[u8], reference: &[u8]) -> Result<Ratio<u64>> {
    if pred.len() != reference.len() {
        return Err(Error::Dimensions(format!("{} vs {} pixels", pred.len(), reference.len())));
    }
    let num: u64 = pred.iter().zip(reference).map(|(&p, &r)| u64::from(p.abs_diff(r))).sum();
    let den: u64 = reference.iter().map(|&r| u64::from(r)).sum();
    if den == 0 {
        return Err(Error::UndefinedMetric("NMAE reference sums to zero".into()));
    }
    Ok(Ratio::new(num, den))
}

/// Per-pixel `|pred − ref| / ref` in percent; `None` where `ref < floor`.
pub fn pixel_diff_map<T: Real>(pred: &Map<T>, reference: &Map<T>, floor: T) -> Result<Vec<Option<T>>> {
    pred.same_shape(reference)?;
    let hundred = T::lit(100.0);
    Ok(pred
        .data
        .iter()
        .zip(&reference.data)
        .map(|(&p, &r)| if r < floor || !(r > T::zero()) { None } else { Some((p - r).abs() / r * hundred) })
        .collect())
}

/// Least-squares `s` minimising `Σ (s·pred − ref)²`.
pub fn fit_scale<T: Real>(pred: &Map<T>, reference: &Map<T>) -> Result<T> {
    pred.same_shape(reference)?;
    let mut pr = T::zero();
    let mut pp = T::zero();
    for (&p, &r) in pred.data.iter().zip(&reference.data) {
        pr += p * r;
        pp += p * p;
    }
    if !(pp > T::zero()) {
        return Err(Error::UndefinedMetric("cannot fit a scale to an all-zero prediction".into()));
    }
    Ok(pr / pp)
}

/// NMAE after rescaling the prediction by [`fit_scale`].
pub fn scale_corrected_nmae<T: Real>(pred: &Map<T>, reference: &Map<T>) -> Result<(T, T)> {
    let s = fit_scale(pred, reference)?;
    Ok((nmae(&pred.scaled(s), reference)?, s))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImageMetrics {
    pub id: String,
    pub nmae_absorption: f64,
    pub nmae_scattering: f64,
    pub scale_absorption: Option<f64>,
    pub scale_scattering: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub scaling: ChannelScaling,
    pub scale_corrected: bool,
    pub per_image: Vec<ImageMetrics>,
    pub mean_absorption: f64,
    pub mean_scattering: f64,
    /// Largest per-image NMAE in the set.
    pub envelope_absorption: f64,
    pub envelope_scattering: f64,
    pub unmatched_pred: Vec<String>,
    pub unmatched_ref: Vec<String>,
}

impl MetricsReport {
    pub fn from_images(per_image: Vec<ImageMetrics>, scaling: ChannelScaling, scale_corrected: bool) -> Self {
        let n = per_image.len().max(1) as f64;
        let mean = |f: fn(&ImageMetrics) -> f64| per_image.iter().map(f).sum::<f64>() / n;
        let max = |f: fn(&ImageMetrics) -> f64| per_image.iter().map(f).fold(0.0, f64::max);
        Self {
            scaling,
            scale_corrected,
            mean_absorption: mean(|m| m.nmae_absorption),
            mean_scattering: mean(|m| m.nmae_scattering),
            envelope_absorption: max(|m| m.nmae_absorption),
            envelope_scattering: max(|m| m.nmae_scattering),
            per_image,
            unmatched_pred: Vec::new(),
            unmatched_ref: Vec::new(),
        }
    }

    pub fn report_tsv(&self) -> String {
        let mut out = String::from("id\tnmae_absorption\tnmae_scattering\tscale_absorption\tscale_scattering\n");
        let opt = |v: Option<f64>| v.map_or_else(String::new, |v| format!("{v:.9}"));
        for m in &self.per_image {
            out.push_str(&format!(
                "{}\t{:.9}\t{:.9}\t{}\t{}\n",
                m.id,
                m.nmae_absorption,
                m.nmae_scattering,
                opt(m.scale_absorption),
                opt(m.scale_scattering)
            ));
        }
        out.push_str(&format!("mean\t{:.9}\t{:.9}\t\t\n", self.mean_absorption, self.mean_scattering));
        out.push_str(&format!("envelope\t{:.9}\t{:.9}\t\t\n", self.envelope_absorption, self.envelope_scattering));
        out
    }

    /// One row per image for scatter plots.
    pub fn scatter_tsv(&self) -> String {
        let mut out = String::from("nmae_absorption\tnmae_scattering\tid\n");
        for m in &self.per_image {
            out.push_str(&format!("{:.9}\t{:.9}\t{}\n", m.nmae_absorption, m.nmae_scattering, m.id));
        }
        out
    }

    /// Writes `report.tsv`, `scatter.tsv` and `summary.json`.
    pub fn write(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        write_atomic(&dir.join("report.tsv"), self.report_tsv().as_bytes())?;
        write_atomic(&dir.join("scatter.tsv"), self.scatter_tsv().as_bytes())?;
        let json = serde_json::to_string_pretty(self).expect("report serialises");
        write_atomic(&dir.join("summary.json"), json.as_bytes())
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct EvalOptions {
    pub scaling: ChannelScaling,
    pub scale_correct: bool,
}

fn png_names(dir: &Path) -> Result<BTreeMap<String, PathBuf>> {
    let entries = fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
    let mut out = BTreeMap::new();
    for e in entries {
        let path = e.map_err(|e| Error::io(dir, e))?.path();
        if path.extension().is_some_and(|x| x.eq_ignore_ascii_case("png")) {
            if let Some(name) = path.file_name().and_then(|n| n.to_str()) {
                out.insert(name.to_string(), path);
            }
        }
    }
    Ok(out)
}

/// Loads a property map; composites (`width == 2 × height`) contribute their
/// right half.
pub fn load_property_image(path: &Path) -> Result<RgbImage> {
    let img = image::open(path).map_err(|e| Error::Image { path: path.to_path_buf(), source: e })?.to_rgb8();
    if img.width() == 2 * img.height() {
        Ok(crate::dataset::unpair(&img)?.1)
    } else {
        Ok(img)
    }
}

/// Per-image metrics for one prediction/reference pair.
pub fn evaluate_pair(id: &str, pred: &RgbImage, reference: &RgbImage, opts: EvalOptions) -> Result<ImageMetrics> {
    let ctx = |e: Error| Error::Config(format!("{id}: {e}"));
    let (pa, ps) = extract_channels::<f64>(pred, opts.scaling);
    let (ra, rs) = extract_channels::<f64>(reference, opts.scaling);
    let plane = |img: &RgbImage, c: usize| img.pixels().map(|p| p.0[c]).collect::<Vec<u8>>();
    if opts.scale_correct {
        let (na, sa) = scale_corrected_nmae(&pa, &ra).map_err(ctx)?;
        let (ns, ss) = scale_corrected_nmae(&ps, &rs).map_err(ctx)?;
        return Ok(ImageMetrics {
            id: id.to_string(),
            nmae_absorption: na,
            nmae_scattering: ns,
            scale_absorption: Some(sa),
            scale_scattering: Some(ss),
        });
    }
    pa.same_shape(&ra).map_err(ctx)?;
    let ratio = |r: Ratio<u64>| *r.numer() as f64 / *r.denom() as f64;
    // Channel scaling is linear and cancels in the ratio, so the exact
    // integer form serves both scalings.
    let na = ratio(nmae_exact(&plane(pred, 0), &plane(reference, 0)).map_err(ctx)?);
    let ns = ratio(nmae_exact(&plane(pred, 1), &plane(reference, 1)).map_err(ctx)?);
    Ok(ImageMetrics {
        id: id.to_string(),
        nmae_absorption: na,
        nmae_scattering: ns,
        scale_absorption: None,
        scale_scattering: None,
    })
}

/// Matches PNGs by file name and evaluates every common pair.
pub fn evaluate_dataset(pred_dir: &Path, ref_dir: &Path, opts: EvalOptions) -> Result<MetricsReport> {
    let preds = png_names(pred_dir)?;
    let refs = png_names(ref_dir)?;
    let common: Vec<&String> = preds.keys().filter(|k| refs.contains_key(*k)).collect();
    let unmatched_pred: Vec<String> = preds.keys().filter(|k| !refs.contains_key(*k)).cloned().collect();
    let unmatched_ref: Vec<String> = refs.keys().filter(|k| !preds.contains_key(*k)).cloned().collect();
    if common.is_empty() {
        return Err(Error::Config(format!(
            "no matching file names between {} and {}",
            pred_dir.display(),
            ref_dir.display()
        )));
    }
    for name in unmatched_pred.iter().chain(&unmatched_ref) {
        log::warn!("unmatched image {name}");
    }
    let per_image = common
        .into_iter()
        .map(|name| evaluate_pair(name, &load_property_image(&preds[name])?, &load_property_image(&refs[name])?, opts))
        .collect::<Result<Vec<_>>>()?;
    let mut report = MetricsReport::from_images(per_image, opts.scaling, opts.scale_correct);
    report.unmatched_pred = unmatched_pred;
    report.unmatched_ref = unmatched_ref;
    Ok(report)
}

/// Blue → green → red ramp over `[0, max_percent]`; invalid pixels grey.
pub fn false_color(diff: &[Option<f64>], width: usize, height: usize, max_percent: f64) -> RgbImage {
    RgbImage::from_fn(width as u32, height as u32, |x, y| match diff[y as usize * width + x as usize] {
        None => image::Rgb([128, 128, 128]),
        Some(v) => {
            let t = (v / max_percent).clamp(0.0, 1.0);
            let (r, g, b) = if t < 0.5 { (0.0, 2.0 * t, 1.0 - 2.0 * t) } else { (2.0 * t - 1.0, 2.0 - 2.0 * t, 0.0) };
            image::Rgb([(r * 255.0).round() as u8, (g * 255.0).round() as u8, (b * 255.0).round() as u8])
        }
    })
}

/// Comma-separated percentage grid; invalid pixels are written as `NaN`.
pub fn diff_csv(diff: &[Option<f64>], width: usize) -> String {
    let mut out = String::new();
    for row in diff.chunks(width) {
        let cells: Vec<String> =
            row.iter().map(|v| v.map_or_else(|| "NaN".to_string(), |v| format!("{v:.6}"))).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

/// Writes `<stem>_abs.png/.csv` and `<stem>_sct.png/.csv` difference maps.
pub fn write_diff_maps(
    stem: &str,
    pred: &RgbImage,
    reference: &RgbImage,
    scaling: ChannelScaling,
    dir: &Path,
) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let (pa, ps) = extract_channels::<f64>(pred, scaling);
    let (ra, rs) = extract_channels::<f64>(reference, scaling);
    let (la, ls) = scaling.per_level();
    for (tag, p, r, floor) in [("abs", &pa, &ra, DIFF_FLOOR_LEVELS * la), ("sct", &ps, &rs, DIFF_FLOOR_LEVELS * ls)] {
        let diff = pixel_diff_map(p, r, floor).map_err(|e| Error::Config(format!("{stem}: {e}")))?;
        let png = dir.join(format!("{stem}_{tag}.png"));
        false_color(&diff, p.width, p.height, 50.0)
            .save(&png)
            .map_err(|e| Error::Image { path: png.clone(), source: e })?;
        write_atomic(&dir.join(format!("{stem}_{tag}.csv")), diff_csv(&diff, p.width).as_bytes())?;
    }
    Ok(())
}
