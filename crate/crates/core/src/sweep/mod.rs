//! Keyframed parameter sweeps and dataset generation.

mod presets;

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::groundtruth::render_ground_truth;
use crate::real::Real;
use crate::rng::mix;
use crate::scene::{build_template, Overrides, SceneTemplate, TemplateName};
use crate::transport::{render, RenderSettings};

pub use presets::{preset, FactorMode, PRESET_NAMES};

pub const MANIFEST_FILE: &str = "manifest.jsonl";
pub const INPUT_DIR: &str = "input";
pub const GT_DIR: &str = "gt";

/// Keyframed scalar parameter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct Track<T> {
    pub target: String,
    /// `(frame, value)` pairs with strictly increasing frames.
    pub keyframes: Vec<(i64, T)>,
}

impl<T: Real> Track<T> {
    pub fn new(target: impl Into<String>, keyframes: Vec<(i64, T)>) -> Result<Self> {
        let track = Self { target: target.into(), keyframes };
        track.validate()?;
        Ok(track)
    }

    pub fn ramp(target: impl Into<String>, from: (i64, f64), to: (i64, f64)) -> Self {
        Self { target: target.into(), keyframes: vec![(from.0, T::lit(from.1)), (to.0, T::lit(to.1))] }
    }

    pub fn constant(target: impl Into<String>, frame: i64, value: f64) -> Self {
        Self { target: target.into(), keyframes: vec![(frame, T::lit(value))] }
    }

    pub fn validate(&self) -> Result<()> {
        let path = format!("track `{}`", self.target);
        if self.keyframes.is_empty() {
            return Err(Error::invalid(path, "needs at least one keyframe"));
        }
        if let Some(w) = self.keyframes.windows(2).find(|w| w[1].0 <= w[0].0) {
            return Err(Error::invalid(
                path,
                format!("keyframe frames must increase strictly ({} then {})", w[0].0, w[1].0),
            ));
        }
        if let Some((f, v)) = self.keyframes.iter().find(|(_, v)| !v.is_finite()) {
            return Err(Error::invalid(path, format!("non-finite value {v} at frame {f}")));
        }
        Ok(())
    }

    /// Linear between keyframes, clamped to the end values outside them.
    pub fn evaluate(&self, frame: i64) -> T {
        evaluate_track(self, frame)
    }
}

pub fn evaluate_track<T: Real>(track: &Track<T>, frame: i64) -> T {
    let k = &track.keyframes;
    let first = k[0];
    let last = k[k.len() - 1];
    if frame <= first.0 {
        return first.1;
    }
    if frame >= last.0 {
        return last.1;
    }
    let i = k.partition_point(|&(f, _)| f <= frame);
    let (f0, v0) = k[i - 1];
    let (f1, v1) = k[i];
    if frame == f0 {
        return v0;
    }
    let s = T::from_i64(frame - f0).unwrap() / T::from_i64(f1 - f0).unwrap();
    v0 + (v1 - v0) * s
}

/// How ground-truth channels follow the swept factors.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GtMapping {
    /// Only explicit overrides and tracks set the ground-truth channels.
    #[default]
    Authored,
    /// Every material's channels are rewritten from its factors after the
    /// tracks apply: absorption `(1 - F)(2 - A)`, scattering `F S`, both
    /// clamped to `[0.05, 0.95]`. With `A = S = 1` this is `(1 - F, F)`.
    Factors,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GtSettings {
    pub enabled: bool,
    pub mapping: GtMapping,
}

impl Default for GtSettings {
    fn default() -> Self {
        Self { enabled: true, mapping: GtMapping::Authored }
    }
}

/// Channel values the [`GtMapping::Factors`] mapping assigns.
pub fn factor_gt<T: Real>(final_factor: T, absorption_factor: T, scattering_factor: T) -> (T, T) {
    let (lo, hi) = (T::lit(0.05), T::lit(0.95));
    let abs = (T::one() - final_factor) * (T::lit(2.0) - absorption_factor);
    let sct = final_factor * scattering_factor;
    (abs.max(lo).min(hi), sct.max(lo).min(hi))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct SweepSpec<T> {
    pub name: String,
    pub template: TemplateName,
    #[serde(default)]
    pub overrides: Overrides<T>,
    pub start_frame: i64,
    pub end_frame: i64,
    #[serde(default)]
    pub tracks: Vec<Track<T>>,
    #[serde(default)]
    pub render: RenderSettings<T>,
    #[serde(default)]
    pub ground_truth: GtSettings,
}

impl<T: Real> SweepSpec<T> {
    /// Parses a TOML sweep file.
    ///
    /// ```toml
    /// name = "final-ramp"
    /// template = "rectangular"
    /// start_frame = 1
    /// end_frame = 100
    ///
    /// [overrides]
    /// "pattern.frequency" = 0.2
    ///
    /// [[tracks]]
    /// target = "material[0].factors.final_factor"
    /// keyframes = [[1, 0.05], [100, 0.95]]
    ///
    /// [render]
    /// samples_per_pixel = 256
    /// rng_seed = 7
    ///
    /// [ground_truth]
    /// mapping = "factors"
    /// ```
    pub fn parse(text: &str, origin: &Path) -> Result<Self> {
        let spec: Self = toml::from_str(text).map_err(|e| Error::parse(origin, e))?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, path)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("sweep spec serialises")
    }

    pub fn frame_count(&self) -> usize {
        (self.end_frame - self.start_frame + 1).max(0) as usize
    }

    pub fn frames(&self) -> impl Iterator<Item = i64> {
        self.start_frame..=self.end_frame
    }

    /// Checks frame range, tracks, render settings and that every frame
    /// endpoint instantiates.
    pub fn validate(&self) -> Result<()> {
        if self.start_frame > self.end_frame {
            return Err(Error::invalid(
                "sweep.frames",
                format!("start_frame {} exceeds end_frame {}", self.start_frame, self.end_frame),
            ));
        }
        for t in &self.tracks {
            t.validate()?;
        }
        self.render.validate()?;
        self.instantiate_frame(self.start_frame)?;
        self.instantiate_frame(self.end_frame)?;
        Ok(())
    }

    /// Evaluated parameter record for one frame: overrides, then tracks.
    pub fn frame_params(&self, frame: i64) -> Overrides<T> {
        let mut params = self.overrides.clone();
        for t in &self.tracks {
            params.insert(t.target.clone(), t.evaluate(frame));
        }
        params
    }

    pub fn instantiate_frame(&self, frame: i64) -> Result<SceneTemplate<T>> {
        if frame < self.start_frame || frame > self.end_frame {
            return Err(Error::invalid(
                "sweep.frame",
                format!("frame {frame} outside [{}, {}]", self.start_frame, self.end_frame),
            ));
        }
        let mut params = self.frame_params(frame);
        if self.ground_truth.mapping == GtMapping::Factors {
            let scene = build_template(self.template, &params).map_err(|e| self.config_error(e))?;
            for (i, m) in scene.materials.iter().enumerate() {
                let f = &m.factors;
                let (a, s) = factor_gt(f.final_factor, f.absorption_factor, f.scattering_factor);
                params.insert(format!("material[{i}].gt_absorption"), a);
                params.insert(format!("material[{i}].gt_scattering"), s);
            }
        }
        build_template(self.template, &params).map_err(|e| self.config_error(e))
    }

    fn config_error(&self, e: Error) -> Error {
        match e {
            Error::UnknownParameter(p) => Error::Config(format!("sweep `{}`: unknown parameter path `{p}`", self.name)),
            other => other,
        }
    }

    pub fn frame_settings(&self, frame: i64) -> RenderSettings<T> {
        RenderSettings { rng_seed: mix(self.render.rng_seed, frame as u64), ..self.render.clone() }
    }
}

/// One generated frame, as recorded in `manifest.jsonl`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestRow {
    pub frame: i64,
    pub sweep: String,
    pub template: TemplateName,
    /// Every override and tracked value used to build the frame's scene.
    pub params: BTreeMap<String, f64>,
    pub gt_mapping: GtMapping,
    /// Render settings with the per-frame seed filled in.
    pub render: RenderSettings<f64>,
    pub input: String,
    pub gt: Option<String>,
    pub input_sha256: String,
    pub gt_sha256: Option<String>,
    pub config_hash: String,
    pub render_seconds: f64,
    pub gt_seconds: f64,
    pub cap_terminations: u64,
    pub max_throughput: f64,
}

impl ManifestRow {
    /// Rebuilds the frame's scene from the row alone.
    pub fn scene<T: Real>(&self) -> Result<SceneTemplate<T>> {
        let spec = SweepSpec::<T> {
            name: self.sweep.clone(),
            template: self.template,
            overrides: self.params.iter().map(|(k, &v)| (k.clone(), T::lit(v))).collect(),
            start_frame: self.frame,
            end_frame: self.frame,
            tracks: Vec::new(),
            render: RenderSettings::default(),
            ground_truth: GtSettings { enabled: self.gt.is_some(), mapping: self.gt_mapping },
        };
        spec.instantiate_frame(self.frame)
    }

    pub fn settings<T: Real>(&self) -> RenderSettings<T> {
        let r = &self.render;
        RenderSettings {
            samples_per_pixel: r.samples_per_pixel,
            max_bounces: r.max_bounces,
            roulette_start: r.roulette_start,
            roulette_survival: T::lit(r.roulette_survival),
            rng_seed: r.rng_seed,
            tile_size: r.tile_size,
            walk_step_cap: r.walk_step_cap,
            exposure: r.exposure.map(T::lit),
        }
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn file_sha256(path: &Path) -> Result<String> {
    Ok(sha256_hex(&fs::read(path).map_err(|e| Error::io(path, e))?))
}

pub fn frame_file_name(frame: i64) -> String {
    format!("frame_{frame:05}.png")
}

/// Reads a sweep manifest. Missing file → empty.
pub fn read_manifest(dir: &Path) -> Result<Vec<ManifestRow>> {
    let path = dir.join(MANIFEST_FILE);
    if !path.exists() {
        return Ok(Vec::new());
    }
    let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| serde_json::from_str(l).map_err(|e| Error::parse(&path, format!("line {}: {e}", i + 1))))
        .collect()
}

/// Atomically replaces a file.
pub(crate) fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let tmp = path.with_extension("tmp");
    let mut f = fs::File::create(&tmp).map_err(|e| Error::io(&tmp, e))?;
    f.write_all(bytes).map_err(|e| Error::io(&tmp, e))?;
    f.sync_all().map_err(|e| Error::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

fn write_manifest(dir: &Path, rows: &BTreeMap<i64, ManifestRow>) -> Result<()> {
    let mut out = String::new();
    for row in rows.values() {
        out.push_str(&serde_json::to_string(row).expect("row serialises"));
        out.push('\n');
    }
    write_atomic(&dir.join(MANIFEST_FILE), out.as_bytes())
}

fn save_png(img: &image::RgbImage, path: &Path) -> Result<Vec<u8>> {
    let mut bytes = Vec::new();
    img.write_to(&mut std::io::Cursor::new(&mut bytes), image::ImageFormat::Png)
        .map_err(|e| Error::Image { path: path.to_path_buf(), source: e })?;
    write_atomic(path, &bytes)?;
    Ok(bytes)
}

#[derive(Debug, Clone, PartialEq)]
pub enum FrameStatus {
    Rendered { render_seconds: f64, gt_seconds: f64 },
    Skipped,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FrameEvent {
    pub frame: i64,
    pub index: usize,
    pub total: usize,
    pub status: FrameStatus,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct GenerateSummary {
    pub rendered: usize,
    pub skipped: usize,
    pub rows: Vec<ManifestRow>,
}

fn to_f64_map<T: Real>(m: &Overrides<T>) -> BTreeMap<String, f64> {
    m.iter().map(|(k, v)| (k.clone(), v.as_f64())).collect()
}

fn settings_f64<T: Real>(s: &RenderSettings<T>) -> RenderSettings<f64> {
    RenderSettings {
        samples_per_pixel: s.samples_per_pixel,
        max_bounces: s.max_bounces,
        roulette_start: s.roulette_start,
        roulette_survival: s.roulette_survival.as_f64(),
        rng_seed: s.rng_seed,
        tile_size: s.tile_size,
        walk_step_cap: s.walk_step_cap,
        exposure: s.exposure.map(Real::as_f64),
    }
}

fn config_hash(
    template: TemplateName,
    params: &BTreeMap<String, f64>,
    mapping: GtMapping,
    gt: bool,
    render: &RenderSettings<f64>,
) -> String {
    let canonical = serde_json::json!({
        "version": env!("CARGO_PKG_VERSION"),
        "template": template,
        "params": params,
        "gt_mapping": mapping,
        "gt": gt,
        "render": render,
    });
    sha256_hex(canonical.to_string().as_bytes())
}

fn frame_is_current(dir: &Path, row: &ManifestRow, hash: &str) -> bool {
    let matches = |rel: &str, expected: &str| file_sha256(&dir.join(rel)).is_ok_and(|h| h == expected);
    row.config_hash == hash
        && matches(&row.input, &row.input_sha256)
        && match (&row.gt, &row.gt_sha256) {
            (Some(p), Some(h)) => matches(p, h),
            (None, None) => true,
            _ => false,
        }
}

/// Renders every frame of `spec` into `out_dir`, skipping frames whose files
/// and configuration already match the manifest. The manifest is rewritten
/// in frame order after each frame, so an interrupted run resumes cleanly.
pub fn generate<T: Real>(
    spec: &SweepSpec<T>,
    out_dir: &Path,
    mut on_frame: impl FnMut(&FrameEvent),
) -> Result<GenerateSummary> {
    spec.validate()?;
    let input_dir = out_dir.join(INPUT_DIR);
    let gt_dir = out_dir.join(GT_DIR);
    fs::create_dir_all(&input_dir).map_err(|e| Error::io(&input_dir, e))?;
    if spec.ground_truth.enabled {
        fs::create_dir_all(&gt_dir).map_err(|e| Error::io(&gt_dir, e))?;
    }

    let mut previous: BTreeMap<i64, ManifestRow> = read_manifest(out_dir)?.into_iter().map(|r| (r.frame, r)).collect();
    let mut rows: BTreeMap<i64, ManifestRow> = BTreeMap::new();
    let mut summary = GenerateSummary::default();
    let total = spec.frame_count();

    for (index, frame) in spec.frames().enumerate() {
        let params = spec.frame_params(frame);
        let params_f64 = to_f64_map(&params);
        let settings = spec.frame_settings(frame);
        let render_f64 = settings_f64(&settings);
        let hash =
            config_hash(spec.template, &params_f64, spec.ground_truth.mapping, spec.ground_truth.enabled, &render_f64);

        if let Some(row) = previous.remove(&frame) {
            if frame_is_current(out_dir, &row, &hash) {
                rows.insert(frame, row);
                summary.skipped += 1;
                on_frame(&FrameEvent { frame, index, total, status: FrameStatus::Skipped });
                continue;
            }
        }

        let scene = spec.instantiate_frame(frame)?;
        let name = frame_file_name(frame);
        let input_rel = format!("{INPUT_DIR}/{name}");
        let lit = render(&scene, &settings).map_err(|e| Error::Config(format!("frame {frame}: {e}")))?;
        let input_bytes = save_png(&lit.to_rgb8(), &out_dir.join(&input_rel))?;

        let gt_start = Instant::now();
        let (gt_rel, gt_hash) = if spec.ground_truth.enabled {
            let rel = format!("{GT_DIR}/{name}");
            let bytes = save_png(&render_ground_truth(&scene)?, &out_dir.join(&rel))?;
            (Some(rel), Some(sha256_hex(&bytes)))
        } else {
            (None, None)
        };
        let gt_seconds = gt_start.elapsed().as_secs_f64();

        let row = ManifestRow {
            frame,
            sweep: spec.name.clone(),
            template: spec.template,
            params: params_f64,
            gt_mapping: spec.ground_truth.mapping,
            render: render_f64,
            input: input_rel,
            gt: gt_rel,
            input_sha256: sha256_hex(&input_bytes),
            gt_sha256: gt_hash,
            config_hash: hash,
            render_seconds: lit.stats.seconds,
            gt_seconds,
            cap_terminations: lit.stats.cap_terminations,
            max_throughput: lit.stats.max_throughput,
        };
        log::debug!("frame {frame}: {:.2}s render, {gt_seconds:.2}s gt", lit.stats.seconds);
        rows.insert(frame, row);
        write_manifest(out_dir, &rows)?;
        summary.rendered += 1;
        on_frame(&FrameEvent {
            frame,
            index,
            total,
            status: FrameStatus::Rendered { render_seconds: lit.stats.seconds, gt_seconds },
        });
    }
    write_manifest(out_dir, &rows)?;
    summary.rows = rows.into_values().collect();
    Ok(summary)
}

/// Output directory for one spec of a bundle.
pub fn spec_dir(root: &Path, spec_name: &str) -> PathBuf {
    root.join(spec_name)
}
