use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{GtMapping, GtSettings, SweepSpec, Track};
use crate::error::{Error, Result};
use crate::real::Real;
use crate::scene::{Overrides, TemplateName};
use crate::transport::RenderSettings;

pub const PRESET_NAMES: [&str; 3] = ["rectangular-example", "rectangular-family", "cylinder-full"];

const LO: f64 = 0.05;
const HI: f64 = 0.95;
const FAMILY_FRAMES: i64 = 50;
const LUMEN_FRAMES: i64 = 200;
const POLYP_FRAMES: i64 = 120;

/// Which factors a preset sweeps.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FactorMode {
    #[default]
    Final,
    FinalAbs,
    FinalSct,
    All,
}

impl FactorMode {
    pub const ALL: [FactorMode; 4] = [FactorMode::Final, FactorMode::FinalAbs, FactorMode::FinalSct, FactorMode::All];

    pub fn as_str(self) -> &'static str {
        match self {
            FactorMode::Final => "final",
            FactorMode::FinalAbs => "final-abs",
            FactorMode::FinalSct => "final-sct",
            FactorMode::All => "all",
        }
    }

    fn sweeps_absorption(self) -> bool {
        matches!(self, FactorMode::FinalAbs | FactorMode::All)
    }

    fn sweeps_scattering(self) -> bool {
        matches!(self, FactorMode::FinalSct | FactorMode::All)
    }
}

impl FromStr for FactorMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        FactorMode::ALL.into_iter().find(|m| m.as_str() == s.trim().replace('_', "-")).ok_or_else(|| {
            Error::Config(format!("unknown factor mode `{s}` (expected final, final-abs, final-sct or all)"))
        })
    }
}

/// Piecewise-linear wave between `LO` and `HI` with keyframes every
/// `spacing` frames, so ramps with different spacings cover a 2-D region.
fn zigzag<T: Real>(target: String, start: i64, end: i64, spacing: i64, start_high: bool) -> Track<T> {
    let mut keyframes = Vec::new();
    let mut frame = start;
    let mut high = start_high;
    loop {
        keyframes.push((frame, T::lit(if high { HI } else { LO })));
        if frame >= end {
            break;
        }
        frame += spacing;
        high = !high;
    }
    Track { target, keyframes }
}

fn factor_tracks<T: Real>(material: usize, reverse: bool, start: i64, end: i64, mode: FactorMode) -> Vec<Track<T>> {
    let (a, b) = if reverse { (HI, LO) } else { (LO, HI) };
    let mut tracks = vec![Track::ramp(format!("material[{material}].factors.final_factor"), (start, a), (end, b))];
    let span = end - start;
    if mode.sweeps_absorption() {
        let spacing = (span / 3).max(1) + material as i64;
        tracks.push(zigzag(format!("material[{material}].factors.absorption_factor"), start, end, spacing, !reverse));
    }
    if mode.sweeps_scattering() {
        let spacing = (span / 5).max(1) + 2 * material as i64;
        tracks.push(zigzag(format!("material[{material}].factors.scattering_factor"), start, end, spacing, reverse));
    }
    tracks
}

fn spec<T: Real>(
    name: String,
    template: TemplateName,
    frames: i64,
    tracks: Vec<Track<T>>,
    overrides: Overrides<T>,
    seed: u64,
) -> SweepSpec<T> {
    SweepSpec {
        name,
        template,
        overrides,
        start_frame: 1,
        end_frame: frames,
        tracks,
        render: RenderSettings { rng_seed: seed, ..RenderSettings::default() },
        ground_truth: GtSettings { enabled: true, mapping: GtMapping::Factors },
    }
}

fn slab_tumour_tracks<T: Real>(end: i64) -> Vec<Track<T>> {
    vec![
        Track::ramp("spheroid[0].center.x", (1, -12.0), (end, 12.0)),
        Track::ramp("spheroid[0].center.y", (1, 8.0), (end, -4.0)),
        Track::ramp("spheroid[0].center.z", (1, 0.0), (end, -1.5)),
        Track::ramp("spheroid[0].scale", (1, 0.7), (end, 1.3)),
        Track::ramp("spheroid[1].center.x", (1, 6.0), (end, -10.0)),
        Track::ramp("spheroid[1].center.y", (1, -12.0), (end, 10.0)),
        Track::ramp("spheroid[1].center.z", (1, -1.0), (end, 1.0)),
        Track::ramp("spheroid[1].scale", (1, 1.2), (end, 0.8)),
    ]
}

fn polyp_tracks<T: Real>(end: i64) -> Vec<Track<T>> {
    vec![
        Track::ramp("spheroid[0].center.z", (1, 22.0), (end, 70.0)),
        Track::ramp("spheroid[0].scale", (1, 0.6), (end, 1.4)),
        Track::ramp("spheroid[1].center.z", (1, 65.0), (end, 25.0)),
        Track::ramp("spheroid[1].scale", (1, 1.3), (end, 0.7)),
    ]
}

fn family<T: Real>(mode: FactorMode, seed: u64) -> Vec<SweepSpec<T>> {
    let end = FAMILY_FRAMES;
    let templates = [
        (TemplateName::Rectangular, 1),
        (TemplateName::RectangularCurved, 2),
        (TemplateName::RectangularRagged, 3),
        (TemplateName::RectangularTumour, 3),
    ];
    templates
        .into_iter()
        .enumerate()
        .map(|(k, (template, materials))| {
            let mut tracks: Vec<Track<T>> =
                (0..materials).flat_map(|m| factor_tracks(m, m % 2 == 1, 1, end, mode)).collect();
            if template == TemplateName::RectangularTumour {
                tracks.extend(slab_tumour_tracks(end));
            }
            spec(
                format!("{}-{}", template.as_str().replace('_', "-"), mode.as_str()),
                template,
                end,
                tracks,
                Overrides::new(),
                seed + k as u64,
            )
        })
        .collect()
}

fn cylinder<T: Real>(mode: FactorMode, seed: u64) -> Vec<SweepSpec<T>> {
    let mut bare = Overrides::new();
    bare.insert("spheroid_count".to_string(), T::zero());
    let lumen = spec(
        format!("cylinder-lumen-{}", mode.as_str()),
        TemplateName::CylinderTumour,
        LUMEN_FRAMES,
        factor_tracks(0, false, 1, LUMEN_FRAMES, mode),
        bare,
        seed,
    );
    let mut tracks = factor_tracks(0, false, 1, POLYP_FRAMES, mode);
    tracks.extend(factor_tracks(1, true, 1, POLYP_FRAMES, mode));
    tracks.extend(polyp_tracks(POLYP_FRAMES));
    let polyps = spec(
        format!("cylinder-polyps-{}", mode.as_str()),
        TemplateName::CylinderTumour,
        POLYP_FRAMES,
        tracks,
        Overrides::new(),
        seed + 1,
    );
    vec![lumen, polyps]
}

/// Named sweep bundles. `rectangular-family` gives four 50-frame sweeps
/// (200 frames), `cylinder-full` a 200-frame bare lumen plus a 120-frame
/// polyp sweep (320 frames), `rectangular-example` one 100-frame final-factor
/// ramp.
pub fn preset<T: Real>(name: &str, mode: FactorMode) -> Result<Vec<SweepSpec<T>>> {
    let seed = 20_200_000;
    match name {
        "rectangular-example" => Ok(vec![spec(
            "rectangular-example".to_string(),
            TemplateName::Rectangular,
            100,
            factor_tracks(0, false, 1, 100, mode),
            Overrides::new(),
            seed,
        )]),
        "rectangular-family" => Ok(family(mode, seed + 100)),
        "cylinder-full" => Ok(cylinder(mode, seed + 200)),
        other => Err(Error::Config(format!("unknown preset `{other}` (expected one of {})", PRESET_NAMES.join(", ")))),
    }
}
