use std::time::Instant;

use image::RgbImage;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::sampling::{sample_interaction, straight_transmittance, InteractionKind};
use super::subsurface::{
    roulette_probability, trace_subsurface, WalkDomain, WalkLimits, WalkOutcome, DEFAULT_STEP_CAP,
};
use crate::error::{Error, Result};
use crate::illumination::illuminate;
use crate::math::{cosine_hemisphere, fresnel_dielectric, reflect, refract, Ray, Vec3};
use crate::real::Real;
use crate::rng::pixel_rng;
use crate::scene::{BodyId, SceneTemplate};
use crate::transport::sampling::hg_phase;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real", default)]
pub struct RenderSettings<T> {
    pub samples_per_pixel: u32,
    /// Surface events and backdrop bounces per camera path.
    pub max_bounces: u32,
    /// Events (bounces or walk steps) before Russian roulette starts.
    pub roulette_start: u32,
    pub roulette_survival: T,
    pub rng_seed: u64,
    pub tile_size: usize,
    pub walk_step_cap: u32,
    /// Radiance-to-pixel scale; `None` uses the scene's reference exposure.
    pub exposure: Option<T>,
}

impl<T: Real> Default for RenderSettings<T> {
    fn default() -> Self {
        Self {
            samples_per_pixel: 512,
            max_bounces: 32,
            roulette_start: 8,
            roulette_survival: T::lit(0.75),
            rng_seed: 0,
            tile_size: 16,
            walk_step_cap: DEFAULT_STEP_CAP,
            exposure: None,
        }
    }
}

impl<T: Real> RenderSettings<T> {
    pub fn with_spp(samples_per_pixel: u32, rng_seed: u64) -> Self {
        Self { samples_per_pixel, rng_seed, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if self.samples_per_pixel == 0 {
            return Err(Error::invalid("render.samples_per_pixel", "must be >= 1"));
        }
        if !(self.roulette_survival > T::zero() && self.roulette_survival <= T::one()) {
            return Err(Error::invalid("render.roulette_survival", "must lie in (0, 1]"));
        }
        if self.tile_size == 0 {
            return Err(Error::invalid("render.tile_size", "must be >= 1"));
        }
        if self.max_bounces == 0 {
            return Err(Error::invalid("render.max_bounces", "must be >= 1"));
        }
        if self.walk_step_cap == 0 {
            return Err(Error::invalid("render.walk_step_cap", "must be >= 1"));
        }
        if let Some(e) = self.exposure {
            if !(e > T::zero()) || !e.is_finite() {
                return Err(Error::invalid("render.exposure", "must be a positive finite scale"));
            }
        }
        Ok(())
    }

    fn walk_limits(&self) -> WalkLimits<T> {
        WalkLimits {
            roulette_start: self.roulette_start,
            roulette_survival: self.roulette_survival,
            step_cap: self.walk_step_cap,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct RenderStats {
    pub paths: u64,
    pub walks: u64,
    pub walk_events: u64,
    /// Walks terminated by the step cap and counted as absorbed.
    pub cap_terminations: u64,
    /// Largest path throughput seen anywhere; never exceeds 1.
    pub max_throughput: f64,
    pub seconds: f64,
}

impl RenderStats {
    fn merge(&mut self, o: &RenderStats) {
        self.paths += o.paths;
        self.walks += o.walks;
        self.walk_events += o.walk_events;
        self.cap_terminations += o.cap_terminations;
        self.max_throughput = self.max_throughput.max(o.max_throughput);
    }
}

/// Linear lit render: exposure-scaled radiance per pixel, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Render<T> {
    pub width: usize,
    pub height: usize,
    pub pixels: Vec<T>,
    pub stats: RenderStats,
}

impl<T: Real> Render<T> {
    pub fn mean(&self) -> T {
        let sum = self.pixels.iter().fold(T::zero(), |a, &b| a + b);
        sum / T::from_usize(self.pixels.len()).unwrap()
    }

    /// 8-bit linear RGB; the material model is achromatic so all channels match.
    pub fn to_rgb8(&self) -> RgbImage {
        let mut img = RgbImage::new(self.width as u32, self.height as u32);
        for (px, &v) in img.pixels_mut().zip(&self.pixels) {
            let q = quantize(v);
            px.0 = [q, q, q];
        }
        img
    }
}

/// Clamps to `[0, 1]` and rounds `v * 255` half away from zero. No tone curve.
#[inline]
pub fn quantize<T: Real>(v: T) -> u8 {
    let c = if v.is_nan() { T::zero() } else { v.max(T::zero()).min(T::one()) };
    (c * T::lit(255.0)).round().to_u8().unwrap_or(255)
}

/// Renders on the current rayon pool.
pub fn render<T: Real>(scene: &SceneTemplate<T>, settings: &RenderSettings<T>) -> Result<Render<T>> {
    scene.validate()?;
    settings.validate()?;
    let start = Instant::now();
    let (w, h) = (scene.camera.width, scene.camera.height);
    let ts = settings.tile_size;
    let tiles: Vec<(usize, usize)> =
        (0..h.div_ceil(ts)).flat_map(|ty| (0..w.div_ceil(ts)).map(move |tx| (tx, ty))).collect();
    let exposure = settings.exposure.unwrap_or_else(|| scene.reference_exposure());
    let tracer = Tracer { scene, settings, limits: settings.walk_limits() };

    let results: Vec<(Vec<(usize, T)>, RenderStats)> = tiles
        .par_iter()
        .map(|&(tx, ty)| {
            let mut stats = RenderStats::default();
            let mut out = Vec::with_capacity(ts * ts);
            for j in ty * ts..((ty + 1) * ts).min(h) {
                for i in tx * ts..((tx + 1) * ts).min(w) {
                    let index = j * w + i;
                    out.push((index, tracer.pixel(i, j, index, &mut stats) * exposure));
                }
            }
            (out, stats)
        })
        .collect();

    let mut pixels = vec![T::zero(); w * h];
    let mut stats = RenderStats::default();
    for (tile, s) in &results {
        for &(index, v) in tile {
            pixels[index] = v;
        }
        stats.merge(s);
    }
    stats.seconds = start.elapsed().as_secs_f64();
    Ok(Render { width: w, height: h, pixels, stats })
}

/// Renders on a dedicated pool of `workers` threads. The image does not
/// depend on `workers`.
pub fn render_on<T: Real>(scene: &SceneTemplate<T>, settings: &RenderSettings<T>, workers: usize) -> Result<Render<T>> {
    with_workers(workers, || render(scene, settings))?
}

/// Runs `f` inside a rayon pool of `workers` threads (at least one).
pub fn with_workers<R: Send>(workers: usize, f: impl FnOnce() -> R + Send) -> Result<R> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    Ok(pool.install(f))
}

struct Tracer<'a, T> {
    scene: &'a SceneTemplate<T>,
    settings: &'a RenderSettings<T>,
    limits: WalkLimits<T>,
}

/// Subsurface walk confined to one scene body, lit by the projector.
struct SceneWalk<'a, T> {
    scene: &'a SceneTemplate<T>,
    body: BodyId,
    sigma_t: T,
}

impl<T: Real> WalkDomain<T> for SceneWalk<'_, T> {
    fn exit_distance(&self, ray: &Ray<T>, max: T) -> Option<T> {
        self.scene.next_boundary(ray, T::zero(), max).map(|c| c.t)
    }

    fn in_scatter(&self, x: Vec3<T>, dir: Vec3<T>, g: T) -> T {
        let Some(light) = illuminate(&self.scene.projector, x) else {
            return T::zero();
        };
        if light.irradiance <= T::zero() {
            return T::zero();
        }
        let phase = hg_phase(g, dir.dot(light.to_light));
        let tr = shadow_transmittance(self.scene, x, light.to_light, light.distance, Some((self.body, self.sigma_t)));
        phase * light.irradiance * tr
    }
}

/// Fraction of projector light reaching `x` along the straight line toward
/// the source. Inside the walk body the subsurface extinction applies; every
/// other surface crossed contributes its straight-line transmittance; the
/// opaque backdrop blocks.
pub fn shadow_transmittance<T: Real>(
    scene: &SceneTemplate<T>,
    x: Vec3<T>,
    to_light: Vec3<T>,
    distance: T,
    walk: Option<(BodyId, T)>,
) -> T {
    let ray = Ray::new(x, to_light);
    let eps = T::geom_eps();
    let mut current = scene.body_at(x);
    let mut t_prev = T::zero();
    let mut tr = T::one();
    loop {
        let crossing = scene.next_boundary(&ray, t_prev, distance);
        let seg_end = crossing.map_or(distance, |c| c.t);
        if let Some((body, sigma_t)) = walk {
            if current == body {
                tr *= (-sigma_t * (seg_end - t_prev)).exp();
            }
        }
        let Some(c) = crossing else {
            return tr;
        };
        if c.to == BodyId::Backdrop {
            return T::zero();
        }
        let leaving_walk = walk.is_some_and(|(body, _)| c.from == body);
        if !leaving_walk {
            let entering = c.to.is_sample();
            let material = if entering {
                scene.material_in(c.to, c.point + to_light * eps)
            } else {
                scene.material_in(c.from, c.point - to_light * eps)
            };
            if let Some(id) = material {
                let m = scene.material(id);
                let eta = if entering { m.ior.recip() } else { m.ior };
                let r = fresnel_dielectric(to_light.dot(c.normal).abs(), eta);
                tr *= straight_transmittance(m, r);
            }
        }
        if tr <= T::zero() {
            return T::zero();
        }
        current = c.to;
        t_prev = c.t;
    }
}

impl<T: Real> Tracer<'_, T> {
    fn pixel(&self, i: usize, j: usize, index: usize, stats: &mut RenderStats) -> T {
        let spp = self.settings.samples_per_pixel;
        let mut rng = pixel_rng(self.settings.rng_seed, index as u64);
        let mut sum = T::zero();
        for s in 0..spp {
            rng.set_stream(s as u64);
            rng.set_word_pos(0);
            let px = T::from_usize(i).unwrap() + T::uniform(&mut rng);
            let py = T::from_usize(j).unwrap() + T::uniform(&mut rng);
            let ray = self.scene.camera.ray_through(px, py);
            sum += self.trace(ray, &mut rng, stats);
        }
        sum / T::from_u32(spp).unwrap()
    }

    fn trace(&self, mut ray: Ray<T>, rng: &mut ChaCha8Rng, stats: &mut RenderStats) -> T {
        let scene = self.scene;
        let eps = T::geom_eps();
        let mut beta = T::one();
        let mut radiance = T::zero();
        stats.paths += 1;
        stats.max_throughput = stats.max_throughput.max(beta.as_f64());

        for bounce in 0..self.settings.max_bounces {
            let Some(c) = scene.next_boundary(&ray, eps, T::infinity()) else {
                break;
            };

            if c.to == BodyId::Backdrop {
                let Some(backdrop) = scene.backdrop.as_ref() else { break };
                let n = c.normal;
                let origin = c.point + n * eps;
                if let Some(light) = illuminate(&scene.projector, origin) {
                    let cos = n.dot(light.to_light);
                    if cos > T::zero() && light.irradiance > T::zero() {
                        let tr = shadow_transmittance(scene, origin, light.to_light, light.distance, None);
                        radiance += beta * backdrop.albedo * T::FRAC_1_PI() * cos * light.irradiance * tr;
                    }
                }
                beta *= backdrop.albedo;
                ray = Ray::new(origin, cosine_hemisphere(n, T::uniform(rng), T::uniform(rng)));
            } else {
                let entering = c.to.is_sample();
                let (body, probe) =
                    if entering { (c.to, c.point + ray.dir * eps) } else { (c.from, c.point - ray.dir * eps) };
                let Some(material_id) = scene.material_in(body, probe) else { break };
                let material = scene.material(material_id);
                let event = sample_interaction(material, T::uniform(rng), T::uniform(rng));
                match event.kind {
                    InteractionKind::TransparentPass => {
                        ray = Ray::new(c.point, ray.dir);
                    }
                    InteractionKind::Refract => {
                        beta *= event.throughput_multiplier;
                        if beta <= T::zero() {
                            break;
                        }
                        let n = c.normal;
                        let eta = if entering { material.ior.recip() } else { material.ior };
                        let r = fresnel_dielectric(ray.dir.dot(n), eta);
                        let refracted = if T::uniform(rng) < r { None } else { refract(ray.dir, n, eta) };
                        ray = match refracted {
                            Some(d) => Ray::new(c.point - n * eps, d),
                            None => Ray::new(c.point + n * eps, reflect(ray.dir, n)),
                        };
                    }
                    InteractionKind::SubsurfaceScatter => {
                        let inward = if entering { -c.normal } else { c.normal };
                        let domain = SceneWalk { scene, body, sigma_t: material.subsurface_sigma_t() };
                        let walk = trace_subsurface(
                            material,
                            &domain,
                            c.point + inward * eps,
                            inward,
                            beta,
                            &self.limits,
                            rng,
                        );
                        stats.walks += 1;
                        stats.walk_events += u64::from(walk.events);
                        stats.max_throughput = stats.max_throughput.max(walk.max_throughput.as_f64());
                        radiance += walk.radiance;
                        match walk.outcome {
                            WalkOutcome::Exit { ray: exit, throughput } => {
                                beta = throughput;
                                ray = exit;
                            }
                            WalkOutcome::Absorbed { capped } => {
                                stats.cap_terminations += u64::from(capped);
                                break;
                            }
                        }
                    }
                    InteractionKind::Absorbed => break,
                }
            }

            if beta <= T::zero() {
                break;
            }
            if bounce + 1 >= self.settings.roulette_start {
                let p = roulette_probability(beta, self.settings.roulette_survival);
                if p < T::one() {
                    if rng.random::<f64>() >= p.as_f64() {
                        break;
                    }
                    beta /= p;
                }
            }
            stats.max_throughput = stats.max_throughput.max(beta.as_f64());
        }
        radiance
    }
}
