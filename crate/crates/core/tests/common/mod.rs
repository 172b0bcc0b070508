//! Independent statistical and signal oracles shared by the integration
//! tests and the acceptance harness.
#![allow(dead_code)]

use image::RgbImage;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rustfft::{num_complex::Complex, FftPlanner};
use sfdi_forge::scene::{build_template, FacePartition, Host, Overrides, SceneTemplate, TemplateName};
use sfdi_forge::sweep::{GtMapping, GtSettings, SweepSpec, Track};
use sfdi_forge::transport::{sample_free_path, sample_hg, RenderSettings};
use sfdi_forge::Real;
use statrs::distribution::{ChiSquared, ContinuousCDF};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn scene(name: TemplateName, size: usize) -> SceneTemplate<f64> {
    scene_with(name, size, &[])
}

pub fn scene_with(name: TemplateName, size: usize, extra: &[(&str, f64)]) -> SceneTemplate<f64> {
    let mut o = Overrides::new();
    o.insert("camera.width".into(), size as f64);
    o.insert("camera.height".into(), size as f64);
    for (k, v) in extra {
        o.insert(k.to_string(), *v);
    }
    build_template(name, &o).unwrap()
}

/// CDF of the Henyey–Greenstein cosine on `[-1, 1]`.
/// Rectangular sweep moving the tumour and ramping the host's final factor.
pub fn tiny_sweep(name: &str, frames: i64, size: usize, spp: u32) -> SweepSpec<f64> {
    let mut overrides = Overrides::new();
    overrides.insert("camera.width".into(), size as f64);
    overrides.insert("camera.height".into(), size as f64);
    SweepSpec {
        name: name.into(),
        template: TemplateName::RectangularTumour,
        overrides,
        start_frame: 1,
        end_frame: frames,
        tracks: vec![
            Track::ramp("material[0].factors.final_factor", (1, 0.05), (frames, 0.95)),
            Track::ramp("spheroid[0].center.x", (1, -10.0), (frames, 10.0)),
            Track::ramp("spheroid[1].scale", (1, 0.8), (frames, 1.2)),
        ],
        render: RenderSettings { samples_per_pixel: spp, rng_seed: 77, ..RenderSettings::default() },
        ground_truth: GtSettings { enabled: true, mapping: GtMapping::Factors },
    }
}

pub fn hg_cdf(g: f64, mu: f64) -> f64 {
    if g.abs() < 1e-12 {
        return 0.5 * (mu + 1.0);
    }
    (1.0 - g * g) / (2.0 * g) * (1.0 / (1.0 + g * g - 2.0 * g * mu).sqrt() - 1.0 / (1.0 + g))
}

pub struct HgFit {
    pub chi2: f64,
    pub p_value: f64,
    pub mean_cos: f64,
    /// Standard error of the mean cosine under the analytic law.
    pub mean_se: f64,
}

/// Pearson chi-square of `n` sampled cosines against the analytic law in
/// `bins` equal-width bins.
pub fn hg_fit<T: Real>(g: f64, n: usize, bins: usize, seed: u64) -> HgFit {
    let mut r = rng(seed);
    let mut counts = vec![0u64; bins];
    let mut sum = 0.0;
    for _ in 0..n {
        let (mu, _) = sample_hg(T::lit(g), T::uniform(&mut r), T::uniform(&mut r));
        let mu = mu.as_f64();
        sum += mu;
        let b = (((mu + 1.0) * 0.5 * bins as f64) as usize).min(bins - 1);
        counts[b] += 1;
    }
    let mut chi2 = 0.0;
    for (b, &c) in counts.iter().enumerate() {
        let lo = -1.0 + 2.0 * b as f64 / bins as f64;
        let hi = -1.0 + 2.0 * (b + 1) as f64 / bins as f64;
        let expected = n as f64 * (hg_cdf(g, hi) - hg_cdf(g, lo));
        chi2 += (c as f64 - expected).powi(2) / expected;
    }
    let p_value = ChiSquared::new((bins - 1) as f64).unwrap().sf(chi2);
    // E[mu^2] for HG is (1 + 2 g^2) / 3.
    let var = (1.0 + 2.0 * g * g) / 3.0 - g * g;
    HgFit { chi2, p_value, mean_cos: sum / n as f64, mean_se: (var / n as f64).sqrt() }
}

/// Asymptotic Kolmogorov p-value for statistic `d` on `n` samples.
pub fn kolmogorov_p(d: f64, n: usize) -> f64 {
    let sn = (n as f64).sqrt();
    let lambda = (sn + 0.12 + 0.11 / sn) * d;
    let mut sum = 0.0;
    for k in 1..=100 {
        let kf = k as f64;
        let term = 2.0 * (-1f64).powi(k - 1) * (-2.0 * kf * kf * lambda * lambda).exp();
        sum += term;
        if term.abs() < 1e-12 {
            break;
        }
    }
    sum.clamp(0.0, 1.0)
}

/// One-sample KS test of sampled free paths against `1 - exp(-mu s)`.
pub fn free_path_ks(mu: f64, n: usize, seed: u64) -> (f64, f64) {
    let mut r = rng(seed);
    let mut s: Vec<f64> = (0..n).map(|_| sample_free_path(mu, 1.0 - f64::uniform(&mut r))).collect();
    s.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let nf = n as f64;
    let mut d: f64 = 0.0;
    for (i, &x) in s.iter().enumerate() {
        let f = 1.0 - (-mu * x).exp();
        d = d.max((f - i as f64 / nf).abs()).max(((i + 1) as f64 / nf - f).abs());
    }
    (d, kolmogorov_p(d, n))
}

/// Dominant non-DC frequency bin of the column profile (rows averaged).
pub fn row_fft_peak(pixels: &[f64], width: usize, height: usize) -> usize {
    let mut profile = vec![0.0; width];
    for row in pixels.chunks(width).take(height) {
        for (p, v) in profile.iter_mut().zip(row) {
            *p += v / height as f64;
        }
    }
    let mean = profile.iter().sum::<f64>() / width as f64;
    let mut buf: Vec<Complex<f64>> = profile.iter().map(|&v| Complex::new(v - mean, 0.0)).collect();
    FftPlanner::new().plan_fft_forward(width).process(&mut buf);
    (1..width / 2).max_by(|&a, &b| buf[a].norm().partial_cmp(&buf[b].norm()).unwrap()).unwrap()
}

fn ranks(v: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..v.len()).collect();
    idx.sort_by(|&a, &b| v[a].partial_cmp(&v[b]).unwrap());
    let mut r = vec![0.0; v.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && v[idx[j + 1]] == v[idx[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for k in i..=j {
            r[idx[k]] = avg;
        }
        i = j + 1;
    }
    r
}

/// Spearman rank correlation (Pearson on average ranks).
pub fn spearman(x: &[f64], y: &[f64]) -> f64 {
    let (rx, ry) = (ranks(x), ranks(y));
    let n = x.len() as f64;
    let (mx, my) = (rx.iter().sum::<f64>() / n, ry.iter().sum::<f64>() / n);
    let cov: f64 = rx.iter().zip(&ry).map(|(a, b)| (a - mx) * (b - my)).sum();
    let vx: f64 = rx.iter().map(|a| (a - mx).powi(2)).sum();
    let vy: f64 = ry.iter().map(|b| (b - my).powi(2)).sum();
    cov / (vx * vy).sqrt()
}

/// Nearest positive root of a ray against an axis-aligned ellipsoid.
pub fn ray_ellipsoid(origin: [f64; 3], dir: [f64; 3], center: [f64; 3], axes: [f64; 3]) -> Option<f64> {
    let o: Vec<f64> = (0..3).map(|i| (origin[i] - center[i]) / axes[i]).collect();
    let d: Vec<f64> = (0..3).map(|i| dir[i] / axes[i]).collect();
    let a: f64 = d.iter().map(|x| x * x).sum();
    let b: f64 = 2.0 * o.iter().zip(&d).map(|(p, q)| p * q).sum::<f64>();
    let c: f64 = o.iter().map(|x| x * x).sum::<f64>() - 1.0;
    let disc = b * b - 4.0 * a * c;
    if disc < 0.0 {
        return None;
    }
    let t = (-b - disc.sqrt()) / (2.0 * a);
    (t > 0.0).then_some(t)
}

pub fn encode(v: f64) -> u8 {
    (v * 255.0 + 0.5).floor() as u8
}

/// Expected ground truth for a slab scene with spheroids, from explicit
/// ray/plane and ray/ellipsoid algebra and the boundary cubic.
pub fn analytic_ground_truth(scene: &SceneTemplate<f64>) -> RgbImage {
    let cam = &scene.camera;
    let (w, h) = (cam.width, cam.height);
    let tan = (cam.fov_deg.to_radians() / 2.0).tan();
    let (half_w, half_d, curve) = match &scene.host {
        Host::Slab { slab, partition: FacePartition::Curve(c) } => (slab.size.x / 2.0, slab.size.y / 2.0, c.clone()),
        _ => panic!("slab with curve partition expected"),
    };
    let colour = |id: usize| {
        let m = &scene.materials[id];
        image::Rgb([encode(m.gt_absorption), encode(m.gt_scattering), 0])
    };
    RgbImage::from_fn(w as u32, h as u32, |i, j| {
        let sx = (2.0 * (i as f64 + 0.5) / w as f64 - 1.0) * tan;
        let sy = (1.0 - 2.0 * (j as f64 + 0.5) / h as f64) * tan * h as f64 / w as f64;
        let d = cam.forward + cam.right * sx + cam.up * sy;
        let d = d * (1.0 / d.length());
        let o = cam.position;
        let t_top = -o.z / d.z;
        let hit = o + d * t_top;
        let on_face = t_top > 0.0 && hit.x.abs() <= half_w && hit.y.abs() <= half_d;
        let mut best: Option<(f64, usize)> = None;
        for s in &scene.spheroids {
            let axes = s.semi_axes * s.scale;
            if let Some(t) = ray_ellipsoid(
                [o.x, o.y, o.z],
                [d.x, d.y, d.z],
                [s.center.x, s.center.y, s.center.z],
                [axes.x, axes.y, axes.z],
            ) {
                if best.is_none_or(|(bt, _)| t < bt) {
                    best = Some((t, s.material));
                }
            }
        }
        match best {
            Some((t, id)) if !on_face || t < t_top => colour(id),
            _ if on_face => {
                let y_curve =
                    curve.coeffs[0] + hit.x * (curve.coeffs[1] + hit.x * (curve.coeffs[2] + hit.x * curve.coeffs[3]));
                colour(curve.materials[usize::from(hit.y >= y_curve)])
            }
            _ => image::Rgb([0, 0, 0]),
        }
    })
}
