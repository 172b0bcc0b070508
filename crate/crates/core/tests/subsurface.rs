mod common;

use rand::Rng;
use sfdi_forge::math::{Ray, Vec3};
use sfdi_forge::scene::Material;
use sfdi_forge::transport::{trace_subsurface, WalkDomain, WalkLimits, WalkOutcome, DEFAULT_STEP_CAP};

/// Medium filling `z < 0`.
struct HalfSpace;

impl WalkDomain<f64> for HalfSpace {
    fn exit_distance(&self, ray: &Ray<f64>, max: f64) -> Option<f64> {
        if ray.dir.z <= 0.0 {
            return None;
        }
        let t = -ray.origin.z / ray.dir.z;
        (t < max).then_some(t.max(0.0))
    }
}

fn material(albedo: f64, g: f64, mfp: f64) -> Material<f64> {
    let mut m = Material::from_final_factor(1.0);
    m.subsurface_albedo = albedo;
    m.hg_g = g;
    m.subsurface_mfp = mfp;
    m
}

/// Straightforward analogue walk written from the textbook recipe, sharing
/// no code with the library: returns the weight carried out of `z = 0`.
fn oracle_walk(r: &mut impl Rng, sigma_t: f64, albedo: f64, g: f64) -> f64 {
    let (u1, u2): (f64, f64) = (r.random(), r.random());
    let sin = (1.0 - u1).sqrt();
    let phi = std::f64::consts::TAU * u2;
    let mut d = [sin * phi.cos(), sin * phi.sin(), -u1.sqrt()];
    let mut z = 0.0;
    let mut w = 1.0;
    for _ in 0..DEFAULT_STEP_CAP {
        let s = -(1.0 - r.random::<f64>()).ln() / sigma_t;
        if z + s * d[2] >= 0.0 {
            return w;
        }
        z += s * d[2];
        w *= albedo;
        let xi: f64 = r.random();
        let mu = if g.abs() < 1e-3 {
            2.0 * xi - 1.0
        } else {
            let f = (1.0 - g * g) / (1.0 - g + 2.0 * g * xi);
            (1.0 + g * g - f * f) / (2.0 * g)
        };
        let psi = std::f64::consts::TAU * r.random::<f64>();
        let st = (1.0 - mu * mu).max(0.0).sqrt();
        d = if d[2].abs() > 0.99999 {
            [st * psi.cos(), st * psi.sin(), mu * d[2].signum()]
        } else {
            let k = (1.0 - d[2] * d[2]).sqrt();
            [
                st * (d[0] * d[2] * psi.cos() - d[1] * psi.sin()) / k + d[0] * mu,
                st * (d[1] * d[2] * psi.cos() + d[0] * psi.sin()) / k + d[1] * mu,
                -st * psi.cos() * k + d[2] * mu,
            ]
        };
    }
    0.0
}

fn mean_and_se(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let m = v.iter().sum::<f64>() / n;
    let var = v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0);
    (m, (var / n).sqrt())
}

fn library_escape(m: &Material<f64>, limits: &WalkLimits<f64>, n: usize, seed: u64) -> Vec<f64> {
    let mut r = common::rng(seed);
    (0..n)
        .map(|_| {
            let w = trace_subsurface(m, &HalfSpace, Vec3::zero(), Vec3::from_f64(0.0, 0.0, -1.0), 1.0, limits, &mut r);
            match w.outcome {
                WalkOutcome::Exit { ray, throughput } => {
                    assert!(ray.dir.z > 0.0 && ray.origin.z.abs() < 1e-9);
                    throughput
                }
                WalkOutcome::Absorbed { .. } => 0.0,
            }
        })
        .collect()
}

#[test]
fn diffuse_escape_matches_brute_force_walker() {
    let n = 60_000;
    for (k, (albedo, g)) in [(0.9, 0.8), (0.99, 0.0), (0.5, -0.3)].into_iter().enumerate() {
        let m = material(albedo, g, 0.5);
        let lib = mean_and_se(&library_escape(&m, &WalkLimits::without_roulette(DEFAULT_STEP_CAP), n, 10 + k as u64));
        let mut r = common::rng(900 + k as u64);
        let oracle: Vec<f64> = (0..n).map(|_| oracle_walk(&mut r, 2.0, albedo, g)).collect();
        let ora = mean_and_se(&oracle);
        let tol = 3.0 * (lib.1.powi(2) + ora.1.powi(2)).sqrt();
        assert!((lib.0 - ora.0).abs() < tol, "albedo {albedo} g {g}: library {lib:?} oracle {ora:?}");
    }
}

#[test]
fn roulette_is_unbiased() {
    let m = material(0.95, 0.7, 0.5);
    let n = 60_000;
    let plain = mean_and_se(&library_escape(&m, &WalkLimits::without_roulette(DEFAULT_STEP_CAP), n, 1));
    let limits = WalkLimits { roulette_start: 2, roulette_survival: 0.5, step_cap: DEFAULT_STEP_CAP };
    let rr_samples = library_escape(&m, &limits, n, 2);
    assert!(rr_samples.iter().all(|&w| w <= 1.0));
    let rr = mean_and_se(&rr_samples);
    let tol = 3.0 * (plain.1.powi(2) + rr.1.powi(2)).sqrt();
    assert!((plain.0 - rr.0).abs() < tol, "{plain:?} vs {rr:?}");
}

/// Records every scattering vertex of a lossless walk in an unbounded medium.
struct Probe(std::cell::RefCell<Vec<Vec3<f64>>>);

impl WalkDomain<f64> for Probe {
    fn exit_distance(&self, _ray: &Ray<f64>, _max: f64) -> Option<f64> {
        None
    }

    fn in_scatter(&self, x: Vec3<f64>, _dir: Vec3<f64>, _g: f64) -> f64 {
        self.0.borrow_mut().push(x);
        0.0
    }
}

#[test]
fn mean_free_path_matches_material() {
    let m = material(1.0, 0.0, 0.4);
    let probe = Probe(Default::default());
    let mut r = common::rng(3);
    trace_subsurface(
        &m,
        &probe,
        Vec3::zero(),
        Vec3::from_f64(0.0, 0.0, -1.0),
        1.0,
        &WalkLimits::without_roulette(200_000),
        &mut r,
    );
    let pts = probe.0.into_inner();
    let mut prev = Vec3::zero();
    let mut total = 0.0_f64;
    for p in &pts {
        total += (*p - prev).length();
        prev = *p;
    }
    let mean = total / pts.len() as f64;
    // Exponential steps have relative standard error 1/sqrt(n).
    assert!((mean - 0.4).abs() < 4.0 * 0.4 / (pts.len() as f64).sqrt(), "{mean} over {}", pts.len());
}
