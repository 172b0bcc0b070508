use rand::Rng;

use super::sampling::{sample_free_path, sample_hg};
use crate::math::{cosine_hemisphere, direction_around, Ray, Vec3};
use crate::real::Real;
use crate::scene::Material;

pub const DEFAULT_STEP_CAP: u32 = 10_000;

/// The closed body a subsurface walk is confined to.
pub trait WalkDomain<T: Real> {
    /// Distance along `ray` (starting inside the body) at which it leaves the
    /// body, if that happens before `max`.
    fn exit_distance(&self, ray: &Ray<T>, max: T) -> Option<T>;

    /// Direct light scattered at `x` back along the walk direction `dir`,
    /// per unit throughput. Domains without a light source return zero.
    fn in_scatter(&self, _x: Vec3<T>, _dir: Vec3<T>, _g: T) -> T {
        T::zero()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WalkLimits<T> {
    /// Scattering events before Russian roulette starts.
    pub roulette_start: u32,
    /// Minimum survival probability once roulette is active. 1 disables it.
    pub roulette_survival: T,
    /// Events after which a walk is terminated and counted as absorbed.
    pub step_cap: u32,
}

impl<T: Real> WalkLimits<T> {
    pub fn without_roulette(step_cap: u32) -> Self {
        Self { roulette_start: 0, roulette_survival: T::one(), step_cap }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum WalkOutcome<T> {
    Exit { ray: Ray<T>, throughput: T },
    Absorbed { capped: bool },
}

#[derive(Debug, Clone, Copy)]
pub struct WalkResult<T> {
    pub outcome: WalkOutcome<T>,
    /// Direct light gathered at the scattering events, already multiplied by
    /// the running throughput.
    pub radiance: T,
    pub events: u32,
    pub max_throughput: T,
}

/// Survival probability for roulette that never lets throughput exceed 1.
#[inline]
pub(crate) fn roulette_probability<T: Real>(throughput: T, min_survival: T) -> T {
    min_survival.max(throughput).min(T::one())
}

/// Random walk below a surface: exponential steps with mean
/// `subsurface_mfp`, Henyey–Greenstein turns, and throughput scaled by
/// `subsurface_albedo` at every event. The walk enters along a cosine-weighted
/// direction about `inward` and leaves through the body boundary without
/// refraction.
pub fn trace_subsurface<T, D, R>(
    material: &Material<T>,
    domain: &D,
    entry: Vec3<T>,
    inward: Vec3<T>,
    throughput: T,
    limits: &WalkLimits<T>,
    rng: &mut R,
) -> WalkResult<T>
where
    T: Real,
    D: WalkDomain<T> + ?Sized,
    R: Rng + ?Sized,
{
    let sigma_t = material.subsurface_sigma_t();
    let albedo = material.subsurface_albedo;
    let g = material.hg_g;
    let mut x = entry;
    let mut dir = cosine_hemisphere(inward, T::uniform(rng), T::uniform(rng));
    let mut beta = throughput;
    let mut max_beta = throughput;
    let mut radiance = T::zero();

    for event in 0..limits.step_cap {
        let s = sample_free_path(sigma_t, T::one() - T::uniform(rng));
        let step = Ray::new(x, dir);
        if let Some(t) = domain.exit_distance(&step, s) {
            return WalkResult {
                outcome: WalkOutcome::Exit { ray: Ray::new(step.at(t), dir), throughput: beta },
                radiance,
                events: event,
                max_throughput: max_beta,
            };
        }
        x = step.at(s);
        beta *= albedo;
        if beta <= T::zero() {
            return WalkResult {
                outcome: WalkOutcome::Absorbed { capped: false },
                radiance,
                events: event + 1,
                max_throughput: max_beta,
            };
        }
        radiance += beta * domain.in_scatter(x, dir, g);

        if event + 1 >= limits.roulette_start {
            let p = roulette_probability(beta, limits.roulette_survival);
            if p < T::one() {
                if T::uniform(rng) >= p {
                    return WalkResult {
                        outcome: WalkOutcome::Absorbed { capped: false },
                        radiance,
                        events: event + 1,
                        max_throughput: max_beta,
                    };
                }
                beta /= p;
            }
        }
        max_beta = max_beta.max(beta);

        let (cos_theta, phi) = sample_hg(g, T::uniform(rng), T::uniform(rng));
        dir = direction_around(dir, cos_theta, phi);
    }
    WalkResult {
        outcome: WalkOutcome::Absorbed { capped: true },
        radiance,
        events: limits.step_cap,
        max_throughput: max_beta,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    struct Unbounded;

    impl WalkDomain<f64> for Unbounded {
        fn exit_distance(&self, _ray: &Ray<f64>, _max: f64) -> Option<f64> {
            None
        }
    }

    fn material(albedo: f64) -> Material<f64> {
        let mut m = Material::from_final_factor(1.0);
        m.subsurface_albedo = albedo;
        m
    }

    #[test]
    fn zero_albedo_absorbs_at_first_event() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let limits = WalkLimits::without_roulette(DEFAULT_STEP_CAP);
        let r = trace_subsurface(
            &material(0.0),
            &Unbounded,
            Vec3::zero(),
            Vec3::from_f64(0.0, 0.0, -1.0),
            1.0,
            &limits,
            &mut rng,
        );
        assert_eq!(r.outcome, WalkOutcome::Absorbed { capped: false });
        assert_eq!(r.events, 1);
    }

    #[test]
    fn step_cap_terminates_lossless_walk() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let limits = WalkLimits::without_roulette(10);
        let r = trace_subsurface(
            &material(1.0),
            &Unbounded,
            Vec3::zero(),
            Vec3::from_f64(0.0, 0.0, -1.0),
            1.0,
            &limits,
            &mut rng,
        );
        assert_eq!(r.outcome, WalkOutcome::Absorbed { capped: true });
        assert_eq!(r.events, 10);
    }

    #[test]
    fn roulette_keeps_throughput_bounded() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let limits = WalkLimits { roulette_start: 1, roulette_survival: 0.3, step_cap: DEFAULT_STEP_CAP };
        for _ in 0..2000 {
            let r = trace_subsurface(
                &material(0.9),
                &Unbounded,
                Vec3::zero(),
                Vec3::from_f64(0.0, 0.0, -1.0),
                1.0,
                &limits,
                &mut rng,
            );
            assert!(r.max_throughput <= 1.0);
            assert!(matches!(r.outcome, WalkOutcome::Absorbed { capped: false }));
        }
    }
}
