use serde::{Deserialize, Serialize};

use crate::real::Real;
use crate::scene::Material;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InteractionKind {
    TransparentPass,
    Refract,
    Absorbed,
    SubsurfaceScatter,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InteractionEvent<T> {
    pub kind: InteractionKind,
    pub throughput_multiplier: T,
}

impl<T: Real> InteractionEvent<T> {
    pub fn transparent() -> Self {
        Self { kind: InteractionKind::TransparentPass, throughput_multiplier: T::one() }
    }

    pub fn absorbed() -> Self {
        Self { kind: InteractionKind::Absorbed, throughput_multiplier: T::zero() }
    }
}

/// Picks one lobe of the mixed material at a surface hit.
///
/// `xi1` selects the component (scattering with probability `final_factor`),
/// `xi2` selects the lobe within it: subsurface with probability
/// `scattering_factor` in the scattering component, refraction with
/// probability one half in the absorbing component.
#[inline]
pub fn sample_interaction<T: Real>(material: &Material<T>, xi1: T, xi2: T) -> InteractionEvent<T> {
    let f = &material.factors;
    if xi1 < f.final_factor {
        if xi2 < f.scattering_factor {
            InteractionEvent { kind: InteractionKind::SubsurfaceScatter, throughput_multiplier: T::one() }
        } else {
            InteractionEvent::transparent()
        }
    } else if xi2 < T::lit(0.5) {
        InteractionEvent::transparent()
    } else {
        InteractionEvent { kind: InteractionKind::Refract, throughput_multiplier: f.absorption_factor }
    }
}

/// Probability that a straight line crosses a surface of this material
/// without changing direction, used on light-connection rays. Refraction is
/// counted as non-deviating with Fresnel transmission.
#[inline]
pub fn straight_transmittance<T: Real>(material: &Material<T>, fresnel_reflectance: T) -> T {
    let f = &material.factors;
    let half = T::lit(0.5);
    let one = T::one();
    let scattering_part = f.final_factor * (one - f.scattering_factor);
    let absorbing_part = (one - f.final_factor) * (half + half * f.absorption_factor * (one - fresnel_reflectance));
    scattering_part + absorbing_part
}

/// Henyey–Greenstein scattering cosine and azimuth by CDF inversion.
///
/// `cos_theta` increases monotonically with `xi1`, from -1 at 0 to +1 at 1.
#[inline]
pub fn sample_hg<T: Real>(g: T, xi1: T, xi2: T) -> (T, T) {
    let one = T::one();
    let two = T::lit(2.0);
    let cos_theta = if g.abs() < T::lit(1e-3) {
        two * xi1 - one
    } else {
        let g2 = g * g;
        let s = (one - g2) / (one - g + two * g * xi1);
        ((one + g2 - s * s) / (two * g)).max(-one).min(one)
    };
    (cos_theta, T::TAU() * xi2)
}

/// Henyey–Greenstein density per steradian.
#[inline]
pub fn hg_phase<T: Real>(g: T, cos_theta: T) -> T {
    let one = T::one();
    let g2 = g * g;
    let denom = one + g2 - T::lit(2.0) * g * cos_theta;
    (one - g2) / (T::lit(4.0) * T::PI() * denom * denom.sqrt())
}

/// Exponential free path `-ln(xi) / sigma_t`; infinite in a non-interacting medium.
#[inline]
pub fn sample_free_path<T: Real>(sigma_t: T, xi: T) -> T {
    if sigma_t <= T::zero() {
        T::infinity()
    } else {
        -xi.ln() / sigma_t
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scene::FactorTriple;

    fn mat(f: f64, a: f64, s: f64) -> Material<f64> {
        Material::new(FactorTriple::new(f, a, s), 0.5, 0.5)
    }

    #[test]
    fn pure_scatter_always_subsurface() {
        let m = mat(1.0, 1.0, 1.0);
        for i in 0..50 {
            for j in 0..50 {
                let e = sample_interaction(&m, i as f64 / 50.0, j as f64 / 50.0);
                assert_eq!(e.kind, InteractionKind::SubsurfaceScatter);
            }
        }
    }

    #[test]
    fn black_absorber_refracts_to_zero() {
        let m = mat(0.0, 0.0, 1.0);
        let e = sample_interaction(&m, 0.3, 0.5);
        assert_eq!(e.kind, InteractionKind::Refract);
        assert_eq!(e.throughput_multiplier, 0.0);
        let e = sample_interaction(&m, 0.3, 0.49);
        assert_eq!(e, InteractionEvent::transparent());
    }

    #[test]
    fn straight_transmittance_limits() {
        assert_eq!(straight_transmittance(&mat(1.0, 1.0, 1.0), 0.0), 0.0);
        assert_eq!(straight_transmittance(&mat(1.0, 1.0, 0.0), 0.0), 1.0);
        assert_eq!(straight_transmittance(&mat(0.0, 0.0, 1.0), 0.03), 0.5);
        assert_eq!(straight_transmittance(&mat(0.0, 1.0, 1.0), 0.0), 1.0);
    }

    #[test]
    fn hg_examples() {
        assert_eq!(sample_hg(0.0, 0.5, 0.0).0, 0.0);
        assert!((sample_hg(0.9_f64, 0.0, 0.0).0 + 1.0).abs() < 1e-12);
        assert!((sample_hg(0.9_f64, 1.0 - 1e-15, 0.0).0 - 1.0).abs() < 1e-9);
        let (_, phi) = sample_hg(0.5, 0.3, 0.25);
        assert!((phi - std::f64::consts::FRAC_PI_2).abs() < 1e-12);
    }

    #[test]
    fn hg_phase_normalises() {
        // Midpoint quadrature over cos(theta) of 2*pi*p.
        for g in [0.0, 0.5, 0.9, -0.3] {
            let n = 200_000;
            let total: f64 = (0..n)
                .map(|i| {
                    let mu = -1.0 + (i as f64 + 0.5) * 2.0 / n as f64;
                    std::f64::consts::TAU * hg_phase(g, mu) * 2.0 / n as f64
                })
                .sum();
            assert!((total - 1.0).abs() < 1e-4, "g={g} total={total}");
        }
    }

    #[test]
    fn free_path_examples() {
        assert!((sample_free_path(1.0_f64, (-2.0_f64).exp()) - 2.0).abs() < 1e-12);
        assert!(sample_free_path(0.0_f64, 0.3).is_infinite());
    }
}
