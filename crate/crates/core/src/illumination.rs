//! Sinusoidal structured illumination and the projector emission model.
//!
//! Both projection models distribute emitted flux uniformly over the pattern
//! rectangle on the reference plane, weighted by the pattern intensity. The
//! forward emission ([`emit_ray`]) and the irradiance seen by a point in the
//! scene ([`illuminate`]) are two views of the same distribution.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::math::{Ray, Vec3};
use crate::real::Real;
use crate::scene::{ProjectionModel, Projector};

pub const DEFAULT_FREQUENCY: f64 = 0.2;
pub const VALIDATION_FREQUENCIES: [f64; 2] = [0.18, 0.22];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct SinusoidalPattern<T> {
    /// Cycles per mm on the reference plane.
    pub spatial_frequency: T,
    /// Radians.
    pub phase: T,
    /// Unit 2-vector in pattern-plane coordinates.
    pub orientation: [T; 2],
    pub dc_level: T,
    pub modulation_depth: T,
}

impl<T: Real> Default for SinusoidalPattern<T> {
    fn default() -> Self {
        Self::with_frequency(T::lit(DEFAULT_FREQUENCY))
    }
}

impl<T: Real> SinusoidalPattern<T> {
    pub fn with_frequency(spatial_frequency: T) -> Self {
        Self {
            spatial_frequency,
            phase: T::zero(),
            orientation: [T::one(), T::zero()],
            dc_level: T::lit(0.5),
            modulation_depth: T::lit(0.5),
        }
    }

    pub fn uniform(level: T) -> Self {
        Self { dc_level: level, modulation_depth: T::zero(), ..Self::default() }
    }

    pub fn period(&self) -> T {
        self.spatial_frequency.recip()
    }

    /// Orientation expressed as an angle from the pattern u axis, degrees.
    pub fn orientation_deg(&self) -> T {
        self.orientation[1].atan2(self.orientation[0]).to_degrees()
    }

    pub fn set_orientation_deg(&mut self, deg: T) {
        let r = deg.to_radians();
        self.orientation = [r.cos(), r.sin()];
    }

    pub fn validate(&self, path: &str) -> Result<()> {
        let f = self.spatial_frequency;
        if !(f > T::zero()) || !f.is_finite() {
            return Err(Error::invalid(
                format!("{path}.frequency"),
                format!("spatial frequency must be > 0 mm^-1, got {f}"),
            ));
        }
        if !self.phase.is_finite() {
            return Err(Error::invalid(format!("{path}.phase"), "non-finite phase"));
        }
        let unit =
            (T::zero()..=T::one()).contains(&self.dc_level) && (T::zero()..=T::one()).contains(&self.modulation_depth);
        if !unit {
            return Err(Error::invalid(format!("{path}.dc_level"), "dc level and modulation depth must lie in [0, 1]"));
        }
        if self.dc_level + self.modulation_depth > T::one() + T::epsilon() {
            return Err(Error::invalid(
                format!("{path}.modulation_depth"),
                format!("dc + depth must be <= 1, got {}", self.dc_level + self.modulation_depth),
            ));
        }
        let [ou, ov] = self.orientation;
        if ((ou * ou + ov * ov).sqrt() - T::one()).abs() > T::lit(1e-6) {
            return Err(Error::invalid(format!("{path}.orientation"), "orientation must be a unit vector"));
        }
        Ok(())
    }
}

/// Pattern intensity in `[0, 1]` at pattern-plane coordinates `(u, v)` mm.
#[inline]
pub fn pattern_intensity<T: Real>(pattern: &SinusoidalPattern<T>, u: T, v: T) -> T {
    let [ou, ov] = pattern.orientation;
    let arg = T::TAU() * pattern.spatial_frequency * (u * ou + v * ov) + pattern.phase;
    pattern.dc_level + pattern.modulation_depth * arg.cos()
}

/// Mean intensity over the projector's pattern rectangle by midpoint quadrature.
pub fn mean_pattern_intensity<T: Real>(projector: &Projector<T>, cells: usize) -> T {
    let (hu, hv) = projector.half_extent();
    let n = T::from_usize(cells).unwrap();
    let mut acc = T::zero();
    for i in 0..cells {
        for j in 0..cells {
            let u = -hu + (T::from_usize(i).unwrap() + T::lit(0.5)) * hu * T::lit(2.0) / n;
            let v = -hv + (T::from_usize(j).unwrap() + T::lit(0.5)) * hv * T::lit(2.0) / n;
            acc += pattern_intensity(&projector.pattern, u, v);
        }
    }
    acc / (n * n)
}

#[derive(Debug, Clone, Copy)]
pub struct EmittedRay<T> {
    pub ray: Ray<T>,
    /// Launch weight, W. Averages to `power x mean intensity`.
    pub weight: T,
    /// Pattern-plane coordinates of the launch, mm.
    pub uv: (T, T),
}

/// Launches one projector ray from two uniform draws.
pub fn emit_ray<T: Real>(projector: &Projector<T>, xi1: T, xi2: T) -> EmittedRay<T> {
    let (hu, hv) = projector.half_extent();
    let two = T::lit(2.0);
    let u = (two * xi1 - T::one()) * hu;
    let v = (two * xi2 - T::one()) * hv;
    let weight = projector.power * pattern_intensity(&projector.pattern, u, v);
    let ray = match projector.model {
        ProjectionModel::Orthographic { .. } => {
            Ray::new(projector.position + projector.right * u + projector.up * v, projector.forward)
        }
        ProjectionModel::Perspective { reference_distance, .. } => {
            let dir = projector.forward * reference_distance + projector.right * u + projector.up * v;
            Ray::new(projector.position, dir.normalized())
        }
    };
    EmittedRay { ray, weight, uv: (u, v) }
}

/// Where a world point falls on the projector's reference plane, if it lies
/// inside the projected frustum.
pub fn pattern_coordinates<T: Real>(projector: &Projector<T>, x: Vec3<T>) -> Option<(T, T)> {
    let local = x - projector.position;
    let depth = local.dot(projector.forward);
    if depth <= T::zero() {
        return None;
    }
    let (hu, hv) = projector.half_extent();
    let (u, v) = match projector.model {
        ProjectionModel::Orthographic { .. } => (local.dot(projector.right), local.dot(projector.up)),
        ProjectionModel::Perspective { reference_distance, .. } => {
            let s = reference_distance / depth;
            (local.dot(projector.right) * s, local.dot(projector.up) * s)
        }
    };
    (u.abs() <= hu && v.abs() <= hv).then_some((u, v))
}

/// Direct illumination arriving at a point from the projector.
#[derive(Debug, Clone, Copy)]
pub struct LightSample<T> {
    /// Unit vector from the point toward the source.
    pub to_light: Vec3<T>,
    /// Distance to travel along `to_light` before leaving the scene toward the
    /// source, mm.
    pub distance: T,
    /// Irradiance on a plane normal to the beam, W/mm².
    pub irradiance: T,
}

pub fn illuminate<T: Real>(projector: &Projector<T>, x: Vec3<T>) -> Option<LightSample<T>> {
    let (u, v) = pattern_coordinates(projector, x)?;
    let flux_density = projector.power * pattern_intensity(&projector.pattern, u, v) / projector.pattern_area();
    match projector.model {
        ProjectionModel::Orthographic { .. } => {
            let depth = (x - projector.position).dot(projector.forward);
            Some(LightSample { to_light: -projector.forward, distance: depth, irradiance: flux_density })
        }
        ProjectionModel::Perspective { reference_distance, .. } => {
            let w = projector.position - x;
            let r = w.length();
            let to_light = w * r.recip();
            let cos_a = -to_light.dot(projector.forward);
            // Radiant intensity of the plane-uniform flux, divided by r².
            let intensity = flux_density * reference_distance * reference_distance / (cos_a * cos_a * cos_a);
            Some(LightSample { to_light, distance: r, irradiance: intensity / (r * r) })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ortho(pattern: SinusoidalPattern<f64>) -> Projector<f64> {
        Projector::new(
            Vec3::from_f64(0.0, 0.0, 120.0),
            Vec3::from_f64(0.0, 0.0, -1.0),
            Vec3::from_f64(0.0, 1.0, 0.0),
            pattern,
            ProjectionModel::Orthographic { width: 60.0, height: 60.0 },
        )
    }

    #[test]
    fn intensity_extremes() {
        let p = SinusoidalPattern::<f64>::default();
        assert_eq!(pattern_intensity(&p, 0.0, 0.0), 1.0);
        assert!((pattern_intensity(&p, 2.5, 0.0) - 0.0).abs() < 1e-15);
        assert!((pattern_intensity(&p, 5.0, 3.0) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn dark_pattern_emits_nothing() {
        let proj = ortho(SinusoidalPattern::uniform(0.0));
        for k in 0..100 {
            let e = emit_ray(&proj, k as f64 / 100.0, 0.37);
            assert_eq!(e.weight, 0.0);
        }
    }

    #[test]
    fn illumination_matches_emission_density() {
        // Orthographic irradiance equals power * intensity / area.
        let proj = ortho(SinusoidalPattern::uniform(1.0));
        let s = illuminate(&proj, Vec3::from_f64(3.0, -2.0, 0.0)).unwrap();
        assert!((s.irradiance - 3.5 / 3600.0).abs() < 1e-15);
        assert!((s.distance - 120.0).abs() < 1e-12);
        assert!(illuminate(&proj, Vec3::from_f64(31.0, 0.0, 0.0)).is_none());
        assert!(illuminate(&proj, Vec3::from_f64(0.0, 0.0, 130.0)).is_none());
    }

    #[test]
    fn rejects_bad_patterns() {
        let mut p = SinusoidalPattern::<f64>::with_frequency(-1.0);
        assert!(p.validate("pattern").unwrap_err().to_string().contains("pattern.frequency"));
        p = SinusoidalPattern::default();
        p.dc_level = 0.7;
        assert!(p.validate("pattern").is_err());
    }
}
