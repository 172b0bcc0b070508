use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::illumination::SinusoidalPattern;
use crate::math::{Ray, Vec3};
use crate::real::Real;

pub const DEFAULT_RESOLUTION: usize = 256;
pub const DEFAULT_POWER_W: f64 = 3.5;

fn basis_tolerance<T: Real>() -> T {
    T::lit(1e-9).max(T::epsilon() * T::lit(64.0))
}

fn orthonormal_basis<T: Real>(forward: Vec3<T>, up_hint: Vec3<T>) -> (Vec3<T>, Vec3<T>, Vec3<T>) {
    let forward = forward.normalized();
    let right = forward.cross(up_hint).normalized();
    let up = right.cross(forward);
    (forward, right, up)
}

fn check_basis<T: Real>(path: &str, f: Vec3<T>, r: Vec3<T>, u: Vec3<T>) -> Result<()> {
    let tol = basis_tolerance::<T>();
    let one = T::one();
    let worst = [
        (f.length() - one).abs(),
        (r.length() - one).abs(),
        (u.length() - one).abs(),
        f.dot(r).abs(),
        f.dot(u).abs(),
        r.dot(u).abs(),
    ]
    .into_iter()
    .fold(T::zero(), T::max);
    if worst <= tol && worst.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid(format!("{path}.orientation"), format!("basis not orthonormal (error {worst})")))
    }
}

/// Pinhole camera. `fov_deg` is the horizontal field of view.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct Camera<T> {
    pub position: Vec3<T>,
    pub forward: Vec3<T>,
    pub right: Vec3<T>,
    pub up: Vec3<T>,
    pub fov_deg: T,
    pub width: usize,
    pub height: usize,
}

impl<T: Real> Camera<T> {
    pub fn looking(position: Vec3<T>, forward: Vec3<T>, up_hint: Vec3<T>, fov_deg: T) -> Self {
        let (forward, right, up) = orthonormal_basis(forward, up_hint);
        Self { position, forward, right, up, fov_deg, width: DEFAULT_RESOLUTION, height: DEFAULT_RESOLUTION }
    }

    /// Ray through continuous image coordinates; `(0, 0)` is the top-left
    /// corner and pixel `(i, j)` spans `[i, i+1) x [j, j+1)`.
    #[inline]
    pub fn ray_through(&self, px: T, py: T) -> Ray<T> {
        let two = T::lit(2.0);
        let w = T::from_usize(self.width).unwrap();
        let h = T::from_usize(self.height).unwrap();
        let tan_half = (self.fov_deg.to_radians() * T::lit(0.5)).tan();
        let sx = (two * px / w - T::one()) * tan_half;
        let sy = (T::one() - two * py / h) * tan_half * h / w;
        let dir = (self.forward + self.right * sx + self.up * sy).normalized();
        Ray::new(self.position, dir)
    }

    pub fn pixel_center_ray(&self, i: usize, j: usize) -> Ray<T> {
        let half = T::lit(0.5);
        self.ray_through(T::from_usize(i).unwrap() + half, T::from_usize(j).unwrap() + half)
    }

    pub fn validate(&self) -> Result<()> {
        if self.width == 0 || self.height == 0 {
            return Err(Error::invalid("camera.resolution", format!("zero-area image {}x{}", self.width, self.height)));
        }
        if !(self.fov_deg > T::zero() && self.fov_deg < T::lit(180.0)) {
            return Err(Error::invalid(
                "camera.fov",
                format!("field of view must lie in (0, 180) degrees, got {}", self.fov_deg),
            ));
        }
        if !self.position.is_finite() {
            return Err(Error::invalid("camera.position", "non-finite position"));
        }
        check_basis("camera", self.forward, self.right, self.up)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real", rename_all = "snake_case")]
pub enum ProjectionModel<T> {
    /// Parallel rays launched from a `width x height` mm rectangle.
    Orthographic { width: T, height: T },
    /// Rays from the projector apex through a square virtual pattern plane at
    /// `reference_distance` mm, spanning the full `throw_angle_deg`.
    Perspective { throw_angle_deg: T, reference_distance: T },
}

/// Structured-light source: a pattern carried by a projection model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct Projector<T> {
    pub position: Vec3<T>,
    pub forward: Vec3<T>,
    pub right: Vec3<T>,
    pub up: Vec3<T>,
    /// Radiant power, W.
    pub power: T,
    pub pattern: SinusoidalPattern<T>,
    pub model: ProjectionModel<T>,
}

impl<T: Real> Projector<T> {
    pub fn new(
        position: Vec3<T>,
        forward: Vec3<T>,
        up_hint: Vec3<T>,
        pattern: SinusoidalPattern<T>,
        model: ProjectionModel<T>,
    ) -> Self {
        let (forward, right, up) = orthonormal_basis(forward, up_hint);
        Self { position, forward, right, up, power: T::lit(DEFAULT_POWER_W), pattern, model }
    }

    /// Half extents of the pattern rectangle on its reference plane, mm.
    pub fn half_extent(&self) -> (T, T) {
        let half = T::lit(0.5);
        match self.model {
            ProjectionModel::Orthographic { width, height } => (width * half, height * half),
            ProjectionModel::Perspective { throw_angle_deg, reference_distance } => {
                let h = reference_distance * (throw_angle_deg.to_radians() * half).tan();
                (h, h)
            }
        }
    }

    /// Area of the pattern rectangle on its reference plane, mm².
    pub fn pattern_area(&self) -> T {
        let (hu, hv) = self.half_extent();
        hu * hv * T::lit(4.0)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.power >= T::zero()) || !self.power.is_finite() {
            return Err(Error::invalid("projector.power", format!("power must be >= 0 W, got {}", self.power)));
        }
        self.pattern.validate("pattern")?;
        match self.model {
            ProjectionModel::Orthographic { width, height } => {
                if !(width > T::zero() && height > T::zero()) {
                    return Err(Error::invalid("projector.width", "orthographic extent must be positive"));
                }
            }
            ProjectionModel::Perspective { throw_angle_deg, reference_distance } => {
                if !(throw_angle_deg > T::zero() && throw_angle_deg < T::lit(180.0)) {
                    return Err(Error::invalid(
                        "projector.throw_angle",
                        format!("throw angle must lie in (0, 180) degrees, got {throw_angle_deg}"),
                    ));
                }
                if !(reference_distance > T::zero()) {
                    return Err(Error::invalid("projector.reference_distance", "must be > 0 mm"));
                }
            }
        }
        check_basis("projector", self.forward, self.right, self.up)
    }
}
